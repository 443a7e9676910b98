//! Miniature replication study: simulate several data sets from the
//! illness-death truth, fit each, and aggregate the posterior means the
//! way the `replicate` subcommand does (which uses 20 replicates of
//! n = 100 at full length).
//!
//! ```text
//! cargo run --example replication_study
//! ```

use ctmsm::commands::{replicate_posterior_means, Scenario};
use ctmsm::rng::{substream_seed, STREAM_REPLICATE};

fn main() -> ctmsm::Result<()> {
    let scenario = Scenario::SmDeathKnown;
    let truth = [0.25, 1.4, 0.05, 0.04, 0.7, 0.10];
    let replicates = 4usize;
    let n = 40usize;
    let iterations = 800usize;

    let mut per_rep = Vec::new();
    for rep in 0..replicates {
        let seed = substream_seed(9, &[STREAM_REPLICATE, rep as u64]);
        let means = replicate_posterior_means(scenario, n, iterations, seed)?;
        println!(
            "replicate {rep}: {}",
            means
                .iter()
                .map(|m| format!("{m:.3}"))
                .collect::<Vec<_>>()
                .join("  ")
        );
        per_rep.push(means);
    }

    println!("\n{:>10} {:>8} {:>8}", "parameter", "truth", "mean");
    for (j, name) in scenario.reported().iter().enumerate() {
        let mean = per_rep.iter().map(|r| r[j]).sum::<f64>() / replicates as f64;
        println!("{name:>10} {:>8.3} {mean:>8.3}", truth[j]);
    }
    println!("\n(this is a toy run; see `ctmsm replicate` for the study-size harness)");
    Ok(())
}
