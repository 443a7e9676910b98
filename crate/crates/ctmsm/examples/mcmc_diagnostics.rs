//! Sampler diagnostics: effective sample sizes, acceptance rates, and the
//! per-sweep trace data that the `fit` subcommand writes to trace.csv.
//!
//! ```text
//! cargo run --example mcmc_diagnostics
//! ```

use ctmsm::commands::{simulate_dataset, Scenario};
use ctmsm::gibbs::{run_gibbs, ModelSpec, PriorSpec, SamplerConfig};
use ctmsm::model::ModelKind;
use ctmsm::panel::DeathObservability;
use ctmsm::summary::effective_sample_size;

fn main() -> ctmsm::Result<()> {
    let truth = Scenario::SmDeathKnown.truth();
    let (data, _) = simulate_dataset(
        &truth,
        60,
        &Scenario::SmDeathKnown.schedule(),
        DeathObservability::Exact,
        0,
        12,
    )?;
    let spec = ModelSpec::new(ModelKind::WeibullSm, 3, vec![2], &[])?;
    let mut sampler = SamplerConfig::with_iterations(2000);
    sampler.seed = 12;
    let draws = run_gibbs(&data, &spec, &PriorSpec::default(), &sampler)?;

    println!("retained draws: {}", draws.n_retained());
    println!(
        "mean trajectory acceptance: {:.3}",
        draws.mean_trajectory_acceptance()
    );
    for (k, name) in draws.mh_names.iter().enumerate() {
        let rate = draws.mh_accept.iter().filter(|row| row[k]).count() as f64
            / draws.n_retained() as f64;
        println!("shape update acceptance {name}: {rate:.3}");
    }

    // Latent-trajectory augmentation makes the chain autocorrelated; the
    // effective sample size quantifies how much.
    println!("\n{:>10} {:>10} {:>8}", "parameter", "ESS", "ESS/N");
    for name in &draws.names {
        let column = draws.column(name).unwrap();
        let ess = effective_sample_size(&column)?;
        println!(
            "{name:>10} {ess:>10.1} {:>8.3}",
            ess / column.len() as f64
        );
    }

    // First few rows of the per-sweep trace.
    println!("\nsweep  traj_accept  latent_jumps");
    for i in 0..5 {
        println!(
            "{:>5}  {:>11.3}  {:>12}",
            draws.sweep_indices[i], draws.trajectory_acceptance[i], draws.latent_jump_totals[i]
        );
    }
    Ok(())
}
