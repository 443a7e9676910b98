//! Draw continuous-time Markov paths conditioned on both endpoints, the
//! building block behind the latent-trajectory proposals.
//!
//! ```text
//! cargo run --example endpoint_bridge
//! ```

use ctmsm::bridge::{sample_conditioned_segment, sample_segment_to_absorption};
use ctmsm::linalg::{RateMatrix, SquareMatrix};
use rand::SeedableRng;
use rand_pcg::Pcg64;

fn main() -> ctmsm::Result<()> {
    let probs = SquareMatrix::from_rows(&[
        vec![0.0, 0.85, 0.15],
        vec![0.30, 0.0, 0.70],
        vec![0.0, 0.0, 0.0],
    ])?;
    let generator = RateMatrix::build(&probs, &[0.30, 0.14, 0.0])?;
    let chain = generator.uniformize()?;
    let mut rng = Pcg64::seed_from_u64(7);

    // Paths from healthy (state 1) at t=0 to ill (state 2) at t=12,
    // conditioned on both endpoints.
    println!("bridges healthy@0 -> ill@12:");
    for _ in 0..5 {
        let segment = sample_conditioned_segment(&chain, 0.0, 12.0, 0, 1, &mut rng)?;
        print!("  1");
        for &(z, s) in &segment.jumps {
            print!(" --{z:.2}--> {}", s + 1);
        }
        println!();
    }

    // Paths ending in absorption at exactly t=12: the last transient
    // state is drawn first, then a bridge into it, then the death jump.
    println!("\nbridges healthy@0 -> dead at exactly 12:");
    for _ in 0..5 {
        let segment = sample_segment_to_absorption(&chain, &generator, 0.0, 12.0, 0, 2, &mut rng)?;
        print!("  1");
        for &(z, s) in &segment.jumps {
            print!(" --{z:.2}--> {}", s + 1);
        }
        println!();
    }

    // Average number of real jumps over many draws.
    let draws = 20_000;
    let mut total = 0usize;
    for _ in 0..draws {
        total += sample_conditioned_segment(&chain, 0.0, 12.0, 0, 1, &mut rng)?.n_jumps();
    }
    println!(
        "\nmean real jumps on the healthy->ill bridge: {:.3}",
        total as f64 / draws as f64
    );
    Ok(())
}
