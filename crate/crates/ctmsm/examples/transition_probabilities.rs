//! Build a generator for an illness-death process and evaluate its
//! transition probabilities over a range of horizons.
//!
//! ```text
//! cargo run --example transition_probabilities
//! ```

use ctmsm::linalg::{RateMatrix, SquareMatrix};

fn main() -> ctmsm::Result<()> {
    // Healthy (1) <-> ill (2), both may die (3). Embedded transition
    // probabilities have zero diagonals; exit rates are per unit time,
    // with the absorbing state flagged by a zero exit rate.
    let probs = SquareMatrix::from_rows(&[
        vec![0.0, 0.85, 0.15],
        vec![0.30, 0.0, 0.70],
        vec![0.0, 0.0, 0.0],
    ])?;
    let generator = RateMatrix::build(&probs, &[0.30, 0.14, 0.0])?;

    println!("generator (rates per month):");
    for r in 0..generator.size() {
        let row: Vec<String> = (0..generator.size())
            .map(|s| format!("{:+.4}", generator.rate(r, s)))
            .collect();
        println!("  [{}]", row.join(", "));
    }

    let chain = generator.uniformize()?;
    println!("\ndominating rate mu = {}", chain.mu());

    println!("\nP(state at t | healthy at 0):");
    println!("{:>8} {:>10} {:>10} {:>10}", "t", "healthy", "ill", "dead");
    for t in [1.0, 6.0, 12.0, 24.0, 60.0] {
        let p = chain.transition_probability(t)?;
        println!(
            "{t:>8} {:>10.4} {:>10.4} {:>10.4}",
            p[(0, 0)],
            p[(0, 1)],
            p[(0, 2)]
        );
        let row_sum: f64 = p.row(0).iter().sum();
        assert!((row_sum - 1.0).abs() < 1e-10);
    }
    Ok(())
}
