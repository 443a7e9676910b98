//! Simulate complete trajectories from each model family and thin one to
//! a visit schedule, producing the panel format the fitting side consumes.
//!
//! ```text
//! cargo run --example forward_simulation
//! ```

use ctmsm::linalg::SquareMatrix;
use ctmsm::model::{
    simulate_forward, GompertzImParams, MarkovParams, ModelParams, Trajectory, WeibullSmParams,
};
use ctmsm::panel::{panel_to_csv, thin_to_panel, DeathObservability, PanelDataset};
use rand::SeedableRng;
use rand_pcg::Pcg64;

fn describe(label: &str, y: &Trajectory) {
    print!("{label}: 1");
    for &(z, s) in &y.jumps {
        print!(" --{z:.2}--> {}", s + 1);
    }
    println!("   [{:?} at {:.2}]", y.end_kind, y.end_time);
}

fn main() -> ctmsm::Result<()> {
    let probs = SquareMatrix::from_rows(&[
        vec![0.0, 0.85, 0.15],
        vec![0.30, 0.0, 0.70],
        vec![0.0, 0.0, 0.0],
    ])?;
    let mut rng = Pcg64::seed_from_u64(3);

    let markov = ModelParams::Markov(MarkovParams::new(probs.clone(), vec![0.3, 0.14, 0.0])?);
    let weibull = ModelParams::WeibullSm(WeibullSmParams::new(
        probs.clone(),
        vec![1.4, 0.7, 1.0],
        vec![0.3, 0.14, 0.0],
    )?);
    let gompertz = ModelParams::GompertzIm(GompertzImParams::new(
        probs,
        vec![-0.69, -2.30, 0.0],
        vec![0.2, 0.2, 0.0],
    )?);

    for (label, model) in [
        ("markov     ", &markov),
        ("weibull-sm ", &weibull),
        ("gompertz-im", &gompertz),
    ] {
        for _ in 0..3 {
            let y = simulate_forward(model, 0, 60.0, &mut rng)?;
            describe(label, &y);
        }
    }

    // Thin a handful of semi-Markov trajectories to the visit schedule,
    // recording death only at the following visit.
    let schedule = [0.0, 3.0, 6.0, 12.0, 24.0, 60.0];
    let mut series = Vec::new();
    for i in 0..4 {
        let y = simulate_forward(&weibull, 0, 60.0, &mut rng)?;
        series.push(thin_to_panel(
            &y,
            &schedule,
            DeathObservability::Interval,
            (i + 1).to_string(),
        )?);
    }
    let dataset = PanelDataset::new(series, Some(3), &[2])?;
    println!("\npanel CSV after thinning:\n{}", panel_to_csv(&dataset));
    Ok(())
}
