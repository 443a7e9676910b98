//! Posterior predictive distribution of the absorption (death) time.
//!
//! For each retained parameter draw a batch of trajectories is simulated
//! forward from the chosen initial state; the pooled absorption times give
//! the predictive mixture as an empirical CDF on a time grid and a
//! histogram density. Curves are emitted as data; plotting is external.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{simulate_forward, ModelParams};

#[derive(Clone, Debug, PartialEq)]
pub struct PredictiveCurve {
    pub times: Vec<f64>,
    pub cdf: Vec<f64>,
    pub density: Vec<f64>,
    pub simulations: usize,
}

/// Evenly spaced grid `0..=horizon` with `points` entries.
pub fn time_grid(horizon: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points)
        .map(|i| horizon * i as f64 / (points - 1) as f64)
        .collect()
}

/// Simulate the predictive death-time distribution over a time grid.
/// `sims_per_draw` trajectories are generated from every parameter draw;
/// trajectories still transient at the grid horizon contribute only to the
/// denominator.
pub fn predictive_death_distribution<R: Rng + ?Sized>(
    draws: &[ModelParams],
    initial_state: usize,
    grid: &[f64],
    sims_per_draw: usize,
    rng: &mut R,
) -> Result<PredictiveCurve> {
    if draws.is_empty() {
        return Err(Error::EmptyDraws);
    }
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) || grid[0] < 0.0 {
        return Err(Error::InvalidConfig(
            "predictive grid must be increasing and nonnegative".into(),
        ));
    }
    let n_states = draws[0].n_states();
    let has_absorbing = (0..n_states).any(|s| draws[0].is_absorbing(s));
    if !has_absorbing {
        return Err(Error::InvalidParams(
            "predictive death distribution needs an absorbing state".into(),
        ));
    }
    if sims_per_draw == 0 {
        return Err(Error::InvalidConfig("sims_per_draw must be positive".into()));
    }

    let horizon = *grid.last().expect("grid nonempty");
    let mut absorption_times = Vec::new();
    let mut total = 0usize;
    for params in draws {
        for _ in 0..sims_per_draw {
            let y = simulate_forward(params, initial_state, horizon, rng)?;
            total += 1;
            if y.end_kind.is_absorbed() {
                absorption_times.push(y.end_time);
            }
        }
    }
    absorption_times.sort_by(f64::total_cmp);

    let mut cdf = Vec::with_capacity(grid.len());
    let mut idx = 0usize;
    for &t in grid {
        while idx < absorption_times.len() && absorption_times[idx] <= t {
            idx += 1;
        }
        cdf.push(idx as f64 / total as f64);
    }
    let mut density = vec![0.0; grid.len()];
    for i in 1..grid.len() {
        let width = grid[i] - grid[i - 1];
        density[i] = (cdf[i] - cdf[i - 1]) / width;
    }
    Ok(PredictiveCurve {
        times: grid.to_vec(),
        cdf,
        density,
        simulations: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SquareMatrix;
    use crate::model::MarkovParams;
    use rand::SeedableRng;
    use rand_pcg::Pcg64;

    fn markov_point_mass() -> ModelParams {
        let probs = SquareMatrix::from_rows(&[
            vec![0.0, 0.7, 0.3],
            vec![0.4, 0.0, 0.6],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        ModelParams::Markov(MarkovParams::new(probs, vec![0.5, 0.8, 0.0]).unwrap())
    }

    #[test]
    fn point_mass_draw_matches_matrix_exponential() {
        let model = markov_point_mass();
        let generator = match &model {
            ModelParams::Markov(p) => p.rate_matrix().unwrap(),
            _ => unreachable!(),
        };
        let grid = time_grid(10.0, 21);
        let mut rng = Pcg64::seed_from_u64(1);
        let sims = 100_000;
        let curve =
            predictive_death_distribution(&[model], 0, &grid, sims, &mut rng).unwrap();
        for (i, &t) in grid.iter().enumerate() {
            let expected = generator.transition_probability(t).unwrap()[(0, 2)];
            let se = (expected * (1.0 - expected) / sims as f64).sqrt();
            assert!(
                (curve.cdf[i] - expected).abs() < 3.0 * se + 1e-9,
                "t={t}: {} vs {expected}",
                curve.cdf[i]
            );
        }
    }

    #[test]
    fn cdf_is_monotone_and_bounded() {
        let model = markov_point_mass();
        let grid = time_grid(8.0, 17);
        let mut rng = Pcg64::seed_from_u64(2);
        let curve = predictive_death_distribution(&[model], 0, &grid, 5_000, &mut rng).unwrap();
        assert_eq!(curve.cdf[0], 0.0);
        for w in curve.cdf.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert!(*curve.cdf.last().unwrap() <= 1.0);
    }

    #[test]
    fn needs_an_absorbing_state() {
        let probs = SquareMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let model = ModelParams::Markov(MarkovParams::new(probs, vec![1.0, 1.0]).unwrap());
        let grid = time_grid(5.0, 11);
        let mut rng = Pcg64::seed_from_u64(3);
        assert!(predictive_death_distribution(&[model], 0, &grid, 100, &mut rng).is_err());
    }
}
