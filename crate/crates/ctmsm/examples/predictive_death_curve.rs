//! Posterior predictive distribution of the death time: fit a model, then
//! forward-simulate from the retained parameter draws and print the
//! predictive CDF as a text curve.
//!
//! ```text
//! cargo run --example predictive_death_curve
//! ```

use ctmsm::commands::{simulate_dataset, Scenario};
use ctmsm::gibbs::{run_gibbs, ModelSpec, PriorSpec, SamplerConfig};
use ctmsm::model::ModelKind;
use ctmsm::panel::DeathObservability;
use ctmsm::predictive::{predictive_death_distribution, time_grid};
use ctmsm::rng::{substream, STREAM_PREDICTIVE};

fn main() -> ctmsm::Result<()> {
    let truth = Scenario::SmDeathKnown.truth();
    let schedule = Scenario::SmDeathKnown.schedule();
    let (data, _) = simulate_dataset(&truth, 60, &schedule, DeathObservability::Exact, 0, 55)?;

    let spec = ModelSpec::new(ModelKind::WeibullSm, 3, vec![2], &[])?;
    let mut sampler = SamplerConfig::with_iterations(1000);
    sampler.seed = 55;
    let draws = run_gibbs(&data, &spec, &PriorSpec::default(), &sampler)?;

    let grid = time_grid(90.0, 31);
    let mut rng = substream(55, &[STREAM_PREDICTIVE]);
    let curve = predictive_death_distribution(&draws.params, 0, &grid, 100, &mut rng)?;

    println!("predictive death-time distribution from the healthy state");
    println!("({} simulations across {} draws)\n", curve.simulations, draws.n_retained());
    for (i, &t) in curve.times.iter().enumerate() {
        let bar = "#".repeat((curve.cdf[i] * 50.0).round() as usize);
        println!("t={t:>5.1}  cdf={:>6.3}  {bar}", curve.cdf[i]);
    }
    Ok(())
}
