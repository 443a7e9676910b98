//! Implementations of the command-line operations: data simulation, model
//! fitting, re-summarizing stored draws, and the replication harness.
//! The `ctmsm` binary is a thin argument parser over these functions.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::gibbs::{run_gibbs, ModelSpec, PosteriorDraws, SamplerConfig};
use crate::model::{simulate_forward, ModelKind, ModelParams, Trajectory};
use crate::panel::{
    format_number, load_panel, panel_to_csv, thin_to_panel, DeathObservability, PanelDataset,
    PanelSeries,
};
use crate::predictive::{predictive_death_distribution, time_grid};
use crate::rng::{substream, substream_seed, STREAM_PREDICTIVE, STREAM_REPLICATE, STREAM_SIMULATE};
use crate::summary::{effective_sample_size, sample_sd, summarize_columns};

/// Options shared by every subcommand.
#[derive(Clone, Debug)]
pub struct CommandOpts {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub quiet: bool,
}

impl CommandOpts {
    fn resolve_seed(&self, config_seed: u64) -> u64 {
        self.seed.unwrap_or(config_seed)
    }
}

/// Run `f` inside a dedicated thread pool when more than one thread was
/// requested; otherwise run it inline.
fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(t) if t > 1 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        _ => Ok(f()),
    }
}

/// Simulate `n` panel series from a true model by forward simulation and
/// schedule thinning. Returns the dataset and the underlying complete
/// trajectories.
pub fn simulate_dataset(
    truth: &ModelParams,
    n: usize,
    schedule: &[f64],
    death: DeathObservability,
    initial_state: usize,
    seed: u64,
) -> Result<(PanelDataset, Vec<Trajectory>)> {
    let horizon = *schedule
        .last()
        .ok_or_else(|| Error::InvalidConfig("empty schedule".into()))?;
    let n_states = truth.n_states();
    let absorbing: Vec<usize> = (0..n_states).filter(|&s| truth.is_absorbing(s)).collect();
    let mut series = Vec::with_capacity(n);
    let mut trajectories = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = substream(seed, &[STREAM_SIMULATE, i as u64]);
        let y = simulate_forward(truth, initial_state, horizon, &mut rng)?;
        series.push(thin_to_panel(&y, schedule, death, (i + 1).to_string())?);
        trajectories.push(y);
    }
    let dataset = PanelDataset::new(series, Some(n_states), &absorbing)?;
    Ok((dataset, trajectories))
}

#[derive(Clone, Debug)]
pub struct SimulateOutputs {
    pub panel_path: PathBuf,
    pub trajectories_path: PathBuf,
    pub report_path: PathBuf,
}

/// `simulate` subcommand: write the panel CSV, a sidecar with the true
/// trajectories, and a short report.
pub fn simulate_command(config: &RunConfig, opts: &CommandOpts) -> Result<SimulateOutputs> {
    let sim = config
        .simulate
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("config has no [simulate]/[truth] sections".into()))?;
    let seed = opts.resolve_seed(config.sampler.seed);
    std::fs::create_dir_all(&opts.out_dir)?;

    let (dataset, trajectories) = simulate_dataset(
        &sim.truth,
        sim.n,
        &sim.schedule,
        sim.death,
        sim.initial_state,
        seed,
    )?;

    let panel_path = opts.out_dir.join("panel.csv");
    std::fs::write(&panel_path, panel_to_csv(&dataset))?;

    let mut sidecar = String::from("id,time,state,event\n");
    for (i, y) in trajectories.iter().enumerate() {
        let id = i + 1;
        let _ = writeln!(
            sidecar,
            "{id},{},{},start",
            format_number(0.0),
            y.initial_state + 1
        );
        for &(z, s) in &y.jumps {
            let _ = writeln!(sidecar, "{id},{},{},jump", format_number(z), s + 1);
        }
        if !y.end_kind.is_absorbed() {
            let _ = writeln!(
                sidecar,
                "{id},{},{},censor",
                format_number(y.end_time),
                y.last_state() + 1
            );
        }
    }
    let trajectories_path = opts.out_dir.join("trajectories.csv");
    std::fs::write(&trajectories_path, sidecar)?;

    let mut report = String::new();
    let _ = writeln!(report, "command: simulate");
    let _ = writeln!(report, "model: {}", config.kind.as_str());
    let _ = writeln!(report, "individuals: {}", sim.n);
    let _ = writeln!(report, "seed: {seed}");
    let _ = writeln!(
        report,
        "schedule: {}",
        sim.schedule
            .iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join(",")
    );
    let _ = writeln!(
        report,
        "death: {}",
        match sim.death {
            DeathObservability::Exact => "exact",
            DeathObservability::Interval => "interval",
        }
    );
    for note in &config.notes {
        let _ = writeln!(report, "note: {note}");
    }
    let report_path = opts.out_dir.join("run_report.txt");
    std::fs::write(&report_path, report)?;

    if !opts.quiet {
        println!(
            "simulated {} series -> {}",
            dataset.n_individuals(),
            panel_path.display()
        );
    }
    Ok(SimulateOutputs {
        panel_path,
        trajectories_path,
        report_path,
    })
}

/// Combine the config's model declaration with what the data shows.
pub fn resolve_spec(config: &RunConfig, data: &PanelDataset) -> Result<ModelSpec> {
    let n_states = config.n_states.unwrap_or(0).max(data.n_states);
    let mut absorbing = config.absorbing.clone();
    for &a in &data.absorbing_states {
        if !absorbing.contains(&a) {
            absorbing.push(a);
        }
    }
    absorbing.sort_unstable();
    ModelSpec::new(config.kind, n_states, absorbing, &config.forbidden)
}

#[derive(Clone, Debug)]
pub struct FitOutputs {
    pub draws_path: PathBuf,
    pub summary_path: PathBuf,
    pub trace_path: PathBuf,
    pub predictive_path: Option<PathBuf>,
    pub report_path: PathBuf,
}

fn draws_to_csv(draws: &PosteriorDraws) -> String {
    let mut out = String::from("iteration");
    for name in &draws.names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (row, sweep) in draws.rows.iter().zip(draws.sweep_indices.iter()) {
        let _ = write!(out, "{sweep}");
        for v in row {
            out.push(',');
            out.push_str(&format_number(*v));
        }
        out.push('\n');
    }
    out
}

fn trace_to_csv(draws: &PosteriorDraws) -> String {
    let mut out = String::from("iteration,trajectory_acceptance,latent_jumps,proposal_failures\n");
    for (((sweep, acc), jumps), failures) in draws
        .sweep_indices
        .iter()
        .zip(draws.trajectory_acceptance.iter())
        .zip(draws.latent_jump_totals.iter())
        .zip(draws.proposal_failures.iter())
    {
        let _ = writeln!(out, "{sweep},{},{jumps},{failures}", format_number(*acc));
    }
    out
}

fn summary_to_csv(names: &[String], rows: &[Vec<f64>]) -> Result<String> {
    let summaries = summarize_columns(names, rows)?;
    let mut out = String::from("parameter,mean,sd,q025,q975\n");
    for s in summaries {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.name,
            format_number(s.mean),
            format_number(s.sd),
            format_number(s.q025),
            format_number(s.q975)
        );
    }
    Ok(out)
}

/// `fit` subcommand: run the sampler on a panel file and write draws,
/// summaries, traces, the predictive curve, and a run report.
pub fn fit_command(
    data_path: &Path,
    config: &RunConfig,
    opts: &CommandOpts,
) -> Result<FitOutputs> {
    let start = Instant::now();
    let data = load_panel(data_path)?;
    let spec = resolve_spec(config, &data)?;
    let seed = opts.resolve_seed(config.sampler.seed);

    let mut sampler = config.sampler.clone();
    sampler.seed = seed;
    match opts.threads {
        Some(t) if t > 1 => sampler.parallel_individuals = true,
        Some(_) => sampler.parallel_individuals = false,
        None => {}
    }

    std::fs::create_dir_all(&opts.out_dir)?;
    let draws = with_pool(opts.threads, || {
        run_gibbs(&data, &spec, &config.prior, &sampler)
    })??;

    let draws_path = opts.out_dir.join("draws.csv");
    std::fs::write(&draws_path, draws_to_csv(&draws))?;
    let trace_path = opts.out_dir.join("trace.csv");
    std::fs::write(&trace_path, trace_to_csv(&draws))?;
    let summary_path = opts.out_dir.join("summary.csv");
    std::fs::write(&summary_path, summary_to_csv(&draws.names, &draws.rows)?)?;

    // Predictive death-time curve, when the model has an absorbing state.
    let predictive_path = if config.predictive.enabled && !spec.absorbing.is_empty() {
        let horizon = config.predictive.horizon.unwrap_or_else(|| {
            1.25 * data
                .individuals
                .iter()
                .map(PanelSeries::horizon)
                .fold(0.0, f64::max)
        });
        let grid = time_grid(horizon, config.predictive.grid_points);
        let sims_per_draw =
            config.predictive.simulations.div_ceil(draws.params.len());
        let mut rng = substream(seed, &[STREAM_PREDICTIVE]);
        let curve = predictive_death_distribution(
            &draws.params,
            config.predictive.initial_state,
            &grid,
            sims_per_draw,
            &mut rng,
        )?;
        let mut out = String::from("time,cdf,density\n");
        for i in 0..curve.times.len() {
            let _ = writeln!(
                out,
                "{},{},{}",
                format_number(curve.times[i]),
                format_number(curve.cdf[i]),
                format_number(curve.density[i])
            );
        }
        let path = opts.out_dir.join("predictive.csv");
        std::fs::write(&path, out)?;
        Some(path)
    } else {
        None
    };

    let wall = start.elapsed().as_secs_f64();
    let mut report = String::new();
    let _ = writeln!(report, "command: fit");
    let _ = writeln!(report, "data: {}", data_path.display());
    let _ = writeln!(report, "model: {}", spec.kind.as_str());
    let _ = writeln!(report, "states: {}", spec.n_states);
    let _ = writeln!(
        report,
        "absorbing: {}",
        spec.absorbing
            .iter()
            .map(|a| (a + 1).to_string())
            .collect::<Vec<_>>()
            .join(",")
    );
    let _ = writeln!(report, "individuals: {}", data.n_individuals());
    let _ = writeln!(report, "iterations: {}", sampler.iterations);
    let _ = writeln!(report, "burn_in: {}", sampler.burn_in);
    let _ = writeln!(report, "thinning: {}", sampler.thinning);
    let _ = writeln!(report, "seed: {seed}");
    let _ = writeln!(report, "retained_draws: {}", draws.n_retained());
    let _ = writeln!(report, "wall_time_s: {wall:.3}");
    let _ = writeln!(
        report,
        "mean_trajectory_acceptance: {:.4}",
        draws.mean_trajectory_acceptance()
    );
    let _ = writeln!(
        report,
        "total_proposal_failures: {}",
        draws.proposal_failures.iter().sum::<u64>()
    );
    for (k, name) in draws.mh_names.iter().enumerate() {
        let rate = draws.mh_accept.iter().filter(|flags| flags[k]).count() as f64
            / draws.n_retained().max(1) as f64;
        let _ = writeln!(report, "acceptance_{name}: {rate:.4}");
    }
    for (j, name) in draws.names.iter().enumerate() {
        let column: Vec<f64> = draws.rows.iter().map(|row| row[j]).collect();
        match effective_sample_size(&column) {
            Ok(ess) => {
                let _ = writeln!(report, "ess_{name}: {ess:.1}");
            }
            Err(_) => {
                let _ = writeln!(report, "ess_{name}: insufficient draws");
            }
        }
    }
    for note in &config.notes {
        let _ = writeln!(report, "note: {note}");
    }
    let report_path = opts.out_dir.join("run_report.txt");
    std::fs::write(&report_path, report)?;

    if !opts.quiet {
        println!(
            "fit: {} retained draws in {wall:.1}s -> {}",
            draws.n_retained(),
            opts.out_dir.display()
        );
    }
    Ok(FitOutputs {
        draws_path,
        summary_path,
        trace_path,
        predictive_path,
        report_path,
    })
}

/// Parse a draws CSV back into names and rows.
pub fn read_draws_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidConfig("empty draws file".into()))?;
    let mut names: Vec<String> = header.split(',').map(str::to_string).collect();
    if names.first().map(String::as_str) != Some("iteration") {
        return Err(Error::InvalidConfig(
            "draws file must start with an `iteration` column".into(),
        ));
    }
    names.remove(0);
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != names.len() + 1 {
            return Err(Error::InvalidConfig(format!(
                "draws row {} has {} fields, expected {}",
                idx + 2,
                fields.len(),
                names.len() + 1
            )));
        }
        let row = fields[1..]
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    Error::InvalidConfig(format!("draws row {}: bad number `{f}`", idx + 2))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((names, rows))
}

/// `summarize` subcommand: recompute the summary table from a stored
/// draws CSV.
pub fn summarize_command(draws_path: &Path, opts: &CommandOpts) -> Result<PathBuf> {
    let (names, rows) = read_draws_csv(draws_path)?;
    std::fs::create_dir_all(&opts.out_dir)?;
    let path = opts.out_dir.join("summary.csv");
    std::fs::write(&path, summary_to_csv(&names, &rows)?)?;
    if !opts.quiet {
        println!("summary -> {}", path.display());
    }
    Ok(path)
}

/// Built-in simulation-study scenarios.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    SmDeathUnknown,
    SmDeathKnown,
    Im,
}

impl std::str::FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sm-death-unknown" => Ok(Scenario::SmDeathUnknown),
            "sm-death-known" => Ok(Scenario::SmDeathKnown),
            "im" => Ok(Scenario::Im),
            other => Err(Error::InvalidConfig(format!(
                "unknown scenario `{other}` (expected sm-death-unknown, sm-death-known or im)"
            ))),
        }
    }
}

impl Scenario {
    pub fn kind(self) -> ModelKind {
        match self {
            Scenario::SmDeathUnknown | Scenario::SmDeathKnown => ModelKind::WeibullSm,
            Scenario::Im => ModelKind::GompertzIm,
        }
    }

    pub fn death(self) -> DeathObservability {
        match self {
            Scenario::SmDeathUnknown => DeathObservability::Interval,
            Scenario::SmDeathKnown | Scenario::Im => DeathObservability::Exact,
        }
    }

    pub fn schedule(self) -> Vec<f64> {
        match self {
            Scenario::SmDeathUnknown | Scenario::SmDeathKnown => {
                vec![0.0, 3.0, 6.0, 12.0, 24.0, 60.0]
            }
            Scenario::Im => vec![0.0, 1.0, 2.0, 3.0, 4.5, 6.0, 9.0, 12.0, 20.0],
        }
    }

    pub fn truth(self) -> ModelParams {
        use crate::linalg::SquareMatrix;
        match self {
            Scenario::SmDeathUnknown | Scenario::SmDeathKnown => {
                let probs = SquareMatrix::from_rows(&[
                    vec![0.0, 0.25 / 0.30, 0.05 / 0.30],
                    vec![0.04 / 0.14, 0.0, 0.10 / 0.14],
                    vec![0.0, 0.0, 0.0],
                ])
                .expect("static");
                ModelParams::WeibullSm(
                    crate::model::WeibullSmParams::new(
                        probs,
                        vec![1.4, 0.7, 1.0],
                        vec![0.30, 0.14, 0.0],
                    )
                    .expect("static"),
                )
            }
            Scenario::Im => {
                let probs = SquareMatrix::from_rows(&[
                    vec![0.0, 0.8, 0.2],
                    vec![0.2, 0.0, 0.8],
                    vec![0.0, 0.0, 0.0],
                ])
                .expect("static");
                ModelParams::GompertzIm(
                    crate::model::GompertzImParams::new(
                        probs,
                        vec![-0.69, -2.30, 0.0],
                        vec![0.2, 0.2, 0.0],
                    )
                    .expect("static"),
                )
            }
        }
    }

    /// Parameters reported by the study table for this scenario.
    pub fn reported(self) -> Vec<&'static str> {
        match self {
            Scenario::SmDeathUnknown | Scenario::SmDeathKnown => {
                vec!["gamma_12", "alpha_1", "gamma_13", "gamma_21", "alpha_2", "gamma_23"]
            }
            Scenario::Im => vec![
                "beta0_1", "beta1_1", "beta0_2", "beta1_2", "p_12", "p_13", "p_21", "p_23",
            ],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::SmDeathUnknown => "sm-death-unknown",
            Scenario::SmDeathKnown => "sm-death-known",
            Scenario::Im => "im",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReplicateReport {
    pub scenario: Scenario,
    pub n: usize,
    pub replicates: usize,
    pub parameters: Vec<String>,
    /// Across-replicate means of the posterior means.
    pub means: Vec<f64>,
    /// Across-replicate standard deviations; `None` for a single replicate.
    pub sds: Vec<Option<f64>>,
    pub table_path: PathBuf,
}

/// Posterior means of the scenario's reported parameters for one
/// simulated replicate.
pub fn replicate_posterior_means(
    scenario: Scenario,
    n: usize,
    iterations: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let truth = scenario.truth();
    let (data, _) = simulate_dataset(&truth, n, &scenario.schedule(), scenario.death(), 0, seed)?;
    let spec = ModelSpec::new(scenario.kind(), truth.n_states(), vec![2], &[])?;
    let mut sampler = SamplerConfig::with_iterations(iterations);
    sampler.seed = seed;
    let draws = run_gibbs(&data, &spec, &crate::gibbs::PriorSpec::default(), &sampler)?;
    scenario
        .reported()
        .iter()
        .map(|name| {
            draws
                .posterior_mean(name)
                .ok_or_else(|| Error::InvalidConfig(format!("missing parameter {name}")))
        })
        .collect()
}

/// `replicate` subcommand: simulate-and-fit `replicates` data sets and
/// aggregate the posterior means as a study table.
pub fn replicate_command(
    scenario: Scenario,
    n: usize,
    replicates: usize,
    iterations: usize,
    seed: u64,
    opts: &CommandOpts,
) -> Result<ReplicateReport> {
    if replicates == 0 {
        return Err(Error::InvalidConfig("need at least one replicate".into()));
    }
    let rep_seeds: Vec<u64> = (0..replicates)
        .map(|r| substream_seed(seed, &[STREAM_REPLICATE, r as u64]))
        .collect();
    let parallel = matches!(opts.threads, Some(t) if t > 1);
    let per_rep: Vec<Vec<f64>> = with_pool(opts.threads, || {
        if parallel {
            rep_seeds
                .par_iter()
                .map(|&s| replicate_posterior_means(scenario, n, iterations, s))
                .collect::<Result<Vec<_>>>()
        } else {
            rep_seeds
                .iter()
                .map(|&s| replicate_posterior_means(scenario, n, iterations, s))
                .collect::<Result<Vec<_>>>()
        }
    })??;

    let parameters: Vec<String> = scenario.reported().iter().map(|s| s.to_string()).collect();
    let mut means = Vec::with_capacity(parameters.len());
    let mut sds = Vec::with_capacity(parameters.len());
    for j in 0..parameters.len() {
        let column: Vec<f64> = per_rep.iter().map(|row| row[j]).collect();
        means.push(column.iter().sum::<f64>() / column.len() as f64);
        sds.push(if replicates > 1 {
            Some(sample_sd(&column))
        } else {
            None
        });
    }

    std::fs::create_dir_all(&opts.out_dir)?;
    let mut out = String::from("parameter,mean,sd\n");
    for j in 0..parameters.len() {
        let sd = sds[j].map(format_number).unwrap_or_default();
        let _ = writeln!(out, "{},{},{sd}", parameters[j], format_number(means[j]));
    }
    let table_path = opts.out_dir.join("replicate.csv");
    std::fs::write(&table_path, out)?;

    if !opts.quiet {
        println!(
            "scenario {} (n={n}, {replicates} replicates, {iterations} iterations)",
            scenario.name()
        );
        for j in 0..parameters.len() {
            match sds[j] {
                Some(sd) => println!("  {:10} {:.3} ({:.3})", parameters[j], means[j], sd),
                None => println!("  {:10} {:.3}", parameters[j], means[j]),
            }
        }
    }
    Ok(ReplicateReport {
        scenario,
        n,
        replicates,
        parameters,
        means,
        sds,
        table_path,
    })
}
