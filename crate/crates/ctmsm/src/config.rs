//! Run configuration: a sectioned key-value plaintext format.
//!
//! ```text
//! [model]
//! kind = weibull-sm          # markov | weibull-sm | gompertz-im
//! states = 3
//! absorbing = 3              # 1-based, comma separated
//! forbidden = 1->3           # structural zeros, comma separated
//!
//! [sampler]
//! iterations = 5000          # burn_in defaults to 20% of iterations
//! seed = 1
//!
//! [simulate]
//! n = 100
//! schedule = 0,3,6,12,24,60
//! death = interval           # exact | interval
//!
//! [truth]
//! gamma_12 = 0.25            # transition-rate form, converted internally
//! alpha_1 = 1.4
//! ...
//! ```
//!
//! Every field has a default except the model kind, so a minimal fit
//! config is the `[model]` section alone. Unknown sections or keys are
//! errors. The `[truth]` section accepts either the canonical
//! parametrization (`p_rs`, `gamma_r`, `alpha_r` / `beta0_r`, `beta1_r`)
//! or, for rate-based models, per-transition rates `gamma_rs` which are
//! converted to `(P, gamma)` with the conversion echoed to the run report.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::gibbs::{PriorSpec, SamplerConfig, TStarPolicy};
use crate::linalg::SquareMatrix;
use crate::model::{GompertzImParams, MarkovParams, ModelKind, ModelParams, WeibullSmParams};
use crate::panel::DeathObservability;

#[derive(Clone, Debug, PartialEq)]
pub struct PredictiveConfig {
    pub enabled: bool,
    /// 0-based initial state of the predictive simulation.
    pub initial_state: usize,
    pub grid_points: usize,
    /// Grid horizon; defaults to 1.25 times the longest follow-up.
    pub horizon: Option<f64>,
    /// Total forward simulations, split across retained draws.
    pub simulations: usize,
}

impl Default for PredictiveConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            initial_state: 0,
            grid_points: 41,
            horizon: None,
            simulations: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulateConfig {
    pub n: usize,
    pub schedule: Vec<f64>,
    pub death: DeathObservability,
    /// 0-based initial state for every simulated individual.
    pub initial_state: usize,
    pub truth: ModelParams,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub kind: ModelKind,
    pub n_states: Option<usize>,
    /// 0-based absorbing states declared in the config.
    pub absorbing: Vec<usize>,
    /// 0-based structural zeros of the transition matrix.
    pub forbidden: Vec<(usize, usize)>,
    pub prior: PriorSpec,
    pub sampler: SamplerConfig,
    pub predictive: PredictiveConfig,
    pub simulate: Option<SimulateConfig>,
    /// Human-readable notes about parametrization conversions, echoed to
    /// the run report.
    pub notes: Vec<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw = RawConfig::parse(text)?;
        build_config(raw)
    }
}

/// One parsed `key = value` line.
#[derive(Clone, Debug)]
struct RawEntry {
    section: String,
    key: String,
    value: String,
    line: usize,
}

struct RawConfig {
    entries: Vec<RawEntry>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut section = String::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| {
                    Error::InvalidConfig(format!("line {line}: malformed section header"))
                })?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {line}: expected `key = value`"))
            })?;
            if section.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "line {line}: key outside any [section]"
                )));
            }
            entries.push(RawEntry {
                section: section.clone(),
                key: key.trim().to_string(),
                value: value.trim().to_string(),
                line,
            });
        }
        Ok(Self { entries })
    }

    fn section(&self, name: &str) -> Vec<&RawEntry> {
        self.entries.iter().filter(|e| e.section == name).collect()
    }

    fn sections(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for e in &self.entries {
            if !seen.contains(&e.section.as_str()) {
                seen.push(e.section.as_str());
            }
        }
        seen
    }
}

fn parse_f64(entry: &RawEntry) -> Result<f64> {
    entry.value.parse().map_err(|_| {
        Error::InvalidConfig(format!(
            "line {}: cannot parse `{}` as a number",
            entry.line, entry.value
        ))
    })
}

fn parse_usize(entry: &RawEntry) -> Result<usize> {
    entry.value.parse().map_err(|_| {
        Error::InvalidConfig(format!(
            "line {}: cannot parse `{}` as an integer",
            entry.line, entry.value
        ))
    })
}

fn parse_bool(entry: &RawEntry) -> Result<bool> {
    match entry.value.as_str() {
        "true" | "yes" | "on" => Ok(true),
        "false" | "no" | "off" => Ok(false),
        other => Err(Error::InvalidConfig(format!(
            "line {}: cannot parse `{other}` as a boolean",
            entry.line
        ))),
    }
}

/// 1-based state index from config text.
fn parse_state(token: &str, line: usize) -> Result<usize> {
    let v: usize = token.trim().parse().map_err(|_| {
        Error::InvalidConfig(format!("line {line}: `{token}` is not a state label"))
    })?;
    if v == 0 {
        return Err(Error::InvalidConfig(format!(
            "line {line}: state labels are 1-based"
        )));
    }
    Ok(v - 1)
}

/// Indices encoded in a parameter key like `gamma_12`, `p_1_2`,
/// `alpha_1`, `beta0_2`.
fn key_indices(rest: &str) -> Option<Vec<usize>> {
    let parts: Vec<&str> = rest.split('_').collect();
    let mut out = Vec::new();
    if parts.len() == 1 {
        let digits = parts[0];
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        if digits.len() == 1 {
            out.push(digits.parse::<usize>().ok()?);
        } else if digits.len() == 2 {
            for c in digits.chars() {
                out.push(c.to_digit(10)? as usize);
            }
        } else {
            return None;
        }
    } else {
        for p in parts {
            if p.is_empty() || !p.chars().all(|c| c.is_ascii_digit()) {
                return None;
            }
            out.push(p.parse().ok()?);
        }
    }
    if out.contains(&0) {
        return None;
    }
    Some(out.into_iter().map(|v| v - 1).collect())
}

#[derive(Default)]
struct TruthEntries {
    pair_rates: BTreeMap<(usize, usize), f64>, // gamma_rs
    state_rates: BTreeMap<usize, f64>,         // gamma_r
    probs: BTreeMap<(usize, usize), f64>,      // p_rs
    alphas: BTreeMap<usize, f64>,
    beta0: BTreeMap<usize, f64>,
    beta1: BTreeMap<usize, f64>,
}

fn collect_truth(entries: &[&RawEntry]) -> Result<TruthEntries> {
    let mut truth = TruthEntries::default();
    for e in entries {
        let (prefix, rest) = e.key.split_once('_').ok_or_else(|| {
            Error::InvalidConfig(format!("line {}: unknown truth key `{}`", e.line, e.key))
        })?;
        let idx = key_indices(rest).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "line {}: cannot read state indices in `{}`",
                e.line, e.key
            ))
        })?;
        let value = parse_f64(e)?;
        match (prefix, idx.len()) {
            ("gamma", 2) => {
                truth.pair_rates.insert((idx[0], idx[1]), value);
            }
            ("gamma", 1) => {
                truth.state_rates.insert(idx[0], value);
            }
            ("p", 2) => {
                truth.probs.insert((idx[0], idx[1]), value);
            }
            ("alpha", 1) => {
                truth.alphas.insert(idx[0], value);
            }
            ("beta0", 1) => {
                truth.beta0.insert(idx[0], value);
            }
            ("beta1", 1) => {
                truth.beta1.insert(idx[0], value);
            }
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "line {}: unknown truth key `{}`",
                    e.line, e.key
                )))
            }
        }
    }
    Ok(truth)
}

/// Assemble true model parameters from the `[truth]` section.
fn build_truth(
    kind: ModelKind,
    truth: &TruthEntries,
    n_states: usize,
    notes: &mut Vec<String>,
) -> Result<ModelParams> {
    let max_index = truth
        .pair_rates
        .keys()
        .flat_map(|&(r, s)| [r, s])
        .chain(truth.probs.keys().flat_map(|&(r, s)| [r, s]))
        .chain(truth.state_rates.keys().copied())
        .chain(truth.alphas.keys().copied())
        .chain(truth.beta0.keys().copied())
        .chain(truth.beta1.keys().copied())
        .max()
        .map_or(0, |m| m + 1);
    let n = n_states.max(max_index);
    if n < 2 {
        return Err(Error::InvalidConfig("truth section is empty".into()));
    }

    // Either explicit embedded probabilities, or per-transition rates that
    // convert to (P, gamma) with gamma_r the row sum.
    let (probs, gamma_from_rates) = if !truth.pair_rates.is_empty() {
        if !truth.probs.is_empty() || !truth.state_rates.is_empty() {
            return Err(Error::InvalidConfig(
                "truth: give either gamma_rs rates or p_rs with gamma_r, not both".into(),
            ));
        }
        let mut probs = SquareMatrix::zeros(n);
        let mut gamma = vec![0.0; n];
        for (&(r, _), &v) in &truth.pair_rates {
            if v < 0.0 {
                return Err(Error::InvalidConfig("truth: negative rate".into()));
            }
            gamma[r] += v;
        }
        for (&(r, s), &v) in &truth.pair_rates {
            if gamma[r] > 0.0 {
                probs[(r, s)] = v / gamma[r];
            }
        }
        for (r, g) in gamma.iter().enumerate() {
            if *g > 0.0 {
                let row: Vec<String> = (0..n)
                    .filter(|&s| probs[(r, s)] > 0.0)
                    .map(|s| format!("p_{}{} = {:.6}", r + 1, s + 1, probs[(r, s)]))
                    .collect();
                notes.push(format!(
                    "truth conversion: state {} exit rate {:.6}; {}",
                    r + 1,
                    g,
                    row.join(", ")
                ));
            }
        }
        (probs, Some(gamma))
    } else {
        let mut probs = SquareMatrix::zeros(n);
        for (&(r, s), &v) in &truth.probs {
            probs[(r, s)] = v;
        }
        (probs, None)
    };

    let state_vec = |map: &BTreeMap<usize, f64>, default: f64| -> Vec<f64> {
        (0..n).map(|r| map.get(&r).copied().unwrap_or(default)).collect()
    };

    match kind {
        ModelKind::Markov => {
            let gamma = gamma_from_rates
                .unwrap_or_else(|| state_vec(&truth.state_rates, 0.0));
            Ok(ModelParams::Markov(MarkovParams::new(probs, gamma)?))
        }
        ModelKind::WeibullSm => {
            let gamma = gamma_from_rates
                .unwrap_or_else(|| state_vec(&truth.state_rates, 0.0));
            let alpha = state_vec(&truth.alphas, 1.0);
            Ok(ModelParams::WeibullSm(WeibullSmParams::new(
                probs, alpha, gamma,
            )?))
        }
        ModelKind::GompertzIm => {
            if gamma_from_rates.is_some() {
                return Err(Error::InvalidConfig(
                    "truth: the inhomogeneous model takes beta0/beta1 and p_rs".into(),
                ));
            }
            let beta0 = state_vec(&truth.beta0, 0.0);
            let beta1 = state_vec(&truth.beta1, 0.0);
            Ok(ModelParams::GompertzIm(GompertzImParams::new(
                probs, beta0, beta1,
            )?))
        }
    }
}

fn build_config(raw: RawConfig) -> Result<RunConfig> {
    const KNOWN_SECTIONS: [&str; 6] =
        ["model", "prior", "sampler", "predictive", "simulate", "truth"];
    for s in raw.sections() {
        if !KNOWN_SECTIONS.contains(&s) {
            return Err(Error::InvalidConfig(format!("unknown section [{s}]")));
        }
    }

    // [model]
    let mut kind: Option<ModelKind> = None;
    let mut n_states = None;
    let mut absorbing = Vec::new();
    let mut forbidden = Vec::new();
    for e in raw.section("model") {
        match e.key.as_str() {
            "kind" => kind = Some(e.value.parse()?),
            "states" => n_states = Some(parse_usize(e)?),
            "absorbing" => {
                for token in e.value.split(',').filter(|t| !t.trim().is_empty()) {
                    absorbing.push(parse_state(token, e.line)?);
                }
            }
            "forbidden" => {
                for token in e.value.split(',').filter(|t| !t.trim().is_empty()) {
                    let (from, to) = token.split_once("->").ok_or_else(|| {
                        Error::InvalidConfig(format!(
                            "line {}: forbidden entries look like `1->3`",
                            e.line
                        ))
                    })?;
                    forbidden.push((parse_state(from, e.line)?, parse_state(to, e.line)?));
                }
            }
            other => {
                return Err(Error::InvalidConfig(format!(
                    "line {}: unknown [model] key `{other}`",
                    e.line
                )))
            }
        }
    }
    let kind = kind.ok_or_else(|| Error::InvalidConfig("missing [model] kind".into()))?;

    // [prior]
    let mut prior = PriorSpec::default();
    for e in raw.section("prior") {
        match e.key.as_str() {
            "dirichlet_concentration" => prior.dirichlet_concentration = parse_f64(e)?,
            "eta_shape" => prior.eta_shape = parse_f64(e)?,
            "eta_rate" => prior.eta_rate = parse_f64(e)?,
            "log_alpha_sd" => prior.log_alpha_sd = parse_f64(e)?,
            "beta_sd" => prior.beta_sd = parse_f64(e)?,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "line {}: unknown [prior] key `{other}`",
                    e.line
                )))
            }
        }
    }
    prior.validate()?;

    // [sampler]
    let mut iterations = 5000usize;
    let mut burn_in: Option<usize> = None;
    let mut sampler = SamplerConfig::with_iterations(iterations);
    for e in raw.section("sampler") {
        match e.key.as_str() {
            "iterations" => iterations = parse_usize(e)?,
            "burn_in" => burn_in = Some(parse_usize(e)?),
            "thinning" => sampler.thinning = parse_usize(e)?,
            "seed" => {
                sampler.seed = e.value.parse().map_err(|_| {
                    Error::InvalidConfig(format!("line {}: bad seed", e.line))
                })?
            }
            "rw_step_log_alpha" => sampler.rw_step_log_alpha = parse_f64(e)?,
            "rw_step_beta" => sampler.rw_step_beta = parse_f64(e)?,
            "adapt" => sampler.adapt_during_burn_in = parse_bool(e)?,
            "parallel" => sampler.parallel_individuals = parse_bool(e)?,
            "attempts_per_sweep" => sampler.trajectory_attempts_per_sweep = parse_usize(e)?,
            "piecewise_proposal" => sampler.piecewise_proposal = parse_bool(e)?,
            "t_star" => {
                sampler.t_star = if e.value == "midpoint" {
                    TStarPolicy::Midpoint
                } else {
                    TStarPolicy::Fixed(parse_f64(e)?)
                }
            }
            other => {
                return Err(Error::InvalidConfig(format!(
                    "line {}: unknown [sampler] key `{other}`",
                    e.line
                )))
            }
        }
    }
    sampler.iterations = iterations;
    sampler.burn_in = burn_in.unwrap_or(iterations / 5);
    sampler.validate()?;

    // [predictive]
    let mut predictive = PredictiveConfig::default();
    for e in raw.section("predictive") {
        match e.key.as_str() {
            "enabled" => predictive.enabled = parse_bool(e)?,
            "initial_state" => predictive.initial_state = parse_state(&e.value, e.line)?,
            "grid_points" => predictive.grid_points = parse_usize(e)?,
            "horizon" => {
                predictive.horizon = if e.value == "auto" {
                    None
                } else {
                    Some(parse_f64(e)?)
                }
            }
            "simulations" => predictive.simulations = parse_usize(e)?,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "line {}: unknown [predictive] key `{other}`",
                    e.line
                )))
            }
        }
    }

    // [simulate] and [truth]
    let mut notes = Vec::new();
    let simulate_entries = raw.section("simulate");
    let truth_entries = raw.section("truth");
    let simulate = if simulate_entries.is_empty() && truth_entries.is_empty() {
        None
    } else {
        let mut n = 100usize;
        let mut schedule: Vec<f64> = Vec::new();
        let mut death = DeathObservability::Interval;
        let mut initial_state = 0usize;
        for e in &simulate_entries {
            match e.key.as_str() {
                "n" => n = parse_usize(e)?,
                "schedule" => {
                    schedule = e
                        .value
                        .split(',')
                        .filter(|t| !t.trim().is_empty())
                        .map(|t| {
                            t.trim().parse::<f64>().map_err(|_| {
                                Error::InvalidConfig(format!(
                                    "line {}: bad schedule entry `{t}`",
                                    e.line
                                ))
                            })
                        })
                        .collect::<Result<Vec<f64>>>()?
                }
                "death" => {
                    death = match e.value.as_str() {
                        "exact" => DeathObservability::Exact,
                        "interval" => DeathObservability::Interval,
                        other => {
                            return Err(Error::InvalidConfig(format!(
                                "line {}: death must be `exact` or `interval`, got `{other}`",
                                e.line
                            )))
                        }
                    }
                }
                "initial_state" => initial_state = parse_state(&e.value, e.line)?,
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "line {}: unknown [simulate] key `{other}`",
                        e.line
                    )))
                }
            }
        }
        if schedule.is_empty() {
            return Err(Error::InvalidConfig(
                "[simulate] needs a schedule of observation times".into(),
            ));
        }
        if schedule[0] != 0.0 || schedule.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConfig(
                "schedule must start at 0 and strictly increase".into(),
            ));
        }
        let truth = collect_truth(&truth_entries)?;
        let truth = build_truth(kind, &truth, n_states.unwrap_or(0), &mut notes)?;
        Some(SimulateConfig {
            n,
            schedule,
            death,
            initial_state,
            truth,
        })
    };

    Ok(RunConfig {
        kind,
        n_states,
        absorbing,
        forbidden,
        prior,
        sampler,
        predictive,
        simulate,
        notes,
    })
}
