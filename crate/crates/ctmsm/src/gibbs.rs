//! The full Metropolis-within-Gibbs sampler: latent-trajectory updates for
//! every individual alternate with parameter updates given the completed
//! trajectories.
//!
//! Parameter conditionals factorize over the complete-data density:
//! transition probability rows are Dirichlet-conjugate, the Weibull rate
//! coordinate `eta = gamma^alpha` is Gamma-conjugate given the shapes, and
//! the Weibull shapes and Gompertz regression coefficients move by
//! random-walk Metropolis steps. Trajectory updates for distinct
//! individuals are conditionally independent and may run in parallel; each
//! unit of work draws from its own seed-derived substream, so results do
//! not depend on scheduling.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{RateMatrix, SquareMatrix};
use crate::mh::{mh_update, MarkovProposal, MhOutcome, ProposalProcess, TrajectoryState};
use crate::model::{
    pow_shape, gompertz_integrated_hazard, MarkovParams, ModelKind, ModelParams, Trajectory,
    WeibullSmParams, GompertzImParams,
};
use crate::panel::{PanelDataset, PanelSeries};
use crate::rng::{substream, STREAM_INIT, STREAM_PARAMS, STREAM_TRAJECTORY};
use crate::summary::{summarize_columns, ParameterSummary};

/// Sweeps between Robbins-Monro step-size adjustments during burn-in.
const ADAPT_WINDOW: usize = 50;
/// Target acceptance rate for the random-walk parameter updates.
const ADAPT_TARGET: f64 = 0.35;
/// Consecutive saturated sweeps (more than half the individuals failing
/// their proposals) after which the run aborts.
const SATURATION_LIMIT: usize = 100;

/// Prior hyper-parameters. Defaults follow the usual diffuse choices:
/// unit Dirichlet concentrations (uniform rows), Gamma(0.001, 0.001) on the
/// conjugate rate coordinate, a standard normal on log shapes, and a wide
/// normal on the Gompertz coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorSpec {
    pub dirichlet_concentration: f64,
    pub eta_shape: f64,
    pub eta_rate: f64,
    pub log_alpha_sd: f64,
    pub beta_sd: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self {
            dirichlet_concentration: 1.0,
            eta_shape: 0.001,
            eta_rate: 0.001,
            log_alpha_sd: 1.0,
            beta_sd: 10.0,
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.dirichlet_concentration,
            self.eta_shape,
            self.eta_rate,
            self.log_alpha_sd,
            self.beta_sd,
        ];
        if fields.iter().any(|v| !(v > &0.0) || !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "prior hyper-parameters must be strictly positive".into(),
            ));
        }
        Ok(())
    }
}

/// Where the Gompertz proposal freezes its rates: the midpoint of the
/// relevant horizon, or a fixed calendar time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TStarPolicy {
    Midpoint,
    Fixed(f64),
}

impl TStarPolicy {
    pub fn resolve(self, horizon: f64) -> f64 {
        match self {
            TStarPolicy::Midpoint => horizon / 2.0,
            TStarPolicy::Fixed(t) => t.clamp(0.0, horizon),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub rw_step_log_alpha: f64,
    pub rw_step_beta: f64,
    pub seed: u64,
    pub parallel_individuals: bool,
    pub trajectory_attempts_per_sweep: usize,
    pub piecewise_proposal: bool,
    pub adapt_during_burn_in: bool,
    pub t_star: TStarPolicy,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self::with_iterations(5000)
    }
}

impl SamplerConfig {
    /// Default settings for a given run length: 20% burn-in, no thinning.
    pub fn with_iterations(iterations: usize) -> Self {
        Self {
            iterations,
            burn_in: iterations / 5,
            thinning: 1,
            rw_step_log_alpha: 0.1,
            rw_step_beta: 0.05,
            seed: 1,
            parallel_individuals: false,
            trajectory_attempts_per_sweep: 1,
            piecewise_proposal: false,
            adapt_during_burn_in: true,
            t_star: TStarPolicy::Midpoint,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.burn_in >= self.iterations {
            return Err(Error::InvalidConfig(format!(
                "need iterations > burn_in >= 0, got {} and {}",
                self.iterations, self.burn_in
            )));
        }
        if self.thinning == 0 {
            return Err(Error::InvalidConfig("thinning must be at least 1".into()));
        }
        if !(self.rw_step_log_alpha > 0.0) || !(self.rw_step_beta > 0.0) {
            return Err(Error::InvalidConfig(
                "random-walk step sizes must be positive".into(),
            ));
        }
        if self.trajectory_attempts_per_sweep == 0 {
            return Err(Error::InvalidConfig(
                "trajectory_attempts_per_sweep must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Structural support of the transition probability matrix: which
/// off-diagonal entries may be positive. Masked entries stay exactly zero
/// in every draw.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMask {
    n: usize,
    allowed: Vec<bool>,
}

impl TransitionMask {
    /// Everything allowed except the diagonal and rows of absorbing states.
    pub fn full(n: usize, absorbing: &[usize]) -> Self {
        let mut allowed = vec![true; n * n];
        for r in 0..n {
            for s in 0..n {
                if r == s || absorbing.contains(&r) {
                    allowed[r * n + s] = false;
                }
            }
        }
        Self { n, allowed }
    }

    pub fn forbid(&mut self, from: usize, to: usize) {
        self.allowed[from * self.n + to] = false;
    }

    pub fn is_allowed(&self, from: usize, to: usize) -> bool {
        self.allowed[from * self.n + to]
    }

    pub fn allowed_targets(&self, from: usize) -> Vec<usize> {
        (0..self.n).filter(|&s| self.is_allowed(from, s)).collect()
    }
}

/// Model family, state space, and structural zeros for one run.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub n_states: usize,
    pub absorbing: Vec<usize>,
    pub mask: TransitionMask,
}

impl ModelSpec {
    pub fn new(
        kind: ModelKind,
        n_states: usize,
        absorbing: Vec<usize>,
        forbidden: &[(usize, usize)],
    ) -> Result<Self> {
        if n_states < 2 {
            return Err(Error::StateSpaceTooSmall {
                min: 2,
                got: n_states,
            });
        }
        if absorbing.iter().any(|&a| a >= n_states) {
            return Err(Error::InvalidConfig(
                "absorbing state outside the state space".into(),
            ));
        }
        let mut mask = TransitionMask::full(n_states, &absorbing);
        for &(from, to) in forbidden {
            if from >= n_states || to >= n_states {
                return Err(Error::InvalidConfig(format!(
                    "forbidden transition {}->{} outside the state space",
                    from + 1,
                    to + 1
                )));
            }
            mask.forbid(from, to);
        }
        let spec = Self {
            kind,
            n_states,
            absorbing,
            mask,
        };
        spec.validate_mask()?;
        Ok(spec)
    }

    fn validate_mask(&self) -> Result<()> {
        for r in 0..self.n_states {
            if self.is_absorbing(r) {
                continue;
            }
            if self.mask.allowed_targets(r).is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "state {} has every exit forbidden",
                    r + 1
                )));
            }
        }
        Ok(())
    }

    pub fn is_absorbing(&self, state: usize) -> bool {
        self.absorbing.contains(&state)
    }

    pub fn transient_states(&self) -> Vec<usize> {
        (0..self.n_states)
            .filter(|s| !self.is_absorbing(*s))
            .collect()
    }
}

/// Complete-data sufficient statistics: transition counts, completed
/// sojourn durations per departure state, and the final (right-censored)
/// sojourn per state.
#[derive(Clone, Debug, Default)]
pub struct SufficientStats {
    pub n_states: usize,
    pub transition_counts: Vec<u64>,
    pub complete_sojourns: Vec<Vec<f64>>,
    pub censored_sojourns: Vec<Vec<f64>>,
}

impl SufficientStats {
    pub fn from_trajectories(trajectories: &[Trajectory], n_states: usize) -> Self {
        let mut stats = Self {
            n_states,
            transition_counts: vec![0; n_states * n_states],
            complete_sojourns: vec![Vec::new(); n_states],
            censored_sojourns: vec![Vec::new(); n_states],
        };
        for y in trajectories {
            for sojourn in y.sojourns() {
                match sojourn.arrival {
                    Some(s) => {
                        stats.transition_counts[sojourn.state * n_states + s] += 1;
                        stats.complete_sojourns[sojourn.state].push(sojourn.duration());
                    }
                    None => {
                        let w = sojourn.duration();
                        if w > 0.0 {
                            stats.censored_sojourns[sojourn.state].push(w);
                        }
                    }
                }
            }
        }
        stats
    }

    pub fn count(&self, from: usize, to: usize) -> u64 {
        self.transition_counts[from * self.n_states + to]
    }

    pub fn departures(&self, state: usize) -> u64 {
        (0..self.n_states).map(|s| self.count(state, s)).sum()
    }
}

/// Draw each non-masked transition probability row from its Dirichlet
/// conditional (concentration + transition counts). Masked entries are
/// exactly zero; absorbing rows are all zero.
pub fn update_transition_probs<R: Rng + ?Sized>(
    stats: &SufficientStats,
    spec: &ModelSpec,
    prior: &PriorSpec,
    rng: &mut R,
) -> Result<SquareMatrix> {
    let n = spec.n_states;
    let mut probs = SquareMatrix::zeros(n);
    for r in 0..n {
        if spec.is_absorbing(r) {
            continue;
        }
        let targets = spec.mask.allowed_targets(r);
        if targets.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "state {} has every exit forbidden",
                r + 1
            )));
        }
        let mut draw = vec![0.0; targets.len()];
        for _ in 0..100 {
            let mut total = 0.0;
            for (k, &s) in targets.iter().enumerate() {
                let shape = prior.dirichlet_concentration + stats.count(r, s) as f64;
                let g = Gamma::new(shape, 1.0)
                    .map_err(|e| Error::InvalidParams(format!("gamma draw: {e}")))?;
                let v = g.sample(rng);
                draw[k] = v;
                total += v;
            }
            if total > 0.0 && total.is_finite() {
                for v in draw.iter_mut() {
                    *v /= total;
                }
                break;
            }
        }
        for (k, &s) in targets.iter().enumerate() {
            probs[(r, s)] = draw[k];
        }
    }
    Ok(probs)
}

/// Exponent sum `sum w^alpha` over completed and censored sojourns of one
/// state; the conjugate Gamma rate increment.
fn weibull_exponent_sum(stats: &SufficientStats, state: usize, alpha: f64) -> f64 {
    let complete: f64 = stats.complete_sojourns[state]
        .iter()
        .map(|&w| pow_shape(w, alpha))
        .sum();
    let censored: f64 = stats.censored_sojourns[state]
        .iter()
        .map(|&w| pow_shape(w, alpha))
        .sum();
    complete + censored
}

/// Conjugate update of the Weibull rate coordinate: for each transient
/// state, `eta ~ Gamma(f + n_r, g + sum w^alpha)` and `gamma = eta^{1/alpha}`.
/// Returns `(eta, gamma)`.
pub fn update_weibull_rates<R: Rng + ?Sized>(
    stats: &SufficientStats,
    alpha: &[f64],
    spec: &ModelSpec,
    prior: &PriorSpec,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = spec.n_states;
    let mut eta = vec![0.0; n];
    let mut gamma = vec![0.0; n];
    for r in 0..n {
        if spec.is_absorbing(r) {
            continue;
        }
        let shape = prior.eta_shape + stats.departures(r) as f64;
        let rate = prior.eta_rate + weibull_exponent_sum(stats, r, alpha[r]);
        let dist = Gamma::new(shape, 1.0 / rate)
            .map_err(|e| Error::InvalidParams(format!("gamma draw: {e}")))?;
        let mut draw = dist.sample(rng);
        // Tiny shapes put real mass below the representable range; clamp
        // underflowed draws rather than redrawing, which would bias the
        // distribution.
        if !(draw > 0.0) {
            draw = f64::MIN_POSITIVE;
        }
        eta[r] = draw;
        gamma[r] = pow_shape(draw, 1.0 / alpha[r]);
    }
    Ok((eta, gamma))
}

/// Complete-data log likelihood terms of one state's shape given a fixed
/// rate coordinate `eta`.
pub fn weibull_shape_loglik(stats: &SufficientStats, state: usize, alpha: f64, eta: f64) -> f64 {
    let n_r = stats.departures(state) as f64;
    let log_sum: f64 = stats.complete_sojourns[state]
        .iter()
        .map(|&w| w.ln())
        .sum();
    n_r * alpha.ln() + (alpha - 1.0) * log_sum - eta * weibull_exponent_sum(stats, state, alpha)
}

/// Random-walk Metropolis on each transient state's log shape, with the
/// rate coordinate held fixed. Returns the new shapes and per-state
/// acceptance flags.
pub fn update_weibull_shapes<R: Rng + ?Sized>(
    stats: &SufficientStats,
    alpha: &[f64],
    eta: &[f64],
    spec: &ModelSpec,
    prior: &PriorSpec,
    steps: &[f64],
    rng: &mut R,
) -> (Vec<f64>, Vec<bool>) {
    let n = spec.n_states;
    let mut new_alpha = alpha.to_vec();
    let mut accepted = vec![false; n];
    for r in 0..n {
        if spec.is_absorbing(r) {
            continue;
        }
        let lambda = alpha[r].ln();
        let noise: f64 = rng.sample(StandardNormal);
        let proposal = lambda + steps[r] * noise;
        let candidate = proposal.exp();
        let sd2 = prior.log_alpha_sd * prior.log_alpha_sd;
        let delta = weibull_shape_loglik(stats, r, candidate, eta[r])
            - weibull_shape_loglik(stats, r, alpha[r], eta[r])
            - proposal * proposal / (2.0 * sd2)
            + lambda * lambda / (2.0 * sd2);
        let u: f64 = rng.random();
        if u.ln() < delta {
            new_alpha[r] = candidate;
            accepted[r] = true;
        }
    }
    (new_alpha, accepted)
}

/// Per-state exposure intervals `(entry, exit, ended_by_jump)` extracted
/// from complete trajectories; the sufficient layout for the Gompertz
/// conditional, which needs calendar times, not durations.
#[derive(Clone, Debug)]
pub struct GompertzExposures {
    pub per_state: Vec<Vec<(f64, f64, bool)>>,
}

impl GompertzExposures {
    pub fn from_trajectories(trajectories: &[Trajectory], n_states: usize) -> Self {
        let mut per_state = vec![Vec::new(); n_states];
        for y in trajectories {
            for sojourn in y.sojourns() {
                per_state[sojourn.state].push((
                    sojourn.start,
                    sojourn.end,
                    sojourn.arrival.is_some(),
                ));
            }
        }
        Self { per_state }
    }
}

/// Complete-data log likelihood terms of one state's Gompertz coefficients.
pub fn gompertz_state_loglik(exposures: &[(f64, f64, bool)], beta0: f64, beta1: f64) -> f64 {
    let mut acc = 0.0;
    for &(a, b, jumped) in exposures {
        if jumped {
            acc += beta0 + beta1 * b;
        }
        acc -= gompertz_integrated_hazard(beta0, beta1, a, b);
    }
    acc
}

/// Joint random-walk Metropolis on each transient state's `(beta0, beta1)`
/// with the complete-data Gompertz likelihood. Returns the new
/// coefficients and per-state acceptance flags.
pub fn update_gompertz_params<R: Rng + ?Sized>(
    trajectories: &[Trajectory],
    beta0: &[f64],
    beta1: &[f64],
    spec: &ModelSpec,
    prior: &PriorSpec,
    steps: &[f64],
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>, Vec<bool>) {
    let exposures = GompertzExposures::from_trajectories(trajectories, spec.n_states);
    let mut new_beta0 = beta0.to_vec();
    let mut new_beta1 = beta1.to_vec();
    let mut accepted = vec![false; spec.n_states];
    let prior_var = prior.beta_sd * prior.beta_sd;
    for r in 0..spec.n_states {
        if spec.is_absorbing(r) {
            continue;
        }
        let e0: f64 = rng.sample(StandardNormal);
        let e1: f64 = rng.sample(StandardNormal);
        let cand0 = beta0[r] + steps[r] * e0;
        let cand1 = beta1[r] + steps[r] * e1;
        let data = &exposures.per_state[r];
        let delta = gompertz_state_loglik(data, cand0, cand1)
            - gompertz_state_loglik(data, beta0[r], beta1[r])
            - (cand0 * cand0 + cand1 * cand1) / (2.0 * prior_var)
            + (beta0[r] * beta0[r] + beta1[r] * beta1[r]) / (2.0 * prior_var);
        let u: f64 = rng.random();
        if u.ln() < delta {
            new_beta0[r] = cand0;
            new_beta1[r] = cand1;
            accepted[r] = true;
        }
    }
    (new_beta0, new_beta1, accepted)
}

/// Markov proposal parameters induced by the current model draw: the
/// Weibull proposal reuses the scale-rates directly (the shapes do not
/// enter), and the Gompertz proposal freezes its rates at `t*`.
pub fn proposal_markov_params(
    model: &ModelParams,
    t_star: TStarPolicy,
    horizon: f64,
) -> Result<MarkovParams> {
    match model {
        ModelParams::Markov(p) => Ok(p.clone()),
        ModelParams::WeibullSm(p) => p.proposal_markov(),
        ModelParams::GompertzIm(p) => p.proposal_markov(t_star.resolve(horizon)),
    }
}

/// Generator of the Markov proposal process for the current model draw.
pub fn build_proposal_rate_matrix(
    model: &ModelParams,
    t_star: TStarPolicy,
    horizon: f64,
) -> Result<RateMatrix> {
    proposal_markov_params(model, t_star, horizon)?.rate_matrix()
}

/// Iteration-indexed posterior draws plus per-sweep sampler diagnostics.
/// Rows align one-to-one with `params`, `trajectory_acceptance`,
/// `latent_jump_totals` and `proposal_failures`.
#[derive(Clone, Debug)]
pub struct PosteriorDraws {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub params: Vec<ModelParams>,
    pub sweep_indices: Vec<usize>,
    pub mh_names: Vec<String>,
    pub mh_accept: Vec<Vec<bool>>,
    pub trajectory_acceptance: Vec<f64>,
    pub latent_jump_totals: Vec<u64>,
    pub proposal_failures: Vec<u64>,
}

impl PosteriorDraws {
    pub fn n_retained(&self) -> usize {
        self.rows.len()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.names.iter().position(|n| n == name)?;
        Some(self.rows.iter().map(|row| row[j]).collect())
    }

    pub fn posterior_mean(&self, name: &str) -> Option<f64> {
        let column = self.column(name)?;
        Some(column.iter().sum::<f64>() / column.len() as f64)
    }

    pub fn summary(&self) -> Result<Vec<ParameterSummary>> {
        summarize_columns(&self.names, &self.rows)
    }

    pub fn mean_trajectory_acceptance(&self) -> f64 {
        if self.trajectory_acceptance.is_empty() {
            return f64::NAN;
        }
        self.trajectory_acceptance.iter().sum::<f64>() / self.trajectory_acceptance.len() as f64
    }
}

fn pair_label(prefix: &str, r: usize, s: usize) -> String {
    format!("{prefix}_{}{}", r + 1, s + 1)
}

/// Flat draw layout for one model kind: derived transition rates first
/// (where defined), then the family's own parameters, then the embedded
/// transition probabilities.
pub fn parameter_names(spec: &ModelSpec) -> (Vec<String>, Vec<String>) {
    let mut names = Vec::new();
    let mut mh_names = Vec::new();
    let transient = spec.transient_states();
    let pairs: Vec<(usize, usize)> = (0..spec.n_states)
        .flat_map(|r| (0..spec.n_states).map(move |s| (r, s)))
        .filter(|&(r, s)| spec.mask.is_allowed(r, s))
        .collect();

    match spec.kind {
        ModelKind::Markov => {
            for &(r, s) in &pairs {
                names.push(pair_label("gamma", r, s));
            }
            for &r in &transient {
                names.push(format!("gamma_{}", r + 1));
            }
        }
        ModelKind::WeibullSm => {
            for &(r, s) in &pairs {
                names.push(pair_label("gamma", r, s));
            }
            for &r in &transient {
                names.push(format!("alpha_{}", r + 1));
                mh_names.push(format!("alpha_{}", r + 1));
            }
            for &r in &transient {
                names.push(format!("gamma_{}", r + 1));
            }
        }
        ModelKind::GompertzIm => {
            for &r in &transient {
                names.push(format!("beta0_{}", r + 1));
                names.push(format!("beta1_{}", r + 1));
                mh_names.push(format!("beta_{}", r + 1));
            }
        }
    }
    for &(r, s) in &pairs {
        names.push(pair_label("p", r, s));
    }
    (names, mh_names)
}

fn flatten_params(model: &ModelParams, spec: &ModelSpec) -> Vec<f64> {
    let transient = spec.transient_states();
    let pairs: Vec<(usize, usize)> = (0..spec.n_states)
        .flat_map(|r| (0..spec.n_states).map(move |s| (r, s)))
        .filter(|&(r, s)| spec.mask.is_allowed(r, s))
        .collect();
    let mut row = Vec::new();
    match model {
        ModelParams::Markov(p) => {
            for &(r, s) in &pairs {
                row.push(p.gamma[r] * p.probs[(r, s)]);
            }
            for &r in &transient {
                row.push(p.gamma[r]);
            }
            for &(r, s) in &pairs {
                row.push(p.probs[(r, s)]);
            }
        }
        ModelParams::WeibullSm(p) => {
            for &(r, s) in &pairs {
                row.push(p.gamma[r] * p.probs[(r, s)]);
            }
            for &r in &transient {
                row.push(p.alpha[r]);
            }
            for &r in &transient {
                row.push(p.gamma[r]);
            }
            for &(r, s) in &pairs {
                row.push(p.probs[(r, s)]);
            }
        }
        ModelParams::GompertzIm(p) => {
            for &r in &transient {
                row.push(p.beta0[r]);
                row.push(p.beta1[r]);
            }
            for &(r, s) in &pairs {
                row.push(p.probs[(r, s)]);
            }
        }
    }
    row
}

fn uniform_probs(spec: &ModelSpec) -> SquareMatrix {
    let n = spec.n_states;
    let mut probs = SquareMatrix::zeros(n);
    for r in 0..n {
        if spec.is_absorbing(r) {
            continue;
        }
        let targets = spec.mask.allowed_targets(r);
        for &s in &targets {
            probs[(r, s)] = 1.0 / targets.len() as f64;
        }
    }
    probs
}

fn initial_model(spec: &ModelSpec, data: &PanelDataset) -> Result<ModelParams> {
    let probs = uniform_probs(spec);
    let base_rate = 1.0 / data.mean_observation_gap();
    let gamma: Vec<f64> = (0..spec.n_states)
        .map(|r| if spec.is_absorbing(r) { 0.0 } else { base_rate })
        .collect();
    Ok(match spec.kind {
        ModelKind::Markov => ModelParams::Markov(MarkovParams::new(probs, gamma)?),
        ModelKind::WeibullSm => ModelParams::WeibullSm(WeibullSmParams::new(
            probs,
            vec![1.0; spec.n_states],
            gamma,
        )?),
        ModelKind::GompertzIm => {
            let beta0 = (0..spec.n_states)
                .map(|r| if spec.is_absorbing(r) { 0.0 } else { base_rate.ln() })
                .collect();
            ModelParams::GompertzIm(GompertzImParams::new(
                probs,
                beta0,
                vec![0.0; spec.n_states],
            )?)
        }
    })
}

/// One proposal process per individual for the current model draw. The
/// homogeneous Markov and Weibull proposals are shared across individuals;
/// Gompertz proposals depend on each individual's horizon (and, in the
/// piecewise variant, on each observation interval).
fn build_proposals(
    model: &ModelParams,
    data: &PanelDataset,
    config: &SamplerConfig,
) -> Result<Vec<Arc<ProposalProcess>>> {
    match model {
        ModelParams::Markov(_) | ModelParams::WeibullSm(_) => {
            let params = proposal_markov_params(model, config.t_star, 0.0)?;
            let shared = Arc::new(ProposalProcess::Homogeneous(MarkovProposal::new(params)?));
            Ok(data.individuals.iter().map(|_| Arc::clone(&shared)).collect())
        }
        ModelParams::GompertzIm(p) => data
            .individuals
            .iter()
            .map(|series| {
                if config.piecewise_proposal {
                    let pieces = series
                        .intervals()
                        .map(|(a, b, _, _)| {
                            let t_star = a + (b - a) / 2.0;
                            MarkovProposal::new(p.proposal_markov(t_star)?)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok(Arc::new(ProposalProcess::Piecewise(pieces)))
                } else {
                    let t_star = config.t_star.resolve(series.horizon());
                    let params = p.proposal_markov(t_star)?;
                    Ok(Arc::new(ProposalProcess::Homogeneous(MarkovProposal::new(
                        params,
                    )?)))
                }
            })
            .collect(),
    }
}

struct SweepResult {
    accepted: usize,
    failed_proposals: usize,
    any_failure: bool,
    jumps: u64,
}

fn update_individual(
    series: &PanelSeries,
    state: &mut TrajectoryState,
    model: &ModelParams,
    proposal: &ProposalProcess,
    attempts: usize,
    rng: &mut rand_pcg::Pcg64,
) -> Result<SweepResult> {
    state.refresh(model, proposal, series)?;
    let mut accepted = 0;
    let mut failed = 0;
    for _ in 0..attempts {
        match mh_update(series, state, model, proposal, rng)? {
            MhOutcome::Accepted => accepted += 1,
            MhOutcome::Rejected => {}
            MhOutcome::ProposalFailed => failed += 1,
        }
    }
    Ok(SweepResult {
        accepted,
        failed_proposals: failed,
        any_failure: failed > 0,
        jumps: state.current.n_jumps() as u64,
    })
}

/// Run the Metropolis-within-Gibbs sampler on a panel dataset.
pub fn run_gibbs(
    data: &PanelDataset,
    spec: &ModelSpec,
    prior: &PriorSpec,
    config: &SamplerConfig,
) -> Result<PosteriorDraws> {
    prior.validate()?;
    config.validate()?;
    if data.individuals.is_empty() {
        return Err(Error::InvalidPanel("no individuals".into()));
    }
    if data.n_states > spec.n_states {
        return Err(Error::InvalidConfig(format!(
            "data uses {} states but the model declares {}",
            data.n_states, spec.n_states
        )));
    }
    for &a in &data.absorbing_states {
        if !spec.is_absorbing(a) {
            return Err(Error::InvalidConfig(format!(
                "state {} acts as absorbing in the data but is not declared absorbing",
                a + 1
            )));
        }
    }

    let mut model = initial_model(spec, data)?;
    let n_individuals = data.n_individuals();
    let attempts = config.trajectory_attempts_per_sweep;

    // Initial latent paths drawn from the initial model's proposal.
    let proposals = build_proposals(&model, data, config)?;
    let mut states: Vec<TrajectoryState> = data
        .individuals
        .iter()
        .enumerate()
        .map(|(i, series)| {
            let mut rng = substream(config.seed, &[STREAM_INIT, i as u64]);
            let trajectory = proposals[i]
                .propose(series, &mut rng)
                .map_err(|e| Error::InitializationFailure(format!("individual {}: {e}", series.id)))?;
            TrajectoryState::new(trajectory, &model, &proposals[i], series)
                .map_err(|e| Error::InitializationFailure(format!("individual {}: {e}", series.id)))
        })
        .collect::<Result<Vec<_>>>()?;

    let (names, mh_names) = parameter_names(spec);
    let transient = spec.transient_states();
    let mut steps_alpha = vec![config.rw_step_log_alpha; spec.n_states];
    let mut steps_beta = vec![config.rw_step_beta; spec.n_states];
    let mut window_accepts = vec![0usize; spec.n_states];
    let mut window_total = 0usize;
    let mut adapt_round = 0usize;

    let mut draws = PosteriorDraws {
        names,
        rows: Vec::new(),
        params: Vec::new(),
        sweep_indices: Vec::new(),
        mh_names,
        mh_accept: Vec::new(),
        trajectory_acceptance: Vec::new(),
        latent_jump_totals: Vec::new(),
        proposal_failures: Vec::new(),
    };
    let mut saturated_streak = 0usize;

    for sweep in 1..=config.iterations {
        // (a) Latent-path updates, one substream per individual.
        let proposals = build_proposals(&model, data, config)?;
        let run_one = |i: usize, state: &mut TrajectoryState| -> Result<SweepResult> {
            let mut rng = substream(config.seed, &[STREAM_TRAJECTORY, sweep as u64, i as u64]);
            update_individual(
                &data.individuals[i],
                state,
                &model,
                &proposals[i],
                attempts,
                &mut rng,
            )
        };
        let results: Vec<SweepResult> = if config.parallel_individuals {
            states
                .par_iter_mut()
                .enumerate()
                .map(|(i, st)| run_one(i, st))
                .collect::<Result<Vec<_>>>()?
        } else {
            states
                .iter_mut()
                .enumerate()
                .map(|(i, st)| run_one(i, st))
                .collect::<Result<Vec<_>>>()?
        };

        let accepted: usize = results.iter().map(|r| r.accepted).sum();
        let failures: u64 = results.iter().map(|r| r.failed_proposals as u64).sum();
        let failing_individuals = results.iter().filter(|r| r.any_failure).count();
        let jumps: u64 = results.iter().map(|r| r.jumps).sum();
        let acceptance = accepted as f64 / (n_individuals * attempts) as f64;

        if 2 * failing_individuals > n_individuals {
            saturated_streak += 1;
            if saturated_streak >= SATURATION_LIMIT {
                return Err(Error::ProposalSaturation {
                    sweeps: saturated_streak,
                    failures: failing_individuals,
                    individuals: n_individuals,
                });
            }
        } else {
            saturated_streak = 0;
        }

        // (b) Sufficient statistics from the completed trajectories.
        let trajectories: Vec<Trajectory> =
            states.iter().map(|s| s.current.clone()).collect();
        let stats = SufficientStats::from_trajectories(&trajectories, spec.n_states);

        // (c) Parameter updates on the sweep's own substream.
        let mut rng = substream(config.seed, &[STREAM_PARAMS, sweep as u64]);
        let probs = update_transition_probs(&stats, spec, prior, &mut rng)?;
        let mut accept_flags = vec![false; draws.mh_names.len()];
        model = match &model {
            ModelParams::Markov(_) => {
                // Unit shapes make the conjugate eta update the exponential
                // rate update.
                let alpha = vec![1.0; spec.n_states];
                let (_, gamma) = update_weibull_rates(&stats, &alpha, spec, prior, &mut rng)?;
                ModelParams::Markov(MarkovParams::new(probs, gamma)?)
            }
            ModelParams::WeibullSm(p) => {
                let (eta, _) = update_weibull_rates(&stats, &p.alpha, spec, prior, &mut rng)?;
                let (alpha, accepted) = update_weibull_shapes(
                    &stats,
                    &p.alpha,
                    &eta,
                    spec,
                    prior,
                    &steps_alpha,
                    &mut rng,
                );
                for (k, &r) in transient.iter().enumerate() {
                    accept_flags[k] = accepted[r];
                    if accepted[r] {
                        window_accepts[r] += 1;
                    }
                }
                ModelParams::WeibullSm(WeibullSmParams::from_shape_eta(probs, alpha, eta)?)
            }
            ModelParams::GompertzIm(p) => {
                let (beta0, beta1, accepted) = update_gompertz_params(
                    &trajectories,
                    &p.beta0,
                    &p.beta1,
                    spec,
                    prior,
                    &steps_beta,
                    &mut rng,
                );
                for (k, &r) in transient.iter().enumerate() {
                    accept_flags[k] = accepted[r];
                    if accepted[r] {
                        window_accepts[r] += 1;
                    }
                }
                ModelParams::GompertzIm(GompertzImParams::new(probs, beta0, beta1)?)
            }
        };

        // Robbins-Monro step adaptation, burn-in only so the retained
        // chain keeps detailed balance.
        if config.adapt_during_burn_in && sweep <= config.burn_in {
            window_total += 1;
            if window_total == ADAPT_WINDOW {
                adapt_round += 1;
                let gain = 2.0 / (adapt_round as f64).powf(0.6);
                for &r in &transient {
                    let rate = window_accepts[r] as f64 / ADAPT_WINDOW as f64;
                    let factor = ((rate - ADAPT_TARGET) * gain).exp();
                    steps_alpha[r] = (steps_alpha[r] * factor).clamp(1e-4, 10.0);
                    steps_beta[r] = (steps_beta[r] * factor).clamp(1e-4, 10.0);
                    window_accepts[r] = 0;
                }
                window_total = 0;
            }
        }

        // (d) Record past burn-in.
        if sweep > config.burn_in && (sweep - config.burn_in - 1).is_multiple_of(config.thinning) {
            draws.rows.push(flatten_params(&model, spec));
            draws.params.push(model.clone());
            draws.sweep_indices.push(sweep);
            draws.mh_accept.push(accept_flags);
            draws.trajectory_acceptance.push(acceptance);
            draws.latent_jump_totals.push(jumps);
            draws.proposal_failures.push(failures);
        }
    }
    Ok(draws)
}

#[cfg(test)]
#[allow(clippy::identity_op)] // transition-count indices written as row * n + col
mod tests {
    use super::*;
    use crate::summary::{chi_square_pvalue, mean};
    use rand::SeedableRng;
    use rand_pcg::Pcg64;

    fn spec_3(kind: ModelKind) -> ModelSpec {
        ModelSpec::new(kind, 3, vec![2], &[]).unwrap()
    }

    fn empty_stats(n: usize) -> SufficientStats {
        SufficientStats::from_trajectories(&[], n)
    }

    #[test]
    fn dirichlet_symmetric_prior_mean() {
        let spec = spec_3(ModelKind::Markov);
        let prior = PriorSpec::default();
        let stats = empty_stats(3);
        let mut rng = Pcg64::seed_from_u64(1);
        let draws = 20_000;
        let mut sum = 0.0;
        for _ in 0..draws {
            let p = update_transition_probs(&stats, &spec, &prior, &mut rng).unwrap();
            sum += p[(0, 1)];
        }
        let m = sum / draws as f64;
        // Beta(1,1): mean 1/2, sd sqrt(1/12)/sqrt(n).
        let se = (1.0f64 / 12.0).sqrt() / (draws as f64).sqrt();
        assert!((m - 0.5).abs() < 3.0 * se, "mean {m}");
    }

    #[test]
    fn dirichlet_posterior_beta_11_1() {
        // Counts (10, 0) with a uniform prior: Beta(11, 1), mean 11/12.
        let spec = spec_3(ModelKind::Markov);
        let prior = PriorSpec::default();
        let mut stats = empty_stats(3);
        stats.transition_counts[0 * 3 + 1] = 10;
        let mut rng = Pcg64::seed_from_u64(2);
        let draws = 50_000;
        let mut sum = 0.0;
        for _ in 0..draws {
            let p = update_transition_probs(&stats, &spec, &prior, &mut rng).unwrap();
            sum += p[(0, 1)];
        }
        let m = sum / draws as f64;
        let expected = 11.0 / 12.0;
        let var = expected * (1.0 - expected) / 13.0;
        let se = (var / draws as f64).sqrt();
        assert!((m - expected).abs() < 3.0 * se, "mean {m} vs {expected}");
    }

    #[test]
    fn dirichlet_draws_match_beta_density() {
        // Chi-square goodness of fit of p_01 draws against Beta(11, 1)
        // using equal-probability bins (CDF x^11).
        let spec = spec_3(ModelKind::Markov);
        let prior = PriorSpec::default();
        let mut stats = empty_stats(3);
        stats.transition_counts[0 * 3 + 1] = 10;
        let mut rng = Pcg64::seed_from_u64(3);
        let draws = 100_000;
        let bins = 20usize;
        let mut counts = vec![0.0; bins];
        for _ in 0..draws {
            let p = update_transition_probs(&stats, &spec, &prior, &mut rng).unwrap();
            let u = p[(0, 1)].powi(11); // probability integral transform
            let k = ((u * bins as f64) as usize).min(bins - 1);
            counts[k] += 1.0;
        }
        let expected = draws as f64 / bins as f64;
        let stat: f64 = counts
            .iter()
            .map(|c| (c - expected) * (c - expected) / expected)
            .sum();
        let p_value = chi_square_pvalue(stat, bins - 1);
        assert!(p_value > 0.01, "chi-square {stat}, p {p_value}");
    }

    #[test]
    fn structural_zeros_never_violated() {
        let spec = ModelSpec::new(ModelKind::Markov, 3, vec![2], &[(0, 2)]).unwrap();
        let prior = PriorSpec::default();
        let mut stats = empty_stats(3);
        stats.transition_counts[0 * 3 + 1] = 4;
        stats.transition_counts[1 * 3 + 2] = 3;
        let mut rng = Pcg64::seed_from_u64(4);
        for _ in 0..2_000 {
            let p = update_transition_probs(&stats, &spec, &prior, &mut rng).unwrap();
            assert_eq!(p[(0, 2)], 0.0);
            assert_eq!(p[(0, 1)], 1.0);
            let row1: f64 = p.row(1).iter().sum();
            assert!((row1 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fully_masked_row_is_an_error() {
        assert!(ModelSpec::new(ModelKind::Markov, 3, vec![2], &[(0, 1), (0, 2)]).is_err());
    }

    #[test]
    fn weibull_rate_prior_draw_without_data() {
        let spec = spec_3(ModelKind::WeibullSm);
        let prior = PriorSpec::default();
        let stats = empty_stats(3);
        let mut rng = Pcg64::seed_from_u64(5);
        let draws = 100_000;
        let mut sum = 0.0;
        for _ in 0..draws {
            let (eta, _) =
                update_weibull_rates(&stats, &[1.0, 1.0, 1.0], &spec, &prior, &mut rng).unwrap();
            sum += eta[0];
        }
        // Gamma(0.001, 0.001): mean 1, variance 1000.
        let m = sum / draws as f64;
        let se = (1000.0f64 / draws as f64).sqrt();
        assert!((m - 1.0).abs() < 3.0 * se, "mean {m}");
    }

    #[test]
    fn weibull_rate_conjugate_arithmetic() {
        // alpha = 1, sojourns {1, 1, 2}: Gamma(3.001, 4.001), mean ~ 0.7501.
        let spec = spec_3(ModelKind::WeibullSm);
        let prior = PriorSpec::default();
        let mut stats = empty_stats(3);
        stats.complete_sojourns[0] = vec![1.0, 1.0, 2.0];
        stats.transition_counts[0 * 3 + 1] = 3;
        let mut rng = Pcg64::seed_from_u64(6);
        let draws = 100_000;
        let mut sum = 0.0;
        for _ in 0..draws {
            let (eta, gamma) =
                update_weibull_rates(&stats, &[1.0, 1.0, 1.0], &spec, &prior, &mut rng).unwrap();
            assert_eq!(eta[0], gamma[0]);
            sum += eta[0];
        }
        let m = sum / draws as f64;
        let expected = 3.001 / 4.001;
        let se = (expected / 4.001 / draws as f64).sqrt();
        assert!((m - expected).abs() < 3.0 * se, "mean {m} vs {expected}");
    }

    #[test]
    fn weibull_rate_posterior_moments_random_stats() {
        let spec = spec_3(ModelKind::WeibullSm);
        let prior = PriorSpec::default();
        let mut seed_rng = Pcg64::seed_from_u64(7);
        for _ in 0..5 {
            let alpha = 0.5 + 1.5 * seed_rng.random::<f64>();
            let mut stats = empty_stats(3);
            let n = 20 + (seed_rng.random::<f64>() * 30.0) as usize;
            for _ in 0..n {
                stats.complete_sojourns[0].push(0.1 + 3.0 * seed_rng.random::<f64>());
            }
            stats.transition_counts[0 * 3 + 1] = n as u64;
            stats.censored_sojourns[0].push(1.7);
            let shape = prior.eta_shape + n as f64;
            let rate = prior.eta_rate + weibull_exponent_sum(&stats, 0, alpha);
            let expected = shape / rate;
            let draws = 100_000;
            let mut rng = Pcg64::seed_from_u64(8);
            let mut sum = 0.0;
            for _ in 0..draws {
                let (eta, _) =
                    update_weibull_rates(&stats, &[alpha, 1.0, 1.0], &spec, &prior, &mut rng)
                        .unwrap();
                sum += eta[0];
            }
            let m = sum / draws as f64;
            let se = (shape / (rate * rate) / draws as f64).sqrt();
            assert!((m - expected).abs() < 3.0 * se, "mean {m} vs {expected}");
        }
    }

    #[test]
    fn shape_update_with_zero_step_keeps_value() {
        let spec = spec_3(ModelKind::WeibullSm);
        let prior = PriorSpec::default();
        let mut stats = empty_stats(3);
        stats.complete_sojourns[0] = vec![0.5, 1.5, 2.5];
        stats.transition_counts[0 * 3 + 1] = 3;
        let mut rng = Pcg64::seed_from_u64(9);
        // A vanishing step proposes the current point, which must accept.
        let steps = vec![1e-300, 1e-300, 1e-300];
        let alpha = vec![1.3, 0.9, 1.0];
        let eta = vec![0.4, 0.8, 0.0];
        let (new_alpha, accepted) =
            update_weibull_shapes(&stats, &alpha, &eta, &spec, &prior, &steps, &mut rng);
        assert!(accepted[0] && accepted[1]);
        assert!((new_alpha[0] - alpha[0]).abs() < 1e-12);
    }

    #[test]
    fn shape_update_acceptance_ratio_matches_direct_evaluation() {
        let mut stats = empty_stats(3);
        stats.complete_sojourns[0] = vec![0.5, 1.5, 2.5, 0.9];
        stats.censored_sojourns[0] = vec![2.2];
        stats.transition_counts[0 * 3 + 1] = 4;
        let (alpha, candidate, eta) = (1.2f64, 1.5f64, 0.6f64);
        let direct = {
            let ll = |a: f64| {
                4.0 * a.ln()
                    + (a - 1.0)
                        * (0.5f64.ln() + 1.5f64.ln() + 2.5f64.ln() + 0.9f64.ln())
                    - eta
                        * (0.5f64.powf(a)
                            + 1.5f64.powf(a)
                            + 2.5f64.powf(a)
                            + 0.9f64.powf(a)
                            + 2.2f64.powf(a))
            };
            let lp = |a: f64| -a.ln() * a.ln() / 2.0;
            ll(candidate) + lp(candidate) - ll(alpha) - lp(alpha)
        };
        let from_module = weibull_shape_loglik(&stats, 0, candidate, eta)
            - weibull_shape_loglik(&stats, 0, alpha, eta)
            - candidate.ln() * candidate.ln() / 2.0
            + alpha.ln() * alpha.ln() / 2.0;
        assert!(
            (direct - from_module).abs() < 1e-10,
            "{direct} vs {from_module}"
        );
    }

    #[test]
    fn shape_update_recovers_truth_from_complete_data() {
        // Complete sojourns from a Weibull with shape 1.4: the shape chain
        // given the true eta concentrates near 1.4.
        let spec = spec_3(ModelKind::WeibullSm);
        let prior = PriorSpec::default();
        let truth_alpha = 1.4f64;
        let truth_gamma = 0.3f64;
        let truth_eta = truth_gamma.powf(truth_alpha);
        let mut rng = Pcg64::seed_from_u64(10);
        let mut stats = empty_stats(3);
        let n = 1000;
        for _ in 0..n {
            let u: f64 = rng.random();
            let w = (-u.ln() / truth_eta).powf(1.0 / truth_alpha);
            stats.complete_sojourns[0].push(w);
        }
        stats.transition_counts[0 * 3 + 1] = n as u64;

        let steps = vec![0.08, 0.08, 0.08];
        let mut alpha = vec![1.0, 1.0, 1.0];
        let mut eta = vec![truth_eta, 0.0, 0.0];
        let mut collected = Vec::new();
        for sweep in 0..4000 {
            let (new_alpha, _) =
                update_weibull_shapes(&stats, &alpha, &eta, &spec, &prior, &steps, &mut rng);
            alpha = new_alpha;
            let (new_eta, _) =
                update_weibull_rates(&stats, &alpha, &spec, &prior, &mut rng).unwrap();
            eta = new_eta;
            if sweep >= 1000 {
                collected.push(alpha[0]);
            }
        }
        let m = mean(&collected);
        assert!((m - truth_alpha).abs() < 0.1, "posterior mean {m}");
    }

    #[test]
    fn gompertz_update_with_zero_step_keeps_values() {
        let spec = spec_3(ModelKind::GompertzIm);
        let prior = PriorSpec::default();
        let trajectories = vec![Trajectory {
            initial_state: 0,
            jumps: vec![(1.0, 1), (2.0, 2)],
            end_time: 2.0,
            end_kind: crate::model::EndKind::AbsorbedExact,
        }];
        let mut rng = Pcg64::seed_from_u64(11);
        let steps = vec![1e-300; 3];
        let (b0, b1, accepted) = update_gompertz_params(
            &trajectories,
            &[-0.5, -1.0, 0.0],
            &[0.1, 0.2, 0.0],
            &spec,
            &prior,
            &steps,
            &mut rng,
        );
        assert!(accepted[0] && accepted[1]);
        assert!((b0[0] + 0.5).abs() < 1e-12 && (b1[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn gompertz_acceptance_ratio_matches_direct_evaluation() {
        let exposures = vec![(0.0, 1.3, true), (2.0, 4.5, true), (5.0, 7.25, false)];
        let (b0, b1) = (-0.7, 0.15);
        let (c0, c1) = (-0.5, 0.2);
        let direct = {
            let ll = |beta0: f64, beta1: f64| {
                let mut acc = 0.0;
                for &(a, b, jumped) in &exposures {
                    if jumped {
                        acc += beta0 + beta1 * b;
                    }
                    acc -= (beta0.exp() / beta1) * ((beta1 * b).exp() - (beta1 * a).exp());
                }
                acc
            };
            ll(c0, c1) - ll(b0, b1)
        };
        let from_module =
            gompertz_state_loglik(&exposures, c0, c1) - gompertz_state_loglik(&exposures, b0, b1);
        assert!(
            (direct - from_module).abs() < 1e-10,
            "{direct} vs {from_module}"
        );
    }

    #[test]
    fn gompertz_update_recovers_truth_from_complete_data() {
        // Complete trajectories from the simulation design: posterior means
        // of (beta0, beta1) for the healthy state land near the truth.
        let probs = SquareMatrix::from_rows(&[
            vec![0.0, 0.8, 0.2],
            vec![0.2, 0.0, 0.8],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        let truth = GompertzImParams::new(
            probs,
            vec![-0.69, -2.30, 0.0],
            vec![0.2, 0.2, 0.0],
        )
        .unwrap();
        let model = ModelParams::GompertzIm(truth.clone());
        let mut rng = Pcg64::seed_from_u64(12);
        let trajectories: Vec<Trajectory> = (0..1000)
            .map(|_| crate::model::simulate_forward(&model, 0, 20.0, &mut rng).unwrap())
            .collect();

        let spec = spec_3(ModelKind::GompertzIm);
        let prior = PriorSpec::default();
        let steps = vec![0.05; 3];
        let mut beta0 = vec![0.0, 0.0, 0.0];
        let mut beta1 = vec![0.0, 0.0, 0.0];
        let mut collected0 = Vec::new();
        let mut collected1 = Vec::new();
        for sweep in 0..6000 {
            let (b0, b1, _) = update_gompertz_params(
                &trajectories,
                &beta0,
                &beta1,
                &spec,
                &prior,
                &steps,
                &mut rng,
            );
            beta0 = b0;
            beta1 = b1;
            if sweep >= 1500 {
                collected0.push(beta0[0]);
                collected1.push(beta1[0]);
            }
        }
        let m0 = mean(&collected0);
        let m1 = mean(&collected1);
        assert!((m0 + 0.69).abs() < 0.1, "beta0 mean {m0}");
        assert!((m1 - 0.2).abs() < 0.05, "beta1 mean {m1}");
    }

    #[test]
    fn proposal_rate_matrix_recipes() {
        let probs = SquareMatrix::from_rows(&[
            vec![0.0, 0.8, 0.2],
            vec![0.2, 0.0, 0.8],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        // The Weibull proposal ignores the shapes.
        let w1 = ModelParams::WeibullSm(
            WeibullSmParams::new(probs.clone(), vec![1.7, 0.6, 1.0], vec![0.3, 0.14, 0.0])
                .unwrap(),
        );
        let w2 = ModelParams::WeibullSm(
            WeibullSmParams::new(probs.clone(), vec![1.0, 1.0, 1.0], vec![0.3, 0.14, 0.0])
                .unwrap(),
        );
        let g1 = build_proposal_rate_matrix(&w1, TStarPolicy::Midpoint, 60.0).unwrap();
        let g2 = build_proposal_rate_matrix(&w2, TStarPolicy::Midpoint, 60.0).unwrap();
        assert_eq!(g1, g2);
        assert!((g1.exit_rate(0) - 0.3).abs() < 1e-15);

        // Flat Gompertz rates do not depend on t*.
        let flat = ModelParams::GompertzIm(
            GompertzImParams::new(probs.clone(), vec![-0.69, -2.3, 0.0], vec![0.0; 3]).unwrap(),
        );
        let a = build_proposal_rate_matrix(&flat, TStarPolicy::Fixed(1.0), 20.0).unwrap();
        let b = build_proposal_rate_matrix(&flat, TStarPolicy::Fixed(17.0), 20.0).unwrap();
        assert_eq!(a, b);
        assert!((a.exit_rate(0) - (-0.69f64).exp()).abs() < 1e-15);

        // Midpoint policy: exit rate e^{beta0 + beta1 T/2}.
        let sloped = ModelParams::GompertzIm(
            GompertzImParams::new(probs, vec![-0.69, -2.3, 0.0], vec![0.2, 0.2, 0.0]).unwrap(),
        );
        let g = build_proposal_rate_matrix(&sloped, TStarPolicy::Midpoint, 20.0).unwrap();
        let expected = (-0.69f64 + 0.2 * 10.0).exp();
        assert!((g.exit_rate(0) - expected).abs() < 1e-12, "{}", g.exit_rate(0));
    }

    #[test]
    fn sampler_config_validation() {
        let mut c = SamplerConfig::with_iterations(100);
        assert!(c.validate().is_ok());
        c.burn_in = 100;
        assert!(c.validate().is_err());
        let mut c = SamplerConfig::with_iterations(100);
        c.thinning = 0;
        assert!(c.validate().is_err());
    }
}
