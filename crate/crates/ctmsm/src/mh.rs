//! Metropolis-Hastings update of one individual's latent trajectory.
//!
//! Proposals come from the endpoint-conditioned Markov bridge; the
//! acceptance ratio is the model-to-proposal density ratio of the proposed
//! and current trajectories. The conditioning normalizers depend only on
//! the observed panel and cancel, so both densities are evaluated in their
//! unconditioned complete-data form.

use rand::Rng;

use crate::bridge;
use crate::error::{Error, Result};
use crate::linalg::{RateMatrix, UniformizedChain};
use crate::model::{log_density_markov, MarkovParams, ModelParams, Trajectory};
use crate::panel::PanelSeries;

/// A Markov proposal engine: parameters, the generator they induce, and
/// its uniformized form. The parameters are carried verbatim so density
/// evaluations cancel bit-exactly when the model nests the proposal.
#[derive(Debug)]
pub struct MarkovProposal {
    pub params: MarkovParams,
    pub generator: RateMatrix,
    pub chain: UniformizedChain,
}

impl MarkovProposal {
    pub fn new(params: MarkovParams) -> Result<Self> {
        let generator = params.rate_matrix()?;
        let chain = generator.uniformize()?;
        Ok(Self {
            params,
            generator,
            chain,
        })
    }
}

/// Proposal process for one individual: a single homogeneous chain, or one
/// chain per observation interval when the rates are strongly
/// time-dependent.
#[derive(Debug)]
pub enum ProposalProcess {
    Homogeneous(MarkovProposal),
    Piecewise(Vec<MarkovProposal>),
}

impl ProposalProcess {
    /// Draw a trajectory consistent with every panel observation.
    pub fn propose<R: Rng + ?Sized>(
        &self,
        series: &PanelSeries,
        rng: &mut R,
    ) -> Result<Trajectory> {
        match self {
            ProposalProcess::Homogeneous(p) => {
                bridge::sample_full_proposal(&p.chain, &p.generator, series, rng)
            }
            ProposalProcess::Piecewise(pieces) => {
                if pieces.len() != series.n_intervals() {
                    return Err(Error::InvalidParams(format!(
                        "{} proposal pieces for {} intervals",
                        pieces.len(),
                        series.n_intervals()
                    )));
                }
                let mut per_interval = |i: usize| (&pieces[i].chain, &pieces[i].generator);
                bridge::sample_proposal_with(&mut per_interval, series, rng)
            }
        }
    }

    /// Log density of a trajectory under the proposal process (without the
    /// panel-conditioning normalizer, which cancels in the ratio).
    pub fn log_density(&self, y: &Trajectory, series: &PanelSeries) -> f64 {
        match self {
            ProposalProcess::Homogeneous(p) => log_density_markov(y, &p.params),
            ProposalProcess::Piecewise(pieces) => {
                let mut acc = 0.0;
                for (i, (a, b, _, _)) in series.intervals().enumerate() {
                    acc += segment_log_density_markov(&pieces[i].params, y, a, b);
                }
                acc
            }
        }
    }
}

/// Markov log density of the restriction of `y` to `[a, b]`. Jumps in
/// `(a, b]` contribute transition factors; the remaining stretch up to `b`
/// contributes a survivor factor, which vanishes when the trajectory is
/// already absorbed (zero exit rate) or jumped exactly at `b`.
fn segment_log_density_markov(params: &MarkovParams, y: &Trajectory, a: f64, b: f64) -> f64 {
    let mut acc = 0.0;
    let mut state = y.state_at(a);
    let mut clock = a;
    for &(z, s) in &y.jumps {
        if z <= a {
            continue;
        }
        if z > b {
            break;
        }
        acc += params.probs[(state, s)].ln() + params.gamma[state].ln();
        acc -= params.gamma[state] * (z - clock);
        state = s;
        clock = z;
    }
    acc -= params.gamma[state] * (b - clock);
    acc
}

/// Latent-trajectory state of one individual: the current path and the
/// cached `log p_model - log p_proposal` evaluated at the current
/// parameter values.
#[derive(Clone, Debug)]
pub struct TrajectoryState {
    pub current: Trajectory,
    pub log_target_minus_proposal: f64,
}

impl TrajectoryState {
    pub fn new(
        trajectory: Trajectory,
        model: &ModelParams,
        proposal: &ProposalProcess,
        series: &PanelSeries,
    ) -> Result<Self> {
        let mut state = Self {
            current: trajectory,
            log_target_minus_proposal: 0.0,
        };
        state.refresh(model, proposal, series)?;
        Ok(state)
    }

    /// Recompute the cache; must be called whenever the parameters change.
    pub fn refresh(
        &mut self,
        model: &ModelParams,
        proposal: &ProposalProcess,
        series: &PanelSeries,
    ) -> Result<()> {
        let target = model.log_density(&self.current);
        if target == f64::NEG_INFINITY || target.is_nan() {
            return Err(Error::InvalidChainState);
        }
        self.log_target_minus_proposal = target - proposal.log_density(&self.current, series);
        Ok(())
    }
}

/// Outcome of one update attempt. A proposal that cannot be constructed
/// (unreachable endpoints under the current parameters, or a truncated
/// series) counts as a rejection and is reported separately so callers can
/// track saturation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MhOutcome {
    Accepted,
    Rejected,
    ProposalFailed,
}

/// Log acceptance ratio for swapping `current` for `proposed` under the
/// homogeneous Markov proposal. Negative infinity means auto-reject.
pub fn log_accept_ratio(
    current: &Trajectory,
    proposed: &Trajectory,
    model: &ModelParams,
    proposal: &MarkovParams,
) -> Result<f64> {
    let current_target = model.log_density(current);
    if current_target == f64::NEG_INFINITY || current_target.is_nan() {
        return Err(Error::InvalidChainState);
    }
    let proposed_target = model.log_density(proposed);
    if proposed_target == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let proposed_value = proposed_target - log_density_markov(proposed, proposal);
    let current_value = current_target - log_density_markov(current, proposal);
    Ok(proposed_value - current_value)
}

/// One Metropolis-Hastings attempt. On acceptance the state and its cache
/// are replaced by the proposed trajectory's values.
pub fn mh_update<R: Rng + ?Sized>(
    series: &PanelSeries,
    state: &mut TrajectoryState,
    model: &ModelParams,
    proposal: &ProposalProcess,
    rng: &mut R,
) -> Result<MhOutcome> {
    debug_assert!({
        let fresh = model.log_density(&state.current) - proposal.log_density(&state.current, series);
        (fresh - state.log_target_minus_proposal).abs() < 1e-9
    });

    let proposed = match proposal.propose(series, rng) {
        Ok(t) => t,
        Err(Error::UnreachableEndpoints { .. })
        | Err(Error::SeriesCapExceeded { .. })
        | Err(Error::NoPathToAbsorbing(_)) => return Ok(MhOutcome::ProposalFailed),
        Err(e) => return Err(e),
    };
    let proposed_target = model.log_density(&proposed);
    if proposed_target.is_nan() {
        return Err(Error::InvalidChainState);
    }
    let omega: f64 = rng.random();
    if proposed_target == f64::NEG_INFINITY {
        return Ok(MhOutcome::Rejected);
    }
    let proposed_value = proposed_target - proposal.log_density(&proposed, series);
    let log_ratio = proposed_value - state.log_target_minus_proposal;
    if omega.ln() < log_ratio {
        state.current = proposed;
        state.log_target_minus_proposal = proposed_value;
        Ok(MhOutcome::Accepted)
    } else {
        Ok(MhOutcome::Rejected)
    }
}
