//! Model parameter families, complete-trajectory log densities, and
//! unconditional forward simulation.
//!
//! Three families share one state-space layout: a homogeneous Markov chain
//! (exponential sojourns), a semi-Markov chain with per-state Weibull
//! sojourns, and a time-inhomogeneous Markov chain with exponential-in-time
//! (Gompertz) rate functions. Absorbing states are the all-zero rows of the
//! embedded transition matrix; their sojourn parameters are inert and pinned
//! to zero.
//!
//! Densities are accumulated entirely in log space. Trajectories with many
//! jumps underflow any direct product of the per-sojourn factors.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{RateMatrix, SquareMatrix};

/// Shape threshold below which the integrated Gompertz hazard switches to
/// its series expansion; keeps the homogeneous limit exact when the time
/// coefficient wanders near zero.
pub const GOMPERTZ_SERIES_THRESHOLD: f64 = 1e-8;

const FORWARD_JUMP_CAP: usize = 1_000_000;

/// How a trajectory ends: censored while still in a transient state,
/// absorbed at an exactly observed time, or absorbed at a latent time
/// inside the final observation interval. Either absorbed kind fixes the
/// trajectory's end time at the absorption jump.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EndKind {
    Censored,
    AbsorbedExact,
    AbsorbedInInterval,
}

impl EndKind {
    pub fn is_absorbed(self) -> bool {
        !matches!(self, EndKind::Censored)
    }
}

/// One individual's complete continuous-time path.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub initial_state: usize,
    /// Ordered jumps `(time, arrival state)`.
    pub jumps: Vec<(f64, usize)>,
    pub end_time: f64,
    pub end_kind: EndKind,
}

/// One maximal constant stretch of a trajectory. `arrival` is `None` for
/// the final censored stretch.
#[derive(Clone, Copy, Debug)]
pub struct Sojourn {
    pub state: usize,
    pub start: f64,
    pub end: f64,
    pub arrival: Option<usize>,
}

impl Sojourn {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

impl Trajectory {
    pub fn n_jumps(&self) -> usize {
        self.jumps.len()
    }

    pub fn last_state(&self) -> usize {
        self.jumps.last().map_or(self.initial_state, |&(_, s)| s)
    }

    /// State at time `t`, right-continuous at jump times.
    pub fn state_at(&self, t: f64) -> usize {
        let mut state = self.initial_state;
        for &(z, s) in &self.jumps {
            if z > t {
                break;
            }
            state = s;
        }
        state
    }

    /// Decompose into sojourns. Absorbed trajectories end with the jump
    /// into the absorbing state and carry no tail stretch; censored ones
    /// end with an open stretch in the last state.
    pub fn sojourns(&self) -> Vec<Sojourn> {
        let mut out = Vec::with_capacity(self.jumps.len() + 1);
        let mut state = self.initial_state;
        let mut start = 0.0;
        for &(z, s) in &self.jumps {
            out.push(Sojourn {
                state,
                start,
                end: z,
                arrival: Some(s),
            });
            state = s;
            start = z;
        }
        if self.end_kind == EndKind::Censored {
            out.push(Sojourn {
                state,
                start,
                end: self.end_time,
                arrival: None,
            });
        }
        out
    }

    /// Check ordering, no self-transitions, and end-kind consistency.
    pub fn validate(&self, n_states: usize) -> Result<()> {
        if self.initial_state >= n_states {
            return Err(Error::InvalidTrajectory(format!(
                "initial state {} out of range",
                self.initial_state
            )));
        }
        let mut prev_time = 0.0;
        let mut prev_state = self.initial_state;
        for &(z, s) in &self.jumps {
            if !(z > prev_time) {
                return Err(Error::InvalidTrajectory(format!(
                    "jump time {z} does not strictly increase past {prev_time}"
                )));
            }
            if s >= n_states {
                return Err(Error::InvalidTrajectory(format!("state {s} out of range")));
            }
            if s == prev_state {
                return Err(Error::InvalidTrajectory(format!(
                    "self-transition in state {s} at time {z}"
                )));
            }
            prev_time = z;
            prev_state = s;
        }
        if self.end_kind.is_absorbed() {
            match self.jumps.last() {
                Some(&(z, _)) if z == self.end_time => {}
                _ => {
                    return Err(Error::InvalidTrajectory(
                        "absorbed trajectory must end exactly at its last jump".into(),
                    ))
                }
            }
        } else if prev_time > self.end_time {
            return Err(Error::InvalidTrajectory(format!(
                "last jump {prev_time} beyond end time {}",
                self.end_time
            )));
        }
        Ok(())
    }
}

/// Homogeneous Markov parameters: embedded transition probabilities and
/// per-state exit rates.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovParams {
    pub probs: SquareMatrix,
    pub gamma: Vec<f64>,
}

impl MarkovParams {
    pub fn new(probs: SquareMatrix, gamma: Vec<f64>) -> Result<Self> {
        validate_prob_rows(&probs)?;
        let n = probs.size();
        if gamma.len() != n {
            return Err(Error::InvalidParams(format!(
                "{} rates for {n} states",
                gamma.len()
            )));
        }
        for (r, &g) in gamma.iter().enumerate() {
            let absorbing = is_absorbing_row(&probs, r);
            if absorbing && g != 0.0 {
                return Err(Error::InvalidParams(format!(
                    "absorbing state {r} must have zero exit rate, got {g}"
                )));
            }
            if !absorbing && !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "exit rate for state {r} must be positive, got {g}"
                )));
            }
        }
        Ok(Self { probs, gamma })
    }

    pub fn n_states(&self) -> usize {
        self.probs.size()
    }

    pub fn is_absorbing(&self, state: usize) -> bool {
        is_absorbing_row(&self.probs, state)
    }

    pub fn rate_matrix(&self) -> Result<RateMatrix> {
        RateMatrix::build(&self.probs, &self.gamma)
    }
}

/// Weibull semi-Markov parameters. `gamma` is the scale-rate of the
/// per-state sojourn distribution (integrated hazard `(gamma * u)^alpha`);
/// `eta = gamma^alpha` is the equivalent rate on the `u^alpha` time scale
/// and is the coordinate in which the rate update is conjugate. The two
/// are kept consistent at all times.
#[derive(Clone, Debug, PartialEq)]
pub struct WeibullSmParams {
    pub probs: SquareMatrix,
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
    eta: Vec<f64>,
}

/// `gamma^alpha` with the shape-one case kept bit-exact so the nested
/// Markov identity holds without tolerance.
pub fn pow_shape(base: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        base
    } else {
        base.powf(alpha)
    }
}

impl WeibullSmParams {
    pub fn new(probs: SquareMatrix, alpha: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        let eta = alpha
            .iter()
            .zip(gamma.iter())
            .map(|(&a, &g)| pow_shape(g, a))
            .collect();
        Self::with_eta(probs, alpha, gamma, eta)
    }

    /// Construct from the conjugate coordinate, recovering `gamma = eta^{1/alpha}`.
    pub fn from_shape_eta(probs: SquareMatrix, alpha: Vec<f64>, eta: Vec<f64>) -> Result<Self> {
        let gamma = alpha
            .iter()
            .zip(eta.iter())
            .map(|(&a, &e)| pow_shape(e, 1.0 / a))
            .collect();
        Self::with_eta(probs, alpha, gamma, eta)
    }

    fn with_eta(
        probs: SquareMatrix,
        alpha: Vec<f64>,
        gamma: Vec<f64>,
        eta: Vec<f64>,
    ) -> Result<Self> {
        validate_prob_rows(&probs)?;
        let n = probs.size();
        if alpha.len() != n || gamma.len() != n {
            return Err(Error::InvalidParams(
                "parameter vectors must match the state count".into(),
            ));
        }
        for r in 0..n {
            if is_absorbing_row(&probs, r) {
                if gamma[r] != 0.0 {
                    return Err(Error::InvalidParams(format!(
                        "absorbing state {r} must have zero rate"
                    )));
                }
                continue;
            }
            if !(alpha[r] > 0.0 && alpha[r].is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "shape for state {r} must be positive, got {}",
                    alpha[r]
                )));
            }
            if !(gamma[r] > 0.0 && gamma[r].is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "rate for state {r} must be positive, got {}",
                    gamma[r]
                )));
            }
            let expected = pow_shape(gamma[r], alpha[r]);
            if (eta[r] - expected).abs() > 1e-12 * expected.max(1.0) {
                return Err(Error::InvalidParams(format!(
                    "eta[{r}] = {} inconsistent with gamma^alpha = {expected}",
                    eta[r]
                )));
            }
        }
        Ok(Self {
            probs,
            alpha,
            gamma,
            eta,
        })
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn n_states(&self) -> usize {
        self.probs.size()
    }

    pub fn is_absorbing(&self, state: usize) -> bool {
        is_absorbing_row(&self.probs, state)
    }

    /// Markov proposal engine for this model: same embedded probabilities,
    /// exit rates equal to the scale-rates. The shapes do not enter.
    pub fn proposal_markov(&self) -> Result<MarkovParams> {
        MarkovParams::new(self.probs.clone(), self.gamma.clone())
    }
}

/// Time-inhomogeneous Markov parameters with rate functions
/// `gamma_rs(t) = p_rs * exp(beta0_r + beta1_r * t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GompertzImParams {
    pub probs: SquareMatrix,
    pub beta0: Vec<f64>,
    pub beta1: Vec<f64>,
}

impl GompertzImParams {
    pub fn new(probs: SquareMatrix, beta0: Vec<f64>, beta1: Vec<f64>) -> Result<Self> {
        validate_prob_rows(&probs)?;
        let n = probs.size();
        if beta0.len() != n || beta1.len() != n {
            return Err(Error::InvalidParams(
                "parameter vectors must match the state count".into(),
            ));
        }
        if beta0.iter().chain(beta1.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(
                "regression coefficients must be finite".into(),
            ));
        }
        Ok(Self {
            probs,
            beta0,
            beta1,
        })
    }

    pub fn n_states(&self) -> usize {
        self.probs.size()
    }

    pub fn is_absorbing(&self, state: usize) -> bool {
        is_absorbing_row(&self.probs, state)
    }

    /// Total exit rate of `state` at calendar time `t`.
    pub fn exit_rate_at(&self, state: usize, t: f64) -> f64 {
        if self.is_absorbing(state) {
            0.0
        } else {
            (self.beta0[state] + self.beta1[state] * t).exp()
        }
    }

    /// Markov proposal engine frozen at calendar time `t_star`.
    pub fn proposal_markov(&self, t_star: f64) -> Result<MarkovParams> {
        let gamma = (0..self.n_states())
            .map(|r| self.exit_rate_at(r, t_star))
            .collect();
        MarkovParams::new(self.probs.clone(), gamma)
    }
}

/// Integrated Gompertz hazard of one state over `[a, b]`. Below the series
/// threshold the exact form is 0/0, so a second-order expansion in `beta1`
/// takes over; at `beta1 = 0` it reduces bit-exactly to `e^{beta0} (b - a)`.
pub fn gompertz_integrated_hazard(beta0: f64, beta1: f64, a: f64, b: f64) -> f64 {
    if beta1.abs() < GOMPERTZ_SERIES_THRESHOLD {
        beta0.exp() * ((b - a) + beta1 * (b * b - a * a) * 0.5)
    } else {
        (beta0.exp() / beta1) * ((beta1 * b).exp() - (beta1 * a).exp())
    }
}

/// Tagged union over the three model families.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelParams {
    Markov(MarkovParams),
    WeibullSm(WeibullSmParams),
    GompertzIm(GompertzImParams),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Markov,
    WeibullSm,
    GompertzIm,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Markov => "markov",
            ModelKind::WeibullSm => "weibull-sm",
            ModelKind::GompertzIm => "gompertz-im",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "markov" => Ok(ModelKind::Markov),
            "weibull-sm" => Ok(ModelKind::WeibullSm),
            "gompertz-im" => Ok(ModelKind::GompertzIm),
            other => Err(Error::InvalidConfig(format!("unknown model kind {other}"))),
        }
    }
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Markov(_) => ModelKind::Markov,
            ModelParams::WeibullSm(_) => ModelKind::WeibullSm,
            ModelParams::GompertzIm(_) => ModelKind::GompertzIm,
        }
    }

    pub fn n_states(&self) -> usize {
        match self {
            ModelParams::Markov(p) => p.n_states(),
            ModelParams::WeibullSm(p) => p.n_states(),
            ModelParams::GompertzIm(p) => p.n_states(),
        }
    }

    pub fn probs(&self) -> &SquareMatrix {
        match self {
            ModelParams::Markov(p) => &p.probs,
            ModelParams::WeibullSm(p) => &p.probs,
            ModelParams::GompertzIm(p) => &p.probs,
        }
    }

    pub fn is_absorbing(&self, state: usize) -> bool {
        is_absorbing_row(self.probs(), state)
    }

    pub fn log_density(&self, y: &Trajectory) -> f64 {
        match self {
            ModelParams::Markov(p) => log_density_markov(y, p),
            ModelParams::WeibullSm(p) => log_density_weibull(y, p),
            ModelParams::GompertzIm(p) => log_density_gompertz(y, p),
        }
    }
}

fn validate_prob_rows(probs: &SquareMatrix) -> Result<()> {
    let n = probs.size();
    if n < 2 {
        return Err(Error::StateSpaceTooSmall { min: 2, got: n });
    }
    for r in 0..n {
        let row = probs.row(r);
        if row[r] != 0.0 {
            return Err(Error::InvalidParams(format!(
                "transition matrix diagonal must be zero, got {} in row {r}",
                row[r]
            )));
        }
        if row.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "row {r} has a negative or non-finite probability"
            )));
        }
        let sum: f64 = row.iter().sum();
        if sum != 0.0 && (sum - 1.0).abs() > 1e-9 {
            return Err(Error::RowSumViolation { row: r, sum });
        }
    }
    Ok(())
}

fn is_absorbing_row(probs: &SquareMatrix, r: usize) -> bool {
    probs.row(r).iter().all(|&p| p == 0.0)
}

/// Complete-data log density under the homogeneous Markov model. The
/// survivor factor enters only for censored trajectories; forbidden
/// transitions yield negative infinity, never NaN.
pub fn log_density_markov(y: &Trajectory, params: &MarkovParams) -> f64 {
    let mut acc = 0.0;
    for sojourn in y.sojourns() {
        let r = sojourn.state;
        let w = sojourn.duration();
        match sojourn.arrival {
            Some(s) => {
                acc += params.probs[(r, s)].ln() + params.gamma[r].ln();
                acc -= params.gamma[r] * w;
            }
            None => {
                acc -= params.gamma[r] * w;
            }
        }
    }
    acc
}

/// Complete-data log density under the Weibull semi-Markov model. With all
/// shapes equal to one this reproduces `log_density_markov` exactly: the
/// shape terms vanish and `eta` coincides bitwise with `gamma`.
pub fn log_density_weibull(y: &Trajectory, params: &WeibullSmParams) -> f64 {
    let mut acc = 0.0;
    for sojourn in y.sojourns() {
        let r = sojourn.state;
        let w = sojourn.duration();
        let alpha = params.alpha[r];
        let eta = params.eta[r];
        match sojourn.arrival {
            Some(s) => {
                acc += params.probs[(r, s)].ln() + alpha.ln() + eta.ln();
                acc += (alpha - 1.0) * w.ln();
                acc -= eta * pow_shape(w, alpha);
            }
            None => {
                acc -= eta * pow_shape(w, alpha);
            }
        }
    }
    acc
}

/// Complete-data log density under the time-inhomogeneous Gompertz model.
pub fn log_density_gompertz(y: &Trajectory, params: &GompertzImParams) -> f64 {
    let mut acc = 0.0;
    for sojourn in y.sojourns() {
        let r = sojourn.state;
        let b0 = params.beta0[r];
        let b1 = params.beta1[r];
        match sojourn.arrival {
            Some(s) => {
                acc += params.probs[(r, s)].ln();
                acc += b0 + b1 * sojourn.end;
                acc -= gompertz_integrated_hazard(b0, b1, sojourn.start, sojourn.end);
            }
            None => {
                acc -= gompertz_integrated_hazard(b0, b1, sojourn.start, sojourn.end);
            }
        }
    }
    acc
}

/// Draw an arrival state from one row of the embedded chain.
fn draw_arrival<R: Rng + ?Sized>(probs: &SquareMatrix, state: usize, rng: &mut R) -> usize {
    let row = probs.row(state);
    let total: f64 = row.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (s, &p) in row.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        u -= p;
        if u <= 0.0 {
            return s;
        }
    }
    // Rounding pushed u past the last positive entry.
    row.iter().rposition(|&p| p > 0.0).unwrap_or(state)
}

/// Simulate one unconditioned trajectory from `initial_state` up to
/// `horizon`, truncating as censored if no absorption occurred.
pub fn simulate_forward<R: Rng + ?Sized>(
    params: &ModelParams,
    initial_state: usize,
    horizon: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    if initial_state >= params.n_states() {
        return Err(Error::InvalidParams(format!(
            "initial state {initial_state} out of range"
        )));
    }
    if params.is_absorbing(initial_state) {
        return Err(Error::InvalidParams(format!(
            "initial state {initial_state} is absorbing"
        )));
    }
    if !(horizon > 0.0) {
        return Err(Error::NegativeTime(horizon));
    }

    let mut jumps = Vec::new();
    let mut state = initial_state;
    let mut now = 0.0;
    loop {
        if jumps.len() >= FORWARD_JUMP_CAP {
            return Err(Error::JumpCapExceeded(FORWARD_JUMP_CAP));
        }
        let wait = match params {
            ModelParams::Markov(p) => {
                let u: f64 = rng.random();
                Some(-u.ln() / p.gamma[state])
            }
            ModelParams::WeibullSm(p) => {
                // Survivor exp(-(gamma u)^alpha): invert via u = E^{1/alpha} / gamma.
                let u: f64 = rng.random();
                Some((-u.ln()).powf(1.0 / p.alpha[state]) / p.gamma[state])
            }
            ModelParams::GompertzIm(p) => {
                gompertz_sojourn(p.beta0[state], p.beta1[state], now, rng)
            }
        };
        let next = match wait {
            Some(w) => now + w,
            None => f64::INFINITY, // defective sojourn; the chain never moves again
        };
        if !(next <= horizon) {
            return Ok(Trajectory {
                initial_state,
                jumps,
                end_time: horizon,
                end_kind: EndKind::Censored,
            });
        }
        now = next;
        state = draw_arrival(params.probs(), state, rng);
        jumps.push((now, state));
        if params.is_absorbing(state) {
            return Ok(Trajectory {
                initial_state,
                jumps,
                end_time: now,
                end_kind: EndKind::AbsorbedExact,
            });
        }
    }
}

/// Inverse-hazard draw of a Gompertz sojourn starting at calendar time
/// `entry`. Returns `None` when the total remaining hazard is finite and
/// exhausted (possible for negative `beta1`).
fn gompertz_sojourn<R: Rng + ?Sized>(
    beta0: f64,
    beta1: f64,
    entry: f64,
    rng: &mut R,
) -> Option<f64> {
    let u: f64 = rng.random();
    let target = -u.ln();
    if beta1.abs() < GOMPERTZ_SERIES_THRESHOLD {
        return Some(target * (-(beta0 + beta1 * entry)).exp());
    }
    // Solve (e^{beta0}/beta1) (e^{beta1 (entry+w)} - e^{beta1 entry}) = target.
    let base = (beta1 * entry).exp();
    let arg = base + beta1 * (-beta0).exp() * target;
    if arg <= 0.0 {
        return None;
    }
    let w = arg.ln() / beta1 - entry;
    (w >= 0.0).then_some(w)
}
