//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("state space must have at least {min} states, got {got}")]
    StateSpaceTooSmall { min: usize, got: usize },
    #[error("negative rate {value} for state {state}")]
    NegativeRate { state: usize, value: f64 },
    #[error("row {row} of the transition probability matrix sums to {sum}, expected 1")]
    RowSumViolation { row: usize, sum: f64 },
    #[error("generator has no dynamics (every exit rate is zero)")]
    AllZeroGenerator,
    #[error("negative duration {0}")]
    NegativeTime(f64),
    #[error("uniformization series hit the cap of {cap} terms (achieved tail bound {tail_bound:e})")]
    SeriesCapExceeded { cap: usize, tail_bound: f64 },
    #[error("state {from} cannot reach state {to} over an interval of length {dt}")]
    UnreachableEndpoints { from: usize, to: usize, dt: f64 },
    #[error("no state has a positive rate into absorbing state {0}")]
    NoPathToAbsorbing(usize),
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("current trajectory has zero density under the model; the chain state is invalid")]
    InvalidChainState,
    #[error("posterior draws are empty")]
    EmptyDraws,
    #[error("need at least {min} draws, got {got}")]
    TooFewDraws { min: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("panel data error at line {line}: {message}")]
    PanelFormat { line: usize, message: String },
    #[error("invalid panel data: {0}")]
    InvalidPanel(String),
    #[error(
        "trajectory proposals failed for more than half the individuals over {sweeps} \
         consecutive sweeps (last sweep: {failures} of {individuals})"
    )]
    ProposalSaturation {
        sweeps: usize,
        failures: usize,
        individuals: usize,
    },
    #[error("sampler initialization failed: {0}")]
    InitializationFailure(String),
    #[error("forward simulation exceeded {0} jumps")]
    JumpCapExceeded(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// CLI exit code: 2 for input problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::StateSpaceTooSmall { .. }
            | Error::NegativeRate { .. }
            | Error::RowSumViolation { .. }
            | Error::InvalidTrajectory(_)
            | Error::InvalidParams(_)
            | Error::EmptyDraws
            | Error::TooFewDraws { .. }
            | Error::InvalidConfig(_)
            | Error::PanelFormat { .. }
            | Error::InvalidPanel(_)
            | Error::Io(_) => 2,
            Error::AllZeroGenerator
            | Error::NegativeTime(_)
            | Error::SeriesCapExceeded { .. }
            | Error::UnreachableEndpoints { .. }
            | Error::NoPathToAbsorbing(_)
            | Error::InvalidChainState
            | Error::ProposalSaturation { .. }
            | Error::InitializationFailure(_)
            | Error::JumpCapExceeded(_) => 3,
        }
    }

    /// Short machine-readable tag used in error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::StateSpaceTooSmall { .. } => "state_space_too_small",
            Error::NegativeRate { .. } => "negative_rate",
            Error::RowSumViolation { .. } => "row_sum_violation",
            Error::AllZeroGenerator => "all_zero_generator",
            Error::NegativeTime(_) => "negative_time",
            Error::SeriesCapExceeded { .. } => "series_cap_exceeded",
            Error::UnreachableEndpoints { .. } => "unreachable_endpoints",
            Error::NoPathToAbsorbing(_) => "no_path_to_absorbing",
            Error::InvalidTrajectory(_) => "invalid_trajectory",
            Error::InvalidParams(_) => "invalid_params",
            Error::InvalidChainState => "invalid_chain_state",
            Error::EmptyDraws => "empty_draws",
            Error::TooFewDraws { .. } => "too_few_draws",
            Error::InvalidConfig(_) => "invalid_config",
            Error::PanelFormat { .. } => "panel_format",
            Error::InvalidPanel(_) => "invalid_panel",
            Error::ProposalSaturation { .. } => "proposal_saturation",
            Error::InitializationFailure(_) => "initialization_failure",
            Error::JumpCapExceeded(_) => "jump_cap_exceeded",
            Error::Io(_) => "io",
        }
    }
}
