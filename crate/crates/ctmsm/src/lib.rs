//! Bayesian inference for continuous-time multi-state models observed as
//! panel data.
//!
//! The process is only seen at discrete visit times, so the likelihood of a
//! semi-Markov or time-inhomogeneous model has no closed form. This crate
//! reconstructs the latent continuous-time trajectories inside a
//! Metropolis-within-Gibbs sampler: endpoint-conditioned paths of a nested
//! homogeneous Markov chain are drawn exactly by uniformization and used as
//! Metropolis-Hastings proposals for the latent paths, alternating with
//! conjugate or random-walk parameter updates.
//!
//! Three model families ship: homogeneous Markov (exponential sojourns),
//! Weibull semi-Markov (sojourn hazards depend on time in state), and
//! Gompertz time-inhomogeneous Markov (rates depend on calendar time).
//!
//! Start with the `examples/` directory: each file is a runnable tour of
//! one capability (transition probabilities, bridge sampling, forward
//! simulation, fitting each model family, predictive curves, diagnostics).
//! The `ctmsm` binary wraps the same library operations as the
//! `simulate`, `fit`, `summarize` and `replicate` subcommands.

pub mod bridge;
pub mod commands;
pub mod config;
pub mod error;
pub mod gibbs;
pub mod linalg;
pub mod mh;
pub mod model;
pub mod panel;
pub mod predictive;
pub mod rng;
pub mod summary;

pub use error::{Error, Result};
