//! Exact simulation of homogeneous Markov trajectories conditioned on both
//! endpoints, via uniformization.
//!
//! A path on `[u, v]` given `Y(u) = r` and `Y(v) = s` is produced in three
//! steps: draw the number `N` of candidate change points (virtual ones
//! included) from its endpoint-conditioned law, place the change points as
//! sorted uniforms on `[u, v]`, then run the embedded chain conditioned to
//! land in `s`, discarding every virtual (self) change at the end. A
//! variant conditions on absorption happening exactly at `v`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{RateMatrix, UniformizedChain, REACHABILITY_FLOOR, SERIES_TAIL_TOL};
use crate::linalg::PoissonTerms;
use crate::model::{EndKind, Trajectory};
use crate::panel::PanelSeries;

/// A conditioned piece of path on `[start_time, end_time]`: the start state
/// and the ordered real jumps. Jump times are strictly inside the interval
/// except that a final jump into an absorbing state may sit exactly at the
/// end.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSegment {
    pub start_time: f64,
    pub end_time: f64,
    pub start_state: usize,
    pub jumps: Vec<(f64, usize)>,
}

impl PathSegment {
    pub fn end_state(&self) -> usize {
        self.jumps.last().map_or(self.start_state, |&(_, s)| s)
    }

    pub fn n_jumps(&self) -> usize {
        self.jumps.len()
    }
}

/// Draw the number of candidate change points (virtual included) on an
/// interval of length `dt` given both endpoints. The law is the Poisson
/// mass times `R^n[from, to]`, normalized by the series total; the
/// cumulative sum is inverted with powers grown on demand.
pub fn sample_jump_count<R: Rng + ?Sized>(
    chain: &UniformizedChain,
    dt: f64,
    from: usize,
    to: usize,
    rng: &mut R,
) -> Result<usize> {
    if dt < 0.0 {
        return Err(Error::NegativeTime(dt));
    }
    let rate = chain.mu() * dt;
    if rate == 0.0 {
        return if from == to {
            Ok(0)
        } else {
            Err(Error::UnreachableEndpoints { from, to, dt })
        };
    }
    let cap = UniformizedChain::series_cap(rate);
    let mut series = PoissonTerms::new(rate).map_err(|_| Error::SeriesCapExceeded {
        cap,
        tail_bound: 1.0,
    })?;

    // First pass: accumulate terms until the Poisson tail is negligible
    // relative to the mass already collected. A relative cutoff keeps the
    // conditional law correct even when the endpoint probability is tiny.
    let mut terms: Vec<f64> = Vec::with_capacity(32);
    let mut collected = 0.0;
    let total = loop {
        let term = series.weight() * chain.power(series.index())[(from, to)];
        terms.push(term);
        collected += term;
        if series.tail_bound() < SERIES_TAIL_TOL * collected.max(REACHABILITY_FLOOR) {
            break collected;
        }
        if series.index() >= cap {
            if collected > 0.0 && series.tail_bound() < SERIES_TAIL_TOL {
                // Absolute tail already negligible; accept the truncation.
                break collected;
            }
            return Err(Error::SeriesCapExceeded {
                cap,
                tail_bound: series.tail_bound(),
            });
        }
        series.advance();
    };
    if total < REACHABILITY_FLOOR {
        return Err(Error::UnreachableEndpoints { from, to, dt });
    }

    // Invert the cumulative law.
    let target = rng.random::<f64>() * total;
    let mut cum = 0.0;
    for (n, &term) in terms.iter().enumerate() {
        cum += term;
        if cum >= target {
            return Ok(n);
        }
    }
    Ok(terms.len() - 1)
}

/// Sorted i.i.d. uniforms on the open interval, with floating-point ties
/// (or boundary hits) broken by re-drawing the offending value.
fn sorted_uniforms<R: Rng + ?Sized>(n: usize, lo: f64, hi: f64, rng: &mut R) -> Vec<f64> {
    let mut times: Vec<f64> = (0..n)
        .map(|_| lo + (hi - lo) * rng.random::<f64>())
        .collect();
    times.sort_by(f64::total_cmp);
    loop {
        let mut clean = true;
        for i in 0..times.len() {
            let collides = times[i] <= lo
                || times[i] >= hi
                || (i > 0 && times[i] == times[i - 1]);
            if collides {
                times[i] = lo + (hi - lo) * rng.random::<f64>();
                clean = false;
            }
        }
        if clean {
            return times;
        }
        times.sort_by(f64::total_cmp);
    }
}

/// Exact endpoint-conditioned segment on `[u, v]` from `from` to `to`.
pub fn sample_conditioned_segment<R: Rng + ?Sized>(
    chain: &UniformizedChain,
    u: f64,
    v: f64,
    from: usize,
    to: usize,
    rng: &mut R,
) -> Result<PathSegment> {
    let n = sample_jump_count(chain, v - u, from, to, rng)?;
    let times = sorted_uniforms(n, u, v, rng);

    // Conditioned embedded chain: at step i the next candidate state is
    // drawn with weight R[cur, a] * R^{n-i}[a, to]; the final step is
    // forced onto `to` by the vanishing power.
    let size = chain.size();
    let mut jumps = Vec::new();
    let mut current = from;
    for (i, &z) in times.iter().enumerate() {
        let steps_left = n - (i + 1);
        let future = chain.power(steps_left);
        let row = chain.jump_matrix().row(current);
        let mut weights = vec![0.0; size];
        let mut total = 0.0;
        for a in 0..size {
            let w = row[a] * future[(a, to)];
            weights[a] = w;
            total += w;
        }
        if total <= 0.0 {
            // Cannot happen for a count drawn from the conditioned law.
            return Err(Error::UnreachableEndpoints {
                from: current,
                to,
                dt: v - z,
            });
        }
        let mut pick = rng.random::<f64>() * total;
        let mut next = current;
        for (a, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            pick -= w;
            next = a;
            if pick <= 0.0 {
                break;
            }
        }
        if next != current {
            jumps.push((z, next));
            current = next;
        }
    }
    debug_assert_eq!(current, to, "conditioned chain must land on the endpoint");
    Ok(PathSegment {
        start_time: u,
        end_time: v,
        start_state: from,
        jumps,
    })
}

/// Segment on `[u, v]` conditioned on absorption happening exactly at `v`.
/// The last transient state is drawn with weight `p_{from,s}(v-u) *
/// gamma_{s -> absorbing}`, a bridge into it fills `[u, v]`, and the final
/// jump into the absorbing state is appended at exactly `v`.
pub fn sample_segment_to_absorption<R: Rng + ?Sized>(
    chain: &UniformizedChain,
    generator: &RateMatrix,
    u: f64,
    v: f64,
    from: usize,
    absorbing: usize,
    rng: &mut R,
) -> Result<PathSegment> {
    if !generator.is_absorbing(absorbing) {
        return Err(Error::InvalidParams(format!(
            "state {absorbing} is not absorbing"
        )));
    }
    if generator.is_absorbing(from) {
        return Err(Error::InvalidParams(format!(
            "start state {from} is absorbing"
        )));
    }
    let probs = chain.transition_probability(v - u)?;
    let size = generator.size();
    let mut weights = vec![0.0; size];
    let mut total = 0.0;
    for s in 0..size {
        if s == absorbing {
            continue;
        }
        let w = probs[(from, s)] * generator.rate(s, absorbing);
        weights[s] = w;
        total += w;
    }
    if total <= 0.0 {
        return Err(Error::NoPathToAbsorbing(absorbing));
    }
    let mut pick = rng.random::<f64>() * total;
    let mut last = from;
    for (s, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        pick -= w;
        last = s;
        if pick <= 0.0 {
            break;
        }
    }
    let mut segment = sample_conditioned_segment(chain, u, v, from, last, rng)?;
    segment.jumps.push((v, absorbing));
    Ok(segment)
}

/// Propose a complete latent trajectory consistent with every panel
/// observation by bridging each interval under one homogeneous proposal
/// chain.
pub fn sample_full_proposal<R: Rng + ?Sized>(
    chain: &UniformizedChain,
    generator: &RateMatrix,
    series: &PanelSeries,
    rng: &mut R,
) -> Result<Trajectory> {
    let mut per_interval = |_interval: usize| (chain, generator);
    sample_proposal_with(&mut per_interval, series, rng)
}

/// Generalized proposal where each panel interval may use its own chain
/// (the piecewise-homogeneous proposal for strongly time-dependent rates).
pub fn sample_proposal_with<'a, R, F>(
    chain_for_interval: &mut F,
    series: &PanelSeries,
    rng: &mut R,
) -> Result<Trajectory>
where
    R: Rng + ?Sized,
    F: FnMut(usize) -> (&'a UniformizedChain, &'a RateMatrix),
{
    let m = series.n_intervals();
    let mut jumps: Vec<(f64, usize)> = Vec::new();
    for (i, (t_prev, t_next, x_prev, x_next)) in series.intervals().enumerate() {
        let (chain, generator) = chain_for_interval(i);
        let last = i + 1 == m;
        let segment = if last && series.end_kind == EndKind::AbsorbedExact {
            sample_segment_to_absorption(chain, generator, t_prev, t_next, x_prev, x_next, rng)?
        } else {
            sample_conditioned_segment(chain, t_prev, t_next, x_prev, x_next, rng)?
        };
        jumps.extend(segment.jumps);
    }

    let end_kind = series.end_kind;
    let end_time = match end_kind {
        EndKind::Censored => series.horizon(),
        EndKind::AbsorbedExact => series.horizon(),
        // The bridge realized the absorption time as the last real jump
        // inside the final interval.
        EndKind::AbsorbedInInterval => {
            jumps
                .last()
                .map(|&(z, _)| z)
                .ok_or_else(|| Error::InvalidTrajectory(
                    "interval-censored death series produced no jumps".into(),
                ))?
        }
    };
    Ok(Trajectory {
        initial_state: series.states[0],
        jumps,
        end_time,
        end_kind,
    })
}
