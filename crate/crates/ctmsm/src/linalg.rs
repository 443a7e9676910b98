//! Rate matrices, uniformization, and transition probabilities for
//! homogeneous continuous-time Markov chains.
//!
//! Transition probabilities are evaluated through the uniformization series
//! rather than scaling-and-squaring: the series reuses the jump-matrix power
//! cache that the endpoint-conditioned sampler needs anyway, its terms are
//! nonnegative so no cancellation can occur, and the truncation error carries
//! an explicit Poisson tail bound.

use std::ops::{Index, IndexMut};
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};

/// Tolerance on the Poisson tail mass left out of a truncated series.
pub const SERIES_TAIL_TOL: f64 = 1e-12;

/// Probabilities below this are treated as unreachable endpoints.
pub const REACHABILITY_FLOOR: f64 = 1e-300;

const ROW_SUM_ERROR: f64 = 1e-9;
const ROW_SUM_RENORM: f64 = 1e-12;
const NEGATIVE_CLAMP: f64 = -1e-15;

/// Dense row-major square matrix. State spaces here are small, so no
/// sparsity or BLAS; plain loops keep everything predictable.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidParams(format!(
                    "row {r} has {} entries, expected {n}",
                    row.len()
                )));
            }
            m.data[r * n..(r + 1) * n].copy_from_slice(row);
        }
        Ok(m)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.n..(r + 1) * self.n]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.n..(r + 1) * self.n]
    }

    pub fn matmul(&self, other: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let dst = &mut out.data[i * n..(i + 1) * n];
                let src = &other.data[k * n..(k + 1) * n];
                for j in 0..n {
                    dst[j] += a * src[j];
                }
            }
        }
        out
    }

    /// `self += w * other`, used to accumulate series terms.
    fn add_scaled(&mut self, w: f64, other: &SquareMatrix) {
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += w * b;
        }
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.n + c]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.n + c]
    }
}

/// Generator of a homogeneous chain: nonnegative off-diagonal rates, each
/// diagonal entry the negated sum of its row's off-diagonals, absorbing
/// states identified by a zero exit rate.
#[derive(Clone, Debug, PartialEq)]
pub struct RateMatrix {
    entries: SquareMatrix,
    exit_rates: Vec<f64>,
}

impl RateMatrix {
    /// Assemble a generator from embedded transition probabilities and
    /// per-state exit rates: off-diagonals `gamma_r * p_rs`, diagonal the
    /// negated off-diagonal sum. Absorbing states are flagged by a zero
    /// exit rate and produce identically zero rows.
    pub fn build(probs: &SquareMatrix, exit_rates: &[f64]) -> Result<Self> {
        let n = probs.size();
        if n < 2 {
            return Err(Error::StateSpaceTooSmall { min: 2, got: n });
        }
        if exit_rates.len() != n {
            return Err(Error::InvalidParams(format!(
                "got {} exit rates for {n} states",
                exit_rates.len()
            )));
        }
        let mut entries = SquareMatrix::zeros(n);
        for r in 0..n {
            let gamma = exit_rates[r];
            if gamma < 0.0 || !gamma.is_finite() {
                return Err(Error::NegativeRate {
                    state: r,
                    value: gamma,
                });
            }
            if gamma == 0.0 {
                continue; // absorbing row stays zero
            }
            let row = probs.row(r);
            if row[r].abs() > 1e-12 {
                return Err(Error::InvalidParams(format!(
                    "transition probability matrix has nonzero diagonal {} in row {r}",
                    row[r]
                )));
            }
            let mut sum = 0.0;
            for (s, &p) in row.iter().enumerate() {
                if s == r {
                    continue;
                }
                if p < 0.0 {
                    return Err(Error::InvalidParams(format!(
                        "negative transition probability {p} at ({r}, {s})"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_SUM_ERROR {
                return Err(Error::RowSumViolation { row: r, sum });
            }
            let mut offdiag_sum = 0.0;
            for s in 0..n {
                if s == r {
                    continue;
                }
                let rate = gamma * row[s];
                entries[(r, s)] = rate;
                offdiag_sum += rate;
            }
            entries[(r, r)] = -offdiag_sum;
        }
        Self::from_generator(entries)
    }

    /// Validate a raw generator. Off-diagonals must be nonnegative; the
    /// diagonal is recomputed as the negated off-diagonal sum so rows sum
    /// to zero exactly, and the original diagonal must agree within 1e-9.
    pub fn from_generator(mut entries: SquareMatrix) -> Result<Self> {
        let n = entries.size();
        if n < 2 {
            return Err(Error::StateSpaceTooSmall { min: 2, got: n });
        }
        let mut exit_rates = vec![0.0; n];
        for r in 0..n {
            let mut offdiag_sum = 0.0;
            for s in 0..n {
                if s == r {
                    continue;
                }
                let v = entries[(r, s)];
                if !v.is_finite() || v < -1e-12 {
                    return Err(Error::NegativeRate { state: r, value: v });
                }
                if v < 0.0 {
                    entries[(r, s)] = 0.0;
                    continue;
                }
                offdiag_sum += v;
            }
            let residual = entries[(r, r)] + offdiag_sum;
            if residual.abs() > ROW_SUM_ERROR * (1.0 + offdiag_sum) {
                return Err(Error::RowSumViolation {
                    row: r,
                    sum: residual,
                });
            }
            entries[(r, r)] = -offdiag_sum;
            exit_rates[r] = offdiag_sum;
        }
        Ok(Self {
            entries,
            exit_rates,
        })
    }

    pub fn size(&self) -> usize {
        self.entries.size()
    }

    pub fn entries(&self) -> &SquareMatrix {
        &self.entries
    }

    /// Rate of the `from -> to` transition (the diagonal is negative).
    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.entries[(from, to)]
    }

    pub fn exit_rate(&self, state: usize) -> f64 {
        self.exit_rates[state]
    }

    pub fn is_absorbing(&self, state: usize) -> bool {
        self.exit_rates[state] == 0.0
    }

    pub fn absorbing_states(&self) -> Vec<usize> {
        (0..self.size()).filter(|&r| self.is_absorbing(r)).collect()
    }

    /// Dominating rate `max_r gamma_r`; zero only for an all-absorbing chain.
    pub fn dominating_rate(&self) -> f64 {
        self.exit_rates.iter().cloned().fold(0.0, f64::max)
    }

    pub fn uniformize(&self) -> Result<UniformizedChain> {
        UniformizedChain::new(self)
    }

    /// `exp(t G)` via a one-off uniformization. Callers evaluating many
    /// durations should hold a [`UniformizedChain`] to reuse its powers.
    pub fn transition_probability(&self, t: f64) -> Result<SquareMatrix> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        if self.dominating_rate() == 0.0 {
            return Ok(SquareMatrix::identity(self.size()));
        }
        self.uniformize()?.transition_probability(t)
    }
}

/// Uniformized representation of a generator: dominating rate `mu`, the
/// row-stochastic jump matrix `R = I + G / mu`, and a lazily grown cache of
/// its powers. The cache may be read concurrently; growth happens under a
/// write lock.
#[derive(Debug)]
pub struct UniformizedChain {
    mu: f64,
    jump_matrix: SquareMatrix,
    powers: RwLock<Vec<Arc<SquareMatrix>>>,
}

impl UniformizedChain {
    pub fn new(generator: &RateMatrix) -> Result<Self> {
        let n = generator.size();
        let mu = generator.dominating_rate();
        if mu == 0.0 {
            return Err(Error::AllZeroGenerator);
        }
        let mut jump = SquareMatrix::zeros(n);
        for r in 0..n {
            let mut sum = 0.0;
            for s in 0..n {
                let mut v = if r == s {
                    1.0 + generator.rate(r, s) / mu
                } else {
                    generator.rate(r, s) / mu
                };
                if v < 0.0 {
                    if v < NEGATIVE_CLAMP {
                        return Err(Error::NegativeRate { state: r, value: v });
                    }
                    v = 0.0;
                }
                jump[(r, s)] = v;
                sum += v;
            }
            let off = (sum - 1.0).abs();
            if off > ROW_SUM_ERROR {
                return Err(Error::RowSumViolation { row: r, sum });
            }
            if off > ROW_SUM_RENORM {
                for s in 0..n {
                    jump[(r, s)] /= sum;
                }
            }
        }
        Ok(Self {
            mu,
            jump_matrix: jump,
            powers: RwLock::new(vec![Arc::new(SquareMatrix::identity(n))]),
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn size(&self) -> usize {
        self.jump_matrix.size()
    }

    pub fn jump_matrix(&self) -> &SquareMatrix {
        &self.jump_matrix
    }

    /// `R^k`, growing the cache on demand.
    pub fn power(&self, k: usize) -> Arc<SquareMatrix> {
        {
            let cache = self.powers.read().expect("power cache poisoned");
            if k < cache.len() {
                return Arc::clone(&cache[k]);
            }
        }
        let mut cache = self.powers.write().expect("power cache poisoned");
        while cache.len() <= k {
            let next = cache.last().expect("cache seeded").matmul(&self.jump_matrix);
            cache.push(Arc::new(next));
        }
        Arc::clone(&cache[k])
    }

    /// Hard cap on series length for a Poisson rate `mu * t`.
    pub fn series_cap(rate: f64) -> usize {
        let cap = rate + 12.0 * rate.sqrt() + 20.0;
        (cap.ceil() as usize).max(50)
    }

    /// `exp(t G)` summed as `sum_n e^{-mu t} (mu t)^n / n! R^n`, truncated
    /// once the Poisson tail bound falls below [`SERIES_TAIL_TOL`]. All
    /// series terms are nonnegative, so entries stay in `[0, 1]` without
    /// cancellation; tiny negative rounding is clamped anyway.
    pub fn transition_probability(&self, t: f64) -> Result<SquareMatrix> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let rate = self.mu * t;
        if rate == 0.0 {
            return Ok(SquareMatrix::identity(self.size()));
        }
        let cap = Self::series_cap(rate);
        let mut series = PoissonTerms::new(rate)?;
        let mut out = SquareMatrix::zeros(self.size());
        loop {
            out.add_scaled(series.weight(), &self.power(series.index()));
            if series.tail_bound() < SERIES_TAIL_TOL {
                break;
            }
            if series.index() >= cap {
                return Err(Error::SeriesCapExceeded {
                    cap,
                    tail_bound: series.tail_bound(),
                });
            }
            series.advance();
        }
        // Terms are nonnegative, so negatives can only be rounding debris.
        for v in out.data.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        Ok(out)
    }
}

/// Iterator over Poisson(rate) probability masses `w_n` with a rigorous
/// bound on the remaining tail. The bound switches from `1 - cumsum` to a
/// geometric-ratio bound once the cumulative sum approaches 1, where direct
/// subtraction would lose all precision.
pub struct PoissonTerms {
    rate: f64,
    n: usize,
    weight: f64,
    cum: f64,
}

impl PoissonTerms {
    pub fn new(rate: f64) -> Result<Self> {
        let w0 = (-rate).exp();
        if w0 == 0.0 {
            // e^{-rate} underflowed; the direct series cannot start.
            return Err(Error::SeriesCapExceeded {
                cap: 0,
                tail_bound: 1.0,
            });
        }
        Ok(Self {
            rate,
            n: 0,
            weight: w0,
            cum: w0,
        })
    }

    pub fn index(&self) -> usize {
        self.n
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn advance(&mut self) {
        self.n += 1;
        self.weight *= self.rate / self.n as f64;
        self.cum += self.weight;
    }

    /// Upper bound on `P(N > n)` after the current term.
    pub fn tail_bound(&self) -> f64 {
        let direct = 1.0 - self.cum;
        if self.cum < 0.5 {
            return direct.max(0.0);
        }
        let ratio = self.rate / (self.n as f64 + 2.0);
        if ratio < 1.0 {
            // w_{n+k} <= w_{n+1} * ratio^{k-1}, so the tail is geometric.
            let geometric = self.weight * ratio / (1.0 - ratio);
            geometric.min(direct.max(0.0)).max(0.0)
        } else {
            direct.max(0.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> RateMatrix {
        let p = SquareMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        RateMatrix::build(&p, &[1.0, 2.0]).unwrap()
    }

    #[test]
    fn build_two_state_generator() {
        let g = two_state();
        assert_eq!(g.rate(0, 0), -1.0);
        assert_eq!(g.rate(0, 1), 1.0);
        assert_eq!(g.rate(1, 0), 2.0);
        assert_eq!(g.rate(1, 1), -2.0);
    }

    #[test]
    fn absorbing_row_is_zero() {
        let p = SquareMatrix::from_rows(&[
            vec![0.0, 0.7, 0.3],
            vec![0.4, 0.0, 0.6],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        let g = RateMatrix::build(&p, &[0.5, 0.8, 0.0]).unwrap();
        for s in 0..3 {
            assert_eq!(g.rate(2, s), 0.0);
        }
        assert!(g.is_absorbing(2));
        assert_eq!(g.absorbing_states(), vec![2]);
    }

    #[test]
    fn sim_design_rates() {
        // Exit rate 0.30 with p_13 = 0.05/0.30 puts 0.05 on the 1 -> 3 rate.
        let p = SquareMatrix::from_rows(&[
            vec![0.0, 0.25 / 0.30, 0.05 / 0.30],
            vec![0.04 / 0.14, 0.0, 0.10 / 0.14],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        let g = RateMatrix::build(&p, &[0.30, 0.14, 0.0]).unwrap();
        assert!((g.rate(0, 2) - 0.05).abs() < 1e-15);
        assert!((g.rate(0, 1) - 0.25).abs() < 1e-15);
        assert!((g.rate(1, 2) - 0.10).abs() < 1e-15);
    }

    #[test]
    fn build_rejects_bad_input() {
        let p = SquareMatrix::from_rows(&[vec![0.0, 0.9], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            RateMatrix::build(&p, &[1.0, 1.0]),
            Err(Error::RowSumViolation { row: 0, .. })
        ));
        let ok = SquareMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            RateMatrix::build(&ok, &[-0.5, 1.0]),
            Err(Error::NegativeRate { state: 0, .. })
        ));
        let one = SquareMatrix::from_rows(&[vec![0.0]]).unwrap();
        assert!(matches!(
            RateMatrix::build(&one, &[1.0]),
            Err(Error::StateSpaceTooSmall { .. })
        ));
    }

    #[test]
    fn uniformize_two_state() {
        let chain = two_state().uniformize().unwrap();
        assert_eq!(chain.mu(), 2.0);
        let r = chain.jump_matrix();
        assert_eq!(r[(0, 0)], 0.5);
        assert_eq!(r[(0, 1)], 0.5);
        assert_eq!(r[(1, 0)], 1.0);
        assert_eq!(r[(1, 1)], 0.0);
    }

    #[test]
    fn uniformize_absorbing_row_is_unit_vector() {
        let p = SquareMatrix::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![0.5, 0.0, 0.5],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        let g = RateMatrix::build(&p, &[1.0, 2.0, 0.0]).unwrap();
        let chain = g.uniformize().unwrap();
        let r = chain.jump_matrix();
        assert_eq!(r.row(2), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn uniformize_rows_sum_to_one() {
        let p = SquareMatrix::from_rows(&[
            vec![0.0, 0.3, 0.7],
            vec![0.25, 0.0, 0.75],
            vec![0.6, 0.4, 0.0],
        ])
        .unwrap();
        let g = RateMatrix::build(&p, &[0.9, 1.7, 0.3]).unwrap();
        let chain = g.uniformize().unwrap();
        for r in 0..3 {
            let sum: f64 = chain.jump_matrix().row(r).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "row {r} sums to {sum}");
        }
    }

    #[test]
    fn uniformize_rejects_all_zero() {
        let p = SquareMatrix::zeros(2);
        let g = RateMatrix::build(&p, &[0.0, 0.0]).unwrap();
        assert!(matches!(g.uniformize(), Err(Error::AllZeroGenerator)));
    }

    #[test]
    fn uniformize_roundtrips_rates() {
        let p = SquareMatrix::from_rows(&[
            vec![0.0, 0.3, 0.7],
            vec![0.25, 0.0, 0.75],
            vec![0.6, 0.4, 0.0],
        ])
        .unwrap();
        let g = RateMatrix::build(&p, &[0.9, 1.7, 0.3]).unwrap();
        let chain = g.uniformize().unwrap();
        let r = chain.jump_matrix();
        for a in 0..3 {
            for b in 0..3 {
                if a == b {
                    continue;
                }
                let recovered = chain.mu() * r[(a, b)];
                assert!(
                    (recovered - g.rate(a, b)).abs() < 1e-12,
                    "rate ({a},{b}): {recovered} vs {}",
                    g.rate(a, b)
                );
            }
        }
    }

    #[test]
    fn transition_probability_at_zero_is_identity() {
        let g = two_state();
        let p = g.transition_probability(0.0).unwrap();
        assert_eq!(p, SquareMatrix::identity(2));
    }

    #[test]
    fn transition_probability_matches_closed_form() {
        // Symmetric two-state chain at rate 1: p_11(t) = (1 + e^{-2t}) / 2.
        let p = SquareMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let g = RateMatrix::build(&p, &[1.0, 1.0]).unwrap();
        for &t in &[0.5, 1.0, 2.0] {
            let m = g.transition_probability(t).unwrap();
            let expected = (1.0 + (-2.0 * t).exp()) / 2.0;
            assert!(
                (m[(0, 0)] - expected).abs() < 1e-12,
                "t={t}: {} vs {expected}",
                m[(0, 0)]
            );
            assert!((m[(1, 1)] - expected).abs() < 1e-12);
            assert!((m[(0, 1)] - (1.0 - expected)).abs() < 1e-12);
        }
    }

    #[test]
    fn transition_probability_rejects_negative_time() {
        assert!(matches!(
            two_state().transition_probability(-0.1),
            Err(Error::NegativeTime(_))
        ));
    }

    #[test]
    fn transition_probability_rows_are_stochastic() {
        let p = SquareMatrix::from_rows(&[
            vec![0.0, 0.2, 0.8],
            vec![0.5, 0.0, 0.5],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        let g = RateMatrix::build(&p, &[1.3, 0.4, 0.0]).unwrap();
        for &t in &[0.01, 0.5, 3.0, 25.0] {
            let m = g.transition_probability(t).unwrap();
            for r in 0..3 {
                let sum: f64 = m.row(r).iter().sum();
                assert!((sum - 1.0).abs() < 1e-10, "t={t} row {r}: {sum}");
                assert!(m.row(r).iter().all(|&x| x >= 0.0));
            }
        }
    }

    #[test]
    fn semigroup_property_holds() {
        let p = SquareMatrix::from_rows(&[
            vec![0.0, 0.6, 0.4],
            vec![0.1, 0.0, 0.9],
            vec![0.5, 0.5, 0.0],
        ])
        .unwrap();
        let g = RateMatrix::build(&p, &[0.7, 1.1, 0.2]).unwrap();
        let chain = g.uniformize().unwrap();
        for &(s, t) in &[(0.3, 0.9), (1.0, 1.0), (0.05, 2.4)] {
            let lhs = chain.transition_probability(s + t).unwrap();
            let rhs = chain
                .transition_probability(s)
                .unwrap()
                .matmul(&chain.transition_probability(t).unwrap());
            for r in 0..3 {
                for c in 0..3 {
                    assert!(
                        (lhs[(r, c)] - rhs[(r, c)]).abs() < 1e-8,
                        "({r},{c}) at s={s}, t={t}"
                    );
                }
            }
        }
    }

    #[test]
    fn poisson_tail_bound_is_valid() {
        for &rate in &[0.1, 1.0, 7.5, 40.0] {
            let mut terms = PoissonTerms::new(rate).unwrap();
            for _ in 0..200 {
                terms.advance();
            }
            // After 200 terms the tail is far below tolerance for these rates.
            assert!(terms.tail_bound() < SERIES_TAIL_TOL);
        }
    }

    #[test]
    fn power_cache_is_consistent() {
        let chain = two_state().uniformize().unwrap();
        let direct = chain
            .jump_matrix()
            .matmul(chain.jump_matrix())
            .matmul(chain.jump_matrix());
        let cached = chain.power(3);
        assert_eq!(*cached, direct);
        assert_eq!(*chain.power(0), SquareMatrix::identity(2));
    }
}
