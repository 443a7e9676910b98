//! Posterior summaries and MCMC diagnostics.

use crate::error::{Error, Result};

/// Minimum chain length for the autocorrelation-based ESS estimator.
pub const ESS_MIN_DRAWS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q975: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Type-7 quantile (linear interpolation of order statistics) of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Column-wise posterior summaries: mean, sample SD, and the 2.5% / 97.5%
/// type-7 quantiles.
pub fn summarize_columns(names: &[String], rows: &[Vec<f64>]) -> Result<Vec<ParameterSummary>> {
    if rows.is_empty() {
        return Err(Error::EmptyDraws);
    }
    let mut out = Vec::with_capacity(names.len());
    for (j, name) in names.iter().enumerate() {
        let mut column: Vec<f64> = rows.iter().map(|row| row[j]).collect();
        let m = mean(&column);
        let sd = sample_sd(&column);
        column.sort_by(f64::total_cmp);
        out.push(ParameterSummary {
            name: name.clone(),
            mean: m,
            sd,
            q025: quantile_sorted(&column, 0.025),
            q975: quantile_sorted(&column, 0.975),
        });
    }
    Ok(out)
}

fn autocovariance(xs: &[f64], m: f64, lag: usize) -> f64 {
    let n = xs.len();
    let mut acc = 0.0;
    for i in 0..n - lag {
        acc += (xs[i] - m) * (xs[i + lag] - m);
    }
    acc / n as f64
}

/// Effective sample size of one chain via the initial monotone sequence
/// estimator: pairs of autocorrelations are summed while positive and
/// forced non-increasing, and the truncated sum gives the integrated
/// autocorrelation time. Constant chains return the estimator floor of 1.
pub fn effective_sample_size(chain: &[f64]) -> Result<f64> {
    let n = chain.len();
    if n < ESS_MIN_DRAWS {
        return Err(Error::TooFewDraws {
            min: ESS_MIN_DRAWS,
            got: n,
        });
    }
    let m = mean(chain);
    let gamma0 = autocovariance(chain, m, 0);
    if gamma0 <= 0.0 || !gamma0.is_finite() {
        return Ok(1.0);
    }

    let rho = |lag: usize| -> f64 {
        if lag >= n {
            0.0
        } else {
            autocovariance(chain, m, lag) / gamma0
        }
    };

    let max_pairs = (n - 1) / 2;
    let mut sum_pairs = 0.0;
    let mut prev_pair = f64::INFINITY;
    for k in 0..max_pairs {
        let pair = rho(2 * k) + rho(2 * k + 1);
        if pair <= 0.0 {
            break;
        }
        let monotone = pair.min(prev_pair);
        sum_pairs += monotone;
        prev_pair = monotone;
    }
    let tau = (2.0 * sum_pairs - 1.0).max(1.0 / n as f64);
    Ok((n as f64 / tau).max(1.0))
}

/// One-sample Kolmogorov-Smirnov p-value of sorted data against a CDF.
/// Uses the asymptotic Kolmogorov distribution with the usual small-sample
/// correction; good enough for the 1e3..1e5 sample sizes used here.
pub fn ks_test_pvalue(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let hi = (i as f64 + 1.0) / n - f;
        let lo = f - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    kolmogorov_survival(lambda)
}

fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-8 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
pub fn chi_square_pvalue(stat: f64, dof: usize) -> f64 {
    if stat <= 0.0 {
        return 1.0;
    }
    1.0 - regularized_lower_gamma(dof as f64 / 2.0, stat / 2.0)
}

/// Regularized lower incomplete gamma P(a, x), series for x < a + 1 and
/// continued fraction otherwise.
fn regularized_lower_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let log_gamma_a = ln_gamma(a);
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..500 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-15 {
                break;
            }
        }
        (sum.ln() + a * x.ln() - x - log_gamma_a).exp()
    } else {
        // Lentz continued fraction for Q(a, x).
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-15 {
                break;
            }
        }
        let q = (a * x.ln() - x - log_gamma_a).exp() * h;
        1.0 - q
    }
}

/// Lanczos log-gamma.
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let mut y = x;
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000000000190015;
    for c in COEFFS {
        y += 1.0;
        ser += c / y;
    }
    -tmp + (2.5066282746310005 * ser / x).ln()
}
