//! Shared test oracles, independent of the library's computation paths.

use ctmsm::linalg::{RateMatrix, SquareMatrix};

/// Transition probabilities by fourth-order Runge-Kutta integration of the
/// forward equations `P' = P G` from the identity. Step count scales with
/// both the horizon and the dominating rate so the global error stays well
/// under the comparison tolerances.
pub fn rk4_transition_probability(generator: &RateMatrix, t: f64) -> SquareMatrix {
    let n = generator.size();
    let g = generator.entries();
    let rate = generator.dominating_rate();
    let steps = ((10_000.0 * t).ceil() as usize)
        .max((400.0 * rate * t).ceil() as usize)
        .max(1_000);
    let h = t / steps as f64;

    let mul = |m: &SquareMatrix| m.matmul(g);
    let mut p = SquareMatrix::identity(n);
    for _ in 0..steps {
        let k1 = mul(&p);
        let k2 = mul(&add_scaled(&p, h / 2.0, &k1));
        let k3 = mul(&add_scaled(&p, h / 2.0, &k2));
        let k4 = mul(&add_scaled(&p, h, &k3));
        let mut next = p.clone();
        for r in 0..n {
            for c in 0..n {
                next[(r, c)] += h / 6.0
                    * (k1[(r, c)] + 2.0 * k2[(r, c)] + 2.0 * k3[(r, c)] + k4[(r, c)]);
            }
        }
        p = next;
    }
    p
}

fn add_scaled(a: &SquareMatrix, w: f64, b: &SquareMatrix) -> SquareMatrix {
    let mut out = a.clone();
    for r in 0..a.size() {
        for c in 0..a.size() {
            out[(r, c)] += w * b[(r, c)];
        }
    }
    out
}

/// Plain Nelder-Mead minimizer, good enough for the smooth low-dimensional
/// likelihoods used as cross-validation oracles.
pub fn nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
    scale: f64,
    max_iter: usize,
) -> Vec<f64> {
    let dim = start.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(start.to_vec());
    for i in 0..dim {
        let mut v = start.to_vec();
        v[i] += scale;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];
        if (values[worst] - values[best]).abs() < 1e-12 * (1.0 + values[best].abs()) {
            break;
        }

        let mut centroid = vec![0.0; dim];
        for &i in order.iter().take(dim) {
            for d in 0..dim {
                centroid[d] += simplex[i][d] / dim as f64;
            }
        }
        let point = |factor: f64| -> Vec<f64> {
            (0..dim)
                .map(|d| centroid[d] + factor * (simplex[worst][d] - centroid[d]))
                .collect()
        };

        let reflected = point(-1.0);
        let fr = f(&reflected);
        if fr < values[best] {
            let expanded = point(-2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if fr < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            let contracted = point(0.5);
            let fc = f(&contracted);
            if fc < values[worst] {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                for &i in order.iter().skip(1) {
                    for d in 0..dim {
                        simplex[i][d] = simplex[best][d] + 0.5 * (simplex[i][d] - simplex[best][d]);
                    }
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let best = (0..=dim).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    simplex[best].clone()
}

/// Total variation distance between two discrete distributions given as
/// aligned probability vectors.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
}
