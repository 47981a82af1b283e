//! Derivative-free minimization helpers: a bounded Nelder-Mead simplex and a
//! Halton low-discrepancy sequence for coarse sweeps.

/// Result of a Nelder-Mead run.
#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub struct SimplexOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Initial simplex edge, as a fraction of each coordinate's box width.
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { max_iterations: 200, tolerance: 1e-10, initial_step: 0.05 }
    }
}

fn clamp(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (xi, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *xi = xi.clamp(lo, hi);
    }
}

/// Minimize `f` inside the box `bounds`, starting from `x0`.
///
/// Standard reflection/expansion/contraction/shrink with coefficients
/// (1, 2, 0.5, 0.5); every candidate is clamped into the box. Deterministic.
pub fn nelder_mead<F>(f: F, x0: &[f64], bounds: &[(f64, f64)], opts: &SimplexOptions) -> SimplexResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    assert_eq!(bounds.len(), n);
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    // initial simplex: x0 plus a step along each axis
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        let width = bounds[i].1 - bounds[i].0;
        let step = if width > 0.0 { opts.initial_step * width } else { 0.0 };
        v[i] += if step != 0.0 { step } else { 1e-8 };
        clamp(&mut v, bounds);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        // order ascending by value
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n.saturating_sub(1).min(n - 1).max(0)];

        if (values[worst] - values[best]).abs() <= opts.tolerance * (1.0 + values[best].abs()) {
            converged = true;
            break;
        }

        // centroid of all but the worst
        let mut centroid = vec![0.0; n];
        for (k, v) in simplex.iter().enumerate() {
            if k == worst {
                continue;
            }
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }

        let mut reflected: Vec<f64> = centroid
            .iter()
            .zip(&simplex[worst])
            .map(|(c, w)| c + alpha * (c - w))
            .collect();
        clamp(&mut reflected, bounds);
        let f_ref = f(&reflected);

        if f_ref < values[best] {
            let mut expanded: Vec<f64> = centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + gamma * (c - w))
                .collect();
            clamp(&mut expanded, bounds);
            let f_exp = f(&expanded);
            if f_exp < f_ref {
                simplex[worst] = expanded;
                values[worst] = f_exp;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_ref;
            }
        } else if f_ref < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = f_ref;
        } else {
            let mut contracted: Vec<f64> = centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + rho * (w - c))
                .collect();
            clamp(&mut contracted, bounds);
            let f_con = f(&contracted);
            if f_con < values[worst] {
                simplex[worst] = contracted;
                values[worst] = f_con;
            } else {
                // shrink toward the best vertex
                let best_point = simplex[best].clone();
                for k in 0..=n {
                    if k == best {
                        continue;
                    }
                    for (x, b) in simplex[k].iter_mut().zip(&best_point) {
                        *x = b + sigma * (*x - b);
                    }
                    clamp(&mut simplex[k], bounds);
                    values[k] = f(&simplex[k]);
                }
            }
        }
    }

    let mut best_idx = 0;
    for k in 1..values.len() {
        if values[k] < values[best_idx] {
            best_idx = k;
        }
    }
    SimplexResult {
        x: simplex[best_idx].clone(),
        value: values[best_idx],
        iterations,
        converged,
    }
}

const HALTON_PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// k-th element of the base-`b` radical-inverse (van der Corput) sequence.
fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let mut inv = 0.0;
    let mut denom = 1.0;
    while k > 0 {
        denom *= base as f64;
        inv += (k % base) as f64 / denom;
        k /= base;
    }
    inv
}

/// `count` Halton points in the unit cube of the given dimension (max 12).
/// Index starts at 1 so the first point is not the origin.
pub fn halton_points(dim: usize, count: usize) -> Vec<Vec<f64>> {
    assert!(dim <= HALTON_PRIMES.len(), "halton dimension too large");
    (1..=count as u64)
        .map(|k| (0..dim).map(|d| radical_inverse(k, HALTON_PRIMES[d])).collect())
        .collect()
}
