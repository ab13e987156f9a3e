//! Shared fixtures and reference computations for the integration suites.
#![allow(dead_code)]

use metarounding::simplexlp::{LinearProgram, Sense};
use metarounding::SetCoverInstance;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Three elements, three sets, every element covered by exactly two sets
/// and every set covering exactly two elements; unit costs.  The smallest
/// instance whose relaxation has a strictly fractional optimum
/// (x = (1/2, 1/2, 1/2) costs 3/2 while any cover needs two sets).
pub fn triangle() -> SetCoverInstance {
    SetCoverInstance {
        m: 3,
        n: 3,
        coverage: vec![1, 1, 0, 0, 1, 1, 1, 0, 1],
        cost: vec![1.0, 1.0, 1.0],
        seed: 0,
    }
}

/// Replaces the values at `masked` comma-separated column indices with
/// `-` in every non-header line, so outputs that differ only in
/// wall-clock columns can be compared byte-for-byte.
pub fn mask_columns(csv: &str, masked: &[usize]) -> String {
    let mut out = String::new();
    for (lineno, line) in csv.lines().enumerate() {
        if lineno == 0 {
            out.push_str(line);
        } else {
            let cells: Vec<&str> = line.split(',').collect();
            let replaced: Vec<&str> = cells
                .iter()
                .enumerate()
                .map(|(i, cell)| if masked.contains(&i) { "-" } else { *cell })
                .collect();
            out.push_str(&replaced.join(","));
        }
        out.push('\n');
    }
    out
}

/// Euclidean projection onto the probability simplex.
fn project_unit_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut prefix = 0.0;
    let mut threshold = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        prefix += u;
        let candidate = (prefix - 1.0) / (i + 1) as f64;
        if u - candidate > 0.0 {
            threshold = candidate;
        }
    }
    v.iter().map(|&x| (x - threshold).max(0.0)).collect()
}

/// Reference entropy-smoothed price maximizer over
/// `{l >= 0 : sum_i l_i x_i = 1}` (per-coordinate caps cannot bind on an
/// all-positive `x` because each cap is at least the whole budget),
/// computed by projected gradient ascent in the substituted variable
/// `q_i = l_i x_i` — deliberately sharing no code path with the
/// library's closed-form water-filling.  Returns the smoothed value and
/// the maximizing prices.  Requires strictly positive `x`.
pub fn reference_smoothed_argmax(theta: &[f64], x: &[f64], eta: f64) -> (f64, Vec<f64>) {
    let n = theta.len();
    let a: Vec<f64> = theta.iter().zip(x).map(|(t, xi)| t / xi).collect();
    let objective = |q: &[f64]| -> f64 {
        q.iter()
            .zip(&a)
            .map(|(&qi, &ai)| {
                if qi <= 0.0 {
                    0.0
                } else {
                    ai * qi - qi * (qi * n as f64).ln() / eta
                }
            })
            .sum()
    };

    let mut q = vec![1.0 / n as f64; n];
    let mut f = objective(&q);
    'outer: for _ in 0..20_000 {
        let grad: Vec<f64> = q
            .iter()
            .zip(&a)
            .map(|(&qi, &ai)| ai - ((qi.max(1e-300) * n as f64).ln() + 1.0) / eta)
            .collect();
        let mut step = 1.0;
        loop {
            let cand = project_unit_simplex(
                &q.iter()
                    .zip(&grad)
                    .map(|(qi, g)| qi + step * g)
                    .collect::<Vec<f64>>(),
            );
            let slope: f64 = grad
                .iter()
                .zip(&cand)
                .zip(&q)
                .map(|((g, c), w)| g * (c - w))
                .sum();
            let fc = objective(&cand);
            if fc.is_finite() && fc >= f + 1e-4 * slope {
                let moved: f64 = cand.iter().zip(&q).map(|(c, w)| (c - w).abs()).sum();
                q = cand;
                f = fc;
                if moved <= 1e-13 {
                    break 'outer;
                }
                break;
            }
            step *= 0.5;
            if step < 1e-14 {
                break 'outer;
            }
        }
    }
    // First-order steps crawl once the maximizer pins coordinates near
    // zero: the entropy curvature 1/(eta q) explodes there and the
    // backtracking accepts only vanishing moves.  Exact two-coordinate
    // exchanges finish the job — moving mass t from j to i is optimal
    // where a_i - a_j = (ln(q_i + t) - ln(q_j - t)) / eta, which solves
    // in closed form per pair and needs no step size.
    for _ in 0..10_000 {
        let mut shifted = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let beta = eta * (a[i] - a[j]);
                // Divide through by the larger exponential so neither
                // tail overflows.
                let t = if beta >= 0.0 {
                    let e = (-beta).exp();
                    (q[j] - q[i] * e) / (1.0 + e)
                } else {
                    let e = beta.exp();
                    (q[j] * e - q[i]) / (1.0 + e)
                };
                let t = t.clamp(-q[i], q[j]);
                if t != 0.0 {
                    q[i] += t;
                    q[j] -= t;
                    shifted = shifted.max(t.abs());
                }
            }
        }
        if shifted <= 1e-16 {
            break;
        }
    }
    f = objective(&q);
    let prices: Vec<f64> = q.iter().zip(x).map(|(qi, xi)| qi / xi).collect();
    (f, prices)
}

/// A small random linear program with integer data and finite boxes, the
/// shape family the vertex enumerator handles exactly.
pub fn random_boxed_lp(rng: &mut ChaCha8Rng, max_vars: usize) -> LinearProgram {
    let nvars = rng.gen_range(1..=max_vars);
    let nrows = rng.gen_range(0..=3);
    let mut lp = LinearProgram::new((0..nvars).map(|_| rng.gen_range(-3..=3) as f64).collect());
    lp.bounds = (0..nvars)
        .map(|_| (0.0, rng.gen_range(1..=3) as f64))
        .collect();
    for _ in 0..nrows {
        let coeffs: Vec<f64> = (0..nvars).map(|_| rng.gen_range(-2..=2) as f64).collect();
        let sense = match rng.gen_range(0..3) {
            0 => Sense::Le,
            1 => Sense::Ge,
            _ => Sense::Eq,
        };
        let rhs = rng.gen_range(-2..=4) as f64;
        lp.add_row(&coeffs, sense, rhs);
    }
    lp
}
