//! The rounding engine: turns a fractional point into a sparse
//! distribution over oracle outputs with a multiplicative loss guarantee.
//!
//! Given a point `x` of a relaxation and an approximation oracle that
//! answers any non-negative price vector `l` with a combinatorial vector
//! `c` whose cost `c . l` is within a factor `alpha` of the fractional
//! optimum, the engine produces weights `w` over finitely many oracle
//! answers `c_1, ..., c_J` such that
//!
//! ```txt
//! sum_j w_j (c_j . l)  <=  (alpha_emp + epsilon) * (x . l)     for all l >= 0,
//! ```
//!
//! where `alpha_emp` is the worst cost ratio the oracle actually exhibited
//! during the run — never more than its advertised factor.  Sampling
//! `c_j` with probability `w_j` therefore loses at most that factor in
//! expectation against every non-negative price simultaneously.
//!
//! The loop is a smoothed best-response game on the price polytope
//! `L = { l >= 0 : l . x = 1, l_i <= M }` from [`crate::geometry`]:
//!
//! 1. query the oracle at the current price vector,
//! 2. measure the duality gap between the entropy-smoothed worst-case
//!    price of the current mixture and the best oracle answer seen,
//! 3. stop once the gap falls below `epsilon / 2`; otherwise add the
//!    answer as a new column, take a safeguarded corrective weight step,
//!    and move the price to the smoothed worst case of the new mixture.
//!
//! A final linear-programming polish redistributes weight across all
//! collected columns and is kept only when it certifiably helps.  The
//! returned [`MetaroundingResult`] carries the certified worst-case value
//! so callers can verify the guarantee independently.

use std::collections::HashMap;
use std::time::Instant;

use rand::Rng;
use thiserror::Error;

use crate::geometry::{
    CombinatorialVector, GeometryError, LossPolytope, LossVector, RelaxedPoint,
};
use crate::simplexlp::{solve, LinearProgram, LpStatus, Sense};

/// Hard cap on inner corrective-descent iterations per round.
const CORRECTIVE_MAX_ITERS: usize = 200;

/// Armijo sufficient-decrease constant for the corrective line search.
const ARMIJO_SLOPE: f64 = 1e-4;

/// Smallest line-search step before the corrective descent gives up.
const ARMIJO_MIN_STEP: f64 = 1e-12;

/// How often (in rounds) the corrective step additionally tries the exact
/// weight-polishing linear program.  Well-conditioned runs stop long
/// before the first multiple, so the fast path never pays for it.
const CORRECTIVE_POLISH_PERIOD: usize = 8;

/// An approximation oracle over some combinatorial class.
///
/// Implementations answer a non-negative price vector with a member of
/// their class; the engine treats every answer as a candidate column.
/// Oracles may keep state between calls (hence `&mut self`).
pub trait ApproxOracle {
    /// Length of the vectors the oracle produces.
    fn dimension(&self) -> usize;

    /// Best combinatorial answer the oracle can give for these prices.
    fn respond(&mut self, loss: &LossVector) -> Result<CombinatorialVector, OracleError>;

    /// The multiplicative approximation factor the oracle promises, if it
    /// promises one.  Purely informational; the engine measures the
    /// factor it actually observes.
    fn alpha(&self) -> Option<f64> {
        None
    }
}

/// An error surfaced by an oracle implementation.
#[derive(Debug, Clone, Error)]
#[error("oracle failure: {0}")]
pub struct OracleError(pub String);

impl OracleError {
    pub fn new(message: impl Into<String>) -> Self {
        Self(message.into())
    }
}

/// Tuning knobs for the rounding engine.
#[derive(Debug, Clone)]
pub struct MetaroundingConfig {
    /// Target excess over the empirical approximation factor.
    pub epsilon: f64,
    /// Smoothing strength for the price polytope; `None` selects
    /// `2 ln(n) / epsilon`, the weakest value that still makes the final
    /// certificate binding.
    pub eta: Option<f64>,
    /// A-priori lower estimate of the largest column entry; the engine
    /// raises it as real columns arrive.
    pub d_inf_hint: f64,
    /// Explicit round cap; `None` selects `ceil(16 eta D^2 / epsilon)`.
    pub max_iterations: Option<usize>,
    /// Stopping tolerance of the inner corrective descent; `None` selects
    /// `epsilon / 20`.
    pub inner_tolerance: Option<f64>,
    /// Whether to run the final weight-polishing linear program.
    pub refine: bool,
}

impl MetaroundingConfig {
    /// A configuration with the given `epsilon` and defaults elsewhere.
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), MetaroundError> {
        let bad = |detail: String| Err(MetaroundError::InvalidConfiguration { detail });
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive and finite, got {}", self.epsilon));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return bad(format!("eta must be positive and finite, got {eta}"));
            }
        }
        if !(self.d_inf_hint > 0.0 && self.d_inf_hint.is_finite()) {
            return bad(format!(
                "d_inf_hint must be positive and finite, got {}",
                self.d_inf_hint
            ));
        }
        if let Some(tol) = self.inner_tolerance {
            if !(tol > 0.0 && tol.is_finite()) {
                return bad(format!("inner_tolerance must be positive and finite, got {tol}"));
            }
        }
        Ok(())
    }
}

impl Default for MetaroundingConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            eta: None,
            d_inf_hint: 1.0,
            max_iterations: None,
            inner_tolerance: None,
            refine: true,
        }
    }
}

/// One per-round observability record.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    /// Round index, starting at 1 (the first round with a defined gap).
    pub iteration: usize,
    /// Duality gap between the smoothed mixture value and the best
    /// oracle answer so far.
    pub gap: f64,
    /// Entropy-smoothed worst-case price value of the current mixture.
    pub smoothed_value: f64,
    /// Cost ratio of this round's oracle answer at this round's prices.
    pub best_oracle_value: f64,
    /// Running worst cost ratio over all rounds (the empirical factor).
    pub alpha_emp: f64,
    /// Milliseconds elapsed since the engine started.
    pub elapsed_ms: u128,
}

/// The distribution produced by a successful (or partial) run.
#[derive(Debug, Clone)]
pub struct MetaroundingResult {
    /// Distinct oracle answers collected as columns.
    pub columns: Vec<CombinatorialVector>,
    /// Distribution over `columns`: non-negative, summing to one.
    pub weights: Vec<f64>,
    /// Worst observed oracle cost ratio; the guarantee is relative to it.
    pub alpha_emp: f64,
    /// The target excess the run was configured with.
    pub epsilon: f64,
    /// The smoothing strength the run actually used.
    pub eta: f64,
    /// Exact worst-case price value of the final mixture over the price
    /// polytope; at most `alpha_emp + epsilon` on a successful run.
    pub certified_value: f64,
    /// Final round index.
    pub iterations: usize,
    /// Final duality gap.
    pub gap: f64,
    /// Per-round records, one for each round from 1 to `iterations`.
    pub trace: Vec<TraceRecord>,
}

impl MetaroundingResult {
    /// The mixture's mean column `sum_j w_j c_j`.
    pub fn expectation(&self) -> Vec<f64> {
        mixture(&self.columns, &self.weights)
    }

    /// Draws a column at random according to the weights.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &CombinatorialVector {
        let draw: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (j, &w) in self.weights.iter().enumerate() {
            if w > 0.0 {
                last_positive = j;
                acc += w;
                if draw < acc {
                    return &self.columns[j];
                }
            }
        }
        &self.columns[last_positive]
    }

    /// Iterates over the columns that carry positive weight.
    pub fn support(&self) -> impl Iterator<Item = (f64, &CombinatorialVector)> {
        self.weights
            .iter()
            .zip(&self.columns)
            .filter(|(&w, _)| w > 0.0)
            .map(|(&w, c)| (w, c))
    }
}

/// Errors from the rounding engine.
#[derive(Debug, Error)]
pub enum MetaroundError {
    /// The fractional point does not admit a price polytope.
    #[error(transparent)]
    Geometry(#[from] GeometryError),

    /// The oracle reported a failure.
    #[error(transparent)]
    Oracle(#[from] OracleError),

    /// An oracle answer has the wrong length.
    #[error("oracle returned a column of length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A configuration value is out of range.
    #[error("invalid configuration: {detail}")]
    InvalidConfiguration { detail: String },

    /// The gap did not close within the round cap.  The partial result
    /// carries everything collected so far (weights still sum to one) but
    /// its certificate is not guaranteed.
    #[error("gap failed to close within {limit} rounds")]
    IterationLimitExceeded {
        limit: usize,
        partial: Box<MetaroundingResult>,
    },

    /// The final mixture failed its own certificate.  This indicates a
    /// defective oracle (e.g. one whose answers depend on more than the
    /// submitted prices) or numerical breakdown, and is only raised when
    /// the smoothing was strong enough to make the certificate binding.
    #[error("certificate failed: worst-case value {certified} exceeds {bound}")]
    CertificateViolation { certified: f64, bound: f64 },
}

/// `sum_j w_j c_j` as a dense vector.
fn mixture(columns: &[CombinatorialVector], weights: &[f64]) -> Vec<f64> {
    let n = columns.first().map_or(0, CombinatorialVector::len);
    let mut v = vec![0.0; n];
    for (c, &w) in columns.iter().zip(weights) {
        if w != 0.0 {
            for (vi, &ci) in v.iter_mut().zip(c.entries()) {
                *vi += w * ci as f64;
            }
        }
    }
    v
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
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

/// One corrective weight update after a new column arrived at `new_idx`.
///
/// Round 0 puts all weight on the new column.  Later rounds first take
/// the safeguard step `(1 - mu) w + mu e_new` with `mu = 2 / (round + 2)`
/// — which alone already closes the gap at the guaranteed rate — and then
/// monotonically improve it by projected gradient descent on the smoothed
/// worst-case value of the mixture, stopping once the linearized
/// improvement falls below `inner_tol`.
fn corrective_step(
    polytope: &LossPolytope,
    columns: &[CombinatorialVector],
    weights: &mut [f64],
    new_idx: usize,
    round: usize,
    eta: f64,
    inner_tol: f64,
) {
    if round == 0 {
        for w in weights.iter_mut() {
            *w = 0.0;
        }
        weights[new_idx] = 1.0;
        return;
    }
    let mu = 2.0 / (round as f64 + 2.0);
    for w in weights.iter_mut() {
        *w *= 1.0 - mu;
    }
    weights[new_idx] += mu;

    let value_at = |w: &[f64]| polytope.smoothed_max(mixture(columns, w), eta);
    let mut current: Vec<f64> = weights.to_vec();
    let mut f_current = value_at(&current);
    for _ in 0..CORRECTIVE_MAX_ITERS {
        let prices = polytope.smoothed_argmax(mixture(columns, &current), eta);
        let grad: Vec<f64> = columns.iter().map(|c| c.dot(prices.values())).collect();
        let grad_dot_current: f64 = grad.iter().zip(&current).map(|(g, w)| g * w).sum();
        let grad_min = grad.iter().copied().fold(f64::INFINITY, f64::min);
        if grad_dot_current - grad_min <= inner_tol {
            break;
        }
        let mut step = 1.0;
        let mut moved = false;
        while step >= ARMIJO_MIN_STEP {
            let candidate = project_simplex(
                &current
                    .iter()
                    .zip(&grad)
                    .map(|(w, g)| w - step * g)
                    .collect::<Vec<f64>>(),
            );
            let slope: f64 = grad
                .iter()
                .zip(&candidate)
                .zip(&current)
                .map(|((g, c), w)| g * (c - w))
                .sum();
            let f_candidate = value_at(&candidate);
            if f_candidate <= f_current + ARMIJO_SLOPE * slope {
                current = candidate;
                f_current = f_candidate;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    // When the fractional point has coordinates far below one, the
    // smoothed value's curvature along column swaps grows with the price
    // cap squared, and neither the safeguard nor the gradient descent
    // above can shed the last slivers of weight from expensive columns at
    // a useful rate.  The exact polish is blind to that curvature, so on
    // long runs it is tried periodically and kept only when it lowers the
    // smoothed value — the safeguard's descent guarantee is unaffected.
    if round % CORRECTIVE_POLISH_PERIOD == 0 {
        let mut polished = current.clone();
        refine_weights(polytope, columns, &mut polished);
        let f_polished = value_at(&polished);
        log::debug!(
            "round {round}: polish value {f_polished:.6e} vs descent value {f_current:.6e} ({})",
            if f_polished < f_current { "accepted" } else { "rejected" }
        );
        if f_polished < f_current {
            current = polished;
        }
    }
    weights.copy_from_slice(&current);
}

/// Redistributes weight across all collected columns by linear
/// programming, minimizing the exact worst-case price value of the
/// mixture.  Keeps whichever of the polished and original weights
/// certifies better, so the result is never worse than the input.
fn refine_weights(polytope: &LossPolytope, columns: &[CombinatorialVector], weights: &mut [f64]) {
    let n = polytope.dimension();
    let j = columns.len();
    let cap = polytope.cap();
    let x = polytope.point().values();

    // Variables: weights (j), per-coordinate overflows s (n), level mu (1).
    // minimize  mu + cap * sum(s)
    // s.t.      mu x_i + s_i - sum_j w_j c_{j,i} >= 0   for all i
    //           sum_j w_j = 1,   w >= 0,  s >= 0,  mu free.
    let mut objective = vec![0.0; j + n + 1];
    for s in objective.iter_mut().skip(j).take(n) {
        *s = cap;
    }
    objective[j + n] = 1.0;
    let mut lp = LinearProgram::new(objective);
    lp.bounds = vec![(0.0, f64::INFINITY); j + n + 1];
    lp.bounds[j + n] = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..n {
        let mut row = vec![0.0; j + n + 1];
        for (jj, c) in columns.iter().enumerate() {
            row[jj] = -(c.entries()[i] as f64);
        }
        row[j + i] = 1.0;
        row[j + n] = x[i];
        lp.add_row(&row, Sense::Ge, 0.0);
    }
    let mut simplex_row = vec![0.0; j + n + 1];
    for entry in simplex_row.iter_mut().take(j) {
        *entry = 1.0;
    }
    lp.add_row(&simplex_row, Sense::Eq, 1.0);

    let polished = match solve(&lp) {
        Ok(sol) if sol.status == LpStatus::Optimal => {
            let mut w: Vec<f64> = sol.x[..j].iter().map(|&v| v.max(0.0)).collect();
            let total: f64 = w.iter().sum();
            if total > 0.0 {
                for v in w.iter_mut() {
                    *v /= total;
                }
                Some(w)
            } else {
                None
            }
        }
        Ok(sol) => {
            log::warn!("weight polish ended with status {:?}; keeping corrective weights", sol.status);
            None
        }
        Err(err) => {
            log::warn!("weight polish failed ({err}); keeping corrective weights");
            None
        }
    };
    if let Some(w) = polished {
        let (before, _) = polytope.linear_max(mixture(columns, weights));
        let (after, _) = polytope.linear_max(mixture(columns, &w));
        log::debug!("weight polish linear value {after:.6e} vs incumbent {before:.6e}");
        if after <= before {
            weights.copy_from_slice(&w);
        }
    }
}

/// Rounds a fractional point into a distribution over oracle answers.
/// See the module documentation for the guarantee.
pub fn metaround<O: ApproxOracle>(
    point: &RelaxedPoint,
    oracle: &mut O,
    config: &MetaroundingConfig,
) -> Result<MetaroundingResult, MetaroundError> {
    metaround_with_sink(point, oracle, config, |_| {})
}

/// Like [`metaround`], but additionally feeds every trace record to
/// `sink` as it is produced, for streaming observability on long runs.
pub fn metaround_with_sink<O, F>(
    point: &RelaxedPoint,
    oracle: &mut O,
    config: &MetaroundingConfig,
    mut sink: F,
) -> Result<MetaroundingResult, MetaroundError>
where
    O: ApproxOracle,
    F: FnMut(&TraceRecord),
{
    config.validate()?;
    let polytope = LossPolytope::new(point.clone())?;
    let n = polytope.dimension();
    let epsilon = config.epsilon;
    let minimal_eta = 2.0 * (n as f64).ln() / epsilon;
    let eta = config.eta.unwrap_or_else(|| minimal_eta.max(1e-12));
    // The certificate is only guaranteed when the smoothing is at least
    // as strong as the default; a deliberately weaker eta downgrades a
    // failed certificate from an error to an observation.
    let certificate_binding = eta >= minimal_eta - 1e-12;
    let inner_tol = config.inner_tolerance.unwrap_or(epsilon / 20.0);
    let start = Instant::now();

    let mut columns: Vec<CombinatorialVector> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut seen: HashMap<CombinatorialVector, usize> = HashMap::new();
    let mut trace: Vec<TraceRecord> = Vec::new();
    let mut alpha_emp = f64::NEG_INFINITY;
    let mut d_inf = config.d_inf_hint;
    let mut prices = polytope.uniform_loss();
    let mut round = 0usize;

    let (final_round, final_gap) = loop {
        let column = oracle.respond(&prices)?;
        if column.len() != n {
            return Err(MetaroundError::DimensionMismatch {
                expected: n,
                got: column.len(),
            });
        }
        alpha_emp = alpha_emp.max(column.dot(prices.values()));
        d_inf = d_inf.max(column.d_inf() as f64);

        if round >= 1 {
            let smoothed_value = polytope.smoothed_max(mixture(&columns, &weights), eta);
            let gap = smoothed_value - alpha_emp;
            let record = TraceRecord {
                iteration: round,
                gap,
                smoothed_value,
                best_oracle_value: column.dot(prices.values()),
                alpha_emp,
                elapsed_ms: start.elapsed().as_millis(),
            };
            sink(&record);
            trace.push(record);
            // Safeguarded descent keeps the gap under a 1/(round + 2)
            // envelope.  The constant follows the smoothed value's true
            // curvature scale — largest column entry times the price cap —
            // plus a level term covering the first round; on points whose
            // support coordinates are near one the cap is near one and
            // this reduces to the idealized envelope.
            debug_assert!(
                {
                    let scale = d_inf * polytope.cap();
                    gap <= (8.0 * eta * scale * scale + 6.0 * scale) / (round as f64 + 2.0) + 1e-9
                },
                "round {round}: gap {gap} exceeds its guaranteed envelope"
            );
            if gap <= epsilon / 2.0 {
                // Record the last answer (weightless if new) so the trace
                // and the column pool stay consistent, without disturbing
                // the mixture the gap was certified for.
                if !seen.contains_key(&column) {
                    seen.insert(column.clone(), columns.len());
                    columns.push(column);
                    weights.push(0.0);
                }
                break (round, gap);
            }
            let limit = config
                .max_iterations
                .unwrap_or_else(|| (16.0 * eta * d_inf * d_inf / epsilon).ceil() as usize);
            if round >= limit {
                let (certified_value, _) = polytope.linear_max(mixture(&columns, &weights));
                let partial = MetaroundingResult {
                    columns,
                    weights,
                    alpha_emp,
                    epsilon,
                    eta,
                    certified_value,
                    iterations: round,
                    gap,
                    trace,
                };
                return Err(MetaroundError::IterationLimitExceeded {
                    limit,
                    partial: Box::new(partial),
                });
            }
        }

        let idx = match seen.get(&column) {
            Some(&existing) => existing,
            None => {
                let fresh = columns.len();
                seen.insert(column.clone(), fresh);
                columns.push(column);
                weights.push(0.0);
                fresh
            }
        };
        corrective_step(&polytope, &columns, &mut weights, idx, round, eta, inner_tol);
        prices = polytope.smoothed_argmax(mixture(&columns, &weights), eta);
        round += 1;
    };

    if config.refine {
        refine_weights(&polytope, &columns, &mut weights);
    }
    let (certified_value, _) = polytope.linear_max(mixture(&columns, &weights));
    if certificate_binding && certified_value > alpha_emp + epsilon + 1e-6 {
        return Err(MetaroundError::CertificateViolation {
            certified: certified_value,
            bound: alpha_emp + epsilon,
        });
    }
    Ok(MetaroundingResult {
        columns,
        weights,
        alpha_emp,
        epsilon,
        eta,
        certified_value,
        iterations: final_round,
        gap: final_gap,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setcover::{harmonic, GreedyOracle};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::E;

    /// An oracle that always answers with the same column.
    struct ConstantOracle(CombinatorialVector);

    impl ApproxOracle for ConstantOracle {
        fn dimension(&self) -> usize {
            self.0.len()
        }
        fn respond(&mut self, _: &LossVector) -> Result<CombinatorialVector, OracleError> {
            Ok(self.0.clone())
        }
    }

    /// An oracle that cycles through a fixed list of columns.
    struct CyclingOracle {
        answers: Vec<CombinatorialVector>,
        cursor: usize,
    }

    impl ApproxOracle for CyclingOracle {
        fn dimension(&self) -> usize {
            self.answers[0].len()
        }
        fn respond(&mut self, _: &LossVector) -> Result<CombinatorialVector, OracleError> {
            let answer = self.answers[self.cursor % self.answers.len()].clone();
            self.cursor += 1;
            Ok(answer)
        }
    }

    struct FailingOracle;

    impl ApproxOracle for FailingOracle {
        fn dimension(&self) -> usize {
            2
        }
        fn respond(&mut self, _: &LossVector) -> Result<CombinatorialVector, OracleError> {
            Err(OracleError::new("boom"))
        }
    }

    fn half_point(n: usize) -> RelaxedPoint {
        RelaxedPoint::new(vec![0.5; n]).unwrap()
    }

    #[test]
    fn constant_oracle_converges_in_one_round() {
        let point = half_point(3);
        let mut oracle = ConstantOracle(CombinatorialVector::new(vec![1, 1, 0]));
        let result = metaround(&point, &mut oracle, &MetaroundingConfig::new(0.1)).unwrap();
        assert_eq!(result.iterations, 1);
        assert_eq!(result.columns.len(), 1, "duplicate answers must merge");
        assert_eq!(result.weights, vec![1.0]);
        assert_eq!(result.trace.len(), 1);
        assert!(result.gap <= 1e-9, "singleton gap should be non-positive");
    }

    #[test]
    fn rounds_the_triangle_relaxation_with_a_certificate() {
        let instance = crate::setcover::pairwise_triangle();
        let (point, _) = instance.relaxed_lp(&[1.0, 1.0, 1.0]).unwrap();
        let mut oracle = GreedyOracle::new(&instance);
        let config = MetaroundingConfig::new(0.1);
        let mut streamed = Vec::new();
        let result =
            metaround_with_sink(&point, &mut oracle, &config, |r| streamed.push(r.clone()))
                .unwrap();

        assert!(result.gap <= 0.05 + 1e-12);
        assert_eq!(result.weights.len(), result.columns.len());
        let total: f64 = result.weights.iter().sum();
        assert!((total - 1.0).abs() <= 1e-9);
        assert!(result.weights.iter().all(|&w| w >= 0.0));
        for column in &result.columns {
            assert!(instance.is_cover(column), "every column must be a cover");
        }
        assert!(result.alpha_emp <= harmonic(3) + 1e-9);
        assert!(result.certified_value <= result.alpha_emp + 0.1 + 1e-6);

        let cap = (16.0 * result.eta / 0.1).ceil() as usize;
        assert!(result.iterations <= cap);
        for record in &result.trace {
            let envelope = 8.0 * result.eta / (record.iteration as f64 + 2.0);
            assert!(record.gap <= envelope + 1e-9);
        }
        assert_eq!(streamed.len(), result.trace.len());
        for (a, b) in streamed.iter().zip(&result.trace) {
            assert_eq!(a.iteration, b.iteration);
            assert!(a.gap == b.gap);
        }

        // The guarantee extends to every non-negative price vector because
        // the point has full support.
        let expectation = result.expectation();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let prices: Vec<f64> = (0..3).map(|_| rng.gen::<f64>()).collect();
            let lhs: f64 = expectation.iter().zip(&prices).map(|(e, l)| e * l).sum();
            let rhs = (result.alpha_emp + 0.1 + 1e-6) * point.dot(&prices);
            assert!(lhs <= rhs + 1e-9, "domination failed: {lhs} > {rhs}");
        }
    }

    #[test]
    fn corrective_step_matches_grid_minimum() {
        // Two columns on the half point; the smoothed worst-case value of
        // the mixture (1-t, t) has closed form
        // ln(e^(2-2t) + e^2 + e^(2t)) - ln 3, minimized at t = 1/2 with
        // value ln(2e + e^2) - ln 3.
        let polytope = LossPolytope::new(half_point(3)).unwrap();
        let columns = vec![
            CombinatorialVector::new(vec![1, 1, 0]),
            CombinatorialVector::new(vec![0, 1, 1]),
        ];
        let mut weights = vec![1.0, 0.0];
        corrective_step(&polytope, &columns, &mut weights, 1, 1, 1.0, 1e-9);

        let expected = (2.0 * E + E * E).ln() - 3.0f64.ln();
        assert!((weights[1] - 0.5).abs() <= 1e-3, "got weight {}", weights[1]);
        let value = polytope.smoothed_max(mixture(&columns, &weights), 1.0);
        assert!((value - expected).abs() <= 1e-6);

        let mut grid_min = f64::INFINITY;
        let mut t = 0.0;
        while t <= 1.0 {
            let v = polytope.smoothed_max(mixture(&columns, &[1.0 - t, t]), 1.0);
            grid_min = grid_min.min(v);
            t += 1e-4;
        }
        assert!(value <= grid_min + 1e-6, "descent lost to a grid point");

        // Never worse than the bare safeguard step.
        let safeguard = [1.0 / 3.0, 2.0 / 3.0];
        let safeguard_value = polytope.smoothed_max(mixture(&columns, &safeguard), 1.0);
        assert!(value <= safeguard_value + 1e-12);
    }

    #[test]
    fn refine_balances_symmetric_columns() {
        let polytope = LossPolytope::new(half_point(2)).unwrap();
        let columns = vec![
            CombinatorialVector::new(vec![1, 0]),
            CombinatorialVector::new(vec![0, 1]),
        ];
        let mut weights = vec![1.0, 0.0];
        refine_weights(&polytope, &columns, &mut weights);
        assert!((weights[0] - 0.5).abs() <= 1e-7);
        assert!((weights[1] - 0.5).abs() <= 1e-7);
        let (value, _) = polytope.linear_max(mixture(&columns, &weights));
        assert!((value - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn refine_never_hurts_the_certificate() {
        let instance = crate::setcover::SetCoverInstance::generate(6, 10, 0.4, 5).unwrap();
        let (point, _) = instance.relaxed_lp(&instance.cost).unwrap();
        let polytope = LossPolytope::new(point).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let columns: Vec<CombinatorialVector> = (0..4)
                .map(|_| {
                    let prices: Vec<f64> = (0..instance.n).map(|_| rng.gen::<f64>()).collect();
                    instance.greedy_cover(&prices).unwrap()
                })
                .collect();
            let raw: Vec<f64> = (0..columns.len()).map(|_| rng.gen::<f64>() + 0.01).collect();
            let total: f64 = raw.iter().sum();
            let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
            let (before, _) = polytope.linear_max(mixture(&columns, &weights));
            refine_weights(&polytope, &columns, &mut weights);
            let (after, _) = polytope.linear_max(mixture(&columns, &weights));
            assert!(after <= before + 1e-9, "polish worsened {before} to {after}");
        }
    }

    #[test]
    fn iteration_limit_surfaces_partial_state() {
        let point = half_point(2);
        let mut oracle = CyclingOracle {
            answers: vec![
                CombinatorialVector::new(vec![1, 0]),
                CombinatorialVector::new(vec![0, 1]),
            ],
            cursor: 0,
        };
        let mut config = MetaroundingConfig::new(1e-6);
        config.max_iterations = Some(1);
        let err = metaround(&point, &mut oracle, &config).unwrap_err();
        match err {
            MetaroundError::IterationLimitExceeded { limit, partial } => {
                assert_eq!(limit, 1);
                assert_eq!(partial.iterations, 1);
                assert_eq!(partial.columns.len(), 1);
                assert_eq!(partial.weights, vec![1.0]);
                assert_eq!(partial.trace.len(), 1);
                assert!(partial.certified_value.is_finite());
            }
            other => panic!("expected an iteration-limit error, got {other:?}"),
        }
    }

    #[test]
    fn oracle_errors_propagate() {
        let point = half_point(2);
        let err = metaround(&point, &mut FailingOracle, &MetaroundingConfig::new(0.1))
            .unwrap_err();
        match err {
            MetaroundError::Oracle(inner) => assert!(inner.to_string().contains("boom")),
            other => panic!("expected an oracle error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_length_columns_are_rejected() {
        let point = half_point(2);
        let mut oracle = ConstantOracle(CombinatorialVector::new(vec![1, 0, 1]));
        let err = metaround(&point, &mut oracle, &MetaroundingConfig::new(0.1)).unwrap_err();
        assert!(matches!(
            err,
            MetaroundError::DimensionMismatch {
                expected: 2,
                got: 3
            }
        ));
    }

    #[test]
    fn configuration_is_validated() {
        let point = half_point(2);
        let mut oracle = ConstantOracle(CombinatorialVector::new(vec![1, 0]));
        for config in [
            MetaroundingConfig::new(0.0),
            MetaroundingConfig::new(f64::NAN),
            MetaroundingConfig {
                eta: Some(-1.0),
                ..MetaroundingConfig::default()
            },
            MetaroundingConfig {
                d_inf_hint: 0.0,
                ..MetaroundingConfig::default()
            },
            MetaroundingConfig {
                inner_tolerance: Some(0.0),
                ..MetaroundingConfig::default()
            },
        ] {
            assert!(matches!(
                metaround(&point, &mut oracle, &config),
                Err(MetaroundError::InvalidConfiguration { .. })
            ));
        }
    }

    #[test]
    fn handles_columns_with_entries_above_one() {
        let point = half_point(2);
        let mut oracle = ConstantOracle(CombinatorialVector::new(vec![2, 1]));
        let result = metaround(&point, &mut oracle, &MetaroundingConfig::new(0.1)).unwrap();
        assert_eq!(result.iterations, 1);
        assert_eq!(result.columns[0].d_inf(), 2);
        assert!(result.certified_value.is_finite());
    }

    #[test]
    fn sampling_follows_the_weights() {
        let result = MetaroundingResult {
            columns: vec![
                CombinatorialVector::new(vec![1, 0]),
                CombinatorialVector::new(vec![0, 1]),
            ],
            weights: vec![0.3, 0.7],
            alpha_emp: 1.0,
            epsilon: 0.1,
            eta: 1.0,
            certified_value: 1.0,
            iterations: 1,
            gap: 0.0,
            trace: Vec::new(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws = 100_000;
        let mut second = 0usize;
        for _ in 0..draws {
            if result.sample(&mut rng).entries()[1] == 1 {
                second += 1;
            }
        }
        let frequency = second as f64 / draws as f64;
        assert!((frequency - 0.7).abs() <= 0.01, "frequency {frequency}");
        let expectation = result.expectation();
        assert!((expectation[0] - 0.3).abs() <= 1e-12);
        assert!((expectation[1] - 0.7).abs() <= 1e-12);
    }
}
