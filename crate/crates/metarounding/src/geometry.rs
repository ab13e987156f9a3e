//! Geometry of the scaled loss polytope.
//!
//! Metarounding certifies a rounding distribution against every loss vector
//! the adversary could present.  For a fractional point `x` the relevant
//! losses form the scaled polytope
//!
//! ```txt
//! L = { l in R^n :  0 <= l_i <= M  for all i,   sum_i l_i x_i = 1 },
//!
//! M = max { 1/x_i : x_i > 0 }.
//! ```
//!
//! The normalization `l . x = 1` fixes the scale of the certificate, and the
//! cap `M` keeps coordinates with `x_i = 0` bounded (on the support the cap
//! is already implied by the budget).  Two functions of a payoff vector
//! `theta` drive the whole toolkit:
//!
//! * the exact support value `max { l . theta : l in L }`
//!   ([`LossPolytope::linear_max`]), and
//! * its entropy-smoothed version
//!   `max { l . theta - entropy(l)/eta : l in L }`
//!   ([`LossPolytope::smoothed_max`]), whose gradient
//!   ([`LossPolytope::smoothed_argmax`]) supplies the next loss vector for
//!   the column-generation loop.
//!
//! The smoothing term is the weighted relative entropy
//!
//! ```txt
//! entropy(l) = sum_i l_i x_i ln( l_i x_i / (1/n) ),      0 ln 0 = 0,
//! ```
//!
//! which vanishes on the budget-uniform loss and never exceeds `ln n` on
//! `L`, so the smoothed and exact maxima differ by at most `(ln n)/eta`.

use thiserror::Error;

/// Tolerance used when validating membership in `[0,1]` boxes and in `L`.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// A cap is treated as binding when the uncapped weight reaches it up to
/// this slack; the clamp order (ascending index) is value-neutral because
/// tied coordinates have identical objective contributions.
const CAP_BINDING_TOL: f64 = 1e-12;

/// Errors reported by polytope construction and evaluation.
#[derive(Debug, Error)]
pub enum GeometryError {
    /// Every coordinate of the fractional point is zero, so the budget
    /// constraint `l . x = 1` cannot be met and `L` is empty.
    #[error("fractional point has no positive coordinate; the loss polytope is empty")]
    EmptyPolytope,

    /// A coordinate of a fractional point fell outside `[0, 1]` by more
    /// than the membership tolerance.
    #[error("coordinate {index} = {value} lies outside [0, 1]")]
    CoordinateOutOfRange { index: usize, value: f64 },

    /// Vector lengths disagree with the ambient dimension.
    #[error("vector of length {got} does not match dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A loss vector violates a defining constraint of `L`.
    #[error("loss vector violates {constraint} by {violation:.3e}")]
    NotInPolytope { constraint: String, violation: f64 },
}

/// A fractional point in `[0,1]^n` with at least one positive coordinate.
///
/// Values within `MEMBERSHIP_TOL` of the box are accepted and clamped, and
/// positive dust below the tolerance is snapped to zero so that solver
/// round-off cannot produce an absurdly large cap `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedPoint {
    values: Vec<f64>,
}

impl RelaxedPoint {
    /// Validates and normalizes a fractional point.
    pub fn new(values: Vec<f64>) -> Result<Self, GeometryError> {
        let mut clean = values;
        for (i, v) in clean.iter_mut().enumerate() {
            if !v.is_finite() || *v < -MEMBERSHIP_TOL || *v > 1.0 + MEMBERSHIP_TOL {
                return Err(GeometryError::CoordinateOutOfRange { index: i, value: *v });
            }
            *v = if *v <= MEMBERSHIP_TOL { 0.0 } else { v.min(1.0) };
        }
        if clean.iter().all(|&v| v == 0.0) {
            return Err(GeometryError::EmptyPolytope);
        }
        Ok(Self { values: clean })
    }

    /// Coordinates of the point.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Ambient dimension `n`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True when the dimension is zero (never for a valid point).
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Inner product with an arbitrary vector of matching length.
    pub fn dot(&self, other: &[f64]) -> f64 {
        debug_assert_eq!(self.values.len(), other.len());
        self.values.iter().zip(other).map(|(a, b)| a * b).sum()
    }
}

/// A loss vector, produced by the maximization routines on [`LossPolytope`].
#[derive(Debug, Clone, PartialEq)]
pub struct LossVector {
    values: Vec<f64>,
}

impl LossVector {
    /// Wraps raw coordinates without validation; use
    /// [`LossPolytope::check_member`] to certify membership.
    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    /// Coordinates of the loss vector.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Consumes the wrapper and returns the raw coordinates.
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Inner product with an arbitrary vector of matching length.
    pub fn dot(&self, other: &[f64]) -> f64 {
        debug_assert_eq!(self.values.len(), other.len());
        self.values.iter().zip(other).map(|(a, b)| a * b).sum()
    }
}

impl AsRef<[f64]> for LossVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// An integral solution vector with non-negative integer entries, as
/// returned by approximation oracles (for covers the entries are 0/1).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CombinatorialVector {
    entries: Vec<u64>,
    d_inf: u64,
}

impl CombinatorialVector {
    /// Builds a vector and records its infinity norm.
    pub fn new(entries: Vec<u64>) -> Self {
        let d_inf = entries.iter().copied().max().unwrap_or(0);
        Self { entries, d_inf }
    }

    /// Integer entries of the vector.
    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    /// Number of coordinates.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// True when the vector has no coordinates.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Infinity norm of the entries.
    pub fn d_inf(&self) -> u64 {
        self.d_inf
    }

    /// Inner product with a real vector of matching length.
    pub fn dot(&self, other: &[f64]) -> f64 {
        debug_assert_eq!(self.entries.len(), other.len());
        self.entries
            .iter()
            .zip(other)
            .map(|(&c, &w)| c as f64 * w)
            .sum()
    }

    /// Entries converted to `f64`, handy for dense linear algebra.
    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(|&c| c as f64).collect()
    }
}

/// The scaled loss polytope `L` attached to a fractional point.
#[derive(Debug, Clone)]
pub struct LossPolytope {
    x: RelaxedPoint,
    support: Vec<usize>,
    zeros: Vec<usize>,
    cap: f64,
}

impl LossPolytope {
    /// Builds `L` from a fractional point, computing its support, the
    /// indices with `x_i = 0`, and the coordinate cap `M`.
    pub fn new(x: RelaxedPoint) -> Result<Self, GeometryError> {
        let mut support = Vec::new();
        let mut zeros = Vec::new();
        for (i, &v) in x.values().iter().enumerate() {
            if v > 0.0 {
                support.push(i);
            } else {
                zeros.push(i);
            }
        }
        if support.is_empty() {
            return Err(GeometryError::EmptyPolytope);
        }
        let min_positive = support
            .iter()
            .map(|&i| x.values()[i])
            .fold(f64::INFINITY, f64::min);
        Ok(Self {
            x,
            support,
            zeros,
            cap: 1.0 / min_positive,
        })
    }

    /// The underlying fractional point.
    pub fn point(&self) -> &RelaxedPoint {
        &self.x
    }

    /// Ambient dimension `n`.
    pub fn dimension(&self) -> usize {
        self.x.len()
    }

    /// Indices with `x_i > 0`.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Indices with `x_i = 0`.
    pub fn zeros(&self) -> &[usize] {
        &self.zeros
    }

    /// The coordinate cap `M = max { 1/x_i : x_i > 0 }`.
    pub fn cap(&self) -> f64 {
        self.cap
    }

    /// The budget-uniform loss `l = 1/(sum_i x_i) * (1, ..., 1)`, used to
    /// start the column-generation loop.  It always lies in `L` because
    /// `1/(sum_i x_i) <= 1/min_i x_i = M`.
    pub fn uniform_loss(&self) -> LossVector {
        let total: f64 = self.x.values().iter().sum();
        LossVector::from_values(vec![1.0 / total; self.x.len()])
    }

    /// Checks membership of a loss vector in `L` within `tol`.
    pub fn check_member(&self, ell: impl AsRef<[f64]>, tol: f64) -> Result<(), GeometryError> {
        let ell = ell.as_ref();
        if ell.len() != self.x.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.x.len(),
                got: ell.len(),
            });
        }
        for (i, &l) in ell.iter().enumerate() {
            if l < -tol {
                return Err(GeometryError::NotInPolytope {
                    constraint: format!("l_{i} >= 0"),
                    violation: -l,
                });
            }
            if l > self.cap + tol {
                return Err(GeometryError::NotInPolytope {
                    constraint: format!("l_{i} <= {:.6}", self.cap),
                    violation: l - self.cap,
                });
            }
        }
        let budget = self.x.dot(ell);
        if (budget - 1.0).abs() > tol {
            return Err(GeometryError::NotInPolytope {
                constraint: "sum_i l_i x_i = 1".to_string(),
                violation: (budget - 1.0).abs(),
            });
        }
        Ok(())
    }

    /// True when the loss vector lies in `L` within `tol`.
    pub fn contains(&self, ell: impl AsRef<[f64]>, tol: f64) -> bool {
        self.check_member(ell, tol).is_ok()
    }

    /// The weighted relative entropy of a member of `L`:
    ///
    /// ```txt
    /// entropy(l) = sum_i l_i x_i ln( n l_i x_i ),    0 ln 0 = 0.
    /// ```
    ///
    /// Takes values in `[0, ln n]` on `L`.  Coordinates with `x_i = 0`
    /// contribute nothing.
    pub fn entropy(&self, ell: impl AsRef<[f64]>) -> Result<f64, GeometryError> {
        let ell = ell.as_ref();
        self.check_member(ell, MEMBERSHIP_TOL)?;
        let n = self.x.len() as f64;
        let mut sum = 0.0;
        for &i in &self.support {
            let q = ell[i] * self.x.values()[i];
            if q > 0.0 {
                sum += q * (n * q).ln();
            }
        }
        Ok(sum)
    }

    /// Exact maximization of `l . theta` over `L`.
    ///
    /// Coordinates with `x_i = 0` are free of the budget, so they take the
    /// cap `M` exactly when `theta_i > 0`.  On the support the substitution
    /// `q_i = l_i x_i` turns the problem into a fractional knapsack over
    /// the unit budget: fill coordinates in order of decreasing rate
    /// `theta_i / x_i` (ties broken toward the lower index) until the
    /// budget is spent.  Because each support cap satisfies `M x_i >= 1`,
    /// the budget is exhausted on the first coordinate except in
    /// floating-point edge cases, which the loop handles uniformly.
    ///
    /// Returns the maximum value together with a maximizer.
    pub fn linear_max(&self, theta: impl AsRef<[f64]>) -> (f64, LossVector) {
        let theta = theta.as_ref();
        assert_eq!(
            theta.len(),
            self.x.len(),
            "payoff vector length must match the polytope dimension",
        );
        let mut ell = vec![0.0; self.x.len()];
        let mut value = 0.0;
        for &i in &self.zeros {
            if theta[i] > 0.0 {
                ell[i] = self.cap;
                value += self.cap * theta[i];
            }
        }
        let mut order = self.support.clone();
        order.sort_by(|&a, &b| {
            let ra = theta[a] / self.x.values()[a];
            let rb = theta[b] / self.x.values()[b];
            rb.partial_cmp(&ra)
                .expect("rates are finite on the support")
                .then(a.cmp(&b))
        });
        let mut budget = 1.0;
        for &i in &order {
            if budget <= 0.0 {
                break;
            }
            let xi = self.x.values()[i];
            let q = (self.cap * xi).min(budget);
            budget -= q;
            ell[i] = q / xi;
            value += (theta[i] / xi) * q;
        }
        (value, LossVector::from_values(ell))
    }

    /// Entropy-smoothed maximum `max { l . theta - entropy(l)/eta : l in L }`.
    ///
    /// Always sandwiched between `linear_max - (ln n)/eta` and
    /// `linear_max`, and within `(ln n) * (1/eta2 - 1/eta1)` of the value
    /// at a different smoothing strength.
    pub fn smoothed_max(&self, theta: impl AsRef<[f64]>, eta: f64) -> f64 {
        self.smoothed_inner(theta.as_ref(), eta).1
    }

    /// Maximizer of the entropy-smoothed objective; doubles as the gradient
    /// of [`LossPolytope::smoothed_max`] with respect to `theta`.
    ///
    /// On the support the maximizer is the capped Gibbs distribution
    /// `q_i ~ exp(eta theta_i / x_i)` subject to `sum q = 1` and
    /// `0 <= q_i <= M x_i`, computed by iterative water-filling: clamp all
    /// coordinates whose uncapped weight reaches the cap, renormalize the
    /// rest to the remaining budget, and repeat.  Weights are formed in log
    /// space with the maximum exponent subtracted, so very large `eta` or
    /// very small `x_i` cannot overflow.  Coordinates with `x_i = 0` take
    /// `l_i = M` (value-neutral when `theta_i = 0`, optimal when
    /// `theta_i > 0`).
    pub fn smoothed_argmax(&self, theta: impl AsRef<[f64]>, eta: f64) -> LossVector {
        self.smoothed_inner(theta.as_ref(), eta).0
    }

    fn smoothed_inner(&self, theta: &[f64], eta: f64) -> (LossVector, f64) {
        assert_eq!(
            theta.len(),
            self.x.len(),
            "payoff vector length must match the polytope dimension",
        );
        assert!(eta > 0.0, "smoothing strength must be positive");
        let n = self.x.len() as f64;
        let x = self.x.values();
        let mut ell = vec![0.0; theta.len()];
        let mut value = 0.0;
        for &i in &self.zeros {
            if theta[i] >= 0.0 {
                ell[i] = self.cap;
                value += self.cap * theta[i];
            }
        }

        // Water-filling over the support in the q = l * x coordinates.
        let mut free: Vec<usize> = self.support.clone();
        let mut q = vec![0.0; theta.len()];
        let mut residual = 1.0;
        while !free.is_empty() && residual > 0.0 {
            let exp_max = free
                .iter()
                .map(|&i| eta * theta[i] / x[i])
                .fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = free
                .iter()
                .map(|&i| (eta * theta[i] / x[i] - exp_max).exp())
                .collect();
            let total: f64 = weights.iter().sum();
            let mut clamped = Vec::new();
            for (slot, &i) in free.iter().enumerate() {
                let qi = residual * weights[slot] / total;
                let cap_i = self.cap * x[i];
                if qi >= cap_i - CAP_BINDING_TOL {
                    clamped.push(i);
                } else {
                    q[i] = qi;
                }
            }
            if clamped.is_empty() {
                break;
            }
            for &i in &clamped {
                q[i] = self.cap * x[i];
                residual -= q[i];
            }
            free.retain(|i| !clamped.contains(i));
            residual = residual.max(0.0);
        }

        for &i in &self.support {
            ell[i] = q[i] / x[i];
            value += (theta[i] / x[i]) * q[i];
        }
        let mut ent = 0.0;
        for &i in &self.support {
            if q[i] > 0.0 {
                ent += q[i] * (n * q[i]).ln();
            }
        }
        value -= ent / eta;
        (LossVector::from_values(ell), value)
    }
}
