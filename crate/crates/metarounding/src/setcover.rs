//! Weighted set cover: instances, the greedy covering heuristic, the
//! fractional relaxation, and projection back onto the relaxed region.
//!
//! An instance has `m` ground elements and `n` candidate sets.  Its
//! relaxation replaces the 0/1 choice per set with a fractional one:
//!
//! ```txt
//! P = { x in [0,1]^n :  sum_{j covers i} x_j >= 1   for every element i }
//! ```
//!
//! Price-sensitive greedy covering repeatedly picks the set with the best
//! price per newly covered element (ties to the lowest index) and is an
//! `H_m`-approximation relative to the relaxation, where `H_m` is the
//! `m`-th harmonic number.  That makes [`GreedyOracle`] a drop-in
//! approximation oracle for the rounding engine, and this module the
//! standard worked setting for everything else in the crate: generate an
//! instance, solve the relaxation, round the fractional point.
//!
//! Projection onto `P` (used by the online gradient harness) runs
//! Dykstra's alternating-projection scheme over the covering halfspaces
//! and the unit box, then repairs any residual constraint slack exactly.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{CombinatorialVector, GeometryError, LossVector, RelaxedPoint};
use crate::metaround::{ApproxOracle, OracleError};
use crate::simplexlp::{solve, LinearProgram, LpError, LpStatus, Sense};

/// Convergence tolerance for a full sweep of Dykstra projections.
const DYKSTRA_TOL: f64 = 1e-8;

/// Cap on Dykstra sweeps before the exact repair pass takes over.
const DYKSTRA_MAX_SWEEPS: usize = 10_000;

/// Cap on redraw attempts inside [`SetCoverInstance::generate`].
const GENERATE_MAX_ATTEMPTS: usize = 1_000;

/// A weighted set-cover instance.
///
/// Serializes to a stable JSON object whose field order matches the
/// declaration order here; floating-point costs round-trip bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetCoverInstance {
    /// Number of ground elements.
    pub m: usize,
    /// Number of candidate sets.
    pub n: usize,
    /// Row-major incidence matrix: `coverage[i * n + j]` is 1 when set `j`
    /// covers element `i`, else 0.
    pub coverage: Vec<u8>,
    /// Per-set costs, one per candidate set.
    pub cost: Vec<f64>,
    /// Seed the instance was generated from (0 for hand-built instances).
    pub seed: u64,
}

/// Errors from instance handling, covering, and projection.
#[derive(Debug, Error)]
pub enum SetCoverError {
    /// A generation or query parameter is out of range.
    #[error("invalid parameter: {detail}")]
    InvalidParameter { detail: String },

    /// Random generation kept producing uncoverable instances.
    #[error("failed to generate a coverable instance after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    /// The instance data is internally inconsistent.
    #[error("invalid instance: {detail}")]
    InvalidInstance { detail: String },

    /// A price vector passed to the greedy heuristic is unusable.
    #[error("invalid loss vector: {detail}")]
    InvalidLoss { detail: String },

    /// The relaxation solve failed.
    #[error(transparent)]
    Lp(#[from] LpError),

    /// A produced point failed geometric validation.
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl SetCoverInstance {
    /// Draws a random instance: each of the `m * n` incidence entries is 1
    /// with probability `density`.  Empty sets are redrawn column by
    /// column, and instances leaving some element uncovered are redrawn
    /// outright, up to 1000 attempts.  Costs are uniform on `[0, 1)`.
    /// Identical arguments always produce the identical instance.
    pub fn generate(
        m: usize,
        n: usize,
        density: f64,
        seed: u64,
    ) -> Result<Self, SetCoverError> {
        if m == 0 || n == 0 {
            return Err(SetCoverError::InvalidParameter {
                detail: format!("need at least one element and one set, got m={m}, n={n}"),
            });
        }
        if !(density > 0.0 && density <= 1.0) {
            return Err(SetCoverError::InvalidParameter {
                detail: format!("density must lie in (0, 1], got {density}"),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        'attempt: for _ in 0..GENERATE_MAX_ATTEMPTS {
            let mut coverage = vec![0u8; m * n];
            for entry in coverage.iter_mut() {
                *entry = u8::from(rng.gen_bool(density));
            }
            for j in 0..n {
                let mut redraws = 0;
                while (0..m).all(|i| coverage[i * n + j] == 0) {
                    if redraws >= GENERATE_MAX_ATTEMPTS {
                        continue 'attempt;
                    }
                    for i in 0..m {
                        coverage[i * n + j] = u8::from(rng.gen_bool(density));
                    }
                    redraws += 1;
                }
            }
            if (0..m).any(|i| (0..n).all(|j| coverage[i * n + j] == 0)) {
                continue 'attempt;
            }
            let cost = (0..n).map(|_| rng.gen::<f64>()).collect();
            return Ok(Self {
                m,
                n,
                coverage,
                cost,
                seed,
            });
        }
        Err(SetCoverError::GenerationFailed {
            attempts: GENERATE_MAX_ATTEMPTS,
        })
    }

    /// Whether set `j` covers element `i`.
    pub fn covers(&self, element: usize, set: usize) -> bool {
        self.coverage[element * self.n + set] != 0
    }

    /// Checks structural consistency: array lengths, 0/1 incidence
    /// entries, finite non-negative costs, no empty set, and no
    /// uncoverable element.  Call this after deserializing.
    pub fn validate(&self) -> Result<(), SetCoverError> {
        let fail = |detail: String| Err(SetCoverError::InvalidInstance { detail });
        if self.m == 0 || self.n == 0 {
            return fail(format!("degenerate shape m={}, n={}", self.m, self.n));
        }
        if self.coverage.len() != self.m * self.n {
            return fail(format!(
                "coverage has {} entries for shape {}x{}",
                self.coverage.len(),
                self.m,
                self.n
            ));
        }
        if self.cost.len() != self.n {
            return fail(format!(
                "{} costs for {} sets",
                self.cost.len(),
                self.n
            ));
        }
        if let Some(pos) = self.coverage.iter().position(|&b| b > 1) {
            return fail(format!("coverage entry {pos} is {} (want 0 or 1)", self.coverage[pos]));
        }
        if let Some(j) = self.cost.iter().position(|c| !c.is_finite() || *c < 0.0) {
            return fail(format!("cost {j} is {}", self.cost[j]));
        }
        for j in 0..self.n {
            if (0..self.m).all(|i| !self.covers(i, j)) {
                return fail(format!("set {j} covers no element"));
            }
        }
        for i in 0..self.m {
            if (0..self.n).all(|j| !self.covers(i, j)) {
                return fail(format!("element {i} is covered by no set"));
            }
        }
        Ok(())
    }

    /// Price-sensitive greedy covering.  Repeatedly selects the set
    /// minimizing `loss[j] / (newly covered elements)`, breaking ties
    /// toward the lowest set index, until every element is covered.
    /// Returns the 0/1 incidence vector of the chosen sets.
    pub fn greedy_cover(&self, loss: &[f64]) -> Result<CombinatorialVector, SetCoverError> {
        if loss.len() != self.n {
            return Err(SetCoverError::InvalidLoss {
                detail: format!("{} prices for {} sets", loss.len(), self.n),
            });
        }
        if let Some(j) = loss.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(SetCoverError::InvalidLoss {
                detail: format!("price {j} is {}", loss[j]),
            });
        }
        let mut covered = vec![false; self.m];
        let mut chosen = vec![0u64; self.n];
        let mut remaining = self.m;
        while remaining > 0 {
            let mut best: Option<(f64, usize, usize)> = None;
            for j in 0..self.n {
                let fresh = (0..self.m)
                    .filter(|&i| !covered[i] && self.covers(i, j))
                    .count();
                if fresh == 0 {
                    continue;
                }
                let ratio = loss[j] / fresh as f64;
                if best.map_or(true, |(r, _, _)| ratio < r) {
                    best = Some((ratio, j, fresh));
                }
            }
            let Some((_, j, fresh)) = best else {
                return Err(SetCoverError::InvalidInstance {
                    detail: "some element is covered by no set".to_string(),
                });
            };
            chosen[j] = 1;
            for i in 0..self.m {
                if self.covers(i, j) {
                    covered[i] = true;
                }
            }
            remaining -= fresh;
        }
        Ok(CombinatorialVector::new(chosen))
    }

    /// Whether the 0/1 vector `choice` covers every element.
    pub fn is_cover(&self, choice: &CombinatorialVector) -> bool {
        choice.len() == self.n
            && (0..self.m).all(|i| {
                (0..self.n).any(|j| choice.entries()[j] > 0 && self.covers(i, j))
            })
    }

    /// Solves the fractional relaxation `min cost . x over P` and returns
    /// the optimal point together with its objective value.
    pub fn relaxed_lp(&self, cost: &[f64]) -> Result<(RelaxedPoint, f64), SetCoverError> {
        if cost.len() != self.n {
            return Err(SetCoverError::InvalidParameter {
                detail: format!("{} costs for {} sets", cost.len(), self.n),
            });
        }
        let mut lp = LinearProgram::new(cost.to_vec());
        lp.bounds = vec![(0.0, 1.0); self.n];
        for i in 0..self.m {
            let row: Vec<f64> = (0..self.n)
                .map(|j| if self.covers(i, j) { 1.0 } else { 0.0 })
                .collect();
            lp.add_row(&row, Sense::Ge, 1.0);
        }
        let sol = solve(&lp)?;
        match sol.status {
            LpStatus::Optimal => Ok((RelaxedPoint::new(sol.x)?, sol.objective)),
            LpStatus::Infeasible => Err(SetCoverError::InvalidInstance {
                detail: "the relaxation is infeasible; some element is uncoverable".to_string(),
            }),
            LpStatus::Unbounded => Err(SetCoverError::InvalidInstance {
                detail: "the boxed relaxation reported an unbounded objective".to_string(),
            }),
        }
    }

    /// Euclidean projection of an arbitrary point onto the relaxed region
    /// `P`, approximated by Dykstra's alternating projections (covering
    /// halfspaces in element order, then the unit box) and finished by an
    /// exact repair pass so the result always satisfies every constraint.
    ///
    /// The repair pass tops up each deficient covering row by raising its
    /// most fractional member coordinates first (ties toward the lowest
    /// index), so already-feasible inputs pass through unchanged.
    pub fn project(&self, point: &[f64]) -> Result<RelaxedPoint, SetCoverError> {
        if point.len() != self.n {
            return Err(SetCoverError::InvalidParameter {
                detail: format!("point has {} coordinates for {} sets", point.len(), self.n),
            });
        }
        if let Some(j) = point.iter().position(|v| !v.is_finite()) {
            return Err(SetCoverError::InvalidParameter {
                detail: format!("point coordinate {j} is {}", point[j]),
            });
        }
        let members: Vec<Vec<usize>> = (0..self.m)
            .map(|i| (0..self.n).filter(|&j| self.covers(i, j)).collect())
            .collect();
        let mut x = point.to_vec();
        // One correction vector per constraint: m halfspaces, then the box.
        let mut corrections = vec![vec![0.0; self.n]; self.m + 1];
        for _ in 0..DYKSTRA_MAX_SWEEPS {
            let before = x.clone();
            for (i, row) in members.iter().enumerate() {
                let correction = &mut corrections[i];
                for &j in row {
                    x[j] += correction[j];
                }
                let deficit = 1.0 - row.iter().map(|&j| x[j]).sum::<f64>();
                let bump = if deficit > 0.0 && !row.is_empty() {
                    deficit / row.len() as f64
                } else {
                    0.0
                };
                for &j in row {
                    let projected = x[j] + bump;
                    correction[j] = x[j] - projected;
                    x[j] = projected;
                }
            }
            let correction = &mut corrections[self.m];
            for j in 0..self.n {
                let y = x[j] + correction[j];
                let projected = y.clamp(0.0, 1.0);
                correction[j] = y - projected;
                x[j] = projected;
            }
            let sweep_diff = x
                .iter()
                .zip(&before)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            if sweep_diff < DYKSTRA_TOL {
                break;
            }
        }
        for v in x.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        // Exact repair: top up any row still short of its covering budget.
        for row in &members {
            let mut deficit = 1.0 - row.iter().map(|&j| x[j]).sum::<f64>();
            if deficit <= 0.0 {
                continue;
            }
            let mut order: Vec<usize> = row.clone();
            order.sort_by(|&a, &b| {
                let fa = x[a].min(1.0 - x[a]);
                let fb = x[b].min(1.0 - x[b]);
                fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
            });
            for j in order {
                if deficit <= 0.0 {
                    break;
                }
                let room = 1.0 - x[j];
                let bump = room.min(deficit);
                x[j] += bump;
                deficit -= bump;
            }
            if deficit > 1e-9 {
                return Err(SetCoverError::InvalidInstance {
                    detail: "a covering row cannot reach its budget; element uncoverable"
                        .to_string(),
                });
            }
        }
        Ok(RelaxedPoint::new(x)?)
    }
}

/// The `m`-th harmonic number `1 + 1/2 + ... + 1/m`, the approximation
/// factor of greedy covering relative to the fractional relaxation.
pub fn harmonic(m: usize) -> f64 {
    (1..=m).map(|k| 1.0 / k as f64).sum()
}

/// Price-sensitive greedy covering wrapped as an approximation oracle for
/// the rounding engine, with advertised factor `H_m`.
#[derive(Debug, Clone)]
pub struct GreedyOracle<'a> {
    instance: &'a SetCoverInstance,
}

impl<'a> GreedyOracle<'a> {
    pub fn new(instance: &'a SetCoverInstance) -> Self {
        Self { instance }
    }

    /// The wrapped instance.
    pub fn instance(&self) -> &SetCoverInstance {
        self.instance
    }
}

impl ApproxOracle for GreedyOracle<'_> {
    fn dimension(&self) -> usize {
        self.instance.n
    }

    fn respond(&mut self, loss: &LossVector) -> Result<CombinatorialVector, OracleError> {
        self.instance
            .greedy_cover(loss.values())
            .map_err(|e| OracleError::new(e.to_string()))
    }

    fn alpha(&self) -> Option<f64> {
        Some(harmonic(self.instance.m))
    }
}

/// Three elements, three sets, every element covered by exactly two sets.
/// The relaxation has a strictly fractional optimum at `(1/2, 1/2, 1/2)`
/// while every integral cover needs two sets.  Shared test fixture.
#[cfg(test)]
pub(crate) fn pairwise_triangle() -> SetCoverInstance {
    SetCoverInstance {
        m: 3,
        n: 3,
        // element 0: sets {0,1}; element 1: sets {1,2}; element 2: sets {0,2}.
        coverage: vec![1, 1, 0, 0, 1, 1, 1, 0, 1],
        cost: vec![1.0, 1.0, 1.0],
        seed: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn triangle_instance_is_valid() {
        pairwise_triangle().validate().unwrap();
    }

    #[test]
    fn generate_is_deterministic_and_coverable() {
        let a = SetCoverInstance::generate(10, 30, 0.2, 7).unwrap();
        let b = SetCoverInstance::generate(10, 30, 0.2, 7).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
        let c = SetCoverInstance::generate(10, 30, 0.2, 8).unwrap();
        assert_ne!(a.coverage, c.coverage, "distinct seeds should differ");
    }

    #[test]
    fn generate_row_sums_match_density() {
        // With 1000 sets at density 0.3 every element should be covered by
        // roughly 300 sets; a 3-sigma band is [256, 344].
        let inst = SetCoverInstance::generate(10, 1000, 0.3, 42).unwrap();
        for i in 0..inst.m {
            let row_sum: usize = (0..inst.n).filter(|&j| inst.covers(i, j)).count();
            assert!(
                (256..=344).contains(&row_sum),
                "element {i} covered by {row_sum} sets"
            );
        }
        inst.validate().unwrap();
    }

    #[test]
    fn generate_rejects_bad_parameters() {
        assert!(matches!(
            SetCoverInstance::generate(0, 5, 0.5, 0),
            Err(SetCoverError::InvalidParameter { .. })
        ));
        assert!(matches!(
            SetCoverInstance::generate(5, 5, 0.0, 0),
            Err(SetCoverError::InvalidParameter { .. })
        ));
        assert!(matches!(
            SetCoverInstance::generate(5, 5, 1.2, 0),
            Err(SetCoverError::InvalidParameter { .. })
        ));
    }

    #[test]
    fn validate_flags_uncoverable_elements() {
        let mut inst = pairwise_triangle();
        inst.coverage = vec![1, 1, 0, 0, 1, 1, 0, 0, 0];
        assert!(matches!(
            inst.validate(),
            Err(SetCoverError::InvalidInstance { .. })
        ));
    }

    #[test]
    fn greedy_prefers_low_index_on_ties() {
        let inst = pairwise_triangle();
        // All sets cover two fresh elements at equal price: set 0 wins the
        // tie, leaving element 1 for set 1 (again by index).
        let cover = inst.greedy_cover(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(cover.entries(), &[1, 1, 0]);
        assert!(inst.is_cover(&cover));
    }

    #[test]
    fn greedy_picks_free_sets_first() {
        let inst = pairwise_triangle();
        let cover = inst.greedy_cover(&[0.0, 5.0, 5.0]).unwrap();
        assert_eq!(cover.entries(), &[1, 1, 0]);
        assert!((cover.dot(&[0.0, 5.0, 5.0]) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn greedy_rejects_bad_prices() {
        let inst = pairwise_triangle();
        assert!(matches!(
            inst.greedy_cover(&[1.0, -0.5, 1.0]),
            Err(SetCoverError::InvalidLoss { .. })
        ));
        assert!(matches!(
            inst.greedy_cover(&[1.0, 1.0]),
            Err(SetCoverError::InvalidLoss { .. })
        ));
    }

    #[test]
    fn greedy_cost_respects_harmonic_factor_on_random_prices() {
        let inst = SetCoverInstance::generate(6, 12, 0.35, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let factor = harmonic(inst.m);
        for _ in 0..50 {
            let loss: Vec<f64> = (0..inst.n).map(|_| rng.gen::<f64>()).collect();
            let cover = inst.greedy_cover(&loss).unwrap();
            assert!(inst.is_cover(&cover));
            let (_, lp_value) = inst.relaxed_lp(&loss).unwrap();
            assert!(
                cover.dot(&loss) <= factor * (lp_value + 1e-7),
                "greedy {} vs factor * lp {}",
                cover.dot(&loss),
                factor * lp_value
            );
        }
    }

    #[test]
    fn relaxation_of_triangle_is_half_everywhere() {
        let inst = pairwise_triangle();
        let (x, value) = inst.relaxed_lp(&[1.0, 1.0, 1.0]).unwrap();
        assert!((value - 1.5).abs() <= 1e-9);
        for &v in x.values() {
            assert!((v - 0.5).abs() <= 1e-9);
        }
    }

    #[test]
    fn harmonic_matches_reference_values() {
        assert!((harmonic(1) - 1.0).abs() < 1e-15);
        assert!((harmonic(3) - 1.8333333333333333).abs() < 1e-15);
        assert!((harmonic(10) - 2.9289682539682538).abs() < 1e-15);
    }

    #[test]
    fn projection_passes_feasible_points_through() {
        let inst = pairwise_triangle();
        let inside = [0.6, 0.7, 0.5];
        let projected = inst.project(&inside).unwrap();
        assert_eq!(projected.values(), &inside);
    }

    #[test]
    fn projection_of_origin_hits_fractional_center() {
        let inst = pairwise_triangle();
        let projected = inst.project(&[0.0, 0.0, 0.0]).unwrap();
        for &v in projected.values() {
            assert!((v - 0.5).abs() <= 1e-6, "got {v}");
        }
    }

    #[test]
    fn projection_matches_reference_point() {
        // Quadratic-programming reference: the nearest feasible point to
        // (1.2, -0.3, 0.4) is (1.0, 0.15, 0.85).
        let inst = pairwise_triangle();
        let projected = inst.project(&[1.2, -0.3, 0.4]).unwrap();
        let expected = [1.0, 0.15, 0.85];
        for (got, want) in projected.values().iter().zip(&expected) {
            assert!((got - want).abs() <= 1e-6, "got {got}, want {want}");
        }
    }

    #[test]
    fn projection_satisfies_variational_inequality() {
        // For the true projection p of z, (z - p) . (y - p) <= 0 for every
        // feasible y; allow slack for the iterative approximation.
        let inst = SetCoverInstance::generate(5, 8, 0.4, 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let z: Vec<f64> = (0..inst.n).map(|_| rng.gen_range(-1.0..2.0)).collect();
            let p = inst.project(&z).unwrap();
            let cover = inst
                .greedy_cover(&(0..inst.n).map(|_| rng.gen::<f64>()).collect::<Vec<_>>())
                .unwrap();
            let y: Vec<f64> = (0..inst.n)
                .map(|j| (cover.entries()[j] as f64).max(rng.gen::<f64>()))
                .collect();
            let inner: f64 = (0..inst.n)
                .map(|j| (z[j] - p.values()[j]) * (y[j] - p.values()[j]))
                .sum();
            assert!(inner <= 1e-5, "variational inequality violated: {inner}");
        }
    }

    #[test]
    fn oracle_contract_matches_greedy() {
        let inst = pairwise_triangle();
        let mut oracle = GreedyOracle::new(&inst);
        assert_eq!(oracle.dimension(), 3);
        assert!((oracle.alpha().unwrap() - harmonic(3)).abs() < 1e-15);
        let loss = LossVector::from_values(vec![1.0, 1.0, 1.0]);
        let response = oracle.respond(&loss).unwrap();
        assert_eq!(response, inst.greedy_cover(&[1.0, 1.0, 1.0]).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn json_round_trip_is_exact(
            m in 1usize..4,
            n in 1usize..4,
            bits in prop::collection::vec(0u8..=1, 16),
            costs in prop::collection::vec(0.0f64..1e9, 4),
            seed in any::<u64>(),
        ) {
            let inst = SetCoverInstance {
                m,
                n,
                coverage: bits[..m * n].to_vec(),
                cost: costs[..n].to_vec(),
                seed,
            };
            let text = serde_json::to_string(&inst).unwrap();
            let back: SetCoverInstance = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back, inst);
        }
    }
}
