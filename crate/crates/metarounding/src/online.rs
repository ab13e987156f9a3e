//! Online combinatorial decisions by rounding a drifting fractional point.
//!
//! Each round the harness plays a combinatorial vector, observes a price
//! vector `l_t` with entries in `[0, 1]`, pays `c_t . l_t`, and updates.
//! The fractional iterate follows projected online gradient descent,
//!
//! ```txt
//! x_{t+1} = proj( x_t - (step0 / sqrt(t)) l_t ),
//! ```
//!
//! and the played vector is drawn from the rounding engine's distribution
//! for the current iterate, so the expected per-round cost tracks
//! `(alpha + epsilon) x_t . l_t`.  Rounding results are cached on a
//! quantized copy of the iterate: when the iterate barely moves, the
//! previous distribution is reused and only the sampling is repeated.
//!
//! The [`RegretLedger`] records, per round, the incurred cost and two
//! clairvoyant prefix benchmarks: the fractional optimum of the summed
//! prices so far, and the best single column the run itself has produced
//! so far.  [`alpha_regret`] turns the final row into the two standard
//! regret numbers against a factor-`alpha` comparator.
//!
//! [`run_fpl_baseline`] plays the classical follow-the-perturbed-leader
//! strategy with the same price stream (greedy cover of the summed past
//! prices plus a uniform perturbation growing like `sqrt(t)`), giving a
//! like-for-like baseline for the rounding-based play.

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::RelaxedPoint;
use crate::geometry::CombinatorialVector;
use crate::metaround::{metaround, MetaroundError, MetaroundingConfig};
use crate::setcover::{GreedyOracle, SetCoverError, SetCoverInstance};

/// How the stepped iterate is brought back to a usable fractional point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionMode {
    /// Euclidean projection onto the covering relaxation (the default);
    /// iterates stay feasible, so the rounding guarantee applies verbatim.
    RelaxedPolytope,
    /// Plain clamping to the unit box; cheaper, but iterates may leave
    /// the relaxation and can collapse to the all-zero point.
    Box,
}

/// Where the per-round price vectors come from.
#[derive(Debug, Clone)]
pub enum LossModel {
    /// Independent uniform draws from `[0, 1)^n`.
    IidUniform,
    /// A fixed schedule, one row per round; entries must lie in `[0, 1]`.
    Fixed(Vec<Vec<f64>>),
}

/// Settings for an online run.
#[derive(Debug, Clone)]
pub struct OnlineConfig {
    /// Number of rounds to play.
    pub horizon: usize,
    /// Master seed; price draws, sampling, and baseline perturbations use
    /// separate deterministic streams derived from it, so the rounding
    /// run and the baseline see the identical price sequence.
    pub seed: u64,
    /// Base step size; `None` selects `1 / sqrt(n)`.
    pub step0: Option<f64>,
    /// Projection mode for the gradient step.
    pub projection: ProjectionMode,
    /// Price source.
    pub losses: LossModel,
    /// Settings handed to the rounding engine each time the iterate moves.
    pub rounding: MetaroundingConfig,
}

impl OnlineConfig {
    /// A configuration with the given horizon and seed, defaults elsewhere.
    pub fn new(horizon: usize, seed: u64) -> Self {
        Self {
            horizon,
            seed,
            step0: None,
            projection: ProjectionMode::RelaxedPolytope,
            losses: LossModel::IidUniform,
            rounding: MetaroundingConfig::default(),
        }
    }
}

/// One played round.
#[derive(Debug, Clone)]
pub struct RegretRow {
    /// Round index, starting at 1.
    pub round: usize,
    /// Cost paid this round.
    pub incurred: f64,
    /// Total cost paid through this round.
    pub cumulative: f64,
    /// Fractional optimum of the summed prices through this round.
    pub benchmark_lp: f64,
    /// Cheapest single column produced so far, priced at the summed
    /// prices through this round.
    pub benchmark_column: f64,
    /// Empirical approximation factor of the distribution in play
    /// (NaN for the perturbed-leader baseline, which has none).
    pub alpha_emp: f64,
    /// Rounding rounds spent this round (0 on cache hits and baseline).
    pub meta_iterations: usize,
    /// Milliseconds spent rounding this round (0 on cache hits).
    pub meta_ms: u128,
}

/// The full per-round record of a run.
#[derive(Debug, Clone, Default)]
pub struct RegretLedger {
    pub rows: Vec<RegretRow>,
}

impl RegretLedger {
    /// Total cost paid over the whole run.
    pub fn cumulative(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.cumulative)
    }

    /// Largest empirical approximation factor seen (ignores NaN rows).
    pub fn worst_alpha(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.alpha_emp)
            .filter(|a| !a.is_nan())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Final-row regret against a factor-`alpha` comparator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaRegret {
    /// `cumulative - alpha * (fractional optimum of the summed prices)`.
    pub vs_lp: f64,
    /// `cumulative - alpha * (best single produced column)`.
    pub vs_best_column: f64,
}

/// Regret of a finished run relative to `alpha` times its clairvoyant
/// benchmarks.  An empty ledger has zero regret.
pub fn alpha_regret(ledger: &RegretLedger, alpha: f64) -> AlphaRegret {
    match ledger.rows.last() {
        Some(row) => AlphaRegret {
            vs_lp: row.cumulative - alpha * row.benchmark_lp,
            vs_best_column: row.cumulative - alpha * row.benchmark_column,
        },
        None => AlphaRegret {
            vs_lp: 0.0,
            vs_best_column: 0.0,
        },
    }
}

/// Errors from the online harness.
#[derive(Debug, Error)]
pub enum OnlineError {
    /// Instance handling, benchmark solves, or projection failed.
    #[error(transparent)]
    SetCover(#[from] SetCoverError),

    /// The rounding engine failed mid-run; the ledger holds every round
    /// completed before the failure.
    #[error("rounding failed in round {round}")]
    RoundingFailed {
        round: usize,
        #[source]
        source: MetaroundError,
        partial: Box<RegretLedger>,
    },

    /// Box clamping produced the all-zero point, which admits no price
    /// polytope; use the relaxation projection or a smaller step.
    #[error("gradient step collapsed to the all-zero point under box clamping")]
    DegenerateIterate,

    /// A run parameter is unusable.
    #[error("invalid parameter: {detail}")]
    InvalidParameter { detail: String },
}

/// One projected gradient step `proj(current - step_size * loss)`.
pub fn ogd_step(
    instance: &SetCoverInstance,
    current: &RelaxedPoint,
    loss: &[f64],
    step_size: f64,
    mode: ProjectionMode,
) -> Result<RelaxedPoint, OnlineError> {
    if loss.len() != current.len() {
        return Err(OnlineError::InvalidParameter {
            detail: format!(
                "loss has {} coordinates for an iterate of length {}",
                loss.len(),
                current.len()
            ),
        });
    }
    if !(step_size > 0.0 && step_size.is_finite()) {
        return Err(OnlineError::InvalidParameter {
            detail: format!("step size must be positive and finite, got {step_size}"),
        });
    }
    if let Some(j) = loss.iter().position(|v| !v.is_finite()) {
        return Err(OnlineError::InvalidParameter {
            detail: format!("loss coordinate {j} is {}", loss[j]),
        });
    }
    let stepped: Vec<f64> = current
        .values()
        .iter()
        .zip(loss)
        .map(|(x, l)| x - step_size * l)
        .collect();
    match mode {
        ProjectionMode::RelaxedPolytope => Ok(instance.project(&stepped)?),
        ProjectionMode::Box => {
            let clamped: Vec<f64> = stepped.iter().map(|v| v.clamp(0.0, 1.0)).collect();
            if clamped.iter().all(|&v| v <= 0.0) {
                return Err(OnlineError::DegenerateIterate);
            }
            Ok(RelaxedPoint::new(clamped).map_err(SetCoverError::from)?)
        }
    }
}

fn validate_losses(model: &LossModel, n: usize, horizon: usize) -> Result<(), OnlineError> {
    if let LossModel::Fixed(rows) = model {
        if rows.len() < horizon {
            return Err(OnlineError::InvalidParameter {
                detail: format!("{} fixed loss rows for a horizon of {horizon}", rows.len()),
            });
        }
        for (t, row) in rows.iter().take(horizon).enumerate() {
            if row.len() != n {
                return Err(OnlineError::InvalidParameter {
                    detail: format!("fixed loss row {t} has {} entries for n={n}", row.len()),
                });
            }
            if let Some(j) = row
                .iter()
                .position(|v| !v.is_finite() || *v < 0.0 || *v > 1.0)
            {
                return Err(OnlineError::InvalidParameter {
                    detail: format!("fixed loss row {t}, entry {j} is {} (want [0, 1])", row[j]),
                });
            }
        }
    }
    Ok(())
}

fn draw_loss(model: &LossModel, n: usize, round: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match model {
        LossModel::IidUniform => (0..n).map(|_| rng.gen::<f64>()).collect(),
        LossModel::Fixed(rows) => rows[round - 1].clone(),
    }
}

fn quantize(point: &RelaxedPoint) -> Vec<i64> {
    point
        .values()
        .iter()
        .map(|v| (v * 1e6).round() as i64)
        .collect()
}

/// Coordinates below this floor are dropped before rounding.  The
/// projected iterate routinely carries load-free slivers — projection
/// residue and price-driven decay passing through zero — and a sliver
/// at 1e-7 raises the price polytope's ceiling to 1e7, far beyond what
/// the rounding engine's iteration budget can absorb.  Zeroing mass
/// below the floor perturbs a round's fractional cost by less than
/// `n` times the floor, well under the approximation slack, while
/// keeping the price ceiling at 1e4 or below.
const SUPPORT_FLOOR: f64 = 1e-4;

/// Returns the iterate with sub-floor coordinates zeroed and row
/// coverage restored, ready for rounding.  Any row the zeroing leaves
/// short gets its deficit added back onto its largest members with
/// slack, so the result stays inside the relaxation and the box.
fn condition_for_rounding(
    instance: &SetCoverInstance,
    iterate: &RelaxedPoint,
) -> Result<RelaxedPoint, OnlineError> {
    let mut values = iterate.values().to_vec();
    let mut dropped = false;
    for v in values.iter_mut() {
        if *v > 0.0 && *v < SUPPORT_FLOOR {
            *v = 0.0;
            dropped = true;
        }
    }
    if !dropped {
        return Ok(iterate.clone());
    }
    let n = instance.n;
    for element in 0..instance.m {
        let members: Vec<usize> = (0..n)
            .filter(|&j| instance.coverage[element * n + j] == 1)
            .collect();
        let mut covered: f64 = members.iter().map(|&j| values[j]).sum();
        while covered < 1.0 {
            // A short row always has a member with slack: members
            // pinned at one already cover it on their own.
            let target = members
                .iter()
                .copied()
                .filter(|&j| values[j] < 1.0)
                .max_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
            match target {
                Some(j) => {
                    let add = (1.0 - covered).min(1.0 - values[j]);
                    values[j] += add;
                    covered += add;
                }
                None => break,
            }
        }
    }
    RelaxedPoint::new(values).map_err(|source| OnlineError::InvalidParameter {
        detail: format!("conditioned iterate left the box: {source}"),
    })
}

/// Plays `horizon` rounds of rounding-based online decisions.
///
/// The iterate starts at the optimum of the relaxation under the
/// instance's own costs and then follows projected gradient descent on
/// the observed prices.  Identical configurations replay identically,
/// except for the millisecond timings in the ledger.
pub fn run_online(
    instance: &SetCoverInstance,
    config: &OnlineConfig,
) -> Result<RegretLedger, OnlineError> {
    if config.horizon == 0 {
        return Err(OnlineError::InvalidParameter {
            detail: "horizon must be at least 1".to_string(),
        });
    }
    let n = instance.n;
    validate_losses(&config.losses, n, config.horizon)?;
    let step0 = match config.step0 {
        Some(s) if s > 0.0 && s.is_finite() => s,
        None => 1.0 / (n as f64).sqrt(),
        Some(s) => {
            return Err(OnlineError::InvalidParameter {
                detail: format!("step0 must be positive and finite, got {s}"),
            })
        }
    };

    let mut rng_loss = ChaCha8Rng::seed_from_u64(config.seed);
    rng_loss.set_stream(1);
    let mut rng_sample = ChaCha8Rng::seed_from_u64(config.seed);
    rng_sample.set_stream(2);

    let (mut iterate, _) = instance.relaxed_lp(&instance.cost)?;
    let mut cache = HashMap::new();
    let mut pool: HashSet<CombinatorialVector> = HashSet::new();
    let mut rows: Vec<RegretRow> = Vec::new();
    let mut cumulative = 0.0;
    let mut summed_loss = vec![0.0; n];

    for round in 1..=config.horizon {
        let rounding_point = condition_for_rounding(instance, &iterate)?;
        let key = quantize(&rounding_point);
        let mut meta_ms = 0u128;
        if !cache.contains_key(&key) {
            let begun = Instant::now();
            let mut oracle = GreedyOracle::new(instance);
            match metaround(&rounding_point, &mut oracle, &config.rounding) {
                Ok(result) => {
                    meta_ms = begun.elapsed().as_millis();
                    for column in &result.columns {
                        pool.insert(column.clone());
                    }
                    cache.insert(key.clone(), result);
                }
                Err(source) => {
                    return Err(OnlineError::RoundingFailed {
                        round,
                        source,
                        partial: Box::new(RegretLedger { rows }),
                    });
                }
            }
        }
        let distribution = &cache[&key];
        let column = distribution.sample(&mut rng_sample).clone();
        let alpha_emp = distribution.alpha_emp;
        let meta_iterations = distribution.iterations;

        let loss = draw_loss(&config.losses, n, round, &mut rng_loss);
        let incurred = column.dot(&loss);
        cumulative += incurred;
        for (total, l) in summed_loss.iter_mut().zip(&loss) {
            *total += l;
        }
        let (_, benchmark_lp) = instance.relaxed_lp(&summed_loss)?;
        let benchmark_column = pool
            .iter()
            .map(|c| c.dot(&summed_loss))
            .fold(f64::INFINITY, f64::min);
        rows.push(RegretRow {
            round,
            incurred,
            cumulative,
            benchmark_lp,
            benchmark_column,
            alpha_emp,
            meta_iterations,
            meta_ms,
        });

        if round < config.horizon {
            let step = step0 / (round as f64).sqrt();
            iterate = ogd_step(instance, &iterate, &loss, step, config.projection)?;
        }
    }
    Ok(RegretLedger { rows })
}

/// Plays the follow-the-perturbed-leader baseline over the same price
/// stream as [`run_online`] with the same seed: each round the greedy
/// cover of the summed past prices plus a uniform perturbation in
/// `[0, sqrt(t))` per coordinate.  Ledger rows carry NaN for the
/// empirical factor and zeros for the rounding effort fields.
pub fn run_fpl_baseline(
    instance: &SetCoverInstance,
    config: &OnlineConfig,
) -> Result<RegretLedger, OnlineError> {
    if config.horizon == 0 {
        return Err(OnlineError::InvalidParameter {
            detail: "horizon must be at least 1".to_string(),
        });
    }
    let n = instance.n;
    validate_losses(&config.losses, n, config.horizon)?;

    let mut rng_loss = ChaCha8Rng::seed_from_u64(config.seed);
    rng_loss.set_stream(1);
    let mut rng_perturb = ChaCha8Rng::seed_from_u64(config.seed);
    rng_perturb.set_stream(3);

    let mut pool: HashSet<CombinatorialVector> = HashSet::new();
    let mut rows: Vec<RegretRow> = Vec::new();
    let mut cumulative = 0.0;
    let mut summed_loss = vec![0.0; n];

    for round in 1..=config.horizon {
        let spread = (round as f64).sqrt();
        let perturbed: Vec<f64> = summed_loss
            .iter()
            .map(|past| past + rng_perturb.gen_range(0.0..spread))
            .collect();
        let column = instance.greedy_cover(&perturbed)?;
        pool.insert(column.clone());

        let loss = draw_loss(&config.losses, n, round, &mut rng_loss);
        let incurred = column.dot(&loss);
        cumulative += incurred;
        for (total, l) in summed_loss.iter_mut().zip(&loss) {
            *total += l;
        }
        let (_, benchmark_lp) = instance.relaxed_lp(&summed_loss)?;
        let benchmark_column = pool
            .iter()
            .map(|c| c.dot(&summed_loss))
            .fold(f64::INFINITY, f64::min);
        rows.push(RegretRow {
            round,
            incurred,
            cumulative,
            benchmark_lp,
            benchmark_column,
            alpha_emp: f64::NAN,
            meta_iterations: 0,
            meta_ms: 0,
        });
    }
    Ok(RegretLedger { rows })
}
