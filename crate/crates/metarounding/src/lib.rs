//! Metarounding: rounding fractional relaxations through approximation
//! oracles, with certificates.
//!
//! Given a point `x` in a relaxation of a combinatorial class `C` (covers,
//! paths, assignments, ...) and an oracle that answers any non-negative
//! loss vector with an `alpha`-approximate member of `C`, this crate
//! constructs a sparse distribution `lambda` over `C` such that
//!
//! ```txt
//! E[c . l]  <=  (alpha_emp + epsilon) * (x . l)     for every loss l >= 0,
//! ```
//!
//! where `alpha_emp <= alpha` is measured from the oracle's own answers.
//! The engine is a column-generation loop: each round queries the oracle at
//! an entropy-smoothed worst-case loss, takes a safeguarded corrective step
//! over the collected columns, and stops once a duality gap certifies the
//! guarantee.  A final small LP tightens the weights.
//!
//! The crate is organized as a library first; start with the runnable
//! examples:
//!
//! ```txt
//! examples/
//!   round_once.rs          one metarounding call on a tiny cover instance,
//!                          with the per-iteration trace printed
//!   custom_oracle.rs       plugging your own oracle into the engine
//!   generate_instance.rs   random set-cover instances and their JSON form
//!   online_comparison.rs   online play: metarounding vs a perturbed-leader
//!                          baseline on the same loss stream
//!   runtime_sweep.rs       iteration/runtime scaling as dimension grows
//!   margin_simplex.rs      the all-ones specialization: losses live on the
//!                          probability simplex and the engine optimizes a
//!                          margin objective
//! ```
//!
//! Run one with `cargo run --release --example round_once`.  The same
//! functionality is scripted by the thin `meta` binary (`meta gen`,
//! `meta solve`, `meta online`, `meta sweep`), which adds reproducible
//! file-based workflows on top of the library.
//!
//! Module map:
//!
//! * [`geometry`] — the scaled loss polytope, its entropy smoothing, and
//!   exact linear maximization.
//! * [`simplexlp`] — a dense two-phase simplex solver with Bland's rule,
//!   plus exhaustive vertex enumeration for small programs.
//! * [`metaround`] — the rounding engine: oracle trait, corrective steps,
//!   gap certificates, weight refinement, sampling.
//! * [`setcover`] — a concrete testbed: instance generation, the greedy
//!   cover oracle, the covering LP relaxation, Euclidean projection.
//! * [`online`] — online decision making built on repeated metarounding,
//!   with regret ledgers and a follow-the-perturbed-leader baseline.
//! * [`cli`] — the file formats and commands behind the `meta` binary.

pub mod cli;
pub mod geometry;
pub mod metaround;
pub mod online;
pub mod setcover;
pub mod simplexlp;

pub use geometry::{
    CombinatorialVector, GeometryError, LossPolytope, LossVector, RelaxedPoint,
};
pub use metaround::{
    metaround, ApproxOracle, MetaroundError, MetaroundingConfig, MetaroundingResult, OracleError,
};
pub use online::{
    alpha_regret, run_fpl_baseline, run_online, AlphaRegret, LossModel, OnlineConfig, OnlineError,
    ProjectionMode, RegretLedger,
};
pub use setcover::{harmonic, GreedyOracle, SetCoverError, SetCoverInstance};
