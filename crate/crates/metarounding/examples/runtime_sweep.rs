//! Iteration and runtime scaling as the number of sets grows.
//!
//! The rounding loop's iteration count is dimension-free in theory: the
//! gap shrinks like `1/k` with a constant driven by the smoothing
//! parameter and the class diameter, not by `n`.  This example measures
//! that claim on random set-cover instances of growing width, timing
//! generation, the fractional solve, and the rounding loop separately.
//!
//! Run with: `cargo run --release --example runtime_sweep`

use std::time::Instant;

use metarounding::metaround::{metaround, MetaroundingConfig};
use metarounding::setcover::{GreedyOracle, SetCoverInstance};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (m, density, epsilon) = (10, 0.3, 0.1);
    let sizes = [10usize, 50, 100, 200];
    let repeats = 3u64;

    println!("m = {m}, density = {density}, epsilon = {epsilon}, {repeats} repeats per size\n");
    println!("      n   mean iters   mean solve ms   mean round ms   worst ratio");

    let mut mean_iters_per_size = Vec::new();
    for &n in &sizes {
        let mut iters = 0usize;
        let mut solve_ms = 0.0f64;
        let mut round_ms = 0.0f64;
        let mut worst_ratio = 0.0f64;
        for repeat in 0..repeats {
            let instance = SetCoverInstance::generate(m, n, density, 100 + repeat)?;

            let t0 = Instant::now();
            let (point, _) = instance.relaxed_lp(&instance.cost)?;
            solve_ms += t0.elapsed().as_secs_f64() * 1e3;

            let mut oracle = GreedyOracle::new(&instance);
            let t1 = Instant::now();
            let result = metaround(&point, &mut oracle, &MetaroundingConfig::new(epsilon))?;
            round_ms += t1.elapsed().as_secs_f64() * 1e3;

            iters += result.iterations;
            worst_ratio = worst_ratio.max(result.alpha_emp);
        }
        let mean_iters = iters as f64 / repeats as f64;
        println!(
            "  {:>5}   {:>10.1}   {:>13.2}   {:>13.2}   {:>11.4}",
            n,
            mean_iters,
            solve_ms / repeats as f64,
            round_ms / repeats as f64,
            worst_ratio
        );
        mean_iters_per_size.push(mean_iters);
    }

    let first = mean_iters_per_size.first().copied().unwrap().max(1.0);
    let last = mean_iters_per_size.last().copied().unwrap().max(1.0);
    println!(
        "\niteration growth from n = {} to n = {}: factor {:.2} \
         (logarithmic at worst, since only the smoothing parameter sees n)",
        sizes[0],
        sizes[sizes.len() - 1],
        last / first
    );
    Ok(())
}
