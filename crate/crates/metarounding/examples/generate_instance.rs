//! Generate a random set-cover instance, serialize it, and compare the
//! greedy cover against the fractional optimum.
//!
//! The generator draws a random coverage matrix at a target density,
//! retrying until every element is covered by at least one set, and
//! prices each set uniformly at random.  Instances round-trip through
//! JSON byte-for-byte, so a seed plus the serialized file pin down an
//! experiment exactly.
//!
//! Run with: `cargo run --example generate_instance`

use metarounding::setcover::{harmonic, SetCoverInstance};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (m, n, density, seed) = (6, 12, 0.35, 2024);
    let instance = SetCoverInstance::generate(m, n, density, seed)?;

    println!(
        "instance: {} elements, {} sets, density {:.2}, seed {}",
        instance.m, instance.n, density, instance.seed
    );
    for element in 0..instance.m {
        let sets: Vec<String> = (0..instance.n)
            .filter(|&j| instance.covers(element, j))
            .map(|j| j.to_string())
            .collect();
        println!("  element {element} covered by sets {{{}}}", sets.join(", "));
    }

    // Round-trip through JSON: the serialized form is the interchange
    // format used by the `meta` binary and reloads bit-identically.
    let json = serde_json::to_string_pretty(&instance)?;
    let reloaded: SetCoverInstance = serde_json::from_str(&json)?;
    assert_eq!(instance, reloaded);
    println!("\nserialized form ({} bytes) reloads identically:", json.len());
    for line in json.lines().take(6) {
        println!("  {line}");
    }
    println!("  ...");

    // Greedy cover vs the fractional optimum at the generated prices.
    let cover = instance.greedy_cover(&instance.cost)?;
    let greedy_cost: f64 = cover
        .entries()
        .iter()
        .zip(&instance.cost)
        .map(|(&used, &c)| used as f64 * c)
        .sum();
    let (_, lp_value) = instance.relaxed_lp(&instance.cost)?;

    let picked: Vec<String> = cover
        .entries()
        .iter()
        .enumerate()
        .filter(|(_, &used)| used > 0)
        .map(|(j, _)| j.to_string())
        .collect();
    println!("\ngreedy cover uses sets {{{}}}", picked.join(", "));
    println!("greedy cost      : {greedy_cost:.6}");
    println!("fractional optimum: {lp_value:.6}");
    println!(
        "ratio {:.4} within the guaranteed H_{} = {:.4}",
        greedy_cost / lp_value,
        instance.m,
        harmonic(instance.m)
    );
    assert!(greedy_cost <= harmonic(instance.m) * lp_value + 1e-9);
    Ok(())
}
