//! Plug a hand-written approximation oracle into the rounding engine.
//!
//! The engine is generic over [`ApproxOracle`]: anything that can answer
//! a non-negative price vector with a member of its combinatorial class
//! can be rounded against.  This example uses the class of exactly-k
//! subsets of n items, whose price-minimizing member — the k cheapest
//! items — is computable exactly, so the oracle is 1-approximate and the
//! engine's certificate lands within epsilon of 1.
//!
//! The fractional point `x = (k/n, ..., k/n)` lies in the class's
//! relaxation `{ x in [0,1]^n : sum x_i = k }`; rounding it yields a
//! distribution over concrete k-subsets that spreads weight so evenly
//! that no price vector can separate the mixture from the fractional
//! point by more than the certified factor.
//!
//! Run with: `cargo run --example custom_oracle`

use metarounding::geometry::{CombinatorialVector, LossVector, RelaxedPoint};
use metarounding::metaround::{metaround, ApproxOracle, MetaroundingConfig, OracleError};

/// Exact best-response oracle for exactly-k subsets: sorts the prices
/// and takes the k cheapest items (ties toward lower indices).
struct CheapestKOracle {
    n: usize,
    k: usize,
}

impl ApproxOracle for CheapestKOracle {
    fn dimension(&self) -> usize {
        self.n
    }

    fn respond(&mut self, loss: &LossVector) -> Result<CombinatorialVector, OracleError> {
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by(|&a, &b| {
            loss.values()[a]
                .partial_cmp(&loss.values()[b])
                .unwrap()
                .then(a.cmp(&b))
        });
        let mut chosen = vec![0u64; self.n];
        for &item in order.iter().take(self.k) {
            chosen[item] = 1;
        }
        Ok(CombinatorialVector::new(chosen))
    }

    /// Exact best responses: factor 1.
    fn alpha(&self) -> Option<f64> {
        Some(1.0)
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (n, k) = (6, 2);
    let point = RelaxedPoint::new(vec![k as f64 / n as f64; n])?;
    let mut oracle = CheapestKOracle { n, k };

    let result = metaround(&point, &mut oracle, &MetaroundingConfig::new(0.05))?;

    println!(
        "rounded the uniform fractional point of the exactly-{k}-of-{n} class \
         in {} rounds",
        result.iterations
    );
    println!("distribution over {} subsets:", result.columns.len());
    for (weight, column) in result.support() {
        let items: Vec<String> = column
            .entries()
            .iter()
            .enumerate()
            .filter(|(_, &used)| used > 0)
            .map(|(i, _)| i.to_string())
            .collect();
        println!("  weight {:.4} on items {{{}}}", weight, items.join(", "));
    }

    let expectation = result.expectation();
    println!(
        "\nmixture mean per item: {:?}",
        expectation
            .iter()
            .map(|v| (v * 1e4).round() / 1e4)
            .collect::<Vec<f64>>()
    );
    println!(
        "worst observed best-response ratio: {:.6} (oracle promised {:.1})",
        result.alpha_emp,
        oracle.alpha().unwrap()
    );
    println!(
        "certified worst-case value {:.6} <= {:.6} = alpha_emp + epsilon",
        result.certified_value,
        result.alpha_emp + result.epsilon
    );
    Ok(())
}
