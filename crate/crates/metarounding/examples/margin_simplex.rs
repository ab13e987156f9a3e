//! The all-ones specialization: rounding as a zero-sum matrix game.
//!
//! When the fractional point is the all-ones vector, the price region
//! the engine plays against collapses to the probability simplex: the
//! per-coordinate cap becomes `max_i 1/x_i = 1` and the budget
//! constraint reads `sum of prices = 1`.  Certifying the mixture then
//! means bounding its largest coordinate — exactly the column player's
//! objective in a zero-sum game where the row player picks a
//! coordinate.
//!
//! With an exact best-response oracle over a fixed column pool, the
//! loop therefore sandwiches the game value: the worst best-response
//! ratio observed is a lower bound, the certified worst-case price of
//! the final mixture an upper bound, and they meet within epsilon.
//!
//! The pool below has game value exactly 1/2 (the row player mixes
//! coordinates 0 and 4 evenly; the column player mixes the two
//! complementary half-columns).
//!
//! Run with: `cargo run --example margin_simplex`

use metarounding::geometry::{CombinatorialVector, LossPolytope, LossVector, RelaxedPoint};
use metarounding::metaround::{metaround, ApproxOracle, MetaroundingConfig, OracleError};

/// Exact best response over a fixed pool of columns.
struct PoolOracle {
    columns: Vec<CombinatorialVector>,
}

impl ApproxOracle for PoolOracle {
    fn dimension(&self) -> usize {
        self.columns[0].len()
    }

    fn respond(&mut self, loss: &LossVector) -> Result<CombinatorialVector, OracleError> {
        self.columns
            .iter()
            .min_by(|a, b| {
                a.dot(loss.values())
                    .partial_cmp(&b.dot(loss.values()))
                    .unwrap()
            })
            .cloned()
            .ok_or_else(|| OracleError::new("empty column pool"))
    }

    fn alpha(&self) -> Option<f64> {
        None
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let point = RelaxedPoint::new(vec![1.0; 6])?;
    let polytope = LossPolytope::new(point.clone())?;

    // All-ones point: the cap is 1 and the price budget is 1, i.e. the
    // price region is the probability simplex over the 6 coordinates.
    println!("per-coordinate price cap  : {}", polytope.cap());
    let budget: f64 = polytope.uniform_loss().values().iter().sum();
    println!("price budget (sum)        : {budget}");
    assert_eq!(polytope.cap(), 1.0);
    assert!((budget - 1.0).abs() < 1e-12);

    let mut oracle = PoolOracle {
        columns: vec![
            CombinatorialVector::new(vec![1, 1, 1, 0, 0, 0]),
            CombinatorialVector::new(vec![0, 0, 0, 1, 1, 1]),
            CombinatorialVector::new(vec![1, 0, 0, 1, 0, 0]),
            CombinatorialVector::new(vec![0, 1, 1, 0, 1, 1]),
        ],
    };

    let epsilon = 0.05;
    let result = metaround(&point, &mut oracle, &MetaroundingConfig::new(epsilon))?;

    println!("\nmixture after {} rounds:", result.iterations);
    for (weight, column) in result.support() {
        println!("  weight {:.4} on column {:?}", weight, column.entries());
    }

    let expectation = result.expectation();
    let worst_coordinate = expectation.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    println!(
        "\nmixture coordinates       : {:?}",
        expectation
            .iter()
            .map(|v| (v * 1e4).round() / 1e4)
            .collect::<Vec<f64>>()
    );
    println!("largest mixture coordinate: {worst_coordinate:.6}");
    println!(
        "game value sandwich       : {:.6} <= 1/2 <= {:.6} (width <= epsilon = {epsilon})",
        result.alpha_emp, result.certified_value
    );
    assert!(result.alpha_emp <= 0.5 + 1e-9);
    assert!(result.certified_value + 1e-9 >= 0.5);
    assert!(result.certified_value - result.alpha_emp <= epsilon + 1e-9);
    Ok(())
}
