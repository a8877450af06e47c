//! The recombining trinomial tree against brute-force enumeration of every
//! per-node volatility choice.

use std::time::Instant;

use gtilde_control::gtilde::{GBounds, GTildeSpec};
use gtilde_control::pde::{brute_force_tree_expectation, tree_expectation};

fn main() -> gtilde_control::Result<()> {
    let bounds = GBounds::new(0.25, 1.0)?;
    let payoffs: [(&str, fn(f64) -> f64); 3] =
        [("b^2", |b| b * b), ("|b - 0.1|", |b| (b - 0.1).abs()), ("sin(3b)", |b| (3.0 * b).sin())];
    for depth in 1..=4 {
        let points = if depth <= 3 { 4 } else { 2 };
        let spec = GTildeSpec::quadratic_uniform(bounds, points, 0.25)?;
        for (name, f) in &payoffs {
            let start = Instant::now();
            let tree = tree_expectation(&spec, depth, 0.1, f)?;
            let brute = brute_force_tree_expectation(&spec, depth, 0.1, f)?;
            println!(
                "depth {depth} {name:<10} tree {tree:+.12} brute {brute:+.12} diff {:.1e} ({:.2?})",
                (tree - brute).abs(),
                start.elapsed()
            );
        }
    }
    Ok(())
}
