//! The convex generator G̃ for a quadratic penalty: values, the derivative
//! at the smallest maximiser, the argmax interval and the domination check.

use gtilde_control::gtilde::{argmax_gamma_set, check_domination, g_eval, gtilde_derivative, gtilde_eval};
use gtilde_control::gtilde::{GBounds, GTildeSpec};

fn main() -> gtilde_control::Result<()> {
    let bounds = GBounds::new(0.25, 1.0)?;
    let convex = GTildeSpec::quadratic_uniform(bounds, 65, 0.5)?;
    let sublinear = GTildeSpec::sublinear(bounds);

    println!("{:>6} {:>12} {:>12} {:>12} {:>10}", "a", "G(a)", "G~(a)", "G~'(a)", "argmax");
    for a in [-2.0, -0.5, 0.0, 0.25, 1.0, 3.0] {
        let (lo, hi) = argmax_gamma_set(&convex, a, 1e-12);
        println!(
            "{a:>6.2} {:>12.6} {:>12.6} {:>12.6} [{lo:.3}, {hi:.3}]",
            g_eval(&bounds, a),
            gtilde_eval(&convex, a),
            gtilde_derivative(&convex, a),
        );
    }
    // At the kink of G the argmax set is the whole interval.
    println!("sublinear argmax at 0: {:?}", argmax_gamma_set(&sublinear, 0.0, 1e-12));

    let pairs: Vec<(f64, f64)> = (0..400).map(|j| (-5.0 + 0.025 * j as f64, 4.0 - 0.02 * j as f64)).collect();
    let report = check_domination(&convex, &pairs);
    println!("domination check: {report:?}");
    Ok(())
}
