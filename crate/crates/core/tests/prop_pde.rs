mod common;

use common::*;
use gtilde_control::pde::*;
use proptest::prelude::*;

use std::sync::Arc;

fn solve_with(
    system: &gtilde_control::systems::ControlSystem,
    spec: &gtilde_control::gtilde::GTildeSpec,
    grid: &Grid,
    control: &Field,
    k_end: usize,
    terminal: &[f64],
    boundary: &Boundary,
) -> Field {
    let options = BackwardOptions::default();
    run_backward(system, spec, grid, ControlMode::Fixed(control), k_end, terminal, boundary, options).unwrap().y
}

fn solve(
    system: &gtilde_control::systems::ControlSystem,
    spec: &gtilde_control::gtilde::GTildeSpec,
    grid: &Grid,
    control: &Field,
    k_end: usize,
    terminal: &[f64],
) -> Field {
    solve_with(system, spec, grid, control, k_end, terminal, &Boundary::LinearExtrapolation)
}

/// Holds the two end values of `terminal` for all times.
fn pinned_ends(terminal: &[f64]) -> Boundary {
    let (lo, hi) = (terminal[0], terminal[terminal.len() - 1]);
    Boundary::Dirichlet(Arc::new(move |_, x| if x < 0.0 { lo } else { hi }))
}

proptest! {
    #![proptest_config(config(1000, 0x70e1))]

    #[test]
    fn tower_property(
        p in params(),
        spec in spec(),
        u in -1.0f64..1.0,
        terminal in proptest::collection::vec(-2.0f64..2.0, 21),
        split in 0.0f64..1.0,
        back in 0.0f64..1.0,
    ) {
        let system = system(p, "x");
        let grid = cfl_grid(&system, &spec, -2.0, 2.0, 21, 0.25);
        let control = Field::constant("u", &grid, u);
        let direct = solve(&system, &spec, &grid, &control, grid.n, &terminal);
        let s = 1 + ((grid.n - 1) as f64 * split) as usize;
        let r = (s as f64 * back) as usize;
        let restarted = solve(&system, &spec, &grid, &control, s, direct.row(s));
        for i in 0..grid.m {
            prop_assert!((restarted.get(r, i) - direct.get(r, i)).abs() <= 1e-12);
        }
    }

    #[test]
    fn comparison_principle(
        p in params(),
        spec in spec(),
        u in -1.0f64..1.0,
        terminal in proptest::collection::vec(-2.0f64..2.0, 21),
        bump in proptest::collection::vec(0.0f64..1.0, 21),
    ) {
        let system = system(p, "x");
        let grid = cfl_grid(&system, &spec, -2.0, 2.0, 21, 0.25);
        let control = Field::constant("u", &grid, u);
        let raised: Vec<f64> = terminal.iter().zip(&bump).map(|(a, b)| a + b).collect();
        // Linear extrapolation is not order preserving at outflow boundaries,
        // so the ends carry their own (ordered) data.
        let low = solve_with(&system, &spec, &grid, &control, grid.n, &terminal, &pinned_ends(&terminal));
        let high = solve_with(&system, &spec, &grid, &control, grid.n, &raised, &pinned_ends(&raised));
        for k in 0..=grid.n {
            for i in 0..grid.m {
                prop_assert!(high.get(k, i) >= low.get(k, i) - 1e-12);
            }
        }
    }

    #[test]
    fn constants_are_fixed_points(
        p in params(),
        spec in spec(),
        u in -1.0f64..1.0,
        c in -5.0f64..5.0,
    ) {
        // g = 0 gives F = 0 on constant data, and G̃(0) = 0 exactly.
        let p = Params { e: 0.0, f: 0.0, ..p };
        let system = system(p, &format!("{c}"));
        let grid = cfl_grid(&system, &spec, -2.0, 2.0, 21, 0.25);
        let control = Field::constant("u", &grid, u);
        let y = solve(&system, &spec, &grid, &control, grid.n, &vec![c; grid.m]);
        prop_assert!(y.values().iter().all(|&v| v == c));
    }
}

proptest! {
    #![proptest_config(config(1000, 0x7ee5))]

    #[test]
    fn tree_matches_enumeration(
        depth in 1usize..=3,
        points in 2usize..=3,
        quadratic in prop::bool::ANY,
        center in 0.25f64..1.0,
        coeffs in proptest::collection::vec(-1.0f64..1.0, 4),
        kink in -0.5f64..0.5,
        dt in 0.01f64..0.5,
    ) {
        let b = gtilde_control::gtilde::GBounds::new(0.25, 1.0).unwrap();
        let spec = if quadratic {
            gtilde_control::gtilde::GTildeSpec::quadratic_uniform(b, points, center).unwrap()
        } else {
            gtilde_control::gtilde::GTildeSpec::sublinear_with_points(b, points)
        };
        let f = |x: f64| coeffs[0] + coeffs[1] * x + coeffs[2] * x * x + coeffs[3] * (x - kink).abs();
        let tree = tree_expectation(&spec, depth, dt, &f).unwrap();
        let brute = brute_force_tree_expectation(&spec, depth, dt, &f).unwrap();
        prop_assert!((tree - brute).abs() <= 1e-12, "{} vs {}", tree, brute);
    }
}
