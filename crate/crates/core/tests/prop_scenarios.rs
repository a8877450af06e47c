mod common;

use std::sync::atomic::{AtomicUsize, Ordering};

use common::*;
use gtilde_control::mpdpp::random_scenarios;
use gtilde_control::pde::{solve_hjb, Boundary, Field, Grid};
use gtilde_control::scenarios::*;
use gtilde_control::systems::{build_system, ControlSystem, SystemConfig};
use proptest::prelude::*;
use proptest::test_runner::TestRunner;

/// Two-sided 1 − 10⁻³/1000 normal quantile: with 1000 cases the family-wise
/// false-alarm rate stays near 10⁻³.
const FAMILY_Z: f64 = 4.9;

#[test]
fn example1_weighted_state_is_a_martingale() {
    let system = ControlSystem::example1();
    let spec = example_spec();
    let grid = Grid::new(-6.0, 6.0, 61, 1.0, 50).unwrap();
    let beyond_three = AtomicUsize::new(0);
    let strategy = (0.25f64..=1.0, 0.0f64..=1.0, -2.0f64..2.0, any::<u64>());
    let mut runner = TestRunner::new(config(1000, 0x3a27));
    runner
        .run(&strategy, |(gamma, u, x0, seed)| {
            let scenario = ScenarioField::constant(&grid, &spec, gamma).unwrap();
            let control = Field::constant("u", &grid, u);
            let paths = simulate_paths(&system, &scenario, &control, &grid, 256, seed, x0).unwrap();
            let (mean, se) = paths.mean_of(|e| e.x * e.l);
            // Euler bias of (1 + γdt)^N e^{−γT}.
            let bias = x0.abs() * gamma * gamma * grid.horizon * grid.dt();
            let dev = (mean - x0).abs();
            if dev > 3.0 * se + bias {
                beyond_three.fetch_add(1, Ordering::Relaxed);
            }
            prop_assert!(dev <= FAMILY_Z * se + bias, "mean {} x0 {} se {}", mean, x0, se);
            Ok(())
        })
        .unwrap();
    // About 2.7 of 1000 honest cases exceed 3 SE; more than 10 has
    // probability below 10⁻⁴.
    let n = beyond_three.into_inner();
    println!("cases beyond 3 SE: {n} of 1000");
    assert!(n <= 10, "{n} cases beyond 3 SE");
}

proptest! {
    #![proptest_config(config(1000, 0x1a3b))]

    #[test]
    fn lambda_lower_bound(p in params(), u in -1.0f64..1.0, x0 in -1.5f64..1.5, seed in any::<u64>()) {
        let system = system(p, "x");
        let spec = example_spec();
        let grid = Grid::new(-2.0, 2.0, 21, 1.0, 20).unwrap();
        let scenarios = random_scenarios(&grid, &spec, 2, seed).unwrap();
        let control = Field::constant("u", &grid, u);
        let bound = (-system.lipschitz() * spec.bounds().sig2_high * grid.horizon).exp();
        for scenario in &scenarios {
            let paths = simulate_paths(&system, scenario, &control, &grid, 16, seed, x0).unwrap();
            prop_assert!(paths.min_lambda() >= bound - 1e-12);
        }
    }

    #[test]
    fn simulation_is_deterministic(p in params(), x0 in -1.5f64..1.5, seed in any::<u64>()) {
        let system = system(p, "x");
        let spec = example_spec();
        let grid = Grid::new(-2.0, 2.0, 21, 0.5, 10).unwrap();
        let scenario = random_scenarios(&grid, &spec, 2, seed).unwrap().pop().unwrap();
        let control = Field::constant("u", &grid, 0.3);
        let a = simulate_paths(&system, &scenario, &control, &grid, 8, seed, x0).unwrap();
        let b = simulate_paths(&system, &scenario, &control, &grid, 8, seed, x0).unwrap();
        prop_assert_eq!(a, b);
    }
}

/// `E_{P*}[Φ(X_T)] − α(P*)` under the reference scenario reproduces the PDE
/// value at the root.
#[test]
fn reference_scenario_represents_the_value() {
    let config = SystemConfig {
        h: Some("0".into()),
        sigma: Some("1".into()),
        g: Some("0".into()),
        phi: Some("max(x, 0) - 0.5 * abs(x - 0.3)".into()),
        u_lo: Some(0.0),
        u_hi: Some(0.0),
        lipschitz: Some(1.0),
        ..SystemConfig::default()
    };
    let system = build_system(&config).unwrap();
    let b = gtilde_control::gtilde::GBounds::new(0.25, 1.0).unwrap();
    for spec in [
        gtilde_control::gtilde::GTildeSpec::sublinear(b),
        gtilde_control::gtilde::GTildeSpec::quadratic_uniform(b, 65, 0.5).unwrap(),
    ] {
        let grid = cfl_grid(&system, &spec, -5.0, 5.0, 201, 1.0);
        let hjb = solve_hjb(&system, &spec, &grid, 2, &Boundary::LinearExtrapolation).unwrap();
        let reference = reference_scenario(&hjb, &spec, &system);
        let paths = simulate_paths(&system, &reference, &hjb.u_star, &grid, 40_000, 17, 0.1).unwrap();
        let (payoff, se) = paths.mean_of(|e| system.phi(e.x));
        let alpha = penalty_alpha(&reference, &spec, &paths).unwrap();
        let value = hjb.value.interp(0, &grid, 0.1);
        let dev = (payoff - alpha - value).abs();
        println!("E[phi] - alpha = {:.5} (se {se:.1e}), V = {value:.5}", payoff - alpha);
        assert!(dev <= 3.0 * se + 5.0 * grid.dx().powi(2).max(grid.dt()), "deviation {dev}");
    }
}
