mod common;

use common::*;
use gtilde_control::fbsde::*;
use gtilde_control::mpdpp::{estimate_jets, CheckSettings, JetMode};
use gtilde_control::pde::*;
use gtilde_control::scenarios::reference_scenario;
use gtilde_control::systems::{build_system, ControlSystem, SystemConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

use std::sync::Arc;

/// Grid on `[−2, 2]` with `dx = 0.05`, so shifts by ±0.05 and ±0.1 land on
/// nodes.
fn node_grid(system: &ControlSystem, spec: &gtilde_control::gtilde::GTildeSpec) -> Grid {
    cfl_grid(system, spec, -2.0, 2.0, 81, 0.25)
}

/// `max_{t,x} |Y^ε(t, x + ε) − Y(t, x)| / ((1 + |x|)|ε|)` over both signs of
/// `ε`, with `x` kept 0.5 away from the ends.
fn lipschitz_ratio(system: &ControlSystem, spec: &gtilde_control::gtilde::GTildeSpec, grid: &Grid, control: &Field, y0: &Field, eps: f64) -> f64 {
    let boundary = Boundary::LinearExtrapolation;
    let mut ratio: f64 = 0.0;
    for e in [eps, -eps] {
        let shifted = shifted_control(system, control, grid, e);
        let ye = backward_y(system, &shifted, spec, grid, &boundary).unwrap();
        let shift = (e / grid.dx()).round() as isize;
        for k in 0..=grid.n {
            for i in grid.interior_within(1.5) {
                let j = (i as isize + shift) as usize;
                let gap = (ye.get(k, j) - y0.get(k, i)).abs();
                ratio = ratio.max(gap / ((1.0 + grid.x(i).abs()) * e.abs()));
            }
        }
    }
    ratio
}

proptest! {
    #![proptest_config(config(1000, 0xfb5d))]

    #[test]
    fn shifted_control_cost_is_lipschitz_in_the_shift(p in params(), spec in spec(), u in -1.0f64..1.0, slope in -1.0f64..1.0) {
        let system = system(p, "x");
        let grid = node_grid(&system, &spec);
        let control = Field::from_fn("u", &grid, |_, x| (u + slope * x).clamp(-1.0, 1.0));
        let y0 = backward_y(&system, &control, &spec, &grid, &Boundary::LinearExtrapolation).unwrap();
        let coarse = lipschitz_ratio(&system, &spec, &grid, &control, &y0, 0.1);
        let fine = lipschitz_ratio(&system, &spec, &grid, &control, &y0, 0.05);
        // The ratio settles to a constant rather than growing as ε shrinks.
        prop_assert!(fine <= 1.05 * coarse + 1e-9, "R(0.05) = {} R(0.1) = {}", fine, coarse);
        prop_assert!(fine.is_finite() && fine <= 20.0, "R(0.05) = {}", fine);
    }

    #[test]
    fn eps_ladder_is_monotone(p in params(), spec in spec(), x in -1.0f64..1.0, t_frac in 0.0f64..1.0) {
        let system = system(p, "x");
        let grid = node_grid(&system, &spec);
        let hjb = solve_hjb(&system, &spec, &grid, 5, &Boundary::LinearExtrapolation).unwrap();
        let k = ((grid.n as f64) * t_frac) as usize;
        let eps = [0.4, 0.2, 0.1];
        let jets = estimate_jets(&system, &spec, &grid, &hjb, k, &[x], &eps, JetMode::EpsLimit, &CheckSettings::default()).unwrap();
        let (upper, lower) = (&jets.upper_sequence[0], &jets.lower_sequence[0]);
        let l = system.lipschitz();
        for j in 1..eps.len() {
            let slack = 2.0 * l * (1.0 + x * x) * eps[j];
            prop_assert!(upper[j] <= upper[j - 1] + slack, "upper {:?}", upper);
            prop_assert!(lower[j] >= lower[j - 1] - slack, "lower {:?}", lower);
        }
    }

    #[test]
    fn cost_is_monotone_in_terminal_data_and_running_cost(
        p in params(),
        spec in spec(),
        u in -1.0f64..1.0,
        bump in 0.0f64..2.0,
        lift in 0.0f64..1.0,
    ) {
        let low = system(p, "x");
        let high = build_system(&SystemConfig {
            h: Some(format!("{}*x + {}*v", p.a, p.b)),
            sigma: Some(format!("{} + {}*v", p.c, p.d)),
            g: Some(format!("{}*y + {}*x*v + {lift}*exp(-x*x)", p.e, p.f)),
            phi: Some(format!("x + {bump}*exp(-4*x*x)")),
            u_lo: Some(-1.0),
            u_hi: Some(1.0),
            lipschitz: Some(4.0),
            ..SystemConfig::default()
        })
        .unwrap();
        let grid = cfl_grid(&low, &spec, -4.0, 4.0, 81, 0.25);
        let control = Field::constant("u", &grid, u);
        // Both sides share the boundary values: ghost extrapolation breaks
        // monotonicity at outflow ends.
        let boundary = Boundary::Dirichlet(Arc::new(|_, x| x));
        let y_low = backward_y(&low, &control, &spec, &grid, &boundary).unwrap();
        let y_high = backward_y(&high, &control, &spec, &grid, &boundary).unwrap();
        for k in 0..=grid.n {
            for i in 0..grid.m {
                prop_assert!(y_low.get(k, i) <= y_high.get(k, i) + 1e-12, "k {} i {}", k, i);
            }
        }
    }
}

/// `p = 2x` for Example 1; the Monte-Carlo side is checked at random interior
/// points on a coarse grid.
#[test]
fn example1_adjoint_pde_agrees_with_monte_carlo() {
    let system = ControlSystem::example1();
    let spec = example_spec();
    let grid = cfl_grid(&system, &spec, -6.0, 6.0, 121, 1.0);
    let boundary = Boundary::default_for(&system, &spec, grid.horizon);
    let hjb = solve_hjb(&system, &spec, &grid, 11, &boundary).unwrap();
    let scenario = reference_scenario(&hjb, &spec, &system);
    let adjoint = adjoint_pde(&system, &hjb, &scenario, &grid).unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(0xe1);
    for point in 0..20 {
        let k = rng.random_range(0..grid.n);
        let x = rng.random_range(-2.0..2.0);
        let mc = adjoint_mc(&system, &scenario, &hjb.u_star, &grid, k, 20_000, 200 + point, x).unwrap();
        let pde = adjoint.p.interp(k, &grid, x);
        assert!((mc.estimate - pde).abs() <= 3.0 * mc.std_error + 2e-3, "t {} x {x}: pde {pde} mc {} se {}", grid.t(k), mc.estimate, mc.std_error);
    }
}

/// A system with state-dependent drift and running cost, where the adjoint
/// has no closed form.
#[test]
fn adjoint_pde_agrees_with_monte_carlo() {
    let system = system(Params { a: 0.5, b: -0.7, c: 0.6, d: 0.3, e: -0.5, f: 0.8 }, "x + 0.5*exp(-x*x)");
    let spec = example_spec();
    let grid = cfl_grid(&system, &spec, -5.0, 5.0, 201, 0.5);
    let hjb = solve_hjb(&system, &spec, &grid, 21, &Boundary::LinearExtrapolation).unwrap();
    let scenario = reference_scenario(&hjb, &spec, &system);
    let adjoint = adjoint_pde(&system, &hjb, &scenario, &grid).unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(0xad1);
    let mut worst: f64 = 0.0;
    for point in 0..20 {
        let k = rng.random_range(0..grid.n / 2);
        let x = rng.random_range(-1.0..1.0);
        let mc = adjoint_mc(&system, &scenario, &hjb.u_star, &grid, k, 20_000, 100 + point, x).unwrap();
        let pde = adjoint.p.interp(k, &grid, x);
        let gap = (mc.estimate - pde).abs();
        worst = worst.max(gap / (3.0 * mc.std_error + 2e-3));
        assert!(gap <= 3.0 * mc.std_error + 2e-3, "t {} x {x}: pde {pde} mc {} se {}", grid.t(k), mc.estimate, mc.std_error);
    }
    println!("worst gap / tolerance {worst:.3}");
}
