#![allow(dead_code)]

use gtilde_control::gtilde::{GBounds, GTildeSpec};
use gtilde_control::pde::{auto_steps, cfl_timestep, Grid};
use gtilde_control::systems::{build_system, ControlSystem, SystemConfig};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

pub fn config(cases: u32, seed: u64) -> Config {
    Config { cases, rng_seed: RngSeed::Fixed(seed), failure_persistence: None, ..Config::default() }
}

/// Coefficients of `h = a x + b v`, `σ = c + d v`, `g = e y + f x v` on
/// `U = [−1, 1]` with declared `L = 4`.
#[derive(Debug, Clone, Copy)]
pub struct Params {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

pub fn params() -> impl Strategy<Value = Params> {
    (-1.0f64..1.0, -1.0f64..1.0, 0.2f64..1.0, -0.5f64..0.5, -1.0f64..1.0, -1.0f64..1.0)
        .prop_map(|(a, b, c, d, e, f)| Params { a, b, c, d, e, f })
}

pub fn system(p: Params, phi: &str) -> ControlSystem {
    let config = SystemConfig {
        h: Some(format!("{}*x + {}*v", p.a, p.b)),
        sigma: Some(format!("{} + {}*v", p.c, p.d)),
        g: Some(format!("{}*y + {}*x*v", p.e, p.f)),
        phi: Some(phi.to_string()),
        u_lo: Some(-1.0),
        u_hi: Some(1.0),
        lipschitz: Some(4.0),
        ..SystemConfig::default()
    };
    build_system(&config).unwrap()
}

pub fn example_spec() -> GTildeSpec {
    GTildeSpec::sublinear(GBounds::new(0.25, 1.0).unwrap())
}

/// Quadratic penalty centred anywhere in the bounds, or zero.
pub fn spec() -> impl Strategy<Value = GTildeSpec> {
    (prop::bool::ANY, 0.25f64..1.0).prop_map(|(zero, center)| {
        let b = GBounds::new(0.25, 1.0).unwrap();
        if zero {
            GTildeSpec::sublinear_with_points(b, 9)
        } else {
            GTildeSpec::quadratic_uniform(b, 9, center).unwrap()
        }
    })
}

/// Grid on `[x_lo, x_hi]` with `m` nodes and the CFL-auto step count.
pub fn cfl_grid(system: &ControlSystem, spec: &GTildeSpec, x_lo: f64, x_hi: f64, m: usize, horizon: f64) -> Grid {
    let geometry = Grid::new(x_lo, x_hi, m, horizon, 1).unwrap();
    geometry.with_steps(auto_steps(horizon, cfl_timestep(system, &geometry, spec.bounds()))).unwrap()
}
