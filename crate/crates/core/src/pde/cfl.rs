use crate::gtilde::GBounds;
use crate::pde::Grid;
use crate::systems::ControlSystem;

/// Number of control values sampled when bounding `|h|` and `|σ|` over `U`.
const CONTROL_SAMPLES: usize = 101;
const TIME_SAMPLES: usize = 11;

/// Largest step for which the explicit scheme is monotone:
///
/// ```text
/// dt_max = dx² / (σ̄² s² + dx (c h + σ̄² s) + 2 dx² L σ̄²),   c = max(2, σ̄²)
/// ```
///
/// with `s = max |σ|`, `h = max |h|` over the grid nodes, 11 times in `[0, T]`
/// and a uniform sample of `U`. Returns `f64::INFINITY` when nothing
/// constrains the step.
pub fn cfl_timestep(system: &ControlSystem, grid: &Grid, bounds: &GBounds) -> f64 {
    let controls = system.control().grid(CONTROL_SAMPLES);
    let mut s_max: f64 = 0.0;
    let mut h_max: f64 = 0.0;
    for j in 0..TIME_SAMPLES {
        let t = grid.horizon * j as f64 / (TIME_SAMPLES - 1) as f64;
        for i in 0..grid.m {
            let x = grid.x(i);
            for &v in &controls {
                s_max = s_max.max(system.sigma(t, x, v).abs());
                h_max = h_max.max(system.h(t, x, v).abs());
            }
        }
    }
    cfl_from_bounds(grid.dx(), s_max, h_max, system.lipschitz(), bounds.sig2_high)
}

/// The bound from its ingredients.
pub fn cfl_from_bounds(dx: f64, s_max: f64, h_max: f64, lipschitz: f64, sig2_high: f64) -> f64 {
    let drift_weight = sig2_high.max(2.0);
    let denom = sig2_high * s_max * s_max
        + dx * (drift_weight * h_max + sig2_high * s_max)
        + 2.0 * dx * dx * lipschitz * sig2_high;
    if denom <= 0.0 {
        f64::INFINITY
    } else {
        dx * dx / denom
    }
}

/// Step count for a horizon with safety factor 0.9 on the bound.
pub fn auto_steps(horizon: f64, dt_max: f64) -> usize {
    if dt_max.is_infinite() {
        1
    } else {
        (horizon / (0.9 * dt_max)).ceil().max(1.0) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bounds() -> GBounds {
        GBounds::new(0.25, 1.0).unwrap()
    }

    #[test]
    fn example1_bound() {
        let grid = Grid::new(-6.0, 6.0, 601, 1.0, 1).unwrap();
        let system = ControlSystem::example1().with_lipschitz(3.0);
        let dt = cfl_timestep(&system, &grid, &bounds());
        let expected = 0.0004 / (1.0 + 0.02 * 13.0 + 0.0008 * 3.0);
        assert!((dt - expected).abs() < 1e-15);
        assert!((dt - 3.17e-4).abs() < 5e-7);
        let registry = cfl_timestep(&ControlSystem::example1(), &grid, &bounds());
        assert!((registry - 3.17e-4).abs() < 5e-7);
    }

    #[test]
    fn unconstrained_is_infinite() {
        assert!(cfl_from_bounds(0.1, 0.0, 0.0, 0.0, 1.0).is_infinite());
        assert_eq!(auto_steps(1.0, f64::INFINITY), 1);
    }

    #[test]
    fn diffusion_dominated_scaling() {
        let a = cfl_from_bounds(0.01, 1.0, 0.0, 0.0, 1.0);
        let b = cfl_from_bounds(0.02, 1.0, 0.0, 0.0, 1.0);
        assert!((b / a - 4.0).abs() < 0.05);
    }
}
