//! Solves the Example-1 HJB equation and compares with `x² + l(t)`.

use std::time::Instant;

use gtilde_control::gtilde::{GBounds, GTildeSpec};
use gtilde_control::pde::{auto_steps, cfl_timestep, solve_hjb, Boundary, Grid};
use gtilde_control::systems::{solve_l_ode, ControlSystem};

fn main() -> gtilde_control::Result<()> {
    let system = ControlSystem::example1();
    let spec = GTildeSpec::sublinear(GBounds::new(0.25, 1.0)?);
    let geometry = Grid::new(-6.0, 6.0, 601, 1.0, 1)?;
    let dt_max = cfl_timestep(&system, &geometry, spec.bounds());
    let grid = geometry.with_steps(auto_steps(1.0, dt_max))?;
    println!("dt_max = {dt_max:.6e}, N = {}", grid.n);

    let start = Instant::now();
    let boundary = Boundary::default_for(&system, &spec, grid.horizon);
    let hjb = solve_hjb(&system, &spec, &grid, 101, &boundary)?;
    println!("solve_hjb: {:.2?}", start.elapsed());

    let l = solve_l_ode(&spec, grid.horizon, 4000);
    let window = grid.interior_within(2.0);
    let (mut err_v, mut err_u, mut sig_min, mut sig_max) = (0.0f64, 0.0f64, f64::INFINITY, 0.0f64);
    for k in 0..=grid.n {
        let lt = l.value_at(grid.t(k));
        for &i in &window {
            let x = grid.x(i);
            err_v = err_v.max((hjb.value.get(k, i) - x * x - lt).abs());
            err_u = err_u.max((hjb.u_star.get(k, i) - 0.5).abs());
            if k < grid.n {
                sig_min = sig_min.min(hjb.sigma_residual.get(k, i));
                sig_max = sig_max.max(hjb.sigma_residual.get(k, i).abs());
            }
        }
    }
    let mid = grid.nearest_time(0.5);
    println!("max |V - (x^2 + l)| on |x| <= 2: {err_v:.3e}");
    println!("max |u* - 0.5| on |x| <= 2:      {err_u:.3e}");
    println!("Sigma residual: min {sig_min:.3e}, max |.| {sig_max:.3e}");
    println!("V(0.5, 1.0) = {:.6}", hjb.value.get(mid, grid.nearest(1.0)));
    Ok(())
}
