//! Paths of the optimally controlled state under the reference scenario and
//! under the two constant extremes, with the martingale check on B.

use gtilde_control::gtilde::{GBounds, GTildeSpec};
use gtilde_control::pde::{auto_steps, cfl_timestep, solve_hjb, Boundary, Grid};
use gtilde_control::scenarios::{reference_scenario, simulate_paths, ScenarioField};
use gtilde_control::systems::ControlSystem;

fn main() -> gtilde_control::Result<()> {
    let system = ControlSystem::example1();
    let spec = GTildeSpec::sublinear(GBounds::new(0.25, 1.0)?);
    let geometry = Grid::new(-4.0, 4.0, 201, 1.0, 1)?;
    let grid = geometry.with_steps(auto_steps(1.0, cfl_timestep(&system, &geometry, spec.bounds())))?;
    let hjb = solve_hjb(&system, &spec, &grid, 101, &Boundary::default_for(&system, &spec, 1.0))?;

    let scenarios = [
        ("reference", reference_scenario(&hjb, &spec, &system)),
        ("gamma = 0.25", ScenarioField::constant(&grid, &spec, 0.25)?),
        ("gamma = 1", ScenarioField::constant(&grid, &spec, 1.0)?),
    ];
    for (name, scenario) in &scenarios {
        let paths = simulate_paths(&system, scenario, &hjb.u_star, &grid, 20_000, 7, 1.0)?;
        let (b, b_se) = paths.mean_of(|e| e.b);
        let (qv, _) = paths.mean_of(|e| e.qv);
        let (x2, x2_se) = paths.mean_of(|e| e.x * e.x);
        println!(
            "{name:<13} E[B_T] = {b:+.4} ± {b_se:.1e}  E<B>_T = {qv:.4}  E[X_T^2] = {x2:.4} ± {x2_se:.1e}  min Lambda = {:.4}",
            paths.min_lambda()
        );
    }
    Ok(())
}
