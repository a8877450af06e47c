//! The adjoint (p, q) from the backward PDE and p from Monte Carlo, compared
//! with the closed form p = 2x, q = 1 of Example 1.

use gtilde_control::fbsde::{adjoint_mc, adjoint_pde};
use gtilde_control::gtilde::{GBounds, GTildeSpec};
use gtilde_control::pde::{auto_steps, cfl_timestep, solve_hjb, Boundary, Grid};
use gtilde_control::scenarios::{reference_scenario, ScenarioField};
use gtilde_control::systems::ControlSystem;

fn main() -> gtilde_control::Result<()> {
    let system = ControlSystem::example1();
    let spec = GTildeSpec::sublinear(GBounds::new(0.25, 1.0)?);
    let geometry = Grid::new(-4.0, 4.0, 201, 1.0, 1)?;
    let grid = geometry.with_steps(auto_steps(1.0, cfl_timestep(&system, &geometry, spec.bounds())))?;
    let hjb = solve_hjb(&system, &spec, &grid, 101, &Boundary::default_for(&system, &spec, 1.0))?;

    let reference = reference_scenario(&hjb, &spec, &system);
    let high = ScenarioField::constant(&grid, &spec, 1.0)?;
    for (name, scenario) in [("reference", &reference), ("gamma = 1", &high)] {
        let adj = adjoint_pde(&system, &hjb, scenario, &grid)?;
        let k = grid.nearest_time(0.5);
        let row: Vec<String> = [-1.0, 0.0, 1.0, 1.5]
            .iter()
            .map(|&x| format!("p({x}) = {:.6}, q = {:.6}", adj.p.interp(k, &grid, x), adj.q.interp(k, &grid, x)))
            .collect();
        println!("{name:<10} t = 0.5: {}", row.join("; "));
    }
    let mc = adjoint_mc(&system, &reference, &hjb.u_star, &grid, 0, 20_000, 3, 1.0)?;
    println!(
        "Monte Carlo p(0, 1) = {:.5} ± {:.1e} (exact 2), orthogonality defect {:.2e}",
        mc.estimate, mc.std_error, mc.orthogonality_defect
    );
    Ok(())
}
