//! The MP, value, adjoint, K̄ and appendix checks on a coarse Example-1
//! grid, with the two negative controls.

use gtilde_control::fbsde::{adjoint_pde, adjoint_pde_along, backward_y};
use gtilde_control::gtilde::{GBounds, GTildeSpec};
use gtilde_control::mpdpp::*;
use gtilde_control::pde::{auto_steps, cfl_timestep, solve_hjb, Boundary, Field, Grid};
use gtilde_control::scenarios::reference_scenario;
use gtilde_control::systems::ControlSystem;

fn show(r: &CheckReport) {
    let verdict = if r.pass { "pass" } else { "FAIL" };
    println!("{:<20} {verdict} violation {:.3e} tolerance {:.3e}", r.name, r.max_violation(), r.tolerance);
}

fn main() -> gtilde_control::Result<()> {
    let system = ControlSystem::example1();
    let spec = GTildeSpec::sublinear(GBounds::new(0.25, 1.0)?);
    let geometry = Grid::new(-4.0, 4.0, 201, 1.0, 1)?;
    let grid = geometry.with_steps(auto_steps(1.0, cfl_timestep(&system, &geometry, spec.bounds())))?;
    let boundary = Boundary::default_for(&system, &spec, 1.0);
    let hjb = solve_hjb(&system, &spec, &grid, 101, &boundary)?;
    let settings = CheckSettings::default();
    let run = PathRun { n_paths: 2000, seed: 5, x_init: 1.0 };

    let reference = reference_scenario(&hjb, &spec, &system);
    let adj = adjoint_pde(&system, &hjb, &reference, &grid)?;
    let y = backward_y(&system, &hjb.u_star, &spec, &grid, &boundary)?;
    show(&check_mp_inequality(&system, &hjb, &adj, &grid, 101, &settings));
    show(&check_value_relations(&system, &spec, &hjb, &y, &reference, run, &settings)?);
    show(&check_adjoint_relations(&system, &hjb, &adj, &reference, run, &settings)?);

    let mut family = vec![reference.clone()];
    family.extend(random_scenarios(&grid, &spec, 20, 9)?);
    let kbar = check_kbar(&system, &spec, &hjb, &family, 0, run, &settings)?;
    show(&kbar.report);
    println!("  E[K_T] - alpha per scenario: {:?}", kbar.values.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>());

    let appendix = check_estimate_appendix(&system, &spec, &hjb, &boundary, &reference, run, &settings, 0.0)?;
    show(&appendix);
    println!("  {:?}", appendix.stats);

    println!("negative controls (expected to fail):");
    let wrong = Field::constant("u", &grid, 0.2);
    let y_wrong = backward_y(&system, &wrong, &spec, &grid, &boundary)?;
    let adj_wrong = adjoint_pde_along(&system, &wrong, &y_wrong, &reference, &grid)?;
    show(&check_mp_along(&system, &y_wrong, &wrong, &adj_wrong, &grid, 101, &settings));
    show(&check_estimate_appendix(&system, &spec, &hjb, &boundary, &reference, run, &settings, 0.05)?);
    Ok(())
}
