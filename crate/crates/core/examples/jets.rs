//! Jet bounds: they collapse to 2x on the smooth Example 1 and bracket the
//! kink of |x| in a one-step problem.

use gtilde_control::gtilde::{GBounds, GTildeSpec};
use gtilde_control::mpdpp::{estimate_jets, CheckSettings, JetMode};
use gtilde_control::pde::{auto_steps, cfl_timestep, solve_hjb, Boundary, Grid};
use gtilde_control::systems::ControlSystem;

fn main() -> gtilde_control::Result<()> {
    let spec = GTildeSpec::sublinear(GBounds::new(0.25, 1.0)?);
    let settings = CheckSettings::default();

    let system = ControlSystem::example1();
    let geometry = Grid::new(-4.0, 4.0, 201, 1.0, 1)?;
    let grid = geometry.with_steps(auto_steps(1.0, cfl_timestep(&system, &geometry, spec.bounds())))?;
    let hjb = solve_hjb(&system, &spec, &grid, 101, &Boundary::default_for(&system, &spec, 1.0))?;
    let xs = [0.5, 1.0, 1.5];
    for mode in [JetMode::EpsLimit, JetMode::ExtremeSelection] {
        let j = estimate_jets(&system, &spec, &grid, &hjb, grid.nearest_time(0.5), &xs, &[0.2, 0.1], mode, &settings)?;
        for (n, x) in xs.iter().enumerate() {
            println!("Example 1 {mode:?} x = {x}: p_low {:.6} p_high {:.6}", j.p_low[n], j.p_high[n]);
        }
    }

    let kink = ControlSystem::kink();
    let grid = Grid::new(-1.0, 1.0, 401, 2e-5, 1)?;
    let hjb = solve_hjb(&kink, &spec, &grid, 2, &Boundary::LinearExtrapolation)?;
    let j = estimate_jets(&kink, &spec, &grid, &hjb, 0, &[0.0], &[0.1, 0.05], JetMode::EpsLimit, &settings)?;
    println!(
        "kink at 0: p_low {:.3} p_high {:.3}, one-sided slopes [{:.3}, {:.3}], super-jet nonempty: {}",
        j.p_low[0], j.p_high[0], j.d_minus[0], j.d_plus[0], j.super_jet_nonempty[0]
    );
    println!("raw upper sequence {:?}, lower {:?}", j.upper_sequence[0], j.lower_sequence[0]);
    Ok(())
}
