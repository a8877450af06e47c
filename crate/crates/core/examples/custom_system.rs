//! A user-defined system given by expressions in a configuration file, solved
//! end to end through the same pipeline as the command-line runner.

use gtilde_control::cli::{Context, RunConfig};

const CONFIG: &str = r#"
seed = 1

[system]
h = "-x + v"
sigma = "0.5 + 0.5 * v"
g = "x * x + 0.1 * v * v"
phi = "abs(x)"
u_lo = -1.0
u_hi = 1.0
L = 3.0

[gtilde]
sig2_low = 0.25
sig2_high = 1.0
rho = "quadratic:0.5"

[grid]
x_lo = -3.0
x_hi = 3.0
M = 121
N = "auto"

[mc]
n_paths = 1000

[checks]
"#;

fn main() -> gtilde_control::Result<()> {
    let ctx = Context::new(RunConfig::parse(CONFIG)?)?;
    for w in ctx.system.warnings() {
        println!("warning: {w}");
    }
    println!("N = {} (dt = {:.3e})", ctx.grid.n, ctx.grid.dt());
    let hjb = ctx.hjb()?;
    for x in [-1.0, 0.0, 1.0] {
        let i = ctx.grid.nearest(x);
        println!("x = {x:+.1}: V(0) = {:.6}, u*(0) = {:+.2}", hjb.value.get(0, i), hjb.u_star.get(0, i));
    }
    Ok(())
}
