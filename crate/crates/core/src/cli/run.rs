use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::RunConfig;
use super::report::{adjoint_csv, field_csv, paths_csv, scenario_csv, summary_csv, time_rows, write_report, Artifacts};
use crate::error::{Error, Result};
use crate::fbsde::{adjoint_mc_with, adjoint_pde, adjoint_pde_along, backward_y, AdjointMc};
use crate::gtilde::{GBounds, GTildeSpec};
use crate::mpdpp::{
    check_adjoint_relations, check_estimate_appendix, check_kbar, check_mp_along, check_mp_inequality,
    check_value_relations, estimate_jets, random_scenarios, CheckReport, CheckSettings, JetEstimate, JetMode, PathRun,
};
use crate::pde::{brute_force_tree_expectation, solve_hjb, tree_expectation, Boundary, Field, Grid, HJBSolution};
use crate::scenarios::{reference_scenario, simulate_with, PathSetup, ScenarioField};
use crate::systems::{solve_l_ode, ControlSystem, SystemKind};

#[derive(Debug, Parser)]
#[command(name = "gtilde-control", version, about = "Optimal control under convex expectations dominated by G-expectation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Configuration file, or `default` for the built-in Example-1 setup.
    #[arg(long, global = true, default_value = "default")]
    pub config: String,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed (overrides the configured seeds). TOML integers are signed, so
    /// the range stops at `i64::MAX`.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the HJB equation; writes V, u* and the residual Σ.
    SolveHjb,
    /// Solve the backward equation under `u_fixed` or the HJB control.
    SolveY,
    /// PDE adjoint under the reference scenario plus the Monte-Carlo check.
    Adjoint,
    /// Simulate the optimal state under the reference scenario.
    Simulate,
    /// Run the verification checks.
    Check,
    /// Jet bounds in both modes.
    Jets {
        /// Comma-separated times (defaults to `jet_times`).
        #[arg(long, value_delimiter = ',')]
        t: Vec<f64>,
        /// Comma-separated decreasing perturbations (defaults to `eps_list`).
        #[arg(long = "eps-list", value_delimiter = ',')]
        eps_list: Vec<f64>,
    },
    /// The full Example-1 validation.
    Example1,
    /// Compare the trinomial tree with brute-force enumeration.
    TreeTest {
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
}

/// Exit status for an error: 2 for input problems, 3 for numerical ones.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::InvalidSpec(_)
        | Error::Syntax { .. }
        | Error::UnknownIdentifier { .. }
        | Error::Config(_)
        | Error::Grid(_)
        | Error::EpsTooSmall { .. }
        | Error::ControlOutOfRange { .. } => 2,
        _ => 3,
    }
}

/// What a subcommand produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub artifacts: Artifacts,
    pub reports: Vec<CheckReport>,
    pub lines: Vec<String>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    fn report(&mut self, r: CheckReport) {
        self.lines.push(format!(
            "{:<28} {}  max violation {:.3e}, tolerance {:.3e}",
            r.name,
            if r.pass { "pass" } else { "FAIL" },
            r.max_violation(),
            r.tolerance
        ));
        self.artifacts.add_json(format!("checks/{}.json", r.name), &r);
        self.reports.push(r);
    }
}

/// Parses `argv` (including the program name), runs and returns the exit
/// status: 0 when every check passes, 1 on a failed check, 2 on bad input and
/// 3 on a numerical failure.
pub fn run_experiment<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok((outcome, _)) => {
            if !cli.quiet {
                for line in &outcome.lines {
                    println!("{line}");
                }
            }
            if outcome.pass() {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs a parsed command and writes its artifacts; returns the outcome and
/// the output directory.
pub fn execute(cli: &Cli) -> Result<(Outcome, PathBuf)> {
    let mut config = RunConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
        config.mc.seed = None;
    }
    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(&config.output_dir));
    let outcome = match &cli.command {
        Command::TreeTest { depth } => tree_test(*depth, config.seed)?,
        command => {
            let ctx = Context::new(config.clone())?;
            match command {
                Command::SolveHjb => solve_hjb_cmd(&ctx)?,
                Command::SolveY => solve_y_cmd(&ctx)?,
                Command::Adjoint => adjoint_cmd(&ctx)?,
                Command::Simulate => simulate_cmd(&ctx)?,
                Command::Check => check_cmd(&ctx)?,
                Command::Jets { t, eps_list } => jets_cmd(&ctx, t, eps_list)?,
                Command::Example1 => example1_cmd(&ctx)?,
                Command::TreeTest { .. } => unreachable!(),
            }
        }
    };
    let mut outcome = outcome;
    if !outcome.reports.is_empty() {
        let summary = summary_csv(&outcome.reports);
        outcome.artifacts.add("checks/summary.csv", summary);
    }
    write_report(&outcome.artifacts, &out_dir, &config.hash(), config.seed)?;
    outcome.lines.push(format!("wrote {} files to {}", outcome.artifacts.items().len() + 1, out_dir.display()));
    Ok((outcome, out_dir))
}

/// Everything resolved from the configuration.
pub struct Context {
    pub config: RunConfig,
    pub system: ControlSystem,
    pub spec: GTildeSpec,
    pub grid: Grid,
    pub boundary: Boundary,
    pub settings: CheckSettings,
    pub rows: Vec<usize>,
}

impl Context {
    pub fn new(config: RunConfig) -> Result<Self> {
        let system = config.system()?;
        let spec = config.spec()?;
        let grid = config.grid(&system, &spec)?;
        let boundary = Boundary::default_for(&system, &spec, grid.horizon);
        let settings = config.checks.settings();
        let rows = time_rows(grid.n, config.grid.csv_slices);
        Ok(Self { config, system, spec, grid, boundary, settings, rows })
    }

    pub fn hjb(&self) -> Result<HJBSolution> {
        solve_hjb(&self.system, &self.spec, &self.grid, self.config.grid.v_grid, &self.boundary)
    }

    pub fn run(&self) -> PathRun {
        PathRun { n_paths: self.config.mc.n_paths, seed: self.config.path_seed(), x_init: self.config.mc.x0 }
    }

    fn field(&self, out: &mut Outcome, name: &str, field: &Field) {
        out.artifacts.add(format!("{name}.csv"), field_csv(field, &self.grid, &self.rows));
    }
}

#[derive(Serialize)]
struct GridSummary {
    m: usize,
    n: usize,
    dx: f64,
    dt: f64,
    x0: f64,
    value_at_x0: f64,
    max_abs_sigma: f64,
}

fn max_abs_on_window(field: &Field, grid: &Grid, window: f64, rows: usize) -> f64 {
    let nodes = grid.interior_within(window);
    (0..rows.min(field.rows()))
        .flat_map(|k| nodes.iter().map(move |&i| field.get(k, i).abs()))
        .fold(0.0, f64::max)
}

fn solve_hjb_cmd(ctx: &Context) -> Result<Outcome> {
    let hjb = ctx.hjb()?;
    let mut out = Outcome::default();
    ctx.field(&mut out, "V", &hjb.value);
    ctx.field(&mut out, "ustar", &hjb.u_star);
    ctx.field(&mut out, "sigma", &hjb.sigma_residual);
    let summary = GridSummary {
        m: ctx.grid.m,
        n: ctx.grid.n,
        dx: ctx.grid.dx(),
        dt: ctx.grid.dt(),
        x0: ctx.config.mc.x0,
        value_at_x0: hjb.value.interp(0, &ctx.grid, ctx.config.mc.x0),
        max_abs_sigma: max_abs_on_window(&hjb.sigma_residual, &ctx.grid, ctx.settings.window, ctx.grid.n),
    };
    out.lines.push(format!("N = {}, V(0, {}) = {:.10}", summary.n, summary.x0, summary.value_at_x0));
    out.artifacts.add_json("hjb.json", &summary);
    Ok(out)
}

fn solve_y_cmd(ctx: &Context) -> Result<Outcome> {
    let mut out = Outcome::default();
    let control = match ctx.config.system.u_fixed {
        Some(u) => Field::constant("u", &ctx.grid, u),
        None => ctx.hjb()?.u_star,
    };
    let y = backward_y(&ctx.system, &control, &ctx.spec, &ctx.grid, &ctx.boundary)?;
    let y0 = y.interp(0, &ctx.grid, ctx.config.mc.x0);
    out.lines.push(format!("Y(0, {}) = {y0:.10}", ctx.config.mc.x0));
    ctx.field(&mut out, "Y", &y);
    out.artifacts.add_json("y.json", &serde_json::json!({ "x0": ctx.config.mc.x0, "y0": y0 }));
    Ok(out)
}

fn mc_at_root(ctx: &Context, hjb: &HJBSolution, scenario: &ScenarioField) -> Result<AdjointMc> {
    let setup = PathSetup::new(
        &ctx.system,
        scenario,
        &hjb.u_star,
        &ctx.grid,
        ctx.config.mc.adjoint_paths,
        ctx.config.path_seed(),
        ctx.config.mc.x0,
    )
    .with_y_field(&hjb.value);
    adjoint_mc_with(&setup)
}

fn adjoint_cmd(ctx: &Context) -> Result<Outcome> {
    let hjb = ctx.hjb()?;
    let scenario = reference_scenario(&hjb, &ctx.spec, &ctx.system);
    let adj = adjoint_pde(&ctx.system, &hjb, &scenario, &ctx.grid)?;
    let mut out = Outcome::default();
    ctx.field(&mut out, "p", &adj.p);
    ctx.field(&mut out, "q", &adj.q);
    out.artifacts.add("adjoint.csv", adjoint_csv(&adj, &ctx.grid, &ctx.rows));
    let mc = mc_at_root(ctx, &hjb, &scenario)?;
    let pde = adj.p.interp(0, &ctx.grid, ctx.config.mc.x0);
    out.lines.push(format!(
        "p(0, {}) = {pde:.6} (PDE), {:.6} ± {:.1e} (Monte Carlo)",
        ctx.config.mc.x0, mc.estimate, mc.std_error
    ));
    out.artifacts.add_json("adjoint_mc.json", &mc);
    Ok(out)
}

fn simulate_cmd(ctx: &Context) -> Result<Outcome> {
    let hjb = ctx.hjb()?;
    let scenario = reference_scenario(&hjb, &ctx.spec, &ctx.system);
    let run = ctx.run();
    let setup = PathSetup::new(&ctx.system, &scenario, &hjb.u_star, &ctx.grid, run.n_paths, run.seed, run.x_init)
        .with_y_field(&hjb.value);
    let paths = simulate_with(&setup, crate::scenarios::DEFAULT_RECORDED)?;
    let (mean_x, se_x) = paths.mean_of(|e| e.x);
    let mut out = Outcome::default();
    out.lines.push(format!("E[X_T] = {mean_x:.6} ± {se_x:.1e}, exit fraction {:.4}", paths.exit_fraction()));
    out.artifacts.add("scenario.csv", scenario_csv(&scenario, &ctx.rows));
    out.artifacts.add("paths.csv", paths_csv(&paths));
    out.artifacts.add_json(
        "simulate.json",
        &serde_json::json!({
            "n_paths": run.n_paths,
            "seed": run.seed,
            "mean_x_terminal": mean_x,
            "std_error": se_x,
            "exit_fraction": paths.exit_fraction(),
            "min_lambda": paths.min_lambda(),
        }),
    );
    Ok(out)
}

/// MP, value, adjoint, `K̄` and appendix checks plus the appendix negative
/// control.
fn check_suite(ctx: &Context, hjb: &HJBSolution, out: &mut Outcome) -> Result<()> {
    let (system, spec, grid, settings, run) = (&ctx.system, &ctx.spec, &ctx.grid, &ctx.settings, ctx.run());
    let reference = reference_scenario(hjb, spec, system);
    let adj = adjoint_pde(system, hjb, &reference, grid)?;
    let y = backward_y(system, &hjb.u_star, spec, grid, &ctx.boundary)?;
    out.report(check_mp_inequality(system, hjb, &adj, grid, ctx.config.grid.v_grid, settings));
    out.report(check_value_relations(system, spec, hjb, &y, &reference, run, settings)?);
    out.report(check_adjoint_relations(system, hjb, &adj, &reference, run, settings)?);
    let mut family = vec![reference.clone()];
    family.extend(random_scenarios(grid, spec, ctx.config.checks.kbar_scenarios, run.seed)?);
    let kbar = check_kbar(system, spec, hjb, &family, 0, run, settings)?;
    out.artifacts.add_json("checks/kbar_values.json", &kbar);
    out.report(kbar.report);
    out.report(check_estimate_appendix(system, spec, hjb, &ctx.boundary, &reference, run, settings, 0.0)?);
    let offset = ctx.config.checks.sigma_offset;
    let shifted = check_estimate_appendix(system, spec, hjb, &ctx.boundary, &reference, run, settings, offset)?;
    out.report(negative_control("appendix_negative_control", &shifted).with("sigma_offset", offset));
    Ok(())
}

/// Passes when the wrapped check was flagged.
fn negative_control(name: &str, inner: &CheckReport) -> CheckReport {
    CheckReport::new(name, if inner.pass { 1.0 } else { 0.0 }, 0.0)
        .with("inner_max_violation", inner.max_violation())
        .with("inner_tolerance", inner.tolerance)
}

fn check_cmd(ctx: &Context) -> Result<Outcome> {
    let hjb = ctx.hjb()?;
    let mut out = Outcome::default();
    check_suite(ctx, &hjb, &mut out)?;
    Ok(out)
}

fn run_jets(ctx: &Context, hjb: &HJBSolution, times: &[f64], eps: &[f64]) -> Result<Vec<JetEstimate>> {
    let points = &ctx.config.checks.jet_points;
    let mut all = Vec::new();
    for &t in times {
        let k = ctx.grid.nearest_time(t);
        for mode in [JetMode::EpsLimit, JetMode::ExtremeSelection] {
            all.push(estimate_jets(&ctx.system, &ctx.spec, &ctx.grid, hjb, k, points, eps, mode, &ctx.settings)?);
        }
    }
    Ok(all)
}

fn jets_cmd(ctx: &Context, times: &[f64], eps: &[f64]) -> Result<Outcome> {
    let times = if times.is_empty() { ctx.config.checks.jet_times.clone() } else { times.to_vec() };
    let eps = if eps.is_empty() { ctx.config.checks.eps_list.clone() } else { eps.to_vec() };
    let hjb = ctx.hjb()?;
    let jets = run_jets(ctx, &hjb, &times, &eps)?;
    let mut out = Outcome::default();
    let mut failures = 0usize;
    let mut gap: f64 = 0.0;
    for j in &jets {
        failures += j.sandwich.iter().filter(|s| !**s).count();
        gap = j.p_high.iter().zip(&j.p_low).map(|(h, l)| h - l).fold(gap, f64::max);
        for (n, x) in j.x_points.iter().enumerate() {
            out.lines.push(format!(
                "t = {:.4} x = {x:<6} {:<17} p_low {:.6} p_high {:.6}",
                j.t,
                format!("{:?}", j.mode),
                j.p_low[n],
                j.p_high[n]
            ));
        }
    }
    out.artifacts.add_json("jets.json", &jets);
    out.report(CheckReport::new("jet_sandwich", failures as f64, 0.0).with("max_p_gap", gap));
    Ok(out)
}

fn example1_cmd(ctx: &Context) -> Result<Outcome> {
    if ctx.system.kind() != SystemKind::Example1 {
        return Err(Error::Config("example1 needs system name = \"example1\"".into()));
    }
    let (system, spec, grid, window) = (&ctx.system, &ctx.spec, &ctx.grid, ctx.settings.window);
    let hjb = ctx.hjb()?;
    let mut out = Outcome::default();
    ctx.field(&mut out, "V", &hjb.value);
    ctx.field(&mut out, "ustar", &hjb.u_star);

    let l = solve_l_ode(spec, grid.horizon, 4000);
    let nodes = grid.interior_within(window);
    let (mut err_v, mut err_u) = (0.0f64, 0.0f64);
    for k in 0..=grid.n {
        let lt = l.value_at(grid.t(k));
        for &i in &nodes {
            let x = grid.x(i);
            err_v = err_v.max((hjb.value.get(k, i) - x * x - lt).abs());
            if k < grid.n {
                err_u = err_u.max((hjb.u_star.get(k, i) - 0.5).abs());
            }
        }
    }
    // Truncation error of the artificial boundary shows up only outside the window.
    let mut err_full: f64 = 0.0;
    for k in 0..=grid.n {
        let lt = l.value_at(grid.t(k));
        for i in 0..grid.m {
            err_full = err_full.max((hjb.value.get(k, i) - grid.x(i).powi(2) - lt).abs());
        }
    }
    out.report(
        CheckReport::new("example1_value", err_v, 5e-3)
            .with("max_abs_error_interior", err_v)
            .with("max_abs_error_full_domain", err_full)
            .with("l_ode_residual", l.max_residual()),
    );
    out.report(CheckReport::new("example1_control", err_u, 1e-2));

    let reference = reference_scenario(&hjb, spec, system);
    let high = ScenarioField::constant(grid, spec, spec.bounds().sig2_high)?;
    for (name, scenario) in [("example1_adjoint_reference", &reference), ("example1_adjoint_high", &high)] {
        let adj = adjoint_pde(system, &hjb, scenario, grid)?;
        let (mut ep, mut eq) = (0.0f64, 0.0f64);
        for k in 0..=grid.n {
            for &i in &nodes {
                ep = ep.max((adj.p.get(k, i) - 2.0 * grid.x(i)).abs());
                eq = eq.max((adj.q.get(k, i) - 1.0).abs());
            }
        }
        if name.ends_with("reference") {
            ctx.field(&mut out, "p", &adj.p);
            ctx.field(&mut out, "q", &adj.q);
        }
        out.report(CheckReport::new(name, ep.max(eq), 2e-3).with("max_abs_p_error", ep).with("max_abs_q_error", eq));
    }
    let mc = mc_at_root(ctx, &hjb, &reference)?;
    let exact = 2.0 * ctx.config.mc.x0;
    out.report(
        CheckReport::new("example1_adjoint_mc", (mc.estimate - exact).abs(), 3.0 * mc.std_error)
            .with("estimate", mc.estimate)
            .with("std_error", mc.std_error)
            .with("orthogonality_defect", mc.orthogonality_defect),
    );

    // A wrong constant control must be flagged by the MP check.
    let wrong = Field::constant("u", grid, 0.2);
    let y_wrong = backward_y(system, &wrong, spec, grid, &ctx.boundary)?;
    let adj_wrong = adjoint_pde_along(system, &wrong, &y_wrong, &reference, grid)?;
    let mp_wrong = check_mp_along(system, &y_wrong, &wrong, &adj_wrong, grid, ctx.config.grid.v_grid, &ctx.settings);
    out.report(negative_control("mp_negative_control", &mp_wrong));

    check_suite(ctx, &hjb, &mut out)?;

    let jets = run_jets(ctx, &hjb, &ctx.config.checks.jet_times, &ctx.config.checks.eps_list)?;
    let mut worst: f64 = 0.0;
    for j in &jets {
        for (n, &x) in j.x_points.iter().enumerate() {
            worst = worst.max((j.p_high[n] - j.p_low[n]).abs()).max((j.p_high[n] - 2.0 * x).abs());
        }
    }
    out.artifacts.add_json("jets.json", &jets);
    out.report(CheckReport::new("example1_jets", worst, 1e-2));
    Ok(out)
}

#[derive(Serialize)]
struct TreeCase {
    penalty: &'static str,
    gamma_points: usize,
    depth: usize,
    max_abs_difference: f64,
}

/// Random payoffs `a₀ + a₁b + a₂b² + a₃|b − c| + a₄ sin(ωb)`.
fn random_payoff(rng: &mut ChaCha8Rng) -> impl Fn(f64) -> f64 {
    let a: [f64; 5] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    let c = rng.random_range(-0.5..0.5);
    let w = rng.random_range(0.5..4.0);
    move |b: f64| a[0] + a[1] * b + a[2] * b * b + a[3] * (b - c).abs() + a[4] * (w * b).sin()
}

pub const TREE_PAYOFFS: usize = 50;

fn tree_test(depth: usize, seed: u64) -> Result<Outcome> {
    let bounds = GBounds::new(0.25, 1.0)?;
    // The enumeration has points^(depth²) leaves.
    let points = if depth <= 3 { 4 } else { 2 };
    let specs = [
        ("zero", GTildeSpec::sublinear_with_points(bounds, points)),
        ("quadratic", GTildeSpec::quadratic_uniform(bounds, points, 0.25)?),
    ];
    let mut out = Outcome::default();
    let mut cases = Vec::new();
    let mut worst: f64 = 0.0;
    for (name, spec) in &specs {
        for d in 1..=depth {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut max_diff: f64 = 0.0;
            for _ in 0..TREE_PAYOFFS {
                let f = random_payoff(&mut rng);
                let tree = tree_expectation(spec, d, 0.1, &f)?;
                let brute = brute_force_tree_expectation(spec, d, 0.1, &f)?;
                max_diff = max_diff.max((tree - brute).abs());
            }
            worst = worst.max(max_diff);
            out.lines.push(format!("rho = {name:<9} depth {d}: max |tree - brute force| = {max_diff:.3e}"));
            cases.push(TreeCase { penalty: name, gamma_points: points, depth: d, max_abs_difference: max_diff });
        }
    }
    out.artifacts.add_json("tree_test.json", &cases);
    out.report(CheckReport::new("tree_test", worst, 1e-12));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(args: &[&str]) -> Vec<String> {
        std::iter::once("gtilde-control").chain(args.iter().copied()).map(String::from).collect()
    }

    #[test]
    fn missing_config_exits_with_two() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert_eq!(run_experiment(argv(&["solve-hjb", "--config", "missing.toml", "--out", out, "--quiet"])), 2);
        assert_eq!(run_experiment(argv(&["no-such-command"])), 2);
    }

    #[test]
    fn tree_test_passes_and_writes_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert_eq!(run_experiment(argv(&["tree-test", "--depth", "3", "--out", out, "--quiet"])), 0);
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        let files: Vec<&str> = manifest["files"].as_array().unwrap().iter().map(|f| f["path"].as_str().unwrap()).collect();
        assert_eq!(files, ["tree_test.json", "checks/tree_test.json", "checks/summary.csv"]);
    }

    #[test]
    fn numerical_failure_exits_with_three() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("coarse.toml");
        let text = super::super::config::DEFAULT_CONFIG.replace("N = \"auto\"", "N = 50");
        std::fs::write(&cfg, text).unwrap();
        let args = argv(&["solve-hjb", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--quiet"]);
        assert_eq!(run_experiment(args), 3);
    }
}
