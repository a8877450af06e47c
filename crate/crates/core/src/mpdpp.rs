//! Checks of the relations between the maximum principle and dynamic
//! programming: the MP inequality, `Y* = V`, `p = ∂_xV`, `q = ∂²_xxV σ`, the
//! `K̄` characterisation of the optimal scenarios, the appendix estimate and
//! the jet bounds `D^{1,−}V ⊆ [p, p̄]`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fbsde::{adjoint_pde, adjoint_pde_along, backward_y, hamiltonian_eval, shifted_control, AdjointSolution};
use crate::gtilde::{gtilde_eval, GTildeSpec};
use crate::pde::{run_backward, BackwardOptions, Boundary, ControlMode, Field, Grid, HJBSolution};
use crate::scenarios::{mean_std_error, run_paths, PathEnd, PathSetup, PathStep, PathVisitor, ScenarioField};
use crate::systems::ControlSystem;

/// Tolerance constants and the evaluation window shared by the checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckSettings {
    /// Weight of `dx` in `tol = c₁ dx + c₂ dt + 3 SE`.
    pub c1: f64,
    /// Weight of `dt`.
    pub c2: f64,
    /// Checks only look at `|x| ≤ window`.
    pub window: f64,
    /// The MP check uses `max(mp_floor, dv · mp_scale)`.
    pub mp_floor: f64,
    pub mp_scale: f64,
}

impl Default for CheckSettings {
    fn default() -> Self {
        Self { c1: 0.25, c2: 1.0, window: 2.0, mp_floor: 2e-2, mp_scale: 1.0 }
    }
}

impl CheckSettings {
    pub fn tolerance(&self, grid: &Grid, std_error: f64) -> f64 {
        self.c1 * grid.dx() + self.c2 * grid.dt() + 3.0 * std_error
    }
}

/// Result of one check. `pass` holds exactly when `max_violation ≤ tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub stats: BTreeMap<String, f64>,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, max_violation: f64, tolerance: f64) -> Self {
        let mut stats = BTreeMap::new();
        stats.insert("max_violation".to_string(), max_violation);
        Self { name: name.into(), stats, tolerance, pass: max_violation <= tolerance }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.stats.insert(key.to_string(), value);
        self
    }

    pub fn max_violation(&self) -> f64 {
        self.stats["max_violation"]
    }

    pub fn stat(&self, key: &str) -> Option<f64> {
        self.stats.get(key).copied()
    }
}

/// Number of paths, seed and start point for the path-based checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathRun {
    pub n_paths: usize,
    pub seed: u64,
    pub x_init: f64,
}

// ---------------------------------------------------------------------------
// Maximum principle

/// `min_v H_v(t, x, V, u*, p, q)(v − u*)` over the interior window.
pub fn check_mp_inequality(
    system: &ControlSystem,
    hjb: &HJBSolution,
    adjoint: &AdjointSolution,
    grid: &Grid,
    v_grid_count: usize,
    settings: &CheckSettings,
) -> CheckReport {
    check_mp_along(system, &hjb.value, &hjb.u_star, adjoint, grid, v_grid_count, settings)
}

/// The MP check for an arbitrary control (negative controls feed a wrong one).
pub fn check_mp_along(
    system: &ControlSystem,
    value: &Field,
    control: &Field,
    adjoint: &AdjointSolution,
    grid: &Grid,
    v_grid_count: usize,
    settings: &CheckSettings,
) -> CheckReport {
    let v_grid = system.control().grid(v_grid_count.max(2));
    let dv = if v_grid.len() > 1 { v_grid[1] - v_grid[0] } else { 0.0 };
    let tolerance = settings.mp_floor.max(dv * settings.mp_scale);
    let window = grid.interior_within(settings.window);
    let mut min_product = f64::INFINITY;
    let mut max_abs_h_v: f64 = 0.0;
    for k in 0..grid.n.min(control.rows()) {
        let t = grid.t(k);
        for &i in &window {
            let u = control.get(k, i);
            let hv = hamiltonian_eval(system, t, grid.x(i), value.get(k, i), u, adjoint.p.get(k, i), adjoint.q.get(k, i));
            max_abs_h_v = max_abs_h_v.max(hv.h_v.abs());
            for &v in &v_grid {
                min_product = min_product.min(hv.h_v * (v - u));
            }
        }
    }
    CheckReport::new("mp_inequality", (-min_product).max(0.0), tolerance)
        .with("min_product", min_product)
        .with("max_abs_h_v", max_abs_h_v)
        .with("v_grid_step", dv)
}

// ---------------------------------------------------------------------------
// Path evaluation helpers

struct WindowMaxima<'a, const K: usize> {
    metric: &'a (dyn Fn(usize, f64) -> [f64; K] + Sync),
    window: f64,
    n_steps: usize,
    max: [f64; K],
    min: [f64; K],
    count: usize,
}

impl<const K: usize> WindowMaxima<'_, K> {
    fn record(&mut self, k: usize, x: f64) {
        if x.abs() > self.window {
            return;
        }
        let values = (self.metric)(k, x);
        for j in 0..K {
            self.max[j] = self.max[j].max(values[j]);
            self.min[j] = self.min[j].min(values[j]);
        }
        self.count += 1;
    }
}

impl<const K: usize> PathVisitor for WindowMaxima<'_, K> {
    type Output = ([f64; K], [f64; K], usize);

    fn visit(&mut self, s: &PathStep) {
        self.record(s.k, s.x);
    }

    fn finish(mut self, end: &PathEnd) -> Self::Output {
        self.record(self.n_steps, end.x);
        (self.max, self.min, self.count)
    }
}

/// Maxima and minima of `metric(k, X_k)` over all path points inside the
/// window, including the terminal point; also returns the number of points.
fn along_paths<const K: usize>(
    setup: &PathSetup<'_>,
    window: f64,
    metric: &(dyn Fn(usize, f64) -> [f64; K] + Sync),
) -> Result<([f64; K], [f64; K], usize)> {
    let out = run_paths(setup, |_| WindowMaxima {
        metric,
        window,
        n_steps: setup.grid.n,
        max: [f64::NEG_INFINITY; K],
        min: [f64::INFINITY; K],
        count: 0,
    })?;
    let mut max = [f64::NEG_INFINITY; K];
    let mut min = [f64::INFINITY; K];
    let mut count = 0;
    for (a, b, c) in out {
        for j in 0..K {
            max[j] = max[j].max(a[j]);
            min[j] = min[j].min(b[j]);
        }
        count += c;
    }
    Ok((max, min, count))
}

// ---------------------------------------------------------------------------
// Value and adjoint relations

/// Along paths of `X*` under `scenario`: `|Y − V|`, `|Σ|` and the gap
/// `G̃(F̄(u*)) − min_v G̃(F̄(v))`.
pub fn check_value_relations(
    system: &ControlSystem,
    spec: &GTildeSpec,
    hjb: &HJBSolution,
    y_field: &Field,
    scenario: &ScenarioField,
    run: PathRun,
    settings: &CheckSettings,
) -> Result<CheckReport> {
    let grid = &hjb.grid;
    let gap = minimisation_gap(system, spec, hjb, settings.window);
    let setup = PathSetup::new(system, scenario, &hjb.u_star, grid, run.n_paths, run.seed, run.x_init);
    let metric = |k: usize, x: f64| {
        let y_minus_v = y_field.interp(k, grid, x) - hjb.value.interp(k, grid, x);
        [y_minus_v.abs(), hjb.sigma_residual.interp(k, grid, x).abs(), gap.get(k, grid.nearest(x)), y_minus_v]
    };
    let (max, min, count) = along_paths(&setup, settings.window, &metric)?;
    let tolerance = settings.tolerance(grid, 0.0);
    let worst = max[0].max(max[1]).max(max[2]);
    Ok(CheckReport::new("value_relations", worst, tolerance)
        .with("max_abs_y_minus_v", max[0])
        .with("max_abs_sigma", max[1])
        .with("max_min_gap", max[2])
        .with("min_y_minus_v", min[3])
        .with("path_points", count as f64))
}

/// `G̃(F̄(u*)) − min_v G̃(F̄(v))` on the window nodes (zero elsewhere).
fn minimisation_gap(system: &ControlSystem, spec: &GTildeSpec, hjb: &HJBSolution, window: f64) -> Field {
    let grid = &hjb.grid;
    let mut gap = Field::constant("gap", grid, 0.0);
    let nodes = grid.interior_within(window + 2.0 * grid.dx());
    for k in 0..=grid.n {
        for &i in &nodes {
            let at_u = gtilde_eval(spec, hjb.f_bar.get(k, i));
            // G̃ is nondecreasing (every γ is positive), so the minimum over
            // controls is attained where F̄ is smallest.
            let f_min = hjb.v_grid.iter().map(|&v| hjb.f_bar_at(system, k, i, v)).fold(f64::INFINITY, f64::min);
            gap.set(k, i, at_u - gtilde_eval(spec, f_min));
        }
    }
    gap
}

/// Along paths: `|p − ∂_xV|` and `|q − ∂²_xxV σ(u*)|`.
pub fn check_adjoint_relations(
    system: &ControlSystem,
    hjb: &HJBSolution,
    adjoint: &AdjointSolution,
    scenario: &ScenarioField,
    run: PathRun,
    settings: &CheckSettings,
) -> Result<CheckReport> {
    let grid = &hjb.grid;
    let setup = PathSetup::new(system, scenario, &hjb.u_star, grid, run.n_paths, run.seed, run.x_init);
    let metric = |k: usize, x: f64| {
        let i = grid.nearest(x);
        let sigma = system.sigma(grid.t(k), grid.x(i), hjb.u_star.get(k, i));
        [
            (adjoint.p.get(k, i) - hjb.dx_v.get(k, i)).abs(),
            (adjoint.q.get(k, i) - hjb.dxx_v.get(k, i) * sigma).abs(),
        ]
    };
    let (max, _, count) = along_paths(&setup, settings.window, &metric)?;
    Ok(CheckReport::new("adjoint_relations", max[0].max(max[1]), settings.tolerance(grid, 0.0))
        .with("max_abs_p_minus_dxv", max[0])
        .with("max_abs_q_minus_dxxv_sigma", max[1])
        .with("n_residual", adjoint.n_residual)
        .with("path_points", count as f64))
}

// ---------------------------------------------------------------------------
// K̄ characterisation

/// `E_P[K̄_T] − α(P)` for every scenario of a family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KbarReport {
    pub report: CheckReport,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub reference: usize,
}

struct KbarVisitor<'a> {
    hjb: &'a HJBSolution,
    gtilde_f: &'a Field,
    spec: &'a GTildeSpec,
    total: f64,
    max_increment: f64,
}

impl PathVisitor for KbarVisitor<'_> {
    type Output = (f64, f64);

    fn visit(&mut self, s: &PathStep) {
        let f = self.hjb.f_bar.get(s.k, s.node);
        let increment = (0.5 * f * s.gamma - self.gtilde_f.get(s.k, s.node) - self.spec.penalty_at(s.gamma)) * s.dt;
        self.max_increment = self.max_increment.max(increment);
        self.total += increment;
    }

    fn finish(self, _: &PathEnd) -> (f64, f64) {
        (self.total, self.max_increment)
    }
}

/// `K̄_T − ∫ρ(γ)dt` along paths of `X*` under each scenario, with
/// `K̄_T = ½∫F̄ d⟨B⟩ − ∫G̃(F̄)dt`. The reference must give zero and no other
/// scenario may exceed it.
pub fn check_kbar(
    system: &ControlSystem,
    spec: &GTildeSpec,
    hjb: &HJBSolution,
    scenarios: &[ScenarioField],
    reference: usize,
    run: PathRun,
    settings: &CheckSettings,
) -> Result<KbarReport> {
    if reference >= scenarios.len() {
        return Err(Error::Config("reference scenario index out of range".into()));
    }
    let grid = &hjb.grid;
    let gtilde_f = hjb.f_bar.map("gtilde_f", |f| gtilde_eval(spec, f));
    let mut values = Vec::with_capacity(scenarios.len());
    let mut std_errors = Vec::with_capacity(scenarios.len());
    let mut max_pathwise: f64 = f64::NEG_INFINITY;
    for scenario in scenarios {
        let setup = PathSetup::new(system, scenario, &hjb.u_star, grid, run.n_paths, run.seed, run.x_init);
        let out = run_paths(&setup, |_| KbarVisitor { hjb, gtilde_f: &gtilde_f, spec, total: 0.0, max_increment: f64::NEG_INFINITY })?;
        let totals: Vec<f64> = out.iter().map(|o| o.0).collect();
        max_pathwise = out.iter().map(|o| o.1).fold(max_pathwise, f64::max);
        let (mean, se) = mean_std_error(&totals);
        values.push(mean);
        std_errors.push(se);
    }
    let tolerance = settings.tolerance(grid, std_errors.iter().copied().fold(0.0, f64::max));
    let ref_value = values[reference];
    let others = values.iter().enumerate().filter(|&(j, _)| j != reference).map(|(_, &v)| v);
    let max_other = others.clone().fold(f64::NEG_INFINITY, f64::max);
    let above_reference = others.map(|v| v - ref_value).fold(0.0, f64::max);
    let violation = ref_value.abs().max(max_other).max(above_reference);
    let report = CheckReport::new("kbar", violation, tolerance)
        .with("reference_value", ref_value)
        .with("max_other_value", max_other)
        .with("max_above_reference", above_reference)
        .with("max_pathwise_increment", max_pathwise)
        .with("scenarios", scenarios.len() as f64);
    Ok(KbarReport { report, values, std_errors, reference })
}

/// Constant scenarios uniform in the bounds followed by piecewise-constant
/// random fields on 4 time blocks times 6 space blocks.
pub fn random_scenarios(grid: &Grid, spec: &GTildeSpec, count: usize, seed: u64) -> Result<Vec<ScenarioField>> {
    let b = spec.bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for j in 0..count {
        if j < count / 2 {
            let gamma = b.sig2_low + (b.sig2_high - b.sig2_low) * rng.random::<f64>();
            out.push(ScenarioField::constant(grid, spec, gamma)?);
        } else {
            let blocks: Vec<f64> = (0..24).map(|_| b.sig2_low + (b.sig2_high - b.sig2_low) * rng.random::<f64>()).collect();
            let mut field = Field::filled("gamma", grid.n, grid.m, 0.0);
            for k in 0..grid.n {
                let tb = (k * 4 / grid.n).min(3);
                for i in 0..grid.m {
                    let xb = (i * 6 / grid.m).min(5);
                    field.set(k, i, blocks[tb * 6 + xb]);
                }
            }
            out.push(ScenarioField::from_field(field, spec)?);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Appendix estimate

struct XiVisitor<'a> {
    system: &'a ControlSystem,
    y_star: &'a Field,
    dx_y: &'a Field,
    grid: &'a Grid,
    sigma_offset: f64,
    running_cost: f64,
    martingale: f64,
    sigma_integral: f64,
    sigma_field: &'a Field,
}

impl PathVisitor for XiVisitor<'_> {
    type Output = [f64; 4];

    fn visit(&mut self, s: &PathStep) {
        let y = self.y_star.interp(s.k, self.grid, s.x);
        self.running_cost += self.system.g(s.t, s.x, y, s.v) * s.gamma * s.dt;
        let z = self.dx_y.interp(s.k, self.grid, s.x) * self.system.sigma(s.t, s.x, s.v);
        self.martingale += z * s.db;
        self.sigma_integral += (self.sigma_field.interp(s.k, self.grid, s.x) + self.sigma_offset) * s.dt;
    }

    fn finish(self, end: &PathEnd) -> [f64; 4] {
        let xi = self.system.phi(end.x) + self.running_cost;
        [xi, xi - self.martingale, self.sigma_integral, end.rho_integral]
    }
}

/// `Y*₀ − Ȳ₀ ≥ C(E_{P*}∫Σ dt + Ẽ[ξ*] − E_{P*}[ξ*] + α(P*))` with
/// `C = exp(−L σ̄² T)`, `Y*` the cost of `u*` and `Ȳ₀ = V(0, x₀)`.
///
/// `Ẽ[ξ*]` solves the backward equation with the `y` argument of `g` frozen
/// to `Y*`. `E_{P*}[ξ*]` subtracts the zero-mean martingale `∫∂_xY* σ dB` as
/// a control variate. `sigma_offset` shifts `Σ`; a positive value is a
/// negative control.
#[allow(clippy::too_many_arguments)]
pub fn check_estimate_appendix(
    system: &ControlSystem,
    spec: &GTildeSpec,
    hjb: &HJBSolution,
    boundary: &Boundary,
    scenario: &ScenarioField,
    run: PathRun,
    settings: &CheckSettings,
    sigma_offset: f64,
) -> Result<CheckReport> {
    let grid = &hjb.grid;
    let y_star = backward_y(system, &hjb.u_star, spec, grid, boundary)?;
    let lhs = y_star.interp(0, grid, run.x_init) - hjb.value.interp(0, grid, run.x_init);
    let terminal: Vec<f64> = grid.xs().into_iter().map(|x| system.phi(x)).collect();
    let frozen = run_backward(
        system,
        spec,
        grid,
        ControlMode::Fixed(&hjb.u_star),
        grid.n,
        &terminal,
        boundary,
        BackwardOptions { frozen_y: Some(&y_star), record_gamma: false },
    )?;
    let e_tilde = frozen.y.interp(0, grid, run.x_init);
    let (_, dx_y, _) = crate::pde::derivative_fields(&y_star, grid);
    let setup = PathSetup::new(system, scenario, &hjb.u_star, grid, run.n_paths, run.seed, run.x_init);
    let out = run_paths(&setup, |_| XiVisitor {
        system,
        y_star: &y_star,
        dx_y: &dx_y,
        grid,
        sigma_offset,
        running_cost: 0.0,
        martingale: 0.0,
        sigma_integral: 0.0,
        sigma_field: &hjb.sigma_residual,
    })?;
    let controlled: Vec<f64> = out.iter().map(|o| o[1]).collect();
    let (e_p, se_xi) = mean_std_error(&controlled);
    let (raw_xi, raw_se) = mean_std_error(&out.iter().map(|o| o[0]).collect::<Vec<_>>());
    let (e_sigma, se_sigma) = mean_std_error(&out.iter().map(|o| o[2]).collect::<Vec<_>>());
    let alpha = mean_std_error(&out.iter().map(|o| o[3]).collect::<Vec<_>>()).0;
    let c = (-system.lipschitz() * spec.bounds().sig2_high * grid.horizon).exp();
    let xi_gap = e_tilde - e_p;
    let rhs = c * (e_sigma + xi_gap + alpha);
    let tolerance = settings.tolerance(grid, se_xi.max(se_sigma));
    let violation = (rhs - lhs).max(e_sigma.abs()).max(xi_gap.abs()).max(alpha.abs()).max(lhs.abs());
    Ok(CheckReport::new("estimate_appendix", violation, tolerance)
        .with("lhs", lhs)
        .with("rhs", rhs)
        .with("lhs_minus_rhs", lhs - rhs)
        .with("c", c)
        .with("sigma_integral", e_sigma)
        .with("e_tilde_xi", e_tilde)
        .with("e_p_xi", e_p)
        .with("e_p_xi_std_error", se_xi)
        .with("e_p_xi_raw", raw_xi)
        .with("e_p_xi_raw_std_error", raw_se)
        .with("alpha", alpha))
}

// ---------------------------------------------------------------------------
// Jets

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JetMode {
    /// One-sided limits of adjoints of perturbed problems.
    EpsLimit,
    /// Adjoints under the two extreme dual selections of the unperturbed
    /// problem.
    ExtremeSelection,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JetEstimate {
    pub mode: JetMode,
    pub t_index: usize,
    pub t: f64,
    pub x_points: Vec<f64>,
    /// Estimate of `p_t`.
    pub p_low: Vec<f64>,
    /// Estimate of `p̄_t`.
    pub p_high: Vec<f64>,
    pub eps_sequence: Vec<f64>,
    /// `p^{Q_ε}(t, x + ε)` for `ε` in the sequence, per point (empty in
    /// extreme-selection mode).
    pub upper_sequence: Vec<Vec<f64>>,
    /// The same with `−ε`.
    pub lower_sequence: Vec<Vec<f64>>,
    /// Extrapolated one-sided difference quotients of `V(t, ·)`.
    pub d_minus: Vec<f64>,
    pub d_plus: Vec<f64>,
    /// `D^{1,−}V ≈ [d−, d+]` is nonempty.
    pub sub_jet_nonempty: Vec<bool>,
    /// `D^{1,+}V ≈ [d+, d−]` is nonempty.
    pub super_jet_nonempty: Vec<bool>,
    /// `p_low − tol ≤ d−` and `d+ ≤ p_high + tol`.
    pub sandwich: Vec<bool>,
    pub tolerance: f64,
}

/// `(ε₁ f₂ − ε₂ f₁)/(ε₁ − ε₂)` on the last two entries (removes the term
/// linear in `ε`); the raw value when only one is available.
pub fn richardson(eps: &[f64], values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return values[0];
    }
    let (e1, e2) = (eps[n - 2], eps[n - 1]);
    let (f1, f2) = (values[n - 2], values[n - 1]);
    (e1 * f2 - e2 * f1) / (e1 - e2)
}

/// Jet bounds at `x_points` on slice `t_index`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_jets(
    system: &ControlSystem,
    spec: &GTildeSpec,
    grid: &Grid,
    hjb: &HJBSolution,
    t_index: usize,
    x_points: &[f64],
    eps_sequence: &[f64],
    mode: JetMode,
    settings: &CheckSettings,
) -> Result<JetEstimate> {
    if t_index > grid.n {
        return Err(Error::Grid(format!("time index {t_index} beyond N = {}", grid.n)));
    }
    if eps_sequence.is_empty() {
        return Err(Error::Config("empty eps sequence".into()));
    }
    for w in eps_sequence.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::Config("eps sequence must be strictly decreasing".into()));
        }
    }
    let dx = grid.dx();
    if let Some(&eps) = eps_sequence.iter().find(|&&e| e < 2.0 * dx * (1.0 - 1e-9)) {
        return Err(Error::EpsTooSmall { eps, dx });
    }
    let tolerance = settings.tolerance(grid, 0.0);
    let slice = |x: f64| hjb.value.interp(t_index, grid, x);

    let mut p_low = Vec::with_capacity(x_points.len());
    let mut p_high = Vec::with_capacity(x_points.len());
    let mut upper_sequence = vec![Vec::new(); x_points.len()];
    let mut lower_sequence = vec![Vec::new(); x_points.len()];

    match mode {
        JetMode::EpsLimit => {
            let boundary = Boundary::default_for(system, spec, grid.horizon);
            let terminal: Vec<f64> = grid.xs().into_iter().map(|x| system.phi(x)).collect();
            for sign in [1.0, -1.0] {
                for &eps in eps_sequence {
                    let shift = sign * eps;
                    let control = shifted_control(system, &hjb.u_star, grid, shift);
                    let perturbed = run_backward(
                        system,
                        spec,
                        grid,
                        ControlMode::Fixed(&control),
                        grid.n,
                        &terminal,
                        &boundary,
                        BackwardOptions { frozen_y: None, record_gamma: true },
                    )?;
                    let mut values = vec![f64::NAN; x_points.len()];
                    for gamma in [perturbed.gamma_lo.as_ref(), perturbed.gamma_hi.as_ref()].into_iter().flatten() {
                        let scenario = ScenarioField::clipped_from(gamma.clone(), spec);
                        let adj = adjoint_pde_along(system, &control, &perturbed.y, &scenario, grid)?;
                        for (j, &x) in x_points.iter().enumerate() {
                            let p = adj.p.interp(t_index, grid, x + shift);
                            values[j] = if values[j].is_nan() {
                                p
                            } else if sign > 0.0 {
                                values[j].max(p)
                            } else {
                                values[j].min(p)
                            };
                        }
                    }
                    for (j, v) in values.into_iter().enumerate() {
                        if sign > 0.0 {
                            upper_sequence[j].push(v);
                        } else {
                            lower_sequence[j].push(v);
                        }
                    }
                }
            }
            for j in 0..x_points.len() {
                p_high.push(richardson(eps_sequence, &upper_sequence[j]));
                p_low.push(richardson(eps_sequence, &lower_sequence[j]));
            }
        }
        JetMode::ExtremeSelection => {
            let mut p_lo_sel = Vec::new();
            let mut p_hi_sel = Vec::new();
            for (gamma, out) in [(&hjb.gamma_lo, &mut p_lo_sel), (&hjb.gamma_hi, &mut p_hi_sel)] {
                let scenario = ScenarioField::clipped_from(gamma.clone(), spec);
                let adj = adjoint_pde(system, hjb, &scenario, grid)?;
                out.extend(x_points.iter().map(|&x| adj.p.interp(t_index, grid, x)));
            }
            for j in 0..x_points.len() {
                p_low.push(p_lo_sel[j].min(p_hi_sel[j]));
                p_high.push(p_lo_sel[j].max(p_hi_sel[j]));
            }
        }
    }

    let mut d_minus = Vec::new();
    let mut d_plus = Vec::new();
    let mut sub_jet_nonempty = Vec::new();
    let mut super_jet_nonempty = Vec::new();
    let mut sandwich = Vec::new();
    for (j, &x) in x_points.iter().enumerate() {
        let v0 = slice(x);
        let plus: Vec<f64> = eps_sequence.iter().map(|&d| (slice(x + d) - v0) / d).collect();
        let minus: Vec<f64> = eps_sequence.iter().map(|&d| (v0 - slice(x - d)) / d).collect();
        // The backward quotient is linear in −δ; extrapolate in the signed step.
        let neg: Vec<f64> = eps_sequence.iter().map(|e| -e).collect();
        let dp = richardson(eps_sequence, &plus);
        let dm = richardson(&neg, &minus);
        d_plus.push(dp);
        d_minus.push(dm);
        sub_jet_nonempty.push(dm <= dp + tolerance);
        super_jet_nonempty.push(dp <= dm + tolerance);
        sandwich.push(p_low[j] - tolerance <= dm && dp <= p_high[j] + tolerance);
    }

    Ok(JetEstimate {
        mode,
        t_index,
        t: grid.t(t_index),
        x_points: x_points.to_vec(),
        p_low,
        p_high,
        eps_sequence: eps_sequence.to_vec(),
        upper_sequence,
        lower_sequence,
        d_minus,
        d_plus,
        sub_jet_nonempty,
        super_jet_nonempty,
        sandwich,
        tolerance,
    })
}
