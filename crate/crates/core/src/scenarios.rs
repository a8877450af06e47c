//! Volatility scenarios and forward simulation.
//!
//! A scenario is a feedback variance field `γ(k, i)`; along a path the
//! canonical process has `d⟨B⟩ = γ dt`. Paths are simulated with Euler steps
//! and carry the weights
//!
//! ```text
//! Λ_s = exp ∫ g_y d⟨B⟩
//! l_s = exp(∫ σ_x dB + ∫ (h_x + g_y − ½σ_x²) d⟨B⟩)
//! ```
//!
//! accumulated with left-endpoint quadrature in log space.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gtilde::{gtilde_derivative, GBounds, GTildeSpec};
use crate::pde::{Field, Grid, HJBSolution};
use crate::systems::ControlSystem;

pub use crate::gtilde::argmax_gamma_set;

/// A feedback variance selection with one row per time step, standing for a
/// measure in the representation of the attached generator.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioField {
    gamma: Field,
    spec: GTildeSpec,
    /// Entries moved into the bounds when the field was built.
    pub clipped: usize,
}

impl ScenarioField {
    pub fn constant(grid: &Grid, spec: &GTildeSpec, gamma: f64) -> Result<Self> {
        Self::from_field(Field::filled("gamma", grid.n, grid.m, gamma), spec)
    }

    /// Rejects values outside `[σ̲², σ̄²]`.
    pub fn from_field(gamma: Field, spec: &GTildeSpec) -> Result<Self> {
        let bounds = spec.bounds();
        if let Some(&g) = gamma.values().iter().find(|&&g| !bounds.contains(g)) {
            return Err(Error::Config(format!(
                "scenario variance {g} outside [{}, {}]",
                bounds.sig2_low, bounds.sig2_high
            )));
        }
        Ok(Self { gamma: gamma.renamed("gamma"), spec: spec.clone(), clipped: 0 })
    }

    /// Clips into the bounds and counts the clipped entries.
    pub fn clipped_from(gamma: Field, spec: &GTildeSpec) -> Self {
        let bounds = spec.bounds();
        let clipped = gamma.values().iter().filter(|&&g| !bounds.contains(g)).count();
        let gamma = gamma.map("gamma", |g| bounds.clamp(g));
        Self { gamma, spec: spec.clone(), clipped }
    }

    pub fn field(&self) -> &Field {
        &self.gamma
    }

    pub fn spec(&self) -> &GTildeSpec {
        &self.spec
    }

    pub fn bounds(&self) -> GBounds {
        *self.spec.bounds()
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.gamma.get(k.min(self.gamma.rows() - 1), i)
    }

    /// Variance at the node nearest to `x`.
    #[inline]
    pub fn at(&self, grid: &Grid, k: usize, x: f64) -> f64 {
        self.get(k, grid.nearest(x))
    }

    /// This scenario before step `k_split` and `other` from then on.
    pub fn splice(&self, other: &ScenarioField, k_split: usize) -> Result<Self> {
        if self.gamma.cols() != other.gamma.cols() || self.gamma.rows() != other.gamma.rows() {
            return Err(Error::Grid("spliced scenarios must share a grid".into()));
        }
        let mut gamma = self.gamma.clone();
        for k in k_split.min(gamma.rows())..gamma.rows() {
            gamma.row_mut(k).copy_from_slice(other.gamma.row(k));
        }
        Ok(Self { gamma, spec: self.spec.clone(), clipped: self.clipped + other.clipped })
    }
}

/// `γ(k, i) = 2 G̃′(F̄(t_k, x_i, u*(k, i)))` for `k < N`.
pub fn reference_scenario(hjb: &HJBSolution, spec: &GTildeSpec, _system: &ControlSystem) -> ScenarioField {
    let grid = &hjb.grid;
    let mut gamma = Field::filled("gamma", grid.n, grid.m, 0.0);
    for k in 0..grid.n {
        for i in 0..grid.m {
            gamma.set(k, i, 2.0 * gtilde_derivative(spec, hjb.f_bar.get(k, i)));
        }
    }
    ScenarioField::clipped_from(gamma, spec)
}

/// The state of a path at the left end of step `k`, together with the
/// Gaussian increment that moves it to step `k + 1`.
#[derive(Debug, Clone, Copy)]
pub struct PathStep {
    pub path: usize,
    pub k: usize,
    pub t: f64,
    pub dt: f64,
    /// Nearest grid node to `x`.
    pub node: usize,
    pub x: f64,
    /// `y` argument used for `g` (from the supplied field, else 0).
    pub y: f64,
    pub v: f64,
    pub gamma: f64,
    /// `dB = √(γ dt) ξ`.
    pub db: f64,
    pub b: f64,
    pub qv: f64,
    pub log_lambda: f64,
    pub log_l: f64,
    pub rho_integral: f64,
}

/// Path state after the last step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathEnd {
    pub x: f64,
    pub b: f64,
    pub qv: f64,
    pub lambda: f64,
    pub lambda_min: f64,
    pub l: f64,
    pub rho_integral: f64,
    pub exited: bool,
}

/// Per-path observer; one instance per path.
pub trait PathVisitor {
    type Output: Send;
    fn visit(&mut self, step: &PathStep);
    fn finish(self, end: &PathEnd) -> Self::Output;
}

/// Inputs shared by all paths of a simulation.
#[derive(Debug, Clone, Copy)]
pub struct PathSetup<'a> {
    pub system: &'a ControlSystem,
    pub scenario: &'a ScenarioField,
    pub control: &'a Field,
    pub grid: &'a Grid,
    pub k_start: usize,
    pub x_init: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Supplies the `y` argument of `g`, `g_y` and `g_x` along paths.
    pub y_field: Option<&'a Field>,
}

impl<'a> PathSetup<'a> {
    pub fn new(
        system: &'a ControlSystem,
        scenario: &'a ScenarioField,
        control: &'a Field,
        grid: &'a Grid,
        n_paths: usize,
        seed: u64,
        x_init: f64,
    ) -> Self {
        Self { system, scenario, control, grid, k_start: 0, x_init, n_paths, seed, y_field: None }
    }

    pub fn starting_at(mut self, k_start: usize) -> Self {
        self.k_start = k_start;
        self
    }

    pub fn with_y_field(mut self, y: &'a Field) -> Self {
        self.y_field = Some(y);
        self
    }
}

/// Path-specific generator: the seed selects the key, the path index the
/// stream, so results do not depend on scheduling.
pub fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

fn simulate_one<V: PathVisitor>(setup: &PathSetup<'_>, path: usize, mut visitor: V) -> V::Output {
    let PathSetup { system, scenario, control, grid, k_start, x_init, seed, y_field, .. } = *setup;
    let coeffs = system.coefficients();
    let mut rng = path_rng(seed, path);
    let dt = grid.dt();
    let mut x = x_init;
    let (mut b, mut qv, mut log_lambda, mut log_l, mut rho_integral) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut log_lambda_min: f64 = 0.0;
    let mut exited = !grid.contains(x);
    let penalised = !scenario.spec.is_sublinear();
    for k in k_start..grid.n {
        let t = grid.t(k);
        let node = grid.nearest(x);
        let gamma = scenario.get(k, node);
        let v = control.get(k.min(control.rows() - 1), node);
        let y = y_field.map_or(0.0, |f| f.interp(k.min(f.rows() - 1), grid, x));
        let xi: f64 = StandardNormal.sample(&mut rng);
        let db = (gamma * dt).sqrt() * xi;
        let step = PathStep {
            path,
            k,
            t,
            dt,
            node,
            x,
            y,
            v,
            gamma,
            db,
            b,
            qv,
            log_lambda,
            log_l,
            rho_integral,
        };
        visitor.visit(&step);

        let d_qv = gamma * dt;
        let sigma = system.sigma(t, x, v);
        let sigma_x = coeffs.sigma_x(t, x, v);
        let g_y = coeffs.g_y(t, x, y, v);
        log_l += sigma_x * db + (coeffs.h_x(t, x, v) + g_y - 0.5 * sigma_x * sigma_x) * d_qv;
        log_lambda += g_y * d_qv;
        log_lambda_min = log_lambda_min.min(log_lambda);
        if penalised {
            rho_integral += scenario.spec.penalty_at(gamma) * dt;
        }
        x += system.h(t, x, v) * d_qv + sigma * db;
        b += db;
        qv += d_qv;
        exited |= !grid.contains(x);
    }
    visitor.finish(&PathEnd {
        x,
        b,
        qv,
        lambda: log_lambda.exp(),
        lambda_min: log_lambda_min.exp(),
        l: log_l.exp(),
        rho_integral,
        exited,
    })
}

/// Simulates `n_paths` paths in parallel; outputs are in path order.
pub fn run_paths<V, M>(setup: &PathSetup<'_>, make: M) -> Result<Vec<V::Output>>
where
    V: PathVisitor,
    M: Fn(usize) -> V + Sync,
{
    if setup.n_paths == 0 {
        return Err(Error::EmptyPaths);
    }
    if setup.k_start > setup.grid.n {
        return Err(Error::Grid(format!("start step {} beyond N = {}", setup.k_start, setup.grid.n)));
    }
    Ok((0..setup.n_paths).into_par_iter().map(|p| simulate_one(setup, p, make(p))).collect())
}

/// Visitor that records nothing.
pub struct Summary;

impl PathVisitor for Summary {
    type Output = PathEnd;
    fn visit(&mut self, _: &PathStep) {}
    fn finish(self, end: &PathEnd) -> PathEnd {
        *end
    }
}

/// One recorded trajectory, aligned with steps `k_start..=N`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub x: Vec<f64>,
    pub b: Vec<f64>,
    pub qv: Vec<f64>,
    pub lambda: Vec<f64>,
    pub l_weight: Vec<f64>,
    pub rho_integral: Vec<f64>,
    pub gamma: Vec<f64>,
}

struct Recorder {
    keep: bool,
    trajectory: Trajectory,
}

impl PathVisitor for Recorder {
    type Output = (PathEnd, Option<Trajectory>);

    fn visit(&mut self, s: &PathStep) {
        if self.keep {
            let tr = &mut self.trajectory;
            tr.x.push(s.x);
            tr.b.push(s.b);
            tr.qv.push(s.qv);
            tr.lambda.push(s.log_lambda.exp());
            tr.l_weight.push(s.log_l.exp());
            tr.rho_integral.push(s.rho_integral);
            tr.gamma.push(s.gamma);
        }
    }

    fn finish(mut self, end: &PathEnd) -> Self::Output {
        if !self.keep {
            return (*end, None);
        }
        let tr = &mut self.trajectory;
        tr.x.push(end.x);
        tr.b.push(end.b);
        tr.qv.push(end.qv);
        tr.lambda.push(end.lambda);
        tr.l_weight.push(end.l);
        tr.rho_integral.push(end.rho_integral);
        (*end, Some(self.trajectory))
    }
}

/// Simulated paths: terminal summaries for every path and full trajectories
/// for the first `n_record`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    pub seed: u64,
    pub k_start: usize,
    pub x_init: f64,
    pub dt: f64,
    pub ends: Vec<PathEnd>,
    pub trajectories: Vec<Trajectory>,
}

impl PathBundle {
    pub fn n_paths(&self) -> usize {
        self.ends.len()
    }

    pub fn exit_fraction(&self) -> f64 {
        self.ends.iter().filter(|e| e.exited).count() as f64 / self.ends.len().max(1) as f64
    }

    pub fn min_lambda(&self) -> f64 {
        self.ends.iter().map(|e| e.lambda_min).fold(f64::INFINITY, f64::min)
    }

    /// Mean and standard error of a per-path statistic.
    pub fn mean_of(&self, f: impl Fn(&PathEnd) -> f64) -> (f64, f64) {
        let values: Vec<f64> = self.ends.iter().map(f).collect();
        mean_std_error(&values)
    }
}

/// Sample mean and its standard error.
pub fn mean_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Default number of recorded trajectories.
pub const DEFAULT_RECORDED: usize = 64;

/// Euler simulation from `(t₀, x_init)`, recording the first
/// [`DEFAULT_RECORDED`] trajectories.
pub fn simulate_paths(
    system: &ControlSystem,
    scenario: &ScenarioField,
    control: &Field,
    grid: &Grid,
    n_paths: usize,
    seed: u64,
    x_init: f64,
) -> Result<PathBundle> {
    let setup = PathSetup::new(system, scenario, control, grid, n_paths, seed, x_init);
    simulate_with(&setup, DEFAULT_RECORDED)
}

pub fn simulate_with(setup: &PathSetup<'_>, n_record: usize) -> Result<PathBundle> {
    let out = run_paths(setup, |p| Recorder { keep: p < n_record, trajectory: Trajectory::default() })?;
    let mut ends = Vec::with_capacity(out.len());
    let mut trajectories = Vec::new();
    for (end, tr) in out {
        ends.push(end);
        trajectories.extend(tr);
    }
    Ok(PathBundle { seed: setup.seed, k_start: setup.k_start, x_init: setup.x_init, dt: setup.grid.dt(), ends, trajectories })
}

/// `α(P) ≈ E_P[∫ρ(γ_t)dt]` for paths simulated under `scenario`. The path
/// integrals use the penalty attached to the scenario, which must be `spec`.
pub fn penalty_alpha(scenario: &ScenarioField, spec: &GTildeSpec, paths: &PathBundle) -> Result<f64> {
    if paths.ends.is_empty() {
        return Err(Error::EmptyPaths);
    }
    if scenario.spec.rho() != spec.rho() || scenario.spec.gamma_grid() != spec.gamma_grid() {
        return Err(Error::Config("paths were simulated under a different penalty".into()));
    }
    if spec.is_sublinear() {
        return Ok(0.0);
    }
    Ok(paths.ends.iter().map(|e| e.rho_integral).sum::<f64>() / paths.ends.len() as f64)
}
