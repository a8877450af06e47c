//! Explicit monotone backward scheme.
//!
//! A step from slice `k+1` to slice `k` reads
//!
//! ```text
//! Y(k, i) = Y(k+1, i) + dt · G̃(F(t_k, x_i, Y, D¹Y, D²Y, v))
//! ```
//!
//! where the differences act on slice `k+1`. `D²` is central. `D¹` is central
//! when `σ² ≥ |h| dx` and upwind in the direction of `h` otherwise, which
//! keeps every neighbour coefficient nonnegative.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gtilde::{argmax_gamma_set, gtilde_eval, GTildeSpec};
use crate::pde::{cfl_timestep, Field, Grid};
use crate::systems::{solve_l_ode, ControlSystem, SystemKind};

/// Relative tolerance for ties between dual maximisers.
pub const ARGMAX_TOL: f64 = 1e-12;

/// Values imposed at `x_lo` and `x_hi`.
#[derive(Clone, Default)]
pub enum Boundary {
    /// Ghost nodes `2Y₀ − Y₁`, i.e. `D² = 0` at the ends.
    #[default]
    LinearExtrapolation,
    /// `Y(t, x)` given at the boundary nodes.
    Dirichlet(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::LinearExtrapolation => f.write_str("LinearExtrapolation"),
            Self::Dirichlet(_) => f.write_str("Dirichlet(..)"),
        }
    }
}

impl Boundary {
    /// Example 1 pins `x² + l(t)` with `l` from the ODE; every other system
    /// extrapolates linearly.
    pub fn default_for(system: &ControlSystem, spec: &GTildeSpec, horizon: f64) -> Self {
        match system.kind() {
            SystemKind::Example1 => {
                let l = solve_l_ode(spec, horizon, 4000);
                Self::Dirichlet(Arc::new(move |t, x| x * x + l.value_at(t)))
            }
            _ => Self::LinearExtrapolation,
        }
    }
}

/// How the control enters the step.
#[derive(Debug, Clone, Copy)]
pub enum ControlMode<'a> {
    /// A feedback field with at least `N` rows.
    Fixed(&'a Field),
    /// Minimise `G̃(F)` over the listed controls (smallest argmin on ties).
    Minimize(&'a [f64]),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BackwardOptions<'a> {
    /// Replaces the `y` argument of `g` by a known field, read on slice `k+1`
    /// like the rest of the step.
    pub frozen_y: Option<&'a Field>,
    /// Record the extreme dual maximisers of each step.
    pub record_gamma: bool,
}

#[derive(Debug, Clone)]
pub struct BackwardOutput {
    pub y: Field,
    /// Control used at each step; the last row is the argmin on the
    /// terminal data when minimising, and a copy of row `N − 1` otherwise.
    pub control: Field,
    pub gamma_lo: Option<Field>,
    pub gamma_hi: Option<Field>,
}

/// Neighbours of node `i`; linear ghost values at the ends.
#[inline]
fn stencil(y: &[f64], i: usize) -> (f64, f64, f64) {
    let m = y.len();
    let y0 = y[i];
    let ym = if i == 0 { 2.0 * y[0] - y[1] } else { y[i - 1] };
    let yp = if i + 1 == m { 2.0 * y[m - 1] - y[m - 2] } else { y[i + 1] };
    (ym, y0, yp)
}

/// `F` with the hybrid first difference.
#[inline]
#[allow(clippy::too_many_arguments)]
fn scheme_f(system: &ControlSystem, t: f64, x: f64, y_arg: f64, ym: f64, y0: f64, yp: f64, v: f64, dx: f64) -> f64 {
    let s = system.sigma(t, x, v);
    let s2 = s * s;
    let h = system.h(t, x, v);
    let d2 = (yp - 2.0 * y0 + ym) / (dx * dx);
    let d1 = if s2 >= h.abs() * dx {
        (yp - ym) / (2.0 * dx)
    } else if h > 0.0 {
        (yp - y0) / dx
    } else {
        (y0 - ym) / dx
    };
    s2 * d2 + 2.0 * h * d1 + 2.0 * system.g(t, x, y_arg, v)
}

fn check_cfl(system: &ControlSystem, spec: &GTildeSpec, grid: &Grid) -> Result<()> {
    let bound = cfl_timestep(system, grid, spec.bounds());
    if grid.dt() > bound * (1.0 + 1e-9) {
        return Err(Error::CflViolation { dt: grid.dt(), bound });
    }
    Ok(())
}

fn check_control(system: &ControlSystem, grid: &Grid, control: &Field) -> Result<()> {
    if control.rows() < grid.n || control.cols() != grid.m {
        return Err(Error::Grid(format!(
            "control field is {}x{}, grid needs at least {}x{}",
            control.rows(),
            control.cols(),
            grid.n,
            grid.m
        )));
    }
    let u = system.control();
    let tol = 1e-12 * (1.0 + u.lo.abs().max(u.hi.abs()));
    for &v in control.values() {
        if !(v >= u.lo - tol && v <= u.hi + tol) {
            return Err(Error::ControlOutOfRange { v, lo: u.lo, hi: u.hi });
        }
    }
    Ok(())
}

/// Runs the scheme from slice `k_end` (holding `terminal`) down to slice 0.
/// The returned fields have `k_end + 1` rows.
pub fn run_backward(
    system: &ControlSystem,
    spec: &GTildeSpec,
    grid: &Grid,
    mode: ControlMode<'_>,
    k_end: usize,
    terminal: &[f64],
    boundary: &Boundary,
    options: BackwardOptions<'_>,
) -> Result<BackwardOutput> {
    if k_end > grid.n || terminal.len() != grid.m {
        return Err(Error::Grid("terminal slice does not match the grid".into()));
    }
    check_cfl(system, spec, grid)?;
    match mode {
        ControlMode::Fixed(field) => check_control(system, grid, field)?,
        ControlMode::Minimize(controls) => {
            if controls.is_empty() {
                return Err(Error::Config("empty control grid".into()));
            }
        }
    }
    if let Some(frozen) = options.frozen_y {
        if frozen.rows() < k_end + 1 || frozen.cols() != grid.m {
            return Err(Error::Grid("frozen y field does not match the grid".into()));
        }
    }

    let m = grid.m;
    let dt = grid.dt();
    let dx = grid.dx();
    let mut y = Field::filled("Y", k_end + 1, m, 0.0);
    let mut control = Field::filled("u", k_end + 1, m, 0.0);
    let mut gamma_lo = options.record_gamma.then(|| Field::filled("gamma_lo", k_end + 1, m, 0.0));
    let mut gamma_hi = options.record_gamma.then(|| Field::filled("gamma_hi", k_end + 1, m, 0.0));
    y.row_mut(k_end).copy_from_slice(terminal);

    // Argmin on `next` at time `t`, returning (F, v).
    let minimise = |next: &[f64], t: f64, i: usize, y_arg: f64, controls: &[f64]| {
        let (ym, y0, yp) = stencil(next, i);
        let x = grid.x(i);
        let mut best_f = f64::INFINITY;
        let mut best_v = controls[0];
        for &v in controls {
            let f = scheme_f(system, t, x, y_arg, ym, y0, yp, v, dx);
            if f < best_f {
                best_f = f;
                best_v = v;
            }
        }
        (best_f, best_v)
    };

    if let ControlMode::Minimize(controls) = mode {
        let t = grid.t(k_end);
        for i in 0..m {
            let y_arg = options.frozen_y.map_or(terminal[i], |f| f.get(k_end, i));
            control.set(k_end, i, minimise(terminal, t, i, y_arg, controls).1);
        }
    }

    let mut next = terminal.to_vec();
    let mut current = vec![0.0; m];
    for k in (0..k_end).rev() {
        let t = grid.t(k);
        for i in 0..m {
            let y_arg = options.frozen_y.map_or(next[i], |f| f.get(k + 1, i));
            let (f, v) = match mode {
                ControlMode::Fixed(field) => {
                    let v = field.get(k, i);
                    let (ym, y0, yp) = stencil(&next, i);
                    (scheme_f(system, t, grid.x(i), y_arg, ym, y0, yp, v, dx), v)
                }
                ControlMode::Minimize(controls) => minimise(&next, t, i, y_arg, controls),
            };
            let value = next[i] + dt * gtilde_eval(spec, f);
            if !value.is_finite() {
                return Err(Error::NonFinite { k, i });
            }
            current[i] = value;
            control.set(k, i, v);
            if let (Some(lo), Some(hi)) = (gamma_lo.as_mut(), gamma_hi.as_mut()) {
                let (a, b) = argmax_gamma_set(spec, f, ARGMAX_TOL * f.abs().max(1.0));
                lo.set(k, i, a);
                hi.set(k, i, b);
            }
        }
        if let Boundary::Dirichlet(value) = boundary {
            current[0] = value(t, grid.x_lo);
            current[m - 1] = value(t, grid.x_hi);
        }
        y.row_mut(k).copy_from_slice(&current);
        std::mem::swap(&mut next, &mut current);
    }

    if let ControlMode::Fixed(_) = mode {
        if k_end > 0 {
            let last: Vec<f64> = control.row(k_end - 1).to_vec();
            control.row_mut(k_end).copy_from_slice(&last);
        }
    }
    for lo_hi in [gamma_lo.as_mut(), gamma_hi.as_mut()].into_iter().flatten() {
        if k_end > 0 {
            let last: Vec<f64> = lo_hi.row(k_end - 1).to_vec();
            lo_hi.row_mut(k_end).copy_from_slice(&last);
        }
    }
    Ok(BackwardOutput { y, control, gamma_lo, gamma_hi })
}

/// `Y` under a fixed feedback control from `Y(T, ·) = terminal(·)`.
pub fn solve_backward(
    system: &ControlSystem,
    control: &Field,
    spec: &GTildeSpec,
    grid: &Grid,
    terminal: &dyn Fn(f64) -> f64,
    boundary: &Boundary,
) -> Result<Field> {
    let row: Vec<f64> = grid.xs().into_iter().map(terminal).collect();
    let out = run_backward(
        system,
        spec,
        grid,
        ControlMode::Fixed(control),
        grid.n,
        &row,
        boundary,
        BackwardOptions::default(),
    )?;
    Ok(out.y)
}

/// Time and space differences of a field with `N + 1` rows:
/// `(∂_t, ∂_x, ∂²_xx)`. Central in `x` with second-order one-sided stencils
/// at the ends; forward in `t` with a backward difference on the last row.
pub fn derivative_fields(v: &Field, grid: &Grid) -> (Field, Field, Field) {
    let (rows, m) = (v.rows(), v.cols());
    let dx = grid.dx();
    let dt = grid.dt();
    let mut dt_v = Field::filled("dtV", rows, m, 0.0);
    let mut dx_v = Field::filled("dxV", rows, m, 0.0);
    let mut dxx_v = Field::filled("dxxV", rows, m, 0.0);
    for k in 0..rows {
        let y = v.row(k);
        for i in 0..m {
            let (d1, d2) = if i == 0 {
                ((-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * dx), (y[0] - 2.0 * y[1] + y[2]) / (dx * dx))
            } else if i + 1 == m {
                (
                    (3.0 * y[m - 1] - 4.0 * y[m - 2] + y[m - 3]) / (2.0 * dx),
                    (y[m - 1] - 2.0 * y[m - 2] + y[m - 3]) / (dx * dx),
                )
            } else {
                ((y[i + 1] - y[i - 1]) / (2.0 * dx), (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (dx * dx))
            };
            dx_v.set(k, i, d1);
            dxx_v.set(k, i, d2);
            let d_t = if rows < 2 {
                0.0
            } else if k + 1 < rows {
                (v.get(k + 1, i) - y[i]) / dt
            } else {
                (y[i] - v.get(k - 1, i)) / dt
            };
            dt_v.set(k, i, d_t);
        }
    }
    (dt_v, dx_v, dxx_v)
}

/// Output of [`solve_hjb`]. Every field has `N + 1` rows.
#[derive(Debug, Clone)]
pub struct HJBSolution {
    pub grid: Grid,
    pub v_grid: Vec<f64>,
    pub value: Field,
    pub u_star: Field,
    pub dt_v: Field,
    pub dx_v: Field,
    pub dxx_v: Field,
    /// `F̄ = F(t, x, V, ∂_xV, ∂²_xxV, u*)` from the discrete derivative fields.
    pub f_bar: Field,
    /// `Σ = ∂_tV + G̃(F̄)`.
    pub sigma_residual: Field,
    /// Smallest and largest maximisers of the `G̃` dual at `F̄`.
    pub gamma_lo: Field,
    pub gamma_hi: Field,
}

impl HJBSolution {
    /// Derived fields for a value field and its control.
    pub fn assemble(
        system: &ControlSystem,
        spec: &GTildeSpec,
        grid: &Grid,
        v_grid: Vec<f64>,
        value: Field,
        u_star: Field,
    ) -> Self {
        let (dt_v, dx_v, dxx_v) = derivative_fields(&value, grid);
        let rows = value.rows();
        let m = grid.m;
        let mut f_bar = Field::filled("Fbar", rows, m, 0.0);
        let mut sigma_residual = Field::filled("Sigma", rows, m, 0.0);
        let mut gamma_lo = Field::filled("gamma_lo", rows, m, 0.0);
        let mut gamma_hi = Field::filled("gamma_hi", rows, m, 0.0);
        for k in 0..rows {
            let t = grid.t(k);
            for i in 0..m {
                let f = system.f_operator(
                    t,
                    grid.x(i),
                    value.get(k, i),
                    dx_v.get(k, i),
                    dxx_v.get(k, i),
                    u_star.get(k, i),
                );
                f_bar.set(k, i, f);
                sigma_residual.set(k, i, dt_v.get(k, i) + gtilde_eval(spec, f));
                let (lo, hi) = argmax_gamma_set(spec, f, ARGMAX_TOL * f.abs().max(1.0));
                gamma_lo.set(k, i, lo);
                gamma_hi.set(k, i, hi);
            }
        }
        Self {
            grid: *grid,
            v_grid,
            value: value.renamed("V"),
            u_star: u_star.renamed("ustar"),
            dt_v,
            dx_v,
            dxx_v,
            f_bar,
            sigma_residual,
            gamma_lo,
            gamma_hi,
        }
    }

    /// `F̄` at an arbitrary control.
    pub fn f_bar_at(&self, system: &ControlSystem, k: usize, i: usize, v: f64) -> f64 {
        system.f_operator(
            self.grid.t(k),
            self.grid.x(i),
            self.value.get(k, i),
            self.dx_v.get(k, i),
            self.dxx_v.get(k, i),
            v,
        )
    }
}

/// The HJB equation with an inner minimisation over `v_grid_count` uniform
/// controls.
pub fn solve_hjb(
    system: &ControlSystem,
    spec: &GTildeSpec,
    grid: &Grid,
    v_grid_count: usize,
    boundary: &Boundary,
) -> Result<HJBSolution> {
    if v_grid_count < 2 {
        return Err(Error::Config(format!("v-grid needs at least 2 points, got {v_grid_count}")));
    }
    let v_grid = system.control().grid(v_grid_count);
    let row: Vec<f64> = grid.xs().into_iter().map(|x| system.phi(x)).collect();
    let out = run_backward(
        system,
        spec,
        grid,
        ControlMode::Minimize(&v_grid),
        grid.n,
        &row,
        boundary,
        BackwardOptions::default(),
    )?;
    Ok(HJBSolution::assemble(system, spec, grid, v_grid, out.y, out.control))
}
