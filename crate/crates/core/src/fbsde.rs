//! Backward equations along fixed controls: the cost process `Y`, the
//! adjoint `(p, q, N)` and the Hamiltonian.
//!
//! In the Markovian grid setting the adjoint is the linear equation
//!
//! ```text
//! ∂_t p + γ [h ∂_x p + ½σ² ∂²_xx p + (h_x + g_y) p + σ_x σ ∂_x p + g_x] = 0,   p(T) = Φ_x
//! ```
//!
//! with `q = σ ∂_x p` and `N = 0`. The Monte-Carlo estimator uses the weight
//! representation `p_t = E[Φ_x(X_T) l_T + ∫ g_x l d⟨B⟩]`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gtilde::GTildeSpec;
use crate::pde::{solve_backward, Boundary, Field, Grid, HJBSolution};
use crate::scenarios::{mean_std_error, run_paths, PathEnd, PathSetup, PathStep, PathVisitor, ScenarioField};
use crate::systems::ControlSystem;

/// Number of time blocks used by the orthogonality diagnostic.
pub const ORTHOGONALITY_BLOCKS: usize = 8;

/// `Y` under a fixed feedback control, `Y(T) = Φ`.
pub fn backward_y(
    system: &ControlSystem,
    control: &Field,
    spec: &GTildeSpec,
    grid: &Grid,
    boundary: &Boundary,
) -> Result<Field> {
    solve_backward(system, control, spec, grid, &|x| system.phi(x), boundary)
}

/// `u(k, x_i − ε)` by linear interpolation, kept inside `U`.
pub fn shifted_control(system: &ControlSystem, control: &Field, grid: &Grid, eps: f64) -> Field {
    let u = system.control();
    let mut out = Field::filled(control.name(), control.rows(), control.cols(), 0.0);
    for k in 0..control.rows() {
        for i in 0..grid.m {
            out.set(k, i, control.interp(k, grid, grid.x(i) - eps).clamp(u.lo, u.hi));
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct AdjointSolution {
    pub p: Field,
    pub q: Field,
    /// Zero on the grid; the Monte-Carlo estimator reports the evidence.
    pub n_residual: f64,
}

/// `H = h p + σ q + g` and `H_v = h_v p + σ_v q + g_v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HamiltonianValue {
    pub h: f64,
    pub h_v: f64,
}

pub fn hamiltonian_eval(system: &ControlSystem, t: f64, x: f64, y: f64, v: f64, p: f64, q: f64) -> HamiltonianValue {
    let c = system.coefficients();
    HamiltonianValue {
        h: system.h(t, x, v) * p + system.sigma(t, x, v) * q + system.g(t, x, y, v),
        h_v: c.h_v(t, x, v) * p + c.sigma_v(t, x, v) * q + c.g_v(t, x, y, v),
    }
}

/// Adjoint along the HJB argmin control, with `y = V`.
pub fn adjoint_pde(
    system: &ControlSystem,
    hjb: &HJBSolution,
    scenario: &ScenarioField,
    grid: &Grid,
) -> Result<AdjointSolution> {
    adjoint_pde_along(system, &hjb.u_star, &hjb.value, scenario, grid)
}

/// Adjoint along an arbitrary control field (at least `N` rows; row `N` is
/// reused from row `N − 1` if absent) with `y` taken from `y_field`.
pub fn adjoint_pde_along(
    system: &ControlSystem,
    control: &Field,
    y_field: &Field,
    scenario: &ScenarioField,
    grid: &Grid,
) -> Result<AdjointSolution> {
    if control.rows() < grid.n || control.cols() != grid.m || y_field.rows() < grid.n + 1 {
        return Err(Error::Grid("control or y field does not match the grid".into()));
    }
    let c = system.coefficients();
    let (m, dt, dx) = (grid.m, grid.dt(), grid.dx());
    let u_at = |k: usize, i: usize| control.get(k.min(control.rows() - 1), i);
    let mut p = Field::filled("p", grid.n + 1, m, 0.0);
    for i in 0..m {
        p.set(grid.n, i, system.phi_x(grid.x(i)));
    }
    for k in (0..grid.n).rev() {
        let t = grid.t(k);
        for i in 0..m {
            let next = p.row(k + 1);
            let x = grid.x(i);
            let v = u_at(k, i);
            let y = y_field.get(k, i);
            let gamma = scenario.get(k, i);
            let s = system.sigma(t, x, v);
            let a = 0.5 * s * s;
            let b = system.h(t, x, v) + c.sigma_x(t, x, v) * s;
            let r = c.h_x(t, x, v) + c.g_y(t, x, y, v);
            let p0 = next[i];
            let pm = if i == 0 { 2.0 * next[0] - next[1] } else { next[i - 1] };
            let pp = if i + 1 == m { 2.0 * next[m - 1] - next[m - 2] } else { next[i + 1] };
            let upwind = 2.0 * a < b.abs() * dx;
            let d1 = if !upwind {
                (pp - pm) / (2.0 * dx)
            } else if b > 0.0 {
                (pp - p0) / dx
            } else {
                (p0 - pm) / dx
            };
            let d2 = (pp - 2.0 * p0 + pm) / (dx * dx);
            let diagonal = 1.0 + gamma * dt * (r - 2.0 * a / (dx * dx) - if upwind { b.abs() / dx } else { 0.0 });
            if diagonal < -1e-12 {
                return Err(Error::CflViolation { dt, bound: dt * (1.0 - diagonal).recip() });
            }
            let value = p0 + dt * gamma * (b * d1 + a * d2 + r * p0 + c.g_x(t, x, y, v));
            if !value.is_finite() {
                return Err(Error::NonFinite { k, i });
            }
            p.set(k, i, value);
        }
    }
    let q = q_from_p(system, &p, control, grid);
    Ok(AdjointSolution { p, q, n_residual: 0.0 })
}

/// `q = σ(t, x, u) ∂_x p` with central differences (second-order one-sided
/// at the ends).
pub fn q_from_p(system: &ControlSystem, p: &Field, control: &Field, grid: &Grid) -> Field {
    let (m, dx) = (grid.m, grid.dx());
    let mut q = Field::filled("q", p.rows(), m, 0.0);
    for k in 0..p.rows() {
        let row = p.row(k);
        let t = grid.t(k);
        for i in 0..m {
            let d = if i == 0 {
                (-3.0 * row[0] + 4.0 * row[1] - row[2]) / (2.0 * dx)
            } else if i + 1 == m {
                (3.0 * row[m - 1] - 4.0 * row[m - 2] + row[m - 3]) / (2.0 * dx)
            } else {
                (row[i + 1] - row[i - 1]) / (2.0 * dx)
            };
            let v = control.get(k.min(control.rows() - 1), i);
            q.set(k, i, d * system.sigma(t, grid.x(i), v));
        }
    }
    q
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdjointMc {
    pub estimate: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Share of the variance of the per-path estimator not explained by a
    /// least-squares fit on the Brownian increments of
    /// [`ORTHOGONALITY_BLOCKS`] equal time blocks. Near zero when the
    /// martingale part is a stochastic integral with a slowly varying
    /// integrand and no orthogonal component.
    pub orthogonality_defect: f64,
}

struct AdjointVisitor<'a> {
    system: &'a ControlSystem,
    running: f64,
    k_start: usize,
    steps: usize,
    blocks: [f64; ORTHOGONALITY_BLOCKS],
}

impl PathVisitor for AdjointVisitor<'_> {
    type Output = (f64, [f64; ORTHOGONALITY_BLOCKS]);

    fn visit(&mut self, s: &PathStep) {
        let c = self.system.coefficients();
        self.running += c.g_x(s.t, s.x, s.y, s.v) * s.log_l.exp() * s.gamma * s.dt;
        let block = ((s.k - self.k_start) * ORTHOGONALITY_BLOCKS / self.steps).min(ORTHOGONALITY_BLOCKS - 1);
        self.blocks[block] += s.db;
    }

    fn finish(self, end: &PathEnd) -> Self::Output {
        (self.system.phi_x(end.x) * end.l + self.running, self.blocks)
    }
}

/// Monte-Carlo adjoint at `(t_index, x_init)` from the weight representation.
#[allow(clippy::too_many_arguments)]
pub fn adjoint_mc(
    system: &ControlSystem,
    scenario: &ScenarioField,
    control: &Field,
    grid: &Grid,
    t_index: usize,
    n_paths: usize,
    seed: u64,
    x_init: f64,
) -> Result<AdjointMc> {
    let setup = PathSetup::new(system, scenario, control, grid, n_paths, seed, x_init).starting_at(t_index);
    adjoint_mc_with(&setup)
}

/// As [`adjoint_mc`] with a full setup (e.g. a `y` field for `g_x`, `g_y`).
pub fn adjoint_mc_with(setup: &PathSetup<'_>) -> Result<AdjointMc> {
    let steps = setup.grid.n.saturating_sub(setup.k_start).max(1);
    let out = run_paths(setup, |_| AdjointVisitor {
        system: setup.system,
        running: 0.0,
        k_start: setup.k_start,
        steps,
        blocks: [0.0; ORTHOGONALITY_BLOCKS],
    })?;
    let values: Vec<f64> = out.iter().map(|(v, _)| *v).collect();
    let (estimate, std_error) = mean_std_error(&values);
    let orthogonality_defect = unexplained_fraction(&out);
    Ok(AdjointMc { estimate, std_error, n_paths: setup.n_paths, seed: setup.seed, orthogonality_defect })
}

/// `1 − R²` of the least-squares fit of the values on an intercept and the
/// block increments.
fn unexplained_fraction(samples: &[(f64, [f64; ORTHOGONALITY_BLOCKS])]) -> f64 {
    const D: usize = ORTHOGONALITY_BLOCKS + 1;
    let n = samples.len();
    if n <= D {
        return f64::NAN;
    }
    let mean = samples.iter().map(|s| s.0).sum::<f64>() / n as f64;
    let total: f64 = samples.iter().map(|s| (s.0 - mean).powi(2)).sum();
    if total <= f64::MIN_POSITIVE {
        return 0.0;
    }
    let mut ata = [[0.0; D]; D];
    let mut atb = [0.0; D];
    for (value, blocks) in samples {
        let mut row = [1.0; D];
        row[1..].copy_from_slice(blocks);
        for a in 0..D {
            atb[a] += row[a] * value;
            for b in 0..D {
                ata[a][b] += row[a] * row[b];
            }
        }
    }
    let Some(beta) = solve_dense(ata, atb) else { return f64::NAN };
    let residual: f64 = samples
        .iter()
        .map(|(value, blocks)| {
            let fit = beta[0] + blocks.iter().zip(&beta[1..]).map(|(x, b)| x * b).sum::<f64>();
            (value - fit).powi(2)
        })
        .sum();
    (residual / total).clamp(0.0, 1.0)
}

/// Gaussian elimination with partial pivoting.
fn solve_dense<const D: usize>(mut a: [[f64; D]; D], mut b: [f64; D]) -> Option<[f64; D]> {
    for col in 0..D {
        let pivot = (col..D).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..D {
            let f = a[r][col] / a[col][col];
            for c in col..D {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; D];
    for r in (0..D).rev() {
        let s: f64 = (r + 1..D).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}
