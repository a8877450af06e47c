//! The sublinear generator `G` and convex generators `G̃` dominated by it.
//!
//! `G(a) = ½(σ̄²a⁺ − σ̲²a⁻)` is fixed by the variance bounds. A dominated
//! convex generator is described by a penalty `ρ` on a finite variance grid
//! `σ̲² = γ₀ < γ₁ < … < γₙ = σ̄²` and evaluated through its dual form
//!
//! ```text
//! G̃(a) = max_j ( ½ γⱼ a − ρ(γⱼ) )
//! ```
//!
//! With `min ρ = 0` this is convex, nondecreasing, vanishes at zero and satisfies
//! `G̃(a) − G̃(b) ≤ G(a − b)`; [`check_domination`] verifies all three on samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of points in a generated variance grid.
pub const DEFAULT_GRID_POINTS: usize = 65;

/// Variance bounds `0 < σ̲² ≤ σ̄²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GBounds {
    pub sig2_low: f64,
    pub sig2_high: f64,
}

impl GBounds {
    pub fn new(sig2_low: f64, sig2_high: f64) -> Result<Self> {
        if !(sig2_low > 0.0 && sig2_low <= sig2_high && sig2_high.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "variance bounds must satisfy 0 < sig2_low <= sig2_high, got [{sig2_low}, {sig2_high}]"
            )));
        }
        Ok(Self { sig2_low, sig2_high })
    }

    pub fn clamp(&self, gamma: f64) -> f64 {
        gamma.clamp(self.sig2_low, self.sig2_high)
    }

    pub fn contains(&self, gamma: f64) -> bool {
        gamma >= self.sig2_low && gamma <= self.sig2_high
    }
}

/// `G(a) = ½(σ̄²a⁺ − σ̲²a⁻)`.
pub fn g_eval(bounds: &GBounds, a: f64) -> f64 {
    0.5 * (bounds.sig2_high * a.max(0.0) - bounds.sig2_low * (-a).max(0.0))
}

/// How the penalty was specified; kept so a spec can be written back out.
#[derive(Debug, Clone, PartialEq)]
pub enum Penalty {
    Zero,
    /// `ρ(γ) = (γ − center)²`, shifted so its grid minimum is zero.
    Quadratic { center: f64 },
    Explicit(Vec<f64>),
}

/// A dominated convex generator in penalty-dual form.
#[derive(Debug, Clone, PartialEq)]
pub struct GTildeSpec {
    bounds: GBounds,
    gamma_grid: Vec<f64>,
    rho: Vec<f64>,
    penalty: Penalty,
}

fn uniform_grid(bounds: &GBounds, points: usize) -> Vec<f64> {
    if bounds.sig2_low == bounds.sig2_high {
        return vec![bounds.sig2_low];
    }
    if points < 2 {
        return vec![bounds.sig2_low, bounds.sig2_high];
    }
    let step = (bounds.sig2_high - bounds.sig2_low) / (points - 1) as f64;
    (0..points)
        .map(|j| {
            if j + 1 == points {
                bounds.sig2_high
            } else {
                bounds.sig2_low + step * j as f64
            }
        })
        .collect()
}

impl GTildeSpec {
    /// Validated constructor. Rejects grids that are not strictly increasing
    /// with both bounds as endpoints, negative or non-convex penalties, and
    /// penalties whose minimum is not zero.
    pub fn new(bounds: GBounds, gamma_grid: Vec<f64>, rho: Vec<f64>) -> Result<Self> {
        let spec = Self::new_unchecked(bounds, gamma_grid, rho);
        spec.validate()?;
        Ok(spec)
    }

    /// Builds a spec without validation. Used to feed deliberately broken
    /// penalties to [`check_domination`].
    pub fn new_unchecked(bounds: GBounds, gamma_grid: Vec<f64>, rho: Vec<f64>) -> Self {
        let penalty = if rho.iter().all(|&r| r == 0.0) {
            Penalty::Zero
        } else {
            Penalty::Explicit(rho.clone())
        };
        Self { bounds, gamma_grid, rho, penalty }
    }

    /// `ρ ≡ 0` on a uniform grid: `G̃ = G`.
    pub fn sublinear(bounds: GBounds) -> Self {
        Self::sublinear_with_points(bounds, DEFAULT_GRID_POINTS)
    }

    pub fn sublinear_with_points(bounds: GBounds, points: usize) -> Self {
        let gamma_grid = uniform_grid(&bounds, points);
        let rho = vec![0.0; gamma_grid.len()];
        Self { bounds, gamma_grid, rho, penalty: Penalty::Zero }
    }

    /// `ρ(γ) = (γ − center)² − min_j (γⱼ − center)²` on the given grid.
    pub fn quadratic(bounds: GBounds, gamma_grid: Vec<f64>, center: f64) -> Result<Self> {
        let raw: Vec<f64> = gamma_grid.iter().map(|g| (g - center).powi(2)).collect();
        let floor = raw.iter().copied().fold(f64::INFINITY, f64::min);
        let rho = raw.into_iter().map(|r| r - floor).collect();
        let spec = Self { bounds, gamma_grid, rho, penalty: Penalty::Quadratic { center } };
        spec.validate()?;
        Ok(spec)
    }

    pub fn quadratic_uniform(bounds: GBounds, points: usize, center: f64) -> Result<Self> {
        Self::quadratic(bounds, uniform_grid(&bounds, points), center)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = &self.gamma_grid;
        let fail = |msg: String| Err(Error::InvalidSpec(msg));
        let degenerate = self.bounds.sig2_low == self.bounds.sig2_high;
        if grid.is_empty() || (grid.len() < 2 && !degenerate) {
            return fail("variance grid needs at least two points".into());
        }
        if grid.len() != self.rho.len() {
            return fail(format!(
                "penalty has {} values for {} grid points",
                self.rho.len(),
                grid.len()
            ));
        }
        if grid.first() != Some(&self.bounds.sig2_low) || grid.last() != Some(&self.bounds.sig2_high) {
            return fail("variance grid must start at sig2_low and end at sig2_high".into());
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return fail("variance grid must be strictly increasing".into());
        }
        if self.rho.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return fail("penalty must be finite and nonnegative".into());
        }
        let min = self.rho.iter().copied().fold(f64::INFINITY, f64::min);
        if min != 0.0 {
            return fail(format!("penalty minimum must be 0, got {min}"));
        }
        for j in 1..grid.len().saturating_sub(1) {
            let left = (self.rho[j] - self.rho[j - 1]) / (grid[j] - grid[j - 1]);
            let right = (self.rho[j + 1] - self.rho[j]) / (grid[j + 1] - grid[j]);
            if right < left - 1e-12 * (1.0 + left.abs()) {
                return fail(format!("penalty is not convex at grid point {j}"));
            }
        }
        Ok(())
    }

    pub fn bounds(&self) -> &GBounds {
        &self.bounds
    }

    pub fn gamma_grid(&self) -> &[f64] {
        &self.gamma_grid
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn penalty(&self) -> &Penalty {
        &self.penalty
    }

    pub fn is_sublinear(&self) -> bool {
        self.rho.iter().all(|&r| r == 0.0)
    }

    /// Penalty at an arbitrary variance in the bounds, by linear interpolation.
    pub fn penalty_at(&self, gamma: f64) -> f64 {
        let grid = &self.gamma_grid;
        if gamma <= grid[0] {
            return self.rho[0];
        }
        let last = grid.len() - 1;
        if gamma >= grid[last] {
            return self.rho[last];
        }
        let j = grid.partition_point(|&g| g <= gamma).max(1) - 1;
        let w = (gamma - grid[j]) / (grid[j + 1] - grid[j]);
        self.rho[j] + w * (self.rho[j + 1] - self.rho[j])
    }

    #[inline]
    fn dual_objective(&self, j: usize, a: f64) -> f64 {
        0.5 * self.gamma_grid[j] * a - self.rho[j]
    }

    /// Maximum of the dual objective and its smallest maximiser.
    #[inline]
    pub(crate) fn eval_with_argmax(&self, a: f64) -> (f64, usize) {
        let mut best = self.dual_objective(0, a);
        let mut arg = 0;
        for j in 1..self.gamma_grid.len() {
            let value = self.dual_objective(j, a);
            if value > best {
                best = value;
                arg = j;
            }
        }
        (best, arg)
    }
}

/// `G̃(a) = max_j (½γⱼa − ρ(γⱼ))`.
pub fn gtilde_eval(spec: &GTildeSpec, a: f64) -> f64 {
    spec.eval_with_argmax(a).0
}

/// Envelope derivative `½γ*(a)` using the smallest maximiser.
pub fn gtilde_derivative(spec: &GTildeSpec, a: f64) -> f64 {
    let (_, j) = spec.eval_with_argmax(a);
    0.5 * spec.gamma_grid[j]
}

/// Smallest and largest grid variances whose dual objective is within `tol`
/// of the maximum.
pub fn argmax_gamma_set(spec: &GTildeSpec, a: f64, tol: f64) -> (f64, f64) {
    let best = gtilde_eval(spec, a);
    let mut lo = f64::NAN;
    let mut hi = f64::NAN;
    for (j, &gamma) in spec.gamma_grid.iter().enumerate() {
        if spec.dual_objective(j, a) >= best - tol {
            if lo.is_nan() {
                lo = gamma;
            }
            hi = gamma;
        }
    }
    (lo, hi)
}

/// Largest observed violation of each domination property.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominationReport {
    /// `G̃(0)`; must be zero.
    pub value_at_zero: f64,
    pub zero_violation: f64,
    /// `max(G̃(b) − G̃(a), 0)` over sampled `a ≥ b`.
    pub monotonicity_violation: f64,
    /// `max(G̃(a) − G̃(b) − G(a − b), 0)` over sampled pairs, both orders.
    pub domination_violation: f64,
}

impl DominationReport {
    pub fn max_violation(&self) -> f64 {
        self.zero_violation
            .max(self.monotonicity_violation)
            .max(self.domination_violation)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_violation() <= tol
    }
}

pub fn check_domination(spec: &GTildeSpec, sample_pairs: &[(f64, f64)]) -> DominationReport {
    let value_at_zero = gtilde_eval(spec, 0.0);
    let mut monotonicity_violation: f64 = 0.0;
    let mut domination_violation: f64 = 0.0;
    for &(a3, a4) in sample_pairs {
        let (g3, g4) = (gtilde_eval(spec, a3), gtilde_eval(spec, a4));
        let (hi, lo) = if a3 >= a4 { (g3, g4) } else { (g4, g3) };
        monotonicity_violation = monotonicity_violation.max(lo - hi);
        domination_violation = domination_violation
            .max(g3 - g4 - g_eval(&spec.bounds, a3 - a4))
            .max(g4 - g3 - g_eval(&spec.bounds, a4 - a3));
    }
    DominationReport {
        value_at_zero,
        zero_violation: value_at_zero.abs(),
        monotonicity_violation,
        domination_violation,
    }
}

/// Penalty as written in a `[gtilde]` configuration section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RhoConfig {
    Named(String),
    List(Vec<f64>),
}

/// The `[gtilde]` configuration section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GTildeConfig {
    pub sig2_low: f64,
    pub sig2_high: f64,
    pub rho: RhoConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_grid: Option<Vec<f64>>,
}

impl GTildeSpec {
    pub fn from_config(config: &GTildeConfig) -> Result<Self> {
        let bounds = GBounds::new(config.sig2_low, config.sig2_high)?;
        let grid = match (&config.gamma_grid, &config.rho) {
            (Some(grid), _) => grid.clone(),
            (None, RhoConfig::List(values)) => uniform_grid(&bounds, values.len()),
            (None, _) => uniform_grid(&bounds, config.grid_points.unwrap_or(DEFAULT_GRID_POINTS)),
        };
        match &config.rho {
            RhoConfig::Named(name) if name == "zero" => {
                let n = grid.len();
                let mut spec = Self::new(bounds, grid, vec![0.0; n])?;
                spec.penalty = Penalty::Zero;
                Ok(spec)
            }
            RhoConfig::Named(name) => {
                let center = name
                    .strip_prefix("quadratic:")
                    .and_then(|c| c.trim().parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "rho must be \"zero\", \"quadratic:<center>\" or a list, got \"{name}\""
                        ))
                    })?;
                Self::quadratic(bounds, grid, center)
            }
            RhoConfig::List(values) => {
                let mut spec = Self::new(bounds, grid, values.clone())?;
                spec.penalty = Penalty::Explicit(values.clone());
                Ok(spec)
            }
        }
    }

    pub fn to_config(&self) -> GTildeConfig {
        let default_grid = uniform_grid(&self.bounds, self.gamma_grid.len());
        let gamma_grid = (default_grid != self.gamma_grid).then(|| self.gamma_grid.clone());
        let (rho, grid_points) = match &self.penalty {
            Penalty::Zero => (RhoConfig::Named("zero".into()), Some(self.gamma_grid.len())),
            Penalty::Quadratic { center } => (
                RhoConfig::Named(format!("quadratic:{center}")),
                Some(self.gamma_grid.len()),
            ),
            Penalty::Explicit(values) => (RhoConfig::List(values.clone()), None),
        };
        GTildeConfig {
            sig2_low: self.bounds.sig2_low,
            sig2_high: self.bounds.sig2_high,
            rho,
            grid_points: if gamma_grid.is_some() { None } else { grid_points },
            gamma_grid,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bounds() -> GBounds {
        GBounds::new(0.25, 1.0).unwrap()
    }

    fn quad4() -> GTildeSpec {
        GTildeSpec::quadratic(bounds(), vec![0.25, 0.5, 0.75, 1.0], 0.5).unwrap()
    }

    /// max_j(½γⱼa − ρⱼ) over the four-point grid, written out.
    fn quad4_brute(a: f64) -> f64 {
        [(0.25, 0.0625), (0.5, 0.0), (0.75, 0.0625), (1.0, 0.25)]
            .iter()
            .map(|(g, r)| 0.5 * g * a - r)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn g_values() {
        let b = bounds();
        assert_eq!(g_eval(&b, 0.0), 0.0);
        assert_eq!(g_eval(&b, 2.0), 1.0);
        assert_eq!(g_eval(&b, -2.0), -0.25);
    }

    #[test]
    fn zero_penalty_reduces_to_g() {
        let spec = GTildeSpec::sublinear(bounds());
        assert_eq!(gtilde_eval(&spec, -2.0), -0.25);
        for a in [-3.0, -0.1, 0.0, 0.4, 7.0] {
            assert!((gtilde_eval(&spec, a) - g_eval(&bounds(), a)).abs() < 1e-15);
        }
        assert_eq!(gtilde_derivative(&spec, -1.0), 0.125);
        assert_eq!(gtilde_derivative(&spec, 1.0), 0.5);
    }

    #[test]
    fn quadratic_penalty_matches_brute_force() {
        let spec = quad4();
        assert_eq!(quad4_brute(2.0), 0.75);
        assert_eq!(quad4_brute(-2.0), -0.3125);
        assert!((gtilde_eval(&spec, 2.0) - 0.75).abs() < 1e-15);
        assert!((gtilde_eval(&spec, -2.0) + 0.3125).abs() < 1e-15);
        assert_eq!(gtilde_derivative(&spec, 2.0), 0.5);
        for k in -40..=40 {
            let a = k as f64 * 0.25;
            assert!((gtilde_eval(&spec, a) - quad4_brute(a)).abs() < 1e-14);
        }
    }

    #[test]
    fn argmax_sets() {
        let zero = GTildeSpec::sublinear(bounds());
        assert_eq!(argmax_gamma_set(&zero, 1.0, 0.0), (1.0, 1.0));
        assert_eq!(argmax_gamma_set(&zero, 0.0, 0.0), (0.25, 1.0));
        assert_eq!(argmax_gamma_set(&quad4(), 2.0, 0.0), (1.0, 1.0));
        // a = 4 makes ½γ·4 − ρ equal 0.4375, 1.0, 1.4375, 1.75 on the grid.
        assert_eq!(argmax_gamma_set(&quad4(), 4.0, 0.0), (1.0, 1.0));
        assert_eq!(2.0 * gtilde_derivative(&quad4(), 4.0), 1.0);
        assert_eq!(argmax_gamma_set(&quad4(), 4.0, 0.35), (0.75, 1.0));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let b = bounds();
        assert!(GTildeSpec::new(b, vec![0.25, 1.0], vec![0.1, 0.2]).is_err());
        assert!(GTildeSpec::new(b, vec![0.25, 0.5, 1.0], vec![0.0, 0.3, 0.0]).is_err());
        assert!(GTildeSpec::new(b, vec![0.3, 1.0], vec![0.0, 0.0]).is_err());
        assert!(GTildeSpec::new(b, vec![0.25, 0.25, 1.0], vec![0.0, 0.0, 0.0]).is_err());
        assert!(GBounds::new(0.0, 1.0).is_err());
        assert!(GBounds::new(1.0, 0.5).is_err());
    }

    #[test]
    fn shifted_penalty_reports_value_at_zero() {
        let spec = GTildeSpec::new_unchecked(bounds(), vec![0.25, 1.0], vec![0.1, 0.1]);
        let report = check_domination(&spec, &[(1.0, -1.0)]);
        assert!((report.value_at_zero + 0.1).abs() < 1e-15);
        assert!(!report.passes(1e-12));
    }

    #[test]
    fn penalty_interpolation() {
        let spec = quad4();
        assert_eq!(spec.penalty_at(0.5), 0.0);
        assert!((spec.penalty_at(0.625) - 0.03125).abs() < 1e-15);
        assert_eq!(spec.penalty_at(1.0), 0.25);
    }

    #[test]
    fn config_round_trip() {
        let cfg = GTildeConfig {
            sig2_low: 0.25,
            sig2_high: 1.0,
            rho: RhoConfig::Named("quadratic:0.5".into()),
            grid_points: Some(4),
            gamma_grid: None,
        };
        let spec = GTildeSpec::from_config(&cfg).unwrap();
        assert_eq!(spec, quad4());
        assert_eq!(spec.to_config(), cfg);
        let bad = GTildeConfig { rho: RhoConfig::Named("cubic".into()), ..cfg };
        assert!(GTildeSpec::from_config(&bad).is_err());
    }
}
