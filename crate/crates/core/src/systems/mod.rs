//! Controlled forward-backward systems.
//!
//! A system supplies the drift `h(t, x, v)` (against `d⟨B⟩`), diffusion
//! `σ(t, x, v)` (against `dB`), running cost `g(t, x, y, v)` (against `d⟨B⟩`),
//! terminal cost `Φ(x)`, their first partials, a growth constant `L` and the
//! control interval `U = [v_lo, v_hi]`.

pub mod expr;
mod l_ode;

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use expr::{Expr, Vars};
pub use l_ode::{solve_l_ode, LSolution};

/// Coefficients and their partial derivatives.
pub trait Coefficients: Send + Sync {
    fn h(&self, t: f64, x: f64, v: f64) -> f64;
    fn sigma(&self, t: f64, x: f64, v: f64) -> f64;
    fn g(&self, t: f64, x: f64, y: f64, v: f64) -> f64;
    fn phi(&self, x: f64) -> f64;

    fn h_x(&self, t: f64, x: f64, v: f64) -> f64;
    fn h_v(&self, t: f64, x: f64, v: f64) -> f64;
    fn sigma_x(&self, t: f64, x: f64, v: f64) -> f64;
    fn sigma_v(&self, t: f64, x: f64, v: f64) -> f64;
    fn g_x(&self, t: f64, x: f64, y: f64, v: f64) -> f64;
    fn g_y(&self, t: f64, x: f64, y: f64, v: f64) -> f64;
    fn g_v(&self, t: f64, x: f64, y: f64, v: f64) -> f64;
    fn phi_x(&self, x: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ControlInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Config(format!("control interval [{lo}, {hi}] is empty")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    /// `count` uniformly spaced controls including both endpoints. A
    /// degenerate interval yields a single point.
    pub fn grid(&self, count: usize) -> Vec<f64> {
        if self.lo == self.hi || count < 2 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (count - 1) as f64;
        (0..count)
            .map(|j| if j + 1 == count { self.hi } else { self.lo + step * j as f64 })
            .collect()
    }
}

/// Registry entries with known structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    /// `dX = X d⟨B⟩ + u dB`, `g = −(2y + v)`, `Φ = x²`, `U = [0, 1]`; value
    /// function `x² + l(t)`.
    Example1,
    /// `h = g = 0`, `σ = 1`, `Φ = x²`.
    GHeat,
    /// `h = g = 0`, `σ = 1`, `Φ = |x|`.
    Kink,
    Expression,
}

#[derive(Clone)]
pub struct ControlSystem {
    name: String,
    kind: SystemKind,
    coeffs: Arc<dyn Coefficients>,
    lipschitz: f64,
    control: ControlInterval,
    warnings: Vec<String>,
}

impl fmt::Debug for ControlSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlSystem")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("lipschitz", &self.lipschitz)
            .field("control", &self.control)
            .finish_non_exhaustive()
    }
}

impl ControlSystem {
    pub fn new(
        name: impl Into<String>,
        kind: SystemKind,
        coeffs: Arc<dyn Coefficients>,
        lipschitz: f64,
        control: ControlInterval,
    ) -> Self {
        let mut system = Self { name: name.into(), kind, coeffs, lipschitz, control, warnings: vec![] };
        system.warnings = system.check_growth_bounds(2000, 6.0);
        system
    }

    pub fn example1() -> Self {
        let control = ControlInterval { lo: 0.0, hi: 1.0 };
        Self::new("example1", SystemKind::Example1, Arc::new(Example1), 4.0, control)
    }

    pub fn gheat() -> Self {
        let control = ControlInterval { lo: 0.0, hi: 0.0 };
        Self::new("gheat", SystemKind::GHeat, Arc::new(UnitDiffusion { abs_payoff: false }), 2.0, control)
    }

    pub fn kink() -> Self {
        let control = ControlInterval { lo: 0.0, hi: 0.0 };
        Self::new("kink", SystemKind::Kink, Arc::new(UnitDiffusion { abs_payoff: true }), 1.0, control)
    }

    pub fn from_registry(name: &str) -> Option<Self> {
        match name {
            "example1" => Some(Self::example1()),
            "gheat" => Some(Self::gheat()),
            "kink" => Some(Self::kink()),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn with_lipschitz(mut self, lipschitz: f64) -> Self {
        self.lipschitz = lipschitz;
        self.warnings = self.check_growth_bounds(2000, 6.0);
        self
    }

    pub fn with_control(mut self, control: ControlInterval) -> Self {
        self.control = control;
        self.warnings = self.check_growth_bounds(2000, 6.0);
        self
    }

    pub fn control(&self) -> ControlInterval {
        self.control
    }

    pub fn coefficients(&self) -> &dyn Coefficients {
        self.coeffs.as_ref()
    }

    /// Growth-bound violations found when the system was built.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Samples `(t, x, y, v)` on `[0, 1] × [−r, r]² × U` and reports violations
    /// of the first-derivative bounds.
    pub fn check_growth_bounds(&self, samples: usize, radius: f64) -> Vec<String> {
        let c = self.coeffs.as_ref();
        let l = self.lipschitz;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut worst_first: f64 = 0.0;
        let mut worst_second: f64 = 0.0;
        for _ in 0..samples {
            let t = rng.random::<f64>();
            let x = radius * (2.0 * rng.random::<f64>() - 1.0);
            let y = radius * (2.0 * rng.random::<f64>() - 1.0);
            let v = self.control.lo + (self.control.hi - self.control.lo) * rng.random::<f64>();
            let first = c.h_x(t, x, v).abs()
                + c.h_v(t, x, v).abs()
                + c.sigma_x(t, x, v).abs()
                + c.sigma_v(t, x, v).abs()
                + c.g_y(t, x, y, v).abs();
            let second = (c.g_x(t, x, y, v).abs() + c.g_v(t, x, y, v).abs() + c.phi_x(x).abs())
                / (1.0 + x.abs() + v.abs());
            worst_first = worst_first.max(first);
            worst_second = worst_second.max(second);
        }
        let mut warnings = vec![];
        if worst_first > l * (1.0 + 1e-6) {
            warnings.push(format!(
                "|h_x|+|h_v|+|sigma_x|+|sigma_v|+|g_y| reaches {worst_first} > L = {l} on the sampled domain"
            ));
        }
        if worst_second > l * (1.0 + 1e-6) {
            warnings.push(format!(
                "(|g_x|+|g_v|+|phi_x|)/(1+|x|+|v|) reaches {worst_second} > L = {l} on the sampled domain"
            ));
        }
        warnings
    }

    #[inline]
    pub fn h(&self, t: f64, x: f64, v: f64) -> f64 {
        self.coeffs.h(t, x, v)
    }
    #[inline]
    pub fn sigma(&self, t: f64, x: f64, v: f64) -> f64 {
        self.coeffs.sigma(t, x, v)
    }
    #[inline]
    pub fn g(&self, t: f64, x: f64, y: f64, v: f64) -> f64 {
        self.coeffs.g(t, x, y, v)
    }
    #[inline]
    pub fn phi(&self, x: f64) -> f64 {
        self.coeffs.phi(x)
    }
    #[inline]
    pub fn phi_x(&self, x: f64) -> f64 {
        self.coeffs.phi_x(x)
    }

    /// `F(t, x, a₁, a₂, a₃, v) = σ²a₃ + 2h a₂ + 2g(t, x, a₁, v)`.
    #[inline]
    pub fn f_operator(&self, t: f64, x: f64, a1: f64, a2: f64, a3: f64, v: f64) -> f64 {
        let s = self.sigma(t, x, v);
        s * s * a3 + 2.0 * self.h(t, x, v) * a2 + 2.0 * self.g(t, x, a1, v)
    }
}

struct Example1;

impl Coefficients for Example1 {
    fn h(&self, _t: f64, x: f64, _v: f64) -> f64 {
        x
    }
    fn sigma(&self, _t: f64, _x: f64, v: f64) -> f64 {
        v
    }
    fn g(&self, _t: f64, _x: f64, y: f64, v: f64) -> f64 {
        -(2.0 * y + v)
    }
    fn phi(&self, x: f64) -> f64 {
        x * x
    }
    fn h_x(&self, _t: f64, _x: f64, _v: f64) -> f64 {
        1.0
    }
    fn h_v(&self, _t: f64, _x: f64, _v: f64) -> f64 {
        0.0
    }
    fn sigma_x(&self, _t: f64, _x: f64, _v: f64) -> f64 {
        0.0
    }
    fn sigma_v(&self, _t: f64, _x: f64, _v: f64) -> f64 {
        1.0
    }
    fn g_x(&self, _t: f64, _x: f64, _y: f64, _v: f64) -> f64 {
        0.0
    }
    fn g_y(&self, _t: f64, _x: f64, _y: f64, _v: f64) -> f64 {
        -2.0
    }
    fn g_v(&self, _t: f64, _x: f64, _y: f64, _v: f64) -> f64 {
        -1.0
    }
    fn phi_x(&self, x: f64) -> f64 {
        2.0 * x
    }
}

struct UnitDiffusion {
    abs_payoff: bool,
}

impl Coefficients for UnitDiffusion {
    fn h(&self, _t: f64, _x: f64, _v: f64) -> f64 {
        0.0
    }
    fn sigma(&self, _t: f64, _x: f64, _v: f64) -> f64 {
        1.0
    }
    fn g(&self, _t: f64, _x: f64, _y: f64, _v: f64) -> f64 {
        0.0
    }
    fn phi(&self, x: f64) -> f64 {
        if self.abs_payoff {
            x.abs()
        } else {
            x * x
        }
    }
    fn h_x(&self, _t: f64, _x: f64, _v: f64) -> f64 {
        0.0
    }
    fn h_v(&self, _t: f64, _x: f64, _v: f64) -> f64 {
        0.0
    }
    fn sigma_x(&self, _t: f64, _x: f64, _v: f64) -> f64 {
        0.0
    }
    fn sigma_v(&self, _t: f64, _x: f64, _v: f64) -> f64 {
        0.0
    }
    fn g_x(&self, _t: f64, _x: f64, _y: f64, _v: f64) -> f64 {
        0.0
    }
    fn g_y(&self, _t: f64, _x: f64, _y: f64, _v: f64) -> f64 {
        0.0
    }
    fn g_v(&self, _t: f64, _x: f64, _y: f64, _v: f64) -> f64 {
        0.0
    }
    fn phi_x(&self, x: f64) -> f64 {
        if self.abs_payoff {
            if x > 0.0 {
                1.0
            } else if x < 0.0 {
                -1.0
            } else {
                0.0
            }
        } else {
            2.0 * x
        }
    }
}

/// Central-difference step for expression systems without derivative
/// expressions.
pub const FD_STEP: f64 = 1e-5;

/// Coefficients given as expressions; missing derivatives are taken by
/// central differences with step [`FD_STEP`].
pub struct ExprCoefficients {
    h: Expr,
    sigma: Expr,
    g: Expr,
    phi: Expr,
    h_x: Option<Expr>,
    h_v: Option<Expr>,
    sigma_x: Option<Expr>,
    sigma_v: Option<Expr>,
    g_x: Option<Expr>,
    g_y: Option<Expr>,
    g_v: Option<Expr>,
    phi_x: Option<Expr>,
}

#[inline]
fn vars(t: f64, x: f64, y: f64, v: f64) -> Vars {
    Vars { t, x, y, v }
}

#[inline]
fn central(f: impl Fn(f64) -> f64, at: f64) -> f64 {
    (f(at + FD_STEP) - f(at - FD_STEP)) / (2.0 * FD_STEP)
}

impl ExprCoefficients {
    fn partial(
        explicit: &Option<Expr>,
        base: &Expr,
        point: Vars,
        bump: fn(Vars, f64) -> Vars,
        at: f64,
    ) -> f64 {
        match explicit {
            Some(e) => e.eval(&point),
            None => central(|s| base.eval(&bump(point, s)), at),
        }
    }
}

impl Coefficients for ExprCoefficients {
    fn h(&self, t: f64, x: f64, v: f64) -> f64 {
        self.h.eval(&vars(t, x, 0.0, v))
    }
    fn sigma(&self, t: f64, x: f64, v: f64) -> f64 {
        self.sigma.eval(&vars(t, x, 0.0, v))
    }
    fn g(&self, t: f64, x: f64, y: f64, v: f64) -> f64 {
        self.g.eval(&vars(t, x, y, v))
    }
    fn phi(&self, x: f64) -> f64 {
        self.phi.eval(&vars(0.0, x, 0.0, 0.0))
    }
    fn h_x(&self, t: f64, x: f64, v: f64) -> f64 {
        Self::partial(&self.h_x, &self.h, vars(t, x, 0.0, v), |p, s| Vars { x: s, ..p }, x)
    }
    fn h_v(&self, t: f64, x: f64, v: f64) -> f64 {
        Self::partial(&self.h_v, &self.h, vars(t, x, 0.0, v), |p, s| Vars { v: s, ..p }, v)
    }
    fn sigma_x(&self, t: f64, x: f64, v: f64) -> f64 {
        Self::partial(&self.sigma_x, &self.sigma, vars(t, x, 0.0, v), |p, s| Vars { x: s, ..p }, x)
    }
    fn sigma_v(&self, t: f64, x: f64, v: f64) -> f64 {
        Self::partial(&self.sigma_v, &self.sigma, vars(t, x, 0.0, v), |p, s| Vars { v: s, ..p }, v)
    }
    fn g_x(&self, t: f64, x: f64, y: f64, v: f64) -> f64 {
        Self::partial(&self.g_x, &self.g, vars(t, x, y, v), |p, s| Vars { x: s, ..p }, x)
    }
    fn g_y(&self, t: f64, x: f64, y: f64, v: f64) -> f64 {
        Self::partial(&self.g_y, &self.g, vars(t, x, y, v), |p, s| Vars { y: s, ..p }, y)
    }
    fn g_v(&self, t: f64, x: f64, y: f64, v: f64) -> f64 {
        Self::partial(&self.g_v, &self.g, vars(t, x, y, v), |p, s| Vars { v: s, ..p }, v)
    }
    fn phi_x(&self, x: f64) -> f64 {
        Self::partial(&self.phi_x, &self.phi, vars(0.0, x, 0.0, 0.0), |p, s| Vars { x: s, ..p }, x)
    }
}

/// The `[system]` configuration section.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_x: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_v: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_x: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_v: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_x: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_y: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_v: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_x: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_hi: Option<f64>,
    #[serde(default, rename = "L", skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    /// Constant control used by `solve-y`; the HJB argmin field otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_fixed: Option<f64>,
}

fn parse_optional(text: &Option<String>) -> Result<Option<Expr>> {
    text.as_deref().map(Expr::parse).transpose()
}

/// Builds a registry system by name, or an expression system from `h`,
/// `sigma`, `g` and `phi`. Growth-bound violations become warnings on the
/// returned system.
pub fn build_system(config: &SystemConfig) -> Result<ControlSystem> {
    let system = if let Some(name) = &config.name {
        let has_expressions = [&config.h, &config.sigma, &config.g, &config.phi]
            .iter()
            .any(|e| e.is_some());
        if has_expressions {
            return Err(Error::Config(format!(
                "system `{name}` is a registry entry; coefficient expressions are not allowed with `name`"
            )));
        }
        let mut system = ControlSystem::from_registry(name)
            .ok_or_else(|| Error::Config(format!("unknown registry system `{name}`")))?;
        if config.u_lo.is_some() || config.u_hi.is_some() {
            let current = system.control();
            let control = ControlInterval::new(
                config.u_lo.unwrap_or(current.lo),
                config.u_hi.unwrap_or(current.hi),
            )?;
            system = system.with_control(control);
        }
        if let Some(l) = config.lipschitz {
            system = system.with_lipschitz(l);
        }
        system
    } else {
        let required = |field: &Option<String>, key: &str| -> Result<Expr> {
            let text = field
                .as_deref()
                .ok_or_else(|| Error::Config(format!("[system] needs `name` or expression `{key}`")))?;
            Expr::parse(text)
        };
        let coeffs = ExprCoefficients {
            h: required(&config.h, "h")?,
            sigma: required(&config.sigma, "sigma")?,
            g: required(&config.g, "g")?,
            phi: required(&config.phi, "phi")?,
            h_x: parse_optional(&config.h_x)?,
            h_v: parse_optional(&config.h_v)?,
            sigma_x: parse_optional(&config.sigma_x)?,
            sigma_v: parse_optional(&config.sigma_v)?,
            g_x: parse_optional(&config.g_x)?,
            g_y: parse_optional(&config.g_y)?,
            g_v: parse_optional(&config.g_v)?,
            phi_x: parse_optional(&config.phi_x)?,
        };
        let control = ControlInterval::new(config.u_lo.unwrap_or(0.0), config.u_hi.unwrap_or(0.0))?;
        let lipschitz = config
            .lipschitz
            .ok_or_else(|| Error::Config("expression systems need `L`".into()))?;
        ControlSystem::new("expression", SystemKind::Expression, Arc::new(coeffs), lipschitz, control)
    };
    if let Some(u) = config.u_fixed {
        let control = system.control();
        if !control.contains(u) {
            return Err(Error::ControlOutOfRange { v: u, lo: control.lo, hi: control.hi });
        }
    }
    Ok(system)
}
