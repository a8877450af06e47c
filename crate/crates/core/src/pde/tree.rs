//! Recombining trinomial tree for `Ẽ[f(B_T)]`.
//!
//! Each step moves `B` by `−Δ`, `0` or `+Δ` with `Δ = σ̄√(c₃ dt)`. A node
//! choosing variance `γ` uses `p± = γ dt / (2Δ²)` and `p₀ = 1 − γ dt / Δ²`,
//! so the increment has mean zero and variance `γ dt`, and pays `ρ(γ) dt`.

use crate::error::{Error, Result};
use crate::gtilde::GTildeSpec;

/// Default spread factor; any `c₃ ≥ 1` keeps `p₀ ≥ 0`.
pub const DEFAULT_C3: f64 = 1.5;
/// Upper bound on the number of assignments the oracle enumerates.
pub const ENUMERATION_LIMIT: u64 = 1 << 24;
pub const MAX_DEPTH: usize = 8;

#[derive(Debug, Clone, Copy)]
struct Branch {
    up: f64,
    mid: f64,
    down: f64,
    cost: f64,
}

fn branches(spec: &GTildeSpec, dt: f64, c3: f64) -> Result<(f64, Vec<Branch>)> {
    let sig2_high = spec.bounds().sig2_high;
    let delta2 = sig2_high * dt * c3;
    let mut out = Vec::with_capacity(spec.gamma_grid().len());
    for (&gamma, &rho) in spec.gamma_grid().iter().zip(spec.rho()) {
        let p0 = 1.0 - gamma * dt / delta2;
        if p0 < 0.0 || !p0.is_finite() {
            return Err(Error::InvalidProbability { p0, c3 });
        }
        let side = 0.5 * gamma * dt / delta2;
        out.push(Branch { up: side, mid: p0, down: side, cost: rho * dt });
    }
    Ok((delta2.sqrt(), out))
}

fn check_depth(depth: usize) -> Result<()> {
    if depth == 0 || depth > MAX_DEPTH {
        return Err(Error::Config(format!("tree depth must be in 1..={MAX_DEPTH}, got {depth}")));
    }
    Ok(())
}

/// Backward induction with `c₃ = 1.5`.
pub fn tree_expectation(spec: &GTildeSpec, depth: usize, dt: f64, payoff: &dyn Fn(f64) -> f64) -> Result<f64> {
    tree_expectation_with(spec, depth, dt, DEFAULT_C3, payoff)
}

pub fn tree_expectation_with(
    spec: &GTildeSpec,
    depth: usize,
    dt: f64,
    c3: f64,
    payoff: &dyn Fn(f64) -> f64,
) -> Result<f64> {
    check_depth(depth)?;
    let (delta, branches) = branches(spec, dt, c3)?;
    // Level j holds 2j + 1 nodes at positions −j..=j.
    let mut values: Vec<f64> = (0..=2 * depth).map(|p| payoff((p as f64 - depth as f64) * delta)).collect();
    for j in (0..depth).rev() {
        values = (0..=2 * j)
            .map(|p| {
                // Child positions p, p+1, p+2 on level j+1.
                branches
                    .iter()
                    .map(|b| b.down * values[p] + b.mid * values[p + 1] + b.up * values[p + 2] - b.cost)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
    }
    Ok(values[0])
}

/// Maximum over every node-wise assignment of variances of the penalised
/// expectation `E[f(B_T)] − Σ_nodes P(visit) ρ(γ) dt`.
pub fn brute_force_tree_expectation(
    spec: &GTildeSpec,
    depth: usize,
    dt: f64,
    payoff: &dyn Fn(f64) -> f64,
) -> Result<f64> {
    check_depth(depth)?;
    let (delta, branches) = branches(spec, dt, DEFAULT_C3)?;
    let choices = branches.len() as u64;
    let nodes = depth * depth;
    let count = (choices as f64).powi(nodes as i32);
    if count > ENUMERATION_LIMIT as f64 {
        return Err(Error::EnumerationTooLarge { count, limit: ENUMERATION_LIMIT });
    }
    let terminal: Vec<f64> = (0..=2 * depth).map(|p| payoff((p as f64 - depth as f64) * delta)).collect();
    let mut assignment = vec![0usize; nodes];
    let mut prob = vec![0.0; 2 * depth + 1];
    let mut next = vec![0.0; 2 * depth + 1];
    let mut best = f64::NEG_INFINITY;
    for code in 0..count as u64 {
        let mut c = code;
        for slot in assignment.iter_mut() {
            *slot = (c % choices) as usize;
            c /= choices;
        }
        prob[0] = 1.0;
        let mut penalty = 0.0;
        let mut offset = 0;
        for j in 0..depth {
            next[..2 * j + 3].iter_mut().for_each(|v| *v = 0.0);
            for p in 0..=2 * j {
                let b = branches[assignment[offset + p]];
                penalty += prob[p] * b.cost;
                next[p] += prob[p] * b.down;
                next[p + 1] += prob[p] * b.mid;
                next[p + 2] += prob[p] * b.up;
            }
            offset += 2 * j + 1;
            prob[..2 * j + 3].copy_from_slice(&next[..2 * j + 3]);
        }
        let expectation: f64 = prob.iter().zip(&terminal).map(|(p, f)| p * f).sum();
        best = best.max(expectation - penalty);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gtilde::GBounds;

    fn bounds() -> GBounds {
        GBounds::new(0.25, 1.0).unwrap()
    }

    #[test]
    fn one_step_variance_matching() {
        let spec = GTildeSpec::sublinear(bounds());
        let convex = tree_expectation(&spec, 1, 0.1, &|b| b * b).unwrap();
        assert!((convex - 0.1).abs() < 1e-15);
        let concave = tree_expectation(&spec, 1, 0.1, &|b| -b * b).unwrap();
        assert!((concave + 0.025).abs() < 1e-15);
    }

    #[test]
    fn matches_oracle_on_small_trees() {
        let small = GTildeSpec::quadratic(bounds(), vec![0.25, 0.5, 0.75, 1.0], 0.5).unwrap();
        let call = |b: f64| (b - 0.1).max(0.0);
        let a = tree_expectation(&small, 2, 0.1, &call).unwrap();
        let b = brute_force_tree_expectation(&small, 2, 0.1, &call).unwrap();
        assert!((a - b).abs() < 1e-12);
        let zero = GTildeSpec::new(bounds(), vec![0.25, 0.5, 0.75, 1.0], vec![0.0; 4]).unwrap();
        let a = tree_expectation(&zero, 3, 0.1, &f64::abs).unwrap();
        let b = brute_force_tree_expectation(&zero, 3, 0.1, &f64::abs).unwrap();
        assert!((a - b).abs() < 1e-12);
        let a = tree_expectation(&small, 1, 0.2, &|x| x.sin()).unwrap();
        let b = brute_force_tree_expectation(&small, 1, 0.2, &|x| x.sin()).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn constant_payoff() {
        let small = GTildeSpec::quadratic(bounds(), vec![0.25, 0.5, 0.75, 1.0], 0.5).unwrap();
        assert!((brute_force_tree_expectation(&small, 2, 0.1, &|_| 3.0).unwrap() - 3.0).abs() < 1e-14);
        assert!((tree_expectation(&small, 5, 0.1, &|_| 3.0).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn errors() {
        let spec = GTildeSpec::sublinear(bounds());
        assert!(matches!(
            tree_expectation_with(&spec, 1, 0.1, 0.5, &|b| b),
            Err(Error::InvalidProbability { .. })
        ));
        assert!(matches!(
            brute_force_tree_expectation(&spec, 3, 0.1, &|b| b),
            Err(Error::EnumerationTooLarge { .. })
        ));
        assert!(tree_expectation(&spec, 9, 0.1, &|b| b).is_err());
    }
}
