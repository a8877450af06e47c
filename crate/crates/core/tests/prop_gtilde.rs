use gtilde_control::gtilde::*;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

fn config() -> Config {
    Config { cases: 1000, rng_seed: RngSeed::Fixed(0x6a11), failure_persistence: None, ..Config::default() }
}

/// Random bounds, a strictly increasing grid of 2 to 9 points spanning them
/// and a convex penalty `a(γ − c)² + b|γ − d|` shifted to minimum zero.
fn spec_strategy() -> impl Strategy<Value = GTildeSpec> {
    (0.05f64..1.0, 0.01f64..2.0, 2usize..10)
        .prop_flat_map(|(lo, width, n)| {
            (Just(lo), Just(lo + width), proptest::collection::vec(0.1f64..1.0, n - 1), (0.0f64..4.0, 0.0f64..2.0), (0.0f64..2.0, 0.0f64..2.0))
        })
        .prop_map(|(lo, hi, gaps, (a, c), (b, d))| {
            let total: f64 = gaps.iter().sum();
            let mut grid = vec![lo];
            let mut acc = 0.0;
            for g in &gaps[..gaps.len() - 1] {
                acc += g;
                grid.push(lo + (hi - lo) * acc / total);
            }
            grid.push(hi);
            let raw: Vec<f64> = grid.iter().map(|&g| a * (g - c).powi(2) + b * (g - d).abs()).collect();
            let floor = raw.iter().copied().fold(f64::INFINITY, f64::min);
            let rho = raw.iter().map(|r| r - floor).collect();
            GTildeSpec::new(GBounds::new(lo, hi).unwrap(), grid, rho).unwrap()
        })
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn domination_holds(spec in spec_strategy(), a3 in -10.0f64..10.0, a4 in -10.0f64..10.0) {
        let report = check_domination(&spec, &[(a3, a4)]);
        prop_assert_eq!(report.value_at_zero, 0.0);
        prop_assert!(report.monotonicity_violation <= 1e-12);
        prop_assert!(report.domination_violation <= 1e-12, "{:?}", report);
    }

    #[test]
    fn g_is_positively_homogeneous(lo in 0.05f64..1.0, w in 0.0f64..2.0, a in -10.0f64..10.0, lambda in 0.0f64..20.0) {
        let b = GBounds::new(lo, lo + w).unwrap();
        let lhs = g_eval(&b, lambda * a);
        let rhs = lambda * g_eval(&b, a);
        prop_assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * rhs.abs().max(1e-300));
    }

    #[test]
    fn convex_and_nondecreasing(spec in spec_strategy(), a in -10.0f64..10.0, b in -10.0f64..10.0, w in 0.0f64..=1.0) {
        let (fa, fb) = (gtilde_eval(&spec, a), gtilde_eval(&spec, b));
        let mid = gtilde_eval(&spec, w * a + (1.0 - w) * b);
        prop_assert!(mid <= w * fa + (1.0 - w) * fb + 1e-12);
        if a <= b {
            prop_assert!(fa <= fb + 1e-12);
        }
    }

    #[test]
    fn derivative_bounds_and_subgradient(spec in spec_strategy(), a in -10.0f64..10.0, h in 0.0f64..5.0, d in 0.0f64..5.0) {
        let b = spec.bounds();
        let da = gtilde_derivative(&spec, a);
        prop_assert!(0.5 * b.sig2_low <= da && da <= 0.5 * b.sig2_high);
        prop_assert!(da <= gtilde_derivative(&spec, a + d));
        // G̃(a + h) − G̃(a) ≥ G̃′(a) h for h > 0.
        prop_assert!(gtilde_eval(&spec, a + h) - gtilde_eval(&spec, a) >= da * h - 1e-12);
    }
}

#[test]
fn shifted_penalty_is_reported() {
    let b = GBounds::new(0.25, 1.0).unwrap();
    let spec = GTildeSpec::new_unchecked(b, vec![0.25, 1.0], vec![0.1, 0.3]);
    let report = check_domination(&spec, &[(1.0, -1.0)]);
    assert!((report.value_at_zero + 0.1).abs() < 1e-15);
    assert!((report.zero_violation - 0.1).abs() < 1e-15);
}
