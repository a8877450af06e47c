mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use clap::Parser;
use common::config;
use gtilde_control::cli::*;
use gtilde_control::gtilde::{GBounds, GTildeSpec};
use gtilde_control::mpdpp::{random_scenarios, richardson, CheckReport, CheckSettings};
use gtilde_control::pde::Grid;
use proptest::prelude::*;

/// Example 1 on a coarse grid with few paths.
fn cheap_config() -> String {
    DEFAULT_CONFIG
        .replace("M = 601", "M = 121")
        .replace("v_grid = 101", "v_grid = 11")
        .replace("n_paths = 2000", "n_paths = 200")
        .replace("adjoint_paths = 100000", "adjoint_paths = 2000")
        .replace("kbar_scenarios = 20", "kbar_scenarios = 4")
        .replace("eps_list = [0.2, 0.1, 0.05]", "eps_list = [0.4, 0.2]")
}

fn run(dir: &Path, cfg: &Path, command: &str, seed: Option<u64>) -> (Outcome, BTreeMap<String, Vec<u8>>) {
    let mut args = vec!["gtilde-control".to_string(), command.into(), "--quiet".into()];
    args.extend(["--config".into(), cfg.to_str().unwrap().into(), "--out".into(), dir.to_str().unwrap().into()]);
    if let Some(s) = seed {
        args.extend(["--seed".into(), s.to_string()]);
    }
    let (outcome, out) = execute(&Cli::parse_from(args)).unwrap();
    let mut files = BTreeMap::new();
    for entry in walk(&out) {
        let rel = entry.strip_prefix(&out).unwrap().to_string_lossy().into_owned();
        files.insert(rel, fs::read(&entry).unwrap());
    }
    (outcome, files)
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(walk(&path));
        } else {
            out.push(path);
        }
    }
    out
}

#[test]
fn identical_seeds_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cheap.toml");
    fs::write(&cfg, cheap_config()).unwrap();
    for command in ["simulate", "adjoint", "check"] {
        let (first, a) = run(&dir.path().join(format!("{command}-a")), &cfg, command, None);
        let (_, b) = run(&dir.path().join(format!("{command}-b")), &cfg, command, None);
        assert!(a.contains_key("manifest.json"));
        assert_eq!(a, b, "{command} output differs between runs");
        if command == "check" {
            assert!(first.pass(), "{:?}", first.lines);
        }
    }
    let (_, base) = run(&dir.path().join("seed-a"), &cfg, "simulate", None);
    let (_, other) = run(&dir.path().join("seed-b"), &cfg, "simulate", Some(5));
    assert_ne!(base["paths.csv"], other["paths.csv"]);
    let manifest: serde_json::Value = serde_json::from_slice(&other["manifest.json"]).unwrap();
    assert_eq!(manifest["seed"], 5);
}

#[test]
fn seeds_beyond_toml_integers_are_rejected() {
    let args = ["gtilde-control", "tree-test", "--seed", &u64::MAX.to_string()];
    assert!(Cli::try_parse_from(args).is_err());
    assert_eq!(run_experiment(args), 2);
}

#[test]
fn manifest_hashes_match_the_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cheap.toml");
    fs::write(&cfg, cheap_config()).unwrap();
    let (_, files) = run(&dir.path().join("out"), &cfg, "solve-hjb", None);
    let manifest: serde_json::Value = serde_json::from_slice(&files["manifest.json"]).unwrap();
    let listed = manifest["files"].as_array().unwrap();
    assert_eq!(listed.len() + 1, files.len());
    for f in listed {
        let bytes = &files[f["path"].as_str().unwrap()];
        assert_eq!(f["bytes"].as_u64().unwrap() as usize, bytes.len());
        let digest: String = sha2_hex(bytes);
        assert_eq!(f["sha256"].as_str().unwrap(), digest);
    }
    let canonical = RunConfig::parse(&cheap_config()).unwrap();
    assert_eq!(manifest["config_hash"].as_str().unwrap(), canonical.hash());
}

fn sha2_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn steps() -> impl Strategy<Value = Steps> {
    prop_oneof![Just(Steps::Auto), (1usize..100_000).prop_map(Steps::Fixed)]
}

proptest! {
    #![proptest_config(config(1000, 0xc0f1))]

    #[test]
    fn config_round_trips(
        seed in 0..=i64::MAX as u64,
        mc_seed in proptest::option::of(0..=i64::MAX as u64),
        lo in -10.0f64..0.0,
        width in 0.1f64..20.0,
        m in 3usize..2000,
        n in steps(),
        paths in 1usize..1_000_000,
        x0 in -3.0f64..3.0,
        eps in proptest::collection::vec(1e-3f64..1.0, 1..5),
        c1 in 0.0f64..1.0,
    ) {
        let mut cfg = RunConfig::load("default").unwrap();
        cfg.seed = seed;
        cfg.mc.seed = mc_seed;
        cfg.grid.x_lo = lo;
        cfg.grid.x_hi = lo + width;
        cfg.grid.m = m;
        cfg.grid.n = n;
        cfg.mc.n_paths = paths;
        cfg.mc.x0 = x0;
        cfg.checks.eps_list = eps;
        cfg.checks.c1 = c1;
        let text = cfg.to_toml();
        let back = RunConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.hash(), cfg.hash());
        prop_assert_eq!(back.path_seed(), mc_seed.unwrap_or(seed));
    }

    #[test]
    fn report_passes_exactly_within_tolerance(v in -1.0f64..1.0, tol in 0.0f64..1.0) {
        let r = CheckReport::new("r", v, tol);
        prop_assert_eq!(r.pass, v <= tol);
        prop_assert_eq!(r.max_violation(), v);
    }

    #[test]
    fn tolerance_grows_with_mesh_and_error(m in 3usize..400, n in 1usize..400, se in 0.0f64..1.0, extra in 0.0f64..1.0) {
        let s = CheckSettings::default();
        let grid = Grid::new(-1.0, 1.0, m, 1.0, n).unwrap();
        let coarser = Grid::new(-1.0, 1.0, (m / 2).max(3), 1.0, (n / 2).max(1)).unwrap();
        prop_assert!(s.tolerance(&grid, se) <= s.tolerance(&grid, se + extra));
        prop_assert!(s.tolerance(&grid, se) <= s.tolerance(&coarser, se) + 1e-15);
    }

    #[test]
    fn richardson_is_exact_for_linear_dependence(a in -5.0f64..5.0, b in -5.0f64..5.0, e1 in 0.1f64..1.0, r in 0.1f64..0.9) {
        let eps = [e1, e1 * r];
        let values = [a + b * eps[0], a + b * eps[1]];
        prop_assert!((richardson(&eps, &values) - a).abs() <= 1e-9 * (1.0 + a.abs() + b.abs()));
    }

    #[test]
    fn random_scenarios_stay_in_bounds(lo in 0.05f64..1.0, w in 0.0f64..2.0, count in 1usize..6, seed in any::<u64>()) {
        let spec = GTildeSpec::sublinear(GBounds::new(lo, lo + w).unwrap());
        let grid = Grid::new(-1.0, 1.0, 13, 1.0, 9).unwrap();
        let a = random_scenarios(&grid, &spec, count, seed).unwrap();
        let b = random_scenarios(&grid, &spec, count, seed).unwrap();
        prop_assert_eq!(a.len(), count);
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.field(), y.field());
            for &g in x.field().values() {
                prop_assert!(g >= lo && g <= lo + w);
            }
        }
    }
}
