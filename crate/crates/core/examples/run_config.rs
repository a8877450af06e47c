//! Drives the command-line runner in-process: the tree oracle, then the HJB
//! solve from the built-in configuration, with artifacts in a temp directory.

use gtilde_control::cli::run_experiment;

fn main() {
    let root = std::env::temp_dir().join("gtilde-control-example");
    for args in [vec!["tree-test", "--depth", "3"], vec!["solve-hjb", "--config", "default"]] {
        let out = root.join(args[0]);
        let out = out.to_str().expect("utf-8 temp path");
        let mut argv = vec!["gtilde-control"];
        argv.extend(args.iter().copied());
        argv.extend(["--out", out]);
        let status = run_experiment(argv);
        println!("{} -> exit {status}, manifest in {out}/manifest.json", args[0]);
    }
}
