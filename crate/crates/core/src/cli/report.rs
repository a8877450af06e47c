use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fbsde::AdjointSolution;
use crate::mpdpp::CheckReport;
use crate::pde::{Field, Grid};
use crate::scenarios::{PathBundle, ScenarioField};

/// A file to be written, relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub path: String,
    pub contents: Vec<u8>,
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Artifacts {
    items: Vec<Artifact>,
}

impl Artifacts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, path: impl Into<String>, contents: impl Into<Vec<u8>>) {
        self.items.push(Artifact { path: path.into(), contents: contents.into() });
    }

    pub fn add_json<T: Serialize>(&mut self, path: impl Into<String>, value: &T) {
        let mut text = serde_json::to_string_pretty(value).expect("report serialises");
        text.push('\n');
        self.add(path, text);
    }

    pub fn items(&self) -> &[Artifact] {
        &self.items
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
    pub config_hash: String,
    pub seed: u64,
    pub versions: Versions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Versions {
    pub gtilde_control: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes every artifact and `manifest.json` below `output_dir`.
pub fn write_report(artifacts: &Artifacts, output_dir: &Path, config_hash: &str, seed: u64) -> Result<Manifest> {
    let mut files = Vec::with_capacity(artifacts.items.len());
    for a in &artifacts.items {
        let target = output_dir.join(&a.path);
        if let Some(parent) = target.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&target, &a.contents)?;
        files.push(ManifestEntry { path: a.path.clone(), bytes: a.contents.len(), sha256: sha256_hex(&a.contents) });
    }
    let manifest = Manifest {
        files,
        config_hash: config_hash.to_string(),
        seed,
        versions: Versions { gtilde_control: env!("CARGO_PKG_VERSION").to_string() },
    };
    fs::create_dir_all(output_dir)?;
    let text = serde_json::to_string_pretty(&manifest).map_err(Error::from)? + "\n";
    fs::write(output_dir.join("manifest.json"), text)?;
    Ok(manifest)
}

/// Indices of `slices` time rows spread evenly over `0..=n`, both ends
/// included.
pub fn time_rows(n: usize, slices: usize) -> Vec<usize> {
    if slices < 2 || slices > n {
        return (0..=n).collect();
    }
    let mut rows: Vec<usize> = (0..slices).map(|j| (j * n + (slices - 1) / 2) / (slices - 1)).collect();
    rows.dedup();
    rows
}

fn num(out: &mut String, v: f64) {
    let _ = write!(out, "{v:.16e}");
}

/// `t,x,value` for the selected time rows.
pub fn field_csv(field: &Field, grid: &Grid, rows: &[usize]) -> String {
    let mut out = String::from("t,x,value\n");
    for &k in rows.iter().filter(|&&k| k < field.rows()) {
        for i in 0..field.cols() {
            num(&mut out, grid.t(k));
            out.push(',');
            num(&mut out, grid.x(i));
            out.push(',');
            num(&mut out, field.get(k, i));
            out.push('\n');
        }
    }
    out
}

/// `t,x,p,q` for the selected time rows.
pub fn adjoint_csv(adjoint: &AdjointSolution, grid: &Grid, rows: &[usize]) -> String {
    let mut out = String::from("t,x,p,q\n");
    for &k in rows {
        for i in 0..grid.m {
            for (j, v) in [grid.t(k), grid.x(i), adjoint.p.get(k, i), adjoint.q.get(k, i)].into_iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                num(&mut out, v);
            }
            out.push('\n');
        }
    }
    out
}

/// `k,i,gamma` for every step row of the scenario.
pub fn scenario_csv(scenario: &ScenarioField, rows: &[usize]) -> String {
    let field = scenario.field();
    let mut out = String::from("k,i,gamma\n");
    for &k in rows.iter().filter(|&&k| k < field.rows()) {
        for i in 0..field.cols() {
            let _ = write!(out, "{k},{i},");
            num(&mut out, field.get(k, i));
            out.push('\n');
        }
    }
    out
}

/// `path,k,t,x,qv,lambda` for the recorded trajectories.
pub fn paths_csv(paths: &PathBundle) -> String {
    let mut out = String::from("path,k,t,x,qv,lambda\n");
    for (p, tr) in paths.trajectories.iter().enumerate() {
        for (j, &x) in tr.x.iter().enumerate() {
            let k = paths.k_start + j;
            let _ = write!(out, "{p},{k},");
            num(&mut out, k as f64 * paths.dt);
            for v in [x, tr.qv[j], tr.lambda[j]] {
                out.push(',');
                num(&mut out, v);
            }
            out.push('\n');
        }
    }
    out
}

/// `name,pass,max_violation,tolerance`, one row per report in name order.
pub fn summary_csv(reports: &[CheckReport]) -> String {
    let mut sorted: Vec<&CheckReport> = reports.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let mut out = String::from("name,pass,max_violation,tolerance\n");
    for r in sorted {
        let _ = write!(out, "{},{},", r.name, r.pass);
        num(&mut out, r.max_violation());
        out.push(',');
        num(&mut out, r.tolerance);
        out.push('\n');
    }
    out
}
