use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gtilde::{GTildeConfig, GTildeSpec};
use crate::mpdpp::CheckSettings;
use crate::pde::{auto_steps, cfl_timestep, Grid};
use crate::systems::{build_system, ControlSystem, SystemConfig};

/// The configuration shipped with the crate, selected by `--config default`.
pub const DEFAULT_CONFIG: &str = include_str!("../../configs/example1.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    pub seed: u64,
    pub system: SystemConfig,
    pub gtilde: GTildeConfig,
    pub grid: GridConfig,
    pub mc: McConfig,
    pub checks: ChecksConfig,
}

fn default_output_dir() -> String {
    "out".into()
}

/// `N = "auto"` or a step count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Steps {
    Auto,
    Fixed(usize),
}

impl Serialize for Steps {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Steps::Auto => s.serialize_str("auto"),
            Steps::Fixed(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Steps {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(u64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(n) => Ok(Steps::Fixed(n as usize)),
            Raw::Word(w) if w == "auto" => Ok(Steps::Auto),
            Raw::Word(w) => Err(serde::de::Error::custom(format!("N must be an integer or \"auto\", got \"{w}\""))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_lo: f64,
    pub x_hi: f64,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: Steps,
    #[serde(rename = "T", default = "one")]
    pub horizon: f64,
    #[serde(default = "default_v_grid")]
    pub v_grid: usize,
    /// Time slices written to field CSVs (always including both ends).
    #[serde(default = "default_csv_slices")]
    pub csv_slices: usize,
}

fn one() -> f64 {
    1.0
}

fn default_v_grid() -> usize {
    101
}

fn default_csv_slices() -> usize {
    41
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub n_paths: usize,
    /// Overrides the top-level seed for path simulation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_adjoint_paths")]
    pub adjoint_paths: usize,
    #[serde(default = "one")]
    pub x0: f64,
}

fn default_adjoint_paths() -> usize {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    #[serde(default = "d_c1")]
    pub c1: f64,
    #[serde(default = "d_c2")]
    pub c2: f64,
    #[serde(default = "d_window")]
    pub window: f64,
    #[serde(default = "d_mp_floor")]
    pub mp_floor: f64,
    #[serde(default = "d_mp_scale")]
    pub mp_scale: f64,
    #[serde(default = "default_kbar_scenarios")]
    pub kbar_scenarios: usize,
    #[serde(default = "default_sigma_offset")]
    pub sigma_offset: f64,
    #[serde(default = "default_eps_list")]
    pub eps_list: Vec<f64>,
    #[serde(default = "default_jet_times")]
    pub jet_times: Vec<f64>,
    #[serde(default = "default_jet_points")]
    pub jet_points: Vec<f64>,
}

fn d_c1() -> f64 {
    CheckSettings::default().c1
}

fn d_c2() -> f64 {
    CheckSettings::default().c2
}

fn d_window() -> f64 {
    CheckSettings::default().window
}

fn d_mp_floor() -> f64 {
    CheckSettings::default().mp_floor
}

fn d_mp_scale() -> f64 {
    CheckSettings::default().mp_scale
}

impl ChecksConfig {
    pub fn settings(&self) -> CheckSettings {
        CheckSettings { c1: self.c1, c2: self.c2, window: self.window, mp_floor: self.mp_floor, mp_scale: self.mp_scale }
    }
}

fn default_kbar_scenarios() -> usize {
    20
}

fn default_sigma_offset() -> f64 {
    0.05
}

fn default_eps_list() -> Vec<f64> {
    vec![0.2, 0.1, 0.05]
}

fn default_jet_times() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}

fn default_jet_points() -> Vec<f64> {
    vec![0.5, 1.0, 1.5]
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a file, or the built-in configuration for `default`.
    pub fn load(path: &str) -> Result<Self> {
        if path == "default" {
            return Self::parse(DEFAULT_CONFIG);
        }
        let text = std::fs::read_to_string(Path::new(path))
            .map_err(|e| Error::Config(format!("cannot read config {path}: {e}")))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serialises")
    }

    /// SHA-256 of the canonical serialisation.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn path_seed(&self) -> u64 {
        self.mc.seed.unwrap_or(self.seed)
    }

    pub fn system(&self) -> Result<ControlSystem> {
        build_system(&self.system)
    }

    pub fn spec(&self) -> Result<GTildeSpec> {
        GTildeSpec::from_config(&self.gtilde)
    }

    /// The grid with `N` resolved from the CFL bound when set to `auto`.
    pub fn grid(&self, system: &ControlSystem, spec: &GTildeSpec) -> Result<Grid> {
        let g = &self.grid;
        let geometry = Grid::new(g.x_lo, g.x_hi, g.m, g.horizon, 1)?;
        let n = match g.n {
            Steps::Fixed(n) => n,
            Steps::Auto => auto_steps(g.horizon, cfl_timestep(system, &geometry, spec.bounds())),
        };
        geometry.with_steps(n)
    }
}
