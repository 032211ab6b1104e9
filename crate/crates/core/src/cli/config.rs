//! Run configuration: one JSON document with a block per command.

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::evolution::{DEFAULT_DT, DEFAULT_SAMPLE_STRIDE};
use crate::model::{DisorderKind, LatticeSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_lattice")]
    pub lattice: LatticeSpec,
    /// Base seed for every random draw of the run.
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; `None` defers to the environment, then to the
    /// number of available processors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub spectrum: SpectrumBlock,
    #[serde(default)]
    pub zeromode: ZeroModeBlock,
    #[serde(default)]
    pub gap_scan: GapScanBlock,
    #[serde(default)]
    pub evolve: EvolveBlock,
    #[serde(default)]
    pub sweep: SweepBlock,
    #[serde(default)]
    pub detect: DetectBlock,
}

fn default_lattice() -> LatticeSpec {
    LatticeSpec::base(6).expect("six cells is a valid lattice")
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumBlock {
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_points: usize,
}

impl Default for SpectrumBlock {
    fn default() -> Self {
        Self { theta_min: 0.0, theta_max: TAU, theta_points: 629 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZeroModeBlock {
    pub theta: f64,
}

impl Default for ZeroModeBlock {
    fn default() -> Self {
        Self { theta: PI }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapScanMode {
    /// Vary the extra-hop target `m` on the configured lattice.
    Location,
    /// Vary the lattice size with the extra hop at `b_1 <-> a_N`.
    Size,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GapScanBlock {
    pub mode: GapScanMode,
    pub m_list: Vec<usize>,
    pub l_list: Vec<usize>,
    pub grid_points: usize,
    /// Golden-section bracket width; `null` disables refinement.
    pub refine_to: Option<f64>,
}

impl Default for GapScanBlock {
    fn default() -> Self {
        Self {
            mode: GapScanMode::Location,
            m_list: vec![3, 4, 5, 6, 7],
            l_list: vec![9, 13, 17, 21],
            grid_points: 4001,
            refine_to: Some(1e-6),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderBlock {
    pub kind: DisorderKind,
    pub w: f64,
    /// Realization seed; defaults to the run's base seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveBlock {
    pub omega: f64,
    pub dt: f64,
    pub sample_stride: usize,
    pub track_gap: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disorder: Option<DisorderBlock>,
}

impl Default for EvolveBlock {
    fn default() -> Self {
        Self { omega: 1e-4, dt: DEFAULT_DT, sample_stride: DEFAULT_SAMPLE_STRIDE, track_gap: true, disorder: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepBlock {
    pub omega_grid: Vec<f64>,
    pub w_grid: Vec<f64>,
    pub kind: DisorderKind,
    pub n_seeds: usize,
    pub dt: f64,
    /// Upper bound on `cells x seeds`; larger sweeps are rejected.
    pub max_runs: usize,
}

impl Default for SweepBlock {
    fn default() -> Self {
        Self {
            omega_grid: vec![1e-3, 1e-4],
            w_grid: vec![0.1, 0.4],
            kind: DisorderKind::NearestNeighbor,
            n_seeds: 5,
            dt: DEFAULT_DT,
            max_runs: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectBlock {
    pub theta: f64,
    /// Site label such as `a7`; defaults to the input port `a_(N+1)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drive_site: Option<String>,
    pub amplitude: f64,
    pub kappa: f64,
    pub detuning_min: f64,
    pub detuning_max: f64,
    pub detuning_points: usize,
}

impl Default for DetectBlock {
    fn default() -> Self {
        Self {
            theta: 0.0,
            drive_site: None,
            amplitude: 1.0,
            kappa: 0.1,
            detuning_min: -3.0,
            detuning_max: 3.0,
            detuning_points: 601,
        }
    }
}

/// Why a config could not be loaded.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },
}

impl RunConfig {
    pub fn from_json(path: &Path, text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(path, &text)
    }

    /// Canonical JSON of the resolved configuration.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
