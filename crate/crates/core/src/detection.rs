//! Driven-dissipative read-out: steady-state resonator amplitudes under a
//! coherent drive, and their dependence on the drive detuning.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::lu_solve;
use crate::model::{build_hamiltonian, LatticeSpec, SiteIndex};

/// Relative residual every steady-state solve must meet.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

/// Drive amplitude per site, uniform resonator detuning and per-site decay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveConfig {
    amplitudes: Vec<f64>,
    detuning: f64,
    kappa: Vec<f64>,
}

impl DriveConfig {
    pub fn new(amplitudes: Vec<f64>, detuning: f64, kappa: Vec<f64>) -> Result<Self> {
        if amplitudes.len() != kappa.len() {
            return Err(Error::DimensionMismatch { expected: amplitudes.len(), got: kappa.len() });
        }
        if let Some(k) = kappa.iter().find(|k| !(k.is_finite() && **k > 0.0)) {
            return Err(Error::InvalidArgument(format!("decay rates must be positive and finite, got {k}")));
        }
        if !detuning.is_finite() || amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidArgument("drive amplitudes and detuning must be finite".into()));
        }
        Ok(Self { amplitudes, detuning, kappa })
    }

    /// Drive of strength `amplitude` on one site, uniform decay `kappa`.
    pub fn single_site(len: usize, site: SiteIndex, amplitude: f64, detuning: f64, kappa: f64) -> Result<Self> {
        if site.ordinal() >= len {
            return Err(Error::SiteOutOfRange { ordinal: site.ordinal(), len });
        }
        let mut amplitudes = vec![0.0; len];
        amplitudes[site.ordinal()] = amplitude;
        Self::new(amplitudes, detuning, vec![kappa; len])
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn detuning(&self) -> f64 {
        self.detuning
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn with_detuning(&self, detuning: f64) -> Result<Self> {
        Self::new(self.amplitudes.clone(), detuning, self.kappa.clone())
    }

    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        Self::new(self.amplitudes.iter().map(|a| a * alpha).collect(), self.detuning, self.kappa.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    /// Mean resonator amplitudes `<rho_n>`.
    pub means: Array1<Complex64>,
    /// `|<rho_n>|^2`.
    pub populations: Vec<f64>,
    /// `||A x + drive|| / ||drive||` of the solve (absolute when the drive is zero).
    pub residual: f64,
}

impl SteadyState {
    pub fn total_population(&self) -> f64 {
        self.populations.iter().sum()
    }
}

/// Solves `(Delta I + M - i K/2) r = -drive` with `M` the lattice
/// Hamiltonian at `theta`.
pub fn steady_state(spec: &LatticeSpec, theta: f64, drive: &DriveConfig) -> Result<SteadyState> {
    let m = build_hamiltonian(spec, theta, None)?;
    let l = m.dim();
    if drive.amplitudes.len() != l {
        return Err(Error::DimensionMismatch { expected: l, got: drive.amplitudes.len() });
    }
    let mut a: Array2<Complex64> = m.into_matrix();
    for k in 0..l {
        a[[k, k]] += Complex64::new(drive.detuning, -0.5 * drive.kappa[k]);
    }
    let rhs: Array1<Complex64> = drive.amplitudes.iter().map(|&x| Complex64::new(-x, 0.0)).collect();
    let drive_norm = drive.amplitudes.iter().map(|x| x * x).sum::<f64>().sqrt();
    let means = lu_solve(&a, &rhs).ok_or(Error::SingularSystem(f64::INFINITY))?;
    let r = a.dot(&means) - &rhs;
    let abs_residual = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let residual = if drive_norm > 0.0 { abs_residual / drive_norm } else { abs_residual };
    if residual.is_nan() || residual > SOLVE_TOLERANCE {
        return Err(Error::SingularSystem(residual));
    }
    let populations = means.iter().map(|z| z.norm_sqr()).collect();
    Ok(SteadyState { means, populations, residual })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub detuning: f64,
    /// `|<rho_n>|` per site.
    pub magnitudes: Vec<f64>,
    /// `|<rho_n>|^2` per site.
    pub populations: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSpectrum {
    pub rows: Vec<SpectrumPoint>,
    /// Row with the largest total population (first one on ties).
    pub resonance_index: usize,
    /// Smallest set of sites holding at least 80% of the resonance row's
    /// population, most populated first.
    pub dominant_sites: Vec<SiteIndex>,
}

impl DetectionSpectrum {
    pub fn resonance(&self) -> &SpectrumPoint {
        &self.rows[self.resonance_index]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub drive_site: SiteIndex,
    pub amplitude: f64,
    pub kappa: f64,
}

/// Steady state at every detuning of `detuning_grid`, driving one site.
pub fn detection_spectrum(
    spec: &LatticeSpec,
    theta: f64,
    probe: &ProbeSpec,
    detuning_grid: &[f64],
) -> Result<DetectionSpectrum> {
    if detuning_grid.is_empty() {
        return Err(Error::InvalidArgument("detuning grid is empty".into()));
    }
    let base = DriveConfig::single_site(spec.num_sites(), probe.drive_site, probe.amplitude, 0.0, probe.kappa)?;
    let rows: Vec<SpectrumPoint> = detuning_grid
        .par_iter()
        .map(|&d| {
            let s = steady_state(spec, theta, &base.with_detuning(d)?)?;
            Ok(SpectrumPoint {
                detuning: d,
                magnitudes: s.means.iter().map(|z| z.norm()).collect(),
                populations: s.populations,
            })
        })
        .collect::<Result<_>>()?;
    let totals: Vec<f64> = rows.iter().map(|r| r.populations.iter().sum()).collect();
    let mut resonance_index = 0;
    for (k, t) in totals.iter().enumerate() {
        if *t > totals[resonance_index] {
            resonance_index = k;
        }
    }
    let dominant_sites = dominant_sites(&rows[resonance_index].populations, 0.8);
    Ok(DetectionSpectrum { rows, resonance_index, dominant_sites })
}

/// Fewest sites, most populated first, whose share reaches `fraction`.
pub fn dominant_sites(populations: &[f64], fraction: f64) -> Vec<SiteIndex> {
    let total: f64 = populations.iter().sum();
    let mut order: Vec<usize> = (0..populations.len()).collect();
    order.sort_by(|&a, &b| populations[b].total_cmp(&populations[a]));
    let mut acc = 0.0;
    let mut out = Vec::new();
    for k in order {
        if total <= 0.0 || acc >= fraction * total {
            break;
        }
        acc += populations[k];
        out.push(SiteIndex::from_ordinal(k));
    }
    out
}
