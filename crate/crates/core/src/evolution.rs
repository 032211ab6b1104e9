//! Adiabatic transport of the zero mode along the linear ramp
//! `theta(t) = omega t`, plus fidelity / phase analysis and disorder sweeps.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    sample_disorder, DisorderKind, DisorderRealization, LatticeSpec, ParametricHamiltonian, SiteIndex, StateVector,
};
use crate::rng::derive_seed;
use crate::spectral::{eigenvalues, zero_mode_gap};

/// Runs whose norm wanders further than this from 1 are rejected.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;
/// Amplitudes below this carry no meaningful phase.
pub const PHASE_THRESHOLD: f64 = 1e-6;
/// Default RK4 step. At 0.02 the norm loss of RK4 on the high-energy
/// bulk states under nearest-neighbour disorder (W = 0.2, slow ramps)
/// reaches a few 1e-6; 0.01 keeps it below 1e-7 there.
pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_SAMPLE_STRIDE: usize = 1000;

/// Linear ramp from `theta = 0` to `theta = pi` at speed `omega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RampSchedule {
    omega: f64,
    dt: f64,
}

impl RampSchedule {
    pub fn new(omega: f64, dt: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidArgument(format!("ramp speed omega must be positive and finite, got {omega}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidArgument(format!("integrator step dt must be positive and finite, got {dt}")));
        }
        let t_final = PI / omega;
        if !t_final.is_finite() {
            return Err(Error::InvalidArgument(format!("t_final = pi/omega is not finite for omega={omega}")));
        }
        Ok(Self { omega, dt })
    }

    pub fn with_default_step(omega: f64) -> Result<Self> {
        Self::new(omega, DEFAULT_DT)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_final(&self) -> f64 {
        PI / self.omega
    }

    /// Number of integrator steps; all but the last have length `dt`.
    pub fn steps(&self) -> usize {
        let t_final = self.t_final();
        let mut n = (t_final / self.dt).ceil().max(1.0) as usize;
        if n > 1 && t_final - (n - 1) as f64 * self.dt <= 1e-12 * self.dt {
            n -= 1;
        }
        n
    }

    /// `theta(t)`, pinned to exactly `pi` at `t_final`.
    pub fn theta(&self, t: f64) -> f64 {
        if t >= self.t_final() {
            PI
        } else {
            self.omega * t
        }
    }
}

/// Knobs that affect only diagnostics, never the propagated state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolveOptions {
    /// Store populations every this many steps (plus both endpoints);
    /// `0` keeps only the endpoints.
    pub sample_stride: usize,
    /// Diagonalize at every stored sample to track the smallest zero-mode gap.
    pub track_gap: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { sample_stride: DEFAULT_SAMPLE_STRIDE, track_gap: true }
    }
}

impl EvolveOptions {
    /// Endpoints only, no eigensolves: the cheapest setting for sweeps.
    pub fn minimal() -> Self {
        Self { sample_stride: 0, track_gap: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSample {
    pub t: f64,
    pub theta: f64,
    pub populations: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    pub final_state: StateVector,
    pub populations: Vec<PopulationSample>,
    pub fidelity: f64,
    /// Phase of each site relative to `a_1` at `t_final`; `None` where the
    /// amplitude (or that of `a_1`) is below [`PHASE_THRESHOLD`].
    pub phase_profile: Vec<Option<f64>>,
    /// Phase of each site relative to the input drive: the run starts with
    /// amplitude exactly `1` on the input port, so this is `arg(psi_k)`.
    /// Unlike [`Self::phase_profile`] it retains the accumulated dynamic
    /// phase of the transported mode.
    pub input_phases: Vec<Option<f64>>,
    pub norm_drift: f64,
    /// Smallest zero-mode gap over the stored samples; `None` when gap
    /// tracking was disabled.
    pub zero_energy_gap_min: Option<f64>,
    pub steps: usize,
}

/// The numeric zero mode at `theta = 0`. With `j2 = 0` the input port is
/// completely decoupled, so this is exactly the unit vector there.
pub fn initial_state(spec: &LatticeSpec) -> StateVector {
    StateVector::basis(spec.num_sites(), spec.input_port()).expect("input port lies on the lattice")
}

/// Ideal routed magnitudes: equal weight on every output port.
pub fn target_state(spec: &LatticeSpec) -> StateVector {
    let mut v = vec![0.0; spec.num_sites()];
    for p in spec.output_ports() {
        v[p.ordinal()] = 1.0;
    }
    StateVector::from_real(&v).expect("output port set is non-empty")
}

/// Phase-blind overlap `sum_k |final_k| |target_k|`.
pub fn fidelity(final_state: &StateVector, target: &StateVector) -> Result<f64> {
    if final_state.len() != target.len() {
        return Err(Error::DimensionMismatch { expected: target.len(), got: final_state.len() });
    }
    let f: f64 = final_state.amplitudes().iter().zip(target.amplitudes()).map(|(a, b)| a.norm() * b.norm()).sum();
    Ok(f.min(1.0))
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    let d = (x + PI).rem_euclid(TAU) - PI;
    if d <= -PI {
        PI
    } else {
        d
    }
}

/// Distance of a phase from the nearer of `0` and `pi`.
pub fn binary_phase_deviation(phase: f64) -> f64 {
    let d = wrap_phase(phase).abs();
    d.min(PI - d)
}

fn phases_against(state: &StateVector, reference: Complex64) -> Vec<Option<f64>> {
    state
        .amplitudes()
        .iter()
        .map(|z| (z.norm() >= PHASE_THRESHOLD).then(|| wrap_phase(z.arg() - reference.arg())))
        .collect()
}

/// `arg(psi_k) - arg(psi_reference)` wrapped to `(-pi, pi]`; `None` at sites
/// whose amplitude is below [`PHASE_THRESHOLD`].
pub fn phase_profile(state: &StateVector, reference: SiteIndex) -> Result<Vec<Option<f64>>> {
    if reference.ordinal() >= state.len() {
        return Err(Error::SiteOutOfRange { ordinal: reference.ordinal(), len: state.len() });
    }
    let r = state.amplitude(reference);
    if r.norm() < PHASE_THRESHOLD {
        return Err(Error::UndefinedPhaseReference(r.norm()));
    }
    Ok(phases_against(state, r))
}

struct Rk4 {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Rk4 {
    fn new(dim: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); dim];
        Self { k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z }
    }

    fn step(&mut self, ham: &ParametricHamiltonian, ramp: &RampSchedule, t: f64, h: f64, psi: &mut [Complex64]) {
        let half = 0.5 * h;
        ham.apply_generator(ramp.theta(t), psi, &mut self.k1);
        for ((x, p), k) in self.tmp.iter_mut().zip(psi.iter()).zip(&self.k1) {
            *x = p + k * half;
        }
        ham.apply_generator(ramp.theta(t + half), &self.tmp, &mut self.k2);
        for ((x, p), k) in self.tmp.iter_mut().zip(psi.iter()).zip(&self.k2) {
            *x = p + k * half;
        }
        ham.apply_generator(ramp.theta(t + half), &self.tmp, &mut self.k3);
        for ((x, p), k) in self.tmp.iter_mut().zip(psi.iter()).zip(&self.k3) {
            *x = p + k * h;
        }
        ham.apply_generator(ramp.theta(t + h), &self.tmp, &mut self.k4);
        let sixth = h / 6.0;
        for (i, p) in psi.iter_mut().enumerate() {
            *p += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * sixth;
        }
    }
}

/// Integrates `i d psi/dt = H(theta(t)) psi` from [`initial_state`] to
/// `theta = pi` with the default diagnostics.
pub fn evolve(
    spec: &LatticeSpec,
    ramp: &RampSchedule,
    disorder: Option<&DisorderRealization>,
) -> Result<EvolutionResult> {
    evolve_with(spec, ramp, disorder, &EvolveOptions::default())
}

pub fn evolve_with(
    spec: &LatticeSpec,
    ramp: &RampSchedule,
    disorder: Option<&DisorderRealization>,
    options: &EvolveOptions,
) -> Result<EvolutionResult> {
    let ham = ParametricHamiltonian::new(spec, disorder)?;
    let steps = ramp.steps();
    let dt = ramp.dt();
    let t_final = ramp.t_final();
    let mut psi: Vec<Complex64> = initial_state(spec).amplitudes().to_vec();
    let mut rk = Rk4::new(psi.len());
    let mut samples = Vec::new();
    let mut gap_min: Option<f64> = None;

    let mut record = |t: f64, psi: &[Complex64], samples: &mut Vec<PopulationSample>| -> Result<()> {
        let theta = ramp.theta(t);
        if options.track_gap {
            let e = eigenvalues(&ham.at(theta)).map_err(|e| Error::EigenAtTheta { theta, source: Box::new(e) })?;
            let (gap, _) = zero_mode_gap(e.as_slice().expect("contiguous"));
            gap_min = Some(gap_min.map_or(gap, |g| g.min(gap)));
        }
        samples.push(PopulationSample { t, theta, populations: psi.iter().map(|z| z.norm_sqr()).collect() });
        Ok(())
    };

    record(0.0, &psi, &mut samples)?;
    let mut drift = 0.0f64;
    for k in 0..steps {
        let t = k as f64 * dt;
        let last = k + 1 == steps;
        let h = if last { t_final - t } else { dt };
        rk.step(&ham, ramp, t, h, &mut psi);
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        drift = drift.max((norm - 1.0).abs());
        if drift.is_nan() || drift > NORM_DRIFT_LIMIT {
            return Err(Error::NormDrift { drift, limit: NORM_DRIFT_LIMIT, dt });
        }
        let t_next = if last { t_final } else { (k + 1) as f64 * dt };
        if last || (options.sample_stride > 0 && (k + 1) % options.sample_stride == 0) {
            record(t_next, &psi, &mut samples)?;
        }
    }

    let final_state = StateVector::from_raw_unchecked(psi.into_iter().collect());
    let fidelity = fidelity(&final_state, &target_state(spec))?;
    let phase_profile = phase_profile(&final_state, SiteIndex::a(1)).unwrap_or_else(|_| vec![None; final_state.len()]);
    let input_phases = phases_against(&final_state, Complex64::new(1.0, 0.0));
    Ok(EvolutionResult {
        final_state,
        populations: samples,
        fidelity,
        phase_profile,
        input_phases,
        norm_drift: drift,
        zero_energy_gap_min: gap_min,
        steps,
    })
}

/// The stored population samples as rows; the last row is the final state.
pub fn occupancy_trajectory(result: &EvolutionResult) -> &[PopulationSample] {
    &result.populations
}

/// One `(omega, W)` cell of a fidelity sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub log10_omega: f64,
    pub omega: f64,
    pub w: f64,
    pub mean_fidelity: f64,
    pub min_fidelity: f64,
    pub max_fidelity: f64,
    /// Per-realization fidelities in seed-index order.
    pub fidelities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRequest {
    pub omega_grid: Vec<f64>,
    pub w_grid: Vec<f64>,
    pub kind: DisorderKind,
    pub n_seeds: usize,
    pub base_seed: u64,
    pub dt: f64,
}

/// Seed of realization `seed_index`; shared by every cell of a sweep so
/// cells differ only in `omega` and `W` (common random numbers).
pub fn realization_seed(base_seed: u64, seed_index: usize) -> u64 {
    derive_seed(base_seed, seed_index as u64)
}

/// Mean/min/max fidelity over `n_seeds` realizations for every `(omega, W)`
/// pair, omega-major. Each `(cell, seed)` run is independent, so the table
/// is identical for any worker count.
pub fn sweep_fidelity(spec: &LatticeSpec, req: &SweepRequest) -> Result<Vec<SweepCell>> {
    if req.omega_grid.is_empty() || req.w_grid.is_empty() {
        return Err(Error::InvalidArgument("sweep grids must be non-empty".into()));
    }
    if req.n_seeds == 0 {
        return Err(Error::InvalidArgument("n_seeds must be at least 1".into()));
    }
    let ramps: Vec<RampSchedule> =
        req.omega_grid.iter().map(|&o| RampSchedule::new(o, req.dt)).collect::<Result<_>>()?;
    for &w in &req.w_grid {
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::InvalidDisorderStrength(w));
        }
    }
    let jobs: Vec<(usize, usize, usize)> = (0..ramps.len())
        .flat_map(|o| (0..req.w_grid.len()).flat_map(move |w| (0..req.n_seeds).map(move |s| (o, w, s))))
        .collect();
    let fids: Vec<f64> = jobs
        .par_iter()
        .map(|&(o, w, s)| {
            let omega = req.omega_grid[o];
            let width = req.w_grid[w];
            let wrap = |e: Error| Error::SweepCell { omega, w: width, seed_index: s, source: Box::new(e) };
            let d = sample_disorder(spec, req.kind, width, realization_seed(req.base_seed, s)).map_err(wrap)?;
            let r = evolve_with(spec, &ramps[o], Some(&d), &EvolveOptions::minimal()).map_err(wrap)?;
            Ok(r.fidelity)
        })
        .collect::<Result<_>>()?;
    Ok(fids
        .chunks(req.n_seeds)
        .enumerate()
        .map(|(cell, f)| {
            let omega = req.omega_grid[cell / req.w_grid.len()];
            SweepCell {
                log10_omega: omega.log10(),
                omega,
                w: req.w_grid[cell % req.w_grid.len()],
                mean_fidelity: f.iter().sum::<f64>() / f.len() as f64,
                min_fidelity: f.iter().copied().fold(f64::INFINITY, f64::min),
                max_fidelity: f.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                fidelities: f.to_vec(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::analytic_zero_mode;

    #[test]
    fn ramp_ends_exactly_at_pi() {
        let r = RampSchedule::new(0.3, 0.02).unwrap();
        let n = r.steps();
        assert!((n - 1) as f64 * 0.02 < r.t_final() && r.t_final() <= n as f64 * 0.02 + 1e-12);
        assert_eq!(r.theta(r.t_final()), PI);
        assert_eq!(r.theta(0.0), 0.0);
        // dt dividing t_final exactly does not add a zero-length step
        let r = RampSchedule::new(PI, 0.25).unwrap();
        assert_eq!(r.steps(), 4);
        assert!(RampSchedule::new(0.0, 0.02).is_err());
        assert!(RampSchedule::new(1e-320, 0.02).is_err());
        assert!(RampSchedule::new(1.0, f64::NAN).is_err());
    }

    #[test]
    fn initial_state_is_input_port_and_continuous() {
        let spec = LatticeSpec::base(6).unwrap();
        assert_eq!(initial_state(&spec).populations()[12], 1.0);
        let s10 = LatticeSpec::base(10).unwrap();
        assert_eq!(initial_state(&s10).populations()[20], 1.0);
        let near = analytic_zero_mode(&spec, 1e-6).unwrap();
        assert!(near.inner(&initial_state(&spec)).norm() >= 1.0 - 1e-6);
    }

    #[test]
    fn fidelity_examples() {
        let spec = LatticeSpec::base(6).unwrap();
        let t = target_state(&spec);
        assert!((fidelity(&t, &t).unwrap() - 1.0).abs() < 1e-15);
        let rotated = StateVector::new(
            t.amplitudes().iter().enumerate().map(|(k, z)| z * Complex64::from_polar(1.0, k as f64)).collect(),
        )
        .unwrap();
        assert!((fidelity(&rotated, &t).unwrap() - 1.0).abs() < 1e-15);
        let e1 = StateVector::basis(13, SiteIndex::a(1)).unwrap();
        assert!((fidelity(&e1, &t).unwrap() - 1.0 / 6f64.sqrt()).abs() < 1e-15);
        assert!(fidelity(&e1, &target_state(&LatticeSpec::base(2).unwrap())).is_err());
    }

    #[test]
    fn phase_profiles_of_targets() {
        let spec = LatticeSpec::base(6).unwrap();
        let routed = analytic_zero_mode(&spec, PI).unwrap();
        let p = phase_profile(&routed, SiteIndex::a(1)).unwrap();
        assert_eq!(p[0], Some(0.0));
        assert_eq!(p[2], None);
        for n in 3..=7 {
            assert_eq!(p[SiteIndex::a(n).ordinal()], Some(PI));
        }
        assert!(p.iter().skip(1).step_by(2).all(Option::is_none));
        let spun = phase_profile(&routed.rotated(1.234), SiteIndex::a(1)).unwrap();
        for (a, b) in p.iter().zip(&spun) {
            match (a, b) {
                (Some(x), Some(y)) => assert!(binary_phase_deviation(x - y) < 1e-12),
                (None, None) => {}
                _ => panic!("threshold mismatch"),
            }
        }
        let mut v = vec![0.0; 13];
        v[0] = 1.0;
        v[2] = 1.0;
        for n in 3..=7 {
            v[SiteIndex::a(n).ordinal()] = -1.0;
        }
        let p = phase_profile(&StateVector::from_real(&v).unwrap(), SiteIndex::a(1)).unwrap();
        assert_eq!(p[2], Some(0.0));
        assert_eq!(p[4], Some(PI));
        assert_eq!(
            phase_profile(&routed, SiteIndex::a(2)).unwrap_err(),
            Error::UndefinedPhaseReference(routed.amplitude(SiteIndex::a(2)).norm())
        );
    }

    #[test]
    fn wrapping() {
        assert_eq!(wrap_phase(-PI), PI);
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((binary_phase_deviation(PI - 0.1) - 0.1).abs() < 1e-12);
        assert!((binary_phase_deviation(-0.2) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn fast_clean_run_conserves_norm_and_samples_endpoints() {
        let spec = LatticeSpec::base(6).unwrap();
        let ramp = RampSchedule::with_default_step(0.05).unwrap();
        let r = evolve(&spec, &ramp, None).unwrap();
        assert!(r.norm_drift <= NORM_DRIFT_LIMIT);
        let first = &r.populations[0];
        assert_eq!(first.populations[12], 1.0);
        let last = r.populations.last().unwrap();
        assert_eq!(last.theta, PI);
        assert_eq!(last.populations, r.final_state.populations());
        for s in &r.populations {
            assert!((s.populations.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
        assert!(r.zero_energy_gap_min.unwrap() > 0.2);
        assert!((0.0..=1.0).contains(&r.fidelity));
    }

    #[test]
    fn oversized_step_trips_norm_gate() {
        let spec = LatticeSpec::base(6).unwrap();
        let ramp = RampSchedule::new(0.5, 0.4).unwrap();
        let err = evolve(&spec, &ramp, None).unwrap_err();
        assert!(matches!(err, Error::NormDrift { .. }), "{err}");
        assert!(err.is_numeric());
    }

    #[test]
    fn sweep_shape_and_w_zero_independence() {
        let spec = LatticeSpec::base(2).unwrap();
        let req = SweepRequest {
            omega_grid: vec![0.1, 0.05],
            w_grid: vec![0.0, 0.3],
            kind: DisorderKind::OnSite,
            n_seeds: 3,
            base_seed: 5,
            dt: DEFAULT_DT,
        };
        let cells = sweep_fidelity(&spec, &req).unwrap();
        assert_eq!(cells.len(), 4);
        assert_eq!((cells[1].omega, cells[1].w), (0.1, 0.3));
        for c in cells.iter().filter(|c| c.w == 0.0) {
            assert!(c.fidelities.iter().all(|&f| f == c.fidelities[0]));
        }
        let nn = sweep_fidelity(&spec, &SweepRequest { kind: DisorderKind::NearestNeighbor, ..req.clone() }).unwrap();
        assert_eq!(nn[0].fidelities, cells[0].fidelities);
        assert!(sweep_fidelity(&spec, &SweepRequest { n_seeds: 0, ..req }).is_err());
    }
}
