//! Eigendecomposition, zero-mode construction and gap scans.

use std::f64::consts::TAU;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::jacobi_eigh;
use crate::model::{
    chiral_defect, hoppings, Hamiltonian, LatticeSpec, ParametricHamiltonian, SiteIndex, StateVector, Variant,
};

/// Full eigendecomposition with eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Array1<f64>,
    /// Column `k` pairs with `eigenvalues[k]`.
    pub eigenvectors: Array2<Complex64>,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vector(&self, k: usize) -> StateVector {
        StateVector::new(self.eigenvectors.column(k).to_owned()).expect("eigenvectors are unit norm")
    }

    /// `||H v_k - E_k v_k||_2`.
    pub fn residual(&self, h: &Hamiltonian, k: usize) -> f64 {
        let v = self.eigenvectors.column(k);
        let hv = h.matrix().dot(&v);
        hv.iter().zip(v.iter()).map(|(a, b)| (a - b * self.eigenvalues[k]).norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_residual(&self, h: &Hamiltonian) -> f64 {
        (0..self.len()).map(|k| self.residual(h, k)).fold(0.0, f64::max)
    }

    /// `max |<v_i|v_j> - delta_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let v = &self.eigenvectors;
        let g = v.t().mapv(|z| z.conj()).dot(v);
        let mut worst = 0.0f64;
        for ((i, j), z) in g.indexed_iter() {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((z - want).norm());
        }
        worst
    }
}

pub fn eigh(h: &Hamiltonian) -> Result<EigenSystem> {
    let (eigenvalues, eigenvectors) = jacobi_eigh(h.matrix(), true)?;
    Ok(EigenSystem { eigenvalues, eigenvectors })
}

/// Eigenvalues only, ascending.
pub fn eigenvalues(h: &Hamiltonian) -> Result<Array1<f64>> {
    Ok(jacobi_eigh(h.matrix(), false)?.0)
}

/// Index of the eigenvalue closest to zero; ties go to the lowest index.
pub fn zero_mode_index(eigenvalues: &[f64]) -> usize {
    let mut best = 0;
    for (k, e) in eigenvalues.iter().enumerate() {
        if e.abs() < eigenvalues[best].abs() {
            best = k;
        }
    }
    best
}

/// The eigenvector nearest zero energy, gauge-fixed.
#[derive(Debug, Clone)]
pub struct ZeroMode {
    pub state: StateVector,
    pub energy: f64,
    pub index: usize,
    /// `max |Gamma H Gamma + H|` of the input. Anything above `1e-10`
    /// means the mode is only approximately pinned at zero energy.
    pub chiral_defect: f64,
}

impl ZeroMode {
    pub fn is_symmetry_protected(&self) -> bool {
        self.chiral_defect <= 1e-10
    }
}

pub fn zero_mode(h: &Hamiltonian) -> Result<ZeroMode> {
    let sys = eigh(h)?;
    let index = zero_mode_index(sys.eigenvalues.as_slice().expect("contiguous"));
    Ok(ZeroMode {
        state: sys.vector(index).gauge_fixed(),
        energy: sys.eigenvalues[index],
        index,
        chiral_defect: chiral_defect(h),
    })
}

/// Closed-form zero mode of the base-ports lattice.
///
/// b-sublattice amplitudes vanish and the a-sublattice obeys
/// `psi_a2 = lambda psi_a1`, `psi_a(n+1) = lambda psi_an - psi_a1` with the
/// localization index `lambda = -j1 / j2`. At `j2 = 0` the mode is the
/// isolated right-edge site; when `|lambda|^N` overflows the normalized
/// mode is that same site to double precision.
pub fn analytic_zero_mode(spec: &LatticeSpec, theta: f64) -> Result<StateVector> {
    if spec.variant() != Variant::BasePorts {
        return Err(Error::AnalyticVariant);
    }
    let l = spec.num_sites();
    let n = spec.n_cells();
    let edge = || StateVector::basis(l, spec.input_port()).map(|s| s.gauge_fixed());
    let h = hoppings(spec, theta);
    if h.j2 == 0.0 {
        return edge();
    }
    let lambda = -h.j1 / h.j2;
    let mut a = vec![0.0f64; n + 2];
    a[1] = 1.0;
    a[2] = lambda;
    for k in 2..=n {
        a[k + 1] = lambda * a[k] - a[1];
    }
    if a.iter().any(|x| !x.is_finite()) {
        return edge();
    }
    let mut amps = Array1::<Complex64>::zeros(l);
    for (cell, v) in a.iter().enumerate().skip(1) {
        amps[SiteIndex::a(cell).ordinal()] = Complex64::new(*v, 0.0);
    }
    match StateVector::new(amps) {
        Ok(s) => Ok(s.gauge_fixed()),
        // norm overflowed even though components are finite
        Err(_) => edge(),
    }
}

/// `count` uniform points on `[lo, hi]`, both ends included.
pub fn uniform_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (count - 1) as f64;
            (0..count).map(|k| if k + 1 == count { hi } else { lo + step * k as f64 }).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub theta: f64,
    pub eigenvalues: Vec<f64>,
    /// `|psi_k|^2` of the zero mode at this `theta`.
    pub zero_mode_density: Vec<f64>,
    pub zero_energy: f64,
}

/// Eigenvalues and zero-mode density at every grid point, in grid order.
pub fn spectrum_vs_theta(spec: &LatticeSpec, theta_grid: &[f64]) -> Result<Vec<SpectrumRow>> {
    if theta_grid.is_empty() {
        return Err(Error::InvalidArgument("theta grid is empty".into()));
    }
    let ham = ParametricHamiltonian::new(spec, None)?;
    theta_grid
        .par_iter()
        .map(|&theta| {
            let h = ham.at(theta);
            let sys = eigh(&h).map_err(|e| Error::EigenAtTheta { theta, source: Box::new(e) })?;
            let k = zero_mode_index(sys.eigenvalues.as_slice().expect("contiguous"));
            Ok(SpectrumRow {
                theta,
                eigenvalues: sys.eigenvalues.to_vec(),
                zero_mode_density: sys.vector(k).populations(),
                zero_energy: sys.eigenvalues[k],
            })
        })
        .collect()
}

/// Distance from the zero mode to the nearest other eigenvalue.
pub fn zero_mode_gap(eigenvalues: &[f64]) -> (f64, usize) {
    let k0 = zero_mode_index(eigenvalues);
    let e0 = eigenvalues[k0];
    let gap = eigenvalues
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != k0)
        .map(|(_, e)| (e - e0).abs())
        .fold(f64::INFINITY, f64::min);
    (gap, k0)
}

/// How to sample `theta` when searching for the minimal gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GapScan {
    /// Uniform points on `[0, 2pi]`, both ends included.
    pub grid_points: usize,
    /// Golden-section refinement around the coarse minimizer, down to this
    /// bracket width. `None` reports the best grid point.
    pub refine_to: Option<f64>,
}

impl Default for GapScan {
    fn default() -> Self {
        Self { grid_points: 4001, refine_to: Some(1e-6) }
    }
}

impl GapScan {
    pub fn coarse(grid_points: usize) -> Self {
        Self { grid_points, refine_to: None }
    }

    pub fn grid(&self) -> Vec<f64> {
        uniform_grid(0.0, TAU, self.grid_points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub delta_e: f64,
    pub theta_at_min: f64,
    pub zero_mode_index: usize,
}

fn gap_at(ham: &ParametricHamiltonian, theta: f64) -> Result<(f64, usize)> {
    let e = eigenvalues(&ham.at(theta)).map_err(|e| Error::EigenAtTheta { theta, source: Box::new(e) })?;
    Ok(zero_mode_gap(e.as_slice().expect("contiguous")))
}

/// Minimum over `theta` of the zero-mode gap.
pub fn minimal_gap(spec: &LatticeSpec, scan: &GapScan) -> Result<GapReport> {
    minimal_gap_on_grid(spec, &scan.grid(), scan.refine_to)
}

pub fn minimal_gap_on_grid(spec: &LatticeSpec, theta_grid: &[f64], refine_to: Option<f64>) -> Result<GapReport> {
    if theta_grid.is_empty() {
        return Err(Error::InvalidArgument("theta grid is empty".into()));
    }
    let ham = ParametricHamiltonian::new(spec, None)?;
    let gaps: Vec<(f64, usize)> = theta_grid.par_iter().map(|&t| gap_at(&ham, t)).collect::<Result<_>>()?;
    // first minimizer in grid order
    let mut best = 0;
    for (k, g) in gaps.iter().enumerate() {
        if g.0 < gaps[best].0 {
            best = k;
        }
    }
    let mut report = GapReport { delta_e: gaps[best].0, theta_at_min: theta_grid[best], zero_mode_index: gaps[best].1 };
    let Some(tol) = refine_to else {
        return Ok(report);
    };
    if theta_grid.len() < 2 {
        return Ok(report);
    }
    let lo = theta_grid[best.saturating_sub(1)];
    let hi = theta_grid[(best + 1).min(theta_grid.len() - 1)];
    let (theta, (gap, k0)) = golden_section(lo, hi, tol, |t| gap_at(&ham, t))?;
    if gap < report.delta_e {
        report = GapReport { delta_e: gap, theta_at_min: theta, zero_mode_index: k0 };
    }
    Ok(report)
}

fn golden_section<F>(mut a: f64, mut b: f64, tol: f64, f: F) -> Result<(f64, (f64, usize))>
where
    F: Fn(f64) -> Result<(f64, usize)>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc.0 <= fd.0 {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc.0 <= fd.0 { (c, fc) } else { (d, fd) })
}

/// Minimal gap for each placement `b_1 <-> a_m` of the extra hop.
pub fn gap_vs_location(spec_base: &LatticeSpec, m_list: &[usize], scan: &GapScan) -> Result<Vec<(usize, GapReport)>> {
    let specs: Vec<LatticeSpec> =
        m_list.iter().map(|&m| spec_base.with_variant(Variant::ExtraHop { m })).collect::<Result<_>>()?;
    m_list.iter().zip(&specs).map(|(&m, s)| Ok((m, minimal_gap(s, scan)?))).collect()
}

/// Minimal gap versus lattice size with the extra hop at `b_1 <-> a_N`.
pub fn gap_vs_size(l_list: &[usize], scan: &GapScan) -> Result<Vec<(usize, GapReport)>> {
    let specs: Vec<LatticeSpec> = l_list
        .iter()
        .map(|&l| {
            let n = LatticeSpec::from_sites(l, 1.0, Variant::BasePorts)?.n_cells();
            LatticeSpec::extra_hop(n, n)
        })
        .collect::<Result<_>>()?;
    l_list.iter().zip(&specs).map(|(&l, s)| Ok((l, minimal_gap(s, scan)?))).collect()
}

/// Adiabatic criterion `sqrt(omega) < delta_e`.
pub fn is_adiabatic(omega: f64, delta_e: f64) -> bool {
    omega.sqrt() < delta_e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_hamiltonian, sample_disorder, DisorderKind};
    use std::f64::consts::PI;

    /// Closed form of the a-sublattice recurrence, valid for `lambda != 1`:
    /// `psi_an / psi_a1 = -1 + lambda^(n-1) + (lambda^(n-2) - lambda) / (1 - lambda)`.
    fn closed_form(lambda: f64, n: i32) -> f64 {
        -1.0 + lambda.powi(n - 1) + (lambda.powi(n - 2) - lambda) / (1.0 - lambda)
    }

    #[test]
    fn theta_zero_spectrum_of_n2() {
        let h = build_hamiltonian(&LatticeSpec::base(2).unwrap(), 0.0, None).unwrap();
        let e = eigenvalues(&h).unwrap();
        let want = [-2.0, -2.0, 0.0, 2.0, 2.0];
        for (a, b) in e.iter().zip(want) {
            assert!((a - b).abs() < 1e-14, "{e:?}");
        }
    }

    #[test]
    fn generic_spectrum_is_symmetric_with_small_residuals() {
        let h = build_hamiltonian(&LatticeSpec::base(6).unwrap(), 1.0, None).unwrap();
        let sys = eigh(&h).unwrap();
        for k in 0..13 {
            assert!((sys.eigenvalues[k] + sys.eigenvalues[12 - k]).abs() < 1e-10);
        }
        assert!(sys.max_residual(&h) <= 1e-10 * h.max_abs().max(1.0));
        assert!(sys.orthonormality_defect() < 1e-10);
    }

    #[test]
    fn zero_mode_at_theta_zero_is_right_edge() {
        let h = build_hamiltonian(&LatticeSpec::base(6).unwrap(), 0.0, None).unwrap();
        let zm = zero_mode(&h).unwrap();
        assert_eq!(zm.energy, 0.0);
        let p = zm.state.populations();
        assert_eq!(p[12], 1.0);
        assert!(p[..12].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn zero_mode_at_theta_pi_matches_routed_profile() {
        let h = build_hamiltonian(&LatticeSpec::base(6).unwrap(), PI, None).unwrap();
        let zm = zero_mode(&h).unwrap();
        let amp = 1.0 / 6f64.sqrt();
        let a = |n| zm.state.amplitude(SiteIndex::a(n));
        assert!((a(1) - amp).norm() < 1e-12);
        assert!(a(2).norm() < 1e-12);
        for n in 3..=7 {
            assert!((a(n) + amp).norm() < 1e-12);
        }
        assert!(zm.state.b_weight() < 1e-24);
    }

    #[test]
    fn zero_mode_component_ratios_at_two_thirds_pi() {
        let theta = 2.0 * PI / 3.0;
        let h = build_hamiltonian(&LatticeSpec::base(6).unwrap(), theta, None).unwrap();
        let zm = zero_mode(&h).unwrap();
        let a = |n| zm.state.amplitude(SiteIndex::a(n));
        assert!(((a(2) / a(1)).re + 1.0 / 3.0).abs() < 1e-10);
        assert!(((a(3) / a(1)).re + 8.0 / 9.0).abs() < 1e-10);
        let analytic = analytic_zero_mode(&LatticeSpec::base(6).unwrap(), theta).unwrap();
        assert!(analytic.inner(&zm.state).norm() >= 1.0 - 1e-10);
    }

    #[test]
    fn analytic_limits() {
        let spec = LatticeSpec::base(6).unwrap();
        let edge = analytic_zero_mode(&spec, 0.0).unwrap();
        assert_eq!(edge.populations()[12], 1.0);
        let routed = analytic_zero_mode(&spec, PI).unwrap();
        let amp = 1.0 / 6f64.sqrt();
        let want = [amp, 0.0, 0.0, 0.0, -amp, 0.0, -amp, 0.0, -amp, 0.0, -amp, 0.0, -amp];
        for (z, w) in routed.amplitudes().iter().zip(want) {
            assert!((z.re - w).abs() < 1e-15 && z.im == 0.0);
        }
        // tiny j2: lambda^N overflows for a long chain
        let long = LatticeSpec::base(200).unwrap();
        let s = analytic_zero_mode(&long, 1e-9).unwrap();
        assert!((s.populations()[400] - 1.0).abs() < 1e-12);
        assert_eq!(
            analytic_zero_mode(&LatticeSpec::extra_hop(6, 4).unwrap(), 1.0).unwrap_err(),
            Error::AnalyticVariant
        );
    }

    #[test]
    fn closed_form_agrees_with_recurrence() {
        for k in 0..20 {
            let lambda = 4.0 * crate::rng::centered_uniform(11, k);
            if (lambda - 1.0).abs() < 1e-3 {
                continue;
            }
            let mut a = vec![0.0, 1.0, lambda];
            for n in 2..=10 {
                let next = lambda * a[n] - a[1];
                a.push(next);
            }
            for (n, &an) in a.iter().enumerate().skip(3) {
                let cf = closed_form(lambda, n as i32);
                assert!((cf - an).abs() <= 1e-9 * an.abs().max(1.0), "lambda={lambda} n={n}");
            }
        }
    }

    #[test]
    fn zero_mode_tracks_nearest_level_under_on_site_disorder() {
        let spec = LatticeSpec::base(6).unwrap();
        let d = sample_disorder(&spec, DisorderKind::OnSite, 0.2, 3).unwrap();
        let h = build_hamiltonian(&spec, 2.0, Some(&d)).unwrap();
        let zm = zero_mode(&h).unwrap();
        assert!(!zm.is_symmetry_protected());
        let e = eigenvalues(&h).unwrap();
        assert!(e.iter().all(|x| x.abs() >= zm.energy.abs()));
    }

    #[test]
    fn spectrum_rows_follow_grid_order() {
        let spec = LatticeSpec::base(6).unwrap();
        let rows = spectrum_vs_theta(&spec, &[0.0, PI]).unwrap();
        assert_eq!(rows[0].theta, 0.0);
        assert_eq!(rows[0].zero_energy, 0.0);
        assert_eq!(rows[0].zero_mode_density[12], 1.0);
        assert!(rows[1].zero_energy.abs() < 1e-12);
        assert!((rows[1].zero_mode_density[0] - 1.0 / 6.0).abs() < 1e-12);
        for r in &rows {
            let n = r.eigenvalues.len();
            for k in 0..n {
                assert!((r.eigenvalues[k] + r.eigenvalues[n - 1 - k]).abs() < 1e-10);
            }
        }
        assert!(spectrum_vs_theta(&spec, &[]).is_err());
    }

    #[test]
    fn grid_endpoints_are_exact() {
        let g = uniform_grid(0.0, TAU, 4001);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[4000], TAU);
        assert_eq!(g.len(), 4001);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, (v, _)) = golden_section(0.0, 2.0, 1e-8, |t| Ok(((t - 0.7).powi(2), 0))).unwrap();
        assert!((x - 0.7).abs() < 1e-7);
        assert!(v < 1e-13);
    }

    #[test]
    fn gap_vs_location_rejects_out_of_range() {
        let spec = LatticeSpec::base(6).unwrap();
        assert!(gap_vs_location(&spec, &[2], &GapScan::coarse(11)).is_err());
        assert!(gap_vs_size(&[11], &GapScan::coarse(11)).is_err());
    }

    #[test]
    fn adiabatic_predicate() {
        assert!(is_adiabatic(1e-4, 0.3932));
        assert!(!is_adiabatic(0.2, 0.3932));
    }
}
