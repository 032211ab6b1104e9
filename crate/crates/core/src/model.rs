//! Extended SSH lattice with long-range hopping.
//!
//! Sites are ordered `[a1, b1, a2, b2, ..., aN, bN, a(N+1)]`, so `a_n` sits
//! at ordinal `2(n-1)` and `b_n` at `2n-1`. The clean Hamiltonian couples
//!
//! - `a_n <-> b_n` with the intracell amplitude `j1 = J + cos(theta)`,
//! - `a_(n+1) <-> b_n` with the intercell amplitude `j2 = J - cos(theta)`,
//! - `a_1 <-> b_n` for `n = 2..=N` with the long-range amplitude `j2`,
//! - and, for [`Variant::ExtraHop`], one additional `b_1 <-> a_m` hop of
//!   amplitude `j2`.
//!
//! Every bond joins the two sublattices, which is what gives the model its
//! chiral symmetry. All energies are in units of `J`.

use std::f64::consts::TAU;
use std::fmt;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Which long-range hops the lattice carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Variant {
    /// Long-range hops `a_1 <-> b_n` only; `N` output ports.
    BasePorts,
    /// Adds a `b_1 <-> a_m` hop; `N+1` output ports.
    ExtraHop { m: usize },
}

/// Geometry and couplings of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLatticeSpec")]
pub struct LatticeSpec {
    n_cells: usize,
    j: f64,
    variant: Variant,
}

#[derive(Deserialize)]
struct RawLatticeSpec {
    n_cells: usize,
    #[serde(default = "default_j")]
    j: f64,
    #[serde(default = "default_variant")]
    variant: Variant,
}

fn default_j() -> f64 {
    1.0
}

fn default_variant() -> Variant {
    Variant::BasePorts
}

impl TryFrom<RawLatticeSpec> for LatticeSpec {
    type Error = Error;

    fn try_from(raw: RawLatticeSpec) -> Result<Self> {
        LatticeSpec::new(raw.n_cells, raw.j, raw.variant)
    }
}

impl LatticeSpec {
    pub fn new(n_cells: usize, j: f64, variant: Variant) -> Result<Self> {
        if n_cells < 2 || !n_cells.is_multiple_of(2) {
            return Err(Error::InvalidCellCount(n_cells));
        }
        if !(j.is_finite() && j > 0.0) {
            return Err(Error::InvalidCoupling(j));
        }
        if let Variant::ExtraHop { m } = variant {
            if !(3..=n_cells + 1).contains(&m) {
                return Err(Error::HopOutOfRange { m, max: n_cells + 1 });
            }
        }
        Ok(Self { n_cells, j, variant })
    }

    /// Base-ports lattice with `J = 1`.
    pub fn base(n_cells: usize) -> Result<Self> {
        Self::new(n_cells, 1.0, Variant::BasePorts)
    }

    /// Extra-hop lattice (`b_1 <-> a_m`) with `J = 1`.
    pub fn extra_hop(n_cells: usize, m: usize) -> Result<Self> {
        Self::new(n_cells, 1.0, Variant::ExtraHop { m })
    }

    /// Lattice from its total site count `L = 2N + 1`.
    pub fn from_sites(l: usize, j: f64, variant: Variant) -> Result<Self> {
        if l.is_multiple_of(2) || l < 5 || !((l - 1) / 2).is_multiple_of(2) {
            return Err(Error::InvalidSize(l));
        }
        Self::new((l - 1) / 2, j, variant)
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn with_variant(&self, variant: Variant) -> Result<Self> {
        Self::new(self.n_cells, self.j, variant)
    }

    /// Total number of sites, `2N + 1`.
    pub fn num_sites(&self) -> usize {
        2 * self.n_cells + 1
    }

    /// Every bond of the lattice in a fixed canonical order.
    pub fn bonds(&self) -> Vec<Bond> {
        let n = self.n_cells;
        let mut bonds = Vec::with_capacity(3 * n);
        for c in 1..=n {
            bonds.push(Bond::new(BondKind::Intracell, SiteIndex::a(c), SiteIndex::b(c)));
        }
        for c in 1..=n {
            bonds.push(Bond::new(BondKind::Intercell, SiteIndex::a(c + 1), SiteIndex::b(c)));
        }
        for c in 2..=n {
            bonds.push(Bond::new(BondKind::LongRange, SiteIndex::a(1), SiteIndex::b(c)));
        }
        if let Variant::ExtraHop { m } = self.variant {
            bonds.push(Bond::new(BondKind::ExtraHop, SiteIndex::a(m), SiteIndex::b(1)));
        }
        bonds
    }

    /// The a-type sites that carry equal weight in the routed (theta = pi)
    /// zero mode: `a_1, a_3..a_(N+1)` for base ports, all `a` sites with
    /// the extra hop.
    pub fn output_ports(&self) -> Vec<SiteIndex> {
        let n = self.n_cells;
        match self.variant {
            Variant::BasePorts => std::iter::once(1).chain(3..=n + 1).map(SiteIndex::a).collect(),
            Variant::ExtraHop { .. } => (1..=n + 1).map(SiteIndex::a).collect(),
        }
    }

    /// The site the routed state starts from, `a_(N+1)`.
    pub fn input_port(&self) -> SiteIndex {
        SiteIndex::a(self.n_cells + 1)
    }

    pub fn check_site(&self, site: SiteIndex) -> Result<()> {
        if site.ordinal() < self.num_sites() {
            Ok(())
        } else {
            Err(Error::SiteOutOfRange { ordinal: site.ordinal(), len: self.num_sites() })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sublattice {
    A,
    B,
}

/// Position in the fixed site ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SiteIndex(usize);

impl SiteIndex {
    pub fn from_ordinal(ordinal: usize) -> Self {
        Self(ordinal)
    }

    /// `a_n`, with `n` starting at 1.
    pub fn a(cell: usize) -> Self {
        assert!(cell >= 1, "cells are numbered from 1");
        Self(2 * (cell - 1))
    }

    /// `b_n`, with `n` starting at 1.
    pub fn b(cell: usize) -> Self {
        assert!(cell >= 1, "cells are numbered from 1");
        Self(2 * cell - 1)
    }

    pub fn ordinal(self) -> usize {
        self.0
    }

    pub fn sublattice(self) -> Sublattice {
        if self.0.is_multiple_of(2) {
            Sublattice::A
        } else {
            Sublattice::B
        }
    }

    /// 1-based cell index.
    pub fn cell(self) -> usize {
        match self.sublattice() {
            Sublattice::A => self.0 / 2 + 1,
            Sublattice::B => self.0.div_ceil(2),
        }
    }
}

impl fmt::Display for SiteIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.sublattice() {
            Sublattice::A => 'a',
            Sublattice::B => 'b',
        };
        write!(f, "{s}{}", self.cell())
    }
}

impl std::str::FromStr for SiteIndex {
    type Err = Error;

    /// Parses labels such as `a7` or `b1`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad site label {s:?}"));
        let mut chars = s.chars();
        let sub = chars.next().ok_or_else(bad)?;
        let cell: usize = chars.as_str().parse().map_err(|_| bad())?;
        if cell == 0 {
            return Err(bad());
        }
        match sub {
            'a' | 'A' => Ok(SiteIndex::a(cell)),
            'b' | 'B' => Ok(SiteIndex::b(cell)),
            _ => Err(bad()),
        }
    }
}

/// Intracell and intercell/long-range amplitudes at a given `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hoppings {
    pub j1: f64,
    pub j2: f64,
    /// `theta` reduced to `[0, 2pi)`; reporting only.
    pub theta: f64,
}

pub fn hoppings(spec: &LatticeSpec, theta: f64) -> Hoppings {
    let c = theta.cos();
    Hoppings { j1: spec.j + c, j2: spec.j - c, theta: theta.rem_euclid(TAU) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BondKind {
    Intracell,
    Intercell,
    LongRange,
    ExtraHop,
}

/// A hop between an a-type and a b-type site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bond {
    pub kind: BondKind,
    pub a: SiteIndex,
    pub b: SiteIndex,
}

impl Bond {
    fn new(kind: BondKind, a: SiteIndex, b: SiteIndex) -> Self {
        debug_assert_eq!(a.sublattice(), Sublattice::A);
        debug_assert_eq!(b.sublattice(), Sublattice::B);
        Self { kind, a, b }
    }

    pub fn amplitude(&self, h: &Hoppings) -> f64 {
        match self.kind {
            BondKind::Intracell => h.j1,
            BondKind::Intercell | BondKind::LongRange | BondKind::ExtraHop => h.j2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisorderKind {
    OnSite,
    NearestNeighbor,
    LongRange,
}

impl std::str::FromStr for DisorderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "on_site" | "onsite" => Ok(Self::OnSite),
            "nearest_neighbor" | "nn" => Ok(Self::NearestNeighbor),
            "long_range" | "lr" => Ok(Self::LongRange),
            _ => Err(Error::InvalidArgument(format!("unknown disorder kind {s:?}"))),
        }
    }
}

/// What a single disorder draw perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisorderTerm {
    Site(SiteIndex),
    Bond(Bond),
}

/// The term set a disorder kind acts on, in canonical order.
pub fn disorder_terms(spec: &LatticeSpec, kind: DisorderKind) -> Vec<DisorderTerm> {
    match kind {
        DisorderKind::OnSite => (0..spec.num_sites()).map(|k| DisorderTerm::Site(SiteIndex(k))).collect(),
        DisorderKind::NearestNeighbor => spec
            .bonds()
            .into_iter()
            .filter(|b| matches!(b.kind, BondKind::Intracell | BondKind::Intercell))
            .map(DisorderTerm::Bond)
            .collect(),
        DisorderKind::LongRange => spec
            .bonds()
            .into_iter()
            .filter(|b| matches!(b.kind, BondKind::LongRange | BondKind::ExtraHop))
            .map(DisorderTerm::Bond)
            .collect(),
    }
}

/// One quenched draw of a disorder kind: each term gets `W * delta` with
/// `delta` uniform in `[-0.5, 0.5]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    pub kind: DisorderKind,
    pub w: f64,
    pub seed: u64,
    pub values: Vec<(DisorderTerm, f64)>,
}

impl DisorderRealization {
    /// Largest `|W * delta|` over all terms.
    pub fn max_shift(&self) -> f64 {
        self.values.iter().map(|(_, d)| (self.w * d).abs()).fold(0.0, f64::max)
    }
}

/// Draws one realization. Term `k` of the kind's term set receives the
/// counter-based draw keyed by `(seed, k)`.
pub fn sample_disorder(spec: &LatticeSpec, kind: DisorderKind, w: f64, seed: u64) -> Result<DisorderRealization> {
    if !(w.is_finite() && w >= 0.0) {
        return Err(Error::InvalidDisorderStrength(w));
    }
    let values = disorder_terms(spec, kind)
        .into_iter()
        .enumerate()
        .map(|(k, term)| (term, rng::centered_uniform(seed, k as u64)))
        .collect();
    Ok(DisorderRealization { kind, w, seed, values })
}

fn check_realization(spec: &LatticeSpec, disorder: &DisorderRealization) -> Result<()> {
    if !(disorder.w.is_finite() && disorder.w >= 0.0) {
        return Err(Error::InvalidDisorderStrength(disorder.w));
    }
    let expected = disorder_terms(spec, disorder.kind);
    if expected.len() != disorder.values.len() {
        return Err(Error::DisorderMismatch(format!(
            "{:?} expects {} terms, realization has {}",
            disorder.kind,
            expected.len(),
            disorder.values.len()
        )));
    }
    for (k, (want, (got, delta))) in expected.iter().zip(&disorder.values).enumerate() {
        if want != got {
            return Err(Error::DisorderMismatch(format!("term {k}: expected {want:?}, got {got:?}")));
        }
        if !(-0.5..=0.5).contains(delta) {
            return Err(Error::DisorderMismatch(format!("term {k}: delta {delta} outside [-0.5, 0.5]")));
        }
    }
    Ok(())
}

/// One matrix element as an affine function of the two hopping amplitudes:
/// `value = c1 * j1 + c2 * j2 + c0`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    row: usize,
    col: usize,
    c1: f64,
    c2: f64,
    c0: f64,
}

impl Entry {
    #[inline]
    fn value(&self, h: &Hoppings) -> f64 {
        self.c1 * h.j1 + self.c2 * h.j2 + self.c0
    }
}

/// The lattice Hamiltonian as a function of `theta`, with any disorder
/// folded in as constant offsets.
///
/// Only `j1` and `j2` depend on `theta`, so the structure is built once and
/// re-evaluated cheaply at every integrator stage.
#[derive(Debug, Clone)]
pub struct ParametricHamiltonian {
    spec: LatticeSpec,
    diagonal: Vec<f64>,
    /// Upper-triangle off-diagonal entries, one per distinct bond.
    offdiag: Vec<Entry>,
}

impl ParametricHamiltonian {
    pub fn new(spec: &LatticeSpec, disorder: Option<&DisorderRealization>) -> Result<Self> {
        let spec = LatticeSpec::new(spec.n_cells, spec.j, spec.variant)?;
        let l = spec.num_sites();
        let mut diagonal = vec![0.0; l];
        let mut offdiag: Vec<Entry> = spec
            .bonds()
            .iter()
            .map(|b| {
                let (row, col) = ordered(b.a.ordinal(), b.b.ordinal());
                let (c1, c2) = match b.kind {
                    BondKind::Intracell => (1.0, 0.0),
                    _ => (0.0, 1.0),
                };
                Entry { row, col, c1, c2, c0: 0.0 }
            })
            .collect();
        if let Some(d) = disorder {
            check_realization(&spec, d)?;
            for (term, delta) in &d.values {
                let shift = d.w * delta;
                match term {
                    DisorderTerm::Site(s) => diagonal[s.ordinal()] += shift,
                    DisorderTerm::Bond(b) => {
                        let (row, col) = ordered(b.a.ordinal(), b.b.ordinal());
                        let e = offdiag
                            .iter_mut()
                            .find(|e| e.row == row && e.col == col)
                            .expect("checked realization only names lattice bonds");
                        e.c0 += shift;
                    }
                }
            }
        }
        Ok(Self { spec, diagonal, offdiag })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    /// Dense matrix at `theta`.
    pub fn at(&self, theta: f64) -> Hamiltonian {
        let h = hoppings(&self.spec, theta);
        let l = self.dim();
        let mut m = Array2::<Complex64>::zeros((l, l));
        for (k, d) in self.diagonal.iter().enumerate() {
            m[[k, k]] = Complex64::new(*d, 0.0);
        }
        for e in &self.offdiag {
            let v = Complex64::new(e.value(&h), 0.0);
            m[[e.row, e.col]] += v;
            m[[e.col, e.row]] += v.conj();
        }
        Hamiltonian { matrix: m }
    }

    /// `out = -i H(theta) psi`, the Schrödinger right-hand side.
    pub fn apply_generator(&self, theta: f64, psi: &[Complex64], out: &mut [Complex64]) {
        let h = hoppings(&self.spec, theta);
        for (o, (d, p)) in out.iter_mut().zip(self.diagonal.iter().zip(psi)) {
            *o = p * *d;
        }
        for e in &self.offdiag {
            let v = e.value(&h);
            out[e.row] += psi[e.col] * v;
            out[e.col] += psi[e.row] * v;
        }
        for o in out.iter_mut() {
            // multiply by -i
            *o = Complex64::new(o.im, -o.re);
        }
    }
}

fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Dense Hermitian matrix over the lattice sites.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    matrix: Array2<Complex64>,
}

impl Hamiltonian {
    /// Wraps an arbitrary square matrix. Hermiticity is checked against
    /// `1e-12 * max(1, max|H_ij|)`.
    pub fn from_matrix(matrix: Array2<Complex64>) -> Result<Self> {
        let (r, c) = matrix.dim();
        if r != c {
            return Err(Error::DimensionMismatch { expected: r, got: c });
        }
        let h = Self { matrix };
        let tol = 1e-12 * h.max_abs().max(1.0);
        if h.hermiticity_defect() > tol {
            return Err(Error::InvalidArgument(format!(
                "matrix is not Hermitian (defect {:e})",
                h.hermiticity_defect()
            )));
        }
        Ok(h)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<Complex64> {
        self.matrix
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |H - H^dagger|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.matrix[[i, j]] - self.matrix[[j, i]].conj()).norm());
            }
        }
        worst
    }

    /// Nonzero upper-triangle off-diagonal entries.
    pub fn bond_count(&self) -> usize {
        let n = self.dim();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.matrix[[i, j]] != Complex64::new(0.0, 0.0))
            .count()
    }
}

/// Assembles `H(theta)`, optionally with a quenched disorder realization.
pub fn build_hamiltonian(
    spec: &LatticeSpec,
    theta: f64,
    disorder: Option<&DisorderRealization>,
) -> Result<Hamiltonian> {
    Ok(ParametricHamiltonian::new(spec, disorder)?.at(theta))
}

/// `Gamma = diag(+1, -1, +1, ...)`: +1 on a sites, -1 on b sites.
pub fn chiral_operator(l: usize) -> Result<Array2<f64>> {
    if l < 5 || l.is_multiple_of(2) {
        return Err(Error::InvalidChiralDimension(l));
    }
    Ok(Array2::from_diag(&chiral_signs(l)))
}

fn chiral_signs(l: usize) -> Array1<f64> {
    Array1::from_iter((0..l).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }))
}

/// `max |Gamma H Gamma + H|`; zero exactly when `H` anticommutes with the
/// chiral operator.
pub fn chiral_defect(h: &Hamiltonian) -> f64 {
    let s = chiral_signs(h.dim());
    let m = h.matrix();
    let mut worst = 0.0f64;
    for ((i, j), z) in m.indexed_iter() {
        worst = worst.max((z * (s[i] * s[j]) + z).norm());
    }
    worst
}

/// Dispersive-regime effective hopping `-g^2 / delta_q` mediated by a
/// coupler qubit.
///
/// The circuit realizes the lattice by choosing
/// `-g1^2/dq1 = j1` for intracell couplers and `-g2^2/dq2 = -g3^2/dq3 = j2`
/// for intercell and long-range couplers, while the embedded-qubit
/// self-energy shifts cancel the coupler-induced diagonal terms:
/// `ga1^2/dqa1 = j1 + N j2` on `a_1`, `gb1^2/dqb1 = gan^2/dqan = j1 + j2`,
/// and `gbn^2/dqbn = j1 + 2 j2`. With the resonator detuning taken as the
/// energy zero this leaves exactly the zero-diagonal lattice model.
pub fn effective_hopping_from_circuit(g: f64, delta_q: f64) -> Result<f64> {
    if delta_q == 0.0 {
        return Err(Error::ZeroDetuning);
    }
    Ok(-g * g / delta_q)
}

/// Normalized complex amplitudes over the lattice sites.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Array1<Complex64>,
    gauge: Gauge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    Raw,
    /// Global phase chosen so the largest component is real and positive.
    /// Components within a relative `1e-8` of the largest count as tied;
    /// the lowest ordinal wins.
    FixedPositiveAtMax,
}

impl StateVector {
    /// Normalizes `amplitudes`; fails on a zero or non-finite vector.
    pub fn new(amplitudes: Array1<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidArgument(format!("cannot normalize vector of norm {norm}")));
        }
        Ok(Self { amplitudes: amplitudes.mapv(|z| z / norm), gauge: Gauge::Raw })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Unit vector on one site.
    pub fn basis(len: usize, site: SiteIndex) -> Result<Self> {
        if site.ordinal() >= len {
            return Err(Error::SiteOutOfRange { ordinal: site.ordinal(), len });
        }
        let mut v = Array1::zeros(len);
        v[site.ordinal()] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes: v, gauge: Gauge::Raw })
    }

    /// Wraps amplitudes that are already normalized (e.g. an integrator
    /// state whose norm drift is tracked separately).
    pub(crate) fn from_raw_unchecked(amplitudes: Array1<Complex64>) -> Self {
        Self { amplitudes, gauge: Gauge::Raw }
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &Array1<Complex64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, site: SiteIndex) -> Complex64 {
        self.amplitudes[site.ordinal()]
    }

    pub fn gauge(&self) -> Gauge {
        self.gauge
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.iter().zip(other.amplitudes.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    /// Total weight on the b sublattice.
    pub fn b_weight(&self) -> f64 {
        self.amplitudes.iter().skip(1).step_by(2).map(|z| z.norm_sqr()).sum()
    }

    /// Applies [`Gauge::FixedPositiveAtMax`].
    pub fn gauge_fixed(&self) -> StateVector {
        let max = self.amplitudes.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return self.clone();
        }
        let pivot = self.amplitudes.iter().find(|z| z.norm() >= max * (1.0 - 1e-8)).copied().expect("max is attained");
        let rot = pivot.conj() / pivot.norm();
        let mut amplitudes = self.amplitudes.mapv(|z| z * rot);
        // pin the pivot exactly onto the positive real axis
        if let Some(z) = amplitudes.iter_mut().find(|z| z.norm() >= max * (1.0 - 1e-8)) {
            *z = Complex64::new(z.norm(), 0.0);
        }
        StateVector { amplitudes, gauge: Gauge::FixedPositiveAtMax }
    }

    /// Multiplies by a global phase `e^{i phi}`.
    pub fn rotated(&self, phi: f64) -> StateVector {
        let r = Complex64::from_polar(1.0, phi);
        StateVector { amplitudes: self.amplitudes.mapv(|z| z * r), gauge: Gauge::Raw }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn entry(h: &Hamiltonian, i: SiteIndex, j: SiteIndex) -> f64 {
        let z = h.matrix()[[i.ordinal(), j.ordinal()]];
        assert_eq!(z.im, 0.0);
        z.re
    }

    fn nonzero_upper(h: &Hamiltonian) -> Vec<(usize, usize, f64)> {
        let n = h.dim();
        let mut out = vec![];
        for i in 0..n {
            for j in i..n {
                let z = h.matrix()[[i, j]];
                if z.norm() > 1e-15 {
                    out.push((i, j, z.re));
                }
            }
        }
        out
    }

    #[test]
    fn hoppings_at_special_angles() {
        let spec = LatticeSpec::base(6).unwrap();
        let h = hoppings(&spec, 0.0);
        assert_eq!((h.j1, h.j2), (2.0, 0.0));
        let h = hoppings(&spec, PI);
        assert_eq!((h.j1, h.j2), (0.0, 2.0));
        let h = hoppings(&spec, PI / 2.0);
        assert!((h.j1 - 1.0).abs() < 1e-15 && (h.j2 - 1.0).abs() < 1e-15);
        let h = hoppings(&spec, 3.0 * TAU + 0.5);
        assert!((h.theta - 0.5).abs() < 1e-12);
        assert!((h.j1 + h.j2 - 2.0).abs() < 1e-15);
    }

    #[test]
    fn spec_validation() {
        assert_eq!(LatticeSpec::base(3), Err(Error::InvalidCellCount(3)));
        assert_eq!(LatticeSpec::base(0), Err(Error::InvalidCellCount(0)));
        assert!(LatticeSpec::base(2).is_ok());
        assert!(matches!(LatticeSpec::extra_hop(6, 2), Err(Error::HopOutOfRange { .. })));
        assert!(matches!(LatticeSpec::extra_hop(6, 8), Err(Error::HopOutOfRange { .. })));
        assert!(LatticeSpec::extra_hop(6, 7).is_ok());
        assert!(LatticeSpec::new(6, 0.0, Variant::BasePorts).is_err());
        assert!(LatticeSpec::from_sites(13, 1.0, Variant::BasePorts).is_ok());
        assert_eq!(LatticeSpec::from_sites(11, 1.0, Variant::BasePorts), Err(Error::InvalidSize(11)));
        assert_eq!(LatticeSpec::from_sites(12, 1.0, Variant::BasePorts), Err(Error::InvalidSize(12)));
    }

    #[test]
    fn site_index_mapping() {
        assert_eq!(SiteIndex::a(1).ordinal(), 0);
        assert_eq!(SiteIndex::b(1).ordinal(), 1);
        assert_eq!(SiteIndex::a(7).ordinal(), 12);
        for k in 0..13 {
            let s = SiteIndex::from_ordinal(k);
            let back = match s.sublattice() {
                Sublattice::A => SiteIndex::a(s.cell()),
                Sublattice::B => SiteIndex::b(s.cell()),
            };
            assert_eq!(back, s);
            assert_eq!(s.to_string().parse::<SiteIndex>().unwrap(), s);
        }
        assert!("c1".parse::<SiteIndex>().is_err());
        assert!("a0".parse::<SiteIndex>().is_err());
    }

    #[test]
    fn n2_theta_zero_is_two_dimers_and_a_free_site() {
        let spec = LatticeSpec::base(2).unwrap();
        let h = build_hamiltonian(&spec, 0.0, None).unwrap();
        assert_eq!(nonzero_upper(&h), vec![(0, 1, 2.0), (2, 3, 2.0)]);
        assert!(h.matrix().row(4).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn n2_theta_pi_keeps_intercell_and_long_range() {
        let spec = LatticeSpec::base(2).unwrap();
        let h = build_hamiltonian(&spec, PI, None).unwrap();
        // (a1,b2), (b1,a2), (b2,a3)
        assert_eq!(nonzero_upper(&h), vec![(0, 3, 2.0), (1, 2, 2.0), (3, 4, 2.0)]);
        assert_eq!(h, Hamiltonian::from_matrix(h.matrix().t().to_owned()).unwrap());
    }

    #[test]
    fn extra_hop_adds_one_bond() {
        let base = build_hamiltonian(&LatticeSpec::base(6).unwrap(), PI, None).unwrap();
        let extra = build_hamiltonian(&LatticeSpec::extra_hop(6, 3).unwrap(), PI, None).unwrap();
        let diff = extra.matrix() - base.matrix();
        let nz: Vec<_> = diff.indexed_iter().filter(|(_, z)| z.norm() > 0.0).collect();
        assert_eq!(nz.len(), 2);
        assert_eq!(entry(&extra, SiteIndex::a(3), SiteIndex::b(1)), 2.0);
        assert_eq!(entry(&extra, SiteIndex::b(1), SiteIndex::a(3)), 2.0);
    }

    #[test]
    fn bond_counts_at_generic_theta() {
        for n in [2, 4, 6, 10] {
            let base = build_hamiltonian(&LatticeSpec::base(n).unwrap(), 0.7, None).unwrap();
            assert_eq!(base.bond_count(), 3 * n - 1);
            let extra = build_hamiltonian(&LatticeSpec::extra_hop(n, n + 1).unwrap(), 0.7, None).unwrap();
            assert_eq!(extra.bond_count(), 3 * n);
        }
    }

    #[test]
    fn chiral_operator_shape() {
        let g = chiral_operator(5).unwrap();
        assert_eq!(g.diag().to_vec(), vec![1.0, -1.0, 1.0, -1.0, 1.0]);
        let g = chiral_operator(13).unwrap();
        assert!(g.diag().iter().enumerate().all(|(k, &s)| s == if k % 2 == 0 { 1.0 } else { -1.0 }));
        assert_eq!(g.dot(&g), Array2::<f64>::eye(13));
        assert!(chiral_operator(6).is_err());
        assert!(chiral_operator(3).is_err());
    }

    #[test]
    fn on_site_disorder_breaks_chiral_symmetry_by_twice_the_largest_shift() {
        let spec = LatticeSpec::base(6).unwrap();
        let d = sample_disorder(&spec, DisorderKind::OnSite, 0.2, 5).unwrap();
        let h = build_hamiltonian(&spec, 1.1, Some(&d)).unwrap();
        let expected = 2.0 * d.max_shift();
        assert!(expected > 0.0);
        assert!((chiral_defect(&h) - expected).abs() < 1e-15);
    }

    #[test]
    fn off_diagonal_disorder_keeps_chiral_symmetry() {
        let spec = LatticeSpec::extra_hop(6, 6).unwrap();
        for kind in [DisorderKind::NearestNeighbor, DisorderKind::LongRange] {
            for seed in 0..5 {
                let d = sample_disorder(&spec, kind, 0.4, seed).unwrap();
                let h = build_hamiltonian(&spec, 2.3, Some(&d)).unwrap();
                assert!(chiral_defect(&h) <= 1e-14);
            }
        }
    }

    #[test]
    fn disorder_term_counts() {
        let spec = LatticeSpec::base(6).unwrap();
        let count = |k| sample_disorder(&spec, k, 0.2, 1).unwrap().values.len();
        assert_eq!(count(DisorderKind::OnSite), 13);
        assert_eq!(count(DisorderKind::NearestNeighbor), 12);
        assert_eq!(count(DisorderKind::LongRange), 5);
        let spec = LatticeSpec::extra_hop(6, 4).unwrap();
        let lr = sample_disorder(&spec, DisorderKind::LongRange, 0.2, 1).unwrap();
        assert_eq!(lr.values.len(), 6);
        assert!(matches!(lr.values.last().unwrap().0, DisorderTerm::Bond(Bond { kind: BondKind::ExtraHop, .. })));
    }

    #[test]
    fn zero_strength_disorder_changes_nothing() {
        let spec = LatticeSpec::base(6).unwrap();
        let clean = build_hamiltonian(&spec, 0.9, None).unwrap();
        for kind in [DisorderKind::OnSite, DisorderKind::NearestNeighbor, DisorderKind::LongRange] {
            let d = sample_disorder(&spec, kind, 0.0, 3).unwrap();
            assert_eq!(build_hamiltonian(&spec, 0.9, Some(&d)).unwrap(), clean);
        }
    }

    #[test]
    fn mismatched_disorder_is_rejected() {
        let small = LatticeSpec::base(4).unwrap();
        let big = LatticeSpec::base(6).unwrap();
        let d = sample_disorder(&small, DisorderKind::OnSite, 0.2, 1).unwrap();
        assert!(matches!(build_hamiltonian(&big, 0.0, Some(&d)), Err(Error::DisorderMismatch(_))));
        // same term count, different bond set
        let base = LatticeSpec::extra_hop(6, 3).unwrap();
        let other = LatticeSpec::extra_hop(6, 4).unwrap();
        let d = sample_disorder(&base, DisorderKind::LongRange, 0.2, 1).unwrap();
        assert!(matches!(build_hamiltonian(&other, 0.0, Some(&d)), Err(Error::DisorderMismatch(_))));
        let mut d = sample_disorder(&big, DisorderKind::OnSite, 0.2, 1).unwrap();
        d.values[0].1 = 0.7;
        assert!(build_hamiltonian(&big, 0.0, Some(&d)).is_err());
        assert!(sample_disorder(&big, DisorderKind::OnSite, -0.1, 1).is_err());
    }

    #[test]
    fn circuit_reduction() {
        assert_eq!(effective_hopping_from_circuit(1.0, -1.0).unwrap(), 1.0);
        assert_eq!(effective_hopping_from_circuit(2.0, -2.0).unwrap(), 2.0);
        assert_eq!(effective_hopping_from_circuit(1.0, 1.0).unwrap(), -1.0);
        assert_eq!(effective_hopping_from_circuit(1.0, 0.0), Err(Error::ZeroDetuning));
    }

    #[test]
    fn generator_matches_dense_matrix() {
        let spec = LatticeSpec::extra_hop(6, 5).unwrap();
        let d = sample_disorder(&spec, DisorderKind::OnSite, 0.3, 9).unwrap();
        let p = ParametricHamiltonian::new(&spec, Some(&d)).unwrap();
        let psi: Vec<Complex64> = (0..13).map(|k| Complex64::new((k as f64).sin(), (k as f64 * 0.3).cos())).collect();
        let mut out = vec![Complex64::new(0.0, 0.0); 13];
        p.apply_generator(0.77, &psi, &mut out);
        let dense = p.at(0.77).into_matrix().dot(&Array1::from(psi.clone()));
        for k in 0..13 {
            let want = dense[k] * Complex64::new(0.0, -1.0);
            assert!((out[k] - want).norm() < 1e-14);
        }
    }

    #[test]
    fn gauge_fixing_prefers_lowest_tied_site() {
        let v = StateVector::from_real(&[-1.0, 0.0, 1.0, 0.0, 1.0]).unwrap().rotated(0.4);
        let g = v.gauge_fixed();
        assert_eq!(g.gauge(), Gauge::FixedPositiveAtMax);
        assert!(g.amplitudes()[0].im == 0.0 && g.amplitudes()[0].re > 0.0);
        assert!((g.amplitudes()[2].re + 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn state_vector_normalizes() {
        let v = StateVector::from_real(&[3.0, 4.0]).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-15);
        assert!(StateVector::from_real(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn spec_json_roundtrip_and_validation() {
        let spec = LatticeSpec::extra_hop(6, 4).unwrap();
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(s, r#"{"n_cells":6,"j":1.0,"variant":{"kind":"extra_hop","m":4}}"#);
        assert_eq!(serde_json::from_str::<LatticeSpec>(&s).unwrap(), spec);
        assert!(serde_json::from_str::<LatticeSpec>(r#"{"n_cells":5}"#).is_err());
        let d: LatticeSpec = serde_json::from_str(r#"{"n_cells":6}"#).unwrap();
        assert_eq!(d, LatticeSpec::base(6).unwrap());
    }
}
