//! C ABI over the `toporouter` core.
//!
//! Conventions:
//! - Every function returns a [`TrStatus`]; results go through out-pointers.
//! - Handles ([`TrLattice`], [`TrEvolution`]) are opaque. Each one is
//!   released with its `*_free` function. Passing NULL to a free is a no-op.
//! - Array outputs are caller-allocated. Functions check the capacity and
//!   fail with `TR_STATUS_BUFFER_TOO_SMALL` rather than truncate.
//! - On failure, `tr_last_error_message` returns a description. The message
//!   is thread-local and stays set until the next failing call on that thread.
//! - Panics never cross the boundary; they surface as `TR_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use toporouter::detection::{steady_state, DriveConfig};
use toporouter::evolution::{evolve_with, EvolutionResult, EvolveOptions, RampSchedule};
use toporouter::spectral::{eigenvalues, minimal_gap, zero_mode, GapScan};
use toporouter::{
    build_hamiltonian, sample_disorder, DisorderKind, DisorderRealization, LatticeSpec, SiteIndex, Variant,
};

/// Outcome of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numeric = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

/// Which disorder terms a realization perturbs.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrDisorderKind {
    None = 0,
    OnSite = 1,
    NearestNeighbor = 2,
    LongRange = 3,
}

/// Disorder request: `w` is the strength, `seed` keys the draw.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TrDisorder {
    pub kind: TrDisorderKind,
    pub w: f64,
    pub seed: u64,
}

/// Lattice geometry (opaque).
pub struct TrLattice {
    spec: LatticeSpec,
}

/// Result of one adiabatic ramp (opaque).
pub struct TrEvolution {
    result: EvolutionResult,
}

struct Failure {
    status: TrStatus,
    message: String,
}

impl Failure {
    fn new(status: TrStatus, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }
}

impl From<toporouter::Error> for Failure {
    fn from(e: toporouter::Error) -> Self {
        let status = if e.is_numeric() { TrStatus::Numeric } else { TrStatus::InvalidArgument };
        Self::new(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> TrStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => TrStatus::Ok,
        Ok(Err(f)) => {
            set_last_error(&f.message);
            f.status
        }
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal panic: {what}"));
            TrStatus::Panic
        }
    }
}

fn non_null<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, Failure> {
    // SAFETY: the caller guarantees that non-null pointers are valid.
    unsafe { ptr.as_ref() }.ok_or_else(|| Failure::new(TrStatus::NullPointer, format!("{name} is NULL")))
}

fn out_slot<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: the caller guarantees that non-null pointers are valid and writable.
    unsafe { ptr.as_mut() }.ok_or_else(|| Failure::new(TrStatus::NullPointer, format!("{name} is NULL")))
}

fn out_buffer<'a>(ptr: *mut f64, capacity: usize, needed: usize, name: &str) -> Result<&'a mut [f64], Failure> {
    if ptr.is_null() {
        return Err(Failure::new(TrStatus::NullPointer, format!("{name} is NULL")));
    }
    if capacity < needed {
        return Err(Failure::new(TrStatus::BufferTooSmall, format!("{name} holds {capacity} values, {needed} needed")));
    }
    // SAFETY: non-null and, per the caller's contract, valid for `capacity` writes.
    Ok(unsafe { std::slice::from_raw_parts_mut(ptr, needed) })
}

fn realization(spec: &LatticeSpec, disorder: *const TrDisorder) -> Result<Option<DisorderRealization>, Failure> {
    // SAFETY: the caller guarantees that a non-null pointer is valid.
    let Some(d) = (unsafe { disorder.as_ref() }) else {
        return Ok(None);
    };
    let kind = match d.kind {
        TrDisorderKind::None => return Ok(None),
        TrDisorderKind::OnSite => DisorderKind::OnSite,
        TrDisorderKind::NearestNeighbor => DisorderKind::NearestNeighbor,
        TrDisorderKind::LongRange => DisorderKind::LongRange,
    };
    Ok(Some(sample_disorder(spec, kind, d.w, d.seed)?))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `capacity`). Returns the full message length including the
/// terminator, or 0 when no error has been recorded.
///
/// # Safety
/// `buf` must be NULL or valid for `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn tr_last_error_message(buf: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let slot = slot.borrow();
        let Some(msg) = slot.as_ref() else {
            return 0;
        };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && capacity > 0 {
            let n = bytes.len().min(capacity);
            // SAFETY: `buf` is valid for `capacity >= n` bytes.
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n - 1) = 0;
            }
        }
        bytes.len()
    })
}

/// Creates a lattice of `n_cells` cells (even, at least 2) with coupling `j`.
/// `extra_hop_m = 0` selects the two-port lattice; `3..=n_cells + 1` adds the
/// extra hop `b_1 <-> a_m`.
///
/// # Safety
/// `out` must be NULL or valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn tr_lattice_new(
    n_cells: usize,
    j: f64,
    extra_hop_m: usize,
    out: *mut *mut TrLattice,
) -> TrStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        let variant = if extra_hop_m == 0 { Variant::BasePorts } else { Variant::ExtraHop { m: extra_hop_m } };
        let spec = LatticeSpec::new(n_cells, j, variant)?;
        *out = Box::into_raw(Box::new(TrLattice { spec }));
        Ok(())
    })
}

/// Releases a lattice handle.
///
/// # Safety
/// `lattice` must be NULL or a handle from `tr_lattice_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tr_lattice_free(lattice: *mut TrLattice) {
    if !lattice.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { Box::from_raw(lattice) });
    }
}

/// Writes the number of sites `2 * n_cells + 1`.
///
/// # Safety
/// Pointers must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn tr_lattice_num_sites(lattice: *const TrLattice, out: *mut usize) -> TrStatus {
    guard(|| {
        let lat = non_null(lattice, "lattice")?;
        *out_slot(out, "out")? = lat.spec.num_sites();
        Ok(())
    })
}

/// Writes the real Hamiltonian at `theta` row-major into `out`
/// (`capacity >= L * L`). `disorder` may be NULL.
///
/// # Safety
/// Pointers must be NULL or valid; `out` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn tr_hamiltonian(
    lattice: *const TrLattice,
    theta: f64,
    disorder: *const TrDisorder,
    out: *mut f64,
    capacity: usize,
) -> TrStatus {
    guard(|| {
        let lat = non_null(lattice, "lattice")?;
        let l = lat.spec.num_sites();
        let buf = out_buffer(out, capacity, l * l, "out")?;
        let d = realization(&lat.spec, disorder)?;
        let h = build_hamiltonian(&lat.spec, theta, d.as_ref())?;
        for (dst, z) in buf.iter_mut().zip(h.matrix().iter()) {
            *dst = z.re;
        }
        Ok(())
    })
}

/// Writes the `L` eigenvalues at `theta` in ascending order.
///
/// # Safety
/// Pointers must be NULL or valid; `out` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn tr_eigenvalues(
    lattice: *const TrLattice,
    theta: f64,
    disorder: *const TrDisorder,
    out: *mut f64,
    capacity: usize,
) -> TrStatus {
    guard(|| {
        let lat = non_null(lattice, "lattice")?;
        let buf = out_buffer(out, capacity, lat.spec.num_sites(), "out")?;
        let d = realization(&lat.spec, disorder)?;
        let e = eigenvalues(&build_hamiltonian(&lat.spec, theta, d.as_ref())?)?;
        buf.copy_from_slice(e.as_slice().expect("contiguous eigenvalues"));
        Ok(())
    })
}

/// Writes the zero mode at `theta` (clean lattice) as real and imaginary
/// parts, plus its energy.
///
/// # Safety
/// Pointers must be NULL or valid; `re`/`im` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn tr_zero_mode(
    lattice: *const TrLattice,
    theta: f64,
    re: *mut f64,
    im: *mut f64,
    capacity: usize,
    energy: *mut f64,
) -> TrStatus {
    guard(|| {
        let lat = non_null(lattice, "lattice")?;
        let l = lat.spec.num_sites();
        let energy = out_slot(energy, "energy")?;
        let re = out_buffer(re, capacity, l, "re")?;
        let im = out_buffer(im, capacity, l, "im")?;
        let zm = zero_mode(&build_hamiltonian(&lat.spec, theta, None)?)?;
        for (k, z) in zm.state.amplitudes().iter().enumerate() {
            re[k] = z.re;
            im[k] = z.im;
        }
        *energy = zm.energy;
        Ok(())
    })
}

/// Minimal zero-mode gap over `[0, 2 pi]`: a uniform grid of `grid_points`,
/// refined by golden section to `refine_to` (`<= 0` disables refinement).
///
/// # Safety
/// Pointers must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn tr_minimal_gap(
    lattice: *const TrLattice,
    grid_points: usize,
    refine_to: f64,
    gap: *mut f64,
    theta_at_min: *mut f64,
) -> TrStatus {
    guard(|| {
        let lat = non_null(lattice, "lattice")?;
        let gap = out_slot(gap, "gap")?;
        let theta_at_min = out_slot(theta_at_min, "theta_at_min")?;
        if grid_points == 0 || refine_to.is_nan() {
            return Err(Failure::new(TrStatus::InvalidArgument, "grid_points must be positive and refine_to a number"));
        }
        let scan = GapScan { grid_points, refine_to: (refine_to > 0.0).then_some(refine_to) };
        let report = minimal_gap(&lat.spec, &scan)?;
        *gap = report.delta_e;
        *theta_at_min = report.theta_at_min;
        Ok(())
    })
}

/// Runs the ramp `theta: 0 -> pi` at speed `omega` with RK4 step `dt`.
/// Fails with `TR_STATUS_NUMERIC` if the norm drifts beyond tolerance.
///
/// # Safety
/// Pointers must be NULL or valid; `disorder` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn tr_evolve(
    lattice: *const TrLattice,
    omega: f64,
    dt: f64,
    disorder: *const TrDisorder,
    out: *mut *mut TrEvolution,
) -> TrStatus {
    guard(|| {
        let lat = non_null(lattice, "lattice")?;
        let out = out_slot(out, "out")?;
        let ramp = RampSchedule::new(omega, dt)?;
        let d = realization(&lat.spec, disorder)?;
        let result = evolve_with(&lat.spec, &ramp, d.as_ref(), &EvolveOptions::minimal())?;
        *out = Box::into_raw(Box::new(TrEvolution { result }));
        Ok(())
    })
}

/// Releases an evolution handle.
///
/// # Safety
/// `evolution` must be NULL or a handle from `tr_evolve` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tr_evolution_free(evolution: *mut TrEvolution) {
    if !evolution.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { Box::from_raw(evolution) });
    }
}

/// Fidelity of the final state with the ideal routed state.
///
/// # Safety
/// Pointers must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn tr_evolution_fidelity(evolution: *const TrEvolution, out: *mut f64) -> TrStatus {
    guard(|| {
        *out_slot(out, "out")? = non_null(evolution, "evolution")?.result.fidelity;
        Ok(())
    })
}

/// Largest deviation of the state norm from 1 during the run.
///
/// # Safety
/// Pointers must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn tr_evolution_norm_drift(evolution: *const TrEvolution, out: *mut f64) -> TrStatus {
    guard(|| {
        *out_slot(out, "out")? = non_null(evolution, "evolution")?.result.norm_drift;
        Ok(())
    })
}

/// Number of integrator steps taken.
///
/// # Safety
/// Pointers must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn tr_evolution_steps(evolution: *const TrEvolution, out: *mut usize) -> TrStatus {
    guard(|| {
        *out_slot(out, "out")? = non_null(evolution, "evolution")?.result.steps;
        Ok(())
    })
}

/// Final amplitudes as real and imaginary parts.
///
/// # Safety
/// Pointers must be NULL or valid; `re`/`im` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn tr_evolution_final_state(
    evolution: *const TrEvolution,
    re: *mut f64,
    im: *mut f64,
    capacity: usize,
) -> TrStatus {
    guard(|| {
        let ev = non_null(evolution, "evolution")?;
        let amps = ev.result.final_state.amplitudes();
        let re = out_buffer(re, capacity, amps.len(), "re")?;
        let im = out_buffer(im, capacity, amps.len(), "im")?;
        for (k, z) in amps.iter().enumerate() {
            re[k] = z.re;
            im[k] = z.im;
        }
        Ok(())
    })
}

/// Final phases relative to `a_1`, in `(-pi, pi]`; NaN on sites whose
/// amplitude is too small to carry a phase.
///
/// # Safety
/// Pointers must be NULL or valid; `out` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn tr_evolution_phase_profile(
    evolution: *const TrEvolution,
    out: *mut f64,
    capacity: usize,
) -> TrStatus {
    guard(|| {
        let ev = non_null(evolution, "evolution")?;
        let phases = &ev.result.phase_profile;
        let buf = out_buffer(out, capacity, phases.len(), "out")?;
        for (dst, p) in buf.iter_mut().zip(phases) {
            *dst = p.unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// Steady-state populations `|<rho_n>|^2` for a coherent drive of strength
/// `amplitude` on site ordinal `drive_site`, detuning `detuning` and uniform
/// decay `kappa > 0`.
///
/// # Safety
/// Pointers must be NULL or valid; `out` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn tr_steady_state(
    lattice: *const TrLattice,
    theta: f64,
    drive_site: usize,
    amplitude: f64,
    detuning: f64,
    kappa: f64,
    out: *mut f64,
    capacity: usize,
) -> TrStatus {
    guard(|| {
        let lat = non_null(lattice, "lattice")?;
        let l = lat.spec.num_sites();
        let buf = out_buffer(out, capacity, l, "out")?;
        let drive = DriveConfig::single_site(l, SiteIndex::from_ordinal(drive_site), amplitude, detuning, kappa)?;
        let s = steady_state(&lat.spec, theta, &drive)?;
        buf.copy_from_slice(&s.populations);
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_become_status_codes() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, TrStatus::Panic);
        let mut buf = [0 as c_char; 64];
        let n = unsafe { tr_last_error_message(buf.as_mut_ptr(), buf.len()) };
        let text = unsafe { std::ffi::CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap();
        assert_eq!(text, "internal panic: boom");
        assert_eq!(n, text.len() + 1);
    }
}
