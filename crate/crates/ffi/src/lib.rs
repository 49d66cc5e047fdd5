//! C ABI over `gwb-roe`.
//!
//! Objects are opaque handles created by `gwb_*_new`-style functions and
//! released with the matching `*_free`. Every fallible call returns a
//! [`GwbStatus`]; on failure the message is available from
//! [`gwb_last_error_message`] on the same thread. Panics never cross the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use gwb_roe::config::{ExperimentConfig, ExperimentKind};
use gwb_roe::discrete_sets::{IntegerLattice, UniformlyDiscreteSet};
use gwb_roe::grid::{Boundary, Grid};
use gwb_roe::localization::{
    build_extremely_localized_family, build_power_law_family, certify_exponential, certify_s_localized,
    WannierFamily,
};
use gwb_roe::models::{
    build_kronig_penney, compute_spectrum, extract_gwb, find_spectral_islands, spectral_projection,
    ExtractionOptions,
};
use gwb_roe::roe_ops::{build_intertwiner, decay_fit, norm_of_difference, Intertwiner};
use gwb_roe::series_bounds::{default_eps, lemma_constant, tail_sum};
use gwb_roe::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GwbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Hypothesis = 3,
    NotLocalized = 4,
    Numerical = 5,
    Certification = 6,
    Io = 7,
    Config = 8,
    Panic = 9,
}

/// Box grid `[−L, L]^d`.
pub struct GwbGrid(Arc<Grid>);

/// Wannier family with its localization records.
pub struct GwbFamily(WannierFamily);

/// Intertwiner `V = Σ_γ |φ_γ⟩⟨ψ_γ|`.
pub struct GwbIntertwiner(Intertwiner);

/// Slope of a decay fit and its verdict.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct GwbDecayFit {
    pub slope: f64,
    pub target: f64,
    pub pass: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GwbStatus {
    match e {
        Error::InvalidArgument(_)
        | Error::InvalidGrid(_)
        | Error::GridMismatch
        | Error::CenterMismatch(_)
        | Error::BallUnresolved { .. }
        | Error::UnresolvedWells { .. }
        | Error::BoxTooSmall(_)
        | Error::DeformationTooStrong(_)
        | Error::StaleIsland => GwbStatus::InvalidArgument,
        Error::Hypothesis(_) => GwbStatus::Hypothesis,
        Error::NotLocalized(_) | Error::EscapedMass { .. } | Error::OutsideBox(_) => GwbStatus::NotLocalized,
        Error::FrameDegenerate(_)
        | Error::NotOrthonormal { .. }
        | Error::Underflow { .. }
        | Error::EmptyTail(_)
        | Error::DegenerateCenters(_)
        | Error::Eigensolver(_) => GwbStatus::Numerical,
        Error::Certification(_) => GwbStatus::Certification,
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => GwbStatus::Io,
        Error::Config(_) => GwbStatus::Config,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GwbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            GwbStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            GwbStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            GwbStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(p))));
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn gwb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gwb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Dirichlet grid with `floor(2L/h)` points per axis.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn gwb_grid_new(dim: usize, half_width: f64, spacing: f64, out: *mut *mut GwbGrid) -> GwbStatus {
    guard(|| {
        let g = Grid::new(dim, half_width, spacing, Boundary::Dirichlet)?;
        write(out, Box::into_raw(Box::new(GwbGrid(g))), "out")
    })
}

/// # Safety
/// `grid` must be null or a handle from [`gwb_grid_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gwb_grid_free(grid: *mut GwbGrid) {
    free(grid)
}

/// Total number of grid points, 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gwb_grid_len(grid: *const GwbGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.len())
}

/// `Σ_{γ ∈ ℤ^d, |γ_k| ≤ extent, ‖x−γ‖ ≥ R} ⟨x−γ⟩^{-2s}`.
///
/// # Safety
/// `x` must point to `dim` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gwb_lattice_tail_sum(
    dim: usize,
    extent: i64,
    x: *const f64,
    cutoff: f64,
    s: f64,
    out: *mut f64,
) -> GwbStatus {
    guard(|| {
        if dim == 0 || extent < 0 {
            return Err(Error::InvalidArgument("dim must be positive and extent nonnegative".into()).into());
        }
        let x = slice(x, dim, "x")?;
        write(out, tail_sum(&IntegerLattice::new(dim, extent), x, cutoff, s), "out")
    })
}

/// Closed-form constant `C` of the tail bound `C (1+R)^{d−2s}` with the
/// default `ε`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gwb_lemma_constant(dim: usize, s: f64, radius: f64, cutoff: f64, out: *mut f64) -> GwbStatus {
    guard(|| {
        let c = lemma_constant(dim, s, default_eps(radius, cutoff), radius, cutoff)?;
        write(out, c, "out")
    })
}

fn lattice_centers(dim: usize, lo: i64, hi: i64) -> Result<UniformlyDiscreteSet, Failure> {
    Ok(UniformlyDiscreteSet::lattice(dim, lo, hi)?)
}

/// Löwdin-orthonormalized power-law family on the lattice `[lo, hi]^d`.
///
/// # Safety
/// `grid` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gwb_family_power_law(
    grid: *const GwbGrid,
    lo: i64,
    hi: i64,
    exponent: f64,
    out: *mut *mut GwbFamily,
) -> GwbStatus {
    guard(|| {
        let g = &deref(grid, "grid")?.0;
        let f = build_power_law_family(&lattice_centers(g.dim(), lo, hi)?, g, exponent)?;
        write(out, Box::into_raw(Box::new(GwbFamily(f))), "out")
    })
}

/// Normalized ball indicators on the lattice `[lo, hi]^d`.
///
/// # Safety
/// `grid` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gwb_family_extremely_localized(
    grid: *const GwbGrid,
    lo: i64,
    hi: i64,
    out: *mut *mut GwbFamily,
) -> GwbStatus {
    guard(|| {
        let g = &deref(grid, "grid")?.0;
        let f = build_extremely_localized_family(&lattice_centers(g.dim(), lo, hi)?, g)?;
        write(out, Box::into_raw(Box::new(GwbFamily(f))), "out")
    })
}

/// Wannier family of the lowest Kronig-Penney island below `energy_cap`
/// (pass a non-positive cap for the default), extracted by projected
/// position operators.
///
/// # Safety
/// `grid` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gwb_family_kronig_penney(
    grid: *const GwbGrid,
    v0: f64,
    a: f64,
    gap_tol: f64,
    energy_cap: f64,
    eigenpairs: usize,
    seed: u64,
    out: *mut *mut GwbFamily,
) -> GwbStatus {
    guard(|| {
        let g = &deref(grid, "grid")?.0;
        let h = build_kronig_penney(g, v0, a)?;
        let spectrum = compute_spectrum(&h, eigenpairs, seed)?;
        let cap = (energy_cap > 0.0).then_some(energy_cap);
        let island = find_spectral_islands(&spectrum, gap_tol, cap)
            .into_iter()
            .next()
            .ok_or_else(|| Error::Hypothesis("no spectral island found".into()))?;
        let p = spectral_projection(&h, &spectrum, &island)?;
        let f = extract_gwb(&p, &ExtractionOptions::default())?;
        write(out, Box::into_raw(Box::new(GwbFamily(f))), "out")
    })
}

/// # Safety
/// `family` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gwb_family_free(family: *mut GwbFamily) {
    free(family)
}

/// Number of members, 0 for a null handle.
///
/// # Safety
/// `family` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gwb_family_len(family: *const GwbFamily) -> usize {
    family.as_ref().map_or(0, |f| f.0.len())
}

/// Copies the centers, row-major `len × dim`, into `buf` of `capacity`
/// doubles and stores the number of doubles needed in `needed`.
///
/// # Safety
/// `family` must be live, `buf` must hold `capacity` doubles (may be null
/// when `capacity` is 0) and `needed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gwb_family_centers(
    family: *const GwbFamily,
    buf: *mut f64,
    capacity: usize,
    needed: *mut usize,
) -> GwbStatus {
    guard(|| {
        let f = &deref(family, "family")?.0;
        let flat: Vec<f64> = f.centers().points().iter().flatten().copied().collect();
        write(needed, flat.len(), "needed")?;
        if capacity >= flat.len() && !flat.is_empty() {
            if buf.is_null() {
                return Err(Failure::Null("buf"));
            }
            ptr::copy_nonoverlapping(flat.as_ptr(), buf, flat.len());
        }
        Ok(())
    })
}

/// `M(s) = max_γ ∫ ⟨x−γ⟩^{2s} |ψ_γ|²`, recorded on the family.
///
/// # Safety
/// `family` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gwb_family_certify_s(family: *mut GwbFamily, s: f64, out: *mut f64) -> GwbStatus {
    guard(|| {
        let f = family.as_mut().ok_or(Failure::Null("family"))?;
        write(out, certify_s_localized(&mut f.0, s)?, "out")
    })
}

/// `M = max_γ ∫ e^{2α‖x−γ‖} |ψ_γ|²`, recorded on the family.
///
/// # Safety
/// `family` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gwb_family_certify_exponential(family: *mut GwbFamily, alpha: f64, out: *mut f64) -> GwbStatus {
    guard(|| {
        let f = family.as_mut().ok_or(Failure::Null("family"))?;
        write(out, certify_exponential(&mut f.0, alpha)?, "out")
    })
}

/// Intertwiner from `psi` to `phi`, paired by center. Pass null `phi` to
/// pair with the extremely localized family on the same centers.
///
/// # Safety
/// `psi` must be live, `phi` null or live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gwb_intertwiner_new(
    psi: *const GwbFamily,
    phi: *const GwbFamily,
    out: *mut *mut GwbIntertwiner,
) -> GwbStatus {
    guard(|| {
        let psi = &deref(psi, "psi")?.0;
        let v = match phi.as_ref() {
            Some(phi) => build_intertwiner(psi, &phi.0)?,
            None => {
                let reference = build_extremely_localized_family(psi.centers(), psi.grid())?;
                build_intertwiner(psi, &reference)?
            }
        };
        write(out, Box::into_raw(Box::new(GwbIntertwiner(v))), "out")
    })
}

/// # Safety
/// `v` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gwb_intertwiner_free(v: *mut GwbIntertwiner) {
    free(v)
}

/// `‖V*V − P_H‖` and `‖VV* − P_H̃‖`.
///
/// # Safety
/// `v` must be live and both outputs writable.
#[no_mangle]
pub unsafe extern "C" fn gwb_intertwiner_mvn(v: *const GwbIntertwiner, source: *mut f64, target: *mut f64) -> GwbStatus {
    guard(|| {
        let r = deref(v, "v")?.0.mvn_residuals()?;
        write(source, r.source, "source")?;
        write(target, r.target, "target")
    })
}

/// `‖V − V^R‖` through the Gram route.
///
/// # Safety
/// `v` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gwb_norm_of_difference(v: *const GwbIntertwiner, cutoff: f64, out: *mut f64) -> GwbStatus {
    guard(|| {
        let v = &deref(v, "v")?.0;
        write(out, norm_of_difference(v, &v.truncate(cutoff)?)?, "out")
    })
}

/// Fits `log ‖V − V^R‖` against `log(1+R)` and compares with `(d−2s)/2`.
///
/// # Safety
/// `v` must be live, `cutoffs` must hold `count` doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gwb_decay_fit(
    v: *const GwbIntertwiner,
    cutoffs: *const f64,
    count: usize,
    s: f64,
    out: *mut GwbDecayFit,
) -> GwbStatus {
    guard(|| {
        let v = &deref(v, "v")?.0;
        let fit = decay_fit(v, slice(cutoffs, count, "cutoffs")?, s)?;
        write(out, GwbDecayFit { slope: fit.slope, target: fit.target, pass: fit.pass }, "out")
    })
}

/// Runs a batch experiment from a TOML config file and writes its reports
/// to `out_dir` (null keeps the configured directory). `pass` receives the
/// overall verdict.
///
/// # Safety
/// `config_path` must be a NUL-terminated string, `out_dir` null or
/// NUL-terminated, `pass` writable.
#[no_mangle]
pub unsafe extern "C" fn gwb_run_experiment(
    config_path: *const c_char,
    out_dir: *const c_char,
    pass: *mut bool,
) -> GwbStatus {
    guard(|| {
        if config_path.is_null() {
            return Err(Failure::Null("config_path"));
        }
        let text = |p: *const c_char| {
            CStr::from_ptr(p).to_str().map_err(|_| Error::InvalidArgument("path is not UTF-8".into()))
        };
        let mut config = ExperimentConfig::load(Path::new(text(config_path)?))?;
        if !out_dir.is_null() {
            config.output = text(out_dir)?.into();
        }
        let verdict = gwb_roe::experiments::run(&config, &config.output)?;
        write(pass, verdict.pass, "pass")
    })
}

/// Writes the default TOML config of an experiment kind (`lemma-sweep`,
/// `decay`, `model-pipeline` or `probes`) into `buf` and stores the byte
/// length including the terminator in `needed`.
///
/// # Safety
/// `kind` must be NUL-terminated, `buf` must hold `capacity` bytes (may be
/// null when `capacity` is 0) and `needed` writable.
#[no_mangle]
pub unsafe extern "C" fn gwb_default_config(
    kind: *const c_char,
    buf: *mut c_char,
    capacity: usize,
    needed: *mut usize,
) -> GwbStatus {
    guard(|| {
        if kind.is_null() {
            return Err(Failure::Null("kind"));
        }
        let name = CStr::from_ptr(kind).to_string_lossy();
        let kind = [
            ExperimentKind::LemmaSweep,
            ExperimentKind::Decay,
            ExperimentKind::ModelPipeline,
            ExperimentKind::Probes,
        ]
        .into_iter()
        .find(|k| k.name() == name)
        .ok_or_else(|| Error::Config(format!("unknown experiment kind {name}")))?;
        let toml = CString::new(ExperimentConfig::new(kind).to_toml()?).map_err(|e| Error::Config(e.to_string()))?;
        let bytes = toml.as_bytes_with_nul();
        write(needed, bytes.len(), "needed")?;
        if capacity >= bytes.len() {
            if buf.is_null() {
                return Err(Failure::Null("buf"));
            }
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, bytes.len());
        }
        Ok(())
    })
}
