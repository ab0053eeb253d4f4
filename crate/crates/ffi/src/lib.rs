//! C interface to `gaussfpt`.
//!
//! Every function returns a [`GfStatus`]; on failure a message is kept per
//! thread and can be read with [`gf_last_error_message`]. Densities and
//! sample sets are returned as opaque handles that the caller releases with
//! the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use gaussfpt::experiment::{run, ExperimentConfig};
use gaussfpt::montecarlo::{histogram, simulate_stationary_fpt, Binning, FptSampleSet, SimulationConfig};
use gaussfpt::sim::EvenRational;
use gaussfpt::{BoundarySpec, ClosedFormSoglia, DensityGrid, Error, ProcessSpec, SolverConfig};

/// Result codes shared by all entry points.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    AllCensored = 4,
    Config = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// A tabulated density: knots and values of equal length.
pub struct GfDensity(DensityGrid);

/// First-passage times of a simulated ensemble; censored paths included.
pub struct GfSamples(FptSampleSet);

/// Simulation settings. `threads == 0` uses every available core.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GfSimulation {
    pub paths: usize,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    pub threads: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

fn status_of(e: &Error) -> GfStatus {
    match e {
        Error::ParameterConstraint(_)
        | Error::Domain(_)
        | Error::OutOfInterval { .. }
        | Error::StartsAboveBoundary { .. }
        | Error::InvalidGrid(_) => GfStatus::InvalidArgument,
        Error::AllCensored => GfStatus::AllCensored,
        Error::Config(_) => GfStatus::Config,
        Error::Io(_) => GfStatus::Io,
        _ => GfStatus::Numerical,
    }
}

enum Failure {
    Status(GfStatus, String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn null() -> Failure {
    Failure::Status(GfStatus::NullPointer, "null pointer argument".into())
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> GfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GfStatus::Ok,
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Status(s, m))) => {
            set_error(m);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            GfStatus::Panic
        }
    }
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    out.write(value);
    Ok(())
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Status(GfStatus::InvalidArgument, "string is not valid UTF-8".into()))
}

fn knots(step: f64, horizon: f64) -> Result<Vec<f64>, Failure> {
    if !(step > 0.0 && horizon > 0.0 && step.is_finite() && horizon.is_finite()) {
        return Err(Failure::Status(
            GfStatus::InvalidArgument,
            format!("step {step} and horizon {horizon} must be positive"),
        ));
    }
    let n = ((horizon / step) - 1e-9).ceil() as usize;
    Ok((0..=n).map(|k| step * k as f64).collect())
}

fn into_handle<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn gf_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Evaluates the soglia boundary `S(t)`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gf_soglia(beta: f64, d: f64, t: f64, out: *mut f64) -> GfStatus {
    guard(|| write_out(out, gaussfpt::soglia_eval(beta, d, t)?))
}

/// Closed-form FPT density through the soglia boundary at time `t > 0`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gf_closed_form(beta: f64, d: f64, t: f64, out: *mut f64) -> GfStatus {
    guard(|| write_out(out, gaussfpt::closed_form_soglia(beta, d, t)?))
}

/// Closed-form density on `0, step, ..., horizon`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gf_closed_form_grid(
    beta: f64,
    d: f64,
    step: f64,
    horizon: f64,
    out: *mut *mut GfDensity,
) -> GfStatus {
    guard(|| {
        let grid = ClosedFormSoglia::new(beta, d)?.grid(knots(step, horizon)?)?;
        write_out(out, into_handle(GfDensity(grid)))
    })
}

/// Solves the Volterra equation for the stationary OU process with
/// correlation `exp(-beta|t|)` started at 0, through the soglia boundary
/// with parameters `(boundary_beta, d)`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gf_volterra_ou_soglia(
    beta: f64,
    boundary_beta: f64,
    d: f64,
    step: f64,
    horizon: f64,
    out: *mut *mut GfDensity,
) -> GfStatus {
    guard(|| {
        knots(step, horizon)?;
        let spec = ProcessSpec::stationary_ou(beta)?;
        let boundary = BoundarySpec::soglia(boundary_beta, d)?;
        let sol = gaussfpt::solve_volterra(&spec, &boundary, &SolverConfig::new(step, horizon))?;
        write_out(out, into_handle(GfDensity(sol.density)))
    })
}

/// Simulates first-passage times of the stationary process with correlation
/// `exp(-beta|t|) cos(alpha t)`, started at `x0`, through the soglia boundary
/// `(boundary_beta, d)`.
///
/// # Safety
/// `sim` must be null or point to a valid `GfSimulation`; `out` must be null
/// or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gf_simulate_exp_cos(
    beta: f64,
    alpha: f64,
    x0: f64,
    boundary_beta: f64,
    d: f64,
    sim: *const GfSimulation,
    out: *mut *mut GfSamples,
) -> GfStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(null)?;
        let config = SimulationConfig {
            paths: sim.paths,
            dt: sim.dt,
            horizon: sim.horizon,
            seed: sim.seed,
            threads: (sim.threads > 0).then_some(sim.threads),
            ..SimulationConfig::default()
        };
        let spectrum = EvenRational::exp_cos(beta, alpha)?;
        let boundary = BoundarySpec::soglia(boundary_beta, d)?;
        let samples = simulate_stationary_fpt(&spectrum, x0, &boundary, &config)?;
        write_out(out, into_handle(GfSamples(samples)))
    })
}

/// Histogram density of a sample set. `bin_width <= 0` selects the automatic width.
///
/// # Safety
/// `samples` must be null or a live handle; `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gf_samples_histogram(
    samples: *const GfSamples,
    bin_width: f64,
    out: *mut *mut GfDensity,
) -> GfStatus {
    guard(|| {
        let s = samples.as_ref().ok_or_else(null)?;
        let binning = if bin_width > 0.0 {
            Binning::Width(bin_width)
        } else {
            Binning::Auto
        };
        let h = histogram(&s.0, binning)?;
        write_out(out, into_handle(GfDensity(h.density)))
    })
}

/// Number of paths in total and number that crossed.
///
/// # Safety
/// `samples` must be null or a live handle; the outputs must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gf_samples_count(
    samples: *const GfSamples,
    total: *mut usize,
    crossed: *mut usize,
) -> GfStatus {
    guard(|| {
        let s = samples.as_ref().ok_or_else(null)?;
        write_out(total, s.0.total())?;
        write_out(crossed, s.0.crossed())
    })
}

/// Copies crossing times in path order into `times`; censored paths are NaN.
///
/// # Safety
/// `samples` must be null or a live handle; `times` must point to `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gf_samples_copy(samples: *const GfSamples, times: *mut f64, capacity: usize) -> GfStatus {
    guard(|| {
        let s = samples.as_ref().ok_or_else(null)?;
        if times.is_null() {
            return Err(null());
        }
        let n = s.0.total();
        if capacity < n {
            return Err(Failure::Status(
                GfStatus::BufferTooSmall,
                format!("buffer holds {capacity} values, {n} needed"),
            ));
        }
        for (i, t) in s.0.times.iter().enumerate() {
            *times.add(i) = t.unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// Releases a sample set. Null is ignored.
///
/// # Safety
/// `samples` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gf_samples_free(samples: *mut GfSamples) {
    if !samples.is_null() {
        drop(Box::from_raw(samples));
    }
}

/// Number of knots of a density.
///
/// # Safety
/// `density` must be null or a live handle; `len` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gf_density_len(density: *const GfDensity, len: *mut usize) -> GfStatus {
    guard(|| {
        let g = density.as_ref().ok_or_else(null)?;
        write_out(len, g.0.len())
    })
}

/// Copies knots and values; either pointer may be null to skip it.
///
/// # Safety
/// `density` must be null or a live handle; non-null buffers must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn gf_density_copy(
    density: *const GfDensity,
    knots: *mut f64,
    values: *mut f64,
    capacity: usize,
) -> GfStatus {
    guard(|| {
        let g = density.as_ref().ok_or_else(null)?;
        let n = g.0.len();
        if capacity < n {
            return Err(Failure::Status(
                GfStatus::BufferTooSmall,
                format!("buffer holds {capacity} values, {n} needed"),
            ));
        }
        if !knots.is_null() {
            ptr::copy_nonoverlapping(g.0.knots().as_ptr(), knots, n);
        }
        if !values.is_null() {
            ptr::copy_nonoverlapping(g.0.values().as_ptr(), values, n);
        }
        Ok(())
    })
}

/// Total mass of a density: trapezoids for tabulated grids, bin sums for histograms.
///
/// # Safety
/// `density` must be null or a live handle; `mass` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gf_density_mass(density: *const GfDensity, mass: *mut f64) -> GfStatus {
    guard(|| {
        let g = density.as_ref().ok_or_else(null)?;
        write_out(mass, g.0.total_mass())
    })
}

/// Releases a density. Null is ignored.
///
/// # Safety
/// `density` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gf_density_free(density: *mut GfDensity) {
    if !density.is_null() {
        drop(Box::from_raw(density));
    }
}

/// Runs an experiment from a JSON configuration, writing its tables to
/// `out_dir` (or to the directory named in the configuration when null).
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out_dir` null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn gf_run_config_json(config_json: *const c_char, out_dir: *const c_char) -> GfStatus {
    guard(|| {
        let mut config = ExperimentConfig::from_json(str_arg(config_json)?)?;
        if !out_dir.is_null() {
            config.output_dir = Some(PathBuf::from(str_arg(out_dir)?));
        }
        run(&config)?;
        Ok(())
    })
}
