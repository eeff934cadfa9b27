//! C ABI over the core pipeline: opaque handles, integer status codes and a
//! thread-local last-error message.
//!
//! Every function is callable from C via the generated `include/revax.h`.
//! Handles own their data and must be released with the matching `_free`
//! function; strings returned as `*mut c_char` are released with
//! [`revax_string_free`]. Functions returning a pointer yield null on
//! failure and set the last-error message; functions returning
//! [`RevaxStatus`] report the failure category directly.

use std::cell::RefCell;
use std::ffi::{c_char, c_double, c_int, CStr, CString};
use std::path::Path;
use std::ptr;

use revax_core::density::hellinger_from_samples;
use revax_core::error::{Category, Error};
use revax_core::evidence::log_marginal_likelihood;
use revax_core::inference::{mh_sample, pseudo_r2, ObservationSeries, PosteriorDraws};
use revax_core::integrate::{integrate_with_step, MeanTrajectory};
use revax_core::io::{load_draws, load_observations, save_draws, save_scenario_run, StudyConfig};
use revax_core::model::ModelTag;
use revax_core::predictive::posterior_predict;

/// Status codes: 0 is success, anything else matches the CLI exit code of
/// the same failure category.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RevaxStatus {
    Ok = 0,
    /// Null pointer or otherwise unusable argument.
    BadArgument = 1,
    Config = 3,
    Schema = 4,
    Parse = 5,
    Validation = 6,
    Model = 7,
    Instability = 8,
    Init = 9,
    Stat = 10,
    Evidence = 11,
    Io = 12,
}

fn status_of(category: Category) -> RevaxStatus {
    match category {
        Category::Config => RevaxStatus::Config,
        Category::Schema => RevaxStatus::Schema,
        Category::Parse => RevaxStatus::Parse,
        Category::Validation => RevaxStatus::Validation,
        Category::Model => RevaxStatus::Model,
        Category::Instability => RevaxStatus::Instability,
        Category::Init => RevaxStatus::Init,
        Category::Stat => RevaxStatus::Stat,
        Category::Evidence => RevaxStatus::Evidence,
        Category::Io => RevaxStatus::Io,
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(err: &Error) -> RevaxStatus {
    set_error(&err.to_string());
    status_of(err.category())
}

/// Message of the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn revax_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Opaque study configuration.
pub struct RevaxConfig(StudyConfig);
/// Opaque observation series.
pub struct RevaxObservations(ObservationSeries);
/// Opaque posterior draw matrix.
pub struct RevaxDraws(PosteriorDraws);
/// Opaque daily mean trajectory.
pub struct RevaxTrajectory(MeanTrajectory);

unsafe fn path_from(ptr_path: *const c_char) -> Option<std::path::PathBuf> {
    if ptr_path.is_null() {
        set_error("null path");
        return None;
    }
    match CStr::from_ptr(ptr_path).to_str() {
        Ok(s) => Some(Path::new(s).to_path_buf()),
        Err(_) => {
            set_error("path is not valid UTF-8");
            None
        }
    }
}

macro_rules! deref_or {
    ($ptr:expr, $ret:expr) => {
        match unsafe { $ptr.as_ref() } {
            Some(r) => r,
            None => {
                set_error("null handle");
                return $ret;
            }
        }
    };
}

// ---------------------------------------------------------------------------
// config

/// Built-in study defaults for model 1 or 2.
#[no_mangle]
pub extern "C" fn revax_config_default(model: c_int) -> *mut RevaxConfig {
    let tag = match model {
        1 => ModelTag::M1,
        2 => ModelTag::M2,
        _ => {
            set_error("model must be 1 or 2");
            return ptr::null_mut();
        }
    };
    Box::into_raw(Box::new(RevaxConfig(StudyConfig::default_for(tag))))
}

/// Load a TOML study config.
///
/// # Safety
/// `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn revax_config_load(path: *const c_char) -> *mut RevaxConfig {
    let Some(path) = path_from(path) else {
        return ptr::null_mut();
    };
    match StudyConfig::load(path) {
        Ok(config) => Box::into_raw(Box::new(RevaxConfig(config))),
        Err(e) => {
            set_error(&e.to_string());
            ptr::null_mut()
        }
    }
}

/// Resolved config echo as TOML; free with [`revax_string_free`].
///
/// # Safety
/// `config` must be a live handle from a `revax_config_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn revax_config_to_toml(config: *const RevaxConfig) -> *mut c_char {
    let config = deref_or!(config, ptr::null_mut());
    match CString::new(config.0.to_toml_string()) {
        Ok(s) => s.into_raw(),
        Err(_) => {
            set_error("config contains interior NUL");
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `config` must come from a `revax_config_*` constructor and not already be
/// freed.
#[no_mangle]
pub unsafe extern "C" fn revax_config_free(config: *mut RevaxConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// # Safety
/// `s` must come from a revax function returning `*mut c_char`.
#[no_mangle]
pub unsafe extern "C" fn revax_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------------------
// observations

/// Load an observations CSV (blank cells are masked days).
///
/// # Safety
/// `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn revax_observations_load(path: *const c_char) -> *mut RevaxObservations {
    let Some(path) = path_from(path) else {
        return ptr::null_mut();
    };
    match load_observations(path) {
        Ok(obs) => Box::into_raw(Box::new(RevaxObservations(obs))),
        Err(e) => {
            set_error(&e.to_string());
            ptr::null_mut()
        }
    }
}

/// Number of days covered (horizon + 1), or -1 on a null handle.
///
/// # Safety
/// `obs` must be a live handle from [`revax_observations_load`].
#[no_mangle]
pub unsafe extern "C" fn revax_observations_n_days(obs: *const RevaxObservations) -> c_int {
    let obs = deref_or!(obs, -1);
    obs.0.n_days() as c_int
}

/// # Safety
/// `obs` must come from [`revax_observations_load`] and not already be freed.
#[no_mangle]
pub unsafe extern "C" fn revax_observations_free(obs: *mut RevaxObservations) {
    if !obs.is_null() {
        drop(Box::from_raw(obs));
    }
}

// ---------------------------------------------------------------------------
// trajectory

/// Integrate the config's parameter set under its fitted vaccination policy.
///
/// # Safety
/// `config` must be a live handle from a `revax_config_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn revax_integrate(config: *const RevaxConfig) -> *mut RevaxTrajectory {
    let config = deref_or!(config, ptr::null_mut());
    let c = &config.0;
    match integrate_with_step(
        c.model,
        &c.initial,
        &c.params,
        c.policy(),
        c.horizon,
        c.fit_context().step,
    ) {
        Ok(traj) => Box::into_raw(Box::new(RevaxTrajectory(traj))),
        Err(e) => {
            set_error(&e.to_string());
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `traj` must be a live handle from [`revax_integrate`].
#[no_mangle]
pub unsafe extern "C" fn revax_trajectory_n_days(traj: *const RevaxTrajectory) -> c_int {
    let traj = deref_or!(traj, -1);
    traj.0.n_days() as c_int
}

/// # Safety
/// `traj` must be a live handle from [`revax_integrate`].
#[no_mangle]
pub unsafe extern "C" fn revax_trajectory_n_compartments(traj: *const RevaxTrajectory) -> c_int {
    let traj = deref_or!(traj, -1);
    traj.0.model().n_compartments() as c_int
}

/// Mean occupancy of one compartment (state order) at an integer day;
/// NaN on bad indices.
///
/// # Safety
/// `traj` must be a live handle from [`revax_integrate`].
#[no_mangle]
pub unsafe extern "C" fn revax_trajectory_value(
    traj: *const RevaxTrajectory,
    day: c_int,
    compartment: c_int,
) -> c_double {
    let traj = deref_or!(traj, f64::NAN);
    let t = &traj.0;
    if day < 0
        || day as usize >= t.n_days()
        || compartment < 0
        || compartment as usize >= t.model().n_compartments()
    {
        set_error("trajectory index out of range");
        return f64::NAN;
    }
    t.value(day as usize, compartment as usize)
}

/// # Safety
/// `traj` must come from [`revax_integrate`] and not already be freed.
#[no_mangle]
pub unsafe extern "C" fn revax_trajectory_free(traj: *mut RevaxTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

// ---------------------------------------------------------------------------
// fitting and draws

/// Run the configured Metropolis-Hastings fit. Blocking; may take minutes
/// at production draw counts.
///
/// # Safety
/// `config` and `obs` must be live handles.
#[no_mangle]
pub unsafe extern "C" fn revax_fit(
    config: *const RevaxConfig,
    obs: *const RevaxObservations,
) -> *mut RevaxDraws {
    let config = deref_or!(config, ptr::null_mut());
    let obs = deref_or!(obs, ptr::null_mut());
    let ctx = config.0.fit_context();
    match mh_sample(&obs.0, &ctx, &config.0.params, &config.0.sampler) {
        Ok(draws) => Box::into_raw(Box::new(RevaxDraws(draws))),
        Err(e) => {
            set_error(&e.to_string());
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `draws` must be a live handle from [`revax_fit`] or [`revax_draws_load`].
#[no_mangle]
pub unsafe extern "C" fn revax_draws_n(draws: *const RevaxDraws) -> c_int {
    let draws = deref_or!(draws, -1);
    draws.0.n() as c_int
}

/// Persist draws as CSV (one row per draw, all parameters, log posterior).
///
/// # Safety
/// `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn revax_draws_save(
    draws: *const RevaxDraws,
    path: *const c_char,
) -> RevaxStatus {
    let draws = deref_or!(draws, RevaxStatus::BadArgument);
    let Some(path) = path_from(path) else {
        return RevaxStatus::BadArgument;
    };
    match save_draws(&draws.0, path) {
        Ok(()) => RevaxStatus::Ok,
        Err(e) => fail(&e),
    }
}

/// Reload draws saved by [`revax_draws_save`]; the config supplies the
/// parameter layout.
///
/// # Safety
/// `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn revax_draws_load(
    path: *const c_char,
    config: *const RevaxConfig,
) -> *mut RevaxDraws {
    let config = deref_or!(config, ptr::null_mut());
    let Some(path) = path_from(path) else {
        return ptr::null_mut();
    };
    match load_draws(path, &config.0) {
        Ok(draws) => Box::into_raw(Box::new(RevaxDraws(draws))),
        Err(e) => {
            set_error(&e.to_string());
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `draws` must come from [`revax_fit`] or [`revax_draws_load`] and not
/// already be freed.
#[no_mangle]
pub unsafe extern "C" fn revax_draws_free(draws: *mut RevaxDraws) {
    if !draws.is_null() {
        drop(Box::from_raw(draws));
    }
}

/// Pooled pseudo-R^2 of the posterior-median trajectory against the data.
///
/// # Safety
/// All handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn revax_pseudo_r2(
    config: *const RevaxConfig,
    draws: *const RevaxDraws,
    obs: *const RevaxObservations,
    out: *mut c_double,
) -> RevaxStatus {
    let config = deref_or!(config, RevaxStatus::BadArgument);
    let draws = deref_or!(draws, RevaxStatus::BadArgument);
    let obs = deref_or!(obs, RevaxStatus::BadArgument);
    if out.is_null() {
        set_error("null output pointer");
        return RevaxStatus::BadArgument;
    }
    let ctx = config.0.fit_context();
    match pseudo_r2(&draws.0, &obs.0, &ctx, revax_core::cli::SUMMARY_DRAW_CAP) {
        Ok(r2) => {
            unsafe { *out = r2 };
            RevaxStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

// ---------------------------------------------------------------------------
// scenarios, evidence, densities

/// Run one canonical scenario (1-6) over the draws and write the per-draw
/// summary CSV to `out_csv`.
///
/// # Safety
/// `out_csv` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn revax_scenario_run(
    config: *const RevaxConfig,
    draws: *const RevaxDraws,
    scenario_id: c_int,
    threshold: c_double,
    out_csv: *const c_char,
) -> RevaxStatus {
    let config = deref_or!(config, RevaxStatus::BadArgument);
    let draws = deref_or!(draws, RevaxStatus::BadArgument);
    let Some(path) = path_from(out_csv) else {
        return RevaxStatus::BadArgument;
    };
    if !(0..=255).contains(&scenario_id) {
        set_error("scenario id outside 1..=6");
        return RevaxStatus::Validation;
    }
    let c = &config.0;
    let run = || -> Result<(), Error> {
        let scenario = c.scenarios.scenario(scenario_id as u8)?;
        let run = posterior_predict(
            &draws.0,
            &scenario,
            &c.fit_context(),
            threshold,
            c.summary_day,
            c.predictive_seed,
        )?;
        save_scenario_run(&run, path)
    };
    match run() {
        Ok(()) => RevaxStatus::Ok,
        Err(e) => fail(&e),
    }
}

/// Prior-predictive Monte Carlo log marginal likelihood of the configured
/// model on the observations.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn revax_log_marginal_likelihood(
    config: *const RevaxConfig,
    obs: *const RevaxObservations,
    out: *mut c_double,
) -> RevaxStatus {
    let config = deref_or!(config, RevaxStatus::BadArgument);
    let obs = deref_or!(obs, RevaxStatus::BadArgument);
    if out.is_null() {
        set_error("null output pointer");
        return RevaxStatus::BadArgument;
    }
    let c = &config.0;
    match log_marginal_likelihood(&obs.0, &c.fit_context(), &c.params, &c.evidence) {
        Ok(est) => {
            unsafe { *out = est.log_marginal };
            RevaxStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// `exp(log_ml_1 - log_ml_2)`.
#[no_mangle]
pub extern "C" fn revax_bayes_factor(log_ml_1: c_double, log_ml_2: c_double) -> c_double {
    revax_core::evidence::bayes_factor(log_ml_1, log_ml_2)
}

/// Squared Hellinger distance between two sample sets, KDE-smoothed on a
/// shared grid (`grid_points` <= 0 selects the default resolution).
///
/// # Safety
/// `a` and `b` must point to `n_a` and `n_b` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn revax_hellinger(
    a: *const c_double,
    n_a: c_int,
    b: *const c_double,
    n_b: c_int,
    grid_points: c_int,
    out: *mut c_double,
) -> RevaxStatus {
    if a.is_null() || b.is_null() || out.is_null() || n_a < 2 || n_b < 2 {
        set_error("hellinger needs two non-null samples of length >= 2");
        return RevaxStatus::BadArgument;
    }
    let a = std::slice::from_raw_parts(a, n_a as usize);
    let b = std::slice::from_raw_parts(b, n_b as usize);
    let points = if grid_points <= 1 {
        revax_core::density::DEFAULT_GRID_POINTS
    } else {
        grid_points as usize
    };
    match hellinger_from_samples(a, b, points) {
        Ok(h) => {
            *out = h;
            RevaxStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_codes_match_cli_exit_codes() {
        assert_eq!(status_of(Category::Config) as i32, 3);
        assert_eq!(status_of(Category::Io) as i32, 12);
    }
}
