//! Exercises the C ABI end to end from Rust: handle lifecycle, status
//! codes, error messages and a miniature fit-to-scenario pipeline.

use std::ffi::{CStr, CString};

use revax_ffi::*;

fn c_path(path: &std::path::Path) -> CString {
    CString::new(path.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe {
        CStr::from_ptr(revax_last_error_message())
            .to_string_lossy()
            .into_owned()
    }
}

#[test]
fn config_default_and_echo() {
    let config = revax_config_default(1);
    assert!(!config.is_null());
    let toml = unsafe { revax_config_to_toml(config) };
    assert!(!toml.is_null());
    let text = unsafe { CStr::from_ptr(toml) }.to_str().unwrap().to_string();
    assert!(text.contains("model = \"M1\""));
    assert!(text.contains("bed_threshold = 3134.0"));
    unsafe {
        revax_string_free(toml);
        revax_config_free(config);
    }
    assert!(revax_config_default(3).is_null());
    assert!(last_error().contains("model"));
}

#[test]
fn trajectory_access_and_bounds() {
    let config = revax_config_default(1);
    let traj = unsafe { revax_integrate(config) };
    assert!(!traj.is_null());
    unsafe {
        assert_eq!(revax_trajectory_n_days(traj), 551);
        assert_eq!(revax_trajectory_n_compartments(traj), 10);
        let s1_day0 = revax_trajectory_value(traj, 0, 0);
        assert_eq!(s1_day0, 2_695_122.0);
        assert!(revax_trajectory_value(traj, 551, 0).is_nan());
        assert!(revax_trajectory_value(traj, 0, 10).is_nan());
    }
    unsafe {
        revax_trajectory_free(traj);
        revax_config_free(config);
    }
}

#[test]
fn missing_file_sets_io_status_and_message() {
    let path = CString::new("/definitely/not/here.csv").unwrap();
    let obs = unsafe { revax_observations_load(path.as_ptr()) };
    assert!(obs.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn hellinger_over_raw_samples() {
    let a: Vec<f64> = (0..200).map(|i| (i as f64) * 0.01).collect();
    let b: Vec<f64> = (0..200).map(|i| 50.0 + (i as f64) * 0.01).collect();
    let mut h = f64::NAN;
    let status = unsafe {
        revax_hellinger(a.as_ptr(), a.len() as i32, b.as_ptr(), b.len() as i32, 0, &mut h)
    };
    assert_eq!(status, RevaxStatus::Ok);
    assert!((h - 1.0).abs() < 1e-9, "disjoint H^2 = {h}");

    let status = unsafe {
        revax_hellinger(a.as_ptr(), a.len() as i32, a.as_ptr(), a.len() as i32, 0, &mut h)
    };
    assert_eq!(status, RevaxStatus::Ok);
    assert!(h.abs() < 1e-12, "identical H^2 = {h}");

    let status =
        unsafe { revax_hellinger(std::ptr::null(), 0, b.as_ptr(), b.len() as i32, 0, &mut h) };
    assert_eq!(status, RevaxStatus::BadArgument);
}

#[test]
fn mini_pipeline_fit_save_load_scenario() {
    let dir = tempfile::tempdir().unwrap();

    // small synthetic dataset via the core library
    let config_text = "horizon = 80\n\
                       vaccination_start = 40\n\
                       [alpha]\nbreakpoints = [6]\nrates = [0.00286, 0.00084]\n\
                       [gamma1]\nbreakpoints = []\nrates = [0.09097]\n\
                       [phi]\nbreakpoints = []\nrates = [0.00538]\n\
                       [sampler]\nn_draws = 60\ntuning_chains = 2\ntuning_iters = 60\nseed = 3\n\
                       [scenarios]\nbaseline_start = 40\nearly_start = 20\nlate_start = 60\nsummary_day = 70\n";
    let config_path = dir.path().join("config.toml");
    std::fs::write(&config_path, config_text).unwrap();

    {
        use revax_core::io::{save_observations, StudyConfig};
        use revax_core::predictive::synthesize_observations;
        let c = StudyConfig::from_toml_str(config_text).unwrap();
        let obs = synthesize_observations(&c.fit_context(), &c.params, 9, 10).unwrap();
        save_observations(&obs, dir.path().join("obs.csv")).unwrap();
    }

    unsafe {
        let config = revax_config_load(c_path(&config_path).as_ptr());
        assert!(!config.is_null(), "{}", last_error());
        let obs = revax_observations_load(c_path(&dir.path().join("obs.csv")).as_ptr());
        assert!(!obs.is_null(), "{}", last_error());
        assert_eq!(revax_observations_n_days(obs), 81);

        let draws = revax_fit(config, obs);
        assert!(!draws.is_null(), "{}", last_error());
        assert_eq!(revax_draws_n(draws), 60);

        let mut r2 = f64::NAN;
        assert_eq!(revax_pseudo_r2(config, draws, obs, &mut r2), RevaxStatus::Ok);
        assert!(r2 > 0.9, "pseudo-R2 {r2}");

        let draws_path = c_path(&dir.path().join("draws.csv"));
        assert_eq!(revax_draws_save(draws, draws_path.as_ptr()), RevaxStatus::Ok);
        let reloaded = revax_draws_load(draws_path.as_ptr(), config);
        assert!(!reloaded.is_null(), "{}", last_error());
        assert_eq!(revax_draws_n(reloaded), 60);

        let scenario_csv = c_path(&dir.path().join("scenario_4.csv"));
        let status = revax_scenario_run(config, reloaded, 4, 3134.0, scenario_csv.as_ptr());
        assert_eq!(status, RevaxStatus::Ok, "{}", last_error());
        assert!(dir.path().join("scenario_4.csv").exists());

        let mut log_ml = f64::NAN;
        // tiny draw budget just to exercise the code path
        let status = revax_log_marginal_likelihood(config, obs, &mut log_ml);
        assert_eq!(status, RevaxStatus::Ok, "{}", last_error());
        assert!(log_ml.is_finite());
        assert_eq!(revax_bayes_factor(log_ml, log_ml), 1.0);

        revax_draws_free(reloaded);
        revax_draws_free(draws);
        revax_observations_free(obs);
        revax_config_free(config);
    }
}
