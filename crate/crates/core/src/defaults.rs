//! Built-in study defaults for the Qatar COVID-19 window
//! (day 0 = February 28, 2020; 550-day horizon).
//!
//! Scalar rates and initial conditions follow the published estimates.
//! Intervention dates are not part of the published tables; the breakpoint
//! days below are configuration defaults chosen to reproduce the reported
//! wave structure, and can be overridden in any config file.

use crate::model::{ModelTag, ParameterSet, RateSchedule, StateVector};

pub const HORIZON: usize = 550;
pub const BED_THRESHOLD: f64 = 3134.0;
pub const VACCINE_START_DAY: f64 = 380.0;
pub const EARLY_VACCINE_DAY: f64 = 200.0;
pub const LATE_VACCINE_DAY: f64 = 450.0;
pub const SUMMARY_DAY: usize = 540;
pub const KAPPA: f64 = 0.94;

// Initial conditions (population of Qatar; exposed seed from prior work).
pub const S1_0: f64 = 2_695_122.0;
pub const S2_0: f64 = 2_695_122.0 / 6.0;
pub const E_0: f64 = 5.0;
pub const I_0: f64 = 1.0;

/// Intervention days for the transmission-rate schedule (10 segments).
pub const ALPHA_BREAKPOINTS: [f64; 9] =
    [4.0, 45.0, 117.0, 318.0, 358.0, 410.0, 450.0, 498.0, 528.0];

/// Recovery-rate change days (4 segments).
pub const GAMMA1_BREAKPOINTS: [f64; 3] = [45.0, 124.0, 472.0];

/// Reinfection-rate change days (4 segments).
pub const PHI_BREAKPOINTS: [f64; 3] = [290.0, 360.0, 543.0];

pub const ALPHA_M1: [f64; 10] = [
    0.00286, 0.00084, 0.00091, 0.00076, 0.00110, 0.00089, 0.00086, 0.00097, 0.00112, 0.00132,
];
pub const GAMMA1_M1: [f64; 4] = [0.09097, 0.13564, 0.14758, 0.11333];
pub const PHI_M1: [f64; 4] = [0.00538, 0.01187, 0.02213, 0.00740];
pub const BETA_M1: f64 = 0.06988;
pub const GAMMA2_M1: f64 = 0.14295;
pub const MU_M1: f64 = 0.00460;
pub const ETA_M1: f64 = 0.00021;
pub const ZETA1_M1: f64 = 0.00202;
pub const ZETA2_M1: f64 = 0.00119;

pub const ALPHA_M2: [f64; 10] = [
    0.00314, 0.00089, 0.00089, 0.00077, 0.00110, 0.00090, 0.00087, 0.00098, 0.00114, 0.00135,
];
pub const GAMMA1_M2: [f64; 4] = [0.11527, 0.13595, 0.15138, 0.11501];
pub const PHI_M2: [f64; 4] = [0.01885, 0.01978, 0.02315, 0.01149];
pub const BETA_M2: f64 = 0.07270;
pub const GAMMA2_M2: f64 = 0.14286;
pub const MU_M2: f64 = 0.00462;
pub const ETA_M2: f64 = 0.00021;
pub const ZETA1_M2: f64 = 0.05374;
pub const ZETA2_M2: f64 = 0.00359;

/// Published mean parameter estimates for the given model, with the default
/// breakpoint days.
pub fn parameters(model: ModelTag) -> ParameterSet {
    match model {
        ModelTag::M1 => ParameterSet {
            alpha: RateSchedule::new(ALPHA_BREAKPOINTS.to_vec(), ALPHA_M1.to_vec()).unwrap(),
            beta: BETA_M1,
            gamma1: RateSchedule::new(GAMMA1_BREAKPOINTS.to_vec(), GAMMA1_M1.to_vec()).unwrap(),
            gamma2: GAMMA2_M1,
            phi: RateSchedule::new(PHI_BREAKPOINTS.to_vec(), PHI_M1.to_vec()).unwrap(),
            mu: MU_M1,
            kappa: KAPPA,
            eta: ETA_M1,
            zeta1: ZETA1_M1,
            zeta2: ZETA2_M1,
        },
        ModelTag::M2 => ParameterSet {
            alpha: RateSchedule::new(ALPHA_BREAKPOINTS.to_vec(), ALPHA_M2.to_vec()).unwrap(),
            beta: BETA_M2,
            gamma1: RateSchedule::new(GAMMA1_BREAKPOINTS.to_vec(), GAMMA1_M2.to_vec()).unwrap(),
            gamma2: GAMMA2_M2,
            phi: RateSchedule::new(PHI_BREAKPOINTS.to_vec(), PHI_M2.to_vec()).unwrap(),
            mu: MU_M2,
            kappa: KAPPA,
            eta: ETA_M2,
            zeta1: ZETA1_M2,
            zeta2: ZETA2_M2,
        },
    }
}

/// Day-0 state for the given model.
pub fn initial_state(model: ModelTag) -> StateVector {
    let values = match model {
        // S1, E, I, RE, RI, D, S2, II, RR, V
        ModelTag::M1 => vec![S1_0, E_0, I_0, 0.0, 0.0, 0.0, S2_0, 0.0, 0.0, 0.0],
        // S, E, I, RE, RI, D, II, RR, V
        ModelTag::M2 => vec![S1_0, E_0, I_0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    };
    StateVector::new(model, values).unwrap()
}
