//! Shared fixtures for unit tests.

use crate::defaults;
use crate::model::{ModelTag, ParameterSet, RateSchedule};

pub fn table2_m1_params() -> ParameterSet {
    defaults::parameters(ModelTag::M1)
}

pub fn table2_m2_params() -> ParameterSet {
    defaults::parameters(ModelTag::M2)
}

/// Parameters so small the dynamics are numerically frozen; useful for
/// constant-trajectory checks where schedules must stay strictly positive.
pub fn inert_params() -> ParameterSet {
    let tiny = 1e-300;
    ParameterSet {
        alpha: RateSchedule::constant(tiny).unwrap(),
        beta: tiny,
        gamma1: RateSchedule::constant(tiny).unwrap(),
        gamma2: tiny,
        phi: RateSchedule::constant(tiny).unwrap(),
        mu: 0.0,
        kappa: 1.0,
        eta: 0.0,
        zeta1: 0.0,
        zeta2: 0.0,
    }
}
