//! Bayesian toolkit for two reinfection-aware epidemic models: fixed-step
//! integration of the compartmental systems, Metropolis-Hastings calibration
//! against daily count data, posterior-predictive vaccine-timing scenarios,
//! kernel-density Hellinger comparisons and Bayes-factor model selection.

pub mod cli;
pub mod defaults;
pub mod density;
pub mod error;
pub mod evidence;
pub mod inference;
pub mod integrate;
pub mod io;
pub mod model;
pub mod predictive;
pub mod stats;

#[cfg(test)]
pub(crate) mod test_support;

pub use error::{Category, Error, Result};
pub use model::{ModelTag, Observable, ParameterSet, RateSchedule, StateVector, VaccinationPolicy};
