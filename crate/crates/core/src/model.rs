//! Compartment states, rate schedules, parameters and the right-hand sides
//! of the two reinfection models.
//!
//! Model 1 tracks a second susceptible pool fed by waned natural and vaccine
//! immunity (10 compartments). Model 2 lets recovered individuals reinfect
//! directly and returns waned immunity to the single susceptible pool
//! (9 compartments). Both systems only move individuals between compartments,
//! so the derivative components always sum to zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Transmission-type rates (`alpha`, and `phi` applied to `alpha`) are
/// expressed per 10,000 individuals per day; the bilinear terms scale by this
/// factor so parameter files carry the published per-10k values unchanged.
pub const CONTACT_SCALE: f64 = 1e-4;

/// Transient negative undershoot tolerated on state entries.
pub const STATE_TOLERANCE: f64 = -1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelTag {
    M1,
    M2,
}

impl ModelTag {
    pub fn n_compartments(self) -> usize {
        match self {
            ModelTag::M1 => 10,
            ModelTag::M2 => 9,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelTag::M1 => "M1",
            ModelTag::M2 => "M2",
        }
    }

    /// Compartment labels in state order.
    pub fn compartment_names(self) -> &'static [&'static str] {
        match self {
            ModelTag::M1 => &["S1", "E", "I", "RE", "RI", "D", "S2", "II", "RR", "V"],
            ModelTag::M2 => &["S", "E", "I", "RE", "RI", "D", "II", "RR", "V"],
        }
    }

    /// Index of a compartment label in this model's state order.
    pub fn index_of(self, name: &str) -> Option<usize> {
        let name = if self == ModelTag::M2 && name == "S1" { "S" } else { name };
        self.compartment_names().iter().position(|&n| n == name)
    }
}

/// Observable series fitted against daily counts. Susceptible, exposed and
/// recovered-after-exposure compartments stay latent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Infected,
    RecoveredInfected,
    Deaths,
    Reinfected,
    RecoveredReinfected,
    Vaccinated,
}

impl Observable {
    pub const ALL: [Observable; 6] = [
        Observable::Infected,
        Observable::RecoveredInfected,
        Observable::Deaths,
        Observable::Reinfected,
        Observable::RecoveredReinfected,
        Observable::Vaccinated,
    ];

    pub fn compartment_label(self) -> &'static str {
        match self {
            Observable::Infected => "I",
            Observable::RecoveredInfected => "RI",
            Observable::Deaths => "D",
            Observable::Reinfected => "II",
            Observable::RecoveredReinfected => "RR",
            Observable::Vaccinated => "V",
        }
    }

    /// Column name used in observation files and outputs.
    pub fn column_name(self) -> &'static str {
        match self {
            Observable::Infected => "infected",
            Observable::RecoveredInfected => "recovered",
            Observable::Deaths => "deaths",
            Observable::Reinfected => "reinfected",
            Observable::RecoveredReinfected => "recovered_reinfected",
            Observable::Vaccinated => "vaccinated",
        }
    }

    pub fn state_index(self, model: ModelTag) -> usize {
        model
            .index_of(self.compartment_label())
            .expect("observable exists in both models")
    }
}

/// Compartment occupancies of one model at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    model: ModelTag,
    values: Vec<f64>,
}

impl StateVector {
    pub fn new(model: ModelTag, values: Vec<f64>) -> Result<Self> {
        if values.len() != model.n_compartments() {
            return Err(Error::ModelMismatch {
                model: model.name(),
                expected: model.n_compartments(),
                got: values.len(),
            });
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < STATE_TOLERANCE {
                return Err(Error::InvalidState(format!(
                    "compartment {} = {v}",
                    model.compartment_names()[i]
                )));
            }
        }
        Ok(StateVector { model, values })
    }

    pub fn zeros(model: ModelTag) -> Self {
        StateVector {
            model,
            values: vec![0.0; model.n_compartments()],
        }
    }

    /// Derivative vectors may be negative; skip the nonnegativity check.
    pub(crate) fn from_derivative(model: ModelTag, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), model.n_compartments());
        StateVector { model, values }
    }

    pub fn model(&self) -> ModelTag {
        self.model
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.model.index_of(name).map(|i| self.values[i])
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Piecewise-constant rate over day breakpoints: `rates[i]` applies on
/// `[breakpoints[i-1], breakpoints[i])`, extended by the first and last rate
/// outside the breakpoint range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSchedule {
    breakpoints: Vec<f64>,
    rates: Vec<f64>,
}

impl RateSchedule {
    pub fn new(breakpoints: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if rates.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidSchedule(format!(
                "{} breakpoints require {} rates, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                rates.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSchedule(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidSchedule("non-finite breakpoint".into()));
        }
        if rates.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(Error::InvalidSchedule("rates must be positive".into()));
        }
        Ok(RateSchedule { breakpoints, rates })
    }

    /// Single-segment schedule with a constant rate.
    pub fn constant(rate: f64) -> Result<Self> {
        RateSchedule::new(Vec::new(), vec![rate])
    }

    /// Rate in effect at day `t` (left-closed, right-open intervals).
    pub fn rate_at(&self, t: f64) -> f64 {
        // partition_point returns the number of breakpoints <= t, which is
        // exactly the segment index for left-closed intervals.
        let idx = self.breakpoints.partition_point(|&b| b <= t);
        self.rates[idx]
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn n_segments(&self) -> usize {
        self.rates.len()
    }

    /// In-place rate replacement for hot sampler loops; values are validated
    /// by the prior support check rather than here.
    pub(crate) fn rates_mut(&mut self) -> &mut [f64] {
        &mut self.rates
    }

    /// Replace the rate values, keeping the breakpoints.
    pub fn with_rates(&self, rates: Vec<f64>) -> Result<Self> {
        RateSchedule::new(self.breakpoints.clone(), rates)
    }
}

/// All scalar rates plus the three piecewise schedules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub alpha: RateSchedule,
    pub beta: f64,
    pub gamma1: RateSchedule,
    pub gamma2: f64,
    pub phi: RateSchedule,
    pub mu: f64,
    pub kappa: f64,
    pub eta: f64,
    pub zeta1: f64,
    pub zeta2: f64,
}

impl ParameterSet {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta = {}", self.beta)));
        }
        if !(self.gamma2 > 0.0 && self.gamma2.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma2 = {}", self.gamma2)));
        }
        for (name, v) in [
            ("mu", self.mu),
            ("eta", self.eta),
            ("zeta1", self.zeta1),
            ("zeta2", self.zeta2),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {v}")));
            }
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::InvalidParameter(format!("kappa = {}", self.kappa)));
        }
        Ok(())
    }

    /// Rates in effect at day `t`, without any vaccination policy applied.
    pub fn at(&self, t: f64) -> FrozenRates {
        FrozenRates {
            alpha: self.alpha.rate_at(t),
            beta: self.beta,
            gamma1: self.gamma1.rate_at(t),
            gamma2: self.gamma2,
            phi: self.phi.rate_at(t),
            mu: self.mu,
            kappa: self.kappa,
            eta: self.eta,
            zeta1: self.zeta1,
            zeta2: self.zeta2,
        }
    }
}

/// When vaccination switches on and with what efficacy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VaccinationPolicy {
    /// Day at which the vaccination rate switches from 0 to `mu`.
    pub start_day: f64,
    /// Optional replacement for the fitted vaccine efficacy.
    pub efficacy_override: Option<f64>,
}

impl VaccinationPolicy {
    pub fn new(start_day: f64, efficacy_override: Option<f64>) -> Self {
        VaccinationPolicy {
            start_day,
            efficacy_override,
        }
    }

    /// Apply the policy to already-frozen rates at time `t`.
    pub fn apply(&self, mut rates: FrozenRates, t: f64) -> FrozenRates {
        if t < self.start_day {
            rates.mu = 0.0;
        }
        if let Some(kappa) = self.efficacy_override {
            rates.kappa = kappa;
        }
        rates
    }
}

/// Scalar snapshot of all rates at one instant; the derivative kernels work
/// on this so a whole integration step inside one schedule segment reuses a
/// single evaluation.
#[derive(Debug, Clone, Copy)]
pub struct FrozenRates {
    pub alpha: f64,
    pub beta: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub phi: f64,
    pub mu: f64,
    pub kappa: f64,
    pub eta: f64,
    pub zeta1: f64,
    pub zeta2: f64,
}

// Model 1 state order: S1, E, I, RE, RI, D, S2, II, RR, V.
pub(crate) fn derivative_m1(y: &[f64], r: &FrozenRates, dy: &mut [f64]) {
    let (s1, e, i, re, ri, _d, s2, ii, _rr, v) = (
        y[0], y[1], y[2], y[3], y[4], y[5], y[6], y[7], y[8], y[9],
    );
    let a = r.alpha * CONTACT_SCALE;
    let exposure = a * s1 * e;
    let reinfection = r.phi * a * s2 * e;
    let vaccine_waning = r.zeta2 * (1.0 - r.kappa) * v;

    dy[0] = -exposure - r.mu * s1;
    dy[1] = exposure - (r.beta + r.gamma1 + r.mu) * e;
    dy[2] = r.beta * e - (r.gamma1 + r.eta) * i;
    dy[3] = r.gamma1 * e - r.mu * re;
    dy[4] = r.gamma1 * i - r.zeta1 * ri;
    dy[5] = r.eta * i;
    dy[6] = r.zeta1 * ri - reinfection + vaccine_waning;
    dy[7] = reinfection - r.gamma2 * ii;
    dy[8] = r.gamma2 * ii;
    dy[9] = r.mu * (s1 + e + re) - vaccine_waning;
}

// Model 2 state order: S, E, I, RE, RI, D, II, RR, V.
pub(crate) fn derivative_m2(y: &[f64], r: &FrozenRates, dy: &mut [f64]) {
    let (s, e, i, re, ri, _d, ii, rr, v) = (
        y[0], y[1], y[2], y[3], y[4], y[5], y[6], y[7], y[8],
    );
    let a = r.alpha * CONTACT_SCALE;
    let exposure = a * s * e;
    let leak = a * (1.0 - r.kappa) * v * e;
    let reinfection = a * r.phi * e * ri;

    dy[0] = -exposure - r.mu * s + r.zeta1 * rr + r.zeta2 * v;
    dy[1] = exposure - (r.beta + r.gamma1 + r.mu) * e + leak;
    dy[2] = r.beta * e - (r.gamma1 + r.eta) * i;
    dy[3] = r.gamma1 * e - r.mu * re;
    dy[4] = r.gamma1 * i - reinfection;
    dy[5] = r.eta * i;
    dy[6] = reinfection - r.gamma2 * ii;
    dy[7] = r.gamma2 * ii - r.zeta1 * rr;
    dy[8] = r.mu * (s + e + re) - r.zeta2 * v - leak;
}

pub(crate) fn derivative(model: ModelTag, y: &[f64], r: &FrozenRates, dy: &mut [f64]) {
    match model {
        ModelTag::M1 => derivative_m1(y, r, dy),
        ModelTag::M2 => derivative_m2(y, r, dy),
    }
}

fn rhs(model: ModelTag, state: &StateVector, params: &ParameterSet, t: f64) -> Result<StateVector> {
    if state.model() != model {
        return Err(Error::ModelMismatch {
            model: model.name(),
            expected: model.n_compartments(),
            got: state.values().len(),
        });
    }
    params.validate()?;
    let rates = params.at(t);
    let mut dy = vec![0.0; model.n_compartments()];
    derivative(model, state.values(), &rates, &mut dy);
    Ok(StateVector::from_derivative(model, dy))
}

/// Derivatives of the 10-compartment model at day `t`.
pub fn rhs_model1(state: &StateVector, params: &ParameterSet, t: f64) -> Result<StateVector> {
    rhs(ModelTag::M1, state, params, t)
}

/// Derivatives of the 9-compartment model at day `t`.
pub fn rhs_model2(state: &StateVector, params: &ParameterSet, t: f64) -> Result<StateVector> {
    rhs(ModelTag::M2, state, params, t)
}
