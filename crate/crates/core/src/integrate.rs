//! Fixed-step fourth-order Runge-Kutta integration producing mean
//! trajectories on a daily grid.
//!
//! Steps never straddle a rate-schedule breakpoint or the vaccination start
//! day: each day is split at any interior discontinuity and every
//! sub-interval is integrated with rates frozen at its left endpoint, which
//! keeps the classical order on each smooth piece. An extra channel
//! accumulates the E-to-I inflow so cumulative infections are available
//! without post-hoc quadrature.

use crate::error::{Error, Result};
use crate::model::{
    derivative, FrozenRates, ModelTag, Observable, ParameterSet, StateVector, VaccinationPolicy,
};

/// Default integration step in days.
pub const DEFAULT_STEP: f64 = 0.1;

/// Largest negative excursion tolerated before integration aborts.
pub const INSTABILITY_FLOOR: f64 = -1e-6;

/// Mean compartment values on the daily grid `0..=horizon`.
#[derive(Debug, Clone)]
pub struct MeanTrajectory {
    model: ModelTag,
    horizon: usize,
    /// Row-major `(horizon + 1) x n_compartments`, clamped to be nonnegative.
    states: Vec<f64>,
    /// `I(0)` plus the integral of the infection inflow up to each day.
    cumulative_infections: Vec<f64>,
}

impl MeanTrajectory {
    /// Minimal buffer for reuse through [`integrate_into`], which reshapes it.
    pub fn reusable(model: ModelTag) -> Self {
        MeanTrajectory::empty(model, 1)
    }

    fn empty(model: ModelTag, horizon: usize) -> Self {
        MeanTrajectory {
            model,
            horizon,
            states: vec![0.0; (horizon + 1) * model.n_compartments()],
            cumulative_infections: vec![0.0; horizon + 1],
        }
    }

    pub fn model(&self) -> ModelTag {
        self.model
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_days(&self) -> usize {
        self.horizon + 1
    }

    /// Compartment values at an integer day.
    pub fn state_at(&self, day: usize) -> &[f64] {
        let n = self.model.n_compartments();
        &self.states[day * n..(day + 1) * n]
    }

    pub fn value(&self, day: usize, compartment: usize) -> f64 {
        self.state_at(day)[compartment]
    }

    pub fn observable(&self, series: Observable, day: usize) -> f64 {
        self.value(day, series.state_index(self.model))
    }

    pub fn series(&self, series: Observable) -> Vec<f64> {
        let idx = series.state_index(self.model);
        (0..self.n_days()).map(|d| self.value(d, idx)).collect()
    }

    pub fn cumulative_infected(&self, day: usize) -> f64 {
        self.cumulative_infections[day]
    }

    pub fn total_at(&self, day: usize) -> f64 {
        self.state_at(day).iter().sum()
    }
}

/// Maximum augmented width: 10 compartments plus the cumulative channel.
const MAX_WIDTH: usize = 11;

struct Stepper<'a> {
    model: ModelTag,
    width: usize,
    params: &'a ParameterSet,
    policy: VaccinationPolicy,
    y: [f64; MAX_WIDTH],
}

impl<'a> Stepper<'a> {
    fn derive(&self, rates: &FrozenRates, y: &[f64; MAX_WIDTH], dy: &mut [f64; MAX_WIDTH]) {
        let n = self.width - 1;
        derivative(self.model, &y[..n], rates, &mut dy[..n]);
        // infection inflow: the beta*E transfer feeding I (E is index 1 in
        // both state layouts)
        dy[n] = rates.beta * y[1];
    }

    /// Advance from `t0` to `t1` with rates frozen at `t0`, using uniform
    /// steps no longer than `max_step`.
    fn advance(&mut self, t0: f64, t1: f64, max_step: f64) -> Result<()> {
        let span = t1 - t0;
        if span <= 0.0 {
            return Ok(());
        }
        let n_steps = (span / max_step - 1e-9).ceil().max(1.0) as usize;
        let h = span / n_steps as f64;
        let rates = self.policy.apply(self.params.at(t0), t0);

        let mut k1 = [0.0; MAX_WIDTH];
        let mut k2 = [0.0; MAX_WIDTH];
        let mut k3 = [0.0; MAX_WIDTH];
        let mut k4 = [0.0; MAX_WIDTH];
        let mut tmp = [0.0; MAX_WIDTH];

        for step in 0..n_steps {
            self.derive(&rates, &self.y, &mut k1);
            for i in 0..self.width {
                tmp[i] = self.y[i] + 0.5 * h * k1[i];
            }
            self.derive(&rates, &tmp, &mut k2);
            for i in 0..self.width {
                tmp[i] = self.y[i] + 0.5 * h * k2[i];
            }
            self.derive(&rates, &tmp, &mut k3);
            for i in 0..self.width {
                tmp[i] = self.y[i] + h * k3[i];
            }
            self.derive(&rates, &tmp, &mut k4);
            for i in 0..self.width {
                self.y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }

            for i in 0..self.width - 1 {
                let v = self.y[i];
                // catches NaN and anything below the floor
                if v.is_nan() || v < INSTABILITY_FLOOR {
                    return Err(Error::Instability {
                        day: t0 + (step + 1) as f64 * h,
                        compartment: self.model.compartment_names()[i],
                        value: v,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Integrate with the default 0.1-day step.
pub fn integrate(
    model: ModelTag,
    initial: &StateVector,
    params: &ParameterSet,
    policy: VaccinationPolicy,
    horizon: usize,
) -> Result<MeanTrajectory> {
    integrate_with_step(model, initial, params, policy, horizon, DEFAULT_STEP)
}

pub fn integrate_with_step(
    model: ModelTag,
    initial: &StateVector,
    params: &ParameterSet,
    policy: VaccinationPolicy,
    horizon: usize,
    step: f64,
) -> Result<MeanTrajectory> {
    let mut traj = MeanTrajectory::empty(model, horizon);
    integrate_into(model, initial, params, policy, horizon, step, &mut traj)?;
    Ok(traj)
}

/// Integrate into a reusable trajectory buffer (reshaped as needed).
pub fn integrate_into(
    model: ModelTag,
    initial: &StateVector,
    params: &ParameterSet,
    policy: VaccinationPolicy,
    horizon: usize,
    step: f64,
    traj: &mut MeanTrajectory,
) -> Result<()> {
    if horizon < 1 {
        return Err(Error::Validation("horizon must be at least 1 day".into()));
    }
    if initial.model() != model {
        return Err(Error::ModelMismatch {
            model: model.name(),
            expected: model.n_compartments(),
            got: initial.values().len(),
        });
    }
    params.validate()?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Validation(format!("step must be positive, got {step}")));
    }
    if !(policy.start_day >= 0.0 && policy.start_day <= horizon as f64) {
        return Err(Error::Validation(format!(
            "vaccination start day {} outside [0, {horizon}]",
            policy.start_day
        )));
    }
    if let Some(kappa) = policy.efficacy_override {
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(Error::Validation(format!(
                "efficacy override {kappa} outside (0, 1]"
            )));
        }
    }

    let n = model.n_compartments();
    traj.model = model;
    traj.horizon = horizon;
    traj.states.clear();
    traj.states.resize((horizon + 1) * n, 0.0);
    traj.cumulative_infections.clear();
    traj.cumulative_infections.resize(horizon + 1, 0.0);

    let mut stepper = Stepper {
        model,
        width: n + 1,
        params,
        policy,
        y: [0.0; MAX_WIDTH],
    };
    stepper.y[..n].copy_from_slice(initial.values());
    stepper.y[n] = initial.values()[model.index_of("I").unwrap()];

    // In-day discontinuities: schedule breakpoints plus the vaccination
    // switch. Whole days always start a fresh sub-interval.
    let mut cuts: Vec<f64> = params
        .alpha
        .breakpoints()
        .iter()
        .chain(params.gamma1.breakpoints())
        .chain(params.phi.breakpoints())
        .copied()
        .chain(std::iter::once(policy.start_day))
        .filter(|b| b.fract() != 0.0 && *b > 0.0 && *b < horizon as f64)
        .collect();
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup();

    traj.cumulative_infections[0] = stepper.y[n];
    clamp_row(&mut traj.states, 0, n, &stepper.y);

    for day in 0..horizon {
        let t0 = day as f64;
        let t1 = (day + 1) as f64;
        let mut start = t0;
        for &cut in cuts.iter().filter(|c| **c > t0 && **c < t1) {
            stepper.advance(start, cut, step)?;
            start = cut;
        }
        stepper.advance(start, t1, step)?;
        traj.cumulative_infections[day + 1] = stepper.y[n];
        clamp_row(&mut traj.states, day + 1, n, &stepper.y);
    }
    Ok(())
}

fn clamp_row(states: &mut [f64], day: usize, n: usize, y: &[f64; MAX_WIDTH]) {
    for i in 0..n {
        states[day * n + i] = y[i].max(0.0);
    }
}
