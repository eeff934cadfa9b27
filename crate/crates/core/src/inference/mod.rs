//! Priors, Poisson likelihood, Metropolis-Hastings sampling and fit
//! diagnostics.
//!
//! The sampled parameter vector covers every piecewise rate plus the scalar
//! rates; vaccine efficacy and the reinfection recovery rate stay fixed
//! unless switched on in the sampler config. All rates carry independent
//! Exp(1) priors; efficacy, when sampled, carries a flat Beta(1,1).

mod sampler;

pub use sampler::{mh_sample, SamplerConfig};

use crate::error::{Error, Result};
use crate::integrate::{integrate_into, MeanTrajectory, DEFAULT_STEP};
use crate::model::{ModelTag, Observable, ParameterSet, StateVector, VaccinationPolicy};
use crate::stats::{poisson_log_pmf, quantile};

/// Mean-count floor used in place of nonpositive trajectory values.
pub const LAMBDA_FLOOR: f64 = 1e-10;

/// Daily observed counts for the six fitted series, with per-day masks.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSeries {
    n_days: usize,
    /// Indexed by [`Observable::ALL`] order; `None` marks an unrecorded day.
    values: [Vec<Option<u64>>; 6],
}

impl ObservationSeries {
    /// Fully masked series over `0..=horizon`.
    pub fn empty(horizon: usize) -> Self {
        ObservationSeries {
            n_days: horizon + 1,
            values: std::array::from_fn(|_| vec![None; horizon + 1]),
        }
    }

    pub fn from_columns(columns: [Vec<Option<u64>>; 6]) -> Result<Self> {
        let n_days = columns[0].len();
        if n_days == 0 {
            return Err(Error::Validation("observation series is empty".into()));
        }
        if columns.iter().any(|c| c.len() != n_days) {
            return Err(Error::Validation(
                "observation columns have unequal lengths".into(),
            ));
        }
        let obs = ObservationSeries {
            n_days,
            values: columns,
        };
        obs.validate()?;
        Ok(obs)
    }

    /// Cumulative columns must be non-decreasing across their observed days.
    fn validate(&self) -> Result<()> {
        for series in [
            Observable::RecoveredInfected,
            Observable::Deaths,
            Observable::RecoveredReinfected,
            Observable::Vaccinated,
        ] {
            let col = &self.values[series_index(series)];
            let mut last: Option<(usize, u64)> = None;
            for (day, v) in col.iter().enumerate() {
                if let Some(v) = v {
                    if let Some((prev_day, prev)) = last {
                        if *v < prev {
                            return Err(Error::Validation(format!(
                                "{} decreases from {prev} (day {prev_day}) to {v} (day {day})",
                                series.column_name()
                            )));
                        }
                    }
                    last = Some((day, *v));
                }
            }
        }
        Ok(())
    }

    pub fn n_days(&self) -> usize {
        self.n_days
    }

    pub fn horizon(&self) -> usize {
        self.n_days - 1
    }

    pub fn get(&self, series: Observable, day: usize) -> Option<u64> {
        self.values[series_index(series)][day]
    }

    pub fn set(&mut self, series: Observable, day: usize, value: Option<u64>) {
        self.values[series_index(series)][day] = value;
    }

    /// Mask every day of `series` strictly before `day`.
    pub fn mask_before(&mut self, series: Observable, day: usize) {
        for d in 0..day.min(self.n_days) {
            self.values[series_index(series)][d] = None;
        }
    }

    pub fn mask_series(&mut self, series: Observable) {
        self.values[series_index(series)].iter_mut().for_each(|v| *v = None);
    }

    pub fn n_observed(&self) -> usize {
        self.values
            .iter()
            .map(|c| c.iter().filter(|v| v.is_some()).count())
            .sum()
    }
}

pub(crate) fn series_index(series: Observable) -> usize {
    Observable::ALL.iter().position(|&s| s == series).unwrap()
}

/// Which parameters the sampler moves, and how a flat sampled vector maps
/// onto a [`ParameterSet`].
#[derive(Debug, Clone)]
pub struct ParameterSpace {
    template: ParameterSet,
    sample_gamma2: bool,
    sample_kappa: bool,
    names: Vec<String>,
}

impl ParameterSpace {
    pub fn new(template: ParameterSet, sample_gamma2: bool, sample_kappa: bool) -> Self {
        let mut names = Vec::new();
        for i in 0..template.alpha.n_segments() {
            names.push(format!("alpha_{i}"));
        }
        names.push("beta".into());
        for j in 0..template.gamma1.n_segments() {
            names.push(format!("gamma1_{j}"));
        }
        for k in 0..template.phi.n_segments() {
            names.push(format!("phi_{k}"));
        }
        names.push("mu".into());
        names.push("eta".into());
        names.push("zeta1".into());
        names.push("zeta2".into());
        if sample_gamma2 {
            names.push("gamma2".into());
        }
        if sample_kappa {
            names.push("kappa".into());
        }
        ParameterSpace {
            template,
            sample_gamma2,
            sample_kappa,
            names,
        }
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn template(&self) -> &ParameterSet {
        &self.template
    }

    pub fn sample_kappa(&self) -> bool {
        self.sample_kappa
    }

    /// Index of the (optional) efficacy component; it is the only sampled
    /// component that is not a nonnegative rate.
    pub fn kappa_index(&self) -> Option<usize> {
        self.sample_kappa.then(|| self.names.len() - 1)
    }

    /// Natural-scale sampled values of `params`, in component order.
    pub fn pack(&self, params: &ParameterSet) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.extend_from_slice(params.alpha.rates());
        v.push(params.beta);
        v.extend_from_slice(params.gamma1.rates());
        v.extend_from_slice(params.phi.rates());
        v.push(params.mu);
        v.push(params.eta);
        v.push(params.zeta1);
        v.push(params.zeta2);
        if self.sample_gamma2 {
            v.push(params.gamma2);
        }
        if self.sample_kappa {
            v.push(params.kappa);
        }
        v
    }

    /// Write natural-scale sampled values into `params` (breakpoints and
    /// fixed values come from the template).
    pub fn apply(&self, values: &[f64], params: &mut ParameterSet) {
        debug_assert_eq!(values.len(), self.dim());
        let mut i = 0;
        let na = params.alpha.n_segments();
        params.alpha.rates_mut().copy_from_slice(&values[i..i + na]);
        i += na;
        params.beta = values[i];
        i += 1;
        let ng = params.gamma1.n_segments();
        params.gamma1.rates_mut().copy_from_slice(&values[i..i + ng]);
        i += ng;
        let np = params.phi.n_segments();
        params.phi.rates_mut().copy_from_slice(&values[i..i + np]);
        i += np;
        params.mu = values[i];
        params.eta = values[i + 1];
        params.zeta1 = values[i + 2];
        params.zeta2 = values[i + 3];
        i += 4;
        if self.sample_gamma2 {
            params.gamma2 = values[i];
            i += 1;
        }
        if self.sample_kappa {
            params.kappa = values[i];
        }
    }

    pub fn unpack(&self, values: &[f64]) -> ParameterSet {
        let mut params = self.template.clone();
        self.apply(values, &mut params);
        params
    }

    /// Joint log prior over the sampled components: Exp(1) on every rate,
    /// Beta(1,1) on efficacy when sampled.
    pub fn log_prior_values(&self, values: &[f64]) -> f64 {
        let kappa_idx = self.kappa_index();
        let mut lp = 0.0;
        for (i, &x) in values.iter().enumerate() {
            if Some(i) == kappa_idx {
                if !(0.0..=1.0).contains(&x) {
                    return f64::NEG_INFINITY;
                }
                // Beta(1,1) log-density is 0 on the unit interval
            } else {
                if x < 0.0 || !x.is_finite() {
                    return f64::NEG_INFINITY;
                }
                lp -= x;
            }
        }
        lp
    }
}

/// Log prior density of a full parameter set under the space's priors.
pub fn log_prior(params: &ParameterSet, space: &ParameterSpace) -> f64 {
    space.log_prior_values(&space.pack(params))
}

/// Everything needed to turn a parameter set into a fitted mean trajectory.
#[derive(Debug, Clone)]
pub struct FitContext {
    pub model: ModelTag,
    pub initial: StateVector,
    pub policy: VaccinationPolicy,
    pub horizon: usize,
    pub step: f64,
}

impl FitContext {
    pub fn new(
        model: ModelTag,
        initial: StateVector,
        policy: VaccinationPolicy,
        horizon: usize,
    ) -> Self {
        FitContext {
            model,
            initial,
            policy,
            horizon,
            step: DEFAULT_STEP,
        }
    }
}

/// Reusable likelihood evaluator; keeps the trajectory buffer alive across
/// calls so sampler sweeps do not reallocate.
pub struct LikelihoodEvaluator<'a> {
    ctx: &'a FitContext,
    obs: &'a ObservationSeries,
    traj: MeanTrajectory,
    n_observed: usize,
}

impl<'a> LikelihoodEvaluator<'a> {
    pub fn new(ctx: &'a FitContext, obs: &'a ObservationSeries) -> Result<Self> {
        if obs.horizon() > ctx.horizon {
            return Err(Error::Validation(format!(
                "observations run to day {} beyond the integration horizon {}",
                obs.horizon(),
                ctx.horizon
            )));
        }
        let traj = MeanTrajectory::reusable(ctx.model);
        Ok(LikelihoodEvaluator {
            ctx,
            obs,
            traj,
            n_observed: obs.n_observed(),
        })
    }

    /// Poisson log likelihood; `Err` only on invalid inputs, instability is
    /// reported as `Ok(-inf)` so samplers treat it as a rejected region.
    pub fn eval(&mut self, params: &ParameterSet) -> Result<f64> {
        if self.n_observed == 0 {
            return Ok(0.0);
        }
        match integrate_into(
            self.ctx.model,
            &self.ctx.initial,
            params,
            self.ctx.policy,
            self.ctx.horizon,
            self.ctx.step,
            &mut self.traj,
        ) {
            Ok(()) => {}
            Err(Error::Instability { .. }) => return Ok(f64::NEG_INFINITY),
            Err(e) => return Err(e),
        }
        Ok(log_likelihood_of_trajectory(&self.traj, self.obs))
    }
}

/// Poisson log pmf of the observed counts around the trajectory means.
pub fn log_likelihood_of_trajectory(traj: &MeanTrajectory, obs: &ObservationSeries) -> f64 {
    let mut ll = 0.0;
    for series in Observable::ALL {
        let idx = series.state_index(traj.model());
        let col = &obs.values[series_index(series)];
        for (day, v) in col.iter().enumerate() {
            if let Some(k) = v {
                let lambda = traj.value(day, idx).max(LAMBDA_FLOOR);
                ll += poisson_log_pmf(*k, lambda);
            }
        }
    }
    ll
}

/// One-shot likelihood for a single parameter set.
pub fn log_likelihood(
    params: &ParameterSet,
    obs: &ObservationSeries,
    ctx: &FitContext,
) -> Result<f64> {
    LikelihoodEvaluator::new(ctx, obs)?.eval(params)
}

/// Posterior draws with their log-posterior values and sampler metadata.
#[derive(Debug, Clone)]
pub struct PosteriorDraws {
    space: ParameterSpace,
    draws: Vec<Vec<f64>>,
    log_posteriors: Vec<f64>,
    acceptance_rates: Vec<f64>,
    proposal_scales: Vec<f64>,
}

impl PosteriorDraws {
    pub fn new(
        space: ParameterSpace,
        draws: Vec<Vec<f64>>,
        log_posteriors: Vec<f64>,
        acceptance_rates: Vec<f64>,
        proposal_scales: Vec<f64>,
    ) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::Validation("posterior draw set is empty".into()));
        }
        if draws.len() != log_posteriors.len() {
            return Err(Error::Validation(
                "draw and log-posterior counts differ".into(),
            ));
        }
        if log_posteriors.iter().any(|lp| !lp.is_finite()) {
            return Err(Error::Validation(
                "retained draw has non-finite log-posterior".into(),
            ));
        }
        Ok(PosteriorDraws {
            space,
            draws,
            log_posteriors,
            acceptance_rates,
            proposal_scales,
        })
    }

    pub fn n(&self) -> usize {
        self.draws.len()
    }

    pub fn space(&self) -> &ParameterSpace {
        &self.space
    }

    pub fn values(&self, i: usize) -> &[f64] {
        &self.draws[i]
    }

    pub fn log_posterior(&self, i: usize) -> f64 {
        self.log_posteriors[i]
    }

    pub fn parameter_set(&self, i: usize) -> ParameterSet {
        self.space.unpack(&self.draws[i])
    }

    pub fn acceptance_rates(&self) -> &[f64] {
        &self.acceptance_rates
    }

    pub fn proposal_scales(&self) -> &[f64] {
        &self.proposal_scales
    }

    /// Marginal sample of one component across all draws.
    pub fn component(&self, idx: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d[idx]).collect()
    }

    pub fn component_named(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.space.names().iter().position(|n| n == name)?;
        Some(self.component(idx))
    }
}

/// Pooled 1 - SS_res/SS_tot against the posterior-median trajectory.
///
/// Medians are taken over a deterministic thinning of at most `max_draws`
/// trajectories (the posterior here is tight, so thinning does not move the
/// median at the tolerances involved).
pub fn pseudo_r2(
    draws: &PosteriorDraws,
    obs: &ObservationSeries,
    ctx: &FitContext,
    max_draws: usize,
) -> Result<f64> {
    let stride = draws.n().div_ceil(max_draws.max(1)).max(1);
    let kept: Vec<usize> = (0..draws.n()).step_by(stride).collect();

    // per-(series, day) values across kept draws, observed days only
    let observed: Vec<(usize, usize, u64)> = Observable::ALL
        .iter()
        .enumerate()
        .flat_map(|(si, series)| {
            (0..obs.n_days()).filter_map(move |day| {
                obs.get(*series, day).map(|k| (si, day, k))
            })
        })
        .collect();
    if observed.is_empty() {
        return Err(Error::UndefinedStatistic(
            "no observed days to score".into(),
        ));
    }

    let mut fitted: Vec<Vec<f64>> = vec![Vec::with_capacity(kept.len()); observed.len()];
    let mut params = draws.space().template().clone();
    let mut traj = MeanTrajectory::reusable(ctx.model);
    let state_idx: Vec<usize> = Observable::ALL
        .iter()
        .map(|s| s.state_index(ctx.model))
        .collect();
    let mut skipped = 0usize;
    for &i in &kept {
        draws.space().apply(draws.values(i), &mut params);
        match integrate_into(
            ctx.model,
            &ctx.initial,
            &params,
            ctx.policy,
            ctx.horizon,
            ctx.step,
            &mut traj,
        ) {
            Ok(()) => {}
            Err(Error::Instability { .. }) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        }
        for (slot, &(si, day, _)) in fitted.iter_mut().zip(&observed) {
            slot.push(traj.value(day, state_idx[si]));
        }
    }
    if fitted[0].is_empty() {
        return Err(Error::UndefinedStatistic(format!(
            "all {skipped} thinned draws failed to integrate"
        )));
    }

    // SS_tot uses each series' own mean over its observed days
    let mut series_means = [0.0f64; 6];
    let mut series_counts = [0usize; 6];
    for &(si, _, k) in &observed {
        series_means[si] += k as f64;
        series_counts[si] += 1;
    }
    for si in 0..6 {
        if series_counts[si] > 0 {
            series_means[si] /= series_counts[si] as f64;
        }
    }

    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (slot, &(si, _, k)) in fitted.iter().zip(&observed) {
        let med = quantile(slot, 0.5);
        ss_res += (k as f64 - med).powi(2);
        ss_tot += (k as f64 - series_means[si]).powi(2);
    }
    if ss_tot == 0.0 {
        return Err(Error::UndefinedStatistic(
            "observations have zero total variance".into(),
        ));
    }
    Ok(1.0 - ss_res / ss_tot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaults;
    use crate::test_support::table2_m1_params;

    fn default_space() -> ParameterSpace {
        ParameterSpace::new(table2_m1_params(), false, false)
    }

    #[test]
    fn prior_is_zero_at_origin() {
        let space = default_space();
        let values = vec![0.0; space.dim()];
        assert_eq!(space.log_prior_values(&values), 0.0);
    }

    #[test]
    fn prior_of_single_rate_two_is_minus_two() {
        let space = default_space();
        let mut values = vec![0.0; space.dim()];
        values[3] = 2.0;
        assert!((space.log_prior_values(&values) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn prior_rejects_negative_rates() {
        let space = default_space();
        let mut values = vec![0.0; space.dim()];
        values[0] = -0.1;
        assert_eq!(space.log_prior_values(&values), f64::NEG_INFINITY);
    }

    #[test]
    fn prior_handles_sampled_kappa() {
        let space = ParameterSpace::new(table2_m1_params(), false, true);
        let mut values = vec![0.0; space.dim()];
        let k = space.kappa_index().unwrap();
        values[k] = 0.5;
        assert_eq!(space.log_prior_values(&values), 0.0);
        values[k] = 1.5;
        assert_eq!(space.log_prior_values(&values), f64::NEG_INFINITY);
    }

    #[test]
    fn pack_apply_round_trip() {
        let space = ParameterSpace::new(table2_m1_params(), true, true);
        let packed = space.pack(space.template());
        let rebuilt = space.unpack(&packed);
        assert_eq!(&rebuilt, space.template());
        assert_eq!(space.dim(), 10 + 1 + 4 + 4 + 4 + 2);
    }

    #[test]
    fn likelihood_single_observation_zero_count() {
        // One observed day with k = 0 against lambda = I(0) = 1 gives -1.
        let params = crate::test_support::inert_params();
        let initial = defaults::initial_state(ModelTag::M1);
        let ctx = FitContext::new(
            ModelTag::M1,
            initial,
            VaccinationPolicy::new(0.0, None),
            5,
        );
        let mut obs = ObservationSeries::empty(5);
        obs.set(Observable::Infected, 3, Some(0));
        let ll = log_likelihood(&params, &obs, &ctx).unwrap();
        assert!((ll + 1.0).abs() < 1e-9, "ll = {ll}");
    }

    #[test]
    fn likelihood_poisson_formula() {
        // k = 3 against a constant lambda = 2 compartment: I(0) = 2, inert rates.
        let params = crate::test_support::inert_params();
        let mut values = vec![0.0; 10];
        values[2] = 2.0;
        let initial = StateVector::new(ModelTag::M1, values).unwrap();
        let ctx = FitContext::new(
            ModelTag::M1,
            initial,
            VaccinationPolicy::new(0.0, None),
            5,
        );
        let mut obs = ObservationSeries::empty(5);
        obs.set(Observable::Infected, 2, Some(3));
        let ll = log_likelihood(&params, &obs, &ctx).unwrap();
        let expect = 3.0 * 2.0f64.ln() - 2.0 - 6.0f64.ln();
        assert!((ll - expect).abs() < 1e-9);
    }

    #[test]
    fn likelihood_clamps_zero_mean() {
        // Deaths stay exactly 0 under inert dynamics; k = 0 against the
        // epsilon floor contributes -epsilon, i.e. essentially 0.
        let params = crate::test_support::inert_params();
        let initial = defaults::initial_state(ModelTag::M1);
        let ctx = FitContext::new(
            ModelTag::M1,
            initial,
            VaccinationPolicy::new(0.0, None),
            5,
        );
        let mut obs = ObservationSeries::empty(5);
        obs.set(Observable::Deaths, 4, Some(0));
        let ll = log_likelihood(&params, &obs, &ctx).unwrap();
        assert!(ll.abs() <= LAMBDA_FLOOR * 1.01, "ll = {ll}");
    }

    #[test]
    fn empty_mask_gives_zero_likelihood() {
        let params = table2_m1_params();
        let initial = defaults::initial_state(ModelTag::M1);
        let ctx = FitContext::new(
            ModelTag::M1,
            initial,
            VaccinationPolicy::new(380.0, None),
            550,
        );
        let obs = ObservationSeries::empty(550);
        assert_eq!(log_likelihood(&params, &obs, &ctx).unwrap(), 0.0);
    }

    fn single_draw(params: &ParameterSet) -> PosteriorDraws {
        let space = ParameterSpace::new(params.clone(), false, false);
        let values = space.pack(params);
        PosteriorDraws::new(space, vec![values], vec![0.0], vec![], vec![]).unwrap()
    }

    #[test]
    fn pseudo_r2_is_one_for_exact_fit() {
        // only vaccination is active with mu = ln 2, so the vaccinated count
        // is 1024 * (1 - 2^-t): integers on every day, matched exactly
        let mut params = crate::test_support::inert_params();
        params.mu = std::f64::consts::LN_2;
        let mut values = vec![0.0; 10];
        values[0] = 1024.0;
        let initial = StateVector::new(ModelTag::M1, values).unwrap();
        let ctx = FitContext::new(ModelTag::M1, initial, VaccinationPolicy::new(0.0, None), 10);
        let mut obs = ObservationSeries::empty(10);
        for (day, expect) in [(1usize, 512u64), (2, 768), (3, 896), (4, 960)] {
            obs.set(Observable::Vaccinated, day, Some(expect));
        }
        let r2 = pseudo_r2(&single_draw(&params), &obs, &ctx, 100).unwrap();
        assert!(1.0 - r2 < 1e-9, "r2 = {r2}");
    }

    #[test]
    fn pseudo_r2_is_zero_when_fit_equals_series_mean() {
        // fitted trajectory is the constant 1; observations 0 and 2 average
        // to 1, so SS_res equals SS_tot
        let params = crate::test_support::inert_params();
        let initial = defaults::initial_state(ModelTag::M1);
        let ctx = FitContext::new(ModelTag::M1, initial, VaccinationPolicy::new(0.0, None), 10);
        let mut obs = ObservationSeries::empty(10);
        obs.set(Observable::Infected, 2, Some(0));
        obs.set(Observable::Infected, 7, Some(2));
        let r2 = pseudo_r2(&single_draw(&params), &obs, &ctx, 100).unwrap();
        assert!(r2.abs() < 1e-12, "r2 = {r2}");
    }

    #[test]
    fn pseudo_r2_rejects_zero_variance() {
        let params = crate::test_support::inert_params();
        let initial = defaults::initial_state(ModelTag::M1);
        let ctx = FitContext::new(ModelTag::M1, initial, VaccinationPolicy::new(0.0, None), 10);
        let mut obs = ObservationSeries::empty(10);
        obs.set(Observable::Infected, 2, Some(5));
        obs.set(Observable::Infected, 7, Some(5));
        let err = pseudo_r2(&single_draw(&params), &obs, &ctx, 100).unwrap_err();
        assert_eq!(err.category(), crate::error::Category::Stat);
    }

    #[test]
    fn observation_series_validates_cumulative_columns() {
        let mut cols: [Vec<Option<u64>>; 6] = std::array::from_fn(|_| vec![None; 3]);
        cols[2] = vec![Some(5), None, Some(3)]; // deaths decrease
        let err = ObservationSeries::from_columns(cols).unwrap_err();
        assert_eq!(err.category(), crate::error::Category::Validation);
    }

    #[test]
    fn observation_series_allows_active_counts_to_fall() {
        let mut cols: [Vec<Option<u64>>; 6] = std::array::from_fn(|_| vec![None; 3]);
        cols[0] = vec![Some(5), Some(2), Some(7)]; // infected is not cumulative
        assert!(ObservationSeries::from_columns(cols).is_ok());
    }
}
