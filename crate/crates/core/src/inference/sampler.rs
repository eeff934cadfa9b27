//! Componentwise random-walk Metropolis-Hastings on log-transformed rates.
//!
//! Proposals are Gaussian steps on ln(rate) (logit for efficacy when
//! sampled), so positivity never costs a rejection; the log-space Jacobian
//! enters the acceptance ratio. Short tuning chains adapt one proposal scale
//! per component into the target acceptance window and are discarded, then
//! the frozen sampler collects the requested draws. Runs are deterministic
//! given the seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::inference::{
    FitContext, LikelihoodEvaluator, ObservationSeries, ParameterSpace, PosteriorDraws,
};
use crate::model::ParameterSet;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    /// Draws retained after tuning.
    pub n_draws: usize,
    /// Number of short tuning chains, all discarded as burn-in.
    pub tuning_chains: usize,
    /// Sweeps per tuning chain.
    pub tuning_iters: usize,
    pub seed: u64,
    /// Starting log-space proposal standard deviation.
    pub initial_scale: f64,
    /// Per-component acceptance-rate window targeted by tuning.
    pub acceptance_low: f64,
    pub acceptance_high: f64,
    pub sample_gamma2: bool,
    pub sample_kappa: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n_draws: 50_000,
            tuning_chains: 10,
            tuning_iters: 1_000,
            seed: 0,
            initial_scale: 0.25,
            acceptance_low: 0.20,
            acceptance_high: 0.45,
            sample_gamma2: false,
            sample_kappa: false,
        }
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

struct Chain<'a> {
    space: &'a ParameterSpace,
    evaluator: LikelihoodEvaluator<'a>,
    params: ParameterSet,
    kappa_index: Option<usize>,
    /// transformed position and its natural-scale image
    z: Vec<f64>,
    x: Vec<f64>,
    /// log posterior in natural coordinates, and the sampling target
    /// (posterior plus transform Jacobian)
    log_post: f64,
    log_target: f64,
}

impl<'a> Chain<'a> {
    fn to_natural(&self, j: usize, z: f64) -> f64 {
        if Some(j) == self.kappa_index {
            sigmoid(z)
        } else {
            z.exp()
        }
    }

    fn jacobian_term(&self, j: usize, z: f64) -> f64 {
        if Some(j) == self.kappa_index {
            let s = sigmoid(z);
            (s * (1.0 - s)).ln()
        } else {
            z
        }
    }

    fn evaluate(&mut self) -> Result<()> {
        let prior = self.space.log_prior_values(&self.x);
        let ll = if prior.is_finite() {
            self.space.apply(&self.x, &mut self.params);
            self.evaluator.eval(&self.params)?
        } else {
            f64::NEG_INFINITY
        };
        self.log_post = prior + ll;
        let jac: f64 = (0..self.z.len())
            .map(|j| self.jacobian_term(j, self.z[j]))
            .sum();
        self.log_target = self.log_post + jac;
        Ok(())
    }

    /// One full sweep of single-component updates.
    fn sweep(
        &mut self,
        scales: &[f64],
        rng: &mut ChaCha8Rng,
        accepts: &mut [usize],
    ) -> Result<()> {
        for j in 0..self.z.len() {
            let z_old = self.z[j];
            let x_old = self.x[j];
            let post_old = self.log_post;
            let target_old = self.log_target;

            let step: f64 = rng.sample(StandardNormal);
            self.z[j] = z_old + scales[j] * step;
            self.x[j] = self.to_natural(j, self.z[j]);
            self.evaluate()?;

            let log_ratio = self.log_target - target_old;
            let u: f64 = rng.random();
            if u.ln() < log_ratio {
                accepts[j] += 1;
            } else {
                self.z[j] = z_old;
                self.x[j] = x_old;
                self.log_post = post_old;
                self.log_target = target_old;
            }
        }
        Ok(())
    }
}

/// Sample the posterior with tuned componentwise random-walk proposals.
///
/// `template` provides the starting point, the schedule breakpoints and any
/// fixed values.
pub fn mh_sample(
    obs: &ObservationSeries,
    ctx: &FitContext,
    template: &ParameterSet,
    config: &SamplerConfig,
) -> Result<PosteriorDraws> {
    if config.n_draws == 0 {
        return Err(Error::Validation("n_draws must be at least 1".into()));
    }
    let space = ParameterSpace::new(template.clone(), config.sample_gamma2, config.sample_kappa);
    let dim = space.dim();
    let x0 = space.pack(template);
    let kappa_index = space.kappa_index();
    for (j, &x) in x0.iter().enumerate() {
        let ok = if Some(j) == kappa_index {
            x > 0.0 && x < 1.0
        } else {
            x > 0.0 && x.is_finite()
        };
        if !ok {
            return Err(Error::Init(format!(
                "starting value {x} for {} is outside the transformable support",
                space.names()[j]
            )));
        }
    }

    let z0: Vec<f64> = x0
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            if Some(j) == kappa_index {
                logit(x)
            } else {
                x.ln()
            }
        })
        .collect();

    let mut chain = Chain {
        space: &space,
        evaluator: LikelihoodEvaluator::new(ctx, obs)?,
        params: template.clone(),
        kappa_index,
        z: z0,
        x: x0,
        log_post: 0.0,
        log_target: 0.0,
    };
    chain.evaluate()?;
    if !chain.log_target.is_finite() {
        return Err(Error::Init(format!(
            "initial point has log-posterior {}",
            chain.log_post
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut scales = vec![config.initial_scale.max(0.0); dim];

    // Tuning: short chains, scale adaptation between them, all discarded.
    let mid = 0.5 * (config.acceptance_low + config.acceptance_high);
    for _ in 0..config.tuning_chains {
        let mut accepts = vec![0usize; dim];
        for _ in 0..config.tuning_iters {
            chain.sweep(&scales, &mut rng, &mut accepts)?;
        }
        for j in 0..dim {
            let rate = accepts[j] as f64 / config.tuning_iters.max(1) as f64;
            if rate < config.acceptance_low || rate > config.acceptance_high {
                let factor = ((rate + 0.05) / (mid + 0.05)).clamp(0.2, 4.0);
                scales[j] = (scales[j] * factor).clamp(1e-4, 20.0);
            }
        }
    }

    // Main run with frozen scales.
    let mut draws = Vec::with_capacity(config.n_draws);
    let mut log_posts = Vec::with_capacity(config.n_draws);
    let mut accepts = vec![0usize; dim];
    for _ in 0..config.n_draws {
        chain.sweep(&scales, &mut rng, &mut accepts)?;
        draws.push(chain.x.clone());
        log_posts.push(chain.log_post);
    }
    let acceptance: Vec<f64> = accepts
        .iter()
        .map(|&a| a as f64 / config.n_draws as f64)
        .collect();

    PosteriorDraws::new(space, draws, log_posts, acceptance, scales)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaults;
    use crate::inference::ObservationSeries;
    use crate::model::{ModelTag, Observable, VaccinationPolicy};
    use crate::stats::{mean, variance};

    fn quick_ctx(horizon: usize) -> FitContext {
        FitContext::new(
            ModelTag::M1,
            defaults::initial_state(ModelTag::M1),
            VaccinationPolicy::new(0.0, None),
            horizon,
        )
    }

    fn quick_config(n_draws: usize, seed: u64) -> SamplerConfig {
        SamplerConfig {
            n_draws,
            tuning_chains: 4,
            tuning_iters: 200,
            seed,
            ..SamplerConfig::default()
        }
    }

    #[test]
    fn identical_proposals_always_accept() {
        let obs = ObservationSeries::empty(10);
        let ctx = quick_ctx(10);
        let config = SamplerConfig {
            n_draws: 50,
            tuning_chains: 0,
            tuning_iters: 0,
            initial_scale: 0.0,
            seed: 1,
            ..SamplerConfig::default()
        };
        let draws = mh_sample(&obs, &ctx, &defaults::parameters(ModelTag::M1), &config).unwrap();
        assert!(draws.acceptance_rates().iter().all(|&r| r == 1.0));
    }

    #[test]
    fn prior_only_run_matches_exp1_moments() {
        let obs = ObservationSeries::empty(10);
        let ctx = quick_ctx(10);
        let draws = mh_sample(
            &obs,
            &ctx,
            &defaults::parameters(ModelTag::M1),
            &quick_config(6_000, 42),
        )
        .unwrap();
        let beta = draws.component_named("beta").unwrap();
        let m = mean(&beta);
        let v = variance(&beta);
        assert!((0.85..1.15).contains(&m), "mean {m}");
        assert!((0.8..1.25).contains(&v), "variance {v}");
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let mut obs = ObservationSeries::empty(20);
        obs.set(Observable::Infected, 5, Some(40));
        obs.set(Observable::Infected, 10, Some(900));
        obs.set(Observable::Deaths, 15, Some(1));
        let ctx = quick_ctx(20);
        let template = defaults::parameters(ModelTag::M1);
        let a = mh_sample(&obs, &ctx, &template, &quick_config(40, 7)).unwrap();
        let b = mh_sample(&obs, &ctx, &template, &quick_config(40, 7)).unwrap();
        for i in 0..a.n() {
            assert_eq!(a.values(i), b.values(i));
            assert_eq!(a.log_posterior(i), b.log_posterior(i));
        }
        let c = mh_sample(&obs, &ctx, &template, &quick_config(40, 8)).unwrap();
        assert_ne!(a.values(0), c.values(0));
    }

    #[test]
    fn stored_log_posterior_is_prior_plus_likelihood() {
        let mut obs = ObservationSeries::empty(15);
        obs.set(Observable::Infected, 8, Some(120));
        obs.set(Observable::Deaths, 12, Some(0));
        let ctx = quick_ctx(15);
        let draws = mh_sample(
            &obs,
            &ctx,
            &defaults::parameters(ModelTag::M1),
            &quick_config(25, 19),
        )
        .unwrap();
        for i in [0usize, 7, 24] {
            let params = draws.parameter_set(i);
            let prior = crate::inference::log_prior(&params, draws.space());
            let ll = crate::inference::log_likelihood(&params, &obs, &ctx).unwrap();
            let expect = prior + ll;
            assert!(
                (draws.log_posterior(i) - expect).abs() < 1e-9,
                "draw {i}: stored {} vs recomputed {expect}",
                draws.log_posterior(i)
            );
        }
    }

    #[test]
    fn retained_draws_have_finite_log_posterior() {
        let mut obs = ObservationSeries::empty(15);
        obs.set(Observable::Infected, 8, Some(120));
        let ctx = quick_ctx(15);
        let draws = mh_sample(
            &obs,
            &ctx,
            &defaults::parameters(ModelTag::M1),
            &quick_config(100, 3),
        )
        .unwrap();
        for i in 0..draws.n() {
            assert!(draws.log_posterior(i).is_finite());
        }
    }

    #[test]
    fn zero_rate_start_is_an_init_error() {
        let obs = ObservationSeries::empty(10);
        let ctx = quick_ctx(10);
        let mut template = defaults::parameters(ModelTag::M1);
        template.mu = 0.0;
        let err = mh_sample(&obs, &ctx, &template, &quick_config(10, 1)).unwrap_err();
        assert_eq!(err.category(), crate::error::Category::Init);
    }

    #[test]
    fn sampled_kappa_stays_in_unit_interval() {
        let obs = ObservationSeries::empty(10);
        let ctx = quick_ctx(10);
        let config = SamplerConfig {
            sample_kappa: true,
            ..quick_config(500, 11)
        };
        let draws = mh_sample(&obs, &ctx, &defaults::parameters(ModelTag::M1), &config).unwrap();
        let kappa = draws.component_named("kappa").unwrap();
        assert!(kappa.iter().all(|&k| k > 0.0 && k < 1.0));
        // flat prior: draws should wander well away from the 0.94 start
        let spread = kappa.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 0.5, "kappa min {spread}");
    }
}
