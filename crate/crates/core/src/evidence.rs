//! Marginal-likelihood estimation by simple Monte Carlo over the prior, and
//! Bayes-factor model comparison.
//!
//! The estimator draws parameter vectors from the prior with a sequential
//! RNG (so the draw sequence is seed-determined), evaluates the likelihoods
//! in parallel, and reduces them with a fixed-order log-sum-exp. Draws whose
//! integration fails contribute zero likelihood rather than aborting the
//! batch.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inference::{FitContext, LikelihoodEvaluator, ObservationSeries, ParameterSpace};
use crate::model::ParameterSet;
use crate::stats::log_sum_exp;

#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceConfig {
    pub n_prior_draws: usize,
    pub seed: u64,
    pub sample_gamma2: bool,
    pub sample_kappa: bool,
}

impl Default for EvidenceConfig {
    fn default() -> Self {
        EvidenceConfig {
            n_prior_draws: 100_000,
            seed: 0,
            sample_gamma2: false,
            sample_kappa: false,
        }
    }
}

/// Marginal-likelihood estimate with diagnostics.
#[derive(Debug, Clone)]
pub struct EvidenceEstimate {
    pub log_marginal: f64,
    pub n_draws: usize,
    /// Draws with zero likelihood (including failed integrations).
    pub n_zero_likelihood: usize,
    /// Largest single log likelihood seen (the estimate is dominated by it).
    pub max_log_likelihood: f64,
}

/// Generic prior-predictive Monte Carlo: `log(1/n sum exp(log_lik_i))` with
/// prior draws produced sequentially from the seeded RNG.
pub fn monte_carlo_log_marginal<P, L>(
    n_draws: usize,
    seed: u64,
    mut sample_prior: P,
    log_lik: L,
) -> Result<EvidenceEstimate>
where
    P: FnMut(&mut ChaCha8Rng) -> Vec<f64>,
    L: Fn(&[f64]) -> f64 + Sync,
{
    if n_draws == 0 {
        return Err(Error::Validation("n_prior_draws must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<Vec<f64>> = (0..n_draws).map(|_| sample_prior(&mut rng)).collect();
    let lls: Vec<f64> = draws.par_iter().map(|d| log_lik(d)).collect();

    let n_zero = lls.iter().filter(|l| !l.is_finite()).count();
    if n_zero == n_draws {
        return Err(Error::EvidenceUnderflow { n_draws });
    }
    let max_ll = lls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_marginal = log_sum_exp(&lls) - (n_draws as f64).ln();
    Ok(EvidenceEstimate {
        log_marginal,
        n_draws,
        n_zero_likelihood: n_zero,
        max_log_likelihood: max_ll,
    })
}

/// Marginal likelihood of the epidemic model under its Exp(1)/Beta(1,1)
/// priors, with fixed values taken from the template.
pub fn log_marginal_likelihood(
    obs: &ObservationSeries,
    ctx: &FitContext,
    template: &ParameterSet,
    config: &EvidenceConfig,
) -> Result<EvidenceEstimate> {
    let space = ParameterSpace::new(template.clone(), config.sample_gamma2, config.sample_kappa);
    let kappa_index = space.kappa_index();
    let dim = space.dim();

    let sample_prior = move |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..dim)
            .map(|j| {
                if Some(j) == kappa_index {
                    rng.random::<f64>()
                } else {
                    rng.sample(Exp1)
                }
            })
            .collect()
    };

    let log_lik = |values: &[f64]| -> f64 {
        let mut evaluator = match LikelihoodEvaluator::new(ctx, obs) {
            Ok(e) => e,
            Err(_) => return f64::NEG_INFINITY,
        };
        let params = space.unpack(values);
        evaluator.eval(&params).unwrap_or(f64::NEG_INFINITY)
    };

    monte_carlo_log_marginal(config.n_prior_draws, config.seed, sample_prior, log_lik)
}

/// `exp(log_ml_1 - log_ml_2)`: above 1 favors the first model.
pub fn bayes_factor(log_ml_1: f64, log_ml_2: f64) -> f64 {
    (log_ml_1 - log_ml_2).exp()
}

/// Verbal strength-of-evidence band for a Bayes factor.
pub fn interpretation(bf: f64) -> &'static str {
    if bf > 100.0 {
        "decisive support for model 1"
    } else if bf > 10.0 {
        "strong support for model 1"
    } else if bf > 3.0 {
        "substantial support for model 1"
    } else if bf > 1.0 {
        "weak support for model 1"
    } else if bf == 1.0 {
        "no preference"
    } else if bf > 1.0 / 3.0 {
        "weak support for model 2"
    } else if bf > 0.1 {
        "substantial support for model 2"
    } else if bf > 0.01 {
        "strong support for model 2"
    } else {
        "decisive support for model 2"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaults;
    use crate::model::{ModelTag, Observable, VaccinationPolicy};
    use crate::stats::ln_factorial;
    use rand_distr::{Distribution, Gamma};

    #[test]
    fn unit_likelihood_gives_zero_log_marginal() {
        let est = monte_carlo_log_marginal(1000, 3, |rng| vec![rng.sample(Exp1)], |_| 0.0)
            .unwrap();
        assert_eq!(est.log_marginal, 0.0);
        assert_eq!(est.n_zero_likelihood, 0);
    }

    #[test]
    fn poisson_gamma_conjugate_oracle() {
        // k | lambda ~ Poisson(lambda), lambda ~ Gamma(a, rate b):
        // marginal P(k) = Gamma(k+a) / (k! Gamma(a)) * (b/(b+1))^a * (1/(b+1))^k
        let (a, b, k) = (2.0f64, 1.0f64, 3u64);
        let exact = (libm::lgamma_r(k as f64 + a).0
            - ln_factorial(k)
            - libm::lgamma_r(a).0
            + a * (b / (b + 1.0)).ln()
            - k as f64 * (b + 1.0).ln())
        .exp();

        let gamma = Gamma::new(a, 1.0 / b).unwrap();
        let est = monte_carlo_log_marginal(
            100_000,
            17,
            |rng| vec![gamma.sample(rng)],
            |lam| {
                let l = lam[0].max(1e-300);
                k as f64 * l.ln() - l - ln_factorial(k)
            },
        )
        .unwrap();
        let got = est.log_marginal.exp();
        assert!(
            ((got - exact) / exact).abs() < 0.05,
            "estimate {got}, exact {exact}"
        );
    }

    #[test]
    fn identical_models_same_seed_agree_exactly() {
        let mut obs = ObservationSeries::empty(30);
        obs.set(Observable::Infected, 10, Some(50));
        obs.set(Observable::Deaths, 20, Some(0));
        let ctx = FitContext::new(
            ModelTag::M1,
            defaults::initial_state(ModelTag::M1),
            VaccinationPolicy::new(0.0, None),
            30,
        );
        let template = defaults::parameters(ModelTag::M1);
        let config = EvidenceConfig {
            n_prior_draws: 400,
            seed: 99,
            ..EvidenceConfig::default()
        };
        let a = log_marginal_likelihood(&obs, &ctx, &template, &config).unwrap();
        let b = log_marginal_likelihood(&obs, &ctx, &template, &config).unwrap();
        assert_eq!(a.log_marginal, b.log_marginal);
        assert_eq!(bayes_factor(a.log_marginal, b.log_marginal), 1.0);
    }

    #[test]
    fn bayes_factor_definition() {
        assert_eq!(bayes_factor(1.0, 1.0), 1.0);
        let bf = bayes_factor(10.0f64.ln(), 0.0);
        assert!((bf - 10.0).abs() < 1e-12);
        let forward = bayes_factor(3.0, 1.2);
        let backward = bayes_factor(1.2, 3.0);
        assert!((forward * backward - 1.0).abs() < 1e-12);
    }

    #[test]
    fn estimator_spread_shrinks_with_more_draws() {
        let (a, b, k) = (2.0f64, 1.0f64, 3u64);
        let gamma = Gamma::new(a, 1.0 / b).unwrap();
        let run = |n: usize, seed: u64| {
            monte_carlo_log_marginal(
                n,
                seed,
                |rng| vec![gamma.sample(rng)],
                |lam| {
                    let l = lam[0].max(1e-300);
                    k as f64 * l.ln() - l - ln_factorial(k)
                },
            )
            .unwrap()
            .log_marginal
        };
        let spread = |n: usize| {
            let reps: Vec<f64> = (0..12).map(|s| run(n, 1000 + s)).collect();
            let lo = reps.iter().copied().fold(f64::MAX, f64::min);
            let hi = reps.iter().copied().fold(f64::MIN, f64::max);
            hi - lo
        };
        assert!(spread(8_000) < spread(500));
    }
}
