//! Configuration files, observation ingestion and result persistence.
//!
//! Configs are TOML with flat sections; every field is optional and falls
//! back to the built-in study defaults, while unknown keys are rejected.
//! The fully resolved config can be re-serialized for provenance and
//! round-trips to an identical value.

mod observations;
mod outputs;

pub use observations::{load_observations, read_observations, save_observations, write_observations};
pub use outputs::{
    load_draws, read_draws, save_densities, save_draws, save_evidence_report, save_fit_metadata,
    save_hellinger_matrix, save_overload_ranges, save_quantile_bands, save_scenario_run,
    save_trace, load_scenario_run, read_scenario_run, summaries_series, format_g17, FitMetadata,
};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::defaults;
use crate::error::{Error, Result};
use crate::evidence::EvidenceConfig;
use crate::inference::{FitContext, SamplerConfig};
use crate::model::{ModelTag, ParameterSet, RateSchedule, StateVector, VaccinationPolicy};
use crate::predictive::ScenarioGrid;

/// Fully resolved study configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub model: ModelTag,
    pub horizon: usize,
    pub initial: StateVector,
    pub params: ParameterSet,
    pub vaccination_start: f64,
    pub sampler: SamplerConfig,
    pub evidence: EvidenceConfig,
    pub scenarios: ScenarioGrid,
    pub bed_threshold: f64,
    pub summary_day: usize,
    pub predictive_seed: u64,
}

impl StudyConfig {
    pub fn default_for(model: ModelTag) -> Self {
        RawConfig::empty_for(model).resolve().expect("defaults are valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text)
            .map_err(|e| Error::Config(format!("cannot parse config: {e}")))?;
        raw.resolve()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_toml_str(&text)
    }

    /// Resolved-config echo; reloading the output yields an identical value.
    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(&RawConfig::from_resolved(self)).expect("config serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        if let Some(parent) = path.as_ref().parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path.as_ref(), self.to_toml_string())?;
        Ok(())
    }

    pub fn policy(&self) -> VaccinationPolicy {
        VaccinationPolicy::new(self.vaccination_start, None)
    }

    pub fn fit_context(&self) -> FitContext {
        FitContext::new(self.model, self.initial.clone(), self.policy(), self.horizon)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    breakpoints: Option<Vec<f64>>,
    rates: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    s1: Option<f64>,
    s2: Option<f64>,
    e: Option<f64>,
    i: Option<f64>,
    re: Option<f64>,
    ri: Option<f64>,
    d: Option<f64>,
    ii: Option<f64>,
    rr: Option<f64>,
    v: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRates {
    beta: Option<f64>,
    gamma2: Option<f64>,
    mu: Option<f64>,
    kappa: Option<f64>,
    eta: Option<f64>,
    zeta1: Option<f64>,
    zeta2: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSampler {
    n_draws: Option<usize>,
    tuning_chains: Option<usize>,
    tuning_iters: Option<usize>,
    seed: Option<u64>,
    initial_scale: Option<f64>,
    acceptance_low: Option<f64>,
    acceptance_high: Option<f64>,
    sample_gamma2: Option<bool>,
    sample_kappa: Option<bool>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvidence {
    n_prior_draws: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenarios {
    baseline_start: Option<f64>,
    early_start: Option<f64>,
    late_start: Option<f64>,
    efficacy_low: Option<f64>,
    efficacy_high: Option<f64>,
    bed_threshold: Option<f64>,
    summary_day: Option<usize>,
    predictive_seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: Option<String>,
    horizon: Option<usize>,
    vaccination_start: Option<f64>,
    #[serde(default)]
    initial: RawInitial,
    #[serde(default)]
    rates: RawRates,
    #[serde(default)]
    alpha: RawSchedule,
    #[serde(default)]
    gamma1: RawSchedule,
    #[serde(default)]
    phi: RawSchedule,
    #[serde(default)]
    sampler: RawSampler,
    #[serde(default)]
    evidence: RawEvidence,
    #[serde(default)]
    scenarios: RawScenarios,
}

impl RawConfig {
    fn empty_for(model: ModelTag) -> Self {
        RawConfig {
            model: Some(model.name().to_string()),
            ..RawConfig::default()
        }
    }

    fn resolve(self) -> Result<StudyConfig> {
        let model = match self.model.as_deref() {
            None | Some("M1") => ModelTag::M1,
            Some("M2") => ModelTag::M2,
            Some(other) => {
                return Err(Error::Config(format!(
                    "model must be \"M1\" or \"M2\", got \"{other}\""
                )))
            }
        };
        let horizon = self.horizon.unwrap_or(defaults::HORIZON);
        if horizon < 1 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        let base = defaults::parameters(model);

        let schedule = |raw: &RawSchedule, name: &str, dflt: &RateSchedule| -> Result<RateSchedule> {
            let breakpoints = raw
                .breakpoints
                .clone()
                .unwrap_or_else(|| dflt.breakpoints().to_vec());
            let rates = raw.rates.clone().unwrap_or_else(|| dflt.rates().to_vec());
            if let Some(bad) = breakpoints
                .iter()
                .find(|b| **b < 0.0 || **b > horizon as f64)
            {
                return Err(Error::Config(format!(
                    "{name} breakpoint {bad} outside [0, {horizon}]"
                )));
            }
            RateSchedule::new(breakpoints, rates)
                .map_err(|e| Error::Config(format!("{name}: {e}")))
        };

        let params = ParameterSet {
            alpha: schedule(&self.alpha, "alpha", &base.alpha)?,
            beta: self.rates.beta.unwrap_or(base.beta),
            gamma1: schedule(&self.gamma1, "gamma1", &base.gamma1)?,
            gamma2: self.rates.gamma2.unwrap_or(base.gamma2),
            phi: schedule(&self.phi, "phi", &base.phi)?,
            mu: self.rates.mu.unwrap_or(base.mu),
            kappa: self.rates.kappa.unwrap_or(base.kappa),
            eta: self.rates.eta.unwrap_or(base.eta),
            zeta1: self.rates.zeta1.unwrap_or(base.zeta1),
            zeta2: self.rates.zeta2.unwrap_or(base.zeta2),
        };
        params
            .validate()
            .map_err(|e| Error::Config(format!("rates: {e}")))?;

        let di = defaults::initial_state(model);
        let get = |v: Option<f64>, label: &str| v.unwrap_or_else(|| di.get(label).unwrap_or(0.0));
        let init_values = match model {
            ModelTag::M1 => vec![
                get(self.initial.s1, "S1"),
                get(self.initial.e, "E"),
                get(self.initial.i, "I"),
                get(self.initial.re, "RE"),
                get(self.initial.ri, "RI"),
                get(self.initial.d, "D"),
                get(self.initial.s2, "S2"),
                get(self.initial.ii, "II"),
                get(self.initial.rr, "RR"),
                get(self.initial.v, "V"),
            ],
            ModelTag::M2 => {
                if self.initial.s2.is_some() {
                    return Err(Error::Config(
                        "initial.s2 is only meaningful for model M1".into(),
                    ));
                }
                vec![
                    get(self.initial.s1, "S"),
                    get(self.initial.e, "E"),
                    get(self.initial.i, "I"),
                    get(self.initial.re, "RE"),
                    get(self.initial.ri, "RI"),
                    get(self.initial.d, "D"),
                    get(self.initial.ii, "II"),
                    get(self.initial.rr, "RR"),
                    get(self.initial.v, "V"),
                ]
            }
        };
        let initial = StateVector::new(model, init_values)
            .map_err(|e| Error::Config(format!("initial: {e}")))?;

        let vaccination_start = self.vaccination_start.unwrap_or(defaults::VACCINE_START_DAY);
        if !(0.0..=horizon as f64).contains(&vaccination_start) {
            return Err(Error::Config(format!(
                "vaccination_start {vaccination_start} outside [0, {horizon}]"
            )));
        }

        let sd = SamplerConfig::default();
        let sampler = SamplerConfig {
            n_draws: self.sampler.n_draws.unwrap_or(sd.n_draws),
            tuning_chains: self.sampler.tuning_chains.unwrap_or(sd.tuning_chains),
            tuning_iters: self.sampler.tuning_iters.unwrap_or(sd.tuning_iters),
            seed: self.sampler.seed.unwrap_or(sd.seed),
            initial_scale: self.sampler.initial_scale.unwrap_or(sd.initial_scale),
            acceptance_low: self.sampler.acceptance_low.unwrap_or(sd.acceptance_low),
            acceptance_high: self.sampler.acceptance_high.unwrap_or(sd.acceptance_high),
            sample_gamma2: self.sampler.sample_gamma2.unwrap_or(sd.sample_gamma2),
            sample_kappa: self.sampler.sample_kappa.unwrap_or(sd.sample_kappa),
        };
        if !(sampler.acceptance_low > 0.0 && sampler.acceptance_high < 1.0
            && sampler.acceptance_low < sampler.acceptance_high)
        {
            return Err(Error::Config("invalid acceptance window".into()));
        }

        let ed = EvidenceConfig::default();
        let evidence = EvidenceConfig {
            n_prior_draws: self.evidence.n_prior_draws.unwrap_or(ed.n_prior_draws),
            seed: self.evidence.seed.unwrap_or(ed.seed),
            sample_gamma2: sampler.sample_gamma2,
            sample_kappa: sampler.sample_kappa,
        };

        let gd = ScenarioGrid::default();
        let scenarios = ScenarioGrid {
            baseline_start: self.scenarios.baseline_start.unwrap_or(vaccination_start),
            early_start: self.scenarios.early_start.unwrap_or(gd.early_start),
            late_start: self.scenarios.late_start.unwrap_or(gd.late_start),
            efficacy_low: self.scenarios.efficacy_low.unwrap_or(params.kappa),
            efficacy_high: self.scenarios.efficacy_high.unwrap_or(gd.efficacy_high),
        };
        let summary_day = self.scenarios.summary_day.unwrap_or(defaults::SUMMARY_DAY);
        if summary_day > horizon {
            return Err(Error::Config(format!(
                "summary_day {summary_day} beyond horizon {horizon}"
            )));
        }

        Ok(StudyConfig {
            model,
            horizon,
            initial,
            params,
            vaccination_start,
            sampler,
            evidence,
            scenarios,
            bed_threshold: self
                .scenarios
                .bed_threshold
                .unwrap_or(defaults::BED_THRESHOLD),
            summary_day,
            predictive_seed: self.scenarios.predictive_seed.unwrap_or(0),
        })
    }

    fn from_resolved(config: &StudyConfig) -> Self {
        let p = &config.params;
        let iv = |label: &str| config.initial.get(label);
        RawConfig {
            model: Some(config.model.name().to_string()),
            horizon: Some(config.horizon),
            vaccination_start: Some(config.vaccination_start),
            initial: RawInitial {
                s1: iv("S1").or_else(|| iv("S")),
                s2: iv("S2"),
                e: iv("E"),
                i: iv("I"),
                re: iv("RE"),
                ri: iv("RI"),
                d: iv("D"),
                ii: iv("II"),
                rr: iv("RR"),
                v: iv("V"),
            },
            rates: RawRates {
                beta: Some(p.beta),
                gamma2: Some(p.gamma2),
                mu: Some(p.mu),
                kappa: Some(p.kappa),
                eta: Some(p.eta),
                zeta1: Some(p.zeta1),
                zeta2: Some(p.zeta2),
            },
            alpha: RawSchedule {
                breakpoints: Some(p.alpha.breakpoints().to_vec()),
                rates: Some(p.alpha.rates().to_vec()),
            },
            gamma1: RawSchedule {
                breakpoints: Some(p.gamma1.breakpoints().to_vec()),
                rates: Some(p.gamma1.rates().to_vec()),
            },
            phi: RawSchedule {
                breakpoints: Some(p.phi.breakpoints().to_vec()),
                rates: Some(p.phi.rates().to_vec()),
            },
            sampler: RawSampler {
                n_draws: Some(config.sampler.n_draws),
                tuning_chains: Some(config.sampler.tuning_chains),
                tuning_iters: Some(config.sampler.tuning_iters),
                seed: Some(config.sampler.seed),
                initial_scale: Some(config.sampler.initial_scale),
                acceptance_low: Some(config.sampler.acceptance_low),
                acceptance_high: Some(config.sampler.acceptance_high),
                sample_gamma2: Some(config.sampler.sample_gamma2),
                sample_kappa: Some(config.sampler.sample_kappa),
            },
            evidence: RawEvidence {
                n_prior_draws: Some(config.evidence.n_prior_draws),
                seed: Some(config.evidence.seed),
            },
            scenarios: RawScenarios {
                baseline_start: Some(config.scenarios.baseline_start),
                early_start: Some(config.scenarios.early_start),
                late_start: Some(config.scenarios.late_start),
                efficacy_low: Some(config.scenarios.efficacy_low),
                efficacy_high: Some(config.scenarios.efficacy_high),
                bed_threshold: Some(config.bed_threshold),
                summary_day: Some(config.summary_day),
                predictive_seed: Some(config.predictive_seed),
            },
        }
    }
}
