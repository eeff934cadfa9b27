//! Command-line front end: `fit`, `scenario`, `hellinger`, `compare` and
//! `report` subcommands over the library pipeline.
//!
//! Every run echoes its fully resolved config into the output directory, and
//! all stochastic steps key off explicit seeds, so a run is reproducible
//! from (input files, config echo, seed) at any thread count. Failures map
//! to stable exit codes with one `ERROR <category>: <detail>` line on
//! stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::density::{kde, SmoothedDensity};
use crate::error::{Error, Result};
use crate::evidence::{bayes_factor, log_marginal_likelihood};
use crate::inference::{mh_sample, pseudo_r2};
use crate::integrate::{integrate_into, MeanTrajectory};
use crate::io::{
    self, load_draws, load_observations, load_scenario_run, save_densities, save_draws,
    save_evidence_report, save_fit_metadata, save_hellinger_matrix, save_overload_ranges,
    save_quantile_bands, save_scenario_run, save_trace, FitMetadata, StudyConfig,
};
use crate::model::Observable;
use crate::predictive::{posterior_predict, CumulativeSeries, ScenarioRun};
use crate::stats::quantile;

/// Draw cap for trajectory summaries (pseudo-R^2 medians, quantile bands);
/// draws are thinned deterministically above this.
pub const SUMMARY_DRAW_CAP: usize = 2_000;

#[derive(Debug, Parser)]
#[command(
    name = "revax",
    about = "Reinfection-aware epidemic models: Bayesian fitting and vaccine-timing scenarios",
    version
)]
pub struct Cli {
    /// Master seed; overrides the seeds in the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for batch steps (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,

    /// Study config (TOML); omitted fields fall back to built-in defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Calibrate the configured model to observed daily counts.
    Fit {
        /// Observations CSV (day,infected,recovered,deaths,reinfected,
        /// recovered_reinfected,vaccinated; blank cells are masked).
        #[arg(long)]
        data: PathBuf,
    },
    /// Push posterior draws through vaccine-timing scenarios.
    Scenario {
        /// Posterior draws CSV produced by `fit`.
        #[arg(long)]
        draws: PathBuf,
        /// Scenario ids (1-6).
        #[arg(long, value_delimiter = ',', default_values_t = vec![1u8, 2, 3, 4, 5, 6])]
        scenarios: Vec<u8>,
        /// Hospital-bed threshold; defaults to the config value.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Pairwise squared Hellinger distances between predictive CSVs.
    Hellinger {
        /// Two or more scenario CSVs produced by `scenario`.
        #[arg(required = true, num_args = 2..)]
        inputs: Vec<PathBuf>,
        /// Shared grid resolution.
        #[arg(long, default_value_t = crate::density::DEFAULT_GRID_POINTS)]
        grid_points: usize,
    },
    /// Marginal likelihoods and the Bayes factor of two model configs.
    Compare {
        #[arg(long)]
        data: PathBuf,
        /// Config of the first model (the Bayes-factor numerator).
        #[arg(long)]
        config1: PathBuf,
        /// Config of the second model.
        #[arg(long)]
        config2: PathBuf,
    },
    /// Assemble fit summaries: parameter table, quantile bands, scenario
    /// tables when present.
    Report {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        draws: PathBuf,
        /// Directory holding scenario_<id>.csv files to fold in.
        #[arg(long)]
        scenario_dir: Option<PathBuf>,
    },
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ERROR {}: {e}", e.category().name());
            ExitCode::from(e.category().exit_code() as u8)
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot size thread pool: {e}")))?;
    }
    let mut config = match &cli.config {
        Some(path) => StudyConfig::load(path)?,
        None => StudyConfig::default_for(crate::model::ModelTag::M1),
    };
    if let Some(seed) = cli.seed {
        config.sampler.seed = seed;
        config.evidence.seed = seed;
        config.predictive_seed = seed;
    }

    match &cli.command {
        Command::Fit { data } => fit(&config, data, &cli.out_dir),
        Command::Scenario {
            draws,
            scenarios,
            threshold,
        } => scenario(&config, draws, scenarios, *threshold, &cli.out_dir),
        Command::Hellinger {
            inputs,
            grid_points,
        } => hellinger_cmd(inputs, *grid_points, &cli.out_dir),
        Command::Compare {
            data,
            config1,
            config2,
        } => compare(&cli, data, config1, config2),
        Command::Report {
            data,
            draws,
            scenario_dir,
        } => report(&config, data, draws, scenario_dir.as_deref(), &cli.out_dir),
    }
}

fn echo_config(config: &StudyConfig, out_dir: &Path) -> Result<()> {
    config.save(out_dir.join("resolved_config.toml"))
}

fn fit(config: &StudyConfig, data: &Path, out_dir: &Path) -> Result<()> {
    let obs = load_observations(data)?;
    let ctx = config.fit_context();
    if obs.horizon() > ctx.horizon {
        return Err(Error::Validation(format!(
            "observations run to day {} beyond horizon {}",
            obs.horizon(),
            ctx.horizon
        )));
    }
    echo_config(config, out_dir)?;

    let draws = mh_sample(&obs, &ctx, &config.params, &config.sampler)?;
    let r2 = pseudo_r2(&draws, &obs, &ctx, SUMMARY_DRAW_CAP)?;

    save_draws(&draws, out_dir.join("draws.csv"))?;
    save_trace(&draws, out_dir.join("trace.csv"))?;
    save_fit_metadata(
        &FitMetadata::new(config, &draws, r2),
        out_dir.join("fit_metadata.toml"),
    )?;

    let rates = draws.acceptance_rates();
    let (lo, hi) = rates.iter().fold((1.0f64, 0.0f64), |(lo, hi), &r| {
        (lo.min(r), hi.max(r))
    });
    println!(
        "fit: {} draws, acceptance {:.2}-{:.2}, pseudo-R2 {:.5}",
        draws.n(),
        lo,
        hi,
        r2
    );
    Ok(())
}

fn scenario(
    config: &StudyConfig,
    draws_path: &Path,
    ids: &[u8],
    threshold: Option<f64>,
    out_dir: &Path,
) -> Result<()> {
    let draws = load_draws(draws_path, config)?;
    let ctx = config.fit_context();
    let threshold = threshold.unwrap_or(config.bed_threshold);
    echo_config(config, out_dir)?;

    let mut runs: Vec<ScenarioRun> = Vec::new();
    for &id in ids {
        let scenario = config.scenarios.scenario(id)?;
        let run = posterior_predict(
            &draws,
            &scenario,
            &ctx,
            threshold,
            config.summary_day,
            config.predictive_seed,
        )?;
        save_scenario_run(&run, out_dir.join(format!("scenario_{id}.csv")))?;
        let ((min_m, max_m), _) = run.overload_envelope();
        println!(
            "scenario {id} ({}): overload days {min_m}-{max_m}, {} draws, {} failed",
            run.scenario.label,
            run.summaries.len(),
            run.n_failed
        );
        runs.push(run);
    }
    save_overload_ranges(&runs, out_dir.join("overload_ranges.csv"))?;
    Ok(())
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn hellinger_cmd(inputs: &[PathBuf], grid_points: usize, out_dir: &Path) -> Result<()> {
    if inputs.len() < 2 {
        return Err(Error::Validation(
            "hellinger needs at least two predictive CSVs".into(),
        ));
    }
    let labels: Vec<String> = inputs.iter().map(|p| stem_of(p)).collect();
    let loaded: Vec<Vec<crate::predictive::DrawSummary>> = inputs
        .iter()
        .map(load_scenario_run)
        .collect::<Result<_>>()?;

    for series in CumulativeSeries::ALL {
        let samples: Vec<Vec<f64>> = loaded
            .iter()
            .map(|rows| io::summaries_series(rows, series))
            .collect();

        // per-input densities on their own default grids, for plotting
        let densities: Vec<SmoothedDensity> = samples
            .iter()
            .map(|s| kde(s, None))
            .collect::<Result<_>>()?;
        let labeled: Vec<(String, &SmoothedDensity)> = labels
            .iter()
            .zip(&densities)
            .map(|(l, d)| (format!("{l}_{}", series.name()), d))
            .collect();
        save_densities(&labeled, out_dir)?;

        // pairwise matrix, each pair re-estimated on its shared grid
        let n = samples.len();
        let mut matrix = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                matrix[i][j] =
                    crate::density::hellinger_from_samples(&samples[i], &samples[j], grid_points)?;
            }
        }
        save_hellinger_matrix(
            &labels,
            &matrix,
            out_dir.join(format!("hellinger_{}.csv", series.name())),
        )?;
        println!("hellinger ({}): matrix over {n} inputs written", series.name());
    }
    Ok(())
}

fn compare(cli: &Cli, data: &Path, config1: &Path, config2: &Path) -> Result<()> {
    let mut c1 = StudyConfig::load(config1)?;
    let mut c2 = StudyConfig::load(config2)?;
    if let Some(seed) = cli.seed {
        c1.evidence.seed = seed;
        c2.evidence.seed = seed;
    }
    let obs = load_observations(data)?;

    let e1 = log_marginal_likelihood(&obs, &c1.fit_context(), &c1.params, &c1.evidence)?;
    let e2 = log_marginal_likelihood(&obs, &c2.fit_context(), &c2.params, &c2.evidence)?;

    c1.save(cli.out_dir.join("resolved_config_model1.toml"))?;
    c2.save(cli.out_dir.join("resolved_config_model2.toml"))?;
    save_evidence_report(
        (c1.model.name(), c2.model.name()),
        (&e1, &e2),
        &cli.out_dir,
    )?;
    let bf = bayes_factor(e1.log_marginal, e2.log_marginal);
    println!(
        "compare: log-ml {} = {:.4}, {} = {:.4}, BF = {:.6e}",
        c1.model.name(),
        e1.log_marginal,
        c2.model.name(),
        e2.log_marginal,
        bf
    );
    Ok(())
}

fn report(
    config: &StudyConfig,
    data: &Path,
    draws_path: &Path,
    scenario_dir: Option<&Path>,
    out_dir: &Path,
) -> Result<()> {
    let obs = load_observations(data)?;
    let draws = load_draws(draws_path, config)?;
    let ctx = config.fit_context();
    echo_config(config, out_dir)?;

    // quantile bands from thinned trajectories
    let stride = draws.n().div_ceil(SUMMARY_DRAW_CAP).max(1);
    let kept: Vec<usize> = (0..draws.n()).step_by(stride).collect();
    let series_idx: Vec<usize> = Observable::ALL
        .iter()
        .map(|s| s.state_index(ctx.model))
        .collect();
    let mut fitted: Vec<Vec<Vec<f64>>> =
        vec![vec![Vec::with_capacity(kept.len()); ctx.horizon + 1]; 6];
    let mut params = draws.space().template().clone();
    let mut traj = MeanTrajectory::reusable(ctx.model);
    for &i in &kept {
        draws.space().apply(draws.values(i), &mut params);
        if integrate_into(
            ctx.model,
            &ctx.initial,
            &params,
            ctx.policy,
            ctx.horizon,
            ctx.step,
            &mut traj,
        )
        .is_err()
        {
            continue;
        }
        for (si, slot) in fitted.iter_mut().enumerate() {
            for (day, per_day) in slot.iter_mut().enumerate() {
                per_day.push(traj.value(day, series_idx[si]));
            }
        }
    }
    for (si, series) in Observable::ALL.iter().enumerate() {
        let mut sorted = std::mem::take(&mut fitted[si]);
        for day in sorted.iter_mut() {
            day.sort_by(|a, b| a.total_cmp(b));
        }
        save_quantile_bands(*series, &obs, &sorted, out_dir)?;
    }

    let r2 = pseudo_r2(&draws, &obs, &ctx, SUMMARY_DRAW_CAP)?;

    // parameter posterior table
    let mut table = String::new();
    table.push_str("parameter,mean,q025,q500,q975\n");
    let mut text_rows = Vec::new();
    for (idx, name) in draws.space().names().iter().enumerate() {
        let values = draws.component(idx);
        let mean = crate::stats::mean(&values);
        let (q025, q500, q975) = (
            quantile(&values, 0.025),
            quantile(&values, 0.5),
            quantile(&values, 0.975),
        );
        table.push_str(&format!(
            "{name},{},{},{},{}\n",
            io::format_g17(mean),
            io::format_g17(q025),
            io::format_g17(q500),
            io::format_g17(q975)
        ));
        text_rows.push(format!(
            "  {name:<10} mean {mean:.5}  (q025 {q025:.5}, q500 {q500:.5}, q975 {q975:.5})"
        ));
    }
    std::fs::write(out_dir.join("parameter_summary.csv"), table)?;

    let mut report_text = String::new();
    report_text.push_str(&format!(
        "model {} fit report\n===================\n\n",
        config.model.name()
    ));
    report_text.push_str(&format!(
        "draws: {}\npseudo-R2: {r2:.6}\n\nposterior parameter summary:\n",
        draws.n()
    ));
    report_text.push_str(&text_rows.join("\n"));
    report_text.push('\n');

    if let Some(dir) = scenario_dir {
        let mut scenario_rows = Vec::new();
        for id in 1..=6u8 {
            let path = dir.join(format!("scenario_{id}.csv"));
            if !path.exists() {
                continue;
            }
            let rows = load_scenario_run(&path)?;
            let mean_days: Vec<u32> = rows.iter().map(|r| r.overload_days_mean).collect();
            let (lo, hi) = (
                *mean_days.iter().min().unwrap(),
                *mean_days.iter().max().unwrap(),
            );
            let deaths = io::summaries_series(&rows, CumulativeSeries::Deaths);
            let reinf = io::summaries_series(&rows, CumulativeSeries::Reinfected);
            scenario_rows.push(format!(
                "  scenario {id}: overload days {lo}-{hi}, day-{} deaths median {:.1}, reinfections median {:.1}",
                config.summary_day,
                quantile(&deaths, 0.5),
                quantile(&reinf, 0.5),
            ));
        }
        if !scenario_rows.is_empty() {
            report_text.push_str("\nscenario summaries:\n");
            report_text.push_str(&scenario_rows.join("\n"));
            report_text.push('\n');
        }
    }
    std::fs::write(out_dir.join("report.txt"), &report_text)?;
    println!("report: pseudo-R2 {r2:.5}, bands and summaries written");
    Ok(())
}
