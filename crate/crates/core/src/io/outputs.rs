//! Result persistence: posterior draws, predictive summaries, densities,
//! Hellinger matrices, evidence reports and quantile bands.
//!
//! Numeric output is written with 17 significant digits so every file
//! replays to the exact in-memory value.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::density::SmoothedDensity;
use crate::error::{Error, Result};
use crate::evidence::EvidenceEstimate;
use crate::inference::{ObservationSeries, ParameterSpace, PosteriorDraws};
use crate::io::StudyConfig;
use crate::model::Observable;
use crate::predictive::{CumulativeSeries, DrawSummary, ScenarioRun};
use crate::stats::quantile_sorted;

/// Shortest representation that round-trips: 17 significant digits.
pub fn format_g17(v: f64) -> String {
    format!("{:.16e}", v)
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

// ---------------------------------------------------------------------------
// posterior draws

/// One row per draw: every parameter (sampled and fixed) plus the
/// log-posterior.
pub fn write_draws(draws: &PosteriorDraws, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let space = draws.space();
    let mut header = vec!["draw".to_string()];
    header.extend(space.names().iter().cloned());
    if !space.sample_kappa() {
        header.push("kappa".into());
    }
    if !space.names().iter().any(|n| n == "gamma2") {
        header.push("gamma2".into());
    }
    header.push("log_posterior".into());
    w.write_record(&header)?;

    for i in 0..draws.n() {
        let mut row = vec![i.to_string()];
        row.extend(draws.values(i).iter().map(|v| format_g17(*v)));
        if !space.sample_kappa() {
            row.push(format_g17(space.template().kappa));
        }
        if !space.names().iter().any(|n| n == "gamma2") {
            row.push(format_g17(space.template().gamma2));
        }
        row.push(format_g17(draws.log_posterior(i)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_draws(draws: &PosteriorDraws, path: impl AsRef<Path>) -> Result<()> {
    write_draws(draws, create(path.as_ref())?)
}

/// Reload draws saved by [`save_draws`]; the config supplies the template
/// (breakpoints and fixed values) and the sampled-component layout.
pub fn read_draws(reader: impl Read, config: &StudyConfig) -> Result<PosteriorDraws> {
    let space = ParameterSpace::new(
        config.params.clone(),
        config.sampler.sample_gamma2,
        config.sampler.sample_kappa,
    );
    let mut csv_reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let value_cols: Vec<usize> = space
        .names()
        .iter()
        .map(|n| col(n))
        .collect::<Result<_>>()?;
    let lp_col = col("log_posterior")?;

    let mut values = Vec::new();
    let mut log_posts = Vec::new();
    for (row_number, record) in csv_reader.records().enumerate() {
        let line = row_number + 2;
        let record = record?;
        let parse = |idx: usize| -> Result<f64> {
            record
                .get(idx)
                .unwrap_or("")
                .parse::<f64>()
                .map_err(|_| Error::ParseRow {
                    row: line,
                    detail: format!("'{}' is not a number", record.get(idx).unwrap_or("")),
                })
        };
        let row: Vec<f64> = value_cols
            .iter()
            .map(|&c| parse(c))
            .collect::<Result<_>>()?;
        values.push(row);
        log_posts.push(parse(lp_col)?);
    }
    PosteriorDraws::new(space, values, log_posts, Vec::new(), Vec::new())
}

pub fn load_draws(path: impl AsRef<Path>, config: &StudyConfig) -> Result<PosteriorDraws> {
    let file = std::fs::File::open(path.as_ref())?;
    read_draws(std::io::BufReader::new(file), config)
}

/// Lightweight per-draw trace for convergence inspection.
pub fn save_trace(draws: &PosteriorDraws, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path.as_ref())?);
    w.write_record(["draw", "log_posterior"])?;
    for i in 0..draws.n() {
        w.write_record([i.to_string(), format_g17(draws.log_posterior(i))])?;
    }
    w.flush()?;
    Ok(())
}

/// Sampler provenance for exact replay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitMetadata {
    pub model: String,
    pub seed: u64,
    pub n_draws: usize,
    pub tuning_chains: usize,
    pub tuning_iters: usize,
    pub pseudo_r2: f64,
    pub parameter: Vec<String>,
    pub acceptance_rate: Vec<f64>,
    pub proposal_scale: Vec<f64>,
}

impl FitMetadata {
    pub fn new(config: &StudyConfig, draws: &PosteriorDraws, pseudo_r2: f64) -> Self {
        FitMetadata {
            model: config.model.name().to_string(),
            seed: config.sampler.seed,
            n_draws: draws.n(),
            tuning_chains: config.sampler.tuning_chains,
            tuning_iters: config.sampler.tuning_iters,
            pseudo_r2,
            parameter: draws.space().names().to_vec(),
            acceptance_rate: draws.acceptance_rates().to_vec(),
            proposal_scale: draws.proposal_scales().to_vec(),
        }
    }
}

pub fn save_fit_metadata(meta: &FitMetadata, path: impl AsRef<Path>) -> Result<()> {
    let text = toml::to_string_pretty(meta)
        .map_err(|e| Error::Validation(format!("cannot serialize metadata: {e}")))?;
    let mut w = create(path.as_ref())?;
    w.write_all(text.as_bytes())?;
    Ok(())
}

// ---------------------------------------------------------------------------
// scenario predictive summaries

pub fn write_scenario_run(run: &ScenarioRun, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "draw",
        "overload_days_mean",
        "overload_days_sampled",
        "cum_infected",
        "cum_reinfected",
        "cum_deaths",
    ])?;
    for s in &run.summaries {
        w.write_record([
            s.draw.to_string(),
            s.overload_days_mean.to_string(),
            s.overload_days_sampled.to_string(),
            format_g17(s.cumulative_infected),
            format_g17(s.cumulative_reinfected),
            format_g17(s.cumulative_deaths),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_scenario_run(run: &ScenarioRun, path: impl AsRef<Path>) -> Result<()> {
    write_scenario_run(run, create(path.as_ref())?)
}

/// Per-draw summaries reloaded from a scenario CSV (for the Hellinger
/// command); scenario identity comes from the file name, not the contents.
pub fn read_scenario_run(reader: impl Read) -> Result<Vec<DrawSummary>> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let cols = [
        col("draw")?,
        col("overload_days_mean")?,
        col("overload_days_sampled")?,
        col("cum_infected")?,
        col("cum_reinfected")?,
        col("cum_deaths")?,
    ];
    let mut out = Vec::new();
    for (row_number, record) in csv_reader.records().enumerate() {
        let line = row_number + 2;
        let record = record?;
        let field = |i: usize| record.get(cols[i]).unwrap_or("");
        let parse_err = |what: &str| Error::ParseRow {
            row: line,
            detail: format!("bad {what}"),
        };
        out.push(DrawSummary {
            draw: field(0).parse().map_err(|_| parse_err("draw index"))?,
            overload_days_mean: field(1).parse().map_err(|_| parse_err("overload count"))?,
            overload_days_sampled: field(2).parse().map_err(|_| parse_err("overload count"))?,
            cumulative_infected: field(3).parse().map_err(|_| parse_err("cumulative"))?,
            cumulative_reinfected: field(4).parse().map_err(|_| parse_err("cumulative"))?,
            cumulative_deaths: field(5).parse().map_err(|_| parse_err("cumulative"))?,
        });
    }
    if out.is_empty() {
        return Err(Error::Validation("scenario file has no rows".into()));
    }
    Ok(out)
}

pub fn load_scenario_run(path: impl AsRef<Path>) -> Result<Vec<DrawSummary>> {
    let file = std::fs::File::open(path.as_ref())?;
    read_scenario_run(std::io::BufReader::new(file))
}

/// Overload-day envelopes across scenarios, one row each.
pub fn save_overload_ranges(runs: &[ScenarioRun], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path.as_ref())?);
    w.write_record([
        "scenario",
        "label",
        "threshold",
        "n_draws",
        "n_failed",
        "min_days_mean",
        "max_days_mean",
        "min_days_sampled",
        "max_days_sampled",
    ])?;
    for run in runs {
        let ((min_m, max_m), (min_s, max_s)) = run.overload_envelope();
        w.write_record([
            run.scenario.id.to_string(),
            run.scenario.label.clone(),
            format_g17(run.threshold),
            run.summaries.len().to_string(),
            run.n_failed.to_string(),
            min_m.to_string(),
            max_m.to_string(),
            min_s.to_string(),
            max_s.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// densities and Hellinger matrices

/// One CSV per density: grid point, value.
pub fn save_densities(labeled: &[(String, &SmoothedDensity)], dir: impl AsRef<Path>) -> Result<()> {
    for (label, density) in labeled {
        let path = dir.as_ref().join(format!("density_{label}.csv"));
        let mut w = csv::Writer::from_writer(create(&path)?);
        w.write_record(["x", "density"])?;
        for (x, v) in density.grid().iter().zip(density.values()) {
            w.write_record([format_g17(*x), format_g17(*v)])?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Square pairwise matrix with row/column labels.
pub fn save_hellinger_matrix(
    labels: &[String],
    matrix: &[Vec<f64>],
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path.as_ref())?);
    let mut header = vec![String::new()];
    header.extend(labels.iter().cloned());
    w.write_record(&header)?;
    for (label, row) in labels.iter().zip(matrix) {
        let mut record = vec![label.clone()];
        record.extend(row.iter().map(|v| format_g17(*v)));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// evidence

/// Text + CSV comparison report.
pub fn save_evidence_report(
    labels: (&str, &str),
    estimates: (&EvidenceEstimate, &EvidenceEstimate),
    dir: impl AsRef<Path>,
) -> Result<()> {
    let (a, b) = estimates;
    let bf = crate::evidence::bayes_factor(a.log_marginal, b.log_marginal);

    let mut w = csv::Writer::from_writer(create(&dir.as_ref().join("evidence.csv"))?);
    w.write_record([
        "model",
        "log_marginal",
        "n_prior_draws",
        "n_zero_likelihood",
        "max_log_likelihood",
    ])?;
    for (label, est) in [(labels.0, a), (labels.1, b)] {
        w.write_record([
            label.to_string(),
            format_g17(est.log_marginal),
            est.n_draws.to_string(),
            est.n_zero_likelihood.to_string(),
            format_g17(est.max_log_likelihood),
        ])?;
    }
    w.flush()?;

    let mut t = create(&dir.as_ref().join("evidence.txt"))?;
    writeln!(t, "marginal-likelihood comparison")?;
    writeln!(t, "------------------------------")?;
    for (label, est) in [(labels.0, a), (labels.1, b)] {
        writeln!(
            t,
            "{label}: log marginal = {:.6} ({} prior draws, {} zero-likelihood)",
            est.log_marginal, est.n_draws, est.n_zero_likelihood
        )?;
    }
    writeln!(t)?;
    writeln!(
        t,
        "BF({}, {}) = {:.6e}  [log BF = {:.6}]",
        labels.0,
        labels.1,
        bf,
        a.log_marginal - b.log_marginal
    )?;
    writeln!(t, "interpretation: {}", crate::evidence::interpretation(bf))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// fit quantile bands

/// Per-series plot-ready bands: day, observed, 2.5%/50%/97.5% quantiles of
/// the fitted mean across draws. `fitted[d]` holds the sorted per-draw
/// values for day `d`.
pub fn save_quantile_bands(
    series: Observable,
    obs: &ObservationSeries,
    fitted_sorted_by_day: &[Vec<f64>],
    dir: impl AsRef<Path>,
) -> Result<()> {
    let path = dir
        .as_ref()
        .join(format!("bands_{}.csv", series.column_name()));
    let mut w = csv::Writer::from_writer(create(&path)?);
    w.write_record(["day", "observed", "q025", "q500", "q975"])?;
    for (day, sorted) in fitted_sorted_by_day.iter().enumerate() {
        let observed = match obs.get(series, day) {
            Some(k) => k.to_string(),
            None => String::new(),
        };
        w.write_record([
            day.to_string(),
            observed,
            format_g17(quantile_sorted(sorted, 0.025)),
            format_g17(quantile_sorted(sorted, 0.5)),
            format_g17(quantile_sorted(sorted, 0.975)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Values of one cumulative series across the draws of a loaded scenario
/// file.
pub fn summaries_series(summaries: &[DrawSummary], series: CumulativeSeries) -> Vec<f64> {
    summaries
        .iter()
        .map(|s| match series {
            CumulativeSeries::Infected => s.cumulative_infected,
            CumulativeSeries::Reinfected => s.cumulative_reinfected,
            CumulativeSeries::Deaths => s.cumulative_deaths,
        })
        .collect()
}
