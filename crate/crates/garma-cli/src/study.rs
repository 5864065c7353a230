//! Study drivers: simulation replication, the polio pipeline, the
//! misspecification comparison, and the two-step joint forecast.

use std::io::Write;

use anyhow::{bail, Context, Result};
use garma_core::{
    fit, m_step_pl, point_forecast, predictor_path, rolling_forecast, simulate_stream,
    FitOptions, FittedModel, HdrRegion, ModelSpec, SeriesFrame, SimScenario, TruncationRule,
    DEFAULT_TUPLE_BUDGET,
};
use serde::{Deserialize, Serialize};

use crate::io::LoadedSeries;
use crate::report::DistributionReport;
use crate::scenario;

#[derive(Debug, Clone)]
pub struct StudyOptions {
    pub replicates: usize,
    pub horizon: usize,
    pub seed: u64,
    pub levels: Vec<f64>,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions { replicates: 1000, horizon: 10, seed: 1, levels: vec![0.5, 0.75] }
    }
}

/// Replicate count for quick runs.
pub const SMOKE_REPLICATES: usize = 50;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionSummary {
    pub level: f64,
    pub lower: u64,
    pub upper: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepSummary {
    pub step: usize,
    /// Lower median of the realized future counts across replicates.
    pub truth: u64,
    /// Lower median of the point forecasts across replicates.
    pub point: u64,
    pub regions: Vec<RegionSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelCoverage {
    pub level: f64,
    /// Fraction of (replicate, step) pairs whose realized count fell inside
    /// the region at this level.
    pub coverage: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyResult {
    pub scenario: String,
    pub n: usize,
    pub horizon: usize,
    /// Replicates that produced forecasts.
    pub replicates: usize,
    pub failures: usize,
    pub seed: u64,
    /// RMSE between the median point-forecast path and the median realized
    /// path (the per-step medians in `steps`). Median aggregation cancels the
    /// observation noise shared by both paths, so this measures how well the
    /// forecasts center on the process rather than how noisy the counts are.
    /// With a single replicate it reduces to the plain RMSE of the forecasts
    /// against the realized counts.
    pub rmse: f64,
    /// Median over replicates of the per-replicate RMSE between point
    /// forecasts and realized counts. Bounded below by the Poisson noise
    /// floor, so it grows with the level of the series.
    pub rmse_per_replicate: f64,
    pub hdr_coverage: Vec<LevelCoverage>,
    pub steps: Vec<StepSummary>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedRegistry {
    pub rng: String,
    pub master_seed: u64,
    pub streams: Vec<u64>,
}

impl SeedRegistry {
    pub fn new(master_seed: u64, n0: usize) -> Self {
        SeedRegistry {
            rng: "chacha12".into(),
            master_seed,
            streams: (0..n0 as u64).collect(),
        }
    }
}

fn lower_median_u64(values: &mut Vec<u64>) -> u64 {
    values.sort_unstable();
    values[(values.len() - 1) / 2]
}

fn lower_median_f64(values: &mut Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values[(values.len() - 1) / 2]
}

fn rmse(points: &[u64], target: &[f64]) -> f64 {
    let ss: f64 =
        points.iter().zip(target).map(|(&p, &t)| (p as f64 - t) * (p as f64 - t)).sum();
    (ss / points.len() as f64).sqrt()
}

/// Forecast records for one replicate.
struct ReplicateRun {
    points: Vec<u64>,
    realized: Vec<u64>,
    regions: Vec<Vec<HdrRegion>>,
}

/// Simulates `scenario` (length n + horizon), fits `fit_spec` on the first n
/// points, and forecasts the rest one step at a time.
fn run_replicate(
    scenario: &SimScenario,
    fit_spec: &ModelSpec,
    stream: u64,
    horizon: usize,
    levels: &[f64],
) -> garma_core::Result<ReplicateRun> {
    let frame = simulate_stream(scenario, stream)?;
    let opts = FitOptions::default();
    let trunc = TruncationRule::default();
    let steps = rolling_forecast(fit_spec, &frame, horizon, &opts, &trunc, levels)?;

    Ok(ReplicateRun {
        points: steps.iter().map(|s| s.point).collect(),
        realized: steps.iter().map(|s| s.realized).collect(),
        regions: steps.into_iter().map(|s| s.regions).collect(),
    })
}

fn aggregate(
    scenario_name: &str,
    n: usize,
    opts: &StudyOptions,
    runs: &[ReplicateRun],
    failures: usize,
) -> Result<StudyResult> {
    if runs.is_empty() {
        bail!("every replicate failed in study {scenario_name}");
    }
    let mut warnings = Vec::new();
    if failures * 10 > (runs.len() + failures) {
        warnings.push(format!(
            "{failures} of {} replicates failed; results use the survivors",
            runs.len() + failures
        ));
    }

    let horizon = opts.horizon;
    let mut steps = Vec::with_capacity(horizon);
    for s in 0..horizon {
        let mut truths: Vec<u64> = runs.iter().map(|r| r.realized[s]).collect();
        let mut points: Vec<u64> = runs.iter().map(|r| r.points[s]).collect();
        let regions = opts
            .levels
            .iter()
            .enumerate()
            .map(|(li, &level)| {
                let mut lows: Vec<u64> = runs.iter().map(|r| r.regions[s][li].min()).collect();
                let mut highs: Vec<u64> = runs.iter().map(|r| r.regions[s][li].max()).collect();
                RegionSummary {
                    level,
                    lower: lower_median_u64(&mut lows),
                    upper: lower_median_u64(&mut highs),
                }
            })
            .collect();
        steps.push(StepSummary {
            step: s + 1,
            truth: lower_median_u64(&mut truths),
            point: lower_median_u64(&mut points),
            regions,
        });
    }

    let median_points: Vec<u64> = steps.iter().map(|s| s.point).collect();
    let median_truth: Vec<f64> = steps.iter().map(|s| s.truth as f64).collect();
    let mut rmse_counts: Vec<f64> = runs
        .iter()
        .map(|r| {
            let realized: Vec<f64> = r.realized.iter().map(|&y| y as f64).collect();
            rmse(&r.points, &realized)
        })
        .collect();

    let hdr_coverage = opts
        .levels
        .iter()
        .enumerate()
        .map(|(li, &level)| {
            let hits: usize = runs
                .iter()
                .flat_map(|r| (0..horizon).map(move |s| (r, s)))
                .filter(|(r, s)| r.regions[*s][li].contains(r.realized[*s]))
                .count();
            LevelCoverage { level, coverage: hits as f64 / (runs.len() * horizon) as f64 }
        })
        .collect();

    Ok(StudyResult {
        scenario: scenario_name.to_string(),
        n,
        horizon,
        replicates: runs.len(),
        failures,
        seed: opts.seed,
        rmse: rmse(&median_points, &median_truth),
        rmse_per_replicate: lower_median_f64(&mut rmse_counts),
        hdr_coverage,
        steps,
        warnings,
    })
}

/// Simulation replication protocol: simulate, fit, forecast the final
/// `horizon` counts one step at a time, aggregate medians across replicates.
pub fn simulation_study(model: u8, n: usize, opts: &StudyOptions) -> Result<StudyResult> {
    let scenario = match model {
        1 => scenario::model1(n + opts.horizon, opts.seed),
        2 => scenario::model2(n + opts.horizon, opts.seed),
        other => bail!("unknown simulation model {other}"),
    };
    let mut runs = Vec::with_capacity(opts.replicates);
    let mut failures = 0usize;
    for stream in 0..opts.replicates as u64 {
        match run_replicate(&scenario, &scenario.spec, stream, opts.horizon, &opts.levels) {
            Ok(run) => runs.push(run),
            Err(_) => failures += 1,
        }
    }
    aggregate(&format!("model{model}"), n, opts, &runs, failures)
}

pub struct PolioStudy {
    pub fitted: FittedModel,
    pub result: StudyResult,
}

/// Fits the bundled polio series on its first `fit_length` months and rolls
/// one-step forecasts over the remainder.
pub fn polio_study(
    series: &LoadedSeries,
    fit_length: usize,
    horizon: usize,
    levels: &[f64],
) -> Result<PolioStudy> {
    if series.len() != fit_length + horizon {
        bail!(
            "expected {} observations ({fit_length} to fit + {horizon} to forecast), got {}",
            fit_length + horizon,
            series.len()
        );
    }
    let schema = scenario::polio_schema();
    let spec = scenario::polio_spec();
    let rows: Vec<Vec<f64>> = series.times.iter().map(|&t| schema.row(t)).collect();
    let frame = SeriesFrame::new(series.counts.clone(), rows)?
        .with_time_origin(series.times.first().map_or(0, |t| t - 1));

    let opts = FitOptions::default();
    let fitted = fit(&spec, &frame.prefix(fit_length), &opts).context("polio fit")?;

    let trunc = TruncationRule::default();
    let steps = rolling_forecast(&spec, &frame, horizon, &opts, &trunc, levels)
        .context("polio rolling forecast")?;

    let run = ReplicateRun {
        points: steps.iter().map(|s| s.point).collect(),
        realized: steps.iter().map(|s| s.realized).collect(),
        regions: steps.into_iter().map(|s| s.regions).collect(),
    };
    let study_opts = StudyOptions {
        replicates: 1,
        horizon,
        seed: 0,
        levels: levels.to_vec(),
    };
    let result = aggregate("polio", fit_length, &study_opts, &[run], 0)?;
    Ok(PolioStudy { fitted, result })
}

pub struct RobustnessStudy {
    /// Forecasts from the generating model itself: with no free parameters
    /// the profile predictive collapses to the conditional Poisson mass.
    pub actual: StudyResult,
    /// Forecasts from a refit at the true order; carries the estimation
    /// noise of three extra coefficients.
    pub refit: StudyResult,
    /// Forecasts from the truncated order-2 fit.
    pub truncated: StudyResult,
}

/// Conditional Poisson mass at a known rate, truncated the same way as the
/// profile sweep.
fn plug_in_distribution(
    lambda: f64,
    trunc: &TruncationRule,
) -> garma_core::Result<garma_core::ForecastDistribution> {
    let floor = trunc.relative_floor.ln();
    let mut lls = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut mode = 0u64;
    let mut streak = 0usize;
    let mut log_fact = 0.0;
    for y in 0..=trunc.hard_cap {
        if y > 0 {
            log_fact += (y as f64).ln();
        }
        let ll = -lambda + y as f64 * lambda.ln() - log_fact;
        lls.push(ll);
        if ll > best {
            best = ll;
            mode = y;
        }
        if y > mode && ll - best < floor {
            streak += 1;
            if streak >= trunc.patience {
                break;
            }
        } else {
            streak = 0;
        }
    }
    garma_core::ForecastDistribution::from_log_likelihoods(&lls, None, Vec::new())
}

/// Forecasts each step from the generating process's own conditional mean.
fn run_plug_in_replicate(
    scenario: &SimScenario,
    stream: u64,
    horizon: usize,
    levels: &[f64],
) -> garma_core::Result<ReplicateRun> {
    let frame = simulate_stream(scenario, stream)?;
    let truth = predictor_path(&scenario.spec, &scenario.params, &frame)?;
    let n = frame.len() - horizon;
    let trunc = TruncationRule::default();

    let mut points = Vec::with_capacity(horizon);
    let mut regions = Vec::with_capacity(horizon);
    for s in 0..horizon {
        let dist = plug_in_distribution(truth.lambda[n + s], &trunc)?;
        points.push(point_forecast(&dist));
        regions.push(
            levels
                .iter()
                .map(|&level| garma_core::hdr(&dist, level))
                .collect::<garma_core::Result<Vec<_>>>()?,
        );
    }
    Ok(ReplicateRun { points, realized: frame.counts()[n..].to_vec(), regions })
}

/// Simulates from the order-5 moving-average truth and forecasts each
/// replicate three ways: from the generating model itself, from a refit at
/// the true order, and from the truncated order-2 fit.
pub fn robustness_study(n: usize, opts: &StudyOptions) -> Result<RobustnessStudy> {
    let scenario = scenario::robustness_truth(n + opts.horizon, opts.seed);
    let short_spec = ModelSpec::new(0, 2, 6, 0.1).expect("static spec");

    let mut actual_runs = Vec::new();
    let mut refit_runs = Vec::new();
    let mut trunc_runs = Vec::new();
    let mut actual_failures = 0usize;
    let mut refit_failures = 0usize;
    let mut trunc_failures = 0usize;
    for stream in 0..opts.replicates as u64 {
        match run_plug_in_replicate(&scenario, stream, opts.horizon, &opts.levels) {
            Ok(run) => actual_runs.push(run),
            Err(_) => actual_failures += 1,
        }
        match run_replicate(&scenario, &scenario.spec, stream, opts.horizon, &opts.levels) {
            Ok(run) => refit_runs.push(run),
            Err(_) => refit_failures += 1,
        }
        match run_replicate(&scenario, &short_spec, stream, opts.horizon, &opts.levels) {
            Ok(run) => trunc_runs.push(run),
            Err(_) => trunc_failures += 1,
        }
    }

    Ok(RobustnessStudy {
        actual: aggregate("robustness-actual-model", n, opts, &actual_runs, actual_failures)?,
        refit: aggregate("robustness-refit-order5", n, opts, &refit_runs, refit_failures)?,
        truncated: aggregate("robustness-truncated", n, opts, &trunc_runs, trunc_failures)?,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoStepStudy {
    pub scenario: String,
    pub n: usize,
    pub seed: u64,
    pub realized: u64,
    pub report: DistributionReport,
}

/// Joint two-step-ahead forecast on one simulated autoregressive series.
/// Simulates two extra observations so the realized target can be reported
/// next to the forecast.
pub fn two_step_study(n: usize, seed: u64, levels: &[f64]) -> Result<TwoStepStudy> {
    let scenario = scenario::model1(n + 2, seed);
    let full = garma_core::simulate(&scenario)?;
    let frame = full.prefix(n);

    let schema = scenario::trend_harmonic_schema();
    let future: Vec<Vec<f64>> =
        (1..=2).map(|h| schema.row(frame.time_origin() + n as i64 + h)).collect();

    let dist = m_step_pl(
        &scenario.spec,
        &frame,
        &future,
        2,
        &FitOptions::default(),
        &TruncationRule::default(),
        DEFAULT_TUPLE_BUDGET,
    )?;
    let point = point_forecast(&dist);
    let regions = levels
        .iter()
        .map(|&level| garma_core::hdr(&dist, level))
        .collect::<garma_core::Result<Vec<_>>>()?;

    Ok(TwoStepStudy {
        scenario: "model1-two-step".into(),
        n,
        seed,
        realized: full.counts()[n + 1],
        report: DistributionReport::new(&dist, point, &regions),
    })
}

/// Plot-ready table: truth, median forecast, and region bounds per step.
pub fn write_figure_csv(out: &mut dyn Write, result: &StudyResult) -> Result<()> {
    write!(out, "step,truth,point")?;
    for region in &result.steps[0].regions {
        let pct = (region.level * 100.0).round() as u32;
        write!(out, ",hdr{pct}_lower,hdr{pct}_upper")?;
    }
    writeln!(out)?;
    for step in &result.steps {
        write!(out, "{},{},{}", step.step, step.truth, step.point)?;
        for region in &step.regions {
            write!(out, ",{},{}", region.lower, region.upper)?;
        }
        writeln!(out)?;
    }
    Ok(())
}
