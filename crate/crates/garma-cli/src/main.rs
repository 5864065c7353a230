//! `garma`: fit, forecast, simulate, and reproduce the bundled studies.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand};
use garma_cli::io::{self, LoadedSeries};
use garma_cli::report::{
    write_forecast_csv, DistributionReport, FitReport, ForecastReport, ForecastStepReport,
};
use garma_cli::scenario::{self, ScenarioFile};
use garma_cli::study::{self, SeedRegistry, StudyOptions, StudyResult};
use garma_core::{
    fit, hdr, m_step_pl, point_forecast, rolling_forecast, Error as CoreError, FitOptions,
    HarmonicSchema, ModelSpec, SeriesFrame, TruncationRule, DEFAULT_TUPLE_BUDGET,
};

#[derive(Parser)]
#[command(
    name = "garma",
    version,
    about = "Poisson GARMA count models: fitting, integer forecasts, and study reproduction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to a series file and report estimates
    Fit(FitArgs),
    /// Forecast held-out observations or future joint steps
    Forecast(ForecastArgs),
    /// Draw a series from a built-in or file-defined scenario
    Simulate(SimulateArgs),
    /// Reproduce a bundled study end to end
    Study(StudyArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// AR and MA orders, e.g. `--garma 0 2`
    #[arg(long, num_args = 2, value_names = ["P", "Q"], required = true)]
    garma: Vec<usize>,
    /// Harmonic periods for the generated seasonal design, e.g. `--harmonics 12 6`
    #[arg(long, num_args = 1..)]
    harmonics: Vec<u32>,
    /// Add a linear trend column to the generated design
    #[arg(long)]
    trend: bool,
    #[arg(long, default_value_t = 1.0)]
    trend_scale: f64,
    /// Use the covariate columns from the input file instead of a generated design
    #[arg(long)]
    covariates_from_file: bool,
    /// Clip floor for zero counts inside the recursion
    #[arg(long, default_value_t = 0.1)]
    clip: f64,
    #[arg(long, default_value_t = 200)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
}

impl ModelArgs {
    fn fit_options(&self) -> FitOptions {
        FitOptions {
            max_iterations: self.max_iterations,
            gradient_tolerance: self.tolerance,
            ..FitOptions::default()
        }
    }

    fn schema(&self) -> Result<HarmonicSchema> {
        Ok(HarmonicSchema::new(self.harmonics.clone(), self.trend, self.trend_scale)?)
    }

    /// Builds the model spec, data frame, and coefficient labels.
    fn prepare(&self, series: &LoadedSeries) -> Result<(ModelSpec, SeriesFrame, Vec<String>)> {
        let (p, q) = (self.garma[0], self.garma[1]);
        if self.covariates_from_file {
            let frame = series.frame_from_columns()?;
            let spec = ModelSpec::new(p, q, frame.covariate_dim(), self.clip)?;
            Ok((spec, frame, series.covariate_names.clone()))
        } else {
            let schema = self.schema()?;
            let rows: Vec<Vec<f64>> = series.times.iter().map(|&t| schema.row(t)).collect();
            let frame = SeriesFrame::new(series.counts.clone(), rows)?
                .with_time_origin(series.times.first().map_or(0, |t| t - 1));
            let spec = ModelSpec::new(p, q, schema.dim(), self.clip)?;
            Ok((spec, frame, scenario::schema_term_names(&schema)))
        }
    }
}

#[derive(Args)]
struct TruncArgs {
    /// Drop candidates whose likelihood falls below this fraction of the best
    #[arg(long, default_value_t = 1e-6)]
    relative_floor: f64,
    /// Consecutive sub-floor candidates past the mode before stopping
    #[arg(long, default_value_t = 3)]
    patience: usize,
    /// Absolute cap on enumerated candidate counts
    #[arg(long, default_value_t = 500)]
    hard_cap: u64,
}

impl TruncArgs {
    fn rule(&self) -> TruncationRule {
        TruncationRule {
            relative_floor: self.relative_floor,
            patience: self.patience,
            hard_cap: self.hard_cap,
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// Series CSV with columns time,count[,covariates...]
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// Directory for JSON output (default: $GARMA_OUT_DIR, else none)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ForecastArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// Held-out observations to forecast one step at a time
    #[arg(long, default_value_t = 1)]
    horizon: usize,
    /// Joint forecast this many steps past the end of the series instead
    #[arg(long)]
    m_step: Option<usize>,
    /// Region levels, e.g. `--hdr 0.5 0.75`
    #[arg(long = "hdr", num_args = 1.., default_values_t = vec![0.5, 0.75])]
    hdr_levels: Vec<f64>,
    #[command(flatten)]
    trunc: TruncArgs,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario JSON (spec, coefficients, design, length, seed)
    #[arg(long, conflicts_with_all = ["model", "n"])]
    scenario: Option<PathBuf>,
    /// Built-in generating model: 1, 2, or robustness
    #[arg(long, requires = "n")]
    model: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV path (default: stdout)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    /// One of: sim1, sim2, polio, robustness, two-step
    id: String,
    /// Restrict the simulation studies to a single series length
    #[arg(long)]
    n: Option<usize>,
    /// Replicates per cell (default: 1000 for sim studies, 100 for robustness)
    #[arg(long)]
    replicates: Option<usize>,
    /// Quick run with 50 replicates
    #[arg(long, conflicts_with = "replicates")]
    smoke: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    horizon: usize,
    #[arg(long = "hdr", num_args = 1.., default_values_t = vec![0.5, 0.75])]
    hdr_levels: Vec<f64>,
    /// Override the bundled polio series
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp
                | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(classify(&e));
        }
    }
}

/// Exit codes: 1 usage or validation, 2 numeric failure, 3 non-convergence.
fn classify(e: &anyhow::Error) -> i32 {
    for cause in e.chain() {
        if let Some(core) = cause.downcast_ref::<CoreError>() {
            return match core {
                CoreError::InvalidSpec(_) => 1,
                CoreError::NumericOverflow { .. }
                | CoreError::SingularInformation
                | CoreError::NonIdentifiable
                | CoreError::ForecastFailed
                | CoreError::BudgetExceeded { .. } => 2,
            };
        }
    }
    1
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Forecast(args) => cmd_forecast(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Study(args) => cmd_study(args),
    }
}

fn out_dir(flag: &Option<PathBuf>) -> Option<PathBuf> {
    flag.clone().or_else(|| std::env::var_os("GARMA_OUT_DIR").map(PathBuf::from))
}

fn cmd_fit(args: FitArgs) -> Result<i32> {
    let series = io::read_series(&args.input)?;
    let (spec, frame, names) = args.model.prepare(&series)?;
    let fitted = fit(&spec, &frame, &args.model.fit_options())?;
    let report = FitReport::new(&fitted, frame.len(), &names);

    let mut stdout = std::io::stdout().lock();
    report.print_human(&mut stdout)?;
    if let Some(dir) = out_dir(&args.output) {
        io::write_json(&dir.join("fit.json"), &report)?;
    }
    Ok(if fitted.converged { 0 } else { 3 })
}

fn cmd_forecast(args: ForecastArgs) -> Result<i32> {
    for &level in &args.hdr_levels {
        if !(0.0..1.0).contains(&level) || level <= 0.0 {
            bail!("HDR level {level} must lie strictly between 0 and 1");
        }
    }
    let series = io::read_series(&args.input)?;
    let (spec, frame, _) = args.model.prepare(&series)?;
    let opts = args.model.fit_options();
    let trunc = args.trunc.rule();
    let mut stdout = std::io::stdout().lock();

    if let Some(m) = args.m_step {
        if m == 0 {
            bail!("--m-step must be at least 1");
        }
        if args.model.covariates_from_file {
            bail!("--m-step needs a generated design; future file covariates are unknown");
        }
        let schema = args.model.schema()?;
        let last_time = series.times.last().copied().unwrap_or(0);
        let future: Vec<Vec<f64>> = (1..=m as i64).map(|h| schema.row(last_time + h)).collect();
        let dist =
            m_step_pl(&spec, &frame, &future, m, &opts, &trunc, DEFAULT_TUPLE_BUDGET)?;
        let point = point_forecast(&dist);
        let regions = args
            .hdr_levels
            .iter()
            .map(|&level| hdr(&dist, level))
            .collect::<garma_core::Result<Vec<_>>>()?;

        writeln!(stdout, "joint {m}-step-ahead forecast")?;
        writeln!(stdout, "point forecast: {point}")?;
        for region in &regions {
            writeln!(
                stdout,
                "{:.0}% HDR: {:?} (mass {:.4})",
                region.level * 100.0,
                region.members,
                region.attained_mass
            )?;
        }
        if let Some(dir) = out_dir(&args.output) {
            let report = DistributionReport::new(&dist, point, &regions);
            io::write_json(&dir.join("forecast.json"), &report)?;
        }
        return Ok(0);
    }

    if args.horizon == 0 {
        bail!("--horizon must be at least 1");
    }
    let steps = rolling_forecast(&spec, &frame, args.horizon, &opts, &trunc, &args.hdr_levels)?;
    let se: f64 = steps.iter().map(|s| (s.point as f64 - s.realized as f64).powi(2)).sum();
    let rmse = (se / steps.len() as f64).sqrt();

    for step in steps.iter().enumerate() {
        let (i, s) = step;
        write!(stdout, "step {}: point {} realized {}", i + 1, s.point, s.realized)?;
        for r in &s.regions {
            write!(stdout, " | {:.0}% HDR [{}, {}]", r.level * 100.0, r.min(), r.max())?;
        }
        writeln!(stdout)?;
    }
    writeln!(stdout, "rmse: {rmse:.4}")?;

    let report = ForecastReport {
        horizon: args.horizon,
        steps: steps
            .iter()
            .enumerate()
            .map(|(i, s)| ForecastStepReport {
                step: i + 1,
                realized: Some(s.realized),
                dist: DistributionReport::new(&s.dist, s.point, &s.regions),
            })
            .collect(),
        rmse: Some(rmse),
    };
    if let Some(dir) = out_dir(&args.output) {
        io::write_json(&dir.join("forecast.json"), &report)?;
        let mut csv = io::create_file(&dir.join("forecast.csv"))?;
        write_forecast_csv(&mut csv, &report)?;
    }
    Ok(0)
}

fn cmd_simulate(args: SimulateArgs) -> Result<i32> {
    let scenario = if let Some(path) = &args.scenario {
        ScenarioFile::load(path)?.to_scenario()?
    } else if let Some(model) = &args.model {
        let n = args.n.expect("clap enforces --n with --model");
        scenario::by_name(model, n, args.seed)?
    } else {
        let mut cmd = Cli::command();
        cmd.error(
            clap::error::ErrorKind::MissingRequiredArgument,
            "either --scenario or --model/--n is required",
        )
        .print()?;
        return Ok(1);
    };

    let frame = garma_core::simulate(&scenario)?;
    match &args.output {
        Some(path) => {
            let mut out = io::create_file(path)?;
            io::write_series(&mut out, &frame, scenario.seed)?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            io::write_series(&mut stdout, &frame, scenario.seed)?;
        }
    }
    Ok(0)
}

fn print_study(out: &mut dyn Write, result: &StudyResult) -> Result<()> {
    writeln!(
        out,
        "study {} (n={}): {} replicates, {} failures",
        result.scenario, result.n, result.replicates, result.failures
    )?;
    writeln!(out, "  RMSE of median forecasts vs median truth: {:.4}", result.rmse)?;
    writeln!(out, "  median per-replicate RMSE:                {:.4}", result.rmse_per_replicate)?;
    for cov in &result.hdr_coverage {
        writeln!(out, "  {:.0}% HDR coverage: {:.3}", cov.level * 100.0, cov.coverage)?;
    }
    for w in &result.warnings {
        writeln!(out, "  warning: {w}")?;
    }
    Ok(())
}

fn write_study_files(dir: &Path, stem: &str, result: &StudyResult) -> Result<()> {
    io::write_json(&dir.join(format!("{stem}.json")), result)?;
    let mut csv = io::create_file(&dir.join(format!("{stem}_figure.csv")))?;
    study::write_figure_csv(&mut csv, result)?;
    Ok(())
}

fn cmd_study(args: StudyArgs) -> Result<i32> {
    let replicates = args
        .replicates
        .unwrap_or(if args.smoke { study::SMOKE_REPLICATES } else { 1000 });
    let opts = StudyOptions {
        replicates,
        horizon: args.horizon,
        seed: args.seed,
        levels: args.hdr_levels.clone(),
    };
    let dir = out_dir(&args.output);
    let mut stdout = std::io::stdout().lock();

    match args.id.as_str() {
        "sim1" | "sim2" => {
            let model = if args.id == "sim1" { 1 } else { 2 };
            let cells = args.n.map_or_else(|| vec![50, 100, 240], |n| vec![n]);
            for n in cells {
                let result = study::simulation_study(model, n, &opts)
                    .with_context(|| format!("study {} n={n}", args.id))?;
                print_study(&mut stdout, &result)?;
                if let Some(dir) = &dir {
                    write_study_files(dir, &format!("{}_n{n}", args.id), &result)?;
                    io::write_json(
                        &dir.join(format!("{}_n{n}_seeds.json", args.id)),
                        &SeedRegistry::new(opts.seed, opts.replicates),
                    )?;
                }
            }
        }
        "polio" => {
            let series = match &args.input {
                Some(path) => io::read_series(path)?,
                None => io::parse_series(garma_cli::POLIO_CSV)?,
            };
            let polio = study::polio_study(&series, 158, args.horizon, &opts.levels)?;
            let names = scenario::schema_term_names(&scenario::polio_schema());
            let fit_report = FitReport::new(&polio.fitted, 158, &names);
            fit_report.print_human(&mut stdout)?;
            print_study(&mut stdout, &polio.result)?;
            if let Some(dir) = &dir {
                io::write_json(&dir.join("polio_fit.json"), &fit_report)?;
                write_study_files(dir, "polio_study", &polio.result)?;
            }
        }
        "robustness" => {
            let opts = StudyOptions {
                replicates: args.replicates.unwrap_or(if args.smoke {
                    study::SMOKE_REPLICATES
                } else {
                    100
                }),
                ..opts
            };
            let result = study::robustness_study(args.n.unwrap_or(100), &opts)?;
            print_study(&mut stdout, &result.actual)?;
            print_study(&mut stdout, &result.refit)?;
            print_study(&mut stdout, &result.truncated)?;
            writeln!(
                stdout,
                "misspecification penalty: {:+.4} median RMSE",
                result.truncated.rmse - result.actual.rmse
            )?;
            if let Some(dir) = &dir {
                write_study_files(dir, "robustness_actual", &result.actual)?;
                write_study_files(dir, "robustness_refit", &result.refit)?;
                write_study_files(dir, "robustness_truncated", &result.truncated)?;
                io::write_json(
                    &dir.join("robustness_seeds.json"),
                    &SeedRegistry::new(opts.seed, opts.replicates),
                )?;
            }
        }
        "two-step" => {
            let result = study::two_step_study(args.n.unwrap_or(100), args.seed, &opts.levels)?;
            writeln!(stdout, "two-step joint forecast, {} (n={})", result.scenario, result.n)?;
            writeln!(stdout, "realized count: {}", result.realized)?;
            writeln!(stdout, "point forecast: {}", result.report.point)?;
            for region in &result.report.regions {
                writeln!(
                    stdout,
                    "{:.0}% HDR: {:?} (mass {:.4})",
                    region.level * 100.0,
                    region.members,
                    region.attained_mass
                )?;
            }
            if let Some(dir) = &dir {
                io::write_json(&dir.join("two_step.json"), &result)?;
            }
        }
        other => bail!("unknown study `{other}`; expected sim1, sim2, polio, robustness, or two-step"),
    }
    Ok(0)
}
