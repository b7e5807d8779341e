//! `stci` — composite indicator index construction from the command line.
//!
//! Subcommands mirror the pipeline stages: `ingest` (coverage), `diagnose`
//! (consistency screen), `convert` (comparable units), `index` (composite
//! scores), `rank` (bands), `sensitivity` (perturbation comparisons), and
//! `report` (every artifact into a directory).
//!
//! Exit status: 0 on success, 1 for invalid inputs or flags, 2 when the
//! inputs parse but the computation is undefined on them (degenerate column,
//! too few entities, and the like).

mod inputs;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use stci::aggregate::{aggregate, MissingPolicy};
use stci::classify::classify;
use stci::diagnostics::{
    consistency_check, histogram, implied_extremes_check, skew_flags, Thresholds,
};
use stci::io;
use stci::normalize::{Method, VarianceMode};
use stci::reference;
use stci::sensitivity::{compare_weights, leave_one_country_out, leave_one_indicator_out};
use stci::ErrorCategory;

use inputs::{ensure_covers, filter_raw, load, prepare, Request};

#[derive(Parser)]
#[command(
    name = "stci",
    version,
    about = "Build a composite capacity index from an indicator panel",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a panel, apply exclusions, and report coverage groups
    Ingest(IngestArgs),
    /// Column statistics, correlations, and internal-consistency flags
    Diagnose(DiagnoseArgs),
    /// Rewrite raw columns in comparable units (z-scores or min-max)
    Convert(ConvertArgs),
    /// Aggregate converted columns into composite and domain scores
    Index(IndexArgs),
    /// Rank composite scores and assign capacity bands
    Rank(RankArgs),
    /// Re-run the pipeline under a perturbation and compare rankings
    Sensitivity(SensitivityArgs),
    /// Run the whole chain and write every artifact into a directory
    Report(ReportArgs),
}

#[derive(Args)]
struct InputFlags {
    /// Indicator panel CSV
    #[arg(long, value_name = "FILE")]
    data: Option<PathBuf>,
    /// Indicator definitions JSON; defaults to the built-in set
    #[arg(long, value_name = "FILE")]
    specs: Option<PathBuf>,
    /// Exclusion list CSV, one `code,reason` per line
    #[arg(long, value_name = "FILE")]
    exclusions: Option<PathBuf>,
    /// Keep only countries with at least this many indicators present
    /// (default: all of them)
    #[arg(long, value_name = "N")]
    min_indicators: Option<usize>,
}

#[derive(Args)]
struct ConversionFlags {
    /// Conversion method (default: zscore)
    #[arg(long, value_enum, value_name = "METHOD")]
    method: Option<MethodArg>,
    /// Fixed per-indicator bounds JSON; required with `--method minmax`
    #[arg(long, value_name = "FILE")]
    bounds: Option<PathBuf>,
    /// Spread estimator for z-scores (default: population)
    #[arg(long, value_enum, value_name = "MODE")]
    variance: Option<VarianceArg>,
}

#[derive(Args)]
struct SchemeFlags {
    /// Weight scheme JSON; defaults to equal weights
    #[arg(long, value_name = "FILE")]
    weights: Option<PathBuf>,
    /// Treatment of missing values during aggregation (default: renormalize)
    #[arg(long, value_enum, value_name = "POLICY")]
    missing: Option<MissingArg>,
}

#[derive(Args)]
struct OutputFlags {
    /// Output format (default: text)
    #[arg(long, value_enum, value_name = "FORMAT")]
    format: Option<FormatArg>,
    /// Write the artifact into this directory instead of stdout
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum MethodArg {
    /// Standard scores: (x − mean) / sd
    Zscore,
    /// Rescale into [0, 1] against fixed bounds
    Minmax,
}

impl MethodArg {
    fn get(self) -> Method {
        match self {
            MethodArg::Zscore => Method::ZScore,
            MethodArg::Minmax => Method::MinMax,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MissingArg {
    /// Spread the absent indicators' weight over the present ones
    Renormalize,
    /// Score absent indicators as zero
    Zerofill,
}

impl MissingArg {
    fn get(self) -> MissingPolicy {
        match self {
            MissingArg::Renormalize => MissingPolicy::Renormalize,
            MissingArg::Zerofill => MissingPolicy::ZeroFill,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VarianceArg {
    /// Divide by n
    Population,
    /// Divide by n − 1
    Sample,
}

impl VarianceArg {
    fn get(self) -> VarianceMode {
        match self {
            VarianceArg::Population => VarianceMode::Population,
            VarianceArg::Sample => VarianceMode::Sample,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum FormatArg {
    Text,
    Csv,
    Json,
}

impl FormatArg {
    fn ext(self) -> &'static str {
        match self {
            FormatArg::Text => "txt",
            FormatArg::Csv => "csv",
            FormatArg::Json => "json",
        }
    }
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    input: InputFlags,
    #[command(flatten)]
    conversion: ConversionFlags,
    #[command(flatten)]
    scheme: SchemeFlags,
    #[command(flatten)]
    output: OutputFlags,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    input: InputFlags,
    #[command(flatten)]
    conversion: ConversionFlags,
    #[command(flatten)]
    scheme: SchemeFlags,
    #[command(flatten)]
    output: OutputFlags,
    /// Check the bundled published summary tables instead of a data file
    #[arg(long)]
    paper_tables: bool,
}

#[derive(Args)]
struct ConvertArgs {
    #[command(flatten)]
    input: InputFlags,
    #[command(flatten)]
    conversion: ConversionFlags,
    #[command(flatten)]
    scheme: SchemeFlags,
    /// Write `converted.csv` into this directory instead of stdout
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IndexArgs {
    #[command(flatten)]
    input: InputFlags,
    #[command(flatten)]
    conversion: ConversionFlags,
    #[command(flatten)]
    scheme: SchemeFlags,
    #[command(flatten)]
    output: OutputFlags,
}

#[derive(Args)]
struct RankArgs {
    #[command(flatten)]
    input: InputFlags,
    #[command(flatten)]
    conversion: ConversionFlags,
    #[command(flatten)]
    scheme: SchemeFlags,
    #[command(flatten)]
    output: OutputFlags,
}

#[derive(Args)]
struct SensitivityArgs {
    #[command(flatten)]
    input: InputFlags,
    #[command(flatten)]
    conversion: ConversionFlags,
    #[command(flatten)]
    scheme: SchemeFlags,
    #[command(flatten)]
    output: OutputFlags,
    #[command(flatten)]
    selector: Selector,
}

/// Exactly one perturbation per run.
#[derive(Args)]
#[group(required = true, multiple = false)]
struct Selector {
    /// Re-run without this country and compare rankings
    #[arg(long, value_name = "CODE")]
    drop_country: Option<String>,
    /// Re-run without this indicator and compare rankings
    #[arg(long, value_name = "ID")]
    drop_indicator: Option<String>,
    /// Re-score under this alternative weight scheme and compare
    #[arg(long, value_name = "FILE")]
    compare_weights: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    input: InputFlags,
    #[command(flatten)]
    conversion: ConversionFlags,
    #[command(flatten)]
    scheme: SchemeFlags,
    /// Directory every artifact is written into
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Histogram bin count
    #[arg(long, value_name = "N", default_value_t = 10)]
    bins: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = u8::from(err.use_stderr());
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Diagnose(args) => cmd_diagnose(args),
        Command::Convert(args) => cmd_convert(args),
        Command::Index(args) => cmd_index(args),
        Command::Rank(args) => cmd_rank(args),
        Command::Sensitivity(args) => cmd_sensitivity(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// 1 for input problems, 2 when a computation is undefined on valid inputs.
fn exit_code(err: &anyhow::Error) -> u8 {
    err.chain()
        .find_map(|cause| cause.downcast_ref::<stci::Error>())
        .map(|e| match e.category() {
            ErrorCategory::Validation => 1,
            ErrorCategory::Computation => 2,
        })
        .unwrap_or(1)
}

fn request<'a>(
    input: &'a InputFlags,
    conversion: &'a ConversionFlags,
    scheme: &'a SchemeFlags,
    converts: bool,
    accept_converted: bool,
) -> Request<'a> {
    Request {
        data: input.data.as_deref(),
        specs: input.specs.as_deref(),
        exclusions: input.exclusions.as_deref(),
        weights: scheme.weights.as_deref(),
        bounds: conversion.bounds.as_deref(),
        method: conversion.method.map(MethodArg::get),
        missing: scheme.missing.map(MissingArg::get),
        variance: conversion
            .variance
            .map(VarianceArg::get)
            .unwrap_or_default(),
        min_indicators: input.min_indicators,
        converts,
        accept_converted,
    }
}

fn emit(out: Option<&Path>, name: &str, content: &str) -> Result<()> {
    match out {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(dir) => write_into(dir, name, content),
    }
}

fn write_into(dir: &Path, name: &str, content: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    let run = load(&request(&args.input, &args.conversion, &args.scheme, false, false))?;
    let (_, coverage) = filter_raw(&run)?;
    let stamp = run.stamp();
    let format = args.output.format.unwrap_or(FormatArg::Text);
    let content = match format {
        FormatArg::Text => io::coverage_text(&coverage, &stamp),
        FormatArg::Csv => io::coverage_csv(&coverage, &stamp),
        FormatArg::Json => io::json_artifact("coverage_report", &stamp, &coverage),
    };
    emit(
        args.output.out.as_deref(),
        &format!("coverage.{}", format.ext()),
        &content,
    )
}

fn cmd_diagnose(args: DiagnoseArgs) -> Result<()> {
    let format = args.output.format.unwrap_or(FormatArg::Text);
    if args.paper_tables {
        if args.input.data.is_some() {
            bail!("--paper-tables checks the bundled tables; it cannot be combined with --data");
        }
        let run = load(&request(&args.input, &args.conversion, &args.scheme, false, false))?;
        let stamp = run.stamp();
        let extremes = implied_extremes_check(
            &reference::published_stats_rows(),
            &reference::published_ranges(),
        )?;
        let flags = skew_flags(&reference::published_skews(), Thresholds::default().skew);
        if !extremes.all_pass() {
            eprintln!("warning: some implied raw extremes fall outside tolerance");
        }
        let content = match format {
            FormatArg::Text => format!(
                "{}\n{}",
                io::extremes_text(&extremes, &stamp),
                io::flags_text(&flags)
            ),
            FormatArg::Csv => io::extremes_csv(&extremes, &stamp),
            FormatArg::Json => io::json_artifact(
                "published_table_checks",
                &stamp,
                &serde_json::json!({ "extremes": extremes, "skew_flags": flags }),
            ),
        };
        return emit(
            args.output.out.as_deref(),
            &format!("published_checks.{}", format.ext()),
            &content,
        );
    }
    let run = load(&request(&args.input, &args.conversion, &args.scheme, true, true))?;
    let prepared = prepare(&run)?;
    let report = consistency_check(&prepared.converted, &Thresholds::default());
    let stamp = run.stamp();
    let content = match format {
        FormatArg::Text => io::diagnostics_text(&report, &stamp),
        FormatArg::Csv => io::correlation_csv(&report.correlation, &stamp),
        FormatArg::Json => io::json_artifact("diagnostics", &stamp, &report),
    };
    emit(
        args.output.out.as_deref(),
        &format!("diagnostics.{}", format.ext()),
        &content,
    )
}

fn cmd_convert(args: ConvertArgs) -> Result<()> {
    let run = load(&request(&args.input, &args.conversion, &args.scheme, true, false))?;
    let prepared = prepare(&run)?;
    let clamped = prepared.converted.total_clamped();
    if clamped > 0 {
        eprintln!("note: {clamped} values clamped to their bounds");
    }
    let content = io::converted_csv(&prepared.converted, &run.stamp());
    emit(args.out.as_deref(), "converted.csv", &content)
}

fn cmd_index(args: IndexArgs) -> Result<()> {
    let run = load(&request(&args.input, &args.conversion, &args.scheme, true, true))?;
    let prepared = prepare(&run)?;
    let results = aggregate(&prepared.converted, &run.scheme)?;
    for r in results.iter().filter(|r| r.score.is_none()) {
        eprintln!("warning: no score for {}: nothing to aggregate", r.code);
    }
    let stamp = run.stamp();
    let format = args.output.format.unwrap_or(FormatArg::Text);
    let content = match format {
        FormatArg::Text => io::composite_text(&results, &stamp),
        FormatArg::Csv => io::composite_csv(&results, &stamp),
        FormatArg::Json => io::json_artifact("composite_scores", &stamp, &results),
    };
    emit(
        args.output.out.as_deref(),
        &format!("composite.{}", format.ext()),
        &content,
    )
}

fn cmd_rank(args: RankArgs) -> Result<()> {
    let run = load(&request(&args.input, &args.conversion, &args.scheme, true, true))?;
    let prepared = prepare(&run)?;
    let results = aggregate(&prepared.converted, &run.scheme)?;
    let rows = classify(&results)?;
    let countries = prepared.converted.countries();
    let stamp = run.stamp();
    let format = args.output.format.unwrap_or(FormatArg::Text);
    let content = match format {
        FormatArg::Text => io::classification_text(&rows, countries, &stamp),
        FormatArg::Csv => io::classification_csv(&rows, countries, &stamp),
        FormatArg::Json => io::json_artifact("classification", &stamp, &rows),
    };
    emit(
        args.output.out.as_deref(),
        &format!("classification.{}", format.ext()),
        &content,
    )
}

fn cmd_sensitivity(args: SensitivityArgs) -> Result<()> {
    // Weight comparison re-scores a converted panel; the leave-one-out
    // perturbations recompute the whole chain from raw values.
    let from_converted = args.selector.compare_weights.is_some();
    let run = load(&request(
        &args.input,
        &args.conversion,
        &args.scheme,
        true,
        from_converted,
    ))?;
    let report = if let Some(code) = &args.selector.drop_country {
        let (matrix, _) = filter_raw(&run)?;
        leave_one_country_out(&matrix, code, &run.pipeline_config())?
    } else if let Some(id) = &args.selector.drop_indicator {
        let (matrix, _) = filter_raw(&run)?;
        leave_one_indicator_out(&matrix, id, &run.pipeline_config())?
    } else {
        let path = args
            .selector
            .compare_weights
            .as_ref()
            .expect("clap enforces one selector");
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut alternative = io::read_weights_json(&text)
            .with_context(|| format!("parsing {}", path.display()))?;
        ensure_covers(&alternative, &run.specs)?;
        // the aggregation policy is a property of the run, not the challenger
        alternative.missing_policy = run.scheme.missing_policy;
        let prepared = prepare(&run)?;
        compare_weights(&prepared.converted, &run.scheme, &alternative)?
    };
    let stamp = run.stamp();
    let format = args.output.format.unwrap_or(FormatArg::Text);
    let content = match format {
        FormatArg::Text => io::sensitivity_text(&report, &stamp),
        FormatArg::Csv => io::sensitivity_csv(&report, &stamp),
        FormatArg::Json => io::json_artifact("sensitivity", &stamp, &report),
    };
    emit(
        args.output.out.as_deref(),
        &format!("sensitivity.{}", format.ext()),
        &content,
    )
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let run = load(&request(&args.input, &args.conversion, &args.scheme, true, false))?;
    let prepared = prepare(&run)?;
    let matrix = prepared.raw.as_ref().expect("raw input enforced at load");
    let coverage = prepared.coverage.as_ref().expect("raw input enforced at load");
    let stamp = run.stamp();
    let dir = &args.out;

    write_into(dir, "coverage.csv", &io::coverage_csv(coverage, &stamp))?;
    write_into(dir, "coverage.txt", &io::coverage_text(coverage, &stamp))?;

    let diagnostics = consistency_check(&prepared.converted, &Thresholds::default());
    write_into(dir, "diagnostics.txt", &io::diagnostics_text(&diagnostics, &stamp))?;
    write_into(
        dir,
        "diagnostics.json",
        &io::json_artifact("diagnostics", &stamp, &diagnostics),
    )?;
    write_into(
        dir,
        "correlation.csv",
        &io::correlation_csv(&diagnostics.correlation, &stamp),
    )?;

    write_into(
        dir,
        "converted.csv",
        &io::converted_csv(&prepared.converted, &stamp),
    )?;

    let results = aggregate(&prepared.converted, &run.scheme)?;
    write_into(dir, "composite.csv", &io::composite_csv(&results, &stamp))?;
    write_into(dir, "composite.txt", &io::composite_text(&results, &stamp))?;

    let gdp: Vec<f64> = matrix
        .countries()
        .iter()
        .filter_map(|c| c.gdp_per_capita)
        .collect();
    if gdp.is_empty() {
        eprintln!("note: no per-capita GDP metadata; skipping its histogram");
    } else {
        let bins = histogram(&gdp, args.bins)?;
        write_into(
            dir,
            "histogram_gdp_per_capita.csv",
            &io::histogram_csv(&bins, "gdp_per_capita", &stamp),
        )?;
    }
    let mut pooled = Vec::new();
    for i in 0..prepared.converted.countries().len() {
        for j in 0..prepared.converted.indicators().len() {
            if let Some(v) = prepared.converted.value(i, j) {
                pooled.push(v);
            }
        }
    }
    let bins = histogram(&pooled, args.bins)?;
    write_into(
        dir,
        "histogram_converted.csv",
        &io::histogram_csv(&bins, "converted_values", &stamp),
    )?;
    let scores: Vec<f64> = results.iter().filter_map(|r| r.score).collect();
    if scores.is_empty() {
        eprintln!("note: no composite scores; skipping their histogram");
    } else {
        let bins = histogram(&scores, args.bins)?;
        write_into(
            dir,
            "histogram_scores.csv",
            &io::histogram_csv(&bins, "composite_scores", &stamp),
        )?;
    }

    // ranking last, so a degenerate-score failure leaves the rest on disk
    let rows = classify(&results)?;
    write_into(
        dir,
        "classification.csv",
        &io::classification_csv(&rows, prepared.converted.countries(), &stamp),
    )?;
    write_into(
        dir,
        "classification.txt",
        &io::classification_text(&rows, prepared.converted.countries(), &stamp),
    )?;
    Ok(())
}
