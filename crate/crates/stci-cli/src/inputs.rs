//! Run assembly: every referenced file is read, parsed, and cross-checked
//! against the flags before any computation starts, so a bad input fails the
//! run up front.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

use stci::aggregate::{MissingPolicy, WeightScheme};
use stci::dataset::{load_dataset, CoverageReport, DataMatrix, Exclusion, IndicatorSpec};
use stci::io::{
    read_bounds_json, read_converted_csv, read_exclusions_csv, read_specs_json,
    read_weights_json, sniff_converted, RunStamp,
};
use stci::normalize::{
    minmax_convert, z_convert_with, Bound, ConvertedMatrix, Method, VarianceMode,
};
use stci::reference;
use stci::sensitivity::{Conversion, PipelineConfig};

/// Flag values one subcommand collected, before any file is opened.
#[derive(Default)]
pub struct Request<'a> {
    pub data: Option<&'a Path>,
    pub specs: Option<&'a Path>,
    pub exclusions: Option<&'a Path>,
    pub weights: Option<&'a Path>,
    pub bounds: Option<&'a Path>,
    pub method: Option<Method>,
    pub missing: Option<MissingPolicy>,
    pub variance: VarianceMode,
    pub min_indicators: Option<usize>,
    /// The command converts values, so `min_max` needs bounds up front.
    pub converts: bool,
    /// An already-converted panel is a legal input for the command.
    pub accept_converted: bool,
}

pub enum Source {
    Raw(DataMatrix),
    Converted(ConvertedMatrix),
    None,
}

/// A validated run: inputs loaded, defaults resolved, flags reconciled.
pub struct Run {
    pub source: Source,
    pub specs: Vec<IndicatorSpec>,
    pub exclusions: Vec<Exclusion>,
    pub scheme: WeightScheme,
    pub bounds: Option<BTreeMap<String, Bound>>,
    pub method: Method,
    pub variance: VarianceMode,
    pub min_indicators: usize,
}

impl Run {
    pub fn stamp(&self) -> RunStamp {
        RunStamp::new(
            self.method,
            self.scheme.name(),
            self.scheme.missing_policy,
            self.min_indicators,
        )
    }

    /// The same configuration as a re-runnable pipeline, for perturbation
    /// analyses that need the whole chain recomputed.
    pub fn pipeline_config(&self) -> PipelineConfig {
        let conversion = match self.method {
            Method::ZScore => Conversion::ZScore,
            Method::MinMax => Conversion::MinMax(self.bounds.clone().unwrap_or_default()),
        };
        let mut config = PipelineConfig::new(conversion, self.scheme.clone());
        config.variance_mode = self.variance;
        config
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// A weight scheme from a file must weight exactly the indicator set.
pub fn ensure_covers(scheme: &WeightScheme, specs: &[IndicatorSpec]) -> Result<()> {
    let missing: Vec<&str> = specs
        .iter()
        .filter(|s| scheme.weight(&s.id).is_none())
        .map(|s| s.id.as_str())
        .collect();
    let extra: Vec<&str> = scheme
        .weights()
        .keys()
        .filter(|id| !specs.iter().any(|s| &s.id == *id))
        .map(|id| id.as_str())
        .collect();
    if missing.is_empty() && extra.is_empty() {
        return Ok(());
    }
    let mut parts = Vec::new();
    if !missing.is_empty() {
        parts.push(format!("no weight for: {}", missing.join(", ")));
    }
    if !extra.is_empty() {
        parts.push(format!("weights for unknown indicators: {}", extra.join(", ")));
    }
    bail!(
        "weight scheme '{}' does not match the indicator set — {}",
        scheme.name(),
        parts.join("; ")
    );
}

pub fn load(req: &Request) -> Result<Run> {
    let specs = match req.specs {
        Some(path) => read_specs_json(&read(path)?)
            .with_context(|| format!("parsing {}", path.display()))?,
        None => reference::indicator_specs(),
    };

    let mut converted_header = None;
    let source = match req.data {
        None => Source::None,
        Some(path) => {
            let text = read(path)?;
            match sniff_converted(&text) {
                Some(header) => {
                    if !req.accept_converted {
                        bail!(
                            "{} is an already-converted panel; this command needs raw values",
                            path.display()
                        );
                    }
                    converted_header = Some(header);
                    Source::Converted(
                        read_converted_csv(&text, &specs)
                            .with_context(|| format!("parsing {}", path.display()))?,
                    )
                }
                None => Source::Raw(
                    load_dataset(&text, &specs)
                        .with_context(|| format!("parsing {}", path.display()))?,
                ),
            }
        }
    };

    // A converted panel went through exclusions, filtering, and conversion
    // already; flags that rerun those stages contradict the input.
    let (method, min_indicators) = match converted_header {
        Some(header) => {
            if req.exclusions.is_some() {
                bail!("an exclusions list cannot be applied to an already-converted panel");
            }
            if req.min_indicators.is_some() {
                bail!("--min-indicators has no effect on an already-converted panel");
            }
            if req.bounds.is_some() {
                bail!("--bounds has no effect on an already-converted panel");
            }
            if let Some(flag) = req.method {
                if flag != header.method {
                    eprintln!(
                        "note: data file records method {}; ignoring --method {}",
                        header.method, flag
                    );
                }
            }
            (header.method, header.min_indicators.unwrap_or(specs.len()))
        }
        None => (
            req.method.unwrap_or(Method::ZScore),
            req.min_indicators.unwrap_or(specs.len()),
        ),
    };

    let exclusions = match req.exclusions {
        Some(path) => read_exclusions_csv(&read(path)?)
            .with_context(|| format!("parsing {}", path.display()))?,
        None => Vec::new(),
    };

    let mut scheme = match req.weights {
        Some(path) => {
            let scheme = read_weights_json(&read(path)?)
                .with_context(|| format!("parsing {}", path.display()))?;
            ensure_covers(&scheme, &specs)?;
            scheme
        }
        None => WeightScheme::equal(&specs, MissingPolicy::default())?,
    };
    if let Some(policy) = req.missing {
        scheme.missing_policy = policy;
    }

    let bounds = match req.bounds {
        Some(path) => Some(
            read_bounds_json(&read(path)?)
                .with_context(|| format!("parsing {}", path.display()))?,
        ),
        None => None,
    };

    if bounds.is_some() && method != Method::MinMax {
        bail!("--bounds applies only to --method minmax");
    }
    if req.converts
        && method == Method::MinMax
        && bounds.is_none()
        && matches!(source, Source::Raw(_) | Source::None)
    {
        bail!("--method minmax needs fixed bounds; pass --bounds FILE");
    }
    if req.variance == VarianceMode::Sample && method == Method::MinMax {
        eprintln!("note: --variance affects only z-score conversion; ignored under minmax");
    }

    Ok(Run {
        source,
        specs,
        exclusions,
        scheme,
        bounds,
        method,
        variance: req.variance,
        min_indicators,
    })
}

/// Exclusions applied and coverage filtered; warnings go to stderr.
pub fn filter_raw(run: &Run) -> Result<(DataMatrix, CoverageReport)> {
    let Source::Raw(matrix) = &run.source else {
        bail!("this command needs --data with a raw panel");
    };
    let (matrix, warnings) = matrix.apply_exclusions(&run.exclusions);
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    Ok(matrix.coverage_filter(run.min_indicators)?)
}

pub struct Prepared {
    /// The filtered raw panel, when the input was raw.
    pub raw: Option<DataMatrix>,
    pub coverage: Option<CoverageReport>,
    pub converted: ConvertedMatrix,
}

/// Runs the front of the chain — exclusions, coverage filter, conversion.
/// An already-converted input skips straight to the end.
pub fn prepare(run: &Run) -> Result<Prepared> {
    match &run.source {
        Source::Converted(converted) => Ok(Prepared {
            raw: None,
            coverage: None,
            converted: converted.clone(),
        }),
        Source::Raw(_) => {
            let (matrix, coverage) = filter_raw(run)?;
            let converted = match run.method {
                Method::ZScore => z_convert_with(&matrix, run.variance)?,
                Method::MinMax => {
                    let bounds = run.bounds.as_ref().expect("bounds checked at load");
                    minmax_convert(&matrix, bounds)?
                }
            };
            Ok(Prepared {
                raw: Some(matrix),
                coverage: Some(coverage),
                converted,
            })
        }
        Source::None => bail!("this command needs --data"),
    }
}
