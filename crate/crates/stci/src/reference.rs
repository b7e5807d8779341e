//! The built-in index configuration: eight science-and-technology capacity
//! indicators over three domains, plus the published summary tables that the
//! cross-checks in [`crate::diagnostics`] run against.
//!
//! The raw country data behind these tables is licensed and not shipped;
//! what ships is its published shape — per-column statistics and converted
//! ranges — which is enough to validate a reimplementation of the pipeline.

use crate::dataset::{Direction, Domain, IndicatorSpec};
use crate::diagnostics::{RangeRow, StatsRow};

fn spec(id: &str, name: &str, domain: Domain, units: &str) -> IndicatorSpec {
    IndicatorSpec {
        id: id.into(),
        name: name.into(),
        domain,
        units: units.into(),
        direction: Direction::HigherIsBetter,
    }
}

/// The eight indicators, in canonical column order: two preconditions,
/// three resources, three outputs.
pub fn indicator_specs() -> Vec<IndicatorSpec> {
    vec![
        spec("enrolment", "Tertiary enrolment", Domain::Precondition, "percent"),
        spec("gdp_pc_indicator", "Per-capita GDP", Domain::Precondition, "USD"),
        spec(
            "scientists",
            "Scientists and engineers in R&D",
            Domain::Resource,
            "per million people",
        ),
        spec("institutions", "Knowledge institutions", Domain::Resource, "count"),
        spec("rd_expenditure", "R&D expenditure", Domain::Resource, "percent of GDP"),
        spec("coauthorship", "International coauthorships", Domain::Output, "count"),
        spec("patents", "Patent applications", Domain::Output, "per million people"),
        spec(
            "articles",
            "Scientific and technical articles",
            Domain::Output,
            "per million people",
        ),
    ]
}

/// Published raw-column summary: mean, median, standard deviation, skewness.
#[derive(Debug, Clone, PartialEq)]
pub struct PublishedStats {
    pub indicator_id: &'static str,
    pub mean: f64,
    pub median: f64,
    pub std_dev: f64,
    pub skewness: f64,
}

/// Summary statistics of the reference dataset, as published.
pub fn published_summary() -> Vec<PublishedStats> {
    let row = |indicator_id, mean, median, std_dev, skewness| PublishedStats {
        indicator_id,
        mean,
        median,
        std_dev,
        skewness,
    };
    vec![
        row("enrolment", 9.54, 9.75, 6.17, 0.742),
        row("gdp_pc_indicator", 13193.0, 9409.0, 9648.0, 0.470),
        row("scientists", 1461.0, 1320.0, 1286.0, 0.718),
        row("institutions", 8.52, 3.54, 14.58, 3.910),
        row("rd_expenditure", 1.04, 0.73, 0.87, 1.045),
        row("coauthorship", 437.0, 167.0, 652.0, 2.550),
        row("patents", 31.16, 1.34, 56.36, 2.215),
        row("articles", 218.18, 92.70, 273.19, 1.269),
    ]
}

/// Published extents of the z-converted columns.
pub fn published_ranges() -> Vec<RangeRow> {
    let row = |indicator_id: &str, min, max| RangeRow {
        indicator_id: indicator_id.into(),
        min,
        max,
    };
    vec![
        row("enrolment", -1.497, 2.893),
        row("gdp_pc_indicator", -1.280, 2.273),
        row("scientists", -1.132, 2.825),
        row("institutions", -0.576, 6.495),
        row("rd_expenditure", -1.182, 3.208),
        row("coauthorship", -0.652, 4.337),
        row("patents", -0.554, 4.025),
        row("articles", -0.781, 2.737),
    ]
}

/// The published summary reduced to what the implied-extremes check needs.
pub fn published_stats_rows() -> Vec<StatsRow> {
    published_summary()
        .into_iter()
        .map(|s| StatsRow {
            indicator_id: s.indicator_id.into(),
            mean: s.mean,
            std_dev: s.std_dev,
        })
        .collect()
}

/// Skewness pairs from the published summary, for threshold flagging.
pub fn published_skews() -> Vec<(String, f64)> {
    published_summary()
        .into_iter()
        .map(|s| (s.indicator_id.to_string(), s.skewness))
        .collect()
}
