//! File formats: readers for the input files, writers for every artifact.
//!
//! Machine artifacts (CSV, JSON) open with a configuration header — `#`
//! comment lines in CSV, a `config` object in JSON — recording method,
//! scheme, missing policy, coverage threshold, and band convention, so any
//! artifact can be traced to the run that produced it without a timestamp or
//! any other nondeterminism. Writers emit `String`s; repeated runs over the
//! same inputs are byte-identical.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::aggregate::{CompositeResult, MissingPolicy, WeightScheme};
use crate::classify::{Classification, BAND_CONVENTION};
use crate::dataset::{
    parse_panel_rows, CountryRecord, CoverageReport, Domain, Exclusion, IndicatorPanel,
    IndicatorSpec, META_COLUMNS,
};
use crate::diagnostics::{
    ConsistencyFlag, CorrelationGrid, DiagnosticsReport, ExtremesReport, HistogramBin,
};
use crate::error::{Error, Result};
use crate::normalize::{Bound, ConvertedMatrix, Method};
use crate::sensitivity::SensitivityReport;

/// The run configuration every artifact is stamped with.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStamp {
    pub method: Method,
    pub scheme: String,
    pub missing_policy: MissingPolicy,
    pub min_indicators: usize,
    pub bands: &'static str,
}

impl RunStamp {
    pub fn new(
        method: Method,
        scheme: &str,
        missing_policy: MissingPolicy,
        min_indicators: usize,
    ) -> Self {
        RunStamp {
            method,
            scheme: scheme.to_string(),
            missing_policy,
            min_indicators,
            bands: BAND_CONVENTION,
        }
    }

    /// `#`-comment header for CSV artifacts. `kind` names the artifact type.
    pub fn comment_header(&self, kind: &str) -> String {
        format!(
            "# kind: {kind}\n# method: {}\n# scheme: {}\n# missing_policy: {}\n# min_indicators: {}\n# bands: {}\n",
            self.method, self.scheme, self.missing_policy, self.min_indicators, self.bands
        )
    }

    /// Title-plus-config block for text artifacts.
    pub fn text_header(&self, title: &str) -> String {
        format!(
            "{title}\nmethod: {} | scheme: {} | missing: {} | min_indicators: {}\nbands: {}\n\n",
            self.method, self.scheme, self.missing_policy, self.min_indicators, self.bands
        )
    }
}

// ---------------------------------------------------------------------------
// readers

/// Indicator specs from JSON: a list of `{id, name, domain, units}` objects
/// (`direction` optional, defaults to higher-is-better).
pub fn read_specs_json(text: &str) -> Result<Vec<IndicatorSpec>> {
    let specs: Vec<IndicatorSpec> =
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("indicator specs: {e}")))?;
    if specs.is_empty() {
        return Err(Error::Schema("indicator specs: list is empty".into()));
    }
    Ok(specs)
}

/// Exclusion list: one `CODE,reason` line each, no header. Extra commas in an
/// unquoted reason are tolerated by re-joining the spill-over fields.
pub fn read_exclusions_csv(text: &str) -> Result<Vec<Exclusion>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Schema(format!("exclusion list: {e}")))?;
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        if record.is_empty() || record[0].is_empty() {
            continue;
        }
        let code = record[0].to_string();
        if code.len() != 3 || !code.bytes().all(|b| b.is_ascii_uppercase()) {
            return Err(Error::Row {
                row,
                message: format!("exclusion code '{code}' must be exactly three uppercase letters"),
            });
        }
        let reason = record.iter().skip(1).collect::<Vec<_>>().join(",");
        out.push(Exclusion { code, reason });
    }
    Ok(out)
}

/// Min–max bounds from JSON: `{ "<indicator_id>": {"min": a, "max": b}, … }`.
pub fn read_bounds_json(text: &str) -> Result<BTreeMap<String, Bound>> {
    serde_json::from_str(text).map_err(|e| Error::Schema(format!("bounds file: {e}")))
}

#[derive(Deserialize)]
struct WeightsFile {
    name: String,
    weights: BTreeMap<String, f64>,
    #[serde(default)]
    missing_policy: MissingPolicy,
}

/// Weight scheme from JSON: `{name, weights: {id: w}, missing_policy}`;
/// weights are validated and normalized on load.
pub fn read_weights_json(text: &str) -> Result<WeightScheme> {
    let file: WeightsFile =
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("weights file: {e}")))?;
    WeightScheme::new(file.name, file.weights, file.missing_policy)
}

fn parse_method(s: &str) -> Result<Method> {
    match s {
        "z_score" => Ok(Method::ZScore),
        "min_max" => Ok(Method::MinMax),
        other => Err(Error::Schema(format!("unknown conversion method '{other}'"))),
    }
}

/// What a converted panel's comment header declares about its origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvertedHeader {
    pub method: Method,
    /// Coverage threshold the panel was filtered at, when recorded.
    pub min_indicators: Option<usize>,
}

/// Checks whether a CSV text is a converted panel written by [`converted_csv`],
/// returning what its comment header declares.
pub fn sniff_converted(csv_text: &str) -> Option<ConvertedHeader> {
    let mut kind_ok = false;
    let mut method = None;
    let mut min_indicators = None;
    for line in csv_text.lines() {
        let Some(rest) = line.strip_prefix('#') else { break };
        if let Some((key, value)) = rest.trim().split_once(':') {
            match key.trim() {
                "kind" => kind_ok = value.trim() == "converted_panel",
                "method" => method = parse_method(value.trim()).ok(),
                "min_indicators" => min_indicators = value.trim().parse().ok(),
                _ => {}
            }
        }
    }
    match (kind_ok, method) {
        (true, Some(method)) => Some(ConvertedHeader {
            method,
            min_indicators,
        }),
        _ => None,
    }
}

/// Loads a converted panel previously written by [`converted_csv`]. The text
/// must carry the `# kind: converted_panel` header; cells may be negative.
pub fn read_converted_csv(csv_text: &str, specs: &[IndicatorSpec]) -> Result<ConvertedMatrix> {
    let header = sniff_converted(csv_text).ok_or_else(|| {
        Error::Schema(
            "not a converted panel: missing '# kind: converted_panel' / '# method:' header".into(),
        )
    })?;
    let (countries, values) = parse_panel_rows(csv_text, specs, true)?;
    ConvertedMatrix::from_loaded(countries, specs.to_vec(), values, header.method)
}

// ---------------------------------------------------------------------------
// CSV writers

/// Shortest representation that parses back to the same f64.
fn num(v: f64) -> String {
    format!("{v}")
}

fn csv_string(records: Vec<Vec<String>>) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for record in records {
        writer.write_record(&record).expect("writing to memory");
    }
    String::from_utf8(writer.into_inner().expect("writing to memory")).expect("csv is utf-8")
}

/// A panel (raw or converted) in the input schema, metadata included, with
/// the given comment header on top. Loading the result reproduces every cell.
pub fn panel_csv(panel: &impl IndicatorPanel, comments: &str) -> String {
    let mut records = Vec::new();
    let header: Vec<String> = META_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain(panel.indicator_specs().iter().map(|s| s.id.clone()))
        .collect();
    records.push(header);
    for (i, rec) in panel.country_records().iter().enumerate() {
        let mut row = vec![
            rec.code.clone(),
            rec.name.clone(),
            rec.population.map(|p| p.to_string()).unwrap_or_default(),
            rec.gdp_per_capita.map(num).unwrap_or_default(),
        ];
        for j in 0..panel.indicator_specs().len() {
            row.push(panel.cell(i, j).map(num).unwrap_or_default());
        }
        records.push(row);
    }
    format!("{comments}{}", csv_string(records))
}

/// The converted panel as a stamped CSV that [`read_converted_csv`] accepts.
pub fn converted_csv(converted: &ConvertedMatrix, stamp: &RunStamp) -> String {
    panel_csv(converted, &stamp.comment_header("converted_panel"))
}

/// Coverage groups as CSV, one row per coverage count.
pub fn coverage_csv(report: &CoverageReport, stamp: &RunStamp) -> String {
    let mut records = vec![vec![
        "indicator_count".to_string(),
        "country_count".to_string(),
        "avg_gdp_per_capita".to_string(),
        "world_population_share_pct".to_string(),
        "world_gdp_share_pct".to_string(),
    ]];
    for g in &report.groups {
        records.push(vec![
            g.indicator_count.to_string(),
            g.country_count.to_string(),
            g.avg_gdp_per_capita.map(num).unwrap_or_default(),
            g.world_population_share_pct.map(num).unwrap_or_default(),
            g.world_gdp_share_pct.map(num).unwrap_or_default(),
        ]);
    }
    format!("{}{}", stamp.comment_header("coverage_report"), csv_string(records))
}

/// Composite scores as CSV: `code,score,coverage,precondition,resource,output`.
pub fn composite_csv(results: &[CompositeResult], stamp: &RunStamp) -> String {
    let mut records = vec![vec![
        "code".to_string(),
        "score".to_string(),
        "coverage".to_string(),
        "precondition".to_string(),
        "resource".to_string(),
        "output".to_string(),
    ]];
    for r in results {
        let domain_cell = |d: Domain| -> String {
            r.domain_scores
                .get(&d)
                .copied()
                .flatten()
                .map(num)
                .unwrap_or_default()
        };
        records.push(vec![
            r.code.clone(),
            r.score.map(num).unwrap_or_default(),
            r.coverage.to_string(),
            domain_cell(Domain::Precondition),
            domain_cell(Domain::Resource),
            domain_cell(Domain::Output),
        ]);
    }
    format!("{}{}", stamp.comment_header("composite_scores"), csv_string(records))
}

/// Ranked classification as CSV: `rank,code,name,score,band`.
pub fn classification_csv(
    rows: &[Classification],
    countries: &[CountryRecord],
    stamp: &RunStamp,
) -> String {
    let name_of = |code: &str| {
        countries
            .iter()
            .find(|c| c.code == code)
            .map(|c| c.name.clone())
            .unwrap_or_default()
    };
    let mut records = vec![vec![
        "rank".to_string(),
        "code".to_string(),
        "name".to_string(),
        "score".to_string(),
        "band".to_string(),
    ]];
    for r in rows {
        records.push(vec![
            r.rank.to_string(),
            r.code.clone(),
            name_of(&r.code),
            num(r.score),
            r.band.label().to_string(),
        ]);
    }
    format!("{}{}", stamp.comment_header("classification"), csv_string(records))
}

/// Pairwise correlation grid as CSV, row and column order matching the
/// panel's indicator order. Pairs with too little overlap leave empty cells.
pub fn correlation_csv(grid: &CorrelationGrid, stamp: &RunStamp) -> String {
    let mut header = vec!["indicator".to_string()];
    header.extend(grid.ids().iter().cloned());
    let mut records = vec![header];
    for (i, id) in grid.ids().iter().enumerate() {
        let mut row = vec![id.clone()];
        for j in 0..grid.ids().len() {
            row.push(grid.get(i, j).map(num).unwrap_or_default());
        }
        records.push(row);
    }
    format!("{}{}", stamp.comment_header("correlation_grid"), csv_string(records))
}

/// Implied-extremes check as CSV, one row per indicator with its verdict.
pub fn extremes_csv(report: &ExtremesReport, stamp: &RunStamp) -> String {
    let mut records = vec![vec![
        "indicator".to_string(),
        "implied_raw_min".to_string(),
        "implied_raw_max".to_string(),
        "tolerance".to_string(),
        "pass".to_string(),
    ]];
    for r in &report.rows {
        records.push(vec![
            r.indicator_id.clone(),
            num(r.implied_raw_min),
            num(r.implied_raw_max),
            num(r.tolerance),
            r.pass.to_string(),
        ]);
    }
    format!("{}{}", stamp.comment_header("extremes_check"), csv_string(records))
}

/// Rank shifts as CSV; the comparison's headline numbers ride as comments.
pub fn sensitivity_csv(report: &SensitivityReport, stamp: &RunStamp) -> String {
    let mut records = vec![vec![
        "code".to_string(),
        "old_rank".to_string(),
        "new_rank".to_string(),
    ]];
    for s in &report.shifted {
        records.push(vec![
            s.code.clone(),
            s.old_rank.to_string(),
            s.new_rank.to_string(),
        ]);
    }
    format!(
        "{}# perturbation: {} — {}\n# spearman: {}\n# max_rank_shift: {}\n# compared: {}\n{}",
        stamp.comment_header("sensitivity"),
        report.kind.label(),
        report.subject,
        num(report.spearman),
        report.max_rank_shift,
        report.compared,
        csv_string(records)
    )
}

/// Histogram as two-column CSV (`lower,count`); the series name goes in the
/// comment header.
pub fn histogram_csv(bins: &[HistogramBin], series: &str, stamp: &RunStamp) -> String {
    let mut records = vec![vec!["lower".to_string(), "count".to_string()]];
    for b in bins {
        records.push(vec![num(b.lower), b.count.to_string()]);
    }
    format!(
        "{}# series: {series}\n{}",
        stamp.comment_header("histogram"),
        csv_string(records)
    )
}

// ---------------------------------------------------------------------------
// JSON writer

/// Any report as a JSON artifact: `{kind, config, report}`.
pub fn json_artifact<T: Serialize>(kind: &str, stamp: &RunStamp, report: &T) -> String {
    let value = json!({
        "kind": kind,
        "config": stamp,
        "report": report,
    });
    let mut s = serde_json::to_string_pretty(&value).expect("reports serialize");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// text renderers

fn render_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let cols = headers.len();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let fmt_row = |cells: Vec<String>, widths: &[usize]| -> String {
        let mut line = String::new();
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            if i == 0 {
                line.push_str(&format!("{cell:<width$}", width = widths[i]));
            } else {
                line.push_str(&format!("{cell:>width$}", width = widths[i]));
            }
        }
        line.trim_end().to_string()
    };
    out.push_str(&fmt_row(headers.iter().map(|h| h.to_string()).collect(), &widths));
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (cols - 1)));
    out.push('\n');
    for row in rows {
        out.push_str(&fmt_row(row.clone(), &widths));
        out.push('\n');
    }
    out
}

fn opt(v: Option<f64>, f: impl Fn(f64) -> String) -> String {
    v.map(f).unwrap_or_else(|| "n/a".to_string())
}

fn f3(v: f64) -> String {
    format!("{v:.3}")
}

pub fn coverage_text(report: &CoverageReport, stamp: &RunStamp) -> String {
    let mut out = stamp.text_header("coverage report");
    let rows: Vec<Vec<String>> = report
        .groups
        .iter()
        .map(|g| {
            vec![
                g.indicator_count.to_string(),
                g.country_count.to_string(),
                opt(g.avg_gdp_per_capita, |v| format!("{v:.0}")),
                opt(g.world_population_share_pct, |v| format!("{v:.1}")),
                opt(g.world_gdp_share_pct, |v| format!("{v:.1}")),
            ]
        })
        .collect();
    out.push_str(&render_table(
        &["indicators", "countries", "avg gdp/capita", "pop share %", "gdp share %"],
        &rows,
    ));
    let total: usize = report.groups.iter().map(|g| g.country_count).sum();
    out.push_str(&format!(
        "\nretained {} of {} countries at min_indicators = {}\n",
        report.retained.len(),
        total,
        report.min_indicators
    ));
    if !report.dropped.is_empty() {
        let listed: Vec<String> = report
            .dropped
            .iter()
            .map(|d| format!("{}({})", d.code, d.coverage))
            .collect();
        out.push_str(&format!("dropped: {}\n", listed.join(" ")));
    }
    if !report.excluded.is_empty() {
        out.push_str(&format!("excluded upstream: {}\n", report.excluded.len()));
        for e in &report.excluded {
            out.push_str(&format!("  {} {} — {}\n", e.code, e.name, e.reason));
        }
    }
    if !report.missing_metadata.is_empty() {
        let listed: Vec<String> = report
            .missing_metadata
            .iter()
            .map(|m| {
                let what = match (m.missing_population, m.missing_gdp_per_capita) {
                    (true, true) => "population, gdp/capita",
                    (true, false) => "population",
                    _ => "gdp/capita",
                };
                format!("{} ({what})", m.code)
            })
            .collect();
        out.push_str(&format!(
            "no metadata (left out of the share denominators): {}\n",
            listed.join(", ")
        ));
    }
    out
}

pub fn flags_text(flags: &[ConsistencyFlag]) -> String {
    if flags.is_empty() {
        return "flags: none\n".to_string();
    }
    let mut out = String::from("flags:\n");
    for f in flags {
        out.push_str(&format!(
            "  {} {} — {}\n",
            f.kind.label(),
            f.subject,
            f.detail
        ));
    }
    out
}

pub fn diagnostics_text(report: &DiagnosticsReport, stamp: &RunStamp) -> String {
    let mut out = stamp.text_header("consistency diagnostics");

    out.push_str("summary statistics (raw columns)\n");
    let rows: Vec<Vec<String>> = report
        .summary
        .iter()
        .map(|s| {
            vec![
                s.indicator_id.clone(),
                s.n.to_string(),
                f3(s.mean),
                f3(s.median),
                f3(s.std_dev),
                opt(s.skewness, f3),
            ]
        })
        .collect();
    out.push_str(&render_table(
        &["indicator", "n", "mean", "median", "sd", "skewness"],
        &rows,
    ));

    out.push_str("\ncorrelation grid (pairwise complete)\n");
    let ids = report.correlation.ids();
    let mut headers: Vec<&str> = vec![""];
    headers.extend(ids.iter().map(|s| s.as_str()));
    let rows: Vec<Vec<String>> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let mut row = vec![id.clone()];
            for j in 0..ids.len() {
                row.push(opt(report.correlation.get(i, j), f3));
            }
            row
        })
        .collect();
    out.push_str(&render_table(&headers, &rows));

    out.push_str("\nconverted ranges\n");
    let rows: Vec<Vec<String>> = report
        .ranges
        .iter()
        .map(|r| vec![r.indicator_id.clone(), opt(r.min, f3), opt(r.max, f3)])
        .collect();
    out.push_str(&render_table(&["indicator", "min", "max"], &rows));

    out.push('\n');
    out.push_str(&flags_text(&report.flags));

    for note in &report.notes {
        out.push_str(&format!("note: {note}\n"));
    }
    out
}

pub fn extremes_text(report: &ExtremesReport, stamp: &RunStamp) -> String {
    let mut out = stamp.text_header("implied raw extremes check");
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.indicator_id.clone(),
                f3(r.implied_raw_min),
                f3(r.implied_raw_max),
                f3(-r.tolerance),
                if r.pass { "pass" } else { "FAIL" }.to_string(),
            ]
        })
        .collect();
    out.push_str(&render_table(
        &["indicator", "implied min", "implied max", "floor", "verdict"],
        &rows,
    ));
    out.push_str(&format!(
        "\noverall: {} (implied minima may sit down to {}·sd below zero)\n",
        if report.all_pass() { "pass" } else { "FAIL" },
        report.tolerance_sd_fraction
    ));
    out
}

pub fn composite_text(results: &[CompositeResult], stamp: &RunStamp) -> String {
    let mut out = stamp.text_header("composite scores");
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            let d = |d: Domain| opt(r.domain_scores.get(&d).copied().flatten(), f3);
            vec![
                r.code.clone(),
                opt(r.score, f3),
                r.coverage.to_string(),
                d(Domain::Precondition),
                d(Domain::Resource),
                d(Domain::Output),
            ]
        })
        .collect();
    out.push_str(&render_table(
        &["code", "score", "coverage", "precondition", "resource", "output"],
        &rows,
    ));
    out
}

pub fn classification_text(
    rows: &[Classification],
    countries: &[CountryRecord],
    stamp: &RunStamp,
) -> String {
    let name_of = |code: &str| {
        countries
            .iter()
            .find(|c| c.code == code)
            .map(|c| c.name.clone())
            .unwrap_or_default()
    };
    let mut out = stamp.text_header("ranked classification");
    let table_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.rank.to_string(),
                r.code.clone(),
                name_of(&r.code),
                f3(r.score),
                r.band.label().to_string(),
            ]
        })
        .collect();
    out.push_str(&render_table(&["rank", "code", "name", "score", "band"], &table_rows));
    out
}

pub fn sensitivity_text(report: &SensitivityReport, stamp: &RunStamp) -> String {
    let mut out = stamp.text_header("sensitivity report");
    out.push_str(&format!("perturbation: {} — {}\n", report.kind.label(), report.subject));
    out.push_str(&format!("spearman over {} common countries: {:.6}\n", report.compared, report.spearman));
    out.push_str(&format!("max rank shift: {}\n", report.max_rank_shift));
    if !report.dropped.is_empty() {
        out.push_str(&format!("dropped from ranking: {}\n", report.dropped.join(", ")));
    }
    if report.shifted.is_empty() {
        out.push_str("no rank changed\n");
    } else {
        out.push('\n');
        let rows: Vec<Vec<String>> = report
            .shifted
            .iter()
            .map(|s| {
                let delta = s.new_rank as i64 - s.old_rank as i64;
                vec![
                    s.code.clone(),
                    s.old_rank.to_string(),
                    s.new_rank.to_string(),
                    format!("{delta:+}"),
                ]
            })
            .collect();
        out.push_str(&render_table(&["code", "old rank", "new rank", "shift"], &rows));
    }
    out
}
