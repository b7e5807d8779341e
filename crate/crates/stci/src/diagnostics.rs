//! Internal-consistency checks on a converted panel: does the indicator set
//! hang together as one index, and do published summary tables agree with
//! the published converted ranges?

use serde::Serialize;

use crate::dataset::IndicatorPanel;
use crate::error::{Error, Result};
use crate::normalize::{ColumnStats, ConvertedMatrix};

/// Pairwise-complete Pearson correlations between indicator columns.
/// `None` marks unavailable cells: fewer than three overlapping countries,
/// or a zero-variance column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationGrid {
    ids: Vec<String>,
    cells: Vec<Vec<Option<f64>>>,
}

impl CorrelationGrid {
    pub fn ids(&self) -> &[String] {
        &self.ids
    }
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.cells[i][j]
    }
    pub fn cells(&self) -> &[Vec<Option<f64>>] {
        &self.cells
    }
}

/// Pearson r of two equal-length series. `None` when either side has no
/// spread. The denominator is a single square root of the product so that
/// identical series come out at exactly 1.0.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Minimum number of overlapping countries for a correlation cell.
pub const MIN_CORRELATION_OVERLAP: usize = 3;

/// Correlation grid over a panel, pairwise-complete: each cell uses the
/// countries where both columns are present. Symmetric, unit diagonal.
pub fn correlation_matrix(panel: &impl IndicatorPanel) -> CorrelationGrid {
    let k = panel.indicator_specs().len();
    let ids: Vec<String> = panel.indicator_specs().iter().map(|s| s.id.clone()).collect();
    let columns: Vec<Vec<Option<f64>>> = (0..k).map(|j| panel.column(j)).collect();
    let mut cells = vec![vec![None; k]; k];
    for i in 0..k {
        let present = columns[i].iter().flatten().count();
        if present >= MIN_CORRELATION_OVERLAP {
            let var = pearson_ready(&columns[i], &columns[i]);
            // R(X, X) = 1 whenever the column varies at all.
            if var.map(|(xs, _)| spread(&xs)).unwrap_or(false) {
                cells[i][i] = Some(1.0);
            }
        }
        for j in (i + 1)..k {
            if let Some((xs, ys)) = pearson_ready(&columns[i], &columns[j]) {
                let r = pearson(&xs, &ys);
                cells[i][j] = r;
                cells[j][i] = r;
            }
        }
    }
    CorrelationGrid { ids, cells }
}

fn spread(xs: &[f64]) -> bool {
    xs.windows(2).any(|w| w[0] != w[1])
}

/// Overlapping present pairs of two columns, if there are enough of them.
fn pearson_ready(a: &[Option<f64>], b: &[Option<f64>]) -> Option<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (x, y) in a.iter().zip(b) {
        if let (Some(x), Some(y)) = (x, y) {
            xs.push(*x);
            ys.push(*y);
        }
    }
    if xs.len() < MIN_CORRELATION_OVERLAP {
        None
    } else {
        Some((xs, ys))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagKind {
    /// |skewness| at or above threshold: a long tail that will dominate z-scores.
    HighSkew,
    /// Correlation at or above threshold: the pair carries near-duplicate information.
    SubstitutePair,
    /// Correlation at or below the negated threshold: the pair pulls in opposite directions.
    ComplementPair,
    /// Converted maximum at least three times as far from zero as the minimum.
    AsymmetricRange,
    /// Column unusable for statistics (too few values or zero spread).
    Degenerate,
}

impl FlagKind {
    pub fn label(self) -> &'static str {
        match self {
            FlagKind::HighSkew => "high_skew",
            FlagKind::SubstitutePair => "substitute_pair",
            FlagKind::ComplementPair => "complement_pair",
            FlagKind::AsymmetricRange => "asymmetric_range",
            FlagKind::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyFlag {
    pub kind: FlagKind,
    /// Indicator id, or `a,b` for pair flags.
    pub subject: String,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Flag |R| at or above this as substitute/complement. Default 0.9.
    pub corr: f64,
    /// Flag |skewness| at or above this. Default 2.0.
    pub skew: f64,
    /// Flag |max| / |min| of a converted range at or above this. Default 3.0.
    pub range_ratio: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            corr: 0.9,
            skew: 2.0,
            range_ratio: 3.0,
        }
    }
}

/// Extent of one converted column; `None` when the column is entirely missing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicatorRange {
    pub indicator_id: String,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

pub fn range_table(panel: &impl IndicatorPanel) -> Vec<IndicatorRange> {
    panel
        .indicator_specs()
        .iter()
        .enumerate()
        .map(|(j, spec)| {
            let present = panel.column_present(j);
            let min = present.iter().copied().fold(None, |acc: Option<f64>, v| {
                Some(acc.map_or(v, |a| a.min(v)))
            });
            let max = present.iter().copied().fold(None, |acc: Option<f64>, v| {
                Some(acc.map_or(v, |a| a.max(v)))
            });
            IndicatorRange {
                indicator_id: spec.id.clone(),
                min,
                max,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    /// Raw-column statistics where the conversion had them.
    pub summary: Vec<ColumnStats>,
    pub correlation: CorrelationGrid,
    /// Ranges of the converted values.
    pub ranges: Vec<IndicatorRange>,
    pub flags: Vec<ConsistencyFlag>,
    /// Checks this build acknowledges but does not run.
    pub notes: Vec<String>,
}

/// Runs the full consistency screen on a converted panel.
///
/// Summary statistics and skewness flags describe the raw columns (as carried
/// by the conversion); correlations and ranges describe the converted values.
pub fn consistency_check(converted: &ConvertedMatrix, thresholds: &Thresholds) -> DiagnosticsReport {
    let summary: Vec<ColumnStats> = converted.stats().iter().flatten().cloned().collect();
    let correlation = correlation_matrix(converted);
    let ranges = range_table(converted);

    let mut flags = Vec::new();

    let skews: Vec<(String, f64)> = summary
        .iter()
        .filter_map(|s| s.skewness.map(|g| (s.indicator_id.clone(), g)))
        .collect();
    flags.extend(skew_flags(&skews, thresholds.skew));

    for (j, spec) in converted.indicators().iter().enumerate() {
        let present = converted.column_present(j);
        if present.len() < 2 {
            flags.push(ConsistencyFlag {
                kind: FlagKind::Degenerate,
                subject: spec.id.clone(),
                detail: format!("{} present value(s); statistics need at least 2", present.len()),
            });
        } else if !spread(&present) {
            flags.push(ConsistencyFlag {
                kind: FlagKind::Degenerate,
                subject: spec.id.clone(),
                detail: "zero spread across countries".into(),
            });
        }
    }

    let ids = correlation.ids().to_vec();
    for i in 0..ids.len() {
        for j in (i + 1)..ids.len() {
            if let Some(r) = correlation.get(i, j) {
                if r >= thresholds.corr {
                    flags.push(ConsistencyFlag {
                        kind: FlagKind::SubstitutePair,
                        subject: format!("{},{}", ids[i], ids[j]),
                        detail: format!("R = {r:.3}: near-duplicate information"),
                    });
                } else if r <= -thresholds.corr {
                    flags.push(ConsistencyFlag {
                        kind: FlagKind::ComplementPair,
                        subject: format!("{},{}", ids[i], ids[j]),
                        detail: format!("R = {r:.3}: opposed directions"),
                    });
                }
            }
        }
    }

    for range in &ranges {
        if let (Some(min), Some(max)) = (range.min, range.max) {
            // Multiplicative form so a zero minimum cannot divide by zero.
            if max.abs() > 0.0 && max.abs() >= thresholds.range_ratio * min.abs() {
                flags.push(ConsistencyFlag {
                    kind: FlagKind::AsymmetricRange,
                    subject: range.indicator_id.clone(),
                    detail: format!(
                        "converted range [{min:.3}, {max:.3}] reaches {}x further above zero than below",
                        thresholds.range_ratio
                    ),
                });
            }
        }
    }

    DiagnosticsReport {
        summary,
        correlation,
        ranges,
        flags,
        notes: vec![
            "stability across data vintages is not checked here: this run sees a single cross-section"
                .to_string(),
        ],
    }
}

/// Skewness flags from bare (id, skewness) pairs — usable on published
/// summary tables, which do not carry observation counts.
pub fn skew_flags(skews: &[(String, f64)], threshold: f64) -> Vec<ConsistencyFlag> {
    skews
        .iter()
        .filter(|(_, g)| g.abs() >= threshold)
        .map(|(id, g)| ConsistencyFlag {
            kind: FlagKind::HighSkew,
            subject: id.clone(),
            detail: format!("skewness {g:.3} is at or above {threshold}"),
        })
        .collect()
    }

/// Mean and spread of one raw column, as published.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsRow {
    pub indicator_id: String,
    pub mean: f64,
    pub std_dev: f64,
}

/// Converted extent of one column, as published.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeRow {
    pub indicator_id: String,
    pub min: f64,
    pub max: f64,
}

/// Reconstruction error allowed before a negative implied minimum counts as a
/// contradiction: published tables are rounded to a few decimals, so the
/// implied raw minimum of a nonnegative column may come out slightly below
/// zero without anything being wrong. Expressed as a fraction of the column's
/// standard deviation.
pub const EXTREMES_TOLERANCE_SD_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremesCheckRow {
    pub indicator_id: String,
    /// mean + converted_min × sd: the raw minimum the tables imply.
    pub implied_raw_min: f64,
    /// mean + converted_max × sd.
    pub implied_raw_max: f64,
    /// How far below zero the implied minimum may sit for this column.
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremesReport {
    pub tolerance_sd_fraction: f64,
    pub rows: Vec<ExtremesCheckRow>,
}

impl ExtremesReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Cross-checks a summary-statistics table against a converted-range table:
/// for data known to be nonnegative, `mean + min × sd` must not land
/// meaningfully below zero. Both tables must cover the same indicator ids.
pub fn implied_extremes_check(stats: &[StatsRow], ranges: &[RangeRow]) -> Result<ExtremesReport> {
    if stats.len() != ranges.len() {
        return Err(Error::Argument(format!(
            "summary table has {} rows, range table has {}",
            stats.len(),
            ranges.len()
        )));
    }
    let mut rows = Vec::with_capacity(stats.len());
    for s in stats {
        let r = ranges
            .iter()
            .find(|r| r.indicator_id == s.indicator_id)
            .ok_or_else(|| {
                Error::Argument(format!(
                    "range table has no row for indicator '{}'",
                    s.indicator_id
                ))
            })?;
        let implied_raw_min = s.mean + r.min * s.std_dev;
        let implied_raw_max = s.mean + r.max * s.std_dev;
        let tolerance = EXTREMES_TOLERANCE_SD_FRACTION * s.std_dev;
        rows.push(ExtremesCheckRow {
            indicator_id: s.indicator_id.clone(),
            implied_raw_min,
            implied_raw_max,
            tolerance,
            pass: implied_raw_min >= -tolerance,
        });
    }
    Ok(ExtremesReport {
        tolerance_sd_fraction: EXTREMES_TOLERANCE_SD_FRACTION,
        rows,
    })
}

/// One equal-width histogram bin; `[lower, upper)`, closed at the top for the
/// last bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

/// Equal-width histogram over `[min, max]` of the values themselves.
/// A zero-width range collapses to a single bin holding everything.
pub fn histogram(values: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 {
        return Err(Error::Argument("histogram needs at least one bin".into()));
    }
    if values.is_empty() {
        return Err(Error::Argument("cannot build a histogram of no values".into()));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Ok(vec![HistogramBin {
            lower: min,
            upper: max,
            count: values.len(),
        }]);
    }
    let range = max - min;
    let width = range / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin {
            lower: min + i as f64 * width,
            upper: if i + 1 == bins { max } else { min + (i + 1) as f64 * width },
            count: 0,
        })
        .collect();
    for v in values {
        let idx = (((v - min) / range) * bins as f64) as usize;
        out[idx.min(bins - 1)].count += 1;
    }
    Ok(out)
}
