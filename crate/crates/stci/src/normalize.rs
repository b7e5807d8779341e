//! Scale conversion: z-score standardization and bounded min–max rescaling.
//!
//! Raw indicators arrive in incommensurable units (percentages, dollars,
//! headcounts per million). Both converters map every column onto a common
//! scale so a weighted sum is meaningful:
//!
//! * z-score — `(x - mean) / sd`, a relative scale re-centred on the panel
//!   itself; every column gets mean 0 and standard deviation 1.
//! * min–max — `(x - min) / (max - min)` against fixed external bounds,
//!   clamped into `[0, 1]`; a country's converted value does not depend on
//!   which other countries are in the panel.
//!
//! Statistics are population-form by default (variance divided by n);
//! [`VarianceMode::Sample`] switches to the n−1 forms.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{CountryRecord, DataMatrix, IndicatorPanel, IndicatorSpec};
use crate::error::{Error, Result};

/// Which variance/skewness formulas to use. `Population` divides by n and is
/// the default throughout; `Sample` uses the n−1 variance and the adjusted
/// skewness (undefined below n = 3).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMode {
    #[default]
    Population,
    Sample,
}

/// Location, spread, and shape of one indicator column, over present values only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnStats {
    pub indicator_id: String,
    /// Number of present values.
    pub n: usize,
    pub mean: f64,
    /// Midpoint of the two middle values when n is even.
    pub median: f64,
    pub std_dev: f64,
    /// Fisher–Pearson moment coefficient; `None` when the column has zero
    /// spread (and, in sample mode, when n < 3).
    pub skewness: Option<f64>,
}

/// Summary statistics of one column. Requires at least two present values.
pub fn column_stats(indicator_id: &str, column: &[Option<f64>]) -> Result<ColumnStats> {
    column_stats_with(indicator_id, column, VarianceMode::Population)
}

pub fn column_stats_with(
    indicator_id: &str,
    column: &[Option<f64>],
    mode: VarianceMode,
) -> Result<ColumnStats> {
    let present: Vec<f64> = column.iter().flatten().copied().collect();
    let n = present.len();
    if n < 2 {
        return Err(Error::InsufficientData {
            indicator: indicator_id.to_string(),
        });
    }
    let nf = n as f64;
    let mean = present.iter().sum::<f64>() / nf;

    let mut sorted = present.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("values are finite"));
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };

    let m2 = present.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf;
    let variance = match mode {
        VarianceMode::Population => m2,
        VarianceMode::Sample => {
            present.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0)
        }
    };
    let std_dev = variance.sqrt();

    let skewness = if m2 == 0.0 {
        None
    } else {
        let m3 = present.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / nf;
        let g1 = m3 / m2.powf(1.5);
        match mode {
            VarianceMode::Population => Some(g1),
            VarianceMode::Sample => {
                if n < 3 {
                    None
                } else {
                    Some(g1 * (nf * (nf - 1.0)).sqrt() / (nf - 2.0))
                }
            }
        }
    };

    Ok(ColumnStats {
        indicator_id: indicator_id.to_string(),
        n,
        mean,
        median,
        std_dev,
        skewness,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ZScore,
    MinMax,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::ZScore => "z_score",
            Method::MinMax => "min_max",
        })
    }
}

/// Fixed conversion interval for one indicator under min–max.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub min: f64,
    pub max: f64,
}

/// A panel on the common scale, carrying everything needed to explain how it
/// got there: the method, the per-column statistics of the raw data that fed
/// the conversion (where computable), the bounds under min–max, and how many
/// values each column clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvertedMatrix {
    countries: Vec<CountryRecord>,
    indicators: Vec<IndicatorSpec>,
    values: Vec<Vec<Option<f64>>>,
    method: Method,
    /// Raw-column statistics, aligned with `indicators`. All present after
    /// z-conversion; absent for columns min–max conversion never needed them
    /// for, and after reloading a converted panel from disk.
    per_indicator_stats: Vec<Option<ColumnStats>>,
    /// Aligned with `indicators`; `Some` only under min–max.
    bounds: Vec<Option<Bound>>,
    /// Values pushed back into [0, 1] per column; all zero under z-score.
    clamp_counts: Vec<usize>,
}

impl IndicatorPanel for ConvertedMatrix {
    fn country_records(&self) -> &[CountryRecord] {
        &self.countries
    }
    fn indicator_specs(&self) -> &[IndicatorSpec] {
        &self.indicators
    }
    fn cell(&self, country: usize, indicator: usize) -> Option<f64> {
        self.values[country][indicator]
    }
}

impl ConvertedMatrix {
    pub fn countries(&self) -> &[CountryRecord] {
        &self.countries
    }
    pub fn indicators(&self) -> &[IndicatorSpec] {
        &self.indicators
    }
    pub fn value(&self, country: usize, indicator: usize) -> Option<f64> {
        self.values[country][indicator]
    }
    pub fn method(&self) -> Method {
        self.method
    }
    pub fn stats(&self) -> &[Option<ColumnStats>] {
        &self.per_indicator_stats
    }
    pub fn bounds(&self) -> &[Option<Bound>] {
        &self.bounds
    }
    pub fn clamp_counts(&self) -> &[usize] {
        &self.clamp_counts
    }
    pub fn total_clamped(&self) -> usize {
        self.clamp_counts.iter().sum()
    }
    pub fn country_index(&self, code: &str) -> Option<usize> {
        self.countries.iter().position(|c| c.code == code)
    }

    /// Reassembles a converted panel loaded from disk. Raw-column statistics
    /// and clamp tallies are not recoverable from the file, so they come back
    /// empty; aggregation and classification do not need them.
    pub fn from_loaded(
        countries: Vec<CountryRecord>,
        indicators: Vec<IndicatorSpec>,
        values: Vec<Vec<Option<f64>>>,
        method: Method,
    ) -> Result<Self> {
        if values.len() != countries.len()
            || values.iter().any(|row| row.len() != indicators.len())
        {
            return Err(Error::Schema("converted grid dimensions do not match".into()));
        }
        for row in &values {
            for cell in row.iter().flatten() {
                if !cell.is_finite() {
                    return Err(Error::Schema("converted values must be finite".into()));
                }
            }
        }
        let k = indicators.len();
        Ok(ConvertedMatrix {
            countries,
            indicators,
            values,
            method,
            per_indicator_stats: vec![None; k],
            bounds: vec![None; k],
            clamp_counts: vec![0; k],
        })
    }
}

/// Z-score conversion of every column: `(x - mean) / sd` over present values.
///
/// The result is a relative scale — each column has mean 0, population sd 1,
/// and a country's score depends on everyone else in the panel. Every column
/// must have at least two present values and positive spread; a zero-variance
/// column is reported by name rather than converted into NaNs.
pub fn z_convert(matrix: &DataMatrix) -> Result<ConvertedMatrix> {
    z_convert_with(matrix, VarianceMode::Population)
}

pub fn z_convert_with(matrix: &DataMatrix, mode: VarianceMode) -> Result<ConvertedMatrix> {
    let k = matrix.indicators().len();
    let mut stats = Vec::with_capacity(k);
    for (j, spec) in matrix.indicators().iter().enumerate() {
        let s = column_stats_with(&spec.id, &matrix.column(j), mode)?;
        if s.std_dev == 0.0 {
            return Err(Error::DegenerateColumn {
                indicator: spec.id.clone(),
            });
        }
        stats.push(s);
    }
    let values: Vec<Vec<Option<f64>>> = matrix
        .values()
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, cell)| cell.map(|x| (x - stats[j].mean) / stats[j].std_dev))
                .collect()
        })
        .collect();
    Ok(ConvertedMatrix {
        countries: matrix.countries().to_vec(),
        indicators: matrix.indicators().to_vec(),
        values,
        method: Method::ZScore,
        per_indicator_stats: stats.into_iter().map(Some).collect(),
        bounds: vec![None; k],
        clamp_counts: vec![0; k],
    })
}

/// Min–max conversion against fixed bounds: `(x - min) / (max - min)`,
/// clamped into `[0, 1]` with out-of-interval values tallied per column.
///
/// `bounds` must cover exactly the panel's indicators — a missing or unknown
/// id is an argument error, and each interval needs `max > min`. Because the
/// bounds are external, the converted value of one country never depends on
/// the rest of the panel.
pub fn minmax_convert(
    matrix: &DataMatrix,
    bounds: &BTreeMap<String, Bound>,
) -> Result<ConvertedMatrix> {
    for id in bounds.keys() {
        if matrix.indicator_index(id).is_none() {
            return Err(Error::Argument(format!(
                "bounds given for unknown indicator '{id}'"
            )));
        }
    }
    let mut per_column = Vec::with_capacity(matrix.indicators().len());
    for spec in matrix.indicators() {
        let b = bounds.get(&spec.id).ok_or_else(|| {
            Error::Argument(format!("no bounds for indicator '{}'", spec.id))
        })?;
        if !b.min.is_finite() || !b.max.is_finite() || b.max <= b.min {
            return Err(Error::InvalidBounds {
                indicator: spec.id.clone(),
                min: b.min,
                max: b.max,
            });
        }
        per_column.push(*b);
    }

    let k = matrix.indicators().len();
    let mut clamp_counts = vec![0usize; k];
    let values: Vec<Vec<Option<f64>>> = matrix
        .values()
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, cell)| {
                    cell.map(|x| {
                        let b = per_column[j];
                        let y = (x - b.min) / (b.max - b.min);
                        if y < 0.0 {
                            clamp_counts[j] += 1;
                            0.0
                        } else if y > 1.0 {
                            clamp_counts[j] += 1;
                            1.0
                        } else {
                            y
                        }
                    })
                })
                .collect()
        })
        .collect();

    // Stats are informational under min–max: computed where the column
    // supports them, skipped (not an error) where it does not.
    let stats: Vec<Option<ColumnStats>> = matrix
        .indicators()
        .iter()
        .enumerate()
        .map(|(j, spec)| column_stats(&spec.id, &matrix.column(j)).ok())
        .collect();

    Ok(ConvertedMatrix {
        countries: matrix.countries().to_vec(),
        indicators: matrix.indicators().to_vec(),
        values,
        method: Method::MinMax,
        per_indicator_stats: stats,
        bounds: per_column.into_iter().map(Some).collect(),
        clamp_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Domain, load_dataset};
    use approx::assert_abs_diff_eq;

    fn spec(id: &str) -> IndicatorSpec {
        IndicatorSpec {
            id: id.into(),
            name: id.to_uppercase(),
            domain: Domain::Resource,
            units: "units".into(),
            direction: Default::default(),
        }
    }

    fn panel(columns: &[(&str, &[Option<f64>])]) -> DataMatrix {
        let n = columns[0].1.len();
        let countries: Vec<CountryRecord> = (0..n)
            .map(|i| CountryRecord {
                code: format!("A{}{}", (b'A' + (i / 26) as u8) as char, (b'A' + (i % 26) as u8) as char),
                name: format!("Country {i}"),
                population: None,
                gdp_per_capita: None,
            })
            .collect();
        let specs: Vec<IndicatorSpec> = columns.iter().map(|(id, _)| spec(id)).collect();
        let values: Vec<Vec<Option<f64>>> = (0..n)
            .map(|i| columns.iter().map(|(_, col)| col[i]).collect())
            .collect();
        DataMatrix::new(countries, specs, values).unwrap()
    }

    #[test]
    fn stats_match_hand_computation() {
        // Column 1, 2, 3, 10: mean 4, median 2.5, population variance 12.5,
        // third central moment 45, skewness 45 / 12.5^1.5.
        let col = vec![Some(1.0), Some(2.0), None, Some(3.0), Some(10.0)];
        let s = column_stats("x", &col).unwrap();
        assert_eq!(s.n, 4);
        assert_eq!(s.mean, 4.0);
        assert_eq!(s.median, 2.5);
        assert_abs_diff_eq!(s.std_dev, 12.5_f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.skewness.unwrap(), 45.0 / 12.5_f64.powf(1.5), epsilon = 1e-15);
    }

    #[test]
    fn odd_median_and_constant_column() {
        let s = column_stats("x", &[Some(1.0), Some(2.0), Some(3.0)]).unwrap();
        assert_eq!(s.median, 2.0);
        let s = column_stats("x", &[Some(5.0), Some(5.0), Some(5.0)]).unwrap();
        assert_eq!(s.std_dev, 0.0);
        assert_eq!(s.skewness, None, "skewness is undefined at zero spread");
    }

    #[test]
    fn sample_mode_uses_n_minus_one() {
        let col = vec![Some(1.0), Some(2.0), Some(3.0), Some(10.0)];
        let s = column_stats_with("x", &col, VarianceMode::Sample).unwrap();
        assert_abs_diff_eq!(s.std_dev, (50.0_f64 / 3.0).sqrt(), epsilon = 1e-15);
        let g1 = 45.0 / 12.5_f64.powf(1.5);
        assert_abs_diff_eq!(
            s.skewness.unwrap(),
            g1 * (4.0_f64 * 3.0).sqrt() / 2.0,
            epsilon = 1e-15
        );
        // With two points the adjusted skewness has a zero denominator.
        let s = column_stats_with("x", &[Some(1.0), Some(2.0)], VarianceMode::Sample).unwrap();
        assert_eq!(s.skewness, None);
    }

    #[test]
    fn fewer_than_two_values_is_an_error() {
        let err = column_stats("lonely", &[Some(1.0), None]).unwrap_err();
        assert!(err.to_string().contains("lonely"), "{err}");
    }

    #[test]
    fn z_scores_recentre_each_column() {
        let m = panel(&[("a", &[Some(1.0), Some(2.0), Some(3.0)])]);
        let c = z_convert(&m).unwrap();
        let sd = (2.0_f64 / 3.0).sqrt();
        assert_abs_diff_eq!(c.value(0, 0).unwrap(), -1.0 / sd, epsilon = 1e-15);
        assert_abs_diff_eq!(c.value(1, 0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.value(2, 0).unwrap(), 1.0 / sd, epsilon = 1e-15);
        assert_eq!(c.method(), Method::ZScore);
        assert_eq!(c.total_clamped(), 0);
    }

    #[test]
    fn z_preserves_missingness_and_names_degenerate_columns() {
        let m = panel(&[
            ("a", &[Some(1.0), None, Some(3.0)]),
            ("b", &[Some(4.0), Some(4.0), Some(4.0)]),
        ]);
        let err = z_convert(&m).unwrap_err();
        assert_eq!(
            err.to_string(),
            "indicator 'b' is degenerate: standard deviation is zero"
        );

        let m = panel(&[("a", &[Some(1.0), None, Some(3.0)])]);
        let c = z_convert(&m).unwrap();
        assert_eq!(c.value(1, 0), None);
    }

    #[test]
    fn minmax_clamps_and_counts() {
        let m = panel(&[("a", &[Some(5.0), Some(12.0), Some(1.0), None])]);
        let mut bounds = BTreeMap::new();
        bounds.insert("a".to_string(), Bound { min: 3.0, max: 10.0 });
        let c = minmax_convert(&m, &bounds).unwrap();
        assert_abs_diff_eq!(c.value(0, 0).unwrap(), 2.0 / 7.0, epsilon = 1e-15);
        assert_eq!(c.value(1, 0), Some(1.0));
        assert_eq!(c.value(2, 0), Some(0.0));
        assert_eq!(c.value(3, 0), None);
        assert_eq!(c.clamp_counts(), &[2]);
        assert_eq!(c.bounds()[0], Some(Bound { min: 3.0, max: 10.0 }));
    }

    #[test]
    fn minmax_bound_errors() {
        let m = panel(&[("a", &[Some(1.0), Some(2.0)])]);
        let mut bounds = BTreeMap::new();
        bounds.insert("a".to_string(), Bound { min: 4.0, max: 4.0 });
        let err = minmax_convert(&m, &bounds).unwrap_err();
        assert!(err.to_string().contains("max (4) must exceed min (4)"), "{err}");

        let err = minmax_convert(&m, &BTreeMap::new()).unwrap_err();
        assert!(err.to_string().contains("no bounds for indicator 'a'"), "{err}");

        let mut bounds = BTreeMap::new();
        bounds.insert("a".to_string(), Bound { min: 0.0, max: 1.0 });
        bounds.insert("zz".to_string(), Bound { min: 0.0, max: 1.0 });
        let err = minmax_convert(&m, &bounds).unwrap_err();
        assert!(err.to_string().contains("unknown indicator 'zz'"), "{err}");
    }

    #[test]
    fn minmax_tolerates_columns_z_would_reject() {
        // Constant column and single-value column: fine under fixed bounds.
        let csv = "code,name,population,gdp_per_capita,a,b\n\
                   AAA,A,1,1,4,7\n\
                   BBB,B,1,1,4,\n";
        let specs = vec![spec("a"), spec("b")];
        let m = load_dataset(csv, &specs).unwrap();
        let mut bounds = BTreeMap::new();
        bounds.insert("a".to_string(), Bound { min: 0.0, max: 8.0 });
        bounds.insert("b".to_string(), Bound { min: 0.0, max: 10.0 });
        let c = minmax_convert(&m, &bounds).unwrap();
        assert_eq!(c.value(0, 0), Some(0.5));
        assert_eq!(c.value(0, 1), Some(0.7));
        assert!(c.stats()[1].is_none(), "single-value column has no stats");
    }
}
