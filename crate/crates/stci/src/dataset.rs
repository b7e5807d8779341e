//! Panel ingestion: CSV loading, exclusion lists, and coverage filtering.
//!
//! A panel is a country × indicator grid of optional nonnegative values plus
//! per-country metadata (population, per-capita GDP). Input is one CSV with a
//! fixed column order: `code,name,population,gdp_per_capita` followed by one
//! column per indicator, in the order given by the indicator specs. An empty
//! cell is a missing value, never zero.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Thematic grouping of indicators; drives domain sub-scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Precondition,
    Resource,
    Output,
}

impl Domain {
    pub const ALL: [Domain; 3] = [Domain::Precondition, Domain::Resource, Domain::Output];

    pub fn label(self) -> &'static str {
        match self {
            Domain::Precondition => "precondition",
            Domain::Resource => "resource",
            Domain::Output => "output",
        }
    }
}

/// Reading direction of an indicator. Every built-in indicator scores
/// "more is better"; the field exists so a future inverted indicator is an
/// explicit decision rather than a silent assumption.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    HigherIsBetter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSpec {
    /// Stable identifier; doubles as the CSV column name.
    pub id: String,
    /// Human-readable name for report tables.
    pub name: String,
    pub domain: Domain,
    pub units: String,
    #[serde(default)]
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountryRecord {
    /// Three uppercase ASCII letters, unique within a panel.
    pub code: String,
    pub name: String,
    pub population: Option<u64>,
    pub gdp_per_capita: Option<f64>,
}

/// One line of an exclusion list: a country withdrawn from the panel
/// before any computation, with the reason recorded for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub code: String,
    pub reason: String,
}

/// A country removed by [`DataMatrix::apply_exclusions`], kept for reporting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcludedCountry {
    pub code: String,
    pub name: String,
    pub reason: String,
}

/// Read access to a country × indicator grid. Implemented by both the raw
/// and the converted matrix so diagnostics can run on either.
pub trait IndicatorPanel {
    fn country_records(&self) -> &[CountryRecord];
    fn indicator_specs(&self) -> &[IndicatorSpec];
    fn cell(&self, country: usize, indicator: usize) -> Option<f64>;

    fn column(&self, indicator: usize) -> Vec<Option<f64>> {
        (0..self.country_records().len())
            .map(|i| self.cell(i, indicator))
            .collect()
    }

    /// Present values of one column, in country order.
    fn column_present(&self, indicator: usize) -> Vec<f64> {
        (0..self.country_records().len())
            .filter_map(|i| self.cell(i, indicator))
            .collect()
    }

    /// Number of indicators with a present value for one country.
    fn coverage_count(&self, country: usize) -> usize {
        (0..self.indicator_specs().len())
            .filter(|&j| self.cell(country, j).is_some())
            .count()
    }

    fn indicator_index(&self, id: &str) -> Option<usize> {
        self.indicator_specs().iter().position(|s| s.id == id)
    }
}

/// The raw panel: validated metadata plus a grid of optional nonnegative values.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    countries: Vec<CountryRecord>,
    indicators: Vec<IndicatorSpec>,
    /// Row-major: `values[country][indicator]`.
    values: Vec<Vec<Option<f64>>>,
    excluded: Vec<ExcludedCountry>,
}

impl IndicatorPanel for DataMatrix {
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

fn valid_code(code: &str) -> bool {
    code.len() == 3 && code.bytes().all(|b| b.is_ascii_uppercase())
}

impl DataMatrix {
    /// Builds a panel from parts, enforcing the grid invariants: unique valid
    /// codes, unique indicator ids, matching dimensions, finite nonnegative
    /// values, nonnegative metadata.
    pub fn new(
        countries: Vec<CountryRecord>,
        indicators: Vec<IndicatorSpec>,
        values: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        if indicators.is_empty() {
            return Err(Error::Schema("a panel needs at least one indicator".into()));
        }
        let mut ids = BTreeSet::new();
        for spec in &indicators {
            if spec.id.is_empty() {
                return Err(Error::Schema("indicator id must not be empty".into()));
            }
            if !ids.insert(spec.id.as_str()) {
                return Err(Error::Schema(format!("duplicate indicator id '{}'", spec.id)));
            }
        }
        let mut codes = BTreeSet::new();
        for rec in &countries {
            if !valid_code(&rec.code) {
                return Err(Error::Schema(format!(
                    "country code '{}' must be exactly three uppercase letters",
                    rec.code
                )));
            }
            if !codes.insert(rec.code.as_str()) {
                return Err(Error::Schema(format!("duplicate country code '{}'", rec.code)));
            }
            if let Some(gdp) = rec.gdp_per_capita {
                if !gdp.is_finite() || gdp < 0.0 {
                    return Err(Error::Schema(format!(
                        "country '{}': per-capita GDP must be a finite nonnegative number",
                        rec.code
                    )));
                }
            }
        }
        if values.len() != countries.len() {
            return Err(Error::Schema(format!(
                "value grid has {} rows for {} countries",
                values.len(),
                countries.len()
            )));
        }
        for (i, row) in values.iter().enumerate() {
            if row.len() != indicators.len() {
                return Err(Error::Schema(format!(
                    "value row for '{}' has {} cells for {} indicators",
                    countries[i].code,
                    row.len(),
                    indicators.len()
                )));
            }
            for (j, cell) in row.iter().enumerate() {
                if let Some(v) = cell {
                    if !v.is_finite() || *v < 0.0 {
                        return Err(Error::Schema(format!(
                            "country '{}', indicator '{}': raw indicator values must be finite and nonnegative (got {})",
                            countries[i].code, indicators[j].id, v
                        )));
                    }
                }
            }
        }
        Ok(DataMatrix {
            countries,
            indicators,
            values,
            excluded: Vec::new(),
        })
    }

    pub fn countries(&self) -> &[CountryRecord] {
        &self.countries
    }

    pub fn indicators(&self) -> &[IndicatorSpec] {
        &self.indicators
    }

    pub fn value(&self, country: usize, indicator: usize) -> Option<f64> {
        self.values[country][indicator]
    }

    pub fn values(&self) -> &[Vec<Option<f64>>] {
        &self.values
    }

    /// Countries removed by exclusion lists, in removal order.
    pub fn excluded(&self) -> &[ExcludedCountry] {
        &self.excluded
    }

    pub fn country_index(&self, code: &str) -> Option<usize> {
        self.countries.iter().position(|c| c.code == code)
    }

    /// Removes listed countries. Codes not present in the panel are reported
    /// as warnings, not errors: exclusion lists are maintained by hand and
    /// routinely mention entities a given data vintage never contained.
    pub fn apply_exclusions(&self, exclusions: &[Exclusion]) -> (DataMatrix, Vec<String>) {
        let mut warnings = Vec::new();
        let mut drop = BTreeSet::new();
        for excl in exclusions {
            match self.country_index(&excl.code) {
                Some(_) => {
                    drop.insert(excl.code.as_str());
                }
                None => warnings.push(format!(
                    "exclusion list: code '{}' is not in the dataset",
                    excl.code
                )),
            }
        }
        let mut countries = Vec::new();
        let mut values = Vec::new();
        let mut excluded = self.excluded.clone();
        for (rec, row) in self.countries.iter().zip(&self.values) {
            if drop.contains(rec.code.as_str()) {
                let reason = exclusions
                    .iter()
                    .find(|e| e.code == rec.code)
                    .map(|e| e.reason.clone())
                    .unwrap_or_default();
                excluded.push(ExcludedCountry {
                    code: rec.code.clone(),
                    name: rec.name.clone(),
                    reason,
                });
            } else {
                countries.push(rec.clone());
                values.push(row.clone());
            }
        }
        let out = DataMatrix {
            countries,
            indicators: self.indicators.clone(),
            values,
            excluded,
        };
        (out, warnings)
    }

    /// Panel without one country; `Argument` error when the code is unknown.
    pub fn without_country(&self, code: &str) -> Result<DataMatrix> {
        let idx = self
            .country_index(code)
            .ok_or_else(|| Error::Argument(format!("country '{code}' is not in the panel")))?;
        let mut out = self.clone();
        out.countries.remove(idx);
        out.values.remove(idx);
        Ok(out)
    }

    /// Panel without one indicator column; `Argument` error when the id is unknown.
    pub fn without_indicator(&self, id: &str) -> Result<DataMatrix> {
        let idx = self
            .indicator_index(id)
            .ok_or_else(|| Error::Argument(format!("indicator '{id}' is not in the panel")))?;
        if self.indicators.len() == 1 {
            return Err(Error::TooFewEntities(
                "removing the only indicator would leave an empty panel".into(),
            ));
        }
        let mut out = self.clone();
        out.indicators.remove(idx);
        for row in &mut out.values {
            row.remove(idx);
        }
        Ok(out)
    }

    /// Keeps countries with at least `min_indicators` present values and
    /// summarizes everyone — kept and dropped — by coverage count.
    ///
    /// Group shares use the pre-filter panel as the world total, so the
    /// report describes what the threshold keeps and what it costs.
    pub fn coverage_filter(&self, min_indicators: usize) -> Result<(DataMatrix, CoverageReport)> {
        let k = self.indicators.len();
        if min_indicators > k {
            return Err(Error::Argument(format!(
                "min_indicators ({min_indicators}) exceeds the number of indicators ({k})"
            )));
        }

        let total_population: u128 = self
            .countries
            .iter()
            .filter_map(|c| c.population)
            .map(u128::from)
            .sum();
        let total_gdp: f64 = self
            .countries
            .iter()
            .filter_map(|c| Some(c.population? as f64 * c.gdp_per_capita?))
            .sum();

        let coverage: Vec<usize> = (0..self.countries.len())
            .map(|i| self.coverage_count(i))
            .collect();

        let mut groups = Vec::new();
        for count in (0..=k).rev() {
            let members: Vec<&CountryRecord> = self
                .countries
                .iter()
                .zip(&coverage)
                .filter(|(_, &c)| c == count)
                .map(|(rec, _)| rec)
                .collect();
            if count == 0 && members.is_empty() {
                continue; // the zero-coverage row only appears when it exists
            }
            let gdps: Vec<f64> = members.iter().filter_map(|c| c.gdp_per_capita).collect();
            let avg_gdp_per_capita = if gdps.is_empty() {
                None
            } else {
                Some(gdps.iter().sum::<f64>() / gdps.len() as f64)
            };
            let pops: Vec<u128> = members.iter().filter_map(|c| c.population.map(u128::from)).collect();
            let world_population_share_pct = if pops.is_empty() || total_population == 0 {
                None
            } else {
                Some(pops.iter().sum::<u128>() as f64 / total_population as f64 * 100.0)
            };
            let gdp_totals: Vec<f64> = members
                .iter()
                .filter_map(|c| Some(c.population? as f64 * c.gdp_per_capita?))
                .collect();
            let world_gdp_share_pct = if gdp_totals.is_empty() || total_gdp == 0.0 {
                None
            } else {
                Some(gdp_totals.iter().sum::<f64>() / total_gdp * 100.0)
            };
            groups.push(CoverageGroup {
                indicator_count: count,
                country_count: members.len(),
                avg_gdp_per_capita,
                world_population_share_pct,
                world_gdp_share_pct,
            });
        }

        let missing_metadata: Vec<MetadataGap> = self
            .countries
            .iter()
            .filter(|c| c.population.is_none() || c.gdp_per_capita.is_none())
            .map(|c| MetadataGap {
                code: c.code.clone(),
                missing_population: c.population.is_none(),
                missing_gdp_per_capita: c.gdp_per_capita.is_none(),
            })
            .collect();

        let mut retained_countries = Vec::new();
        let mut retained_values = Vec::new();
        let mut retained = Vec::new();
        let mut dropped = Vec::new();
        for ((rec, row), &cov) in self.countries.iter().zip(&self.values).zip(&coverage) {
            if cov >= min_indicators {
                retained.push(rec.code.clone());
                retained_countries.push(rec.clone());
                retained_values.push(row.clone());
            } else {
                dropped.push(DroppedCountry {
                    code: rec.code.clone(),
                    coverage: cov,
                });
            }
        }

        let filtered = DataMatrix {
            countries: retained_countries,
            indicators: self.indicators.clone(),
            values: retained_values,
            excluded: self.excluded.clone(),
        };
        let report = CoverageReport {
            min_indicators,
            groups,
            retained,
            dropped,
            missing_metadata,
            excluded: self.excluded.clone(),
        };
        Ok((filtered, report))
    }
}

/// All pre-filter countries with the same number of present indicators,
/// summarized by income level and weight in the world economy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageGroup {
    pub indicator_count: usize,
    pub country_count: usize,
    /// Unweighted mean over members with known per-capita GDP; absent when none is known.
    pub avg_gdp_per_capita: Option<f64>,
    pub world_population_share_pct: Option<f64>,
    pub world_gdp_share_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedCountry {
    pub code: String,
    pub coverage: usize,
}

/// A country whose population or per-capita GDP is unknown; its weight is
/// missing from the share denominators above.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetadataGap {
    pub code: String,
    pub missing_population: bool,
    pub missing_gdp_per_capita: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub min_indicators: usize,
    /// One group per coverage count, highest first. A zero-coverage group is
    /// included only when nonempty, so group counts always sum to the input
    /// country count.
    pub groups: Vec<CoverageGroup>,
    pub retained: Vec<String>,
    pub dropped: Vec<DroppedCountry>,
    pub missing_metadata: Vec<MetadataGap>,
    pub excluded: Vec<ExcludedCountry>,
}

/// Metadata columns every panel CSV starts with, in order.
pub const META_COLUMNS: [&str; 4] = ["code", "name", "population", "gdp_per_capita"];

/// Parses a panel CSV against the given indicator specs.
///
/// The header must match `code,name,population,gdp_per_capita` followed by
/// the spec ids, in order. Empty cells are missing values. Lines starting
/// with `#` are comments (converted panels carry their configuration there).
pub fn load_dataset(csv_text: &str, specs: &[IndicatorSpec]) -> Result<DataMatrix> {
    let (countries, values) = parse_panel_rows(csv_text, specs, false)?;
    DataMatrix::new(countries, specs.to_vec(), values)
}

/// Shared row parser for raw and converted panel CSVs; converted panels may
/// hold negative cells.
pub(crate) fn parse_panel_rows(
    csv_text: &str,
    specs: &[IndicatorSpec],
    allow_negative_cells: bool,
) -> Result<(Vec<CountryRecord>, Vec<Vec<Option<f64>>>)> {
    if specs.is_empty() {
        return Err(Error::Schema("indicator spec list is empty".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| Error::Schema(format!("cannot read CSV header: {e}")))?
        .clone();
    let expected: Vec<&str> = META_COLUMNS
        .iter()
        .copied()
        .chain(specs.iter().map(|s| s.id.as_str()))
        .collect();
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        let expected_set: BTreeSet<&str> = expected.iter().copied().collect();
        for col in &got {
            if !expected_set.contains(col) {
                return Err(Error::Schema(format!("unknown column '{col}' in header")));
            }
        }
        let got_set: BTreeSet<&str> = got.iter().copied().collect();
        for col in &expected {
            if !got_set.contains(col) {
                return Err(Error::Schema(format!("missing column '{col}' in header")));
            }
        }
        return Err(Error::Schema(format!(
            "header columns are out of order: expected '{}', got '{}'",
            expected.join(","),
            got.join(",")
        )));
    }

    let mut countries = Vec::new();
    let mut values: Vec<Vec<Option<f64>>> = Vec::new();
    let mut seen = BTreeSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Schema(format!("malformed CSV record: {e}")))?;
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != expected.len() {
            return Err(Error::Row {
                row,
                message: format!("expected {} fields, found {}", expected.len(), record.len()),
            });
        }
        let code = record[0].to_string();
        if !valid_code(&code) {
            return Err(Error::Row {
                row,
                message: format!("country code '{code}' must be exactly three uppercase letters"),
            });
        }
        if !seen.insert(code.clone()) {
            return Err(Error::Row {
                row,
                message: format!("duplicate country code '{code}'"),
            });
        }
        let name = record[1].to_string();
        if name.is_empty() {
            return Err(Error::Row {
                row,
                message: format!("country '{code}' has an empty name"),
            });
        }
        let population = parse_population(&record[2], row)?;
        let gdp_per_capita = parse_metadata_number(&record[3], "gdp_per_capita", row)?;
        let mut cells = Vec::with_capacity(specs.len());
        for (j, spec) in specs.iter().enumerate() {
            cells.push(parse_indicator_cell(
                &record[4 + j],
                &spec.id,
                row,
                allow_negative_cells,
            )?);
        }
        countries.push(CountryRecord {
            code,
            name,
            population,
            gdp_per_capita,
        });
        values.push(cells);
    }
    Ok((countries, values))
}

fn parse_population(field: &str, row: u64) -> Result<Option<u64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field.parse::<u64>().map(Some).map_err(|_| Error::Row {
        row,
        message: format!("cannot parse population '{field}' as a nonnegative integer"),
    })
}

fn parse_metadata_number(field: &str, column: &str, row: u64) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    let v: f64 = field.parse().map_err(|_| Error::Row {
        row,
        message: format!("cannot parse {column} '{field}' as a number"),
    })?;
    if !v.is_finite() || v < 0.0 {
        return Err(Error::Row {
            row,
            message: format!("{column} must be finite and nonnegative (got '{field}')"),
        });
    }
    Ok(Some(v))
}

fn parse_indicator_cell(
    field: &str,
    indicator: &str,
    row: u64,
    allow_negative: bool,
) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    let v: f64 = field.parse().map_err(|_| Error::Row {
        row,
        message: format!("column '{indicator}': cannot parse '{field}' as a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Row {
            row,
            message: format!("column '{indicator}': value '{field}' is not finite"),
        });
    }
    if !allow_negative && v < 0.0 {
        return Err(Error::Row {
            row,
            message: format!("column '{indicator}': raw indicator values must be nonnegative (got {v})"),
        });
    }
    Ok(Some(v))
}
