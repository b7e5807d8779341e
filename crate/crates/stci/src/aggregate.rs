//! Weighted aggregation of a converted panel into one composite score per
//! country, with an explicit policy for missing cells.
//!
//! Weights are stored normalized (sum 1), so schemes that differ only by a
//! scale factor produce the same scores. The two missing-data policies:
//!
//! * `renormalize` — a country is scored on the indicators it has; the
//!   present weights are rescaled to sum 1. Neutral toward gaps.
//! * `zero_fill` — a missing cell contributes zero but keeps its weight in
//!   the denominator, so gaps drag the score down. Punitive toward gaps.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{Domain, IndicatorSpec};
use crate::error::{Error, Result};
use crate::normalize::ConvertedMatrix;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    #[default]
    Renormalize,
    ZeroFill,
}

impl fmt::Display for MissingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MissingPolicy::Renormalize => "renormalize",
            MissingPolicy::ZeroFill => "zero_fill",
        })
    }
}

/// A named weight vector over indicator ids, kept normalized to sum 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightScheme {
    name: String,
    weights: BTreeMap<String, f64>,
    pub missing_policy: MissingPolicy,
}

impl WeightScheme {
    /// Validates and normalizes: weights must be finite and nonnegative with
    /// at least one strictly positive entry.
    pub fn new(
        name: impl Into<String>,
        weights: BTreeMap<String, f64>,
        missing_policy: MissingPolicy,
    ) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::Argument("weight scheme name must not be empty".into()));
        }
        if weights.is_empty() {
            return Err(Error::Argument(format!("weight scheme '{name}' has no weights")));
        }
        for (id, w) in &weights {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::Argument(format!(
                    "weight for '{id}' must be finite and nonnegative (got {w})"
                )));
            }
        }
        let total: f64 = weights.values().sum();
        if total <= 0.0 {
            return Err(Error::Argument(format!(
                "weight scheme '{name}' needs at least one positive weight"
            )));
        }
        let weights = weights.into_iter().map(|(id, w)| (id, w / total)).collect();
        Ok(WeightScheme {
            name,
            weights,
            missing_policy,
        })
    }

    /// The default: every indicator counts the same.
    pub fn equal(specs: &[IndicatorSpec], missing_policy: MissingPolicy) -> Result<Self> {
        let weights = specs.iter().map(|s| (s.id.clone(), 1.0)).collect();
        WeightScheme::new("equal", weights, missing_policy)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn weights(&self) -> &BTreeMap<String, f64> {
        &self.weights
    }

    pub fn weight(&self, id: &str) -> Option<f64> {
        self.weights.get(id).copied()
    }

    /// The same scheme minus one indicator, renormalized over the rest.
    pub fn without_indicator(&self, id: &str) -> Result<WeightScheme> {
        if !self.weights.contains_key(id) {
            return Err(Error::Argument(format!(
                "scheme '{}' has no weight for indicator '{id}'",
                self.name
            )));
        }
        let remaining: BTreeMap<String, f64> = self
            .weights
            .iter()
            .filter(|(k, _)| k.as_str() != id)
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        if remaining.values().sum::<f64>() <= 0.0 {
            return Err(Error::TooFewEntities(format!(
                "removing '{id}' from scheme '{}' leaves no positive weight",
                self.name
            )));
        }
        WeightScheme::new(self.name.clone(), remaining, self.missing_policy)
    }
}

/// Builds per-indicator weights from per-domain weights: a domain's weight is
/// split evenly across its indicators, then the whole vector is normalized.
pub fn domain_weighted_scheme(
    name: impl Into<String>,
    domain_weights: &BTreeMap<Domain, f64>,
    specs: &[IndicatorSpec],
    missing_policy: MissingPolicy,
) -> Result<WeightScheme> {
    let mut counts: BTreeMap<Domain, usize> = BTreeMap::new();
    for spec in specs {
        *counts.entry(spec.domain).or_default() += 1;
    }
    for domain in domain_weights.keys() {
        if !counts.contains_key(domain) {
            return Err(Error::Argument(format!(
                "domain '{}' has a weight but no indicators",
                domain.label()
            )));
        }
    }
    let mut weights = BTreeMap::new();
    for spec in specs {
        let dw = domain_weights.get(&spec.domain).ok_or_else(|| {
            Error::Argument(format!("no domain weight for '{}'", spec.domain.label()))
        })?;
        weights.insert(spec.id.clone(), dw / counts[&spec.domain] as f64);
    }
    WeightScheme::new(name, weights, missing_policy)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositeResult {
    pub code: String,
    /// Absent when the country has no weighted information at all: zero
    /// coverage or, under `renormalize`, only zero-weight indicators present.
    pub score: Option<f64>,
    /// Present indicators, out of the panel's full indicator set.
    pub coverage: usize,
    /// Sub-scores per domain occurring in the panel, computed by the same
    /// policy restricted to the domain's indicators; `None` when the country
    /// has no present indicator in that domain.
    pub domain_scores: BTreeMap<Domain, Option<f64>>,
}

/// Scores every country in the panel. The scheme must weight exactly the
/// panel's indicators — no more, no fewer.
pub fn aggregate(converted: &ConvertedMatrix, scheme: &WeightScheme) -> Result<Vec<CompositeResult>> {
    let specs = converted.indicators();
    for id in scheme.weights().keys() {
        if !specs.iter().any(|s| &s.id == id) {
            return Err(Error::Argument(format!(
                "scheme '{}' weights unknown indicator '{id}'",
                scheme.name()
            )));
        }
    }
    for spec in specs {
        if scheme.weight(&spec.id).is_none() {
            return Err(Error::Argument(format!(
                "scheme '{}' has no weight for indicator '{}'",
                scheme.name(),
                spec.id
            )));
        }
    }

    let w: Vec<f64> = specs.iter().map(|s| scheme.weight(&s.id).unwrap()).collect();
    let domains: BTreeSet<Domain> = specs.iter().map(|s| s.domain).collect();

    let mut out = Vec::with_capacity(converted.countries().len());
    for (i, rec) in converted.countries().iter().enumerate() {
        let cells: Vec<Option<f64>> = (0..specs.len()).map(|j| converted.value(i, j)).collect();
        let coverage = cells.iter().flatten().count();
        let score = weighted_score(&cells, &w, (0..specs.len()).collect(), scheme.missing_policy);
        let mut domain_scores = BTreeMap::new();
        for &domain in &domains {
            let members: Vec<usize> = specs
                .iter()
                .enumerate()
                .filter(|(_, s)| s.domain == domain)
                .map(|(j, _)| j)
                .collect();
            domain_scores.insert(domain, weighted_score(&cells, &w, members, scheme.missing_policy));
        }
        out.push(CompositeResult {
            code: rec.code.clone(),
            score,
            coverage,
            domain_scores,
        });
    }
    Ok(out)
}

/// Weighted mean over a subset of indicator positions, honoring the policy.
/// `None` when nothing present carries weight (renormalize) or nothing is
/// present at all (both policies).
fn weighted_score(
    cells: &[Option<f64>],
    weights: &[f64],
    members: Vec<usize>,
    policy: MissingPolicy,
) -> Option<f64> {
    let mut num = 0.0;
    let mut present_weight = 0.0;
    let mut full_weight = 0.0;
    let mut present = 0usize;
    for j in members {
        full_weight += weights[j];
        if let Some(y) = cells[j] {
            num += weights[j] * y;
            present_weight += weights[j];
            present += 1;
        }
    }
    if present == 0 {
        return None;
    }
    match policy {
        MissingPolicy::Renormalize => {
            if present_weight > 0.0 {
                Some(num / present_weight)
            } else {
                None
            }
        }
        MissingPolicy::ZeroFill => Some(num / full_weight),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{CountryRecord, Direction};
    use crate::normalize::{ConvertedMatrix, Method};
    use approx::assert_abs_diff_eq;

    fn spec(id: &str, domain: Domain) -> IndicatorSpec {
        IndicatorSpec {
            id: id.into(),
            name: id.to_uppercase(),
            domain,
            units: "u".into(),
            direction: Direction::HigherIsBetter,
        }
    }

    fn converted(columns: &[(&str, Domain, &[Option<f64>])]) -> ConvertedMatrix {
        let n = columns[0].2.len();
        let countries: Vec<CountryRecord> = (0..n)
            .map(|i| CountryRecord {
                code: format!("A{}{}", (b'A' + (i / 26) as u8) as char, (b'A' + (i % 26) as u8) as char),
                name: format!("C{i}"),
                population: None,
                gdp_per_capita: None,
            })
            .collect();
        let specs: Vec<IndicatorSpec> = columns.iter().map(|(id, d, _)| spec(id, *d)).collect();
        let values: Vec<Vec<Option<f64>>> = (0..n)
            .map(|i| columns.iter().map(|(_, _, col)| col[i]).collect())
            .collect();
        ConvertedMatrix::from_loaded(countries, specs, values, Method::ZScore).unwrap()
    }

    #[test]
    fn policies_differ_exactly_on_missing_rows() {
        let c = converted(&[
            ("a", Domain::Precondition, &[Some(1.0), Some(1.0)]),
            ("b", Domain::Resource, &[None, Some(0.0)]),
            ("c", Domain::Output, &[Some(0.5), Some(0.5)]),
        ]);
        let equal = WeightScheme::equal(c.indicators(), MissingPolicy::Renormalize).unwrap();
        let results = aggregate(&c, &equal).unwrap();
        // Row 0 has values (1.0, missing, 0.5): renormalize -> (1.0 + 0.5) / 2.
        assert_abs_diff_eq!(results[0].score.unwrap(), 0.75, epsilon = 1e-15);
        assert_eq!(results[0].coverage, 2);

        let zf = WeightScheme::equal(c.indicators(), MissingPolicy::ZeroFill).unwrap();
        let results = aggregate(&c, &zf).unwrap();
        // zero_fill keeps the full denominator: (1.0 + 0 + 0.5) / 3.
        assert_abs_diff_eq!(results[0].score.unwrap(), 0.5, epsilon = 1e-15);
        // Full-coverage rows score identically under both policies.
        assert_abs_diff_eq!(results[1].score.unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn domain_scores_restrict_the_same_rule() {
        let c = converted(&[
            ("a", Domain::Precondition, &[Some(1.0)]),
            ("b", Domain::Resource, &[None]),
            ("c", Domain::Output, &[Some(0.5)]),
        ]);
        let equal = WeightScheme::equal(c.indicators(), MissingPolicy::Renormalize).unwrap();
        let r = &aggregate(&c, &equal).unwrap()[0];
        assert_eq!(r.domain_scores[&Domain::Precondition], Some(1.0));
        assert_eq!(r.domain_scores[&Domain::Resource], None, "nothing present in domain");
        assert_eq!(r.domain_scores[&Domain::Output], Some(0.5));
    }

    #[test]
    fn zero_coverage_means_no_score_under_both_policies() {
        for policy in [MissingPolicy::Renormalize, MissingPolicy::ZeroFill] {
            let c = converted(&[
                ("a", Domain::Resource, &[None, Some(1.0)]),
                ("b", Domain::Resource, &[None, Some(2.0)]),
            ]);
            let scheme = WeightScheme::equal(c.indicators(), policy).unwrap();
            let results = aggregate(&c, &scheme).unwrap();
            assert_eq!(results[0].score, None);
            assert_eq!(results[0].coverage, 0);
            assert!(results[1].score.is_some());
        }
    }

    #[test]
    fn weights_normalize_on_construction() {
        let mut w = BTreeMap::new();
        w.insert("a".to_string(), 2.0);
        w.insert("b".to_string(), 6.0);
        let s = WeightScheme::new("lopsided", w, MissingPolicy::Renormalize).unwrap();
        assert_eq!(s.weight("a"), Some(0.25));
        assert_eq!(s.weight("b"), Some(0.75));
    }

    #[test]
    fn scheme_must_cover_exactly_the_panel() {
        let c = converted(&[("a", Domain::Resource, &[Some(1.0), Some(2.0)])]);
        let mut w = BTreeMap::new();
        w.insert("other".to_string(), 1.0);
        let s = WeightScheme::new("s", w, MissingPolicy::Renormalize).unwrap();
        let err = aggregate(&c, &s).unwrap_err();
        assert!(err.to_string().contains("unknown indicator 'other'"), "{err}");

        let mut w = BTreeMap::new();
        w.insert("a".to_string(), 1.0);
        w.insert("extra".to_string(), 1.0);
        let s = WeightScheme::new("s", w, MissingPolicy::Renormalize).unwrap();
        assert!(aggregate(&c, &s).is_err());
    }

    #[test]
    fn invalid_weight_vectors_are_rejected() {
        let mut w = BTreeMap::new();
        w.insert("a".to_string(), -1.0);
        assert!(WeightScheme::new("bad", w, MissingPolicy::Renormalize).is_err());
        let mut w = BTreeMap::new();
        w.insert("a".to_string(), 0.0);
        assert!(WeightScheme::new("zeros", w, MissingPolicy::Renormalize).is_err());
        assert!(WeightScheme::new("empty", BTreeMap::new(), MissingPolicy::Renormalize).is_err());
    }

    #[test]
    fn domain_weights_split_evenly_inside_domains() {
        // Domains sized (2, 3, 3) with equal domain weights: per-indicator
        // weights proportional to (1/2, 1/2, 1/3, 1/3, 1/3, 1/3, 1/3, 1/3).
        let specs: Vec<IndicatorSpec> = vec![
            spec("p1", Domain::Precondition),
            spec("p2", Domain::Precondition),
            spec("r1", Domain::Resource),
            spec("r2", Domain::Resource),
            spec("r3", Domain::Resource),
            spec("o1", Domain::Output),
            spec("o2", Domain::Output),
            spec("o3", Domain::Output),
        ];
        let mut dw = BTreeMap::new();
        dw.insert(Domain::Precondition, 1.0);
        dw.insert(Domain::Resource, 1.0);
        dw.insert(Domain::Output, 1.0);
        let s = domain_weighted_scheme("by-domain", &dw, &specs, MissingPolicy::Renormalize).unwrap();
        assert_abs_diff_eq!(s.weight("p1").unwrap(), 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.weight("r2").unwrap(), 1.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.weights().values().sum::<f64>(), 1.0, epsilon = 1e-12);

        let mut dw_missing = BTreeMap::new();
        dw_missing.insert(Domain::Precondition, 1.0);
        assert!(domain_weighted_scheme("incomplete", &dw_missing, &specs, MissingPolicy::Renormalize).is_err());
    }

    #[test]
    fn removing_an_indicator_renormalizes_the_rest() {
        let mut w = BTreeMap::new();
        w.insert("a".to_string(), 1.0);
        w.insert("b".to_string(), 3.0);
        let s = WeightScheme::new("s", w, MissingPolicy::Renormalize).unwrap();
        let t = s.without_indicator("a").unwrap();
        assert_eq!(t.weight("b"), Some(1.0));
        assert!(t.weight("a").is_none());
        assert!(s.without_indicator("zz").is_err());
    }
}
