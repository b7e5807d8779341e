//! Stability analysis: rerun the whole pipeline under a perturbation and
//! compare the rankings that come out.
//!
//! Perturbations never patch intermediate results — conversion statistics,
//! scores, and ranks are recomputed from scratch on the reduced panel, so a
//! report reflects exactly what a user would have seen had the input been
//! different. Under z-scores everything is relative and removing one country
//! moves everyone; under min–max with fixed bounds nobody else moves. The
//! reports make that difference visible instead of assuming it.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::aggregate::{aggregate, WeightScheme};
use crate::classify::competition_ranks;
use crate::dataset::{DataMatrix, IndicatorPanel};
use crate::diagnostics::pearson;
use crate::error::{Error, Result};
use crate::normalize::{minmax_convert, z_convert_with, Bound, ConvertedMatrix, Method, VarianceMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SensitivityKind {
    LeaveCountryOut,
    LeaveIndicatorOut,
    WeightComparison,
}

impl SensitivityKind {
    pub fn label(self) -> &'static str {
        match self {
            SensitivityKind::LeaveCountryOut => "leave_country_out",
            SensitivityKind::LeaveIndicatorOut => "leave_indicator_out",
            SensitivityKind::WeightComparison => "weight_comparison",
        }
    }
}

/// One country whose rank moved between the base and perturbed runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankShift {
    pub code: String,
    pub old_rank: usize,
    pub new_rank: usize,
}

impl RankShift {
    pub fn magnitude(&self) -> usize {
        self.old_rank.abs_diff(self.new_rank)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub kind: SensitivityKind,
    /// What was perturbed: a country code, an indicator id, or "a vs b".
    pub subject: String,
    /// Rank correlation between the two runs over the common countries.
    pub spearman: f64,
    pub max_rank_shift: usize,
    /// Countries whose rank changed, largest move first (ties by code).
    pub shifted: Vec<RankShift>,
    /// Countries scored in the base run but unscorable in the perturbed one.
    pub dropped: Vec<String>,
    /// Size of the common entity set the comparison ran over.
    pub compared: usize,
}

/// How the perturbed pipeline converts raw values.
#[derive(Debug, Clone, PartialEq)]
pub enum Conversion {
    ZScore,
    MinMax(BTreeMap<String, Bound>),
}

impl Conversion {
    pub fn method(&self) -> Method {
        match self {
            Conversion::ZScore => Method::ZScore,
            Conversion::MinMax(_) => Method::MinMax,
        }
    }
}

/// Everything needed to run the pipeline end to end on a raw panel.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub conversion: Conversion,
    pub scheme: WeightScheme,
    pub variance_mode: VarianceMode,
}

impl PipelineConfig {
    pub fn new(conversion: Conversion, scheme: WeightScheme) -> Self {
        PipelineConfig {
            conversion,
            scheme,
            variance_mode: VarianceMode::default(),
        }
    }

    pub fn convert(&self, matrix: &DataMatrix) -> Result<ConvertedMatrix> {
        match &self.conversion {
            Conversion::ZScore => z_convert_with(matrix, self.variance_mode),
            Conversion::MinMax(bounds) => minmax_convert(matrix, bounds),
        }
    }

    /// Scores for every scorable country: convert, then aggregate.
    pub fn run(&self, matrix: &DataMatrix) -> Result<Vec<(String, f64)>> {
        let converted = self.convert(matrix)?;
        let results = aggregate(&converted, &self.scheme)?;
        Ok(results
            .into_iter()
            .filter_map(|r| r.score.map(|s| (r.code, s)))
            .collect())
    }
}

/// Average ranks (1-based), ties sharing the mean of their positions.
/// Ranking is descending: the largest value gets rank 1.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).expect("values are finite"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share the average of ranks i+1..=j+1
        let shared = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation of two rankings over the same entities.
///
/// Inputs are entity → rank maps; the key sets must match exactly. Ties are
/// midranked, which on tie-free inputs reproduces `1 - 6·Σd²/(n(n²-1))`.
pub fn spearman(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> Result<f64> {
    if a.keys().ne(b.keys()) {
        let only_a: Vec<&String> = a.keys().filter(|k| !b.contains_key(*k)).collect();
        let only_b: Vec<&String> = b.keys().filter(|k| !a.contains_key(*k)).collect();
        return Err(Error::Argument(format!(
            "rankings cover different entities (only in first: {only_a:?}; only in second: {only_b:?})"
        )));
    }
    if a.len() < 2 {
        return Err(Error::TooFewEntities(
            "rank correlation needs at least 2 entities".into(),
        ));
    }
    for (k, v) in a.iter().chain(b.iter()) {
        if !v.is_finite() {
            return Err(Error::Argument(format!("rank for '{k}' is not finite")));
        }
    }
    let xs: Vec<f64> = a.values().copied().collect();
    let ys: Vec<f64> = b.values().copied().collect();
    pearson(&midranks(&xs), &midranks(&ys)).ok_or_else(|| {
        Error::TooFewEntities("a ranking with no variation has undefined rank correlation".into())
    })
}

/// Compares two scored lists over their common countries; both sides are
/// re-ranked on the restricted set before anything is measured.
fn compare_scored(
    kind: SensitivityKind,
    subject: String,
    base: &[(String, f64)],
    perturbed: &[(String, f64)],
    removed: Option<&str>,
) -> Result<SensitivityReport> {
    let base_codes: BTreeSet<&str> = base.iter().map(|(c, _)| c.as_str()).collect();
    let new_codes: BTreeSet<&str> = perturbed.iter().map(|(c, _)| c.as_str()).collect();

    let dropped: Vec<String> = base
        .iter()
        .map(|(c, _)| c.as_str())
        .filter(|c| Some(*c) != removed && !new_codes.contains(c))
        .map(String::from)
        .collect();

    let common: BTreeSet<&str> = base_codes.intersection(&new_codes).copied().collect();
    let restrict = |scored: &[(String, f64)]| -> Vec<(String, f64)> {
        scored
            .iter()
            .filter(|(c, _)| common.contains(c.as_str()))
            .cloned()
            .collect()
    };
    let old_ranks: BTreeMap<String, usize> = competition_ranks(&restrict(base)).into_iter().collect();
    let new_ranks: BTreeMap<String, usize> =
        competition_ranks(&restrict(perturbed)).into_iter().collect();

    let rho = spearman(
        &old_ranks.iter().map(|(c, r)| (c.clone(), *r as f64)).collect(),
        &new_ranks.iter().map(|(c, r)| (c.clone(), *r as f64)).collect(),
    )?;

    let mut shifted: Vec<RankShift> = old_ranks
        .iter()
        .filter_map(|(code, &old_rank)| {
            let new_rank = new_ranks[code];
            (new_rank != old_rank).then(|| RankShift {
                code: code.clone(),
                old_rank,
                new_rank,
            })
        })
        .collect();
    shifted.sort_by(|a, b| {
        b.magnitude()
            .cmp(&a.magnitude())
            .then_with(|| a.code.cmp(&b.code))
    });
    let max_rank_shift = shifted.first().map(RankShift::magnitude).unwrap_or(0);

    Ok(SensitivityReport {
        kind,
        subject,
        spearman: rho,
        max_rank_shift,
        shifted,
        dropped,
        compared: common.len(),
    })
}

/// Reruns the pipeline without one country and reports how the remaining
/// ranking moved. Needs at least 3 countries left over.
pub fn leave_one_country_out(
    matrix: &DataMatrix,
    code: &str,
    config: &PipelineConfig,
) -> Result<SensitivityReport> {
    if matrix.country_index(code).is_none() {
        return Err(Error::Argument(format!("country '{code}' is not in the panel")));
    }
    if matrix.countries().len() < 4 {
        return Err(Error::TooFewEntities(format!(
            "removing '{code}' would leave fewer than 3 countries",
        )));
    }
    let base = config.run(matrix)?;
    let reduced = config.run(&matrix.without_country(code)?)?;
    compare_scored(
        SensitivityKind::LeaveCountryOut,
        code.to_string(),
        &base,
        &reduced,
        Some(code),
    )
}

/// Reruns the pipeline without one indicator, renormalizing the weight
/// scheme over the survivors. Countries that lose their only present
/// indicator drop out of the ranking and are reported as such.
pub fn leave_one_indicator_out(
    matrix: &DataMatrix,
    indicator_id: &str,
    config: &PipelineConfig,
) -> Result<SensitivityReport> {
    if matrix.indicator_index(indicator_id).is_none() {
        return Err(Error::Argument(format!(
            "indicator '{indicator_id}' is not in the panel"
        )));
    }
    if matrix.indicators().len() < 3 {
        return Err(Error::TooFewEntities(format!(
            "removing '{indicator_id}' would leave fewer than 2 indicators",
        )));
    }
    let base = config.run(matrix)?;

    let reduced_matrix = matrix.without_indicator(indicator_id)?;
    let reduced_conversion = match &config.conversion {
        Conversion::ZScore => Conversion::ZScore,
        Conversion::MinMax(bounds) => {
            let mut b = bounds.clone();
            b.remove(indicator_id);
            Conversion::MinMax(b)
        }
    };
    let reduced_config = PipelineConfig {
        conversion: reduced_conversion,
        scheme: config.scheme.without_indicator(indicator_id)?,
        variance_mode: config.variance_mode,
    };
    let reduced = reduced_config.run(&reduced_matrix)?;
    compare_scored(
        SensitivityKind::LeaveIndicatorOut,
        indicator_id.to_string(),
        &base,
        &reduced,
        None,
    )
}

/// Scores the same converted panel under two weight schemes and compares the
/// rankings.
pub fn compare_weights(
    converted: &ConvertedMatrix,
    base: &WeightScheme,
    alternative: &WeightScheme,
) -> Result<SensitivityReport> {
    let score_list = |scheme: &WeightScheme| -> Result<Vec<(String, f64)>> {
        Ok(aggregate(converted, scheme)?
            .into_iter()
            .filter_map(|r| r.score.map(|s| (r.code, s)))
            .collect())
    };
    let a = score_list(base)?;
    let b = score_list(alternative)?;
    compare_scored(
        SensitivityKind::WeightComparison,
        format!("{} vs {}", base.name(), alternative.name()),
        &a,
        &b,
        None,
    )
}
