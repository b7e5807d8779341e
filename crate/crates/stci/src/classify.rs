//! Ranking and banding of composite scores.
//!
//! Bands are one standard deviation wide around the panel mean. That
//! convention is this tool's own reporting choice, so every artifact header
//! repeats it; nothing about it is inherent to the scores.

use serde::Serialize;

use crate::aggregate::CompositeResult;
use crate::error::{Error, Result};

/// The band rule, verbatim, for artifact headers.
pub const BAND_CONVENTION: &str =
    "mean±1sd: advanced >= m+s, proficient >= m, developing >= m-s, lagging < m-s (population sd, lower boundary inclusive)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Advanced,
    Proficient,
    Developing,
    Lagging,
}

impl Band {
    pub fn label(self) -> &'static str {
        match self {
            Band::Advanced => "advanced",
            Band::Proficient => "proficient",
            Band::Developing => "developing",
            Band::Lagging => "lagging",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub code: String,
    /// Competition ranking: tied scores share a rank, the next rank skips.
    pub rank: usize,
    pub band: Band,
    pub score: f64,
}

/// Competition ranks (1, 2, 2, 4) over scores, highest first.
/// Ties share the rank of their first position.
pub fn competition_ranks(scored: &[(String, f64)]) -> Vec<(String, usize)> {
    let mut order: Vec<&(String, f64)> = scored.iter().collect();
    order.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("scores are finite")
            .then_with(|| a.0.cmp(&b.0))
    });
    let mut out = Vec::with_capacity(order.len());
    let mut rank = 0usize;
    let mut prev: Option<f64> = None;
    for (pos, (code, score)) in order.iter().enumerate() {
        if prev != Some(*score) {
            rank = pos + 1;
            prev = Some(*score);
        }
        out.push((code.clone(), rank));
    }
    out
}

/// Ranks scored countries and assigns mean ± 1 sd bands.
///
/// Unscored countries are skipped. All boundaries are inclusive from below:
/// a score exactly at `mean + sd` is advanced, exactly at `mean` is
/// proficient, exactly at `mean - sd` is developing. Equal scores everywhere
/// leave the bands undefined and are reported as such. Output is ordered by
/// rank, ties alphabetically by code.
pub fn classify(results: &[CompositeResult]) -> Result<Vec<Classification>> {
    let scored: Vec<(String, f64)> = results
        .iter()
        .filter_map(|r| r.score.map(|s| (r.code.clone(), s)))
        .collect();
    if scored.len() < 2 {
        return Err(Error::TooFewEntities(format!(
            "classification needs at least 2 scored countries (got {})",
            scored.len()
        )));
    }
    let n = scored.len() as f64;
    let mean = scored.iter().map(|(_, s)| s).sum::<f64>() / n;
    let sd = (scored.iter().map(|(_, s)| (s - mean).powi(2)).sum::<f64>() / n).sqrt();
    if sd == 0.0 {
        return Err(Error::DegenerateScores);
    }

    // competition_ranks already yields display order (score desc, code asc).
    let score_of: std::collections::BTreeMap<&str, f64> =
        scored.iter().map(|(c, s)| (c.as_str(), *s)).collect();
    Ok(competition_ranks(&scored)
        .into_iter()
        .map(|(code, rank)| {
            let score = score_of[code.as_str()];
            Classification {
                rank,
                band: band_of(score, mean, sd),
                score,
                code,
            }
        })
        .collect())
}

fn band_of(score: f64, mean: f64, sd: f64) -> Band {
    if score >= mean + sd {
        Band::Advanced
    } else if score >= mean {
        Band::Proficient
    } else if score >= mean - sd {
        Band::Developing
    } else {
        Band::Lagging
    }
}
