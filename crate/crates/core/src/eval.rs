//! Word-similarity evaluation: SimLex-999 ingestion, cosine scoring and
//! tie-aware Spearman correlation.

use std::collections::BTreeSet;
use std::io::BufRead;

use serde::Serialize;
use thiserror::Error;

use crate::embedding::{EmbeddingTable, Vector};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("missing or unrecognized header (need word1, word2 and SimLex999 columns)")]
    MissingHeader,
    #[error("line {line}: expected {expected} fields, found {found}")]
    Arity {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: score {field:?} is not a number")]
    NonNumeric { line: usize, field: String },
    #[error("line {line}: {message}")]
    InvalidPair { line: usize, message: String },
    #[error("read error: {0}")]
    Io(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("cosine is undefined for a zero vector")]
    ZeroVector,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 observations, got {0}")]
    TooFewObservations(usize),
    #[error("correlation is undefined for a constant series")]
    ConstantSeries,
}

/// A rated word pair on the 0-10 SimLex scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityPair {
    pub word1: String,
    pub word2: String,
    pub gold: f64,
}

const WORD1: &[&str] = &["word1", "Word 1"];
const WORD2: &[&str] = &["word2", "Word 2"];
// WordSim-353's combined.tab uses "Human (mean)" for the same role.
const SCORE: &[&str] = &["SimLex999", "Human (mean)"];

fn column(header: &[&str], names: &[&str]) -> Option<usize> {
    header.iter().position(|h| names.contains(&h.trim()))
}

/// Parses a tab-separated similarity file with a header row.
///
/// Columns are located by header name, so both the published SimLex-999
/// layout and WordSim-353's `combined.tab` are accepted.
pub fn parse_simlex<R: BufRead>(reader: R) -> Result<Vec<SimilarityPair>, EvalError> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(l) => l.map_err(|e| EvalError::Io(e.to_string()))?,
        None => return Err(EvalError::MissingHeader),
    };
    let header = header.trim_end_matches('\r');
    let cols: Vec<&str> = header.split('\t').collect();
    let (c1, c2, cs) = match (
        column(&cols, WORD1),
        column(&cols, WORD2),
        column(&cols, SCORE),
    ) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(EvalError::MissingHeader),
    };

    let mut pairs = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line.map_err(|e| EvalError::Io(e.to_string()))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != cols.len() {
            return Err(EvalError::Arity {
                line: line_no,
                expected: cols.len(),
                found: fields.len(),
            });
        }
        let word1 = fields[c1].trim();
        let word2 = fields[c2].trim();
        let raw = fields[cs].trim();
        let gold: f64 = raw
            .parse()
            .ok()
            .filter(|g: &f64| g.is_finite())
            .ok_or_else(|| EvalError::NonNumeric {
                line: line_no,
                field: raw.to_owned(),
            })?;
        let invalid = |message: String| EvalError::InvalidPair {
            line: line_no,
            message,
        };
        if word1.is_empty() || word2.is_empty() {
            return Err(invalid("empty word".into()));
        }
        if word1 == word2 {
            return Err(invalid(format!("pair repeats {word1:?}")));
        }
        if !(0.0..=10.0).contains(&gold) {
            return Err(invalid(format!("score {gold} outside 0..=10")));
        }
        pairs.push(SimilarityPair {
            word1: word1.to_owned(),
            word2: word2.to_owned(),
            gold,
        });
    }
    Ok(pairs)
}

pub fn cosine(u: &Vector, v: &Vector) -> Result<f64, EvalError> {
    if u.dim() != v.dim() {
        return Err(EvalError::DimensionMismatch(u.dim(), v.dim()));
    }
    let denom = u.norm() * v.norm();
    if denom == 0.0 {
        return Err(EvalError::ZeroVector);
    }
    Ok((u.dot(v) / denom).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn rank_average_ties(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && xs[order[j]] == xs[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) hold ranks i+1..=j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::ConstantSeries);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of average-tie ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    if xs.len() != ys.len() {
        return Err(EvalError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(EvalError::TooFewObservations(xs.len()));
    }
    pearson(&rank_average_ties(xs), &rank_average_ties(ys))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub pairs_total: usize,
    pub pairs_covered: usize,
    /// `None` when fewer than two pairs are covered or a series is constant.
    pub spearman_rho: Option<f64>,
    pub missing_words: Vec<String>,
}

impl EvalReport {
    /// One-line summary, e.g. `rho: 0.886 (999/999 covered)`.
    pub fn render_text(&self) -> String {
        match self.spearman_rho {
            Some(rho) => format!(
                "rho: {rho:.3} ({}/{} covered)",
                self.pairs_covered, self.pairs_total
            ),
            None => format!(
                "rho: undefined ({}/{} covered)",
                self.pairs_covered, self.pairs_total
            ),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Scores every pair whose two words have nonzero vectors and correlates
/// the cosines with the gold ratings. Uncovered pairs are left out, never
/// imputed.
pub fn evaluate(vocab: &EmbeddingTable, pairs: &[SimilarityPair]) -> EvalReport {
    let mut missing = BTreeSet::new();
    let mut gold = Vec::new();
    let mut model = Vec::new();
    for pair in pairs {
        let u = vocab.lookup(&pair.word1).filter(|v| !v.is_zero());
        let v = vocab.lookup(&pair.word2).filter(|v| !v.is_zero());
        if u.is_none() {
            missing.insert(pair.word1.clone());
        }
        if v.is_none() {
            missing.insert(pair.word2.clone());
        }
        if let (Some(u), Some(v)) = (u, v) {
            if let Ok(score) = cosine(u, v) {
                gold.push(pair.gold);
                model.push(score);
            }
        }
    }
    EvalReport {
        pairs_total: pairs.len(),
        pairs_covered: gold.len(),
        spearman_rho: spearman(&model, &gold).ok(),
        missing_words: missing.into_iter().collect(),
    }
}
