//! Fusion of a word's own vector with the vectors of its ConceptNet neighbors.
//!
//! For a word `w` with pretrained vector `v` and related words
//! `c_1..c_n`, the fused vector is
//!
//! ```text
//! v_cm = normalize( (v_c_1 + ... + v_c_n) ⊙ v )
//! ```
//!
//! where `⊙` is the element-wise product and `normalize` divides by the
//! Euclidean norm. Neighbors missing from the embedding table are skipped.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conceptnet::NeighborSet;
use crate::embedding::{EmbeddingTable, Vector};

#[derive(Debug, Error, PartialEq)]
pub enum CombineError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("cannot aggregate an empty neighbor list")]
    EmptyAggregate,
    #[error("cannot scale a zero vector")]
    ZeroVector,
    #[error("result is not finite")]
    NonFinite,
    #[error("word {0:?} is not in the embedding table")]
    UnknownWord(String),
    #[error("fused vector of {0:?} is zero")]
    DegenerateFusion(String),
    #[error("neighbor_cap must be at least 1")]
    InvalidCap,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingNeighborPolicy {
    SkipSilently,
    #[default]
    Report,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoNeighborFallback {
    /// `v_cm := normalize(v)`.
    #[default]
    CopyOwnVector,
    ExcludeWord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CombineConfig {
    pub neighbor_cap: usize,
    pub missing_neighbor_policy: MissingNeighborPolicy,
    pub fallback_when_no_neighbors: NoNeighborFallback,
}

impl Default for CombineConfig {
    fn default() -> Self {
        CombineConfig {
            neighbor_cap: crate::conceptnet::DEFAULT_NEIGHBOR_CAP,
            missing_neighbor_policy: MissingNeighborPolicy::default(),
            fallback_when_no_neighbors: NoNeighborFallback::default(),
        }
    }
}

impl CombineConfig {
    pub fn validate(&self) -> Result<(), CombineError> {
        if self.neighbor_cap < 1 {
            return Err(CombineError::InvalidCap);
        }
        Ok(())
    }
}

/// Vectors found for a neighbor set, plus the terms that had none.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NeighborVectors {
    pub terms: Vec<String>,
    pub vectors: Vec<Vector>,
    /// Empty under [`MissingNeighborPolicy::SkipSilently`].
    pub missing: Vec<String>,
}

/// The fused, normalized representation of one word.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedVector {
    pub word: String,
    pub v_cm: Vector,
    pub used_neighbors: Vec<String>,
    pub missing_neighbors: Vec<String>,
}

/// Looks up the first `cap` neighbors of `ns` in `table`, in set order.
pub fn neighbor_vectors(
    ns: &NeighborSet,
    table: &EmbeddingTable,
    cap: usize,
    policy: MissingNeighborPolicy,
) -> NeighborVectors {
    let mut out = NeighborVectors::default();
    for term in ns.terms().take(cap) {
        match table.lookup(term) {
            Some(v) => {
                out.terms.push(term.to_owned());
                out.vectors.push(v.clone());
            }
            None if policy == MissingNeighborPolicy::Report => out.missing.push(term.to_owned()),
            None => {}
        }
    }
    out
}

/// Element-wise sum.
pub fn aggregate(vectors: &[Vector]) -> Result<Vector, CombineError> {
    let first = vectors.first().ok_or(CombineError::EmptyAggregate)?;
    let mut acc = first.as_slice().to_vec();
    for v in &vectors[1..] {
        check_dims(first, v)?;
        for (a, x) in acc.iter_mut().zip(v.as_slice()) {
            *a += x;
        }
    }
    Vector::new(acc).map_err(|_| CombineError::NonFinite)
}

/// Element-wise (Hadamard) product of the word's own vector with the neighbor sum.
pub fn fuse(own: &Vector, neighbor_sum: &Vector) -> Result<Vector, CombineError> {
    check_dims(own, neighbor_sum)?;
    let values = own
        .as_slice()
        .iter()
        .zip(neighbor_sum.as_slice())
        .map(|(a, b)| a * b)
        .collect();
    Vector::new(values).map_err(|_| CombineError::NonFinite)
}

/// Divides by the Euclidean norm.
pub fn scale(v: &Vector) -> Result<Vector, CombineError> {
    let norm = v.norm();
    if norm == 0.0 {
        return Err(CombineError::ZeroVector);
    }
    if !norm.is_finite() {
        // Rescale first so the squared sum cannot overflow.
        let max = v.as_slice().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let pre = Vector::new(v.as_slice().iter().map(|x| x / max).collect())
            .map_err(|_| CombineError::NonFinite)?;
        return scale(&pre);
    }
    Vector::new(v.as_slice().iter().map(|x| x / norm).collect())
        .map_err(|_| CombineError::NonFinite)
}

/// Runs lookup, neighbor lookup, sum, product and normalization for `word`.
///
/// Returns `Ok(None)` when the word has no usable neighbors and the
/// fallback is [`NoNeighborFallback::ExcludeWord`].
pub fn combine_word(
    word: &str,
    table: &EmbeddingTable,
    ns: &NeighborSet,
    cfg: &CombineConfig,
) -> Result<Option<FusedVector>, CombineError> {
    let own = table
        .lookup(word)
        .ok_or_else(|| CombineError::UnknownWord(word.to_owned()))?;
    let found = neighbor_vectors(ns, table, cfg.neighbor_cap, cfg.missing_neighbor_policy);

    let fused = if found.vectors.is_empty() {
        match cfg.fallback_when_no_neighbors {
            NoNeighborFallback::ExcludeWord => return Ok(None),
            NoNeighborFallback::CopyOwnVector => own.clone(),
        }
    } else {
        let sum = aggregate(&found.vectors)?;
        fuse(own, &sum)?
    };
    let v_cm = scale(&fused).map_err(|e| match e {
        CombineError::ZeroVector => CombineError::DegenerateFusion(word.to_owned()),
        other => other,
    })?;
    Ok(Some(FusedVector {
        word: word.to_owned(),
        v_cm,
        used_neighbors: found.terms,
        missing_neighbors: found.missing,
    }))
}

fn check_dims(a: &Vector, b: &Vector) -> Result<(), CombineError> {
    if a.dim() != b.dim() {
        return Err(CombineError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conceptnet::Neighbor;

    fn v(xs: &[f64]) -> Vector {
        Vector::new(xs.to_vec()).unwrap()
    }

    fn ns(word: &str, terms: &[&str]) -> NeighborSet {
        NeighborSet {
            word: word.into(),
            neighbors: terms
                .iter()
                .enumerate()
                .map(|(i, t)| Neighbor {
                    term: (*t).into(),
                    relation: "RelatedTo".into(),
                    weight: 10.0 - i as f64,
                })
                .collect(),
        }
    }

    fn table() -> EmbeddingTable {
        EmbeddingTable::from_entries(
            3,
            [
                ("dog".to_owned(), v(&[1.0, 2.0, -1.0])),
                ("puppy".to_owned(), v(&[0.5, 1.0, 2.0])),
                ("animal".to_owned(), v(&[1.5, -1.0, 1.0])),
                ("cat".to_owned(), v(&[2.0, 0.0, 1.0])),
                ("pet".to_owned(), v(&[-1.0, 1.0, 1.0])),
            ],
        )
        .unwrap()
    }

    #[test]
    fn neighbor_vectors_filters_in_order() {
        let t = table();
        let got = neighbor_vectors(
            &ns("dog", &["animal", "wolf", "puppy"]),
            &t,
            20,
            MissingNeighborPolicy::Report,
        );
        assert_eq!(got.terms, vec!["animal", "puppy"]);
        assert_eq!(got.vectors.len(), 2);
        assert_eq!(got.missing, vec!["wolf"]);

        let silent = neighbor_vectors(
            &ns("dog", &["wolf"]),
            &t,
            20,
            MissingNeighborPolicy::SkipSilently,
        );
        assert!(silent.vectors.is_empty() && silent.missing.is_empty());

        let none = neighbor_vectors(&ns("dog", &[]), &t, 20, MissingNeighborPolicy::Report);
        assert!(none.vectors.is_empty());

        let all_missing = neighbor_vectors(
            &ns("dog", &["a", "b", "c"]),
            &t,
            20,
            MissingNeighborPolicy::Report,
        );
        assert!(all_missing.vectors.is_empty());
        assert_eq!(all_missing.missing.len(), 3);
    }

    #[test]
    fn neighbor_vectors_respects_cap() {
        let got = neighbor_vectors(
            &ns("dog", &["animal", "puppy"]),
            &table(),
            1,
            MissingNeighborPolicy::Report,
        );
        assert_eq!(got.terms, vec!["animal"]);
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(
            aggregate(&[v(&[1.0, 2.0]), v(&[3.0, 4.0])]).unwrap(),
            v(&[4.0, 6.0])
        );
        assert_eq!(aggregate(&[v(&[1.5, -2.0])]).unwrap(), v(&[1.5, -2.0]));
        assert_eq!(
            aggregate(&[v(&[1.0, 0.0]), v(&[-1.0, 0.0])]).unwrap(),
            v(&[0.0, 0.0])
        );
        assert_eq!(aggregate(&[]), Err(CombineError::EmptyAggregate));
        assert!(matches!(
            aggregate(&[v(&[1.0]), v(&[1.0, 2.0])]),
            Err(CombineError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn fuse_examples() {
        assert_eq!(
            fuse(&v(&[1.0, 2.0]), &v(&[3.0, 4.0])).unwrap(),
            v(&[3.0, 8.0])
        );
        assert_eq!(
            fuse(&v(&[0.0, 0.0]), &v(&[3.0, 4.0])).unwrap(),
            v(&[0.0, 0.0])
        );
        assert!(matches!(
            fuse(&v(&[1.0]), &v(&[1.0, 2.0])),
            Err(CombineError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn scale_examples() {
        let s = scale(&v(&[3.0, 4.0])).unwrap();
        assert!((s.as_slice()[0] - 0.6).abs() < 1e-15);
        assert!((s.as_slice()[1] - 0.8).abs() < 1e-15);
        let unit = v(&[0.0, 1.0, 0.0]);
        assert_eq!(scale(&unit).unwrap(), unit);
        assert_eq!(scale(&v(&[0.0, 0.0])), Err(CombineError::ZeroVector));
    }

    #[test]
    fn scale_survives_overflowing_norm() {
        let s = scale(&v(&[1e200, 1e200])).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn combine_matches_hand_computation() {
        // dog = [1, 2, -1]; animal + puppy = [2, 0, 3]
        // product = [2, 0, -3]; norm = sqrt(13)
        let t = table();
        let fused = combine_word(
            "dog",
            &t,
            &ns("dog", &["animal", "wolf", "puppy"]),
            &CombineConfig::default(),
        )
        .unwrap()
        .unwrap();
        let r = 13f64.sqrt();
        let expected = [2.0 / r, 0.0, -3.0 / r];
        for (a, b) in fused.v_cm.as_slice().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
        assert_eq!(fused.used_neighbors, vec!["animal", "puppy"]);
        assert_eq!(fused.missing_neighbors, vec!["wolf"]);

        // cat = [2, 0, 1]; pet = [-1, 1, 1]; product = [-2, 0, 1]; norm = sqrt(5)
        let fused = combine_word("cat", &t, &ns("cat", &["pet"]), &CombineConfig::default())
            .unwrap()
            .unwrap();
        let r = 5f64.sqrt();
        let expected = [-2.0 / r, 0.0, 1.0 / r];
        for (a, b) in fused.v_cm.as_slice().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn fallback_policies() {
        let t = table();
        let fused = combine_word(
            "dog",
            &t,
            &NeighborSet::empty("dog"),
            &CombineConfig::default(),
        )
        .unwrap()
        .unwrap();
        assert_eq!(fused.v_cm, scale(t.lookup("dog").unwrap()).unwrap());
        assert!(fused.used_neighbors.is_empty());

        let cfg = CombineConfig {
            fallback_when_no_neighbors: NoNeighborFallback::ExcludeWord,
            ..CombineConfig::default()
        };
        assert_eq!(
            combine_word("dog", &t, &ns("dog", &["wolf"]), &cfg).unwrap(),
            None
        );
    }

    #[test]
    fn unknown_and_degenerate_words() {
        let t = table();
        assert_eq!(
            combine_word(
                "zebra",
                &t,
                &NeighborSet::empty("zebra"),
                &CombineConfig::default()
            ),
            Err(CombineError::UnknownWord("zebra".into()))
        );
        let t = EmbeddingTable::from_entries(
            2,
            [
                ("a".to_owned(), v(&[1.0, 0.0])),
                ("b".to_owned(), v(&[0.0, 1.0])),
            ],
        )
        .unwrap();
        assert_eq!(
            combine_word("a", &t, &ns("a", &["b"]), &CombineConfig::default()),
            Err(CombineError::DegenerateFusion("a".into()))
        );
    }

    #[test]
    fn neighbor_order_does_not_change_fusion() {
        let t = table();
        let cfg = CombineConfig::default();
        let a = combine_word("dog", &t, &ns("dog", &["animal", "puppy", "cat"]), &cfg)
            .unwrap()
            .unwrap();
        let b = combine_word("dog", &t, &ns("dog", &["cat", "animal", "puppy"]), &cfg)
            .unwrap()
            .unwrap();
        for (x, y) in a.v_cm.as_slice().iter().zip(b.v_cm.as_slice()) {
            assert!((x - y).abs() < 1e-15);
        }
    }
}
