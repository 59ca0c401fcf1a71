//! Kohonen-layer refinement of fused word vectors.
//!
//! Every fused vector is reshaped row-major into a grid and pulled toward
//! the grids of its `k` nearest vocabulary neighbors (Euclidean):
//!
//! ```text
//! repeat `iterations` times:
//!     for each neighbor n_i, nearest first:
//!         center <- center + a * (n_i - center)
//! ```
//!
//! Neighbors are always read from the pre-refinement snapshot, so the
//! result does not depend on the order in which words are processed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{EmbeddingTable, Vector};

#[derive(Debug, Error, PartialEq)]
pub enum SomError {
    #[error("{rows} rows do not divide vector dimension {dim}")]
    GridShape { dim: usize, rows: usize },
    #[error("grid shapes differ: {expected:?} vs {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("word {0:?} is not in the vocabulary")]
    UnknownWord(String),
    #[error("vocabulary too small: {size} words cannot supply {k} neighbors per word")]
    VocabularyTooSmall { size: usize, k: usize },
    #[error("learning rate {0} outside [0, 1]")]
    LearningRate(f64),
    #[error("invalid SOM configuration: {0}")]
    InvalidConfig(String),
}

/// A `rows x cols` real matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    rows: usize,
    cols: usize,
    cells: Vec<f64>,
}

impl Grid2D {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        (row < self.rows && col < self.cols).then(|| self.cells[row * self.cols + col])
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.cells[row * self.cols..(row + 1) * self.cols]
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    /// Exact inverse of [`reshape`].
    pub fn flatten(&self) -> Vector {
        // Cells only ever hold convex combinations of finite inputs.
        Vector::new(self.cells.clone()).expect("grid cells are finite")
    }
}

/// Row-major reshape of `v` into `rows` rows.
pub fn reshape(v: &Vector, rows: usize) -> Result<Grid2D, SomError> {
    let dim = v.dim();
    if rows == 0 || !dim.is_multiple_of(rows) {
        return Err(SomError::GridShape { dim, rows });
    }
    Ok(Grid2D {
        rows,
        cols: dim / rows,
        cells: v.as_slice().to_vec(),
    })
}

/// Largest divisor of `dim` not exceeding its square root (15 for 300).
pub fn square_grid_rows(dim: usize) -> usize {
    (1..=dim)
        .take_while(|r| r * r <= dim)
        .filter(|r| dim.is_multiple_of(*r))
        .last()
        .unwrap_or(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SomConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub k_neighbors: usize,
    /// `None` picks the closest-to-square factorization of the dimension.
    pub grid_rows: Option<usize>,
}

impl Default for SomConfig {
    fn default() -> Self {
        SomConfig {
            iterations: 500,
            learning_rate: 0.005,
            k_neighbors: 4,
            grid_rows: None,
        }
    }
}

impl SomConfig {
    pub fn rows_for(&self, dim: usize) -> usize {
        self.grid_rows.unwrap_or_else(|| square_grid_rows(dim))
    }

    /// Checks the pipeline-level constraints: `0 < a < 1`, `k >= 1` and a
    /// row count dividing `dim`.
    pub fn validate(&self, dim: usize) -> Result<(), SomError> {
        if !(self.learning_rate > 0.0 && self.learning_rate < 1.0) {
            return Err(SomError::InvalidConfig(format!(
                "learning rate {} must lie in (0, 1)",
                self.learning_rate
            )));
        }
        if self.k_neighbors < 1 {
            return Err(SomError::InvalidConfig(
                "k_neighbors must be at least 1".into(),
            ));
        }
        let rows = self.rows_for(dim);
        if rows == 0 || !dim.is_multiple_of(rows) {
            return Err(SomError::GridShape { dim, rows });
        }
        Ok(())
    }
}

/// The `k` words closest to `word` in Euclidean distance, nearest first,
/// ties broken by word. `word` itself is excluded.
pub fn nearest_vocab(
    word: &str,
    all_fused: &EmbeddingTable,
    k: usize,
) -> Result<Vec<String>, SomError> {
    let center = all_fused
        .lookup(word)
        .ok_or_else(|| SomError::UnknownWord(word.to_owned()))?;
    if all_fused.len() < k + 1 {
        return Err(SomError::VocabularyTooSmall {
            size: all_fused.len(),
            k,
        });
    }
    let mut dists: Vec<(f64, &str)> = all_fused
        .iter()
        .filter(|(w, _)| *w != word)
        .map(|(w, v)| (center.distance_sq(v), w))
        .collect();
    let order = |a: &(f64, &str), b: &(f64, &str)| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1));
    if k < dists.len() {
        dists.select_nth_unstable_by(k, order);
        dists.truncate(k);
    }
    dists.sort_by(order);
    Ok(dists.into_iter().map(|(_, w)| w.to_owned()).collect())
}

/// Iterative Kohonen update of `center` toward each neighbor in turn.
///
/// The learning rate may be anywhere in `[0, 1]` here; `0` (or no
/// neighbors, or zero iterations) leaves the center untouched.
pub fn refine_word(
    center: &Grid2D,
    neighbors: &[Grid2D],
    cfg: &SomConfig,
) -> Result<Grid2D, SomError> {
    let a = cfg.learning_rate;
    if !(0.0..=1.0).contains(&a) {
        return Err(SomError::LearningRate(a));
    }
    for n in neighbors {
        if n.shape() != center.shape() {
            return Err(SomError::ShapeMismatch {
                expected: center.shape(),
                found: n.shape(),
            });
        }
    }
    let mut out = center.clone();
    if neighbors.is_empty() || a == 0.0 {
        return Ok(out);
    }
    for _ in 0..cfg.iterations {
        for n in neighbors {
            for (c, x) in out.cells.iter_mut().zip(&n.cells) {
                *c += a * (x - *c);
            }
        }
    }
    Ok(out)
}

/// Refines every word of `all_fused` against its nearest neighbors in the
/// unrefined snapshot. `parallel` fans the words out over the rayon pool;
/// the output is bit-identical either way.
pub fn refine_vocabulary(
    all_fused: &EmbeddingTable,
    cfg: &SomConfig,
    parallel: bool,
) -> Result<EmbeddingTable, SomError> {
    let dim = all_fused.dim();
    let rows = cfg.rows_for(dim);
    if all_fused.len() < cfg.k_neighbors + 1 {
        return Err(SomError::VocabularyTooSmall {
            size: all_fused.len(),
            k: cfg.k_neighbors,
        });
    }

    let refine_one = |(word, v): (&str, &Vector)| -> Result<(String, Vector), SomError> {
        let near = nearest_vocab(word, all_fused, cfg.k_neighbors)?;
        let center = reshape(v, rows)?;
        let grids = near
            .iter()
            .map(|w| reshape(all_fused.lookup(w).expect("neighbor from snapshot"), rows))
            .collect::<Result<Vec<_>, _>>()?;
        let refined = refine_word(&center, &grids, cfg)?;
        Ok((word.to_owned(), refined.flatten()))
    };

    let words: Vec<(&str, &Vector)> = all_fused.iter().collect();
    let refined: Vec<(String, Vector)> = if parallel {
        words
            .into_par_iter()
            .map(refine_one)
            .collect::<Result<_, _>>()?
    } else {
        words
            .into_iter()
            .map(refine_one)
            .collect::<Result<_, _>>()?
    };
    Ok(EmbeddingTable::from_entries(dim, refined).expect("refinement preserves shape"))
}
