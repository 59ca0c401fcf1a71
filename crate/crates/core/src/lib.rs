//! Word embeddings enriched with ConceptNet knowledge.
//!
//! Each word's pretrained vector is fused with the vectors of its
//! ConceptNet-related words ([`combiner`]), refined by a Kohonen update
//! toward its nearest vocabulary neighbors ([`som`]) and projected with
//! PCA ([`pca`]). [`eval`] scores the result on SimLex-style word-pair
//! ratings and [`pipeline`] ties the stages together.

pub mod combiner;
pub mod conceptnet;
pub mod embedding;
pub mod eval;
pub mod pca;
pub mod pipeline;
pub mod som;

pub use embedding::{EmbeddingTable, Vector};
