//! ConceptNet-related words for a term, from an offline assertions dump or
//! the public REST API.

mod api;
mod dump;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

pub use api::{parse_api_response, ApiClient, ApiClientBuilder, FetchError, DEFAULT_ENDPOINT};
pub use dump::{parse_dump, DumpEdges, LineError, ParsedDump};

/// Hard cap on related words per term.
pub const DEFAULT_NEIGHBOR_CAP: usize = 20;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("term is empty or whitespace-only")]
pub struct EmptyTerm;

/// Lowercases, trims, and joins internal whitespace runs with `_`,
/// following the ConceptNet URI convention.
pub fn normalize_term(raw: &str) -> Result<String, EmptyTerm> {
    let parts: Vec<&str> = raw.split_whitespace().collect();
    if parts.is_empty() {
        return Err(EmptyTerm);
    }
    Ok(parts.join("_").to_lowercase())
}

/// One weighted, labelled assertion between two English terms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConceptEdge {
    pub relation: String,
    pub start_term: String,
    pub end_term: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Neighbor {
    pub term: String,
    pub relation: String,
    pub weight: f64,
}

/// The related words of `word`, strongest first.
///
/// Each term appears once, carrying the heaviest edge that links it to
/// `word` (equal weights resolve to the lexicographically smaller relation).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborSet {
    pub word: String,
    pub neighbors: Vec<Neighbor>,
}

impl NeighborSet {
    pub fn empty(word: impl Into<String>) -> Self {
        NeighborSet {
            word: word.into(),
            neighbors: Vec::new(),
        }
    }

    /// Collects the terms adjacent to `word` over `edges`, in either direction.
    pub fn from_edges<'a, I>(
        word: &str,
        edges: I,
        cap: usize,
        relation_filter: Option<&BTreeSet<String>>,
    ) -> Self
    where
        I: IntoIterator<Item = &'a ConceptEdge>,
    {
        let mut best: BTreeMap<&str, (f64, &str)> = BTreeMap::new();
        for edge in edges {
            if let Some(filter) = relation_filter {
                if !filter.contains(&edge.relation) {
                    continue;
                }
            }
            let other = if edge.start_term == word {
                edge.end_term.as_str()
            } else if edge.end_term == word {
                edge.start_term.as_str()
            } else {
                continue;
            };
            if other == word {
                continue;
            }
            let candidate = (edge.weight, edge.relation.as_str());
            best.entry(other)
                .and_modify(|cur| {
                    if candidate.0 > cur.0 || (candidate.0 == cur.0 && candidate.1 < cur.1) {
                        *cur = candidate;
                    }
                })
                .or_insert(candidate);
        }
        let mut neighbors: Vec<Neighbor> = best
            .into_iter()
            .map(|(term, (weight, relation))| Neighbor {
                term: term.to_owned(),
                relation: relation.to_owned(),
                weight,
            })
            .collect();
        neighbors.sort_by(|a, b| {
            b.weight
                .total_cmp(&a.weight)
                .then_with(|| a.term.cmp(&b.term))
        });
        neighbors.truncate(cap);
        NeighborSet {
            word: word.to_owned(),
            neighbors,
        }
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.neighbors.iter().map(|n| n.term.as_str())
    }

    /// Plain-text listing, one `term<TAB>relation<TAB>weight` line per neighbor.
    pub fn render(&self) -> String {
        let mut out = format!("{}: {} neighbors\n", self.word, self.neighbors.len());
        for n in &self.neighbors {
            out.push_str(&format!("{}\t{}\t{}\n", n.term, n.relation, n.weight));
        }
        out
    }
}

/// Related words of `word` over a plain edge list.
pub fn neighbors<'a, I>(
    word: &str,
    edges: I,
    cap: usize,
    relation_filter: Option<&BTreeSet<String>>,
) -> NeighborSet
where
    I: IntoIterator<Item = &'a ConceptEdge>,
{
    NeighborSet::from_edges(word, edges, cap, relation_filter)
}

/// Edges indexed by endpoint for repeated neighbor queries.
#[derive(Debug, Clone, Default)]
pub struct ConceptGraph {
    edges: Vec<ConceptEdge>,
    by_term: HashMap<String, Vec<usize>>,
}

impl ConceptGraph {
    pub fn new(edges: Vec<ConceptEdge>) -> Self {
        let mut by_term: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, e) in edges.iter().enumerate() {
            by_term.entry(e.start_term.clone()).or_default().push(i);
            if e.end_term != e.start_term {
                by_term.entry(e.end_term.clone()).or_default().push(i);
            }
        }
        ConceptGraph { edges, by_term }
    }

    pub fn edges(&self) -> &[ConceptEdge] {
        &self.edges
    }

    pub fn contains_term(&self, term: &str) -> bool {
        self.by_term.contains_key(term)
    }

    pub fn neighbors(
        &self,
        word: &str,
        cap: usize,
        relation_filter: Option<&BTreeSet<String>>,
    ) -> NeighborSet {
        match self.by_term.get(word) {
            Some(ids) => NeighborSet::from_edges(
                word,
                ids.iter().map(|&i| &self.edges[i]),
                cap,
                relation_filter,
            ),
            None => NeighborSet::empty(word),
        }
    }
}
