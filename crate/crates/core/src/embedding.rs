//! Pretrained word-vector tables in the word2vec text format.
//!
//! The format is a header line `<count> <dim>` followed by one row per word,
//! `<word> <f1> ... <f_dim>`. Words are case-sensitive and matched exactly.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

/// Errors produced while building, reading or querying embedding tables.
#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("malformed header {header:?}: expected \"<count> <dim>\"")]
    MalformedHeader { header: String },
    #[error("dimension must be at least 1")]
    InvalidDimension,
    #[error("line {line}: expected {expected} values, found {found}")]
    Arity {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: non-numeric or non-finite value {field:?}")]
    NonNumeric { line: usize, field: String },
    #[error("invalid word token {0:?}")]
    InvalidWord(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("query vector has zero norm")]
    ZeroQuery,
    #[error("k must be at least 1")]
    InvalidK,
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error, PartialEq)]
pub enum VectorError {
    #[error("vector must have at least one entry")]
    Empty,
    #[error("entry {index} is not finite")]
    NonFinite { index: usize },
}

/// A dense, finite, non-empty word vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(values: Vec<f64>) -> Result<Self, VectorError> {
        if values.is_empty() {
            return Err(VectorError::Empty);
        }
        if let Some(index) = values.iter().position(|x| !x.is_finite()) {
            return Err(VectorError::NonFinite { index });
        }
        Ok(Vector(values))
    }

    pub fn zeros(dim: usize) -> Result<Self, VectorError> {
        Vector::new(vec![0.0; dim])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    /// Squared Euclidean distance.
    pub fn distance_sq(&self, other: &Vector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn distance(&self, other: &Vector) -> f64 {
        self.distance_sq(other).sqrt()
    }
}

impl AsRef<[f64]> for Vector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// What happened while loading a table, beyond the table itself.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    /// Word count announced in the header.
    pub declared_count: usize,
    /// Data rows actually read.
    pub rows_read: usize,
    /// Rows whose word had already been seen; the later row replaced the earlier one.
    pub duplicates: usize,
}

/// An immutable word -> vector map with one shared dimension.
///
/// Entries are kept in lexicographic word order, which is also the order
/// used when the table is written out.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    entries: BTreeMap<String, Vector>,
}

fn valid_word(word: &str) -> bool {
    !word.is_empty() && !word.chars().any(char::is_whitespace)
}

impl EmbeddingTable {
    /// Builds a table from `(word, vector)` pairs. Later duplicates win.
    pub fn from_entries<I>(dim: usize, entries: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (String, Vector)>,
    {
        if dim < 1 {
            return Err(EmbeddingError::InvalidDimension);
        }
        let mut map = BTreeMap::new();
        for (word, vector) in entries {
            if !valid_word(&word) {
                return Err(EmbeddingError::InvalidWord(word));
            }
            if vector.dim() != dim {
                return Err(EmbeddingError::DimensionMismatch {
                    expected: dim,
                    found: vector.dim(),
                });
            }
            map.insert(word, vector);
        }
        Ok(EmbeddingTable { dim, entries: map })
    }

    pub fn empty(dim: usize) -> Result<Self, EmbeddingError> {
        Self::from_entries(dim, std::iter::empty())
    }

    /// Parses a word2vec text stream.
    ///
    /// Blank lines and a trailing `\r` are tolerated. A row count that
    /// disagrees with the header is not an error; it is visible in the
    /// returned [`LoadReport`].
    pub fn load_text<R: BufRead>(reader: R) -> Result<(Self, LoadReport), EmbeddingError> {
        let mut lines = reader.lines();
        let header = match lines.next() {
            Some(line) => line?,
            None => {
                return Err(EmbeddingError::MalformedHeader {
                    header: String::new(),
                })
            }
        };
        let (declared_count, dim) = parse_header(&header)?;

        let mut report = LoadReport {
            declared_count,
            ..LoadReport::default()
        };
        let mut entries = BTreeMap::new();
        for (idx, line) in lines.enumerate() {
            let line_no = idx + 2;
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            // Non-empty after trim, so there is at least one field.
            let word = fields.next().unwrap_or_default();
            let mut values = Vec::with_capacity(dim);
            for field in fields {
                let value: f64 = field.parse().map_err(|_| EmbeddingError::NonNumeric {
                    line: line_no,
                    field: field.to_owned(),
                })?;
                if !value.is_finite() {
                    return Err(EmbeddingError::NonNumeric {
                        line: line_no,
                        field: field.to_owned(),
                    });
                }
                values.push(value);
            }
            if values.len() != dim {
                return Err(EmbeddingError::Arity {
                    line: line_no,
                    expected: dim,
                    found: values.len(),
                });
            }
            report.rows_read += 1;
            if entries.insert(word.to_owned(), Vector(values)).is_some() {
                report.duplicates += 1;
            }
        }
        Ok((EmbeddingTable { dim, entries }, report))
    }

    pub fn load_file(path: impl AsRef<Path>) -> Result<(Self, LoadReport), EmbeddingError> {
        let file = File::open(path)?;
        Self::load_text(BufReader::new(file))
    }

    /// Writes the table in word2vec text format, words in lexicographic order,
    /// floats in shortest round-trip form.
    pub fn save_text<W: Write>(&self, mut writer: W) -> Result<(), EmbeddingError> {
        writeln!(writer, "{} {}", self.entries.len(), self.dim)?;
        for (word, vector) in &self.entries {
            writer.write_all(word.as_bytes())?;
            for value in vector.as_slice() {
                write!(writer, " {}", value)?;
            }
            writer.write_all(b"\n")?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn save_file(&self, path: impl AsRef<Path>) -> Result<(), EmbeddingError> {
        let file = File::create(path)?;
        self.save_text(BufWriter::new(file))
    }

    /// Serialized bytes of [`save_text`](Self::save_text).
    pub fn to_text_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        // Writing into a Vec cannot fail.
        self.save_text(&mut buf).expect("in-memory write");
        buf
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Exact, case-sensitive lookup. Absent words yield `None`.
    pub fn lookup(&self, word: &str) -> Option<&Vector> {
        self.entries.get(word)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Vector)> {
        self.entries.iter().map(|(w, v)| (w.as_str(), v))
    }

    /// Top-`k` stored words by cosine similarity to `query`, descending,
    /// ties broken by word. Zero-norm stored vectors are never returned.
    pub fn cosine_neighbors(
        &self,
        query: &Vector,
        k: usize,
    ) -> Result<Vec<(String, f64)>, EmbeddingError> {
        if k < 1 {
            return Err(EmbeddingError::InvalidK);
        }
        if query.dim() != self.dim {
            return Err(EmbeddingError::DimensionMismatch {
                expected: self.dim,
                found: query.dim(),
            });
        }
        let query_norm = query.norm();
        if query_norm == 0.0 {
            return Err(EmbeddingError::ZeroQuery);
        }
        let mut scored: Vec<(&str, f64)> = self
            .entries
            .iter()
            .filter_map(|(word, v)| {
                let norm = v.norm();
                (norm > 0.0).then(|| {
                    let sim = (query.dot(v) / (query_norm * norm)).clamp(-1.0, 1.0);
                    (word.as_str(), sim)
                })
            })
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        scored.truncate(k);
        Ok(scored.into_iter().map(|(w, s)| (w.to_owned(), s)).collect())
    }
}

fn parse_header(header: &str) -> Result<(usize, usize), EmbeddingError> {
    let malformed = || EmbeddingError::MalformedHeader {
        header: header.to_owned(),
    };
    let mut parts = header.split_whitespace();
    let count = parts
        .next()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(malformed)?;
    let dim = parts
        .next()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(malformed)?;
    if parts.next().is_some() {
        return Err(malformed());
    }
    if dim < 1 {
        return Err(EmbeddingError::InvalidDimension);
    }
    Ok((count, dim))
}

#[cfg(test)]
mod tests {
    use super::*;

    const KING_QUEEN: &str = "2 3\nking 0.1 0.2 0.3\nqueen 0.2 0.2 0.4\n";

    fn load(s: &str) -> Result<(EmbeddingTable, LoadReport), EmbeddingError> {
        EmbeddingTable::load_text(s.as_bytes())
    }

    fn v(xs: &[f64]) -> Vector {
        Vector::new(xs.to_vec()).unwrap()
    }

    #[test]
    fn loads_minimal_table() {
        let (table, report) = load(KING_QUEEN).unwrap();
        assert_eq!(table.len(), 2);
        assert_eq!(table.dim(), 3);
        assert_eq!(report.duplicates, 0);
        assert_eq!(table.lookup("king").unwrap().as_slice(), &[0.1, 0.2, 0.3]);
    }

    #[test]
    fn empty_body() {
        let (table, _) = load("0 3\n").unwrap();
        assert!(table.is_empty());
        assert_eq!(table.dim(), 3);
    }

    #[test]
    fn arity_error_names_line() {
        let err = load("2 3\nking 0.1 0.2 0.3\nqueen 0.2 0.2\n").unwrap_err();
        match err {
            EmbeddingError::Arity {
                line,
                expected,
                found,
            } => assert_eq!((line, expected, found), (3, 3, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_and_value_errors() {
        assert!(matches!(
            load("two 3\n"),
            Err(EmbeddingError::MalformedHeader { .. })
        ));
        assert!(matches!(
            load(""),
            Err(EmbeddingError::MalformedHeader { .. })
        ));
        assert!(matches!(
            load("1 0\n"),
            Err(EmbeddingError::InvalidDimension)
        ));
        assert!(matches!(
            load("1 2\nw 1.0 abc\n"),
            Err(EmbeddingError::NonNumeric { line: 2, .. })
        ));
        assert!(matches!(
            load("1 2\nw 1.0 NaN\n"),
            Err(EmbeddingError::NonNumeric { line: 2, .. })
        ));
    }

    #[test]
    fn duplicates_last_wins() {
        let (table, report) = load("2 1\nw 1\nw 2\n").unwrap();
        assert_eq!(report.duplicates, 1);
        assert_eq!(table.lookup("w").unwrap().as_slice(), &[2.0]);
    }

    #[test]
    fn save_formats_shortest_roundtrip() {
        let table = EmbeddingTable::from_entries(2, [("w".to_owned(), v(&[1.0, -0.5]))]).unwrap();
        let text = String::from_utf8(table.to_text_bytes()).unwrap();
        assert_eq!(text, "1 2\nw 1 -0.5\n");
        assert_eq!(load(&text).unwrap().0, table);
    }

    #[test]
    fn save_empty_table() {
        let table = EmbeddingTable::empty(4).unwrap();
        assert_eq!(table.to_text_bytes(), b"0 4\n");
    }

    #[test]
    fn save_then_load_is_identity() {
        let (table, _) = load(KING_QUEEN).unwrap();
        let (again, _) = load(std::str::from_utf8(&table.to_text_bytes()).unwrap()).unwrap();
        assert_eq!(table, again);
    }

    #[test]
    fn lookup_is_exact() {
        let (table, _) = load(KING_QUEEN).unwrap();
        assert!(table.lookup("KING").is_none());
        assert!(table.lookup("zzz").is_none());
    }

    #[test]
    fn cosine_self_and_orthogonal() {
        let (table, _) = load(KING_QUEEN).unwrap();
        let king = table.lookup("king").unwrap().clone();
        let top = table.cosine_neighbors(&king, 1).unwrap();
        assert_eq!(top[0].0, "king");
        assert!((top[0].1 - 1.0).abs() < 1e-12);

        let single = EmbeddingTable::from_entries(2, [("x".to_owned(), v(&[1.0, 0.0]))]).unwrap();
        let res = single.cosine_neighbors(&v(&[0.0, 3.0]), 5).unwrap();
        assert_eq!(res, vec![("x".to_owned(), 0.0)]);
    }

    #[test]
    fn cosine_errors() {
        let (table, _) = load(KING_QUEEN).unwrap();
        assert!(matches!(
            table.cosine_neighbors(&v(&[1.0, 0.0]), 1),
            Err(EmbeddingError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            table.cosine_neighbors(&v(&[0.0, 0.0, 0.0]), 1),
            Err(EmbeddingError::ZeroQuery)
        ));
        assert!(matches!(
            table.cosine_neighbors(&v(&[1.0, 0.0, 0.0]), 0),
            Err(EmbeddingError::InvalidK)
        ));
    }

    #[test]
    fn cosine_ties_are_lexicographic() {
        let table = EmbeddingTable::from_entries(
            2,
            [
                ("b".to_owned(), v(&[1.0, 0.0])),
                ("a".to_owned(), v(&[2.0, 0.0])),
                ("c".to_owned(), v(&[0.0, 1.0])),
            ],
        )
        .unwrap();
        let res = table.cosine_neighbors(&v(&[1.0, 0.0]), 2).unwrap();
        assert_eq!(res[0].0, "a");
        assert_eq!(res[1].0, "b");
    }

    #[test]
    fn vector_rejects_non_finite() {
        assert_eq!(Vector::new(vec![]), Err(VectorError::Empty));
        assert_eq!(
            Vector::new(vec![1.0, f64::INFINITY]),
            Err(VectorError::NonFinite { index: 1 })
        );
    }

    #[test]
    fn from_entries_validates() {
        assert!(matches!(
            EmbeddingTable::from_entries(2, [("a b".to_owned(), v(&[1.0, 2.0]))]),
            Err(EmbeddingError::InvalidWord(_))
        ));
        assert!(matches!(
            EmbeddingTable::from_entries(3, [("a".to_owned(), v(&[1.0, 2.0]))]),
            Err(EmbeddingError::DimensionMismatch { .. })
        ));
    }
}
