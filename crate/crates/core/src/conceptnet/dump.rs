//! Streaming reader for the ConceptNet assertions TSV dump.
//!
//! Each line carries five tab-separated fields: edge URI, relation URI
//! (`/r/<Rel>`), start URI (`/c/<lang>/<term>[/...]`), end URI and a JSON
//! metadata object with a numeric `weight`.

use std::io::BufRead;

use serde::Serialize;

use super::{normalize_term, ConceptEdge};

/// A line that could not be turned into an edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

/// Everything a full pass over a dump produced.
#[derive(Debug, Clone, Default)]
pub struct ParsedDump {
    pub edges: Vec<ConceptEdge>,
    /// Well-formed lines dropped because an endpoint is in another language.
    pub skipped: usize,
    pub errors: Vec<LineError>,
}

/// Iterator over the edges of a dump whose endpoints are both in `language`.
///
/// Malformed lines never end iteration; they are collected and available
/// through [`errors`](Self::errors) once the stream is drained.
pub struct DumpEdges<R> {
    lines: std::io::Lines<R>,
    language: String,
    line_no: usize,
    skipped: usize,
    errors: Vec<LineError>,
}

impl<R: BufRead> DumpEdges<R> {
    pub fn new(reader: R, language: &str) -> Self {
        DumpEdges {
            lines: reader.lines(),
            language: language.to_owned(),
            line_no: 0,
            skipped: 0,
            errors: Vec::new(),
        }
    }

    pub fn errors(&self) -> &[LineError] {
        &self.errors
    }

    pub fn skipped(&self) -> usize {
        self.skipped
    }

    fn fail(&mut self, message: impl Into<String>) {
        self.errors.push(LineError {
            line: self.line_no,
            message: message.into(),
        });
    }
}

impl<R: BufRead> Iterator for DumpEdges<R> {
    type Item = ConceptEdge;

    fn next(&mut self) -> Option<ConceptEdge> {
        loop {
            let line = self.lines.next()?;
            self.line_no += 1;
            let line = match line {
                Ok(l) => l,
                Err(e) => {
                    self.fail(format!("read error: {e}"));
                    continue;
                }
            };
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            match parse_line(line, &self.language) {
                Ok(Some(edge)) => return Some(edge),
                Ok(None) => self.skipped += 1,
                Err(msg) => self.fail(msg),
            }
        }
    }
}

/// Reads a whole dump, keeping only `language`-to-`language` edges.
pub fn parse_dump<R: BufRead>(reader: R, language: &str) -> ParsedDump {
    let mut stream = DumpEdges::new(reader, language);
    let edges: Vec<ConceptEdge> = stream.by_ref().collect();
    ParsedDump {
        edges,
        skipped: stream.skipped,
        errors: stream.errors,
    }
}

/// Splits `/c/<lang>/<term>[/...]` into language and raw term.
fn concept_parts(uri: &str) -> Result<(&str, &str), String> {
    let rest = uri
        .strip_prefix("/c/")
        .ok_or_else(|| format!("not a concept URI: {uri:?}"))?;
    let mut segs = rest.split('/');
    let lang = segs.next().unwrap_or_default();
    let term = segs.next().unwrap_or_default();
    if lang.is_empty() || term.is_empty() {
        return Err(format!("incomplete concept URI: {uri:?}"));
    }
    Ok((lang, term))
}

fn parse_line(line: &str, language: &str) -> Result<Option<ConceptEdge>, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 5 {
        return Err(format!(
            "expected 5 tab-separated fields, found {}",
            fields.len()
        ));
    }
    let relation = fields[1]
        .strip_prefix("/r/")
        .filter(|r| !r.is_empty())
        .ok_or_else(|| format!("not a relation URI: {:?}", fields[1]))?;
    let (start_lang, start_raw) = concept_parts(fields[2])?;
    let (end_lang, end_raw) = concept_parts(fields[3])?;
    if start_lang != language || end_lang != language {
        return Ok(None);
    }

    let meta: serde_json::Value =
        serde_json::from_str(fields[4]).map_err(|e| format!("bad metadata JSON: {e}"))?;
    let weight = meta
        .get("weight")
        .and_then(serde_json::Value::as_f64)
        .ok_or("metadata has no numeric \"weight\"")?;
    if !weight.is_finite() || weight < 0.0 {
        return Err(format!("invalid weight {weight}"));
    }

    let start_term = normalize_term(start_raw).map_err(|e| e.to_string())?;
    let end_term = normalize_term(end_raw).map_err(|e| e.to_string())?;
    Ok(Some(ConceptEdge {
        relation: relation.to_owned(),
        start_term,
        end_term,
        weight,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(rel: &str, s: &str, e: &str, meta: &str) -> String {
        format!("/a/[{rel}/,{s}/,{e}/]\t{rel}\t{s}\t{e}\t{meta}")
    }

    #[test]
    fn conforming_line() {
        let l = line(
            "/r/RelatedTo",
            "/c/en/dog",
            "/c/en/puppy",
            r#"{"weight": 2.0}"#,
        );
        let parsed = parse_dump(l.as_bytes(), "en");
        assert_eq!(
            parsed.edges,
            vec![ConceptEdge {
                relation: "RelatedTo".into(),
                start_term: "dog".into(),
                end_term: "puppy".into(),
                weight: 2.0,
            }]
        );
        assert!(parsed.errors.is_empty());
    }

    #[test]
    fn foreign_endpoint_is_skipped() {
        let l = line(
            "/r/Synonym",
            "/c/fr/chien",
            "/c/en/dog",
            r#"{"weight": 1.0}"#,
        );
        let parsed = parse_dump(l.as_bytes(), "en");
        assert!(parsed.edges.is_empty());
        assert_eq!(parsed.skipped, 1);
        assert!(parsed.errors.is_empty());
    }

    #[test]
    fn malformed_lines_are_reported_and_stream_continues() {
        let text = [
            line("/r/IsA", "/c/en/dog", "/c/en/animal", r#"{"weight": 3"#),
            line("/r/IsA", "/c/en/cat/n", "/c/en/animal", r#"{"weight": 3}"#),
            "only\tthree\tfields".to_owned(),
            line("/r/IsA", "/c/en/cow", "/c/en/animal", r#"{"dataset": "x"}"#),
            line("/r/IsA", "/c/en/cow", "/c/en/animal", r#"{"weight": -1}"#),
            line("IsA", "/c/en/cow", "/c/en/animal", r#"{"weight": 1}"#),
        ]
        .join("\n");
        let parsed = parse_dump(text.as_bytes(), "en");
        assert_eq!(parsed.edges.len(), 1);
        assert_eq!(parsed.edges[0].start_term, "cat");
        let lines: Vec<usize> = parsed.errors.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![1, 3, 4, 5, 6]);
    }

    #[test]
    fn terms_are_normalized() {
        let l = line(
            "/r/RelatedTo",
            "/c/en/New_York/n",
            "/c/en/City",
            r#"{"weight": 1}"#,
        );
        let parsed = parse_dump(l.as_bytes(), "en");
        assert_eq!(parsed.edges[0].start_term, "new_york");
        assert_eq!(parsed.edges[0].end_term, "city");
    }

    #[test]
    fn iterator_exposes_errors_after_draining() {
        let text = format!(
            "{}\nbroken\n",
            line("/r/IsA", "/c/en/a", "/c/en/b", r#"{"weight": 1}"#)
        );
        let mut it = DumpEdges::new(text.as_bytes(), "en");
        assert_eq!(it.by_ref().count(), 1);
        assert_eq!(it.errors().len(), 1);
        assert_eq!(it.errors()[0].line, 2);
    }
}
