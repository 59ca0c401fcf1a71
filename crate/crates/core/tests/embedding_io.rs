use std::io::Cursor;
use std::path::PathBuf;

use proptest::prelude::*;
use wordfuse::embedding::{EmbeddingError, EmbeddingTable, Vector};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

#[test]
fn fixture_table_loads_fifty_words() {
    let (table, report) = EmbeddingTable::load_file(fixture("fixture_vectors.txt")).unwrap();
    assert_eq!(table.len(), 50);
    assert_eq!(table.dim(), 10);
    assert_eq!(report.declared_count, 50);
    assert_eq!(report.rows_read, 50);
    assert_eq!(report.duplicates, 0);
    for w in ["dog", "king", "queen", "bathroom", "hallway", "where"] {
        assert!(table.contains(w), "{w} missing");
    }
}

#[test]
fn fixture_save_load_is_identity() {
    let (table, _) = EmbeddingTable::load_file(fixture("fixture_vectors.txt")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("copy.txt");
    table.save_file(&path).unwrap();
    let (again, _) = EmbeddingTable::load_file(&path).unwrap();
    assert_eq!(table, again);
    assert_eq!(table.to_text_bytes(), again.to_text_bytes());
}

#[test]
fn header_only_file_is_empty_table() {
    let (table, report) = EmbeddingTable::load_text(Cursor::new("0 7\n")).unwrap();
    assert!(table.is_empty());
    assert_eq!(table.dim(), 7);
    assert_eq!(report.rows_read, 0);
}

#[test]
fn short_row_names_the_line() {
    let err = EmbeddingTable::load_text(Cursor::new("2 3\na 1 2 3\nb 1 2\n")).unwrap_err();
    match err {
        EmbeddingError::Arity {
            line,
            expected,
            found,
        } => {
            assert_eq!((line, expected, found), (3, 3, 2));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn non_numeric_field_is_rejected() {
    let err = EmbeddingTable::load_text(Cursor::new("1 2\na 1 x\n")).unwrap_err();
    assert!(
        matches!(err, EmbeddingError::NonNumeric { line: 2, .. }),
        "{err:?}"
    );
}

#[test]
fn bad_header_is_rejected() {
    assert!(matches!(
        EmbeddingTable::load_text(Cursor::new("hello\n")),
        Err(EmbeddingError::MalformedHeader { .. })
    ));
    assert!(EmbeddingTable::load_text(Cursor::new("3 0\n")).is_err());
}

#[test]
fn cosine_neighbors_of_stored_word_start_with_itself() {
    let (table, _) = EmbeddingTable::load_file(fixture("fixture_vectors.txt")).unwrap();
    let q = table.lookup("dog").unwrap().clone();
    let top = table.cosine_neighbors(&q, 3).unwrap();
    assert_eq!(top.len(), 3);
    assert_eq!(top[0].0, "dog");
    assert!((top[0].1 - 1.0).abs() < 1e-12);
    assert!(top[0].1 >= top[1].1 && top[1].1 >= top[2].1);
}

fn word_strategy() -> impl Strategy<Value = String> {
    "[a-z][a-z_]{0,8}"
}

proptest! {
    #[test]
    fn save_load_roundtrip(
        dim in 1usize..6,
        rows in proptest::collection::btree_map(word_strategy(), proptest::collection::vec(-1e6f64..1e6, 6), 0..12),
    ) {
        let entries = rows
            .into_iter()
            .map(|(w, xs)| (w, Vector::new(xs[..dim].to_vec()).unwrap()));
        let table = EmbeddingTable::from_entries(dim, entries).unwrap();
        let bytes = table.to_text_bytes();
        let (again, report) = EmbeddingTable::load_text(Cursor::new(bytes)).unwrap();
        prop_assert_eq!(report.rows_read, table.len());
        prop_assert_eq!(again, table);
    }

    #[test]
    fn cosine_ranking_ignores_query_scale(
        xs in proptest::collection::vec(-10.0f64..10.0, 4),
        s in 0.01f64..100.0,
    ) {
        prop_assume!(xs.iter().any(|x| x.abs() > 1e-3));
        let (table, _) = EmbeddingTable::load_file(fixture("fixture_vectors.txt")).unwrap();
        let mut q = xs.clone();
        q.extend_from_slice(&[0.5; 6]);
        let a = table.cosine_neighbors(&Vector::new(q.clone()).unwrap(), 5).unwrap();
        let scaled: Vec<f64> = q.iter().map(|x| x * s).collect();
        let b = table.cosine_neighbors(&Vector::new(scaled).unwrap(), 5).unwrap();
        let wa: Vec<_> = a.iter().map(|p| p.0.clone()).collect();
        let wb: Vec<_> = b.iter().map(|p| p.0.clone()).collect();
        prop_assert_eq!(wa, wb);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x.1 - y.1).abs() < 1e-12);
        }
    }
}
