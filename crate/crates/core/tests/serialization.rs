mod common;

use scholarlens::extraction::{self, ScholarRecord};
use scholarlens::query::{federate_search, SearchRequest};
use scholarlens::serialize::{parse_json, parse_xml, to_json, to_table, to_xml, OutputFormat, ResultView};
use scholarlens::sources::FetchContext;

/// Set `UPDATE_GOLDEN=1` to rewrite golden files instead of comparing.
fn golden(name: &str, actual: &[u8]) {
    let path = common::root().join("fixtures/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read(&path).unwrap();
    assert!(
        expected == actual,
        "{name} differs from golden:\n{}",
        String::from_utf8_lossy(actual)
    );
}

#[test]
fn round_trip_whole_corpus() {
    let o = common::ontology();
    let reg = common::registry();
    for q in common::QUERIES {
        for depth in [0, 1, 2] {
            let mut req = SearchRequest::new(q);
            req.depth = depth;
            req.limit = 1000;
            let rs = federate_search(&req, &o, &reg, &FetchContext::default()).unwrap();
            let expected = ResultView::of(&rs);

            let json = parse_json(&to_json(&rs)).unwrap();
            assert_eq!(json, expected, "{q}");
            let xml = parse_xml(&to_xml(&rs)).unwrap();
            assert_eq!(xml, expected.clone().shared(), "{q}");

            let table = to_table(&rs, &["record_id", "source", "year"], 80).unwrap();
            let rows: Vec<Vec<&str>> = table
                .lines()
                .skip(1)
                .map(|l| l.split(" | ").map(str::trim).collect())
                .collect();
            assert_eq!(rows.len(), json.records.len());
            for (row, r) in rows.iter().zip(&json.records) {
                assert_eq!(row[0], r.record_id);
                assert_eq!(row[1], r.source);
                assert_eq!(row[2], r.year.map(|y| y.to_string()).unwrap_or_default());
            }
        }
    }
}

#[test]
fn plain_record_lists_round_trip() {
    let corpus = common::corpus();
    let all: Vec<ScholarRecord> = corpus.into_iter().flat_map(|(_, rs)| rs).collect();
    let json = parse_json(&extraction::render(&all, OutputFormat::Json)).unwrap();
    let xml = parse_xml(&extraction::render(&all, OutputFormat::Xml)).unwrap();
    let back: Vec<ScholarRecord> = json.records.iter().map(|r| r.record()).collect();
    assert_eq!(back, all);
    assert_eq!(json.shared(), xml);
}

#[test]
fn golden_reverse_engineering() {
    let o = common::ontology();
    let reg = common::registry();
    let rs = federate_search(&SearchRequest::new("Reverse Engineering"), &o, &reg, &FetchContext::default()).unwrap();
    let mut json = to_json(&rs);
    json.push(b'\n');
    golden("reverse_engineering.json", &json);
    golden("reverse_engineering.xml", &to_xml(&rs));
}

#[test]
fn golden_table() {
    let r = ScholarRecord::new(
        "fixture_corpus",
        "Data mining with big data",
        "Big Data concern large-volume, complex, growing data sets.",
    );
    golden("one_record.table", &extraction::render(&[r], OutputFormat::Table));
}
