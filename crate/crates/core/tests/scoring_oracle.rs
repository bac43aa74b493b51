mod common;

use std::collections::BTreeMap;

use scholarlens::extraction::ScholarRecord;
use scholarlens::ontology::ExpandedQuery;
use scholarlens::query::{score_record, seed_terms};

fn lower_collapsed(s: &str) -> String {
    s.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Lists every start where the phrase occurs with no word character touching
/// either end, then keeps a leftmost set of non-overlapping hits.
fn naive_count(text: &str, phrase: &str) -> usize {
    let hay: Vec<char> = lower_collapsed(text).chars().collect();
    let needle: Vec<char> = phrase.chars().collect();
    if needle.is_empty() || needle.len() > hay.len() {
        return 0;
    }
    let word = |i: usize| hay.get(i).is_some_and(|c| c.is_alphanumeric());
    let starts: Vec<usize> = (0..=hay.len() - needle.len())
        .filter(|&i| hay[i..i + needle.len()] == needle[..])
        .filter(|&i| (i == 0 || !word(i - 1)) && !word(i + needle.len()))
        .collect();
    let mut count = 0;
    let mut free_from = 0;
    for s in starts {
        if s >= free_from {
            count += 1;
            free_from = s + needle.len();
        }
    }
    count
}

fn naive_score(r: &ScholarRecord, q: &ExpandedQuery) -> (f64, BTreeMap<String, usize>) {
    let mut score = 0.0;
    let mut matched = BTreeMap::new();
    for (term, w) in q.weighted_terms() {
        let t = naive_count(&r.title, term);
        let a = naive_count(&r.abstract_text, term);
        score += w * (3 * t + a) as f64;
        if t + a > 0 {
            matched.insert(term.clone(), t + a);
        }
    }
    (score, matched)
}

#[test]
fn oracle_counts_known_cases() {
    assert_eq!(naive_count("Big data, BIG  data and big-data", "big data"), 2);
    assert_eq!(naive_count("databases", "data"), 0);
    assert_eq!(naive_count("a a a", "a a"), 1);
}

#[test]
fn score_matches_naive_oracle_on_corpus() {
    let o = common::ontology();
    let corpus = common::corpus();
    let all: Vec<&ScholarRecord> = corpus.iter().flat_map(|(_, rs)| rs).collect();
    let mut checked = 0;
    let mut nonzero = 0;
    for q in common::QUERIES {
        for depth in [0, 1, 2] {
            let eq = o.expand_query(&seed_terms(q), depth, 0.5).unwrap();
            for r in &all {
                let got = score_record(r, &eq);
                let (score, matched) = naive_score(r, &eq);
                assert_eq!(got.score, score, "{q} d{depth}: {}", r.title);
                assert_eq!(got.matched_terms, matched, "{q} d{depth}: {}", r.title);
                checked += 1;
                nonzero += usize::from(score > 0.0);
            }
        }
    }
    assert!(nonzero >= 100, "{nonzero} of {checked}");
}

#[test]
fn big_data_record_by_hand() {
    let corpus = common::corpus();
    let r = corpus
        .iter()
        .flat_map(|(_, rs)| rs)
        .find(|r| r.source_id == "fixture_corpus" && r.title == "Data mining with big data")
        .unwrap();
    let q = scholarlens::Ontology::empty("none").expand_query(&["big data"], 0, 0.5).unwrap();
    assert_eq!(naive_count(&r.title, "big data"), 1);
    assert_eq!(naive_count(&r.abstract_text, "big data"), 5);
    assert_eq!(score_record(r, &q).score, 8.0);
}
