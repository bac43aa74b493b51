//! Search orchestration: expand, fan out to adapters, score, deduplicate
//! and rank.
//!
//! A raw query is split on commas into phrases. Every phrase is a seed term,
//! and so is each of its words, so `"Reverse Engineering"` seeds
//! `reverse engineering`, `reverse` and `engineering`. Adapters receive the
//! words in order. Ontology expansion only adds scoring terms; it never
//! changes what the adapters are asked for.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extraction::ScholarRecord;
use crate::ontology::{ExpandedQuery, Ontology, OntologyError};
use crate::serialize::OutputFormat;
use crate::sources::{run_adapter, FetchContext, FetchOutcome, Registry};
use crate::text::{count_phrase, normalize};

pub const DEFAULT_DEPTH: usize = 1;
pub const DEFAULT_GAMMA: f64 = 0.5;
pub const DEFAULT_LIMIT: usize = 50;
pub const MAX_LIMIT: usize = 1000;

/// Weight of a title occurrence relative to an abstract occurrence.
pub const TITLE_FACTOR: f64 = 3.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QueryError {
    #[error("query has no terms")]
    EmptyQuery,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("unknown source `{0}`")]
    UnknownSource(String),
}

impl From<OntologyError> for QueryError {
    fn from(e: OntologyError) -> Self {
        match e {
            OntologyError::EmptyQuery => Self::EmptyQuery,
            other => Self::InvalidRequest(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchRequest {
    pub raw_query: String,
    pub depth: usize,
    pub gamma: f64,
    /// Empty means every registered source.
    pub sources: Vec<String>,
    pub limit: usize,
    pub format: OutputFormat,
}

impl SearchRequest {
    pub fn new(raw_query: impl Into<String>) -> Self {
        Self {
            raw_query: raw_query.into(),
            depth: DEFAULT_DEPTH,
            gamma: DEFAULT_GAMMA,
            sources: Vec::new(),
            limit: DEFAULT_LIMIT,
            format: OutputFormat::Json,
        }
    }

    pub fn validate(&self) -> Result<(), QueryError> {
        if seed_terms(&self.raw_query).is_empty() {
            return Err(QueryError::EmptyQuery);
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(QueryError::InvalidRequest(format!("gamma must be in (0, 1], got {}", self.gamma)));
        }
        if self.limit == 0 || self.limit > MAX_LIMIT {
            return Err(QueryError::InvalidRequest(format!(
                "limit must be between 1 and {MAX_LIMIT}, got {}",
                self.limit
            )));
        }
        Ok(())
    }
}

/// Seed terms of a raw query: each comma-separated phrase, then its words,
/// normalized and without repeats.
pub fn seed_terms(raw_query: &str) -> Vec<String> {
    let mut seeds: Vec<String> = Vec::new();
    let mut push = |t: String| {
        if !t.is_empty() && !seeds.contains(&t) {
            seeds.push(t);
        }
    };
    for phrase in raw_query.split(',') {
        let phrase = normalize(phrase);
        push(phrase.clone());
        for w in phrase.split(' ') {
            push(w.to_string());
        }
    }
    seeds
}

/// Words sent to the adapters, in query order.
pub fn adapter_terms(raw_query: &str) -> Vec<String> {
    normalize(&raw_query.replace(',', " "))
        .split(' ')
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRecord {
    pub record: ScholarRecord,
    pub score: f64,
    pub matched_terms: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SourceStats {
    pub fetched: usize,
    pub kept: usize,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultSet {
    pub request: SearchRequest,
    pub expanded_terms: ExpandedQuery,
    pub records: Vec<ScoredRecord>,
    pub per_source_stats: BTreeMap<String, SourceStats>,
    pub dedup_removed: usize,
}

/// `Σ weight(t) · (3·count(t, title) + count(t, abstract))` over the
/// expanded terms, counting whole-phrase, non-overlapping occurrences in
/// the normalized fields. `matched_terms` holds the raw occurrence counts.
pub fn score_record(r: &ScholarRecord, eq: &ExpandedQuery) -> ScoredRecord {
    let title = normalize(&r.title);
    let abstract_text = normalize(&r.abstract_text);
    let mut score = 0.0;
    let mut matched_terms = BTreeMap::new();
    for (term, weight) in eq.weighted_terms() {
        let t = count_phrase(&title, term);
        let a = count_phrase(&abstract_text, term);
        if t + a > 0 {
            score += weight * (TITLE_FACTOR * t as f64 + a as f64);
            matched_terms.insert(term.clone(), t + a);
        }
    }
    ScoredRecord {
        record: r.clone(),
        score,
        matched_terms,
    }
}

pub fn dedup_key(r: &ScholarRecord) -> String {
    format!("{}|{}", normalize(&r.title), r.year.map(|y| y.to_string()).unwrap_or_default())
}

/// Result ordering: score desc, then title, source id and record id asc.
pub fn result_order(a: &ScoredRecord, b: &ScoredRecord) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.record.title.cmp(&b.record.title))
        .then_with(|| a.record.source_id.cmp(&b.record.source_id))
        .then_with(|| a.record.record_id.cmp(&b.record.record_id))
}

/// Keeps the best-ordered record per dedup key and returns how many were
/// removed. Output is in result order.
pub fn dedupe(mut rs: Vec<ScoredRecord>) -> (Vec<ScoredRecord>, usize) {
    let before = rs.len();
    rs.sort_by(result_order);
    let mut seen = BTreeSet::new();
    rs.retain(|r| seen.insert(dedup_key(&r.record)));
    let removed = before - rs.len();
    (rs, removed)
}

/// Pure merge step: score, drop zero scores, dedupe, sort, truncate. The
/// result does not depend on the order of `outcomes`.
pub fn aggregate(req: &SearchRequest, expanded: ExpandedQuery, outcomes: Vec<(String, FetchOutcome)>) -> ResultSet {
    let mut per_source_stats = BTreeMap::new();
    let mut scored = Vec::new();
    for (source, outcome) in outcomes {
        let mut stats = SourceStats {
            fetched: outcome.records.len(),
            kept: 0,
            errors: outcome.errors.len(),
        };
        for r in &outcome.records {
            let s = score_record(r, &expanded);
            if s.score > 0.0 {
                stats.kept += 1;
                scored.push(s);
            }
        }
        per_source_stats.insert(source, stats);
    }
    let (mut records, dedup_removed) = dedupe(scored);
    records.truncate(req.limit);
    ResultSet {
        request: req.clone(),
        expanded_terms: expanded,
        records,
        per_source_stats,
        dedup_removed,
    }
}

/// Sources a request names, deduplicated and checked against the registry.
pub fn resolve_sources(req: &SearchRequest, registry: &Registry) -> Result<Vec<String>, QueryError> {
    if req.sources.is_empty() {
        return Ok(registry.ids().map(str::to_string).collect());
    }
    let mut out: Vec<String> = Vec::new();
    for s in &req.sources {
        let s = s.trim();
        if registry.get(s).is_none() {
            return Err(QueryError::UnknownSource(s.to_string()));
        }
        if !out.iter().any(|o| o == s) {
            out.push(s.to_string());
        }
    }
    Ok(out)
}

/// Runs a search end to end. Adapters run on one thread each; a failing
/// adapter shows up in `per_source_stats`, never as an error.
pub fn federate_search(
    req: &SearchRequest,
    ontology: &Ontology,
    registry: &Registry,
    ctx: &FetchContext,
) -> Result<ResultSet, QueryError> {
    req.validate()?;
    let sources = resolve_sources(req, registry)?;
    let expanded = ontology.expand_query(&seed_terms(&req.raw_query), req.depth, req.gamma)?;
    let terms = adapter_terms(&req.raw_query);

    let outcomes = std::thread::scope(|s| {
        let handles: Vec<_> = sources
            .iter()
            .map(|id| {
                let adapter = registry.get(id).expect("resolved above");
                let terms = &terms;
                (id.clone(), s.spawn(move || run_adapter(adapter, terms, ctx)))
            })
            .collect();
        handles
            .into_iter()
            .map(|(id, h)| {
                let outcome = match h.join() {
                    Ok(Ok(o)) => o,
                    Ok(Err(e)) => FetchOutcome {
                        errors: vec![(0, e.to_string())],
                        ..FetchOutcome::default()
                    },
                    Err(_) => FetchOutcome {
                        errors: vec![(0, "adapter panicked".into())],
                        ..FetchOutcome::default()
                    },
                };
                (id, outcome)
            })
            .collect()
    });
    Ok(aggregate(req, expanded, outcomes))
}
