//! JSON, XML and plain-text table renderings of a [`ResultSet`].
//!
//! Both structured formats have a fixed layout so that equal result sets
//! give byte-identical output. Numbers are written with at most six
//! decimals and never in exponent form.

mod table;
mod xml;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use thiserror::Error;

use crate::extraction::ScholarRecord;
use crate::ontology::ExpandedQuery;
use crate::query::{ResultSet, ScoredRecord, SearchRequest, SourceStats};

pub use table::{to_table, DEFAULT_COLUMNS, DEFAULT_MAX_WIDTH, TABLE_COLUMNS};
pub use xml::{parse_xml, to_xml};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SerializeError {
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("max_width must be at least 1")]
    ZeroWidth,
    #[error("malformed {format} input: {message}")]
    Parse { format: OutputFormat, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Xml,
    Table,
}

impl OutputFormat {
    pub fn content_type(self) -> &'static str {
        match self {
            Self::Json => "application/json",
            Self::Xml => "application/xml",
            Self::Table => "text/plain; charset=utf-8",
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Json => "json",
            Self::Xml => "xml",
            Self::Table => "table",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "xml" => Ok(Self::Xml),
            "table" => Ok(Self::Table),
            other => Err(format!("unknown format `{other}` (expected json, xml or table)")),
        }
    }
}

/// Renders with the format's defaults (the table uses title and abstract).
pub fn render(rs: &ResultSet, format: OutputFormat) -> Vec<u8> {
    match format {
        OutputFormat::Json => to_json(rs),
        OutputFormat::Xml => to_xml(rs),
        OutputFormat::Table => to_table(rs, DEFAULT_COLUMNS, DEFAULT_MAX_WIDTH)
            .expect("default columns are valid")
            .into_bytes(),
    }
}

/// Wraps a plain record list, in the given order, as a result set with an
/// empty query and zero scores.
pub fn unscored(records: &[ScholarRecord]) -> ResultSet {
    let request = SearchRequest::new("");
    ResultSet {
        expanded_terms: ExpandedQuery::none(request.gamma),
        request,
        records: records
            .iter()
            .map(|r| ScoredRecord {
                record: r.clone(),
                score: 0.0,
                matched_terms: BTreeMap::new(),
            })
            .collect(),
        per_source_stats: BTreeMap::new(),
        dedup_removed: 0,
    }
}

/// `{:.6}` with trailing zeros dropped, keeping one decimal: `0.5`, `27.0`.
pub fn format_float(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x }; // no "-0.0"
    let mut s = format!("{x:.6}");
    while s.ends_with('0') && !s.ends_with(".0") {
        s.pop();
    }
    s
}

fn rounded(x: f64) -> f64 {
    format_float(x).parse().expect("formatted float parses")
}

fn raw_float(x: f64) -> Box<RawValue> {
    RawValue::from_string(format_float(x)).expect("formatted float is valid json")
}

#[derive(Serialize)]
struct JsonOut<'a> {
    query: &'a str,
    depth: usize,
    gamma: Box<RawValue>,
    expanded_terms: BTreeMap<&'a str, Box<RawValue>>,
    count: usize,
    dedup_removed: usize,
    per_source: &'a BTreeMap<String, SourceStats>,
    records: Vec<JsonRecordOut<'a>>,
}

#[derive(Serialize)]
struct JsonRecordOut<'a> {
    record_id: &'a str,
    source: &'a str,
    title: &'a str,
    #[serde(rename = "abstract")]
    abstract_text: &'a str,
    authors: &'a [String],
    year: Option<i32>,
    venue: Option<&'a str>,
    url: Option<&'a str>,
    score: Box<RawValue>,
    matched_terms: &'a BTreeMap<String, usize>,
}

/// Compact JSON; key order as declared on the wire-format structs.
pub fn to_json(rs: &ResultSet) -> Vec<u8> {
    let out = JsonOut {
        query: &rs.request.raw_query,
        depth: rs.request.depth,
        gamma: raw_float(rs.request.gamma),
        expanded_terms: rs
            .expanded_terms
            .weighted_terms()
            .iter()
            .map(|(t, w)| (t.as_str(), raw_float(*w)))
            .collect(),
        count: rs.records.len(),
        dedup_removed: rs.dedup_removed,
        per_source: &rs.per_source_stats,
        records: rs
            .records
            .iter()
            .map(|s| JsonRecordOut {
                record_id: &s.record.record_id,
                source: &s.record.source_id,
                title: &s.record.title,
                abstract_text: &s.record.abstract_text,
                authors: &s.record.authors,
                year: s.record.year,
                venue: s.record.venue.as_deref(),
                url: s.record.url.as_deref(),
                score: raw_float(s.score),
                matched_terms: &s.matched_terms,
            })
            .collect(),
    };
    serde_json::to_vec(&out).expect("result set serializes")
}

/// Observable content of a rendered result set.
///
/// Fields that only the JSON layout carries are `Option`s; [`parse_xml`]
/// leaves them `None`, and [`ResultView::shared`] clears them so that views
/// from both formats compare equal.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ResultView {
    pub query: String,
    #[serde(default)]
    pub depth: Option<usize>,
    #[serde(default)]
    pub gamma: Option<f64>,
    pub expanded_terms: BTreeMap<String, f64>,
    pub count: usize,
    pub dedup_removed: usize,
    #[serde(default)]
    pub per_source: Option<BTreeMap<String, SourceStats>>,
    pub records: Vec<RecordView>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct RecordView {
    pub record_id: String,
    pub source: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub authors: Vec<String>,
    pub year: Option<i32>,
    pub venue: Option<String>,
    pub url: Option<String>,
    pub score: f64,
    #[serde(default)]
    pub matched_terms: Option<BTreeMap<String, usize>>,
}

impl RecordView {
    pub fn record(&self) -> ScholarRecord {
        ScholarRecord {
            record_id: self.record_id.clone(),
            source_id: self.source.clone(),
            title: self.title.clone(),
            abstract_text: self.abstract_text.clone(),
            authors: self.authors.clone(),
            year: self.year,
            venue: self.venue.clone(),
            url: self.url.clone(),
        }
    }
}

impl ResultView {
    /// What a rendering of `rs` is expected to parse back to, with floats
    /// at output precision.
    pub fn of(rs: &ResultSet) -> Self {
        Self {
            query: rs.request.raw_query.clone(),
            depth: Some(rs.request.depth),
            gamma: Some(rounded(rs.request.gamma)),
            expanded_terms: rs
                .expanded_terms
                .weighted_terms()
                .iter()
                .map(|(t, w)| (t.clone(), rounded(*w)))
                .collect(),
            count: rs.records.len(),
            dedup_removed: rs.dedup_removed,
            per_source: Some(rs.per_source_stats.clone()),
            records: rs
                .records
                .iter()
                .map(|s| RecordView {
                    record_id: s.record.record_id.clone(),
                    source: s.record.source_id.clone(),
                    title: s.record.title.clone(),
                    abstract_text: s.record.abstract_text.clone(),
                    authors: s.record.authors.clone(),
                    year: s.record.year,
                    venue: s.record.venue.clone(),
                    url: s.record.url.clone(),
                    score: rounded(s.score),
                    matched_terms: Some(s.matched_terms.clone()),
                })
                .collect(),
        }
    }

    /// Drops the JSON-only fields.
    pub fn shared(mut self) -> Self {
        self.depth = None;
        self.gamma = None;
        self.per_source = None;
        for r in &mut self.records {
            r.matched_terms = None;
        }
        self
    }
}

pub fn parse_json(bytes: &[u8]) -> Result<ResultView, SerializeError> {
    serde_json::from_slice(bytes).map_err(|e| SerializeError::Parse {
        format: OutputFormat::Json,
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting() {
        assert_eq!(format_float(0.5), "0.5");
        assert_eq!(format_float(27.0), "27.0");
        assert_eq!(format_float(0.0), "0.0");
        assert_eq!(format_float(-0.0), "0.0");
        assert_eq!(format_float(1.0 / 3.0), "0.333333");
        assert_eq!(format_float(0.015625), "0.015625");
        assert_eq!(format_float(1e-9), "0.0");
        assert_eq!(format_float(1e12), "1000000000000.0");
    }

    #[test]
    fn format_names() {
        for f in [OutputFormat::Json, OutputFormat::Xml, OutputFormat::Table] {
            assert_eq!(f.to_string().parse::<OutputFormat>().unwrap(), f);
        }
        assert!("csv".parse::<OutputFormat>().is_err());
        assert_eq!(OutputFormat::Xml.content_type(), "application/xml");
    }

    #[test]
    fn empty_envelope_layout() {
        let out = String::from_utf8(to_json(&unscored(&[]))).unwrap();
        assert_eq!(
            out,
            r#"{"query":"","depth":1,"gamma":0.5,"expanded_terms":{},"count":0,"dedup_removed":0,"per_source":{},"records":[]}"#
        );
    }

    #[test]
    fn json_absent_optionals_are_null() {
        let rec = ScholarRecord::new("s", "T", "");
        let out = String::from_utf8(to_json(&unscored(&[rec]))).unwrap();
        assert!(out.contains(r#""year":null,"venue":null,"url":null,"score":0.0,"matched_terms":{}"#), "{out}");
        let keys = ["record_id", "source", "title", "abstract", "authors", "year", "venue", "url", "score", "matched_terms"];
        let pos: Vec<usize> = keys.iter().map(|k| out.find(&format!("\"{k}\":")).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn json_round_trip() {
        let mut rec = ScholarRecord::new("s", "Quotes \" and \\ slashes", "ünïcode");
        rec.year = Some(1999);
        rec.venue = Some("V".into());
        let rs = unscored(&[rec]);
        assert_eq!(parse_json(&to_json(&rs)).unwrap(), ResultView::of(&rs));
    }
}
