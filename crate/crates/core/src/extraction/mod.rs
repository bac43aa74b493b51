//! Rule-driven extraction of portal pages into canonical records.
//!
//! A fetched [`RawDocument`] passes through two pure stages:
//! [`extract_entries`] applies an [`ExtractionRuleSet`] and yields an
//! [`IntermediateDoc`] of raw field strings, then [`transform_to_canonical`]
//! types those strings into [`ScholarRecord`]s.

mod canonical;
mod extract;
mod rules;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use canonical::{record_id, transform_to_canonical, transform_with, Canonical};
pub use extract::extract_entries;
pub use rules::{ExtractionRuleSet, FieldRule, Filter, RuleSyntax};

use crate::serialize::{self, OutputFormat};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtractError {
    #[error("rule `{rule}` does not compile: {message}")]
    RuleCompile { rule: String, message: String },
    #[error("ruleset for `{source_id}` handles {expected:?} documents, got {actual:?}")]
    UnsupportedMedia {
        source_id: String,
        expected: MediaKind,
        actual: MediaKind,
    },
    #[error("ruleset is for `{rules}` but the document came from `{document}`")]
    SourceMismatch { rules: String, document: String },
    #[error("malformed {kind:?} document: {message}")]
    MalformedDocument { kind: MediaKind, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaKind {
    Html,
    Json,
}

impl MediaKind {
    /// Picks a kind from a `Content-Type` header, falling back to sniffing
    /// the first non-blank byte of the body.
    pub fn detect(content_type: Option<&str>, body: &[u8]) -> Self {
        if let Some(ct) = content_type {
            let ct = ct.to_ascii_lowercase();
            if ct.contains("json") {
                return Self::Json;
            }
            if ct.contains("html") || ct.contains("xml") {
                return Self::Html;
            }
        }
        match body.iter().find(|b| !b.is_ascii_whitespace()) {
            Some(b'{') | Some(b'[') => Self::Json,
            _ => Self::Html,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Self::Html => "html",
            Self::Json => "json",
        }
    }
}

/// A page as fetched from a portal or read from a fixture.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDocument {
    pub source_id: String,
    pub url: String,
    pub media_kind: MediaKind,
    pub body: Vec<u8>,
    /// Seconds since the Unix epoch.
    pub fetched_at: u64,
}

/// Raw field strings per extracted entry, in page order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IntermediateDoc {
    pub source_id: String,
    pub entries: Vec<BTreeMap<String, String>>,
    pub warnings: Vec<String>,
    /// Target of the pagination rule, when it matched.
    pub next_page: Option<String>,
    pub author_separators: Vec<String>,
}

/// Canonical publication record.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScholarRecord {
    pub record_id: String,
    pub source_id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub authors: Vec<String>,
    pub year: Option<i32>,
    pub venue: Option<String>,
    pub url: Option<String>,
}

impl ScholarRecord {
    /// Builds a record with a derived id and no optional metadata.
    pub fn new(source_id: &str, title: &str, abstract_text: &str) -> Self {
        Self {
            record_id: record_id(source_id, title, None),
            source_id: source_id.to_string(),
            title: title.to_string(),
            abstract_text: abstract_text.to_string(),
            authors: Vec::new(),
            year: None,
            venue: None,
            url: None,
        }
    }
}

/// Renders a plain record list, preserving order. Records carry no score.
pub fn render(records: &[ScholarRecord], format: OutputFormat) -> Vec<u8> {
    serialize::render(&serialize::unscored(records), format)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn media_detection() {
        assert_eq!(MediaKind::detect(Some("application/json; charset=utf-8"), b""), MediaKind::Json);
        assert_eq!(MediaKind::detect(Some("text/html"), b"{}"), MediaKind::Html);
        assert_eq!(MediaKind::detect(None, b"  \n{\"a\":1}"), MediaKind::Json);
        assert_eq!(MediaKind::detect(None, b"<html>"), MediaKind::Html);
    }

    #[test]
    fn render_empty_json_envelope() {
        let out = String::from_utf8(render(&[], OutputFormat::Json)).unwrap();
        assert!(out.starts_with("{\"query\":\"\""), "{out}");
        assert!(out.contains("\"count\":0"));
        assert!(out.ends_with("\"records\":[]}"));
    }

    #[test]
    fn render_single_record_table_matches_golden() {
        let rec = ScholarRecord::new("fixture_corpus", "Data mining with big data", "Big Data concern large-volume, complex, growing data sets.");
        let out = String::from_utf8(render(&[rec], OutputFormat::Table)).unwrap();
        let golden = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/golden/one_record.table")).unwrap();
        assert_eq!(out, golden);
        assert_eq!(out.lines().count(), 2);
    }

    #[test]
    fn render_xml_parses_back() {
        let mut rec = ScholarRecord::new("s", "Trees & Graphs <draft>", "x");
        rec.authors = vec!["A. Author".into()];
        rec.year = Some(2002);
        let xml = render(&[rec.clone()], OutputFormat::Xml);
        let view = serialize::parse_xml(&xml).unwrap();
        assert_eq!(view.records.len(), 1);
        assert_eq!(view.records[0].record(), rec);
    }
}
