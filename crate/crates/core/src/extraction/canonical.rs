use std::sync::OnceLock;

use regex::Regex;
use sha2::{Digest, Sha256};

use super::{IntermediateDoc, ScholarRecord};
use crate::text::normalize;

/// Records produced from one intermediate document, plus notes about
/// optional fields that could not be parsed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Canonical {
    pub records: Vec<ScholarRecord>,
    pub warnings: Vec<String>,
}

/// First 16 hex digits of SHA-256 over `source|normalized title|year`.
pub fn record_id(source_id: &str, title: &str, year: Option<i32>) -> String {
    let year = year.map(|y| y.to_string()).unwrap_or_default();
    let digest = Sha256::digest(format!("{source_id}|{}|{year}", normalize(title)).as_bytes());
    hex::encode(digest)[..16].to_string()
}

fn year_token() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b(\d{4})\b").expect("static regex"))
}

fn parse_year(raw: &str) -> Option<i32> {
    year_token()
        .captures_iter(raw)
        .filter_map(|c| c[1].parse::<i32>().ok())
        .find(|y| (1900..=2100).contains(y))
}

fn clean(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn optional(s: Option<&String>) -> Option<String> {
    s.map(|v| clean(v)).filter(|v| !v.is_empty())
}

/// [`transform_with`] using the separators carried by the document.
pub fn transform_to_canonical(idoc: &IntermediateDoc) -> Canonical {
    let seps: Vec<&str> = if idoc.author_separators.is_empty() {
        vec![";"]
    } else {
        idoc.author_separators.iter().map(String::as_str).collect()
    };
    transform_with(idoc, &seps)
}

/// Types the raw strings of `idoc` into records, keeping entry order.
pub fn transform_with(idoc: &IntermediateDoc, author_separators: &[&str]) -> Canonical {
    let mut out = Canonical::default();
    for (i, entry) in idoc.entries.iter().enumerate() {
        let Some(title) = optional(entry.get("title")) else {
            out.warnings.push(format!("entry {}: empty title", i + 1));
            continue;
        };
        let year = match entry.get("year").map(|y| y.trim()).filter(|y| !y.is_empty()) {
            Some(raw) => {
                let y = parse_year(raw);
                if y.is_none() {
                    out.warnings.push(format!("entry {}: no year in `{raw}`", i + 1));
                }
                y
            }
            None => None,
        };
        let authors = entry
            .get("authors")
            .map(|raw| {
                let mut parts = vec![raw.clone()];
                for sep in author_separators {
                    parts = parts.iter().flat_map(|p| p.split(sep).map(str::to_string)).collect();
                }
                parts.iter().map(|p| clean(p)).filter(|p| !p.is_empty()).collect()
            })
            .unwrap_or_default();
        out.records.push(ScholarRecord {
            record_id: record_id(&idoc.source_id, &title, year),
            source_id: idoc.source_id.clone(),
            abstract_text: entry.get("abstract").map(|a| clean(a)).unwrap_or_default(),
            title,
            authors,
            year,
            venue: optional(entry.get("venue")),
            url: optional(entry.get("url")),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;

    fn idoc(source: &str, entries: Vec<Vec<(&str, &str)>>) -> IntermediateDoc {
        IntermediateDoc {
            source_id: source.into(),
            entries: entries
                .into_iter()
                .map(|e| e.into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect::<BTreeMap<_, _>>())
                .collect(),
            ..Default::default()
        }
    }

    #[test]
    fn big_data_entry() {
        let d = idoc(
            "fixture_corpus",
            vec![vec![
                ("title", "Data mining with big data"),
                ("abstract", "Big Data concern large-volume, complex, growing data sets with multiple, autonomous sources."),
            ]],
        );
        let c = transform_to_canonical(&d);
        assert_eq!(c.records.len(), 1);
        let r = &c.records[0];
        assert!(r.authors.is_empty());
        assert_eq!(r.year, None);
        assert_eq!(r.venue, None);
        assert!(c.warnings.is_empty());
    }

    #[test]
    fn year_from_leading_token() {
        let d = idoc("s", vec![vec![("title", "T"), ("year", "2002 IEEE International Symposium")]]);
        assert_eq!(transform_to_canonical(&d).records[0].year, Some(2002));
        assert_eq!(parse_year("Year: 2011"), Some(2011));
        assert_eq!(parse_year("vol 12345, 1850 and 1999"), Some(1999));
    }

    #[test]
    fn unparseable_year_warns() {
        let d = idoc("s", vec![vec![("title", "T"), ("year", "n.d.")]]);
        let c = transform_to_canonical(&d);
        assert_eq!(c.records[0].year, None);
        assert_eq!(c.warnings.len(), 1);
    }

    #[test]
    fn record_id_shared_across_pages() {
        // same source, title up to case/whitespace, and year -> same id
        let a = idoc("ieee_xplore", vec![vec![("title", "Domain-retargetable reverse engineering"), ("year", "1993")]]);
        let b = idoc("ieee_xplore", vec![vec![("title", "  Domain-retargetable  Reverse Engineering "), ("year", "Year: 1993")]]);
        let ra = &transform_to_canonical(&a).records[0];
        let rb = &transform_to_canonical(&b).records[0];
        assert_eq!(ra.record_id, rb.record_id);

        let expected = {
            let d = Sha256::digest(b"ieee_xplore|domain-retargetable reverse engineering|1993");
            hex::encode(d)[..16].to_string()
        };
        assert_eq!(ra.record_id, expected);
        assert_ne!(record_id("ieee_xplore", "x", Some(1993)), record_id("ieee_xplore", "x", None));
    }

    #[test]
    fn authors_split_on_separators() {
        let mut d = idoc("s", vec![vec![("title", "T"), ("authors", "A. One; B. Two and C. Three;;")]]);
        d.author_separators = vec![";".into(), " and ".into()];
        assert_eq!(transform_to_canonical(&d).records[0].authors, ["A. One", "B. Two", "C. Three"]);
    }

    #[test]
    fn idempotent_on_clean_fields() {
        let d = idoc(
            "s",
            vec![vec![("title", "Clean  title"), ("authors", "X; Y"), ("year", "2001"), ("url", "https://e/x")]],
        );
        let first = transform_to_canonical(&d).records;
        let again = idoc(
            "s",
            first
                .iter()
                .map(|r| {
                    vec![
                        ("title", r.title.as_str()),
                        ("abstract", r.abstract_text.as_str()),
                        ("year", "2001"),
                        ("url", r.url.as_deref().unwrap()),
                    ]
                })
                .collect(),
        );
        let mut second = transform_to_canonical(&again).records;
        second[0].authors = first[0].authors.clone();
        assert_eq!(first, second);
    }
}
