use std::collections::BTreeMap;

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{format_float, OutputFormat, RecordView, ResultView, SerializeError};
use crate::query::ResultSet;

fn push_text_element(out: &mut String, name: &str, value: Option<&str>) {
    match value {
        Some(v) if !v.is_empty() => {
            out.push_str(&format!("<{name}>{}</{name}>", escape(v)));
        }
        _ => out.push_str(&format!("<{name}/>")),
    }
}

/// One line of XML declaration, then the `<results>` document with no
/// insignificant whitespace.
pub fn to_xml(rs: &ResultSet) -> Vec<u8> {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(&format!(
        "<results query=\"{}\" count=\"{}\" dedup_removed=\"{}\">",
        escape(rs.request.raw_query.as_str()),
        rs.records.len(),
        rs.dedup_removed
    ));
    out.push_str("<expanded>");
    for (term, weight) in rs.expanded_terms.weighted_terms() {
        out.push_str(&format!(
            "<term name=\"{}\" weight=\"{}\"/>",
            escape(term.as_str()),
            format_float(*weight)
        ));
    }
    out.push_str("</expanded>");
    for s in &rs.records {
        let r = &s.record;
        out.push_str(&format!(
            "<record id=\"{}\" source=\"{}\" score=\"{}\">",
            escape(r.record_id.as_str()),
            escape(r.source_id.as_str()),
            format_float(s.score)
        ));
        push_text_element(&mut out, "title", Some(&r.title));
        push_text_element(&mut out, "abstract", Some(&r.abstract_text));
        if r.authors.is_empty() {
            out.push_str("<authors/>");
        } else {
            out.push_str("<authors>");
            for a in &r.authors {
                push_text_element(&mut out, "author", Some(a));
            }
            out.push_str("</authors>");
        }
        push_text_element(&mut out, "year", r.year.map(|y| y.to_string()).as_deref());
        push_text_element(&mut out, "venue", r.venue.as_deref());
        push_text_element(&mut out, "url", r.url.as_deref());
        out.push_str("</record>");
    }
    out.push_str("</results>");
    out.into_bytes()
}

fn err(message: impl Into<String>) -> SerializeError {
    SerializeError::Parse {
        format: OutputFormat::Xml,
        message: message.into(),
    }
}

fn attrs(e: &BytesStart<'_>) -> Result<BTreeMap<String, String>, SerializeError> {
    let mut map = BTreeMap::new();
    for a in e.attributes() {
        let a = a.map_err(|e| err(e.to_string()))?;
        let key = String::from_utf8_lossy(a.key.as_ref()).into_owned();
        let value = a.unescape_value().map_err(|e| err(e.to_string()))?.into_owned();
        map.insert(key, value);
    }
    Ok(map)
}

fn take<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T, SerializeError> {
    map.get(key)
        .ok_or_else(|| err(format!("missing attribute `{key}`")))?
        .parse()
        .map_err(|_| err(format!("bad value for attribute `{key}`")))
}

/// Parses a document produced by [`to_xml`]. JSON-only fields stay `None`.
pub fn parse_xml(bytes: &[u8]) -> Result<ResultView, SerializeError> {
    let text = std::str::from_utf8(bytes).map_err(|e| err(e.to_string()))?;
    let mut reader = Reader::from_str(text);
    let mut view: Option<ResultView> = None;
    let mut record: Option<RecordView> = None;
    let mut field: Option<String> = None;
    let mut buf = String::new();

    loop {
        let event = reader.read_event().map_err(|e| err(e.to_string()))?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let empty = matches!(event, Event::Empty(_));
                let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                match name.as_str() {
                    "results" => {
                        let a = attrs(e)?;
                        view = Some(ResultView {
                            query: a.get("query").cloned().unwrap_or_default(),
                            depth: None,
                            gamma: None,
                            expanded_terms: BTreeMap::new(),
                            count: take(&a, "count")?,
                            dedup_removed: take(&a, "dedup_removed")?,
                            per_source: None,
                            records: Vec::new(),
                        });
                    }
                    "term" => {
                        let a = attrs(e)?;
                        let v = view.as_mut().ok_or_else(|| err("term outside results"))?;
                        v.expanded_terms.insert(take(&a, "name")?, take(&a, "weight")?);
                    }
                    "record" => {
                        let a = attrs(e)?;
                        record = Some(RecordView {
                            record_id: take(&a, "id")?,
                            source: take(&a, "source")?,
                            title: String::new(),
                            abstract_text: String::new(),
                            authors: Vec::new(),
                            year: None,
                            venue: None,
                            url: None,
                            score: take(&a, "score")?,
                            matched_terms: None,
                        });
                    }
                    "title" | "abstract" | "author" | "year" | "venue" | "url" => {
                        if empty {
                            finish_field(record.as_mut(), &name, "")?;
                        } else {
                            field = Some(name);
                            buf.clear();
                        }
                    }
                    _ => {}
                }
            }
            Event::Text(t) => {
                if field.is_some() {
                    buf.push_str(&t.unescape().map_err(|e| err(e.to_string()))?);
                }
            }
            Event::CData(t) => {
                if field.is_some() {
                    buf.push_str(&String::from_utf8_lossy(&t));
                }
            }
            Event::End(e) => {
                let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                if field.as_deref() == Some(name.as_str()) {
                    finish_field(record.as_mut(), &name, &buf)?;
                    field = None;
                } else if name == "record" {
                    let r = record.take().ok_or_else(|| err("unbalanced record"))?;
                    view.as_mut().ok_or_else(|| err("record outside results"))?.records.push(r);
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    view.ok_or_else(|| err("no <results> element"))
}

fn finish_field(record: Option<&mut RecordView>, name: &str, value: &str) -> Result<(), SerializeError> {
    let r = record.ok_or_else(|| err(format!("<{name}> outside a record")))?;
    let opt = || (!value.is_empty()).then(|| value.to_string());
    match name {
        "title" => r.title = value.to_string(),
        "abstract" => r.abstract_text = value.to_string(),
        "author" => r.authors.push(value.to_string()),
        "year" => {
            r.year = match opt() {
                Some(y) => Some(y.parse().map_err(|_| err(format!("bad year `{y}`")))?),
                None => None,
            }
        }
        "venue" => r.venue = opt(),
        "url" => r.url = opt(),
        _ => {}
    }
    Ok(())
}
