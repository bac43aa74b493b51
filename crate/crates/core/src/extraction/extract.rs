use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use scraper::{ElementRef, Html};
use serde_json::Value;

use super::rules::{CompiledRules, Filter, Matcher};
use super::{ExtractError, ExtractionRuleSet, IntermediateDoc, MediaKind, RawDocument};

fn markup() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?s)<!--.*?-->|<[^>]*>").expect("static regex"))
}

fn apply_filters(value: &str, filters: &[Filter]) -> String {
    let mut v = value.to_string();
    for f in filters {
        v = match f {
            Filter::Trim => v.trim().to_string(),
            Filter::CollapseWhitespace => v.split_whitespace().collect::<Vec<_>>().join(" "),
            Filter::StripMarkup => markup().replace_all(&v, "").into_owned(),
            Filter::DecodeEntities => html_escape::decode_html_entities(&v).into_owned(),
        };
    }
    v
}

/// Applies `rules` to `doc` and returns one entry per record match, in
/// document order. Entries without a title are dropped, one warning each.
pub fn extract_entries(doc: &RawDocument, rules: &ExtractionRuleSet) -> Result<IntermediateDoc, ExtractError> {
    if rules.source_id != doc.source_id {
        return Err(ExtractError::SourceMismatch {
            rules: rules.source_id.clone(),
            document: doc.source_id.clone(),
        });
    }
    if rules.media != doc.media_kind {
        return Err(ExtractError::UnsupportedMedia {
            source_id: rules.source_id.clone(),
            expected: rules.media,
            actual: doc.media_kind,
        });
    }
    let compiled = rules.compile()?;
    let mut out = IntermediateDoc {
        source_id: doc.source_id.clone(),
        author_separators: rules.author_separators.clone(),
        ..IntermediateDoc::default()
    };
    let body = String::from_utf8_lossy(&doc.body);
    if body.trim().is_empty() {
        return Ok(out);
    }

    let (blocks, next_page) = match &compiled.record {
        Matcher::Css { .. } => css_blocks(&body, &compiled),
        Matcher::Regex(_) => regex_blocks(&body, &compiled),
        Matcher::Json(_) => json_blocks(&body, &compiled)?,
    };
    out.next_page = next_page;

    for (index, fields) in blocks.into_iter().enumerate() {
        let has_title = fields.get("title").is_some_and(|t| !t.is_empty());
        if has_title {
            out.entries.push(fields);
        } else {
            out.warnings.push(format!("record {}: no title, dropped", index + 1));
        }
    }
    Ok(out)
}

type Blocks = Vec<BTreeMap<String, String>>;

fn collect(values: Vec<String>, multiple: bool) -> Option<String> {
    let mut values = values.into_iter().filter(|v| !v.is_empty());
    if multiple {
        let all: Vec<String> = values.collect();
        (!all.is_empty()).then(|| all.join("; "))
    } else {
        values.next()
    }
}

fn css_values(scope: ElementRef<'_>, matcher: &Matcher) -> Vec<String> {
    let Matcher::Css { selector, attr } = matcher else {
        return Vec::new();
    };
    scope
        .select(selector)
        .filter_map(|el| match attr {
            Some(a) => el.value().attr(a).map(str::to_string),
            None => Some(el.text().collect::<String>()),
        })
        .collect()
}

fn css_blocks(body: &str, rules: &CompiledRules) -> (Blocks, Option<String>) {
    let html = Html::parse_document(body);
    let Matcher::Css { selector, .. } = &rules.record else {
        unreachable!("css record rule");
    };
    let blocks = html
        .select(selector)
        .map(|block| {
            let mut fields = BTreeMap::new();
            for (name, matcher, rule) in &rules.fields {
                let values = css_values(block, matcher)
                    .iter()
                    .map(|v| apply_filters(v, &rule.filters))
                    .collect();
                if let Some(v) = collect(values, rule.multiple) {
                    fields.insert(name.clone(), v);
                }
            }
            fields
        })
        .collect();
    let next = rules
        .next_page
        .as_ref()
        .and_then(|m| css_values(html.root_element(), m).into_iter().map(|v| v.trim().to_string()).find(|v| !v.is_empty()));
    (blocks, next)
}

fn regex_values(text: &str, matcher: &Matcher) -> Vec<String> {
    let Matcher::Regex(re) = matcher else {
        return Vec::new();
    };
    re.captures_iter(text)
        .map(|c| c.get(1).or_else(|| c.get(0)).map_or("", |m| m.as_str()).to_string())
        .collect()
}

fn regex_blocks(body: &str, rules: &CompiledRules) -> (Blocks, Option<String>) {
    let blocks = regex_values(body, &rules.record)
        .into_iter()
        .map(|block| {
            let mut fields = BTreeMap::new();
            for (name, matcher, rule) in &rules.fields {
                let values = regex_values(&block, matcher)
                    .iter()
                    .map(|v| apply_filters(v, &rule.filters))
                    .collect();
                if let Some(v) = collect(values, rule.multiple) {
                    fields.insert(name.clone(), v);
                }
            }
            fields
        })
        .collect();
    let next = rules.next_page.as_ref().and_then(|m| {
        regex_values(body, m)
            .into_iter()
            .map(|v| html_escape::decode_html_entities(v.trim()).into_owned())
            .find(|v| !v.is_empty())
    });
    (blocks, next)
}

fn json_scalar(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn json_values(scope: &Value, matcher: &Matcher) -> Vec<String> {
    let Matcher::Json(path) = matcher else {
        return Vec::new();
    };
    path.query(scope).all().into_iter().filter_map(json_scalar).collect()
}

fn json_blocks(body: &str, rules: &CompiledRules) -> Result<(Blocks, Option<String>), ExtractError> {
    let root: Value = serde_json::from_str(body).map_err(|e| ExtractError::MalformedDocument {
        kind: MediaKind::Json,
        message: e.to_string(),
    })?;
    let Matcher::Json(record_path) = &rules.record else {
        unreachable!("jsonpath record rule");
    };
    let blocks = record_path
        .query(&root)
        .all()
        .into_iter()
        .map(|record| {
            let mut fields = BTreeMap::new();
            for (name, matcher, rule) in &rules.fields {
                let values = json_values(record, matcher)
                    .iter()
                    .map(|v| apply_filters(v, &rule.filters))
                    .collect();
                if let Some(v) = collect(values, rule.multiple) {
                    fields.insert(name.clone(), v);
                }
            }
            fields
        })
        .collect();
    let next = rules
        .next_page
        .as_ref()
        .and_then(|m| json_values(&root, m).into_iter().find(|v| !v.trim().is_empty()));
    Ok((blocks, next))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(rel: &str) -> Vec<u8> {
        std::fs::read(format!("{}/../../{rel}", env!("CARGO_MANIFEST_DIR"))).unwrap()
    }

    fn ieee_rules() -> ExtractionRuleSet {
        ExtractionRuleSet::load(format!("{}/../../sources/ieee_xplore/rules.conf", env!("CARGO_MANIFEST_DIR"))).unwrap()
    }

    fn doc(source: &str, media: MediaKind, body: Vec<u8>) -> RawDocument {
        RawDocument {
            source_id: source.into(),
            url: "fixture:".into(),
            media_kind: media,
            body,
            fetched_at: 0,
        }
    }

    #[test]
    fn ieee_reverse_engineering_page() {
        let d = doc("ieee_xplore", MediaKind::Html, fixture("fixtures/pages/ieee_reverse_engineering.html"));
        let idoc = extract_entries(&d, &ieee_rules()).unwrap();
        assert_eq!(idoc.entries.len(), 9);
        assert!(idoc.warnings.is_empty());
        assert_eq!(idoc.entries[0]["title"], "Research on Reverse Engineering Technology of Complex Product");
        assert!(idoc.entries[0]["abstract"].starts_with("This paper expatiates on the basic concept"));
    }

    #[test]
    fn empty_body_is_vacuous() {
        let idoc = extract_entries(&doc("ieee_xplore", MediaKind::Html, Vec::new()), &ieee_rules()).unwrap();
        assert!(idoc.entries.is_empty());
        assert!(idoc.warnings.is_empty());
    }

    #[test]
    fn missing_title_block_dropped_with_one_warning() {
        let d = doc("ieee_xplore", MediaKind::Html, fixture("fixtures/pages/missing_title.html"));
        let idoc = extract_entries(&d, &ieee_rules()).unwrap();
        assert_eq!(idoc.entries.len(), 2);
        assert_eq!(idoc.warnings.len(), 1);
        assert_eq!(idoc.entries[0]["authors"], "A. Author; B. Writer");
        assert_eq!(idoc.entries[1]["title"], "Scraping Research Portals & Their Limits");
        assert_eq!(idoc.entries[1]["year"], "Year: 2014");
    }

    #[test]
    fn media_and_source_checked() {
        let d = doc("ieee_xplore", MediaKind::Json, b"{}".to_vec());
        assert!(matches!(extract_entries(&d, &ieee_rules()), Err(ExtractError::UnsupportedMedia { .. })));
        let d = doc("other", MediaKind::Html, b"<html/>".to_vec());
        assert!(matches!(extract_entries(&d, &ieee_rules()), Err(ExtractError::SourceMismatch { .. })));
    }

    #[test]
    fn regex_rules_strip_and_decode() {
        let rules = ExtractionRuleSet::from_conf(
            "[ruleset]\nsource_id = r\nmedia = html\nsyntax = regex\nrecord = (?s)<li>(.*?)</li>\n\
             next_page = <a rel=\"next\" href=\"([^\"]+)\"\n\
             [field.title]\nrule = (?s)<b>(.*?)</b>\n",
        )
        .unwrap();
        let body = "<ul><li><b><i>Big</i>\n  data &amp; you</b></li><li>untitled</li></ul>\
                    <a rel=\"next\" href=\"/p?page=2&amp;q=x\">next</a>";
        let idoc = extract_entries(&doc("r", MediaKind::Html, body.as_bytes().to_vec()), &rules).unwrap();
        assert_eq!(idoc.entries.len(), 1);
        assert_eq!(idoc.entries[0]["title"], "Big data & you");
        assert_eq!(idoc.warnings.len(), 1);
        assert_eq!(idoc.next_page.as_deref(), Some("/p?page=2&q=x"));
    }

    #[test]
    fn jsonpath_rules() {
        let rules = ExtractionRuleSet::from_conf(
            "[ruleset]\nsource_id = j\nmedia = json\nsyntax = jsonpath\nrecord = $.results[*]\nnext_page = $.meta.next\n\
             [field.title]\nrule = $.display_name\n\
             [field.year]\nrule = $.publication_year\n\
             [field.authors]\nrule = $.authorships[*].author.display_name\nmultiple = true\n",
        )
        .unwrap();
        let body = r#"{"meta":{"next":"https://x/works?page=2"},"results":[
            {"display_name":"A  paper","publication_year":2019,"authorships":[{"author":{"display_name":"X"}},{"author":{"display_name":"Y"}}]},
            {"display_name":null}]}"#;
        let idoc = extract_entries(&doc("j", MediaKind::Json, body.as_bytes().to_vec()), &rules).unwrap();
        assert_eq!(idoc.entries.len(), 1);
        assert_eq!(idoc.entries[0]["title"], "A paper");
        assert_eq!(idoc.entries[0]["year"], "2019");
        assert_eq!(idoc.entries[0]["authors"], "X; Y");
        assert_eq!(idoc.warnings.len(), 1);
        assert_eq!(idoc.next_page.as_deref(), Some("https://x/works?page=2"));

        let bad = doc("j", MediaKind::Json, b"{not json".to_vec());
        assert!(matches!(extract_entries(&bad, &rules), Err(ExtractError::MalformedDocument { .. })));
    }

    #[test]
    fn deterministic() {
        let d = doc("ieee_xplore", MediaKind::Html, fixture("fixtures/pages/ieee_reverse_engineering.html"));
        let rules = ieee_rules();
        assert_eq!(extract_entries(&d, &rules).unwrap(), extract_entries(&d, &rules).unwrap());
    }
}
