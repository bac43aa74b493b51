//! Declarative extraction rulesets and their compiled form.
//!
//! A ruleset file is INI-style:
//!
//! ```ini
//! [ruleset]
//! source_id = ieee_xplore
//! media = html
//! syntax = css
//! record = div.result-item
//! next_page = a.next@href
//!
//! [field.title]
//! rule = h3.result-item-title
//! filters = collapse_whitespace
//!
//! [field.authors]
//! rule = p.author span
//! multiple = true
//! ```
//!
//! `syntax` is one of `css` (html only, `selector@attr` reads an attribute),
//! `regex` (capture group 1 when present, else the whole match) or
//! `jsonpath` (json only, field paths are evaluated against each record).

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use ini::Ini;
use regex::Regex;
use scraper::Selector;
use serde_json_path::JsonPath;

use super::{ExtractError, MediaKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleSyntax {
    Css,
    Regex,
    JsonPath,
}

impl FromStr for RuleSyntax {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "css" => Ok(Self::Css),
            "regex" => Ok(Self::Regex),
            "jsonpath" => Ok(Self::JsonPath),
            other => Err(format!("unknown rule syntax `{other}`")),
        }
    }
}

/// Post-processing applied to each extracted value, in declared order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Filter {
    Trim,
    CollapseWhitespace,
    StripMarkup,
    DecodeEntities,
}

impl FromStr for Filter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "trim" => Ok(Self::Trim),
            "collapse_whitespace" => Ok(Self::CollapseWhitespace),
            "strip_markup" => Ok(Self::StripMarkup),
            "decode_entities" => Ok(Self::DecodeEntities),
            other => Err(format!("unknown filter `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldRule {
    pub rule: String,
    pub filters: Vec<Filter>,
    /// Keep every match (joined with `"; "`) instead of the first one.
    pub multiple: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionRuleSet {
    pub source_id: String,
    pub media: MediaKind,
    pub syntax: RuleSyntax,
    pub record_rule: String,
    pub field_rules: BTreeMap<String, FieldRule>,
    pub pagination_rule: Option<String>,
    /// Separators that split a raw author string into names.
    pub author_separators: Vec<String>,
}

fn compile_err(rule: &str, message: impl Into<String>) -> ExtractError {
    ExtractError::RuleCompile {
        rule: rule.to_string(),
        message: message.into(),
    }
}

fn default_filters(syntax: RuleSyntax) -> Vec<Filter> {
    match syntax {
        // selector and path values arrive decoded and markup-free
        RuleSyntax::Css | RuleSyntax::JsonPath => vec![Filter::CollapseWhitespace],
        RuleSyntax::Regex => vec![Filter::StripMarkup, Filter::DecodeEntities, Filter::CollapseWhitespace],
    }
}

impl ExtractionRuleSet {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExtractError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| compile_err(&path.display().to_string(), e.to_string()))?;
        Self::from_conf(&text)
    }

    /// Parses and validates a ruleset; every rule must compile.
    pub fn from_conf(text: &str) -> Result<Self, ExtractError> {
        let ini = Ini::load_from_str(text).map_err(|e| compile_err("<ruleset>", e.to_string()))?;
        let head = ini
            .section(Some("ruleset"))
            .ok_or_else(|| compile_err("<ruleset>", "missing [ruleset] section"))?;
        let get = |key: &str| head.get(key).map(str::trim).filter(|v| !v.is_empty());
        let require = |key: &str| get(key).ok_or_else(|| compile_err("<ruleset>", format!("missing `{key}`")));

        let source_id = require("source_id")?.to_string();
        let media: MediaKind = require("media")?.parse().map_err(|e: String| compile_err("media", e))?;
        let syntax: RuleSyntax = require("syntax")?.parse().map_err(|e: String| compile_err("syntax", e))?;
        let record_rule = require("record")?.to_string();
        let pagination_rule = get("next_page").map(str::to_string);
        let author_separators = get("author_separators")
            .map(|s| s.split_whitespace().map(str::to_string).collect())
            .unwrap_or_else(|| vec![";".to_string()]);

        let mut field_rules = BTreeMap::new();
        for (name, props) in ini.iter() {
            let Some(field) = name.and_then(|n| n.strip_prefix("field.")) else {
                continue;
            };
            let rule = props
                .get("rule")
                .map(str::trim)
                .filter(|r| !r.is_empty())
                .ok_or_else(|| compile_err(name.unwrap_or_default(), "missing `rule`"))?
                .to_string();
            let filters = match props.get("filters") {
                Some(list) => list
                    .split(',')
                    .filter(|f| !f.trim().is_empty())
                    .map(|f| f.parse().map_err(|e: String| compile_err(&rule, e)))
                    .collect::<Result<Vec<_>, _>>()?,
                None => default_filters(syntax),
            };
            let multiple = match props.get("multiple").map(str::trim) {
                None | Some("false") => false,
                Some("true") => true,
                Some(other) => return Err(compile_err(&rule, format!("`multiple` must be true or false, got `{other}`"))),
            };
            field_rules.insert(field.trim().to_string(), FieldRule { rule, filters, multiple });
        }

        let rules = Self {
            source_id,
            media,
            syntax,
            record_rule,
            field_rules,
            pagination_rule,
            author_separators,
        };
        rules.compile()?;
        Ok(rules)
    }

    pub(crate) fn compile(&self) -> Result<CompiledRules, ExtractError> {
        match (self.syntax, self.media) {
            (RuleSyntax::Css, MediaKind::Json) => {
                return Err(compile_err(&self.record_rule, "css rules need html documents"))
            }
            (RuleSyntax::JsonPath, MediaKind::Html) => {
                return Err(compile_err(&self.record_rule, "jsonpath rules need json documents"))
            }
            _ => {}
        }
        if !self.field_rules.contains_key("title") {
            return Err(compile_err("<ruleset>", "no rule for the `title` field"));
        }
        let record = Matcher::compile(self.syntax, &self.record_rule)?;
        let fields = self
            .field_rules
            .iter()
            .map(|(name, f)| Ok((name.clone(), Matcher::compile(self.syntax, &f.rule)?, f.clone())))
            .collect::<Result<Vec<_>, ExtractError>>()?;
        let next_page = self
            .pagination_rule
            .as_deref()
            .map(|r| Matcher::compile(self.syntax, r))
            .transpose()?;
        Ok(CompiledRules { record, fields, next_page })
    }
}

impl FromStr for MediaKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "html" => Ok(Self::Html),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown media kind `{other}`")),
        }
    }
}

#[derive(Debug)]
pub(crate) enum Matcher {
    Css { selector: Selector, attr: Option<String> },
    Regex(Regex),
    Json(JsonPath),
}

impl Matcher {
    fn compile(syntax: RuleSyntax, rule: &str) -> Result<Self, ExtractError> {
        match syntax {
            RuleSyntax::Css => {
                let (sel, attr) = match rule.rsplit_once('@') {
                    Some((sel, attr)) if !attr.is_empty() && !attr.contains([' ', ']']) => {
                        (sel, Some(attr.to_string()))
                    }
                    _ => (rule, None),
                };
                let selector = Selector::parse(sel.trim()).map_err(|e| compile_err(rule, e.to_string()))?;
                Ok(Self::Css { selector, attr })
            }
            RuleSyntax::Regex => Regex::new(rule).map(Self::Regex).map_err(|e| compile_err(rule, e.to_string())),
            RuleSyntax::JsonPath => JsonPath::parse(rule).map(Self::Json).map_err(|e| compile_err(rule, e.to_string())),
        }
    }
}

#[derive(Debug)]
pub(crate) struct CompiledRules {
    pub record: Matcher,
    pub fields: Vec<(String, Matcher, FieldRule)>,
    pub next_page: Option<Matcher>,
}
