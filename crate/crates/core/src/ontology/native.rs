//! The line-oriented ontology format.
//!
//! ```text
//! # comment
//! class data mining | Data mining
//! sub data mining < database
//! annot data mining | kind = object property
//! ```

use std::fmt::Write as _;

use super::{Ontology, OntologyBuilder, OntologyError, Result};
use crate::text::normalize;

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> OntologyError {
    OntologyError::Parse {
        line,
        column,
        message: message.into(),
    }
}

impl Ontology {
    /// Parses a native-format document and validates the resulting graph.
    pub fn parse_native(name: &str, text: &str) -> Result<Self> {
        let mut builder = OntologyBuilder::new(name);
        let mut edges = Vec::new();
        let mut annotations = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let column = raw.len() - raw.trim_start().len() + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (keyword, rest) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| parse_err(line_no, column, format!("incomplete statement `{line}`")))?;
            match keyword {
                "class" => {
                    let (id, label) = rest
                        .split_once('|')
                        .ok_or_else(|| parse_err(line_no, column, "expected `class <id> | <label>`"))?;
                    let (id, label) = (id.trim(), label.trim());
                    if id.is_empty() || label.is_empty() {
                        return Err(parse_err(line_no, column, "class id and label must be non-empty"));
                    }
                    if normalize(label) != id {
                        return Err(parse_err(
                            line_no,
                            column,
                            format!("id `{id}` is not the normalized label `{}`", normalize(label)),
                        ));
                    }
                    builder.class(label)?;
                }
                "sub" => {
                    let (child, parent) = rest
                        .split_once(" < ")
                        .ok_or_else(|| parse_err(line_no, column, "expected `sub <child-id> < <parent-id>`"))?;
                    let (child, parent) = (child.trim(), parent.trim());
                    if child.is_empty() || parent.is_empty() {
                        return Err(parse_err(line_no, column, "subclass ids must be non-empty"));
                    }
                    edges.push((line_no, column, child.to_string(), parent.to_string()));
                }
                "annot" => {
                    let parsed = rest.split_once('|').and_then(|(id, kv)| {
                        kv.split_once('=').map(|(k, v)| (id.trim(), k.trim(), v.trim()))
                    });
                    let (id, key, value) =
                        parsed.ok_or_else(|| parse_err(line_no, column, "expected `annot <id> | <key> = <value>`"))?;
                    annotations.push((line_no, column, id.to_string(), key.to_string(), value.to_string()));
                }
                other => return Err(parse_err(line_no, column, format!("unknown statement `{other}`"))),
            }
        }

        for (line_no, column, child, parent) in &edges {
            if !builder.has_class(child) {
                return Err(parse_err(*line_no, *column, format!("undeclared class `{child}`")));
            }
            builder.subclass(child, parent);
        }
        for (line_no, column, id, key, value) in &annotations {
            if !builder.has_class(id) {
                return Err(parse_err(*line_no, *column, format!("undeclared class `{id}`")));
            }
            builder.annotate(id, key, value)?;
        }
        builder.build()
    }

    /// Writes the ontology back in native format: classes first, then edges,
    /// both in id order.
    pub fn to_native(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {}", self.name);
        for n in self.nodes() {
            let _ = writeln!(out, "class {} | {}", n.id, n.label);
        }
        for n in self.nodes() {
            for p in &n.parents {
                let _ = writeln!(out, "sub {} < {}", n.id, p);
            }
        }
        for n in self.nodes() {
            for (k, v) in &n.annotations {
                let _ = writeln!(out, "annot {} | {} = {}", n.id, k, v);
            }
        }
        out
    }
}
