//! Import and export of the class-hierarchy fragment of RDF/XML.
//!
//! Only `owl:Class` / `rdfs:Class` declarations (typed nodes or
//! `rdf:Description` + `rdf:type`), `rdfs:label` and `rdfs:subClassOf` are
//! understood. Everything else is skipped and counted.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use quick_xml::events::{BytesStart, Event};
use quick_xml::name::{Namespace, ResolveResult};
use quick_xml::NsReader;

use super::{Ontology, OntologyBuilder, OntologyError, Result};
use crate::text::normalize;

const RDF: &[u8] = b"http://www.w3.org/1999/02/22-rdf-syntax-ns#";
const RDFS: &[u8] = b"http://www.w3.org/2000/01/rdf-schema#";
const OWL: &[u8] = b"http://www.w3.org/2002/07/owl#";

const FRAGMENT: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'.').remove(b'_');

/// Result of an RDF/XML import: the ontology plus what was skipped.
#[derive(Debug, Clone)]
pub struct RdfImport {
    pub ontology: Ontology,
    /// Number of statements outside the supported subset.
    pub ignored: usize,
    pub warnings: Vec<String>,
}

#[derive(Default)]
struct Subject {
    is_class: bool,
    label: Option<String>,
    parents: Vec<String>,
}

type Reader<'a> = NsReader<&'a [u8]>;

fn position(text: &str, offset: usize) -> (usize, usize) {
    let upto = &text[..offset.min(text.len())];
    let line = upto.matches('\n').count() + 1;
    let column = upto.len() - upto.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

fn xml_err(text: &str, reader: &Reader<'_>, message: impl std::fmt::Display) -> OntologyError {
    let (line, column) = position(text, reader.error_position() as usize);
    OntologyError::Parse {
        line,
        column,
        message: message.to_string(),
    }
}

/// Resolved namespace URI of an element, if bound.
type Ns = Option<Vec<u8>>;

fn owned_ns(ns: ResolveResult<'_>) -> Ns {
    match ns {
        ResolveResult::Bound(Namespace(n)) => Some(n.to_vec()),
        _ => None,
    }
}

fn is(ns: &Ns, uri: &[u8]) -> bool {
    ns.as_deref() == Some(uri)
}

/// Looks up an `rdf:`-namespaced attribute.
fn rdf_attr(reader: &Reader<'_>, e: &BytesStart<'_>, local: &[u8]) -> Option<String> {
    e.attributes().flatten().find_map(|a| {
        let (ns, name) = reader.resolve_attribute(a.key);
        (is(&owned_ns(ns), RDF) && name.as_ref() == local).then(|| a.unescape_value().map(|v| v.into_owned()).ok())?
    })
}

fn subject_iri(reader: &Reader<'_>, e: &BytesStart<'_>) -> Option<String> {
    rdf_attr(reader, e, b"about").or_else(|| rdf_attr(reader, e, b"ID").map(|id| format!("#{id}")))
}

/// Last `#` or `/` segment of an IRI, percent-decoded.
fn local_name(iri: &str) -> String {
    let tail = iri.rsplit(['#', '/']).next().unwrap_or(iri);
    percent_decode_str(tail).decode_utf8_lossy().into_owned()
}

/// `DataMining` -> `Data Mining`, `XMLDatabase` -> `XML Database`,
/// `data_mining` -> `data mining`.
fn humanize(name: &str) -> String {
    let chars: Vec<char> = name.chars().collect();
    let mut out = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c == '_' {
            out.push(' ');
            continue;
        }
        if i > 0 && c.is_uppercase() {
            let prev = chars[i - 1];
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            if prev.is_lowercase() || prev.is_ascii_digit() || (prev.is_uppercase() && next_lower) {
                out.push(' ');
            }
        }
        out.push(c);
    }
    out
}

fn read_text(reader: &mut Reader<'_>, text: &str) -> Result<String> {
    let mut out = String::new();
    let mut depth = 0usize;
    loop {
        match reader.read_event().map_err(|e| xml_err(text, reader, e))? {
            Event::Text(t) => out.push_str(&t.unescape().map_err(|e| xml_err(text, reader, e))?),
            Event::CData(t) => out.push_str(&String::from_utf8_lossy(&t)),
            Event::Start(_) => depth += 1,
            Event::End(_) if depth == 0 => return Ok(out),
            Event::End(_) => depth -= 1,
            Event::Eof => return Err(xml_err(text, reader, "unexpected end of document")),
            _ => {}
        }
    }
}

struct Importer<'a> {
    text: &'a str,
    reader: Reader<'a>,
    subjects: BTreeMap<String, Subject>,
    order: Vec<String>,
    warnings: Vec<String>,
}

impl<'a> Importer<'a> {
    fn subject(&mut self, iri: &str) -> &mut Subject {
        if !self.subjects.contains_key(iri) {
            self.order.push(iri.to_string());
        }
        self.subjects.entry(iri.to_string()).or_default()
    }

    fn next(&mut self) -> Result<(Ns, Event<'static>)> {
        let r = match self.reader.read_resolved_event() {
            Ok((ns, ev)) => Ok((owned_ns(ns), ev.into_owned())),
            Err(e) => Err(e),
        };
        r.map_err(|e| xml_err(self.text, &self.reader, e))
    }

    fn skip(&mut self, e: &BytesStart<'_>, what: String) -> Result<()> {
        self.warnings.push(what);
        let end = e.to_end().into_owned();
        self.reader
            .read_to_end(end.name())
            .map_err(|err| xml_err(self.text, &self.reader, err))?;
        Ok(())
    }

    fn run(&mut self) -> Result<()> {
        let mut in_rdf = false;
        loop {
            let (ns, ev) = self.next()?;
            match ev {
                Event::Start(e) | Event::Empty(e) if !in_rdf && is(&ns, RDF) && e.local_name().as_ref() == b"RDF" => {
                    in_rdf = true;
                }
                Event::Start(e) => {
                                        self.statement(&ns, &e, false)?;
                }
                Event::Empty(e) => {
                                        self.statement(&ns, &e, true)?;
                }
                Event::End(_) => in_rdf = false,
                Event::Eof => return Ok(()),
                _ => {}
            }
        }
    }

    fn statement(&mut self, ns: &Ns, e: &BytesStart<'_>, empty: bool) -> Result<()> {
        let local = e.local_name().as_ref().to_vec();
        let typed_class = (is(ns, OWL) || is(ns, RDFS)) && local == b"Class";
        let description = is(ns, RDF) && local == b"Description";
        let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
        if !typed_class && !description {
            return if empty {
                self.warnings.push(format!("ignored <{name}>"));
                Ok(())
            } else {
                self.skip(e, format!("ignored <{name}>"))
            };
        }
        let Some(iri) = subject_iri(&self.reader, e) else {
            return if empty {
                self.warnings.push(format!("ignored anonymous <{name}>"));
                Ok(())
            } else {
                self.skip(e, format!("ignored anonymous <{name}>"))
            };
        };
        if typed_class {
            self.subject(&iri).is_class = true;
        } else {
            self.subject(&iri);
        }
        if empty {
            return Ok(());
        }
        loop {
            let (pns, ev) = self.next()?;
            match ev {
                Event::End(_) => return Ok(()),
                Event::Eof => return Err(xml_err(self.text, &self.reader, "unexpected end of document")),
                Event::Start(p) => {
                                        self.property(&iri, &pns, &p, false)?;
                }
                Event::Empty(p) => {
                                        self.property(&iri, &pns, &p, true)?;
                }
                _ => {}
            }
        }
    }

    fn property(&mut self, iri: &str, ns: &Ns, p: &BytesStart<'_>, empty: bool) -> Result<()> {
        let local = p.local_name().as_ref().to_vec();
        let pname = String::from_utf8_lossy(p.name().as_ref()).into_owned();
        let resource = rdf_attr(&self.reader, p, b"resource");

        if is(ns, RDFS) && local == b"label" {
            let label = if empty { String::new() } else { read_text(&mut self.reader, self.text)? };
            let subj = self.subject(iri);
            if subj.label.is_none() && !label.trim().is_empty() {
                subj.label = Some(label.trim().to_string());
            }
            return Ok(());
        }
        if is(ns, RDF) && local == b"type" {
            let class_type = resource.as_deref().is_some_and(|r| {
                r == "http://www.w3.org/2002/07/owl#Class" || r == "http://www.w3.org/2000/01/rdf-schema#Class"
            });
            if class_type {
                self.subject(iri).is_class = true;
                return if empty { Ok(()) } else { self.skip_silently(p) };
            }
        }
        if is(ns, RDFS) && local == b"subClassOf" {
            if let Some(parent) = resource {
                self.subject(&parent).is_class = true;
                self.subject(iri).parents.push(parent);
                return if empty { Ok(()) } else { self.skip_silently(p) };
            }
            if !empty {
                return self.nested_superclass(iri);
            }
        }
        let what = format!("ignored <{pname}> on {iri}");
        if empty {
            self.warnings.push(what);
            Ok(())
        } else {
            self.skip(p, what)
        }
    }

    /// `<rdfs:subClassOf><owl:Class rdf:about="..."/></rdfs:subClassOf>`
    fn nested_superclass(&mut self, iri: &str) -> Result<()> {
        let mut found = false;
        loop {
            let (ns, ev) = self.next()?;
            match ev {
                Event::End(_) => break,
                Event::Eof => return Err(xml_err(self.text, &self.reader, "unexpected end of document")),
                Event::Start(c) => {
                                        self.superclass_candidate(iri, &ns, &c, &mut found);
                    let end = c.to_end().into_owned();
                    self.reader
                        .read_to_end(end.name())
                        .map_err(|err| xml_err(self.text, &self.reader, err))?;
                }
                Event::Empty(c) => {
                                        self.superclass_candidate(iri, &ns, &c, &mut found);
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn superclass_candidate(&mut self, iri: &str, ns: &Ns, c: &BytesStart<'_>, found: &mut bool) {
        let named_class = (is(ns, OWL) || is(ns, RDFS)) && c.local_name().as_ref() == b"Class";
        match named_class.then(|| subject_iri(&self.reader, c)).flatten() {
            Some(parent) if !*found => {
                *found = true;
                self.subject(&parent).is_class = true;
                self.subject(iri).parents.push(parent);
            }
            _ => self.warnings.push(format!("ignored class expression under subClassOf on {iri}")),
        }
    }

    fn skip_silently(&mut self, p: &BytesStart<'_>) -> Result<()> {
        let end = p.to_end().into_owned();
        self.reader
            .read_to_end(end.name())
            .map_err(|err| xml_err(self.text, &self.reader, err))?;
        Ok(())
    }
}

impl Ontology {
    /// Imports class declarations and `rdfs:subClassOf` statements from an
    /// RDF/XML document. Objects of `subClassOf` are classes by definition and
    /// need no separate declaration.
    pub fn parse_rdf_xml(name: &str, doc: &str) -> Result<RdfImport> {
        let mut reader = NsReader::from_str(doc);
        reader.config_mut().trim_text(true);
        let mut imp = Importer {
            text: doc,
            reader,
            subjects: BTreeMap::new(),
            order: Vec::new(),
            warnings: Vec::new(),
        };
        imp.run()?;

        let mut ids: BTreeMap<&str, String> = BTreeMap::new();
        let mut builder = OntologyBuilder::new(name);
        let mut labels: BTreeMap<String, String> = BTreeMap::new();
        for iri in &imp.order {
            let subj = &imp.subjects[iri];
            if !subj.is_class {
                imp.warnings.push(format!("ignored statements about non-class {iri}"));
                continue;
            }
            let label = subj.label.clone().unwrap_or_else(|| humanize(&local_name(iri)));
            let id = normalize(&label);
            match labels.get(&id) {
                Some(existing) if *existing != label => return Err(OntologyError::DuplicateId { id }),
                Some(_) => {}
                None => {
                    builder.class(&label)?;
                    labels.insert(id.clone(), label);
                }
            }
            ids.insert(iri.as_str(), id);
        }
        for iri in &imp.order {
            let Some(child) = ids.get(iri.as_str()) else { continue };
            for parent in &imp.subjects[iri].parents {
                builder.subclass(child, &ids[parent.as_str()]);
            }
        }
        Ok(RdfImport {
            ontology: builder.build()?,
            ignored: imp.warnings.len(),
            warnings: imp.warnings,
        })
    }

    /// Exports classes, labels and subclass edges as OWL classes in RDF/XML.
    pub fn to_rdf_xml(&self) -> String {
        let esc = |s: &str| quick_xml::escape::escape(s).into_owned();
        let frag = |id: &str| utf8_percent_encode(id, FRAGMENT).to_string();
        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let _ = writeln!(
            out,
            "<rdf:RDF xmlns:rdf=\"http://www.w3.org/1999/02/22-rdf-syntax-ns#\"\n         \
             xmlns:rdfs=\"http://www.w3.org/2000/01/rdf-schema#\"\n         \
             xmlns:owl=\"http://www.w3.org/2002/07/owl#\"\n         \
             xml:base=\"urn:scholarlens:{}\">",
            esc(&frag(self.name()))
        );
        for n in self.nodes() {
            let _ = writeln!(out, "  <owl:Class rdf:about=\"#{}\">", esc(&frag(&n.id)));
            let _ = writeln!(out, "    <rdfs:label>{}</rdfs:label>", esc(&n.label));
            for p in &n.parents {
                let _ = writeln!(out, "    <rdfs:subClassOf rdf:resource=\"#{}\"/>", esc(&frag(p)));
            }
            out.push_str("  </owl:Class>\n");
        }
        out.push_str("</rdf:RDF>\n");
        out
    }
}
