//! Class hierarchies and keyword expansion along their subclass edges.
//!
//! An [`Ontology`] is a validated, immutable DAG of [`ClassNode`]s. It can be
//! loaded from the line-oriented native format (see [`Ontology::parse_native`])
//! or from the class/subclass fragment of RDF/XML (see
//! [`Ontology::parse_rdf_xml`]).

mod native;
mod rdf;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use thiserror::Error;

use crate::text::normalize;

pub use rdf::RdfImport;

/// Default decay applied per subclass hop during expansion.
pub const DEFAULT_GAMMA: f64 = 0.5;
/// Default expansion depth used when a caller does not pick one.
pub const DEFAULT_MAX_DEPTH: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OntologyError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("subclass cycle through `{node}`")]
    Cycle { node: String },
    #[error("class `{child}` names missing parent `{parent}`")]
    DanglingParent { child: String, parent: String },
    #[error("class `{id}` declared more than once")]
    DuplicateId { id: String },
    #[error("unknown class `{id}`")]
    UnknownClass { id: String },
    #[error("query has no terms after normalization")]
    EmptyQuery,
    #[error("invalid expansion parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T, E = OntologyError> = std::result::Result<T, E>;

/// A concept in the hierarchy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassNode {
    pub id: String,
    pub label: String,
    pub parents: BTreeSet<String>,
    /// Free-form tags such as the data/object property kind. Carried, never
    /// interpreted.
    pub annotations: BTreeMap<String, String>,
}

/// A validated class hierarchy.
///
/// Invariants, enforced by [`OntologyBuilder::build`]:
/// every parent reference resolves, the subclass graph is acyclic, and the
/// children index is the exact inverse of the parent sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Ontology {
    name: String,
    roots: BTreeSet<String>,
    nodes: BTreeMap<String, ClassNode>,
    children: BTreeMap<String, BTreeSet<String>>,
}

/// Accumulates classes and edges, then validates them into an [`Ontology`].
#[derive(Debug, Default)]
pub struct OntologyBuilder {
    name: String,
    nodes: BTreeMap<String, ClassNode>,
    edges: Vec<(String, String)>,
}

impl OntologyBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    /// Declares a class; its id is the normalized label.
    pub fn class(&mut self, label: &str) -> Result<&mut Self> {
        let id = normalize(label);
        if id.is_empty() {
            return Err(OntologyError::InvalidParameter("empty class label".into()));
        }
        if self.nodes.contains_key(&id) {
            return Err(OntologyError::DuplicateId { id });
        }
        self.nodes.insert(
            id.clone(),
            ClassNode {
                id,
                label: label.trim().to_string(),
                parents: BTreeSet::new(),
                annotations: BTreeMap::new(),
            },
        );
        Ok(self)
    }

    pub fn has_class(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    /// Records `child` as a direct subclass of `parent`. Resolution happens in
    /// [`build`](Self::build), so forward references are fine.
    pub fn subclass(&mut self, child: &str, parent: &str) -> &mut Self {
        self.edges.push((normalize(child), normalize(parent)));
        self
    }

    pub fn annotate(&mut self, id: &str, key: &str, value: &str) -> Result<&mut Self> {
        let id = normalize(id);
        let node = self
            .nodes
            .get_mut(&id)
            .ok_or(OntologyError::UnknownClass { id: id.clone() })?;
        node.annotations.insert(key.to_string(), value.to_string());
        Ok(self)
    }

    pub fn build(self) -> Result<Ontology> {
        let OntologyBuilder {
            name,
            mut nodes,
            edges,
        } = self;
        for (child, parent) in edges {
            if !nodes.contains_key(&parent) {
                return Err(OntologyError::DanglingParent { child, parent });
            }
            let node = nodes
                .get_mut(&child)
                .ok_or(OntologyError::UnknownClass { id: child.clone() })?;
            node.parents.insert(parent);
        }

        let mut children: BTreeMap<String, BTreeSet<String>> =
            nodes.keys().map(|id| (id.clone(), BTreeSet::new())).collect();
        for node in nodes.values() {
            for parent in &node.parents {
                children
                    .get_mut(parent)
                    .expect("parent resolved above")
                    .insert(node.id.clone());
            }
        }
        if let Some(node) = find_cycle(&nodes) {
            return Err(OntologyError::Cycle { node });
        }
        let roots = nodes
            .values()
            .filter(|n| n.parents.is_empty())
            .map(|n| n.id.clone())
            .collect();
        Ok(Ontology {
            name,
            roots,
            nodes,
            children,
        })
    }
}

/// Iterative three-colour DFS over parent edges; returns a node on a cycle.
fn find_cycle(nodes: &BTreeMap<String, ClassNode>) -> Option<String> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let mut marks: BTreeMap<&str, Mark> = nodes.keys().map(|k| (k.as_str(), Mark::White)).collect();
    for start in nodes.keys() {
        if marks[start.as_str()] != Mark::White {
            continue;
        }
        let mut stack: Vec<(&str, std::collections::btree_set::Iter<'_, String>)> =
            vec![(start.as_str(), nodes[start].parents.iter())];
        marks.insert(start.as_str(), Mark::Grey);
        while let Some((id, iter)) = stack.last_mut() {
            match iter.next() {
                Some(parent) => match marks[parent.as_str()] {
                    Mark::Grey => return Some(parent.clone()),
                    Mark::White => {
                        marks.insert(parent.as_str(), Mark::Grey);
                        stack.push((parent.as_str(), nodes[parent].parents.iter()));
                    }
                    Mark::Black => {}
                },
                None => {
                    marks.insert(id, Mark::Black);
                    stack.pop();
                }
            }
        }
    }
    None
}

impl Ontology {
    /// An ontology without classes. Every query expands to its seeds alone.
    pub fn empty(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            roots: BTreeSet::new(),
            nodes: BTreeMap::new(),
            children: BTreeMap::new(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| OntologyError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        if path.extension().is_some_and(|e| e == "rdf" || e == "owl") {
            Ok(Self::parse_rdf_xml(&name, &text)?.ontology)
        } else {
            Self::parse_native(&name, &text)
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn roots(&self) -> &BTreeSet<String> {
        &self.roots
    }

    pub fn contains(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn node(&self, id: &str) -> Result<&ClassNode> {
        self.nodes.get(id).ok_or_else(|| OntologyError::UnknownClass { id: id.to_string() })
    }

    pub fn nodes(&self) -> impl Iterator<Item = &ClassNode> {
        self.nodes.values()
    }

    /// Direct subclasses of `id`.
    pub fn children_of(&self, id: &str) -> Result<&BTreeSet<String>> {
        self.children
            .get(id)
            .ok_or_else(|| OntologyError::UnknownClass { id: id.to_string() })
    }

    /// Every class reachable downwards from `id` within `max_depth` hops
    /// (`None` is unbounded), mapped to its minimum hop distance.
    pub fn descendants_of(&self, id: &str, max_depth: Option<usize>) -> Result<BTreeMap<String, usize>> {
        self.children_of(id)?;
        Ok(self.bfs(id, max_depth, |n| self.children[n].iter()))
    }

    /// Every class reachable upwards from `id`, mapped to its minimum hop distance.
    pub fn ancestors_of(&self, id: &str) -> Result<BTreeMap<String, usize>> {
        self.node(id)?;
        Ok(self.bfs(id, None, |n| self.nodes[n].parents.iter()))
    }

    fn bfs<'a, F, I>(&'a self, start: &str, max_depth: Option<usize>, next: F) -> BTreeMap<String, usize>
    where
        F: Fn(&str) -> I,
        I: Iterator<Item = &'a String>,
    {
        let mut seen = BTreeMap::new();
        let mut queue = VecDeque::from([(start.to_string(), 0usize)]);
        while let Some((id, hops)) = queue.pop_front() {
            if max_depth.is_some_and(|d| hops >= d) {
                continue;
            }
            for n in next(&id) {
                if n != start && !seen.contains_key(n) {
                    seen.insert(n.clone(), hops + 1);
                    queue.push_back((n.clone(), hops + 1));
                }
            }
        }
        seen
    }

    /// Expands `seeds` along subclass edges.
    ///
    /// Each normalized seed gets weight 1.0. Seeds naming a class pull in its
    /// descendants up to `depth` hops at weight `gamma^hops`; a term reachable
    /// several ways keeps its largest weight. Seeds that name no class pass
    /// through unexpanded.
    pub fn expand_query<S: AsRef<str>>(&self, seeds: &[S], depth: usize, gamma: f64) -> Result<ExpandedQuery> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(OntologyError::InvalidParameter(format!("gamma must be in (0, 1], got {gamma}")));
        }
        let mut seed_terms: Vec<String> = Vec::new();
        for s in seeds {
            let t = normalize(s.as_ref());
            if !t.is_empty() && !seed_terms.contains(&t) {
                seed_terms.push(t);
            }
        }
        if seed_terms.is_empty() {
            return Err(OntologyError::EmptyQuery);
        }

        let mut weighted: BTreeMap<String, f64> =
            seed_terms.iter().map(|t| (t.clone(), 1.0)).collect();
        if depth > 0 {
            for seed in seed_terms.iter().filter(|t| self.contains(t)) {
                for (term, hops) in self.descendants_of(seed, Some(depth))? {
                    let w = gamma.powi(hops as i32);
                    let slot = weighted.entry(term).or_insert(0.0);
                    if w > *slot {
                        *slot = w;
                    }
                }
            }
        }
        Ok(ExpandedQuery {
            seed_terms,
            weighted_terms: weighted,
            depth,
            gamma,
        })
    }

    /// Compares classes, labels and edges, ignoring the ontology name.
    pub fn same_graph(&self, other: &Ontology) -> bool {
        self.nodes.len() == other.nodes.len()
            && self.nodes.iter().zip(other.nodes.iter()).all(|((ka, a), (kb, b))| {
                ka == kb && a.label == b.label && a.parents == b.parents
            })
    }

    /// Unions several ontologies. A class present in more than one part keeps
    /// the first label seen and the union of parents and annotations; the
    /// result is re-validated, so merging can surface a cycle.
    pub fn merge(name: impl Into<String>, parts: &[Ontology]) -> Result<Ontology> {
        let mut nodes: BTreeMap<String, ClassNode> = BTreeMap::new();
        for part in parts {
            for node in part.nodes.values() {
                let entry = nodes.entry(node.id.clone()).or_insert_with(|| ClassNode {
                    parents: BTreeSet::new(),
                    annotations: BTreeMap::new(),
                    ..node.clone()
                });
                entry.parents.extend(node.parents.iter().cloned());
                for (k, v) in &node.annotations {
                    entry.annotations.entry(k.clone()).or_insert_with(|| v.clone());
                }
            }
        }
        let mut b = OntologyBuilder::new(name);
        for node in nodes.values() {
            b.class(&node.label)?;
            for (k, v) in &node.annotations {
                b.annotate(&node.id, k, v)?;
            }
            for p in &node.parents {
                b.subclass(&node.id, p);
            }
        }
        b.build()
    }
}

/// Seed terms plus ontology-derived terms with their weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedQuery {
    seed_terms: Vec<String>,
    weighted_terms: BTreeMap<String, f64>,
    depth: usize,
    gamma: f64,
}

impl ExpandedQuery {
    /// A query with no terms; scores every record 0. Used when rendering
    /// record lists that never went through a search.
    pub fn none(gamma: f64) -> Self {
        Self {
            seed_terms: Vec::new(),
            weighted_terms: BTreeMap::new(),
            depth: 0,
            gamma,
        }
    }

    pub fn seed_terms(&self) -> &[String] {
        &self.seed_terms
    }

    /// All terms, keyed in lexical order.
    pub fn weighted_terms(&self) -> &BTreeMap<String, f64> {
        &self.weighted_terms
    }

    pub fn weight(&self, term: &str) -> Option<f64> {
        self.weighted_terms.get(term).copied()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Terms sorted by weight descending, then term ascending.
    pub fn ranked(&self) -> Vec<(&str, f64)> {
        let mut v: Vec<(&str, f64)> = self.weighted_terms.iter().map(|(k, w)| (k.as_str(), *w)).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v
    }
}
