#![allow(dead_code)]

use std::path::{Path, PathBuf};

use scholarlens::extraction::ScholarRecord;
use scholarlens::ontology::Ontology;
use scholarlens::query::adapter_terms;
use scholarlens::sources::{run_adapter, FetchContext, FetchOutcome, Registry};

/// Query strings of the transcribed result tables, as printed.
pub const QUERIES: [&str; 14] = [
    "Computer of science",
    "Reverse Engineering",
    "Remote Sensing",
    "Software Quality Assurance",
    "Neural Networks",
    "Networking",
    "Modeling",
    "Data Mining",
    "Computer Graphics",
    "Clustering",
    "Cloud Computing",
    "Big data",
    "Application Programming Interface",
    "Artificial Intelligence",
];

pub fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn ontology() -> Ontology {
    Ontology::load(root().join("fixtures/ontologies/cs.onto")).unwrap()
}

pub fn registry() -> Registry {
    Registry::load(root().join("sources")).unwrap()
}

/// Every source's outcome for `query`, in registry order.
pub fn outcomes(registry: &Registry, query: &str) -> Vec<(String, FetchOutcome)> {
    let ctx = FetchContext::default();
    let terms = adapter_terms(query);
    registry
        .ids()
        .map(|id| {
            let o = run_adapter(registry.get(id).unwrap(), &terms, &ctx).unwrap();
            assert!(o.errors.is_empty(), "{id} {query}: {:?}", o.errors);
            (id.to_string(), o)
        })
        .collect()
}

/// All records the fixture corpus yields, grouped by query.
pub fn corpus() -> Vec<(&'static str, Vec<ScholarRecord>)> {
    let reg = registry();
    QUERIES
        .iter()
        .map(|q| (*q, outcomes(&reg, q).into_iter().flat_map(|(_, o)| o.records).collect()))
        .collect()
}
