//! Ontology-expanded federated search over scholarly research portals.
//!
//! A search runs through five stages:
//!
//! 1. the keyword query is expanded along the subclass edges of a domain
//!    [`ontology`], each derived term weighted by its hop distance;
//! 2. every configured portal adapter in [`sources`] fetches result pages,
//!    live or from recorded fixtures;
//! 3. [`extraction`] applies the adapter's declarative ruleset to each page
//!    and canonicalizes the entries into [`ScholarRecord`]s;
//! 4. [`query`] scores, deduplicates and ranks the merged records;
//! 5. [`serialize`] renders the result as JSON, XML or a plain-text table.
//!
//! ```
//! use scholarlens::ontology::Ontology;
//!
//! let onto = Ontology::parse_native(
//!     "cs",
//!     "class database | Database\nclass data mining | Data mining\nsub data mining < database\n",
//! )
//! .unwrap();
//! let expanded = onto.expand_query(&["Database"], 1, 0.5).unwrap();
//! assert_eq!(expanded.weight("data mining"), Some(0.5));
//! ```

pub mod config;
pub mod extraction;
pub mod ontology;
pub mod query;
pub mod serialize;
pub mod sources;
pub mod text;

pub use extraction::ScholarRecord;
pub use ontology::{ExpandedQuery, Ontology};
pub use query::{ResultSet, SearchRequest};
pub use sources::Registry;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/ontologies.md")]
    mod ontologies {}
    #[doc = include_str!("../../../book/src/expansion.md")]
    mod expansion {}
    #[doc = include_str!("../../../book/src/extraction.md")]
    mod extraction {}
    #[doc = include_str!("../../../book/src/ranking.md")]
    mod ranking {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/running.md")]
    mod running {}
}
