//! Three cooperating stores for concept knowledge:
//!
//! - [`ensemble`]: nested, value-exact structures that merge on overlap.
//! - [`concept_tree`]: per-event trees that aggregate types at a level and
//!   merge only on full containment.
//! - [`network`]: a four-layer process network built from a CPL script, with
//!   cycle search and task scheduling in [`paths`].
//!
//! The [`registry`] links every concept type across all three, and
//! [`workspace`] bundles them for the command-line tool.

use std::fmt;

use serde::{Deserialize, Serialize};

pub mod cli;
pub mod concept_tree;
pub mod ensemble;
pub mod export;
pub mod network;
pub mod paths;
pub mod registry;
pub mod script_io;
pub mod workspace;

pub use concept_tree::{ConceptTreeNode, ConceptTreeStore, CountingViolation, RestructureError};
pub use ensemble::{EnsembleNode, EnsembleStore};
pub use network::{build_network, NetworkNode, NodeKind, SymNetwork};
pub use paths::{Cycle, Schedule, ScheduleStep};
pub use registry::{ActivationResult, HornQueryResult, Registry, TypeEntry};
pub use script_io::{
    parse_cpl, parse_ontology_parts, serialize_cpl, ConceptSymbol, CplScript, OntologyPart,
    ParseError, PartNode, Role, Triple,
};
pub use workspace::Workspace;

/// Event key attached to every node an ingested part touches.
///
/// Ordering follows the ingestion ordinal, so key sets list events in the
/// order they arrived.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinkKey {
    pub ordinal: u64,
    pub key: String,
}

impl LinkKey {
    pub fn new(key: impl Into<String>, ordinal: u64) -> Self {
        LinkKey {
            ordinal,
            key: key.into(),
        }
    }
}

impl fmt::Display for LinkKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key)
    }
}

/// How a part or event was absorbed by a store.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MergeKind {
    NewRoot,
    Contained,
    Overlapped,
}

impl fmt::Display for MergeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MergeKind::NewRoot => "new-root",
            MergeKind::Contained => "contained",
            MergeKind::Overlapped => "overlapped",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeReport {
    pub nodes_created: usize,
    pub nodes_key_extended: usize,
    pub merge_kind: MergeKind,
}

pub(crate) fn format_keys<'a>(keys: impl IntoIterator<Item = &'a LinkKey>) -> String {
    let names: Vec<&str> = keys.into_iter().map(|k| k.key.as_str()).collect();
    format!("[{}]", names.join(", "))
}
