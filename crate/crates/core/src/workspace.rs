//! Session state shared by the command-line tool: both stores, the built
//! networks, and the log of ingested link keys. Persisted as a versioned
//! JSON document.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::concept_tree::ConceptTreeStore;
use crate::ensemble::EnsembleStore;
use crate::network::{build_network, NetworkError, SymNetwork};
use crate::registry::Registry;
use crate::script_io::{parse_ontology_parts_from, CplScript, ParseError};
use crate::{LinkKey, MergeReport};

pub const FORMAT: &str = "cogweave/1";

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("link key `{0}` was already ingested")]
    DuplicateKey(String),
}

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("unsupported workspace format `{0}` (expected `{FORMAT}`)")]
    Version(String),
    #[error("corrupt workspace file: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Workspace {
    pub ensembles: EnsembleStore,
    pub trees: ConceptTreeStore,
    pub scripts: BTreeMap<String, CplScript>,
    pub networks: BTreeMap<String, SymNetwork>,
    pub log: Vec<LinkKey>,
    /// Most recently built script.
    pub current: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct Document {
    format: String,
    #[serde(flatten)]
    workspace: Workspace,
}

#[derive(Deserialize)]
struct Header {
    format: String,
}

/// Merge outcome of one ingested part in both stores.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestRecord {
    pub key: LinkKey,
    pub ensemble: MergeReport,
    pub tree: MergeReport,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds and stores the network for `script`, replacing any earlier
    /// script of the same name.
    pub fn add_script(&mut self, script: CplScript) -> Result<&SymNetwork, WorkspaceError> {
        let network = build_network(&script)?;
        let name = script.name.clone();
        self.scripts.insert(name.clone(), script);
        self.networks.insert(name.clone(), network);
        self.current = Some(name.clone());
        Ok(&self.networks[&name])
    }

    /// Parses an ontology file and presents each part to both stores. The
    /// file is applied whole or not at all.
    pub fn ingest(&mut self, text: &str) -> Result<Vec<IngestRecord>, WorkspaceError> {
        let parts = parse_ontology_parts_from(text, self.log.len() as u64)?;
        let known: BTreeSet<&str> = self.log.iter().map(|k| k.key.as_str()).collect();
        if let Some(dup) = parts
            .iter()
            .find(|p| known.contains(p.link_key.key.as_str()))
        {
            return Err(WorkspaceError::DuplicateKey(dup.link_key.key.clone()));
        }
        let mut records = Vec::with_capacity(parts.len());
        for part in &parts {
            let ensemble = self.ensembles.add_part(part);
            let tree = self.trees.add_event(part);
            self.log.push(part.link_key.clone());
            records.push(IngestRecord {
                key: part.link_key.clone(),
                ensemble,
                tree,
            });
        }
        Ok(records)
    }

    /// Script and network by name, or the current one.
    pub fn script(&self, name: Option<&str>) -> Option<(&CplScript, &SymNetwork)> {
        let name = name.or(self.current.as_deref())?;
        Some((self.scripts.get(name)?, self.networks.get(name)?))
    }

    /// Fresh registry snapshot over the stores and one network.
    pub fn registry(&self, script: Option<&str>) -> Registry {
        let network = self.script(script).map(|(_, n)| n);
        Registry::rebuild(&self.ensembles, &self.trees, network)
    }

    pub fn to_json(&self) -> String {
        let doc = Document {
            format: FORMAT.to_string(),
            workspace: self.clone(),
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("workspace serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Workspace, PersistError> {
        let header: Header =
            serde_json::from_str(text).map_err(|e| PersistError::Corrupt(e.to_string()))?;
        if header.format != FORMAT {
            return Err(PersistError::Version(header.format));
        }
        let doc: Document =
            serde_json::from_str(text).map_err(|e| PersistError::Corrupt(e.to_string()))?;
        let ws = doc.workspace;
        if ws.log.windows(2).any(|w| w[0].ordinal >= w[1].ordinal) {
            return Err(PersistError::Corrupt(
                "ingestion log ordinals are not increasing".into(),
            ));
        }
        if ws.scripts.keys().ne(ws.networks.keys()) {
            return Err(PersistError::Corrupt(
                "scripts and networks disagree".into(),
            ));
        }
        Ok(ws)
    }

    pub fn save(&self, path: &Path) -> Result<(), PersistError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Workspace, PersistError> {
        Workspace::from_json(&fs::read_to_string(path)?)
    }
}
