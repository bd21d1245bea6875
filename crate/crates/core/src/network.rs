//! Four-layer process network built from a CPL script.
//!
//! Layer 0 holds one node per role (all objects, all effectors, all
//! sources). Layer 1 holds concepts that play more than one role, layer 2
//! one node per step, and layer 3 the concepts shared by several steps that
//! layer 1 did not already take. Steps with no layer-1 link fall back to
//! the role nodes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::script_io::{ConceptSymbol, CplScript, Role, Triple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    RoleType,
    SharedConcept,
    Triple,
    UpperShared,
}

impl NodeKind {
    pub fn layer(self) -> u8 {
        match self {
            NodeKind::RoleType => 0,
            NodeKind::SharedConcept => 1,
            NodeKind::Triple => 2,
            NodeKind::UpperShared => 3,
        }
    }

    pub fn is_concept(self) -> bool {
        matches!(self, NodeKind::SharedConcept | NodeKind::UpperShared)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkNode {
    pub id: String,
    pub kind: NodeKind,
    pub layer: u8,
    /// Symbols housed by the node.
    pub concepts: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<Role>,
    /// Step ordinal, for triple nodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordinal: Option<usize>,
}

pub fn role_node_id(role: Role) -> &'static str {
    match role {
        Role::Object => "objects",
        Role::Effector => "effectors",
        Role::Source => "sources",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("script `{0}` has no steps")]
    EmptyScript(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymNetwork {
    pub script: String,
    pub symbols: Vec<ConceptSymbol>,
    /// Layer order, then construction order.
    pub nodes: Vec<NetworkNode>,
    /// Undirected; each pair stored with the lesser id first.
    pub edges: BTreeSet<(String, String)>,
}

fn edge(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

pub fn build_network(script: &CplScript) -> Result<SymNetwork, NetworkError> {
    if script.triples.is_empty() {
        return Err(NetworkError::EmptyScript(script.name.clone()));
    }
    let mut nodes = Vec::new();
    let mut edges = BTreeSet::new();

    // layer 0
    let role_members: Vec<(Role, Vec<String>)> = Role::ALL
        .iter()
        .map(|&role| {
            let mut members: Vec<String> = Vec::new();
            for t in &script.triples {
                let s = t.get(role);
                if !members.iter().any(|m| m == s) {
                    members.push(s.to_string());
                }
            }
            (role, members)
        })
        .collect();
    for (role, members) in &role_members {
        nodes.push(NetworkNode {
            id: role_node_id(*role).to_string(),
            kind: NodeKind::RoleType,
            layer: 0,
            concepts: members.clone(),
            role: Some(*role),
            ordinal: None,
        });
    }

    // layer 1: concepts found in two or more role sets
    let mut housed: BTreeSet<&str> = BTreeSet::new();
    for sym in &script.symbols {
        let roles: Vec<Role> = role_members
            .iter()
            .filter(|(_, m)| m.contains(&sym.symbol))
            .map(|(r, _)| *r)
            .collect();
        if roles.len() >= 2 {
            housed.insert(&sym.symbol);
            nodes.push(concept_node(&sym.symbol, NodeKind::SharedConcept));
            for r in roles {
                edges.insert(edge(role_node_id(r), &sym.symbol));
            }
        }
    }
    let shared: BTreeSet<&str> = housed.clone();

    // layer 2
    let ids = triple_ids(script);
    for (t, id) in script.triples.iter().zip(&ids) {
        nodes.push(NetworkNode {
            id: id.clone(),
            kind: NodeKind::Triple,
            layer: 2,
            concepts: t.symbols().iter().map(|s| s.to_string()).collect(),
            role: None,
            ordinal: Some(t.ordinal),
        });
        for s in t.symbols() {
            if shared.contains(s) {
                edges.insert(edge(id, s));
            }
        }
    }

    // layer 3: concepts shared by two or more steps, not already housed
    for sym in &script.symbols {
        if housed.contains(sym.symbol.as_str()) {
            continue;
        }
        let users: Vec<&String> = script
            .triples
            .iter()
            .zip(&ids)
            .filter(|(t, _)| t.contains(&sym.symbol))
            .map(|(_, id)| id)
            .collect();
        if users.len() >= 2 {
            housed.insert(&sym.symbol);
            nodes.push(concept_node(&sym.symbol, NodeKind::UpperShared));
            for id in users {
                edges.insert(edge(id, &sym.symbol));
            }
        }
    }

    // fallback: steps without a layer-1 link attach to the role nodes
    for (t, id) in script.triples.iter().zip(&ids) {
        if !t.symbols().iter().any(|s| shared.contains(s)) {
            for role in Role::ALL {
                edges.insert(edge(id, role_node_id(role)));
            }
        }
    }

    Ok(SymNetwork {
        script: script.name.clone(),
        symbols: script.symbols.clone(),
        nodes,
        edges,
    })
}

fn concept_node(symbol: &str, kind: NodeKind) -> NetworkNode {
    NetworkNode {
        id: symbol.to_string(),
        kind,
        layer: kind.layer(),
        concepts: vec![symbol.to_string()],
        role: None,
        ordinal: None,
    }
}

/// Triple ids are the concatenated symbols; a clash with a symbol, a role
/// node or an earlier triple gets a `#<ordinal>` suffix.
fn triple_ids(script: &CplScript) -> Vec<String> {
    let mut taken: BTreeSet<String> = script.symbols.iter().map(|s| s.symbol.clone()).collect();
    taken.extend(Role::ALL.iter().map(|&r| role_node_id(r).to_string()));
    script
        .triples
        .iter()
        .map(|t| {
            let mut id = t.code();
            if taken.contains(&id) {
                id = format!("{id}#{}", t.ordinal);
            }
            taken.insert(id.clone());
            id
        })
        .collect()
}

impl SymNetwork {
    pub fn node(&self, id: &str) -> Option<&NetworkNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn layer(&self, layer: u8) -> impl Iterator<Item = &NetworkNode> {
        self.nodes.iter().filter(move |n| n.layer == layer)
    }

    pub fn layer_ids(&self, layer: u8) -> Vec<&str> {
        self.layer(layer).map(|n| n.id.as_str()).collect()
    }

    pub fn neighbors(&self, id: &str) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .edges
            .iter()
            .filter_map(|(a, b)| {
                if a == id {
                    Some(b.as_str())
                } else if b == id {
                    Some(a.as_str())
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        self.edges.contains(&edge(a, b))
    }

    pub fn label_of(&self, symbol: &str) -> Option<&str> {
        self.symbols
            .iter()
            .find(|s| s.symbol == symbol)
            .map(|s| s.label.as_str())
    }

    /// Resolves a concept label (or, failing that, a bare symbol) to its
    /// symbol.
    pub fn resolve(&self, name: &str) -> Option<&ConceptSymbol> {
        self.symbols
            .iter()
            .find(|s| s.label == name)
            .or_else(|| self.symbols.iter().find(|s| s.symbol == name))
    }

    /// The layer-1 or layer-3 node housing a concept, if any.
    pub fn node_for_concept(&self, concept: &str) -> Option<&NetworkNode> {
        let symbol = &self.resolve(concept)?.symbol;
        self.nodes
            .iter()
            .find(|n| n.kind.is_concept() && n.concepts.first() == Some(symbol))
    }

    /// Triple node for a step ordinal.
    pub fn triple_node(&self, ordinal: usize) -> Option<&NetworkNode> {
        self.nodes
            .iter()
            .find(|n| n.kind == NodeKind::Triple && n.ordinal == Some(ordinal))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub node: Option<String>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            Some(n) => write!(f, "{n}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn diag(node: Option<&str>, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        node: node.map(str::to_string),
        message: message.into(),
    }
}

/// Checks the structural invariants of a network. An empty list means the
/// network is sound.
pub fn validate(network: &SymNetwork) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let by_id: BTreeMap<&str, &NetworkNode> =
        network.nodes.iter().map(|n| (n.id.as_str(), n)).collect();
    if by_id.len() != network.nodes.len() {
        out.push(diag(None, "duplicate node ids"));
    }

    for n in &network.nodes {
        if n.layer > 3 {
            out.push(diag(
                Some(&n.id),
                format!("layer {} exceeds the four-layer bound", n.layer),
            ));
        } else if n.layer != n.kind.layer() {
            out.push(diag(
                Some(&n.id),
                format!("kind {:?} placed on layer {}", n.kind, n.layer),
            ));
        }
    }
    let roles = network.layer(0).count();
    if roles != 3 {
        out.push(diag(None, format!("expected 3 role nodes, found {roles}")));
    }

    for (a, b) in &network.edges {
        match (by_id.get(a.as_str()), by_id.get(b.as_str())) {
            (Some(x), Some(y)) => {
                let (lo, hi) = (x.layer.min(y.layer), x.layer.max(y.layer));
                if !(hi == lo + 1 || (lo == 0 && hi == 2)) {
                    out.push(diag(Some(a), format!("edge to {b} skips layers {lo}-{hi}")));
                }
            }
            _ => out.push(diag(None, format!("edge {a}-{b} has a missing endpoint"))),
        }
    }

    let role_sets: Vec<&NetworkNode> = network.layer(0).collect();
    let triples: Vec<&NetworkNode> = network.layer(2).collect();
    let l1: BTreeSet<&str> = network
        .layer(1)
        .filter_map(|n| n.concepts.first().map(String::as_str))
        .collect();

    for n in network.layer(1) {
        let Some(c) = n.concepts.first() else {
            out.push(diag(Some(&n.id), "concept node houses no concept"));
            continue;
        };
        let count = role_sets.iter().filter(|r| r.concepts.contains(c)).count();
        if count < 2 {
            out.push(diag(
                Some(&n.id),
                format!("concept {c} appears in only {count} role set(s)"),
            ));
        }
    }
    for n in network.layer(3) {
        let Some(c) = n.concepts.first() else {
            out.push(diag(Some(&n.id), "concept node houses no concept"));
            continue;
        };
        if l1.contains(c.as_str()) {
            out.push(diag(
                Some(&n.id),
                format!("concept {c} is housed in both layer 1 and layer 3"),
            ));
            continue;
        }
        let count = triples.iter().filter(|t| t.concepts.contains(c)).count();
        if count < 2 {
            out.push(diag(
                Some(&n.id),
                format!("concept {c} appears in only {count} step(s)"),
            ));
        }
    }

    // first housing node per concept, layer 1 before layer 3
    let mut home: BTreeMap<&str, &str> = BTreeMap::new();
    for n in network.layer(1).chain(network.layer(3)) {
        if let Some(c) = n.concepts.first() {
            home.entry(c.as_str()).or_insert(n.id.as_str());
        }
    }
    for n in network.nodes.iter().filter(|n| n.kind.is_concept()) {
        if let Some(c) = n.concepts.first() {
            for nb in network.neighbors(&n.id) {
                if let Some(t) = by_id.get(nb).filter(|t| t.kind == NodeKind::Triple) {
                    if !t.concepts.contains(c) {
                        out.push(diag(
                            Some(&n.id),
                            format!("linked to step {nb} that lacks {c}"),
                        ));
                    }
                }
            }
        }
    }

    for t in &triples {
        let nbrs = network.neighbors(&t.id);
        if nbrs.is_empty() {
            out.push(diag(Some(&t.id), "step node is isolated"));
            continue;
        }
        for c in &t.concepts {
            if let Some(h) = home.get(c.as_str()) {
                if !network.has_edge(&t.id, h) {
                    out.push(diag(
                        Some(&t.id),
                        format!("missing edge to concept node {h}"),
                    ));
                }
            }
        }
        let to_l1 = nbrs
            .iter()
            .any(|nb| by_id.get(nb).is_some_and(|n| n.layer == 1));
        let to_l0 = nbrs
            .iter()
            .any(|nb| by_id.get(nb).is_some_and(|n| n.layer == 0));
        if to_l0 == to_l1 {
            out.push(diag(
                Some(&t.id),
                "step must link to role nodes exactly when it has no layer-1 link",
            ));
        }
    }
    out
}

/// Counts per layer, in layer order.
pub fn layer_sizes(network: &SymNetwork) -> [usize; 4] {
    let mut sizes = [0; 4];
    for n in &network.nodes {
        if let Some(s) = sizes.get_mut(n.layer as usize) {
            *s += 1;
        }
    }
    sizes
}

/// Steps of `script` in network order, paired with their node ids.
pub fn triple_nodes<'a>(
    network: &'a SymNetwork,
    script: &'a CplScript,
) -> Vec<(&'a Triple, &'a NetworkNode)> {
    script
        .triples
        .iter()
        .filter_map(|t| network.triple_node(t.ordinal).map(|n| (t, n)))
        .collect()
}
