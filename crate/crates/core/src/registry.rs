//! Types layer linking every concept type to its instances in the ensemble
//! store, the concept trees and a process network.
//!
//! A registry is a snapshot: rebuild it after the stores change.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::concept_tree::{self, ConceptTreeStore};
use crate::ensemble::{self, EnsembleStore};
use crate::network::SymNetwork;
use crate::paths::{shortest_cycles_through, Cycle, CycleGraph};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeEntry {
    pub concept_label: String,
    pub ensemble_refs: Vec<ensemble::NodeId>,
    pub tree_refs: Vec<concept_tree::NodeId>,
    /// Shared-concept node housing the type, if any.
    pub network_ref: Option<String>,
    /// Symbol used for the type in the network's script.
    pub symbol: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registry {
    entries: BTreeMap<String, TypeEntry>,
    /// Script symbol -> label.
    symbols: BTreeMap<String, String>,
    network: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivationResult {
    pub concept_label: String,
    pub known: bool,
    pub ensemble: Vec<ensemble::NodeId>,
    pub trees: Vec<concept_tree::NodeId>,
    pub network: Option<String>,
}

impl ActivationResult {
    pub fn instance_count(&self) -> usize {
        self.ensemble.len() + self.trees.len() + usize::from(self.network.is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HornQueryResult {
    pub requested: Vec<String>,
    pub covering_cycles: Vec<Cycle>,
    pub instance_bindings: Vec<ActivationResult>,
    pub complete: bool,
}

impl Registry {
    pub fn rebuild(
        ensembles: &EnsembleStore,
        trees: &ConceptTreeStore,
        network: Option<&SymNetwork>,
    ) -> Registry {
        fn entry<'a>(
            entries: &'a mut BTreeMap<String, TypeEntry>,
            label: &str,
        ) -> &'a mut TypeEntry {
            entries
                .entry(label.to_string())
                .or_insert_with(|| TypeEntry {
                    concept_label: label.to_string(),
                    ensemble_refs: Vec::new(),
                    tree_refs: Vec::new(),
                    network_ref: None,
                    symbol: None,
                })
        }
        let mut entries = BTreeMap::new();
        for id in ensembles.preorder() {
            entry(&mut entries, &ensembles.node(id).concept_label)
                .ensemble_refs
                .push(id);
        }
        for id in trees.preorder() {
            entry(&mut entries, &trees.node(id).concept_label)
                .tree_refs
                .push(id);
        }
        let mut symbols = BTreeMap::new();
        if let Some(net) = network {
            for sym in &net.symbols {
                symbols.insert(sym.symbol.clone(), sym.label.clone());
                let e = entry(&mut entries, &sym.label);
                e.symbol = Some(sym.symbol.clone());
                e.network_ref = net.node_for_concept(&sym.symbol).map(|n| n.id.clone());
            }
        }
        Registry {
            entries,
            symbols,
            network: network.map(|n| n.script.clone()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = &TypeEntry> {
        self.entries.values()
    }

    /// Name of the script whose network was linked in.
    pub fn network(&self) -> Option<&str> {
        self.network.as_deref()
    }

    /// Looks a type up by label, falling back to a script symbol.
    pub fn entry(&self, name: &str) -> Option<&TypeEntry> {
        self.entries.get(name).or_else(|| {
            self.symbols
                .get(name)
                .and_then(|label| self.entries.get(label))
        })
    }

    /// Every instance of the type, in every module.
    pub fn activate(&self, name: &str) -> ActivationResult {
        match self.entry(name) {
            Some(e) => ActivationResult {
                concept_label: e.concept_label.clone(),
                known: true,
                ensemble: e.ensemble_refs.clone(),
                trees: e.tree_refs.clone(),
                network: e.network_ref.clone(),
            },
            None => ActivationResult {
                concept_label: name.to_string(),
                known: false,
                ensemble: Vec::new(),
                trees: Vec::new(),
                network: None,
            },
        }
    }

    /// Finds shortest cycles covering the requested types and binds each
    /// known type to its instances.
    ///
    /// Candidate cycles are the shortest cycles of each housed type; they are
    /// picked greedily, most uncovered types first, then shorter, then
    /// canonical order.
    pub fn query_horn<S: AsRef<str>>(
        &self,
        network: &SymNetwork,
        concepts: &[S],
    ) -> HornQueryResult {
        let requested: Vec<String> = concepts.iter().map(|c| c.as_ref().to_string()).collect();
        let instance_bindings: Vec<ActivationResult> = requested
            .iter()
            .map(|c| self.activate(c))
            .filter(|a| a.known)
            .collect();

        let housed: Vec<Option<String>> = requested
            .iter()
            .map(|c| self.entry(c).and_then(|e| e.network_ref.clone()))
            .collect();
        let graph = CycleGraph::new(network);
        let mut candidates: BTreeSet<Cycle> = BTreeSet::new();
        for id in housed.iter().flatten() {
            if let Some(v) = graph.index_of(id) {
                candidates.extend(shortest_cycles_through(&graph, v));
            }
        }

        let mut uncovered: BTreeSet<&str> = housed.iter().flatten().map(String::as_str).collect();
        let mut covering_cycles = Vec::new();
        while !uncovered.is_empty() {
            let best = candidates
                .iter()
                .map(|c| (c, uncovered.iter().filter(|id| c.contains(id)).count()))
                .filter(|(_, n)| *n > 0)
                .min_by(|(a, na), (b, nb)| nb.cmp(na).then(a.len().cmp(&b.len())).then(a.cmp(b)));
            let Some((cycle, _)) = best else { break };
            let cycle = cycle.clone();
            uncovered.retain(|id| !cycle.contains(id));
            candidates.remove(&cycle);
            covering_cycles.push(cycle);
        }

        let complete =
            !requested.is_empty() && housed.iter().all(Option::is_some) && uncovered.is_empty();
        HornQueryResult {
            requested,
            covering_cycles,
            instance_bindings,
            complete,
        }
    }
}
