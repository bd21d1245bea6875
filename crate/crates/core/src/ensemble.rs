//! Bottom-level store: nested structures kept exactly as presented.
//!
//! Matching is on label value. One level may hold several children with the
//! same label, so containment is decided by an injective child matching
//! rather than by label lookup.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::script_io::{OntologyPart, PartNode};
use crate::{format_keys, LinkKey, MergeKind, MergeReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleNode {
    pub concept_label: String,
    pub children: Vec<NodeId>,
    pub keys: BTreeSet<LinkKey>,
    pub parent: Option<NodeId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleStore {
    nodes: Vec<EnsembleNode>,
    roots: Vec<NodeId>,
}

impl EnsembleStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn roots(&self) -> &[NodeId] {
        &self.roots
    }

    pub fn node(&self, id: NodeId) -> &EnsembleNode {
        &self.nodes[id.0 as usize]
    }

    pub fn get(&self, id: NodeId) -> Option<&EnsembleNode> {
        self.nodes.get(id.0 as usize)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Absorbs one presented part.
    ///
    /// Parts merge into the root carrying the same label: without new nodes
    /// when the whole part already embeds there, otherwise by extending the
    /// shared prefix. Parts with an unseen root label start a new root.
    pub fn add_part(&mut self, part: &OntologyPart) -> MergeReport {
        let key = &part.link_key;
        let target = self
            .roots
            .iter()
            .copied()
            .find(|&r| self.node(r).concept_label == part.root.label);

        let Some(root) = target else {
            let id = self.insert_subtree(&part.root, None, key);
            self.roots.push(id);
            return MergeReport {
                nodes_created: part.root.size(),
                nodes_key_extended: 0,
                merge_kind: MergeKind::NewRoot,
            };
        };

        if let Some(image) = self.embed(&part.root, root) {
            let extended = image
                .into_iter()
                .filter(|&id| self.nodes[id.0 as usize].keys.insert(key.clone()))
                .count();
            return MergeReport {
                nodes_created: 0,
                nodes_key_extended: extended,
                merge_kind: MergeKind::Contained,
            };
        }

        let mut report = MergeReport {
            nodes_created: 0,
            nodes_key_extended: 0,
            merge_kind: MergeKind::Overlapped,
        };
        self.merge_into(&part.root, root, key, &mut report);
        report
    }

    fn insert_subtree(&mut self, part: &PartNode, parent: Option<NodeId>, key: &LinkKey) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(EnsembleNode {
            concept_label: part.label.clone(),
            children: Vec::new(),
            keys: BTreeSet::from([key.clone()]),
            parent,
        });
        for child in &part.children {
            let c = self.insert_subtree(child, Some(id), key);
            self.nodes[id.0 as usize].children.push(c);
        }
        id
    }

    fn merge_into(&mut self, part: &PartNode, at: NodeId, key: &LinkKey, report: &mut MergeReport) {
        if self.nodes[at.0 as usize].keys.insert(key.clone()) {
            report.nodes_key_extended += 1;
        }
        let mut used: Vec<NodeId> = Vec::new();
        for child in &part.children {
            let candidates: Vec<NodeId> = self
                .node(at)
                .children
                .iter()
                .copied()
                .filter(|c| !used.contains(c) && self.node(*c).concept_label == child.label)
                .collect();
            let chosen = candidates
                .iter()
                .copied()
                .find(|&c| self.embed(child, c).is_some())
                .or_else(|| candidates.first().copied());
            match chosen {
                Some(c) => {
                    used.push(c);
                    self.merge_into(child, c, key, report);
                }
                None => {
                    let c = self.insert_subtree(child, Some(at), key);
                    self.nodes[at.0 as usize].children.push(c);
                    used.push(c);
                    report.nodes_created += child.size();
                }
            }
        }
    }

    /// Image of `part` when it embeds at `at` (labels equal, children
    /// matched injectively and recursively), in pre-order of the part.
    pub fn embed(&self, part: &PartNode, at: NodeId) -> Option<Vec<NodeId>> {
        let node = self.node(at);
        if node.concept_label != part.label {
            return None;
        }
        // candidate images per part child
        let options: Vec<Vec<(NodeId, Vec<NodeId>)>> = part
            .children
            .iter()
            .map(|pc| {
                node.children
                    .iter()
                    .filter_map(|&sc| self.embed(pc, sc).map(|img| (sc, img)))
                    .collect()
            })
            .collect();
        let assignment = match_children(&options, node.children.len(), &node.children)?;
        let mut image = vec![at];
        for (i, slot) in assignment.into_iter().enumerate() {
            let (_, img) = options[i]
                .iter()
                .find(|(sc, _)| *sc == slot)
                .expect("assigned option");
            image.extend_from_slice(img);
        }
        Some(image)
    }

    /// Does the part embed in some root, with its key on every image node?
    pub fn holds_exactly(&self, part: &OntologyPart) -> bool {
        // Key-aware variant of `embed`: restrict to nodes carrying the key.
        fn walk(store: &EnsembleStore, part: &PartNode, at: NodeId, key: &LinkKey) -> bool {
            let node = store.node(at);
            if node.concept_label != part.label || !node.keys.contains(key) {
                return false;
            }
            let options: Vec<Vec<(NodeId, Vec<NodeId>)>> = part
                .children
                .iter()
                .map(|pc| {
                    node.children
                        .iter()
                        .filter(|&&sc| walk(store, pc, sc, key))
                        .map(|&sc| (sc, Vec::new()))
                        .collect()
                })
                .collect();
            match_children(&options, node.children.len(), &node.children).is_some()
        }
        self.roots
            .iter()
            .any(|&r| walk(self, &part.root, r, &part.link_key))
    }

    /// Every node labelled `concept_label`, roots in order, each tree in
    /// pre-order.
    pub fn find_instances(&self, concept_label: &str) -> Vec<NodeId> {
        self.preorder()
            .into_iter()
            .filter(|&id| self.node(id).concept_label == concept_label)
            .collect()
    }

    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        for &r in &self.roots {
            self.collect(r, &mut out);
        }
        out
    }

    fn collect(&self, id: NodeId, out: &mut Vec<NodeId>) {
        out.push(id);
        for &c in &self.node(id).children {
            self.collect(c, out);
        }
    }

    pub fn depth(&self, id: NodeId) -> usize {
        let mut depth = 0;
        let mut cur = self.node(id).parent;
        while let Some(p) = cur {
            depth += 1;
            cur = self.node(p).parent;
        }
        depth
    }

    /// Labels from the root down to `id`.
    pub fn path(&self, id: NodeId) -> Vec<&str> {
        let mut path = vec![self.node(id).concept_label.as_str()];
        let mut cur = self.node(id).parent;
        while let Some(p) = cur {
            path.push(self.node(p).concept_label.as_str());
            cur = self.node(p).parent;
        }
        path.reverse();
        path
    }

    pub fn all_keys(&self) -> BTreeSet<LinkKey> {
        self.nodes
            .iter()
            .flat_map(|n| n.keys.iter().cloned())
            .collect()
    }

    /// Indented labels, two spaces per level; a single ingested part renders
    /// exactly as its ontology body.
    pub fn render_view(&self) -> String {
        self.render(false)
    }

    /// Same as [`render_view`](Self::render_view) with each node's key set.
    pub fn render_keyed(&self) -> String {
        self.render(true)
    }

    fn render(&self, keys: bool) -> String {
        let mut out = String::new();
        for id in self.preorder() {
            let node = self.node(id);
            let _ = write!(
                out,
                "{:width$}{}",
                "",
                node.concept_label,
                width = self.depth(id) * 2
            );
            if keys {
                let _ = write!(out, " {}", format_keys(&node.keys));
            }
            out.push('\n');
        }
        out
    }
}

/// Kuhn's augmenting-path matching of part children onto store children.
/// Returns the chosen store child for each part child.
fn match_children(
    options: &[Vec<(NodeId, Vec<NodeId>)>],
    slots: usize,
    slot_ids: &[NodeId],
) -> Option<Vec<NodeId>> {
    if options.len() > slots {
        return None;
    }
    let slot_index = |id: NodeId| slot_ids.iter().position(|&s| s == id).expect("child slot");
    let mut owner: Vec<Option<usize>> = vec![None; slots];

    fn augment(
        i: usize,
        options: &[Vec<(NodeId, Vec<NodeId>)>],
        owner: &mut [Option<usize>],
        seen: &mut [bool],
        slot_index: &dyn Fn(NodeId) -> usize,
    ) -> bool {
        for (sc, _) in &options[i] {
            let s = slot_index(*sc);
            if seen[s] {
                continue;
            }
            seen[s] = true;
            if owner[s].is_none() || augment(owner[s].unwrap(), options, owner, seen, slot_index) {
                owner[s] = Some(i);
                return true;
            }
        }
        false
    }

    for i in 0..options.len() {
        let mut seen = vec![false; slots];
        if !augment(i, options, &mut owner, &mut seen, &slot_index) {
            return None;
        }
    }
    let mut assignment = vec![NodeId(0); options.len()];
    for (s, o) in owner.iter().enumerate() {
        if let Some(i) = o {
            assignment[*i] = slot_ids[s];
        }
    }
    Some(assignment)
}
