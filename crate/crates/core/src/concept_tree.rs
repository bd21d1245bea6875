//! Middle-level store: one tree per event, same-typed siblings aggregated
//! into a single node, and trees merged only when one is wholly contained
//! in the other.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::script_io::{OntologyPart, PartNode};
use crate::{format_keys, LinkKey, MergeKind, MergeReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptTreeNode {
    pub concept_label: String,
    pub children: Vec<NodeId>,
    pub keys: BTreeSet<LinkKey>,
    pub parent: Option<NodeId>,
    /// Directed links left behind when a child was re-rooted.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub references: Vec<NodeId>,
}

impl ConceptTreeNode {
    /// Number of events whose path includes this node.
    pub fn count(&self) -> usize {
        self.keys.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountingViolation {
    pub parent: NodeId,
    pub child: NodeId,
    pub parent_count: usize,
    pub child_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RestructureError {
    #[error("violation is stale: the counts or the parent link changed since it was checked")]
    Stale,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptTreeStore {
    nodes: Vec<ConceptTreeNode>,
    trees: Vec<NodeId>,
}

impl ConceptTreeStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn trees(&self) -> &[NodeId] {
        &self.trees
    }

    pub fn node(&self, id: NodeId) -> &ConceptTreeNode {
        &self.nodes[id.0 as usize]
    }

    pub fn get(&self, id: NodeId) -> Option<&ConceptTreeNode> {
        self.nodes.get(id.0 as usize)
    }

    fn node_mut(&mut self, id: NodeId) -> &mut ConceptTreeNode {
        &mut self.nodes[id.0 as usize]
    }

    /// Count of nodes reachable from the roots.
    pub fn len(&self) -> usize {
        self.preorder().len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Adds one event.
    ///
    /// The event merges into the first tree that contains it. Otherwise every
    /// tree it contains is folded into it, the first of them growing in place
    /// so its node ids survive. With no containment either way it becomes a
    /// separate tree.
    pub fn add_event(&mut self, part: &OntologyPart) -> MergeReport {
        let event = aggregate(&part.root);
        let key = &part.link_key;

        for ti in 0..self.trees.len() {
            let root = self.trees[ti];
            if let Some(image) = self.find_embedding(&event, root) {
                let before = self.key_holders(root, key);
                for id in image {
                    self.node_mut(id).keys.insert(key.clone());
                }
                self.close_keys(root);
                let after = self.key_holders(root, key);
                return MergeReport {
                    nodes_created: 0,
                    nodes_key_extended: after - before,
                    merge_kind: MergeKind::Contained,
                };
            }
        }

        let contained: Vec<usize> = (0..self.trees.len())
            .filter(|&ti| embed_tree_in_part(self, self.trees[ti], &event))
            .collect();

        if contained.is_empty() {
            let root = self.insert_subtree(&event, None, key);
            self.trees.push(root);
            return MergeReport {
                nodes_created: event.size(),
                nodes_key_extended: 0,
                merge_kind: MergeKind::NewRoot,
            };
        }

        let grown = self.trees[contained[0]];
        let arena_before = self.nodes.len();
        let holders_before = self.key_holders(grown, key);
        let new_root = self.grow(grown, &event, key);
        self.trees[contained[0]] = new_root;
        let absorbed: Vec<NodeId> = contained[1..].iter().map(|&ti| self.trees[ti]).collect();
        for &other in &absorbed {
            self.absorb(other, new_root);
        }
        self.trees.retain(|t| !absorbed.contains(t));
        self.close_keys(new_root);

        let mut reachable = Vec::new();
        self.collect(new_root, &mut reachable);
        let created = reachable
            .iter()
            .filter(|id| id.0 as usize >= arena_before)
            .count();
        let extended = reachable
            .iter()
            .filter(|id| (id.0 as usize) < arena_before && self.node(**id).keys.contains(key))
            .count()
            - holders_before;
        if !absorbed.is_empty() {
            self.compact();
        }
        MergeReport {
            nodes_created: created,
            nodes_key_extended: extended,
            merge_kind: MergeKind::Contained,
        }
    }

    fn key_holders(&self, root: NodeId, key: &LinkKey) -> usize {
        let mut out = Vec::new();
        self.collect(root, &mut out);
        out.into_iter()
            .filter(|&id| self.node(id).keys.contains(key))
            .count()
    }

    fn insert_subtree(&mut self, part: &PartNode, parent: Option<NodeId>, key: &LinkKey) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(ConceptTreeNode {
            concept_label: part.label.clone(),
            children: Vec::new(),
            keys: BTreeSet::from([key.clone()]),
            parent,
            references: Vec::new(),
        });
        for child in &part.children {
            let c = self.insert_subtree(child, Some(id), key);
            self.node_mut(id).children.push(c);
        }
        id
    }

    /// First node of `root`'s tree (pre-order) where `part` embeds, with the
    /// embedding's image.
    fn find_embedding(&self, part: &PartNode, root: NodeId) -> Option<Vec<NodeId>> {
        let mut order = Vec::new();
        self.collect(root, &mut order);
        order.into_iter().find_map(|at| {
            let mut image = Vec::new();
            self.embed_at(part, at, &mut image).then_some(image)
        })
    }

    fn embed_at(&self, part: &PartNode, at: NodeId, image: &mut Vec<NodeId>) -> bool {
        let node = self.node(at);
        if node.concept_label != part.label {
            return false;
        }
        image.push(at);
        part.children.iter().all(|pc| {
            self.child_by_label(at, &pc.label)
                .is_some_and(|sc| self.embed_at(pc, sc, image))
        })
    }

    fn child_by_label(&self, at: NodeId, label: &str) -> Option<NodeId> {
        self.node(at)
            .children
            .iter()
            .copied()
            .find(|&c| self.node(c).concept_label == label)
    }

    /// Rebuilds the tree rooted at `existing` to the shape of `event`, which
    /// contains it. Existing nodes are reused; returns the (possibly new)
    /// root.
    fn grow(&mut self, existing: NodeId, event: &PartNode, key: &LinkKey) -> NodeId {
        let path = anchor_path(self, existing, event).expect("caller checked containment");
        // Walk the event down the anchor path, creating ancestors as needed.
        let mut current_part = event;
        let mut parent: Option<NodeId> = None;
        let mut root = None;
        // the path child keeps its position among the event's children
        let mut slot = 0;
        for &child_index in &path {
            let id = NodeId(self.nodes.len() as u32);
            self.nodes.push(ConceptTreeNode {
                concept_label: current_part.label.clone(),
                children: Vec::new(),
                keys: BTreeSet::from([key.clone()]),
                parent,
                references: Vec::new(),
            });
            if let Some(p) = parent {
                self.node_mut(p).children.insert(slot, id);
            }
            root.get_or_insert(id);
            for (i, sibling) in current_part.children.iter().enumerate() {
                if i == child_index {
                    continue;
                }
                let s = self.insert_subtree(sibling, Some(id), key);
                self.node_mut(id).children.push(s);
            }
            parent = Some(id);
            slot = child_index;
            current_part = &current_part.children[child_index];
        }
        if let Some(p) = parent {
            self.node_mut(p).children.insert(slot, existing);
            self.node_mut(existing).parent = Some(p);
        }
        self.merge_into(current_part, existing, key);
        root.unwrap_or(existing)
    }

    fn merge_into(&mut self, part: &PartNode, at: NodeId, key: &LinkKey) {
        self.node_mut(at).keys.insert(key.clone());
        for child in &part.children {
            match self.child_by_label(at, &child.label) {
                Some(c) => self.merge_into(child, c, key),
                None => {
                    let c = self.insert_subtree(child, Some(at), key);
                    self.node_mut(at).children.push(c);
                }
            }
        }
    }

    /// Folds tree `other` into `into`, where it embeds; key sets union.
    fn absorb(&mut self, other: NodeId, into: NodeId) {
        let shape = self.shape(other);
        let image = self
            .find_embedding(&shape, into)
            .expect("absorbed tree embeds in the grown tree");
        let mut order = Vec::new();
        self.collect(other, &mut order);
        for (src, dst) in order.into_iter().zip(image) {
            let keys = self.node(src).keys.clone();
            let refs = self.node(src).references.clone();
            let node = self.node_mut(dst);
            node.keys.extend(keys);
            for r in refs {
                if !node.references.contains(&r) {
                    node.references.push(r);
                }
            }
        }
    }

    fn shape(&self, id: NodeId) -> PartNode {
        PartNode::with(
            self.node(id).concept_label.clone(),
            self.node(id)
                .children
                .iter()
                .map(|&c| self.shape(c))
                .collect(),
        )
    }

    /// Every node's key set becomes a superset of its children's.
    fn close_keys(&mut self, id: NodeId) {
        let children = self.node(id).children.clone();
        for &c in &children {
            self.close_keys(c);
        }
        let mut keys = self.node(id).keys.clone();
        for &c in &children {
            keys.extend(self.node(c).keys.iter().cloned());
        }
        self.node_mut(id).keys = keys;
    }

    /// Renumbers reachable nodes in pre-order and drops the rest.
    fn compact(&mut self) {
        let order = self.preorder();
        let mut remap = vec![None; self.nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old.0 as usize] = Some(NodeId(new as u32));
        }
        let map = |id: NodeId| remap[id.0 as usize];
        let nodes = order
            .iter()
            .map(|&old| {
                let n = self.node(old);
                ConceptTreeNode {
                    concept_label: n.concept_label.clone(),
                    children: n.children.iter().filter_map(|&c| map(c)).collect(),
                    keys: n.keys.clone(),
                    parent: n.parent.and_then(map),
                    references: n.references.iter().filter_map(|&r| map(r)).collect(),
                }
            })
            .collect();
        self.trees = self.trees.iter().filter_map(|&t| map(t)).collect();
        self.nodes = nodes;
    }

    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        for &t in &self.trees {
            self.collect(t, &mut out);
        }
        out
    }

    fn collect(&self, id: NodeId, out: &mut Vec<NodeId>) {
        out.push(id);
        for &c in &self.node(id).children {
            self.collect(c, out);
        }
    }

    /// Every node labelled `concept_label`, trees in order, pre-order within
    /// each tree.
    pub fn find_nodes(&self, concept_label: &str) -> Vec<NodeId> {
        self.preorder()
            .into_iter()
            .filter(|&id| self.node(id).concept_label == concept_label)
            .collect()
    }

    pub fn root_of(&self, id: NodeId) -> NodeId {
        let mut cur = id;
        while let Some(p) = self.node(cur).parent {
            cur = p;
        }
        cur
    }

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

    /// Adds keys to one node without propagating them, as an external
    /// source of links would. Can break the counting rule.
    pub fn inject_keys(&mut self, id: NodeId, keys: impl IntoIterator<Item = LinkKey>) {
        self.node_mut(id).keys.extend(keys);
    }

    /// Parent/child pairs where the child occurs more often than its parent.
    pub fn check_counting_rule(&self) -> Vec<CountingViolation> {
        self.preorder()
            .into_iter()
            .flat_map(|p| {
                let parent = self.node(p);
                parent.children.iter().filter_map(move |&c| {
                    let child = self.node(c);
                    (child.count() > parent.count()).then_some(CountingViolation {
                        parent: p,
                        child: c,
                        parent_count: parent.count(),
                        child_count: child.count(),
                    })
                })
            })
            .collect()
    }

    /// Turns the offending child into a base concept: its subtree becomes a
    /// new tree and the old parent keeps a reference link to it.
    pub fn restructure(
        &mut self,
        violation: &CountingViolation,
    ) -> Result<MergeReport, RestructureError> {
        let CountingViolation {
            parent,
            child,
            parent_count,
            child_count,
        } = *violation;
        let (Some(p), Some(c)) = (self.get(parent), self.get(child)) else {
            return Err(RestructureError::Stale);
        };
        if c.parent != Some(parent)
            || !p.children.contains(&child)
            || p.count() != parent_count
            || c.count() != child_count
            || child_count <= parent_count
        {
            return Err(RestructureError::Stale);
        }
        self.node_mut(parent).children.retain(|&x| x != child);
        self.node_mut(parent).references.push(child);
        self.node_mut(child).parent = None;
        self.trees.push(child);
        Ok(MergeReport {
            nodes_created: 0,
            nodes_key_extended: 0,
            merge_kind: MergeKind::NewRoot,
        })
    }

    /// Listing with one block per tree, keys in brackets, reference
    /// links as `-> label`.
    pub fn render_view(&self) -> String {
        let mut out = String::new();
        for (i, &t) in self.trees.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            self.render_node(t, 0, &mut out);
        }
        out
    }

    fn render_node(&self, id: NodeId, level: usize, out: &mut String) {
        let node = self.node(id);
        let _ = writeln!(
            out,
            "{:width$}{} {}",
            "",
            node.concept_label,
            format_keys(&node.keys),
            width = level * 2
        );
        for &c in &node.children {
            self.render_node(c, level + 1, out);
        }
        for &r in &node.references {
            let _ = writeln!(
                out,
                "{:width$}-> {}",
                "",
                self.node(r).concept_label,
                width = (level + 1) * 2
            );
        }
    }
}

/// Collapses same-labelled siblings into one node, recursively.
fn aggregate(part: &PartNode) -> PartNode {
    let mut out = PartNode::leaf(part.label.clone());
    for child in &part.children {
        let child = aggregate(child);
        match out.children.iter_mut().find(|c| c.label == child.label) {
            Some(existing) => {
                *existing = aggregate(&PartNode::with(
                    existing.label.clone(),
                    existing
                        .children
                        .iter()
                        .cloned()
                        .chain(child.children)
                        .collect(),
                ))
            }
            None => out.children.push(child),
        }
    }
    out
}

fn embed_tree_in_part(store: &ConceptTreeStore, tree: NodeId, event: &PartNode) -> bool {
    anchor_path(store, tree, event).is_some()
}

/// Child-index path from the event root to the first node (pre-order) where
/// the stored tree rooted at `tree` embeds.
fn anchor_path(store: &ConceptTreeStore, tree: NodeId, event: &PartNode) -> Option<Vec<usize>> {
    fn tree_embeds(store: &ConceptTreeStore, id: NodeId, part: &PartNode) -> bool {
        let node = store.node(id);
        node.concept_label == part.label
            && node.children.iter().all(|&c| {
                let label = &store.node(c).concept_label;
                part.children
                    .iter()
                    .find(|pc| &pc.label == label)
                    .is_some_and(|pc| tree_embeds(store, c, pc))
            })
    }
    fn search(
        store: &ConceptTreeStore,
        tree: NodeId,
        part: &PartNode,
        path: &mut Vec<usize>,
    ) -> bool {
        if tree_embeds(store, tree, part) {
            return true;
        }
        for (i, child) in part.children.iter().enumerate() {
            path.push(i);
            if search(store, tree, child, path) {
                return true;
            }
            path.pop();
        }
        false
    }
    let mut path = Vec::new();
    search(store, tree, event, &mut path).then_some(path)
}
