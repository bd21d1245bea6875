//! Cycle search, dead ends and task scheduling over a [`SymNetwork`].
//!
//! Cycles live on the subgraph of concept (layer 1/3) and step (layer 2)
//! nodes; role nodes are left out. That subgraph is bipartite, so every
//! simple cycle alternates concept and step nodes and has even length.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{NodeKind, SymNetwork};
use crate::script_io::{CplScript, Triple};

pub const DEFAULT_MAX_CYCLE_LEN: usize = 8;

/// A closed path; the edge from the last node back to the first is implied.
/// Stored canonically: starts at the least id and heads toward the lesser
/// of its two neighbours.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cycle {
    pub nodes: Vec<String>,
}

impl Cycle {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.nodes.iter().any(|n| n == id)
    }

    /// Rotation/reflection normal form of any closed path.
    pub fn canonical(nodes: Vec<String>) -> Cycle {
        let n = nodes.len();
        if n < 3 {
            return Cycle { nodes };
        }
        let start = (0..n).min_by(|&a, &b| nodes[a].cmp(&nodes[b])).unwrap_or(0);
        let next = &nodes[(start + 1) % n];
        let prev = &nodes[(start + n - 1) % n];
        let forward = next <= prev;
        let ordered = (0..n)
            .map(|i| {
                let idx = if forward {
                    (start + i) % n
                } else {
                    (start + n - i) % n
                };
                nodes[idx].clone()
            })
            .collect();
        Cycle { nodes: ordered }
    }

    /// The same cycle read from `id`, heading toward its lesser neighbour.
    pub fn starting_at(&self, id: &str) -> Option<Vec<&str>> {
        let n = self.nodes.len();
        let start = self.nodes.iter().position(|x| x == id)?;
        let next = &self.nodes[(start + 1) % n];
        let prev = &self.nodes[(start + n - 1) % n];
        let forward = next <= prev;
        Some(
            (0..n)
                .map(|i| {
                    let idx = if forward {
                        (start + i) % n
                    } else {
                        (start + n - i) % n
                    };
                    self.nodes[idx].as_str()
                })
                .collect(),
        )
    }
}

impl fmt::Display for Cycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.nodes.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("`{0}` is not a cycle concept: it has no shared-concept node")]
    NotACycleConcept(String),
}

/// Concept and step nodes with sorted adjacency, indices in id order.
pub struct CycleGraph {
    pub ids: Vec<String>,
    pub adj: Vec<Vec<usize>>,
}

impl CycleGraph {
    pub fn new(network: &SymNetwork) -> Self {
        let mut ids: Vec<String> = network
            .nodes
            .iter()
            .filter(|n| n.kind != NodeKind::RoleType)
            .map(|n| n.id.clone())
            .collect();
        ids.sort();
        let index: HashMap<&str, usize> = ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let mut adj = vec![Vec::new(); ids.len()];
        for (a, b) in &network.edges {
            if let (Some(&x), Some(&y)) = (index.get(a.as_str()), index.get(b.as_str())) {
                adj[x].push(y);
                adj[y].push(x);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        CycleGraph { ids, adj }
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.binary_search_by(|x| x.as_str().cmp(id)).ok()
    }

    fn cycle(&self, path: &[usize]) -> Cycle {
        Cycle {
            nodes: path.iter().map(|&i| self.ids[i].clone()).collect(),
        }
    }
}

/// All simple cycles of length 4..=`max_length`, sorted by length and then
/// node ids.
///
/// Each cycle is found once: from its least vertex, through larger vertices
/// only, and in the direction whose second vertex is below its last.
pub fn enumerate_cycles(network: &SymNetwork, max_length: usize) -> Vec<Cycle> {
    let graph = CycleGraph::new(network);
    let mut out = Vec::new();
    let mut path = Vec::new();
    let mut on_path = vec![false; graph.ids.len()];
    for start in 0..graph.ids.len() {
        path.push(start);
        on_path[start] = true;
        extend(&graph, start, max_length, &mut path, &mut on_path, &mut out);
        on_path[start] = false;
        path.pop();
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.nodes.cmp(&b.nodes)));
    out
}

fn extend(
    graph: &CycleGraph,
    start: usize,
    max_length: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    out: &mut Vec<Cycle>,
) {
    let last = *path.last().expect("non-empty path");
    for &next in &graph.adj[last] {
        if next == start {
            if path.len() >= 3 && path[1] < last {
                out.push(graph.cycle(path));
            }
        } else if next > start && !on_path[next] && path.len() < max_length {
            path.push(next);
            on_path[next] = true;
            extend(graph, start, max_length, path, on_path, out);
            on_path[next] = false;
            path.pop();
        }
    }
}

/// Shortest cycles through the node housing `concept`; ties are all
/// returned in canonical order. Empty when the node lies on no cycle.
pub fn shortest_cycles(network: &SymNetwork, concept: &str) -> Result<Vec<Cycle>, PathError> {
    let node = network
        .node_for_concept(concept)
        .ok_or_else(|| PathError::NotACycleConcept(concept.to_string()))?;
    let graph = CycleGraph::new(network);
    let v = graph
        .index_of(&node.id)
        .expect("concept node is in the cycle graph");
    Ok(shortest_cycles_through(&graph, v))
}

pub(crate) fn shortest_cycles_through(graph: &CycleGraph, v: usize) -> Vec<Cycle> {
    let mut limit = 3;
    while limit <= graph.ids.len() {
        let mut found = BTreeSet::new();
        let mut path = vec![v];
        let mut on_path = vec![false; graph.ids.len()];
        on_path[v] = true;
        through(graph, v, limit, &mut path, &mut on_path, &mut found);
        if !found.is_empty() {
            return found.into_iter().collect();
        }
        limit += 1;
    }
    Vec::new()
}

fn through(
    graph: &CycleGraph,
    v: usize,
    length: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    found: &mut BTreeSet<Cycle>,
) {
    let last = *path.last().expect("non-empty path");
    for &next in &graph.adj[last] {
        if next == v && path.len() == length {
            let ids = path.iter().map(|&i| graph.ids[i].clone()).collect();
            found.insert(Cycle::canonical(ids));
        } else if !on_path[next] && path.len() < length {
            path.push(next);
            on_path[next] = true;
            through(graph, v, length, path, on_path, found);
            on_path[next] = false;
            path.pop();
        }
    }
}

/// Step nodes lying on no cycle at all, in network order.
///
/// A vertex lies on a simple cycle iff one of its edges is not a bridge.
pub fn dead_ends(network: &SymNetwork) -> Vec<String> {
    let graph = CycleGraph::new(network);
    let on_cycle = vertices_on_cycles(&graph);
    network
        .layer(2)
        .filter(|n| graph.index_of(&n.id).is_some_and(|i| !on_cycle[i]))
        .map(|n| n.id.clone())
        .collect()
}

fn vertices_on_cycles(graph: &CycleGraph) -> Vec<bool> {
    let n = graph.ids.len();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut timer = 0;
    let mut bridges: BTreeSet<(usize, usize)> = BTreeSet::new();

    fn dfs(
        graph: &CycleGraph,
        u: usize,
        parent: Option<usize>,
        disc: &mut [usize],
        low: &mut [usize],
        timer: &mut usize,
        bridges: &mut BTreeSet<(usize, usize)>,
    ) {
        disc[u] = *timer;
        low[u] = *timer;
        *timer += 1;
        for &w in &graph.adj[u] {
            if Some(w) == parent {
                continue;
            }
            if disc[w] == usize::MAX {
                dfs(graph, w, Some(u), disc, low, timer, bridges);
                low[u] = low[u].min(low[w]);
                if low[w] > disc[u] {
                    bridges.insert((u.min(w), u.max(w)));
                }
            } else {
                low[u] = low[u].min(disc[w]);
            }
        }
    }

    for v in 0..n {
        if disc[v] == usize::MAX {
            dfs(
                graph,
                v,
                None,
                &mut disc,
                &mut low,
                &mut timer,
                &mut bridges,
            );
        }
    }
    (0..n)
        .map(|u| {
            graph.adj[u]
                .iter()
                .any(|&w| !bridges.contains(&(u.min(w), u.max(w))))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleStep {
    pub index: usize,
    /// Ordinal of the step's triple in its script.
    pub triple_ref: usize,
    /// Symbols first realized here, in source, effector, object order.
    pub realized: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub steps: Vec<ScheduleStep>,
    /// Concepts not realized by any step; they count as realized once the
    /// steps have run.
    pub realized_at_end: Vec<String>,
    pub final_marker: bool,
}

/// Orders the acquisition steps that bring every concept into play.
///
/// A leaf is a concept used by one step and housed in no shared-concept
/// node; each step holding a leaf is an acquisition step. Every other
/// concept is provided by the acquisition step containing it with the most
/// leaves (lowest ordinal on ties). Walking the script in order, a step
/// first pulls in the providers of the concepts it needs that are not yet
/// realized, and is then emitted itself if it is an acquisition step. Each
/// emitted step lists its not-yet-realized concepts as source, effector,
/// object.
pub fn derive_schedule(network: &SymNetwork, script: &CplScript) -> Schedule {
    let housed: BTreeSet<&str> = network
        .nodes
        .iter()
        .filter(|n| n.kind.is_concept())
        .filter_map(|n| n.concepts.first().map(String::as_str))
        .collect();
    let leaves: BTreeSet<&str> = script
        .symbols
        .iter()
        .map(|s| s.symbol.as_str())
        .filter(|s| {
            !housed.contains(s) && script.triples.iter().filter(|t| t.contains(s)).count() == 1
        })
        .collect();
    let leaf_counts: Vec<usize> = script
        .triples
        .iter()
        .map(|t| t.symbols().iter().filter(|s| leaves.contains(*s)).count())
        .collect();
    let mut providers: HashMap<&str, usize> = HashMap::new();
    for (i, t) in script.triples.iter().enumerate() {
        if leaf_counts[i] == 0 {
            continue;
        }
        for s in t.symbols() {
            if leaves.contains(s) {
                continue;
            }
            let best = providers.entry(s).or_insert(i);
            if leaf_counts[i] > leaf_counts[*best] {
                *best = i;
            }
        }
    }

    struct Walk<'a> {
        triples: &'a [Triple],
        leaves: &'a BTreeSet<&'a str>,
        leaf_counts: &'a [usize],
        providers: &'a HashMap<&'a str, usize>,
        state: Vec<u8>, // 0 fresh, 1 visiting, 2 done
        realized: BTreeSet<String>,
        steps: Vec<ScheduleStep>,
    }

    impl Walk<'_> {
        fn visit(&mut self, i: usize) {
            if self.state[i] != 0 {
                return;
            }
            self.state[i] = 1;
            let t = &self.triples[i];
            for s in t.symbols() {
                if self.realized.contains(s) || self.leaves.contains(s) {
                    continue;
                }
                if let Some(&j) = self.providers.get(s) {
                    if j != i {
                        self.visit(j);
                    }
                }
            }
            if self.leaf_counts[i] > 0 {
                let realized: Vec<String> = [&t.source, &t.effector, &t.object]
                    .into_iter()
                    .filter(|s| !self.realized.contains(s.as_str()))
                    .cloned()
                    .collect();
                self.realized.extend(realized.iter().cloned());
                self.steps.push(ScheduleStep {
                    index: self.steps.len() + 1,
                    triple_ref: t.ordinal,
                    realized,
                });
            }
            self.state[i] = 2;
        }
    }

    let mut walk = Walk {
        triples: &script.triples,
        leaves: &leaves,
        leaf_counts: &leaf_counts,
        providers: &providers,
        state: vec![0; script.triples.len()],
        realized: BTreeSet::new(),
        steps: Vec::new(),
    };
    for i in 0..script.triples.len() {
        walk.visit(i);
    }
    let realized_at_end = script
        .symbols
        .iter()
        .map(|s| s.symbol.clone())
        .filter(|s| !walk.realized.contains(s) && script.triples.iter().any(|t| t.contains(s)))
        .collect();
    Schedule {
        steps: walk.steps,
        realized_at_end,
        final_marker: true,
    }
}
