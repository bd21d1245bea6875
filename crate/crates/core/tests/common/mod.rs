//! Generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use cogweave::{ConceptTreeStore, CplScript, OntologyPart, PartNode, SymNetwork};
use rand::seq::SliceRandom;
use rand::Rng;

pub const EGG: &str = include_str!("../../examples/cook_an_egg.cpl");
pub const CAR: &str = include_str!("../../examples/drive_a_car.cpl");
pub const HOLIDAY: &str = include_str!("../../examples/book_a_holiday.cpl");
pub const SMART_HOME: &str = include_str!("../../examples/smart_home.ont");

pub fn examples_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("examples")
}

// ---- random inputs ----

/// A random part over `alphabet` labels, at most `max_depth` levels deep.
pub fn random_part_node<R: Rng>(rng: &mut R, alphabet: usize, max_depth: usize) -> PartNode {
    let label = format!("c{}", rng.gen_range(0..alphabet));
    if max_depth <= 1 {
        return PartNode::leaf(label);
    }
    let n = match rng.gen_range(0..10) {
        0..=3 => 0,
        4..=7 => 1,
        8 => 2,
        _ => 3,
    };
    let children = (0..n)
        .map(|_| random_part_node(rng, alphabet, max_depth - 1))
        .collect();
    PartNode::with(label, children)
}

/// A sequence of keyed parts. Roots come from a small pool so that parts
/// often share a root and exercise merging.
pub fn random_part_sequence<R: Rng>(
    rng: &mut R,
    alphabet: usize,
    max_depth: usize,
) -> Vec<OntologyPart> {
    let len = rng.gen_range(1..=8);
    (0..len)
        .map(|i| {
            let mut root = random_part_node(rng, alphabet, max_depth);
            if rng.gen_bool(0.7) {
                root.label = format!("c{}", rng.gen_range(0..3.min(alphabet)));
            }
            OntologyPart::new(format!("Link_{}", i + 1), i as u64 + 1, root)
        })
        .collect()
}

/// CPL text for a random script: distinct symbols per step, no repeated
/// steps, only used symbols declared.
pub fn random_script_text<R: Rng>(rng: &mut R, max_triples: usize, max_symbols: usize) -> String {
    let nsym = rng.gen_range(3..=max_symbols);
    let pool: Vec<String> = (0..nsym).map(|i| format!("S{i}")).collect();
    let ntrip = rng.gen_range(1..=max_triples);
    let mut triples: Vec<Vec<String>> = Vec::new();
    let mut attempts = 0;
    while triples.len() < ntrip && attempts < 200 {
        attempts += 1;
        let t: Vec<String> = pool.choose_multiple(rng, 3).cloned().collect();
        if !triples.contains(&t) {
            triples.push(t);
        }
    }
    let used: BTreeSet<&String> = triples.iter().flatten().collect();
    let mut text = String::from("cpl v1\nname random\n");
    for s in &pool {
        if used.contains(s) {
            text.push_str(&format!("symbol {s} Label {s}\n"));
        }
    }
    for t in &triples {
        text.push_str(&format!("step {} {} {}\n", t[0], t[1], t[2]));
    }
    text
}

// ---- cycle oracle ----

/// Every simple cycle of length 3..=max in the network minus its role
/// layer, found by walking all simple paths from every start and then
/// normalising rotation and direction.
pub fn brute_force_cycles(network: &SymNetwork, max: usize) -> Vec<Vec<String>> {
    let keep = |id: &str| network.node(id).is_some_and(|n| n.layer != 0);
    let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (a, b) in &network.edges {
        if keep(a) && keep(b) {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
    }
    let mut found = BTreeSet::new();
    for &start in adj.keys() {
        let mut path = vec![start];
        walk(&adj, start, &mut path, max, &mut found);
    }
    let mut out: Vec<Vec<String>> = found.into_iter().collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    out
}

fn walk<'a>(
    adj: &BTreeMap<&'a str, Vec<&'a str>>,
    start: &'a str,
    path: &mut Vec<&'a str>,
    max: usize,
    found: &mut BTreeSet<Vec<String>>,
) {
    let last = *path.last().unwrap();
    for &next in &adj[last] {
        if next == start && path.len() >= 3 {
            found.insert(normalise(path));
        } else if !path.contains(&next) && path.len() < max {
            path.push(next);
            walk(adj, start, path, max, found);
            path.pop();
        }
    }
}

/// Rotate to the least id, then head toward its lesser neighbour.
pub fn normalise(cycle: &[&str]) -> Vec<String> {
    let n = cycle.len();
    let (min_at, _) = cycle.iter().enumerate().min_by_key(|(_, id)| **id).unwrap();
    let forward: Vec<&str> = (0..n).map(|i| cycle[(min_at + i) % n]).collect();
    let backward: Vec<&str> = (0..n).map(|i| cycle[(min_at + n - i) % n]).collect();
    let pick = if forward[1] <= backward[1] {
        forward
    } else {
        backward
    };
    pick.into_iter().map(str::to_string).collect()
}

// ---- layering oracle ----

/// Shared and upper-shared concept sets computed straight from the role
/// definitions: shared = in two or more role columns; upper = in two or more
/// steps but not shared.
pub fn layer_oracle(script: &CplScript) -> (BTreeSet<String>, BTreeSet<String>) {
    let mut columns: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    let mut uses: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &script.triples {
        for (col, s) in t.symbols().into_iter().enumerate() {
            columns.entry(s).or_default().insert(col);
            *uses.entry(s).or_default() += 1;
        }
    }
    let shared: BTreeSet<String> = columns
        .iter()
        .filter(|(_, c)| c.len() >= 2)
        .map(|(s, _)| s.to_string())
        .collect();
    let upper = uses
        .iter()
        .filter(|(s, n)| **n >= 2 && !shared.contains(**s))
        .map(|(s, _)| s.to_string())
        .collect();
    (shared, upper)
}

// ---- tree-shape oracle ----

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Shape {
    pub label: String,
    pub children: Vec<Shape>,
}

/// Merges same-label siblings, recursively.
pub fn aggregate(part: &PartNode) -> Shape {
    fn merge(label: &str, groups: Vec<&PartNode>) -> Shape {
        let mut order: Vec<&str> = Vec::new();
        let mut by_label: BTreeMap<&str, Vec<&PartNode>> = BTreeMap::new();
        for g in groups {
            for c in &g.children {
                if !by_label.contains_key(c.label.as_str()) {
                    order.push(&c.label);
                }
                by_label.entry(&c.label).or_default().push(c);
            }
        }
        Shape {
            label: label.to_string(),
            children: order
                .iter()
                .map(|l| merge(l, by_label[l].clone()))
                .collect(),
        }
    }
    merge(&part.label, vec![part])
}

pub fn tree_shape(store: &ConceptTreeStore, id: cogweave::concept_tree::NodeId) -> Shape {
    let node = store.node(id);
    Shape {
        label: node.concept_label.clone(),
        children: node
            .children
            .iter()
            .map(|&c| tree_shape(store, c))
            .collect(),
    }
}

/// `small` embeds at `at` when labels agree and every child of `small`
/// embeds under a distinct child of `at`.
fn embeds_at(small: &Shape, at: &Shape) -> bool {
    if small.label != at.label {
        return false;
    }
    // siblings are unique after aggregation, so matching is by label
    small
        .children
        .iter()
        .all(|sc| at.children.iter().any(|ac| embeds_at(sc, ac)))
}

/// True when `small` embeds at some node of `big`.
pub fn embeds_somewhere(small: &Shape, big: &Shape) -> bool {
    embeds_at(small, big) || big.children.iter().any(|c| embeds_somewhere(small, c))
}
