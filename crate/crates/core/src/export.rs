//! Graphviz and JSON renderings of a process network.

use std::fmt::Write as _;

use serde::Serialize;

use crate::network::{role_node_id, NetworkNode, NodeKind, SymNetwork};
use crate::script_io::Role;

pub fn role_color(role: Role) -> &'static str {
    match role {
        Role::Object => "blue",
        Role::Effector => "red",
        Role::Source => "green",
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn html_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// One rank group per layer, role nodes at the bottom. Step nodes spell
/// their symbols in role colours: objects blue, effectors red, sources
/// green.
pub fn to_dot(network: &SymNetwork) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "graph {} {{", quote(&network.script));
    let _ = writeln!(out, "  rankdir=BT;");
    let _ = writeln!(out, "  node [fontname=\"Helvetica\"];");
    for layer in 0..4u8 {
        let _ = writeln!(out, "  {{ rank=same; // layer {layer}");
        for node in network.layer(layer) {
            let _ = writeln!(out, "    {} [{}];", quote(&node.id), dot_attributes(node));
        }
        let _ = writeln!(out, "  }}");
    }
    for (a, b) in &network.edges {
        let _ = writeln!(out, "  {} -- {};", quote(a), quote(b));
    }
    out.push_str("}\n");
    out
}

fn dot_attributes(node: &NetworkNode) -> String {
    match node.kind {
        NodeKind::RoleType => {
            let role = node.role.unwrap_or(Role::Object);
            let color = role_color(role);
            format!(
                "shape=box, color={color}, fontcolor={color}, label={}",
                quote(role_node_id(role))
            )
        }
        NodeKind::Triple => {
            let letters: String = Role::ALL
                .iter()
                .zip(&node.concepts)
                .map(|(&r, s)| {
                    format!(
                        "<font color=\"{}\">{}</font>",
                        role_color(r),
                        html_escape(s)
                    )
                })
                .collect();
            format!("shape=box, label=<{letters}>")
        }
        NodeKind::SharedConcept | NodeKind::UpperShared => "shape=ellipse".to_string(),
    }
}

#[derive(Serialize)]
struct JsonNetwork<'a> {
    script: &'a str,
    nodes: Vec<&'a NetworkNode>,
    edges: Vec<[&'a str; 2]>,
}

/// Nodes and edges sorted by id; byte-identical for identical networks.
pub fn to_json(network: &SymNetwork) -> String {
    let mut nodes: Vec<&NetworkNode> = network.nodes.iter().collect();
    nodes.sort_by(|a, b| a.id.cmp(&b.id));
    let doc = JsonNetwork {
        script: &network.script,
        nodes,
        edges: network
            .edges
            .iter()
            .map(|(a, b)| [a.as_str(), b.as_str()])
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("network serializes");
    out.push('\n');
    out
}
