//! Text formats for process scripts (`cpl v1`) and ontology part files
//! (`ontology v1`).
//!
//! Both formats are line oriented. Parsing either accepts the whole input
//! or fails with the first offending line number; partial results are never
//! returned.

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::LinkKey;

pub const CPL_HEADER: &str = "cpl v1";
pub const ONTOLOGY_HEADER: &str = "ontology v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("expected header `{0}`")]
    MissingHeader(&'static str),
    #[error("expected `name <identifier>`")]
    MissingName,
    #[error("malformed line: {0}")]
    Malformed(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("symbol `{0}` declared twice")]
    DuplicateSymbol(String),
    #[error("label `{0}` declared twice")]
    DuplicateLabel(String),
    #[error("symbol `{0}` repeated inside one step")]
    RepeatedInStep(String),
    #[error("step duplicates step on line {0}")]
    DuplicateTriple(usize),
    #[error("symbol declared after the first step")]
    SymbolAfterStep,
    #[error("indentation must be a multiple of two spaces and deepen one level at a time")]
    BadIndent,
    #[error("part has no nodes")]
    EmptyPart,
    #[error("part has more than one root")]
    MultipleRoots,
    #[error("node outside of any part")]
    NodeOutsidePart,
    #[error("link key `{0}` used twice")]
    DuplicateLinkKey(String),
}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

/// A concept symbol and its human label, e.g. `P` / `Pot`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConceptSymbol {
    pub symbol: String,
    pub label: String,
}

/// Process roles, in the fixed order a step lists them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Object,
    Effector,
    Source,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Object, Role::Effector, Role::Source];
}

/// One process step. Fields hold symbols, not labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triple {
    pub object: String,
    pub effector: String,
    pub source: String,
    pub ordinal: usize,
}

impl Triple {
    pub fn get(&self, role: Role) -> &str {
        match role {
            Role::Object => &self.object,
            Role::Effector => &self.effector,
            Role::Source => &self.source,
        }
    }

    /// Symbols in role order: object, effector, source.
    pub fn symbols(&self) -> [&str; 3] {
        [&self.object, &self.effector, &self.source]
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.symbols().contains(&symbol)
    }

    /// Concatenated symbols, e.g. `EWP`.
    pub fn code(&self) -> String {
        self.symbols().concat()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CplScript {
    pub name: String,
    pub symbols: Vec<ConceptSymbol>,
    pub triples: Vec<Triple>,
}

impl CplScript {
    pub fn symbol(&self, symbol: &str) -> Option<&ConceptSymbol> {
        self.symbols.iter().find(|s| s.symbol == symbol)
    }

    pub fn label_of(&self, symbol: &str) -> Option<&str> {
        self.symbol(symbol).map(|s| s.label.as_str())
    }

    /// Resolves a label first, then a bare symbol.
    pub fn resolve(&self, name: &str) -> Option<&ConceptSymbol> {
        self.symbols
            .iter()
            .find(|s| s.label == name)
            .or_else(|| self.symbol(name))
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

pub fn parse_cpl(text: &str) -> Result<CplScript, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, strip_comment(l).trim()))
        .filter(|(_, l)| !l.is_empty());

    let last_line = text.lines().count().max(1);
    match lines.next() {
        Some((_, l)) if l.split_whitespace().eq(CPL_HEADER.split_whitespace()) => {}
        Some((n, _)) => return Err(err(n, ParseErrorKind::MissingHeader(CPL_HEADER))),
        None => return Err(err(last_line, ParseErrorKind::MissingHeader(CPL_HEADER))),
    }
    let name = match lines.next() {
        Some((n, l)) => {
            let mut words = l.split_whitespace();
            match (words.next(), words.next(), words.next()) {
                (Some("name"), Some(id), None) => id.to_string(),
                _ => return Err(err(n, ParseErrorKind::MissingName)),
            }
        }
        None => return Err(err(last_line, ParseErrorKind::MissingName)),
    };

    let mut symbols: Vec<ConceptSymbol> = Vec::new();
    let mut symbol_lines: HashMap<String, usize> = HashMap::new();
    let mut triples = Vec::new();
    let mut seen_steps: HashMap<(String, String, String), usize> = HashMap::new();

    for (n, line) in lines {
        let (keyword, rest) = match line.split_once(char::is_whitespace) {
            Some((k, r)) => (k, r.trim()),
            None => (line, ""),
        };
        match keyword {
            "symbol" => {
                if !triples.is_empty() {
                    return Err(err(n, ParseErrorKind::SymbolAfterStep));
                }
                let (sym, label) = match rest.split_once(char::is_whitespace) {
                    Some((s, l)) => (s, l.trim()),
                    None => return Err(err(n, ParseErrorKind::Malformed(line.to_string()))),
                };
                if symbol_lines.contains_key(sym) {
                    return Err(err(n, ParseErrorKind::DuplicateSymbol(sym.to_string())));
                }
                if symbols.iter().any(|s| s.label == label) {
                    return Err(err(n, ParseErrorKind::DuplicateLabel(label.to_string())));
                }
                symbol_lines.insert(sym.to_string(), n);
                symbols.push(ConceptSymbol {
                    symbol: sym.to_string(),
                    label: label.to_string(),
                });
            }
            "step" => {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let [object, effector, source] = parts[..] else {
                    return Err(err(n, ParseErrorKind::Malformed(line.to_string())));
                };
                for s in [object, effector, source] {
                    if !symbol_lines.contains_key(s) {
                        return Err(err(n, ParseErrorKind::UnknownSymbol(s.to_string())));
                    }
                }
                if object == effector || object == source {
                    return Err(err(n, ParseErrorKind::RepeatedInStep(object.to_string())));
                }
                if effector == source {
                    return Err(err(n, ParseErrorKind::RepeatedInStep(effector.to_string())));
                }
                let key = (object.to_string(), effector.to_string(), source.to_string());
                if let Some(&first) = seen_steps.get(&key) {
                    return Err(err(n, ParseErrorKind::DuplicateTriple(first)));
                }
                seen_steps.insert(key, n);
                triples.push(Triple {
                    object: object.to_string(),
                    effector: effector.to_string(),
                    source: source.to_string(),
                    ordinal: triples.len() + 1,
                });
            }
            _ => return Err(err(n, ParseErrorKind::Malformed(line.to_string()))),
        }
    }

    Ok(CplScript {
        name,
        symbols,
        triples,
    })
}

/// Canonical text form: header, name, symbols in table order, steps in
/// ordinal order. `parse_cpl` of the output yields an equal script.
pub fn serialize_cpl(script: &CplScript) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{CPL_HEADER}");
    let _ = writeln!(out, "name {}", script.name);
    for s in &script.symbols {
        let _ = writeln!(out, "symbol {} {}", s.symbol, s.label);
    }
    for t in &script.triples {
        let _ = writeln!(out, "step {} {} {}", t.object, t.effector, t.source);
    }
    out
}

/// A node of an ontology part as read from the file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartNode {
    pub label: String,
    pub children: Vec<PartNode>,
}

impl PartNode {
    pub fn leaf(label: impl Into<String>) -> Self {
        PartNode {
            label: label.into(),
            children: Vec::new(),
        }
    }

    pub fn with(label: impl Into<String>, children: Vec<PartNode>) -> Self {
        PartNode {
            label: label.into(),
            children,
        }
    }

    /// A single chain `a > b > c`.
    pub fn chain<S: AsRef<str>>(labels: &[S]) -> Self {
        let mut iter = labels.iter().rev();
        let mut node = PartNode::leaf(iter.next().expect("empty chain").as_ref());
        for label in iter {
            node = PartNode::with(label.as_ref(), vec![node]);
        }
        node
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(PartNode::depth).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(PartNode::size).sum::<usize>()
    }

    fn write_indented(&self, level: usize, out: &mut String) {
        let _ = writeln!(out, "{:width$}{}", "", self.label, width = level * 2);
        for c in &self.children {
            c.write_indented(level + 1, out);
        }
    }
}

impl fmt::Display for PartNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        self.write_indented(0, &mut out);
        f.write_str(&out)
    }
}

/// One presented piece of an ontology, tagged with its event key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyPart {
    pub link_key: LinkKey,
    pub root: PartNode,
}

impl OntologyPart {
    pub fn new(key: impl Into<String>, ordinal: u64, root: PartNode) -> Self {
        OntologyPart {
            link_key: LinkKey::new(key, ordinal),
            root,
        }
    }
}

pub fn parse_ontology_parts(text: &str) -> Result<Vec<OntologyPart>, ParseError> {
    parse_ontology_parts_from(text, 0)
}

/// Like [`parse_ontology_parts`], but numbers parts (and auto keys) starting
/// after `offset`, so a session can ingest several files without key clashes.
pub fn parse_ontology_parts_from(text: &str, offset: u64) -> Result<Vec<OntologyPart>, ParseError> {
    struct Pending {
        line: usize,
        key: Option<String>,
        // (depth, label) in file order
        rows: Vec<(usize, usize, String)>,
    }

    let mut pending: Vec<Pending> = Vec::new();
    let mut saw_header = false;
    let last_line = text.lines().count().max(1);

    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let content = strip_comment(raw).trim_end();
        if content.trim().is_empty() {
            continue;
        }
        if !saw_header {
            if content
                .split_whitespace()
                .ne(ONTOLOGY_HEADER.split_whitespace())
            {
                return Err(err(n, ParseErrorKind::MissingHeader(ONTOLOGY_HEADER)));
            }
            saw_header = true;
            continue;
        }
        let indent = content.len() - content.trim_start_matches(' ').len();
        let body = &content[indent..];
        if body.starts_with('\t') {
            return Err(err(n, ParseErrorKind::BadIndent));
        }
        if indent == 0 && (body == "part" || body.starts_with("part ")) {
            let mut words = body.split_whitespace().skip(1);
            let key = match (words.next(), words.next()) {
                (None, _) => None,
                (Some(k), None) => {
                    Some(k.trim_start_matches('[').trim_end_matches(']').to_string())
                }
                _ => return Err(err(n, ParseErrorKind::Malformed(body.to_string()))),
            };
            if key.as_deref() == Some("") {
                return Err(err(n, ParseErrorKind::Malformed(body.to_string())));
            }
            pending.push(Pending {
                line: n,
                key,
                rows: Vec::new(),
            });
            continue;
        }
        let Some(part) = pending.last_mut() else {
            return Err(err(n, ParseErrorKind::NodeOutsidePart));
        };
        if !indent.is_multiple_of(2) {
            return Err(err(n, ParseErrorKind::BadIndent));
        }
        let depth = indent / 2;
        match part.rows.last() {
            None if depth != 0 => return Err(err(n, ParseErrorKind::BadIndent)),
            Some(&(_, prev, _)) if depth > prev + 1 => {
                return Err(err(n, ParseErrorKind::BadIndent))
            }
            Some(_) if depth == 0 => return Err(err(n, ParseErrorKind::MultipleRoots)),
            _ => {}
        }
        part.rows.push((n, depth, body.trim().to_string()));
    }
    if !saw_header {
        return Err(err(
            last_line,
            ParseErrorKind::MissingHeader(ONTOLOGY_HEADER),
        ));
    }

    let mut used: BTreeSet<String> = BTreeSet::new();
    let mut parts = Vec::with_capacity(pending.len());
    for (i, p) in pending.into_iter().enumerate() {
        if p.rows.is_empty() {
            return Err(err(p.line, ParseErrorKind::EmptyPart));
        }
        let ordinal = offset + i as u64 + 1;
        let key = p.key.unwrap_or_else(|| format!("Link_{ordinal}"));
        if !used.insert(key.clone()) {
            return Err(err(p.line, ParseErrorKind::DuplicateLinkKey(key)));
        }
        let mut rows = p.rows.into_iter().map(|(_, d, l)| (d, l)).peekable();
        let root = build_part_tree(&mut rows, 0);
        parts.push(OntologyPart::new(key, ordinal, root));
    }
    Ok(parts)
}

fn build_part_tree<I>(rows: &mut std::iter::Peekable<I>, depth: usize) -> PartNode
where
    I: Iterator<Item = (usize, String)>,
{
    let (_, label) = rows.next().expect("caller checked a row exists");
    let mut node = PartNode::leaf(label);
    while let Some(&(d, _)) = rows.peek() {
        if d != depth + 1 {
            break;
        }
        node.children.push(build_part_tree(rows, depth + 1));
    }
    node
}

/// Serializes parts with explicit keys. Re-parsing with the same offset
/// returns equal parts.
pub fn serialize_ontology_parts(parts: &[OntologyPart]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{ONTOLOGY_HEADER}");
    for p in parts {
        let _ = writeln!(out, "part {}", p.link_key.key);
        p.root.write_indented(0, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const EGG: &str = include_str!("../examples/cook_an_egg.cpl");
    const CAR: &str = include_str!("../examples/drive_a_car.cpl");
    const HOLIDAY: &str = include_str!("../examples/book_a_holiday.cpl");

    fn codes(s: &CplScript) -> Vec<String> {
        s.triples.iter().map(Triple::code).collect()
    }

    #[test]
    fn parses_cook_an_egg() {
        let s = parse_cpl(EGG).unwrap();
        assert_eq!(s.symbols.len(), 9);
        assert_eq!(codes(&s), ["PDK", "PWT", "HBC", "EWP", "PHB", "EHP", "BHP"]);
        assert_eq!(
            s.triples.iter().map(|t| t.ordinal).collect::<Vec<_>>(),
            (1..=7).collect::<Vec<_>>()
        );
        assert_eq!(s.label_of("P"), Some("Pot"));
    }

    #[test]
    fn parses_drive_a_car() {
        let s = parse_cpl(CAR).unwrap();
        assert_eq!(s.triples.len(), 8);
        assert_eq!(&codes(&s)[..3], ["UCG", "DEC", "KIE"]);
    }

    #[test]
    fn empty_steps() {
        let s = parse_cpl("cpl v1\nname empty\nsymbol A Alpha\n").unwrap();
        assert!(s.triples.is_empty());
        assert_eq!(serialize_cpl(&s), "cpl v1\nname empty\nsymbol A Alpha\n");
    }

    #[test]
    fn round_trips_bundled_scripts() {
        for text in [EGG, CAR, HOLIDAY] {
            let s = parse_cpl(text).unwrap();
            let out = serialize_cpl(&s);
            assert_eq!(parse_cpl(&out).unwrap(), s);
            assert_eq!(serialize_cpl(&parse_cpl(&out).unwrap()), out);
        }
    }

    #[test]
    fn labels_keep_spaces() {
        let s = parse_cpl("cpl v1\nname x\nsymbol W Steering Wheel  # comment\n").unwrap();
        assert_eq!(s.symbols[0].label, "Steering Wheel");
    }

    fn cpl_error(text: &str) -> ParseError {
        parse_cpl(text).unwrap_err()
    }

    #[test]
    fn rejects_malformed_scripts() {
        let base = "cpl v1\nname t\nsymbol A Alpha\nsymbol B Beta\nsymbol C Gamma\n";
        assert_eq!(
            cpl_error(&format!("{base}step A B Z\n")),
            err(6, ParseErrorKind::UnknownSymbol("Z".into()))
        );
        assert_eq!(
            cpl_error(&format!("{base}symbol A Again\n")),
            err(6, ParseErrorKind::DuplicateSymbol("A".into()))
        );
        assert_eq!(
            cpl_error(&format!("{base}symbol D Alpha\n")),
            err(6, ParseErrorKind::DuplicateLabel("Alpha".into()))
        );
        assert_eq!(
            cpl_error(&format!("{base}step A B A\n")),
            err(6, ParseErrorKind::RepeatedInStep("A".into()))
        );
        assert_eq!(
            cpl_error(&format!("{base}step A B C\n\nstep A B C\n")),
            err(8, ParseErrorKind::DuplicateTriple(6))
        );
        assert_eq!(
            cpl_error(&format!("{base}step A B C\nsymbol D Delta\n")),
            err(7, ParseErrorKind::SymbolAfterStep)
        );
        assert_eq!(cpl_error("cpl v2\n").line, 1);
        assert_eq!(
            cpl_error("cpl v1\nname\n").kind,
            ParseErrorKind::MissingName
        );
        assert_eq!(cpl_error(&format!("{base}step A B\n")).line, 6);
        assert_eq!(
            cpl_error("").kind,
            ParseErrorKind::MissingHeader(CPL_HEADER)
        );
    }

    #[test]
    fn parses_single_chain_part() {
        let parts = parse_ontology_parts(
            "ontology v1\npart Link_10\nHome\n  Kitchen\n    items\n      Pot\n",
        )
        .unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].link_key.key, "Link_10");
        assert_eq!(parts[0].root.depth(), 4);
        assert_eq!(
            parts[0].root,
            PartNode::chain(&["Home", "Kitchen", "items", "Pot"])
        );
    }

    #[test]
    fn single_node_part() {
        let parts = parse_ontology_parts("ontology v1\npart\nHome\n").unwrap();
        assert_eq!(parts[0].root.depth(), 1);
        assert_eq!(parts[0].link_key, LinkKey::new("Link_1", 1));
    }

    #[test]
    fn auto_keys_follow_position() {
        let text = "ontology v1\npart\nA\npart [Mine]\nB\npart\nC\n";
        let keys: Vec<_> = parse_ontology_parts(text)
            .unwrap()
            .into_iter()
            .map(|p| (p.link_key.key, p.link_key.ordinal))
            .collect();
        assert_eq!(
            keys,
            [
                ("Link_1".into(), 1),
                ("Mine".into(), 2),
                ("Link_3".into(), 3)
            ]
        );
        let shifted = parse_ontology_parts_from(text, 10).unwrap();
        assert_eq!(shifted[2].link_key, LinkKey::new("Link_13", 13));
    }

    #[test]
    fn smart_home_fixture_has_ten_parts() {
        let parts = parse_ontology_parts(include_str!("../examples/smart_home.ont")).unwrap();
        let keys: Vec<_> = parts.iter().map(|p| p.link_key.key.clone()).collect();
        let expected: Vec<_> = (1..=10).map(|i| format!("Link_{i}")).collect();
        assert_eq!(keys, expected);
    }

    #[test]
    fn sibling_order_preserved() {
        let parts = parse_ontology_parts("ontology v1\npart\nR\n  c\n  a\n  b\n").unwrap();
        let labels: Vec<_> = parts[0]
            .root
            .children
            .iter()
            .map(|c| c.label.as_str())
            .collect();
        assert_eq!(labels, ["c", "a", "b"]);
    }

    #[test]
    fn rejects_malformed_ontologies() {
        let e = |t: &str| parse_ontology_parts(t).unwrap_err();
        assert_eq!(
            e("ontology v1\npart\nA\n   B\n"),
            err(4, ParseErrorKind::BadIndent)
        );
        assert_eq!(
            e("ontology v1\npart\nA\n    B\n"),
            err(4, ParseErrorKind::BadIndent)
        );
        assert_eq!(
            e("ontology v1\npart\n  A\n"),
            err(3, ParseErrorKind::BadIndent)
        );
        assert_eq!(
            e("ontology v1\npart\npart\nA\n"),
            err(2, ParseErrorKind::EmptyPart)
        );
        assert_eq!(
            e("ontology v1\npart\nA\nB\n"),
            err(4, ParseErrorKind::MultipleRoots)
        );
        assert_eq!(
            e("ontology v1\nA\n"),
            err(2, ParseErrorKind::NodeOutsidePart)
        );
        assert_eq!(
            e("ontology v1\npart K\nA\npart K\nB\n"),
            err(4, ParseErrorKind::DuplicateLinkKey("K".into()))
        );
        assert_eq!(e("ontology v1\npart Link_2\nA\npart\nB\n").line, 4);
        assert_eq!(
            e("tree\n"),
            err(1, ParseErrorKind::MissingHeader(ONTOLOGY_HEADER))
        );
    }

    #[test]
    fn ontology_round_trip() {
        let parts = parse_ontology_parts(include_str!("../examples/smart_home.ont")).unwrap();
        let text = serialize_ontology_parts(&parts);
        assert_eq!(parse_ontology_parts(&text).unwrap(), parts);
    }
}
