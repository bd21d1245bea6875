//! Command-line front end.
//!
//! Exit codes: 0 success, 1 other failure (I/O, failed validation), 2 parse
//! error, 3 query-domain error, 4 unknown target, 5 persistence error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::export;
use crate::format_keys;
use crate::network::{layer_sizes, validate, SymNetwork};
use crate::paths::{
    self, derive_schedule, enumerate_cycles, shortest_cycles, PathError, DEFAULT_MAX_CYCLE_LEN,
};
use crate::registry::ActivationResult;
use crate::script_io::{parse_cpl, CplScript};
use crate::workspace::{PersistError, Workspace, WorkspaceError};

#[derive(Debug, Parser)]
#[command(
    name = "cogweave",
    version,
    about = "Build and query concept stores and process networks"
)]
pub struct Cli {
    /// Workspace file; loaded before the command and saved after commands
    /// that change it.
    #[arg(long, global = true)]
    pub workspace: Option<PathBuf>,

    /// Longest cycle listed by `cycles` without `--concept`.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_CYCLE_LEN,
          value_parser = parse_cycle_len)]
    pub max_cycle_len: usize,

    #[arg(long, global = true, value_enum, default_value_t = ExportFormat::Dot)]
    pub format: ExportFormat,

    #[command(subcommand)]
    pub command: Command,
}

fn parse_cycle_len(s: &str) -> Result<usize, String> {
    let n: usize = s.parse().map_err(|e| format!("{e}"))?;
    if n < 4 {
        return Err("no cycle is shorter than 4 nodes".into());
    }
    Ok(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Dot,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ViewLevel {
    Ensemble,
    Trees,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the network for a CPL script and print a summary.
    Build { path: PathBuf },
    /// List cycles, or the shortest cycles through one concept.
    Cycles {
        /// CPL file or the name of a script in the workspace.
        target: String,
        #[arg(long)]
        concept: Option<String>,
    },
    /// Print the acquisition schedule for a script.
    Schedule { target: String },
    /// Present every part of an ontology file to both stores.
    Ingest { path: PathBuf },
    /// Print the ensemble store or the concept trees.
    View {
        #[arg(value_enum)]
        level: ViewLevel,
    },
    /// List every instance of a concept type across modules.
    Activate {
        concept: String,
        #[arg(long)]
        script: Option<String>,
    },
    /// Find shortest cycles covering a set of concepts.
    Query {
        #[arg(required = true)]
        concepts: Vec<String>,
        #[arg(long)]
        script: Option<String>,
    },
    /// Export a network as DOT or JSON.
    Export {
        target: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the workspace to a file.
    Save { path: PathBuf },
    /// Replace the workspace with a saved file.
    Load { path: PathBuf },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Parse {
        path: String,
        source: crate::script_io::ParseError,
    },
    #[error(transparent)]
    Workspace(WorkspaceError),
    #[error(transparent)]
    NotACycleConcept(#[from] PathError),
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("unknown target `{0}`: not a readable file or a script in the workspace")]
    UnknownTarget(String),
    #[error("{0}")]
    Persist(#[from] PersistError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("validation failed with {0} diagnostic(s)")]
    Invalid(usize),
    #[error("load needs --workspace to know where to install the state")]
    NoWorkspace,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } => 2,
            CliError::Workspace(WorkspaceError::Parse(_) | WorkspaceError::DuplicateKey(_)) => 2,
            CliError::Workspace(WorkspaceError::Network(_)) => 2,
            CliError::NotACycleConcept(_) | CliError::UnknownConcept(_) => 3,
            CliError::UnknownTarget(_) => 4,
            CliError::Persist(_) => 5,
            CliError::Io { .. } | CliError::Invalid(_) | CliError::NoWorkspace => 1,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn load_script(path: &Path) -> Result<CplScript, CliError> {
    parse_cpl(&read(path)?).map_err(|source| CliError::Parse {
        path: path.display().to_string(),
        source,
    })
}

/// Runs one parsed command, writing its normal output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let mut ws = match &cli.workspace {
        Some(p) if p.exists() && !matches!(cli.command, Command::Load { .. }) => {
            Workspace::load(p)?
        }
        _ => Workspace::new(),
    };
    let mut dirty = false;
    let w = |out: &mut dyn Write, text: &str| {
        out.write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            })
    };

    match &cli.command {
        Command::Build { path } => {
            let script = load_script(path)?;
            ws.add_script(script).map_err(CliError::Workspace)?;
            dirty = true;
            let (script, network) = ws.script(None).expect("just added");
            let (text, clean) = build_summary(script, network);
            w(out, &text)?;
            if !clean {
                save_if(&cli.workspace, &ws, dirty)?;
                return Err(CliError::Invalid(validate(network).len()));
            }
        }
        Command::Cycles { target, concept } => {
            let (_, network) = resolve(&ws, target)?;
            let mut text = String::new();
            match concept {
                Some(c) => {
                    let node = network.node_for_concept(c).map(|n| n.id.clone());
                    for cycle in shortest_cycles(&network, c)? {
                        let anchor = node.as_deref().unwrap_or_default();
                        let nodes = cycle.starting_at(anchor).unwrap_or_default();
                        text.push_str(&nodes.join(" "));
                        text.push('\n');
                    }
                }
                None => {
                    for cycle in enumerate_cycles(&network, cli.max_cycle_len) {
                        text.push_str(&cycle.to_string());
                        text.push('\n');
                    }
                }
            }
            w(out, &text)?;
        }
        Command::Schedule { target } => {
            let (script, network) = resolve(&ws, target)?;
            w(out, &render_schedule(&script, &network))?;
        }
        Command::Ingest { path } => {
            let text = read(path)?;
            let records = ws.ingest(&text).map_err(|e| match e {
                WorkspaceError::Parse(source) => CliError::Parse {
                    path: path.display().to_string(),
                    source,
                },
                other => CliError::Workspace(other),
            })?;
            dirty = true;
            let mut text = String::new();
            for r in records {
                text.push_str(&format!(
                    "{} ensemble {} (+{} nodes) trees {} (+{} nodes)\n",
                    r.key,
                    r.ensemble.merge_kind,
                    r.ensemble.nodes_created,
                    r.tree.merge_kind,
                    r.tree.nodes_created
                ));
            }
            w(out, &text)?;
        }
        Command::View { level } => {
            let text = match level {
                ViewLevel::Ensemble => ws.ensembles.render_keyed(),
                ViewLevel::Trees => ws.trees.render_view(),
            };
            w(out, &text)?;
        }
        Command::Activate { concept, script } => {
            check_script(&ws, script.as_deref())?;
            let activation = ws.registry(script.as_deref()).activate(concept);
            if !activation.known {
                return Err(CliError::UnknownConcept(concept.clone()));
            }
            w(out, &render_activation(&ws, &activation))?;
        }
        Command::Query { concepts, script } => {
            check_script(&ws, script.as_deref())?;
            let Some((_, network)) = ws.script(script.as_deref()) else {
                return Err(CliError::UnknownTarget(
                    script.clone().unwrap_or_else(|| "<current>".into()),
                ));
            };
            let result = ws.registry(script.as_deref()).query_horn(network, concepts);
            let mut text = format!("requested: {}\n", result.requested.join(", "));
            for c in &result.covering_cycles {
                text.push_str(&format!("cycle: {c}\n"));
            }
            for b in &result.instance_bindings {
                text.push_str(&render_activation(&ws, b));
            }
            text.push_str(&format!("complete: {}\n", result.complete));
            w(out, &text)?;
        }
        Command::Export { target, out: dest } => {
            let (_, network) = resolve(&ws, target)?;
            let text = match cli.format {
                ExportFormat::Dot => export::to_dot(&network),
                ExportFormat::Json => export::to_json(&network),
            };
            match dest {
                Some(p) => fs::write(p, text).map_err(|source| CliError::Io {
                    path: p.display().to_string(),
                    source,
                })?,
                None => w(out, &text)?,
            }
        }
        Command::Save { path } => {
            ws.save(path)?;
        }
        Command::Load { path } => {
            let Some(target) = &cli.workspace else {
                return Err(CliError::NoWorkspace);
            };
            let loaded = Workspace::load(path)?;
            loaded.save(target)?;
        }
    }
    save_if(&cli.workspace, &ws, dirty)
}

fn save_if(path: &Option<PathBuf>, ws: &Workspace, dirty: bool) -> Result<(), CliError> {
    if let (Some(p), true) = (path, dirty) {
        ws.save(p)?;
    }
    Ok(())
}

fn check_script(ws: &Workspace, script: Option<&str>) -> Result<(), CliError> {
    match script {
        Some(name) if !ws.scripts.contains_key(name) => {
            Err(CliError::UnknownTarget(name.to_string()))
        }
        _ => Ok(()),
    }
}

/// A CPL file path, or the name of a script already in the workspace.
fn resolve(ws: &Workspace, target: &str) -> Result<(CplScript, SymNetwork), CliError> {
    let path = Path::new(target);
    if path.is_file() {
        let mut scratch = Workspace::new();
        scratch
            .add_script(load_script(path)?)
            .map_err(CliError::Workspace)?;
        let (s, n) = scratch.script(None).expect("just added");
        return Ok((s.clone(), n.clone()));
    }
    ws.script(Some(target))
        .map(|(s, n)| (s.clone(), n.clone()))
        .ok_or_else(|| CliError::UnknownTarget(target.to_string()))
}

fn build_summary(script: &CplScript, network: &SymNetwork) -> (String, bool) {
    let sizes = layer_sizes(network);
    let dead = paths::dead_ends(network);
    let diagnostics = validate(network);
    let mut text = format!("script {}\n", script.name);
    text.push_str(&format!("role nodes: {}\n", sizes[0]));
    text.push_str(&format!(
        "shared concepts: {} ({})\n",
        sizes[1],
        network.layer_ids(1).join(" ")
    ));
    text.push_str(&format!("triples: {}\n", sizes[2]));
    text.push_str(&format!(
        "upper shared: {} ({})\n",
        sizes[3],
        network.layer_ids(3).join(" ")
    ));
    text.push_str(&format!("dead ends: {} ({})\n", dead.len(), dead.join(" ")));
    if diagnostics.is_empty() {
        text.push_str("validation: ok\n");
    } else {
        text.push_str(&format!("validation: {} problem(s)\n", diagnostics.len()));
        for d in &diagnostics {
            text.push_str(&format!("  {d}\n"));
        }
    }
    (text, diagnostics.is_empty())
}

/// Numbered steps, each listing labels as source - effector - object,
/// followed by the all-realized marker.
pub fn render_schedule(script: &CplScript, network: &SymNetwork) -> String {
    let schedule = derive_schedule(network, script);
    let mut text = String::new();
    for step in &schedule.steps {
        let labels: Vec<&str> = step
            .realized
            .iter()
            .map(|s| script.label_of(s).unwrap_or(s))
            .collect();
        text.push_str(&format!("{}. {}.\n", step.index, labels.join(" - ")));
    }
    if schedule.final_marker {
        text.push_str(&format!(
            "{}. All concepts realised.\n",
            schedule.steps.len() + 1
        ));
    }
    text
}

fn render_activation(ws: &Workspace, a: &ActivationResult) -> String {
    let mut text = format!("concept {}\n", a.concept_label);
    for &id in &a.ensemble {
        let node = ws.ensembles.node(id);
        text.push_str(&format!(
            "  ensemble {} {}\n",
            ws.ensembles.path(id).join("/"),
            format_keys(&node.keys)
        ));
    }
    for &id in &a.trees {
        let node = ws.trees.node(id);
        text.push_str(&format!(
            "  tree {} {}\n",
            ws.trees.path(id).join("/"),
            format_keys(&node.keys)
        ));
    }
    if let Some(n) = &a.network {
        text.push_str(&format!("  network {n}\n"));
    }
    text
}
