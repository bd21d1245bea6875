mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::examples_dir;

fn example(name: &str) -> String {
    examples_dir().join(name).display().to_string()
}

fn cogweave(ws: Option<&Path>, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cogweave"));
    if let Some(ws) = ws {
        cmd.arg("--workspace").arg(ws);
    }
    cmd.args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn workspace() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path().join("ws.json");
    (dir, ws)
}

#[test]
fn build_prints_layer_summary() {
    let out = stdout(&cogweave(None, &["build", &example("cook_an_egg.cpl")]));
    assert_eq!(
        out,
        "script cook_an_egg\nrole nodes: 3\nshared concepts: 3 (B H P)\ntriples: 7\n\
         upper shared: 2 (W E)\ndead ends: 1 (PDK)\nvalidation: ok\n"
    );
}

#[test]
fn cycles_through_a_concept_start_there() {
    let egg = example("cook_an_egg.cpl");
    assert_eq!(
        stdout(&cogweave(None, &["cycles", &egg, "--concept", "W"])),
        "W EWP P PWT\n"
    );
    assert_eq!(
        stdout(&cogweave(None, &["cycles", &egg, "--concept", "Egg"])),
        "E EHP P EWP\n"
    );
}

#[test]
fn schedule_lists_steps_and_marker() {
    let out = stdout(&cogweave(None, &["schedule", &example("cook_an_egg.cpl")]));
    assert_eq!(
        out,
        "1. Kitchen - Cupboard - Pot.\n2. Tap - Water.\n3. Cooker - Hob - Heat.\n4. All concepts realised.\n"
    );
}

#[test]
fn workspace_scripts_are_addressable_by_name() {
    let (_dir, ws) = workspace();
    stdout(&cogweave(
        Some(&ws),
        &["build", &example("drive_a_car.cpl")],
    ));
    let by_name = stdout(&cogweave(Some(&ws), &["schedule", "drive_a_car"]));
    let by_path = stdout(&cogweave(None, &["schedule", &example("drive_a_car.cpl")]));
    assert_eq!(by_name, by_path);
    assert!(by_name.starts_with("1. Garage - Car - Driver.\n"));
}

#[test]
fn ingest_then_view_and_activate() {
    let (_dir, ws) = workspace();
    let log = stdout(&cogweave(
        Some(&ws),
        &["ingest", &example("smart_home.ont")],
    ));
    assert_eq!(log.lines().count(), 10);
    assert!(log.starts_with("Link_1 ensemble new-root"));
    let view = stdout(&cogweave(Some(&ws), &["view", "ensemble"]));
    assert!(view.contains("  Kitchen [Link_4, Link_6, Link_8, Link_9, Link_10]\n"));
    let trees = stdout(&cogweave(Some(&ws), &["view", "trees"]));
    assert!(trees.contains("Home [Link_6, Link_8]\n  Kitchen [Link_6, Link_8]\n    motion_sensors [Link_6, Link_8]\n      M017 [Link_6]\n"));
    let items = stdout(&cogweave(Some(&ws), &["activate", "items"]));
    assert_eq!(
        items
            .lines()
            .filter(|l| l.starts_with("  ensemble"))
            .count(),
        5
    );
}

#[test]
fn query_links_cycles_and_instances() {
    let (_dir, ws) = workspace();
    stdout(&cogweave(
        Some(&ws),
        &["ingest", &example("smart_home.ont")],
    ));
    stdout(&cogweave(
        Some(&ws),
        &["build", &example("cook_an_egg.cpl")],
    ));
    let out = stdout(&cogweave(Some(&ws), &["query", "Water", "Pot"]));
    assert!(out.contains("cycle: EWP P PWT W\n"));
    assert!(out.contains("  ensemble Home/Kitchen/items/Pot [Link_10]\n"));
    assert!(out.ends_with("complete: true\n"));
}

#[test]
fn export_writes_requested_format() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("egg.dot");
    let egg = example("cook_an_egg.cpl");
    stdout(&cogweave(
        None,
        &["export", &egg, "--out", &dot.display().to_string()],
    ));
    let text = std::fs::read_to_string(&dot).unwrap();
    assert!(text.starts_with("graph \"cook_an_egg\" {"));
    assert_eq!(text.matches("rank=same").count(), 4);
    let json = stdout(&cogweave(None, &["--format", "json", "export", &egg]));
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(value["nodes"].as_array().unwrap().len(), 15);
}

#[test]
fn parse_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cpl");
    std::fs::write(&bad, "cpl v1\nname x\nsymbol A a\nstep A B C\n").unwrap();
    let out = cogweave(None, &["build", &bad.display().to_string()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));

    let ont = dir.path().join("bad.ont");
    std::fs::write(&ont, "ontology v1\npart\nHome\n   Kitchen\n").unwrap();
    assert_eq!(
        code(&cogweave(None, &["ingest", &ont.display().to_string()])),
        2
    );
}

#[test]
fn query_domain_errors_exit_3() {
    let egg = example("cook_an_egg.cpl");
    assert_eq!(
        code(&cogweave(None, &["cycles", &egg, "--concept", "Kitchen"])),
        3
    );
    let (_dir, ws) = workspace();
    stdout(&cogweave(Some(&ws), &["build", &egg]));
    assert_eq!(code(&cogweave(Some(&ws), &["activate", "Spoon"])), 3);
}

#[test]
fn unknown_targets_exit_4() {
    let (_dir, ws) = workspace();
    assert_eq!(code(&cogweave(Some(&ws), &["export", "no_such_script"])), 4);
    assert_eq!(
        code(&cogweave(Some(&ws), &["schedule", "no_such_script"])),
        4
    );
    assert_eq!(
        code(&cogweave(
            Some(&ws),
            &["activate", "Pot", "--script", "nope"]
        )),
        4
    );
}

#[test]
fn persistence_errors_exit_5() {
    let (dir, ws) = workspace();
    let wrong = dir.path().join("wrong.json");
    std::fs::write(&wrong, r#"{"format":"cogweave/2"}"#).unwrap();
    assert_eq!(
        code(&cogweave(
            Some(&ws),
            &["load", &wrong.display().to_string()]
        )),
        5
    );

    let truncated = dir.path().join("truncated.json");
    stdout(&cogweave(
        Some(&ws),
        &["build", &example("cook_an_egg.cpl")],
    ));
    let full = std::fs::read_to_string(&ws).unwrap();
    std::fs::write(&truncated, &full[..full.len() / 2]).unwrap();
    assert_eq!(
        code(&cogweave(
            Some(&ws),
            &["load", &truncated.display().to_string()]
        )),
        5
    );
    // a corrupt workspace is also refused when used directly
    assert_eq!(code(&cogweave(Some(&truncated), &["view", "trees"])), 5);
}

#[test]
fn save_and_load_round_trip() {
    let (dir, ws) = workspace();
    stdout(&cogweave(
        Some(&ws),
        &["build", &example("book_a_holiday.cpl")],
    ));
    stdout(&cogweave(
        Some(&ws),
        &["ingest", &example("smart_home.ont")],
    ));
    let saved = dir.path().join("saved.json");
    stdout(&cogweave(
        Some(&ws),
        &["save", &saved.display().to_string()],
    ));
    let other = dir.path().join("other.json");
    stdout(&cogweave(
        Some(&other),
        &["load", &saved.display().to_string()],
    ));
    for args in [
        &["view", "trees"][..],
        &["schedule", "book_a_holiday"],
        &["activate", "Home"],
    ] {
        assert_eq!(
            stdout(&cogweave(Some(&ws), args)),
            stdout(&cogweave(Some(&other), args))
        );
    }
}

#[test]
fn max_cycle_len_bounds_listing() {
    let egg = example("cook_an_egg.cpl");
    let short = stdout(&cogweave(None, &["--max-cycle-len", "4", "cycles", &egg]));
    let long = stdout(&cogweave(None, &["cycles", &egg]));
    assert!(short.lines().all(|l| l.split(' ').count() == 4));
    assert!(short.lines().count() < long.lines().count());
    assert_ne!(
        code(&cogweave(None, &["--max-cycle-len", "3", "cycles", &egg])),
        0
    );
}
