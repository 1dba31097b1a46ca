use std::fs;
use std::path::Path;

use holonsim::environment::{
    load_run, replay_run, run_scenario_with, to_jsonl, write_run, RunError, Scenario, EVENTS,
    SYSTEM,
};

fn parse(text: &str) -> Scenario {
    Scenario::parse(text, "test.toml", Path::new(".")).expect("valid scenario")
}

const MIXED: &str = r#"
seed = 5
duration_s = 20.0
start_day_fraction = 0.6

[energy]
initial_battery_wh = 10.0
liveliness_max_hz = 1.0

[[agents]]
kind = "composer"
count = 3

[[agents]]
kind = "collector"
count = 2

[[agents]]
kind = "disruptor"
count = 2

[[sources]]
name = "bird"
channel = "biophony"
windows = [[2.0, 2.6], [6.0, 6.4], [11.0, 11.8], [15.0, 15.3]]
signal = { type = "tone", freq_hz = 2500.0, level_db = -12.0 }

[[sources]]
name = "wind"
channel = "geophony"
signal = { type = "noise", low_hz = 300.0, high_hz = 900.0, level_db = -45.0 }

[[renders]]
name = "middle"
position = [1.0, 1.0]
"#;

#[test]
fn empty_roster_logs_only_system_records() {
    let s = parse("seed = 2\nduration_s = 12.0\n[[renders]]\nname = \"a\"\n");
    let out = run_scenario_with(&s, 1).unwrap();
    assert_eq!(out.ticks, s.ticks());
    assert!(out
        .records
        .iter()
        .all(|r| r.kind == SYSTEM && (r.event == "boot" || r.event == "clock")));
    assert!(out.records.last().unwrap().is_final());
    assert!(out.emissions.is_empty());
    assert_eq!(out.renders[0].1.len() as u64, s.ticks() * 512);
    assert!(
        out.renders[0].1.iter().any(|&v| v != 0.0),
        "noise floor is audible"
    );
}

#[test]
fn emissions_start_the_tick_after_the_decision() {
    let s = parse(MIXED);
    let out = run_scenario_with(&s, 1).unwrap();
    let mut emits = 0;
    for r in out
        .records
        .iter()
        .filter(|r| ["emit", "playback", "disrupt"].contains(&r.event.as_str()))
    {
        let start = r.payload["start_tick"].as_u64().unwrap();
        let end = r.payload["end_tick"].as_u64().unwrap();
        assert_eq!(start, r.tick + 1, "{r:?}");
        assert!(end >= start);
        if let Some(file) = r.payload.get("file") {
            assert!(out.emissions.contains_key(file.as_str().unwrap()));
        }
        emits += 1;
    }
    assert!(emits > 0);
}

#[test]
fn worker_count_does_not_change_the_run() {
    let s = parse(MIXED);
    let a = run_scenario_with(&s, 1).unwrap();
    let b = run_scenario_with(&s, 3).unwrap();
    assert_eq!(to_jsonl(&a.records), to_jsonl(&b.records));
    assert_eq!(a.renders, b.renders);
    assert_eq!(a.emissions, b.emissions);
    assert_eq!(a.metrics_csv, b.metrics_csv);
}

#[test]
fn stored_run_replays_and_refuses_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    let s = parse(MIXED);
    let out = run_scenario_with(&s, 1).unwrap();
    write_run(dir.path(), &s, &out, false).unwrap();
    let replayed = replay_run(dir.path()).unwrap();
    assert_eq!(replayed.len(), 1);
    assert!(replayed.iter().all(|r| r.matches()));

    assert!(matches!(
        write_run(dir.path(), &s, &out, false),
        Err(RunError::Exists(_))
    ));
    write_run(dir.path(), &s, &out, true).unwrap();
    assert!(load_run(dir.path()).unwrap().log.complete);
}

#[test]
fn truncated_log_is_not_replayed() {
    let dir = tempfile::tempdir().unwrap();
    let s = parse(MIXED);
    let out = run_scenario_with(&s, 1).unwrap();
    write_run(dir.path(), &s, &out, false).unwrap();
    let path = dir.path().join(EVENTS);
    let text = fs::read_to_string(&path).unwrap();
    let cut: Vec<&str> = text.lines().collect();
    fs::write(&path, cut[..cut.len() / 2].join("\n")).unwrap();
    assert!(matches!(replay_run(dir.path()), Err(RunError::Corrupt(_))));
}
