//! Log replay with full report output: ingest a JSONL activity log into a
//! fresh engine and write the buoyancy trajectory, the context timeline, the
//! four persona preservation reports, and a resumable snapshot.
//!
//! All output files are deterministic functions of (log, config): fixed
//! column orders, fixed float formatting, sorted rows. Replaying the same
//! log twice must produce byte-identical directories — tests diff them.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::activity::load_log;
use crate::config::EngineConfig;
use crate::engine::Engine;
use crate::error::Result;
use crate::preservation::Persona;
use crate::snapshot;

/// What a replay produced, for human-facing summaries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayReport {
    pub events: u64,
    pub things: usize,
    pub contexts: usize,
    pub outputs: Vec<String>,
}

/// Quote a CSV field only when it needs it.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn write_file(dir: &Path, name: &str, contents: &str, outputs: &mut Vec<String>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    outputs.push(name.to_string());
    Ok(())
}

/// Replay `log_path` into a fresh engine configured by `cfg`, writing all
/// report files into `out_dir` (created if missing).
pub fn replay_file(log_path: &Path, cfg: EngineConfig, out_dir: &Path) -> Result<ReplayReport> {
    let events = load_log(log_path)?;
    std::fs::create_dir_all(out_dir)?;
    let mut engine = Engine::new(cfg)?;

    let mut trajectory = String::from("node,event_seq,mb\n");
    for event in &events {
        let summary = engine.ingest(event)?;
        for (node, mb) in &summary.mb_updates {
            let _ = writeln!(
                trajectory,
                "{},{},{:.9}",
                csv_field(node.as_str()),
                summary.event_seq,
                mb
            );
        }
    }

    let mut outputs = Vec::new();
    write_file(out_dir, "mb_trajectory.csv", &trajectory, &mut outputs)?;

    // context timeline, as csv and as json
    let mut timeline_csv = String::from("ts,event_seq,kind,ctx,detail\n");
    for rec in engine.contexts().timeline() {
        let kind = serde_json::to_value(rec.kind)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        let _ = writeln!(
            timeline_csv,
            "{},{},{},{},{}",
            rec.ts,
            rec.event_seq,
            kind,
            csv_field(rec.ctx.as_str()),
            csv_field(&rec.detail)
        );
    }
    write_file(out_dir, "context_timeline.csv", &timeline_csv, &mut outputs)?;
    let timeline_json = serde_json::to_string_pretty(engine.contexts().timeline())
        .map_err(|e| crate::Error::Internal(format!("timeline serialization failed: {e}")))?;
    write_file(out_dir, "context_timeline.json", &timeline_json, &mut outputs)?;

    // preservation reports under every persona
    for persona in Persona::ALL {
        let (assessments, _) = engine.assess(persona, None)?;
        let mut csv = String::from(
            "item,investment,gravity,social_graph,popularity,coverage,quality,pv,decision,promoted\n",
        );
        for a in &assessments {
            let _ = writeln!(
                csv,
                "{},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{},{}",
                csv_field(a.item.as_str()),
                a.dims.investment,
                a.dims.gravity,
                a.dims.social_graph,
                a.dims.popularity,
                a.dims.coverage,
                a.dims.quality,
                a.pv,
                match a.decision {
                    crate::preservation::Decision::Preserve => "preserve",
                    crate::preservation::Decision::Other => "other",
                },
                a.promoted
            );
        }
        write_file(
            out_dir,
            &format!("pv_report_{}.csv", persona.as_str()),
            &csv,
            &mut outputs,
        )?;
        let json = serde_json::to_string_pretty(&assessments)
            .map_err(|e| crate::Error::Internal(format!("pv serialization failed: {e}")))?;
        write_file(
            out_dir,
            &format!("pv_report_{}.json", persona.as_str()),
            &json,
            &mut outputs,
        )?;
    }

    snapshot::save(&engine, &out_dir.join("snapshot.json"))?;
    outputs.push("snapshot.json".to_string());

    Ok(ReplayReport {
        events: engine.events_ingested(),
        things: engine.graph().things_iter().count(),
        contexts: engine.contexts().timeline().iter().map(|r| &r.ctx).collect::<std::collections::BTreeSet<_>>().len(),
        outputs,
    })
}

/// Replay a log that is already in memory (no report files). Used by tests
/// and the equivalence checks.
pub fn replay_events(events: &[crate::activity::ActivityEvent], cfg: EngineConfig) -> Result<Engine> {
    let mut engine = Engine::new(cfg)?;
    for event in events {
        engine.ingest(event)?;
    }
    Ok(engine)
}

/// All files a replay writes, in a stable order (everything except the
/// per-run directory itself).
pub fn expected_outputs() -> Vec<PathBuf> {
    let mut v = vec![
        PathBuf::from("mb_trajectory.csv"),
        PathBuf::from("context_timeline.csv"),
        PathBuf::from("context_timeline.json"),
    ];
    for persona in Persona::ALL {
        v.push(PathBuf::from(format!("pv_report_{}.csv", persona.as_str())));
        v.push(PathBuf::from(format!("pv_report_{}.json", persona.as_str())));
    }
    v.push(PathBuf::from("snapshot.json"));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_activity, ActivityProfile};

    fn write_log(dir: &Path, events: &[crate::activity::ActivityEvent]) -> PathBuf {
        let path = dir.join("log.jsonl");
        let mut text = String::new();
        for ev in events {
            text.push_str(&ev.to_line());
            text.push('\n');
        }
        std::fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn replay_writes_every_report_deterministically() {
        let profile = ActivityProfile { contexts: 3, events: 60, ..Default::default() };
        let (events, _) = generate_activity(&profile, 17).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let log = write_log(dir.path(), &events);

        let out1 = dir.path().join("run1");
        let out2 = dir.path().join("run2");
        let report = replay_file(&log, EngineConfig::default(), &out1).unwrap();
        let report2 = replay_file(&log, EngineConfig::default(), &out2).unwrap();
        assert_eq!(report, report2);
        assert_eq!(report.events, events.len() as u64);

        for name in expected_outputs() {
            let a = std::fs::read(out1.join(&name)).unwrap();
            let b = std::fs::read(out2.join(&name)).unwrap();
            assert!(!a.is_empty(), "{} must not be empty", name.display());
            assert_eq!(a, b, "{} must be byte-identical", name.display());
        }
        assert_eq!(report.outputs.len(), expected_outputs().len());
    }

    #[test]
    fn trajectory_rows_are_well_formed() {
        let profile = ActivityProfile { contexts: 2, events: 30, ..Default::default() };
        let (events, _) = generate_activity(&profile, 8).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let log = write_log(dir.path(), &events);
        let out = dir.path().join("out");
        replay_file(&log, EngineConfig::default(), &out).unwrap();

        let text = std::fs::read_to_string(out.join("mb_trajectory.csv")).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("node,event_seq,mb"));
        let mut rows = 0;
        for line in lines {
            let parts: Vec<&str> = line.split(',').collect();
            assert_eq!(parts.len(), 3, "bad row {line}");
            let seq: u64 = parts[1].parse().unwrap();
            assert!(seq >= 1);
            let mb: f64 = parts[2].parse().unwrap();
            assert!((0.0..=1.0).contains(&mb));
            rows += 1;
        }
        assert!(rows > 0);
    }

    #[test]
    fn split_replay_matches_full_replay() {
        let profile = ActivityProfile { contexts: 3, events: 80, ..Default::default() };
        let (events, _) = generate_activity(&profile, 33).unwrap();
        let full = replay_events(&events, EngineConfig::default()).unwrap();

        let mid = events.len() / 2;
        let first = replay_events(&events[..mid], EngineConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let snap = dir.path().join("mid.json");
        snapshot::save(&first, &snap).unwrap();
        let mut resumed = snapshot::load(&snap).unwrap();
        for ev in &events[mid..] {
            resumed.ingest(ev).unwrap();
        }

        assert_eq!(
            snapshot::to_file_string(&snapshot::capture(&full)).unwrap(),
            snapshot::to_file_string(&snapshot::capture(&resumed)).unwrap()
        );
    }
}
