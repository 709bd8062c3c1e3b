//! Replay a shipped scenario log end to end: ingest the JSONL activity
//! stream, write the full report directory (buoyancy trajectory, context
//! timeline, persona reports, resumable snapshot), and prove the whole run
//! is deterministic by doing it twice and comparing bytes.
//!
//! ```bash
//! cargo run -p lethe --example replay_scenario
//! ```

use std::path::Path;

use lethe::config::EngineConfig;
use lethe::replay::{expected_outputs, replay_file};
use lethe::snapshot;

fn main() -> lethe::Result<()> {
    let log = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/research_week.jsonl");
    let dir = tempfile::tempdir().expect("temp dir");

    let out1 = dir.path().join("run1");
    let report = replay_file(&log, EngineConfig::default(), &out1)?;
    println!("replayed {}:", log.display());
    println!(
        "  {} events -> {} things, {} contexts touched",
        report.events, report.things, report.contexts
    );
    println!("  report files written to {}:", out1.display());
    for name in &report.outputs {
        let size = std::fs::metadata(out1.join(name)).map(|m| m.len()).unwrap_or(0);
        println!("    {name:<28} {size:>6} bytes");
    }

    // a taste of the buoyancy trajectory: the last few movements
    let trajectory = std::fs::read_to_string(out1.join("mb_trajectory.csv"))?;
    println!("\n  tail of mb_trajectory.csv:");
    for line in trajectory.lines().rev().take(5).collect::<Vec<_>>().iter().rev() {
        println!("    {line}");
    }

    // run it again: same log, same config => byte-identical outputs
    let out2 = dir.path().join("run2");
    replay_file(&log, EngineConfig::default(), &out2)?;
    let mut identical = 0;
    for name in expected_outputs() {
        let a = std::fs::read(out1.join(&name))?;
        let b = std::fs::read(out2.join(&name))?;
        assert_eq!(a, b, "{} differed between runs", name.display());
        identical += 1;
    }
    println!("\nsecond replay produced {identical}/{identical} byte-identical files");

    // the snapshot in the report directory resumes into a live engine
    let engine = snapshot::load(&out1.join("snapshot.json"))?;
    println!(
        "snapshot resumes: engine at event {}, now = {:.0}, current context {:?}",
        engine.events_ingested(),
        engine.now(),
        engine.contexts().current().map(|c| c.as_str())
    );

    Ok(())
}
