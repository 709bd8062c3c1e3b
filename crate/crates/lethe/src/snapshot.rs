//! Whole-engine snapshots: a canonical JSON document with a checksum trailer.
//!
//! A snapshot file is one line of canonical JSON, a newline, then
//! `sha256:<hex>` of the JSON bytes, then a final newline. Canonical means:
//! compact separators, map keys in sorted order (all maps are B-trees), and
//! struct fields in declaration order — so the same engine state always
//! produces byte-identical files, which is what replay determinism is
//! checked against. Derived structures (the label dictionary, the posting
//! lists) are rebuilt on load rather than stored.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::buoyancy::MbEngine;
use crate::config::EngineConfig;
use crate::context::ContextManager;
use crate::engine::{Engine, UsageRecord};
use crate::error::{Error, Result};
use crate::extraction::Dictionary;
use crate::kg::{Edge, EntityId, KnowledgeGraph, Thing};
use crate::search::SearchIndex;

/// Bump when the document layout changes incompatibly.
pub const SNAPSHOT_VERSION: u64 = 1;

const CHECKSUM_PREFIX: &str = "sha256:";

/// Everything needed to reconstruct an [`Engine`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotDoc {
    pub version: u64,
    pub config: EngineConfig,
    pub things: Vec<Thing>,
    pub edges: Vec<Edge>,
    pub tombstones: Vec<EntityId>,
    pub mb: MbEngine,
    pub contexts: ContextManager,
    /// Per-item term frequencies and concept links; postings are derived.
    pub index: Vec<(EntityId, BTreeMap<String, u32>, BTreeSet<EntityId>)>,
    pub usage: BTreeMap<EntityId, UsageRecord>,
    pub last_ts: Option<f64>,
    pub seq: u64,
    pub last_day: Option<i64>,
    pub recent_texts: Vec<String>,
}

/// Freeze the engine's current state into a document.
pub fn capture(engine: &Engine) -> SnapshotDoc {
    SnapshotDoc {
        version: SNAPSHOT_VERSION,
        config: engine.cfg.clone(),
        things: engine.graph.things_iter().cloned().collect(),
        edges: engine.graph.edges_iter().collect(),
        tombstones: engine.graph.tombstones_iter().cloned().collect(),
        mb: engine.mb.clone(),
        contexts: engine.contexts.clone(),
        index: engine.index.to_rows(),
        usage: engine.usage.clone(),
        last_ts: engine.last_ts,
        seq: engine.seq,
        last_day: engine.last_day,
        recent_texts: engine.recent_texts.clone(),
    }
}

/// Rebuild a live engine from a document, re-deriving dictionary and
/// postings.
pub fn restore(doc: SnapshotDoc) -> Result<Engine> {
    if doc.version != SNAPSHOT_VERSION {
        return Err(Error::VersionMismatch {
            found: doc.version,
            expected: SNAPSHOT_VERSION,
        });
    }
    doc.config.validate()?;
    let mut graph = KnowledgeGraph::new();
    for thing in doc.things {
        graph.add_thing(thing)?;
    }
    for e in doc.edges {
        graph.add_edge_weighted(&e.subject, e.predicate, &e.object, e.weight, e.created_at)?;
    }
    for id in &doc.tombstones {
        graph.tombstone(id)?;
    }
    let dict = Dictionary::build(&graph);
    Ok(Engine {
        cfg: doc.config,
        graph,
        dict,
        mb: doc.mb,
        contexts: doc.contexts,
        index: SearchIndex::from_rows(doc.index),
        usage: doc.usage,
        last_ts: doc.last_ts,
        seq: doc.seq,
        last_day: doc.last_day,
        recent_texts: doc.recent_texts,
    })
}

/// Render the document as the exact file contents: canonical JSON, newline,
/// checksum line, newline.
pub fn to_file_string(doc: &SnapshotDoc) -> Result<String> {
    let json = serde_json::to_string(doc)
        .map_err(|e| Error::Internal(format!("snapshot serialization failed: {e}")))?;
    let digest = Sha256::digest(json.as_bytes());
    Ok(format!("{json}\n{CHECKSUM_PREFIX}{digest:x}\n"))
}

/// Parse file contents back into a document, verifying the checksum first.
pub fn parse(text: &str) -> Result<SnapshotDoc> {
    let trimmed = text.strip_suffix('\n').unwrap_or(text);
    let (json, trailer) = trimmed
        .rsplit_once('\n')
        .ok_or_else(|| Error::CorruptSnapshot("missing checksum line".into()))?;
    let expected_hex = trailer
        .strip_prefix(CHECKSUM_PREFIX)
        .ok_or_else(|| Error::CorruptSnapshot("malformed checksum line".into()))?;
    let digest = Sha256::digest(json.as_bytes());
    if format!("{digest:x}") != expected_hex {
        return Err(Error::CorruptSnapshot("checksum mismatch".into()));
    }
    // surface a clean version error even if the payload schema moved on
    let value: serde_json::Value = serde_json::from_str(json)
        .map_err(|e| Error::CorruptSnapshot(format!("invalid JSON: {e}")))?;
    let found = value.get("version").and_then(|v| v.as_u64());
    if let Some(found) = found {
        if found != SNAPSHOT_VERSION {
            return Err(Error::VersionMismatch {
                found,
                expected: SNAPSHOT_VERSION,
            });
        }
    }
    serde_json::from_value(value).map_err(|e| Error::CorruptSnapshot(format!("bad document: {e}")))
}

/// Write the engine to `path` (canonical bytes).
pub fn save(engine: &Engine, path: &Path) -> Result<()> {
    let doc = capture(engine);
    std::fs::write(path, to_file_string(&doc)?)?;
    Ok(())
}

/// Read, verify, and rebuild an engine from `path`.
pub fn load(path: &Path) -> Result<Engine> {
    let text = std::fs::read_to_string(path)?;
    restore(parse(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activity::{ActivityEvent, EventType, ItemDescriptor, ItemRef};
    use crate::kg::ThingKind;

    fn worked_engine() -> Engine {
        let mut e = Engine::new(EngineConfig::default()).unwrap();
        let mk = |uri: &str, kind: ThingKind, title: &str| {
            ItemRef::Descriptor(ItemDescriptor {
                kind,
                uri: uri.into(),
                title: title.into(),
                start: None,
                end: None,
            })
        };
        e.ingest(
            &ActivityEvent::new(10.0, EventType::Create)
                .with_item(mk("topic:rust", ThingKind::Topic, "rust language")),
        )
        .unwrap();
        e.ingest(
            &ActivityEvent::new(70.0, EventType::CalendarCreate)
                .with_item(mk("cal:study", ThingKind::Event, "study block"))
                .with_text("reading about the rust language"),
        )
        .unwrap();
        e.ingest(
            &ActivityEvent::new(200.0, EventType::Write)
                .with_item(mk("note:borrow", ThingKind::Note, "borrow checker notes"))
                .with_text("rust language ownership and borrows"),
        )
        .unwrap();
        e.ingest(
            &ActivityEvent::new(90_000.0, EventType::Read)
                .with_item(ItemRef::Id("note:borrow".into())),
        )
        .unwrap();
        e
    }

    #[test]
    fn round_trip_preserves_the_document() {
        let e = worked_engine();
        let doc = capture(&e);
        let restored = restore(doc.clone()).unwrap();
        assert_eq!(capture(&restored), doc);
    }

    #[test]
    fn restored_engine_answers_like_the_original() {
        let e = worked_engine();
        let restored = restore(capture(&e)).unwrap();
        let a = e.query("rust language", vec![], None).unwrap();
        let b = restored.query("rust language", vec![], None).unwrap();
        assert_eq!(a, b);
        assert_eq!(e.mb_of(&"note:borrow".into()), restored.mb_of(&"note:borrow".into()));
    }

    #[test]
    fn restored_engine_keeps_ingesting_with_live_dictionary() {
        let e = worked_engine();
        let mut restored = restore(capture(&e)).unwrap();
        let seq_before = restored.events_ingested();
        let s = restored
            .ingest(
                &ActivityEvent::new(90_100.0, EventType::Write)
                    .with_item(ItemRef::Id("note:borrow".into()))
                    .with_text("more on the rust language"),
            )
            .unwrap();
        assert_eq!(s.event_seq, seq_before + 1);
        assert_eq!(s.mentions_found, 1);
    }

    #[test]
    fn file_bytes_are_canonical_and_verified() {
        let e = worked_engine();
        let doc = capture(&e);
        let one = to_file_string(&doc).unwrap();
        let two = to_file_string(&capture(&e)).unwrap();
        assert_eq!(one, two);
        assert!(one.ends_with('\n'));
        assert_eq!(parse(&one).unwrap(), doc);

        // flip one payload byte: the checksum no longer matches
        let tampered = one.replacen("\"seq\":4", "\"seq\":9", 1);
        assert_ne!(tampered, one);
        assert!(matches!(
            parse(&tampered),
            Err(Error::CorruptSnapshot(_))
        ));
        // strip the trailer entirely
        let headless = one.lines().next().unwrap().to_string();
        assert!(matches!(parse(&headless), Err(Error::CorruptSnapshot(_))));
    }

    #[test]
    fn future_versions_are_refused() {
        let e = worked_engine();
        let mut doc = capture(&e);
        doc.version = SNAPSHOT_VERSION + 1;
        let text = to_file_string(&doc).unwrap();
        assert!(matches!(
            parse(&text),
            Err(Error::VersionMismatch { found, expected })
                if found == SNAPSHOT_VERSION + 1 && expected == SNAPSHOT_VERSION
        ));
        assert!(matches!(
            restore(doc),
            Err(Error::VersionMismatch { .. })
        ));
    }

    #[test]
    fn save_load_round_trips_on_disk() {
        let e = worked_engine();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.json");
        save(&e, &path).unwrap();
        let loaded = load(&path).unwrap();
        save(&loaded, &dir.path().join("snap2.json")).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(dir.path().join("snap2.json")).unwrap()
        );
    }
}
