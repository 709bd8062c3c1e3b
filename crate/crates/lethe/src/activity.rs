//! The user-activity event stream.
//!
//! Every observable interaction — opening a file, writing a note, dragging
//! something onto a context, a calendar entry appearing — arrives as one
//! JSON-lines record. This module owns the schema, parsing and validation;
//! the engine owns what the events *do*.

use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityId, ThingKind};

/// The twelve interaction kinds the engine understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventType {
    Open,
    Read,
    Write,
    Click,
    Tag,
    DragToContext,
    Create,
    DeleteRequest,
    Search,
    SwitchContext,
    CalendarCreate,
    CalendarEnd,
}

impl EventType {
    pub const ALL: [EventType; 12] = [
        EventType::Open,
        EventType::Read,
        EventType::Write,
        EventType::Click,
        EventType::Tag,
        EventType::DragToContext,
        EventType::Create,
        EventType::DeleteRequest,
        EventType::Search,
        EventType::SwitchContext,
        EventType::CalendarCreate,
        EventType::CalendarEnd,
    ];
}

/// A not-yet-known item carried inline by an event. Descriptors are keyed by
/// `uri`: the same uri always resolves to the same Thing. `start`/`end`
/// (epoch seconds) let calendar descriptors carry their schedule, which the
/// buoyancy module reads for anticipation and finished-marking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemDescriptor {
    pub kind: ThingKind,
    pub uri: String,
    #[serde(default)]
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<f64>,
}

/// The item an event concerns: either an id already in the graph or an
/// inline descriptor that the engine upserts on first sight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ItemRef {
    Id(EntityId),
    Descriptor(ItemDescriptor),
}

impl ItemRef {
    /// The id this reference resolves to (a descriptor's uri is its id).
    pub fn id(&self) -> EntityId {
        match self {
            ItemRef::Id(id) => id.clone(),
            ItemRef::Descriptor(d) => EntityId::new(d.uri.clone()),
        }
    }
}

/// One observed interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityEvent {
    /// UTC seconds, fractional allowed.
    pub ts: f64,
    pub event_type: EventType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item: Option<ItemRef>,
    /// Evidence snippet: window title, mail subject, typed text, query terms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    /// Context explicitly selected by the user; always wins over elicitation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_hint: Option<EntityId>,
    /// Source identifier of the emitting plug-out.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub app: String,
}

impl ActivityEvent {
    pub fn new(ts: f64, event_type: EventType) -> Self {
        ActivityEvent {
            ts,
            event_type,
            item: None,
            text: None,
            context_hint: None,
            app: String::new(),
        }
    }

    pub fn with_item(mut self, item: ItemRef) -> Self {
        self.item = Some(item);
        self
    }

    pub fn with_descriptor(self, kind: ThingKind, uri: &str, title: &str) -> Self {
        self.with_item(ItemRef::Descriptor(ItemDescriptor {
            kind,
            uri: uri.to_string(),
            title: title.to_string(),
            start: None,
            end: None,
        }))
    }

    pub fn with_text(mut self, text: impl Into<String>) -> Self {
        self.text = Some(text.into());
        self
    }

    pub fn with_hint(mut self, ctx: impl Into<EntityId>) -> Self {
        self.context_hint = Some(ctx.into());
        self
    }

    pub fn with_app(mut self, app: impl Into<String>) -> Self {
        self.app = app.into();
        self
    }

    /// Check the cross-field invariants of the schema.
    pub fn validate(&self) -> Result<()> {
        if !self.ts.is_finite() {
            return Err(Error::InvariantViolation("ts not finite".into()));
        }
        match self.event_type {
            EventType::DragToContext => {
                if self.item.is_none() || self.context_hint.is_none() {
                    return Err(Error::InvariantViolation(
                        "drag_to_context requires both item and context_hint".into(),
                    ));
                }
            }
            EventType::CalendarCreate => match &self.item {
                Some(ItemRef::Descriptor(d)) if d.kind == ThingKind::Event => {}
                _ => {
                    return Err(Error::InvariantViolation(
                        "calendar_create requires an item descriptor of kind event".into(),
                    ))
                }
            },
            _ => {}
        }
        Ok(())
    }

    /// Serialize to one JSON-lines record.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("event serialization cannot fail")
    }
}

/// Parse and validate one JSON-lines record.
pub fn parse_event_line(line: &str) -> Result<ActivityEvent> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| Error::MalformedEvent(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::MalformedEvent("record is not a JSON object".into()))?;
    if !obj.contains_key("ts") {
        return Err(Error::MissingField("ts"));
    }
    if !obj.contains_key("event_type") {
        return Err(Error::MissingField("event_type"));
    }
    let event: ActivityEvent =
        serde_json::from_value(value).map_err(|e| Error::MalformedEvent(e.to_string()))?;
    event.validate()?;
    Ok(event)
}

/// Load a whole event log, annotating any failure with its line number.
pub fn load_log(path: impl AsRef<Path>) -> Result<Vec<ActivityEvent>> {
    let file = std::fs::File::open(path)?;
    parse_log(std::io::BufReader::new(file))
}

/// Parse an event log from any reader; blank lines are skipped.
pub fn parse_log(reader: impl BufRead) -> Result<Vec<ActivityEvent>> {
    let mut events = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event = parse_event_line(&line)
            .map_err(|e| Error::MalformedEvent(format!("line {}: {e}", idx + 1)))?;
        events.push(event);
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_round_trip() {
        let line = r#"{"ts":1700000000,"event_type":"open","item":{"kind":"file","uri":"file:///a.pdf","title":"a.pdf"},"app":"files"}"#;
        let ev = parse_event_line(line).unwrap();
        assert_eq!(ev.ts, 1_700_000_000.0);
        assert_eq!(ev.event_type, EventType::Open);
        assert_eq!(ev.item.as_ref().unwrap().id(), EntityId::from("file:///a.pdf"));
        assert_eq!(ev.app, "files");
        let reparsed = parse_event_line(&ev.to_line()).unwrap();
        assert_eq!(ev, reparsed);
    }

    #[test]
    fn item_as_bare_id() {
        let ev = parse_event_line(r#"{"ts":5,"event_type":"click","item":"pimo:topicML"}"#).unwrap();
        assert_eq!(ev.item.unwrap().id(), EntityId::from("pimo:topicML"));
    }

    #[test]
    fn missing_required_fields() {
        assert!(matches!(
            parse_event_line(r#"{"event_type":"open"}"#),
            Err(Error::MissingField("ts"))
        ));
        assert!(matches!(
            parse_event_line(r#"{"ts":1}"#),
            Err(Error::MissingField("event_type"))
        ));
    }

    #[test]
    fn syntax_error_is_malformed() {
        assert!(matches!(parse_event_line("{not json"), Err(Error::MalformedEvent(_))));
        assert!(matches!(parse_event_line(r#""just a string""#), Err(Error::MalformedEvent(_))));
        assert!(matches!(
            parse_event_line(r#"{"ts":"later","event_type":"open"}"#),
            Err(Error::MalformedEvent(_))
        ));
    }

    #[test]
    fn drag_without_hint_rejected() {
        let line = r#"{"ts":1,"event_type":"drag_to_context","item":"file:///a"}"#;
        assert!(matches!(parse_event_line(line), Err(Error::InvariantViolation(_))));
        let ok = r#"{"ts":1,"event_type":"drag_to_context","item":"file:///a","context_hint":"ctx:1"}"#;
        assert!(parse_event_line(ok).is_ok());
    }

    #[test]
    fn calendar_create_needs_event_descriptor() {
        let bad = r#"{"ts":1,"event_type":"calendar_create","item":{"kind":"file","uri":"u","title":"t"}}"#;
        assert!(matches!(parse_event_line(bad), Err(Error::InvariantViolation(_))));
        let bare_id = r#"{"ts":1,"event_type":"calendar_create","item":"some:event"}"#;
        assert!(matches!(parse_event_line(bare_id), Err(Error::InvariantViolation(_))));
        let ok = r#"{"ts":1,"event_type":"calendar_create","item":{"kind":"event","uri":"cal:1","title":"kickoff","start":100.0,"end":200.0}}"#;
        let ev = parse_event_line(ok).unwrap();
        match ev.item.unwrap() {
            ItemRef::Descriptor(d) => {
                assert_eq!(d.start, Some(100.0));
                assert_eq!(d.end, Some(200.0));
            }
            _ => panic!("expected descriptor"),
        }
    }

    #[test]
    fn unknown_extra_fields_ignored() {
        let line = r#"{"ts":2,"event_type":"search","text":"machine learning","battery":0.93}"#;
        let ev = parse_event_line(line).unwrap();
        assert_eq!(ev.text.as_deref(), Some("machine learning"));
    }

    #[test]
    fn log_errors_carry_line_numbers() {
        let log = "{\"ts\":1,\"event_type\":\"open\"}\n\n{oops\n";
        let err = parse_log(std::io::Cursor::new(log)).unwrap_err();
        match err {
            Error::MalformedEvent(msg) => assert!(msg.starts_with("line 3:"), "{msg}"),
            other => panic!("unexpected: {other:?}"),
        }
    }
}
