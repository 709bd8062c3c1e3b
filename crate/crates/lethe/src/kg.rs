//! Typed property-graph store for things, items and relations.
//!
//! The graph is the substrate every other subsystem reads and writes: label
//! lookup backs entity extraction, adjacency backs spreading activation and
//! injection views, and the `subContextOf` sub-graph carries the context
//! hierarchy (kept acyclic on every insert).
//!
//! All iteration is in sorted order so replays are bit-reproducible.
//! Deletions are soft: a tombstone flag marks a thing as removed while it
//! stays resolvable, which keeps forgetting measures reversible until an
//! explicit purge.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::normalize;

/// Opaque identifier of a graph entity, unique within one engine instance.
/// URI-shaped by convention (`pimo:topicML`, `file:///a.pdf`, `urn:ctx:3`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(String);

impl EntityId {
    pub fn new(id: impl Into<String>) -> Self {
        EntityId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        EntityId(s.to_string())
    }
}

impl From<String> for EntityId {
    fn from(s: String) -> Self {
        EntityId(s)
    }
}

/// The concept/item vocabulary of the personal knowledge graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThingKind {
    Person,
    Organization,
    Location,
    Topic,
    Project,
    Event,
    Task,
    File,
    Email,
    Bookmark,
    Webpage,
    Photo,
    Note,
    Collection,
    Context,
}

impl ThingKind {
    pub const ALL: [ThingKind; 15] = [
        ThingKind::Person,
        ThingKind::Organization,
        ThingKind::Location,
        ThingKind::Topic,
        ThingKind::Project,
        ThingKind::Event,
        ThingKind::Task,
        ThingKind::File,
        ThingKind::Email,
        ThingKind::Bookmark,
        ThingKind::Webpage,
        ThingKind::Photo,
        ThingKind::Note,
        ThingKind::Collection,
        ThingKind::Context,
    ];

    /// Concept kinds populate a context's `is_about` set when mentioned.
    pub fn is_concept(self) -> bool {
        matches!(
            self,
            ThingKind::Person
                | ThingKind::Organization
                | ThingKind::Location
                | ThingKind::Topic
                | ThingKind::Project
                | ThingKind::Event
                | ThingKind::Task
        )
    }

    /// Resource kinds become context members when mentioned.
    pub fn is_resource(self) -> bool {
        matches!(
            self,
            ThingKind::File
                | ThingKind::Email
                | ThingKind::Bookmark
                | ThingKind::Webpage
                | ThingKind::Photo
                | ThingKind::Note
                | ThingKind::Collection
        )
    }
}

/// Closed relation vocabulary. Extension happens through thing attributes,
/// not new predicates, so spreading-activation weights stay total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Predicate {
    IsContainedIn,
    HasSuggestedTopic,
    HasTopic,
    SubContextOf,
    RelatedTo,
    AttendedBy,
    LocatedAt,
    HasPart,
    NucleusOf,
}

impl Predicate {
    pub const ALL: [Predicate; 9] = [
        Predicate::IsContainedIn,
        Predicate::HasSuggestedTopic,
        Predicate::HasTopic,
        Predicate::SubContextOf,
        Predicate::RelatedTo,
        Predicate::AttendedBy,
        Predicate::LocatedAt,
        Predicate::HasPart,
        Predicate::NucleusOf,
    ];
}

/// A typed node of the knowledge graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thing {
    pub id: EntityId,
    pub kind: ThingKind,
    pub primary_label: String,
    #[serde(default)]
    pub alt_labels: Vec<String>,
    /// Seconds since the Unix epoch, UTC.
    pub created_at: f64,
    /// Free-form typed metadata, e.g. event `start`/`end` times or a photo
    /// `quality` score.
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
}

impl Thing {
    pub fn new(id: impl Into<EntityId>, kind: ThingKind, label: impl Into<String>) -> Self {
        Thing {
            id: id.into(),
            kind,
            primary_label: label.into(),
            alt_labels: Vec::new(),
            created_at: 0.0,
            attributes: BTreeMap::new(),
        }
    }

    pub fn with_created_at(mut self, ts: f64) -> Self {
        self.created_at = ts;
        self
    }

    pub fn with_alt_label(mut self, label: impl Into<String>) -> Self {
        self.alt_labels.push(label.into());
        self
    }

    pub fn with_attribute(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.attributes.insert(key.into(), value.into());
        self
    }

    /// Numeric attribute accessor; unparseable values read as absent.
    pub fn attr_f64(&self, key: &str) -> Option<f64> {
        self.attributes.get(key).and_then(|v| v.parse::<f64>().ok())
    }

    fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::InvalidThing("empty id".into()));
        }
        if self.primary_label.is_empty() {
            return Err(Error::InvalidThing(format!("{}: empty primary label", self.id)));
        }
        if self.kind == ThingKind::Event {
            if let (Some(start), Some(end)) = (self.attr_f64("start"), self.attr_f64("end")) {
                if start > end {
                    return Err(Error::InvalidThing(format!(
                        "{}: event start {start} after end {end}",
                        self.id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A labeled directed relation between two things.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub subject: EntityId,
    pub predicate: Predicate,
    pub object: EntityId,
    pub created_at: f64,
    /// Relation strength in (0, 1]; 1.0 unless stated otherwise.
    pub weight: f64,
}

/// Which incident edges `neighbors` should return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
    Both,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct EdgeInfo {
    created_at: f64,
    weight: f64,
}

/// The property-graph store. Single logical writer, any number of readers.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    things: BTreeMap<EntityId, Thing>,
    tombstones: BTreeSet<EntityId>,
    edges: BTreeMap<(EntityId, Predicate, EntityId), EdgeInfo>,
    out: BTreeMap<EntityId, BTreeSet<(Predicate, EntityId)>>,
    inc: BTreeMap<EntityId, BTreeSet<(Predicate, EntityId)>>,
    /// Normalized label (tokens joined by a single space) -> ids.
    labels: BTreeMap<String, BTreeSet<EntityId>>,
    /// Bumped whenever the label table changes; extraction dictionaries
    /// record the version they were built against.
    label_version: u64,
}

fn label_key(label: &str) -> Option<String> {
    let tokens = normalize(label);
    if tokens.is_empty() {
        None
    } else {
        Some(tokens.join(" "))
    }
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_thing(&mut self, thing: Thing) -> Result<EntityId> {
        thing.validate()?;
        if self.things.contains_key(&thing.id) {
            return Err(Error::DuplicateId(thing.id.to_string()));
        }
        let id = thing.id.clone();
        for label in std::iter::once(&thing.primary_label).chain(thing.alt_labels.iter()) {
            if let Some(key) = label_key(label) {
                self.labels.entry(key).or_default().insert(id.clone());
            }
        }
        // Context labels are invisible to the mention dictionary (they echo
        // their nucleus), so adding one must not invalidate built dictionaries.
        if thing.kind != ThingKind::Context {
            self.label_version += 1;
        }
        self.things.insert(id.clone(), thing);
        Ok(id)
    }

    pub fn thing(&self, id: &EntityId) -> Option<&Thing> {
        self.things.get(id)
    }

    pub fn contains(&self, id: &EntityId) -> bool {
        self.things.contains_key(id)
    }

    fn require(&self, id: &EntityId) -> Result<&Thing> {
        self.things
            .get(id)
            .ok_or_else(|| Error::UnknownEntity(id.to_string()))
    }

    /// Set or replace an attribute on an existing thing. Event start/end
    /// ordering is re-checked.
    pub fn set_attribute(&mut self, id: &EntityId, key: &str, value: &str) -> Result<()> {
        self.require(id)?;
        let thing = self.things.get_mut(id).unwrap();
        let previous = thing.attributes.insert(key.to_string(), value.to_string());
        if let Err(e) = thing.validate() {
            // roll back so the store never holds an invalid thing
            let thing = self.things.get_mut(id).unwrap();
            match previous {
                Some(p) => thing.attributes.insert(key.to_string(), p),
                None => thing.attributes.remove(key),
            };
            return Err(e);
        }
        Ok(())
    }

    /// Mark a thing as soft-deleted. It stays resolvable and keeps its edges.
    pub fn tombstone(&mut self, id: &EntityId) -> Result<()> {
        self.require(id)?;
        self.tombstones.insert(id.clone());
        Ok(())
    }

    pub fn is_tombstoned(&self, id: &EntityId) -> bool {
        self.tombstones.contains(id)
    }

    pub fn add_edge(&mut self, subject: &EntityId, predicate: Predicate, object: &EntityId) -> Result<Edge> {
        self.add_edge_weighted(subject, predicate, object, 1.0, 0.0)
    }

    /// Insert an edge with an explicit weight and creation time. Repeating an
    /// identical triple is a no-op returning the stored edge.
    pub fn add_edge_weighted(
        &mut self,
        subject: &EntityId,
        predicate: Predicate,
        object: &EntityId,
        weight: f64,
        created_at: f64,
    ) -> Result<Edge> {
        self.require(subject)?;
        self.require(object)?;
        if !(weight > 0.0 && weight <= 1.0) {
            return Err(Error::OutOfRange(format!("edge weight {weight} not in (0,1]")));
        }
        let key = (subject.clone(), predicate, object.clone());
        if let Some(info) = self.edges.get(&key) {
            return Ok(Edge {
                subject: subject.clone(),
                predicate,
                object: object.clone(),
                created_at: info.created_at,
                weight: info.weight,
            });
        }
        if predicate == Predicate::SubContextOf && self.would_close_context_cycle(subject, object) {
            return Err(Error::CycleRejected {
                subject: subject.to_string(),
                object: object.to_string(),
            });
        }
        self.edges.insert(key, EdgeInfo { created_at, weight });
        self.out
            .entry(subject.clone())
            .or_default()
            .insert((predicate, object.clone()));
        self.inc
            .entry(object.clone())
            .or_default()
            .insert((predicate, subject.clone()));
        Ok(Edge {
            subject: subject.clone(),
            predicate,
            object: object.clone(),
            created_at,
            weight,
        })
    }

    /// True if adding `subject subContextOf object` would create a cycle,
    /// i.e. `subject` is already reachable from `object` along subContextOf.
    fn would_close_context_cycle(&self, subject: &EntityId, object: &EntityId) -> bool {
        if subject == object {
            return true;
        }
        let mut stack = vec![object.clone()];
        let mut seen = BTreeSet::new();
        while let Some(node) = stack.pop() {
            if !seen.insert(node.clone()) {
                continue;
            }
            if let Some(out) = self.out.get(&node) {
                for (p, far) in out {
                    if *p != Predicate::SubContextOf {
                        continue;
                    }
                    if far == subject {
                        return true;
                    }
                    stack.push(far.clone());
                }
            }
        }
        false
    }

    pub fn remove_edge(&mut self, subject: &EntityId, predicate: Predicate, object: &EntityId) -> bool {
        let key = (subject.clone(), predicate, object.clone());
        if self.edges.remove(&key).is_none() {
            return false;
        }
        if let Some(set) = self.out.get_mut(subject) {
            set.remove(&(predicate, object.clone()));
        }
        if let Some(set) = self.inc.get_mut(object) {
            set.remove(&(predicate, subject.clone()));
        }
        true
    }

    pub fn has_edge(&self, subject: &EntityId, predicate: Predicate, object: &EntityId) -> bool {
        self.edges
            .contains_key(&(subject.clone(), predicate, object.clone()))
    }

    fn edge_at(&self, subject: &EntityId, predicate: Predicate, object: &EntityId) -> Edge {
        let info = self.edges[&(subject.clone(), predicate, object.clone())];
        Edge {
            subject: subject.clone(),
            predicate,
            object: object.clone(),
            created_at: info.created_at,
            weight: info.weight,
        }
    }

    /// Incident edges of `id` with their far endpoints, ordered by predicate,
    /// then far-endpoint id, then direction (out before in). A self-loop shows
    /// up once per direction under `Both`.
    pub fn neighbors(
        &self,
        id: &EntityId,
        predicates: Option<&BTreeSet<Predicate>>,
        direction: Direction,
    ) -> Result<Vec<(Edge, &Thing)>> {
        self.require(id)?;
        let keep = |p: Predicate| predicates.map_or(true, |set| set.contains(&p));
        // (predicate, far id, incoming?, edge)
        let mut rows: Vec<(Predicate, &EntityId, bool, Edge)> = Vec::new();
        if direction != Direction::In {
            if let Some(out) = self.out.get(id) {
                for (p, far) in out {
                    if keep(*p) {
                        rows.push((*p, far, false, self.edge_at(id, *p, far)));
                    }
                }
            }
        }
        if direction != Direction::Out {
            if let Some(inc) = self.inc.get(id) {
                for (p, far) in inc {
                    if keep(*p) {
                        rows.push((*p, far, true, self.edge_at(far, *p, id)));
                    }
                }
            }
        }
        rows.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
        Ok(rows
            .into_iter()
            .map(|(_, far, _, edge)| (edge, &self.things[far]))
            .collect())
    }

    /// Incident edge count over both directions (a self-loop counts twice).
    pub fn degree(&self, id: &EntityId) -> usize {
        self.out.get(id).map_or(0, BTreeSet::len) + self.inc.get(id).map_or(0, BTreeSet::len)
    }

    /// Lean adjacency for traversals: (predicate, far endpoint, weight),
    /// sorted, both directions.
    pub(crate) fn incident(&self, id: &EntityId) -> Vec<(Predicate, EntityId, f64)> {
        let mut rows = Vec::new();
        if let Some(out) = self.out.get(id) {
            for (p, far) in out {
                let w = self.edges[&(id.clone(), *p, far.clone())].weight;
                rows.push((*p, far.clone(), w));
            }
        }
        if let Some(inc) = self.inc.get(id) {
            for (p, far) in inc {
                let w = self.edges[&(far.clone(), *p, id.clone())].weight;
                rows.push((*p, far.clone(), w));
            }
        }
        rows.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
        rows
    }

    /// All things whose primary or alternate label normalizes to the same
    /// token sequence as `label`, ordered by id.
    pub fn lookup_by_label(&self, label: &str) -> Vec<EntityId> {
        match label_key(label) {
            Some(key) => self
                .labels
                .get(&key)
                .map(|set| set.iter().cloned().collect())
                .unwrap_or_default(),
            None => Vec::new(),
        }
    }

    pub fn label_version(&self) -> u64 {
        self.label_version
    }

    pub fn things_iter(&self) -> impl Iterator<Item = &Thing> {
        self.things.values()
    }

    pub fn edges_iter(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().map(|((s, p, o), info)| Edge {
            subject: s.clone(),
            predicate: *p,
            object: o.clone(),
            created_at: info.created_at,
            weight: info.weight,
        })
    }

    pub fn tombstones_iter(&self) -> impl Iterator<Item = &EntityId> {
        self.tombstones.iter()
    }

    pub fn thing_count(&self) -> usize {
        self.things.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn topic(id: &str, label: &str) -> Thing {
        Thing::new(id, ThingKind::Topic, label)
    }

    #[test]
    fn insertion_round_trip() {
        let mut g = KnowledgeGraph::new();
        let id = g
            .add_thing(topic("pimo:topicML", "machine learning"))
            .unwrap();
        assert_eq!(id, EntityId::from("pimo:topicML"));
        assert_eq!(g.thing(&id).unwrap().primary_label, "machine learning");
        assert_eq!(g.lookup_by_label("machine learning"), vec![id]);
    }

    #[test]
    fn duplicate_id_rejected() {
        let mut g = KnowledgeGraph::new();
        g.add_thing(topic("a", "a label")).unwrap();
        assert!(matches!(
            g.add_thing(topic("a", "other")),
            Err(Error::DuplicateId(_))
        ));
    }

    #[test]
    fn empty_label_rejected() {
        let mut g = KnowledgeGraph::new();
        assert!(matches!(
            g.add_thing(topic("a", "")),
            Err(Error::InvalidThing(_))
        ));
    }

    #[test]
    fn event_start_after_end_rejected() {
        let mut g = KnowledgeGraph::new();
        let bad = Thing::new("e", ThingKind::Event, "kickoff")
            .with_attribute("start", "200")
            .with_attribute("end", "100");
        assert!(matches!(g.add_thing(bad), Err(Error::InvalidThing(_))));
        let ok = Thing::new("e", ThingKind::Event, "kickoff")
            .with_attribute("start", "100")
            .with_attribute("end", "200");
        g.add_thing(ok).unwrap();
        assert!(g.set_attribute(&"e".into(), "end", "50").is_err());
        // failed update must roll back
        assert_eq!(g.thing(&"e".into()).unwrap().attr_f64("end"), Some(200.0));
    }

    #[test]
    fn edge_endpoints_must_exist() {
        let mut g = KnowledgeGraph::new();
        g.add_thing(topic("a", "a")).unwrap();
        assert!(matches!(
            g.add_edge(&"a".into(), Predicate::RelatedTo, &"b".into()),
            Err(Error::UnknownEntity(_))
        ));
    }

    #[test]
    fn edge_idempotent() {
        let mut g = KnowledgeGraph::new();
        g.add_thing(topic("doc1", "dfki website")).unwrap();
        g.add_thing(topic("topicML", "machine learning")).unwrap();
        let e1 = g
            .add_edge(&"doc1".into(), Predicate::HasSuggestedTopic, &"topicML".into())
            .unwrap();
        let e2 = g
            .add_edge(&"doc1".into(), Predicate::HasSuggestedTopic, &"topicML".into())
            .unwrap();
        assert_eq!(e1, e2);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn sub_context_self_loop_is_cycle() {
        let mut g = KnowledgeGraph::new();
        g.add_thing(Thing::new("ctxA", ThingKind::Context, "A")).unwrap();
        assert!(matches!(
            g.add_edge(&"ctxA".into(), Predicate::SubContextOf, &"ctxA".into()),
            Err(Error::CycleRejected { .. })
        ));
    }

    #[test]
    fn sub_context_cycle_rejected_transitively() {
        let mut g = KnowledgeGraph::new();
        for id in ["a", "b", "c"] {
            g.add_thing(Thing::new(id, ThingKind::Context, id)).unwrap();
        }
        g.add_edge(&"a".into(), Predicate::SubContextOf, &"b".into()).unwrap();
        g.add_edge(&"b".into(), Predicate::SubContextOf, &"c".into()).unwrap();
        assert!(matches!(
            g.add_edge(&"c".into(), Predicate::SubContextOf, &"a".into()),
            Err(Error::CycleRejected { .. })
        ));
        // non-context predicates may close the same shape
        g.add_edge(&"c".into(), Predicate::RelatedTo, &"a".into()).unwrap();
    }

    #[test]
    fn neighbors_directions() {
        let mut g = KnowledgeGraph::new();
        for id in ["hub", "x", "y", "z"] {
            g.add_thing(topic(id, id)).unwrap();
        }
        g.add_edge(&"hub".into(), Predicate::RelatedTo, &"x".into()).unwrap();
        g.add_edge(&"hub".into(), Predicate::HasTopic, &"y".into()).unwrap();
        g.add_edge(&"hub".into(), Predicate::RelatedTo, &"z".into()).unwrap();
        g.add_edge(&"z".into(), Predicate::RelatedTo, &"hub".into()).unwrap();

        let out = g.neighbors(&"hub".into(), None, Direction::Out).unwrap();
        assert_eq!(out.len(), 3);
        let both = g.neighbors(&"hub".into(), None, Direction::Both).unwrap();
        assert_eq!(both.len(), 4);
        let filter: BTreeSet<Predicate> = [Predicate::HasTopic].into_iter().collect();
        let only = g.neighbors(&"hub".into(), Some(&filter), Direction::Both).unwrap();
        assert_eq!(only.len(), 1);
        assert_eq!(only[0].1.id, EntityId::from("y"));
        let none = g.neighbors(&"x".into(), None, Direction::Out).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn shared_alt_label_lookup() {
        let mut g = KnowledgeGraph::new();
        g.add_thing(Thing::new("p2", ThingKind::Person, "Anna Smith").with_alt_label("Smith"))
            .unwrap();
        g.add_thing(Thing::new("p1", ThingKind::Person, "Bob Smith").with_alt_label("Smith"))
            .unwrap();
        assert_eq!(
            g.lookup_by_label("Smith"),
            vec![EntityId::from("p1"), EntityId::from("p2")]
        );
        assert!(g.lookup_by_label("nobody").is_empty());
    }

    #[test]
    fn tombstone_keeps_thing_resolvable() {
        let mut g = KnowledgeGraph::new();
        g.add_thing(topic("a", "a")).unwrap();
        g.tombstone(&"a".into()).unwrap();
        assert!(g.is_tombstoned(&"a".into()));
        assert!(g.thing(&"a".into()).is_some());
    }
}
