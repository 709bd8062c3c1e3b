//! The event pipeline: one `ingest` call advances the whole world.
//!
//! For every activity event the engine validates ordering, applies calendar
//! effects on day rollover, upserts inline items, annotates the text with
//! known labels, decides what context the user is in, maintains membership
//! and focus, stimulates Memory Buoyancy, and accumulates usage counters —
//! in that order, deterministically. Replaying the same log into a fresh
//! engine always produces the same state.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::activity::{ActivityEvent, EventType, ItemRef};
use crate::buoyancy::{day_of, MbEngine};
use crate::config::EngineConfig;
use crate::context::{
    ContextManager, ContextState, ElicitDecision, FlatViewEntry, InjectionViews, MemberSource,
    OverviewEntry, Side,
};
use crate::error::{Error, Result};
use crate::extraction::{normalize, Dictionary};
use crate::kg::{Direction, EntityId, KnowledgeGraph, Predicate, Thing, ThingKind};
use crate::preservation::{
    compute_pv, dimension_scores, partition_time_capsule, PVAssessment, Persona, TimeCapsule,
    UsageStats,
};
use crate::search::{QuerySpec, SearchIndex, SearchResult};

/// How many recent event texts are kept as fallback context evidence.
const RECENT_TEXTS: usize = 3;

/// Per-item interaction counters, accumulated raw; `revisit_days` is derived
/// against the active-day clock at assessment time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UsageRecord {
    pub clicks: u64,
    pub views: u64,
    pub comment_chars: u64,
    pub tags: u64,
    pub rating: Option<u8>,
    /// Day indices on which the item was touched.
    pub access_days: BTreeSet<i64>,
}

/// What one event did to the context structure.
#[derive(Debug, Clone, PartialEq)]
pub enum ContextDecision {
    /// Stayed (possibly in no context at all).
    Unchanged,
    /// The event carried an explicit context hint.
    Explicit(EntityId),
    /// Elicitation moved to an existing context.
    Switched(EntityId),
    /// Elicitation started a fresh context and moved there.
    Proposed(EntityId),
    /// A calendar entry spawned a context without switching.
    Spawned(EntityId),
}

/// Everything one ingested event changed.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectSummary {
    pub event_seq: u64,
    /// Things the event created (via inline descriptors).
    pub new_things: Vec<EntityId>,
    /// Label mentions found in the event text (occurrences, not entities).
    pub mentions_found: usize,
    pub context_decision: ContextDecision,
    /// New current buoyancy of every node this event moved, sorted by id.
    pub mb_updates: Vec<(EntityId, f64)>,
}

/// The managed-forgetting engine.
pub struct Engine {
    pub(crate) cfg: EngineConfig,
    pub(crate) graph: KnowledgeGraph,
    pub(crate) dict: Dictionary,
    pub(crate) mb: MbEngine,
    pub(crate) contexts: ContextManager,
    pub(crate) index: SearchIndex,
    pub(crate) usage: BTreeMap<EntityId, UsageRecord>,
    pub(crate) last_ts: Option<f64>,
    pub(crate) seq: u64,
    pub(crate) last_day: Option<i64>,
    pub(crate) recent_texts: Vec<String>,
}

impl Engine {
    pub fn new(cfg: EngineConfig) -> Result<Self> {
        cfg.validate()?;
        let graph = KnowledgeGraph::new();
        let dict = Dictionary::build(&graph);
        let mb = MbEngine::new(cfg.active_day_min_events);
        Ok(Engine {
            cfg,
            graph,
            dict,
            mb,
            contexts: ContextManager::new(),
            index: SearchIndex::new(),
            usage: BTreeMap::new(),
            last_ts: None,
            seq: 0,
            last_day: None,
            recent_texts: Vec::new(),
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn graph(&self) -> &KnowledgeGraph {
        &self.graph
    }

    pub fn contexts(&self) -> &ContextManager {
        &self.contexts
    }

    pub fn index(&self) -> &SearchIndex {
        &self.index
    }

    pub fn usage_record(&self, item: &EntityId) -> Option<&UsageRecord> {
        self.usage.get(item)
    }

    /// The engine's notion of "now": the timestamp of the last event.
    pub fn now(&self) -> f64 {
        self.last_ts.unwrap_or(0.0)
    }

    /// Current Memory Buoyancy of a thing at `now`.
    pub fn mb_of(&self, id: &EntityId) -> f64 {
        self.mb.current_mb(id, self.now(), &self.cfg.decay)
    }

    pub fn events_ingested(&self) -> u64 {
        self.seq
    }

    /// Apply one activity event. See the module docs for the pipeline order.
    pub fn ingest(&mut self, event: &ActivityEvent) -> Result<EffectSummary> {
        event.validate()?;
        if let Some(prev) = self.last_ts {
            if event.ts < prev - self.cfg.reorder_window_s {
                return Err(Error::OutOfOrder {
                    ts: prev,
                    late: event.ts,
                    window: self.cfg.reorder_window_s,
                });
            }
        }
        self.seq += 1;
        let seq = self.seq;
        let t = event.ts;
        let mut mb_changes: BTreeMap<EntityId, f64> = BTreeMap::new();

        // calendar effects fire when a new day begins (and for the first event)
        let day = day_of(t);
        if self.last_day.map_or(true, |d| day > d) {
            self.calendar_tick(t, &mut mb_changes)?;
            self.last_day = Some(day);
        }
        self.mb.record_event(t);
        self.last_ts = Some(t);

        // item upsert
        let mut new_things = Vec::new();
        let item_id: Option<EntityId> = match &event.item {
            None => None,
            Some(ItemRef::Id(id)) => {
                if !self.graph.contains(id) {
                    return Err(Error::UnknownEntity(id.to_string()));
                }
                Some(id.clone())
            }
            Some(ItemRef::Descriptor(d)) => {
                let id = EntityId::from(d.uri.as_str());
                if self.graph.contains(&id) {
                    if let Some(start) = d.start {
                        self.graph.set_attribute(&id, "start", &start.to_string())?;
                    }
                    if let Some(end) = d.end {
                        self.graph.set_attribute(&id, "end", &end.to_string())?;
                    }
                } else {
                    let label = if d.title.is_empty() { d.uri.clone() } else { d.title.clone() };
                    let mut thing = Thing::new(id.clone(), d.kind, label).with_created_at(t);
                    if let Some(start) = d.start {
                        thing = thing.with_attribute("start", start.to_string());
                    }
                    if let Some(end) = d.end {
                        thing = thing.with_attribute("end", end.to_string());
                    }
                    if let Some(text) = &event.text {
                        if !text.is_empty() {
                            thing = thing.with_attribute("text", text.clone());
                        }
                    }
                    self.graph.add_thing(thing)?;
                    self.dict
                        .extend_with(self.graph.thing(&id).expect("just added"), self.graph.label_version());
                    new_things.push(id.clone());
                }
                Some(id)
            }
        };

        // mention extraction over the event text
        let text = event.text.clone().unwrap_or_default();
        let mentions = if text.is_empty() {
            Vec::new()
        } else {
            self.dict.annotate(&text, &self.graph)?
        };
        let mentions_found = mentions.len();
        let mention_entities: BTreeSet<EntityId> =
            mentions.iter().map(|m| m.entity.clone()).collect();

        // suggested-topic edges and the search index entry for the item
        if let Some(item) = &item_id {
            for e in &mention_entities {
                if e == item {
                    continue;
                }
                let is_concept = self.graph.thing(e).is_some_and(|t| t.kind.is_concept());
                if is_concept {
                    self.graph
                        .add_edge_weighted(item, Predicate::HasSuggestedTopic, e, 1.0, t)?;
                }
            }
            let concepts: BTreeSet<EntityId> = self
                .graph
                .neighbors(
                    item,
                    Some(&BTreeSet::from([
                        Predicate::HasTopic,
                        Predicate::HasSuggestedTopic,
                    ])),
                    Direction::Out,
                )?
                .into_iter()
                .map(|(e, _)| e.object)
                .collect();
            self.index.merge_item(item, &text, concepts);
        }

        // context decision
        let decision = match event.event_type {
            EventType::CalendarCreate => {
                let item = item_id.clone().ok_or(Error::MissingField("item"))?;
                let ctx = self.contexts.spawn(&mut self.graph, &self.dict, &item, t, seq)?;
                ContextDecision::Spawned(ctx)
            }
            EventType::DeleteRequest => {
                if let Some(item) = &item_id {
                    self.graph.tombstone(item)?;
                    self.mb.reset(item, t);
                    self.index.remove_item(item);
                    mb_changes.insert(item.clone(), 0.0);
                }
                ContextDecision::Unchanged
            }
            EventType::CalendarEnd => {
                if let Some(item) = &item_id {
                    self.finish_event(item, t);
                }
                ContextDecision::Unchanged
            }
            _ => self.decide_context(event, &item_id, &mention_entities, &text)?,
        };

        // auto-membership and focus in the (possibly new) current context.
        // Explicit user actions always file the item; system filing requires
        // topical affinity, so a stray interaction with another context's
        // material cannot pollute this one's membership.
        if !matches!(
            event.event_type,
            EventType::CalendarCreate | EventType::DeleteRequest | EventType::CalendarEnd
        ) {
            if let (Some(cur), Some(item)) = (self.contexts.current().cloned(), &item_id) {
                let user_action =
                    event.event_type == EventType::DragToContext || event.context_hint.is_some();
                if user_action || self.topical_fit(&cur, item)? {
                    let source = if user_action {
                        MemberSource::User
                    } else {
                        MemberSource::System
                    };
                    self.contexts.add_member(&mut self.graph, &cur, item, source, t)?;
                    if self
                        .contexts
                        .context(&cur)
                        .is_some_and(|c| c.members.contains_key(item))
                    {
                        self.contexts.touch_focus(&cur, item, t)?;
                    }
                }
            }
        }

        // remember the text for future context elicitation
        if !text.is_empty() {
            self.recent_texts.push(text.clone());
            if self.recent_texts.len() > RECENT_TEXTS {
                self.recent_texts.remove(0);
            }
        }

        // stimulation: the item, everything mentioned, and the current context
        if let Some(base) = self.cfg.strengths.base_for(event.event_type) {
            let mut targets: Vec<EntityId> = Vec::new();
            if let Some(item) = &item_id {
                targets.push(item.clone());
            }
            for e in &mention_entities {
                if Some(e) != item_id.as_ref() {
                    targets.push(e.clone());
                }
            }
            if let Some(cur) = self.contexts.current() {
                if !targets.contains(cur) {
                    targets.push(cur.clone());
                }
            }
            for target in targets {
                for (node, mb) in
                    self.mb
                        .stimulate_with_strength(&self.graph, &target, base, t, &self.cfg)?
                {
                    mb_changes.insert(node, mb);
                }
            }
        }

        // usage counters
        if let Some(item) = &item_id {
            let rec = self.usage.entry(item.clone()).or_default();
            match event.event_type {
                EventType::Click => rec.clicks += 1,
                EventType::Open | EventType::Read => rec.views += 1,
                EventType::Write => rec.comment_chars += text.chars().count() as u64,
                EventType::Tag => rec.tags += 1,
                _ => {}
            }
            if matches!(
                event.event_type,
                EventType::Open
                    | EventType::Read
                    | EventType::Write
                    | EventType::Click
                    | EventType::Tag
                    | EventType::DragToContext
                    | EventType::Create
            ) {
                rec.access_days.insert(day);
            }
        }

        Ok(EffectSummary {
            event_seq: seq,
            new_things,
            mentions_found,
            context_decision: decision,
            mb_updates: mb_changes.into_iter().collect(),
        })
    }

    /// Whether an item topically belongs in a context. A context without a
    /// topical identity accepts anything; once it is about something, the
    /// item's (suggested) topics must intersect it — an item with no topical
    /// evidence yet is filed later, when it has some.
    fn topical_fit(&self, ctx: &EntityId, item: &EntityId) -> Result<bool> {
        let Some(space) = self.contexts.context(ctx) else {
            return Ok(false);
        };
        if space.is_about.is_empty() {
            return Ok(true);
        }
        let preds = BTreeSet::from([Predicate::HasTopic, Predicate::HasSuggestedTopic]);
        let topics = self.graph.neighbors(item, Some(&preds), Direction::Out)?;
        Ok(topics.iter().any(|(e, _)| space.is_about.contains(&e.object)))
    }

    /// Hint wins; otherwise score the candidates and follow the rules.
    fn decide_context(
        &mut self,
        event: &ActivityEvent,
        item_id: &Option<EntityId>,
        mention_entities: &BTreeSet<EntityId>,
        text: &str,
    ) -> Result<ContextDecision> {
        let t = event.ts;
        let seq = self.seq;
        if let Some(hint) = &event.context_hint {
            self.contexts.switch_to(hint, t, seq)?;
            return Ok(ContextDecision::Explicit(hint.clone()));
        }

        let concept_mentions: BTreeSet<EntityId> = mention_entities
            .iter()
            .filter(|e| self.graph.thing(e).is_some_and(|t| t.kind.is_concept()))
            .cloned()
            .collect();
        // without fresh text, recent snippets stand in as weaker evidence
        let c_text = if text.is_empty() { self.recent_texts.join(" ") } else { text.to_string() };
        let mut snippet_tf: BTreeMap<String, u32> = BTreeMap::new();
        for tok in normalize(&c_text) {
            *snippet_tf.entry(tok).or_insert(0) += 1;
        }

        let elicited = self.contexts.elicit(
            &concept_mentions,
            &snippet_tf,
            &self.graph,
            &self.index,
            self.mb.clock(),
            t,
            &self.cfg.elicitation,
        );
        Ok(match elicited.decision {
            ElicitDecision::Same => ContextDecision::Unchanged,
            ElicitDecision::Switch(ctx) => {
                self.contexts.switch_to(&ctx, t, seq)?;
                ContextDecision::Switched(ctx)
            }
            ElicitDecision::ProposeNew => {
                let ctx = match item_id {
                    Some(item) => {
                        self.contexts.spawn(&mut self.graph, &self.dict, item, t, seq)?
                    }
                    None => self.contexts.spawn_bare(&mut self.graph, t, seq)?,
                };
                self.contexts.switch_to(&ctx, t, seq)?;
                ContextDecision::Proposed(ctx)
            }
        })
    }

    /// Day-rollover calendar work: stimulate upcoming events, finish expired
    /// ones (and their tasks).
    fn calendar_tick(&mut self, t: f64, mb_changes: &mut BTreeMap<EntityId, f64>) -> Result<()> {
        let window_end = t + self.cfg.anticipation.window_days * 86_400.0;
        let mut upcoming = Vec::new();
        let mut expired = Vec::new();
        for thing in self.graph.things_iter() {
            if thing.kind != ThingKind::Event || self.graph.is_tombstoned(&thing.id) {
                continue;
            }
            if let Some(start) = thing.attr_f64("start") {
                if start > t && start <= window_end {
                    upcoming.push(thing.id.clone());
                }
            }
            if let Some(end) = thing.attr_f64("end") {
                if end < t && !self.mb.is_finished(&thing.id) {
                    expired.push(thing.id.clone());
                }
            }
        }
        for id in upcoming {
            for (node, mb) in self.mb.stimulate_with_strength(
                &self.graph,
                &id,
                self.cfg.anticipation.strength,
                t,
                &self.cfg,
            )? {
                mb_changes.insert(node, mb);
            }
        }
        for id in expired {
            self.finish_event(&id, t);
        }
        Ok(())
    }

    /// Mark a calendar event finished along with its linked tasks.
    fn finish_event(&mut self, id: &EntityId, t: f64) {
        self.mb.set_finished(id, t, &self.cfg.decay);
        let tasks: Vec<EntityId> = self
            .graph
            .neighbors(id, None, Direction::Both)
            .map(|rows| {
                rows.into_iter()
                    .filter(|(_, thing)| thing.kind == ThingKind::Task)
                    .map(|(_, thing)| thing.id.clone())
                    .collect()
            })
            .unwrap_or_default();
        for task in tasks {
            self.mb.set_finished(&task, t, &self.cfg.decay);
        }
    }

    /// Forgetting-aware search over everything indexed so far, evaluated at
    /// the engine's current time.
    pub fn query(
        &self,
        terms: &str,
        concept_filter: Vec<EntityId>,
        min_mb: Option<f64>,
    ) -> Result<SearchResult> {
        let spec = QuerySpec {
            terms: terms.to_string(),
            concept_filter,
            min_mb,
            theta_f: self.cfg.theta_f,
        };
        self.index.query(&spec, &|id| self.mb_of(id))
    }

    /// Assess every resource-kind thing under a persona and partition into
    /// the time capsule.
    pub fn assess(
        &self,
        persona: Persona,
        threshold: Option<f64>,
    ) -> Result<(Vec<PVAssessment>, TimeCapsule)> {
        let threshold = threshold.unwrap_or(self.cfg.pv_threshold);
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::OutOfRange(format!("threshold {threshold}")));
        }
        let strategy = self.cfg.personas.strategy(persona);
        let active_days: BTreeSet<i64> = self.mb.clock().active_days().collect();
        let mb_of = |id: &EntityId| self.mb_of(id);
        let mut assessments = Vec::new();
        for thing in self.graph.things_iter() {
            if !thing.kind.is_resource() || self.graph.is_tombstoned(&thing.id) {
                continue;
            }
            let rec = self.usage.get(&thing.id).cloned().unwrap_or_default();
            let stats = UsageStats {
                clicks: rec.clicks,
                views: rec.views,
                comment_chars: rec.comment_chars,
                tags: rec.tags,
                rating: rec.rating,
                revisit_days: rec.access_days.intersection(&active_days).count() as u64,
            };
            let dims = dimension_scores(&thing.id, &stats, &self.graph, &mb_of)?;
            assessments.push(compute_pv(&thing.id, dims, &strategy, threshold)?);
        }
        let capsule = partition_time_capsule(&mut assessments, &self.graph, &strategy, threshold);
        Ok((assessments, capsule))
    }

    /// User-driven membership change outside the event stream. Adding also
    /// stimulates both ends like a drag would.
    pub fn add_to_context(&mut self, ctx: &EntityId, item: &EntityId) -> Result<bool> {
        let t = self.now();
        let added = self
            .contexts
            .add_member(&mut self.graph, ctx, item, MemberSource::User, t)?;
        if added {
            let s = self
                .cfg
                .strengths
                .base_for(EventType::DragToContext)
                .unwrap_or(0.0);
            self.mb.stimulate_with_strength(&self.graph, item, s, t, &self.cfg)?;
            self.mb.stimulate_with_strength(&self.graph, ctx, s, t, &self.cfg)?;
        }
        Ok(added)
    }

    pub fn remove_from_context(&mut self, ctx: &EntityId, item: &EntityId) -> Result<bool> {
        self.contexts.remove_member(&mut self.graph, ctx, item)
    }

    /// Lifecycle change on a context (hide, archive, delete, wake).
    pub fn set_context_state(&mut self, ctx: &EntityId, state: ContextState) -> Result<()> {
        self.seq += 1;
        let (t, seq) = (self.now(), self.seq);
        self.contexts.set_state(&mut self.graph, ctx, state, t, seq)
    }

    pub fn split_context(
        &mut self,
        ctx: &EntityId,
        assignment: &BTreeMap<EntityId, Side>,
    ) -> Result<(EntityId, EntityId)> {
        self.seq += 1;
        let (t, seq) = (self.now(), self.seq);
        self.contexts.split(&mut self.graph, ctx, assignment, t, seq)
    }

    pub fn merge_contexts(&mut self, a: &EntityId, b: &EntityId) -> Result<EntityId> {
        self.seq += 1;
        let (t, seq) = (self.now(), self.seq);
        self.contexts.merge(&mut self.graph, a, b, t, seq)
    }

    /// Folder-injection views for a context at the current time.
    pub fn injections(&self, ctx: &EntityId) -> Result<InjectionViews> {
        self.contexts
            .compute_injections(ctx, &self.graph, self.cfg.theta_f, &|id| self.mb_of(id))
    }

    /// Buoyancy-ranked context overview.
    pub fn overview(&self, budget: usize) -> Vec<OverviewEntry> {
        self.contexts.overview(&|id| self.mb_of(id), budget)
    }

    /// Flattened subtree listing under one context.
    pub fn flat_view(&self, root: &EntityId, budget: usize) -> Result<Vec<FlatViewEntry>> {
        self.contexts
            .flat_view(root, &self.graph, &|id| self.mb_of(id), budget)
    }
}
