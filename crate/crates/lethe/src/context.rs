//! Context spaces: the sense-giving environments things live in.
//!
//! A context space wraps a nucleus thing (a project, an event, a topic…)
//! with members, topical concepts, an evidence log, and a lifecycle that
//! escalates forgetting gradually: active → hidden → archived → deleted.
//! The manager owns every space, tracks which one is current, decides on
//! each event whether the user stayed, switched, or started something new
//! (elicitation), and renders the views a UI would inject into file
//! listings: active/forgotten partitions, cross-context suggestions, last
//! focus, a buoyancy-ranked overview, and a flattened hierarchy.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::buoyancy::ActiveDayClock;
use crate::config::ElicitationConfig;
use crate::error::{Error, Result};
use crate::extraction::Dictionary;
use crate::kg::{EntityId, KnowledgeGraph, Predicate, Thing, ThingKind};
use crate::search::SearchIndex;

/// Active days over which context recency fades by 1/e in elicitation.
const RECENCY_SCALE_DAYS: f64 = 7.0;
/// A concept this buoyant makes a forgotten member worth resurfacing.
const CROSS_HOT_MB: f64 = 0.7;
/// Length bound of the last-focus list.
const LAST_FOCUS_CAP: usize = 5;

/// Lifecycle states, in escalation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContextState {
    Active,
    Hidden,
    Archived,
    Deleted,
}

impl ContextState {
    pub fn as_str(self) -> &'static str {
        match self {
            ContextState::Active => "active",
            ContextState::Hidden => "hidden",
            ContextState::Archived => "archived",
            ContextState::Deleted => "deleted",
        }
    }

    /// Only adjacent escalation steps (and waking a hidden context) are
    /// legal; everything else must pass through the intermediate states.
    fn can_transition(self, to: ContextState) -> bool {
        use ContextState::*;
        matches!(
            (self, to),
            (Active, Hidden) | (Hidden, Active) | (Hidden, Archived) | (Archived, Deleted)
        )
    }
}

/// Who put a member into a context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MemberSource {
    User,
    System,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub added_at: f64,
    pub added_by: MemberSource,
}

/// Evidence-log categories a context accumulates notes under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aspect {
    Organizational,
    Historical,
    Causal,
    Informational,
    Operational,
    Behavioral,
    Environmental,
    Attentional,
    Hierarchy,
    Forgetting,
    Focal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectNote {
    pub ts: f64,
    pub note: String,
}

/// One context space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextSpace {
    pub id: EntityId,
    /// The thing this context gives sense to; merge products may have none.
    pub nucleus: Option<EntityId>,
    pub members: BTreeMap<EntityId, Member>,
    /// Concepts the context is about.
    pub is_about: BTreeSet<EntityId>,
    pub state: ContextState,
    /// Most recently interacted members, newest first, at most five.
    pub last_focus: Vec<EntityId>,
    pub aspects: BTreeMap<Aspect, Vec<AspectNote>>,
    pub created_at: f64,
    pub last_touched: f64,
}

impl ContextSpace {
    fn new(id: EntityId, nucleus: Option<EntityId>, ts: f64) -> Self {
        ContextSpace {
            id,
            nucleus,
            members: BTreeMap::new(),
            is_about: BTreeSet::new(),
            state: ContextState::Active,
            last_focus: Vec::new(),
            aspects: BTreeMap::new(),
            created_at: ts,
            last_touched: ts,
        }
    }

    fn note(&mut self, aspect: Aspect, ts: f64, note: impl Into<String>) {
        self.aspects
            .entry(aspect)
            .or_default()
            .push(AspectNote { ts, note: note.into() });
    }

    fn immutable(&self) -> bool {
        matches!(self.state, ContextState::Archived | ContextState::Deleted)
    }

    fn focus(&mut self, item: &EntityId) {
        self.last_focus.retain(|f| f != item);
        self.last_focus.insert(0, item.clone());
        self.last_focus.truncate(LAST_FOCUS_CAP);
    }
}

/// What happened to the context structure, for the audit timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimelineKind {
    Spawned,
    Switched,
    Split,
    Merged,
    StateChanged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineRecord {
    pub ts: f64,
    pub event_seq: u64,
    pub kind: TimelineKind,
    pub ctx: EntityId,
    pub detail: String,
}

/// Side assignment for a split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Outcome of context elicitation for one event.
#[derive(Debug, Clone, PartialEq)]
pub enum ElicitDecision {
    /// Stay where we are (which may be "no context").
    Same,
    Switch(EntityId),
    ProposeNew,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Elicitation {
    pub decision: ElicitDecision,
    /// Candidate scores, best first.
    pub scores: Vec<(EntityId, f64)>,
    /// Lead of the best candidate over the current context (or over zero).
    pub margin: f64,
}

/// Views injected into a folder/listing for one context.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InjectionViews {
    /// Buoyant members, (mb desc, id) — the part shown by default.
    pub active: Vec<(EntityId, f64)>,
    /// Sunken members — present but visually set apart.
    pub forgotten: Vec<(EntityId, f64)>,
    /// Forgotten members that look relevant again because one of their
    /// concepts is hot inside another active context.
    pub cross_context_hot: Vec<CrossContextSuggestion>,
    pub last_focus: Vec<EntityId>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct CrossContextSuggestion {
    pub item: EntityId,
    pub concept: EntityId,
    pub context: EntityId,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverviewEntry {
    pub context: EntityId,
    pub mb: f64,
    pub last_touched: f64,
    /// True for contexts past the display budget: still there, not shown.
    pub hidden_from_default: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatViewEntry {
    pub item: EntityId,
    pub mb: f64,
    /// Context chain from the requested root down to the member's context.
    pub path: Vec<EntityId>,
}

/// Owner of all context spaces plus the audit timeline.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContextManager {
    contexts: BTreeMap<EntityId, ContextSpace>,
    by_nucleus: BTreeMap<EntityId, EntityId>,
    current: Option<EntityId>,
    seq: u64,
    timeline: Vec<TimelineRecord>,
}

impl ContextManager {
    pub fn new() -> Self {
        ContextManager::default()
    }

    pub fn context(&self, id: &EntityId) -> Option<&ContextSpace> {
        self.contexts.get(id)
    }

    pub fn contexts_iter(&self) -> impl Iterator<Item = &ContextSpace> {
        self.contexts.values()
    }

    pub fn current(&self) -> Option<&EntityId> {
        self.current.as_ref()
    }

    pub fn timeline(&self) -> &[TimelineRecord] {
        &self.timeline
    }

    pub fn context_for_nucleus(&self, nucleus: &EntityId) -> Option<&EntityId> {
        self.by_nucleus.get(nucleus)
    }

    fn require(&self, id: &EntityId) -> Result<&ContextSpace> {
        self.contexts
            .get(id)
            .ok_or_else(|| Error::UnknownEntity(id.to_string()))
    }

    fn require_mut(&mut self, id: &EntityId) -> Result<&mut ContextSpace> {
        self.contexts
            .get_mut(id)
            .ok_or_else(|| Error::UnknownEntity(id.to_string()))
    }

    fn record(&mut self, ts: f64, event_seq: u64, kind: TimelineKind, ctx: &EntityId, detail: String) {
        self.timeline.push(TimelineRecord {
            ts,
            event_seq,
            kind,
            ctx: ctx.clone(),
            detail,
        });
    }

    /// Spawn a context around a nucleus thing. Idempotent per nucleus: if a
    /// live context already wraps it, that one is returned.
    ///
    /// The nucleus's label and descriptive attributes are run through the
    /// mention dictionary; concept mentions seed `is_about`, resource
    /// mentions become initial (system-added) members. The new context is
    /// *not* made current.
    pub fn spawn(
        &mut self,
        graph: &mut KnowledgeGraph,
        dict: &Dictionary,
        nucleus: &EntityId,
        ts: f64,
        event_seq: u64,
    ) -> Result<EntityId> {
        if let Some(existing) = self.by_nucleus.get(nucleus) {
            return Ok(existing.clone());
        }
        let nucleus_thing = graph
            .thing(nucleus)
            .ok_or_else(|| Error::UnknownEntity(nucleus.to_string()))?
            .clone();

        // harvest mentions from the nucleus's text before mutating the graph
        let mut source = nucleus_thing.primary_label.clone();
        for key in ["text", "description", "title", "notes"] {
            if let Some(v) = nucleus_thing.attributes.get(key) {
                source.push('\n');
                source.push_str(v);
            }
        }
        let mentions = dict.annotate(&source, graph)?;

        let mut id = EntityId::from(format!("ctx:{nucleus}"));
        while graph.contains(&id) || self.contexts.contains_key(&id) {
            self.seq += 1;
            id = EntityId::from(format!("ctx:{nucleus}:{}", self.seq));
        }
        graph.add_thing(
            Thing::new(id.clone(), ThingKind::Context, nucleus_thing.primary_label.clone())
                .with_created_at(ts),
        )?;
        graph.add_edge_weighted(nucleus, Predicate::NucleusOf, &id, 1.0, ts)?;

        let mut space = ContextSpace::new(id.clone(), Some(nucleus.clone()), ts);
        let mut seen = BTreeSet::new();
        for m in &mentions {
            if m.entity == *nucleus || !seen.insert(m.entity.clone()) {
                continue;
            }
            let Some(thing) = graph.thing(&m.entity) else { continue };
            if thing.kind.is_concept() {
                space.is_about.insert(m.entity.clone());
            } else if thing.kind.is_resource() {
                space.members.insert(
                    m.entity.clone(),
                    Member { added_at: ts, added_by: MemberSource::System },
                );
                graph.add_edge_weighted(&m.entity, Predicate::IsContainedIn, &id, 1.0, ts)?;
            }
        }

        self.by_nucleus.insert(nucleus.clone(), id.clone());
        self.contexts.insert(id.clone(), space);
        self.record(ts, event_seq, TimelineKind::Spawned, &id, format!("nucleus {nucleus}"));
        Ok(id)
    }

    /// Spawn an empty, nucleus-less context (for activity with no anchor).
    pub fn spawn_bare(
        &mut self,
        graph: &mut KnowledgeGraph,
        ts: f64,
        event_seq: u64,
    ) -> Result<EntityId> {
        let mut id;
        loop {
            self.seq += 1;
            id = EntityId::from(format!("urn:ctx:auto:{}", self.seq));
            if !graph.contains(&id) && !self.contexts.contains_key(&id) {
                break;
            }
        }
        graph.add_thing(
            Thing::new(id.clone(), ThingKind::Context, format!("ad hoc context {}", self.seq))
                .with_created_at(ts),
        )?;
        self.contexts
            .insert(id.clone(), ContextSpace::new(id.clone(), None, ts));
        self.record(ts, event_seq, TimelineKind::Spawned, &id, "no nucleus".into());
        Ok(id)
    }

    /// Make a context current. Hidden contexts wake up; archived and deleted
    /// ones refuse. Switching to the already-current context only refreshes
    /// its touch time.
    pub fn switch_to(&mut self, id: &EntityId, ts: f64, event_seq: u64) -> Result<()> {
        let space = self.require(id)?;
        if space.immutable() {
            return Err(Error::ContextImmutable(id.to_string()));
        }
        if space.state == ContextState::Hidden {
            let space = self.require_mut(id)?;
            space.state = ContextState::Active;
            space.note(Aspect::Forgetting, ts, "unhidden by switch");
            self.record(
                ts,
                event_seq,
                TimelineKind::StateChanged,
                id,
                "hidden→active".into(),
            );
        }
        if self.current.as_ref() == Some(id) {
            self.require_mut(id)?.last_touched = ts;
            return Ok(());
        }
        let from = self.current.clone();
        let space = self.require_mut(id)?;
        space.last_touched = ts;
        match &from {
            Some(f) => space.note(Aspect::Historical, ts, format!("switched from {f}")),
            None => space.note(Aspect::Historical, ts, "switched from none"),
        }
        self.current = Some(id.clone());
        let detail = match from {
            Some(f) => format!("from {f}"),
            None => "from none".into(),
        };
        self.record(ts, event_seq, TimelineKind::Switched, id, detail);
        Ok(())
    }

    /// Move a context along its lifecycle. Same-state calls are no-ops;
    /// skipping escalation steps is an error. Deleting purges member edges
    /// and tombstones the context thing, but the historical member list and
    /// timeline survive.
    pub fn set_state(
        &mut self,
        graph: &mut KnowledgeGraph,
        id: &EntityId,
        to: ContextState,
        ts: f64,
        event_seq: u64,
    ) -> Result<()> {
        let from = self.require(id)?.state;
        if from == to {
            return Ok(());
        }
        if !from.can_transition(to) {
            return Err(Error::IllegalTransition {
                from: from.as_str().into(),
                to: to.as_str().into(),
            });
        }
        if to == ContextState::Deleted {
            let members: Vec<EntityId> = self.require(id)?.members.keys().cloned().collect();
            for m in &members {
                graph.remove_edge(m, Predicate::IsContainedIn, id);
            }
            graph.tombstone(id)?;
        }
        let space = self.require_mut(id)?;
        space.state = to;
        space.note(
            Aspect::Forgetting,
            ts,
            format!("{}→{}", from.as_str(), to.as_str()),
        );
        if to != ContextState::Active && self.current.as_ref() == Some(id) {
            self.current = None;
        }
        if matches!(to, ContextState::Archived | ContextState::Deleted) {
            if let Some(n) = self.contexts[id].nucleus.clone() {
                if self.by_nucleus.get(&n) == Some(id) {
                    self.by_nucleus.remove(&n);
                }
            }
        }
        self.record(
            ts,
            event_seq,
            TimelineKind::StateChanged,
            id,
            format!("{}→{}", from.as_str(), to.as_str()),
        );
        Ok(())
    }

    /// Retire a context on behalf of a split/merge: walk it through
    /// hide-then-archive so the timeline shows the escalation.
    fn archive_for_reorg(
        &mut self,
        graph: &mut KnowledgeGraph,
        id: &EntityId,
        ts: f64,
        event_seq: u64,
    ) -> Result<()> {
        match self.require(id)?.state {
            ContextState::Active => {
                self.set_state(graph, id, ContextState::Hidden, ts, event_seq)?;
                self.set_state(graph, id, ContextState::Archived, ts, event_seq)
            }
            ContextState::Hidden => self.set_state(graph, id, ContextState::Archived, ts, event_seq),
            ContextState::Archived => Ok(()),
            ContextState::Deleted => Err(Error::ContextImmutable(id.to_string())),
        }
    }

    /// Put an item into a context. Returns whether it was newly added. The
    /// context's nucleus is never a member of itself.
    pub fn add_member(
        &mut self,
        graph: &mut KnowledgeGraph,
        ctx: &EntityId,
        item: &EntityId,
        by: MemberSource,
        ts: f64,
    ) -> Result<bool> {
        let space = self.require(ctx)?;
        if space.immutable() {
            return Err(Error::ContextImmutable(ctx.to_string()));
        }
        if !graph.contains(item) {
            return Err(Error::UnknownEntity(item.to_string()));
        }
        if space.nucleus.as_ref() == Some(item) || item == ctx {
            return Ok(false);
        }
        let space = self.require_mut(ctx)?;
        space.last_touched = ts;
        if space.members.contains_key(item) {
            return Ok(false);
        }
        space
            .members
            .insert(item.clone(), Member { added_at: ts, added_by: by });
        graph.add_edge_weighted(item, Predicate::IsContainedIn, ctx, 1.0, ts)?;
        Ok(true)
    }

    /// Take an item out of a context (idempotent).
    pub fn remove_member(
        &mut self,
        graph: &mut KnowledgeGraph,
        ctx: &EntityId,
        item: &EntityId,
    ) -> Result<bool> {
        let space = self.require(ctx)?;
        if space.immutable() {
            return Err(Error::ContextImmutable(ctx.to_string()));
        }
        let space = self.require_mut(ctx)?;
        if space.members.remove(item).is_none() {
            return Ok(false);
        }
        space.last_focus.retain(|f| f != item);
        graph.remove_edge(item, Predicate::IsContainedIn, ctx);
        Ok(true)
    }

    /// Record an interaction with a member for the focal aspect.
    pub fn touch_focus(&mut self, ctx: &EntityId, item: &EntityId, ts: f64) -> Result<()> {
        let space = self.require_mut(ctx)?;
        space.focus(item);
        space.last_touched = ts;
        Ok(())
    }

    /// Decide whether the evidence of one event means the user stayed in the
    /// current context, moved to another, or started something new.
    ///
    /// Candidates are all active and hidden contexts. The score blends
    /// concept overlap (Jaccard against `is_about` plus member topics), text
    /// similarity (cosine against the mean member term vector), and recency
    /// (exponential in elapsed active days). The decision rules run in
    /// order: a lead within the margin keeps the current context; a
    /// sufficiently strong and clear leader wins a switch; a weak field
    /// proposes a new context; everything else stays put.
    #[allow(clippy::too_many_arguments)]
    pub fn elicit(
        &self,
        mention_concepts: &BTreeSet<EntityId>,
        snippet_tf: &BTreeMap<String, u32>,
        graph: &KnowledgeGraph,
        index: &SearchIndex,
        clock: &ActiveDayClock,
        t: f64,
        cfg: &ElicitationConfig,
    ) -> Elicitation {
        let candidates: Vec<&ContextSpace> = self
            .contexts
            .values()
            .filter(|c| matches!(c.state, ContextState::Active | ContextState::Hidden))
            .collect();
        if candidates.is_empty() {
            return Elicitation {
                decision: ElicitDecision::ProposeNew,
                scores: Vec::new(),
                margin: 0.0,
            };
        }
        if mention_concepts.is_empty() && snippet_tf.is_empty() {
            // nothing to compare — don't thrash the current context
            return Elicitation {
                decision: ElicitDecision::Same,
                scores: Vec::new(),
                margin: 0.0,
            };
        }

        let mut scored: Vec<(&ContextSpace, f64)> = candidates
            .iter()
            .map(|c| {
                let j = jaccard(mention_concepts, &context_topics(c, graph));
                let cos = member_cosine(snippet_tf, c, index);
                let days = clock.active_days_between(c.last_touched, t) as f64;
                let r = (-days / RECENCY_SCALE_DAYS).exp();
                (*c, cfg.w_jaccard * j + cfg.w_cosine * cos + cfg.w_recency * r)
            })
            .collect();
        scored.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| b.0.last_touched.total_cmp(&a.0.last_touched))
                .then_with(|| a.0.id.cmp(&b.0.id))
        });

        let top_score = scored[0].1;
        let top_id = scored[0].0.id.clone();
        let current_score = self.current.as_ref().and_then(|cur| {
            scored
                .iter()
                .find(|(c, _)| c.id == *cur)
                .map(|(_, s)| *s)
        });
        let margin = top_score - current_score.unwrap_or(0.0);
        let scores: Vec<(EntityId, f64)> =
            scored.iter().map(|(c, s)| (c.id.clone(), *s)).collect();

        let decision = if current_score.is_some_and(|cs| top_score - cs <= cfg.margin) {
            ElicitDecision::Same
        } else if top_score >= cfg.switch_threshold
            && top_score - current_score.unwrap_or(0.0) >= cfg.margin
        {
            ElicitDecision::Switch(top_id)
        } else if top_score < cfg.new_threshold {
            ElicitDecision::ProposeNew
        } else {
            ElicitDecision::Same
        };
        Elicitation { decision, scores, margin }
    }

    /// Split a context into two by a complete member assignment. The halves
    /// inherit the matching slice of `is_about`, the original's parents, and
    /// the original's focus entries; the original is archived.
    pub fn split(
        &mut self,
        graph: &mut KnowledgeGraph,
        ctx: &EntityId,
        assignment: &BTreeMap<EntityId, Side>,
        ts: f64,
        event_seq: u64,
    ) -> Result<(EntityId, EntityId)> {
        let space = self.require(ctx)?;
        if space.immutable() {
            return Err(Error::ContextImmutable(ctx.to_string()));
        }
        for m in space.members.keys() {
            if !assignment.contains_key(m) {
                return Err(Error::IncompleteAssignment(m.to_string()));
            }
        }
        let original = space.clone();
        let label = graph
            .thing(ctx)
            .map(|t| t.primary_label.clone())
            .unwrap_or_else(|| ctx.to_string());

        let side_id = |suffix: &str, graph: &KnowledgeGraph, mgr: &mut Self| {
            let mut id = EntityId::from(format!("{ctx}:{suffix}"));
            while graph.contains(&id) || mgr.contexts.contains_key(&id) {
                mgr.seq += 1;
                id = EntityId::from(format!("{ctx}:{suffix}:{}", mgr.seq));
            }
            id
        };
        let left_id = side_id("left", graph, self);
        graph.add_thing(
            Thing::new(left_id.clone(), ThingKind::Context, format!("{label} (left)"))
                .with_created_at(ts),
        )?;
        let right_id = side_id("right", graph, self);
        graph.add_thing(
            Thing::new(right_id.clone(), ThingKind::Context, format!("{label} (right)"))
                .with_created_at(ts),
        )?;

        let mut left = ContextSpace::new(left_id.clone(), None, ts);
        let mut right = ContextSpace::new(right_id.clone(), None, ts);
        for (m, member) in &original.members {
            let (target, target_id) = match assignment[m] {
                Side::Left => (&mut left, &left_id),
                Side::Right => (&mut right, &right_id),
            };
            target.members.insert(m.clone(), member.clone());
            graph.remove_edge(m, Predicate::IsContainedIn, ctx);
            graph.add_edge_weighted(m, Predicate::IsContainedIn, target_id, 1.0, ts)?;
        }
        // each half keeps the concepts its members are actually linked to
        for concept in &original.is_about {
            let linked: BTreeSet<EntityId> = graph
                .incident(concept)
                .into_iter()
                .map(|(_, far, _)| far)
                .collect();
            if left.members.keys().any(|m| linked.contains(m)) {
                left.is_about.insert(concept.clone());
            }
            if right.members.keys().any(|m| linked.contains(m)) {
                right.is_about.insert(concept.clone());
            }
        }
        // both halves hang under the original's parents
        let parents: Vec<EntityId> = graph
            .neighbors(
                ctx,
                Some(&BTreeSet::from([Predicate::SubContextOf])),
                crate::kg::Direction::Out,
            )?
            .into_iter()
            .map(|(e, _)| e.object)
            .collect();
        for p in &parents {
            graph.add_edge_weighted(&left_id, Predicate::SubContextOf, p, 1.0, ts)?;
            graph.add_edge_weighted(&right_id, Predicate::SubContextOf, p, 1.0, ts)?;
        }
        for f in &original.last_focus {
            if left.members.contains_key(f) {
                left.last_focus.push(f.clone());
            }
            if right.members.contains_key(f) {
                right.last_focus.push(f.clone());
            }
        }

        self.contexts.insert(left_id.clone(), left);
        self.contexts.insert(right_id.clone(), right);

        let member_list = original
            .members
            .keys()
            .map(|m| m.as_str())
            .collect::<Vec<_>>()
            .join(", ");
        self.archive_for_reorg(graph, ctx, ts, event_seq)?;
        let space = self.require_mut(ctx)?;
        space.members.clear();
        space.note(
            Aspect::Hierarchy,
            ts,
            format!("split into {left_id} / {right_id}; reassigned members: {member_list}"),
        );
        self.record(
            ts,
            event_seq,
            TimelineKind::Split,
            ctx,
            format!("left={left_id}, right={right_id}"),
        );
        Ok((left_id, right_id))
    }

    /// Merge two contexts into a fresh one. Members and concepts union
    /// (earlier membership wins its metadata), the nucleus follows the older
    /// context, focus lists interleave newest-context-first, and both
    /// originals are archived. If either was current, the merge product is.
    pub fn merge(
        &mut self,
        graph: &mut KnowledgeGraph,
        a: &EntityId,
        b: &EntityId,
        ts: f64,
        event_seq: u64,
    ) -> Result<EntityId> {
        if a == b {
            return Err(Error::SameContext(a.to_string()));
        }
        let ca = self.require(a)?.clone();
        let cb = self.require(b)?.clone();
        for (id, c) in [(a, &ca), (b, &cb)] {
            if c.state == ContextState::Deleted {
                return Err(Error::ContextImmutable(id.to_string()));
            }
        }

        let mut id;
        loop {
            self.seq += 1;
            id = EntityId::from(format!("ctx:merge:{}", self.seq));
            if !graph.contains(&id) && !self.contexts.contains_key(&id) {
                break;
            }
        }
        let label = |x: &EntityId| {
            graph
                .thing(x)
                .map(|t| t.primary_label.clone())
                .unwrap_or_else(|| x.to_string())
        };
        graph.add_thing(
            Thing::new(id.clone(), ThingKind::Context, format!("{} + {}", label(a), label(b)))
                .with_created_at(ts),
        )?;

        let older = if (ca.created_at, &ca.id) <= (cb.created_at, &cb.id) { &ca } else { &cb };
        let mut merged = ContextSpace::new(id.clone(), older.nucleus.clone(), ts);
        for (m, member) in ca.members.iter().chain(cb.members.iter()) {
            match merged.members.get(m) {
                Some(existing) if existing.added_at <= member.added_at => {}
                _ => {
                    merged.members.insert(m.clone(), member.clone());
                }
            }
        }
        merged.is_about = ca.is_about.union(&cb.is_about).cloned().collect();
        let (first, second) = if ca.last_touched >= cb.last_touched { (&ca, &cb) } else { (&cb, &ca) };
        for f in first.last_focus.iter().chain(second.last_focus.iter()) {
            if !merged.last_focus.contains(f) {
                merged.last_focus.push(f.clone());
            }
        }
        merged.last_focus.truncate(LAST_FOCUS_CAP);
        merged.note(Aspect::Hierarchy, ts, format!("merged from {a} + {b}"));

        for m in merged.members.keys() {
            graph.remove_edge(m, Predicate::IsContainedIn, a);
            graph.remove_edge(m, Predicate::IsContainedIn, b);
            graph.add_edge_weighted(m, Predicate::IsContainedIn, &id, 1.0, ts)?;
        }
        let mut parents: BTreeSet<EntityId> = BTreeSet::new();
        for src in [a, b] {
            for (e, _) in graph.neighbors(
                src,
                Some(&BTreeSet::from([Predicate::SubContextOf])),
                crate::kg::Direction::Out,
            )? {
                parents.insert(e.object);
            }
        }
        for p in &parents {
            graph.add_edge_weighted(&id, Predicate::SubContextOf, p, 1.0, ts)?;
        }
        if let Some(n) = &merged.nucleus {
            graph.add_edge_weighted(n, Predicate::NucleusOf, &id, 1.0, ts)?;
        }

        let was_current = self.current.as_ref() == Some(a) || self.current.as_ref() == Some(b);
        self.archive_for_reorg(graph, a, ts, event_seq)?;
        self.archive_for_reorg(graph, b, ts, event_seq)?;
        if let Some(n) = merged.nucleus.clone() {
            self.by_nucleus.insert(n, id.clone());
        }
        self.contexts.insert(id.clone(), merged);
        if was_current {
            self.current = Some(id.clone());
        }
        self.record(ts, event_seq, TimelineKind::Merged, &id, format!("{a} + {b}"));
        Ok(id)
    }

    /// Render the injected listing views for one context.
    pub fn compute_injections(
        &self,
        ctx: &EntityId,
        graph: &KnowledgeGraph,
        theta_f: f64,
        mb_of: &dyn Fn(&EntityId) -> f64,
    ) -> Result<InjectionViews> {
        let space = self.require(ctx)?;
        let mut active = Vec::new();
        let mut forgotten = Vec::new();
        for m in space.members.keys() {
            let mb = mb_of(m);
            if mb >= theta_f {
                active.push((m.clone(), mb));
            } else {
                forgotten.push((m.clone(), mb));
            }
        }
        let by_mb = |a: &(EntityId, f64), b: &(EntityId, f64)| {
            b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))
        };
        active.sort_by(by_mb);
        forgotten.sort_by(by_mb);

        let topic_preds = BTreeSet::from([Predicate::HasTopic, Predicate::HasSuggestedTopic]);
        let mut hot: BTreeSet<CrossContextSuggestion> = BTreeSet::new();
        for (m, _) in &forgotten {
            for (e, _) in graph.neighbors(m, Some(&topic_preds), crate::kg::Direction::Out)? {
                let concept = e.object;
                if mb_of(&concept) < CROSS_HOT_MB {
                    continue;
                }
                for other in self.contexts.values() {
                    if other.id != *ctx
                        && other.state == ContextState::Active
                        && other.is_about.contains(&concept)
                    {
                        hot.insert(CrossContextSuggestion {
                            item: m.clone(),
                            concept: concept.clone(),
                            context: other.id.clone(),
                        });
                    }
                }
            }
        }

        Ok(InjectionViews {
            active,
            forgotten,
            cross_context_hot: hot.into_iter().collect(),
            last_focus: space.last_focus.clone(),
        })
    }

    /// Rank active contexts by buoyancy for the context overview; entries
    /// past `budget` are flagged as hidden from the default listing.
    pub fn overview(&self, mb_of: &dyn Fn(&EntityId) -> f64, budget: usize) -> Vec<OverviewEntry> {
        let mut entries: Vec<OverviewEntry> = self
            .contexts
            .values()
            .filter(|c| c.state == ContextState::Active)
            .map(|c| OverviewEntry {
                context: c.id.clone(),
                mb: mb_of(&c.id),
                last_touched: c.last_touched,
                hidden_from_default: false,
            })
            .collect();
        entries.sort_by(|a, b| {
            b.mb.total_cmp(&a.mb)
                .then_with(|| b.last_touched.total_cmp(&a.last_touched))
                .then_with(|| a.context.cmp(&b.context))
        });
        for e in entries.iter_mut().skip(budget) {
            e.hidden_from_default = true;
        }
        entries
    }

    /// Flatten a context subtree (following sub-context edges) into one
    /// buoyancy-ranked list of members with their context paths. An item
    /// reachable through several contexts appears once, under the first
    /// path in depth-first id order.
    pub fn flat_view(
        &self,
        root: &EntityId,
        graph: &KnowledgeGraph,
        mb_of: &dyn Fn(&EntityId) -> f64,
        budget: usize,
    ) -> Result<Vec<FlatViewEntry>> {
        let space = self.require(root)?;
        if space.state == ContextState::Deleted {
            return Err(Error::ContextImmutable(root.to_string()));
        }
        let mut seen_ctx: BTreeSet<EntityId> = BTreeSet::new();
        let mut seen_item: BTreeSet<EntityId> = BTreeSet::new();
        let mut out: Vec<FlatViewEntry> = Vec::new();
        let mut stack: Vec<(EntityId, Vec<EntityId>)> = vec![(root.clone(), vec![root.clone()])];
        while let Some((ctx, path)) = stack.pop() {
            if !seen_ctx.insert(ctx.clone()) {
                continue;
            }
            if let Some(space) = self.contexts.get(&ctx) {
                for m in space.members.keys() {
                    if seen_item.insert(m.clone()) {
                        out.push(FlatViewEntry {
                            item: m.clone(),
                            mb: mb_of(m),
                            path: path.clone(),
                        });
                    }
                }
            }
            // children: non-deleted contexts declaring subContextOf ctx;
            // pushed in reverse so the stack pops them in ascending id order
            let mut children: Vec<EntityId> = self
                .contexts
                .values()
                .filter(|c| c.state != ContextState::Deleted)
                .filter(|c| graph.has_edge(&c.id, Predicate::SubContextOf, &ctx))
                .map(|c| c.id.clone())
                .collect();
            children.sort();
            for child in children.into_iter().rev() {
                let mut p = path.clone();
                p.push(child.clone());
                stack.push((child, p));
            }
        }
        out.sort_by(|a, b| b.mb.total_cmp(&a.mb).then_with(|| a.item.cmp(&b.item)));
        out.truncate(budget);
        Ok(out)
    }
}

/// `is_about` plus every concept the members point at through topic edges.
fn context_topics(c: &ContextSpace, graph: &KnowledgeGraph) -> BTreeSet<EntityId> {
    let mut topics = c.is_about.clone();
    let preds = BTreeSet::from([Predicate::HasTopic, Predicate::HasSuggestedTopic]);
    for m in c.members.keys() {
        if let Ok(rows) = graph.neighbors(m, Some(&preds), crate::kg::Direction::Out) {
            for (e, _) in rows {
                topics.insert(e.object);
            }
        }
    }
    topics
}

fn jaccard(a: &BTreeSet<EntityId>, b: &BTreeSet<EntityId>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Cosine between the event snippet and the mean of the unit-normalized
/// member term vectors. (The mean's scale divides out of the cosine, so the
/// sum of unit vectors is used directly.)
fn member_cosine(snippet: &BTreeMap<String, u32>, c: &ContextSpace, index: &SearchIndex) -> f64 {
    if snippet.is_empty() {
        return 0.0;
    }
    let mut centroid: BTreeMap<&str, f64> = BTreeMap::new();
    for m in c.members.keys() {
        let Some(v) = index.item_vector(m) else { continue };
        let norm = (v.values().map(|&c| (c as f64).powi(2)).sum::<f64>()).sqrt();
        if norm == 0.0 {
            continue;
        }
        for (tok, &count) in v {
            *centroid.entry(tok.as_str()).or_insert(0.0) += count as f64 / norm;
        }
    }
    if centroid.is_empty() {
        return 0.0;
    }
    let dot: f64 = snippet
        .iter()
        .filter_map(|(tok, &count)| centroid.get(tok.as_str()).map(|c| c * count as f64))
        .sum();
    let snippet_norm = (snippet.values().map(|&c| (c as f64).powi(2)).sum::<f64>()).sqrt();
    let centroid_norm = (centroid.values().map(|c| c * c).sum::<f64>()).sqrt();
    if snippet_norm == 0.0 || centroid_norm == 0.0 {
        0.0
    } else {
        dot / (snippet_norm * centroid_norm)
    }
}
