//! Memory Buoyancy: the short-term, event-driven half of information value.
//!
//! Buoyancy rises when a thing (or its graph neighborhood) is touched and
//! sinks along a two-phase exponential when it is not. Decay time is counted
//! in *active days* — days with real user activity — so a vacation does not
//! silently sink the whole graph. Scores are updated lazily: each node stores
//! an anchor value plus the timestamp it was anchored at, and the current
//! value is derived on read.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::{DecayConfig, EngineConfig, SpreadConfig};
use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph};
use crate::preservation::oplus;

/// UTC day index of a timestamp (86 400-second buckets).
pub fn day_of(ts: f64) -> i64 {
    (ts / 86_400.0).floor() as i64
}

/// Counts events per day and answers "how many active days elapsed".
///
/// A day is active when it saw at least `min_events` events; only active days
/// advance decay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveDayClock {
    counts: BTreeMap<i64, u32>,
    min_events: u32,
}

impl ActiveDayClock {
    pub fn new(min_events: u32) -> Self {
        ActiveDayClock {
            counts: BTreeMap::new(),
            min_events,
        }
    }

    pub fn record_event(&mut self, ts: f64) {
        *self.counts.entry(day_of(ts)).or_insert(0) += 1;
    }

    /// Force a day to count as active regardless of recorded events (used
    /// when fabricating histories for assessment corpora).
    pub fn mark_active(&mut self, day: i64) {
        let c = self.counts.entry(day).or_insert(0);
        *c = (*c).max(self.min_events);
    }

    pub fn is_active(&self, day: i64) -> bool {
        self.counts.get(&day).copied().unwrap_or(0) >= self.min_events
    }

    /// Active days in the half-open interval [day(from), day(to)).
    pub fn active_days_between(&self, from: f64, to: f64) -> u32 {
        let (lo, hi) = (day_of(from), day_of(to));
        if hi <= lo {
            return 0;
        }
        self.counts
            .range(lo..hi)
            .filter(|(_, &c)| c >= self.min_events)
            .count() as u32
    }

    /// Distinct active days, for intersecting with per-item access days.
    pub fn active_days(&self) -> impl Iterator<Item = i64> + '_ {
        self.counts
            .iter()
            .filter(|(_, &c)| c >= self.min_events)
            .map(|(&d, _)| d)
    }
}

/// Multiplier applied to an anchored value when its age advances from
/// `from` to `to` active days (two-phase curve; finished things sink at
/// double rate).
pub fn decay_factor(from: f64, to: f64, finished: bool, cfg: &DecayConfig) -> f64 {
    let t1 = cfg.steep_phase_days;
    let steep_span = to.min(t1) - from.min(t1);
    let slow_span = to.max(t1) - from.max(t1);
    let rate = cfg.lambda_steep() * steep_span + cfg.lambda_slow() * slow_span;
    let m = if finished { cfg.finished_multiplier } else { 1.0 };
    (-m * rate).exp()
}

/// The closed-form curve: value after `tau` active days starting from `mb0`
/// at age zero.
pub fn decay_curve(mb0: f64, tau: f64, finished: bool, cfg: &DecayConfig) -> f64 {
    mb0 * decay_factor(0.0, tau.max(0.0), finished, cfg)
}

/// Lazily-decayed per-node score state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MbState {
    /// Value at the moment of the last anchor (stimulation or materialize).
    pub mb_anchor: f64,
    /// Wall-clock timestamp of the anchor.
    pub anchor_ts: f64,
    /// Position on the decay curve at the anchor, in active days. 0 after a
    /// stimulation (touching a thing restarts the steep phase); advanced by
    /// materializing re-anchors such as marking finished.
    pub age_at_anchor: f64,
    /// Timestamp of the last direct stimulation.
    pub last_stim: f64,
    /// Stimulus strength already applied today (day-cap accounting).
    pub day_accum: f64,
    /// Day index `day_accum` belongs to.
    pub accum_day: i64,
    /// Timestamp of the previous direct stimulation, for burst dampening.
    pub burst_last: Option<f64>,
    /// Finished things decay at double rate.
    pub finished: bool,
}

impl MbState {
    fn fresh(t: f64) -> Self {
        MbState {
            mb_anchor: 0.0,
            anchor_ts: t,
            age_at_anchor: 0.0,
            last_stim: t,
            day_accum: 0.0,
            accum_day: day_of(t),
            burst_last: None,
            finished: false,
        }
    }

    /// Current value at time `t`, derived from the anchor.
    pub fn current(&self, t: f64, clock: &ActiveDayClock, cfg: &DecayConfig) -> f64 {
        let tau = clock.active_days_between(self.anchor_ts, t) as f64;
        self.mb_anchor
            * decay_factor(
                self.age_at_anchor,
                self.age_at_anchor + tau,
                self.finished,
                cfg,
            )
    }
}

/// All node states plus the shared activity clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MbEngine {
    states: BTreeMap<EntityId, MbState>,
    clock: ActiveDayClock,
}

impl MbEngine {
    pub fn new(min_events_per_active_day: u32) -> Self {
        MbEngine {
            states: BTreeMap::new(),
            clock: ActiveDayClock::new(min_events_per_active_day),
        }
    }

    pub fn clock(&self) -> &ActiveDayClock {
        &self.clock
    }

    pub fn clock_mut(&mut self) -> &mut ActiveDayClock {
        &mut self.clock
    }

    pub fn record_event(&mut self, ts: f64) {
        self.clock.record_event(ts);
    }

    /// Current score of a node; never-stimulated nodes float at 0.
    pub fn current_mb(&self, id: &EntityId, t: f64, cfg: &DecayConfig) -> f64 {
        self.states
            .get(id)
            .map(|s| s.current(t, &self.clock, cfg))
            .unwrap_or(0.0)
    }

    pub fn state(&self, id: &EntityId) -> Option<&MbState> {
        self.states.get(id)
    }

    pub fn states_iter(&self) -> impl Iterator<Item = (&EntityId, &MbState)> {
        self.states.iter()
    }

    /// Stimulate `origin` at time `t` with base strength `s`, spreading into
    /// its neighborhood. Returns the new current value of every node that
    /// changed, origin included, sorted by id.
    pub fn stimulate_with_strength(
        &mut self,
        graph: &KnowledgeGraph,
        origin: &EntityId,
        s: f64,
        t: f64,
        cfg: &EngineConfig,
    ) -> Result<Vec<(EntityId, f64)>> {
        if !graph.contains(origin) {
            return Err(Error::UnknownEntity(origin.to_string()));
        }
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::OutOfRange(format!("stimulus strength {s}")));
        }

        let first_origin = !self.states.contains_key(origin);
        let state = self
            .states
            .entry(origin.clone())
            .or_insert_with(|| MbState::fresh(t));

        // roll the day-cap accumulator
        let today = day_of(t);
        if state.accum_day != today {
            state.accum_day = today;
            state.day_accum = 0.0;
        }
        // burst dampening: rapid repeats of the same node count for little
        let burst = state
            .burst_last
            .is_some_and(|prev| t - prev < cfg.stimulus.burst_window_s);
        let mut effective = if burst { s * cfg.stimulus.burst_factor } else { s };
        // daily cap on total applied stimulus per node
        let room = (cfg.stimulus.day_cap - state.day_accum).max(0.0);
        effective = effective.min(room);
        state.burst_last = Some(t);

        if effective <= 0.0 {
            return Ok(Vec::new());
        }
        state.day_accum += effective;

        let receivers = spread_activation(graph, origin, effective, &cfg.spread);
        let mut changed = Vec::with_capacity(receivers.len() + 1);
        changed.push((
            origin.clone(),
            self.apply_increment(origin, effective, t, first_origin, cfg),
        ));
        for (node, inc) in receivers {
            let first = !self.states.contains_key(&node);
            changed.push((node.clone(), self.apply_increment(&node, inc, t, first, cfg)));
        }
        changed.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(changed)
    }

    /// ⊕-update one node and re-anchor it at `t`.
    fn apply_increment(
        &mut self,
        id: &EntityId,
        inc: f64,
        t: f64,
        first_ever: bool,
        cfg: &EngineConfig,
    ) -> f64 {
        let clock = &self.clock;
        let state = self
            .states
            .entry(id.clone())
            .or_insert_with(|| MbState::fresh(t));
        let cur = state.current(t, clock, &cfg.decay);
        let mut new = oplus(cur, inc);
        if first_ever {
            new = new.min(cfg.stimulus.first_stimulation_cap);
        }
        state.mb_anchor = new;
        state.anchor_ts = t;
        state.age_at_anchor = 0.0;
        state.last_stim = t;
        new
    }

    /// Mark a thing finished: materialize its current value and double its
    /// decay rate from here on. Idempotent.
    pub fn set_finished(&mut self, id: &EntityId, t: f64, cfg: &DecayConfig) {
        let clock = &self.clock;
        let state = self
            .states
            .entry(id.clone())
            .or_insert_with(|| MbState::fresh(t));
        if state.finished {
            return;
        }
        // materialize with the *pre-finished* rate up to now, then switch
        let tau = clock.active_days_between(state.anchor_ts, t) as f64;
        state.mb_anchor *= decay_factor(
            state.age_at_anchor,
            state.age_at_anchor + tau,
            false,
            cfg,
        );
        state.age_at_anchor += tau;
        state.anchor_ts = t;
        state.finished = true;
    }

    pub fn is_finished(&self, id: &EntityId) -> bool {
        self.states.get(id).map(|s| s.finished).unwrap_or(false)
    }

    /// Drop a node's score to zero (explicit deletion).
    pub fn reset(&mut self, id: &EntityId, t: f64) {
        let state = self
            .states
            .entry(id.clone())
            .or_insert_with(|| MbState::fresh(t));
        state.mb_anchor = 0.0;
        state.anchor_ts = t;
        state.age_at_anchor = 0.0;
    }
}

/// Spread a stimulus of strength `s` from `origin` into its ≤ `hop_limit`
/// neighborhood and return the per-node increments (origin excluded).
///
/// A path origin → n₁ → … → n_k contributes
/// s · Π over hops of (edge weight · predicate weight · hop_decay / fanout of
/// the node the hop enters); contributions over all simple paths are summed
/// per node, and nodes whose total stays below epsilon are dropped.
pub fn spread_activation(
    graph: &KnowledgeGraph,
    origin: &EntityId,
    s: f64,
    cfg: &SpreadConfig,
) -> BTreeMap<EntityId, f64> {
    let mut acc: BTreeMap<EntityId, f64> = BTreeMap::new();
    let mut path: Vec<EntityId> = vec![origin.clone()];
    dfs_spread(graph, cfg, &mut acc, &mut path, s, 0);
    acc.retain(|_, v| *v >= cfg.epsilon);
    acc
}

fn dfs_spread(
    graph: &KnowledgeGraph,
    cfg: &SpreadConfig,
    acc: &mut BTreeMap<EntityId, f64>,
    path: &mut Vec<EntityId>,
    strength: f64,
    depth: usize,
) {
    if depth >= cfg.hop_limit {
        return;
    }
    let current = path.last().expect("path never empty").clone();
    for (pred, far, edge_w) in graph.incident(&current) {
        if path.contains(&far) {
            continue; // simple paths only
        }
        let fanout = graph.degree(&far).max(1) as f64;
        let contrib =
            strength * cfg.weights.weight_for(pred) * edge_w * cfg.hop_decay / fanout;
        if contrib <= 0.0 {
            continue;
        }
        *acc.entry(far.clone()).or_insert(0.0) += contrib;
        path.push(far.clone());
        dfs_spread(graph, cfg, acc, path, contrib, depth + 1);
        path.pop();
    }
}
