//! Engine configuration.
//!
//! Every tuning constant in the engine — stimulation strengths, spreading
//! weights, decay rates, caps, elicitation weights, persona weight tables,
//! thresholds — lives here with its default, so a single JSON document fully
//! determines behavior. Unknown keys are rejected rather than ignored: a
//! typo in a config must fail loudly, not silently run with defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::activity::EventType;
use crate::error::{Error, Result};
use crate::kg::Predicate;
use crate::preservation::{DimWeights, Persona, PersonaStrategy};

/// Base stimulation strength per interaction kind. Kinds not listed here
/// (switch_context, delete_request, calendar_end) stimulate nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrengthTable {
    pub open_read: f64,
    pub write: f64,
    pub tag: f64,
    pub drag_to_context: f64,
    pub search_click: f64,
    pub create: f64,
}

impl Default for StrengthTable {
    fn default() -> Self {
        StrengthTable {
            open_read: 0.10,
            write: 0.15,
            tag: 0.20,
            drag_to_context: 0.25,
            search_click: 0.08,
            create: 0.30,
        }
    }
}

impl StrengthTable {
    /// Base strength for an event kind; `None` for kinds that do not
    /// stimulate. A calendar entry appearing counts as creating a thing.
    pub fn base_for(&self, event_type: EventType) -> Option<f64> {
        match event_type {
            EventType::Open | EventType::Read => Some(self.open_read),
            EventType::Write => Some(self.write),
            EventType::Tag => Some(self.tag),
            EventType::DragToContext => Some(self.drag_to_context),
            EventType::Click | EventType::Search => Some(self.search_click),
            EventType::Create | EventType::CalendarCreate => Some(self.create),
            EventType::SwitchContext | EventType::DeleteRequest | EventType::CalendarEnd => None,
        }
    }

    fn values(&self) -> [f64; 6] {
        [
            self.open_read,
            self.write,
            self.tag,
            self.drag_to_context,
            self.search_click,
            self.create,
        ]
    }
}

/// Per-predicate edge weights used by spreading activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpreadWeights {
    pub is_contained_in: f64,
    pub has_topic: f64,
    pub sub_context_of: f64,
    pub related_to: f64,
    pub has_suggested_topic: f64,
    pub attended_by: f64,
    pub located_at: f64,
    pub has_part: f64,
    pub nucleus_of: f64,
}

impl Default for SpreadWeights {
    fn default() -> Self {
        SpreadWeights {
            is_contained_in: 1.0,
            has_topic: 0.8,
            sub_context_of: 0.7,
            related_to: 0.5,
            has_suggested_topic: 0.4,
            attended_by: 0.5,
            located_at: 0.5,
            has_part: 0.5,
            nucleus_of: 0.5,
        }
    }
}

impl SpreadWeights {
    pub fn weight_for(&self, predicate: Predicate) -> f64 {
        match predicate {
            Predicate::IsContainedIn => self.is_contained_in,
            Predicate::HasTopic => self.has_topic,
            Predicate::SubContextOf => self.sub_context_of,
            Predicate::RelatedTo => self.related_to,
            Predicate::HasSuggestedTopic => self.has_suggested_topic,
            Predicate::AttendedBy => self.attended_by,
            Predicate::LocatedAt => self.located_at,
            Predicate::HasPart => self.has_part,
            Predicate::NucleusOf => self.nucleus_of,
        }
    }

    fn values(&self) -> [f64; 9] {
        [
            self.is_contained_in,
            self.has_topic,
            self.sub_context_of,
            self.related_to,
            self.has_suggested_topic,
            self.attended_by,
            self.located_at,
            self.has_part,
            self.nucleus_of,
        ]
    }
}

/// Spreading-activation traversal parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpreadConfig {
    pub weights: SpreadWeights,
    /// Per-hop attenuation d.
    pub hop_decay: f64,
    /// Maximum path length H.
    pub hop_limit: usize,
    /// Summed increments below this are dropped.
    pub epsilon: f64,
}

impl Default for SpreadConfig {
    fn default() -> Self {
        SpreadConfig {
            weights: SpreadWeights::default(),
            hop_decay: 0.5,
            hop_limit: 2,
            epsilon: 0.01,
        }
    }
}

/// Two-phase decay over the active-day clock: a steep phase with a 3-day
/// half-life for the first 7 active days, then a 60-day half-life long tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayConfig {
    pub steep_half_life_days: f64,
    pub slow_half_life_days: f64,
    /// Active-day age at which the steep phase hands over to the slow one.
    pub steep_phase_days: f64,
    /// Rate multiplier for finished events/tasks.
    pub finished_multiplier: f64,
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig {
            steep_half_life_days: 3.0,
            slow_half_life_days: 60.0,
            steep_phase_days: 7.0,
            finished_multiplier: 2.0,
        }
    }
}

impl DecayConfig {
    pub fn lambda_steep(&self) -> f64 {
        std::f64::consts::LN_2 / self.steep_half_life_days
    }

    pub fn lambda_slow(&self) -> f64 {
        std::f64::consts::LN_2 / self.slow_half_life_days
    }
}

/// Saturation guards on stimulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StimulusCaps {
    /// A node's first-ever stimulation may not lift it above this.
    pub first_stimulation_cap: f64,
    /// Total effective strength a node may receive per UTC day.
    pub day_cap: f64,
    /// Repeat stimuli within this window are dampened.
    pub burst_window_s: f64,
    /// Dampening factor applied inside the burst window.
    pub burst_factor: f64,
}

impl Default for StimulusCaps {
    fn default() -> Self {
        StimulusCaps {
            first_stimulation_cap: 0.5,
            day_cap: 0.8,
            burst_window_s: 60.0,
            burst_factor: 0.2,
        }
    }
}

/// Calendar anticipation: upcoming events stimulate their neighborhood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnticipationConfig {
    /// Look-ahead horizon in days.
    pub window_days: f64,
    /// Strength of the daily anticipatory stimulus.
    pub strength: f64,
}

impl Default for AnticipationConfig {
    fn default() -> Self {
        AnticipationConfig {
            window_days: 3.0,
            strength: 0.3,
        }
    }
}

/// Context-elicitation scoring weights and decision thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ElicitationConfig {
    pub w_jaccard: f64,
    pub w_cosine: f64,
    pub w_recency: f64,
    /// Minimum top score before a switch is suggested.
    pub switch_threshold: f64,
    /// Below this top score a new context is proposed.
    pub new_threshold: f64,
    /// Hysteresis: the current context keeps the session unless the top
    /// candidate clears it by this much.
    pub margin: f64,
}

impl Default for ElicitationConfig {
    fn default() -> Self {
        ElicitationConfig {
            w_jaccard: 0.5,
            w_cosine: 0.3,
            w_recency: 0.2,
            switch_threshold: 0.35,
            new_threshold: 0.15,
            margin: 0.1,
        }
    }
}

/// The four preservation persona weight tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PersonaTables {
    pub safe_curator: DimWeights,
    pub safe_filer: DimWeights,
    pub ff_curator: DimWeights,
    pub ff_filer: DimWeights,
}

impl Default for PersonaTables {
    fn default() -> Self {
        PersonaTables {
            safe_curator: DimWeights::new(0.25, 0.25, 0.15, 0.10, 0.15, 0.10),
            safe_filer: DimWeights::new(0.10, 0.15, 0.15, 0.25, 0.10, 0.25),
            ff_curator: DimWeights::new(0.30, 0.25, 0.15, 0.05, 0.15, 0.10),
            ff_filer: DimWeights::new(0.10, 0.10, 0.10, 0.30, 0.10, 0.30),
        }
    }
}

impl PersonaTables {
    pub fn weights_for(&self, persona: Persona) -> &DimWeights {
        match persona {
            Persona::SafeCurator => &self.safe_curator,
            Persona::SafeFiler => &self.safe_filer,
            Persona::FfCurator => &self.ff_curator,
            Persona::FfFiler => &self.ff_filer,
        }
    }

    pub fn strategy(&self, persona: Persona) -> PersonaStrategy {
        PersonaStrategy::new(persona, self.weights_for(persona).clone())
    }
}

/// The complete, self-contained engine configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    /// Seed for the synthetic-data generators.
    pub seed: u64,
    pub strengths: StrengthTable,
    pub spread: SpreadConfig,
    pub decay: DecayConfig,
    pub stimulus: StimulusCaps,
    pub anticipation: AnticipationConfig,
    pub elicitation: ElicitationConfig,
    pub personas: PersonaTables,
    /// Events older than the previous event by more than this are rejected.
    pub reorder_window_s: f64,
    /// A day counts as active only with at least this many engine events.
    pub active_day_min_events: u32,
    /// Preserve/other decision threshold on PV.
    pub pv_threshold: f64,
    /// MB threshold between a context's active and forgotten partitions.
    pub theta_f: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            seed: 0,
            strengths: StrengthTable::default(),
            spread: SpreadConfig::default(),
            decay: DecayConfig::default(),
            stimulus: StimulusCaps::default(),
            anticipation: AnticipationConfig::default(),
            elicitation: ElicitationConfig::default(),
            personas: PersonaTables::default(),
            reorder_window_s: 60.0,
            active_day_min_events: 10,
            pv_threshold: 0.35,
            theta_f: 0.1,
        }
    }
}

fn check(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidConfig(what.to_string()))
    }
}

impl EngineConfig {
    /// Load and validate a configuration document.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: EngineConfig =
            serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The defaults document, pretty-printed for `config --defaults`.
    pub fn default_json() -> String {
        serde_json::to_string_pretty(&EngineConfig::default()).expect("config serializes")
    }

    /// Verify every value sits in its documented range.
    pub fn validate(&self) -> Result<()> {
        for s in self.strengths.values() {
            check(s > 0.0 && s <= 1.0, "stimulation strengths must be in (0,1]")?;
        }
        for w in self.spread.weights.values() {
            check(w > 0.0 && w <= 1.0, "spread weights must be in (0,1]")?;
        }
        check(
            self.spread.hop_decay > 0.0 && self.spread.hop_decay <= 1.0,
            "hop_decay must be in (0,1]",
        )?;
        check(self.spread.epsilon >= 0.0, "epsilon must be non-negative")?;
        check(
            self.decay.steep_half_life_days > 0.0 && self.decay.slow_half_life_days > 0.0,
            "half-lives must be positive",
        )?;
        check(self.decay.steep_phase_days >= 0.0, "steep_phase_days must be non-negative")?;
        check(self.decay.finished_multiplier >= 1.0, "finished_multiplier must be at least 1")?;
        check(
            (0.0..=1.0).contains(&self.stimulus.first_stimulation_cap)
                && (0.0..=1.0).contains(&self.stimulus.day_cap),
            "stimulation caps must be in [0,1]",
        )?;
        check(self.stimulus.burst_window_s >= 0.0, "burst_window_s must be non-negative")?;
        check(
            (0.0..=1.0).contains(&self.stimulus.burst_factor),
            "burst_factor must be in [0,1]",
        )?;
        check(self.anticipation.window_days >= 0.0, "anticipation window must be non-negative")?;
        check(
            self.anticipation.strength > 0.0 && self.anticipation.strength <= 1.0,
            "anticipation strength must be in (0,1]",
        )?;
        let e = &self.elicitation;
        check(
            e.w_jaccard >= 0.0 && e.w_cosine >= 0.0 && e.w_recency >= 0.0,
            "elicitation weights must be non-negative",
        )?;
        check(
            (e.w_jaccard + e.w_cosine + e.w_recency - 1.0).abs() <= 1e-9,
            "elicitation weights must sum to 1",
        )?;
        for t in [e.switch_threshold, e.new_threshold, e.margin] {
            check((0.0..=1.0).contains(&t), "elicitation thresholds must be in [0,1]")?;
        }
        check(self.reorder_window_s >= 0.0, "reorder_window_s must be non-negative")?;
        check(self.active_day_min_events >= 1, "active_day_min_events must be at least 1")?;
        check((0.0..=1.0).contains(&self.pv_threshold), "pv_threshold must be in [0,1]")?;
        check((0.0..=1.0).contains(&self.theta_f), "theta_f must be in [0,1]")?;
        for persona in Persona::ALL {
            self.personas
                .strategy(persona)
                .validate()
                .map_err(|e| Error::InvalidConfig(format!("persona {persona}: {e}")))?;
        }
        Ok(())
    }
}
