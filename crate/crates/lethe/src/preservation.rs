//! Preservation Value: the long-term half of information value.
//!
//! Six evidence dimensions are scored per item, combined inside each
//! dimension with the Dempster-Shafer sum ⊕, then weighted across dimensions
//! by one of four persona strategies. A "time capsule" partition splits a
//! photo corpus into preserve/other with a coverage guarantee (no collection
//! loses all of its members), and a tiny calibration routine adapts the
//! decision threshold to user feedback.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, Predicate, ThingKind};

/// The saturating evidence sum: v ⊕ w = 1 − (1−v)(1−w).
///
/// Closed on [0,1], commutative, associative, 0 is neutral and 1 absorbing —
/// more evidence never hurts, and certainty cannot be exceeded.
pub fn oplus(v: f64, w: f64) -> f64 {
    1.0 - (1.0 - v) * (1.0 - w)
}

/// Left fold of [`oplus`] over a list; the empty list combines to 0.
pub fn ds_combine(values: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for &v in values {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfRange(format!("evidence value {v} not in [0,1]")));
        }
        acc = oplus(acc, v);
    }
    Ok(acc)
}

/// Saturating normalization of an unbounded count: sat(x,k) = x/(x+k),
/// reaching 0.5 at x = k and 1 asymptotically.
pub fn sat(x: f64, k: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x / (x + k)
    }
}

// Indicator normalization constants (counts at which sat reaches 0.5).
const SAT_TAGS: f64 = 3.0;
const SAT_COMMENT_CHARS: f64 = 200.0;
const SAT_REVISIT_DAYS: f64 = 5.0;
const SAT_DEGREE: f64 = 6.0;
const SAT_PERSON_LINKS: f64 = 3.0;
const SAT_VIEWS: f64 = 20.0;
/// A thing counts as "important" for the gravity dimension above this MB.
const GRAVITY_HOT_MB: f64 = 0.7;
/// Per-extra-hop attenuation of the gravity closeness indicator.
const GRAVITY_HOP_DECAY: f64 = 0.5;

/// The four preservation strategies spanned by two loss attitudes and two
/// organization attitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Persona {
    SafeCurator,
    SafeFiler,
    FfCurator,
    FfFiler,
}

impl Persona {
    pub const ALL: [Persona; 4] = [
        Persona::SafeCurator,
        Persona::SafeFiler,
        Persona::FfCurator,
        Persona::FfFiler,
    ];

    /// Curators emphasize investment and gravity over popularity and quality.
    pub fn is_curator(self) -> bool {
        matches!(self, Persona::SafeCurator | Persona::FfCurator)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Persona::SafeCurator => "safe_curator",
            Persona::SafeFiler => "safe_filer",
            Persona::FfCurator => "ff_curator",
            Persona::FfFiler => "ff_filer",
        }
    }
}

impl fmt::Display for Persona {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Persona {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "safe_curator" => Ok(Persona::SafeCurator),
            "safe_filer" => Ok(Persona::SafeFiler),
            "ff_curator" => Ok(Persona::FfCurator),
            "ff_filer" => Ok(Persona::FfFiler),
            other => Err(Error::InvalidStrategy(other.to_string())),
        }
    }
}

/// Per-dimension weights in the order investment, gravity, social_graph,
/// popularity, coverage, quality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimWeights {
    pub investment: f64,
    pub gravity: f64,
    pub social_graph: f64,
    pub popularity: f64,
    pub coverage: f64,
    pub quality: f64,
}

impl DimWeights {
    pub fn new(
        investment: f64,
        gravity: f64,
        social_graph: f64,
        popularity: f64,
        coverage: f64,
        quality: f64,
    ) -> Self {
        DimWeights {
            investment,
            gravity,
            social_graph,
            popularity,
            coverage,
            quality,
        }
    }

    pub fn as_array(&self) -> [f64; 6] {
        [
            self.investment,
            self.gravity,
            self.social_graph,
            self.popularity,
            self.coverage,
            self.quality,
        ]
    }

    pub fn dot(&self, dims: &DimensionScores) -> f64 {
        self.as_array()
            .iter()
            .zip(dims.as_array())
            .map(|(w, d)| w * d)
            .sum()
    }
}

/// A persona with its weight table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonaStrategy {
    pub persona: Persona,
    pub weights: DimWeights,
}

impl PersonaStrategy {
    pub fn new(persona: Persona, weights: DimWeights) -> Self {
        PersonaStrategy { persona, weights }
    }

    /// Weights must be a convex combination and respect the curator/filer
    /// emphasis ordering.
    pub fn validate(&self) -> Result<()> {
        let w = self.weights.as_array();
        if w.iter().any(|&x| x < 0.0) {
            return Err(Error::InvalidStrategy(format!(
                "{}: negative weight",
                self.persona
            )));
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidStrategy(format!(
                "{}: weights sum to {total}, expected 1",
                self.persona
            )));
        }
        let curator_side = self.weights.investment + self.weights.gravity;
        let filer_side = self.weights.popularity + self.weights.quality;
        let ordered = if self.persona.is_curator() {
            curator_side > filer_side
        } else {
            filer_side > curator_side
        };
        if !ordered {
            return Err(Error::InvalidStrategy(format!(
                "{}: curator/filer emphasis ordering violated",
                self.persona
            )));
        }
        Ok(())
    }
}

/// The six evidence dimensions, each already ⊕-combined from its indicators.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DimensionScores {
    pub investment: f64,
    pub gravity: f64,
    pub social_graph: f64,
    pub popularity: f64,
    pub coverage: f64,
    pub quality: f64,
}

impl DimensionScores {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.investment,
            self.gravity,
            self.social_graph,
            self.popularity,
            self.coverage,
            self.quality,
        ]
    }
}

/// Per-item usage counters accumulated from the activity stream (or drawn
/// from a generator profile).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct UsageStats {
    pub clicks: u64,
    pub views: u64,
    pub comment_chars: u64,
    pub tags: u64,
    /// Star rating 1–5 if the user rated the item.
    pub rating: Option<u8>,
    /// Distinct active days on which the item was accessed.
    pub revisit_days: u64,
}

/// Preserve, or leave to the forgetting escalation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Preserve,
    Other,
}

/// The full assessment record for one item under one persona.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PVAssessment {
    pub item: EntityId,
    pub dims: DimensionScores,
    pub pv: f64,
    pub persona: Persona,
    pub decision: Decision,
    /// True when the coverage post-pass preserved this item despite pv below
    /// threshold.
    pub promoted: bool,
}

/// Score the six dimensions for one item.
///
/// `mb_of` supplies current Memory Buoyancy (the gravity dimension looks for
/// proximity to hot things); pass `|_| 0.0` when assessing a cold store.
pub fn dimension_scores(
    item: &EntityId,
    stats: &UsageStats,
    graph: &KnowledgeGraph,
    mb_of: &dyn Fn(&EntityId) -> f64,
) -> Result<DimensionScores> {
    let thing = graph
        .thing(item)
        .ok_or_else(|| Error::UnknownEntity(item.to_string()))?;
    if let Some(r) = stats.rating {
        if !(1..=5).contains(&r) {
            return Err(Error::OutOfRange(format!("rating {r} not in 1..=5")));
        }
    }

    let investment = ds_combine(&[
        sat(stats.tags as f64, SAT_TAGS),
        sat(stats.comment_chars as f64, SAT_COMMENT_CHARS),
        sat(stats.revisit_days as f64, SAT_REVISIT_DAYS),
    ])?;

    let closeness = closeness_to_hot(item, graph, mb_of);
    let gravity = ds_combine(&[sat(graph.degree(item) as f64, SAT_DEGREE), closeness])?;

    let mut persons: BTreeSet<EntityId> = BTreeSet::new();
    let mut important = false;
    for (_, far, _) in graph.incident(item) {
        if let Some(t) = graph.thing(&far) {
            if t.kind == ThingKind::Person {
                if t.attributes.get("important").map(String::as_str) == Some("true") {
                    important = true;
                }
                persons.insert(far);
            }
        }
    }
    let social_graph = if important {
        1.0
    } else {
        sat(persons.len() as f64, SAT_PERSON_LINKS)
    };

    let mut popularity_parts = vec![sat(stats.views as f64, SAT_VIEWS)];
    if let Some(r) = stats.rating {
        popularity_parts.push((r as f64 - 1.0) / 4.0);
    }
    let popularity = ds_combine(&popularity_parts)?;

    let quality = thing
        .attr_f64("quality")
        .map(|q| q.clamp(0.0, 1.0))
        .unwrap_or(0.0);

    Ok(DimensionScores {
        investment,
        gravity,
        social_graph,
        popularity,
        // Coverage is a set-level property; the partition post-pass fills it
        // in for the items it promotes.
        coverage: 0.0,
        quality,
    })
}

/// Best edge-weighted proximity of `item` to any thing with high MB, over
/// paths of at most two hops: a direct edge scores its weight, a two-hop
/// path the weight product attenuated once.
fn closeness_to_hot(item: &EntityId, graph: &KnowledgeGraph, mb_of: &dyn Fn(&EntityId) -> f64) -> f64 {
    let mut best: f64 = 0.0;
    for (_, n1, w1) in graph.incident(item) {
        if n1 == *item {
            continue;
        }
        if mb_of(&n1) >= GRAVITY_HOT_MB {
            best = best.max(w1);
        }
        for (_, n2, w2) in graph.incident(&n1) {
            if n2 == *item || n2 == n1 {
                continue;
            }
            if mb_of(&n2) >= GRAVITY_HOT_MB {
                best = best.max(w1 * w2 * GRAVITY_HOP_DECAY);
            }
        }
    }
    best.min(1.0)
}

/// Weight the dimensions into a PV and decide against the threshold.
pub fn compute_pv(
    item: &EntityId,
    dims: DimensionScores,
    strategy: &PersonaStrategy,
    threshold: f64,
) -> Result<PVAssessment> {
    strategy.validate()?;
    for d in dims.as_array() {
        if !(0.0..=1.0).contains(&d) {
            return Err(Error::OutOfRange(format!("dimension score {d} not in [0,1]")));
        }
    }
    let pv = strategy.weights.dot(&dims);
    Ok(PVAssessment {
        item: item.clone(),
        dims,
        pv,
        persona: strategy.persona,
        decision: if pv >= threshold { Decision::Preserve } else { Decision::Other },
        promoted: false,
    })
}

/// Result of the time-capsule partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeCapsule {
    pub preserve: Vec<EntityId>,
    pub other: Vec<EntityId>,
    /// Items preserved only by the coverage guarantee.
    pub promotions: Vec<EntityId>,
}

/// Split assessed items into preserve/other, then enforce coverage: every
/// collection (hasPart container) keeps at least its best member.
///
/// Promoted items get their coverage dimension set to 1 and their pv
/// recomputed; the `promoted` flag marks that the threshold did not make the
/// decision. Containers are processed in id order, so an item promoted for
/// one collection also covers any later collection it belongs to.
pub fn partition_time_capsule(
    assessments: &mut [PVAssessment],
    graph: &KnowledgeGraph,
    strategy: &PersonaStrategy,
    threshold: f64,
) -> TimeCapsule {
    let _ = threshold; // the initial split already happened in compute_pv
    let index: std::collections::BTreeMap<EntityId, usize> = assessments
        .iter()
        .enumerate()
        .map(|(i, a)| (a.item.clone(), i))
        .collect();

    let mut containers: BTreeSet<EntityId> = BTreeSet::new();
    for edge in graph.edges_iter() {
        if edge.predicate == Predicate::HasPart && index.contains_key(&edge.object) {
            containers.insert(edge.subject);
        }
    }

    let mut promotions = Vec::new();
    for container in containers {
        let mut member_idx: Vec<usize> = graph
            .incident(&container)
            .into_iter()
            .filter(|(p, _, _)| *p == Predicate::HasPart)
            .filter_map(|(_, far, _)| index.get(&far).copied())
            .collect();
        member_idx.sort_unstable();
        member_idx.dedup();
        if member_idx.is_empty()
            || member_idx
                .iter()
                .any(|&i| assessments[i].decision == Decision::Preserve)
        {
            continue;
        }
        // Promote the best member; ties go to the smaller item id, which is
        // the iteration order here.
        let mut best = member_idx[0];
        for &i in &member_idx[1..] {
            if assessments[i].pv > assessments[best].pv {
                best = i;
            }
        }
        let a = &mut assessments[best];
        a.dims.coverage = 1.0;
        a.pv = strategy.weights.dot(&a.dims);
        a.decision = Decision::Preserve;
        a.promoted = true;
        promotions.push(a.item.clone());
    }
    promotions.sort();

    let mut preserve = Vec::new();
    let mut other = Vec::new();
    for a in assessments.iter() {
        match a.decision {
            Decision::Preserve => preserve.push(a.item.clone()),
            Decision::Other => other.push(a.item.clone()),
        }
    }
    preserve.sort();
    other.sort();
    TimeCapsule {
        preserve,
        other,
        promotions,
    }
}

/// Pick the threshold that best reproduces the user's corrections.
///
/// Candidates are the observed pvs plus {0, 1}; the one with the fewest
/// disagreements wins, and ties break toward the larger threshold — when in
/// doubt, prefer forgetting.
pub fn calibrate_threshold(labeled: &[(f64, Decision)]) -> Result<f64> {
    if labeled.is_empty() {
        return Err(Error::EmptyFeedback);
    }
    let mut candidates: Vec<f64> = labeled.iter().map(|(pv, _)| *pv).collect();
    candidates.push(0.0);
    candidates.push(1.0);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let disagreements = |threshold: f64| -> usize {
        labeled
            .iter()
            .filter(|(pv, label)| match label {
                Decision::Preserve => *pv < threshold,
                Decision::Other => *pv >= threshold,
            })
            .count()
    };

    let mut best = candidates[0];
    let mut best_count = disagreements(best);
    for &c in &candidates[1..] {
        let count = disagreements(c);
        // <= keeps the larger of tied candidates (candidates are ascending).
        if count <= best_count {
            best = c;
            best_count = count;
        }
    }
    Ok(best)
}
