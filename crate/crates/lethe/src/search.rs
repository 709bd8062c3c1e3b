//! Forgetting-aware full-text search.
//!
//! A small inverted index with AND semantics and term-frequency scoring.
//! Results are never silently truncated by forgetting: every hit is
//! partitioned into active/forgotten by current Memory Buoyancy, a coverage
//! report counts both sides before any visibility floor is applied, and each
//! partition is grouped into at most five concept clusters plus a rest
//! bucket so a glance shows *what kinds* of things matched.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::normalize;
use crate::kg::EntityId;

/// Maximum number of labelled concept clusters per partition.
const MAX_CLUSTERS: usize = 5;

/// Inverted index over item texts plus per-item concept sets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchIndex {
    postings: BTreeMap<String, BTreeMap<EntityId, u32>>,
    item_tokens: BTreeMap<EntityId, BTreeMap<String, u32>>,
    item_concepts: BTreeMap<EntityId, BTreeSet<EntityId>>,
}

impl SearchIndex {
    pub fn new() -> Self {
        SearchIndex::default()
    }

    /// Index an item, replacing whatever was stored for it before.
    pub fn index_item(&mut self, item: &EntityId, text: &str, concepts: BTreeSet<EntityId>) {
        self.remove_item(item);
        self.merge_item(item, text, concepts);
    }

    /// Fold more text and concepts into an item's entry (term frequencies
    /// add up). Creates the entry if needed, so even a text-less touch makes
    /// the item findable by concept filters.
    pub fn merge_item(&mut self, item: &EntityId, text: &str, concepts: BTreeSet<EntityId>) {
        let tf = self.item_tokens.entry(item.clone()).or_default();
        for token in normalize(text) {
            *tf.entry(token.clone()).or_insert(0) += 1;
            *self
                .postings
                .entry(token)
                .or_default()
                .entry(item.clone())
                .or_insert(0) += 1;
        }
        self.item_concepts.entry(item.clone()).or_default().extend(concepts);
    }

    pub fn remove_item(&mut self, item: &EntityId) {
        if let Some(tf) = self.item_tokens.remove(item) {
            for token in tf.keys() {
                if let Some(p) = self.postings.get_mut(token) {
                    p.remove(item);
                    if p.is_empty() {
                        self.postings.remove(token);
                    }
                }
            }
        }
        self.item_concepts.remove(item);
    }

    /// Term-frequency vector of one item (used for context elicitation).
    pub fn item_vector(&self, item: &EntityId) -> Option<&BTreeMap<String, u32>> {
        self.item_tokens.get(item)
    }

    pub fn concepts_of(&self, item: &EntityId) -> Option<&BTreeSet<EntityId>> {
        self.item_concepts.get(item)
    }

    pub fn item_count(&self) -> usize {
        self.item_tokens.len()
    }

    /// Flatten to rows for serialization.
    pub fn to_rows(&self) -> Vec<(EntityId, BTreeMap<String, u32>, BTreeSet<EntityId>)> {
        self.item_tokens
            .iter()
            .map(|(id, tf)| {
                (
                    id.clone(),
                    tf.clone(),
                    self.item_concepts.get(id).cloned().unwrap_or_default(),
                )
            })
            .collect()
    }

    /// Rebuild from serialized rows (postings are derived state).
    pub fn from_rows(rows: Vec<(EntityId, BTreeMap<String, u32>, BTreeSet<EntityId>)>) -> Self {
        let mut index = SearchIndex::new();
        for (id, tf, concepts) in rows {
            for (token, count) in &tf {
                index
                    .postings
                    .entry(token.clone())
                    .or_default()
                    .insert(id.clone(), *count);
            }
            index.item_tokens.insert(id.clone(), tf);
            index.item_concepts.insert(id, concepts);
        }
        index
    }

    /// Run a query. `mb_of` supplies current Memory Buoyancy per item.
    pub fn query(
        &self,
        spec: &QuerySpec,
        mb_of: &dyn Fn(&EntityId) -> f64,
    ) -> Result<SearchResult> {
        let tokens: BTreeSet<String> = normalize(&spec.terms).into_iter().collect();
        if tokens.is_empty() && spec.concept_filter.is_empty() {
            return Err(Error::EmptyQuery);
        }
        let filter: BTreeSet<&EntityId> = spec.concept_filter.iter().collect();

        // candidate items: AND over token postings, or the whole corpus for
        // a pure concept-filter query
        let mut matches: Vec<(EntityId, f64)> = Vec::new();
        'candidates: for (item, tf) in &self.item_tokens {
            let mut score = 0u32;
            for token in &tokens {
                match tf.get(token) {
                    Some(count) => score += count,
                    None => continue 'candidates,
                }
            }
            if !filter.is_empty() {
                let have = self.item_concepts.get(item);
                if !filter
                    .iter()
                    .all(|c| have.is_some_and(|set| set.contains(*c)))
                {
                    continue;
                }
            }
            matches.push((item.clone(), score as f64));
        }
        matches.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

        // coverage counts *all* matches, before any visibility floor
        let mut coverage = Coverage::default();
        let mut scored: Vec<(EntityId, f64, f64, Partition)> = Vec::new();
        for (item, score) in matches {
            let mb = mb_of(&item);
            let partition = if mb >= spec.theta_f {
                coverage.active_count += 1;
                Partition::Active
            } else {
                coverage.forgotten_count += 1;
                Partition::Forgotten
            };
            scored.push((item, score, mb, partition));
        }

        let floor = spec.min_mb.unwrap_or(0.0);
        let hits: Vec<Hit> = scored
            .into_iter()
            .filter(|(_, _, mb, _)| *mb >= floor)
            .map(|(item, score, mb, partition)| Hit {
                item,
                score,
                mb,
                partition,
            })
            .collect();

        let active_clusters = self.cluster(hits.iter().filter(|h| h.partition == Partition::Active));
        let forgotten_clusters =
            self.cluster(hits.iter().filter(|h| h.partition == Partition::Forgotten));

        Ok(SearchResult {
            hits,
            coverage,
            active_clusters,
            forgotten_clusters,
        })
    }

    /// Greedy maximum-cover grouping of one partition's hits by concept.
    fn cluster<'a>(&self, hits: impl Iterator<Item = &'a Hit>) -> Vec<Cluster> {
        let order: Vec<EntityId> = hits.map(|h| h.item.clone()).collect();
        let mut uncovered: BTreeSet<&EntityId> = order.iter().collect();
        let mut clusters = Vec::new();
        while clusters.len() < MAX_CLUSTERS && !uncovered.is_empty() {
            // count uncovered items per concept; BTreeMap iteration breaks
            // ties toward the smaller concept id
            let mut tally: BTreeMap<&EntityId, usize> = BTreeMap::new();
            for item in &uncovered {
                if let Some(concepts) = self.item_concepts.get(*item) {
                    for c in concepts {
                        *tally.entry(c).or_insert(0) += 1;
                    }
                }
            }
            let Some((&best, &count)) = tally.iter().max_by(|a, b| {
                a.1.cmp(b.1).then_with(|| b.0.cmp(a.0))
            }) else {
                break;
            };
            if count == 0 {
                break;
            }
            let best = best.clone();
            let members: Vec<EntityId> = order
                .iter()
                .filter(|i| {
                    uncovered.contains(i)
                        && self
                            .item_concepts
                            .get(*i)
                            .is_some_and(|set| set.contains(&best))
                })
                .cloned()
                .collect();
            for m in &members {
                uncovered.remove(m);
            }
            clusters.push(Cluster {
                concept: Some(best),
                members,
            });
        }
        if !uncovered.is_empty() {
            let members: Vec<EntityId> = order
                .iter()
                .filter(|i| uncovered.contains(i))
                .cloned()
                .collect();
            clusters.push(Cluster {
                concept: None,
                members,
            });
        }
        clusters
    }
}

/// A parsed query.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct QuerySpec {
    /// Free-text terms, AND-combined after normalization.
    pub terms: String,
    /// Concepts every hit must be linked to.
    pub concept_filter: Vec<EntityId>,
    /// Visibility floor: hits below this MB are dropped from the hit list
    /// (but still counted in coverage).
    pub min_mb: Option<f64>,
    /// Boundary between the active and forgotten partitions.
    pub theta_f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Active,
    Forgotten,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub item: EntityId,
    pub score: f64,
    pub mb: f64,
    pub partition: Partition,
}

/// How many matches fell on each side of the forgetting boundary — reported
/// for *all* matches so the user can tell when results were withheld.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub active_count: usize,
    pub forgotten_count: usize,
}

/// One concept group within a partition; `concept: None` is the rest bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub concept: Option<EntityId>,
    pub members: Vec<EntityId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub hits: Vec<Hit>,
    pub coverage: Coverage,
    pub active_clusters: Vec<Cluster>,
    pub forgotten_clusters: Vec<Cluster>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn concepts(ids: &[&str]) -> BTreeSet<EntityId> {
        ids.iter().map(|s| EntityId::from(*s)).collect()
    }

    fn spec(terms: &str) -> QuerySpec {
        QuerySpec {
            terms: terms.to_string(),
            theta_f: 0.1,
            ..QuerySpec::default()
        }
    }

    fn small_index() -> SearchIndex {
        let mut ix = SearchIndex::new();
        ix.merge_item(
            &"n1".into(),
            "alpha beta alpha notes",
            concepts(&["t:ml"]),
        );
        ix.merge_item(&"n2".into(), "alpha gamma", concepts(&["t:ml", "t:rust"]));
        ix.merge_item(&"n3".into(), "beta beta beta", concepts(&["t:rust"]));
        ix
    }

    #[test]
    fn and_semantics_and_tf_scores() {
        let ix = small_index();
        let r = ix.query(&spec("alpha"), &|_| 1.0).unwrap();
        let ids: Vec<&str> = r.hits.iter().map(|h| h.item.as_str()).collect();
        // n1 has tf 2, n2 tf 1
        assert_eq!(ids, vec!["n1", "n2"]);
        assert_eq!(r.hits[0].score, 2.0);
        let r = ix.query(&spec("alpha beta"), &|_| 1.0).unwrap();
        let ids: Vec<&str> = r.hits.iter().map(|h| h.item.as_str()).collect();
        assert_eq!(ids, vec!["n1"]); // only n1 has both
        assert_eq!(r.hits[0].score, 3.0); // 2 + 1
    }

    #[test]
    fn query_terms_are_normalized_and_deduplicated() {
        let ix = small_index();
        let a = ix.query(&spec("ALPHA, Alpha!"), &|_| 1.0).unwrap();
        let b = ix.query(&spec("alpha"), &|_| 1.0).unwrap();
        assert_eq!(a.hits, b.hits);
    }

    #[test]
    fn empty_query_rejected() {
        let ix = small_index();
        assert!(matches!(ix.query(&spec("  ,, "), &|_| 1.0), Err(Error::EmptyQuery)));
        // a pure concept filter is fine
        let q = QuerySpec {
            concept_filter: vec!["t:rust".into()],
            theta_f: 0.1,
            ..QuerySpec::default()
        };
        let r = ix.query(&q, &|_| 1.0).unwrap();
        let ids: Vec<&str> = r.hits.iter().map(|h| h.item.as_str()).collect();
        assert_eq!(ids, vec!["n2", "n3"]);
        assert!(r.hits.iter().all(|h| h.score == 0.0));
    }

    #[test]
    fn concept_filter_intersects_with_terms() {
        let ix = small_index();
        let q = QuerySpec {
            terms: "alpha".into(),
            concept_filter: vec!["t:rust".into()],
            theta_f: 0.1,
            ..QuerySpec::default()
        };
        let r = ix.query(&q, &|_| 1.0).unwrap();
        let ids: Vec<&str> = r.hits.iter().map(|h| h.item.as_str()).collect();
        assert_eq!(ids, vec!["n2"]);
        // filters AND together; nothing carries both concepts here… except n2
        let q = QuerySpec {
            terms: String::new(),
            concept_filter: vec!["t:ml".into(), "t:rust".into()],
            theta_f: 0.1,
            ..QuerySpec::default()
        };
        let r = ix.query(&q, &|_| 1.0).unwrap();
        let ids: Vec<&str> = r.hits.iter().map(|h| h.item.as_str()).collect();
        assert_eq!(ids, vec!["n2"]);
    }

    #[test]
    fn partition_by_theta_and_coverage_before_floor() {
        let ix = small_index();
        let mb = |id: &EntityId| match id.as_str() {
            "n1" => 0.8,
            "n2" => 0.05,
            _ => 0.0,
        };
        let mut q = spec("alpha");
        q.min_mb = Some(0.5);
        let r = ix.query(&q, &mb).unwrap();
        // n2 is floored out of the hits…
        assert_eq!(r.hits.len(), 1);
        assert_eq!(r.hits[0].item.as_str(), "n1");
        assert_eq!(r.hits[0].partition, Partition::Active);
        // …but still counted in coverage, on the forgotten side
        assert_eq!(r.coverage, Coverage { active_count: 1, forgotten_count: 1 });
    }

    #[test]
    fn replace_and_merge_semantics() {
        let mut ix = SearchIndex::new();
        ix.merge_item(&"n1".into(), "alpha", concepts(&[]));
        ix.merge_item(&"n1".into(), "alpha beta", concepts(&["t:x"]));
        let tf = ix.item_vector(&"n1".into()).unwrap();
        assert_eq!(tf.get("alpha"), Some(&2));
        assert_eq!(tf.get("beta"), Some(&1));
        ix.index_item(&"n1".into(), "gamma", concepts(&[]));
        let tf = ix.item_vector(&"n1".into()).unwrap();
        assert_eq!(tf.get("alpha"), None);
        assert_eq!(tf.get("gamma"), Some(&1));
        assert!(ix.query(&spec("alpha"), &|_| 1.0).unwrap().hits.is_empty());
        ix.remove_item(&"n1".into());
        assert_eq!(ix.item_count(), 0);
        assert!(ix.query(&spec("gamma"), &|_| 1.0).unwrap().hits.is_empty());
    }

    #[test]
    fn clusters_cover_each_partition_exactly_once() {
        let mut ix = SearchIndex::new();
        // 3 items about ml, 2 about rust, 1 with no concepts
        for (id, text, cs) in [
            ("a", "query term", vec!["t:ml"]),
            ("b", "query term", vec!["t:ml", "t:rust"]),
            ("c", "query term", vec!["t:ml"]),
            ("d", "query term", vec!["t:rust"]),
            ("e", "query term", vec![]),
        ] {
            ix.merge_item(&id.into(), text, cs.iter().map(|s| EntityId::from(*s)).collect());
        }
        let r = ix.query(&spec("query"), &|_| 1.0).unwrap();
        assert_eq!(r.active_clusters.len(), 3);
        // t:ml covers 3 uncovered items and wins the first round
        assert_eq!(r.active_clusters[0].concept, Some("t:ml".into()));
        assert_eq!(
            r.active_clusters[0].members,
            vec![EntityId::from("a"), "b".into(), "c".into()]
        );
        assert_eq!(r.active_clusters[1].concept, Some("t:rust".into()));
        assert_eq!(r.active_clusters[1].members, vec![EntityId::from("d")]);
        assert_eq!(r.active_clusters[2].concept, None);
        assert_eq!(r.active_clusters[2].members, vec![EntityId::from("e")]);
        assert!(r.forgotten_clusters.is_empty());
    }

    #[test]
    fn cluster_tie_breaks_toward_smaller_concept_id() {
        let mut ix = SearchIndex::new();
        ix.merge_item(&"a".into(), "x", concepts(&["t:b", "t:a"]));
        let r = ix.query(&spec("x"), &|_| 1.0).unwrap();
        assert_eq!(r.active_clusters[0].concept, Some("t:a".into()));
    }

    #[test]
    fn at_most_five_labelled_clusters() {
        let mut ix = SearchIndex::new();
        for i in 0..8 {
            ix.merge_item(
                &format!("i{i}").into(),
                "shared",
                concepts(&[&format!("t:{i}")]),
            );
        }
        let r = ix.query(&spec("shared"), &|_| 1.0).unwrap();
        assert_eq!(r.active_clusters.len(), 6);
        assert!(r.active_clusters[..5].iter().all(|c| c.concept.is_some()));
        let rest = &r.active_clusters[5];
        assert_eq!(rest.concept, None);
        assert_eq!(rest.members.len(), 3);
    }

    /// Linear-scan reference for the hit list and coverage.
    fn reference_query(
        rows: &[(EntityId, BTreeMap<String, u32>, BTreeSet<EntityId>)],
        q: &QuerySpec,
        mb_of: &dyn Fn(&EntityId) -> f64,
    ) -> (Vec<(EntityId, f64)>, Coverage) {
        let tokens: BTreeSet<String> = normalize(&q.terms).into_iter().collect();
        let mut out = Vec::new();
        let mut coverage = Coverage::default();
        for (id, tf, cs) in rows {
            if !tokens.iter().all(|t| tf.contains_key(t)) {
                continue;
            }
            if !q.concept_filter.iter().all(|c| cs.contains(c)) {
                continue;
            }
            let score: u32 = tokens.iter().map(|t| tf[t]).sum();
            let mb = mb_of(id);
            if mb >= q.theta_f {
                coverage.active_count += 1;
            } else {
                coverage.forgotten_count += 1;
            }
            if mb >= q.min_mb.unwrap_or(0.0) {
                out.push((id.clone(), score as f64, mb));
            }
        }
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        (out.into_iter().map(|(id, s, _)| (id, s)).collect(), coverage)
    }

    #[test]
    fn query_matches_linear_scan_on_random_corpora() {
        let vocab = ["ember", "cinder", "drift", "harbor", "lumen", "quill"];
        let topics = ["t:0", "t:1", "t:2"];
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let mut ix = SearchIndex::new();
            let n = rng.gen_range(1..30);
            for i in 0..n {
                let words: Vec<&str> = (0..rng.gen_range(1..12))
                    .map(|_| vocab[rng.gen_range(0..vocab.len())])
                    .collect();
                let cs: BTreeSet<EntityId> = topics
                    .iter()
                    .filter(|_| rng.gen_bool(0.4))
                    .map(|s| EntityId::from(*s))
                    .collect();
                ix.merge_item(&format!("item{i:02}").into(), &words.join(" "), cs);
            }
            let mbs: BTreeMap<EntityId, f64> = (0..n)
                .map(|i| (format!("item{i:02}").into(), rng.gen_range(0.0..1.0)))
                .collect();
            let mb_of = |id: &EntityId| mbs.get(id).copied().unwrap_or(0.0);
            let q = QuerySpec {
                terms: format!(
                    "{} {}",
                    vocab[rng.gen_range(0..vocab.len())],
                    vocab[rng.gen_range(0..vocab.len())]
                ),
                concept_filter: if rng.gen_bool(0.3) {
                    vec![topics[rng.gen_range(0..3)].into()]
                } else {
                    Vec::new()
                },
                min_mb: if rng.gen_bool(0.5) { Some(rng.gen_range(0.0..0.8)) } else { None },
                theta_f: 0.1,
            };
            let got = ix.query(&q, &mb_of).unwrap();
            let rows = ix.to_rows();
            let (want_hits, want_cov) = reference_query(&rows, &q, &mb_of);
            let got_pairs: Vec<(EntityId, f64)> =
                got.hits.iter().map(|h| (h.item.clone(), h.score)).collect();
            assert_eq!(got_pairs, want_hits);
            assert_eq!(got.coverage, want_cov);
            // cluster partition law: members exactly cover the partition
            for (partition, clusters) in [
                (Partition::Active, &got.active_clusters),
                (Partition::Forgotten, &got.forgotten_clusters),
            ] {
                let in_partition: BTreeSet<EntityId> = got
                    .hits
                    .iter()
                    .filter(|h| h.partition == partition)
                    .map(|h| h.item.clone())
                    .collect();
                let mut seen = BTreeSet::new();
                for c in clusters.iter() {
                    for m in &c.members {
                        assert!(seen.insert(m.clone()), "duplicate member");
                    }
                }
                assert_eq!(seen, in_partition);
            }
        }
    }

    #[test]
    fn round_trips_through_rows() {
        let ix = small_index();
        let rebuilt = SearchIndex::from_rows(ix.to_rows());
        assert_eq!(ix, rebuilt);
    }
}
