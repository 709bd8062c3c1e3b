//! Ontology-based entity extraction.
//!
//! Snippets of user text (window titles, mail subjects, note bodies) are
//! matched against the labels of things already present in the knowledge
//! graph. No statistical NER: the graph *is* the dictionary, so extraction
//! automatically tracks whatever vocabulary the user has built up.
//!
//! Matching is token-based over a trie, longest-match and non-overlapping,
//! with a bounded inflection tolerance so "Verträge" still finds the thing
//! labeled "Vertrag". Lookup cost is independent of dictionary size apart
//! from logarithmic child lookups, which keeps annotation fast enough to run
//! on every activity event.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Bound;

use unicode_normalization::char::canonical_combining_class;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph};

/// Score assigned to a mention whose tokens all matched exactly.
pub const SCORE_EXACT: f64 = 1.0;
/// Score assigned when at least one token matched via inflection tolerance.
pub const SCORE_INFLECTED: f64 = 0.8;

/// Minimum stem length (in chars) before inflection tolerance applies.
const STEM_MIN: usize = 4;
/// Maximum number of trailing chars an inflected form may add to its stem.
const INFLECT_MAX: usize = 3;

/// Lowercase, strip diacritics (canonical decomposition, drop combining
/// marks), and split on runs of non-alphanumeric characters.
///
/// `"Käufer-Liste"` becomes `["kaufer", "liste"]`.
pub fn normalize(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.text).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Token {
    text: String,
    char_start: usize,
    char_end: usize,
    byte_start: usize,
    byte_end: usize,
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current: Option<Token> = None;
    for (char_idx, (byte_idx, ch)) in text.char_indices().enumerate() {
        // Normalize this single character: lowercase, decompose, drop marks.
        let mut norm = String::new();
        let mut separator = false;
        for lc in ch.to_lowercase() {
            for d in lc.nfd() {
                if canonical_combining_class(d) != 0 {
                    continue;
                }
                if d.is_alphanumeric() {
                    norm.push(d);
                } else {
                    separator = true;
                }
            }
        }
        if separator {
            if let Some(tok) = current.take() {
                tokens.push(tok);
            }
        } else if norm.is_empty() {
            // A bare combining mark: extends the word it sits in but adds
            // nothing to the normalized form.
            if let Some(tok) = current.as_mut() {
                tok.char_end = char_idx + 1;
                tok.byte_end = byte_idx + ch.len_utf8();
            }
        } else {
            match current.as_mut() {
                Some(tok) => {
                    tok.text.push_str(&norm);
                    tok.char_end = char_idx + 1;
                    tok.byte_end = byte_idx + ch.len_utf8();
                }
                None => {
                    current = Some(Token {
                        text: norm,
                        char_start: char_idx,
                        char_end: char_idx + 1,
                        byte_start: byte_idx,
                        byte_end: byte_idx + ch.len_utf8(),
                    });
                }
            }
        }
    }
    if let Some(tok) = current.take() {
        tokens.push(tok);
    }
    tokens
}

/// How a mention's tokens lined up with the dictionary entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchKind {
    Exact,
    /// At least one token pair matched through the suffix rule.
    Inflected,
}

/// An entity occurrence found in a text snippet. Offsets are character
/// indices into the original snippet.
#[derive(Debug, Clone, PartialEq)]
pub struct Mention {
    pub entity: EntityId,
    pub start: usize,
    pub end: usize,
    /// The matched slice of the original snippet, un-normalized.
    pub text: String,
    pub match_kind: MatchKind,
    /// [`SCORE_EXACT`] or [`SCORE_INFLECTED`].
    pub score: f64,
}

#[derive(Debug, Clone, Default)]
struct TrieNode {
    children: BTreeMap<String, usize>,
    entities: BTreeSet<EntityId>,
}

/// Label dictionary compiled from the knowledge graph into a token trie.
///
/// The dictionary remembers the graph label version it was built against;
/// annotating with a dictionary older than the graph is an error, because
/// silently missing fresh labels would corrupt downstream context decisions.
#[derive(Debug, Clone)]
pub struct Dictionary {
    nodes: Vec<TrieNode>,
    version: u64,
    entries: usize,
}

impl Dictionary {
    /// Compile all labels of all non-deleted things in the graph. Context
    /// things are skipped: their labels echo their nucleus and would shadow
    /// the entities users actually mention.
    pub fn build(graph: &KnowledgeGraph) -> Self {
        let entries = graph
            .things_iter()
            .filter(|t| !graph.is_tombstoned(&t.id) && t.kind != crate::kg::ThingKind::Context)
            .flat_map(|t| {
                std::iter::once(&t.primary_label)
                    .chain(t.alt_labels.iter())
                    .map(move |label| (t.id.clone(), label.clone()))
            });
        Self::from_entries(entries, graph.label_version())
    }

    /// Compile from explicit (entity, label) pairs, e.g. for benchmarks.
    pub fn from_entries<I>(entries: I, version: u64) -> Self
    where
        I: IntoIterator<Item = (EntityId, String)>,
    {
        let mut dict = Dictionary {
            nodes: vec![TrieNode::default()],
            version,
            entries: 0,
        };
        for (entity, label) in entries {
            let tokens = normalize(&label);
            if tokens.is_empty() {
                continue;
            }
            dict.insert(&tokens, entity);
        }
        dict
    }

    fn insert(&mut self, tokens: &[String], entity: EntityId) {
        let mut node = 0usize;
        for tok in tokens {
            node = match self.nodes[node].children.get(tok) {
                Some(&next) => next,
                None => {
                    self.nodes.push(TrieNode::default());
                    let next = self.nodes.len() - 1;
                    self.nodes[node].children.insert(tok.clone(), next);
                    next
                }
            };
        }
        if self.nodes[node].entities.insert(entity) {
            self.entries += 1;
        }
    }

    /// Add one thing's labels to an existing dictionary and advance the
    /// recorded graph version, so per-event upserts do not force a rebuild.
    /// Context things sync the version but contribute no labels, mirroring
    /// [`Dictionary::build`].
    pub fn extend_with(&mut self, thing: &crate::kg::Thing, graph_version: u64) {
        if thing.kind != crate::kg::ThingKind::Context {
            for label in std::iter::once(&thing.primary_label).chain(thing.alt_labels.iter()) {
                let tokens = normalize(label);
                if !tokens.is_empty() {
                    self.insert(&tokens, thing.id.clone());
                }
            }
        }
        if graph_version > self.version {
            self.version = graph_version;
        }
    }

    /// Number of (entity, label) entries compiled in.
    pub fn len(&self) -> usize {
        self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries == 0
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    /// Children of `node` whose key matches `token` exactly or within
    /// inflection tolerance: one side equals the other plus at most
    /// [`INFLECT_MAX`] trailing chars, and the shorter side (the stem) has at
    /// least [`STEM_MIN`] chars. Returns (child, matched-by-inflection).
    fn fuzzy_children(&self, node: usize, token: &str) -> Vec<(usize, bool)> {
        let children = &self.nodes[node].children;
        let mut out = Vec::new();
        if let Some(&child) = children.get(token) {
            out.push((child, false));
        }
        let token_chars = token.chars().count();
        // Text token carries an inflection: strip its tail to reach the key.
        let mut boundary = token.len();
        for k in 1..=INFLECT_MAX {
            if token_chars < STEM_MIN + k {
                break;
            }
            boundary -= token[..boundary]
                .chars()
                .next_back()
                .map(char::len_utf8)
                .unwrap_or(0);
            if let Some(&child) = children.get(&token[..boundary]) {
                out.push((child, true));
            }
        }
        // Dictionary key carries the inflection: scan keys extending `token`.
        if token_chars >= STEM_MIN {
            for (key, &child) in
                children.range::<str, _>((Bound::Excluded(token), Bound::Unbounded))
            {
                if !key.starts_with(token) {
                    break;
                }
                if key.chars().count() - token_chars <= INFLECT_MAX {
                    out.push((child, true));
                }
            }
        }
        out
    }

    /// Find all dictionary entities in `text`.
    ///
    /// Scanning is left-to-right, longest-match, non-overlapping: at each
    /// position only the deepest trie match emits mentions, and the scan
    /// resumes after it. When several labels of different entities share the
    /// winning span, one mention per entity is produced. An entity matched
    /// both exactly and via inflection at the same span keeps the exact
    /// score.
    pub fn annotate(&self, text: &str, graph: &KnowledgeGraph) -> Result<Vec<Mention>> {
        if self.version < graph.label_version() {
            return Err(Error::StaleDictionary {
                dict: self.version,
                graph: graph.label_version(),
            });
        }
        Ok(self.annotate_unchecked(text))
    }

    /// [`Dictionary::annotate`] without the staleness check, for callers that
    /// manage dictionary rebuilds themselves.
    pub fn annotate_unchecked(&self, text: &str) -> Vec<Mention> {
        let tokens = tokenize(text);
        let mut mentions: Vec<Mention> = Vec::new();
        let mut i = 0usize;
        while i < tokens.len() {
            // Frontier of trie states reachable from position i; the bool is
            // "any hop on the path used inflection". Keyed by node so the
            // best (exact) path to a node wins.
            let mut frontier: BTreeMap<usize, bool> = BTreeMap::new();
            frontier.insert(0, false);
            let mut best: Option<(usize, BTreeMap<EntityId, f64>)> = None;
            let mut depth = 0usize;
            while !frontier.is_empty() && i + depth < tokens.len() {
                let mut next: BTreeMap<usize, bool> = BTreeMap::new();
                for (&node, &inflected) in &frontier {
                    for (child, hop_inflected) in
                        self.fuzzy_children(node, &tokens[i + depth].text)
                    {
                        let flag = inflected || hop_inflected;
                        next.entry(child)
                            .and_modify(|v| *v = *v && flag)
                            .or_insert(flag);
                    }
                }
                depth += 1;
                let mut terminal: BTreeMap<EntityId, f64> = BTreeMap::new();
                for (&node, &inflected) in &next {
                    let score = if inflected { SCORE_INFLECTED } else { SCORE_EXACT };
                    for entity in &self.nodes[node].entities {
                        let slot = terminal.entry(entity.clone()).or_insert(score);
                        if score > *slot {
                            *slot = score;
                        }
                    }
                }
                if !terminal.is_empty() {
                    best = Some((depth, terminal));
                }
                frontier = next;
            }
            match best {
                Some((len, terminal)) => {
                    let first = &tokens[i];
                    let last = &tokens[i + len - 1];
                    for (entity, score) in terminal {
                        mentions.push(Mention {
                            entity,
                            start: first.char_start,
                            end: last.char_end,
                            text: text[first.byte_start..last.byte_end].to_string(),
                            match_kind: if score < SCORE_EXACT {
                                MatchKind::Inflected
                            } else {
                                MatchKind::Exact
                            },
                            score,
                        });
                    }
                    i += len;
                }
                None => i += 1,
            }
        }
        mentions.sort_by(|a, b| (a.start, &a.entity).cmp(&(b.start, &b.entity)));
        mentions
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{Thing, ThingKind};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn normalize_strips_case_marks_and_punctuation() {
        assert_eq!(normalize("Käufer-Liste"), vec!["kaufer", "liste"]);
        assert_eq!(normalize("  Machine   Learning! "), vec!["machine", "learning"]);
        assert_eq!(normalize("résumé 2024"), vec!["resume", "2024"]);
        assert!(normalize("--- !!! ---").is_empty());
        assert!(normalize("").is_empty());
    }

    fn graph_with(labels: &[(&str, &str)]) -> KnowledgeGraph {
        let mut g = KnowledgeGraph::new();
        for (id, label) in labels {
            g.add_thing(Thing::new(*id, ThingKind::Topic, *label)).unwrap();
        }
        g
    }

    fn spans(mentions: &[Mention]) -> Vec<(&str, usize, usize, f64)> {
        mentions
            .iter()
            .map(|m| (m.entity.as_str(), m.start, m.end, m.score))
            .collect()
    }

    #[test]
    fn exact_match_and_spans() {
        let g = graph_with(&[("t:ml", "machine learning"), ("t:go", "go")]);
        let d = Dictionary::build(&g);
        let m = d.annotate("Intro to Machine Learning, then Go.", &g).unwrap();
        assert_eq!(
            spans(&m),
            vec![("t:ml", 9, 25, 1.0), ("t:go", 32, 34, 1.0)]
        );
        assert_eq!(m[0].text, "Machine Learning");
    }

    #[test]
    fn longest_match_wins_and_scan_does_not_overlap() {
        let g = graph_with(&[("t:nn", "neural networks"), ("t:n", "neural")]);
        let d = Dictionary::build(&g);
        let m = d.annotate("neural networks and neural nets", &g).unwrap();
        // "neural networks" shadows the shorter "neural" at position 0; the
        // second "neural" stands alone and matches the one-token entry.
        assert_eq!(
            spans(&m),
            vec![("t:nn", 0, 15, 1.0), ("t:n", 20, 26, 1.0)]
        );
    }

    #[test]
    fn inflected_text_token_matches_dictionary_stem() {
        let g = graph_with(&[("t:contract", "Vertrag")]);
        let d = Dictionary::build(&g);
        let m = d.annotate("zwei Verträge unterschrieben", &g).unwrap();
        assert_eq!(spans(&m), vec![("t:contract", 5, 13, 0.8)]);
        assert_eq!(m[0].text, "Verträge");
    }

    #[test]
    fn inflected_dictionary_token_matches_text_stem() {
        let g = graph_with(&[("t:k", "Käufer")]);
        let d = Dictionary::build(&g);
        let m = d.annotate("der Kauf gestern", &g).unwrap();
        assert_eq!(spans(&m), vec![("t:k", 4, 8, 0.8)]);
    }

    #[test]
    fn short_tokens_get_no_inflection_tolerance() {
        let g = graph_with(&[("t:ml", "ml")]);
        let d = Dictionary::build(&g);
        // "mls" would need a 2-char stem, below the minimum of 4.
        assert!(d.annotate("mls everywhere", &g).unwrap().is_empty());
        assert_eq!(spans(&d.annotate("ml here", &g).unwrap()), vec![("t:ml", 0, 2, 1.0)]);
    }

    #[test]
    fn diacritics_are_transparent_both_ways() {
        let g = graph_with(&[("t:k", "Käufer")]);
        let d = Dictionary::build(&g);
        assert_eq!(spans(&d.annotate("KAUFER", &g).unwrap()), vec![("t:k", 0, 6, 1.0)]);
    }

    #[test]
    fn shared_span_emits_one_mention_per_entity() {
        let mut g = KnowledgeGraph::new();
        g.add_thing(Thing::new("p:a", ThingKind::Person, "Anna Smith").with_alt_label("Smith"))
            .unwrap();
        g.add_thing(Thing::new("p:b", ThingKind::Person, "Bob Smith").with_alt_label("Smith"))
            .unwrap();
        let d = Dictionary::build(&g);
        let m = d.annotate("mail from Smith", &g).unwrap();
        assert_eq!(
            spans(&m),
            vec![("p:a", 10, 15, 1.0), ("p:b", 10, 15, 1.0)]
        );
    }

    #[test]
    fn exact_beats_inflected_for_same_entity() {
        let mut g = KnowledgeGraph::new();
        g.add_thing(
            Thing::new("t:x", ThingKind::Topic, "planning").with_alt_label("plan"),
        )
        .unwrap();
        let d = Dictionary::build(&g);
        // "planning" matches the primary label exactly and the alt label via
        // inflection; the exact score must win.
        let m = d.annotate("planning session", &g).unwrap();
        assert_eq!(spans(&m), vec![("t:x", 0, 8, 1.0)]);
    }

    #[test]
    fn stale_dictionary_rejected() {
        let mut g = graph_with(&[("t:a", "alpha")]);
        let d = Dictionary::build(&g);
        g.add_thing(Thing::new("t:b", ThingKind::Topic, "beta")).unwrap();
        match d.annotate("alpha beta", &g) {
            Err(Error::StaleDictionary { dict, graph }) => {
                assert!(dict < graph);
            }
            other => panic!("expected StaleDictionary, got {other:?}"),
        }
    }

    #[test]
    fn tombstoned_things_are_not_compiled() {
        let mut g = graph_with(&[("t:a", "alpha"), ("t:b", "beta")]);
        g.tombstone(&"t:b".into()).unwrap();
        let d = Dictionary::build(&g);
        let m = d.annotate("alpha beta", &g).unwrap();
        assert_eq!(spans(&m), vec![("t:a", 0, 5, 1.0)]);
    }

    // ------------------------------------------------------------------
    // Randomized equivalence against a brute-force reference matcher.
    // ------------------------------------------------------------------

    /// Do two normalized tokens match, and if so, did it take inflection?
    fn tok_match(a: &str, b: &str) -> Option<bool> {
        if a == b {
            return Some(false);
        }
        let (short, long) = if a.chars().count() <= b.chars().count() { (a, b) } else { (b, a) };
        let sc = short.chars().count();
        if sc >= STEM_MIN && long.chars().count() - sc <= INFLECT_MAX && long.starts_with(short) {
            Some(true)
        } else {
            None
        }
    }

    /// Reference matcher: try every entry at every position, emit the longest
    /// matches left to right without overlap. Texts are ASCII words joined by
    /// single spaces so char offsets are simple prefix sums.
    fn reference_annotate(
        entries: &[(EntityId, Vec<String>)],
        words: &[String],
    ) -> Vec<(EntityId, usize, usize, f64)> {
        let mut starts = Vec::with_capacity(words.len());
        let mut pos = 0usize;
        for w in words {
            starts.push(pos);
            pos += w.chars().count() + 1;
        }
        let mut out = Vec::new();
        let mut i = 0usize;
        while i < words.len() {
            let mut best_len = 0usize;
            let mut winners: BTreeMap<EntityId, f64> = BTreeMap::new();
            for (entity, toks) in entries {
                if toks.is_empty() || i + toks.len() > words.len() {
                    continue;
                }
                let mut inflected = false;
                let mut ok = true;
                for (k, t) in toks.iter().enumerate() {
                    match tok_match(t, &words[i + k]) {
                        Some(f) => inflected |= f,
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                let score = if inflected { SCORE_INFLECTED } else { SCORE_EXACT };
                if toks.len() > best_len {
                    best_len = toks.len();
                    winners.clear();
                }
                if toks.len() == best_len {
                    let slot = winners.entry(entity.clone()).or_insert(score);
                    if score > *slot {
                        *slot = score;
                    }
                }
            }
            if best_len == 0 {
                i += 1;
            } else {
                let start = starts[i];
                let end = starts[i + best_len - 1] + words[i + best_len - 1].chars().count();
                for (entity, score) in winners {
                    out.push((entity, start, end, score));
                }
                i += best_len;
            }
        }
        out
    }

    #[test]
    fn matches_brute_force_reference_on_random_inputs() {
        let syllables = ["ka", "lor", "mi", "tenz", "su", "er", "ing", "ta"];
        for seed in 0..32u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let word = |rng: &mut ChaCha8Rng| -> String {
                (0..rng.gen_range(1..=3))
                    .map(|_| syllables[rng.gen_range(0..syllables.len())])
                    .collect()
            };
            // Two heavyweight rounds exercise dictionary/snippet sizes at the
            // upper end of the contract (1,000 entries, 500 tokens).
            let (n_entries, n_words) = if seed >= 30 { (1000, 500) } else { (rng.gen_range(3..12), 40) };
            let mut entries: Vec<(EntityId, Vec<String>)> = Vec::new();
            for e in 0..n_entries {
                let toks: Vec<String> = (0..rng.gen_range(1..=3)).map(|_| word(&mut rng)).collect();
                entries.push((EntityId::new(format!("e{e}")), toks));
            }
            // Text: mostly dictionary words, some inflected, some noise.
            let mut words: Vec<String> = Vec::new();
            for _ in 0..n_words {
                let roll: f64 = rng.gen();
                if roll < 0.6 && !entries.is_empty() {
                    let (_, toks) = &entries[rng.gen_range(0..entries.len())];
                    let mut w = toks[rng.gen_range(0..toks.len())].clone();
                    if rng.gen_bool(0.3) {
                        for _ in 0..rng.gen_range(1..=4) {
                            w.push('s');
                        }
                    }
                    words.push(w);
                } else {
                    words.push(word(&mut rng));
                }
            }
            let text = words.join(" ");
            let dict = Dictionary::from_entries(
                entries.iter().map(|(e, t)| (e.clone(), t.join(" "))),
                0,
            );
            let got: Vec<_> = dict
                .annotate_unchecked(&text)
                .into_iter()
                .map(|m| (m.entity, m.start, m.end, m.score))
                .collect();
            let mut want = reference_annotate(&entries, &words);
            want.sort_by(|a, b| (a.1, &a.0).cmp(&(b.1, &b.0)));
            assert_eq!(got, want, "seed {seed} text {text:?}");
        }
    }
}
