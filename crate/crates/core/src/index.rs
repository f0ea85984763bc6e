//! Inverted label index: ranked retrieval over every KG label and the
//! candidate-set function for key-column cells.
//!
//! Scoring is length-normalised smoothed TF-IDF, fixed bit-exactly so
//! snapshots and regression values are portable:
//!
//!   score(q, l) = Σ_{t ∈ tokens(q) ∩ tokens(l)} (1 + ln tf(t,l)) · ln((N+1)/(df(t)+1))
//!                 / sqrt(|tokens(l)|)
//!
//! Shared tokens count once per query (set semantics); tf is the token's
//! multiplicity in the label; N is the number of distinct label strings.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, LabelSource};
use crate::text::tokenize;

/// One distinct label string with the entities that carry it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelEntry {
    pub text: String,
    /// Token count with multiplicity; the length-normalization denominator.
    pub token_count: u32,
    pub entities: BTreeSet<EntityId>,
    /// Lexicographically smallest IRI among `entities`, for tie-breaking.
    pub min_iri: String,
}

/// Inverted index over distinct label strings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelIndex {
    sources: Vec<LabelSource>,
    labels: Vec<LabelEntry>,
    /// token → (label id, term frequency), label ids ascending.
    postings: HashMap<String, Vec<(u32, u32)>>,
    /// token → number of distinct labels containing it.
    df: HashMap<String, u32>,
}

/// Retrieval knobs for candidate generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOpts {
    /// Labels retrieved per query before the top-1/top-3 rule.
    pub label_cap: usize,
    /// Keep only the best label when its score is at least this multiple
    /// of the runner-up's.
    pub theta_gap: f64,
}

impl Default for QueryOpts {
    fn default() -> Self {
        QueryOpts {
            label_cap: 50,
            theta_gap: 2.0,
        }
    }
}

/// A retrieval result: one label with its score.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedLabel {
    pub label_id: u32,
    pub text: String,
    pub entities: BTreeSet<EntityId>,
    pub score: f64,
}

/// Candidate entities for one table row, scored by best matching label.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CandidateSet {
    pub row: usize,
    pub candidates: BTreeMap<EntityId, f64>,
}

impl CandidateSet {
    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Index every label of every entity whose source tag is in `sources`.
pub fn build_index(kg: &KnowledgeGraph, sources: &[LabelSource]) -> LabelIndex {
    let mut by_text: BTreeMap<String, BTreeSet<EntityId>> = BTreeMap::new();
    for e in kg.entities() {
        for text in kg.entity_labels(e, sources) {
            by_text.entry(text.to_string()).or_default().insert(e);
        }
    }
    let mut index = LabelIndex {
        sources: sources.to_vec(),
        ..LabelIndex::default()
    };
    for (text, entities) in by_text {
        index.push_label(kg, text, entities);
    }
    index
}

impl LabelIndex {
    fn push_label(&mut self, kg: &KnowledgeGraph, text: String, entities: BTreeSet<EntityId>) {
        let id = self.labels.len() as u32;
        let tokens = tokenize(&text);
        let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
        for t in &tokens {
            *tf.entry(t.as_str()).or_default() += 1;
        }
        for (t, count) in tf {
            self.postings.entry(t.to_string()).or_default().push((id, count));
            *self.df.entry(t.to_string()).or_default() += 1;
        }
        let min_iri = entities
            .iter()
            .map(|e| kg.entity_name(*e))
            .min()
            .unwrap_or_default()
            .to_string();
        self.labels.push(LabelEntry {
            text,
            token_count: tokens.len() as u32,
            entities,
            min_iri,
        });
    }

    /// Number of indexed labels (distinct strings), the N of the formula.
    pub fn label_count(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, id: u32) -> &LabelEntry {
        &self.labels[id as usize]
    }

    /// Source tags the index was built from; the evaluator reports these.
    pub fn sources(&self) -> &[LabelSource] {
        &self.sources
    }

    /// Top-k labels by descending score; ties by ascending label string,
    /// then ascending smallest entity IRI. Zero-token queries match nothing.
    pub fn query_labels(&self, text: &str, k: usize) -> Vec<RankedLabel> {
        let query: BTreeSet<String> = tokenize(text).into_iter().collect();
        let n = self.labels.len() as f64;
        let mut scores: HashMap<u32, f64> = HashMap::new();
        for t in &query {
            let Some(postings) = self.postings.get(t.as_str()) else {
                continue;
            };
            let idf = ((n + 1.0) / (self.df[t.as_str()] as f64 + 1.0)).ln();
            for (label_id, tf) in postings {
                *scores.entry(*label_id).or_default() += (1.0 + (*tf as f64).ln()) * idf;
            }
        }
        let mut ranked: Vec<(u32, f64)> = scores
            .into_iter()
            .map(|(id, s)| (id, s / (self.labels[id as usize].token_count as f64).sqrt()))
            .collect();
        ranked.sort_by(|(a, sa), (b, sb)| {
            sb.total_cmp(sa)
                .then_with(|| self.labels[*a as usize].text.cmp(&self.labels[*b as usize].text))
                .then_with(|| self.labels[*a as usize].min_iri.cmp(&self.labels[*b as usize].min_iri))
        });
        ranked.truncate(k);
        ranked
            .into_iter()
            .map(|(id, score)| {
                let entry = &self.labels[id as usize];
                RankedLabel {
                    label_id: id,
                    text: entry.text.clone(),
                    entities: entry.entities.clone(),
                    score,
                }
            })
            .collect()
    }

    /// Cand(ρ): entities behind the kept labels. The best label is kept
    /// alone when it clears `theta_gap` times the runner-up; otherwise the
    /// top three labels are kept. Each entity scores its best kept label.
    pub fn generate_candidates(&self, cell_text: &str, opts: &QueryOpts) -> BTreeMap<EntityId, f64> {
        let ranked = self.query_labels(cell_text, opts.label_cap);
        let kept = match ranked.as_slice() {
            [] => &ranked[..0],
            [_] => &ranked[..1],
            [first, second, ..] if first.score >= opts.theta_gap * second.score => &ranked[..1],
            _ => &ranked[..ranked.len().min(3)],
        };
        let mut out: BTreeMap<EntityId, f64> = BTreeMap::new();
        for label in kept {
            for e in &label.entities {
                let slot = out.entry(*e).or_insert(label.score);
                if label.score > *slot {
                    *slot = label.score;
                }
            }
        }
        out
    }

    pub fn candidates_for_row(&self, row: usize, cell_text: &str, opts: &QueryOpts) -> CandidateSet {
        CandidateSet {
            row,
            candidates: self.generate_candidates(cell_text, opts),
        }
    }

    /// Write a versioned snapshot. Only strings and integers are stored:
    /// postings and frequencies are rebuilt on load, so the round trip is
    /// exact by construction.
    pub fn save_snapshot(&self, w: impl std::io::Write) -> Result<()> {
        let snap = Snapshot {
            version: SNAPSHOT_VERSION,
            sources: self.sources.clone(),
            labels: self
                .labels
                .iter()
                .map(|entry| SnapshotLabel {
                    text: entry.text.clone(),
                    entities: entry.entities.iter().map(|e| e.0).collect(),
                    min_iri: entry.min_iri.clone(),
                })
                .collect(),
        };
        serde_json::to_writer(w, &snap)?;
        Ok(())
    }

    /// Load a snapshot produced by [`save_snapshot`]. Entity ids are stored
    /// raw, so the snapshot is only valid with the KG it was built from;
    /// `entity_count` guards against obvious mismatches.
    pub fn load_snapshot(r: impl std::io::Read, entity_count: usize) -> Result<LabelIndex> {
        let snap: Snapshot = serde_json::from_reader(r)?;
        if snap.version != SNAPSHOT_VERSION {
            return Err(Error::Config(format!(
                "index snapshot version {} unsupported (expected {SNAPSHOT_VERSION})",
                snap.version
            )));
        }
        let mut index = LabelIndex {
            sources: snap.sources,
            ..LabelIndex::default()
        };
        for label in snap.labels {
            let id = index.labels.len() as u32;
            let tokens = tokenize(&label.text);
            let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
            for t in &tokens {
                *tf.entry(t.as_str()).or_default() += 1;
            }
            for (t, count) in tf {
                index.postings.entry(t.to_string()).or_default().push((id, count));
                *index.df.entry(t.to_string()).or_default() += 1;
            }
            let mut entities = BTreeSet::new();
            for raw in label.entities {
                if raw as usize >= entity_count {
                    return Err(Error::Contract(format!(
                        "index snapshot refers to entity id {raw} outside the KG ({entity_count} entities)"
                    )));
                }
                entities.insert(EntityId(raw));
            }
            index.labels.push(LabelEntry {
                text: label.text,
                token_count: tokens.len() as u32,
                entities,
                min_iri: label.min_iri,
            });
        }
        Ok(index)
    }
}

const SNAPSHOT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Snapshot {
    version: u32,
    sources: Vec<LabelSource>,
    labels: Vec<SnapshotLabel>,
}

#[derive(Serialize, Deserialize)]
struct SnapshotLabel {
    text: String,
    entities: Vec<u32>,
    min_iri: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn minimovies_index() -> (KnowledgeGraph, LabelIndex) {
        let kg = fixtures::minimovies();
        let index = build_index(&kg, &[LabelSource::Primary]);
        (kg, index)
    }

    #[test]
    fn counts_distinct_label_strings() {
        let (kg, index) = minimovies_index();
        assert_eq!(index.label_count(), 9);
        assert!(build_index(&kg, &[]).label_count() == 0);
        let empty = KnowledgeGraph::default();
        assert_eq!(build_index(&empty, &[LabelSource::Primary]).label_count(), 0);
    }

    #[test]
    fn df_counts_labels_not_occurrences() {
        let (_, index) = minimovies_index();
        // "film" occurs in "M*A*S*H (film)", "The Producers (1968 film)", "Film"
        assert_eq!(index.df["film"], 3);
        assert_eq!(index.df["producers"], 2);
        assert_eq!(index.df["mash"], 1);
    }

    #[test]
    fn query_scores_match_hand_computation() {
        let (_, index) = minimovies_index();
        // idf = ln((9+1)/(df+1)); single shared token "mash", df 1
        let ranked = index.query_labels("MASH", 10);
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].text, "MASH");
        let expect = (10.0f64 / 2.0).ln();
        assert!((ranked[0].score - expect).abs() < 1e-12);

        // two tokens, df 2 each, label lengths 2 and 4
        let ranked = index.query_labels("The Producers", 10);
        assert_eq!(ranked.len(), 2);
        assert_eq!(ranked[0].text, "The Producers");
        assert_eq!(ranked[1].text, "The Producers (1968 film)");
        let idf = (10.0f64 / 3.0).ln();
        assert!((ranked[0].score - 2.0 * idf / 2.0f64.sqrt()).abs() < 1e-12);
        assert!((ranked[1].score - 2.0 * idf / 2.0).abs() < 1e-12);
    }

    #[test]
    fn exact_label_query_ranks_it_first() {
        let (kg, index) = minimovies_index();
        for e in kg.entities() {
            for label in kg.entity_labels(e, &[LabelSource::Primary]) {
                let ranked = index.query_labels(label, 10);
                assert_eq!(ranked[0].text, label, "query {label:?}");
            }
        }
    }

    #[test]
    fn zero_token_or_unknown_queries_return_nothing() {
        let (_, index) = minimovies_index();
        assert!(index.query_labels("", 5).is_empty());
        assert!(index.query_labels("***", 5).is_empty());
        assert!(index.query_labels("zzz", 5).is_empty());
    }

    #[test]
    fn candidates_mel_brooks_single_entity() {
        let (kg, index) = minimovies_index();
        let cands = index.generate_candidates("Mel Brooks", &QueryOpts::default());
        let e4 = kg.entity_id(fixtures::E4).unwrap();
        assert_eq!(cands.keys().copied().collect::<Vec<_>>(), vec![e4]);
    }

    #[test]
    fn candidates_mash_ambiguous_under_top3_rule() {
        let (kg, index) = minimovies_index();
        // "M*A*S*H" scores 2.40794 against label "M*A*S*H" and 2.15375
        // against "M*A*S*H (film)"; gap 1.118 < 2.0 keeps both labels.
        let cands = index.generate_candidates("M*A*S*H", &QueryOpts::default());
        let e1 = kg.entity_id(fixtures::E1).unwrap();
        let e2 = kg.entity_id(fixtures::E2).unwrap();
        assert_eq!(cands.keys().copied().collect::<Vec<_>>(), vec![e1, e2]);
        let idf = (10.0f64 / 3.0).ln();
        assert!((cands[&e2] - 4.0 * idf / 2.0).abs() < 1e-12);
        assert!((cands[&e1] - 4.0 * idf / 5.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn gap_rule_keeps_single_clear_winner() {
        let (kg, index) = minimovies_index();
        // "mash" only hits one label; a widened theta_gap of 1.0 keeps the
        // top label alone whenever it merely ties the runner-up.
        let opts = QueryOpts {
            theta_gap: 1.0,
            ..QueryOpts::default()
        };
        let cands = index.generate_candidates("M*A*S*H", &opts);
        let e2 = kg.entity_id(fixtures::E2).unwrap();
        assert_eq!(cands.keys().copied().collect::<Vec<_>>(), vec![e2]);
        assert!(index.generate_candidates("", &QueryOpts::default()).is_empty());
    }

    #[test]
    fn every_candidate_shares_a_token_with_the_query() {
        let (kg, index) = minimovies_index();
        for query in ["Film", "The Producers", "Robert Altman", "1970 Film"] {
            let qtokens: std::collections::BTreeSet<String> =
                crate::text::tokenize(query).into_iter().collect();
            for e in index.generate_candidates(query, &QueryOpts::default()).keys() {
                let shares = kg.entity_labels(*e, &[LabelSource::Primary]).iter().any(|l| {
                    crate::text::tokenize(l).iter().any(|t| qtokens.contains(t))
                });
                assert!(shares, "{query:?} produced unrelated candidate");
            }
        }
    }

    #[test]
    fn snapshot_round_trips_exactly() {
        let (kg, index) = minimovies_index();
        let mut buf = Vec::new();
        index.save_snapshot(&mut buf).unwrap();
        let loaded = LabelIndex::load_snapshot(buf.as_slice(), kg.entity_count()).unwrap();
        assert_eq!(index, loaded);

        let err = LabelIndex::load_snapshot(buf.as_slice(), 2).unwrap_err();
        assert!(matches!(err, Error::Contract(_)), "{err}");
    }
}
