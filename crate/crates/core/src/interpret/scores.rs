//! Priors and link statistics for row-entity disambiguation.
//!
//! All scores live in [0,1] except Salience, which can exceed 1 when one
//! candidate serves several rows. The batch functions here compute the
//! same quantities as the per-item ones; tests pin them against each
//! other and against hand-evaluated fixture values.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::index::CandidateSet;
use crate::kg::{EntityId, KnowledgeGraph, Object, RelationId};
use crate::table::{cell_values, Table};
use crate::text::tokenize;

/// Highest Jaccard overlap between any cell value of (c,ρ) and any label
/// reachable from e over r. Zero when either side is empty.
pub fn match_score(
    kg: &KnowledgeGraph,
    table: &Table,
    c: usize,
    row: usize,
    e: EntityId,
    r: RelationId,
) -> f64 {
    let values = match cell_values(table, c, row) {
        Ok(v) => v,
        Err(_) => return 0.0,
    };
    let labels = kg.link_labels(e, r);
    let mut best = 0.0f64;
    for v in &values {
        let v_tokens: BTreeSet<String> = tokenize(v).into_iter().collect();
        for l in &labels {
            let l_tokens: BTreeSet<String> = tokenize(l).into_iter().collect();
            best = best.max(set_jaccard(&v_tokens, &l_tokens));
        }
    }
    best
}

fn set_jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Mean match score of (c,ρ,r) over ρ's candidates; 0 for empty rows.
pub fn cell_score(
    kg: &KnowledgeGraph,
    table: &Table,
    cands: &[CandidateSet],
    c: usize,
    row: usize,
    r: RelationId,
) -> f64 {
    let set = &cands[row];
    if set.candidates.is_empty() {
        return 0.0;
    }
    let sum: f64 = set
        .candidates
        .keys()
        .map(|e| match_score(kg, table, c, row, *e, r))
        .sum();
    sum / set.candidates.len() as f64
}

/// Share of column c's total cell-score mass that relation r holds.
pub fn col_score(
    kg: &KnowledgeGraph,
    table: &Table,
    cands: &[CandidateSet],
    universe: &BTreeSet<RelationId>,
    c: usize,
    r: RelationId,
) -> f64 {
    let numer: f64 = (0..table.n_rows())
        .map(|row| cell_score(kg, table, cands, c, row, r))
        .sum();
    let denom: f64 = universe
        .iter()
        .map(|r_prime| {
            (0..table.n_rows())
                .map(|row| cell_score(kg, table, cands, c, row, *r_prime))
                .sum::<f64>()
        })
        .sum();
    if denom == 0.0 {
        0.0
    } else {
        numer / denom
    }
}

/// Relations appearing in at least one candidate's links. Eq. 5's sum
/// over all of R reduces to this set; other relations contribute zero.
pub fn relation_universe(kg: &KnowledgeGraph, cands: &[CandidateSet]) -> BTreeSet<RelationId> {
    let mut universe = BTreeSet::new();
    for set in cands {
        for e in set.candidates.keys() {
            for (r, _) in kg.links(*e) {
                universe.insert(*r);
            }
        }
    }
    universe
}

/// Batch priors for one table.
#[derive(Debug, Clone, PartialEq)]
pub struct Priors {
    /// Relations with any candidate link, the ColScore universe.
    pub relations: BTreeSet<RelationId>,
    /// (attribute column, relation) → ColScore.
    pub col_scores: BTreeMap<(usize, RelationId), f64>,
    /// Per row: candidate → RowScore. Parallel to the candidate slice.
    pub row_scores: Vec<BTreeMap<EntityId, f64>>,
}

/// Compute ColScore for every attribute column and RowScore for every
/// candidate, sharing one match-score cache.
pub fn compute_priors(kg: &KnowledgeGraph, table: &Table, cands: &[CandidateSet]) -> Priors {
    let universe = relation_universe(kg, cands);
    let attr_cols = table.attribute_columns();
    let mut matcher = Matcher::new(kg, table);

    // cell scores per (column, relation): sum over rows of per-row means
    let mut col_scores = BTreeMap::new();
    for &c in &attr_cols {
        let mut per_relation: BTreeMap<RelationId, f64> = BTreeMap::new();
        for &r in &universe {
            let mut total = 0.0;
            for (row, set) in cands.iter().enumerate() {
                if set.candidates.is_empty() {
                    continue;
                }
                let sum: f64 = set
                    .candidates
                    .keys()
                    .map(|e| matcher.score(c, row, *e, r))
                    .sum();
                total += sum / set.candidates.len() as f64;
            }
            per_relation.insert(r, total);
        }
        let denom: f64 = per_relation.values().sum();
        for (r, numer) in per_relation {
            let score = if denom == 0.0 { 0.0 } else { numer / denom };
            col_scores.insert((c, r), score);
        }
    }

    // row scores: average over attribute columns of the best
    // col_score · match_score product
    let mut row_scores = Vec::with_capacity(cands.len());
    for (row, set) in cands.iter().enumerate() {
        let mut scores = BTreeMap::new();
        for (e, retrieval) in &set.candidates {
            let score = if attr_cols.is_empty() {
                // degenerate table: no attribute evidence, fall back to
                // the normalized retrieval score so LBP still has a prior
                let total: f64 = set.candidates.values().sum();
                if total > 0.0 {
                    retrieval / total
                } else {
                    1.0 / set.candidates.len() as f64
                }
            } else {
                let mut sum = 0.0;
                for &c in &attr_cols {
                    let mut best = 0.0f64;
                    for &r in &universe {
                        let cs = col_scores[&(c, r)];
                        if cs == 0.0 {
                            continue;
                        }
                        best = best.max(cs * matcher.score(c, row, *e, r));
                    }
                    sum += best;
                }
                sum / attr_cols.len() as f64
            };
            scores.insert(*e, score);
        }
        row_scores.push(scores);
    }

    Priors {
        relations: universe,
        col_scores,
        row_scores,
    }
}

/// RowScore of one (row, entity): a single-pair view of `compute_priors`.
pub fn row_score(
    kg: &KnowledgeGraph,
    table: &Table,
    cands: &[CandidateSet],
    row: usize,
    e: EntityId,
) -> f64 {
    compute_priors(kg, table, cands).row_scores[row]
        .get(&e)
        .copied()
        .unwrap_or(0.0)
}

/// Tokenized-match cache: cell values and link labels tokenize once.
struct Matcher<'a> {
    kg: &'a KnowledgeGraph,
    table: &'a Table,
    cell_tokens: HashMap<(usize, usize), Vec<BTreeSet<String>>>,
    link_tokens: HashMap<(EntityId, RelationId), Vec<BTreeSet<String>>>,
}

impl<'a> Matcher<'a> {
    fn new(kg: &'a KnowledgeGraph, table: &'a Table) -> Self {
        Matcher {
            kg,
            table,
            cell_tokens: HashMap::new(),
            link_tokens: HashMap::new(),
        }
    }

    fn score(&mut self, c: usize, row: usize, e: EntityId, r: RelationId) -> f64 {
        let (kg, table) = (self.kg, self.table);
        let cells = self.cell_tokens.entry((c, row)).or_insert_with(|| {
            cell_values(table, c, row)
                .unwrap_or_default()
                .iter()
                .map(|v| tokenize(v).into_iter().collect())
                .collect()
        });
        let labels = self.link_tokens.entry((e, r)).or_insert_with(|| {
            kg.link_labels(e, r)
                .iter()
                .map(|l| tokenize(l).into_iter().collect())
                .collect()
        });
        let mut best = 0.0f64;
        for v in cells.iter() {
            for l in labels.iter() {
                best = best.max(set_jaccard(v, l));
            }
        }
        best
    }
}

/// Popularity and informativeness of one attribute link for this table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkStats {
    /// Σ over rows of the best RowScore among candidates holding the link.
    pub link_total: f64,
    /// link_total / number of rows whose candidates include the link.
    pub cover: f64,
    /// link_total / number of KG entities holding the link.
    pub salience: f64,
    /// cover · salience.
    pub link_score: f64,
}

impl LinkStats {
    const ZERO: LinkStats = LinkStats {
        link_total: 0.0,
        cover: 0.0,
        salience: 0.0,
        link_score: 0.0,
    };
}

/// Statistics for every link held by at least one candidate.
pub fn compute_link_scores(
    kg: &KnowledgeGraph,
    cands: &[CandidateSet],
    row_scores: &[BTreeMap<EntityId, f64>],
) -> BTreeMap<(RelationId, Object), LinkStats> {
    // per link: best row score per row, and the set of rows seeing it
    let mut best_per_row: HashMap<(RelationId, Object), BTreeMap<usize, f64>> = HashMap::new();
    for (row, set) in cands.iter().enumerate() {
        for e in set.candidates.keys() {
            let rs = row_scores[row].get(e).copied().unwrap_or(0.0);
            for link in kg.links(*e) {
                let slot = best_per_row.entry(*link).or_default().entry(row).or_insert(0.0);
                if rs > *slot {
                    *slot = rs;
                }
            }
        }
    }
    let mut out = BTreeMap::new();
    for (link, rows) in best_per_row {
        let link_total: f64 = rows.values().sum();
        let row_count = rows.len();
        let holders = kg.holders_of(link.0, link.1);
        let cover = if row_count == 0 {
            0.0
        } else {
            link_total / row_count as f64
        };
        let salience = if holders == 0 {
            0.0
        } else {
            link_total / holders as f64
        };
        out.insert(
            link,
            LinkStats {
                link_total,
                cover,
                salience,
                link_score: cover * salience,
            },
        );
    }
    out
}

/// Statistics for one link; zero when no candidate holds it.
pub fn link_statistics(
    kg: &KnowledgeGraph,
    cands: &[CandidateSet],
    row_scores: &[BTreeMap<EntityId, f64>],
    r: RelationId,
    v: Object,
) -> LinkStats {
    compute_link_scores(kg, cands, row_scores)
        .get(&(r, v))
        .copied()
        .unwrap_or(LinkStats::ZERO)
}

/// Σ of link scores over the links two entities share. The diagonal is
/// the sum over all of the entity's own links; it is not forced to 1.
pub fn entity_similarity(
    kg: &KnowledgeGraph,
    link_scores: &BTreeMap<(RelationId, Object), LinkStats>,
    e1: EntityId,
    e2: EntityId,
) -> f64 {
    kg.links(e1)
        .intersection(kg.links(e2))
        .map(|link| link_scores.get(link).map(|s| s.link_score).unwrap_or(0.0))
        .sum()
}

/// Candidate entity union in ascending id order with the dense symmetric
/// similarity matrix over it.
pub struct SimilarityMatrix {
    pub entities: Vec<EntityId>,
    pub matrix: super::lbp::SquareMatrix,
}

pub fn compute_similarity(
    kg: &KnowledgeGraph,
    cands: &[CandidateSet],
    link_scores: &BTreeMap<(RelationId, Object), LinkStats>,
) -> SimilarityMatrix {
    let entities: Vec<EntityId> = cands
        .iter()
        .flat_map(|set| set.candidates.keys().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = entities.len();
    let mut matrix = super::lbp::SquareMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let sim = entity_similarity(kg, link_scores, entities[i], entities[j]);
            matrix.set(i, j, sim);
            matrix.set(j, i, sim);
        }
    }
    SimilarityMatrix { entities, matrix }
}
