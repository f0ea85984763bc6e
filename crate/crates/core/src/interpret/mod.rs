//! Table interpretation: candidates, priors, similarity, one LBP pass,
//! and the final row and column assignments.

pub mod lbp;
pub mod scores;

pub use lbp::{lbp_pass, lbp_pass_naive, LbpOptions, SparseMatrix, SquareMatrix};
pub use scores::{
    cell_score, col_score, compute_link_scores, compute_priors, compute_similarity,
    entity_similarity, link_statistics, match_score, relation_universe, row_score, LinkStats,
    Priors, SimilarityMatrix,
};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{CandidateSet, LabelIndex, QueryOpts};
use crate::kg::{EntityId, KnowledgeGraph, RelationId};
use crate::table::{detect_key_column, Table};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InterpretConfig {
    pub query: QueryOpts,
    pub lbp: LbpConfig,
}

/// Serializable subset of [`LbpOptions`]; the log-space threshold is an
/// internal numeric guard, not a tuning knob.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LbpConfig {
    pub normalize: bool,
    pub iterations: usize,
}

impl Default for LbpConfig {
    fn default() -> Self {
        let opts = LbpOptions::default();
        LbpConfig {
            normalize: opts.normalize,
            iterations: opts.iterations,
        }
    }
}

impl LbpConfig {
    fn options(&self) -> LbpOptions {
        LbpOptions {
            normalize: self.normalize,
            iterations: self.iterations,
            ..LbpOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowAssignment {
    pub row: usize,
    pub entity: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnAssignment {
    pub column: usize,
    pub relation: String,
    pub score: f64,
}

/// The interpreted table: entity per matched row, relation per resolvable
/// attribute column, and the rows that found no candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interpretation {
    pub table_id: String,
    pub key_column: usize,
    pub rows: Vec<RowAssignment>,
    pub columns: Vec<ColumnAssignment>,
    pub unmatched: Vec<usize>,
}

impl Interpretation {
    pub fn row_entity(&self, row: usize) -> Option<&str> {
        self.rows
            .iter()
            .find(|a| a.row == row)
            .map(|a| a.entity.as_str())
    }

    pub fn column_relation(&self, column: usize) -> Option<&str> {
        self.columns
            .iter()
            .find(|a| a.column == column)
            .map(|a| a.relation.as_str())
    }
}

/// Interpret one table against the KG: returns the assignments, or
/// `Error::TableRejected` when no key column qualifies.
pub fn interpret_table(
    table: &Table,
    kg: &KnowledgeGraph,
    index: &LabelIndex,
    config: &InterpretConfig,
) -> Result<Interpretation> {
    let key_column = match table.key_column.or_else(|| detect_key_column(table)) {
        Some(c) if c < table.n_cols() => c,
        Some(c) => {
            return Err(Error::Contract(format!(
                "key column {c} out of range for table {}",
                table.id
            )));
        }
        None => {
            return Err(Error::TableRejected(format!(
                "table {}: no column qualifies as key column",
                table.id
            )));
        }
    };
    let mut keyed = table.clone();
    keyed.key_column = Some(key_column);
    let table = &keyed;

    let cands: Vec<CandidateSet> = (0..table.n_rows())
        .map(|row| index.candidates_for_row(row, &table.rows[row][key_column], &config.query))
        .collect();
    let unmatched: Vec<usize> = cands
        .iter()
        .enumerate()
        .filter(|(_, set)| set.is_empty())
        .map(|(row, _)| row)
        .collect();
    let matched: Vec<usize> = (0..table.n_rows())
        .filter(|row| !cands[*row].is_empty())
        .collect();

    let priors = compute_priors(kg, table, &cands);
    let link_scores = compute_link_scores(kg, &cands, &priors.row_scores);
    let sim = compute_similarity(kg, &cands, &link_scores);
    let entity_pos: BTreeMap<EntityId, usize> = sim
        .entities
        .iter()
        .enumerate()
        .map(|(i, e)| (*e, i))
        .collect();

    // L over matched rows only; unmatched rows have no entries to carry
    let l_rows: Vec<Vec<(usize, f64)>> = matched
        .iter()
        .map(|row| {
            priors.row_scores[*row]
                .iter()
                .map(|(e, score)| (entity_pos[e], *score))
                .collect()
        })
        .collect();
    let l = SparseMatrix::new(sim.entities.len(), l_rows)?;
    let (_, coherence) = lbp_pass(&l, &sim.matrix, &config.lbp.options())?;

    let mut rows = Vec::with_capacity(matched.len());
    for (i, row) in matched.iter().copied().enumerate() {
        let (entity, confidence) = pick_row_entity(
            kg,
            &sim.entities,
            &coherence[i],
            &priors.row_scores[row],
            &cands[row],
        );
        rows.push(RowAssignment {
            row,
            entity: kg.entity_name(entity).to_string(),
            confidence,
        });
    }

    // column re-assignment with candidates narrowed to the winners
    let narrowed: Vec<CandidateSet> = (0..table.n_rows())
        .map(|row| {
            let mut set = CandidateSet {
                row,
                candidates: BTreeMap::new(),
            };
            if let Some(assignment) = rows.iter().find(|a| a.row == row) {
                let e = kg.entity_id(&assignment.entity).expect("assigned entity exists");
                set.candidates.insert(e, 1.0);
            }
            set
        })
        .collect();
    let narrowed_priors = compute_priors(kg, table, &narrowed);
    let mut columns = Vec::new();
    for c in table.attribute_columns() {
        if let Some((relation, score)) = pick_column_relation(kg, &narrowed_priors, c) {
            columns.push(ColumnAssignment {
                column: c,
                relation: kg.relation_name(relation).to_string(),
                score,
            });
        }
    }

    Ok(Interpretation {
        table_id: table.id.clone(),
        key_column,
        rows,
        columns,
        unmatched,
    })
}

/// Argmax over the coherence row with IRI tie-breaking; falls back to the
/// prior row and then to retrieval scores when a level is all zeros, so a
/// row with no attribute evidence still gets its best retrieval guess.
fn pick_row_entity(
    kg: &KnowledgeGraph,
    entities: &[EntityId],
    coherence_row: &[f64],
    prior_row: &BTreeMap<EntityId, f64>,
    cand: &CandidateSet,
) -> (EntityId, f64) {
    let in_cand: Vec<(EntityId, f64)> = cand
        .candidates
        .keys()
        .map(|e| {
            let pos = entities.iter().position(|x| x == e).expect("candidate indexed");
            (*e, coherence_row[pos])
        })
        .collect();
    for scores in [
        &in_cand,
        &prior_row.iter().map(|(e, s)| (*e, *s)).collect::<Vec<_>>(),
        &cand.candidates.iter().map(|(e, s)| (*e, *s)).collect::<Vec<_>>(),
    ] {
        let total: f64 = scores.iter().map(|(_, s)| s).sum();
        if total > 0.0 {
            let winner = argmax_by_iri(kg, scores);
            let score = scores.iter().find(|(e, _)| *e == winner).unwrap().1;
            return (winner, score / total);
        }
    }
    // every level zero: fall back to smallest IRI with zero confidence
    let zeros: Vec<(EntityId, f64)> = cand.candidates.keys().map(|e| (*e, 0.0)).collect();
    (argmax_by_iri(kg, &zeros), 0.0)
}

fn argmax_by_iri(kg: &KnowledgeGraph, scores: &[(EntityId, f64)]) -> EntityId {
    scores
        .iter()
        .max_by(|(ea, sa), (eb, sb)| {
            sa.total_cmp(sb)
                .then_with(|| kg.entity_name(*eb).cmp(kg.entity_name(*ea)))
        })
        .expect("non-empty candidate set")
        .0
}

/// Best-scored relation for column c after narrowing; none when every
/// relation scores zero. Ties break on the smaller relation IRI.
fn pick_column_relation(
    kg: &KnowledgeGraph,
    priors: &Priors,
    c: usize,
) -> Option<(RelationId, f64)> {
    let mut best: Option<(RelationId, f64)> = None;
    for &r in &priors.relations {
        let score = priors.col_scores.get(&(c, r)).copied().unwrap_or(0.0);
        if score <= 0.0 {
            continue;
        }
        let replace = match best {
            Some((br, bs)) => {
                score > bs
                    || (score == bs && kg.relation_name(r) < kg.relation_name(br))
            }
            None => true,
        };
        if replace {
            best = Some((r, score));
        }
    }
    best
}

/// The union of relations assigned anywhere in an interpretation set;
/// useful for reports.
pub fn assigned_relations(interps: &[Interpretation]) -> BTreeSet<String> {
    interps
        .iter()
        .flat_map(|i| i.columns.iter().map(|c| c.relation.clone()))
        .collect()
}
