//! Slot-filling: turning an accepted interpretation into triples.
//!
//! Each accepted row and assigned attribute column implies a partial
//! triple ⟨s, r, ?⟩. Datatype cells (numbers, dates) pass through as
//! literals; everything else is resolved against the label index, with
//! candidates re-ranked by embedding distance when a model is supplied.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingModel;
use crate::error::{Error, Result};
use crate::index::{LabelIndex, QueryOpts};
use crate::interpret::Interpretation;
use crate::kg::{write_ntriples_line, EntityId, KnowledgeGraph, RelationId};
use crate::table::{cell_values, Table};
use crate::text::is_datatype;

/// A partial triple ⟨s, r, ?⟩ anchored at one table cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    pub subject: EntityId,
    pub relation: RelationId,
    /// Raw cell text, trimmed.
    pub cell: String,
    /// Split multi-value view of the cell.
    pub values: Vec<String>,
    pub row: usize,
    pub column: usize,
    /// Confidence of the row assignment the slot came from.
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FillMethod {
    /// Datatype cell copied into a literal object as-is.
    LiteralPassthrough,
    /// Highest index-scored candidate, used when no model is supplied or
    /// the winning candidate has no vector.
    IndexTop1,
    /// Candidate closest to vec(s) + vec(r).
    EmbeddingRerank,
}

impl FillMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            FillMethod::LiteralPassthrough => "literal-passthrough",
            FillMethod::IndexTop1 => "index-top1",
            FillMethod::EmbeddingRerank => "embedding-rerank",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum ExtractedObject {
    /// Entity IRI.
    Entity(String),
    Literal(String),
}

impl ExtractedObject {
    pub fn is_literal(&self) -> bool {
        matches!(self, ExtractedObject::Literal(_))
    }

    pub fn text(&self) -> &str {
        match self {
            ExtractedObject::Entity(iri) => iri,
            ExtractedObject::Literal(text) => text,
        }
    }
}

/// A filled slot. `score` is 1.0 for passthrough, the index score for
/// index-top1, and the embedding distance (lower is better) for
/// embedding-rerank; `confidence` is inherited from the row assignment so
/// extraction sweeps can reuse interpretation thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractedTriple {
    pub subject: String,
    pub relation: String,
    pub object: ExtractedObject,
    pub method: FillMethod,
    pub score: f64,
    pub confidence: f64,
    pub row: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotOptions {
    pub query: QueryOpts,
    /// When set, skip the top-1/top-3 gap rule and pool the entities of
    /// this many top-ranked labels; re-ranking benefits from a wider
    /// pool.
    pub wide_labels: Option<usize>,
}

impl Default for SlotOptions {
    fn default() -> Self {
        SlotOptions {
            query: QueryOpts::default(),
            wide_labels: None,
        }
    }
}

/// One slot per accepted row and assigned attribute column whose cell is
/// non-empty; rows below confidence `tau` are excluded.
pub fn extract_slots(
    interp: &Interpretation,
    table: &Table,
    kg: &KnowledgeGraph,
    tau: f64,
) -> Result<Vec<Slot>> {
    let mut slots = Vec::new();
    for ra in &interp.rows {
        if ra.confidence < tau {
            continue;
        }
        if ra.row >= table.n_rows() {
            return Err(Error::Contract(format!(
                "interpretation row {} is outside the table",
                ra.row
            )));
        }
        let subject = kg.entity_id(&ra.entity).ok_or_else(|| {
            Error::Contract(format!("interpretation entity '{}' is not in the graph", ra.entity))
        })?;
        for ca in &interp.columns {
            if ca.column >= table.n_cols() {
                return Err(Error::Contract(format!(
                    "interpretation column {} is outside the table",
                    ca.column
                )));
            }
            let relation = kg.relation_id(&ca.relation).ok_or_else(|| {
                Error::Contract(format!(
                    "interpretation relation '{}' is not in the graph",
                    ca.relation
                ))
            })?;
            let cell = table.rows[ra.row][ca.column].trim();
            if cell.is_empty() {
                continue;
            }
            slots.push(Slot {
                subject,
                relation,
                cell: cell.to_string(),
                values: cell_values(table, ca.column, ra.row)?,
                row: ra.row,
                column: ca.column,
                confidence: ra.confidence,
            });
        }
    }
    Ok(slots)
}

/// Fill one slot. Datatype cells (every value numeric or date) pass the
/// raw cell through as a literal. Otherwise candidates are pooled from
/// the index over the cell's values and the best one becomes the object:
/// with a model, the candidate minimizing d(vec(s)+vec(r), vec(e)), ties
/// broken by higher index score then smaller IRI, candidates without
/// vectors demoted behind all that have them; without a model (or when
/// the winner has no vector), the highest index score, ties by smaller
/// IRI. An empty candidate pool leaves the slot unfilled (`None`).
pub fn fill_slot(
    slot: &Slot,
    index: &LabelIndex,
    model: Option<&EmbeddingModel>,
    kg: &KnowledgeGraph,
    opts: &SlotOptions,
) -> Result<Option<ExtractedTriple>> {
    let datatype_cell = is_datatype(&slot.cell)
        || (!slot.values.is_empty() && slot.values.iter().all(|v| is_datatype(v)));
    if datatype_cell {
        return Ok(Some(make_triple(
            slot,
            kg,
            ExtractedObject::Literal(slot.cell.clone()),
            FillMethod::LiteralPassthrough,
            1.0,
        )));
    }

    let mut candidates: BTreeMap<EntityId, f64> = BTreeMap::new();
    let queries: &[String] = if slot.values.is_empty() {
        std::slice::from_ref(&slot.cell)
    } else {
        &slot.values
    };
    for value in queries {
        let found = match opts.wide_labels {
            None => index.generate_candidates(value, &opts.query),
            Some(k) => wide_candidates(index, value, k),
        };
        for (e, score) in found {
            let best = candidates.entry(e).or_insert(score);
            if score > *best {
                *best = score;
            }
        }
    }
    if candidates.is_empty() {
        return Ok(None);
    }

    let (winner, method, score) = match model {
        None => {
            let (e, s) = best_by_index(kg, &candidates);
            (e, FillMethod::IndexTop1, s)
        }
        Some(model) => rerank(slot, model, kg, &candidates),
    };
    Ok(Some(make_triple(
        slot,
        kg,
        ExtractedObject::Entity(kg.entity_name(winner).to_string()),
        method,
        score,
    )))
}

/// Fill every slot in order; unfilled slots are counted, not errors.
pub fn fill_slots(
    slots: &[Slot],
    index: &LabelIndex,
    model: Option<&EmbeddingModel>,
    kg: &KnowledgeGraph,
    opts: &SlotOptions,
) -> Result<(Vec<ExtractedTriple>, usize)> {
    let mut triples = Vec::with_capacity(slots.len());
    let mut unfilled = 0;
    for slot in slots {
        match fill_slot(slot, index, model, kg, opts)? {
            Some(triple) => triples.push(triple),
            None => unfilled += 1,
        }
    }
    Ok((triples, unfilled))
}

/// Entities of the top `k` labels, each scored by its best label.
fn wide_candidates(index: &LabelIndex, text: &str, k: usize) -> BTreeMap<EntityId, f64> {
    let mut out: BTreeMap<EntityId, f64> = BTreeMap::new();
    for label in index.query_labels(text, k) {
        for e in &label.entities {
            let best = out.entry(*e).or_insert(label.score);
            if label.score > *best {
                *best = label.score;
            }
        }
    }
    out
}

fn make_triple(
    slot: &Slot,
    kg: &KnowledgeGraph,
    object: ExtractedObject,
    method: FillMethod,
    score: f64,
) -> ExtractedTriple {
    ExtractedTriple {
        subject: kg.entity_name(slot.subject).to_string(),
        relation: kg.relation_name(slot.relation).to_string(),
        object,
        method,
        score,
        confidence: slot.confidence,
        row: slot.row,
        column: slot.column,
    }
}

fn best_by_index(kg: &KnowledgeGraph, candidates: &BTreeMap<EntityId, f64>) -> (EntityId, f64) {
    let mut best: Option<(EntityId, f64)> = None;
    for (&e, &score) in candidates {
        let better = match best {
            None => true,
            Some((be, bs)) => {
                score > bs || (score == bs && kg.entity_name(e) < kg.entity_name(be))
            }
        };
        if better {
            best = Some((e, score));
        }
    }
    best.expect("candidates checked non-empty")
}

fn rerank(
    slot: &Slot,
    model: &EmbeddingModel,
    kg: &KnowledgeGraph,
    candidates: &BTreeMap<EntityId, f64>,
) -> (EntityId, FillMethod, f64) {
    let (Some(sv), Some(rv)) = (model.entity_vec(slot.subject), model.relation_vec(slot.relation))
    else {
        // subject or relation unseen at training: distances are undefined,
        // fall back to index order rather than dropping the slot
        let (e, s) = best_by_index(kg, candidates);
        return (e, FillMethod::IndexTop1, s);
    };
    let target: Vec<f64> = sv.iter().zip(rv).map(|(a, b)| a + b).collect();
    // (distance, entity, index score); None distance = no vector, demoted
    let mut scored: Vec<(Option<f64>, EntityId, f64)> = candidates
        .iter()
        .map(|(&e, &idx_score)| {
            let dist = model.entity_vec(e).map(|ev| {
                let diff: Vec<f64> = target.iter().zip(ev).map(|(t, v)| t - v).collect();
                model.norm.apply(&diff)
            });
            (dist, e, idx_score)
        })
        .collect();
    scored.sort_by(|(da, ea, ia), (db, eb, ib)| {
        match (da, db) {
            (Some(a), Some(b)) => a.total_cmp(b),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        }
        .then_with(|| ib.total_cmp(ia))
        .then_with(|| kg.entity_name(*ea).cmp(kg.entity_name(*eb)))
    });
    let (dist, winner, idx_score) = scored[0];
    match dist {
        Some(d) => (winner, FillMethod::EmbeddingRerank, d),
        None => (winner, FillMethod::IndexTop1, idx_score),
    }
}

/// Render as one N-Triples line (no trailing newline). Literal objects
/// are plain literals: the cell text passes through untyped.
pub fn triple_to_ntriples(triple: &ExtractedTriple) -> String {
    match &triple.object {
        ExtractedObject::Entity(iri) => {
            write_ntriples_line(&triple.subject, &triple.relation, iri, true, None, None)
        }
        ExtractedObject::Literal(text) => {
            write_ntriples_line(&triple.subject, &triple.relation, text, false, None, None)
        }
    }
}
