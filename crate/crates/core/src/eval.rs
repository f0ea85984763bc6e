//! Scoring interpretations and extractions against gold annotations.
//!
//! Row assignments are swept over confidence thresholds into a
//! precision/recall curve; extracted triples are additionally split into
//! novel and redundant partitions, each scored separately. Conventions
//! for empty sets are stated in every report: an empty prediction set
//! scores precision 1.0 and recall 0.0, and recall over an empty gold set
//! is reported as 0.0 with a warning.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::index::LabelIndex;
use crate::interpret::Interpretation;
use crate::kg::{KnowledgeGraph, Object};
use crate::slots::{ExtractedObject, ExtractedTriple};
use crate::table::{cell_values, Table};
use crate::text::{is_datatype, tokens_equal};

/// Gold annotations for one table. Row and column keys are table
/// indices; values are IRIs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldTable {
    pub table_id: String,
    pub key_column: usize,
    pub row_entities: BTreeMap<usize, String>,
    pub column_relations: BTreeMap<usize, String>,
}

/// The gold standard is a JSON array of per-table annotations.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GoldStandard {
    pub tables: Vec<GoldTable>,
}

pub fn load_gold(r: impl Read) -> Result<GoldStandard> {
    Ok(serde_json::from_reader(r)?)
}

/// A gold triple; also the identity under which predicted triples are
/// matched (exact subject, relation, and object).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GoldTriple {
    pub subject: String,
    pub relation: String,
    pub object: ExtractedObject,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Column assignments have no confidence sweep; they are scored once at
/// the interpretation itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub assigned: usize,
    pub gold: usize,
    pub correct: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub predicted: usize,
    pub gold: usize,
    pub best: CurvePoint,
    pub curve: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoveltyReport {
    /// Label sources the redundancy check matched against.
    pub label_sources: Vec<String>,
    pub novel: PartitionReport,
    pub redundant: PartitionReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Curve point at the threshold of maximum F1 (ties: lowest threshold).
    pub best: CurvePoint,
    pub curve: Vec<CurvePoint>,
    pub columns: Option<ColumnSummary>,
    pub novelty: Option<NoveltyReport>,
    pub warnings: Vec<String>,
    pub conventions: Vec<String>,
}

fn conventions() -> Vec<String> {
    vec![
        "empty prediction set scores precision 1.0 and recall 0.0".into(),
        "recall over an empty gold set is reported as 0.0".into(),
    ]
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Sweep (confidence, correct) pairs over thresholds. `gold_total` is the
/// recall denominator.
fn sweep(items: &[(f64, bool)], gold_total: usize, thresholds: &[f64]) -> Vec<CurvePoint> {
    let mut levels: Vec<f64> = thresholds.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    levels
        .into_iter()
        .map(|threshold| {
            let predicted = items.iter().filter(|(c, _)| *c >= threshold).count();
            let correct = items.iter().filter(|(c, ok)| *c >= threshold && *ok).count();
            let precision = if predicted == 0 {
                1.0
            } else {
                correct as f64 / predicted as f64
            };
            let recall = if gold_total == 0 {
                0.0
            } else {
                correct as f64 / gold_total as f64
            };
            CurvePoint {
                threshold,
                precision,
                recall,
                f1: f1(precision, recall),
            }
        })
        .collect()
}

/// First curve point of maximum F1; a lone default point when the curve
/// is empty.
fn best_point(curve: &[CurvePoint]) -> CurvePoint {
    curve
        .iter()
        .copied()
        .reduce(|best, p| if p.f1 > best.f1 { p } else { best })
        .unwrap_or(CurvePoint {
            threshold: 0.0,
            precision: 1.0,
            recall: 0.0,
            f1: 0.0,
        })
}

/// Score row assignments against gold, sweeping row confidence over the
/// thresholds; column assignments are scored once without a sweep. Rows
/// and tables predicted but absent from the gold standard are excluded
/// from precision (there is nothing to verify them against) and listed
/// as warnings; gold rows never predicted count against recall.
pub fn evaluate_assignments(
    interpretations: &[Interpretation],
    gold: &GoldStandard,
    thresholds: &[f64],
) -> EvalReport {
    let mut warnings = Vec::new();
    let by_id: BTreeMap<&str, &Interpretation> = interpretations
        .iter()
        .map(|i| (i.table_id.as_str(), i))
        .collect();
    let gold_ids: BTreeSet<&str> = gold.tables.iter().map(|t| t.table_id.as_str()).collect();
    for interp in interpretations {
        if !gold_ids.contains(interp.table_id.as_str()) {
            warnings.push(format!(
                "table '{}' has predictions but no gold annotations; excluded from precision",
                interp.table_id
            ));
        }
    }

    let mut row_items: Vec<(f64, bool)> = Vec::new();
    let mut gold_rows = 0usize;
    let mut col_assigned = 0usize;
    let mut col_correct = 0usize;
    let mut gold_cols = 0usize;
    for gt in &gold.tables {
        gold_rows += gt.row_entities.len();
        gold_cols += gt.column_relations.len();
        let Some(interp) = by_id.get(gt.table_id.as_str()) else {
            warnings.push(format!(
                "gold table '{}' has no predictions; its rows count against recall",
                gt.table_id
            ));
            continue;
        };
        for ra in &interp.rows {
            match gt.row_entities.get(&ra.row) {
                Some(gold_iri) => row_items.push((ra.confidence, &ra.entity == gold_iri)),
                None => warnings.push(format!(
                    "table '{}' row {} is predicted but not annotated; excluded from precision",
                    gt.table_id, ra.row
                )),
            }
        }
        for ca in &interp.columns {
            let Some(gold_iri) = gt.column_relations.get(&ca.column) else {
                continue;
            };
            col_assigned += 1;
            if &ca.relation == gold_iri {
                col_correct += 1;
            }
        }
    }
    if gold_rows == 0 {
        warnings.push("gold standard annotates no rows; recall reported as 0.0".into());
    }

    let curve = sweep(&row_items, gold_rows, thresholds);
    let col_p = if col_assigned == 0 {
        1.0
    } else {
        col_correct as f64 / col_assigned as f64
    };
    let col_r = if gold_cols == 0 {
        0.0
    } else {
        col_correct as f64 / gold_cols as f64
    };
    EvalReport {
        best: best_point(&curve),
        curve,
        columns: Some(ColumnSummary {
            assigned: col_assigned,
            gold: gold_cols,
            correct: col_correct,
            precision: col_p,
            recall: col_r,
            f1: f1(col_p, col_r),
        }),
        novelty: None,
        warnings,
        conventions: conventions(),
    }
}

/// True when the graph already holds ⟨s, r, o'⟩ with o' equal to the
/// object, or with an entity o' one of whose labels (under the index's
/// sources) token-matches the object's surface form.
fn is_redundant(
    subject: &str,
    relation: &str,
    object: &ExtractedObject,
    kg: &KnowledgeGraph,
    index: &LabelIndex,
) -> bool {
    let (Some(s), Some(r)) = (kg.entity_id(subject), kg.relation_id(relation)) else {
        return false;
    };
    let surface_forms: Vec<String> = match object {
        ExtractedObject::Literal(text) => vec![text.clone()],
        ExtractedObject::Entity(iri) => match kg.entity_id(iri) {
            Some(e) => kg
                .entity_labels(e, index.sources())
                .into_iter()
                .map(str::to_string)
                .collect(),
            None => Vec::new(),
        },
    };
    for existing in kg.objects_of(s, r) {
        let exact = match (existing, object) {
            (Object::Entity(e), ExtractedObject::Entity(iri)) => kg.entity_name(e) == iri,
            (Object::Literal(l), ExtractedObject::Literal(text)) => &kg.literal(l).lexical == text,
            _ => false,
        };
        if exact {
            return true;
        }
        if let Object::Entity(e) = existing {
            let labels = kg.entity_labels(e, index.sources());
            if labels
                .iter()
                .any(|label| surface_forms.iter().any(|form| tokens_equal(label, form)))
            {
                return true;
            }
        }
    }
    false
}

/// Split extracted triples into (novel, redundant), preserving input
/// order. The two vectors always partition the input.
pub fn partition_novelty(
    extracted: &[ExtractedTriple],
    kg: &KnowledgeGraph,
    index: &LabelIndex,
) -> (Vec<ExtractedTriple>, Vec<ExtractedTriple>) {
    let mut novel = Vec::new();
    let mut redundant = Vec::new();
    for t in extracted {
        if is_redundant(&t.subject, &t.relation, &t.object, kg, index) {
            redundant.push(t.clone());
        } else {
            novel.push(t.clone());
        }
    }
    (novel, redundant)
}

fn triple_key(t: &ExtractedTriple) -> GoldTriple {
    GoldTriple {
        subject: t.subject.clone(),
        relation: t.relation.clone(),
        object: t.object.clone(),
    }
}

/// Score extracted triples against gold triples, overall and split by
/// novelty. Duplicate predictions of one triple collapse to their highest
/// confidence; a prediction is correct iff its exact (s, r, o) is gold.
/// The novelty split applies the same redundancy test to both sides, so
/// each partition's recall is measured against gold triples of that
/// partition.
pub fn evaluate_triples(
    predicted: &[ExtractedTriple],
    gold: &[GoldTriple],
    kg: &KnowledgeGraph,
    index: &LabelIndex,
    thresholds: &[f64],
) -> EvalReport {
    let mut warnings = Vec::new();
    let mut dedup: BTreeMap<GoldTriple, f64> = BTreeMap::new();
    for t in predicted {
        let conf = dedup.entry(triple_key(t)).or_insert(t.confidence);
        if t.confidence > *conf {
            *conf = t.confidence;
        }
    }
    let gold_set: BTreeSet<&GoldTriple> = gold.iter().collect();
    if gold_set.is_empty() {
        warnings.push("gold triple set is empty; recall reported as 0.0".into());
    }

    let items: Vec<(f64, bool, bool)> = dedup
        .iter()
        .map(|(key, conf)| {
            let correct = gold_set.contains(key);
            let redundant = is_redundant(&key.subject, &key.relation, &key.object, kg, index);
            (*conf, correct, redundant)
        })
        .collect();
    let gold_redundant = gold_set
        .iter()
        .filter(|g| is_redundant(&g.subject, &g.relation, &g.object, kg, index))
        .count();
    let gold_novel = gold_set.len() - gold_redundant;

    let all: Vec<(f64, bool)> = items.iter().map(|(c, ok, _)| (*c, *ok)).collect();
    let novel_items: Vec<(f64, bool)> = items
        .iter()
        .filter(|(_, _, red)| !red)
        .map(|(c, ok, _)| (*c, *ok))
        .collect();
    let redundant_items: Vec<(f64, bool)> = items
        .iter()
        .filter(|(_, _, red)| *red)
        .map(|(c, ok, _)| (*c, *ok))
        .collect();

    let curve = sweep(&all, gold_set.len(), thresholds);
    let novel_curve = sweep(&novel_items, gold_novel, thresholds);
    let redundant_curve = sweep(&redundant_items, gold_redundant, thresholds);
    EvalReport {
        best: best_point(&curve),
        curve,
        columns: None,
        novelty: Some(NoveltyReport {
            label_sources: index.sources().iter().map(|s| s.as_str().to_string()).collect(),
            novel: PartitionReport {
                predicted: novel_items.len(),
                gold: gold_novel,
                best: best_point(&novel_curve),
                curve: novel_curve,
            },
            redundant: PartitionReport {
                predicted: redundant_items.len(),
                gold: gold_redundant,
                best: best_point(&redundant_curve),
                curve: redundant_curve,
            },
        }),
        warnings,
        conventions: conventions(),
    }
}

/// Derive gold triples from gold assignments and table cells: datatype
/// cells become literals; other cells become entities only when exactly
/// one entity's label token-matches a cell value, otherwise the pair is
/// skipped with a warning.
pub fn derive_gold_triples(
    gold: &GoldStandard,
    tables: &[Table],
    kg: &KnowledgeGraph,
    index: &LabelIndex,
) -> (Vec<GoldTriple>, Vec<String>) {
    let mut warnings = Vec::new();
    let mut out: BTreeSet<GoldTriple> = BTreeSet::new();
    for gt in &gold.tables {
        let Some(table) = tables.iter().find(|t| t.id == gt.table_id) else {
            warnings.push(format!(
                "gold table '{}' not among the input tables; no gold triples derived",
                gt.table_id
            ));
            continue;
        };
        for (&row, entity_iri) in &gt.row_entities {
            if row >= table.n_rows() {
                warnings.push(format!(
                    "gold row {} is outside table '{}'; skipped",
                    row, gt.table_id
                ));
                continue;
            }
            for (&col, rel_iri) in &gt.column_relations {
                if col >= table.n_cols() {
                    warnings.push(format!(
                        "gold column {} is outside table '{}'; skipped",
                        col, gt.table_id
                    ));
                    continue;
                }
                let cell = table.rows[row][col].trim();
                if cell.is_empty() {
                    continue;
                }
                let values = cell_values(table, col, row).expect("indices checked");
                let datatype_cell =
                    is_datatype(cell) || (!values.is_empty() && values.iter().all(|v| is_datatype(v)));
                if datatype_cell {
                    out.insert(GoldTriple {
                        subject: entity_iri.clone(),
                        relation: rel_iri.clone(),
                        object: ExtractedObject::Literal(cell.to_string()),
                    });
                    continue;
                }
                let mut matched: BTreeSet<&str> = BTreeSet::new();
                for id in 0..index.label_count() as u32 {
                    let entry = index.label(id);
                    if values.iter().any(|v| tokens_equal(&entry.text, v)) {
                        matched.extend(entry.entities.iter().map(|e| kg.entity_name(*e)));
                    }
                }
                match matched.len() {
                    1 => {
                        out.insert(GoldTriple {
                            subject: entity_iri.clone(),
                            relation: rel_iri.clone(),
                            object: ExtractedObject::Entity(matched.first().unwrap().to_string()),
                        });
                    }
                    n => warnings.push(format!(
                        "cell '{}' (table '{}', row {}, column {}) matches {} entities; gold triple skipped",
                        cell, gt.table_id, row, col, n
                    )),
                }
            }
        }
    }
    (out.into_iter().collect(), warnings)
}

/// CSV rendering of a curve for plotting.
pub fn curve_to_csv(curve: &[CurvePoint]) -> String {
    let mut out = String::from("threshold,precision,recall,f1\n");
    for p in curve {
        out.push_str(&format!("{},{},{},{}\n", p.threshold, p.precision, p.recall, p.f1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::index::build_index;
    use crate::interpret::{interpret_table, InterpretConfig, RowAssignment};
    use crate::kg::LabelSource;
    use crate::slots::{extract_slots, fill_slots, FillMethod, SlotOptions};
    use crate::table::{parse_table, TableFormat};

    fn gold_fixture() -> GoldStandard {
        GoldStandard {
            tables: vec![GoldTable {
                table_id: "t1".into(),
                key_column: 0,
                row_entities: [(0, fixtures::E1.to_string()), (1, fixtures::E3.to_string())].into(),
                column_relations: [
                    (1, fixtures::REL_YEAR.to_string()),
                    (2, fixtures::REL_DIRECTOR.to_string()),
                ]
                .into(),
            }],
        }
    }

    fn interp(rows: Vec<(usize, &str, f64)>) -> Interpretation {
        Interpretation {
            table_id: "t1".into(),
            key_column: 0,
            rows: rows
                .into_iter()
                .map(|(row, entity, confidence)| RowAssignment {
                    row,
                    entity: entity.into(),
                    confidence,
                })
                .collect(),
            columns: vec![],
            unmatched: vec![],
        }
    }

    #[test]
    fn perfect_predictions_score_one() {
        let gold = gold_fixture();
        let preds = vec![interp(vec![(0, fixtures::E1, 0.9), (1, fixtures::E3, 0.9)])];
        let report = evaluate_assignments(&preds, &gold, &[0.5]);
        assert_eq!(report.curve.len(), 1);
        let p = report.curve[0];
        assert_eq!((p.precision, p.recall, p.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn one_wrong_prediction_halves_both_measures() {
        let gold = gold_fixture();
        let preds = vec![interp(vec![(0, fixtures::E1, 0.9), (1, fixtures::E2, 0.9)])];
        let report = evaluate_assignments(&preds, &gold, &[0.5]);
        let p = report.curve[0];
        assert_eq!((p.precision, p.recall), (0.5, 0.5));
    }

    #[test]
    fn threshold_above_all_confidences_uses_empty_convention() {
        let gold = gold_fixture();
        let preds = vec![interp(vec![(0, fixtures::E1, 0.9), (1, fixtures::E3, 0.9)])];
        let report = evaluate_assignments(&preds, &gold, &[0.95]);
        let p = report.curve[0];
        assert_eq!((p.precision, p.recall, p.f1), (1.0, 0.0, 0.0));
        assert!(report.conventions.iter().any(|c| c.contains("precision 1.0")));
    }

    #[test]
    fn missing_tables_warn_and_penalize_recall() {
        let gold = gold_fixture();
        let stray = Interpretation {
            table_id: "t9".into(),
            ..interp(vec![(0, fixtures::E1, 0.9)])
        };
        let report = evaluate_assignments(&[stray], &gold, &[0.0]);
        let p = report.curve[0];
        assert_eq!((p.precision, p.recall), (1.0, 0.0));
        assert!(report.warnings.iter().any(|w| w.contains("t9")));
        assert!(report.warnings.iter().any(|w| w.contains("t1")));
    }

    #[test]
    fn unannotated_rows_are_excluded_from_precision_with_warning() {
        let gold = gold_fixture();
        let preds = vec![interp(vec![
            (0, fixtures::E1, 0.9),
            (1, fixtures::E3, 0.9),
            (7, fixtures::E2, 0.9),
        ])];
        let report = evaluate_assignments(&preds, &gold, &[0.5]);
        let p = report.curve[0];
        assert_eq!((p.precision, p.recall), (1.0, 1.0));
        assert!(report.warnings.iter().any(|w| w.contains("row 7")));
    }

    #[test]
    fn column_assignments_are_scored_without_a_sweep() {
        let gold = gold_fixture();
        let mut pred = interp(vec![(0, fixtures::E1, 0.9)]);
        pred.columns = vec![
            crate::interpret::ColumnAssignment {
                column: 1,
                relation: fixtures::REL_YEAR.into(),
                score: 0.8,
            },
            crate::interpret::ColumnAssignment {
                column: 2,
                relation: fixtures::REL_TYPE.into(),
                score: 0.4,
            },
        ];
        let report = evaluate_assignments(&[pred], &gold, &[0.0]);
        let cols = report.columns.unwrap();
        assert_eq!((cols.assigned, cols.gold, cols.correct), (2, 2, 1));
        assert_eq!((cols.precision, cols.recall), (0.5, 0.5));
    }

    #[test]
    fn sweep_thresholds_are_sorted_and_deduplicated() {
        let gold = gold_fixture();
        let preds = vec![interp(vec![(0, fixtures::E1, 0.9)])];
        let report = evaluate_assignments(&preds, &gold, &[0.7, 0.1, 0.7, 0.4]);
        let levels: Vec<f64> = report.curve.iter().map(|p| p.threshold).collect();
        assert_eq!(levels, vec![0.1, 0.4, 0.7]);
    }

    #[test]
    fn recall_never_increases_with_the_threshold() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let n = rng.random_range(1..20);
            let items: Vec<(f64, bool)> = (0..n)
                .map(|_| (rng.random::<f64>(), rng.random_bool(0.6)))
                .collect();
            let thresholds: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
            let curve = sweep(&items, rng.random_range(1..10), &thresholds);
            for pair in curve.windows(2) {
                assert!(pair[1].recall <= pair[0].recall + 1e-15);
            }
        }
    }

    fn extracted_fixture() -> (
        crate::kg::KnowledgeGraph,
        LabelIndex,
        Vec<ExtractedTriple>,
        Vec<Table>,
    ) {
        let kg = fixtures::minimovies();
        let index = build_index(&kg, &[LabelSource::Primary]);
        let csv = "title,year,director\nMASH,1970,Robert Altman\nThe Producers,1968,Mel Brooks\n";
        let table = parse_table(csv.as_bytes(), TableFormat::Csv, "t1").unwrap();
        let interp = interpret_table(&table, &kg, &index, &InterpretConfig::default()).unwrap();
        let slots = extract_slots(&interp, &table, &kg, 0.5).unwrap();
        let (triples, unfilled) =
            fill_slots(&slots, &index, None, &kg, &SlotOptions::default()).unwrap();
        assert_eq!(unfilled, 0);
        (kg, index, triples, vec![table])
    }

    #[test]
    fn fixture_extractions_are_all_redundant() {
        let (kg, index, triples, _) = extracted_fixture();
        assert_eq!(triples.len(), 4);
        let (novel, redundant) = partition_novelty(&triples, &kg, &index);
        // every year and director fact of the fixture is already in F
        assert!(novel.is_empty(), "unexpected novel: {novel:?}");
        assert_eq!(redundant.len(), 4);
    }

    #[test]
    fn label_match_makes_literal_extraction_redundant() {
        let (kg, index, triples, _) = extracted_fixture();
        // same fact expressed as a literal naming the director
        let mut literal = triples
            .iter()
            .find(|t| t.relation == fixtures::REL_DIRECTOR && t.subject == fixtures::E1)
            .unwrap()
            .clone();
        literal.object = ExtractedObject::Literal("robert ALTMAN".into());
        literal.method = FillMethod::LiteralPassthrough;
        let (novel, redundant) = partition_novelty(&[literal.clone()], &kg, &index);
        assert!(novel.is_empty());
        assert_eq!(redundant.len(), 1);

        // a surface form matching no label of the existing object is novel
        literal.object = ExtractedObject::Literal("Altman R.".into());
        let (novel, redundant) = partition_novelty(&[literal], &kg, &index);
        assert_eq!(novel.len(), 1);
        assert!(redundant.is_empty());
    }

    #[test]
    fn unknown_subjects_and_fresh_relations_are_novel() {
        let (kg, index, triples, _) = extracted_fixture();
        let mut t = triples[0].clone();
        t.subject = "http://example.org/e/Unknown".into();
        let (novel, _) = partition_novelty(&[t.clone()], &kg, &index);
        assert_eq!(novel.len(), 1);
        // object swap to an entity the graph has no (s, r, ·) edge for
        let mut t2 = triples
            .iter()
            .find(|t| t.relation == fixtures::REL_DIRECTOR && t.subject == fixtures::E1)
            .unwrap()
            .clone();
        t2.object = ExtractedObject::Entity(fixtures::E4.into());
        let (novel, redundant) = partition_novelty(&[t2], &kg, &index);
        // E1's director link exists but E4's labels do not match E5's
        assert_eq!((novel.len(), redundant.len()), (1, 0));
    }

    #[test]
    fn partitions_cover_the_input_exactly() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let (kg, index, triples, _) = extracted_fixture();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let subjects = [fixtures::E1, fixtures::E3, "http://example.org/e/Nope"];
        let relations = [fixtures::REL_DIRECTOR, fixtures::REL_YEAR, fixtures::REL_TYPE];
        let objects = [
            ExtractedObject::Entity(fixtures::E4.into()),
            ExtractedObject::Entity(fixtures::E5.into()),
            ExtractedObject::Literal("1970".into()),
            ExtractedObject::Literal("Robert Altman".into()),
        ];
        let mut pool = Vec::new();
        for _ in 0..200 {
            let mut t = triples[rng.random_range(0..triples.len())].clone();
            t.subject = subjects[rng.random_range(0..subjects.len())].into();
            t.relation = relations[rng.random_range(0..relations.len())].into();
            t.object = objects[rng.random_range(0..objects.len())].clone();
            pool.push(t);
        }
        let (novel, redundant) = partition_novelty(&pool, &kg, &index);
        assert_eq!(novel.len() + redundant.len(), pool.len());
        let key = |t: &ExtractedTriple| (t.subject.clone(), t.relation.clone(), t.object.clone());
        let novel_keys: BTreeSet<_> = novel.iter().map(key).collect();
        for t in &redundant {
            assert!(!novel_keys.contains(&key(t)), "triple in both partitions");
        }
    }

    #[test]
    fn derived_gold_matches_hand_enumeration() {
        let (kg, index, _, tables) = extracted_fixture();
        let (gold_triples, warnings) = derive_gold_triples(&gold_fixture(), &tables, &kg, &index);
        assert!(warnings.is_empty(), "{warnings:?}");
        let expected: BTreeSet<GoldTriple> = [
            GoldTriple {
                subject: fixtures::E1.into(),
                relation: fixtures::REL_YEAR.into(),
                object: ExtractedObject::Literal("1970".into()),
            },
            GoldTriple {
                subject: fixtures::E1.into(),
                relation: fixtures::REL_DIRECTOR.into(),
                object: ExtractedObject::Entity(fixtures::E5.into()),
            },
            GoldTriple {
                subject: fixtures::E3.into(),
                relation: fixtures::REL_YEAR.into(),
                object: ExtractedObject::Literal("1968".into()),
            },
            GoldTriple {
                subject: fixtures::E3.into(),
                relation: fixtures::REL_DIRECTOR.into(),
                object: ExtractedObject::Entity(fixtures::E4.into()),
            },
        ]
        .into();
        assert_eq!(gold_triples.into_iter().collect::<BTreeSet<_>>(), expected);
    }

    #[test]
    fn ambiguous_gold_cells_are_skipped_with_warnings() {
        let kg = fixtures::shared_name_kg();
        let index = build_index(&kg, &[LabelSource::Primary]);
        let csv = "film,director\nFilm 0,John Smith\n";
        let table = parse_table(csv.as_bytes(), TableFormat::Csv, "amb").unwrap();
        let gold = GoldStandard {
            tables: vec![GoldTable {
                table_id: "amb".into(),
                key_column: 0,
                row_entities: [(0, "http://example.org/e/f0".to_string())].into(),
                column_relations: [(1, "http://example.org/r/director".to_string())].into(),
            }],
        };
        let (triples, warnings) = derive_gold_triples(&gold, &[table], &kg, &index);
        assert!(triples.is_empty());
        assert!(warnings.iter().any(|w| w.contains("matches 2 entities")), "{warnings:?}");
    }

    #[test]
    fn end_to_end_triple_report_on_the_fixture() {
        let (kg, index, triples, tables) = extracted_fixture();
        let (gold_triples, _) = derive_gold_triples(&gold_fixture(), &tables, &kg, &index);
        let report = evaluate_triples(&triples, &gold_triples, &kg, &index, &[0.0, 0.5, 1.01]);
        assert_eq!(report.best.precision, 1.0);
        assert_eq!(report.best.recall, 1.0);
        let novelty = report.novelty.unwrap();
        assert_eq!(novelty.redundant.predicted, 4);
        assert_eq!(novelty.redundant.gold, 4);
        assert_eq!(novelty.redundant.best.precision, 1.0);
        assert_eq!(novelty.redundant.best.recall, 1.0);
        assert_eq!(novelty.novel.predicted, 0);
        assert_eq!(novelty.novel.gold, 0);
        assert_eq!(novelty.label_sources, vec!["primary".to_string()]);
        // above every confidence the empty-prediction convention applies
        let top = report.curve.last().unwrap();
        assert_eq!((top.precision, top.recall), (1.0, 0.0));
    }

    #[test]
    fn disjoint_predictions_score_zero_precision() {
        let (kg, index, triples, _) = extracted_fixture();
        let gold = vec![GoldTriple {
            subject: fixtures::E1.into(),
            relation: fixtures::REL_TYPE.into(),
            object: ExtractedObject::Entity(fixtures::E7.into()),
        }];
        let report = evaluate_triples(&triples, &gold, &kg, &index, &[0.0]);
        assert_eq!(report.curve[0].precision, 0.0);
        assert_eq!(report.curve[0].recall, 0.0);
    }

    #[test]
    fn empty_gold_sets_warn_and_zero_recall() {
        let (kg, index, triples, _) = extracted_fixture();
        let report = evaluate_triples(&triples, &[], &kg, &index, &[0.0]);
        assert!(report.warnings.iter().any(|w| w.contains("empty")));
        assert_eq!(report.curve[0].recall, 0.0);
    }

    #[test]
    fn duplicate_predictions_collapse_to_max_confidence() {
        let (kg, index, triples, tables) = extracted_fixture();
        let (gold_triples, _) = derive_gold_triples(&gold_fixture(), &tables, &kg, &index);
        let mut doubled = triples.clone();
        let mut low = triples[0].clone();
        low.confidence = 0.1;
        doubled.push(low);
        let report = evaluate_triples(&doubled, &gold_triples, &kg, &index, &[0.9]);
        // the duplicate's low confidence does not shadow the original
        assert_eq!(report.curve[0].recall, 1.0);
        assert_eq!(report.curve[0].precision, 1.0);
    }

    #[test]
    fn gold_standard_json_round_trips() {
        let gold = gold_fixture();
        let json = serde_json::to_string(&gold).unwrap();
        assert!(json.starts_with('['), "top-level array: {json}");
        let back: GoldStandard = serde_json::from_str(&json).unwrap();
        assert_eq!(gold, back);
        let report = evaluate_assignments(&[], &gold, &[0.0]);
        let report_json = serde_json::to_string(&report).unwrap();
        let report_back: EvalReport = serde_json::from_str(&report_json).unwrap();
        assert_eq!(report, report_back);
    }

    #[test]
    fn bundled_gold_file_parses() {
        let file = std::fs::File::open(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../fixtures/minimovies/gold.json"
        ))
        .unwrap();
        let gold = load_gold(file).unwrap();
        assert_eq!(gold.tables.len(), 1);
        assert_eq!(gold.tables[0].table_id, "t1");
        assert_eq!(gold.tables[0].row_entities[&0], fixtures::E1);
    }

    #[test]
    fn curve_csv_has_header_and_rows() {
        let curve = vec![CurvePoint {
            threshold: 0.5,
            precision: 1.0,
            recall: 0.25,
            f1: 0.4,
        }];
        assert_eq!(curve_to_csv(&curve), "threshold,precision,recall,f1\n0.5,1,0.25,0.4\n");
    }
}
