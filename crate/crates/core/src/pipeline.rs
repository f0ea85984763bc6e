//! File-level orchestration: load inputs, run stages, write artifacts.
//!
//! Every command reads its inputs fresh from disk, writes deterministic
//! artifacts into one output directory, and finishes with a manifest
//! naming the command, the package version, a hash of the full config,
//! and the files it wrote. Individual malformed tables are logged and
//! skipped, never aborting a batch; missing stage inputs are errors.
//!
//! The label index is always rebuilt from the loaded graph rather than
//! read from its snapshot, so interned ids can never drift from the graph
//! in memory; the snapshot artifact exists for inspection and reuse by
//! other tooling.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embed::{train_transe, EmbeddingModel, TrainConfig, TrainReport};
use crate::error::{Error, Result};
use crate::eval::{
    curve_to_csv, derive_gold_triples, evaluate_assignments, evaluate_triples, load_gold,
    EvalReport, GoldStandard,
};
use crate::index::{build_index, LabelIndex, QueryOpts};
use crate::interpret::{interpret_table, InterpretConfig, Interpretation, LbpConfig};
use crate::kg::{load_kg_from_path, KgFormat, KnowledgeGraph, LabelConfig, LabelSource};
use crate::slots::{extract_slots, fill_slots, triple_to_ntriples, ExtractedTriple, SlotOptions};
use crate::table::{parse_table_path, Table};

pub const INDEX_FILE: &str = "index.json";
pub const MODEL_FILE: &str = "embeddings.bin";
pub const TRAIN_REPORT_FILE: &str = "train_report.json";
pub const INTERPRETATIONS_DIR: &str = "interpretations";
pub const INTERPRET_SUMMARY_FILE: &str = "interpret_summary.json";
pub const TRIPLES_FILE: &str = "triples.nt";
pub const SIDECAR_FILE: &str = "triples.json";
pub const REPORT_FILE: &str = "report.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub kg_path: PathBuf,
    pub kg_format: KgFormat,
    pub aux_label_files: Vec<PathBuf>,
    pub label_config: LabelConfig,
    /// Label sources the index (and thus candidate generation and the
    /// novelty check) draws from.
    pub label_sources: Vec<LabelSource>,
    pub query: QueryOpts,
    pub lbp: LbpConfig,
    /// Minimum row confidence for slot extraction.
    pub tau: f64,
    /// Widen slot candidate pools to this many top labels.
    pub wide_labels: Option<usize>,
    /// Re-rank slot candidates with the trained embedding model.
    pub rerank: bool,
    pub train: TrainConfig,
    pub tables_dir: PathBuf,
    pub gold_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Table-level parallelism for interpret and slotfill.
    pub workers: usize,
    /// Thresholds swept by the evaluation reports.
    pub thresholds: Vec<f64>,
}

pub fn default_thresholds() -> Vec<f64> {
    (0..=20).map(|i| i as f64 * 0.05).collect()
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            kg_path: PathBuf::new(),
            kg_format: KgFormat::NTriples,
            aux_label_files: Vec::new(),
            label_config: LabelConfig::default(),
            label_sources: vec![LabelSource::Primary],
            query: QueryOpts::default(),
            lbp: LbpConfig::default(),
            tau: 0.5,
            wide_labels: None,
            rerank: false,
            train: TrainConfig::default(),
            tables_dir: PathBuf::new(),
            gold_path: None,
            out_dir: PathBuf::new(),
            workers: 1,
            thresholds: default_thresholds(),
        }
    }
}

/// Written at the end of every command. Contains no timestamps, so
/// identical runs write identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub package_version: String,
    pub config_sha256: String,
    pub artifacts: Vec<String>,
}

pub fn config_hash(cfg: &PipelineConfig) -> String {
    let json = serde_json::to_vec(cfg).expect("config serializes");
    let digest = Sha256::digest(&json);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipNote {
    pub table: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InterpretSummary {
    pub tables: usize,
    pub interpreted: usize,
    pub skipped: Vec<SkipNote>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SlotfillSummary {
    pub slots: usize,
    pub filled: usize,
    pub unfilled: usize,
    pub skipped: Vec<SkipNote>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub interpret: InterpretSummary,
    pub slotfill: SlotfillSummary,
    pub evaluated: bool,
}

/// One sidecar row: the triple plus the table it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidecarEntry {
    pub table_id: String,
    #[serde(flatten)]
    pub triple: ExtractedTriple,
}

/// Combined evaluation artifact: assignments always, triples whenever a
/// slotfill sidecar was available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedReport {
    pub assignments: EvalReport,
    pub triples: Option<EvalReport>,
}

fn load_inputs(cfg: &PipelineConfig) -> Result<(KnowledgeGraph, LabelIndex)> {
    let kg = load_kg_from_path(&cfg.kg_path, cfg.kg_format, &cfg.label_config, &cfg.aux_label_files)?;
    let index = build_index(&kg, &cfg.label_sources);
    Ok((kg, index))
}

/// Table files (csv/json) in deterministic name order.
fn list_tables(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| Error::Config(format!("cannot read table directory {}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("csv") | Some("json")
            )
        })
        .collect();
    paths.sort();
    Ok(paths)
}

/// Order-preserving parallel map over a worker pool: items are claimed
/// from a shared counter and results land in the slot of their input.
fn parallel_map<T: Sync, R: Send + Sync>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    if items.is_empty() {
        return Vec::new();
    }
    let slots: Vec<OnceLock<R>> = (0..items.len()).map(|_| OnceLock::new()).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers.max(1).min(items.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let _ = slots[i].set(f(&items[i]));
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().expect("worker filled every slot"))
        .collect()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut json = serde_json::to_string_pretty(value)?;
    json.push('\n');
    write_file(path, json.as_bytes())
}

fn write_manifest(cfg: &PipelineConfig, command: &str, mut artifacts: Vec<String>) -> Result<Manifest> {
    artifacts.sort();
    let manifest = Manifest {
        command: command.to_string(),
        package_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: config_hash(cfg),
        artifacts,
    };
    write_json(&cfg.out_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

fn ensure_out_dir(cfg: &PipelineConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| Error::Config(format!("cannot create output directory {}: {e}", cfg.out_dir.display())))
}

/// Persist the label index snapshot.
pub fn cmd_build_index(cfg: &PipelineConfig) -> Result<Manifest> {
    ensure_out_dir(cfg)?;
    let (_, index) = load_inputs(cfg)?;
    let path = cfg.out_dir.join(INDEX_FILE);
    let mut buf = Vec::new();
    index.save_snapshot(&mut buf)?;
    write_file(&path, &buf)?;
    write_manifest(cfg, "build-index", vec![INDEX_FILE.into()])
}

/// Train embeddings on the KG and persist model plus loss report.
pub fn cmd_train(cfg: &PipelineConfig) -> Result<(Manifest, TrainReport)> {
    ensure_out_dir(cfg)?;
    let kg = load_kg_from_path(&cfg.kg_path, cfg.kg_format, &cfg.label_config, &cfg.aux_label_files)?;
    let (model, report) = train_transe(&kg, &cfg.train)?;
    let mut buf = Vec::new();
    model.save_binary(&kg, &mut buf)?;
    write_file(&cfg.out_dir.join(MODEL_FILE), &buf)?;
    write_json(&cfg.out_dir.join(TRAIN_REPORT_FILE), &report)?;
    let manifest = write_manifest(cfg, "train-embeddings", vec![MODEL_FILE.into(), TRAIN_REPORT_FILE.into()])?;
    Ok((manifest, report))
}

/// Interpret every table in the input directory, one JSON artifact per
/// table plus a summary. Malformed or rejected tables are skipped with a
/// reason, never aborting the batch.
pub fn cmd_interpret(cfg: &PipelineConfig) -> Result<InterpretSummary> {
    ensure_out_dir(cfg)?;
    let (kg, index) = load_inputs(cfg)?;
    let summary = interpret_stage(cfg, &kg, &index)?;
    let mut artifacts: Vec<String> = vec![INTERPRET_SUMMARY_FILE.into()];
    for interp in read_interpretations(cfg)? {
        artifacts.push(format!("{INTERPRETATIONS_DIR}/{}.json", interp.table_id));
    }
    write_manifest(cfg, "interpret", artifacts)?;
    Ok(summary)
}

fn interpret_stage(cfg: &PipelineConfig, kg: &KnowledgeGraph, index: &LabelIndex) -> Result<InterpretSummary> {
    let paths = list_tables(&cfg.tables_dir)?;
    let icfg = InterpretConfig {
        query: cfg.query.clone(),
        lbp: cfg.lbp.clone(),
    };
    let results = parallel_map(&paths, cfg.workers, |path| -> Result<(String, Interpretation)> {
        let table = parse_table_path(path)?;
        let interp = interpret_table(&table, kg, index, &icfg)?;
        Ok((table.id.clone(), interp))
    });

    let dir = cfg.out_dir.join(INTERPRETATIONS_DIR);
    std::fs::create_dir_all(&dir)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
    let mut summary = InterpretSummary {
        tables: paths.len(),
        ..InterpretSummary::default()
    };
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for (path, result) in paths.iter().zip(results) {
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("<unnamed>")
            .to_string();
        match result {
            Ok((id, interp)) => {
                if !seen.insert(id.clone()) {
                    summary.skipped.push(SkipNote {
                        table: name,
                        reason: format!("duplicate table id '{id}'; file ignored"),
                    });
                    continue;
                }
                write_json(&dir.join(format!("{id}.json")), &interp)?;
                summary.interpreted += 1;
            }
            Err(e) => summary.skipped.push(SkipNote {
                table: name,
                reason: e.to_string(),
            }),
        }
    }
    summary.skipped.sort_by(|a, b| a.table.cmp(&b.table).then_with(|| a.reason.cmp(&b.reason)));
    write_json(&cfg.out_dir.join(INTERPRET_SUMMARY_FILE), &summary)?;
    Ok(summary)
}

fn read_interpretations(cfg: &PipelineConfig) -> Result<Vec<Interpretation>> {
    let dir = cfg.out_dir.join(INTERPRETATIONS_DIR);
    let entries = std::fs::read_dir(&dir).map_err(|e| {
        Error::Config(format!(
            "cannot read {} (run the interpret stage first): {e}",
            dir.display()
        ))
    })?;
    let mut paths: Vec<PathBuf> = entries
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("json"))
        .collect();
    paths.sort();
    let mut out = Vec::with_capacity(paths.len());
    for p in paths {
        let file = std::fs::File::open(&p)
            .map_err(|e| Error::Config(format!("cannot open {}: {e}", p.display())))?;
        out.push(serde_json::from_reader(file)?);
    }
    Ok(out)
}

fn load_model_if_needed(cfg: &PipelineConfig, kg: &KnowledgeGraph) -> Result<Option<EmbeddingModel>> {
    if !cfg.rerank {
        return Ok(None);
    }
    let path = cfg.out_dir.join(MODEL_FILE);
    let file = std::fs::File::open(&path).map_err(|e| {
        Error::Config(format!(
            "re-ranking needs {} (run the train-embeddings stage first or disable re-ranking): {e}",
            path.display()
        ))
    })?;
    Ok(Some(EmbeddingModel::load_binary(kg, file)?))
}

/// Fill slots for every stored interpretation, writing N-Triples plus a
/// JSON sidecar with method, score, and confidence per triple.
pub fn cmd_slotfill(cfg: &PipelineConfig) -> Result<SlotfillSummary> {
    ensure_out_dir(cfg)?;
    let (kg, index) = load_inputs(cfg)?;
    let model = load_model_if_needed(cfg, &kg)?;
    let summary = slotfill_stage(cfg, &kg, &index, model.as_ref())?;
    write_manifest(cfg, "slotfill", vec![TRIPLES_FILE.into(), SIDECAR_FILE.into()])?;
    Ok(summary)
}

fn slotfill_stage(
    cfg: &PipelineConfig,
    kg: &KnowledgeGraph,
    index: &LabelIndex,
    model: Option<&EmbeddingModel>,
) -> Result<SlotfillSummary> {
    let interps = read_interpretations(cfg)?;
    let mut tables: BTreeMap<String, Table> = BTreeMap::new();
    for path in list_tables(&cfg.tables_dir)? {
        if let Ok(table) = parse_table_path(&path) {
            tables.entry(table.id.clone()).or_insert(table);
        }
    }
    let opts = SlotOptions {
        query: cfg.query.clone(),
        wide_labels: cfg.wide_labels,
    };
    type TableOutcome = std::result::Result<(Vec<ExtractedTriple>, usize, usize), String>;
    let results: Vec<(String, TableOutcome)> = parallel_map(&interps, cfg.workers, |interp| {
        let outcome = match tables.get(&interp.table_id) {
            None => Err("table file no longer present; slots skipped".to_string()),
            Some(table) => extract_slots(interp, table, kg, cfg.tau)
                .and_then(|slots| {
                    let n = slots.len();
                    fill_slots(&slots, index, model, kg, &opts)
                        .map(|(triples, unfilled)| (triples, n, unfilled))
                })
                .map_err(|e| e.to_string()),
        };
        (interp.table_id.clone(), outcome)
    });

    let mut summary = SlotfillSummary::default();
    let mut nt = String::new();
    let mut sidecar: Vec<SidecarEntry> = Vec::new();
    for (table_id, outcome) in results {
        match outcome {
            Ok((triples, slots, unfilled)) => {
                summary.slots += slots;
                summary.unfilled += unfilled;
                summary.filled += triples.len();
                for triple in triples {
                    nt.push_str(&triple_to_ntriples(&triple));
                    nt.push('\n');
                    sidecar.push(SidecarEntry { table_id: table_id.clone(), triple });
                }
            }
            Err(reason) => summary.skipped.push(SkipNote { table: table_id, reason }),
        }
    }
    summary.skipped.sort_by(|a, b| a.table.cmp(&b.table).then_with(|| a.reason.cmp(&b.reason)));
    write_file(&cfg.out_dir.join(TRIPLES_FILE), nt.as_bytes())?;
    write_json(&cfg.out_dir.join(SIDECAR_FILE), &sidecar)?;
    Ok(summary)
}

/// Evaluate stored interpretations (and, when present, extracted triples)
/// against the gold standard, writing the combined report and curve CSVs.
pub fn cmd_evaluate(cfg: &PipelineConfig) -> Result<CombinedReport> {
    ensure_out_dir(cfg)?;
    let report = evaluate_stage(cfg)?;
    let mut artifacts = vec![REPORT_FILE.to_string(), "assignments_curve.csv".to_string()];
    if report.triples.is_some() {
        artifacts.extend([
            "triples_curve.csv".to_string(),
            "triples_novel_curve.csv".to_string(),
            "triples_redundant_curve.csv".to_string(),
        ]);
    }
    write_manifest(cfg, "evaluate", artifacts)?;
    Ok(report)
}

fn evaluate_stage(cfg: &PipelineConfig) -> Result<CombinedReport> {
    let gold_path = cfg
        .gold_path
        .as_ref()
        .ok_or_else(|| Error::Config("evaluation needs a gold standard file".into()))?;
    let gold_file = std::fs::File::open(gold_path)
        .map_err(|e| Error::Config(format!("cannot open gold file {}: {e}", gold_path.display())))?;
    let gold: GoldStandard = load_gold(gold_file)?;
    let interps = read_interpretations(cfg)?;
    let assignments = evaluate_assignments(&interps, &gold, &cfg.thresholds);
    write_file(
        &cfg.out_dir.join("assignments_curve.csv"),
        curve_to_csv(&assignments.curve).as_bytes(),
    )?;

    let sidecar_path = cfg.out_dir.join(SIDECAR_FILE);
    let triples_report = if sidecar_path.exists() {
        let file = std::fs::File::open(&sidecar_path)
            .map_err(|e| Error::Config(format!("cannot open {}: {e}", sidecar_path.display())))?;
        let sidecar: Vec<SidecarEntry> = serde_json::from_reader(file)?;
        let extracted: Vec<ExtractedTriple> = sidecar.into_iter().map(|e| e.triple).collect();
        let (kg, index) = load_inputs(cfg)?;
        let mut tables = Vec::new();
        for path in list_tables(&cfg.tables_dir)? {
            if let Ok(table) = parse_table_path(&path) {
                tables.push(table);
            }
        }
        let (gold_triples, mut warnings) = derive_gold_triples(&gold, &tables, &kg, &index);
        let mut report = evaluate_triples(&extracted, &gold_triples, &kg, &index, &cfg.thresholds);
        warnings.extend(report.warnings);
        report.warnings = warnings;
        write_file(
            &cfg.out_dir.join("triples_curve.csv"),
            curve_to_csv(&report.curve).as_bytes(),
        )?;
        if let Some(novelty) = &report.novelty {
            write_file(
                &cfg.out_dir.join("triples_novel_curve.csv"),
                curve_to_csv(&novelty.novel.curve).as_bytes(),
            )?;
            write_file(
                &cfg.out_dir.join("triples_redundant_curve.csv"),
                curve_to_csv(&novelty.redundant.curve).as_bytes(),
            )?;
        }
        Some(report)
    } else {
        None
    };

    let combined = CombinedReport {
        assignments,
        triples: triples_report,
    };
    write_json(&cfg.out_dir.join(REPORT_FILE), &combined)?;
    Ok(combined)
}

/// Run every stage in order: index snapshot, training, interpretation,
/// slot-filling, and (when gold annotations are configured) evaluation.
pub fn cmd_pipeline(cfg: &PipelineConfig) -> Result<PipelineSummary> {
    ensure_out_dir(cfg)?;
    let (kg, index) = load_inputs(cfg)?;

    let index_path = cfg.out_dir.join(INDEX_FILE);
    let mut buf = Vec::new();
    index.save_snapshot(&mut buf)?;
    write_file(&index_path, &buf)?;

    let (model, train_report) = train_transe(&kg, &cfg.train)?;
    let mut model_buf = Vec::new();
    model.save_binary(&kg, &mut model_buf)?;
    write_file(&cfg.out_dir.join(MODEL_FILE), &model_buf)?;
    write_json(&cfg.out_dir.join(TRAIN_REPORT_FILE), &train_report)?;

    let interpret = interpret_stage(cfg, &kg, &index)?;
    let slot_model = if cfg.rerank { Some(&model) } else { None };
    let slotfill = slotfill_stage(cfg, &kg, &index, slot_model)?;

    let evaluated = cfg.gold_path.is_some();
    if evaluated {
        evaluate_stage(cfg)?;
    }

    let mut artifacts: Vec<String> = vec![
        INDEX_FILE.into(),
        MODEL_FILE.into(),
        TRAIN_REPORT_FILE.into(),
        INTERPRET_SUMMARY_FILE.into(),
        TRIPLES_FILE.into(),
        SIDECAR_FILE.into(),
    ];
    for interp in read_interpretations(cfg)? {
        artifacts.push(format!("{INTERPRETATIONS_DIR}/{}.json", interp.table_id));
    }
    if evaluated {
        artifacts.push(REPORT_FILE.into());
        artifacts.push("assignments_curve.csv".into());
    }
    write_manifest(cfg, "pipeline", artifacts)?;
    Ok(PipelineSummary {
        interpret,
        slotfill,
        evaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture_config(out: &Path) -> PipelineConfig {
        let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/minimovies");
        PipelineConfig {
            kg_path: root.join("kg.nt"),
            tables_dir: root.join("tables"),
            gold_path: Some(root.join("gold.json")),
            out_dir: out.to_path_buf(),
            train: TrainConfig {
                dim: 8,
                epochs: 20,
                seed: 7,
                ..TrainConfig::default()
            },
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn pipeline_writes_all_fixture_artifacts() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = fixture_config(tmp.path());
        let summary = cmd_pipeline(&cfg).unwrap();
        assert_eq!(summary.interpret.interpreted, 1);
        assert!(summary.interpret.skipped.is_empty());
        assert_eq!(summary.slotfill.filled, 4);
        assert_eq!(summary.slotfill.unfilled, 0);
        assert!(summary.evaluated);
        for name in [
            INDEX_FILE,
            MODEL_FILE,
            TRAIN_REPORT_FILE,
            INTERPRET_SUMMARY_FILE,
            TRIPLES_FILE,
            SIDECAR_FILE,
            REPORT_FILE,
            MANIFEST_FILE,
            "interpretations/t1.json",
            "assignments_curve.csv",
            "triples_novel_curve.csv",
        ] {
            assert!(tmp.path().join(name).exists(), "missing artifact {name}");
        }
        let nt = std::fs::read_to_string(tmp.path().join(TRIPLES_FILE)).unwrap();
        assert_eq!(nt.lines().count(), 4);
        let report: CombinedReport =
            serde_json::from_reader(std::fs::File::open(tmp.path().join(REPORT_FILE)).unwrap())
                .unwrap();
        assert_eq!(report.assignments.best.precision, 1.0);
        assert_eq!(report.assignments.best.recall, 1.0);
        let triples = report.triples.unwrap();
        assert_eq!(triples.best.recall, 1.0);
        let manifest: Manifest =
            serde_json::from_reader(std::fs::File::open(tmp.path().join(MANIFEST_FILE)).unwrap())
                .unwrap();
        assert_eq!(manifest.command, "pipeline");
        assert_eq!(manifest.config_sha256, config_hash(&cfg));
    }

    #[test]
    fn single_worker_runs_are_byte_identical() {
        let tmp_a = tempfile::tempdir().unwrap();
        let tmp_b = tempfile::tempdir().unwrap();
        let mut cfg_a = fixture_config(tmp_a.path());
        let mut cfg_b = fixture_config(tmp_b.path());
        cfg_a.out_dir = tmp_a.path().to_path_buf();
        cfg_b.out_dir = tmp_b.path().to_path_buf();
        cmd_pipeline(&cfg_a).unwrap();
        cmd_pipeline(&cfg_b).unwrap();
        for name in [
            "interpretations/t1.json",
            TRIPLES_FILE,
            SIDECAR_FILE,
            REPORT_FILE,
            MODEL_FILE,
            INDEX_FILE,
            TRAIN_REPORT_FILE,
        ] {
            let a = std::fs::read(tmp_a.path().join(name)).unwrap();
            let b = std::fs::read(tmp_b.path().join(name)).unwrap();
            assert_eq!(a, b, "artifact {name} differs between runs");
        }
    }

    #[test]
    fn empty_table_directory_is_a_successful_noop() {
        let tmp = tempfile::tempdir().unwrap();
        let tables = tmp.path().join("tables");
        std::fs::create_dir_all(&tables).unwrap();
        let mut cfg = fixture_config(tmp.path());
        cfg.tables_dir = tables;
        let summary = cmd_interpret(&cfg).unwrap();
        assert_eq!(summary.tables, 0);
        assert_eq!(summary.interpreted, 0);
    }

    #[test]
    fn malformed_tables_are_skipped_not_fatal() {
        let tmp = tempfile::tempdir().unwrap();
        let tables = tmp.path().join("tables");
        std::fs::create_dir_all(&tables).unwrap();
        std::fs::write(tables.join("bad.csv"), "").unwrap();
        std::fs::copy(
            Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/minimovies/tables/t1.csv"),
            tables.join("t1.csv"),
        )
        .unwrap();
        let mut cfg = fixture_config(tmp.path());
        cfg.tables_dir = tables;
        let summary = cmd_interpret(&cfg).unwrap();
        assert_eq!(summary.tables, 2);
        assert_eq!(summary.interpreted, 1);
        assert_eq!(summary.skipped.len(), 1);
        assert_eq!(summary.skipped[0].table, "bad");
    }

    #[test]
    fn slotfill_without_interpretations_is_an_actionable_error() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = fixture_config(tmp.path());
        let err = cmd_slotfill(&cfg).unwrap_err();
        assert!(err.to_string().contains("interpret"), "{err}");
    }

    #[test]
    fn rerank_without_model_is_an_actionable_error() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = fixture_config(tmp.path());
        cfg.rerank = true;
        cmd_interpret(&cfg).unwrap();
        let err = cmd_slotfill(&cfg).unwrap_err();
        assert!(err.to_string().contains("train-embeddings"), "{err}");
    }

    #[test]
    fn evaluate_tolerates_mismatched_gold_ids() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = fixture_config(tmp.path());
        cmd_interpret(&cfg).unwrap();
        let stray_gold = tmp.path().join("stray_gold.json");
        std::fs::write(
            &stray_gold,
            r#"[{"table_id":"zz","key_column":0,"row_entities":{"0":"http://example.org/e/MASH_film"},"column_relations":{}}]"#,
        )
        .unwrap();
        cfg.gold_path = Some(stray_gold);
        let report = cmd_evaluate(&cfg).unwrap();
        assert!(report.assignments.warnings.iter().any(|w| w.contains("zz")));
        assert_eq!(report.assignments.best.recall, 0.0);
    }

    #[test]
    fn stage_commands_chain_like_the_pipeline() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = fixture_config(tmp.path());
        cmd_build_index(&cfg).unwrap();
        let (_, train_report) = cmd_train(&cfg).unwrap();
        assert_eq!(train_report.epoch_losses.len(), 20);
        cmd_interpret(&cfg).unwrap();
        let summary = cmd_slotfill(&cfg).unwrap();
        assert_eq!(summary.filled, 4);
        let report = cmd_evaluate(&cfg).unwrap();
        assert!(report.triples.is_some());
        let manifest: Manifest =
            serde_json::from_reader(std::fs::File::open(tmp.path().join(MANIFEST_FILE)).unwrap())
                .unwrap();
        assert_eq!(manifest.command, "evaluate");
    }

    #[test]
    fn parallel_map_preserves_order_and_covers_all_items() {
        let items: Vec<usize> = (0..137).collect();
        let out = parallel_map(&items, 8, |x| x * 2);
        assert_eq!(out, items.iter().map(|x| x * 2).collect::<Vec<_>>());
        let empty: Vec<usize> = Vec::new();
        assert!(parallel_map(&empty, 4, |x| *x).is_empty());
    }
}
