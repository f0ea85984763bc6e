//! Command-line front end for the table interpretation pipeline.
//!
//! Every subcommand maps onto one pipeline stage and shares a single flag
//! set. Paths may also come from environment variables (TABKG_KG,
//! TABKG_TABLES, TABKG_GOLD, TABKG_OUT); all tuning parameters are
//! flags only.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tabkg_core::embed::{Norm, TrainConfig};
use tabkg_core::index::QueryOpts;
use tabkg_core::interpret::LbpConfig;
use tabkg_core::kg::{KgFormat, LabelConfig, LabelSource};
use tabkg_core::pipeline::{
    cmd_build_index, cmd_evaluate, cmd_interpret, cmd_pipeline, cmd_slotfill, cmd_train,
    default_thresholds, PipelineConfig, INDEX_FILE, MODEL_FILE, SIDECAR_FILE,
};
use tabkg_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "tabkg",
    version,
    about = "Interpret entity tables against a knowledge graph and extract triples"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and persist the label index snapshot
    BuildIndex(CommonArgs),
    /// Train translation embeddings on the knowledge graph
    TrainEmbeddings(CommonArgs),
    /// Interpret a directory of tables into row and column assignments
    Interpret(CommonArgs),
    /// Turn stored interpretations into triples
    Slotfill(CommonArgs),
    /// Score interpretations and triples against gold annotations
    Evaluate(CommonArgs),
    /// Run every stage in order
    Pipeline(CommonArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KgFormatArg {
    Ntriples,
    Tsv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SourceArg {
    Primary,
    Redirect,
    Disambiguation,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NormArg {
    L1,
    L2,
}

#[derive(Args)]
struct CommonArgs {
    /// Knowledge graph file
    #[arg(long, env = "TABKG_KG")]
    kg: PathBuf,

    /// Input format of the KG file (default: by extension, .tsv means tsv)
    #[arg(long, value_enum)]
    kg_format: Option<KgFormatArg>,

    /// Auxiliary label files (entity<TAB>label<TAB>source)
    #[arg(long = "labels")]
    label_files: Vec<PathBuf>,

    /// Relations whose literal objects are entity labels
    #[arg(long = "label-relation")]
    label_relations: Vec<String>,

    /// Label sources used for retrieval and the novelty check
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = vec![SourceArg::Primary])]
    sources: Vec<SourceArg>,

    /// Keep only the top label when it scores this factor above the runner-up
    #[arg(long, default_value_t = 2.0)]
    theta_gap: f64,

    /// Maximum labels considered per retrieval query
    #[arg(long, default_value_t = 50)]
    label_cap: usize,

    /// Message-passing sweeps over the prior matrix
    #[arg(long, default_value_t = 1)]
    lbp_iterations: usize,

    /// Skip row normalization of messages (raw products)
    #[arg(long)]
    raw_messages: bool,

    /// Minimum row confidence for slot extraction
    #[arg(long, default_value_t = 0.5)]
    tau: f64,

    /// Widen slot candidate pools to this many top labels
    #[arg(long)]
    wide_labels: Option<usize>,

    /// Re-rank slot candidates with the trained embedding model
    #[arg(long)]
    rerank: bool,

    /// Embedding dimension
    #[arg(long, default_value_t = 50)]
    dim: usize,

    /// Margin of the ranking loss
    #[arg(long, default_value_t = 1.0)]
    margin: f64,

    /// SGD learning rate
    #[arg(long, default_value_t = 0.01)]
    learning_rate: f64,

    /// Training epochs
    #[arg(long, default_value_t = 100)]
    epochs: usize,

    /// Corruptions per positive fact per epoch
    #[arg(long, default_value_t = 1)]
    negatives: usize,

    /// Seed for initialization, shuffling, and corruption sampling
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Distance norm of the embedding space
    #[arg(long, value_enum, default_value_t = NormArg::L1)]
    norm: NormArg,

    /// Parallel training workers (reproducible only with 1)
    #[arg(long, default_value_t = 1)]
    train_workers: usize,

    /// Directory of CSV/JSON tables
    #[arg(long, env = "TABKG_TABLES")]
    tables: Option<PathBuf>,

    /// Gold standard JSON
    #[arg(long, env = "TABKG_GOLD")]
    gold: Option<PathBuf>,

    /// Output directory for artifacts
    #[arg(long, env = "TABKG_OUT")]
    out: PathBuf,

    /// Parallel table workers for interpret and slotfill
    #[arg(long, default_value_t = 1)]
    workers: usize,

    /// Thresholds swept by evaluation reports (comma-separated)
    #[arg(long, value_delimiter = ',')]
    thresholds: Vec<f64>,
}

impl CommonArgs {
    fn config(&self) -> PipelineConfig {
        let kg_format = match self.kg_format {
            Some(KgFormatArg::Ntriples) => KgFormat::NTriples,
            Some(KgFormatArg::Tsv) => KgFormat::Tsv,
            None => match self.kg.extension().and_then(|e| e.to_str()) {
                Some("tsv") => KgFormat::Tsv,
                _ => KgFormat::NTriples,
            },
        };
        let label_config = if self.label_relations.is_empty() {
            LabelConfig::default()
        } else {
            LabelConfig {
                label_relations: self.label_relations.clone(),
            }
        };
        PipelineConfig {
            kg_path: self.kg.clone(),
            kg_format,
            aux_label_files: self.label_files.clone(),
            label_config,
            label_sources: self
                .sources
                .iter()
                .map(|s| match s {
                    SourceArg::Primary => LabelSource::Primary,
                    SourceArg::Redirect => LabelSource::Redirect,
                    SourceArg::Disambiguation => LabelSource::Disambiguation,
                })
                .collect(),
            query: QueryOpts {
                label_cap: self.label_cap,
                theta_gap: self.theta_gap,
            },
            lbp: LbpConfig {
                normalize: !self.raw_messages,
                iterations: self.lbp_iterations,
            },
            tau: self.tau,
            wide_labels: self.wide_labels,
            rerank: self.rerank,
            train: TrainConfig {
                dim: self.dim,
                margin: self.margin,
                learning_rate: self.learning_rate,
                epochs: self.epochs,
                negatives: self.negatives,
                seed: self.seed,
                norm: match self.norm {
                    NormArg::L1 => Norm::L1,
                    NormArg::L2 => Norm::L2,
                },
                workers: self.train_workers,
            },
            tables_dir: self.tables.clone().unwrap_or_default(),
            gold_path: self.gold.clone(),
            out_dir: self.out.clone(),
            workers: self.workers,
            thresholds: if self.thresholds.is_empty() {
                default_thresholds()
            } else {
                self.thresholds.clone()
            },
        }
    }

    fn require_tables(&self, command: &str) -> Result<()> {
        if self.tables.is_none() {
            return Err(Error::Config(format!(
                "{command} needs a table directory; pass --tables or set TABKG_TABLES"
            )));
        }
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::BuildIndex(args) => {
            let cfg = args.config();
            cmd_build_index(&cfg)?;
            println!("index snapshot written to {}", cfg.out_dir.join(INDEX_FILE).display());
        }
        Command::TrainEmbeddings(args) => {
            let cfg = args.config();
            let (_, report) = cmd_train(&cfg)?;
            let last = report.epoch_losses.last().copied().unwrap_or(0.0);
            println!(
                "model written to {} ({} epochs, final loss {last:.4}, {} corruption retries exhausted)",
                cfg.out_dir.join(MODEL_FILE).display(),
                report.epoch_losses.len(),
                report.exhausted_corruptions
            );
        }
        Command::Interpret(args) => {
            args.require_tables("interpret")?;
            let cfg = args.config();
            let summary = cmd_interpret(&cfg)?;
            println!(
                "interpreted {} of {} tables ({} skipped)",
                summary.interpreted,
                summary.tables,
                summary.skipped.len()
            );
            for skip in &summary.skipped {
                println!("  skipped {}: {}", skip.table, skip.reason);
            }
        }
        Command::Slotfill(args) => {
            args.require_tables("slotfill")?;
            let cfg = args.config();
            let summary = cmd_slotfill(&cfg)?;
            println!(
                "filled {} of {} slots ({} unfilled, {} tables skipped)",
                summary.filled,
                summary.slots,
                summary.unfilled,
                summary.skipped.len()
            );
            for skip in &summary.skipped {
                println!("  skipped {}: {}", skip.table, skip.reason);
            }
        }
        Command::Evaluate(args) => {
            let cfg = args.config();
            if cfg.out_dir.join(SIDECAR_FILE).exists() {
                args.require_tables("evaluate (a slotfill sidecar is present, gold triples come from table cells)")?;
            }
            let report = cmd_evaluate(&cfg)?;
            let best = report.assignments.best;
            println!(
                "assignments: P {:.3} / R {:.3} / F1 {:.3} at threshold {:.2}",
                best.precision, best.recall, best.f1, best.threshold
            );
            if let Some(triples) = &report.triples {
                let b = triples.best;
                println!(
                    "triples: P {:.3} / R {:.3} / F1 {:.3} at threshold {:.2}",
                    b.precision, b.recall, b.f1, b.threshold
                );
                if let Some(novelty) = &triples.novelty {
                    println!(
                        "  novel: {} predicted vs {} gold; redundant: {} predicted vs {} gold",
                        novelty.novel.predicted,
                        novelty.novel.gold,
                        novelty.redundant.predicted,
                        novelty.redundant.gold
                    );
                }
            }
            let warnings = report.assignments.warnings.len()
                + report.triples.as_ref().map_or(0, |t| t.warnings.len());
            if warnings > 0 {
                println!("{warnings} warning(s); see report.json");
            }
        }
        Command::Pipeline(args) => {
            args.require_tables("pipeline")?;
            let cfg = args.config();
            let summary = cmd_pipeline(&cfg)?;
            println!(
                "interpreted {} of {} tables; filled {} of {} slots; evaluation {}",
                summary.interpret.interpreted,
                summary.interpret.tables,
                summary.slotfill.filled,
                summary.slotfill.slots,
                if summary.evaluated { "written" } else { "skipped (no gold)" }
            );
        }
    }
    Ok(())
}
