//! Command-line entry points: `build-vocab`, `train-bpe`, `train`,
//! `export`, `eval-sim` and `compare-configs`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use subgram::config::{
    parse_config_label, Composition, PipelineConfig, PositionMode, SegmenterKind, TagMode,
    TrainConfig,
};
use subgram::corpus::{preprocess_line, Vocabulary};
use subgram::error::Error;
use subgram::eval::{self, ReportRow, ResultsTable};
use subgram::manifest::{self, Artifacts, RunManifest};
use subgram::segmentation::train_bpe;
use subgram::trainer;

#[derive(Parser)]
#[command(
    name = "subgram",
    version,
    about = "Subword-informed word embeddings: training and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count words in a corpus and write the vocabulary dump.
    BuildVocab {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 5)]
        min_count: u64,
    },
    /// Learn a BPE merge table from a corpus.
    TrainBpe {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Number of merge operations.
        #[arg(long, default_value_t = 10_000)]
        merges: usize,
    },
    /// Train embeddings and write checkpoint, vectors and manifest.
    Train(Box<TrainArgs>),
    /// Re-export vectors from a finished run.
    Export {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Score a word similarity dataset with a finished run.
    EvalSim {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Dataset id used in the report (defaults to the file stem).
        #[arg(long)]
        dataset_id: Option<String>,
        /// Append the scores to this report file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Percentage-rank comparison of configuration facets.
    CompareConfigs {
        /// Report file written by eval-sim.
        #[arg(long)]
        results: PathBuf,
        /// Dataset metadata: dataset<TAB>task<TAB>language<TAB>language_type.
        #[arg(long)]
        meta: PathBuf,
        #[arg(long)]
        task: String,
        #[arg(long)]
        lang_type: String,
        /// Comma-separated facets, e.g. sms.ww,sms.w-,bpe.ww.
        #[arg(long)]
        facets: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Output directory for all run artifacts.
    #[arg(long)]
    outdir: PathBuf,
    /// Configuration label, e.g. sms.ww.pp.add (overrides the component
    /// flags below).
    #[arg(long)]
    label: Option<String>,
    /// Flat key=value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,

    #[arg(long, value_parser = ["sms", "morf", "bpe", "ngram", "word"])]
    seg: Option<String>,
    #[arg(long, value_parser = ["w-", "ww"])]
    word_token: Option<String>,
    #[arg(long, value_parser = ["off", "st"])]
    tags: Option<String>,
    #[arg(long, value_parser = ["p-", "pp", "mp"])]
    pos: Option<String>,
    #[arg(long, value_parser = ["add", "att", "mtx"])]
    comp: Option<String>,

    /// Existing vocabulary dump (built from the corpus when absent).
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Merge table for --seg bpe.
    #[arg(long)]
    merges: Option<PathBuf>,
    /// Segmentation lexicon for --seg sms/morf.
    #[arg(long)]
    lexicon: Option<PathBuf>,

    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    position_cap: Option<usize>,
    #[arg(long)]
    attention_hidden: Option<usize>,
    #[arg(long)]
    heads: Option<usize>,
    #[arg(long)]
    ngram_min: Option<usize>,
    #[arg(long)]
    ngram_max: Option<usize>,
    #[arg(long)]
    ngram_buckets: Option<usize>,

    #[arg(long)]
    min_count: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    negatives: Option<usize>,
    #[arg(long)]
    subsample: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::BuildVocab {
            corpus,
            output,
            min_count,
        } => {
            let vocab = Vocabulary::from_corpus(&corpus, min_count)?;
            vocab.save(&output)?;
            println!(
                "vocabulary: {} words, {} training tokens",
                vocab.len(),
                vocab.total_tokens()
            );
            Ok(())
        }
        Command::TrainBpe {
            corpus,
            output,
            merges,
        } => {
            let counts = preprocessed_counts(&corpus)?;
            let table = train_bpe(&counts, merges)?;
            table.save(&output)?;
            println!("learned {} merges", table.len());
            Ok(())
        }
        Command::Train(args) => run_train(*args),
        Command::Export { manifest, output } => {
            let manifest = RunManifest::load(&manifest)?;
            let (vocab, pipeline, params) = manifest::load_trained(&manifest)?;
            trainer::export_vectors(&params, &vocab, &pipeline, &output)?;
            println!("exported {} vectors to {}", vocab.len(), output.display());
            Ok(())
        }
        Command::EvalSim {
            manifest,
            dataset,
            dataset_id,
            report,
        } => {
            let manifest = RunManifest::load(&manifest)?;
            let (vocab, pipeline, params) = manifest::load_trained(&manifest)?;
            let pairs = eval::load_dataset(&dataset)?;
            let outcome = eval::evaluate_similarity(&pairs, &params, &pipeline, &vocab)?;
            let dataset_id = dataset_id.unwrap_or_else(|| {
                dataset
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "dataset".to_string())
            });
            println!(
                "{dataset_id}\t{}\tspearman={:.6}\toov_pairs={}",
                manifest.label, outcome.spearman, outcome.oov_pairs
            );
            if !outcome.zero_vector_words.is_empty() {
                println!(
                    "zero-vector words ({}): {}",
                    outcome.zero_vector_words.len(),
                    outcome.zero_vector_words.join(" ")
                );
            }
            if let Some(report_path) = report {
                append_report_row(
                    &report_path,
                    ReportRow {
                        dataset: dataset_id,
                        config_label: manifest.label.clone(),
                        spearman: outcome.spearman,
                        oov_pairs: outcome.oov_pairs,
                    },
                )?;
            }
            Ok(())
        }
        Command::CompareConfigs {
            results,
            meta,
            task,
            lang_type,
            facets,
            output,
        } => {
            let rows = eval::read_report(&results)?;
            let mut table = ResultsTable::default();
            for row in &rows {
                table.insert(&row.config_label, &row.dataset, row.spearman);
            }
            let meta = eval::read_dataset_meta(&meta)?;
            let facets: Vec<String> = facets
                .split(',')
                .map(|f| f.trim().to_string())
                .filter(|f| !f.is_empty())
                .collect();
            let (ranks, deltas) =
                eval::percentage_rank_matrix(&table, &meta, &facets, &task, &lang_type)?;
            let mut text = String::new();
            text.push_str(&format!("# task={task} language_type={lang_type}\n"));
            text.push_str("facet");
            for facet in &facets {
                text.push_str(&format!("\t{facet}"));
            }
            text.push('\n');
            for (i, facet) in facets.iter().enumerate() {
                text.push_str(facet);
                for j in 0..facets.len() {
                    text.push_str(&format!("\t{:.6}", deltas[[i, j]]));
                }
                text.push('\n');
            }
            text.push_str("# percentage ranks:");
            for (facet, rank) in facets.iter().zip(&ranks) {
                text.push_str(&format!(" {facet}={rank:.6}"));
            }
            text.push('\n');
            print!("{text}");
            if let Some(path) = output {
                std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            }
            Ok(())
        }
    }
}

fn preprocessed_counts(corpus: &Path) -> Result<HashMap<String, u64>, Error> {
    use std::io::BufRead;
    let file = std::fs::File::open(corpus).map_err(|e| Error::io(corpus, e))?;
    let reader = std::io::BufReader::new(file);
    let mut counts: HashMap<String, u64> = HashMap::new();
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io(corpus, e))?;
        for token in preprocess_line(&line) {
            *counts.entry(token).or_insert(0) += 1;
        }
    }
    if counts.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(counts)
}

fn append_report_row(path: &Path, row: ReportRow) -> Result<(), Error> {
    let mut rows = if path.exists() {
        eval::read_report(path)?
    } else {
        Vec::new()
    };
    rows.retain(|r| !(r.dataset == row.dataset && r.config_label == row.config_label));
    rows.push(row);
    eval::write_report(path, &rows)
}

/// Flat `key=value` configuration file; unknown keys are rejected so
/// typos surface instead of silently using defaults.
fn read_config_file(path: &Path) -> Result<HashMap<String, String>, Error> {
    const KNOWN: &[&str] = &[
        "label",
        "seg",
        "word-token",
        "tags",
        "pos",
        "comp",
        "dim",
        "position-cap",
        "attention-hidden",
        "heads",
        "ngram-min",
        "ngram-max",
        "ngram-buckets",
        "min-count",
        "epochs",
        "window",
        "negatives",
        "subsample",
        "lr",
        "batch-size",
        "seed",
        "workers",
    ];
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| {
            Error::parse(path, format!("line {}: expected key=value", lineno + 1))
        })?;
        let key = key.trim();
        if !KNOWN.contains(&key) {
            return Err(Error::parse(
                path,
                format!("line {}: unknown key `{key}`", lineno + 1),
            ));
        }
        values.insert(key.to_string(), value.trim().to_string());
    }
    Ok(values)
}

fn parse_file_value<T: std::str::FromStr>(
    file: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>, Error> {
    match file.get(key) {
        None => Ok(None),
        Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
            Error::InvalidConfig(format!("config file: bad value `{raw}` for `{key}`"))
        }),
    }
}

fn run_train(args: TrainArgs) -> Result<(), Error> {
    let file = match &args.config {
        Some(path) => read_config_file(path)?,
        None => HashMap::new(),
    };
    macro_rules! setting {
        ($flag:expr, $key:literal) => {
            match $flag {
                Some(v) => Some(v),
                None => parse_file_value(&file, $key)?,
            }
        };
    }

    let label = args.label.clone().or_else(|| file.get("label").cloned());
    let mut pipeline = match &label {
        Some(label) => parse_config_label(label)?,
        None => {
            let seg = setting!(args.seg.clone(), "seg").unwrap_or_else(|| "bpe".to_string());
            let segmenter = SegmenterKind::from_flag(&seg)?;
            let word_token =
                setting!(args.word_token.clone(), "word-token").unwrap_or_else(|| "w-".into());
            let tags = setting!(args.tags.clone(), "tags").unwrap_or_else(|| "off".into());
            let pos = setting!(args.pos.clone(), "pos").unwrap_or_else(|| "p-".into());
            let comp = setting!(args.comp.clone(), "comp").unwrap_or_else(|| "add".into());
            PipelineConfig {
                segmenter,
                word_token: match word_token.as_str() {
                    "ww" => true,
                    "w-" => false,
                    other => {
                        return Err(Error::InvalidConfig(format!(
                            "unknown word-token option `{other}`"
                        )))
                    }
                },
                tag_mode: match tags.as_str() {
                    "st" => TagMode::SubwordTag,
                    "off" => TagMode::Off,
                    other => {
                        return Err(Error::InvalidConfig(format!("unknown tag mode `{other}`")))
                    }
                },
                position_mode: match pos.as_str() {
                    "p-" => PositionMode::None,
                    "pp" => PositionMode::Additive,
                    "mp" => PositionMode::Multiplicative,
                    other => {
                        return Err(Error::InvalidConfig(format!(
                            "unknown position mode `{other}`"
                        )))
                    }
                },
                composition: match comp.as_str() {
                    "add" => Composition::Addition,
                    "att" => Composition::Attention,
                    "mtx" => Composition::MultiHeadAttention,
                    other => {
                        return Err(Error::InvalidConfig(format!(
                            "unknown composition `{other}`"
                        )))
                    }
                },
                ..PipelineConfig::default()
            }
        }
    };
    if let Some(dim) = setting!(args.dim, "dim") {
        pipeline.dim = dim;
    }
    if let Some(cap) = setting!(args.position_cap, "position-cap") {
        pipeline.position_cap = cap;
    }
    if let Some(hidden) = setting!(args.attention_hidden, "attention-hidden") {
        pipeline.attention_hidden = hidden;
    }
    if let Some(heads) = setting!(args.heads, "heads") {
        pipeline.heads = heads;
    }
    if let Some(n) = setting!(args.ngram_min, "ngram-min") {
        pipeline.ngram_min = n;
    }
    if let Some(n) = setting!(args.ngram_max, "ngram-max") {
        pipeline.ngram_max = n;
    }
    if let Some(b) = setting!(args.ngram_buckets, "ngram-buckets") {
        pipeline.ngram_buckets = Some(b);
    }
    pipeline.validate()?;

    let defaults = TrainConfig::default();
    let train = TrainConfig {
        epochs: setting!(args.epochs, "epochs").unwrap_or(defaults.epochs),
        window: setting!(args.window, "window").unwrap_or(defaults.window),
        negatives: setting!(args.negatives, "negatives").unwrap_or(defaults.negatives),
        subsample_t: setting!(args.subsample, "subsample").unwrap_or(defaults.subsample_t),
        lr0: setting!(args.lr, "lr").unwrap_or(defaults.lr0),
        batch_size: setting!(args.batch_size, "batch-size").unwrap_or(defaults.batch_size),
        seed: setting!(args.seed, "seed").unwrap_or(defaults.seed),
        workers: setting!(args.workers, "workers").unwrap_or(defaults.workers),
    };
    train.validate()?;
    let min_count = setting!(args.min_count, "min-count").unwrap_or(5);

    std::fs::create_dir_all(&args.outdir).map_err(|e| Error::io(&args.outdir, e))?;
    let vocab_path = args
        .vocab
        .clone()
        .unwrap_or_else(|| args.outdir.join("vocab.txt"));
    let mut manifest = RunManifest {
        label: pipeline.label(),
        pipeline,
        train,
        corpus: args.corpus.clone(),
        corpus_sha256: String::new(),
        min_count,
        artifacts: Artifacts {
            vocab: vocab_path,
            merges: args.merges.clone(),
            lexicon: args.lexicon.clone(),
            subword_vocab: args.outdir.join("subwords.txt"),
            checkpoint: args.outdir.join("model.ckpt"),
            vectors: args.outdir.join("vectors.txt"),
        },
        wall_clock_secs: 0.0,
    };
    let manifest_path = args.outdir.join("manifest.json");
    let summary = manifest::run_pipeline(&mut manifest, &manifest_path)?;
    println!(
        "{}: |V|={}, |S|={}, epoch mean losses {:?}",
        manifest.label,
        summary.vocab_size,
        summary.subword_vocab_size,
        summary
            .outcome
            .epoch_losses
            .iter()
            .map(|l| (l * 1e4).round() / 1e4)
            .collect::<Vec<_>>()
    );
    Ok(())
}
