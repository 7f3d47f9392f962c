//! Word similarity/relatedness evaluation with on-the-fly composition of
//! out-of-vocabulary words, and the percentage-rank comparison of
//! configurations across tasks and language types.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1};

use crate::corpus::{preprocess_line, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{compose_word, ModelParameters};
use crate::segmentation::SubwordPipeline;

/// One evaluation pair with its gold score and OOV flags.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPair {
    pub word_a: String,
    pub word_b: String,
    pub gold: f64,
    pub oov_a: bool,
    pub oov_b: bool,
}

/// Loads `word1<TAB>word2<TAB>score` lines (comma-separated accepted);
/// `#`-prefixed lines are comments.
pub fn load_dataset(path: &Path) -> Result<Vec<(String, String, f64)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut pairs = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = if trimmed.contains('\t') {
            trimmed.split('\t').collect()
        } else {
            trimmed.split(',').collect()
        };
        if fields.len() < 3 {
            return Err(Error::parse(
                path,
                format!("line {}: expected word1, word2, score", lineno + 1),
            ));
        }
        let score: f64 = fields[2].trim().parse().map_err(|_| {
            Error::parse(
                path,
                format!("line {}: bad score `{}`", lineno + 1, fields[2]),
            )
        })?;
        if !score.is_finite() {
            return Err(Error::parse(
                path,
                format!("line {}: non-finite score", lineno + 1),
            ));
        }
        pairs.push((
            fields[0].trim().to_string(),
            fields[1].trim().to_string(),
            score,
        ));
    }
    if pairs.is_empty() {
        return Err(Error::parse(path, "no evaluation pairs"));
    }
    Ok(pairs)
}

/// Cosine similarity; defined as 0 when either vector is zero so fully
/// unknown words yield a neutral prediction instead of failing.
pub fn cosine(u: ArrayView1<f64>, v: ArrayView1<f64>) -> f64 {
    let nu = u.dot(&u).sqrt();
    let nv = v.dot(&v).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    u.dot(&v) / (nu * nv)
}

/// Fractional (average) ranks, 1-based; ties share the mean rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mean_rank = (i + j + 2) as f64 / 2.0; // 1-based positions i+1..=j+1
        for &idx in &order[i..=j] {
            ranks[idx] = mean_rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rank correlation: Pearson correlation of fractional ranks,
/// ties averaged.
pub fn spearman(pred: &[f64], gold: &[f64]) -> Result<f64> {
    if pred.len() != gold.len() || pred.len() < 2 {
        return Err(Error::DegenerateRanking);
    }
    let rp = average_ranks(pred);
    let rg = average_ranks(gold);
    let n = rp.len() as f64;
    let mean_p = rp.iter().sum::<f64>() / n;
    let mean_g = rg.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_p = 0.0;
    let mut var_g = 0.0;
    for i in 0..rp.len() {
        let dp = rp[i] - mean_p;
        let dg = rg[i] - mean_g;
        cov += dp * dg;
        var_p += dp * dp;
        var_g += dg * dg;
    }
    if var_p == 0.0 || var_g == 0.0 {
        return Err(Error::DegenerateRanking);
    }
    Ok(cov / (var_p.sqrt() * var_g.sqrt()))
}

/// Outcome of scoring one dataset with one trained model.
#[derive(Debug, Clone)]
pub struct SimilarityOutcome {
    pub spearman: f64,
    /// Pairs containing at least one out-of-vocabulary word.
    pub oov_pairs: usize,
    pub pairs: Vec<EvalPair>,
    /// Words whose segmentation produced no known subword at all; they
    /// were scored with a zero vector.
    pub zero_vector_words: Vec<String>,
}

/// Scores every pair: both words (in-vocabulary and OOV alike) are
/// composed through the same inference pipeline, nothing is skipped.
pub fn evaluate_similarity(
    dataset: &[(String, String, f64)],
    params: &ModelParameters,
    pipeline: &SubwordPipeline,
    vocab: &Vocabulary,
) -> Result<SimilarityOutcome> {
    if dataset.is_empty() {
        return Err(Error::InvalidConfig("empty evaluation dataset".into()));
    }
    let mut zero_vector_words = Vec::new();
    let mut vector_of = |word: &str| -> Result<Array1<f64>> {
        let seq = pipeline.sequence(word)?;
        if seq.is_empty() {
            zero_vector_words.push(word.to_string());
            return Ok(Array1::zeros(params.dim));
        }
        Ok(compose_word(&seq, params, &pipeline.config, false)?.word_vector)
    };

    let mut pairs = Vec::with_capacity(dataset.len());
    let mut pred = Vec::with_capacity(dataset.len());
    let mut gold = Vec::with_capacity(dataset.len());
    for (raw_a, raw_b, score) in dataset {
        let word_a = normalize_word(raw_a);
        let word_b = normalize_word(raw_b);
        let va = vector_of(&word_a)?;
        let vb = vector_of(&word_b)?;
        pred.push(cosine(va.view(), vb.view()));
        gold.push(*score);
        pairs.push(EvalPair {
            oov_a: vocab.id(&word_a).is_none(),
            oov_b: vocab.id(&word_b).is_none(),
            word_a,
            word_b,
            gold: *score,
        });
    }
    let rho = spearman(&pred, &gold)?;
    let oov_pairs = pairs.iter().filter(|p| p.oov_a || p.oov_b).count();
    Ok(SimilarityOutcome {
        spearman: rho,
        oov_pairs,
        pairs,
        zero_vector_words,
    })
}

/// Applies the corpus preprocessing to an evaluation word.
fn normalize_word(raw: &str) -> String {
    preprocess_line(raw).join("")
}

/// Scores keyed by (configuration label, dataset id).
#[derive(Debug, Clone, Default)]
pub struct ResultsTable {
    scores: HashMap<(String, String), f64>,
}

impl ResultsTable {
    pub fn insert(&mut self, config_label: &str, dataset: &str, score: f64) {
        self.scores
            .insert((config_label.to_string(), dataset.to_string()), score);
    }

    pub fn get(&self, config_label: &str, dataset: &str) -> Option<f64> {
        self.scores
            .get(&(config_label.to_string(), dataset.to_string()))
            .copied()
    }

    pub fn labels(&self) -> BTreeSet<String> {
        self.scores.keys().map(|(l, _)| l.clone()).collect()
    }
}

/// Dataset grouping used by the percentage-rank comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetMeta {
    pub task: String,
    pub language: String,
    pub language_type: String,
}

fn entails(label: &str, facet: &str) -> bool {
    let tokens: BTreeSet<&str> = label.split('.').collect();
    facet.split('.').all(|t| tokens.contains(t))
}

/// Percentile of each score among its dataset's configuration scores:
/// (rank - 1) / (n - 1) with average ranks for ties.
fn percentiles(scores: &[f64]) -> Vec<f64> {
    let n = scores.len();
    if n == 1 {
        return vec![0.5];
    }
    average_ranks(scores)
        .into_iter()
        .map(|r| (r - 1.0) / (n as f64 - 1.0))
        .collect()
}

/// Percentage rank per facet, averaged over: 1) the task's datasets
/// within each language, 2) the full configurations entailing the facet,
/// 3) the languages of the requested type.
pub fn facet_percentage_ranks(
    results: &ResultsTable,
    meta: &HashMap<String, DatasetMeta>,
    facets: &[String],
    task: &str,
    language_type: &str,
) -> Result<Vec<f64>> {
    let in_scope: Vec<(&String, &DatasetMeta)> = meta
        .iter()
        .filter(|(_, m)| m.task == task && m.language_type == language_type)
        .collect();
    if in_scope.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no datasets for task `{task}` and language type `{language_type}`"
        )));
    }
    let labels: Vec<String> = results.labels().into_iter().collect();
    if labels.is_empty() {
        return Err(Error::MissingCells(vec![]));
    }

    // Complete-coverage check before any arithmetic.
    let mut missing = Vec::new();
    for (dataset, _) in &in_scope {
        for label in &labels {
            if results.get(label, dataset).is_none() {
                missing.push((label.clone(), (*dataset).clone()));
            }
        }
    }
    if !missing.is_empty() {
        missing.sort();
        return Err(Error::MissingCells(missing));
    }

    // Per-dataset percentiles for every configuration.
    let mut per_dataset: HashMap<&str, Vec<f64>> = HashMap::new();
    for (dataset, _) in &in_scope {
        let scores: Vec<f64> = labels
            .iter()
            .map(|l| results.get(l, dataset).expect("coverage checked"))
            .collect();
        per_dataset.insert(dataset.as_str(), percentiles(&scores));
    }

    // Level 1: average datasets of the task within each language.
    let mut languages: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (dataset, m) in &in_scope {
        languages
            .entry(m.language.as_str())
            .or_default()
            .push(dataset.as_str());
    }
    let mut per_language: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (language, datasets) in &languages {
        let mut ranks = vec![0.0; labels.len()];
        for dataset in datasets {
            for (i, r) in per_dataset[dataset].iter().enumerate() {
                ranks[i] += r / datasets.len() as f64;
            }
        }
        per_language.insert(language, ranks);
    }

    // Levels 2 and 3: average entailed configurations, then languages.
    let mut facet_ranks = Vec::with_capacity(facets.len());
    for facet in facets {
        let entailed: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, l)| entails(l, facet))
            .map(|(i, _)| i)
            .collect();
        if entailed.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "facet `{facet}` matches no configuration in the results"
            )));
        }
        let mut over_languages = 0.0;
        for ranks in per_language.values() {
            let over_configs: f64 =
                entailed.iter().map(|&i| ranks[i]).sum::<f64>() / entailed.len() as f64;
            over_languages += over_configs / per_language.len() as f64;
        }
        facet_ranks.push(over_languages);
    }
    Ok(facet_ranks)
}

/// Pairwise differences row - column; antisymmetric with a zero diagonal.
pub fn pairwise_deltas(ranks: &[f64]) -> Array2<f64> {
    let n = ranks.len();
    Array2::from_shape_fn((n, n), |(i, j)| ranks[i] - ranks[j])
}

/// Full comparison: facet percentage ranks followed by their pairwise
/// delta matrix.
pub fn percentage_rank_matrix(
    results: &ResultsTable,
    meta: &HashMap<String, DatasetMeta>,
    facets: &[String],
    task: &str,
    language_type: &str,
) -> Result<(Vec<f64>, Array2<f64>)> {
    let ranks = facet_percentage_ranks(results, meta, facets, task, language_type)?;
    let deltas = pairwise_deltas(&ranks);
    Ok((ranks, deltas))
}

/// One row of the machine-readable results report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub dataset: String,
    pub config_label: String,
    pub spearman: f64,
    pub oov_pairs: usize,
}

pub fn write_report(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "dataset,config_label,spearman,oov_pairs").map_err(|e| Error::io(path, e))?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{}",
            row.dataset, row.config_label, row.spearman, row.oov_pairs
        )
        .map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub fn read_report(path: &Path) -> Result<Vec<ReportRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut rows = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if lineno == 0 || line.trim().is_empty() {
            continue; // header
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                path,
                format!("line {}: expected 4 columns", lineno + 1),
            ));
        }
        rows.push(ReportRow {
            dataset: fields[0].to_string(),
            config_label: fields[1].to_string(),
            spearman: fields[2]
                .parse()
                .map_err(|_| Error::parse(path, format!("line {}: bad spearman", lineno + 1)))?,
            oov_pairs: fields[3]
                .parse()
                .map_err(|_| Error::parse(path, format!("line {}: bad oov count", lineno + 1)))?,
        });
    }
    Ok(rows)
}

/// `dataset<TAB>task<TAB>language<TAB>language_type` per line.
pub fn read_dataset_meta(path: &Path) -> Result<HashMap<String, DatasetMeta>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut meta = HashMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                path,
                format!(
                    "line {}: expected dataset, task, language, language_type",
                    lineno + 1
                ),
            ));
        }
        meta.insert(
            fields[0].to_string(),
            DatasetMeta {
                task: fields[1].to_string(),
                language: fields[2].to_string(),
                language_type: fields[3].to_string(),
            },
        );
    }
    Ok(meta)
}
