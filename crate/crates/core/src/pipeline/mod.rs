//! End-to-end commands: build an index, extract features, train, score, and
//! curate the whitelist.

mod config;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};

pub use config::{
    EnsembleConfig, FeatureConfig, LsaConfig, Paths, PcaConfig, RunConfig, WhitelistConfig, DEFAULT_SEED,
};

use crate::corpus::{load_corpus, split_corpus, CorpusFormat, EssayRecord, Split};
use crate::error::{Error, Result};
use crate::grammar::{
    apply_corrections, check_grammar, grammar_error_coverage, grammar_error_density, parse_rules, GrammarFinding,
    GrammarRule,
};
use crate::model::{
    feature_names, pca_select, report_from_predictions, train_ensemble_with, EvaluationReport, FeatureVector,
    PcaSelection, ScoringModel,
};
use crate::par;
use crate::semantics::{
    build_entity_grid, build_index_with, coherence_features, default_rank, off_vocabulary_ratio, repetition_score,
    score_projection, CheatFlag, CheatReport, ContextScore, IndexEssay, SemanticIndex,
};
use crate::spelling::{
    check_spelling, spelling_error_coverage, spelling_error_density, write_atomic, Decision, Dictionary,
    SpellingFinding, StoreLock, WhitelistStore,
};
use crate::stylometrics::{flesch_kincaid_grade, lexical_density};
use crate::text::{Abbreviations, Document, WordClassLexicon};

pub const SCHEMA_VERSION: u32 = 1;

/// Linguistic resources shared by every essay of a run.
#[derive(Debug, Clone)]
pub struct Resources {
    pub lexicon: WordClassLexicon,
    pub abbreviations: Abbreviations,
    pub dictionary: Dictionary,
    pub rules: Vec<GrammarRule>,
    pub whitelist: WhitelistStore,
}

impl Resources {
    /// The bundled lexicon, abbreviations, dictionary and rules with an empty whitelist.
    pub fn standard() -> Self {
        Resources {
            lexicon: WordClassLexicon::standard(),
            abbreviations: Abbreviations::default(),
            dictionary: Dictionary::standard(),
            rules: GrammarRule::standard(),
            whitelist: WhitelistStore::default(),
        }
    }

    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let mut res = Resources::standard();
        let p = &cfg.paths;
        if let Some(path) = &p.lexicon {
            res.lexicon.merge_file(path)?;
        }
        if let Some(path) = &p.abbreviations {
            res.abbreviations.extend_file(path)?;
        }
        if let Some(path) = &p.dictionary {
            res.dictionary = Dictionary::from_file(path)?;
        }
        if let Some(path) = &p.rules {
            res.rules = parse_rules(path)?;
        }
        res.whitelist = match &p.whitelist {
            Some(path) => WhitelistStore::load_or_default(path, cfg.whitelist.threshold)?,
            None => WhitelistStore::with_threshold(cfg.whitelist.threshold),
        };
        Ok(res)
    }

    pub fn document(&self, text: &str) -> Document {
        Document::new(text, &self.lexicon, &self.abbreviations)
    }
}

/// Everything derived from one essay's text before corpus-level features.
#[derive(Debug, Clone)]
pub struct EssayAnalysis {
    pub doc: Document,
    pub grammar: Vec<GrammarFinding>,
    /// Re-parsed text after applying the grammar suggestions.
    pub corrected: Document,
    pub spelling: Vec<SpellingFinding>,
}

pub fn analyze(text: &str, res: &Resources, cfg: &RunConfig) -> EssayAnalysis {
    let doc = res.document(text);
    let grammar = check_grammar(&doc, &res.rules);
    let corrected = res.document(&apply_corrections(&doc, &grammar));
    let spelling = check_spelling(&doc, &res.dictionary, &res.whitelist, cfg.features.damping);
    EssayAnalysis {
        doc,
        grammar,
        corrected,
        spelling,
    }
}

/// Feature values plus the side information scoring reports expose.
#[derive(Debug, Clone, PartialEq)]
pub struct EssayFeatures {
    pub features: FeatureVector,
    pub coherence_degenerate: bool,
    pub context: ContextScore,
    pub cheat: CheatReport,
}

/// Computes the declared features; `exclude` drops one stored essay from the
/// context comparison.
pub fn essay_features(
    a: &EssayAnalysis,
    topic: &str,
    index: &SemanticIndex,
    res: &Resources,
    cfg: &RunConfig,
    exclude: Option<&str>,
) -> Result<EssayFeatures> {
    let doc = &a.doc;
    if doc.word_count() == 0 {
        return Err(Error::EmptyDocument);
    }
    let q = index.project(&a.corrected);
    let context = score_projection(index, &q, topic, &cfg.context, exclude)?;
    let coherence = coherence_features(&build_entity_grid(doc, &res.lexicon));
    let mut values = vec![
        grammar_error_density(&a.grammar, doc, None)?,
        grammar_error_density(&a.grammar, doc, Some(&cfg.severity))?,
        grammar_error_coverage(&a.grammar, doc, cfg.features.coverage_mode)?,
        spelling_error_density(&a.spelling, doc)?,
        spelling_error_coverage(&a.spelling, doc)?,
        flesch_kincaid_grade(doc)?,
        lexical_density(doc)?,
        context.max_cosine,
    ];
    values.extend_from_slice(&coherence.probabilities);
    let cheat = CheatReport::from_parts(
        repetition_score(doc),
        &context,
        off_vocabulary_ratio(doc, &res.dictionary, &res.whitelist, index),
        &cfg.cheat,
    );
    Ok(EssayFeatures {
        features: FeatureVector::new(values)?,
        coherence_degenerate: coherence.degenerate,
        context,
        cheat,
    })
}

/// LSA index over the grammar-corrected corpus texts.
pub fn index_from_analyses(records: &[EssayRecord], analyses: &[EssayAnalysis], cfg: &RunConfig) -> Result<SemanticIndex> {
    let essays: Vec<IndexEssay> = records
        .iter()
        .zip(analyses)
        .map(|(r, a)| IndexEssay {
            id: &r.essay_id,
            topic: &r.topic_id,
            doc: &a.corrected,
        })
        .collect();
    let k = cfg.lsa.k.unwrap_or_else(|| default_rank(records.len()));
    build_index_with(&essays, k, cfg.lsa.weighting, cfg.parallelism)
}

pub fn analyze_corpus(records: &[EssayRecord], res: &Resources, cfg: &RunConfig) -> Vec<EssayAnalysis> {
    par::map(cfg.parallelism, records, |r| analyze(&r.text, res, cfg))
}

pub fn build_corpus_index(records: &[EssayRecord], res: &Resources, cfg: &RunConfig) -> Result<SemanticIndex> {
    index_from_analyses(records, &analyze_corpus(records, res, cfg), cfg)
}

fn read_corpus(path: &Path) -> Result<Vec<EssayRecord>> {
    load_corpus(path, CorpusFormat::from_path(path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSummary {
    pub documents: usize,
    pub terms: usize,
    pub k: usize,
    pub topics: Vec<String>,
}

pub fn cmd_build_index(cfg: &RunConfig, corpus: &Path, out: &Path) -> Result<IndexSummary> {
    let records = read_corpus(corpus)?;
    let res = Resources::load(cfg)?;
    let index = build_corpus_index(&records, &res, cfg)?;
    index.save(out)?;
    Ok(IndexSummary {
        documents: index.len(),
        terms: index.terms.len(),
        k: index.k,
        topics: index.topics().into_iter().map(String::from).collect(),
    })
}

/// The configured index file, or one built from the configured corpus.
pub fn obtain_index(cfg: &RunConfig, res: &Resources, fallback: Option<(&[EssayRecord], &[EssayAnalysis])>) -> Result<SemanticIndex> {
    if let Some(path) = cfg.paths.index.as_deref().filter(|p| p.exists()) {
        return SemanticIndex::load(path);
    }
    if let Some((records, analyses)) = fallback {
        return index_from_analyses(records, analyses, cfg);
    }
    match &cfg.paths.corpus {
        Some(corpus) => build_corpus_index(&read_corpus(corpus)?, res, cfg),
        None => Err(Error::Config(
            "no semantic index: set paths.index (see build-index) or paths.corpus".into(),
        )),
    }
}

/// One extracted row.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedEssay {
    pub essay_id: String,
    pub topic_id: String,
    pub features: EssayFeatures,
    pub spelling: Vec<SpellingFinding>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractSummary {
    pub rows: usize,
    pub skipped: Vec<String>,
    pub features_path: PathBuf,
    pub cheats_path: PathBuf,
    /// Tokens that reached the whitelist threshold during this run.
    pub newly_pending: Vec<String>,
}

/// Feature rows for a corpus in input order; zero-word essays are skipped
/// (lenient) or abort the run.
pub fn extract_corpus(
    records: &[EssayRecord],
    res: &Resources,
    cfg: &RunConfig,
) -> Result<(Vec<ExtractedEssay>, Vec<String>)> {
    let analyses = analyze_corpus(records, res, cfg);
    let index = obtain_index(cfg, res, Some((records, &analyses)))?;
    let pairs: Vec<(&EssayRecord, &EssayAnalysis)> = records.iter().zip(&analyses).collect();
    let results = par::map(cfg.parallelism, &pairs, |(r, a)| {
        let exclude = index.document_ids.contains(&r.essay_id).then_some(r.essay_id.as_str());
        essay_features(a, &r.topic_id, &index, res, cfg, exclude)
    });
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (((r, a), result), _) in pairs.iter().zip(results).zip(0..) {
        match result {
            Ok(features) => {
                if features.coherence_degenerate {
                    warn!("essay `{}`: fewer than two sentences, coherence features are zero", r.essay_id);
                }
                rows.push(ExtractedEssay {
                    essay_id: r.essay_id.clone(),
                    topic_id: r.topic_id.clone(),
                    features,
                    spelling: a.spelling.clone(),
                });
            }
            Err(Error::EmptyDocument) if cfg.lenient => {
                warn!("essay `{}` has no words; skipped", r.essay_id);
                skipped.push(r.essay_id.clone());
            }
            Err(Error::EmptyDocument) => return Err(Error::EmptyEssay(r.essay_id.clone())),
            Err(e) => return Err(e),
        }
    }
    Ok((rows, skipped))
}

/// `features.csv` → `features.cheats.jsonl`
pub fn cheats_sidecar(features_path: &Path) -> PathBuf {
    features_path.with_extension("cheats.jsonl")
}

#[derive(Serialize)]
struct CheatLine<'a> {
    essay_id: &'a str,
    topic_id: &'a str,
    #[serde(flatten)]
    report: &'a CheatReport,
}

pub fn features_csv(names: &[String], rows: &[ExtractedEssay]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["essay_id".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for row in rows {
        let mut rec = vec![row.essay_id.clone()];
        rec.extend(row.features.features.values.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| Error::invalid(e.to_string()))
}

pub fn cmd_extract(cfg: &RunConfig, corpus: &Path, out: &Path) -> Result<ExtractSummary> {
    let records = read_corpus(corpus)?;
    let res = Resources::load(cfg)?;
    let (rows, skipped) = extract_corpus(&records, &res, cfg)?;
    write_atomic(out, &features_csv(&feature_names(), &rows)?)?;
    let mut jsonl = String::new();
    for row in &rows {
        jsonl.push_str(&serde_json::to_string(&CheatLine {
            essay_id: &row.essay_id,
            topic_id: &row.topic_id,
            report: &row.features.cheat,
        })?);
        jsonl.push('\n');
    }
    let cheats_path = cheats_sidecar(out);
    write_atomic(&cheats_path, jsonl.as_bytes())?;
    let mut newly_pending = Vec::new();
    if let (Some(store), true) = (&cfg.paths.whitelist, cfg.whitelist.tally) {
        let _lock = StoreLock::acquire(store)?;
        let mut wl = WhitelistStore::load_or_default(store, cfg.whitelist.threshold)?;
        for row in &rows {
            newly_pending.extend(wl.record_unknowns(&row.spelling));
        }
        wl.save(store)?;
        for t in &newly_pending {
            info!("`{t}` reached the whitelist threshold and awaits review");
        }
    }
    Ok(ExtractSummary {
        rows: rows.len(),
        skipped,
        features_path: out.to_path_buf(),
        cheats_path,
        newly_pending,
    })
}

/// Parsed features CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub names: Vec<String>,
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_features(path: &Path) -> Result<FeatureTable> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::invalid(format!("{}: {other:?}", path.display())),
    })?;
    let header = r.headers()?.clone();
    if header.get(0) != Some("essay_id") || header.len() < 2 {
        return Err(Error::invalid(format!("{}: header must start with essay_id", path.display())));
    }
    let names: Vec<String> = header.iter().skip(1).map(String::from).collect();
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::DimensionMismatch {
                expected: header.len(),
                actual: rec.len(),
            });
        }
        ids.push(rec[0].to_string());
        let values = rec
            .iter()
            .skip(1)
            .map(|v| {
                v.parse::<f64>().map_err(|_| Error::CorpusRow {
                    line: line + 2,
                    field: "feature".into(),
                    message: format!("`{v}` is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(values);
    }
    Ok(FeatureTable { names, ids, rows })
}

/// Pairs feature rows with corpus records. Corpus essays without a row (skipped
/// during extraction) are ignored; otherwise the orders must agree.
pub fn align(table: &FeatureTable, records: &[EssayRecord]) -> Result<Vec<EssayRecord>> {
    let present: BTreeSet<&str> = table.ids.iter().map(String::as_str).collect();
    let kept: Vec<&EssayRecord> = records.iter().filter(|r| present.contains(r.essay_id.as_str())).collect();
    for (i, id) in table.ids.iter().enumerate() {
        match kept.get(i) {
            Some(r) if r.essay_id == *id => {}
            other => {
                return Err(Error::Misaligned {
                    position: i,
                    feature_id: id.clone(),
                    corpus_id: other.map_or_else(|| "<none>".to_string(), |r| r.essay_id.clone()),
                })
            }
        }
    }
    Ok(kept.into_iter().cloned().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub schema_version: u32,
    pub mode: crate::model::EnsembleMode,
    pub seed: u64,
    pub train_n: usize,
    pub selected_features: Vec<String>,
    pub pca: Option<PcaSelection>,
    /// `None` when the partition's targets are constant.
    pub validation: Option<EvaluationReport>,
    pub test: Option<EvaluationReport>,
    pub warnings: Vec<String>,
}

/// Splits, selects features on the train partition, trains and evaluates.
pub fn train_model(table: &FeatureTable, records: &[EssayRecord], cfg: &RunConfig) -> Result<(ScoringModel, TrainReport)> {
    let aligned = align(table, records)?;
    let split = split_corpus(aligned, cfg.split, cfg.seed)?;
    let part = |s: Split| -> (Vec<Vec<f64>>, Vec<f64>) {
        split
            .iter()
            .zip(&table.rows)
            .filter(|(r, _)| r.split == s)
            .map(|(r, row)| (row.clone(), r.manual_score()))
            .unzip()
    };
    let (x_train, y_train) = part(Split::Train);
    if y_train.iter().all(|&y| y == y_train[0]) {
        return Err(Error::ConstantInput("the training target"));
    }
    let (selected, pca) = if cfg.pca.enabled {
        let sel = pca_select(&x_train, cfg.pca.variance_target, cfg.pca.top_per_component)?;
        (sel.selected.clone(), Some(sel))
    } else {
        ((0..table.names.len()).collect(), None)
    };
    let project = |x: &[Vec<f64>]| -> Vec<Vec<f64>> {
        x.iter().map(|row| selected.iter().map(|&i| row[i]).collect()).collect()
    };
    let ensemble = train_ensemble_with(
        &project(&x_train),
        &y_train,
        cfg.ensemble.mode,
        &cfg.ensemble.hyperparameters(),
        cfg.seed,
        cfg.parallelism,
    )?;
    let model = ScoringModel::new(table.names.clone(), selected.clone(), ensemble)?;
    let mut warnings = Vec::new();
    let mut eval = |name: &str, s: Split| -> Result<Option<EvaluationReport>> {
        let (x, y) = part(s);
        let raw = model
            .ensemble
            .predict_many(&project(&x), cfg.parallelism)?
            .into_iter()
            .map(|p| p.raw)
            .collect::<Vec<_>>();
        match report_from_predictions(&raw, &y) {
            Ok(r) => Ok(Some(r)),
            Err(Error::ConstantInput(_)) => {
                warnings.push(format!("{name} partition: constant targets or predictions, no correlation"));
                Ok(None)
            }
            Err(e) => Err(e),
        }
    };
    let validation = eval("validation", Split::Validation)?;
    let test = eval("test", Split::Test)?;
    let report = TrainReport {
        schema_version: SCHEMA_VERSION,
        mode: cfg.ensemble.mode,
        seed: cfg.seed,
        train_n: y_train.len(),
        selected_features: selected.iter().map(|&i| table.names[i].clone()).collect(),
        pca,
        validation,
        test,
        warnings,
    };
    Ok((model, report))
}

pub fn cmd_train(cfg: &RunConfig, features: &Path, corpus: &Path, model_out: &Path) -> Result<TrainReport> {
    let table = read_features(features)?;
    let records = read_corpus(corpus)?;
    let (model, report) = train_model(&table, &records, cfg)?;
    model.save(model_out)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub schema_version: u32,
    pub topic_id: String,
    pub score: f64,
    pub raw_score: f64,
    pub on_topic: bool,
    pub features: Vec<NamedValue>,
    pub coherence_degenerate: bool,
    /// Findings grouped by bucket name.
    pub grammar_findings: BTreeMap<String, Vec<GrammarFinding>>,
    pub spelling_findings: Vec<SpellingFinding>,
    pub cheat_flags: Vec<CheatFlag>,
    pub cheat: CheatReport,
}

/// A loaded model with everything needed to score new essays.
#[derive(Debug, Clone)]
pub struct Scorer {
    pub config: RunConfig,
    pub resources: Resources,
    pub index: SemanticIndex,
    pub model: ScoringModel,
}

impl Scorer {
    pub fn new(config: RunConfig, resources: Resources, index: SemanticIndex, model: ScoringModel) -> Result<Self> {
        if model.feature_names != feature_names() {
            return Err(Error::invalid("model was trained on a different feature layout"));
        }
        Ok(Scorer {
            config,
            resources,
            index,
            model,
        })
    }

    pub fn features(&self, text: &str, topic: &str) -> Result<(EssayAnalysis, EssayFeatures)> {
        let a = analyze(text, &self.resources, &self.config);
        let f = essay_features(&a, topic, &self.index, &self.resources, &self.config, None)?;
        Ok((a, f))
    }

    pub fn score(&self, text: &str, topic: &str) -> Result<ScoreReport> {
        let (a, f) = self.features(text, topic)?;
        let p = self.model.predict(&f.features.values)?;
        let mut grammar: BTreeMap<String, Vec<GrammarFinding>> = BTreeMap::new();
        for g in a.grammar {
            grammar.entry(g.category.name().to_string()).or_default().push(g);
        }
        Ok(ScoreReport {
            schema_version: SCHEMA_VERSION,
            topic_id: topic.to_string(),
            score: p.clamped,
            raw_score: p.raw,
            on_topic: f.context.on_topic,
            features: f
                .features
                .names
                .iter()
                .zip(&f.features.values)
                .map(|(n, &v)| NamedValue { name: n.clone(), value: v })
                .collect(),
            coherence_degenerate: f.coherence_degenerate,
            grammar_findings: grammar,
            spelling_findings: a.spelling,
            cheat_flags: f.cheat.flags.iter().copied().collect(),
            cheat: f.cheat,
        })
    }
}

pub fn cmd_score(cfg: &RunConfig, model: &Path, text: &str, topic: &str) -> Result<ScoreReport> {
    let model = ScoringModel::load(model)?;
    let res = Resources::load(cfg)?;
    let index = obtain_index(cfg, &res, None)?;
    Scorer::new(cfg.clone(), res, index, model)?.score(text, topic)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WhitelistCommand {
    ListPending,
    Accept(String),
    Reject(String),
    Stats,
}

/// Runs a whitelist subcommand and returns its printable output.
pub fn cmd_whitelist(store: &Path, threshold: u64, command: &WhitelistCommand) -> Result<String> {
    match command {
        WhitelistCommand::ListPending => {
            let wl = WhitelistStore::load_or_default(store, threshold)?;
            Ok(wl
                .pending
                .iter()
                .map(|t| format!("{t}\t{}\n", wl.tallies.get(t).copied().unwrap_or(0)))
                .collect())
        }
        WhitelistCommand::Stats => {
            let wl = WhitelistStore::load_or_default(store, threshold)?;
            Ok(format!(
                "threshold\t{}\naccepted\t{}\npending\t{}\ntallied\t{}\n",
                wl.threshold,
                wl.accepted.len(),
                wl.pending.len(),
                wl.tallies.len()
            ))
        }
        WhitelistCommand::Accept(token) | WhitelistCommand::Reject(token) => {
            let decision = if matches!(command, WhitelistCommand::Accept(_)) {
                Decision::Accept
            } else {
                Decision::Reject
            };
            let _lock = StoreLock::acquire(store)?;
            let mut wl = WhitelistStore::load_or_default(store, threshold)?;
            wl.resolve_pending(token, decision)?;
            wl.save(store)?;
            let verb = if decision == Decision::Accept { "accepted" } else { "rejected" };
            Ok(format!("{verb}\t{}\n", token.to_lowercase()))
        }
    }
}
