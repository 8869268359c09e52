//! Topical relevance through latent semantic analysis over word n-grams,
//! entity-grid coherence, and cheating heuristics.

mod cheat;
mod grid;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix, RANK_TOLERANCE};
use crate::par::{self, Parallelism};
use crate::spelling::write_atomic;
use crate::text::Document;

pub use cheat::{
    detect_cheating, off_vocabulary_ratio, repetition_score, CheatFlag, CheatReport, CheatThresholds,
};
pub use grid::{build_entity_grid, coherence_features, Coherence, EntityGrid, Role, TRANSITION_NAMES};

pub const NGRAM_MIN: usize = 1;
pub const NGRAM_MAX: usize = 5;
pub const DEFAULT_MAX_RANK: usize = 50;
pub const DEFAULT_CONTEXT_THRESHOLD: f64 = 0.3;
const INDEX_VERSION: u32 = 1;

/// Counts of every contiguous run of `n_min..=n_max` word tokens inside a
/// sentence, lowercased and joined by single spaces.
pub fn extract_ngrams(doc: &Document, n_min: usize, n_max: usize) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    let n_min = n_min.max(1);
    for words in doc.sentence_words() {
        for start in 0..words.len() {
            for n in n_min..=n_max {
                if start + n > words.len() {
                    break;
                }
                let gram = words[start..start + n]
                    .iter()
                    .map(|t| t.normalized.as_str())
                    .collect::<Vec<_>>()
                    .join(" ");
                *out.entry(gram).or_insert(0) += 1;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Tf,
    #[default]
    Tfidf,
}

/// One essay going into an index.
#[derive(Debug, Clone, Copy)]
pub struct IndexEssay<'a> {
    pub id: &'a str,
    pub topic: &'a str,
    pub doc: &'a Document,
}

/// Rank-k LSA space over the corpus n-gram vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticIndex {
    pub format_version: u32,
    pub weighting: Weighting,
    pub k: usize,
    /// Sorted; position is the term's row in `u`.
    pub terms: Vec<String>,
    pub idf: Vec<f64>,
    /// terms × k
    pub u: Matrix,
    pub sigma: Vec<f64>,
    /// docs × k, rows in essay order
    pub v: Matrix,
    pub document_ids: Vec<String>,
    pub topic_ids: Vec<String>,
    #[serde(skip)]
    lookup: HashMap<String, usize>,
}

/// Default rank for a corpus of `docs` essays.
pub fn default_rank(docs: usize) -> usize {
    DEFAULT_MAX_RANK.min(docs.saturating_sub(1)).max(1)
}

fn sparse_dot(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

pub fn build_index(essays: &[IndexEssay<'_>], k: usize, weighting: Weighting) -> Result<SemanticIndex> {
    build_index_with(essays, k, weighting, Parallelism::default())
}

pub fn build_index_with(
    essays: &[IndexEssay<'_>],
    k: usize,
    weighting: Weighting,
    mode: Parallelism,
) -> Result<SemanticIndex> {
    if k < 1 {
        return Err(Error::invalid("LSA rank k must be at least 1"));
    }
    if essays.len() < 2 {
        return Err(Error::invalid("an index needs at least 2 essays"));
    }
    let mut seen = BTreeSet::new();
    for e in essays {
        if !seen.insert(e.id) {
            return Err(Error::DuplicateEssay(e.id.to_string()));
        }
    }
    let counts = par::map(mode, essays, |e| extract_ngrams(e.doc, NGRAM_MIN, NGRAM_MAX));
    let mut df: BTreeMap<&str, u64> = BTreeMap::new();
    for c in &counts {
        for term in c.keys() {
            *df.entry(term.as_str()).or_insert(0) += 1;
        }
    }
    let docs = essays.len() as f64;
    let terms: Vec<String> = df.keys().map(|t| t.to_string()).collect();
    let idf: Vec<f64> = df
        .values()
        .map(|&d| match weighting {
            Weighting::Tf => 1.0,
            Weighting::Tfidf => (docs / d as f64).ln(),
        })
        .collect();
    let lookup: HashMap<String, usize> = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    // sparse columns, term indices ascending because counts are ordered maps
    let columns: Vec<Vec<(usize, f64)>> = counts
        .iter()
        .map(|c| {
            c.iter()
                .map(|(t, &n)| {
                    let i = lookup[t];
                    (i, n as f64 * idf[i])
                })
                .filter(|&(_, w)| w != 0.0)
                .collect()
        })
        .collect();
    if columns.iter().all(Vec::is_empty) {
        return Err(Error::invalid("index has no weighted terms (all essays empty or identical)"));
    }
    let n = essays.len();
    let rows = par::map_range(mode, n, |i| {
        (0..n)
            .map(|j| if j < i { 0.0 } else { sparse_dot(&columns[i], &columns[j]) })
            .collect::<Vec<f64>>()
    });
    let mut gram = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            gram.set(i, j, rows[i][j]);
            gram.set(j, i, rows[i][j]);
        }
    }
    let eig = symmetric_eigen(&gram);
    let top = eig.values[0];
    let keep: Vec<usize> = (0..n)
        .filter(|&j| top > 0.0 && eig.values[j] > top * RANK_TOLERANCE)
        .take(k)
        .collect();
    let r = keep.len();
    let sigma: Vec<f64> = keep.iter().map(|&j| eig.values[j].sqrt()).collect();
    let mut v = Matrix::zeros(n, r);
    for (jj, &j) in keep.iter().enumerate() {
        for d in 0..n {
            v.set(d, jj, eig.vectors[j][d]);
        }
    }
    let mut u = Matrix::zeros(terms.len(), r);
    for (d, col) in columns.iter().enumerate() {
        for &(t, w) in col {
            for j in 0..r {
                u.data[t * r + j] += w * v.get(d, j);
            }
        }
    }
    for t in 0..terms.len() {
        for j in 0..r {
            u.data[t * r + j] /= sigma[j];
        }
    }
    Ok(SemanticIndex {
        format_version: INDEX_VERSION,
        weighting,
        k: r,
        terms,
        idf,
        u,
        sigma,
        v,
        document_ids: essays.iter().map(|e| e.id.to_string()).collect(),
        topic_ids: essays.iter().map(|e| e.topic.to_string()).collect(),
        lookup,
    })
}

impl SemanticIndex {
    pub fn len(&self) -> usize {
        self.document_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.document_ids.is_empty()
    }

    pub fn term_index(&self, term: &str) -> Option<usize> {
        self.lookup.get(term).copied()
    }

    /// Whether a single word occurs anywhere in the indexed corpus.
    pub fn has_unigram(&self, word: &str) -> bool {
        !word.contains(' ') && self.lookup.contains_key(word)
    }

    /// Distinct topics, sorted.
    pub fn topics(&self) -> Vec<&str> {
        let set: BTreeSet<&str> = self.topic_ids.iter().map(String::as_str).collect();
        set.into_iter().collect()
    }

    pub fn stored_projection(&self, position: usize) -> &[f64] {
        self.v.row(position)
    }

    /// Fold-in `qᵀ U_k Σ_k⁻¹` of the document's weighted n-gram vector.
    pub fn project(&self, doc: &Document) -> Vec<f64> {
        self.project_counts(&extract_ngrams(doc, NGRAM_MIN, NGRAM_MAX))
    }

    pub fn project_counts(&self, counts: &BTreeMap<String, u64>) -> Vec<f64> {
        let k = self.k;
        let mut out = vec![0.0; k];
        for (term, &n) in counts {
            let Some(t) = self.term_index(term) else {
                continue;
            };
            let w = n as f64 * self.idf[t];
            if w == 0.0 {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o += w * self.u.data[t * k + j];
            }
        }
        for (o, s) in out.iter_mut().zip(&self.sigma) {
            *o /= s;
        }
        out
    }

    /// Cosine between two projections, compared in the Σ-scaled space.
    pub fn similarity(&self, a: &[f64], b: &[f64]) -> f64 {
        let sa: Vec<f64> = a.iter().zip(&self.sigma).map(|(x, s)| x * s).collect();
        let sb: Vec<f64> = b.iter().zip(&self.sigma).map(|(x, s)| x * s).collect();
        cosine(&sa, &sb)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        write_atomic(path, json.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SemanticIndex::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut index: SemanticIndex = serde_json::from_str(text)?;
        if index.format_version != INDEX_VERSION {
            return Err(Error::FormatVersion {
                what: "semantic index",
                found: index.format_version,
                expected: INDEX_VERSION,
            });
        }
        let t = index.terms.len();
        let d = index.document_ids.len();
        let k = index.k;
        let consistent = index.idf.len() == t
            && index.sigma.len() == k
            && (index.u.rows, index.u.cols, index.u.data.len()) == (t, k, t * k)
            && (index.v.rows, index.v.cols, index.v.data.len()) == (d, k, d * k)
            && index.topic_ids.len() == d;
        if !consistent {
            return Err(Error::invalid("semantic index file has inconsistent dimensions"));
        }
        index.lookup = index.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        if index.lookup.len() != t {
            return Err(Error::invalid("semantic index file has duplicate terms"));
        }
        Ok(index)
    }
}

pub fn project_essay(index: &SemanticIndex, doc: &Document) -> Vec<f64> {
    index.project(doc)
}

/// Cosine similarity; zero when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Which stored essays a query is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextScope {
    #[default]
    SameTopic,
    Corpus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContextConfig {
    pub threshold: f64,
    pub topic_thresholds: BTreeMap<String, f64>,
    pub scope: ContextScope,
}

impl Default for ContextConfig {
    fn default() -> Self {
        ContextConfig {
            threshold: DEFAULT_CONTEXT_THRESHOLD,
            topic_thresholds: BTreeMap::new(),
            scope: ContextScope::SameTopic,
        }
    }
}

impl ContextConfig {
    pub fn threshold_for(&self, topic: &str) -> f64 {
        self.topic_thresholds.get(topic).copied().unwrap_or(self.threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextScore {
    pub max_cosine: f64,
    pub on_topic: bool,
    /// Stored essay achieving the maximum.
    pub best_match: Option<String>,
}

pub fn context_score(index: &SemanticIndex, doc: &Document, topic: &str, config: &ContextConfig) -> Result<ContextScore> {
    context_score_excluding(index, doc, topic, config, None)
}

/// As [`context_score`], skipping the stored essay named `exclude` (used when
/// scoring corpus essays against an index that contains them).
pub fn context_score_excluding(
    index: &SemanticIndex,
    doc: &Document,
    topic: &str,
    config: &ContextConfig,
    exclude: Option<&str>,
) -> Result<ContextScore> {
    let q = index.project(doc);
    score_projection(index, &q, topic, config, exclude)
}

pub fn score_projection(
    index: &SemanticIndex,
    q: &[f64],
    topic: &str,
    config: &ContextConfig,
    exclude: Option<&str>,
) -> Result<ContextScore> {
    if !index.topic_ids.iter().any(|t| t == topic) {
        return Err(Error::UnknownTopic {
            topic: topic.to_string(),
            known: index.topics().join(", "),
        });
    }
    let mut best: Option<(f64, usize)> = None;
    for d in 0..index.len() {
        if config.scope == ContextScope::SameTopic && index.topic_ids[d] != topic {
            continue;
        }
        if exclude == Some(index.document_ids[d].as_str()) {
            continue;
        }
        let c = index.similarity(q, index.stored_projection(d));
        if best.is_none_or(|(b, _)| c > b) {
            best = Some((c, d));
        }
    }
    let zero_query = q.iter().all(|&x| x == 0.0);
    match best {
        Some((c, d)) if !zero_query => Ok(ContextScore {
            max_cosine: c,
            on_topic: c > config.threshold_for(topic),
            best_match: Some(index.document_ids[d].clone()),
        }),
        _ => Ok(ContextScore {
            max_cosine: 0.0,
            on_topic: false,
            best_match: None,
        }),
    }
}
