//! Rated essay corpora: ingestion, deterministic splitting and inter-rater
//! agreement.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_SCORE: i64 = 1;
pub const MAX_SCORE: i64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
    #[default]
    Unassigned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssayRecord {
    pub essay_id: String,
    pub topic_id: String,
    pub text: String,
    pub rater_scores: Vec<i64>,
    #[serde(default, skip_serializing_if = "is_unassigned")]
    pub split: Split,
}

fn is_unassigned(s: &Split) -> bool {
    *s == Split::Unassigned
}

impl EssayRecord {
    pub fn new(
        essay_id: impl Into<String>,
        topic_id: impl Into<String>,
        text: impl Into<String>,
        rater_scores: Vec<i64>,
    ) -> Self {
        EssayRecord {
            essay_id: essay_id.into(),
            topic_id: topic_id.into(),
            text: text.into(),
            rater_scores,
            split: Split::Unassigned,
        }
    }

    /// Regression target: the arithmetic mean of the rater scores.
    pub fn manual_score(&self) -> f64 {
        let sum: i64 = self.rater_scores.iter().sum();
        sum as f64 / self.rater_scores.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Csv,
    Jsonl,
}

impl CorpusFormat {
    /// Guesses the format from a file extension; anything but `.csv` is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

const CSV_HEADER: [&str; 5] = ["essay_id", "topic_id", "score_r1", "score_r2", "text"];

fn normalize_newlines(text: &str) -> String {
    text.replace("\r\n", "\n").replace('\r', "\n")
}

fn validate(record: &EssayRecord, line: usize) -> Result<()> {
    let row_err = |field: &str, message: String| Error::CorpusRow {
        line,
        field: field.to_string(),
        message,
    };
    if record.essay_id.trim().is_empty() {
        return Err(row_err("essay_id", "empty".into()));
    }
    if record.text.trim().is_empty() {
        return Err(row_err("text", "empty after trimming".into()));
    }
    if record.rater_scores.is_empty() {
        return Err(row_err("rater_scores", "no scores".into()));
    }
    for &s in &record.rater_scores {
        if !(MIN_SCORE..=MAX_SCORE).contains(&s) {
            return Err(row_err(
                "rater_scores",
                format!("score {s} outside [{MIN_SCORE},{MAX_SCORE}]"),
            ));
        }
    }
    Ok(())
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<EssayRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let records = match format {
        CorpusFormat::Csv => read_csv(BufReader::new(file))?,
        CorpusFormat::Jsonl => read_jsonl(BufReader::new(file))?,
    };
    let mut seen = HashSet::new();
    for r in &records {
        if !seen.insert(r.essay_id.as_str()) {
            return Err(Error::DuplicateEssay(r.essay_id.clone()));
        }
    }
    Ok(records)
}

fn read_csv<R: std::io::Read>(reader: R) -> Result<Vec<EssayRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::CorpusRow {
            line: 1,
            field: "header".into(),
            message: format!("expected `{}`", CSV_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::CorpusRow {
                line,
                field: "row".into(),
                message: e.to_string(),
            }
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let score = |idx: usize, name: &str| -> Result<i64> {
            row[idx].trim().parse::<i64>().map_err(|_| Error::CorpusRow {
                line,
                field: name.to_string(),
                message: format!("`{}` is not an integer", &row[idx]),
            })
        };
        let record = EssayRecord {
            essay_id: row[0].to_string(),
            topic_id: row[1].to_string(),
            rater_scores: vec![score(2, "score_r1")?, score(3, "score_r2")?],
            text: normalize_newlines(&row[4]),
            split: Split::Unassigned,
        };
        validate(&record, line)?;
        out.push(record);
    }
    Ok(out)
}

#[derive(Deserialize)]
struct JsonRow {
    essay_id: String,
    topic_id: String,
    rater_scores: Vec<serde_json::Value>,
    text: String,
    #[serde(default)]
    split: Split,
}

fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<EssayRecord>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::CorpusRow {
            line: line_no,
            field: "line".into(),
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonRow = serde_json::from_str(&line).map_err(|e| Error::CorpusRow {
            line: line_no,
            field: json_field_hint(&e),
            message: e.to_string(),
        })?;
        let mut scores = Vec::with_capacity(row.rater_scores.len());
        for v in &row.rater_scores {
            match v.as_i64() {
                Some(s) => scores.push(s),
                None => {
                    return Err(Error::CorpusRow {
                        line: line_no,
                        field: "rater_scores".into(),
                        message: format!("`{v}` is not an integer"),
                    })
                }
            }
        }
        let record = EssayRecord {
            essay_id: row.essay_id,
            topic_id: row.topic_id,
            text: normalize_newlines(&row.text),
            rater_scores: scores,
            split: row.split,
        };
        validate(&record, line_no)?;
        out.push(record);
    }
    Ok(out)
}

fn json_field_hint(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    ["essay_id", "topic_id", "rater_scores", "text", "split"]
        .iter()
        .find(|f| msg.contains(*f))
        .map_or_else(|| "record".to_string(), |f| f.to_string())
}

/// Writes records in either corpus format. CSV output requires exactly two
/// rater scores per record, matching the CSV header.
pub fn write_corpus(path: &Path, format: CorpusFormat, records: &[EssayRecord]) -> Result<()> {
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    match format {
        CorpusFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut file);
            w.write_record(CSV_HEADER)?;
            for r in records {
                if r.rater_scores.len() != 2 {
                    return Err(Error::invalid(format!(
                        "essay `{}`: CSV corpora carry exactly two rater scores",
                        r.essay_id
                    )));
                }
                w.write_record([
                    r.essay_id.as_str(),
                    r.topic_id.as_str(),
                    &r.rater_scores[0].to_string(),
                    &r.rater_scores[1].to_string(),
                    r.text.as_str(),
                ])?;
            }
            w.flush().map_err(|e| Error::io(path, e))?;
        }
        CorpusFormat::Jsonl => {
            for r in records {
                serde_json::to_writer(&mut file, r)?;
                file.write_all(b"\n").map_err(|e| Error::io(path, e))?;
            }
        }
    }
    Ok(())
}

/// Split fractions for (train, validation, test).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.6,
            validation: 0.2,
            test: 0.2,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self> {
        let r = SplitRatios {
            train,
            validation,
            test,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.train, self.validation, self.test];
        if all.iter().any(|&x| x <= 0.0 || !x.is_finite()) {
            return Err(Error::invalid("split ratios must be positive"));
        }
        if (all.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("split ratios must sum to 1"));
        }
        Ok(())
    }

    /// Partition sizes for `n` records: floor allocation for validation and
    /// test, remainder to train. Validation and test get at least one record
    /// each.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let floor = |r: f64| ((n as f64) * r + 1e-9).floor() as usize;
        let mut val = floor(self.validation);
        let mut test = floor(self.test);
        let mut train = floor(self.train);
        train += n - (train + val + test);
        for part in [&mut val, &mut test] {
            if *part == 0 && train > 1 {
                *part = 1;
                train -= 1;
            }
        }
        (train, val, test)
    }
}

/// Assigns every record to a partition. The shuffle is driven only by `seed`,
/// so identical inputs always produce the same assignment.
pub fn split_corpus(
    mut records: Vec<EssayRecord>,
    ratios: SplitRatios,
    seed: u64,
) -> Result<Vec<EssayRecord>> {
    ratios.validate()?;
    if records.len() < 3 {
        return Err(Error::invalid(format!(
            "need at least 3 records to populate train/validation/test, got {}",
            records.len()
        )));
    }
    let (train, val, _) = ratios.sizes(records.len());
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    for (rank, &idx) in order.iter().enumerate() {
        records[idx].split = if rank < train {
            Split::Train
        } else if rank < train + val {
            Split::Validation
        } else {
            Split::Test
        };
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaWeighting {
    #[default]
    Linear,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kappa {
    pub value: f64,
    /// Set when chance-expected disagreement is zero and the value was
    /// defined as 1.0 instead of computed.
    pub degenerate: bool,
}

/// Cohen's weighted kappa over the fixed 1..=10 score scale.
pub fn cohen_weighted_kappa(a: &[i64], b: &[i64], weighting: KappaWeighting) -> Result<Kappa> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "rater sequences differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::invalid("kappa needs at least two rated items"));
    }
    if let Some(s) = a
        .iter()
        .chain(b)
        .find(|s| !(MIN_SCORE..=MAX_SCORE).contains(*s))
    {
        return Err(Error::invalid(format!("score {s} outside [1,10]")));
    }
    const K: usize = (MAX_SCORE - MIN_SCORE + 1) as usize;
    let n = a.len() as f64;
    let mut observed = [[0.0f64; K]; K];
    let mut row = [0.0f64; K];
    let mut col = [0.0f64; K];
    for (&x, &y) in a.iter().zip(b) {
        let (i, j) = ((x - MIN_SCORE) as usize, (y - MIN_SCORE) as usize);
        observed[i][j] += 1.0 / n;
        row[i] += 1.0 / n;
        col[j] += 1.0 / n;
    }
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..K {
        for j in 0..K {
            let d = i.abs_diff(j) as f64 / (K - 1) as f64;
            let w = match weighting {
                KappaWeighting::Linear => d,
                KappaWeighting::Quadratic => d * d,
            };
            num += w * observed[i][j];
            den += w * row[i] * col[j];
        }
    }
    if den <= f64::EPSILON * 16.0 {
        log::warn!("kappa: no chance disagreement, defining kappa as 1.0");
        return Ok(Kappa {
            value: 1.0,
            degenerate: true,
        });
    }
    Ok(Kappa {
        value: 1.0 - num / den,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recs(n: usize) -> Vec<EssayRecord> {
        (0..n)
            .map(|i| EssayRecord::new(format!("e{i}"), "t", "some text", vec![5, 6]))
            .collect()
    }

    fn counts(records: &[EssayRecord]) -> (usize, usize, usize) {
        let c = |s| records.iter().filter(|r| r.split == s).count();
        (c(Split::Train), c(Split::Validation), c(Split::Test))
    }

    #[test]
    fn ten_records_split_six_two_two() {
        let out = split_corpus(recs(10), SplitRatios::default(), 7).unwrap();
        assert_eq!(counts(&out), (6, 2, 2));
    }

    #[test]
    fn nine_records_floor_then_remainder_to_train() {
        // floor(5.4)=5, floor(1.8)=1, floor(1.8)=1; the two leftover records go to train
        let out = split_corpus(recs(9), SplitRatios::default(), 1).unwrap();
        assert_eq!(counts(&out), (7, 1, 1));
    }

    #[test]
    fn split_is_seed_deterministic() {
        let a = split_corpus(recs(37), SplitRatios::default(), 99).unwrap();
        let b = split_corpus(recs(37), SplitRatios::default(), 99).unwrap();
        assert_eq!(a, b);
        let c = split_corpus(recs(37), SplitRatios::default(), 100).unwrap();
        assert_ne!(
            a.iter().map(|r| r.split).collect::<Vec<_>>(),
            c.iter().map(|r| r.split).collect::<Vec<_>>()
        );
    }

    #[test]
    fn tiny_corpora() {
        assert!(split_corpus(recs(2), SplitRatios::default(), 0).is_err());
        let out = split_corpus(recs(3), SplitRatios::default(), 0).unwrap();
        assert_eq!(counts(&out), (1, 1, 1));
    }

    #[test]
    fn bad_ratios_rejected() {
        assert!(SplitRatios::new(0.5, 0.2, 0.2).is_err());
        assert!(SplitRatios::new(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn manual_score_is_mean() {
        let r = EssayRecord::new("a", "t", "x", vec![6, 9]);
        assert_eq!(r.manual_score(), 7.5);
    }

    #[test]
    fn kappa_perfect_and_reversed() {
        let a = [1, 3, 5, 7, 9, 2];
        assert!((cohen_weighted_kappa(&a, &a, KappaWeighting::Linear).unwrap().value - 1.0).abs() < 1e-12);
        // o puts 1/2 on each off-diagonal cell, e puts 1/4 on all four cells:
        // 1 - (1/9) / (1/18) = -1
        let k = cohen_weighted_kappa(&[1, 1, 2, 2], &[2, 2, 1, 1], KappaWeighting::Linear).unwrap();
        assert!((k.value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_degenerate_constant_raters() {
        let k = cohen_weighted_kappa(&[4, 4, 4], &[4, 4, 4], KappaWeighting::Quadratic).unwrap();
        assert_eq!(k.value, 1.0);
        assert!(k.degenerate);
    }

    #[test]
    fn kappa_errors() {
        assert!(cohen_weighted_kappa(&[1, 2], &[1], KappaWeighting::Linear).is_err());
        assert!(cohen_weighted_kappa(&[1, 11], &[1, 2], KappaWeighting::Linear).is_err());
        assert!(cohen_weighted_kappa(&[1], &[1], KappaWeighting::Linear).is_err());
    }

    #[test]
    fn newline_normalization() {
        assert_eq!(normalize_newlines("a\r\nb\rc\n"), "a\nb\nc\n");
    }
}
