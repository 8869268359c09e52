//! Dictionary-based misspelling detection, damped repeat penalties, and the
//! self-correcting whitelist of nonnative spellings.

mod whitelist;

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::Document;

pub use whitelist::{Decision, StoreLock, WhitelistStore, DEFAULT_THRESHOLD};
pub(crate) use whitelist::write_atomic;

const DEFAULT_DICTIONARY: &str = include_str!("../../data/dictionary.txt");

/// Standard-English reference vocabulary, stored lowercase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dictionary {
    words: HashSet<String>,
}

impl Dictionary {
    pub fn standard() -> Self {
        static CACHE: std::sync::OnceLock<Dictionary> = std::sync::OnceLock::new();
        CACHE.get_or_init(|| Dictionary::parse(DEFAULT_DICTIONARY)).clone()
    }

    pub fn parse(text: &str) -> Self {
        Dictionary::from_words(text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')))
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Dictionary {
            words: words.into_iter().map(|w| w.as_ref().to_lowercase()).collect(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dict = Dictionary::parse(&text);
        if dict.is_empty() {
            return Err(Error::invalid(format!("{}: dictionary is empty", path.display())));
        }
        Ok(dict)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn insert(&mut self, word: &str) {
        self.words.insert(word.to_lowercase());
    }

    /// Exact membership of a normalized form.
    pub fn contains_exact(&self, normalized: &str) -> bool {
        self.words.contains(normalized)
    }

    /// Membership with two fallbacks: a possessive `'s` is stripped, and a
    /// hyphenated compound is known when every part is known.
    pub fn knows(&self, normalized: &str) -> bool {
        if self.words.contains(normalized) {
            return true;
        }
        if let Some(stem) = normalized.strip_suffix("'s") {
            if self.words.contains(stem) {
                return true;
            }
        }
        normalized.contains('-')
            && normalized
                .split('-')
                .all(|part| !part.is_empty() && self.words.contains(part))
    }
}

/// Shape of the repeated-error penalty curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Damping {
    /// quantum(f) = 1 + 1/2 + ... + 1/f
    #[default]
    Harmonic,
    /// quantum(f) = 1 + ln f
    Logarithmic,
    /// quantum(f) = f
    None,
}

impl Damping {
    pub fn quantum(self, frequency: u64) -> Result<f64> {
        if frequency == 0 {
            return Err(Error::invalid("error quantum needs a frequency of at least 1"));
        }
        Ok(match self {
            Damping::Harmonic => (1..=frequency).map(|i| 1.0 / i as f64).sum(),
            Damping::Logarithmic => 1.0 + (frequency as f64).ln(),
            Damping::None => frequency as f64,
        })
    }
}

/// Harmonic damping: penalty of a misspelling repeated `frequency` times.
pub fn error_quantum(frequency: u64) -> Result<f64> {
    Damping::Harmonic.quantum(frequency)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpellingFinding {
    /// First occurrence in the document.
    pub token_index: usize,
    pub surface: String,
    pub normalized: String,
    pub frequency_in_essay: u64,
    pub quantum: f64,
    /// Some occurrence was capitalized mid-sentence.
    pub proper_noun_candidate: bool,
}

/// One finding per distinct unknown normalized form, in first-occurrence order.
pub fn check_spelling(
    doc: &Document,
    dict: &Dictionary,
    whitelist: &WhitelistStore,
    damping: Damping,
) -> Vec<SpellingFinding> {
    let mut by_form: BTreeMap<&str, usize> = BTreeMap::new();
    let mut findings: Vec<SpellingFinding> = Vec::new();
    for &(first, last) in &doc.sentences {
        let mut first_word_seen = false;
        for idx in first..=last {
            let tok = &doc.tokens[idx];
            if !tok.is_word() {
                continue;
            }
            let sentence_initial = !first_word_seen;
            first_word_seen = true;
            if dict.knows(&tok.normalized) || whitelist.is_accepted(&tok.normalized) {
                continue;
            }
            let capitalized_mid = !sentence_initial && tok.surface.chars().next().is_some_and(char::is_uppercase);
            let slot = *by_form.entry(tok.normalized.as_str()).or_insert_with(|| {
                findings.push(SpellingFinding {
                    token_index: idx,
                    surface: tok.surface.clone(),
                    normalized: tok.normalized.clone(),
                    frequency_in_essay: 0,
                    quantum: 0.0,
                    proper_noun_candidate: false,
                });
                findings.len() - 1
            });
            let f = &mut findings[slot];
            f.frequency_in_essay += 1;
            f.proper_noun_candidate |= capitalized_mid;
        }
    }
    for f in &mut findings {
        f.quantum = damping.quantum(f.frequency_in_essay).unwrap_or(0.0);
    }
    findings
}

fn words(doc: &Document) -> Result<f64> {
    match doc.word_count() {
        0 => Err(Error::EmptyDocument),
        n => Ok(n as f64),
    }
}

/// Damped spelling errors per 100 words.
pub fn spelling_error_density(findings: &[SpellingFinding], doc: &Document) -> Result<f64> {
    let wc = words(doc)?;
    Ok(100.0 * findings.iter().map(|f| f.quantum).sum::<f64>() / wc)
}

/// Raw (undamped) spelling errors per 100 words.
pub fn undamped_spelling_density(findings: &[SpellingFinding], doc: &Document) -> Result<f64> {
    let wc = words(doc)?;
    Ok(100.0 * findings.iter().map(|f| f.frequency_in_essay as f64).sum::<f64>() / wc)
}

/// Distinct misspelled forms per 100 words.
pub fn spelling_error_coverage(findings: &[SpellingFinding], doc: &Document) -> Result<f64> {
    let wc = words(doc)?;
    Ok(100.0 * findings.len() as f64 / wc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(s: &str) -> Document {
        Document::with_defaults(s)
    }

    #[test]
    fn harmonic_quantum_values() {
        assert_eq!(error_quantum(1).unwrap(), 1.0);
        assert!((error_quantum(2).unwrap() - 1.5).abs() < 1e-15);
        assert!((error_quantum(3).unwrap() - 11.0 / 6.0).abs() < 1e-15);
        assert!(error_quantum(0).is_err());
        assert!((Damping::Logarithmic.quantum(1).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn detects_typo_and_groups_repeats() {
        let dict = Dictionary::standard();
        let wl = WhitelistStore::default();
        let f = check_spelling(&doc("The wster was cold."), &dict, &wl, Damping::Harmonic);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].normalized, "wster");
        assert_eq!(f[0].frequency_in_essay, 1);
        let f = check_spelling(&doc("Wster here, wster there, WSTER everywhere."), &dict, &wl, Damping::Harmonic);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].frequency_in_essay, 3);
        assert!(f[0].proper_noun_candidate);
        assert!((f[0].quantum - 11.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn whitelist_suppresses() {
        let dict = Dictionary::standard();
        let mut wl = WhitelistStore::default();
        let d = doc("We visited Karur last year.");
        let f = check_spelling(&d, &dict, &wl, Damping::Harmonic);
        assert_eq!(f.len(), 1);
        assert!(f[0].proper_noun_candidate);
        wl.accept("karur");
        assert!(check_spelling(&d, &dict, &wl, Damping::Harmonic).is_empty());
    }

    #[test]
    fn dictionary_fallbacks() {
        let dict = Dictionary::from_words(["teacher", "well", "known"]);
        assert!(dict.knows("teacher's"));
        assert!(dict.knows("well-known"));
        assert!(!dict.knows("well-knwn"));
        assert!(!dict.knows("teachers"));
    }

    fn finding(freq: u64) -> SpellingFinding {
        SpellingFinding {
            token_index: 0,
            surface: "x".into(),
            normalized: "x".into(),
            frequency_in_essay: freq,
            quantum: error_quantum(freq).unwrap(),
            proper_noun_candidate: false,
        }
    }

    fn hundred_words() -> Document {
        doc(&vec!["word"; 100].join(" "))
    }

    #[test]
    fn density_examples() {
        let d = hundred_words();
        assert!((spelling_error_density(&[finding(1)], &d).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(spelling_error_density(&[], &d).unwrap(), 0.0);
        let four = spelling_error_density(&[finding(4)], &d).unwrap();
        assert!((four - (1.0 + 0.5 + 1.0 / 3.0 + 0.25)).abs() < 1e-12);
        assert!((undamped_spelling_density(&[finding(4)], &d).unwrap() - 4.0).abs() < 1e-12);
        assert!(matches!(spelling_error_density(&[], &doc("42")), Err(Error::EmptyDocument)));
    }

    #[test]
    fn coverage_examples() {
        let d150 = doc(&vec!["word"; 150].join(" "));
        let three = [finding(1), finding(2), finding(5)];
        assert!((spelling_error_coverage(&three, &d150).unwrap() - 2.0).abs() < 1e-12);
        assert!((spelling_error_coverage(&[finding(10)], &hundred_words()).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(spelling_error_coverage(&[], &hundred_words()).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn damped_bounds(freqs in proptest::collection::vec(1u64..50, 0..10)) {
            let d = hundred_words();
            let fs: Vec<_> = freqs.iter().map(|&f| finding(f)).collect();
            let damped = spelling_error_density(&fs, &d).unwrap();
            let raw = undamped_spelling_density(&fs, &d).unwrap();
            let cov = spelling_error_coverage(&fs, &d).unwrap();
            prop_assert!(damped <= raw + 1e-12);
            prop_assert!(cov <= damped + 1e-12);
            if freqs.iter().all(|&f| f == 1) {
                prop_assert!((damped - raw).abs() < 1e-12);
            } else {
                prop_assert!(damped < raw);
            }
        }
    }
}
