use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Token;
use crate::error::{Error, Result};

const DEFAULT_LEXICON: &str = include_str!("../../data/lexicon.tsv");
const DEFAULT_ABBREVIATIONS: &str = include_str!("../../data/abbreviations.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WordClass {
    Lexical,
    Grammatical,
    Unknown,
}

/// Closed-class stoplist plus per-word overrides.
///
/// Entries tagged `verb` or `auxiliary` additionally land in the verb list
/// that drives subject/object roles in entity grids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WordClassLexicon {
    closed_class: HashSet<String>,
    overrides: HashMap<String, WordClass>,
    verbs: HashSet<String>,
    syllables: HashMap<String, u32>,
}

impl WordClassLexicon {
    /// The lexicon shipped with the crate.
    pub fn standard() -> Self {
        static CACHE: std::sync::OnceLock<WordClassLexicon> = std::sync::OnceLock::new();
        CACHE
            .get_or_init(|| {
                let mut lex = WordClassLexicon::default();
                lex.merge_str(DEFAULT_LEXICON).expect("bundled lexicon parses");
                lex
            })
            .clone()
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut lex = WordClassLexicon::default();
        lex.merge_file(path)?;
        Ok(lex)
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.merge_str(&text)
    }

    /// Adds `word<TAB>class[<TAB>syllables]` lines; later entries win.
    pub fn merge_str(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let word = cols.next().unwrap_or_default().trim().to_lowercase();
            let class = cols.next().map(str::trim).ok_or_else(|| {
                Error::invalid(format!("lexicon line {}: missing class column", idx + 1))
            })?;
            let syllables = match cols.next().map(str::trim) {
                Some(s) if !s.is_empty() => Some(s.parse::<u32>().ok().filter(|&n| n > 0).ok_or_else(|| {
                    Error::invalid(format!("lexicon line {}: bad syllable count `{s}`", idx + 1))
                })?),
                _ => None,
            };
            if word.is_empty() {
                return Err(Error::invalid(format!("lexicon line {}: empty word", idx + 1)));
            }
            let (class, verb) = match class {
                "grammatical" => (WordClass::Grammatical, false),
                "lexical" => (WordClass::Lexical, false),
                "verb" => (WordClass::Lexical, true),
                "auxiliary" => (WordClass::Grammatical, true),
                other => {
                    return Err(Error::invalid(format!(
                        "lexicon line {}: unknown class `{other}`",
                        idx + 1
                    )))
                }
            };
            self.insert(&word, class, verb);
            if let Some(n) = syllables {
                self.syllables.insert(word, n);
            }
        }
        Ok(())
    }

    pub fn insert(&mut self, word: &str, class: WordClass, verb: bool) {
        let word = word.to_lowercase();
        match class {
            WordClass::Grammatical => {
                self.overrides.remove(&word);
                self.closed_class.insert(word.clone());
            }
            _ => {
                self.closed_class.remove(&word);
                self.overrides.insert(word.clone(), WordClass::Lexical);
            }
        }
        if verb {
            self.verbs.insert(word);
        } else {
            self.verbs.remove(&word);
        }
    }

    /// Class of a normalized word form: override, then closed class, else lexical.
    pub fn class_of(&self, normalized: &str) -> WordClass {
        if let Some(&c) = self.overrides.get(normalized) {
            return c;
        }
        if self.closed_class.contains(normalized) {
            WordClass::Grammatical
        } else {
            WordClass::Lexical
        }
    }

    pub fn is_verb(&self, normalized: &str) -> bool {
        self.verbs.contains(normalized)
    }

    pub fn syllable_override(&self, normalized: &str) -> Option<u32> {
        self.syllables.get(normalized).copied()
    }

    pub fn contains(&self, normalized: &str) -> bool {
        self.closed_class.contains(normalized) || self.overrides.contains_key(normalized)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.closed_class
            .iter()
            .chain(self.overrides.keys())
            .map(String::as_str)
    }
}

/// Classifies a word token; non-word tokens are [`WordClass::Unknown`].
pub fn classify_word_class(token: &Token, lexicon: &WordClassLexicon) -> WordClass {
    if token.kind != super::TokenKind::Word {
        return WordClass::Unknown;
    }
    lexicon.class_of(&token.normalized)
}

/// Abbreviations that do not end a sentence (stored lowercase, trailing period included).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Abbreviations(HashSet<String>);

impl Default for Abbreviations {
    fn default() -> Self {
        Abbreviations::parse(DEFAULT_ABBREVIATIONS)
    }
}

impl Abbreviations {
    pub fn empty() -> Self {
        Abbreviations(HashSet::new())
    }

    pub fn parse(text: &str) -> Self {
        let mut set = Abbreviations::empty();
        set.extend_str(text);
        set
    }

    pub fn extend_str(&mut self, text: &str) {
        self.0.extend(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase),
        );
    }

    pub fn extend_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.extend_str(&text);
        Ok(())
    }

    pub fn insert(&mut self, abbr: &str) {
        self.0.insert(abbr.to_lowercase());
    }

    pub fn contains(&self, candidate: &str) -> bool {
        self.0.contains(&candidate.to_lowercase())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    #[test]
    fn standard_lexicon_classes() {
        let lex = WordClassLexicon::standard();
        assert_eq!(lex.class_of("the"), WordClass::Grammatical);
        assert_eq!(lex.class_of("cat"), WordClass::Lexical);
        assert_eq!(lex.class_of("is"), WordClass::Grammatical);
        assert!(lex.is_verb("is"));
        assert!(lex.is_verb("ate"));
        assert!(lex.is_verb("slept"));
        assert!(!lex.is_verb("apple"));
    }

    #[test]
    fn override_beats_closed_class() {
        let mut lex = WordClassLexicon::standard();
        lex.merge_str("the\tlexical\n").unwrap();
        assert_eq!(lex.class_of("the"), WordClass::Lexical);
        lex.merge_str("the\tgrammatical\n").unwrap();
        assert_eq!(lex.class_of("the"), WordClass::Grammatical);
    }

    #[test]
    fn classify_tokens() {
        let lex = WordClassLexicon::standard();
        let toks = tokenize("The cat 42 .");
        assert_eq!(classify_word_class(&toks[0], &lex), WordClass::Grammatical);
        assert_eq!(classify_word_class(&toks[1], &lex), WordClass::Lexical);
        assert_eq!(classify_word_class(&toks[2], &lex), WordClass::Unknown);
        assert_eq!(classify_word_class(&toks[3], &lex), WordClass::Unknown);
    }

    #[test]
    fn syllable_column_and_errors() {
        let mut lex = WordClassLexicon::default();
        lex.merge_str("fire\tlexical\t2\n").unwrap();
        assert_eq!(lex.syllable_override("fire"), Some(2));
        assert!(lex.merge_str("x\tnoun\n").is_err());
        assert!(lex.merge_str("x\tlexical\t0\n").is_err());
        assert!(lex.merge_str("x\n").is_err());
    }
}
