//! Closed-form complexity features: Flesch–Kincaid grade level and lexical
//! density.

use crate::error::{Error, Result};
use crate::text::{Document, WordClass};

/// `0.39 * (WC / SC) + 11.8 * (SyC / WC) - 15.59` over word tokens.
/// Negative grades are returned unclamped.
pub fn flesch_kincaid_grade(doc: &Document) -> Result<f64> {
    fk_from_counts(doc.word_count() as f64, doc.sentence_count() as f64, doc.syllable_count() as f64)
}

pub fn fk_from_counts(words: f64, sentences: f64, syllables: f64) -> Result<f64> {
    if words <= 0.0 {
        return Err(Error::EmptyDocument);
    }
    if sentences <= 0.0 {
        return Err(Error::invalid("readability needs at least one sentence"));
    }
    Ok(0.39 * (words / sentences) + 11.8 * (syllables / words) - 15.59)
}

/// Percentage of word tokens that are lexical (content) words.
///
/// Word classes are taken from the document's tokens, which carry the
/// labels of the lexicon the document was built with.
pub fn lexical_density(doc: &Document) -> Result<f64> {
    let n = doc.word_count();
    if n == 0 {
        return Err(Error::EmptyDocument);
    }
    let lexical = doc.words().filter(|t| t.word_class == WordClass::Lexical).count();
    Ok(100.0 * lexical as f64 / n as f64)
}
