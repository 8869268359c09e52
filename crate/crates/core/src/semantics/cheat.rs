use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{context_score, extract_ngrams, ContextConfig, ContextScore, SemanticIndex};
use crate::error::Result;
use crate::spelling::{Dictionary, WhitelistStore};
use crate::text::Document;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheatFlag {
    RepeatedContent,
    OutOfContext,
    IrrelevantWords,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheatThresholds {
    pub repetition: f64,
    pub off_vocabulary: f64,
}

impl Default for CheatThresholds {
    fn default() -> Self {
        CheatThresholds {
            repetition: 0.3,
            off_vocabulary: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheatReport {
    pub repetition_score: f64,
    pub on_topic: bool,
    pub max_cosine: f64,
    pub off_vocabulary_ratio: f64,
    pub flags: BTreeSet<CheatFlag>,
}

impl CheatReport {
    pub fn from_parts(
        repetition_score: f64,
        context: &ContextScore,
        off_vocabulary_ratio: f64,
        thresholds: &CheatThresholds,
    ) -> Self {
        let mut flags = BTreeSet::new();
        if repetition_score > thresholds.repetition {
            flags.insert(CheatFlag::RepeatedContent);
        }
        if !context.on_topic {
            flags.insert(CheatFlag::OutOfContext);
        }
        if off_vocabulary_ratio > thresholds.off_vocabulary {
            flags.insert(CheatFlag::IrrelevantWords);
        }
        CheatReport {
            repetition_score,
            on_topic: context.on_topic,
            max_cosine: context.max_cosine,
            off_vocabulary_ratio,
            flags,
        }
    }

    pub fn has(&self, flag: CheatFlag) -> bool {
        self.flags.contains(&flag)
    }
}

/// Share of sentence-level 5-grams that repeat an earlier one.
pub fn repetition_score(doc: &Document) -> f64 {
    let grams = extract_ngrams(doc, 5, 5);
    let total: u64 = grams.values().sum();
    if total < 2 {
        return 0.0;
    }
    1.0 - grams.len() as f64 / total as f64
}

/// Share of word tokens unknown to the dictionary, the whitelist and the
/// index's unigram vocabulary.
pub fn off_vocabulary_ratio(
    doc: &Document,
    dictionary: &Dictionary,
    whitelist: &WhitelistStore,
    index: &SemanticIndex,
) -> f64 {
    let (mut words, mut off) = (0usize, 0usize);
    for tok in doc.words() {
        words += 1;
        let n = &tok.normalized;
        if !dictionary.knows(n) && !whitelist.is_accepted(n) && !index.has_unigram(n) {
            off += 1;
        }
    }
    if words == 0 {
        0.0
    } else {
        off as f64 / words as f64
    }
}

/// Flags repeated content, off-topic writing and excessive unknown words.
pub fn detect_cheating(
    doc: &Document,
    index: &SemanticIndex,
    topic: &str,
    dictionary: &Dictionary,
    whitelist: &WhitelistStore,
    context: &ContextConfig,
    thresholds: &CheatThresholds,
) -> Result<CheatReport> {
    let ctx = context_score(index, doc, topic, context)?;
    Ok(CheatReport::from_parts(
        repetition_score(doc),
        &ctx,
        off_vocabulary_ratio(doc, dictionary, whitelist, index),
        thresholds,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::{build_index, IndexEssay, Weighting};

    const PARK: &str = "The city park has tall trees and a small pond. Children play on the grass every morning. \
                        Old people walk slowly along the shaded paths.";

    fn setup() -> (SemanticIndex, Dictionary, WhitelistStore) {
        let texts = [
            ("park", PARK),
            ("park", "Our park is green and quiet. Families visit the pond on weekends and feed the ducks."),
            ("park", "Many trees grow in the park. The paths are clean and children play near the pond."),
            ("space", "Rockets carry astronauts into orbit. The moon circles our planet every month."),
            ("space", "Telescopes show distant stars and galaxies. Astronauts study the planet from orbit."),
        ];
        let docs: Vec<Document> = texts.iter().map(|(_, t)| Document::with_defaults(t)).collect();
        let ids: Vec<String> = (0..docs.len()).map(|i| i.to_string()).collect();
        let essays: Vec<IndexEssay> = texts
            .iter()
            .zip(&docs)
            .zip(&ids)
            .map(|(((topic, _), doc), id)| IndexEssay { id, topic, doc })
            .collect();
        (
            build_index(&essays, 4, Weighting::Tfidf).unwrap(),
            Dictionary::standard(),
            WhitelistStore::default(),
        )
    }

    fn report(text: &str, topic: &str) -> CheatReport {
        let (idx, dict, wl) = setup();
        detect_cheating(
            &Document::with_defaults(text),
            &idx,
            topic,
            &dict,
            &wl,
            &ContextConfig::default(),
            &CheatThresholds::default(),
        )
        .unwrap()
    }

    #[test]
    fn pasted_twice_is_repeated() {
        let r = report(&format!("{PARK} {PARK}"), "park");
        assert!(r.repetition_score >= 0.5, "{}", r.repetition_score);
        assert!(r.has(CheatFlag::RepeatedContent));
    }

    #[test]
    fn fluent_on_topic_is_clean() {
        let r = report(
            "Children love the park because the trees are tall and the pond is calm. They play on the grass.",
            "park",
        );
        assert!(r.flags.is_empty(), "{r:?}");
    }

    #[test]
    fn gibberish_is_irrelevant() {
        let r = report("Zorblat quenfix dravish plomuk. Skerv yantoq blixom frazzik.", "park");
        assert!(r.off_vocabulary_ratio > 0.9);
        assert!(r.has(CheatFlag::IrrelevantWords));
        assert!(r.has(CheatFlag::OutOfContext));
    }

    #[test]
    fn short_texts_have_no_repetition() {
        assert_eq!(repetition_score(&Document::with_defaults("one two three four five")), 0.0);
        assert_eq!(repetition_score(&Document::with_defaults("")), 0.0);
    }
}
