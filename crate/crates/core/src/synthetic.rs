//! Template-based essay generator with controlled defect injection, used to
//! exercise the full pipeline where the true quality levels are known.
//!
//! Each essay draws its sentences from a per-topic "simple" pool and a "rich"
//! pool (long sentences, polysyllabic content words); the richness level sets
//! the mix. Grammar errors are injected as whitespace and capitalization
//! defects that leave the word sequence intact, and misspellings swap two
//! adjacent letters inside a content word.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::EssayRecord;
use crate::spelling::Dictionary;

/// Highest level of each controlled dimension; levels run `0..=MAX_LEVEL`.
pub const MAX_LEVEL: u32 = 4;

pub struct TopicPool {
    pub name: &'static str,
    pub simple: &'static [&'static str],
    pub rich: &'static [&'static str],
}

pub const TOPICS: [TopicPool; 3] = [
    TopicPool {
        name: "garden",
        simple: &[
            "My garden is small.",
            "The roses are red.",
            "We plant seeds in spring.",
            "Bees like the flowers.",
            "I water the plants each evening.",
            "The soil is dark and wet.",
            "We pull weeds on Sunday.",
            "My mother grows beans.",
            "The grass is green.",
            "Birds sing near the fence.",
            "We pick fresh herbs.",
            "The pond has frogs.",
            "I like to dig.",
            "The tulips bloom early.",
            "We rest under the apple tree.",
        ],
        rich: &[
            "Magnificent ornamental shrubs surround the meticulously maintained botanical conservatory.",
            "Knowledgeable gardeners recommend regular fertilization during the critical germination period.",
            "Vibrant perennial varieties draw numerous beneficial insects throughout the summer.",
            "Careful irrigation reduces unnecessary evaporation and encourages vigorous vegetable production.",
            "Organic composting dramatically improves agricultural productivity and environmental sustainability.",
            "Elaborate decorative fences support climbing vines and fragrant jasmine.",
            "Seasonal pruning stimulates healthier foliage and considerably heavier harvests.",
            "Traditional cultivation techniques protect biological diversity within residential landscapes.",
            "Innovative watering technologies eliminate dependence on irregular precipitation.",
            "Dedicated volunteers coordinate community gardening initiatives across neighboring villages.",
            "Sophisticated greenhouse ventilation regulates humidity and temperature automatically.",
            "Unusual medicinal herbs require particularly attentive cultivation.",
            "Beautiful flowering orchards illuminate the surrounding countryside every April.",
            "Meticulous landscape design transforms ordinary yards into extraordinary sanctuaries.",
            "Responsible pesticide regulation protects endangered amphibians.",
        ],
    },
    TopicPool {
        name: "ocean",
        simple: &[
            "The sea is blue.",
            "Fish swim in the waves.",
            "We run on the sand.",
            "The boat is white.",
            "Crabs hide under rocks.",
            "Gulls fly over the shore.",
            "The tide comes in at night.",
            "My dad likes to sail.",
            "Shells wash up on the beach.",
            "The surf is cold.",
            "We swim in the bay.",
            "The whale is huge.",
            "Salt fills the air.",
            "The wind blows hard.",
            "We eat fish by the dock.",
        ],
        rich: &[
            "Enormous migrating humpback whales communicate through remarkably complicated underwater melodies.",
            "Delicate coral ecosystems provide essential shelter for countless tropical species.",
            "Professional marine biologists investigate mysterious glowing creatures inhabiting deep trenches.",
            "Powerful oceanic currents distribute nutrients across vast geographical distances.",
            "Recreational fishermen frequently encounter playful dolphins near coastal islands.",
            "Industrial pollution threatens fragile marine habitats along populated shores.",
            "Skilled navigators historically relied upon celestial observation during lengthy voyages.",
            "Microscopic algae generate significant atmospheric oxygen through photosynthesis.",
            "Gigantic cargo vessels carry manufactured merchandise between international harbors.",
            "Violent hurricanes occasionally destroy vulnerable seaside communities.",
            "Colorful jellyfish hide tiny shrimp within poisonous tentacles.",
            "Submarine exploration reveals spectacular geological formations beneath the seabed.",
            "Sustainable fisheries management prevents catastrophic depletion of valuable stocks.",
            "Ancient wrecks conceal fascinating archaeological treasures beneath shifting sediment.",
            "Annual storms generate tremendous waves along the southern coastline.",
        ],
    },
    TopicPool {
        name: "city",
        simple: &[
            "The city is loud.",
            "Cars wait at the light.",
            "We ride the bus to work.",
            "The shops open at nine.",
            "My flat is on the third floor.",
            "People rush down the street.",
            "The square has a tall clock.",
            "Taxis honk all morning.",
            "We buy bread at the market.",
            "The train is fast.",
            "Rain falls on the roofs.",
            "Kids play near the mall.",
            "The bridge is old.",
            "I walk to school.",
            "Neon signs glow after sunset.",
        ],
        rich: &[
            "Ambitious municipal authorities constructed elevated highways connecting sprawling suburban districts.",
            "Contemporary skyscrapers dominate the metropolitan skyline with reflective glass windows.",
            "Congested intersections frustrate impatient commuters during peak hours.",
            "Efficient underground railways transport millions of passengers every weekday.",
            "Historic neighborhoods preserve charming architecture despite rapid commercial development.",
            "Affordable housing remains a persistent challenge for expanding urban populations.",
            "Talented street musicians entertain curious tourists in crowded squares.",
            "Modern surveillance cameras monitor suspicious activity across downtown avenues.",
            "Immense shopping centers attract thousands of enthusiastic consumers.",
            "Electric scooters increasingly replace conventional automobiles for short journeys.",
            "Municipal recycling programs significantly reduce accumulated garbage.",
            "Noisy construction projects continuously disrupt crowded apartment buildings.",
            "Courageous firefighters respond rapidly to dangerous emergencies.",
            "Public libraries offer excellent educational resources to diverse residents.",
            "Impressive cathedrals attract foreign visitors every year.",
        ],
    },
];

/// Rubric score on the 1–10 scale from the three quality levels.
pub fn rubric_score(richness: u32, grammar: u32, spelling: u32) -> i64 {
    let m = f64::from(MAX_LEVEL);
    let q = 0.4 * f64::from(richness) / m
        + 0.35 * (1.0 - f64::from(grammar) / m)
        + 0.25 * (1.0 - f64::from(spelling) / m);
    (1.0 + 9.0 * q).round() as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub essays_per_topic: usize,
    pub topics: usize,
    pub sentences: usize,
    /// Grammar errors injected per grammar level.
    pub grammar_per_level: usize,
    /// Misspellings injected per spelling level.
    pub spelling_per_level: usize,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            essays_per_topic: 110,
            topics: 3,
            sentences: 12,
            grammar_per_level: 3,
            spelling_per_level: 2,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticEssay {
    pub record: EssayRecord,
    pub clean_text: String,
    pub richness: u32,
    pub grammar: u32,
    pub spelling: u32,
    pub grammar_errors: usize,
    /// (original, misspelled) pairs.
    pub misspellings: Vec<(String, String)>,
}

/// Sentences of a defect-free essay at the given richness level.
pub fn clean_sentences<R: Rng>(topic: &TopicPool, richness: u32, sentences: usize, rng: &mut R) -> Vec<String> {
    let rich_n = ((sentences as f64) * f64::from(richness) / f64::from(MAX_LEVEL)).round() as usize;
    let rich_n = rich_n.min(topic.rich.len()).min(sentences);
    let simple_n = (sentences - rich_n).min(topic.simple.len());
    let mut out: Vec<String> = topic
        .rich
        .choose_multiple(rng, rich_n)
        .chain(topic.simple.choose_multiple(rng, simple_n))
        .map(|s| s.to_string())
        .collect();
    out.shuffle(rng);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Lowercase(usize),
    SpaceBeforeStop(usize),
    DoubleSpace(usize, usize),
}

/// Injects up to `count` grammar errors (lowercased sentence starts, a space
/// before the final stop, doubled spaces between words), cycling through the
/// three kinds. Returns how many were placed.
pub fn inject_grammar_errors<R: Rng>(sentences: &mut [String], count: usize, rng: &mut R) -> usize {
    let mut lower: Vec<Slot> = Vec::new();
    let mut stops: Vec<Slot> = Vec::new();
    let mut gaps: Vec<Slot> = Vec::new();
    for (i, s) in sentences.iter().enumerate() {
        let first = s.split(' ').next().unwrap_or("");
        if first != "I" && first.chars().next().is_some_and(char::is_uppercase) && first != "Sunday" && first != "April" {
            lower.push(Slot::Lowercase(i));
        }
        if s.ends_with('.') && !s.ends_with(" .") {
            stops.push(Slot::SpaceBeforeStop(i));
        }
        for g in 0..s.matches(' ').count() {
            gaps.push(Slot::DoubleSpace(i, g));
        }
    }
    lower.shuffle(rng);
    stops.shuffle(rng);
    gaps.shuffle(rng);
    let mut pools = [lower, stops, gaps];
    let mut chosen = Vec::new();
    let mut kind = 0;
    while chosen.len() < count && pools.iter().any(|p| !p.is_empty()) {
        if let Some(slot) = pools[kind % 3].pop() {
            // neighbouring doubled gaps share a token and would read as one error
            let clash = matches!(slot, Slot::DoubleSpace(i, g)
                if chosen.iter().any(|c| matches!(*c, Slot::DoubleSpace(j, h) if j == i && h.abs_diff(g) == 1)));
            if !clash {
                chosen.push(slot);
            }
        }
        kind += 1;
    }
    // gaps are addressed by index among single spaces, so apply right to left
    chosen.sort_by_key(|s| match *s {
        Slot::DoubleSpace(i, g) => (i, 1, usize::MAX - g),
        Slot::SpaceBeforeStop(i) => (i, 0, 0),
        Slot::Lowercase(i) => (i, 2, 0),
    });
    for slot in &chosen {
        match *slot {
            Slot::Lowercase(i) => {
                let s = &mut sentences[i];
                let first = s.chars().next().unwrap();
                *s = first.to_lowercase().collect::<String>() + &s[first.len_utf8()..];
            }
            Slot::SpaceBeforeStop(i) => {
                let s = &mut sentences[i];
                s.pop();
                s.push_str(" .");
            }
            Slot::DoubleSpace(i, g) => {
                let s = &mut sentences[i];
                if let Some((pos, _)) = s.match_indices(' ').nth(g) {
                    s.insert(pos, ' ');
                }
            }
        }
    }
    chosen.len()
}

/// Swaps two adjacent inner letters in `count` distinct content words so the
/// results are unknown to `dict`.
pub fn inject_misspellings<R: Rng>(
    sentences: &mut [String],
    count: usize,
    dict: &Dictionary,
    rng: &mut R,
) -> Vec<(String, String)> {
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    for (i, s) in sentences.iter().enumerate() {
        for (w, word) in s.split(' ').enumerate() {
            let core: String = word.chars().filter(|c| c.is_alphabetic()).collect();
            if core.len() >= 5 && core.chars().all(|c| c.is_ascii_lowercase()) {
                candidates.push((i, w));
            }
        }
    }
    candidates.shuffle(rng);
    let mut done: Vec<(String, String)> = Vec::new();
    for (i, w) in candidates {
        if done.len() >= count {
            break;
        }
        let words: Vec<String> = sentences[i].split(' ').map(String::from).collect();
        let word = &words[w];
        let core: String = word.chars().filter(|c| c.is_alphabetic()).collect();
        if done.iter().any(|(o, _)| *o == core) {
            continue;
        }
        let chars: Vec<char> = core.chars().collect();
        let mut positions: Vec<usize> = (1..chars.len() - 2).filter(|&p| chars[p] != chars[p + 1]).collect();
        positions.shuffle(rng);
        let Some(bad) = positions.into_iter().find_map(|p| {
            let mut c = chars.clone();
            c.swap(p, p + 1);
            let cand: String = c.into_iter().collect();
            (!dict.knows(&cand) && !done.iter().any(|(_, m)| *m == cand)).then_some(cand)
        }) else {
            continue;
        };
        let mut new_words = words.clone();
        new_words[w] = word.replacen(&core, &bad, 1);
        sentences[i] = new_words.join(" ");
        done.push((core, bad));
    }
    done
}

/// Generates the corpus; essays are interleaved across topics.
pub fn generate(cfg: &GeneratorConfig) -> Vec<SyntheticEssay> {
    let dict = Dictionary::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let topics = &TOPICS[..cfg.topics.clamp(1, TOPICS.len())];
    let mut out = Vec::new();
    for n in 0..cfg.essays_per_topic {
        for topic in topics {
            let richness = rng.random_range(0..=MAX_LEVEL);
            let grammar = rng.random_range(0..=MAX_LEVEL);
            let spelling = rng.random_range(0..=MAX_LEVEL);
            let mut sentences = clean_sentences(topic, richness, cfg.sentences, &mut rng);
            let clean_text = sentences.join(" ");
            let misspellings =
                inject_misspellings(&mut sentences, spelling as usize * cfg.spelling_per_level, &dict, &mut rng);
            let grammar_errors = inject_grammar_errors(&mut sentences, grammar as usize * cfg.grammar_per_level, &mut rng);
            let score = rubric_score(richness, grammar, spelling);
            let id = format!("{}-{:04}", topic.name, n);
            out.push(SyntheticEssay {
                record: EssayRecord::new(id, topic.name, sentences.join(" "), vec![score, score]),
                clean_text,
                richness,
                grammar,
                spelling,
                grammar_errors,
                misspellings,
            });
        }
    }
    out
}

pub fn records(essays: &[SyntheticEssay]) -> Vec<EssayRecord> {
    essays.iter().map(|e| e.record.clone()).collect()
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, BTreeSet};

    use super::*;
    use crate::grammar::{check_grammar, GrammarRule};
    use crate::spelling::{check_spelling, Damping, WhitelistStore};
    use crate::text::{Document, WordClass};

    #[test]
    fn rubric_bounds() {
        assert_eq!(rubric_score(0, 4, 4), 1);
        assert_eq!(rubric_score(4, 0, 0), 10);
        assert!(rubric_score(2, 1, 1) > rubric_score(2, 3, 1));
    }

    #[test]
    fn pools_are_clean_and_topics_disjoint() {
        let dict = Dictionary::standard();
        let rules = GrammarRule::standard();
        let wl = WhitelistStore::default();
        let mut content: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
        for t in &TOPICS {
            for s in t.simple.iter().chain(t.rich) {
                let doc = Document::with_defaults(s);
                let g = check_grammar(&doc, &rules);
                assert!(g.is_empty(), "{s}: {g:?}");
                let sp = check_spelling(&doc, &dict, &wl, Damping::Harmonic);
                assert!(sp.is_empty(), "{s}: {:?}", sp.iter().map(|f| &f.normalized).collect::<Vec<_>>());
                for w in doc.words().filter(|w| w.word_class == WordClass::Lexical) {
                    content.entry(t.name).or_default().insert(w.normalized.clone());
                }
            }
        }
        let names: Vec<&str> = content.keys().copied().collect();
        for (i, a) in names.iter().enumerate() {
            for b in &names[i + 1..] {
                let shared: Vec<_> = content[a].intersection(&content[b]).collect();
                assert!(shared.is_empty(), "{a}/{b} share {shared:?}");
            }
        }
    }

    #[test]
    fn injections_are_detected_exactly() {
        let dict = Dictionary::standard();
        let rules = GrammarRule::standard();
        let wl = WhitelistStore::default();
        let essays = generate(&GeneratorConfig {
            essays_per_topic: 20,
            ..GeneratorConfig::default()
        });
        for e in &essays {
            let doc = Document::with_defaults(&e.record.text);
            assert_eq!(check_grammar(&doc, &rules).len(), e.grammar_errors, "{}", e.record.text);
            assert_eq!(e.grammar_errors, 3 * e.grammar as usize);
            let sp = check_spelling(&doc, &dict, &wl, Damping::Harmonic);
            assert_eq!(sp.len(), e.misspellings.len(), "{}", e.record.text);
            assert_eq!(e.misspellings.len(), 2 * e.spelling as usize);
            let clean = Document::with_defaults(&e.clean_text);
            assert_eq!(clean.word_count(), doc.word_count());
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = GeneratorConfig {
            essays_per_topic: 5,
            ..GeneratorConfig::default()
        };
        assert_eq!(generate(&cfg), generate(&cfg));
        assert_eq!(generate(&cfg).len(), 15);
    }
}
