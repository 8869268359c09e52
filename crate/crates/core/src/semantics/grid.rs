use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::text::{Document, WordClass, WordClassLexicon};

/// Syntactic role of an entity in one sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    #[serde(rename = "-")]
    Absent,
    X,
    O,
    S,
}

impl Role {
    /// Position in the S, O, X, − ordering used by the transition vector.
    fn slot(self) -> usize {
        match self {
            Role::S => 0,
            Role::O => 1,
            Role::X => 2,
            Role::Absent => 3,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Role::S => 'S',
            Role::O => 'O',
            Role::X => 'X',
            Role::Absent => '-',
        }
    }
}

/// Feature names of the 16 transition probabilities, row-major over S, O, X, −.
pub const TRANSITION_NAMES: [&str; 16] = [
    "coh_s_s", "coh_s_o", "coh_s_x", "coh_s_n", "coh_o_s", "coh_o_o", "coh_o_x", "coh_o_n", "coh_x_s", "coh_x_o",
    "coh_x_x", "coh_x_n", "coh_n_s", "coh_n_o", "coh_n_x", "coh_n_n",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityGrid {
    /// In order of first appearance.
    pub entities: Vec<String>,
    /// entities × sentences
    pub grid: Vec<Vec<Role>>,
}

impl EntityGrid {
    pub fn sentence_count(&self) -> usize {
        self.grid.first().map_or(0, Vec::len)
    }

    pub fn row(&self, entity: &str) -> Option<&[Role]> {
        self.entities.iter().position(|e| e == entity).map(|i| self.grid[i].as_slice())
    }
}

pub fn build_entity_grid(doc: &Document, lexicon: &WordClassLexicon) -> EntityGrid {
    let n = doc.sentence_count();
    let mut entities: Vec<String> = Vec::new();
    let mut rows: Vec<Vec<Role>> = Vec::new();
    let mut position: HashMap<String, usize> = HashMap::new();
    for (s, words) in doc.sentence_words().enumerate() {
        let first_verb = words.iter().position(|t| lexicon.is_verb(&t.normalized));
        for (i, tok) in words.iter().enumerate() {
            let norm = &tok.normalized;
            if lexicon.class_of(norm) != WordClass::Lexical || lexicon.is_verb(norm) {
                continue;
            }
            let role = match first_verb {
                None => Role::X,
                Some(v) if i < v => Role::S,
                Some(_) => Role::O,
            };
            let row = *position.entry(norm.clone()).or_insert_with(|| {
                entities.push(norm.clone());
                rows.push(vec![Role::Absent; n]);
                rows.len() - 1
            });
            let cell = &mut rows[row][s];
            *cell = (*cell).max(role);
        }
    }
    EntityGrid { entities, grid: rows }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coherence {
    pub probabilities: [f64; 16],
    /// Fewer than two sentences or no transitions; probabilities are all zero.
    pub degenerate: bool,
}

pub fn coherence_features(grid: &EntityGrid) -> Coherence {
    let mut counts = [0u64; 16];
    for row in &grid.grid {
        for w in row.windows(2) {
            counts[w[0].slot() * 4 + w[1].slot()] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    if grid.sentence_count() < 2 || total == 0 {
        return Coherence {
            probabilities: [0.0; 16],
            degenerate: true,
        };
    }
    let mut probabilities = [0.0; 16];
    for (p, &c) in probabilities.iter_mut().zip(&counts) {
        *p = c as f64 / total as f64;
    }
    Coherence {
        probabilities,
        degenerate: false,
    }
}
