//! Tokenization, sentence segmentation, syllable counting and word-class
//! labelling. Every downstream feature reads a [`Document`].

mod lexicon;

use serde::{Deserialize, Serialize};

pub use lexicon::{classify_word_class, Abbreviations, WordClass, WordClassLexicon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Word,
    Number,
    Punctuation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub normalized: String,
    /// Byte range into the source text.
    pub span: (usize, usize),
    pub kind: TokenKind,
    /// Zero for non-word tokens.
    pub syllables: u32,
    pub word_class: WordClass,
}

impl Token {
    pub fn is_word(&self) -> bool {
        self.kind == TokenKind::Word
    }
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}')
}

fn is_word_char(c: char) -> bool {
    c.is_alphabetic() || is_apostrophe(c) || c == '-'
}

pub fn normalize(surface: &str) -> String {
    surface.to_lowercase().replace('\u{2019}', "'")
}

fn make_token(text: &str, start: usize, end: usize, kind: TokenKind) -> Token {
    let surface = &text[start..end];
    Token {
        surface: surface.to_string(),
        normalized: normalize(surface),
        span: (start, end),
        kind,
        syllables: if kind == TokenKind::Word {
            count_syllables(surface)
        } else {
            0
        },
        word_class: WordClass::Unknown,
    }
}

/// Splits text into words (letters, apostrophes, hyphens), digit runs, and
/// single-character punctuation. Apostrophes and hyphens at the edges of a
/// word run are emitted as punctuation.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((start, c)) = chars.next() {
        if c.is_whitespace() {
            continue;
        }
        if c.is_numeric() {
            let mut end = start + c.len_utf8();
            while let Some(&(i, d)) = chars.peek() {
                if !d.is_numeric() {
                    break;
                }
                end = i + d.len_utf8();
                chars.next();
            }
            tokens.push(make_token(text, start, end, TokenKind::Number));
        } else if is_word_char(c) {
            let mut end = start + c.len_utf8();
            while let Some(&(i, d)) = chars.peek() {
                if !is_word_char(d) {
                    break;
                }
                end = i + d.len_utf8();
                chars.next();
            }
            push_word_run(text, start, end, &mut tokens);
        } else {
            tokens.push(make_token(text, start, start + c.len_utf8(), TokenKind::Punctuation));
        }
    }
    tokens
}

fn push_word_run(text: &str, start: usize, end: usize, tokens: &mut Vec<Token>) {
    let run = &text[start..end];
    let letters: Vec<(usize, char)> = run
        .char_indices()
        .filter(|(_, c)| c.is_alphabetic())
        .collect();
    let Some((&(first, _), &(last, last_c))) = letters.first().zip(letters.last()) else {
        for (i, c) in run.char_indices() {
            tokens.push(make_token(text, start + i, start + i + c.len_utf8(), TokenKind::Punctuation));
        }
        return;
    };
    for (i, c) in run[..first].char_indices() {
        tokens.push(make_token(text, start + i, start + i + c.len_utf8(), TokenKind::Punctuation));
    }
    let word_end = start + last + last_c.len_utf8();
    tokens.push(make_token(text, start + first, word_end, TokenKind::Word));
    for (i, c) in text[word_end..end].char_indices() {
        tokens.push(make_token(text, word_end + i, word_end + i + c.len_utf8(), TokenKind::Punctuation));
    }
}

fn is_terminator(tok: &Token) -> bool {
    tok.kind == TokenKind::Punctuation && matches!(tok.surface.as_str(), "." | "!" | "?")
}

fn is_closer(tok: &Token) -> bool {
    tok.kind == TokenKind::Punctuation
        && matches!(
            tok.surface.as_str(),
            "\"" | "'" | ")" | "]" | "\u{201D}" | "\u{2019}"
        )
}

/// Whether the period token at `idx` ends a sentence.
fn period_ends_sentence(source: &str, tokens: &[Token], idx: usize, abbreviations: &Abbreviations) -> bool {
    let (start, end) = tokens[idx].span;
    if let Some(next) = source[end..].chars().next() {
        // 3.5, e.g
        if next.is_numeric() || next.is_lowercase() {
            return false;
        }
    }
    let chunk_start = source[..start]
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_alphabetic() || *c == '.')
        .last()
        .map_or(start, |(i, _)| i);
    if chunk_start == start {
        return true;
    }
    !abbreviations.contains(&source[chunk_start..end])
}

/// Sentence spans as inclusive `(first_token, last_token)` pairs that
/// partition the token sequence.
pub fn segment_sentences(source: &str, tokens: &[Token], abbreviations: &Abbreviations) -> Vec<(usize, usize)> {
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < tokens.len() {
        let ends = is_terminator(&tokens[i])
            && (tokens[i].surface != "." || period_ends_sentence(source, tokens, i, abbreviations));
        if !ends {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < tokens.len() {
            let next = &tokens[j + 1];
            let adjacent = next.span.0 == tokens[j].span.1;
            if is_terminator(next) || (adjacent && is_closer(next)) {
                j += 1;
            } else {
                break;
            }
        }
        sentences.push((start, j));
        start = j + 1;
        i = j + 1;
    }
    if start < tokens.len() {
        sentences.push((start, tokens.len() - 1));
    }
    sentences
}

/// Vowel-group syllable estimate with a silent-e correction; never below one.
pub fn count_syllables(word: &str) -> u32 {
    let lower: Vec<char> = word.to_lowercase().chars().collect();
    let is_vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
    let mut groups = 0u32;
    let mut last_group_len = 0usize;
    let mut prev_vowel = false;
    for &c in &lower {
        if is_vowel(c) {
            if prev_vowel {
                last_group_len += 1;
            } else {
                groups += 1;
                last_group_len = 1;
            }
            prev_vowel = true;
        } else {
            prev_vowel = false;
        }
    }
    let n = lower.len();
    let ends_in_lone_e = n >= 2 && lower[n - 1] == 'e' && prev_vowel && last_group_len == 1;
    let ends_in_le = n >= 2 && lower[n - 2] == 'l' && lower[n - 1] == 'e';
    if ends_in_lone_e && groups > 1 && !ends_in_le {
        groups -= 1;
    }
    groups.max(1)
}

/// A tokenized, segmented and class-labelled essay.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub source: String,
    pub tokens: Vec<Token>,
    pub sentences: Vec<(usize, usize)>,
}

impl Document {
    pub fn new(source: &str, lexicon: &WordClassLexicon, abbreviations: &Abbreviations) -> Self {
        let mut tokens = tokenize(source);
        for tok in tokens.iter_mut().filter(|t| t.is_word()) {
            tok.word_class = lexicon.class_of(&tok.normalized);
            if let Some(n) = lexicon.syllable_override(&tok.normalized) {
                tok.syllables = n;
            }
        }
        let sentences = segment_sentences(source, &tokens, abbreviations);
        Document {
            source: source.to_string(),
            tokens,
            sentences,
        }
    }

    /// Parses with the bundled lexicon and abbreviation list.
    pub fn with_defaults(source: &str) -> Self {
        Document::new(source, &WordClassLexicon::standard(), &Abbreviations::default())
    }

    pub fn words(&self) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(|t| t.is_word())
    }

    pub fn word_count(&self) -> usize {
        self.words().count()
    }

    pub fn sentence_count(&self) -> usize {
        self.sentences.len()
    }

    pub fn syllable_count(&self) -> u64 {
        self.words().map(|t| u64::from(t.syllables)).sum()
    }

    pub fn sentence_tokens(&self, sentence: usize) -> &[Token] {
        let (a, b) = self.sentences[sentence];
        &self.tokens[a..=b]
    }

    /// Word tokens of each sentence, in order.
    pub fn sentence_words(&self) -> impl Iterator<Item = Vec<&Token>> {
        (0..self.sentences.len()).map(|s| self.sentence_tokens(s).iter().filter(|t| t.is_word()).collect())
    }

    /// Index of the sentence containing token `idx`.
    pub fn sentence_of(&self, idx: usize) -> Option<usize> {
        self.sentences
            .binary_search_by(|&(a, b)| {
                if idx < a {
                    std::cmp::Ordering::Greater
                } else if idx > b {
                    std::cmp::Ordering::Less
                } else {
                    std::cmp::Ordering::Equal
                }
            })
            .ok()
    }

    /// Source text between the previous token (or start) and token `idx`.
    pub fn whitespace_before(&self, idx: usize) -> &str {
        let prev_end = if idx == 0 { 0 } else { self.tokens[idx - 1].span.1 };
        &self.source[prev_end..self.tokens[idx].span.0]
    }
}
