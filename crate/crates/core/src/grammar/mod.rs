//! Declarative grammar rules, the seven error buckets, and the density,
//! coverage and correction passes built on their findings.

mod dsl;
mod engine;

use std::fmt;
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::text::{TokenKind, WordClass};

pub use dsl::{parse_rules, parse_rules_str, rules_to_dsl};
pub use engine::{
    apply_corrections, check_grammar, grammar_error_coverage, grammar_error_density, CoverageMode,
};

const DEFAULT_RULES: &str = include_str!("../../data/rules.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleCategory {
    Major,
    Capitalization,
    Typography,
    Style,
    Replacement,
    Punctuation,
    Miscellaneous,
}

impl RuleCategory {
    pub const ALL: [RuleCategory; 7] = [
        RuleCategory::Major,
        RuleCategory::Capitalization,
        RuleCategory::Typography,
        RuleCategory::Style,
        RuleCategory::Replacement,
        RuleCategory::Punctuation,
        RuleCategory::Miscellaneous,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleCategory::Major => "major",
            RuleCategory::Capitalization => "capitalization",
            RuleCategory::Typography => "typography",
            RuleCategory::Style => "style",
            RuleCategory::Replacement => "replacement",
            RuleCategory::Punctuation => "punctuation",
            RuleCategory::Miscellaneous => "miscellaneous",
        }
    }

    /// Position in [`RuleCategory::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for RuleCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RuleCategory::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownCategory(s.to_string()))
    }
}

/// One severity weight per bucket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeverityProfile {
    pub major: f64,
    pub capitalization: f64,
    pub typography: f64,
    pub style: f64,
    pub replacement: f64,
    pub punctuation: f64,
    pub miscellaneous: f64,
}

impl Default for SeverityProfile {
    fn default() -> Self {
        SeverityProfile {
            major: 2.0,
            capitalization: 0.75,
            typography: 1.0,
            style: 0.5,
            replacement: 1.0,
            punctuation: 0.75,
            miscellaneous: 0.5,
        }
    }
}

impl SeverityProfile {
    pub fn weight(&self, category: RuleCategory) -> f64 {
        match category {
            RuleCategory::Major => self.major,
            RuleCategory::Capitalization => self.capitalization,
            RuleCategory::Typography => self.typography,
            RuleCategory::Style => self.style,
            RuleCategory::Replacement => self.replacement,
            RuleCategory::Punctuation => self.punctuation,
            RuleCategory::Miscellaneous => self.miscellaneous,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        for c in RuleCategory::ALL {
            let w = self.weight(c);
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Config(format!("severity weight for {c} must be positive")));
            }
        }
        Ok(())
    }
}

/// A regular expression kept together with its source so rules can be
/// compared and written back out.
#[derive(Debug, Clone)]
pub struct Pattern {
    source: String,
    case_insensitive: bool,
    compiled: Regex,
}

impl Pattern {
    pub fn new(source: &str, case_insensitive: bool) -> Result<Self, regex::Error> {
        let compiled = regex::RegexBuilder::new(source)
            .case_insensitive(case_insensitive)
            .build()?;
        Ok(Pattern {
            source: source.to_string(),
            case_insensitive,
            compiled,
        })
    }

    pub fn is_match(&self, s: &str) -> bool {
        self.compiled.is_match(s)
    }
}

impl PartialEq for Pattern {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source && self.case_insensitive == other.case_insensitive
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "/{}/", self.source.replace('/', "\\/"))?;
        if self.case_insensitive {
            f.write_str("i")?;
        }
        Ok(())
    }
}

/// A condition on a single token.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// Exact, case-sensitive surface form.
    Surface(String),
    /// Lowercased form.
    Norm(String),
    Regex(Pattern),
    NotRegex(Pattern),
    Class(WordClass),
    Kind(TokenKind),
    /// Same normalized form as the token matched at this 1-based position.
    Same(usize),
    /// The whitespace preceding the token.
    WsBefore(Pattern),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Matcher {
    Token(Vec<Constraint>),
    /// Any `min..=max` tokens.
    Gap { min: usize, max: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TemplatePart {
    Literal(String),
    Ref { position: usize, capitalize: bool },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template(pub Vec<TemplatePart>);

#[derive(Debug, Clone, PartialEq)]
pub struct GrammarRule {
    pub id: String,
    pub category: RuleCategory,
    pub anchor_sentence_start: bool,
    pub pattern: Vec<Matcher>,
    pub suggestion: Option<Template>,
    pub message: String,
}

impl GrammarRule {
    /// The bundled rule pack.
    pub fn standard() -> Vec<GrammarRule> {
        static CACHE: std::sync::OnceLock<Vec<GrammarRule>> = std::sync::OnceLock::new();
        CACHE
            .get_or_init(|| parse_rules_str(DEFAULT_RULES).expect("bundled rule pack parses"))
            .clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrammarFinding {
    pub rule_id: String,
    pub category: RuleCategory,
    /// Token index range, end exclusive.
    pub token_start: usize,
    pub token_end: usize,
    /// Byte range of the matched text.
    pub byte_start: usize,
    pub byte_end: usize,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suggestion: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn category_names_round_trip() {
        for c in RuleCategory::ALL {
            assert_eq!(c.name().parse::<RuleCategory>().unwrap(), c);
        }
        assert!("grammar".parse::<RuleCategory>().is_err());
        assert_eq!(RuleCategory::Miscellaneous.index(), 6);
    }

    #[test]
    fn default_profile_orders_major_above_style() {
        let p = SeverityProfile::default();
        assert!(p.weight(RuleCategory::Major) > p.weight(RuleCategory::Style));
        p.validate().unwrap();
        let bad = SeverityProfile { style: 0.0, ..p };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn standard_pack_covers_every_bucket() {
        let rules = GrammarRule::standard();
        assert!(rules.len() >= 35);
        for c in RuleCategory::ALL {
            assert!(
                rules.iter().filter(|r| r.category == c).count() >= 3,
                "bucket {c} under-populated"
            );
        }
    }
}
