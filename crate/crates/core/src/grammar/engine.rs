use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Constraint, GrammarFinding, GrammarRule, Matcher, SeverityProfile, TemplatePart};
use crate::error::{Error, Result};
use crate::text::{Document, Token};

/// Per-position token ranges (end exclusive) of one successful match.
type Captures = Vec<(usize, usize)>;

fn token_ok(doc: &Document, idx: usize, constraints: &[Constraint], caps: &Captures) -> bool {
    let tok: &Token = &doc.tokens[idx];
    constraints.iter().all(|c| match c {
        Constraint::Surface(s) => tok.surface == *s,
        Constraint::Norm(s) => tok.normalized == *s,
        Constraint::Regex(p) => p.is_match(&tok.surface),
        Constraint::NotRegex(p) => !p.is_match(&tok.surface),
        Constraint::Class(c) => tok.is_word() && tok.word_class == *c,
        Constraint::Kind(k) => tok.kind == *k,
        Constraint::Same(n) => {
            let (a, _) = caps[n - 1];
            doc.tokens[a].normalized == tok.normalized
        }
        Constraint::WsBefore(p) => p.is_match(doc.whitespace_before(idx)),
    })
}

/// Longest match of `pattern[mi..]` starting at token `ti`, bounded by `end`.
fn match_from(
    doc: &Document,
    pattern: &[Matcher],
    mi: usize,
    ti: usize,
    end: usize,
    caps: &mut Captures,
) -> Option<Captures> {
    if mi == pattern.len() {
        return Some(caps.clone());
    }
    match &pattern[mi] {
        Matcher::Token(cs) => {
            if ti >= end || !token_ok(doc, ti, cs, caps) {
                return None;
            }
            caps.push((ti, ti + 1));
            let r = match_from(doc, pattern, mi + 1, ti + 1, end, caps);
            caps.pop();
            r
        }
        Matcher::Gap { min, max } => {
            let mut best: Option<Captures> = None;
            for len in *min..=*max {
                if ti + len > end {
                    break;
                }
                caps.push((ti, ti + len));
                if let Some(m) = match_from(doc, pattern, mi + 1, ti + len, end, caps) {
                    let longer = best
                        .as_ref()
                        .is_none_or(|b| m.last().map(|c| c.1) > b.last().map(|c| c.1));
                    if longer {
                        best = Some(m);
                    }
                }
                caps.pop();
            }
            best
        }
    }
}

fn expand(doc: &Document, rule: &GrammarRule, caps: &Captures) -> Option<String> {
    let template = rule.suggestion.as_ref()?;
    let mut out = String::new();
    for part in &template.0 {
        match part {
            TemplatePart::Literal(s) => out.push_str(s),
            TemplatePart::Ref { position, capitalize } => {
                let (a, b) = caps[position - 1];
                if a == b {
                    continue;
                }
                let text = &doc.source[doc.tokens[a].span.0..doc.tokens[b - 1].span.1];
                if *capitalize {
                    let mut chars = text.chars();
                    if let Some(first) = chars.next() {
                        out.extend(first.to_uppercase());
                        out.push_str(chars.as_str());
                    }
                } else {
                    out.push_str(text);
                }
            }
        }
    }
    Some(out)
}

fn finding_for(doc: &Document, rule: &GrammarRule, caps: &Captures) -> GrammarFinding {
    let start = caps.first().map_or(0, |c| c.0);
    let end = caps.last().map_or(start, |c| c.1);
    GrammarFinding {
        rule_id: rule.id.clone(),
        category: rule.category,
        token_start: start,
        token_end: end,
        byte_start: doc.tokens[start].span.0,
        byte_end: doc.tokens[end - 1].span.1,
        message: rule.message.clone(),
        suggestion: expand(doc, rule, caps),
    }
}

/// Runs every rule over every sentence. Each rule reports leftmost-longest,
/// non-overlapping matches; findings from different rules may overlap.
/// Output is ordered by span start, then rule id.
pub fn check_grammar(doc: &Document, rules: &[GrammarRule]) -> Vec<GrammarFinding> {
    let mut findings = Vec::new();
    for rule in rules {
        for &(s_start, s_last) in &doc.sentences {
            let s_end = s_last + 1;
            let mut ti = s_start;
            while ti < s_end {
                if rule.anchor_sentence_start && ti != s_start {
                    break;
                }
                let mut caps = Vec::with_capacity(rule.pattern.len());
                match match_from(doc, &rule.pattern, 0, ti, s_end, &mut caps) {
                    Some(m) if m.last().map_or(ti, |c| c.1) > ti => {
                        let next = m.last().map_or(ti + 1, |c| c.1);
                        findings.push(finding_for(doc, rule, &m));
                        ti = next;
                    }
                    _ => ti += 1,
                }
            }
        }
    }
    findings.sort_by(|a, b| {
        (a.token_start, &a.rule_id, a.token_end).cmp(&(b.token_start, &b.rule_id, b.token_end))
    });
    findings
}

fn require_words(doc: &Document) -> Result<f64> {
    match doc.word_count() {
        0 => Err(Error::EmptyDocument),
        n => Ok(n as f64),
    }
}

/// Errors per 100 words, optionally severity-weighted.
pub fn grammar_error_density(
    findings: &[GrammarFinding],
    doc: &Document,
    weights: Option<&SeverityProfile>,
) -> Result<f64> {
    let words = require_words(doc)?;
    let total: f64 = match weights {
        None => findings.len() as f64,
        Some(p) => findings.iter().map(|f| p.weight(f.category)).sum(),
    };
    Ok(100.0 * total / words)
}

/// What counts as one error "type" for coverage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageMode {
    /// The seven buckets.
    #[default]
    Bucket,
    /// Individual rule ids.
    RuleId,
}

/// Distinct error types per 100 words.
pub fn grammar_error_coverage(findings: &[GrammarFinding], doc: &Document, mode: CoverageMode) -> Result<f64> {
    let words = require_words(doc)?;
    let distinct = match mode {
        CoverageMode::Bucket => findings.iter().map(|f| f.category).collect::<BTreeSet<_>>().len(),
        CoverageMode::RuleId => findings.iter().map(|f| f.rule_id.as_str()).collect::<BTreeSet<_>>().len(),
    };
    Ok(100.0 * distinct as f64 / words)
}

/// Applies suggestions left to right; a suggestion overlapping an already
/// applied one is skipped.
pub fn apply_corrections(doc: &Document, findings: &[GrammarFinding]) -> String {
    let mut ordered: Vec<&GrammarFinding> = findings.iter().filter(|f| f.suggestion.is_some()).collect();
    ordered.sort_by_key(|f| (f.byte_start, f.byte_end));
    let mut out = String::with_capacity(doc.source.len());
    let mut cursor = 0;
    for f in ordered {
        if f.byte_start < cursor {
            continue;
        }
        out.push_str(&doc.source[cursor..f.byte_start]);
        out.push_str(f.suggestion.as_deref().unwrap_or_default());
        cursor = f.byte_end;
    }
    out.push_str(&doc.source[cursor..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{parse_rules_str, RuleCategory};
    use proptest::prelude::*;

    fn doc(s: &str) -> Document {
        Document::with_defaults(s)
    }

    fn rules(s: &str) -> Vec<GrammarRule> {
        parse_rules_str(s).unwrap()
    }

    const START_LOWER: &str = "rule cap category=capitalization anchor=sentence_start\nmatch: regex=/^[a-z]/\nsuggest: $^1\nmessage: cap\n";
    const STYLE_U: &str = "rule style_u category=style\nmatch: norm=\"u\"\nsuggest: you\nmessage: informal\n";

    #[test]
    fn sentence_start_lowercase() {
        let d = doc("he is here.");
        let f = check_grammar(&d, &rules(START_LOWER));
        assert_eq!(f.len(), 1);
        assert_eq!((f[0].token_start, f[0].token_end), (0, 1));
        assert_eq!(f[0].category, RuleCategory::Capitalization);
        // only the first token of each sentence is eligible
        assert!(check_grammar(&doc("He is here. she left."), &rules(START_LOWER)).len() == 1);
        assert!(check_grammar(&doc("He is here."), &rules(START_LOWER)).is_empty());
    }

    #[test]
    fn style_u_to_you() {
        let d = doc("I will meet u tomorrow");
        let f = check_grammar(&d, &rules(STYLE_U));
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].category, RuleCategory::Style);
        assert_eq!(f[0].suggestion.as_deref(), Some("you"));
        assert_eq!(apply_corrections(&d, &f), "I will meet you tomorrow");
        let d = doc("I will meet u");
        assert_eq!(apply_corrections(&d, &check_grammar(&d, &rules(STYLE_U))), "I will meet you");
    }

    #[test]
    fn empty_rule_set() {
        assert!(check_grammar(&doc("anything goes here"), &[]).is_empty());
    }

    #[test]
    fn non_overlapping_per_rule_and_gap_longest() {
        let r = rules("rule dbl category=miscellaneous\nmatch: kind=word\nmatch: kind=word same=$1\nsuggest: $1\nmessage: m\n");
        let d = doc("the the the cat");
        let f = check_grammar(&d, &r);
        // positions 0-1 match; the scan resumes at 2, where "the cat" does not
        assert_eq!(f.len(), 1);
        let r = rules("rule g category=major\nmatch: norm=\"he\"\nmatch: gap=0..3\nmatch: norm=\"her\"\nmessage: m\n");
        let d = doc("He saw her and her dog.");
        let f = check_grammar(&d, &r);
        assert_eq!((f[0].token_start, f[0].token_end), (0, 5));
    }

    #[test]
    fn matches_stay_inside_sentences() {
        let r = rules("rule x category=major\nmatch: norm=\"b\"\nmatch: norm=\"c\"\nmessage: m\n");
        assert!(check_grammar(&doc("a b. c d."), &r).is_empty());
        assert_eq!(check_grammar(&doc("a b c d."), &r).len(), 1);
    }

    #[test]
    fn standard_pack_named_cases() {
        let std = GrammarRule::standard();
        let ids = |s: &str| check_grammar(&doc(s), &std).into_iter().map(|f| f.rule_id).collect::<Vec<_>>();
        assert!(ids("He is known for her intelligence.").contains(&"major_he_known_for_her".to_string()));
        assert!(ids("The affect of money is large.").contains(&"repl_affect_noun".to_string()));
        assert!(ids("I will meet u soon.").contains(&"style_u".to_string()));
        assert!(ids("We saw the the lake.").contains(&"misc_doubled_word".to_string()));
        assert!(ids("We saw  the lake.").contains(&"misc_double_space".to_string()));
        assert!(ids("this is wrong.").contains(&"cap_sentence_start".to_string()));
        assert!(ids("The wster is cold.").contains(&"typo_wster".to_string()));
        assert!(ids("He have a car.").contains(&"major_third_person_have".to_string()));
        assert!(ids("It is late , so we left.").contains(&"punct_space_before".to_string()));
        assert!(ids("It is late,so we left.").contains(&"punct_missing_space_after_comma".to_string()));
        let clean = "The government must reduce corruption. Leaders should respect the law.";
        assert!(ids(clean).is_empty(), "{:?}", ids(clean));
    }

    #[test]
    fn corrections_from_standard_pack() {
        let std = GrammarRule::standard();
        let d = doc("he have a car  and u know it .");
        let fixed = apply_corrections(&d, &check_grammar(&d, &std));
        // cap_sentence_start and major_third_person_have overlap at "he": the earlier span wins
        assert_eq!(fixed, "He have a car and you know it.");
    }

    #[test]
    fn overlapping_suggestions_first_wins() {
        let r = rules(
            "rule a category=style\nmatch: norm=\"x\"\nmatch: norm=\"y\"\nsuggest: XY\nmessage: m\n\n\
             rule b category=style\nmatch: norm=\"y\"\nmatch: norm=\"z\"\nsuggest: YZ\nmessage: m\n",
        );
        let d = doc("x y z");
        let f = check_grammar(&d, &r);
        assert_eq!(f.len(), 2);
        let fixed = apply_corrections(&d, &f);
        assert_eq!(fixed, "XY z");
        assert_eq!(crate::text::tokenize(&fixed).len(), 2);
        assert_eq!(apply_corrections(&d, &[]), "x y z");
    }

    fn finding(cat: RuleCategory) -> GrammarFinding {
        GrammarFinding {
            rule_id: cat.name().to_string(),
            category: cat,
            token_start: 0,
            token_end: 1,
            byte_start: 0,
            byte_end: 1,
            message: String::new(),
            suggestion: None,
        }
    }

    fn words(n: usize) -> Document {
        doc(&vec!["word"; n].join(" "))
    }

    #[test]
    fn density_examples() {
        let six = vec![finding(RuleCategory::Style); 6];
        assert!((grammar_error_density(&six, &words(300), None).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(grammar_error_density(&[], &words(10), None).unwrap(), 0.0);
        let mixed = vec![finding(RuleCategory::Major), finding(RuleCategory::Major), finding(RuleCategory::Style)];
        let w = grammar_error_density(&mixed, &words(100), Some(&SeverityProfile::default())).unwrap();
        assert!((w - 4.5).abs() < 1e-12);
        assert!(matches!(grammar_error_density(&[], &doc("!!"), None), Err(Error::EmptyDocument)));
    }

    #[test]
    fn coverage_examples() {
        let two = vec![finding(RuleCategory::Style), finding(RuleCategory::Major), finding(RuleCategory::Major)];
        assert!((grammar_error_coverage(&two, &words(200), CoverageMode::Bucket).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(grammar_error_coverage(&[], &words(20), CoverageMode::Bucket).unwrap(), 0.0);
        let ten = vec![finding(RuleCategory::Punctuation); 10];
        assert!((grammar_error_coverage(&ten, &words(100), CoverageMode::Bucket).unwrap() - 1.0).abs() < 1e-12);
        let mut by_rule = ten.clone();
        by_rule[3].rule_id = "other".into();
        assert!((grammar_error_coverage(&by_rule, &words(100), CoverageMode::RuleId).unwrap() - 2.0).abs() < 1e-12);
        assert!(grammar_error_coverage(&[], &doc(""), CoverageMode::Bucket).is_err());
    }

    proptest! {
        #[test]
        fn duplication_preserves_density(idx in proptest::collection::vec(0usize..8, 1..12)) {
            let pool = ["he have a car.", "The cat sleeps.", "i like u a lot.", "We saw the the lake.",
                        "this is fine.", "It is late , ok.", "Birds fly high.", "They was here."];
            let text: String = idx.iter().map(|&i| pool[i]).collect::<Vec<_>>().join(" ");
            let std = GrammarRule::standard();
            let once = doc(&text);
            let twice = doc(&format!("{text} {text}"));
            let f1 = check_grammar(&once, &std);
            let f2 = check_grammar(&twice, &std);
            prop_assert_eq!(f2.len(), 2 * f1.len());
            let d1 = grammar_error_density(&f1, &once, None).unwrap();
            let d2 = grammar_error_density(&f2, &twice, None).unwrap();
            prop_assert!((d1 - d2).abs() < 1e-12);
            let cov = grammar_error_coverage(&f1, &once, CoverageMode::Bucket).unwrap();
            prop_assert!(cov <= d1 + 1e-12);
            prop_assert_eq!(&f1, &check_grammar(&once, &std));
            let fixed = apply_corrections(&once, &f1);
            let delta: i64 = f1.iter().filter_map(|f| f.suggestion.as_ref().map(|s| s.len() as i64 - (f.byte_end - f.byte_start) as i64)).filter(|d| *d > 0).sum();
            prop_assert!(fixed.len() as i64 <= text.len() as i64 + delta);
        }
    }
}
