//! Rule file reader and writer.
//!
//! ```text
//! rule style_u category=style
//! match: norm="u"
//! suggest: you
//! message: Informal shorthand.
//! ```

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use super::{Constraint, GrammarRule, Matcher, Pattern, RuleCategory, Template, TemplatePart};
use crate::error::{Error, Result};
use crate::text::{TokenKind, WordClass};

pub fn parse_rules(path: &Path) -> Result<Vec<GrammarRule>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_rules_str(&text)
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::RuleSyntax {
        line,
        column,
        message: message.into(),
    }
}

struct Draft {
    id: String,
    category: RuleCategory,
    anchor: bool,
    pattern: Vec<Matcher>,
    suggestion: Option<(Template, usize)>,
    message: Option<String>,
    line: usize,
}

pub fn parse_rules_str(text: &str) -> Result<Vec<GrammarRule>> {
    let mut rules = Vec::new();
    let mut ids = HashSet::new();
    let mut draft: Option<Draft> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end();
        if line.trim_start().starts_with('#') {
            continue;
        }
        if line.trim().is_empty() {
            if let Some(d) = draft.take() {
                rules.push(finish(d, &mut ids)?);
            }
            continue;
        }
        let indent = line.len() - line.trim_start().len();
        let body = line.trim_start();
        if let Some(rest) = body.strip_prefix("rule ") {
            if let Some(d) = draft.take() {
                rules.push(finish(d, &mut ids)?);
            }
            draft = Some(parse_header(rest, line_no, indent + 5)?);
            continue;
        }
        let Some(d) = draft.as_mut() else {
            return Err(syntax(line_no, indent + 1, "expected `rule <id> category=<name>`"));
        };
        if let Some(rest) = body.strip_prefix("match:") {
            let col = indent + "match:".len() + 1;
            d.pattern.push(parse_matcher(rest, line_no, col)?);
        } else if let Some(rest) = body.strip_prefix("suggest:") {
            let col = indent + "suggest:".len() + 1;
            d.suggestion = Some((parse_template(rest.trim(), line_no, col)?, line_no));
        } else if let Some(rest) = body.strip_prefix("message:") {
            d.message = Some(rest.trim().to_string());
        } else {
            return Err(syntax(
                line_no,
                indent + 1,
                "expected `match:`, `suggest:` or `message:`",
            ));
        }
    }
    if let Some(d) = draft.take() {
        rules.push(finish(d, &mut ids)?);
    }
    Ok(rules)
}

fn parse_header(rest: &str, line: usize, col0: usize) -> Result<Draft> {
    let mut words = split_words(rest, col0);
    let (id, _) = words
        .next()
        .ok_or_else(|| syntax(line, col0, "missing rule id"))?;
    if id.contains('=') {
        return Err(syntax(line, col0, "missing rule id"));
    }
    let mut category = None;
    let mut anchor = false;
    for (word, col) in words {
        match word.split_once('=') {
            Some(("category", name)) => category = Some(name.parse::<RuleCategory>()?),
            Some(("anchor", "sentence_start")) => anchor = true,
            Some(("anchor", other)) => {
                return Err(syntax(line, col, format!("unknown anchor `{other}`")))
            }
            _ => return Err(syntax(line, col, format!("unexpected `{word}` in rule header"))),
        }
    }
    let category = category.ok_or_else(|| syntax(line, col0, "missing category="))?;
    Ok(Draft {
        id: id.to_string(),
        category,
        anchor,
        pattern: Vec::new(),
        suggestion: None,
        message: None,
        line,
    })
}

fn finish(d: Draft, ids: &mut HashSet<String>) -> Result<GrammarRule> {
    if !d.pattern.iter().any(|m| matches!(m, Matcher::Token(_))) {
        return Err(syntax(d.line, 1, format!("rule `{}` needs at least one token matcher", d.id)));
    }
    for (pos, m) in d.pattern.iter().enumerate() {
        if let Matcher::Token(cs) = m {
            for c in cs {
                if let Constraint::Same(n) = *c {
                    let ok = n >= 1 && n <= pos && matches!(d.pattern[n - 1], Matcher::Token(_));
                    if !ok {
                        return Err(syntax(
                            d.line,
                            1,
                            format!("rule `{}`: same=${n} must name an earlier token matcher", d.id),
                        ));
                    }
                }
            }
        }
    }
    if let Some((t, line)) = &d.suggestion {
        for part in &t.0 {
            if let TemplatePart::Ref { position, .. } = part {
                if *position == 0 || *position > d.pattern.len() {
                    return Err(syntax(
                        *line,
                        1,
                        format!("suggestion references ${position} but the pattern has {} positions", d.pattern.len()),
                    ));
                }
            }
        }
    }
    let message = d
        .message
        .ok_or_else(|| syntax(d.line, 1, format!("rule `{}` has no message", d.id)))?;
    if !ids.insert(d.id.clone()) {
        return Err(Error::DuplicateRule(d.id));
    }
    Ok(GrammarRule {
        id: d.id,
        category: d.category,
        anchor_sentence_start: d.anchor,
        pattern: d.pattern,
        suggestion: d.suggestion.map(|(t, _)| t),
        message,
    })
}

/// Whitespace-separated words with their 1-based starting columns.
fn split_words(s: &str, col0: usize) -> impl Iterator<Item = (&str, usize)> {
    let mut pos = 0;
    std::iter::from_fn(move || {
        let rest = &s[pos..];
        let skip = rest.len() - rest.trim_start().len();
        let start = pos + skip;
        if start >= s.len() {
            return None;
        }
        let len = s[start..].find(char::is_whitespace).unwrap_or(s.len() - start);
        pos = start + len;
        Some((&s[start..start + len], col0 + s[..start].chars().count()))
    })
}

fn parse_matcher(s: &str, line: usize, col0: usize) -> Result<Matcher> {
    let chars: Vec<(usize, char)> = s.char_indices().collect();
    let col_at = |i: usize| col0 + s[..chars.get(i).map_or(s.len(), |c| c.0)].chars().count();
    let mut i = 0;
    let mut constraints = Vec::new();
    let mut gap = None;
    while i < chars.len() {
        if chars[i].1.is_whitespace() {
            i += 1;
            continue;
        }
        let key_start = i;
        while i < chars.len() && chars[i].1 != '=' && !chars[i].1.is_whitespace() {
            i += 1;
        }
        let key = &s[chars[key_start].0..chars.get(i).map_or(s.len(), |c| c.0)];
        if i >= chars.len() || chars[i].1 != '=' {
            return Err(syntax(line, col_at(key_start), format!("expected `{key}=<value>`")));
        }
        i += 1;
        let value_col = col_at(i);
        let value = match chars.get(i).map(|c| c.1) {
            Some('"') => {
                let mut out = String::new();
                i += 1;
                loop {
                    match chars.get(i).map(|c| c.1) {
                        None => return Err(syntax(line, value_col, "unterminated string")),
                        Some('\\') if i + 1 < chars.len() => {
                            out.push(chars[i + 1].1);
                            i += 2;
                        }
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some(c) => {
                            out.push(c);
                            i += 1;
                        }
                    }
                }
                Value::Str(out)
            }
            Some('/') => {
                let mut out = String::new();
                i += 1;
                loop {
                    match chars.get(i).map(|c| c.1) {
                        None => return Err(syntax(line, value_col, "unterminated regex")),
                        Some('\\') if chars.get(i + 1).map(|c| c.1) == Some('/') => {
                            out.push('/');
                            i += 2;
                        }
                        Some('/') => {
                            i += 1;
                            break;
                        }
                        Some(c) => {
                            out.push(c);
                            i += 1;
                        }
                    }
                }
                let ci = chars.get(i).map(|c| c.1) == Some('i');
                if ci {
                    i += 1;
                }
                let pat = Pattern::new(&out, ci)
                    .map_err(|e| syntax(line, value_col, format!("bad regex: {e}")))?;
                Value::Re(pat)
            }
            Some(_) => {
                let start = i;
                while i < chars.len() && !chars[i].1.is_whitespace() {
                    i += 1;
                }
                Value::Bare(s[chars[start].0..chars.get(i).map_or(s.len(), |c| c.0)].to_string())
            }
            None => return Err(syntax(line, value_col, "missing value")),
        };
        if i < chars.len() && !chars[i].1.is_whitespace() {
            return Err(syntax(line, col_at(i), "expected whitespace between constraints"));
        }
        let bad = |what: &str| syntax(line, value_col, format!("`{key}` expects {what}"));
        let constraint = match (key, value) {
            ("surface", Value::Str(v)) => Constraint::Surface(v),
            ("norm", Value::Str(v)) => Constraint::Norm(v.to_lowercase()),
            ("regex", Value::Re(p)) => Constraint::Regex(p),
            ("not_regex", Value::Re(p)) => Constraint::NotRegex(p),
            ("ws_before", Value::Re(p)) => Constraint::WsBefore(p),
            ("class", Value::Bare(v)) => Constraint::Class(match v.as_str() {
                "lexical" => WordClass::Lexical,
                "grammatical" => WordClass::Grammatical,
                _ => return Err(bad("grammatical|lexical")),
            }),
            ("kind", Value::Bare(v)) => Constraint::Kind(match v.as_str() {
                "word" => TokenKind::Word,
                "number" => TokenKind::Number,
                "punct" => TokenKind::Punctuation,
                _ => return Err(bad("word|number|punct")),
            }),
            ("same", Value::Bare(v)) => Constraint::Same(
                v.strip_prefix('$')
                    .and_then(|n| n.parse().ok())
                    .ok_or_else(|| bad("$<position>"))?,
            ),
            ("gap", Value::Bare(v)) => {
                let (lo, hi) = v
                    .split_once("..")
                    .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
                    .filter(|(a, b)| a <= b)
                    .ok_or_else(|| bad("<min>..<max>"))?;
                gap = Some((lo, hi));
                continue;
            }
            ("surface" | "norm", _) => return Err(bad("a quoted string")),
            ("regex" | "not_regex" | "ws_before", _) => return Err(bad("a /regex/")),
            ("class" | "kind" | "same" | "gap", _) => return Err(bad("a bare value")),
            (other, _) => {
                return Err(syntax(line, col_at(key_start), format!("unknown constraint `{other}`")))
            }
        };
        constraints.push(constraint);
    }
    match gap {
        Some(_) if !constraints.is_empty() => {
            Err(syntax(line, col0, "gap= cannot be combined with other constraints"))
        }
        Some((min, max)) => Ok(Matcher::Gap { min, max }),
        None => Ok(Matcher::Token(constraints)),
    }
}

enum Value {
    Str(String),
    Re(Pattern),
    Bare(String),
}

fn parse_template(s: &str, line: usize, col0: usize) -> Result<Template> {
    let mut parts = Vec::new();
    let mut lit = String::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if chars[i] != '$' {
            lit.push(chars[i]);
            i += 1;
            continue;
        }
        if chars.get(i + 1) == Some(&'$') {
            lit.push('$');
            i += 2;
            continue;
        }
        let mut j = i + 1;
        let capitalize = chars.get(j) == Some(&'^');
        if capitalize {
            j += 1;
        }
        let digits_start = j;
        while j < chars.len() && chars[j].is_ascii_digit() {
            j += 1;
        }
        if j == digits_start {
            return Err(syntax(line, col0 + i, "`$` must be followed by a position number"));
        }
        let position: usize = chars[digits_start..j].iter().collect::<String>().parse().unwrap_or(0);
        if !lit.is_empty() {
            parts.push(TemplatePart::Literal(std::mem::take(&mut lit)));
        }
        parts.push(TemplatePart::Ref {
            position,
            capitalize,
        });
        i = j;
    }
    if !lit.is_empty() {
        parts.push(TemplatePart::Literal(lit));
    }
    Ok(Template(parts))
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Writes rules back in the DSL; `parse_rules_str(rules_to_dsl(r)) == r`.
pub fn rules_to_dsl(rules: &[GrammarRule]) -> String {
    let mut out = String::new();
    for r in rules {
        let _ = write!(out, "rule {} category={}", r.id, r.category);
        if r.anchor_sentence_start {
            out.push_str(" anchor=sentence_start");
        }
        out.push('\n');
        for m in &r.pattern {
            out.push_str("match:");
            match m {
                Matcher::Gap { min, max } => {
                    let _ = write!(out, " gap={min}..{max}");
                }
                Matcher::Token(cs) => {
                    for c in cs {
                        out.push(' ');
                        match c {
                            Constraint::Surface(v) => out.push_str(&format!("surface={}", quote(v))),
                            Constraint::Norm(v) => out.push_str(&format!("norm={}", quote(v))),
                            Constraint::Regex(p) => out.push_str(&format!("regex={p}")),
                            Constraint::NotRegex(p) => out.push_str(&format!("not_regex={p}")),
                            Constraint::WsBefore(p) => out.push_str(&format!("ws_before={p}")),
                            Constraint::Class(WordClass::Grammatical) => out.push_str("class=grammatical"),
                            Constraint::Class(_) => out.push_str("class=lexical"),
                            Constraint::Kind(TokenKind::Word) => out.push_str("kind=word"),
                            Constraint::Kind(TokenKind::Number) => out.push_str("kind=number"),
                            Constraint::Kind(TokenKind::Punctuation) => out.push_str("kind=punct"),
                            Constraint::Same(n) => out.push_str(&format!("same=${n}")),
                        }
                    }
                }
            }
            out.push('\n');
        }
        if let Some(t) = &r.suggestion {
            out.push_str("suggest: ");
            for part in &t.0 {
                match part {
                    TemplatePart::Literal(s) => out.push_str(&s.replace('$', "$$")),
                    TemplatePart::Ref { position, capitalize } => {
                        out.push('$');
                        if *capitalize {
                            out.push('^');
                        }
                        let _ = write!(out, "{position}");
                    }
                }
            }
            out.push('\n');
        }
        let _ = writeln!(out, "message: {}", r.message);
        out.push('\n');
    }
    out
}
