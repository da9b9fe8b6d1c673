//! Maps raw completion text to structured outcomes.
//!
//! Coding is two-stage and auditable: strict mode requires the first
//! non-empty line to equal one option label (or its enumeration tag);
//! lenient mode falls back to the earliest occurrence of a label anywhere
//! in the text. The mode that succeeded is recorded on the outcome.
//! Ambiguity is an error, never a guess.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which of the four experiment outcome shapes a response should parse to.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    BinaryChoice,
    Rating,
    BudgetOption,
    Hire,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Choice {
    Left,
    Right,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rating {
    CompletelyFair,
    Acceptable,
    Unfair,
    VeryUnfair,
}

impl Rating {
    pub fn label(self) -> &'static str {
        match self {
            Rating::CompletelyFair => "Completely Fair",
            Rating::Acceptable => "Acceptable",
            Rating::Unfair => "Unfair",
            Rating::VeryUnfair => "Very Unfair",
        }
    }

    pub const ALL: [Rating; 4] = [
        Rating::CompletelyFair,
        Rating::Acceptable,
        Rating::Unfair,
        Rating::VeryUnfair,
    ];
}

/// A parsed outcome. Option indices are zero-based positions into the
/// option label list handed to the parser.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    BinaryChoice { choice: Choice },
    Rating { rating: Rating },
    BudgetOption { index: usize },
    Hire { index: usize },
}

impl Outcome {
    fn from_label_index(kind: OutcomeKind, index: usize) -> Outcome {
        match kind {
            OutcomeKind::BinaryChoice => Outcome::BinaryChoice {
                choice: if index == 0 { Choice::Left } else { Choice::Right },
            },
            OutcomeKind::Rating => Outcome::Rating {
                rating: Rating::ALL[index],
            },
            OutcomeKind::BudgetOption => Outcome::BudgetOption { index },
            OutcomeKind::Hire => Outcome::Hire { index },
        }
    }

    /// The zero-based option index this outcome corresponds to.
    pub fn option_index(&self) -> usize {
        match self {
            Outcome::BinaryChoice { choice } => match choice {
                Choice::Left => 0,
                Choice::Right => 1,
            },
            Outcome::Rating { rating } => *rating as usize,
            Outcome::BudgetOption { index } | Outcome::Hire { index } => *index,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::BinaryChoice { choice } => write!(f, "{choice:?}"),
            Outcome::Rating { rating } => f.write_str(rating.label()),
            Outcome::BudgetOption { index } => write!(f, "option {}", index + 1),
            Outcome::Hire { index } => write!(f, "Person {}", index + 1),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseMode {
    Strict,
    Lenient,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedOutcome {
    pub outcome: Outcome,
    /// Byte range of the matched text within the raw response.
    pub matched_span: Range<usize>,
    pub mode_used: ParseMode,
}

#[derive(Clone, Debug, Error, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseError {
    #[error("no option label found in response")]
    NoMatch,
    #[error("ambiguous response: candidates {0:?}")]
    Ambiguous(Vec<Outcome>),
    #[error("empty response")]
    Empty,
}

/// A whitespace-delimited token with leading/trailing punctuation stripped.
#[derive(Clone, Debug)]
struct Token {
    text: String,
    start: usize,
    end: usize,
}

fn strip_edge(c: char) -> bool {
    c.is_ascii_punctuation() && c != '%'
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    loop {
        while let Some(&(_, c)) = chars.peek() {
            if c.is_whitespace() {
                chars.next();
            } else {
                break;
            }
        }
        let Some(&(word_start, _)) = chars.peek() else {
            break;
        };
        let mut word_end = word_start;
        while let Some(&(i, c)) = chars.peek() {
            if c.is_whitespace() {
                break;
            }
            word_end = i + c.len_utf8();
            chars.next();
        }
        let word = &text[word_start..word_end];
        let Some(core_start) = word.char_indices().find(|&(_, c)| !strip_edge(c)).map(|(i, _)| i)
        else {
            continue; // all punctuation, drop
        };
        let core_end = word
            .char_indices()
            .rev()
            .find(|&(_, c)| !strip_edge(c))
            .map(|(i, c)| i + c.len_utf8())
            .unwrap();
        tokens.push(Token {
            text: word[core_start..core_end].to_lowercase(),
            start: word_start + core_start,
            end: word_start + core_end,
        });
    }
    tokens
}

fn label_tokens(label: &str) -> Vec<String> {
    tokenize(label).into_iter().map(|t| t.text).collect()
}

/// A candidate match: `pos..pos + len` in token space, for option `index`.
#[derive(Clone, Debug)]
struct Match {
    token_pos: usize,
    token_len: usize,
    index: usize,
}

fn find_label_matches(tokens: &[Token], labels: &[Vec<String>]) -> Vec<Match> {
    let mut matches = Vec::new();
    for (index, label) in labels.iter().enumerate() {
        if label.is_empty() {
            continue;
        }
        for pos in 0..tokens.len() {
            if pos + label.len() > tokens.len() {
                break;
            }
            if tokens[pos..pos + label.len()]
                .iter()
                .zip(label)
                .all(|(t, l)| &t.text == l)
            {
                matches.push(Match {
                    token_pos: pos,
                    token_len: label.len(),
                    index,
                });
            }
        }
    }
    matches
}

fn is_contiguous_subsequence(needle: &[String], haystack: &[String]) -> bool {
    needle.len() < haystack.len()
        && haystack
            .windows(needle.len())
            .any(|window| window == needle)
}

/// Drops matches of any label that is a sub-phrase of a longer label with at
/// least one match, so "very unfair" always claims its embedded "unfair".
fn suppress_subphrase_labels(matches: Vec<Match>, labels: &[Vec<String>]) -> Vec<Match> {
    let matched: Vec<bool> = (0..labels.len())
        .map(|i| matches.iter().any(|m| m.index == i))
        .collect();
    matches
        .into_iter()
        .filter(|m| {
            !labels.iter().enumerate().any(|(other, other_tokens)| {
                other != m.index
                    && matched[other]
                    && is_contiguous_subsequence(&labels[m.index], other_tokens)
            })
        })
        .collect()
}

fn find_tag_matches(tokens: &[Token], n_labels: usize, label_matches: &[Match]) -> Vec<Match> {
    let mut matches = Vec::new();
    for (pos, token) in tokens.iter().enumerate() {
        let inside_label = label_matches
            .iter()
            .any(|m| pos >= m.token_pos && pos < m.token_pos + m.token_len);
        if inside_label {
            continue;
        }
        if let Ok(tag) = token.text.parse::<usize>() {
            if tag >= 1 && tag <= n_labels {
                matches.push(Match {
                    token_pos: pos,
                    token_len: 1,
                    index: tag - 1,
                });
            }
        }
    }
    matches
}

fn span_of(tokens: &[Token], m: &Match) -> Range<usize> {
    tokens[m.token_pos].start..tokens[m.token_pos + m.token_len - 1].end
}

fn distinct_outcomes(kind: OutcomeKind, matches: &[Match]) -> Vec<Outcome> {
    let mut seen = Vec::new();
    for m in matches {
        let outcome = Outcome::from_label_index(kind, m.index);
        if !seen.contains(&outcome) {
            seen.push(outcome);
        }
    }
    seen
}

/// Strict parse: the first non-empty line must equal one option label or an
/// enumeration tag ("3", "3)", "(3)", "3.").
pub fn parse_strict(
    kind: OutcomeKind,
    raw_text: &str,
    option_labels: &[&str],
) -> Result<ParsedOutcome, ParseError> {
    if raw_text.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut offset = 0;
    let mut line = "";
    for candidate in raw_text.split('\n') {
        if !candidate.trim().is_empty() {
            line = candidate;
            break;
        }
        offset += candidate.len() + 1;
    }
    let tokens = tokenize(line);
    if tokens.is_empty() {
        return Err(ParseError::NoMatch);
    }
    let line_tokens: Vec<String> = tokens.iter().map(|t| t.text.clone()).collect();
    for (index, label) in option_labels.iter().enumerate() {
        if line_tokens == label_tokens(label) {
            return Ok(ParsedOutcome {
                outcome: Outcome::from_label_index(kind, index),
                matched_span: offset + tokens[0].start..offset + tokens.last().unwrap().end,
                mode_used: ParseMode::Strict,
            });
        }
    }
    if tokens.len() == 1 {
        if let Ok(tag) = tokens[0].text.parse::<usize>() {
            if tag >= 1 && tag <= option_labels.len() {
                return Ok(ParsedOutcome {
                    outcome: Outcome::from_label_index(kind, tag - 1),
                    matched_span: offset + tokens[0].start..offset + tokens[0].end,
                    mode_used: ParseMode::Strict,
                });
            }
        }
    }
    Err(ParseError::NoMatch)
}

/// Lenient parse over the whole text.
///
/// Labels are matched longest-first: a label that is a sub-phrase of another
/// matching label never wins. Among surviving label matches the earliest
/// occurrence decides. Enumeration tags are a fallback signal; conflicting
/// tags, or a tag that contradicts the matched label, are ambiguous.
pub fn parse_lenient(
    kind: OutcomeKind,
    raw_text: &str,
    option_labels: &[&str],
) -> Result<ParsedOutcome, ParseError> {
    if raw_text.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let tokens = tokenize(raw_text);
    let labels: Vec<Vec<String>> = option_labels.iter().map(|l| label_tokens(l)).collect();

    let label_matches = suppress_subphrase_labels(find_label_matches(&tokens, &labels), &labels);
    let tag_matches = find_tag_matches(&tokens, option_labels.len(), &label_matches);

    let tag_outcomes = distinct_outcomes(kind, &tag_matches);
    if tag_outcomes.len() >= 2 {
        return Err(ParseError::Ambiguous(tag_outcomes));
    }

    if let Some(earliest) = label_matches.iter().map(|m| m.token_pos).min() {
        let mut at_front: Vec<&Match> = label_matches
            .iter()
            .filter(|m| m.token_pos == earliest)
            .collect();
        at_front.sort_by(|a, b| b.token_len.cmp(&a.token_len));
        let best = at_front[0];
        let rivals: Vec<Outcome> = at_front
            .iter()
            .filter(|m| m.token_len == best.token_len)
            .map(|m| Outcome::from_label_index(kind, m.index))
            .collect();
        let mut candidates = rivals.clone();
        candidates.dedup();
        if candidates.len() >= 2 {
            return Err(ParseError::Ambiguous(candidates));
        }
        let outcome = Outcome::from_label_index(kind, best.index);
        if let Some(tag_outcome) = tag_outcomes.first() {
            if *tag_outcome != outcome {
                return Err(ParseError::Ambiguous(vec![outcome, tag_outcome.clone()]));
            }
        }
        return Ok(ParsedOutcome {
            outcome,
            matched_span: span_of(&tokens, best),
            mode_used: ParseMode::Lenient,
        });
    }

    if let Some(first_tag) = tag_matches.first() {
        return Ok(ParsedOutcome {
            outcome: Outcome::from_label_index(kind, first_tag.index),
            matched_span: span_of(&tokens, first_tag),
            mode_used: ParseMode::Lenient,
        });
    }

    Err(ParseError::NoMatch)
}

/// Parses a completion: strict first, then the lenient fallback. The mode
/// that produced the outcome is recorded in `mode_used`.
pub fn parse_outcome(
    kind: OutcomeKind,
    raw_text: &str,
    option_labels: &[&str],
) -> Result<ParsedOutcome, ParseError> {
    match parse_strict(kind, raw_text, option_labels) {
        Ok(parsed) => Ok(parsed),
        Err(ParseError::Empty) => Err(ParseError::Empty),
        Err(_) => parse_lenient(kind, raw_text, option_labels),
    }
}
