//! Rule-based sentence segmentation and tokenisation.
//!
//! A sentence ends at a newline, or at `.`, `!` or `?` (plus any closing
//! quotes or brackets) followed by whitespace and then an uppercase letter,
//! a digit or an opening quote. A period does not end a sentence when the
//! word it belongs to is a known abbreviation or a single capital initial.

use serde::{Deserialize, Serialize};

/// Lowercase abbreviations, trailing period included.
pub const ABBREVIATIONS: &[&str] = &[
    "e.g.", "i.e.", "etc.", "vs.", "viz.", "cf.", "al.", "approx.", "no.", "nos.", "nr.", "art.", "arts.", "sec.",
    "secs.", "para.", "paras.", "ch.", "chap.", "cl.", "p.", "pp.", "vol.", "ed.", "fig.", "inc.", "ltd.", "llc.",
    "corp.", "co.", "plc.", "gmbh.", "s.a.", "s.r.l.", "b.v.", "n.v.", "a.g.", "bros.", "dept.", "est.", "mr.", "mrs.",
    "ms.", "dr.", "prof.", "st.", "jr.", "sr.", "u.s.", "u.s.a.", "u.k.", "e.u.", "jan.", "feb.", "mar.", "apr.",
    "jun.", "jul.", "aug.", "sep.", "sept.", "oct.", "nov.", "dec.", "min.", "max.", "incl.", "excl.", "resp.", "ca.",
    "a.m.", "p.m.",
];

/// A sentence of a document's plain text; offsets count chars.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub start: usize,
    pub end: usize,
    pub text: String,
    pub tokens: Vec<String>,
}

impl Sentence {
    pub fn new(start: usize, end: usize, text: String) -> Self {
        let tokens = tokenize(&text);
        Sentence { start, end, text, tokens }
    }
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '}' | '’' | '”' | '»')
}

fn is_quote(c: char) -> bool {
    matches!(c, '"' | '\'' | '“' | '‘' | '«' | '„')
}

/// Whether the word ending with the period at `dot` is an abbreviation.
fn is_abbreviation(chars: &[char], dot: usize) -> bool {
    let mut begin = dot;
    while begin > 0 && !chars[begin - 1].is_whitespace() {
        begin -= 1;
    }
    let word = &chars[begin..=dot];
    let lead = word.iter().take_while(|c| !c.is_alphanumeric()).count();
    let word = &word[lead..];
    if word.len() == 2 && word[0].is_uppercase() {
        return true;
    }
    let lower: String = word.iter().flat_map(|c| c.to_lowercase()).collect();
    ABBREVIATIONS.contains(&lower.as_str())
}

/// Splits `plain` into ordered, non-overlapping sentences covering every
/// non-whitespace char exactly once.
pub fn segment_sentences(plain: &str) -> Vec<Sentence> {
    let chars: Vec<char> = plain.chars().collect();
    let mut sentences = Vec::new();
    let mut start: Option<usize> = None;
    // One past the last non-whitespace char of the open sentence.
    let mut last = 0usize;

    let close = |start: &mut Option<usize>, end: usize, sentences: &mut Vec<Sentence>| {
        if let Some(s) = start.take() {
            sentences.push(Sentence::new(s, end, chars[s..end].iter().collect()));
        }
    };

    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            close(&mut start, last, &mut sentences);
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if start.is_none() {
            start = Some(i);
        }
        last = i + 1;
        if !is_terminal(c) {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < chars.len() && is_terminal(chars[j]) {
            j += 1;
        }
        while j < chars.len() && is_closing(chars[j]) {
            j += 1;
        }
        last = j;
        if j < chars.len() && chars[j].is_whitespace() {
            let next = chars[j..].iter().copied().find(|c| !c.is_whitespace());
            let opens_sentence = next.is_some_and(|n| n.is_uppercase() || n.is_ascii_digit() || is_quote(n));
            let abbreviated = c == '.' && j == i + 1 && is_abbreviation(&chars, i);
            if opens_sentence && !abbreviated {
                close(&mut start, j, &mut sentences);
            }
        }
        i = j;
    }
    close(&mut start, last, &mut sentences);
    sentences
}

/// Lowercased word and punctuation tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_with(text, true)
}

/// Splits at whitespace and between alphanumeric runs and punctuation; every
/// punctuation char is its own token.
pub fn tokenize_with(text: &str, lowercase: bool) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    let push_char = |buf: &mut String, c: char| {
        if lowercase {
            buf.extend(c.to_lowercase());
        } else {
            buf.push(c);
        }
    };
    for c in text.chars() {
        if c.is_alphanumeric() {
            push_char(&mut word, c);
            continue;
        }
        if !word.is_empty() {
            tokens.push(std::mem::take(&mut word));
        }
        if !c.is_whitespace() {
            let mut punct = String::new();
            push_char(&mut punct, c);
            tokens.push(punct);
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    tokens
}
