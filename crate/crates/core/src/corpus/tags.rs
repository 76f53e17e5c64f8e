//! Inline clause tags: `<SYMLVL>…</SYMLVL>`.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// The eight clause categories and their tag symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClauseCategory {
    Arbitration,
    UnilateralChange,
    ContentRemoval,
    Jurisdiction,
    ChoiceOfLaw,
    LimitationOfLiability,
    UnilateralTermination,
    ContractByUsing,
}

impl ClauseCategory {
    pub const ALL: [ClauseCategory; 8] = [
        ClauseCategory::Arbitration,
        ClauseCategory::UnilateralChange,
        ClauseCategory::ContentRemoval,
        ClauseCategory::Jurisdiction,
        ClauseCategory::ChoiceOfLaw,
        ClauseCategory::LimitationOfLiability,
        ClauseCategory::UnilateralTermination,
        ClauseCategory::ContractByUsing,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            ClauseCategory::Arbitration => "a",
            ClauseCategory::UnilateralChange => "ch",
            ClauseCategory::ContentRemoval => "cr",
            ClauseCategory::Jurisdiction => "j",
            ClauseCategory::ChoiceOfLaw => "law",
            ClauseCategory::LimitationOfLiability => "ltd",
            ClauseCategory::UnilateralTermination => "ter",
            ClauseCategory::ContractByUsing => "use",
        }
    }

    pub fn from_symbol(symbol: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.symbol() == symbol)
    }

    /// Human readable name, as used in reports.
    pub fn name(self) -> &'static str {
        match self {
            ClauseCategory::Arbitration => "Arbitration",
            ClauseCategory::UnilateralChange => "Unilateral change",
            ClauseCategory::ContentRemoval => "Content removal",
            ClauseCategory::Jurisdiction => "Jurisdiction",
            ClauseCategory::ChoiceOfLaw => "Choice of law",
            ClauseCategory::LimitationOfLiability => "Limitation of liability",
            ClauseCategory::UnilateralTermination => "Unilateral termination",
            ClauseCategory::ContractByUsing => "Contract by using",
        }
    }

    /// Position in [`ClauseCategory::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ClauseCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Degree of (un)fairness attached to a tag: 1 clearly fair, 2 potentially
/// unfair, 3 clearly unfair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct FairnessLevel(u8);

impl FairnessLevel {
    pub const CLEARLY_FAIR: FairnessLevel = FairnessLevel(1);
    pub const POTENTIALLY_UNFAIR: FairnessLevel = FairnessLevel(2);
    pub const CLEARLY_UNFAIR: FairnessLevel = FairnessLevel(3);

    pub fn new(value: u8) -> Option<Self> {
        (1..=3).contains(&value).then_some(FairnessLevel(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// Level 2 or 3.
    pub fn is_unfair(self) -> bool {
        self.0 >= 2
    }
}

impl TryFrom<u8> for FairnessLevel {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        FairnessLevel::new(value).ok_or_else(|| format!("fairness level {value} not in 1..=3"))
    }
}

impl From<FairnessLevel> for u8 {
    fn from(level: FairnessLevel) -> u8 {
        level.0
    }
}

/// A tagged region of the plain text, as half-open character offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagSpan {
    pub category: ClauseCategory,
    pub level: FairnessLevel,
    pub start: usize,
    pub end: usize,
}

impl TagSpan {
    /// Opening tag text, e.g. `<ltd3>`.
    pub fn open_tag(&self) -> String {
        format!("<{}{}>", self.category.symbol(), self.level.value())
    }

    pub fn close_tag(&self) -> String {
        format!("</{}{}>", self.category.symbol(), self.level.value())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TagError {
    #[error("unknown tag <{tag}> at line {line}, column {column}")]
    UnknownTag { tag: String, line: usize, column: usize },
    #[error("unbalanced tag <{tag}> at line {line}, column {column}")]
    UnbalancedTag { tag: String, line: usize, column: usize },
    #[error("tag <{tag}> at line {line}, column {column} closes across an open <{open}>")]
    CrossedNesting { tag: String, open: String, line: usize, column: usize },
    #[error("tag <{tag}> at line {line}, column {column} encloses no text")]
    EmptyTag { tag: String, line: usize, column: usize },
}

/// How strictly closing tags are matched.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TagMode {
    #[default]
    Strict,
    /// An opening tag identical to the innermost open tag closes it
    /// (`<ltd3> … <ltd3>`).
    Lenient,
}

/// Plain text with its clause spans.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedText {
    pub plain: String,
    pub spans: Vec<TagSpan>,
}

struct RawTag {
    closing: bool,
    name: String,
    /// Length of the whole `<…>` in chars.
    len: usize,
}

/// Recognises `<`, optional `/`, letters, digits, `>` with optional blanks
/// inside the brackets. Anything else is ordinary text.
fn scan_tag(chars: &[char]) -> Option<RawTag> {
    let mut i = 1;
    let skip_blank = |i: &mut usize| {
        while *i < chars.len() && (chars[*i] == ' ' || chars[*i] == '\t') {
            *i += 1;
        }
    };
    skip_blank(&mut i);
    let closing = chars.get(i) == Some(&'/');
    if closing {
        i += 1;
        skip_blank(&mut i);
    }
    let name_start = i;
    while i < chars.len() && chars[i].is_ascii_alphabetic() {
        i += 1;
    }
    if i == name_start {
        return None;
    }
    while i < chars.len() && chars[i].is_ascii_digit() {
        i += 1;
    }
    let name: String = chars[name_start..i].iter().collect();
    skip_blank(&mut i);
    if chars.get(i) != Some(&'>') {
        return None;
    }
    Some(RawTag { closing, name, len: i + 1 })
}

fn resolve(name: &str, mode: TagMode) -> Option<(ClauseCategory, FairnessLevel)> {
    let split = name.find(|c: char| c.is_ascii_digit())?;
    let (symbol, digits) = name.split_at(split);
    let symbol = match mode {
        TagMode::Strict => symbol.to_string(),
        TagMode::Lenient => symbol.to_ascii_lowercase(),
    };
    let category = ClauseCategory::from_symbol(&symbol)?;
    if digits.len() != 1 {
        return None;
    }
    let level = FairnessLevel::new(digits.parse().ok()?)?;
    Some((category, level))
}

struct OpenTag {
    category: ClauseCategory,
    level: FairnessLevel,
    span: usize,
    line: usize,
    column: usize,
}

impl OpenTag {
    fn name(&self) -> String {
        format!("{}{}", self.category.symbol(), self.level.value())
    }
}

/// Strips clause tags from `raw` in strict mode.
pub fn parse_tagged_text(raw: &str) -> Result<TaggedText, TagError> {
    parse_tagged_text_with(raw, TagMode::Strict)
}

/// Strips clause tags from `raw`, returning the plain text and one span per
/// opening tag, in opening-tag order. Offsets count chars of the plain text.
pub fn parse_tagged_text_with(raw: &str, mode: TagMode) -> Result<TaggedText, TagError> {
    let chars: Vec<char> = raw.chars().collect();
    let mut plain = String::with_capacity(raw.len());
    let mut plain_len = 0usize;
    let mut spans: Vec<TagSpan> = Vec::new();
    let mut stack: Vec<OpenTag> = Vec::new();
    let (mut line, mut column) = (1usize, 1usize);

    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '<' {
            if let Some(tag) = scan_tag(&chars[i..]) {
                let shown = if tag.closing { format!("/{}", tag.name) } else { tag.name.clone() };
                let (category, level) = resolve(&tag.name, mode).ok_or_else(|| TagError::UnknownTag {
                    tag: shown.clone(),
                    line,
                    column,
                })?;
                let closes_top = stack.last().is_some_and(|top| top.category == category && top.level == level);
                let lenient_close = mode == TagMode::Lenient && !tag.closing && closes_top;
                if tag.closing || lenient_close {
                    if closes_top {
                        let open = stack.pop().expect("non-empty stack");
                        if plain_len == spans[open.span].start {
                            return Err(TagError::EmptyTag { tag: open.name(), line: open.line, column: open.column });
                        }
                        spans[open.span].end = plain_len;
                    } else if stack.iter().any(|o| o.category == category && o.level == level) {
                        let top = stack.last().expect("non-empty stack");
                        return Err(TagError::CrossedNesting { tag: shown, open: top.name(), line, column });
                    } else {
                        return Err(TagError::UnbalancedTag { tag: shown, line, column });
                    }
                } else {
                    stack.push(OpenTag { category, level, span: spans.len(), line, column });
                    spans.push(TagSpan { category, level, start: plain_len, end: plain_len });
                }
                column += tag.len;
                i += tag.len;
                continue;
            }
        }
        plain.push(c);
        plain_len += 1;
        if c == '\n' {
            line += 1;
            column = 1;
        } else {
            column += 1;
        }
        i += 1;
    }

    if let Some(open) = stack.last() {
        return Err(TagError::UnbalancedTag { tag: open.name(), line: open.line, column: open.column });
    }
    Ok(TaggedText { plain, spans })
}

/// Re-inserts tags into `plain`. Inverse of [`parse_tagged_text`] for
/// canonical (blank-free) tag brackets.
pub fn render_tagged_text(plain: &str, spans: &[TagSpan]) -> String {
    let chars: Vec<char> = plain.chars().collect();
    // Closings before openings at the same offset; inner spans close first
    // (reverse opening order) and outer spans open first (opening order).
    let mut opens: Vec<Vec<usize>> = vec![Vec::new(); chars.len() + 1];
    let mut closes: Vec<Vec<usize>> = vec![Vec::new(); chars.len() + 1];
    for (k, span) in spans.iter().enumerate() {
        opens[span.start].push(k);
        closes[span.end].push(k);
    }
    let mut out = String::with_capacity(plain.len() + spans.len() * 12);
    for pos in 0..=chars.len() {
        for &k in closes[pos].iter().rev() {
            out.push_str(&spans[k].close_tag());
        }
        for &k in &opens[pos] {
            out.push_str(&spans[k].open_tag());
        }
        if pos < chars.len() {
            out.push(chars[pos]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn category_symbol_bijection() {
        let mut symbols: Vec<_> = ClauseCategory::ALL.iter().map(|c| c.symbol()).collect();
        for (k, c) in ClauseCategory::ALL.iter().enumerate() {
            assert_eq!(ClauseCategory::from_symbol(c.symbol()), Some(*c));
            assert_eq!(c.index(), k);
            assert_eq!(c.symbol(), c.symbol().to_lowercase());
        }
        symbols.sort();
        symbols.dedup();
        assert_eq!(symbols.len(), 8);
    }

    #[test]
    fn single_span_covers_dropbox_sentence() {
        let raw = "<j3>You and Dropbox agree that any judicial proceeding will be brought in such courts.</j3>";
        let parsed = parse_tagged_text(raw).unwrap();
        assert_eq!(parsed.spans.len(), 1);
        let span = parsed.spans[0];
        assert_eq!(span.category, ClauseCategory::Jurisdiction);
        assert_eq!(span.level.value(), 3);
        assert_eq!((span.start, span.end), (0, parsed.plain.chars().count()));
        assert!(!parsed.plain.contains('<'));
    }

    #[test]
    fn nested_rovio_tags() {
        let raw = "<j1> <a3>Any dispute shall be settled. The arbitration shall be conducted in Helsinki, Finland, in the English language.</a3> </j1>";
        let parsed = parse_tagged_text(raw).unwrap();
        assert_eq!(parsed.spans.len(), 2);
        let (outer, inner) = (parsed.spans[0], parsed.spans[1]);
        assert_eq!((outer.category, outer.level.value()), (ClauseCategory::Jurisdiction, 1));
        assert_eq!((inner.category, inner.level.value()), (ClauseCategory::Arbitration, 3));
        assert!(outer.start < inner.start && inner.end < outer.end);
        assert_eq!(outer.end, parsed.plain.chars().count());
    }

    #[test]
    fn untagged_text_is_identity() {
        let parsed = parse_tagged_text("no tags here").unwrap();
        assert_eq!(parsed.plain, "no tags here");
        assert!(parsed.spans.is_empty());
    }

    #[test]
    fn non_tag_angle_brackets_are_text() {
        let parsed = parse_tagged_text("if a < b and c <= 3 then <- ok").unwrap();
        assert_eq!(parsed.plain, "if a < b and c <= 3 then <- ok");
    }

    #[test]
    fn unknown_symbol_and_level() {
        assert!(matches!(parse_tagged_text("x <foo2>y</foo2>"), Err(TagError::UnknownTag { line: 1, column: 3, .. })));
        assert!(matches!(parse_tagged_text("<a4>y</a4>"), Err(TagError::UnknownTag { .. })));
        assert!(matches!(parse_tagged_text("<a>y</a>"), Err(TagError::UnknownTag { .. })));
        assert!(matches!(parse_tagged_text("<A2>y</A2>"), Err(TagError::UnknownTag { .. })));
    }

    #[test]
    fn unbalanced_reports_position() {
        let err = parse_tagged_text("line one\nabc</ch2>").unwrap_err();
        assert_eq!(err, TagError::UnbalancedTag { tag: "/ch2".into(), line: 2, column: 4 });
        let err = parse_tagged_text("ok\n  <ter2>never closed").unwrap_err();
        assert_eq!(err, TagError::UnbalancedTag { tag: "ter2".into(), line: 2, column: 3 });
    }

    #[test]
    fn crossed_nesting() {
        let err = parse_tagged_text("<a2>x <j3>y</a2> z</j3>").unwrap_err();
        assert!(matches!(err, TagError::CrossedNesting { line: 1, column: 12, .. }), "{err:?}");
    }

    #[test]
    fn lenient_mode_accepts_open_tag_as_closer() {
        let raw = "<ltd3> In no event will Rovio be liable.<ltd3>";
        assert!(matches!(parse_tagged_text(raw), Err(TagError::UnbalancedTag { .. })));
        let parsed = parse_tagged_text_with(raw, TagMode::Lenient).unwrap();
        assert_eq!(parsed.spans.len(), 1);
        assert_eq!(parsed.plain, " In no event will Rovio be liable.");
        assert_eq!(parsed.spans[0].end, parsed.plain.chars().count());
    }

    #[test]
    fn empty_tag_is_rejected() {
        assert!(matches!(parse_tagged_text("a<a2></a2>b"), Err(TagError::EmptyTag { .. })));
    }

    #[test]
    fn blanks_inside_brackets() {
        let parsed = parse_tagged_text("< use2 >By using it.< / use2 >").unwrap();
        assert_eq!(parsed.plain, "By using it.");
        assert_eq!(parsed.spans[0].category, ClauseCategory::ContractByUsing);
    }

    #[test]
    fn offsets_count_chars_not_bytes() {
        let parsed = parse_tagged_text("café <law2>Zürich law</law2>").unwrap();
        assert_eq!((parsed.spans[0].start, parsed.spans[0].end), (5, 15));
    }

    #[test]
    fn render_round_trip() {
        let raw = "<j1> <a3>Any dispute.</a3> </j1>\n<ch2>We may change.</ch2><ter3>And stop.</ter3>";
        let parsed = parse_tagged_text(raw).unwrap();
        assert_eq!(render_tagged_text(&parsed.plain, &parsed.spans), raw);
    }
}
