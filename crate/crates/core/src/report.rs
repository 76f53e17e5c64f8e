//! Self-contained HTML rendering of an [`AnalysisResult`].

use crate::model::AnalysisResult;
use std::fmt::Write as _;
use std::path::Path;

const STYLE: &str = "body{font-family:sans-serif;margin:2em;max-width:60em}\
pre{white-space:pre-wrap;font-family:inherit;line-height:1.5}\
mark{background:#ffd6a5;border-bottom:2px solid #d9480f}\
.meta{color:#555;font-size:0.9em}";

pub fn escape_html(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

/// Inverse of [`escape_html`].
pub fn unescape_html(text: &str) -> String {
    text.replace("&lt;", "<").replace("&gt;", ">").replace("&quot;", "\"").replace("&#39;", "'").replace("&amp;", "&")
}

/// The document text with every detected sentence wrapped in `<mark>`.
pub fn render_report(result: &AnalysisResult) -> String {
    let chars: Vec<char> = result.text.chars().collect();
    let slice = |a: usize, b: usize| chars[a..b].iter().collect::<String>();
    let mut body = String::new();
    let mut cursor = 0;
    let mut flagged = 0;
    for s in result.flagged() {
        body.push_str(&escape_html(&slice(cursor, s.start)));
        let categories: Vec<&str> = s.categories.iter().map(|c| c.symbol()).collect();
        let _ = write!(
            body,
            "<mark data-categories=\"{}\" data-score=\"{:.4}\">{}</mark>",
            categories.join(" "),
            s.score,
            escape_html(&slice(s.start, s.end))
        );
        cursor = s.end;
        flagged += 1;
    }
    body.push_str(&escape_html(&slice(cursor, chars.len())));

    let mut out = String::new();
    let _ = write!(
        out,
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Clause analysis</title>\
         <style>{STYLE}</style></head>\n<body>\n<p class=\"meta\">Model: {} &middot; {} of {} sentences flagged</p>\n",
        result.model_kind,
        flagged,
        result.sentences.len()
    );
    for w in &result.warnings {
        let _ = writeln!(out, "<p class=\"meta\">Warning: {}</p>", escape_html(w));
    }
    let _ = write!(out, "<pre>{body}</pre>\n</body></html>\n");
    out
}

pub fn write_report(result: &AnalysisResult, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, render_report(result))
}
