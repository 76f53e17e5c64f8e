use super::{ClauseCategory, Corpus};
use serde::{Deserialize, Serialize};
use std::fmt::Write;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub category: ClauseCategory,
    /// Spans at level 2 or 3.
    pub clauses: usize,
    /// Documents with at least one such span.
    pub documents: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentRate {
    pub document: String,
    /// Positive sentences as a percentage of the document's sentences.
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsTable {
    pub documents: usize,
    pub categories: Vec<CategoryStats>,
    pub total_sentences: usize,
    pub positive_sentences: usize,
    pub positive_fraction: f64,
    pub min_document_rate: Option<DocumentRate>,
    pub max_document_rate: Option<DocumentRate>,
}

pub fn corpus_stats(corpus: &Corpus) -> StatsTable {
    let mut categories: Vec<CategoryStats> =
        ClauseCategory::ALL.iter().map(|&category| CategoryStats { category, clauses: 0, documents: 0 }).collect();
    let mut min_rate: Option<DocumentRate> = None;
    let mut max_rate: Option<DocumentRate> = None;

    for doc in &corpus.documents {
        let mut present = [false; 8];
        for span in doc.spans.iter().filter(|s| s.level.is_unfair()) {
            categories[span.category.index()].clauses += 1;
            present[span.category.index()] = true;
        }
        for (stats, hit) in categories.iter_mut().zip(present) {
            stats.documents += usize::from(hit);
        }
        if doc.sentences.is_empty() {
            continue;
        }
        let percent = 100.0 * doc.positive_count() as f64 / doc.sentences.len() as f64;
        let rate = || DocumentRate { document: doc.name.clone(), percent };
        if min_rate.as_ref().is_none_or(|r| percent < r.percent) {
            min_rate = Some(rate());
        }
        if max_rate.as_ref().is_none_or(|r| percent > r.percent) {
            max_rate = Some(rate());
        }
    }

    let total_sentences = corpus.sentence_count();
    let positive_sentences = corpus.sentences().filter(|s| s.detection_label).count();
    let positive_fraction = if total_sentences == 0 { 0.0 } else { positive_sentences as f64 / total_sentences as f64 };
    StatsTable {
        documents: corpus.document_count(),
        categories,
        total_sentences,
        positive_sentences,
        positive_fraction,
        min_document_rate: min_rate,
        max_document_rate: max_rate,
    }
}

impl StatsTable {
    /// Aligned plain-text rendering.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<26} {:>9} {:>11}", "Type of clause", "# clauses", "# documents");
        let mut total = 0;
        for row in &self.categories {
            total += row.clauses;
            let _ = writeln!(out, "{:<26} {:>9} {:>11}", row.category.name(), row.clauses, row.documents);
        }
        let _ = writeln!(out, "{:<26} {:>9} {:>11}", "Total", total, self.documents);
        let _ = writeln!(out);
        let _ = writeln!(out, "Documents:           {}", self.documents);
        let _ = writeln!(out, "Sentences:           {}", self.total_sentences);
        let _ =
            writeln!(out, "Positive sentences:  {} ({:.2}%)", self.positive_sentences, 100.0 * self.positive_fraction);
        let fmt_rate = |r: &Option<DocumentRate>| match r {
            Some(r) => format!("{:.2}% ({})", r.percent, r.document),
            None => "n/a".to_string(),
        };
        let _ = writeln!(out, "Min positive rate:   {}", fmt_rate(&self.min_document_rate));
        let _ = writeln!(out, "Max positive rate:   {}", fmt_rate(&self.max_document_rate));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CorpusOptions;

    #[test]
    fn empty_corpus_is_all_zero() {
        let stats = corpus_stats(&Corpus { documents: vec![] });
        assert_eq!(stats.total_sentences, 0);
        assert_eq!(stats.positive_fraction, 0.0);
        assert!(stats.categories.iter().all(|c| c.clauses == 0 && c.documents == 0));
        assert!(stats.min_document_rate.is_none());
    }

    #[test]
    fn counts_unfair_spans_only() {
        let docs = [
            ("d1", "<a2>Arbitrate.</a2> <a3>Arbitrate again.</a3> <law1>Your law.</law1> Other."),
            ("d2", "<a1>Optional arbitration.</a1> <ltd2>No liability.</ltd2>"),
        ];
        let corpus = Corpus::from_raw(&docs, CorpusOptions::default()).unwrap();
        let stats = corpus_stats(&corpus);
        let arb = &stats.categories[ClauseCategory::Arbitration.index()];
        assert_eq!((arb.clauses, arb.documents), (2, 1));
        let law = &stats.categories[ClauseCategory::ChoiceOfLaw.index()];
        assert_eq!((law.clauses, law.documents), (0, 0));
        assert_eq!(stats.total_sentences, 6);
        assert_eq!(stats.positive_sentences, 3);
        assert_eq!(stats.min_document_rate.as_ref().unwrap().percent, 50.0);
        assert_eq!(stats.max_document_rate.as_ref().unwrap().document, "d1");
    }
}
