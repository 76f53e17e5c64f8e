use claudette::corpus::{
    corpus_stats, load_corpus, parse_tagged_text, project_labels, render_tagged_text, segment_sentences, tokenize,
    CorpusError, CorpusOptions, TagSpan,
};
use claudette::{ClauseCategory, FairnessLevel};
use proptest::prelude::*;
use std::path::Path;

fn mini() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/mini"))
}

#[test]
fn segmentation_examples() {
    assert_eq!(segment_sentences("Hello world. Bye now.").len(), 2);
    assert_eq!(segment_sentences("e.g. this stays whole.").len(), 1);
    assert!(segment_sentences("").is_empty());
    assert_eq!(segment_sentences("No stop here\nnew paragraph").len(), 2);
}

#[test]
fn tokenizer_examples() {
    assert_eq!(tokenize("You and Dropbox agree"), ["you", "and", "dropbox", "agree"]);
    assert_eq!(tokenize("twitter.com/tos"), ["twitter", ".", "com", "/", "tos"]);
    assert!(tokenize("").is_empty());
}

#[test]
fn mini_corpus_counts() {
    let corpus = load_corpus(mini(), CorpusOptions::default()).unwrap();
    let names: Vec<&str> = corpus.documents.iter().map(|d| d.name.as_str()).collect();
    assert_eq!(names, ["alpha", "beta", "gamma"]);
    let sentences: Vec<usize> = corpus.documents.iter().map(|d| d.sentences.len()).collect();
    assert_eq!(sentences, [7, 6, 5]);
    let positives: Vec<usize> = corpus.documents.iter().map(|d| d.positive_count()).collect();
    assert_eq!(positives, [3, 2, 3]);
    let stats = corpus_stats(&corpus);
    let clauses: Vec<usize> = stats.categories.iter().map(|c| c.clauses).collect();
    assert_eq!(clauses, [2, 1, 1, 1, 0, 1, 1, 1]);
}

#[test]
fn stats_output_matches_golden_file() {
    let golden = std::fs::read_to_string(mini().with_extension("stats.golden")).unwrap();
    let corpus = load_corpus(mini(), CorpusOptions::default()).unwrap();
    let stats = corpus_stats(&corpus);
    let diff = claudette::eval::compare_to_reference_stats(&stats);
    assert_eq!(format!("{}\n{}", stats.render_text(), diff.render_text()), golden);
}

#[test]
fn nested_tags_label_the_containing_sentence() {
    let raw = "<j1>Disputes go to Helsinki courts. <a3>Or to binding arbitration.</a3></j1> Fine print.";
    let tagged = parse_tagged_text(raw).unwrap();
    let labeled = project_labels(&tagged.spans, &segment_sentences(&tagged.plain));
    assert_eq!(labeled.len(), 3);
    let j1 = (ClauseCategory::Jurisdiction, FairnessLevel::new(1).unwrap());
    let a3 = (ClauseCategory::Arbitration, FairnessLevel::new(3).unwrap());
    assert_eq!(labeled[0].labels.iter().copied().collect::<Vec<_>>(), [j1]);
    assert!(!labeled[0].detection_label);
    assert!(labeled[1].labels.contains(&j1) && labeled[1].labels.contains(&a3));
    assert!(labeled[1].detection_label);
    assert!(labeled[2].labels.is_empty());
}

#[test]
fn empty_and_untagged_directories() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_corpus(dir.path(), CorpusOptions::default()), Err(CorpusError::EmptyCorpus(_))));
    std::fs::write(dir.path().join("plain.txt"), "Just text. Nothing tagged here.").unwrap();
    let corpus = load_corpus(dir.path(), CorpusOptions::default()).unwrap();
    assert_eq!(corpus.document_count(), 1);
    assert!(corpus.sentences().all(|s| !s.detection_label));
}

const WORDS: &[&str] = &["We", "may", "terminate", "e.g.", "Inc.", "the", "account", "at", "any", "time", "42"];
const SYMBOLS: &[&str] = &["a", "ch", "cr", "j", "law", "ltd", "ter", "use"];

#[derive(Debug, Clone)]
enum Node {
    Text(String),
    Tag(usize, u8, Vec<Node>),
}

fn node() -> impl Strategy<Value = Node> {
    let word = proptest::sample::select(WORDS).prop_map(str::to_string);
    let sep = proptest::sample::select(vec![" ", " ", ". ", "! ", ".\n", "\n\n"]).prop_map(str::to_string);
    let text = (word, sep).prop_map(|(w, s)| Node::Text(format!("{w}{s}")));
    text.prop_recursive(3, 24, 4, |inner| {
        (0..8usize, 1..=3u8, proptest::collection::vec(inner, 1..4)).prop_map(|(c, l, kids)| Node::Tag(c, l, kids))
    })
}

fn render(nodes: &[Node], out: &mut String) {
    for n in nodes {
        match n {
            Node::Text(t) => out.push_str(t),
            Node::Tag(c, l, kids) => {
                out.push_str(&format!("<{}{l}>", SYMBOLS[*c]));
                render(kids, out);
                out.push_str(&format!("</{}{l}>", SYMBOLS[*c]));
            }
        }
    }
}

/// Drops spans identical to an enclosing one; the grammar forbids them.
fn valid(nodes: &[Node], open: &mut Vec<(usize, u8)>) -> bool {
    nodes.iter().all(|n| match n {
        Node::Text(_) => true,
        Node::Tag(c, l, kids) => {
            if open.contains(&(*c, *l)) {
                return false;
            }
            open.push((*c, *l));
            let ok = valid(kids, open);
            open.pop();
            ok
        }
    })
}

fn document() -> impl Strategy<Value = String> {
    proptest::collection::vec(node(), 1..8)
        .prop_filter("same tag nested in itself", |n| valid(n, &mut Vec::new()))
        .prop_map(|nodes| {
            let mut s = String::new();
            render(&nodes, &mut s);
            s
        })
}

proptest! {
    #[test]
    fn tags_round_trip(raw in document()) {
        let tagged = parse_tagged_text(&raw).unwrap();
        prop_assert_eq!(render_tagged_text(&tagged.plain, &tagged.spans), raw.clone());
        prop_assert_eq!(tagged.spans.len(), raw.matches('<').count() / 2);
    }

    #[test]
    fn segmentation_partitions_the_text(raw in document()) {
        let plain = parse_tagged_text(&raw).unwrap().plain;
        let chars: Vec<char> = plain.chars().collect();
        let sentences = segment_sentences(&plain);
        let mut owner = vec![None; chars.len()];
        let mut previous_end = 0;
        for (k, s) in sentences.iter().enumerate() {
            prop_assert!(s.start >= previous_end && s.start < s.end && s.end <= chars.len());
            prop_assert_eq!(chars[s.start..s.end].iter().collect::<String>(), s.text.clone());
            prop_assert!(!s.text.contains('\n'));
            for o in &mut owner[s.start..s.end] {
                *o = Some(k);
            }
            previous_end = s.end;
        }
        for (c, o) in chars.iter().zip(&owner) {
            prop_assert!(c.is_whitespace() || o.is_some(), "{:?} outside every sentence", c);
        }
    }

    #[test]
    fn adding_a_span_never_removes_labels(raw in document(), a in 0usize..400, len in 1usize..60, cat in 0usize..8, level in 1u8..=3) {
        let tagged = parse_tagged_text(&raw).unwrap();
        let n = tagged.plain.chars().count();
        prop_assume!(n > 0);
        let start = a % n;
        let extra = TagSpan {
            category: ClauseCategory::ALL[cat],
            level: FairnessLevel::new(level).unwrap(),
            start,
            end: (start + len).min(n),
        };
        let sentences = segment_sentences(&tagged.plain);
        let before = project_labels(&tagged.spans, &sentences);
        let mut spans = tagged.spans.clone();
        spans.push(extra);
        let after = project_labels(&spans, &sentences);
        for (b, a) in before.iter().zip(&after) {
            prop_assert!(b.labels.is_subset(&a.labels));
            prop_assert!(!b.detection_label || a.detection_label);
            prop_assert_eq!(a.detection_label, a.labels.iter().any(|(_, l)| l.value() >= 2));
        }
    }
}
