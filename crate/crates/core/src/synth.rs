//! Seeded synthetic corpora in the tagged corpus format.
//!
//! Every generator returns `(document name, tagged text)` pairs that can be
//! fed to [`Corpus::from_raw`](crate::corpus::Corpus::from_raw) or written to
//! disk with [`write_corpus`].

use crate::corpus::ClauseCategory;
use crate::treekernel::ParseTree;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;

/// Neutral filler vocabulary shared by both classes.
pub const FILLER: &[&str] = &[
    "account",
    "access",
    "agreement",
    "application",
    "available",
    "because",
    "before",
    "between",
    "browser",
    "change",
    "choose",
    "community",
    "connect",
    "content",
    "cookies",
    "customer",
    "data",
    "device",
    "display",
    "download",
    "during",
    "email",
    "enjoy",
    "example",
    "experience",
    "feature",
    "feedback",
    "friends",
    "general",
    "guide",
    "help",
    "information",
    "install",
    "interface",
    "language",
    "learn",
    "message",
    "mobile",
    "music",
    "network",
    "notice",
    "online",
    "open",
    "page",
    "partner",
    "password",
    "personal",
    "photo",
    "platform",
    "player",
    "please",
    "post",
    "preferences",
    "privacy",
    "product",
    "profile",
    "program",
    "provide",
    "public",
    "purchase",
    "question",
    "read",
    "receive",
    "region",
    "register",
    "request",
    "review",
    "search",
    "section",
    "secure",
    "select",
    "send",
    "settings",
    "share",
    "simple",
    "site",
    "social",
    "software",
    "store",
    "support",
    "system",
    "team",
    "through",
    "tools",
    "update",
    "upload",
    "user",
    "video",
    "visit",
    "website",
    "welcome",
    "within",
    "work",
    "world",
    "your",
    "yours",
];

pub const PLANTED_KEYWORD: &str = "solediscretion";

/// Cue words of the adjacency corpus.
pub const ADJACENCY_CUES: [&str; 3] = ["hereinafter", "notwithstanding", "thereunder"];

fn capitalise(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// A filler sentence with `extra` words inserted at random positions.
fn sentence(rng: &mut ChaCha8Rng, extra: &[&str]) -> String {
    let len = rng.gen_range(6..=14);
    let mut words: Vec<&str> = (0..len).map(|_| *FILLER.choose(rng).expect("non-empty")).collect();
    for w in extra {
        let at = rng.gen_range(0..=words.len());
        words.insert(at, w);
    }
    let mut text = capitalise(words[0]);
    for w in &words[1..] {
        text.push(' ');
        text.push_str(w);
    }
    text.push('.');
    text
}

fn tagged(symbol: &str, level: u8, text: &str) -> String {
    format!("<{symbol}{level}>{text}</{symbol}{level}>")
}

fn join_sentences(rng: &mut ChaCha8Rng, sentences: &[String]) -> String {
    let mut out = String::new();
    for (k, s) in sentences.iter().enumerate() {
        if k > 0 {
            out.push_str(if rng.gen_bool(0.3) { "\n" } else { " " });
        }
        out.push_str(s);
    }
    out.push('\n');
    out
}

/// Ten documents whose positive sentences, and only those, contain
/// [`PLANTED_KEYWORD`].
pub fn planted_keyword_corpus(seed: u64) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..10)
        .map(|d| {
            let n = rng.gen_range(25..=40);
            let sentences: Vec<String> = (0..n)
                .map(|_| {
                    if rng.gen_bool(0.2) {
                        let symbol = ClauseCategory::ALL.choose(&mut rng).expect("non-empty").symbol();
                        let level = rng.gen_range(2..=3);
                        tagged(symbol, level, &sentence(&mut rng, &[PLANTED_KEYWORD]))
                    } else {
                        sentence(&mut rng, &[])
                    }
                })
                .collect();
            (format!("planted{d:02}"), join_sentences(&mut rng, &sentences))
        })
        .collect()
}

/// Positive sentences come in adjacent pairs. Each cue word of
/// [`ADJACENCY_CUES`] appears in a positive sentence with probability 0.6
/// and in a negative one with probability 0.4.
pub fn adjacency_corpus(seed: u64) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..10)
        .map(|d| {
            let mut labels = Vec::new();
            while labels.len() < 60 {
                if rng.gen_bool(0.25) {
                    labels.extend([true, true]);
                }
                let gap = rng.gen_range(1..=4);
                labels.extend(std::iter::repeat_n(false, gap));
            }
            let sentences: Vec<String> = labels
                .iter()
                .map(|&positive| {
                    let p = if positive { 0.6 } else { 0.4 };
                    let cues: Vec<&str> = ADJACENCY_CUES.iter().copied().filter(|_| rng.gen_bool(p)).collect();
                    let text = sentence(&mut rng, &cues);
                    if positive {
                        tagged("ltd", 2, &text)
                    } else {
                        text
                    }
                })
                .collect();
            (format!("adjacent{d:02}"), join_sentences(&mut rng, &sentences))
        })
        .collect()
}

/// Keyword planted in sentences of `category` by [`category_keyword_corpus`].
pub fn category_keyword(category: ClauseCategory) -> String {
    format!("{}clausemarker", category.symbol())
}

/// Ten documents where each category's positives carry that category's
/// unique keyword. Some sentences carry two categories through nested tags.
pub fn category_keyword_corpus(seed: u64) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..10)
        .map(|d| {
            let mut sentences = Vec::new();
            for &category in &ClauseCategory::ALL {
                for _ in 0..rng.gen_range(3..=5) {
                    let keyword = category_keyword(category);
                    let text = sentence(&mut rng, &[&keyword]);
                    sentences.push(tagged(category.symbol(), rng.gen_range(2..=3), &text));
                }
            }
            let (outer, inner) = (ClauseCategory::Jurisdiction, ClauseCategory::Arbitration);
            let (ko, ki) = (category_keyword(outer), category_keyword(inner));
            let nested = tagged(inner.symbol(), 2, &sentence(&mut rng, &[&ko, &ki]));
            sentences.push(tagged(outer.symbol(), 2, &nested));
            for _ in 0..rng.gen_range(30..=40) {
                sentences.push(sentence(&mut rng, &[]));
            }
            sentences.shuffle(&mut rng);
            (format!("category{d:02}"), join_sentences(&mut rng, &sentences))
        })
        .collect()
}

/// Three documents; only the first has positive sentences, so the fold
/// holding it out trains on a single class.
pub fn single_positive_document_corpus(seed: u64) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..3)
        .map(|d| {
            let sentences: Vec<String> = (0..12)
                .map(|k| {
                    if d == 0 && k % 4 == 0 {
                        tagged("ter", 3, &sentence(&mut rng, &[PLANTED_KEYWORD]))
                    } else {
                        sentence(&mut rng, &[])
                    }
                })
                .collect();
            (format!("fold{d}"), join_sentences(&mut rng, &sentences))
        })
        .collect()
}

const TREE_LABELS: [&str; 4] = ["S", "NP", "VP", "PP"];
const TREE_TAGS: [&str; 3] = ["DT", "NN", "VB"];
const TREE_WORDS: [&str; 3] = ["the", "terms", "apply"];

/// A random constituency tree with at most `max_nodes` nodes over a small
/// label alphabet, so that pairs of trees share many productions.
pub fn random_tree<R: Rng>(rng: &mut R, max_nodes: usize) -> ParseTree {
    assert!(max_nodes >= 3, "a tree needs at least three nodes");
    let mut budget = rng.gen_range(3..=max_nodes);
    let text = grow(rng, &mut budget, 0);
    ParseTree::parse(&text).expect("generated trees are well formed")
}

/// Emits a phrase or a preterminal; every call consumes from `budget`.
fn grow<R: Rng>(rng: &mut R, budget: &mut usize, depth: usize) -> String {
    if *budget < 5 || depth >= 3 || rng.gen_bool(0.35) {
        *budget = budget.saturating_sub(2);
        let tag = TREE_TAGS[rng.gen_range(0..TREE_TAGS.len())];
        let word = TREE_WORDS[rng.gen_range(0..TREE_WORDS.len())];
        return format!("({tag} {word})");
    }
    *budget -= 1;
    let label = TREE_LABELS[rng.gen_range(0..TREE_LABELS.len())];
    let mut children = vec![grow(rng, budget, depth + 1)];
    while *budget >= 2 && children.len() < 3 && rng.gen_bool(0.6) {
        children.push(grow(rng, budget, depth + 1));
    }
    format!("({label} {})", children.join(" "))
}

/// Writes each document to `dir/<name>.txt`.
pub fn write_corpus(dir: &Path, documents: &[(String, String)]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, text) in documents {
        std::fs::write(dir.join(format!("{name}.txt")), text)?;
    }
    Ok(())
}
