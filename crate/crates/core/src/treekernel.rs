//! Constituency trees and the subset tree kernel (SSTK).
//!
//! A fragment is a connected piece of a tree rooted at an internal node in
//! which every included node brings either all of its children or none of
//! them. The kernel counts pairs of identical fragments, each weighted by
//! `lambda` raised to the number of expanded nodes:
//!
//! ```text
//! K(t1, t2) = sum over (n1, n2) of delta(n1, n2)
//! delta = 0                                  if productions differ
//! delta = lambda * prod_i (1 + delta(c1_i, c2_i))   otherwise
//! ```
//!
//! For preterminals the product is empty, so `delta = lambda`.

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

/// Node bound of [`enumerate_fragments_oracle`].
pub const ORACLE_MAX_NODES: usize = 16;

/// Decay used when a configuration does not set one.
pub const DEFAULT_LAMBDA: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseTreeError {
    #[error("unbalanced parentheses at offset {0}")]
    UnbalancedParens(usize),
    #[error("node without children at offset {0}")]
    EmptyNode(usize),
    #[error("trailing input at offset {0}")]
    TrailingInput(usize),
    #[error("empty tree")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("lambda must lie in (0, 1], got {0}")]
    InvalidLambda(f64),
    #[error("tree {index} has a zero self-kernel")]
    DegenerateTree { index: usize },
    #[error("fragment enumeration limited to {ORACLE_MAX_NODES} nodes, tree has {0}")]
    TooLarge(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Node {
    label: String,
    children: Vec<usize>,
}

/// Labelled ordered tree. Nodes are stored in post-order, so every child
/// index is smaller than its parent's and the root is the last node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseTree {
    nodes: Vec<Node>,
    /// `label child-label…` for internal nodes, `None` for leaves.
    productions: Vec<Option<String>>,
    /// Internal node indices sorted by (production, index).
    by_production: Vec<usize>,
}

enum Token<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn lex(text: &str) -> Vec<(usize, Token<'_>)> {
    let mut tokens = Vec::new();
    let mut atom_start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        let boundary = c == '(' || c == ')' || c.is_whitespace();
        if boundary {
            if let Some(s) = atom_start.take() {
                tokens.push((s, Token::Atom(&text[s..i])));
            }
            match c {
                '(' => tokens.push((i, Token::Open)),
                ')' => tokens.push((i, Token::Close)),
                _ => {}
            }
        } else if atom_start.is_none() {
            atom_start = Some(i);
        }
    }
    if let Some(s) = atom_start {
        tokens.push((s, Token::Atom(&text[s..])));
    }
    tokens
}

impl ParseTree {
    /// Reads one bracketed tree, e.g. `(S (NP (DT the) (NN cat)) (VP (VBZ sits)))`.
    /// A bare token is a single-leaf tree.
    pub fn parse(text: &str) -> Result<Self, ParseTreeError> {
        let tokens = lex(text);
        let mut nodes: Vec<Node> = Vec::new();
        // Open brackets: (offset, label, children).
        let mut stack: Vec<(usize, String, Vec<usize>)> = Vec::new();
        let mut done: Option<usize> = None;
        let mut k = 0;
        while k < tokens.len() {
            let (offset, token) = (tokens[k].0, &tokens[k].1);
            if done.is_some() {
                return Err(ParseTreeError::TrailingInput(offset));
            }
            match token {
                Token::Open => {
                    let label = match tokens.get(k + 1) {
                        Some((_, Token::Atom(label))) => {
                            k += 1;
                            label.to_string()
                        }
                        _ => String::new(),
                    };
                    stack.push((offset, label, Vec::new()));
                }
                Token::Close => {
                    let (open_offset, label, children) = stack.pop().ok_or(ParseTreeError::UnbalancedParens(offset))?;
                    if children.is_empty() {
                        return Err(ParseTreeError::EmptyNode(open_offset));
                    }
                    nodes.push(Node { label, children });
                    let index = nodes.len() - 1;
                    match stack.last_mut() {
                        Some(parent) => parent.2.push(index),
                        None => done = Some(index),
                    }
                }
                Token::Atom(word) => {
                    nodes.push(Node { label: word.to_string(), children: Vec::new() });
                    let index = nodes.len() - 1;
                    match stack.last_mut() {
                        Some(parent) => parent.2.push(index),
                        None => done = Some(index),
                    }
                }
            }
            k += 1;
        }
        if let Some((offset, _, _)) = stack.first() {
            return Err(ParseTreeError::UnbalancedParens(*offset));
        }
        if done.is_none() {
            return Err(ParseTreeError::Empty);
        }
        Ok(Self::from_nodes(nodes))
    }

    fn from_nodes(nodes: Vec<Node>) -> Self {
        let productions: Vec<Option<String>> = nodes
            .iter()
            .map(|node| {
                (!node.children.is_empty()).then(|| {
                    let mut p = node.label.clone();
                    for &c in &node.children {
                        p.push(' ');
                        p.push_str(&nodes[c].label);
                    }
                    p
                })
            })
            .collect();
        let mut by_production: Vec<usize> = (0..nodes.len()).filter(|&i| productions[i].is_some()).collect();
        by_production.sort_by(|&a, &b| productions[a].cmp(&productions[b]).then(a.cmp(&b)));
        ParseTree { nodes, productions, by_production }
    }

    fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn root_label(&self) -> &str {
        &self.nodes[self.root()].label
    }

    /// A preterminal has exactly one child, which is a leaf.
    fn is_preterminal(&self, i: usize) -> bool {
        let children = &self.nodes[i].children;
        children.len() == 1 && self.nodes[children[0]].children.is_empty()
    }

    /// Preterminal labels in left-to-right order.
    pub fn preterminal_labels(&self) -> impl Iterator<Item = &str> + '_ {
        (0..self.nodes.len()).filter(|&i| self.is_preterminal(i)).map(|i| self.nodes[i].label.as_str())
    }

    /// Leaf words in left-to-right order.
    pub fn leaves(&self) -> impl Iterator<Item = &str> + '_ {
        self.nodes.iter().filter(|n| n.children.is_empty()).map(|n| n.label.as_str())
    }

    /// Single-space bracketed form.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        self.write_node(self.root(), &mut out);
        out
    }

    fn write_node(&self, i: usize, out: &mut String) {
        let node = &self.nodes[i];
        if node.children.is_empty() {
            out.push_str(&node.label);
            return;
        }
        out.push('(');
        out.push_str(&node.label);
        for &c in &node.children {
            out.push(' ');
            self.write_node(c, out);
        }
        out.push(')');
    }
}

impl std::fmt::Display for ParseTree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.canonical())
    }
}

impl std::str::FromStr for ParseTree {
    type Err = ParseTreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ParseTree::parse(s)
    }
}

impl Serialize for ParseTree {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.canonical())
    }
}

impl<'de> Deserialize<'de> for ParseTree {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        ParseTree::parse(&text).map_err(serde::de::Error::custom)
    }
}

fn check_lambda(lambda: f64) -> Result<(), KernelError> {
    if lambda > 0.0 && lambda <= 1.0 {
        Ok(())
    } else {
        Err(KernelError::InvalidLambda(lambda))
    }
}

/// Kernel sum over matching node pairs. Pairs are visited in increasing
/// index of the first tree's node, so child pairs are always ready.
fn sstk_unchecked(t1: &ParseTree, t2: &ParseTree, lambda: f64) -> f64 {
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let (a, b) = (&t1.by_production, &t2.by_production);
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let (pa, pb) = (&t1.productions[a[i]], &t2.productions[b[j]]);
        match pa.cmp(pb) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let i_end = i + a[i..].iter().take_while(|&&n| t1.productions[n] == *pa).count();
                let j_end = j + b[j..].iter().take_while(|&&n| t2.productions[n] == *pb).count();
                for &n1 in &a[i..i_end] {
                    for &n2 in &b[j..j_end] {
                        pairs.push((n1, n2));
                    }
                }
                i = i_end;
                j = j_end;
            }
        }
    }
    pairs.sort_unstable();

    let mut delta: HashMap<(usize, usize), f64> = HashMap::with_capacity(pairs.len());
    let mut total = 0.0;
    for (n1, n2) in pairs {
        let d = t1.nodes[n1]
            .children
            .iter()
            .zip(&t2.nodes[n2].children)
            .fold(lambda, |acc, (&c1, &c2)| acc * (1.0 + delta.get(&(c1, c2)).copied().unwrap_or(0.0)));
        delta.insert((n1, n2), d);
        total += d;
    }
    total
}

/// Subset tree kernel with decay `lambda` in (0, 1].
pub fn sstk(t1: &ParseTree, t2: &ParseTree, lambda: f64) -> Result<f64, KernelError> {
    check_lambda(lambda)?;
    Ok(sstk_unchecked(t1, t2, lambda))
}

/// `K(t1, t2) / sqrt(K(t1, t1) K(t2, t2))`.
pub fn sstk_normalized(t1: &ParseTree, t2: &ParseTree, lambda: f64) -> Result<f64, KernelError> {
    check_lambda(lambda)?;
    let k11 = sstk_unchecked(t1, t1, lambda);
    let k22 = sstk_unchecked(t2, t2, lambda);
    if k11 <= 0.0 {
        return Err(KernelError::DegenerateTree { index: 0 });
    }
    if k22 <= 0.0 {
        return Err(KernelError::DegenerateTree { index: 1 });
    }
    Ok(sstk_unchecked(t1, t2, lambda) / (k11 * k22).sqrt())
}

/// Kernel settings shared by training and prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub lambda: f64,
    pub normalize: bool,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig { lambda: DEFAULT_LAMBDA, normalize: true }
    }
}

/// Symmetric matrix of pairwise kernel values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelGram {
    n: usize,
    values: Vec<f64>,
    pub lambda: f64,
    pub normalized: bool,
}

impl KernelGram {
    /// Wraps a row-major square matrix. Returns `None` if `values` is not n×n.
    pub fn from_rows(n: usize, values: Vec<f64>, lambda: f64, normalized: bool) -> Option<Self> {
        (values.len() == n * n).then_some(KernelGram { n, values, lambda, normalized })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Self-kernels of `trees`, failing on the first zero when `normalize` is set.
pub fn self_kernels(trees: &[ParseTree], lambda: f64, normalize: bool) -> Result<Vec<f64>, KernelError> {
    check_lambda(lambda)?;
    let diag: Vec<f64> = trees.par_iter().map(|t| sstk_unchecked(t, t, lambda)).collect();
    if normalize {
        if let Some(index) = diag.iter().position(|&d| d <= 0.0) {
            return Err(KernelError::DegenerateTree { index });
        }
    }
    Ok(diag)
}

/// Gram matrix over `trees`; each unordered pair is evaluated once.
pub fn gram_matrix(trees: &[ParseTree], lambda: f64, normalize: bool) -> Result<KernelGram, KernelError> {
    let diag = self_kernels(trees, lambda, normalize)?;
    let n = trees.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i..n)
                .map(|j| {
                    let k = if i == j { diag[i] } else { sstk_unchecked(&trees[i], &trees[j], lambda) };
                    if normalize {
                        if i == j {
                            1.0
                        } else {
                            k / (diag[i] * diag[j]).sqrt()
                        }
                    } else {
                        k
                    }
                })
                .collect()
        })
        .collect();
    let mut values = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (offset, &v) in row.iter().enumerate() {
            let j = i + offset;
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    Ok(KernelGram { n, values, lambda, normalized: normalize })
}

/// Kernel values of `tree` against each of `others`, normalised with the
/// given self-kernels when `others_diag` is provided.
pub fn kernel_row(
    tree: &ParseTree,
    others: &[ParseTree],
    config: KernelConfig,
    others_diag: Option<&[f64]>,
) -> Result<Vec<f64>, KernelError> {
    check_lambda(config.lambda)?;
    let raw: Vec<f64> = others.iter().map(|o| sstk_unchecked(tree, o, config.lambda)).collect();
    if !config.normalize {
        return Ok(raw);
    }
    let own = sstk_unchecked(tree, tree, config.lambda);
    if own <= 0.0 {
        return Err(KernelError::DegenerateTree { index: 0 });
    }
    let diag: Vec<f64> = match others_diag {
        Some(d) => d.to_vec(),
        None => others.iter().map(|o| sstk_unchecked(o, o, config.lambda)).collect(),
    };
    Ok(raw.iter().zip(diag).map(|(k, d)| k / (own * d).sqrt()).collect())
}

/// Every SSTK fragment of `tree` as a canonical string, with multiplicity.
///
/// Exponential in tree size; limited to [`ORACLE_MAX_NODES`] nodes.
pub fn enumerate_fragments_oracle(tree: &ParseTree) -> Result<BTreeMap<String, usize>, KernelError> {
    if tree.node_count() > ORACLE_MAX_NODES {
        return Err(KernelError::TooLarge(tree.node_count()));
    }
    // Fragments rooted at each node, built bottom-up.
    let mut rooted: Vec<Vec<String>> = Vec::with_capacity(tree.node_count());
    for node in &tree.nodes {
        if node.children.is_empty() {
            rooted.push(Vec::new());
            continue;
        }
        let mut partial: Vec<String> = vec![format!("({}", node.label)];
        for &c in &node.children {
            let child = &tree.nodes[c];
            let options: Vec<String> = if child.children.is_empty() {
                vec![child.label.clone()]
            } else {
                std::iter::once(child.label.clone()).chain(rooted[c].iter().cloned()).collect()
            };
            partial = partial.iter().flat_map(|prefix| options.iter().map(move |o| format!("{prefix} {o}"))).collect();
        }
        rooted.push(partial.into_iter().map(|p| p + ")").collect());
    }
    let mut counts = BTreeMap::new();
    for fragment in rooted.into_iter().flatten() {
        *counts.entry(fragment).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Number of expanded nodes of a canonical fragment.
pub fn fragment_size(fragment: &str) -> usize {
    fragment.matches('(').count()
}

/// Kernel value computed from two fragment multisets.
pub fn oracle_kernel(f1: &BTreeMap<String, usize>, f2: &BTreeMap<String, usize>, lambda: f64) -> f64 {
    f1.iter()
        .filter_map(|(frag, &c1)| f2.get(frag).map(|&c2| (c1 * c2) as f64 * lambda.powi(fragment_size(frag) as i32)))
        .sum()
}

/// Number of identical fragment pairs (the kernel at `lambda = 1`).
pub fn oracle_pair_count(f1: &BTreeMap<String, usize>, f2: &BTreeMap<String, usize>) -> u64 {
    f1.iter().filter_map(|(frag, &c1)| f2.get(frag).map(|&c2| (c1 * c2) as u64)).sum()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeBankError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: ParseTreeError,
    },
    #[error("tree file has {found} document blocks, corpus has {expected} documents")]
    DocumentCount { expected: usize, found: usize },
    #[error("document {document}: {found} trees for {expected} sentences")]
    SentenceCount { document: String, expected: usize, found: usize },
}

/// Reads a tree file: one tree per line, documents separated by blank lines.
pub fn parse_treebank(text: &str) -> Result<Vec<Vec<ParseTree>>, TreeBankError> {
    let mut docs: Vec<Vec<ParseTree>> = Vec::new();
    let mut current: Vec<ParseTree> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                docs.push(std::mem::take(&mut current));
            }
            continue;
        }
        let tree = ParseTree::parse(line).map_err(|source| TreeBankError::Parse { line: k + 1, source })?;
        current.push(tree);
    }
    if !current.is_empty() {
        docs.push(current);
    }
    Ok(docs)
}

/// Trees per document, aligned with the corpus sentence order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TreeBank {
    documents: Vec<(String, Vec<ParseTree>)>,
}

impl TreeBank {
    /// Pairs parsed tree blocks with `(document name, sentence count)` in order.
    pub fn align<'a, I>(blocks: Vec<Vec<ParseTree>>, documents: I) -> Result<Self, TreeBankError>
    where
        I: IntoIterator<Item = (&'a str, usize)>,
    {
        let documents: Vec<(&str, usize)> = documents.into_iter().collect();
        if blocks.len() != documents.len() {
            return Err(TreeBankError::DocumentCount { expected: documents.len(), found: blocks.len() });
        }
        let mut out = Vec::with_capacity(blocks.len());
        for (trees, (name, expected)) in blocks.into_iter().zip(documents) {
            if trees.len() != expected {
                return Err(TreeBankError::SentenceCount { document: name.to_string(), expected, found: trees.len() });
            }
            out.push((name.to_string(), trees));
        }
        Ok(TreeBank { documents: out })
    }

    pub fn get(&self, document: &str) -> Option<&[ParseTree]> {
        self.documents.iter().find(|(n, _)| n == document).map(|(_, t)| t.as_slice())
    }

    /// Serialises in the tree-file format.
    pub fn to_text(&self) -> String {
        self.documents
            .iter()
            .map(|(_, trees)| trees.iter().map(|t| t.canonical() + "\n").collect::<String>())
            .collect::<Vec<_>>()
            .join("\n")
    }
}
