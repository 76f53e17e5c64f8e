//! Detection and classification of potentially unfair clauses in online
//! Terms-of-Service documents.
//!
//! The crate is organised as a pipeline:
//!
//! * [`corpus`] parses inline-tagged documents, segments them into sentences
//!   and projects clause labels onto sentences.
//! * [`features`] turns sentences into L2-normalised TF-IDF sparse vectors
//!   over word n-grams and part-of-speech tags.
//! * [`treekernel`] reads bracketed constituency trees and evaluates the
//!   subset tree kernel.
//! * [`svm`] trains binary max-margin classifiers (dual coordinate descent
//!   for sparse vectors, SMO for precomputed kernels).
//! * [`seqmodel`] labels a whole document jointly with a chain-structured
//!   max-margin model.
//! * [`eval`] runs leave-one-document-out evaluation and compares corpus
//!   statistics against the published reference table.
//! * [`model`], [`report`] and [`config`] provide persistence, HTML rendering
//!   and the configuration file used by the command-line front end.

pub mod config;
pub mod corpus;
pub mod eval;
pub mod features;
pub mod model;
pub mod report;
pub mod seqmodel;
pub mod svm;
pub mod synth;
pub mod treekernel;

pub use corpus::{ClauseCategory, Corpus, FairnessLevel, LabeledSentence, Sentence, TagSpan};
pub use features::{FeatureConfig, SparseVector, Vocabulary};
pub use treekernel::ParseTree;
