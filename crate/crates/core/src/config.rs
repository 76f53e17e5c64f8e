//! Pipeline configuration and its flat `key = value` file format.
//!
//! ```text
//! # features
//! ngram_orders = 1,2
//! use_pos = false
//! min_df = 1
//! lowercase = true
//! tf = raw            # raw | log
//! # training
//! c = 1.0
//! class_weight = balanced   # balanced | <positive multiplier>
//! tol = 0.001
//! max_iter = 10000
//! epochs = 20
//! chain_solver = frank-wolfe
//! seed = 0
//! # tree kernel
//! lambda = 0.4
//! normalize = true
//! # labels
//! positive_levels = 2,3     # 2,3 | 2
//! tag_mode = strict         # strict | lenient
//! threshold = 0
//! ```

use crate::corpus::{CorpusOptions, PositiveLevels, TagMode};
use crate::features::{FeatureConfig, TfMode};
use crate::svm::{ChainSolver, ClassWeight, TrainConfig};
use crate::treekernel::KernelConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("config line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct PipelineConfig {
    pub features: FeatureConfig,
    pub train: TrainConfig,
    pub kernel: KernelConfig,
    pub corpus: CorpusOptions,
    /// Decision threshold applied by evaluation only; models always use 0.
    pub threshold: f64,
}

fn parse_bool(value: &str) -> Result<bool, String> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("expected a boolean, got {value:?}")),
    }
}

fn parse_num<T: std::str::FromStr>(value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("invalid number {value:?}"))
}

impl PipelineConfig {
    /// Applies `key = value` lines on top of the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = PipelineConfig::default();
        for (k, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ConfigError { line: k + 1, message };
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            cfg.set(key.trim(), value.trim()).map_err(err)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key.to_ascii_lowercase().as_str() {
            "ngram_orders" => {
                let orders = value.split(',').map(|v| parse_num::<usize>(v.trim())).collect::<Result<_, _>>()?;
                self.features.ngram_orders = orders;
            }
            "use_pos" => self.features.use_pos = parse_bool(value)?,
            "min_df" => self.features.min_df = parse_num(value)?,
            "lowercase" => self.features.lowercase = parse_bool(value)?,
            "tf" => {
                self.features.tf = match value {
                    "raw" => TfMode::Raw,
                    "log" => TfMode::Log,
                    _ => return Err(format!("tf must be raw or log, got {value:?}")),
                }
            }
            "c" => self.train.c = parse_num(value)?,
            "class_weight" | "positive_weight" => {
                self.train.class_weight =
                    if value == "balanced" { ClassWeight::Balanced } else { ClassWeight::Positive(parse_num(value)?) }
            }
            "tol" => self.train.tol = parse_num(value)?,
            "max_iter" => self.train.max_iter = parse_num(value)?,
            "epochs" => self.train.epochs = parse_num(value)?,
            "chain_solver" => {
                self.train.chain_solver = match value {
                    "frank-wolfe" => ChainSolver::FrankWolfe,
                    "pegasos" => ChainSolver::Pegasos,
                    _ => return Err(format!("chain_solver must be frank-wolfe or pegasos, got {value:?}")),
                }
            }
            "seed" => self.train.seed = parse_num(value)?,
            "lambda" => self.kernel.lambda = parse_num(value)?,
            "normalize" => self.kernel.normalize = parse_bool(value)?,
            "positive_levels" => {
                let compact: String = value.chars().filter(|c| !c.is_whitespace()).collect();
                self.corpus.positive_levels = match compact.as_str() {
                    "2,3" => PositiveLevels::Unfair,
                    "2" => PositiveLevels::PotentiallyUnfairOnly,
                    _ => return Err(format!("positive_levels must be 2,3 or 2, got {value:?}")),
                }
            }
            "tag_mode" => {
                self.corpus.tag_mode = match value {
                    "strict" => TagMode::Strict,
                    "lenient" => TagMode::Lenient,
                    _ => return Err(format!("tag_mode must be strict or lenient, got {value:?}")),
                }
            }
            "threshold" => self.threshold = parse_num(value)?,
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }
}
