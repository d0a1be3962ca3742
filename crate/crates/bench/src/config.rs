//! Experiment configuration read from TOML.

use std::fs;
use std::path::{Path, PathBuf};

use fairwipe_core::fairness::{NodeScope, SelectionKind, SelectionRule};
use fairwipe_core::graph::Scheme;
use fairwipe_core::synthetic::SyntheticSpec;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Pretrained,
    Unlearn,
    Retrain,
}

impl Arm {
    pub fn name(self) -> &'static str {
        match self {
            Arm::Pretrained => "pretrained",
            Arm::Unlearn => "unlearn",
            Arm::Retrain => "retrain",
        }
    }
}

/// Synthetic graph used in place of a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSource {
    pub name: String,
    pub n_nodes: usize,
    pub n_features: usize,
    pub avg_degree: f64,
    pub homophily: f64,
    pub degree_skew: f64,
    pub minority_fraction: f64,
    pub bias_features: usize,
    pub bias_strength: f64,
    pub label_bias: f64,
    pub label_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSource {
    fn default() -> Self {
        let d = SyntheticSpec::default();
        Self {
            name: "synthetic".into(),
            n_nodes: d.n_nodes,
            n_features: d.n_features,
            avg_degree: d.avg_degree,
            homophily: d.homophily,
            degree_skew: d.degree_skew,
            minority_fraction: d.minority_fraction,
            bias_features: d.bias_features,
            bias_strength: d.bias_strength,
            label_bias: d.label_bias,
            label_noise: d.label_noise,
            seed: d.seed,
        }
    }
}

impl SyntheticSource {
    pub fn spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            n_nodes: self.n_nodes,
            n_features: self.n_features,
            avg_degree: self.avg_degree,
            homophily: self.homophily,
            degree_skew: self.degree_skew,
            minority_fraction: self.minority_fraction,
            bias_features: self.bias_features,
            bias_strength: self.bias_strength,
            label_bias: self.label_bias,
            label_noise: self.label_noise,
            split: None,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Path to a dataset manifest, relative to the config file.
    #[serde(default)]
    pub manifest: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: Option<SyntheticSource>,
    pub task: String,
    /// Feature or node budget.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default = "default_edge_fraction")]
    pub edge_fraction: f64,
    #[serde(default = "default_edge_batches")]
    pub edge_batches: usize,
    #[serde(default = "default_node_scope")]
    pub node_scope: String,
    #[serde(default = "default_selector")]
    pub selector: String,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default = "default_hops")]
    pub hops: usize,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Residual allowance for structural removals; when absent it is taken
    /// from a noise-free dry run of the same removal.
    #[serde(default)]
    pub epsilon_prime: Option<f64>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_split")]
    pub split: [f64; 3],
    #[serde(default = "default_arms")]
    pub arms: Vec<Arm>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// When false every wall time is reported as zero, which makes result
    /// files byte-identical across runs.
    #[serde(default = "default_true")]
    pub record_timing: bool,
}

fn default_edge_fraction() -> f64 {
    0.1
}
fn default_edge_batches() -> usize {
    10
}
fn default_node_scope() -> String {
    "train".into()
}
fn default_selector() -> String {
    "proposed".into()
}
fn default_scheme() -> String {
    "gpr".into()
}
fn default_hops() -> usize {
    3
}
fn default_lambda() -> f64 {
    10.0
}
fn default_epsilon() -> f64 {
    1.0
}
fn default_delta() -> f64 {
    1e-4
}
fn default_split() -> [f64; 3] {
    [0.6, 0.2, 0.2]
}
fn default_arms() -> Vec<Arm> {
    vec![Arm::Pretrained, Arm::Unlearn, Arm::Retrain]
}
fn default_tolerance() -> f64 {
    1e-8
}
fn default_max_iterations() -> usize {
    500
}
fn default_true() -> bool {
    true
}

/// Parsed and cross-checked form of the enumerated config fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolved {
    pub task: SelectionKind,
    pub rule: SelectionRule,
    pub scheme: Scheme,
    pub scope: NodeScope,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        if let (Some(m), Some(dir)) = (config.manifest.as_mut(), path.parent()) {
            if m.is_relative() {
                *m = dir.join(&*m);
            }
        }
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        config.resolve()?;
        Ok(config)
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let bad = |msg: String| Err(BenchError::Config(msg));
        let task: SelectionKind = self.task.parse().map_err(config_err)?;
        let rule: SelectionRule = self.selector.parse().map_err(config_err)?;
        if !rule.supports(task) {
            return bad(format!("selector `{rule}` does not apply to {task} removal"));
        }
        let scheme: Scheme = self.scheme.parse().map_err(config_err)?;
        let scope: NodeScope = self.node_scope.parse().map_err(config_err)?;
        if self.manifest.is_some() == self.synthetic.is_some() {
            return bad("exactly one of `manifest` and `[synthetic]` must be given".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if self.arms.is_empty() {
            return bad("arms must not be empty".into());
        }
        if self.split.iter().any(|&p| !(p > 0.0)) || (self.split.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad(format!("split fractions {:?} must be positive and sum to 1", self.split));
        }
        if !(self.lambda > 0.0) || !(self.epsilon > 0.0) || !(self.delta > 0.0 && self.delta < 1.5) {
            return bad("lambda and epsilon must be positive and delta in (0, 1.5)".into());
        }
        match task {
            SelectionKind::Feature | SelectionKind::Node if self.k.unwrap_or(0) == 0 => {
                return bad(format!("{task} removal needs a budget k >= 1"));
            }
            SelectionKind::Edge if !(self.edge_fraction > 0.0 && self.edge_fraction <= 1.0) || self.edge_batches == 0 => {
                return bad("edge removal needs edge_fraction in (0, 1] and edge_batches >= 1".into());
            }
            _ => {}
        }
        if matches!(self.epsilon_prime, Some(e) if !(e >= 0.0)) {
            return bad("epsilon_prime must be >= 0".into());
        }
        Ok(Resolved {
            task,
            rule,
            scheme,
            scope,
        })
    }

    /// Applies a `name=value` override as used by `sweep`.
    pub fn set_param(&mut self, name: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(name: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| BenchError::Config(format!("invalid value `{value}` for `{name}`")))
        }
        match name {
            "hops" => self.hops = parse(name, value)?,
            "lambda" => self.lambda = parse(name, value)?,
            "k" => self.k = Some(parse(name, value)?),
            "epsilon" => self.epsilon = parse(name, value)?,
            "delta" => self.delta = parse(name, value)?,
            "edge_fraction" => self.edge_fraction = parse(name, value)?,
            "edge_batches" => self.edge_batches = parse(name, value)?,
            "selector" => self.selector = value.to_string(),
            "scheme" => self.scheme = value.to_string(),
            "node_scope" => self.node_scope = value.to_string(),
            other => return Err(BenchError::Config(format!("`{other}` cannot be swept"))),
        }
        self.resolve().map(|_| ())
    }
}

fn config_err(e: fairwipe_core::Error) -> BenchError {
    BenchError::Config(e.to_string())
}
