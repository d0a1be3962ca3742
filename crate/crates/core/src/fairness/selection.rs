use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::correlation::pearson_correlations;
use super::structural::{edge_bias_score, intra_inter_ratio, node_bias_score};
use crate::error::{Error, Result};
use crate::graph::{degree_stats, mask_indices, Edge, GraphDataset};
use crate::unlearn::RemovalRequest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SelectionKind {
    Feature,
    Edge,
    Node,
}

impl SelectionKind {
    pub fn name(self) -> &'static str {
        match self {
            SelectionKind::Feature => "feature",
            SelectionKind::Edge => "edge",
            SelectionKind::Node => "node",
        }
    }
}

impl fmt::Display for SelectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SelectionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "feature" | "features" => Ok(SelectionKind::Feature),
            "edge" | "edges" => Ok(SelectionKind::Edge),
            "node" | "nodes" => Ok(SelectionKind::Node),
            other => Err(Error::InvalidParameter(format!("unknown task kind `{other}`"))),
        }
    }
}

/// Scoring rule behind a selection. `Proposed` is the correlation score for
/// features, `b_e` for edges and `b_n` for nodes; the others are ablations.
///
/// | rule             | feature | edge                      | node               |
/// |------------------|---------|---------------------------|--------------------|
/// | `random`         | u       | u                         | u                  |
/// | `random-intra`   |         | intra edges first, random |                    |
/// | `random-inter`   |         | inter edges first, random |                    |
/// | `bias-term-only` |         | `1{s_i = s_j}`            | `d^ω / (1 + d^χ)`  |
/// | `degree-only`    |         | `1 / min(d_i, d_j)`       | `1 / d`            |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SelectionRule {
    Proposed,
    Random,
    RandomIntra,
    RandomInter,
    BiasTermOnly,
    DegreeOnly,
}

impl SelectionRule {
    pub const ALL: [SelectionRule; 6] = [
        SelectionRule::Proposed,
        SelectionRule::Random,
        SelectionRule::RandomIntra,
        SelectionRule::RandomInter,
        SelectionRule::BiasTermOnly,
        SelectionRule::DegreeOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SelectionRule::Proposed => "proposed",
            SelectionRule::Random => "random",
            SelectionRule::RandomIntra => "random-intra",
            SelectionRule::RandomInter => "random-inter",
            SelectionRule::BiasTermOnly => "bias-term-only",
            SelectionRule::DegreeOnly => "degree-only",
        }
    }

    pub fn supports(self, kind: SelectionKind) -> bool {
        use SelectionRule::*;
        match kind {
            SelectionKind::Feature => matches!(self, Proposed | Random),
            SelectionKind::Edge => true,
            SelectionKind::Node => !matches!(self, RandomIntra | RandomInter),
        }
    }

    fn check(self, kind: SelectionKind) -> Result<()> {
        if self.supports(kind) {
            Ok(())
        } else {
            Err(Error::UnsupportedRule {
                rule: self.name(),
                target: kind.name(),
            })
        }
    }
}

impl fmt::Display for SelectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SelectionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ablation_variants(s)
    }
}

/// Looks up a scoring rule by name; `fair` is accepted for `proposed`.
pub fn ablation_variants(kind: &str) -> Result<SelectionRule> {
    let key = kind.trim().to_ascii_lowercase().replace('_', "-");
    if key == "fair" {
        return Ok(SelectionRule::Proposed);
    }
    SelectionRule::ALL
        .into_iter()
        .find(|r| r.name() == key)
        .ok_or_else(|| Error::UnknownRule(kind.to_string()))
}

/// Which nodes are eligible for node selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NodeScope {
    #[default]
    Train,
    All,
}

impl FromStr for NodeScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" | "train-only" => Ok(NodeScope::Train),
            "all" | "all-nodes" => Ok(NodeScope::All),
            other => Err(Error::InvalidParameter(format!("unknown node scope `{other}`"))),
        }
    }
}

/// Candidates with their scores and the chosen top-k in descending score order.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult<T> {
    pub kind: SelectionKind,
    pub rule: SelectionRule,
    pub candidates: Vec<T>,
    pub scores: Vec<f64>,
    pub chosen: Vec<T>,
    /// Positions of `chosen` within `candidates`.
    pub chosen_positions: Vec<usize>,
    pub budget: usize,
}

impl<T: Copy> SelectionResult<T> {
    fn from_scores(
        kind: SelectionKind,
        rule: SelectionRule,
        candidates: Vec<T>,
        scores: Vec<f64>,
        budget: usize,
    ) -> Self {
        let chosen_positions = top_k(&scores, budget);
        let chosen = chosen_positions.iter().map(|&p| candidates[p]).collect();
        Self {
            kind,
            rule,
            candidates,
            scores,
            chosen,
            chosen_positions,
            budget,
        }
    }

    pub fn chosen_scores(&self) -> Vec<f64> {
        self.chosen_positions.iter().map(|&p| self.scores[p]).collect()
    }
}

impl SelectionResult<usize> {
    pub fn to_request(&self) -> RemovalRequest {
        match self.kind {
            SelectionKind::Node => RemovalRequest::Nodes(self.chosen.clone()),
            _ => RemovalRequest::Features(self.chosen.clone()),
        }
    }
}

impl SelectionResult<Edge> {
    pub fn to_request(&self) -> RemovalRequest {
        RemovalRequest::Edges(self.chosen.clone())
    }
}

/// Positions of the `k` largest scores; ties go to the lower position.
pub fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k.min(scores.len()));
    order
}

fn uniforms(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

/// Top-k features by `|ρ_f|` computed on the columns of `x`.
pub fn select_features(x: &DMatrix<f64>, s: &[u8], k: usize) -> Result<SelectionResult<usize>> {
    select_features_with(x, s, k, SelectionRule::Proposed, 0)
}

pub fn select_features_with(
    x: &DMatrix<f64>,
    s: &[u8],
    k: usize,
    rule: SelectionRule,
    seed: u64,
) -> Result<SelectionResult<usize>> {
    rule.check(SelectionKind::Feature)?;
    let f = x.ncols();
    if k == 0 || k > f {
        return Err(Error::BudgetOutOfRange { k, max: f });
    }
    let scores = match rule {
        SelectionRule::Random => uniforms(f, seed),
        _ => pearson_correlations(x, s)?.rho.iter().map(|r| r.abs()).collect(),
    };
    Ok(SelectionResult::from_scores(SelectionKind::Feature, rule, (0..f).collect(), scores, k))
}

/// Top-k edges by `b_e`. Budgets beyond the edge count select every edge.
pub fn select_edges(dataset: &GraphDataset, k: usize) -> Result<SelectionResult<Edge>> {
    select_edges_with(dataset, k, SelectionRule::Proposed, 0)
}

pub fn select_edges_with(
    dataset: &GraphDataset,
    k: usize,
    rule: SelectionRule,
    seed: u64,
) -> Result<SelectionResult<Edge>> {
    rule.check(SelectionKind::Edge)?;
    let stats = degree_stats(dataset);
    let s = dataset.sensitive();
    let edges = dataset.edges();
    let noise = uniforms(edges.len(), seed);
    let scores = edges
        .iter()
        .zip(&noise)
        .map(|(&(i, j), &u)| {
            let intra = s[i] == s[j];
            match rule {
                SelectionRule::Proposed => edge_bias_score((i, j), s, &stats),
                SelectionRule::Random => u,
                SelectionRule::RandomIntra => u + f64::from(u8::from(intra)),
                SelectionRule::RandomInter => u + f64::from(u8::from(!intra)),
                SelectionRule::BiasTermOnly => f64::from(u8::from(intra)),
                SelectionRule::DegreeOnly => 1.0 / stats.degree[i].min(stats.degree[j]) as f64,
            }
        })
        .collect();
    Ok(SelectionResult::from_scores(SelectionKind::Edge, rule, edges, scores, k))
}

/// Top-k nodes by `b_n` within `scope`.
pub fn select_nodes(
    dataset: &GraphDataset,
    k: usize,
    scope: NodeScope,
) -> Result<SelectionResult<usize>> {
    select_nodes_with(dataset, k, scope, SelectionRule::Proposed, 0)
}

pub fn select_nodes_with(
    dataset: &GraphDataset,
    k: usize,
    scope: NodeScope,
    rule: SelectionRule,
    seed: u64,
) -> Result<SelectionResult<usize>> {
    rule.check(SelectionKind::Node)?;
    let candidates = match scope {
        NodeScope::Train => mask_indices(dataset.train_mask()),
        NodeScope::All => (0..dataset.n_nodes()).collect(),
    };
    if k > candidates.len() {
        return Err(Error::BudgetOutOfRange {
            k,
            max: candidates.len(),
        });
    }
    let stats = degree_stats(dataset);
    let noise = uniforms(candidates.len(), seed);
    let scores = candidates
        .iter()
        .zip(&noise)
        .map(|(&v, &u)| match rule {
            SelectionRule::Random => u,
            SelectionRule::BiasTermOnly => intra_inter_ratio(v, &stats),
            SelectionRule::DegreeOnly if stats.degree[v] == 0 => 0.0,
            SelectionRule::DegreeOnly => 1.0 / stats.degree[v] as f64,
            _ => node_bias_score(v, &stats),
        })
        .collect();
    Ok(SelectionResult::from_scores(SelectionKind::Node, rule, candidates, scores, k))
}
