//! Seeded synthetic attributed graphs for tests and benchmarks.
//!
//! Features are i.i.d. `Normal(0, σ²)` with `σ = 1 / (5 √F)` so that rows
//! have norm at most one with high probability; the rare row above one is
//! rescaled onto the unit sphere. Optionally the first `bias_features`
//! columns are shifted by `±bias_strength · σ` according to the sensitive
//! group. Edges are drawn Chung-Lu style from heavy-tailed node weights,
//! with each edge staying inside the endpoint's group with probability
//! `homophily`.

use std::collections::HashSet;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{weighted::WeightedIndex, Distribution, Normal};

use crate::error::{Error, Result};
use crate::graph::{canonical_edge, Edge, GraphDataset};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_nodes: usize,
    pub n_features: usize,
    pub avg_degree: f64,
    /// Probability that an edge joins two nodes of the same group.
    pub homophily: f64,
    /// Exponent of the node weight law `(rank + 1)^(-skew)`; 0 is uniform.
    pub degree_skew: f64,
    /// Fraction of nodes with `s = 1`.
    pub minority_fraction: f64,
    pub bias_features: usize,
    pub bias_strength: f64,
    /// Shift of the label logit by sensitive group.
    pub label_bias: f64,
    pub label_noise: f64,
    /// Train/validation/test fractions; masks are left empty when `None`.
    pub split: Option<[f64; 3]>,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_nodes: 200,
            n_features: 10,
            avg_degree: 6.0,
            homophily: 0.8,
            degree_skew: 0.5,
            minority_fraction: 0.4,
            bias_features: 2,
            bias_strength: 1.0,
            label_bias: 0.5,
            label_noise: 0.5,
            split: Some([0.6, 0.2, 0.2]),
            seed: 0,
        }
    }
}

/// Per-column feature standard deviation used by the generator.
pub fn feature_sigma(n_features: usize) -> f64 {
    1.0 / (5.0 * (n_features as f64).sqrt())
}

pub fn generate(spec: &SyntheticSpec) -> Result<GraphDataset> {
    let n = spec.n_nodes;
    let f = spec.n_features;
    if n < 2 || f == 0 {
        return Err(Error::InvalidParameter("need at least 2 nodes and 1 feature".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let n_minority = ((n as f64 * spec.minority_fraction).round() as usize).clamp(1, n - 1);
    let mut sensitive = vec![0u8; n];
    sensitive[..n_minority].fill(1);
    sensitive.shuffle(&mut rng);

    let sigma = feature_sigma(f);
    let noise = Normal::new(0.0, sigma).expect("positive sigma");
    let mut x = DMatrix::from_fn(n, f, |_, _| noise.sample(&mut rng));
    for i in 0..n {
        let sign = 2.0 * sensitive[i] as f64 - 1.0;
        for j in 0..spec.bias_features.min(f) {
            x[(i, j)] += spec.bias_strength * sigma * sign;
        }
        let norm = x.row(i).norm();
        if norm > 1.0 {
            x.row_mut(i).scale_mut(1.0 / norm);
        }
    }

    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let direction: Vec<f64> = (0..f).map(|_| std_normal.sample(&mut rng) / (f as f64).sqrt()).collect();
    let labels = (0..n)
        .map(|i| {
            let signal: f64 = (0..f).map(|j| direction[j] * x[(i, j)] / sigma).sum();
            let logit = signal
                + spec.label_bias * (2.0 * sensitive[i] as f64 - 1.0)
                + spec.label_noise * std_normal.sample(&mut rng);
            u8::from(logit > 0.0)
        })
        .collect();

    let edges = sample_edges(spec, &sensitive, &mut rng);
    let dataset = GraphDataset::from_edges(n, &edges, x, sensitive, labels)?;
    match spec.split {
        Some(fractions) => {
            let (train, val, test) = random_split_masks(n, fractions, rng.random())?;
            dataset.with_splits(train, val, test)
        }
        None => Ok(dataset),
    }
}

fn sample_edges(spec: &SyntheticSpec, sensitive: &[u8], rng: &mut ChaCha8Rng) -> Vec<Edge> {
    let n = spec.n_nodes;
    let target = (n as f64 * spec.avg_degree / 2.0).round() as usize;
    if target == 0 {
        return Vec::new();
    }
    let mut ranks: Vec<usize> = (0..n).collect();
    ranks.shuffle(rng);
    let weight: Vec<f64> = ranks
        .iter()
        .map(|&r| (r as f64 + 1.0).powf(-spec.degree_skew))
        .collect();
    let groups: [Vec<usize>; 2] = [0u8, 1].map(|g| (0..n).filter(|&i| sensitive[i] == g).collect());
    let pickers = groups.clone().map(|members| {
        WeightedIndex::new(members.iter().map(|&i| weight[i])).expect("non-empty group")
    });
    let any = WeightedIndex::new(&weight).expect("positive weights");

    let mut seen = HashSet::with_capacity(target);
    let mut edges = Vec::with_capacity(target);
    let mut attempts = 0usize;
    while edges.len() < target && attempts < target * 50 {
        attempts += 1;
        let u = any.sample(rng);
        let g = if rng.random::<f64>() < spec.homophily {
            sensitive[u]
        } else {
            1 - sensitive[u]
        } as usize;
        let v = groups[g][pickers[g].sample(rng)];
        if u == v {
            continue;
        }
        let e = canonical_edge(u, v);
        if seen.insert(e) {
            edges.push(e);
        }
    }
    edges
}

/// Uniformly random disjoint masks with sizes `round(N·train)`,
/// `round(N·val)` and the remainder for test.
pub fn random_split_masks(
    n: usize,
    fractions: [f64; 3],
    seed: u64,
) -> Result<(Vec<bool>, Vec<bool>, Vec<bool>)> {
    if fractions.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::InvalidParameter("split fractions must be positive".into()));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("split fractions sum to {total}, not 1")));
    }
    let n_train = (n as f64 * fractions[0]).round() as usize;
    let n_val = ((n as f64 * fractions[1]).round() as usize).min(n - n_train.min(n));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut masks = (vec![false; n], vec![false; n], vec![false; n]);
    for (pos, &i) in order.iter().enumerate() {
        if pos < n_train {
            masks.0[i] = true;
        } else if pos < n_train + n_val {
            masks.1[i] = true;
        } else {
            masks.2[i] = true;
        }
    }
    Ok(masks)
}

/// Tabular instance with one planted column `s + Normal(0, noise²)` at a
/// random position among `n_features - 1` pure-noise columns. Returns the
/// matrix, the sensitive vector and the planted column index.
pub fn planted_bias_matrix(
    n_rows: usize,
    n_features: usize,
    noise: f64,
    seed: u64,
) -> (DMatrix<f64>, Vec<u8>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = n_rows / 2;
    let mut s: Vec<u8> = (0..n_rows).map(|i| u8::from(i < half)).collect();
    s.shuffle(&mut rng);
    let planted = rng.random_range(0..n_features);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let x = DMatrix::from_fn(n_rows, n_features, |i, j| {
        let e = unit.sample(&mut rng);
        if j == planted {
            s[i] as f64 + noise * e
        } else {
            e
        }
    });
    (x, s, planted)
}
