//! Attributed graph data model, propagation and structural edits.
//!
//! A [`GraphDataset`] holds an undirected graph (symmetric CSR adjacency with
//! no stored self-loops), a dense node feature matrix, a binary sensitive
//! attribute, binary labels and disjoint train/validation/test masks. All
//! values are immutable; edits return new datasets.

mod aggregate;
mod csr;
mod degree;
mod edit;
mod propagation;

pub use aggregate::{aggregate, aggregate_matrix, AggregatedFeatures, Scheme};
pub use csr::CsrMatrix;
pub use degree::{degree_stats, DegreeStats};
pub use edit::{remove_edges, remove_features, remove_nodes};
pub use propagation::{build_propagation, PropagationOperator};

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Undirected edge stored with `0 <= .0 < .1`.
pub type Edge = (usize, usize);

/// Canonical orientation of an undirected pair.
pub fn canonical_edge(u: usize, v: usize) -> Edge {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphDataset {
    adjacency: Arc<CsrMatrix>,
    features: DMatrix<f64>,
    sensitive: Vec<u8>,
    labels: Vec<u8>,
    train_mask: Vec<bool>,
    val_mask: Vec<bool>,
    test_mask: Vec<bool>,
}

impl GraphDataset {
    /// Validates and wraps the given parts. Masks start empty; assign them
    /// with [`GraphDataset::with_splits`].
    pub fn new(
        adjacency: CsrMatrix,
        features: DMatrix<f64>,
        sensitive: Vec<u8>,
        labels: Vec<u8>,
    ) -> Result<Self> {
        let n = adjacency.n();
        check_len("feature rows", n, features.nrows())?;
        check_len("sensitive vector", n, sensitive.len())?;
        check_len("label vector", n, labels.len())?;
        check_binary("sensitive attribute", &sensitive)?;
        check_binary("label", &labels)?;
        for (i, j, v) in adjacency.iter() {
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop stored at node {i}")));
            }
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidGraph(format!("non-positive weight {v} on ({i}, {j})")));
            }
        }
        if !adjacency.is_symmetric(0.0) {
            return Err(Error::InvalidGraph("adjacency is not symmetric".into()));
        }
        Ok(Self {
            adjacency: Arc::new(adjacency),
            features,
            sensitive,
            labels,
            train_mask: vec![false; n],
            val_mask: vec![false; n],
            test_mask: vec![false; n],
        })
    }

    /// Builds an unweighted graph from an undirected edge list. Duplicate
    /// pairs (in either orientation) collapse to one edge.
    pub fn from_edges(
        n_nodes: usize,
        edges: &[Edge],
        features: DMatrix<f64>,
        sensitive: Vec<u8>,
        labels: Vec<u8>,
    ) -> Result<Self> {
        let mut unique: Vec<Edge> = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            for node in [u, v] {
                if node >= n_nodes {
                    return Err(Error::NodeOutOfRange { node, n_nodes });
                }
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at node {u}")));
            }
            unique.push(canonical_edge(u, v));
        }
        unique.sort_unstable();
        unique.dedup();
        let triplets = unique
            .iter()
            .flat_map(|&(u, v)| [(u, v, 1.0), (v, u, 1.0)])
            .collect();
        Self::new(
            CsrMatrix::from_triplets(n_nodes, triplets),
            features,
            sensitive,
            labels,
        )
    }

    /// Returns a copy with the given masks, which must be pairwise disjoint
    /// with a non-empty training part.
    pub fn with_splits(
        &self,
        train_mask: Vec<bool>,
        val_mask: Vec<bool>,
        test_mask: Vec<bool>,
    ) -> Result<Self> {
        let n = self.n_nodes();
        check_len("train mask", n, train_mask.len())?;
        check_len("validation mask", n, val_mask.len())?;
        check_len("test mask", n, test_mask.len())?;
        for i in 0..n {
            let owners = train_mask[i] as u8 + val_mask[i] as u8 + test_mask[i] as u8;
            if owners > 1 {
                return Err(Error::InvalidParameter(format!(
                    "node {i} belongs to more than one split"
                )));
            }
        }
        if !train_mask.iter().any(|&t| t) {
            return Err(Error::EmptyTrainingSet);
        }
        Ok(Self {
            adjacency: self.adjacency.clone(),
            features: self.features.clone(),
            sensitive: self.sensitive.clone(),
            labels: self.labels.clone(),
            train_mask,
            val_mask,
            test_mask,
        })
    }

    pub(crate) fn with_parts(
        &self,
        adjacency: CsrMatrix,
        features: DMatrix<f64>,
        train_mask: Vec<bool>,
        val_mask: Vec<bool>,
        test_mask: Vec<bool>,
    ) -> Self {
        Self {
            adjacency: Arc::new(adjacency),
            features,
            sensitive: self.sensitive.clone(),
            labels: self.labels.clone(),
            train_mask,
            val_mask,
            test_mask,
        }
    }

    /// Returns a copy with a replaced feature matrix of the same row count.
    pub fn with_features(&self, features: DMatrix<f64>) -> Result<Self> {
        check_len("feature rows", self.n_nodes(), features.nrows())?;
        Ok(Self {
            adjacency: self.adjacency.clone(),
            features,
            sensitive: self.sensitive.clone(),
            labels: self.labels.clone(),
            train_mask: self.train_mask.clone(),
            val_mask: self.val_mask.clone(),
            test_mask: self.test_mask.clone(),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.n()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Number of undirected edges.
    pub fn n_edges(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    pub fn adjacency(&self) -> &CsrMatrix {
        &self.adjacency
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn sensitive(&self) -> &[u8] {
        &self.sensitive
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn train_mask(&self) -> &[bool] {
        &self.train_mask
    }

    pub fn val_mask(&self) -> &[bool] {
        &self.val_mask
    }

    pub fn test_mask(&self) -> &[bool] {
        &self.test_mask
    }

    pub fn train_indices(&self) -> Vec<usize> {
        mask_indices(&self.train_mask)
    }

    pub fn train_count(&self) -> usize {
        self.train_mask.iter().filter(|&&t| t).count()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n_nodes() && v < self.n_nodes() && self.adjacency.get(u, v) > 0.0
    }

    /// Undirected edges in canonical orientation, sorted.
    pub fn edges(&self) -> Vec<Edge> {
        self.adjacency
            .iter()
            .filter(|&(i, j, _)| i < j)
            .map(|(i, j, _)| (i, j))
            .collect()
    }

    pub fn max_row_norm(&self) -> f64 {
        max_row_norm(&self.features)
    }
}

pub fn mask_indices(mask: &[bool]) -> Vec<usize> {
    mask.iter()
        .enumerate()
        .filter_map(|(i, &m)| m.then_some(i))
        .collect()
}

pub fn max_row_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).norm())
        .fold(0.0, f64::max)
}

fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            actual,
        });
    }
    Ok(())
}

fn check_binary(what: &'static str, values: &[u8]) -> Result<()> {
    match values.iter().position(|&v| v > 1) {
        Some(index) => Err(Error::NonBinary {
            what,
            index,
            value: values[index] as f64,
        }),
        None => Ok(()),
    }
}
