use std::collections::HashSet;

use super::{canonical_edge, CsrMatrix, Edge, GraphDataset};
use crate::error::{Error, Result};

/// Deletes undirected edges. The request is atomic: if any pair is absent
/// nothing is removed.
pub fn remove_edges(dataset: &GraphDataset, edges: &[Edge]) -> Result<GraphDataset> {
    let mut doomed = HashSet::with_capacity(edges.len());
    for &(u, v) in edges {
        if !dataset.has_edge(u, v) {
            return Err(Error::EdgeNotFound(u, v));
        }
        doomed.insert(canonical_edge(u, v));
    }
    if doomed.is_empty() {
        return Ok(dataset.clone());
    }
    let adjacency = filter_adjacency(dataset.adjacency(), |i, j| {
        !doomed.contains(&canonical_edge(i, j))
    });
    Ok(dataset.with_parts(
        adjacency,
        dataset.features().clone(),
        dataset.train_mask().to_vec(),
        dataset.val_mask().to_vec(),
        dataset.test_mask().to_vec(),
    ))
}

/// Removes nodes in place: each keeps its index but loses its incident
/// edges, its feature row and its mask membership.
pub fn remove_nodes(dataset: &GraphDataset, nodes: &[usize]) -> Result<GraphDataset> {
    let n = dataset.n_nodes();
    let mut gone = vec![false; n];
    for &node in nodes {
        if node >= n {
            return Err(Error::NodeOutOfRange { node, n_nodes: n });
        }
        gone[node] = true;
    }
    let adjacency = filter_adjacency(dataset.adjacency(), |i, j| !gone[i] && !gone[j]);
    let mut features = dataset.features().clone();
    for (i, _) in gone.iter().enumerate().filter(|(_, &g)| g) {
        features.row_mut(i).fill(0.0);
    }
    let clear = |mask: &[bool]| -> Vec<bool> {
        mask.iter().zip(&gone).map(|(&m, &g)| m && !g).collect()
    };
    Ok(dataset.with_parts(
        adjacency,
        features,
        clear(dataset.train_mask()),
        clear(dataset.val_mask()),
        clear(dataset.test_mask()),
    ))
}

/// Zeroes the listed feature columns of `X`.
pub fn remove_features(dataset: &GraphDataset, features: &[usize]) -> Result<GraphDataset> {
    let f = dataset.n_features();
    let mut x = dataset.features().clone();
    for &col in features {
        if col >= f {
            return Err(Error::FeatureOutOfRange {
                feature: col,
                n_features: f,
            });
        }
        x.column_mut(col).fill(0.0);
    }
    dataset.with_features(x)
}

fn filter_adjacency(adj: &CsrMatrix, keep: impl Fn(usize, usize) -> bool) -> CsrMatrix {
    let triplets = adj.iter().filter(|&(i, j, _)| keep(i, j)).collect();
    CsrMatrix::from_triplets(adj.n(), triplets)
}
