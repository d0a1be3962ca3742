use super::{CsrMatrix, GraphDataset};

/// Row-stochastic operator `P = D̄⁻¹ (A + I)` together with the hop count
/// it is applied with.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationOperator {
    matrix: CsrMatrix,
    hops: usize,
}

impl PropagationOperator {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn hops(&self) -> usize {
        self.hops
    }

    /// Largest `|row sum - 1|` over all rows.
    pub fn max_row_sum_deviation(&self) -> f64 {
        (0..self.matrix.n())
            .map(|i| (self.matrix.row_sum(i) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Left-normalizes the adjacency with self-loops. Always succeeds: every row
/// of `A + I` has a positive sum.
pub fn build_propagation(dataset: &GraphDataset, hops: usize) -> PropagationOperator {
    let adj = dataset.adjacency();
    let n = adj.n();
    let mut triplets = Vec::with_capacity(adj.nnz() + n);
    for i in 0..n {
        let (cols, vals) = adj.row(i);
        let degree = 1.0 + vals.iter().sum::<f64>();
        triplets.push((i, i, 1.0 / degree));
        triplets.extend(cols.iter().zip(vals).map(|(&j, &v)| (i, j, v / degree)));
    }
    PropagationOperator {
        matrix: CsrMatrix::from_triplets(n, triplets),
        hops,
    }
}
