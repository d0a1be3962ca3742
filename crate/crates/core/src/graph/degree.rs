use super::GraphDataset;

/// Degree and group counts split by whether an edge joins the same
/// sensitive group (intra) or different groups (inter). Self-loops are
/// never counted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeStats {
    pub degree: Vec<usize>,
    pub inter_degree: Vec<usize>,
    pub intra_degree: Vec<usize>,
    /// `|S_0|`, `|S_1|`.
    pub group_sizes: [usize; 2],
    /// Nodes of each group with at least one inter-edge.
    pub boundary_sizes: [usize; 2],
    pub inter_edges: usize,
    pub intra_edges: usize,
}

impl DegreeStats {
    pub fn total_edges(&self) -> usize {
        self.inter_edges + self.intra_edges
    }

    /// `|S_g^χ| / |S_g|`, or `None` for an empty group.
    pub fn boundary_ratio(&self, group: usize) -> Option<f64> {
        (self.group_sizes[group] > 0)
            .then(|| self.boundary_sizes[group] as f64 / self.group_sizes[group] as f64)
    }
}

pub fn degree_stats(dataset: &GraphDataset) -> DegreeStats {
    let n = dataset.n_nodes();
    let s = dataset.sensitive();
    let mut inter_degree = vec![0usize; n];
    let mut intra_degree = vec![0usize; n];
    let (mut inter_edges, mut intra_edges) = (0, 0);
    for (i, j, _) in dataset.adjacency().iter() {
        if i == j {
            continue;
        }
        let inter = s[i] != s[j];
        if inter {
            inter_degree[i] += 1;
        } else {
            intra_degree[i] += 1;
        }
        if i < j {
            if inter {
                inter_edges += 1;
            } else {
                intra_edges += 1;
            }
        }
    }
    let mut group_sizes = [0usize; 2];
    let mut boundary_sizes = [0usize; 2];
    for i in 0..n {
        let g = s[i] as usize;
        group_sizes[g] += 1;
        if inter_degree[i] > 0 {
            boundary_sizes[g] += 1;
        }
    }
    let degree = inter_degree
        .iter()
        .zip(&intra_degree)
        .map(|(a, b)| a + b)
        .collect();
    DegreeStats {
        degree,
        inter_degree,
        intra_degree,
        group_sizes,
        boundary_sizes,
        inter_edges,
        intra_edges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::graph;

    #[test]
    fn intra_only() {
        let st = degree_stats(&graph(4, &[(0, 1), (2, 3)], &[0, 0, 1, 1]));
        assert_eq!((st.intra_edges, st.inter_edges), (2, 0));
        assert_eq!(st.boundary_sizes, [0, 0]);
        assert_eq!(st.group_sizes, [2, 2]);
    }

    #[test]
    fn inter_only() {
        let st = degree_stats(&graph(4, &[(0, 2), (1, 3)], &[0, 0, 1, 1]));
        assert_eq!((st.intra_edges, st.inter_edges), (0, 2));
        assert_eq!(st.boundary_sizes, [2, 2]);
        assert_eq!(st.inter_degree, vec![1, 1, 1, 1]);
    }

    #[test]
    fn degree_splits_add_up() {
        let g = graph(5, &[(0, 1), (0, 2), (1, 3), (3, 4), (2, 4)], &[0, 0, 1, 1, 0]);
        let st = degree_stats(&g);
        for i in 0..5 {
            assert_eq!(st.degree[i], st.inter_degree[i] + st.intra_degree[i]);
        }
        assert_eq!(st.total_edges(), g.n_edges());
        assert_eq!(st.boundary_ratio(0), Some(1.0));
    }
}
