use crate::error::{Error, Result};
use crate::graph::{degree_stats, DegreeStats, Edge, GraphDataset};

/// `b_e(i, j) = 1{s_i = s_j} / min(d_i, d_j)`; inter-edges score zero.
pub fn edge_bias_score(edge: Edge, s: &[u8], stats: &DegreeStats) -> f64 {
    let (i, j) = edge;
    if s[i] != s[j] {
        return 0.0;
    }
    let d = stats.degree[i].min(stats.degree[j]);
    if d == 0 {
        0.0
    } else {
        1.0 / d as f64
    }
}

/// `b_n(i) = d_i^ω / (1 + d_i^χ) · 1 / d_i`; isolated nodes score zero.
pub fn node_bias_score(node: usize, stats: &DegreeStats) -> f64 {
    let d = stats.degree[node];
    if d == 0 {
        return 0.0;
    }
    intra_inter_ratio(node, stats) / d as f64
}

/// The bias component `d_i^ω / (1 + d_i^χ)` alone.
pub fn intra_inter_ratio(node: usize, stats: &DegreeStats) -> f64 {
    stats.intra_degree[node] as f64 / (1.0 + stats.inter_degree[node] as f64)
}

/// Structural bias diagnostics `(α₁, α₂)`.
///
/// `α₁ = |1 − |S₀^χ|/|S₀| − |S₁^χ|/|S₁||` and
/// `α₂ = |1 − 2 min_g mean_{v ∈ S_g} d_v^χ / d_v|`, where nodes without
/// edges are left out of the group means.
pub fn alpha_diagnostics(dataset: &GraphDataset) -> Result<(f64, f64)> {
    alpha_from_stats(&degree_stats(dataset), dataset.sensitive())
}

pub fn alpha_from_stats(stats: &DegreeStats, s: &[u8]) -> Result<(f64, f64)> {
    let ratio = |g: usize| stats.boundary_ratio(g).ok_or(Error::EmptyGroup("alpha needs both groups"));
    let alpha1 = (1.0 - ratio(0)? - ratio(1)?).abs();

    let mut sums = [0.0f64; 2];
    let mut counts = [0usize; 2];
    for (i, &g) in s.iter().enumerate() {
        let d = stats.degree[i];
        if d > 0 {
            sums[g as usize] += stats.inter_degree[i] as f64 / d as f64;
            counts[g as usize] += 1;
        }
    }
    if counts.contains(&0) {
        return Err(Error::EmptyGroup("a sensitive group has only isolated nodes"));
    }
    let mean0 = sums[0] / counts[0] as f64;
    let mean1 = sums[1] / counts[1] as f64;
    Ok((alpha1, (1.0 - 2.0 * mean0.min(mean1)).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::graph;

    #[test]
    fn edge_scores() {
        // Node 0 has degree 3 and node 1 degree 5 via extra neighbours.
        let edges = [(0, 1), (0, 2), (0, 3), (1, 4), (1, 5), (1, 6), (1, 7), (8, 9)];
        let s = [0, 0, 0, 0, 0, 0, 0, 0, 0, 1];
        let g = graph(10, &edges, &s);
        let st = degree_stats(&g);
        assert_eq!((st.degree[0], st.degree[1]), (3, 5));
        assert_eq!(edge_bias_score((0, 1), &s, &st), 1.0 / 3.0);
        assert_eq!(edge_bias_score((8, 9), &s, &st), 0.0);
        // Intra-edge at a degree-1 endpoint reaches the maximum.
        assert_eq!(edge_bias_score((1, 4), &s, &st), 1.0);
    }

    #[test]
    fn node_scores() {
        // Node 0: four intra neighbours (1..=4), one inter neighbour (5).
        let s = [0, 0, 0, 0, 0, 1, 1];
        let g = graph(7, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (5, 6)], &s);
        let st = degree_stats(&g);
        assert!((node_bias_score(0, &st) - 0.4).abs() < 1e-15);
        assert_eq!(intra_inter_ratio(0, &st), 2.0);
        assert_eq!(node_bias_score(1, &st), 1.0);
        // Node 5 has one inter (to 0) and one intra (to 6): 1/2 · 1/2.
        assert_eq!(node_bias_score(5, &st), 0.25);
        let only_inter = graph(2, &[(0, 1)], &[0, 1]);
        assert_eq!(node_bias_score(0, &degree_stats(&only_inter)), 0.0);
        let isolated = graph(2, &[], &[0, 1]);
        assert_eq!(node_bias_score(0, &degree_stats(&isolated)), 0.0);
    }

    #[test]
    fn alpha_fixtures() {
        let s = [0, 0, 1, 1];
        let (a1, a2) = alpha_diagnostics(&graph(4, &[(0, 1), (2, 3), (0, 2)], &s)).unwrap();
        assert_eq!(a1, 0.0);
        // ratios: node0 1/2, node1 0 -> mean 1/4; node2 1/2, node3 0 -> 1/4.
        assert_eq!(a2, 0.5);

        let (a1, a2) = alpha_diagnostics(&graph(4, &[(0, 2), (1, 3), (0, 3)], &s)).unwrap();
        assert_eq!((a1, a2), (1.0, 1.0));

        let (a1, a2) = alpha_diagnostics(&graph(4, &[(0, 1), (2, 3)], &s)).unwrap();
        assert_eq!((a1, a2), (1.0, 1.0));
    }

    #[test]
    fn isolated_group_is_an_error() {
        let g = graph(4, &[(0, 1)], &[0, 0, 1, 1]);
        assert!(matches!(alpha_diagnostics(&g), Err(Error::EmptyGroup(_))));
    }
}
