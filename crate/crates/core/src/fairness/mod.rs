//! Bias measures and fairness-aware selection of features, edges and nodes.

mod correlation;
mod metrics;
mod selection;
mod structural;

pub use correlation::{pearson_correlations, pooled_std, CorrelationVector};
pub use metrics::{centered_sensitive_norm, fairness_metrics, raw_sp_and_bound, RawParity};
pub use selection::{
    ablation_variants, select_edges, select_edges_with, select_features, select_features_with,
    select_nodes, select_nodes_with, top_k, NodeScope, SelectionKind, SelectionResult,
    SelectionRule,
};
pub use structural::{
    alpha_diagnostics, alpha_from_stats, edge_bias_score, intra_inter_ratio, node_bias_score,
};
