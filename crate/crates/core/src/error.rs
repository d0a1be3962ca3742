use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} (expected {expected}, got {actual})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("{what} must be 0 or 1, found {value} at index {index}")]
    NonBinary {
        what: &'static str,
        index: usize,
        value: f64,
    },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("edge ({0}, {1}) is not present in the graph")]
    EdgeNotFound(usize, usize),
    #[error("node {node} out of range for a graph with {n_nodes} nodes")]
    NodeOutOfRange { node: usize, n_nodes: usize },
    #[error("feature {feature} out of range for {n_features} features")]
    FeatureOutOfRange { feature: usize, n_features: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("optimizer did not converge after {iterations} iterations (gradient norm {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("Hessian factorization failed")]
    Factorization,
    #[error("sensitive attribute has a single group; both groups are required")]
    SingleGroup,
    #[error("conditioning group is empty: {0}")]
    EmptyGroup(&'static str),
    #[error("budget k = {k} outside the valid range 1..={max}")]
    BudgetOutOfRange { k: usize, max: usize },
    #[error("empty removal request")]
    EmptyRequest,
    #[error("unknown selection rule '{0}'")]
    UnknownRule(String),
    #[error("selection rule '{rule}' does not apply to {target}")]
    UnsupportedRule { rule: &'static str, target: &'static str },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
