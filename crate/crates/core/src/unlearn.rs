//! Certified unlearning by a single Newton step.
//!
//! Given a model `w*` trained on `D` and an edited dataset `D̃`, the update is
//!
//! ```text
//! Δ  = ∇L(w*; D) − ∇L(w*; D̃)
//! w̃  = w* + H⁻¹ Δ,    H = ∇²L(w*; D̃)
//! ```
//!
//! The data-dependent gradient residual at `w̃` is what certification
//! accounts for: the perturbation `b` drawn at training time must dominate
//! it (noise standard deviation `c₀ ε′ / ε` with `δ = 1.5 e^{−c₀²/2}`).

use std::borrow::Cow;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{
    aggregate, build_propagation, remove_edges, remove_features, remove_nodes, AggregatedFeatures,
    Edge, GraphDataset, Scheme,
};
use crate::model::{
    data_gradient, masked_gradient, masked_hessian, train_with_perturbation, LossSpec, TrainConfig,
    TrainedModel, TrainingSet,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RemovalRequest {
    Features(Vec<usize>),
    Edges(Vec<Edge>),
    Nodes(Vec<usize>),
}

impl RemovalRequest {
    pub fn kind(&self) -> &'static str {
        match self {
            RemovalRequest::Features(_) => "feature",
            RemovalRequest::Edges(_) => "edge",
            RemovalRequest::Nodes(_) => "node",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            RemovalRequest::Features(v) | RemovalRequest::Nodes(v) => v.len(),
            RemovalRequest::Edges(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Produces the edited dataset.
    pub fn apply(&self, dataset: &GraphDataset) -> Result<GraphDataset> {
        if self.is_empty() {
            return Err(Error::EmptyRequest);
        }
        match self {
            RemovalRequest::Features(cols) => remove_features(dataset, cols),
            RemovalRequest::Edges(edges) => remove_edges(dataset, edges),
            RemovalRequest::Nodes(nodes) => remove_nodes(dataset, nodes),
        }
    }

    /// Edited dataset plus its aggregation. Feature removals zero the
    /// affected aggregated columns directly; structural removals rebuild
    /// the propagation operator.
    pub fn apply_aggregated(
        &self,
        dataset: &GraphDataset,
        aggregated: &AggregatedFeatures,
    ) -> Result<(GraphDataset, AggregatedFeatures)> {
        let edited = self.apply(dataset)?;
        let z = match self {
            RemovalRequest::Features(cols) => aggregated.zero_features(cols)?,
            _ => aggregate(
                &edited,
                &build_propagation(&edited, aggregated.hops()),
                aggregated.scheme(),
            )?,
        };
        Ok((edited, z))
    }
}

/// Privacy parameters and the running gradient-residual account of a
/// sequence of unlearning steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificationBudget {
    pub epsilon: f64,
    pub delta: f64,
    pub c0: f64,
    /// Residual allowance the training noise was calibrated for.
    pub epsilon_prime: f64,
    pub accumulated_residual: f64,
}

impl CertificationBudget {
    pub fn new(epsilon: f64, delta: f64, epsilon_prime: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {epsilon}")));
        }
        if !(epsilon_prime >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon' must be >= 0, got {epsilon_prime}"
            )));
        }
        Ok(Self {
            epsilon,
            delta,
            c0: c0_for_delta(delta)?,
            epsilon_prime,
            accumulated_residual: 0.0,
        })
    }

    pub fn certified(&self) -> bool {
        self.accumulated_residual <= self.epsilon_prime
    }

    pub fn record(&mut self, residual: f64) {
        debug_assert!(residual >= 0.0);
        self.accumulated_residual += residual;
    }
}

/// Solves `δ = 1.5 e^{−c₀²/2}` for `c₀`.
pub fn c0_for_delta(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.5) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1.5), got {delta}")));
    }
    Ok((2.0 * (1.5 / delta).ln()).sqrt())
}

/// Standard deviation of the objective perturbation `b`: `c₀ ε′ / ε`.
pub fn calibrate_noise(budget: &CertificationBudget) -> f64 {
    if budget.epsilon.is_infinite() {
        return 0.0;
    }
    budget.c0 * budget.epsilon_prime / budget.epsilon
}

/// Worst-case gradient residual after zeroing `k` of `F` features with `m`
/// training nodes:
///
/// ```text
/// γ₂/m · [ (2c√F + c₁√((F−k)m)) / (λ√F) ]²
/// ```
///
/// The same bound covers SGC and GPR aggregation.
pub fn worstcase_bound_feature(
    n_features: usize,
    k: usize,
    m: usize,
    loss: &LossSpec,
    lambda: f64,
) -> Result<f64> {
    if k > n_features {
        return Err(Error::BudgetOutOfRange { k, max: n_features });
    }
    if m == 0 || n_features == 0 {
        return Err(Error::InvalidParameter("need m >= 1 and F >= 1".into()));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be > 0, got {lambda}")));
    }
    let f = n_features as f64;
    let inner = (2.0 * loss.c * f.sqrt() + loss.c1 * ((n_features - k) as f64 * m as f64).sqrt())
        / (lambda * f.sqrt());
    Ok(loss.gamma2 / m as f64 * inner * inner)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnlearnResult {
    pub updated_weights: DVector<f64>,
    pub delta_vector: DVector<f64>,
    /// `‖∇L_b(w̃; D̃)‖`, the data-dependent residual of the perturbed
    /// objective on the edited training set.
    pub residual_norm: f64,
    pub worstcase_bound: Option<f64>,
    /// Training-set size after the edit.
    pub train_count: usize,
    pub wall_time: Duration,
}

/// Newton update when the training mask is unchanged (feature and edge
/// removals).
pub fn newton_unlearn(
    model: &TrainedModel,
    z: &AggregatedFeatures,
    z_tilde: &AggregatedFeatures,
    labels: &[u8],
    train_mask: &[bool],
) -> Result<UnlearnResult> {
    newton_unlearn_masked(model, z, z_tilde, labels, train_mask, train_mask)
}

/// Newton update allowing the training set to shrink (node removals).
pub fn newton_unlearn_masked(
    model: &TrainedModel,
    z: &AggregatedFeatures,
    z_tilde: &AggregatedFeatures,
    labels: &[u8],
    train_mask: &[bool],
    train_mask_tilde: &[bool],
) -> Result<UnlearnResult> {
    let start = Instant::now();
    let width = model.weights.len();
    for (what, got) in [("Z width", z.width()), ("Z̃ width", z_tilde.width())] {
        if got != width {
            return Err(Error::DimensionMismatch {
                what,
                expected: width,
                actual: got,
            });
        }
    }
    if z.n_rows() != z_tilde.n_rows() {
        return Err(Error::DimensionMismatch {
            what: "row count of Z̃",
            expected: z.n_rows(),
            actual: z_tilde.n_rows(),
        });
    }
    if labels.len() != z.n_rows() || train_mask.len() != z.n_rows() || train_mask_tilde.len() != z.n_rows() {
        return Err(Error::DimensionMismatch {
            what: "labels or masks vs rows of Z",
            expected: z.n_rows(),
            actual: labels.len().min(train_mask.len()).min(train_mask_tilde.len()),
        });
    }
    let train_count = train_mask_tilde.iter().filter(|&&b| b).count();
    if train_count == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    let w = &model.weights;
    let lambda = model.lambda;

    let delta = masked_gradient(w, z.values(), labels, train_mask, lambda)
        - masked_gradient(w, z_tilde.values(), labels, train_mask_tilde, lambda);
    let h = masked_hessian(w, z_tilde.values(), train_mask_tilde, lambda);
    let step = solve_spd(h, &delta)?;
    let updated = w + step;
    let residual_norm =
        (masked_gradient(&updated, z_tilde.values(), labels, train_mask_tilde, lambda) + &model.perturbation).norm();

    Ok(UnlearnResult {
        updated_weights: updated,
        delta_vector: delta,
        residual_norm,
        worstcase_bound: None,
        train_count,
        wall_time: start.elapsed(),
    })
}

fn solve_spd(h: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = h.cholesky().ok_or(Error::Factorization)?;
    Ok(chol.solve(rhs))
}

/// `‖∇L(w; D̃) + b‖` over the given training rows.
pub fn residual(weights: &DVector<f64>, set: &TrainingSet, lambda: f64, b: &DVector<f64>) -> f64 {
    (data_gradient(weights, &set.rows, &set.labels, lambda) + b).norm()
}

/// Result of a sequence of unlearning steps.
#[derive(Debug, Clone)]
pub struct SequentialOutcome {
    pub steps: Vec<UnlearnResult>,
    pub budget: CertificationBudget,
    /// Model carrying the final weights (perturbation unchanged).
    pub model: TrainedModel,
    pub dataset: GraphDataset,
    pub aggregated: AggregatedFeatures,
}

/// Applies `requests` in order, each Newton step starting from the previous
/// step's weights, and accumulates residuals in `budget`. Processing
/// continues after the budget is exceeded; the flag reports it.
pub fn sequential_unlearn(
    model: &TrainedModel,
    dataset: &GraphDataset,
    aggregated: &AggregatedFeatures,
    requests: &[RemovalRequest],
    mut budget: CertificationBudget,
) -> Result<SequentialOutcome> {
    let mut current_model = model.clone();
    let mut current = Cow::Borrowed(dataset);
    let mut z = Cow::Borrowed(aggregated);
    let mut steps = Vec::with_capacity(requests.len());
    let mut removed_features = 0usize;
    for request in requests {
        let started = Instant::now();
        let (edited, z_tilde) = request.apply_aggregated(&current, &z)?;
        let mut result = newton_unlearn_masked(
            &current_model,
            &z,
            &z_tilde,
            current.labels(),
            current.train_mask(),
            edited.train_mask(),
        )?;
        result.wall_time = started.elapsed();
        if let RemovalRequest::Features(cols) = request {
            removed_features += cols.len();
            result.worstcase_bound = Some(worstcase_bound_feature(
                aggregated.n_features(),
                removed_features.min(aggregated.n_features()),
                result.train_count,
                &model.loss_spec,
                model.lambda,
            )?);
        }
        budget.record(result.residual_norm);
        if !budget.certified() {
            log::warn!(
                "accumulated residual {:.3e} exceeds epsilon' {:.3e}",
                budget.accumulated_residual,
                budget.epsilon_prime
            );
        }
        current_model.weights = result.updated_weights.clone();
        steps.push(result);
        current = Cow::Owned(edited);
        z = Cow::Owned(z_tilde);
    }
    Ok(SequentialOutcome {
        steps,
        budget,
        model: current_model,
        dataset: current.into_owned(),
        aggregated: z.into_owned(),
    })
}

/// Retrains from scratch on the edited dataset with a fixed perturbation:
/// rebuilds propagation and aggregation, then minimizes `L_b`.
pub fn retrain_oracle(
    dataset: &GraphDataset,
    scheme: Scheme,
    hops: usize,
    config: &TrainConfig,
    fixed_b: &DVector<f64>,
) -> Result<(TrainedModel, AggregatedFeatures)> {
    let z = aggregate(dataset, &build_propagation(dataset, hops), scheme)?;
    let set = TrainingSet::from_dataset(dataset, &z);
    let model = train_with_perturbation(&set, config, fixed_b.clone())?;
    Ok((model, z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::train;
    use crate::synthetic::{generate, SyntheticSpec};

    fn setup(scheme: Scheme) -> (GraphDataset, AggregatedFeatures, TrainedModel, TrainConfig) {
        let g = generate(&SyntheticSpec::default()).unwrap();
        let z = aggregate(&g, &build_propagation(&g, 2), scheme).unwrap();
        let cfg = TrainConfig::default();
        let model = train(&g, &z, &cfg, 0.0).unwrap();
        (g, z, model, cfg)
    }

    #[test]
    fn identical_data_leaves_weights_unchanged() {
        let (g, z, model, cfg) = setup(Scheme::Sgc);
        let r = newton_unlearn(&model, &z, &z, g.labels(), g.train_mask()).unwrap();
        assert_eq!(r.delta_vector.norm(), 0.0);
        assert_eq!(r.updated_weights, model.weights);
        assert!(r.residual_norm <= cfg.tolerance);
    }

    #[test]
    fn zero_column_removal_is_a_no_op() {
        let (g, _, _, cfg) = setup(Scheme::Sgc);
        let mut x = g.features().clone();
        x.column_mut(3).fill(0.0);
        let g = g.with_features(x).unwrap();
        let z = aggregate(&g, &build_propagation(&g, 2), Scheme::Sgc).unwrap();
        let model = train(&g, &z, &cfg, 0.0).unwrap();
        let z_tilde = z.zero_features(&[3]).unwrap();
        let r = newton_unlearn(&model, &z, &z_tilde, g.labels(), g.train_mask()).unwrap();
        assert_eq!(r.delta_vector.norm(), 0.0);
        assert_eq!(r.updated_weights, model.weights);
    }

    #[test]
    fn feature_removal_tracks_retraining() {
        for scheme in [Scheme::Sgc, Scheme::Gpr] {
            let (g, z, model, cfg) = setup(scheme);
            let request = RemovalRequest::Features(vec![0, 1]);
            let (g2, z2) = request.apply_aggregated(&g, &z).unwrap();
            let r = newton_unlearn(&model, &z, &z2, g.labels(), g.train_mask()).unwrap();
            let (oracle, _) = retrain_oracle(&g2, scheme, 2, &cfg, &model.perturbation).unwrap();
            let gap = (&r.updated_weights - &oracle.weights).norm();
            assert!(gap <= 1e-3, "{scheme:?}: gap {gap}");
            let bound = worstcase_bound_feature(10, 2, g.train_count(), &LossSpec::logistic(), 10.0)
                .unwrap();
            assert!(r.residual_norm <= bound, "{} > {bound}", r.residual_norm);
            // Removed coordinates are driven to zero.
            assert!(r.updated_weights[0].abs() < 1e-9);
        }
    }

    #[test]
    fn node_removal_shrinks_training_count() {
        let (g, z, model, cfg) = setup(Scheme::Sgc);
        let victims: Vec<usize> = g.train_indices().into_iter().take(5).collect();
        let request = RemovalRequest::Nodes(victims);
        let (g2, z2) = request.apply_aggregated(&g, &z).unwrap();
        let r = newton_unlearn_masked(&model, &z, &z2, g.labels(), g.train_mask(), g2.train_mask())
            .unwrap();
        assert_eq!(r.train_count, g.train_count() - 5);
        let (oracle, _) = retrain_oracle(&g2, Scheme::Sgc, 2, &cfg, &model.perturbation).unwrap();
        let gap = (&r.updated_weights - &oracle.weights).norm();
        let lm = cfg.lambda * r.train_count as f64;
        assert!(gap <= r.residual_norm / lm + 2.0 * cfg.tolerance, "gap {gap}");
    }

    #[test]
    fn noise_calibration() {
        let b = CertificationBudget::new(1.0, 1e-4, 2.42e-3).unwrap();
        assert!((b.c0 - 4.3854).abs() < 1e-4);
        assert!((calibrate_noise(&b) - 1.061e-2).abs() < 1e-5);
        let inf = CertificationBudget::new(f64::INFINITY, 1e-4, 1.0).unwrap();
        assert_eq!(calibrate_noise(&inf), 0.0);
        assert!(c0_for_delta(1.5).is_err());
        assert!(CertificationBudget::new(0.0, 1e-4, 1.0).is_err());
    }

    #[test]
    fn bound_closed_forms() {
        let loss = LossSpec::logistic();
        let full = worstcase_bound_feature(27, 27, 600, &loss, 10.0).unwrap();
        assert!((full - 0.25 / 600.0 * (2.0f64 / 10.0).powi(2)).abs() < 1e-18);
        let b = worstcase_bound_feature(27, 5, 600, &loss, 10.0).unwrap();
        assert!((b - 2.4223e-3).abs() < 1e-6, "{b}");
        assert!(worstcase_bound_feature(3, 4, 10, &loss, 1.0).is_err());
    }

    #[test]
    fn empty_request_rejected() {
        let (g, _, _, _) = setup(Scheme::Sgc);
        assert!(matches!(RemovalRequest::Edges(vec![]).apply(&g), Err(Error::EmptyRequest)));
    }

    #[test]
    fn sequential_single_step_matches_direct_call() {
        let (g, z, model, _) = setup(Scheme::Sgc);
        let request = RemovalRequest::Edges(g.edges().into_iter().take(10).collect());
        let budget = CertificationBudget::new(1.0, 1e-4, 1.0).unwrap();
        let out = sequential_unlearn(&model, &g, &z, std::slice::from_ref(&request), budget).unwrap();
        let (_, z2) = request.apply_aggregated(&g, &z).unwrap();
        let direct = newton_unlearn(&model, &z, &z2, g.labels(), g.train_mask()).unwrap();
        assert_eq!(out.steps[0].updated_weights, direct.updated_weights);
        assert_eq!(out.budget.accumulated_residual, direct.residual_norm);
        assert_eq!(out.model.weights, direct.updated_weights);
    }
}
