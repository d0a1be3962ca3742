//! L2-regularized logistic regression on aggregated node features.
//!
//! The objective follows the per-sample regularization convention
//!
//! ```text
//! L_b(w) = Σ_{i ∈ V_tr} [ ℓ(z_iᵀw, y_i) + λ/2 ‖w‖² ] + bᵀw
//! ```
//!
//! so the regularizer contributes `λ m w` to the gradient and the objective
//! is `λ m`-strongly convex. `ℓ(u, y) = log(1 + eᵘ) − y u` with `y ∈ {0, 1}`.

pub mod lbfgs;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::graph::{mask_indices, AggregatedFeatures, GraphDataset};
use lbfgs::LbfgsOptions;

/// Regularity constants of the loss: gradient-norm bound `c`, first
/// derivative bound `c1` and Lipschitz constant `gamma2` of the second
/// derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    pub c: f64,
    pub c1: f64,
    pub gamma2: f64,
}

impl LossSpec {
    pub const fn logistic() -> Self {
        Self {
            c: 1.0,
            c1: 1.0,
            gamma2: 0.25,
        }
    }
}

impl Default for LossSpec {
    fn default() -> Self {
        Self::logistic()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub lambda: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Seed for the perturbation vector `b`.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 10.0,
            tolerance: 1e-8,
            max_iterations: 500,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be > 0, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub weights: DVector<f64>,
    pub lambda: f64,
    pub perturbation: DVector<f64>,
    /// Gradient norm of the perturbed objective at `weights`.
    pub optimizer_residual: f64,
    pub iterations: usize,
    pub loss_spec: LossSpec,
}

/// Training rows of `Z` with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub rows: DMatrix<f64>,
    pub labels: Vec<u8>,
}

impl TrainingSet {
    pub fn from_mask(z: &DMatrix<f64>, labels: &[u8], mask: &[bool]) -> Self {
        let idx = mask_indices(mask);
        Self {
            rows: z.select_rows(idx.iter()),
            labels: idx.iter().map(|&i| labels[i]).collect(),
        }
    }

    pub fn from_dataset(dataset: &GraphDataset, z: &AggregatedFeatures) -> Self {
        Self::from_mask(z.values(), dataset.labels(), dataset.train_mask())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn width(&self) -> usize {
        self.rows.ncols()
    }
}

pub(crate) fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

fn check_inputs(weights: &DVector<f64>, rows: &DMatrix<f64>, labels: &[u8]) -> Result<()> {
    if weights.len() != rows.ncols() {
        return Err(Error::DimensionMismatch {
            what: "weight dimension vs feature width",
            expected: rows.ncols(),
            actual: weights.len(),
        });
    }
    if labels.len() != rows.nrows() {
        return Err(Error::DimensionMismatch {
            what: "label count vs rows",
            expected: rows.nrows(),
            actual: labels.len(),
        });
    }
    if let Some(index) = labels.iter().position(|&y| y > 1) {
        return Err(Error::NonBinary {
            what: "label",
            index,
            value: labels[index] as f64,
        });
    }
    Ok(())
}

/// `ℓ'(z_iᵀw, y_i) = σ(z_iᵀw) − y_i` for every row.
pub fn first_derivatives(weights: &DVector<f64>, rows: &DMatrix<f64>, labels: &[u8]) -> DVector<f64> {
    let scores = rows * weights;
    DVector::from_iterator(
        labels.len(),
        scores.iter().zip(labels).map(|(&u, &y)| sigmoid(u) - y as f64),
    )
}

/// Gradient of the unperturbed objective with an explicit sample count in
/// the regularizer.
pub(crate) fn data_gradient(
    weights: &DVector<f64>,
    rows: &DMatrix<f64>,
    labels: &[u8],
    lambda: f64,
) -> DVector<f64> {
    let d = first_derivatives(weights, rows, labels);
    let mut grad = rows.tr_mul(&d);
    grad.axpy(lambda * labels.len() as f64, weights, 1.0);
    grad
}

/// [`data_gradient`] over the rows of `z` flagged in `mask`, without
/// copying them out.
pub(crate) fn masked_gradient(
    weights: &DVector<f64>,
    z: &DMatrix<f64>,
    labels: &[u8],
    mask: &[bool],
    lambda: f64,
) -> DVector<f64> {
    let scores = column_scores(z, weights);
    let mut m = 0usize;
    let d: Vec<f64> = (0..z.nrows())
        .map(|i| {
            if mask[i] {
                m += 1;
                sigmoid(scores[i]) - labels[i] as f64
            } else {
                0.0
            }
        })
        .collect();
    DVector::from_iterator(
        z.ncols(),
        (0..z.ncols()).map(|c| dot(z.column(c).as_slice(), &d) + lambda * m as f64 * weights[c]),
    )
}

fn column_scores(z: &DMatrix<f64>, weights: &DVector<f64>) -> Vec<f64> {
    let mut scores = vec![0.0; z.nrows()];
    for (c, &w) in weights.iter().enumerate() {
        if w != 0.0 {
            for (s, v) in scores.iter_mut().zip(z.column(c).as_slice()) {
                *s += w * v;
            }
        }
    }
    scores
}

/// Hessian over the masked rows of `z`. Columns that vanish on every such
/// row contribute only the `λm` diagonal, so the product is formed over the
/// remaining columns.
pub(crate) fn masked_hessian(
    weights: &DVector<f64>,
    z: &DMatrix<f64>,
    mask: &[bool],
    lambda: f64,
) -> DMatrix<f64> {
    let rows = mask_indices(mask);
    let m = rows.len();
    let scores = column_scores(z, weights);
    let roots: Vec<f64> = rows
        .iter()
        .map(|&i| {
            let p = sigmoid(scores[i]);
            (p * (1.0 - p)).sqrt()
        })
        .collect();
    let mut active = Vec::new();
    let mut compact: Vec<Vec<f64>> = Vec::new();
    for c in 0..z.ncols() {
        let src = z.column(c);
        let src = src.as_slice();
        if rows.iter().all(|&i| src[i] == 0.0) {
            continue;
        }
        active.push(c);
        compact.push(rows.iter().zip(&roots).map(|(&i, r)| src[i] * r).collect());
    }
    let n = active.len();
    let mut block = vec![0.0; n * n];
    for start in (0..m).step_by(512) {
        let end = (start + 512).min(m);
        for a in 0..n {
            let ca = &compact[a][start..end];
            for b in a..n {
                block[a * n + b] += dot(ca, &compact[b][start..end]);
            }
        }
    }
    let mut h = DMatrix::from_diagonal_element(z.ncols(), z.ncols(), lambda * m as f64);
    for (a, &i) in active.iter().enumerate() {
        for (b, &j) in active.iter().enumerate().skip(a) {
            let v = block[a * n + b];
            h[(i, j)] += v;
            if i != j {
                h[(j, i)] += v;
            }
        }
    }
    h
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (xc, yc) = (x.chunks_exact(4), y.chunks_exact(4));
    let tail: f64 = xc.remainder().iter().zip(yc.remainder()).map(|(a, b)| a * b).sum();
    for (a, b) in xc.zip(yc) {
        for k in 0..4 {
            acc[k] += a[k] * b[k];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// Value and gradient of `L_b` over the given training rows.
pub fn loss_and_gradient(
    weights: &DVector<f64>,
    rows: &DMatrix<f64>,
    labels: &[u8],
    lambda: f64,
    perturbation: Option<&DVector<f64>>,
) -> Result<(f64, DVector<f64>)> {
    check_inputs(weights, rows, labels)?;
    if let Some(b) = perturbation {
        if b.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                what: "perturbation dimension",
                expected: weights.len(),
                actual: b.len(),
            });
        }
    }
    Ok(objective(weights, rows, labels, lambda, perturbation))
}

fn objective(
    weights: &DVector<f64>,
    rows: &DMatrix<f64>,
    labels: &[u8],
    lambda: f64,
    perturbation: Option<&DVector<f64>>,
) -> (f64, DVector<f64>) {
    let m = labels.len() as f64;
    let scores = rows * weights;
    let mut loss = 0.0;
    let mut d = DVector::zeros(labels.len());
    for (i, (&u, &y)) in scores.iter().zip(labels).enumerate() {
        let y = y as f64;
        loss += softplus(u) - y * u;
        d[i] = sigmoid(u) - y;
    }
    let mut grad = rows.tr_mul(&d);
    loss += 0.5 * lambda * m * weights.norm_squared();
    grad.axpy(lambda * m, weights, 1.0);
    if let Some(b) = perturbation {
        loss += b.dot(weights);
        grad += b;
    }
    (loss, grad)
}

/// `H = Σ ℓ''(z_iᵀw) z_i z_iᵀ + λ m I`.
pub fn hessian(
    weights: &DVector<f64>,
    rows: &DMatrix<f64>,
    labels: &[u8],
    lambda: f64,
) -> Result<DMatrix<f64>> {
    check_inputs(weights, rows, labels)?;
    Ok(hessian_unchecked(weights, rows, lambda, labels.len()))
}

pub(crate) fn hessian_unchecked(
    weights: &DVector<f64>,
    rows: &DMatrix<f64>,
    lambda: f64,
    m: usize,
) -> DMatrix<f64> {
    let scores = rows * weights;
    let mut scaled = rows.clone();
    for (i, &u) in scores.iter().enumerate() {
        let p = sigmoid(u);
        let root = (p * (1.0 - p)).sqrt();
        scaled.row_mut(i).scale_mut(root);
    }
    let mut h = scaled.tr_mul(&scaled);
    for k in 0..h.nrows() {
        h[(k, k)] += lambda * m as f64;
    }
    h
}

/// Draws `b ~ Normal(0, noise_std² I)` from `seed`.
pub fn draw_perturbation(dim: usize, noise_std: f64, seed: u64) -> Result<DVector<f64>> {
    if !(noise_std >= 0.0) || !noise_std.is_finite() {
        return Err(Error::InvalidParameter(format!("noise_std must be finite and >= 0, got {noise_std}")));
    }
    if noise_std == 0.0 {
        return Ok(DVector::zeros(dim));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_std).expect("validated std");
    Ok(DVector::from_iterator(dim, (0..dim).map(|_| normal.sample(&mut rng))))
}

/// Trains on the dataset's training rows with a freshly drawn perturbation.
pub fn train(
    dataset: &GraphDataset,
    aggregated: &AggregatedFeatures,
    config: &TrainConfig,
    noise_std: f64,
) -> Result<TrainedModel> {
    let set = TrainingSet::from_dataset(dataset, aggregated);
    let b = draw_perturbation(aggregated.width(), noise_std, config.seed)?;
    train_with_perturbation(&set, config, b)
}

/// Minimizes `L_b` for a given `b` with L-BFGS started at zero.
pub fn train_with_perturbation(
    set: &TrainingSet,
    config: &TrainConfig,
    perturbation: DVector<f64>,
) -> Result<TrainedModel> {
    config.validate()?;
    if set.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let width = set.width();
    check_inputs(&DVector::zeros(width), &set.rows, &set.labels)?;
    if perturbation.len() != width {
        return Err(Error::DimensionMismatch {
            what: "perturbation dimension",
            expected: width,
            actual: perturbation.len(),
        });
    }
    let opts = LbfgsOptions {
        tolerance: config.tolerance,
        max_iterations: config.max_iterations,
        ..Default::default()
    };
    let out = lbfgs::minimize(
        |w| objective(w, &set.rows, &set.labels, config.lambda, Some(&perturbation)),
        DVector::zeros(width),
        &opts,
    );
    if !out.converged {
        return Err(Error::NonConvergence {
            iterations: out.iterations,
            residual: out.grad_norm,
        });
    }
    log::debug!(
        "l-bfgs converged in {} iterations, gradient norm {:.3e}",
        out.iterations,
        out.grad_norm
    );
    Ok(TrainedModel {
        weights: out.x,
        lambda: config.lambda,
        perturbation,
        optimizer_residual: out.grad_norm,
        iterations: out.iterations,
        loss_spec: LossSpec::logistic(),
    })
}

/// Scores `Zw` and thresholded labels (`1` iff score > 0).
pub fn predict(model: &TrainedModel, aggregated: &AggregatedFeatures) -> Result<(Vec<u8>, DVector<f64>)> {
    if model.weights.len() != aggregated.width() {
        return Err(Error::DimensionMismatch {
            what: "weight dimension vs feature width",
            expected: aggregated.width(),
            actual: model.weights.len(),
        });
    }
    let scores = aggregated.values() * &model.weights;
    let labels = scores.iter().map(|&s| u8::from(s > 0.0)).collect();
    Ok((labels, scores))
}

/// Fraction of masked nodes whose prediction equals the label.
pub fn accuracy(predictions: &[u8], labels: &[u8], mask: &[bool]) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for ((&p, &y), &m) in predictions.iter().zip(labels).zip(mask) {
        if m {
            total += 1;
            hit += usize::from(p == y);
        }
    }
    if total == 0 {
        f64::NAN
    } else {
        hit as f64 / total as f64
    }
}
