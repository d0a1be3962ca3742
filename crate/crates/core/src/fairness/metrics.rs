use nalgebra::{DMatrix, DVector};

use super::correlation::{group_sizes, pearson_correlations};
use crate::error::{Error, Result};
use crate::model::LossSpec;

/// Statistical parity and equal opportunity gaps over the masked nodes.
/// Group `s = 0` plays the role usually written `s = −1`.
pub fn fairness_metrics(
    predictions: &[u8],
    labels: &[u8],
    s: &[u8],
    mask: &[bool],
) -> Result<(f64, f64)> {
    let n = predictions.len();
    for (what, len) in [("labels", labels.len()), ("sensitive", s.len()), ("mask", mask.len())] {
        if len != n {
            return Err(Error::DimensionMismatch {
                what,
                expected: n,
                actual: len,
            });
        }
    }
    // [group] -> (positives, count) overall and among y = 1
    let mut all = [(0usize, 0usize); 2];
    let mut pos = [(0usize, 0usize); 2];
    for i in (0..n).filter(|&i| mask[i]) {
        let g = s[i] as usize;
        let hit = usize::from(predictions[i] == 1);
        all[g].0 += hit;
        all[g].1 += 1;
        if labels[i] == 1 {
            pos[g].0 += hit;
            pos[g].1 += 1;
        }
    }
    if all[0].1 == 0 || all[1].1 == 0 {
        return Err(Error::EmptyGroup("a sensitive group has no evaluated nodes"));
    }
    if pos[0].1 == 0 || pos[1].1 == 0 {
        return Err(Error::EmptyGroup("a sensitive group has no positive-label nodes"));
    }
    let rate = |(h, c): (usize, usize)| h as f64 / c as f64;
    let sp = (rate(all[0]) - rate(all[1])).abs();
    let eo = (rate(pos[0]) - rate(pos[1])).abs();
    Ok((sp, eo))
}

/// `‖(I − 11ᵀ/N) s‖`.
pub fn centered_sensitive_norm(s: &[u8]) -> f64 {
    let mean = s.iter().map(|&v| v as f64).sum::<f64>() / s.len() as f64;
    s.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>().sqrt()
}

/// Raw statistical parity of pre-threshold scores and its correlation bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawParity {
    pub raw_sp: f64,
    pub bound: f64,
    pub rho_norm: f64,
}

/// Absolute difference of mean scores `x_iᵀw` between groups, and the bound
/// `c N^{3/2} s̄ σ ‖ρ‖ / (|S₀||S₁| λ)` with `ρ` computed on the same matrix.
pub fn raw_sp_and_bound(
    matrix: &DMatrix<f64>,
    weights: &DVector<f64>,
    s: &[u8],
    lambda: f64,
    loss: &LossSpec,
    sigma: f64,
) -> Result<RawParity> {
    if weights.len() != matrix.ncols() {
        return Err(Error::DimensionMismatch {
            what: "weight dimension vs matrix width",
            expected: matrix.ncols(),
            actual: weights.len(),
        });
    }
    let sizes = group_sizes(s);
    if sizes[0] == 0 || sizes[1] == 0 {
        return Err(Error::EmptyGroup("raw statistical parity needs both groups"));
    }
    let rho = pearson_correlations(matrix, s)?;
    let scores = matrix * weights;
    let mut sums = [0.0f64; 2];
    for (&v, &g) in scores.iter().zip(s) {
        sums[g as usize] += v;
    }
    let raw_sp = (sums[0] / sizes[0] as f64 - sums[1] / sizes[1] as f64).abs();
    let n = s.len() as f64;
    let rho_norm = rho.norm();
    let bound = loss.c * n.powf(1.5) * centered_sensitive_norm(s) * sigma * rho_norm
        / (sizes[0] as f64 * sizes[1] as f64 * lambda);
    Ok(RawParity {
        raw_sp,
        bound,
        rho_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_predictions_have_no_parity_gap() {
        let s = [0, 0, 1, 1];
        let y = [1, 0, 1, 0];
        let (sp, _) = fairness_metrics(&[1; 4], &y, &s, &[true; 4]).unwrap();
        assert_eq!(sp, 0.0);
    }

    #[test]
    fn predictions_equal_to_s_are_maximally_unfair() {
        let s = [0, 0, 1, 1];
        let y = [1, 1, 1, 1];
        let (sp, eo) = fairness_metrics(&s, &y, &s, &[true; 4]).unwrap();
        assert_eq!((sp, eo), (1.0, 1.0));
    }

    #[test]
    fn eight_node_fixture() {
        // group 0: 3 of 4 predicted positive; group 1: 1 of 4.
        let s = [0, 0, 0, 0, 1, 1, 1, 1];
        let pred = [1, 1, 1, 0, 1, 0, 0, 0];
        let y = [1, 0, 1, 0, 1, 1, 0, 0];
        let (sp, eo) = fairness_metrics(&pred, &y, &s, &[true; 8]).unwrap();
        assert_eq!(sp, 0.5);
        // positives: group 0 nodes {0, 2} both predicted 1; group 1 nodes {4, 5}: one.
        assert_eq!(eo, 0.5);
    }

    #[test]
    fn empty_groups_rejected() {
        let s = [0, 0, 1, 1];
        let mask = [true, true, false, false];
        assert!(fairness_metrics(&[1; 4], &[1; 4], &s, &mask).is_err());
        assert!(fairness_metrics(&[1; 4], &[1, 1, 0, 0], &s, &[true; 4]).is_err());
    }

    #[test]
    fn zero_weights_have_zero_raw_parity() {
        let x = DMatrix::from_fn(6, 2, |i, j| (i + 2 * j) as f64 * 0.1);
        let s = [0, 1, 0, 1, 1, 0];
        let r = raw_sp_and_bound(&x, &DVector::zeros(2), &s, 1.0, &LossSpec::logistic(), 0.1)
            .unwrap();
        assert_eq!(r.raw_sp, 0.0);
        assert!(r.bound >= 0.0);
    }

    #[test]
    fn balanced_sensitive_norm() {
        let s: Vec<u8> = (0..16).map(|i| (i % 2) as u8).collect();
        assert!((centered_sensitive_norm(&s) - 2.0).abs() < 1e-15); // √16 / 2
    }
}
