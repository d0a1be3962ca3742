use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Per-column Pearson correlation with the sensitive attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationVector {
    pub rho: Vec<f64>,
}

impl CorrelationVector {
    pub fn norm(&self) -> f64 {
        self.rho.iter().map(|r| r * r).sum::<f64>().sqrt()
    }
}

pub(crate) fn group_sizes(s: &[u8]) -> [usize; 2] {
    let ones = s.iter().filter(|&&v| v == 1).count();
    [s.len() - ones, ones]
}

/// Zero-variance columns get `ρ = 0`.
pub fn pearson_correlations(columns: &DMatrix<f64>, s: &[u8]) -> Result<CorrelationVector> {
    let n = columns.nrows();
    if s.len() != n {
        return Err(Error::DimensionMismatch {
            what: "sensitive vector length",
            expected: n,
            actual: s.len(),
        });
    }
    let sizes = group_sizes(s);
    if sizes[0] == 0 || sizes[1] == 0 {
        return Err(Error::SingleGroup);
    }
    let s_mean = sizes[1] as f64 / n as f64;
    let s_centered: Vec<f64> = s.iter().map(|&v| v as f64 - s_mean).collect();
    let s_ss: f64 = s_centered.iter().map(|v| v * v).sum();

    let rho = columns
        .column_iter()
        .map(|col| {
            let mean = col.mean();
            let (mut cross, mut ss) = (0.0, 0.0);
            for (x, sc) in col.iter().zip(&s_centered) {
                let d = x - mean;
                cross += d * sc;
                ss += d * d;
            }
            if ss <= f64::MIN_POSITIVE {
                0.0
            } else {
                (cross / (ss.sqrt() * s_ss.sqrt())).clamp(-1.0, 1.0)
            }
        })
        .collect();
    Ok(CorrelationVector { rho })
}

/// Square root of the mean per-column sample variance.
pub fn pooled_std(columns: &DMatrix<f64>) -> f64 {
    let n = columns.nrows();
    if n < 2 || columns.ncols() == 0 {
        return 0.0;
    }
    let total: f64 = columns.column_iter().map(|c| c.variance() * n as f64 / (n - 1) as f64).sum();
    (total / columns.ncols() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_constant_columns() {
        let s = [0u8, 1, 1, 0, 1];
        let x = DMatrix::from_fn(5, 3, |i, j| match j {
            0 => s[i] as f64,
            1 => 1.0 - s[i] as f64,
            _ => 7.0,
        });
        let rho = pearson_correlations(&x, &s).unwrap();
        assert!((rho.rho[0] - 1.0).abs() < 1e-15);
        assert!((rho.rho[1] + 1.0).abs() < 1e-15);
        assert_eq!(rho.rho[2], 0.0);
        assert!((rho.norm() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_group_is_an_error() {
        let x = DMatrix::zeros(3, 1);
        assert!(matches!(pearson_correlations(&x, &[1, 1, 1]), Err(Error::SingleGroup)));
    }

    #[test]
    fn pooled_std_uses_sample_variance() {
        let x = DMatrix::from_column_slice(4, 2, &[1.0, 2.0, 3.0, 4.0, 0.0, 0.0, 0.0, 0.0]);
        // var(1..4) with n-1 = 5/3; pooled over two columns = 5/6.
        assert!((pooled_std(&x) - (5.0f64 / 6.0).sqrt()).abs() < 1e-15);
    }
}
