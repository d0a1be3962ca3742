use nalgebra::DMatrix;

use super::{GraphDataset, PropagationOperator};
use crate::error::{Error, Result};

/// How propagated features are combined into model inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// `Z = P^L X`.
    Sgc,
    /// `Z = [X, PX, ..., P^L X] / (L + 1)`.
    Gpr,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Sgc => "sgc",
            Scheme::Gpr => "gpr",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgc" => Ok(Scheme::Sgc),
            "gpr" => Ok(Scheme::Gpr),
            other => Err(Error::InvalidParameter(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Aggregated node representations fed to the linear model.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedFeatures {
    values: DMatrix<f64>,
    scheme: Scheme,
    n_features: usize,
    hops: usize,
}

impl AggregatedFeatures {
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn hops(&self) -> usize {
        self.hops
    }

    /// Width of the raw feature matrix this was built from.
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn width(&self) -> usize {
        self.values.ncols()
    }

    /// Aggregated columns that derive from raw feature `f`: one for SGC,
    /// one per hop block for GPR.
    pub fn columns_of_feature(&self, f: usize) -> Vec<usize> {
        match self.scheme {
            Scheme::Sgc => vec![f],
            Scheme::Gpr => (0..=self.hops).map(|l| l * self.n_features + f).collect(),
        }
    }

    /// The aggregation of `X` with the listed raw feature columns zeroed.
    /// Aggregation acts on columns independently, so this equals
    /// re-aggregating the edited matrix.
    pub fn zero_features(&self, features: &[usize]) -> Result<Self> {
        let mut values = self.values.clone();
        for &f in features {
            if f >= self.n_features {
                return Err(Error::FeatureOutOfRange {
                    feature: f,
                    n_features: self.n_features,
                });
            }
            for c in self.columns_of_feature(f) {
                values.column_mut(c).fill(0.0);
            }
        }
        Ok(Self {
            values,
            scheme: self.scheme,
            n_features: self.n_features,
            hops: self.hops,
        })
    }
}

/// Aggregates the dataset's feature matrix with `prop`.
pub fn aggregate(
    dataset: &GraphDataset,
    prop: &PropagationOperator,
    scheme: Scheme,
) -> Result<AggregatedFeatures> {
    aggregate_matrix(dataset.features(), prop, scheme)
}

/// Aggregates an arbitrary `N x F` matrix; exposed so callers can aggregate
/// derived matrices (and so linearity can be checked directly).
pub fn aggregate_matrix(
    features: &DMatrix<f64>,
    prop: &PropagationOperator,
    scheme: Scheme,
) -> Result<AggregatedFeatures> {
    let n = prop.matrix().n();
    if features.nrows() != n {
        return Err(Error::DimensionMismatch {
            what: "feature rows vs propagation size",
            expected: n,
            actual: features.nrows(),
        });
    }
    let f = features.ncols();
    let hops = prop.hops();
    let values = match scheme {
        Scheme::Sgc => {
            let mut z = features.clone();
            for _ in 0..hops {
                z = prop.matrix().mul_dense(&z);
            }
            z
        }
        Scheme::Gpr => {
            let scale = 1.0 / (hops as f64 + 1.0);
            let mut out = DMatrix::zeros(n, f * (hops + 1));
            let mut block = features.clone();
            for l in 0..=hops {
                if l > 0 {
                    block = prop.matrix().mul_dense(&block);
                }
                out.columns_mut(l * f, f).copy_from(&(&block * scale));
            }
            out
        }
    };
    Ok(AggregatedFeatures {
        values,
        scheme,
        n_features: f,
        hops,
    })
}
