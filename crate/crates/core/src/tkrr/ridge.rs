use super::{FeatureMap, Prediction};
use crate::error::{Error, Result};
use crate::linalg::{lstsq_min_norm, Cholesky, Matrix};
use crate::scalar::Scalar;
use crate::tensor::checked_product;
use crate::tkrr::Dataset;

/// The `N x I^D` design matrix whose row `n` is `φ(x_n)`.
///
/// Refuses with [`Error::BaselineInfeasible`] when the matrix would hold more
/// than `cap` elements.
pub fn build_phi<T: Scalar>(fm: &FeatureMap<T>, data: &Dataset<T>, cap: u128) -> Result<Matrix<T>> {
    if data.dim() != fm.dims() {
        return Err(Error::dim(format!(
            "dataset has {} input columns, feature map expects {}",
            data.dim(),
            fm.dims()
        )));
    }
    let columns = checked_product(&vec![fm.basis_count(); fm.dims()]);
    let elements = columns.saturating_mul(data.len().max(1) as u128);
    if elements > cap {
        return Err(Error::BaselineInfeasible {
            what: format!("design matrix {} x {}^{}", data.len(), fm.basis_count(), fm.dims()),
            elements,
            cap,
        });
    }
    let m = columns as usize;
    let mut phi = Matrix::zeros(data.len(), m);
    for n in 0..data.len() {
        let (row, _) = fm.map_row(&data.inputs().row(n))?;
        for (c, v) in row.into_iter().enumerate() {
            phi.set(n, c, v);
        }
    }
    Ok(phi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Cholesky,
    /// SVD pseudo-inverse, used when the unregularized Gram is singular.
    MinimumNorm,
}

#[derive(Debug, Clone)]
pub struct RidgeSolution<T> {
    pub weights: Vec<T>,
    pub method: SolveMethod,
    pub condition: f64,
}

/// Condition estimate above which an unregularized Cholesky result is
/// replaced by the minimum-norm least-squares solution.
const MIN_NORM_SWITCH: f64 = 1e12;

/// Minimizer of `‖y - Φw‖² + λ‖w‖²` through `(ΦᵀΦ + λI) w = Φᵀy`.
///
/// With `λ = 0` and a rank-deficient `Φ` the minimum-norm least-squares
/// solution is returned.
pub fn ridge_direct_solve<T: Scalar>(phi: &Matrix<T>, y: &[T], regularization: T) -> Result<RidgeSolution<T>> {
    if y.len() != phi.rows() {
        return Err(Error::dim(format!("{} targets for {} design rows", y.len(), phi.rows())));
    }
    if !(regularization >= T::zero()) {
        return Err(Error::arg("regularization must be non-negative"));
    }
    if phi.values().iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::arg("non-finite design matrix or targets"));
    }
    let mut gram = phi.gram();
    if regularization > T::zero() {
        gram.add_diagonal(regularization);
    }
    let rhs = phi.t_matvec(y)?;
    match Cholesky::new(&gram) {
        Ok(ch) => {
            let cond = ch.condition_estimate();
            if regularization > T::zero() || cond < MIN_NORM_SWITCH {
                let weights = ch.solve(&rhs);
                if weights.iter().all(|v| v.is_finite()) {
                    return Ok(RidgeSolution {
                        weights,
                        method: SolveMethod::Cholesky,
                        condition: cond,
                    });
                }
                if regularization > T::zero() {
                    return Err(Error::Solver {
                        message: "ridge solve produced non-finite weights".into(),
                        condition: cond,
                    });
                }
            }
        }
        Err(e) if regularization > T::zero() => return Err(e),
        Err(_) => {}
    }
    let rcond = T::epsilon().as_f64() * phi.rows().max(phi.cols()) as f64 * 10.0;
    let (weights, condition) = lstsq_min_norm(phi, y, rcond)?;
    Ok(RidgeSolution {
        weights,
        method: SolveMethod::MinimumNorm,
        condition,
    })
}

/// Ridge regression on the explicit `I^D` feature vector.
#[derive(Debug, Clone)]
pub struct DenseRidgeModel<T> {
    weights: Vec<T>,
    feature_map: FeatureMap<T>,
    regularization: T,
}

impl<T: Scalar> DenseRidgeModel<T> {
    pub fn from_weights(weights: Vec<T>, feature_map: FeatureMap<T>, regularization: T) -> Result<Self> {
        let expected = checked_product(&vec![feature_map.basis_count(); feature_map.dims()]);
        if weights.len() as u128 != expected {
            return Err(Error::dim(format!(
                "dense model needs {expected} weights, got {}",
                weights.len()
            )));
        }
        Ok(Self {
            weights,
            feature_map,
            regularization,
        })
    }

    /// Builds `Φ` and solves directly. Both `N x I^D` and the `I^D x I^D`
    /// Gram matrix must fit under `cap` elements.
    pub fn fit(feature_map: &FeatureMap<T>, data: &Dataset<T>, regularization: T, cap: u128) -> Result<Self> {
        let columns = checked_product(&vec![feature_map.basis_count(); feature_map.dims()]);
        let gram = columns.saturating_mul(columns);
        if gram > cap {
            return Err(Error::BaselineInfeasible {
                what: format!("Gram matrix ({}^{})^2", feature_map.basis_count(), feature_map.dims()),
                elements: gram,
                cap,
            });
        }
        let phi = build_phi(feature_map, data, cap)?;
        let sol = ridge_direct_solve(&phi, data.targets(), regularization)?;
        Self::from_weights(sol.weights, feature_map.clone(), regularization)
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn feature_map(&self) -> &FeatureMap<T> {
        &self.feature_map
    }

    pub fn regularization(&self) -> T {
        self.regularization
    }

    pub fn predict(&self, inputs: &Matrix<T>) -> Result<Prediction<T>> {
        if inputs.cols() != self.feature_map.dims() {
            return Err(Error::dim(format!(
                "inputs have {} columns, model expects {}",
                inputs.cols(),
                self.feature_map.dims()
            )));
        }
        let mut values = Vec::with_capacity(inputs.rows());
        let mut clipped = Vec::with_capacity(inputs.rows());
        for n in 0..inputs.rows() {
            let (phi, c) = self.feature_map.map_row(&inputs.row(n))?;
            crate::metrics::flops::record_dot(phi.len());
            values.push(phi.iter().zip(&self.weights).map(|(&a, &b)| a * b).sum());
            clipped.push(c);
        }
        Ok(Prediction { values, clipped })
    }
}
