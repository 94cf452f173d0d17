//! Tensorized kernel ridge regression.
//!
//! The model is `y = <φ(x), w>` where `φ(x)` is the Kronecker product of one
//! `I`-term basis expansion per input dimension. The dense baseline
//! ([`DenseRidgeModel`]) builds the `N x I^D` design matrix and solves the
//! ridge normal equations directly. [`TkrrModel`] keeps the weights as a
//! CP decomposition and the features as `D` matrices of size `N x I`, and
//! fits by alternating least squares without ever forming either tensor.

mod als;
mod dataset;
mod features;
mod ridge;

pub use als::{tkrr_fit, FitDiagnostics, JitterEvent, PhaseFlops, TkrrModel, TkrrOptions};
pub use dataset::Dataset;
pub use features::{build_feature_network, tn_inner_product, FeatureFamily, FeatureMap, FeatureTensorNetwork};
pub use ridge::{build_phi, ridge_direct_solve, DenseRidgeModel, RidgeSolution};

/// Model outputs with a flag per sample telling whether any input coordinate
/// had to be clipped into the feature domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T> {
    pub values: Vec<T>,
    pub clipped: Vec<bool>,
}

impl<T> Prediction<T> {
    pub fn clip_count(&self) -> usize {
        self.clipped.iter().filter(|&&c| c).count()
    }
}

/// Root mean squared difference of two equally long sequences.
pub fn rmse<T: crate::Scalar>(a: &[T], b: &[T]) -> f64 {
    assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    let ss: f64 = a.iter().zip(b).map(|(&x, &y)| (x - y).as_f64().powi(2)).sum();
    (ss / a.len() as f64).sqrt()
}
