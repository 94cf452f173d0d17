//! Tensor networks for efficient learning.
//!
//! The crate provides a dense tensor substrate ([`tensor`]), the CP, Tucker and
//! tensor-train decompositions with their fitting procedures ([`decomp`]),
//! tensorized kernel ridge regression with a dense direct-solve baseline
//! ([`tkrr`]), a TT-compressed fully connected layer ([`ttlayer`]) and FLOP,
//! parameter and wall-clock accounting ([`metrics`]).
//!
//! All numerical code is generic over [`Scalar`], implemented for `f32` and
//! `f64`. The type aliases at the crate root fix the scalar to `f64`, which is
//! what the benchmarks and the binary container use.

pub mod bench;
pub mod decomp;
pub mod error;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod scalar;
pub mod tensor;
pub mod tkrr;
pub mod ttlayer;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use decomp::{CpDecomp, CpFitOptions, ParameterCount, TtDecomp, TtTruncation, TuckerDecomp};
pub use linalg::Matrix;
pub use metrics::flops::{count_scope, FlopCounter};
pub use tensor::{DenseTensor, Shape};
pub use tkrr::{Dataset, DenseRidgeModel, FeatureFamily, FeatureMap, FeatureTensorNetwork, TkrrModel};
pub use ttlayer::{LayerGradients, TtLayer};

/// Dense tensor over `f64`.
pub type Tensor = DenseTensor<f64>;
/// Column-major matrix over `f64`.
pub type Mat = Matrix<f64>;
/// CP decomposition over `f64`.
pub type Cp = CpDecomp<f64>;
/// Tucker decomposition over `f64`.
pub type Tucker = TuckerDecomp<f64>;
/// Tensor-train decomposition over `f64`.
pub type Tt = TtDecomp<f64>;
/// TT fully connected layer over `f64`.
pub type Layer = TtLayer<f64>;
/// Tensorized kernel ridge regression model over `f64`.
pub type Tkrr = TkrrModel<f64>;
/// Dense ridge baseline over `f64`.
pub type DenseRidge = DenseRidgeModel<f64>;
