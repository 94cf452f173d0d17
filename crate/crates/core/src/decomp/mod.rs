//! CP, Tucker and tensor-train decompositions.
//!
//! Each network type reconstructs to a [`DenseTensor`](crate::DenseTensor)
//! and reports how many scalars it stores. Fitters: alternating least
//! squares for CP, truncated higher-order SVD for Tucker and the sequential
//! TT-SVD sweep for tensor trains.

mod cp;
mod tt;
mod tucker;

pub use cp::{cp_fit, CpDecomp, CpFit, CpFitOptions};
pub use tt::{tt_svd_fit, TtDecomp, TtTruncation};
pub use tucker::{hosvd_fit, TuckerDecomp};

/// Number of stored scalars.
pub trait ParameterCount {
    fn parameter_count(&self) -> usize;
}

/// `R * I * D`: the CP factor-entry count with equal mode sizes and without
/// the weight vector, as tabulated in the T-KRR runtime comparison.
pub fn cp_table_parameter_count(mode_size: u64, modes: u32, rank: u64) -> u64 {
    rank * mode_size * modes as u64
}
