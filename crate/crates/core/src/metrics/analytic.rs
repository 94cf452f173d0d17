//! Leading-term operation counts of the algorithms in this crate.
//!
//! Each envelope is the bare complexity expression with unit constants.
//! Measured counts (multiplies plus additions, see [`super::flops`]) relate
//! to them through the per-kernel constant returned by
//! [`Algorithm::measured_constant`]: `measured <= constant * analytic`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Dense ridge regression by direct inversion: `N I^{2D} + I^{3D}`.
    RidgeDirect,
    /// One CP-ALS sweep of T-KRR: `D N (IR)^2 + D (IR)^3`.
    TkrrAlsSweep,
    /// Factorized TT-layer forward pass: `D R^2 I max(I^D, J^D)`.
    TtLayerForward,
    /// TT-layer backward pass: `D^2 R^4 I max(I^D, J^D)`.
    TtLayerBackward,
    /// Dense fully connected matvec: `I^D J^D`.
    DenseMatvec,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::RidgeDirect,
        Algorithm::TkrrAlsSweep,
        Algorithm::TtLayerForward,
        Algorithm::TtLayerBackward,
        Algorithm::DenseMatvec,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::RidgeDirect => "ridge-direct",
            Algorithm::TkrrAlsSweep => "tkrr-als-sweep",
            Algorithm::TtLayerForward => "ttlayer-forward",
            Algorithm::TtLayerBackward => "ttlayer-backward",
            Algorithm::DenseMatvec => "dense-matvec",
        }
    }

    /// Bound on `measured / analytic` for the instrumented kernels.
    ///
    /// Ridge: symmetric Gram (`N M (M+1)` ops) plus Cholesky (`~M^3/3`) and
    /// the feature build stay under twice the envelope. ALS: the symmetric
    /// Gram per factor plus `O(N I R)` design and projection work stays
    /// under three times the envelope for `IR >= 4`. TT forward: every
    /// contraction step costs at most `2 R^2 max(I,J) max(I^D,J^D)`.
    /// Backward: the left sweep, the core gradients and the forward cache
    /// together stay within four times the envelope. Dense matvec: mults plus adds.
    pub fn measured_constant(self) -> f64 {
        match self {
            Algorithm::RidgeDirect => 2.0,
            Algorithm::TkrrAlsSweep => 3.0,
            Algorithm::TtLayerForward => 2.0,
            Algorithm::TtLayerBackward => 4.0,
            Algorithm::DenseMatvec => 2.0,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| Error::arg(format!("unknown algorithm id {s:?}")))
    }
}

/// Size parameters of a complexity expression. Unused fields are ignored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ComplexityParams {
    /// Basis functions per input dimension, or output mode size of a layer.
    pub i: u64,
    /// Number of modes.
    pub d: u32,
    /// Number of samples.
    pub n: u64,
    pub r: u64,
    /// Input mode size of a layer.
    pub j: u64,
}

fn pow(base: u64, exp: u32) -> u128 {
    (base as u128).checked_pow(exp).unwrap_or(u128::MAX)
}

fn mul(a: u128, b: u128) -> u128 {
    a.checked_mul(b).unwrap_or(u128::MAX)
}

/// Leading-term operation envelope; saturates at `u128::MAX`.
pub fn analytic_flops(algorithm: Algorithm, p: ComplexityParams) -> u128 {
    let d = p.d as u128;
    match algorithm {
        Algorithm::RidgeDirect => mul(p.n as u128, pow(p.i, 2 * p.d)).saturating_add(pow(p.i, 3 * p.d)),
        Algorithm::TkrrAlsSweep => {
            let q = (p.i * p.r) as u128;
            mul(mul(d, p.n as u128), q * q).saturating_add(mul(d, q * q * q))
        }
        Algorithm::TtLayerForward => {
            let big = pow(p.i, p.d).max(pow(p.j, p.d));
            mul(mul(d * (p.r * p.r) as u128, p.i as u128), big)
        }
        Algorithm::TtLayerBackward => {
            let big = pow(p.i, p.d).max(pow(p.j, p.d));
            mul(mul(d * d * pow(p.r, 4), p.i as u128), big)
        }
        Algorithm::DenseMatvec => mul(pow(p.i, p.d), pow(p.j, p.d)),
    }
}

/// [`analytic_flops`] looked up by string id.
pub fn analytic_flops_by_id(id: &str, p: ComplexityParams) -> Result<u128> {
    Ok(analytic_flops(id.parse()?, p))
}
