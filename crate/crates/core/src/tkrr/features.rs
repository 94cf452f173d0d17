use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::decomp::CpDecomp;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::metrics::flops;
use crate::scalar::Scalar;
use crate::tensor::{outer_product, DenseTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureFamily {
    /// Sine basis on the domain interval:
    /// `φ_i(x) = sqrt(2/(u-l)) sin(π i (x-l)/(u-l))`, `i = 1..I`.
    DeterministicFourier,
    /// `φ_i(x) = x^(i-1)`, `i = 1..I`.
    PurePowerPolynomial,
}

impl FeatureFamily {
    pub fn code(self) -> u8 {
        match self {
            FeatureFamily::DeterministicFourier => 0,
            FeatureFamily::PurePowerPolynomial => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(FeatureFamily::DeterministicFourier),
            1 => Ok(FeatureFamily::PurePowerPolynomial),
            _ => Err(Error::Format(format!("unknown feature family code {code}"))),
        }
    }
}

impl fmt::Display for FeatureFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureFamily::DeterministicFourier => "fourier",
            FeatureFamily::PurePowerPolynomial => "poly",
        })
    }
}

impl FromStr for FeatureFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fourier" => Ok(FeatureFamily::DeterministicFourier),
            "poly" | "polynomial" => Ok(FeatureFamily::PurePowerPolynomial),
            _ => Err(Error::arg(format!("unknown basis {s:?}, expected fourier or poly"))),
        }
    }
}

/// Per-dimension basis expansion with `I` functions on a bounded domain.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap<T> {
    family: FeatureFamily,
    basis_count: usize,
    bounds: Vec<(T, T)>,
}

impl<T: Scalar> FeatureMap<T> {
    pub fn new(family: FeatureFamily, basis_count: usize, bounds: Vec<(T, T)>) -> Result<Self> {
        if basis_count == 0 {
            return Err(Error::arg("basis count must be at least 1"));
        }
        if bounds.is_empty() {
            return Err(Error::arg("feature map needs at least one input dimension"));
        }
        for (d, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::arg(format!("invalid bounds ({lo}, {hi}) for dimension {d}")));
            }
        }
        Ok(Self {
            family,
            basis_count,
            bounds,
        })
    }

    /// Same bounds for all `dims` dimensions.
    pub fn uniform(family: FeatureFamily, basis_count: usize, dims: usize, lo: T, hi: T) -> Result<Self> {
        Self::new(family, basis_count, vec![(lo, hi); dims])
    }

    /// Bounds taken from the data ranges, widened by `margin` times each range.
    pub fn fit_bounds(family: FeatureFamily, basis_count: usize, data: &Dataset<T>, margin: T) -> Result<Self> {
        let bounds = data
            .column_ranges()
            .into_iter()
            .map(|(lo, hi)| {
                let width = (hi - lo).max(T::one());
                (lo - margin * width, hi + margin * width)
            })
            .collect();
        Self::new(family, basis_count, bounds)
    }

    pub fn family(&self) -> FeatureFamily {
        self.family
    }

    pub fn basis_count(&self) -> usize {
        self.basis_count
    }

    pub fn dims(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(T, T)] {
        &self.bounds
    }

    /// Evaluates the basis at `x` for input dimension `dim`, clipping `x`
    /// into the domain. The flag reports whether clipping happened.
    pub fn map_scalar_clipped(&self, x: T, dim: usize) -> Result<(Vec<T>, bool)> {
        let mut out = vec![T::zero(); self.basis_count];
        let clipped = self.map_into(x, dim, &mut out)?;
        Ok((out, clipped))
    }

    pub fn map_scalar(&self, x: T, dim: usize) -> Result<Vec<T>> {
        self.map_scalar_clipped(x, dim).map(|(v, _)| v)
    }

    pub(crate) fn map_into(&self, x: T, dim: usize, out: &mut [T]) -> Result<bool> {
        if !x.is_finite() {
            return Err(Error::arg(format!("non-finite input {x} in dimension {dim}")));
        }
        let &(lo, hi) = self
            .bounds
            .get(dim)
            .ok_or_else(|| Error::dim(format!("dimension {dim} out of range for {} bounds", self.bounds.len())))?;
        let clipped = x < lo || x > hi;
        let x = x.max(lo).min(hi);
        let n = self.basis_count;
        match self.family {
            FeatureFamily::PurePowerPolynomial => {
                let mut p = T::one();
                for o in out.iter_mut() {
                    *o = p;
                    p *= x;
                }
                flops::record(n.saturating_sub(1) as u64, 0);
            }
            FeatureFamily::DeterministicFourier => {
                let width = hi - lo;
                let scale = (T::lit(2.0) / width).sqrt();
                let t = (x - lo) / width * T::lit(std::f64::consts::PI);
                for (i, o) in out.iter_mut().enumerate() {
                    *o = scale * (T::of_usize(i + 1) * t).sin();
                }
                flops::record(3 + 2 * n as u64, 2);
            }
        }
        Ok(clipped)
    }

    /// `φ(x)` for a full input row: the Kronecker product of the per-dimension maps.
    pub fn map_row(&self, row: &[T]) -> Result<(Vec<T>, bool)> {
        let (features, clipped) = self.map_row_factors(row)?;
        Ok((crate::tensor::kronecker(&features)?, clipped))
    }

    pub(crate) fn map_row_factors(&self, row: &[T]) -> Result<(Vec<Vec<T>>, bool)> {
        if row.len() != self.dims() {
            return Err(Error::dim(format!(
                "input has {} columns, feature map expects {}",
                row.len(),
                self.dims()
            )));
        }
        let mut any = false;
        let features = row
            .iter()
            .enumerate()
            .map(|(d, &x)| {
                let (v, c) = self.map_scalar_clipped(x, d)?;
                any |= c;
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((features, any))
    }
}

/// The rank-one feature tensors of all samples, kept factorized: matrix `d`
/// holds `φ(x_{n,d})` in row `n`.
#[derive(Debug, Clone)]
pub struct FeatureTensorNetwork<T> {
    feature_map: FeatureMap<T>,
    features: Vec<Matrix<T>>,
    clipped: Vec<bool>,
}

impl<T: Scalar> FeatureTensorNetwork<T> {
    pub fn feature_map(&self) -> &FeatureMap<T> {
        &self.feature_map
    }

    /// Per-dimension `N x I` feature matrices.
    pub fn features(&self) -> &[Matrix<T>] {
        &self.features
    }

    pub fn samples(&self) -> usize {
        self.features[0].rows()
    }

    pub fn dims(&self) -> usize {
        self.features.len()
    }

    pub fn basis_count(&self) -> usize {
        self.features[0].cols()
    }

    pub fn clipped(&self) -> &[bool] {
        &self.clipped
    }

    /// Stored scalars, `N * I * D`.
    pub fn storage_count(&self) -> usize {
        self.features.iter().map(|m| m.rows() * m.cols()).sum()
    }

    /// `φ(x_{n,d})`.
    pub fn sample_factor(&self, n: usize, d: usize) -> Vec<T> {
        self.features[d].row(n)
    }

    /// The explicit `I x ... x I` feature tensor of sample `n`.
    pub fn sample_tensor(&self, n: usize) -> Result<DenseTensor<T>> {
        let factors: Vec<Vec<T>> = (0..self.dims()).map(|d| self.sample_factor(n, d)).collect();
        outer_product(&factors)
    }
}

/// Maps every sample coordinate-wise; stores `N * I * D` scalars.
pub fn build_feature_network<T: Scalar>(fm: &FeatureMap<T>, data: &Dataset<T>) -> Result<FeatureTensorNetwork<T>> {
    if data.dim() != fm.dims() {
        return Err(Error::dim(format!(
            "dataset has {} input columns, feature map expects {}",
            data.dim(),
            fm.dims()
        )));
    }
    let (n, i) = (data.len(), fm.basis_count());
    let mut clipped = vec![false; n];
    let mut buf = vec![T::zero(); i];
    let mut features = Vec::with_capacity(fm.dims());
    for d in 0..fm.dims() {
        let mut m = Matrix::zeros(n, i);
        for (s, flag) in clipped.iter_mut().enumerate() {
            *flag |= fm.map_into(data.input(s, d), d, &mut buf)?;
            for (k, &v) in buf.iter().enumerate() {
                m.set(s, k, v);
            }
        }
        features.push(m);
    }
    Ok(FeatureTensorNetwork {
        feature_map: fm.clone(),
        features,
        clipped,
    })
}

/// `<P_n, W>` without forming either tensor:
/// `Σ_r λ_r Π_d φ(x_{n,d})ᵀ W_d[:, r]`.
pub fn tn_inner_product<T: Scalar>(ftn: &FeatureTensorNetwork<T>, n: usize, w: &CpDecomp<T>) -> Result<T> {
    if w.ndim() != ftn.dims() || w.mode_sizes().iter().any(|&s| s != ftn.basis_count()) {
        return Err(Error::dim(format!(
            "weights of shape {:?} do not match {} dimensions of {} features",
            w.mode_sizes(),
            ftn.dims(),
            ftn.basis_count()
        )));
    }
    if n >= ftn.samples() {
        return Err(Error::dim(format!("sample {n} out of range for {}", ftn.samples())));
    }
    let i = ftn.basis_count();
    let rank = w.rank();
    let mut total = T::zero();
    for r in 0..rank {
        let mut term = w.weights()[r];
        for (feat, factor) in ftn.features().iter().zip(w.factors()) {
            let col = factor.col(r);
            let mut dot = T::zero();
            for k in 0..i {
                dot += feat.get(n, k) * col[k];
            }
            term *= dot;
        }
        total += term;
    }
    let d = ftn.dims();
    flops::record_dots(d * rank, i);
    flops::record((d * rank) as u64, rank as u64 - 1);
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_powers() {
        let fm = FeatureMap::uniform(FeatureFamily::PurePowerPolynomial, 3, 1, -5.0, 5.0).unwrap();
        assert_eq!(fm.map_scalar(2.0, 0).unwrap(), vec![1.0, 2.0, 4.0]);
        let one = FeatureMap::uniform(FeatureFamily::PurePowerPolynomial, 1, 1, -5.0, 5.0).unwrap();
        assert_eq!(one.map_scalar(3.7, 0).unwrap(), vec![1.0]);
    }

    #[test]
    fn fourier_closed_form() {
        let fm = FeatureMap::uniform(FeatureFamily::DeterministicFourier, 2, 1, 0.0, 1.0).unwrap();
        let v = fm.map_scalar(0.5, 0).unwrap();
        assert!((v[0] - 2f64.sqrt()).abs() < 1e-12);
        assert!(v[1].abs() < 1e-12);
    }

    #[test]
    fn clipping_is_flagged() {
        let fm = FeatureMap::uniform(FeatureFamily::PurePowerPolynomial, 2, 1, 0.0, 1.0).unwrap();
        let (v, c) = fm.map_scalar_clipped(3.0, 0).unwrap();
        assert!(c);
        assert_eq!(v, vec![1.0, 1.0]);
        assert!(!fm.map_scalar_clipped(0.5, 0).unwrap().1);
        assert!(fm.map_scalar(f64::INFINITY, 0).is_err());
        assert!(fm.map_scalar(0.5, 1).is_err());
    }

    #[test]
    fn invalid_maps() {
        assert!(FeatureMap::uniform(FeatureFamily::PurePowerPolynomial, 0, 1, 0.0, 1.0).is_err());
        assert!(FeatureMap::uniform(FeatureFamily::PurePowerPolynomial, 2, 1, 1.0, 1.0).is_err());
    }

    #[test]
    fn family_parsing() {
        assert_eq!("fourier".parse::<FeatureFamily>().unwrap(), FeatureFamily::DeterministicFourier);
        assert_eq!("poly".parse::<FeatureFamily>().unwrap(), FeatureFamily::PurePowerPolynomial);
        assert!("spline".parse::<FeatureFamily>().is_err());
    }
}
