use super::ParameterCount;
use crate::error::{Error, Result};
use crate::linalg::{left_singular_basis, Matrix};
use crate::scalar::Scalar;
use crate::tensor::{unfold, DenseTensor};

/// Core tensor multiplied along every mode by a factor matrix:
/// `y[i1..iD] = Σ_{r1..rD} g[r1..rD] Π_d factors[d][i_d, r_d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerDecomp<T> {
    core: DenseTensor<T>,
    factors: Vec<Matrix<T>>,
}

impl<T: Scalar> TuckerDecomp<T> {
    pub fn new(core: DenseTensor<T>, factors: Vec<Matrix<T>>) -> Result<Self> {
        if core.ndim() != factors.len() {
            return Err(Error::dim(format!(
                "core has {} modes but {} factors were given",
                core.ndim(),
                factors.len()
            )));
        }
        for (d, (f, &r)) in factors.iter().zip(core.dims()).enumerate() {
            if f.cols() != r {
                return Err(Error::dim(format!(
                    "factor {d} has {} columns, core mode {d} has size {r}",
                    f.cols()
                )));
            }
        }
        Ok(Self { core, factors })
    }

    pub fn core(&self) -> &DenseTensor<T> {
        &self.core
    }

    pub fn factors(&self) -> &[Matrix<T>] {
        &self.factors
    }

    pub fn ranks(&self) -> &[usize] {
        self.core.dims()
    }

    pub fn mode_sizes(&self) -> Vec<usize> {
        self.factors.iter().map(Matrix::rows).collect()
    }

    pub fn reconstruct(&self) -> Result<DenseTensor<T>> {
        self.factors
            .iter()
            .enumerate()
            .try_fold(self.core.clone(), |acc, (d, f)| acc.mode_product(f, d))
    }
}

impl<T: Scalar> ParameterCount for TuckerDecomp<T> {
    /// `Π_d R_d + Σ_d I_d R_d`.
    fn parameter_count(&self) -> usize {
        self.core.len() + self.factors.iter().map(|f| f.rows() * f.cols()).sum::<usize>()
    }
}

/// Truncated higher-order SVD: factor `d` holds the leading `ranks[d]` left
/// singular vectors of the mode-`d` unfolding; the core is the target
/// contracted with every factor transpose.
pub fn hosvd_fit<T: Scalar>(target: &DenseTensor<T>, ranks: &[usize]) -> Result<TuckerDecomp<T>> {
    let dims = target.dims();
    if ranks.len() != dims.len() {
        return Err(Error::dim(format!(
            "{} ranks given for {} modes",
            ranks.len(),
            dims.len()
        )));
    }
    for (d, (&r, &n)) in ranks.iter().zip(dims).enumerate() {
        if r == 0 || r > n {
            return Err(Error::Rank(format!("rank {r} for mode {d} must lie in 1..={n}")));
        }
    }
    let mut factors = Vec::with_capacity(dims.len());
    for (d, &r) in ranks.iter().enumerate() {
        let unfolded = unfold(target, d)?.to_matrix()?;
        let (basis, _) = left_singular_basis(&unfolded)?;
        factors.push(basis.leading_cols(r));
    }
    let core = factors
        .iter()
        .enumerate()
        .try_fold(target.clone(), |acc, (d, f)| acc.mode_product(&f.transpose(), d))?;
    TuckerDecomp::new(core, factors)
}
