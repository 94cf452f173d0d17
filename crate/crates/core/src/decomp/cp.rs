use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ParameterCount;
use crate::decomp::TuckerDecomp;
use crate::error::{Error, Result};
use crate::linalg::{lstsq_min_norm, Cholesky, Matrix};
use crate::metrics::flops;
use crate::scalar::Scalar;
use crate::tensor::{next_index, DenseTensor, Shape};

/// Sum of `R` weighted rank-one terms:
/// `y[i1..iD] = Σ_r weights[r] Π_d factors[d][i_d, r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CpDecomp<T> {
    weights: Vec<T>,
    factors: Vec<Matrix<T>>,
}

impl<T: Scalar> CpDecomp<T> {
    pub fn new(weights: Vec<T>, factors: Vec<Matrix<T>>) -> Result<Self> {
        let rank = weights.len();
        if rank == 0 {
            return Err(Error::Rank("CP rank must be at least 1".into()));
        }
        if factors.is_empty() {
            return Err(Error::dim("CP needs at least one factor"));
        }
        for (d, f) in factors.iter().enumerate() {
            if f.cols() != rank {
                return Err(Error::dim(format!(
                    "factor {d} has {} columns, rank is {rank}",
                    f.cols()
                )));
            }
            if f.rows() == 0 {
                return Err(Error::dim(format!("factor {d} has no rows")));
            }
        }
        Ok(Self { weights, factors })
    }

    /// Factors with unit weights.
    pub fn from_factors(factors: Vec<Matrix<T>>) -> Result<Self> {
        let rank = factors.first().map_or(0, Matrix::cols);
        Self::new(vec![T::one(); rank], factors)
    }

    /// Seeded uniform factors in `[-1, 1]` with unit weights.
    pub fn random(mode_sizes: &[usize], rank: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let factors = mode_sizes
            .iter()
            .map(|&n| Matrix::from_fn(n, rank, |_, _| T::lit(rng.random_range(-1.0..=1.0))))
            .collect();
        Self::new(vec![T::one(); rank], factors)
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn ndim(&self) -> usize {
        self.factors.len()
    }

    pub fn mode_sizes(&self) -> Vec<usize> {
        self.factors.iter().map(Matrix::rows).collect()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn factors(&self) -> &[Matrix<T>] {
        &self.factors
    }

    pub fn factor(&self, d: usize) -> &Matrix<T> {
        &self.factors[d]
    }

    pub(crate) fn factor_mut(&mut self, d: usize) -> &mut Matrix<T> {
        &mut self.factors[d]
    }

    /// `R * Σ_d I_d`, the factor entries only.
    pub fn factor_parameter_count(&self) -> usize {
        self.rank() * self.factors.iter().map(Matrix::rows).sum::<usize>()
    }

    pub fn reconstruct(&self) -> Result<DenseTensor<T>> {
        let dims = self.mode_sizes();
        let shape = Shape::new(dims.clone())?;
        let rank = self.rank();
        let d = self.ndim();
        let mut data = Vec::with_capacity(shape.numel());
        let mut index = vec![0; d];
        loop {
            let mut acc = T::zero();
            for r in 0..rank {
                let mut term = self.weights[r];
                for (f, &i) in self.factors.iter().zip(&index) {
                    term *= f.get(i, r);
                }
                acc += term;
            }
            data.push(acc);
            if !next_index(&mut index, &dims) {
                break;
            }
        }
        let n = data.len() as u64;
        flops::record(n * (rank * d) as u64, n * (rank as u64 - 1));
        DenseTensor::new(shape, data)
    }

    /// The same tensor as a Tucker decomposition with a superdiagonal core.
    pub fn to_tucker(&self) -> Result<TuckerDecomp<T>> {
        let rank = self.rank();
        let shape = Shape::new(vec![rank; self.ndim()])?;
        let core = DenseTensor::from_fn(shape, |idx| {
            if idx.iter().all(|&i| i == idx[0]) {
                self.weights[idx[0]]
            } else {
                T::zero()
            }
        });
        TuckerDecomp::new(core, self.factors.clone())
    }

    /// Scales every factor column to unit 2-norm and absorbs the norms into
    /// the weights. Columns of zero norm give a zero weight.
    pub(crate) fn normalize(&mut self) {
        for r in 0..self.rank() {
            let mut w = self.weights[r];
            for f in &mut self.factors {
                let col = f.col_mut(r);
                let norm = col.iter().map(|&x| x * x).sum::<T>().sqrt();
                if norm > T::zero() {
                    col.iter_mut().for_each(|x| *x /= norm);
                }
                w *= norm;
            }
            self.weights[r] = w;
        }
    }

    /// Moves the weights into the first factor, leaving unit weights.
    pub(crate) fn absorb_weights(&mut self) {
        for r in 0..self.rank() {
            let w = std::mem::replace(&mut self.weights[r], T::one());
            self.factors[0].col_mut(r).iter_mut().for_each(|x| *x *= w);
        }
    }
}

impl<T: Scalar> ParameterCount for CpDecomp<T> {
    /// `R + R * Σ_d I_d`.
    fn parameter_count(&self) -> usize {
        self.rank() + self.factor_parameter_count()
    }
}

#[derive(Debug, Clone)]
pub struct CpFitOptions {
    pub max_sweeps: usize,
    /// Stop when the relative error improvement of a sweep drops below this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for CpFitOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 200,
            tol: 1e-12,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CpFit<T> {
    pub decomp: CpDecomp<T>,
    /// Frobenius error `‖X - X̂‖` after each full sweep.
    pub errors: Vec<f64>,
    /// Factor updates whose normal equations were numerically singular and
    /// were solved in the minimum-norm sense.
    pub singular_solves: usize,
}

impl<T> CpFit<T> {
    pub fn final_error(&self) -> f64 {
        self.errors.last().copied().unwrap_or(f64::NAN)
    }
}

/// `X_(d) (⊙_{k≠d} A_k)`, evaluated entry by entry.
fn mttkrp<T: Scalar>(target: &DenseTensor<T>, cp: &CpDecomp<T>, mode: usize) -> Matrix<T> {
    let dims = target.dims();
    let rank = cp.rank();
    let mut out = Matrix::zeros(dims[mode], rank);
    let mut index = vec![0; dims.len()];
    let mut lin = 0;
    loop {
        let x = target.values()[lin];
        if x != T::zero() {
            for r in 0..rank {
                let mut p = x;
                for (k, f) in cp.factors().iter().enumerate() {
                    if k != mode {
                        p *= f.get(index[k], r);
                    }
                }
                let v = out.get(index[mode], r) + p;
                out.set(index[mode], r, v);
            }
        }
        lin += 1;
        if !next_index(&mut index, dims) {
            break;
        }
    }
    let n = target.len() as u64;
    let d = dims.len() as u64;
    flops::record(n * rank as u64 * (d - 1), n * rank as u64);
    out
}

const SINGULAR_CONDITION: f64 = 1e10;
/// Relative error treated as an exact fit.
const EXACT_FIT: f64 = 1e-13;

/// Alternating least squares for a rank-`rank` CP approximation of `target`.
///
/// Factors start as seeded uniform entries in `[-1, 1]`. Each sweep updates
/// the factors in mode order through the normal equations of the unfolded
/// problem, then normalizes factor columns into the weights. A sweep that
/// raises the error is discarded and ends the fit.
pub fn cp_fit<T: Scalar>(target: &DenseTensor<T>, rank: usize, opts: &CpFitOptions) -> Result<CpFit<T>> {
    if rank == 0 {
        return Err(Error::Rank("CP rank must be at least 1".into()));
    }
    let dims = target.dims().to_vec();
    let norm_x = target.frobenius_norm().as_f64();
    let mut cp = CpDecomp::random(&dims, rank, opts.seed)?;
    let mut errors = Vec::new();
    let mut singular_solves = 0;

    for _ in 0..opts.max_sweeps {
        let previous = cp.clone();
        cp.absorb_weights();
        for d in 0..dims.len() {
            let mut v = Matrix::from_fn(rank, rank, |_, _| T::one());
            for (k, f) in cp.factors().iter().enumerate() {
                if k != d {
                    let g = f.gram();
                    for c in 0..rank {
                        for r in 0..rank {
                            v.set(r, c, v.get(r, c) * g.get(r, c));
                        }
                    }
                    flops::record((rank * rank) as u64, 0);
                }
            }
            let m = mttkrp(target, &cp, d);
            let mut updated = Matrix::zeros(dims[d], rank);
            let chol = Cholesky::new(&v).ok().filter(|c| c.condition_estimate() < SINGULAR_CONDITION);
            if chol.is_none() {
                singular_solves += 1;
            }
            for i in 0..dims[d] {
                let x = match &chol {
                    Some(c) => c.solve(&m.row(i)),
                    None => lstsq_min_norm(&v, &m.row(i), 1e-13)?.0,
                };
                for (r, x) in x.into_iter().enumerate() {
                    updated.set(i, r, x);
                }
            }
            *cp.factor_mut(d) = updated;
        }
        cp.normalize();

        let err = target.sub(&cp.reconstruct()?)?.frobenius_norm().as_f64();
        let prev = errors.last().copied();
        if prev.is_some_and(|p| err > p) {
            // round-off limited; keep the better iterate
            cp = previous;
            break;
        }
        errors.push(err);
        let scale = if norm_x > 0.0 { norm_x } else { 1.0 };
        if err / scale <= EXACT_FIT {
            break;
        }
        if let Some(prev) = prev {
            if (prev - err) / scale < opts.tol {
                break;
            }
        }
    }
    Ok(CpFit {
        decomp: cp,
        errors,
        singular_solves,
    })
}
