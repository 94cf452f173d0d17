use super::ParameterCount;
use crate::error::{Error, Result};
use crate::linalg::{svd, Matrix};
use crate::scalar::Scalar;
use crate::tensor::{DenseTensor, Shape};

/// Chain of three-way cores, core `d` of shape `(R_d, I_d, R_{d+1})` with
/// boundary ranks equal to one.
#[derive(Debug, Clone, PartialEq)]
pub struct TtDecomp<T> {
    cores: Vec<DenseTensor<T>>,
}

impl<T: Scalar> TtDecomp<T> {
    pub fn new(cores: Vec<DenseTensor<T>>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::dim("TT needs at least one core"));
        }
        for (d, c) in cores.iter().enumerate() {
            if c.ndim() != 3 {
                return Err(Error::dim(format!("core {d} has {} modes, expected 3", c.ndim())));
            }
        }
        if cores[0].dims()[0] != 1 || cores[cores.len() - 1].dims()[2] != 1 {
            return Err(Error::Rank("boundary TT ranks must be 1".into()));
        }
        for (d, pair) in cores.windows(2).enumerate() {
            if pair[0].dims()[2] != pair[1].dims()[0] {
                return Err(Error::Rank(format!(
                    "cores {d} and {} disagree on the shared rank ({} vs {})",
                    d + 1,
                    pair[0].dims()[2],
                    pair[1].dims()[0]
                )));
            }
        }
        Ok(Self { cores })
    }

    /// Seeded uniform cores in `[-1, 1]` with the given internal ranks.
    pub fn random(mode_sizes: &[usize], internal_ranks: &[usize], seed: u64) -> Result<Self> {
        use rand::{Rng, SeedableRng};
        if internal_ranks.len() + 1 != mode_sizes.len() {
            return Err(Error::dim("need one internal rank per adjacent core pair"));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let ranks: Vec<usize> = std::iter::once(1)
            .chain(internal_ranks.iter().copied())
            .chain(std::iter::once(1))
            .collect();
        let cores = mode_sizes
            .iter()
            .enumerate()
            .map(|(d, &n)| {
                let shape = Shape::new(vec![ranks[d], n, ranks[d + 1]])?;
                Ok(DenseTensor::from_fn(shape, |_| T::lit(rng.random_range(-1.0..=1.0))))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(cores)
    }

    pub fn cores(&self) -> &[DenseTensor<T>] {
        &self.cores
    }

    pub fn into_cores(self) -> Vec<DenseTensor<T>> {
        self.cores
    }

    pub fn ndim(&self) -> usize {
        self.cores.len()
    }

    /// `(R_1, ..., R_{D+1})`, boundary ones included.
    pub fn ranks(&self) -> Vec<usize> {
        std::iter::once(1)
            .chain(self.cores.iter().map(|c| c.dims()[2]))
            .collect()
    }

    pub fn mode_sizes(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dims()[1]).collect()
    }

    pub fn reconstruct(&self) -> Result<DenseTensor<T>> {
        // left: (I_1 ... I_d) x R_{d+1}, column-major, grown core by core
        let first = &self.cores[0];
        let mut left = Matrix::from_col_major(first.dims()[1], first.dims()[2], first.values().to_vec())?;
        for core in &self.cores[1..] {
            let (r, n, r_next) = (core.dims()[0], core.dims()[1], core.dims()[2]);
            let right = Matrix::from_col_major(r, n * r_next, core.values().to_vec())?;
            let prod = left.matmul(&right)?;
            left = Matrix::from_col_major(prod.rows() * n, r_next, prod.into_values())?;
        }
        DenseTensor::from_dims(&self.mode_sizes(), left.into_values())
    }
}

impl<T: Scalar> ParameterCount for TtDecomp<T> {
    /// `Σ_d R_d I_d R_{d+1}`.
    fn parameter_count(&self) -> usize {
        self.cores.iter().map(DenseTensor::len).sum()
    }
}

/// How TT-SVD truncates each unfolding.
#[derive(Debug, Clone, PartialEq)]
pub enum TtTruncation<T> {
    /// Cap on each internal rank `R_2..R_D` (length `D - 1`).
    MaxRanks(Vec<usize>),
    /// Relative accuracy `ε`: the result satisfies `‖X - X̂‖ ≤ ε ‖X‖`.
    Tolerance(T),
}

/// Sequential SVD sweep: unfold, truncate, carry `S Vᵀ` into the next step.
///
/// In tolerance mode each step discards the largest tail of singular values
/// whose 2-norm stays within `δ = ε ‖X‖ / sqrt(D - 1)`.
pub fn tt_svd_fit<T: Scalar>(target: &DenseTensor<T>, truncation: &TtTruncation<T>) -> Result<TtDecomp<T>> {
    let dims = target.dims().to_vec();
    let d = dims.len();
    let delta = match truncation {
        TtTruncation::MaxRanks(ranks) => {
            if ranks.len() + 1 != d {
                return Err(Error::dim(format!(
                    "{} max ranks given for {d} modes (need {})",
                    ranks.len(),
                    d - 1
                )));
            }
            if ranks.iter().any(|&r| r == 0) {
                return Err(Error::Rank("max ranks must be at least 1".into()));
            }
            None
        }
        TtTruncation::Tolerance(eps) => {
            if !(*eps >= T::zero()) {
                return Err(Error::arg("tolerance must be non-negative"));
            }
            let denom = T::of_usize(d.saturating_sub(1).max(1)).sqrt();
            Some(*eps * target.frobenius_norm() / denom)
        }
    };

    let mut cores = Vec::with_capacity(d);
    let mut carry = target.values().to_vec();
    let mut rank_prev = 1;
    for (k, &n) in dims.iter().enumerate().take(d - 1) {
        let rows = rank_prev * n;
        let cols = carry.len() / rows;
        let c = Matrix::from_col_major(rows, cols, carry)?;
        let dec = svd(&c)?;
        let available = dec.s.len();
        let keep = match (&truncation, delta) {
            (TtTruncation::MaxRanks(ranks), _) => ranks[k].min(available),
            (_, Some(delta)) => {
                let mut keep = available;
                let mut tail = T::zero();
                while keep > 1 {
                    let s = dec.s[keep - 1];
                    if tail + s * s > delta * delta {
                        break;
                    }
                    tail += s * s;
                    keep -= 1;
                }
                keep
            }
            _ => unreachable!(),
        };
        let core = DenseTensor::from_dims(&[rank_prev, n, keep], dec.u.leading_cols(keep).into_values())?;
        cores.push(core);
        // S Vᵀ, keep x cols
        let mut next = Vec::with_capacity(keep * cols);
        for j in 0..cols {
            for r in 0..keep {
                next.push(dec.s[r] * dec.v.get(j, r));
            }
        }
        crate::metrics::flops::record((keep * cols) as u64, 0);
        carry = next;
        rank_prev = keep;
    }
    cores.push(DenseTensor::from_dims(&[rank_prev, dims[d - 1], 1], carry)?);
    TtDecomp::new(cores)
}
