use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// `N` input rows of dimension `D` with one target each.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    inputs: Matrix<T>,
    targets: Vec<T>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(inputs: Matrix<T>, targets: Vec<T>) -> Result<Self> {
        if inputs.rows() != targets.len() {
            return Err(Error::dim(format!(
                "{} input rows but {} targets",
                inputs.rows(),
                targets.len()
            )));
        }
        if inputs.cols() == 0 {
            return Err(Error::dim("inputs need at least one column"));
        }
        if inputs.values().iter().chain(&targets).any(|v| !v.is_finite()) {
            return Err(Error::arg("dataset contains non-finite values"));
        }
        Ok(Self { inputs, targets })
    }

    pub fn from_rows(rows: &[Vec<T>], targets: Vec<T>) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?, targets)
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn inputs(&self) -> &Matrix<T> {
        &self.inputs
    }

    pub fn targets(&self) -> &[T] {
        &self.targets
    }

    pub fn input(&self, n: usize, d: usize) -> T {
        self.inputs.get(n, d)
    }

    pub fn subset(&self, rows: &[usize]) -> Self {
        let inputs = Matrix::from_fn(rows.len(), self.dim(), |r, c| self.inputs.get(rows[r], c));
        let targets = rows.iter().map(|&r| self.targets[r]).collect();
        Self { inputs, targets }
    }

    /// Seeded disjoint split: the first `ceil(2N/3)` rows of a shuffled
    /// order train, the rest test.
    pub fn split_train_test(&self, seed: u64) -> Result<(Self, Self)> {
        let n = self.len();
        if n < 3 {
            return Err(Error::arg(format!("need at least 3 samples to split, got {n}")));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_train = (2 * n).div_ceil(3);
        let (train, test) = order.split_at(n_train);
        Ok((self.subset(train), self.subset(test)))
    }

    /// Per-column `(min, max)`.
    pub fn column_ranges(&self) -> Vec<(T, T)> {
        (0..self.dim())
            .map(|c| {
                self.inputs
                    .col(c)
                    .iter()
                    .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_mismatch_and_nan() {
        assert!(Dataset::from_rows(&[vec![1.0], vec![2.0]], vec![1.0]).is_err());
        assert!(Dataset::from_rows(&[vec![f64::NAN]], vec![1.0]).is_err());
    }

    #[test]
    fn split_is_disjoint_and_sized() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let ds = Dataset::from_rows(&rows, (0..10).map(|i| i as f64).collect()).unwrap();
        let (tr, te) = ds.split_train_test(4).unwrap();
        assert_eq!(tr.len(), 7);
        assert_eq!(te.len(), 3);
        let mut all: Vec<f64> = tr.targets().iter().chain(te.targets()).copied().collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..10).map(|i| i as f64).collect::<Vec<_>>());
        let (tr2, _) = ds.split_train_test(4).unwrap();
        assert_eq!(tr, tr2);
        let tiny = ds.subset(&[0, 1]);
        assert!(tiny.split_train_test(0).is_err());
    }
}
