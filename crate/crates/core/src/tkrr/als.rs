use serde::{Deserialize, Serialize};

use super::{build_feature_network, Dataset, FeatureMap, FeatureTensorNetwork, Prediction};
use crate::decomp::CpDecomp;
use crate::error::{Error, Result};
use crate::linalg::{solve_spd_jittered, Matrix};
use crate::metrics::flops::{self, count_scope};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct TkrrOptions {
    pub rank: usize,
    pub regularization: f64,
    pub max_sweeps: usize,
    /// Early stop when a sweep improves the objective by less than this, relatively.
    pub tol: f64,
    pub seed: u64,
}

impl Default for TkrrOptions {
    fn default() -> Self {
        Self {
            rank: 10,
            regularization: 1e-6,
            max_sweeps: 10,
            tol: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JitterEvent {
    pub sweep: usize,
    pub factor: usize,
    pub jitter: f64,
    pub condition: f64,
}

/// Counted operations per ALS phase, summed over all sweeps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseFlops {
    /// Normal-equation Gram assembly, the `N (IR)^2` term.
    pub gram: u64,
    /// Cholesky factorization and triangular solves, the `(IR)^3` term.
    pub solve: u64,
    pub total: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Regularized objective after every factor update.
    pub objective: Vec<f64>,
    /// Objective at the end of each sweep.
    pub sweep_objective: Vec<f64>,
    pub sweeps: usize,
    pub jitter_events: Vec<JitterEvent>,
    /// Sweeps whose line-search extrapolation was accepted.
    pub extrapolations: usize,
    pub clipped_inputs: usize,
    pub flops: PhaseFlops,
}

/// Kernel ridge regression with CP-structured weights.
#[derive(Debug, Clone)]
pub struct TkrrModel<T> {
    weights: CpDecomp<T>,
    feature_map: FeatureMap<T>,
    regularization: T,
    diagnostics: FitDiagnostics,
}

impl<T: Scalar> TkrrModel<T> {
    /// Wraps existing weights; diagnostics stay empty.
    pub fn from_weights(weights: CpDecomp<T>, feature_map: FeatureMap<T>, regularization: T) -> Result<Self> {
        if weights.ndim() != feature_map.dims() || weights.mode_sizes().iter().any(|&s| s != feature_map.basis_count()) {
            return Err(Error::dim(format!(
                "weights of shape {:?} do not match a {}-dimensional map with {} basis functions",
                weights.mode_sizes(),
                feature_map.dims(),
                feature_map.basis_count()
            )));
        }
        Ok(Self {
            weights,
            feature_map,
            regularization,
            diagnostics: FitDiagnostics::default(),
        })
    }

    /// Maps `data` and runs [`tkrr_fit`].
    pub fn fit(feature_map: &FeatureMap<T>, data: &Dataset<T>, opts: &TkrrOptions) -> Result<Self> {
        let ftn = build_feature_network(feature_map, data)?;
        tkrr_fit(&ftn, data.targets(), opts)
    }

    pub fn weights(&self) -> &CpDecomp<T> {
        &self.weights
    }

    pub fn feature_map(&self) -> &FeatureMap<T> {
        &self.feature_map
    }

    pub fn regularization(&self) -> T {
        self.regularization
    }

    pub fn diagnostics(&self) -> &FitDiagnostics {
        &self.diagnostics
    }

    pub fn predict(&self, inputs: &Matrix<T>) -> Result<Prediction<T>> {
        if inputs.cols() != self.feature_map.dims() {
            return Err(Error::dim(format!(
                "inputs have {} columns, model expects {}",
                inputs.cols(),
                self.feature_map.dims()
            )));
        }
        let rank = self.weights.rank();
        let i = self.feature_map.basis_count();
        let mut values = Vec::with_capacity(inputs.rows());
        let mut clipped = Vec::with_capacity(inputs.rows());
        let mut buf = vec![T::zero(); i];
        let mut acc = vec![T::zero(); rank];
        for n in 0..inputs.rows() {
            acc.copy_from_slice(self.weights.weights());
            let mut any = false;
            for (d, factor) in self.weights.factors().iter().enumerate() {
                any |= self.feature_map.map_into(inputs.get(n, d), d, &mut buf)?;
                for (r, a) in acc.iter_mut().enumerate() {
                    let dot: T = factor.col(r).iter().zip(&buf).map(|(&w, &p)| w * p).sum();
                    *a *= dot;
                }
            }
            let d = self.feature_map.dims();
            flops::record_dots(d * rank, i);
            flops::record((d * rank) as u64, rank as u64 - 1);
            values.push(acc.iter().copied().sum());
            clipped.push(any);
        }
        Ok(Prediction { values, clipped })
    }
}

/// Alternating least squares over the CP factors of the weight tensor.
///
/// Factor `d` is updated with all others fixed by solving the ridge problem
/// `min ‖y - A_d vec(W_d)‖² + λ‖W_d‖²`, where row `n` of `A_d` is
/// `φ(x_{n,d}) ⊗ c_n` and `c_n[r] = Π_{k≠d} φ(x_{n,k})ᵀ W_k[:, r]`. Each
/// update minimizes `Σ_n (y_n - ŷ_n)² + λ Σ_k ‖W_k‖²` exactly over one
/// block, so that objective never increases. Sweeps run `d = 0..D` forward.
/// From the second sweep on, every factor is extrapolated along the sweep's
/// displacement by `(sweep + 1)^{1/3}` and the move is kept only when it
/// lowers the objective.
pub fn tkrr_fit<T: Scalar>(ftn: &FeatureTensorNetwork<T>, y: &[T], opts: &TkrrOptions) -> Result<TkrrModel<T>> {
    if opts.rank == 0 {
        return Err(Error::Rank("T-KRR rank must be at least 1".into()));
    }
    if !(opts.regularization >= 0.0) {
        return Err(Error::arg("regularization must be non-negative"));
    }
    if y.len() != ftn.samples() {
        return Err(Error::dim(format!("{} targets for {} samples", y.len(), ftn.samples())));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("non-finite targets"));
    }
    let ((weights, mut diagnostics), total) = count_scope("tkrr-fit", || als(ftn, y, opts));
    let weights = weights?;
    diagnostics.flops.total = total.total();
    diagnostics.clipped_inputs = ftn.clipped().iter().filter(|&&c| c).count();
    Ok(TkrrModel {
        weights,
        feature_map: ftn.feature_map().clone(),
        regularization: T::lit(opts.regularization),
        diagnostics,
    })
}

fn als<T: Scalar>(
    ftn: &FeatureTensorNetwork<T>,
    y: &[T],
    opts: &TkrrOptions,
) -> (Result<CpDecomp<T>>, FitDiagnostics) {
    let mut diag = FitDiagnostics::default();
    let result = als_inner(ftn, y, opts, &mut diag);
    (result, diag)
}

fn hadamard_into<T: Scalar>(dst: &mut [T], a: &[T], b: &[T]) {
    for ((d, &x), &z) in dst.iter_mut().zip(a).zip(b) {
        *d = x * z;
    }
    flops::record(dst.len() as u64, 0);
}

fn als_inner<T: Scalar>(
    ftn: &FeatureTensorNetwork<T>,
    y: &[T],
    opts: &TkrrOptions,
    diag: &mut FitDiagnostics,
) -> Result<CpDecomp<T>> {
    let n = ftn.samples();
    let d = ftn.dims();
    let i = ftn.basis_count();
    let rank = opts.rank;
    let q = i * rank;
    let lambda = T::lit(opts.regularization);

    let mut w = CpDecomp::random(&vec![i; d], rank, opts.seed)?;
    // projections[k] = Φ_k W_k, N x R
    let mut projections: Vec<Matrix<T>> = (0..d)
        .map(|k| ftn.features()[k].matmul(w.factor(k)))
        .collect::<Result<_>>()?;
    let mut factor_norms: Vec<T> = (0..d).map(|k| sq_norm(w.factor(k))).collect();

    let mut prev_sweep: Option<f64> = None;
    let mut start = w.clone();
    for sweep in 0..opts.max_sweeps {
        // suffix[k] = Π_{j>k} projections[j], built from the current factors
        let mut suffix = vec![Matrix::from_fn(n, rank, |_, _| T::one()); d];
        for k in (0..d.saturating_sub(1)).rev() {
            let (head, tail) = suffix.split_at_mut(k + 1);
            hadamard_into(head[k].values_mut(), tail[0].values(), projections[k + 1].values());
        }
        let mut prefix = Matrix::from_fn(n, rank, |_, _| T::one());
        let mut coeff = Matrix::zeros(n, rank);
        let mut objective = 0.0;

        for k in 0..d {
            hadamard_into(coeff.values_mut(), prefix.values(), suffix[k].values());

            // design rows φ(x_{n,k}) ⊗ c_n, unknown index i + I r
            let phi = &ftn.features()[k];
            let design = Matrix::from_fn(n, q, |s, col| phi.get(s, col % i) * coeff.get(s, col / i));
            flops::record((n * q) as u64, 0);

            let (mut gram, gram_count) = count_scope("tkrr-gram", || design.gram());
            diag.flops.gram += gram_count.total();
            gram.add_diagonal(lambda);
            let rhs = design.t_matvec(y)?;
            let (sol, solve_count) = count_scope("tkrr-solve", || solve_spd_jittered(&gram, &rhs, 1e-10));
            diag.flops.solve += solve_count.total();
            let sol = sol?;
            if sol.jitter > 0.0 {
                diag.jitter_events.push(JitterEvent {
                    sweep,
                    factor: k,
                    jitter: sol.jitter,
                    condition: sol.condition,
                });
            }
            let updated = Matrix::from_col_major(i, rank, sol.x)?;
            factor_norms[k] = sq_norm(&updated);
            *w.factor_mut(k) = updated;
            projections[k] = phi.matmul(w.factor(k))?;

            // ŷ_n = Σ_r c_{n,r} P_k[n, r]
            let mut loss = T::zero();
            for s in 0..n {
                let mut pred = T::zero();
                for r in 0..rank {
                    pred += coeff.get(s, r) * projections[k].get(s, r);
                }
                let e = y[s] - pred;
                loss += e * e;
            }
            flops::record((n * rank + n) as u64, (n * rank + n) as u64);
            let penalty: T = factor_norms.iter().copied().sum();
            objective = (loss + lambda * penalty).as_f64();
            diag.objective.push(objective);

            let prev_prefix = prefix.clone();
            hadamard_into(prefix.values_mut(), prev_prefix.values(), projections[k].values());
        }
        if sweep > 0 {
            let step = T::lit(((sweep + 1) as f64).cbrt());
            if let Some((cand, cand_proj, cand_obj)) = extrapolate(ftn, y, lambda, &start, &w, step)? {
                if cand_obj < objective {
                    factor_norms = (0..d).map(|k| sq_norm(cand.factor(k))).collect();
                    w = cand;
                    projections = cand_proj;
                    objective = cand_obj;
                    diag.extrapolations += 1;
                }
            }
        }
        start = w.clone();
        diag.sweeps = sweep + 1;
        diag.sweep_objective.push(objective);
        if !objective.is_finite() {
            return Err(Error::Solver {
                message: format!("non-finite objective in sweep {sweep}"),
                condition: f64::NAN,
            });
        }
        if let Some(prev) = prev_sweep {
            let scale = prev.abs().max(f64::MIN_POSITIVE);
            if (prev - objective) / scale < opts.tol {
                break;
            }
        }
        if objective == 0.0 {
            break;
        }
        prev_sweep = Some(objective);
    }
    Ok(w)
}

type Candidate<T> = (CpDecomp<T>, Vec<Matrix<T>>, f64);

/// Moves every factor to `from + step (to - from)` and evaluates the
/// regularized objective there.
fn extrapolate<T: Scalar>(
    ftn: &FeatureTensorNetwork<T>,
    y: &[T],
    lambda: T,
    from: &CpDecomp<T>,
    to: &CpDecomp<T>,
    step: T,
) -> Result<Option<Candidate<T>>> {
    let d = to.ndim();
    let n = ftn.samples();
    let rank = to.rank();
    let factors: Vec<Matrix<T>> = (0..d)
        .map(|k| {
            let (a, b) = (from.factor(k), to.factor(k));
            Matrix::from_fn(b.rows(), b.cols(), |r, c| a.get(r, c) + step * (b.get(r, c) - a.get(r, c)))
        })
        .collect();
    flops::record((2 * d * to.factor(0).values().len()) as u64, (2 * d * to.factor(0).values().len()) as u64);
    let proj: Vec<Matrix<T>> = (0..d)
        .map(|k| ftn.features()[k].matmul(&factors[k]))
        .collect::<Result<_>>()?;
    let mut loss = T::zero();
    for s in 0..n {
        let mut pred = T::zero();
        for r in 0..rank {
            let mut p = T::one();
            for m in &proj {
                p *= m.get(s, r);
            }
            pred += p;
        }
        let e = y[s] - pred;
        loss += e * e;
    }
    flops::record((n * rank * d + n) as u64, (n * rank + n) as u64);
    let penalty: T = factors.iter().map(sq_norm).sum();
    let obj = (loss + lambda * penalty).as_f64();
    if !obj.is_finite() {
        return Ok(None);
    }
    Ok(Some((CpDecomp::new(vec![T::one(); rank], factors)?, proj, obj)))
}

fn sq_norm<T: Scalar>(m: &Matrix<T>) -> T {
    let v = m.frobenius_norm();
    v * v
}
