//! Fully connected layer with tensor-train weights.
//!
//! The weight matrix `W` of size `(I_1 ... I_D) x (J_1 ... J_D)` is stored as
//! cores of shape `(R_d, I_d, J_d, R_{d+1})`:
//!
//! ```text
//! W[(i_1..i_D), (j_1..j_D)] = G_1[:, i_1, j_1, :] G_2[:, i_2, j_2, :] ... G_D[:, i_D, j_D, :]
//! ```
//!
//! Row and column multi-indices are linearized column-major, matching
//! [`tensorize`](crate::tensor::tensorize). The forward pass contracts the
//! input with one core at a time from the last core to the first and never
//! forms `W`. Bias terms are not modelled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::decomp::{tt_svd_fit, ParameterCount, TtDecomp, TtTruncation};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::metrics::flops;
use crate::scalar::Scalar;
use crate::tensor::{tensorize, untensorize, DenseTensor, Shape};

#[derive(Debug, Clone, PartialEq)]
pub struct TtLayer<T> {
    cores: Vec<DenseTensor<T>>,
}

/// Gradients of a scalar loss with respect to the cores and the input.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients<T> {
    pub cores: Vec<DenseTensor<T>>,
    pub input: DenseTensor<T>,
}

/// Intermediate states of a forward pass. `states[d]` is the input after
/// contraction with cores `d+1..D`, laid out as `(j_1..j_d, r_{d+1}, i_{d+1}..i_D)`.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    states: Vec<Vec<T>>,
    output: DenseTensor<T>,
}

impl<T> ForwardCache<T> {
    pub fn output(&self) -> &DenseTensor<T> {
        &self.output
    }

    /// Scalars held by the cached states.
    pub fn memory(&self) -> usize {
        self.states.iter().map(Vec::len).sum()
    }
}

/// Contraction of a state `(A, P, Q, B)` with a core viewed as
/// `(R, I, J, S)`. Forward (`transpose = false`): the state is `(A, J, S, B)`
/// and the result `(A, R, I, B)`. Transposed: the state is `(A, R, I, B)`
/// and the result `(A, J, S, B)`.
fn contract_core<T: Scalar>(core: &DenseTensor<T>, state: &[T], a: usize, b: usize, transpose: bool) -> Vec<T> {
    let [r, i, j, s] = [core.dims()[0], core.dims()[1], core.dims()[2], core.dims()[3]];
    let g = core.values();
    let gidx = |rr: usize, ii: usize, jj: usize, ss: usize| rr + r * (ii + i * (jj + j * ss));
    let (out_p, out_q, in_p, in_q) = if transpose { (j, s, r, i) } else { (r, i, j, s) };
    let mut out = vec![T::zero(); a * out_p * out_q * b];
    for bb in 0..b {
        for oq in 0..out_q {
            for op in 0..out_p {
                let dst = a * (op + out_p * (oq + out_q * bb));
                for iq in 0..in_q {
                    for ip in 0..in_p {
                        let w = if transpose { g[gidx(ip, iq, op, oq)] } else { g[gidx(op, oq, ip, iq)] };
                        if w == T::zero() {
                            continue;
                        }
                        let src = a * (ip + in_p * (iq + in_q * bb));
                        for (o, &x) in out[dst..dst + a].iter_mut().zip(&state[src..src + a]) {
                            *o += w * x;
                        }
                    }
                }
            }
        }
    }
    flops::record_dots(a * out_p * out_q * b, in_p * in_q);
    out
}

impl<T: Scalar> TtLayer<T> {
    pub fn new(cores: Vec<DenseTensor<T>>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::dim("TT layer needs at least one core"));
        }
        for (d, c) in cores.iter().enumerate() {
            if c.ndim() != 4 {
                return Err(Error::dim(format!("core {d} has {} modes, expected 4", c.ndim())));
            }
        }
        if cores[0].dims()[0] != 1 || cores[cores.len() - 1].dims()[3] != 1 {
            return Err(Error::Rank("boundary TT ranks must be 1".into()));
        }
        for (d, pair) in cores.windows(2).enumerate() {
            if pair[0].dims()[3] != pair[1].dims()[0] {
                return Err(Error::Rank(format!(
                    "cores {d} and {} disagree on the shared rank",
                    d + 1
                )));
            }
        }
        Ok(Self { cores })
    }

    fn full_ranks(output_shape: &[usize], input_shape: &[usize], ranks: &[usize]) -> Result<Vec<usize>> {
        let d = output_shape.len();
        if d == 0 || input_shape.len() != d {
            return Err(Error::dim(format!(
                "output shape {output_shape:?} and input shape {input_shape:?} need the same nonzero length"
            )));
        }
        if ranks.len() + 1 != d {
            return Err(Error::dim(format!("{} internal ranks given for {d} cores", ranks.len())));
        }
        if ranks.contains(&0) {
            return Err(Error::Rank("TT ranks must be at least 1".into()));
        }
        Ok(std::iter::once(1).chain(ranks.iter().copied()).chain(std::iter::once(1)).collect())
    }

    /// Layer with all-zero cores.
    pub fn zeros(output_shape: &[usize], input_shape: &[usize], ranks: &[usize]) -> Result<Self> {
        let full = Self::full_ranks(output_shape, input_shape, ranks)?;
        let cores = (0..output_shape.len())
            .map(|d| {
                Ok(DenseTensor::zeros(Shape::new(vec![
                    full[d],
                    output_shape[d],
                    input_shape[d],
                    full[d + 1],
                ])?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(cores)
    }

    /// Seeded Gaussian cores, core `d` scaled by `(J_d R_{d+1})^{-1/2}` so a
    /// unit-variance input gives outputs of unit variance in expectation.
    pub fn random(output_shape: &[usize], input_shape: &[usize], ranks: &[usize], seed: u64) -> Result<Self> {
        let full = Self::full_ranks(output_shape, input_shape, ranks)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cores = (0..output_shape.len())
            .map(|d| {
                let shape = Shape::new(vec![full[d], output_shape[d], input_shape[d], full[d + 1]])?;
                let scale = 1.0 / ((input_shape[d] * full[d + 1]) as f64).sqrt();
                Ok(DenseTensor::from_fn(shape, |_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    T::lit(z * scale)
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(cores)
    }

    pub fn cores(&self) -> &[DenseTensor<T>] {
        &self.cores
    }

    pub fn cores_mut(&mut self) -> &mut [DenseTensor<T>] {
        &mut self.cores
    }

    pub fn ndim(&self) -> usize {
        self.cores.len()
    }

    /// `(I_1, ..., I_D)`.
    pub fn output_shape(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dims()[1]).collect()
    }

    /// `(J_1, ..., J_D)`.
    pub fn input_shape(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dims()[2]).collect()
    }

    /// `(R_1, ..., R_{D+1})`.
    pub fn ranks(&self) -> Vec<usize> {
        std::iter::once(1).chain(self.cores.iter().map(|c| c.dims()[3])).collect()
    }

    /// `(Π I_d) * (Π J_d)`, the size of the dense weight matrix.
    pub fn dense_parameter_count(&self) -> u128 {
        self.cores
            .iter()
            .map(|c| (c.dims()[1] * c.dims()[2]) as u128)
            .product()
    }

    fn check_input(&self, x: &DenseTensor<T>) -> Result<()> {
        let expected = self.input_shape();
        if x.dims() != expected.as_slice() {
            return Err(Error::dim(format!(
                "input of shape {:?}, layer expects {expected:?}",
                x.dims()
            )));
        }
        Ok(())
    }

    /// `W x` for an input tensor of shape `(J_1, ..., J_D)`.
    pub fn forward(&self, x: &DenseTensor<T>) -> Result<DenseTensor<T>> {
        Ok(self.forward_cached(x)?.output)
    }

    pub fn forward_cached(&self, x: &DenseTensor<T>) -> Result<ForwardCache<T>> {
        self.check_input(x)?;
        let input = self.input_shape();
        let output = self.output_shape();
        let d = self.ndim();
        let mut states = vec![Vec::new(); d];
        let mut state = x.values().to_vec();
        for k in (0..d).rev() {
            states[k] = state;
            let a: usize = input[..k].iter().product();
            let b: usize = output[k + 1..].iter().product();
            state = contract_core(&self.cores[k], &states[k], a, b, false);
        }
        Ok(ForwardCache {
            states,
            output: DenseTensor::from_dims(&output, state)?,
        })
    }

    /// Gradients of `<upstream, W x>` with respect to every core and `x`.
    ///
    /// A left-to-right sweep contracts `upstream` with cores `1..d`; combined
    /// with the cached forward state this yields the core-`d` gradient, and
    /// the finished sweep is `Wᵀ upstream`.
    pub fn backward(&self, x: &DenseTensor<T>, upstream: &DenseTensor<T>) -> Result<LayerGradients<T>> {
        let cache = self.forward_cached(x)?;
        self.backward_cached(&cache, upstream)
    }

    pub fn backward_cached(&self, cache: &ForwardCache<T>, upstream: &DenseTensor<T>) -> Result<LayerGradients<T>> {
        let input = self.input_shape();
        let output = self.output_shape();
        if upstream.dims() != output.as_slice() {
            return Err(Error::dim(format!(
                "upstream gradient of shape {:?}, layer output is {output:?}",
                upstream.dims()
            )));
        }
        let d = self.ndim();
        let mut left = upstream.values().to_vec();
        let mut grads = Vec::with_capacity(d);
        for k in 0..d {
            let core = &self.cores[k];
            let [r, i, j, s] = [core.dims()[0], core.dims()[1], core.dims()[2], core.dims()[3]];
            let a: usize = input[..k].iter().product();
            let b: usize = output[k + 1..].iter().product();
            // left: (A, R, I, B); state: (A, J, S, B)
            let state = &cache.states[k];
            let mut g = vec![T::zero(); r * i * j * s];
            for ss in 0..s {
                for jj in 0..j {
                    for ii in 0..i {
                        for rr in 0..r {
                            let mut acc = T::zero();
                            for bb in 0..b {
                                let lo = a * (rr + r * (ii + i * bb));
                                let so = a * (jj + j * (ss + s * bb));
                                acc += left[lo..lo + a]
                                    .iter()
                                    .zip(&state[so..so + a])
                                    .map(|(&u, &z)| u * z)
                                    .sum::<T>();
                            }
                            g[rr + r * (ii + i * (jj + j * ss))] = acc;
                        }
                    }
                }
            }
            flops::record_dots(r * i * j * s, a * b);
            grads.push(DenseTensor::from_dims(core.dims(), g)?);
            left = contract_core(core, &left, a, b, true);
        }
        Ok(LayerGradients {
            cores: grads,
            input: DenseTensor::from_dims(&input, left)?,
        })
    }

    /// The dense weight matrix `(Π I_d) x (Π J_d)`.
    pub fn to_dense(&self) -> Result<DenseTensor<T>> {
        let d = self.ndim();
        let paired: Vec<DenseTensor<T>> = self
            .cores
            .iter()
            .map(|c| {
                let dims = c.dims();
                c.reshape(&[dims[0], dims[1] * dims[2], dims[3]])
            })
            .collect::<Result<_>>()?;
        let full = TtDecomp::new(paired)?.reconstruct()?;
        let interleaved: Vec<usize> = self
            .output_shape()
            .iter()
            .zip(self.input_shape())
            .flat_map(|(&i, j)| [i, j])
            .collect();
        let t = full.reshape(&interleaved)?;
        // (i1, j1, i2, j2, ..) -> (i1..iD, j1..jD)
        let perm: Vec<usize> = (0..d).map(|k| 2 * k).chain((0..d).map(|k| 2 * k + 1)).collect();
        untensorize(&t.permute(&perm)?, d)
    }

    /// Applies `W` to a dense vector through the dense weight matrix; the
    /// uncompressed reference for [`TtLayer::forward`].
    pub fn dense_matvec(weights: &Matrix<T>, x: &[T]) -> Result<Vec<T>> {
        weights.matvec(x)
    }
}

impl<T: Scalar> ParameterCount for TtLayer<T> {
    /// `Σ_d R_d I_d J_d R_{d+1}`.
    fn parameter_count(&self) -> usize {
        self.cores.iter().map(DenseTensor::len).sum()
    }
}

/// Compresses a pretrained dense weight matrix. The matrix is tensorized
/// into `(I_1..I_D, J_1..J_D)`, reordered to the paired modes
/// `(I_1 J_1, ..., I_D J_D)` and decomposed with TT-SVD.
pub fn compress_dense_layer<T: Scalar>(
    weights: &DenseTensor<T>,
    row_factors: &Shape,
    col_factors: &Shape,
    truncation: &TtTruncation<T>,
) -> Result<TtLayer<T>> {
    let d = row_factors.ndim();
    if col_factors.ndim() != d {
        return Err(Error::dim(format!(
            "row factors {:?} and column factors {:?} need the same length",
            row_factors.dims(),
            col_factors.dims()
        )));
    }
    let t = tensorize(weights, row_factors, col_factors)?;
    let perm: Vec<usize> = (0..d).flat_map(|k| [k, d + k]).collect();
    let paired_dims: Vec<usize> = row_factors
        .dims()
        .iter()
        .zip(col_factors.dims())
        .map(|(&i, &j)| i * j)
        .collect();
    let paired = t.permute(&perm)?.reshape(&paired_dims)?;
    let tt = tt_svd_fit(&paired, truncation)?;
    let cores = tt
        .into_cores()
        .into_iter()
        .zip(row_factors.dims().iter().zip(col_factors.dims()))
        .map(|(c, (&i, &j))| {
            let dims = c.dims();
            c.reshape(&[dims[0], i, j, dims[2]])
        })
        .collect::<Result<Vec<_>>>()?;
    TtLayer::new(cores)
}

/// Seeded factorized layer for training from scratch.
pub fn init_factorized_layer<T: Scalar>(
    input_shape: &[usize],
    output_shape: &[usize],
    ranks: &[usize],
    seed: u64,
) -> Result<TtLayer<T>> {
    TtLayer::random(output_shape, input_shape, ranks, seed)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub layer: TtLayer<T>,
    /// Loss before each step and after the final step.
    pub losses: Vec<f64>,
}

/// Mean squared loss `1/(2N) Σ ‖W x_n - t_n‖²` over the samples.
pub fn squared_loss<T: Scalar>(layer: &TtLayer<T>, samples: &[(DenseTensor<T>, DenseTensor<T>)]) -> Result<f64> {
    let mut total = 0.0;
    for (x, t) in samples {
        let y = layer.forward(x)?;
        total += y.sub(t)?.values().iter().map(|v| v.as_f64().powi(2)).sum::<f64>();
    }
    Ok(total / (2.0 * samples.len().max(1) as f64))
}

const DIVERGENCE_LOSS: f64 = 1e12;

/// Full-batch gradient descent on [`squared_loss`], updating the cores in place.
pub fn train_factorized<T: Scalar>(
    layer: TtLayer<T>,
    samples: &[(DenseTensor<T>, DenseTensor<T>)],
    steps: usize,
    step_size: T,
) -> Result<TrainOutcome<T>> {
    if !(step_size >= T::zero()) {
        return Err(Error::arg("step size must be non-negative"));
    }
    if samples.is_empty() {
        return Err(Error::arg("training needs at least one sample"));
    }
    let mut layer = layer;
    let mut losses = Vec::with_capacity(steps + 1);
    let scale = T::one() / T::of_usize(samples.len());
    for step in 0..=steps {
        let mut loss = 0.0;
        let mut acc: Vec<Vec<T>> = layer.cores.iter().map(|c| vec![T::zero(); c.len()]).collect();
        for (x, t) in samples {
            let cache = layer.forward_cached(x)?;
            let residual = cache.output().sub(t)?;
            loss += residual.values().iter().map(|v| v.as_f64().powi(2)).sum::<f64>();
            if step < steps {
                let g = layer.backward_cached(&cache, &residual)?;
                for (a, gc) in acc.iter_mut().zip(&g.cores) {
                    for (av, &gv) in a.iter_mut().zip(gc.values()) {
                        *av += gv;
                    }
                }
            }
        }
        loss /= 2.0 * samples.len() as f64;
        if !loss.is_finite() || loss > DIVERGENCE_LOSS {
            return Err(Error::Training { step, loss });
        }
        losses.push(loss);
        if step == steps {
            break;
        }
        for (core, a) in layer.cores.iter_mut().zip(&acc) {
            for (c, &g) in core.values_mut().iter_mut().zip(a) {
                *c -= step_size * scale * g;
            }
        }
    }
    Ok(TrainOutcome { layer, losses })
}
