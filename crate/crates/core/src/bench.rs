//! Benchmark drivers: synthetic data, the regression grid, the TT layer grid
//! and layer compression. Each driver returns report rows ready for
//! [`build_report`](crate::metrics::build_report).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::decomp::{CpDecomp, ParameterCount, TtTruncation};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::metrics::{
    analytic_flops, count_scope, time_run, Accuracy, Algorithm, ComplexityParams, EfficiencyReport, RunConfig,
};
use crate::tensor::{checked_product, DenseTensor, Shape};
use crate::tkrr::{
    build_feature_network, rmse, tn_inner_product, Dataset, DenseRidgeModel, FeatureFamily, FeatureMap, TkrrModel,
    TkrrOptions,
};
use crate::ttlayer::{compress_dense_layer, TtLayer};

/// Default element cap for dense baselines.
pub const DEFAULT_DENSE_CAP: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub samples: usize,
    pub dims: usize,
    /// Standard deviation of the additive Gaussian noise.
    pub noise: f64,
    pub family: FeatureFamily,
    pub basis_count: usize,
    pub planted_rank: usize,
    pub bounds: (f64, f64),
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(samples: usize, dims: usize, noise: f64) -> Self {
        Self {
            samples,
            dims,
            noise,
            family: FeatureFamily::DeterministicFourier,
            basis_count: 4,
            planted_rank: 2,
            bounds: (0.0, 1.0),
            seed: 0,
        }
    }

    pub fn feature_map(&self) -> Result<FeatureMap<f64>> {
        FeatureMap::uniform(self.family, self.basis_count, self.dims, self.bounds.0, self.bounds.1)
    }
}

/// Uniform inputs on the domain, targets `⟨φ(x), W⟩ + noise` for a seeded
/// CP weight tensor `W`. Returns the data and the planted weights.
// Keeps planted factors independent of solver initializations drawn from the same seed.
const PLANT_STREAM: u64 = 0x5DEE_CE66_D1CE_0B0E;

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Dataset<f64>, CpDecomp<f64>)> {
    if spec.samples == 0 || spec.dims == 0 {
        return Err(Error::arg("synthetic data needs N >= 1 and D >= 1"));
    }
    if !(spec.noise >= 0.0 && spec.noise.is_finite()) {
        return Err(Error::arg("noise level must be finite and non-negative"));
    }
    let fm = spec.feature_map()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ PLANT_STREAM);
    let factors = (0..spec.dims)
        .map(|_| Matrix::from_fn(spec.basis_count, spec.planted_rank, |_, _| rng.random_range(-1.0..=1.0)))
        .collect();
    let planted = CpDecomp::new(vec![1.0; spec.planted_rank], factors)?;
    let (lo, hi) = spec.bounds;
    let inputs = Matrix::from_fn(spec.samples, spec.dims, |_, _| rng.random_range(lo..=hi));
    let placeholder = Dataset::new(inputs, vec![0.0; spec.samples])?;
    let ftn = build_feature_network(&fm, &placeholder)?;
    let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::arg(e.to_string()))?;
    let targets = (0..spec.samples)
        .map(|n| Ok(tn_inner_product(&ftn, n, &planted)? + noise.sample(&mut rng)))
        .collect::<Result<Vec<_>>>()?;
    Ok((Dataset::new(placeholder.inputs().clone(), targets)?, planted))
}

#[derive(Debug, Clone)]
pub struct TkrrBenchConfig {
    pub family: FeatureFamily,
    pub grid: Vec<usize>,
    pub rank: usize,
    pub regularization: f64,
    pub sweeps: usize,
    /// Relative objective improvement below which sweeps stop early;
    /// negative disables early stopping.
    pub tol: f64,
    pub repeats: usize,
    pub seed: u64,
    pub hardware: String,
    pub dense_cap: u128,
    /// Domain for every input dimension; `None` uses the data ranges.
    pub bounds: Option<(f64, f64)>,
    /// Skip the dense baseline entirely.
    pub skip_baseline: bool,
}

impl Default for TkrrBenchConfig {
    fn default() -> Self {
        Self {
            family: FeatureFamily::DeterministicFourier,
            grid: vec![2, 3, 4],
            rank: 20,
            regularization: 1e-6,
            sweeps: 10,
            tol: 1e-8,
            repeats: 3,
            seed: 0,
            hardware: "unspecified".into(),
            dense_cap: DEFAULT_DENSE_CAP,
            bounds: None,
            skip_baseline: false,
        }
    }
}

impl TkrrBenchConfig {
    fn validate(&self) -> Result<()> {
        if self.grid.is_empty() || self.grid.contains(&0) {
            return Err(Error::arg("grid of basis counts must be nonempty and positive"));
        }
        if self.repeats == 0 {
            return Err(Error::arg("repeats must be at least 1"));
        }
        if self.rank == 0 {
            return Err(Error::Rank("rank must be at least 1".into()));
        }
        Ok(())
    }
}

/// Saturating `I^D` as `u64`, `None` when it overflows.
fn dense_count(i: usize, d: usize) -> Option<u64> {
    u64::try_from(checked_product(&vec![i; d])).ok().filter(|&v| v != u64::MAX)
}

/// Regression benchmark over a grid of basis counts.
///
/// For every `I` the dense ridge baseline and T-KRR are fit on the same
/// seeded two-thirds split and scored by test RMSE. Timings cover feature
/// mapping and solving. A baseline over the dense cap becomes a
/// baseline-infeasible row.
pub fn run_tkrr_bench(data: &Dataset<f64>, cfg: &TkrrBenchConfig) -> Result<Vec<EfficiencyReport>> {
    cfg.validate()?;
    let (train, test) = data.split_train_test(cfg.seed)?;
    let d = data.dim();
    let mut rows = Vec::new();
    for &i in &cfg.grid {
        let fm = match cfg.bounds {
            Some((lo, hi)) => FeatureMap::uniform(cfg.family, i, d, lo, hi)?,
            None => FeatureMap::fit_bounds(cfg.family, i, data, 0.0)?,
        };
        let config = RunConfig {
            basis_count: Some(i),
            modes: Some(d),
            samples: Some(train.len()),
            rank: Some(cfg.rank),
            regularization: Some(cfg.regularization),
            seed: Some(cfg.seed),
            ..Default::default()
        };
        let params = ComplexityParams {
            i: i as u64,
            d: d as u32,
            n: train.len() as u64,
            r: cfg.rank as u64,
            j: 0,
        };
        let dense_params = dense_count(i, d);
        let network_params = Some(crate::decomp::cp_table_parameter_count(i as u64, d as u32, cfg.rank as u64));

        if !cfg.skip_baseline {
            let mut row = EfficiencyReport::new(Algorithm::RidgeDirect.id(), config.clone(), cfg.hardware.clone());
            row.dense_parameters = dense_params;
            row.network_parameters = network_params;
            row.flops.analytic = Some(analytic_flops(Algorithm::RidgeDirect, params) as f64);
            match DenseRidgeModel::fit(&fm, &train, cfg.regularization, cfg.dense_cap) {
                Err(e @ Error::BaselineInfeasible { .. }) => rows.push(row.infeasible(e.to_string())),
                Err(e) => return Err(e),
                Ok(_) => {
                    let mut last = None;
                    let timing = time_run(
                        || {
                            last = Some(count_scope("ridge-direct", || {
                                DenseRidgeModel::fit(&fm, &train, cfg.regularization, cfg.dense_cap)
                            }))
                        },
                        cfg.repeats,
                        0,
                    )?;
                    let (model, counter) = last.expect("at least one timed run");
                    let model = model?;
                    let pred = model.predict(test.inputs())?;
                    row.flops.measured = Some(counter.total());
                    row.wall_clock = Some(timing);
                    row.accuracy = Some(Accuracy {
                        metric: "rmse".into(),
                        value: rmse(&pred.values, test.targets()),
                    });
                    rows.push(row);
                }
            }
        }

        let opts = TkrrOptions {
            rank: cfg.rank,
            regularization: cfg.regularization,
            max_sweeps: cfg.sweeps,
            tol: cfg.tol,
            seed: cfg.seed,
        };
        let mut row = EfficiencyReport::new("tkrr-als", config, cfg.hardware.clone());
        row.dense_parameters = dense_params;
        row.network_parameters = network_params;
        let mut last = None;
        let timing = time_run(
            || last = Some(count_scope("tkrr-als", || TkrrModel::fit(&fm, &train, &opts))),
            cfg.repeats,
            0,
        )?;
        let (model, counter) = last.expect("at least one timed run");
        let model = model?;
        let sweeps = model.diagnostics().sweeps as f64;
        let pred = model.predict(test.inputs())?;
        row.flops.measured = Some(counter.total());
        row.flops.analytic = Some(sweeps * analytic_flops(Algorithm::TkrrAlsSweep, params) as f64);
        row.wall_clock = Some(timing);
        row.accuracy = Some(Accuracy {
            metric: "rmse".into(),
            value: rmse(&pred.values, test.targets()),
        });
        row.note = Some(format!("sweeps={}", model.diagnostics().sweeps));
        rows.push(row);
    }
    Ok(rows)
}

/// One layer configuration: `output_shape` `(I_d)`, `input_shape` `(J_d)`
/// and the `D - 1` internal ranks.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerShape {
    pub output_shape: Vec<usize>,
    pub input_shape: Vec<usize>,
    pub ranks: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct LayerBenchConfig {
    pub shapes: Vec<LayerShape>,
    pub repeats: usize,
    pub seed: u64,
    pub hardware: String,
    pub dense_cap: u128,
}

fn max_of(v: &[usize]) -> u64 {
    v.iter().copied().max().unwrap_or(1) as u64
}

/// Dense versus TT-factorized forward and backward passes on random layers.
pub fn run_ttlayer_bench(cfg: &LayerBenchConfig) -> Result<Vec<EfficiencyReport>> {
    if cfg.shapes.is_empty() {
        return Err(Error::arg("layer grid must be nonempty"));
    }
    if cfg.repeats == 0 {
        return Err(Error::arg("repeats must be at least 1"));
    }
    let mut rows = Vec::new();
    for s in &cfg.shapes {
        let layer = TtLayer::<f64>::random(&s.output_shape, &s.input_shape, &s.ranks, cfg.seed)?;
        let d = layer.ndim();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(7));
        let x = DenseTensor::from_fn(Shape::new(s.input_shape.clone())?, |_| rng.random_range(-1.0..=1.0));
        let g = DenseTensor::from_fn(Shape::new(s.output_shape.clone())?, |_| rng.random_range(-1.0..=1.0));
        let m: usize = s.output_shape.iter().product();
        let n: usize = s.input_shape.iter().product();
        let config = RunConfig {
            basis_count: Some(max_of(&s.output_shape) as usize),
            input_size: Some(max_of(&s.input_shape) as usize),
            modes: Some(d),
            rank: Some(max_of(&layer.ranks()) as usize),
            seed: Some(cfg.seed),
            ..Default::default()
        };
        let params = ComplexityParams {
            i: max_of(&s.output_shape),
            d: d as u32,
            n: 0,
            r: max_of(&layer.ranks()),
            j: max_of(&s.input_shape),
        };
        let dense_params = u64::try_from(layer.dense_parameter_count()).ok();
        let tt_params = Some(layer.parameter_count() as u64);

        let fwd = |alg: &str| {
            let mut row = EfficiencyReport::new(alg, config.clone(), cfg.hardware.clone());
            row.dense_parameters = dense_params;
            row.network_parameters = tt_params;
            row
        };

        let (y_tt, fwd_count) = count_scope("ttlayer-forward", || layer.forward(&x));
        let y_tt = y_tt?;
        let (grads, bwd_count) = count_scope("ttlayer-backward", || layer.backward(&x, &g));
        let grads = grads?;

        let dense_elements = layer.dense_parameter_count();
        let mut dense_fwd = fwd(Algorithm::DenseMatvec.id());
        dense_fwd.flops.analytic = Some(analytic_flops(Algorithm::DenseMatvec, params) as f64);
        let mut dense_bwd = fwd("dense-backward");
        let mut accuracy = None;
        if dense_elements > cfg.dense_cap {
            let note = format!("dense weight matrix {m} x {n} exceeds the cap of {} elements", cfg.dense_cap);
            rows.push(dense_fwd.infeasible(note.clone()));
            rows.push(dense_bwd.infeasible(note));
        } else {
            let w = layer.to_dense()?;
            let w = Matrix::from_col_major(m, n, w.into_values())?;
            let (y_dense, count) = count_scope("dense-matvec", || w.matvec(x.values()));
            let y_dense = y_dense?;
            dense_fwd.flops.measured = Some(count.total());
            dense_fwd.wall_clock = Some(time_run(|| w.matvec(x.values()), cfg.repeats, 1)?);
            rows.push(dense_fwd);

            let dense_backward = || -> Result<(Vec<f64>, Vec<f64>)> {
                let outer = crate::tensor::kronecker(&[g.values(), x.values()])?;
                Ok((outer, w.t_matvec(g.values())?))
            };
            let (dg, count) = count_scope("dense-backward", dense_backward);
            let (_, dx) = dg?;
            dense_bwd.flops.measured = Some(count.total());
            dense_bwd.wall_clock = Some(time_run(dense_backward, cfg.repeats, 1)?);
            rows.push(dense_bwd);

            let norm = y_dense.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            let diff = y_dense
                .iter()
                .zip(y_tt.values())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            let gdiff = dx
                .iter()
                .zip(grads.input.values())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            let gnorm = dx.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            accuracy = Some((diff / norm, gdiff / gnorm));
        }

        let mut tt_fwd = fwd(Algorithm::TtLayerForward.id());
        tt_fwd.flops.measured = Some(fwd_count.total());
        tt_fwd.flops.analytic = Some(analytic_flops(Algorithm::TtLayerForward, params) as f64);
        tt_fwd.wall_clock = Some(time_run(|| layer.forward(&x), cfg.repeats, 1)?);
        let mut tt_bwd = fwd(Algorithm::TtLayerBackward.id());
        tt_bwd.flops.measured = Some(bwd_count.total());
        tt_bwd.flops.analytic = Some(analytic_flops(Algorithm::TtLayerBackward, params) as f64);
        tt_bwd.wall_clock = Some(time_run(|| layer.backward(&x, &g), cfg.repeats, 1)?);
        if let Some((f, b)) = accuracy {
            tt_fwd.accuracy = Some(Accuracy {
                metric: "relative-error".into(),
                value: f,
            });
            tt_bwd.accuracy = Some(Accuracy {
                metric: "relative-error".into(),
                value: b,
            });
        }
        rows.push(tt_fwd);
        rows.push(tt_bwd);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    /// `(R_1, ..., R_{D+1})`.
    pub ranks: Vec<usize>,
    /// `‖W - W_tt‖_F / ‖W‖_F`.
    pub relative_error: f64,
    pub dense_parameters: u64,
    pub network_parameters: u64,
    /// `dense_parameters / network_parameters`.
    pub compression_ratio: f64,
}

/// Compresses `weights` (a matrix of `Π row_factors` rows and
/// `Π col_factors` columns) and measures the result.
pub fn compress_with_report(
    weights: &DenseTensor<f64>,
    row_factors: &[usize],
    col_factors: &[usize],
    truncation: &TtTruncation<f64>,
) -> Result<(TtLayer<f64>, CompressionReport)> {
    let layer = compress_dense_layer(
        weights,
        &Shape::new(row_factors.to_vec())?,
        &Shape::new(col_factors.to_vec())?,
        truncation,
    )?;
    let rebuilt = layer.to_dense()?;
    let norm = weights.frobenius_norm();
    let err = rebuilt.sub(weights)?.frobenius_norm();
    let relative_error = if norm > 0.0 { err / norm } else { err };
    let dense = weights.len() as u64;
    let network = layer.parameter_count() as u64;
    let report = CompressionReport {
        ranks: layer.ranks(),
        relative_error,
        dense_parameters: dense,
        network_parameters: network,
        compression_ratio: dense as f64 / network as f64,
    };
    Ok((layer, report))
}

/// Parameter-count rows in the layout of the regression table: one row per
/// `I` with `I^D` for the dense weights and `R I D` for the CP weights.
pub fn parameter_table(grid: &[usize], dims: usize, rank: usize, hardware: &str) -> Vec<EfficiencyReport> {
    grid.iter()
        .map(|&i| {
            let mut row = EfficiencyReport::new(
                "parameter-count",
                RunConfig {
                    basis_count: Some(i),
                    modes: Some(dims),
                    rank: Some(rank),
                    ..Default::default()
                },
                hardware,
            );
            row.dense_parameters = dense_count(i, dims);
            row.network_parameters = Some(crate::decomp::cp_table_parameter_count(i as u64, dims as u32, rank as u64));
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_shape_and_determinism() {
        let spec = SyntheticSpec::new(100, 3, 0.1);
        let (a, _) = generate_synthetic(&spec).unwrap();
        let (b, _) = generate_synthetic(&spec).unwrap();
        assert_eq!(a.len(), 100);
        assert_eq!(a.dim(), 3);
        assert_eq!(a.targets(), b.targets());
        assert!(a.inputs().values().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn synthetic_rejects_negative_noise() {
        assert!(generate_synthetic(&SyntheticSpec::new(10, 2, -1.0)).is_err());
    }

    #[test]
    fn empty_grid_is_argument_error() {
        let (data, _) = generate_synthetic(&SyntheticSpec::new(30, 2, 0.0)).unwrap();
        let cfg = TkrrBenchConfig {
            grid: vec![],
            ..Default::default()
        };
        assert!(matches!(run_tkrr_bench(&data, &cfg), Err(Error::Argument(_))));
    }

    #[test]
    fn parameter_table_rows() {
        let rows = parameter_table(&[2, 40], 8, 20, "x");
        assert_eq!(rows[0].dense_parameters, Some(256));
        assert_eq!(rows[1].dense_parameters, Some(6_553_600_000_000));
        assert_eq!(rows[1].network_parameters, Some(6400));
    }
}
