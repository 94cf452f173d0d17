//! Naive reference evaluations shared by the integration tests. They loop
//! over explicit index tuples and share no code with the library kernels.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tensornet::decomp::{CpDecomp, TtDecomp, TuckerDecomp};
use tensornet::linalg::Matrix;
use tensornet::{DenseTensor, Shape};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn random_tensor(rng: &mut ChaCha8Rng, dims: &[usize]) -> DenseTensor<f64> {
    let n = dims.iter().product();
    DenseTensor::from_dims(dims, random_vec(rng, n)).unwrap()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix<f64> {
    Matrix::from_col_major(rows, cols, random_vec(rng, rows * cols)).unwrap()
}

/// Column-major decoding of a linear index, first index fastest.
pub fn decode(mut lin: usize, dims: &[usize]) -> Vec<usize> {
    dims.iter()
        .map(|&d| {
            let i = lin % d;
            lin /= d;
            i
        })
        .collect()
}

pub fn encode(idx: &[usize], dims: &[usize]) -> usize {
    idx.iter().zip(dims).rev().fold(0, |acc, (&i, &d)| acc * d + i)
}

/// All index tuples of `dims` in column-major order.
pub fn tuples(dims: &[usize]) -> Vec<Vec<usize>> {
    let n: usize = dims.iter().product();
    (0..n).map(|l| decode(l, dims)).collect()
}

pub fn naive_cp(cp: &CpDecomp<f64>) -> Vec<f64> {
    let dims = cp.mode_sizes();
    tuples(&dims)
        .iter()
        .map(|idx| {
            (0..cp.rank())
                .map(|r| {
                    let mut p = cp.weights()[r];
                    for (d, &i) in idx.iter().enumerate() {
                        p *= cp.factor(d).get(i, r);
                    }
                    p
                })
                .sum()
        })
        .collect()
}

pub fn naive_tucker(t: &TuckerDecomp<f64>) -> Vec<f64> {
    let dims = t.mode_sizes();
    let ranks = t.ranks().to_vec();
    let core_tuples = tuples(&ranks);
    tuples(&dims)
        .iter()
        .map(|idx| {
            core_tuples
                .iter()
                .map(|r| {
                    let mut p = t.core().values()[encode(r, &ranks)];
                    for d in 0..idx.len() {
                        p *= t.factors()[d].get(idx[d], r[d]);
                    }
                    p
                })
                .sum()
        })
        .collect()
}

/// Σ over all internal rank tuples of the product of core entries.
pub fn naive_tt(tt: &TtDecomp<f64>) -> Vec<f64> {
    let dims = tt.mode_sizes();
    let ranks = tt.ranks();
    let inner: Vec<usize> = ranks[1..ranks.len() - 1].to_vec();
    let rank_tuples = if inner.is_empty() { vec![vec![]] } else { tuples(&inner) };
    tuples(&dims)
        .iter()
        .map(|idx| {
            rank_tuples
                .iter()
                .map(|rt| {
                    let full: Vec<usize> = std::iter::once(0).chain(rt.iter().copied()).chain(std::iter::once(0)).collect();
                    let mut p = 1.0;
                    for (d, core) in tt.cores().iter().enumerate() {
                        p *= core.get(&[full[d], idx[d], full[d + 1]]);
                    }
                    p
                })
                .sum()
        })
        .collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `‖a - b‖ / max(‖b‖, tiny)`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(b).max(1e-300)
}

pub fn random_tt(rng: &mut ChaCha8Rng, dims: &[usize], inner: &[usize]) -> TtDecomp<f64> {
    let ranks: Vec<usize> = std::iter::once(1).chain(inner.iter().copied()).chain(std::iter::once(1)).collect();
    let cores = dims
        .iter()
        .enumerate()
        .map(|(d, &n)| random_tensor(rng, &[ranks[d], n, ranks[d + 1]]))
        .collect();
    TtDecomp::new(cores).unwrap()
}

pub fn random_tucker(rng: &mut ChaCha8Rng, dims: &[usize], ranks: &[usize]) -> TuckerDecomp<f64> {
    let core = random_tensor(rng, ranks);
    let factors = dims.iter().zip(ranks).map(|(&n, &r)| random_matrix(rng, n, r)).collect();
    TuckerDecomp::new(core, factors).unwrap()
}

pub fn random_cp(rng: &mut ChaCha8Rng, dims: &[usize], rank: usize) -> CpDecomp<f64> {
    let weights = random_vec(rng, rank);
    let factors = dims.iter().map(|&n| random_matrix(rng, n, rank)).collect();
    CpDecomp::new(weights, factors).unwrap()
}

/// Dense weight matrix of a TT layer by explicit summation over ranks.
pub fn naive_layer_matrix(layer: &tensornet::TtLayer<f64>) -> Matrix<f64> {
    let out = layer.output_shape();
    let inp = layer.input_shape();
    let ranks = layer.ranks();
    let inner: Vec<usize> = ranks[1..ranks.len() - 1].to_vec();
    let rank_tuples = if inner.is_empty() { vec![vec![]] } else { tuples(&inner) };
    let m: usize = out.iter().product();
    let n: usize = inp.iter().product();
    Matrix::from_fn(m, n, |row, col| {
        let i = decode(row, &out);
        let j = decode(col, &inp);
        rank_tuples
            .iter()
            .map(|rt| {
                let full: Vec<usize> = std::iter::once(0).chain(rt.iter().copied()).chain(std::iter::once(0)).collect();
                let mut p = 1.0;
                for (d, core) in layer.cores().iter().enumerate() {
                    p *= core.get(&[full[d], i[d], j[d], full[d + 1]]);
                }
                p
            })
            .sum()
    })
}

pub fn shape(dims: &[usize]) -> Shape {
    Shape::new(dims.to_vec()).unwrap()
}
