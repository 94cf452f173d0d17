mod common;

use common::*;
use proptest::prelude::*;
use tensornet::decomp::{cp_fit, tt_svd_fit, CpFitOptions, TtTruncation};
use tensornet::tensor::{fold, inner_product, kronecker, outer_product, tensorize, unfold, untensorize};
use tensornet::tkrr::{build_feature_network, tkrr_fit, tn_inner_product, TkrrOptions};
use tensornet::{Dataset, DenseTensor, FeatureFamily, FeatureMap, TtLayer};

fn dims_strategy(max_dim: usize, max_modes: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1..=max_dim, 1..=max_modes)
}

fn ranks_strategy(modes: usize, max_rank: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1..=max_rank, modes.saturating_sub(1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tensorize_round_trip(rows in dims_strategy(4, 3), cols in dims_strategy(4, 3), seed in any::<u64>()) {
        let m: usize = rows.iter().product();
        let n: usize = cols.iter().product();
        let mut r = rng(seed);
        let mat = random_tensor(&mut r, &[m, n]);
        let t = tensorize(&mat, &shape(&rows), &shape(&cols)).unwrap();
        prop_assert_eq!(untensorize(&t, rows.len()).unwrap(), mat);
    }

    #[test]
    fn kronecker_is_flattened_outer(lens in dims_strategy(5, 5), seed in any::<u64>()) {
        let mut r = rng(seed);
        let f: Vec<Vec<f64>> = lens.iter().map(|&l| random_vec(&mut r, l)).collect();
        let k = kronecker(&f).unwrap();
        let o = outer_product(&f).unwrap();
        for (lin, idx) in tuples(&lens).iter().enumerate() {
            let direct: f64 = idx.iter().enumerate().map(|(d, &i)| f[d][i]).product();
            prop_assert!((k[lin] - direct).abs() <= 1e-15 * direct.abs().max(1.0));
        }
        prop_assert_eq!(k, o.into_values());
    }

    #[test]
    fn unfold_fold_round_trip(dims in dims_strategy(4, 5), seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let mut r = rng(seed);
        let t = random_tensor(&mut r, &dims);
        let mode = pick.index(dims.len());
        let u = unfold(&t, mode).unwrap();
        prop_assert_eq!(u.dims()[0], dims[mode]);
        prop_assert_eq!(fold(&u, mode, &dims).unwrap(), t);
    }

    #[test]
    fn inner_product_symmetric_bilinear(dims in dims_strategy(4, 4), seed in any::<u64>(), alpha in -3.0f64..3.0) {
        let mut r = rng(seed);
        let a = random_tensor(&mut r, &dims);
        let b = random_tensor(&mut r, &dims);
        let c = random_tensor(&mut r, &dims);
        let ab = inner_product(&a, &b).unwrap();
        prop_assert_eq!(ab, inner_product(&b, &a).unwrap());
        let lhs = inner_product(&a.scale(alpha).add(&c).unwrap(), &b).unwrap();
        let rhs = alpha * ab + inner_product(&c, &b).unwrap();
        let scale = a.frobenius_norm() * b.frobenius_norm() * (alpha.abs() + 1.0) + c.frobenius_norm() * b.frobenius_norm();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn cp_reconstruction_oracle(dims in dims_strategy(4, 5), rank in 1usize..=3, seed in any::<u64>()) {
        let mut r = rng(seed);
        let cp = random_cp(&mut r, &dims, rank);
        let got = cp.reconstruct().unwrap();
        prop_assert!(rel_err(got.values(), &naive_cp(&cp)) < 1e-12);
    }

    #[test]
    fn tucker_reconstruction_oracle(dims in dims_strategy(4, 5), seed in any::<u64>(), rank_seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut rr = rng(rank_seed);
        let ranks: Vec<usize> = dims.iter().map(|_| rand::Rng::random_range(&mut rr, 1..=3)).collect();
        let t = random_tucker(&mut r, &dims, &ranks);
        prop_assert!(rel_err(t.reconstruct().unwrap().values(), &naive_tucker(&t)) < 1e-12);
    }

    #[test]
    fn tt_reconstruction_oracle((dims, inner) in dims_strategy(4, 5).prop_flat_map(|d| { let n = d.len(); (Just(d), ranks_strategy(n, 3)) }), seed in any::<u64>()) {
        let mut r = rng(seed);
        let tt = random_tt(&mut r, &dims, &inner);
        prop_assert!(rel_err(tt.reconstruct().unwrap().values(), &naive_tt(&tt)) < 1e-12);
    }

    #[test]
    fn tt_svd_meets_tolerance(dims in dims_strategy(4, 5), eps in 0.0f64..0.9, seed in any::<u64>()) {
        let mut r = rng(seed);
        let t = random_tensor(&mut r, &dims);
        let tt = tt_svd_fit(&t, &TtTruncation::Tolerance(eps)).unwrap();
        let err = rel_err(tt.reconstruct().unwrap().values(), t.values());
        prop_assert!(err <= eps + 1e-12, "error {} above {}", err, eps);
        let ranks = tt.ranks();
        prop_assert_eq!(ranks[0], 1);
        prop_assert_eq!(*ranks.last().unwrap(), 1);
    }

    #[test]
    fn tt_layer_forward_matches_dense(
        (out, inp, inner) in (1usize..=4).prop_flat_map(|d| (
            prop::collection::vec(1usize..=3, d),
            prop::collection::vec(1usize..=3, d),
            ranks_strategy(d, 3),
        )),
        seed in any::<u64>(),
    ) {
        let mut r = rng(seed);
        let ranks: Vec<usize> = std::iter::once(1).chain(inner.iter().copied()).chain(std::iter::once(1)).collect();
        let cores = (0..out.len()).map(|d| random_tensor(&mut r, &[ranks[d], out[d], inp[d], ranks[d + 1]])).collect();
        let layer = TtLayer::new(cores).unwrap();
        let x = random_tensor(&mut r, &inp);
        let y = layer.forward(&x).unwrap();
        let dense = naive_layer_matrix(&layer).matvec(x.values()).unwrap();
        prop_assert!(rel_err(y.values(), &dense) < 1e-10);
    }

    #[test]
    fn feature_network_matches_dense_kronecker(d in 1usize..=4, i in 1usize..=3, rank in 1usize..=3, seed in any::<u64>()) {
        let mut r = rng(seed);
        let rows: Vec<Vec<f64>> = (0..3).map(|_| random_vec(&mut r, d)).collect();
        let data = Dataset::from_rows(&rows, vec![0.0; 3]).unwrap();
        let fm = FeatureMap::uniform(FeatureFamily::DeterministicFourier, i, d, -1.0, 1.0).unwrap();
        let ftn = build_feature_network(&fm, &data).unwrap();
        let w = random_cp(&mut r, &vec![i; d], rank);
        let dense_w = w.reconstruct().unwrap();
        for n in 0..3 {
            let (row, _) = fm.map_row(&rows[n]).unwrap();
            let direct: f64 = row.iter().zip(dense_w.values()).map(|(a, b)| a * b).sum();
            let tn = tn_inner_product(&ftn, n, &w).unwrap();
            prop_assert!((tn - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn als_objective_never_increases(d in 1usize..=4, i in 2usize..=4, rank in 1usize..=3, lambda in 0.0f64..1e-1, seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = 30;
        let rows: Vec<Vec<f64>> = (0..n).map(|_| random_vec(&mut r, d)).collect();
        let data = Dataset::from_rows(&rows, random_vec(&mut r, n)).unwrap();
        let fm = FeatureMap::uniform(FeatureFamily::PurePowerPolynomial, i, d, -1.0, 1.0).unwrap();
        let ftn = build_feature_network(&fm, &data).unwrap();
        let opts = TkrrOptions { rank, regularization: lambda, max_sweeps: 5, tol: -1.0, seed };
        let model = tkrr_fit(&ftn, data.targets(), &opts).unwrap();
        let obj = &model.diagnostics().objective;
        for w in obj.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0), "{:?}", w);
        }
    }

    #[test]
    fn cp_als_error_never_increases(dims in dims_strategy(3, 4), rank in 1usize..=3, seed in any::<u64>()) {
        let mut r = rng(seed);
        let t: DenseTensor<f64> = random_tensor(&mut r, &dims);
        let opts = CpFitOptions { max_sweeps: 20, tol: -1.0, seed };
        let fit = cp_fit(&t, rank, &opts).unwrap();
        for w in fit.errors.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9);
        }
    }
}
