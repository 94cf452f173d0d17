mod common;

use common::*;
use tensornet::tensor::{fold, inner_product, kronecker, outer_product, tensorize, unfold, untensorize};
use tensornet::{DenseTensor, Error, Shape};

#[test]
fn tensorize_8x8_into_six_binary_modes() {
    let m = DenseTensor::from_dims(&[8, 8], (0..64).map(f64::from).collect()).unwrap();
    let t = tensorize(&m, &shape(&[2, 2, 2]), &shape(&[2, 2, 2])).unwrap();
    assert_eq!(t.dims(), &[2, 2, 2, 2, 2, 2]);
    let back = untensorize(&t, 3).unwrap();
    assert_eq!(back, m);
}

#[test]
fn tensorize_scalar_matrix() {
    let m = DenseTensor::from_dims(&[1, 1], vec![7.5]).unwrap();
    let t = tensorize(&m, &shape(&[1]), &shape(&[1])).unwrap();
    assert_eq!(t.dims(), &[1, 1]);
    assert_eq!(t.values(), &[7.5]);
}

#[test]
fn tensorize_4x2_every_entry_by_hand() {
    // column-major 4x2 with entries 1..8: M[r, c] = 1 + r + 4c
    let m = DenseTensor::from_dims(&[4, 2], (1..=8).map(f64::from).collect()).unwrap();
    let t = tensorize(&m, &shape(&[2, 2]), &shape(&[2])).unwrap();
    assert_eq!(t.dims(), &[2, 2, 2]);
    for i1 in 0..2 {
        for i2 in 0..2 {
            for j in 0..2 {
                let row = i1 + 2 * i2;
                assert_eq!(t.get(&[i1, i2, j]), m.get(&[row, j]), "({i1},{i2},{j})");
            }
        }
    }
    assert_eq!(t.get(&[1, 1, 1]), 8.0);
    assert_eq!(t.get(&[0, 1, 0]), 3.0);
}

#[test]
fn tensorize_factor_mismatch_is_dimension_error() {
    let m = DenseTensor::from_dims(&[4, 2], vec![0.0; 8]).unwrap();
    let err = tensorize(&m, &shape(&[3]), &shape(&[2])).unwrap_err();
    assert!(matches!(err, Error::Dimension(_)));
}

#[test]
fn untensorize_row_count_out_of_range() {
    let t = DenseTensor::<f64>::zeros(shape(&[2, 2, 2]));
    assert!(matches!(untensorize(&t, 0), Err(Error::Dimension(_))));
    assert!(matches!(untensorize(&t, 3), Err(Error::Dimension(_))));
}

#[test]
fn untensorize_3x4x5_naive_loop() {
    let mut r = rng(1);
    let t = random_tensor(&mut r, &[3, 4, 5]);
    let m = untensorize(&t, 1).unwrap();
    assert_eq!(m.dims(), &[3, 20]);
    for i in 0..3 {
        for j in 0..4 {
            for k in 0..5 {
                assert_eq!(m.get(&[i, j + 4 * k]), t.get(&[i, j, k]));
            }
        }
    }
}

#[test]
fn unfold_matrix_mode_zero_is_identity() {
    let mut r = rng(2);
    let m = random_tensor(&mut r, &[2, 2]);
    assert_eq!(unfold(&m, 0).unwrap(), m);
}

#[test]
fn unfold_2x3x4_middle_mode_naive_loop() {
    let mut r = rng(3);
    let t = random_tensor(&mut r, &[2, 3, 4]);
    let u = unfold(&t, 1).unwrap();
    assert_eq!(u.dims(), &[3, 8]);
    for i in 0..2 {
        for j in 0..3 {
            for k in 0..4 {
                assert_eq!(u.get(&[j, i + 2 * k]), t.get(&[i, j, k]));
            }
        }
    }
    assert_eq!(fold(&u, 1, &[2, 3, 4]).unwrap(), t);
    assert!(matches!(unfold(&t, 3), Err(Error::Dimension(_))));
}

#[test]
fn unfold_of_rank_one_tensor_has_one_singular_value() {
    let mut r = rng(4);
    let (a, b, c) = (random_vec(&mut r, 3), random_vec(&mut r, 4), random_vec(&mut r, 2));
    let t = outer_product(&[a.clone(), b.clone(), c.clone()]).unwrap();
    let u = unfold(&t, 0).unwrap().to_matrix().unwrap();
    let s = tensornet::linalg::svd(&u).unwrap().s;
    assert!(s[0] > 1e-3);
    assert!(s[1..].iter().all(|&v| v < 1e-12 * s[0]), "{s:?}");
    let bc = kronecker(&[b, c]).unwrap();
    for i in 0..3 {
        for (col, &v) in bc.iter().enumerate() {
            assert!((u.get(i, col) - a[i] * v).abs() < 1e-15);
        }
    }
}

#[test]
fn outer_product_cases() {
    let v = vec![1.0, 2.0, 3.0];
    let t = outer_product(&[v.clone()]).unwrap();
    assert_eq!(t.dims(), &[3]);
    assert_eq!(t.values(), v.as_slice());

    let t = outer_product(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    assert_eq!(t.values(), &[0.0, 0.0, 1.0, 0.0]);
    assert_eq!(t.get(&[0, 1]), 1.0);

    let mut r = rng(5);
    let f: Vec<Vec<f64>> = (0..3).map(|_| random_vec(&mut r, 3)).collect();
    let t = outer_product(&f).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                assert_eq!(t.get(&[i, j, k]), f[0][i] * f[1][j] * f[2][k]);
            }
        }
    }
    assert!(matches!(outer_product::<f64, Vec<f64>>(&[]), Err(Error::Argument(_))));
}

#[test]
fn kronecker_cases() {
    assert_eq!(kronecker(&[vec![1.0, 2.0]]).unwrap(), vec![1.0, 2.0]);
    assert_eq!(kronecker(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap(), vec![3.0, 6.0, 4.0, 8.0]);
    let mut r = rng(6);
    let f: Vec<Vec<f64>> = (0..3).map(|_| random_vec(&mut r, 2)).collect();
    assert_eq!(kronecker(&f).unwrap(), outer_product(&f).unwrap().into_values());
    assert!(matches!(kronecker::<f64, Vec<f64>>(&[]), Err(Error::Argument(_))));
}

#[test]
fn inner_product_cases() {
    let mut r = rng(7);
    let a = random_tensor(&mut r, &[2, 3, 2]);
    let z = DenseTensor::zeros(shape(&[2, 3, 2]));
    assert_eq!(inner_product(&a, &z).unwrap(), 0.0);

    let mut e = DenseTensor::<f64>::zeros(shape(&[2, 2]));
    e.set(&[0, 0], 1.0);
    assert_eq!(inner_product(&e, &e).unwrap(), 1.0);

    let b = random_tensor(&mut r, &[2, 3, 2]);
    let mut flat = 0.0;
    for k in 0..a.len() {
        flat += a.values()[k] * b.values()[k];
    }
    assert!((inner_product(&a, &b).unwrap() - flat).abs() < 1e-15);
    let c = random_tensor(&mut r, &[2, 6]);
    assert!(matches!(inner_product(&a, &c), Err(Error::Dimension(_))));
}

#[test]
fn shape_limits() {
    assert!(matches!(Shape::new(vec![]), Err(Error::Dimension(_) | Error::Argument(_))));
    assert!(Shape::new(vec![3, 0]).is_err());
    let err = Shape::new(vec![1 << 25, 1 << 24]).unwrap_err();
    assert!(matches!(err, Error::Size { .. }));
    assert!(Shape::new(vec![1 << 24, 1 << 24]).is_ok());
}

#[test]
fn mode_product_matches_loop() {
    let mut r = rng(8);
    let t = random_tensor(&mut r, &[2, 3, 4]);
    let a = random_matrix(&mut r, 5, 3);
    let p = t.mode_product(&a, 1).unwrap();
    assert_eq!(p.dims(), &[2, 5, 4]);
    for i in 0..2 {
        for q in 0..5 {
            for k in 0..4 {
                let v: f64 = (0..3).map(|j| a.get(q, j) * t.get(&[i, j, k])).sum();
                assert!((p.get(&[i, q, k]) - v).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn single_precision_round_trip() {
    let m = DenseTensor::from_dims(&[4, 2], (1..=8).map(|v| v as f32).collect()).unwrap();
    let t = tensorize(&m, &shape(&[2, 2]), &shape(&[2])).unwrap();
    assert_eq!(untensorize(&t, 2).unwrap(), m);
}
