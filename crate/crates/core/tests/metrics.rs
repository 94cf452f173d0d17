mod common;

use common::*;
use tensornet::bench::parameter_table;
use tensornet::linalg::Matrix;
use tensornet::metrics::analytic::{analytic_flops, analytic_flops_by_id, Algorithm, ComplexityParams};
use tensornet::metrics::report::{build_report, Accuracy, EfficiencyReport, Outcome, RunConfig};
use tensornet::metrics::timing::time_run;
use tensornet::metrics::{count_scope, flops};
use tensornet::tensor::{inner_product, kronecker, outer_product};
use tensornet::tkrr::{build_feature_network, tkrr_fit, TkrrOptions};
use tensornet::{Dataset, Error, FeatureFamily, FeatureMap, TtLayer};

#[test]
fn dot_and_matvec_counts() {
    let mut r = rng(80);
    let a = random_tensor(&mut r, &[7]);
    let b = random_tensor(&mut r, &[7]);
    let (_, c) = count_scope("dot", || inner_product(&a, &b));
    assert_eq!((c.multiplies, c.additions), (7, 6));

    let m = random_matrix(&mut r, 5, 3);
    let x = random_vec(&mut r, 3);
    let (_, c) = count_scope("matvec", || m.matvec(&x));
    assert_eq!((c.multiplies, c.additions), (15, 10));
}

#[test]
fn kronecker_and_outer_counts() {
    let f = vec![vec![1.0; 2], vec![1.0; 3], vec![1.0; 4]];
    // partial products of length 6 then 24
    let (_, c) = count_scope("kron", || kronecker(&f));
    assert_eq!((c.multiplies, c.additions), (30, 0));
    let (_, c) = count_scope("outer", || outer_product(&f));
    assert_eq!((c.multiplies, c.additions), (30, 0));
    let (_, c) = count_scope("single", || kronecker(&f[..1]));
    assert_eq!(c.total(), 0);
}

#[test]
fn tt_forward_single_core_counts_as_matvec() {
    let mut r = rng(81);
    let core = random_tensor(&mut r, &[1, 2, 2, 1]);
    let layer = TtLayer::new(vec![core]).unwrap();
    let x = random_tensor(&mut r, &[2]);
    let (_, c) = count_scope("tt", || layer.forward(&x));
    assert_eq!((c.multiplies, c.additions), (4, 2));
}

#[test]
fn nested_scopes_fold_into_parent() {
    let ((inner_a, inner_b), outer) = count_scope("outer", || {
        flops::record(3, 1);
        let (_, a) = count_scope("a", || flops::record(10, 4));
        let (_, b) = count_scope("b", || {
            let (_, deep) = count_scope("deep", || flops::record(2, 2));
            assert_eq!(deep.total(), 4);
            flops::record(1, 0);
        });
        (a, b)
    });
    assert_eq!((inner_a.multiplies, inner_a.additions), (10, 4));
    assert_eq!((inner_b.multiplies, inner_b.additions), (3, 2));
    assert_eq!((outer.multiplies, outer.additions), (16, 7));
    assert!(!flops::active());
}

#[test]
fn analytic_examples() {
    let ridge = ComplexityParams {
        i: 2,
        d: 8,
        n: 100,
        ..Default::default()
    };
    assert_eq!(analytic_flops(Algorithm::RidgeDirect, ridge), 100 * (1 << 16) + (1 << 24));
    let als = ComplexityParams {
        i: 2,
        d: 8,
        n: 100,
        r: 20,
        j: 0,
    };
    assert_eq!(analytic_flops(Algorithm::TkrrAlsSweep, als), 8 * 100 * 1600 + 8 * 64000);
    let no_data = ComplexityParams { n: 0, ..als };
    assert_eq!(analytic_flops(Algorithm::TkrrAlsSweep, no_data), 8 * 64000);
    assert_eq!(analytic_flops(Algorithm::RidgeDirect, ComplexityParams { n: 0, ..ridge }), 1 << 24);
    assert!(matches!(analytic_flops_by_id("nope", als), Err(Error::Argument(_))));
    assert_eq!(analytic_flops_by_id("tkrr-als-sweep", als).unwrap(), 8 * 100 * 1600 + 8 * 64000);
}

fn one_sweep_flops(d: usize, n: usize, i: usize, rank: usize) -> f64 {
    one_sweep(d, n, i, rank).total as f64
}

fn one_sweep(d: usize, n: usize, i: usize, rank: usize) -> tensornet::tkrr::PhaseFlops {
    let mut r = rng(82 + (d * 1000 + n + i * 10 + rank) as u64);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| random_vec(&mut r, d)).collect();
    let data = Dataset::from_rows(&rows, random_vec(&mut r, n)).unwrap();
    let fm = FeatureMap::uniform(FeatureFamily::DeterministicFourier, i, d, -1.0, 1.0).unwrap();
    let ftn = build_feature_network(&fm, &data).unwrap();
    let opts = TkrrOptions {
        rank,
        regularization: 1e-3,
        max_sweeps: 1,
        tol: -1.0,
        seed: 0,
    };
    tkrr_fit(&ftn, data.targets(), &opts).unwrap().diagnostics().flops.clone()
}

/// Least squares `y ≈ X c` with two columns through the 2x2 normal equations.
fn two_term_fit(x: &[[f64; 2]], y: &[f64]) -> ([f64; 2], f64) {
    let (mut a, mut b, mut c, mut p, mut q) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (row, &t) in x.iter().zip(y) {
        a += row[0] * row[0];
        b += row[0] * row[1];
        c += row[1] * row[1];
        p += row[0] * t;
        q += row[1] * t;
    }
    let det = a * c - b * b;
    let coef = [(c * p - b * q) / det, (a * q - b * p) / det];
    let resid: Vec<f64> = x.iter().zip(y).map(|(row, &t)| t - coef[0] * row[0] - coef[1] * row[1]).collect();
    (coef, norm(&resid) / norm(y))
}

#[test]
fn als_sweep_fits_two_term_model() {
    let mut design = Vec::new();
    let mut measured = Vec::new();
    let i = 4;
    for d in [2usize, 4, 8] {
        for n in [100usize, 400] {
            for rank in [2usize, 4, 8] {
                let q = (i * rank) as f64;
                design.push([(d * n) as f64 * q * q, d as f64 * q * q * q]);
                measured.push(one_sweep_flops(d, n, i, rank));
            }
        }
    }
    let (coef, resid) = two_term_fit(&design, &measured);
    assert!(coef[0] > 0.0, "{coef:?}");
    assert!(resid < 0.10, "relative residual {resid}, coefficients {coef:?}");
}

/// Slope of `log y` against `log x`.
fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}

#[test]
fn als_sweep_exponents() {
    let ds = [2.0, 4.0, 8.0];
    let by_d: Vec<f64> = [2, 4, 8].iter().map(|&d| one_sweep_flops(d, 400, 4, 4)).collect();
    let s = log_slope(&ds, &by_d);
    assert!((s - 1.0).abs() <= 0.2, "D exponent {s}");

    let ns = [200.0, 400.0, 800.0, 1600.0];
    let by_n: Vec<f64> = [200, 400, 800, 1600].iter().map(|&n| one_sweep_flops(3, n, 4, 4)).collect();
    let s = log_slope(&ns, &by_n);
    assert!((s - 1.0).abs() <= 0.2, "N exponent {s}");

    // the dominant N (IR)^2 term is the Gram assembly
    let qs = [8.0, 16.0, 32.0];
    let by_q: Vec<f64> = [2, 4, 8].iter().map(|&r| one_sweep(3, 400, 4, r).gram as f64).collect();
    let s = log_slope(&qs, &by_q);
    assert!((s - 2.0).abs() <= 0.2, "IR exponent {s}");
}

#[test]
fn measured_within_documented_constants() {
    for (d, n, i, rank) in [(3usize, 300usize, 4usize, 4usize), (8, 100, 2, 20)] {
        let measured = one_sweep_flops(d, n, i, rank);
        let p = ComplexityParams {
            i: i as u64,
            d: d as u32,
            n: n as u64,
            r: rank as u64,
            j: 0,
        };
        let env = analytic_flops(Algorithm::TkrrAlsSweep, p) as f64;
        assert!(measured <= Algorithm::TkrrAlsSweep.measured_constant() * env, "{measured} vs {env}");
    }
    let mut r = rng(83);
    let layer = TtLayer::new(vec![
        random_tensor(&mut r, &[1, 3, 3, 2]),
        random_tensor(&mut r, &[2, 3, 3, 2]),
        random_tensor(&mut r, &[2, 3, 3, 1]),
    ])
    .unwrap();
    let x = random_tensor(&mut r, &[3, 3, 3]);
    let p = ComplexityParams {
        i: 3,
        d: 3,
        r: 2,
        j: 3,
        n: 0,
    };
    let (_, fwd) = count_scope("fwd", || layer.forward(&x));
    let env = analytic_flops(Algorithm::TtLayerForward, p) as f64;
    assert!(fwd.total() as f64 <= Algorithm::TtLayerForward.measured_constant() * env);
    let u = random_tensor(&mut r, &[3, 3, 3]);
    let (_, bwd) = count_scope("bwd", || layer.backward(&x, &u));
    let env = analytic_flops(Algorithm::TtLayerBackward, p) as f64;
    assert!(bwd.total() as f64 <= Algorithm::TtLayerBackward.measured_constant() * env);
}

fn sample_rows() -> Vec<EfficiencyReport> {
    let cfg = RunConfig {
        basis_count: Some(4),
        modes: Some(3),
        samples: Some(100),
        rank: Some(2),
        regularization: Some(1e-6),
        seed: Some(7),
        ..Default::default()
    };
    let mut done = EfficiencyReport::new("tkrr-als", cfg.clone(), "desk");
    done.wall_clock = Some(tensornet::metrics::timing::Timing::from_samples(&[0.5, 0.7, 0.6]));
    done.accuracy = Some(Accuracy {
        metric: "rmse".into(),
        value: 0.125,
    });
    done.dense_parameters = Some(64);
    done.network_parameters = Some(24);
    done.flops.measured = Some(12345);
    done.flops.analytic = Some(6000.0);
    let na = EfficiencyReport::new("ridge-direct", cfg, "desk").infeasible("over cap");
    vec![done, na]
}

#[test]
fn report_is_deterministic_and_marks_na() {
    let a = build_report(&sample_rows()).unwrap();
    let b = build_report(&sample_rows()).unwrap();
    assert_eq!(a.json, b.json);
    assert_eq!(a.markdown, b.markdown);
    assert_eq!(a.csv, b.csv);
    let v: serde_json::Value = serde_json::from_str(&a.json).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert_eq!(v["rows"][1]["outcome"], "baseline-infeasible");
    assert!(v["rows"][1]["wall_clock"].is_null());
    let na_line = a.markdown.lines().find(|l| l.starts_with("| ridge-direct")).unwrap();
    assert!(na_line.contains("| NA |"));
    let done_line = a.markdown.lines().find(|l| l.starts_with("| tkrr-als")).unwrap();
    assert!(!done_line.contains("NA"));
    assert!(done_line.contains(" ± "));
    assert_eq!(a.csv.lines().count(), 3);
}

#[test]
fn report_rejects_empty_and_inconsistent_rows() {
    assert!(matches!(build_report(&[]), Err(Error::Argument(_))));
    let mut rows = sample_rows();
    rows[1].accuracy = Some(Accuracy {
        metric: "rmse".into(),
        value: 1.0,
    });
    assert!(build_report(&rows).is_err());
    let mut rows = sample_rows();
    rows[0].wall_clock.as_mut().unwrap().std_seconds = None;
    assert!(build_report(&rows).is_err());
    assert_eq!(rows[1].outcome, Outcome::BaselineInfeasible);
}

#[test]
fn parameter_table_matches_regression_table() {
    let rows = parameter_table(&[2, 3, 4, 10, 20, 40], 8, 20, "desk");
    let dense: Vec<u64> = rows.iter().map(|r| r.dense_parameters.unwrap()).collect();
    let tn: Vec<u64> = rows.iter().map(|r| r.network_parameters.unwrap()).collect();
    assert_eq!(dense, vec![256, 6561, 65536, 100_000_000, 25_600_000_000, 6_553_600_000_000]);
    assert_eq!(tn, vec![320, 480, 640, 1600, 3200, 6400]);
    let doc = build_report(&rows).unwrap();
    assert!(doc.markdown.contains("| 6553600000000 | 6400 |"));
}

#[test]
fn timing_protocol() {
    let t = time_run(|| std::hint::black_box(1 + 1), 3, 1).unwrap();
    assert_eq!(t.repeats, 3);
    assert!(t.std_seconds.is_some());
    assert!(t.mean_seconds < 1e-3);
    let t = time_run(|| (), 1, 0).unwrap();
    assert!(t.std_seconds.is_none());
    assert!(time_run(|| (), 0, 0).is_err());
}

#[test]
fn gram_counts_are_symmetric_half() {
    let mut r = rng(84);
    let m: Matrix<f64> = random_matrix(&mut r, 6, 4);
    let (_, c) = count_scope("gram", || m.gram());
    // 10 distinct entries of a 4x4 symmetric product, each a length-6 dot
    assert_eq!((c.multiplies, c.additions), (60, 50));
}
