use diskpca_core::data::{gen_synthetic, SyntheticKind};
use diskpca_core::diskpca::{baseline_uniform_dislr, batch_kpca, dis_kpca_run, DisKpcaParams};
use diskpca_core::sketch::RightSketch;
use diskpca_core::eval::{
    cluster_with_solution, curve_csv, error_curve, lloyd, spectral_cluster, Method, DEFAULT_SWEEP,
};
use diskpca_core::kernels::{gram, KernelSpec};
use diskpca_core::matrix::{ColumnMatrix, Mat};
use diskpca_core::simnet::{partition_even, partition_powerlaw, Cluster};

fn instance(n: usize, seed: u64) -> (Cluster, KernelSpec) {
    let data = gen_synthetic(SyntheticKind::LowRankPlusNoise, n, 5, 3, 0.1, seed).unwrap().data;
    let c = Cluster::new(&data, &partition_powerlaw(n, 3, 2.0, seed).unwrap(), seed).unwrap();
    (c, KernelSpec::Gaussian { bandwidth: 2.0 })
}

fn params() -> DisKpcaParams {
    DisKpcaParams { p: 60, m: 200, ..Default::default() }
}

#[test]
fn default_sweep() {
    assert_eq!(DEFAULT_SWEEP, [50, 100, 200, 400]);
}

#[test]
fn single_repeat_has_zero_spread() {
    let (mut c, spec) = instance(150, 1);
    let curve = error_curve(&mut c, &spec, Method::DisKpca, 3, 0.5, &params(), &[20, 40], 1, None, 3).unwrap();
    assert_eq!(curve.points.len(), 2);
    assert!(curve.points.iter().all(|p| p.err_std == 0.0 && p.repeats == 1));
    assert_eq!(curve.records.len(), 2);
}

#[test]
fn single_sweep_point_gives_single_record() {
    let (mut c, spec) = instance(150, 2);
    let curve = error_curve(&mut c, &spec, Method::UniformDisLr, 3, 0.5, &params(), &[30], 1, Some(0.1), 4).unwrap();
    assert_eq!(curve.points.len(), 1);
    assert_eq!(curve.records.len(), 1);
    let rec = &curve.records[0];
    assert_eq!(rec.method, "uniform+disLR");
    assert!(rec.subspace_error >= 0.0);
    assert_eq!(rec.opt_error, Some(0.1));
    assert_eq!(curve.points[0].words, rec.total_words as f64);
}

#[test]
fn zero_repeats_rejected() {
    let (mut c, spec) = instance(60, 3);
    assert!(error_curve(&mut c, &spec, Method::DisKpca, 2, 0.5, &params(), &[10], 0, None, 0).is_err());
}

#[test]
fn total_words_reproduce_exactly() {
    for method in Method::ALL {
        let run = || {
            let (mut c, spec) = instance(150, 5);
            error_curve(&mut c, &spec, method, 3, 0.5, &params(), &[15, 30], 3, None, 9).unwrap()
        };
        let (a, b) = (run(), run());
        let words = |c: &diskpca_core::eval::Curve| c.records.iter().map(|r| r.total_words).collect::<Vec<_>>();
        assert_eq!(words(&a), words(&b));
        let errs = |c: &diskpca_core::eval::Curve| c.records.iter().map(|r| r.subspace_error).collect::<Vec<_>>();
        assert_eq!(errs(&a), errs(&b));
        assert_eq!(curve_csv(&a.points), curve_csv(&b.points));
    }
}

#[test]
fn csv_layout() {
    let (mut c, spec) = instance(100, 6);
    let curve = error_curve(&mut c, &spec, Method::UniformBatch, 2, 0.5, &params(), &[10, 20], 2, None, 1).unwrap();
    let csv = curve_csv(&curve.points);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "method,words,err_mean,err_std");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("uniform+batch,"));
}

#[test]
fn one_cluster_objective_closed_form() {
    let (mut c, spec) = instance(120, 7);
    let a = c.gather_global().unwrap();
    let (sol, _) = batch_kpca(&spec, &a, 3).unwrap();
    let cl = cluster_with_solution(&mut c, &spec, &sol, 1, 10, 0).unwrap();
    let n = a.n_cols() as f64;
    let trace = gram(&spec, &a, &a).unwrap().trace();
    let mean = sol.project(&spec, &a).unwrap().column_mean();
    let expected = trace / n - mean.norm_squared();
    assert!((cl.objective - expected).abs() < 1e-9 * expected.abs().max(1.0), "{} vs {expected}", cl.objective);
    assert!(cl.assignments.iter().all(|&g| g == 0));
    // k coordinates, one index per point, one residual scalar per worker.
    assert_eq!(cl.ledger.total_words(), 3 * 120 + 120 + 3);
}

#[test]
fn point_masses_are_recovered_with_zero_objective() {
    let centers = [[0.0, 0.0], [5.0, 0.0], [0.0, 5.0], [5.0, 5.0]];
    let n = 60;
    let truth: Vec<usize> = (0..n).map(|j| (j * 7) % 4).collect();
    let a = ColumnMatrix::from_dense(Mat::from_fn(2, n, |i, j| centers[truth[j]][i]));
    let spec = KernelSpec::Gaussian { bandwidth: 1.0 };
    let mut c = Cluster::new(&a, &partition_even(n, 3, 1).unwrap(), 1).unwrap();
    let (cl, _) = spectral_cluster(&mut c, &spec, 4, 0.5, &params(), 50, 2).unwrap();
    for j in 0..n {
        for l in 0..n {
            assert_eq!(cl.assignments[j] == cl.assignments[l], truth[j] == truth[l]);
        }
    }
    assert!(cl.objective.abs() < 1e-8, "{}", cl.objective);
}

#[test]
fn lloyd_history_never_increases() {
    for seed in 0..10 {
        let coords = Mat::from_fn(3, 200, |i, j| ((i * 31 + j * 17 + seed as usize * 5) % 23) as f64);
        let km = lloyd(&coords, 5, 100, seed).unwrap();
        assert!(km.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(km.objective, *km.history.last().unwrap());
    }
}

#[test]
fn adaptive_features_cluster_better_than_uniform() {
    let kind = SyntheticKind::Clustered { separation: 4.0, imbalance: 2.0 };
    let syn = gen_synthetic(kind, 400, 5, 6, 0.15, 33).unwrap();
    let spec = KernelSpec::Gaussian { bandwidth: 1.0 };
    let part = partition_powerlaw(400, 4, 2.0, 3).unwrap();
    let k = 6;
    let n_adapt = 2 * k;
    let p = DisKpcaParams { m: 300, p: 60, n_adapt: Some(n_adapt), ..Default::default() };
    let mut wins = 0;
    for seed in 0..100 {
        let mut c = Cluster::new(&syn.data, &part, seed).unwrap();
        let ours = dis_kpca_run(&mut c, &spec, k, 0.5, &p, seed).unwrap().solution;
        let (theirs, _) =
            baseline_uniform_dislr(&mut c, &spec, k, n_adapt, None, RightSketch::default(), seed, 1e-10).unwrap();
        let a = cluster_with_solution(&mut c, &spec, &ours, k, 100, seed).unwrap();
        let b = cluster_with_solution(&mut c, &spec, &theirs, k, 100, seed).unwrap();
        if a.objective <= b.objective {
            wins += 1;
        }
    }
    assert!(wins >= 80, "{wins}/100");
}
