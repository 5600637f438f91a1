use diskpca_core::data::{gen_synthetic, SyntheticKind};
use diskpca_core::diskpca::{dis_kpca, DisKpcaParams};
use diskpca_core::kernels::KernelSpec;
use diskpca_core::matrix::{ColumnMatrix, Mat};
use diskpca_core::simnet::{partition_even, partition_powerlaw, powerlaw_sizes, Cluster, CommLedger, PointBatch};
use proptest::prelude::*;
use rand::Rng;

fn small_cluster(s: usize, seed: u64) -> Cluster {
    let a = ColumnMatrix::from_dense(Mat::from_fn(4, 40, |i, j| ((i + 1) * (j + 3) % 7) as f64));
    Cluster::new(&a, &partition_even(40, s, seed).unwrap(), seed).unwrap()
}

#[test]
fn sketch_upload_round_charges_t_times_p_per_worker() {
    for s in [1, 3, 10] {
        let mut c = small_cluster(s, 1);
        c.run_round_stateless("sketch", |_| Ok(Mat::zeros(50, 250)), |_, _| Ok(())).unwrap();
        assert_eq!(c.ledger().total_words(), 12500 * s);
        assert_eq!(c.ledger().up_words(), 12500 * s);
    }
}

#[test]
fn square_broadcast_to_ten_workers() {
    let mut c = small_cluster(10, 2);
    c.run_round_stateless("z", |_| Ok(()), |m, _| m.broadcast("z", Mat::zeros(250, 250))).unwrap();
    assert_eq!(c.ledger().total_words(), 625_000);
    assert_eq!(c.ledger().down_words(), 625_000);
}

#[test]
fn small_payload_word_counts() {
    let mut c = small_cluster(2, 3);
    c.run_round_stateless("m", |_| Ok(Mat::zeros(3, 4)), |_, _| Ok(())).unwrap();
    assert_eq!(c.ledger().round("m").unwrap().up_words, vec![12, 12]);
    c.run_round_stateless("idx", |_| Ok(vec![0usize; 7]), |_, _| Ok(())).unwrap();
    assert_eq!(c.ledger().round("idx").unwrap().up_words, vec![7, 7]);
    let batch = PointBatch { indices: vec![4, 9], points: ColumnMatrix::from_dense(Mat::zeros(4, 2)) };
    c.run_round_stateless("pts", |_| Ok(()), |m, _| m.broadcast("pts", batch)).unwrap();
    assert_eq!(c.ledger().round("pts").unwrap().down_words, vec![10, 10]);
}

#[test]
fn k_by_k_broadcast() {
    let (s, k) = (6, 5);
    let mut c = small_cluster(s, 4);
    c.run_round_stateless("w", |_| Ok(()), |m, _| m.broadcast("w", Mat::identity(k, k))).unwrap();
    assert_eq!(c.ledger().total_words(), s * k * k);
}

#[test]
fn partition_edge_cases() {
    let p = partition_powerlaw(17, 1, 2.0, 0).unwrap();
    assert!(p.assignment.iter().all(|&w| w == 0));
    assert_eq!(powerlaw_sizes(5, 5, 2.0).unwrap(), vec![1; 5]);
    assert_eq!(partition_even(5, 5, 9).unwrap().sizes, vec![1; 5]);
    assert!(partition_even(3, 4, 0).is_err());
    assert!(partition_powerlaw(10, 0, 2.0, 0).is_err());
}

fn synthetic_cluster(parallel: bool) -> Cluster {
    let data = gen_synthetic(SyntheticKind::LowRankPlusNoise, 160, 6, 3, 0.1, 11).unwrap().data;
    let mut c = Cluster::new(&data, &partition_powerlaw(160, 5, 2.0, 11).unwrap(), 11).unwrap();
    c.set_parallel(parallel);
    c
}

#[test]
fn scheduling_does_not_change_results() {
    let spec = KernelSpec::Gaussian { bandwidth: 2.0 };
    let params = DisKpcaParams { p: 60, m: 200, ..Default::default() };
    let run = |parallel| dis_kpca(&mut synthetic_cluster(parallel), &spec, 3, 0.5, &params, 7).unwrap();
    let (seq_sol, seq_ledger) = run(false);
    let (par_sol, par_ledger) = run(true);
    assert_eq!(seq_ledger, par_ledger);
    assert_eq!(seq_sol.indices, par_sol.indices);
    assert_eq!(seq_sol.coeffs, par_sol.coeffs);
    let (again, _) = run(true);
    assert_eq!(again.coeffs, par_sol.coeffs);
}

#[test]
fn worker_rngs_are_lane_separated() {
    let mut c = small_cluster(4, 5);
    let draws = c
        .run_round_stateless("draw", |v| Ok(v.rng("lane").random::<f64>()), |_, ups| Ok(ups))
        .unwrap();
    let again = c
        .run_round_stateless("draw", |v| Ok(v.rng("lane").random::<f64>()), |_, ups| Ok(ups))
        .unwrap();
    assert_eq!(draws, again);
    for i in 0..draws.len() {
        for j in i + 1..draws.len() {
            assert_ne!(draws[i], draws[j]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ledger_total_is_sum_of_entries(
        rounds in proptest::collection::vec((0usize..20, 0usize..20, any::<bool>()), 1..8),
        s in 1usize..6,
    ) {
        let mut c = small_cluster(s, 6);
        for (r, &(up, down, direct)) in rounds.iter().enumerate() {
            c.run_round_stateless(
                &format!("r{r}"),
                |v| Ok(vec![1.0; up + v.id()]),
                |m, _| if direct { m.send_to(0, "x", vec![0.0; down]) } else { m.broadcast("x", vec![0.0; down]) },
            )
            .unwrap();
        }
        let ledger = c.ledger();
        let per_round: usize = ledger.rounds.iter().map(|r| r.total()).sum();
        prop_assert_eq!(ledger.total_words(), per_round);
        prop_assert_eq!(ledger.total_words(), ledger.up_words() + ledger.down_words());
        let expected: usize = rounds
            .iter()
            .map(|&(up, down, direct)| s * up + s * (s - 1) / 2 + if direct { down } else { s * down })
            .sum();
        prop_assert_eq!(ledger.total_words(), expected);
        let text = ledger.to_jsonl().unwrap();
        prop_assert_eq!(&CommLedger::from_jsonl(&text).unwrap(), ledger);
    }

    #[test]
    fn partitions_assign_every_column_once(n in 1usize..300, s in 1usize..12, exp in 0.0f64..3.0, seed in any::<u64>()) {
        prop_assume!(n >= s);
        for p in [partition_even(n, s, seed).unwrap(), partition_powerlaw(n, s, exp, seed).unwrap()] {
            prop_assert_eq!(p.n(), n);
            prop_assert_eq!(p.sizes.iter().sum::<usize>(), n);
            prop_assert!(p.sizes.iter().all(|&c| c >= 1));
            let idx = p.worker_indices();
            for (w, cols) in idx.iter().enumerate() {
                prop_assert_eq!(cols.len(), p.sizes[w]);
            }
            let mut all: Vec<usize> = idx.concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
        let even = partition_even(n, s, seed).unwrap();
        prop_assert!(even.sizes.iter().max().unwrap() - even.sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn powerlaw_sizes_are_non_increasing(n in 50usize..2000, s in 1usize..8, exp in 0.5f64..3.0) {
        prop_assume!(n >= 10 * s);
        let sizes = powerlaw_sizes(n, s, exp).unwrap();
        prop_assert!(sizes.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn gather_reconstructs_data(n in 2usize..60, s in 1usize..6, seed in any::<u64>()) {
        prop_assume!(n >= s);
        let a = ColumnMatrix::from_dense(Mat::from_fn(3, n, |i, j| (i * n + j) as f64));
        let c = Cluster::new(&a, &partition_powerlaw(n, s, 1.5, seed).unwrap(), seed).unwrap();
        prop_assert_eq!(c.gather_global().unwrap(), a);
    }
}
