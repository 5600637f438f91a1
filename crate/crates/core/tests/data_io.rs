use diskpca_core::data::{
    format_dataset, gen_synthetic, is_sparse, load_dataset, parse_dense_csv, parse_sparse, save_dataset, DataFormat,
    SyntheticKind,
};
use diskpca_core::matrix::{ColumnMatrix, Mat};
use proptest::prelude::*;
use std::path::Path;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), -1e6f64..1e6, any::<f64>().prop_filter("finite", |v| v.is_finite())]
}

fn matrix() -> impl Strategy<Value = Mat> {
    (1usize..8, 1usize..12).prop_flat_map(|(d, n)| {
        proptest::collection::vec(finite(), d * n).prop_map(move |v| Mat::from_vec(d, n, v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sparse_text_round_trip(m in matrix()) {
        let a = ColumnMatrix::from_dense(m.clone());
        let back = parse_sparse(&format_dataset(&a, DataFormat::SparseIndexValue)).unwrap();
        prop_assert_eq!(back.data.n_rows(), m.nrows());
        prop_assert_eq!(back.data.to_dense(), m);
        prop_assert!(back.labels.is_none());
    }

    #[test]
    fn dense_file_round_trip(m in matrix()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("points.csv");
        let a = ColumnMatrix::from_dense(m.clone());
        let format = DataFormat::from_path(&path);
        prop_assert_eq!(format, DataFormat::DenseCsv);
        save_dataset(&a, &path, format).unwrap();
        let back = load_dataset(&path, format).unwrap();
        prop_assert_eq!(back.data.to_dense(), m);
    }

    #[test]
    fn sparse_file_round_trip_is_stable(m in matrix()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("points.svm");
        let a = ColumnMatrix::from_dense(m);
        save_dataset(&a, &path, DataFormat::from_path(&path)).unwrap();
        let once = load_dataset(&path, DataFormat::SparseIndexValue).unwrap().data;
        save_dataset(&once, &path, DataFormat::SparseIndexValue).unwrap();
        let twice = load_dataset(&path, DataFormat::SparseIndexValue).unwrap().data;
        prop_assert_eq!(once, twice);
    }
}

#[test]
fn labelled_sparse_lines() {
    let ds = parse_sparse("1 1:0.5 3:2\n-1 2:1\n").unwrap();
    assert_eq!(ds.labels, Some(vec![1.0, -1.0]));
    assert_eq!(ds.data.n_rows(), 3);
    assert_eq!(ds.data.to_dense(), Mat::from_column_slice(3, 2, &[0.5, 0.0, 2.0, 0.0, 1.0, 0.0]));
}

#[test]
fn malformed_inputs_report_lines() {
    for (text, line) in [("1:1\n2:x\n", 2), ("0:1\n", 1), ("3:1 2:1\n", 1), ("1:1 junk\n", 1), ("1:inf\n", 1)] {
        match parse_sparse(text) {
            Err(diskpca_core::Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
    assert!(parse_sparse("# dim: 2\n3:1\n").is_err());
    assert!(parse_sparse("# only comments\n").is_err());
    assert!(matches!(parse_dense_csv("1,2\n3\n"), Err(diskpca_core::Error::Parse { line: 2, .. })));
    assert!(load_dataset(Path::new("/nonexistent/points.csv"), DataFormat::DenseCsv).is_err());
}

#[test]
fn synthetic_generators_are_seeded() {
    for kind in [SyntheticKind::LowRankPlusNoise, SyntheticKind::Clustered { separation: 3.0, imbalance: 1.0 }] {
        let a = gen_synthetic(kind, 50, 4, 3, 0.1, 8).unwrap();
        let b = gen_synthetic(kind, 50, 4, 3, 0.1, 8).unwrap();
        let c = gen_synthetic(kind, 50, 4, 3, 0.1, 9).unwrap();
        assert_eq!(a.data, b.data);
        assert_ne!(a.data, c.data);
        assert_eq!(a.data.n_cols(), 50);
        assert!(!is_sparse(&a.data));
    }
    let clustered = gen_synthetic(SyntheticKind::Clustered { separation: 3.0, imbalance: 1.0 }, 50, 4, 3, 0.1, 8).unwrap();
    let labels = clustered.labels.unwrap();
    assert_eq!(labels.len(), 50);
    assert!(labels.iter().all(|&l| l < 3));
}
