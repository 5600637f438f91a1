use diskpca_web::demo::{compare_methods, leverage_map, sketch_accuracy};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn compare_reports_three_methods() {
    let out = parse(compare_methods(r#"{"n": 300, "k": 3, "n_adapt": 6}"#).unwrap());
    let results = out["results"].as_array().unwrap();
    let names: Vec<&str> = results.iter().map(|r| r["method"].as_str().unwrap()).collect();
    assert_eq!(names, ["disKPCA", "uniform+disLR", "uniform+batch"]);
    for r in results {
        let err = r["error"].as_f64().unwrap();
        assert!(err >= 0.0 && err <= out["trace"].as_f64().unwrap() * (1.0 + 1e-9));
    }
    assert!(results[1]["words"].as_u64() < results[0]["words"].as_u64());
    assert_eq!(out["embedding"].as_array().unwrap().len(), 300);
    let round_words: u64 = out["rounds"].as_array().unwrap().iter().map(|r| r[1].as_u64().unwrap()).sum();
    assert_eq!(round_words, results[0]["words"].as_u64().unwrap());
}

#[test]
fn compare_is_deterministic() {
    let params = r#"{"n": 200, "k": 3, "seed": 4}"#;
    assert_eq!(compare_methods(params).unwrap(), compare_methods(params).unwrap());
}

#[test]
fn leverage_map_marks_samples() {
    let out = parse(leverage_map("").unwrap());
    let points = out["points"].as_array().unwrap();
    assert_eq!(points.len(), 400);
    assert!(points.iter().any(|p| p["sampled"] == 1));
    assert!(points.iter().all(|p| p["score"].as_f64().unwrap() >= 0.0));
    let sizes: u64 = out["worker_sizes"].as_array().unwrap().iter().map(|s| s.as_u64().unwrap()).sum();
    assert_eq!(sizes, 400);
    assert!(leverage_map(r#"{"d": 3}"#).is_err());
}

#[test]
fn sketch_error_shrinks_with_size() {
    for kernel in ["gaussian", "polynomial"] {
        let params = format!(r#"{{"kernel": "{kernel}", "sizes": [8, 2048]}}"#);
        let rows = parse(sketch_accuracy(&params).unwrap());
        let errs: Vec<f64> = rows.as_array().unwrap().iter().map(|r| r["rel_error"].as_f64().unwrap()).collect();
        assert!(errs[1] < errs[0], "{kernel}: {errs:?}");
    }
    assert!(sketch_accuracy(r#"{"kernel": "laplace"}"#).is_err());
    assert!(sketch_accuracy("not json").is_err());
}
