use hdforecast_web::{critical_curve, lasso_path, selection_mc};

#[test]
fn lasso_demo_shapes() {
    let d = lasso_path(1, 120, 12, 3, 0.5, 5).unwrap();
    assert_eq!(d.paths.len(), 12);
    assert!(d.paths.iter().all(|p| p.len() == d.lambdas.len()));
    assert_eq!(d.cv_error.len(), d.lambdas.len());
    assert_eq!(d.fold_minima.len(), 5);
    let mean = d.fold_minima.iter().sum::<f64>() / 5.0;
    assert!((d.lambda_cv - mean).abs() < 1e-12);
    assert!(d.paths.iter().all(|p| p[0] == 0.0));
    assert_eq!(d.signals, vec![0, 1, 2]);
    let json = serde_json::to_string(&d).unwrap();
    assert!(json.contains("\"lambda_cv\""));
}

#[test]
fn critical_curve_monotone() {
    let c = critical_curve(0.05, &[1.0, 1.5], 60).unwrap();
    assert_eq!(c.values.len(), 2);
    assert!((c.values[0][51] - 3.3).abs() < 0.01);
    assert!((c.values[1][51] - 3.82).abs() < 0.01);
    for v in &c.values {
        assert!(v.windows(2).all(|w| w[1] > w[0]));
    }
    assert!(c.values[1].iter().zip(&c.values[0]).skip(1).all(|(a, b)| a > b));
}

#[test]
fn mc_demo_runs() {
    let rows = selection_mc(3, 20, 100, 20, 2, 1.0, true).unwrap();
    let names: Vec<&str> = rows.iter().map(|r| r.method.as_str()).collect();
    assert_eq!(names, ["OCMT", "GOCMT", "LASSO"]);
    assert!(rows[1].fpr < rows[0].fpr);
}
