//! WebAssembly bindings for the demo page. Each export returns a JSON
//! string; the plain functions behind them are usable natively.

use hdforecast::diagnostics::{gen_dgp, mc_experiment, DgpSpec, Loadings, McMethod};
use hdforecast::lasso::{cv_lambda, lambda_grid, CvConfig, LassoOptions, LassoProblem};
use hdforecast::ocmt::{critical_value, OcmtConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct LassoPathDemo {
    pub lambdas: Vec<f64>,
    /// One coefficient path (standardized scale) per covariate.
    pub paths: Vec<Vec<f64>>,
    /// Mean held-out error across folds at each grid point.
    pub cv_error: Vec<f64>,
    pub fold_minima: Vec<f64>,
    pub lambda_cv: f64,
    pub selected: Vec<usize>,
    pub signals: Vec<usize>,
}

/// Lasso path and blocked-CV choice on a synthetic one-factor design.
pub fn lasso_path(seed: u64, t: usize, k: usize, signals: usize, loading: f64, folds: usize) -> Result<LassoPathDemo, String> {
    let spec = DgpSpec {
        t,
        k,
        beta: (0..signals.min(k)).map(|j| if j % 2 == 0 { 1.0 } else { -0.6 }).collect(),
        num_factors: 1,
        loadings: Loadings::Uniform(loading),
        seed,
        ..Default::default()
    };
    let sample = gen_dgp(&spec).map_err(|e| e.to_string())?;
    let cfg = CvConfig {
        folds,
        grid_size: 60,
        ..Default::default()
    };
    let cv = cv_lambda(&sample.y, &sample.x, &cfg).map_err(|e| e.to_string())?;
    let prob = LassoProblem::new(&sample.y, &sample.x).map_err(|e| e.to_string())?;
    let grid = lambda_grid(prob.lambda_max(), cfg.grid_size, cfg.grid_ratio).map_err(|e| e.to_string())?;
    let opts = LassoOptions::default();
    let path = prob.path(&grid, &opts).map_err(|e| e.to_string())?;
    let paths = (0..k).map(|j| path.iter().map(|f| f.beta_std[j]).collect()).collect();
    let cv_error = (0..cv.grid.len())
        .map(|i| cv.folds.iter().map(|f| f.mse[i]).sum::<f64>() / cv.folds.len() as f64)
        .collect();
    let chosen = prob.fit(cv.lambda, None, &opts).map_err(|e| e.to_string())?;
    Ok(LassoPathDemo {
        lambdas: grid,
        paths,
        cv_error,
        fold_minima: cv.folds.iter().map(|f| f.lambda_min).collect(),
        lambda_cv: cv.lambda,
        selected: chosen.support,
        signals: sample.truth,
    })
}

#[derive(Debug, Serialize)]
pub struct CriticalCurve {
    pub k: Vec<usize>,
    pub delta: Vec<f64>,
    /// `values[d][i]` is the critical value for `delta[d]` and `k[i]`.
    pub values: Vec<Vec<f64>>,
}

pub fn critical_curve(p: f64, deltas: &[f64], k_max: usize) -> Result<CriticalCurve, String> {
    let k: Vec<usize> = (1..=k_max.max(1)).collect();
    let values = deltas
        .iter()
        .map(|&d| k.iter().map(|&kk| critical_value(p, kk, d).map_err(|e| e.to_string())).collect())
        .collect::<Result<_, _>>()?;
    Ok(CriticalCurve {
        k,
        delta: deltas.to_vec(),
        values,
    })
}

#[derive(Debug, Serialize)]
pub struct McRowDemo {
    pub method: String,
    pub tpr: Option<f64>,
    pub fpr: f64,
    pub fwer: f64,
}

/// Selection accuracy of OCMT and GOCMT (optionally Lasso) under a
/// common-factor design.
pub fn selection_mc(
    seed: u64,
    reps: usize,
    t: usize,
    k: usize,
    signals: usize,
    loading: f64,
    with_lasso: bool,
) -> Result<Vec<McRowDemo>, String> {
    let spec = DgpSpec {
        t,
        k,
        beta: vec![1.0; signals.min(k)],
        num_factors: 1,
        loadings: Loadings::Uniform(loading),
        seed,
        ..Default::default()
    };
    let cfg = OcmtConfig::default();
    let mut methods = vec![McMethod::Ocmt { config: cfg }, McMethod::Gocmt { config: cfg }];
    if with_lasso {
        methods.push(McMethod::Lasso {
            cv: CvConfig {
                grid_size: 30,
                ..Default::default()
            },
        });
    }
    let rep = mc_experiment(&spec, &methods, reps, seed).map_err(|e| e.to_string())?;
    Ok(rep
        .rows
        .into_iter()
        .map(|r| McRowDemo {
            method: r.method,
            tpr: (!r.tpr.is_nan()).then_some(r.tpr),
            fpr: r.fpr,
            fwer: r.fwer,
        })
        .collect())
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = lassoPath)]
pub fn lasso_path_js(seed: u32, t: usize, k: usize, signals: usize, loading: f64, folds: usize) -> Result<String, JsValue> {
    to_js(lasso_path(seed as u64, t, k, signals, loading, folds))
}

#[wasm_bindgen(js_name = criticalCurve)]
pub fn critical_curve_js(p: f64, delta: f64, k_max: usize) -> Result<String, JsValue> {
    let deltas = if delta == 1.0 { vec![1.0] } else { vec![1.0, delta] };
    to_js(critical_curve(p, &deltas, k_max))
}

#[wasm_bindgen(js_name = selectionMc)]
pub fn selection_mc_js(
    seed: u32,
    reps: usize,
    t: usize,
    k: usize,
    signals: usize,
    loading: f64,
    with_lasso: bool,
) -> Result<String, JsValue> {
    to_js(selection_mc(seed as u64, reps, t, k, signals, loading, with_lasso))
}
