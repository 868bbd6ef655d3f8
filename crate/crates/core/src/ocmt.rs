//! One-covariate-at-a-time multiple testing, optionally filtered by the
//! principal components of the candidate pool, and the joint regression on
//! the survivors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factors::{pca_with, FactorCount};
use crate::frame::Quarter;
use crate::lasso::with_intercept;
use crate::regress::{newey_west_scalar, ols_named, OlsFit, Projector};

/// Standard normal quantile: Acklam's rational approximation followed by
/// one Halley step against the complementary error function.
pub fn inv_norm_cdf(p: f64) -> f64 {
    if !(p > 0.0 && p < 1.0) {
        return if p == 0.0 {
            f64::NEG_INFINITY
        } else if p == 1.0 {
            f64::INFINITY
        } else {
            f64::NAN
        };
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383_577_518_672_69e2,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    let cdf = 0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2);
    let e = cdf - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// `Phi^{-1}(1 - p / (2 K^delta))`.
pub fn critical_value(p: f64, k: usize, delta: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Parameter(format!("nominal size {p} outside (0, 1)")));
    }
    if k == 0 {
        return Err(Error::Parameter("critical value needs K >= 1".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!("exponent {delta} must be positive")));
    }
    let tail = p / (2.0 * (k as f64).powf(delta));
    // Upper quantile via the lower tail avoids cancellation in 1 - tail.
    Ok(-inv_norm_cdf(tail))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OcmtConfig {
    pub p: f64,
    pub delta: f64,
    /// Principal components of the candidates added to every test regression.
    pub factors: FactorCount,
    /// Newey-West lags for the t-ratios; 0 means classical.
    pub hac_lags: usize,
    /// K used in the critical value; defaults to the number of candidates.
    pub critical_k: Option<usize>,
}

impl Default for OcmtConfig {
    fn default() -> Self {
        Self {
            p: 0.05,
            delta: 1.0,
            factors: FactorCount::Fixed(1),
            hac_lags: 0,
            critical_k: None,
        }
    }
}

impl OcmtConfig {
    /// Plain conditional OCMT: no factor filtering.
    pub fn without_factors(self) -> Self {
        Self {
            factors: FactorCount::Fixed(0),
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::Parameter(format!("nominal size {} outside (0, 1)", self.p)));
        }
        if !(self.delta >= 1.0) {
            return Err(Error::Parameter(format!("delta {} below 1", self.delta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedVar {
    pub name: String,
    #[serde(skip)]
    pub index: usize,
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub coef: Option<f64>,
}

/// Outcome of one selection run (one window, one horizon, one method).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub window_end: Option<Quarter>,
    pub horizon: Option<usize>,
    pub method: String,
    pub delta: Option<f64>,
    pub critical_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub num_factors: Option<usize>,
    pub preselected: Vec<String>,
    /// Ordered by |t| descending for test-based methods.
    pub selected: Vec<SelectedVar>,
    /// t-ratio of every candidate in input order; `None` when skipped as collinear.
    #[serde(skip)]
    pub t_ratios: Vec<Option<f64>>,
}

impl SelectionResult {
    pub fn selected_names(&self) -> Vec<&str> {
        self.selected.iter().map(|s| s.name.as_str()).collect()
    }

    pub fn selected_indices(&self) -> Vec<usize> {
        self.selected.iter().map(|s| s.index).collect()
    }
}

/// Test each candidate column of `x` one at a time in a regression of `y`
/// on `[1, Z, PCs(x), x_j]` and keep those whose |t| exceeds the critical
/// value. The components only filter; they are not part of the result.
pub fn gocmt_select(
    y: &DVector<f64>,
    z: &DMatrix<f64>,
    x: &DMatrix<f64>,
    names: &[String],
    z_names: &[String],
    cfg: &OcmtConfig,
) -> Result<SelectionResult> {
    cfg.validate()?;
    let (t, k) = x.shape();
    if k == 0 {
        return Err(Error::Parameter("no candidates to test".into()));
    }
    if names.len() != k || z_names.len() != z.ncols() || y.len() != t || z.nrows() != t {
        return Err(Error::Parameter("selection inputs disagree in shape".into()));
    }

    let pcs = match cfg.factors {
        FactorCount::Fixed(0) => DMatrix::zeros(t, 0),
        count => pca_with(x, count)?.scores,
    };
    let mut w = with_intercept(z);
    if pcs.ncols() > 0 {
        let kz = w.ncols();
        w = w.insert_columns(kz, pcs.ncols(), 0.0);
        w.columns_mut(kz, pcs.ncols()).copy_from(&pcs);
    }
    let mut w_names = vec!["const".to_string()];
    w_names.extend(z_names.iter().cloned());
    w_names.extend((1..=pcs.ncols()).map(|i| format!("PC{i}")));
    let proj = Projector::with_names(&w, Some(&w_names))?;
    let dof = t as i64 - proj.rank() as i64 - 1;
    if dof < 1 {
        return Err(Error::InsufficientData(format!(
            "{t} observations for {} conditioning regressors plus one candidate",
            proj.rank()
        )));
    }
    let dof = dof as f64;
    let crit = critical_value(cfg.p, cfg.critical_k.unwrap_or(k), cfg.delta)?;
    let yt = proj.residualize_vec(y);
    let xt = proj.residualize(x);

    let mut t_ratios = Vec::with_capacity(k);
    for j in 0..k {
        let xj = xt.column(j);
        let ss = xj.norm_squared();
        let raw = x.column(j);
        let mean = raw.mean();
        let raw_ss: f64 = raw.iter().map(|v| (v - mean).powi(2)).sum();
        if !(raw_ss > 0.0) || ss <= 1e-12 * raw_ss {
            log::warn!("candidate `{}` is collinear with the conditioning set; skipped", names[j]);
            t_ratios.push(None);
            continue;
        }
        let phi = xj.dot(&yt) / ss;
        let e = &yt - xj * phi;
        let var = if cfg.hac_lags == 0 {
            e.norm_squared() / dof / ss
        } else {
            let scores: Vec<f64> = xj.iter().zip(e.iter()).map(|(a, b)| a * b).collect();
            newey_west_scalar(&scores, cfg.hac_lags) / (ss * ss) * (t as f64 / dof)
        };
        t_ratios.push(Some(phi / var.sqrt()));
    }

    let mut selected: Vec<SelectedVar> = t_ratios
        .iter()
        .enumerate()
        .filter_map(|(j, tr)| match tr {
            Some(tv) if tv.abs() > crit => Some(SelectedVar {
                name: names[j].clone(),
                index: j,
                t: Some(*tv),
                coef: None,
            }),
            _ => None,
        })
        .collect();
    selected.sort_by(|a, b| b.t.unwrap().abs().total_cmp(&a.t.unwrap().abs()));

    Ok(SelectionResult {
        window_end: None,
        horizon: None,
        method: if pcs.ncols() > 0 { "GOCMT" } else { "OCMT" }.to_string(),
        delta: Some(cfg.delta),
        critical_value: Some(crit),
        lambda: None,
        num_factors: Some(pcs.ncols()),
        preselected: z_names.to_vec(),
        selected,
        t_ratios,
    })
}

/// Joint OLS of `y` on an intercept, the pre-selected block and the selected covariates.
pub fn final_regression(
    y: &DVector<f64>,
    z: &DMatrix<f64>,
    x_sel: &DMatrix<f64>,
    names: &[String],
    hac_lags: usize,
) -> Result<OlsFit> {
    let (t, kz, kx) = (y.len(), z.ncols(), x_sel.ncols());
    if t <= 1 + kz + kx {
        return Err(Error::InsufficientData(format!("{t} observations for {} coefficients", 1 + kz + kx)));
    }
    let mut d = DMatrix::zeros(t, kz + kx);
    d.columns_mut(0, kz).copy_from(z);
    d.columns_mut(kz, kx).copy_from(x_sel);
    ols_named(y, &d, names, hac_lags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::ols;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|j| format!("x{j}")).collect()
    }

    #[test]
    fn reference_critical_values() {
        let c1 = critical_value(0.05, 52, 1.0).unwrap();
        let c15 = critical_value(0.05, 52, 1.5).unwrap();
        assert!((c1 - 3.30).abs() <= 0.01, "{c1}");
        assert!((c15 - 3.82).abs() <= 0.01, "{c15}");
        assert!((critical_value(0.05, 1, 1.0).unwrap() - 1.959_963_984_540_054).abs() < 1e-9);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let n = Normal::new(0.0, 1.0).unwrap();
        for p in [1e-12, 1e-6, 0.001, 0.0242, 0.03, 0.3, 0.5, 0.77, 0.99, 1.0 - 1e-9] {
            let x = inv_norm_cdf(p);
            assert!((n.cdf(x) - p).abs() <= 1e-12 * p.max(1e-3), "p={p}");
        }
    }

    #[test]
    fn critical_value_monotone() {
        let base = critical_value(0.05, 20, 1.0).unwrap();
        assert!(critical_value(0.05, 21, 1.0).unwrap() > base);
        assert!(critical_value(0.05, 20, 1.2).unwrap() > base);
        assert!(critical_value(0.06, 20, 1.0).unwrap() < base);
        assert!(critical_value(0.0, 20, 1.0).is_err());
        assert!(critical_value(0.05, 0, 1.0).is_err());
    }

    #[test]
    fn t_ratios_match_full_regressions() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let t = 70;
        let z = DMatrix::from_fn(t, 2, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = DMatrix::from_fn(t, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DVector::from_fn(t, |i, _| z[(i, 0)] + 0.4 * x[(i, 2)] + rng.sample::<f64, _>(StandardNormal));
        for hac in [0, 3] {
            let cfg = OcmtConfig {
                hac_lags: hac,
                ..OcmtConfig::default().without_factors()
            };
            let sel = gocmt_select(&y, &z, &x, &names(4), &names(2), &cfg).unwrap();
            for j in 0..4 {
                let mut d = DMatrix::zeros(t, 3);
                d.columns_mut(0, 2).copy_from(&z);
                d.set_column(2, &x.column(j));
                let full = ols(&y, &d, hac).unwrap();
                assert!((sel.t_ratios[j].unwrap() - full.t_ratios[3]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn planted_candidate_is_selected() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let t = 160;
        let x = DMatrix::from_fn(t, 52, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DVector::from_fn(t, |i, _| 0.8 * x[(i, 7)] + rng.sample::<f64, _>(StandardNormal));
        let sel = gocmt_select(&y, &DMatrix::zeros(t, 0), &x, &names(52), &[], &OcmtConfig::default()).unwrap();
        assert_eq!(sel.selected[0].name, "x7");
        assert!(sel.selected.iter().all(|s| s.t.unwrap().abs() > sel.critical_value.unwrap()));
    }

    #[test]
    fn orthogonal_candidates_not_selected() {
        // y orthogonal to the intercept and to both candidates.
        let x = DMatrix::from_fn(8, 2, |i, j| if j == 0 { [1.0, -1.0][i % 2] } else { [1.0, 1.0, -1.0, -1.0][i % 4] });
        let y = DVector::from_fn(8, |i, _| [1.0, -1.0, -1.0, 1.0][i % 4]);
        let sel = gocmt_select(&y, &DMatrix::zeros(8, 0), &x, &names(2), &[], &OcmtConfig::default().without_factors()).unwrap();
        assert!(sel.selected.is_empty());
        assert!(sel.t_ratios.iter().all(|t| t.unwrap().abs() < 1e-10));
    }

    #[test]
    fn collinear_candidate_is_skipped() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let z = DMatrix::from_fn(30, 1, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut x = DMatrix::from_fn(30, 2, |_, _| rng.sample::<f64, _>(StandardNormal));
        x.set_column(0, &(z.column(0) * 2.0));
        let y = DVector::from_fn(30, |i, _| z[(i, 0)]);
        let sel = gocmt_select(&y, &z, &x, &names(2), &names(1), &OcmtConfig::default().without_factors()).unwrap();
        assert_eq!(sel.t_ratios[0], None);
        assert!(sel.t_ratios[1].is_some());
    }

    #[test]
    fn final_regression_is_permutation_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let t = 40;
        let z = DMatrix::from_fn(t, 2, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = DMatrix::from_fn(t, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DVector::from_fn(t, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = names(5);
        let a = final_regression(&y, &z, &x, &n, 0).unwrap();
        let xp = x.select_columns(&[2, 0, 1]);
        let b = final_regression(&y, &z, &xp, &n, 0).unwrap();
        assert!((a.coefficients[3] - b.coefficients[4]).abs() < 1e-10);
        assert!((a.coefficients[5] - b.coefficients[3]).abs() < 1e-10);
        let empty = final_regression(&y, &z, &DMatrix::zeros(t, 0), &n[..2], 0).unwrap();
        assert_eq!(empty.coefficients.len(), 3);
    }
}
