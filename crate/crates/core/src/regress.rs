//! Dense least squares: standardization, OLS with classical or Newey-West
//! t-ratios, and orthogonal projection off a set of columns.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative singular-value cutoff below which a design is rank deficient.
pub const RANK_TOL: f64 = 1e-10;

/// Per-column centering and scaling, `x~ = (x - mean) / scale` with the
/// scale taken as the root mean squared deviation (divisor T).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    /// Columns with no variation. They are centered but not scaled.
    pub constant: Vec<bool>,
}

impl Standardization {
    pub fn num_constant(&self) -> usize {
        self.constant.iter().filter(|&&c| c).count()
    }
}

pub fn standardize(x: &DMatrix<f64>) -> Result<(DMatrix<f64>, Standardization)> {
    let (t, k) = x.shape();
    if t == 0 || k == 0 {
        return Err(Error::Degenerate("empty matrix".into()));
    }
    let mut out = x.clone();
    let mut st = Standardization {
        means: Vec::with_capacity(k),
        scales: Vec::with_capacity(k),
        constant: Vec::with_capacity(k),
    };
    for j in 0..k {
        let mut col = out.column_mut(j);
        let mean = col.sum() / t as f64;
        col.add_scalar_mut(-mean);
        let rms = (col.norm_squared() / t as f64).sqrt();
        let constant = rms <= 1e-12 * mean.abs().max(1.0);
        if constant {
            col.fill(0.0);
            st.scales.push(1.0);
        } else {
            col /= rms;
            st.scales.push(rms);
        }
        st.means.push(mean);
        st.constant.push(constant);
    }
    if st.constant.iter().all(|&c| c) {
        return Err(Error::Degenerate("every column is constant".into()));
    }
    Ok((out, st))
}

/// Orthogonal projector onto the complement of `span(Z)`.
#[derive(Debug, Clone)]
pub struct Projector {
    // Left singular vectors of Z (T x r); empty when Z has no columns.
    u: DMatrix<f64>,
    // V * diag(1/sigma), for recovering (Z'Z)^{-1} Z' v.
    v_sinv: DMatrix<f64>,
}

impl Projector {
    pub fn new(z: &DMatrix<f64>) -> Result<Self> {
        Self::with_names(z, None)
    }

    pub fn with_names(z: &DMatrix<f64>, names: Option<&[String]>) -> Result<Self> {
        let (t, k) = z.shape();
        if k == 0 {
            return Ok(Self {
                u: DMatrix::zeros(t, 0),
                v_sinv: DMatrix::zeros(0, 0),
            });
        }
        if t < k {
            return Err(Error::InsufficientData(format!("{t} rows for {k} columns")));
        }
        let svd = z.clone().svd(true, true);
        check_rank(&svd, names)?;
        let u = svd.u.unwrap();
        let v = svd.v_t.unwrap().transpose();
        let mut v_sinv = v;
        for (j, s) in svd.singular_values.iter().enumerate() {
            v_sinv.column_mut(j).scale_mut(1.0 / s);
        }
        Ok(Self { u, v_sinv })
    }

    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    /// `M_Z a`.
    pub fn residualize(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        if self.rank() == 0 {
            return a.clone();
        }
        a - &self.u * (self.u.transpose() * a)
    }

    pub fn residualize_vec(&self, a: &DVector<f64>) -> DVector<f64> {
        if self.rank() == 0 {
            return a.clone();
        }
        a - &self.u * (self.u.tr_mul(a))
    }

    /// Least-squares coefficients `(Z'Z)^{-1} Z' v`.
    pub fn coefficients(&self, v: &DVector<f64>) -> DVector<f64> {
        if self.rank() == 0 {
            return DVector::zeros(0);
        }
        &self.v_sinv * self.u.tr_mul(v)
    }
}

/// `M_Z A`: the part of `A` orthogonal to every column of `Z`.
pub fn residualize(a: &DMatrix<f64>, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(Projector::new(z)?.residualize(a))
}

fn check_rank(svd: &nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>, names: Option<&[String]>) -> Result<()> {
    let sv = &svd.singular_values;
    let max = sv.max();
    let k = sv.len();
    let weak: Vec<usize> = (0..k).filter(|&i| !(sv[i] >= RANK_TOL * max) || max == 0.0).collect();
    if weak.is_empty() {
        return Ok(());
    }
    // Columns taking part in a near-null direction of the design.
    let v_t = svd.v_t.as_ref().expect("svd computed with V");
    let mut involved = vec![false; v_t.ncols()];
    for &i in &weak {
        let row = v_t.row(i);
        let big = row.amax();
        for (j, x) in row.iter().enumerate() {
            if x.abs() >= 0.1 * big {
                involved[j] = true;
            }
        }
    }
    let columns = involved
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(j, _)| match names {
            Some(n) => n[j].clone(),
            None => format!("column {j}"),
        })
        .collect();
    Err(Error::Collinear { columns })
}

/// Result of an OLS regression with an intercept. Coefficient vectors put
/// the intercept first.
#[derive(Debug, Clone, Serialize)]
pub struct OlsFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_ratios: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `RSS / (T - k)`.
    pub sigma2: f64,
    pub r_squared: f64,
    pub nobs: usize,
    /// Regressor count including the intercept.
    pub nregressors: usize,
    pub hac_lags: usize,
}

impl OlsFit {
    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn slopes(&self) -> &[f64] {
        &self.coefficients[1..]
    }

    /// `c + x'b` for a row of regressors (without the intercept).
    pub fn predict(&self, row: &[f64]) -> f64 {
        assert_eq!(row.len() + 1, self.coefficients.len(), "regressor count mismatch");
        self.intercept() + row.iter().zip(self.slopes()).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// OLS of `y` on an intercept and the columns of `x`. With `hac_lags = 0`
/// the t-ratios are classical, otherwise Newey-West with a Bartlett kernel.
pub fn ols(y: &DVector<f64>, x: &DMatrix<f64>, hac_lags: usize) -> Result<OlsFit> {
    let names: Vec<String> = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
    ols_named(y, x, &names, hac_lags)
}

pub fn ols_named(y: &DVector<f64>, x: &DMatrix<f64>, names: &[String], hac_lags: usize) -> Result<OlsFit> {
    let (t, k) = x.shape();
    if y.len() != t {
        return Err(Error::Parameter(format!("{} observations of y but {t} rows of X", y.len())));
    }
    if names.len() != k {
        return Err(Error::Parameter(format!("{} names for {k} columns", names.len())));
    }
    let p = k + 1;
    if t <= p {
        return Err(Error::InsufficientData(format!(
            "{t} observations for {p} coefficients"
        )));
    }
    if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite value in regression data".into()));
    }
    let mut d = DMatrix::from_element(t, p, 1.0);
    d.columns_mut(1, k).copy_from(x);
    let mut all_names = Vec::with_capacity(p);
    all_names.push("const".to_string());
    all_names.extend(names.iter().cloned());

    let svd = d.clone().svd(true, true);
    check_rank(&svd, Some(&all_names))?;
    let u = svd.u.as_ref().unwrap();
    let v = svd.v_t.as_ref().unwrap().transpose();
    let sv = &svd.singular_values;

    let uty = u.tr_mul(y);
    let mut coef = DVector::zeros(p);
    for j in 0..p {
        coef += v.column(j) * (uty[j] / sv[j]);
    }
    let fitted = &d * &coef;
    let resid = y - fitted;
    let rss = resid.norm_squared();
    let dof = (t - p) as f64;
    let sigma2 = rss / dof;

    // (D'D)^{-1} = V diag(1/s^2) V'
    let mut v_s2 = v.clone();
    for j in 0..p {
        v_s2.column_mut(j).scale_mut(1.0 / (sv[j] * sv[j]));
    }
    let xtx_inv = &v_s2 * v.transpose();

    let cov = if hac_lags == 0 {
        &xtx_inv * sigma2
    } else {
        let meat = newey_west_meat(&d, &resid, hac_lags);
        (&xtx_inv * meat * &xtx_inv) * (t as f64 / dof)
    };
    let std_errors: Vec<f64> = (0..p).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
    let coefficients: Vec<f64> = coef.iter().copied().collect();
    let t_ratios = coefficients
        .iter()
        .zip(&std_errors)
        .map(|(b, s)| if *s > 0.0 { b / s } else { f64::INFINITY.copysign(*b) })
        .collect();
    let ybar = y.mean();
    let tss: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };

    Ok(OlsFit {
        names: all_names,
        coefficients,
        std_errors,
        t_ratios,
        residuals: resid.iter().copied().collect(),
        sigma2,
        r_squared,
        nobs: t,
        nregressors: p,
        hac_lags,
    })
}

/// `sum_t e_t^2 d_t d_t' + sum_l w_l sum_t e_t e_{t-l} (d_t d_{t-l}' + d_{t-l} d_t')`
/// with Bartlett weights `w_l = 1 - l / (L + 1)`.
pub(crate) fn newey_west_meat(d: &DMatrix<f64>, e: &DVector<f64>, lags: usize) -> DMatrix<f64> {
    let (t, p) = d.shape();
    // Scores g_t = d_t e_t stored as rows.
    let mut g = d.clone();
    for i in 0..t {
        g.row_mut(i).scale_mut(e[i]);
    }
    let mut s = g.tr_mul(&g);
    for l in 1..=lags.min(t.saturating_sub(1)) {
        let w = 1.0 - l as f64 / (lags as f64 + 1.0);
        let lead = g.rows(l, t - l);
        let lagged = g.rows(0, t - l);
        let gamma = lead.tr_mul(&lagged);
        s += (&gamma + gamma.transpose()) * w;
    }
    debug_assert_eq!(s.shape(), (p, p));
    s
}

/// Newey-West long-run variance of a scalar score sequence.
pub(crate) fn newey_west_scalar(scores: &[f64], lags: usize) -> f64 {
    let t = scores.len();
    let mut s: f64 = scores.iter().map(|v| v * v).sum();
    for l in 1..=lags.min(t.saturating_sub(1)) {
        let w = 1.0 - l as f64 / (lags as f64 + 1.0);
        let gamma: f64 = (l..t).map(|i| scores[i] * scores[i - l]).sum();
        s += 2.0 * w * gamma;
    }
    s
}
