//! Principal components of standardized panels and two-stage (global)
//! factors built from per-country components.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regress::{standardize, Standardization};

/// Rule for the number of retained components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorCount {
    Fixed(usize),
    /// `argmax_j ev_j / ev_{j+1}` over the first half of the spectrum.
    EigenRatio,
    /// Eigenvalues above one.
    Kaiser,
}

impl Default for FactorCount {
    fn default() -> Self {
        FactorCount::Fixed(1)
    }
}

#[derive(Debug, Clone)]
pub struct FactorModel {
    /// T x m, `X~ * loadings`.
    pub scores: DMatrix<f64>,
    /// K x m unit-norm loading vectors.
    pub loadings: DMatrix<f64>,
    /// Full spectrum of the correlation matrix, descending.
    pub eigenvalues: Vec<f64>,
    pub standardization: Standardization,
}

impl FactorModel {
    pub fn num_factors(&self) -> usize {
        self.scores.ncols()
    }

    /// Rank-m approximation of the standardized panel.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.scores * self.loadings.transpose()
    }

    pub fn explained_share(&self) -> f64 {
        let total: f64 = self.eigenvalues.iter().sum();
        self.eigenvalues[..self.num_factors()].iter().sum::<f64>() / total
    }
}

pub fn choose_num_factors(eigenvalues: &[f64], method: FactorCount) -> usize {
    match method {
        FactorCount::Fixed(m) => m,
        FactorCount::Kaiser => eigenvalues.iter().filter(|&&e| e > 1.0).count(),
        FactorCount::EigenRatio => {
            let n = eigenvalues.len();
            if n < 2 {
                return n;
            }
            let jmax = (n / 2).clamp(1, n - 1);
            let mut best = (f64::NEG_INFINITY, 1);
            for j in 1..=jmax {
                let (a, b) = (eigenvalues[j - 1], eigenvalues[j]);
                let ratio = if b > 0.0 { a / b } else { f64::INFINITY };
                if ratio > best.0 {
                    best = (ratio, j);
                }
            }
            best.1
        }
    }
}

struct Spectrum {
    values: Vec<f64>,
    // K x r eigenvectors of X'X/T matching `values[..r]`
    vectors: DMatrix<f64>,
}

fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let vectors = eig.eigenvectors.select_columns(&order);
    (values, vectors)
}

fn spectrum(xs: &DMatrix<f64>, m: usize) -> Spectrum {
    let (t, k) = xs.shape();
    let tf = t as f64;
    if k <= t {
        let (values, vectors) = sorted_eigen(xs.tr_mul(xs) / tf);
        return Spectrum { values, vectors };
    }
    // Dual problem on the T x T Gram matrix; loadings v = X'u / sqrt(T ev).
    let (values, u) = sorted_eigen(xs * xs.transpose() / tf);
    let top = values[0];
    if values[..m].iter().any(|&ev| ev <= 1e-12 * top) {
        let (_, vectors) = sorted_eigen(xs.tr_mul(xs) / tf);
        return Spectrum { values, vectors };
    }
    let mut vectors = DMatrix::zeros(k, m);
    for i in 0..m {
        let v = xs.tr_mul(&u.column(i)) / (tf * values[i]).sqrt();
        vectors.set_column(i, &v);
    }
    Spectrum { values, vectors }
}

fn build(xs: &DMatrix<f64>, std: Standardization, spec: Spectrum, m: usize) -> FactorModel {
    let mut loadings = spec.vectors.columns(0, m).into_owned();
    for mut col in loadings.column_iter_mut() {
        let (i, _) = col.iter().enumerate().fold((0, 0.0), |acc, (i, v)| {
            if v.abs() > acc.1 {
                (i, v.abs())
            } else {
                acc
            }
        });
        if col[i] < 0.0 {
            col.neg_mut();
        }
    }
    let scores = xs * &loadings;
    FactorModel {
        scores,
        loadings,
        eigenvalues: spec.values,
        standardization: std,
    }
}

/// Top-`m` principal components of the column-standardized `x`.
pub fn pca(x: &DMatrix<f64>, m: usize) -> Result<FactorModel> {
    let (t, k) = x.shape();
    if m == 0 || m > t.min(k) {
        return Err(Error::Parameter(format!("{m} components requested from a {t} x {k} panel")));
    }
    let (xs, std) = standardize(x)?;
    let spec = spectrum(&xs, m);
    Ok(build(&xs, std, spec, m))
}

/// PCA with the component count chosen from the spectrum. May return zero
/// components when the rule selects none.
pub fn pca_with(x: &DMatrix<f64>, count: FactorCount) -> Result<FactorModel> {
    let (t, k) = x.shape();
    let (xs, std) = standardize(x)?;
    let full = match count {
        FactorCount::Fixed(m) => {
            if m > t.min(k) {
                return Err(Error::Parameter(format!("{m} components requested from a {t} x {k} panel")));
            }
            spectrum(&xs, m)
        }
        _ => spectrum(&xs, 1),
    };
    let m = choose_num_factors(&full.values[..t.min(k)], count).min(t.min(k));
    let spec = if m > full.vectors.ncols() { spectrum(&xs, m) } else { full };
    Ok(build(&xs, std, spec, m))
}

/// Per-country components, then components of the stacked country scores.
pub fn hierarchical_global_factors(
    panels: &[DMatrix<f64>],
    m_local: usize,
    m_global: usize,
) -> Result<(Vec<FactorModel>, FactorModel)> {
    let t = panels
        .first()
        .ok_or_else(|| Error::Parameter("no country panels".into()))?
        .nrows();
    if let Some(p) = panels.iter().find(|p| p.nrows() != t) {
        return Err(Error::Alignment(format!("panels with {t} and {} rows", p.nrows())));
    }
    let locals = panels.iter().map(|p| pca(p, m_local)).collect::<Result<Vec<_>>>()?;
    let mut stacked = DMatrix::zeros(t, m_local * locals.len());
    for (i, f) in locals.iter().enumerate() {
        stacked.columns_mut(i * m_local, m_local).copy_from(&f.scores);
    }
    let global = pca(&stacked, m_global)?;
    Ok((locals, global))
}
