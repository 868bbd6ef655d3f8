//! L1-penalized least squares by cyclic coordinate descent, blocked
//! time-series cross-validation with per-fold penalty averaging, and the
//! two-stage Lasso that leaves a block of pre-selected regressors unpenalized.
//!
//! The objective throughout is `(1/2T) RSS + lambda * ||beta||_1` on
//! standardized covariates.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par_map;
use crate::regress::{standardize, Projector, Standardization};

pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    debug_assert!(gamma >= 0.0);
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoOptions {
    /// Stop once no coefficient moves more than this in a sweep.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Keep the objective after every sweep in [`LassoFit::objective_trace`].
    #[serde(default)]
    pub record_objective: bool,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_sweeps: 10_000,
            record_objective: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LassoFit {
    /// Intercept on the original scale of `X`.
    pub intercept: f64,
    /// Coefficients on the standardized covariates.
    pub beta_std: Vec<f64>,
    /// Coefficients on the original covariates.
    pub beta: Vec<f64>,
    pub support: Vec<usize>,
    pub lambda: f64,
    pub objective: f64,
    pub iterations: usize,
    #[serde(skip)]
    pub objective_trace: Vec<f64>,
}

impl LassoFit {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept + row.iter().zip(&self.beta).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// A standardized Lasso design, reusable across penalties.
#[derive(Debug, Clone)]
pub struct LassoProblem {
    n: usize,
    p: usize,
    // standardized X, column-major
    x: Vec<f64>,
    y: Vec<f64>,
    y_mean: f64,
    std: Standardization,
    col_sq: Vec<f64>,
    free: Vec<usize>,
}

impl LassoProblem {
    pub fn new(y: &DVector<f64>, x: &DMatrix<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        if y.len() != n {
            return Err(Error::Parameter(format!("{} targets for {n} rows", y.len())));
        }
        if n < 2 {
            return Err(Error::InsufficientData(format!("{n} observations")));
        }
        if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite value in Lasso data".into()));
        }
        let (xs, std) = standardize(x)?;
        if std.num_constant() > 0 {
            log::warn!("{} constant column(s) left out of the penalized set", std.num_constant());
        }
        let y_mean = y.mean();
        let col_sq = (0..p).map(|j| xs.column(j).norm_squared() / n as f64).collect();
        let free = (0..p).filter(|&j| !std.constant[j]).collect();
        Ok(Self {
            n,
            p,
            x: xs.as_slice().to_vec(),
            y: y.iter().map(|v| v - y_mean).collect(),
            y_mean,
            std,
            col_sq,
            free,
        })
    }

    pub fn nobs(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.p
    }

    pub fn standardization(&self) -> &Standardization {
        &self.std
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.x[j * self.n..(j + 1) * self.n]
    }

    /// Smallest penalty with an empty support: `max_j |x_j' y| / T`.
    pub fn lambda_max(&self) -> f64 {
        self.free
            .iter()
            .map(|&j| dot(self.col(j), &self.y).abs() / self.n as f64)
            .fold(0.0, f64::max)
    }

    /// Gradient of the smooth part at `beta_std`, `x_j'(y - X beta)/T`, for all columns.
    pub fn correlations(&self, beta_std: &[f64]) -> Vec<f64> {
        let r = self.residual(beta_std);
        (0..self.p).map(|j| dot(self.col(j), &r) / self.n as f64).collect()
    }

    fn residual(&self, beta: &[f64]) -> Vec<f64> {
        let mut r = self.y.clone();
        for &j in &self.free {
            if beta[j] != 0.0 {
                axpy(-beta[j], self.col(j), &mut r);
            }
        }
        r
    }

    pub fn objective(&self, beta_std: &[f64], lambda: f64) -> f64 {
        let r = self.residual(beta_std);
        0.5 * dot(&r, &r) / self.n as f64 + lambda * beta_std.iter().map(|b| b.abs()).sum::<f64>()
    }

    pub fn fit(&self, lambda: f64, warm: Option<&[f64]>, opts: &LassoOptions) -> Result<LassoFit> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!("penalty {lambda} must be finite and nonnegative")));
        }
        let mut beta = match warm {
            Some(w) if w.len() == self.p => w.to_vec(),
            Some(w) => {
                return Err(Error::Parameter(format!("warm start of length {} for {} columns", w.len(), self.p)))
            }
            None => vec![0.0; self.p],
        };
        for (j, &c) in self.std.constant.iter().enumerate() {
            if c {
                beta[j] = 0.0;
            }
        }
        let mut trace = Vec::new();
        let mut sweeps = 0;
        let mut r;
        'outer: loop {
            // Fresh residual each full pass keeps rounding drift out of long runs.
            r = self.residual(&beta);
            let change = self.sweep(self.free.iter().copied(), lambda, &mut beta, &mut r);
            sweeps += 1;
            if opts.record_objective {
                trace.push(self.objective(&beta, lambda));
            }
            if change < opts.tol {
                break;
            }
            loop {
                if sweeps >= opts.max_sweeps {
                    return Err(Error::NotConverged {
                        iterations: sweeps,
                        max_change: change,
                    });
                }
                let support: Vec<usize> = self.free.iter().copied().filter(|&j| beta[j] != 0.0).collect();
                let inner = self.sweep(support.into_iter(), lambda, &mut beta, &mut r);
                sweeps += 1;
                if opts.record_objective {
                    trace.push(self.objective(&beta, lambda));
                }
                if inner < opts.tol {
                    continue 'outer;
                }
            }
        }
        Ok(self.package(beta, lambda, sweeps, trace))
    }

    fn sweep(&self, cols: impl Iterator<Item = usize>, lambda: f64, beta: &mut [f64], r: &mut [f64]) -> f64 {
        let n = self.n as f64;
        let mut max_change: f64 = 0.0;
        for j in cols {
            let xj = self.col(j);
            let old = beta[j];
            let z = dot(xj, r) / n + self.col_sq[j] * old;
            let new = soft_threshold(z, lambda) / self.col_sq[j];
            if new != old {
                axpy(old - new, xj, r);
                beta[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        max_change
    }

    fn package(&self, beta_std: Vec<f64>, lambda: f64, iterations: usize, trace: Vec<f64>) -> LassoFit {
        let beta: Vec<f64> = beta_std.iter().zip(&self.std.scales).map(|(b, s)| b / s).collect();
        let intercept = self.y_mean - beta.iter().zip(&self.std.means).map(|(b, m)| b * m).sum::<f64>();
        let support = (0..self.p).filter(|&j| beta_std[j] != 0.0).collect();
        let objective = self.objective(&beta_std, lambda);
        LassoFit {
            intercept,
            beta_std,
            beta,
            support,
            lambda,
            objective,
            iterations,
            objective_trace: trace,
        }
    }

    /// Fits along `grid` (largest penalty first), warm-starting each from the last.
    pub fn path(&self, grid: &[f64], opts: &LassoOptions) -> Result<Vec<LassoFit>> {
        let mut out: Vec<LassoFit> = Vec::with_capacity(grid.len());
        for &lambda in grid {
            let warm = out.last().map(|f| f.beta_std.as_slice());
            let fit = self.fit(lambda, warm, opts)?;
            out.push(fit);
        }
        Ok(out)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Minimize `(1/2T) sum (y_t - c - x_t'b)^2 + lambda ||b||_1` over standardized `x`.
pub fn lasso_fit(y: &DVector<f64>, x: &DMatrix<f64>, lambda: f64) -> Result<LassoFit> {
    LassoProblem::new(y, x)?.fit(lambda, None, &LassoOptions::default())
}

pub fn lambda_max(y: &DVector<f64>, x: &DMatrix<f64>) -> Result<f64> {
    Ok(LassoProblem::new(y, x)?.lambda_max())
}

/// Strictly decreasing geometric grid from `lambda_max` to `ratio * lambda_max`.
pub fn lambda_grid(lambda_max: f64, size: usize, ratio: f64) -> Result<Vec<f64>> {
    if size == 0 || !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Parameter(format!("grid of size {size} with ratio {ratio}")));
    }
    if !(lambda_max > 0.0) {
        return Ok(vec![0.0]);
    }
    if size == 1 {
        return Ok(vec![lambda_max]);
    }
    let step = ratio.ln() / (size - 1) as f64;
    Ok((0..size).map(|i| lambda_max * (step * i as f64).exp()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub folds: usize,
    pub grid_size: usize,
    pub grid_ratio: f64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 10,
            grid_size: 100,
            grid_ratio: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldResult {
    pub index: usize,
    /// Held-out rows `[test_start, test_end)`.
    pub test_start: usize,
    pub test_end: usize,
    pub lambda_min: f64,
    pub mse: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub grid: Vec<f64>,
    pub folds: Vec<FoldResult>,
    /// Arithmetic mean of the per-fold minimizers.
    pub lambda: f64,
}

/// Contiguous, ordered, gap-free blocks covering `0..t`; the first `t % m`
/// blocks are one row longer.
pub fn blocked_folds(t: usize, m: usize) -> Result<Vec<Range<usize>>> {
    if m < 2 {
        return Err(Error::Parameter(format!("need at least 2 folds, got {m}")));
    }
    if t < 2 * m {
        return Err(Error::InsufficientData(format!("{t} observations for {m} folds")));
    }
    let (base, extra) = (t / m, t % m);
    let mut start = 0;
    Ok((0..m)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect())
}

/// Generic blocked CV driver: `score(fold, train_rows, test_rows)` returns
/// the held-out MSE at every grid point.
pub fn cv_from_scores<F>(grid: &[f64], folds: &[Range<usize>], score: F) -> Result<CvResult>
where
    F: Fn(usize, &[usize], Range<usize>) -> Result<Vec<f64>> + Sync,
{
    let total = folds.last().map_or(0, |r| r.end);
    let results = par_map(folds.len(), |m| {
        let test = folds[m].clone();
        let train: Vec<usize> = (0..total).filter(|i| !test.contains(i)).collect();
        let mse = score(m, &train, test.clone())?;
        if mse.len() != grid.len() {
            return Err(Error::Parameter(format!("{} scores for {} grid points", mse.len(), grid.len())));
        }
        // First minimum wins ties: the larger penalty on a decreasing grid.
        let best = (0..mse.len())
            .filter(|&i| mse[i].is_finite())
            .fold(None, |acc: Option<usize>, i| match acc {
                Some(b) if mse[b] <= mse[i] => Some(b),
                _ => Some(i),
            })
            .ok_or_else(|| Error::Degenerate(format!("fold {m} has no finite CV error")))?;
        Ok(FoldResult {
            index: m,
            test_start: test.start,
            test_end: test.end,
            lambda_min: grid[best],
            mse,
        })
    });
    let folds = results.into_iter().collect::<Result<Vec<_>>>()?;
    // Running mean: exact when every fold agrees.
    let lambda = folds
        .iter()
        .enumerate()
        .fold(0.0, |m, (k, f)| m + (f.lambda_min - m) / (k + 1) as f64);
    Ok(CvResult {
        grid: grid.to_vec(),
        folds,
        lambda,
    })
}

fn rows(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    m.select_rows(idx)
}

fn rows_vec(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

fn mse<P: Fn(&[f64]) -> f64>(y: &DVector<f64>, x: &DMatrix<f64>, test: &Range<usize>, predict: P) -> f64 {
    let mut row = vec![0.0; x.ncols()];
    let mut sse = 0.0;
    for t in test.clone() {
        for (j, r) in row.iter_mut().enumerate() {
            *r = x[(t, j)];
        }
        sse += (y[t] - predict(&row)).powi(2);
    }
    sse / test.len() as f64
}

/// Blocked CV for the plain Lasso.
pub fn cv_lambda(y: &DVector<f64>, x: &DMatrix<f64>, cfg: &CvConfig) -> Result<CvResult> {
    let folds = blocked_folds(y.len(), cfg.folds)?;
    let full = LassoProblem::new(y, x)?;
    let grid = lambda_grid(full.lambda_max(), cfg.grid_size, cfg.grid_ratio)?;
    let opts = LassoOptions::default();
    cv_from_scores(&grid, &folds, |_, train, test| {
        let prob = LassoProblem::new(&rows_vec(y, train), &rows(x, train))?;
        let path = prob.path(&grid, &opts)?;
        Ok(path.iter().map(|f| mse(y, x, &test, |r| f.predict(r))).collect())
    })
}

/// Lasso with an unpenalized block `Z` (an intercept is always added).
/// Solved by projecting `y` and `X` off `[1, Z]`, restandardizing the
/// projected `X`, running the plain Lasso, then recovering the `Z`
/// coefficients by least squares on `y - X beta`.
#[derive(Debug, Clone)]
pub struct PartialledProblem {
    y: DVector<f64>,
    x: DMatrix<f64>,
    proj: Projector,
    inner: LassoProblem,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialledFit {
    /// Intercept followed by the coefficients on `Z`.
    pub delta: Vec<f64>,
    /// Penalized part; `intercept` mirrors `delta[0]`.
    pub lasso: LassoFit,
}

impl PartialledFit {
    pub fn predict(&self, z_row: &[f64], x_row: &[f64]) -> f64 {
        self.delta[0]
            + z_row.iter().zip(&self.delta[1..]).map(|(a, b)| a * b).sum::<f64>()
            + x_row.iter().zip(&self.lasso.beta).map(|(a, b)| a * b).sum::<f64>()
    }
}

pub(crate) fn with_intercept(z: &DMatrix<f64>) -> DMatrix<f64> {
    let (t, k) = z.shape();
    let mut zc = DMatrix::from_element(t, k + 1, 1.0);
    zc.columns_mut(1, k).copy_from(z);
    zc
}

impl PartialledProblem {
    pub fn new(y: &DVector<f64>, z: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<Self> {
        if z.nrows() != y.len() || x.nrows() != y.len() {
            return Err(Error::Parameter("y, Z and X must have the same number of rows".into()));
        }
        let proj = Projector::new(&with_intercept(z))?;
        let yt = proj.residualize_vec(y);
        let xt = proj.residualize(x);
        let inner = LassoProblem::new(&yt, &xt)?;
        Ok(Self {
            y: y.clone(),
            x: x.clone(),
            proj,
            inner,
        })
    }

    pub fn inner(&self) -> &LassoProblem {
        &self.inner
    }

    pub fn lambda_max(&self) -> f64 {
        self.inner.lambda_max()
    }

    pub fn fit(&self, lambda: f64, warm: Option<&[f64]>, opts: &LassoOptions) -> Result<PartialledFit> {
        let mut lasso = self.inner.fit(lambda, warm, opts)?;
        let xb = &self.x * DVector::from_column_slice(&lasso.beta);
        let delta: Vec<f64> = self.proj.coefficients(&(&self.y - xb)).iter().copied().collect();
        lasso.intercept = delta[0];
        Ok(PartialledFit { delta, lasso })
    }

    pub fn path(&self, grid: &[f64], opts: &LassoOptions) -> Result<Vec<PartialledFit>> {
        let mut out: Vec<PartialledFit> = Vec::with_capacity(grid.len());
        for &lambda in grid {
            let warm = out.last().map(|f| f.lasso.beta_std.as_slice());
            out.push(self.fit(lambda, warm, opts)?);
        }
        Ok(out)
    }
}

pub fn partialled_lasso(y: &DVector<f64>, z: &DMatrix<f64>, x: &DMatrix<f64>, lambda: f64) -> Result<PartialledFit> {
    PartialledProblem::new(y, z, x)?.fit(lambda, None, &LassoOptions::default())
}

/// Blocked CV for the partialled Lasso; each fold re-projects on its training rows.
pub fn cv_partialled_lambda(
    y: &DVector<f64>,
    z: &DMatrix<f64>,
    x: &DMatrix<f64>,
    cfg: &CvConfig,
) -> Result<CvResult> {
    let folds = blocked_folds(y.len(), cfg.folds)?;
    let full = PartialledProblem::new(y, z, x)?;
    let grid = lambda_grid(full.lambda_max(), cfg.grid_size, cfg.grid_ratio)?;
    let opts = LassoOptions::default();
    let kz = z.ncols();
    let mut zx = DMatrix::zeros(y.len(), kz + x.ncols());
    zx.columns_mut(0, kz).copy_from(z);
    zx.columns_mut(kz, x.ncols()).copy_from(x);
    cv_from_scores(&grid, &folds, |_, train, test| {
        let prob = PartialledProblem::new(&rows_vec(y, train), &rows(z, train), &rows(x, train))?;
        let path = prob.path(&grid, &opts)?;
        Ok(path
            .iter()
            .map(|f| mse(y, &zx, &test, |r| f.predict(&r[..kz], &r[kz..])))
            .collect())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::ols;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(rng: &mut ChaCha8Rng, t: usize, k: usize) -> DMatrix<f64> {
        DMatrix::from_fn(t, k, |_, _| rng.sample(StandardNormal))
    }

    fn sparse_target(rng: &mut ChaCha8Rng, x: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_fn(x.nrows(), |i, _| 1.0 + 2.0 * x[(i, 0)] - x[(i, 1)] + 0.5 * rng.sample::<f64, _>(StandardNormal))
    }

    #[test]
    fn soft_threshold_examples() {
        assert!((soft_threshold(0.8, 0.3) - 0.5).abs() < 1e-15);
        assert!((soft_threshold(-0.8, 0.3) + 0.5).abs() < 1e-15);
        assert_eq!(soft_threshold(0.2, 0.3), 0.0);
    }

    #[test]
    fn zero_penalty_is_ols() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = gaussian(&mut rng, 60, 5);
        let y = sparse_target(&mut rng, &x);
        let fit = lasso_fit(&y, &x, 0.0).unwrap();
        let o = ols(&y, &x, 0).unwrap();
        assert!((fit.intercept - o.intercept()).abs() < 1e-6);
        for (a, b) in fit.beta.iter().zip(o.slopes()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn empty_support_from_lambda_max() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x = gaussian(&mut rng, 50, 6);
        let y = sparse_target(&mut rng, &x);
        let lmax = lambda_max(&y, &x).unwrap();
        for scale in [1.0, 1.0001, 3.0] {
            let fit = lasso_fit(&y, &x, scale * lmax).unwrap();
            assert!(fit.support.is_empty());
            assert!((fit.intercept - y.mean()).abs() < 1e-12);
        }
        assert!(!lasso_fit(&y, &x, 0.99 * lmax).unwrap().support.is_empty());
    }

    #[test]
    fn lambda_max_definition() {
        // standardized x, centered y with x'y/T = 0.8
        let x = DMatrix::from_column_slice(4, 1, &[1.0, -1.0, 1.0, -1.0]);
        let y = DVector::from_vec(vec![0.8, -0.8, 0.8, -0.8]);
        assert!((lambda_max(&y, &x).unwrap() - 0.8).abs() < 1e-15);
        let orth = DVector::from_vec(vec![1.0, 1.0, -1.0, -1.0]);
        assert_eq!(lambda_max(&orth, &x).unwrap(), 0.0);
    }

    // Scalar objective minimized by a fine grid, independent of the closed form.
    fn grid_argmin(g: f64, lambda: f64) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        let n = 200_000;
        for i in 0..=n {
            let b = -2.0 + 4.0 * i as f64 / n as f64;
            let f = 0.5 * (b * b) - g * b + lambda * b.abs();
            if f < best.0 {
                best = (f, b);
            }
        }
        best.1
    }

    #[test]
    fn orthonormal_design_is_soft_thresholded() {
        // Columns of a scaled Hadamard-like design: mean zero, x'x/T = I.
        let rows = [
            [1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ];
        let x = DMatrix::from_fn(8, 3, |i, j| rows[i % 4][j]);
        let y = DVector::from_vec(vec![1.2, -0.3, 0.5, 0.1, 0.9, -0.6, 0.2, 0.4]);
        let lambda = 0.15;
        let fit = lasso_fit(&y, &x, lambda).unwrap();
        let yc = y.add_scalar(-y.mean());
        for j in 0..3 {
            let g = x.column(j).dot(&yc) / 8.0;
            assert!((fit.beta_std[j] - soft_threshold(g, lambda)).abs() < 1e-10);
            assert!((fit.beta_std[j] - grid_argmin(g, lambda)).abs() < 2e-5);
        }
    }

    #[test]
    fn objective_never_increases_across_sweeps() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let base = gaussian(&mut rng, 80, 10);
        // correlated columns make the descent take many sweeps
        let x = DMatrix::from_fn(80, 10, |i, j| base[(i, j)] + 0.9 * base[(i, 0)]);
        let y = sparse_target(&mut rng, &x);
        let prob = LassoProblem::new(&y, &x).unwrap();
        let opts = LassoOptions {
            record_objective: true,
            ..Default::default()
        };
        let fit = prob.fit(0.01, None, &opts).unwrap();
        assert!(fit.objective_trace.len() > 3);
        for w in fit.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-14);
        }
    }

    #[test]
    fn nonconvergence_reports_sweeps() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let x = gaussian(&mut rng, 40, 8);
        let y = sparse_target(&mut rng, &x);
        let prob = LassoProblem::new(&y, &x).unwrap();
        let opts = LassoOptions {
            max_sweeps: 2,
            tol: 1e-15,
            ..Default::default()
        };
        assert!(matches!(prob.fit(1e-4, None, &opts), Err(Error::NotConverged { iterations: 2, .. })));
    }

    #[test]
    fn rejects_non_finite() {
        let x = DMatrix::from_column_slice(3, 1, &[1.0, f64::NAN, 2.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(matches!(lasso_fit(&y, &x, 0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn warm_start_is_no_worse_than_cold() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let x = gaussian(&mut rng, 60, 12);
        let y = sparse_target(&mut rng, &x);
        let prob = LassoProblem::new(&y, &x).unwrap();
        let grid = lambda_grid(prob.lambda_max(), 20, 1e-2).unwrap();
        for w in grid.windows(2) {
            assert!(w[1] < w[0]);
        }
        let one = LassoOptions {
            max_sweeps: 1,
            tol: f64::INFINITY,
            ..Default::default()
        };
        let path = prob.path(&grid, &LassoOptions::default()).unwrap();
        for i in 1..grid.len() {
            let warm = prob.fit(grid[i], Some(&path[i - 1].beta_std), &one).unwrap();
            let cold = prob.fit(grid[i], None, &one).unwrap();
            assert!(warm.objective <= cold.objective + 1e-12);
        }
    }

    #[test]
    fn folds_are_contiguous_and_cover() {
        let f = blocked_folds(23, 5).unwrap();
        let lens: Vec<usize> = f.iter().map(|r| r.len()).collect();
        assert_eq!(lens, vec![5, 5, 5, 4, 4]);
        assert_eq!(f[0].start, 0);
        assert_eq!(f.last().unwrap().end, 23);
        for w in f.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
        assert!(matches!(blocked_folds(19, 10), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn cv_averages_fold_minimizers() {
        let grid = vec![0.5, 0.3, 0.2, 0.1, 0.05];
        let folds = blocked_folds(9, 3).unwrap();
        let targets = [0.1, 0.2, 0.3];
        let cv = cv_from_scores(&grid, &folds, |m, _, _| {
            Ok(grid.iter().map(|l| (l - targets[m]).powi(2)).collect())
        })
        .unwrap();
        assert_eq!(cv.lambda, 0.2);
        let same = cv_from_scores(&grid, &folds, |_, _, _| Ok(grid.iter().map(|l| (l - 0.2f64).abs()).collect())).unwrap();
        assert_eq!(same.lambda, 0.2);
    }

    #[test]
    fn cv_lambda_lies_on_grid_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let x = gaussian(&mut rng, 100, 8);
        let y = sparse_target(&mut rng, &x);
        let cv = cv_lambda(&y, &x, &CvConfig::default()).unwrap();
        assert_eq!(cv.folds.len(), 10);
        let (lo, hi) = (*cv.grid.last().unwrap(), cv.grid[0]);
        assert!(cv.lambda >= lo && cv.lambda <= hi);
        let fit = lasso_fit(&y, &x, cv.lambda).unwrap();
        assert!(fit.support.contains(&0) && fit.support.contains(&1));
    }

    #[test]
    fn partialled_with_intercept_only_is_plain_lasso() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let x = gaussian(&mut rng, 50, 6);
        let y = sparse_target(&mut rng, &x);
        let plain = lasso_fit(&y, &x, 0.05).unwrap();
        let part = partialled_lasso(&y, &DMatrix::zeros(50, 0), &x, 0.05).unwrap();
        for (a, b) in plain.beta.iter().zip(&part.lasso.beta) {
            assert!((a - b).abs() < 1e-8);
        }
        let xbar: Vec<f64> = (0..6).map(|j| x.column(j).mean()).collect();
        let expect = y.mean() - xbar.iter().zip(&part.lasso.beta).map(|(m, b)| m * b).sum::<f64>();
        assert!((part.delta[0] - expect).abs() < 1e-10);
    }

    #[test]
    fn target_in_span_of_preselected() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let z = gaussian(&mut rng, 40, 2);
        let x = gaussian(&mut rng, 40, 5);
        let y = DVector::from_fn(40, |i, _| 0.5 + 2.0 * z[(i, 0)] - z[(i, 1)]);
        let fit = partialled_lasso(&y, &z, &x, 0.01).unwrap();
        assert!(fit.lasso.support.is_empty());
        for i in 0..40 {
            let zr = [z[(i, 0)], z[(i, 1)]];
            let xr: Vec<f64> = x.row(i).iter().copied().collect();
            assert!((fit.predict(&zr, &xr) - y[i]).abs() < 1e-10);
        }
    }
}
