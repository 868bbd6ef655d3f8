//! Synthetic factor-driven designs and selection-theory diagnostics:
//! the irrepresentable-condition statistic, minimum-signal quantities, and
//! a seeded Monte Carlo harness comparing selection methods.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lasso::{cv_lambda, CvConfig, LassoOptions, LassoProblem};
use crate::ocmt::{gocmt_select, OcmtConfig};
use crate::par_map;
use crate::regress::{standardize, RANK_TOL};
use crate::report::{fingerprint, fmt_sig};

/// Factor loadings: one value shared by every column and factor, or an
/// explicit `K x factors` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Loadings {
    Uniform(f64),
    Explicit(Vec<Vec<f64>>),
}

impl Default for Loadings {
    fn default() -> Self {
        Loadings::Uniform(0.0)
    }
}

/// Sparse linear target over covariates `x_j = kappa_j' f_t + sigma_v v_jt`.
/// Signals are the first `beta.len()` columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DgpSpec {
    pub t: usize,
    pub k: usize,
    pub beta: Vec<f64>,
    pub num_factors: usize,
    pub loadings: Loadings,
    pub noise_scale: f64,
    pub error_scale: f64,
    pub intercept: f64,
    pub seed: u64,
}

impl Default for DgpSpec {
    fn default() -> Self {
        Self {
            t: 160,
            k: 52,
            beta: Vec::new(),
            num_factors: 0,
            loadings: Loadings::Uniform(0.0),
            noise_scale: 1.0,
            error_scale: 1.0,
            intercept: 0.0,
            seed: 0,
        }
    }
}

impl DgpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.beta.len() > self.k {
            return Err(Error::Parameter(format!("{} signals among {} covariates", self.beta.len(), self.k)));
        }
        if !(self.noise_scale > 0.0) || !(self.error_scale > 0.0) {
            return Err(Error::Parameter("noise scales must be positive".into()));
        }
        if self.t < 2 || self.k == 0 {
            return Err(Error::Parameter("need T >= 2 and K >= 1".into()));
        }
        if let Loadings::Explicit(rows) = &self.loadings {
            if rows.len() != self.k || rows.iter().any(|r| r.len() != self.num_factors) {
                return Err(Error::Parameter(format!(
                    "loadings must be {} x {}",
                    self.k, self.num_factors
                )));
            }
        }
        Ok(())
    }

    pub fn loading(&self, j: usize, f: usize) -> f64 {
        match &self.loadings {
            Loadings::Uniform(v) => *v,
            Loadings::Explicit(rows) => rows[j][f],
        }
    }

    pub fn truth(&self) -> Vec<usize> {
        (0..self.beta.len()).filter(|&j| self.beta[j] != 0.0).collect()
    }

    /// Non-signals whose population correlation with some signal is nonzero.
    pub fn pseudo_signal_count(&self) -> usize {
        let truth = self.truth();
        (0..self.k)
            .filter(|j| !truth.contains(j))
            .filter(|&j| {
                truth.iter().any(|&i| {
                    (0..self.num_factors).map(|f| self.loading(i, f) * self.loading(j, f)).sum::<f64>() != 0.0
                })
            })
            .count()
    }

    pub fn hash(&self) -> String {
        fingerprint(&serde_json::to_vec(self).expect("spec serializes"))
    }
}

#[derive(Debug, Clone)]
pub struct DgpSample {
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
    pub factors: DMatrix<f64>,
    pub truth: Vec<usize>,
}

pub fn gen_dgp(spec: &DgpSpec) -> Result<DgpSample> {
    gen_dgp_with(spec, &mut ChaCha8Rng::seed_from_u64(spec.seed))
}

pub fn gen_dgp_with<R: Rng>(spec: &DgpSpec, rng: &mut R) -> Result<DgpSample> {
    spec.validate()?;
    let (t, k, m) = (spec.t, spec.k, spec.num_factors);
    let factors = DMatrix::from_fn(t, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut x = DMatrix::zeros(t, k);
    for i in 0..t {
        for j in 0..k {
            let common: f64 = (0..m).map(|f| spec.loading(j, f) * factors[(i, f)]).sum();
            x[(i, j)] = common + spec.noise_scale * rng.sample::<f64, _>(StandardNormal);
        }
    }
    let y = DVector::from_fn(t, |i, _| {
        let signal: f64 = spec.beta.iter().enumerate().map(|(j, b)| b * x[(i, j)]).sum();
        spec.intercept + signal + spec.error_scale * rng.sample::<f64, _>(StandardNormal)
    });
    Ok(DgpSample {
        y,
        x,
        factors,
        truth: spec.truth(),
    })
}

fn gram(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.tr_mul(b) / a.nrows() as f64
}

fn checked_inverse(g: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sv = g.singular_values();
    if !(sv.min() >= RANK_TOL * sv.max()) {
        return Err(Error::Degenerate("signal Gram matrix is singular".into()));
    }
    g.try_inverse()
        .ok_or_else(|| Error::Degenerate("signal Gram matrix is singular".into()))
}

/// `|| (X2'X1/T) (X1'X1/T)^{-1} sign ||_inf` on standardized columns. The
/// condition holds when the value is below one.
pub fn irc_stat(x1: &DMatrix<f64>, x2: &DMatrix<f64>, signs: &[f64]) -> Result<f64> {
    if x1.ncols() != signs.len() || x1.nrows() != x2.nrows() {
        return Err(Error::Parameter("IRC inputs disagree in shape".into()));
    }
    if x2.ncols() == 0 {
        return Ok(0.0);
    }
    let (s1, _) = standardize(x1)?;
    let (s2, _) = standardize(x2)?;
    let inv = checked_inverse(gram(&s1, &s1))?;
    let v = gram(&s2, &s1) * inv * DVector::from_column_slice(signs);
    Ok(v.amax())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MincReport {
    pub holds: bool,
    /// `(2T)^{-1} lambda |(X1'X1/T)^{-1} sign|_j` per signal.
    pub thresholds: Vec<f64>,
    pub min_abs_beta: f64,
    /// `2 min|beta| / |(X1'X1/T)^{-1} sign|_j` at the smallest signal.
    pub d: f64,
}

/// Minimum-signal check for the unnormalized penalty `lambda` (the one
/// multiplying `||beta||_1` next to the raw residual sum of squares).
pub fn minc_quantities(beta0: &[f64], x1: &DMatrix<f64>, lambda: f64, t: usize) -> Result<MincReport> {
    if beta0.is_empty() || beta0.len() != x1.ncols() {
        return Err(Error::Parameter("one coefficient per signal column required".into()));
    }
    if beta0.contains(&0.0) {
        return Err(Error::Parameter("signal coefficients must be nonzero".into()));
    }
    let (s1, _) = standardize(x1)?;
    let inv = checked_inverse(gram(&s1, &s1))?;
    let signs = DVector::from_iterator(beta0.len(), beta0.iter().map(|b| b.signum()));
    let v = inv * signs;
    let thresholds: Vec<f64> = v.iter().map(|vj| lambda * vj.abs() / (2.0 * t as f64)).collect();
    let (jmin, min_abs_beta) = beta0
        .iter()
        .enumerate()
        .map(|(j, b)| (j, b.abs()))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let holds = thresholds.iter().all(|&th| min_abs_beta > th);
    Ok(MincReport {
        holds,
        thresholds,
        min_abs_beta,
        d: 2.0 * min_abs_beta / v[jmin].abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "UPPERCASE")]
pub enum McMethod {
    Lasso {
        #[serde(default)]
        cv: CvConfig,
    },
    /// Test-based selection without factor filtering.
    Ocmt {
        #[serde(default)]
        config: OcmtConfig,
    },
    Gocmt {
        #[serde(default)]
        config: OcmtConfig,
    },
}

impl McMethod {
    pub fn label(&self) -> &'static str {
        match self {
            McMethod::Lasso { .. } => "LASSO",
            McMethod::Ocmt { .. } => "OCMT",
            McMethod::Gocmt { .. } => "GOCMT",
        }
    }

    pub fn select(&self, y: &DVector<f64>, x: &DMatrix<f64>) -> Result<Vec<usize>> {
        let names: Vec<String> = (0..x.ncols()).map(|j| format!("x{j}")).collect();
        let z = DMatrix::zeros(y.len(), 0);
        match self {
            McMethod::Lasso { cv } => {
                let lambda = cv_lambda(y, x, cv)?.lambda;
                Ok(LassoProblem::new(y, x)?.fit(lambda, None, &LassoOptions::default())?.support)
            }
            McMethod::Ocmt { config } => {
                Ok(gocmt_select(y, &z, x, &names, &[], &config.without_factors())?.selected_indices())
            }
            McMethod::Gocmt { config } => Ok(gocmt_select(y, &z, x, &names, &[], config)?.selected_indices()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McRow {
    pub method: String,
    /// Mean share of signals selected; NaN when there are no signals.
    pub tpr: f64,
    /// Mean share of non-signals selected.
    pub fpr: f64,
    /// Share of replications selecting at least one non-signal.
    pub fwer: f64,
    pub reps: usize,
    pub failed: usize,
    #[serde(skip)]
    pub fpr_by_rep: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub spec_hash: String,
    pub seed: u64,
    pub rows: Vec<McRow>,
}

/// Generator for replication `rep`: one ChaCha stream per replication, so
/// results do not depend on scheduling.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

struct RepOutcome {
    tpr: Option<f64>,
    fpr: f64,
    any_false: bool,
}

pub fn mc_experiment(spec: &DgpSpec, methods: &[McMethod], reps: usize, seed: u64) -> Result<McReport> {
    if reps == 0 {
        return Err(Error::Parameter("need at least one replication".into()));
    }
    spec.validate()?;
    let truth = spec.truth();
    let k = spec.k;
    let per_rep: Vec<Result<Vec<Result<RepOutcome>>>> = par_map(reps, |r| {
        let sample = gen_dgp_with(spec, &mut replication_rng(seed, r as u64))?;
        Ok(methods
            .iter()
            .map(|m| {
                let sel = m.select(&sample.y, &sample.x)?;
                let hits = sel.iter().filter(|j| truth.contains(j)).count();
                let false_pos = sel.len() - hits;
                let negatives = k - truth.len();
                Ok(RepOutcome {
                    tpr: (!truth.is_empty()).then(|| hits as f64 / truth.len() as f64),
                    fpr: if negatives > 0 { false_pos as f64 / negatives as f64 } else { 0.0 },
                    any_false: false_pos > 0,
                })
            })
            .collect())
    });
    let mut rows = Vec::with_capacity(methods.len());
    for (mi, m) in methods.iter().enumerate() {
        let mut row = McRow {
            method: m.label().to_string(),
            tpr: 0.0,
            fpr: 0.0,
            fwer: 0.0,
            reps,
            failed: 0,
            fpr_by_rep: Vec::with_capacity(reps),
        };
        let (mut tpr_sum, mut ok) = (0.0, 0usize);
        let mut fwer_count = 0usize;
        for rep in &per_rep {
            let outcome = match rep {
                Ok(v) => v[mi].as_ref().ok(),
                Err(_) => None,
            };
            match outcome {
                Some(o) => {
                    ok += 1;
                    tpr_sum += o.tpr.unwrap_or(f64::NAN);
                    row.fpr += o.fpr;
                    fwer_count += usize::from(o.any_false);
                    row.fpr_by_rep.push(Some(o.fpr));
                }
                None => {
                    row.failed += 1;
                    row.fpr_by_rep.push(None);
                }
            }
        }
        if ok > 0 {
            row.tpr = tpr_sum / ok as f64;
            row.fpr /= ok as f64;
            row.fwer = fwer_count as f64 / ok as f64;
        } else {
            row.tpr = f64::NAN;
            row.fpr = f64::NAN;
            row.fwer = f64::NAN;
        }
        rows.push(row);
    }
    Ok(McReport {
        spec_hash: spec.hash(),
        seed,
        rows,
    })
}

impl McReport {
    /// `mc_report.csv` layout, preceded by a `#` provenance line.
    pub fn write_csv<W: Write>(&self, mut w: W, config_hash: &str) -> Result<()> {
        writeln!(w, "# config_hash={config_hash} seed={}", self.seed)?;
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["method", "TPR", "FPR", "R", "spec_hash", "seed", "FWER", "failed"])?;
        for r in &self.rows {
            out.write_record([
                r.method.clone(),
                if r.tpr.is_nan() { "NA".into() } else { fmt_sig(r.tpr) },
                fmt_sig(r.fpr),
                r.reps.to_string(),
                self.spec_hash.clone(),
                self.seed.to_string(),
                fmt_sig(r.fwer),
                r.failed.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn irc_hand_cases() {
        // x2 orthogonal to x1
        let a = [1.0, -1.0, 1.0, -1.0];
        let b = [1.0, 1.0, -1.0, -1.0];
        let c = [1.0, -1.0, -1.0, 1.0];
        let m = |cols: &[&[f64; 4]]| DMatrix::from_fn(4, cols.len(), |i, j| cols[j][i]);
        assert!(irc_stat(&m(&[&a]), &m(&[&b]), &[1.0]).unwrap().abs() < 1e-15);

        // proxy with sample correlation 0.9
        let proxy: Vec<f64> = (0..4).map(|i| 0.9 * a[i] + (1.0f64 - 0.81).sqrt() * b[i]).collect();
        let x2 = DMatrix::from_column_slice(4, 1, &proxy);
        assert!((irc_stat(&m(&[&a]), &x2, &[1.0]).unwrap() - 0.9).abs() < 1e-12);

        // two signals with correlation 0.5, proxy correlated 0.6 with each
        let s1 = a;
        let s2: Vec<f64> = (0..4).map(|i| 0.5 * a[i] + 0.75f64.sqrt() * b[i]).collect();
        // proxy = alpha a + beta b + gamma c with alpha = 0.6, 0.5 alpha + sqrt(.75) beta = 0.6
        let alpha = 0.6;
        let beta = (0.6 - 0.5 * alpha) / 0.75f64.sqrt();
        let gamma = (1.0 - alpha * alpha - beta * beta).sqrt();
        let p: Vec<f64> = (0..4).map(|i| alpha * a[i] + beta * b[i] + gamma * c[i]).collect();
        let x1 = DMatrix::from_fn(4, 2, |i, j| if j == 0 { s1[i] } else { s2[i] });
        let x2 = DMatrix::from_column_slice(4, 1, &p);
        assert!((irc_stat(&x1, &x2, &[1.0, 1.0]).unwrap() - 0.8).abs() < 1e-12);

        let sing = DMatrix::from_fn(4, 2, |i, _| a[i]);
        assert!(matches!(irc_stat(&sing, &x2, &[1.0, 1.0]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn minc_examples() {
        let a = [1.0, -1.0, 1.0, -1.0];
        let b = [1.0, 1.0, -1.0, -1.0];
        let x1 = DMatrix::from_fn(4, 2, |i, j| if j == 0 { a[i] } else { b[i] });
        let r = minc_quantities(&[1.0, 1.0], &x1, 50.0, 100).unwrap();
        assert!(r.holds);
        assert!(r.thresholds.iter().all(|t| (t - 0.25).abs() < 1e-12));
        assert!((r.d - 2.0).abs() < 1e-12);
        assert!(minc_quantities(&[0.01, -3.0], &x1, 0.0, 100).unwrap().holds);
        assert!(minc_quantities(&[1.0, 0.0], &x1, 1.0, 100).is_err());
    }

    #[test]
    fn dgp_seeded_and_shaped() {
        let spec = DgpSpec {
            t: 50,
            k: 6,
            beta: vec![1.0, -0.5],
            num_factors: 1,
            loadings: Loadings::Uniform(1.0),
            seed: 9,
            ..Default::default()
        };
        let a = gen_dgp(&spec).unwrap();
        let b = gen_dgp(&spec).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
        assert_eq!(a.truth, vec![0, 1]);
        assert_eq!(spec.pseudo_signal_count(), 4);

        let noise = DgpSpec { beta: vec![], ..spec.clone() };
        assert!(gen_dgp(&noise).unwrap().truth.is_empty());
        assert!(gen_dgp(&DgpSpec { beta: vec![1.0; 7], ..spec }).is_err());
    }

    #[test]
    fn factor_correlation_matches_population() {
        let spec = DgpSpec {
            t: 2000,
            k: 2,
            num_factors: 1,
            loadings: Loadings::Uniform(1.0),
            seed: 10,
            ..Default::default()
        };
        let s = gen_dgp(&spec).unwrap();
        let (xs, _) = standardize(&s.x).unwrap();
        let rho = xs.column(0).dot(&xs.column(1)) / 2000.0;
        assert!((rho - 0.5).abs() < 0.05, "{rho}");
    }

    #[test]
    fn mc_is_reproducible() {
        let spec = DgpSpec {
            t: 60,
            k: 10,
            beta: vec![1.0],
            ..Default::default()
        };
        let methods = [
            McMethod::Ocmt { config: OcmtConfig::default() },
            McMethod::Gocmt { config: OcmtConfig::default() },
        ];
        let a = mc_experiment(&spec, &methods, 8, 3).unwrap();
        let b = mc_experiment(&spec, &methods, 8, 3).unwrap();
        assert_eq!(a, b);
        let mut bytes = Vec::new();
        a.write_csv(&mut bytes, "abc").unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.starts_with("# config_hash=abc seed=3\nmethod,TPR,FPR,R,spec_hash,seed"));
        assert_eq!(text.lines().count(), 4);
    }
}
