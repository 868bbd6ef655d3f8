//! Recursive expanding-window direct forecasting and its evaluation.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Quarter, SeriesFrame};
use crate::lasso::{cv_lambda, cv_partialled_lambda, CvConfig, LassoOptions, LassoProblem, PartialledProblem};
use crate::ocmt::{final_regression, gocmt_select, OcmtConfig, SelectedVar, SelectionResult};
use crate::par_map;
use crate::report::fmt_sig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MethodTag {
    Ar2,
    Arx,
    Lasso,
    Ar2Lasso,
    ArxLasso,
    Ar2Ocmt,
    ArxOcmt,
}

impl MethodTag {
    pub const ALL: [MethodTag; 7] = [
        MethodTag::Ar2,
        MethodTag::Arx,
        MethodTag::Lasso,
        MethodTag::Ar2Lasso,
        MethodTag::ArxLasso,
        MethodTag::Ar2Ocmt,
        MethodTag::ArxOcmt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodTag::Ar2 => "AR2",
            MethodTag::Arx => "ARX",
            MethodTag::Lasso => "LASSO",
            MethodTag::Ar2Lasso => "AR2_LASSO",
            MethodTag::ArxLasso => "ARX_LASSO",
            MethodTag::Ar2Ocmt => "AR2_OCMT",
            MethodTag::ArxOcmt => "ARX_OCMT",
        }
    }

    pub fn preselected(self, sets: &Preselected) -> &[String] {
        match self {
            MethodTag::Ar2 | MethodTag::Ar2Lasso | MethodTag::Ar2Ocmt => &sets.ar2,
            MethodTag::Arx | MethodTag::ArxLasso | MethodTag::ArxOcmt => &sets.arx,
            MethodTag::Lasso => &[],
        }
    }

    fn kind(self) -> Kind {
        match self {
            MethodTag::Ar2 | MethodTag::Arx => Kind::Benchmark,
            MethodTag::Lasso => Kind::Lasso,
            MethodTag::Ar2Lasso | MethodTag::ArxLasso => Kind::PartialledLasso,
            MethodTag::Ar2Ocmt | MethodTag::ArxOcmt => Kind::Ocmt,
        }
    }
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MethodTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        MethodTag::ALL
            .into_iter()
            .find(|m| m.as_str() == norm)
            .ok_or_else(|| Error::Parameter(format!("unknown method `{s}`")))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Benchmark,
    Lasso,
    PartialledLasso,
    Ocmt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub tag: MethodTag,
    #[serde(default)]
    pub ocmt: OcmtConfig,
    #[serde(default)]
    pub cv: CvConfig,
}

impl MethodSpec {
    pub fn new(tag: MethodTag) -> Self {
        Self {
            tag,
            ocmt: OcmtConfig::default(),
            cv: CvConfig::default(),
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.ocmt.delta = delta;
        self
    }

    /// Report label: the tag, plus the delta for test-based methods when it is not 1.
    pub fn label(&self) -> String {
        if self.tag.kind() == Kind::Ocmt && self.ocmt.delta != 1.0 {
            format!("{}(delta={})", self.tag, self.ocmt.delta)
        } else {
            self.tag.to_string()
        }
    }

    pub fn standard_set() -> Vec<MethodSpec> {
        MethodTag::ALL.into_iter().map(MethodSpec::new).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Preselected {
    pub ar2: Vec<String>,
    pub arx: Vec<String>,
}

impl Default for Preselected {
    fn default() -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect();
        Self {
            ar2: s(&["DPUK4", "DDPUK4"]),
            arx: s(&["DPUK4", "DDPUK4", "DPSUK4", "DDPSUK4"]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub target: String,
    /// Candidate covariates; pre-selected variables are removed from this
    /// list for the conditional methods.
    pub active: Vec<String>,
    pub preselected: Preselected,
    pub horizons: Vec<usize>,
    pub eval_start: Quarter,
    pub eval_end: Quarter,
    /// Defaults to the first quarter at which all used series are observed.
    pub sample_start: Option<Quarter>,
    /// Newey-West lags for the reported final-regression t-ratios.
    pub hac_lags: usize,
    /// Rows required beyond the number of regressors.
    pub min_extra_rows: usize,
    /// Bound on selected covariates used in the minimum-rows check; all
    /// candidates when absent.
    pub max_selected: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            target: "DPUK4".into(),
            active: Vec::new(),
            preselected: Preselected::default(),
            horizons: vec![1, 2, 4],
            eval_start: Quarter::new(2020, 1).unwrap(),
            eval_end: Quarter::new(2023, 1).unwrap(),
            sample_start: None,
            hac_lags: 0,
            min_extra_rows: 8,
            max_selected: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return Err(Error::Parameter("horizons must be positive".into()));
        }
        if self.eval_start > self.eval_end {
            return Err(Error::Range(format!(
                "evaluation span {}..{} is empty",
                self.eval_start, self.eval_end
            )));
        }
        Ok(())
    }

    fn candidates(&self, z: &[String]) -> Vec<String> {
        self.active.iter().filter(|a| !z.contains(a)).cloned().collect()
    }
}

/// Ends of the selection windows for horizon `h`: from `eval_start - h`
/// through `eval_end`, one quarter apart.
pub fn window_ends(eval_start: Quarter, eval_end: Quarter, h: usize) -> Vec<Quarter> {
    let first = eval_start.add(-(h as i64));
    (0..first.span_len(eval_end)).map(|i| first.add(i as i64)).collect()
}

/// Regression data for one window: `y` holds the target at `t + h`, `Z` and
/// `X` the time-`t` values, and the origin rows the values at the window end.
#[derive(Debug, Clone)]
pub struct DirectDataset {
    pub y: DVector<f64>,
    pub z: DMatrix<f64>,
    pub x: DMatrix<f64>,
    /// Regressor date of each row.
    pub quarters: Vec<Quarter>,
    pub z_origin: Vec<f64>,
    pub x_origin: Vec<f64>,
}

fn observed(frame: &SeriesFrame, name: &str, q: Quarter) -> Result<f64> {
    frame
        .value(name, q)?
        .ok_or_else(|| Error::Alignment(format!("`{name}` is not observed at {q}")))
}

/// Build the direct-regression sample ending at `end`. Only data dated
/// `<= end` is read.
#[allow(clippy::too_many_arguments)]
pub fn build_direct_dataset(
    frame: &SeriesFrame,
    target: &str,
    h: usize,
    z_names: &[String],
    x_names: &[String],
    start: Option<Quarter>,
    end: Quarter,
    min_extra_rows: usize,
    max_selected: Option<usize>,
) -> Result<DirectDataset> {
    if h == 0 {
        return Err(Error::Parameter("horizon must be at least 1".into()));
    }
    if end < frame.start() || end > frame.end() {
        return Err(Error::Range(format!(
            "window end {end} outside frame span {}..{}",
            frame.start(),
            frame.end()
        )));
    }
    let past = frame.window(frame.start(), end)?;
    let mut used: Vec<&str> = vec![target];
    used.extend(z_names.iter().map(String::as_str));
    used.extend(x_names.iter().map(String::as_str));
    let balanced = past
        .balanced_start(&used)?
        .ok_or_else(|| Error::InsufficientData(format!("some series have no observations up to {end}")))?;
    let start = start.map_or(balanced, |s| s.max(balanced));
    let last = end.add(-(h as i64));
    let needed = z_names.len() + max_selected.unwrap_or(x_names.len()).min(x_names.len()) + min_extra_rows;
    let nrows = if last < start { 0 } else { start.span_len(last) };
    if nrows < needed.max(1) {
        return Err(Error::InsufficientData(format!(
            "{nrows} rows from {start} to {last} (h={h}); need {needed}"
        )));
    }
    let quarters: Vec<Quarter> = (0..nrows).map(|i| start.add(i as i64)).collect();
    let column = |name: &str, lead: i64| -> Result<Vec<f64>> {
        quarters.iter().map(|q| observed(&past, name, q.add(lead))).collect()
    };
    let y = DVector::from_vec(column(target, h as i64)?);
    let block = |names: &[String]| -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(nrows, names.len());
        for (j, n) in names.iter().enumerate() {
            m.set_column(j, &DVector::from_vec(column(n, 0)?));
        }
        Ok(m)
    };
    let origin = |names: &[String]| -> Result<Vec<f64>> { names.iter().map(|n| observed(&past, n, end)).collect() };
    Ok(DirectDataset {
        y,
        z: block(z_names)?,
        x: block(x_names)?,
        quarters,
        z_origin: origin(z_names)?,
        x_origin: origin(x_names)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    pub method: String,
    pub horizon: usize,
    pub window_end: Quarter,
    pub target_quarter: Quarter,
    /// `None` when the cell failed.
    pub forecast: Option<f64>,
    pub realization: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    pub method: String,
    pub horizon: usize,
    pub window_end: Quarter,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct RecursiveOutput {
    pub records: Vec<ForecastRecord>,
    /// One entry per successful Lasso or test-based cell.
    pub selections: Vec<SelectionResult>,
    pub failures: Vec<CellFailure>,
}

struct Cell<'a> {
    method: &'a MethodSpec,
    h: usize,
    end: Quarter,
}

fn run_cell(
    frame: &SeriesFrame,
    cfg: &PipelineConfig,
    spec: &MethodSpec,
    h: usize,
    end: Quarter,
) -> Result<(f64, Option<SelectionResult>)> {
    let z_names = spec.tag.preselected(&cfg.preselected).to_vec();
    let x_names = match spec.tag.kind() {
        Kind::Benchmark => Vec::new(),
        Kind::Lasso => cfg.active.clone(),
        Kind::PartialledLasso | Kind::Ocmt => cfg.candidates(&z_names),
    };
    let max_sel = if spec.tag.kind() == Kind::Benchmark { None } else { cfg.max_selected };
    let d = build_direct_dataset(
        frame,
        &cfg.target,
        h,
        &z_names,
        &x_names,
        cfg.sample_start,
        end,
        cfg.min_extra_rows,
        max_sel,
    )?;
    let stamp = |mut s: SelectionResult| {
        s.window_end = Some(end);
        s.horizon = Some(h);
        s.method = spec.label();
        s
    };
    match spec.tag.kind() {
        Kind::Benchmark => {
            let fit = final_regression(&d.y, &d.z, &d.x, &z_names, cfg.hac_lags)?;
            Ok((fit.predict(&d.z_origin), None))
        }
        Kind::Lasso | Kind::PartialledLasso => {
            let opts = LassoOptions::default();
            let (lambda, beta, forecast) = if spec.tag.kind() == Kind::Lasso {
                let lambda = cv_lambda(&d.y, &d.x, &spec.cv)?.lambda;
                let fit = LassoProblem::new(&d.y, &d.x)?.fit(lambda, None, &opts)?;
                (lambda, fit.beta.clone(), fit.predict(&d.x_origin))
            } else {
                let lambda = cv_partialled_lambda(&d.y, &d.z, &d.x, &spec.cv)?.lambda;
                let fit = PartialledProblem::new(&d.y, &d.z, &d.x)?.fit(lambda, None, &opts)?;
                (lambda, fit.lasso.beta.clone(), fit.predict(&d.z_origin, &d.x_origin))
            };
            let selected = beta
                .iter()
                .enumerate()
                .filter(|(_, b)| **b != 0.0)
                .map(|(j, b)| SelectedVar {
                    name: x_names[j].clone(),
                    index: j,
                    t: None,
                    coef: Some(*b),
                })
                .collect();
            let sel = SelectionResult {
                window_end: None,
                horizon: None,
                method: String::new(),
                delta: None,
                critical_value: None,
                lambda: Some(lambda),
                num_factors: None,
                preselected: z_names,
                selected,
                t_ratios: Vec::new(),
            };
            Ok((forecast, Some(stamp(sel))))
        }
        Kind::Ocmt => {
            let mut ocfg = spec.ocmt;
            ocfg.critical_k = ocfg.critical_k.or(Some(cfg.active.len()));
            let sel = gocmt_select(&d.y, &d.z, &d.x, &x_names, &z_names, &ocfg)?;
            let idx = sel.selected_indices();
            let x_sel = d.x.select_columns(&idx);
            let mut names = z_names.clone();
            names.extend(idx.iter().map(|&j| x_names[j].clone()));
            let fit = final_regression(&d.y, &d.z, &x_sel, &names, cfg.hac_lags)?;
            let mut row = d.z_origin.clone();
            row.extend(idx.iter().map(|&j| d.x_origin[j]));
            Ok((fit.predict(&row), Some(stamp(sel))))
        }
    }
}

/// Run every (method, horizon, window) cell. Cells are independent; the
/// output is assembled in method, horizon, window order regardless of
/// scheduling. A failed cell yields a record with no forecast.
pub fn run_recursive(frame: &SeriesFrame, cfg: &PipelineConfig, methods: &[MethodSpec]) -> Result<RecursiveOutput> {
    cfg.validate()?;
    for m in methods {
        m.ocmt.validate()?;
    }
    if cfg.eval_end > frame.end() {
        return Err(Error::Range(format!(
            "evaluation span ends at {} after the data ({})",
            cfg.eval_end,
            frame.end()
        )));
    }
    let mut cells = Vec::new();
    for m in methods {
        for &h in &cfg.horizons {
            for end in window_ends(cfg.eval_start, cfg.eval_end, h) {
                cells.push(Cell { method: m, h, end });
            }
        }
    }
    let results = par_map(cells.len(), |i| {
        let c = &cells[i];
        run_cell(frame, cfg, c.method, c.h, c.end)
    });

    let mut out = RecursiveOutput::default();
    for (c, res) in cells.iter().zip(results) {
        let target_quarter = c.end.add(c.h as i64);
        let realization = if target_quarter <= frame.end() {
            frame.value(&cfg.target, target_quarter)?
        } else {
            None
        };
        let label = c.method.label();
        let forecast = match res {
            Ok((f, sel)) => {
                out.selections.extend(sel);
                Some(f)
            }
            Err(e) => {
                log::warn!("{label} h={} window ending {}: {e}", c.h, c.end);
                out.failures.push(CellFailure {
                    method: label.clone(),
                    horizon: c.h,
                    window_end: c.end,
                    error: e.to_string(),
                });
                None
            }
        };
        out.records.push(ForecastRecord {
            method: label,
            horizon: c.h,
            window_end: c.end,
            target_quarter,
            forecast,
            realization,
        });
    }
    Ok(out)
}

/// Root mean square error over records carrying both a forecast and a realization.
pub fn rmsfe(records: &[ForecastRecord]) -> Result<f64> {
    let errs: Vec<f64> = records
        .iter()
        .filter_map(|r| Some(r.realization? - r.forecast?))
        .collect();
    if errs.is_empty() {
        return Err(Error::EmptyEvaluation("no record has both a forecast and a realization".into()));
    }
    Ok((errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt())
}

/// Fill in realizations of `target` by quarter.
pub fn attach_realizations(records: &mut [ForecastRecord], frame: &SeriesFrame, target: &str) -> Result<()> {
    let s = frame.get(target)?;
    for r in records {
        r.realization = s.get(r.target_quarter);
    }
    Ok(())
}

/// Per-variable, per-horizon count of windows in which it was selected.
pub fn selection_frequency(logs: &[SelectionResult]) -> IndexMap<String, BTreeMap<usize, usize>> {
    let mut out: IndexMap<String, BTreeMap<usize, usize>> = IndexMap::new();
    for log in logs {
        let h = log.horizon.unwrap_or(0);
        for s in &log.selected {
            *out.entry(s.name.clone()).or_default().entry(h).or_default() += 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizonScore {
    pub horizon: usize,
    pub rmsfe: Option<f64>,
    /// Realized quarters in the evaluation span that had a forecast.
    pub n: usize,
    /// Realized quarters in the span whose cell failed.
    pub missing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow {
    pub method: String,
    pub scores: Vec<HorizonScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub horizons: Vec<usize>,
    pub rows: Vec<EvalRow>,
    /// Variable -> horizon -> count, per method with a selection step.
    pub frequencies: IndexMap<String, IndexMap<String, BTreeMap<usize, usize>>>,
}

/// Score records over target quarters in `[eval_start, eval_end]`. Methods
/// appear in first-seen order; quarters without a realization are ignored.
pub fn evaluate(
    records: &[ForecastRecord],
    selections: &[SelectionResult],
    horizons: &[usize],
    eval_start: Quarter,
    eval_end: Quarter,
) -> EvalReport {
    let mut methods: Vec<&str> = Vec::new();
    for r in records {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let rows = methods
        .iter()
        .map(|m| EvalRow {
            method: m.to_string(),
            scores: horizons
                .iter()
                .map(|&h| {
                    let cell: Vec<ForecastRecord> = records
                        .iter()
                        .filter(|r| {
                            r.method == *m
                                && r.horizon == h
                                && r.target_quarter >= eval_start
                                && r.target_quarter <= eval_end
                                && r.realization.is_some()
                        })
                        .cloned()
                        .collect();
                    let missing = cell.iter().filter(|r| r.forecast.is_none()).count();
                    HorizonScore {
                        horizon: h,
                        rmsfe: rmsfe(&cell).ok(),
                        n: cell.len() - missing,
                        missing,
                    }
                })
                .collect(),
        })
        .collect();
    let mut frequencies: IndexMap<String, IndexMap<String, BTreeMap<usize, usize>>> = IndexMap::new();
    for m in &methods {
        let logs: Vec<SelectionResult> = selections.iter().filter(|s| s.method == *m).cloned().collect();
        if !logs.is_empty() {
            frequencies.insert(m.to_string(), selection_frequency(&logs));
        }
    }
    EvalReport {
        horizons: horizons.to_vec(),
        rows,
        frequencies,
    }
}

/// Identifies the configuration and seed behind an output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn header(&self) -> String {
        format!("# config_hash={} seed={}", self.config_hash, self.seed)
    }
}

fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), fmt_sig)
}

impl EvalReport {
    pub fn write_csv<W: Write>(&self, mut w: W, prov: &Provenance) -> Result<()> {
        writeln!(w, "{}", prov.header())?;
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["method".to_string()];
        for h in &self.horizons {
            header.extend([format!("rmsfe_h{h}"), format!("n_h{h}"), format!("missing_h{h}")]);
        }
        out.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.method.clone()];
            for s in &row.scores {
                rec.extend([opt_num(s.rmsfe), s.n.to_string(), s.missing.to_string()]);
            }
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn write_forecasts_csv<W: Write>(records: &[ForecastRecord], mut w: W, prov: &Provenance) -> Result<()> {
    writeln!(w, "{}", prov.header())?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["method", "horizon", "window_end", "target_quarter", "forecast", "realization"])?;
    for r in records {
        out.write_record([
            r.method.clone(),
            r.horizon.to_string(),
            r.window_end.to_string(),
            r.target_quarter.to_string(),
            opt_num(r.forecast),
            opt_num(r.realization),
        ])?;
    }
    out.flush()?;
    Ok(())
}

fn parse_opt(s: &str, line: usize) -> Result<Option<f64>> {
    let s = s.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("na") {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| Error::Parse { line, msg: format!("bad number `{s}`") })
}

/// Read forecast rows. Accepts the `forecasts.csv` layout; `window_end` and
/// `realization` may be omitted, as in external benchmark files, in which
/// case the window end is `target_quarter - horizon`.
pub fn read_forecasts_csv<R: Read>(reader: R) -> Result<Vec<ForecastRecord>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let need = |name: &str| col(name).ok_or_else(|| Error::Parse { line: 1, msg: format!("missing column `{name}`") });
    let (cm, ch, ct, cf) = (need("method")?, need("horizon")?, need("target_quarter")?, need("forecast")?);
    let (cw, cr) = (col("window_end"), col("realization"));
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |msg: String| Error::Parse { line, msg };
        let horizon: usize = rec[ch].parse().map_err(|_| bad(format!("bad horizon `{}`", &rec[ch])))?;
        let target_quarter: Quarter = rec[ct].parse().map_err(|_| bad(format!("bad quarter `{}`", &rec[ct])))?;
        let window_end = match cw {
            Some(i) => rec[i].parse().map_err(|_| bad(format!("bad quarter `{}`", &rec[i])))?,
            None => target_quarter.add(-(horizon as i64)),
        };
        out.push(ForecastRecord {
            method: rec[cm].to_string(),
            horizon,
            window_end,
            target_quarter,
            forecast: parse_opt(&rec[cf], line)?,
            realization: match cr {
                Some(i) => parse_opt(&rec[i], line)?,
                None => None,
            },
        });
    }
    Ok(out)
}

#[derive(Serialize)]
struct SelectionLog<'a> {
    config_hash: &'a str,
    seed: u64,
    cells: &'a [SelectionResult],
    failures: &'a [CellFailure],
}

/// `selection_log.json`: selection cells plus failed cells.
pub fn write_selection_log<W: Write>(
    selections: &[SelectionResult],
    failures: &[CellFailure],
    w: W,
    prov: &Provenance,
) -> Result<()> {
    let rounded: Vec<SelectionResult> = selections
        .iter()
        .map(|s| {
            let mut s = s.clone();
            let r = |x: f64| fmt_sig(x).parse::<f64>().unwrap_or(x);
            s.critical_value = s.critical_value.map(r);
            s.lambda = s.lambda.map(r);
            for v in &mut s.selected {
                v.t = v.t.map(r);
                v.coef = v.coef.map(r);
            }
            s
        })
        .collect();
    serde_json::to_writer_pretty(
        w,
        &SelectionLog {
            config_hash: &prov.config_hash,
            seed: prov.seed,
            cells: &rounded,
            failures,
        },
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Quarter {
        s.parse().unwrap()
    }

    #[test]
    fn schedule_counts() {
        for (h, n) in [(1, 14), (2, 15), (4, 17)] {
            let ends = window_ends(q("2020q1"), q("2023q1"), h);
            assert_eq!(ends.len(), n);
            assert_eq!(*ends.last().unwrap(), q("2023q1"));
            assert_eq!(ends[0].add(h as i64), q("2020q1"));
        }
        assert_eq!(window_ends(q("2020q1"), q("2023q1"), 4)[0], q("2019q1"));
    }

    #[test]
    fn rmsfe_hand_values() {
        let rec = |f: f64, r: f64| ForecastRecord {
            method: "m".into(),
            horizon: 1,
            window_end: q("2020q1"),
            target_quarter: q("2020q2"),
            forecast: Some(f),
            realization: Some(r),
        };
        assert_eq!(rmsfe(&[rec(1.0, 1.0), rec(2.0, 2.0)]).unwrap(), 0.0);
        let v = rmsfe(&[rec(0.0, 3.0), rec(4.0, 0.0)]).unwrap();
        assert!((v - 12.5f64.sqrt()).abs() < 1e-15);
        let mut none = rec(1.0, 1.0);
        none.realization = None;
        assert!(matches!(rmsfe(&[none]), Err(Error::EmptyEvaluation(_))));
    }

    #[test]
    fn method_labels() {
        assert_eq!(MethodSpec::new(MethodTag::Ar2Ocmt).label(), "AR2_OCMT");
        assert_eq!(MethodSpec::new(MethodTag::Ar2Ocmt).with_delta(1.5).label(), "AR2_OCMT(delta=1.5)");
        assert_eq!("ar2-lasso".parse::<MethodTag>().unwrap(), MethodTag::Ar2Lasso);
        assert!("var".parse::<MethodTag>().is_err());
    }
}
