//! Covariate construction: four-quarter rates, averages and changes, output
//! gaps, trade-weighted foreign aggregates and the level-plus-difference
//! active set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Series, SeriesFrame};

/// One entry of a transform recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    pub output: String,
    #[serde(flatten)]
    pub op: TransformOp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TransformOp {
    Rate4 { source: String },
    Avg4 { source: String },
    Change4 { source: String },
    Diff1 { source: String },
    Gap { source: String, p: usize },
    Star { sources: Vec<String>, weights: Vec<f64> },
    Log { source: String },
}

impl TransformSpec {
    pub fn validate(&self) -> Result<()> {
        match &self.op {
            TransformOp::Gap { p, .. } if *p < 2 => {
                Err(Error::Parameter(format!("gap `{}`: P must be at least 2", self.output)))
            }
            TransformOp::Star { sources, weights } => {
                if sources.len() != weights.len() {
                    return Err(Error::Parameter(format!(
                        "star `{}`: {} sources but {} weights",
                        self.output,
                        sources.len(),
                        weights.len()
                    )));
                }
                check_weights(weights)
            }
            _ => Ok(()),
        }
    }

    /// Evaluate against `frame` without modifying it.
    pub fn evaluate(&self, frame: &SeriesFrame) -> Result<Series> {
        self.validate()?;
        match &self.op {
            TransformOp::Rate4 { source } => rate4(frame.get(source)?),
            TransformOp::Avg4 { source } => avg4(frame.get(source)?),
            TransformOp::Change4 { source } => change4(frame.get(source)?),
            TransformOp::Diff1 { source } => diff1(frame.get(source)?),
            TransformOp::Gap { source, p } => gap(frame.get(source)?, *p),
            TransformOp::Log { source } => log_series(frame.get(source)?),
            TransformOp::Star { sources, weights } => {
                let series = sources.iter().map(|s| frame.get(s).cloned()).collect::<Result<Vec<_>>>()?;
                star(&series, weights)
            }
        }
    }
}

/// Apply a recipe in order; later entries may reference earlier outputs.
pub fn apply_recipe(frame: &SeriesFrame, recipe: &[TransformSpec]) -> Result<SeriesFrame> {
    let mut out = frame.clone();
    for spec in recipe {
        let s = spec.evaluate(&out)?;
        out.insert(spec.output.clone(), s)?;
    }
    Ok(out)
}

fn check_weights(w: &[f64]) -> Result<()> {
    if w.is_empty() {
        return Err(Error::Parameter("star weights are empty".into()));
    }
    if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::Parameter("star weights must be nonnegative".into()));
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > 1e-10 {
        return Err(Error::Parameter(format!("star weights sum to {sum}, not 1")));
    }
    Ok(())
}

fn require_len(s: &Series, min: usize, what: &str) -> Result<()> {
    if s.len() < min {
        return Err(Error::EmptySeries(format!(
            "{what} needs at least {min} observations, got {}",
            s.len()
        )));
    }
    Ok(())
}

// Value at t combined with the value at t - k; missing when either is.
fn lagged_combine(s: &Series, k: usize, f: impl Fn(f64, f64) -> f64) -> Series {
    let v = s.values();
    let out = (0..v.len())
        .map(|t| match (t.checked_sub(k).and_then(|i| v[i]), v[t]) {
            (Some(prev), Some(cur)) => Some(f(cur, prev)),
            _ => None,
        })
        .collect();
    Series::from_parts(s.start(), out)
}

/// Four-quarter rate of change in percent: `100 (ln p_t - ln p_{t-4})`.
pub fn rate4(p: &Series) -> Result<Series> {
    require_len(p, 5, "rate4")?;
    if let Some(bad) = p.values().iter().flatten().find(|&&x| !(x > 0.0)) {
        return Err(Error::Domain(format!("rate4 of nonpositive value {bad}")));
    }
    Ok(lagged_combine(p, 4, |cur, prev| 100.0 * (cur.ln() - prev.ln())))
}

/// Mean of the current and three previous quarters.
pub fn avg4(x: &Series) -> Result<Series> {
    require_len(x, 4, "avg4")?;
    let v = x.values();
    let out = (0..v.len())
        .map(|t| {
            if t < 3 {
                return None;
            }
            let w = &v[t - 3..=t];
            w.iter().copied().sum::<Option<f64>>().map(|s| s / 4.0)
        })
        .collect();
    Ok(Series::from_parts(x.start(), out))
}

/// `x_t - x_{t-4}`.
pub fn change4(x: &Series) -> Result<Series> {
    require_len(x, 5, "change4")?;
    Ok(lagged_combine(x, 4, |cur, prev| cur - prev))
}

/// `x_t - x_{t-1}`.
pub fn diff1(x: &Series) -> Result<Series> {
    require_len(x, 2, "diff1")?;
    Ok(lagged_combine(x, 1, |cur, prev| cur - prev))
}

/// Deviation from the average of the previous `p` quarters.
pub fn gap(y: &Series, p: usize) -> Result<Series> {
    if p < 2 {
        return Err(Error::Parameter(format!("gap needs P >= 2, got {p}")));
    }
    if p >= y.len() {
        return Err(Error::EmptySeries(format!(
            "gap with P = {p} on a series of length {}",
            y.len()
        )));
    }
    let v = y.values();
    let out = (0..v.len())
        .map(|t| {
            if t < p {
                return None;
            }
            let past = v[t - p..t].iter().copied().sum::<Option<f64>>()?;
            v[t].map(|cur| cur - past / p as f64)
        })
        .collect();
    Ok(Series::from_parts(y.start(), out))
}

pub fn log_series(x: &Series) -> Result<Series> {
    if let Some(bad) = x.values().iter().flatten().find(|&&v| !(v > 0.0)) {
        return Err(Error::Domain(format!("log of nonpositive value {bad}")));
    }
    Ok(x.map(f64::ln))
}

/// Trade-weighted aggregate `sum_j w_j y_jt` over aligned country series.
pub fn star(values: &[Series], weights: &[f64]) -> Result<Series> {
    if values.len() != weights.len() {
        return Err(Error::Parameter(format!(
            "{} series but {} weights",
            values.len(),
            weights.len()
        )));
    }
    check_weights(weights)?;
    let first = &values[0];
    if let Some(s) = values.iter().find(|s| s.start() != first.start() || s.len() != first.len()) {
        return Err(Error::Alignment(format!(
            "star inputs span {}..{} and {}..{}",
            first.start(),
            first.end(),
            s.start(),
            s.end()
        )));
    }
    let out = (0..first.len())
        .map(|t| {
            values
                .iter()
                .zip(weights)
                .map(|(s, &w)| s.values()[t].map(|x| w * x))
                .sum::<Option<f64>>()
        })
        .collect();
    Ok(Series::from_parts(first.start(), out))
}

/// Ordered covariate pool: each level immediately followed by its first
/// difference (named with a `D` prefix), all on the source frame's calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSet {
    names: Vec<String>,
    columns: Vec<Series>,
}

impl ActiveSet {
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Series] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Add every column to `frame`, replacing same-named series.
    pub fn merge_into(&self, frame: &mut SeriesFrame) -> Result<()> {
        for (n, s) in self.names.iter().zip(&self.columns) {
            frame.insert(n.clone(), s.clone())?;
        }
        Ok(())
    }

    pub fn to_frame(&self) -> Result<SeriesFrame> {
        SeriesFrame::from_series(self.names.iter().cloned().zip(self.columns.iter().cloned()))
    }
}

pub fn difference_name(level: &str) -> String {
    format!("D{level}")
}

pub fn build_active_set(levels: &SeriesFrame, names: &[String]) -> Result<ActiveSet> {
    if names.is_empty() {
        return Err(Error::Parameter("active set needs at least one variable".into()));
    }
    let mut out = ActiveSet {
        names: Vec::with_capacity(2 * names.len()),
        columns: Vec::with_capacity(2 * names.len()),
    };
    for n in names {
        let level = levels.get(n)?;
        let d = diff1(level)?;
        out.names.push(n.clone());
        out.columns.push(level.clone());
        out.names.push(difference_name(n));
        out.columns.push(d);
    }
    Ok(out)
}
