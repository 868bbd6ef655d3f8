use std::path::{Path, PathBuf};

use hdforecast::diagnostics::{DgpSpec, McMethod};
use hdforecast::factors::FactorCount;
use hdforecast::frame::Quarter;
use hdforecast::lasso::CvConfig;
use hdforecast::ocmt::OcmtConfig;
use hdforecast::pipeline::{MethodSpec, MethodTag, PipelineConfig, Preselected};
use hdforecast::report::fingerprint;
use hdforecast::transform::TransformSpec;
use serde::{Deserialize, Serialize};

use crate::Failure;

/// Everything a run needs. Precedence: built-in defaults, then the config
/// file, then command-line flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub data: DataConfig,
    pub forecast: ForecastConfig,
    pub ocmt: OcmtConfig,
    pub cv: CvConfig,
    pub simulate: SimulateConfig,
    pub evaluate: EvaluateConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub path: Option<PathBuf>,
    pub recipe: Vec<TransformSpec>,
    /// Level variables to pair with their first differences. When empty,
    /// every column is kept as is.
    pub active_levels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastConfig {
    pub target: String,
    /// Candidate columns; all columns of the data when empty.
    pub active: Vec<String>,
    pub preselected: Preselected,
    pub methods: Vec<MethodTag>,
    /// One run of each test-based method per value.
    pub deltas: Vec<f64>,
    pub horizons: Vec<usize>,
    pub eval_start: Quarter,
    pub eval_end: Quarter,
    pub sample_start: Option<Quarter>,
    /// Newey-West lags for test statistics and final regressions; 0 is classical.
    pub hac_lags: usize,
    /// External forecasts (method, horizon, target_quarter, forecast) to score alongside.
    pub benchmark: Option<PathBuf>,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        let p = PipelineConfig::default();
        Self {
            target: p.target,
            active: Vec::new(),
            preselected: p.preselected,
            methods: MethodTag::ALL.to_vec(),
            deltas: vec![1.0],
            horizons: p.horizons,
            eval_start: p.eval_start,
            eval_end: p.eval_end,
            sample_start: None,
            hac_lags: 0,
            benchmark: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub dgp: DgpSpec,
    pub reps: usize,
    pub methods: Vec<String>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            dgp: DgpSpec::default(),
            reps: 100,
            methods: vec!["LASSO".into(), "OCMT".into(), "GOCMT".into()],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    pub forecasts: Option<PathBuf>,
    pub realizations: Option<PathBuf>,
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub hac: Option<usize>,
    pub delta: Option<f64>,
    pub pcs: Option<usize>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Failure::new("config", format!("{}: {e}", path.display())))?;
        // Relative paths in the file are relative to the file.
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        rebase(&mut cfg.data.path);
        rebase(&mut cfg.forecast.benchmark);
        rebase(&mut cfg.evaluate.forecasts);
        rebase(&mut cfg.evaluate.realizations);
        rebase(&mut cfg.out);
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.out = Some(out.clone());
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
            self.simulate.dgp.seed = seed;
        }
        if let Some(h) = o.hac {
            self.forecast.hac_lags = h;
            self.ocmt.hac_lags = h;
        }
        if let Some(d) = o.delta {
            self.ocmt.delta = d;
            self.forecast.deltas = vec![d];
        }
        if let Some(m) = o.pcs {
            self.ocmt.factors = FactorCount::Fixed(m);
        }
    }

    pub fn validate(&self) -> Result<(), Failure> {
        let f = &self.forecast;
        if f.horizons.is_empty() || f.horizons.iter().any(|h| !(1..=8).contains(h)) {
            return Err(Failure::new("config", "horizons must lie in 1..=8"));
        }
        if f.eval_start > f.eval_end {
            return Err(Failure::new("config", "eval_start after eval_end"));
        }
        if f.deltas.is_empty() {
            return Err(Failure::new("config", "at least one delta is required"));
        }
        self.ocmt.validate().map_err(Failure::from)?;
        Ok(())
    }

    /// Fingerprint of everything that affects results; the output location does not.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        fingerprint(&serde_json::to_vec(&c).expect("config serializes"))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn pipeline(&self, active: Vec<String>) -> PipelineConfig {
        let f = &self.forecast;
        PipelineConfig {
            target: f.target.clone(),
            active,
            preselected: f.preselected.clone(),
            horizons: f.horizons.clone(),
            eval_start: f.eval_start,
            eval_end: f.eval_end,
            sample_start: f.sample_start,
            hac_lags: f.hac_lags,
            ..PipelineConfig::default()
        }
    }

    pub fn methods(&self) -> Vec<MethodSpec> {
        let mut out = Vec::new();
        for &tag in &self.forecast.methods {
            let base = MethodSpec {
                tag,
                ocmt: self.ocmt,
                cv: self.cv,
            };
            if matches!(tag, MethodTag::Ar2Ocmt | MethodTag::ArxOcmt) {
                out.extend(self.forecast.deltas.iter().map(|&d| base.clone().with_delta(d)));
            } else {
                out.push(base);
            }
        }
        out
    }

    pub fn mc_methods(&self) -> Result<Vec<McMethod>, Failure> {
        self.simulate
            .methods
            .iter()
            .map(|m| match m.to_ascii_uppercase().as_str() {
                "LASSO" => Ok(McMethod::Lasso { cv: self.cv }),
                "OCMT" => Ok(McMethod::Ocmt { config: self.ocmt }),
                "GOCMT" => Ok(McMethod::Gocmt { config: self.ocmt }),
                other => Err(Failure::new("config", format!("unknown simulation method `{other}`"))),
            })
            .collect()
    }
}
