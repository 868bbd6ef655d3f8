use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use hdforecast::diagnostics::mc_experiment;
use hdforecast::frame::SeriesFrame;
use hdforecast::pipeline::{
    attach_realizations, evaluate as score, read_forecasts_csv, run_recursive, write_forecasts_csv, write_selection_log,
    Provenance,
};
use hdforecast::transform::{apply_recipe, build_active_set};

use crate::config::RunConfig;
use crate::Failure;

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::io(path, e))
}

fn open(path: &Path) -> Result<File, Failure> {
    File::open(path).map_err(|e| Failure::io(path, e))
}

fn provenance(cfg: &RunConfig) -> Provenance {
    Provenance {
        config_hash: cfg.hash(),
        seed: cfg.seed,
    }
}

fn required<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path, Failure> {
    p.as_deref().ok_or_else(|| Failure::new("config", format!("{what} is not set")))
}

/// Raw data with the recipe applied and, if configured, the active set of
/// levels and differences.
fn load_panel(cfg: &RunConfig) -> Result<SeriesFrame, Failure> {
    let path = required(&cfg.data.path, "data.path")?;
    let raw = SeriesFrame::read_csv(open(path)?).map_err(|e| with_file(path, e))?;
    let mut frame = apply_recipe(&raw, &cfg.data.recipe)?;
    if !cfg.data.active_levels.is_empty() {
        let active = build_active_set(&frame, &cfg.data.active_levels)?;
        active.merge_into(&mut frame)?;
    }
    Ok(frame)
}

fn with_file(path: &Path, e: hdforecast::Error) -> Failure {
    let mut f = Failure::from(e);
    f.message = format!("{}: {}", path.display(), f.message);
    f
}

pub fn transform(cfg: &RunConfig) -> Result<(), Failure> {
    let frame = load_panel(cfg)?;
    let names: Vec<String> = if cfg.data.active_levels.is_empty() {
        frame.names().map(str::to_string).collect()
    } else {
        build_active_set(&frame, &cfg.data.active_levels)?.names().to_vec()
    };
    let cols: Vec<&str> = names.iter().map(String::as_str).collect();
    let path = cfg.out_dir().join("transformed.csv");
    let mut w = create(&path)?;
    use std::io::Write;
    writeln!(w, "{}", provenance(cfg).header()).map_err(|e| Failure::io(&path, e))?;
    frame.write_csv(w, Some(&cols))?;
    Ok(())
}

pub fn forecast(cfg: &RunConfig) -> Result<(), Failure> {
    let frame = load_panel(cfg)?;
    let active = if !cfg.forecast.active.is_empty() {
        cfg.forecast.active.clone()
    } else if !cfg.data.active_levels.is_empty() {
        build_active_set(&frame, &cfg.data.active_levels)?.names().to_vec()
    } else {
        frame.names().map(str::to_string).collect()
    };
    let pcfg = cfg.pipeline(active);
    let out = run_recursive(&frame, &pcfg, &cfg.methods())?;
    let mut records = out.records.clone();
    if let Some(path) = &cfg.forecast.benchmark {
        let mut bench = read_forecasts_csv(open(path)?).map_err(|e| with_file(path, e))?;
        attach_realizations(&mut bench, &frame, &pcfg.target)?;
        records.extend(bench);
    }
    let prov = provenance(cfg);
    let dir = cfg.out_dir();
    write_forecasts_csv(&records, create(&dir.join("forecasts.csv"))?, &prov)?;
    write_selection_log(&out.selections, &out.failures, create(&dir.join("selection_log.json"))?, &prov)?;
    let report = score(&records, &out.selections, &pcfg.horizons, pcfg.eval_start, pcfg.eval_end);
    report.write_csv(create(&dir.join("eval_report.csv"))?, &prov)?;
    if out.failures.is_empty() {
        Ok(())
    } else {
        let mut f = Failure::new("cells", format!("{} of {} cells failed", out.failures.len(), out.records.len()));
        f.failed_cells = out.failures;
        Err(f)
    }
}

pub fn simulate(cfg: &RunConfig) -> Result<(), Failure> {
    let methods = cfg.mc_methods()?;
    let report = mc_experiment(&cfg.simulate.dgp, &methods, cfg.simulate.reps, cfg.seed)?;
    report.write_csv(create(&cfg.out_dir().join("mc_report.csv"))?, &cfg.hash())?;
    Ok(())
}

pub fn evaluate(cfg: &RunConfig) -> Result<(), Failure> {
    let fpath = required(&cfg.evaluate.forecasts, "evaluate.forecasts")?;
    let rpath = required(&cfg.evaluate.realizations, "evaluate.realizations")?;
    let mut records = read_forecasts_csv(open(fpath)?).map_err(|e| with_file(fpath, e))?;
    let frame = SeriesFrame::read_csv(open(rpath)?).map_err(|e| with_file(rpath, e))?;
    attach_realizations(&mut records, &frame, &cfg.forecast.target)?;
    let f = &cfg.forecast;
    let report = score(&records, &[], &f.horizons, f.eval_start, f.eval_end);
    report.write_csv(create(&cfg.out_dir().join("eval_report.csv"))?, &provenance(cfg))?;
    Ok(())
}
