//! Run artefacts: per-round CSV, summary JSON, resolved config, and
//! parameter sweeps.
//!
//! `rounds.csv` (schema `rounds/v1`) has one row per round. Global columns
//! come first:
//!
//! `round, pu_state, setup_j, sense_j, send_j, total_j, residual_j, messages`
//!
//! followed by one block per CR `i`:
//!
//! `cr{i}_members, cr{i}_k, cr{i}_selected, cr{i}_decision, cr{i}_slept,
//! cr{i}_n_s, cr{i}_delay_s, cr{i}_energy_j`
//!
//! Floats use 12 significant digits in scientific notation. Missing values
//! (no decision, no estimate) are empty fields.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, Mode, SimConfig, SleepPolicy};
use crate::engine::{run_experiment, RunOutput, SimError, SlotRecord, Summary};

pub const CSV_SCHEMA: &str = "rounds/v1";

/// Parameters accepted by [`sweep`].
pub const SWEEPABLE: &[&str] = &["r_s", "d_cr", "p_idle", "mode", "sleep"];

#[derive(Debug, Error)]
pub enum OutputError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("parameter `{0}` cannot be swept (expected one of r_s, d_cr, p_idle, mode, sleep)")]
    NotSweepable(String),
    #[error("sweep needs at least one value")]
    NoValues,
    #[error("{param} = {value}: {msg}")]
    BadValue { param: String, value: String, msg: String },
}

impl OutputError {
    /// Whether the failure lies in the inputs rather than the run.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            OutputError::Config(_)
                | OutputError::Sim(SimError::Config(_))
                | OutputError::NotSweepable(_)
                | OutputError::NoValues
                | OutputError::BadValue { .. }
        )
    }
}

fn sci(v: f64) -> String {
    format!("{v:.11e}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn csv_header(crs: usize) -> String {
    let mut h = String::from("round,pu_state,setup_j,sense_j,send_j,total_j,residual_j,messages");
    for i in 0..crs {
        for col in ["members", "k", "selected", "decision", "slept", "n_s", "delay_s", "energy_j"] {
            let _ = write!(h, ",cr{i}_{col}");
        }
    }
    h
}

pub fn csv_row(r: &SlotRecord) -> String {
    let e = &r.energy;
    let mut row = format!(
        "{},{},{},{},{},{},{},{}",
        r.round,
        r.pu_state,
        sci(e.setup),
        sci(e.sense),
        sci(e.send),
        sci(e.total()),
        sci(r.residual_j),
        r.messages
    );
    for c in &r.clusters {
        let _ = write!(
            row,
            ",{},{},{},{},{},{},{},{}",
            c.members,
            c.k,
            c.selected,
            opt(c.decision),
            u8::from(c.slept),
            opt(c.n_s),
            c.delay.map(sci).unwrap_or_default(),
            sci(c.energy.total())
        );
    }
    row
}

pub fn rounds_csv(crs: usize, records: &[SlotRecord]) -> String {
    let mut out = csv_header(crs);
    out.push('\n');
    for r in records {
        out.push_str(&csv_row(r));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    schema: &'static str,
    seed: u64,
    mode: String,
    sleep: String,
    #[serde(flatten)]
    summary: &'a Summary,
}

pub fn summary_json(cfg: &SimConfig, summary: &Summary) -> String {
    let file = SummaryFile {
        schema: CSV_SCHEMA,
        seed: cfg.seed,
        mode: cfg.mode.to_string(),
        sleep: cfg.sleep.to_string(),
        summary,
    };
    let mut s = serde_json::to_string_pretty(&file).expect("summary serialises");
    s.push('\n');
    s
}

fn write(path: &Path, contents: &str) -> Result<(), OutputError> {
    fs::write(path, contents).map_err(|source| OutputError::Io { path: path.to_owned(), source })
}

/// Runs `cfg` and writes `rounds.csv`, `summary.json` and `config.txt` into
/// `dir`, creating it if needed.
pub fn run_to_dir(cfg: &SimConfig, dir: &Path) -> Result<RunOutput, OutputError> {
    cfg.validate()?;
    fs::create_dir_all(dir).map_err(|source| OutputError::Io { path: dir.to_owned(), source })?;
    let out = run_experiment(cfg)?;
    write(&dir.join("rounds.csv"), &rounds_csv(cfg.crs, &out.records))?;
    write(&dir.join("summary.json"), &summary_json(cfg, &out.summary))?;
    write(&dir.join("config.txt"), &cfg.dump())?;
    Ok(out)
}

/// Config for one sweep point. Mode sweeps switch sleeping off for the
/// comparison architectures, which have no subsets to sleep.
pub fn sweep_point(base: &SimConfig, param: &str, value: &str) -> Result<SimConfig, OutputError> {
    if !SWEEPABLE.contains(&param) {
        return Err(OutputError::NotSweepable(param.to_owned()));
    }
    let mut cfg = base.clone();
    let bad = |msg: String| OutputError::BadValue { param: param.to_owned(), value: value.to_owned(), msg };
    cfg.set(param, value).map_err(bad)?;
    if param == "mode" && matches!(cfg.mode, Mode::LeachcLike | Mode::SendoraLike) {
        cfg.sleep = SleepPolicy::None;
    }
    cfg.validate().map_err(|e| bad(e.to_string()))?;
    Ok(cfg)
}

pub const SWEEP_HEADER: &str = "param,value,total_j,setup_j,sense_j,send_j,residual_j,mse,detection_probability,\
mean_delay_s,mean_n_s,mean_selected,modal_k,lifetime_rounds";

fn sweep_row(param: &str, value: &str, s: &Summary) -> String {
    format!(
        "{param},{value},{},{},{},{},{},{},{},{},{},{},{},{}",
        sci(s.total_energy_j),
        sci(s.energy.setup),
        sci(s.energy.sense),
        sci(s.energy.send),
        sci(s.residual_energy_j),
        s.mse.map(sci).unwrap_or_default(),
        s.detection_probability.map(sci).unwrap_or_default(),
        s.mean_delay_s.map(sci).unwrap_or_default(),
        s.mean_n_s.map(sci).unwrap_or_default(),
        s.mean_selected.map(sci).unwrap_or_default(),
        opt(s.modal_k),
        s.lifetime_rounds.map(sci).unwrap_or_default(),
    )
}

/// One sub-run per value, each in `dir/<param>=<value>/`, run concurrently
/// with the shared seed. `dir/sweep.csv` is written once all have finished.
pub fn sweep(base: &SimConfig, param: &str, values: &[String], dir: &Path) -> Result<Vec<Summary>, OutputError> {
    if values.is_empty() {
        return Err(OutputError::NoValues);
    }
    let cfgs = values.iter().map(|v| sweep_point(base, param, v)).collect::<Result<Vec<_>, _>>()?;
    fs::create_dir_all(dir).map_err(|source| OutputError::Io { path: dir.to_owned(), source })?;
    let results: Vec<Result<RunOutput, OutputError>> = std::thread::scope(|s| {
        let handles: Vec<_> = cfgs
            .iter()
            .zip(values)
            .map(|(cfg, v)| {
                let sub = dir.join(format!("{param}={v}"));
                s.spawn(move || run_to_dir(cfg, &sub))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    let mut summaries = Vec::with_capacity(values.len());
    for (r, v) in results.into_iter().zip(values) {
        let out = r?;
        csv.push_str(&sweep_row(param, v, &out.summary));
        csv.push('\n');
        summaries.push(out.summary);
    }
    write(&dir.join("sweep.csv"), &csv)?;
    Ok(summaries)
}
