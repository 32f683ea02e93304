use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use crate::error::{QldpError, Result};
use crate::privacy_energy::{EnergySettings, RegimeTag};
use crate::qldp_analyzer::{binary_weight_for_entropy, epsilon_star_with};

pub const CSV_HEADER: [&str; 9] = [
    "s",
    "tau",
    "epsilon_upper",
    "epsilon_numeric",
    "j_max",
    "j_min_bound",
    "regime_max",
    "regime_min",
    "wall_time_ms",
];

/// Logarithm base used when displaying leakages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LogBase {
    #[default]
    #[serde(rename = "e")]
    Natural,
    #[serde(rename = "2")]
    Two,
}

impl LogBase {
    /// Converts a value in nats.
    pub fn convert(self, nats: f64) -> f64 {
        match self {
            LogBase::Natural => nats,
            LogBase::Two => nats / std::f64::consts::LN_2,
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            LogBase::Natural => "nats",
            LogBase::Two => "bits",
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "e" => Ok(LogBase::Natural),
            "2" => Ok(LogBase::Two),
            other => Err(format!("log base must be 'e' or '2', got {other:?}")),
        }
    }
}

/// One sweep point; leakages in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub s: f64,
    pub tau: Option<f64>,
    pub epsilon_upper: f64,
    pub epsilon_numeric: f64,
    pub j_max: f64,
    pub j_min_bound: f64,
    pub regime_max: RegimeTag,
    pub regime_min: RegimeTag,
    pub wall_time_ms: f64,
    pub converged: bool,
}

/// `τ` of the two-block phase structure for 4-dimensional block-depolarizing
/// mechanisms: `1` up to `log 2`, then the root of `s = log 2 + H_b(τ)`.
fn tau_for(config: &RunConfig, s: f64) -> Option<f64> {
    let two_block = config.mechanism.a.block_depolarizing_beta().is_some()
        && config.mechanism.b.block_depolarizing_beta().is_some();
    if !two_block {
        return None;
    }
    if s <= std::f64::consts::LN_2 {
        Some(1.0)
    } else {
        binary_weight_for_entropy(s).ok()
    }
}

pub fn run_sweep(config: &RunConfig) -> Result<Vec<SweepRow>> {
    run_sweep_with(config, &EnergySettings::default())
}

/// Evaluates every grid point (in parallel); rows come back in grid order.
pub fn run_sweep_with(config: &RunConfig, settings: &EnergySettings) -> Result<Vec<SweepRow>> {
    let (mech, grid) = config.validate()?;
    let search = config.effective_search();
    let optimizer = config.effective_optimizer();
    grid.par_iter()
        .map(|&s| {
            let start = Instant::now();
            let r = epsilon_star_with(&mech, s, &search, &optimizer, settings)?;
            Ok(SweepRow {
                s,
                tau: tau_for(config, s),
                epsilon_upper: r.epsilon_upper,
                epsilon_numeric: r.epsilon_numeric,
                j_max: r.j_max,
                j_min_bound: r.j_min_bound,
                regime_max: r.regime_max.tag,
                regime_min: r.regime_min.tag,
                wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
                converged: r.numeric_converged,
            })
        })
        .collect()
}

/// 17 significant digits; `+∞` as `inf`.
pub fn format_number(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else {
        format!("{v:.16e}")
    }
}

fn parse_number(field: &str) -> Result<f64> {
    match field {
        "inf" => Ok(f64::INFINITY),
        _ => field
            .parse::<f64>()
            .map_err(|_| QldpError::Config(format!("malformed number {field:?} in CSV"))),
    }
}

fn parse_regime(field: &str) -> Result<RegimeTag> {
    match field {
        "low" => Ok(RegimeTag::LowEntanglement),
        "high" => Ok(RegimeTag::HighEntanglement),
        "max" => Ok(RegimeTag::MaxEntanglement),
        _ => Err(QldpError::Config(format!("unknown regime {field:?} in CSV"))),
    }
}

fn csv_err(e: csv::Error) -> QldpError {
    QldpError::Config(format!("CSV error: {e}"))
}

/// CSV text with leakages converted to `base`.
pub fn rows_to_csv(rows: &[SweepRow], base: LogBase) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            format_number(r.s),
            r.tau.map(format_number).unwrap_or_default(),
            format_number(base.convert(r.epsilon_upper)),
            format_number(base.convert(r.epsilon_numeric)),
            format_number(r.j_max),
            format_number(r.j_min_bound),
            r.regime_max.as_str().into(),
            r.regime_min.as_str().into(),
            format!("{:.3}", r.wall_time_ms),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| QldpError::Config(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| QldpError::Config(e.to_string()))
}

/// Parses CSV produced by [`rows_to_csv`]. Values are returned as written
/// (no base conversion); `converged` is not stored in the CSV and reads as `true`.
pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(QldpError::Config(format!(
            "unexpected CSV header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != CSV_HEADER.len() {
            return Err(QldpError::Config(format!("CSV row has {} fields", rec.len())));
        }
        rows.push(SweepRow {
            s: parse_number(&rec[0])?,
            tau: if rec[1].is_empty() { None } else { Some(parse_number(&rec[1])?) },
            epsilon_upper: parse_number(&rec[2])?,
            epsilon_numeric: parse_number(&rec[3])?,
            j_max: parse_number(&rec[4])?,
            j_min_bound: parse_number(&rec[5])?,
            regime_max: parse_regime(&rec[6])?,
            regime_min: parse_regime(&rec[7])?,
            wall_time_ms: parse_number(&rec[8])?,
            converged: true,
        });
    }
    Ok(rows)
}

/// SHA-256 of the CSV text with the trailing `wall_time_ms` column removed.
pub fn determinism_hash(csv_text: &str) -> String {
    let mut h = Sha256::new();
    for line in csv_text.lines() {
        let kept = line.rsplit_once(',').map(|(head, _)| head).unwrap_or(line);
        h.update(kept.as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSummary {
    pub version: String,
    pub rows: usize,
    pub log_base: LogBase,
    pub determinism_hash: String,
    /// Entropy levels whose numerical minimum did not converge.
    pub non_converged: Vec<f64>,
    pub csv_path: PathBuf,
    pub config: RunConfig,
}

/// Writes the CSV and the JSON summary into `dir`.
pub fn write_sweep(config: &RunConfig, rows: &[SweepRow], base: LogBase, dir: &Path) -> Result<SweepSummary> {
    std::fs::create_dir_all(dir)?;
    let text = rows_to_csv(rows, base)?;
    let csv_path = dir.join(&config.output.csv);
    std::fs::write(&csv_path, &text)?;
    let summary = SweepSummary {
        version: crate::VERSION.to_string(),
        rows: rows.len(),
        log_base: base,
        determinism_hash: determinism_hash(&text),
        non_converged: rows.iter().filter(|r| !r.converged).map(|r| r.s).collect(),
        csv_path,
        config: config.clone(),
    };
    std::fs::write(
        dir.join(&config.output.summary),
        serde_json::to_string_pretty(&summary)?,
    )?;
    Ok(summary)
}
