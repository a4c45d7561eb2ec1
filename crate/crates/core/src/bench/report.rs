use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocal_tract::{Param, N_PARAMS};

pub const REPORT_HEADER: [&str; 19] = [
    "experiment",
    "optimizer",
    "representation",
    "repetition",
    "target_id",
    "err_pitch",
    "err_voiceness",
    "err_tongue_idx",
    "err_tongue_diam",
    "err_lips",
    "err_constr_idx",
    "err_constr_diam",
    "err_throat",
    "mean_norm_error",
    "audio_mae",
    "stoi",
    "n_evals",
    "elapsed_s",
    "stop_reason",
];

pub const FAILED: &str = "failed";

/// One run of the grid. Optional fields are written as empty cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub optimizer: String,
    pub representation: String,
    pub repetition: usize,
    pub target_id: String,
    /// Normalized per-control errors, absent without ground truth.
    pub errors: Option<[f64; N_PARAMS]>,
    pub mean_norm_error: Option<f64>,
    pub audio_mae: Option<f64>,
    pub stoi: Option<f64>,
    pub n_evals: usize,
    pub elapsed_s: f64,
    pub stop_reason: String,
}

impl ReportRow {
    pub fn failed(&self) -> bool {
        self.stop_reason == FAILED
    }

    pub fn error(&self, p: Param) -> Option<f64> {
        self.errors.map(|e| e[p.index()])
    }

    /// SNR condition encoded in the target id as `...@snr<dB>`; `None` for clean runs.
    pub fn snr_db(&self) -> Option<f64> {
        self.target_id.rsplit_once("@snr").and_then(|(_, v)| v.parse().ok())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    pub fn failed_count(&self) -> usize {
        self.rows.iter().filter(|r| r.failed()).count()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn parse_opt(s: &str, line: usize, column: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| Error::InvalidConfig(format!("report line {line}: bad {column} `{s}`")))
}

pub fn write_report(report: &ExperimentReport, out_path: impl AsRef<Path>) -> Result<()> {
    let path = out_path.as_ref();
    if report.rows.is_empty() {
        return Err(Error::InvalidConfig("report has no rows".into()));
    }
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(REPORT_HEADER).map_err(csv_err)?;
    for r in &report.rows {
        let mut rec = vec![
            r.experiment.clone(),
            r.optimizer.clone(),
            r.representation.clone(),
            r.repetition.to_string(),
            r.target_id.clone(),
        ];
        for i in 0..N_PARAMS {
            rec.push(opt(r.errors.map(|e| e[i])));
        }
        rec.extend([
            opt(r.mean_norm_error),
            opt(r.audio_mae),
            opt(r.stoi),
            r.n_evals.to_string(),
            r.elapsed_s.to_string(),
            r.stop_reason.clone(),
        ]);
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<ExperimentReport> {
    let path = path.as_ref();
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    if header != REPORT_HEADER {
        return Err(Error::InvalidConfig(format!(
            "{}: unexpected report header",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        let f = |k: usize| parse_opt(&rec[k], line, REPORT_HEADER[k]);
        let mut errors = [0.0; N_PARAMS];
        let mut have = true;
        for (j, e) in errors.iter_mut().enumerate() {
            match f(5 + j)? {
                Some(v) => *e = v,
                None => have = false,
            }
        }
        let int = |k: usize| {
            rec[k].parse::<usize>().map_err(|_| {
                Error::InvalidConfig(format!("report line {line}: bad {} `{}`", REPORT_HEADER[k], &rec[k]))
            })
        };
        rows.push(ReportRow {
            experiment: rec[0].to_owned(),
            optimizer: rec[1].to_owned(),
            representation: rec[2].to_owned(),
            repetition: int(3)?,
            target_id: rec[4].to_owned(),
            errors: have.then_some(errors),
            mean_norm_error: f(13)?,
            audio_mae: f(14)?,
            stoi: f(15)?,
            n_evals: int(16)?,
            elapsed_s: f(17)?.unwrap_or(0.0),
            stop_reason: rec[18].to_owned(),
        });
    }
    Ok(ExperimentReport { rows })
}
