//! Per-step simulation log and its CSV/JSON serialization.
//!
//! Column order (CSV header names):
//!
//! ```text
//! t, x, y, z, phi, theta, psi, u, v, w, p, q, r,
//! tau_X, tau_Y, tau_Z, tau_K, tau_M, tau_N, tau_w_X, tau_w_Y, tau_w_Z,
//! x_los, y_los, z_los, phi_ref, theta_ref, psi_ref,
//! active_index, qp_status, qp_iterations, worst_case_cost
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so reading a log back
//! reproduces every value bit for bit.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::SolveStatus;

pub const CSV_COLUMNS: [&str; 32] = [
    "t",
    "x",
    "y",
    "z",
    "phi",
    "theta",
    "psi",
    "u",
    "v",
    "w",
    "p",
    "q",
    "r",
    "tau_X",
    "tau_Y",
    "tau_Z",
    "tau_K",
    "tau_M",
    "tau_N",
    "tau_w_X",
    "tau_w_Y",
    "tau_w_Z",
    "x_los",
    "y_los",
    "z_los",
    "phi_ref",
    "theta_ref",
    "psi_ref",
    "active_index",
    "qp_status",
    "qp_iterations",
    "worst_case_cost",
];

#[derive(Debug, Error)]
pub enum LogError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("row {row}: {message}")]
    Format { row: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Solved,
    Infeasible,
    MaxIter,
    /// Final row written when the destination is reached; no control applied.
    Terminal,
}

impl RowStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowStatus::Solved => "solved",
            RowStatus::Infeasible => "infeasible",
            RowStatus::MaxIter => "max_iter",
            RowStatus::Terminal => "terminal",
        }
    }
}

impl From<SolveStatus> for RowStatus {
    fn from(s: SolveStatus) -> Self {
        match s {
            SolveStatus::Solved => RowStatus::Solved,
            SolveStatus::Infeasible => RowStatus::Infeasible,
            SolveStatus::MaxIter => RowStatus::MaxIter,
        }
    }
}

impl FromStr for RowStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "solved" => Ok(RowStatus::Solved),
            "infeasible" => Ok(RowStatus::Infeasible),
            "max_iter" => Ok(RowStatus::MaxIter),
            "terminal" => Ok(RowStatus::Terminal),
            other => Err(format!("unknown qp_status {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRow {
    pub t: f64,
    pub pose: [f64; 6],
    pub nu: [f64; 6],
    pub tau: [f64; 6],
    pub tau_w: [f64; 3],
    pub los_ref: [f64; 6],
    pub active_index: usize,
    pub qp_status: RowStatus,
    pub qp_iterations: usize,
    pub worst_case_cost: f64,
}

impl LogRow {
    fn to_record(&self) -> Vec<String> {
        let mut rec = Vec::with_capacity(CSV_COLUMNS.len());
        rec.push(self.t.to_string());
        rec.extend(
            self.pose
                .iter()
                .chain(&self.nu)
                .chain(&self.tau)
                .chain(&self.tau_w)
                .chain(&self.los_ref)
                .map(f64::to_string),
        );
        rec.push(self.active_index.to_string());
        rec.push(self.qp_status.as_str().to_owned());
        rec.push(self.qp_iterations.to_string());
        rec.push(self.worst_case_cost.to_string());
        rec
    }

    fn from_record(row: usize, rec: &csv::StringRecord) -> Result<Self, LogError> {
        let err = |message: String| LogError::Format { row, message };
        if rec.len() != CSV_COLUMNS.len() {
            return Err(err(format!(
                "expected {} columns, found {}",
                CSV_COLUMNS.len(),
                rec.len()
            )));
        }
        let float = |i: usize| -> Result<f64, LogError> {
            rec[i]
                .parse::<f64>()
                .map_err(|e| err(format!("{}: {e}", CSV_COLUMNS[i])))
        };
        let int = |i: usize| -> Result<usize, LogError> {
            rec[i]
                .parse::<usize>()
                .map_err(|e| err(format!("{}: {e}", CSV_COLUMNS[i])))
        };
        let block = |start: usize| -> Result<[f64; 6], LogError> {
            let mut out = [0.0; 6];
            for (k, v) in out.iter_mut().enumerate() {
                *v = float(start + k)?;
            }
            Ok(out)
        };
        Ok(LogRow {
            t: float(0)?,
            pose: block(1)?,
            nu: block(7)?,
            tau: block(13)?,
            tau_w: [float(19)?, float(20)?, float(21)?],
            los_ref: block(22)?,
            active_index: int(28)?,
            qp_status: rec[29].parse().map_err(err)?,
            qp_iterations: int(30)?,
            worst_case_cost: float(31)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimLog {
    pub rows: Vec<LogRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    Csv,
    Json,
}

impl LogFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            LogFormat::Csv => "csv",
            LogFormat::Json => "json",
        }
    }
}

impl FromStr for LogFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(LogFormat::Csv),
            "json" => Ok(LogFormat::Json),
            other => Err(format!(
                "unknown log format {other:?} (expected csv or json)"
            )),
        }
    }
}

impl SimLog {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<(), LogError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(CSV_COLUMNS)?;
        for row in &self.rows {
            w.write_record(row.to_record())?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self, LogError> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        if header.iter().ne(CSV_COLUMNS.iter().copied()) {
            return Err(LogError::Format {
                row: 0,
                message: "unexpected header".into(),
            });
        }
        let rows = r
            .records()
            .enumerate()
            .map(|(i, rec)| LogRow::from_record(i + 1, &rec?))
            .collect::<Result<_, _>>()?;
        Ok(SimLog { rows })
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

pub fn write_log(log: &SimLog, path: impl AsRef<Path>, format: LogFormat) -> Result<(), LogError> {
    let path = path.as_ref();
    let io = |source| LogError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    match format {
        LogFormat::Csv => log.write_csv(file),
        LogFormat::Json => Ok(serde_json::to_writer(file, log)?),
    }
}

pub fn read_log(path: impl AsRef<Path>, format: LogFormat) -> Result<SimLog, LogError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| LogError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = std::io::BufReader::new(file);
    match format {
        LogFormat::Csv => SimLog::read_csv(reader),
        LogFormat::Json => Ok(serde_json::from_reader(reader)?),
    }
}
