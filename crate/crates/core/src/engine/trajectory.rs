use serde::Serialize;

use crate::error::{Error, Result};

pub const TRAJECTORY_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "#galign-trajectory v";

/// Statistics of `D_t` plus the accounting of the transition into it.
/// Transition fields are `None` for the initial row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub step: u64,
    pub mean: Vec<f64>,
    pub sigma2: f64,
    pub sigma2_updated: Option<f64>,
    pub drift_kept: Option<f64>,
    pub drift_updated: Option<f64>,
    pub residual: Option<f64>,
    pub mean_loss: Option<f64>,
    pub n_updated: Option<usize>,
}

impl TrajectoryRow {
    pub fn initial(step: u64, mean: Vec<f64>, sigma2: f64) -> Self {
        TrajectoryRow {
            step,
            mean,
            sigma2,
            sigma2_updated: None,
            drift_kept: None,
            drift_updated: None,
            residual: None,
            mean_loss: None,
            n_updated: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    dim: usize,
    rows: Vec<TrajectoryRow>,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_opt<T: std::str::FromStr>(s: &str, column: &str, line: usize) -> Result<Option<T>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| Error::Format(format!("line {line}: bad `{column}` value `{s}`")))
}

impl TrajectoryRecord {
    pub fn new(dim: usize) -> Self {
        TrajectoryRecord { dim, rows: Vec::new() }
    }

    pub fn push(&mut self, row: TrajectoryRow) -> Result<()> {
        if row.mean.len() != self.dim {
            return Err(Error::InvalidSample(format!(
                "mean has {} coords, expected {}",
                row.mean.len(),
                self.dim
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[TrajectoryRow] {
        &self.rows
    }

    pub fn sigma2(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.sigma2).collect()
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["step".to_string()];
        h.extend((0..self.dim).map(|i| format!("mu_{i}")));
        h.extend(
            [
                "sigma2",
                "sigma2_updated",
                "drift_kept",
                "drift_updated",
                "residual",
                "mean_loss",
                "n_updated",
            ]
            .map(String::from),
        );
        h
    }

    /// Versioned CSV: a `#galign-trajectory v1` line, then header and rows.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header())?;
        for r in &self.rows {
            let mut rec = vec![r.step.to_string()];
            rec.extend(r.mean.iter().map(f64::to_string));
            rec.push(r.sigma2.to_string());
            rec.extend([
                opt(r.sigma2_updated),
                opt(r.drift_kept),
                opt(r.drift_updated),
                opt(r.residual),
                opt(r.mean_loss),
                opt(r.n_updated),
            ]);
            w.write_record(rec)?;
        }
        let body =
            String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?).expect("csv output is UTF-8");
        Ok(format!("{MAGIC}{TRAJECTORY_FORMAT_VERSION}\n{body}"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let (first, body) = text.split_once('\n').unwrap_or((text, ""));
        let version = first
            .trim_end()
            .strip_prefix(MAGIC)
            .ok_or_else(|| Error::Format("missing `#galign-trajectory` version line".into()))?;
        if version != TRAJECTORY_FORMAT_VERSION.to_string() {
            return Err(Error::Format(format!(
                "unsupported trajectory version `{version}` (expected {TRAJECTORY_FORMAT_VERSION})"
            )));
        }
        let mut r = csv::Reader::from_reader(body.as_bytes());
        let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
        let dim = header.iter().filter(|h| h.starts_with("mu_")).count();
        let mut record = TrajectoryRecord::new(dim);
        if header != record.header() {
            return Err(Error::Format(format!("unexpected trajectory header {header:?}")));
        }
        for (i, row) in r.records().enumerate() {
            let row = row?;
            let line = i + 3;
            let f = |j: usize| row.get(j).unwrap_or("");
            let need = |j: usize, name: &str| -> Result<f64> {
                parse_opt(f(j), name, line)?.ok_or_else(|| Error::Format(format!("line {line}: empty `{name}`")))
            };
            let step: u64 =
                parse_opt(f(0), "step", line)?.ok_or_else(|| Error::Format(format!("line {line}: empty `step`")))?;
            let mean = (0..dim).map(|j| need(1 + j, "mu")).collect::<Result<Vec<_>>>()?;
            let b = 1 + dim;
            record.push(TrajectoryRow {
                step,
                mean,
                sigma2: need(b, "sigma2")?,
                sigma2_updated: parse_opt(f(b + 1), "sigma2_updated", line)?,
                drift_kept: parse_opt(f(b + 2), "drift_kept", line)?,
                drift_updated: parse_opt(f(b + 3), "drift_updated", line)?,
                residual: parse_opt(f(b + 4), "residual", line)?,
                mean_loss: parse_opt(f(b + 5), "mean_loss", line)?,
                n_updated: parse_opt(f(b + 6), "n_updated", line)?,
            })?;
        }
        Ok(record)
    }
}
