//! CSV files: every file has a header row and floats are written in
//! shortest round-trip form.

use std::fs::File;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{FlowRow, Frontier, Method, TradeoffPoint};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucRow {
    pub method: Method,
    pub trial: usize,
    pub auc: f64,
    pub mean_auc: f64,
}

#[derive(Serialize)]
struct HistogramRow {
    #[serde(rename = "T")]
    t: usize,
    count: usize,
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: csv_kind_message(kind),
        },
    }
}

fn csv_kind_message(kind: csv::ErrorKind) -> String {
    match kind {
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => format!("expected {expected_len} fields, found {len}"),
        other => format!("{other:?}"),
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path)?;
    csv::Reader::from_reader(file)
        .deserialize()
        .map(|r| r.map_err(|e| csv_err(path, e)))
        .collect()
}

/// Columns `mu,trial,epoch,mean_T,accuracy`.
pub fn write_points_csv(path: impl AsRef<Path>, points: &[TradeoffPoint]) -> Result<()> {
    write_rows(path.as_ref(), points)
}

pub fn read_points_csv(path: impl AsRef<Path>) -> Result<Vec<TradeoffPoint>> {
    let path = path.as_ref();
    let points: Vec<TradeoffPoint> = read_rows(path)?;
    for (i, p) in points.iter().enumerate() {
        if !(p.mean_t >= 1.0 && (0.0..=1.0).contains(&p.accuracy)) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 2,
                message: format!(
                    "point out of range: mean_T {} accuracy {}",
                    p.mean_t, p.accuracy
                ),
            });
        }
    }
    Ok(points)
}

pub fn write_frontier_csv(path: impl AsRef<Path>, frontier: &Frontier) -> Result<()> {
    write_rows(path.as_ref(), &frontier.points)
}

pub fn read_frontier_csv(path: impl AsRef<Path>) -> Result<Frontier> {
    Ok(Frontier {
        points: read_rows(path.as_ref())?,
    })
}

pub fn write_auc_summary_csv(path: impl AsRef<Path>, rows: &[AucRow]) -> Result<()> {
    write_rows(path.as_ref(), rows)
}

/// Columns `T,count`, one row per `T = 1..=T_end`.
pub fn write_histogram_csv(path: impl AsRef<Path>, counts: &[usize]) -> Result<()> {
    write_rows(
        path.as_ref(),
        counts
            .iter()
            .enumerate()
            .map(|(i, &count)| HistogramRow { t: i + 1, count }),
    )
}

pub fn write_flows_csv(path: impl AsRef<Path>, rows: &[FlowRow]) -> Result<()> {
    write_rows(path.as_ref(), rows)
}
