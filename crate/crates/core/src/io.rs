//! File formats: JSON network files, CSV matrices, trajectories and
//! per-edge error angles.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::network::NetworkSpec;
use crate::sensitivity::EdgeAngle;
use crate::solver::FlowTrajectory;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
}

pub fn parse_network(text: &str) -> Result<NetworkSpec, IoError> {
    Ok(serde_json::from_str(text)?)
}

pub fn read_network(path: &Path) -> Result<NetworkSpec, IoError> {
    parse_network(&fs::read_to_string(path)?)
}

/// Row-major CSV without a header.
pub fn write_matrix_csv<W: Write>(out: W, m: &DMatrix<f64>) -> Result<(), IoError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for r in 0..m.nrows() {
        w.write_record(m.row(r).iter().map(|x| format!("{x:e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv<R: Read>(input: R) -> Result<DMatrix<f64>, IoError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.deserialize() {
        rows.push(rec?);
    }
    let cols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]))
}

/// Columns `step, t, <id>_<k>..., velocity_inf_norm, error_norm`; the error
/// column is blank when no ground truth was supplied.
pub fn write_trajectory_csv<W: Write>(
    out: W,
    trajectory: &FlowTrajectory,
    follower_ids: &[String],
    dimension: usize,
) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["step".to_string(), "t".to_string()];
    for id in follower_ids {
        header.extend((0..dimension).map(|k| format!("{id}_{k}")));
    }
    header.push("velocity_inf_norm".into());
    header.push("error_norm".into());
    w.write_record(&header)?;
    for r in &trajectory.records {
        let mut row = vec![r.step.to_string(), format!("{:e}", r.time)];
        row.extend(r.estimate.iter().map(|x| format!("{x:e}")));
        row.push(format!("{:e}", r.velocity_inf_norm));
        row.push(r.error_norm.map(|e| format!("{e:e}")).unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-edge angles from a CSV with header `tail,head,angle` (radians).
pub fn read_angles<R: Read>(input: R) -> Result<Vec<EdgeAngle>, IoError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    rdr.deserialize().map(|r| r.map_err(IoError::from)).collect()
}
