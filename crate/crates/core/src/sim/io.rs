//! Snapshot files: a `y,v` CSV plus a JSON sidecar with frame, time and `d`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::scheme::{Frame, RadialState};
use crate::dimension::Dim;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub d: Dim,
    pub frame: Frame,
    pub time: f64,
}

pub fn meta_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

pub fn write_snapshot(path: &Path, d: Dim, state: &RadialState) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["y", "v"]).map_err(csv_err)?;
    for (y, v) in state.grid.nodes().iter().zip(&state.values) {
        w.write_record([y.to_string(), v.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    let meta = SnapshotMeta {
        d,
        frame: state.frame,
        time: state.time,
    };
    std::fs::write(meta_path(path), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

/// Reads nodes and values from a `y,v` CSV.
pub fn read_snapshot_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = r.headers().map_err(csv_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != ["y", "v"] {
        return Err(Error::Parse(format!("expected header y,v in {}", path.display())));
    }
    let (mut ys, mut vs) = (Vec::new(), Vec::new());
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let parse = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|x| x.trim().parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad number in row {}", i + 2)))
        };
        ys.push(parse(0)?);
        vs.push(parse(1)?);
    }
    Ok((ys, vs))
}

pub fn read_meta(path: &Path) -> Result<Option<SnapshotMeta>> {
    let p = meta_path(path);
    if !p.exists() {
        return Ok(None);
    }
    Ok(Some(serde_json::from_str(&std::fs::read_to_string(p)?)?))
}

/// Reads a snapshot; `frame`/`time` default to the sidecar values.
pub fn read_snapshot(path: &Path, frame: Option<Frame>, time: Option<f64>) -> Result<(RadialState, Option<SnapshotMeta>)> {
    let (ys, vs) = read_snapshot_csv(path)?;
    let meta = read_meta(path)?;
    let frame = frame.or(meta.map(|m| m.frame)).unwrap_or(Frame::SelfSimilar);
    let time = time
        .or(meta.map(|m| m.time))
        .ok_or_else(|| Error::Argument("snapshot time unknown: pass it or keep the sidecar".into()))?;
    let grid = Arc::new(Grid::from_nodes(ys)?);
    Ok((RadialState::new(frame, time, grid, vs)?, meta))
}
