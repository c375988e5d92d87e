//! JSON-lines encoding of trajectories and event logs.
//!
//! One particle per line:
//! `{"id":3,"t":[0.0,0.7],"x":[[..],[..]],"v":[[..],[..]],"a":[1,2]}`,
//! where entry `k` of each array describes the `k`-th straight piece. One
//! event per line: `{"t":..,"kind":"jump","pair":[i,j],"a":[..],"v":[..]}`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{Event, Trajectory, TrajectoryRecord};
use crate::geometry::Vector;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Serialize, Deserialize)]
struct TrajectoryLine {
    id: usize,
    t: Vec<f64>,
    x: Vec<Vector>,
    v: Vec<Vector>,
    a: Vec<u32>,
}

impl From<&Trajectory> for TrajectoryLine {
    fn from(tr: &Trajectory) -> Self {
        TrajectoryLine {
            id: tr.id,
            t: tr.records.iter().map(|r| r.t).collect(),
            x: tr.records.iter().map(|r| r.x).collect(),
            v: tr.records.iter().map(|r| r.v).collect(),
            a: tr.records.iter().map(|r| r.a).collect(),
        }
    }
}

impl TrajectoryLine {
    fn into_trajectory(self, horizon: f64) -> Result<Trajectory, String> {
        let n = self.t.len();
        if n == 0 || self.x.len() != n || self.v.len() != n || self.a.len() != n {
            return Err("t, x, v and a must be non-empty arrays of equal length".into());
        }
        let dim = self.x[0].dim();
        if self.x.iter().chain(&self.v).any(|p| p.dim() != dim) {
            return Err("mixed dimensions".into());
        }
        let records =
            (0..n).map(|k| TrajectoryRecord { t: self.t[k], x: self.x[k], v: self.v[k], a: self.a[k] }).collect();
        Ok(Trajectory { id: self.id, records, horizon })
    }
}

pub fn write_trajectories<W: Write>(mut w: W, trajectories: &[Trajectory]) -> Result<(), IoError> {
    for tr in trajectories {
        serde_json::to_writer(&mut w, &TrajectoryLine::from(tr))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads trajectories; `horizon` closes the last piece of each path.
pub fn read_trajectories<R: BufRead>(r: R, horizon: f64) -> Result<Vec<Trajectory>, IoError> {
    let mut out = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| IoError::Malformed { line: k + 1, message };
        let parsed: TrajectoryLine = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        out.push(parsed.into_trajectory(horizon).map_err(malformed)?);
    }
    Ok(out)
}

pub fn write_events<W: Write>(mut w: W, events: &[Event]) -> Result<(), IoError> {
    for e in events {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_events<R: BufRead>(r: R) -> Result<Vec<Event>, IoError> {
    let mut out = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| IoError::Malformed { line: k + 1, message: e.to_string() })?);
    }
    Ok(out)
}
