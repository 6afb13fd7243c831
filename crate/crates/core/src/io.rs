//! Text serializations of run outputs.
//!
//! Floats are written in shortest round-trip form, so equal runs give
//! byte-identical files.

use std::fmt::Write;

use serde::Serialize;

use crate::branching::EmpiricalPath;
use crate::dynamics::Trajectory;
use crate::entropic::{GridDensity, GridFlow};
use crate::error::Result;

fn num(out: &mut String, x: f64) {
    write!(out, "{x:?}").unwrap();
}

fn row(out: &mut String, values: impl IntoIterator<Item = f64>) {
    for (i, v) in values.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        num(out, v);
    }
}

/// `clock,time,pos_0..,vel_0..`; velocity columns only when present.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let dim = traj.positions.first().map(|p| p.len()).unwrap_or(0);
    let mut out = String::from("clock,time");
    for i in 0..dim {
        write!(out, ",pos_{i}").unwrap();
    }
    if traj.velocities.is_some() {
        for i in 0..dim {
            write!(out, ",vel_{i}").unwrap();
        }
    }
    out.push('\n');
    for (j, (t, y)) in traj.times.iter().zip(&traj.positions).enumerate() {
        out.push_str(traj.clock.name());
        out.push(',');
        num(&mut out, *t);
        for v in &y.coords {
            out.push(',');
            num(&mut out, *v);
        }
        if let Some(vel) = &traj.velocities {
            for v in &vel[j].coords {
                out.push(',');
                num(&mut out, *v);
            }
        }
        out.push('\n');
    }
    out
}

/// One JSON object per line.
pub fn json_lines<T: Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).map_err(|e| {
            crate::error::MagError::Validation(format!("serialization failed: {e}"))
        })?);
        out.push('\n');
    }
    Ok(out)
}

/// `time,particle_id,coord_0..` for every snapshot.
pub fn cloud_csv(path: &EmpiricalPath) -> String {
    let dim = path
        .snapshots
        .first()
        .and_then(|c| c.points.first())
        .map(|p| p.len())
        .unwrap_or(0);
    let mut out = String::from("time,particle_id");
    for i in 0..dim {
        write!(out, ",coord_{i}").unwrap();
    }
    out.push('\n');
    for cloud in &path.snapshots {
        for (id, x) in cloud.ids.iter().zip(&cloud.points) {
            num(&mut out, cloud.time);
            write!(out, ",{id}").unwrap();
            for v in x {
                out.push(',');
                num(&mut out, *v);
            }
            out.push('\n');
        }
    }
    out
}

/// `x,value`.
pub fn grid_csv(p: &GridDensity) -> String {
    grid_values_csv(p, &p.values)
}

/// `x,value` for any per-node quantity on the grid of `p`.
pub fn grid_values_csv(p: &GridDensity, values: &[f64]) -> String {
    let mut out = String::from("x,value\n");
    for (i, v) in values.iter().enumerate() {
        row(&mut out, [p.x(i), *v]);
        out.push('\n');
    }
    out
}

/// `t,x,value`.
pub fn flow_csv(flow: &GridFlow) -> String {
    let mut out = String::from("t,x,value\n");
    for (t, p) in flow.times.iter().zip(&flow.densities) {
        for (i, v) in p.values.iter().enumerate() {
            row(&mut out, [*t, p.x(i), *v]);
            out.push('\n');
        }
    }
    out
}

/// Header plus rows of numbers.
pub fn table_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        row(&mut out, r.iter().copied());
        out.push('\n');
    }
    out
}
