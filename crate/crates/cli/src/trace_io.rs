//! Trace CSV export and import.
//!
//! Columns: `t, x_d, v_d, a_d, x_v1, v_v1, [x_v2, v_v2, ...] x, v, a, x_obs,
//! v_obs, gap, xi, f_p, f_c, u`. Values are written with 17 significant
//! digits so a trace reads back bit-exactly.

use std::path::Path;

use preimpact_core::dynamics::ObstacleSample;
use preimpact_core::{DesiredState, PlantState, SimTrace, VirtualObjectState};

use crate::error::{CliError, Result};

const HEAD: [&str; 4] = ["t", "x_d", "v_d", "a_d"];
const TAIL: [&str; 10] = ["x", "v", "a", "x_obs", "v_obs", "gap", "xi", "f_p", "f_c", "u"];

pub fn header(n_stages: usize) -> Vec<String> {
    let mut cols: Vec<String> = HEAD.iter().map(|s| s.to_string()).collect();
    for i in 1..=n_stages {
        cols.push(format!("x_v{i}"));
        cols.push(format!("v_v{i}"));
    }
    cols.extend(TAIL.iter().map(|s| s.to_string()));
    cols
}

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trace(path: &Path, trace: &SimTrace) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path.display(), e))?;
    let err = |e: csv::Error| CliError::io(path.display(), e);
    w.write_record(header(trace.stage_count())).map_err(err)?;
    let mut row = Vec::with_capacity(4 + 2 * trace.stage_count() + 10);
    for k in 0..trace.len() {
        row.clear();
        let d = trace.desired[k];
        row.extend([trace.t[k], d.x, d.v, d.a]);
        for s in &trace.stages {
            row.extend([s[k].x, s[k].v]);
        }
        let p = trace.plant[k];
        let o = trace.obstacle[k];
        row.extend([p.x, p.v, p.a, o.x, o.v, trace.gap[k], trace.xi[k], trace.f_p[k], trace.f_c[k], trace.u[k]]);
        w.write_record(row.iter().map(|v| format_float(*v))).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path.display(), e))
}

/// Reads a trace written by [`write_trace`].
///
/// The file does not store the time step or the contact normal: the step is
/// taken from the time column and the normal from the sign relating `gap`
/// to `x_obs - x`. Virtual accelerations are not stored and read back as 0.
pub fn read_trace(path: &Path) -> Result<SimTrace> {
    let bad = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let cols: Vec<String> = r.headers().map_err(|e| bad(e.to_string()))?.iter().map(str::to_string).collect();
    if cols.len() < 16 || !(cols.len() - 14).is_multiple_of(2) {
        return Err(bad(format!("unexpected column count {}", cols.len())));
    }
    let n_stages = (cols.len() - 14) / 2;
    if cols != header(n_stages) {
        return Err(bad(format!("unexpected header {}", cols.join(","))));
    }

    let mut trace = SimTrace {
        stages: vec![Vec::new(); n_stages],
        ..SimTrace::default()
    };
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let v: Vec<f64> = record
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(format!("row {}: {e}", line + 2)))?;
        if v.len() != cols.len() {
            return Err(bad(format!("row {} has {} fields", line + 2, v.len())));
        }
        trace.t.push(v[0]);
        trace.desired.push(DesiredState { x: v[1], v: v[2], a: v[3] });
        for (i, series) in trace.stages.iter_mut().enumerate() {
            series.push(VirtualObjectState { x: v[4 + 2 * i], v: v[5 + 2 * i], a: 0.0 });
        }
        let o = 4 + 2 * n_stages;
        trace.plant.push(PlantState { x: v[o], v: v[o + 1], a: v[o + 2] });
        trace.obstacle.push(ObstacleSample { x: v[o + 3], v: v[o + 4] });
        trace.gap.push(v[o + 5]);
        trace.xi.push(v[o + 6]);
        trace.f_p.push(v[o + 7]);
        trace.f_c.push(v[o + 8]);
        trace.u.push(v[o + 9]);
    }
    if trace.len() < 2 {
        return Err(bad("a trace needs at least two rows".into()));
    }
    trace.dt = (trace.t[trace.len() - 1] - trace.t[0]) / (trace.len() - 1) as f64;
    trace.normal = (0..trace.len())
        .find_map(|k| {
            let sep = trace.obstacle[k].x - trace.plant[k].x;
            (sep != 0.0 && trace.gap[k] != 0.0).then(|| (trace.gap[k] / sep).signum())
        })
        .unwrap_or(-1.0);
    trace.validate().map_err(|e| bad(e.to_string()))?;
    Ok(trace)
}
