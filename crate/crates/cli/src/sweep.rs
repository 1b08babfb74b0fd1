//! Cartesian parameter sweeps over configuration fields.

use std::cmp::Ordering;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use toml::Value;

use crate::config::{parse_scalar, ConfigSource, Override};
use crate::error::{CliError, Result};
use crate::report::{build_report, simulate_pair, RunReport};
use crate::trace_io::format_float;

pub const SWEEP_FILE: &str = "sweep.csv";

/// One sweep axis, written `key=v1,v2,...`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub key: String,
    pub values: Vec<Value>,
}

impl FromStr for GridAxis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (key, raw) = s.split_once('=').ok_or_else(|| format!("expected key=v1,v2,..., got `{s}`"))?;
        let key = key.trim();
        if key.is_empty() || key.split('.').any(str::is_empty) {
            return Err(format!("invalid key `{key}`"));
        }
        let values = raw.split(',').map(str::trim).filter(|v| !v.is_empty()).map(parse_scalar).collect();
        Ok(GridAxis { key: key.to_string(), values })
    }
}

/// Grid points of the cartesian product. No axes, or any empty axis, give
/// no points.
pub fn grid_points(axes: &[GridAxis]) -> Vec<Vec<Override>> {
    if axes.is_empty() || axes.iter().any(|a| a.values.is_empty()) {
        return Vec::new();
    }
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut point = prefix.clone();
                    point.push(Override { key: axis.key.clone(), value: v.clone() });
                    point
                })
            })
            .collect()
    })
}

fn compare_values(a: &Value, b: &Value) -> Ordering {
    let num = |v: &Value| match v {
        Value::Integer(i) => Some(*i as f64),
        Value::Float(f) => Some(*f),
        _ => None,
    };
    match (num(a), num(b)) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        _ => a.to_string().cmp(&b.to_string()),
    }
}

/// Outcome of one grid point.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub point: Vec<Override>,
    pub outcome: std::result::Result<RunReport, String>,
}

const COLUMNS: [&str; 10] = [
    "status",
    "contact",
    "contact_onset_time",
    "peak_force",
    "baseline_peak_force",
    "reduction_percent",
    "smooth_condition",
    "transition_class",
    "t_ex",
    "signal_lost",
];

fn opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

fn row(r: &PointResult) -> Vec<String> {
    let mut out: Vec<String> = r.point.iter().map(|o| value_text(&o.value)).collect();
    match &r.outcome {
        Ok(rep) => {
            let m = rep.metrics.as_ref();
            out.extend([
                "ok".to_string(),
                rep.contact.to_string(),
                opt(rep.contact_onset_time),
                opt(m.map(|m| m.mean)),
                opt(m.map(|m| m.baseline_mean)),
                opt(m.map(|m| m.reduction_percent)),
                rep.conditions
                    .smooth_condition
                    .map(|c| serde_json::to_value(c).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default())
                    .unwrap_or_default(),
                rep.transition.as_ref().map(|t| t.class.clone()).unwrap_or_default(),
                opt(rep.transition.as_ref().and_then(|t| t.t_ex)),
                rep.signal_lost.to_string(),
            ]);
        }
        Err(msg) => {
            out.push(format!("error: {msg}"));
            out.extend(std::iter::repeat_n(String::new(), COLUMNS.len() - 1));
        }
    }
    out
}

fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Float(f) => format!("{f}"),
        other => other.to_string(),
    }
}

/// Runs every grid point of `axes` over `source` (with `sets` applied first)
/// on `jobs` threads and writes `sweep.csv` into `out`, rows sorted by grid
/// coordinates.
pub fn sweep(
    source: &ConfigSource,
    sets: &[Override],
    seed: Option<u64>,
    axes: &[GridAxis],
    out: &Path,
    jobs: Option<usize>,
) -> Result<Vec<PointResult>> {
    for axis in axes {
        source.knows_key(&axis.key)?;
    }
    let points = grid_points(axes);
    // Configuration errors stop the sweep before anything runs.
    let configs = points
        .iter()
        .map(|p| {
            let all: Vec<Override> = sets.iter().chain(p.iter()).cloned().collect();
            source.resolve(&all, seed)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    let mut results: Vec<PointResult> = pool.install(|| {
        points
            .into_par_iter()
            .zip(configs.into_par_iter())
            .map(|(point, cfg)| {
                let outcome = simulate_pair(&cfg)
                    .map(|(trace, baseline)| build_report(&cfg, &trace, &baseline))
                    .map_err(|e| e.to_string());
                PointResult { point, outcome }
            })
            .collect()
    });
    results.sort_by(|a, b| {
        a.point
            .iter()
            .zip(&b.point)
            .map(|(x, y)| compare_values(&x.value, &y.value))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    });

    std::fs::create_dir_all(out).map_err(|e| CliError::io(out.display(), e))?;
    let path = out.join(SWEEP_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::io(path.display(), e))?;
    let header: Vec<&str> = axes.iter().map(|a| a.key.as_str()).chain(COLUMNS).collect();
    w.write_record(&header).map_err(|e| CliError::io(path.display(), e))?;
    for r in &results {
        w.write_record(row(r)).map_err(|e| CliError::io(path.display(), e))?;
    }
    w.flush().map_err(|e| CliError::io(path.display(), e))?;
    Ok(results)
}
