//! Consistency checks on a configuration, a trace CSV and a run report.

use std::fmt;
use std::path::Path;

use preimpact_core::analysis::{impact_peak, CRITICAL_DAMPING_TOL};
use preimpact_core::{
    closed_form_y, superposition_check, ContactState, CriticalAdmittance, ImpedanceLawKind, ScenarioConfig, SimTrace,
};

use crate::error::{CliError, Result};
use crate::report::{conditions, proximity_stage, RunReport};
use crate::trace_io::{header, read_trace};

/// Superposition residual bound for a trace with its exact per-stage force log.
pub const SUPERPOSITION_TOL_EXACT: f64 = 1e-6;
/// Bound when the per-stage forces are rebuilt from the sampled CSV columns.
pub const SUPERPOSITION_TOL_INTERPOLATED: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
    Info,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
            Status::Info => "INFO",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, status: Status, detail: impl Into<String>) -> Self {
        Check { name, status, detail: detail.into() }
    }

    fn pass_if(name: &'static str, ok: bool, detail: impl Into<String>) -> Self {
        Check::new(name, if ok { Status::Pass } else { Status::Fail }, detail)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.status, self.name, self.detail)
    }
}

/// What to verify. At least one of `config` and `trace` is required.
#[derive(Debug, Default)]
pub struct VerifyInputs<'a> {
    pub config: Option<ScenarioConfig>,
    pub trace: Option<&'a Path>,
    pub report: Option<&'a Path>,
}

/// Largest mismatch between the columns a CSV stores for `a` and `b`, or a
/// description of a structural difference.
fn stored_mismatch(a: &SimTrace, b: &SimTrace) -> std::result::Result<f64, String> {
    if a.len() != b.len() || a.stage_count() != b.stage_count() {
        return Err(format!(
            "{} rows x {} stages vs {} rows x {} stages",
            a.len(),
            a.stage_count(),
            b.len(),
            b.stage_count()
        ));
    }
    let row = |t: &SimTrace, k: usize| {
        let mut v = vec![t.t[k], t.desired[k].x, t.desired[k].v, t.desired[k].a];
        for s in &t.stages {
            v.extend([s[k].x, s[k].v]);
        }
        let (p, o) = (t.plant[k], t.obstacle[k]);
        v.extend([p.x, p.v, p.a, o.x, o.v, t.gap[k], t.xi[k], t.f_p[k], t.f_c[k], t.u[k]]);
        v
    };
    let mut worst: f64 = 0.0;
    for k in 0..a.len() {
        for (x, y) in row(a, k).into_iter().zip(row(b, k)) {
            if x.to_bits() != y.to_bits() {
                let d = (x - y).abs();
                worst = if d.is_nan() { f64::INFINITY } else { worst.max(d.max(f64::MIN_POSITIVE)) };
            }
        }
    }
    Ok(worst)
}

/// Largest deviation of the proximity-stage offset `x_v - x_d` from the
/// closed-form free response during the first `5 / omega_a` after contact,
/// relative to the largest free-response magnitude in that window.
fn free_response_deviation(trace: &SimTrace, stage: usize, omega_a: f64) -> Option<(f64, f64)> {
    let contact = ContactState::from_trace(trace, stage, omega_a).ok()?;
    let adm = CriticalAdmittance::from_omega(omega_a).ok()?;
    let onset = trace.contact_onset()?;
    let window = 5.0 / omega_a;
    let (mut dev, mut scale) = (0.0_f64, 0.0_f64);
    for k in onset.index..trace.len() {
        let t = trace.t[k] - onset.time;
        if t > window {
            break;
        }
        let (y, _, _) = closed_form_y(t, &contact, &adm).ok()?;
        let offset = trace.stages[stage][k].x - trace.desired[k].x;
        dev = dev.max((offset - y).abs());
        scale = scale.max(y.abs());
    }
    Some((dev, scale))
}

/// Runs all checks. Returns the check lines; a missing contact onset ends
/// the run early with [`CliError::NoContact`].
pub fn verify(inputs: &VerifyInputs<'_>) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let simulated = match &inputs.config {
        Some(cfg) => Some(preimpact_core::simulate(cfg)?),
        None => None,
    };
    let from_csv = match inputs.trace {
        Some(path) => Some(read_trace(path)?),
        None => None,
    };
    let trace = match (&from_csv, &simulated) {
        (Some(t), _) | (None, Some(t)) => t,
        (None, None) => return Err(CliError::Config("verify needs --config, --trace or both".into())),
    };

    let monotone = trace.t.windows(2).all(|w| w[1] > w[0]);
    let n_cols = header(trace.stage_count()).len();
    checks.push(Check::pass_if(
        "structure",
        trace.validate().is_ok() && monotone,
        format!("{} rows, {} columns, dt = {:e} s", trace.len(), n_cols, trace.dt),
    ));

    let Some(onset) = trace.contact_onset() else {
        return Err(CliError::NoContact("the trace never reaches the obstacle".into()));
    };
    checks.push(Check::new(
        "contact onset",
        Status::Pass,
        format!("t = {:.6} s (sample {})", onset.time, onset.index),
    ));

    match (&from_csv, &simulated) {
        (Some(csv), Some(sim)) => checks.push(match stored_mismatch(csv, sim) {
            Ok(worst) => Check::pass_if(
                "reproduction",
                worst == 0.0,
                if worst == 0.0 {
                    "trace matches a fresh simulation bit for bit".to_string()
                } else {
                    format!("largest difference from a fresh simulation {worst:e}")
                },
            ),
            Err(msg) => Check::new("reproduction", Status::Fail, msg),
        }),
        _ => checks.push(Check::new("reproduction", Status::Skip, "needs both --config and --trace")),
    }

    if let Some(path) = inputs.report {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let report: RunReport =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let peak = impact_peak(trace).ok();
        let report_peak = report.metrics.as_ref().and_then(|m| m.peaks.first().copied());
        let onset_ok = report.contact_onset_time == Some(onset.time);
        let peak_ok = report_peak.is_none() || report_peak == peak;
        checks.push(Check::pass_if(
            "report consistency",
            report.contact && onset_ok && peak_ok,
            format!(
                "onset {:?} vs {:?}, peak {:?} vs {:?}",
                report.contact_onset_time,
                onset.time,
                report_peak,
                peak.unwrap_or(f64::NAN)
            ),
        ));
    } else {
        checks.push(Check::new("report consistency", Status::Skip, "no --report given"));
    }

    let Some(cfg) = &inputs.config else {
        checks.push(Check::new("superposition", Status::Skip, "needs --config for the controller gains"));
        checks.push(Check::new("free response", Status::Skip, "needs --config for the controller gains"));
        return Ok(checks);
    };

    let full_ff = cfg.controller.impedance_law() == Some(ImpedanceLawKind::FullFeedforward);
    match (full_ff, cfg.controller.proximity_admittance(), cfg.controller.contact_part()) {
        (true, Some(adm), Some(imp)) if matches!(cfg.controller, preimpact_core::ControllerKind::Pacic(_)) => {
            let tol = if trace.stage_forces.is_some() { SUPERPOSITION_TOL_EXACT } else { SUPERPOSITION_TOL_INTERPOLATED };
            let source = if trace.stage_forces.is_some() { "stage force log" } else { "interpolated CSV forces" };
            let residual = superposition_check(trace, adm, imp)?;
            checks.push(Check::pass_if(
                "superposition",
                residual < tol,
                format!("residual {residual:.3e} m (< {tol:e}, {source})"),
            ));
        }
        _ => checks.push(Check::new(
            "superposition",
            Status::Skip,
            "applies to the full-feedforward impedance controller only",
        )),
    }

    let omega_a = cfg.controller.proximity_admittance().map(|p| (p.omega(), p.zeta()));
    match (proximity_stage(&cfg.controller), omega_a) {
        (Some(stage), Some((w, z))) if (z - 1.0).abs() <= CRITICAL_DAMPING_TOL => {
            match free_response_deviation(trace, stage, w) {
                Some((dev, scale)) => checks.push(Check::new(
                    "free response",
                    Status::Info,
                    format!(
                        "|x_v - x_d - y(t)| <= {dev:.3e} m over 5/omega_a after contact (|y| <= {scale:.3e} m); the virtual force keeps acting after contact"
                    ),
                )),
                None => checks.push(Check::new("free response", Status::Skip, "contact state unavailable")),
            }
        }
        _ => checks.push(Check::new("free response", Status::Skip, "needs a critically damped proximity admittance")),
    }

    let mut warnings = Vec::new();
    let cond = conditions(cfg, &mut warnings);
    let detail = match (cond.smooth_condition, cond.design_omega_a_range, cond.omega_a) {
        (Some(c), Some([lo, hi]), Some(w)) => format!("{c:?}: omega_a = {w}, range [{lo}, {hi})"),
        _ => "not applicable".to_string(),
    };
    checks.push(Check::new("smooth condition", Status::Info, detail));
    Ok(checks)
}

/// Fails with [`CliError::CheckFailed`] if any check failed.
pub fn outcome(checks: &[Check]) -> Result<()> {
    let failed: Vec<&str> = checks.iter().filter(|c| c.status == Status::Fail).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(failed.join(", ")))
    }
}
