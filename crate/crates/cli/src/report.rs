//! Single-run execution and its JSON report.

use std::path::Path;

use preimpact_core::analysis::CRITICAL_DAMPING_TOL;
use preimpact_core::controllers::AdmittanceStage;
use preimpact_core::{
    check_smooth_condition, design_omega_a_range, impact_metrics, simulate, t_extremum, ContactState, ControllerKind,
    ForceSource, ImpactMetrics, ScenarioConfig, SimTrace, SmoothCondition,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::trace_io::write_trace;

pub const TRACE_FILE: &str = "trace.csv";
pub const BASELINE_TRACE_FILE: &str = "baseline_trace.csv";
pub const REPORT_FILE: &str = "report.json";

/// Design-condition verdicts for the configured gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub omega_a: Option<f64>,
    pub zeta_a: Option<f64>,
    pub omega_i: Option<f64>,
    pub zeta_i: Option<f64>,
    pub smooth_condition: Option<SmoothCondition>,
    /// `[low, high)` range of `omega_a` giving a smooth transition.
    pub design_omega_a_range: Option<[f64; 2]>,
}

/// Contact-transition analysis at the recorded contact onset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub sigma: f64,
    pub nu: f64,
    pub eta: f64,
    pub class: String,
    pub t_ex: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePaths {
    pub trace: String,
    pub baseline: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub controller: String,
    pub seed: u64,
    pub contact: bool,
    pub contact_onset_time: Option<f64>,
    pub baseline_contact_onset_time: Option<f64>,
    /// Present iff both the run and its `G_p = 0` baseline made contact.
    pub metrics: Option<ImpactMetrics>,
    pub conditions: ConditionReport,
    pub transition: Option<TransitionReport>,
    pub signal_lost: usize,
    pub warnings: Vec<String>,
    pub traces: Option<TracePaths>,
}

pub fn controller_name(c: &ControllerKind) -> &'static str {
    match c {
        ControllerKind::Pacic(_) => "pacic",
        ControllerKind::Pacac(_) => "pacac",
        ControllerKind::Chain(_) => "chain",
    }
}

/// Index of the virtual object driven by the proximity force.
pub fn proximity_stage(c: &ControllerKind) -> Option<usize> {
    match c {
        ControllerKind::Pacic(_) | ControllerKind::Pacac(_) => Some(0),
        ControllerKind::Chain(chain) => chain
            .stages
            .iter()
            .position(|s: &AdmittanceStage| s.source == ForceSource::Proximity),
    }
}

pub fn conditions(cfg: &ScenarioConfig, warnings: &mut Vec<String>) -> ConditionReport {
    let adm = cfg.controller.proximity_admittance();
    let contact = cfg.controller.contact_part();
    let mut report = ConditionReport {
        omega_a: adm.map(|p| p.omega()),
        zeta_a: adm.map(|p| p.zeta()),
        omega_i: contact.map(|p| p.omega()),
        zeta_i: contact.map(|p| p.zeta()),
        smooth_condition: None,
        design_omega_a_range: contact.map(|p| {
            let (lo, hi) = design_omega_a_range(p);
            [lo, hi]
        }),
    };
    if let (Some(a), Some(c)) = (adm, contact) {
        let verdict = check_smooth_condition(c, a.omega());
        report.smooth_condition = Some(verdict);
        if verdict != SmoothCondition::Satisfied {
            let (lo, hi) = design_omega_a_range(c);
            warnings.push(format!(
                "smooth-transition condition violated ({verdict:?}): omega_a = {} lies outside [{lo}, {hi})",
                a.omega()
            ));
        }
        if (a.zeta() - 1.0).abs() > CRITICAL_DAMPING_TOL {
            warnings.push(format!(
                "proximity admittance has zeta_a = {}; the transition analysis assumes zeta_a = 1",
                a.zeta()
            ));
        }
    } else if adm.is_none() {
        warnings.push("no admittance part takes the proximity force".into());
    }
    report
}

fn transition(cfg: &ScenarioConfig, trace: &SimTrace, warnings: &mut Vec<String>) -> Option<TransitionReport> {
    let stage = proximity_stage(&cfg.controller)?;
    let omega_a = cfg.controller.proximity_admittance()?.omega();
    let contact_part = cfg.controller.contact_part()?;
    let contact = ContactState::from_trace(trace, stage, omega_a).ok()?;
    match t_extremum(&contact, contact_part, omega_a) {
        Ok(class) => Some(TransitionReport {
            sigma: contact.sigma,
            nu: contact.nu,
            eta: contact.eta,
            class: class.name().to_string(),
            t_ex: class.t_ex(),
        }),
        Err(e) => {
            warnings.push(format!("transition class undefined: {e}"));
            None
        }
    }
}

/// Configuration of the paired run without virtual force.
pub fn baseline_config(cfg: &ScenarioConfig) -> ScenarioConfig {
    let mut base = cfg.clone();
    base.virtual_force.gp = 0.0;
    base
}

/// Builds the report from a run and its baseline.
pub fn build_report(cfg: &ScenarioConfig, trace: &SimTrace, baseline: &SimTrace) -> RunReport {
    let mut warnings = Vec::new();
    let conditions = conditions(cfg, &mut warnings);
    let onset = trace.contact_onset();
    let base_onset = baseline.contact_onset();
    let metrics = match (onset, base_onset) {
        (Some(_), Some(_)) => impact_metrics(std::slice::from_ref(trace), std::slice::from_ref(baseline)).ok(),
        (Some(_), None) => {
            warnings.push("baseline run made no contact; no reduction effect reported".into());
            None
        }
        _ => None,
    };
    let transition = onset.and_then(|_| transition(cfg, trace, &mut warnings));
    if trace.signal_lost > 0 {
        warnings.push(format!("proximity signal lost in {} control updates", trace.signal_lost));
    }
    RunReport {
        scenario: cfg.scenario.name().to_string(),
        controller: controller_name(&cfg.controller).to_string(),
        seed: cfg.seed,
        contact: onset.is_some(),
        contact_onset_time: onset.map(|o| o.time),
        baseline_contact_onset_time: base_onset.map(|o| o.time),
        metrics,
        conditions,
        transition,
        signal_lost: trace.signal_lost,
        warnings,
        traces: None,
    }
}

/// Simulates a configuration and its baseline.
pub fn simulate_pair(cfg: &ScenarioConfig) -> Result<(SimTrace, SimTrace)> {
    let trace = simulate(cfg)?;
    let baseline = if cfg.virtual_force.gp == 0.0 { trace.clone() } else { simulate(&baseline_config(cfg))? };
    Ok((trace, baseline))
}

/// Runs a scenario, writes both traces and the report into `out`.
///
/// With `require_contact`, a run without contact still writes its outputs
/// and then fails with [`CliError::NoContact`].
pub fn run(cfg: &ScenarioConfig, out: &Path, require_contact: bool) -> Result<RunReport> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out.display(), e))?;
    let (trace, baseline) = simulate_pair(cfg)?;
    let mut report = build_report(cfg, &trace, &baseline);
    write_trace(&out.join(TRACE_FILE), &trace)?;
    write_trace(&out.join(BASELINE_TRACE_FILE), &baseline)?;
    report.traces = Some(TracePaths {
        trace: TRACE_FILE.into(),
        baseline: BASELINE_TRACE_FILE.into(),
    });
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::io(REPORT_FILE, e))?;
    let path = out.join(REPORT_FILE);
    std::fs::write(&path, json + "\n").map_err(|e| CliError::io(path.display(), e))?;
    if require_contact && !report.contact {
        return Err(CliError::NoContact(format!(
            "scenario {} ended at t = {} s without contact",
            report.scenario, cfg.integrator.t_end
        )));
    }
    Ok(report)
}
