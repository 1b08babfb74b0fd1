//! Closed-form contact-transition results, parameter conditions for a smooth
//! transition, the superposition check and impact metrics.
//!
//! After contact the virtual force vanishes, so `y = x_v - x_d` obeys a free
//! critically damped oscillator `y'' + 2 w_a y' + w_a^2 y = 0` with
//! `y(0) = sigma`, `y'(0) = nu`. Its solution feeds the impedance part and
//! produces the transition term `f_tra` of the contact force.

use serde::{Deserialize, Serialize};

use crate::controllers::{ImpedanceLawKind, SecondOrderParams};
use crate::dynamics::{Integrator, Method, SimTrace};
use crate::error::{Error, Result};

/// Tolerance on `zeta_a = 1` for the closed-form results.
pub const CRITICAL_DAMPING_TOL: f64 = 1e-9;

/// An admittance part known to be critically damped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalAdmittance {
    omega: f64,
}

impl CriticalAdmittance {
    /// Rejects parameters with `zeta != 1`.
    pub fn new(params: &SecondOrderParams) -> Result<Self> {
        let zeta = params.zeta();
        if (zeta - 1.0).abs() > CRITICAL_DAMPING_TOL {
            return Err(Error::Precondition(format!(
                "closed-form transition results need a critically damped admittance part, got zeta_a = {zeta}"
            )));
        }
        Ok(CriticalAdmittance { omega: params.omega() })
    }

    pub fn from_omega(omega: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::Domain(format!("omega_a must be positive, got {omega}")));
        }
        Ok(CriticalAdmittance { omega })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
}

/// State of the admittance part and plant at the instant of contact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactState {
    /// `x_v(0) - x_d(0)`.
    pub sigma: f64,
    /// `v_v(0) - v_d(0)`.
    pub nu: f64,
    /// `nu + omega_a * sigma`.
    pub eta: f64,
    pub x_c: f64,
    pub v_c: f64,
    pub a_c: f64,
}

impl ContactState {
    pub fn new(sigma: f64, nu: f64, omega_a: f64) -> Self {
        ContactState {
            sigma,
            nu,
            eta: nu + omega_a * sigma,
            x_c: 0.0,
            v_c: 0.0,
            a_c: 0.0,
        }
    }

    pub fn with_plant(mut self, x_c: f64, v_c: f64, a_c: f64) -> Self {
        self.x_c = x_c;
        self.v_c = v_c;
        self.a_c = a_c;
        self
    }

    /// Sign-flipped copy (the mirrored contact situation).
    pub fn mirrored(&self) -> Self {
        ContactState {
            sigma: -self.sigma,
            nu: -self.nu,
            eta: -self.eta,
            x_c: -self.x_c,
            v_c: -self.v_c,
            a_c: -self.a_c,
        }
    }

    /// Extracts the contact snapshot from a trace: offsets of admittance
    /// stage `stage` from the desired state and the plant state, linearly
    /// interpolated to the contact-onset time. `a_c` is the plant
    /// acceleration at the first sample in contact, so it includes the
    /// contact force.
    pub fn from_trace(trace: &SimTrace, stage: usize, omega_a: f64) -> Result<Self> {
        let onset = trace.contact_onset().ok_or(Error::NoContact)?;
        let series = trace
            .stages
            .get(stage)
            .ok_or_else(|| Error::Input(format!("trace has no admittance stage {stage}")))?;
        let k = onset.index;
        let w = ((onset.time - trace.t[k - 1]) / trace.dt).clamp(0.0, 1.0);
        let lerp = |a: f64, b: f64| a + w * (b - a);
        let (d0, d1) = (trace.desired[k - 1], trace.desired[k]);
        let (s0, s1) = (series[k - 1], series[k]);
        let (p0, p1) = (trace.plant[k - 1], trace.plant[k]);
        let sigma = lerp(s0.x - d0.x, s1.x - d1.x);
        let nu = lerp(s0.v - d0.v, s1.v - d1.v);
        Ok(ContactState::new(sigma, nu, omega_a).with_plant(lerp(p0.x, p1.x), lerp(p0.v, p1.v), p1.a))
    }
}

/// Free response `(y, y', y'')` of the critically damped admittance part `t`
/// seconds after contact.
pub fn closed_form_y(t: f64, contact: &ContactState, adm: &CriticalAdmittance) -> Result<(f64, f64, f64)> {
    if !(t >= 0.0) {
        return Err(Error::Precondition(format!("time since contact must be non-negative, got {t}")));
    }
    let w = adm.omega;
    let (sigma, nu) = (contact.sigma, contact.nu);
    let eta = nu + w * sigma;
    let e = (-w * t).exp();
    Ok((
        (eta * t + sigma) * e,
        (-w * eta * t + nu) * e,
        (w * w * eta * t - w * (eta + nu)) * e,
    ))
}

/// Transition term of the contact force,
/// `exp(-w_a t) [(D_i w_a - K_i) eta t - D_i nu - K_i sigma]`.
pub fn f_tra(t: f64, contact: &ContactState, imp: &SecondOrderParams, omega_a: f64) -> f64 {
    let (d, k) = (imp.damping(), imp.stiffness());
    (-omega_a * t).exp() * ((d * omega_a - k) * contact.eta * t - d * contact.nu - k * contact.sigma)
}

/// Shape of `f_tra` after contact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum TransitionClass {
    /// `D_i w_a > K_i`: a local maximum at `t_ex > 0`.
    LocalMaximum { t_ex: f64 },
    /// `D_i w_a < K_i` and `t_ex < 0`: monotone after contact.
    NoExtremumSmooth { t_ex: f64 },
    /// `D_i w_a < K_i` and `t_ex >= 0`: a local minimum after contact.
    LocalMinimumPossible { t_ex: f64 },
    /// `D_i w_a = K_i`: `f_tra` is a pure decaying exponential.
    TrivialTexInfinite,
}

impl TransitionClass {
    pub fn t_ex(&self) -> Option<f64> {
        match *self {
            TransitionClass::LocalMaximum { t_ex }
            | TransitionClass::NoExtremumSmooth { t_ex }
            | TransitionClass::LocalMinimumPossible { t_ex } => Some(t_ex),
            TransitionClass::TrivialTexInfinite => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TransitionClass::LocalMaximum { .. } => "local_maximum",
            TransitionClass::NoExtremumSmooth { .. } => "no_extremum_smooth",
            TransitionClass::LocalMinimumPossible { .. } => "local_minimum_possible",
            TransitionClass::TrivialTexInfinite => "trivial_t_ex_infinite",
        }
    }
}

/// Classifies the stationary point of `f_tra`,
/// `t_ex = 1/w_a + (D_i nu + K_i sigma) / ((D_i w_a - K_i) eta)`.
///
/// A contact state with `eta < 0` is mirrored first, so both sides of the
/// plant are handled alike.
pub fn t_extremum(contact: &ContactState, imp: &SecondOrderParams, omega_a: f64) -> Result<TransitionClass> {
    if contact.eta == 0.0 {
        return Err(Error::Degenerate("eta = 0: the admittance part starts at rest".into()));
    }
    let c = if contact.eta < 0.0 { contact.mirrored() } else { *contact };
    let (d, k) = (imp.damping(), imp.stiffness());
    let slope = d * omega_a - k;
    if slope == 0.0 {
        return Ok(TransitionClass::TrivialTexInfinite);
    }
    let t_ex = 1.0 / omega_a + (d * c.nu + k * c.sigma) / (slope * c.eta);
    Ok(if slope > 0.0 {
        TransitionClass::LocalMaximum { t_ex }
    } else if t_ex < 0.0 {
        TransitionClass::NoExtremumSmooth { t_ex }
    } else {
        TransitionClass::LocalMinimumPossible { t_ex }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothCondition {
    Satisfied,
    /// `w_i <= 2 zeta_i w_a`: a local maximum is possible.
    ViolatedLow,
    /// `w_i > 4 zeta_i w_a`: outside the conservative bound.
    ViolatedHigh,
}

/// Checks `2 zeta_i w_a < w_i <= 4 zeta_i w_a`, evaluated in the equivalent
/// form `D_i w_a < K_i <= 2 D_i w_a`.
pub fn check_smooth_condition(imp: &SecondOrderParams, omega_a: f64) -> SmoothCondition {
    let dw = imp.damping() * omega_a;
    let k = imp.stiffness();
    if k <= dw {
        SmoothCondition::ViolatedLow
    } else if k > 2.0 * dw {
        SmoothCondition::ViolatedHigh
    } else {
        SmoothCondition::Satisfied
    }
}

/// Range `[w_i / (4 zeta_i), w_i / (2 zeta_i))` of admittance natural
/// frequencies giving a smooth transition, i.e. `[K_i / (2 D_i), K_i / D_i)`.
pub fn design_omega_a_range(imp: &SecondOrderParams) -> (f64, f64) {
    let ratio = imp.stiffness() / imp.damping();
    (0.5 * ratio, ratio)
}

/// Predicted contact force at the instant of contact.
pub fn initial_contact_force(
    kind: ImpedanceLawKind,
    contact: &ContactState,
    imp: &SecondOrderParams,
    m: f64,
    a_d0: f64,
    omega_a: f64,
) -> f64 {
    match kind {
        ImpedanceLawKind::FullFeedforward => {
            imp.mass() * (contact.a_c - a_d0) + imp.mass() * omega_a * (contact.eta + contact.nu)
        }
        ImpedanceLawKind::NoFeedforward => imp.mass() * contact.a_c,
        ImpedanceLawKind::MiEqualsM => m * contact.a_c,
    }
}

/// Response of `M q'' + D q' + K q = f` from rest, integrated with the same
/// method and per-stage inputs the simulator used.
fn replay_second_order(params: &SecondOrderParams, method: Method, dt: f64, forces: &[[f64; 4]]) -> Result<Vec<f64>> {
    let (m, d, k) = (params.mass(), params.damping(), params.stiffness());
    let mut state = [0.0; 2];
    let mut integ = Integrator::new(method, 2);
    let mut out = Vec::with_capacity(forces.len() + 1);
    out.push(0.0);
    for (step, f) in forces.iter().enumerate() {
        let mut call = 0;
        integ.step(step as f64 * dt, &mut state, dt, step, |_, s, ds| {
            ds[0] = s[1];
            ds[1] = (f[call.min(3)] - d * s[1] - k * s[0]) / m;
            call += 1;
        })?;
        out.push(state[0]);
    }
    Ok(out)
}

/// Per-stage inputs rebuilt from the sampled series by cubic (Catmull-Rom)
/// interpolation, for traces read back without a stage log.
fn interpolated_stage_inputs(series: &[f64]) -> Vec<[f64; 4]> {
    let n = series.len();
    let at = |i: isize| series[i.clamp(0, n as isize - 1) as usize];
    (0..n.saturating_sub(1))
        .map(|k| {
            let k = k as isize;
            let (p0, p1, p2, p3) = (at(k - 1), at(k), at(k + 1), at(k + 2));
            let mid = (-p0 + 9.0 * p1 + 9.0 * p2 - p3) / 16.0;
            [p1, mid, mid, p2]
        })
        .collect()
}

/// Maximum of `|x - x_d - r_p - r_c|` where `r_p` is the recorded virtual
/// force filtered through the admittance map and `r_c` the recorded contact
/// force filtered through the impedance map, both from rest.
///
/// For a trace produced with the full-feedforward law and an exact plant
/// model the residual is at round-off level.
pub fn superposition_check(trace: &SimTrace, adm: &SecondOrderParams, imp: &SecondOrderParams) -> Result<f64> {
    trace.validate()?;
    if trace.len() < 2 {
        return Err(Error::Input("trace needs at least two samples".into()));
    }
    let sign = -trace.normal;
    let (method, fp, fc) = match &trace.stage_forces {
        Some(log) => {
            if log.f_p.len() + 1 != trace.len() || log.f_c.len() + 1 != trace.len() {
                return Err(Error::Input("stage force log does not match the trace grid".into()));
            }
            (log.method, log.f_p.clone(), log.f_c.clone())
        }
        None => {
            let fp: Vec<f64> = trace.f_p.clone();
            let fc: Vec<f64> = trace.f_c.clone();
            (Method::Rk4, interpolated_stage_inputs(&fp), interpolated_stage_inputs(&fc))
        }
    };
    let scale = |v: Vec<[f64; 4]>| -> Vec<[f64; 4]> { v.into_iter().map(|f| f.map(|x| sign * x)).collect() };
    let r_p = replay_second_order(adm, method, trace.dt, &scale(fp))?;
    let r_c = replay_second_order(imp, method, trace.dt, &scale(fc))?;
    let x0 = trace.plant[0].x - trace.desired[0].x;
    Ok((0..trace.len())
        .map(|k| (trace.plant[k].x - trace.desired[k].x - x0 - r_p[k] - r_c[k]).abs())
        .fold(0.0, f64::max))
}

/// `100 * (baseline_mean - case_mean) / baseline_mean`.
pub fn reduction_effect(baseline_mean: f64, case_mean: f64) -> f64 {
    100.0 * (baseline_mean - case_mean) / baseline_mean
}

/// Peak impact forces of a set of runs and their reduction against a
/// baseline set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactMetrics {
    pub peaks: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation of the peaks.
    pub sd: f64,
    pub baseline_mean: f64,
    /// Reduction effect in percent.
    pub reduction_percent: f64,
}

impl ImpactMetrics {
    pub fn from_peaks(peaks: Vec<f64>, baseline_mean: f64) -> Result<Self> {
        if peaks.is_empty() {
            return Err(Error::Input("no peak forces".into()));
        }
        let (mean, sd) = mean_sd(&peaks);
        Ok(ImpactMetrics {
            peaks,
            mean,
            sd,
            baseline_mean,
            reduction_percent: reduction_effect(baseline_mean, mean),
        })
    }
}

/// Mean and population standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Largest contact force of a trace; fails if the trace never makes contact.
pub fn impact_peak(trace: &SimTrace) -> Result<f64> {
    if trace.contact_onset().is_none() && !trace.f_c.iter().any(|&f| f > 0.0) {
        return Err(Error::NoContact);
    }
    Ok(trace.peak_contact_force())
}

/// Peak forces of `traces` and their reduction effect relative to the mean
/// peak of `baselines`.
pub fn impact_metrics(traces: &[SimTrace], baselines: &[SimTrace]) -> Result<ImpactMetrics> {
    if traces.is_empty() || baselines.is_empty() {
        return Err(Error::Input("impact metrics need at least one case and one baseline trace".into()));
    }
    let peaks = traces.iter().map(impact_peak).collect::<Result<Vec<_>>>()?;
    let base = baselines.iter().map(impact_peak).collect::<Result<Vec<_>>>()?;
    ImpactMetrics::from_peaks(peaks, mean_sd(&base).0)
}
