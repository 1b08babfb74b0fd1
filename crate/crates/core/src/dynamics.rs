//! Fixed-step integration of the coupled plant, virtual-object and obstacle
//! dynamics, the simulation trace, and contact-onset detection.

use serde::{Deserialize, Serialize};

use crate::controllers::{DesiredState, VirtualObjectState};
use crate::error::{Error, Result};
use crate::serde_util::zero_is_none;

/// Position, velocity and acceleration of the plant mass.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PlantState {
    pub x: f64,
    pub v: f64,
    pub a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Rk4,
    SemiImplicitEuler,
}

impl Method {
    /// Number of derivative evaluations per step.
    pub fn stages(self) -> usize {
        match self {
            Method::Rk4 => 4,
            Method::SemiImplicitEuler => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub method: Method,
    pub t_end: f64,
    /// Rate of the sampled controller. `None` (written as `0` in config
    /// files) means the control law is evaluated at every integrator stage.
    #[serde(with = "zero_is_none")]
    pub control_rate_hz: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: 1e-4,
            method: Method::Rk4,
            t_end: 1.0,
            control_rate_hz: None,
        }
    }
}

fn as_whole(ratio: f64) -> Option<usize> {
    let n = ratio.round();
    if n >= 1.0 && (ratio - n).abs() <= 1e-9 * n.max(1.0) && n < usize::MAX as f64 {
        Some(n as usize)
    } else {
        None
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::field("integrator.dt", "must be positive"));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return Err(Error::field("integrator.t_end", "must be at least dt"));
        }
        if as_whole(self.t_end / self.dt).is_none() {
            return Err(Error::field(
                "integrator.t_end",
                format!("t_end / dt = {} is not a whole step count", self.t_end / self.dt),
            ));
        }
        if let Some(rate) = self.control_rate_hz {
            if !(rate.is_finite() && rate > 0.0) {
                return Err(Error::field("integrator.control_rate_hz", "must be positive"));
            }
            if as_whole(1.0 / (rate * self.dt)).is_none() {
                return Err(Error::field(
                    "integrator.control_rate_hz",
                    "control period must be a whole multiple of dt",
                ));
            }
        }
        Ok(())
    }

    /// Number of integration steps covering `[0, t_end]`.
    pub fn steps(&self) -> usize {
        as_whole(self.t_end / self.dt).unwrap_or(0)
    }

    /// Integration steps per control period (1 in continuous mode).
    pub fn hold_steps(&self) -> usize {
        self.control_rate_hz
            .and_then(|r| as_whole(1.0 / (r * self.dt)))
            .unwrap_or(1)
    }

    /// Sample rate seen by anything updated once per control period.
    pub fn control_sample_hz(&self) -> f64 {
        1.0 / (self.dt * self.hold_steps() as f64)
    }
}

/// Fixed-step integrator with reusable scratch buffers.
///
/// For [`Method::SemiImplicitEuler`] the state must be laid out as
/// `(position, velocity)` pairs: `[q0, q0_dot, q1, q1_dot, ...]`.
#[derive(Debug, Clone)]
pub struct Integrator {
    method: Method,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Integrator {
    pub fn new(method: Method, dim: usize) -> Self {
        Integrator {
            method,
            k: std::array::from_fn(|_| vec![0.0; dim]),
            tmp: vec![0.0; dim],
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Advances `state` from `t` to `t + dt` in place. `step` is only used to
    /// label an [`Error::IntegrationFault`].
    pub fn step<F>(&mut self, t: f64, state: &mut [f64], dt: f64, step: usize, mut f: F) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = state.len();
        debug_assert_eq!(n, self.tmp.len());
        let check = |d: &[f64], stage: usize| -> Result<()> {
            match d.iter().position(|v| !v.is_finite()) {
                None => Ok(()),
                Some(i) => Err(Error::IntegrationFault {
                    step,
                    detail: format!("non-finite derivative component {i} at stage {stage}"),
                }),
            }
        };
        match self.method {
            Method::Rk4 => {
                let [k1, k2, k3, k4] = &mut self.k;
                f(t, state, k1);
                check(k1, 1)?;
                for i in 0..n {
                    self.tmp[i] = state[i] + 0.5 * dt * k1[i];
                }
                f(t + 0.5 * dt, &self.tmp, k2);
                check(k2, 2)?;
                for i in 0..n {
                    self.tmp[i] = state[i] + 0.5 * dt * k2[i];
                }
                f(t + 0.5 * dt, &self.tmp, k3);
                check(k3, 3)?;
                for i in 0..n {
                    self.tmp[i] = state[i] + dt * k3[i];
                }
                f(t + dt, &self.tmp, k4);
                check(k4, 4)?;
                for i in 0..n {
                    state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
            Method::SemiImplicitEuler => {
                debug_assert!(n.is_multiple_of(2), "semi-implicit Euler needs (q, q_dot) pairs");
                let k1 = &mut self.k[0];
                f(t, state, k1);
                check(k1, 1)?;
                for i in (0..n).step_by(2) {
                    state[i + 1] += dt * k1[i + 1];
                    state[i] += dt * (k1[i] + dt * k1[i + 1]);
                }
            }
        }
        Ok(())
    }
}

/// One-shot convenience wrapper around [`Integrator::step`].
pub fn integrate_step<F>(method: Method, f: F, t: f64, state: &[f64], dt: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if !(dt > 0.0) {
        return Err(Error::Precondition(format!("dt must be positive, got {dt}")));
    }
    let mut out = state.to_vec();
    Integrator::new(method, state.len()).step(t, &mut out, dt, 0, f)?;
    Ok(out)
}

/// Position and velocity of the obstacle surface.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ObstacleSample {
    pub x: f64,
    pub v: f64,
}

/// Full time series of a simulation run on a uniform grid.
///
/// Forces are stored as in the trace file: `f_p` is the output of the
/// virtual force generator (positive while the gap closes) and `f_c` is the
/// magnitude of the compression-only contact force. Their direction in plant
/// coordinates is `-normal`, where `normal` points from the plant towards the
/// obstacle.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimTrace {
    pub dt: f64,
    pub normal: f64,
    pub t: Vec<f64>,
    pub desired: Vec<DesiredState>,
    /// `stages[s][k]`: virtual object of admittance stage `s` at sample `k`.
    pub stages: Vec<Vec<VirtualObjectState>>,
    pub plant: Vec<PlantState>,
    pub obstacle: Vec<ObstacleSample>,
    pub gap: Vec<f64>,
    pub xi: Vec<f64>,
    pub f_p: Vec<f64>,
    pub f_c: Vec<f64>,
    pub u: Vec<f64>,
    /// Forces seen by each derivative evaluation of every step. Only present
    /// for traces produced in memory.
    pub stage_forces: Option<StageForceLog>,
    /// Control updates where the sensor output was not positive.
    pub signal_lost: usize,
}

/// Forces seen by each integrator stage, in the same convention as the
/// trace columns. Entry `k` covers the step from sample `k` to `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StageForceLog {
    pub method: Method,
    pub f_p: Vec<[f64; 4]>,
    pub f_c: Vec<[f64; 4]>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    /// Checks that every series has the same length and the grid is uniform.
    pub fn validate(&self) -> Result<()> {
        let n = self.t.len();
        let lens = [
            self.desired.len(),
            self.plant.len(),
            self.obstacle.len(),
            self.gap.len(),
            self.xi.len(),
            self.f_p.len(),
            self.f_c.len(),
            self.u.len(),
        ];
        if lens.iter().any(|&l| l != n) || self.stages.iter().any(|s| s.len() != n) {
            return Err(Error::Input("trace series have unequal lengths".into()));
        }
        for w in self.t.windows(2) {
            let step = w[1] - w[0];
            if !(step > 0.0) || (step - self.dt).abs() > 1e-9 * self.dt.max(1.0) {
                return Err(Error::Input(format!(
                    "time grid is not uniform with step {} (found {step})",
                    self.dt
                )));
            }
        }
        Ok(())
    }

    /// Contact onset detected on the recorded gap.
    pub fn contact_onset(&self) -> Option<ContactOnset> {
        detect_contact_onset(&self.t, &self.gap)
    }

    /// Largest contact force magnitude over the trace.
    pub fn peak_contact_force(&self) -> f64 {
        self.f_c.iter().copied().fold(0.0, f64::max)
    }

    /// Signed force applied to the plant by the contact at sample `k`.
    pub fn applied_contact(&self, k: usize) -> f64 {
        -self.normal * self.f_c[k]
    }

    /// Signed virtual force acting on the first admittance stage at sample `k`.
    pub fn applied_virtual(&self, k: usize) -> f64 {
        -self.normal * self.f_p[k]
    }
}

/// First transition of the gap from positive to non-positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactOnset {
    /// First sample with `gap <= 0`.
    pub index: usize,
    /// Linearly interpolated zero-crossing time.
    pub time: f64,
}

/// Finds the first positive-to-non-positive crossing of `gap` and refines its
/// time by linear interpolation. A series that starts in contact has no
/// crossing until it separates and re-enters.
pub fn detect_contact_onset(t: &[f64], gap: &[f64]) -> Option<ContactOnset> {
    let n = t.len().min(gap.len());
    (1..n).find_map(|k| {
        let (g0, g1) = (gap[k - 1], gap[k]);
        if g0 > 0.0 && g1 <= 0.0 {
            let time = if g1 == 0.0 {
                t[k]
            } else {
                t[k - 1] + (t[k] - t[k - 1]) * g0 / (g0 - g1)
            };
            Some(ContactOnset { index: k, time })
        } else {
            None
        }
    })
}
