//! Obstacle kinematics, penalty contact, desired trajectories and the four
//! collision scenarios.
//!
//! Geometry is a line. The plant's contact surface sits at `x`, the
//! obstacle's at `x_obs`, and `normal = ±1` points from the plant towards the
//! obstacle, so the signed gap is `normal * (x_obs - x)`.

use serde::{Deserialize, Serialize};

use crate::controllers::DesiredState;
use crate::error::{Error, Result};

/// The four contact situations: the obstacle approaches the plant in `a` and
/// `c`, the plant approaches a fixed obstacle in `b` and `d`. `a`/`b` are the
/// mirror images of `c`/`d` (obstacle on the negative side of the plant).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    A,
    B,
    C,
    D,
}

impl ScenarioKind {
    pub fn obstacle_moves(self) -> bool {
        matches!(self, ScenarioKind::A | ScenarioKind::C)
    }

    /// Side of the plant the obstacle is on.
    pub fn normal(self) -> f64 {
        match self {
            ScenarioKind::A | ScenarioKind::B => -1.0,
            ScenarioKind::C | ScenarioKind::D => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::A => "a",
            ScenarioKind::B => "b",
            ScenarioKind::C => "c",
            ScenarioKind::D => "d",
        }
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(ScenarioKind::A),
            "b" => Ok(ScenarioKind::B),
            "c" => Ok(ScenarioKind::C),
            "d" => Ok(ScenarioKind::D),
            other => Err(Error::Config(format!("unknown scenario kind {other:?}"))),
        }
    }
}

/// Compression-only spring-damper contact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactModel {
    pub k_c: f64,
    pub c_c: f64,
}

impl Default for ContactModel {
    fn default() -> Self {
        ContactModel { k_c: 1e5, c_c: 50.0 }
    }
}

impl ContactModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_c.is_finite() && self.k_c > 0.0) {
            return Err(Error::field("contact.k_c", "must be positive"));
        }
        if !(self.c_c.is_finite() && self.c_c >= 0.0) {
            return Err(Error::field("contact.c_c", "must be non-negative"));
        }
        Ok(())
    }
}

/// Magnitude of the repulsive contact force for signed gap and gap rate.
/// Zero while separated; never adhesive.
#[inline]
pub fn contact_force(gap: f64, gap_rate: f64, model: &ContactModel) -> f64 {
    if gap > 0.0 {
        0.0
    } else {
        (model.k_c * -gap + model.c_c * -gap_rate).max(0.0)
    }
}

/// Motion law of the obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObstacleLaw {
    /// Driven at constant velocity `v0` from `x0` until first contact, then a
    /// free mass resisted only by Coulomb friction of magnitude `friction`.
    ApproachConstantVelocity {
        x0: f64,
        v0: f64,
        mass: f64,
        friction: f64,
    },
    Fixed { position: f64 },
}

impl ObstacleLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ObstacleLaw::ApproachConstantVelocity { x0, v0, mass, friction } => {
                if !x0.is_finite() {
                    return Err(Error::field("obstacle.x0", "must be finite"));
                }
                if !v0.is_finite() {
                    return Err(Error::field("obstacle.v0", "must be finite"));
                }
                if !(mass.is_finite() && mass > 0.0) {
                    return Err(Error::field("obstacle.mass", "must be positive"));
                }
                if !(friction.is_finite() && friction >= 0.0) {
                    return Err(Error::field("obstacle.friction", "must be non-negative"));
                }
            }
            ObstacleLaw::Fixed { position } => {
                if !position.is_finite() {
                    return Err(Error::field("obstacle.position", "must be finite"));
                }
            }
        }
        Ok(())
    }

    /// Obstacle position and velocity at `t = 0`.
    pub fn initial(&self) -> (f64, f64) {
        match *self {
            ObstacleLaw::ApproachConstantVelocity { x0, v0, .. } => (x0, v0),
            ObstacleLaw::Fixed { position } => (position, 0.0),
        }
    }
}

/// Phase of an obstacle following [`ObstacleLaw::ApproachConstantVelocity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObstaclePhase {
    Approach,
    Free,
}

/// Below this speed a free obstacle is considered at rest for friction.
pub const STICTION_SPEED: f64 = 1e-9;

/// Acceleration of the obstacle given the force `push` applied to it by the
/// contact (signed, plant coordinates).
pub fn obstacle_accel(law: &ObstacleLaw, phase: ObstaclePhase, v: f64, push: f64) -> f64 {
    match (*law, phase) {
        (ObstacleLaw::Fixed { .. }, _) | (ObstacleLaw::ApproachConstantVelocity { .. }, ObstaclePhase::Approach) => 0.0,
        (ObstacleLaw::ApproachConstantVelocity { mass, friction, .. }, ObstaclePhase::Free) => {
            if v.abs() > STICTION_SPEED {
                (push - friction * v.signum()) / mass
            } else if push.abs() <= friction {
                0.0
            } else {
                (push - friction * push.signum()) / mass
            }
        }
    }
}

/// Advances the obstacle one step by explicit integration of
/// [`obstacle_accel`] under a constant push. Used where the obstacle is
/// simulated on its own; the closed-loop simulator integrates it together
/// with the plant.
pub fn obstacle_step(law: &ObstacleLaw, phase: ObstaclePhase, push: f64, x: f64, v: f64, dt: f64) -> (f64, f64) {
    let a = obstacle_accel(law, phase, v, push);
    let mut v1 = v + a * dt;
    if phase == ObstaclePhase::Free && v != 0.0 && v1 * v < 0.0 && push.abs() <= friction_of(law) {
        v1 = 0.0;
    }
    let x1 = x + 0.5 * (v + v1) * dt;
    (x1, v1)
}

fn friction_of(law: &ObstacleLaw) -> f64 {
    match *law {
        ObstacleLaw::ApproachConstantVelocity { friction, .. } => friction,
        ObstacleLaw::Fixed { .. } => 0.0,
    }
}

/// Minimum-jerk point-to-point motion starting at `t0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinJerkSpec {
    pub x0: f64,
    pub xf: f64,
    pub duration: f64,
    pub t0: f64,
}

impl MinJerkSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::field("trajectory.duration", "must be positive"));
        }
        if !(self.x0.is_finite() && self.xf.is_finite() && self.t0.is_finite()) {
            return Err(Error::field("trajectory", "x0, xf and t0 must be finite"));
        }
        Ok(())
    }
}

/// Quintic `10 s^3 - 15 s^4 + 6 s^5` profile, clamped outside `[t0, t0 + T]`.
pub fn min_jerk(spec: &MinJerkSpec, t: f64) -> DesiredState {
    let tau = ((t - spec.t0) / spec.duration).clamp(0.0, 1.0);
    let dx = spec.xf - spec.x0;
    let (t2, t3) = (tau * tau, tau * tau * tau);
    let s = t3 * (10.0 - 15.0 * tau + 6.0 * t2);
    let ds = 30.0 * t2 * (1.0 - tau) * (1.0 - tau);
    let dds = 60.0 * tau * (1.0 - tau) * (1.0 - 2.0 * tau);
    DesiredState {
        x: spec.x0 + dx * s,
        v: dx * ds / spec.duration,
        a: dx * dds / (spec.duration * spec.duration),
    }
}

/// Desired plant trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Trajectory {
    Hold { position: f64 },
    MinJerk {
        x0: f64,
        xf: f64,
        duration: f64,
        t0: f64,
    },
}

impl Trajectory {
    pub fn from_min_jerk(spec: MinJerkSpec) -> Self {
        Trajectory::MinJerk {
            x0: spec.x0,
            xf: spec.xf,
            duration: spec.duration,
            t0: spec.t0,
        }
    }

    pub fn min_jerk_spec(&self) -> Option<MinJerkSpec> {
        match *self {
            Trajectory::MinJerk { x0, xf, duration, t0 } => Some(MinJerkSpec { x0, xf, duration, t0 }),
            Trajectory::Hold { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Trajectory::Hold { position } if !position.is_finite() => {
                Err(Error::field("trajectory.position", "must be finite"))
            }
            Trajectory::Hold { .. } => Ok(()),
            Trajectory::MinJerk { .. } => self.min_jerk_spec().map_or(Ok(()), |s| s.validate()),
        }
    }

    pub fn sample(&self, t: f64) -> DesiredState {
        match *self {
            Trajectory::Hold { position } => DesiredState { x: position, v: 0.0, a: 0.0 },
            Trajectory::MinJerk { x0, xf, duration, t0 } => min_jerk(&MinJerkSpec { x0, xf, duration, t0 }, t),
        }
    }
}
