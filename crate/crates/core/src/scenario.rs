//! Complete run configuration and the built-in collision scenarios.

use serde::{Deserialize, Serialize};

use crate::controllers::{ControllerKind, ImpedanceLawKind, PacicConfig, SecondOrderParams};
use crate::dynamics::IntegratorConfig;
use crate::environment::{ContactModel, MinJerkSpec, ObstacleLaw, ScenarioKind, Trajectory};
use crate::error::{Error, Result};
use crate::sensing::{FilterConfig, SensorParams, VirtualForceGain};

/// Plant mass used throughout the built-in scenarios (kg).
pub const DEFAULT_PLANT_MASS: f64 = 0.5;
/// Default obstacle approach speed for scenarios `a` and `c` (m/s).
pub const DEFAULT_APPROACH_SPEED: f64 = 0.3;
/// Default initial gap for scenarios `a` and `c` (m).
pub const DEFAULT_INITIAL_GAP: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub mass: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        PlantConfig { mass: DEFAULT_PLANT_MASS }
    }
}

/// Everything needed to reproduce one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub seed: u64,
    pub plant: PlantConfig,
    pub controller: ControllerKind,
    pub virtual_force: VirtualForceGain,
    pub sensor: SensorParams,
    pub filter: FilterConfig,
    pub contact: ContactModel,
    pub obstacle: ObstacleLaw,
    pub trajectory: Trajectory,
    pub integrator: IntegratorConfig,
}

impl ScenarioConfig {
    /// Direction from the plant towards the obstacle.
    pub fn normal(&self) -> f64 {
        self.scenario.normal()
    }

    /// Checks every field and the cross-field constraints.
    pub fn validate(&self) -> Result<()> {
        if !(self.plant.mass.is_finite() && self.plant.mass > 0.0) {
            return Err(Error::field("plant.mass", "must be positive"));
        }
        self.integrator.validate()?;
        self.controller.validate(self.plant.mass)?;
        self.virtual_force.validate()?;
        self.sensor.validate()?;
        self.filter.validate(self.integrator.control_sample_hz())?;
        self.contact.validate()?;
        self.obstacle.validate()?;
        self.trajectory.validate()?;

        let moving = matches!(self.obstacle, ObstacleLaw::ApproachConstantVelocity { .. });
        if moving != self.scenario.obstacle_moves() {
            return Err(Error::field(
                "obstacle.kind",
                format!(
                    "scenario {} needs {} obstacle",
                    self.scenario.name(),
                    if self.scenario.obstacle_moves() { "an approaching" } else { "a fixed" }
                ),
            ));
        }
        let start = self.trajectory.sample(0.0);
        let (x_obs, v_obs) = self.obstacle.initial();
        let normal = self.normal();
        if normal * (x_obs - start.x) <= 0.0 {
            return Err(Error::field(
                "obstacle",
                format!(
                    "obstacle must start on the {} side of the plant with a positive gap",
                    if normal > 0.0 { "positive" } else { "negative" }
                ),
            ));
        }
        if moving && normal * v_obs >= 0.0 {
            return Err(Error::field("obstacle.v0", "obstacle must move towards the plant"));
        }
        Ok(())
    }
}

/// Adjustments accepted by [`build_scenario`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScenarioOverrides {
    /// Signed obstacle velocity during approach (scenarios `a`, `c`).
    pub approach_velocity: Option<f64>,
    /// Initial distance between plant and obstacle (scenarios `a`, `c`).
    pub initial_gap: Option<f64>,
    /// Fixed obstacle position (scenarios `b`, `d`).
    pub obstacle_position: Option<f64>,
    /// Minimum-jerk path of the plant (scenarios `b`, `d`).
    pub path: Option<MinJerkSpec>,
}

/// PACIC with the `M_i = m` impedance law and the reference gains:
/// `M_a = 1, omega_a = 5, zeta_a = 1`; `M_i = m = 0.5, omega_i = 15, zeta_i = 1`.
pub fn reference_pacic(law: ImpedanceLawKind) -> PacicConfig {
    PacicConfig {
        law,
        admittance: SecondOrderParams::from_natural(1.0, 5.0, 1.0).expect("positive constants"),
        impedance: SecondOrderParams::from_natural(DEFAULT_PLANT_MASS, 15.0, 1.0).expect("positive constants"),
    }
}

/// Returns the fully populated configuration for one of the four scenarios.
///
/// In `a`/`c` the plant holds `x_d = 0` while the obstacle approaches at
/// constant speed and becomes a free mass at contact. In `b`/`d` the plant
/// follows a minimum-jerk path into a fixed obstacle placed strictly inside
/// the path.
pub fn build_scenario(kind: ScenarioKind, overrides: &ScenarioOverrides) -> Result<ScenarioConfig> {
    let normal = kind.normal();
    let (trajectory, obstacle, t_end) = if kind.obstacle_moves() {
        if overrides.obstacle_position.is_some() || overrides.path.is_some() {
            return Err(Error::Config(format!(
                "scenario {} has an approaching obstacle; obstacle_position and path apply to b and d",
                kind.name()
            )));
        }
        let v0 = overrides.approach_velocity.unwrap_or(-normal * DEFAULT_APPROACH_SPEED);
        if !v0.is_finite() || normal * v0 >= 0.0 {
            return Err(Error::Config(format!(
                "approach velocity {v0} does not move the obstacle towards the plant in scenario {}",
                kind.name()
            )));
        }
        let gap = overrides.initial_gap.unwrap_or(DEFAULT_INITIAL_GAP);
        if !(gap.is_finite() && gap > 0.0) {
            return Err(Error::Config(format!("initial gap must be positive, got {gap}")));
        }
        let obstacle = ObstacleLaw::ApproachConstantVelocity {
            x0: normal * gap,
            v0,
            mass: 0.5,
            friction: 0.0,
        };
        let t_end = ((gap / v0.abs() + 1.5) * 10.0).ceil() / 10.0;
        (Trajectory::Hold { position: 0.0 }, obstacle, t_end)
    } else {
        if overrides.approach_velocity.is_some() || overrides.initial_gap.is_some() {
            return Err(Error::Config(format!(
                "scenario {} has a fixed obstacle; approach_velocity and initial_gap apply to a and c",
                kind.name()
            )));
        }
        let path = overrides.path.unwrap_or(MinJerkSpec {
            x0: 0.0,
            xf: normal * 0.2,
            duration: 1.0,
            t0: 0.2,
        });
        path.validate()?;
        if normal * (path.xf - path.x0) <= 0.0 {
            return Err(Error::Config(format!(
                "path in scenario {} must move towards the {} side",
                kind.name(),
                if normal > 0.0 { "positive" } else { "negative" }
            )));
        }
        let position = overrides.obstacle_position.unwrap_or(path.x0 + 0.75 * (path.xf - path.x0));
        let inside = normal * (position - path.x0) > 0.0 && normal * (path.xf - position) > 0.0;
        if !inside {
            return Err(Error::Config(format!(
                "obstacle position {position} is not strictly inside the path from {} to {}",
                path.x0, path.xf
            )));
        }
        // The virtual force slows the final approach considerably.
        let t_end = ((path.t0 + path.duration + 4.0) * 10.0).ceil() / 10.0;
        (Trajectory::from_min_jerk(path), ObstacleLaw::Fixed { position }, t_end)
    };

    let cfg = ScenarioConfig {
        scenario: kind,
        seed: 0,
        plant: PlantConfig::default(),
        controller: ControllerKind::Pacic(reference_pacic(ImpedanceLawKind::MiEqualsM)),
        virtual_force: VirtualForceGain::default(),
        sensor: SensorParams::default(),
        filter: FilterConfig::default(),
        contact: ContactModel::default(),
        obstacle,
        trajectory,
        integrator: IntegratorConfig { t_end, ..IntegratorConfig::default() },
    };
    cfg.validate()?;
    Ok(cfg)
}
