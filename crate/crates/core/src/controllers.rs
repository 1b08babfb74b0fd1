//! Admittance and impedance control parts and their serial compositions.
//!
//! An admittance part integrates a virtual object driven by a force and
//! referenced to an upstream state. The terminal part makes the plant follow
//! the last virtual object, either through an impedance law (force-controlled
//! plant) or a computed-torque PD tracker (position/velocity-controlled plant).
//!
//! * PACIC: proximity-driven admittance, then impedance.
//! * PACAC: proximity-driven admittance, contact-driven admittance, then PD.
//! * Chain: any ordered list of admittance parts followed by either terminal.

use serde::{Deserialize, Serialize};

use crate::dynamics::PlantState;
use crate::error::{Error, Result};

/// Desired inertia, viscosity and stiffness of one control part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SecondOrderSpec", into = "SecondOrderSpec")]
pub struct SecondOrderParams {
    mass: f64,
    damping: f64,
    stiffness: f64,
}

/// Accepted file forms for [`SecondOrderParams`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum SecondOrderSpec {
    Mdk {
        mass: f64,
        damping: f64,
        stiffness: f64,
    },
    NaturalFrequency {
        mass: f64,
        omega: f64,
        zeta: f64,
    },
}

impl TryFrom<SecondOrderSpec> for SecondOrderParams {
    type Error = Error;

    fn try_from(spec: SecondOrderSpec) -> Result<Self> {
        match spec {
            SecondOrderSpec::Mdk { mass, damping, stiffness } => {
                SecondOrderParams::from_mdk(mass, damping, stiffness)
            }
            SecondOrderSpec::NaturalFrequency { mass, omega, zeta } => {
                SecondOrderParams::from_natural(mass, omega, zeta)
            }
        }
    }
}

impl From<SecondOrderParams> for SecondOrderSpec {
    fn from(p: SecondOrderParams) -> Self {
        SecondOrderSpec::Mdk {
            mass: p.mass,
            damping: p.damping,
            stiffness: p.stiffness,
        }
    }
}

impl SecondOrderParams {
    pub fn from_mdk(mass: f64, damping: f64, stiffness: f64) -> Result<Self> {
        for (name, v) in [("mass", mass), ("damping", damping), ("stiffness", stiffness)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(SecondOrderParams { mass, damping, stiffness })
    }

    /// `K = M * omega^2`, `D = 2 * zeta * M * omega`.
    pub fn from_natural(mass: f64, omega: f64, zeta: f64) -> Result<Self> {
        for (name, v) in [("mass", mass), ("omega", omega), ("zeta", zeta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Self::from_mdk(mass, 2.0 * zeta * mass * omega, mass * omega * omega)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    pub fn stiffness(&self) -> f64 {
        self.stiffness
    }

    /// `sqrt(K / M)`.
    pub fn omega(&self) -> f64 {
        (self.stiffness / self.mass).sqrt()
    }

    /// `D / (2 sqrt(M K))`.
    pub fn zeta(&self) -> f64 {
        self.damping / (2.0 * (self.mass * self.stiffness).sqrt())
    }
}

/// Desired plant state supplied by the trajectory planner, or by an upstream
/// admittance part acting as the reference of the next one.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DesiredState {
    pub x: f64,
    pub v: f64,
    pub a: f64,
}

/// State of an admittance part's virtual object.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VirtualObjectState {
    pub x: f64,
    pub v: f64,
    pub a: f64,
}

impl From<VirtualObjectState> for DesiredState {
    fn from(s: VirtualObjectState) -> Self {
        DesiredState { x: s.x, v: s.v, a: s.a }
    }
}

impl From<DesiredState> for VirtualObjectState {
    fn from(s: DesiredState) -> Self {
        VirtualObjectState { x: s.x, v: s.v, a: s.a }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImpedanceLawKind {
    /// Includes the feedforward `m * a_v`; realises the desired impedance exactly.
    FullFeedforward,
    /// Feedforward removed, so the initial contact force is `M_i * a_c`.
    NoFeedforward,
    /// `M_i = m`: a PD on the virtual object that needs no force measurement.
    MiEqualsM,
}

/// Virtual object acceleration of an admittance part.
///
/// `a_v = a_ref + (f_in - D (v_v - v_ref) - K (x_v - x_ref)) / M`
#[inline]
pub fn admittance_accel(
    params: &SecondOrderParams,
    stage: &VirtualObjectState,
    reference: &DesiredState,
    f_in: f64,
) -> f64 {
    reference.a
        + (f_in - params.damping * (stage.v - reference.v) - params.stiffness * (stage.x - reference.x))
            / params.mass
}

/// Control force of the impedance part for plant mass `m`.
#[inline]
pub fn impedance_input(
    kind: ImpedanceLawKind,
    params: &SecondOrderParams,
    m: f64,
    plant: &PlantState,
    virt: &VirtualObjectState,
    f_c: f64,
) -> f64 {
    let spring_damper = params.damping * (plant.v - virt.v) + params.stiffness * (plant.x - virt.x);
    match kind {
        ImpedanceLawKind::FullFeedforward => {
            let ratio = m / params.mass;
            (ratio - 1.0) * f_c + m * virt.a - ratio * spring_damper
        }
        ImpedanceLawKind::NoFeedforward => {
            let ratio = m / params.mass;
            (ratio - 1.0) * f_c - ratio * spring_damper
        }
        ImpedanceLawKind::MiEqualsM => -spring_damper,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdGains {
    pub kp: f64,
    pub kd: f64,
}

impl PdGains {
    /// Critically damped gains for plant mass `m`: `kd = 2 sqrt(m kp)`.
    pub fn critical(kp: f64, m: f64) -> Self {
        PdGains { kp, kd: 2.0 * (m * kp).sqrt() }
    }
}

/// Computed-torque PD: `u = m a_t + Kd (v_t - v) + Kp (x_t - x)`.
#[inline]
pub fn pd_tracking_input(gains: &PdGains, plant: &PlantState, target: &VirtualObjectState, m: f64) -> f64 {
    m * target.a + gains.kd * (target.v - plant.v) + gains.kp * (target.x - plant.x)
}

/// Signals available to the controller at one evaluation. Forces are signed
/// in plant coordinates.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ControlSignals {
    pub desired: DesiredState,
    pub plant: PlantState,
    /// Virtual force acting on proximity-driven parts.
    pub f_p: f64,
    /// Contact force acting on the plant.
    pub f_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacicConfig {
    pub law: ImpedanceLawKind,
    pub admittance: SecondOrderParams,
    pub impedance: SecondOrderParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacacConfig {
    pub proximity_admittance: SecondOrderParams,
    pub contact_admittance: SecondOrderParams,
    pub pd: PdGains,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceSource {
    Proximity,
    Contact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmittanceStage {
    pub source: ForceSource,
    pub params: SecondOrderParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Terminal {
    Impedance {
        law: ImpedanceLawKind,
        params: SecondOrderParams,
    },
    Pd {
        kp: f64,
        kd: f64,
    },
}

/// Generalised serial controller: ordered admittance parts, each referenced
/// to its predecessor (the first to the desired state), then a terminal part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub stages: Vec<AdmittanceStage>,
    pub terminal: Terminal,
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::field(
                "controller.stages",
                "a chain needs at least one admittance part",
            ));
        }
        if let Terminal::Pd { kp, kd } = self.terminal {
            if !(kp > 0.0 && kd > 0.0) {
                return Err(Error::field("controller.terminal", "PD gains must be positive"));
            }
        }
        Ok(())
    }

    /// True if any part takes the proximity force as input.
    pub fn uses_proximity(&self) -> bool {
        self.stages.iter().any(|s| s.source == ForceSource::Proximity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControllerKind {
    Pacic(PacicConfig),
    Pacac(PacacConfig),
    Chain(ChainConfig),
}

impl ControllerKind {
    /// Number of virtual objects integrated by the controller.
    pub fn stage_count(&self) -> usize {
        match self {
            ControllerKind::Pacic(_) => 1,
            ControllerKind::Pacac(_) => 2,
            ControllerKind::Chain(c) => c.stages.len(),
        }
    }

    /// The admittance part driven by the proximity force, if any.
    pub fn proximity_admittance(&self) -> Option<&SecondOrderParams> {
        match self {
            ControllerKind::Pacic(c) => Some(&c.admittance),
            ControllerKind::Pacac(c) => Some(&c.proximity_admittance),
            ControllerKind::Chain(c) => c
                .stages
                .iter()
                .find(|s| s.source == ForceSource::Proximity)
                .map(|s| &s.params),
        }
    }

    /// The part that shapes the response to contact force: the impedance
    /// part, or the contact-driven admittance part.
    pub fn contact_part(&self) -> Option<&SecondOrderParams> {
        match self {
            ControllerKind::Pacic(c) => Some(&c.impedance),
            ControllerKind::Pacac(c) => Some(&c.contact_admittance),
            ControllerKind::Chain(c) => match &c.terminal {
                Terminal::Impedance { params, .. } => Some(params),
                Terminal::Pd { .. } => c
                    .stages
                    .iter()
                    .rev()
                    .find(|s| s.source == ForceSource::Contact)
                    .map(|s| &s.params),
            },
        }
    }

    /// Impedance law of the terminal part, if it is an impedance part.
    pub fn impedance_law(&self) -> Option<ImpedanceLawKind> {
        match self {
            ControllerKind::Pacic(c) => Some(c.law),
            ControllerKind::Chain(ChainConfig { terminal: Terminal::Impedance { law, .. }, .. }) => Some(*law),
            _ => None,
        }
    }

    /// Expands PACIC or PACAC into the equivalent chain.
    pub fn to_chain(&self) -> ChainConfig {
        match self {
            ControllerKind::Pacic(c) => ChainConfig {
                stages: vec![AdmittanceStage { source: ForceSource::Proximity, params: c.admittance }],
                terminal: Terminal::Impedance { law: c.law, params: c.impedance },
            },
            ControllerKind::Pacac(c) => ChainConfig {
                stages: vec![
                    AdmittanceStage { source: ForceSource::Proximity, params: c.proximity_admittance },
                    AdmittanceStage { source: ForceSource::Contact, params: c.contact_admittance },
                ],
                terminal: Terminal::Pd { kp: c.pd.kp, kd: c.pd.kd },
            },
            ControllerKind::Chain(c) => c.clone(),
        }
    }

    pub fn validate(&self, plant_mass: f64) -> Result<()> {
        match self {
            ControllerKind::Pacic(c) => {
                if c.law == ImpedanceLawKind::MiEqualsM
                    && (c.impedance.mass() - plant_mass).abs() > 1e-9 * plant_mass
                {
                    return Err(Error::field(
                        "controller.impedance.mass",
                        format!(
                            "law mi_equals_m requires the impedance mass to equal the plant mass {plant_mass}"
                        ),
                    ));
                }
                Ok(())
            }
            ControllerKind::Pacac(c) => {
                if !(c.pd.kp > 0.0 && c.pd.kd > 0.0) {
                    return Err(Error::field("controller.pd", "PD gains must be positive"));
                }
                Ok(())
            }
            ControllerKind::Chain(c) => {
                c.validate()?;
                if let Terminal::Impedance { law: ImpedanceLawKind::MiEqualsM, params } = c.terminal {
                    if (params.mass() - plant_mass).abs() > 1e-9 * plant_mass {
                        return Err(Error::field(
                            "controller.terminal.params.mass",
                            "law mi_equals_m requires the impedance mass to equal the plant mass",
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    /// Evaluates the controller: writes each virtual object's acceleration
    /// into `stages` and returns the control force.
    pub fn step(&self, m: f64, signals: &ControlSignals, stages: &mut [VirtualObjectState]) -> f64 {
        match self {
            ControllerKind::Pacic(c) => pacic_step(c, m, signals, &mut stages[0]),
            ControllerKind::Pacac(c) => {
                let (first, rest) = stages.split_at_mut(1);
                pacac_step(c, m, signals, &mut first[0], &mut rest[0])
            }
            ControllerKind::Chain(c) => chain_step(c, m, signals, stages),
        }
    }
}

/// One evaluation of PACIC. The admittance part is driven by `f_p` and
/// referenced to the desired state; the impedance part tracks its output.
pub fn pacic_step(
    cfg: &PacicConfig,
    m: f64,
    signals: &ControlSignals,
    virt: &mut VirtualObjectState,
) -> f64 {
    virt.a = admittance_accel(&cfg.admittance, virt, &signals.desired, signals.f_p);
    impedance_input(cfg.law, &cfg.impedance, m, &signals.plant, virt, signals.f_c)
}

/// One evaluation of PACAC. The first part is driven by `f_p`, the second by
/// `f_c` and referenced to the first; the PD tracks the second.
pub fn pacac_step(
    cfg: &PacacConfig,
    m: f64,
    signals: &ControlSignals,
    first: &mut VirtualObjectState,
    second: &mut VirtualObjectState,
) -> f64 {
    first.a = admittance_accel(&cfg.proximity_admittance, first, &signals.desired, signals.f_p);
    second.a = admittance_accel(&cfg.contact_admittance, second, &DesiredState::from(*first), signals.f_c);
    pd_tracking_input(&cfg.pd, &signals.plant, second, m)
}

/// One evaluation of a generalised chain.
pub fn chain_step(
    cfg: &ChainConfig,
    m: f64,
    signals: &ControlSignals,
    stages: &mut [VirtualObjectState],
) -> f64 {
    debug_assert_eq!(stages.len(), cfg.stages.len());
    let mut reference = signals.desired;
    for (stage, virt) in cfg.stages.iter().zip(stages.iter_mut()) {
        let f_in = match stage.source {
            ForceSource::Proximity => signals.f_p,
            ForceSource::Contact => signals.f_c,
        };
        virt.a = admittance_accel(&stage.params, virt, &reference, f_in);
        reference = DesiredState::from(*virt);
    }
    let last = stages.last().copied().unwrap_or_default();
    match &cfg.terminal {
        Terminal::Impedance { law, params } => {
            impedance_input(*law, params, m, &signals.plant, &last, signals.f_c)
        }
        Terminal::Pd { kp, kd } => pd_tracking_input(&PdGains { kp: *kp, kd: *kd }, &signals.plant, &last, m),
    }
}
