//! Simulation and analysis toolkit for serial combined impedance control with
//! preemptive, proximity-sensor-based impact reduction on a 1D mass plant.
//!
//! The crate is organised the way the controller is wired:
//!
//! * [`sensing`]: optical proximity sensor model, Butterworth filtering and the
//!   virtual viscous force `G_p * xi_dot / xi`.
//! * [`controllers`]: admittance and impedance parts and their serial
//!   compositions (PACIC, PACAC and the generalised N-stage chain).
//! * [`environment`]: obstacle kinematics, penalty contact, minimum-jerk
//!   trajectories and the four collision scenarios.
//! * [`dynamics`]: fixed-step integration, traces and contact-onset detection.
//! * [`sim`]: closed-loop and open-loop simulation drivers.
//! * [`analysis`]: closed-form contact-transition results, design conditions,
//!   superposition verification and impact metrics.

pub mod analysis;
pub mod controllers;
pub mod dynamics;
pub mod environment;
pub mod error;
pub mod scenario;
pub mod sensing;
pub mod sim;
mod serde_util;

pub use analysis::{
    check_smooth_condition, closed_form_y, design_omega_a_range, f_tra, impact_metrics,
    initial_contact_force, reduction_effect, superposition_check, t_extremum, ContactState,
    CriticalAdmittance, ImpactMetrics, SmoothCondition, TransitionClass,
};
pub use controllers::{
    ChainConfig, ControllerKind, DesiredState, ForceSource, ImpedanceLawKind, PacacConfig,
    PacicConfig, PdGains, SecondOrderParams, Terminal, VirtualObjectState,
};
pub use dynamics::{
    detect_contact_onset, ContactOnset, IntegratorConfig, Method, PlantState, SimTrace,
};
pub use environment::{ContactModel, MinJerkSpec, ObstacleLaw, ScenarioKind, Trajectory};
pub use error::{Error, Result};
pub use scenario::{build_scenario, PlantConfig, ScenarioConfig, ScenarioOverrides};
pub use sensing::{FilterConfig, SensorParams, VirtualForceGain};
pub use sim::{simulate, simulate_open_loop, OpenLoopInputs};
