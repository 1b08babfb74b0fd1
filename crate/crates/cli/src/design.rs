//! Design helper: admittance natural frequencies giving a smooth contact
//! transition for a given impedance part.

use std::fmt::Write;

use preimpact_core::{check_smooth_condition, design_omega_a_range, SecondOrderParams, SmoothCondition};

use crate::error::{CliError, Result};

/// The two accepted parameterisations of the impedance part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImpedanceInput {
    Natural { mass: f64, omega: f64, zeta: f64 },
    Mdk { mass: f64, damping: f64, stiffness: f64 },
}

impl ImpedanceInput {
    pub fn params(&self) -> Result<SecondOrderParams> {
        let values = match *self {
            ImpedanceInput::Natural { mass, omega, zeta } => [("mass", mass), ("omega", omega), ("zeta", zeta)],
            ImpedanceInput::Mdk { mass, damping, stiffness } => {
                [("mass", mass), ("damping", damping), ("stiffness", stiffness)]
            }
        };
        for (name, v) in values {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Config(format!("--{name} must be positive, got {v}")));
            }
        }
        let p = match *self {
            ImpedanceInput::Natural { mass, omega, zeta } => SecondOrderParams::from_natural(mass, omega, zeta),
            ImpedanceInput::Mdk { mass, damping, stiffness } => SecondOrderParams::from_mdk(mass, damping, stiffness),
        };
        Ok(p?)
    }
}

/// Text report with the `omega_a` range and the design checklist. With
/// `omega_a`, also the verdict for that choice.
pub fn design_report(input: &ImpedanceInput, omega_a: Option<f64>) -> Result<String> {
    let p = input.params()?;
    if let Some(w) = omega_a {
        if !(w.is_finite() && w > 0.0) {
            return Err(CliError::Config(format!("--omega-a must be positive, got {w}")));
        }
    }
    let (lo, hi) = design_omega_a_range(&p);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "impedance part: M_i = {}, D_i = {}, K_i = {} (omega_i = {}, zeta_i = {})",
        p.mass(),
        p.damping(),
        p.stiffness(),
        p.omega(),
        p.zeta()
    );
    let _ = writeln!(s, "smooth-transition range: {lo} <= omega_a < {hi}");
    if let Some(w) = omega_a {
        let verdict = match check_smooth_condition(&p, w) {
            SmoothCondition::Satisfied => "satisfied".to_string(),
            SmoothCondition::ViolatedLow => format!("violated: omega_a = {w} >= {hi}, a local force maximum can follow contact"),
            SmoothCondition::ViolatedHigh => format!("violated: omega_a = {w} < {lo}, outside the conservative bound"),
        };
        let _ = writeln!(s, "omega_a = {w}: {verdict}");
    }
    let _ = writeln!(s, "checklist:");
    let _ = writeln!(s, "  1. pick omega_a in [{lo}, {hi}) and make the admittance part critically damped (zeta_a = 1)");
    let _ = writeln!(s, "  2. for a chosen M_a: K_a = M_a * omega_a^2, D_a = 2 * M_a * omega_a");
    let _ = writeln!(s, "  3. tune G_p for the task; no rule fixes it, so adjust it in simulation or on hardware");
    Ok(s)
}
