//! Optical reflective proximity sensor, low-pass filtering of its output and
//! the virtual viscous force generator.
//!
//! The sensor output follows `xi = G_xi * alpha * psi / (d + d_o)^n`, so the
//! ratio `xi_dot / xi = -n * d_dot / (d + d_o)` does not depend on the
//! reflectance `alpha`. The virtual force `f_p = G_p * xi_dot / xi` therefore
//! behaves like a distance-dependent damper that vanishes in contact.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::serde_util::zero_is_none;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorParams {
    /// Transform coefficient of the sensing element.
    pub g_xi: f64,
    /// Reflectance of the detected surface, `0 < alpha <= 1`.
    pub alpha: f64,
    /// Emitted light energy.
    pub psi: f64,
    /// Offset distance between the sensing element and the cover (m).
    pub d_o: f64,
    /// Diffusion exponent.
    pub n: f64,
    /// Additive leakage left after calibration (output units).
    pub residual_offset: f64,
    /// Standard deviation of additive Gaussian noise on `xi` (output units).
    pub noise_std: f64,
}

impl Default for SensorParams {
    fn default() -> Self {
        SensorParams {
            g_xi: 1.0,
            alpha: 1.0,
            psi: 1.0,
            d_o: 5e-3,
            n: 2.0,
            residual_offset: 0.0,
            noise_std: 0.0,
        }
    }
}

impl SensorParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sensor.g_xi", self.g_xi),
            ("sensor.psi", self.psi),
            ("sensor.d_o", self.d_o),
            ("sensor.n", self.n),
        ];
        for (path, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::field(path, "must be positive"));
            }
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::field("sensor.alpha", "must lie in (0, 1]"));
        }
        if !(self.residual_offset.is_finite() && self.residual_offset >= 0.0) {
            return Err(Error::field("sensor.residual_offset", "must be non-negative"));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::field("sensor.noise_std", "must be non-negative"));
        }
        Ok(())
    }
}

/// Noiseless sensor output at gap `d`.
pub fn sensor_output(d: f64, params: &SensorParams) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::Domain(format!("gap distance must be non-negative, got {d}")));
    }
    Ok(params.g_xi * params.alpha * params.psi / (d + params.d_o).powf(params.n)
        + params.residual_offset)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VirtualForceGain {
    /// Scale coefficient `G_p` (N*s).
    pub gp: f64,
    /// Symmetric cap on `|f_p|`; `None` (`0` in files) disables it.
    #[serde(rename = "f_max", with = "zero_is_none")]
    pub saturation: Option<f64>,
}

impl Default for VirtualForceGain {
    fn default() -> Self {
        VirtualForceGain {
            gp: 0.8,
            saturation: None,
        }
    }
}

impl VirtualForceGain {
    pub fn validate(&self) -> Result<()> {
        if !(self.gp.is_finite() && self.gp >= 0.0) {
            return Err(Error::field("virtual_force.gp", "must be non-negative"));
        }
        if let Some(f_max) = self.saturation {
            if !(f_max.is_finite() && f_max > 0.0) {
                return Err(Error::field("virtual_force.f_max", "must be positive when set"));
            }
        }
        Ok(())
    }

    fn saturate(&self, f: f64) -> f64 {
        match self.saturation {
            Some(cap) => f.clamp(-cap, cap),
            None => f,
        }
    }
}

/// `f_p = G_p * xi_dot / xi`, saturated if configured.
///
/// Returns [`Error::SignalLost`] when `xi <= 0`; the controller then uses
/// `f_p = 0` for that update.
pub fn virtual_viscous_force(xi: f64, xi_dot: f64, gain: &VirtualForceGain) -> Result<f64> {
    if !(xi > 0.0) {
        return Err(Error::SignalLost(xi));
    }
    Ok(gain.saturate(gain.gp * xi_dot / xi))
}

/// Kinematic form of the virtual force: `-G_p * n * d_dot / (d + d_o)`.
pub fn virtual_force_closed_form(d: f64, d_dot: f64, gain: &VirtualForceGain, n: f64, d_o: f64) -> f64 {
    gain.saturate(-gain.gp * n * d_dot / (d + d_o))
}

/// Backward difference of the (filtered) sensor output.
pub fn xi_rate(previous: f64, current: f64, dt: f64) -> f64 {
    (current - previous) / dt
}

/// Stateful backward differencer; the first sample yields zero.
#[derive(Debug, Clone, Default)]
pub struct XiRate {
    previous: Option<f64>,
}

impl XiRate {
    pub fn update(&mut self, xi: f64, dt: f64) -> f64 {
        let rate = match self.previous {
            Some(p) => xi_rate(p, xi, dt),
            None => 0.0,
        };
        self.previous = Some(xi);
        rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub enabled: bool,
    pub order: usize,
    pub cutoff_hz: f64,
    /// Filter sample rate. `None` (`0` in files) means the controller update
    /// rate, which is the only rate the filter can actually run at.
    #[serde(with = "zero_is_none")]
    pub sample_hz: Option<f64>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            enabled: true,
            order: 5,
            cutoff_hz: 500.0,
            sample_hz: None,
        }
    }
}

impl FilterConfig {
    /// Validates against the rate the filter will be stepped at.
    pub fn validate(&self, update_hz: f64) -> Result<()> {
        if !self.enabled {
            return Ok(());
        }
        if self.order == 0 {
            return Err(Error::field("filter.order", "must be at least 1"));
        }
        let fs = self.sample_hz.unwrap_or(update_hz);
        if (fs - update_hz).abs() > 1e-6 * update_hz {
            return Err(Error::field(
                "filter.sample_hz",
                format!("filter runs at the control update rate {update_hz} Hz, got {fs} Hz"),
            ));
        }
        if !(self.cutoff_hz > 0.0 && self.cutoff_hz < fs / 2.0) {
            return Err(Error::field(
                "filter.cutoff_hz",
                format!("cutoff must satisfy 0 < fc < fs/2 = {} Hz, got {}", fs / 2.0, self.cutoff_hz),
            ));
        }
        Ok(())
    }
}

/// Second-order section in transposed direct form II, `a0 = 1`.
/// First-order sections have `b[2] = a[2] = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section {
    pub b: [f64; 3],
    pub a: [f64; 3],
    s1: f64,
    s2: f64,
}

impl Section {
    fn new(b: [f64; 3], a: [f64; 3]) -> Self {
        Section { b, a, s1: 0.0, s2: 0.0 }
    }

    #[inline]
    fn step(&mut self, x: f64) -> f64 {
        let y = self.b[0] * x + self.s1;
        self.s1 = self.b[1] * x - self.a[1] * y + self.s2;
        self.s2 = self.b[2] * x - self.a[2] * y;
        y
    }

    fn reset_to(&mut self, x: f64) {
        // unit DC gain: output equals the held input
        self.s2 = (self.b[2] - self.a[2]) * x;
        self.s1 = (self.b[1] - self.a[1]) * x + self.s2;
    }
}

/// Digital Butterworth low-pass designed with the pre-warped bilinear
/// transform and realised as a cascade of unit-DC-gain sections.
#[derive(Debug, Clone, PartialEq)]
pub struct ButterworthLowpass {
    sections: Vec<Section>,
}

impl ButterworthLowpass {
    pub fn design(order: usize, cutoff_hz: f64, sample_hz: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("filter order must be at least 1".into()));
        }
        if !(cutoff_hz > 0.0 && cutoff_hz < sample_hz / 2.0) {
            return Err(Error::Config(format!(
                "cutoff {cutoff_hz} Hz must lie strictly below Nyquist ({} Hz)",
                sample_hz / 2.0
            )));
        }
        let fs2 = 2.0 * sample_hz;
        let warped = fs2 * (PI * cutoff_hz / sample_hz).tan();
        let bilinear = |p: Complex64| (fs2 + p) / (fs2 - p);

        let n = order as f64;
        let mut sections = Vec::with_capacity(order.div_ceil(2));
        for k in 0..order / 2 {
            let theta = PI * (2.0 * k as f64 + n + 1.0) / (2.0 * n);
            let z = bilinear(Complex64::from_polar(warped, theta));
            let a = [1.0, -2.0 * z.re, z.norm_sqr()];
            let g = (a[0] + a[1] + a[2]) / 4.0;
            sections.push(Section::new([g, 2.0 * g, g], a));
        }
        if order % 2 == 1 {
            let z = bilinear(Complex64::new(-warped, 0.0)).re;
            let g = (1.0 - z) / 2.0;
            sections.push(Section::new([g, g, 0.0], [1.0, -z, 0.0]));
        }
        Ok(ButterworthLowpass { sections })
    }

    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    /// Numerator and denominator of the overall transfer function in powers
    /// of `z^-1`, `a[0] = 1`.
    pub fn transfer_function(&self) -> (Vec<f64>, Vec<f64>) {
        let mut b = vec![1.0];
        let mut a = vec![1.0];
        for s in &self.sections {
            b = poly_mul(&b, &s.b);
            a = poly_mul(&a, &s.a);
        }
        let order = self.order();
        b.truncate(order + 1);
        a.truncate(order + 1);
        (b, a)
    }

    pub fn order(&self) -> usize {
        self.sections
            .iter()
            .map(|s| if s.a[2] == 0.0 { 1 } else { 2 })
            .sum()
    }

    /// Filters one sample.
    pub fn step(&mut self, x: f64) -> f64 {
        self.sections.iter_mut().fold(x, |acc, s| s.step(acc))
    }

    /// Puts every section in the steady state for a constant input `x`.
    pub fn reset_to(&mut self, x: f64) {
        for s in &mut self.sections {
            s.reset_to(x);
        }
    }
}

fn poly_mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

/// Filter stage of the sensing pipeline. The first sample initialises the
/// filter at steady state so a stationary scene produces no transient.
#[derive(Debug, Clone)]
pub enum SensorFilter {
    Passthrough,
    Butterworth { filter: ButterworthLowpass, primed: bool },
}

impl SensorFilter {
    pub fn from_config(cfg: &FilterConfig, update_hz: f64) -> Result<Self> {
        if !cfg.enabled {
            return Ok(SensorFilter::Passthrough);
        }
        cfg.validate(update_hz)?;
        let fs = cfg.sample_hz.unwrap_or(update_hz);
        Ok(SensorFilter::Butterworth {
            filter: ButterworthLowpass::design(cfg.order, cfg.cutoff_hz, fs)?,
            primed: false,
        })
    }

    /// Applies the discrete low-pass recursion to one raw sample.
    pub fn filter_step(&mut self, raw: f64) -> f64 {
        match self {
            SensorFilter::Passthrough => raw,
            SensorFilter::Butterworth { filter, primed } => {
                if !*primed {
                    filter.reset_to(raw);
                    *primed = true;
                }
                filter.step(raw)
            }
        }
    }
}
