//! The dark-photon drive: coupling strength, cavity geometry and the
//! ensemble-averaged displacement of a cavity driven by a field whose phase
//! decorrelates over the coherence time `tau_dm = q_dm / omega`.

mod monte_carlo;

pub use monte_carlo::{mc_population, McCurve};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::CODATA;

/// First zero of the Bessel function J0, to the precision used for the
/// TM010 mode.
pub const TM010_ROOT: f64 = 2.4048;

pub const DEFAULT_Q_DM: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmParams {
    pub epsilon: f64,
    /// Energy density, J/m^3.
    pub rho: f64,
    pub q_dm: f64,
    /// Dark-matter angular frequency, rad/s.
    pub omega: f64,
    /// Cavity minus dark-matter angular frequency, rad/s.
    pub detuning: f64,
}

impl DmParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [("epsilon", self.epsilon), ("rho", self.rho), ("q_dm", self.q_dm), ("omega", self.omega)];
        for (name, value) in positive {
            if !(value.is_finite() && value >= 0.0) || (name != "epsilon" && value == 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {value}")));
            }
        }
        if !self.detuning.is_finite() {
            return Err(Error::invalid("detuning must be finite"));
        }
        Ok(())
    }

    pub fn tau_dm(&self) -> f64 {
        self.q_dm / self.omega
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityGeometry {
    /// rad/s
    pub omega: f64,
    /// m^3
    pub volume: f64,
    pub form_factor: f64,
}

impl CavityGeometry {
    /// Cylindrical cavity of height four radii driven in its TM010 mode.
    pub fn tm010(omega: f64) -> Result<Self> {
        Ok(Self { omega, volume: cavity_volume_tm010(omega)?, form_factor: form_factor_tm010() })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.volume > 0.0) {
            return Err(Error::invalid("cavity frequency and volume must be positive"));
        }
        if !(self.form_factor > 0.0 && self.form_factor <= 1.0) {
            return Err(Error::invalid(format!("form factor {} outside (0, 1]", self.form_factor)));
        }
        Ok(())
    }
}

/// Overlap of the TM010 mode with a randomly polarized field.
pub fn form_factor_tm010() -> f64 {
    (2.0 / TM010_ROOT).powi(2) / 3.0
}

/// Volume in m^3 of the `h = 4a` cylinder resonating at `omega` (rad/s).
pub fn cavity_volume_tm010(omega: f64) -> Result<f64> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::invalid(format!("cavity frequency must be positive, got {omega}")));
    }
    let radius = TM010_ROOT * CODATA.c / omega;
    Ok(4.0 * PI * radius.powi(3))
}

/// Drive strength in rad/s.
pub fn coupling_g(dm: &DmParams, cavity: &CavityGeometry) -> f64 {
    dm.epsilon * (2.0 * cavity.form_factor * dm.rho * cavity.volume * cavity.omega / CODATA.hbar).sqrt()
}

/// `x - 1 + exp(-x)`, accurate for small `x`.
pub(crate) fn ramp(x: f64) -> f64 {
    if x.abs() < 0.1 {
        // sum_{k>=2} (-x)^k / k!
        let mut term = x * x / 2.0;
        let mut acc = 0.0;
        for k in 3..20 {
            acc += term;
            term *= -x / k as f64;
        }
        acc
    } else {
        x + (-x).exp_m1()
    }
}

/// Resonant ensemble-averaged photon number after driving for `t`.
pub fn mean_population(g: f64, tau_dm: f64, t: f64) -> f64 {
    2.0 * g * g * tau_dm * tau_dm * ramp(t / tau_dm)
}

/// Ensemble-averaged displacement magnitude `<|alpha|>` after driving for `t`.
pub fn mean_displacement(g: f64, tau_dm: f64, t: f64) -> f64 {
    mean_population(g, tau_dm, t).sqrt()
}

/// Drive amplitude to apply over `[t, t + dt]`, real and positive.
pub fn incremental_displacement(g: f64, tau_dm: f64, t: f64, dt: f64) -> Complex64 {
    Complex64::new(mean_displacement(g, tau_dm, t + dt) - mean_displacement(g, tau_dm, t), 0.0)
}

/// Ensemble-averaged photon number with detuning `delta` (rad/s).
pub fn mean_population_detuned(g: f64, tau_dm: f64, delta: f64, t: f64) -> f64 {
    let a = 1.0 / tau_dm;
    let w = Complex64::new(a * t, -delta * t);
    if w.norm() < 0.5 {
        // 2 g^2 Re[(w - 1 + e^{-w}) / z^2] with z = a - i delta, as a series in w
        let mut term = Complex64::new(0.5, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..25 {
            acc += term;
            term *= -w / (j + 3) as f64;
        }
        return 2.0 * g * g * t * t * acc.re;
    }
    let d2 = delta * delta;
    let s = a * a + d2;
    let decay = (-a * t).exp();
    let oscillating = decay * ((a * a - d2) * (delta * t).cos() - 2.0 * a * delta * (delta * t).sin()) / s;
    2.0 * g * g / s * (a * t + oscillating - (a * a - d2) / s)
}
