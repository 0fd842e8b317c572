//! Physical constants and unit conversions.
//!
//! Everything inside the crate is SI with angular frequencies in rad/s.
//! Conversions from Hz, GeV/cm^3, cm^3 and mK happen only at the edges
//! (configuration parsing, CLI output).

use std::f64::consts::PI;

/// Exact SI / CODATA 2018 values.
#[derive(Debug, Clone, Copy)]
pub struct PhysicalConstants {
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
    /// Speed of light, m/s.
    pub c: f64,
    /// Joules per GeV.
    pub joule_per_gev: f64,
}

pub const CODATA: PhysicalConstants = PhysicalConstants {
    hbar: 1.054_571_817e-34,
    k_b: 1.380_649e-23,
    c: 299_792_458.0,
    joule_per_gev: 1.602_176_634e-10,
};

pub fn hz_to_angular(f_hz: f64) -> f64 {
    2.0 * PI * f_hz
}

pub fn angular_to_hz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

/// GeV/cm^3 to J/m^3.
pub fn gev_per_cm3_to_si(rho: f64) -> f64 {
    rho * CODATA.joule_per_gev * 1e6
}

pub fn cm3_to_m3(v: f64) -> f64 {
    v * 1e-6
}

pub fn m3_to_cm3(v: f64) -> f64 {
    v * 1e6
}

pub fn millikelvin_to_kelvin(t_mk: f64) -> f64 {
    t_mk * 1e-3
}

/// Natural-unit (hbar = c = 1, GeV) conversions, used by the independent
/// evaluation route in [`crate::sensitivity`].
pub mod natural {
    use super::CODATA;

    /// One GeV expressed as an angular frequency, rad/s.
    pub fn gev_in_per_second() -> f64 {
        CODATA.joule_per_gev / CODATA.hbar
    }

    /// One GeV^-1 expressed as a length, m.
    pub fn inverse_gev_in_meters() -> f64 {
        CODATA.hbar * CODATA.c / CODATA.joule_per_gev
    }

    pub fn angular_to_gev(omega: f64) -> f64 {
        omega / gev_in_per_second()
    }

    pub fn volume_to_inverse_gev3(v_m3: f64) -> f64 {
        v_m3 / inverse_gev_in_meters().powi(3)
    }

    /// Energy density J/m^3 to GeV^4.
    pub fn energy_density_to_gev4(rho_si: f64) -> f64 {
        let gev_per_m3 = rho_si / CODATA.joule_per_gev;
        gev_per_m3 * inverse_gev_in_meters().powi(3)
    }

    pub fn temperature_to_gev(t_kelvin: f64) -> f64 {
        CODATA.k_b * t_kelvin / CODATA.joule_per_gev
    }

    pub fn seconds_to_inverse_gev(t: f64) -> f64 {
        t * gev_in_per_second()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_dm_conversion() {
        // 0.45 GeV/cm^3 = 0.45 * 1.602e-10 J / 1e-6 m^3
        let rho = gev_per_cm3_to_si(0.45);
        assert!((rho - 7.209_794_853e-5).abs() / rho < 1e-9);
    }

    #[test]
    fn natural_round_trips() {
        let omega = hz_to_angular(7e9);
        let back = natural::angular_to_gev(omega) * natural::gev_in_per_second();
        assert!((back - omega).abs() / omega < 1e-15);
        assert!((angular_to_hz(omega) - 7e9).abs() < 1e-3);
    }
}
