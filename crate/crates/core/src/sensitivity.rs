//! Closed-form science outputs: thermal occupation, scan rate, exclusion
//! reach and frequency bands covered in a time budget.
//!
//! The scan rate and exclusion are each evaluated along two independent
//! routes, directly in SI and in natural units (GeV, hbar = c = 1) with a
//! final conversion. [`unit_audit`] compares them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::drive::{cavity_volume_tm010, coupling_g, form_factor_tm010, CavityGeometry, DmParams, TM010_ROOT};
use crate::error::{Error, Result};
use crate::units::{natural, CODATA};

/// SNR threshold for a 90% confidence-level exclusion.
pub const DEFAULT_ZETA_SNR: f64 = 1.62;

/// Bose-Einstein occupation at angular frequency `omega` and temperature
/// `t_kelvin`. Zero at or below zero temperature.
pub fn thermal_occupation(omega: f64, t_kelvin: f64) -> f64 {
    if t_kelvin <= 0.0 {
        return 0.0;
    }
    let x = CODATA.hbar * omega / (CODATA.k_b * t_kelvin);
    1.0 / x.exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityParams {
    pub zeta_snr: f64,
    /// Efficiency relative to the ideal lossless protocol, in (0, 1].
    pub eta: f64,
    /// Dark-matter energy density, J/m^3.
    pub rho: f64,
    pub q_dm: f64,
    pub q_cav: f64,
    pub n_cavities: usize,
    pub fock: usize,
    /// Cavity temperature, K.
    pub temperature: f64,
}

impl SensitivityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.zeta_snr > 0.0) {
            return Err(Error::invalid("zeta_snr must be positive"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::invalid(format!("efficiency {} outside (0, 1]", self.eta)));
        }
        if !(self.rho > 0.0 && self.q_dm > 0.0 && self.q_cav > 0.0 && self.temperature > 0.0) {
            return Err(Error::invalid("density, quality factors and temperature must be positive"));
        }
        if self.n_cavities == 0 {
            return Err(Error::invalid("at least one cavity is required"));
        }
        Ok(())
    }

    /// `N^2 (m + 1)`.
    pub fn enhancement(&self) -> f64 {
        (self.n_cavities * self.n_cavities * (self.fock + 1)) as f64
    }

    fn dm(&self, omega: f64, epsilon: f64) -> DmParams {
        DmParams { epsilon, rho: self.rho, q_dm: self.q_dm, omega, detuning: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRate {
    /// Angular dark-matter bandwidth covered per second, rad/s^2.
    pub angular_per_s: f64,
    pub hz_per_s: f64,
    /// Integration time to reach the SNR threshold at one frequency step, s.
    pub tau_tot: f64,
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::invalid(format!("frequency must be positive, got {omega}")));
    }
    Ok(())
}

/// Time to reach `zeta_snr` at coupling `epsilon` and the resulting scan
/// rate, through the cavity coupling `g` (SI route).
pub fn scan_rate(params: &SensitivityParams, omega: f64, epsilon: f64) -> Result<ScanRate> {
    params.validate()?;
    check_omega(omega)?;
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    let cavity = CavityGeometry::tm010(omega)?;
    let g = coupling_g(&params.dm(omega, epsilon), &cavity);
    let tau_dm = params.q_dm / omega;
    let n_th = thermal_occupation(omega, params.temperature);
    let tau_tot = params.zeta_snr.powi(2) * omega * n_th
        / (4.0 * params.eta.powi(2) * g.powi(4) * tau_dm.powi(2) * params.q_cav * params.enhancement());
    let angular_per_s = (1.0 / tau_dm) / tau_tot;
    Ok(ScanRate { angular_per_s, hz_per_s: angular_per_s / (2.0 * PI), tau_tot })
}

/// Scan rate from the closed form in natural units, converted to rad/s^2.
pub fn scan_rate_natural(params: &SensitivityParams, omega: f64, epsilon: f64) -> Result<f64> {
    params.validate()?;
    check_omega(omega)?;
    let rho = natural::energy_density_to_gev4(params.rho);
    let volume = natural::volume_to_inverse_gev3(cavity_volume_tm010(omega)?);
    let n_th = thermal_occupation(omega, params.temperature);
    let gev2 = 16.0
        * params.eta.powi(2)
        * epsilon.powi(4)
        * form_factor_tm010().powi(2)
        * rho.powi(2)
        * params.q_dm
        * params.q_cav
        * volume.powi(2)
        * params.enhancement()
        / (params.zeta_snr.powi(2) * n_th);
    Ok(gev2 * natural::gev_in_per_second().powi(2))
}

/// Smallest kinetic mixing excluded after integrating `tau_tot` at `omega`.
pub fn exclusion_epsilon(params: &SensitivityParams, omega: f64, tau_tot: f64) -> Result<f64> {
    params.validate()?;
    check_omega(omega)?;
    if !(tau_tot > 0.0) {
        return Err(Error::invalid("integration time must be positive"));
    }
    let volume = cavity_volume_tm010(omega)?;
    let n_th = thermal_occupation(omega, params.temperature);
    let g = form_factor_tm010();
    let quartic = n_th * params.zeta_snr.powi(2) * CODATA.hbar.powi(2) * omega
        / (16.0
            * params.eta.powi(2)
            * g.powi(2)
            * params.rho.powi(2)
            * params.q_dm.powi(2)
            * params.q_cav
            * volume.powi(2)
            * tau_tot
            * params.enhancement());
    Ok(quartic.powf(0.25))
}

/// [`exclusion_epsilon`] evaluated in natural units.
pub fn exclusion_epsilon_natural(params: &SensitivityParams, omega: f64, tau_tot: f64) -> Result<f64> {
    params.validate()?;
    check_omega(omega)?;
    let rho = natural::energy_density_to_gev4(params.rho);
    let volume = natural::volume_to_inverse_gev3(cavity_volume_tm010(omega)?);
    let n_th = thermal_occupation(omega, params.temperature);
    let quartic = n_th * params.zeta_snr.powi(2) * natural::angular_to_gev(omega)
        / (16.0
            * params.eta.powi(2)
            * form_factor_tm010().powi(2)
            * rho.powi(2)
            * params.q_dm.powi(2)
            * params.q_cav
            * volume.powi(2)
            * natural::seconds_to_inverse_gev(tau_tot)
            * params.enhancement());
    Ok(quartic.powf(0.25))
}

/// Largest relative disagreement between the SI and natural-unit routes.
pub fn unit_audit(params: &SensitivityParams, omega: f64, epsilon: f64, tau_tot: f64) -> Result<f64> {
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let scan = rel(scan_rate(params, omega, epsilon)?.angular_per_s, scan_rate_natural(params, omega, epsilon)?);
    let excl = rel(exclusion_epsilon(params, omega, tau_tot)?, exclusion_epsilon_natural(params, omega, tau_tot)?);
    Ok(scan.max(excl))
}

/// Coefficient `C` of `epsilon = C (n_th omega^7)^(1/4)` implied by the
/// closed form, with `omega` in rad/s.
pub fn exclusion_coefficient(params: &SensitivityParams, tau_tot: f64) -> Result<f64> {
    params.validate()?;
    let v0 = 4.0 * PI * (TM010_ROOT * CODATA.c).powi(3);
    let quartic = params.zeta_snr.powi(2) * CODATA.hbar.powi(2)
        / (16.0
            * params.eta.powi(2)
            * form_factor_tm010().powi(2)
            * params.rho.powi(2)
            * params.q_dm.powi(2)
            * params.q_cav
            * v0.powi(2)
            * tau_tot
            * params.enhancement());
    Ok(quartic.powf(0.25))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub coefficient: f64,
    pub exponent: f64,
}

/// Least-squares fit of `epsilon = C x^p` in log space with
/// `x = n_th omega^7`.
pub fn fit_exclusion(omegas: &[f64], epsilons: &[f64], temperature: f64) -> Result<PowerLawFit> {
    if omegas.len() != epsilons.len() || omegas.len() < 2 {
        return Err(Error::invalid("need at least two matching points to fit"));
    }
    let pts: Vec<(f64, f64)> = omegas
        .iter()
        .zip(epsilons)
        .map(|(&w, &e)| ((thermal_occupation(w, temperature) * w.powi(7)).ln(), e.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("fit abscissae are degenerate"));
    }
    let exponent = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    Ok(PowerLawFit { coefficient: (my - exponent * mx).exp(), exponent })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReachRequest {
    pub target_epsilon: f64,
    /// Total time available, s.
    pub budget_s: f64,
    /// Angular frequency where the scan starts, rad/s.
    pub omega_start: f64,
    /// Scan never goes above this angular frequency.
    pub omega_stop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReachBand {
    pub omega_start: f64,
    pub omega_end: f64,
    pub steps: usize,
    pub time_used_s: f64,
    /// True when the scan hit `omega_stop` before the budget ran out.
    pub stopped_at_limit: bool,
    /// `(frequency in Hz, cumulative time in s)` after each step.
    pub trace: Vec<(f64, f64)>,
}

impl ReachBand {
    pub fn width_hz(&self) -> f64 {
        (self.omega_end - self.omega_start) / (2.0 * PI)
    }
}

/// Scan upward from `omega_start` in steps of one dark-matter linewidth
/// `omega / q_dm`, each costing the integration time needed to exclude
/// `target_epsilon`, until the budget is spent.
pub fn reach_band(params: &SensitivityParams, request: &ReachRequest) -> Result<ReachBand> {
    params.validate()?;
    check_omega(request.omega_start)?;
    if !(request.budget_s > 0.0 && request.target_epsilon > 0.0) || request.omega_stop < request.omega_start {
        return Err(Error::invalid("reach needs a positive budget and target and omega_stop >= omega_start"));
    }
    let mut omega = request.omega_start;
    let mut used = 0.0;
    let mut trace = Vec::new();
    let mut stopped_at_limit = false;
    loop {
        let cost = scan_rate(params, omega, request.target_epsilon)?.tau_tot;
        if used + cost > request.budget_s {
            if trace.is_empty() {
                return Err(Error::BudgetTooSmall { budget_s: request.budget_s, first_step_s: cost });
            }
            break;
        }
        let next = omega + omega / params.q_dm;
        if next > request.omega_stop {
            stopped_at_limit = true;
            break;
        }
        used += cost;
        omega = next;
        trace.push((omega / (2.0 * PI), used));
    }
    if trace.is_empty() {
        return Err(Error::BudgetTooSmall { budget_s: request.budget_s, first_step_s: f64::INFINITY });
    }
    Ok(ReachBand {
        omega_start: request.omega_start,
        omega_end: omega,
        steps: trace.len(),
        time_used_s: used,
        stopped_at_limit,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{gev_per_cm3_to_si, hz_to_angular};
    use proptest::prelude::*;

    fn params(n: usize, m: usize, t_mk: f64) -> SensitivityParams {
        SensitivityParams {
            zeta_snr: DEFAULT_ZETA_SNR,
            eta: 1.0,
            rho: gev_per_cm3_to_si(0.45),
            q_dm: 1e6,
            q_cav: 1e8,
            n_cavities: n,
            fock: m,
            temperature: t_mk * 1e-3,
        }
    }

    #[test]
    fn occupation_special_points() {
        assert_eq!(thermal_occupation(1e10, 0.0), 0.0);
        assert_eq!(thermal_occupation(hz_to_angular(7e9), 1e-6), 0.0);
        let t = 0.05;
        let omega = CODATA.k_b * t * 2f64.ln() / CODATA.hbar;
        assert!((thermal_occupation(omega, t) - 1.0).abs() < 1e-12);
        // hbar omega / k T = 6.7177 at 7 GHz and 50 mK
        let x: f64 = 1.054_571_817e-34 * 2.0 * PI * 7e9 / (1.380_649e-23 * 0.05);
        let n = thermal_occupation(hz_to_angular(7e9), 0.05);
        assert!((n - 1.0 / (x.exp() - 1.0)).abs() < 1e-15);
        assert!((n - 1.21e-3).abs() / 1.21e-3 < 0.01);
    }

    #[test]
    fn ideal_enhancement_ratio() {
        let w = hz_to_angular(7e9);
        let big = scan_rate(&params(8, 5, 50.0), w, 1e-16).unwrap();
        let small = scan_rate(&params(1, 0, 50.0), w, 1e-16).unwrap();
        assert!((big.angular_per_s / small.angular_per_s - 384.0).abs() < 1e-9);
    }

    #[test]
    fn quartic_in_epsilon() {
        let w = hz_to_angular(7e9);
        let p = params(2, 1, 50.0);
        let r1 = scan_rate(&p, w, 1e-16).unwrap().angular_per_s;
        let r2 = scan_rate(&p, w, 2e-16).unwrap().angular_per_s;
        assert!((r2 / r1 - 16.0).abs() < 1e-12);
        let e1 = exclusion_epsilon(&p, w, 1.0).unwrap();
        let e16 = exclusion_epsilon(&p, w, 16.0).unwrap();
        assert!((e1 / e16 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn two_routes_agree() {
        for f in [3e9, 7e9, 12e9] {
            let audit = unit_audit(&params(4, 5, 25.0), hz_to_angular(f), 1e-15, 10.0).unwrap();
            assert!(audit < 1e-10, "{f}: {audit}");
        }
    }

    #[test]
    fn round_trip_through_scan_time() {
        let p = params(4, 5, 50.0);
        let w = hz_to_angular(7e9);
        let tau = scan_rate(&p, w, 3e-16).unwrap().tau_tot;
        let eps = exclusion_epsilon(&p, w, tau).unwrap();
        assert!((eps / 3e-16 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fit_recovers_quarter_power() {
        let p = params(4, 5, 50.0);
        let omegas: Vec<f64> = (0..10).map(|k| hz_to_angular(3e9 + 1e9 * k as f64)).collect();
        let eps: Vec<f64> = omegas.iter().map(|&w| exclusion_epsilon(&p, w, 10.0).unwrap()).collect();
        let fit = fit_exclusion(&omegas, &eps, 0.05).unwrap();
        assert!((fit.exponent - 0.25).abs() < 1e-9);
        let c = exclusion_coefficient(&p, 10.0).unwrap();
        assert!((fit.coefficient / c - 1.0).abs() < 1e-6);
    }

    #[test]
    fn reach_guards_and_ordering() {
        let request = ReachRequest {
            target_epsilon: 1e-16,
            budget_s: 1e-9,
            omega_start: hz_to_angular(7e9),
            omega_stop: hz_to_angular(7.5e9),
        };
        assert!(matches!(reach_band(&params(1, 0, 50.0), &request), Err(Error::BudgetTooSmall { .. })));
        let request = ReachRequest { budget_s: 3600.0, ..request };
        let widths: Vec<f64> = [(1, 0), (2, 1), (4, 5)]
            .iter()
            .map(|&(n, m)| reach_band(&params(n, m, 50.0), &request).unwrap().width_hz())
            .collect();
        assert!(widths[0] < widths[1] && widths[1] < widths[2], "{widths:?}");
    }

    proptest! {
        #[test]
        fn occupation_monotone(f in 1e9f64..2e10, t in 5e-3f64..0.5, k in 1.01f64..2.0) {
            let w = hz_to_angular(f);
            prop_assert!(thermal_occupation(w, t * k) > thermal_occupation(w, t));
            prop_assert!(thermal_occupation(w * k, t) < thermal_occupation(w, t));
        }

        #[test]
        fn colder_cavities_exclude_more(f in 3e9f64..12e9) {
            let w = hz_to_angular(f);
            let e25 = exclusion_epsilon(&params(4, 5, 25.0), w, 10.0).unwrap();
            let e50 = exclusion_epsilon(&params(4, 5, 50.0), w, 10.0).unwrap();
            let e75 = exclusion_epsilon(&params(4, 5, 75.0), w, 10.0).unwrap();
            prop_assert!(e25 < e50 && e50 < e75);
        }

        #[test]
        fn larger_arrays_never_narrow_the_band(n in 1usize..6, m in 0usize..6) {
            let request = ReachRequest {
                target_epsilon: 3e-16,
                budget_s: 60.0,
                omega_start: hz_to_angular(5e9),
                omega_stop: hz_to_angular(5.2e9),
            };
            let base = reach_band(&params(n, m, 50.0), &request);
            let bigger = reach_band(&params(n + 1, m, 50.0), &request);
            if let (Ok(a), Ok(b)) = (base, bigger) {
                prop_assert!(b.omega_end >= a.omega_end);
            }
        }
    }
}
