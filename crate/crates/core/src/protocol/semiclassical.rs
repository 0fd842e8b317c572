//! Rate-equation approximations of the signal and background rates, the
//! approximate SNR and the optimal integration time.

use serde::Serialize;

use crate::engine::TransformedRates;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemiclassicalParams {
    /// Dark-matter coupling, rad/s.
    pub coupling: f64,
    pub tau_dm: f64,
    pub n_cavities: usize,
    pub fock: usize,
    pub gamma_up_eff: f64,
    pub gamma_down_eff: f64,
}

impl SemiclassicalParams {
    pub fn from_rates(coupling: f64, tau_dm: f64, rates: &TransformedRates) -> Self {
        Self {
            coupling,
            tau_dm,
            n_cavities: rates.n_cavities,
            fock: rates.fock,
            gamma_up_eff: rates.gamma_up_eff(),
            gamma_down_eff: rates.gamma_down_eff(),
        }
    }

    fn m1(&self) -> f64 {
        (self.fock + 1) as f64
    }

    /// Long-time lossless signal rate `2 g^2 tau_dm N (m+1)`.
    pub fn diffusive_rate(&self) -> f64 {
        2.0 * self.coupling.powi(2) * self.tau_dm * self.n_cavities as f64 * self.m1()
    }
}

/// `(e^x - 1) / x`, equal to 1 at 0.
fn growth(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0 + x / 2.0
    } else {
        x.exp_m1() / x
    }
}

/// Instantaneous lossless transition rate into `|m+1>` at time `t`.
pub fn instantaneous_signal_rate(p: &SemiclassicalParams, t: f64) -> f64 {
    p.diffusive_rate() * -(-t / p.tau_dm).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemiclassicalRates {
    pub t: f64,
    pub r_s: f64,
    pub r_b: f64,
    /// Simplified forms valid for `tau_dm < t << 1 / gamma_down_eff`.
    pub r_s_approx: f64,
    pub r_b_approx: f64,
}

/// Signal and background rates `n_{m+1}(t) / t`.
pub fn semiclassical_rates(p: &SemiclassicalParams, t: f64) -> SemiclassicalRates {
    let k = p.gamma_down_eff;
    let decay = (-p.m1() * k * t).exp();
    let r_s = p.diffusive_rate() * decay * (growth(k * t) - growth((k - 1.0 / p.tau_dm) * t));
    let r_b = p.m1() * p.gamma_up_eff * decay * growth(k * t);
    SemiclassicalRates {
        t,
        r_s,
        r_b,
        r_s_approx: p.diffusive_rate() * decay * (1.0 - p.tau_dm / t),
        r_b_approx: p.m1() * p.gamma_up_eff * decay,
    }
}

/// Approximate SNR after `tau_tot` of cycles of length `tau_int`, with no
/// overhead.
pub fn snr_approx(p: &SemiclassicalParams, tau_int: f64, tau_tot: f64) -> f64 {
    if p.gamma_up_eff == 0.0 {
        return f64::INFINITY;
    }
    2.0 * p.coupling.powi(2)
        * p.tau_dm
        * (tau_tot / p.gamma_up_eff).sqrt()
        * p.n_cavities as f64
        * p.m1().sqrt()
        * (-p.m1() / 2.0 * p.gamma_down_eff * tau_int).exp()
        * (1.0 - p.tau_dm / tau_int)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalTau {
    /// Closed-form estimate.
    pub closed_form: f64,
    /// Maximizer of [`snr_approx`] by golden-section search.
    pub refined: f64,
}

/// Integration time maximizing the approximate SNR. Infinite without decay.
pub fn optimal_tau_int(p: &SemiclassicalParams) -> Result<OptimalTau> {
    if !(p.gamma_down_eff >= 0.0 && p.tau_dm > 0.0) {
        return Err(Error::invalid("decay rate must be non-negative and tau_dm positive"));
    }
    if p.gamma_down_eff == 0.0 {
        return Ok(OptimalTau { closed_form: f64::INFINITY, refined: f64::INFINITY });
    }
    let d = p.tau_dm;
    let k = p.gamma_down_eff * p.m1();
    let closed_form = d / 2.0 * (1.0 + (1.0 + 1.0 / (d * k / 2.0)).sqrt());
    // the objective is unimodal on (tau_dm, inf)
    let f = |t: f64| (-k / 2.0 * t).exp() * (1.0 - d / t);
    let refined = golden_max(f, d, d + 40.0 / k + 10.0 * closed_form, 1e-10);
    Ok(OptimalTau { closed_form, refined })
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, rtol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while (hi - lo) > rtol * (lo.abs() + hi.abs()) {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePopulations {
    pub t: Vec<f64>,
    pub n_m: Vec<f64>,
    pub n_m_plus_1: Vec<f64>,
}

/// Integrates the two-level rate equations for the signal run with RK4.
///
/// `downward` keeps the drive-induced `m -> m-1` loss of `|m>` (a factor
/// `(2m+1)/(m+1)` on the drive term instead of 1).
pub fn rate_equation_populations(p: &SemiclassicalParams, t_grid: &[f64], downward: bool) -> Result<RatePopulations> {
    if t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("time grid must be non-negative and sorted"));
    }
    let m = p.fock as f64;
    let k = p.gamma_down_eff;
    let depletion = if downward { (2.0 * m + 1.0) / (m + 1.0) } else { 1.0 };
    let rhs = |t: f64, y: [f64; 2]| {
        let r = instantaneous_signal_rate(p, t);
        [-(m * k + depletion * r) * y[0] + (m + 1.0) * k * y[1], r * y[0] - (m + 1.0) * k * y[1]]
    };
    let h_max = (p.tau_dm / 50.0).min(if k > 0.0 { 0.02 / ((m + 1.0) * k) } else { f64::INFINITY });
    let mut y = [1.0, 0.0];
    let mut now = 0.0;
    let mut out = RatePopulations { t: Vec::new(), n_m: Vec::new(), n_m_plus_1: Vec::new() };
    for &target in t_grid {
        while now < target {
            let h = h_max.min(target - now);
            let k1 = rhs(now, y);
            let k2 = rhs(now + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
            let k3 = rhs(now + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
            let k4 = rhs(now + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            for i in 0..2 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            now += h;
        }
        out.t.push(target);
        out.n_m.push(y[0]);
        out.n_m_plus_1.push(y[1]);
    }
    Ok(out)
}

/// Background rate with a conditional-pi-pulse readout repeated `n_repeat`
/// times, given qubit thermal population `p_e` and readout error `e_ge`.
pub fn spam_background(p_e: f64, e_ge: f64, n_repeat: u32, tau_cycle: f64, r_b: f64) -> Result<f64> {
    let unit = 0.0..1.0;
    if !unit.contains(&p_e) || !unit.contains(&e_ge) {
        return Err(Error::invalid("qubit population and readout error must lie in [0, 1)"));
    }
    if n_repeat == 0 || !(tau_cycle > 0.0) || r_b < 0.0 {
        return Err(Error::invalid("need n_repeat >= 1, tau_cycle > 0 and a non-negative rate"));
    }
    let n = n_repeat as i32;
    Ok((p_e.powi(n) + e_ge.powi(n)) / tau_cycle + r_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TAU_DM: f64 = 22.736e-6;

    fn params(m: usize, down: f64) -> SemiclassicalParams {
        SemiclassicalParams {
            coupling: 73.6,
            tau_dm: TAU_DM,
            n_cavities: 2,
            fock: m,
            gamma_up_eff: 0.53,
            gamma_down_eff: down,
        }
    }

    #[test]
    fn lossless_long_time_rate() {
        let p = params(3, 0.0);
        let r = semiclassical_rates(&p, 1e4 * TAU_DM);
        assert!((r.r_s / p.diffusive_rate() - 1.0).abs() < 1e-3);
        // closed form of the lossless rate
        let t = 3.0 * TAU_DM;
        let want = p.diffusive_rate() * (1.0 - TAU_DM / t * (1.0 - (-t / TAU_DM).exp()));
        assert!((semiclassical_rates(&p, t).r_s / want - 1.0).abs() < 1e-12);
    }

    #[test]
    fn background_starts_at_stimulated_heating() {
        let p = params(4, 462.0);
        let r = semiclassical_rates(&p, 1e-12);
        assert!((r.r_b / (5.0 * 0.53) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn optimum_limits() {
        let fast = optimal_tau_int(&params(0, 1e9)).unwrap();
        assert!((fast.closed_form / TAU_DM - 1.0).abs() < 1e-3);
        let slow = optimal_tau_int(&params(0, 1e-3)).unwrap();
        let slower = optimal_tau_int(&params(0, 1e-5)).unwrap();
        // inverse square root divergence
        assert!((slower.closed_form / slow.closed_form - 10.0).abs() < 0.01);
        assert_eq!(optimal_tau_int(&params(0, 0.0)).unwrap().closed_form, f64::INFINITY);
    }

    #[test]
    fn refined_optimum_is_a_stationary_point() {
        let p = params(2, 462.0);
        let opt = optimal_tau_int(&p).unwrap().refined;
        let f = |t: f64| snr_approx(&p, t, 1.0);
        assert!(f(opt) >= f(opt * 1.01) && f(opt) >= f(opt * 0.99));
        let d = TAU_DM;
        let k = 3.0 * 462.0;
        let exact = d / 2.0 * (1.0 + (1.0 + 8.0 / (d * k)).sqrt());
        assert!((opt / exact - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rate_equations_match_source_term_solution_without_downward_loss() {
        let p = params(2, 462.0);
        let grid: Vec<f64> = (1..=8).map(|k| 5.0 * k as f64 * TAU_DM).collect();
        let pops = rate_equation_populations(&p, &grid, false).unwrap();
        for (k, &t) in grid.iter().enumerate() {
            let r = semiclassical_rates(&p, t).r_s * t;
            assert!((pops.n_m_plus_1[k] / r - 1.0).abs() < 1e-3, "{t}");
        }
        let with = rate_equation_populations(&p, &grid, true).unwrap();
        assert!(with.n_m_plus_1[7] < pops.n_m_plus_1[7]);
    }

    #[test]
    fn spam_examples() {
        assert_eq!(spam_background(0.0, 0.0, 1, 1e-3, 1.0).unwrap(), 1.0);
        assert!((spam_background(0.01, 0.01, 1, 1e-3, 1.0).unwrap() - 21.0).abs() < 1e-12);
        assert!((spam_background(0.2, 0.1, 60, 1e-3, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(spam_background(1.0, 0.0, 1, 1e-3, 1.0).is_err());
        assert!(spam_background(0.1, 0.0, 0, 1e-3, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn spam_decreases_with_repeats(pe in 0.0f64..0.5, e in 0.0f64..0.5, n in 1u32..20) {
            let a = spam_background(pe, e, n, 1e-3, 1.0).unwrap();
            let b = spam_background(pe, e, n + 1, 1e-3, 1.0).unwrap();
            prop_assert!(b <= a);
        }
    }
}
