//! Trajectory sampling of a cavity driven by a field with a randomly
//! jumping phase.
//!
//! Each trajectory integrates `da/dt = -i g exp(i (delta t + phi(t)))` from
//! the vacuum. The phase is piecewise constant and redrawn uniformly from
//! `[0, 2 pi)` at the jumps of a Poisson process of rate `1 / tau_dm`, which
//! gives the phase factor the correlation `exp(-|t - t'| / tau_dm)`. Between
//! jumps the integral is done in closed form, so the only error is
//! statistical.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McCurve {
    pub t: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_traj: usize,
}

/// `int_{t0}^{t0 + h} exp(i delta s) ds`.
fn phase_integral(delta: f64, t0: f64, h: f64) -> Complex64 {
    let x = delta * h;
    // (e^{ix} - 1) / (ix)
    let kernel = if x.abs() < 1e-4 {
        Complex64::new(1.0 - x * x / 6.0, x / 2.0)
    } else {
        (Complex64::new(0.0, x).exp() - 1.0) / Complex64::new(0.0, x)
    };
    Complex64::from_polar(h, delta * t0) * kernel
}

fn trajectory(g: f64, tau_dm: f64, delta: f64, grid: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut alpha = Complex64::new(0.0, 0.0);
    let mut now = 0.0;
    let mut phase = rng.random_range(0.0..TAU);
    let mut next_jump = -tau_dm * (1.0 - rng.random::<f64>()).ln();
    for &target in grid {
        while next_jump < target {
            alpha += Complex64::from_polar(1.0, phase) * phase_integral(delta, now, next_jump - now);
            now = next_jump;
            phase = rng.random_range(0.0..TAU);
            next_jump = now - tau_dm * (1.0 - rng.random::<f64>()).ln();
        }
        alpha += Complex64::from_polar(1.0, phase) * phase_integral(delta, now, target - now);
        now = target;
        // a = -i g * integral; only |a|^2 is recorded
        out.push(g * g * alpha.norm_sqr());
    }
    out
}

/// Sum with O(log n) error growth and a result independent of thread count.
pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let (left, right) = values.split_at(values.len() / 2);
    pairwise_sum(left) + pairwise_sum(right)
}

/// Ensemble mean of `|a(t)|^2` and its standard error on `t_grid`.
///
/// Trajectory `k` draws from ChaCha8 stream `k` of `seed`, so the result is
/// bit-identical for any degree of parallelism.
pub fn mc_population(g: f64, tau_dm: f64, delta: f64, t_grid: &[f64], n_traj: usize, seed: u64) -> Result<McCurve> {
    if n_traj == 0 {
        return Err(Error::invalid("at least one trajectory is required"));
    }
    if !(tau_dm > 0.0) || !g.is_finite() || !delta.is_finite() {
        return Err(Error::invalid("coupling and detuning must be finite and tau_dm positive"));
    }
    if t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("time grid must be finite, non-negative and sorted"));
    }

    let samples: Vec<Vec<f64>> = (0..n_traj)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            trajectory(g, tau_dm, delta, t_grid, &mut rng)
        })
        .collect();

    let n = n_traj as f64;
    let mut column = vec![0.0; n_traj];
    let mut mean = Vec::with_capacity(t_grid.len());
    let mut stderr = Vec::with_capacity(t_grid.len());
    for j in 0..t_grid.len() {
        for (slot, traj) in column.iter_mut().zip(&samples) {
            *slot = traj[j];
        }
        let mu = pairwise_sum(&column) / n;
        let se = if n_traj > 1 {
            for slot in column.iter_mut() {
                *slot = (*slot - mu).powi(2);
            }
            (pairwise_sum(&column) / (n - 1.0) / n).sqrt()
        } else {
            f64::NAN
        };
        mean.push(mu);
        stderr.push(se);
    }
    Ok(McCurve { t: t_grid.to_vec(), mean, stderr, n_traj })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::mean_population_detuned;

    const TAU_DM: f64 = 22.736e-6;

    fn grid(points: usize, span: f64) -> Vec<f64> {
        (0..points).map(|k| span * TAU_DM * k as f64 / (points - 1) as f64).collect()
    }

    #[test]
    fn zero_coupling_gives_nothing() {
        let c = mc_population(0.0, TAU_DM, 0.0, &grid(10, 5.0), 50, 1).unwrap();
        assert!(c.mean.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn same_seed_same_bits() {
        let t = grid(20, 10.0);
        let a = mc_population(1e3, TAU_DM, 1.0 / TAU_DM, &t, 300, 42).unwrap();
        let b = mc_population(1e3, TAU_DM, 1.0 / TAU_DM, &t, 300, 42).unwrap();
        assert_eq!(a, b);
        let c = mc_population(1e3, TAU_DM, 1.0 / TAU_DM, &t, 300, 43).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn phase_integral_small_and_large_detuning() {
        // composite Simpson rule as the reference
        let exact = |d: f64, t0: f64, h: f64| {
            let n = 2000;
            let step = h / n as f64;
            let f = |s: f64| Complex64::new(0.0, d * s).exp();
            let mut acc = f(t0) + f(t0 + h);
            for k in 1..n {
                acc += f(t0 + k as f64 * step) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            acc * step / 3.0
        };
        for (d, t0, h) in [(1e3, 0.3e-3, 2e-4), (5.0, 1e-3, 1e-6), (-40.0, 0.01, 0.02)] {
            let got = phase_integral(d, t0, h);
            assert!((got - exact(d, t0, h)).norm() < 1e-12 * h, "{d} {t0} {h}");
        }
        assert_eq!(phase_integral(0.0, 1.0, 0.25), Complex64::new(0.25, 0.0));
    }

    #[test]
    fn short_ensemble_tracks_closed_form() {
        let g = 1.0 / TAU_DM;
        let t = grid(11, 10.0);
        let c = mc_population(g, TAU_DM, 0.0, &t, 2000, 7).unwrap();
        for (k, &ti) in t.iter().enumerate().skip(1) {
            let want = mean_population_detuned(g, TAU_DM, 0.0, ti);
            assert!((c.mean[k] - want).abs() < 4.0 * c.stderr[k], "t = {ti}");
        }
    }

    #[test]
    fn standard_error_shrinks_as_inverse_root() {
        let g = 1.0 / TAU_DM;
        let t = [5.0 * TAU_DM];
        let ns = [250usize, 1000, 4000, 16000];
        let pts: Vec<(f64, f64)> = ns
            .iter()
            .map(|&n| {
                let c = mc_population(g, TAU_DM, 0.0, &t, n, 11).unwrap();
                ((n as f64).ln(), (c.stderr[0].powi(2)).ln())
            })
            .collect();
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((slope + 1.0).abs() < 0.2, "variance slope {slope}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(mc_population(1.0, TAU_DM, 0.0, &[0.0], 0, 1).is_err());
        assert!(mc_population(1.0, TAU_DM, 0.0, &[1.0, 0.5], 10, 1).is_err());
    }
}
