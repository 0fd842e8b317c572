//! First-order discretized Lindblad step and its Heisenberg-picture adjoint.
//!
//! One step maps `rho -> V rho V^dagger + dt * sum_k D[A_k](rho)` with
//! `D[A](rho) = A rho A^dagger - {A^dagger A, rho} / 2`. Every jump operator
//! is a single-mode ladder or number operator, so each dissipator is applied
//! with an O(D^2) shifted-index kernel instead of dense products.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{NoiseModel, STABILITY_LIMIT};
use crate::drive::incremental_displacement;
use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, HilbertSpace, LocalOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Jump {
    /// `a^dagger`, heating.
    Raising,
    /// `a`, decay.
    Lowering,
    /// `a^dagger a`, dephasing.
    Number,
}

/// A jump operator `sqrt(rate) * A` acting on one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub mode: usize,
    pub jump: Jump,
    pub rate: f64,
}

impl Channel {
    pub fn new(mode: usize, jump: Jump, rate: f64) -> Self {
        Self { mode, jump, rate }
    }
}

/// Heating, decay and dephasing channels for every cavity of `noise`.
pub(crate) fn noise_channels(noise: &NoiseModel) -> Vec<Channel> {
    let mut out = Vec::new();
    for mode in 0..noise.n_cavities() {
        let r = noise.rates(mode);
        out.push(Channel::new(mode, Jump::Raising, r.up));
        out.push(Channel::new(mode, Jump::Lowering, r.down));
        out.push(Channel::new(mode, Jump::Number, r.phi));
    }
    out.retain(|c| c.rate > 0.0);
    out
}

/// Largest summed rate acting on a single mode.
pub(crate) fn max_mode_rate(channels: &[Channel]) -> f64 {
    let modes = channels.iter().map(|c| c.mode + 1).max().unwrap_or(0);
    let mut per_mode = vec![0.0; modes];
    for c in channels {
        per_mode[c.mode] += c.rate;
    }
    per_mode.into_iter().fold(0.0, f64::max)
}

pub(crate) fn check_stability(channels: &[Channel], dt: f64) -> Result<()> {
    let rate = max_mode_rate(channels);
    let product = dt * rate;
    if product >= STABILITY_LIMIT {
        return Err(Error::StabilityGuard { dt, rate, product, limit: STABILITY_LIMIT });
    }
    Ok(())
}

/// Precomputed level tables for the shifted-index kernels.
#[derive(Debug, Clone)]
pub(crate) struct Kernel {
    space: HilbertSpace,
    levels: Vec<Vec<usize>>,
    sqrt: Vec<f64>,
    top_indices: Vec<usize>,
}

impl Kernel {
    pub(crate) fn new(space: HilbertSpace) -> Self {
        let levels: Vec<Vec<usize>> = (0..space.n_modes()).map(|m| space.levels_of(m)).collect();
        let top = space.cutoff() - 1;
        let top_indices = (0..space.dim()).filter(|&i| levels.iter().any(|lv| lv[i] == top)).collect();
        let sqrt = (0..=space.cutoff()).map(|n| (n as f64).sqrt()).collect();
        Self { space, levels, sqrt, top_indices }
    }

    pub(crate) fn space(&self) -> &HilbertSpace {
        &self.space
    }

    /// Population in the top level of any mode.
    pub(crate) fn leakage(&self, rho: &Array2<Complex64>) -> f64 {
        self.top_indices.iter().map(|&i| rho[[i, i]].re).sum()
    }

    /// `out += dt * sum_k D[A_k](src)`, or the adjoint dissipators.
    fn add_dissipators(
        &self,
        src: &Array2<Complex64>,
        channels: &[Channel],
        dt: f64,
        adjoint: bool,
        out: &mut Array2<Complex64>,
    ) {
        let d = self.space.dim();
        let top = self.space.cutoff() - 1;
        let src = src.as_slice().expect("standard layout");
        let dst = out.as_slice_mut().expect("standard layout");
        for ch in channels {
            let lv = &self.levels[ch.mode];
            let s = self.space.stride(ch.mode);
            let w = dt * ch.rate;
            let damping: Vec<f64> = lv
                .iter()
                .map(|&n| match ch.jump {
                    Jump::Lowering => n as f64,
                    Jump::Raising if n < top => (n + 1) as f64,
                    Jump::Raising => 0.0,
                    Jump::Number => (n * n) as f64,
                })
                .collect();
            // which neighbour the sandwich term reads from
            let reads_above = matches!((ch.jump, adjoint), (Jump::Lowering, false) | (Jump::Raising, true));
            let reads_below = matches!((ch.jump, adjoint), (Jump::Raising, false) | (Jump::Lowering, true));
            for i in 0..d {
                let ni = lv[i];
                let row = &src[i * d..(i + 1) * d];
                let out_row = &mut dst[i * d..(i + 1) * d];
                for j in 0..d {
                    let nj = lv[j];
                    let mut v = row[j] * (-0.5 * (damping[i] + damping[j]));
                    if reads_above {
                        if ni < top && nj < top {
                            v += src[(i + s) * d + j + s] * (self.sqrt[ni + 1] * self.sqrt[nj + 1]);
                        }
                    } else if reads_below {
                        if ni > 0 && nj > 0 {
                            v += src[(i - s) * d + j - s] * (self.sqrt[ni] * self.sqrt[nj]);
                        }
                    } else {
                        v += row[j] * (ni * nj) as f64;
                    }
                    out_row[j] += v * w;
                }
            }
        }
    }
}

/// Reusable buffers for repeated steps on one space.
pub(crate) struct Stepper {
    pub(crate) kernel: Kernel,
    scratch: Array2<Complex64>,
}

impl Stepper {
    pub(crate) fn new(space: HilbertSpace) -> Self {
        let d = space.dim();
        Self { kernel: Kernel::new(space), scratch: Array2::zeros((d, d)) }
    }

    /// Schroedinger step. `unitaries` act in slice order. Returns the
    /// anti-Hermitian part removed by symmetrization.
    pub(crate) fn forward(
        &mut self,
        rho: &mut Array2<Complex64>,
        unitaries: &[LocalOperator],
        channels: &[Channel],
        dt: f64,
    ) -> Result<f64> {
        let space = self.kernel.space;
        self.scratch.assign(rho);
        for u in unitaries {
            u.left_multiply(&space, rho)?;
            u.right_multiply_adjoint(&space, rho)?;
        }
        self.kernel.add_dissipators(&self.scratch, channels, dt, false, rho);
        Ok(symmetrize(rho))
    }

    /// Adjoint of [`Stepper::forward`] with the same arguments, acting on an
    /// observable.
    pub(crate) fn adjoint(
        &mut self,
        op: &mut Array2<Complex64>,
        unitaries: &[LocalOperator],
        channels: &[Channel],
        dt: f64,
    ) -> Result<()> {
        let space = self.kernel.space;
        self.scratch.assign(op);
        for u in unitaries.iter().rev() {
            u.heisenberg_in_place(&space, op)?;
        }
        self.kernel.add_dissipators(&self.scratch, channels, dt, true, op);
        symmetrize(op);
        Ok(())
    }
}

fn symmetrize(x: &mut Array2<Complex64>) -> f64 {
    let d = x.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in i..d {
            let a = x[[i, j]];
            let b = x[[j, i]].conj();
            worst = worst.max((a - b).norm());
            let mid = (a + b) * 0.5;
            x[[i, j]] = mid;
            x[[j, i]] = mid.conj();
        }
    }
    worst
}

/// Single-mode displacement `D(alpha)` on mode `mode` as a local operator.
pub(crate) fn local_displacement(cutoff: usize, mode: usize, alpha: Complex64) -> Result<LocalOperator> {
    let mut generator = Array2::<Complex64>::zeros((cutoff, cutoff));
    for n in 1..cutoff {
        let amp = (n as f64).sqrt();
        // alpha a^dagger - alpha^* a
        generator[[n, n - 1]] += alpha * amp;
        generator[[n - 1, n]] -= alpha.conj() * amp;
    }
    LocalOperator::new(cutoff, vec![mode], crate::fock::expm(&generator))
}

/// One step of the discretized master equation for the full N-cavity state:
/// every cavity is displaced by `delta_alpha` and then all heating, decay
/// and dephasing channels of `noise` act for `dt`.
pub fn dlme_step(rho: &DensityMatrix, noise: &NoiseModel, delta_alpha: Complex64, dt: f64) -> Result<DensityMatrix> {
    noise.validate()?;
    let space = *rho.space();
    if noise.n_cavities() != space.n_modes() {
        return Err(Error::invalid(format!(
            "noise model has {} cavities but the state has {} modes",
            noise.n_cavities(),
            space.n_modes()
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("time step must be positive"));
    }
    let channels = noise_channels(noise);
    check_stability(&channels, dt)?;
    let unitaries = if delta_alpha == Complex64::new(0.0, 0.0) {
        Vec::new()
    } else {
        (0..space.n_modes()).map(|m| local_displacement(space.cutoff(), m, delta_alpha)).collect::<Result<Vec<_>>>()?
    };
    let mut stepper = Stepper::new(space);
    let mut next = rho.matrix().clone();
    stepper.forward(&mut next, &unitaries, &channels, dt)?;
    DensityMatrix::new(space, next)
}

/// Integration-phase driver shared by both backends.
///
/// Runs `steps.last()` steps of length `dt` from `rho`, displacing each mode
/// in `drive_modes` by `scale * delta_alpha(t)`, and records `observable`
/// after the requested step counts.
pub(crate) struct IntegrationRun<'a> {
    pub(crate) channels: &'a [Channel],
    pub(crate) drive_modes: &'a [usize],
    pub(crate) drive_scale: f64,
    pub(crate) coupling: f64,
    pub(crate) tau_dm: f64,
    pub(crate) dt: f64,
    pub(crate) leak_threshold: f64,
}

pub(crate) struct IntegrationRecord {
    pub(crate) population: Vec<f64>,
    pub(crate) trace_error: Vec<f64>,
    pub(crate) leakage: Vec<f64>,
    pub(crate) max_hermiticity_correction: f64,
}

impl IntegrationRun<'_> {
    pub(crate) fn run(
        &self,
        stepper: &mut Stepper,
        rho: &mut Array2<Complex64>,
        observable: &Array2<Complex64>,
        sample_steps: &[usize],
    ) -> Result<IntegrationRecord> {
        check_stability(self.channels, self.dt)?;
        let cutoff = stepper.kernel.space().cutoff();
        let total = sample_steps.iter().copied().max().unwrap_or(0);
        let mut record = IntegrationRecord {
            population: Vec::with_capacity(sample_steps.len()),
            trace_error: Vec::with_capacity(sample_steps.len()),
            leakage: Vec::with_capacity(sample_steps.len()),
            max_hermiticity_correction: 0.0,
        };
        let mut next_sample = 0;
        let mut unitaries = Vec::with_capacity(self.drive_modes.len());
        for step in 0..=total {
            while next_sample < sample_steps.len() && sample_steps[next_sample] == step {
                record.population.push(crate::fock::trace_product(observable, rho).re);
                let trace: Complex64 = (0..rho.nrows()).map(|i| rho[[i, i]]).sum();
                record.trace_error.push((trace - 1.0).norm());
                record.leakage.push(stepper.kernel.leakage(rho));
                next_sample += 1;
            }
            if step == total {
                break;
            }
            unitaries.clear();
            if self.coupling != 0.0 {
                let t = step as f64 * self.dt;
                let da = incremental_displacement(self.coupling, self.tau_dm, t, self.dt) * self.drive_scale;
                for &mode in self.drive_modes {
                    unitaries.push(local_displacement(cutoff, mode, da)?);
                }
            }
            let fix = stepper.forward(rho, &unitaries, self.channels, self.dt)?;
            record.max_hermiticity_correction = record.max_hermiticity_correction.max(fix);
            let leak = stepper.kernel.leakage(rho);
            if leak > self.leak_threshold {
                return Err(Error::TruncationLeak {
                    leakage: leak,
                    threshold: self.leak_threshold,
                    time: (step + 1) as f64 * self.dt,
                });
            }
        }
        Ok(record)
    }
}
