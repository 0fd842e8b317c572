//! Beamsplitters and entanglement-distribution (ED) circuits.
//!
//! A beamsplitter on modes `(a, b)` is
//! `U = exp(i theta (e^{i phi} a^dagger b + e^{-i phi} a b^dagger))`, which in
//! the Heisenberg picture maps `a -> cos(theta) a + i e^{i phi} sin(theta) b`.
//! The ED circuit maps a photon in mode 0 onto the symmetric single-photon
//! state of all `N` cavities, `U a_0^dagger U^dagger = N^{-1/2} sum_n a_n^dagger`.
//! Every splitter here uses `phi = pi/2`, for which the state-picture map is
//! real: `a^dagger -> cos(theta) a^dagger + sin(theta) b^dagger`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{expm, number_state, DenseOperator, HilbertSpace, Ladder, LocalOperator, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamsplitterSpec {
    pub mode_a: usize,
    pub mode_b: usize,
    pub theta: f64,
    pub phi: f64,
}

impl BeamsplitterSpec {
    pub fn new(mode_a: usize, mode_b: usize, theta: f64, phi: f64) -> Result<Self> {
        if mode_a == mode_b {
            return Err(Error::invalid("a beamsplitter needs two distinct modes"));
        }
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::invalid("beamsplitter angles must be finite"));
        }
        Ok(Self { mode_a, mode_b, theta, phi })
    }

    /// The two-mode unitary as a local operator on `|n_a, n_b>`.
    pub fn local(&self, cutoff: usize) -> Result<LocalOperator> {
        let c = cutoff;
        let mut generator = Array2::<Complex64>::zeros((c * c, c * c));
        let coupling = Complex64::i() * self.theta;
        let phase = Complex64::from_polar(1.0, self.phi);
        for na in 0..c {
            for nb in 0..c {
                let col = na * c + nb;
                // a^dagger b |na, nb> = sqrt((na+1) nb) |na+1, nb-1>
                if na + 1 < c && nb > 0 {
                    let row = (na + 1) * c + nb - 1;
                    let amp = (((na + 1) * nb) as f64).sqrt();
                    generator[[row, col]] += coupling * phase * amp;
                }
                // a b^dagger |na, nb> = sqrt(na (nb+1)) |na-1, nb+1>
                if na > 0 && nb + 1 < c {
                    let row = (na - 1) * c + nb + 1;
                    let amp = ((na * (nb + 1)) as f64).sqrt();
                    generator[[row, col]] += coupling * phase.conj() * amp;
                }
            }
        }
        LocalOperator::new(c, vec![self.mode_a, self.mode_b], expm(&generator))
    }
}

pub fn beamsplitter_unitary(space: &HilbertSpace, spec: &BeamsplitterSpec) -> Result<DenseOperator> {
    space.check_mode(spec.mode_a)?;
    space.check_mode(spec.mode_b)?;
    spec.local(space.cutoff())?.to_dense(space)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdScheme {
    Linear,
    Binary,
}

impl std::str::FromStr for EdScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(EdScheme::Linear),
            "binary" => Ok(EdScheme::Binary),
            other => Err(Error::invalid(format!("unknown ED scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdPlan {
    pub scheme: EdScheme,
    pub n_cavities: usize,
    /// Splitters in the order they act on the state.
    pub sequence: Vec<BeamsplitterSpec>,
    /// Groups of indices into `sequence` acting on disjoint modes, run in
    /// parallel.
    pub layers: Vec<Vec<usize>>,
}

impl EdPlan {
    pub fn new(scheme: EdScheme, n_cavities: usize) -> Result<Self> {
        if n_cavities == 0 {
            return Err(Error::invalid("at least one cavity is required"));
        }
        let n = n_cavities;
        let (sequence, layers) = match scheme {
            EdScheme::Linear => {
                let sequence = (0..n.saturating_sub(1))
                    .map(|j| {
                        let theta = (1.0 / ((n - j) as f64).sqrt()).acos();
                        BeamsplitterSpec::new(j, j + 1, theta, FRAC_PI_2)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let layers = (0..sequence.len()).map(|j| vec![j]).collect();
                (sequence, layers)
            }
            EdScheme::Binary => {
                if !n.is_power_of_two() {
                    return Err(Error::UnsupportedCavityCount(n));
                }
                let mut sequence = Vec::with_capacity(n - 1);
                let mut layers = Vec::new();
                let mut width = 1;
                while width < n {
                    let mut layer = Vec::with_capacity(width);
                    for k in 0..width {
                        layer.push(sequence.len());
                        sequence.push(BeamsplitterSpec::new(k, k + width, FRAC_PI_4, FRAC_PI_2)?);
                    }
                    layers.push(layer);
                    width *= 2;
                }
                (sequence, layers)
            }
        };
        Ok(Self { scheme, n_cavities, sequence, layers })
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn max_theta(&self) -> f64 {
        self.sequence.iter().map(|s| s.theta.abs()).fold(0.0, f64::max)
    }

    /// Gate time at beamsplitter rate `g_bs` (rad/s): depth times the longest
    /// rotation.
    pub fn duration(&self, g_bs: f64) -> f64 {
        self.depth() as f64 * self.max_theta() / g_bs
    }
}

/// A unitary that can act on state vectors of a fixed space.
pub trait UnitaryAction {
    fn space(&self) -> &HilbertSpace;
    fn apply(&self, state: &StateVector) -> Result<StateVector>;
    fn apply_adjoint(&self, state: &StateVector) -> Result<StateVector>;
    /// `max |U^dagger U - I|` or a bound on it.
    fn unitarity_error(&self) -> f64;
}

impl UnitaryAction for DenseOperator {
    fn space(&self) -> &HilbertSpace {
        DenseOperator::space(self)
    }

    fn apply(&self, state: &StateVector) -> Result<StateVector> {
        DenseOperator::apply(self, state)
    }

    fn apply_adjoint(&self, state: &StateVector) -> Result<StateVector> {
        self.adjoint().apply(state)
    }

    fn unitarity_error(&self) -> f64 {
        DenseOperator::unitarity_error(self)
    }
}

/// An ED circuit stored as its splitters, for spaces too large for a dense
/// matrix.
#[derive(Debug, Clone)]
pub struct EdGate {
    space: HilbertSpace,
    plan: EdPlan,
    splitters: Vec<LocalOperator>,
}

impl EdGate {
    pub fn new(space: HilbertSpace, plan: EdPlan) -> Result<Self> {
        if plan.n_cavities != space.n_modes() {
            return Err(Error::invalid(format!(
                "plan for {} cavities on a {}-mode space",
                plan.n_cavities,
                space.n_modes()
            )));
        }
        let splitters = plan.sequence.iter().map(|s| s.local(space.cutoff())).collect::<Result<Vec<_>>>()?;
        Ok(Self { space, plan, splitters })
    }

    pub fn plan(&self) -> &EdPlan {
        &self.plan
    }

    pub fn splitters(&self) -> &[LocalOperator] {
        &self.splitters
    }

    pub fn to_dense(&self) -> Result<DenseOperator> {
        let mut u = DenseOperator::identity(self.space);
        for s in &self.splitters {
            u = s.to_dense(&self.space)?.compose(&u)?;
        }
        Ok(u)
    }
}

impl UnitaryAction for EdGate {
    fn space(&self) -> &HilbertSpace {
        &self.space
    }

    fn apply(&self, state: &StateVector) -> Result<StateVector> {
        self.splitters.iter().try_fold(state.clone(), |psi, s| s.apply(&psi))
    }

    fn apply_adjoint(&self, state: &StateVector) -> Result<StateVector> {
        self.splitters.iter().rev().try_fold(state.clone(), |psi, s| s.adjoint().apply(&psi))
    }

    fn unitarity_error(&self) -> f64 {
        self.splitters
            .iter()
            .map(|s| {
                let m = s.matrix();
                let product = m.t().mapv(|z| z.conj()).dot(m);
                crate::fock::max_deviation_from_identity(&product)
            })
            .sum()
    }
}

/// Dense `U_ED` together with its plan.
pub fn build_ed(space: &HilbertSpace, scheme: EdScheme, n: usize) -> Result<(DenseOperator, EdPlan)> {
    if n != space.n_modes() {
        return Err(Error::invalid(format!(
            "ED over {n} cavities needs a {n}-mode space, got {} modes",
            space.n_modes()
        )));
    }
    let plan = EdPlan::new(scheme, n)?;
    let gate = EdGate::new(*space, plan.clone())?;
    Ok((gate.to_dense()?, plan))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub alpha: f64,
    /// Test states `|m, 0, ..., 0>` for `m = 0..=max_fock`.
    pub max_fock: usize,
    pub tolerance: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { alpha: 0.05, max_fock: 3, tolerance: 1e-9 }
    }
}

/// Cutoff at which the displacement check with `|alpha| <= 0.1` is limited
/// by round-off rather than truncation.
pub fn verification_cutoff(max_fock: usize) -> usize {
    max_fock + 10
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub n_cavities: usize,
    pub cutoff: usize,
    pub tolerance: f64,
    /// `max |U a_0^dagger U^dagger - N^{-1/2} sum a_n^dagger|` on low-photon basis states.
    pub conjugation_residual: f64,
    /// `max |U^dagger (sum a_n) U - sqrt(N) a_0|` on the same states.
    pub dual_residual: f64,
    /// `max |U^dagger D(alpha)^{(x)N} U |m> - D_0(sqrt(N) alpha)|m>|` over test Fock states.
    pub displacement_residual: f64,
    /// `c[n][k] = <1_n| U |1_k>`, as (re, im).
    pub coefficients: Vec<Vec<(f64, f64)>>,
    /// `max_n | sum_{k>=1} |c[n][k]|^2 - (1 - 1/N) |`.
    pub sum_rule_residual: f64,
    pub unitarity_residual: f64,
    pub passed: bool,
}

fn single_photon(space: &HilbertSpace, mode: usize) -> Result<StateVector> {
    let mut occ = vec![0; space.n_modes()];
    occ[mode] = 1;
    number_state(space, &occ)
}

fn sum_ladder(psi: &StateVector, kind: Ladder, weight: f64) -> Result<Array1<Complex64>> {
    let mut acc = Array1::zeros(psi.space().dim());
    for mode in 0..psi.space().n_modes() {
        acc += psi.apply_ladder(mode, kind)?.amplitudes();
    }
    Ok(acc.mapv(|z| z * weight))
}

fn max_diff(a: &Array1<Complex64>, b: &Array1<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn single_mode_displacement(cutoff: usize, mode: usize, alpha: f64) -> Result<LocalOperator> {
    let mut generator = Array2::<Complex64>::zeros((cutoff, cutoff));
    for n in 1..cutoff {
        let amp = alpha * (n as f64).sqrt();
        generator[[n, n - 1]] = Complex64::new(amp, 0.0);
        generator[[n - 1, n]] = Complex64::new(-amp, 0.0);
    }
    LocalOperator::new(cutoff, vec![mode], expm(&generator))
}

/// Checks the defining relations of an ED unitary on `N` cavities.
pub fn verify_ed<U: UnitaryAction>(u: &U, n: usize, options: &VerifyOptions) -> Result<VerificationReport> {
    let space = *u.space();
    if space.n_modes() != n {
        return Err(Error::invalid(format!("{n} cavities on a {}-mode space", space.n_modes())));
    }
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();

    let max_photons = (space.cutoff() - 2).min(2);
    let mut conjugation_residual = 0.0f64;
    let mut dual_residual = 0.0f64;
    for index in (0..space.dim()).filter(|&i| space.total_photons(i) <= max_photons) {
        let basis = number_state(&space, &space.occupations(index))?;

        let lhs = u.apply(&u.apply_adjoint(&basis)?.apply_ladder(0, Ladder::Raising)?)?;
        let rhs = sum_ladder(&basis, Ladder::Raising, inv_sqrt_n)?;
        conjugation_residual = conjugation_residual.max(max_diff(lhs.amplitudes(), &rhs));

        let forward = u.apply(&basis)?;
        let lowered = StateVector::new(space, sum_ladder(&forward, Ladder::Lowering, 1.0)?)?;
        let lhs = u.apply_adjoint(&lowered)?;
        let rhs = basis.apply_ladder(0, Ladder::Lowering)?.amplitudes().mapv(|z| z * (n as f64).sqrt());
        dual_residual = dual_residual.max(max_diff(lhs.amplitudes(), &rhs));
    }

    let cutoff = space.cutoff();
    let per_mode =
        (0..n).map(|mode| single_mode_displacement(cutoff, mode, options.alpha)).collect::<Result<Vec<_>>>()?;
    let enhanced = single_mode_displacement(cutoff, 0, options.alpha * (n as f64).sqrt())?;
    let mut displacement_residual = 0.0f64;
    for m in 0..=options.max_fock.min(cutoff - 1) {
        let mut occ = vec![0; n];
        occ[0] = m;
        let fock = number_state(&space, &occ)?;
        let mut psi = u.apply(&fock)?;
        for d in &per_mode {
            psi = d.apply(&psi)?;
        }
        let lhs = u.apply_adjoint(&psi)?;
        let rhs = enhanced.apply(&fock)?;
        displacement_residual = displacement_residual.max(lhs.max_abs_diff(&rhs));
    }

    let singles = (0..n).map(|k| single_photon(&space, k)).collect::<Result<Vec<_>>>()?;
    let images = singles.iter().map(|s| u.apply(s)).collect::<Result<Vec<_>>>()?;
    let coefficients: Vec<Vec<Complex64>> =
        singles.iter().map(|row| images.iter().map(|col| row.inner(col)).collect()).collect();
    let spectator_target = 1.0 - 1.0 / n as f64;
    let sum_rule_residual = coefficients
        .iter()
        .map(|row| (row.iter().skip(1).map(|c| c.norm_sqr()).sum::<f64>() - spectator_target).abs())
        .fold(0.0, f64::max);

    let unitarity_residual = u.unitarity_error();
    let tol = options.tolerance;
    let passed =
        [conjugation_residual, dual_residual, displacement_residual, sum_rule_residual].iter().all(|r| *r < tol)
            && unitarity_residual < 1e-10;

    Ok(VerificationReport {
        n_cavities: n,
        cutoff,
        tolerance: tol,
        conjugation_residual,
        dual_residual,
        displacement_residual,
        coefficients: coefficients.iter().map(|r| r.iter().map(|c| (c.re, c.im)).collect()).collect(),
        sum_rule_residual,
        unitarity_residual,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{ladder, make_space};
    use std::f64::consts::PI;

    /// `U^dagger a U` evaluated densely, returned as the coefficients on
    /// `(a, b)` read from single-photon matrix elements.
    fn heisenberg_coefficients(spec: &BeamsplitterSpec) -> (Complex64, Complex64) {
        let space = make_space(2, 3).unwrap();
        let u = beamsplitter_unitary(&space, spec).unwrap();
        let a = ladder(&space, 0, Ladder::Lowering).unwrap();
        let conj = u.adjoint().compose(&a).unwrap().compose(&u).unwrap();
        let vac = number_state(&space, &[0, 0]).unwrap();
        let one_a = number_state(&space, &[1, 0]).unwrap();
        let one_b = number_state(&space, &[0, 1]).unwrap();
        let on_a = conj.apply(&one_a).unwrap();
        let on_b = conj.apply(&one_b).unwrap();
        (vac.inner(&on_a), vac.inner(&on_b))
    }

    #[test]
    fn zero_angle_is_identity() {
        let space = make_space(2, 4).unwrap();
        let spec = BeamsplitterSpec::new(0, 1, 0.0, 0.3).unwrap();
        let u = beamsplitter_unitary(&space, &spec).unwrap();
        assert!(u.max_abs_diff(&DenseOperator::identity(space)) < 1e-15);
    }

    #[test]
    fn fifty_fifty_mixes_with_quarter_phase() {
        let spec = BeamsplitterSpec::new(0, 1, PI / 4.0, 0.0).unwrap();
        let (ca, cb) = heisenberg_coefficients(&spec);
        let r = 1.0 / 2f64.sqrt();
        assert!((ca - Complex64::new(r, 0.0)).norm() < 1e-12);
        assert!((cb - Complex64::new(0.0, r)).norm() < 1e-12);
    }

    #[test]
    fn full_swap_picks_up_i() {
        let spec = BeamsplitterSpec::new(0, 1, PI / 2.0, 0.0).unwrap();
        let (ca, cb) = heisenberg_coefficients(&spec);
        assert!(ca.norm() < 1e-12);
        assert!((cb - Complex64::i()).norm() < 1e-12);
    }

    #[test]
    fn general_angles_follow_mode_mixing_law() {
        let (theta, phi) = (0.7, 1.1);
        let spec = BeamsplitterSpec::new(0, 1, theta, phi).unwrap();
        let (ca, cb) = heisenberg_coefficients(&spec);
        assert!((ca - Complex64::new(theta.cos(), 0.0)).norm() < 1e-12);
        let want = Complex64::i() * Complex64::from_polar(1.0, phi) * theta.sin();
        assert!((cb - want).norm() < 1e-12);
    }

    #[test]
    fn plans_have_n_minus_one_splitters() {
        for n in 1..=8 {
            assert_eq!(EdPlan::new(EdScheme::Linear, n).unwrap().sequence.len(), n - 1);
        }
        for n in [1, 2, 4, 8] {
            let plan = EdPlan::new(EdScheme::Binary, n).unwrap();
            assert_eq!(plan.sequence.len(), n - 1);
            assert_eq!(plan.depth(), n.trailing_zeros() as usize);
        }
        assert_eq!(EdPlan::new(EdScheme::Binary, 3), Err(Error::UnsupportedCavityCount(3)));
    }

    #[test]
    fn two_cavity_coefficients_are_real_and_equal() {
        let space = make_space(2, 3).unwrap();
        let (u, _) = build_ed(&space, EdScheme::Linear, 2).unwrap();
        let out = u.apply(&number_state(&space, &[1, 0]).unwrap()).unwrap();
        let r = 1.0 / 2f64.sqrt();
        for occ in [[1, 0], [0, 1]] {
            let idx = space.index_of(&occ).unwrap();
            assert!((out.amplitudes()[idx] - Complex64::new(r, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn single_cavity_plan_is_identity() {
        let space = make_space(1, 5).unwrap();
        let (u, plan) = build_ed(&space, EdScheme::Binary, 1).unwrap();
        assert!(plan.sequence.is_empty());
        assert!(u.max_abs_diff(&DenseOperator::identity(space)) < 1e-15);
    }

    #[test]
    fn identity_fails_verification() {
        let space = make_space(2, 6).unwrap();
        let report = verify_ed(&DenseOperator::identity(space), 2, &VerifyOptions::default()).unwrap();
        assert!(!report.passed);
        assert!(report.conjugation_residual > 0.1);
    }

    #[test]
    fn dense_and_plan_backed_agree() {
        let space = make_space(3, 4).unwrap();
        let plan = EdPlan::new(EdScheme::Linear, 3).unwrap();
        let gate = EdGate::new(space, plan).unwrap();
        let dense = gate.to_dense().unwrap();
        let psi = number_state(&space, &[2, 1, 0]).unwrap();
        let a = UnitaryAction::apply(&gate, &psi).unwrap();
        let b = UnitaryAction::apply(&dense, &psi).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-13);
        assert!(dense.unitarity_error() < 1e-12);
    }

    #[test]
    fn two_cavity_ed_verifies() {
        let space = make_space(2, verification_cutoff(3)).unwrap();
        let (u, _) = build_ed(&space, EdScheme::Linear, 2).unwrap();
        let report = verify_ed(&u, 2, &VerifyOptions::default()).unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn ed_duration_from_depth() {
        let plan = EdPlan::new(EdScheme::Binary, 8).unwrap();
        let g = 2.0 * PI * 1e6;
        assert!((plan.duration(g) - 3.0 * (PI / 4.0) / g).abs() < 1e-18);
    }
}
