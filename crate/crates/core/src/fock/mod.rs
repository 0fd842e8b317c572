//! Truncated multi-mode bosonic Fock spaces.
//!
//! Basis states are tensor products `|n_0, n_1, ..., n_{N-1}>` with every
//! mode truncated to levels `0..cutoff`. Mode 0 is the primary cavity, the
//! one coupled to the readout qubit. The flat basis index puts mode 0 in the
//! most significant digit.

mod expm;
mod local;

pub use expm::expm;
pub use local::LocalOperator;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_DIMENSION_CEILING: usize = 65_536;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct HilbertSpace {
    n_modes: usize,
    cutoff: usize,
    dim: usize,
}

/// Validated space with the default dimension ceiling.
pub fn make_space(n_modes: usize, cutoff: usize) -> Result<HilbertSpace> {
    HilbertSpace::new(n_modes, cutoff)
}

impl HilbertSpace {
    pub fn new(n_modes: usize, cutoff: usize) -> Result<Self> {
        Self::with_ceiling(n_modes, cutoff, DEFAULT_DIMENSION_CEILING)
    }

    pub fn with_ceiling(n_modes: usize, cutoff: usize, ceiling: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::invalid("a Hilbert space needs at least one mode"));
        }
        if cutoff < 2 {
            return Err(Error::invalid(format!("cutoff must be at least 2, got {cutoff}")));
        }
        let dimension = (cutoff as u128).checked_pow(n_modes as u32).unwrap_or(u128::MAX);
        if dimension > ceiling as u128 {
            return Err(Error::DimensionCeilingExceeded { dimension, ceiling });
        }
        Ok(Self { n_modes, cutoff, dim: dimension as usize })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Distance in the flat index between neighbouring levels of `mode`.
    pub fn stride(&self, mode: usize) -> usize {
        self.cutoff.pow((self.n_modes - 1 - mode) as u32)
    }

    /// Fock level of `mode` in basis state `index`.
    pub fn level(&self, index: usize, mode: usize) -> usize {
        (index / self.stride(mode)) % self.cutoff
    }

    pub fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes {
            return Err(Error::invalid(format!("mode {mode} out of range for a {}-mode space", self.n_modes)));
        }
        Ok(())
    }

    pub fn index_of(&self, occupations: &[usize]) -> Result<usize> {
        if occupations.len() != self.n_modes {
            return Err(Error::invalid(format!("expected {} occupations, got {}", self.n_modes, occupations.len())));
        }
        occupations.iter().try_fold(0usize, |acc, &n| {
            if n >= self.cutoff {
                Err(Error::invalid(format!("occupation {n} not below cutoff {}", self.cutoff)))
            } else {
                Ok(acc * self.cutoff + n)
            }
        })
    }

    pub fn occupations(&self, index: usize) -> Vec<usize> {
        (0..self.n_modes).map(|mode| self.level(index, mode)).collect()
    }

    pub fn total_photons(&self, index: usize) -> usize {
        (0..self.n_modes).map(|mode| self.level(index, mode)).sum()
    }

    /// Levels of `mode` for every basis index, in index order.
    pub(crate) fn levels_of(&self, mode: usize) -> Vec<usize> {
        let stride = self.stride(mode);
        (0..self.dim).map(|i| (i / stride) % self.cutoff).collect()
    }

    fn same_space(&self, other: &HilbertSpace) -> Result<()> {
        if self != other {
            return Err(Error::invalid(format!(
                "space mismatch: {}x{} vs {}x{}",
                self.n_modes, self.cutoff, other.n_modes, other.cutoff
            )));
        }
        Ok(())
    }
}

/// Anything with diagonal populations over a [`HilbertSpace`].
pub trait Populations {
    fn space(&self) -> &HilbertSpace;
    fn basis_population(&self, index: usize) -> f64;

    /// Marginal probability that `mode` holds exactly `level` photons.
    fn mode_population(&self, mode: usize, level: usize) -> f64 {
        let space = self.space();
        (0..space.dim()).filter(|&i| space.level(i, mode) == level).map(|i| self.basis_population(i)).sum()
    }

    fn mean_occupation(&self, mode: usize) -> f64 {
        let space = self.space();
        (0..space.dim()).map(|i| space.level(i, mode) as f64 * self.basis_population(i)).sum()
    }
}

/// Total population sitting in the top Fock level of any mode.
///
/// Truncation is only trustworthy while this stays small.
pub fn leakage<S: Populations + ?Sized>(state: &S) -> f64 {
    let space = *state.space();
    let top = space.cutoff() - 1;
    (0..space.dim())
        .filter(|&i| (0..space.n_modes()).any(|mode| space.level(i, mode) == top))
        .map(|i| state.basis_population(i))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: HilbertSpace,
    amplitudes: Array1<Complex64>,
}

impl StateVector {
    pub fn new(space: HilbertSpace, amplitudes: Array1<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::invalid(format!(
                "state of length {} does not fit a space of dimension {}",
                amplitudes.len(),
                space.dim()
            )));
        }
        Ok(Self { space, amplitudes })
    }

    pub fn vacuum(space: HilbertSpace) -> Self {
        let mut amplitudes = Array1::zeros(space.dim());
        amplitudes[0] = ONE;
        Self { space, amplitudes }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &Array1<Complex64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.iter().zip(other.amplitudes.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amplitudes.iter().zip(other.amplitudes.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `a|psi>` or `a^dagger|psi>` in O(dim), without a dense operator.
    pub fn apply_ladder(&self, mode: usize, kind: Ladder) -> Result<StateVector> {
        self.space.check_mode(mode)?;
        let stride = self.space.stride(mode);
        let top = self.space.cutoff() - 1;
        let mut out = Array1::zeros(self.space.dim());
        for (index, &amp) in self.amplitudes.iter().enumerate() {
            let n = self.space.level(index, mode);
            match kind {
                Ladder::Lowering if n > 0 => {
                    out[index - stride] = amp * (n as f64).sqrt();
                }
                Ladder::Raising if n < top => {
                    out[index + stride] = amp * ((n + 1) as f64).sqrt();
                }
                _ => {}
            }
        }
        Ok(StateVector { space: self.space, amplitudes: out })
    }
}

impl Populations for StateVector {
    fn space(&self) -> &HilbertSpace {
        &self.space
    }

    fn basis_population(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }
}

/// Unit basis vector `|n_0, ..., n_{N-1}>`.
pub fn number_state(space: &HilbertSpace, occupations: &[usize]) -> Result<StateVector> {
    let index = space.index_of(occupations)?;
    let mut amplitudes = Array1::zeros(space.dim());
    amplitudes[index] = ONE;
    Ok(StateVector { space: *space, amplitudes })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: HilbertSpace,
    matrix: Array2<Complex64>,
}

impl DensityMatrix {
    pub fn new(space: HilbertSpace, matrix: Array2<Complex64>) -> Result<Self> {
        if matrix.dim() != (space.dim(), space.dim()) {
            return Err(Error::invalid(format!(
                "density matrix of shape {:?} does not fit a space of dimension {}",
                matrix.dim(),
                space.dim()
            )));
        }
        Ok(Self { space, matrix })
    }

    pub fn from_pure(state: &StateVector) -> Self {
        let psi = state.amplitudes();
        let dim = psi.len();
        let matrix = Array2::from_shape_fn((dim, dim), |(i, j)| psi[i] * psi[j].conj());
        Self { space: *state.space(), matrix }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.matrix
    }

    pub fn into_matrix(self) -> Array2<Complex64> {
        self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.diag().sum()
    }

    /// `max |rho - rho^dagger|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.space.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.matrix[[i, j]] - self.matrix[[j, i]].conj()).norm());
            }
        }
        worst
    }

    /// Replace rho by (rho + rho^dagger)/2, returning the deviation removed.
    pub fn symmetrize(&mut self) -> f64 {
        let n = self.space.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let a = self.matrix[[i, j]];
                let b = self.matrix[[j, i]].conj();
                worst = worst.max((a - b).norm());
                let mean = (a + b) * 0.5;
                self.matrix[[i, j]] = mean;
                self.matrix[[j, i]] = mean.conj();
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part. Expensive; meant for
    /// on-demand validity checks rather than every step.
    pub fn min_eigenvalue(&self) -> f64 {
        let n = self.space.dim();
        let hermitian =
            nalgebra::DMatrix::from_fn(n, n, |i, j| (self.matrix[[i, j]] + self.matrix[[j, i]].conj()) * 0.5);
        hermitian.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `Re tr(op * rho)`.
    pub fn expectation(&self, op: &DenseOperator) -> Result<f64> {
        self.space.same_space(op.space())?;
        Ok(trace_product(op.matrix(), &self.matrix).re)
    }

    /// `<psi| rho |psi>`.
    pub fn overlap_with(&self, psi: &StateVector) -> Result<f64> {
        self.space.same_space(psi.space())?;
        let v = psi.amplitudes();
        let rho_psi = self.matrix.dot(v);
        Ok(v.iter().zip(rho_psi.iter()).map(|(a, b)| a.conj() * b).sum::<Complex64>().re)
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.matrix.iter().zip(other.matrix.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

impl Populations for DensityMatrix {
    fn space(&self) -> &HilbertSpace {
        &self.space
    }

    fn basis_population(&self, index: usize) -> f64 {
        self.matrix[[index, index]].re
    }
}

/// `tr(a * b)` without forming the product.
pub(crate) fn trace_product(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Complex64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        let row = a.row(i);
        let col = b.column(i);
        for k in 0..n {
            acc += row[k] * col[k];
        }
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    space: HilbertSpace,
    matrix: Array2<Complex64>,
}

impl DenseOperator {
    pub fn new(space: HilbertSpace, matrix: Array2<Complex64>) -> Result<Self> {
        if matrix.dim() != (space.dim(), space.dim()) {
            return Err(Error::invalid(format!(
                "operator of shape {:?} does not fit a space of dimension {}",
                matrix.dim(),
                space.dim()
            )));
        }
        Ok(Self { space, matrix })
    }

    pub fn identity(space: HilbertSpace) -> Self {
        Self { space, matrix: Array2::eye(space.dim()) }
    }

    pub fn zeros(space: HilbertSpace) -> Self {
        Self { space, matrix: Array2::zeros((space.dim(), space.dim())) }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self { space: self.space, matrix: self.matrix.t().mapv(|z| z.conj()) }
    }

    /// `self * other`.
    pub fn compose(&self, other: &DenseOperator) -> Result<Self> {
        self.space.same_space(&other.space)?;
        Ok(Self { space: self.space, matrix: self.matrix.dot(&other.matrix) })
    }

    pub fn add(&self, other: &DenseOperator) -> Result<Self> {
        self.space.same_space(&other.space)?;
        Ok(Self { space: self.space, matrix: &self.matrix + &other.matrix })
    }

    pub fn sub(&self, other: &DenseOperator) -> Result<Self> {
        self.space.same_space(&other.space)?;
        Ok(Self { space: self.space, matrix: &self.matrix - &other.matrix })
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self { space: self.space, matrix: self.matrix.mapv(|z| z * factor) }
    }

    pub fn commutator(&self, other: &DenseOperator) -> Result<Self> {
        self.compose(other)?.sub(&other.compose(self)?)
    }

    pub fn exp(&self) -> Self {
        Self { space: self.space, matrix: expm(&self.matrix) }
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        self.space.same_space(state.space())?;
        Ok(StateVector { space: self.space, amplitudes: self.matrix.dot(state.amplitudes()) })
    }

    /// `U rho U^dagger`.
    pub fn conjugate(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.space.same_space(rho.space())?;
        let left = self.matrix.dot(rho.matrix());
        let matrix = left.dot(&self.matrix.t().mapv(|z| z.conj()));
        Ok(DensityMatrix { space: self.space, matrix })
    }

    /// `max |U^dagger U - I|`.
    pub fn unitarity_error(&self) -> f64 {
        let product = self.adjoint().matrix.dot(&self.matrix);
        max_deviation_from_identity(&product)
    }

    pub fn max_abs_diff(&self, other: &DenseOperator) -> f64 {
        self.matrix.iter().zip(other.matrix.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn max_deviation_from_identity(m: &Array2<Complex64>) -> f64 {
    m.indexed_iter().map(|((i, j), z)| if i == j { (z - ONE).norm() } else { z.norm() }).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Lowering,
    Raising,
}

/// Truncated `a` or `a^dagger` on one mode, identity elsewhere.
pub fn ladder(space: &HilbertSpace, mode: usize, kind: Ladder) -> Result<DenseOperator> {
    space.check_mode(mode)?;
    let stride = space.stride(mode);
    let mut matrix = Array2::zeros((space.dim(), space.dim()));
    for index in 0..space.dim() {
        let n = space.level(index, mode);
        if n > 0 {
            // <n-1| a |n> = sqrt(n)
            matrix[[index - stride, index]] = Complex64::new((n as f64).sqrt(), 0.0);
        }
    }
    let lowering = DenseOperator { space: *space, matrix };
    Ok(match kind {
        Ladder::Lowering => lowering,
        Ladder::Raising => lowering.adjoint(),
    })
}

pub fn number_operator(space: &HilbertSpace, mode: usize) -> Result<DenseOperator> {
    space.check_mode(mode)?;
    let mut matrix = Array2::zeros((space.dim(), space.dim()));
    for index in 0..space.dim() {
        matrix[[index, index]] = Complex64::new(space.level(index, mode) as f64, 0.0);
    }
    Ok(DenseOperator { space: *space, matrix })
}

/// `D(alpha) = exp(alpha a^dagger - alpha^* a)` on `mode`, by matrix
/// exponential of the truncated generator.
pub fn displacement(space: &HilbertSpace, mode: usize, alpha: Complex64) -> Result<DenseOperator> {
    if !alpha.re.is_finite() || !alpha.im.is_finite() {
        return Err(Error::invalid("displacement amplitude must be finite"));
    }
    let raising = ladder(space, mode, Ladder::Raising)?;
    let lowering = raising.adjoint();
    let generator = raising.scale(alpha).sub(&lowering.scale(alpha.conj()))?;
    Ok(generator.exp())
}
