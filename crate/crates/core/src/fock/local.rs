//! Operators supported on one or two modes, applied without forming the
//! full tensor-product matrix. Left or right multiplication of a D x D
//! matrix costs O(D^2 L) for a local dimension L instead of O(D^3).

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use super::{DenseOperator, DensityMatrix, HilbertSpace, StateVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LocalOperator {
    modes: Vec<usize>,
    matrix: Array2<Complex64>,
}

struct Layout {
    /// Flat offsets of the local basis states.
    offsets: Vec<usize>,
    /// Flat indices where every acted-on mode sits in its vacuum.
    bases: Vec<usize>,
}

impl LocalOperator {
    /// `matrix` acts on the local basis `|n_a>` (one mode) or `|n_a, n_b>`
    /// with `n_a` the major digit (two modes).
    pub fn new(cutoff: usize, modes: Vec<usize>, matrix: Array2<Complex64>) -> Result<Self> {
        let local_dim = cutoff.pow(modes.len() as u32);
        if modes.is_empty() || modes.len() > 2 {
            return Err(Error::invalid("local operators act on one or two modes"));
        }
        if modes.len() == 2 && modes[0] == modes[1] {
            return Err(Error::invalid("a two-mode operator needs distinct modes"));
        }
        if matrix.dim() != (local_dim, local_dim) {
            return Err(Error::invalid(format!(
                "local matrix of shape {:?} does not match local dimension {local_dim}",
                matrix.dim()
            )));
        }
        Ok(Self { modes, matrix })
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self { modes: self.modes.clone(), matrix: self.matrix.t().mapv(|z| z.conj()) }
    }

    /// `self * other` for operators on the same modes.
    pub fn then_after(&self, other: &LocalOperator) -> Result<Self> {
        if self.modes != other.modes {
            return Err(Error::invalid("local operators act on different modes"));
        }
        Ok(Self { modes: self.modes.clone(), matrix: self.matrix.dot(&other.matrix) })
    }

    fn layout(&self, space: &HilbertSpace) -> Result<Layout> {
        for &mode in &self.modes {
            space.check_mode(mode)?;
        }
        let c = space.cutoff();
        let offsets: Vec<usize> = match self.modes.as_slice() {
            [a] => (0..c).map(|n| n * space.stride(*a)).collect(),
            [a, b] => {
                let (sa, sb) = (space.stride(*a), space.stride(*b));
                (0..c * c).map(|l| (l / c) * sa + (l % c) * sb).collect()
            }
            _ => unreachable!(),
        };
        let expected = c.pow(self.modes.len() as u32);
        if self.matrix.nrows() != expected {
            return Err(Error::invalid("local operator built for a different cutoff"));
        }
        let bases = (0..space.dim()).filter(|&i| self.modes.iter().all(|&m| space.level(i, m) == 0)).collect();
        Ok(Layout { offsets, bases })
    }

    pub fn to_dense(&self, space: &HilbertSpace) -> Result<DenseOperator> {
        let mut identity = Array2::eye(space.dim());
        self.left_multiply(space, &mut identity)?;
        DenseOperator::new(*space, identity)
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        let space = *state.space();
        let layout = self.layout(&space)?;
        let src = state.amplitudes();
        let mut out = Array1::zeros(space.dim());
        for &base in &layout.bases {
            for (l, &off) in layout.offsets.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, &off_k) in layout.offsets.iter().enumerate() {
                    acc += self.matrix[[l, k]] * src[base + off_k];
                }
                out[base + off] = acc;
            }
        }
        StateVector::new(space, out)
    }

    /// `x <- M x` for a square matrix over the full space.
    pub(crate) fn left_multiply(&self, space: &HilbertSpace, x: &mut Array2<Complex64>) -> Result<()> {
        let layout = self.layout(space)?;
        let dim = space.dim();
        let local = layout.offsets.len();
        let mut scratch = vec![Complex64::new(0.0, 0.0); local * dim];
        let data = x.as_slice_mut().expect("standard layout");
        for &base in &layout.bases {
            scratch.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            for l in 0..local {
                let dst = &mut scratch[l * dim..(l + 1) * dim];
                for (k, &off_k) in layout.offsets.iter().enumerate() {
                    let coeff = self.matrix[[l, k]];
                    if coeff == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let row = &data[(base + off_k) * dim..(base + off_k + 1) * dim];
                    for (d, s) in dst.iter_mut().zip(row) {
                        *d += coeff * s;
                    }
                }
            }
            for (l, &off) in layout.offsets.iter().enumerate() {
                data[(base + off) * dim..(base + off + 1) * dim].copy_from_slice(&scratch[l * dim..(l + 1) * dim]);
            }
        }
        Ok(())
    }

    /// `x <- x M^dagger`.
    pub(crate) fn right_multiply_adjoint(&self, space: &HilbertSpace, x: &mut Array2<Complex64>) -> Result<()> {
        let layout = self.layout(space)?;
        let dim = space.dim();
        let local = layout.offsets.len();
        let conj = self.matrix.mapv(|z| z.conj());
        let mut gathered = vec![Complex64::new(0.0, 0.0); local];
        let data = x.as_slice_mut().expect("standard layout");
        for row in data.chunks_exact_mut(dim) {
            for &base in &layout.bases {
                for (k, &off_k) in layout.offsets.iter().enumerate() {
                    gathered[k] = row[base + off_k];
                }
                for (l, &off) in layout.offsets.iter().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..local {
                        acc += gathered[k] * conj[[l, k]];
                    }
                    row[base + off] = acc;
                }
            }
        }
        Ok(())
    }

    /// `rho <- M rho M^dagger` in place.
    pub fn conjugate_in_place(&self, rho: &mut DensityMatrix) -> Result<()> {
        let space = *rho.space();
        self.left_multiply(&space, rho.matrix_mut())?;
        self.right_multiply_adjoint(&space, rho.matrix_mut())
    }

    /// `op <- M^dagger op M` in place, the Heisenberg-picture update.
    pub(crate) fn heisenberg_in_place(&self, space: &HilbertSpace, op: &mut Array2<Complex64>) -> Result<()> {
        let adj = self.adjoint();
        adj.left_multiply(space, op)?;
        adj.right_multiply_adjoint(space, op)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{ladder, make_space, Ladder};

    fn local_lowering(cutoff: usize) -> Array2<Complex64> {
        let mut a = Array2::zeros((cutoff, cutoff));
        for n in 1..cutoff {
            a[[n - 1, n]] = Complex64::new((n as f64).sqrt(), 0.0);
        }
        a
    }

    #[test]
    fn embedding_matches_dense_ladder() {
        let space = make_space(3, 3).unwrap();
        for mode in 0..3 {
            let op = LocalOperator::new(3, vec![mode], local_lowering(3)).unwrap();
            let dense = ladder(&space, mode, Ladder::Lowering).unwrap();
            assert!(op.to_dense(&space).unwrap().max_abs_diff(&dense) < 1e-15);
        }
    }

    #[test]
    fn two_mode_conjugation_matches_dense_product() {
        let space = make_space(3, 3).unwrap();
        let c = 3;
        let mut m = Array2::zeros((c * c, c * c));
        for i in 0..c * c {
            for j in 0..c * c {
                m[[i, j]] = Complex64::new((i * 7 + j * 3) as f64 % 5.0 - 2.0, (i + 2 * j) as f64 % 3.0);
            }
        }
        let op = LocalOperator::new(c, vec![2, 0], m).unwrap();
        let dense = op.to_dense(&space).unwrap();
        let psi = crate::fock::number_state(&space, &[1, 2, 1]).unwrap();
        let mut probe = DensityMatrix::from_pure(&psi);
        probe.matrix_mut()[[3, 5]] = Complex64::new(0.3, -0.1);
        let want = dense.conjugate(&probe).unwrap();
        let mut got = probe.clone();
        op.conjugate_in_place(&mut got).unwrap();
        assert!(got.max_abs_diff(&want) < 1e-12);

        let applied = op.apply(&psi).unwrap();
        assert!(applied.max_abs_diff(&dense.apply(&psi).unwrap()) < 1e-12);
    }
}
