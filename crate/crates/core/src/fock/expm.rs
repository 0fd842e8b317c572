//! Matrix exponential by scaling and squaring with a truncated Taylor series.
//!
//! The generators met in this crate (displacements, beamsplitters) are
//! anti-Hermitian with modest norm, so after scaling to `||A/2^s||_1 <= 1/2`
//! the series converges in well under 20 terms to the 1e-16 level.

use ndarray::Array2;
use num_complex::Complex64;

const SCALED_NORM_TARGET: f64 = 0.5;
const SERIES_TOLERANCE: f64 = 1e-17;
const MAX_TERMS: usize = 60;

pub(crate) fn one_norm(a: &Array2<Complex64>) -> f64 {
    a.columns().into_iter().map(|col| col.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// `exp(a)` for a square complex matrix.
pub fn expm(a: &Array2<Complex64>) -> Array2<Complex64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return Array2::zeros((0, 0));
    }

    let norm = one_norm(a);
    let squarings = if norm > SCALED_NORM_TARGET { (norm / SCALED_NORM_TARGET).log2().ceil() as i32 } else { 0 };
    let scaled = a.mapv(|z| z / 2f64.powi(squarings));

    let mut result = Array2::<Complex64>::eye(n);
    let mut term = Array2::<Complex64>::eye(n);
    for k in 1..MAX_TERMS {
        term = term.dot(&scaled).mapv(|z| z / k as f64);
        result += &term;
        if one_norm(&term) <= SERIES_TOLERANCE * one_norm(&result) {
            break;
        }
    }

    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_matrix_gives_identity() {
        let z = Array2::<Complex64>::zeros((4, 4));
        let e = expm(&z);
        assert_eq!(e, Array2::eye(4));
    }

    #[test]
    fn diagonal_matches_scalar_exponentials() {
        let mut a = Array2::<Complex64>::zeros((3, 3));
        a[[0, 0]] = c(1.5, 0.0);
        a[[1, 1]] = c(-2.0, 0.7);
        a[[2, 2]] = c(0.0, 12.0);
        let e = expm(&a);
        for i in 0..3 {
            let want = a[[i, i]].exp();
            assert!((e[[i, i]] - want).norm() < 1e-12 * want.norm().max(1.0));
        }
    }

    #[test]
    fn rotation_generator() {
        // exp(theta * [[0, -1], [1, 0]]) is a plane rotation.
        let theta = 2.3;
        let mut a = Array2::<Complex64>::zeros((2, 2));
        a[[0, 1]] = c(-theta, 0.0);
        a[[1, 0]] = c(theta, 0.0);
        let e = expm(&a);
        assert!((e[[0, 0]] - c(theta.cos(), 0.0)).norm() < 1e-13);
        assert!((e[[1, 0]] - c(theta.sin(), 0.0)).norm() < 1e-13);
        assert!((e[[0, 1]] + c(theta.sin(), 0.0)).norm() < 1e-13);
    }

    #[test]
    fn nilpotent_series_terminates_exactly() {
        let mut a = Array2::<Complex64>::zeros((3, 3));
        a[[0, 1]] = c(2.0, 0.0);
        a[[1, 2]] = c(3.0, 0.0);
        let e = expm(&a);
        // I + A + A^2/2, A^2 has a single entry 6 at (0, 2).
        assert!((e[[0, 2]] - c(3.0, 0.0)).norm() < 1e-13);
        assert!((e[[0, 1]] - c(2.0, 0.0)).norm() < 1e-13);
    }
}
