//! Dense helpers for complex Hermitian matrices.
//!
//! nalgebra's symmetric eigensolver is only exercised on real matrices here;
//! complex Hermitian matrices are mapped to their real-symmetric embedding
//! [[X, -Y], [Y, X]] (for M = X + iY), operated on, and mapped back. Matrix
//! functions of the embedding preserve the block structure, so the round trip
//! is exact up to rounding.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

/// Real-symmetric embedding of a complex Hermitian matrix.
pub fn realify(m: &CMat) -> RMat {
    let n = m.nrows();
    let mut out = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let v = m[(i, j)];
            out[(i, j)] = v.re;
            out[(i, j + n)] = -v.im;
            out[(i + n, j)] = v.im;
            out[(i + n, j + n)] = v.re;
        }
    }
    out
}

/// Inverse of [`realify`]; takes the top-left/bottom-left blocks.
pub fn complexify(m: &RMat) -> CMat {
    let n = m.nrows() / 2;
    CMat::from_fn(n, n, |i, j| Complex64::new(m[(i, j)], m[(i + n, j)]))
}

/// Eigenvalues of a complex Hermitian matrix, ascending.
///
/// The embedding doubles every eigenvalue's multiplicity; pairs are collapsed
/// by taking every other entry of the sorted spectrum.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let eig = realify(m).symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals.into_iter().step_by(2).collect()
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    let eig = realify(m).symmetric_eigen();
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Applies `f` to the spectrum of a Hermitian matrix.
fn spectral_map(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let r = realify(m);
    let eig = r.symmetric_eigen();
    let mapped = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|&v| f(v)));
    let rebuilt = &eig.eigenvectors * RMat::from_diagonal(&mapped) * eig.eigenvectors.transpose();
    hermitize(&complexify(&rebuilt))
}

/// Re-symmetrized copy: (M + M^H)/2.
pub fn hermitize(m: &CMat) -> CMat {
    let n = m.nrows();
    CMat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

/// Hermitian PSD square root, with negative eigenvalues clipped at zero.
pub fn hermitian_sqrt(m: &CMat) -> CMat {
    spectral_map(m, |v| if v > 0.0 { v.sqrt() } else { 0.0 })
}

/// Projects onto the PSD cone by eigenvalue clipping, then re-symmetrizes.
pub fn psd_project(m: &CMat) -> CMat {
    spectral_map(m, |v| v.max(0.0))
}

/// Stacks the real and imaginary parts of `M` into a 2n x n real map so that
/// ||stack(M) r||^2 = r^T M^H M r for real vectors r.
pub fn real_stack(m: &CMat) -> RMat {
    let (rows, cols) = m.shape();
    let mut out = RMat::zeros(2 * rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            out[(i, j)] = m[(i, j)].re;
            out[(i + rows, j)] = m[(i, j)].im;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;

    fn random_hermitian(n: usize, seed: u64) -> CMat {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g = CMat::from_fn(n, n, |_, _| C::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let g2: CMat = &g + g.adjoint();
        hermitize(&g2)
    }

    #[test]
    fn sqrt_squares_back() {
        let h = random_hermitian(5, 1);
        let psd = &h * h.adjoint(); // guaranteed PSD
        let s = hermitian_sqrt(&psd);
        let err = (&s * &s - &psd).norm() / psd.norm();
        assert!(err < 1e-10, "err {err}");
    }

    #[test]
    fn projection_is_psd_and_fixes_psd_inputs() {
        let h = random_hermitian(6, 2);
        let p = psd_project(&h);
        assert!(min_eigenvalue(&p) >= -1e-12 * p.norm());
        let already = &h * h.adjoint();
        assert!((psd_project(&already) - &already).norm() < 1e-10 * already.norm());
    }

    #[test]
    fn real_stack_preserves_quadratic_form() {
        let h = random_hermitian(4, 3);
        let psd = &h * h.adjoint();
        let s = hermitian_sqrt(&psd);
        let stacked = real_stack(&s);
        let r = RVec::from_vec(vec![0.3, -1.2, 0.7, 2.0]);
        let lhs = (&stacked * &r).norm_squared();
        let rc = CVec::from_iterator(4, r.iter().map(|&v| C::new(v, 0.0)));
        let rhs = (rc.adjoint() * &psd * &rc)[(0, 0)].re;
        assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0));
    }
}
