//! Hermitian spectral decomposition and continuous functional calculus.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::matrix::{matmul, ComplexMatrix, C64, ZERO};

/// Eigen-decomposition `a = V diag(λ) V*` of a hermitian matrix, eigenvalues
/// ascending.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigh {
    /// Rebuilds `V f(Λ) V*`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let v = self.vectors.as_dmatrix();
        let n = v.nrows();
        let mut scaled = v.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let w = C64::new(f(lam), 0.0);
            for i in 0..n {
                scaled[(i, j)] *= w;
            }
        }
        ComplexMatrix::wrap(matmul(&scaled, &v.adjoint()))
    }

    pub fn vector(&self, j: usize) -> Vec<C64> {
        self.vectors.col(j)
    }
}

fn check_input(a: &ComplexMatrix) -> Result<()> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Eigen-decomposition of the hermitian part `(a + a*)/2`.
pub fn eigh(a: &ComplexMatrix) -> Result<Eigh> {
    check_input(a)?;
    Ok(eigh_unchecked(a))
}

pub(crate) fn eigh_unchecked(a: &ComplexMatrix) -> Eigh {
    let h = a.hermitian_part().into_dmatrix();
    let n = h.nrows();
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Eigh {
        values,
        vectors: ComplexMatrix::wrap(vectors),
    }
}

/// Smallest eigenvalue of the hermitian part of `a`.
pub fn min_eigenvalue(a: &ComplexMatrix) -> Result<f64> {
    check_input(a)?;
    Ok(min_eigenvalue_unchecked(a))
}

pub(crate) fn min_eigenvalue_unchecked(a: &ComplexMatrix) -> f64 {
    SymmetricEigen::new(a.hermitian_part().into_dmatrix())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn max_eigenvalue_unchecked(a: &ComplexMatrix) -> f64 {
    SymmetricEigen::new(a.hermitian_part().into_dmatrix())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Sorted eigenvalues of the hermitian part.
pub fn eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    check_input(a)?;
    let mut v: Vec<f64> = SymmetricEigen::new(a.hermitian_part().into_dmatrix())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Applies a real function to the spectrum of the hermitian part of `a`.
pub fn functional_calculus(a: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    Ok(eigh(a)?.apply(f))
}

/// `(a − ε)₊`: the positive part of `a − ε·1`.
pub fn positive_part_shift(a: &ComplexMatrix, eps: f64) -> Result<ComplexMatrix> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "shift must be positive, got {eps}"
        )));
    }
    functional_calculus(a, |t| (t - eps).max(0.0))
}

/// The continuous cutoff that vanishes on `[0, δ]`, equals 1 on `[ε, ∞)` and is
/// linear in between.
pub fn cutoff(t: f64, delta: f64, eps: f64) -> f64 {
    if t <= delta {
        0.0
    } else if t >= eps {
        1.0
    } else {
        (t - delta) / (eps - delta)
    }
}

/// `φ(b)` for the piecewise-linear cutoff `φ` of [`cutoff`].
pub fn cutoff_apply(b: &ComplexMatrix, delta: f64, eps: f64) -> Result<ComplexMatrix> {
    if !(delta >= 0.0) || !(delta < eps) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "cutoff needs 0 <= delta < eps, got delta={delta}, eps={eps}"
        )));
    }
    functional_calculus(b, |t| cutoff(t, delta, eps))
}

/// Square root of a positive semidefinite matrix (negative round-off clipped).
pub fn sqrt_psd(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    functional_calculus(a, |t| t.max(0.0).sqrt())
}

/// `a^{-1/2}` for positive definite `a`.
pub fn inv_sqrt_pd(a: &ComplexMatrix, floor: f64) -> Result<ComplexMatrix> {
    let e = eigh(a)?;
    let lo = e.values[0];
    if lo <= floor {
        return Err(Error::HypothesisFailed(format!(
            "matrix is not invertible (min eigenvalue {lo:.3e})"
        )));
    }
    Ok(e.apply(|t| 1.0 / t.sqrt()))
}

/// Spectral projection of the hermitian part of `a` onto eigenvalues `<= level`.
pub fn spectral_projection_below(a: &ComplexMatrix, level: f64) -> Result<ComplexMatrix> {
    functional_calculus(a, |t| if t <= level { 1.0 } else { 0.0 })
}

/// `exp(i t h)` for hermitian `h`.
pub fn expi_hermitian(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let e = eigh(h)?;
    let v = e.vectors.as_dmatrix();
    let n = v.nrows();
    let mut scaled = v.clone();
    for (j, &lam) in e.values.iter().enumerate() {
        let phase = C64::from_polar(1.0, t * lam);
        for i in 0..n {
            scaled[(i, j)] *= phase;
        }
    }
    Ok(ComplexMatrix::wrap(matmul(&scaled, &v.adjoint())))
}

/// Orthonormal basis of the range of a (near) projection, by pivoted
/// Gram–Schmidt on its columns. Columns whose residual norm falls below
/// `cutoff` are discarded.
pub(crate) fn range_basis(p: &DMatrix<C64>, cutoff: f64) -> Vec<Vec<C64>> {
    let n = p.nrows();
    let mut residual: Vec<Vec<C64>> = (0..p.ncols())
        .map(|j| p.column(j).iter().copied().collect())
        .collect();
    let mut basis: Vec<Vec<C64>> = Vec::new();
    loop {
        let (best, norm) = residual
            .iter()
            .enumerate()
            .map(|(j, v)| (j, v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()))
            .fold(
                (usize::MAX, 0.0),
                |acc, x| if x.1 > acc.1 { x } else { acc },
            );
        if best == usize::MAX || norm <= cutoff || basis.len() == n {
            break;
        }
        let q: Vec<C64> = residual[best].iter().map(|z| z / norm).collect();
        for v in residual.iter_mut() {
            let c: C64 = q.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            for (vi, qi) in v.iter_mut().zip(q.iter()) {
                *vi -= c * qi;
            }
        }
        basis.push(q);
    }
    basis
}

pub(crate) fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub(crate) fn normalize(v: &mut [C64]) -> f64 {
    let n = vec_norm(v);
    if n > 0.0 {
        for z in v.iter_mut() {
            *z /= n;
        }
    }
    n
}

#[allow(dead_code)]
pub(crate) fn zero_vec(n: usize) -> Vec<C64> {
    vec![ZERO; n]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::haar_unitary;

    fn assert_close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) {
        let r = (a - b).max_abs();
        assert!(r <= tol, "residual {r:e} > {tol:e}");
    }

    #[test]
    fn min_eigenvalue_of_identity_and_diagonal() {
        assert!((min_eigenvalue(&ComplexMatrix::identity(3)).unwrap() - 1.0).abs() < 1e-14);
        let d = ComplexMatrix::diag(&[2.0, 0.5, 7.0]);
        assert!((min_eigenvalue(&d).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn min_eigenvalue_rejects_nonfinite() {
        let mut m = ComplexMatrix::identity(2);
        m.set(0, 1, C64::new(f64::NAN, 0.0));
        assert!(matches!(min_eigenvalue(&m), Err(Error::NonFinite)));
    }

    #[test]
    fn positive_part_shift_examples() {
        let r = positive_part_shift(&ComplexMatrix::identity(2), 0.25).unwrap();
        assert_close(&r, &ComplexMatrix::identity(2).scale(0.75), 1e-14);
        let r = positive_part_shift(&ComplexMatrix::diag(&[1.0, 0.1]), 0.5).unwrap();
        assert_close(&r, &ComplexMatrix::diag(&[0.5, 0.0]), 1e-14);
        assert!(positive_part_shift(&ComplexMatrix::identity(2), 0.0).is_err());
        // vanishes exactly when the norm is at most the shift
        let r = positive_part_shift(&ComplexMatrix::diag(&[0.3, 0.2]), 0.3).unwrap();
        assert!(r.max_abs() < 1e-15);
    }

    #[test]
    fn cutoff_apply_examples() {
        let r = cutoff_apply(&ComplexMatrix::identity(2), 0.1, 0.2).unwrap();
        assert_close(&r, &ComplexMatrix::identity(2), 1e-14);
        let r = cutoff_apply(&ComplexMatrix::diag(&[0.05, 0.5]), 0.1, 0.2).unwrap();
        assert_close(&r, &ComplexMatrix::diag(&[0.0, 1.0]), 1e-14);
        // ramp at 0.15 is (0.15 - 0.1) / (0.2 - 0.1) = 0.5
        let r = cutoff_apply(&ComplexMatrix::diag(&[0.15, 0.5]), 0.1, 0.2).unwrap();
        assert_close(&r, &ComplexMatrix::diag(&[0.5, 1.0]), 1e-14);
        assert!(cutoff_apply(&ComplexMatrix::identity(2), 0.2, 0.2).is_err());
    }

    #[test]
    fn expi_is_unitary_and_inverts() {
        let u = haar_unitary(4, 3).unwrap();
        let h = (&u + &u.adjoint()).scale(0.5);
        let e = expi_hermitian(&h, 0.7).unwrap();
        assert!(e.unitarity_residual() < 1e-12);
        let back = &e * &expi_hermitian(&h, -0.7).unwrap();
        assert_close(&back, &ComplexMatrix::identity(4), 1e-12);
    }

    #[test]
    fn range_basis_of_projection() {
        let p = ComplexMatrix::diag(&[1.0, 0.0, 1.0, 0.0]);
        let b = range_basis(p.as_dmatrix(), 0.5);
        assert_eq!(b.len(), 2);
    }
}
