//! Dense square complex matrices and the JSON matrix format.
//!
//! Every algebra element in the crate is a [`ComplexMatrix`]. Tensor products
//! use the Kronecker convention with the left factor outermost: in `a ⊗ b` the
//! entry `a[i][j]` scales the `(i, j)` block of size `dim(b)`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = num_complex::Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Numeric thresholds that turn exact operator inequalities into floating
/// point tests.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Spectral floor: eigenvalues at or below it count as zero.
    pub eig_floor: f64,
    /// Residual allowed in identities such as `u*u = 1` or matrix-unit relations.
    pub identity_tol: f64,
    /// Default target margin for sampled certificates, in `(0, 1)`.
    pub cert_margin: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            eig_floor: 1e-9,
            identity_tol: 1e-10,
            cert_margin: 0.5,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.eig_floor) || !ok(self.identity_tol) {
            return Err(Error::InvalidParameter(
                "tolerances must be finite and nonnegative".into(),
            ));
        }
        if !(self.cert_margin > 0.0 && self.cert_margin < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cert_margin must lie in (0, 1), got {}",
                self.cert_margin
            )));
        }
        Ok(())
    }
}

/// A dense `N × N` complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix({}x{})", self.dim(), self.dim())?;
        if self.dim() <= 8 {
            write!(f, "{}", self.0)?;
        }
        Ok(())
    }
}

impl ComplexMatrix {
    /// Wraps a nalgebra matrix after checking squareness and finiteness.
    pub fn from_dmatrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidParameter(
                "matrix dimension must be positive".into(),
            ));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(m))
    }

    /// Internal constructor for results of arithmetic on valid matrices.
    pub(crate) fn wrap(m: DMatrix<C64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self(m)
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(n, n, f))
    }

    /// Builds a matrix from row-major real and imaginary parts.
    pub fn from_parts(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<Self> {
        let n = re.len();
        if n == 0 {
            return Err(Error::InvalidParameter(
                "matrix dimension must be positive".into(),
            ));
        }
        if im.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: im.len(),
            });
        }
        for row in re.iter().chain(im.iter()) {
            if row.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: row.len(),
                });
            }
        }
        Self::from_dmatrix(DMatrix::from_fn(n, n, |i, j| C64::new(re[i][j], im[i][j])))
    }

    /// Real diagonal matrix.
    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                ZERO
            }
        }))
    }

    /// The matrix unit `e_{st}` of `M_n` (zero-based indices).
    pub fn unit(n: usize, s: usize, t: usize) -> Self {
        let mut m = DMatrix::zeros(n, n);
        m[(s, t)] = ONE;
        Self(m)
    }

    /// Rank-one operator `x y*`.
    pub fn outer(x: &[C64], y: &[C64]) -> Self {
        assert_eq!(
            x.len(),
            y.len(),
            "outer product of vectors of unequal length"
        );
        let n = x.len();
        Self(DMatrix::from_fn(n, n, |i, j| x[i] * y[j].conj()))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.0[(i, j)] = v;
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * C64::new(s, 0.0))
    }

    pub fn scale_c(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    /// `(a + a*) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Hilbert–Schmidt inner product `tr(self* other)`.
    pub fn hs_inner(&self, other: &Self) -> C64 {
        assert_eq!(self.dim(), other.dim(), "hs_inner dimension mismatch");
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Operator (spectral) norm.
    pub fn op_norm(&self) -> f64 {
        let gram = Self(matmul(&self.0.adjoint(), &self.0));
        crate::spectral::max_eigenvalue_unchecked(&gram)
            .max(0.0)
            .sqrt()
    }

    /// `‖self − self*‖_max`.
    pub fn hermitian_residual(&self) -> f64 {
        (&self.0 - self.0.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `‖u*u − 1‖_op`, the unitarity defect.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.dim();
        let d = Self(matmul(&self.0.adjoint(), &self.0) - DMatrix::identity(n, n));
        d.op_norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Kronecker product, left factor outermost.
    pub fn tensor(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    /// Block-diagonal sum `self ⊕ other`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let (n, m) = (self.dim(), other.dim());
        let mut out = DMatrix::zeros(n + m, n + m);
        out.view_mut((0, 0), (n, n)).copy_from(&self.0);
        out.view_mut((n, n), (m, m)).copy_from(&other.0);
        Self(out)
    }

    /// `self ⊗ 1_m`.
    pub fn ampliate(&self, m: usize) -> Self {
        self.tensor(&Self::identity(m))
    }

    /// `x* self x`.
    pub fn congruence(&self, x: &Self) -> Self {
        Self(matmul(&matmul(&x.0.adjoint(), &self.0), &x.0))
    }

    pub fn col(&self, j: usize) -> Vec<C64> {
        self.0.column(j).iter().copied().collect()
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim());
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.0[(i, j)] * v[j]).sum())
            .collect()
    }
}

/// Dense complex product. Large products are split into four real GEMMs,
/// which nalgebra dispatches to a blocked kernel.
pub(crate) fn matmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    if a.nrows() * a.ncols() * b.ncols() < 48 * 48 * 48 {
        return a * b;
    }
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    re.zip_map(&im, C64::new)
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(matmul(&self.0, &rhs.0))
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-&self.0)
    }
}

impl Add for ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(self.0 + rhs.0)
    }
}

impl Sub for ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(self.0 - rhs.0)
    }
}

impl Mul for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(matmul(&self.0, &rhs.0))
    }
}

/// Wire form of a matrix: `{ "dim": N, "re": [[...]], "im": [[...]] }`, row-major.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        if j.re.len() != j.dim {
            return Err(Error::Format(format!(
                "declared dim {} but {} rows of real parts",
                j.dim,
                j.re.len()
            )));
        }
        ComplexMatrix::from_parts(&j.re, &j.im)
    }
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        let n = m.dim();
        MatrixJson {
            dim: n,
            re: (0..n)
                .map(|i| (0..n).map(|j| m.0[(i, j)].re).collect())
                .collect(),
            im: (0..n)
                .map(|i| (0..n).map(|j| m.0[(i, j)].im).collect())
                .collect(),
        }
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        ComplexMatrix::try_from(j).map_err(serde::de::Error::custom)
    }
}

/// Parses a matrix from its JSON text form.
pub fn parse_matrix_json(text: &str) -> Result<ComplexMatrix> {
    let j: MatrixJson = serde_json::from_str(text)?;
    ComplexMatrix::try_from(j)
}
