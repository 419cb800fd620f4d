use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, ToleranceConfig, C64};
use crate::spectral::eigh_unchecked;

use super::SubalgebraEmbedding;

/// A linear subspace of `M_N` with a Hilbert–Schmidt orthonormal basis.
#[derive(Clone, Debug)]
pub struct OperatorSubspace {
    ambient_dim: usize,
    basis: Vec<ComplexMatrix>,
}

impl OperatorSubspace {
    /// Orthonormalizes a linearly independent family. Fails if the normalized
    /// Gram matrix has an eigenvalue at or below `eig_floor`.
    pub fn new(
        ambient_dim: usize,
        family: Vec<ComplexMatrix>,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        check_dims(ambient_dim, &family)?;
        let (basis, gram_min) = orthonormalize(&family);
        if family.is_empty() {
            return Ok(Self { ambient_dim, basis });
        }
        if !(gram_min > tol.eig_floor) {
            return Err(Error::InvalidParameter(format!(
                "family is linearly dependent (Gram min eigenvalue {gram_min:.3e})"
            )));
        }
        Ok(Self { ambient_dim, basis })
    }

    /// Span of an arbitrary family; directions with normalized Gram
    /// eigenvalue at or below `eig_floor` are dropped.
    pub fn span(
        ambient_dim: usize,
        family: &[ComplexMatrix],
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        check_dims(ambient_dim, family)?;
        let norms: Vec<f64> = family.iter().map(|m| m.frobenius_norm()).collect();
        let kept: Vec<(ComplexMatrix, f64)> = family
            .iter()
            .zip(&norms)
            .filter(|(_, &n)| n > 0.0)
            .map(|(m, &n)| (m.clone(), n))
            .collect();
        let k = kept.len();
        let gram = DMatrix::from_fn(k, k, |p, q| {
            kept[p].0.hs_inner(&kept[q].0) / (kept[p].1 * kept[q].1)
        });
        let e = eigh_unchecked(&ComplexMatrix::wrap(gram));
        let mut basis = Vec::new();
        for (j, &lam) in e.values.iter().enumerate() {
            if lam <= tol.eig_floor {
                continue;
            }
            let c = e.vector(j);
            let mut acc = ComplexMatrix::zeros(ambient_dim);
            for (cj, (m, n)) in c.iter().zip(&kept) {
                acc = acc + m.scale_c(*cj / *n);
            }
            basis.push(acc.scale(1.0 / lam.sqrt()));
        }
        Ok(Self { ambient_dim, basis })
    }

    /// Builds from a family already known to be HS-orthonormal.
    pub(crate) fn from_orthonormal(ambient_dim: usize, basis: Vec<ComplexMatrix>) -> Self {
        Self { ambient_dim, basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[ComplexMatrix] {
        &self.basis
    }

    /// HS-orthogonal projection.
    pub fn project(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        if a.dim() != self.ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim,
                found: a.dim(),
            });
        }
        let mut acc = ComplexMatrix::zeros(self.ambient_dim);
        for b in &self.basis {
            acc = acc + b.scale_c(b.hs_inner(a));
        }
        Ok(acc)
    }

    pub fn residual(&self, a: &ComplexMatrix) -> Result<f64> {
        Ok((a - &self.project(a)?).frobenius_norm())
    }

    pub fn contains(&self, a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<bool> {
        Ok(self.residual(a)? <= tol.eig_floor * a.frobenius_norm().max(1.0))
    }

    /// `self ∩ other`, where `other` is anything with an HS-orthogonal projection.
    pub fn intersect(&self, other: &dyn Projector, tol: &ToleranceConfig) -> Result<Self> {
        let k = self.dim();
        let projected = self
            .basis
            .iter()
            .map(|b| other.project(b))
            .collect::<Result<Vec<_>>>()?;
        // ‖(1 − P)Σ cⱼ bⱼ‖² = c*(1 − G)c with G = ⟨bᵢ, P bⱼ⟩; squared residuals
        // are compared against eig_floor
        let g = DMatrix::from_fn(k, k, |p, q| {
            let v = self.basis[p].hs_inner(&projected[q]);
            if p == q {
                C64::new(1.0, 0.0) - v
            } else {
                -v
            }
        });
        let e = eigh_unchecked(&ComplexMatrix::wrap(g));
        let mut basis = Vec::new();
        for (j, &lam) in e.values.iter().enumerate() {
            if lam > tol.eig_floor {
                continue;
            }
            let c = e.vector(j);
            let mut acc = ComplexMatrix::zeros(self.ambient_dim);
            for (cj, b) in c.iter().zip(&self.basis) {
                acc = acc + b.scale_c(*cj);
            }
            basis.push(acc);
        }
        Ok(Self::from_orthonormal(self.ambient_dim, basis))
    }

    /// Every basis element of `self` lies in `other`.
    pub fn is_contained_in(&self, other: &dyn Projector, tol: &ToleranceConfig) -> Result<bool> {
        for b in &self.basis {
            let r = (b - &other.project(b)?).frobenius_norm();
            if r * r > tol.eig_floor {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// An HS-orthogonal projection onto a subspace of `M_N`.
pub trait Projector {
    fn project(&self, a: &ComplexMatrix) -> Result<ComplexMatrix>;
}

impl Projector for OperatorSubspace {
    fn project(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        OperatorSubspace::project(self, a)
    }
}

impl Projector for SubalgebraEmbedding {
    fn project(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.project_onto_image(a)
    }
}

fn check_dims(n: usize, family: &[ComplexMatrix]) -> Result<()> {
    if let Some(m) = family.iter().find(|m| m.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.dim(),
        });
    }
    Ok(())
}

fn orthonormalize(family: &[ComplexMatrix]) -> (Vec<ComplexMatrix>, f64) {
    let k = family.len();
    let norms: Vec<f64> = family.iter().map(|m| m.frobenius_norm()).collect();
    if norms.contains(&0.0) {
        return (Vec::new(), 0.0);
    }
    let gram = DMatrix::from_fn(k, k, |p, q| {
        family[p].hs_inner(&family[q]) / (norms[p] * norms[q])
    });
    let gram_min = eigh_unchecked(&ComplexMatrix::wrap(gram))
        .values
        .first()
        .copied()
        .unwrap_or(0.0);
    let mut basis: Vec<ComplexMatrix> = Vec::with_capacity(k);
    for m in family {
        let mut v = m.clone();
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for b in &basis {
                v = &v - &b.scale_c(b.hs_inner(&v));
            }
        }
        let n = v.frobenius_norm();
        if n > 0.0 {
            basis.push(v.scale(1.0 / n));
        }
    }
    (basis, gram_min)
}
