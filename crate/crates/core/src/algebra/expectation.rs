use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::certificate::{CertificateKind, FullnessCertificate};
use crate::error::{Error, Result};
use crate::matrix::{matmul, ComplexMatrix, ToleranceConfig, C64, ONE};
use crate::spectral::{eigh, eigh_unchecked};

use super::{OperatorSubspace, SubalgebraEmbedding};

/// HS-orthonormal basis of the commutant `ι(B)' ⊆ M_N`, read off the frames:
/// `Fᵢ (1_{nᵢ} ⊗ e_{pq}) Fᵢ* / √nᵢ`.
pub fn commutant(emb: &SubalgebraEmbedding) -> OperatorSubspace {
    let c = emb.commutant_embedding();
    let mut basis = Vec::new();
    for (i, (&m, &n)) in c
        .structure()
        .blocks()
        .iter()
        .zip(c.multiplicities())
        .enumerate()
    {
        let w = 1.0 / (n as f64).sqrt();
        for p in 0..m {
            for q in 0..m {
                basis.push(c.unit_image(i, p, q).scale(w));
            }
        }
    }
    OperatorSubspace::from_orthonormal(emb.ambient_dim(), basis)
}

/// Largest ambient dimension accepted by [`commutant_by_linear_system`].
pub const LINEAR_SYSTEM_MAX_DIM: usize = 24;

/// The commutant as the null space of `x ↦ ([x, g])_g` over the generators
/// `e^{(i)}_{0t}, e^{(i)}_{t0}` of each block. Quadratic in `N²`; intended as
/// an independent cross-check of [`commutant`] at small `N`.
pub fn commutant_by_linear_system(
    emb: &SubalgebraEmbedding,
    tol: &ToleranceConfig,
) -> Result<OperatorSubspace> {
    let n = emb.ambient_dim();
    if n > LINEAR_SYSTEM_MAX_DIM {
        return Err(Error::InvalidParameter(format!(
            "linear-system commutant limited to N <= {LINEAR_SYSTEM_MAX_DIM}, got {n}"
        )));
    }
    let nn = n * n;
    let id = DMatrix::<C64>::identity(n, n);
    let mut normal = DMatrix::<C64>::zeros(nn, nn);
    for (i, &bn) in emb.structure().blocks().iter().enumerate() {
        for t in 0..bn {
            for g in [emb.unit_image(i, 0, t), emb.unit_image(i, t, 0)] {
                // column-major vec: vec(xg) = (gᵀ ⊗ 1) vec(x), vec(gx) = (1 ⊗ g) vec(x)
                let gm = g.as_dmatrix();
                let l = gm.transpose().kronecker(&id) - id.kronecker(gm);
                normal += l.adjoint() * l;
            }
        }
    }
    let e = eigh_unchecked(&ComplexMatrix::wrap(normal));
    let basis = e
        .values
        .iter()
        .enumerate()
        .take_while(|(_, &lam)| lam <= tol.eig_floor)
        .map(|(j, _)| {
            let v = e.vector(j);
            ComplexMatrix::wrap(DMatrix::from_fn(n, n, |r, c| v[c * n + r]))
        })
        .collect();
    Ok(OperatorSubspace::from_orthonormal(n, basis))
}

/// The Haar twirl `E(a) = ∫ u a u* du` over `U(ι(B))`, computed exactly as the
/// HS-orthogonal projection onto the commutant:
/// `E(a) = Σᵢ Fᵢ (1 ⊗ tr_{nᵢ}(Fᵢ* a Fᵢ)/nᵢ) Fᵢ*`.
pub fn conditional_expectation(
    emb: &SubalgebraEmbedding,
    a: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    if a.dim() != emb.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: emb.ambient_dim(),
            found: a.dim(),
        });
    }
    let mut out = DMatrix::<C64>::zeros(a.dim(), a.dim());
    for (i, (&n, &m)) in emb
        .structure()
        .blocks()
        .iter()
        .zip(emb.multiplicities())
        .enumerate()
    {
        let y = emb.compress(i, a);
        let z = DMatrix::from_fn(m, m, |r, rr| {
            (0..n).map(|s| y[(s * m + r, s * m + rr)]).sum::<C64>() / n as f64
        });
        let f = emb.frame(i);
        let lifted = DMatrix::<C64>::identity(n, n).kronecker(&z);
        out += matmul(&matmul(f, &lifted), &f.adjoint());
    }
    Ok(ComplexMatrix::wrap(out))
}

/// Images of the block identities, one per block.
pub fn minimal_central_projections(emb: &SubalgebraEmbedding) -> Vec<ComplexMatrix> {
    (0..emb.structure().len())
        .map(|i| {
            let f = emb.frame(i);
            ComplexMatrix::wrap(matmul(f, &f.adjoint()))
        })
        .collect()
}

/// `B₁ ⊗ B₂ ⊆ M_{N₁} ⊗ M_{N₂}`; blocks are the pairwise products, ordered
/// with the first factor's block index outermost.
pub fn tensor_embedding(e1: &SubalgebraEmbedding, e2: &SubalgebraEmbedding) -> SubalgebraEmbedding {
    e1.tensor_with(e2)
}

/// Fullness of an element inside the algebra itself.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlgebraFullness {
    pub full: bool,
    /// `‖p a p‖` for each minimal central projection `p`.
    pub block_norms: Vec<f64>,
    /// Unitaries `uⱼ` of the algebra with `Σ uⱼ* a uⱼ ≥ margin · 1`, when full.
    pub certificate: Option<FullnessCertificate>,
}

/// Decides whether a positive `a ∈ ι(B)` lies in no proper ideal, i.e. is
/// nonzero in every block. When it is, each block's top eigenvector `v` is
/// rotated through an orthonormal basis by `V Cʲ V*` (`C` the cyclic shift,
/// `V e₀ = v`), which gives `Σⱼ uⱼ* a uⱼ ≥ λ_max · 1` blockwise.
pub fn full_in_algebra(
    a: &ComplexMatrix,
    emb: &SubalgebraEmbedding,
    tol: &ToleranceConfig,
) -> Result<AlgebraFullness> {
    let residual = emb.membership_residual(a)?;
    if residual > tol.eig_floor * a.frobenius_norm().max(1.0) {
        return Err(Error::NotInAlgebra { residual });
    }
    let blocks = emb.pull_back(a)?;
    let scale = a.op_norm().max(1.0);
    let eigs = blocks.iter().map(eigh).collect::<Result<Vec<_>>>()?;
    let lowest = eigs
        .iter()
        .map(|e| e.values[0])
        .fold(f64::INFINITY, f64::min);
    if lowest < -tol.eig_floor * scale {
        return Err(Error::NotPositive {
            min_eigenvalue: lowest,
        });
    }
    let block_norms: Vec<f64> = eigs
        .iter()
        .map(|e| e.values.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .collect();
    let full = block_norms.iter().all(|&v| v > tol.eig_floor);
    if !full {
        return Ok(AlgebraFullness {
            full,
            block_norms,
            certificate: None,
        });
    }
    if lowest > tol.eig_floor {
        return Ok(AlgebraFullness {
            full,
            block_norms,
            certificate: Some(FullnessCertificate::identity(a.dim(), lowest)?),
        });
    }

    let rotations: Vec<ComplexMatrix> = eigs
        .iter()
        .map(|e| {
            let n = e.values.len();
            let v = e.vector(n - 1);
            basis_completion(&v)
        })
        .collect();
    let count = emb.structure().blocks().iter().copied().max().unwrap_or(1);
    let mut abstract_units: Vec<Vec<ComplexMatrix>> = Vec::with_capacity(count);
    for j in 0..count {
        let us = rotations
            .iter()
            .map(|v| {
                let n = v.dim();
                let c = cyclic_shift(n, j % n);
                &(v * &c) * &v.adjoint()
            })
            .collect();
        abstract_units.push(us);
    }
    let mut margin = f64::INFINITY;
    for (i, x) in blocks.iter().enumerate() {
        let mut sum = ComplexMatrix::zeros(x.dim());
        for us in &abstract_units {
            sum = sum + x.congruence(&us[i]);
        }
        margin = margin.min(eigh_unchecked(&sum).values[0]);
    }
    let elements = abstract_units
        .iter()
        .map(|us| emb.apply_blocks(us))
        .collect::<Result<Vec<_>>>()?;
    Ok(AlgebraFullness {
        full,
        block_norms,
        certificate: Some(FullnessCertificate::new(
            elements,
            margin,
            CertificateKind::Unitary,
        )?),
    })
}

/// `Cʲ` with `C e_s = e_{s+1 mod n}`.
fn cyclic_shift(n: usize, j: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, |r, c| {
        if r == (c + j) % n {
            ONE
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// A unitary whose first column is the unit vector `v`.
fn basis_completion(v: &[C64]) -> ComplexMatrix {
    let n = v.len();
    let mut cols: Vec<Vec<C64>> = vec![v.to_vec()];
    for k in 0..n {
        if cols.len() == n {
            break;
        }
        let mut w = vec![C64::new(0.0, 0.0); n];
        w[k] = ONE;
        for _ in 0..2 {
            for c in &cols {
                let p = crate::spectral::inner(c, &w);
                for (wi, ci) in w.iter_mut().zip(c) {
                    *wi -= p * ci;
                }
            }
        }
        if crate::spectral::normalize(&mut w) > 1e-6 {
            cols.push(w);
        }
    }
    ComplexMatrix::wrap(DMatrix::from_fn(n, n, |r, c| cols[c][r]))
}
