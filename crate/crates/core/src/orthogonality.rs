//! Everywhere non-orthogonality of `M_d ⊗ 1` and `u*(M_d ⊗ 1)u` inside
//! `M_d ⊗ M_k`.
//!
//! For unit vectors `x, y ∈ C^d` the compression `(p_x ⊗ 1)u(p_y ⊗ 1)` equals
//! `|x⟩⟨y| ⊗ C(x, y)` with `C[p, q] = ⟨x, u_{(p,q)} y⟩`, where `u_{(p,q)}` are the
//! slices of `u`. The pair is everywhere non-orthogonal iff `C(x, y) ≠ 0` for
//! all `x, y`, i.e. iff the vectors `u_j y` span `C^d` for every `y`.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{BlockStructure, SubalgebraEmbedding, UnitImages};
use crate::error::{Error, Result};
use crate::haar::{random_unit_vector, substream};
use crate::matrix::{ComplexMatrix, ToleranceConfig, C64, ONE, ZERO};
use crate::spectral::normalize;

/// Default threshold above which a searched minimum counts as certified.
pub const CONFIDENCE_THRESHOLD: f64 = 1e-4;

/// The explicit intertwining unitary together with its data.
#[derive(Clone, Debug)]
pub struct Intertwiner {
    pub d: usize,
    pub k: usize,
    /// `u ∈ M_d ⊗ M_k` with `u*(x ⊗ 1)u = 1 ⊗ ρ(x) + x ⊗ (1 − f)`.
    pub u: ComplexMatrix,
    /// Projection onto the first `d` coordinates of `C^k`.
    pub f: ComplexMatrix,
    /// `ρ(e_st)` in `M_k`, indexed `s * d + t`.
    pub rho_units: Vec<ComplexMatrix>,
}

impl Intertwiner {
    /// `ρ(x)` for `x ∈ M_d`.
    pub fn rho(&self, x: &ComplexMatrix) -> ComplexMatrix {
        corner(x, self.k)
    }

    /// `1 ⊗ ρ(x) + x ⊗ (1 − f)`.
    pub fn target(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let cf = ComplexMatrix::identity(self.k) - self.f.clone();
        ComplexMatrix::identity(self.d).tensor(&self.rho(x)) + x.tensor(&cf)
    }

    /// Max over matrix units of `‖u*(e_st ⊗ 1)u − (1 ⊗ ρ(e_st) + e_st ⊗ (1 − f))‖`.
    pub fn identity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for s in 0..self.d {
            for t in 0..self.d {
                let e = ComplexMatrix::unit(self.d, s, t);
                let lhs = e.ampliate(self.k).congruence(&self.u);
                let r = (&lhs - &self.target(&e)).op_norm();
                worst = worst.max(r);
            }
        }
        worst
    }
}

fn corner(x: &ComplexMatrix, k: usize) -> ComplexMatrix {
    let d = x.dim();
    ComplexMatrix::from_fn(k, |i, j| if i < d && j < d { x.get(i, j) } else { ZERO })
}

/// Builds `u` by matching the frames of the two unital representations
/// `x ↦ x ⊗ 1_k` and `x ↦ 1_d ⊗ ρ(x) + x ⊗ (1 − f)` of `M_d` on `C^{dk}`.
pub fn intertwiner_construct(d: usize, k: usize) -> Result<Intertwiner> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("d must be >= 2, got {d}")));
    }
    if k < d {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must be at least d = {d}"
        )));
    }
    let tol = ToleranceConfig::default();
    let n = d * k;
    let f = ComplexMatrix::diag(
        &(0..k)
            .map(|i| if i < d { 1.0 } else { 0.0 })
            .collect::<Vec<_>>(),
    );
    let cf = ComplexMatrix::identity(k) - f.clone();
    let mut rho_units = Vec::with_capacity(d * d);
    let mut images = Vec::with_capacity(d * d);
    for s in 0..d {
        for t in 0..d {
            let e = ComplexMatrix::unit(d, s, t);
            let r = corner(&e, k);
            images.push(ComplexMatrix::identity(d).tensor(&r) + e.tensor(&cf));
            rho_units.push(r);
        }
    }
    let raw = UnitImages {
        ambient_dim: n,
        structure: BlockStructure::new(vec![d])?,
        images: vec![images],
    };
    let second = SubalgebraEmbedding::from_unit_images(&raw, &tol)?;
    let first = SubalgebraEmbedding::ampliation(d, k);
    // π₁(x) = F₁(x ⊗ 1)F₁*, π₂(x) = F₂(x ⊗ 1)F₂*, so u = F₁F₂* gives u π₂ = π₁ u
    let u = &first.frame_unitary() * &second.frame_unitary().adjoint();
    Ok(Intertwiner {
        d,
        k,
        u,
        f,
        rho_units,
    })
}

/// The `k²` slices `u_j`, `j = p * k + q`, with `u_j[s, t] = u[s k + p, t k + q]`,
/// so that `Σ_j u_j ⊗ e_pq = u`.
pub fn slices(u: &ComplexMatrix, d: usize, k: usize) -> Result<Vec<ComplexMatrix>> {
    if d == 0 || k == 0 || u.dim() != d * k {
        return Err(Error::InvalidParameter(format!(
            "matrix of dimension {} does not factor as {d} x {k}",
            u.dim()
        )));
    }
    let mut out = Vec::with_capacity(k * k);
    for p in 0..k {
        for q in 0..k {
            out.push(ComplexMatrix::from_fn(d, |s, t| {
                u.get(s * k + p, t * k + q)
            }));
        }
    }
    Ok(out)
}

/// `Σ_j u_j ⊗ e_pq`.
pub fn reconstruct(slices: &[ComplexMatrix], k: usize) -> Result<ComplexMatrix> {
    if slices.len() != k * k || slices.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "expected {} slices, got {}",
            k * k,
            slices.len()
        )));
    }
    let d = slices[0].dim();
    let mut out = ComplexMatrix::zeros(d * k);
    for p in 0..k {
        for q in 0..k {
            out = out + slices[p * k + q].tensor(&ComplexMatrix::unit(k, p, q));
        }
    }
    Ok(out)
}

/// `C(x, y)[p, q] = ⟨x, u_{(p,q)} y⟩`; `(p_x ⊗ 1)u(p_y ⊗ 1) = |x⟩⟨y| ⊗ C`.
pub fn contraction(slices: &[ComplexMatrix], k: usize, x: &[C64], y: &[C64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(k, |p, q| {
        let v = slices[p * k + q].apply(y);
        x.iter().zip(&v).map(|(a, b)| a.conj() * b).sum()
    })
}

/// `‖(p_x ⊗ 1)u(p_y ⊗ 1)‖` for unit `x, y`.
pub fn block_norm(u: &ComplexMatrix, d: usize, k: usize, x: &[C64], y: &[C64]) -> Result<f64> {
    let sl = slices(u, d, k)?;
    if x.len() != d || y.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x.len().min(y.len()),
        });
    }
    Ok(contraction(&sl, k, x, y).op_norm())
}

/// How `min_y σ_d([u₁y | … | u_m y])` is searched.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginSearch {
    /// Quasi-random sphere points; 0 disables the grid.
    pub grid_points: usize,
    /// Multi-start local searches; 0 disables them.
    pub starts: usize,
    pub iters: usize,
    pub seed: u64,
}

impl MarginSearch {
    pub fn grid(points: usize) -> Self {
        Self {
            grid_points: points,
            starts: 0,
            iters: 0,
            seed: 0,
        }
    }

    pub fn multistart(starts: usize, iters: usize, seed: u64) -> Self {
        Self {
            grid_points: 0,
            starts,
            iters,
            seed,
        }
    }

    pub fn both(points: usize, starts: usize, iters: usize, seed: u64) -> Self {
        Self {
            grid_points: points,
            starts,
            iters,
            seed,
        }
    }

    /// Budget `b` → `b` grid points, `clamp(b / 100, 4, 64)` starts, 100 iterations.
    pub fn from_budget(budget: usize, seed: u64) -> Self {
        Self::both(budget, (budget / 100).clamp(4, 64), 100, seed)
    }

    fn validate(&self) -> Result<()> {
        if self.grid_points == 0 && self.starts == 0 {
            return Err(Error::InvalidParameter("search budget is empty".into()));
        }
        if self.starts > 0 && self.iters == 0 {
            return Err(Error::InvalidParameter(
                "multistart needs iters >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Result of [`min_rank_margin`]. Every value is an upper bound on the true minimum.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarginEstimate {
    pub value: f64,
    /// Minimizing `y`.
    pub y: Vec<C64>,
    /// Left singular vector of the smallest singular value at `y`.
    pub x: Vec<C64>,
    pub grid_value: Option<f64>,
    pub multistart_value: Option<f64>,
    pub evaluations: usize,
}

/// `σ_d([A₁y | … | A_m y])` together with its left singular vector.
fn smallest_singular(family: &[ComplexMatrix], y: &[C64]) -> (f64, Vec<C64>) {
    let d = y.len();
    let cols = family.len().max(d);
    let mut w = DMatrix::<C64>::zeros(d, cols);
    for (j, a) in family.iter().enumerate() {
        for (i, z) in a.apply(y).into_iter().enumerate() {
            w[(i, j)] = z;
        }
    }
    let svd = w.svd(true, false);
    let (idx, &val) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("d >= 1");
    let u = svd.u.expect("requested");
    (val, u.column(idx).iter().copied().collect())
}

fn adjoint_family(family: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    family.iter().map(|a| a.adjoint()).collect()
}

fn check_family(family: &[ComplexMatrix]) -> Result<usize> {
    let d = family
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty matrix family".into()))?
        .dim();
    if d == 0 {
        return Err(Error::InvalidParameter("zero-dimensional family".into()));
    }
    if let Some(a) = family.iter().find(|a| a.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: a.dim(),
        });
    }
    if family.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(d)
}

const PRIMES: [u32; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base as u64) as f64 * inv;
        i /= base as u64;
        inv /= b;
    }
    out
}

/// Point `i` of a Halton sequence pushed to the unit sphere of `C^d` by Box–Muller.
pub fn sphere_point(i: usize, d: usize) -> Vec<C64> {
    let mut v: Vec<C64> = (0..d)
        .map(|c| {
            let u1 = radical_inverse(i as u64 + 1, PRIMES[(2 * c) % PRIMES.len()]);
            let u2 = radical_inverse(i as u64 + 1, PRIMES[(2 * c + 1) % PRIMES.len()]);
            let r = (-2.0 * u1.max(1e-300).ln()).sqrt();
            let th = 2.0 * std::f64::consts::PI * u2;
            C64::new(r * th.cos(), r * th.sin())
        })
        .collect();
    if normalize(&mut v) == 0.0 {
        v[0] = ONE;
    }
    v
}

/// Estimates `min_{‖y‖=1} σ_d([A₁y | … | A_m y])` for a family in `M_d`.
pub fn min_span_margin(family: &[ComplexMatrix], search: &MarginSearch) -> Result<MarginEstimate> {
    search.validate()?;
    let d = check_family(family)?;
    let adj = adjoint_family(family);
    let mut evals = 0usize;
    let mut best: Option<(f64, Vec<C64>, Vec<C64>)> = None;
    let keep = |v: f64, y: Vec<C64>, x: Vec<C64>, best: &mut Option<(f64, Vec<C64>, Vec<C64>)>| {
        if best.as_ref().is_none_or(|b| v < b.0) {
            *best = Some((v, y, x));
        }
    };

    let mut grid_value = None;
    if search.grid_points > 0 {
        let mut g = f64::INFINITY;
        for i in 0..search.grid_points {
            let y = sphere_point(i, d);
            let (v, x) = smallest_singular(family, &y);
            evals += 1;
            g = g.min(v);
            keep(v, y, x, &mut best);
        }
        grid_value = Some(g);
    }

    let mut multistart_value = None;
    if search.starts > 0 {
        let mut m = f64::INFINITY;
        for s in 0..search.starts {
            let mut rng = substream(search.seed, s as u64);
            let mut y = random_unit_vector(&mut rng, d);
            let (mut v, mut x) = smallest_singular(family, &y);
            evals += 1;
            // alternating minimization of Σ_j |⟨x, A_j y⟩|² over x and y
            for _ in 0..search.iters {
                let (_, y_new) = smallest_singular(&adj, &x);
                let (v_new, x_new) = smallest_singular(family, &y_new);
                evals += 2;
                let stalled = v - v_new <= 1e-15 * v.max(1e-300);
                if v_new <= v {
                    v = v_new;
                    y = y_new;
                    x = x_new;
                }
                if stalled || v == 0.0 {
                    break;
                }
            }
            m = m.min(v);
            keep(v, y, x, &mut best);
        }
        multistart_value = Some(m);
    }

    let (value, y, x) = best.expect("search is non-empty");
    Ok(MarginEstimate {
        value,
        y,
        x,
        grid_value,
        multistart_value,
        evaluations: evals,
    })
}

/// [`min_span_margin`] applied to the slices of `u ∈ M_d ⊗ M_k`.
pub fn min_rank_margin(
    u: &ComplexMatrix,
    d: usize,
    k: usize,
    search: &MarginSearch,
) -> Result<MarginEstimate> {
    min_span_margin(&slices(u, d, k)?, search)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonOrthStatus {
    Certified,
    Refuted,
    Unknown,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NonOrthWitness {
    /// Vectors spanning orthogonal minimal projections. For the conjugate
    /// pair both live in `C^d`; for sampled pairs they are abstract block
    /// vectors of the given blocks.
    Refutation {
        x: Vec<C64>,
        y: Vec<C64>,
        first_block: usize,
        second_block: usize,
        block_norm: f64,
    },
    /// Evidence from the search (certification or inconclusive runs).
    Trace {
        grid_min: Option<f64>,
        multistart_min: Option<f64>,
        observed_min: f64,
        threshold: f64,
    },
}

/// Outcome of a non-orthogonality test. `certified` is numerical evidence:
/// the margin is the smallest value any search found, not a proof.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NonOrthReport {
    pub status: NonOrthStatus,
    pub margin: f64,
    pub witness: Option<NonOrthWitness>,
    pub evaluations: usize,
}

impl NonOrthReport {
    pub fn is_certified(&self) -> bool {
        self.status == NonOrthStatus::Certified
    }

    pub fn is_refuted(&self) -> bool {
        self.status == NonOrthStatus::Refuted
    }
}

/// Tests whether `M_d ⊗ 1` and `u*(M_d ⊗ 1)u` are everywhere non-orthogonal.
pub fn certify_nonorthogonal_conjugate(
    u: &ComplexMatrix,
    d: usize,
    k: usize,
    budget: usize,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<NonOrthReport> {
    certify_with_threshold(
        u,
        d,
        k,
        &MarginSearch::from_budget(budget, seed),
        CONFIDENCE_THRESHOLD,
        tol,
    )
}

/// [`certify_nonorthogonal_conjugate`] with an explicit search and threshold.
pub fn certify_with_threshold(
    u: &ComplexMatrix,
    d: usize,
    k: usize,
    search: &MarginSearch,
    threshold: f64,
    tol: &ToleranceConfig,
) -> Result<NonOrthReport> {
    if d < 2 || k == 0 {
        return Err(Error::InvalidParameter(format!(
            "need d >= 2 and k >= 1, got d={d}, k={k}"
        )));
    }
    if u.dim() != d * k {
        return Err(Error::DimensionMismatch {
            expected: d * k,
            found: u.dim(),
        });
    }
    let ures = u.unitarity_residual();
    if ures > 1e-8 {
        return Err(Error::InvalidParameter(format!(
            "u is not unitary (residual {ures:.3e})"
        )));
    }
    let sl = slices(u, d, k)?;
    let est = min_span_margin(&sl, search)?;
    let norm = contraction(&sl, k, &est.x, &est.y).op_norm();
    if norm <= tol.eig_floor {
        return Ok(NonOrthReport {
            status: NonOrthStatus::Refuted,
            margin: 0.0,
            witness: Some(NonOrthWitness::Refutation {
                x: est.x,
                y: est.y,
                first_block: 0,
                second_block: 0,
                block_norm: norm,
            }),
            evaluations: est.evaluations,
        });
    }
    let passes = |v: Option<f64>| v.is_none_or(|v| v > threshold);
    let certified = passes(est.grid_value) && passes(est.multistart_value);
    Ok(NonOrthReport {
        status: if certified {
            NonOrthStatus::Certified
        } else {
            NonOrthStatus::Unknown
        },
        margin: if certified { est.value } else { 0.0 },
        witness: Some(NonOrthWitness::Trace {
            grid_min: est.grid_value,
            multistart_min: est.multistart_value,
            observed_min: est.value,
            threshold,
        }),
        evaluations: est.evaluations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStatus {
    /// `k² < d + 1`: no unitary can work.
    Infeasible,
    /// `k² ≥ d + 1`: the necessary condition holds.
    Feasible,
    /// `k ≥ d`: the explicit intertwiner exists.
    Guaranteed,
}

pub fn dimension_bound_check(d: usize, k: usize) -> BoundStatus {
    if k * k < d + 1 {
        BoundStatus::Infeasible
    } else if k >= d {
        BoundStatus::Guaranteed
    } else {
        BoundStatus::Feasible
    }
}

/// `F_i (v ⊗ 1_m)`: an isometry onto the range of the minimal projection `ι(vv*)`.
fn minimal_projection_range(emb: &SubalgebraEmbedding, i: usize, v: &[C64]) -> DMatrix<C64> {
    let f = emb.frame(i);
    let m = emb.multiplicities()[i];
    let mut out = DMatrix::zeros(emb.ambient_dim(), m);
    for (s, &vs) in v.iter().enumerate() {
        if vs == ZERO {
            continue;
        }
        for r in 0..m {
            let col = f.column(s * m + r);
            for row in 0..out.nrows() {
                out[(row, r)] += col[row] * vs;
            }
        }
    }
    out
}

/// `‖ι₁(vv*) ι₂(ww*)‖ = ‖P*Q‖` for the range isometries `P, Q`.
fn projection_product_norm(p: &DMatrix<C64>, q: &DMatrix<C64>) -> f64 {
    let c = p.adjoint() * q;
    if c.is_empty() {
        return 0.0;
    }
    c.singular_values().max()
}

/// Samples minimal projections of two subalgebras and looks for an orthogonal
/// pair. Never certifies.
pub fn pair_nonorthogonal_sampled(
    emb1: &SubalgebraEmbedding,
    emb2: &SubalgebraEmbedding,
    samples: usize,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<NonOrthReport> {
    if emb1.ambient_dim() != emb2.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: emb1.ambient_dim(),
            found: emb2.ambient_dim(),
        });
    }
    let b1 = emb1.structure().blocks().to_vec();
    let b2 = emb2.structure().blocks().to_vec();
    let mut evals = 0usize;
    let mut observed = f64::INFINITY;
    let refuted =
        |x: Vec<C64>, y: Vec<C64>, i: usize, j: usize, norm: f64, evals: usize| NonOrthReport {
            status: NonOrthStatus::Refuted,
            margin: 0.0,
            witness: Some(NonOrthWitness::Refutation {
                x,
                y,
                first_block: i,
                second_block: j,
                block_norm: norm,
            }),
            evaluations: evals,
        };

    // basis-aligned minimal projections first
    for (i, &n1) in b1.iter().enumerate() {
        for s in 0..n1 {
            let mut x = vec![ZERO; n1];
            x[s] = ONE;
            let p = minimal_projection_range(emb1, i, &x);
            for (j, &n2) in b2.iter().enumerate() {
                for t in 0..n2 {
                    let mut y = vec![ZERO; n2];
                    y[t] = ONE;
                    let q = minimal_projection_range(emb2, j, &y);
                    let norm = projection_product_norm(&p, &q);
                    evals += 1;
                    observed = observed.min(norm);
                    if norm <= tol.eig_floor {
                        return Ok(refuted(x, y, i, j, norm, evals));
                    }
                }
            }
        }
    }

    let mut rng = substream(seed, 0);
    for _ in 0..samples {
        let i = rng.random_range(0..b1.len());
        let j = rng.random_range(0..b2.len());
        let x = random_unit_vector(&mut rng, b1[i]);
        let y = random_unit_vector(&mut rng, b2[j]);
        let p = minimal_projection_range(emb1, i, &x);
        let q = minimal_projection_range(emb2, j, &y);
        let norm = projection_product_norm(&p, &q);
        evals += 1;
        observed = observed.min(norm);
        if norm <= tol.eig_floor {
            return Ok(refuted(x, y, i, j, norm, evals));
        }
    }
    Ok(NonOrthReport {
        status: NonOrthStatus::Unknown,
        margin: 0.0,
        witness: Some(NonOrthWitness::Trace {
            grid_min: None,
            multistart_min: None,
            observed_min: observed,
            threshold: tol.eig_floor,
        }),
        evaluations: evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::{haar_unitary, rng_from_seed};

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn intertwiner_identity_small_cases() {
        for (d, k) in [(2, 2), (2, 3), (3, 3), (3, 5)] {
            let it = intertwiner_construct(d, k).unwrap();
            assert!(it.u.unitarity_residual() < 1e-12);
            assert!(it.identity_residual() <= 1e-10, "d={d} k={k}");
        }
        assert!(intertwiner_construct(3, 2).is_err());
    }

    #[test]
    fn k_equal_d_has_no_complement_term() {
        let it = intertwiner_construct(2, 2).unwrap();
        for s in 0..2 {
            for t in 0..2 {
                let e = ComplexMatrix::unit(2, s, t);
                let lhs = e.ampliate(2).congruence(&it.u);
                let rhs = ComplexMatrix::identity(2).tensor(&it.rho(&e));
                assert!((&lhs - &rhs).max_abs() < 1e-10);
            }
        }
    }

    #[test]
    fn slices_of_identity_and_elementary_tensor() {
        let sl = slices(&ComplexMatrix::identity(6), 2, 3).unwrap();
        for p in 0..3 {
            for q in 0..3 {
                let want = if p == q {
                    ComplexMatrix::identity(2)
                } else {
                    ComplexMatrix::zeros(2)
                };
                assert!((&sl[p * 3 + q] - &want).max_abs() == 0.0);
            }
        }
        let v = haar_unitary(2, 1).unwrap();
        let w = haar_unitary(3, 2).unwrap();
        let sl = slices(&v.tensor(&w), 2, 3).unwrap();
        for p in 0..3 {
            for q in 0..3 {
                assert!((&sl[p * 3 + q] - &v.scale_c(w.get(p, q))).max_abs() < 1e-14);
            }
        }
    }

    #[test]
    fn reconstruction_round_trip() {
        let u = haar_unitary(4, 9).unwrap();
        let sl = slices(&u, 2, 2).unwrap();
        assert!((&reconstruct(&sl, 2).unwrap() - &u).max_abs() <= 1e-12);
        assert!(slices(&u, 3, 2).is_err());
    }

    #[test]
    fn block_norm_matches_direct_product() {
        let mut rng = rng_from_seed(4);
        let u = haar_unitary(6, 5).unwrap();
        let x = random_unit_vector(&mut rng, 2);
        let y = random_unit_vector(&mut rng, 2);
        let px = ComplexMatrix::outer(&x, &x).ampliate(3);
        let py = ComplexMatrix::outer(&y, &y).ampliate(3);
        let direct = (&(&px * &u) * &py).op_norm();
        assert!((block_norm(&u, 2, 3, &x, &y).unwrap() - direct).abs() < 1e-12);
    }

    fn pauli_family() -> Vec<ComplexMatrix> {
        let i = ComplexMatrix::identity(2);
        let x = ComplexMatrix::unit(2, 0, 1) + ComplexMatrix::unit(2, 1, 0);
        let z = ComplexMatrix::diag(&[1.0, -1.0]);
        let xz = &x * &z;
        vec![i, x, z, xz]
    }

    #[test]
    fn pauli_family_has_positive_margin() {
        let est = min_span_margin(&pauli_family(), &MarginSearch::both(2000, 8, 50, 3)).unwrap();
        assert!(est.value > 0.5, "{}", est.value);
    }

    #[test]
    fn degenerate_family_has_zero_margin() {
        let mut fam = vec![ComplexMatrix::identity(2)];
        fam.extend((0..3).map(|_| ComplexMatrix::zeros(2)));
        let est = min_span_margin(&fam, &MarginSearch::grid(10)).unwrap();
        assert!(est.value < 1e-15);
    }

    #[test]
    fn identity_is_refuted_intertwiner_certified() {
        let tol = tol();
        for d in 2..4 {
            let r = certify_nonorthogonal_conjugate(
                &ComplexMatrix::identity(d * 2),
                d,
                2,
                200,
                0,
                &tol,
            )
            .unwrap();
            assert!(r.is_refuted());
            match r.witness {
                Some(NonOrthWitness::Refutation { block_norm, .. }) => {
                    assert!(block_norm <= tol.eig_floor)
                }
                _ => panic!("missing witness"),
            }
        }
        let it = intertwiner_construct(2, 3).unwrap();
        let r = certify_nonorthogonal_conjugate(&it.u, 2, 3, 2000, 0, &tol).unwrap();
        assert!(r.is_certified(), "{r:?}");
        assert!(r.margin > 0.0);
    }

    #[test]
    fn too_small_k_never_certifies() {
        let u = haar_unitary(10, 11).unwrap();
        let r = certify_nonorthogonal_conjugate(&u, 5, 2, 500, 1, &tol()).unwrap();
        assert!(!r.is_certified());
    }

    #[test]
    fn dimension_bounds() {
        assert_eq!(dimension_bound_check(5, 2), BoundStatus::Infeasible);
        assert_eq!(dimension_bound_check(3, 3), BoundStatus::Guaranteed);
        assert_eq!(dimension_bound_check(8, 3), BoundStatus::Feasible);
    }

    #[test]
    fn sampled_pairs() {
        let tol = tol();
        let d = SubalgebraEmbedding::diagonal(2);
        assert!(pair_nonorthogonal_sampled(&d, &d, 10, 0, &tol)
            .unwrap()
            .is_refuted());
        let left = SubalgebraEmbedding::ampliation(2, 2);
        let right = SubalgebraEmbedding::right_ampliation(2, 2);
        let r = pair_nonorthogonal_sampled(&left, &right, 200, 0, &tol).unwrap();
        assert_eq!(r.status, NonOrthStatus::Unknown);
        let it = intertwiner_construct(2, 2).unwrap();
        let conj = left.conjugated(&it.u).unwrap();
        let r = pair_nonorthogonal_sampled(&left, &conj, 200, 0, &tol).unwrap();
        assert_eq!(r.status, NonOrthStatus::Unknown);
    }
}
