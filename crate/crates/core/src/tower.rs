//! Finite prefixes of commuting ladders
//!
//! ```text
//! B₁ --μ₁--> B₂ --μ₂--> …
//! |ι₁        |ι₂
//! A₁ --λ₁--> A₂ --λ₂--> …
//! ```
//!
//! with every `Aₙ` realized inside a matrix algebra `M_{Nₙ}`, and the UHF
//! construction that makes the limit inclusion C*-irreducible.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::algebra::{BlockStructure, SubalgebraEmbedding};
use crate::certificate::{verify_certificate, FullnessCertificate};
use crate::error::{Error, Result};
use crate::fullness::{design_certificate, relatively_full};
use crate::matrix::{matmul, ComplexMatrix, ToleranceConfig, C64};
use crate::orthogonality::{
    certify_nonorthogonal_conjugate, intertwiner_construct, pair_nonorthogonal_sampled,
    NonOrthReport, NonOrthStatus,
};
use crate::spectral::eigh_unchecked;

/// Largest ambient dimension a built tower may reach.
pub const MAX_AMBIENT: usize = 1024;

/// Residual bound for commuting squares.
pub const SQUARE_TOL: f64 = 1e-9;

/// Data of the step from level `n` to `n + 1` of a UHF tower: `ι_{n+1} = id_K ⊗ j`
/// with `j(z) = u*(1_d ⊗ z)u ⊗ 1_{d_next}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepData {
    /// `d₁⋯dₙ`.
    pub d: usize,
    /// Regrouped `k_{n+1}`.
    pub k: usize,
    /// Regrouped `d_{n+1}`.
    pub d_next: usize,
}

#[derive(Clone, Debug)]
pub struct TowerLevel {
    pub index: usize,
    pub a_emb: SubalgebraEmbedding,
    pub b_emb: SubalgebraEmbedding,
    /// `λₙ` on the whole ambient algebra: one block of size `Nₙ` into `M_{N_{n+1}}`.
    pub lambda: Option<SubalgebraEmbedding>,
    /// `μₙ` into the block-diagonal algebra of `B_{n+1}` (ambient = its abstract dimension).
    pub mu: Option<SubalgebraEmbedding>,
    /// The unitary `u ∈ M_d ⊗ M_k` used for the step to `n + 1`.
    pub level_unitary: Option<ComplexMatrix>,
    pub step: Option<StepData>,
}

impl TowerLevel {
    pub fn ambient_dim(&self) -> usize {
        self.a_emb.ambient_dim()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UhfParams {
    pub ks: Vec<usize>,
    pub ls: Vec<usize>,
    pub regrouped_ks: Vec<usize>,
    pub regrouped_ls: Vec<usize>,
    pub seed: u64,
}

impl UhfParams {
    pub fn ds(&self) -> Vec<usize> {
        self.regrouped_ks
            .iter()
            .zip(&self.regrouped_ls)
            .map(|(k, l)| l / k)
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Tower {
    pub levels: Vec<TowerLevel>,
    pub params: Option<UhfParams>,
    pub log: Vec<String>,
}

impl Tower {
    /// Checks that consecutive levels fit together.
    pub fn new(levels: Vec<TowerLevel>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidParameter(
                "a tower needs at least one level".into(),
            ));
        }
        for (n, lv) in levels.iter().enumerate() {
            if lv.b_emb.ambient_dim() != lv.a_emb.ambient_dim() {
                return Err(Error::InvalidEmbedding(format!(
                    "level {}: A and B live in different ambient algebras",
                    n + 1
                )));
            }
            let Some(next) = levels.get(n + 1) else {
                continue;
            };
            let (Some(lam), Some(mu)) = (&lv.lambda, &lv.mu) else {
                return Err(Error::InvalidEmbedding(format!(
                    "level {} lacks connecting maps",
                    n + 1
                )));
            };
            if lam.structure().blocks() != [lv.ambient_dim()]
                || lam.ambient_dim() != next.ambient_dim()
            {
                return Err(Error::InvalidEmbedding(format!(
                    "level {}: lambda must map M_{} into M_{}",
                    n + 1,
                    lv.ambient_dim(),
                    next.ambient_dim()
                )));
            }
            if mu.structure() != lv.b_emb.structure()
                || mu.ambient_dim() != next.b_emb.structure().abstract_dim()
            {
                return Err(Error::InvalidEmbedding(format!(
                    "level {}: mu does not connect B_{} to B_{}",
                    n + 1,
                    n + 1,
                    n + 2
                )));
            }
        }
        Ok(Self {
            levels,
            params: None,
            log: Vec::new(),
        })
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Level `n` (1-based).
    pub fn level(&self, n: usize) -> Result<&TowerLevel> {
        if n == 0 || n > self.levels.len() {
            return Err(Error::InvalidParameter(format!(
                "level {n} out of range 1..={}",
                self.levels.len()
            )));
        }
        Ok(&self.levels[n - 1])
    }

    /// `λ_{m,n}` as an embedding of `M_{Nₙ}` into `M_{N_m}`.
    pub fn lambda_between(&self, n: usize, m: usize) -> Result<SubalgebraEmbedding> {
        let mut acc = SubalgebraEmbedding::full(self.level(n)?.ambient_dim());
        self.level(m)?;
        for j in n..m {
            let lam = self.levels[j - 1]
                .lambda
                .as_ref()
                .ok_or_else(|| Error::InvalidEmbedding(format!("level {j} lacks lambda")))?;
            acc = acc.compose_into(lam)?;
        }
        Ok(acc)
    }
}

fn check_sequences(ks: &[usize], ls: &[usize], depth: usize) -> Result<()> {
    if depth == 0 {
        return Err(Error::InvalidParameter("depth must be >= 1".into()));
    }
    if ks.is_empty() || ks.len() != ls.len() {
        return Err(Error::InvalidParameter(
            "ks and ls must be non-empty and of equal length".into(),
        ));
    }
    for (&k, &l) in ks.iter().zip(ls) {
        if k < 2 || l <= k || l % k != 0 {
            return Err(Error::InvalidParameter(format!(
                "k = {k} must be a proper divisor of l = {l} with k >= 2"
            )));
        }
    }
    Ok(())
}

/// Greedy regrouping of the (periodically extended) sequences so that each
/// new `k` strictly exceeds the product of the previous `d`s.
pub fn regroup(ks: &[usize], ls: &[usize], depth: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    check_sequences(ks, ls, depth)?;
    let len = ks.len();
    let mut idx = 0;
    let mut next = || {
        let r = (ks[idx % len], ls[idx % len]);
        idx += 1;
        r
    };
    let (k1, l1) = next();
    let (mut rk, mut rl) = (vec![k1], vec![l1]);
    let mut ambient = l1;
    let mut d = l1 / k1;
    let too_big = |n: usize| {
        Error::InvalidParameter(format!(
            "regrouping needs an ambient dimension above {MAX_AMBIENT} (reached {n})"
        ))
    };
    if ambient > MAX_AMBIENT {
        return Err(too_big(ambient));
    }
    for _ in 1..depth {
        let (mut k, mut l) = next();
        while k <= d {
            let (k2, l2) = next();
            k *= k2;
            l *= l2;
            if ambient.saturating_mul(l) > MAX_AMBIENT {
                return Err(too_big(ambient.saturating_mul(l)));
            }
        }
        ambient = ambient.saturating_mul(l);
        if ambient > MAX_AMBIENT {
            return Err(too_big(ambient));
        }
        d *= l / k;
        rk.push(k);
        rl.push(l);
    }
    Ok((rk, rl))
}

/// Builds a UHF ladder `M_{k₁⊗⋯⊗kₙ} ⊆ M_{ℓ₁⊗⋯⊗ℓₙ}`. The construction is
/// deterministic; `seed` is recorded in the parameters.
pub fn build_uhf_tower(ks: &[usize], ls: &[usize], depth: usize, seed: u64) -> Result<Tower> {
    let (rk, rl) = regroup(ks, ls, depth)?;
    let mut unitaries = Vec::with_capacity(depth.saturating_sub(1));
    let mut d = rl[0] / rk[0];
    for n in 1..depth {
        let it = intertwiner_construct(d, rk[n])?;
        unitaries.push(it.u);
        d *= rl[n] / rk[n];
    }
    let params = UhfParams {
        ks: ks.to_vec(),
        ls: ls.to_vec(),
        regrouped_ks: rk,
        regrouped_ls: rl,
        seed,
    };
    assemble_uhf(params, unitaries)
}

/// Builds the ladder from regrouped sequences and the step unitaries.
fn assemble_uhf(params: UhfParams, unitaries: Vec<ComplexMatrix>) -> Result<Tower> {
    let tol = ToleranceConfig::default();
    let (rk, rl) = (&params.regrouped_ks, &params.regrouped_ls);
    let depth = rk.len();
    if unitaries.len() + 1 != depth {
        return Err(Error::InvalidParameter(format!(
            "{} level unitaries for a tower of depth {depth}",
            unitaries.len()
        )));
    }
    let mut levels: Vec<TowerLevel> = Vec::with_capacity(depth);
    let (mut big_k, mut big_d) = (rk[0], rl[0] / rk[0]);
    let mut n_amb = rl[0];
    let mut w = DMatrix::<C64>::identity(n_amb, n_amb);
    let mut b_emb = SubalgebraEmbedding::ampliation(big_k, big_d);
    for n in 0..depth {
        let a_emb = SubalgebraEmbedding::full(n_amb);
        if n + 1 == depth {
            levels.push(TowerLevel {
                index: n + 1,
                a_emb,
                b_emb,
                lambda: None,
                mu: None,
                level_unitary: None,
                step: None,
            });
            break;
        }
        let (k, l) = (rk[n + 1], rl[n + 1]);
        let dn = l / k;
        let u = &unitaries[n];
        if u.dim() != big_d * k || u.unitarity_residual() > 1e-8 {
            return Err(Error::InvalidParameter(format!(
                "level {} unitary must be a unitary of dimension {}",
                n + 1,
                big_d * k
            )));
        }
        let n_next = n_amb * l;
        // W' = (W ⊗ 1_l)(1_K ⊗ u* ⊗ 1_{d'}) S with S: K⊗k⊗D⊗d' → K⊗D⊗k⊗d'
        let left = w.kronecker(&DMatrix::<C64>::identity(l, l));
        let mid = DMatrix::<C64>::identity(big_k, big_k)
            .kronecker(&u.as_dmatrix().adjoint())
            .kronecker(&DMatrix::<C64>::identity(dn, dn));
        let prod = matmul(&left, &mid);
        let mut w_next = DMatrix::<C64>::zeros(n_next, n_next);
        for a in 0..big_k {
            for b in 0..k {
                for c in 0..big_d {
                    for e in 0..dn {
                        let src = ((a * big_d + c) * k + b) * dn + e;
                        let dst = ((a * k + b) * big_d + c) * dn + e;
                        w_next.set_column(dst, &prod.column(src));
                    }
                }
            }
        }
        let b_next = SubalgebraEmbedding::from_frames(
            n_next,
            BlockStructure::new(vec![big_k * k])?,
            vec![w_next.clone()],
            &tol,
        )?;
        levels.push(TowerLevel {
            index: n + 1,
            a_emb,
            b_emb,
            lambda: Some(SubalgebraEmbedding::ampliation(n_amb, l)),
            mu: Some(SubalgebraEmbedding::ampliation(big_k, k)),
            level_unitary: Some(u.clone()),
            step: Some(StepData {
                d: big_d,
                k,
                d_next: dn,
            }),
        });
        big_k *= k;
        big_d *= dn;
        n_amb = n_next;
        w = w_next;
        b_emb = b_next;
    }
    let mut tower = Tower::new(levels)?;
    tower.log.push(format!(
        "built UHF tower: regrouped ks {:?}, ls {:?}",
        params.regrouped_ks, params.regrouped_ls
    ));
    tower.params = Some(params);
    Ok(tower)
}

/// `Tr_{D_j}(W_j* λ(a) W_j)` for every matrix unit `a` of `A`, per block `j`
/// of `B`, computed from the frames without forming `λ(a)`.
struct PulledUnit {
    /// `‖λ(a)‖²_HS`.
    norm_sq: f64,
    blocks: Vec<DMatrix<C64>>,
}

fn pulled_units(
    lambda: &SubalgebraEmbedding,
    a_emb: &SubalgebraEmbedding,
    b_emb: &SubalgebraEmbedding,
) -> Vec<PulledUnit> {
    let big_l = lambda.multiplicities()[0];
    let lam = lambda.frame(0);
    let id_l = DMatrix::<C64>::identity(big_l, big_l);
    let mut out = Vec::new();
    for (i, &na) in a_emb.structure().blocks().iter().enumerate() {
        let ma = a_emb.multiplicities()[i];
        let ml = ma * big_l;
        let phi = matmul(lam, &a_emb.frame(i).kronecker(&id_l));
        let phi_adj = phi.adjoint();
        // per block of B: R_s[(q, r), t] = Ψ[s·ml + q, t·D + r], Ψ = Φ* W_j
        let rs: Vec<(usize, Vec<DMatrix<C64>>)> = b_emb
            .structure()
            .blocks()
            .iter()
            .enumerate()
            .map(|(j, &kb)| {
                let dj = b_emb.multiplicities()[j];
                let psi = matmul(&phi_adj, b_emb.frame(j));
                let r = (0..na)
                    .map(|s| {
                        DMatrix::from_fn(ml * dj, kb, |row, t| {
                            let (q, r) = (row / dj, row % dj);
                            psi[(s * ml + q, t * dj + r)]
                        })
                    })
                    .collect();
                (dj, r)
            })
            .collect();
        for s in 0..na {
            for t in 0..na {
                let blocks = rs.iter().map(|(_, r)| r[s].adjoint() * &r[t]).collect();
                out.push(PulledUnit {
                    norm_sq: ml as f64,
                    blocks,
                });
            }
        }
    }
    out
}

/// Trace-preserving expectation of `λ(a)` onto `ι(B)` in abstract coordinates.
fn expectation_blocks(p: &PulledUnit, b_emb: &SubalgebraEmbedding) -> Vec<ComplexMatrix> {
    p.blocks
        .iter()
        .zip(b_emb.multiplicities())
        .map(|(g, &dj)| ComplexMatrix::from_dmatrix(g / C64::from(dj as f64)).expect("square"))
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SquareRecord {
    pub n: usize,
    /// Max over matrix units `e` of `B_n` of `‖ι_{n+1}(μ(e)) − λ(ι_n(e))‖_HS`.
    pub square_residual: f64,
    /// Max over matrix units `a` of `A_n` of `‖E_{n+1}(λ(a)) − μ(E_n(a))‖_HS`.
    pub expectation_residual: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SquaresReport {
    pub levels: Vec<SquareRecord>,
    pub max_residual: f64,
    /// `max_residual ≤ 1e-9`; expectation residuals are informational.
    pub passed: bool,
}

/// Checks `ι_{n+1} ∘ μₙ = λₙ ∘ ιₙ` on matrix units and, optionally, the
/// compatibility of the trace-preserving expectations.
pub fn verify_commuting_squares(t: &Tower, with_expectations: bool) -> Result<SquaresReport> {
    let mut levels = Vec::new();
    let mut max_residual: f64 = 0.0;
    for n in 0..t.levels.len().saturating_sub(1) {
        let lv = &t.levels[n];
        let next = &t.levels[n + 1];
        let (lam, mu) = (
            lv.lambda.as_ref().expect("checked"),
            lv.mu.as_ref().expect("checked"),
        );
        let mut worst: f64 = 0.0;
        for (i, &nb) in lv.b_emb.structure().blocks().iter().enumerate() {
            for s in 0..nb {
                for u in 0..nb {
                    let lhs = next.b_emb.apply(&mu.unit_image(i, s, u))?;
                    let rhs = lam.apply(&lv.b_emb.unit_image(i, s, u))?;
                    worst = worst.max((&lhs - &rhs).frobenius_norm());
                }
            }
        }
        max_residual = max_residual.max(worst);
        let expectation_residual = if with_expectations {
            let up = pulled_units(lam, &lv.a_emb, &next.b_emb);
            let here = pulled_units(
                &SubalgebraEmbedding::full(lv.ambient_dim()),
                &lv.a_emb,
                &lv.b_emb,
            );
            let mut e: f64 = 0.0;
            for (p, q) in up.iter().zip(&here) {
                let lhs = next
                    .b_emb
                    .join_abstract(&expectation_blocks(p, &next.b_emb));
                let rhs = mu.apply_blocks(&expectation_blocks(q, &lv.b_emb))?;
                e = e.max((&lhs - &rhs).frobenius_norm());
            }
            Some(e)
        } else {
            None
        };
        levels.push(SquareRecord {
            n: n + 1,
            square_residual: worst,
            expectation_residual,
        });
    }
    Ok(SquaresReport {
        levels,
        max_residual,
        passed: max_residual <= SQUARE_TOL,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegularityReport {
    pub n: usize,
    pub m: usize,
    /// `dim λ_{m,n}(Aₙ) ∩ ι_m(B_m)`.
    pub intersection_dim: usize,
    /// `dim λ_{m,n}(ιₙ(Bₙ))`.
    pub expected_dim: usize,
    /// `λ_{m,n}(ιₙ(Bₙ)) ⊆ ι_m(B_m)` and `ιₙ(Bₙ) ⊆ Aₙ`.
    pub contained: bool,
    pub regular: bool,
}

/// Compares `λ_{m,n}(Aₙ) ∩ ι_m(B_m)` with `λ_{m,n}(ιₙ(Bₙ))`.
///
/// The intersection is the eigenvalue-one space of the compression of the
/// projection onto `ι_m(B_m)` to `λ_{m,n}(Aₙ)`, which is a Gram matrix of the
/// pulled-back matrix units.
pub fn regularity_check(
    t: &Tower,
    n: usize,
    m: usize,
    tol: &ToleranceConfig,
) -> Result<RegularityReport> {
    if m <= n {
        return Err(Error::InvalidParameter(format!(
            "need n < m, got n={n}, m={m}"
        )));
    }
    let lv_n = t.level(n)?;
    let lv_m = t.level(m)?;
    let lam = t.lambda_between(n, m)?;

    let rows: Vec<Vec<C64>> = pulled_units(&lam, &lv_n.a_emb, &lv_m.b_emb)
        .into_iter()
        .map(|p| {
            let w = 1.0 / p.norm_sq.sqrt();
            p.blocks
                .iter()
                .zip(lv_m.b_emb.multiplicities())
                .flat_map(|(g, &dj)| {
                    let s = w / (dj as f64).sqrt();
                    g.iter().map(move |z| z * s).collect::<Vec<_>>()
                })
                .collect()
        })
        .collect();
    let (r, c) = (rows.len(), rows.first().map_or(0, |v| v.len()));
    let f = DMatrix::from_fn(r, c, |i, j| rows[i][j]);
    let gram = if r <= c {
        matmul(&f, &f.adjoint())
    } else {
        matmul(&f.adjoint(), &f)
    };
    let e = eigh_unchecked(&ComplexMatrix::from_dmatrix(gram)?);
    let intersection_dim = e
        .values
        .iter()
        .filter(|&&v| 1.0 - v <= tol.eig_floor)
        .count();
    let expected_dim = lv_n.b_emb.structure().dimension();

    let mut contained = true;
    for p in pulled_units(&lam, &lv_n.b_emb, &lv_m.b_emb) {
        let kept: f64 = p
            .blocks
            .iter()
            .zip(lv_m.b_emb.multiplicities())
            .map(|(g, &dj)| g.norm_squared() / dj as f64)
            .sum();
        if (p.norm_sq - kept) / p.norm_sq > tol.eig_floor {
            contained = false;
        }
    }
    for (i, &nb) in lv_n.b_emb.structure().blocks().iter().enumerate() {
        for s in 0..nb {
            for u in 0..nb {
                if !lv_n.a_emb.contains(&lv_n.b_emb.unit_image(i, s, u), tol)? {
                    contained = false;
                }
            }
        }
    }
    Ok(RegularityReport {
        n,
        m,
        intersection_dim,
        expected_dim,
        contained,
        regular: contained && intersection_dim == expected_dim,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorollaryMethod {
    /// Reduced to the conjugate pair `M_d ⊗ 1`, `u*(M_d ⊗ 1)u`.
    Conjugate,
    /// Sampled minimal projections of `λₙ(Aₙ)` and `ι_{n+1}(B_{n+1})'`.
    Sampled,
    /// No test available (the next `A` is not the full ambient algebra).
    Skipped,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorollaryLevel {
    pub n: usize,
    pub method: CorollaryMethod,
    pub report: NonOrthReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorollaryReport {
    pub levels: Vec<CorollaryLevel>,
    pub all_certified: bool,
}

/// For each step `n → n + 1`, tests that `λₙ(Aₙ)` and `A_{n+1} ∩ ι_{n+1}(B_{n+1})'`
/// are everywhere non-orthogonal.
pub fn verify_corollary_conditions(
    t: &Tower,
    budget: usize,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<CorollaryReport> {
    let mut levels = Vec::new();
    for n in 0..t.levels.len().saturating_sub(1) {
        let lv = &t.levels[n];
        let next = &t.levels[n + 1];
        let (method, report) = match (&lv.level_unitary, &lv.step) {
            (Some(u), Some(step)) => (
                CorollaryMethod::Conjugate,
                certify_nonorthogonal_conjugate(u, step.d, step.k, budget, seed, tol)?,
            ),
            _ if next.a_emb.structure().blocks() == [next.ambient_dim()] => {
                let lam_a = lv
                    .a_emb
                    .compose_into(lv.lambda.as_ref().expect("checked"))?;
                let comm = next.b_emb.commutant_embedding();
                (
                    CorollaryMethod::Sampled,
                    pair_nonorthogonal_sampled(&lam_a, &comm, budget, seed, tol)?,
                )
            }
            _ => (
                CorollaryMethod::Skipped,
                NonOrthReport {
                    status: NonOrthStatus::Unknown,
                    margin: 0.0,
                    witness: None,
                    evaluations: 0,
                },
            ),
        };
        levels.push(CorollaryLevel {
            n: n + 1,
            method,
            report,
        });
    }
    let all_certified = levels.iter().all(|l| l.report.is_certified());
    Ok(CorollaryReport {
        levels,
        all_certified,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Propagation {
    /// First level `m ≥ n` at which `λ_{m,n}(a)` is full relatively to `ι_m(B_m)`.
    pub level: Option<usize>,
    pub certificate: Option<FullnessCertificate>,
    /// `λ_min(E_m(λ_{m,n}(a)))` for each level tried.
    pub min_eigenvalues: Vec<f64>,
}

/// Pushes `a ∈ Aₙ` up the tower until it becomes relatively full, and returns
/// a verified certificate at that level.
pub fn propagate_fullness(
    t: &Tower,
    n: usize,
    a: &ComplexMatrix,
    tol: &ToleranceConfig,
) -> Result<Propagation> {
    let lv = t.level(n)?;
    if a.dim() != lv.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: lv.ambient_dim(),
            found: a.dim(),
        });
    }
    if a.op_norm() <= tol.eig_floor {
        return Err(Error::InvalidParameter(
            "element is numerically zero".into(),
        ));
    }
    if !lv.a_emb.contains(a, tol)? {
        return Err(Error::NotInAlgebra {
            residual: lv.a_emb.membership_residual(a)?,
        });
    }
    let mut min_eigenvalues = Vec::new();
    let mut pushed = a.clone();
    for m in n..=t.depth() {
        if m > n {
            pushed = t.levels[m - 2]
                .lambda
                .as_ref()
                .expect("checked")
                .apply(&pushed)?;
        }
        let b = &t.levels[m - 1].b_emb;
        let decision = relatively_full(&pushed, b, tol)?;
        min_eigenvalues.push(decision.min_eigenvalue);
        if decision.is_full() {
            let cert = if crate::spectral::min_eigenvalue(&pushed)? > tol.eig_floor {
                FullnessCertificate::identity(
                    pushed.dim(),
                    crate::spectral::min_eigenvalue(&pushed)?,
                )?
            } else {
                design_certificate(&pushed, b, tol)?
            };
            let check = verify_certificate(&pushed, &cert, Some(b), tol);
            if !check.valid {
                return Err(Error::HypothesisFailed(format!(
                    "certificate at level {m} failed verification: {}",
                    check.violations.join("; ")
                )));
            }
            return Ok(Propagation {
                level: Some(m),
                certificate: Some(cert),
                min_eigenvalues,
            });
        }
    }
    Ok(Propagation {
        level: None,
        certificate: None,
        min_eigenvalues,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChristensenBudget {
    pub n: usize,
    pub epsilon: f64,
    /// `δ = 10^{-q}`.
    pub q: f64,
    pub delta: f64,
    /// `γ₁, …, γ_{n+1}`.
    pub gammas: Vec<f64>,
    /// `η₁, …, ηₙ`.
    pub etas: Vec<f64>,
}

fn budget_table(n: usize, q: f64) -> (Vec<f64>, Vec<f64>) {
    let mut gammas = vec![0.0; n + 1];
    let mut etas = vec![0.0; n];
    gammas[n] = 120.0 * 10f64.powf(-q / 2.0);
    for j in (0..n).rev() {
        etas[j] = 120.0 * (2.0 * gammas[j + 1]).sqrt();
        gammas[j] = gammas[j + 1] + etas[j];
    }
    (gammas, etas)
}

/// Largest `δ = 10^{-q}`, `q ∈ {4.25, 4.5, …}`, with `δ < 10⁻⁴`, `γ₁ ≤ ε`
/// and `2γⱼ < 10⁻⁴` for `2 ≤ j ≤ n`, where `γ_{n+1} = 120 δ^{1/2}`,
/// `ηⱼ = 120 (2γ_{j+1})^{1/2}`, `γⱼ = γ_{j+1} + ηⱼ`.
pub fn christensen_budget(n: usize, epsilon: f64) -> Result<ChristensenBudget> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let mut binding = "gamma_1 <= epsilon";
    for step in 17..=1200 {
        let q = step as f64 / 4.0;
        let delta = 10f64.powf(-q);
        if delta <= 0.0 || !delta.is_normal() {
            break;
        }
        let (gammas, etas) = budget_table(n, q);
        let first_ok = gammas[0] <= epsilon;
        let inner_ok = (1..n).all(|j| 2.0 * gammas[j] < 1e-4);
        if first_ok && inner_ok && delta < 1e-4 {
            return Ok(ChristensenBudget {
                n,
                epsilon,
                q,
                delta,
                gammas,
                etas,
            });
        }
        binding = if !first_ok {
            "gamma_1 <= epsilon"
        } else {
            "2 gamma_j < 1e-4"
        };
    }
    Err(Error::InvalidParameter(format!(
        "no delta within floating range satisfies {binding} for n={n}, epsilon={epsilon}"
    )))
}

#[derive(Serialize, Deserialize)]
struct LevelJson {
    index: usize,
    ambient_dim: usize,
    b_blocks: Vec<usize>,
    b_multiplicities: Vec<usize>,
    step: Option<StepData>,
    level_unitary: Option<ComplexMatrix>,
}

#[derive(Serialize, Deserialize)]
struct TowerJson {
    params: UhfParams,
    levels: Vec<LevelJson>,
}

impl Tower {
    /// Compact JSON for UHF towers: the parameters and the step unitaries; the
    /// embeddings are rebuilt from them on load.
    pub fn to_json(&self) -> Result<String> {
        let params = self
            .params
            .clone()
            .ok_or_else(|| Error::Format("only UHF towers have a JSON form".into()))?;
        let levels = self
            .levels
            .iter()
            .map(|lv| LevelJson {
                index: lv.index,
                ambient_dim: lv.ambient_dim(),
                b_blocks: lv.b_emb.structure().blocks().to_vec(),
                b_multiplicities: lv.b_emb.multiplicities().to_vec(),
                step: lv.step,
                level_unitary: lv.level_unitary.clone(),
            })
            .collect();
        Ok(serde_json::to_string(&TowerJson { params, levels })?)
    }
}

/// Parses the JSON written by [`Tower::to_json`] and replays the construction
/// with the stored unitaries.
pub fn parse_tower_json(text: &str) -> Result<Tower> {
    let tj: TowerJson = serde_json::from_str(text)?;
    let p = &tj.params;
    let depth = p.regrouped_ks.len();
    if depth == 0 || tj.levels.len() != depth || p.regrouped_ls.len() != depth {
        return Err(Error::Format(
            "level count does not match the parameters".into(),
        ));
    }
    check_sequences(&p.regrouped_ks, &p.regrouped_ls, depth)?;
    check_sequences(&p.ks, &p.ls, 1)?;
    let mut ambient: usize = 1;
    for &l in &p.regrouped_ls {
        ambient = ambient.saturating_mul(l);
        if ambient > MAX_AMBIENT {
            return Err(Error::Format(format!(
                "ambient dimension exceeds {MAX_AMBIENT}"
            )));
        }
    }
    let mut unitaries = Vec::new();
    for (n, lv) in tj.levels.iter().enumerate() {
        if lv.index != n + 1 {
            return Err(Error::Format(format!(
                "level {} has index {}",
                n + 1,
                lv.index
            )));
        }
        match (&lv.level_unitary, n + 1 < depth) {
            (Some(u), true) => unitaries.push(u.clone()),
            (None, false) => {}
            _ => {
                return Err(Error::Format(format!(
                    "level {} has a misplaced unitary",
                    n + 1
                )))
            }
        }
    }
    let tower = assemble_uhf(p.clone(), unitaries)?;
    for (lv, js) in tower.levels.iter().zip(&tj.levels) {
        if lv.ambient_dim() != js.ambient_dim
            || lv.b_emb.structure().blocks() != js.b_blocks.as_slice()
            || lv.b_emb.multiplicities() != js.b_multiplicities.as_slice()
            || lv.step != js.step
        {
            return Err(Error::Format(format!(
                "level {} does not match its parameters",
                lv.index
            )));
        }
    }
    Ok(tower)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::{haar_unitary, random_rank_one, rng_from_seed};

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn regrouping_running_example() {
        let (k, l) = regroup(&[2, 2], &[6, 6], 2).unwrap();
        assert_eq!(k, vec![2, 4]);
        assert_eq!(l, vec![6, 36]);
        assert!(regroup(&[2], &[2], 1).is_err());
        assert!(regroup(&[3], &[6], 0).is_err());
    }

    #[test]
    fn running_example_depth_one_and_two() {
        let t1 = build_uhf_tower(&[2, 2], &[6, 6], 1, 0).unwrap();
        assert_eq!(t1.levels[0].ambient_dim(), 6);
        assert!(verify_commuting_squares(&t1, true).unwrap().passed);
        let t = build_uhf_tower(&[2, 2], &[6, 6], 2, 0).unwrap();
        assert_eq!(t.levels[1].ambient_dim(), 216);
        let sq = verify_commuting_squares(&t, false).unwrap();
        assert!(sq.passed, "{:?}", sq.levels);
        let r = regularity_check(&t, 1, 2, &tol()).unwrap();
        assert!(r.regular, "{r:?}");
    }

    #[test]
    fn pulled_units_match_dense_expectation() {
        let t = build_uhf_tower(&[2, 3], &[4, 6], 2, 0).unwrap();
        let (lv, next) = (&t.levels[0], &t.levels[1]);
        let lam = lv.lambda.as_ref().unwrap();
        let pulled = pulled_units(lam, &lv.a_emb, &next.b_emb);
        let n = lv.ambient_dim();
        for (idx, p) in pulled.iter().enumerate().step_by(5) {
            let e = ComplexMatrix::unit(n, idx / n, idx % n);
            let dense = next.b_emb.pull_back(&lam.apply(&e).unwrap()).unwrap();
            let fast = expectation_blocks(p, &next.b_emb);
            assert!((&dense[0] - &fast[0]).max_abs() < 1e-12);
        }
    }

    #[test]
    fn twisted_iota_is_flagged() {
        let mut t = build_uhf_tower(&[2, 3], &[4, 6], 2, 0).unwrap();
        let v = haar_unitary(t.levels[1].ambient_dim(), 3).unwrap();
        t.levels[1].b_emb = t.levels[1].b_emb.conjugated(&v).unwrap();
        let sq = verify_commuting_squares(&t, false).unwrap();
        assert!(!sq.passed);
        assert!(sq.max_residual > 0.1);
    }

    /// `M₂ → M₄` with `B₁ = C`, `B₂ = A₁` embedded by `λ₁`.
    fn non_regular_tower() -> Tower {
        let l1 = TowerLevel {
            index: 1,
            a_emb: SubalgebraEmbedding::full(2),
            b_emb: SubalgebraEmbedding::scalars(2),
            lambda: Some(SubalgebraEmbedding::ampliation(2, 2)),
            mu: Some(SubalgebraEmbedding::scalars(2)),
            level_unitary: None,
            step: None,
        };
        let l2 = TowerLevel {
            index: 2,
            a_emb: SubalgebraEmbedding::full(4),
            b_emb: SubalgebraEmbedding::ampliation(2, 2),
            lambda: None,
            mu: None,
            level_unitary: None,
            step: None,
        };
        Tower::new(vec![l1, l2]).unwrap()
    }

    #[test]
    fn non_regular_example() {
        let t = non_regular_tower();
        assert!(verify_commuting_squares(&t, false).unwrap().passed);
        let r = regularity_check(&t, 1, 2, &tol()).unwrap();
        assert_eq!(r.intersection_dim, 4);
        assert_eq!(r.expected_dim, 1);
        assert!(!r.regular);
    }

    #[test]
    fn trivial_tower_is_regular() {
        let mk = |i, n: usize, last: bool| TowerLevel {
            index: i,
            a_emb: SubalgebraEmbedding::full(n),
            b_emb: SubalgebraEmbedding::full(n),
            lambda: (!last).then(|| SubalgebraEmbedding::ampliation(n, 2)),
            mu: (!last).then(|| SubalgebraEmbedding::ampliation(n, 2)),
            level_unitary: None,
            step: None,
        };
        let t = Tower::new(vec![mk(1, 2, false), mk(2, 4, true)]).unwrap();
        let sq = verify_commuting_squares(&t, true).unwrap();
        assert!(sq.passed);
        assert!(sq.levels[0].expectation_residual.unwrap() < 1e-12);
        assert!(regularity_check(&t, 1, 2, &tol()).unwrap().regular);
    }

    #[test]
    fn corollary_conditions_and_fallbacks() {
        let tol = tol();
        let mut t = build_uhf_tower(&[2, 3], &[4, 6], 2, 0).unwrap();
        let rep = verify_corollary_conditions(&t, 500, 0, &tol).unwrap();
        assert!(rep.all_certified, "{rep:?}");
        let step = t.levels[0].step.unwrap();
        t.levels[0].level_unitary = Some(ComplexMatrix::identity(step.d * step.k));
        let rep = verify_corollary_conditions(&t, 500, 0, &tol).unwrap();
        assert_eq!(rep.levels[0].report.status, NonOrthStatus::Refuted);
        let rep = verify_corollary_conditions(&non_regular_tower(), 50, 0, &tol).unwrap();
        assert_eq!(rep.levels[0].method, CorollaryMethod::Sampled);
        assert!(!rep.levels[0].report.is_certified());
    }

    #[test]
    fn propagation_of_identity_and_rank_one() {
        let tol = tol();
        let t = build_uhf_tower(&[2, 3], &[4, 6], 2, 0).unwrap();
        let p = propagate_fullness(&t, 1, &ComplexMatrix::identity(4), &tol).unwrap();
        assert_eq!(p.level, Some(1));
        assert_eq!(p.certificate.unwrap().len(), 1);
        // generic rank one is already full at level 1 here (E(a) = 1 ⊗ Tr(a)/2)
        let mut rng = rng_from_seed(5);
        let a = random_rank_one(&mut rng, 4);
        assert_eq!(propagate_fullness(&t, 1, &a, &tol).unwrap().level, Some(1));
        let e00 = ComplexMatrix::unit(4, 0, 0);
        let p = propagate_fullness(&t, 1, &e00, &tol).unwrap();
        assert_eq!(p.level, Some(2), "{:?}", p.min_eigenvalues);
        assert!(p.min_eigenvalues[0] < tol.eig_floor);
        assert!(propagate_fullness(&t, 1, &ComplexMatrix::zeros(4), &tol).is_err());
    }

    #[test]
    fn degenerate_tower_propagation() {
        // B = A = diagonal at both levels
        let tol = tol();
        let l1 = TowerLevel {
            index: 1,
            a_emb: SubalgebraEmbedding::diagonal(2),
            b_emb: SubalgebraEmbedding::diagonal(2),
            lambda: Some(SubalgebraEmbedding::ampliation(2, 2)),
            mu: Some(SubalgebraEmbedding::diagonal(2)),
            level_unitary: None,
            step: None,
        };
        let l2 = TowerLevel {
            index: 2,
            a_emb: SubalgebraEmbedding::diagonal(2)
                .compose_into(&SubalgebraEmbedding::ampliation(2, 2))
                .unwrap(),
            b_emb: SubalgebraEmbedding::diagonal(2)
                .compose_into(&SubalgebraEmbedding::ampliation(2, 2))
                .unwrap(),
            lambda: None,
            mu: None,
            level_unitary: None,
            step: None,
        };
        let t = Tower::new(vec![l1, l2]).unwrap();
        let sq = verify_commuting_squares(&t, true).unwrap();
        assert!(sq.passed);
        assert!(sq.levels[0].expectation_residual.unwrap() < 1e-12);
        let e11 = ComplexMatrix::unit(2, 0, 0);
        assert_eq!(propagate_fullness(&t, 1, &e11, &tol).unwrap().level, None);
        let full = ComplexMatrix::diag(&[1.0, 0.25]);
        assert_eq!(
            propagate_fullness(&t, 1, &full, &tol).unwrap().level,
            Some(1)
        );
    }

    #[test]
    fn christensen_examples() {
        let b = christensen_budget(1, 0.1).unwrap();
        assert!(b.delta < 1e-4);
        assert!(b.gammas[0] <= 0.1);
        assert!((b.gammas[1] - 120.0 * b.delta.sqrt()).abs() < 1e-15);
        let mut prev = 1.0;
        for eps in [0.1, 0.01, 0.001] {
            let d = christensen_budget(3, eps).unwrap().delta;
            assert!(d <= prev);
            prev = d;
        }
        assert!(christensen_budget(0, 0.1).is_err());
        assert!(christensen_budget(1, 1.5).is_err());
    }

    #[test]
    fn json_round_trip_replays_unitaries() {
        let t = build_uhf_tower(&[2, 3], &[4, 6], 2, 7).unwrap();
        let text = t.to_json().unwrap();
        let back = parse_tower_json(&text).unwrap();
        assert_eq!(back.params, t.params);
        assert!(verify_commuting_squares(&back, false).unwrap().passed);
        assert!(parse_tower_json("{}").is_err());
    }
}
