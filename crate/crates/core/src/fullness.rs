//! Relative fullness: the decision via the Haar expectation onto the relative
//! commutant, and explicit certificate constructions.

use serde::{Deserialize, Serialize};

use crate::algebra::{conditional_expectation, full_in_algebra, SubalgebraEmbedding};
use crate::certificate::{congruence_sum, CertificateKind, FullnessCertificate};
use crate::error::{Error, Result};
use crate::haar::{haar_unitary_with, rng_from_seed};
use nalgebra::DMatrix;

use crate::matrix::{matmul, ComplexMatrix, ToleranceConfig, C64, ONE, ZERO};
use crate::spectral::{
    cutoff_apply, eigh, inv_sqrt_pd, min_eigenvalue_unchecked, positive_part_shift, range_basis,
    spectral_projection_below, sqrt_psd,
};

pub use crate::certificate::{verify_certificate, CertificateCheck};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Full,
    NotFull,
}

/// Outcome of [`relatively_full`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FullnessDecision {
    pub decision: Decision,
    /// Smallest eigenvalue of `E(a)`.
    pub min_eigenvalue: f64,
    pub expectation_spectrum: Vec<f64>,
    /// Nonzero projection in the relative commutant orthogonal to `a`.
    pub witness: Option<ComplexMatrix>,
    /// `‖p a‖` for the witness.
    pub witness_residual: Option<f64>,
}

impl FullnessDecision {
    pub fn is_full(&self) -> bool {
        self.decision == Decision::Full
    }
}

fn check_positive(a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<()> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let scale = a.max_abs().max(1.0);
    let h = a.hermitian_residual();
    if h > tol.identity_tol.max(1e-12) * 100.0 * scale {
        return Err(Error::NotHermitian { residual: h });
    }
    let lo = min_eigenvalue_unchecked(a);
    if lo < -tol.eig_floor * scale {
        return Err(Error::NotPositive { min_eigenvalue: lo });
    }
    Ok(())
}

fn check_member(emb: &SubalgebraEmbedding, x: &ComplexMatrix, tol: &ToleranceConfig) -> Result<()> {
    let r = emb.membership_residual(x)?;
    if r > tol.eig_floor * x.frobenius_norm().max(1.0) {
        return Err(Error::NotInAlgebra { residual: r });
    }
    Ok(())
}

/// Decides whether `a` is full relatively to `ι(B)`: `E(a)` invertible. When
/// it is not, the spectral projection of `E(a)` at its kernel is returned; it
/// lies in `ι(B)' ∩ M_N` and is orthogonal to `a`.
pub fn relatively_full(
    a: &ComplexMatrix,
    emb: &SubalgebraEmbedding,
    tol: &ToleranceConfig,
) -> Result<FullnessDecision> {
    if a.dim() != emb.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: emb.ambient_dim(),
            found: a.dim(),
        });
    }
    check_positive(a, tol)?;
    let e = conditional_expectation(emb, a)?;
    let spec = eigh(&e)?;
    let lo = spec.values[0];
    if lo > tol.eig_floor {
        return Ok(FullnessDecision {
            decision: Decision::Full,
            min_eigenvalue: lo,
            expectation_spectrum: spec.values,
            witness: None,
            witness_residual: None,
        });
    }
    let p = spec_projection(&spec, tol.eig_floor);
    let residual = (&p * a).op_norm();
    Ok(FullnessDecision {
        decision: Decision::NotFull,
        min_eigenvalue: lo,
        expectation_spectrum: spec.values,
        witness: Some(p),
        witness_residual: Some(residual),
    })
}

fn spec_projection(spec: &crate::spectral::Eigh, level: f64) -> ComplexMatrix {
    spec.apply(|t| if t <= level { 1.0 } else { 0.0 })
}

/// Largest projection `p` commuting with `ι(B)` and satisfying `p a = 0`,
/// computed without the expectation: its range is the joint kernel of the
/// operators `a ι(e_{st})`. Returns `None` when that kernel is trivial.
pub fn orthogonal_commutant_projection(
    a: &ComplexMatrix,
    emb: &SubalgebraEmbedding,
    tol: &ToleranceConfig,
) -> Result<Option<ComplexMatrix>> {
    if a.dim() != emb.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: emb.ambient_dim(),
            found: a.dim(),
        });
    }
    check_positive(a, tol)?;
    let n = a.dim();
    let mut gram = ComplexMatrix::zeros(n);
    for (i, &bn) in emb.structure().blocks().iter().enumerate() {
        for s in 0..bn {
            for t in 0..bn {
                let m = a * &emb.unit_image(i, s, t);
                gram = gram + &m.adjoint() * &m;
            }
        }
    }
    let scale = a.op_norm().max(1.0);
    let p = spectral_projection_below(&gram, tol.eig_floor * scale * scale)?;
    let basis = range_basis(p.as_dmatrix(), 0.5);
    if basis.is_empty() {
        return Ok(None);
    }
    Ok(Some(p))
}

/// Riemann sums of the Haar twirl: samples unitaries `uⱼ` of `ι(B)` until
/// `Σ uⱼ* a uⱼ / m ≥ target · c̃` with `c̃ = λ_min(E(a))`, and returns
/// `xⱼ = uⱼ / √(m c̃)`, so that `Σ xⱼ* a xⱼ ≥ target`. `budget` bounds `m`.
pub fn certificate_from_expectation(
    a: &ComplexMatrix,
    emb: &SubalgebraEmbedding,
    target_margin: f64,
    seed: u64,
    budget: usize,
    tol: &ToleranceConfig,
) -> Result<FullnessCertificate> {
    if !(target_margin > 0.0 && target_margin < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target margin must lie in (0, 1), got {target_margin}"
        )));
    }
    if budget == 0 {
        return Err(Error::InvalidParameter("budget must be positive".into()));
    }
    let decision = relatively_full(a, emb, tol)?;
    let direct = min_eigenvalue_unchecked(a);
    if direct >= target_margin {
        return FullnessCertificate::identity(a.dim(), direct);
    }
    if !decision.is_full() {
        return Err(Error::NotFull {
            min_eigenvalue: decision.min_eigenvalue,
        });
    }
    let c = decision.min_eigenvalue;
    let sampler = TwirlSampler::new(a, emb);
    let mut rng = rng_from_seed(seed);
    let mut units: Vec<Vec<ComplexMatrix>> = Vec::new();
    let mut sum = ComplexMatrix::zeros(a.dim());
    let mut best = 0.0f64;
    let mut batch = 4;
    while units.len() < budget {
        let take = batch.min(budget - units.len());
        for _ in 0..take {
            let us: Vec<ComplexMatrix> = emb
                .structure()
                .blocks()
                .iter()
                .map(|&n| haar_unitary_with(&mut rng, n))
                .collect();
            sum = sum + sampler.congruence(&us);
            units.push(us);
        }
        let m = units.len() as f64;
        let lo = min_eigenvalue_unchecked(&sum) / m;
        best = best.max(lo / c);
        if lo >= target_margin * c {
            let w = 1.0 / (m * c).sqrt();
            let elements = units
                .iter()
                .map(|us| emb.apply_blocks(us).map(|u| u.scale(w)))
                .collect::<Result<Vec<_>>>()?;
            return FullnessCertificate::new(elements, lo / c, CertificateKind::General);
        }
        batch *= 2;
    }
    Err(Error::BudgetExhausted { budget, best })
}

/// Works in the coordinates of the embedding's frames, where unitaries of `B`
/// are block-diagonal Kronecker products.
struct TwirlSampler<'e> {
    emb: &'e SubalgebraEmbedding,
    a_frame: ComplexMatrix,
}

impl<'e> TwirlSampler<'e> {
    fn new(a: &ComplexMatrix, emb: &'e SubalgebraEmbedding) -> Self {
        let w = emb.frame_unitary();
        Self {
            emb,
            a_frame: a.congruence(&w),
        }
    }

    /// `U* a U` in frame coordinates, `U = ⊕ᵢ uᵢ ⊗ 1_{mᵢ}`, by mixing row and
    /// column blocks instead of a dense product.
    fn congruence(&self, us: &[ComplexMatrix]) -> ComplexMatrix {
        let a = self.a_frame.as_dmatrix();
        let n = a.nrows();
        let layout = self.layout();
        let mut right = DMatrix::<C64>::zeros(n, n);
        for ((o, nb, m), u) in layout.iter().zip(us) {
            let u = u.as_dmatrix();
            for t2 in 0..*nb {
                for t in 0..*nb {
                    let w = u[(t, t2)];
                    if w == ZERO {
                        continue;
                    }
                    for r in 0..*m {
                        let src = a.column(o + t * m + r);
                        right.column_mut(o + t2 * m + r).axpy(w, &src, ONE);
                    }
                }
            }
        }
        let mut out = DMatrix::<C64>::zeros(n, n);
        for ((o, nb, m), u) in layout.iter().zip(us) {
            let u = u.as_dmatrix();
            for s2 in 0..*nb {
                for s in 0..*nb {
                    let w = u[(s, s2)].conj();
                    if w == ZERO {
                        continue;
                    }
                    for r in 0..*m {
                        let (src, dst) = (o + s * m + r, o + s2 * m + r);
                        for c in 0..n {
                            out[(dst, c)] += w * right[(src, c)];
                        }
                    }
                }
            }
        }
        ComplexMatrix::wrap(out)
    }

    /// `(offset, nᵢ, mᵢ)` per block.
    fn layout(&self) -> Vec<(usize, usize, usize)> {
        let mut o = 0;
        self.emb
            .structure()
            .blocks()
            .iter()
            .zip(self.emb.multiplicities())
            .map(|(&nb, &m)| {
                let e = (o, nb, m);
                o += nb * m;
                e
            })
            .collect()
    }
}

/// Clock-and-shift unitaries `X^p Z^q` of `M_n`, indexed `p * n + q`. Their
/// uniform average of `w* y w` is `tr(y)/n · 1`.
pub fn clock_shift(n: usize, j: usize) -> ComplexMatrix {
    let (p, q) = (j / n, j % n);
    let mut w = ComplexMatrix::zeros(n);
    for s in 0..n {
        let phase = 2.0 * std::f64::consts::PI * ((q * s) % n) as f64 / n as f64;
        w.set((s + p) % n, s, C64::from_polar(1.0, phase));
    }
    w
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Upper limit on the number of elements [`design_certificate`] may emit.
pub const DESIGN_LIMIT: usize = 1 << 16;

/// Deterministic twirl: the unitaries `⊕ᵢ ζ^{i r} w^{(i)}_j` with `w^{(i)}_j` a
/// clock-and-shift unitary of block `i` (index `j` modulo `nᵢ²`) and `ζ` a
/// primitive root of unity of order = number of blocks. Their average of
/// `U* a U` is exactly `E(a)`, so `xⱼ = Uⱼ / √(m c)` with `c = λ_min(E(a))`
/// certifies margin `≈ 1`.
pub fn design_certificate(
    a: &ComplexMatrix,
    emb: &SubalgebraEmbedding,
    tol: &ToleranceConfig,
) -> Result<FullnessCertificate> {
    let decision = relatively_full(a, emb, tol)?;
    if !decision.is_full() {
        return Err(Error::NotFull {
            min_eigenvalue: decision.min_eigenvalue,
        });
    }
    let c = decision.min_eigenvalue;
    let blocks = emb.structure().blocks();
    let period = blocks
        .iter()
        .fold(1usize, |l, &n| l / gcd(l, n * n) * (n * n));
    let m = period.saturating_mul(blocks.len());
    if m > DESIGN_LIMIT {
        return Err(Error::InvalidParameter(format!(
            "design of {m} elements exceeds the limit {DESIGN_LIMIT}"
        )));
    }
    let sampler = TwirlSampler::new(a, emb);
    let nb = blocks.len();
    let mut units = Vec::with_capacity(m);
    let mut sum = ComplexMatrix::zeros(a.dim());
    for j in 0..period {
        for r in 0..nb {
            let us: Vec<ComplexMatrix> = blocks
                .iter()
                .enumerate()
                .map(|(i, &n)| {
                    let z = C64::from_polar(
                        1.0,
                        2.0 * std::f64::consts::PI * ((i * r) % nb) as f64 / nb as f64,
                    );
                    clock_shift(n, j % (n * n)).scale_c(z)
                })
                .collect();
            sum = sum + sampler.congruence(&us);
            units.push(us);
        }
    }
    let w = 1.0 / (m as f64 * c).sqrt();
    let lo = min_eigenvalue_unchecked(&sum) / (m as f64 * c);
    let elements = units
        .iter()
        .map(|us| emb.apply_blocks(us).map(|u| u.scale(w)))
        .collect::<Result<Vec<_>>>()?;
    FullnessCertificate::new(elements, lo, CertificateKind::General)
}

/// Haar Riemann sums stopped as soon as the running sum is invertible, with no
/// reference to `E`; the family is then normalized to margin 1.
pub fn riemann_certificate(
    a: &ComplexMatrix,
    emb: &SubalgebraEmbedding,
    seed: u64,
    budget: usize,
    tol: &ToleranceConfig,
) -> Result<FullnessCertificate> {
    check_positive(a, tol)?;
    let sampler = TwirlSampler::new(a, emb);
    let scale = a.op_norm().max(1.0);
    let threshold = tol.eig_floor.sqrt() * scale;
    let mut rng = rng_from_seed(seed);
    let mut units: Vec<Vec<ComplexMatrix>> = Vec::new();
    let mut sum = ComplexMatrix::zeros(a.dim());
    let mut best = 0.0f64;
    let mut next_check = 1;
    while units.len() < budget {
        let us: Vec<ComplexMatrix> = emb
            .structure()
            .blocks()
            .iter()
            .map(|&n| haar_unitary_with(&mut rng, n))
            .collect();
        sum = sum + sampler.congruence(&us);
        units.push(us);
        if units.len() == next_check || units.len() == budget {
            next_check *= 2;
            let lo = min_eigenvalue_unchecked(&sum) / units.len() as f64;
            best = best.max(lo);
            if lo > threshold {
                let xs = units
                    .iter()
                    .map(|us| emb.apply_blocks(us))
                    .collect::<Result<Vec<_>>>()?;
                return normalize_certificate(a, &xs, tol);
            }
        }
    }
    Err(Error::BudgetExhausted { budget, best })
}

/// Upper bound on the number of elements [`span_to_elements`] may emit.
pub const SPAN_EXPANSION_LIMIT: usize = 100_000;

/// Replaces combinations `xⱼ = Σ λ_{jl} w_{jl}` by the `w`'s themselves, each
/// repeated `⌈ℓ |λ|²⌉` times (`ℓ` the length of its combination), using
/// `x* a x ≤ ℓ Σ |λ_l|² w_l* a w_l`. Requires `Σ xⱼ* a xⱼ ≥ 1`.
pub fn span_to_elements(
    a: &ComplexMatrix,
    combos: &[Vec<(C64, ComplexMatrix)>],
    tol: &ToleranceConfig,
) -> Result<Vec<ComplexMatrix>> {
    let n = a.dim();
    let mut xs = Vec::with_capacity(combos.len());
    for combo in combos {
        let mut x = ComplexMatrix::zeros(n);
        for (lam, w) in combo {
            if w.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: w.dim(),
                });
            }
            x = x + w.scale_c(*lam);
        }
        xs.push(x);
    }
    let lo = min_eigenvalue_unchecked(&congruence_sum(a, &xs));
    if !(lo >= 1.0 - tol.eig_floor) {
        return Err(Error::HypothesisFailed(format!(
            "combinations certify only {lo:.6e} < 1"
        )));
    }
    let mut out = Vec::new();
    for combo in combos {
        let ell = combo.len() as f64;
        for (lam, w) in combo {
            let reps = (ell * lam.norm_sqr() - 1e-12).ceil().max(0.0) as usize;
            if out.len() + reps > SPAN_EXPANSION_LIMIT {
                return Err(Error::InvalidParameter(format!(
                    "expansion exceeds {SPAN_EXPANSION_LIMIT} elements"
                )));
            }
            out.extend(std::iter::repeat_n(w, reps).cloned());
        }
    }
    Ok(out)
}

/// Rescales `xⱼ` by `δ^{-1/2}`, `δ = λ_min(Σ xⱼ* a xⱼ)`, so the sum dominates 1.
pub fn normalize_certificate(
    a: &ComplexMatrix,
    xs: &[ComplexMatrix],
    tol: &ToleranceConfig,
) -> Result<FullnessCertificate> {
    if xs.is_empty() {
        return Err(Error::InvalidParameter("no elements to normalize".into()));
    }
    if let Some(x) = xs.iter().find(|x| x.dim() != a.dim()) {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: x.dim(),
        });
    }
    let delta = min_eigenvalue_unchecked(&congruence_sum(a, xs));
    if !(delta > tol.eig_floor) {
        return Err(Error::HypothesisFailed(format!(
            "Σ x* a x is not invertible (min eigenvalue {delta:.3e})"
        )));
    }
    let w = 1.0 / delta.sqrt();
    FullnessCertificate::new(
        xs.iter().map(|x| x.scale(w)).collect(),
        1.0,
        CertificateKind::General,
    )
}

/// From `x ∈ B` and a positive `b ∈ B` with `b ≤ x* a x` or
/// `δ = ‖b − x* a x‖ < ‖b‖`, builds a certificate for `a`. In the second case
/// `ε = (δ + ‖b‖)/2` and `(b − ε)₊ ≤ φ(b) x* a x φ(b)`, so any certificate
/// `{zⱼ}` of `(b − ε)₊` gives `{x φ(b) zⱼ}`. `b_cert`, a certificate of `b`
/// in `B`, is reused when `Σ yⱼ* (b − ε)₊ yⱼ` stays invertible; otherwise one
/// is built inside `B`.
pub fn dominate_reduction(
    a: &ComplexMatrix,
    x: &ComplexMatrix,
    b: &ComplexMatrix,
    b_cert: Option<&FullnessCertificate>,
    emb: &SubalgebraEmbedding,
    tol: &ToleranceConfig,
) -> Result<FullnessCertificate> {
    check_member(emb, x, tol)?;
    check_member(emb, b, tol)?;
    check_positive(b, tol)?;
    let xax = a.congruence(x);
    let b_norm = b.op_norm();
    if !(b_norm > tol.eig_floor) {
        return Err(Error::HypothesisFailed("b must be nonzero".into()));
    }
    let scale = b_norm.max(1.0);
    let gap = min_eigenvalue_unchecked(&(&xax - b));

    let (elements, claimed) = if gap >= -tol.eig_floor * scale {
        let b_lo = min_eigenvalue_unchecked(b);
        if b_lo > tol.eig_floor {
            (vec![x * &inv_sqrt_pd(b, tol.eig_floor)?], 1.0)
        } else {
            let cert = certificate_in_algebra(b, b_cert, emb, tol)?;
            (cert.elements.iter().map(|y| x * y).collect(), cert.margin)
        }
    } else {
        let delta = (b - &xax).op_norm();
        if delta >= b_norm {
            return Err(Error::HypothesisFailed(format!(
                "neither b <= x*ax nor ||b - x*ax|| = {delta:.6e} < ||b|| = {b_norm:.6e}"
            )));
        }
        let eps = 0.5 * (delta + b_norm);
        let phi = cutoff_apply(b, delta, eps)?;
        let shifted = positive_part_shift(b, eps)?;
        let chained = b_cert.and_then(|c| {
            let yy = congruence_sum(&ComplexMatrix::identity(b.dim()), &c.elements);
            let bound = c.margin - eps * yy.op_norm();
            (bound > tol.eig_floor && c.dim() == b.dim()).then(|| (c.elements.clone(), bound))
        });
        let (zs, margin) = match chained {
            Some(z) => z,
            None => {
                let c = certificate_in_algebra(&shifted, None, emb, tol)?;
                (c.elements, c.margin)
            }
        };
        let xphi = x * &phi;
        (zs.iter().map(|z| &xphi * z).collect(), margin)
    };
    let actual = min_eigenvalue_unchecked(&congruence_sum(a, &elements));
    if actual < claimed - tol.eig_floor * scale.max(claimed) {
        return Err(Error::HypothesisFailed(format!(
            "reduction certifies {actual:.6e}, expected at least {claimed:.6e}"
        )));
    }
    FullnessCertificate::new(elements, claimed, CertificateKind::General)
}

fn certificate_in_algebra(
    b: &ComplexMatrix,
    given: Option<&FullnessCertificate>,
    emb: &SubalgebraEmbedding,
    tol: &ToleranceConfig,
) -> Result<FullnessCertificate> {
    if let Some(c) = given {
        return Ok(c.clone());
    }
    let r = full_in_algebra(b, emb, tol)?;
    r.certificate
        .ok_or_else(|| Error::HypothesisFailed("b lies in a proper ideal of B".into()))
}

/// For `w = b₁ a b₂ ⋯ a b_r` returns `x ∈ B` with `x* a x ≥ w* a w`: writing
/// `w = v a b_r`, `x = ‖a^{1/2} v* a v a^{1/2}‖^{1/2} b_r`.
pub fn word_reduction(
    a: &ComplexMatrix,
    word: &[ComplexMatrix],
    emb: Option<&SubalgebraEmbedding>,
    tol: &ToleranceConfig,
) -> Result<ComplexMatrix> {
    let (last, prefix) = word
        .split_last()
        .ok_or_else(|| Error::InvalidParameter("word must have at least one letter".into()))?;
    if let Some(e) = emb {
        for b in word {
            check_member(e, b, tol)?;
        }
    }
    if let Some(b) = word.iter().find(|b| b.dim() != a.dim()) {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    if prefix.is_empty() {
        return Ok(last.clone());
    }
    let v = eval_word(a, prefix);
    let root = sqrt_psd(a)?;
    let inner = a.congruence(&v).congruence(&root);
    let x = last.scale(inner.op_norm().sqrt());
    let w = eval_word(a, word);
    let slack = min_eigenvalue_unchecked(&(&a.congruence(&x) - &a.congruence(&w)));
    let scale = a.congruence(&w).op_norm().max(1.0);
    if slack < -tol.eig_floor * scale {
        return Err(Error::HypothesisFailed(format!(
            "x*ax - w*aw has eigenvalue {slack:.3e}"
        )));
    }
    Ok(x)
}

/// `b₁ a b₂ ⋯ a b_r`.
pub fn eval_word(a: &ComplexMatrix, word: &[ComplexMatrix]) -> ComplexMatrix {
    let mut it = word.iter();
    let mut acc = it.next().expect("nonempty word").clone();
    for b in it {
        acc = &(&acc * a) * b;
    }
    acc
}

/// Reduces words `w_j` with `Σ w_j* a w_j ≥ δ > 0` to elements of `B`; the
/// margin is `δ`.
pub fn words_to_certificate(
    a: &ComplexMatrix,
    words: &[Vec<ComplexMatrix>],
    emb: Option<&SubalgebraEmbedding>,
    tol: &ToleranceConfig,
) -> Result<FullnessCertificate> {
    let ws: Vec<ComplexMatrix> = words
        .iter()
        .filter(|w| !w.is_empty())
        .map(|w| eval_word(a, w))
        .collect();
    let delta = min_eigenvalue_unchecked(&congruence_sum(a, &ws));
    if !(delta > tol.eig_floor) {
        return Err(Error::HypothesisFailed(format!(
            "words certify only {delta:.3e}"
        )));
    }
    let xs = words
        .iter()
        .map(|w| word_reduction(a, w, emb, tol))
        .collect::<Result<Vec<_>>>()?;
    FullnessCertificate::new(xs, delta, CertificateKind::General)
}

/// `{xᵢ ⊗ yⱼ}` certifies `a₁ ⊗ a₂` at margin `c₁ c₂`.
pub fn tensor_certificate(
    a1: &ComplexMatrix,
    c1: &FullnessCertificate,
    a2: &ComplexMatrix,
    c2: &FullnessCertificate,
    tol: &ToleranceConfig,
) -> Result<FullnessCertificate> {
    for (a, c) in [(a1, c1), (a2, c2)] {
        if a.dim() != c.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: c.dim(),
            });
        }
        let check = verify_certificate(a, c, None, tol);
        if !check.valid {
            return Err(Error::HypothesisFailed(format!(
                "input certificate invalid: {}",
                check.violations.join("; ")
            )));
        }
    }
    let mut elements = Vec::with_capacity(c1.len() * c2.len());
    for x in &c1.elements {
        for y in &c2.elements {
            elements.push(x.tensor(y));
        }
    }
    let kind = if c1.kind == CertificateKind::Unitary && c2.kind == CertificateKind::Unitary {
        CertificateKind::Unitary
    } else {
        CertificateKind::General
    };
    FullnessCertificate::new(elements, c1.margin * c2.margin, kind)
}

/// Both sides of `‖x‖ ≤ 2 Σⱼ ‖(1 − fⱼ) x (1 − fⱼ)‖`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NormInequality {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluates the inequality for three pairwise orthogonal projections.
pub fn norm_inequality_check(
    x: &ComplexMatrix,
    fs: [&ComplexMatrix; 3],
    tol: &ToleranceConfig,
) -> Result<NormInequality> {
    let n = x.dim();
    let limit = tol.identity_tol.max(1e-12) * 100.0;
    for (j, f) in fs.iter().enumerate() {
        if f.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: f.dim(),
            });
        }
        let idem = (&(*f * *f) - *f).max_abs();
        let herm = f.hermitian_residual();
        if idem > limit || herm > limit {
            return Err(Error::InvalidParameter(format!(
                "f{} is not a projection (residuals {idem:.3e}, {herm:.3e})",
                j + 1
            )));
        }
    }
    for i in 0..3 {
        for j in (i + 1)..3 {
            let r = (fs[i] * fs[j]).max_abs();
            if r > limit {
                return Err(Error::InvalidParameter(format!(
                    "f{} and f{} are not orthogonal (residual {r:.3e})",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    let one = ComplexMatrix::identity(n);
    let lhs = x.op_norm();
    let rhs: f64 = fs
        .iter()
        .map(|f| {
            let g = &one - *f;
            ComplexMatrix::wrap(matmul(
                &matmul(g.as_dmatrix(), x.as_dmatrix()),
                g.as_dmatrix(),
            ))
            .op_norm()
        })
        .sum();
    Ok(NormInequality {
        lhs,
        rhs,
        holds: lhs <= 2.0 * rhs + tol.eig_floor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::{random_psd, rng_from_seed};

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn e11_amp() -> ComplexMatrix {
        ComplexMatrix::unit(2, 0, 0).ampliate(2)
    }

    #[test]
    fn decision_examples() {
        let d =
            relatively_full(&e11_amp(), &SubalgebraEmbedding::ampliation(2, 2), &tol()).unwrap();
        assert!(d.is_full());
        assert!((d.min_eigenvalue - 0.5).abs() < 1e-12);

        let d = relatively_full(
            &e11_amp(),
            &SubalgebraEmbedding::right_ampliation(2, 2),
            &tol(),
        )
        .unwrap();
        assert_eq!(d.decision, Decision::NotFull);
        let p = d.witness.unwrap();
        let expect = ComplexMatrix::unit(2, 1, 1).ampliate(2);
        assert!((&p - &expect).max_abs() < 1e-12);
        assert!(d.witness_residual.unwrap() <= 1e-9);

        let d = relatively_full(
            &ComplexMatrix::identity(3),
            &SubalgebraEmbedding::diagonal(3),
            &tol(),
        )
        .unwrap();
        assert!(d.is_full());
    }

    #[test]
    fn non_positive_rejected() {
        let a = ComplexMatrix::diag(&[1.0, -0.5]);
        assert!(matches!(
            relatively_full(&a, &SubalgebraEmbedding::full(2), &tol()),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn independent_witness_agrees_on_examples() {
        let emb = SubalgebraEmbedding::right_ampliation(2, 2);
        let p = orthogonal_commutant_projection(&e11_amp(), &emb, &tol())
            .unwrap()
            .unwrap();
        assert!((&p - &ComplexMatrix::unit(2, 1, 1).ampliate(2)).max_abs() < 1e-10);
        let amp = SubalgebraEmbedding::ampliation(2, 2);
        assert!(orthogonal_commutant_projection(&e11_amp(), &amp, &tol())
            .unwrap()
            .is_none());
    }

    #[test]
    fn sampled_certificate_examples() {
        let amp = SubalgebraEmbedding::ampliation(2, 2);
        let c =
            certificate_from_expectation(&ComplexMatrix::identity(4), &amp, 0.5, 1, 100, &tol())
                .unwrap();
        assert_eq!(c.len(), 1);

        let c = certificate_from_expectation(&e11_amp(), &amp, 0.5, 7, 10_000, &tol()).unwrap();
        assert!(verify_certificate(&e11_amp(), &c, Some(&amp), &tol()).valid);

        let full = SubalgebraEmbedding::full(2);
        let a = ComplexMatrix::unit(2, 0, 0);
        let r = full_in_algebra(&a, &full, &tol())
            .unwrap()
            .certificate
            .unwrap();
        assert!(r.len() <= 4);
        assert!(verify_certificate(&a, &r, Some(&full), &tol()).valid);
    }

    #[test]
    fn sampled_certificate_refuses_not_full() {
        let emb = SubalgebraEmbedding::right_ampliation(2, 2);
        assert!(matches!(
            certificate_from_expectation(&e11_amp(), &emb, 0.5, 1, 100, &tol()),
            Err(Error::NotFull { .. })
        ));
        assert!(matches!(
            riemann_certificate(&e11_amp(), &emb, 1, 64, &tol()),
            Err(Error::BudgetExhausted { .. })
        ));
    }

    #[test]
    fn frame_congruence_matches_dense_product() {
        let emb = SubalgebraEmbedding::block_diagonal(&[2, 1])
            .unwrap()
            .compose_into(&SubalgebraEmbedding::right_ampliation(3, 2))
            .unwrap()
            .conjugated(&crate::haar::haar_unitary(6, 3).unwrap())
            .unwrap();
        let mut rng = rng_from_seed(5);
        let a = random_psd(&mut rng, 6, 3);
        let sampler = TwirlSampler::new(&a, &emb);
        let (blocks, u) = emb.sample_unitary(&mut rng);
        let fast = sampler.congruence(&blocks);
        let w = emb.frame_unitary();
        let dense = a.congruence(&u).congruence(&w);
        assert!((&fast - &dense).max_abs() < 1e-12);
    }

    #[test]
    fn span_expansion_examples() {
        let w = ComplexMatrix::identity(2).scale(2.0);
        let out = span_to_elements(
            &ComplexMatrix::identity(2),
            &[vec![(C64::new(1.0, 0.0), w.clone())]],
            &tol(),
        )
        .unwrap();
        assert_eq!(out.len(), 1);

        let w1 = ComplexMatrix::identity(2);
        let w2 = ComplexMatrix::unit(2, 0, 0);
        let one = C64::new(1.0, 0.0);
        let a = ComplexMatrix::identity(2);
        let out =
            span_to_elements(&a, &[vec![(one, w1.clone()), (one, w2.clone())]], &tol()).unwrap();
        assert_eq!(out.len(), 4);
        let x = &w1 + &w2;
        let slack = &congruence_sum(&a, &out) - &a.congruence(&x);
        assert!(min_eigenvalue_unchecked(&slack) >= -1e-12);

        let tiny = vec![vec![(C64::new(0.1, 0.0), w1)]];
        assert!(span_to_elements(&a, &tiny, &tol()).is_err());
    }

    #[test]
    fn normalize_examples() {
        let c = normalize_certificate(
            &ComplexMatrix::identity(2).scale(2.0),
            &[ComplexMatrix::identity(2)],
            &tol(),
        )
        .unwrap();
        assert!((c.elements[0].get(0, 0).re - 0.5f64.sqrt()).abs() < 1e-14);
        let c = normalize_certificate(
            &ComplexMatrix::diag(&[4.0, 1.0]),
            &[ComplexMatrix::identity(2)],
            &tol(),
        )
        .unwrap();
        assert!((c.elements[0].get(0, 0).re - 1.0).abs() < 1e-14);
        assert!(normalize_certificate(
            &ComplexMatrix::diag(&[1.0, 0.0]),
            &[ComplexMatrix::identity(2)],
            &tol()
        )
        .is_err());
    }

    #[test]
    fn dominate_exact_invertible_case() {
        let emb = SubalgebraEmbedding::ampliation(2, 2);
        let a = ComplexMatrix::diag(&[2.0, 2.0, 3.0, 3.0]);
        let x = ComplexMatrix::identity(4);
        let c = dominate_reduction(&a, &x, &a, None, &emb, &tol()).unwrap();
        assert_eq!(c.len(), 1);
        let expect = ComplexMatrix::diag(&[
            0.5f64.sqrt(),
            0.5f64.sqrt(),
            1.0 / 3f64.sqrt(),
            1.0 / 3f64.sqrt(),
        ]);
        assert!((&c.elements[0] - &expect).max_abs() < 1e-12);
        assert!(verify_certificate(&a, &c, Some(&emb), &tol()).valid);
    }

    #[test]
    fn dominate_perturbed_case() {
        let emb = SubalgebraEmbedding::ampliation(2, 2);
        let mut rng = rng_from_seed(11);
        let pert = random_psd(&mut rng, 4, 4);
        let a = &e11_amp() + &pert.scale(0.01 / pert.op_norm());
        let b = emb.project_onto_image(&a).unwrap();
        let c =
            dominate_reduction(&a, &ComplexMatrix::identity(4), &b, None, &emb, &tol()).unwrap();
        let check = verify_certificate(&a, &c, Some(&emb), &tol());
        assert!(check.valid, "{:?}", check.violations);
    }

    #[test]
    fn dominate_rejects_violated_hypothesis() {
        let emb = SubalgebraEmbedding::ampliation(2, 2);
        let a = ComplexMatrix::unit(2, 1, 1).ampliate(2);
        let b = e11_amp();
        assert!(matches!(
            dominate_reduction(&a, &ComplexMatrix::identity(4), &b, None, &emb, &tol()),
            Err(Error::HypothesisFailed(_))
        ));
    }

    #[test]
    fn word_reduction_examples() {
        let b1 = ComplexMatrix::diag(&[2.0, 0.5]);
        let b2 = ComplexMatrix::unit(2, 0, 1) + ComplexMatrix::identity(2);
        let x = word_reduction(
            &ComplexMatrix::identity(2),
            std::slice::from_ref(&b1),
            None,
            &tol(),
        )
        .unwrap();
        assert_eq!(x, b1);
        let x = word_reduction(
            &ComplexMatrix::identity(2),
            &[b1.clone(), b2.clone()],
            None,
            &tol(),
        )
        .unwrap();
        assert!((&x - &b2.scale(2.0)).max_abs() < 1e-12);
    }

    #[test]
    fn tensor_certificate_examples() {
        let one = FullnessCertificate::identity(2, 1.0).unwrap();
        let c = tensor_certificate(
            &ComplexMatrix::identity(2),
            &one,
            &ComplexMatrix::identity(2),
            &one,
            &tol(),
        )
        .unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.margin, 1.0);
        assert!(tensor_certificate(
            &ComplexMatrix::identity(3),
            &one,
            &ComplexMatrix::identity(2),
            &one,
            &tol()
        )
        .is_err());
    }

    #[test]
    fn norm_inequality_examples() {
        let f: Vec<ComplexMatrix> = (0..3).map(|i| ComplexMatrix::unit(3, i, i)).collect();
        let r =
            norm_inequality_check(&ComplexMatrix::zeros(3), [&f[0], &f[1], &f[2]], &tol()).unwrap();
        assert!(r.holds && r.lhs == 0.0);
        let r = norm_inequality_check(&ComplexMatrix::identity(3), [&f[0], &f[1], &f[2]], &tol())
            .unwrap();
        assert!(r.holds);
        assert!((r.lhs - 1.0).abs() < 1e-12 && (r.rhs - 3.0).abs() < 1e-12);
        let bad = ComplexMatrix::identity(3);
        assert!(norm_inequality_check(&bad, [&f[0], &f[1], &bad], &tol()).is_err());
    }

    #[test]
    fn design_certificate_is_exact_twirl() {
        let tol = ToleranceConfig::default();
        let mut rng = rng_from_seed(21);
        let emb = SubalgebraEmbedding::block_diagonal(&[2, 1])
            .unwrap()
            .tensor_with(&SubalgebraEmbedding::full(2));
        let a = crate::haar::random_psd(&mut rng, emb.ambient_dim(), 2);
        let cert = design_certificate(&a, &emb, &tol).unwrap();
        assert!((cert.margin - 1.0).abs() < 1e-9, "{}", cert.margin);
        let check = verify_certificate(&a, &cert, Some(&emb), &tol);
        assert!(check.valid, "{:?}", check.violations);
        let e11 = ComplexMatrix::unit(2, 0, 0).tensor(&ComplexMatrix::identity(2));
        assert!(
            design_certificate(&e11, &SubalgebraEmbedding::right_ampliation(2, 2), &tol).is_err()
        );
    }
}
