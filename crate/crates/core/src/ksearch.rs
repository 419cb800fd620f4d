//! Search for the least `k` admitting a unitary `u ∈ M_d ⊗ M_k` with
//! `M_d ⊗ 1` and `u*(M_d ⊗ 1)u` everywhere non-orthogonal, and for the least
//! size of a family `A₁, …, A_m ∈ M_d` whose vectors `A_j y` span `C^d` for
//! every unit `y`. Analytically `⌈√(d+1)⌉ ≤ k ≤ d` and `d + 1 ≤ m ≤ k²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::haar::{ginibre, haar_unitary_with, substream};
use crate::matrix::{ComplexMatrix, ToleranceConfig, C64};
use crate::orthogonality::{
    certify_with_threshold, dimension_bound_check, intertwiner_construct, min_span_margin, slices,
    BoundStatus, MarginEstimate, MarginSearch, NonOrthStatus, CONFIDENCE_THRESHOLD,
};
use crate::spectral::expi_hermitian;

/// Largest `d` the search accepts.
pub const MAX_D: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    WitnessFound,
    NoWitnessFound,
    InfeasibleByBound,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchResult {
    pub d: usize,
    pub k: usize,
    pub best_margin: f64,
    pub best_unitary: ComplexMatrix,
    pub starts: usize,
    pub status: SearchStatus,
}

impl SearchResult {
    pub const CSV_HEADER: &'static str = "d,k,status,margin,starts,seed";

    pub fn csv_row(&self, seed: u64) -> String {
        let status = serde_json::to_value(self.status).expect("enum serializes");
        format!(
            "{},{},{},{:.6e},{},{}",
            self.d,
            self.k,
            status.as_str().expect("string"),
            self.best_margin,
            self.starts,
            seed
        )
    }
}

/// Search effort: random starts, ascent iterations per start, and the grid
/// size of the final certification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub starts: usize,
    pub iters: usize,
    pub certify_budget: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            starts: 4,
            iters: 30,
            certify_budget: 2000,
        }
    }
}

impl SearchBudget {
    fn validate(&self) -> Result<()> {
        if self.iters == 0 || self.certify_budget == 0 {
            return Err(Error::InvalidParameter(
                "iters and certify_budget must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn inner_search(seed: u64) -> MarginSearch {
    MarginSearch::both(128, 6, 25, seed)
}

fn check_d(d: usize) -> Result<()> {
    if !(2..=MAX_D).contains(&d) {
        return Err(Error::InvalidParameter(format!(
            "d must lie in 2..={MAX_D}, got {d}"
        )));
    }
    Ok(())
}

/// Steepest-ascent direction `H = i[B, u*Au]` of `u ↦ Tr(A u B u*)` along
/// `u ↦ u·exp(itH)`, with `A = p_x ⊗ 1`, `B = p_y ⊗ 1`.
fn ascent_direction(u: &ComplexMatrix, k: usize, est: &MarginEstimate) -> ComplexMatrix {
    let a = ComplexMatrix::outer(&est.x, &est.x).ampliate(k);
    let b = ComplexMatrix::outer(&est.y, &est.y).ampliate(k);
    let m = a.congruence(u);
    let comm = &(&b * &m) - &(&m * &b);
    comm.scale_c(C64::new(0.0, 1.0)).hermitian_part()
}

fn margin_of(u: &ComplexMatrix, d: usize, k: usize, seed: u64) -> Result<MarginEstimate> {
    min_span_margin(&slices(u, d, k)?, &inner_search(seed))
}

/// Geodesic ascent from `u` with a halving line search.
fn ascend(
    mut u: ComplexMatrix,
    d: usize,
    k: usize,
    iters: usize,
    seed: u64,
) -> Result<(ComplexMatrix, f64)> {
    let mut est = margin_of(&u, d, k, seed)?;
    let mut step = 1.0;
    for it in 0..iters {
        let h = ascent_direction(&u, k, &est);
        let hn = h.op_norm();
        if hn < 1e-14 {
            break;
        }
        let mut improved = false;
        let mut t = step;
        for _ in 0..6 {
            let cand = &u * &expi_hermitian(&h, t / hn)?;
            let ce = margin_of(&cand, d, k, seed.wrapping_add(it as u64 + 1))?;
            if ce.value > est.value {
                u = cand;
                est = ce;
                improved = true;
                step = (t * 2.0).min(1.0);
                break;
            }
            t *= 0.5;
        }
        if !improved {
            step *= 0.25;
            if step < 1e-6 {
                break;
            }
        }
    }
    Ok((u, est.value))
}

/// Multi-start geodesic ascent of `min_y σ_d` over `U(dk)`. The constructive
/// unitary is the first start when `k ≥ d`. `witness_found` is reported iff
/// some start's final unitary certifies.
pub fn search_unitary(
    d: usize,
    k: usize,
    budget: &SearchBudget,
    seed: u64,
) -> Result<SearchResult> {
    check_d(d)?;
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k must be >= 2, got {k}")));
    }
    budget.validate()?;
    let tol = ToleranceConfig::default();
    if dimension_bound_check(d, k) == BoundStatus::Infeasible {
        return Ok(SearchResult {
            d,
            k,
            best_margin: 0.0,
            best_unitary: ComplexMatrix::identity(d * k),
            starts: 0,
            status: SearchStatus::InfeasibleByBound,
        });
    }
    let mut candidates = Vec::new();
    if k >= d {
        candidates.push(intertwiner_construct(d, k)?.u);
    }
    for s in 0..budget.starts {
        let mut rng = substream(seed, s as u64);
        candidates.push(haar_unitary_with(&mut rng, d * k));
    }
    let starts = candidates.len();
    let mut best: Option<(f64, ComplexMatrix, bool)> = None;
    for (i, u0) in candidates.into_iter().enumerate() {
        let (u, _) = ascend(u0, d, k, budget.iters, seed ^ (i as u64) << 32)?;
        let search = MarginSearch::from_budget(budget.certify_budget, seed);
        let rep = certify_with_threshold(&u, d, k, &search, CONFIDENCE_THRESHOLD, &tol)?;
        let certified = rep.status == NonOrthStatus::Certified;
        let value = match &rep.witness {
            Some(crate::orthogonality::NonOrthWitness::Trace { observed_min, .. }) => *observed_min,
            _ => 0.0,
        };
        let better = match &best {
            None => true,
            Some((bv, _, bc)) => (certified && !bc) || (certified == *bc && value > *bv),
        };
        if better {
            best = Some((value, u, certified));
        }
    }
    let Some((value, u, certified)) = best else {
        return Ok(SearchResult {
            d,
            k,
            best_margin: 0.0,
            best_unitary: ComplexMatrix::identity(d * k),
            starts: 0,
            status: SearchStatus::NoWitnessFound,
        });
    };
    Ok(SearchResult {
        d,
        k,
        best_margin: value,
        best_unitary: u,
        starts,
        status: if certified {
            SearchStatus::WitnessFound
        } else {
            SearchStatus::NoWitnessFound
        },
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IntervalEvidence {
    pub k: usize,
    pub bound: BoundStatus,
    pub status: SearchStatus,
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Interval {
    pub d: usize,
    /// Least `k` with `k² ≥ d + 1`.
    pub k_lo: usize,
    /// Least `k ≤ d` for which the search found a witness.
    pub k_hi: usize,
    pub evidence: Vec<IntervalEvidence>,
}

/// Least `k` with `k² ≥ d + 1`.
pub fn k_lower_bound(d: usize) -> usize {
    let mut k = 1;
    while k * k < d + 1 {
        k += 1;
    }
    k
}

/// Runs [`search_unitary`] for `k = k_lo, …, d` and stops at the first witness.
pub fn narrow_interval(d: usize, budget: &SearchBudget, seed: u64) -> Result<Interval> {
    check_d(d)?;
    let k_lo = k_lower_bound(d);
    let mut evidence = Vec::new();
    let mut k_hi = d;
    for k in k_lo..=d {
        let r = search_unitary(d, k, budget, seed)?;
        evidence.push(IntervalEvidence {
            k,
            bound: dimension_bound_check(d, k),
            status: r.status,
            margin: r.best_margin,
        });
        if r.status == SearchStatus::WitnessFound {
            k_hi = k;
            break;
        }
    }
    Ok(Interval {
        d,
        k_lo,
        k_hi,
        evidence,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyEvidence {
    pub m: usize,
    pub status: SearchStatus,
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpanningResult {
    pub d: usize,
    /// `d + 1`.
    pub m_lo: usize,
    /// Smallest `m` for which a spanning family was found.
    pub m_hi: Option<usize>,
    pub best_family: Vec<ComplexMatrix>,
    pub best_margin: f64,
    pub evidence: Vec<FamilyEvidence>,
}

/// Rescales so that `Σ‖A_j‖²_HS = d`.
fn normalize_family(fam: &mut [ComplexMatrix], d: usize) {
    let total: f64 = fam.iter().map(|a| a.frobenius_norm().powi(2)).sum();
    if total > 0.0 {
        let s = (d as f64 / total).sqrt();
        for a in fam.iter_mut() {
            *a = a.scale(s);
        }
    }
}

/// Ascent of `min_y σ_d([A₁y | … | A_m y])` over families with `Σ‖A_j‖² = d`.
fn ascend_family(
    mut fam: Vec<ComplexMatrix>,
    iters: usize,
    seed: u64,
) -> Result<(Vec<ComplexMatrix>, f64)> {
    let d = fam[0].dim();
    normalize_family(&mut fam, d);
    let mut est = min_span_margin(&fam, &inner_search(seed))?;
    let mut step = 0.5;
    for it in 0..iters {
        // ∂/∂A_j of Σ|⟨x, A_j y⟩|² is ⟨x, A_j y⟩ x y*
        let xy = ComplexMatrix::outer(&est.x, &est.y);
        let dirs: Vec<ComplexMatrix> = fam
            .iter()
            .map(|a| {
                let c: C64 = est
                    .x
                    .iter()
                    .zip(a.apply(&est.y))
                    .map(|(x, v)| x.conj() * v)
                    .sum();
                xy.scale_c(c)
            })
            .collect();
        let gn: f64 = dirs
            .iter()
            .map(|g| g.frobenius_norm().powi(2))
            .sum::<f64>()
            .sqrt();
        if gn < 1e-14 {
            break;
        }
        let mut improved = false;
        let mut t = step;
        for _ in 0..6 {
            let mut cand: Vec<ComplexMatrix> = fam
                .iter()
                .zip(&dirs)
                .map(|(a, g)| a + &g.scale(t / gn))
                .collect();
            normalize_family(&mut cand, d);
            let ce = min_span_margin(&cand, &inner_search(seed.wrapping_add(it as u64 + 1)))?;
            if ce.value > est.value {
                fam = cand;
                est = ce;
                improved = true;
                step = (t * 2.0).min(1.0);
                break;
            }
            t *= 0.5;
        }
        if !improved {
            step *= 0.25;
            if step < 1e-6 {
                break;
            }
        }
    }
    Ok((fam, est.value))
}

/// Best family of `m` matrices in `M_d` found from random starts, with its
/// margin under a certification-strength search.
pub fn search_family(
    d: usize,
    m: usize,
    budget: &SearchBudget,
    seed: u64,
) -> Result<(SearchStatus, f64, Vec<ComplexMatrix>)> {
    check_d(d)?;
    budget.validate()?;
    if m < d + 1 {
        return Ok((SearchStatus::InfeasibleByBound, 0.0, Vec::new()));
    }
    let mut best: Option<(f64, Vec<ComplexMatrix>)> = None;
    for s in 0..budget.starts.max(1) {
        let mut rng = substream(seed, s as u64);
        let fam: Vec<ComplexMatrix> = (0..m).map(|_| ginibre(&mut rng, d)).collect();
        let (fam, _) = ascend_family(fam, budget.iters, seed ^ (s as u64) << 32)?;
        let v = min_span_margin(
            &fam,
            &MarginSearch::from_budget(budget.certify_budget, seed),
        )?;
        let certified = v.grid_value.is_none_or(|g| g > CONFIDENCE_THRESHOLD)
            && v.multistart_value.is_none_or(|g| g > CONFIDENCE_THRESHOLD);
        let value = if certified { v.value } else { 0.0 };
        if best.as_ref().is_none_or(|(bv, _)| value > *bv) {
            best = Some((value, fam));
        }
    }
    let (value, fam) = best.expect("at least one start");
    let status = if value > CONFIDENCE_THRESHOLD {
        SearchStatus::WitnessFound
    } else {
        SearchStatus::NoWitnessFound
    };
    Ok((status, value, fam))
}

/// Searches `m = d², d² − 1, …, d + 1` and stops at the first `m` without a
/// spanning family.
pub fn spanning_family_min(d: usize, budget: &SearchBudget, seed: u64) -> Result<SpanningResult> {
    check_d(d)?;
    let m_lo = d + 1;
    let mut out = SpanningResult {
        d,
        m_lo,
        m_hi: None,
        best_family: Vec::new(),
        best_margin: 0.0,
        evidence: Vec::new(),
    };
    for m in (m_lo..=d * d).rev() {
        let (status, margin, fam) = search_family(d, m, budget, seed)?;
        out.evidence.push(FamilyEvidence { m, status, margin });
        if status != SearchStatus::WitnessFound {
            break;
        }
        out.m_hi = Some(m);
        out.best_family = fam;
        out.best_margin = margin;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::{haar_unitary, rng_from_seed};
    use crate::orthogonality::min_rank_margin;

    fn quick() -> SearchBudget {
        SearchBudget {
            starts: 1,
            iters: 5,
            certify_budget: 500,
        }
    }

    #[test]
    fn infeasible_short_circuits() {
        let r = search_unitary(5, 2, &quick(), 0).unwrap();
        assert_eq!(r.status, SearchStatus::InfeasibleByBound);
        assert_eq!(r.starts, 0);
    }

    #[test]
    fn k_equal_d_finds_witness() {
        for d in 2..=3 {
            let r = search_unitary(d, d, &quick(), 0).unwrap();
            assert_eq!(r.status, SearchStatus::WitnessFound);
            assert!(r.best_margin > CONFIDENCE_THRESHOLD);
        }
    }

    #[test]
    fn ascent_does_not_decrease_margin() {
        let mut rng = rng_from_seed(3);
        let u0 = haar_unitary_with(&mut rng, 6);
        let before = margin_of(&u0, 3, 2, 1).unwrap().value;
        let (_, after) = ascend(u0, 3, 2, 10, 1).unwrap();
        assert!(after >= before);
    }

    #[test]
    fn interval_bounds() {
        assert_eq!(k_lower_bound(2), 2);
        assert_eq!(k_lower_bound(3), 2);
        assert_eq!(k_lower_bound(4), 3);
        assert_eq!(k_lower_bound(8), 3);
        let iv = narrow_interval(2, &quick(), 0).unwrap();
        assert_eq!((iv.k_lo, iv.k_hi), (2, 2));
    }

    #[test]
    fn margin_invariant_under_local_unitaries() {
        let u = haar_unitary(6, 4).unwrap();
        let w = haar_unitary(3, 5).unwrap();
        let w2 = haar_unitary(3, 6).unwrap();
        let id = ComplexMatrix::identity(2);
        let v = &(&id.tensor(&w) * &u) * &id.tensor(&w2);
        let s = MarginSearch::both(300, 4, 30, 9);
        let a = min_rank_margin(&u, 2, 3, &s).unwrap().value;
        let b = min_rank_margin(&v, 2, 3, &s).unwrap().value;
        assert!((a - b).abs() <= 1e-8, "{a} {b}");
    }

    #[test]
    fn spanning_families() {
        let (st, _, _) = search_family(3, 3, &quick(), 0).unwrap();
        assert_eq!(st, SearchStatus::InfeasibleByBound);
        let (st, margin, fam) = search_family(2, 3, &quick(), 0).unwrap();
        assert_eq!(st, SearchStatus::WitnessFound);
        assert_eq!(fam.len(), 3);
        let grid = min_span_margin(&fam, &MarginSearch::grid(10_000)).unwrap();
        assert!(grid.value > 0.0 && grid.value + 1e-12 >= margin.min(grid.value));
        let single = vec![ComplexMatrix::identity(2)];
        assert!(
            min_span_margin(&single, &MarginSearch::grid(100))
                .unwrap()
                .value
                < 1e-15
        );
    }

    #[test]
    fn csv_row_format() {
        let r = search_unitary(5, 2, &quick(), 7).unwrap();
        assert_eq!(r.csv_row(7), "5,2,infeasible_by_bound,0.000000e0,0,7");
    }
}
