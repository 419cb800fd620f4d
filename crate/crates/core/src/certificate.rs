//! Fullness certificates and their verification.

use serde::{Deserialize, Serialize};

use crate::algebra::SubalgebraEmbedding;
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, ToleranceConfig};
use crate::spectral::min_eigenvalue_unchecked;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateKind {
    General,
    Unitary,
}

/// Elements `x₁, …, x_m` with `Σ xⱼ* a xⱼ ≥ margin · 1` for an associated `a`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FullnessCertificate {
    pub margin: f64,
    pub kind: CertificateKind,
    pub elements: Vec<ComplexMatrix>,
}

impl FullnessCertificate {
    pub fn new(elements: Vec<ComplexMatrix>, margin: f64, kind: CertificateKind) -> Result<Self> {
        let first = elements.first().ok_or_else(|| {
            Error::InvalidParameter("certificate needs at least one element".into())
        })?;
        let n = first.dim();
        if let Some(x) = elements.iter().find(|x| x.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x.dim(),
            });
        }
        if !(margin > 0.0 && margin.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "certificate margin must be positive, got {margin}"
            )));
        }
        Ok(Self {
            margin,
            kind,
            elements,
        })
    }

    /// `{1}` with the given margin.
    pub fn identity(n: usize, margin: f64) -> Result<Self> {
        Self::new(
            vec![ComplexMatrix::identity(n)],
            margin,
            CertificateKind::Unitary,
        )
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// `Σ xⱼ* a xⱼ`.
    pub fn certified_sum(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        if a.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: a.dim(),
            });
        }
        Ok(congruence_sum(a, &self.elements))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("certificate serializes")
    }
}

pub(crate) fn congruence_sum(a: &ComplexMatrix, xs: &[ComplexMatrix]) -> ComplexMatrix {
    let mut sum = ComplexMatrix::zeros(a.dim());
    for x in xs {
        sum = sum + a.congruence(x);
    }
    sum
}

/// Parses `{ "margin": c, "kind": "general"|"unitary", "elements": [...] }`.
pub fn parse_certificate_json(text: &str) -> Result<FullnessCertificate> {
    let c: FullnessCertificate = serde_json::from_str(text)?;
    FullnessCertificate::new(c.elements, c.margin, c.kind)
}

/// Outcome of [`verify_certificate`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateCheck {
    pub valid: bool,
    pub margin: f64,
    /// Smallest eigenvalue of `Σ xⱼ* a xⱼ` (`NaN` on dimension mismatch).
    pub min_eigenvalue: f64,
    pub membership_residuals: Vec<f64>,
    pub unitarity_residuals: Vec<f64>,
    pub violations: Vec<String>,
}

/// Recomputes `Σ xⱼ* a xⱼ` and checks it against the stated margin; when an
/// embedding is given also checks that every `xⱼ` lies in it.
pub fn verify_certificate(
    a: &ComplexMatrix,
    cert: &FullnessCertificate,
    emb: Option<&SubalgebraEmbedding>,
    tol: &ToleranceConfig,
) -> CertificateCheck {
    let mut violations = Vec::new();
    let mut check = CertificateCheck {
        valid: false,
        margin: cert.margin,
        min_eigenvalue: f64::NAN,
        membership_residuals: Vec::new(),
        unitarity_residuals: Vec::new(),
        violations: Vec::new(),
    };
    if cert.elements.is_empty() {
        check.violations.push("empty certificate".into());
        return check;
    }
    if cert.elements.iter().any(|x| x.dim() != a.dim()) {
        check
            .violations
            .push(format!("element dimension differs from a ({})", a.dim()));
        return check;
    }
    if !a.is_finite() || cert.elements.iter().any(|x| !x.is_finite()) {
        check.violations.push("non-finite entries".into());
        return check;
    }
    let sum = congruence_sum(a, &cert.elements);
    let lo = min_eigenvalue_unchecked(&sum);
    check.min_eigenvalue = lo;
    if !(lo >= cert.margin - tol.eig_floor) {
        violations.push(format!(
            "min eigenvalue {lo:.6e} below margin {:.6e}",
            cert.margin
        ));
    }
    if let Some(e) = emb {
        if e.ambient_dim() != a.dim() {
            violations.push(format!(
                "embedding ambient dimension {} differs from {}",
                e.ambient_dim(),
                a.dim()
            ));
        } else {
            for (j, x) in cert.elements.iter().enumerate() {
                let r = e.membership_residual(x).expect("dimensions checked");
                let scale = x.frobenius_norm().max(1.0);
                if r > tol.eig_floor * scale {
                    violations.push(format!(
                        "element {j} leaves the subalgebra (residual {r:.3e})"
                    ));
                }
                check.membership_residuals.push(r);
            }
        }
    }
    if cert.kind == CertificateKind::Unitary {
        for (j, x) in cert.elements.iter().enumerate() {
            let r = x.unitarity_residual();
            if r > tol.identity_tol.max(1e-12) * 100.0 {
                violations.push(format!("element {j} is not unitary (residual {r:.3e})"));
            }
            check.unitarity_residuals.push(r);
        }
    }
    check.valid = violations.is_empty();
    check.violations = violations;
    check
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_certificate_for_identity() {
        let tol = ToleranceConfig::default();
        let c = FullnessCertificate::identity(3, 1.0).unwrap();
        let emb = SubalgebraEmbedding::scalars(3);
        let r = verify_certificate(&ComplexMatrix::identity(3), &c, Some(&emb), &tol);
        assert!(r.valid, "{:?}", r.violations);
    }

    #[test]
    fn zeroed_element_breaks_boundary_instance() {
        let tol = ToleranceConfig::default();
        // e11 + flip* e11 flip = 1 in M2
        let flip = ComplexMatrix::unit(2, 0, 1) + ComplexMatrix::unit(2, 1, 0);
        let mut c = FullnessCertificate::new(
            vec![ComplexMatrix::identity(2), flip],
            1.0,
            CertificateKind::Unitary,
        )
        .unwrap();
        let a = ComplexMatrix::unit(2, 0, 0);
        assert!(verify_certificate(&a, &c, None, &tol).valid);
        c.elements[1] = ComplexMatrix::zeros(2);
        let r = verify_certificate(&a, &c, None, &tol);
        assert!(!r.valid);
        assert_eq!(r.violations.len(), 2, "{:?}", r.violations);
    }

    #[test]
    fn element_outside_subalgebra_is_flagged() {
        let tol = ToleranceConfig::default();
        let emb = SubalgebraEmbedding::ampliation(2, 2);
        let c = FullnessCertificate::new(
            vec![
                ComplexMatrix::identity(2).tensor(&ComplexMatrix::unit(2, 0, 1).scale(0.0))
                    + ComplexMatrix::identity(4)
                    + ComplexMatrix::unit(4, 0, 1),
            ],
            0.1,
            CertificateKind::General,
        )
        .unwrap();
        let r = verify_certificate(&ComplexMatrix::identity(4), &c, Some(&emb), &tol);
        assert!(!r.valid);
        assert!(r.membership_residuals[0] > 0.5);
    }

    #[test]
    fn json_round_trip() {
        let c = FullnessCertificate::identity(2, 0.5).unwrap();
        let back = parse_certificate_json(&c.to_json()).unwrap();
        assert_eq!(back.kind, CertificateKind::Unitary);
        assert_eq!(back.margin, 0.5);
        assert!(parse_certificate_json(r#"{"margin":-1,"kind":"general","elements":[]}"#).is_err());
    }
}
