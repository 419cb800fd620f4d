//! Haar-distributed unitaries and seeded random test objects.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64};

/// Deterministic RNG used across the crate.
pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream for sub-task `index` of a seeded run.
pub(crate) fn substream(seed: u64, index: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}

pub fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Complex Ginibre matrix (i.i.d. standard complex Gaussian entries).
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, |_, _| gaussian_c64(rng))
}

/// Haar unitary from the QR decomposition of a Ginibre matrix, with the
/// phases of `R`'s diagonal moved into `Q` so the distribution is exactly Haar.
pub fn haar_unitary_with<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = DMatrix::from_fn(n, n, |_, _| gaussian_c64(rng));
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let norm = d.norm();
        let phase = if norm > 0.0 {
            d / norm
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    ComplexMatrix::wrap(q)
}

/// Seeded Haar unitary in `U(n)`.
pub fn haar_unitary(n: usize, seed: u64) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "unitary dimension must be >= 1".into(),
        ));
    }
    Ok(haar_unitary_with(&mut rng_from_seed(seed), n))
}

/// Uniformly random unit vector in `C^n`.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    let mut v: Vec<C64> = (0..n).map(|_| gaussian_c64(rng)).collect();
    crate::spectral::normalize(&mut v);
    v
}

/// Random positive semidefinite matrix `g g*` with `g` an `n × rank` Ginibre block.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> ComplexMatrix {
    let g = DMatrix::from_fn(n, rank, |_, _| gaussian_c64(rng));
    ComplexMatrix::wrap(&g * g.adjoint())
}

/// Random rank-one projection in `M_n`.
pub fn random_rank_one<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let v = random_unit_vector(rng, n);
    ComplexMatrix::outer(&v, &v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_unitary_has_unit_modulus() {
        let u = haar_unitary(1, 99).unwrap();
        assert!((u.get(0, 0).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unitarity_contract() {
        for seed in 0..5 {
            let u = haar_unitary(4, seed).unwrap();
            assert!(u.unitarity_residual() <= 1e-10);
        }
    }

    #[test]
    fn unitary_up_to_dimension_64() {
        for n in [2, 7, 16, 33, 64] {
            let u = haar_unitary(n, n as u64).unwrap();
            assert!(u.unitarity_residual() <= 1e-10, "n={n}");
        }
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(haar_unitary(0, 1).is_err());
    }

    #[test]
    fn same_seed_same_unitary() {
        assert_eq!(haar_unitary(3, 5).unwrap(), haar_unitary(3, 5).unwrap());
        assert_ne!(haar_unitary(3, 5).unwrap(), haar_unitary(3, 6).unwrap());
    }

    /// The Haar twirl of e₁₁ in M₂ is tr(e₁₁)/2 · 1 = ½·1.
    #[test]
    fn twirl_of_rank_one_projection_converges_to_half_identity() {
        let mut rng = rng_from_seed(2024);
        let e11 = ComplexMatrix::unit(2, 0, 0);
        let samples = 100_000;
        let mut acc = ComplexMatrix::zeros(2);
        for _ in 0..samples {
            let u = haar_unitary_with(&mut rng, 2);
            acc = &acc + &(&(&u * &e11) * &u.adjoint());
        }
        let mean = acc.scale(1.0 / samples as f64);
        let dev = (&mean - &ComplexMatrix::identity(2).scale(0.5)).op_norm();
        assert!(dev < 1e-2, "deviation {dev}");
    }
}
