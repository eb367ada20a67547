//! Random instances for the verification suites and property tests.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::helical::{HelicalCR, Q0Curve};
use crate::skewlin::{block_diag, j2, SkewMatrix};
use crate::{Result, Tolerances};

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// signs of `R`'s diagonal absorbed).
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<f64> {
    if d == 0 {
        return DMatrix::zeros(0, 0);
    }
    let qr = gaussian_matrix(rng, d, d).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col.neg_mut();
        }
    }
    q
}

/// `n` frequencies in `[lo, hi]`, pairwise at least `gap` apart, descending.
pub fn random_frequencies<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64, hi: f64, gap: f64) -> Vec<f64> {
    assert!(hi - lo >= gap * n as f64, "frequency range too narrow");
    loop {
        let mut f: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
        f.sort_by(|a, b| b.total_cmp(a));
        if f.windows(2).all(|w| w[0] - w[1] >= gap) {
            return f;
        }
    }
}

/// `Q · diag(η₁J, …, ηₙJ, 0_k) · Qᵀ` for a random orthogonal `Q`.
pub fn random_skew_with_frequencies<R: Rng + ?Sized>(rng: &mut R, freqs: &[f64], kernel: usize) -> SkewMatrix {
    let mut blocks: Vec<DMatrix<f64>> = freqs.iter().map(|&f| j2() * f).collect();
    if kernel > 0 {
        blocks.push(DMatrix::zeros(kernel, kernel));
    }
    let d = 2 * freqs.len() + kernel;
    let q = random_orthogonal(rng, d);
    SkewMatrix::skew_part(&(&q * block_diag(&blocks) * q.transpose()))
}

/// Gaussian skew matrix `(G - Gᵀ)/√2`.
pub fn gaussian_skew<R: Rng + ?Sized>(rng: &mut R, d: usize) -> SkewMatrix {
    let g = gaussian_matrix(rng, d, d);
    SkewMatrix::skew_part(&(&g * std::f64::consts::SQRT_2))
}

/// Q0 curve with `n` distinct frequencies in `[0.3, 2.5]`, a `p`-dimensional
/// vertical part and a random orthogonal frame.
pub fn random_q0_curve<R: Rng + ?Sized>(rng: &mut R, n: usize, p: usize, tol: &Tolerances) -> Result<Q0Curve> {
    let freqs = random_frequencies(rng, n, 0.3, 2.5, 0.15);
    let structure = HelicalCR::from_frequencies(&freqs, gaussian_vector(rng, p));
    let frame = random_orthogonal(rng, 2 * n + p);
    Q0Curve::with_frame(structure, gaussian_vector(rng, 2 * n), frame, tol)
}

/// Random invertible helical structure on `R^{2n} ⊕ R^p`.
pub fn random_helical<R: Rng + ?Sized>(rng: &mut R, n: usize, p: usize, tol: &Tolerances) -> Result<HelicalCR> {
    let freqs = random_frequencies(rng, n, 0.3, 2.5, 0.15);
    HelicalCR::new(random_skew_with_frequencies(rng, &freqs, 0), gaussian_vector(rng, p), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skewlin::orthogonality_defect;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_produce_valid_objects() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = random_orthogonal(&mut rng, 6);
        assert!(orthogonality_defect(&q) < 1e-14);
        let f = random_frequencies(&mut rng, 3, 0.3, 2.5, 0.2);
        assert!(f[0] - f[1] >= 0.2 && f[1] - f[2] >= 0.2);
        let a = random_skew_with_frequencies(&mut rng, &f, 2);
        assert_eq!(a.dim(), 8);
        let c = random_q0_curve(&mut rng, 2, 1, &Tolerances::default()).unwrap();
        assert_eq!(c.dim(), 5);
    }
}
