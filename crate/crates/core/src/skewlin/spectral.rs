use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use super::{block_diag, complete_basis, fix_sign, j2, max_abs, orthogonalize, SkewMatrix};
use crate::{Error, Result, Tolerances};

/// Orthogonal splitting of a skew matrix into 2×2 rotation blocks and a
/// kernel: `Qᵀ A Q = blockdiag(η₁J, …, ηₙJ, 0ₖ)`.
///
/// Frequencies are sorted in descending order; repeated values are kept.
/// Column `2j` and `2j + 1` of `basis` span the `j`-th rotation plane with
/// `A q₁ = η q₂`, and the last `kernel_dim` columns span `ker A`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralForm {
    frequencies: Vec<f64>,
    basis: DMatrix<f64>,
    kernel_dim: usize,
}

impl SpectralForm {
    /// Assembles a form from already-known parts. The caller guarantees the
    /// invariants (orthogonal basis, descending positive frequencies).
    pub(crate) fn from_parts(frequencies: Vec<f64>, basis: DMatrix<f64>, kernel_dim: usize) -> Self {
        debug_assert_eq!(2 * frequencies.len() + kernel_dim, basis.ncols());
        SpectralForm { frequencies, basis, kernel_dim }
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn n_blocks(&self) -> usize {
        self.frequencies.len()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel_dim
    }

    /// Orthonormal pair `(q₁, q₂)` spanning rotation plane `j`.
    pub fn plane(&self, j: usize) -> (DVector<f64>, DVector<f64>) {
        (self.basis.column(2 * j).into_owned(), self.basis.column(2 * j + 1).into_owned())
    }

    /// Columns spanning the kernel.
    pub fn kernel_basis(&self) -> DMatrix<f64> {
        let start = 2 * self.n_blocks();
        self.basis.columns(start, self.kernel_dim).into_owned()
    }

    /// Columns spanning the orthocomplement of the kernel.
    pub fn coimage_basis(&self) -> DMatrix<f64> {
        self.basis.columns(0, 2 * self.n_blocks()).into_owned()
    }

    /// `blockdiag(η₁J, …, ηₙJ, 0ₖ)`.
    pub fn block_form(&self) -> DMatrix<f64> {
        let mut blocks: Vec<_> = self.frequencies.iter().map(|&f| j2() * f).collect();
        blocks.push(DMatrix::zeros(self.kernel_dim, self.kernel_dim));
        block_diag(&blocks)
    }

    /// `Q · blockdiag(η J, 0) · Qᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.basis * self.block_form() * self.basis.transpose()
    }

    /// Rotates coordinates expressed in the spectral basis by `exp(s·blocks)`.
    pub fn rotate_coords(&self, s: f64, coords: &mut DVector<f64>) {
        for (j, &eta) in self.frequencies.iter().enumerate() {
            let (sn, cs) = (eta * s).sin_cos();
            let (a, b) = (coords[2 * j], coords[2 * j + 1]);
            coords[2 * j] = cs * a - sn * b;
            coords[2 * j + 1] = sn * a + cs * b;
        }
    }

    /// `exp(sA) v` without forming the exponential.
    pub fn exp_apply(&self, s: f64, v: &DVector<f64>) -> DVector<f64> {
        let mut c = self.basis.tr_mul(v);
        self.rotate_coords(s, &mut c);
        &self.basis * c
    }

    /// `exp(sA)`, assembled from exact per-block rotations.
    pub fn exp(&self, s: f64) -> DMatrix<f64> {
        let d = self.dim();
        let mut r = DMatrix::identity(d, d);
        for (j, &eta) in self.frequencies.iter().enumerate() {
            let (sn, cs) = (eta * s).sin_cos();
            r[(2 * j, 2 * j)] = cs;
            r[(2 * j, 2 * j + 1)] = -sn;
            r[(2 * j + 1, 2 * j)] = sn;
            r[(2 * j + 1, 2 * j + 1)] = cs;
        }
        &self.basis * r * self.basis.transpose()
    }
}

/// `exp(sA)` for skew `A`; orthogonal with determinant +1.
pub fn expm_skew(a: &SkewMatrix, s: f64, tol: &Tolerances) -> Result<DMatrix<f64>> {
    Ok(spectral_form(a, tol)?.exp(s))
}

/// Spectral canonical form of a skew matrix.
///
/// The rotation planes come from the symmetric eigenproblem of `AᵀA = -A²`
/// (eigenvalues `η²`), pairing each chosen eigenvector `q` with `Aq/η`. The
/// numerical rank and the kernel basis are taken from an SVD of `A`, whose
/// singular values are the `η` themselves and so resolve small frequencies
/// far better than their squares do.
pub fn spectral_form(a: &SkewMatrix, tol: &Tolerances) -> Result<SpectralForm> {
    let d = a.dim();
    let m = a.matrix();
    let scale = max_abs(m);
    if d == 0 || scale == 0.0 {
        return Ok(SpectralForm {
            frequencies: vec![],
            basis: DMatrix::identity(d, d),
            kernel_dim: d,
        });
    }

    let svd = SVD::try_new(m.clone(), false, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::EigenFailure("SVD did not converge".into()))?;
    let v_t = svd.v_t.as_ref().expect("requested V");
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sigma_max = svd.singular_values[order[0]];
    let rank_tol = tol.freq_floor.max(16.0 * d as f64 * f64::EPSILON * sigma_max);
    let mut rank = order.iter().filter(|&&i| svd.singular_values[i] > rank_tol).count();
    rank -= rank % 2;
    let n = rank / 2;

    let gram = m.tr_mul(m);
    let gram = (&gram + gram.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(gram, f64::EPSILON, 0)
        .ok_or_else(|| Error::EigenFailure("symmetric eigensolver did not converge".into()))?;
    let mut by_value: Vec<usize> = (0..d).collect();
    by_value.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let candidates: Vec<DVector<f64>> =
        by_value[..rank].iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();

    let mut chosen: Vec<DVector<f64>> = Vec::with_capacity(d);
    let mut pairs: Vec<(f64, DVector<f64>, DVector<f64>)> = Vec::with_capacity(n);
    let mut push_pair = |q: DVector<f64>, chosen: &mut Vec<DVector<f64>>| -> Result<()> {
        let mut q1 = q;
        fix_sign(&mut q1);
        let mut q2 = m * &q1;
        orthogonalize(&mut q2, chosen);
        q2.axpy(-q1.dot(&q2), &q1, 1.0);
        let eta = q2.norm();
        if eta <= tol.freq_floor {
            return Err(Error::EigenFailure(format!(
                "rotation plane with vanishing frequency {eta:e}"
            )));
        }
        q2 /= eta;
        let eta = q2.dot(&(m * &q1));
        chosen.push(q1.clone());
        chosen.push(q2.clone());
        pairs.push((eta, q1, q2));
        Ok(())
    };

    // in eigenvalue order, take every candidate still mostly outside the
    // span of the pairs already built
    for c in &candidates {
        if chosen.len() >= rank {
            break;
        }
        let mut r = c.clone();
        orthogonalize(&mut r, &chosen);
        let norm = r.norm();
        if norm * norm >= 0.5 {
            push_pair(r / norm, &mut chosen)?;
        }
    }
    while chosen.len() < rank {
        let best = candidates
            .iter()
            .map(|c| {
                let mut r = c.clone();
                orthogonalize(&mut r, &chosen);
                r
            })
            .max_by(|x, y| x.norm().total_cmp(&y.norm()))
            .expect("rank > 0 implies candidates");
        let norm = best.norm();
        if norm < 1e-6 {
            return Err(Error::EigenFailure("could not complete rotation planes".into()));
        }
        push_pair(best / norm, &mut chosen)?;
    }

    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(d);
    for (_, q1, q2) in &pairs {
        cols.push(q1.clone());
        cols.push(q2.clone());
    }
    let kernel_candidates: Vec<DVector<f64>> =
        order[rank..].iter().map(|&i| v_t.row(i).transpose()).collect();
    complete_basis(&mut cols, kernel_candidates, d);

    let basis = DMatrix::from_columns(&cols);
    let frequencies = pairs.iter().map(|p| p.0).collect();
    Ok(SpectralForm { frequencies, basis, kernel_dim: d - rank })
}

/// Restriction of a skew matrix to the orthocomplement of its kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Coimage {
    /// Invertible skew matrix of even dimension `2n`.
    pub matrix: SkewMatrix,
    /// `d × 2n` matrix with orthonormal columns spanning `(ker B)^⊥`.
    pub embed: DMatrix<f64>,
}

/// Restricts `b` to the orthocomplement of its null space.
///
/// For invertible input the matrix is returned unchanged with the identity
/// embedding.
pub fn restrict_to_coimage(b: &SkewMatrix, tol: &Tolerances) -> Result<Coimage> {
    let sf = spectral_form(b, tol)?;
    if sf.n_blocks() == 0 {
        return Err(Error::ZeroMatrix);
    }
    let d = b.dim();
    if sf.kernel_dim() == 0 {
        return Ok(Coimage { matrix: b.clone(), embed: DMatrix::identity(d, d) });
    }
    let embed = sf.coimage_basis();
    let matrix = SkewMatrix::skew_part(&(embed.transpose() * b.matrix() * &embed));
    Ok(Coimage { matrix, embed })
}
