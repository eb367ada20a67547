//! Dense real linear algebra specialised to skew-symmetric matrices.

mod poly;
mod spectral;

pub use poly::{char_poly, Polynomial};
pub use spectral::{expm_skew, restrict_to_coimage, spectral_form, Coimage, SpectralForm};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Tolerances};

/// The 2×2 rotation generator `[[0, -1], [1, 0]]`.
pub fn j2() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])
}

/// Block-diagonal sum of square matrices.
pub fn block_diag(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let d: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(d, d);
    let mut at = 0;
    for b in blocks {
        out.view_mut((at, at), (b.nrows(), b.ncols())).copy_from(b);
        at += b.nrows();
    }
    out
}

/// Largest absolute entry (0 for an empty matrix).
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// `max |QᵀQ - I|`.
pub fn orthogonality_defect(q: &DMatrix<f64>) -> f64 {
    let n = q.ncols();
    max_abs(&(q.transpose() * q - DMatrix::identity(n, n)))
}

/// Check that `q` is square and orthogonal within `ortho_tol`.
pub fn check_orthogonal(q: &DMatrix<f64>, tol: &Tolerances) -> Result<()> {
    if q.nrows() != q.ncols() {
        return Err(Error::NotSquare { rows: q.nrows(), cols: q.ncols() });
    }
    let defect = orthogonality_defect(q);
    if defect > tol.ortho_tol {
        return Err(Error::NotOrthogonal { max_defect: defect });
    }
    Ok(())
}

pub(crate) fn orthogonalize(v: &mut DVector<f64>, against: &[DVector<f64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for q in against {
            let c = q.dot(v);
            v.axpy(-c, q, 1.0);
        }
    }
}

/// Flip `v` so that its largest-magnitude entry (first on ties) is positive.
pub(crate) fn fix_sign(v: &mut DVector<f64>) {
    let mut best = 0;
    for i in 0..v.len() {
        if v[i].abs() > v[best].abs() * (1.0 + 1e-9) {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
}

/// Extends `basis` with orthonormalised vectors from `candidates` until it
/// holds `target` vectors, falling back to standard basis vectors. With
/// nothing to infer the length from, vectors of length `target` are used.
pub(crate) fn complete_basis(basis: &mut Vec<DVector<f64>>, candidates: Vec<DVector<f64>>, target: usize) {
    let d = basis
        .first()
        .map(|v| v.len())
        .or_else(|| candidates.first().map(|v| v.len()))
        .unwrap_or(target);
    let fallback = (0..d).map(|i| DVector::from_fn(d, |k, _| if k == i { 1.0 } else { 0.0 }));
    for mut c in candidates.into_iter().chain(fallback) {
        if basis.len() >= target {
            break;
        }
        orthogonalize(&mut c, basis);
        let norm = c.norm();
        if norm > 0.5 {
            c /= norm;
            basis.push(c);
        }
    }
}

/// Square real matrix with `Aᵀ = -A`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix(DMatrix<f64>);

impl SkewMatrix {
    /// Wraps `m` after checking the shape and skewness against `skew_tol`
    /// (relative to `max(1, max |m|)`).
    pub fn new(m: DMatrix<f64>, tol: &Tolerances) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let defect = max_abs(&(&m + m.transpose()));
        if defect > tol.skew_tol * max_abs(&m).max(1.0) {
            return Err(Error::NotSkew { max_defect: defect });
        }
        Ok(SkewMatrix(m))
    }

    /// Skew part `(m - mᵀ)/2` of an arbitrary square matrix. Never fails.
    pub fn skew_part(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "skew_part needs a square matrix");
        SkewMatrix((m - m.transpose()) * 0.5)
    }

    pub fn zeros(d: usize) -> Self {
        SkewMatrix(DMatrix::zeros(d, d))
    }

    /// `[[0, -1], [1, 0]]`.
    pub fn j() -> Self {
        SkewMatrix(j2())
    }

    /// Elementary skew matrix `E_ij - E_ji`.
    pub fn elementary(d: usize, i: usize, j: usize) -> Self {
        let mut m = DMatrix::zeros(d, d);
        m[(i, j)] = 1.0;
        m[(j, i)] = -1.0;
        SkewMatrix(m)
    }

    /// `blockdiag(η₁J, …, ηₙJ)`.
    pub fn rotation_blocks(freqs: &[f64]) -> Self {
        let blocks: Vec<_> = freqs.iter().map(|&f| j2() * f).collect();
        SkewMatrix(block_diag(&blocks))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn scaled(&self, k: f64) -> Self {
        SkewMatrix(&self.0 * k)
    }

    /// Orthogonal conjugation `Q A Qᵀ`, re-skewed to remove rounding.
    pub fn conjugate(&self, q: &DMatrix<f64>) -> Self {
        SkewMatrix::skew_part(&(q * &self.0 * q.transpose()))
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.0 * v
    }
}

/// Validates `m` as a skew matrix.
pub fn validate_skew(m: DMatrix<f64>, tol: &Tolerances) -> Result<SkewMatrix> {
    SkewMatrix::new(m, tol)
}

/// JSON form of a matrix: `{"rows": r, "cols": c, "data": [row-major]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&DMatrix<f64>> for MatrixJson {
    fn from(m: &DMatrix<f64>) -> Self {
        let data = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)])
            .collect();
        MatrixJson { rows: m.nrows(), cols: m.ncols(), data }
    }
}

impl TryFrom<MatrixJson> for DMatrix<f64> {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        if j.rows * j.cols != j.data.len() {
            return Err(Error::InvalidInput(format!(
                "matrix declares {}x{} but carries {} entries",
                j.rows,
                j.cols,
                j.data.len()
            )));
        }
        if j.data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(DMatrix::from_row_slice(j.rows, j.cols, &j.data))
    }
}

/// `#[serde(with = "matrix_serde")]` adapter for `DMatrix<f64>` fields.
pub mod matrix_serde {
    use super::MatrixJson;
    use nalgebra::DMatrix;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        MatrixJson::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        DMatrix::try_from(j).map_err(D::Error::custom)
    }
}

/// `#[serde(with = "vector_serde")]` adapter writing vectors as plain arrays.
pub mod vector_serde {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Ok(DVector::from_vec(v))
    }
}
