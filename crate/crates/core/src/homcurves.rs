//! The homogeneous curves `γ_m`, their generators `L_m`, and the operations
//! that keep the class Q0 closed (orthogonal post-composition,
//! θ-juxtaposition and tensor products).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::helical::{HelicalCR, Q0Curve};
use crate::skewlin::{check_orthogonal, fix_sign, spectral_form, vector_serde, Polynomial, SkewMatrix};
use crate::{Error, Result, Tolerances};

/// `C(m, j)` as a float (exact for the sizes used here).
pub fn binomial(m: usize, j: usize) -> f64 {
    let j = j.min(m - j);
    (0..j).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

/// `γ_m(s)_j = √C(m,j)·cos^{m-j}(s)·sin^j(s)`, a unit vector in `R^{m+1}`.
pub fn gamma_m_eval(m: usize, s: f64) -> DVector<f64> {
    let (sn, cs) = s.sin_cos();
    DVector::from_fn(m + 1, |j, _| binomial(m, j).sqrt() * cs.powi((m - j) as i32) * sn.powi(j as i32))
}

/// The bidiagonal skew matrix with `Dγ_m = L_m γ_m`: subdiagonal entries
/// `√((j+1)(m-j))`, superdiagonal their negatives.
pub fn build_l_m(m: usize) -> SkewMatrix {
    let mut l = DMatrix::zeros(m + 1, m + 1);
    for j in 0..m {
        let e = (((j + 1) * (m - j)) as f64).sqrt();
        l[(j + 1, j)] = e;
        l[(j, j + 1)] = -e;
    }
    SkewMatrix::skew_part(&l)
}

/// Eigenvalues of `L_m` as imaginary parts, computed numerically and sorted
/// in descending order (the exact values are `m - 2j`).
pub fn spectrum_l_m(m: usize, tol: &Tolerances) -> Result<Vec<f64>> {
    let sf = spectral_form(&build_l_m(m), tol)?;
    let mut out: Vec<f64> = sf.frequencies().iter().flat_map(|&f| [f, -f]).collect();
    out.extend(std::iter::repeat(0.0).take(sf.kernel_dim()));
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

/// Closed-form `det(L_m - xI)`: `-x·∏_{j=1}^k (x² + (2j)²)` for `m = 2k`,
/// `∏_{j=0}^k (x² + (2j+1)²)` for `m = 2k+1`.
pub fn char_poly_l_m(m: usize) -> Polynomial {
    let (mut p, first) = if m % 2 == 0 { (Polynomial::monomial(1).scaled(-1.0), 2) } else { (Polynomial::one(), 1) };
    let mut eta = first;
    while eta <= m {
        p = p.mul(&Polynomial::rotation_factor(eta as f64));
        eta += 2;
    }
    p
}

/// `γ_m` together with its generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaM {
    pub m: usize,
    pub l: SkewMatrix,
}

impl GammaM {
    pub fn new(m: usize) -> Self {
        GammaM { m, l: build_l_m(m) }
    }

    pub fn eval(&self, s: f64) -> DVector<f64> {
        gamma_m_eval(self.m, s)
    }

    /// `γ_m` as the Q0 curve `exp(L_m s) E_0`.
    pub fn curve(&self, tol: &Tolerances) -> Result<Q0Curve> {
        let mut e0 = DVector::zeros(self.m + 1);
        e0[0] = 1.0;
        Q0Curve::from_generator(&self.l, &e0, tol)
    }

    /// `max_s |Dγ_m(s) - L_m γ_m(s)|` over `samples` with central
    /// differences of step `h`.
    pub fn ode_residual(&self, samples: &[f64], h: f64) -> f64 {
        samples
            .iter()
            .map(|&s| {
                let d = (self.eval(s + h) - self.eval(s - h)) / (2.0 * h);
                (d - self.l.apply(&self.eval(s))).amax()
            })
            .fold(0.0, f64::max)
    }
}

/// Affine hyperplane `{u : ⟨normal, u⟩ = offset}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hyperplane {
    #[serde(with = "vector_serde")]
    pub normal: DVector<f64>,
    pub offset: f64,
    /// Largest `|⟨normal, γ_m(s)⟩ - offset|` on the verification grid.
    pub max_residual: f64,
}

/// For even `m` the image of `γ_m` lies in the hyperplane through `E_0`
/// orthogonal to the kernel of `L_m`; odd `L_m` is invertible and there is
/// none.
pub fn gamma_m_hyperplane_check(m: usize, tol: &Tolerances) -> Result<Option<Hyperplane>> {
    if m % 2 == 1 {
        return Ok(None);
    }
    let sf = spectral_form(&build_l_m(m), tol)?;
    let kernel = sf.kernel_basis();
    if kernel.ncols() != 1 {
        return Err(Error::EigenFailure(format!("L_{m} has kernel dimension {}", kernel.ncols())));
    }
    let mut normal = kernel.column(0).into_owned();
    fix_sign(&mut normal);
    let offset = normal[0];
    let max_residual = (0..50)
        .map(|i| std::f64::consts::TAU * i as f64 / 50.0)
        .map(|s| (normal.dot(&gamma_m_eval(m, s)) - offset).abs())
        .fold(0.0, f64::max);
    Ok(Some(Hyperplane { normal, offset, max_residual }))
}

/// Smallest eigenvalue of the affine moment matrix `(1/N) Σ [u_i; 1][u_i; 1]ᵀ`
/// of sample points; it vanishes exactly when the samples lie in a common
/// affine hyperplane.
pub fn affine_moment_sigma_min(points: &[DVector<f64>]) -> f64 {
    let Some(first) = points.first() else { return 0.0 };
    let d = first.len() + 1;
    let mut moment = DMatrix::zeros(d, d);
    for u in points {
        let row = DVector::from_iterator(d, u.iter().copied().chain(std::iter::once(1.0)));
        moment += &row * row.transpose();
    }
    moment /= points.len() as f64;
    moment.symmetric_eigenvalues().min()
}

/// A homogeneous polynomial map `H: R² → R^d` of degree `m`, stored as the
/// `d × (m+1)` array whose entry `(c, j)` is the coefficient of
/// `x^{m-j} y^j` in component `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousCurve {
    pub m: usize,
    pub coefficients: DMatrix<f64>,
}

impl HomogeneousCurve {
    pub fn new(m: usize, coefficients: DMatrix<f64>) -> Result<Self> {
        if coefficients.ncols() != m + 1 {
            return Err(Error::DimensionMismatch(format!(
                "degree {m} needs {} coefficient columns, got {}",
                m + 1,
                coefficients.ncols()
            )));
        }
        Ok(HomogeneousCurve { m, coefficients })
    }

    /// `H(cos s, sin s)` evaluated directly from the monomials.
    pub fn eval(&self, s: f64) -> DVector<f64> {
        let (sn, cs) = s.sin_cos();
        let mono = DVector::from_fn(self.m + 1, |j, _| cs.powi((self.m - j) as i32) * sn.powi(j as i32));
        &self.coefficients * mono
    }

    /// `B` with `H(cos s, sin s) = B γ_m(s)`.
    pub fn b_matrix(&self) -> DMatrix<f64> {
        homogeneous_to_b(self.m, &self.coefficients)
    }
}

/// Column `j` of the coefficient array divided by `√C(m,j)`.
pub fn homogeneous_to_b(m: usize, coefficients: &DMatrix<f64>) -> DMatrix<f64> {
    let mut b = coefficients.clone();
    for (j, mut col) in b.column_iter_mut().enumerate() {
        col /= binomial(m, j).sqrt();
    }
    b
}

/// `T∘γ` for orthogonal `T`.
pub fn postcompose_orthogonal(t: &DMatrix<f64>, c: &Q0Curve, tol: &Tolerances) -> Result<Q0Curve> {
    if t.nrows() != c.dim() || t.ncols() != c.dim() {
        return Err(Error::DimensionMismatch(format!(
            "T is {}x{}, curve lives in R^{}",
            t.nrows(),
            t.ncols(),
            c.dim()
        )));
    }
    check_orthogonal(t, tol)?;
    Q0Curve::with_frame(c.structure().clone(), c.v().clone(), t * c.frame(), tol)
}

/// `cos θ·γ₁ ⊕ sin θ·γ₂`.
pub fn juxtapose(theta: f64, c1: &Q0Curve, c2: &Q0Curve, tol: &Tolerances) -> Result<Q0Curve> {
    let (sn, cs) = theta.sin_cos();
    let (s1, s2) = (c1.structure(), c2.structure());
    let (h1, h2) = (s1.a().dim(), s2.a().dim());
    let (p1, p2) = (s1.p(), s2.p());
    let (d1, d2) = (h1 + p1, h2 + p2);
    let mut a = DMatrix::zeros(h1 + h2, h1 + h2);
    a.view_mut((0, 0), (h1, h1)).copy_from(s1.a().matrix());
    a.view_mut((h1, h1), (h2, h2)).copy_from(s2.a().matrix());
    let w = DVector::from_iterator(p1 + p2, s1.w().iter().map(|x| cs * x).chain(s2.w().iter().map(|x| sn * x)));
    let v = DVector::from_iterator(h1 + h2, c1.v().iter().map(|x| cs * x).chain(c2.v().iter().map(|x| sn * x)));
    // canonical order (h1, h2, vert1, vert2) → ambient (c1 coords, c2 coords)
    let mut frame = DMatrix::zeros(d1 + d2, d1 + d2);
    let (f1, f2) = (c1.frame(), c2.frame());
    frame.view_mut((0, 0), (d1, h1)).copy_from(&f1.columns(0, h1));
    frame.view_mut((0, h1 + h2), (d1, p1)).copy_from(&f1.columns(h1, p1));
    frame.view_mut((d1, h1), (d2, h2)).copy_from(&f2.columns(0, h2));
    frame.view_mut((d1, h1 + h2 + p1), (d2, p2)).copy_from(&f2.columns(h2, p2));
    let structure = HelicalCR::new(SkewMatrix::skew_part(&a), w, tol)?;
    Q0Curve::with_frame(structure, v, frame, tol)
}

/// `γ₁(s) ⊗ γ₂(s)` flattened row-major.
pub fn tensor_eval(c1: &Q0Curve, c2: &Q0Curve, s: f64) -> DVector<f64> {
    c1.eval(s).kronecker(&c2.eval(s))
}

/// `G₁ ⊗ I + I ⊗ G₂` for the ambient generators of the two curves.
pub fn tensor_generator(c1: &Q0Curve, c2: &Q0Curve) -> SkewMatrix {
    let g1 = c1.ambient_generator();
    let g2 = c2.ambient_generator();
    let i1 = DMatrix::identity(c1.dim(), c1.dim());
    let i2 = DMatrix::identity(c2.dim(), c2.dim());
    SkewMatrix::skew_part(&(g1.matrix().kronecker(&i2) + i1.kronecker(g2.matrix())))
}

/// `γ₁ ⊗ γ₂` as a Q0 curve in canonical form.
pub fn tensor_curve(c1: &Q0Curve, c2: &Q0Curve, tol: &Tolerances) -> Result<Q0Curve> {
    let u0 = c1.initial_point().kronecker(&c2.initial_point());
    Q0Curve::from_generator(&tensor_generator(c1, c2), &u0, tol)
}
