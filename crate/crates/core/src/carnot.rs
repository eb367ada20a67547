//! Step-two stratified Lie algebras and their groups in exponential
//! coordinates.
//!
//! An algebra of type `(m, p)` is given by `p` skew structure matrices
//! `C^α` on `R^m`. Points of the group are pairs `(x, t) ∈ R^m × R^p` and
//! the left-invariant horizontal frame is
//!
//! ```text
//! X_i = ∂/∂x_i + ½ Σ_j Σ_α c^α_ij x_j ∂/∂t_α .
//! ```
//!
//! The Lie bracket used throughout is the commutator of these fields,
//! `[X_i, X_j] = -Σ_α c^α_ij T_α`, so `bracket(u, v)_α = vᵀ C^α u`. With this
//! sign the Heisenberg algebra with `C¹ = J` has `[X, Y] = T`, and the group
//! law is the truncated Baker–Campbell–Hausdorff product
//! `(x, t)·(x', t') = (x + x', t + t' + ½[x, x'])`.

use nalgebra::{DMatrix, DVector, SVD};
use serde::{Deserialize, Serialize};

use crate::geodesic::GeodesicIVP;
use crate::helical::{HelicalCR, Q1Curve};
use crate::skewlin::{restrict_to_coimage, vector_serde, MatrixJson, SkewMatrix};
use crate::{Error, Result, Tolerances};

/// Step-two stratified Lie algebra `R^m ⊕ R^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedAlgebra2 {
    m: usize,
    c: Vec<SkewMatrix>,
}

/// Smallest singular value of the `m² × p` matrix whose columns are the
/// flattened `C^α`, and the largest one.
fn column_singular_values(cols: &[DVector<f64>]) -> (f64, f64) {
    let stacked = DMatrix::from_columns(cols);
    let sv = SVD::new(stacked, false, false).singular_values;
    (sv.min(), sv.max())
}

impl StratifiedAlgebra2 {
    /// Validates the structure matrices: equal square sizes, skew,
    /// `1 ≤ p ≤ m(m-1)/2` and linearly independent.
    pub fn new(c: Vec<DMatrix<f64>>, tol: &Tolerances) -> Result<Self> {
        let Some(first) = c.first() else {
            return Err(Error::InvalidInput("at least one structure matrix is required".into()));
        };
        let m = first.nrows();
        let mut skew = Vec::with_capacity(c.len());
        for (alpha, mat) in c.into_iter().enumerate() {
            if mat.nrows() != m || mat.ncols() != m {
                return Err(Error::DimensionMismatch(format!(
                    "structure matrix {alpha} is {}x{}, expected {m}x{m}",
                    mat.nrows(),
                    mat.ncols()
                )));
            }
            skew.push(SkewMatrix::new(mat, tol)?);
        }
        let p = skew.len();
        let max = m * m.saturating_sub(1) / 2;
        if p > max {
            return Err(Error::TooManyVerticals { m, p, max });
        }
        let cols: Vec<DVector<f64>> =
            skew.iter().map(|s| DVector::from_column_slice(s.matrix().as_slice())).collect();
        let (sigma_min, sigma_max) = column_singular_values(&cols);
        if sigma_min <= tol.dep_tol * sigma_max.max(1.0) {
            return Err(Error::DependentStructureMatrices { sigma_min });
        }
        Ok(StratifiedAlgebra2 { m, c: skew })
    }

    /// The Heisenberg algebra of dimension `2n + 1`, `C¹ = diag(J, …, J)`.
    pub fn heisenberg(n: usize) -> Self {
        assert!(n >= 1, "Heisenberg algebra needs n >= 1");
        StratifiedAlgebra2 { m: 2 * n, c: vec![SkewMatrix::rotation_blocks(&vec![1.0; n])] }
    }

    /// The free step-two algebra on `m` generators: one structure matrix
    /// `E_ij - E_ji` per pair `i < j`, in lexicographic order.
    pub fn free_nilpotent(m: usize) -> Self {
        assert!(m >= 2, "free nilpotent algebra needs m >= 2");
        let c = (0..m)
            .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
            .map(|(i, j)| SkewMatrix::elementary(m, i, j))
            .collect();
        StratifiedAlgebra2 { m, c }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.c.len()
    }

    pub fn structure_matrices(&self) -> &[SkewMatrix] {
        &self.c
    }

    pub fn structure_matrix(&self, alpha: usize) -> &SkewMatrix {
        &self.c[alpha]
    }

    /// `A_τ = Σ_α τ_α C^α`.
    pub fn a_tau(&self, tau: &DVector<f64>) -> DMatrix<f64> {
        self.c
            .iter()
            .zip(tau.iter())
            .fold(DMatrix::zeros(self.m, self.m), |acc, (c, &t)| acc + c.matrix() * t)
    }

    /// `(Cx)` stacked: column `α` is `C^α x`.
    fn apply_all(&self, x: &DVector<f64>) -> Vec<DVector<f64>> {
        self.c.iter().map(|c| c.apply(x)).collect()
    }

    /// `[u, v]_α = vᵀ C^α u`, the commutator of the left-invariant fields.
    pub fn bracket(&self, u: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_horizontal(u)?;
        self.check_horizontal(v)?;
        Ok(DVector::from_iterator(self.p(), self.c.iter().map(|c| v.dot(&c.apply(u)))))
    }

    /// `X_i(P) ∈ R^{m+p}`: `e_i` horizontally and `½ (C^α x)_i` vertically.
    pub fn vector_field_at(&self, i: usize, point: &CarnotPoint) -> Result<DVector<f64>> {
        self.check_point(point)?;
        if i >= self.m {
            return Err(Error::InvalidInput(format!("field index {i} out of range 0..{}", self.m)));
        }
        let mut out = DVector::zeros(self.m + self.p());
        out[i] = 1.0;
        for (alpha, cx) in self.apply_all(&point.x).iter().enumerate() {
            out[self.m + alpha] = 0.5 * cx[i];
        }
        Ok(out)
    }

    /// Vertical velocity `½ ẋᵀ C^α x` forced on a horizontal curve.
    pub fn vertical_velocity(&self, x: &DVector<f64>, xdot: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.p(), self.c.iter().map(|c| 0.5 * xdot.dot(&c.apply(x))))
    }

    /// `P·Q = (x_P + x_Q, t_P + t_Q + ½[x_P, x_Q])`.
    pub fn group_multiply(&self, p: &CarnotPoint, q: &CarnotPoint) -> Result<CarnotPoint> {
        self.check_point(p)?;
        self.check_point(q)?;
        let half_bracket = self.bracket(&p.x, &q.x)? * 0.5;
        Ok(CarnotPoint { x: &p.x + &q.x, t: &p.t + &q.t + half_bracket })
    }

    pub fn identity(&self) -> CarnotPoint {
        CarnotPoint { x: DVector::zeros(self.m), t: DVector::zeros(self.p()) }
    }

    pub fn inverse(&self, p: &CarnotPoint) -> CarnotPoint {
        CarnotPoint { x: -&p.x, t: -&p.t }
    }

    /// Rank of `(u, v) ↦ [u, v]`, i.e. of the span of the `C^α`.
    pub fn bracket_rank(&self, tol: &Tolerances) -> usize {
        let cols: Vec<DVector<f64>> =
            self.c.iter().map(|s| DVector::from_column_slice(s.matrix().as_slice())).collect();
        let sv = SVD::new(DMatrix::from_columns(&cols), false, false).singular_values;
        let max = sv.max();
        sv.iter().filter(|&&s| s > tol.dep_tol * max.max(1.0)).count()
    }

    pub(crate) fn check_horizontal(&self, u: &DVector<f64>) -> Result<()> {
        if u.len() != self.m {
            return Err(Error::DimensionMismatch(format!("expected a vector in R^{}, got R^{}", self.m, u.len())));
        }
        Ok(())
    }

    pub(crate) fn check_vertical(&self, t: &DVector<f64>) -> Result<()> {
        if t.len() != self.p() {
            return Err(Error::DimensionMismatch(format!("expected a vector in R^{}, got R^{}", self.p(), t.len())));
        }
        Ok(())
    }

    pub fn check_point(&self, point: &CarnotPoint) -> Result<()> {
        self.check_horizontal(&point.x)?;
        self.check_vertical(&point.t)
    }
}

/// JSON form `{"m": m, "p": p, "C": [matrix, …]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraJson {
    pub m: usize,
    pub p: usize,
    #[serde(rename = "C")]
    pub c: Vec<MatrixJson>,
}

impl From<&StratifiedAlgebra2> for AlgebraJson {
    fn from(g: &StratifiedAlgebra2) -> Self {
        AlgebraJson { m: g.m, p: g.p(), c: g.c.iter().map(|c| MatrixJson::from(c.matrix())).collect() }
    }
}

impl AlgebraJson {
    pub fn into_algebra(self, tol: &Tolerances) -> Result<StratifiedAlgebra2> {
        if self.c.len() != self.p {
            return Err(Error::InvalidInput(format!("p = {} but {} structure matrices given", self.p, self.c.len())));
        }
        let mats = self.c.into_iter().map(DMatrix::try_from).collect::<Result<Vec<_>>>()?;
        let g = StratifiedAlgebra2::new(mats, tol)?;
        if g.m != self.m {
            return Err(Error::DimensionMismatch(format!("m = {} but matrices are {}x{}", self.m, g.m, g.m)));
        }
        Ok(g)
    }
}

/// A point `(x, t)` of the group in exponential coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarnotPoint {
    #[serde(with = "vector_serde")]
    pub x: DVector<f64>,
    #[serde(with = "vector_serde")]
    pub t: DVector<f64>,
}

impl CarnotPoint {
    pub fn new(x: DVector<f64>, t: DVector<f64>) -> Self {
        CarnotPoint { x, t }
    }

    /// `x ⊕ t` as one vector in `R^{m+p}`.
    pub fn stacked(&self) -> DVector<f64> {
        DVector::from_iterator(self.x.len() + self.t.len(), self.x.iter().chain(self.t.iter()).copied())
    }
}

/// Where the vertical line `span(w)` of a helical structure sits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContactEmbedding {
    /// Unit vector `w/|w|` in the vertical space `R^p` of the structure.
    #[serde(with = "vector_serde")]
    pub axis: DVector<f64>,
    pub w_norm: f64,
}

/// The contact-type algebra of a completely nontrivial helical structure:
/// `C¹ = A` on `R^{2n}` with the vertical line spanned by `w`.
pub fn helical_to_algebra(h: &HelicalCR, tol: &Tolerances) -> Result<(StratifiedAlgebra2, ContactEmbedding)> {
    let w_norm = h.w().norm();
    if !h.is_completely_nontrivial() {
        return Err(Error::NotCompletelyNontrivial { n: h.n(), p: h.p(), w_norm });
    }
    let g = StratifiedAlgebra2::new(vec![h.a().matrix().clone()], tol)?;
    Ok((g, ContactEmbedding { axis: h.w() / w_norm, w_norm }))
}

/// The helical structure of a contact-type algebra: `C¹` restricted to the
/// orthocomplement of its kernel, with vertical direction `w`.
pub fn algebra_to_helical(g: &StratifiedAlgebra2, w: &DVector<f64>, tol: &Tolerances) -> Result<HelicalCR> {
    if g.p() != 1 {
        return Err(Error::NotContact { p: g.p() });
    }
    if w.is_empty() || w.norm() == 0.0 {
        return Err(Error::InvalidInput("vertical direction w must be nonzero".into()));
    }
    let coimage = restrict_to_coimage(&g.c[0], tol)?;
    HelicalCR::new(coimage.matrix, w.clone(), tol)
}

/// The algebra of type `(2n, p)` and the `p` distinguished geodesics
/// determined by `p` Q1 curves sharing one horizontal space.
///
/// Curve `α` contributes `C^α = A_α`; the vertical basis is `{w_α}` and the
/// geodesic `α` has `τ₀ = e_α`, `x₀ = v₀`, `ξ₀ = v - ½A_α v₀` and `t₀` the
/// coordinates of `w₀` in that basis.
pub fn assemble_from_tuple(
    curves: &[Q1Curve],
    tol: &Tolerances,
) -> Result<(StratifiedAlgebra2, Vec<GeodesicIVP>)> {
    let Some(first) = curves.first() else {
        return Err(Error::InvalidInput("at least one curve is required".into()));
    };
    let p = curves.len();
    let h = first.structure().a().dim();
    for (index, c) in curves.iter().enumerate() {
        if c.is_affine() {
            return Err(Error::AffineCurve { index });
        }
        if c.structure().a().dim() != h || c.structure().p() != first.structure().p() {
            return Err(Error::MismatchedHorizontalSpaces(format!(
                "curve {index} has splitting {}+{}, curve 0 has {h}+{}",
                c.structure().a().dim(),
                c.structure().p(),
                first.structure().p()
            )));
        }
        let gap = (c.frame() - first.frame()).amax();
        if gap > tol.ortho_tol {
            return Err(Error::MismatchedHorizontalSpaces(format!(
                "curve {index} is given in a different basis (frame gap {gap:e})"
            )));
        }
    }
    if first.structure().p() != p {
        return Err(Error::DimensionMismatch(format!(
            "{p} curves need a {p}-dimensional vertical space, got {}",
            first.structure().p()
        )));
    }
    let w = DMatrix::from_columns(&curves.iter().map(|c| c.w().clone()).collect::<Vec<_>>());
    let svd = SVD::new(w.clone(), true, true);
    let (sigma_min, sigma_max) = (svd.singular_values.min(), svd.singular_values.max());
    if sigma_min <= tol.dep_tol * sigma_max.max(1.0) {
        return Err(Error::DependentVerticals { sigma_min });
    }
    let g = StratifiedAlgebra2::new(curves.iter().map(|c| c.structure().a().matrix().clone()).collect(), tol)?;
    let w_inv = w.try_inverse().ok_or(Error::DependentVerticals { sigma_min })?;
    let ivps = curves
        .iter()
        .enumerate()
        .map(|(alpha, c)| {
            let a = c.structure().a();
            let mut tau0 = DVector::zeros(p);
            tau0[alpha] = 1.0;
            GeodesicIVP {
                x0: c.v0().clone(),
                t0: &w_inv * c.w0(),
                xi0: c.v() - a.apply(c.v0()) * 0.5,
                tau0,
            }
        })
        .collect();
    Ok((g, ivps))
}

/// The `p` Q1 curves of an algebra and its distinguished geodesics
/// (`τ₀ = e_α`).
///
/// Curve `α` lives in `R^m ⊕ R^p` with horizontal space the coimage of
/// `C^α` (basis `E`); the kernel directions `K` of `C^α` become additional
/// vertical directions, along which the geodesic moves linearly. Its frame
/// is `diag([E | K], I_p)`, `v = Eᵀζ₀`, `w = (Kᵀζ₀, e_α)`, `v₀ = Eᵀx₀`,
/// `w₀ = (Kᵀx₀, t₀)`.
pub fn algebra_to_tuple(g: &StratifiedAlgebra2, ivps: &[GeodesicIVP], tol: &Tolerances) -> Result<Vec<Q1Curve>> {
    let (m, p) = (g.m(), g.p());
    if ivps.len() != p {
        return Err(Error::DimensionMismatch(format!("{p} geodesics required, got {}", ivps.len())));
    }
    let mut out = Vec::with_capacity(p);
    for (alpha, ivp) in ivps.iter().enumerate() {
        ivp.check(g)?;
        let off_axis = ivp
            .tau0
            .iter()
            .enumerate()
            .map(|(b, &t)| (t - if b == alpha { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        if off_axis > 1e-12 {
            return Err(Error::NotDistinguished { index: alpha });
        }
        let coimage = restrict_to_coimage(&g.c[alpha], tol)?;
        let e = &coimage.embed;
        let two_n = e.ncols();
        let k_dim = m - two_n;
        let kernel = kernel_complement(e, m);
        let zeta0 = ivp.zeta0(g);
        let mut frame = DMatrix::zeros(m + p, m + p);
        frame.view_mut((0, 0), (m, two_n)).copy_from(e);
        frame.view_mut((0, two_n), (m, k_dim)).copy_from(&kernel);
        frame.view_mut((m, m), (p, p)).fill_with_identity();
        let mut w = DVector::zeros(k_dim + p);
        w.rows_mut(0, k_dim).copy_from(&(kernel.transpose() * &zeta0));
        w[k_dim + alpha] = 1.0;
        let mut w0 = DVector::zeros(k_dim + p);
        w0.rows_mut(0, k_dim).copy_from(&(kernel.transpose() * &ivp.x0));
        w0.rows_mut(k_dim, p).copy_from(&ivp.t0);
        let structure = HelicalCR::new(coimage.matrix, w, tol)?;
        out.push(Q1Curve::with_frame(
            structure,
            e.transpose() * &zeta0,
            e.transpose() * &ivp.x0,
            w0,
            frame,
            tol,
        )?);
    }
    Ok(out)
}

/// Orthonormal basis of the orthogonal complement of the columns of `e`.
fn kernel_complement(e: &DMatrix<f64>, m: usize) -> DMatrix<f64> {
    let k = m - e.ncols();
    if k == 0 {
        return DMatrix::zeros(m, 0);
    }
    let projector = DMatrix::identity(m, m) - e * e.transpose();
    let svd = SVD::new(projector, true, false);
    let u = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    DMatrix::from_columns(&order[..k].iter().map(|&i| u.column(i).into_owned()).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::helical::equivalent;
    use crate::homcurves::build_l_m;
    use crate::skewlin::{j2, spectral_form};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn vec(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn pt(x: &[f64], t: &[f64]) -> CarnotPoint {
        CarnotPoint::new(vec(x), vec(t))
    }

    #[test]
    fn new_algebra_examples() {
        let h = StratifiedAlgebra2::new(vec![j2()], &tol()).unwrap();
        assert_eq!(h, StratifiedAlgebra2::heisenberg(1));
        assert!(matches!(
            StratifiedAlgebra2::new(vec![j2(), j2()], &tol()),
            Err(Error::TooManyVerticals { m: 2, p: 2, max: 1 })
        ));
        let mut four = DMatrix::zeros(4, 4);
        four.view_mut((0, 0), (2, 2)).copy_from(&j2());
        assert!(matches!(
            StratifiedAlgebra2::new(vec![four.clone(), four * 2.0], &tol()),
            Err(Error::DependentStructureMatrices { .. })
        ));
        let elementary: Vec<_> = [(0, 1), (0, 2), (1, 2)]
            .iter()
            .map(|&(i, j)| SkewMatrix::elementary(3, i, j).into_matrix())
            .collect();
        assert_eq!(StratifiedAlgebra2::new(elementary, &tol()).unwrap(), StratifiedAlgebra2::free_nilpotent(3));
        assert!(matches!(
            StratifiedAlgebra2::new(vec![DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.0])], &tol()),
            Err(Error::NotSkew { .. })
        ));
    }

    #[test]
    fn heisenberg_and_free() {
        let h2 = StratifiedAlgebra2::heisenberg(2);
        assert_eq!((h2.m(), h2.p()), (4, 1));
        let h1 = StratifiedAlgebra2::heisenberg(1);
        assert_eq!(h1.structure_matrix(0).matrix(), &j2());
        assert_eq!(h1.bracket(&vec(&[1.0, 0.0]), &vec(&[0.0, 1.0])).unwrap(), vec(&[1.0]));
        for m in 2..=5 {
            let f = StratifiedAlgebra2::free_nilpotent(m);
            assert_eq!(f.p(), m * (m - 1) / 2);
            assert_eq!(f.bracket_rank(&tol()), f.p());
        }
        let f2 = StratifiedAlgebra2::free_nilpotent(2);
        assert_eq!(f2.structure_matrix(0).matrix(), &(-j2()));
    }

    #[test]
    fn bracket_properties() {
        let f = StratifiedAlgebra2::free_nilpotent(3);
        let (e1, e3) = (vec(&[1.0, 0.0, 0.0]), vec(&[0.0, 0.0, 1.0]));
        // component (1,3) of the commutator [X_1, X_3]
        assert_eq!(f.bracket(&e1, &e3).unwrap(), vec(&[0.0, -1.0, 0.0]));
        let u = vec(&[0.3, -1.0, 2.0]);
        let v = vec(&[1.5, 0.2, -0.7]);
        assert_eq!(f.bracket(&u, &v).unwrap(), -f.bracket(&v, &u).unwrap());
        assert_eq!(f.bracket(&u, &u).unwrap(), DVector::zeros(3));
    }

    #[test]
    fn vector_fields() {
        let h = StratifiedAlgebra2::heisenberg(1);
        assert_eq!(h.vector_field_at(0, &pt(&[0.0, 1.0], &[0.0])).unwrap(), vec(&[1.0, 0.0, -0.5]));
        let g = StratifiedAlgebra2::free_nilpotent(3);
        for i in 0..3 {
            let mut want = DVector::zeros(6);
            want[i] = 1.0;
            assert_eq!(g.vector_field_at(i, &g.identity()).unwrap(), want);
        }
    }

    /// `[X_i, X_j]` at `P` by finite differences of the coefficient fields.
    fn fd_commutator(g: &StratifiedAlgebra2, i: usize, j: usize, p: &CarnotPoint) -> DVector<f64> {
        let h = 1e-5;
        let d = g.m() + g.p();
        let field = |k: usize, q: &DVector<f64>| {
            let point = CarnotPoint::new(q.rows(0, g.m()).into_owned(), q.rows(g.m(), g.p()).into_owned());
            g.vector_field_at(k, &point).unwrap()
        };
        let base = p.stacked();
        let directional = |k: usize, along: &DVector<f64>| {
            (field(k, &(&base + along * h)) - field(k, &(&base - along * h))) / (2.0 * h)
        };
        let xi = field(i, &base);
        let xj = field(j, &base);
        let out = directional(j, &xi) - directional(i, &xj);
        assert_eq!(out.len(), d);
        out
    }

    #[test]
    fn commutators_match_bracket() {
        let g = StratifiedAlgebra2::free_nilpotent(3);
        let p = pt(&[0.4, -1.3, 0.8], &[0.1, 0.2, -0.3]);
        for i in 0..3 {
            for j in 0..3 {
                let c = fd_commutator(&g, i, j, &p);
                let mut ei = DVector::zeros(3);
                let mut ej = DVector::zeros(3);
                ei[i] = 1.0;
                ej[j] = 1.0;
                let b = g.bracket(&ei, &ej).unwrap();
                assert!(c.rows(0, 3).amax() < 1e-9);
                assert!((c.rows(3, 3) - b).amax() < 1e-5);
            }
        }
    }

    #[test]
    fn group_law() {
        let h = StratifiedAlgebra2::heisenberg(1);
        let prod = h.group_multiply(&pt(&[1.0, 0.0], &[0.0]), &pt(&[0.0, 1.0], &[0.0])).unwrap();
        assert_eq!(prod, pt(&[1.0, 1.0], &[0.5]));
        let g = StratifiedAlgebra2::free_nilpotent(3);
        let a = pt(&[0.4, -1.3, 0.8], &[0.1, 0.2, -0.3]);
        let b = pt(&[1.1, 0.5, -0.2], &[-1.0, 0.0, 0.7]);
        let c = pt(&[-0.6, 0.9, 0.3], &[0.3, 0.3, 0.3]);
        assert_eq!(g.group_multiply(&a, &g.identity()).unwrap(), a);
        assert_eq!(g.group_multiply(&a, &g.inverse(&a)).unwrap(), g.identity());
        let left = g.group_multiply(&g.group_multiply(&a, &b).unwrap(), &c).unwrap();
        let right = g.group_multiply(&a, &g.group_multiply(&b, &c).unwrap()).unwrap();
        assert!((left.stacked() - right.stacked()).amax() < 1e-12);
        // left translation carries X_i(e) to X_i(P)
        for i in 0..3 {
            let eps = 1e-6;
            let mut dx = DVector::zeros(3);
            dx[i] = eps;
            let moved = g.group_multiply(&a, &CarnotPoint::new(dx.clone(), DVector::zeros(3))).unwrap();
            let back = g.group_multiply(&a, &CarnotPoint::new(-dx, DVector::zeros(3))).unwrap();
            let fd = (moved.stacked() - back.stacked()) / (2.0 * eps);
            assert!((fd - g.vector_field_at(i, &a).unwrap()).amax() < 1e-8);
        }
    }

    #[test]
    fn helical_algebra_round_trip() {
        let h = HelicalCR::new(SkewMatrix::j(), vec(&[1.0]), &tol()).unwrap();
        let (g, emb) = helical_to_algebra(&h, &tol()).unwrap();
        assert_eq!(g, StratifiedAlgebra2::heisenberg(1));
        assert_eq!(emb.axis, vec(&[1.0]));
        let h2 = HelicalCR::new(SkewMatrix::j().scaled(2.0), vec(&[1.0]), &tol()).unwrap();
        let (g2, _) = helical_to_algebra(&h2, &tol()).unwrap();
        assert_eq!(g2.structure_matrix(0).matrix(), &(j2() * 2.0));
        let back = algebra_to_helical(&g2, &vec(&[1.0]), &tol()).unwrap();
        assert_eq!(equivalent(&h2, &back), Some(1.0));
        let flat = HelicalCR::new(SkewMatrix::j(), DVector::zeros(0), &tol()).unwrap();
        assert!(matches!(helical_to_algebra(&flat, &tol()), Err(Error::NotCompletelyNontrivial { .. })));
    }

    #[test]
    fn algebra_to_helical_restricts_to_coimage() {
        let l2 = StratifiedAlgebra2::new(vec![build_l_m(2).into_matrix()], &tol()).unwrap();
        let h = algebra_to_helical(&l2, &vec(&[1.0]), &tol()).unwrap();
        assert_eq!(h.n(), 1);
        assert!((h.spectral().frequencies()[0] - 2.0).abs() < 1e-12);
        let l3 = StratifiedAlgebra2::new(vec![build_l_m(3).into_matrix()], &tol()).unwrap();
        let h3 = algebra_to_helical(&l3, &vec(&[1.0]), &tol()).unwrap();
        let f = spectral_form(h3.a(), &tol()).unwrap();
        assert_eq!(h3.n(), 2);
        assert!((f.frequencies()[0] - 3.0).abs() < 1e-12 && (f.frequencies()[1] - 1.0).abs() < 1e-12);
        assert!(matches!(
            algebra_to_helical(&StratifiedAlgebra2::free_nilpotent(3), &vec(&[1.0]), &tol()),
            Err(Error::NotContact { p: 3 })
        ));
    }

    fn helix(a: DMatrix<f64>, w: &[f64], v: &[f64], v0: &[f64], w0: &[f64]) -> Q1Curve {
        let s = HelicalCR::new(SkewMatrix::new(a, &tol()).unwrap(), vec(w), &tol()).unwrap();
        Q1Curve::new(s, vec(v), vec(v0), vec(w0)).unwrap()
    }

    #[test]
    fn tuple_examples() {
        let c = helix(j2(), &[1.0], &[1.0, 0.0], &[0.0, 0.0], &[0.0]);
        let (g, ivps) = assemble_from_tuple(&[c], &tol()).unwrap();
        assert_eq!(g, StratifiedAlgebra2::heisenberg(1));
        assert_eq!(ivps[0].tau0, vec(&[1.0]));
        assert_eq!(ivps[0].xi0, vec(&[1.0, 0.0]));

        // two vertical directions over a 2-plane exceed m(m-1)/2
        let c1 = helix(j2(), &[1.0, 0.0], &[1.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]);
        let c2 = helix(j2() * 2.0, &[0.0, 1.0], &[1.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]);
        assert!(matches!(assemble_from_tuple(&[c1.clone(), c2], &tol()), Err(Error::TooManyVerticals { .. })));
        let c3 = helix(j2() * 2.0, &[2.0, 0.0], &[1.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]);
        assert!(matches!(assemble_from_tuple(&[c1.clone(), c3], &tol()), Err(Error::DependentVerticals { .. })));
        let flat = helix(j2(), &[0.0, 1.0], &[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]);
        assert!(matches!(assemble_from_tuple(&[c1, flat], &tol()), Err(Error::AffineCurve { index: 1 })));
    }

    #[test]
    fn tuple_round_trip_in_four_dimensions() {
        let a1 = SkewMatrix::rotation_blocks(&[2.0, 1.0]).into_matrix();
        let mut a2 = DMatrix::zeros(4, 4);
        a2[(0, 2)] = -1.0;
        a2[(2, 0)] = 1.0;
        a2[(1, 3)] = -3.0;
        a2[(3, 1)] = 3.0;
        let c1 = helix(a1.clone(), &[1.0, 0.5], &[1.0, 0.0, 0.2, 0.0], &[0.1, 0.0, 0.0, 0.3], &[0.2, -0.1]);
        let c2 = helix(a2.clone(), &[0.0, 1.0], &[0.0, 1.0, 0.0, 0.5], &[0.0, 0.0, 1.0, 0.0], &[0.0, 0.4]);
        let (g, ivps) = assemble_from_tuple(&[c1.clone(), c2], &tol()).unwrap();
        let curves = algebra_to_tuple(&g, &ivps, &tol()).unwrap();
        let (g2, _) = assemble_from_tuple(&curves, &tol()).unwrap();
        for alpha in 0..2 {
            assert!((g2.structure_matrix(alpha).matrix() - g.structure_matrix(alpha).matrix()).amax() < 1e-12);
        }
        assert!((g.structure_matrix(0).matrix() - &a1).amax() == 0.0);
        // the horizontal projection of curve 0 is unchanged
        for s in [0.0, 0.7, 2.5] {
            let before = c1.eval(s).rows(0, 4).into_owned();
            let after = curves[0].eval(s).rows(0, 4).into_owned();
            assert!((before - after).amax() < 1e-12);
        }
    }

    #[test]
    fn algebra_to_tuple_handles_singular_structure_matrices() {
        let g = StratifiedAlgebra2::free_nilpotent(3);
        let ivps: Vec<GeodesicIVP> = (0..3)
            .map(|alpha| {
                let mut tau0 = DVector::zeros(3);
                tau0[alpha] = 1.0;
                GeodesicIVP { x0: vec(&[0.1, 0.2, 0.3]), t0: DVector::zeros(3), xi0: vec(&[1.0, -0.5, 0.25]), tau0 }
            })
            .collect();
        let curves = algebra_to_tuple(&g, &ivps, &tol()).unwrap();
        for c in &curves {
            assert_eq!(c.structure().n(), 1);
            assert_eq!(c.dim(), 6);
        }
        let mut bad = ivps.clone();
        bad[1].tau0 = vec(&[0.0, 2.0, 0.0]);
        assert!(matches!(algebra_to_tuple(&g, &bad, &tol()), Err(Error::NotDistinguished { index: 1 })));
    }

    #[test]
    fn json_round_trip() {
        let g = StratifiedAlgebra2::free_nilpotent(3);
        let text = serde_json::to_string(&AlgebraJson::from(&g)).unwrap();
        let back: AlgebraJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_algebra(&tol()).unwrap(), g);
        let p: CarnotPoint = serde_json::from_str(r#"{"x":[1,2],"t":[3]}"#).unwrap();
        assert_eq!(p, pt(&[1.0, 2.0], &[3.0]));
    }
}
