//! Helical CR structures and the curve classes Q0 / Q1.
//!
//! A Q0 curve is stored in canonical coordinates `exp(As) v ⊕ w` together
//! with an orthogonal `frame` placing those coordinates in the ambient
//! space, so that `γ(s) = frame · (exp(As) v ⊕ w)`. Most constructors use
//! the identity frame; [`decompose`] and [`fit_from_samples`] produce the
//! frame of the canonical decomposition.

mod decompose;
mod fit;
mod injective;

pub use decompose::{
    decompose, minimal_annihilating_poly, plane_projections, CanonicalDecomposition,
    CanonicalPlane, PlaneProjection,
};
pub use fit::{fit_from_samples, FitReport};
pub use injective::{is_injective, is_injective_curve, is_injective_q1, InjectivityVerdict};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::skewlin::{
    check_orthogonal, matrix_serde, max_abs, spectral_form, SkewMatrix, SpectralForm,
};
use crate::{Error, Result, Tolerances};

/// Orthogonal splitting `R^{2n} ⊕ R^p` with an invertible skew operator on
/// the horizontal part and a vertical direction `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct HelicalCR {
    a: SkewMatrix,
    w: DVector<f64>,
    spectral: SpectralForm,
}

impl HelicalCR {
    pub fn new(a: SkewMatrix, w: DVector<f64>, tol: &Tolerances) -> Result<Self> {
        let spectral = spectral_form(&a, tol)?;
        if spectral.kernel_dim() > 0 {
            let min_freq = spectral.frequencies().last().copied().unwrap_or(0.0);
            return Err(Error::Singular { min_freq });
        }
        Ok(HelicalCR { a, w, spectral })
    }

    /// Structure with `A = blockdiag(η₁J, …, ηₙJ)`; frequencies must be
    /// positive and sorted in descending order.
    pub fn from_frequencies(freqs: &[f64], w: DVector<f64>) -> Self {
        debug_assert!(freqs.windows(2).all(|p| p[0] >= p[1]));
        debug_assert!(freqs.iter().all(|&f| f > 0.0));
        let d = 2 * freqs.len();
        HelicalCR {
            a: SkewMatrix::rotation_blocks(freqs),
            w,
            spectral: SpectralForm::from_parts(freqs.to_vec(), DMatrix::identity(d, d), 0),
        }
    }

    /// Half the horizontal dimension.
    pub fn n(&self) -> usize {
        self.a.dim() / 2
    }

    /// Vertical dimension.
    pub fn p(&self) -> usize {
        self.w.len()
    }

    pub fn dim(&self) -> usize {
        self.a.dim() + self.w.len()
    }

    pub fn a(&self) -> &SkewMatrix {
        &self.a
    }

    pub fn w(&self) -> &DVector<f64> {
        &self.w
    }

    pub fn spectral(&self) -> &SpectralForm {
        &self.spectral
    }

    pub fn is_completely_nontrivial(&self) -> bool {
        self.n() > 0 && self.p() > 0
    }

    /// Same operator with a different vertical direction.
    pub fn with_w(&self, w: DVector<f64>) -> Self {
        HelicalCR { a: self.a.clone(), w, spectral: self.spectral.clone() }
    }

    /// `A⁻¹ x`, computed blockwise in the spectral basis.
    pub fn solve(&self, x: &DVector<f64>) -> DVector<f64> {
        let sf = &self.spectral;
        let mut c = sf.basis().tr_mul(x);
        for (j, &eta) in sf.frequencies().iter().enumerate() {
            // (ηJ)⁻¹ = -J/η
            let (a, b) = (c[2 * j], c[2 * j + 1]);
            c[2 * j] = b / eta;
            c[2 * j + 1] = -a / eta;
        }
        sf.basis() * c
    }

    /// `Aᵏ x`, computed blockwise in the spectral basis.
    pub fn power_apply(&self, k: usize, x: &DVector<f64>) -> DVector<f64> {
        let sf = &self.spectral;
        let mut c = sf.basis().tr_mul(x);
        for (j, &eta) in sf.frequencies().iter().enumerate() {
            let (a, b) = j_power(k, c[2 * j], c[2 * j + 1]);
            let scale = eta.powi(k as i32);
            c[2 * j] = a * scale;
            c[2 * j + 1] = b * scale;
        }
        sf.basis() * c
    }
}

/// `Jᵏ (a, b)`.
fn j_power(k: usize, a: f64, b: f64) -> (f64, f64) {
    match k % 4 {
        0 => (a, b),
        1 => (-b, a),
        2 => (-a, -b),
        _ => (b, -a),
    }
}

/// A helical structure together with a marking `(v, u₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkedHelicalCR {
    base: HelicalCR,
    v: DVector<f64>,
    u0: DVector<f64>,
}

impl MarkedHelicalCR {
    pub fn new(base: HelicalCR, v: DVector<f64>, u0: DVector<f64>) -> Result<Self> {
        if v.len() != base.a().dim() || u0.len() != base.dim() {
            return Err(Error::DimensionMismatch(format!(
                "marking needs v in R^{} and u0 in R^{}, got {} and {}",
                base.a().dim(),
                base.dim(),
                v.len(),
                u0.len()
            )));
        }
        Ok(MarkedHelicalCR { base, v, u0 })
    }

    pub fn base(&self) -> &HelicalCR {
        &self.base
    }

    pub fn v(&self) -> &DVector<f64> {
        &self.v
    }

    pub fn u0(&self) -> &DVector<f64> {
        &self.u0
    }

    pub fn v0(&self) -> DVector<f64> {
        self.u0.rows(0, self.base.a().dim()).into_owned()
    }

    pub fn w0(&self) -> DVector<f64> {
        self.u0.rows(self.base.a().dim(), self.base.p()).into_owned()
    }

    /// The Q1 curve `((exp(As) - I)A⁻¹v + v₀) ⊕ (ws + w₀)` of the marking.
    pub fn q1_curve(&self) -> Q1Curve {
        Q1Curve::new(self.base.clone(), self.v.clone(), self.v0(), self.w0())
            .expect("marking dimensions are validated on construction")
    }
}

fn check_frame(frame: &DMatrix<f64>, d: usize, tol: &Tolerances) -> Result<()> {
    if frame.nrows() != d || frame.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "frame must be {d}x{d}, got {}x{}",
            frame.nrows(),
            frame.ncols()
        )));
    }
    check_orthogonal(frame, tol)
}

/// Curve `γ(s) = frame · (exp(As) v ⊕ w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Q0Curve {
    structure: HelicalCR,
    v: DVector<f64>,
    frame: DMatrix<f64>,
}

impl Q0Curve {
    pub fn new(structure: HelicalCR, v: DVector<f64>) -> Result<Self> {
        let d = structure.dim();
        Self::build(structure, v, DMatrix::identity(d, d))
    }

    pub fn with_frame(
        structure: HelicalCR,
        v: DVector<f64>,
        frame: DMatrix<f64>,
        tol: &Tolerances,
    ) -> Result<Self> {
        check_frame(&frame, structure.dim(), tol)?;
        Self::build(structure, v, frame)
    }

    fn build(structure: HelicalCR, v: DVector<f64>, frame: DMatrix<f64>) -> Result<Self> {
        if v.len() != structure.a().dim() {
            return Err(Error::DimensionMismatch(format!(
                "v must lie in R^{}, got R^{}",
                structure.a().dim(),
                v.len()
            )));
        }
        Ok(Q0Curve { structure, v, frame })
    }

    /// The curve `exp(Gs) u₀` for an arbitrary (possibly singular) skew `G`,
    /// brought to canonical form.
    pub fn from_generator(g: &SkewMatrix, u0: &DVector<f64>, tol: &Tolerances) -> Result<Self> {
        Ok(decompose(g, u0, tol)?.1)
    }

    pub fn structure(&self) -> &HelicalCR {
        &self.structure
    }

    pub fn v(&self) -> &DVector<f64> {
        &self.v
    }

    pub fn w(&self) -> &DVector<f64> {
        self.structure.w()
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    /// Ambient dimension `2n + p`.
    pub fn dim(&self) -> usize {
        self.structure.dim()
    }

    /// `γ(0)`.
    pub fn initial_point(&self) -> DVector<f64> {
        self.eval(0.0)
    }

    /// Generator `G = frame (A ⊕ 0) frameᵀ` with `γ(s) = exp(Gs) γ(0)`.
    pub fn ambient_generator(&self) -> SkewMatrix {
        let h = self.structure.a().dim();
        let d = self.dim();
        let mut full = DMatrix::zeros(d, d);
        full.view_mut((0, 0), (h, h)).copy_from(self.structure.a().matrix());
        SkewMatrix::skew_part(&full).conjugate(&self.frame)
    }

    fn place(&self, horizontal: DVector<f64>, vertical: Option<&DVector<f64>>) -> DVector<f64> {
        let mut local = DVector::zeros(self.dim());
        let h = horizontal.len();
        local.rows_mut(0, h).copy_from(&horizontal);
        if let Some(w) = vertical {
            local.rows_mut(h, w.len()).copy_from(w);
        }
        &self.frame * local
    }

    /// `γ(s)`.
    pub fn eval(&self, s: f64) -> DVector<f64> {
        self.derivative(0, s)
    }

    /// `Dᵏγ(s) = frame · (exp(As) Aᵏ v ⊕ [k = 0] w)`.
    pub fn derivative(&self, k: usize, s: f64) -> DVector<f64> {
        let sf = self.structure.spectral();
        let mut c = sf.basis().tr_mul(&self.v);
        for (j, &eta) in sf.frequencies().iter().enumerate() {
            let (a, b) = j_power(k, c[2 * j], c[2 * j + 1]);
            let scale = eta.powi(k as i32);
            c[2 * j] = a * scale;
            c[2 * j + 1] = b * scale;
        }
        sf.rotate_coords(s, &mut c);
        let horizontal = sf.basis() * c;
        self.place(horizontal, (k == 0).then(|| self.structure.w()))
    }

    /// Inner product `e_kl = ⟨Dᵏγ(s), Dˡγ(s)⟩`, which does not depend on `s`.
    ///
    /// Evaluated blockwise: plane `j` contributes `η_j^{k+l} cᵀ J^{l-k} c`,
    /// which vanishes identically when `k - l` is odd.
    pub fn gram(&self, k: usize, l: usize) -> f64 {
        let sf = self.structure.spectral();
        let c = sf.basis().tr_mul(&self.v);
        let (lo, hi) = (k.min(l), k.max(l));
        let mut e = 0.0;
        for (j, &eta) in sf.frequencies().iter().enumerate() {
            let (a, b) = (c[2 * j], c[2 * j + 1]);
            let (ja, jb) = j_power(hi - lo, a, b);
            e += eta.powi((k + l) as i32) * (a * ja + b * jb);
        }
        if k == 0 && l == 0 {
            e += self.structure.w().norm_squared();
        }
        e
    }

    /// `c_k = ‖Dᵏγ‖²`.
    pub fn derivative_norm_sq(&self, k: usize) -> f64 {
        self.gram(k, k)
    }

    /// Affine reparameterisation `s ↦ λs + b`: generator `λA`, initial
    /// horizontal vector `exp(Ab) v`.
    pub fn reparameterize(&self, lambda: f64, b: f64, tol: &Tolerances) -> Result<Self> {
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::InvalidInput("reparameterisation needs a nonzero scale".into()));
        }
        let v = self.structure.spectral().exp_apply(b, &self.v);
        let structure = HelicalCR::new(
            self.structure.a().scaled(lambda),
            self.structure.w().clone(),
            tol,
        )?;
        Self::build(structure, v, self.frame.clone())
    }
}

/// `γ(s)` for a Q0 curve.
pub fn eval_q0(c: &Q0Curve, s: f64) -> DVector<f64> {
    c.eval(s)
}

/// `Dᵏγ(s)` for a Q0 curve.
pub fn derivative_q0(c: &Q0Curve, k: usize, s: f64) -> DVector<f64> {
    c.derivative(k, s)
}

/// `e_kl = ⟨Aᵏv, Aˡv⟩ + [k = l = 0]‖w‖²`.
pub fn gram_e_kl(c: &Q0Curve, k: usize, l: usize) -> f64 {
    c.gram(k, l)
}

/// Curve `μ(s) = frame · (((exp(As) - I)A⁻¹v + v₀) ⊕ (ws + w₀))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Q1Curve {
    structure: HelicalCR,
    v: DVector<f64>,
    v0: DVector<f64>,
    w0: DVector<f64>,
    frame: DMatrix<f64>,
}

impl Q1Curve {
    pub fn new(
        structure: HelicalCR,
        v: DVector<f64>,
        v0: DVector<f64>,
        w0: DVector<f64>,
    ) -> Result<Self> {
        let d = structure.dim();
        Self::build(structure, v, v0, w0, DMatrix::identity(d, d))
    }

    pub fn with_frame(
        structure: HelicalCR,
        v: DVector<f64>,
        v0: DVector<f64>,
        w0: DVector<f64>,
        frame: DMatrix<f64>,
        tol: &Tolerances,
    ) -> Result<Self> {
        check_frame(&frame, structure.dim(), tol)?;
        Self::build(structure, v, v0, w0, frame)
    }

    fn build(
        structure: HelicalCR,
        v: DVector<f64>,
        v0: DVector<f64>,
        w0: DVector<f64>,
        frame: DMatrix<f64>,
    ) -> Result<Self> {
        let h = structure.a().dim();
        if v.len() != h || v0.len() != h || w0.len() != structure.p() {
            return Err(Error::DimensionMismatch(format!(
                "Q1 curve needs v, v0 in R^{h} and w0 in R^{}",
                structure.p()
            )));
        }
        Ok(Q1Curve { structure, v, v0, w0, frame })
    }

    pub fn structure(&self) -> &HelicalCR {
        &self.structure
    }

    pub fn v(&self) -> &DVector<f64> {
        &self.v
    }

    pub fn v0(&self) -> &DVector<f64> {
        &self.v0
    }

    pub fn w0(&self) -> &DVector<f64> {
        &self.w0
    }

    pub fn w(&self) -> &DVector<f64> {
        self.structure.w()
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn dim(&self) -> usize {
        self.structure.dim()
    }

    /// `v = 0`: the curve is an affine line.
    pub fn is_affine(&self) -> bool {
        self.v.iter().all(|&x| x == 0.0)
    }

    /// Horizontal part `(exp(As) - I)A⁻¹v + v₀` in canonical coordinates.
    pub fn horizontal(&self, s: f64) -> DVector<f64> {
        let sf = self.structure.spectral();
        let b = self.structure.solve(&self.v);
        let rotated = sf.exp_apply(s, &b);
        rotated - b + &self.v0
    }

    /// Vertical part `ws + w₀` in canonical coordinates.
    pub fn vertical(&self, s: f64) -> DVector<f64> {
        self.structure.w() * s + &self.w0
    }

    pub fn eval(&self, s: f64) -> DVector<f64> {
        let h = self.structure.a().dim();
        let mut local = DVector::zeros(self.dim());
        local.rows_mut(0, h).copy_from(&self.horizontal(s));
        local.rows_mut(h, self.structure.p()).copy_from(&self.vertical(s));
        &self.frame * local
    }

    /// `Dμ`, a Q0 curve with the same structure and frame.
    pub fn derivative_curve(&self) -> Q0Curve {
        Q0Curve {
            structure: self.structure.clone(),
            v: self.v.clone(),
            frame: self.frame.clone(),
        }
    }
}

/// `μ(s)` for a Q1 curve.
pub fn eval_q1(c: &Q1Curve, s: f64) -> DVector<f64> {
    c.eval(s)
}

/// Equivalence of helical structures: `A₂ = λA₁` for a nonzero scalar `λ`,
/// returned when it exists. Vertical data is not compared.
pub fn equivalent(h1: &HelicalCR, h2: &HelicalCR) -> Option<f64> {
    let (a1, a2) = (h1.a().matrix(), h2.a().matrix());
    if a1.shape() != a2.shape() || h1.p() != h2.p() {
        return None;
    }
    if a1.is_empty() {
        return Some(1.0);
    }
    let (idx, _) = a1
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
        .expect("nonempty");
    if a1[idx] == 0.0 {
        return None;
    }
    let lambda = a2[idx] / a1[idx];
    if lambda == 0.0 {
        return None;
    }
    let defect = max_abs(&(a2 - a1 * lambda));
    (defect <= 1e-9 * max_abs(a2).max(1.0)).then_some(lambda)
}

/// JSON form of a Q0 curve: `{"A": matrix, "v": [..], "w": [..]}` with an
/// optional orthogonal `"frame"`; `"w"` is omitted when `p = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Q0CurveJson {
    #[serde(rename = "A", with = "matrix_serde")]
    pub a: DMatrix<f64>,
    pub v: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub w: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<crate::skewlin::MatrixJson>,
}

/// JSON form of a Q1 curve: the Q0 fields plus `"v0"` and `"w0"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Q1CurveJson {
    #[serde(rename = "A", with = "matrix_serde")]
    pub a: DMatrix<f64>,
    pub v: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub w: Vec<f64>,
    pub v0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub w0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<crate::skewlin::MatrixJson>,
}

fn frame_json(frame: &DMatrix<f64>) -> Option<crate::skewlin::MatrixJson> {
    let d = frame.nrows();
    (frame != &DMatrix::identity(d, d)).then(|| frame.into())
}

impl From<&Q0Curve> for Q0CurveJson {
    fn from(c: &Q0Curve) -> Self {
        Q0CurveJson {
            a: c.structure.a().matrix().clone(),
            v: c.v.as_slice().to_vec(),
            w: c.w().as_slice().to_vec(),
            frame: frame_json(&c.frame),
        }
    }
}

impl Q0CurveJson {
    pub fn into_curve(self, tol: &Tolerances) -> Result<Q0Curve> {
        let structure = HelicalCR::new(SkewMatrix::new(self.a, tol)?, DVector::from_vec(self.w), tol)?;
        let v = DVector::from_vec(self.v);
        match self.frame {
            Some(f) => Q0Curve::with_frame(structure, v, f.try_into()?, tol),
            None => Q0Curve::new(structure, v),
        }
    }
}

impl From<&Q1Curve> for Q1CurveJson {
    fn from(c: &Q1Curve) -> Self {
        Q1CurveJson {
            a: c.structure.a().matrix().clone(),
            v: c.v.as_slice().to_vec(),
            w: c.w().as_slice().to_vec(),
            v0: c.v0.as_slice().to_vec(),
            w0: c.w0.as_slice().to_vec(),
            frame: frame_json(&c.frame),
        }
    }
}

impl Q1CurveJson {
    pub fn into_curve(self, tol: &Tolerances) -> Result<Q1Curve> {
        let structure = HelicalCR::new(SkewMatrix::new(self.a, tol)?, DVector::from_vec(self.w), tol)?;
        let (v, v0, w0) = (
            DVector::from_vec(self.v),
            DVector::from_vec(self.v0),
            DVector::from_vec(self.w0),
        );
        match self.frame {
            Some(f) => Q1Curve::with_frame(structure, v, v0, w0, f.try_into()?, tol),
            None => Q1Curve::new(structure, v, v0, w0),
        }
    }
}
