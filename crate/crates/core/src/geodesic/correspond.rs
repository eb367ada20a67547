//! Marked helical structures ↔ normal geodesics of contact-type groups, the
//! Heisenberg closed form, and the normalisation of `τ₀`.

use nalgebra::DVector;

use super::GeodesicIVP;
use crate::carnot::{algebra_to_helical, helical_to_algebra, CarnotPoint, StratifiedAlgebra2};
use crate::helical::MarkedHelicalCR;
use crate::skewlin::restrict_to_coimage;
use crate::{Error, Result, Tolerances};

/// The contact algebra of the marked structure's base and the geodesic whose
/// horizontal projection is the marked Q1 curve: `x₀ = v₀`,
/// `t₀ = ⟨w₀, w⟩/|w|²`, `τ₀ = 1`, `ξ₀ = v - ½Av₀` (so `ζ₀ = v`).
pub fn marked_helical_to_geodesic(
    mh: &MarkedHelicalCR,
    tol: &Tolerances,
) -> Result<(StratifiedAlgebra2, GeodesicIVP)> {
    let base = mh.base();
    let (g, _) = helical_to_algebra(base, tol)?;
    let v0 = mh.v0();
    let w = base.w();
    let t0 = mh.w0().dot(w) / w.norm_squared();
    let xi0 = mh.v() - base.a().apply(&v0) * 0.5;
    let ivp = GeodesicIVP::new(v0, DVector::from_element(1, t0), xi0, DVector::from_element(1, 1.0));
    Ok((g, ivp))
}

/// The marked helical structure of a geodesic with `τ₀ = 1` in a contact
/// group: base `algebra_to_helical(g, w)`, `v = ½Ax₀ + ξ₀ = ζ₀` and
/// `u₀ = x₀ ⊕ t₀w`.
///
/// When `C¹` is singular the base lives on its coimage and `v`, `x₀` are
/// projected there.
pub fn geodesic_to_marked_helical(
    g: &StratifiedAlgebra2,
    ivp: &GeodesicIVP,
    w: &DVector<f64>,
    tol: &Tolerances,
) -> Result<MarkedHelicalCR> {
    if g.p() != 1 {
        return Err(Error::NotContact { p: g.p() });
    }
    ivp.check(g)?;
    if ivp.tau0[0] != 1.0 {
        return Err(Error::InvalidInput(format!(
            "tau0 = {} must be normalised to 1 first (see normalize_tau)",
            ivp.tau0[0]
        )));
    }
    let base = algebra_to_helical(g, w, tol)?;
    let embed = restrict_to_coimage(g.structure_matrix(0), tol)?.embed;
    let zeta0 = ivp.zeta0(g);
    let v = embed.transpose() * zeta0;
    let v0 = embed.transpose() * &ivp.x0;
    let h = v0.len();
    let mut u0 = DVector::zeros(h + w.len());
    u0.rows_mut(0, h).copy_from(&v0);
    u0.rows_mut(h, w.len()).copy_from(&(w * ivp.t0[0]));
    MarkedHelicalCR::new(base, v, u0)
}

/// Result of [`normalize_tau`]: the geodesic of `(algebra, ivp)` at
/// parameter `s` equals the original one at `s/scale`, with `t` multiplied
/// by `sign`.
#[derive(Debug, Clone, PartialEq)]
pub struct TauNormalization {
    pub algebra: StratifiedAlgebra2,
    pub ivp: GeodesicIVP,
    pub scale: f64,
    pub sign: f64,
}

impl TauNormalization {
    /// Maps a point of the normalised geodesic back to the original
    /// coordinates.
    pub fn to_original(&self, point: &CarnotPoint) -> CarnotPoint {
        CarnotPoint::new(point.x.clone(), &point.t * self.sign)
    }
}

/// Brings a contact-type IVP to `τ₀ ∈ {0, 1}`: `s ↦ |τ₀|s` and the sign of
/// `τ₀` absorbed into `C¹` (and hence into `t`).
pub fn normalize_tau(g: &StratifiedAlgebra2, ivp: &GeodesicIVP, tol: &Tolerances) -> Result<TauNormalization> {
    if g.p() != 1 {
        return Err(Error::NotContact { p: g.p() });
    }
    ivp.check(g)?;
    let tau = ivp.tau0[0];
    if tau == 0.0 {
        return Ok(TauNormalization { algebra: g.clone(), ivp: ivp.clone(), scale: 1.0, sign: 1.0 });
    }
    let (scale, sign) = (tau.abs(), tau.signum());
    let algebra = StratifiedAlgebra2::new(vec![g.structure_matrix(0).matrix() * sign], tol)?;
    let normalized = GeodesicIVP::new(
        ivp.x0.clone(),
        &ivp.t0 * sign,
        &ivp.xi0 / scale,
        DVector::from_element(1, 1.0),
    );
    Ok(TauNormalization { algebra, ivp: normalized, scale, sign })
}

/// `τ₀` of Heisenberg(1) (`C¹ = J`) under which geodesics turn like
/// `e^{-is}`.
pub const HEISENBERG_TAU0: f64 = -1.0;

fn cmul(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0]]
}

fn conj(a: [f64; 2]) -> [f64; 2] {
    [a[0], -a[1]]
}

/// `(a + b e^{-is}, c + |b|²s - Im(ā b e^{-is}))`, complex numbers as
/// 2-vectors and `t` in the classical Heisenberg normalisation.
pub fn heisenberg_geodesic(a: [f64; 2], b: [f64; 2], c: f64, s: f64) -> CarnotPoint {
    let rot = [s.cos(), -s.sin()];
    let be = cmul(b, rot);
    let x = DVector::from_vec(vec![a[0] + be[0], a[1] + be[1]]);
    let b2 = b[0] * b[0] + b[1] * b[1];
    let t = c + b2 * s - cmul(conj(a), be)[1];
    CarnotPoint::new(x, DVector::from_element(1, t))
}

/// IVP on Heisenberg(1) whose geodesic is [`heisenberg_geodesic`]`(a, b, c, ·)`
/// after [`heisenberg_to_classical`]: `x₀ = a + b`, `ζ₀ = -ib`,
/// `t₀ = -½(c - Im(āb))`, `τ₀ = -1`.
pub fn heisenberg_ivp(a: [f64; 2], b: [f64; 2], c: f64) -> GeodesicIVP {
    let x0 = DVector::from_vec(vec![a[0] + b[0], a[1] + b[1]]);
    let zeta0 = DVector::from_vec(vec![b[1], -b[0]]);
    let tau0 = DVector::from_element(1, HEISENBERG_TAU0);
    let g = StratifiedAlgebra2::heisenberg(1);
    let xi0 = &zeta0 - g.a_tau(&tau0) * &x0 * 0.5;
    let t0 = -0.5 * (c - cmul(conj(a), b)[1]);
    GeodesicIVP::new(x0, DVector::from_element(1, t0), xi0, tau0)
}

/// Our Heisenberg `t` (from `½ζᵀJx`) to the classical one: `t ↦ -2t`.
pub fn heisenberg_to_classical(point: &CarnotPoint) -> CarnotPoint {
    CarnotPoint::new(point.x.clone(), &point.t * -2.0)
}
