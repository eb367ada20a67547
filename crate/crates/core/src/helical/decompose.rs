use std::f64::consts::TAU;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{HelicalCR, Q0Curve};
use crate::skewlin::{complete_basis, orthogonalize, spectral_form, Polynomial, SkewMatrix};
use crate::{Error, Result, Tolerances};

/// One rotation plane of a canonical decomposition: the curve's component
/// in it is `x cos(ηs) - y sin(ηs)` with `x ⟂ y`, `|x| = |y| = amplitude`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CanonicalPlane {
    pub frequency: f64,
    pub amplitude: f64,
    #[serde(with = "crate::skewlin::vector_serde")]
    pub x: DVector<f64>,
    #[serde(with = "crate::skewlin::vector_serde")]
    pub y: DVector<f64>,
}

/// The data a Q0 curve determines: distinct frequencies, their planes, the
/// horizontal vector `v`, the vertical vector `w` and the orthogonal change
/// of basis from canonical to ambient coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CanonicalDecomposition {
    pub horizontal_dim: usize,
    pub vertical_dim: usize,
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub planes: Vec<CanonicalPlane>,
    #[serde(with = "crate::skewlin::vector_serde")]
    pub v: DVector<f64>,
    #[serde(with = "crate::skewlin::vector_serde")]
    pub w: DVector<f64>,
    #[serde(with = "crate::skewlin::matrix_serde")]
    pub change_of_basis: DMatrix<f64>,
    /// The generator is nonzero but the starting point has no horizontal
    /// component, so the curve is constant.
    pub degenerate_horizontal: bool,
}

/// Index ranges of runs of equal frequencies (relative gap `≤ sep`) in a
/// descending list.
pub(crate) fn frequency_clusters(freqs: &[f64], sep: f64) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=freqs.len() {
        let split = i == freqs.len() || freqs[i - 1] - freqs[i] > sep * freqs[i - 1].max(1.0);
        if split {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// A plane before orthonormalisation: component `x cos(ηs) - y sin(ηs)`.
pub(crate) struct RawPlane {
    pub eta: f64,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
}

/// Builds the canonical decomposition and curve from distinct planes and the
/// constant vertical part, all in ambient coordinates.
pub(crate) fn canonical_from_planes(
    mut planes: Vec<RawPlane>,
    w_amb: DVector<f64>,
    amp_floor: f64,
    degenerate_horizontal: bool,
) -> (CanonicalDecomposition, Q0Curve) {
    let d = w_amb.len();
    planes.sort_by(|a, b| b.eta.total_cmp(&a.eta));
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(d);
    let mut out_planes = Vec::with_capacity(planes.len());
    for p in planes {
        let amplitude = ((p.x.norm_squared() + p.y.norm_squared()) / 2.0).sqrt();
        let mut e1 = p.x.clone();
        orthogonalize(&mut e1, &cols);
        e1 /= e1.norm();
        let mut e2 = -&p.y;
        orthogonalize(&mut e2, &cols);
        e2.axpy(-e1.dot(&e2), &e1, 1.0);
        e2 /= e2.norm();
        cols.push(e1);
        cols.push(e2);
        out_planes.push(CanonicalPlane { frequency: p.eta, amplitude, x: p.x, y: p.y });
    }
    let h = cols.len();
    let w_norm = w_amb.norm();
    let has_w = w_norm > amp_floor && w_norm > 0.0;
    if has_w && h < d {
        let mut dir = w_amb.clone();
        orthogonalize(&mut dir, &cols);
        dir /= dir.norm();
        cols.push(dir);
    }
    complete_basis(&mut cols, Vec::new(), d);
    let frame = if d == 0 { DMatrix::zeros(0, 0) } else { DMatrix::from_columns(&cols) };

    let p = d - h;
    let mut w = DVector::zeros(p);
    if has_w && p > 0 {
        w[0] = w_norm;
    }
    let frequencies: Vec<f64> = out_planes.iter().map(|p| p.frequency).collect();
    let amplitudes: Vec<f64> = out_planes.iter().map(|p| p.amplitude).collect();
    let mut v = DVector::zeros(h);
    for (j, a) in amplitudes.iter().enumerate() {
        v[2 * j] = *a;
    }
    let structure = HelicalCR::from_frequencies(&frequencies, w.clone());
    let curve = Q0Curve { structure, v: v.clone(), frame: frame.clone() };
    let dec = CanonicalDecomposition {
        horizontal_dim: h,
        vertical_dim: p,
        frequencies,
        amplitudes,
        planes: out_planes,
        v,
        w,
        change_of_basis: frame,
        degenerate_horizontal,
    };
    (dec, curve)
}

/// Canonical decomposition of the curve `exp(As) u₀`.
///
/// `A` may be singular and may have repeated frequencies: the components of
/// `u₀` inside each frequency eigenspace are summed into one plane, so the
/// result has distinct frequencies. Planes where `u₀` has amplitude below
/// `amp_tol·|u₀|` are dropped.
pub fn decompose(
    a: &SkewMatrix,
    u0: &DVector<f64>,
    tol: &Tolerances,
) -> Result<(CanonicalDecomposition, Q0Curve)> {
    if a.dim() != u0.len() {
        return Err(Error::DimensionMismatch(format!(
            "generator is {0}x{0} but u0 lies in R^{1}",
            a.dim(),
            u0.len()
        )));
    }
    let sf = spectral_form(a, tol)?;
    let amp_floor = tol.amp_tol * u0.norm();
    let coords = sf.basis().tr_mul(u0);
    let kernel = sf.kernel_basis();
    let kstart = 2 * sf.n_blocks();
    let w_amb = &kernel * coords.rows(kstart, sf.kernel_dim());

    let mut planes = Vec::new();
    for range in frequency_clusters(sf.frequencies(), tol.freq_sep) {
        let mut h = DVector::zeros(u0.len());
        for j in range.clone() {
            let (q1, q2) = sf.plane(j);
            h.axpy(coords[2 * j], &q1, 1.0);
            h.axpy(coords[2 * j + 1], &q2, 1.0);
        }
        if h.norm() <= amp_floor || h.norm() == 0.0 {
            continue;
        }
        let eta = sf.frequencies()[range.clone()].iter().sum::<f64>() / range.len() as f64;
        let y = -(a.matrix() * &h) / eta;
        planes.push(RawPlane { eta, x: h, y });
    }
    let degenerate = planes.is_empty() && sf.n_blocks() > 0;
    Ok(canonical_from_planes(planes, w_amb, amp_floor, degenerate))
}

/// Lowest-degree monic `p` with `p(D)γ = 0`: `x^ε ∏ (x² + η²)` over the
/// frequencies whose plane carries part of `v`, with `ε = 1` iff `w ≠ 0`.
pub fn minimal_annihilating_poly(c: &Q0Curve, tol: &Tolerances) -> Polynomial {
    let sf = c.structure().spectral();
    let coords = sf.basis().tr_mul(c.v());
    let w_norm = c.w().norm();
    let amp_floor = tol.amp_tol * (c.v().norm_squared() + w_norm * w_norm).sqrt();
    let mut p = Polynomial::monomial(usize::from(w_norm > tol.freq_floor));
    for range in frequency_clusters(sf.frequencies(), tol.freq_sep) {
        let amp = range
            .clone()
            .map(|j| coords[2 * j].powi(2) + coords[2 * j + 1].powi(2))
            .sum::<f64>()
            .sqrt();
        if amp > amp_floor && amp > 0.0 {
            let eta = sf.frequencies()[range.clone()].iter().sum::<f64>() / range.len() as f64;
            p = p.mul(&Polynomial::rotation_factor(eta));
        }
    }
    p
}

/// Projection of a Q0 curve onto one canonical plane: a circle about the
/// origin of that plane.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneProjection {
    pub frequency: f64,
    /// Centre in plane coordinates; always the origin for a Q0 curve.
    pub center: [f64; 2],
    pub radius: f64,
    /// Orthonormal ambient vectors spanning the plane.
    pub basis: (DVector<f64>, DVector<f64>),
    /// Largest `| |proj γ(s)| - radius |` seen over a sampling grid.
    pub max_deviation: f64,
}

/// Circles traced by the curve in each canonical plane, ordered by
/// descending frequency.
pub fn plane_projections(c: &Q0Curve, tol: &Tolerances) -> Result<Vec<PlaneProjection>> {
    let (dec, _) = decompose(&c.ambient_generator(), &c.initial_point(), tol)?;
    if dec.planes.is_empty() {
        return Err(Error::InvalidInput("curve has no horizontal part".into()));
    }
    let slowest = dec.frequencies.last().copied().unwrap_or(1.0);
    let grid: Vec<f64> = (0..64).map(|i| TAU / slowest * i as f64 / 64.0).collect();
    let samples: Vec<DVector<f64>> = grid.iter().map(|&s| c.eval(s)).collect();
    let out = dec
        .planes
        .iter()
        .map(|p| {
            let e1 = &p.x / p.x.norm();
            let e2 = -&p.y / p.y.norm();
            let max_deviation = samples.iter().fold(0.0_f64, |acc, g| {
                let r = (g.dot(&e1).powi(2) + g.dot(&e2).powi(2)).sqrt();
                acc.max((r - p.amplitude).abs())
            });
            PlaneProjection {
                frequency: p.frequency,
                center: [0.0, 0.0],
                radius: p.amplitude,
                basis: (e1, e2),
                max_deviation,
            }
        })
        .collect();
    Ok(out)
}
