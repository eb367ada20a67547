//! Normal sub-Riemannian geodesics of step-two Carnot groups.
//!
//! In exponential coordinates the Hamiltonian is `H = ½|ζ|²` with
//! `ζ = ξ + ½A_τ x` and `A_τ = Σ_α τ_α C^α`. Hamilton's equations reduce to
//!
//! ```text
//! ẋ = ζ,   ζ̇ = A_τ ζ,   ξ̇ = ½A_τ ζ,   ṫ_α = ½ ζᵀ C^α x,   τ̇ = 0,
//! ```
//!
//! so `ζ(s) = exp(sA_τ) ζ₀` and everything else is an integral of it.
//! [`NormalGeodesic`] evaluates those integrals exactly by expanding `ζ₀`
//! over a complex eigenbasis of `A_τ` (eigenvalues `±iη` and `0`); the same
//! formulas cover `A_τ = 0`, invertible `A_τ` and singular nonzero `A_τ`.

mod correspond;
mod lift;
mod oracle;

pub use correspond::{
    geodesic_to_marked_helical, heisenberg_geodesic, heisenberg_ivp, heisenberg_to_classical,
    marked_helical_to_geodesic, normalize_tau, TauNormalization, HEISENBERG_TAU0,
};
pub use lift::{cc_length, horizontal_lift, FnCurve, GroupCurve, HorizontalCurve, HorizontalLift};
pub use oracle::ode_oracle;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::carnot::{CarnotPoint, StratifiedAlgebra2};
use crate::skewlin::{spectral_form, vector_serde, SkewMatrix};
use crate::{Error, Result, Tolerances};

/// Initial data `(x₀, t₀; ξ₀, τ₀)` of a bicharacteristic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicIVP {
    #[serde(with = "vector_serde")]
    pub x0: DVector<f64>,
    #[serde(with = "vector_serde")]
    pub t0: DVector<f64>,
    #[serde(with = "vector_serde")]
    pub xi0: DVector<f64>,
    #[serde(with = "vector_serde")]
    pub tau0: DVector<f64>,
}

impl GeodesicIVP {
    pub fn new(x0: DVector<f64>, t0: DVector<f64>, xi0: DVector<f64>, tau0: DVector<f64>) -> Self {
        GeodesicIVP { x0, t0, xi0, tau0 }
    }

    /// All-zero data: the constant geodesic at the identity.
    pub fn zero(g: &StratifiedAlgebra2) -> Self {
        let (m, p) = (g.m(), g.p());
        GeodesicIVP::new(DVector::zeros(m), DVector::zeros(p), DVector::zeros(m), DVector::zeros(p))
    }

    pub fn check(&self, g: &StratifiedAlgebra2) -> Result<()> {
        let (m, p) = (g.m(), g.p());
        if self.x0.len() != m || self.xi0.len() != m || self.t0.len() != p || self.tau0.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "geodesic data must have x0, xi0 in R^{m} and t0, tau0 in R^{p}"
            )));
        }
        if self.x0.iter().chain(&self.t0).chain(&self.xi0).chain(&self.tau0).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("geodesic data must be finite".into()));
        }
        Ok(())
    }

    /// `ζ₀ = ξ₀ + ½A_τ x₀`.
    pub fn zeta0(&self, g: &StratifiedAlgebra2) -> DVector<f64> {
        &self.xi0 + g.a_tau(&self.tau0) * &self.x0 * 0.5
    }

    pub fn start(&self) -> PhaseState {
        PhaseState { x: self.x0.clone(), t: self.t0.clone(), xi: self.xi0.clone(), tau: self.tau0.clone() }
    }

    /// `ζ₀ = 0`: the geodesic is constant.
    pub fn is_degenerate(&self, g: &StratifiedAlgebra2) -> bool {
        self.zeta0(g).iter().all(|&z| z == 0.0)
    }
}

/// A point `(x, t; ξ, τ)` of phase space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    #[serde(with = "vector_serde")]
    pub x: DVector<f64>,
    #[serde(with = "vector_serde")]
    pub t: DVector<f64>,
    #[serde(with = "vector_serde")]
    pub xi: DVector<f64>,
    #[serde(with = "vector_serde")]
    pub tau: DVector<f64>,
}

impl PhaseState {
    /// Momentum paired with the horizontal frame: `ζ = ξ + ½A_τ x`.
    pub fn zeta(&self, g: &StratifiedAlgebra2) -> DVector<f64> {
        &self.xi + g.a_tau(&self.tau) * &self.x * 0.5
    }

    pub fn point(&self) -> CarnotPoint {
        CarnotPoint::new(self.x.clone(), self.t.clone())
    }

    /// `(x, t, ξ, τ)` as one vector.
    pub fn stacked(&self) -> DVector<f64> {
        let parts = [&self.x, &self.t, &self.xi, &self.tau];
        DVector::from_iterator(parts.iter().map(|v| v.len()).sum(), parts.iter().flat_map(|v| v.iter().copied()))
    }

    pub(crate) fn from_stacked(y: &DVector<f64>, m: usize, p: usize) -> Self {
        PhaseState {
            x: y.rows(0, m).into_owned(),
            t: y.rows(m, p).into_owned(),
            xi: y.rows(m + p, m).into_owned(),
            tau: y.rows(2 * m + p, p).into_owned(),
        }
    }
}

/// `H = ½|ζ|²`.
pub fn hamiltonian(g: &StratifiedAlgebra2, state: &PhaseState) -> f64 {
    0.5 * state.zeta(g).norm_squared()
}

/// Shape of `A_τ` for a given geodesic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum GeodesicCase {
    /// `A_τ = 0`: the horizontal projection is a straight line.
    Straight,
    /// `A_τ` invertible: the horizontal projection rotates about a center.
    Rotational,
    /// `A_τ ≠ 0` singular: rotation on the coimage, straight motion along
    /// the `kernel_dim`-dimensional kernel.
    SingularATau { kernel_dim: usize },
}

/// One term `e^{iωs} z` of `ζ(s)`.
#[derive(Debug, Clone)]
struct Mode {
    omega: f64,
    z: DVector<Complex64>,
}

/// Closed-form evaluator of the bicharacteristic through an IVP.
#[derive(Debug, Clone)]
pub struct NormalGeodesic {
    algebra: StratifiedAlgebra2,
    ivp: GeodesicIVP,
    a_tau: DMatrix<f64>,
    case: GeodesicCase,
    modes: Vec<Mode>,
    /// `z_lᵀ C^α x₀`, indexed `[α][l]`.
    c_x0: Vec<Vec<Complex64>>,
    /// `z_lᵀ C^α z_l'`, indexed `[α]` then `(l, l')`.
    c_zz: Vec<DMatrix<Complex64>>,
}

/// `(e^z - 1)/z`, accurate for all `z`.
fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        return Complex64::new(1.0, 0.0) + z / 2.0 + z * z / 6.0 + z * z * z / 24.0;
    }
    let half = (0.5 * z.im).sin();
    let em1 = Complex64::new(z.re.exp_m1() * z.im.cos() - 2.0 * half * half, z.re.exp() * z.im.sin());
    em1 / z
}

/// Divided difference `exp[0, a, c] = ∫∫_{0≤u≤σ≤1} e^{aσ + (c-a)u}`.
fn exp_divided_difference(a: Complex64, c: Complex64) -> Complex64 {
    let (da, db, dc) = (a.norm(), (c - a).norm(), c.norm());
    let widest = da.max(db).max(dc);
    if widest < 0.1 {
        // Σ_n h_n(0, a, c)/(n+2)!, h_n the complete homogeneous polynomial
        let mut sum = Complex64::new(0.0, 0.0);
        let mut factorial = 2.0;
        let mut a_pow = vec![Complex64::new(1.0, 0.0)];
        let mut c_pow = vec![Complex64::new(1.0, 0.0)];
        for n in 0..18 {
            if n > 0 {
                a_pow.push(a_pow[n - 1] * a);
                c_pow.push(c_pow[n - 1] * c);
                factorial *= (n + 2) as f64;
            }
            let h: Complex64 = (0..=n).map(|i| a_pow[i] * c_pow[n - i]).sum();
            sum += h / factorial;
        }
        return sum;
    }
    if widest == dc {
        (a.exp() * phi1(c - a) - phi1(a)) / c
    } else if widest == db {
        (phi1(c) - phi1(a)) / (c - a)
    } else {
        (c.exp() * phi1(a - c) - phi1(c)) / a
    }
}

fn complex(v: &DVector<f64>) -> DVector<Complex64> {
    v.map(|x| Complex64::new(x, 0.0))
}

/// `uᵀ M v` for complex vectors and a real matrix (no conjugation).
fn bilinear(u: &DVector<Complex64>, m: &DMatrix<f64>, v: &DVector<Complex64>) -> Complex64 {
    let mv = complex_mul(m, v);
    u.iter().zip(mv.iter()).map(|(a, b)| a * b).sum()
}

fn complex_mul(m: &DMatrix<f64>, v: &DVector<Complex64>) -> DVector<Complex64> {
    let re = m * v.map(|z| z.re);
    let im = m * v.map(|z| z.im);
    DVector::from_fn(v.len(), |i, _| Complex64::new(re[i], im[i]))
}

impl NormalGeodesic {
    pub fn new(g: &StratifiedAlgebra2, ivp: &GeodesicIVP, tol: &Tolerances) -> Result<Self> {
        ivp.check(g)?;
        let a_tau = g.a_tau(&ivp.tau0);
        let zeta0 = ivp.zeta0(g);
        let sf = spectral_form(&SkewMatrix::skew_part(&a_tau), tol)?;
        let case = match (sf.n_blocks(), sf.kernel_dim()) {
            (0, _) => GeodesicCase::Straight,
            (_, 0) => GeodesicCase::Rotational,
            (_, k) => GeodesicCase::SingularATau { kernel_dim: k },
        };
        let mut modes = Vec::with_capacity(2 * sf.n_blocks() + 1);
        for j in 0..sf.n_blocks() {
            let eta = sf.frequencies()[j];
            let (q1, q2) = sf.plane(j);
            let coef = Complex64::new(q1.dot(&zeta0), q2.dot(&zeta0)) * 0.5;
            let z = DVector::from_fn(q1.len(), |i, _| Complex64::new(q1[i], -q2[i]) * coef);
            modes.push(Mode { omega: -eta, z: z.map(|c| c.conj()) });
            modes.push(Mode { omega: eta, z });
        }
        if sf.kernel_dim() > 0 {
            let k = sf.kernel_basis();
            let z = &k * (k.transpose() * &zeta0);
            modes.push(Mode { omega: 0.0, z: complex(&z) });
        }
        let x0c = complex(&ivp.x0);
        let c_x0 = g
            .structure_matrices()
            .iter()
            .map(|c| modes.iter().map(|md| bilinear(&md.z, c.matrix(), &x0c)).collect())
            .collect();
        let c_zz = g
            .structure_matrices()
            .iter()
            .map(|c| {
                let cz: Vec<DVector<Complex64>> = modes.iter().map(|md| complex_mul(c.matrix(), &md.z)).collect();
                DMatrix::from_fn(modes.len(), modes.len(), |l, k| {
                    modes[l].z.iter().zip(cz[k].iter()).map(|(a, b)| a * b).sum()
                })
            })
            .collect();
        Ok(NormalGeodesic { algebra: g.clone(), ivp: ivp.clone(), a_tau, case, modes, c_x0, c_zz })
    }

    pub fn algebra(&self) -> &StratifiedAlgebra2 {
        &self.algebra
    }

    pub fn ivp(&self) -> &GeodesicIVP {
        &self.ivp
    }

    pub fn case(&self) -> GeodesicCase {
        self.case
    }

    pub fn a_tau(&self) -> &DMatrix<f64> {
        &self.a_tau
    }

    /// Constant speed `|ζ₀|` of the horizontal projection.
    pub fn speed(&self) -> f64 {
        self.ivp.zeta0(&self.algebra).norm()
    }

    /// `(a, b)` with `x(s) = a + exp(sA_τ) b` when `A_τ` is invertible:
    /// `a = ½x₀ - A_τ⁻¹ξ₀`, `b = ½x₀ + A_τ⁻¹ξ₀`.
    pub fn center_form(&self) -> Option<(DVector<f64>, DVector<f64>)> {
        if self.case != GeodesicCase::Rotational {
            return None;
        }
        let inv_xi = self.a_tau.clone().lu().solve(&self.ivp.xi0)?;
        let half = &self.ivp.x0 * 0.5;
        Some((&half - &inv_xi, half + inv_xi))
    }

    /// `ζ(s) = exp(sA_τ) ζ₀`, the horizontal velocity.
    pub fn zeta(&self, s: f64) -> DVector<f64> {
        let m = self.algebra.m();
        self.modes.iter().fold(DVector::zeros(m), |acc, md| {
            let e = Complex64::new(0.0, md.omega * s).exp();
            acc + md.z.map(|z| (z * e).re)
        })
    }

    /// `∫₀ˢ e^{iωσ} dσ` for every mode.
    fn mode_integrals(&self, s: f64) -> Vec<Complex64> {
        self.modes.iter().map(|md| phi1(Complex64::new(0.0, md.omega * s)) * s).collect()
    }

    pub fn x(&self, s: f64) -> DVector<f64> {
        let w = self.mode_integrals(s);
        self.modes
            .iter()
            .zip(&w)
            .fold(self.ivp.x0.clone(), |acc, (md, wl)| acc + md.z.map(|z| (z * wl).re))
    }

    pub fn t(&self, s: f64) -> DVector<f64> {
        let w = self.mode_integrals(s);
        let n = self.modes.len();
        let mut dd = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        for l in 0..n {
            for k in 0..n {
                let a = Complex64::new(0.0, self.modes[l].omega * s);
                let c = Complex64::new(0.0, (self.modes[l].omega + self.modes[k].omega) * s);
                dd[(l, k)] = exp_divided_difference(a, c) * (s * s);
            }
        }
        DVector::from_fn(self.algebra.p(), |alpha, _| {
            let linear: Complex64 = self.c_x0[alpha].iter().zip(&w).map(|(c, wl)| c * wl).sum();
            let quadratic: Complex64 = self.c_zz[alpha].iter().zip(dd.iter()).map(|(c, d)| c * d).sum();
            self.ivp.t0[alpha] + 0.5 * (linear + quadratic).re
        })
    }

    pub fn point(&self, s: f64) -> CarnotPoint {
        CarnotPoint::new(self.x(s), self.t(s))
    }

    /// Full phase-space state at `s`.
    pub fn state(&self, s: f64) -> PhaseState {
        let x = self.x(s);
        let zeta = self.zeta(s);
        let xi = zeta - &self.a_tau * &x * 0.5;
        PhaseState { t: self.t(s), x, xi, tau: self.ivp.tau0.clone() }
    }

    /// Rate `ṫ = ½ζᵀC^α x`.
    pub fn t_dot(&self, s: f64) -> DVector<f64> {
        self.algebra.vertical_velocity(&self.x(s), &self.zeta(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skewlin::j2;
    use std::f64::consts::TAU;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn vec(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn divided_difference_branches_agree() {
        // compare against the direct double integral ∫∫ e^{aσ+bu} on a grid of
        // nearby arguments that straddle the branch thresholds
        let samples = [0.0, 0.03, -0.07, 0.099, 0.101, 0.5, -1.3, 4.0, 25.0];
        for &x in &samples {
            for &y in &samples {
                let a = Complex64::new(0.0, x);
                let c = Complex64::new(0.0, y);
                let reference = crate::quad::adaptive_simpson_vec(
                    |sigma| {
                        let inner = if (c - a).norm() == 0.0 {
                            Complex64::new(sigma, 0.0)
                        } else {
                            ((c - a) * sigma).exp_m1_safe() / (c - a)
                        };
                        let v = (a * sigma).exp() * inner;
                        vec(&[v.re, v.im])
                    },
                    0.0,
                    1.0,
                    1e-13,
                );
                let got = exp_divided_difference(a, c);
                assert!((got.re - reference[0]).abs() < 1e-10 && (got.im - reference[1]).abs() < 1e-10, "{x} {y}");
            }
        }
    }

    trait ExpM1 {
        fn exp_m1_safe(self) -> Complex64;
    }

    impl ExpM1 for Complex64 {
        fn exp_m1_safe(self) -> Complex64 {
            phi1(self) * self
        }
    }

    #[test]
    fn hamiltonian_examples() {
        let h = StratifiedAlgebra2::heisenberg(1);
        let zero = GeodesicIVP::zero(&h).start();
        assert_eq!(hamiltonian(&h, &zero), 0.0);
        let state = PhaseState { x: vec(&[0.0, 0.0]), t: vec(&[0.0]), xi: vec(&[1.0, 0.0]), tau: vec(&[1.0]) };
        assert_eq!(hamiltonian(&h, &state), 0.5);
    }

    #[test]
    fn straight_line_when_tau_vanishes() {
        let g = StratifiedAlgebra2::heisenberg(1);
        let ivp = GeodesicIVP::new(vec(&[0.0, 0.0]), vec(&[0.0]), vec(&[0.6, -0.8]), vec(&[0.0]));
        let geo = NormalGeodesic::new(&g, &ivp, &tol()).unwrap();
        assert_eq!(geo.case(), GeodesicCase::Straight);
        for s in [0.0, 0.5, 3.0] {
            assert!((geo.x(s) - vec(&[0.6 * s, -0.8 * s])).amax() < 1e-14);
            assert!(geo.t(s).amax() < 1e-14);
        }
        // x0 ≠ 0: ṫ = ½ξ₀ᵀJx₀ is constant
        let ivp = GeodesicIVP::new(vec(&[1.0, 2.0]), vec(&[0.5]), vec(&[0.6, -0.8]), vec(&[0.0]));
        let geo = NormalGeodesic::new(&g, &ivp, &tol()).unwrap();
        let rate = 0.5 * vec(&[0.6, -0.8]).dot(&(j2() * vec(&[1.0, 2.0])));
        assert!((geo.t(2.0)[0] - (0.5 + 2.0 * rate)).abs() < 1e-14);
    }

    #[test]
    fn starts_at_initial_data() {
        let g = StratifiedAlgebra2::free_nilpotent(3);
        let ivp = GeodesicIVP::new(vec(&[0.3, -0.2, 1.0]), vec(&[0.1, 0.2, 0.3]), vec(&[1.0, 0.5, -0.5]), vec(&[0.2, -1.0, 0.7]));
        let geo = NormalGeodesic::new(&g, &ivp, &tol()).unwrap();
        assert_eq!(geo.case(), GeodesicCase::SingularATau { kernel_dim: 1 });
        let s0 = geo.state(0.0);
        assert!((s0.stacked() - ivp.start().stacked()).amax() < 1e-14);
    }

    #[test]
    fn satisfies_hamilton_equations() {
        let g = StratifiedAlgebra2::free_nilpotent(3);
        let ivp = GeodesicIVP::new(vec(&[0.3, -0.2, 1.0]), vec(&[0.1, 0.2, 0.3]), vec(&[1.0, 0.5, -0.5]), vec(&[0.2, -1.0, 0.7]));
        let geo = NormalGeodesic::new(&g, &ivp, &tol()).unwrap();
        let h = 1e-5;
        for s in [0.0, 0.9, 2.2, TAU] {
            let fd = (geo.state(s + h).stacked() - geo.state(s - h).stacked()) / (2.0 * h);
            let st = geo.state(s);
            let zeta = st.zeta(&g);
            let a = g.a_tau(&ivp.tau0);
            let mut rhs = DVector::zeros(fd.len());
            rhs.rows_mut(0, 3).copy_from(&zeta);
            rhs.rows_mut(3, 3).copy_from(&g.vertical_velocity(&st.x, &zeta));
            rhs.rows_mut(6, 3).copy_from(&(&a * &zeta * 0.5));
            assert!((fd - rhs).amax() < 1e-8, "s = {s}");
            assert!((zeta.norm() - geo.speed()).abs() < 1e-12);
        }
    }

    #[test]
    fn center_form_matches() {
        let g = StratifiedAlgebra2::heisenberg(2);
        let ivp = GeodesicIVP::new(vec(&[0.3, -0.2, 1.0, 0.0]), vec(&[0.1]), vec(&[1.0, 0.5, -0.5, 2.0]), vec(&[1.5]));
        let geo = NormalGeodesic::new(&g, &ivp, &tol()).unwrap();
        let (a, b) = geo.center_form().unwrap();
        let at = g.a_tau(&ivp.tau0);
        for s in [0.0, 1.0, 4.0] {
            let rot = crate::skewlin::expm_skew(&SkewMatrix::skew_part(&at), s, &tol()).unwrap();
            assert!((&a + rot * &b - geo.x(s)).amax() < 1e-12);
        }
    }
}
