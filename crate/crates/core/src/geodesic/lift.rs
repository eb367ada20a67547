//! Horizontal lifts of curves in `R^m` and Carnot–Carathéodory lengths of
//! horizontal curves.

use nalgebra::DVector;

use super::NormalGeodesic;
use crate::carnot::{CarnotPoint, StratifiedAlgebra2};
use crate::quad::{adaptive_simpson, adaptive_simpson_vec};
use crate::{Error, Result};

/// Absolute accuracy of the lift and length integrals.
pub const QUAD_TOL: f64 = 1e-10;
const BASEPOINT_TOL: f64 = 1e-9;
const HORIZONTAL_TOL: f64 = 1e-8;
const HORIZONTAL_CHECKS: usize = 33;

/// A curve in the horizontal space `R^m` with its velocity.
pub trait HorizontalCurve {
    fn position(&self, s: f64) -> DVector<f64>;
    fn velocity(&self, s: f64) -> DVector<f64>;
}

/// A curve in the group with its velocity `(ẋ, ṫ)`.
pub trait GroupCurve {
    fn point(&self, s: f64) -> CarnotPoint;
    fn velocity(&self, s: f64) -> (DVector<f64>, DVector<f64>);
}

/// A horizontal-space curve given by two closures.
pub struct FnCurve<P, V> {
    pub position: P,
    pub velocity: V,
}

impl<P, V> HorizontalCurve for FnCurve<P, V>
where
    P: Fn(f64) -> DVector<f64>,
    V: Fn(f64) -> DVector<f64>,
{
    fn position(&self, s: f64) -> DVector<f64> {
        (self.position)(s)
    }

    fn velocity(&self, s: f64) -> DVector<f64> {
        (self.velocity)(s)
    }
}

impl HorizontalCurve for NormalGeodesic {
    fn position(&self, s: f64) -> DVector<f64> {
        self.x(s)
    }

    fn velocity(&self, s: f64) -> DVector<f64> {
        self.zeta(s)
    }
}

impl GroupCurve for NormalGeodesic {
    fn point(&self, s: f64) -> CarnotPoint {
        NormalGeodesic::point(self, s)
    }

    fn velocity(&self, s: f64) -> (DVector<f64>, DVector<f64>) {
        (self.zeta(s), self.t_dot(s))
    }
}

/// The unique horizontal curve in the group over `γ` through a base point.
pub struct HorizontalLift<'a, C: HorizontalCurve> {
    algebra: &'a StratifiedAlgebra2,
    curve: &'a C,
    a: f64,
    start: CarnotPoint,
}

/// Lifts `γ` (parameterised from `a`) through `start`, which must project
/// to `γ(a)`.
pub fn horizontal_lift<'a, C: HorizontalCurve>(
    g: &'a StratifiedAlgebra2,
    curve: &'a C,
    a: f64,
    start: CarnotPoint,
) -> Result<HorizontalLift<'a, C>> {
    g.check_point(&start)?;
    let base = curve.position(a);
    g.check_horizontal(&base)?;
    let gap = (&base - &start.x).amax();
    if gap > BASEPOINT_TOL {
        return Err(Error::BasepointMismatch { gap });
    }
    Ok(HorizontalLift { algebra: g, curve, a, start })
}

impl<C: HorizontalCurve> HorizontalLift<'_, C> {
    /// `t(s) = t(a) + ½∫ₐˢ γ̇ᵀ C^α γ dσ`, `x(s) = γ(s)`.
    pub fn t(&self, s: f64) -> DVector<f64> {
        let integrand = |sigma: f64| {
            self.algebra.vertical_velocity(&self.curve.position(sigma), &self.curve.velocity(sigma))
        };
        &self.start.t + adaptive_simpson_vec(integrand, self.a, s, QUAD_TOL)
    }

    pub fn eval(&self, s: f64) -> CarnotPoint {
        CarnotPoint::new(self.curve.position(s), self.t(s))
    }
}

impl<C: HorizontalCurve> GroupCurve for HorizontalLift<'_, C> {
    fn point(&self, s: f64) -> CarnotPoint {
        self.eval(s)
    }

    fn velocity(&self, s: f64) -> (DVector<f64>, DVector<f64>) {
        let (x, v) = (self.curve.position(s), self.curve.velocity(s));
        let t_dot = self.algebra.vertical_velocity(&x, &v);
        (v, t_dot)
    }
}

/// CC length `∫ₐᵇ |ẋ|` of a horizontal curve in the group.
///
/// Horizontality (`ṫ = ½ẋᵀC^α x`) is checked at evenly spaced points.
pub fn cc_length<C: GroupCurve>(g: &StratifiedAlgebra2, curve: &C, a: f64, b: f64) -> Result<f64> {
    for k in 0..HORIZONTAL_CHECKS {
        let s = a + (b - a) * k as f64 / (HORIZONTAL_CHECKS - 1) as f64;
        let point = curve.point(s);
        g.check_point(&point)?;
        let (x_dot, t_dot) = curve.velocity(s);
        let defect = (t_dot - g.vertical_velocity(&point.x, &x_dot)).amax();
        if !(defect <= HORIZONTAL_TOL) {
            return Err(Error::NotHorizontal { s, defect });
        }
    }
    Ok(adaptive_simpson(|s| curve.velocity(s).0.norm(), a, b, QUAD_TOL))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::{ode_oracle, GeodesicIVP};
    use crate::Tolerances;
    use std::f64::consts::{PI, TAU};

    fn vec(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn unit_circle() -> FnCurve<impl Fn(f64) -> DVector<f64>, impl Fn(f64) -> DVector<f64>> {
        FnCurve { position: |s: f64| vec(&[s.cos(), s.sin()]), velocity: |s: f64| vec(&[-s.sin(), s.cos()]) }
    }

    #[test]
    fn constant_curve_lifts_to_constant() {
        let g = StratifiedAlgebra2::heisenberg(1);
        let c = FnCurve { position: |_| vec(&[1.0, 2.0]), velocity: |_| vec(&[0.0, 0.0]) };
        let lift = horizontal_lift(&g, &c, 0.0, CarnotPoint::new(vec(&[1.0, 2.0]), vec(&[0.7]))).unwrap();
        assert_eq!(lift.eval(3.0), CarnotPoint::new(vec(&[1.0, 2.0]), vec(&[0.7])));
    }

    #[test]
    fn circle_gains_enclosed_area() {
        // ṫ = ½γ̇ᵀJγ = ½ for the counterclockwise unit circle, so one turn
        // gains π, the enclosed area
        let g = StratifiedAlgebra2::heisenberg(1);
        let c = unit_circle();
        let lift = horizontal_lift(&g, &c, 0.0, CarnotPoint::new(vec(&[1.0, 0.0]), vec(&[0.0]))).unwrap();
        assert!((lift.t(TAU)[0] - PI).abs() < 1e-10);
        assert!((cc_length(&g, &lift, 0.0, TAU).unwrap() - TAU).abs() < 1e-10);
        // the circle through the origin is a geodesic: compare with the oracle
        let through_origin = FnCurve {
            position: |s: f64| vec(&[s.cos() - 1.0, -s.sin()]),
            velocity: |s: f64| vec(&[-s.sin(), -s.cos()]),
        };
        let lift = horizontal_lift(&g, &through_origin, 0.0, g.identity()).unwrap();
        let ivp = GeodesicIVP::new(vec(&[0.0, 0.0]), vec(&[0.0]), vec(&[0.0, -1.0]), vec(&[-1.0]));
        let states = ode_oracle(&g, &ivp, &[1.0, PI, TAU]).unwrap();
        for (st, s) in states.iter().zip([1.0, PI, TAU]) {
            assert!((st.x.clone() - lift.eval(s).x).amax() < 1e-8);
            assert!((st.t[0] - lift.t(s)[0]).abs() < 1e-8);
        }
    }

    #[test]
    fn lift_of_geodesic_projection_reproduces_t() {
        let g = StratifiedAlgebra2::free_nilpotent(3);
        let ivp = GeodesicIVP::new(vec(&[0.3, -0.2, 1.0]), vec(&[0.1, 0.2, 0.3]), vec(&[1.0, 0.5, -0.5]), vec(&[0.2, -1.0, 0.7]));
        let geo = NormalGeodesic::new(&g, &ivp, &Tolerances::default()).unwrap();
        let lift = horizontal_lift(&g, &geo, 0.0, geo.point(0.0)).unwrap();
        for s in [0.5, 2.0, TAU] {
            assert!((lift.t(s) - geo.t(s)).amax() < 1e-8);
        }
        assert!((cc_length(&g, &geo, 0.0, 2.5).unwrap() - 2.5 * geo.speed()).abs() < 1e-9);
    }

    #[test]
    fn lengths_and_errors() {
        let g = StratifiedAlgebra2::heisenberg(1);
        let segment = FnCurve { position: |s: f64| vec(&[s, 0.0]), velocity: |_| vec(&[1.0, 0.0]) };
        let lift = horizontal_lift(&g, &segment, 0.0, g.identity()).unwrap();
        assert!((cc_length(&g, &lift, 0.0, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            horizontal_lift(&g, &segment, 0.0, CarnotPoint::new(vec(&[0.5, 0.0]), vec(&[0.0]))),
            Err(Error::BasepointMismatch { .. })
        ));
        struct Vertical;
        impl GroupCurve for Vertical {
            fn point(&self, s: f64) -> CarnotPoint {
                CarnotPoint::new(vec(&[0.0, 0.0]), vec(&[s]))
            }
            fn velocity(&self, _: f64) -> (DVector<f64>, DVector<f64>) {
                (vec(&[0.0, 0.0]), vec(&[1.0]))
            }
        }
        assert!(matches!(cc_length(&g, &Vertical, 0.0, 1.0), Err(Error::NotHorizontal { .. })));
    }
}
