//! Injectivity of Q0 and Q1 curves.
//!
//! A Q0 curve is periodic, hence not injective, exactly when all of its
//! active frequencies are rational multiples of one another; otherwise it
//! winds densely around a torus without closing up. Rationality is judged
//! from continued-fraction convergents of `η_j/η_1`. A float that came from
//! a genuine small-denominator rational sits far closer to its convergent
//! than the `1/q²` law that governs irrational numbers, so a convergent is
//! accepted only if it is both within `rat_tol` and "suspiciously" close
//! (`q²·|r - p/q| ≤ STRONG`). Strong matches with denominators beyond the
//! bound cannot be settled and are reported as inconclusive.

use nalgebra::DVector;
use serde::Serialize;
use std::f64::consts::TAU;

use super::decompose::{decompose, CanonicalDecomposition};
use super::{HelicalCR, Q0Curve, Q1Curve};
use crate::{Error, Result, Tolerances};

/// Largest scaled error `q²·|r - p/q|` accepted as a rational match.
const STRONG: f64 = 1e-2;
/// Maximum allowed `|γ(0) - γ(T)|` for a period witness.
const WITNESS_GAP: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum InjectivityVerdict {
    Injective,
    /// The curve closes up after `period`; `gap = |γ(0) - γ(period)|`.
    NonInjective { period: f64, gap: f64 },
    /// Rationality could not be decided for `ratio`.
    Inconclusive { ratio: f64, denominator: u64, reason: String },
}

impl InjectivityVerdict {
    /// `Some(true/false)` when decided.
    pub fn is_injective(&self) -> Option<bool> {
        match self {
            InjectivityVerdict::Injective => Some(true),
            InjectivityVerdict::NonInjective { .. } => Some(false),
            InjectivityVerdict::Inconclusive { .. } => None,
        }
    }

    pub fn witness(&self) -> Option<f64> {
        match self {
            InjectivityVerdict::NonInjective { period, .. } => Some(*period),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Rationality {
    Rational(u64),
    Irrational,
    Undecided { denominator: u64, reason: String },
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Classifies `r > 0` using continued-fraction convergents.
fn classify(r: f64, tol: &Tolerances) -> Rationality {
    let bound = tol.rat_denom_bound;
    let scale = r.abs().max(1.0);
    let (mut p_prev, mut p) = (1.0_f64, r.floor());
    let (mut q_prev, mut q) = (0.0_f64, 1.0_f64);
    let mut x = r - r.floor();
    let limit = 10.0 * bound as f64;
    loop {
        let err = (r - p / q).abs() / scale;
        if err <= tol.rat_tol && q * q * err <= STRONG {
            let den = q as u64;
            return if den <= bound {
                Rationality::Rational(den)
            } else {
                Rationality::Undecided {
                    denominator: den,
                    reason: format!("ratio matches a rational with denominator {den} above the bound {bound}"),
                }
            };
        }
        if x <= 0.0 || err == 0.0 {
            return Rationality::Irrational;
        }
        let inv = 1.0 / x;
        let a = inv.floor();
        x = inv - a;
        let (p_next, q_next) = (a * p + p_prev, a * q + q_prev);
        if q_next > limit || !q_next.is_finite() {
            return Rationality::Irrational;
        }
        (p_prev, p, q_prev, q) = (p, p_next, q, q_next);
    }
}

/// Decides periodicity from the (distinct, positive) frequencies and checks
/// the witness with `eval`.
fn verdict(
    freqs: &[f64],
    tol: &Tolerances,
    eval: impl Fn(f64) -> DVector<f64>,
) -> Result<InjectivityVerdict> {
    let Some(&eta_ref) = freqs.first() else {
        return Err(Error::InvalidInput("injectivity needs at least one active frequency".into()));
    };
    let mut lcm: u128 = 1;
    let limit = 10 * tol.rat_denom_bound as u128;
    for &eta in &freqs[1..] {
        let ratio = eta / eta_ref;
        match classify(ratio, tol) {
            Rationality::Irrational => return Ok(InjectivityVerdict::Injective),
            Rationality::Undecided { denominator, reason } => {
                return Ok(InjectivityVerdict::Inconclusive { ratio, denominator, reason })
            }
            Rationality::Rational(q) => {
                lcm = lcm / gcd(lcm, q as u128) * q as u128;
                if lcm > limit {
                    return Ok(InjectivityVerdict::Inconclusive {
                        ratio,
                        denominator: q,
                        reason: format!("common denominator {lcm} exceeds the search range"),
                    });
                }
            }
        }
    }
    let period = TAU * lcm as f64 / eta_ref;
    let gap = (eval(0.0) - eval(period)).norm();
    if gap <= WITNESS_GAP {
        Ok(InjectivityVerdict::NonInjective { period, gap })
    } else {
        Ok(InjectivityVerdict::Inconclusive {
            ratio: f64::NAN,
            denominator: lcm as u64,
            reason: format!("period witness {period} failed re-evaluation (gap {gap:e})"),
        })
    }
}

/// Injectivity of the Q0 curve described by a canonical decomposition.
pub fn is_injective(dec: &CanonicalDecomposition, tol: &Tolerances) -> Result<InjectivityVerdict> {
    let structure = HelicalCR::from_frequencies(&dec.frequencies, dec.w.clone());
    let curve = Q0Curve::with_frame(structure, dec.v.clone(), dec.change_of_basis.clone(), tol)?;
    verdict(&dec.frequencies, tol, |s| curve.eval(s))
}

/// Injectivity of an arbitrary Q0 curve (its inactive planes are ignored).
pub fn is_injective_curve(c: &Q0Curve, tol: &Tolerances) -> Result<InjectivityVerdict> {
    let (dec, _) = decompose(&c.ambient_generator(), &c.initial_point(), tol)?;
    verdict(&dec.frequencies, tol, |s| c.eval(s))
}

/// Injectivity of a Q1 curve: a nonzero vertical velocity makes it injective
/// outright, otherwise it is a translate of a closed or dense Q0 loop.
pub fn is_injective_q1(c: &Q1Curve, tol: &Tolerances) -> Result<InjectivityVerdict> {
    if c.w().norm() > 0.0 {
        return Ok(InjectivityVerdict::Injective);
    }
    let velocity = c.derivative_curve();
    let (dec, _) = decompose(&velocity.ambient_generator(), &velocity.initial_point(), tol)?;
    verdict(&dec.frequencies, tol, |s| c.eval(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skewlin::SkewMatrix;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn unit_circles(freqs: &[f64]) -> Q0Curve {
        let structure = HelicalCR::from_frequencies(freqs, DVector::zeros(0));
        let mut v = DVector::zeros(2 * freqs.len());
        for j in 0..freqs.len() {
            v[2 * j] = 1.0;
        }
        Q0Curve::new(structure, v).unwrap()
    }

    fn dec_of(c: &Q0Curve) -> CanonicalDecomposition {
        decompose(&c.ambient_generator(), &c.initial_point(), &tol()).unwrap().0
    }

    #[test]
    fn one_two_is_periodic() {
        let v = is_injective(&dec_of(&unit_circles(&[2.0, 1.0])), &tol()).unwrap();
        let period = v.witness().expect("non-injective");
        assert!((period - TAU).abs() < 1e-12);
    }

    #[test]
    fn two_three_six_is_periodic() {
        let c = unit_circles(&[6.0, 3.0, 2.0]);
        let v = is_injective(&dec_of(&c), &tol()).unwrap();
        assert!((v.witness().unwrap() - TAU).abs() < 1e-12);
        assert!((c.eval(0.0) - c.eval(TAU)).norm() <= 1e-8);
    }

    #[test]
    fn circle_is_periodic() {
        let v = is_injective_curve(&unit_circles(&[1.0]), &tol()).unwrap();
        assert!((v.witness().unwrap() - TAU).abs() < 1e-12);
    }

    #[test]
    fn skew_line_is_injective() {
        let v = is_injective_curve(&unit_circles(&[2f64.sqrt(), 1.0]), &tol()).unwrap();
        assert_eq!(v, InjectivityVerdict::Injective);
        for alpha in [std::f64::consts::PI, std::f64::consts::E, 5f64.sqrt(), (1.0 + 5f64.sqrt()) / 2.0] {
            let v = is_injective_curve(&unit_circles(&[alpha, 1.0]), &tol()).unwrap();
            assert_eq!(v, InjectivityVerdict::Injective, "alpha = {alpha}");
        }
    }

    #[test]
    fn large_but_admissible_denominator() {
        let r = 1.0 + 1.0 / 99_991.0;
        assert_eq!(classify(r, &tol()), Rationality::Rational(99_991));
    }

    #[test]
    fn near_rational_at_bound_is_inconclusive() {
        let r = 1.0 + 1.0 / 1_000_003.0;
        assert!(matches!(classify(r, &tol()), Rationality::Undecided { denominator: 1_000_003, .. }));
        let v = is_injective_curve(&unit_circles(&[r, 1.0]), &tol()).unwrap();
        assert!(matches!(v, InjectivityVerdict::Inconclusive { .. }), "{v:?}");
    }

    #[test]
    fn q1_with_vertical_drift_is_injective() {
        let structure = HelicalCR::from_frequencies(&[1.0], DVector::from_vec(vec![0.5]));
        let c = Q1Curve::new(structure, DVector::from_vec(vec![1.0, 0.0]), DVector::zeros(2), DVector::zeros(1)).unwrap();
        assert_eq!(is_injective_q1(&c, &tol()).unwrap(), InjectivityVerdict::Injective);
    }

    #[test]
    fn q1_without_drift_closes() {
        let structure = HelicalCR::new(SkewMatrix::rotation_blocks(&[3.0, 1.0]), DVector::zeros(0), &tol()).unwrap();
        let c = Q1Curve::new(
            structure,
            DVector::from_vec(vec![1.0, 0.0, 0.0, 2.0]),
            DVector::from_vec(vec![0.3, 0.0, 0.0, -1.0]),
            DVector::zeros(0),
        )
        .unwrap();
        let v = is_injective_q1(&c, &tol()).unwrap();
        assert!((v.witness().unwrap() - TAU).abs() < 1e-12);
    }

    #[test]
    fn constant_curve_is_rejected() {
        let c = Q0Curve::new(HelicalCR::from_frequencies(&[1.0], DVector::zeros(0)), DVector::zeros(2)).unwrap();
        assert!(is_injective_curve(&c, &tol()).is_err());
    }
}
