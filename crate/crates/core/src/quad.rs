//! Adaptive Simpson quadrature for smooth integrands.

use nalgebra::DVector;

const MAX_DEPTH: u32 = 48;
/// Initial panels; keeps periodic integrands from fooling the first
/// three-point estimate.
const PANELS: usize = 16;

/// `∫_a^b f` to absolute accuracy about `abs_tol`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> f64 {
    let g = |s: f64| DVector::from_element(1, f(s));
    adaptive_simpson_vec(g, a, b, abs_tol)[0]
}

/// Componentwise `∫_a^b f` for vector-valued `f`, with the error measured
/// in the max norm.
pub fn adaptive_simpson_vec(f: impl Fn(f64) -> DVector<f64>, a: f64, b: f64, abs_tol: f64) -> DVector<f64> {
    if a == b {
        return f(a) * 0.0;
    }
    let width = (b - a) / PANELS as f64;
    let panel_tol = abs_tol / PANELS as f64;
    let mut total: Option<DVector<f64>> = None;
    let mut left = a;
    let mut f_left = f(a);
    for k in 1..=PANELS {
        let right = if k == PANELS { b } else { a + width * k as f64 };
        let mid = 0.5 * (left + right);
        let f_mid = f(mid);
        let f_right = f(right);
        let whole = simpson(&f_left, &f_mid, &f_right, right - left);
        let part = refine(&f, left, right, &f_left, &f_mid, &f_right, whole, panel_tol, MAX_DEPTH);
        total = Some(match total {
            Some(t) => t + part,
            None => part,
        });
        left = right;
        f_left = f_right;
    }
    total.expect("at least one panel")
}

fn simpson(fa: &DVector<f64>, fm: &DVector<f64>, fb: &DVector<f64>, h: f64) -> DVector<f64> {
    (fa + fm * 4.0 + fb) * (h / 6.0)
}

#[allow(clippy::too_many_arguments)]
fn refine(
    f: &impl Fn(f64) -> DVector<f64>,
    a: f64,
    b: f64,
    fa: &DVector<f64>,
    fm: &DVector<f64>,
    fb: &DVector<f64>,
    whole: DVector<f64>,
    tol: f64,
    depth: u32,
) -> DVector<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(fa, &flm, fm, m - a);
    let right = simpson(fm, &frm, fb, b - m);
    let delta = &left + &right - &whole;
    if depth == 0 || delta.amax() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, &flm, fm, left, tol / 2.0, depth - 1) + refine(f, m, b, fm, &frm, fb, right, tol / 2.0, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn polynomials_and_trig() {
        assert!((adaptive_simpson(|x| x * x, 0.0, 3.0, 1e-12) - 9.0).abs() < 1e-12);
        assert!(adaptive_simpson(|x| (5.0 * x).sin(), 0.0, TAU, 1e-12).abs() < 1e-12);
        assert!((adaptive_simpson(|x| x.sin().powi(2), 0.0, PI, 1e-12) - PI / 2.0).abs() < 1e-11);
        assert!((adaptive_simpson(|x| x.exp(), 1.0, 0.0, 1e-12) + (1f64.exp() - 1.0)).abs() < 1e-11);
    }

    #[test]
    fn vector_valued() {
        let v = adaptive_simpson_vec(|x| DVector::from_vec(vec![x.cos(), 1.0]), 0.0, 1.0, 1e-12);
        assert!((v[0] - 1f64.sin()).abs() < 1e-12 && (v[1] - 1.0).abs() < 1e-14);
    }
}
