//! Bodies of the verification suites. Each one draws its instances from the
//! supplied RNG and checks library output against an independent oracle
//! (reference matrices, closed-form formulas, `nalgebra`'s dense matrix
//! exponential, the RK4 integrator, or finite differences).

use std::f64::consts::{PI, SQRT_2, TAU};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::random::{
    gaussian_matrix, gaussian_skew, gaussian_vector, random_frequencies, random_helical, random_orthogonal,
    random_q0_curve, random_skew_with_frequencies,
};
use super::Recorder;
use crate::carnot::{
    algebra_to_helical, algebra_to_tuple, assemble_from_tuple, helical_to_algebra, CarnotPoint, StratifiedAlgebra2,
};
use crate::geodesic::{
    geodesic_to_marked_helical, hamiltonian, heisenberg_geodesic, heisenberg_ivp, heisenberg_to_classical,
    marked_helical_to_geodesic, ode_oracle, GeodesicIVP, NormalGeodesic,
};
use crate::helical::{
    decompose, equivalent, fit_from_samples, is_injective_curve, HelicalCR, InjectivityVerdict, MarkedHelicalCR,
    Q0Curve, Q1Curve,
};
use crate::homcurves::{
    affine_moment_sigma_min, build_l_m, char_poly_l_m, gamma_m_eval, gamma_m_hyperplane_check, juxtapose,
    postcompose_orthogonal, spectrum_l_m, tensor_curve, tensor_eval, GammaM,
};
use crate::skewlin::{
    char_poly, max_abs, orthogonality_defect, restrict_to_coimage, spectral_form, validate_skew, SkewMatrix,
};
use crate::Tolerances;

fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn sup_dist(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax()
}

fn std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Standard deviation of `|Dᵏγ|` over `samples`, relative to its mean when
/// that exceeds 1.
fn norm_spread(c: &Q0Curve, k: usize, samples: &[f64]) -> f64 {
    let norms: Vec<f64> = samples.iter().map(|&s| c.derivative(k, s).norm()).collect();
    let mean = norms.iter().sum::<f64>() / norms.len() as f64;
    std_dev(&norms) / mean.max(1.0)
}

/// Drops repeated entries from a descending frequency list.
fn distinct(freqs: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for &f in freqs {
        if out.last().is_none_or(|&l: &f64| (l - f).abs() > 1e-9) {
            out.push(f);
        }
    }
    out
}

fn rms(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    let total: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_squared()).sum();
    (total / a.len() as f64).sqrt()
}

pub(super) fn reference_matrices(rec: &mut Recorder, _rng: &mut ChaCha8Rng, _tol: &Tolerances) {
    let r2 = SQRT_2;
    let r3 = 3.0_f64.sqrt();
    let reference: [(usize, Vec<f64>); 3] = [
        (1, vec![0.0, -1.0, 1.0, 0.0]),
        (2, vec![0.0, -r2, 0.0, r2, 0.0, -r2, 0.0, r2, 0.0]),
        (
            3,
            vec![
                0.0, -r3, 0.0, 0.0, //
                r3, 0.0, -2.0, 0.0, //
                0.0, 2.0, 0.0, -r3, //
                0.0, 0.0, r3, 0.0,
            ],
        ),
    ];
    for (m, rows) in reference {
        rec.case();
        let expected = DMatrix::from_row_slice(m + 1, m + 1, &rows);
        rec.check("entry_error", max_abs(&(build_l_m(m).matrix() - expected)), 1e-12);
    }
    // the closed form γ_2 = (cos²s, √2 cos s sin s, sin²s)
    for s in grid(0.0, TAU, 17) {
        let (sn, cs) = s.sin_cos();
        let expected = DVector::from_vec(vec![cs * cs, r2 * cs * sn, sn * sn]);
        rec.check("gamma_2_formula", sup_dist(&gamma_m_eval(2, s), &expected), 1e-15);
    }
}

pub(super) fn spectra(rec: &mut Recorder, _rng: &mut ChaCha8Rng, tol: &Tolerances) {
    for m in 1..=12 {
        rec.case();
        let expected: Vec<f64> = (0..=m).map(|j| m as f64 - 2.0 * j as f64).collect();
        if let Some(spec) = rec.ok(&format!("spectrum of L_{m}"), spectrum_l_m(m, tol)) {
            let dev = if spec.len() == expected.len() {
                spec.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            } else {
                f64::INFINITY
            };
            rec.check("eigenvalue_error", dev, 1e-8);
        }
        let closed = char_poly_l_m(m);
        if let Some(p) = rec.ok(&format!("char poly of L_{m}"), char_poly(&build_l_m(m), tol)) {
            rec.check("char_poly_coefficients", p.relative_error(&closed), 1e-6);
        }
        // independent oracle: LU determinant of L_m - xI at sample points
        let l = build_l_m(m);
        for k in 0..=m + 1 {
            let x = 0.37 + 0.5 * k as f64;
            let det = (l.matrix() - DMatrix::identity(m + 1, m + 1) * x).determinant();
            let want = closed.eval(x);
            rec.check("char_poly_determinant", (det - want).abs() / want.abs().max(1.0), 1e-9);
        }
    }
}

pub(super) fn gamma_m(rec: &mut Recorder, _rng: &mut ChaCha8Rng, tol: &Tolerances) {
    let samples = grid(0.0, TAU, 41);
    for m in 0..=12 {
        rec.case();
        let g = GammaM::new(m);
        for &s in &samples {
            rec.check("unit_norm", (g.eval(s).norm() - 1.0).abs(), 1e-12);
        }
        rec.check("ode_residual", g.ode_residual(&samples, 1e-5), 1e-6 * (m * m).max(1) as f64);
        if let Some(curve) = rec.ok(&format!("gamma_{m} as Q0 curve"), g.curve(tol)) {
            for &s in &samples {
                rec.check("exp_generator", sup_dist(&curve.eval(s), &g.eval(s)), 1e-12);
            }
            let expected: Vec<f64> = (0..=m / 2).map(|j| (m - 2 * j) as f64).filter(|&f| f > 0.0).collect();
            let got = curve.structure().spectral().frequencies();
            let dev = if got.len() == expected.len() {
                got.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            } else {
                f64::INFINITY
            };
            rec.check("curve_frequencies", dev, 1e-8);
        }
    }
}

pub(super) fn heisenberg(rec: &mut Recorder, rng: &mut ChaCha8Rng, tol: &Tolerances) {
    let g = StratifiedAlgebra2::heisenberg(1);
    let samples = grid(0.0, TAU, 65);
    let compare = |rec: &mut Recorder, a: [f64; 2], b: [f64; 2], c: f64, metric: &str| {
        rec.case();
        let Some(geo) = rec.ok("heisenberg geodesic", NormalGeodesic::new(&g, &heisenberg_ivp(a, b, c), tol)) else {
            return;
        };
        for &s in &samples {
            let ours = heisenberg_to_classical(&geo.point(s));
            let want = heisenberg_geodesic(a, b, c, s);
            rec.check(metric, sup_dist(&ours.stacked(), &want.stacked()), 1e-9);
        }
    };
    for _ in 0..20 {
        let v = gaussian_vector(rng, 5);
        compare(rec, [v[0], v[1]], [v[2], v[3]], v[4], "random_family");
    }
    // origin family (a - a e^{-is}, |a|²(s - sin s))
    for _ in 0..5 {
        let v = gaussian_vector(rng, 2);
        let a = [v[0], v[1]];
        rec.case();
        let ivp = heisenberg_ivp(a, [-a[0], -a[1]], 0.0);
        let Some(geo) = rec.ok("origin geodesic", NormalGeodesic::new(&g, &ivp, tol)) else { continue };
        let a2 = a[0] * a[0] + a[1] * a[1];
        for &s in &samples {
            let (sn, cs) = s.sin_cos();
            // a e^{-is}
            let ae = [a[0] * cs + a[1] * sn, a[1] * cs - a[0] * sn];
            let want = CarnotPoint::new(
                DVector::from_vec(vec![a[0] - ae[0], a[1] - ae[1]]),
                DVector::from_element(1, a2 * (s - sn)),
            );
            let ours = heisenberg_to_classical(&geo.point(s));
            rec.check("origin_family", sup_dist(&ours.stacked(), &want.stacked()), 1e-9);
        }
    }
}

fn oracle_case(rec: &mut Recorder, g: &StratifiedAlgebra2, ivp: &GeodesicIVP, tol: &Tolerances) {
    rec.case();
    let samples = grid(0.0, TAU, 33);
    let Some(geo) = rec.ok("closed form", NormalGeodesic::new(g, ivp, tol)) else { return };
    let Some(states) = rec.ok("oracle", ode_oracle(g, ivp, &samples)) else { return };
    let h0 = hamiltonian(g, &ivp.start());
    let scale = h0.max(1.0);
    for (&s, state) in samples.iter().zip(&states) {
        let closed = geo.state(s);
        let size = state.stacked().amax().max(1.0);
        rec.check("closed_vs_oracle", sup_dist(&closed.stacked(), &state.stacked()) / size, 1e-6);
        rec.check("hamiltonian_drift_oracle", (hamiltonian(g, state) - h0).abs() / scale, 1e-8);
        rec.check("hamiltonian_drift_closed", (hamiltonian(g, &closed) - h0).abs() / scale, 1e-8);
        rec.require("tau_constant", state.tau == ivp.tau0 && closed.tau == ivp.tau0, || format!("s = {s}"));
    }
}

pub(super) fn geodesic_oracle(rec: &mut Recorder, rng: &mut ChaCha8Rng, tol: &Tolerances) {
    for i in 0..50 {
        let n = 1 + i % 4;
        let kernel = usize::from(i % 5 == 4);
        let freqs = random_frequencies(rng, n, 0.2, 2.0, 0.1);
        let c = random_skew_with_frequencies(rng, &freqs, kernel).into_matrix();
        let Some(g) = rec.ok("contact algebra", StratifiedAlgebra2::new(vec![c], tol)) else { continue };
        let m = g.m();
        let tau = DVector::from_element(1, rng.random_range(-1.5..1.5));
        let ivp = GeodesicIVP::new(gaussian_vector(rng, m), gaussian_vector(rng, 1), gaussian_vector(rng, m), tau);
        oracle_case(rec, &g, &ivp, tol);
    }
    let g = StratifiedAlgebra2::free_nilpotent(3);
    for _ in 0..10 {
        let ivp = GeodesicIVP::new(
            gaussian_vector(rng, 3),
            gaussian_vector(rng, 3),
            gaussian_vector(rng, 3),
            gaussian_vector(rng, 3),
        );
        oracle_case(rec, &g, &ivp, tol);
    }
}

pub(super) fn q0_invariants(rec: &mut Recorder, rng: &mut ChaCha8Rng, tol: &Tolerances) {
    let samples: Vec<f64> = (0..24).map(|_| rng.random_range(-20.0..20.0)).collect();
    for i in 0..100 {
        let n = 1 + i % 4;
        let p = i % 3;
        let Some(c) = rec.ok("random Q0 curve", random_q0_curve(rng, n, p, tol)) else { continue };
        rec.case();
        let gen = c.ambient_generator();
        for &s in samples.iter().take(4) {
            let mut power = c.eval(s);
            for k in 1..=6 {
                power = gen.apply(&power);
                let d = c.derivative(k, s);
                rec.check("derivative_vs_generator", sup_dist(&d, &power) / power.amax().max(1.0), 1e-9);
            }
        }
        for k in 0..=6 {
            rec.check("derivative_norm_spread", norm_spread(&c, k, &samples), 1e-9);
        }
        for k in 0..=4 {
            for l in k..=4 {
                let e: Vec<f64> =
                    samples.iter().map(|&s| c.derivative(k, s).dot(&c.derivative(l, s))).collect();
                let scale = samples
                    .iter()
                    .map(|&s| c.derivative(k, s).norm() * c.derivative(l, s).norm())
                    .fold(1.0, f64::max);
                if (k + l) % 2 == 1 {
                    let worst = e.iter().map(|x| x.abs()).fold(0.0, f64::max);
                    rec.check("odd_gram_zero", worst / scale, 1e-12);
                } else {
                    rec.check("even_gram_constant", std_dev(&e) / scale, 1e-9);
                    rec.check("gram_formula", (e[0] - c.gram(k, l)).abs() / scale, 1e-9);
                }
            }
        }
    }
}

/// `(A, u0, distinct frequencies carried by u0)` for decomposition case `i`.
fn decomposition_instance(rng: &mut ChaCha8Rng, i: usize) -> (SkewMatrix, DVector<f64>, Vec<f64>) {
    let (freqs, kernel) = match i {
        // repeated frequency
        0 => {
            let f = random_frequencies(rng, 2, 0.4, 2.2, 0.3);
            (vec![f[0], f[0], f[1]], 0)
        }
        // singular generator
        1 => (random_frequencies(rng, 2, 0.3, 2.2, 0.3), 2),
        _ => (random_frequencies(rng, 1 + i % 3, 0.3, 2.2, 0.25), i % 2),
    };
    let a = random_skew_with_frequencies(rng, &freqs, kernel);
    let u0 = gaussian_vector(rng, a.dim());
    (a, u0, distinct(&freqs))
}

pub(super) fn decomposition(rec: &mut Recorder, rng: &mut ChaCha8Rng, tol: &Tolerances) {
    let eval_grid = grid(-3.0, 9.0, 40);
    let fit_grid = grid(0.0, 4.0 * PI, 120);
    for i in 0..50 {
        rec.case();
        let (a, u0, freqs) = decomposition_instance(rng, i);
        let oracle = |s: f64| (a.matrix() * s).exp() * &u0;
        let Some((dec, curve)) = rec.ok("decompose", decompose(&a, &u0, tol)) else { continue };
        let freq_err = |got: &[f64]| {
            if got.len() != freqs.len() {
                return f64::INFINITY;
            }
            got.iter().zip(&freqs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
        };
        rec.check("decompose_frequencies", freq_err(&dec.frequencies), 1e-6);
        let want: Vec<DVector<f64>> = eval_grid.iter().map(|&s| oracle(s)).collect();
        let got: Vec<DVector<f64>> = eval_grid.iter().map(|&s| curve.eval(s)).collect();
        rec.check("decompose_rms", rms(&got, &want), 1e-9);

        let samples: Vec<(f64, DVector<f64>)> = fit_grid.iter().map(|&s| (s, oracle(s))).collect();
        let Some(fit) = rec.ok("fit_from_samples", fit_from_samples(&samples, freqs.len(), tol)) else { continue };
        rec.check("fit_frequencies", freq_err(&fit.decomposition.frequencies), 1e-6);
        let want: Vec<DVector<f64>> = samples.iter().map(|(_, u)| u.clone()).collect();
        let got: Vec<DVector<f64>> = fit_grid.iter().map(|&s| fit.curve.eval(s)).collect();
        rec.check("fit_rms", rms(&got, &want), 1e-9);
    }
}

pub(super) fn correspondence(rec: &mut Recorder, rng: &mut ChaCha8Rng, tol: &Tolerances) {
    let samples = grid(-2.0, 6.0, 17);
    // helical → algebra → helical
    for i in 0..15 {
        rec.case();
        let Some(mut h) = rec.ok("random helical", random_helical(rng, 1 + i % 3, 1, tol)) else { continue };
        if h.w()[0] == 0.0 {
            h = h.with_w(DVector::from_element(1, 1.0));
        }
        let Some((g, _)) = rec.ok("helical_to_algebra", helical_to_algebra(&h, tol)) else { continue };
        let Some(back) = rec.ok("algebra_to_helical", algebra_to_helical(&g, h.w(), tol)) else { continue };
        let lambda = equivalent(&h, &back);
        rec.require("helical_equivalent", lambda.is_some(), || "no scalar relates the generators".into());
        rec.check("helical_lambda", lambda.map_or(f64::INFINITY, |l| (l - 1.0).abs()), 1e-12);
        let (f1, f2) = (h.spectral().frequencies(), back.spectral().frequencies());
        let dev = f1.iter().zip(f2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        rec.check("helical_spectrum", if f1.len() == f2.len() { dev } else { f64::INFINITY }, 1e-8);
    }
    // marked → geodesic → marked, with w₀ parallel to w
    for i in 0..15 {
        rec.case();
        let Some(base) = rec.ok("random helical", random_helical(rng, 1 + i % 3, 1, tol)) else { continue };
        let h = base.a().dim();
        let mut u0 = gaussian_vector(rng, h + 1);
        u0[h] = base.w()[0] * rng.random_range(-2.0..2.0);
        let Some(mh) = rec.ok("marking", MarkedHelicalCR::new(base, gaussian_vector(rng, h), u0)) else { continue };
        let Some((g, ivp)) = rec.ok("marked_to_geodesic", marked_helical_to_geodesic(&mh, tol)) else { continue };
        let Some(back) = rec.ok("geodesic_to_marked", geodesic_to_marked_helical(&g, &ivp, mh.base().w(), tol))
        else {
            continue;
        };
        rec.check("marked_v", sup_dist(back.v(), mh.v()), 1e-12);
        rec.check("marked_u0", sup_dist(back.u0(), mh.u0()), 1e-12);
        let Some(geo) = rec.ok("closed form", NormalGeodesic::new(&g, &ivp, tol)) else { continue };
        let q1 = mh.q1_curve();
        for &s in &samples {
            rec.check("marked_projection", sup_dist(&geo.x(s), &q1.horizontal(s)), 1e-9);
        }
    }
    // tuple → algebra → tuple
    for i in 0..15 {
        rec.case();
        let p = 1 + i % 3;
        // m = 2n must allow p independent brackets: m(m-1)/2 ≥ p
        let n = (1 + (i / 3) % 3).max(if p > 1 { 2 } else { 1 });
        let verticals = gaussian_matrix(rng, p, p);
        let mut curves = Vec::with_capacity(p);
        for alpha in 0..p {
            let Some(mut base) = rec.ok("random helical", random_helical(rng, n, p, tol)) else { return };
            base = base.with_w(verticals.column(alpha).into_owned());
            let made = Q1Curve::new(base, gaussian_vector(rng, 2 * n), gaussian_vector(rng, 2 * n), gaussian_vector(rng, p));
            let Some(c) = rec.ok("tuple curve", made) else { return };
            curves.push(c);
        }
        let Some((g, ivps)) = rec.ok("assemble_from_tuple", assemble_from_tuple(&curves, tol)) else { continue };
        for (alpha, c) in curves.iter().enumerate() {
            rec.check("tuple_structure_input", max_abs(&(g.structure_matrix(alpha).matrix() - c.structure().a().matrix())), 1e-12);
        }
        let Some(again) = rec.ok("algebra_to_tuple", algebra_to_tuple(&g, &ivps, tol)) else { continue };
        let Some((g2, _)) = rec.ok("reassemble", assemble_from_tuple(&again, tol)) else { continue };
        for alpha in 0..p {
            let diff = g2.structure_matrix(alpha).matrix() - g.structure_matrix(alpha).matrix();
            rec.check("tuple_structure_matrices", max_abs(&diff), 1e-9);
        }
        for (alpha, ivp) in ivps.iter().enumerate() {
            let Some(geo) = rec.ok("closed form", NormalGeodesic::new(&g, ivp, tol)) else { continue };
            for &s in &samples {
                rec.check("tuple_projection", sup_dist(&geo.x(s), &curves[alpha].horizontal(s)), 1e-9);
                let projected = again[alpha].frame() * again[alpha].eval(s);
                rec.check("tuple_roundtrip_projection", sup_dist(&geo.x(s), &projected.rows(0, g.m()).into_owned()), 1e-9);
            }
        }
    }
}

fn framed(rng: &mut ChaCha8Rng, freqs: &[f64], tol: &Tolerances) -> crate::Result<Q0Curve> {
    let d = 2 * freqs.len();
    let structure = HelicalCR::from_frequencies(freqs, DVector::zeros(0));
    Q0Curve::with_frame(structure, gaussian_vector(rng, d), random_orthogonal(rng, d), tol)
}

pub(super) fn injectivity(rec: &mut Recorder, rng: &mut ChaCha8Rng, tol: &Tolerances) {
    for freqs in [vec![2.0, 1.0], vec![6.0, 3.0, 2.0], vec![3.0, 1.0], vec![5.0, 4.0]] {
        rec.case();
        let Some(c) = rec.ok("curve", framed(rng, &freqs, tol)) else { continue };
        match rec.ok("is_injective", is_injective_curve(&c, tol)) {
            Some(InjectivityVerdict::NonInjective { period, .. }) => {
                let gap = sup_dist(&c.eval(period), &c.eval(0.0)).max(sup_dist(&c.eval(1.3 + period), &c.eval(1.3)));
                rec.check("witness_gap", gap, 1e-8);
                rec.require("witness_positive", period > 0.0, || format!("period {period}"));
            }
            Some(other) => rec.require("rational_detected", false, || format!("{freqs:?} gave {other:?}")),
            None => {}
        }
    }
    let golden = (1.0 + 5.0_f64.sqrt()) / 2.0;
    for ratio in [SQRT_2, PI, std::f64::consts::E, 5.0_f64.sqrt(), golden] {
        rec.case();
        let Some(c) = rec.ok("curve", framed(rng, &[ratio, 1.0], tol)) else { continue };
        if let Some(v) = rec.ok("is_injective", is_injective_curve(&c, tol)) {
            rec.require("irrational_detected", v == InjectivityVerdict::Injective, || format!("{ratio} gave {v:?}"));
        }
    }
    rec.case();
    let q = tol.rat_denom_bound.saturating_add(3) as f64;
    if let Some(c) = rec.ok("curve", framed(rng, &[1.0 + 1.0 / q, 1.0], tol)) {
        if let Some(v) = rec.ok("is_injective", is_injective_curve(&c, tol)) {
            let inconclusive = matches!(v, InjectivityVerdict::Inconclusive { .. });
            rec.require("near_bound_inconclusive", inconclusive, || format!("gave {v:?}"));
        }
    }
}

pub(super) fn hyperplanes(rec: &mut Recorder, _rng: &mut ChaCha8Rng, tol: &Tolerances) {
    let samples = grid(0.0, TAU, 200);
    rec.case();
    for &s in &samples {
        let u = gamma_m_eval(2, s);
        rec.check("gamma_2_plane", (u[0] + u[2] - 1.0).abs(), 1e-9);
    }
    for m in [2usize, 4, 6] {
        rec.case();
        let Some(plane) = rec.ok("hyperplane", gamma_m_hyperplane_check(m, tol)) else { continue };
        let Some(plane) = plane else {
            rec.require("even_has_plane", false, || format!("no hyperplane for m = {m}"));
            continue;
        };
        for &s in &samples {
            rec.check("hyperplane_residual", (plane.normal.dot(&gamma_m_eval(m, s)) - plane.offset).abs(), 1e-9);
        }
        if m == 2 {
            let expected = DVector::from_vec(vec![1.0, 0.0, 1.0]) / SQRT_2;
            rec.check("gamma_2_normal", sup_dist(&plane.normal, &expected), 1e-9);
        }
        let points: Vec<DVector<f64>> = samples.iter().map(|&s| gamma_m_eval(m, s)).collect();
        rec.check("even_moment_sigma_min", affine_moment_sigma_min(&points).abs(), 1e-12);
    }
    for m in [1usize, 3, 5] {
        rec.case();
        let points: Vec<DVector<f64>> = samples.iter().map(|&s| gamma_m_eval(m, s)).collect();
        let sigma = affine_moment_sigma_min(&points);
        rec.require("odd_moment_sigma_min", sigma > 1e-3, || format!("m = {m}: {sigma:e}"));
        if let Some(plane) = rec.ok("hyperplane", gamma_m_hyperplane_check(m, tol)) {
            rec.require("odd_has_no_plane", plane.is_none(), || format!("m = {m}"));
        }
    }
}

/// The curve scaled onto the unit sphere.
fn unit(c: &Q0Curve, tol: &Tolerances) -> crate::Result<Q0Curve> {
    let r = c.initial_point().norm();
    let structure = c.structure().with_w(c.structure().w() / r);
    Q0Curve::with_frame(structure, c.v() / r, c.frame().clone(), tol)
}

pub(super) fn closure(rec: &mut Recorder, rng: &mut ChaCha8Rng, tol: &Tolerances) {
    let samples: Vec<f64> = (0..16).map(|_| rng.random_range(-10.0..10.0)).collect();
    let constancy = |rec: &mut Recorder, metric: &str, c: &Q0Curve| {
        for k in 0..=4 {
            rec.check(metric, norm_spread(c, k, &samples), 1e-8);
        }
    };
    for i in 0..20 {
        rec.case();
        let (n1, p1) = (1 + i % 2, i % 2);
        let (n2, p2) = (1 + (i / 2) % 2, (i / 4) % 2);
        let Some(c1) = rec.ok("curve", random_q0_curve(rng, n1, p1, tol)) else { continue };
        let Some(c2) = rec.ok("curve", random_q0_curve(rng, n2, p2, tol)) else { continue };

        let t = random_orthogonal(rng, c1.dim());
        if let Some(pc) = rec.ok("postcompose", postcompose_orthogonal(&t, &c1, tol)) {
            constancy(rec, "postcompose_constancy", &pc);
            for &s in &samples {
                rec.check("postcompose_eval", sup_dist(&pc.eval(s), &(&t * c1.eval(s))), 1e-9);
            }
        }

        let theta = rng.random_range(0.0..TAU);
        if let Some(jx) = rec.ok("juxtapose", juxtapose(theta, &c1, &c2, tol)) {
            constancy(rec, "juxtapose_constancy", &jx);
            for &s in &samples {
                let (sn, cs) = theta.sin_cos();
                let want =
                    DVector::from_iterator(jx.dim(), c1.eval(s).iter().map(|x| cs * x).chain(c2.eval(s).iter().map(|x| sn * x)));
                rec.check("juxtapose_eval", sup_dist(&jx.eval(s), &want), 1e-9);
            }
        }

        if let Some(tc) = rec.ok("tensor", tensor_curve(&c1, &c2, tol)) {
            constancy(rec, "tensor_constancy", &tc);
            for &s in &samples {
                let want = tensor_eval(&c1, &c2, s);
                rec.check("tensor_eval", sup_dist(&tc.eval(s), &want) / want.amax().max(1.0), 1e-9);
            }
        }

        // first-derivative law for the tensor product of unit curves
        let (Some(f), Some(g)) = (rec.ok("unit", unit(&c1, tol)), rec.ok("unit", unit(&c2, tol))) else { continue };
        if let Some(fg) = rec.ok("tensor", tensor_curve(&f, &g, tol)) {
            for &s in &samples {
                let lhs = fg.derivative(1, s).norm_squared();
                let (df, dg) = (f.derivative(1, s), g.derivative(1, s));
                let rhs = df.norm_squared() * g.eval(s).norm_squared() + f.eval(s).norm_squared() * dg.norm_squared();
                rec.check("tensor_derivative_law", (lhs - rhs).abs() / rhs.max(1.0), 1e-9);
            }
        }
    }
}

pub(super) fn skewlin(rec: &mut Recorder, rng: &mut ChaCha8Rng, tol: &Tolerances) {
    for i in 0..40 {
        rec.case();
        let n = 1 + i % 4;
        let kernel = i % 3;
        let freqs = random_frequencies(rng, n, 0.2, 3.0, 0.1);
        let d = 2 * n + kernel;
        let q = random_orthogonal(rng, d);
        let mut blocks = DMatrix::zeros(d, d);
        for (j, &f) in freqs.iter().enumerate() {
            blocks[(2 * j + 1, 2 * j)] = f;
            blocks[(2 * j, 2 * j + 1)] = -f;
        }
        // conjugation in floating point leaves a rounding-level defect
        let Some(a) = rec.ok("validate_skew", validate_skew(&q * blocks * q.transpose(), tol)) else { continue };
        let Some(sf) = rec.ok("spectral_form", spectral_form(&a, tol)) else { continue };
        let dev = if sf.frequencies().len() == n {
            sf.frequencies().iter().zip(&freqs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        rec.check("frequency_error", dev, 1e-9);
        rec.require("kernel_dim", sf.kernel_dim() == kernel, || format!("{} vs {kernel}", sf.kernel_dim()));
        rec.check("basis_orthogonality", orthogonality_defect(sf.basis()), 1e-12);
        rec.check("reconstruction", max_abs(&(sf.reconstruct() - a.matrix())), 1e-12);
        for s in [0.7, -2.3] {
            let want = (a.matrix() * s).exp();
            rec.check("exp_vs_dense", max_abs(&(sf.exp(s) - want)), 1e-12);
        }
        if let Some(p) = rec.ok("char_poly", char_poly(&a, tol)) {
            for k in 0..=d {
                let x = -1.1 + 0.6 * k as f64;
                let det = (a.matrix() - DMatrix::identity(d, d) * x).determinant();
                rec.check("char_poly_determinant", (p.eval(x) - det).abs() / det.abs().max(1.0), 1e-9);
            }
        }
        if kernel > 0 {
            if let Some(co) = rec.ok("restrict_to_coimage", restrict_to_coimage(&a, tol)) {
                let e = &co.embed;
                rec.check("coimage_orthonormal", max_abs(&(e.tr_mul(e) - DMatrix::identity(2 * n, 2 * n))), 1e-12);
                rec.check("coimage_restriction", max_abs(&(e.transpose() * a.matrix() * e - co.matrix.matrix())), 1e-12);
                let projector = DMatrix::identity(d, d) - e * e.transpose();
                rec.check("coimage_kernel", max_abs(&(a.matrix() * projector)), 1e-12);
            }
        }
    }
    // Gaussian skew matrices: spectral form reproduces the matrix
    for d in 2..=7 {
        rec.case();
        let a = gaussian_skew(rng, d);
        if let Some(sf) = rec.ok("spectral_form", spectral_form(&a, tol)) {
            rec.check("gaussian_reconstruction", max_abs(&(sf.reconstruct() - a.matrix())) / max_abs(a.matrix()), 1e-12);
        }
    }
}

pub(super) fn carnot(rec: &mut Recorder, rng: &mut ChaCha8Rng, tol: &Tolerances) {
    let mut algebras = vec![
        StratifiedAlgebra2::heisenberg(1),
        StratifiedAlgebra2::heisenberg(2),
        StratifiedAlgebra2::free_nilpotent(3),
        StratifiedAlgebra2::free_nilpotent(4),
    ];
    for i in 0..8 {
        let m = 2 + i % 4;
        let p = 1 + i % (m * (m - 1) / 2);
        let cs = (0..p).map(|_| gaussian_skew(rng, m).into_matrix()).collect();
        if let Some(g) = rec.ok("random algebra", StratifiedAlgebra2::new(cs, tol)) {
            algebras.push(g);
        }
    }
    for g in &algebras {
        rec.case();
        let (m, p) = (g.m(), g.p());
        let point = |rng: &mut ChaCha8Rng| CarnotPoint::new(gaussian_vector(rng, m), gaussian_vector(rng, p));
        let (a, b, c) = (point(rng), point(rng), point(rng));
        let mul = |x: &CarnotPoint, y: &CarnotPoint| g.group_multiply(x, y).expect("dimensions match");
        let left = mul(&mul(&a, &b), &c);
        let right = mul(&a, &mul(&b, &c));
        rec.check("associativity", sup_dist(&left.stacked(), &right.stacked()), 1e-12);
        rec.check("inverse", sup_dist(&mul(&a, &g.inverse(&a)).stacked(), &g.identity().stacked()), 1e-12);
        rec.check("identity", sup_dist(&mul(&g.identity(), &a).stacked(), &a.stacked()), 0.0);
        rec.require("bracket_surjective", g.bracket_rank(tol) == p, || format!("rank {} < {p}", g.bracket_rank(tol)));

        let h = 1e-6;
        for i in 0..m {
            // left-invariant field = derivative of right translation by exp(s e_i)
            let mut e = DVector::zeros(m);
            e[i] = h;
            let step = CarnotPoint::new(e.clone(), DVector::zeros(p));
            let back = CarnotPoint::new(-e, DVector::zeros(p));
            let fd = (mul(&a, &step).stacked() - mul(&a, &back).stacked()) / (2.0 * h);
            let field = g.vector_field_at(i, &a).expect("valid point");
            rec.check("field_vs_group_law", sup_dist(&fd, &field), 1e-8);
            for j in i + 1..m {
                // [X_i, X_j] = DX_j·X_i - DX_i·X_j; the fields are affine in x
                let shift = |dir: &DVector<f64>, k: usize| {
                    let fwd = CarnotPoint::new(&a.x + dir.rows(0, m) * h, &a.t + dir.rows(m, p) * h);
                    let bwd = CarnotPoint::new(&a.x - dir.rows(0, m) * h, &a.t - dir.rows(m, p) * h);
                    (g.vector_field_at(k, &fwd).expect("valid") - g.vector_field_at(k, &bwd).expect("valid")) / (2.0 * h)
                };
                let xi = g.vector_field_at(i, &a).expect("valid");
                let xj = g.vector_field_at(j, &a).expect("valid");
                let commutator = shift(&xi, j) - shift(&xj, i);
                let mut ei = DVector::zeros(m);
                ei[i] = 1.0;
                let mut ej = DVector::zeros(m);
                ej[j] = 1.0;
                let bracket = g.bracket(&ei, &ej).expect("dimensions match");
                let mut want = DVector::zeros(m + p);
                want.rows_mut(m, p).copy_from(&bracket);
                rec.check("field_commutator", sup_dist(&commutator, &want), 1e-7);
            }
        }
    }
}
