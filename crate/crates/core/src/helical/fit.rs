//! Recovering a Q0 curve from samples.
//!
//! Frequencies come from a matrix-pencil estimate on uniformly spaced data
//! (all components share the same exponential modes, so their Hankel
//! matrices are stacked). Once the frequencies are known the curve is
//! linear in its coefficients and a least-squares solve finishes the fit; a
//! few Gauss-Newton steps on the frequencies polish the result.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SVD};

use super::decompose::{canonical_from_planes, CanonicalDecomposition, RawPlane};
use super::Q0Curve;
use crate::{Error, Result, Tolerances};

/// Output of [`fit_from_samples`].
#[derive(Debug, Clone)]
pub struct FitReport {
    pub curve: Q0Curve,
    pub decomposition: CanonicalDecomposition,
    /// RMS of `|γ(s_i) - point_i|` over the input samples.
    pub rms: f64,
}

const MAX_PENCIL: usize = 60;

fn lagrange_resample(s: &[f64], y: &DMatrix<f64>, grid: &[f64]) -> DMatrix<f64> {
    let n = s.len();
    let order = 8.min(n);
    let mut out = DMatrix::zeros(grid.len(), y.ncols());
    for (g, &t) in grid.iter().enumerate() {
        let pos = s.partition_point(|&x| x < t);
        let start = pos.saturating_sub(order / 2).min(n - order);
        let nodes = start..start + order;
        for i in nodes.clone() {
            let mut weight = 1.0;
            for k in nodes.clone() {
                if k != i {
                    weight *= (t - s[k]) / (s[i] - s[k]);
                }
            }
            let row = y.row(i) * weight;
            let mut target = out.row_mut(g);
            target += row;
        }
    }
    out
}

/// Matrix-pencil estimate of the distinct positive frequencies present in
/// uniformly sampled data with step `h`.
fn pencil_frequencies(y: &DMatrix<f64>, h: f64, max_freqs: usize) -> Result<Vec<f64>> {
    let (n, d) = y.shape();
    let pencil = (n / 2).min(MAX_PENCIL.max(2 * max_freqs + 2)).min(n - 1);
    let rows = n - pencil;
    let mut hankel = DMatrix::zeros(rows * d, pencil + 1);
    for c in 0..d {
        for k in 0..rows {
            for l in 0..=pencil {
                hankel[(c * rows + k, l)] = y[(k + l, c)];
            }
        }
    }
    let svd = SVD::try_new(hankel, false, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::EigenFailure("pencil SVD did not converge".into()))?;
    let v_t = svd.v_t.expect("requested V");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sigma_max = svd.singular_values[order[0]];
    if sigma_max == 0.0 {
        return Ok(vec![]);
    }
    let rank = order
        .iter()
        .filter(|&&i| svd.singular_values[i] > 1e-9 * sigma_max)
        .count()
        .min(2 * max_freqs + 1);
    let basis = DMatrix::from_columns(
        &order[..rank].iter().map(|&i| v_t.row(i).transpose()).collect::<Vec<_>>(),
    );
    // Eigenvalues of the shift-by-one pencil locate the fastest mode; slow
    // modes cluster near 1 there, so they are re-estimated with the largest
    // shift that keeps every angle below π.
    let first = shifted_pencil_angles(&basis, 1)?;
    let theta_max = first.iter().fold(0.0_f64, |a, &t| a.max(t));
    let max_shift = (pencil + 1).saturating_sub(rank + 1).max(1);
    let shift = if theta_max > 0.0 { ((0.8 * PI / theta_max).floor() as usize).clamp(1, max_shift) } else { 1 };
    let angles = if shift > 1 { shifted_pencil_angles(&basis, shift)? } else { first };

    let mut freqs: Vec<f64> = angles
        .iter()
        .filter(|&&theta| theta > 1e-7)
        .map(|&theta| theta / (h * shift as f64))
        .collect();
    freqs.sort_by(|a, b| b.total_cmp(a));
    let mut merged: Vec<(f64, usize)> = Vec::new();
    for f in freqs {
        match merged.last_mut() {
            Some((acc, k)) if (*acc / *k as f64 - f).abs() <= 1e-6 * f.max(1.0) => {
                *acc += f;
                *k += 1;
            }
            _ => merged.push((f, 1)),
        }
    }
    Ok(merged.into_iter().map(|(acc, k)| acc / k as f64).collect())
}

/// `|arg|` of the eigenvalues of `pinv(B[..-k]) B[k..]` for a basis `B` of
/// the signal row space; these are the sample-step rotations times `k`.
fn shifted_pencil_angles(basis: &DMatrix<f64>, shift: usize) -> Result<Vec<f64>> {
    let len = basis.nrows() - shift;
    let upper = basis.rows(0, len).into_owned();
    let lower = basis.rows(shift, len).into_owned();
    let pinv = upper
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::EigenFailure(format!("pencil pseudo-inverse: {e}")))?;
    Ok((pinv * lower).complex_eigenvalues().iter().map(|r| r.arg().abs()).collect())
}

fn design(s: &[f64], freqs: &[f64]) -> DMatrix<f64> {
    let k = freqs.len();
    DMatrix::from_fn(s.len(), 2 * k + 1, |i, col| {
        if col == 2 * k {
            1.0
        } else {
            let (sn, cs) = (freqs[col / 2] * s[i]).sin_cos();
            if col % 2 == 0 {
                cs
            } else {
                -sn
            }
        }
    })
}

/// Least-squares coefficients for fixed frequencies and the residual matrix.
fn solve_linear(s: &[f64], y: &DMatrix<f64>, freqs: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let phi = design(s, freqs);
    let svd = SVD::try_new(phi.clone(), true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::EigenFailure("least-squares SVD did not converge".into()))?;
    let coef = svd
        .solve(y, 1e-13 * svd.singular_values.max())
        .map_err(|e| Error::EigenFailure(e.to_string()))?;
    let resid = y - phi * &coef;
    Ok((coef, resid))
}

fn rms(resid: &DMatrix<f64>) -> f64 {
    (resid.norm_squared() / resid.nrows() as f64).sqrt()
}

/// Gauss-Newton on the frequencies with the linear coefficients projected
/// out.
fn refine(s: &[f64], y: &DMatrix<f64>, freqs: &mut [f64]) -> Result<()> {
    let (_, mut resid) = solve_linear(s, y, freqs)?;
    let mut current = rms(&resid);
    for _ in 0..30 {
        if current == 0.0 {
            break;
        }
        let r0 = DVector::from_column_slice(resid.as_slice());
        let mut jac = DMatrix::zeros(r0.len(), freqs.len());
        for j in 0..freqs.len() {
            let step = 1e-6 * freqs[j].max(1.0);
            let mut plus = freqs.to_vec();
            let mut minus = freqs.to_vec();
            plus[j] += step;
            minus[j] -= step;
            let rp = solve_linear(s, y, &plus)?.1;
            let rm = solve_linear(s, y, &minus)?.1;
            let col = (rp - rm) / (2.0 * step);
            jac.set_column(j, &DVector::from_column_slice(col.as_slice()));
        }
        let svd = SVD::try_new(jac, true, true, f64::EPSILON, 0)
            .ok_or_else(|| Error::EigenFailure("Gauss-Newton SVD did not converge".into()))?;
        let delta = svd
            .solve(&(-&r0), 1e-12 * svd.singular_values.max())
            .map_err(|e| Error::EigenFailure(e.to_string()))?;
        let mut scale = 1.0;
        let mut improved = false;
        for _ in 0..12 {
            let trial: Vec<f64> = freqs.iter().zip(delta.iter()).map(|(f, d)| f + scale * d).collect();
            let (_, r) = solve_linear(s, y, &trial)?;
            let value = rms(&r);
            if value < current {
                freqs.copy_from_slice(&trial);
                resid = r;
                improved = current - value > 1e-15 * current.max(1e-300);
                current = value;
                break;
            }
            scale *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Ok(())
}

/// Fits a Q0 curve with at most `max_freqs` distinct nonzero frequencies to
/// `(s_i, point_i)` samples.
///
/// Needs at least `4·max_freqs + 2` samples at distinct parameters, and the
/// sampling must resolve the fastest frequency (`η·Δs < π`).
pub fn fit_from_samples(
    samples: &[(f64, DVector<f64>)],
    max_freqs: usize,
    tol: &Tolerances,
) -> Result<FitReport> {
    let n = samples.len();
    if n < 4 * max_freqs + 2 || n < 2 {
        return Err(Error::InvalidInput(format!(
            "{n} samples cannot resolve {max_freqs} frequencies (need {})",
            (4 * max_freqs + 2).max(2)
        )));
    }
    let d = samples[0].1.len();
    if samples.iter().any(|(_, p)| p.len() != d) {
        return Err(Error::DimensionMismatch("samples have differing dimensions".into()));
    }
    let mut sorted: Vec<&(f64, DVector<f64>)> = samples.iter().collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let s: Vec<f64> = sorted.iter().map(|p| p.0).collect();
    if s.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("sample parameters must be distinct".into()));
    }
    let y = DMatrix::from_fn(n, d, |i, c| sorted[i].1[c]);
    let amp_floor = tol.amp_tol * y.row_iter().map(|r| r.norm()).fold(0.0, f64::max);

    let (s0, s1) = (s[0], s[n - 1]);
    let step = (s1 - s0) / (n - 1) as f64;
    let grid: Vec<f64> = (0..n).map(|i| s0 + step * i as f64).collect();
    let uniform = s.iter().zip(&grid).all(|(a, b)| (a - b).abs() <= 1e-9 * (s1 - s0));
    let uniform_y = if uniform { y.clone() } else { lagrange_resample(&s, &y, &grid) };

    let mut freqs = pencil_frequencies(&uniform_y, step, max_freqs)?;
    if freqs.len() > max_freqs {
        return Err(Error::FitFailed {
            residual: f64::NAN,
            reason: format!("found {} frequencies, more than the allowed {max_freqs}", freqs.len()),
        });
    }
    if !freqs.is_empty() {
        let (_, resid) = solve_linear(&s, &y, &freqs)?;
        if !uniform || rms(&resid) > 1e-2 * tol.fit_tol {
            refine(&s, &y, &mut freqs)?;
        }
    }
    let (coef, _) = solve_linear(&s, &y, &freqs)?;
    let k = freqs.len();
    let planes: Vec<RawPlane> = freqs
        .iter()
        .enumerate()
        .map(|(j, &eta)| RawPlane {
            eta,
            x: coef.row(2 * j).transpose(),
            y: coef.row(2 * j + 1).transpose(),
        })
        .filter(|p| p.x.norm().max(p.y.norm()) > amp_floor && p.x.norm() > 0.0)
        .collect();
    let w_amb = coef.row(2 * k).transpose();
    let (decomposition, curve) = canonical_from_planes(planes, w_amb, amp_floor, false);

    let total: f64 = sorted.iter().map(|(t, p)| (curve.eval(*t) - p).norm_squared()).sum();
    let rms = (total / n as f64).sqrt();
    if !(rms <= tol.fit_tol) {
        return Err(Error::FitFailed {
            residual: rms,
            reason: "samples are not reproduced by a Q0 curve".into(),
        });
    }
    Ok(FitReport { curve, decomposition, rms })
}
