//! Independent check on the closed form: classical RK4 on Hamilton's
//! equations with step-doubling error control.

use nalgebra::{DMatrix, DVector};

use super::{GeodesicIVP, PhaseState};
use crate::carnot::StratifiedAlgebra2;
use crate::{Error, Result};

/// Allowed local error per unit of `s` (max norm, relative to the state).
const LOCAL_TOL: f64 = 1e-12;
const MIN_STEP: f64 = 1e-12;
/// Differences below this many ulps of the state are rounding noise.
const ROUNDOFF_FLOOR: f64 = 64.0 * f64::EPSILON;

struct System<'a> {
    g: &'a StratifiedAlgebra2,
    a_tau: DMatrix<f64>,
    m: usize,
    p: usize,
}

impl System<'_> {
    /// Derivative of the stacked state `(x, t, ξ, τ)`; `τ` never moves.
    fn rhs(&self, y: &DVector<f64>) -> DVector<f64> {
        let (m, p) = (self.m, self.p);
        let x = y.rows(0, m).into_owned();
        let xi = y.rows(m + p, m);
        let zeta = xi + &self.a_tau * &x * 0.5;
        let mut out = DVector::zeros(y.len());
        out.rows_mut(m, p).copy_from(&self.g.vertical_velocity(&x, &zeta));
        out.rows_mut(m + p, m).copy_from(&(&self.a_tau * &zeta * 0.5));
        out.rows_mut(0, m).copy_from(&zeta);
        out
    }

    fn rk4(&self, y: &DVector<f64>, h: f64) -> DVector<f64> {
        let k1 = self.rhs(y);
        let k2 = self.rhs(&(y + &k1 * (h / 2.0)));
        let k3 = self.rhs(&(y + &k2 * (h / 2.0)));
        let k4 = self.rhs(&(y + &k3 * h));
        y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
    }

    /// Integrates from `s0` to `s1` (either direction).
    fn integrate(&self, mut y: DVector<f64>, s0: f64, s1: f64, h_init: &mut f64) -> Result<DVector<f64>> {
        let dir = if s1 >= s0 { 1.0 } else { -1.0 };
        let mut s = s0;
        while (s1 - s) * dir > 0.0 {
            let mut h = h_init.min((s1 - s).abs());
            loop {
                if h < MIN_STEP * (1.0 + s.abs()) {
                    return Err(Error::StepSizeUnderflow { s });
                }
                let full = self.rk4(&y, dir * h);
                let half = self.rk4(&self.rk4(&y, dir * h / 2.0), dir * h / 2.0);
                let err = (&half - &full).amax() / 15.0;
                let allowed = (LOCAL_TOL * h).max(ROUNDOFF_FLOOR) * y.amax().max(1.0);
                if err <= allowed {
                    // Richardson extrapolation; τ entries of `half - full` are exactly zero
                    y = &half + (&half - &full) / 15.0;
                    s = if (s1 - (s + dir * h)) * dir <= 0.0 { s1 } else { s + dir * h };
                    let grow = if err == 0.0 { 4.0 } else { (0.9 * (allowed / err).powf(0.25)).clamp(0.2, 4.0) };
                    *h_init = (h * grow).max(h);
                    break;
                }
                h *= (0.9 * (allowed / err).powf(0.25)).clamp(0.1, 0.5);
            }
        }
        Ok(y)
    }
}

/// Phase-space states at each point of the sorted grid `s_grid`, starting
/// from the IVP at `s = 0`.
pub fn ode_oracle(g: &StratifiedAlgebra2, ivp: &GeodesicIVP, s_grid: &[f64]) -> Result<Vec<PhaseState>> {
    ivp.check(g)?;
    if s_grid.windows(2).any(|w| w[1] < w[0]) || s_grid.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidInput("oracle grid must be finite and sorted".into()));
    }
    let sys = System { g, a_tau: g.a_tau(&ivp.tau0), m: g.m(), p: g.p() };
    let start = ivp.start().stacked();
    let mut out = vec![None; s_grid.len()];
    // forward from 0 over the nonnegative points, backward over the negative ones
    let split = s_grid.partition_point(|&s| s < 0.0);
    let (mut y, mut s, mut h) = (start.clone(), 0.0, 0.01);
    for (i, &target) in s_grid.iter().enumerate().skip(split) {
        y = sys.integrate(y, s, target, &mut h)?;
        s = target;
        out[i] = Some(PhaseState::from_stacked(&y, sys.m, sys.p));
    }
    let (mut y, mut s, mut h) = (start, 0.0, 0.01);
    for i in (0..split).rev() {
        y = sys.integrate(y, s, s_grid[i], &mut h)?;
        s = s_grid[i];
        out[i] = Some(PhaseState::from_stacked(&y, sys.m, sys.p));
    }
    Ok(out.into_iter().map(|st| st.expect("every grid point visited")).collect())
}
