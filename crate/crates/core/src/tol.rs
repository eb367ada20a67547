//! Numerical thresholds shared by every operation.

use serde::{Deserialize, Serialize};

/// Tolerance record read by all operations that make a numerical decision.
///
/// Every field can be overridden from the command line with
/// `--tol-<name>` (underscores become dashes).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative bound on `max |A + Aᵀ|` for a matrix to count as skew.
    pub skew_tol: f64,
    /// Bound on `max |QᵀQ - I|`.
    pub ortho_tol: f64,
    /// Bound on block-structure residuals (`QᵀAQ` against its block form).
    pub block_tol: f64,
    /// Coefficients below this (relative to the largest) are trimmed.
    pub poly_tol: f64,
    /// Rotation frequencies at or below this are treated as zero.
    pub freq_floor: f64,
    /// Minimal relative gap between two frequencies counted as distinct.
    pub freq_sep: f64,
    /// Plane amplitudes below `amp_tol * |u0|` are inactive.
    pub amp_tol: f64,
    /// Acceptable RMS residual of a fitted curve.
    pub fit_tol: f64,
    /// Tolerance when matching a frequency ratio to a rational number.
    pub rat_tol: f64,
    /// Largest denominator accepted for a rational frequency ratio.
    pub rat_denom_bound: u64,
    /// Smallest singular value of stacked structure matrices.
    pub dep_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            skew_tol: 1e-12,
            ortho_tol: 1e-9,
            block_tol: 1e-9,
            poly_tol: 1e-12,
            freq_floor: 1e-10,
            freq_sep: 1e-8,
            amp_tol: 1e-10,
            fit_tol: 1e-6,
            rat_tol: 1e-12,
            rat_denom_bound: 1_000_000,
            dep_tol: 1e-10,
        }
    }
}

impl Tolerances {
    /// Names accepted by [`Tolerances::set`], in declaration order.
    pub const NAMES: [&'static str; 11] = [
        "skew_tol",
        "ortho_tol",
        "block_tol",
        "poly_tol",
        "freq_floor",
        "freq_sep",
        "amp_tol",
        "fit_tol",
        "rat_tol",
        "rat_denom_bound",
        "dep_tol",
    ];

    /// Override one field by name. Returns `false` for an unknown name or a
    /// negative / non-finite value.
    pub fn set(&mut self, name: &str, value: f64) -> bool {
        if !value.is_finite() || value < 0.0 {
            return false;
        }
        let slot = match name.replace('-', "_").as_str() {
            "skew_tol" => &mut self.skew_tol,
            "ortho_tol" => &mut self.ortho_tol,
            "block_tol" => &mut self.block_tol,
            "poly_tol" => &mut self.poly_tol,
            "freq_floor" => &mut self.freq_floor,
            "freq_sep" => &mut self.freq_sep,
            "amp_tol" => &mut self.amp_tol,
            "fit_tol" => &mut self.fit_tol,
            "rat_tol" => &mut self.rat_tol,
            "dep_tol" => &mut self.dep_tol,
            "rat_denom_bound" => {
                if value < 1.0 {
                    return false;
                }
                self.rat_denom_bound = value as u64;
                return true;
            }
            _ => return false,
        };
        *slot = value;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_by_name() {
        let mut t = Tolerances::default();
        assert!(t.set("skew-tol", 0.0));
        assert_eq!(t.skew_tol, 0.0);
        assert!(t.set("rat_denom_bound", 1000.0));
        assert_eq!(t.rat_denom_bound, 1000);
        assert!(!t.set("nope", 1.0));
        assert!(!t.set("fit_tol", -1.0));
        for name in Tolerances::NAMES {
            assert!(Tolerances::default().set(name, 1.0), "{name}");
        }
    }
}
