//! Seeded verification suites.
//!
//! Every suite draws its random instances from a ChaCha stream derived from
//! the run seed and the suite's position, so a report is a pure function of
//! `(seed, tolerances)`. Each suite records one or more named metrics (the
//! worst residual seen and the threshold it is held to) plus any errors
//! raised along the way.

pub mod random;
mod suites;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::Tolerances;

pub const DEFAULT_SEED: u64 = 0x5EED_2024;

const MAX_FAILURES: usize = 20;

/// Worst value seen for one quantity in a suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metric {
    pub name: String,
    pub max: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub description: String,
    pub passed: bool,
    pub cases: usize,
    pub metrics: Vec<Metric>,
    pub failures: Vec<String>,
}

impl SuiteReport {
    /// Largest residual over the suite's metrics.
    pub fn max_residual(&self) -> f64 {
        self.metrics.iter().map(|m| m.max).fold(0.0, f64::max)
    }

    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

/// Accumulates metrics and failures for one suite.
pub(crate) struct Recorder {
    name: &'static str,
    description: &'static str,
    cases: usize,
    metrics: Vec<Metric>,
    failures: Vec<String>,
    dropped: usize,
}

impl Recorder {
    fn new(name: &'static str, description: &'static str) -> Self {
        Recorder { name, description, cases: 0, metrics: Vec::new(), failures: Vec::new(), dropped: 0 }
    }

    pub(crate) fn case(&mut self) {
        self.cases += 1;
    }

    /// Records `value` against `threshold` (`value ≤ threshold` passes; NaN
    /// fails).
    pub(crate) fn check(&mut self, metric: &str, value: f64, threshold: f64) {
        let ok = value <= threshold;
        let entry = match self.metrics.iter_mut().find(|m| m.name == metric) {
            Some(e) => e,
            None => {
                self.metrics.push(Metric { name: metric.to_string(), max: 0.0, threshold, passed: true });
                self.metrics.last_mut().expect("just pushed")
            }
        };
        if value.is_nan() {
            entry.max = f64::NAN;
        } else if !entry.max.is_nan() {
            entry.max = entry.max.max(value);
        }
        if !ok {
            entry.passed = false;
            self.fail(format!("{metric}: {value:e} exceeds {threshold:e} (case {})", self.cases));
        }
    }

    /// Records a boolean condition as a 0/1 metric.
    pub(crate) fn require(&mut self, metric: &str, ok: bool, detail: impl FnOnce() -> String) {
        self.check(metric, if ok { 0.0 } else { 1.0 }, 0.0);
        if !ok {
            let msg = detail();
            if let Some(last) = self.failures.last_mut() {
                last.push_str(": ");
                last.push_str(&msg);
            }
        }
    }

    pub(crate) fn fail(&mut self, msg: String) {
        if self.failures.len() < MAX_FAILURES {
            self.failures.push(msg);
        } else {
            self.dropped += 1;
        }
    }

    /// Unwraps `r`, recording an error as a failure.
    pub(crate) fn ok<T>(&mut self, context: &str, r: crate::Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.fail(format!("{context}: {} ({e})", e.name()));
                None
            }
        }
    }

    fn finish(mut self) -> SuiteReport {
        if self.dropped > 0 {
            self.failures.push(format!("... and {} more failures", self.dropped));
        }
        let passed = self.failures.is_empty() && self.metrics.iter().all(|m| m.passed);
        SuiteReport {
            name: self.name.to_string(),
            description: self.description.to_string(),
            passed,
            cases: self.cases,
            metrics: self.metrics,
            failures: self.failures,
        }
    }
}

type SuiteFn = fn(&mut Recorder, &mut ChaCha8Rng, &Tolerances);

/// `(name, description, body)` of every suite, in report order.
const SUITES: &[(&str, &str, SuiteFn)] = &[
    ("reference_matrices", "L_1, L_2, L_3 reproduce the reference matrices", suites::reference_matrices),
    ("spectra", "spectra and characteristic polynomials of L_m, m = 1..12", suites::spectra),
    ("gamma_m", "unit norm, ODE residual and exp(L_m s)E_0 = gamma_m", suites::gamma_m),
    ("heisenberg", "closed-form Heisenberg geodesics against the classical formula", suites::heisenberg),
    ("geodesic_oracle", "closed-form geodesics against the RK4 Hamiltonian oracle", suites::geodesic_oracle),
    ("q0_invariants", "derivative norms and Gram inner products of random Q0 curves", suites::q0_invariants),
    ("decomposition", "decompose and fit_from_samples round trips", suites::decomposition),
    ("correspondence", "helical/algebra, marked/geodesic and tuple/algebra round trips", suites::correspondence),
    ("injectivity", "periodicity detection with verified witnesses", suites::injectivity),
    ("hyperplanes", "affine hyperplanes containing gamma_m", suites::hyperplanes),
    ("closure", "orthogonal post-composition, juxtaposition and tensor products", suites::closure),
    ("skewlin", "spectral form, characteristic polynomial and coimage of random skew matrices", suites::skewlin),
    ("carnot", "group law, vector-field brackets and bracket surjectivity", suites::carnot),
];

pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|s| s.0).collect()
}

fn suite_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Runs one suite by name.
pub fn run_suite(name: &str, seed: u64, tol: &Tolerances) -> Option<SuiteReport> {
    let (index, (name, description, body)) = SUITES.iter().enumerate().find(|(_, s)| s.0 == name)?;
    let mut rec = Recorder::new(name, description);
    let mut rng = suite_rng(seed, index);
    body(&mut rec, &mut rng, tol);
    Some(rec.finish())
}

/// Runs every suite.
pub fn run_all(seed: u64, tol: &Tolerances) -> VerifyReport {
    let suites: Vec<SuiteReport> =
        SUITES.iter().map(|s| run_suite(s.0, seed, tol).expect("suite is registered")).collect();
    VerifyReport { seed, passed: suites.iter().all(|s| s.passed), suites }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recorder_tracks_worst_value() {
        let mut rec = Recorder::new("x", "y");
        rec.check("a", 1e-12, 1e-9);
        rec.check("a", 1e-10, 1e-9);
        let r = rec.finish();
        assert!(r.passed);
        assert_eq!(r.metric("a").unwrap().max, 1e-10);
        let mut rec = Recorder::new("x", "y");
        rec.check("a", f64::NAN, 1.0);
        assert!(!rec.finish().passed);
    }

    #[test]
    fn unknown_suite() {
        assert!(run_suite("nope", 1, &Tolerances::default()).is_none());
    }

    #[test]
    fn cheap_suites_pass_and_are_deterministic() {
        let tol = Tolerances::default();
        for name in ["reference_matrices", "injectivity", "hyperplanes", "carnot"] {
            let a = run_suite(name, 7, &tol).unwrap();
            assert!(a.passed, "{a:?}");
            assert_eq!(a, run_suite(name, 7, &tol).unwrap());
        }
    }

    #[test]
    fn zero_skew_tolerance_is_reported() {
        let tol = Tolerances { skew_tol: 0.0, ..Tolerances::default() };
        let r = run_suite("skewlin", 3, &tol).unwrap();
        assert!(!r.passed);
        assert!(r.failures.iter().any(|f| f.contains("NotSkew")), "{:?}", r.failures);
    }
}
