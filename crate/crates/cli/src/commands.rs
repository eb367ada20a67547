//! Command implementations: read input, call the library, write output.

use std::path::{Path, PathBuf};

use helicarnot::carnot::{
    algebra_to_helical, algebra_to_tuple, assemble_from_tuple, helical_to_algebra, AlgebraJson, ContactEmbedding,
    StratifiedAlgebra2,
};
use helicarnot::geodesic::{hamiltonian, GeodesicCase, GeodesicIVP, NormalGeodesic};
use helicarnot::helical::{
    decompose, equivalent, fit_from_samples, is_injective, CanonicalDecomposition, HelicalCR, InjectivityVerdict,
    Q1CurveJson,
};
use helicarnot::homcurves::gamma_m_eval;
use helicarnot::skewlin::{matrix_serde, max_abs, spectral_form, SkewMatrix};
use helicarnot::verify;
use helicarnot::{DMatrix, DVector, Error, Tolerances};
use serde::{Deserialize, Serialize};

use crate::io::{read_json, read_samples, Output, SRange};
use crate::{Cli, CliError, Command, Mode};

pub fn run(cli: Cli) -> Result<(), CliError> {
    let tol = cli.tol.resolve()?;
    match cli.command {
        Command::Gamma { m, range, out } => gamma(m, range, out.as_deref()),
        Command::Geodesic { algebra, ivp, range, out } => geodesic(&algebra, &ivp, range, out.as_deref(), &tol),
        Command::Decompose { samples, generator, max_freqs, out } => {
            let source = match (samples, generator) {
                (Some(p), None) => Source::Samples(p),
                (None, Some(p)) => Source::Generator(p),
                _ => return Err(CliError::Usage("give exactly one of --samples or --generator".into())),
            };
            decompose_cmd(source, max_freqs, out.as_deref(), &tol)
        }
        Command::Correspond { mode, input, check, out } => correspond(mode, &input, check, out.as_deref(), &tol),
        Command::Verify { seed, suite, out } => verify_cmd(seed, &suite, out.as_deref(), &tol),
    }
}

fn gamma(m: usize, range: SRange, out: Option<&Path>) -> Result<(), CliError> {
    let mut o = Output::open(out)?;
    let header: Vec<String> = std::iter::once("s".to_string()).chain((0..=m).map(|j| format!("g{j}"))).collect();
    o.row(&header)?;
    for s in range.points() {
        o.numbers(std::iter::once(s).chain(gamma_m_eval(m, s).iter().copied()))?;
    }
    o.finish()
}

fn geodesic(algebra: &Path, ivp: &Path, range: SRange, out: Option<&Path>, tol: &Tolerances) -> Result<(), CliError> {
    let g = read_json::<AlgebraJson>(algebra)?.into_algebra(tol)?;
    let ivp: GeodesicIVP = read_json(ivp)?;
    let geo = NormalGeodesic::new(&g, &ivp, tol)?;
    if let GeodesicCase::SingularATau { kernel_dim } = geo.case() {
        eprintln!(
            "{}",
            serde_json::json!({
                "warning": "SingularATau",
                "kernel_dim": kernel_dim,
                "message": "A_tau is singular; the solution moves linearly along its kernel",
            })
        );
    }
    let (m, p) = (g.m(), g.p());
    let mut o = Output::open(out)?;
    let header: Vec<String> = std::iter::once("s".to_string())
        .chain((1..=m).map(|i| format!("x{i}")))
        .chain((1..=p).map(|a| format!("t{a}")))
        .chain((1..=m).map(|i| format!("xi{i}")))
        .chain(std::iter::once("H".to_string()))
        .collect();
    o.row(&header)?;
    for s in range.points() {
        let state = geo.state(s);
        let h = hamiltonian(&g, &state);
        let row = std::iter::once(s)
            .chain(state.x.iter().copied())
            .chain(state.t.iter().copied())
            .chain(state.xi.iter().copied())
            .chain(std::iter::once(h));
        o.numbers(row)?;
    }
    o.finish()
}

enum Source {
    Samples(PathBuf),
    Generator(PathBuf),
}

#[derive(Deserialize)]
struct GeneratorJson {
    #[serde(rename = "A", with = "matrix_serde")]
    a: DMatrix<f64>,
    u0: Vec<f64>,
}

#[derive(Serialize)]
struct DecomposeReport {
    source: &'static str,
    n: usize,
    p: usize,
    decomposition: CanonicalDecomposition,
    /// `null` for a constant curve, which has no rotation to test.
    injectivity: Option<InjectivityVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit_rms: Option<f64>,
}

fn decompose_cmd(source: Source, max_freqs: Option<usize>, out: Option<&Path>, tol: &Tolerances) -> Result<(), CliError> {
    let (label, decomposition, fit_rms) = match source {
        Source::Samples(path) => {
            let samples = read_samples(&path)?;
            let d = samples[0].1.len();
            let cap = samples.len().saturating_sub(2) / 4;
            let k = max_freqs.unwrap_or((d / 2).min(cap));
            let fit = fit_from_samples(&samples, k, tol)?;
            ("samples", fit.decomposition, Some(fit.rms))
        }
        Source::Generator(path) => {
            let j: GeneratorJson = read_json(&path)?;
            let a = SkewMatrix::new(j.a, tol)?;
            let (dec, _) = decompose(&a, &DVector::from_vec(j.u0), tol)?;
            ("generator", dec, None)
        }
    };
    let injectivity = if decomposition.frequencies.is_empty() { None } else { Some(is_injective(&decomposition, tol)?) };
    let report = DecomposeReport {
        source: label,
        n: decomposition.frequencies.len(),
        p: decomposition.vertical_dim,
        decomposition,
        injectivity,
        fit_rms,
    };
    let mut o = Output::open(out)?;
    o.json(&report)?;
    o.finish()
}

#[derive(Serialize, Deserialize)]
struct HelicalJson {
    #[serde(rename = "A", with = "matrix_serde")]
    a: DMatrix<f64>,
    w: Vec<f64>,
}

impl HelicalJson {
    fn from_structure(h: &HelicalCR) -> Self {
        HelicalJson { a: h.a().matrix().clone(), w: h.w().as_slice().to_vec() }
    }

    fn into_structure(self, tol: &Tolerances) -> Result<HelicalCR, Error> {
        HelicalCR::new(SkewMatrix::new(self.a, tol)?, DVector::from_vec(self.w), tol)
    }
}

#[derive(Deserialize)]
struct GroupWithW {
    algebra: AlgebraJson,
    w: Vec<f64>,
}

#[derive(Deserialize)]
struct TupleInput {
    curves: Vec<Q1CurveJson>,
}

#[derive(Serialize, Deserialize)]
struct GroupWithGeodesics {
    algebra: AlgebraJson,
    geodesics: Vec<GeodesicIVP>,
}

#[derive(Serialize)]
struct CurvesOutput {
    curves: Vec<Q1CurveJson>,
}

#[derive(Serialize)]
struct HelicalToGroupOutput {
    algebra: AlgebraJson,
    embedding: ContactEmbedding,
}

#[derive(Serialize)]
struct Checked<T: Serialize> {
    #[serde(flatten)]
    result: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    roundtrip_residual: Option<f64>,
}

fn structure_gap(g1: &StratifiedAlgebra2, g2: &StratifiedAlgebra2) -> f64 {
    if g1.m() != g2.m() || g1.p() != g2.p() {
        return f64::INFINITY;
    }
    g1.structure_matrices()
        .iter()
        .zip(g2.structure_matrices())
        .map(|(a, b)| max_abs(&(a.matrix() - b.matrix())))
        .fold(0.0, f64::max)
}

fn correspond(mode: Mode, input: &Path, check: bool, out: Option<&Path>, tol: &Tolerances) -> Result<(), CliError> {
    let value = correspond_value(mode, input, check, tol)?;
    let mut o = Output::open(out)?;
    o.json(&value)?;
    o.finish()
}

fn to_value<T: Serialize>(result: T, roundtrip_residual: Option<f64>) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(Checked { result, roundtrip_residual }).map_err(|e| CliError::Schema(e.to_string()))
}

fn correspond_value(mode: Mode, input: &Path, check: bool, tol: &Tolerances) -> Result<serde_json::Value, CliError> {
    match mode {
        Mode::HelicalToGroup => {
            let h = read_json::<HelicalJson>(input)?.into_structure(tol)?;
            let (g, embedding) = helical_to_algebra(&h, tol)?;
            let residual = if check {
                let back = algebra_to_helical(&g, h.w(), tol)?;
                Some(match equivalent(&h, &back) {
                    Some(lambda) => (lambda - 1.0).abs().max(max_abs(&(back.a().matrix() - h.a().matrix()))),
                    None => f64::INFINITY,
                })
            } else {
                None
            };
            let result = HelicalToGroupOutput { algebra: AlgebraJson::from(&g), embedding };
            to_value(result, residual)
        }
        Mode::GroupToHelical => {
            let j: GroupWithW = read_json(input)?;
            let g = j.algebra.into_algebra(tol)?;
            let h = algebra_to_helical(&g, &DVector::from_vec(j.w), tol)?;
            let residual = if check {
                let (back, _) = helical_to_algebra(&h, tol)?;
                // a singular C¹ comes back restricted to its coimage
                Some(if back.m() == g.m() { structure_gap(&g, &back) } else { spectrum_gap(&g, &back, tol)? })
            } else {
                None
            };
            to_value(HelicalJson::from_structure(&h), residual)
        }
        Mode::TupleToGroup => {
            let j: TupleInput = read_json(input)?;
            let curves = j.curves.into_iter().map(|c| c.into_curve(tol)).collect::<Result<Vec<_>, _>>()?;
            let (g, ivps) = assemble_from_tuple(&curves, tol)?;
            let residual = if check {
                let again = algebra_to_tuple(&g, &ivps, tol)?;
                let (g2, _) = assemble_from_tuple(&again, tol)?;
                Some(structure_gap(&g, &g2))
            } else {
                None
            };
            let result = GroupWithGeodesics { algebra: AlgebraJson::from(&g), geodesics: ivps };
            to_value(result, residual)
        }
        Mode::GroupToTuple => {
            let j: GroupWithGeodesics = read_json(input)?;
            let g = j.algebra.into_algebra(tol)?;
            let curves = algebra_to_tuple(&g, &j.geodesics, tol)?;
            let residual = if check {
                let (g2, _) = assemble_from_tuple(&curves, tol)?;
                Some(structure_gap(&g, &g2))
            } else {
                None
            };
            let result = CurvesOutput { curves: curves.iter().map(Q1CurveJson::from).collect() };
            to_value(result, residual)
        }
    }
}

/// Largest difference between the nonzero frequencies of two contact
/// algebras.
fn spectrum_gap(g1: &StratifiedAlgebra2, g2: &StratifiedAlgebra2, tol: &Tolerances) -> Result<f64, Error> {
    let f = |g: &StratifiedAlgebra2| {
        spectral_form(g.structure_matrix(0), tol).map(|sf| sf.frequencies().to_vec())
    };
    let (a, b) = (f(g1)?, f(g2)?);
    if a.len() != b.len() {
        return Ok(f64::INFINITY);
    }
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

fn verify_cmd(seed: u64, suites: &[String], out: Option<&Path>, tol: &Tolerances) -> Result<(), CliError> {
    let report = if suites.is_empty() {
        verify::run_all(seed, tol)
    } else {
        let mut runs = Vec::with_capacity(suites.len());
        for name in suites {
            let r = verify::run_suite(name, seed, tol).ok_or_else(|| {
                CliError::Usage(format!("unknown suite {name:?}; known: {}", verify::suite_names().join(", ")))
            })?;
            runs.push(r);
        }
        verify::VerifyReport { seed, passed: runs.iter().all(|s| s.passed), suites: runs }
    };
    for s in &report.suites {
        eprintln!(
            "{} {:<16} cases={:<4} max_residual={:.3e}",
            if s.passed { "PASS" } else { "FAIL" },
            s.name,
            s.cases,
            s.max_residual()
        );
    }
    let mut o = Output::open(out)?;
    o.json(&report)?;
    o.finish()?;
    if report.passed {
        Ok(())
    } else {
        Err(CliError::VerifyFailed(report.suites.iter().filter(|s| !s.passed).map(|s| s.name.clone()).collect()))
    }
}
