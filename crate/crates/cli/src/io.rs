//! Parsing of ranges and input files, and CSV / JSON output.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use helicarnot::DVector;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::CliError;

/// Parameter grid `start:end:samples`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SRange {
    pub start: f64,
    pub end: f64,
    pub samples: usize,
}

impl SRange {
    pub fn points(&self) -> Vec<f64> {
        let step = (self.end - self.start) / (self.samples - 1) as f64;
        (0..self.samples)
            .map(|i| if i + 1 == self.samples { self.end } else { self.start + step * i as f64 })
            .collect()
    }
}

impl FromStr for SRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts.as_slice() else {
            return Err(format!("expected start:end:samples, got {s:?}"));
        };
        let start: f64 = a.trim().parse().map_err(|_| format!("bad range start {a:?}"))?;
        let end: f64 = b.trim().parse().map_err(|_| format!("bad range end {b:?}"))?;
        let samples: usize = n.trim().parse().map_err(|_| format!("bad sample count {n:?}"))?;
        if !start.is_finite() || !end.is_finite() || start >= end {
            return Err(format!("range needs finite start < end, got {start}:{end}"));
        }
        if samples < 2 {
            return Err(format!("range needs at least 2 samples, got {samples}"));
        }
        Ok(SRange { start, end, samples })
    }
}

/// Floats with 17 significant digits, independent of locale.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))
}

/// Samples `(s, point)` from a CSV whose first column is `s`; a header row
/// is skipped when its first field is not a number.
pub fn read_samples(path: &Path) -> Result<Vec<(f64, DVector<f64>)>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    let mut width = None;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if line == 0 && record.get(0).is_some_and(|f| f.parse::<f64>().is_err()) => continue,
            Err(_) => {
                return Err(CliError::Schema(format!("{}: row {} is not numeric", path.display(), line + 1)))
            }
        };
        if values.len() < 2 || values.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Schema(format!(
                "{}: row {} needs s and at least one finite coordinate",
                path.display(),
                line + 1
            )));
        }
        if *width.get_or_insert(values.len()) != values.len() {
            return Err(CliError::Schema(format!("{}: row {} has a different width", path.display(), line + 1)));
        }
        out.push((values[0], DVector::from_column_slice(&values[1..])));
    }
    if out.is_empty() {
        return Err(CliError::Schema(format!("{}: no samples", path.display())));
    }
    Ok(out)
}

/// Destination for command output: a file, or stdout when no path is given.
pub struct Output {
    inner: Box<dyn Write>,
    path: Option<PathBuf>,
}

impl Output {
    pub fn open(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            Some(p) => {
                let file = File::create(p).map_err(|e| CliError::io(p, e))?;
                Ok(Output { inner: Box::new(BufWriter::new(file)), path: Some(p.to_path_buf()) })
            }
            None => Ok(Output { inner: Box::new(BufWriter::new(io::stdout())), path: None }),
        }
    }

    fn wrap(&self, e: io::Error) -> CliError {
        match &self.path {
            Some(p) => CliError::io(p, e),
            None => CliError::io(Path::new("<stdout>"), e),
        }
    }

    /// Writes one CSV row of already formatted fields.
    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) -> Result<(), CliError> {
        let line = fields.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(",");
        writeln!(self.inner, "{line}").map_err(|e| self.wrap(e))
    }

    pub fn numbers(&mut self, values: impl IntoIterator<Item = f64>) -> Result<(), CliError> {
        let fields: Vec<String> = values.into_iter().map(fmt_f64).collect();
        self.row(&fields)
    }

    pub fn json<T: Serialize>(&mut self, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Schema(e.to_string()))?;
        writeln!(self.inner, "{text}").map_err(|e| self.wrap(e))
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.inner.flush().map_err(|e| self.wrap(e))
    }
}
