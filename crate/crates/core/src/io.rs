//! File formats: signals and scattering grids as CSV with JSON sidecars,
//! operators as raw little-endian matrix dumps, reports as JSON.
//!
//! Floats in CSV are written with 17 significant digits; JSON uses the
//! shortest representation that parses back to the same `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::linalg::CMatrix;
use crate::scattering::{ModelTag, ScatteringGrid};
use crate::signal::Signal;
use crate::sim::Trace;
use crate::weyl::OperatorMatrix;

/// Relative tolerance when matching CSV time stamps against a grid.
const TIME_TOL: f64 = 1e-9;

pub const OPERATOR_LAYOUT: &str = "row_major_complex_f64_le";

/// `17` significant digits, enough for a bit-exact round trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// `<path>.json` next to a data file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalMeta {
    pub n_samples: usize,
    pub t_span: f64,
    pub dt: f64,
    pub norm: f64,
}

/// Columns `t, re, im`, plus a JSON sidecar with the grid.
pub fn write_signal_csv(path: &Path, s: &Signal) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "re", "im"])?;
    for (k, z) in s.samples().iter().enumerate() {
        w.write_record([fmt_f64(s.grid().t(k)), fmt_f64(z.re), fmt_f64(z.im)])?;
    }
    w.flush()?;
    let g = s.grid();
    write_json(
        &sidecar_path(path),
        &SignalMeta {
            n_samples: g.len(),
            t_span: g.t_span(),
            dt: g.dt(),
            norm: s.norm(),
        },
    )
}

/// Read a pulse. The grid comes from the sidecar when present, otherwise it is
/// inferred from the time column; either way every time stamp must match.
pub fn read_signal_csv(path: &Path) -> Result<Signal> {
    let mut r = csv::Reader::from_path(path)?;
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for rec in r.deserialize() {
        let (t, re, im): (f64, f64, f64) = rec?;
        times.push(t);
        samples.push(Complex64::new(re, im));
    }
    if times.len() < 2 {
        return Err(Error::Format(format!("{}: fewer than two samples", path.display())));
    }
    let side = sidecar_path(path);
    let grid = if side.exists() {
        let meta: SignalMeta = read_json(&side)?;
        TimeGrid::new(meta.n_samples, meta.t_span)?
    } else {
        let dt = times[1] - times[0];
        TimeGrid::new(times.len(), dt * times.len() as f64)?
    };
    if grid.len() != samples.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: samples.len(),
        });
    }
    for (k, &t) in times.iter().enumerate() {
        if (t - grid.t(k)).abs() > TIME_TOL * grid.t_span() {
            return Err(Error::Format(format!(
                "{}: sample {k} at t={t} does not lie on {}",
                path.display(),
                grid.describe()
            )));
        }
    }
    Signal::new(grid, samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringMeta {
    pub n_nodes: usize,
    #[serde(flatten)]
    pub model: ModelTag,
}

/// Columns `tau, nu, w`, plus a JSON sidecar with the model tag.
pub fn write_scattering_csv(path: &Path, c: &ScatteringGrid) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["tau", "nu", "w"])?;
    for (&(tau, nu), &wt) in c.nodes().iter().zip(c.weights()) {
        w.write_record([fmt_f64(tau), fmt_f64(nu), fmt_f64(wt)])?;
    }
    w.flush()?;
    write_json(
        &sidecar_path(path),
        &ScatteringMeta {
            n_nodes: c.len(),
            model: c.model(),
        },
    )
}

/// Read nodes and weights; weights are renormalized to unit mass.
pub fn read_scattering_csv(path: &Path) -> Result<ScatteringGrid> {
    let mut r = csv::Reader::from_path(path)?;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for rec in r.deserialize() {
        let (tau, nu, w): (f64, f64, f64) = rec?;
        nodes.push((tau, nu));
        weights.push(w);
    }
    ScatteringGrid::custom(nodes, weights)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorMeta {
    pub n_samples: usize,
    pub t_span: f64,
    pub hermitian: bool,
    pub layout: String,
}

/// Row-major `(re, im)` pairs of little-endian `f64`, plus a JSON sidecar.
pub fn write_operator(path: &Path, op: &OperatorMatrix) -> Result<()> {
    write_matrix(path, op.entries())?;
    write_json(
        &sidecar_path(path),
        &OperatorMeta {
            n_samples: op.grid().len(),
            t_span: op.grid().t_span(),
            hermitian: op.is_hermitian(),
            layout: OPERATOR_LAYOUT.into(),
        },
    )
}

pub fn read_operator(path: &Path) -> Result<OperatorMatrix> {
    let meta: OperatorMeta = read_json(&sidecar_path(path))?;
    if meta.layout != OPERATOR_LAYOUT {
        return Err(Error::Format(format!("unsupported operator layout {:?}", meta.layout)));
    }
    let grid = TimeGrid::new(meta.n_samples, meta.t_span)?;
    let m = read_matrix(path, grid.len())?;
    OperatorMatrix::new(grid, m)
}

pub fn write_matrix(path: &Path, m: &CMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Square `n x n` matrix in the [`write_matrix`] layout.
pub fn read_matrix(path: &Path, n: usize) -> Result<CMatrix> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    if bytes.len() != n * n * 16 {
        return Err(Error::Format(format!(
            "{}: {} bytes, expected {} for a {n}x{n} complex matrix",
            path.display(),
            bytes.len(),
            n * n * 16
        )));
    }
    let val = |i: usize| f64::from_le_bytes(bytes[8 * i..8 * i + 8].try_into().expect("8-byte slice"));
    Ok(CMatrix::from_fn(n, n, |r, c| {
        let i = 2 * (r * n + c);
        Complex64::new(val(i), val(i + 1))
    }))
}

/// Per-realization trace: `realization_id, a, b`.
pub fn write_traces_csv(path: &Path, traces: &[Trace]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["realization_id", "a", "b"])?;
    for t in traces {
        w.write_record([t.realization_id.to_string(), fmt_f64(t.a), fmt_f64(t.b)])?;
    }
    w.flush()?;
    Ok(())
}
