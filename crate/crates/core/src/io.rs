//! CSV and JSON output. Floats are written with 17 significant digits so
//! every value round-trips exactly.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::noise::JumpAtomSet;
use crate::solver::SpectralField;
use crate::spectral::EigenSystem;

/// Round-trip exact decimal form of `v`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Accumulates CSV text in memory; written out in one go.
#[derive(Debug, Default, Clone)]
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn with_header<S: AsRef<str>>(columns: &[S]) -> Self {
        let mut c = Csv::default();
        c.row_str(columns);
        c
    }

    pub fn row_str<S: AsRef<str>>(&mut self, cells: &[S]) {
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            self.buf.push_str(c.as_ref());
        }
        self.buf.push('\n');
    }

    /// Row of leading integer cells followed by float cells.
    pub fn row(&mut self, ints: &[u64], floats: &[f64]) {
        let mut first = true;
        for i in ints {
            if !first {
                self.buf.push(',');
            }
            first = false;
            let _ = write!(self.buf, "{i}");
        }
        for &f in floats {
            if !first {
                self.buf.push(',');
            }
            first = false;
            self.buf.push_str(&fmt_f64(f));
        }
        self.buf.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.buf
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.buf)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    s.push('\n');
    write_text(path, &s)
}

fn axis_names(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("{prefix}_{i}")).collect()
}

/// `ordinal, k_1..k_d, lambda`.
pub fn eigen_csv(system: &EigenSystem) -> Csv {
    let mut header = vec!["ordinal".to_string()];
    header.extend(axis_names("k", system.dim()));
    header.push("lambda".into());
    let mut csv = Csv::with_header(&header);
    for (i, (k, lam)) in system.iter().enumerate() {
        let mut ints = vec![i as u64];
        ints.extend(k.iter().map(|&v| v as u64));
        csv.row(&ints, &[lam]);
    }
    csv
}

/// `y_1..y_d, z`.
pub fn atoms_csv(atoms: &JumpAtomSet) -> Csv {
    let mut header = axis_names("y", atoms.bx().dim());
    header.push("z".into());
    let mut csv = Csv::with_header(&header);
    for (y, z) in atoms.iter() {
        let mut vals = y.to_vec();
        vals.push(z);
        csv.row(&[], &vals);
    }
    csv
}

/// `ordinal, k_1..k_d, lambda, a_k`.
pub fn coeff_csv(field: &SpectralField) -> Csv {
    let system = field.system();
    let mut header = vec!["ordinal".to_string()];
    header.extend(axis_names("k", system.dim()));
    header.push("lambda".into());
    header.push("a_k".into());
    let mut csv = Csv::with_header(&header);
    for (i, (k, lam)) in system.iter().enumerate() {
        let mut ints = vec![i as u64];
        ints.extend(k.iter().map(|&v| v as u64));
        csv.row(&ints, &[lam, field.coeffs()[i]]);
    }
    csv
}

/// `x_1..x_d, value` for the tensor grid `axes`, last axis fastest.
pub fn grid_csv(axes: &[Vec<f64>], values: &[f64]) -> Csv {
    let d = axes.len();
    let mut header = axis_names("x", d);
    header.push("value".into());
    let mut csv = Csv::with_header(&header);
    let shape: Vec<usize> = axes.iter().map(|a| a.len()).collect();
    for (flat, &v) in values.iter().enumerate() {
        let mut rem = flat;
        let mut p = vec![0.0; d];
        for ax in (0..d).rev() {
            p[ax] = axes[ax][rem % shape[ax]];
            rem /= shape[ax];
        }
        p.push(v);
        csv.row(&[], &p);
    }
    csv
}
