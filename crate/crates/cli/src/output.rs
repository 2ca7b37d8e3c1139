//! CSV emission with a config digest comment.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

/// Parameters that determine a command's output, hashed into the CSV header.
#[derive(Debug, Default)]
pub struct Config {
    entries: Vec<(String, String)>,
}

impl Config {
    pub fn new(command: &str) -> Self {
        let mut c = Self::default();
        c.set("command", command);
        c
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn digest(&self) -> String {
        let mut sorted = self.entries.clone();
        sorted.sort();
        let mut h = Sha256::new();
        for (k, v) in &sorted {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Extra `# key: value` lines written after the digest.
    pub notes: Vec<String>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new(), notes: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        self.rows.push(row.iter().map(|&x| number(x)).collect());
    }

    pub fn write(&self, config: &Config, out: Option<&Path>) -> io::Result<()> {
        let sink: Box<dyn Write> = match out {
            Some(p) => Box::new(File::create(p)?),
            None => Box::new(io::stdout().lock()),
        };
        let mut w = BufWriter::new(sink);
        writeln!(w, "# config-digest: sha256:{}", config.digest())?;
        for n in &self.notes {
            writeln!(w, "# {n}")?;
        }
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(&self.header).map_err(io_error)?;
        for row in &self.rows {
            csv.write_record(row).map_err(io_error)?;
        }
        csv.flush()
    }
}

fn io_error(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::other(format!("{other:?}")),
    }
}

/// Shortest round-trip form, in exponent notation outside `[1e-4, 1e6)`.
pub fn number(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e6).contains(&a) || !a.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// `{prefix}_m_n` column names for every entry of an `n x n` matrix, row-major,
/// with `Re`/`Im` pairs when `complex`.
pub fn matrix_columns(prefix: &str, n: usize, complex: bool) -> Vec<String> {
    let mut cols = Vec::new();
    for m in 1..=n {
        for k in 1..=n {
            if complex {
                cols.push(format!("Re{prefix}_{m}_{k}"));
                cols.push(format!("Im{prefix}_{m}_{k}"));
            } else {
                cols.push(format!("{prefix}_{m}_{k}"));
            }
        }
    }
    cols
}

pub fn push_matrix(row: &mut Vec<f64>, m: &friedrichs::CMat, complex: bool) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            row.push(m[(i, j)].re);
            if complex {
                row.push(m[(i, j)].im);
            }
        }
    }
}
