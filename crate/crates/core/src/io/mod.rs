//! File formats: CSV matrices, adjacency and edge lists, JSON helpers and
//! chain trace directories.

mod traces;

pub use traces::{read_trace_dir, write_trace_dir, TraceFormat};

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphs::UndirectedGraph;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Seed, config hash and package version written at the top of every output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
    pub version: String,
}

impl Provenance {
    pub fn new(seed: u64, config_hash: impl Into<String>) -> Self {
        Provenance {
            seed,
            config_hash: config_hash.into(),
            version: VERSION.to_string(),
        }
    }

    pub(crate) fn header(&self) -> String {
        format!(
            "# lrsd {}\n# seed: {}\n# config_hash: {}\n",
            self.version, self.seed, self.config_hash
        )
    }
}

/// SHA-256 of arbitrary config text, hex-encoded.
pub fn config_hash(text: &str) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Shortest exact decimal form; round-trips through `parse::<f64>`.
fn fmt_f64(out: &mut String, v: f64) {
    let _ = write!(out, "{v:?}");
}

pub fn matrix_to_csv(m: &DMatrix<f64>, provenance: Option<&Provenance>) -> String {
    let mut out = String::new();
    if let Some(p) = provenance {
        out.push_str(&p.header());
    }
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            fmt_f64(&mut out, m[(i, j)]);
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>, provenance: Option<&Provenance>) -> Result<()> {
    fs::write(path, matrix_to_csv(m, provenance))?;
    Ok(())
}

/// Parses a numeric CSV. Lines starting with `#` and blank lines are
/// skipped; a first row with no numeric cell is taken as a header.
pub fn parse_matrix_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut first = true;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if first {
            first = false;
            if cells.iter().all(|c| c.parse::<f64>().is_err()) {
                continue;
            }
        }
        let mut row = Vec::with_capacity(cells.len());
        for (col, c) in cells.iter().enumerate() {
            let v: f64 = c.parse().map_err(|_| {
                Error::Validation(format!(
                    "line {}, column {}: '{c}' is not a number",
                    lineno + 1,
                    col + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Validation(format!(
                    "line {}, column {}: non-finite value",
                    lineno + 1,
                    col + 1
                )));
            }
            row.push(v);
        }
        if let Some(prev) = rows.first() {
            if prev.len() != row.len() {
                return Err(Error::Validation(format!(
                    "line {} has {} columns, expected {}",
                    lineno + 1,
                    row.len(),
                    prev.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Validation("CSV contains no data rows".into()));
    }
    let (r, c) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    parse_matrix_csv(&fs::read_to_string(path)?)
}

/// 0/1 symmetric adjacency matrix with zero diagonal.
pub fn adjacency_matrix(graph: &UndirectedGraph) -> DMatrix<f64> {
    let q = graph.vertex_count();
    DMatrix::from_fn(q, q, |i, j| if graph.has_edge(i, j) { 1.0 } else { 0.0 })
}

pub fn graph_from_adjacency(m: &DMatrix<f64>) -> Result<UndirectedGraph> {
    if !m.is_square() {
        return Err(Error::Dimension("adjacency matrix must be square".into()));
    }
    let q = m.nrows();
    let mut g = UndirectedGraph::empty(q);
    for i in 0..q {
        if m[(i, i)] != 0.0 {
            return Err(Error::Validation(format!("nonzero diagonal at {i}")));
        }
        for j in (i + 1)..q {
            let (a, b) = (m[(i, j)], m[(j, i)]);
            if a != b || !(a == 0.0 || a == 1.0) {
                return Err(Error::Validation(format!(
                    "adjacency entries ({i},{j}) must be equal 0/1 values"
                )));
            }
            if a == 1.0 {
                g.add_edge(i, j);
            }
        }
    }
    Ok(g)
}

/// `j,k` rows, one per pair, with a `j,k` header.
pub fn edge_list_csv(edges: &[(usize, usize)], provenance: Option<&Provenance>) -> String {
    let mut out = String::new();
    if let Some(p) = provenance {
        out.push_str(&p.header());
    }
    out.push_str("j,k\n");
    for (i, j) in edges {
        let _ = writeln!(out, "{i},{j}");
    }
    out
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

/// Serde adapter storing a matrix as a list of rows.
pub mod matrix_serde {
    use nalgebra::DMatrix;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
        m.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<DMatrix<f64>, String> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err("ragged matrix rows".into());
        }
        Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
    }

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        from_rows(Vec::<Vec<f64>>::deserialize(d)?).map_err(D::Error::custom)
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(m: &Option<DMatrix<f64>>, s: S) -> Result<S::Ok, S::Error> {
            m.as_ref().map(to_rows).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> Result<Option<DMatrix<f64>>, D::Error> {
            match Option::<Vec<Vec<f64>>>::deserialize(d)? {
                Some(rows) => from_rows(rows).map(Some).map_err(D::Error::custom),
                None => Ok(None),
            }
        }
    }
}
