//! Trace directories: one table per parameter block, one row per stored
//! iteration, first column the iteration index.
//!
//! | file | columns |
//! |---|---|
//! | `rank` | iteration, `Σ z` |
//! | `z`, `tau2` | iteration, one per factor |
//! | `M` | iteration, `q·r` loadings row-major |
//! | `S`, `C` | iteration, `q·q` entries row-major |
//! | `lambda`, `xi` | iteration, value |
//! | `graph` | iteration, j, k (one row per edge) |
//!
//! Tables are CSV (`.csv`) or a little-endian binary layout (`.bin`):
//! the 8-byte magic `LRSDTRC1`, row and column counts as `u64`, then the
//! values as row-major `f64`.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{matrix_to_csv, parse_matrix_csv, Provenance};
use crate::error::{Error, Result};
use crate::model::Variant;
use crate::posterior::{ChainMeta, ChainOutput, Diagnostics, Draws};

const MAGIC: &[u8; 8] = b"LRSDTRC1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    #[default]
    Csv,
    Binary,
}

impl TraceFormat {
    fn extension(self) -> &'static str {
        match self {
            TraceFormat::Csv => "csv",
            TraceFormat::Binary => "bin",
        }
    }
}

#[derive(Serialize, Deserialize)]
struct MetaFile {
    provenance: Provenance,
    format: TraceFormat,
    meta: ChainMeta,
    diagnostics: Diagnostics,
    stored_draws: usize,
}

struct Table {
    header: Vec<String>,
    cols: usize,
    values: Vec<f64>,
}

impl Table {
    fn new(header: Vec<String>) -> Self {
        Table {
            cols: header.len(),
            header,
            values: Vec::new(),
        }
    }

    fn push(&mut self, row: impl IntoIterator<Item = f64>) {
        let before = self.values.len();
        self.values.extend(row);
        debug_assert_eq!(self.values.len() - before, self.cols);
    }

    fn rows(&self) -> usize {
        self.values.len() / self.cols.max(1)
    }
}

fn numbered(prefix: &str, count: usize) -> Vec<String> {
    let mut h = vec!["iteration".to_string()];
    h.extend((0..count).map(|k| format!("{prefix}{k}")));
    h
}

fn write_table(dir: &Path, name: &str, t: &Table, format: TraceFormat, prov: &Provenance) -> Result<()> {
    let path = dir.join(format!("{name}.{}", format.extension()));
    match format {
        TraceFormat::Csv => {
            let m = DMatrix::from_row_slice(t.rows(), t.cols, &t.values);
            let mut text = String::new();
            // provenance comments, then the column header, then the rows
            let body = matrix_to_csv(&m, Some(prov));
            let split = body.lines().take_while(|l| l.starts_with('#')).count();
            for line in body.lines().take(split) {
                text.push_str(line);
                text.push('\n');
            }
            text.push_str(&t.header.join(","));
            text.push('\n');
            for line in body.lines().skip(split) {
                text.push_str(line);
                text.push('\n');
            }
            fs::write(path, text)?;
        }
        TraceFormat::Binary => {
            let mut bytes = Vec::with_capacity(24 + 8 * t.values.len());
            bytes.extend_from_slice(MAGIC);
            bytes.extend_from_slice(&(t.rows() as u64).to_le_bytes());
            bytes.extend_from_slice(&(t.cols as u64).to_le_bytes());
            for v in &t.values {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            fs::write(path, bytes)?;
        }
    }
    Ok(())
}

/// Returns `(rows, cols, values)`; a CSV with only a header gives zero rows.
fn read_table(dir: &Path, name: &str, format: TraceFormat) -> Result<(usize, usize, Vec<f64>)> {
    let path = dir.join(format!("{name}.{}", format.extension()));
    if !path.exists() {
        return Err(Error::Validation(format!("missing trace file {}", path.display())));
    }
    match format {
        TraceFormat::Csv => {
            let text = fs::read_to_string(&path)?;
            let header_cols = text
                .lines()
                .find(|l| !l.starts_with('#') && !l.trim().is_empty())
                .map_or(0, |l| l.split(',').count());
            match parse_matrix_csv(&text) {
                Ok(m) => {
                    let values = m.transpose().as_slice().to_vec();
                    Ok((m.nrows(), m.ncols(), values))
                }
                Err(Error::Validation(msg)) if msg.contains("no data rows") => {
                    Ok((0, header_cols, Vec::new()))
                }
                Err(e) => Err(e),
            }
        }
        TraceFormat::Binary => {
            let bytes = fs::read(&path)?;
            if bytes.len() < 24 || &bytes[..8] != MAGIC {
                return Err(Error::Validation(format!("{} is not a trace table", path.display())));
            }
            let word = |k: usize| u64::from_le_bytes(bytes[k..k + 8].try_into().unwrap()) as usize;
            let (rows, cols) = (word(8), word(16));
            if bytes.len() != 24 + 8 * rows * cols {
                return Err(Error::Validation(format!("{} is truncated", path.display())));
            }
            let values = bytes[24..]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            Ok((rows, cols, values))
        }
    }
}

pub fn write_trace_dir(
    dir: &Path,
    output: &ChainOutput,
    format: TraceFormat,
    provenance: &Provenance,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let meta = &output.meta;
    let d = &output.draws;
    let (q, r) = (meta.q, meta.r);
    let it = |t: usize| d.iterations[t] as f64;

    let mut rank = Table::new(vec!["iteration".into(), "rank".into()]);
    let mut z = Table::new(numbered("z", r));
    let mut tau = Table::new(numbered("tau2_", r));
    let mut m = Table::new(numbered("m", q * r));
    let mut s = Table::new(numbered("s", q * q));
    for t in 0..d.len() {
        rank.push([it(t), d.rank(t) as f64]);
        z.push(std::iter::once(it(t)).chain(d.indicators[t].iter().map(|&b| b as u8 as f64)));
        tau.push(std::iter::once(it(t)).chain(d.variances[t].iter().copied()));
        let lt = d.loadings[t].transpose();
        m.push(std::iter::once(it(t)).chain(lt.iter().copied()));
        let st = d.sparse[t].transpose();
        s.push(std::iter::once(it(t)).chain(st.iter().copied()));
    }
    write_table(dir, "rank", &rank, format, provenance)?;
    write_table(dir, "z", &z, format, provenance)?;
    write_table(dir, "tau2", &tau, format, provenance)?;
    write_table(dir, "M", &m, format, provenance)?;
    write_table(dir, "S", &s, format, provenance)?;

    if meta.variant == Variant::GfmLasso {
        let mut c = Table::new(numbered("c", q * q));
        for t in 0..d.len() {
            let ct = d.precision[t].transpose();
            c.push(std::iter::once(it(t)).chain(ct.iter().copied()));
        }
        write_table(dir, "C", &c, format, provenance)?;
    }
    if meta.variant != Variant::GfmHiw {
        let mut lam = Table::new(vec!["iteration".into(), "lambda".into()]);
        for t in 0..d.len() {
            lam.push([it(t), d.lambda[t]]);
        }
        write_table(dir, "lambda", &lam, format, provenance)?;
    } else {
        let mut g = Table::new(vec!["iteration".into(), "j".into(), "k".into()]);
        let mut xi = Table::new(vec!["iteration".into(), "xi".into()]);
        for t in 0..d.len() {
            for &(i, j) in &d.graphs[t] {
                g.push([it(t), i as f64, j as f64]);
            }
            xi.push([it(t), d.xi[t]]);
        }
        write_table(dir, "graph", &g, format, provenance)?;
        write_table(dir, "xi", &xi, format, provenance)?;
    }

    super::write_matrix_csv(&dir.join("inclusion_freq.csv"), &output.inclusion_freq, Some(provenance))?;
    super::write_json(
        &dir.join("meta.json"),
        &MetaFile {
            provenance: provenance.clone(),
            format,
            meta: meta.clone(),
            diagnostics: output.diagnostics.clone(),
            stored_draws: d.len(),
        },
    )
}

fn check_shape(name: &str, got: (usize, usize), rows: usize, cols: usize) -> Result<()> {
    if got != (rows, cols) {
        return Err(Error::Validation(format!(
            "trace {name} is {}x{}, expected {rows}x{cols}",
            got.0, got.1
        )));
    }
    Ok(())
}

/// Reads a directory written by [`write_trace_dir`].
pub fn read_trace_dir(dir: &Path) -> Result<(ChainOutput, Provenance)> {
    let meta_path = dir.join("meta.json");
    if !meta_path.exists() {
        return Err(Error::Validation(format!("no meta.json in {}", dir.display())));
    }
    let mf: MetaFile = serde_json::from_str(&fs::read_to_string(meta_path)?)?;
    let meta = mf.meta;
    let (q, r, t_count, fmt) = (meta.q, meta.r, mf.stored_draws, mf.format);

    let (rows, cols, rank) = read_table(dir, "rank", fmt)?;
    check_shape("rank", (rows, cols), t_count, 2)?;
    let iterations: Vec<usize> = (0..rows).map(|t| rank[2 * t] as usize).collect();

    let (rows, cols, z) = read_table(dir, "z", fmt)?;
    check_shape("z", (rows, cols), t_count, r + 1)?;
    let (rows, cols, tau) = read_table(dir, "tau2", fmt)?;
    check_shape("tau2", (rows, cols), t_count, r + 1)?;
    let (rows, cols, m) = read_table(dir, "M", fmt)?;
    check_shape("M", (rows, cols), t_count, q * r + 1)?;
    let (rows, cols, s) = read_table(dir, "S", fmt)?;
    check_shape("S", (rows, cols), t_count, q * q + 1)?;

    let mut draws = Draws {
        iterations,
        ..Draws::default()
    };
    for t in 0..t_count {
        let zr = &z[t * (r + 1) + 1..(t + 1) * (r + 1)];
        draws.indicators.push(zr.iter().map(|&v| v != 0.0).collect());
        draws.variances.push(tau[t * (r + 1) + 1..(t + 1) * (r + 1)].to_vec());
        let mr = &m[t * (q * r + 1) + 1..(t + 1) * (q * r + 1)];
        draws.loadings.push(DMatrix::from_row_slice(q, r, mr));
        let sr = &s[t * (q * q + 1) + 1..(t + 1) * (q * q + 1)];
        draws.sparse.push(DMatrix::from_row_slice(q, q, sr));
    }

    if meta.variant == Variant::GfmLasso {
        let (rows, cols, c) = read_table(dir, "C", fmt)?;
        check_shape("C", (rows, cols), t_count, q * q + 1)?;
        for t in 0..t_count {
            let cr = &c[t * (q * q + 1) + 1..(t + 1) * (q * q + 1)];
            draws.precision.push(DMatrix::from_row_slice(q, q, cr));
        }
    }
    if meta.variant != Variant::GfmHiw {
        let (rows, cols, lam) = read_table(dir, "lambda", fmt)?;
        check_shape("lambda", (rows, cols), t_count, 2)?;
        draws.lambda = (0..t_count).map(|t| lam[2 * t + 1]).collect();
    } else {
        let (rows, cols, g) = read_table(dir, "graph", fmt)?;
        if rows > 0 && cols != 3 {
            return Err(Error::Validation("graph trace must have 3 columns".into()));
        }
        let mut graphs = vec![Vec::new(); t_count];
        let mut cursor = 0;
        for row in 0..rows {
            let (iter, i, j) = (g[3 * row] as usize, g[3 * row + 1] as usize, g[3 * row + 2] as usize);
            while cursor < t_count && draws.iterations[cursor] != iter {
                cursor += 1;
            }
            if cursor == t_count || i >= q || j >= q {
                return Err(Error::Validation(format!("graph trace row {row} is out of order")));
            }
            graphs[cursor].push((i, j));
        }
        draws.graphs = graphs;
        let (rows, cols, xi) = read_table(dir, "xi", fmt)?;
        check_shape("xi", (rows, cols), t_count, 2)?;
        draws.xi = (0..t_count).map(|t| xi[2 * t + 1]).collect();
    }

    Ok((ChainOutput::new(meta, draws, mf.diagnostics), mf.provenance))
}
