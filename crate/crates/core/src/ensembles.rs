//! Random-projection matrix families and the scaled projection
//! v' = (1/√k)·R·vᵀ.
//!
//! Three kinds are supported, all normalized so entries satisfy E(r) = 0 and
//! E(r²) = 1:
//! - `Gaussian` — dense, entries iid N(0, 1);
//! - `SparseIid { q }` — entries ±√q with probability 1/(2q) each, else 0;
//! - `FixedColumnWeight { s_prime }` — every column holds exactly s' nonzeros
//!   `±√(k/s')` at distinct rows.
//!
//! The classic configurations get preset names: GM (Gaussian), SM (q = 3),
//! VSM (q = √d), and StM (one nonzero per column).

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::rng::{self, tag};
use crate::{Error, Result};

/// Which family to draw from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EnsembleKind {
    Gaussian,
    SparseIid { q: f64 },
    FixedColumnWeight { s_prime: usize },
}

/// A fully specified random matrix draw: family, shape, and seed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub k: usize,
    pub d: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, k: usize, d: usize, seed: u64) -> Result<Self> {
        let spec = Self { kind, k, d, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParam("k must be positive".into()));
        }
        if self.k > self.d {
            return Err(Error::InvalidParam(format!(
                "k = {} must not exceed d = {}",
                self.k, self.d
            )));
        }
        match self.kind {
            EnsembleKind::Gaussian => {}
            EnsembleKind::SparseIid { q } => {
                if !(q >= 1.0) {
                    return Err(Error::InvalidParam(format!("q = {q} must be >= 1")));
                }
            }
            EnsembleKind::FixedColumnWeight { s_prime } => {
                if s_prime < 1 || s_prime > self.k {
                    return Err(Error::InvalidParam(format!(
                        "column weight s' = {s_prime} must lie in [1, k = {}]",
                        self.k
                    )));
                }
            }
        }
        Ok(())
    }

    /// Expected fraction of nonzero entries.
    pub fn expected_fill(&self) -> f64 {
        match self.kind {
            EnsembleKind::Gaussian => 1.0,
            EnsembleKind::SparseIid { q } => 1.0 / q,
            EnsembleKind::FixedColumnWeight { s_prime } => s_prime as f64 / self.k as f64,
        }
    }

    /// Short name for reports: preset name when the parameters match one,
    /// otherwise a descriptive form.
    pub fn label(&self) -> String {
        match self.kind {
            EnsembleKind::Gaussian => "GM".into(),
            EnsembleKind::SparseIid { q } => {
                if q == 3.0 {
                    "SM".into()
                } else if q == (self.d as f64).sqrt() {
                    "VSM".into()
                } else {
                    format!("SparseIid(q={q})")
                }
            }
            EnsembleKind::FixedColumnWeight { s_prime } => {
                if s_prime == 1 {
                    "StM".into()
                } else {
                    format!("FixedColumnWeight(s'={s_prime})")
                }
            }
        }
    }
}

/// Named preset resolving to a concrete [`EnsembleSpec`] once (k, d, seed)
/// are known. VSM's sparsity q = √d depends on the data dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    Gm,
    Sm,
    Vsm,
    Stm,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Gm, Preset::Sm, Preset::Vsm, Preset::Stm];

    pub fn resolve(&self, k: usize, d: usize, seed: u64) -> Result<EnsembleSpec> {
        let kind = match self {
            Preset::Gm => EnsembleKind::Gaussian,
            Preset::Sm => EnsembleKind::SparseIid { q: 3.0 },
            Preset::Vsm => EnsembleKind::SparseIid {
                q: (d as f64).sqrt(),
            },
            Preset::Stm => EnsembleKind::FixedColumnWeight { s_prime: 1 },
        };
        EnsembleSpec::new(kind, k, d, seed)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Preset::Gm => "GM",
            Preset::Sm => "SM",
            Preset::Vsm => "VSM",
            Preset::Stm => "StM",
        };
        f.write_str(s)
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "GM" => Ok(Preset::Gm),
            "SM" => Ok(Preset::Sm),
            "VSM" => Ok(Preset::Vsm),
            "STM" => Ok(Preset::Stm),
            other => Err(Error::InvalidParam(format!(
                "unknown ensemble preset '{other}' (expected GM, SM, VSM, or StM)"
            ))),
        }
    }
}

/// Column-compressed sparse storage: entries of column j live at
/// `col_ptr[j]..col_ptr[j+1]`, rows ascending within a column.
#[derive(Clone, Debug, PartialEq)]
pub struct CscMatrix {
    pub k: usize,
    pub d: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<u32>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Storage {
    Dense(Array2<f64>),
    Sparse(CscMatrix),
}

/// A realized k×d projection matrix. `ensemble` records provenance when the
/// matrix was drawn rather than imported from a file.
#[derive(Clone, Debug)]
pub struct ProjectionMatrix {
    pub k: usize,
    pub d: usize,
    pub storage: Storage,
    pub ensemble: Option<EnsembleSpec>,
}

/// Expected fill at or below which matrices are materialized sparse.
pub const SPARSE_FILL_THRESHOLD: f64 = 0.25;

/// Draw the matrix described by `spec`. Deterministic: the same spec
/// (including seed) yields a bit-identical matrix.
pub fn build_matrix(spec: &EnsembleSpec) -> Result<ProjectionMatrix> {
    spec.validate()?;
    let mut rng = rng::stream(spec.seed, tag::MATRIX, 0);
    let (k, d) = (spec.k, spec.d);
    let storage = match spec.kind {
        EnsembleKind::Gaussian => {
            let mut data = Vec::with_capacity(k * d);
            for _ in 0..k * d {
                let x: f64 = StandardNormal.sample(&mut rng);
                data.push(x);
            }
            Storage::Dense(Array2::from_shape_vec((k, d), data).expect("shape"))
        }
        EnsembleKind::SparseIid { q } => {
            let mag = q.sqrt();
            if spec.expected_fill() > SPARSE_FILL_THRESHOLD {
                // Dense regime: one uniform per entry, row-major.
                let mut data = Vec::with_capacity(k * d);
                for _ in 0..k * d {
                    let u: f64 = rng.random();
                    data.push(if u < 0.5 / q {
                        mag
                    } else if u < 1.0 / q {
                        -mag
                    } else {
                        0.0
                    });
                }
                Storage::Dense(Array2::from_shape_vec((k, d), data).expect("shape"))
            } else {
                // Sparse regime: per column, draw the Binomial(k, 1/q) nonzero
                // count, then distinct rows and signs. Entry-wise this is the
                // same iid law, at O(nnz) cost.
                let bin = Binomial::new(k as u64, 1.0 / q)
                    .map_err(|e| Error::InvalidParam(format!("binomial: {e}")))?;
                let mut col_ptr = Vec::with_capacity(d + 1);
                let mut row_idx = Vec::new();
                let mut values = Vec::new();
                let mut rows_buf = Vec::new();
                col_ptr.push(0);
                for _ in 0..d {
                    let c = bin.sample(&mut rng) as usize;
                    sample_distinct_sorted(&mut rng, k, c, &mut rows_buf);
                    for &r in rows_buf.iter() {
                        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        row_idx.push(r as u32);
                        values.push(sign * mag);
                    }
                    col_ptr.push(row_idx.len());
                }
                Storage::Sparse(CscMatrix {
                    k,
                    d,
                    col_ptr,
                    row_idx,
                    values,
                })
            }
        }
        EnsembleKind::FixedColumnWeight { s_prime } => {
            let mag = (k as f64 / s_prime as f64).sqrt();
            let mut col_ptr = Vec::with_capacity(d + 1);
            let mut row_idx = Vec::with_capacity(d * s_prime);
            let mut values = Vec::with_capacity(d * s_prime);
            let mut rows_buf = Vec::new();
            col_ptr.push(0);
            for _ in 0..d {
                sample_distinct_sorted(&mut rng, k, s_prime, &mut rows_buf);
                for &r in rows_buf.iter() {
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    row_idx.push(r as u32);
                    values.push(sign * mag);
                }
                col_ptr.push(row_idx.len());
            }
            let csc = CscMatrix {
                k,
                d,
                col_ptr,
                row_idx,
                values,
            };
            if spec.expected_fill() > SPARSE_FILL_THRESHOLD {
                Storage::Dense(csc_to_dense(&csc))
            } else {
                Storage::Sparse(csc)
            }
        }
    };
    Ok(ProjectionMatrix {
        k,
        d,
        storage,
        ensemble: Some(*spec),
    })
}

/// Floyd's algorithm: `count` distinct values from 0..n, sorted ascending.
fn sample_distinct_sorted(rng: &mut impl Rng, n: usize, count: usize, out: &mut Vec<usize>) {
    out.clear();
    debug_assert!(count <= n);
    for i in (n - count)..n {
        let t = rng.random_range(0..=i);
        if out.contains(&t) {
            out.push(i);
        } else {
            out.push(t);
        }
    }
    out.sort_unstable();
}

fn csc_to_dense(csc: &CscMatrix) -> Array2<f64> {
    let mut dense = Array2::zeros((csc.k, csc.d));
    for j in 0..csc.d {
        for e in csc.col_ptr[j]..csc.col_ptr[j + 1] {
            dense[[csc.row_idx[e] as usize, j]] = csc.values[e];
        }
    }
    dense
}

fn dense_to_csc(m: &Array2<f64>) -> CscMatrix {
    let (k, d) = m.dim();
    let mut col_ptr = Vec::with_capacity(d + 1);
    let mut row_idx = Vec::new();
    let mut values = Vec::new();
    col_ptr.push(0);
    for j in 0..d {
        for i in 0..k {
            let v = m[[i, j]];
            if v != 0.0 {
                row_idx.push(i as u32);
                values.push(v);
            }
        }
        col_ptr.push(row_idx.len());
    }
    CscMatrix {
        k,
        d,
        col_ptr,
        row_idx,
        values,
    }
}

impl ProjectionMatrix {
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(m) => m.iter().filter(|v| **v != 0.0).count(),
            Storage::Sparse(c) => c.values.len(),
        }
    }

    pub fn fill(&self) -> f64 {
        self.nnz() as f64 / (self.k * self.d) as f64
    }

    /// Same matrix re-materialized in dense storage.
    pub fn densified(&self) -> ProjectionMatrix {
        let storage = match &self.storage {
            Storage::Dense(m) => Storage::Dense(m.clone()),
            Storage::Sparse(c) => Storage::Dense(csc_to_dense(c)),
        };
        ProjectionMatrix {
            k: self.k,
            d: self.d,
            storage,
            ensemble: self.ensemble,
        }
    }

    /// Same matrix re-materialized in sparse storage.
    pub fn sparsified(&self) -> ProjectionMatrix {
        let storage = match &self.storage {
            Storage::Dense(m) => Storage::Sparse(dense_to_csc(m)),
            Storage::Sparse(c) => Storage::Sparse(c.clone()),
        };
        ProjectionMatrix {
            k: self.k,
            d: self.d,
            storage,
            ensemble: self.ensemble,
        }
    }

    /// v' = (1/√k)·R·vᵀ. Sparse storage runs in O(nnz).
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.d {
            return Err(Error::ShapeMismatch {
                expected: format!("vector of length {}", self.d),
                got: format!("length {}", v.len()),
            });
        }
        let scale = 1.0 / (self.k as f64).sqrt();
        let mut out = vec![0.0; self.k];
        match &self.storage {
            Storage::Dense(m) => {
                for (i, row) in m.rows().into_iter().enumerate() {
                    let mut acc = 0.0;
                    for (r, x) in row.iter().zip(v) {
                        acc += r * x;
                    }
                    out[i] = acc * scale;
                }
            }
            Storage::Sparse(c) => {
                for (j, &x) in v.iter().enumerate() {
                    if x == 0.0 {
                        continue;
                    }
                    for e in c.col_ptr[j]..c.col_ptr[j + 1] {
                        out[c.row_idx[e] as usize] += c.values[e] * x;
                    }
                }
                for o in out.iter_mut() {
                    *o *= scale;
                }
            }
        }
        Ok(out)
    }

    /// Project every row of an n×d sample matrix; row i of the result equals
    /// `project` applied to row i of `x`.
    pub fn project_batch(&self, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
        let (n, cols) = x.dim();
        if cols != self.d {
            return Err(Error::ShapeMismatch {
                expected: format!("{} columns", self.d),
                got: format!("{cols} columns"),
            });
        }
        let scale = 1.0 / (self.k as f64).sqrt();
        match &self.storage {
            Storage::Dense(m) => Ok(x.dot(&m.t()) * scale),
            Storage::Sparse(c) => {
                let mut out = Array2::zeros((n, self.k));
                for (xi, mut oi) in x.rows().into_iter().zip(out.rows_mut()) {
                    let orow = oi.as_slice_mut().expect("row-major output");
                    for (j, &v) in xi.iter().enumerate() {
                        if v == 0.0 {
                            continue;
                        }
                        for e in c.col_ptr[j]..c.col_ptr[j + 1] {
                            orow[c.row_idx[e] as usize] += c.values[e] * v;
                        }
                    }
                    for o in orow.iter_mut() {
                        *o *= scale;
                    }
                }
                Ok(out)
            }
        }
    }

    /// Write the sparse triple format: header `k d nnz`, then one
    /// `row col value` line per nonzero (column-major order, 0-based).
    /// Values print in shortest round-trip form, so import is value-exact.
    pub fn write_sparse_triples<W: Write>(&self, mut w: W) -> Result<()> {
        let csc_owned;
        let csc = match &self.storage {
            Storage::Sparse(c) => c,
            Storage::Dense(m) => {
                csc_owned = dense_to_csc(m);
                &csc_owned
            }
        };
        writeln!(w, "{} {} {}", self.k, self.d, csc.values.len())?;
        for j in 0..csc.d {
            for e in csc.col_ptr[j]..csc.col_ptr[j + 1] {
                writeln!(w, "{} {} {}", csc.row_idx[e], j, csc.values[e])?;
            }
        }
        Ok(())
    }

    /// Parse the sparse triple format. The result carries no ensemble
    /// provenance.
    pub fn read_sparse_triples<R: BufRead>(r: R) -> Result<ProjectionMatrix> {
        let mut lines = r.lines().enumerate();
        let (k, d, nnz) = loop {
            let (ln, line) = lines.next().ok_or_else(|| Error::Parse {
                line: 1,
                msg: "missing header".into(),
            })?;
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let mut it = t.split_whitespace();
            let parse = |s: Option<&str>, ln: usize| -> Result<usize> {
                s.ok_or_else(|| Error::Parse {
                    line: ln + 1,
                    msg: "short header".into(),
                })?
                .parse()
                .map_err(|e| Error::Parse {
                    line: ln + 1,
                    msg: format!("header: {e}"),
                })
            };
            break (
                parse(it.next(), ln)?,
                parse(it.next(), ln)?,
                parse(it.next(), ln)?,
            );
        };
        let mut triples: Vec<(u32, u32, f64)> = Vec::with_capacity(nnz);
        for (ln, line) in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let mut it = t.split_whitespace();
            let row: u32 = it
                .next()
                .ok_or_else(|| Error::Parse {
                    line: ln + 1,
                    msg: "missing row".into(),
                })?
                .parse()
                .map_err(|e| Error::Parse {
                    line: ln + 1,
                    msg: format!("row: {e}"),
                })?;
            let col: u32 = it
                .next()
                .ok_or_else(|| Error::Parse {
                    line: ln + 1,
                    msg: "missing col".into(),
                })?
                .parse()
                .map_err(|e| Error::Parse {
                    line: ln + 1,
                    msg: format!("col: {e}"),
                })?;
            let value: f64 = it
                .next()
                .ok_or_else(|| Error::Parse {
                    line: ln + 1,
                    msg: "missing value".into(),
                })?
                .parse()
                .map_err(|e| Error::Parse {
                    line: ln + 1,
                    msg: format!("value: {e}"),
                })?;
            if row as usize >= k || col as usize >= d {
                return Err(Error::Parse {
                    line: ln + 1,
                    msg: format!("entry ({row}, {col}) outside {k}x{d}"),
                });
            }
            triples.push((row, col, value));
        }
        if triples.len() != nnz {
            return Err(Error::Parse {
                line: 1,
                msg: format!(
                    "header promises {nnz} entries, file holds {}",
                    triples.len()
                ),
            });
        }
        triples.sort_unstable_by_key(|t| (t.1, t.0));
        let mut col_ptr = vec![0usize; d + 1];
        let mut row_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for (row, col, value) in triples {
            col_ptr[col as usize + 1] += 1;
            row_idx.push(row);
            values.push(value);
        }
        for j in 0..d {
            col_ptr[j + 1] += col_ptr[j];
        }
        Ok(ProjectionMatrix {
            k,
            d,
            storage: Storage::Sparse(CscMatrix {
                k,
                d,
                col_ptr,
                row_idx,
                values,
            }),
            ensemble: None,
        })
    }

    /// Dense CSV export: k lines of d comma-separated entries.
    pub fn write_dense_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let dense_owned;
        let m = match &self.storage {
            Storage::Dense(m) => m,
            Storage::Sparse(c) => {
                dense_owned = csc_to_dense(c);
                &dense_owned
            }
        };
        for row in m.rows() {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_dense_csv<R: BufRead>(r: R) -> Result<ProjectionMatrix> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (ln, line) in r.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let row: Result<Vec<f64>> = t
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|e| Error::Parse {
                        line: ln + 1,
                        msg: format!("{e}"),
                    })
                })
                .collect();
            let row = row?;
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(Error::Parse {
                        line: ln + 1,
                        msg: format!("row has {} entries, expected {}", row.len(), first.len()),
                    });
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Parse {
                line: 1,
                msg: "empty matrix file".into(),
            });
        }
        let (k, d) = (rows.len(), rows[0].len());
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        Ok(ProjectionMatrix {
            k,
            d,
            storage: Storage::Dense(Array2::from_shape_vec((k, d), data).expect("shape")),
            ensemble: None,
        })
    }

    pub fn export_sparse_triples(&self, path: &Path) -> Result<()> {
        self.write_sparse_triples(BufWriter::new(File::create(path)?))
    }

    pub fn import_sparse_triples(path: &Path) -> Result<ProjectionMatrix> {
        Self::read_sparse_triples(BufReader::new(File::open(path)?))
    }

    pub fn export_dense_csv(&self, path: &Path) -> Result<()> {
        self.write_dense_csv(BufWriter::new(File::create(path)?))
    }

    pub fn import_dense_csv(path: &Path) -> Result<ProjectionMatrix> {
        Self::read_dense_csv(BufReader::new(File::open(path)?))
    }

    /// (mean entry, mean squared entry) over all k·d positions.
    pub fn entry_moments(&self) -> (f64, f64) {
        let total = (self.k * self.d) as f64;
        let (mut s1, mut s2) = (0.0, 0.0);
        match &self.storage {
            Storage::Dense(m) => {
                for v in m.iter() {
                    s1 += v;
                    s2 += v * v;
                }
            }
            Storage::Sparse(c) => {
                for v in &c.values {
                    s1 += v;
                    s2 += v * v;
                }
            }
        }
        (s1 / total, s2 / total)
    }

    /// Nonzero count of every column (full scan).
    pub fn column_weights(&self) -> Vec<usize> {
        match &self.storage {
            Storage::Dense(m) => (0..self.d)
                .map(|j| (0..self.k).filter(|&i| m[[i, j]] != 0.0).count())
                .collect(),
            Storage::Sparse(c) => (0..self.d)
                .map(|j| c.col_ptr[j + 1] - c.col_ptr[j])
                .collect(),
        }
    }
}
