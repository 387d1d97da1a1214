//! Two-class synthetic data and dataset file formats.
//!
//! Generation draws a template ṽ uniform on {±1}^d, flips its first d_f
//! coordinates to obtain w̃, and samples both classes coordinate-wise with
//! feature noise σ_f on the first d_f coordinates and redundant noise σ_r on
//! the rest. Class +1 follows ṽ, class −1 follows w̃.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::rng::{self, tag};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub d: usize,
    pub d_f: usize,
    pub sigma_f: f64,
    pub sigma_r: f64,
    pub n_per_class: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d_f == 0 || self.d_f > self.d {
            return Err(Error::InvalidParam(format!(
                "feature count d_f = {} must lie in [1, d = {}]",
                self.d_f, self.d
            )));
        }
        if !(self.sigma_f >= 0.0) || !(self.sigma_r >= 0.0) {
            return Err(Error::InvalidParam(
                "noise levels must be non-negative".into(),
            ));
        }
        if self.n_per_class < 2 {
            return Err(Error::InvalidParam(format!(
                "n_per_class = {} must be at least 2",
                self.n_per_class
            )));
        }
        Ok(())
    }
}

/// Where a dataset came from.
#[derive(Clone, Debug, PartialEq)]
pub enum DatasetMeta {
    Synthetic(SyntheticSpec),
    File { path: String, format: DataFormat },
    Memory,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataFormat {
    DenseCsv,
    SparseIndexValue,
}

/// Labeled sample matrix. Labels are ±1 for binary data; files holding more
/// than two class tags keep their raw tags and are narrowed to a pair per
/// experiment run.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Vec<f64>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// Distinct labels, ascending.
    pub fn class_labels(&self) -> Vec<f64> {
        let mut labels = self.y.clone();
        labels.sort_by(|a, b| a.partial_cmp(b).expect("finite labels"));
        labels.dedup();
        labels
    }

    /// Classification needs at least two classes present.
    pub fn validate_for_classification(&self) -> Result<()> {
        if self.class_labels().len() < 2 {
            return Err(Error::SingleClass);
        }
        Ok(())
    }
}

/// Draw the two-class dataset described by `spec`: rows 0..n_per_class carry
/// label +1 (template ṽ), the rest label −1 (template w̃ = ṽ with the first
/// d_f coordinates flipped). Deterministic given the seed; a single
/// sequential stream.
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = rng::stream(spec.seed, tag::DATA, 0);
    let d = spec.d;
    let template_v: Vec<f64> = (0..d)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let mut template_w = template_v.clone();
    for t in template_w.iter_mut().take(spec.d_f) {
        *t = -*t;
    }
    let n = 2 * spec.n_per_class;
    let mut x = Array2::zeros((n, d));
    let mut y = Vec::with_capacity(n);
    for (class, template) in [(1.0, &template_v), (-1.0, &template_w)] {
        for _ in 0..spec.n_per_class {
            let row_i = y.len();
            for (j, t) in template.iter().enumerate() {
                let sigma = if j < spec.d_f {
                    spec.sigma_f
                } else {
                    spec.sigma_r
                };
                let g: f64 = StandardNormal.sample(&mut rng);
                x[[row_i, j]] = t + sigma * g;
            }
            y.push(class);
        }
    }
    Ok(Dataset {
        x,
        y,
        meta: DatasetMeta::Synthetic(*spec),
    })
}

/// Keep coordinates ⌊j·d/target_d⌋ for j = 0..target_d (uniform stride).
/// Labels are unchanged.
pub fn downsample(ds: &Dataset, target_d: usize) -> Result<Dataset> {
    let d = ds.dim();
    if target_d == 0 || target_d > d {
        return Err(Error::InvalidParam(format!(
            "target dimension {target_d} must lie in [1, d = {d}]"
        )));
    }
    let indices: Vec<usize> = (0..target_d).map(|j| j * d / target_d).collect();
    let mut x = Array2::zeros((ds.n(), target_d));
    for (i, row) in ds.x.rows().into_iter().enumerate() {
        for (jj, &j) in indices.iter().enumerate() {
            x[[i, jj]] = row[j];
        }
    }
    Ok(Dataset {
        x,
        y: ds.y.clone(),
        meta: ds.meta.clone(),
    })
}

/// Map exactly two distinct tags onto ±1 (smaller tag → −1). Native ±1 and
/// single-class or multiclass label sets pass through unchanged.
fn canonicalize_labels(y: &mut [f64]) {
    let mut labels = y.to_vec();
    labels.sort_by(|a, b| a.partial_cmp(b).expect("finite labels"));
    labels.dedup();
    if labels.len() == 2 && !(labels[0] == -1.0 && labels[1] == 1.0) {
        for v in y.iter_mut() {
            *v = if *v == labels[0] { -1.0 } else { 1.0 };
        }
    }
}

pub fn save_dataset<W: Write>(ds: &Dataset, mut w: W, format: DataFormat) -> Result<()> {
    match format {
        DataFormat::DenseCsv => {
            for (row, label) in ds.x.rows().into_iter().zip(&ds.y) {
                write!(w, "{label}")?;
                for v in row.iter() {
                    write!(w, ",{v}")?;
                }
                writeln!(w)?;
            }
        }
        DataFormat::SparseIndexValue => {
            writeln!(w, "# d={}", ds.dim())?;
            for (row, label) in ds.x.rows().into_iter().zip(&ds.y) {
                write!(w, "{label}")?;
                for (j, v) in row.iter().enumerate() {
                    if *v != 0.0 {
                        write!(w, " {}:{}", j + 1, v)?;
                    }
                }
                writeln!(w)?;
            }
        }
    }
    Ok(())
}

pub fn load_dataset<R: BufRead>(r: R, format: DataFormat) -> Result<Dataset> {
    match format {
        DataFormat::DenseCsv => load_dense_csv(r),
        DataFormat::SparseIndexValue => load_sparse(r),
    }
}

fn load_dense_csv<R: BufRead>(r: R) -> Result<Dataset> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut y = Vec::new();
    for (ln, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut fields = t.split(',');
        let label: f64 = fields
            .next()
            .expect("split yields at least one field")
            .trim()
            .parse()
            .map_err(|e| Error::Parse {
                line: ln + 1,
                msg: format!("label: {e}"),
            })?;
        let feats: Result<Vec<f64>> = fields
            .map(|s| {
                s.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: ln + 1,
                    msg: format!("feature: {e}"),
                })
            })
            .collect();
        let feats = feats?;
        if let Some(first) = rows.first() {
            if first.len() != feats.len() {
                return Err(Error::Parse {
                    line: ln + 1,
                    msg: format!("row has {} features, expected {}", feats.len(), first.len()),
                });
            }
        }
        rows.push(feats);
        y.push(label);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 1,
            msg: "no samples in file".into(),
        });
    }
    let (n, d) = (rows.len(), rows[0].len());
    let data: Vec<f64> = rows.into_iter().flatten().collect();
    canonicalize_labels(&mut y);
    Ok(Dataset {
        x: Array2::from_shape_vec((n, d), data).expect("shape"),
        y,
        meta: DatasetMeta::Memory,
    })
}

fn load_sparse<R: BufRead>(r: R) -> Result<Dataset> {
    let mut entries: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut y = Vec::new();
    let mut max_index = 0usize;
    let mut header_d: Option<usize> = None;
    for (ln, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(rest) = t.strip_prefix('#') {
            // dimension override: "# d=<int>"
            if let Some(v) = rest.trim().strip_prefix("d=") {
                header_d = Some(v.trim().parse().map_err(|e| Error::Parse {
                    line: ln + 1,
                    msg: format!("dimension override: {e}"),
                })?);
            }
            continue;
        }
        let mut fields = t.split_whitespace();
        let label: f64 = fields
            .next()
            .expect("non-empty line")
            .parse()
            .map_err(|e| Error::Parse {
                line: ln + 1,
                msg: format!("label: {e}"),
            })?;
        let mut row = Vec::new();
        for f in fields {
            let (idx, val) = f.split_once(':').ok_or_else(|| Error::Parse {
                line: ln + 1,
                msg: format!("expected index:value, got '{f}'"),
            })?;
            let idx: usize = idx.parse().map_err(|e| Error::Parse {
                line: ln + 1,
                msg: format!("index: {e}"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line: ln + 1,
                    msg: "indices are 1-based".into(),
                });
            }
            let val: f64 = val.parse().map_err(|e| Error::Parse {
                line: ln + 1,
                msg: format!("value: {e}"),
            })?;
            max_index = max_index.max(idx);
            row.push((idx - 1, val));
        }
        entries.push(row);
        y.push(label);
    }
    if entries.is_empty() {
        return Err(Error::Parse {
            line: 1,
            msg: "no samples in file".into(),
        });
    }
    let d = match header_d {
        Some(h) => {
            if h < max_index {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("dimension override {h} is below max index {max_index}"),
                });
            }
            h
        }
        None => max_index,
    };
    let n = entries.len();
    let mut x = Array2::zeros((n, d));
    for (i, row) in entries.into_iter().enumerate() {
        for (j, v) in row {
            x[[i, j]] = v;
        }
    }
    canonicalize_labels(&mut y);
    Ok(Dataset {
        x,
        y,
        meta: DatasetMeta::Memory,
    })
}

pub fn save_dataset_file(ds: &Dataset, path: &Path, format: DataFormat) -> Result<()> {
    save_dataset(ds, BufWriter::new(File::create(path)?), format)
}

pub fn load_dataset_file(path: &Path, format: DataFormat) -> Result<Dataset> {
    let mut ds = load_dataset(BufReader::new(File::open(path)?), format)?;
    ds.meta = DatasetMeta::File {
        path: path.display().to_string(),
        format,
    };
    Ok(ds)
}
