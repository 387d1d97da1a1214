//! Evaluation protocol: stratified random split, projection, linear SVM,
//! odd-majority voting over independent projections, and accuracy averaging
//! across simulation runs.
//!
//! The SVM is a linear soft-margin machine minimizing
//! J(w, b) = ‖w‖²/(2C) + mean_i max(0, 1 − y_i(w·x_i + b)),
//! fit by deterministic full-batch subgradient descent with step C/t and
//! uniformly averaged iterates. The per-sample-mean loss makes the objective
//! invariant under sample duplication, and the batch subgradient sequence is
//! then identical as well. Projected features are standardized (train-split
//! mean and scale) before training; the raw 1/√k projections put all the
//! inter-class signal of the sparsest families into a few coordinates, and
//! per-coordinate scaling is what lets a margin classifier exploit that.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::ensembles::{build_matrix, EnsembleKind, EnsembleSpec, Preset, Storage};
use crate::numeric::{cholesky, fnv1a64};
use crate::rng::{self, tag};
use crate::synth::{self, Dataset, SyntheticSpec};
use crate::{Error, Result};

/// SVM hyperparameters. `c` is the inverse regularization weight of the
/// mean-hinge objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvmHyper {
    pub c: f64,
    pub max_epochs: usize,
    pub tol: f64,
}

impl Default for SvmHyper {
    fn default() -> Self {
        Self {
            c: 1.0,
            max_epochs: 100,
            tol: 1e-5,
        }
    }
}

/// A trained linear decision rule sign(w·x + b).
#[derive(Clone, Debug)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub hyper: SvmHyper,
    /// Best objective value reached by the averaged iterate.
    pub objective: f64,
    /// Best-so-far objective after each epoch; non-increasing.
    pub objective_trace: Vec<f64>,
    pub epochs_run: usize,
    pub trained: bool,
}

/// Train on rows of `x` with labels ±1.
///
/// The optimizer is batch subgradient descent on the mean-hinge objective:
/// it consumes no randomness, so retraining on any permutation or duplication
/// of the samples gives the same boundary. Chooses a Gram-space iteration
/// when n ≤ k (the iterates w_t = Xᵀβ_t are representable in span of the
/// samples since w_0 = 0), and the direct primal form otherwise.
pub fn train_svm(x: ArrayView2<'_, f64>, y: &[f64], hyper: &SvmHyper) -> Result<SvmModel> {
    let (n, k) = x.dim();
    if n != y.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{n} labels"),
            got: format!("{}", y.len()),
        });
    }
    if n < 2 {
        return Err(Error::InvalidParam("need at least two samples".into()));
    }
    if !(hyper.c > 0.0) {
        return Err(Error::InvalidParam("C must be positive".into()));
    }
    let pos = y.iter().filter(|&&l| l == 1.0).count();
    let neg = y.iter().filter(|&&l| l == -1.0).count();
    if pos + neg != n {
        return Err(Error::InvalidParam("labels must be -1 or +1".into()));
    }
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParam("features must be finite".into()));
    }
    if n <= k {
        train_svm_gram(x, y, hyper)
    } else {
        train_svm_primal(x, y, hyper)
    }
}

fn hinge_mean(margins: &[f64], y: &[f64]) -> f64 {
    margins
        .iter()
        .zip(y)
        .map(|(m, yi)| (1.0 - yi * m).max(0.0))
        .sum::<f64>()
        / y.len() as f64
}

fn train_svm_primal(x: ArrayView2<'_, f64>, y: &[f64], hyper: &SvmHyper) -> Result<SvmModel> {
    let (n, k) = x.dim();
    let lambda = 1.0 / hyper.c;
    let nf = n as f64;
    let mut w = vec![0.0; k];
    let mut b = 0.0;
    let mut wbar = vec![0.0; k];
    let mut bbar = 0.0;
    let mut margins = vec![0.0; n];
    let mut avg_margins = vec![0.0; n];
    let mut trace = Vec::with_capacity(hyper.max_epochs);
    let mut best = f64::INFINITY;
    let mut best_w = wbar.clone();
    let mut best_b = 0.0;
    let mut prev_obj = f64::INFINITY;
    let mut epochs = 0;
    for t in 1..=hyper.max_epochs {
        epochs = t;
        for (mi, row) in margins.iter_mut().zip(x.rows()) {
            let mut acc = 0.0;
            for (xv, wv) in row.iter().zip(&w) {
                acc += xv * wv;
            }
            *mi = acc + b;
        }
        // subgradient step: w <- (1 - eta*lambda) w + (eta/n) sum_active y_i x_i
        let eta = hyper.c / t as f64;
        let shrink = 1.0 - eta * lambda;
        for wv in w.iter_mut() {
            *wv *= shrink;
        }
        let mut active_y = 0.0;
        for ((mi, &yi), row) in margins.iter().zip(y).zip(x.rows()) {
            if yi * mi < 1.0 {
                let coef = eta * yi / nf;
                for (wv, xv) in w.iter_mut().zip(row) {
                    *wv += coef * xv;
                }
                active_y += yi;
            }
        }
        b += eta * active_y / nf;
        let tf = t as f64;
        for (av, wv) in wbar.iter_mut().zip(&w) {
            *av += (wv - *av) / tf;
        }
        bbar += (b - bbar) / tf;
        // objective of the averaged iterate
        for (ai, row) in avg_margins.iter_mut().zip(x.rows()) {
            let mut acc = 0.0;
            for (xv, wv) in row.iter().zip(&wbar) {
                acc += xv * wv;
            }
            *ai = acc + bbar;
        }
        let norm_sq: f64 = wbar.iter().map(|v| v * v).sum();
        let obj = 0.5 * lambda * norm_sq + hinge_mean(&avg_margins, y);
        if obj < best {
            best = obj;
            best_w.copy_from_slice(&wbar);
            best_b = bbar;
        }
        trace.push(best);
        if (prev_obj - obj).abs() < hyper.tol * prev_obj.abs().max(1.0) {
            break;
        }
        prev_obj = obj;
    }
    Ok(SvmModel {
        weights: best_w,
        bias: best_b,
        hyper: *hyper,
        objective: best,
        objective_trace: trace,
        epochs_run: epochs,
        trained: true,
    })
}

fn train_svm_gram(x: ArrayView2<'_, f64>, y: &[f64], hyper: &SvmHyper) -> Result<SvmModel> {
    let (n, _k) = x.dim();
    let lambda = 1.0 / hyper.c;
    let nf = n as f64;
    let gram = x.dot(&x.t());
    let g = gram.as_slice().expect("row-major gram");
    let matvec = |v: &[f64], out: &mut [f64]| {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &g[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for (rv, vv) in row.iter().zip(v) {
                acc += rv * vv;
            }
            *o = acc;
        }
    };
    let mut beta = vec![0.0; n];
    let mut b = 0.0;
    let mut beta_bar = vec![0.0; n];
    let mut bbar = 0.0;
    let mut margins = vec![0.0; n];
    let mut gbar = vec![0.0; n];
    let mut trace = Vec::with_capacity(hyper.max_epochs);
    let mut best = f64::INFINITY;
    let mut best_beta = beta_bar.clone();
    let mut best_b = 0.0;
    let mut prev_obj = f64::INFINITY;
    let mut epochs = 0;
    for t in 1..=hyper.max_epochs {
        epochs = t;
        matvec(&beta, &mut margins);
        let eta = hyper.c / t as f64;
        let shrink = 1.0 - eta * lambda;
        let mut active_y = 0.0;
        for ((bi, &yi), mi) in beta.iter_mut().zip(y).zip(&margins) {
            let margin = mi + b;
            *bi *= shrink;
            if yi * margin < 1.0 {
                *bi += eta * yi / nf;
                active_y += yi;
            }
        }
        b += eta * active_y / nf;
        let tf = t as f64;
        for (av, bv) in beta_bar.iter_mut().zip(&beta) {
            *av += (bv - *av) / tf;
        }
        bbar += (b - bbar) / tf;
        matvec(&beta_bar, &mut gbar);
        let norm_sq: f64 = beta_bar.iter().zip(&gbar).map(|(a, b)| a * b).sum();
        let avg_margins: Vec<f64> = gbar.iter().map(|v| v + bbar).collect();
        let obj = 0.5 * lambda * norm_sq + hinge_mean(&avg_margins, y);
        if obj < best {
            best = obj;
            best_beta.copy_from_slice(&beta_bar);
            best_b = bbar;
        }
        trace.push(best);
        if (prev_obj - obj).abs() < hyper.tol * prev_obj.abs().max(1.0) {
            break;
        }
        prev_obj = obj;
    }
    // materialize w = X^T beta
    let mut w = vec![0.0; x.ncols()];
    for (bi, row) in best_beta.iter().zip(x.rows()) {
        if *bi != 0.0 {
            for (wv, xv) in w.iter_mut().zip(row) {
                *wv += bi * xv;
            }
        }
    }
    Ok(SvmModel {
        weights: w,
        bias: best_b,
        hyper: *hyper,
        objective: best,
        objective_trace: trace,
        epochs_run: epochs,
        trained: true,
    })
}

/// sign(w·x + b) per row; an exact zero resolves to +1.
pub fn predict(model: &SvmModel, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    if !model.trained {
        return Err(Error::InvalidParam("model is not trained".into()));
    }
    if x.ncols() != model.weights.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} features", model.weights.len()),
            got: format!("{}", x.ncols()),
        });
    }
    Ok(x.rows()
        .into_iter()
        .map(|row| {
            let mut acc = model.bias;
            for (xv, wv) in row.iter().zip(&model.weights) {
                acc += xv * wv;
            }
            if acc >= 0.0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect())
}

/// Per-column standardization fitted on the training split.
struct Standardizer {
    mean: Vec<f64>,
    inv_scale: Vec<f64>,
}

impl Standardizer {
    fn fit(x: &ArrayView2<'_, f64>) -> Self {
        let n = x.nrows() as f64;
        let cols = x.ncols();
        let mut mean = vec![0.0; cols];
        let mut sq = vec![0.0; cols];
        for row in x.rows() {
            for j in 0..cols {
                mean[j] += row[j];
                sq[j] += row[j] * row[j];
            }
        }
        let mut inv_scale = vec![0.0; cols];
        for j in 0..cols {
            mean[j] /= n;
            let var = (sq[j] / n - mean[j] * mean[j]).max(0.0);
            let sd = var.sqrt();
            // constant columns pass through unscaled
            inv_scale[j] = if sd > 0.0 { 1.0 / sd } else { 1.0 };
        }
        Self { mean, inv_scale }
    }

    fn apply(&self, x: &mut Array2<f64>) {
        for mut row in x.rows_mut() {
            let r = row.as_slice_mut().expect("row-major");
            for ((v, m), inv) in r.iter_mut().zip(&self.mean).zip(&self.inv_scale) {
                *v = (*v - m) * inv;
            }
        }
    }
}

/// Ensemble selector for experiments: a named preset or an explicit family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EnsembleChoice {
    Preset(Preset),
    Custom(EnsembleKind),
}

impl EnsembleChoice {
    pub fn resolve(&self, k: usize, d: usize, seed: u64) -> Result<EnsembleSpec> {
        match self {
            EnsembleChoice::Preset(p) => p.resolve(k, d, seed),
            EnsembleChoice::Custom(kind) => EnsembleSpec::new(*kind, k, d, seed),
        }
    }

    pub fn label(&self, d: usize) -> String {
        match self {
            EnsembleChoice::Preset(p) => p.to_string(),
            EnsembleChoice::Custom(kind) => EnsembleSpec {
                kind: *kind,
                k: 1,
                d,
                seed: 0,
            }
            .label(),
        }
    }
}

impl std::str::FromStr for EnsembleChoice {
    type Err = Error;

    /// Accepts preset names (GM/SM/VSM/StM), `gaussian`, `sparse:<q>`, or
    /// `column:<s'>`.
    fn from_str(s: &str) -> Result<Self> {
        if let Ok(p) = s.parse::<Preset>() {
            return Ok(EnsembleChoice::Preset(p));
        }
        let lower = s.to_ascii_lowercase();
        if lower == "gaussian" {
            return Ok(EnsembleChoice::Custom(EnsembleKind::Gaussian));
        }
        if let Some(q) = lower.strip_prefix("sparse:") {
            let q: f64 = q
                .parse()
                .map_err(|e| Error::InvalidParam(format!("sparse:<q>: {e}")))?;
            return Ok(EnsembleChoice::Custom(EnsembleKind::SparseIid { q }));
        }
        if let Some(sp) = lower.strip_prefix("column:") {
            let s_prime: usize = sp
                .parse()
                .map_err(|e| Error::InvalidParam(format!("column:<s'>: {e}")))?;
            return Ok(EnsembleChoice::Custom(EnsembleKind::FixedColumnWeight {
                s_prime,
            }));
        }
        Err(Error::InvalidParam(format!(
            "unknown ensemble '{s}' (expected GM/SM/VSM/StM, gaussian, sparse:<q>, column:<s'>)"
        )))
    }
}

/// A k-sweep experiment over several ensembles.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub ensembles: Vec<EnsembleChoice>,
    pub k_values: Vec<usize>,
    pub votes: usize,
    pub runs: usize,
    pub split_fraction: f64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ensembles.is_empty() || self.k_values.is_empty() {
            return Err(Error::InvalidParam(
                "need at least one ensemble and one k".into(),
            ));
        }
        if self.votes == 0 || self.votes.is_multiple_of(2) {
            return Err(Error::InvalidParam(format!(
                "votes = {} must be odd for a tie-free binary majority",
                self.votes
            )));
        }
        if self.runs == 0 {
            return Err(Error::InvalidParam("runs must be at least 1".into()));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::InvalidParam(format!(
                "split fraction {} must lie in (0, 1)",
                self.split_fraction
            )));
        }
        if self.k_values.contains(&0) {
            return Err(Error::InvalidParam("k values must be positive".into()));
        }
        Ok(())
    }
}

/// Data fed to an experiment: a generator spec (fresh data every run) or an
/// already-loaded dataset (fresh split every run).
#[derive(Clone, Debug)]
pub enum DataSource {
    Synthetic(SyntheticSpec),
    Loaded(Dataset),
}

/// Mean accuracy per (ensemble, k).
#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyRow {
    pub ensemble: String,
    pub k: usize,
    pub mean_acc: f64,
    pub std_err: f64,
    pub runs: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AccuracyTable {
    pub rows: Vec<AccuracyRow>,
}

impl AccuracyTable {
    pub const CSV_SCHEMA: &'static str = "# schema: accuracy_table v1";
    pub const CSV_HEADER: &'static str = "ensemble,k,mean_acc,std_err,runs";

    pub fn get(&self, ensemble: &str, k: usize) -> Option<&AccuracyRow> {
        self.rows
            .iter()
            .find(|r| r.ensemble == ensemble && r.k == k)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(Self::CSV_SCHEMA);
        out.push('\n');
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.ensemble, r.k, r.mean_acc, r.std_err, r.runs
            ));
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<AccuracyTable> {
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') || t == Self::CSV_HEADER {
                continue;
            }
            let fields: Vec<&str> = t.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::Parse {
                    line: ln + 1,
                    msg: format!("expected 5 fields, got {}", fields.len()),
                });
            }
            let parse_f = |s: &str, what: &str| -> Result<f64> {
                s.parse().map_err(|e| Error::Parse {
                    line: ln + 1,
                    msg: format!("{what}: {e}"),
                })
            };
            rows.push(AccuracyRow {
                ensemble: fields[0].to_string(),
                k: fields[1].parse().map_err(|e| Error::Parse {
                    line: ln + 1,
                    msg: format!("k: {e}"),
                })?,
                mean_acc: parse_f(fields[2], "mean_acc")?,
                std_err: parse_f(fields[3], "std_err")?,
                runs: fields[4].parse().map_err(|e| Error::Parse {
                    line: ln + 1,
                    msg: format!("runs: {e}"),
                })?,
            });
        }
        Ok(AccuracyTable { rows })
    }
}

/// Per-run bookkeeping: the split fingerprint and, for each (ensemble, k)
/// evaluation, the fingerprint of the split that evaluation actually saw.
/// A paired design shows one distinct value per run.
#[derive(Clone, Debug)]
pub struct RunTrace {
    pub run: usize,
    pub split_hash: u64,
    pub eval_hashes: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub table: AccuracyTable,
    pub traces: Vec<RunTrace>,
}

struct SplitData {
    train_x: Array2<f64>,
    train_y: Vec<f64>,
    test_x: Array2<f64>,
    test_y: Vec<f64>,
    hash: u64,
}

/// Stratified split: per class, a seeded shuffle, then the first
/// ⌊fraction·n_c⌋ samples train and the rest test.
fn split_dataset(ds: &Dataset, fraction: f64, seed: u64) -> Result<SplitData> {
    let mut rng = rng::stream(seed, tag::SPLIT, 0);
    let labels = ds.class_labels();
    let mut train_idx: Vec<usize> = Vec::new();
    let mut test_idx: Vec<usize> = Vec::new();
    for label in &labels {
        let mut idx: Vec<usize> = (0..ds.n()).filter(|&i| ds.y[i] == *label).collect();
        idx.shuffle(&mut rng);
        let n_train = (fraction * idx.len() as f64).floor() as usize;
        if n_train == 0 || n_train == idx.len() {
            return Err(Error::InvalidParam(format!(
                "split fraction {fraction} leaves a class with an empty train or test side"
            )));
        }
        train_idx.extend_from_slice(&idx[..n_train]);
        test_idx.extend_from_slice(&idx[n_train..]);
    }
    let mut bytes = Vec::with_capacity(4 * (train_idx.len() + test_idx.len()) + 1);
    for &i in &train_idx {
        bytes.extend_from_slice(&(i as u32).to_le_bytes());
    }
    bytes.push(0xff);
    for &i in &test_idx {
        bytes.extend_from_slice(&(i as u32).to_le_bytes());
    }
    let take = |idx: &[usize]| -> (Array2<f64>, Vec<f64>) {
        let mut x = Array2::zeros((idx.len(), ds.dim()));
        let mut y = Vec::with_capacity(idx.len());
        for (r, &i) in idx.iter().enumerate() {
            x.row_mut(r).assign(&ds.x.row(i));
            y.push(ds.y[i]);
        }
        (x, y)
    };
    let (train_x, train_y) = take(&train_idx);
    let (test_x, test_y) = take(&test_idx);
    Ok(SplitData {
        train_x,
        train_y,
        test_x,
        test_y,
        hash: fnv1a64(&bytes),
    })
}

/// Unscaled projected images A = X·Rᵀ of the train and test blocks for one
/// matrix draw, evaluated at the largest k; smaller k values reuse the first
/// k columns. For families with iid entries the k-row prefix of a draw is
/// itself a draw of the k-row family, so the slice is distribution-exact.
struct VoteProjection {
    a_train: Array2<f64>,
    a_test: Array2<f64>,
}

fn project_vote(
    choice: &EnsembleChoice,
    k_max: usize,
    split: &SplitData,
    chol: Option<&Vec<f64>>,
    matrix_seed: u64,
) -> Result<VoteProjection> {
    let d = split.train_x.ncols();
    // Gaussian fast path: columns of X·Rᵀ are iid N(0, XXᵀ); sample them as
    // L·z with XXᵀ = LLᵀ instead of materializing R. Falls back to the
    // explicit matrix when the Cholesky factor is unavailable (degenerate
    // XXᵀ, e.g. duplicated noiseless samples).
    if matches!(choice.resolve(k_max, d, 0)?.kind, EnsembleKind::Gaussian) {
        if let Some(l) = chol {
            let n_all = split.train_x.nrows() + split.test_x.nrows();
            let mut rng = rng::stream(matrix_seed, tag::MATRIX, 1);
            let mut a_all = Array2::zeros((n_all, k_max));
            let mut z = vec![0.0; n_all];
            for col in 0..k_max {
                for zv in z.iter_mut() {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    *zv = g;
                }
                // a[:, col] = L z (lower-triangular product)
                for i in 0..n_all {
                    let mut acc = 0.0;
                    let row = &l[i * n_all..i * n_all + i + 1];
                    for (lv, zv) in row.iter().zip(&z) {
                        acc += lv * zv;
                    }
                    a_all[[i, col]] = acc;
                }
            }
            let n_train = split.train_x.nrows();
            let a_train = a_all.slice(ndarray::s![..n_train, ..]).to_owned();
            let a_test = a_all.slice(ndarray::s![n_train.., ..]).to_owned();
            return Ok(VoteProjection { a_train, a_test });
        }
    }
    let spec = choice.resolve(k_max, d, matrix_seed)?;
    let m = build_matrix(&spec)?;
    let (a_train, a_test) = match &m.storage {
        Storage::Dense(r) => (split.train_x.dot(&r.t()), split.test_x.dot(&r.t())),
        Storage::Sparse(c) => {
            let spmm = |x: &Array2<f64>| -> Array2<f64> {
                let n = x.nrows();
                let mut out = Array2::zeros((n, k_max));
                for (xi, mut oi) in x.rows().into_iter().zip(out.rows_mut()) {
                    let orow = oi.as_slice_mut().expect("row-major");
                    let xrow = xi.as_slice().expect("row-major");
                    for (j, &v) in xrow.iter().enumerate() {
                        if v == 0.0 {
                            continue;
                        }
                        for e in c.col_ptr[j]..c.col_ptr[j + 1] {
                            orow[c.row_idx[e] as usize] += c.values[e] * v;
                        }
                    }
                }
                out
            };
            (spmm(&split.train_x), spmm(&split.test_x))
        }
    };
    Ok(VoteProjection { a_train, a_test })
}

/// Evaluate one split: for every ensemble, draw `votes` matrices, project,
/// train, predict, and majority-vote, at every k. Returns percent-correct
/// per (ensemble index, k index), plus the split fingerprint per evaluation.
fn evaluate_split(
    split: &SplitData,
    ensembles: &[EnsembleChoice],
    k_values: &[usize],
    votes: usize,
    hyper: &SvmHyper,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<u64>)> {
    let k_max = *k_values.iter().max().expect("non-empty");
    let d = split.train_x.ncols();
    if k_max > d {
        return Err(Error::InvalidParam(format!(
            "projection dimension k = {k_max} exceeds data dimension d = {d}"
        )));
    }
    let n_test = split.test_x.nrows();
    // one Cholesky of the joint sample Gram per split, shared by all
    // Gaussian votes
    let needs_gaussian = ensembles.iter().any(|e| {
        matches!(
            e.resolve(k_max, d, 0).map(|s| s.kind),
            Ok(EnsembleKind::Gaussian)
        )
    });
    let chol = if needs_gaussian {
        let n_all = split.train_x.nrows() + n_test;
        let all = ndarray::concatenate![Axis(0), split.train_x.view(), split.test_x.view()];
        let sigma = all.dot(&all.t());
        cholesky(sigma.as_slice().expect("row-major"), n_all)
    } else {
        None
    };
    let mut accs = vec![vec![0.0; k_values.len()]; ensembles.len()];
    let mut eval_hashes = Vec::with_capacity(ensembles.len() * k_values.len());
    for (ei, choice) in ensembles.iter().enumerate() {
        // +1/-1 vote tallies per (k, test sample)
        let mut tallies = vec![vec![0i32; n_test]; k_values.len()];
        for vote in 0..votes {
            let matrix_seed = rng::derive(
                rng::derive(seed, tag::VOTE, vote as u64),
                tag::MATRIX,
                ei as u64,
            );
            // the fixed-column-weight family is not closed under row
            // slicing, so it is drawn fresh at each k; iid families are
            // drawn once at k_max and sliced
            let sliceable = !matches!(
                choice.resolve(k_max, d, 0)?.kind,
                EnsembleKind::FixedColumnWeight { .. }
            );
            let shared = if sliceable {
                Some(project_vote(
                    choice,
                    k_max,
                    split,
                    chol.as_ref(),
                    matrix_seed,
                )?)
            } else {
                None
            };
            for (ki, &k) in k_values.iter().enumerate() {
                let (a_train, a_test) = match &shared {
                    Some(p) => (
                        p.a_train.slice(ndarray::s![.., ..k]).to_owned(),
                        p.a_test.slice(ndarray::s![.., ..k]).to_owned(),
                    ),
                    None => {
                        let p = project_vote(
                            choice,
                            k,
                            split,
                            None,
                            rng::derive(matrix_seed, tag::MATRIX, ki as u64),
                        )?;
                        (p.a_train, p.a_test)
                    }
                };
                let scale = 1.0 / (k as f64).sqrt();
                let mut p_train = a_train * scale;
                let mut p_test = a_test * scale;
                let std = Standardizer::fit(&p_train.view());
                std.apply(&mut p_train);
                std.apply(&mut p_test);
                let model = train_svm(p_train.view(), &split.train_y, hyper)?;
                let preds = predict(&model, p_test.view())?;
                for (tally, pred) in tallies[ki].iter_mut().zip(&preds) {
                    *tally += if *pred > 0.0 { 1 } else { -1 };
                }
            }
        }
        for (ki, tally) in tallies.iter().enumerate() {
            let correct = tally
                .iter()
                .zip(&split.test_y)
                .filter(|(t, y)| (**t > 0) == (**y > 0.0))
                .count();
            accs[ei][ki] = 100.0 * correct as f64 / n_test as f64;
            eval_hashes.push(split.hash);
        }
    }
    Ok((accs, eval_hashes))
}

/// Majority-voted classification of `test` against `train` with `votes`
/// independent matrix draws at dimension `k`. Returns percent correct.
pub fn voted_classify(
    train: &Dataset,
    test: &Dataset,
    ensemble: &EnsembleChoice,
    k: usize,
    votes: usize,
    seed: u64,
) -> Result<f64> {
    if votes == 0 || votes.is_multiple_of(2) {
        return Err(Error::InvalidParam(format!("votes = {votes} must be odd")));
    }
    if train.dim() != test.dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("test dimension {}", train.dim()),
            got: format!("{}", test.dim()),
        });
    }
    train.validate_for_classification()?;
    let split = SplitData {
        train_x: train.x.clone(),
        train_y: train.y.clone(),
        test_x: test.x.clone(),
        test_y: test.y.clone(),
        hash: 0,
    };
    let (accs, _) = evaluate_split(
        &split,
        &[*ensemble],
        &[k],
        votes,
        &SvmHyper::default(),
        seed,
    )?;
    Ok(accs[0][0])
}

/// Narrow a multiclass dataset to a randomly chosen label pair, mapping the
/// smaller tag to −1 and the larger to +1.
fn narrow_to_pair(ds: &Dataset, seed: u64) -> Result<Dataset> {
    let labels = ds.class_labels();
    if labels.len() <= 2 {
        return Ok(ds.clone());
    }
    let mut rng = rng::stream(seed, tag::PAIR, 0);
    let i = rng.random_range(0..labels.len());
    let j = {
        let mut j = rng.random_range(0..labels.len() - 1);
        if j >= i {
            j += 1;
        }
        j
    };
    let (lo, hi) = (labels[i.min(j)], labels[i.max(j)]);
    let keep: Vec<usize> = (0..ds.n())
        .filter(|&r| ds.y[r] == lo || ds.y[r] == hi)
        .collect();
    let mut x = Array2::zeros((keep.len(), ds.dim()));
    let mut y = Vec::with_capacity(keep.len());
    for (r, &i) in keep.iter().enumerate() {
        x.row_mut(r).assign(&ds.x.row(i));
        y.push(if ds.y[i] == lo { -1.0 } else { 1.0 });
    }
    Ok(Dataset {
        x,
        y,
        meta: ds.meta.clone(),
    })
}

/// Run the full experiment: per run, draw (or re-split) the data once and
/// evaluate every ensemble at every k on that identical split, then average
/// across runs. Runs execute in parallel on derived seeds; accumulation is in
/// run order, so the outcome does not depend on scheduling.
pub fn run_experiment(cfg: &ExperimentConfig, source: &DataSource) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    if let DataSource::Synthetic(spec) = source {
        spec.validate()?;
    }
    if let DataSource::Loaded(ds) = source {
        ds.validate_for_classification()?;
    }
    let hyper = SvmHyper::default();
    let per_run: Result<Vec<(Vec<Vec<f64>>, RunTrace)>> = (0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            let run_seed = rng::derive(cfg.seed, tag::RUN, run as u64);
            let data = match source {
                DataSource::Synthetic(spec) => {
                    let mut s = *spec;
                    s.seed = rng::derive(run_seed, tag::DATA, 0);
                    synth::generate(&s)?
                }
                DataSource::Loaded(ds) => narrow_to_pair(ds, run_seed)?,
            };
            let split = split_dataset(&data, cfg.split_fraction, run_seed)?;
            let (accs, eval_hashes) = evaluate_split(
                &split,
                &cfg.ensembles,
                &cfg.k_values,
                cfg.votes,
                &hyper,
                run_seed,
            )?;
            Ok((
                accs,
                RunTrace {
                    run,
                    split_hash: split.hash,
                    eval_hashes,
                },
            ))
        })
        .collect();
    let per_run = per_run?;
    let d_label = match source {
        DataSource::Synthetic(spec) => spec.d,
        DataSource::Loaded(ds) => ds.dim(),
    };
    let mut rows = Vec::new();
    for (ei, choice) in cfg.ensembles.iter().enumerate() {
        for (ki, &k) in cfg.k_values.iter().enumerate() {
            let samples: Vec<f64> = per_run.iter().map(|(a, _)| a[ei][ki]).collect();
            let nf = samples.len() as f64;
            let mean = samples.iter().sum::<f64>() / nf;
            let std_err = if samples.len() > 1 {
                let var = samples.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (nf - 1.0);
                (var / nf).sqrt()
            } else {
                0.0
            };
            rows.push(AccuracyRow {
                ensemble: choice.label(d_label),
                k,
                mean_acc: mean,
                std_err,
                runs: samples.len(),
            });
        }
    }
    let traces = per_run.into_iter().map(|(_, t)| t).collect();
    Ok(ExperimentOutcome {
        table: AccuracyTable { rows },
        traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::DatasetMeta;
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn separable_pair_is_classified_with_aligned_weights() {
        let x = array![[1.0, 0.0], [-1.0, 0.0]];
        let y = vec![1.0, -1.0];
        let model = train_svm(x.view(), &y, &SvmHyper::default()).unwrap();
        let preds = predict(&model, x.view()).unwrap();
        assert_eq!(preds, vec![1.0, -1.0]);
        assert!(model.weights[0] > 0.0);
        assert!(model.weights[1].abs() < 1e-9 * model.weights[0]);
    }

    #[test]
    fn duplicated_dataset_gives_same_boundary() {
        // mean-hinge objective is invariant under duplication, and the batch
        // subgradient path is deterministic, so boundaries agree tightly
        let x = array![
            [1.2, 0.3, -0.4],
            [-0.9, 0.1, 0.8],
            [0.7, -1.1, 0.2],
            [-0.3, 0.9, -1.0]
        ];
        let y = vec![1.0, -1.0, 1.0, -1.0];
        let xdup = ndarray::concatenate![Axis(0), x.view(), x.view()];
        let ydup: Vec<f64> = y.iter().chain(y.iter()).copied().collect();
        let a = train_svm(x.view(), &y, &SvmHyper::default()).unwrap();
        let b = train_svm(xdup.view(), &ydup, &SvmHyper::default()).unwrap();
        let norm_a: f64 = a.weights.iter().map(|v| v * v).sum::<f64>().sqrt();
        let norm_b: f64 = b.weights.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (wa, wb) in a.weights.iter().zip(&b.weights) {
            assert!((wa / norm_a - wb / norm_b).abs() < 1e-6);
        }
        assert!((a.bias / norm_a - b.bias / norm_b).abs() < 1e-6);
    }

    #[test]
    fn primal_and_gram_paths_agree() {
        // n > k forces primal; the same data transposed into n <= k uses the
        // Gram path; run both on identical data by padding features
        let x = array![
            [1.0, 0.5],
            [-1.0, 0.2],
            [0.8, -0.7],
            [-0.6, -0.1],
            [0.3, 0.9],
            [-0.2, -0.8]
        ];
        let y = vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let primal = train_svm_primal(x.view(), &y, &SvmHyper::default()).unwrap();
        let gram = train_svm_gram(x.view(), &y, &SvmHyper::default()).unwrap();
        for (a, b) in primal.weights.iter().zip(&gram.weights) {
            assert_relative_eq!(a, b, max_relative = 1e-9, epsilon = 1e-12);
        }
        assert_relative_eq!(primal.bias, gram.bias, max_relative = 1e-9, epsilon = 1e-12);
    }

    #[test]
    fn random_labels_train_without_error() {
        let mut rng = rng::stream(5, 77, 0);
        let x = Array2::from_shape_fn((200, 10), |_| rng.random::<f64>() * 2.0 - 1.0);
        let y: Vec<f64> = (0..200)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let model = train_svm(x.view(), &y, &SvmHyper::default()).unwrap();
        assert!(model.epochs_run <= 100);
        assert!(model.trained);
        // objective trace is non-increasing by construction
        for pair in model.objective_trace.windows(2) {
            assert!(pair[1] <= pair[0]);
        }
    }

    #[test]
    fn svm_input_validation() {
        let x = array![[1.0, 0.0], [f64::NAN, 1.0]];
        assert!(train_svm(x.view(), &[1.0, -1.0], &SvmHyper::default()).is_err());
        let x = array![[1.0, 0.0], [0.5, 1.0]];
        assert!(matches!(
            train_svm(x.view(), &[1.0, 1.0], &SvmHyper::default()),
            Err(Error::SingleClass)
        ));
        assert!(train_svm(x.view(), &[1.0], &SvmHyper::default()).is_err());
    }

    #[test]
    fn predict_resolves_zero_to_positive() {
        let model = SvmModel {
            weights: vec![0.0, 0.0],
            bias: 0.0,
            hyper: SvmHyper::default(),
            objective: 0.0,
            objective_trace: vec![],
            epochs_run: 0,
            trained: true,
        };
        let x = array![[3.0, -2.0]];
        assert_eq!(predict(&model, x.view()).unwrap(), vec![1.0]);
        assert!(predict(&model, array![[1.0, 2.0, 3.0]].view()).is_err());
        let untrained = SvmModel {
            trained: false,
            ..model
        };
        assert!(predict(&untrained, x.view()).is_err());
    }

    fn noiseless_pair(d: usize, d_f: usize, n: usize, seed: u64) -> (Dataset, Dataset) {
        let spec = SyntheticSpec {
            d,
            d_f,
            sigma_f: 0.0,
            sigma_r: 0.0,
            n_per_class: n,
            seed,
        };
        let ds = synth::generate(&spec).unwrap();
        let split = split_dataset(&ds, 0.5, seed).unwrap();
        let train = Dataset {
            x: split.train_x,
            y: split.train_y,
            meta: DatasetMeta::Memory,
        };
        let test = Dataset {
            x: split.test_x,
            y: split.test_y,
            meta: DatasetMeta::Memory,
        };
        (train, test)
    }

    #[test]
    fn noiseless_data_classifies_perfectly() {
        let (train, test) = noiseless_pair(100, 50, 5, 3);
        for choice in [
            EnsembleChoice::Preset(Preset::Gm),
            EnsembleChoice::Preset(Preset::Stm),
        ] {
            let acc = voted_classify(&train, &test, &choice, 10, 5, 9).unwrap();
            assert_eq!(acc, 100.0, "{choice:?}");
        }
    }

    #[test]
    fn votes_must_be_odd() {
        let (train, test) = noiseless_pair(20, 10, 3, 1);
        let choice = EnsembleChoice::Preset(Preset::Gm);
        assert!(voted_classify(&train, &test, &choice, 5, 4, 0).is_err());
        assert!(voted_classify(&train, &test, &choice, 5, 1, 0).is_ok());
    }

    #[test]
    fn ensemble_choice_parsing() {
        assert_eq!(
            "StM".parse::<EnsembleChoice>().unwrap(),
            EnsembleChoice::Preset(Preset::Stm)
        );
        assert_eq!(
            "sparse:2.5".parse::<EnsembleChoice>().unwrap(),
            EnsembleChoice::Custom(EnsembleKind::SparseIid { q: 2.5 })
        );
        assert_eq!(
            "column:2".parse::<EnsembleChoice>().unwrap(),
            EnsembleChoice::Custom(EnsembleKind::FixedColumnWeight { s_prime: 2 })
        );
        assert_eq!(
            "gaussian".parse::<EnsembleChoice>().unwrap(),
            EnsembleChoice::Custom(EnsembleKind::Gaussian)
        );
        assert!("nope".parse::<EnsembleChoice>().is_err());
    }

    fn small_cfg(seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            ensembles: vec![
                EnsembleChoice::Preset(Preset::Gm),
                EnsembleChoice::Preset(Preset::Stm),
            ],
            k_values: vec![10, 20],
            votes: 3,
            runs: 4,
            split_fraction: 0.5,
            seed,
        }
    }

    #[test]
    fn experiment_is_deterministic_and_paired() {
        let spec = SyntheticSpec {
            d: 40,
            d_f: 20,
            sigma_f: 1.0,
            sigma_r: 1.0,
            n_per_class: 10,
            seed: 0,
        };
        let cfg = small_cfg(11);
        let a = run_experiment(&cfg, &DataSource::Synthetic(spec)).unwrap();
        let b = run_experiment(&cfg, &DataSource::Synthetic(spec)).unwrap();
        assert_eq!(a.table, b.table);
        assert_eq!(a.table.rows.len(), 4);
        for trace in &a.traces {
            assert_eq!(trace.eval_hashes.len(), 4);
            assert!(trace.eval_hashes.iter().all(|&h| h == trace.split_hash));
        }
        // distinct runs draw distinct splits
        assert_ne!(a.traces[0].split_hash, a.traces[1].split_hash);
        for row in &a.table.rows {
            assert!((0.0..=100.0).contains(&row.mean_acc));
            assert_eq!(row.runs, 4);
        }
    }

    #[test]
    fn experiment_on_noiseless_data_is_perfect() {
        let spec = SyntheticSpec {
            d: 64,
            d_f: 32,
            sigma_f: 0.0,
            sigma_r: 0.0,
            n_per_class: 6,
            seed: 0,
        };
        let cfg = ExperimentConfig {
            ensembles: Preset::ALL
                .iter()
                .map(|p| EnsembleChoice::Preset(*p))
                .collect(),
            k_values: vec![64],
            votes: 1,
            runs: 1,
            split_fraction: 0.5,
            seed: 5,
        };
        let out = run_experiment(&cfg, &DataSource::Synthetic(spec)).unwrap();
        for row in &out.table.rows {
            assert_eq!(row.mean_acc, 100.0, "{}", row.ensemble);
        }
    }

    #[test]
    fn experiment_rejects_oversized_k() {
        let spec = SyntheticSpec {
            d: 16,
            d_f: 8,
            sigma_f: 1.0,
            sigma_r: 1.0,
            n_per_class: 4,
            seed: 0,
        };
        let cfg = ExperimentConfig {
            k_values: vec![32],
            ..small_cfg(0)
        };
        assert!(run_experiment(&cfg, &DataSource::Synthetic(spec)).is_err());
    }

    #[test]
    fn experiment_config_validation() {
        let mut cfg = small_cfg(0);
        cfg.votes = 4;
        assert!(cfg.validate().is_err());
        cfg.votes = 3;
        cfg.runs = 0;
        assert!(cfg.validate().is_err());
        cfg.runs = 1;
        cfg.split_fraction = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn accuracy_table_csv_round_trip() {
        let table = AccuracyTable {
            rows: vec![
                AccuracyRow {
                    ensemble: "GM".into(),
                    k: 50,
                    mean_acc: 64.1234567,
                    std_err: 0.7890123,
                    runs: 500,
                },
                AccuracyRow {
                    ensemble: "StM".into(),
                    k: 100,
                    mean_acc: 68.0,
                    std_err: 0.5,
                    runs: 500,
                },
            ],
        };
        let text = table.to_csv();
        assert!(text.starts_with(AccuracyTable::CSV_SCHEMA));
        let back = AccuracyTable::parse_csv(&text).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn multiclass_source_narrows_to_pairs() {
        // three classes of clearly separated points
        let mut x = Array2::zeros((12, 4));
        let mut y = Vec::new();
        for c in 0..3 {
            for i in 0..4 {
                x[[c * 4 + i, c]] = 10.0;
                x[[c * 4 + i, 3]] = i as f64 * 0.1;
            }
            y.extend(std::iter::repeat_n(c as f64, 4));
        }
        let ds = Dataset {
            x,
            y,
            meta: DatasetMeta::Memory,
        };
        let narrowed = narrow_to_pair(&ds, 3).unwrap();
        assert_eq!(narrowed.n(), 8);
        assert_eq!(narrowed.class_labels(), vec![-1.0, 1.0]);
        let cfg = ExperimentConfig {
            ensembles: vec![EnsembleChoice::Preset(Preset::Stm)],
            k_values: vec![4],
            votes: 1,
            runs: 3,
            split_fraction: 0.5,
            seed: 2,
        };
        let out = run_experiment(&cfg, &DataSource::Loaded(ds)).unwrap();
        assert_eq!(out.table.rows.len(), 1);
    }

    #[test]
    fn gaussian_fast_path_matches_law() {
        // sample covariance of the implicit projection columns approaches
        // the data Gram matrix
        let mut rng = rng::stream(31, 1, 0);
        let train_x = Array2::from_shape_fn((4, 30), |_| rng.random::<f64>() - 0.5);
        let test_x = Array2::from_shape_fn((2, 30), |_| rng.random::<f64>() - 0.5);
        let split = SplitData {
            train_x: train_x.clone(),
            train_y: vec![1.0, 1.0, -1.0, -1.0],
            test_x: test_x.clone(),
            test_y: vec![1.0, -1.0],
            hash: 0,
        };
        let all = ndarray::concatenate![Axis(0), train_x.view(), test_x.view()];
        let sigma = all.dot(&all.t());
        let l = cholesky(sigma.as_slice().unwrap(), 6).unwrap();
        let choice = EnsembleChoice::Preset(Preset::Gm);
        let p = project_vote(&choice, 30, &split, Some(&l), 7).unwrap();
        let a = ndarray::concatenate![Axis(0), p.a_train.view(), p.a_test.view()];
        // [cov of columns]_01 ~= sigma_01 within Monte Carlo tolerance
        let n_cols = 30.0;
        for (i, j) in [(0, 0), (0, 1), (3, 5)] {
            let mut acc = 0.0;
            for c in 0..30 {
                acc += a[[i, c]] * a[[j, c]];
            }
            let emp = acc / n_cols;
            let expect = sigma[[i, j]];
            let scale = (sigma[[i, i]] * sigma[[j, j]]).sqrt();
            assert!(
                (emp - expect).abs() < 4.0 * scale / n_cols.sqrt(),
                "cov[{i},{j}] = {emp} vs {expect}"
            );
        }
    }
}
