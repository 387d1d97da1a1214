//! Independent verification engines: Monte Carlo estimators for the expected
//! projected separation and the distortion tails, plus exhaustive support-set
//! enumeration for the feature-hit probabilities. These never call into the
//! closed forms they are used to check.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::ensembles::{build_matrix, EnsembleSpec};
use crate::numeric::CompensatedSum;
use crate::rng::{self, tag};
use crate::{Error, Result};

/// Samples per worker chunk. Chunk boundaries and per-chunk seeds are fixed,
/// so estimates do not depend on how chunks are scheduled across threads.
const CHUNK: usize = 1 << 14;

/// Mean estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonteCarloResult {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
    pub seed: u64,
}

/// Row-vector distribution for [`mc_abs_dot`].
#[derive(Clone, Copy, Debug)]
pub enum RowDist {
    /// `s` uniformly placed nonzeros of magnitude √(d/s), equiprobable signs.
    Sparse { s: usize },
    /// All d entries iid standard normal.
    Gaussian,
}

/// Difference-coordinate distribution: z = ±(μ + σ·g) with equiprobable sign
/// and g standard normal. `TwoPoint` is the σ = 0 case and consumes the RNG
/// identically, so the two modes coincide draw-for-draw when σ = 0.
#[derive(Clone, Copy, Debug)]
pub enum DiffDist {
    TwoPoint { mu: f64 },
    Mixture { mu: f64, sigma: f64 },
}

impl DiffDist {
    fn params(&self) -> (f64, f64) {
        match *self {
            DiffDist::TwoPoint { mu } => (mu, 0.0),
            DiffDist::Mixture { mu, sigma } => (mu, sigma),
        }
    }
}

/// Monte Carlo estimate of E|⟨r, z⟩| over `n` independent (r, z) pairs.
///
/// For sparse rows only the s coordinates in the row's support enter the
/// inner product; since the z coordinates are iid and independent of the
/// support placement, the support values are sampled directly: per term, a
/// row sign, a z sign, and a z magnitude.
pub fn mc_abs_dot(
    d: usize,
    row: RowDist,
    z: DiffDist,
    n: usize,
    seed: u64,
) -> Result<MonteCarloResult> {
    if n < 1000 {
        return Err(Error::InvalidParam(format!(
            "n = {n} is below the 1000-sample floor"
        )));
    }
    if let RowDist::Sparse { s } = row {
        if s < 1 || s > d {
            return Err(Error::InvalidParam(format!(
                "row weight s = {s} must lie in [1, d = {d}]"
            )));
        }
    }
    let (mu, sigma) = z.params();
    let n_chunks = n.div_ceil(CHUNK);
    let partials: Vec<(CompensatedSum, CompensatedSum)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(seed, tag::CHUNK, c as u64);
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(n);
            let mut sum = CompensatedSum::default();
            let mut sum_sq = CompensatedSum::default();
            for _ in lo..hi {
                let value = match row {
                    RowDist::Sparse { s } => {
                        let mag = (d as f64 / s as f64).sqrt();
                        let mut acc = 0.0;
                        for _ in 0..s {
                            let r_sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                            let z_sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                            let g: f64 = StandardNormal.sample(&mut rng);
                            acc += r_sign * z_sign * (mu + sigma * g);
                        }
                        (mag * acc).abs()
                    }
                    RowDist::Gaussian => {
                        let mut acc = 0.0;
                        for _ in 0..d {
                            let r: f64 = StandardNormal.sample(&mut rng);
                            let z_sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                            let g: f64 = StandardNormal.sample(&mut rng);
                            acc += r * z_sign * (mu + sigma * g);
                        }
                        acc.abs()
                    }
                };
                sum.add(value);
                sum_sq.add(value * value);
            }
            (sum, sum_sq)
        })
        .collect();
    let mut sum = CompensatedSum::default();
    let mut sum_sq = CompensatedSum::default();
    for (s, s2) in partials {
        sum.add(s.total());
        sum_sq.add(s2.total());
    }
    let nf = n as f64;
    let mean = sum.total() / nf;
    let var = (sum_sq.total() / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
    Ok(MonteCarloResult {
        mean,
        std_error: (var / nf).sqrt(),
        n,
        seed,
    })
}

/// Empirical distortion estimate for an ensemble: fresh matrices, random unit
/// vectors, and the distribution of ‖v'‖²/‖v‖².
#[derive(Clone, Copy, Debug)]
pub struct DistortionEstimate {
    /// Fraction of events with ‖v'‖² ≤ (1−ε)‖v‖².
    pub lower_tail: f64,
    /// Binomial standard error of `lower_tail`.
    pub lower_tail_se: f64,
    /// Sample variance of the ratio ‖v'‖²/‖v‖².
    pub ratio_var: f64,
    /// Standard error of `ratio_var` from the fourth central moment.
    pub ratio_var_se: f64,
    pub n: usize,
}

/// Estimate the lower distortion tail and the ratio variance over `n_draws`
/// fresh matrices × `n_vectors` random unit vectors each.
pub fn mc_jl_distortion(
    spec: &EnsembleSpec,
    n_vectors: usize,
    n_draws: usize,
    eps: f64,
    seed: u64,
) -> Result<DistortionEstimate> {
    spec.validate()?;
    if n_vectors * n_draws < 10_000 {
        return Err(Error::InvalidParam(format!(
            "n_vectors * n_draws = {} is below the 1e4 floor",
            n_vectors * n_draws
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParam(format!(
            "eps = {eps} must lie in (0, 1)"
        )));
    }
    let d = spec.d;
    let ratios: Vec<f64> = (0..n_draws)
        .into_par_iter()
        .flat_map_iter(|draw| {
            let mspec = EnsembleSpec {
                seed: rng::derive(seed, tag::MATRIX, draw as u64),
                ..*spec
            };
            let m = build_matrix(&mspec).expect("validated spec");
            let mut vrng = rng::stream(seed, tag::VECTOR, draw as u64);
            let mut out = Vec::with_capacity(n_vectors);
            for _ in 0..n_vectors {
                let mut v = vec![0.0; d];
                let mut norm_sq = 0.0;
                for x in v.iter_mut() {
                    let g: f64 = StandardNormal.sample(&mut vrng);
                    *x = g;
                    norm_sq += g * g;
                }
                let proj = m.project(&v).expect("length matches");
                let proj_sq: f64 = proj.iter().map(|p| p * p).sum();
                out.push(proj_sq / norm_sq);
            }
            out
        })
        .collect();
    let n = ratios.len();
    let nf = n as f64;
    let tail_count = ratios.iter().filter(|&&r| r <= 1.0 - eps).count();
    let lower_tail = tail_count as f64 / nf;
    let lower_tail_se = (lower_tail * (1.0 - lower_tail) / nf).sqrt();
    let mean = ratios.iter().sum::<f64>() / nf;
    let m2 = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / nf;
    let m4 = ratios.iter().map(|r| (r - mean).powi(4)).sum::<f64>() / nf;
    let ratio_var = m2 * nf / (nf - 1.0);
    let ratio_var_se = ((m4 - m2 * m2).max(0.0) / nf).sqrt();
    Ok(DistortionEstimate {
        lower_tail,
        lower_tail_se,
        ratio_var,
        ratio_var_se,
        n,
    })
}

/// Exact C(n, k) in 128-bit integer arithmetic; the independent route against
/// which the log-gamma evaluations are checked.
pub fn binomial_exact(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 1..=k {
        r = r * (n - k + i) as u128 / i as u128;
    }
    r
}

/// Exact hit-count partition of all C(d, w) support sets by how many of the
/// first `d_f` coordinates they touch. Counts are exact integers over the
/// common denominator `total`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HitCounts {
    pub c0: u64,
    pub c1: u64,
    pub c_ge2: u64,
    pub total: u64,
}

impl HitCounts {
    pub fn p0(&self) -> f64 {
        self.c0 as f64 / self.total as f64
    }

    pub fn p1(&self) -> f64 {
        self.c1 as f64 / self.total as f64
    }

    pub fn p_ge2(&self) -> f64 {
        self.c_ge2 as f64 / self.total as f64
    }

    /// p1 / p_ge2; +∞ when no support set hits two features.
    pub fn ratio(&self) -> f64 {
        if self.c_ge2 == 0 {
            f64::INFINITY
        } else {
            self.c1 as f64 / self.c_ge2 as f64
        }
    }
}

/// Walk every w-subset of {0, …, d−1} in lexicographic order (incremental
/// successor, no subsets materialized) and count those hitting 0, 1, or ≥2 of
/// the first `d_f` coordinates.
pub fn enumerate_feature_hits(d: usize, d_f: usize, w: usize) -> Result<HitCounts> {
    if w < 1 || w > d {
        return Err(Error::InvalidParam(format!(
            "row weight w = {w} must lie in [1, d = {d}]"
        )));
    }
    if d_f > d {
        return Err(Error::InvalidParam(format!(
            "d_f = {d_f} must not exceed d = {d}"
        )));
    }
    let size = binomial_exact(d as u64, w as u64);
    if size > 10_000_000 {
        return Err(Error::EnumerationTooLarge {
            d,
            w,
            size: size as f64,
        });
    }
    let mut comb: Vec<usize> = (0..w).collect();
    let (mut c0, mut c1, mut c_ge2, mut total) = (0u64, 0u64, 0u64, 0u64);
    loop {
        // elements are ascending, so the feature hits form a prefix
        let hits = comb.iter().take_while(|&&e| e < d_f).count();
        match hits {
            0 => c0 += 1,
            1 => c1 += 1,
            _ => c_ge2 += 1,
        }
        total += 1;
        // lexicographic successor
        let mut i = w;
        loop {
            if i == 0 {
                return finish(c0, c1, c_ge2, total, size);
            }
            i -= 1;
            if comb[i] < d - w + i {
                break;
            }
        }
        comb[i] += 1;
        for j in i + 1..w {
            comb[j] = comb[j - 1] + 1;
        }
    }

    fn finish(c0: u64, c1: u64, c_ge2: u64, total: u64, size: u128) -> Result<HitCounts> {
        debug_assert_eq!(total as u128, size);
        let _ = size;
        Ok(HitCounts {
            c0,
            c1,
            c_ge2,
            total,
        })
    }
}

/// One comparison row of a verification report, serialized as CSV
/// `name,params,estimate,std_error,closed_form,z_score`.
#[derive(Clone, Debug)]
pub struct ReportRow {
    pub name: String,
    pub params: String,
    pub estimate: f64,
    pub std_error: f64,
    pub closed_form: f64,
    pub z_score: f64,
}

impl ReportRow {
    pub const CSV_HEADER: &'static str = "name,params,estimate,std_error,closed_form,z_score";

    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.name, self.params, self.estimate, self.std_error, self.closed_form, self.z_score
        )
    }
}
