//! Closed-form evaluators: distortion tail bounds for the sparse family,
//! expected projected inter-class separation for sparse and Gaussian rows,
//! the sufficient condition under which the single-sample row wins for noisy
//! differences, and the feature-hit ratio maximized by the one-nonzero-per-
//! column construction.
//!
//! Everything here is a pure function; the matching simulation or enumeration
//! ground truth lives in [`crate::oracle`].

use crate::numeric::{ln_binomial, normal_cdf};
use crate::{Error, Result};

/// Difference-vector model: coordinates are `±x` with equiprobable sign and
/// `x ~ N(mu, sigma^2)`, restricted to the `d_f` feature coordinates out of
/// `d`. `sigma = 0` degenerates to the two-point `±mu` model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignalModel {
    pub d: usize,
    pub d_f: usize,
    pub mu: f64,
    pub sigma: f64,
}

impl SignalModel {
    pub fn new(d: usize, d_f: usize, mu: f64, sigma: f64) -> Result<Self> {
        if d_f == 0 || d_f > d {
            return Err(Error::InvalidParam(format!(
                "feature count d_f = {d_f} must lie in [1, d = {d}]"
            )));
        }
        if !(mu > 0.0) {
            return Err(Error::InvalidParam(format!("mu = {mu} must be positive")));
        }
        if !(sigma >= 0.0) {
            return Err(Error::InvalidParam(format!(
                "sigma = {sigma} must be non-negative"
            )));
        }
        Ok(Self { d, d_f, mu, sigma })
    }

    /// Redundant-coordinate count d − d_f.
    pub fn d_r(&self) -> usize {
        self.d - self.d_f
    }

    /// Sign-flip probability Φ(−μ/σ); zero in the two-point model σ = 0.
    pub fn epsilon_sign(&self) -> f64 {
        if self.sigma == 0.0 {
            0.0
        } else {
            normal_cdf(-self.mu / self.sigma)
        }
    }
}

/// Parameters of the distortion tail bounds for the `{0, ±√q}` family with
/// `q = k/s` and `s` nonzeros per row. `s` may be fractional so that a target
/// fourth moment `B = k/s` (e.g. the Gaussian's B = 3) can be expressed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JlBoundParams {
    pub k: usize,
    pub s: f64,
    pub eps: f64,
}

impl JlBoundParams {
    pub fn new(k: usize, s: f64, eps: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParam("k must be positive".into()));
        }
        if !(s >= 1.0 && s <= k as f64) {
            return Err(Error::InvalidParam(format!(
                "row weight s = {s} must lie in [1, k = {k}]"
            )));
        }
        Ok(Self { k, s, eps })
    }

    /// Express the bound through a per-entry fourth moment `b` instead of a
    /// row weight (`s = k/b`).
    pub fn from_fourth_moment(k: usize, b: f64, eps: f64) -> Result<Self> {
        if !(b >= 1.0) {
            return Err(Error::InvalidParam(format!(
                "fourth moment b = {b} must be >= 1"
            )));
        }
        Self::new(k, k as f64 / b, eps)
    }

    /// Fourth moment B = k/s of a matrix entry.
    pub fn fourth_moment(&self) -> f64 {
        self.k as f64 / self.s
    }

    /// Sub-Gaussian scale bound L² = 2k/s entering the upper-tail event.
    pub fn l_squared(&self) -> f64 {
        2.0 * self.k as f64 / self.s
    }
}

/// Upper-tail bound together with the scale L² of the event it bounds,
/// Pr(‖v'‖² ≥ (1+ε) L² ‖v‖²).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpperTailBound {
    pub bound: f64,
    pub l_squared: f64,
}

/// Bound on Pr(‖v'‖² ≤ (1−ε)‖v‖²): exp(−(ε²−ε³)k / (2(B+1))).
///
/// Monotone increasing in B at fixed (k, ε): sparser rows give a weaker
/// guarantee.
pub fn jl_lower_tail_bound(p: &JlBoundParams) -> Result<f64> {
    if !(p.eps > 0.0 && p.eps < 1.0) {
        return Err(Error::InvalidParam(format!(
            "distortion eps = {} must lie in (0, 1)",
            p.eps
        )));
    }
    let b = p.fourth_moment();
    let e = p.eps;
    Ok((-(e * e - e * e * e) * p.k as f64 / (2.0 * (b + 1.0))).exp())
}

/// Bound on Pr(‖v'‖² ≥ (1+ε) L² ‖v‖²): min of ((1+ε)e^{−ε})^{k/2} and
/// e^{−(ε²−ε³)k/4}. The first form is the tighter one for ε ∈ (0, 1).
pub fn jl_upper_tail_bound(p: &JlBoundParams) -> Result<UpperTailBound> {
    if !(p.eps > 0.0) {
        return Err(Error::InvalidParam(format!(
            "distortion eps = {} must be positive",
            p.eps
        )));
    }
    let e = p.eps;
    let k = p.k as f64;
    let first = (0.5 * k * ((1.0 + e).ln() - e)).exp();
    let second = (-(e * e - e * e * e) * k / 4.0).exp();
    Ok(UpperTailBound {
        bound: first.min(second),
        l_squared: p.l_squared(),
    })
}

/// Normalized expected separation E|⟨r, z⟩| / (μ√d) of a row with `s`
/// nonzeros `±√(d/s)` against a two-point `±μ` difference:
/// 2·√(1/s)·2^{−s}·⌈s/2⌉·C(s, ⌈s/2⌉).
///
/// Evaluated in log space so `s` up to 1e6 neither overflows nor underflows;
/// `s = 1` returns exactly 1.
pub fn normalized_abs_dot_sparse(s: usize) -> f64 {
    assert!(s >= 1, "row weight s must be positive");
    if s == 1 {
        return 1.0;
    }
    let half = s.div_ceil(2) as u64;
    let ln = std::f64::consts::LN_2 * (1.0 - s as f64) - 0.5 * (s as f64).ln()
        + (half as f64).ln()
        + ln_binomial(s as u64, half);
    ln.exp()
}

/// E|⟨r, z⟩| for the two-point model: 2μ√(d/s)·2^{−s}·⌈s/2⌉·C(s, ⌈s/2⌉).
pub fn expected_abs_dot_sparse(d: usize, s: usize, mu: f64) -> Result<f64> {
    if s < 1 || s > d {
        return Err(Error::InvalidParam(format!(
            "row weight s = {s} must lie in [1, d = {d}]"
        )));
    }
    if !(mu > 0.0) {
        return Err(Error::InvalidParam(format!("mu = {mu} must be positive")));
    }
    Ok(mu * (d as f64).sqrt() * normalized_abs_dot_sparse(s))
}

/// E|⟨r, z⟩| for a standard-normal row against a two-point ±μ difference:
/// μ√(2d/π). This is also the s → ∞ limit of [`expected_abs_dot_sparse`].
pub fn expected_abs_dot_gaussian(d: usize, mu: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidParam("d must be positive".into()));
    }
    if !(mu > 0.0) {
        return Err(Error::InvalidParam(format!("mu = {mu} must be positive")));
    }
    Ok(mu * (2.0 * d as f64 / std::f64::consts::PI).sqrt())
}

/// E|x| for x ~ N(μ, σ²): √(2/π)·σ·e^{−μ²/(2σ²)} + μ·(1 − 2Φ(−μ/σ)).
/// Degenerates to μ at σ = 0.
pub fn expected_abs_truncnorm(mu: f64, sigma: f64) -> Result<f64> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidParam(format!(
            "sigma = {sigma} must be non-negative"
        )));
    }
    if sigma == 0.0 {
        return Ok(mu);
    }
    let ratio = mu / sigma;
    Ok(
        (2.0 / std::f64::consts::PI).sqrt() * sigma * (-0.5 * ratio * ratio).exp()
            + mu * (1.0 - 2.0 * normal_cdf(-ratio)),
    )
}

/// E|⟨r, z⟩| for a row with `s` nonzeros `±√(d/s)` against the mixture model
/// z = ±x, x ~ N(μ, σ²):
///
/// √(d/s) · Σ_{i=0..s} 2^{−s} C(s,i) ·
///   [ √(2s/π)·σ·e^{−(s−2i)²μ²/(2sσ²)} + μ|s−2i|·(1 − 2Φ(−|s−2i|μ/(√s·σ))) ]
///
/// Binomial weights are formed in log space; σ = 0 reduces exactly to
/// [`expected_abs_dot_sparse`].
pub fn expected_abs_dot_mixture(d: usize, s: usize, model: &SignalModel) -> Result<f64> {
    if s < 1 || s > d {
        return Err(Error::InvalidParam(format!(
            "row weight s = {s} must lie in [1, d = {d}]"
        )));
    }
    let (mu, sigma) = (model.mu, model.sigma);
    if sigma == 0.0 {
        return expected_abs_dot_sparse(d, s, mu);
    }
    if s == 1 {
        return Ok((d as f64).sqrt() * expected_abs_truncnorm(mu, sigma)?);
    }
    let sf = s as f64;
    let ln2 = std::f64::consts::LN_2;
    let gauss_coef = (2.0 * sf / std::f64::consts::PI).sqrt() * sigma;
    let mut sum = 0.0;
    for i in 0..=s {
        let ln_w = ln_binomial(s as u64, i as u64) - sf * ln2;
        if ln_w < -745.0 {
            continue; // weight underflows to zero
        }
        let a = (sf - 2.0 * i as f64).abs();
        let term = gauss_coef * (-(a * a) * mu * mu / (2.0 * sf * sigma * sigma)).exp()
            + mu * a * (1.0 - 2.0 * normal_cdf(-a * mu / (sf.sqrt() * sigma)));
        sum += ln_w.exp() * term;
    }
    Ok((d as f64 / sf).sqrt() * sum)
}

/// Outcome of the sufficient condition for the s = 1 row to dominate all
/// s > 1 rows under the mixture model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lemma4Check {
    pub holds: bool,
    pub lhs: f64,
}

/// Sufficient condition
/// (9/8)^{3/2}·[√(2/π) + (1+√3/4)·(2/π)·(σ/μ)] + 2Φ(−μ/σ) ≤ 1.
///
/// The condition is sufficient only; the true σ/μ threshold is larger.
pub fn lemma4_sufficient_condition(model: &SignalModel) -> Result<Lemma4Check> {
    let (mu, sigma) = (model.mu, model.sigma);
    if !(mu > 0.0 && sigma > 0.0) {
        return Err(Error::InvalidParam(
            "lemma4 condition needs mu > 0 and sigma > 0".into(),
        ));
    }
    let pi = std::f64::consts::PI;
    let lhs = (9.0f64 / 8.0).powf(1.5)
        * ((2.0 / pi).sqrt() + (1.0 + 3.0f64.sqrt() / 4.0) * (2.0 / pi) * (sigma / mu))
        + 2.0 * normal_cdf(-mu / sigma);
    Ok(Lemma4Check {
        holds: lhs <= 1.0,
        lhs,
    })
}

/// Validate the fixed-column-weight hit parameters and return the integer
/// row weight w = s'·d/k.
fn validate_hit_params(d: usize, d_f: usize, k: usize, s_prime: usize) -> Result<usize> {
    if k == 0 || d == 0 {
        return Err(Error::InvalidParam("k and d must be positive".into()));
    }
    if s_prime < 1 || s_prime > k {
        return Err(Error::InvalidParam(format!(
            "column weight s' = {s_prime} must lie in [1, k = {k}]"
        )));
    }
    if !(s_prime * d).is_multiple_of(k) {
        return Err(Error::NonIntegerRowWeight {
            sprime: s_prime,
            d,
            k,
        });
    }
    let w = s_prime * d / k;
    if w > d {
        return Err(Error::InvalidParam(format!(
            "row weight w = {w} exceeds d = {d}"
        )));
    }
    if d_f < 2 || d_f > d {
        return Err(Error::InvalidParam(format!(
            "feature count d_f = {d_f} must lie in [2, d = {d}]"
        )));
    }
    let d_r = d - d_f;
    if w >= 1 && d_r + 1 < w {
        return Err(Error::InvalidParam(format!(
            "redundant count d_r = {d_r} must be at least w - 1 = {}",
            w - 1
        )));
    }
    Ok(w)
}

/// Pr(row hits exactly one feature) / Pr(row hits two or more features) for
/// a row with w = s'·d/k uniformly placed nonzeros:
///
/// C(d_f,1)·C(d_r,w−1) / (C(d,w) − C(d_r,w) − C(d_f,1)·C(d_r,w−1))
///
/// The denominator is accumulated as the positive hypergeometric series
/// Σ_{m≥2} C(d_f,m)·C(d_r,w−m)/C(d,w), which avoids the cancellation the
/// direct difference would suffer when the ratio is large. Returns +∞ when no
/// placement can hit two features (w = 1, or the series is empty).
pub fn feature_hit_ratio(d: usize, d_f: usize, k: usize, s_prime: usize) -> Result<f64> {
    let w = validate_hit_params(d, d_f, k, s_prime)?;
    let d_r = d - d_f;
    let ln_total = ln_binomial(d as u64, w as u64);
    let p1 = ((d_f as f64).ln() + ln_binomial(d_r as u64, (w - 1) as u64) - ln_total).exp();
    let mut p_ge2 = 0.0;
    for m in 2..=w.min(d_f) {
        if w - m > d_r {
            continue;
        }
        p_ge2 += (ln_binomial(d_f as u64, m as u64) + ln_binomial(d_r as u64, (w - m) as u64)
            - ln_total)
            .exp();
    }
    if p_ge2 == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(p1 / p_ge2)
}

/// Expected feature-hit count E‖r^f‖₀ = (s'·d/k)·(d_f/d) = s'·d_f/k.
pub fn expected_feature_hits(d: usize, d_f: usize, k: usize, s_prime: usize) -> Result<f64> {
    validate_hit_params(d, d_f, k, s_prime)?;
    Ok(s_prime as f64 * d_f as f64 / k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const SQRT_2_OVER_PI: f64 = 0.7978845608028654;

    #[test]
    fn lower_tail_bound_frozen_values() {
        // B = 1 (s = k): exp(-(0.25 - 0.125)*100/4)
        let p = JlBoundParams::new(100, 100.0, 0.5).unwrap();
        assert_relative_eq!(
            jl_lower_tail_bound(&p).unwrap(),
            0.043936933623407417,
            max_relative = 1e-14
        );
        // B = 100 (s = 1): exp(-12.5/202)
        let p = JlBoundParams::new(100, 1.0, 0.5).unwrap();
        assert_relative_eq!(
            jl_lower_tail_bound(&p).unwrap(),
            0.93999456267904489,
            max_relative = 1e-14
        );
    }

    #[test]
    fn lower_tail_bound_orders_by_sparsity() {
        // s = k (densest) gives a strictly smaller bound than s = 1 (sparsest)
        let dense = jl_lower_tail_bound(&JlBoundParams::new(100, 100.0, 0.5).unwrap()).unwrap();
        let sparse = jl_lower_tail_bound(&JlBoundParams::new(100, 1.0, 0.5).unwrap()).unwrap();
        assert!(dense < sparse);
    }

    #[test]
    fn lower_tail_bound_monotonicity() {
        // increasing in B at fixed k, eps
        let mut prev = 0.0;
        for b in [1.0, 2.0, 3.0, 10.0, 50.0, 100.0] {
            let v = jl_lower_tail_bound(&JlBoundParams::from_fourth_moment(100, b, 0.3).unwrap())
                .unwrap();
            assert!(v > prev, "bound must increase with B");
            prev = v;
        }
        // decreasing in k at fixed B
        let mut prev = 1.0;
        for k in [10, 20, 50, 100, 500] {
            let v = jl_lower_tail_bound(&JlBoundParams::from_fourth_moment(k, 3.0, 0.3).unwrap())
                .unwrap();
            assert!(v < prev, "bound must decrease with k");
            prev = v;
        }
    }

    #[test]
    fn lower_tail_bound_rejects_bad_eps() {
        let p = JlBoundParams::new(10, 2.0, 0.0);
        assert!(p.is_ok());
        assert!(jl_lower_tail_bound(&p.unwrap()).is_err());
        assert!(jl_lower_tail_bound(&JlBoundParams::new(10, 2.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn upper_tail_bound_frozen_value() {
        // ((1.5)·e^{-0.5})^{50} — evaluated independently to 17 digits
        let p = JlBoundParams::new(100, 4.0, 0.5).unwrap();
        let out = jl_upper_tail_bound(&p).unwrap();
        assert_relative_eq!(out.bound, 0.0088552516020668649, max_relative = 1e-13);
        assert_relative_eq!(out.l_squared, 50.0);
    }

    #[test]
    fn upper_tail_bound_limit_and_chain() {
        // eps -> 0+ drives the bound to 1
        let p = JlBoundParams::new(100, 4.0, 1e-9).unwrap();
        assert_relative_eq!(jl_upper_tail_bound(&p).unwrap().bound, 1.0, epsilon = 1e-6);
        // first form <= second form on (0, 1)
        for eps in [0.05, 0.2, 0.5, 0.8, 0.99] {
            for k in [1usize, 7, 100] {
                let p = JlBoundParams::new(k, 1.0, eps).unwrap();
                let first = (0.5 * k as f64 * ((1.0 + eps).ln() - eps)).exp();
                let second = (-(eps * eps - eps * eps * eps) * k as f64 / 4.0).exp();
                assert!(first <= second + 1e-15);
                assert_relative_eq!(
                    jl_upper_tail_bound(&p).unwrap().bound,
                    first,
                    max_relative = 1e-14
                );
            }
        }
        assert!(jl_upper_tail_bound(&JlBoundParams::new(10, 2.0, 0.0).unwrap()).is_err());
    }

    #[test]
    fn sparse_dot_small_s_closed_forms() {
        // s=1 is exact, s=2 and s=3 match hand evaluation
        assert_eq!(normalized_abs_dot_sparse(1), 1.0);
        assert_relative_eq!(
            normalized_abs_dot_sparse(2),
            std::f64::consts::FRAC_1_SQRT_2,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            normalized_abs_dot_sparse(3),
            0.86602540378443865,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            expected_abs_dot_sparse(1000, 1, 1.0).unwrap(),
            1000f64.sqrt(),
            max_relative = 0.0
        );
        assert_relative_eq!(
            expected_abs_dot_sparse(9, 2, 2.0).unwrap(),
            6.0 * 0.7071067811865475,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            expected_abs_dot_sparse(9, 3, 2.0).unwrap(),
            6.0 * 0.8660254037844386,
            max_relative = 1e-13
        );
    }

    #[test]
    fn sparse_dot_large_s_limit() {
        assert_relative_eq!(
            normalized_abs_dot_sparse(100_000),
            SQRT_2_OVER_PI,
            max_relative = 1e-5
        );
        assert_relative_eq!(
            normalized_abs_dot_sparse(1_000_000),
            SQRT_2_OVER_PI,
            max_relative = 1e-6
        );
        assert!(normalized_abs_dot_sparse(1_000_000).is_finite());
    }

    #[test]
    fn sparse_dot_parity_monotonicity_to_200() {
        let norm: Vec<f64> = (1..=201).map(normalized_abs_dot_sparse).collect();
        for s in (3..=199).step_by(2) {
            assert!(
                norm[s - 1] > norm[s + 1],
                "odd chain must decrease at s = {s}"
            );
            assert!(norm[s - 1] > SQRT_2_OVER_PI);
        }
        for s in (2..=198).step_by(2) {
            assert!(
                norm[s - 1] < norm[s + 1],
                "even chain must increase at s = {s}"
            );
            assert!(norm[s - 1] < SQRT_2_OVER_PI);
        }
    }

    #[test]
    fn sparse_dot_rejects_out_of_range_s() {
        assert!(expected_abs_dot_sparse(10, 0, 1.0).is_err());
        assert!(expected_abs_dot_sparse(10, 11, 1.0).is_err());
    }

    #[test]
    fn gaussian_dot_values() {
        assert_relative_eq!(
            expected_abs_dot_gaussian(1, 1.0).unwrap(),
            SQRT_2_OVER_PI,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            expected_abs_dot_gaussian(4, 1.0).unwrap(),
            2.0 * SQRT_2_OVER_PI,
            max_relative = 1e-14
        );
        // equals the large-s limit of the sparse closed form
        assert_relative_eq!(
            expected_abs_dot_gaussian(400, 2.5).unwrap(),
            2.5 * 20.0 * normalized_abs_dot_sparse(2_000_000),
            max_relative = 1e-5
        );
    }

    #[test]
    fn truncnorm_values() {
        assert_relative_eq!(
            expected_abs_truncnorm(0.0, 1.0).unwrap(),
            SQRT_2_OVER_PI,
            max_relative = 1e-14
        );
        assert_relative_eq!(expected_abs_truncnorm(5.0, 0.0).unwrap(), 5.0);
        assert_relative_eq!(
            expected_abs_truncnorm(1.0, 1.0).unwrap(),
            1.1666309411753726,
            max_relative = 1e-14
        );
        assert!(expected_abs_truncnorm(1.0, -1.0).is_err());
    }

    #[test]
    fn mixture_reduces_to_special_cases() {
        // sigma -> 0 recovers the two-point closed form for every s
        for s in [1usize, 2, 3, 7, 20] {
            let m = SignalModel::new(100, 100, 2.0, 0.0).unwrap();
            assert_eq!(
                expected_abs_dot_mixture(100, s, &m).unwrap(),
                expected_abs_dot_sparse(100, s, 2.0).unwrap()
            );
        }
        // s = 1 equals sqrt(d) * E|z|
        let m = SignalModel::new(100, 100, 3.0, 1.0).unwrap();
        assert_relative_eq!(
            expected_abs_dot_mixture(100, 1, &m).unwrap(),
            10.0 * expected_abs_truncnorm(3.0, 1.0).unwrap(),
            max_relative = 1e-14
        );
        // frozen value cross-checked by quadrature on the mixture density
        let m = SignalModel::new(100, 100, 3.0, 1.0).unwrap();
        assert_relative_eq!(
            expected_abs_dot_mixture(100, 4, &m).unwrap(),
            25.495888646572115,
            max_relative = 1e-13
        );
    }

    #[test]
    fn mixture_is_stable_for_large_s() {
        let m = SignalModel::new(1_000_000, 1_000_000, 1.0, 0.5).unwrap();
        let v = expected_abs_dot_mixture(1_000_000, 1_000_000, &m).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn lemma4_condition_limits() {
        // sigma/mu -> 0: lhs -> 27/(16 sqrt(pi)) < 1, condition holds
        let m = SignalModel::new(10, 10, 1.0, 1e-9).unwrap();
        let out = lemma4_sufficient_condition(&m).unwrap();
        assert!(out.holds);
        assert_relative_eq!(out.lhs, 0.95206992223683873, max_relative = 1e-8);
        // sigma = mu: well above 1
        let m = SignalModel::new(10, 10, 1.0, 1.0).unwrap();
        let out = lemma4_sufficient_condition(&m).unwrap();
        assert!(!out.holds);
        assert_relative_eq!(out.lhs, 2.3579569098777682, max_relative = 1e-13);
        assert!(lemma4_sufficient_condition(&SignalModel::new(10, 10, 1.0, 0.0).unwrap()).is_err());
    }

    #[test]
    fn hit_ratio_worked_instance() {
        // d=12, d_f=4, k=4, s'=1 -> w=3 -> 112/52
        let r = feature_hit_ratio(12, 4, 4, 1).unwrap();
        assert_relative_eq!(r, 112.0 / 52.0, max_relative = 1e-12);
    }

    #[test]
    fn hit_ratio_decreases_in_column_weight() {
        let r1 = feature_hit_ratio(12, 4, 4, 1).unwrap();
        let r2 = feature_hit_ratio(12, 4, 4, 2).unwrap();
        let r3 = feature_hit_ratio(12, 4, 4, 3).unwrap();
        assert!(r1 > r2 && r2 > r3);
    }

    #[test]
    fn hit_ratio_degenerate_and_errors() {
        // no redundancy and w = 1: one placement always hits exactly one feature
        assert_eq!(feature_hit_ratio(8, 8, 8, 1).unwrap(), f64::INFINITY);
        // non-integer row weight is rejected, not rounded
        assert!(matches!(
            feature_hit_ratio(10, 4, 4, 1),
            Err(Error::NonIntegerRowWeight { .. })
        ));
        // d_f below 2 has no two-hit event
        assert!(feature_hit_ratio(12, 1, 4, 1).is_err());
        // d_r < w - 1 rejected
        assert!(feature_hit_ratio(12, 11, 2, 1).is_err());
    }

    #[test]
    fn expected_hits_values() {
        assert_relative_eq!(expected_feature_hits(2000, 1000, 1000, 1).unwrap(), 1.0);
        assert_relative_eq!(expected_feature_hits(2000, 1000, 1000, 2).unwrap(), 2.0);
        assert_relative_eq!(expected_feature_hits(2000, 1000, 200, 1).unwrap(), 5.0);
    }
}
