//! Small numeric helpers shared across modules.

/// Neumaier-compensated accumulator. Accumulation order still matters for the
/// final bits, so callers that need scheduling-independent results must feed
/// it in a fixed order.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// ln C(n, k) via log-gamma.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// FNV-1a over raw bytes; used for split fingerprints in experiment traces.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Unblocked Cholesky of a symmetric positive-definite matrix (row-major
/// n×n). Returns the lower factor, or `None` if a pivot is not strictly
/// positive (the matrix is singular or indefinite).
pub fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for p in 0..j {
                s -= l[i * n + p] * l[j * n + p];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn compensated_sum_handles_cancellation() {
        let mut acc = CompensatedSum::default();
        acc.add(1e16);
        for _ in 0..10 {
            acc.add(1.0);
        }
        acc.add(-1e16);
        assert_eq!(acc.total(), 10.0);
    }

    #[test]
    fn normal_cdf_reference_points() {
        assert_relative_eq!(normal_cdf(0.0), 0.5, max_relative = 1e-15);
        assert_relative_eq!(normal_cdf(-1.0), 0.15865525393145705, max_relative = 1e-14);
        assert_relative_eq!(normal_cdf(1.0), 0.8413447460685429, max_relative = 1e-14);
        assert!(normal_cdf(-40.0) >= 0.0);
    }

    #[test]
    fn ln_binomial_matches_exact_values() {
        assert_relative_eq!(ln_binomial(5, 2).exp(), 10.0, max_relative = 1e-13);
        assert_relative_eq!(
            ln_binomial(50, 25).exp(),
            126410606437752.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn cholesky_recovers_factor() {
        // A = L L^T with L = [[2,0],[1,3]]
        let a = [4.0, 2.0, 2.0, 10.0];
        let l = cholesky(&a, 2).unwrap();
        assert_relative_eq!(l[0], 2.0);
        assert_relative_eq!(l[2], 1.0);
        assert_relative_eq!(l[3], 3.0);
        // singular matrix is rejected
        assert!(cholesky(&[1.0, 1.0, 1.0, 1.0], 2).is_none());
    }
}
