//! Recovering `U` from many causes, and the overlap it destroys.
//!
//! `u_hat(a) = 1{S(a)/m > (p_A(0) + p_A(1))/2}` becomes exact as `m` grows,
//! which is the same event as the two latent classes putting their cause
//! vectors on opposite sides of the threshold: `P(A | U = 0)` and
//! `P(A | U = 1)` stop overlapping.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::binary::BinaryParams;
use crate::error::{Error, Result};

/// Midpoint `(p_A(0) + p_A(1)) / 2`.
pub fn decision_threshold(params: &BinaryParams) -> f64 {
    (params.p_a0() + params.p_a1()) / 2.0
}

/// Threshold classifier on the fraction of active causes. Ties go to 0.
/// Assumes `p_a1 > p_a0`.
pub fn u_hat(a: &[bool], params: &BinaryParams) -> bool {
    if a.is_empty() {
        return false;
    }
    let frac = a.iter().filter(|&&b| b).count() as f64 / a.len() as f64;
    frac > decision_threshold(params)
}

/// One projected draw of the causes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionSample {
    pub u: bool,
    /// `S(a) / m`.
    pub x1: f64,
    /// `a' v2` with `v2 = m^{-1/2}·(1, .., 1, -1, .., -1)`.
    pub x2: f64,
    pub u_hat: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionCloud {
    pub m: usize,
    /// Decision boundary `x1 = threshold`.
    pub boundary: f64,
    pub samples: Vec<ProjectionSample>,
}

impl ProjectionCloud {
    /// Fraction of samples on the wrong side of the boundary.
    pub fn separation_error(&self) -> f64 {
        let wrong = self.samples.iter().filter(|s| s.u != s.u_hat).count();
        wrong as f64 / self.samples.len() as f64
    }
}

/// Misclassification counts of `u_hat`, split by the true class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MisclassificationReport {
    pub m: usize,
    pub n: usize,
    pub n_u0: usize,
    pub n_u1: usize,
    /// Units with `U = 0` classified as 1.
    pub errors_u0: usize,
    /// Units with `U = 1` classified as 0.
    pub errors_u1: usize,
}

impl MisclassificationReport {
    /// Estimate of `P(u_hat(A) != U)`.
    pub fn rate(&self) -> f64 {
        (self.errors_u0 + self.errors_u1) as f64 / self.n as f64
    }

    /// Monte-Carlo standard error of [`rate`](Self::rate).
    pub fn standard_error(&self) -> f64 {
        let p = self.rate();
        (p * (1.0 - p) / self.n as f64).sqrt()
    }

    /// `P(u_hat = 1 | U = 0)`; NaN when no unit had `U = 0`.
    pub fn overlap_given_u0(&self) -> f64 {
        self.errors_u0 as f64 / self.n_u0 as f64
    }

    /// `P(u_hat = 0 | U = 1)`; NaN when no unit had `U = 1`.
    pub fn overlap_given_u1(&self) -> f64 {
        self.errors_u1 as f64 / self.n_u1 as f64
    }
}

/// Hoeffding bound `exp(-2 m ((p_a1 - p_a0)/2)^2)` on the per-class error.
pub fn hoeffding_bound(params: &BinaryParams, m: usize) -> f64 {
    let delta = (params.p_a1() - params.p_a0()) / 2.0;
    (-2.0 * m as f64 * delta * delta).exp()
}

fn draw_unit(rng: &mut ChaCha8Rng, params: &BinaryParams, m: usize) -> (bool, Vec<bool>) {
    let u = rng.random::<f64>() < params.pi_u();
    let p = params.p_a(usize::from(u));
    (u, (0..m).map(|_| rng.random::<f64>() < p).collect())
}

fn check_sizes(m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(format!("m and n must be positive (got m = {m}, n = {n})")));
    }
    Ok(())
}

/// Simulate `n` units with `m` causes and count classification errors.
pub fn misclassification_report(params: &BinaryParams, m: usize, n: usize, seed: u64) -> Result<MisclassificationReport> {
    check_sizes(m, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = MisclassificationReport { m, n, n_u0: 0, n_u1: 0, errors_u0: 0, errors_u1: 0 };
    for _ in 0..n {
        let (u, a) = draw_unit(&mut rng, params, m);
        let guess = u_hat(&a, params);
        if u {
            report.n_u1 += 1;
            report.errors_u1 += usize::from(!guess);
        } else {
            report.n_u0 += 1;
            report.errors_u0 += usize::from(guess);
        }
    }
    Ok(report)
}

/// Monte-Carlo estimate of `P(u_hat(A) != U)` at `m` causes. Only `pi_u`,
/// `p_a0` and `p_a1` of `params` are used.
pub fn misclassification_rate(params: &BinaryParams, m: usize, n: usize, seed: u64) -> Result<f64> {
    misclassification_report(params, m, n, seed).map(|r| r.rate())
}

/// Two-dimensional projections of sampled cause vectors. `m` must be even.
pub fn projection_cloud(params: &BinaryParams, m: usize, n: usize, seed: u64) -> Result<ProjectionCloud> {
    check_sizes(m, n)?;
    if !m.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("m must be even for the projection, got {m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let root = (m as f64).sqrt();
    let half = m / 2;
    let samples = (0..n)
        .map(|_| {
            let (u, a) = draw_unit(&mut rng, params, m);
            let ones = |bits: &[bool]| bits.iter().filter(|&&b| b).count() as f64;
            let x1 = ones(&a) / m as f64;
            let x2 = (ones(&a[..half]) - ones(&a[half..])) / root;
            ProjectionSample { u, x1, x2, u_hat: u_hat(&a, params) }
        })
        .collect();
    Ok(ProjectionCloud { m, boundary: decision_threshold(params), samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> BinaryParams {
        BinaryParams::with_logistic_outcome(6, 0.3, 0.1, 0.9, 0.5, 2.0).unwrap()
    }

    #[test]
    fn classifier_examples() {
        let p = params();
        assert!(u_hat(&[true, true, true, true, true, false], &p));
        assert!(!u_hat(&[false; 6], &p));
        // 3/6 = 0.5 sits exactly on the threshold.
        assert!(!u_hat(&[true, true, true, false, false, false], &p));
    }

    #[test]
    fn single_cause_rate_matches_exact_value() {
        let p = params();
        let exact = 0.3 * (1.0 - 0.9) + 0.7 * 0.1;
        let r = misclassification_report(&p, 1, 200_000, 9).unwrap();
        assert!((r.rate() - exact).abs() < 4.0 * r.standard_error(), "{} vs {exact}", r.rate());
    }

    #[test]
    fn cloud_rejects_odd_m_and_is_deterministic() {
        let p = params();
        assert!(projection_cloud(&p, 7, 10, 0).is_err());
        let a = projection_cloud(&p, 8, 300, 5).unwrap();
        assert_eq!(a, projection_cloud(&p, 8, 300, 5).unwrap());
        assert!(a.samples.iter().all(|s| (0.0..=1.0).contains(&s.x1)));
        assert_eq!(a.boundary, 0.5);
    }

    #[test]
    fn hoeffding_values() {
        let p = params();
        assert!((hoeffding_bound(&p, 2) - (-0.64f64).exp()).abs() < 1e-15);
        assert!(hoeffding_bound(&p, 128) < 1e-17);
    }
}
