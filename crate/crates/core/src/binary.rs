//! All-binary model: `U ~ Bern(pi_u)`, `A_k | U ~ Bern(p_A(U))` iid for
//! `k = 1..m`, and `Y | U, A ~ Bern(p_Y(U, S(A)))` where `S(A)` is the number
//! of active causes.
//!
//! Given `A = a`, the observed data fix both margins of the 2x2 table
//! `P(U, Y | A = a)` but not its interior. The free cell `p11` ranges over
//! its Fréchet bounds and drives the causal parameter `P(Y = 1 | do(A = a))`
//! affinely, so the ignorance region is spanned by the two endpoints.

use crate::error::{Error, Result};

/// Standard logistic function.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `k * ln(p)` with the convention `0 * ln(0) = 0`.
pub(crate) fn xlogy(k: f64, p: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        k * p.ln()
    }
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be a probability in [0, 1], got {p}")))
    }
}

/// Parameters of the binary model. The outcome model depends on the causes
/// only through `S(a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryParams {
    pi_u: f64,
    p_a0: f64,
    p_a1: f64,
    /// `p_y[u][s] = P(Y = 1 | U = u, S(A) = s)`.
    p_y: [Vec<f64>; 2],
}

impl BinaryParams {
    /// `p_y0[s]` and `p_y1[s]` give `P(Y = 1 | U = u, S = s)` for `s = 0..=m`.
    pub fn new(pi_u: f64, p_a0: f64, p_a1: f64, p_y0: Vec<f64>, p_y1: Vec<f64>) -> Result<Self> {
        check_prob("pi_u", pi_u)?;
        check_prob("p_a0", p_a0)?;
        check_prob("p_a1", p_a1)?;
        if p_a0 == p_a1 {
            return Err(Error::InvalidArgument(
                "p_a0 and p_a1 must differ (the causes must carry information about U)".into(),
            ));
        }
        if p_y0.len() < 2 || p_y0.len() != p_y1.len() {
            return Err(Error::InvalidArgument(format!(
                "outcome tables must both have m + 1 >= 2 entries (got {} and {})",
                p_y0.len(),
                p_y1.len()
            )));
        }
        for (s, (&q0, &q1)) in p_y0.iter().zip(&p_y1).enumerate() {
            check_prob(&format!("p_y(0, {s})"), q0)?;
            check_prob(&format!("p_y(1, {s})"), q1)?;
        }
        Ok(Self { pi_u, p_a0, p_a1, p_y: [p_y0, p_y1] })
    }

    /// Outcome model `p_Y(u, s) = logistic(kappa·(s - m/2) + eta·u)`.
    pub fn with_logistic_outcome(
        m: usize,
        pi_u: f64,
        p_a0: f64,
        p_a1: f64,
        kappa: f64,
        eta: f64,
    ) -> Result<Self> {
        let half = m as f64 / 2.0;
        let row = |u: f64| -> Vec<f64> {
            (0..=m).map(|s| logistic(kappa * (s as f64 - half) + eta * u)).collect()
        };
        Self::new(pi_u, p_a0, p_a1, row(0.0), row(1.0))
    }

    pub fn m(&self) -> usize {
        self.p_y[0].len() - 1
    }

    pub fn pi_u(&self) -> f64 {
        self.pi_u
    }

    pub fn p_a0(&self) -> f64 {
        self.p_a0
    }

    pub fn p_a1(&self) -> f64 {
        self.p_a1
    }

    /// `P(A_k = 1 | U = u)`.
    pub fn p_a(&self, u: usize) -> f64 {
        if u == 0 {
            self.p_a0
        } else {
            self.p_a1
        }
    }

    /// `P(Y = 1 | U = u, S(A) = s)`; panics if `u > 1` or `s > m`.
    pub fn p_y(&self, u: usize, s: usize) -> f64 {
        self.p_y[u][s]
    }

    pub fn p_y_row(&self, u: usize) -> &[f64] {
        &self.p_y[u]
    }

    fn check_s(&self, s: usize) -> Result<()> {
        if s <= self.m() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("S(a) = {s} is outside 0..={}", self.m())))
        }
    }
}

/// `P(U = u, Y = y | A = a)` together with its margins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointTable {
    pub p00: f64,
    pub p01: f64,
    pub p10: f64,
    pub p11: f64,
    pub pi_u_given_a: f64,
    pub pi_y_given_a: f64,
}

impl JointTable {
    /// `log((p11·p00) / (p10·p01))`; infinite or NaN when a cell is zero.
    pub fn log_odds_ratio(&self) -> f64 {
        (self.p11.ln() + self.p00.ln()) - (self.p10.ln() + self.p01.ln())
    }
}

/// Copula density `P(U, Y | a) / (P(U | a) P(Y | a))` per cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CopulaDensity {
    pub c00: f64,
    pub c01: f64,
    pub c10: f64,
    pub c11: f64,
}

impl CopulaDensity {
    pub fn as_array(&self) -> [f64; 4] {
        [self.c00, self.c01, self.c10, self.c11]
    }
}

/// Closed interval of causal-parameter values compatible with the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IgnoranceInterval {
    pub lo: f64,
    pub hi: f64,
    /// True `P(Y = 1 | do(a))` when the generating parameters are known.
    pub point_true: Option<f64>,
    /// Observational `P(Y = 1 | A = a)`.
    pub point_obs: f64,
}

impl IgnoranceInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }
}

/// Which way the posterior of `U` degenerates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegenerateSide {
    /// `P(U = 1 | A = a) -> 0`.
    UToZero,
    /// `P(U = 1 | A = a) -> 1`.
    UToOne,
}

/// `P(Y = 1 | do(A = a))` for any `a` with `S(a) = s`.
pub fn intervention_prob(params: &BinaryParams, s: usize) -> Result<f64> {
    params.check_s(s)?;
    Ok((1.0 - params.pi_u) * params.p_y(0, s) + params.pi_u * params.p_y(1, s))
}

/// `(P(U = 0 | A = a), P(U = 1 | A = a))`, each computed in log space so
/// that neither loses precision when the other is close to 1.
fn posterior_pair(params: &BinaryParams, s: usize) -> Result<(f64, f64)> {
    params.check_s(s)?;
    let m = params.m();
    let (k, rest) = (s as f64, (m - s) as f64);
    let log_lik = |p: f64| xlogy(k, p) + xlogy(rest, 1.0 - p);
    let l1 = params.pi_u.ln() + log_lik(params.p_a1);
    let l0 = (1.0 - params.pi_u).ln() + log_lik(params.p_a0);
    match (l0 == f64::NEG_INFINITY, l1 == f64::NEG_INFINITY) {
        (true, true) => Err(Error::Domain(format!(
            "cause vectors with S(a) = {s} have probability zero under both latent classes"
        ))),
        (false, true) => Ok((1.0, 0.0)),
        (true, false) => Ok((0.0, 1.0)),
        (false, false) => Ok((logistic(l0 - l1), logistic(l1 - l0))),
    }
}

/// `P(U = 1 | A = a)` for any `a` with `S(a) = s`, computed in log space.
pub fn posterior_u(params: &BinaryParams, s: usize) -> Result<f64> {
    posterior_pair(params, s).map(|(_, w1)| w1)
}

/// `P(Y = 1 | A = a)` for any `a` with `S(a) = s`.
pub fn observational_prob(params: &BinaryParams, s: usize) -> Result<f64> {
    let (w0, w1) = posterior_pair(params, s)?;
    Ok(w0 * params.p_y(0, s) + w1 * params.p_y(1, s))
}

/// The true conditional table `P(U, Y | A = a)` implied by the parameters.
pub fn joint_table(params: &BinaryParams, s: usize) -> Result<JointTable> {
    let (w0, w1) = posterior_pair(params, s)?;
    let (q0, q1) = (params.p_y(0, s), params.p_y(1, s));
    Ok(JointTable {
        p00: w0 * (1.0 - q0),
        p01: w0 * q0,
        p10: w1 * (1.0 - q1),
        p11: w1 * q1,
        pi_u_given_a: w1,
        pi_y_given_a: w0 * q0 + w1 * q1,
    })
}

/// Fréchet bounds on `p11` given the two margins.
pub fn frechet_bounds(pi_u_given_a: f64, pi_y_given_a: f64) -> Result<(f64, f64)> {
    check_prob("pi_u_given_a", pi_u_given_a)?;
    check_prob("pi_y_given_a", pi_y_given_a)?;
    let lo = (pi_u_given_a + pi_y_given_a - 1.0).max(0.0);
    let hi = pi_u_given_a.min(pi_y_given_a);
    Ok((lo, hi))
}

/// Slack allowed when checking `p11` against its bounds.
const BOUND_SLACK: f64 = 1e-14;

/// Fill in the 2x2 table from its margins and the free cell.
pub fn table_from_p11(pi_u_given_a: f64, pi_y_given_a: f64, p11: f64) -> Result<JointTable> {
    let (lo, hi) = frechet_bounds(pi_u_given_a, pi_y_given_a)?;
    if !(p11 >= lo - BOUND_SLACK) {
        return Err(Error::Domain(format!("p11 = {p11} is below the lower Fréchet bound {lo}")));
    }
    if !(p11 <= hi + BOUND_SLACK) {
        return Err(Error::Domain(format!("p11 = {p11} is above the upper Fréchet bound {hi}")));
    }
    let p11 = p11.clamp(lo, hi);
    let p10 = (pi_u_given_a - p11).max(0.0);
    let p01 = (pi_y_given_a - p11).max(0.0);
    let p00 = (1.0 - p10 - p01 - p11).max(0.0);
    Ok(JointTable { p00, p01, p10, p11, pi_u_given_a, pi_y_given_a })
}

fn nondegenerate(name: &str, p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {p} is degenerate; use degenerate_ignorance")))
    }
}

/// Per-cell copula density. Requires both margins strictly inside (0, 1).
pub fn copula_density(table: &JointTable) -> Result<CopulaDensity> {
    nondegenerate("pi_u_given_a", table.pi_u_given_a)?;
    nondegenerate("pi_y_given_a", table.pi_y_given_a)?;
    let (u1, y1) = (table.pi_u_given_a, table.pi_y_given_a);
    let (u0, y0) = (1.0 - u1, 1.0 - y1);
    Ok(CopulaDensity {
        c00: table.p00 / (u0 * y0),
        c01: table.p01 / (u0 * y1),
        c10: table.p10 / (u1 * y0),
        c11: table.p11 / (u1 * y1),
    })
}

/// `P(Y = 1 | do(a)) = (1 - pi_u)·p01/(1 - pi_{U|a}) + pi_u·p11/pi_{U|a}`.
pub fn causal_from_table(pi_u: f64, table: &JointTable) -> Result<f64> {
    check_prob("pi_u", pi_u)?;
    nondegenerate("pi_u_given_a", table.pi_u_given_a)?;
    let post = table.pi_u_given_a;
    Ok((1.0 - pi_u) * table.p01 / (1.0 - post) + pi_u * table.p11 / post)
}

/// Range of `P(Y = 1 | do(a))` over all tables consistent with the margins.
///
/// `causal_from_table` is affine in `p11`, so the range is spanned by the
/// two Fréchet endpoints. Each endpoint is evaluated in closed form from the
/// complementary margins, avoiding the cancellation in `p01 / (1 - pi_{U|a})`
/// when the posterior is close to 1.
pub fn ignorance_region(params: &BinaryParams, s: usize) -> Result<IgnoranceInterval> {
    let (w0, w1) = posterior_pair(params, s)?;
    nondegenerate("pi_u_given_a", w1)?;
    nondegenerate("pi_u_given_a", 1.0 - w0)?;
    let (q0, q1) = (params.p_y(0, s), params.p_y(1, s));
    // Y margin: r1 = P(Y = 1 | a), r0 = P(Y = 0 | a).
    let r1 = w0 * q0 + w1 * q1;
    let r0 = w0 * (1.0 - q0) + w1 * (1.0 - q1);
    let pi = params.pi_u;
    // Upper Fréchet bound p11 = min(w1, r1).
    let at_hi = if r1 <= w1 { pi * r1 / w1 } else { (1.0 - pi) * (1.0 - r0 / w0) + pi };
    // Lower Fréchet bound p11 = max(0, w1 - r0).
    let at_lo = if w1 <= r0 { (1.0 - pi) * r1 / w0 } else { (1.0 - pi) + pi * (1.0 - r0 / w1) };
    Ok(IgnoranceInterval {
        lo: at_lo.min(at_hi),
        hi: at_lo.max(at_hi),
        point_true: Some(intervention_prob(params, s)?),
        point_obs: r1,
    })
}

/// Limiting region when `P(U = 1 | A = a)` is (or tends to) 0 or 1.
pub fn degenerate_ignorance(pi_u: f64, pi_y_given_a: f64, side: DegenerateSide) -> Result<IgnoranceInterval> {
    check_prob("pi_u", pi_u)?;
    check_prob("pi_y_given_a", pi_y_given_a)?;
    let (lo, width) = match side {
        DegenerateSide::UToZero => ((1.0 - pi_u) * pi_y_given_a, pi_u),
        DegenerateSide::UToOne => (pi_u * pi_y_given_a, 1.0 - pi_u),
    };
    Ok(IgnoranceInterval { lo, hi: lo + width, point_true: None, point_obs: pi_y_given_a })
}
