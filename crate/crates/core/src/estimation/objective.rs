//! Marginal log-likelihood of the binary latent-class model (with optional
//! proxies) and the log-odds-ratio penalty, in unconstrained logit
//! coordinates with analytic gradients.
//!
//! Coordinate layout for `m` causes:
//!
//! | index                      | parameter              |
//! |----------------------------|------------------------|
//! | 0                          | logit P(U = 1)         |
//! | 1, 2                       | logit p_A(0), p_A(1)   |
//! | 3 + u(m+1) + s             | logit p_Y(u, s)        |
//! | 3 + 2(m+1) + 2j + u        | logit P(Z_j = 1 \| u)  |

use crate::binary::{logistic, BinaryParams};
use crate::error::{Error, Result};

use super::data::SufficientStats;
use super::ProxyParams;

/// `ln(logistic(x))` without overflow.
pub(crate) fn log_sigmoid(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

pub(crate) fn logit(p: f64) -> f64 {
    p.ln() - (-p).ln_1p()
}

/// Index map of the unconstrained parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub m: usize,
    pub with_proxies: bool,
}

impl Layout {
    pub const PI_U: usize = 0;

    pub fn new(m: usize, with_proxies: bool) -> Self {
        Self { m, with_proxies }
    }

    pub fn p_a(&self, u: usize) -> usize {
        1 + u
    }

    pub fn p_y(&self, u: usize, s: usize) -> usize {
        3 + u * (self.m + 1) + s
    }

    /// Proxy `j` in {0, 1}.
    pub fn p_z(&self, j: usize, u: usize) -> usize {
        3 + 2 * (self.m + 1) + 2 * j + u
    }

    pub fn dim(&self) -> usize {
        3 + 2 * (self.m + 1) + if self.with_proxies { 4 } else { 0 }
    }

    /// Logits of the given parameters (±inf at probabilities 0 and 1).
    pub fn encode(&self, params: &BinaryParams, proxies: Option<&ProxyParams>) -> Result<Vec<f64>> {
        if params.m() != self.m {
            return Err(Error::InvalidArgument(format!(
                "parameters have m = {} but the layout expects {}",
                params.m(),
                self.m
            )));
        }
        let mut x = vec![0.0; self.dim()];
        x[Self::PI_U] = logit(params.pi_u());
        for u in 0..2 {
            x[self.p_a(u)] = logit(params.p_a(u));
            for s in 0..=self.m {
                x[self.p_y(u, s)] = logit(params.p_y(u, s));
            }
        }
        match (self.with_proxies, proxies) {
            (true, Some(z)) => {
                for u in 0..2 {
                    x[self.p_z(0, u)] = logit(z.p_z1[u]);
                    x[self.p_z(1, u)] = logit(z.p_z2[u]);
                }
            }
            (true, None) => {
                return Err(Error::InvalidArgument("proxy parameters are required by this layout".into()))
            }
            (false, _) => {}
        }
        Ok(x)
    }

    pub fn decode(&self, x: &[f64]) -> Result<(BinaryParams, Option<ProxyParams>)> {
        let row = |u: usize| (0..=self.m).map(|s| logistic(x[self.p_y(u, s)])).collect::<Vec<_>>();
        let params = BinaryParams::new(
            logistic(x[Self::PI_U]),
            logistic(x[self.p_a(0)]),
            logistic(x[self.p_a(1)]),
            row(0),
            row(1),
        )
        .map_err(|e| Error::Numerical(format!("fitted parameters are not a valid model: {e}")))?;
        let proxies = if self.with_proxies {
            let pz = |j: usize| [logistic(x[self.p_z(j, 0)]), logistic(x[self.p_z(j, 1)])];
            Some(ProxyParams::new(pz(0), pz(1))?)
        } else {
            None
        };
        Ok((params, proxies))
    }

    /// Coordinates after swapping the labels of the two latent classes.
    pub fn swap_labels(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        out[Self::PI_U] = -x[Self::PI_U];
        out.swap(self.p_a(0), self.p_a(1));
        for s in 0..=self.m {
            out.swap(self.p_y(0, s), self.p_y(1, s));
        }
        if self.with_proxies {
            for j in 0..2 {
                out.swap(self.p_z(j, 0), self.p_z(j, 1));
            }
        }
        out
    }
}

/// Log-probability pairs `(ln p, ln(1 - p))` for every Bernoulli parameter.
struct LogProbs {
    pi: (f64, f64),
    a: [(f64, f64); 2],
    y: [Vec<(f64, f64)>; 2],
    z: [[(f64, f64); 2]; 2],
}

impl LogProbs {
    fn from_logits(layout: &Layout, x: &[f64]) -> Self {
        let pair = |v: f64| (log_sigmoid(v), log_sigmoid(-v));
        let y = |u: usize| (0..=layout.m).map(|s| pair(x[layout.p_y(u, s)])).collect();
        let z = if layout.with_proxies {
            [0, 1].map(|j| [0, 1].map(|u| pair(x[layout.p_z(j, u)])))
        } else {
            [[(0.0, 0.0); 2]; 2]
        };
        Self {
            pi: pair(x[Layout::PI_U]),
            a: [pair(x[layout.p_a(0)]), pair(x[layout.p_a(1)])],
            y: [y(0), y(1)],
            z,
        }
    }

    fn from_probs(layout: &Layout, params: &BinaryParams, proxies: Option<&ProxyParams>) -> Self {
        let pair = |p: f64| (p.ln(), (-p).ln_1p());
        let y = |u: usize| (0..=layout.m).map(|s| pair(params.p_y(u, s))).collect();
        let z = match proxies {
            Some(z) if layout.with_proxies => [z.p_z1, z.p_z2].map(|pz| pz.map(pair)),
            _ => [[(0.0, 0.0); 2]; 2],
        };
        Self {
            pi: pair(params.pi_u()),
            a: [pair(params.p_a0()), pair(params.p_a1())],
            y: [y(0), y(1)],
            z,
        }
    }
}

/// `k·lp` with `0·(-inf) = 0`.
fn scaled(k: f64, lp: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        k * lp
    }
}

fn pick((l1, l0): (f64, f64), bit: usize) -> f64 {
    if bit == 1 {
        l1
    } else {
        l0
    }
}

/// Log joint of a `(s, y, z)` cell and the latent class `u`.
fn branch(lp: &LogProbs, layout: &Layout, u: usize, s: usize, y: usize, z: [usize; 2]) -> f64 {
    let m = layout.m;
    let mut t = pick(lp.pi, u)
        + scaled(s as f64, lp.a[u].0)
        + scaled((m - s) as f64, lp.a[u].1)
        + pick(lp.y[u][s], y);
    if layout.with_proxies {
        t += pick(lp.z[0][u], z[0]) + pick(lp.z[1][u], z[1]);
    }
    t
}

fn log_sum_exp2(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        hi + ((a - hi).exp() + (b - hi).exp()).ln()
    }
}

fn check_stats(layout: &Layout, stats: &SufficientStats) -> Result<()> {
    if stats.m != layout.m || stats.with_proxies != layout.with_proxies {
        return Err(Error::InvalidArgument(format!(
            "data (m = {}, proxies = {}) do not match the parameters (m = {}, proxies = {})",
            stats.m, stats.with_proxies, layout.m, layout.with_proxies
        )));
    }
    Ok(())
}

fn log_likelihood_with(lp: &LogProbs, layout: &Layout, stats: &SufficientStats) -> f64 {
    let mut total = 0.0;
    for (s, y, z1, z2, count) in stats.cells() {
        let t0 = branch(lp, layout, 0, s, y, [z1, z2]);
        let t1 = branch(lp, layout, 1, s, y, [z1, z2]);
        let l = log_sum_exp2(t0, t1);
        if l == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        total += count * l;
    }
    total
}

/// Marginal log-likelihood at constrained parameters; `-inf` when some
/// observed cell has probability zero.
pub(crate) fn log_likelihood_params(
    params: &BinaryParams,
    proxies: Option<&ProxyParams>,
    stats: &SufficientStats,
) -> Result<f64> {
    let layout = Layout::new(params.m(), stats.with_proxies);
    check_stats(&layout, stats)?;
    if layout.with_proxies && proxies.is_none() {
        return Err(Error::InvalidArgument("data carry proxies but no proxy parameters were given".into()));
    }
    let lp = LogProbs::from_probs(&layout, params, proxies);
    Ok(log_likelihood_with(&lp, &layout, stats))
}

/// Log-likelihood and its gradient in logit coordinates.
pub fn log_likelihood_and_gradient(layout: &Layout, stats: &SufficientStats, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_stats(layout, stats)?;
    if x.len() != layout.dim() {
        return Err(Error::InvalidArgument(format!(
            "parameter vector has length {} but the layout needs {}",
            x.len(),
            layout.dim()
        )));
    }
    let lp = LogProbs::from_logits(layout, x);
    let mut grad = vec![0.0; layout.dim()];
    let mut total = 0.0;
    let pi = logistic(x[Layout::PI_U]);
    let p_a = [logistic(x[layout.p_a(0)]), logistic(x[layout.p_a(1)])];
    let m = layout.m as f64;
    for (s, y, z1, z2, count) in stats.cells() {
        let t = [0, 1].map(|u| branch(&lp, layout, u, s, y, [z1, z2]));
        let l = log_sum_exp2(t[0], t[1]);
        if l == f64::NEG_INFINITY {
            return Ok((f64::NEG_INFINITY, vec![0.0; layout.dim()]));
        }
        total += count * l;
        let w = t.map(|tu| (tu - l).exp());
        grad[Layout::PI_U] += count * (w[1] - pi);
        for u in 0..2 {
            let wc = count * w[u];
            if wc == 0.0 {
                continue;
            }
            grad[layout.p_a(u)] += wc * (s as f64 - m * p_a[u]);
            grad[layout.p_y(u, s)] += wc * (y as f64 - logistic(x[layout.p_y(u, s)]));
            if layout.with_proxies {
                grad[layout.p_z(0, u)] += wc * (z1 as f64 - logistic(x[layout.p_z(0, u)]));
                grad[layout.p_z(1, u)] += wc * (z2 as f64 - logistic(x[layout.p_z(1, u)]));
            }
        }
    }
    Ok((total, grad))
}

/// Log-odds ratio of the implied table `P(U, Y | a)` at `S(a) = s`, in
/// logit coordinates. The posterior of `U` cancels, leaving the difference
/// of the two outcome logits. The class with the larger cause probability
/// is treated as `U = 1`, which makes the value invariant to label swaps.
pub fn log_odds_ratio_logits(layout: &Layout, x: &[f64], s: usize) -> (f64, f64) {
    let sign = if x[layout.p_a(1)] >= x[layout.p_a(0)] { 1.0 } else { -1.0 };
    (sign * (x[layout.p_y(1, s)] - x[layout.p_y(0, s)]), sign)
}

/// Penalized objective `loglik - lambda·(gamma - target)^2` in logit
/// coordinates, with its gradient.
#[derive(Debug, Clone)]
pub struct PenalizedObjective<'a> {
    pub layout: Layout,
    pub stats: &'a SufficientStats,
    pub lambda: f64,
    pub gamma_target: f64,
    pub target_s: usize,
}

impl<'a> PenalizedObjective<'a> {
    pub fn new(stats: &'a SufficientStats, lambda: f64, gamma_target: f64, target_s: usize) -> Result<Self> {
        if target_s > stats.m {
            return Err(Error::InvalidArgument(format!("target S(a) = {target_s} exceeds m = {}", stats.m)));
        }
        if !(lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be non-negative, got {lambda}")));
        }
        Ok(Self {
            layout: Layout::new(stats.m, stats.with_proxies),
            stats,
            lambda,
            gamma_target,
            target_s,
        })
    }

    pub fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (ll, mut grad) = log_likelihood_and_gradient(&self.layout, self.stats, x)?;
        if ll == f64::NEG_INFINITY {
            return Ok((ll, grad));
        }
        let (gamma, sign) = log_odds_ratio_logits(&self.layout, x, self.target_s);
        let diff = gamma - self.gamma_target;
        if !diff.is_finite() {
            return Ok((f64::NEG_INFINITY, vec![0.0; grad.len()]));
        }
        let d = -2.0 * self.lambda * diff * sign;
        grad[self.layout.p_y(1, self.target_s)] += d;
        grad[self.layout.p_y(0, self.target_s)] -= d;
        Ok((ll - self.lambda * diff * diff, grad))
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.value_and_gradient(x).map(|(v, _)| v)
    }
}
