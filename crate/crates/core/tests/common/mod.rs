//! Brute-force oracles shared by the integration tests. Nothing here calls
//! into the closed forms under test.
#![allow(dead_code)]

use multicause::binary::BinaryParams;
use multicause::estimation::ProxyParams;

fn bern(p: f64, bit: bool) -> f64 {
    if bit {
        p
    } else {
        1.0 - p
    }
}

fn bits(mask: u64, m: usize) -> Vec<bool> {
    (0..m).map(|k| mask >> k & 1 == 1).collect()
}

/// `P(U = u, A = a, Y = y)` from the structural factorization, cause by cause.
pub fn joint(params: &BinaryParams, u: bool, a: &[bool], y: bool) -> f64 {
    let ui = usize::from(u);
    let s = a.iter().filter(|&&b| b).count();
    let mut p = bern(params.pi_u(), u);
    for &ak in a {
        p *= bern(params.p_a(ui), ak);
    }
    p * bern(params.p_y(ui, s), y)
}

/// Everything the closed forms produce for one cause vector, by summing
/// the full joint over all `2^(m + 2)` states `(u, a', y)`.
#[derive(Debug, Clone, Copy)]
pub struct Enumerated {
    pub intervention: f64,
    pub posterior: f64,
    pub observational: f64,
}

pub fn enumerate(params: &BinaryParams, a: &[bool]) -> Enumerated {
    let m = a.len();
    let (mut p_a, mut p_ua, mut p_ya) = (0.0, 0.0, 0.0);
    let mut p_u = [0.0; 2];
    // P(U = u, A = a) and P(U = u, A = a, Y = 1).
    let mut cell = [0.0; 2];
    let mut cell_y = [0.0; 2];
    for mask in 0..1u64 << m {
        let a2 = bits(mask, m);
        let same = a2 == a;
        for u in [false, true] {
            let ui = usize::from(u);
            for y in [false, true] {
                let p = joint(params, u, &a2, y);
                p_u[ui] += p;
                if same {
                    p_a += p;
                    cell[ui] += p;
                    if u {
                        p_ua += p;
                    }
                    if y {
                        p_ya += p;
                        cell_y[ui] += p;
                    }
                }
            }
        }
    }
    // do(a): P(Y = 1 | U = u, A = a) weighted by the marginal of U.
    let intervention = (0..2).filter(|&u| cell[u] > 0.0).map(|u| p_u[u] * cell_y[u] / cell[u]).sum();
    Enumerated { intervention, posterior: p_ua / p_a, observational: p_ya / p_a }
}

/// The cause vector with the first `s` causes active.
pub fn leading_ones(m: usize, s: usize) -> Vec<bool> {
    (0..m).map(|k| k < s).collect()
}

/// Entropy-rate oracle: mean and variance of `log P(A, Y, Z)` for one row,
/// summing over every cause vector, outcome, proxy pattern and latent class.
pub fn row_log_likelihood_moments(params: &BinaryParams, proxies: Option<&ProxyParams>) -> (f64, f64) {
    let m = params.m();
    let z_patterns: Vec<Option<[bool; 2]>> = match proxies {
        None => vec![None],
        Some(_) => vec![Some([false, false]), Some([false, true]), Some([true, false]), Some([true, true])],
    };
    let (mut first, mut second) = (0.0, 0.0);
    for mask in 0..1u64 << m {
        let a = bits(mask, m);
        for y in [false, true] {
            for z in &z_patterns {
                let p: f64 = [false, true]
                    .iter()
                    .map(|&u| {
                        let mut p = joint(params, u, &a, y);
                        if let (Some(zp), Some(px)) = (z, proxies) {
                            let ui = usize::from(u);
                            p *= bern(px.p_z1[ui], zp[0]) * bern(px.p_z2[ui], zp[1]);
                        }
                        p
                    })
                    .sum();
                if p > 0.0 {
                    first += p * p.ln();
                    second += p * p.ln().powi(2);
                }
            }
        }
    }
    (first, second - first * first)
}

/// Moments of `Y` and `S(A)` by enumeration.
pub fn outcome_and_sum_moments(params: &BinaryParams) -> (f64, f64) {
    let m = params.m();
    let (mut ey, mut es) = (0.0, 0.0);
    for mask in 0..1u64 << m {
        let a = bits(mask, m);
        let s = a.iter().filter(|&&b| b).count() as f64;
        for u in [false, true] {
            for y in [false, true] {
                let p = joint(params, u, &a, y);
                es += p * s;
                if y {
                    ey += p;
                }
            }
        }
    }
    (ey, es)
}
