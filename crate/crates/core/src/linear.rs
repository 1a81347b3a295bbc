//! Linear-Gaussian factor model with one latent confounder.
//!
//! Structural equations:
//!
//! ```text
//! U := e_U,               e_U ~ N(0, sigma2_u)
//! A := alpha * U + e_A,   e_A ~ N(0, diag(sigma2_a))
//! Y := beta' A + gamma U + e_Y,   e_Y ~ N(0, sigma2_y)
//! ```
//!
//! The scale of `U` is not pinned down by the observable covariance of
//! `(A, Y)`. Rescaling it by `c` and adjusting the remaining parameters gives
//! a family of parameter vectors (indexed by the scaling factor) that all
//! reproduce the same observable covariance but move `beta`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Full parameter vector of the linear-Gaussian model.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralParams {
    alpha: DVector<f64>,
    beta: DVector<f64>,
    gamma: f64,
    sigma2_u: f64,
    sigma2_a: DVector<f64>,
    sigma2_y: f64,
}

impl StructuralParams {
    pub fn new(
        alpha: Vec<f64>,
        beta: Vec<f64>,
        gamma: f64,
        sigma2_u: f64,
        sigma2_a: Vec<f64>,
        sigma2_y: f64,
    ) -> Result<Self> {
        let m = alpha.len();
        if m == 0 {
            return Err(Error::InvalidArgument("number of causes must be at least 1".into()));
        }
        if beta.len() != m || sigma2_a.len() != m {
            return Err(Error::InvalidArgument(format!(
                "alpha, beta and sigma2_a must share length m (got {}, {}, {})",
                m,
                beta.len(),
                sigma2_a.len()
            )));
        }
        if alpha.iter().chain(&beta).any(|v| !v.is_finite()) || !gamma.is_finite() {
            return Err(Error::InvalidArgument("loadings and coefficients must be finite".into()));
        }
        check_variance("sigma2_u", sigma2_u)?;
        check_variance("sigma2_y", sigma2_y)?;
        for (k, &v) in sigma2_a.iter().enumerate() {
            check_variance(&format!("sigma2_a[{k}]"), v)?;
        }
        Ok(Self {
            alpha: DVector::from_vec(alpha),
            beta: DVector::from_vec(beta),
            gamma,
            sigma2_u,
            sigma2_a: DVector::from_vec(sigma2_a),
            sigma2_y,
        })
    }

    /// Constant-vector parameters `alpha = a·1`, `beta = b·1`, `sigma2_a = s2a·1`.
    pub fn constant(
        m: usize,
        a: f64,
        b: f64,
        gamma: f64,
        sigma2_u: f64,
        sigma2_a: f64,
        sigma2_y: f64,
    ) -> Result<Self> {
        Self::new(vec![a; m], vec![b; m], gamma, sigma2_u, vec![sigma2_a; m], sigma2_y)
    }

    pub fn m(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn beta(&self) -> &DVector<f64> {
        &self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn sigma2_u(&self) -> f64 {
        self.sigma2_u
    }

    pub fn sigma2_a(&self) -> &DVector<f64> {
        &self.sigma2_a
    }

    pub fn sigma2_y(&self) -> f64 {
        self.sigma2_y
    }
}

fn check_variance(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be a positive finite variance, got {v}")))
    }
}

/// Observable covariance blocks of `(A, Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableCov {
    pub sigma_aa: DMatrix<f64>,
    pub sigma_ay: DVector<f64>,
    pub sigma_yy: f64,
}

impl ObservableCov {
    /// The assembled `(m+1) x (m+1)` covariance with `Y` last.
    pub fn assembled(&self) -> DMatrix<f64> {
        let m = self.sigma_ay.len();
        let mut full = DMatrix::zeros(m + 1, m + 1);
        full.view_mut((0, 0), (m, m)).copy_from(&self.sigma_aa);
        for k in 0..m {
            full[(k, m)] = self.sigma_ay[k];
            full[(m, k)] = self.sigma_ay[k];
        }
        full[(m, m)] = self.sigma_yy;
        full
    }

    /// Positive definiteness of the assembled matrix (Cholesky succeeds).
    pub fn is_positive_definite(&self) -> bool {
        self.assembled().cholesky().is_some()
    }

    /// Largest entrywise relative difference `|x - y| / max(|x|, |y|, floor)`.
    pub fn max_relative_diff(&self, other: &ObservableCov, floor: f64) -> f64 {
        let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(floor);
        let aa = self
            .sigma_aa
            .iter()
            .zip(other.sigma_aa.iter())
            .map(|(&x, &y)| rel(x, y))
            .fold(0.0, f64::max);
        let ay = self
            .sigma_ay
            .iter()
            .zip(other.sigma_ay.iter())
            .map(|(&x, &y)| rel(x, y))
            .fold(0.0, f64::max);
        aa.max(ay).max(rel(self.sigma_yy, other.sigma_yy))
    }
}

/// Latent scaling factor `c > 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ScalingFactor(f64);

impl ScalingFactor {
    pub fn new(c: f64) -> Result<Self> {
        if c > 0.0 && c.is_finite() {
            Ok(Self(c))
        } else {
            Err(Error::InvalidArgument(format!("scaling factor must be positive and finite, got {c}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Parameters of the large-m frame where `alpha_m = a0/sqrt(m)·1`,
/// `beta_m = b0/sqrt(m)·1` and `sigma2_a = s0_sq·1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticFrame {
    pub a0: f64,
    pub b0: f64,
    pub s0_sq: f64,
    pub gamma: f64,
    pub sigma2_u: f64,
    pub sigma2_y: f64,
}

impl AsymptoticFrame {
    pub fn new(a0: f64, b0: f64, s0_sq: f64, gamma: f64, sigma2_u: f64, sigma2_y: f64) -> Result<Self> {
        check_variance("s0_sq", s0_sq)?;
        check_variance("sigma2_u", sigma2_u)?;
        check_variance("sigma2_y", sigma2_y)?;
        Ok(Self { a0, b0, s0_sq, gamma, sigma2_u, sigma2_y })
    }

    /// The `m`-th problem in the sequence.
    pub fn params_at(&self, m: usize) -> Result<StructuralParams> {
        let root = (m as f64).sqrt();
        StructuralParams::constant(
            m,
            self.a0 / root,
            self.b0 / root,
            self.gamma,
            self.sigma2_u,
            self.s0_sq,
            self.sigma2_y,
        )
    }
}

fn sigma_aa(params: &StructuralParams) -> DMatrix<f64> {
    let alpha = &params.alpha;
    let mut s = alpha * alpha.transpose() * params.sigma2_u;
    for k in 0..params.m() {
        s[(k, k)] += params.sigma2_a[k];
    }
    s
}

/// Observable covariance implied by the structural parameters.
pub fn observable_covariance(params: &StructuralParams) -> ObservableCov {
    let s_aa = sigma_aa(params);
    let s_ay = &s_aa * &params.beta + &params.alpha * (params.gamma * params.sigma2_u);
    let ba = params.beta.dot(&params.alpha) + params.gamma;
    let b_diag_b: f64 = params
        .beta
        .iter()
        .zip(params.sigma2_a.iter())
        .map(|(b, v)| b * b * v)
        .sum();
    let s_yy = ba * ba * params.sigma2_u + b_diag_b + params.sigma2_y;
    ObservableCov { sigma_aa: s_aa, sigma_ay: s_ay, sigma_yy: s_yy }
}

/// `Sigma_AA^{-1} alpha` by a dense Cholesky solve.
pub fn sigma_aa_inv_alpha(params: &StructuralParams) -> Result<DVector<f64>> {
    let chol = sigma_aa(params)
        .cholesky()
        .ok_or_else(|| Error::Numerical("Sigma_AA is not positive definite".into()))?;
    Ok(chol.solve(&params.alpha))
}

/// `beta_1(c) - beta`.
pub fn beta_shift(params: &StructuralParams, c: ScalingFactor) -> Result<DVector<f64>> {
    let w = sigma_aa_inv_alpha(params)?;
    Ok(w * (params.gamma * params.sigma2_u * (1.0 - 1.0 / c.value())))
}

/// Candidate parameters at scale `c` before the validity check. Returns the
/// shifted beta and the implied outcome noise variance, which may be
/// non-positive.
fn rescaled(params: &StructuralParams, c: ScalingFactor) -> Result<(DVector<f64>, f64)> {
    let w = sigma_aa_inv_alpha(params)?;
    Ok(rescaled_with(params, &w, observable_covariance(params).sigma_yy, c))
}

/// [`rescaled`] with `Sigma_AA^{-1} alpha` and `Sigma_YY` already computed.
fn rescaled_with(params: &StructuralParams, w: &DVector<f64>, sigma_yy: f64, c: ScalingFactor) -> (DVector<f64>, f64) {
    let c = c.value();
    let beta1 = &params.beta + w * (params.gamma * params.sigma2_u * (1.0 - 1.0 / c));
    let alpha1 = &params.alpha * c;
    let sigma2_u1 = params.sigma2_u / (c * c);
    let lin = beta1.dot(&alpha1) + params.gamma;
    let b_diag_b: f64 = beta1
        .iter()
        .zip(params.sigma2_a.iter())
        .map(|(b, v)| b * b * v)
        .sum();
    (beta1, sigma_yy - lin * lin * sigma2_u1 - b_diag_b)
}

/// Outcome noise variance `sigma2_{Y,1}(c)` implied by rescaling by `c`.
/// The scale is valid exactly when this is positive.
pub fn implied_outcome_variance(params: &StructuralParams, c: ScalingFactor) -> Result<f64> {
    rescaled(params, c).map(|(_, v)| v)
}

/// Member of the observational equivalence class at scale `c`.
pub fn equivalent_params(params: &StructuralParams, c: ScalingFactor) -> Result<StructuralParams> {
    let (beta1, sigma2_y1) = rescaled(params, c)?;
    if sigma2_y1 <= 0.0 {
        return Err(Error::Domain(format!(
            "scaling factor c = {} implies non-positive outcome noise variance sigma2_y1 = {sigma2_y1}",
            c.value()
        )));
    }
    let c = c.value();
    Ok(StructuralParams {
        alpha: &params.alpha * c,
        beta: beta1,
        gamma: params.gamma,
        sigma2_u: params.sigma2_u / (c * c),
        sigma2_a: params.sigma2_a.clone(),
        sigma2_y: sigma2_y1,
    })
}

/// The grid points whose implied outcome variance is positive.
pub fn valid_c_range(params: &StructuralParams, grid: &[f64]) -> Result<Vec<ScalingFactor>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("c grid is empty".into()));
    }
    let w = sigma_aa_inv_alpha(params)?;
    let sigma_yy = observable_covariance(params).sigma_yy;
    let mut valid = Vec::new();
    for &c in grid {
        let c = ScalingFactor::new(c)?;
        if rescaled_with(params, &w, sigma_yy, c).1 > 0.0 {
            valid.push(c);
        }
    }
    Ok(valid)
}

/// Relative tolerance used to decide whether a vector is constant.
const CONSTANT_TOL: f64 = 1e-12;

fn constant_value(v: &DVector<f64>, name: &str) -> Result<f64> {
    let first = v[0];
    let scale = first.abs().max(f64::MIN_POSITIVE);
    if v.iter().all(|x| (x - first).abs() <= CONSTANT_TOL * scale) {
        Ok(first)
    } else {
        Err(Error::Precondition(format!("{name} must be a constant vector")))
    }
}

/// Effect multiplier `s(c)` with `beta_1(c) = s(c)·beta` when `alpha` and
/// `beta` are constant vectors.
pub fn ignorance_multiplier(params: &StructuralParams, c: ScalingFactor) -> Result<f64> {
    constant_value(&params.alpha, "alpha")?;
    let b = constant_value(&params.beta, "beta")?;
    if b == 0.0 {
        return Err(Error::Precondition("beta must be non-zero".into()));
    }
    let beta1 = equivalent_params(params, c)?.beta;
    Ok(beta1[0] / b)
}

/// Componentwise ratio of the beta shift to beta in the large-m frame.
pub fn asymptotic_shift_ratio(frame: &AsymptoticFrame, c: ScalingFactor) -> Result<f64> {
    if frame.b0 == 0.0 {
        return Err(Error::InvalidArgument("b0 must be non-zero".into()));
    }
    let denom = frame.b0 * (frame.s0_sq + frame.sigma2_u * frame.a0 * frame.a0);
    Ok(frame.a0 / denom * frame.gamma * frame.sigma2_u * (1.0 - 1.0 / c.value()))
}
