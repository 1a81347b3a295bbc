//! Simulation and penalized maximum-likelihood fitting of the binary model.
//!
//! The penalty `lambda·(gamma - gamma_target)^2` acts on the log-odds ratio
//! of the implied table `P(U, Y | A = a*)` at a target cause vector. Without
//! proxies the likelihood is flat along that direction, so the penalty alone
//! decides where in the ignorance region the estimate lands. With two
//! proxies of `U` the likelihood pins it down and the penalty barely moves it.

mod data;
mod objective;
mod optim;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::binary::{intervention_prob, joint_table, BinaryParams};
use crate::error::{Error, Result};
use crate::seed::derive_seed;

pub use data::{sample_dataset, Dataset, Row, SufficientStats};
pub use objective::{log_likelihood_and_gradient, log_odds_ratio_logits, Layout, PenalizedObjective};
pub use optim::{maximize, AscentOptions, AscentOutcome};

/// `P(Z_j = 1 | U = u)` for the two proxies, indexed by `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxyParams {
    pub p_z1: [f64; 2],
    pub p_z2: [f64; 2],
}

impl ProxyParams {
    pub fn new(p_z1: [f64; 2], p_z2: [f64; 2]) -> Result<Self> {
        if p_z1.iter().chain(&p_z2).any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument("proxy probabilities must lie in [0, 1]".into()));
        }
        Ok(Self { p_z1, p_z2 })
    }

    fn swapped(self) -> Self {
        Self { p_z1: [self.p_z1[1], self.p_z1[0]], p_z2: [self.p_z2[1], self.p_z2[0]] }
    }
}

impl Default for ProxyParams {
    fn default() -> Self {
        Self { p_z1: [0.2, 0.8], p_z2: [0.2, 0.8] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub lambda: f64,
    pub gamma_target: f64,
    /// Cause vector whose interventional outcome probability is estimated.
    pub target_a: Vec<bool>,
    pub max_iters: usize,
    /// Maximum Euclidean length of a trial step in logit space.
    pub step_size: f64,
    /// Gradient-norm threshold, applied to the objective averaged per row.
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Hold `P(U = 1)` at this value instead of fitting it.
    pub fixed_pi_u: Option<f64>,
}

impl FitConfig {
    pub fn new(target_a: Vec<bool>, gamma_target: f64, seed: u64) -> Self {
        Self {
            lambda: 0.1,
            gamma_target,
            target_a,
            max_iters: 2000,
            step_size: 5.0,
            tol: 1e-7,
            restarts: 5,
            seed,
            fixed_pi_u: None,
        }
    }

    pub fn target_s(&self) -> usize {
        self.target_a.iter().filter(|&&b| b).count()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        if !self.gamma_target.is_finite() {
            return Err(Error::InvalidArgument("gamma_target must be finite".into()));
        }
        if self.max_iters == 0 || self.restarts == 0 {
            return Err(Error::InvalidArgument("max_iters and restarts must be at least 1".into()));
        }
        if !(self.tol > 0.0) || !(self.step_size > 0.0) {
            return Err(Error::InvalidArgument("tol and step_size must be positive".into()));
        }
        if let Some(p) = self.fixed_pi_u {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("fixed_pi_u must be a probability, got {p}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params_hat: BinaryParams,
    pub proxies_hat: Option<ProxyParams>,
    /// Estimated `P(Y = 1 | do(A = target_a))`.
    pub pi_do_hat: f64,
    /// Log-odds ratio of the fitted table at the target.
    pub gamma_hat: f64,
    pub loglik: f64,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Marginal log-likelihood of the data, summing out `U`. Returns `-inf`
/// when some row is impossible under the parameters.
pub fn log_likelihood(params: &BinaryParams, proxies: Option<&ProxyParams>, data: &Dataset) -> Result<f64> {
    if data.m() != params.m() && !data.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "data have m = {} but the parameters have m = {}",
            data.m(),
            params.m()
        )));
    }
    if data.is_empty() {
        return Ok(0.0);
    }
    let use_proxies = proxies.is_some() && data.has_proxies();
    let stats = SufficientStats::from_dataset(data, use_proxies)?;
    objective::log_likelihood_params(params, proxies, &stats)
}

/// Log-odds ratio of the table `P(U, Y | A = a)` implied by `params` at
/// `S(a) = s`, taking the class with the larger cause probability as `U = 1`.
pub fn implied_log_odds_ratio(params: &BinaryParams, s: usize) -> Result<f64> {
    let table = joint_table(params, s)?;
    let g = table.log_odds_ratio();
    Ok(if params.p_a1() >= params.p_a0() { g } else { -g })
}

/// `log_likelihood - lambda·(gamma - gamma_target)^2`; `-inf` when the
/// implied table at the target has an empty cell.
pub fn penalized_objective(
    params: &BinaryParams,
    proxies: Option<&ProxyParams>,
    data: &Dataset,
    config: &FitConfig,
) -> Result<f64> {
    config.validate()?;
    let ll = log_likelihood(params, proxies, data)?;
    let gamma = implied_log_odds_ratio(params, config.target_s())?;
    if !gamma.is_finite() || ll == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(ll - config.lambda * (gamma - config.gamma_target).powi(2))
}

fn initial_point(layout: &Layout, config: &FitConfig, restart: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[restart as u64]));
    let mut x: Vec<f64> = (0..layout.dim()).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let (i0, i1) = (layout.p_a(0), layout.p_a(1));
    if x[i0] > x[i1] {
        x.swap(i0, i1);
    }
    if let Some(p) = config.fixed_pi_u {
        x[Layout::PI_U] = objective::logit(p);
    }
    x
}

/// Penalized maximum likelihood by BFGS ascent in logit space with random
/// restarts. Returns the restart with the highest objective, relabeled so
/// that `p_a1 > p_a0` (unless `P(U = 1)` is held fixed).
pub fn fit(data: &Dataset, config: &FitConfig, with_proxies: bool) -> Result<FitResult> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("cannot fit an empty dataset".into()));
    }
    if config.target_a.len() != data.m() {
        return Err(Error::InvalidArgument(format!(
            "target_a has length {} but the data have m = {}",
            config.target_a.len(),
            data.m()
        )));
    }
    let stats = SufficientStats::from_dataset(data, with_proxies)?;
    let objective = PenalizedObjective::new(&stats, config.lambda, config.gamma_target, config.target_s())?;
    let layout = objective.layout;
    let scale = 1.0 / stats.n as f64;
    let free: Vec<usize> = (0..layout.dim())
        .filter(|&i| !(config.fixed_pi_u.is_some() && i == Layout::PI_U))
        .collect();
    let opts = AscentOptions { max_iters: config.max_iters, step_size: config.step_size, tol: config.tol };

    let mut best: Option<(AscentOutcome, Vec<f64>)> = None;
    for restart in 0..config.restarts {
        let full0 = initial_point(&layout, config, restart);
        let expand = |free_x: &[f64]| {
            let mut full = full0.clone();
            for (&i, &v) in free.iter().zip(free_x) {
                full[i] = v;
            }
            full
        };
        let f = |free_x: &[f64]| match objective.value_and_gradient(&expand(free_x)) {
            Ok((v, g)) => (v * scale, free.iter().map(|&i| g[i] * scale).collect()),
            Err(_) => (f64::NAN, vec![0.0; free.len()]),
        };
        let x0: Vec<f64> = free.iter().map(|&i| full0[i]).collect();
        let outcome = maximize(f, x0, &opts);
        let full = expand(&outcome.x);
        let better = match &best {
            None => true,
            Some((b, _)) => outcome.value > b.value || (b.value.is_nan() && !outcome.value.is_nan()),
        };
        if better {
            best = Some((outcome, full));
        }
    }
    let (outcome, mut x) = best.expect("at least one restart");
    if !outcome.value.is_finite() {
        return Err(Error::Numerical("every restart ended at an infeasible point".into()));
    }
    if config.fixed_pi_u.is_none() && x[layout.p_a(1)] < x[layout.p_a(0)] {
        x = layout.swap_labels(&x);
    }
    let (params_hat, proxies_hat) = layout.decode(&x)?;
    let target_s = config.target_s();
    let (gamma_hat, _) = log_odds_ratio_logits(&layout, &x, target_s);
    let loglik = objective::log_likelihood_params(&params_hat, proxies_hat.as_ref(), &stats)?;
    Ok(FitResult {
        pi_do_hat: intervention_prob(&params_hat, target_s)?,
        gamma_hat,
        loglik,
        objective: outcome.value / scale,
        converged: outcome.converged,
        iterations: outcome.iterations,
        params_hat,
        proxies_hat,
    })
}

/// Profile log-likelihood over a grid of log-odds-ratio values, obtained by
/// fitting with a stiff penalty (`lambda = stiffness`) at each grid value.
pub fn profile_log_likelihood(
    data: &Dataset,
    base: &FitConfig,
    with_proxies: bool,
    gammas: &[f64],
    stiffness: f64,
) -> Result<Vec<f64>> {
    gammas
        .iter()
        .map(|&g| {
            let config = FitConfig { lambda: stiffness, gamma_target: g, ..base.clone() };
            fit(data, &config, with_proxies).map(|r| r.loglik)
        })
        .collect()
}

/// Swap the latent labels of a parameter set.
pub fn relabel(params: &BinaryParams, proxies: Option<&ProxyParams>) -> Result<(BinaryParams, Option<ProxyParams>)> {
    let p = BinaryParams::new(
        1.0 - params.pi_u(),
        params.p_a1(),
        params.p_a0(),
        params.p_y_row(1).to_vec(),
        params.p_y_row(0).to_vec(),
    )?;
    Ok((p, proxies.map(|z| z.swapped())))
}
