//! Experiment config files (TOML).
//!
//! ```toml
//! seed = 20190313            # required, no clock-derived default
//! experiment = "estimate"    # optional; must match the subcommand if given
//!
//! [binary]
//! m = 6
//! pi_u = 0.3
//! p_a0 = 0.3
//! p_a1 = 0.7
//! outcome = { kind = "logistic", kappa = 0.5, eta = 2.0 }
//!
//! [estimate]
//! n = 15000
//! replications = 20
//! gamma_targets = { start = -4.0, stop = 4.0, count = 9 }
//! ```
//!
//! See the repository README for every section and its defaults.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::binary::BinaryParams;
use crate::estimation::ProxyParams;
use crate::linear::StructuralParams;

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    LinearIgnorance,
    BinaryIgnorance,
    Estimate,
    Positivity,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::LinearIgnorance => "linear-ignorance",
            Experiment::BinaryIgnorance => "binary-ignorance",
            Experiment::Estimate => "estimate",
            Experiment::Positivity => "positivity",
        }
    }
}

/// A scalar broadcast to every cause, or one value per cause.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerCause {
    Scalar(f64),
    List(Vec<f64>),
}

impl PerCause {
    fn expand(&self, m: usize, field: &str) -> Result<Vec<f64>, HarnessError> {
        match self {
            PerCause::Scalar(v) => Ok(vec![*v; m]),
            PerCause::List(v) if v.len() == m => Ok(v.clone()),
            PerCause::List(v) => Err(HarnessError::config(field, format!("expected {m} entries, found {}", v.len()))),
        }
    }
}

/// Explicit list of values, or `count` evenly spaced values from `start`
/// to `stop` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl Grid {
    pub fn values(&self, field: &str) -> Result<Vec<f64>, HarnessError> {
        let v = match self {
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, count } => match *count {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..n).map(|i| start + (stop - start) * i as f64 / (n - 1) as f64).collect(),
            },
        };
        if v.is_empty() {
            return Err(HarnessError::config(field, "grid is empty"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(HarnessError::config(field, "grid values must be finite"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSection {
    pub m: usize,
    pub alpha: PerCause,
    pub beta: PerCause,
    pub gamma: f64,
    pub sigma2_u: f64,
    pub sigma2_a: PerCause,
    pub sigma2_y: f64,
    pub c_grid: Grid,
}

impl LinearSection {
    pub fn params(&self) -> Result<StructuralParams, HarnessError> {
        StructuralParams::new(
            self.alpha.expand(self.m, "linear.alpha")?,
            self.beta.expand(self.m, "linear.beta")?,
            self.gamma,
            self.sigma2_u,
            self.sigma2_a.expand(self.m, "linear.sigma2_a")?,
            self.sigma2_y,
        )
        .map_err(|e| HarnessError::config("linear", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OutcomeSpec {
    /// `p_Y(u, s) = logistic(kappa·(s - m/2) + eta·u)`.
    Logistic { kappa: f64, eta: f64 },
    /// Explicit `P(Y = 1 | U = u, S = s)` for `s = 0..=m`.
    Table { p_y0: Vec<f64>, p_y1: Vec<f64> },
}

impl Default for OutcomeSpec {
    fn default() -> Self {
        OutcomeSpec::Logistic { kappa: 0.5, eta: 2.0 }
    }
}

fn default_m() -> usize {
    6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinarySection {
    #[serde(default = "default_m")]
    pub m: usize,
    pub pi_u: f64,
    pub p_a0: f64,
    pub p_a1: f64,
    #[serde(default)]
    pub outcome: OutcomeSpec,
}

impl BinarySection {
    pub fn params(&self) -> Result<BinaryParams, HarnessError> {
        self.params_with_m(self.m)
    }

    /// Same section with a different number of causes (for a logistic
    /// outcome; a table outcome fixes `m`).
    pub fn params_with_m(&self, m: usize) -> Result<BinaryParams, HarnessError> {
        if m == 0 {
            return Err(HarnessError::config("binary.m", "must be at least 1"));
        }
        let p = match &self.outcome {
            OutcomeSpec::Logistic { kappa, eta } => {
                BinaryParams::with_logistic_outcome(m, self.pi_u, self.p_a0, self.p_a1, *kappa, *eta)
            }
            OutcomeSpec::Table { p_y0, p_y1 } => {
                if p_y0.len() != m + 1 {
                    return Err(HarnessError::config(
                        "binary.outcome.p_y0",
                        format!("expected m + 1 = {} entries, found {}", m + 1, p_y0.len()),
                    ));
                }
                BinaryParams::new(self.pi_u, self.p_a0, self.p_a1, p_y0.clone(), p_y1.clone())
            }
        };
        p.map_err(|e| HarnessError::config("binary", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxySection {
    pub p_z1: [f64; 2],
    pub p_z2: [f64; 2],
}

impl Default for ProxySection {
    fn default() -> Self {
        let d = ProxyParams::default();
        Self { p_z1: d.p_z1, p_z2: d.p_z2 }
    }
}

impl ProxySection {
    pub fn params(&self) -> Result<ProxyParams, HarnessError> {
        ProxyParams::new(self.p_z1, self.p_z2).map_err(|e| HarnessError::config("proxies", e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    Standard,
    Proxy,
}

impl Setting {
    pub fn name(self) -> &'static str {
        match self {
            Setting::Standard => "standard",
            Setting::Proxy => "proxy",
        }
    }
}

fn default_n_estimate() -> usize {
    15_000
}
fn default_replications() -> usize {
    20
}
fn default_gamma_targets() -> Grid {
    Grid::Range { start: -4.0, stop: 4.0, count: 9 }
}
fn default_lambda() -> f64 {
    0.1
}
fn default_settings() -> Vec<Setting> {
    vec![Setting::Standard, Setting::Proxy]
}
fn default_max_iters() -> usize {
    2000
}
fn default_step_size() -> f64 {
    5.0
}
fn default_tol() -> f64 {
    1e-7
}
fn default_restarts() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    #[serde(default = "default_n_estimate")]
    pub n: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_gamma_targets")]
    pub gamma_targets: Grid,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Defaults to all ones except the last cause.
    #[serde(default)]
    pub target_a: Option<Vec<u8>>,
    #[serde(default = "default_settings")]
    pub settings: Vec<Setting>,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_step_size")]
    pub step_size: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

impl EstimateSection {
    pub fn target(&self, m: usize) -> Result<Vec<bool>, HarnessError> {
        match &self.target_a {
            None => Ok((0..m).map(|k| k + 1 < m).collect()),
            Some(bits) => {
                if bits.len() != m {
                    return Err(HarnessError::config(
                        "estimate.target_a",
                        format!("expected {m} entries, found {}", bits.len()),
                    ));
                }
                bits.iter()
                    .map(|&b| match b {
                        0 => Ok(false),
                        1 => Ok(true),
                        other => Err(HarnessError::config("estimate.target_a", format!("entries must be 0 or 1, found {other}"))),
                    })
                    .collect()
            }
        }
    }
}

fn default_m_values() -> Vec<usize> {
    vec![2, 8, 32, 128]
}
fn default_cloud_n() -> usize {
    500
}
fn default_rate_samples() -> usize {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositivitySection {
    #[serde(default = "default_m_values")]
    pub m_values: Vec<usize>,
    /// Points per projection cloud.
    #[serde(default = "default_cloud_n")]
    pub n: usize,
    /// Units simulated per misclassification-rate estimate.
    #[serde(default = "default_rate_samples")]
    pub rate_samples: usize,
}

impl Default for PositivitySection {
    fn default() -> Self {
        Self { m_values: default_m_values(), n: default_cloud_n(), rate_samples: default_rate_samples() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    pub seed: u64,
    /// Output directory; the CLI's `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binary: Option<BinarySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proxies: Option<ProxySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positivity: Option<PositivitySection>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn linear(&self) -> Result<&LinearSection, HarnessError> {
        self.linear.as_ref().ok_or_else(|| HarnessError::config("linear", "section is required"))
    }

    pub fn binary(&self) -> Result<&BinarySection, HarnessError> {
        self.binary.as_ref().ok_or_else(|| HarnessError::config("binary", "section is required"))
    }

    /// Check everything the given experiment needs, before any work starts.
    pub fn validate_for(&self, experiment: Experiment) -> Result<(), HarnessError> {
        if let Some(declared) = self.experiment {
            if declared != experiment {
                return Err(HarnessError::config(
                    "experiment",
                    format!("config declares `{}` but `{}` was requested", declared.name(), experiment.name()),
                ));
            }
        }
        match experiment {
            Experiment::LinearIgnorance => {
                let lin = self.linear()?;
                lin.params()?;
                let grid = lin.c_grid.values("linear.c_grid")?;
                if grid.iter().any(|&c| c <= 0.0) {
                    return Err(HarnessError::config("linear.c_grid", "scaling factors must be positive"));
                }
            }
            Experiment::BinaryIgnorance => {
                self.binary()?.params()?;
            }
            Experiment::Estimate => {
                let bin = self.binary()?;
                let params = bin.params()?;
                self.proxies.clone().unwrap_or_default().params()?;
                let est = self
                    .estimate
                    .as_ref()
                    .ok_or_else(|| HarnessError::config("estimate", "section is required"))?;
                est.target(params.m())?;
                est.gamma_targets.values("estimate.gamma_targets")?;
                if est.n == 0 || est.replications == 0 {
                    return Err(HarnessError::config("estimate", "n and replications must be positive"));
                }
                if est.settings.is_empty() {
                    return Err(HarnessError::config("estimate.settings", "at least one setting is required"));
                }
                if !(est.lambda >= 0.0) || est.max_iters == 0 || est.restarts == 0 || !(est.tol > 0.0) || !(est.step_size > 0.0) {
                    return Err(HarnessError::config(
                        "estimate",
                        "lambda must be >= 0; max_iters, restarts, tol and step_size must be positive",
                    ));
                }
            }
            Experiment::Positivity => {
                let bin = self.binary()?;
                let pos = self.positivity.clone().unwrap_or_default();
                if pos.m_values.is_empty() {
                    return Err(HarnessError::config("positivity.m_values", "list is empty"));
                }
                if let Some(m) = pos.m_values.iter().find(|&&m| m == 0 || m % 2 != 0) {
                    return Err(HarnessError::config("positivity.m_values", format!("every m must be even and positive, found {m}")));
                }
                if pos.n == 0 || pos.rate_samples == 0 {
                    return Err(HarnessError::config("positivity", "n and rate_samples must be positive"));
                }
                if !(bin.p_a1 > bin.p_a0) {
                    return Err(HarnessError::config("binary", "the threshold classifier needs p_a1 > p_a0"));
                }
                for &m in &pos.m_values {
                    bin.params_with_m(m)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = Grid::Range { start: 0.5, stop: 2.0, count: 4 };
        assert_eq!(g.values("g").unwrap(), vec![0.5, 1.0, 1.5, 2.0]);
        assert!(Grid::List(vec![]).values("g").is_err());
        assert!(Grid::Range { start: 0.0, stop: 1.0, count: 0 }.values("g").is_err());
    }

    #[test]
    fn missing_seed_is_rejected() {
        let err = ExperimentConfig::parse("[binary]\npi_u = 0.3\np_a0 = 0.1\np_a1 = 0.9\n").unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn unknown_field_reports_location() {
        let err = ExperimentConfig::parse("seed = 1\n[binary]\npi_u = 0.3\np_a0 = 0.1\np_a1 = 0.9\nbogus = 2\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus") && msg.contains("line 6"), "{msg}");
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = ExperimentConfig::parse(
            "seed = 3\n[binary]\npi_u = 0.3\np_a0 = 0.3\np_a1 = 0.7\n[estimate]\n",
        )
        .unwrap();
        cfg.validate_for(Experiment::Estimate).unwrap();
        let est = cfg.estimate.unwrap();
        assert_eq!(est.n, 15_000);
        assert_eq!(est.target(6).unwrap(), vec![true, true, true, true, true, false]);
        assert_eq!(est.gamma_targets.values("x").unwrap().len(), 9);
    }

    #[test]
    fn odd_m_is_a_config_error() {
        let cfg = ExperimentConfig::parse(
            "seed = 3\n[binary]\npi_u = 0.3\np_a0 = 0.1\np_a1 = 0.9\n[positivity]\nm_values = [2, 7]\n",
        )
        .unwrap();
        let err = cfg.validate_for(Experiment::Positivity).unwrap_err();
        assert!(err.to_string().contains("positivity.m_values"));
    }

    #[test]
    fn experiment_mismatch() {
        let cfg = ExperimentConfig::parse("seed = 1\nexperiment = \"positivity\"\n").unwrap();
        assert!(cfg.validate_for(Experiment::Estimate).is_err());
    }

    #[test]
    fn per_cause_lengths_are_checked() {
        let text = "seed = 1\n[linear]\nm = 3\nalpha = [1.0, 1.0]\nbeta = 0.5\ngamma = 1.0\nsigma2_u = 1.0\nsigma2_a = 1.0\nsigma2_y = 1.0\nc_grid = [1.0]\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        let err = cfg.validate_for(Experiment::LinearIgnorance).unwrap_err();
        assert!(err.to_string().contains("linear.alpha"));
    }
}
