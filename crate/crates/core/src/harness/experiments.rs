use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::json;

use crate::binary::{self, DegenerateSide, IgnoranceInterval};
use crate::estimation::{fit, sample_dataset, FitConfig, FitResult};
use crate::linear::{self, ScalingFactor};
use crate::positivity;
use crate::seed::{derive_seed, f64_coord};

use super::config::{ExperimentConfig, Setting};
use super::{HarnessError, OutputFile, RunOutput};

// Stream tags keep the derived seeds of different draws apart.
const DATA_STREAM: u64 = 1;
const FIT_STREAM: u64 = 2;
const CLOUD_STREAM: u64 = 3;
const RATE_STREAM: u64 = 4;

fn table(name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<OutputFile, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| HarnessError::Numerical(format!("writing {name}: {e}"));
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row).map_err(fail)?;
    }
    let contents = w.into_inner().map_err(|e| HarnessError::Numerical(format!("writing {name}: {e}")))?;
    Ok(OutputFile { name: name.to_string(), contents })
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn constant(v: &[f64]) -> Option<f64> {
    let first = *v.first()?;
    v.iter().all(|&x| x == first).then_some(first)
}

/// `c, valid, s_c, beta_shift_norm, sigma2_y1, cov_residual` over the c grid.
///
/// `s_c` is only filled in when `alpha` and `beta` are constant vectors;
/// `cov_residual` (largest relative difference between the two implied
/// observable covariances) only for valid rows.
pub fn run_linear_ignorance(config: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    let section = config.linear()?;
    let params = section.params()?;
    let grid = section.c_grid.values("linear.c_grid")?;
    let base_cov = linear::observable_covariance(&params);
    let b = constant(params.beta().as_slice()).filter(|&b| b != 0.0);
    let multiplier_defined = constant(params.alpha().as_slice()).is_some() && b.is_some();

    let mut rows = Vec::with_capacity(grid.len());
    let mut valid_s = Vec::new();
    for &c in &grid {
        let sc = ScalingFactor::new(c).map_err(|e| HarnessError::config("linear.c_grid", e))?;
        let shift = linear::beta_shift(&params, sc)?;
        let sigma2_y1 = linear::implied_outcome_variance(&params, sc)?;
        let valid = sigma2_y1 > 0.0;
        let s_c = b.filter(|_| multiplier_defined).map(|b| 1.0 + shift[0] / b);
        let residual = if valid {
            let eq = linear::equivalent_params(&params, sc)?;
            Some(base_cov.max_relative_diff(&linear::observable_covariance(&eq), 1e-12))
        } else {
            None
        };
        if valid {
            if let Some(s) = s_c {
                valid_s.push(s);
            }
        }
        rows.push(vec![
            num(c),
            valid.to_string(),
            s_c.map(num).unwrap_or_default(),
            num(shift.norm()),
            num(sigma2_y1),
            residual.map(num).unwrap_or_default(),
        ]);
    }
    let mut notes = BTreeMap::new();
    notes.insert("valid_count".into(), json!(rows.iter().filter(|r| r[1] == "true").count()));
    if !valid_s.is_empty() {
        let lo = valid_s.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = valid_s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        notes.insert("s_c_range_on_valid_grid".into(), json!([lo, hi]));
    }
    let file = table(
        "linear_ignorance.csv",
        &["c", "valid", "s_c", "beta_shift_norm", "sigma2_y1", "cov_residual"],
        &rows,
    )?;
    Ok(RunOutput { files: vec![file], notes })
}

/// Ignorance interval at `s`, falling back to the limiting region when the
/// posterior of `U` is exactly 0 or 1.
fn interval_at(params: &binary::BinaryParams, s: usize) -> Result<IgnoranceInterval, HarnessError> {
    let post = binary::posterior_u(params, s)?;
    if post > 0.0 && post < 1.0 {
        return Ok(binary::ignorance_region(params, s)?);
    }
    let side = if post <= 0.0 { DegenerateSide::UToZero } else { DegenerateSide::UToOne };
    let mut interval = binary::degenerate_ignorance(params.pi_u(), binary::observational_prob(params, s)?, side)?;
    interval.point_true = Some(binary::intervention_prob(params, s)?);
    Ok(interval)
}

/// `s, lo, hi, pi_do_true, pi_obs, width` for `s = 0..=m`.
pub fn run_binary_ignorance(config: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    let params = config.binary()?.params()?;
    let mut rows = Vec::with_capacity(params.m() + 1);
    let mut uncovered = Vec::new();
    for s in 0..=params.m() {
        let iv = interval_at(&params, s)?;
        let truth = iv.point_true.unwrap_or(f64::NAN);
        if !iv.contains(truth, 1e-12) {
            uncovered.push(s);
        }
        rows.push(vec![s.to_string(), num(iv.lo), num(iv.hi), num(truth), num(iv.point_obs), num(iv.width())]);
    }
    let mut notes = BTreeMap::new();
    notes.insert("truth_outside_interval_at_s".into(), json!(uncovered));
    let file = table("binary_ignorance.csv", &["s", "lo", "hi", "pi_do_true", "pi_obs", "width"], &rows)?;
    Ok(RunOutput { files: vec![file], notes })
}

struct FitJob {
    setting: Setting,
    setting_idx: usize,
    gamma: f64,
    rep: usize,
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Penalized fits over the gamma grid, in each setting, on `replications`
/// simulated datasets. One dataset (with proxies) is drawn per replication
/// and shared by every setting and gamma target; the standard setting sees
/// it with the proxies stripped.
///
/// Writes `estimate.csv` (one row per fit) and `estimate_summary.csv`
/// (mean and sd of `pi_do_hat` per setting and target).
pub fn run_estimate(config: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    let bin = config.binary()?;
    let params = bin.params()?;
    let proxies = config.proxies.clone().unwrap_or_default().params()?;
    let est = config.estimate.as_ref().ok_or_else(|| HarnessError::config("estimate", "section is required"))?;
    let target_a = est.target(params.m())?;
    let gammas = est.gamma_targets.values("estimate.gamma_targets")?;

    let datasets = (0..est.replications)
        .into_par_iter()
        .map(|rep| sample_dataset(&params, Some(&proxies), est.n, derive_seed(config.seed, &[DATA_STREAM, rep as u64])))
        .collect::<Result<Vec<_>, _>>()?;

    let mut jobs = Vec::new();
    for (setting_idx, &setting) in est.settings.iter().enumerate() {
        for &gamma in &gammas {
            for rep in 0..est.replications {
                jobs.push(FitJob { setting, setting_idx, gamma, rep });
            }
        }
    }
    let fits = jobs
        .par_iter()
        .map(|job| -> Result<FitResult, HarnessError> {
            let mut fc = FitConfig::new(
                target_a.clone(),
                job.gamma,
                derive_seed(config.seed, &[FIT_STREAM, job.setting_idx as u64, f64_coord(job.gamma), job.rep as u64]),
            );
            fc.lambda = est.lambda;
            fc.max_iters = est.max_iters;
            fc.step_size = est.step_size;
            fc.tol = est.tol;
            fc.restarts = est.restarts;
            let with_proxies = job.setting == Setting::Proxy;
            let result = if with_proxies {
                fit(&datasets[job.rep], &fc, true)
            } else {
                fit(&datasets[job.rep].without_proxies(), &fc, false)
            };
            result.map_err(|e| match e {
                crate::Error::Numerical(msg) => HarnessError::Numerical(format!(
                    "{} fit at gamma {} rep {}: {msg}",
                    job.setting.name(),
                    job.gamma,
                    job.rep
                )),
                other => other.into(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let rows: Vec<Vec<String>> = jobs
        .iter()
        .zip(&fits)
        .map(|(job, f)| {
            vec![
                job.setting.name().to_string(),
                num(job.gamma),
                job.rep.to_string(),
                num(f.pi_do_hat),
                num(f.gamma_hat),
                f.converged.to_string(),
            ]
        })
        .collect();

    let mut summary = Vec::new();
    let mut converged_total = 0;
    for (block_jobs, block_fits) in jobs.chunks(est.replications).zip(fits.chunks(est.replications)) {
        let values: Vec<f64> = block_fits.iter().map(|f| f.pi_do_hat).collect();
        let (mean, sd) = mean_sd(&values);
        let converged = block_fits.iter().filter(|f| f.converged).count();
        converged_total += converged;
        let job = &block_jobs[0];
        summary.push(vec![
            job.setting.name().to_string(),
            num(job.gamma),
            num(mean),
            num(sd),
            converged.to_string(),
            block_fits.len().to_string(),
        ]);
    }

    let target_s = target_a.iter().filter(|&&b| b).count();
    let iv = interval_at(&params, target_s)?;
    let mut notes = BTreeMap::new();
    notes.insert("target_s".into(), json!(target_s));
    notes.insert("ignorance_interval".into(), json!([iv.lo, iv.hi]));
    notes.insert("pi_do_true".into(), json!(iv.point_true));
    notes.insert("pi_obs".into(), json!(iv.point_obs));
    notes.insert("fits".into(), json!(fits.len()));
    notes.insert("converged_fits".into(), json!(converged_total));

    let files = vec![
        table("estimate.csv", &["setting", "gamma_target", "rep", "pi_do_hat", "gamma_hat", "converged"], &rows)?,
        table(
            "estimate_summary.csv",
            &["setting", "gamma_target", "mean_pi_do_hat", "sd_pi_do_hat", "converged", "fits"],
            &summary,
        )?,
    ];
    Ok(RunOutput { files, notes })
}

/// Projection clouds (`positivity_m{m}.csv`: `u, x1, x2, u_hat`) and the
/// misclassification trend (`positivity_rates.csv`).
pub fn run_positivity(config: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    let bin = config.binary()?;
    let pos = config.positivity.clone().unwrap_or_default();
    if let Some(m) = pos.m_values.iter().find(|&&m| m == 0 || m % 2 != 0) {
        return Err(HarnessError::config("positivity.m_values", format!("every m must be even and positive, found {m}")));
    }
    let panels = pos
        .m_values
        .par_iter()
        .map(|&m| -> Result<_, HarnessError> {
            let params = bin.params_with_m(m)?;
            let cloud = positivity::projection_cloud(&params, m, pos.n, derive_seed(config.seed, &[CLOUD_STREAM, m as u64]))?;
            let report = positivity::misclassification_report(
                &params,
                m,
                pos.rate_samples,
                derive_seed(config.seed, &[RATE_STREAM, m as u64]),
            )?;
            Ok((cloud, report, positivity::hoeffding_bound(&params, m)))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let bit = |b: bool| u8::from(b).to_string();
    let mut files = Vec::new();
    let mut rate_rows = Vec::new();
    let mut overlaps = serde_json::Map::new();
    let mut boundary = f64::NAN;
    for (cloud, report, bound) in &panels {
        boundary = cloud.boundary;
        let rows: Vec<Vec<String>> = cloud
            .samples
            .iter()
            .map(|p| vec![bit(p.u), num(p.x1), num(p.x2), bit(p.u_hat)])
            .collect();
        files.push(table(&format!("positivity_m{}.csv", cloud.m), &["u", "x1", "x2", "u_hat"], &rows)?);
        rate_rows.push(vec![cloud.m.to_string(), num(report.rate()), num(*bound)]);
        overlaps.insert(
            cloud.m.to_string(),
            json!({
                "p_uhat1_given_u0": report.overlap_given_u0(),
                "p_uhat0_given_u1": report.overlap_given_u1(),
                "rate_standard_error": report.standard_error(),
            }),
        );
    }
    files.push(table("positivity_rates.csv", &["m", "misclass_rate", "hoeffding_bound"], &rate_rows)?);
    let mut notes = BTreeMap::new();
    notes.insert("decision_boundary_x1".into(), json!(boundary));
    notes.insert("overlap".into(), serde_json::Value::Object(overlaps));
    Ok(RunOutput { files, notes })
}
