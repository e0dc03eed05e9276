//! Monte Carlo sweep of the spectral plug-in estimator over `n` and `K`.

use serde::Serialize;
use serde_json::json;

use super::{par_collect, task_index, task_rng, ExperimentConfig, Row, RunReport};
use crate::error::Result;
use crate::model::simulate_increments;
use crate::spectral::{ecf, h_delta_norm, h_delta_norm_fourier, spectral_from_cf};
use crate::stats::median;
use crate::wavelets::WaveletBasis;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralRow {
    pub n: usize,
    pub rep: usize,
    pub cutoff_rule: &'static str,
    pub cutoff: usize,
    pub lambda_true: f64,
    pub lambda_hat: f64,
    pub h_delta_error: f64,
    pub h_delta_error_fourier: f64,
    pub l2_error: f64,
}

impl Row for SpectralRow {
    const COLUMNS: &'static [(&'static str, &'static str)] = &[
        ("n", "number of increments"),
        ("rep", "replication index"),
        ("cutoff_rule", "'n' for K = n (or the configured cutoff), 'fixed' for the extra fixed cutoffs"),
        ("cutoff", "spectral cutoff K"),
        ("lambda_true", "intensity of the truth"),
        ("lambda_hat", "spectral intensity estimate"),
        ("h_delta_error", "H(delta) distance of the estimate to the truth, wavelet form"),
        ("h_delta_error_fourier", "H(delta) distance, Fourier form"),
        ("l2_error", "L2 distance of the estimate to the truth"),
    ];
}

fn one(cfg: &ExperimentConfig, basis: &WaveletBasis, slot: usize, rep: usize) -> Result<Vec<SpectralRow>> {
    let n = cfg.sample_sizes[slot];
    let truth = cfg.truth_levy()?;
    let grid = truth.grid();
    let mut rng = task_rng(cfg.seed, task_index(slot, rep));
    let sample = simulate_increments(&truth, n, &mut rng);
    let mut cutoffs = vec![("n", cfg.spectral.cutoff_for(n))];
    cutoffs.extend(cfg.fixed_cutoffs.iter().map(|&k| ("fixed", k)));
    let k_max = cutoffs.iter().map(|c| c.1).max().unwrap_or(2);
    let phi = ecf(&sample, k_max);
    let delta_exp = cfg.spectral.delta_exponent;
    cutoffs
        .into_iter()
        .map(|(rule, k)| {
            let est = spectral_from_cf(&phi, k, truth.delta(), grid);
            let diff = est.nu_hat.sub(truth.values());
            Ok(SpectralRow {
                n,
                rep,
                cutoff_rule: rule,
                cutoff: k,
                lambda_true: truth.lambda(),
                lambda_hat: est.lambda_hat,
                h_delta_error: h_delta_norm(&diff, delta_exp, basis)?,
                h_delta_error_fourier: h_delta_norm_fourier(&diff, delta_exp),
                l2_error: diff.l2_norm(),
            })
        })
        .collect()
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunReport<SpectralRow>> {
    cfg.validate()?;
    let basis = WaveletBasis::new(cfg.prior.validate()?, &cfg.grid()?, cfg.max_levels())?;
    let r = cfg.replications;
    let rows: Vec<SpectralRow> =
        par_collect(cfg.sample_sizes.len() * r, |i| one(cfg, &basis, i / r, i % r))?.into_iter().flatten().collect();

    let pick = |n: usize, rule: &str, k: Option<usize>| -> Vec<&SpectralRow> {
        rows.iter().filter(|x| x.n == n && x.cutoff_rule == rule && k.map_or(true, |k| x.cutoff == k)).collect()
    };
    let med_n: Vec<f64> = cfg
        .sample_sizes
        .iter()
        .map(|&n| median(&pick(n, "n", None).iter().map(|x| x.h_delta_error).collect::<Vec<_>>()))
        .collect();
    let rmse: Vec<f64> = cfg
        .sample_sizes
        .iter()
        .map(|&n| {
            let sel = pick(n, "n", None);
            (sel.iter().map(|x| (x.lambda_hat - x.lambda_true).powi(2)).sum::<f64>() / sel.len() as f64).sqrt()
        })
        .collect();
    let fixed: serde_json::Map<String, serde_json::Value> = cfg
        .fixed_cutoffs
        .iter()
        .map(|&k| {
            let meds: Vec<f64> = cfg
                .sample_sizes
                .iter()
                .map(|&n| median(&pick(n, "fixed", Some(k)).iter().map(|x| x.h_delta_error).collect::<Vec<_>>()))
                .collect();
            (format!("K={k}"), json!(meds))
        })
        .collect();
    let decreasing = !rows.is_empty() && med_n.windows(2).all(|w| w[1] < w[0]);
    let ratios: Vec<f64> = rows.iter().map(|x| x.h_delta_error / x.h_delta_error_fourier).collect();
    let summary = json!({
        "sample_sizes": cfg.sample_sizes,
        "delta": cfg.delta()?,
        "lambda_delta": cfg.delta()? * cfg.truth_levy()?.lambda(),
        "median_h_delta_error": if rows.is_empty() { json!(null) } else { json!(med_n) },
        "median_h_delta_error_fixed": fixed,
        "lambda_rmse": if rows.is_empty() { json!(null) } else { json!(rmse) },
        "h_delta_median_decreasing": decreasing,
        "wavelet_to_fourier_ratio_range": if rows.is_empty() { json!(null) } else {
            json!([ratios.iter().cloned().fold(f64::INFINITY, f64::min), ratios.iter().cloned().fold(0.0, f64::max)])
        },
    });
    let passed = rows_ok(&rows) && (rows.is_empty() || decreasing);
    Ok(RunReport { command: "spectral", rows, summary, passed })
}

fn rows_ok(rows: &[SpectralRow]) -> bool {
    rows.iter().all(|r| r.lambda_hat.is_finite() && r.h_delta_error.is_finite())
}
