//! Posterior contraction in sup norm across sample sizes.

use serde::Serialize;
use serde_json::json;

use super::{fit, par_collect, ExperimentConfig, Row, RunReport};
use crate::error::Result;
use crate::posterior::posterior_mean_density;
use crate::stats::{loglog_slope, mean, median, quantile};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateRow {
    pub n: usize,
    pub rep: usize,
    pub levels: usize,
    pub sup_error: f64,
    pub l2_error: f64,
    pub sup_radius: f64,
    pub lambda_true: f64,
    pub lambda_mean: f64,
    pub acceptance: f64,
}

impl Row for RateRow {
    const COLUMNS: &'static [(&'static str, &'static str)] = &[
        ("n", "number of increments"),
        ("rep", "replication index"),
        ("levels", "wavelet levels J of the prior"),
        ("sup_error", "sup-norm distance of the posterior mean density to the truth"),
        ("l2_error", "L2 distance of the posterior mean density to the truth"),
        ("sup_radius", "posterior quantile (credible_level) of the sup distance of draws to the posterior mean"),
        ("lambda_true", "intensity of the truth"),
        ("lambda_mean", "posterior mean intensity"),
        ("acceptance", "overall Metropolis acceptance rate after burn-in"),
    ];
}

/// Accepted slope band, as multiples of the minimax exponent `-s/(2s+1)`.
pub const SLOPE_BAND: (f64, f64) = (1.5, 0.5);

pub fn slope_band(s: f64) -> (f64, f64) {
    let r = s / (2.0 * s + 1.0);
    (-SLOPE_BAND.0 * r, -SLOPE_BAND.1 * r)
}

fn one(cfg: &ExperimentConfig, slot: usize, rep: usize) -> Result<RateRow> {
    let n = cfg.sample_sizes[slot];
    let truth = cfg.truth_levy()?;
    let f = fit(cfg, &truth, slot, rep, n)?;
    let post = posterior_mean_density(&f.chain, &f.prior)?;
    let mut radii = Vec::with_capacity(f.chain.len());
    let mut lambdas = Vec::with_capacity(f.chain.len());
    for u in &f.chain.states {
        let nu = f.prior.levy(u)?;
        radii.push(nu.values().sub(post.values()).sup_norm());
        lambdas.push(nu.lambda());
    }
    let diff = post.values().sub(truth.values());
    let (acc, prop) = (f.chain.accepted.iter().sum::<usize>(), f.chain.proposed.iter().sum::<usize>());
    Ok(RateRow {
        n,
        rep,
        levels: f.prior.levels(),
        sup_error: diff.sup_norm(),
        l2_error: diff.l2_norm(),
        sup_radius: quantile(&radii, cfg.credible_level),
        lambda_true: truth.lambda(),
        lambda_mean: mean(&lambdas),
        acceptance: acc as f64 / prop.max(1) as f64,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunReport<RateRow>> {
    cfg.validate()?;
    let r = cfg.replications;
    let rows = par_collect(cfg.sample_sizes.len() * r, |i| one(cfg, i / r, i % r))?;
    let ns: Vec<f64> = cfg.sample_sizes.iter().map(|&n| n as f64).collect();
    let medians: Vec<f64> = cfg
        .sample_sizes
        .iter()
        .map(|&n| median(&rows.iter().filter(|x| x.n == n).map(|x| x.sup_error).collect::<Vec<_>>()))
        .collect();
    let band = slope_band(cfg.smoothness);
    let (slope, passed, decreasing) = if rows.is_empty() || ns.len() < 2 {
        (None, true, None)
    } else {
        let slope = loglog_slope(&ns, &medians);
        let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
        (Some(slope), decreasing && slope >= band.0 && slope <= band.1, Some(decreasing))
    };
    let summary = json!({
        "sample_sizes": cfg.sample_sizes,
        "levels": cfg.sample_sizes.iter().map(|&n| cfg.levels_for(n)).collect::<Vec<_>>(),
        "delta": cfg.delta()?,
        "median_sup_error": if rows.is_empty() { json!(null) } else { json!(medians) },
        "slope": slope,
        "slope_band": [band.0, band.1],
        "medians_decreasing": decreasing,
    });
    Ok(RunReport { command: "rate_sweep", rows, summary, passed })
}
