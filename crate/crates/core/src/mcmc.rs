//! Posterior sampling over the prior's coefficient box.
//!
//! Coordinatewise random-walk Metropolis in `u`-space with reflection at the
//! box faces. The reflected Gaussian proposal is symmetric, so the acceptance
//! ratio is the likelihood ratio alone. Step sizes are per level; a pilot
//! phase inside burn-in may rescale them, after which they stay frozen.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::circle::GridFunction;
use crate::error::{Error, Result};
use crate::model::{increment_law, IncrementSample, LevyDensity, LocatedSample};
use crate::prior::WaveletPrior;
use crate::wavelets::{level_of, WaveletCoeffs};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McmcConfig {
    pub n_iter: usize,
    pub burn_in: usize,
    pub thinning: usize,
    /// Per-level proposal standard deviation in `u` units; `None` means `B`.
    pub step: Option<Vec<f64>>,
    /// Adapt step sizes during burn-in.
    pub pilot: bool,
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self { n_iter: 6000, burn_in: 2000, thinning: 2, step: None, pilot: true, seed: 0 }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.n_iter && self.n_iter > 0 {
            return Err(Error::InvalidConfig(format!(
                "burn_in ({}) must be smaller than n_iter ({})",
                self.burn_in, self.n_iter
            )));
        }
        if self.thinning == 0 {
            return Err(Error::InvalidConfig("thinning must be at least 1".into()));
        }
        Ok(())
    }
}

/// Retained states of one chain.
#[derive(Clone, Debug, PartialEq)]
pub struct McmcChain {
    pub states: Vec<WaveletCoeffs>,
    pub log_likelihoods: Vec<f64>,
    /// Indexed by level `l + 1`.
    pub accepted: Vec<usize>,
    pub proposed: Vec<usize>,
    /// Step sizes after the pilot phase, per level.
    pub steps: Vec<f64>,
}

impl McmcChain {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn acceptance_rates(&self) -> Vec<f64> {
        self.accepted.iter().zip(&self.proposed).map(|(&a, &p)| a as f64 / p.max(1) as f64).collect()
    }

    /// Trace of one coordinate.
    pub fn trace(&self, l: i32, k: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.get(l, k)).collect()
    }
}

/// Reflects `x` into `[-b, b]`.
fn reflect_into(mut x: f64, b: f64) -> f64 {
    loop {
        if x > b {
            x = 2.0 * b - x;
        } else if x < -b {
            x = -2.0 * b - x;
        } else {
            return x;
        }
    }
}

struct Target<'a> {
    prior: &'a WaveletPrior,
    data: Option<LocatedSample>,
}

impl Target<'_> {
    fn log_likelihood(&self, v: &GridFunction) -> Result<f64> {
        match &self.data {
            None => Ok(0.0),
            Some(data) => {
                let nu = LevyDensity::from_log(v, self.prior.delta())?;
                data.log_likelihood_with(&increment_law(&nu), nu.delta())
            }
        }
    }
}

const PILOT_WINDOW: usize = 50;

/// Runs the sampler from `u = 0`. Deterministic for a fixed `cfg.seed`.
pub fn run_mcmc(prior: &WaveletPrior, sample: &IncrementSample, cfg: &McmcConfig) -> Result<McmcChain> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    run_mcmc_with(prior, sample, cfg, &mut rng)
}

pub fn run_mcmc_with<R: Rng + ?Sized>(
    prior: &WaveletPrior,
    sample: &IncrementSample,
    cfg: &McmcConfig,
    rng: &mut R,
) -> Result<McmcChain> {
    cfg.validate()?;
    let b = prior.b();
    let levels = prior.levels();
    let n_levels = levels + 1;
    let mut steps = match &cfg.step {
        Some(s) if s.len() == n_levels => s.clone(),
        Some(s) => return Err(Error::LengthMismatch { expected: n_levels, got: s.len() }),
        None => vec![b; n_levels],
    };
    let target = Target {
        prior,
        data: if sample.is_empty() { None } else { Some(LocatedSample::new(prior.grid(), sample)) },
    };
    let dim = prior.dim();
    let level_slot: Vec<usize> = (0..dim).map(|i| (level_of(i).0 + 1) as usize).collect();
    let mut u = WaveletCoeffs::zeros(levels);
    let mut v = prior.log_density(&u)?;
    let mut ll = target.log_likelihood(&v)?;

    let mut chain = McmcChain {
        states: Vec::new(),
        log_likelihoods: Vec::new(),
        accepted: vec![0; n_levels],
        proposed: vec![0; n_levels],
        steps: Vec::new(),
    };
    let mut window_acc = vec![0usize; n_levels];
    let mut window_prop = vec![0usize; n_levels];

    for sweep in 0..cfg.n_iter {
        for i in 0..dim {
            let slot = level_slot[i];
            let z: f64 = rng.sample(StandardNormal);
            let old = u.as_slice()[i];
            let new = reflect_into(old + steps[slot] * z, b);
            let log_u: f64 = rng.gen::<f64>().ln();
            if sweep >= cfg.burn_in {
                chain.proposed[slot] += 1;
            }
            window_prop[slot] += 1;
            if new.abs() >= b {
                continue;
            }
            let shift = prior.weights()[i] * (new - old);
            let psi = prior.basis().functions()[i].values();
            let v_new = GridFunction::new(
                prior.grid(),
                v.values().iter().zip(psi).map(|(a, p)| a + shift * p).collect(),
            )?;
            let ll_new = match target.log_likelihood(&v_new) {
                Ok(x) => x,
                Err(e) => {
                    return Err(Error::McmcAborted {
                        sweep,
                        reason: format!("coordinate {i}, proposal {new}: {e}"),
                    })
                }
            };
            if log_u < ll_new - ll {
                u.as_mut_slice()[i] = new;
                v = v_new;
                ll = ll_new;
                window_acc[slot] += 1;
                if sweep >= cfg.burn_in {
                    chain.accepted[slot] += 1;
                }
            }
        }
        // rebuild v from u so incremental updates cannot drift
        v = prior.log_density(&u)?;
        if cfg.pilot && sweep < cfg.burn_in && (sweep + 1) % PILOT_WINDOW == 0 {
            for s in 0..n_levels {
                let rate = window_acc[s] as f64 / window_prop[s].max(1) as f64;
                if rate < 0.2 {
                    steps[s] /= 1.5;
                } else if rate > 0.5 {
                    steps[s] = (steps[s] * 1.5).min(2.0 * b);
                }
            }
            window_acc.iter_mut().for_each(|x| *x = 0);
            window_prop.iter_mut().for_each(|x| *x = 0);
        }
        if sweep >= cfg.burn_in && (sweep - cfg.burn_in) % cfg.thinning == 0 {
            chain.states.push(u.clone());
            chain.log_likelihoods.push(ll);
        }
    }
    chain.steps = steps;
    Ok(chain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::CircleGrid;
    use crate::model::simulate_increments;
    use crate::prior::PriorConfig;
    use crate::stats::{ks_critical, ks_statistic};

    #[test]
    fn reflection_stays_in_box() {
        assert_eq!(reflect_into(1.3, 1.0), 0.7);
        assert_eq!(reflect_into(-1.3, 1.0), -0.7);
        assert!((reflect_into(4.5, 1.0) - 0.5).abs() < 1e-15);
        assert_eq!(reflect_into(0.2, 1.0), 0.2);
    }

    #[test]
    fn config_validation() {
        assert!(McmcConfig { burn_in: 10, n_iter: 10, ..Default::default() }.validate().is_err());
        assert!(McmcConfig { thinning: 0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn zero_data_gives_uniform_marginals() {
        let g = CircleGrid::new(64).unwrap();
        let prior = WaveletPrior::new(&PriorConfig { levels: 2, ..Default::default() }, &g, 0.5).unwrap();
        let cfg = McmcConfig { n_iter: 41_000, burn_in: 1000, thinning: 4, seed: 7, ..Default::default() };
        let chain = run_mcmc(&prior, &IncrementSample::new(vec![]), &cfg).unwrap();
        assert_eq!(chain.len(), 10_000);
        let crit = ks_critical(chain.len(), 0.01);
        for i in 0..prior.dim() {
            let (l, k) = level_of(i);
            let tr = chain.trace(l, k);
            assert!(tr.iter().all(|x| x.abs() < 1.0));
            let d = ks_statistic(&tr, |x| ((x + 1.0) / 2.0).clamp(0.0, 1.0));
            assert!(d < crit, "({l},{k}): {d} vs {crit}");
        }
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let g = CircleGrid::new(128).unwrap();
        let prior = WaveletPrior::new(&PriorConfig { levels: 1, ..Default::default() }, &g, 0.5).unwrap();
        let truth = prior.levy(&WaveletCoeffs::from_flat(1, vec![0.3, -0.2]).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = simulate_increments(&truth, 200, &mut rng);
        let cfg = McmcConfig { n_iter: 300, burn_in: 100, seed: 3, ..Default::default() };
        let a = run_mcmc(&prior, &s, &cfg).unwrap();
        let b = run_mcmc(&prior, &s, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.states.iter().all(|u| u.as_slice().iter().all(|x| x.abs() < 1.0)));
    }

    #[test]
    fn posterior_mean_beats_prior_mean() {
        let g = CircleGrid::new(256).unwrap();
        let prior = WaveletPrior::new(&PriorConfig { levels: 2, ..Default::default() }, &g, 0.6).unwrap();
        let u0 = WaveletCoeffs::from_flat(2, vec![0.4, -0.5, 0.6, -0.3]).unwrap();
        let truth = prior.levy(&u0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = simulate_increments(&truth, 2000, &mut rng);
        let cfg = McmcConfig { n_iter: 1500, burn_in: 500, seed: 9, ..Default::default() };
        let chain = run_mcmc(&prior, &s, &cfg).unwrap();
        let mut mean = GridFunction::zeros(&g);
        for u in &chain.states {
            mean = mean.add(prior.levy(u).unwrap().values());
        }
        let mean = mean.scale(1.0 / chain.len() as f64);
        // prior mean of ν = e^v, by Monte Carlo
        let mut prior_mean = GridFunction::zeros(&g);
        for _ in 0..2000 {
            prior_mean = prior_mean.add(prior.sample(&mut rng).unwrap().1.values());
        }
        let prior_mean = prior_mean.scale(1.0 / 2000.0);
        let post_err = mean.sub(truth.values()).sup_norm();
        let prior_err = prior_mean.sub(truth.values()).sup_norm();
        assert!(post_err < prior_err, "{post_err} vs {prior_err}");
        assert!(chain.acceptance_rates().iter().all(|&r| r > 0.05 && r < 0.95));
    }
}
