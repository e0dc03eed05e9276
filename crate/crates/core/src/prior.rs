//! Wavelet series prior on the log Lévy density.
//!
//! `v = Σ_{l<J} Σ_k a_l u_{lk} ψ_{lk}` with `u_{lk}` i.i.d. uniform on
//! `(-B, B)` and `a_l = 2^{-l}/(l² + 1)`, and `ν = e^v`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circle::{CircleGrid, GridFunction};
use crate::error::{Error, Result};
use crate::model::LevyDensity;
use crate::wavelets::{level_sup_sums, WaveletBasis, WaveletCoeffs, WaveletFamily};

/// Level weight `a_l = 2^{-l} (l² + 1)^{-1}`; `a_{-1} = a_0 = 1`.
pub fn prior_weight(l: i32) -> f64 {
    2f64.powi(-l) / ((l * l) as f64 + 1.0)
}

/// `J = round(log₂ n / (2s + 1))`, clamped to `[0, max_levels]`.
pub fn choose_j(n: usize, s: f64, max_levels: usize) -> usize {
    if n <= 1 {
        return 0;
    }
    let j = ((n as f64).log2() / (2.0 * s + 1.0)).round();
    (j.max(0.0) as usize).min(max_levels)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorConfig {
    /// Box half-width `B`.
    pub b: f64,
    /// Truncation level `J`; `2^J` coefficients.
    pub levels: usize,
    /// Interiority margin `γ`.
    pub gamma: f64,
    pub family: String,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self { b: 1.0, levels: 2, gamma: 0.1, family: "db4".into() }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<WaveletFamily> {
        if !(self.b > self.gamma && self.gamma > 0.0 && self.b.is_finite()) {
            return Err(Error::InvalidConfig(format!("prior needs B > γ > 0, got B = {}, γ = {}", self.b, self.gamma)));
        }
        self.family.parse()
    }
}

/// The prior on a fixed grid, with the sampled basis cached.
#[derive(Clone, Debug)]
pub struct WaveletPrior {
    cfg: PriorConfig,
    basis: WaveletBasis,
    weights: Vec<f64>,
    delta: f64,
}

impl WaveletPrior {
    pub fn new(cfg: &PriorConfig, grid: &CircleGrid, delta: f64) -> Result<Self> {
        let family = cfg.validate()?;
        let basis = WaveletBasis::new(family, grid, cfg.levels)?;
        let weights = WaveletCoeffs::zeros(cfg.levels).iter().map(|(l, _, _)| prior_weight(l)).collect();
        Ok(Self { cfg: cfg.clone(), basis, weights, delta })
    }

    pub fn config(&self) -> &PriorConfig {
        &self.cfg
    }

    pub fn basis(&self) -> &WaveletBasis {
        &self.basis
    }

    pub fn grid(&self) -> &CircleGrid {
        self.basis.grid()
    }

    pub fn levels(&self) -> usize {
        self.cfg.levels
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn b(&self) -> f64 {
        self.cfg.b
    }

    /// `a_l` for each flat coefficient index.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `v = Σ a_l u_{lk} ψ_{lk}`.
    pub fn log_density(&self, u: &WaveletCoeffs) -> Result<GridFunction> {
        let scaled: Vec<f64> = u.as_slice().iter().zip(&self.weights).map(|(x, a)| x * a).collect();
        self.basis.synthesize(&WaveletCoeffs::from_flat(self.cfg.levels, scaled)?)
    }

    pub fn levy(&self, u: &WaveletCoeffs) -> Result<LevyDensity> {
        LevyDensity::from_log(&self.log_density(u)?, self.delta)
    }

    /// Box coordinates `u_{lk} = ⟨v, ψ_{lk}⟩ / a_l` of a log density.
    pub fn coordinates(&self, v: &GridFunction) -> Result<WaveletCoeffs> {
        let c = self.basis.analyze(v, self.cfg.levels)?;
        WaveletCoeffs::from_flat(self.cfg.levels, c.as_slice().iter().zip(&self.weights).map(|(x, a)| x / a).collect())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(WaveletCoeffs, LevyDensity)> {
        let b = self.cfg.b;
        let u = WaveletCoeffs::from_flat(self.cfg.levels, (0..self.dim()).map(|_| rng.gen_range(-b..b)).collect())?;
        let nu = self.levy(&u)?;
        Ok((u, nu))
    }

    /// `B Σ_l a_l sup_x Σ_k |ψ_{lk}(x)|`, a bound on `‖v‖_∞` over the whole prior support.
    pub fn sup_bound(&self) -> f64 {
        level_sup_sums(&self.basis, self.cfg.levels)
            .iter()
            .enumerate()
            .map(|(i, s)| prior_weight(i as i32 - 1) * s)
            .sum::<f64>()
            * self.cfg.b
    }

    /// Largest intensity any prior draw can have.
    pub fn lambda_bound(&self) -> f64 {
        self.sup_bound().exp()
    }
}

pub fn sample_prior<R: Rng + ?Sized>(prior: &WaveletPrior, rng: &mut R) -> Result<(WaveletCoeffs, LevyDensity)> {
    prior.sample(rng)
}

/// A lag that keeps every prior draw identifiable: `0.9 π / λ_max`.
pub fn default_delta(cfg: &PriorConfig, grid: &CircleGrid) -> Result<f64> {
    let prior = WaveletPrior::new(cfg, grid, 1.0)?;
    Ok(0.9 * std::f64::consts::PI / prior.lambda_bound())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assumption1Report {
    /// `min_{lk} [(B - γ) a_l - |⟨v_0, ψ_{lk}⟩|]`; nonnegative when the truth is interior.
    pub coefficient_margin: f64,
    /// `π/Δ - λ_0`.
    pub truth_lambda_margin: f64,
    /// Largest intensity among the prior draws inspected.
    pub draws_lambda_max: f64,
    /// `π/Δ - λ_max` over the whole prior support.
    pub prior_lambda_margin: f64,
    pub passed: bool,
}

/// Interiority of the truth in the coefficient box and `λ < π/Δ` for the
/// truth and for the prior (both its draws and its support bound).
pub fn check_assumption1<R: Rng + ?Sized>(
    nu0: &LevyDensity,
    prior: &WaveletPrior,
    draws: usize,
    rng: &mut R,
) -> Result<Assumption1Report> {
    let limit = std::f64::consts::PI / prior.delta();
    let c = prior.basis().analyze(&nu0.log_values(), prior.levels())?;
    let room = prior.b() - prior.config().gamma;
    let coefficient_margin =
        c.iter().map(|(l, _, x)| room * prior_weight(l) - x.abs()).fold(f64::INFINITY, f64::min);
    let mut draws_lambda_max: f64 = 0.0;
    for _ in 0..draws {
        draws_lambda_max = draws_lambda_max.max(prior.sample(rng)?.1.lambda());
    }
    let truth_lambda_margin = limit - nu0.lambda();
    let prior_lambda_margin = limit - prior.lambda_bound().max(draws_lambda_max);
    Ok(Assumption1Report {
        coefficient_margin,
        truth_lambda_margin,
        draws_lambda_max,
        prior_lambda_margin,
        passed: coefficient_margin >= 0.0 && truth_lambda_margin > 0.0 && prior_lambda_margin > 0.0,
    })
}
