//! Spectral plug-in estimator of `λ` and `ν`.
//!
//! With `Φ_n(k) = Δ^{-1} Log φ_n(k)` (principal branch, and 0 where the
//! empirical characteristic function vanishes):
//! `λ̂ = -(1/K) Σ_{k=1}^K Re Φ_n(k)` and `F ν̂(k) = (Φ_n(k) + λ̂) 1{|k| <= K}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circle::{idft, CircleGrid, GridFunction, Spectrum};
use crate::error::{Error, Result};
use crate::model::IncrementSample;
use crate::wavelets::{WaveletBasis, WaveletCoeffs};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralConfig {
    /// Cutoff `K`; `None` means `K = n`.
    pub cutoff: Option<usize>,
    /// Exponent `δ > 1/2` of the `H(δ)` norm.
    pub delta_exponent: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self { cutoff: None, delta_exponent: 1.0 }
    }
}

impl SpectralConfig {
    pub fn validate(&self) -> Result<()> {
        if matches!(self.cutoff, Some(k) if k < 2) {
            return Err(Error::InvalidConfig("spectral cutoff K must be at least 2".into()));
        }
        if !(self.delta_exponent > 0.5) {
            return Err(Error::InvalidConfig(format!("H(δ) needs δ > 1/2, got {}", self.delta_exponent)));
        }
        Ok(())
    }

    /// The cutoff used for a sample of size `n` (never below 2).
    pub fn cutoff_for(&self, n: usize) -> usize {
        self.cutoff.unwrap_or(n).max(2)
    }
}

/// Empirical characteristic function `φ_n(k) = n^{-1} Σ_j e^{2πik X_j}` for `k = 0..=k_max`.
pub fn ecf(sample: &IncrementSample, k_max: usize) -> Vec<Complex64> {
    let mut acc = vec![Complex64::new(0.0, 0.0); k_max + 1];
    let n = sample.len();
    if n == 0 {
        return acc;
    }
    for &x in &sample.values {
        let z = Complex64::from_polar(1.0, 2.0 * PI * x);
        let mut p = Complex64::new(1.0, 0.0);
        for a in acc.iter_mut() {
            *a += p;
            p *= z;
        }
    }
    let inv = 1.0 / n as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    acc
}

/// Arguments this close to the cut are taken on the `+π` side.
const BRANCH_SNAP: f64 = 1e-9;

/// `Δ^{-1} Log φ`, with the zero convention. The principal branch has
/// imaginary part in `(-π, π]`; rounding noise around `-π` is snapped to `π`
/// so that numerically equal inputs land on the same side of the cut.
pub fn distinguished_log(phi: Complex64, delta: f64) -> Complex64 {
    if phi == Complex64::new(0.0, 0.0) {
        return Complex64::new(0.0, 0.0);
    }
    let mut l = phi.ln();
    if l.im < -PI + BRANCH_SNAP {
        l.im = PI;
    }
    l / delta
}

/// Output of the spectral estimator.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralEstimate {
    pub lambda_hat: f64,
    pub cutoff: usize,
    /// `F ν̂(k)` for `k = 0..=K`; negative frequencies are the conjugates.
    pub coeffs: Vec<Complex64>,
    /// `ν̂` on the grid, built from the frequencies `|k| <= min(K, N/2)`.
    pub nu_hat: GridFunction,
}

/// `λ̂` from `φ(1..=K)` (index 0 of `phi` is `k = 0` and is ignored).
pub fn lambda_from_cf(phi: &[Complex64], cutoff: usize, delta: f64) -> f64 {
    -(1..=cutoff).map(|k| distinguished_log(phi[k], delta).re).sum::<f64>() / cutoff as f64
}

/// Runs the estimator on characteristic function values `phi[k]`, `k = 0..=K`.
/// Population-level versions pass `φ_ν` here.
pub fn spectral_from_cf(phi: &[Complex64], cutoff: usize, delta: f64, grid: &CircleGrid) -> SpectralEstimate {
    let lambda_hat = lambda_from_cf(phi, cutoff, delta);
    let coeffs: Vec<Complex64> = (0..=cutoff)
        .map(|k| if k == 0 { Complex64::new(lambda_hat, 0.0) } else { distinguished_log(phi[k], delta) + lambda_hat })
        .collect();
    let mut spec = Spectrum::zeros(grid.n_points());
    // at K >= N/2 the frequencies ±N/2 share a slot and both land in it
    let top = cutoff.min(grid.n_points() / 2) as i64;
    for k in -top..=top {
        let c = coeffs[k.unsigned_abs() as usize];
        let c = if k < 0 { c.conj() } else { c };
        let slot = spec.at(k) + c;
        spec.set(k, slot);
    }
    SpectralEstimate { lambda_hat, cutoff, coeffs, nu_hat: idft(grid, &spec) }
}

pub fn spectral_lambda(sample: &IncrementSample, cfg: &SpectralConfig, delta: f64) -> Result<f64> {
    cfg.validate()?;
    if sample.is_empty() {
        return Err(Error::InvalidConfig("spectral estimator needs a nonempty sample".into()));
    }
    let k = cfg.cutoff_for(sample.len());
    Ok(lambda_from_cf(&ecf(sample, k), k, delta))
}

pub fn spectral_levy(
    sample: &IncrementSample,
    cfg: &SpectralConfig,
    delta: f64,
    grid: &CircleGrid,
) -> Result<SpectralEstimate> {
    cfg.validate()?;
    if sample.is_empty() {
        return Err(Error::InvalidConfig("spectral estimator needs a nonempty sample".into()));
    }
    let k = cfg.cutoff_for(sample.len());
    Ok(spectral_from_cf(&ecf(sample, k), k, delta, grid))
}

/// Level weight of the `H(δ)` norm: `2^{-l} l^{-2δ}`, and 1 for `l ∈ {-1, 0}`.
pub fn h_delta_weight(l: i32, delta_exponent: f64) -> f64 {
    if l <= 0 {
        1.0
    } else {
        2f64.powi(-l) * (l as f64).powf(-2.0 * delta_exponent)
    }
}

pub fn h_delta_norm_coeffs(c: &WaveletCoeffs, delta_exponent: f64) -> f64 {
    c.iter().map(|(l, _, x)| h_delta_weight(l, delta_exponent) * x * x).sum::<f64>().sqrt()
}

/// `‖f‖_{H(δ)}` through all wavelet levels available in `basis`.
pub fn h_delta_norm(f: &GridFunction, delta_exponent: f64, basis: &WaveletBasis) -> Result<f64> {
    Ok(h_delta_norm_coeffs(&basis.analyze(f, basis.max_level())?, delta_exponent))
}

/// Fourier version: `Σ_k |F f(k)|² |k|^{-1} (log(e + |k|))^{-2δ}`, weight 1 at `k = 0`.
pub fn h_delta_norm_fourier(f: &GridFunction, delta_exponent: f64) -> f64 {
    let spec = crate::circle::dft(f);
    let top = spec.nyquist();
    (-top + 1..=top)
        .map(|k| {
            let w = if k == 0 {
                1.0
            } else {
                let a = k.unsigned_abs() as f64;
                (std::f64::consts::E + a).ln().powf(-2.0 * delta_exponent) / a
            };
            w * spec.at(k).norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}
