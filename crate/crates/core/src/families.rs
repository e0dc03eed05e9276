//! Named truth densities for experiments.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circle::{CircleGrid, GridFunction};
use crate::error::{Error, Result};
use crate::model::LevyDensity;
use crate::wavelets::{WaveletBasis, WaveletCoeffs, WaveletFamily};

/// A Lévy density specification. Every family except `coefficients` is
/// scaled to the stated intensity `lambda`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum TruthSpec {
    Uniform { lambda: f64 },
    /// `∝ exp(a cos 2πx)`.
    ExpCos { lambda: f64, amplitude: f64 },
    /// `∝ (±sin 2πx)_+`; not strictly positive, so only usable where a raw
    /// density is enough (characteristic functions, identifiability).
    SinPair { lambda: f64, positive: bool },
    /// `∝ 1 + a(1 - (x/w)²)⁴ 1_{|x| < w}`, three times continuously differentiable.
    Bump { lambda: f64, amplitude: f64, width: f64 },
    /// `ν = exp(Σ c_{lk} ψ_{lk})`, flat coefficients ordered by level.
    Coefficients { wavelet: String, coeffs: Vec<f64> },
    /// `exp` of six random low Fourier modes, scaled to `lambda`.
    RandomSmooth { lambda: f64, seed: u64 },
    /// `∝ exp(a Σ_{l<L} 2^{-l(s+1/2)} ε_{lk} ψ_{lk})` with a fixed sign-like
    /// pattern `ε_{lk} = cos(1 + l + 2.3k)`: coefficients decay exactly at
    /// the rate that characterises smoothness `s` in the wavelet scale.
    SmoothSeries { lambda: f64, s: f64, amplitude: f64, levels: usize, wavelet: String },
}

impl TruthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        match self {
            TruthSpec::Uniform { lambda }
            | TruthSpec::ExpCos { lambda, .. }
            | TruthSpec::SinPair { lambda, .. }
            | TruthSpec::RandomSmooth { lambda, .. }
                if !(*lambda > 0.0 && lambda.is_finite()) =>
            {
                bad(format!("truth intensity must be positive, got {lambda}"))
            }
            TruthSpec::Bump { lambda, amplitude, width } => {
                if !(*lambda > 0.0) || !(*amplitude > -1.0) || !(*width > 0.0 && *width <= 0.5) {
                    return bad(format!(
                        "bump needs lambda > 0, amplitude > -1, 0 < width <= 1/2; got {lambda}, {amplitude}, {width}"
                    ));
                }
                Ok(())
            }
            TruthSpec::SmoothSeries { lambda, s, levels, wavelet, .. } => {
                wavelet.parse::<WaveletFamily>()?;
                if !(*lambda > 0.0) || !(*s > 0.0) || *levels == 0 {
                    return bad(format!("smooth series needs lambda, s > 0 and levels >= 1; got {lambda}, {s}, {levels}"));
                }
                Ok(())
            }
            TruthSpec::Coefficients { wavelet, coeffs } => {
                wavelet.parse::<WaveletFamily>()?;
                if coeffs.is_empty() || !coeffs.len().is_power_of_two() {
                    return bad(format!("coefficient list length {} is not a power of two", coeffs.len()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Grid samples of the density, possibly with zeros.
    pub fn density(&self, grid: &CircleGrid) -> Result<GridFunction> {
        self.validate()?;
        let f = match self {
            TruthSpec::Uniform { lambda } => GridFunction::constant(grid, *lambda),
            TruthSpec::ExpCos { lambda, amplitude } => {
                scaled(GridFunction::from_fn(grid, |x| (amplitude * (2.0 * PI * x).cos()).exp()), *lambda)
            }
            TruthSpec::SinPair { lambda, positive } => {
                let sign = if *positive { 1.0 } else { -1.0 };
                // ∫(sin 2πx)_+ = 1/π
                GridFunction::from_fn(grid, |x| PI * lambda * (sign * (2.0 * PI * x).sin()).max(0.0))
            }
            TruthSpec::Bump { lambda, amplitude, width } => {
                scaled(GridFunction::from_fn(grid, |x| 1.0 + amplitude * bump(x / width)), *lambda)
            }
            TruthSpec::Coefficients { wavelet, coeffs } => {
                let levels = coeffs.len().trailing_zeros() as usize;
                let basis = WaveletBasis::new(wavelet.parse()?, grid, levels)?;
                basis.synthesize(&WaveletCoeffs::from_flat(levels, coeffs.clone())?)?.map(f64::exp)
            }
            TruthSpec::RandomSmooth { lambda, seed } => scaled(random_log_modes(grid, *seed).map(f64::exp), *lambda),
            TruthSpec::SmoothSeries { lambda, s, amplitude, levels, wavelet } => {
                let basis = WaveletBasis::new(wavelet.parse()?, grid, *levels)?;
                let mut c = WaveletCoeffs::zeros(*levels);
                for l in -1..*levels as i32 {
                    for k in 0..(1usize << l.max(0)) {
                        let decay = 2f64.powf(-(l.max(0) as f64) * (s + 0.5));
                        c.set(l, k, amplitude * decay * (1.0 + l as f64 + 2.3 * k as f64).cos());
                    }
                }
                scaled(basis.synthesize(&c)?.map(f64::exp), *lambda)
            }
        };
        Ok(f)
    }

    pub fn levy(&self, grid: &CircleGrid, delta: f64) -> Result<LevyDensity> {
        LevyDensity::new(self.density(grid)?, delta)
    }
}

fn scaled(f: GridFunction, lambda: f64) -> GridFunction {
    let mass = f.integrate();
    f.scale(lambda / mass)
}

/// `(1 - t²)⁴` on `|t| < 1`, zero outside.
pub fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - t * t).powi(4)
    }
}

/// `Σ_{m=1}^6 a_m cos(2π(mx + p_m))` with `|a_m| < 0.4/m`.
pub fn random_log_modes(grid: &CircleGrid, seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, f64, f64)> =
        (1..=6).map(|m| (m as f64, rng.gen_range(-0.4..0.4) / m as f64, rng.gen_range(0.0..1.0))).collect();
    GridFunction::from_fn(grid, |x| modes.iter().map(|(m, a, p)| a * (2.0 * PI * (m * x + p)).cos()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> CircleGrid {
        CircleGrid::new(1024).unwrap()
    }

    #[test]
    fn intensities_are_as_requested() {
        let g = grid();
        for spec in [
            TruthSpec::Uniform { lambda: 2.0 },
            TruthSpec::ExpCos { lambda: 1.5, amplitude: 0.7 },
            TruthSpec::Bump { lambda: 0.8, amplitude: 2.0, width: 0.3 },
            TruthSpec::RandomSmooth { lambda: 3.0, seed: 4 },
            TruthSpec::SmoothSeries { lambda: 1.2, s: 3.0, amplitude: 0.8, levels: 6, wavelet: "db4".into() },
        ] {
            let want = match spec {
                TruthSpec::Uniform { lambda }
                | TruthSpec::ExpCos { lambda, .. }
                | TruthSpec::Bump { lambda, .. }
                | TruthSpec::RandomSmooth { lambda, .. }
                | TruthSpec::SmoothSeries { lambda, .. } => lambda,
                _ => unreachable!(),
            };
            let nu = spec.levy(&g, 0.5).unwrap();
            assert!((nu.lambda() - want).abs() < 1e-12, "{spec:?}");
        }
        let pair = TruthSpec::SinPair { lambda: 4.0, positive: true }.density(&g).unwrap();
        assert!((pair.integrate() - 4.0).abs() < 2e-5);
        assert!(TruthSpec::SinPair { lambda: 4.0, positive: false }.levy(&g, 1.0).is_err());
    }

    #[test]
    fn bump_is_c3_at_the_edge() {
        // a fourth-order zero at the edge: bump(1 - s) = O(s⁴)
        for s in [1e-2, 1e-3, 1e-4] {
            let r = bump(1.0 - s) / s.powi(4);
            assert!((r - 16.0).abs() < 1.0, "{r}");
        }
        assert_eq!(bump(1.2), 0.0);
        assert_eq!(bump(0.0), 1.0);
    }

    #[test]
    fn coefficient_truth_round_trips() {
        let g = CircleGrid::new(256).unwrap();
        let coeffs = vec![0.1, -0.3, 0.2, 0.05];
        let spec = TruthSpec::Coefficients { wavelet: "db4".into(), coeffs: coeffs.clone() };
        let nu = spec.levy(&g, 1.0).unwrap();
        let basis = WaveletBasis::new(WaveletFamily::Daubechies(4), &g, 2).unwrap();
        let back = basis.analyze(&nu.log_values(), 2).unwrap();
        for (a, b) in back.as_slice().iter().zip(&coeffs) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(TruthSpec::Coefficients { wavelet: "db4".into(), coeffs: vec![0.0; 3] }.validate().is_err());
        assert!(TruthSpec::Coefficients { wavelet: "db1".into(), coeffs: vec![0.0; 2] }.validate().is_err());
    }

    #[test]
    fn smooth_series_coefficients_decay_at_rate_s() {
        let g = CircleGrid::new(1024).unwrap();
        let spec = TruthSpec::SmoothSeries { lambda: 1.0, s: 3.0, amplitude: 0.5, levels: 6, wavelet: "db4".into() };
        let nu = spec.levy(&g, 1.0).unwrap();
        let basis = WaveletBasis::new(WaveletFamily::Daubechies(4), &g, 7).unwrap();
        let c = basis.analyze(&nu.log_values(), 7).unwrap();
        for l in 0..6 {
            for k in 0..1usize << l {
                let want = 0.5 * 2f64.powf(-(l as f64) * 3.5) * (1.0 + l as f64 + 2.3 * k as f64).cos();
                assert!((c.get(l, k) - want).abs() < 1e-10);
            }
        }
        let level_max = |l: i32| (0..1usize << l).map(|k| c.get(l, k).abs()).fold(0.0, f64::max);
        assert!(level_max(6) < 1e-10);
    }

    #[test]
    fn json_shape() {
        let spec: TruthSpec = serde_json::from_str(r#"{"family":"exp_cos","lambda":1.0,"amplitude":0.5}"#).unwrap();
        assert_eq!(spec, TruthSpec::ExpCos { lambda: 1.0, amplitude: 0.5 });
        assert!(serde_json::from_str::<TruthSpec>(r#"{"family":"uniform","lambda":1.0,"x":2}"#).is_err());
        assert!(TruthSpec::Uniform { lambda: -1.0 }.validate().is_err());
    }
}
