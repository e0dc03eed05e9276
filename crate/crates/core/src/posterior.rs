//! Posterior functionals, the efficient centring and the limiting covariance.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::circle::{CircleGrid, GridFunction};
use crate::error::{Error, Result};
use crate::mcmc::McmcChain;
use crate::model::{IncrementSample, LevyDensity};
use crate::prior::WaveletPrior;
use crate::score::{PnuFunction, ScoreOperator};
use crate::wavelets::{WaveletBasis, WaveletCoeffs};

/// `V(t) = ∫_{-1/2}^t ν` at every grid point, in increasing order of `t`,
/// by cumulative trapezoid. Returns `(t, V)`; the last entry is `t = 1/2`,
/// where `V = λ`.
pub fn cumulative_intensity(nu: &GridFunction) -> (Vec<f64>, Vec<f64>) {
    let g = nu.grid();
    let h = g.spacing();
    let order = g.sorted_indices();
    let vals = nu.values();
    // the left end -1/2 is the same circle point as 1/2
    let mut prev = vals[g.n_points() / 2];
    let mut acc = 0.0;
    let mut ts = Vec::with_capacity(order.len());
    let mut vs = Vec::with_capacity(order.len());
    for &j in &order {
        acc += 0.5 * h * (prev + vals[j]);
        prev = vals[j];
        ts.push(g.point(j));
        vs.push(acc);
    }
    (ts, vs)
}

/// `V(t)` by linear interpolation of the cumulative trapezoid.
pub fn v_at(nu: &GridFunction, t: f64) -> f64 {
    let (ts, vs) = cumulative_intensity(nu);
    let h = nu.grid().spacing();
    let pos = ((t + 0.5) / h).clamp(0.0, ts.len() as f64);
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    let left = if i == 0 { 0.0 } else { vs[i - 1] };
    if i >= vs.len() {
        return vs[vs.len() - 1];
    }
    left + frac * (vs[i] - left)
}

/// Functionals of one posterior draw.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionalDraw {
    pub lambda: f64,
    /// `V(t)` at the requested points.
    pub v: Vec<f64>,
    /// `M(t) = V(t)/λ` at the requested points.
    pub m: Vec<f64>,
}

/// `λ`, `V(t)` and `M(t)` for every retained state of a chain.
pub fn posterior_functionals(chain: &McmcChain, prior: &WaveletPrior, ts: &[f64]) -> Result<Vec<FunctionalDraw>> {
    if chain.is_empty() {
        return Err(Error::EmptyChain);
    }
    chain
        .states
        .iter()
        .map(|u| {
            let nu = prior.levy(u)?;
            Ok(functionals_of(nu.values(), ts))
        })
        .collect()
}

/// `λ` is taken as `V(1/2)` from the same cumulative sum, so `M(1/2) = 1` exactly.
pub fn functionals_of(nu: &GridFunction, ts: &[f64]) -> FunctionalDraw {
    let lambda = v_at(nu, 0.5);
    let v: Vec<f64> = ts.iter().map(|&t| v_at(nu, t)).collect();
    let m = v.iter().map(|x| x / lambda).collect();
    FunctionalDraw { lambda, v, m }
}

/// Indicator of `(-1/2, t]` on the grid, with half weight at the endpoint
/// so that its integral against `ν` matches the trapezoid used for `V`.
pub fn indicator_upto(grid: &CircleGrid, t: f64) -> GridFunction {
    let h = grid.spacing();
    GridFunction::from_fn(grid, |x| {
        if (x - t).abs() < 0.5 * h || (x - 0.5).abs() < 0.5 * h {
            0.5
        } else if x < t {
            1.0
        } else {
            0.0
        }
    })
}

/// `∫ψν_0 + n^{-1} Σ (A*_{ν_0})^{-1}[ψ 1_{0^c}](X_i)` for each representer.
pub fn center_functionals(op: &ScoreOperator, psis: &[GridFunction], sample: &IncrementSample) -> Vec<f64> {
    psis.iter()
        .map(|psi| {
            let base = psi.dot(op.nu().values());
            if sample.is_empty() {
                return base;
            }
            let w = op.adjoint_inverse(psi);
            base + sample.values.iter().map(|&x| w.eval(x)).sum::<f64>() / sample.len() as f64
        })
        .collect()
}

/// The centring `ĥν(J)`: wavelet coefficients of `ν_0` corrected by the
/// empirical mean of the efficient influence functions, for levels `l < J`.
pub fn center_estimator(
    op: &ScoreOperator,
    basis: &WaveletBasis,
    sample: &IncrementSample,
    levels: usize,
) -> Result<WaveletCoeffs> {
    if levels > basis.max_level() {
        return Err(Error::LevelTooDeep { levels, n_points: basis.grid().n_points() });
    }
    let psis = &basis.functions()[..1 << levels];
    WaveletCoeffs::from_flat(levels, center_functionals(op, psis, sample))
}

/// The representers `(A*_{ν_0})^{-1}[ψ_{lk} 1_{0^c}]` for `l < J`.
pub fn efficient_representers(op: &ScoreOperator, basis: &WaveletBasis, levels: usize) -> Vec<PnuFunction> {
    basis.functions()[..1 << levels].iter().map(|psi| op.adjoint_inverse(psi)).collect()
}

/// Gram matrix of the representers in `L²(P_{ν_0})`.
pub fn bvm_covariance(op: &ScoreOperator, basis: &WaveletBasis, levels: usize) -> DMatrix<f64> {
    gram(op, &efficient_representers(op, basis, levels))
}

/// Limiting covariance of `√n(ψ_i-functional - centring)` for arbitrary `ψ_i`.
pub fn functional_covariance(op: &ScoreOperator, psis: &[GridFunction]) -> DMatrix<f64> {
    let reps: Vec<PnuFunction> = psis.iter().map(|p| op.adjoint_inverse(p)).collect();
    gram(op, &reps)
}

fn gram(op: &ScoreOperator, reps: &[PnuFunction]) -> DMatrix<f64> {
    let d = reps.len();
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let x = op.inner(&reps[i], &reps[j]);
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    m
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultiscaleConfig {
    /// Explicit weights per level `l = -1, 0, 1, ...`; `None` uses the default.
    pub weights: Option<Vec<f64>>,
}

impl MultiscaleConfig {
    /// `w_l = max(1, l)⁴ log(e + l)` unless overridden.
    pub fn weight(&self, l: i32) -> f64 {
        match &self.weights {
            Some(w) => w[(l + 1) as usize],
            None => (l.max(1) as f64).powi(4) * (std::f64::consts::E + l as f64).ln(),
        }
    }
}

/// `‖x‖_{M(w)} = sup_l max_k |x_{lk}| / w_l`.
pub fn multiscale_norm(x: &WaveletCoeffs, w: &MultiscaleConfig) -> f64 {
    x.iter().fold(0.0, |m, (l, _, c)| m.max(c.abs() / w.weight(l)))
}

/// Posterior mean of `ν` over a chain.
pub fn posterior_mean_density(chain: &McmcChain, prior: &WaveletPrior) -> Result<LevyDensity> {
    if chain.is_empty() {
        return Err(Error::EmptyChain);
    }
    let mut acc = GridFunction::zeros(prior.grid());
    for u in &chain.states {
        acc = acc.add(prior.levy(u)?.values());
    }
    LevyDensity::new(acc.scale(1.0 / chain.len() as f64), prior.delta())
}
