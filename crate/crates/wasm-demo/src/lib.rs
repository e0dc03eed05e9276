//! Browser bindings for the demo page. Every export takes plain numbers or a
//! JSON truth specification and returns a JSON string, so the page needs no
//! generated TypeScript types.

use decompound::families::TruthSpec;
use decompound::model::{char_fn, increment_law, simulate_increments};
use decompound::spectral::{ecf, spectral_from_cf};
use decompound::CircleGrid;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_GRID: usize = 4096;
const MAX_SAMPLE: usize = 200_000;

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn to_json(v: &impl Serialize) -> Result<String, JsValue> {
    serde_json::to_string(v).map_err(js_err)
}

fn grid(points: usize) -> Result<CircleGrid, JsValue> {
    if points > MAX_GRID {
        return Err(js_err(format!("at most {MAX_GRID} grid points")));
    }
    CircleGrid::new(points).map_err(js_err)
}

/// Grid points in increasing order, for plotting.
fn points(g: &CircleGrid) -> Vec<f64> {
    g.sorted_indices().into_iter().map(|j| g.point(j)).collect()
}

fn sorted(g: &CircleGrid, values: &[f64]) -> Vec<f64> {
    g.sorted_indices().into_iter().map(|j| values[j]).collect()
}

#[derive(Serialize)]
struct LawView {
    x: Vec<f64>,
    nu: Vec<f64>,
    density: Vec<f64>,
    atom: f64,
    lambda: f64,
    identifiable: bool,
}

/// Lévy density and increment law for a truth spec such as
/// `{"family":"exp_cos","lambda":1,"amplitude":0.5}`.
#[wasm_bindgen]
pub fn increment_law_json(truth: &str, delta: f64, grid_points: usize) -> Result<String, JsValue> {
    let spec: TruthSpec = serde_json::from_str(truth).map_err(js_err)?;
    let g = grid(grid_points)?;
    let nu = spec.levy(&g, delta).map_err(js_err)?;
    let law = increment_law(&nu);
    to_json(&LawView {
        x: points(&g),
        nu: sorted(&g, nu.values().values()),
        density: sorted(&g, law.density.values()),
        atom: law.atom,
        lambda: nu.lambda(),
        identifiable: nu.identifiable(),
    })
}

#[derive(Serialize)]
struct PairView {
    x: Vec<f64>,
    positive: Vec<f64>,
    negative: Vec<f64>,
    lambda_delta: f64,
    /// `|φ_+(k) - φ_-(k)|` for `k = 0..=k_max`.
    deviation: Vec<f64>,
    max_deviation: f64,
}

/// The two half sine waves of intensity `lambda`: their increment laws agree
/// exactly when `λΔ = 4`.
#[wasm_bindgen]
pub fn sine_pair_json(lambda: f64, delta: f64, k_max: usize) -> Result<String, JsValue> {
    let g = grid(1024)?;
    let k_max = k_max.clamp(1, g.n_points() / 2);
    let dens = |positive| TruthSpec::SinPair { lambda, positive }.density(&g).map_err(js_err);
    let (a, b) = (dens(true)?, dens(false)?);
    let ks = 0..k_max as i64 + 1;
    let pa = char_fn(&a, delta, ks.clone()).map_err(js_err)?;
    let pb = char_fn(&b, delta, ks).map_err(js_err)?;
    let deviation: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| (x - y).norm()).collect();
    to_json(&PairView {
        x: points(&g),
        positive: sorted(&g, a.values()),
        negative: sorted(&g, b.values()),
        lambda_delta: lambda * delta,
        max_deviation: deviation.iter().cloned().fold(0.0, f64::max),
        deviation,
    })
}

#[derive(Serialize)]
struct EstimateView {
    x: Vec<f64>,
    truth: Vec<f64>,
    estimate: Vec<f64>,
    lambda: f64,
    lambda_hat: f64,
    cutoff: usize,
    zeros: usize,
}

/// Simulates `n` increments from the truth and runs the spectral estimator
/// with cutoff `K` (0 means `K = n`, capped at half the grid).
#[wasm_bindgen]
pub fn spectral_estimate_json(
    truth: &str,
    delta: f64,
    n: usize,
    cutoff: usize,
    seed: u64,
) -> Result<String, JsValue> {
    if n == 0 || n > MAX_SAMPLE {
        return Err(js_err(format!("sample size must be in 1..={MAX_SAMPLE}")));
    }
    let spec: TruthSpec = serde_json::from_str(truth).map_err(js_err)?;
    let g = grid(512)?;
    let nu = spec.levy(&g, delta).map_err(js_err)?;
    let sample = simulate_increments(&nu, n, &mut ChaCha8Rng::seed_from_u64(seed));
    // frequencies above N/2 cannot be represented on the grid anyway
    let k = if cutoff == 0 { n } else { cutoff }.clamp(2, g.n_points() / 2);
    let est = spectral_from_cf(&ecf(&sample, k), k, delta, &g);
    to_json(&EstimateView {
        x: points(&g),
        truth: sorted(&g, nu.values().values()),
        estimate: sorted(&g, est.nu_hat.values()),
        lambda: nu.lambda(),
        lambda_hat: est.lambda_hat,
        cutoff: k,
        zeros: sample.zero_count(),
    })
}
