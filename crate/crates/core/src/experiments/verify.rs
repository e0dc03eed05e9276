//! The operator identity suite.

use rand::Rng;
use serde::Serialize;
use serde_json::json;

use super::{par_collect, task_rng, Row, RunReport};
use crate::circle::{AtomicMeasure, CircleGrid, GridFunction};
use crate::error::Result;
use crate::families::random_log_modes;
use crate::model::{increment_law, LevyDensity};
use crate::score::{PnuFunction, ScoreOperator};
use crate::wavelets::{WaveletBasis, WaveletFamily};

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub grid_points: usize,
    pub seeds: Vec<u64>,
    pub families: Vec<WaveletFamily>,
    pub delta: f64,
    /// Replace the adjoint by a deliberately wrong one (negative control).
    pub corrupt_adjoint: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            grid_points: 1024,
            seeds: vec![0, 1, 2],
            families: vec![WaveletFamily::Haar, WaveletFamily::Daubechies(4)],
            delta: 1.0,
            corrupt_adjoint: false,
        }
    }
}

impl VerifyOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self { seeds: (seed..seed + 3).collect(), ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyRow {
    pub seed: u64,
    pub wavelet: String,
    pub check: &'static str,
    pub trials: usize,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Row for VerifyRow {
    const COLUMNS: &'static [(&'static str, &'static str)] = &[
        ("seed", "seed of the random density and test directions"),
        ("wavelet", "wavelet family supplying test directions"),
        ("check", "identity under test"),
        ("trials", "number of random inputs"),
        ("residual", "largest residual over the trials"),
        ("tolerance", "pass threshold for the residual"),
        ("passed", "residual <= tolerance"),
    ];
}

const DIRECTIONS: usize = 5;
const BILINEAR_PAIRS: usize = 20;

pub const TOL_ROUND_TRIP: f64 = 1e-7;
pub const TOL_DUALITY: f64 = 1e-8;
pub const TOL_DECONVOLUTION: f64 = 1e-8;
pub const TOL_CENTRED: f64 = 1e-8;
pub const TOL_BILINEAR: f64 = 1e-6;
pub const TOL_DERIVATIVE: f64 = 1e-4;

fn rough(g: &CircleGrid, rng: &mut impl Rng) -> GridFunction {
    GridFunction::new(g, (0..g.n_points()).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("grid length")
}

fn centred(op: &ScoreOperator, w: PnuFunction) -> PnuFunction {
    let m = op.expectation(&w);
    w.sub(&PnuFunction::constant(op.grid(), m))
}

/// A random combination of three basis functions plus a small rough part.
fn wavelet_direction(basis: &WaveletBasis, rng: &mut impl Rng) -> GridFunction {
    let fs = basis.functions();
    let mut h = rough(basis.grid(), rng).scale(0.1);
    for _ in 0..3 {
        h = h.add(&fs[rng.gen_range(0..fs.len())].scale(rng.gen_range(-1.0..1.0)));
    }
    h
}

/// Relative sup error between the `order`-th derivative ratio `p^{(r)}/p`
/// along `s ↦ ν e^{s w}` and central differences of the increment law.
pub fn derivative_fd_error(op: &ScoreOperator, w: &GridFunction, order: usize, eps: f64) -> Result<f64> {
    let nu = op.nu();
    let v = nu.log_values();
    let law_at = |s: f64| -> Result<AtomicMeasure> { Ok(increment_law(&LevyDensity::from_log(&v.add(&w.scale(s)), nu.delta())?)) };
    let p0 = op.increment_law();
    let (pp, pm) = (law_at(eps)?, law_at(-eps)?);
    let fd = match order {
        1 => pp.sub(&pm).scale(1.0 / (2.0 * eps)),
        2 => pp.add(&pm).sub(&p0.scale(2.0)).scale(1.0 / (eps * eps)),
        _ => {
            let (p2, m2) = (law_at(2.0 * eps)?, law_at(-2.0 * eps)?);
            p2.sub(&m2).sub(&pp.sub(&pm).scale(2.0)).scale(1.0 / (2.0 * eps.powi(3)))
        }
    };
    let ratio = PnuFunction::new(fd.atom / p0.atom, fd.density.div(&p0.density));
    let exact = op.path_derivative_ratio(w, order)?;
    let scale = exact.atom_value.abs().max(exact.values.sup_norm());
    Ok(ratio.sup_distance(&exact) / scale)
}

struct Check {
    name: &'static str,
    trials: usize,
    residual: f64,
    tolerance: f64,
}

fn run_case(opts: &VerifyOptions, seed: u64, family: WaveletFamily, case: u64) -> Result<Vec<Check>> {
    let g = CircleGrid::new(opts.grid_points)?;
    let nu = LevyDensity::from_log(&random_log_modes(&g, seed), opts.delta)?;
    let mut op = ScoreOperator::new(&nu)?;
    if opts.corrupt_adjoint {
        op = op.corrupted();
    }
    let basis = WaveletBasis::new(family, &g, 5)?;
    let mut rng = task_rng(seed, case);
    let mut checks = Vec::new();

    let mut worst = 0.0f64;
    for _ in 0..DIRECTIONS {
        let a = op.score(&wavelet_direction(&basis, &mut rng));
        worst = worst.max(op.score_measure(&op.score_inverse(&a)?).sup_distance(&a));
        let w = centred(&op, PnuFunction::new(rng.gen_range(-1.0..1.0), basis.functions()[rng.gen_range(0..32)].clone()));
        worst = worst.max(op.score_measure(&op.score_inverse(&w)?).sup_distance(&w));
    }
    checks.push(Check { name: "score_inverse_round_trip", trials: 2 * DIRECTIONS, residual: worst, tolerance: TOL_ROUND_TRIP });

    let mut worst = 0.0f64;
    for _ in 0..DIRECTIONS {
        let h = wavelet_direction(&basis, &mut rng);
        let w = centred(&op, PnuFunction::new(rng.gen_range(-1.0..1.0), rough(&g, &mut rng)));
        worst = worst.max((op.inner(&op.score(&h), &w) - op.inner_nu(&h, &op.adjoint(&w))).abs());
    }
    checks.push(Check { name: "adjoint_duality", trials: DIRECTIONS, residual: worst, tolerance: TOL_DUALITY });

    let a = op.score_measure(&AtomicMeasure::dirac(&g));
    let worst = a.atom_value.abs().max(a.values.sup_norm());
    checks.push(Check { name: "dirac_in_score_kernel", trials: 1, residual: worst, tolerance: 0.0 });

    let id = op.increment_law().convolve(op.deconv_measure())?;
    let worst = (id.atom - 1.0).abs().max(id.density.sup_norm());
    checks.push(Check { name: "deconvolution_identity", trials: 1, residual: worst, tolerance: TOL_DECONVOLUTION });

    let mut worst = 0.0f64;
    for _ in 0..DIRECTIONS {
        worst = worst.max(op.expectation(&op.adjoint_inverse(&wavelet_direction(&basis, &mut rng))).abs());
    }
    checks.push(Check { name: "adjoint_inverse_centred", trials: DIRECTIONS, residual: worst, tolerance: TOL_CENTRED });

    let mut worst = 0.0f64;
    for _ in 0..DIRECTIONS {
        let g_fn = wavelet_direction(&basis, &mut rng);
        worst = worst.max(op.adjoint(&op.adjoint_inverse(&g_fn)).sub(&g_fn).sup_norm());
    }
    checks.push(Check { name: "adjoint_inverse_round_trip", trials: DIRECTIONS, residual: worst, tolerance: TOL_ROUND_TRIP });

    let mut worst = 0.0f64;
    for _ in 0..BILINEAR_PAIRS {
        let psi = basis.functions()[rng.gen_range(1..basis.functions().len())].clone();
        let h = rough(&g, &mut rng);
        let (tilde, c) = op.influence(&psi)?;
        let with_atom = AtomicMeasure::new(c, tilde.density.clone());
        let expect = -psi.dot(&h);
        let a_h = op.score(&h);
        worst = worst
            .max((op.inner(&a_h, &op.score_measure(&tilde)) - expect).abs())
            .max((op.inner(&a_h, &op.score_measure(&with_atom)) - expect).abs());
    }
    checks.push(Check { name: "influence_bilinear", trials: BILINEAR_PAIRS, residual: worst, tolerance: TOL_BILINEAR });

    for (order, name) in [(1, "derivative_order1"), (2, "derivative_order2")] {
        let mut worst = 0.0f64;
        for _ in 0..2 {
            // unit amplitude keeps the step `eps` meaningful
            let w = basis.synthesize(&basis.analyze(&wavelet_direction(&basis, &mut rng), 3)?)?;
            let w = w.scale(1.0 / w.sup_norm());
            worst = worst.max(derivative_fd_error(&op, &w, order, 1e-3)?);
        }
        checks.push(Check { name, trials: 2, residual: worst, tolerance: TOL_DERIVATIVE });
    }
    Ok(checks)
}

/// Runs every identity for every seed and wavelet family.
pub fn run(opts: &VerifyOptions) -> Result<RunReport<VerifyRow>> {
    let cases: Vec<(u64, WaveletFamily)> =
        opts.seeds.iter().flat_map(|&s| opts.families.iter().map(move |&f| (s, f))).collect();
    let results = par_collect(cases.len(), |i| run_case(opts, cases[i].0, cases[i].1, i as u64))?;
    let mut rows = Vec::new();
    for ((seed, family), checks) in cases.iter().zip(results) {
        for c in checks {
            rows.push(VerifyRow {
                seed: *seed,
                wavelet: family.to_string(),
                check: c.name,
                trials: c.trials,
                residual: c.residual,
                tolerance: c.tolerance,
                passed: c.residual <= c.tolerance,
            });
        }
    }
    let failed: Vec<String> =
        rows.iter().filter(|r| !r.passed).map(|r| format!("{} (seed {}, {})", r.check, r.seed, r.wavelet)).collect();
    let passed = failed.is_empty();
    let summary = json!({
        "grid_points": opts.grid_points,
        "seeds": opts.seeds,
        "families": opts.families.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
        "corrupt_adjoint": opts.corrupt_adjoint,
        "checks": rows.len(),
        "failed": failed,
    });
    Ok(RunReport { command: "verify", rows, summary, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VerifyOptions {
        VerifyOptions { grid_points: 256, seeds: vec![4], ..Default::default() }
    }

    #[test]
    fn suite_passes_on_a_small_grid() {
        let rep = run(&small()).unwrap();
        for r in &rep.rows {
            assert!(r.passed, "{r:?}");
        }
        assert!(rep.passed);
        assert_eq!(rep.rows.len(), 2 * 9);
    }

    #[test]
    fn corrupted_adjoint_is_caught() {
        let rep = run(&VerifyOptions { corrupt_adjoint: true, ..small() }).unwrap();
        assert!(!rep.passed);
        let failed: Vec<_> = rep.rows.iter().filter(|r| !r.passed).map(|r| r.check).collect();
        assert!(failed.contains(&"adjoint_duality"));
        assert!(failed.iter().all(|c| c.starts_with("adjoint")));
    }

    #[test]
    fn deterministic() {
        assert_eq!(run(&small()).unwrap().csv_bytes().unwrap(), run(&small()).unwrap().csv_bytes().unwrap());
    }
}
