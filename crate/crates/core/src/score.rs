//! Score operator calculus for the increment law.
//!
//! Directions are log-scale perturbations `h` of `ν` (so the measure moved is
//! `hν`). Elements of `D` are stored as an [`AtomicMeasure`] in the same
//! coordinates: density `h` and a coefficient on `δ_0`, which the score
//! annihilates. Elements of `L²(P_ν)` carry an explicit value at the atom
//! `{0}` ([`PnuFunction`]), since several identities are statements about the
//! single point 0 and must not be smeared over a grid cell.

use num_complex::Complex64;

use crate::circle::{dft, idft, AtomicMeasure, CircleGrid, GridFunction, Spectrum};
use crate::error::{Error, Result};
use crate::model::{deconv_measure, increment_law, IncrementSample, LevyDensity, LocatedSample};

/// Default lower bound required of `ν` before dividing by it.
pub const DEFAULT_FLOOR: f64 = 1e-6;

/// An element of `L²(P_ν)`: a value on the atom `{0}` plus grid values.
#[derive(Clone, Debug, PartialEq)]
pub struct PnuFunction {
    pub atom_value: f64,
    pub values: GridFunction,
}

impl PnuFunction {
    pub fn new(atom_value: f64, values: GridFunction) -> Self {
        Self { atom_value, values }
    }

    pub fn zero(grid: &CircleGrid) -> Self {
        Self { atom_value: 0.0, values: GridFunction::zeros(grid) }
    }

    pub fn constant(grid: &CircleGrid, c: f64) -> Self {
        Self { atom_value: c, values: GridFunction::constant(grid, c) }
    }

    pub fn add(&self, other: &PnuFunction) -> PnuFunction {
        PnuFunction { atom_value: self.atom_value + other.atom_value, values: self.values.add(&other.values) }
    }

    pub fn sub(&self, other: &PnuFunction) -> PnuFunction {
        PnuFunction { atom_value: self.atom_value - other.atom_value, values: self.values.sub(&other.values) }
    }

    pub fn scale(&self, c: f64) -> PnuFunction {
        PnuFunction { atom_value: c * self.atom_value, values: self.values.scale(c) }
    }

    pub fn mul(&self, other: &PnuFunction) -> PnuFunction {
        PnuFunction { atom_value: self.atom_value * other.atom_value, values: self.values.mul(&other.values) }
    }

    /// Value at an observation: the atom value at exactly 0, otherwise
    /// linear interpolation of the grid values.
    pub fn eval(&self, x: f64) -> f64 {
        if x == 0.0 {
            self.atom_value
        } else {
            self.values.interpolate(x)
        }
    }

    /// Largest deviation in either channel.
    pub fn sup_distance(&self, other: &PnuFunction) -> f64 {
        (self.atom_value - other.atom_value).abs().max(self.values.sub(&other.values).sup_norm())
    }
}

/// `ν` together with `P_ν` and `π_ν`, exposing the score calculus.
#[derive(Clone, Debug)]
pub struct ScoreOperator {
    nu: LevyDensity,
    law: AtomicMeasure,
    deconv: AtomicMeasure,
    law_reflected: GridFunction,
    deconv_reflected: GridFunction,
    corrupt_adjoint: bool,
}

impl ScoreOperator {
    pub fn new(nu: &LevyDensity) -> Result<Self> {
        Self::with_floor(nu, DEFAULT_FLOOR)
    }

    pub fn with_floor(nu: &LevyDensity, floor: f64) -> Result<Self> {
        nu.check_floor(floor)?;
        let law = increment_law(nu);
        let (min, _) = law.density.min();
        if !(min > 0.0) {
            return Err(Error::NonPositiveIncrementDensity(min));
        }
        let deconv = deconv_measure(nu);
        Ok(Self {
            nu: nu.clone(),
            law_reflected: law.density.reflect(),
            deconv_reflected: deconv.density.reflect(),
            law,
            deconv,
            corrupt_adjoint: false,
        })
    }

    /// A deliberately broken copy whose adjoint omits the reflection `P_ν(-·)`.
    /// Used only as a negative control for the identity suite.
    pub fn corrupted(mut self) -> Self {
        self.corrupt_adjoint = true;
        self
    }

    pub fn nu(&self) -> &LevyDensity {
        &self.nu
    }

    pub fn grid(&self) -> &CircleGrid {
        self.nu.grid()
    }

    pub fn delta(&self) -> f64 {
        self.nu.delta()
    }

    pub fn increment_law(&self) -> &AtomicMeasure {
        &self.law
    }

    pub fn deconv_measure(&self) -> &AtomicMeasure {
        &self.deconv
    }

    /// `∫ w dP_ν`.
    pub fn expectation(&self, w: &PnuFunction) -> f64 {
        self.law.atom * w.atom_value + w.values.dot(&self.law.density)
    }

    /// `⟨a, b⟩_{L²(P_ν)}`.
    pub fn inner(&self, a: &PnuFunction, b: &PnuFunction) -> f64 {
        self.expectation(&a.mul(b))
    }

    pub fn norm_sq(&self, w: &PnuFunction) -> f64 {
        self.inner(w, w)
    }

    /// `⟨f, g⟩_{L²(ν)}`.
    pub fn inner_nu(&self, f: &GridFunction, g: &GridFunction) -> f64 {
        f.mul(g).dot(self.nu.values())
    }

    /// Score of a moved measure with density `m` (the absolutely continuous
    /// part of `hν`): `Δ d((m - ∫m δ_0) ∗ P_ν)/dP_ν`.
    fn score_of_moved(&self, moved: &GridFunction) -> PnuFunction {
        let delta = self.delta();
        let mass = moved.integrate();
        let q = &self.law.density;
        let conv = moved.convolve(q);
        let w0 = self.law.atom;
        let values = GridFunction::new(
            self.grid(),
            moved
                .values()
                .iter()
                .zip(conv.values())
                .zip(q.values())
                .map(|((&m, &c), &qv)| delta * (w0 * m + c - mass * qv) / qv)
                .collect(),
        )
        .expect("same grid");
        PnuFunction { atom_value: -delta * mass, values }
    }

    /// `A_ν(h)` for a grid direction `h`.
    pub fn score(&self, h: &GridFunction) -> PnuFunction {
        self.score_of_moved(&h.mul(self.nu.values()))
    }

    /// `A_ν` on `D`: the atom coefficient is in the kernel.
    pub fn score_measure(&self, h: &AtomicMeasure) -> PnuFunction {
        self.score(&h.density)
    }

    /// `Ã_ν(g) = (1/(Δν)) π_ν ∗ (g P_ν)`, a right inverse of the score on centred `g`.
    pub fn score_inverse(&self, g: &PnuFunction) -> Result<AtomicMeasure> {
        let mean = self.expectation(g);
        let scale = 1.0f64.max(g.atom_value.abs()).max(g.values.sup_norm());
        if mean.abs() > 1e-8 * scale {
            return Err(Error::NotCentered(mean));
        }
        let gp = AtomicMeasure::new(g.atom_value * self.law.atom, g.values.mul(&self.law.density));
        let m = self.deconv.convolve(&gp)?;
        let delta = self.delta();
        let nu = self.nu.values();
        Ok(AtomicMeasure::new(
            m.atom / (delta * nu.values()[0]),
            m.density.div(nu).scale(1.0 / delta),
        ))
    }

    /// `A*_ν(w) = Δ[e^{-Δλ} w + q_ν(-·) ∗ w]` on the grid values of `w`.
    pub fn adjoint(&self, w: &PnuFunction) -> GridFunction {
        let q = if self.corrupt_adjoint { &self.law.density } else { &self.law_reflected };
        let conv = q.convolve(&w.values);
        w.values.scale(self.law.atom).add(&conv).scale(self.delta())
    }

    /// `(A*_ν)^{-1}(g) = (1/Δ) π_ν(-·) ∗ (g 1_{0^c})`. The value of `g` at grid
    /// point 0 is dropped from the atom channel only; the grid channel keeps
    /// it, since a single point has no Lebesgue weight there.
    pub fn adjoint_inverse(&self, g: &GridFunction) -> PnuFunction {
        let inv_delta = 1.0 / self.delta();
        let conv = self.deconv_reflected.convolve(g);
        let atom_value = inv_delta * conv.values()[0];
        let values = g.scale(self.deconv.atom).add(&conv).scale(inv_delta);
        PnuFunction { atom_value, values }
    }

    /// Influence function of `ν ↦ ∫ψ dν`: `ψ̃_d = -Ã_ν[(A*_ν)^{-1}(ψ/ν)]`,
    /// split as `(ψ̃, c)` with `ψ̃_d = ψ̃ + c δ_0`.
    pub fn influence(&self, psi: &GridFunction) -> Result<(AtomicMeasure, f64)> {
        let w = self.adjoint_inverse(&psi.div(self.nu.values()));
        let d = self.score_inverse(&w)?.scale(-1.0);
        Ok((AtomicMeasure::absolutely_continuous(d.density), d.atom))
    }

    /// `‖(A*_ν)^{-1}(ψ 1_{0^c})‖²_{L²(P_ν)}`.
    pub fn cramer_rao(&self, psi: &GridFunction) -> f64 {
        self.norm_sq(&self.adjoint_inverse(psi))
    }

    /// `⟨f, g⟩_{LAN} = ⟨A_ν f, A_ν g⟩_{L²(P_ν)}`.
    pub fn lan_inner(&self, f: &GridFunction, g: &GridFunction) -> f64 {
        self.inner(&self.score(f), &self.score(g))
    }

    /// `Δ^k d((w_1ν - δ_0∫w_1dν) ∗ … ∗ (w_kν - δ_0∫w_kdν) ∗ P_ν)/dP_ν`, `k <= 3`.
    pub fn multilinear_score(&self, ws: &[&GridFunction]) -> Result<PnuFunction> {
        match ws.len() {
            1 => return Ok(self.score(ws[0])),
            2 | 3 => {}
            k => return Err(Error::UnsupportedOrder(k)),
        }
        let delta = self.delta();
        let grid = self.grid();
        let mut spectrum: Spectrum = self.nu.char_spectrum();
        let mut atom = self.law.atom;
        let mut atom_value = 1.0;
        for w in ws {
            let moved = w.mul(self.nu.values());
            let mass = moved.integrate();
            let f = dft(&moved);
            spectrum = spectrum.zip_map(&f, |s, c| s * (c - mass) * delta);
            atom *= -delta * mass;
            atom_value *= -delta * mass;
        }
        let density = idft(grid, &spectrum.map(|c| c - Complex64::new(atom, 0.0)));
        Ok(PnuFunction { atom_value, values: density.div(&self.law.density) })
    }

    /// `p^{(r)}/p` along the path `s ↦ ν e^{s w}` at `s = 0`, for `r = 1, 2, 3`.
    pub fn path_derivative_ratio(&self, w: &GridFunction, order: usize) -> Result<PnuFunction> {
        let w2 = w.mul(w);
        match order {
            1 => Ok(self.score(w)),
            2 => Ok(self.score(&w2).add(&self.multilinear_score(&[w, w])?)),
            3 => {
                let w3 = w2.mul(w);
                Ok(self
                    .score(&w3)
                    .add(&self.multilinear_score(&[w, &w2])?.scale(3.0))
                    .add(&self.multilinear_score(&[w, w, w])?))
            }
            r => Err(Error::UnsupportedOrder(r)),
        }
    }

    /// Derivatives of `log p` along the same path, orders 1 and 2.
    pub fn path_log_derivative(&self, w: &GridFunction, order: usize) -> Result<PnuFunction> {
        match order {
            1 => Ok(self.score(w)),
            2 => {
                let a = self.score(w);
                Ok(self.path_derivative_ratio(w, 2)?.sub(&a.mul(&a)))
            }
            r => Err(Error::UnsupportedOrder(r)),
        }
    }
}

/// `ℓ_n(e^{v+h/√n}) - ℓ_n(ν) - n^{-1/2} Σ A_ν(h)(X_i) + ½‖A_ν(h)‖²`.
pub fn lan_expansion_check(op: &ScoreOperator, h: &GridFunction, sample: &IncrementSample) -> Result<f64> {
    let n = sample.len();
    if n == 0 {
        return Ok(0.0);
    }
    let root_n = (n as f64).sqrt();
    let nu = op.nu();
    let located = LocatedSample::new(op.grid(), sample);
    let perturbed = LevyDensity::from_log(&nu.log_values().add(&h.scale(1.0 / root_n)), nu.delta())?;
    let ll1 = located.log_likelihood_with(&increment_law(&perturbed), nu.delta())?;
    let ll0 = located.log_likelihood_with(op.increment_law(), nu.delta())?;
    let a = op.score(h);
    let linear: f64 = sample.values.iter().map(|&x| a.eval(x)).sum::<f64>() / root_n;
    Ok(ll1 - ll0 - linear + 0.5 * op.norm_sq(&a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::simulate_increments;
    use crate::model::tests::random_density;
    use crate::wavelets::{WaveletBasis, WaveletFamily};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid() -> CircleGrid {
        CircleGrid::new(1024).unwrap()
    }

    fn smooth_fn(g: &CircleGrid, rng: &mut ChaCha8Rng) -> GridFunction {
        let modes: Vec<(f64, f64, f64)> =
            (0..=5).map(|m| (m as f64, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..1.0))).collect();
        GridFunction::from_fn(g, |x| modes.iter().map(|(m, a, p)| a * (2.0 * PI * (m * x + p)).cos()).sum())
    }

    fn rough_fn(g: &CircleGrid, rng: &mut ChaCha8Rng) -> GridFunction {
        GridFunction::new(g, (0..g.n_points()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    fn centred(op: &ScoreOperator, w: PnuFunction) -> PnuFunction {
        let m = op.expectation(&w);
        w.sub(&PnuFunction::constant(op.grid(), m))
    }

    fn random_pnu(op: &ScoreOperator, rng: &mut ChaCha8Rng) -> PnuFunction {
        let g = op.grid().clone();
        centred(op, PnuFunction::new(rng.gen_range(-1.0..1.0), smooth_fn(&g, rng)))
    }

    #[test]
    fn dirac_is_in_the_kernel() {
        let g = grid();
        let op = ScoreOperator::new(&random_density(&g, 1, 1.0)).unwrap();
        let a = op.score_measure(&AtomicMeasure::dirac(&g));
        assert_eq!(a.atom_value, 0.0);
        assert!(a.values.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn score_is_centred_and_linear() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for seed in 0..3 {
            let op = ScoreOperator::new(&random_density(&g, seed, 1.2)).unwrap();
            let (h1, h2) = (rough_fn(&g, &mut rng), smooth_fn(&g, &mut rng));
            assert!(op.expectation(&op.score(&h1)).abs() < 1e-9);
            let lhs = op.score(&h1.scale(0.3).add(&h2.scale(-1.7)));
            let rhs = op.score(&h1).scale(0.3).add(&op.score(&h2).scale(-1.7));
            assert!(lhs.sup_distance(&rhs) < 1e-10);
        }
    }

    #[test]
    fn score_inverse_round_trip() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for seed in 0..3 {
            let op = ScoreOperator::new(&random_density(&g, seed, 1.0)).unwrap();
            let w = random_pnu(&op, &mut rng);
            let back = op.score_measure(&op.score_inverse(&w).unwrap());
            assert!(op.norm_sq(&back.sub(&w)).sqrt() <= 1e-7);
            assert!(back.sup_distance(&w) <= 1e-7);
            let h = smooth_fn(&g, &mut rng);
            let a = op.score(&h);
            let again = op.score_measure(&op.score_inverse(&a).unwrap());
            assert!(again.sup_distance(&a) < 1e-8);
        }
        let op = ScoreOperator::new(&random_density(&g, 0, 1.0)).unwrap();
        let zero = op.score_inverse(&PnuFunction::zero(&g)).unwrap();
        assert_eq!(zero.atom, 0.0);
        assert_eq!(zero.density.sup_norm(), 0.0);
        assert!(matches!(op.score_inverse(&PnuFunction::constant(&g, 1.0)), Err(Error::NotCentered(_))));
    }

    #[test]
    fn adjoint_duality() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for seed in 0..3 {
            let op = ScoreOperator::new(&random_density(&g, seed, 0.8)).unwrap();
            for _ in 0..5 {
                let h = rough_fn(&g, &mut rng);
                let w = centred(&op, PnuFunction::new(rng.gen_range(-1.0..1.0), rough_fn(&g, &mut rng)));
                let lhs = op.inner(&op.score(&h), &w);
                let rhs = op.inner_nu(&h, &op.adjoint(&w));
                assert!((lhs - rhs).abs() <= 1e-8, "{lhs} vs {rhs}");
            }
            let c = op.adjoint(&PnuFunction::constant(&g, 2.5));
            assert!(c.values().iter().all(|v| (v - 2.5 * 0.8).abs() < 1e-12));
        }
    }

    #[test]
    fn corrupted_adjoint_breaks_duality() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let op = ScoreOperator::new(&random_density(&g, 7, 1.0)).unwrap().corrupted();
        let h = rough_fn(&g, &mut rng);
        let w = random_pnu(&op, &mut rng);
        assert!((op.inner(&op.score(&h), &w) - op.inner_nu(&h, &op.adjoint(&w))).abs() > 1e-6);
    }

    #[test]
    fn adjoint_matches_brute_force_sum() {
        let g = CircleGrid::new(128).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let op = ScoreOperator::new(&random_density(&g, 2, 1.0)).unwrap();
        let w = PnuFunction::new(0.4, rough_fn(&g, &mut rng));
        let fast = op.adjoint(&w);
        let q = op.increment_law().density.values();
        let n = g.n_points();
        for j in 0..n {
            let conv: f64 = (0..n).map(|m| w.values.values()[(j + m) % n] * q[m]).sum::<f64>() / n as f64;
            let direct = op.delta() * (op.increment_law().atom * w.values.values()[j] + conv);
            assert!((direct - fast.values()[j]).abs() <= 1e-9);
        }
    }

    #[test]
    fn adjoint_inverse_properties() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for seed in 0..3 {
            let op = ScoreOperator::new(&random_density(&g, seed, 1.4)).unwrap();
            let mut f = rough_fn(&g, &mut rng);
            // the 1_{0^c} convention centres the image whatever f(0) is
            assert!(op.expectation(&op.adjoint_inverse(&f)).abs() <= 1e-8);
            f.values_mut()[0] = 0.0;
            let w = op.adjoint_inverse(&f);
            assert!(op.expectation(&w).abs() <= 1e-8);
            assert!(op.adjoint(&w).sub(&f).sup_norm() <= 1e-7);
        }
        let op = ScoreOperator::new(&random_density(&g, 0, 1.0)).unwrap();
        let z = op.adjoint_inverse(&GridFunction::zeros(&g));
        assert_eq!(z, PnuFunction::zero(&g));
    }

    #[test]
    fn influence_reproduces_the_functional() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for (seed, family) in [(0, WaveletFamily::Haar), (1, WaveletFamily::Daubechies(4))] {
            let op = ScoreOperator::new(&random_density(&g, seed, 1.0)).unwrap();
            let basis = WaveletBasis::new(family, &g, 4).unwrap();
            for i in 0..10 {
                let psi = if i < 5 { basis.functions()[i + 1].clone() } else { smooth_fn(&g, &mut rng) };
                let h = rough_fn(&g, &mut rng);
                let (tilde, c) = op.influence(&psi).unwrap();
                let expect = -psi.dot(&h);
                let got = op.inner(&op.score(&h), &op.score_measure(&tilde));
                assert!((got - expect).abs() <= 1e-6, "{got} vs {expect}");
                let with_atom = AtomicMeasure::new(c, tilde.density.clone());
                let got_d = op.inner(&op.score(&h), &op.score_measure(&with_atom));
                assert!((got_d - expect).abs() <= 1e-6);
            }
        }
        let op = ScoreOperator::new(&random_density(&g, 0, 1.0)).unwrap();
        let (t, c) = op.influence(&GridFunction::zeros(&g)).unwrap();
        assert_eq!(c, 0.0);
        assert_eq!(t.density.sup_norm(), 0.0);
    }

    #[test]
    fn cramer_rao_basics() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let op = ScoreOperator::new(&random_density(&g, 3, 1.0)).unwrap();
        assert_eq!(op.cramer_rao(&GridFunction::zeros(&g)), 0.0);
        let psi = smooth_fn(&g, &mut rng);
        let b = op.cramer_rao(&psi);
        assert!(b > 0.0);
        assert!((op.cramer_rao(&psi.scale(-3.0)) - 9.0 * b).abs() < 1e-10 * b.max(1.0));
    }

    #[test]
    fn cramer_rao_matches_monte_carlo_variance() {
        let g = grid();
        let nu = random_density(&g, 4, 1.0);
        let op = ScoreOperator::new(&nu).unwrap();
        let basis = WaveletBasis::new(WaveletFamily::Daubechies(4), &g, 3).unwrap();
        let psi = basis.psi(1, 1);
        let w = op.adjoint_inverse(psi);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let s = simulate_increments(&nu, 100_000, &mut rng);
        let vals: Vec<f64> = s.values.iter().map(|&x| w.eval(x)).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
        let bound = op.cramer_rao(psi);
        assert!((var / bound - 1.0).abs() < 0.05, "{var} vs {bound}");
    }

    #[test]
    fn lan_inner_is_a_quadratic_form() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let op = ScoreOperator::new(&random_density(&g, 5, 1.0)).unwrap();
        let (f, h, k) = (smooth_fn(&g, &mut rng), smooth_fn(&g, &mut rng), rough_fn(&g, &mut rng));
        assert!((op.lan_inner(&f, &h) - op.lan_inner(&h, &f)).abs() < 1e-10);
        let lhs = op.lan_inner(&f.scale(2.0).add(&k), &h);
        let rhs = 2.0 * op.lan_inner(&f, &h) + op.lan_inner(&k, &h);
        assert!((lhs - rhs).abs() < 1e-10);
        assert!(op.lan_inner(&k, &k) >= 0.0);
        // direct quadrature of A(f) A(h) against P_ν
        let (af, ah) = (op.score(&f), op.score(&h));
        let law = op.increment_law();
        let direct = law.atom * af.atom_value * ah.atom_value
            + (0..g.n_points())
                .map(|j| af.values.values()[j] * ah.values.values()[j] * law.density.values()[j])
                .sum::<f64>()
                / g.n_points() as f64;
        assert!((direct - op.lan_inner(&f, &h)).abs() < 1e-10);
    }

    #[test]
    fn multilinear_forms() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let op = ScoreOperator::new(&random_density(&g, 6, 1.0)).unwrap();
        let (a, b, c) = (smooth_fn(&g, &mut rng), smooth_fn(&g, &mut rng), smooth_fn(&g, &mut rng));
        assert_eq!(op.multilinear_score(&[&a]).unwrap(), op.score(&a));
        let ab = op.multilinear_score(&[&a, &b]).unwrap();
        let ba = op.multilinear_score(&[&b, &a]).unwrap();
        assert!(ab.sup_distance(&ba) < 1e-10);
        let abc = op.multilinear_score(&[&a, &b, &c]).unwrap();
        let cab = op.multilinear_score(&[&c, &a, &b]).unwrap();
        assert!(abc.sup_distance(&cab) < 1e-10);
        assert!(op.expectation(&ab).abs() < 1e-9);
        assert!(matches!(op.multilinear_score(&[&a, &a, &a, &a]), Err(Error::UnsupportedOrder(4))));
    }

    fn fd_relative_error(op: &ScoreOperator, w: &GridFunction, order: usize, eps: f64) -> f64 {
        crate::experiments::verify::derivative_fd_error(op, w, order, eps).unwrap()
    }

    #[test]
    fn path_derivatives_match_finite_differences() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for seed in 0..3 {
            let op = ScoreOperator::new(&random_density(&g, seed, 1.0)).unwrap();
            let w = smooth_fn(&g, &mut rng);
            assert!(fd_relative_error(&op, &w, 1, 1e-3) <= 1e-4);
            assert!(fd_relative_error(&op, &w, 2, 1e-3) <= 1e-4);
            assert!(fd_relative_error(&op, &w, 3, 1e-2) <= 1e-3);
        }
    }

    #[test]
    fn lan_remainder_vanishes_for_zero_direction() {
        let g = grid();
        let nu = random_density(&g, 1, 1.0);
        let op = ScoreOperator::new(&nu).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let s = simulate_increments(&nu, 300, &mut rng);
        assert!(lan_expansion_check(&op, &GridFunction::zeros(&g), &s).unwrap().abs() < 1e-9);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(12))]

            #[test]
            fn duality_and_round_trip_hold(seed in any::<u64>(), delta in 0.3..1.5f64) {
                let g = CircleGrid::new(256).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let op = ScoreOperator::new(&random_density(&g, seed, delta)).unwrap();
                let h = rough_fn(&g, &mut rng);
                let w = centred(&op, PnuFunction::new(rng.gen_range(-1.0..1.0), rough_fn(&g, &mut rng)));
                prop_assert!((op.inner(&op.score(&h), &w) - op.inner_nu(&h, &op.adjoint(&w))).abs() < 1e-8);
                let back = op.score_measure(&op.score_inverse(&w).unwrap());
                prop_assert!(back.sup_distance(&w) < 1e-7);
                prop_assert!(op.score_measure(&AtomicMeasure::dirac(&g)).values.sup_norm() == 0.0);
            }
        }
    }
}
