//! Grid numerics on the circle `I = (-1/2, 1/2]`.
//!
//! Functions are sampled at the equispaced points `x_j = j/N` wrapped into
//! `I`, so `x_0 = 0` is always a grid point. Integrals use the periodic left
//! Riemann sum `(1/N) Σ f(x_j)`, which is spectrally exact for band-limited
//! integrands. Fourier coefficients follow the convention
//! `F f(k) = ∫ f(x) e^{2πikx} dx`.
//!
//! Measures that matter here (the increment law, its deconvolution measure,
//! score-operator images) have a point mass at 0 and are otherwise absolutely
//! continuous; [`AtomicMeasure`] keeps the two parts separate.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Maps a real number into `(-1/2, 1/2]` modulo 1.
pub fn wrap(x: f64) -> f64 {
    let y = x - x.floor();
    if y > 0.5 {
        y - 1.0
    } else {
        y
    }
}

/// Equispaced grid of `n_points` points on the circle, with cached FFT plans.
#[derive(Clone)]
pub struct CircleGrid {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for CircleGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CircleGrid").field("n_points", &self.n).finish()
    }
}

impl PartialEq for CircleGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl CircleGrid {
    pub const DEFAULT_POINTS: usize = 1024;

    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < 4 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(n_points));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n: n_points,
            forward: planner.plan_fft_forward(n_points),
            inverse: planner.plan_fft_inverse(n_points),
        })
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Largest representable frequency, `N/2`.
    pub fn nyquist(&self) -> i64 {
        (self.n / 2) as i64
    }

    pub fn point(&self, j: usize) -> f64 {
        debug_assert!(j < self.n);
        if 2 * j <= self.n {
            j as f64 / self.n as f64
        } else {
            j as f64 / self.n as f64 - 1.0
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Index of the grid point `-x_j`.
    pub fn reflected_index(&self, j: usize) -> usize {
        (self.n - j) % self.n
    }

    /// Grid indices in increasing order of position, starting at the point
    /// just above `-1/2` and ending at `1/2`.
    pub fn sorted_indices(&self) -> Vec<usize> {
        let half = self.n / 2;
        (half + 1..self.n).chain(0..=half).collect()
    }

    /// Locates `x` between grid points: returns `(j, frac)` with
    /// `x ≡ (j + frac)/N (mod 1)` and `frac ∈ [0, 1)`.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let t = (x - x.floor()) * self.n as f64;
        let mut j = t.floor() as usize;
        let mut frac = t - j as f64;
        if j >= self.n {
            j = 0;
            frac = 0.0;
        }
        (j, frac)
    }

    pub fn check_same(&self, other: &CircleGrid) -> Result<()> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(Error::GridMismatch { left: self.n, right: other.n })
        }
    }

    /// `(1/N) Σ_j f_j e^{2πikj/N}` for every `k` (indexed modulo `N`).
    fn analysis(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    /// `Σ_k c_k e^{-2πikj/N}` for every `j`.
    fn synthesis(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut buf = coeffs.to_vec();
        self.forward.process(&mut buf);
        buf
    }
}

/// Fourier coefficients `F f(k)` for `|k| <= N/2`, stored modulo `N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn from_raw(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(n: usize) -> Self {
        Self { coeffs: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn nyquist(&self) -> i64 {
        (self.coeffs.len() / 2) as i64
    }

    fn slot(&self, k: i64) -> usize {
        k.rem_euclid(self.coeffs.len() as i64) as usize
    }

    pub fn get(&self, k: i64) -> Result<Complex64> {
        let max = self.nyquist();
        if k.abs() > max {
            return Err(Error::FrequencyOutOfRange { k, max });
        }
        Ok(self.coeffs[self.slot(k)])
    }

    /// Coefficient at `k`; callers guarantee `|k| <= N/2`.
    pub fn at(&self, k: i64) -> Complex64 {
        self.coeffs[self.slot(k)]
    }

    pub fn set(&mut self, k: i64, value: Complex64) {
        let s = self.slot(k);
        self.coeffs[s] = value;
    }

    pub fn range(&self, ks: Range<i64>) -> Result<Vec<Complex64>> {
        ks.map(|k| self.get(k)).collect()
    }

    pub fn raw(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn raw_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Spectrum {
        Spectrum { coeffs: self.coeffs.iter().map(|&c| f(c)).collect() }
    }

    pub fn zip_map(&self, other: &Spectrum, f: impl Fn(Complex64, Complex64) -> Complex64) -> Spectrum {
        Spectrum {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

/// Samples of a real function on a [`CircleGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: CircleGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: &CircleGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::LengthMismatch { expected: grid.n_points(), got: values.len() });
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn from_fn(grid: &CircleGrid, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: grid.clone(), values: grid.points().into_iter().map(f).collect() }
    }

    pub fn zeros(grid: &CircleGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &CircleGrid, c: f64) -> Self {
        Self { grid: grid.clone(), values: vec![c; grid.n_points()] }
    }

    pub fn grid(&self) -> &CircleGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise combination; both functions must live on the same grid.
    pub fn zip_map(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        debug_assert_eq!(self.grid, other.grid);
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &GridFunction) -> GridFunction {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &GridFunction) -> GridFunction {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn div(&self, other: &GridFunction) -> GridFunction {
        self.zip_map(other, |a, b| a / b)
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        self.map(|v| c * v)
    }

    /// Period-1 quadrature: the mean of the samples.
    pub fn integrate(&self) -> f64 {
        integrate(self)
    }

    /// `∫ f g` by grid quadrature.
    pub fn dot(&self, other: &GridFunction) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() / self.len() as f64
    }

    pub fn l2_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> (f64, usize) {
        self.values
            .iter()
            .enumerate()
            .fold((f64::INFINITY, 0), |(m, at), (j, &v)| if v < m { (v, j) } else { (m, at) })
    }

    /// `f(-x)`.
    pub fn reflect(&self) -> GridFunction {
        let g = &self.grid;
        GridFunction {
            grid: g.clone(),
            values: (0..g.n_points()).map(|j| self.values[g.reflected_index(j)]).collect(),
        }
    }

    /// Periodic linear interpolation between grid points.
    pub fn interpolate(&self, x: f64) -> f64 {
        let (j, frac) = self.grid.locate(x);
        let next = if j + 1 == self.values.len() { 0 } else { j + 1 };
        (1.0 - frac) * self.values[j] + frac * self.values[next]
    }

    /// Circular convolution `(f ∗ g)(x) = ∫ f(x - y) g(y) dy`, computed by FFT.
    pub fn convolve(&self, other: &GridFunction) -> GridFunction {
        let a = dft(self);
        let b = dft(other);
        idft(&self.grid, &a.zip_map(&b, |x, y| x * y))
    }
}

/// Riemann-sum Fourier coefficients `(1/N) Σ_j f(x_j) e^{2πik x_j}` for all `|k| <= N/2`.
pub fn dft(f: &GridFunction) -> Spectrum {
    Spectrum { coeffs: f.grid.analysis(&f.values) }
}

/// Fourier coefficients over a frequency range; errors if any `|k| > N/2`.
pub fn dft_range(f: &GridFunction, ks: Range<i64>) -> Result<Vec<Complex64>> {
    dft(f).range(ks)
}

/// Inverse of [`dft`]: `f(x_j) = Σ_k c_k e^{-2πik x_j}`, keeping the real part.
pub fn idft(grid: &CircleGrid, spectrum: &Spectrum) -> GridFunction {
    debug_assert_eq!(spectrum.len(), grid.n_points());
    let values = grid.synthesis(&spectrum.coeffs).into_iter().map(|c| c.re).collect();
    GridFunction { grid: grid.clone(), values }
}

pub fn integrate(f: &GridFunction) -> f64 {
    f.values.iter().sum::<f64>() / f.values.len() as f64
}

/// A finite signed measure `atom · δ_0 + density · dx` on the circle.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure {
    pub atom: f64,
    pub density: GridFunction,
}

impl AtomicMeasure {
    pub fn new(atom: f64, density: GridFunction) -> Self {
        Self { atom, density }
    }

    /// The Dirac mass at 0.
    pub fn dirac(grid: &CircleGrid) -> Self {
        Self { atom: 1.0, density: GridFunction::zeros(grid) }
    }

    pub fn zero(grid: &CircleGrid) -> Self {
        Self { atom: 0.0, density: GridFunction::zeros(grid) }
    }

    pub fn absolutely_continuous(density: GridFunction) -> Self {
        Self { atom: 0.0, density }
    }

    pub fn grid(&self) -> &CircleGrid {
        self.density.grid()
    }

    pub fn total_mass(&self) -> f64 {
        self.atom + self.density.integrate()
    }

    /// `F m(k) = atom + F(density)(k)`.
    pub fn fourier(&self) -> Spectrum {
        dft(&self.density).map(|c| c + self.atom)
    }

    /// Rebuilds a measure from its Fourier coefficients given its atom.
    pub fn from_fourier(grid: &CircleGrid, atom: f64, spectrum: &Spectrum) -> Self {
        let density = idft(grid, &spectrum.map(|c| c - atom));
        Self { atom, density }
    }

    pub fn scale(&self, c: f64) -> AtomicMeasure {
        AtomicMeasure { atom: c * self.atom, density: self.density.scale(c) }
    }

    pub fn add(&self, other: &AtomicMeasure) -> AtomicMeasure {
        AtomicMeasure { atom: self.atom + other.atom, density: self.density.add(&other.density) }
    }

    pub fn sub(&self, other: &AtomicMeasure) -> AtomicMeasure {
        AtomicMeasure { atom: self.atom - other.atom, density: self.density.sub(&other.density) }
    }

    /// `m(-·)`: conjugates the Fourier coefficients and leaves the atom alone.
    pub fn reflect(&self) -> AtomicMeasure {
        AtomicMeasure { atom: self.atom, density: self.density.reflect() }
    }

    pub fn convolve(&self, other: &AtomicMeasure) -> Result<AtomicMeasure> {
        circ_convolve(self, other)
    }
}

/// `(c₁δ₀ + f₁) ∗ (c₂δ₀ + f₂) = c₁c₂δ₀ + c₁f₂ + c₂f₁ + f₁ ∗ f₂`.
pub fn circ_convolve(a: &AtomicMeasure, b: &AtomicMeasure) -> Result<AtomicMeasure> {
    a.grid().check_same(b.grid())?;
    let smooth = a.density.convolve(&b.density);
    let density = GridFunction {
        grid: a.grid().clone(),
        values: smooth
            .values
            .iter()
            .zip(a.density.values())
            .zip(b.density.values())
            .map(|((&s, &fa), &fb)| s + a.atom * fb + b.atom * fa)
            .collect(),
    };
    Ok(AtomicMeasure { atom: a.atom * b.atom, density })
}

pub fn reflect(m: &AtomicMeasure) -> AtomicMeasure {
    m.reflect()
}
