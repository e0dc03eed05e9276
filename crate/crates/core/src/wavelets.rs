//! Periodized orthonormal wavelets on the circle.
//!
//! The basis is indexed as `ψ_{lk}`, `l = -1, 0, 1, ...`, `k = 0..max(2^l, 1)`,
//! with `ψ_{-1,0} ≡ 1`. Samples are produced by the periodized Mallat
//! pyramid: running the inverse transform on a unit coefficient is the
//! cascade algorithm evaluated on the grid. Because the pyramid is an
//! orthogonal map of `R^N`, the sampled basis is orthonormal under the grid
//! quadrature up to rounding, for every filter.

use std::fmt;

use crate::circle::{CircleGrid, GridFunction};
use crate::error::{Error, Result};

const DB3: [f64; 6] = [
    0.33267055295008263,
    0.8068915093110925,
    0.45987750211849154,
    -0.13501102001025458,
    -0.08544127388202666,
    0.03522629188570953,
];

const DB4: [f64; 8] = [
    0.2303778133088965,
    0.7148465705529157,
    0.6308807679298589,
    -0.027983769416859854,
    -0.18703481171909309,
    0.030841381835560764,
    0.0328830116668852,
    -0.010597401785069032,
];

const DB5: [f64; 10] = [
    0.16010239797419293,
    0.6038292697971896,
    0.7243085284377729,
    0.13842814590132074,
    -0.24229488706638203,
    -0.032244869584638375,
    0.07757149384004572,
    -0.006241490212798274,
    -0.012580751999081999,
    0.0033357252854737712,
];

const DB6: [f64; 12] = [
    0.11154074335010947,
    0.49462389039845306,
    0.7511339080210954,
    0.31525035170919763,
    -0.22626469396543983,
    -0.12976686756726194,
    0.09750160558732304,
    0.027522865530305727,
    -0.03158203931748603,
    0.0005538422011614961,
    0.004777257510945511,
    -0.0010773010853084796,
];

const DB7: [f64; 14] = [
    0.07785205408500918,
    0.3965393194819173,
    0.7291320908462351,
    0.4697822874051931,
    -0.14390600392856498,
    -0.22403618499387498,
    0.07130921926683026,
    0.08061260915108308,
    -0.03802993693501441,
    -0.01657454163066688,
    0.01255099855609984,
    0.0004295779729213665,
    -0.0018016407040474908,
    0.00035371379997452024,
];

const DB8: [f64; 16] = [
    0.05441584224310401,
    0.31287159091429995,
    0.6756307362972898,
    0.5853546836542067,
    -0.015829105256349306,
    -0.2840155429615469,
    0.0004724845739132828,
    0.12874742662047847,
    -0.017369301001807547,
    -0.044088253930794755,
    0.013981027917398282,
    0.008746094047405777,
    -0.004870352993451574,
    -0.00039174037337694705,
    0.0006754494064505693,
    -0.00011747678412476953,
];

/// Wavelet family. `Daubechies(D)` has `D` vanishing moments, `3 <= D <= 8`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WaveletFamily {
    Haar,
    Daubechies(usize),
}

impl Default for WaveletFamily {
    fn default() -> Self {
        WaveletFamily::Daubechies(4)
    }
}

impl fmt::Display for WaveletFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WaveletFamily::Haar => write!(f, "haar"),
            WaveletFamily::Daubechies(d) => write!(f, "db{d}"),
        }
    }
}

impl std::str::FromStr for WaveletFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "haar" {
            return Ok(WaveletFamily::Haar);
        }
        let d = lower
            .strip_prefix("db")
            .and_then(|rest| rest.parse::<usize>().ok())
            .ok_or_else(|| Error::UnsupportedWavelet(s.to_string()))?;
        let fam = WaveletFamily::Daubechies(d);
        fam.filter()?;
        Ok(fam)
    }
}

impl WaveletFamily {
    /// Low-pass filter `h`, normalised so that `Σ h = √2`.
    pub fn filter(&self) -> Result<Vec<f64>> {
        Ok(match self {
            WaveletFamily::Haar => vec![std::f64::consts::FRAC_1_SQRT_2; 2],
            WaveletFamily::Daubechies(3) => DB3.to_vec(),
            WaveletFamily::Daubechies(4) => DB4.to_vec(),
            WaveletFamily::Daubechies(5) => DB5.to_vec(),
            WaveletFamily::Daubechies(6) => DB6.to_vec(),
            WaveletFamily::Daubechies(7) => DB7.to_vec(),
            WaveletFamily::Daubechies(8) => DB8.to_vec(),
            WaveletFamily::Daubechies(d) => {
                return Err(Error::UnsupportedWavelet(format!("db{d} (supported: haar, db3..db8)")))
            }
        })
    }
}

/// Number of coefficients at level `l` (`l = -1` has one).
pub fn level_size(l: i32) -> usize {
    if l < 0 {
        1
    } else {
        1 << l
    }
}

/// Flat position of `(l, k)`: 0 for `l = -1`, else `2^l + k`.
pub fn flat_index(l: i32, k: usize) -> usize {
    if l < 0 {
        0
    } else {
        (1usize << l) + k
    }
}

/// Inverse of [`flat_index`].
pub fn level_of(idx: usize) -> (i32, usize) {
    if idx == 0 {
        (-1, 0)
    } else {
        let l = usize::BITS - 1 - idx.leading_zeros();
        (l as i32, idx - (1 << l))
    }
}

/// Triangular coefficient array `c_{lk}` for `l = -1..J-1`; `2^J` entries.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletCoeffs {
    levels: usize,
    values: Vec<f64>,
}

impl WaveletCoeffs {
    pub fn zeros(levels: usize) -> Self {
        Self { levels, values: vec![0.0; 1 << levels] }
    }

    pub fn from_flat(levels: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != 1 << levels {
            return Err(Error::LengthMismatch { expected: 1 << levels, got: values.len() });
        }
        Ok(Self { levels, values })
    }

    /// The level bound `J`.
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, l: i32, k: usize) -> f64 {
        self.values[flat_index(l, k)]
    }

    pub fn set(&mut self, l: i32, k: usize, v: f64) {
        self.values[flat_index(l, k)] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// `(l, k, c_{lk})` in flat order.
    pub fn iter(&self) -> impl Iterator<Item = (i32, usize, f64)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| {
            let (l, k) = level_of(i);
            (l, k, v)
        })
    }

    pub fn scale(&self, c: f64) -> WaveletCoeffs {
        WaveletCoeffs { levels: self.levels, values: self.values.iter().map(|v| c * v).collect() }
    }

    pub fn sub(&self, other: &WaveletCoeffs) -> WaveletCoeffs {
        debug_assert_eq!(self.levels, other.levels);
        WaveletCoeffs {
            levels: self.levels,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    /// The same coefficients viewed at a deeper level bound, zero for `l >= J`.
    pub fn padded(&self, levels: usize) -> WaveletCoeffs {
        let mut values = self.values.clone();
        values.resize(1 << levels.max(self.levels), 0.0);
        WaveletCoeffs { levels: levels.max(self.levels), values }
    }

    /// Sum of squares, equal to the squared L² norm of the synthesized function.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// A periodized wavelet basis sampled on a grid, up to level `max_level`.
#[derive(Clone, Debug)]
pub struct WaveletBasis {
    family: WaveletFamily,
    grid: CircleGrid,
    max_level: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    samples: Vec<GridFunction>,
}

impl WaveletBasis {
    pub fn new(family: WaveletFamily, grid: &CircleGrid, max_level: usize) -> Result<Self> {
        check_depth(max_level, grid.n_points())?;
        let lo = family.filter()?;
        let len = lo.len();
        let hi = (0..len).map(|m| if m % 2 == 0 { lo[len - 1 - m] } else { -lo[len - 1 - m] }).collect();
        let mut basis = Self { family, grid: grid.clone(), max_level, lo, hi, samples: Vec::new() };
        let n = grid.n_points();
        let root_n = (n as f64).sqrt();
        basis.samples = (0..1usize << max_level)
            .map(|i| {
                let mut c = vec![0.0; n];
                c[i] = root_n;
                basis.inverse(&mut c);
                GridFunction::new(grid, c).expect("length matches grid")
            })
            .collect();
        Ok(basis)
    }

    pub fn family(&self) -> WaveletFamily {
        self.family
    }

    pub fn grid(&self) -> &CircleGrid {
        &self.grid
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    /// Samples of `ψ_{lk}`; requires `l < max_level`.
    pub fn psi(&self, l: i32, k: usize) -> &GridFunction {
        &self.samples[flat_index(l, k)]
    }

    /// All cached basis functions in flat order.
    pub fn functions(&self) -> &[GridFunction] {
        &self.samples
    }

    /// Full periodized pyramid, in place. Output layout is the flat layout.
    fn forward(&self, data: &mut [f64]) {
        let mut n = data.len();
        let mut tmp = vec![0.0; n];
        while n > 1 {
            let half = n / 2;
            for k in 0..half {
                let (mut a, mut d) = (0.0, 0.0);
                for (m, (&h, &g)) in self.lo.iter().zip(&self.hi).enumerate() {
                    let x = data[(2 * k + m) % n];
                    a += h * x;
                    d += g * x;
                }
                tmp[k] = a;
                tmp[half + k] = d;
            }
            data[..n].copy_from_slice(&tmp[..n]);
            n = half;
        }
    }

    fn inverse(&self, data: &mut [f64]) {
        let total = data.len();
        let mut n = 2;
        let mut tmp = vec![0.0; total];
        while n <= total {
            let half = n / 2;
            tmp[..n].iter_mut().for_each(|v| *v = 0.0);
            for k in 0..half {
                let (a, d) = (data[k], data[half + k]);
                for (m, (&h, &g)) in self.lo.iter().zip(&self.hi).enumerate() {
                    tmp[(2 * k + m) % n] += h * a + g * d;
                }
            }
            data[..n].copy_from_slice(&tmp[..n]);
            n *= 2;
        }
    }

    /// Coefficients `⟨f, ψ_{lk}⟩` for `l < levels`, by grid quadrature.
    pub fn analyze(&self, f: &GridFunction, levels: usize) -> Result<WaveletCoeffs> {
        self.grid.check_same(f.grid())?;
        check_depth(levels, self.grid.n_points())?;
        let mut data = f.values().to_vec();
        self.forward(&mut data);
        let scale = 1.0 / (data.len() as f64).sqrt();
        data.truncate(1 << levels);
        data.iter_mut().for_each(|v| *v *= scale);
        WaveletCoeffs::from_flat(levels, data)
    }

    /// `Σ c_{lk} ψ_{lk}` on the grid.
    pub fn synthesize(&self, c: &WaveletCoeffs) -> Result<GridFunction> {
        let n = self.grid.n_points();
        check_depth(c.levels(), n)?;
        let root_n = (n as f64).sqrt();
        let mut data = vec![0.0; n];
        for (slot, &v) in data.iter_mut().zip(c.as_slice()) {
            *slot = root_n * v;
        }
        self.inverse(&mut data);
        GridFunction::new(&self.grid, data)
    }

    /// Orthogonal projection onto `V_j = span{ψ_{lk} : l < j}`.
    pub fn project_vj(&self, f: &GridFunction, j: usize) -> Result<GridFunction> {
        self.synthesize(&self.analyze(f, j)?)
    }

    /// `sup_x Σ_k |ψ_{jk}(x)| / 2^{j/2}`, with the `j = -1` level normalised by 1.
    pub fn localization_bound_check(&self, j: i32) -> Result<f64> {
        if j >= self.max_level as i32 {
            return Err(Error::LevelTooDeep { levels: j as usize + 1, n_points: self.grid.n_points() });
        }
        let n = self.grid.n_points();
        let mut acc = vec![0.0; n];
        for k in 0..level_size(j) {
            for (a, v) in acc.iter_mut().zip(self.psi(j, k).values()) {
                *a += v.abs();
            }
        }
        let sup = acc.iter().fold(0.0f64, |m, &v| m.max(v));
        Ok(sup / 2f64.powf(j.max(0) as f64 / 2.0))
    }
}

fn check_depth(levels: usize, n_points: usize) -> Result<()> {
    if levels >= usize::BITS as usize || (1usize << levels) * 4 > n_points {
        Err(Error::LevelTooDeep { levels, n_points })
    } else {
        Ok(())
    }
}

/// Sampled sup over `x` of `Σ_k |ψ_{lk}(x)|` for each level, used to bound
/// `‖v‖_∞` for wavelet series with level-wise coefficient bounds.
pub fn level_sup_sums(basis: &WaveletBasis, levels: usize) -> Vec<f64> {
    let n = basis.grid().n_points();
    (-1..levels as i32 - 1)
        .map(|l| {
            let mut acc = vec![0.0; n];
            for k in 0..level_size(l) {
                for (a, v) in acc.iter_mut().zip(basis.psi(l, k).values()) {
                    *a += v.abs();
                }
            }
            acc.into_iter().fold(0.0, f64::max)
        })
        .collect()
}
