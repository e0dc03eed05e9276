//! Small statistical helpers used by the experiments and tests.

use statrs::distribution::{ContinuousCDF, Normal};

/// Linear-interpolation quantile (type 7) of an unsorted sample.
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, p)
}

pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// One-sample Kolmogorov–Smirnov statistic `sup |F_n - F|`.
pub fn ks_statistic(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Asymptotic critical value of the one-sample KS statistic.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// KS distance of a sample to `N(0, sd²)`.
pub fn ks_to_normal(xs: &[f64], sd: f64) -> f64 {
    let normal = Normal::new(0.0, sd).expect("positive standard deviation");
    ks_statistic(xs, |x| normal.cdf(x))
}

/// Least-squares slope of `log y` on `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (mean(&lx), mean(&ly));
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn mean_pairwise(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    for x in a {
        for y in b {
            s += euclid(x, y);
        }
    }
    s / (a.len() * b.len()) as f64
}

/// Two-sample energy distance `2E|X-Y| - E|X-X'| - E|Y-Y'|` (V-statistic).
pub fn energy_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    2.0 * mean_pairwise(a, b) - mean_pairwise(a, a) - mean_pairwise(b, b)
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal, Uniform};

    #[test]
    fn quantiles() {
        let xs = [3.0, 1.0, 2.0, 4.0];
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert_eq!(median(&xs), 2.5);
        assert!((variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ks_accepts_and_rejects() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u: Vec<f64> = Uniform::new(0.0, 1.0).sample_iter(&mut rng).take(5000).collect();
        assert!(ks_statistic(&u, |x| x.clamp(0.0, 1.0)) < ks_critical(5000, 0.01));
        assert!(ks_statistic(&u, |x| (x * x).clamp(0.0, 1.0)) > ks_critical(5000, 0.01));
        assert!((ks_critical(100, 0.05) - 0.1358).abs() < 1e-3);
        let z: Vec<f64> = (0..5000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(ks_to_normal(&z, 1.0) < ks_critical(5000, 0.01));
    }

    #[test]
    fn slope_of_power_law() {
        let x = [10.0, 100.0, 1000.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.4)).collect();
        assert!((loglog_slope(&x, &y) + 0.4).abs() < 1e-12);
    }

    #[test]
    fn energy_distance_separates() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut draw = |shift: f64| -> Vec<Vec<f64>> {
            (0..300)
                .map(|_| {
                    let a: f64 = StandardNormal.sample(&mut rng);
                    let b: f64 = StandardNormal.sample(&mut rng);
                    vec![a + shift, b]
                })
                .collect()
        };
        let (a, b, c) = (draw(0.0), draw(0.0), draw(1.0));
        assert!(energy_distance(&a, &b) < energy_distance(&a, &c));
        assert!(energy_distance(&a, &a).abs() < 1e-12);
    }
}
