//! Empirical distributions and the distances used to compare them with limit laws.

use crate::error::{domain, Result};
use crate::randomness::RngStream;

/// A sorted, non-empty sample.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalDistribution {
    samples: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return domain("empirical distribution needs at least one sample");
        }
        if samples.iter().any(|x| x.is_nan()) {
            return domain("sample contains NaN");
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { samples })
    }

    pub fn from_slice(samples: &[f64]) -> Result<Self> {
        Self::new(samples.to_vec())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Fraction of samples `<= x`.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s <= x) as f64 / self.len() as f64
    }

    pub fn mean(&self) -> f64 {
        mean(&self.samples)
    }

    pub fn variance(&self) -> f64 {
        variance(&self.samples)
    }

    /// Type-7 (linear interpolation) quantile.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.len();
        let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        self.samples[lo] + (h - lo as f64) * (self.samples[hi] - self.samples[lo])
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (`NaN` below two samples).
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Pearson correlation; `NaN` when either side is constant.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// One-sample Kolmogorov–Smirnov statistic against a continuous CDF.
pub fn ks_one_sample(emp: &EmpiricalDistribution, cdf: impl Fn(f64) -> f64) -> f64 {
    let n = emp.len() as f64;
    emp.samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).abs().max((f - i as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov statistic by a merge scan over both samples.
pub fn ks_two_sample(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> f64 {
    let (xa, xb) = (&a.samples, &b.samples);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// One-dimensional W1 distance between two samples of equal size.
pub fn wasserstein1(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> Result<f64> {
    if a.len() != b.len() {
        return domain(format!(
            "wasserstein1 needs equal sample sizes, got {} and {}",
            a.len(),
            b.len()
        ));
    }
    Ok(mean_abs_diff(&a.samples, &b.samples))
}

/// W1 after subsampling the larger sample (without replacement) to the size
/// of the smaller one.
pub fn wasserstein1_subsampled(
    a: &EmpiricalDistribution,
    b: &EmpiricalDistribution,
    stream: &mut RngStream,
) -> f64 {
    if a.len() == b.len() {
        return mean_abs_diff(&a.samples, &b.samples);
    }
    let (small, large) = if a.len() < b.len() { (a, b) } else { (b, a) };
    let mut pool = large.samples.clone();
    let k = small.len();
    for i in 0..k {
        let j = i + stream.below((pool.len() - i) as u64) as usize;
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool.sort_by(f64::total_cmp);
    mean_abs_diff(&small.samples, &pool)
}

fn mean_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

/// Total variation distance between the empirical laws of two integer samples.
pub fn total_variation_counts(a: &[i64], b: &[i64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    let mut keys: Vec<i64> = a.iter().chain(b).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let count = |xs: &[i64]| {
        let mut c = vec![0usize; keys.len()];
        for x in xs {
            c[keys.binary_search(x).unwrap()] += 1;
        }
        c
    };
    let (ca, cb) = (count(a), count(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    0.5 * ca
        .iter()
        .zip(&cb)
        .map(|(&x, &y)| (x as f64 / na - y as f64 / nb).abs())
        .sum::<f64>()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Gumbel CDF `Λ(x) = exp(−e^{−x})`.
pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

pub fn exp_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x).exp_m1()
    }
}

/// `(x − center) / scale` elementwise.
pub fn standardize(xs: &[f64], center: f64, scale: f64) -> Vec<f64> {
    xs.iter().map(|x| (x - center) / scale).collect()
}

pub fn unstandardize(zs: &[f64], center: f64, scale: f64) -> Vec<f64> {
    zs.iter().map(|z| z * scale + center).collect()
}

/// Spreads integer-valued observations uniformly over `[k − 1/2, k + 1/2)` so
/// they can be compared with a continuous limit law.
pub fn jitter(values: &[f64], stream: &mut RngStream) -> Vec<f64> {
    values.iter().map(|v| v + stream.uniform() - 0.5).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpacingsCheck {
    pub ks: f64,
    pub mean_max: f64,
    pub mean_spacings: f64,
}

/// Compares the maximum of `n` Exp(1) draws with `Σ_{i≤n} E_i/i`.
pub fn spacings_identity_check(n: usize, reps: usize, stream: &mut RngStream) -> Result<SpacingsCheck> {
    if n == 0 {
        return domain("spacings check needs n >= 1");
    }
    if reps < 100 {
        return domain(format!("spacings check needs at least 100 repetitions, got {reps}"));
    }
    let mut left = stream.child(0);
    let mut right = stream.child(1);
    let maxima: Vec<f64> = (0..reps)
        .map(|_| (0..n).map(|_| left.exp1()).fold(0.0, f64::max))
        .collect();
    let sums: Vec<f64> = (0..reps)
        .map(|_| (1..=n).map(|i| right.exp1() / i as f64).sum())
        .collect();
    let a = EmpiricalDistribution::new(maxima)?;
    let b = EmpiricalDistribution::new(sums)?;
    Ok(SpacingsCheck {
        ks: ks_two_sample(&a, &b),
        mean_max: a.mean(),
        mean_spacings: b.mean(),
    })
}

/// Equal-width histogram of `values` over `[lo, hi]`; values outside are dropped.
pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<usize> {
    let mut counts = vec![0usize; bins];
    let width = (hi - lo) / bins as f64;
    for &v in values {
        if v < lo || v > hi || !v.is_finite() {
            continue;
        }
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
}
