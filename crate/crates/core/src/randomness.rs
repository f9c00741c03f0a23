//! Keyed random streams and the handful of exact samplers the simulations need.
//!
//! A stream is identified by `(master_seed, stream_index)`. Both values feed a
//! ChaCha8 generator (seed and stream id respectively), so two keys never share
//! generator state and a replication can be re-run in isolation, in any order,
//! on any thread. Sub-streams are derived from the key alone, never from the
//! current position of the parent.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use crate::error::{domain, Result};

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

/// SplitMix64 finaliser; used only to derive child keys.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A single-owner deterministic random stream.
#[derive(Clone, Debug)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

/// Creates the stream keyed by `(master_seed, stream_index)`.
pub fn make_stream(master_seed: u64, stream_index: u64) -> RngStream {
    RngStream::new(master_seed, stream_index)
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_index);
        Self {
            master_seed,
            stream_index,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// A sub-stream determined by this stream's key and `label` only.
    pub fn child(&self, label: u64) -> RngStream {
        let key = mix64(self.master_seed ^ mix64(self.stream_index.wrapping_add(0x632b_e59b_d9b4_e019)));
        RngStream::new(key, label)
    }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * TWO_POW_M53
    }

    /// Uniform on [0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * TWO_POW_M53
    }

    /// Uniform integer in `0..bound`. Panics if `bound == 0`.
    #[inline]
    pub fn below(&mut self, bound: u64) -> u64 {
        self.rng.random_range(0..bound)
    }

    #[inline]
    pub fn bernoulli(&mut self, prob: f64) -> bool {
        self.uniform() < prob
    }

    /// Exp(1) by inverse transform. Hot-path variant without argument checks.
    #[inline]
    pub fn exp1(&mut self) -> f64 {
        -self.uniform_open().ln()
    }

    pub fn exponential(&mut self, rate: f64) -> Result<f64> {
        sample_exponential(self, rate)
    }

    pub fn binomial(&mut self, trials: u64, prob: f64) -> Result<u64> {
        sample_binomial(self, trials, prob)
    }

    pub fn poisson(&mut self, mean: f64) -> Result<u64> {
        sample_poisson(self, mean)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// The inverse-transform map `u ↦ −ln(u)/rate`.
#[inline]
pub fn exponential_from_uniform(u: f64, rate: f64) -> f64 {
    -u.ln() / rate
}

pub fn sample_exponential(stream: &mut RngStream, rate: f64) -> Result<f64> {
    if !(rate > 0.0 && rate.is_finite()) {
        return domain(format!("exponential rate must be positive and finite, got {rate}"));
    }
    Ok(exponential_from_uniform(stream.uniform_open(), rate))
}

pub fn sample_binomial(stream: &mut RngStream, trials: u64, prob: f64) -> Result<u64> {
    Ok(BinomialSampler::new(trials, prob)?.sample(stream))
}

pub fn sample_poisson(stream: &mut RngStream, mean: f64) -> Result<u64> {
    Ok(PoissonSampler::new(mean)?.sample(stream))
}

/// Reusable exact Bin(trials, prob) sampler (inversion for small means, BTPE otherwise).
#[derive(Clone, Debug)]
pub struct BinomialSampler {
    trials: u64,
    prob: f64,
    inner: Option<rand_distr::Binomial>,
}

impl BinomialSampler {
    pub fn new(trials: u64, prob: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&prob) {
            return domain(format!("binomial probability must lie in [0, 1], got {prob}"));
        }
        let inner = if prob == 0.0 || prob == 1.0 || trials == 0 {
            None
        } else {
            Some(
                rand_distr::Binomial::new(trials, prob)
                    .map_err(|e| crate::Error::Domain(e.to_string()))?,
            )
        };
        Ok(Self {
            trials,
            prob,
            inner,
        })
    }

    #[inline]
    pub fn sample(&self, stream: &mut RngStream) -> u64 {
        match &self.inner {
            Some(b) => b.sample(stream),
            None if self.prob == 1.0 => self.trials,
            None => 0,
        }
    }

    pub fn mean(&self) -> f64 {
        self.trials as f64 * self.prob
    }
}

/// Largest mean handled by table inversion; larger means defer to PTRS rejection.
const POISSON_TABLE_MAX_MEAN: f64 = 64.0;

/// Reusable exact Poisson sampler.
///
/// Small means use inversion against a precomputed CDF table, falling back to
/// the pmf recurrence for uniforms beyond the table.
#[derive(Clone, Debug)]
pub struct PoissonSampler {
    mean: f64,
    cdf: Vec<f64>,
    large: Option<rand_distr::Poisson<f64>>,
}

impl PoissonSampler {
    pub fn new(mean: f64) -> Result<Self> {
        if !(mean > 0.0 && mean.is_finite()) {
            return domain(format!("poisson mean must be positive and finite, got {mean}"));
        }
        if mean > POISSON_TABLE_MAX_MEAN {
            let large = rand_distr::Poisson::new(mean)
                .map_err(|e| crate::Error::Domain(e.to_string()))?;
            return Ok(Self {
                mean,
                cdf: Vec::new(),
                large: Some(large),
            });
        }
        let mut cdf = Vec::new();
        let mut pmf = (-mean).exp();
        let mut acc = 0.0;
        let mut k = 0u64;
        loop {
            acc += pmf;
            cdf.push(acc);
            k += 1;
            pmf *= mean / k as f64;
            if (k as f64 > mean && pmf < 1e-18) || acc >= 1.0 {
                break;
            }
        }
        Ok(Self {
            mean,
            cdf,
            large: None,
        })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    #[inline]
    pub fn sample(&self, stream: &mut RngStream) -> u64 {
        if let Some(large) = &self.large {
            return large.sample(stream) as u64;
        }
        let u = stream.uniform();
        let idx = self.cdf.partition_point(|&c| c <= u);
        if idx < self.cdf.len() {
            return idx as u64;
        }
        // Beyond the table: continue the recurrence. Reached with probability < 1e-16.
        let mut k = self.cdf.len() as u64 - 1;
        let mut acc = *self.cdf.last().unwrap();
        let mut pmf = poisson_pmf(self.mean, k);
        while acc <= u {
            k += 1;
            pmf *= self.mean / k as f64;
            if pmf == 0.0 {
                break;
            }
            acc += pmf;
        }
        k
    }
}

fn poisson_pmf(mean: f64, k: u64) -> f64 {
    (k as f64 * mean.ln() - mean - libm::lgamma(k as f64 + 1.0)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn same_key_same_draws() {
        let mut a = make_stream(42, 0);
        let mut b = make_stream(42, 0);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn distinct_stream_index_differs() {
        let mut a = make_stream(42, 0);
        let mut b = make_stream(42, 1);
        let differs = (0..100).any(|_| a.next_u64() != b.next_u64());
        assert!(differs);
    }

    #[test]
    fn distinct_seeds_are_uncorrelated() {
        let mut a = make_stream(42, 0);
        let mut b = make_stream(43, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| a.uniform()).collect();
        let ys: Vec<f64> = (0..n).map(|_| b.uniform()).collect();
        let (mx, vx) = mean_var(&xs);
        let (my, vy) = mean_var(&ys);
        let cov = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / (n as f64 - 1.0);
        let corr = cov / (vx * vy).sqrt();
        assert!(corr.abs() < 0.02, "corr = {corr}");
    }

    #[test]
    fn child_streams_depend_on_key_only() {
        let mut parent = make_stream(7, 3);
        let c1 = parent.child(5);
        for _ in 0..17 {
            parent.next_u64();
        }
        let c2 = parent.child(5);
        let (mut c1, mut c2) = (c1, c2);
        assert_eq!(c1.next_u64(), c2.next_u64());
        let mut other = make_stream(7, 4).child(5);
        let mut c3 = make_stream(7, 3).child(5);
        assert_ne!(other.next_u64(), c3.next_u64());
    }

    #[test]
    fn inverse_transform_identity() {
        let x = exponential_from_uniform((-1.0f64).exp(), 1.0);
        assert!((x - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exponential_rejects_bad_rate() {
        let mut s = make_stream(1, 0);
        assert!(s.exponential(0.0).is_err());
        assert!(s.exponential(-1.0).is_err());
        assert!(s.exponential(f64::NAN).is_err());
    }

    #[test]
    fn exponential_means() {
        let mut s = make_stream(11, 0);
        let n = 1_000_000;
        let m1 = (0..n).map(|_| s.exponential(1.0).unwrap()).sum::<f64>() / n as f64;
        assert!((m1 - 1.0).abs() < 0.01, "{m1}");
        let m2 = (0..n).map(|_| s.exponential(2.0).unwrap()).sum::<f64>() / n as f64;
        assert!((m2 - 0.5).abs() < 0.005, "{m2}");
    }

    #[test]
    fn binomial_degenerate_and_domain() {
        let mut s = make_stream(5, 0);
        for _ in 0..100 {
            assert_eq!(s.binomial(17, 0.0).unwrap(), 0);
            assert_eq!(s.binomial(17, 1.0).unwrap(), 17);
        }
        assert!(s.binomial(10, -0.1).is_err());
        assert!(s.binomial(10, 1.1).is_err());
    }

    #[test]
    fn binomial_moments_sparse() {
        let mut s = make_stream(6, 0);
        let sampler = BinomialSampler::new(10_000, 2e-4).unwrap();
        let xs: Vec<f64> = (0..1_000_000).map(|_| sampler.sample(&mut s) as f64).collect();
        let (m, v) = mean_var(&xs);
        assert!((m - 2.0).abs() < 0.01, "mean {m}");
        assert!((v - 2.0 * (1.0 - 2e-4)).abs() < 0.02, "var {v}");
    }

    #[test]
    fn poisson_moments_and_atom() {
        let mut s = make_stream(8, 0);
        let sampler = PoissonSampler::new(2.0).unwrap();
        let xs: Vec<f64> = (0..1_000_000).map(|_| sampler.sample(&mut s) as f64).collect();
        let (m, v) = mean_var(&xs);
        let p0 = xs.iter().filter(|&&x| x == 0.0).count() as f64 / xs.len() as f64;
        assert!((m - 2.0).abs() < 0.01, "mean {m}");
        assert!((v - 2.0).abs() < 0.02, "var {v}");
        assert!((p0 - (-2.0f64).exp()).abs() < 0.002, "p0 {p0}");
    }

    #[test]
    fn poisson_large_mean_path() {
        let mut s = make_stream(9, 0);
        let sampler = PoissonSampler::new(150.0).unwrap();
        let xs: Vec<f64> = (0..200_000).map(|_| sampler.sample(&mut s) as f64).collect();
        let (m, v) = mean_var(&xs);
        assert!((m - 150.0).abs() < 0.2, "mean {m}");
        assert!((v / 150.0 - 1.0).abs() < 0.03, "var {v}");
    }

    #[test]
    fn poisson_rejects_bad_mean() {
        let mut s = make_stream(1, 0);
        assert!(s.poisson(0.0).is_err());
        assert!(s.poisson(-3.0).is_err());
    }
}
