//! Seeded Monte Carlo plumbing: reproducible substreams, sphere/ball sampling and
//! a stratified estimator with Neyman allocation.
//!
//! Every shard of every stratum draws from its own ChaCha stream keyed by
//! `(seed, stratum, shard)`, and shard sizes depend only on earlier rounds, so
//! results are identical for any rayon worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::estimate::{IntegralEstimate, StratumReport};

pub type McRng = ChaCha8Rng;

const SHARD: u64 = 8192;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent stream for `(seed, a, b)`.
pub fn substream(seed: u64, a: u64, b: u64) -> McRng {
    let key = splitmix(splitmix(splitmix(seed) ^ a.wrapping_mul(0xA24B_AED4_963E_E407)) ^ b);
    McRng::seed_from_u64(key)
}

/// Fill `out` with a uniform point on the unit sphere in `R^{out.len()}`.
pub fn unit_sphere<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        let mut n2 = 0.0;
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
            n2 += *v * *v;
        }
        if n2 > 1e-300 {
            let inv = 1.0 / n2.sqrt();
            out.iter_mut().for_each(|v| *v *= inv);
            return;
        }
    }
}

/// Fill `out` with a uniform point in the ball of radius `radius`.
pub fn uniform_ball<R: Rng + ?Sized>(rng: &mut R, radius: f64, out: &mut [f64]) {
    unit_sphere(rng, out);
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / out.len() as f64);
    out.iter_mut().for_each(|v| *v *= r);
}

/// Surface area of the unit sphere `S^{k-1} ⊂ R^k`.
pub fn sphere_area(k: usize) -> f64 {
    let h = k as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / ln_gamma(h).exp()
}

/// Volume of the unit ball in `R^k`.
pub fn ball_volume(k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    sphere_area(k) / k as f64
}

type Sampler<'a> = Box<dyn Fn(&mut McRng, &mut [f64]) -> f64 + Send + Sync + 'a>;

/// A stratum: draws one weighted sample whose mean is the stratum's integral.
pub struct Stratum<'a> {
    pub group: &'static str,
    pub scratch: usize,
    pub sampler: Sampler<'a>,
}

impl<'a> Stratum<'a> {
    pub fn new<F>(group: &'static str, scratch: usize, sampler: F) -> Self
    where
        F: Fn(&mut McRng, &mut [f64]) -> f64 + Send + Sync + 'a,
    {
        Self {
            group,
            scratch,
            sampler: Box::new(sampler),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        Moments { n, mean, m2 }
    }

    fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }
}

/// Options for [`run_stratified`].
#[derive(Debug, Clone, Copy)]
pub struct StratifiedOptions {
    pub budget: u64,
    pub seed: u64,
    /// Stop early once `std_error <= rel_tol·|value|`.
    pub rel_tol: Option<f64>,
    /// Fraction of the budget spent on the equal-allocation pilot round.
    pub pilot_fraction: f64,
}

impl StratifiedOptions {
    pub fn new(budget: u64, seed: u64) -> Self {
        Self {
            budget,
            seed,
            rel_tol: None,
            pilot_fraction: 0.1,
        }
    }
}

/// Stratified estimator: equal pilot allocation, then rounds allocated
/// proportionally to each stratum's estimated standard deviation.
pub fn run_stratified(strata: &[Stratum<'_>], opts: StratifiedOptions) -> IntegralEstimate {
    let k = strata.len();
    if k == 0 {
        return IntegralEstimate::exact(0.0);
    }
    let mut moments = vec![Moments::default(); k];
    let mut shards_issued = vec![0u64; k];
    let pilot_total = ((opts.budget as f64 * opts.pilot_fraction) as u64).max(16 * k as u64);
    let pilot_each = (pilot_total / k as u64).max(16);
    let mut alloc = vec![pilot_each; k];
    let mut spent = 0u64;
    loop {
        run_round(strata, &alloc, &mut moments, &mut shards_issued, opts.seed);
        spent += alloc.iter().sum::<u64>();
        let (value, var) = combine(&moments);
        if let Some(tol) = opts.rel_tol {
            if var.sqrt() <= tol * value.abs() {
                break;
            }
        }
        if spent >= opts.budget {
            break;
        }
        let remaining = opts.budget - spent;
        let batch = remaining.min(spent.max(1024));
        alloc = neyman(&moments, batch);
    }
    finish(strata, &moments, opts)
}

fn run_round(strata: &[Stratum<'_>], alloc: &[u64], moments: &mut [Moments], shards_issued: &mut [u64], seed: u64) {
    let mut jobs: Vec<(usize, u64, u64)> = Vec::new();
    for (s, &n) in alloc.iter().enumerate() {
        let mut left = n;
        while left > 0 {
            let len = left.min(SHARD);
            jobs.push((s, shards_issued[s], len));
            shards_issued[s] += 1;
            left -= len;
        }
    }
    let results: Vec<(usize, Moments)> = jobs
        .par_iter()
        .map(|&(s, shard, len)| {
            let stratum = &strata[s];
            let mut rng = substream(seed, s as u64, shard);
            let mut scratch = vec![0.0; stratum.scratch];
            let mut m = Moments::default();
            for _ in 0..len {
                let w = (stratum.sampler)(&mut rng, &mut scratch);
                m.push(w);
            }
            (s, m)
        })
        .collect();
    for (s, m) in results {
        moments[s] = moments[s].merge(m);
    }
}

fn combine(moments: &[Moments]) -> (f64, f64) {
    moments.iter().fold((0.0, 0.0), |(v, var), m| {
        let sv = if m.n > 0 { m.variance() / m.n as f64 } else { 0.0 };
        (v + m.mean, var + sv)
    })
}

fn neyman(moments: &[Moments], batch: u64) -> Vec<u64> {
    let sd: Vec<f64> = moments.iter().map(|m| m.variance().sqrt()).collect();
    let total: f64 = sd.iter().sum();
    let k = moments.len() as u64;
    if total <= 0.0 || !total.is_finite() {
        return vec![(batch / k).max(1); moments.len()];
    }
    // Keep a small floor so no stratum's variance estimate goes stale.
    let floor = (batch / (50 * k)).max(1);
    sd.iter()
        .map(|s| ((batch as f64 * s / total) as u64).max(floor))
        .collect()
}

fn finish(strata: &[Stratum<'_>], moments: &[Moments], opts: StratifiedOptions) -> IntegralEstimate {
    let (value, var) = combine(moments);
    let n_samples = moments.iter().map(|m| m.n).sum();
    let mut groups: Vec<StratumReport> = Vec::new();
    for (s, m) in strata.iter().zip(moments) {
        let sv = if m.n > 0 { m.variance() / m.n as f64 } else { 0.0 };
        match groups.iter_mut().find(|g| g.id == s.group) {
            Some(g) => {
                g.value += m.mean;
                g.std_error = (g.std_error * g.std_error + sv).sqrt();
                g.n_samples += m.n;
            }
            None => groups.push(StratumReport {
                id: s.group.to_string(),
                value: m.mean,
                std_error: sv.sqrt(),
                n_samples: m.n,
            }),
        }
    }
    let std_error = var.sqrt();
    let converged = match opts.rel_tol {
        Some(tol) => std_error <= tol * value.abs(),
        None => true,
    };
    IntegralEstimate {
        value,
        std_error,
        n_samples,
        strata: groups,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_constants() {
        let pi = std::f64::consts::PI;
        assert!((sphere_area(2) - 2.0 * pi).abs() < 1e-12);
        assert!((sphere_area(3) - 4.0 * pi).abs() < 1e-12);
        assert!((sphere_area(4) - 2.0 * pi * pi).abs() < 1e-12);
        assert!((sphere_area(6) - pi.powi(3)).abs() < 1e-11);
        assert!((ball_volume(2) - pi).abs() < 1e-12);
        assert!((sphere_area(1) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn stratified_uniform_integral() {
        // ∫_0^1 x² dx split into 4 strata.
        let strata: Vec<Stratum> = (0..4)
            .map(|i| {
                Stratum::new("unit", 0, move |rng: &mut McRng, _: &mut [f64]| {
                    let u: f64 = rng.random();
                    let x = (i as f64 + u) / 4.0;
                    x * x / 4.0
                })
            })
            .collect();
        let est = run_stratified(&strata, StratifiedOptions::new(200_000, 7));
        assert!((est.value - 1.0 / 3.0).abs() < 4.0 * est.std_error + 1e-12);
        assert!(est.std_error < 1e-3);
        assert_eq!(est.strata.len(), 1);
    }

    #[test]
    fn independent_of_thread_count() {
        let make = || -> Vec<Stratum<'static>> {
            (0..3)
                .map(|_| {
                    Stratum::new("s", 4, |rng: &mut McRng, buf: &mut [f64]| {
                        unit_sphere(rng, buf);
                        buf[0] * buf[0]
                    })
                })
                .collect()
        };
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| run_stratified(&make(), StratifiedOptions::new(100_000, 3)))
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }
}
