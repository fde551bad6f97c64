//! Path-level simulation of stopped processes and their walks, plus the
//! statistics used to compare samples with exact laws.
//!
//! Replica `i` draws from a ChaCha8 stream seeded by the run seed with stream
//! number `i`, so results do not depend on how replicas are spread over
//! worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::distributions::ExtendedTime;
use crate::error::{Error, Result};
use crate::lattice_walk::StepLaw;
use crate::stopped::StoppedSpec;

/// Seed, replica count, horizon and worker count of a simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    pub seed: u64,
    pub replicas: usize,
    pub horizon: usize,
    pub workers: usize,
}

impl SimConfig {
    /// Uses all available cores.
    pub fn new(seed: u64, replicas: usize, horizon: usize) -> Self {
        let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
        Self { seed, replicas, horizon, workers }
    }

    pub fn with_workers(self, workers: usize) -> Self {
        Self { workers, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::Parameter("at least one replica is required".into()));
        }
        if self.workers == 0 {
            return Err(Error::Parameter("at least one worker is required".into()));
        }
        Ok(())
    }
}

/// The random stream of one replica.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Runs `f(rng, replica)` for every replica on `cfg.workers` threads and
/// returns the results in replica order.
pub fn run_replicas<T, F>(cfg: &SimConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Parameter(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        (0..cfg.replicas)
            .into_par_iter()
            .map(|i| f(&mut replica_rng(cfg.seed, i as u64), i))
            .collect()
    }))
}

/// One realisation of the stopped process, recorded up to a time limit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StoppedPath {
    /// The stopping time `dT`.
    pub stop: ExtendedTime,
    /// Inner event times not later than `min(dT, limit)`, increasing.
    pub events: Vec<u64>,
}

impl StoppedPath {
    /// `M(t)` for `t` up to the recording limit.
    pub fn count_at(&self, t: u64) -> usize {
        let end = match self.stop {
            ExtendedTime::Finite(s) => t.min(s),
            ExtendedTime::Infinite => t,
        };
        self.events.partition_point(|&e| e <= end)
    }

    /// `M(0), ..., M(horizon)`.
    pub fn trajectory(&self, horizon: usize) -> Vec<usize> {
        (0..=horizon as u64).map(|t| self.count_at(t)).collect()
    }

    pub fn frozen_by(&self, t: u64) -> bool {
        matches!(self.stop, ExtendedTime::Finite(s) if s <= t)
    }
}

/// Draws `dT`, then inner waiting times until the next event would fall
/// after `min(dT, limit)`.
pub fn sample_stopped_path<R: rand::Rng + ?Sized>(spec: &StoppedSpec, limit: u64, rng: &mut R) -> StoppedPath {
    let stop = spec.stop().sample(rng);
    let end = match stop {
        ExtendedTime::Finite(s) => s.min(limit),
        ExtendedTime::Infinite => limit,
    };
    let mut events = Vec::new();
    let mut clock: u64 = 0;
    loop {
        let wait = spec.inner().sample(rng).finite().expect("inner law is proper");
        clock = clock.saturating_add(wait);
        if clock > end {
            break;
        }
        events.push(clock);
    }
    StoppedPath { stop, events }
}

/// Paths recorded up to `cfg.horizon`.
pub fn sample_stopped_paths(spec: &StoppedSpec, cfg: &SimConfig) -> Result<Vec<StoppedPath>> {
    run_replicas(cfg, |rng, _| sample_stopped_path(spec, cfg.horizon as u64, rng))
}

/// Histograms of `M(t)` at each requested time: `counts[k][m]` is the number
/// of replicas with `M(times[k]) = m`.
pub fn stopped_histograms(spec: &StoppedSpec, cfg: &SimConfig, times: &[u64]) -> Result<Vec<Vec<u64>>> {
    let limit = times.iter().copied().max().unwrap_or(0);
    let values = run_replicas(cfg, |rng, _| {
        let path = sample_stopped_path(spec, limit, rng);
        times.iter().map(|&t| path.count_at(t)).collect::<Vec<_>>()
    })?;
    let mut counts = vec![Vec::new(); times.len()];
    for row in values {
        for (hist, m) in counts.iter_mut().zip(row) {
            if hist.len() <= m {
                hist.resize(m + 1, 0);
            }
            hist[m] += 1;
        }
    }
    Ok(counts)
}

/// Fraction of replicas not yet stopped at time `t`.
pub fn unfrozen_fraction(spec: &StoppedSpec, cfg: &SimConfig, t: u64) -> Result<f64> {
    let alive = run_replicas(cfg, |rng, _| !spec.stop().sample(rng).finite().is_some_and(|s| s <= t))?;
    Ok(alive.iter().filter(|&&a| a).count() as f64 / cfg.replicas as f64)
}

/// When the walk position is read off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Observation {
    /// At a finite time.
    At(u64),
    /// After the stop, for paths stopped no later than `cap`.
    Frozen { cap: u64 },
}

/// Walk endpoints; capped replicas are left out of `positions`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EndpointSample {
    pub positions: Vec<Vec<i64>>,
    pub cap_hits: usize,
    pub replicas: usize,
}

/// Samples walk positions driven by the stopped process. Frozen observations
/// fail with an inconclusive-run error when more than `1e-3` of the replicas
/// are still running at the cap.
pub fn sample_walk_endpoints(step: &StepLaw, spec: &StoppedSpec, cfg: &SimConfig, obs: Observation) -> Result<EndpointSample> {
    let limit = match obs {
        Observation::At(t) => t,
        Observation::Frozen { cap } => cap,
    };
    let draws = run_replicas(cfg, |rng, _| {
        let path = sample_stopped_path(spec, limit, rng);
        if let Observation::Frozen { .. } = obs {
            if !path.frozen_by(limit) {
                return None;
            }
        }
        let n = path.count_at(limit);
        let mut x = vec![0i64; step.dim()];
        for _ in 0..n {
            for (c, s) in x.iter_mut().zip(step.sample(rng)) {
                *c += s;
            }
        }
        Some(x)
    })?;
    let replicas = draws.len();
    let positions: Vec<Vec<i64>> = draws.into_iter().flatten().collect();
    let cap_hits = replicas - positions.len();
    if cap_hits as f64 > 1e-3 * replicas as f64 {
        return Err(Error::Inconclusive(format!(
            "{cap_hits} of {replicas} replicas were not stopped by the cap {limit}"
        )));
    }
    Ok(EndpointSample { positions, cap_hits, replicas })
}

/// One-dimensional endpoints divided by `scale` after spreading each lattice
/// point uniformly over its unit cell (`x + U - 1/2`), so that they can be
/// compared with a continuous limit law. The jitter stream is derived from
/// `seed` and is independent of the replica streams.
pub fn rescaled_endpoints(sample: &EndpointSample, scale: f64, seed: u64) -> Vec<f64> {
    use rand::Rng;
    let mut rng = replica_rng(seed, u64::MAX);
    sample
        .positions
        .iter()
        .map(|x| (x[0] as f64 + rng.random::<f64>() - 0.5) / scale)
        .collect()
}

/// Histograms as CSV with columns `t,m,count,fraction`, one row per
/// non-empty bin, in time then count order.
pub fn histograms_csv(times: &[u64], counts: &[Vec<u64>]) -> String {
    let mut out = String::from("t,m,count,fraction\n");
    for (&t, hist) in times.iter().zip(counts) {
        let total: u64 = hist.iter().sum();
        for (m, &c) in hist.iter().enumerate().filter(|(_, &c)| c > 0) {
            out.push_str(&format!("{t},{m},{c},{:.9}\n", c as f64 / total as f64));
        }
    }
    out
}

/// Histogram of non-negative integer samples.
pub fn counts_from_samples(samples: &[u64]) -> Vec<u64> {
    let len = samples.iter().max().map_or(0, |&m| m as usize + 1);
    let mut counts = vec![0; len];
    for &s in samples {
        counts[s as usize] += 1;
    }
    counts
}

/// `(1/2) sum_m |count_m / N - p_m|`, with all mass beyond either vector
/// counted in full.
pub fn total_variation(counts: &[u64], exact: &[f64]) -> Result<f64> {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::EmptySamples);
    }
    let len = counts.len().max(exact.len());
    let mut acc = 0.0;
    for m in 0..len {
        let emp = counts.get(m).copied().unwrap_or(0) as f64 / n as f64;
        acc += (emp - exact.get(m).copied().unwrap_or(0.0)).abs();
    }
    // mass of the exact law beyond its stored entries
    acc += (1.0 - exact.iter().sum::<f64>()).max(0.0);
    Ok(0.5 * acc)
}

/// Largest distance between the empirical and the exact distribution
/// functions on the integers.
pub fn ks_discrete(counts: &[u64], exact: &[f64]) -> Result<f64> {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::EmptySamples);
    }
    let len = counts.len().max(exact.len());
    let (mut fe, mut fx, mut worst) = (0.0, 0.0, 0.0f64);
    for m in 0..len {
        fe += counts.get(m).copied().unwrap_or(0) as f64 / n as f64;
        fx += exact.get(m).copied().unwrap_or(0.0);
        worst = worst.max((fe - fx).abs());
    }
    Ok(worst)
}

/// Pearson chi-square p-value. Cells with expected count below 5 are pooled
/// with the mass outside the exact vector.
pub fn chi_square_p_value(counts: &[u64], exact: &[f64]) -> Result<f64> {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::EmptySamples);
    }
    let nf = n as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut pooled_obs, mut pooled_exp) = (nf, nf);
    for (m, &p) in exact.iter().enumerate() {
        let expected = nf * p;
        if expected >= 5.0 {
            let observed = counts.get(m).copied().unwrap_or(0) as f64;
            cells.push((observed, expected));
            pooled_obs -= observed;
            pooled_exp -= expected;
        }
    }
    if pooled_exp >= 5.0 {
        cells.push((pooled_obs, pooled_exp));
    } else if let Some(last) = cells.last_mut() {
        last.0 += pooled_obs;
        last.1 += pooled_exp.max(0.0);
    }
    if cells.len() < 2 {
        return Ok(1.0);
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dist = ChiSquared::new((cells.len() - 1) as f64).map_err(|e| Error::Parameter(e.to_string()))?;
    Ok(1.0 - dist.cdf(stat))
}

/// Distances between integer samples and an exact pmf.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub samples: u64,
    pub total_variation: f64,
    pub ks: f64,
    pub chi_square_p: f64,
}

/// TV, KS and chi-square comparison of a histogram against `exact`.
pub fn compare_empirical(counts: &[u64], exact: &[f64]) -> Result<Comparison> {
    Ok(Comparison {
        samples: counts.iter().sum(),
        total_variation: total_variation(counts, exact)?,
        ks: ks_discrete(counts, exact)?,
        chi_square_p: chi_square_p_value(counts, exact)?,
    })
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::Parameter("samples contain NaN".into()));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// One-sample Kolmogorov-Smirnov distance to a continuous distribution function.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let v = sorted(samples)?;
    let n = v.len() as f64;
    Ok(v.iter().enumerate().fold(0.0f64, |worst, (i, &x)| {
        let f = cdf(x);
        worst.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    }))
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut worst) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        worst = worst.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(worst)
}
