//! Independent oracles shared by the integration tests.

#![allow(dead_code, clippy::needless_range_loop)]

use arrivals::WaitingLaw;

/// `P[M(t) = m]` for `0 <= m, t <= horizon` by summing over every inner event
/// set in `{1, ..., horizon}` and every value of the stopping time, including
/// "later than the horizon". Returns `table[m][t]`.
pub fn brute_force_stopped(inner: &WaitingLaw, stop: &WaitingLaw, horizon: usize) -> Vec<Vec<f64>> {
    let inner_pmf: Vec<f64> = (0..=horizon as u64).map(|t| inner.pmf(t)).collect();
    let inner_tail: Vec<f64> = (0..=horizon)
        .map(|s| 1.0 - inner_pmf[1..=s].iter().sum::<f64>())
        .collect();
    let stop_pmf: Vec<f64> = (0..=horizon as u64).map(|t| stop.pmf(t)).collect();
    let stop_late = 1.0 - stop_pmf.iter().sum::<f64>();

    let mut table = vec![vec![0.0; horizon + 1]; horizon + 1];
    for mask in 0u32..(1u32 << horizon) {
        let events: Vec<usize> = (1..=horizon).filter(|&t| mask & (1 << (t - 1)) != 0).collect();
        let mut weight = 1.0;
        let mut last = 0;
        for &e in &events {
            weight *= inner_pmf[e - last];
            last = e;
        }
        weight *= inner_tail[horizon - last];
        if weight == 0.0 {
            continue;
        }
        let stops = (1..=horizon).map(|s| (s, stop_pmf[s])).chain(std::iter::once((usize::MAX, stop_late)));
        for (s, ps) in stops {
            if ps == 0.0 {
                continue;
            }
            for t in 0..=horizon {
                let end = t.min(s);
                let m = events.iter().filter(|&&e| e <= end).count();
                table[m][t] += weight * ps;
            }
        }
    }
    table
}

/// Binomial coefficient as a float.
pub fn choose(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
