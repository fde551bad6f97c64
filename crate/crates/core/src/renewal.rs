//! Finite-time and limiting laws of a renewal counting process `N(t)` with
//! IID, possibly defective waiting times.

use serde::Serialize;

use crate::distributions::{ExtendedTime, WaitingLaw};
use crate::error::{Error, Result};
use crate::gf_series::CoeffSeries;

/// `probs[n][t] = P[N(t) = n]` for `0 <= n, t <= T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateTable {
    probs: Vec<Vec<f64>>,
}

impl StateTable {
    /// Builds a table from rows indexed by the count `n`. All rows must share
    /// the same horizon.
    pub fn from_rows(probs: Vec<Vec<f64>>) -> Result<Self> {
        let width = probs.first().map(Vec::len).unwrap_or(0);
        if width == 0 {
            return Err(Error::Parameter("state table needs at least one row and one time".into()));
        }
        if let Some(row) = probs.iter().find(|r| r.len() != width) {
            return Err(Error::HorizonMismatch { left: width - 1, right: row.len().saturating_sub(1) });
        }
        Ok(Self { probs })
    }

    pub fn horizon(&self) -> usize {
        self.probs[0].len() - 1
    }

    /// Largest tabulated count.
    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    /// `P[N(t) = n]`; zero outside the table.
    pub fn get(&self, n: usize, t: usize) -> f64 {
        self.probs.get(n).and_then(|r| r.get(t)).copied().unwrap_or(0.0)
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.probs[n]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.probs
    }

    /// The law of the count at time `t`.
    pub fn column(&self, t: usize) -> Vec<f64> {
        self.probs.iter().map(|r| r[t]).collect()
    }

    /// `sum_n P[N(t) = n]` for every `t`.
    pub fn column_sums(&self) -> Vec<f64> {
        (0..=self.horizon()).map(|t| self.probs.iter().map(|r| r[t]).sum()).collect()
    }

    /// `sum_n n^order P[N(t) = n]` as a series in `t`.
    pub fn moment(&self, order: i32) -> CoeffSeries {
        let mut acc = vec![0.0; self.horizon() + 1];
        for (n, row) in self.probs.iter().enumerate().skip(1) {
            let w = (n as f64).powi(order);
            for (a, p) in acc.iter_mut().zip(row) {
                *a += w * p;
            }
        }
        CoeffSeries::new(acc).expect("finite table")
    }

    /// CSV with one line per time: `t,n0,n1,...`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for n in 0..=self.n_max() {
            out.push_str(&format!(",n{n}"));
        }
        out.push('\n');
        for t in 0..=self.horizon() {
            out.push_str(&t.to_string());
            for row in &self.probs {
                out.push_str(&format!(",{:.17e}", row[t]));
            }
            out.push('\n');
        }
        out
    }
}

/// Classification by the probability `Lambda` that events never stop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessType {
    /// Finitely many events almost surely.
    TypeI,
    /// Stops with a probability strictly between zero and one.
    Intermediate,
    /// Infinitely many events almost surely.
    TypeII,
}

impl ProcessType {
    pub fn from_lambda(lambda: f64) -> Self {
        if lambda >= 1.0 - 1e-12 {
            ProcessType::TypeII
        } else if lambda <= 1e-12 {
            ProcessType::TypeI
        } else {
            ProcessType::Intermediate
        }
    }

    /// A plain renewal process is recurrent iff its waiting law is proper.
    pub fn of_renewal(law: &WaitingLaw) -> Self {
        if law.defect_mass() >= 1.0 - 1e-12 {
            ProcessType::TypeII
        } else {
            ProcessType::TypeI
        }
    }
}

/// `P[dt > t]` on `[0, T]`: one minus the running sum of the pmf.
pub fn survival_series(law: &WaitingLaw, horizon: usize) -> CoeffSeries {
    let psi = law.pmf_vector(horizon);
    let mut acc = 0.0;
    CoeffSeries::from_fn(horizon, |t| {
        acc += psi.get(t);
        1.0 - acc
    })
    .expect("finite survival")
}

/// Full table `Phi^(n) = Phi^(0) * psi^(*n)` with `n_max = T`.
pub fn state_table(law: &WaitingLaw, horizon: usize) -> StateTable {
    let psi = law.pmf_vector(horizon);
    let mut current = survival_series(law, horizon);
    let mut rows = Vec::with_capacity(horizon + 1);
    for _ in 0..horizon {
        let next = current.convolve(&psi).expect("shared horizon");
        rows.push(current.into_coeffs());
        current = next;
    }
    rows.push(current.into_coeffs());
    StateTable { probs: rows }
}

/// `(E N(t), E N^2(t))` from the rational generating functions
/// `psi / ((1-u)(1-psi))` and `psi (1+psi) / ((1-u)(1-psi)^2)`.
pub fn count_moments_gf(law: &WaitingLaw, horizon: usize) -> (CoeffSeries, CoeffSeries) {
    let psi = law.pmf_vector(horizon);
    let inv = psi.one_minus().reciprocal().expect("1 - psi(0) = 1");
    let first = psi.convolve(&inv).expect("shared horizon");
    let second = first
        .convolve(&psi.add(&CoeffSeries::delta(horizon)).expect("shared horizon"))
        .and_then(|s| s.convolve(&inv))
        .expect("shared horizon");
    (first.partial_sums(), second.partial_sums())
}

/// Count moments from the generating functions, cross-checked against the
/// state table. A discrepancy above `1e-8` is reported as an accuracy error.
pub fn count_moments(law: &WaitingLaw, horizon: usize) -> Result<(CoeffSeries, CoeffSeries)> {
    let (first, second) = count_moments_gf(law, horizon);
    let table = state_table(law, horizon);
    let d1 = first.max_abs_diff(&table.moment(1))?;
    let d2 = second.max_abs_diff(&table.moment(2))?;
    let scale = second.coeffs().iter().fold(1.0f64, |m, x| m.max(x.abs()));
    if d1 > 1e-8 || d2 > 1e-8 * scale {
        return Err(Error::Accuracy(format!(
            "count moments disagree between routes: first {d1:e}, second {d2:e}"
        )));
    }
    Ok((first, second))
}

/// `P[N(t) > n0]`, i.e. the probability that the `(n0+1)`-th event has
/// occurred by `t`. At `t = Infinite` this is `Q^(n0+1)`.
pub fn exceedance_prob(law: &WaitingLaw, n0: u64, t: ExtendedTime) -> f64 {
    match t {
        ExtendedTime::Infinite => law.defect_mass().powf((n0 + 1) as f64),
        ExtendedTime::Finite(t) => {
            if n0 >= t {
                return 0.0;
            }
            let psi = law.pmf_vector(t as usize);
            psi.conv_power(n0 + 1).sum().min(1.0)
        }
    }
}

/// Limit `P[N(inf) = n] = (1 - Q) Q^n` together with the process type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitStateLaw {
    pub probs: Vec<f64>,
    pub process_type: ProcessType,
}

/// The first `n_terms` limiting state probabilities.
pub fn limit_state_law(law: &WaitingLaw, n_terms: usize) -> LimitStateLaw {
    let q = law.defect_mass();
    let process_type = ProcessType::of_renewal(law);
    let probs = match process_type {
        ProcessType::TypeII => vec![0.0; n_terms],
        _ => (0..n_terms).map(|n| (1.0 - q) * q.powi(n as i32)).collect(),
    };
    LimitStateLaw { probs, process_type }
}

/// Discrete Mittag-Leffler sequence `E_mu(t)` with generating function
/// `(1-u)^(mu-1) / (1 + (Q/P)(1-u)^mu)`, the relaxation term of the defective
/// Sibuya process: `E N(t) = Q/P - (Q/P^2) E_mu(t)`.
pub fn discrete_mittag_leffler(mu: f64, mass: f64, horizon: usize) -> Result<CoeffSeries> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::Parameter(format!("mu = {mu} must lie in (0, 1)")));
    }
    if !(mass > 0.0 && mass < 1.0) {
        return Err(Error::Parameter(format!("mass = {mass} must lie in (0, 1)")));
    }
    let ratio = mass / (1.0 - mass);
    let denom = CoeffSeries::delta(horizon)
        .add(&CoeffSeries::binomial_series(mu, horizon).scale(ratio))?;
    CoeffSeries::binomial_series(mu - 1.0, horizon).convolve(&denom.reciprocal()?)
}
