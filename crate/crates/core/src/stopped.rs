//! The stopped process `M(t) = N(min(t, dT))`: a recurrent renewal process
//! `N` frozen at the first event `dT` of an independent, possibly defective,
//! stopping process.

use num_complex::Complex64;
use serde::Serialize;

use crate::distributions::WaitingLaw;
use crate::error::{Error, Result};
use crate::gf_series::CoeffSeries;
use crate::renewal::{count_moments_gf, state_table, survival_series, ProcessType, StateTable};

/// An inner (proper) waiting law, a stopping law and a common horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoppedSpec {
    inner: WaitingLaw,
    stop: WaitingLaw,
    horizon: usize,
}

impl StoppedSpec {
    /// The inner law must be proper. The stopping law may carry any mass in
    /// `[0, 1]`; mass zero never stops and reproduces the plain inner process.
    pub fn new(inner: WaitingLaw, stop: WaitingLaw, horizon: usize) -> Result<Self> {
        let inner_mass = inner.defect_mass();
        if (inner_mass - 1.0).abs() > 1e-12 {
            return Err(Error::Spec(format!(
                "inner waiting law must be proper, got total mass {inner_mass}"
            )));
        }
        Ok(Self { inner, stop, horizon })
    }

    pub fn inner(&self) -> &WaitingLaw {
        &self.inner
    }

    pub fn stop(&self) -> &WaitingLaw {
        &self.stop
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn with_horizon(&self, horizon: usize) -> Self {
        Self { horizon, ..self.clone() }
    }

    /// `Lambda_M = 1 - Q_S`.
    pub fn never_stop_prob(&self) -> f64 {
        never_stop_prob(&self.stop)
    }

    pub fn process_type(&self) -> ProcessType {
        ProcessType::from_lambda(self.never_stop_prob())
    }
}

/// `Lambda_M = 1 - Q_S` for a stopping law.
pub fn never_stop_prob(stop: &WaitingLaw) -> f64 {
    (1.0 - stop.defect_mass()).max(0.0)
}

/// `S(t) f(t) + sum_{r<=t} psi_S(r) f(r)`: the value of `f` at `min(t, dT)`
/// averaged over the stopping time.
fn freeze_at_stop(stop_survival: &CoeffSeries, stop_pmf: &CoeffSeries, f: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    f.iter()
        .enumerate()
        .map(|(t, &x)| {
            acc += stop_pmf.get(t) * x;
            stop_survival.get(t) * x + acc
        })
        .collect()
}

/// Table of `P_m(t) = P[M(t) = m]` for `0 <= m, t <= T`.
pub fn stopped_pmf_table(spec: &StoppedSpec) -> StateTable {
    let horizon = spec.horizon;
    let inner = state_table(&spec.inner, horizon);
    let surv = survival_series(&spec.stop, horizon);
    let pmf = spec.stop.pmf_vector(horizon);
    let rows = inner.rows().iter().map(|row| freeze_at_stop(&surv, &pmf, row)).collect();
    StateTable::from_rows(rows).expect("rows share the horizon")
}

/// `E M^order(t)` on `[0, T]` for `order` in `{1, 2}`, from the count moments
/// of the inner process.
pub fn stopped_moments(spec: &StoppedSpec, order: u32) -> Result<CoeffSeries> {
    let horizon = spec.horizon;
    let (first, second) = count_moments_gf(&spec.inner, horizon);
    let base = match order {
        1 => first,
        2 => second,
        _ => return Err(Error::Parameter(format!("moment order {order} not supported, use 1 or 2"))),
    };
    let surv = survival_series(&spec.stop, horizon);
    let pmf = spec.stop.pmf_vector(horizon);
    CoeffSeries::new(freeze_at_stop(&surv, &pmf, base.coeffs()))
}

/// `E v^M(t)` for `t` in `[0, T]`, summed from the state table.
pub fn stopped_state_poly(table: &StateTable, v: Complex64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); table.horizon() + 1];
    let mut power = Complex64::new(1.0, 0.0);
    for row in table.rows() {
        for (o, p) in out.iter_mut().zip(row) {
            *o += power * p;
        }
        power *= v;
    }
    out
}

/// Mean, second moment and variance of a limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitMoments {
    pub mean: f64,
    pub second: f64,
    pub variance: f64,
}

/// Long-time law of `M`. Moments are absent when the stopping law is
/// defective: paths that never stop carry an unbounded count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticSummary {
    /// `P_m(inf)` up to the first `m` whose remaining tail is below `1e-15`.
    pub p_inf: Vec<f64>,
    /// Exact mass of `P_m(inf)` beyond the stored entries.
    pub tail_mass: f64,
    pub moments: Option<LimitMoments>,
    pub never_stop_prob: f64,
    pub process_type: ProcessType,
}

impl AsymptoticSummary {
    /// `sum_m P_m(inf)` including the analytic tail; equals `Q_S`.
    pub fn total_mass(&self) -> f64 {
        self.p_inf.iter().sum::<f64>() + self.tail_mass
    }
}

/// Limit law of `M` when the stop is a (defective) geometric law with
/// failure probability `q` and mass `Q_S`:
/// `P_m(inf) = (Q_S/q)(1 - g) g^m - Q_S (p/q) delta_{m0}`, `g = psi_II(q)`.
pub fn geometric_stop_asymptotics(inner: &WaitingLaw, q: f64, mass_s: f64) -> Result<AsymptoticSummary> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("q = {q} must lie in (0, 1)")));
    }
    if !(0.0..=1.0).contains(&mass_s) {
        return Err(Error::Parameter(format!("stop mass {mass_s} must lie in [0, 1]")));
    }
    if (inner.defect_mass() - 1.0).abs() > 1e-12 {
        return Err(Error::Spec("inner waiting law must be proper".into()));
    }
    let p = 1.0 - q;
    let g = inner.gf(q)?;
    let scale = mass_s / q;
    let mut p_inf = Vec::new();
    let mut power = 1.0;
    // Remaining tail after index m is scale * g^(m+1).
    loop {
        let m = p_inf.len();
        let mut value = scale * (1.0 - g) * power;
        if m == 0 {
            value -= mass_s * p / q;
        }
        p_inf.push(value);
        power *= g;
        if scale * power < 1e-15 {
            break;
        }
    }
    let tail_mass = scale * power;
    let moments = (mass_s >= 1.0 - 1e-12).then(|| {
        let mean = g / (q * (1.0 - g));
        let second = mean * (1.0 + g) / (1.0 - g);
        let variance = g * (q - p * g) / (q * q * (1.0 - g).powi(2));
        LimitMoments { mean, second, variance }
    });
    let never_stop_prob = 1.0 - mass_s;
    Ok(AsymptoticSummary {
        p_inf,
        tail_mass,
        moments,
        never_stop_prob,
        process_type: ProcessType::from_lambda(never_stop_prob),
    })
}

/// Worked examples with closed-form limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "case", rename_all = "kebab-case")]
pub enum ClosedFormCase {
    /// Sibuya(`mu`) inner process, geometric stop with success probability `p`.
    BernoulliStopsSibuya { mu: f64, p: f64 },
    /// Bernoulli(`p`) inner process, geometric stop with success probability `p_stop`.
    BernoulliStopsBernoulli { p: f64, p_stop: f64 },
    /// Bernoulli(`p`) inner process stopped at `1 + Poisson(lambda)`.
    PoissonStop { p: f64, lambda: f64 },
}

/// `(E M(inf), E M^2(inf), Var M(inf))` for the worked examples.
pub fn closed_form_asymptotics(case: ClosedFormCase) -> Result<LimitMoments> {
    let unit = |name: &str, x: f64| {
        if x > 0.0 && x < 1.0 {
            Ok(())
        } else {
            Err(Error::Parameter(format!("{name} = {x} must lie in (0, 1)")))
        }
    };
    Ok(match case {
        ClosedFormCase::BernoulliStopsSibuya { mu, p } => {
            unit("mu", mu)?;
            unit("p", p)?;
            let q = 1.0 - p;
            let pm = p.powf(mu);
            LimitMoments {
                mean: (1.0 - pm) / (q * pm),
                second: (1.0 - pm) * (2.0 - pm) / (q * pm * pm),
                variance: (1.0 - pm) * (q - p + p * pm) / (q * q * pm * pm),
            }
        }
        ClosedFormCase::BernoulliStopsBernoulli { p, p_stop } => {
            unit("p", p)?;
            unit("p_stop", p_stop)?;
            let (q, q_stop) = (1.0 - p, 1.0 - p_stop);
            let s2 = p_stop * p_stop;
            LimitMoments {
                mean: p / p_stop,
                second: p * (1.0 + q_stop * (p - q)) / s2,
                variance: p * (q + q_stop * (p - q)) / s2,
            }
        }
        ClosedFormCase::PoissonStop { p, lambda } => {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::Parameter(format!("p = {p} must lie in (0, 1]")));
            }
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return Err(Error::Parameter(format!("lambda = {lambda} must be non-negative")));
            }
            let q = 1.0 - p;
            LimitMoments {
                mean: p * (lambda + 1.0),
                second: p * (p * (lambda + 1.0).powi(2) + lambda + q),
                variance: p * (lambda + q),
            }
        }
    })
}

/// Bernoulli(`p0`) inner process stopped by a defective geometric law with
/// failure probability `q` and mass `Q_S`. With probability `Lambda_M = 1 - Q_S`
/// the process is never stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DbpStopsBernoulli {
    pub p0: f64,
    pub q: f64,
    pub mass_s: f64,
}

impl DbpStopsBernoulli {
    pub fn new(p0: f64, q: f64, mass_s: f64) -> Result<Self> {
        for (name, x) in [("p0", p0), ("q", q)] {
            if !(x > 0.0 && x < 1.0) {
                return Err(Error::Parameter(format!("{name} = {x} must lie in (0, 1)")));
            }
        }
        if !(0.0..=1.0).contains(&mass_s) {
            return Err(Error::Parameter(format!("Q_S = {mass_s} must lie in [0, 1]")));
        }
        Ok(Self { p0, q, mass_s })
    }

    pub fn lambda_m(&self) -> f64 {
        1.0 - self.mass_s
    }

    fn p(&self) -> f64 {
        1.0 - self.q
    }

    /// The same process as a general [`StoppedSpec`].
    pub fn spec(&self, horizon: usize) -> Result<StoppedSpec> {
        StoppedSpec::new(
            WaitingLaw::geometric(self.p0)?,
            WaitingLaw::defective_geometric(self.mass_s, self.p())?,
            horizon,
        )
    }

    /// `Pi(v, t) = Lambda A^t + Q_S (p A + (1 - A) q^t A^t) / (1 - q A)`, `A = q0 + p0 v`.
    pub fn state_poly(&self, v: Complex64, t: u64) -> Complex64 {
        let a = Complex64::new(1.0 - self.p0, 0.0) + v * self.p0;
        let at = a.powf(t as f64);
        let at = if t == 0 { Complex64::new(1.0, 0.0) } else { at };
        let qt = self.q.powf(t as f64);
        at * self.lambda_m()
            + (a * self.p() + (Complex64::new(1.0, 0.0) - a) * at * qt) * self.mass_s
                / (Complex64::new(1.0, 0.0) - a * self.q)
    }

    /// `B(t) = (p0/p)(1 - q^t)`, the mean of the stopped branch.
    fn b(&self, t: f64) -> f64 {
        self.p0 / self.p() * (1.0 - self.q.powf(t))
    }

    /// `C(t)`, the second moment of the stopped branch.
    fn c(&self, t: f64) -> f64 {
        let (p0, q, p) = (self.p0, self.q, self.p());
        2.0 * p0 * p0 * q / (p * p) * (1.0 - q.powf(t) - p * t * q.powf(t - 1.0)) + p0 / p * (1.0 - q.powf(t))
    }

    pub fn mean(&self, t: u64) -> f64 {
        let t = t as f64;
        self.lambda_m() * self.p0 * t + self.mass_s * self.b(t)
    }

    pub fn second(&self, t: u64) -> f64 {
        let t = t as f64;
        let (p0, q0) = (self.p0, 1.0 - self.p0);
        self.lambda_m() * (p0 * p0 * t * t + p0 * q0 * t) + self.mass_s * self.c(t)
    }

    /// `Lambda [Q_S p0^2 t^2 + p0 q0 t] - 2 Lambda Q_S p0 t B + Q_S [C - Q_S B^2]`.
    pub fn variance(&self, t: u64) -> f64 {
        let tf = t as f64;
        let (p0, q0) = (self.p0, 1.0 - self.p0);
        let (lam, qs) = (self.lambda_m(), self.mass_s);
        let b = self.b(tf);
        lam * (qs * p0 * p0 * tf * tf + p0 * q0 * tf) - 2.0 * lam * qs * p0 * tf * b + qs * (self.c(tf) - qs * b * b)
    }

    /// The never-stop probability maximising `Var M(t)` at fixed `t >= 2`.
    pub fn lambda_max(&self, t: u64) -> Result<f64> {
        if t < 2 {
            return Err(Error::Domain(format!("lambda_max needs t >= 2, got {t}")));
        }
        let tf = t as f64;
        let (p0, q0) = (self.p0, 1.0 - self.p0);
        let b = self.b(tf);
        let gap = p0 * tf - b;
        Ok((p0 * p0 * tf * tf + p0 * q0 * tf - self.c(tf) + 2.0 * b * (b - p0 * tf)) / (2.0 * gap * gap))
    }

    pub fn mean_series(&self, horizon: usize) -> CoeffSeries {
        CoeffSeries::from_fn(horizon, |t| self.mean(t as u64)).expect("finite")
    }

    pub fn second_series(&self, horizon: usize) -> CoeffSeries {
        CoeffSeries::from_fn(horizon, |t| self.second(t as u64)).expect("finite")
    }

    pub fn variance_series(&self, horizon: usize) -> CoeffSeries {
        CoeffSeries::from_fn(horizon, |t| self.variance(t as u64)).expect("finite")
    }
}

/// Kernel `q^r psi(r)` of the auxiliary process `R_q`, which is `N` thinned
/// by an independent survival factor `q` per step.
pub fn auxiliary_kernel(inner: &WaitingLaw, q: f64, horizon: usize) -> CoeffSeries {
    inner.pmf_vector(horizon).dilate(q)
}

/// Law of the first event of `M` under a geometric stop: `q^(r-1) psi(r)`.
pub fn first_event_kernel(inner: &WaitingLaw, q: f64, horizon: usize) -> CoeffSeries {
    inner.pmf_vector(horizon).dilate(q).scale(1.0 / q)
}

/// `E v^R_q(t) = p + q E v^M(t)` on `[0, T]` with a proper geometric stop of
/// failure probability `q`.
pub fn auxiliary_state_poly(inner: &WaitingLaw, q: f64, v: Complex64, horizon: usize) -> Result<Vec<Complex64>> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("q = {q} must lie in (0, 1)")));
    }
    let spec = StoppedSpec::new(inner.clone(), WaitingLaw::geometric(1.0 - q)?, horizon)?;
    let poly = stopped_state_poly(&stopped_pmf_table(&spec), v);
    Ok(poly.into_iter().map(|x| x * q + (1.0 - q)).collect())
}

/// Right-hand side of the renewal equation
/// `Pi(t) = (1 - sum_{r<=t} k(r)) + v sum_{r<=t} k(r) Pi(t - r)`
/// for a sub-probability kernel `k`, evaluated on a given sequence `Pi`.
pub fn renewal_equation_rhs(kernel: &CoeffSeries, poly: &[Complex64], v: Complex64) -> Vec<Complex64> {
    let mut held = 1.0;
    (0..poly.len())
        .map(|t| {
            held -= kernel.get(t);
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 1..=t {
                acc += poly[t - r] * kernel.get(r);
            }
            acc * v + held
        })
        .collect()
}
