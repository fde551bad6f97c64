//! Waiting-time laws on the positive integers, defective or not.
//!
//! A law of total mass `Q < 1` puts the missing `1 - Q` at infinity. Samplers
//! return [`ExtendedTime::Infinite`] for that mass instead of a large integer.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::gf_series::CoeffSeries;

/// A waiting time: a positive integer or infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ExtendedTime {
    Finite(u64),
    Infinite,
}

impl ExtendedTime {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedTime::Finite(_))
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            ExtendedTime::Finite(t) => Some(t),
            ExtendedTime::Infinite => None,
        }
    }
}

impl fmt::Display for ExtendedTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedTime::Finite(t) => write!(f, "{t}"),
            ExtendedTime::Infinite => f.write_str("inf"),
        }
    }
}

/// Waiting-time distribution on `{1, 2, ...}` with total mass in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WaitingLaw {
    /// `p q^(t-1)`; the interarrival law of a Bernoulli process.
    Geometric { p: f64 },
    /// `Q p q^(t-1)`; the defective Bernoulli process.
    DefectiveGeometric { mass: f64, p: f64 },
    /// `(-1)^(t-1) C(mu, t)`, infinite mean.
    Sibuya { mu: f64 },
    DefectiveSibuya { mass: f64, mu: f64 },
    /// `1 + Poisson(lambda)`.
    ShiftedPoisson { lambda: f64 },
    /// Superposition of geometric laws with Gamma-type weight:
    /// `(t - 1 + zeta)^-gamma - (t + zeta)^-gamma`, mass `zeta^-gamma`.
    PowerLawBernstein { gamma: f64, zeta: f64 },
    /// Explicit masses for `t = 1, 2, ...`; everything else is zero.
    Tabulated { pmf: Vec<f64> },
}

/// Survival products of the Sibuya law are computed exactly up to this time;
/// beyond it the log-ratio expansion of the Gamma quotient is used.
const SIBUYA_EXACT_LIMIT: u64 = 4096;

fn check_unit(name: &str, x: f64, allow_zero: bool) -> Result<()> {
    let ok = x.is_finite() && x <= 1.0 && (x > 0.0 || (allow_zero && x == 0.0));
    if ok {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} = {x} must lie in {}0, 1]", if allow_zero { "[" } else { "(" })))
    }
}

fn check_open_unit(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} = {x} must lie in (0, 1)")))
    }
}

impl WaitingLaw {
    pub fn geometric(p: f64) -> Result<Self> {
        Self::Geometric { p }.validated()
    }

    pub fn defective_geometric(mass: f64, p: f64) -> Result<Self> {
        Self::DefectiveGeometric { mass, p }.validated()
    }

    pub fn sibuya(mu: f64) -> Result<Self> {
        Self::Sibuya { mu }.validated()
    }

    pub fn defective_sibuya(mass: f64, mu: f64) -> Result<Self> {
        Self::DefectiveSibuya { mass, mu }.validated()
    }

    pub fn shifted_poisson(lambda: f64) -> Result<Self> {
        Self::ShiftedPoisson { lambda }.validated()
    }

    pub fn power_law_bernstein(gamma: f64, zeta: f64) -> Result<Self> {
        Self::PowerLawBernstein { gamma, zeta }.validated()
    }

    pub fn tabulated(pmf: Vec<f64>) -> Result<Self> {
        Self::Tabulated { pmf }.validated()
    }

    /// Checks the parameter domain and returns the law unchanged.
    pub fn validated(self) -> Result<Self> {
        match &self {
            Self::Geometric { p } => check_unit("p", *p, false)?,
            Self::DefectiveGeometric { mass, p } => {
                check_unit("mass", *mass, true)?;
                check_unit("p", *p, false)?;
            }
            Self::Sibuya { mu } => check_open_unit("mu", *mu)?,
            Self::DefectiveSibuya { mass, mu } => {
                check_unit("mass", *mass, true)?;
                check_open_unit("mu", *mu)?;
            }
            Self::ShiftedPoisson { lambda } => {
                if !(lambda.is_finite() && *lambda > 0.0) {
                    return Err(Error::Parameter(format!("lambda = {lambda} must be positive")));
                }
            }
            Self::PowerLawBernstein { gamma, zeta } => {
                if !(gamma.is_finite() && *gamma > 0.0) {
                    return Err(Error::Parameter(format!("gamma = {gamma} must be positive")));
                }
                if !(zeta.is_finite() && *zeta >= 1.0) {
                    return Err(Error::Parameter(format!("zeta = {zeta} must be at least 1")));
                }
            }
            Self::Tabulated { pmf } => {
                if pmf.iter().any(|&x| !x.is_finite() || x < 0.0) {
                    return Err(Error::Parameter("tabulated masses must be finite and non-negative".into()));
                }
                let total: f64 = pmf.iter().sum();
                if total > 1.0 + 1e-12 {
                    return Err(Error::Parameter(format!("tabulated masses sum to {total} > 1")));
                }
            }
        }
        Ok(self)
    }

    /// Total mass `Q = sum_t psi(t)`.
    pub fn defect_mass(&self) -> f64 {
        match self {
            Self::Geometric { .. } | Self::Sibuya { .. } | Self::ShiftedPoisson { .. } => 1.0,
            Self::DefectiveGeometric { mass, .. } | Self::DefectiveSibuya { mass, .. } => *mass,
            Self::PowerLawBernstein { gamma, zeta } => zeta.powf(-gamma),
            Self::Tabulated { pmf } => pmf.iter().sum(),
        }
    }

    pub fn is_defective(&self) -> bool {
        self.defect_mass() < 1.0 - 1e-12
    }

    /// `psi(t)`; zero at `t = 0`.
    pub fn pmf(&self, t: u64) -> f64 {
        if t == 0 {
            return 0.0;
        }
        match self {
            Self::Geometric { p } => p * (1.0 - p).powf((t - 1) as f64),
            Self::DefectiveGeometric { mass, p } => mass * p * (1.0 - p).powf((t - 1) as f64),
            Self::Sibuya { mu } => mu / t as f64 * sibuya_survival(*mu, t - 1),
            Self::DefectiveSibuya { mass, mu } => mass * mu / t as f64 * sibuya_survival(*mu, t - 1),
            Self::ShiftedPoisson { lambda } => {
                let k = (t - 1) as f64;
                (k * lambda.ln() - lambda - ln_gamma(k + 1.0)).exp()
            }
            Self::PowerLawBernstein { gamma, zeta } => {
                let t = t as f64;
                (t - 1.0 + zeta).powf(-gamma) - (t + zeta).powf(-gamma)
            }
            Self::Tabulated { pmf } => pmf.get((t - 1) as usize).copied().unwrap_or(0.0),
        }
    }

    /// `[0, psi(1), ..., psi(horizon)]`. The tail beyond the horizon is not
    /// renormalised into the vector.
    pub fn pmf_vector(&self, horizon: usize) -> CoeffSeries {
        let mut v = vec![0.0; horizon + 1];
        match self {
            Self::Geometric { .. } | Self::DefectiveGeometric { .. } => {
                let (mass, p) = match self {
                    Self::Geometric { p } => (1.0, *p),
                    Self::DefectiveGeometric { mass, p } => (*mass, *p),
                    _ => unreachable!(),
                };
                let mut w = mass * p;
                for x in v.iter_mut().skip(1) {
                    *x = w;
                    w *= 1.0 - p;
                }
            }
            Self::Sibuya { mu } | Self::DefectiveSibuya { mu, .. } => {
                let mass = self.defect_mass();
                let mut c = *mu;
                for (t, x) in v.iter_mut().enumerate().skip(1) {
                    if t > 1 {
                        c *= (t as f64 - 1.0 - mu) / t as f64;
                    }
                    *x = mass * c;
                }
            }
            _ => {
                for (t, x) in v.iter_mut().enumerate().skip(1) {
                    *x = self.pmf(t as u64);
                }
            }
        }
        CoeffSeries::new(v).expect("waiting-time masses are finite")
    }

    /// `P[dt > t] = 1 - sum_{r<=t} psi(r)`, tending to `1 - Q`.
    pub fn survival(&self, t: u64) -> f64 {
        if t == 0 {
            return 1.0;
        }
        match self {
            Self::Geometric { p } => (1.0 - p).powf(t as f64),
            Self::DefectiveGeometric { mass, p } => (1.0 - mass) + mass * (1.0 - p).powf(t as f64),
            Self::Sibuya { mu } => sibuya_survival(*mu, t),
            Self::DefectiveSibuya { mass, mu } => (1.0 - mass) + mass * sibuya_survival(*mu, t),
            Self::ShiftedPoisson { lambda } => gamma_lr(t as f64, *lambda),
            Self::PowerLawBernstein { gamma, zeta } => {
                1.0 - zeta.powf(-gamma) + (t as f64 + zeta).powf(-gamma)
            }
            Self::Tabulated { pmf } => {
                1.0 - pmf.iter().take(t.min(pmf.len() as u64) as usize).sum::<f64>()
            }
        }
    }

    /// Mean of the law when it is non-defective and finite.
    pub fn mean(&self) -> Option<f64> {
        match self {
            Self::Geometric { p } => Some(1.0 / p),
            Self::ShiftedPoisson { lambda } => Some(1.0 + lambda),
            Self::PowerLawBernstein { gamma, zeta } if *zeta == 1.0 && *gamma > 1.0 => {
                // sum_{t>=0} P[dt > t] = sum_{t>=0} (t + 1)^-gamma
                Some(hurwitz_zeta(*gamma, 1.0))
            }
            Self::Tabulated { pmf } if !self.is_defective() => {
                Some(pmf.iter().enumerate().map(|(i, w)| (i + 1) as f64 * w).sum())
            }
            _ => None,
        }
    }

    /// Generating function `sum_t psi(t) u^t` for `u` in `[0, 1]`; equals `Q` at `u = 1`.
    pub fn gf(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain(format!("generating function argument u = {u} outside [0, 1]")));
        }
        Ok(match self {
            Self::Geometric { p } => p * u / (1.0 - (1.0 - p) * u),
            Self::DefectiveGeometric { mass, p } => mass * p * u / (1.0 - (1.0 - p) * u),
            Self::Sibuya { mu } => 1.0 - (1.0 - u).powf(*mu),
            Self::DefectiveSibuya { mass, mu } => mass * (1.0 - (1.0 - u).powf(*mu)),
            Self::ShiftedPoisson { lambda } => u * (lambda * (u - 1.0)).exp(),
            Self::PowerLawBernstein { gamma, zeta } => {
                if u == 1.0 {
                    zeta.powf(-gamma)
                } else {
                    // Tail after t is at most u^(t+1) (t + zeta)^-gamma.
                    let mut acc = 0.0;
                    let mut w = 1.0;
                    let mut t: u64 = 0;
                    loop {
                        t += 1;
                        w *= u;
                        acc += w * self.pmf(t);
                        if w * u * (t as f64 + zeta).powf(-gamma) < 1e-17 {
                            break;
                        }
                    }
                    acc
                }
            }
            Self::Tabulated { pmf } => {
                pmf.iter().rev().fold(0.0, |acc, &w| (acc + w) * u)
            }
        })
    }

    /// Draws a waiting time; the defect `1 - Q` maps to `Infinite`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ExtendedTime {
        let mass = self.defect_mass();
        if mass < 1.0 && rng.random::<f64>() >= mass {
            return ExtendedTime::Infinite;
        }
        // v in (0, 1]
        let v = 1.0 - rng.random::<f64>();
        let t = match self {
            Self::Geometric { p } | Self::DefectiveGeometric { p, .. } => {
                if *p >= 1.0 {
                    1.0
                } else {
                    (v.ln() / (1.0 - p).ln()).ceil()
                }
            }
            Self::Sibuya { mu } | Self::DefectiveSibuya { mu, .. } => sibuya_inverse_survival(*mu, v),
            Self::ShiftedPoisson { lambda } => {
                let poisson = Poisson::new(*lambda).expect("validated lambda");
                return ExtendedTime::Finite(1 + poisson.sample(rng) as u64);
            }
            Self::PowerLawBernstein { gamma, zeta } => {
                // normalised survival (zeta / (t + zeta))^gamma
                (zeta * (v.powf(-1.0 / gamma) - 1.0)).ceil()
            }
            Self::Tabulated { pmf } => {
                let target = (1.0 - v) * mass;
                let mut acc = 0.0;
                let mut pick = pmf.len();
                for (i, w) in pmf.iter().enumerate() {
                    acc += w;
                    if target < acc {
                        pick = i + 1;
                        break;
                    }
                }
                // guard against rounding at the top of the table
                let last = pmf.iter().rposition(|&w| w > 0.0).map_or(1, |i| i + 1);
                pick.min(last) as f64
            }
        };
        ExtendedTime::Finite(saturating_time(t))
    }

    /// Short human-readable name of the family.
    pub fn family(&self) -> &'static str {
        match self {
            Self::Geometric { .. } => "geometric",
            Self::DefectiveGeometric { .. } => "defective-geometric",
            Self::Sibuya { .. } => "sibuya",
            Self::DefectiveSibuya { .. } => "defective-sibuya",
            Self::ShiftedPoisson { .. } => "poisson",
            Self::PowerLawBernstein { .. } => "bernstein",
            Self::Tabulated { .. } => "tabulated",
        }
    }
}

/// Times beyond `u64::MAX` saturate; they exceed every horizon anyway.
fn saturating_time(t: f64) -> u64 {
    if t.is_nan() || t <= 1.0 {
        1
    } else if t >= u64::MAX as f64 {
        u64::MAX
    } else {
        t as u64
    }
}

/// `P[dt > t] = prod_{k<=t} (1 - mu/k)` for the Sibuya law.
pub(crate) fn sibuya_survival(mu: f64, t: u64) -> f64 {
    let exact = t.min(SIBUYA_EXACT_LIMIT);
    let mut s = 1.0;
    for k in 1..=exact {
        s *= 1.0 - mu / k as f64;
    }
    if t > exact {
        s *= sibuya_log_ratio(mu, exact as f64, t as f64).exp();
    }
    s
}

/// `ln S(t) - ln S(t0)` from `ln Gamma(t+1-mu)/Gamma(t+1) ~ -mu ln t - mu(1-mu)/(2t)`.
fn sibuya_log_ratio(mu: f64, t0: f64, t: f64) -> f64 {
    -mu * (t / t0).ln() - 0.5 * mu * (1.0 - mu) * (1.0 / t - 1.0 / t0)
}

/// Smallest `t >= 1` with `S(t) <= v`.
fn sibuya_inverse_survival(mu: f64, v: f64) -> f64 {
    let mut s = 1.0;
    for k in 1..=SIBUYA_EXACT_LIMIT {
        s *= 1.0 - mu / k as f64;
        if s <= v {
            return k as f64;
        }
    }
    // Solve ln(v / S(t0)) = log_ratio(t) on t > t0, then step to the integer boundary.
    let t0 = SIBUYA_EXACT_LIMIT as f64;
    let target = (v / s).ln();
    let mut t = t0 * (-target / mu).exp();
    for _ in 0..4 {
        let f = sibuya_log_ratio(mu, t0, t) - target;
        let df = -mu / t + 0.5 * mu * (1.0 - mu) / (t * t);
        t -= f / df;
        if !t.is_finite() || t > 1.8e19 {
            return f64::MAX;
        }
    }
    let mut k = t.ceil().max(t0 + 1.0);
    if k < 1e15 {
        while k > t0 + 1.0 && sibuya_log_ratio(mu, t0, k - 1.0) <= target {
            k -= 1.0;
        }
        while sibuya_log_ratio(mu, t0, k) > target {
            k += 1.0;
        }
    }
    k
}

/// Hurwitz zeta `sum_{k>=0} (k + a)^-s` for `s > 1` by Euler-Maclaurin.
fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    let n = 64;
    let mut acc: f64 = (0..n).map(|k| (k as f64 + a).powf(-s)).sum();
    let x = n as f64 + a;
    acc += x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // Bernoulli corrections B2/2!, B4/4!, B6/6!
    let mut rising = s;
    acc += rising * x.powf(-s - 1.0) / 12.0;
    rising *= (s + 1.0) * (s + 2.0);
    acc -= rising * x.powf(-s - 3.0) / 720.0;
    rising *= (s + 3.0) * (s + 4.0);
    acc += rising * x.powf(-s - 5.0) / 30240.0;
    acc
}

/// Outcome of a discrete complete-monotonicity check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DcmReport {
    pub passed: bool,
    /// Earliest `(n, t)` with `(-1)^n D^n f(t) < -1e-12`, ordered by `n` then `t`.
    pub first_violation: Option<(usize, usize)>,
}

/// Checks `(-1)^n D^n f(t) >= -1e-12` for `n <= n_max` and `t` in `[n, T]`,
/// where `D f(t) = f(t) - f(t - 1)`.
pub fn dcm_verify(f: &CoeffSeries, n_max: usize) -> DcmReport {
    let horizon = f.horizon();
    let mut diff = f.coeffs().to_vec();
    for n in 0..=n_max.min(horizon) {
        if n > 0 {
            for t in (n..=horizon).rev() {
                diff[t] -= diff[t - 1];
            }
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        if let Some(t) = (n..=horizon).find(|&t| sign * diff[t] < -1e-12) {
            return DcmReport { passed: false, first_violation: Some((n, t)) };
        }
    }
    DcmReport { passed: true, first_violation: None }
}

impl fmt::Display for WaitingLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Geometric { p } => write!(f, "geometric:p={p}"),
            Self::DefectiveGeometric { mass, p } => write!(f, "defective-geometric:mass={mass},p={p}"),
            Self::Sibuya { mu } => write!(f, "sibuya:mu={mu}"),
            Self::DefectiveSibuya { mass, mu } => write!(f, "defective-sibuya:mass={mass},mu={mu}"),
            Self::ShiftedPoisson { lambda } => write!(f, "poisson:lambda={lambda}"),
            Self::PowerLawBernstein { gamma, zeta } => write!(f, "bernstein:gamma={gamma},zeta={zeta}"),
            Self::Tabulated { pmf } => {
                let cells: Vec<String> = pmf.iter().map(|w| w.to_string()).collect();
                write!(f, "tabulated:pmf={}", cells.join(";"))
            }
        }
    }
}

/// Parses `kind:key=value,key=value`, e.g. `geometric:p=0.7` or
/// `defective-sibuya:mass=0.9,mu=0.4`. Unknown keys are rejected.
/// Splits `kind:key=value,key=value` into the kind and its parameters,
/// rejecting malformed items and duplicate keys.
pub(crate) fn split_spec(input: &str) -> Result<(String, Vec<(String, String)>)> {
    let fail = |reason: String| Error::Parse { input: input.to_string(), reason };
    let (kind, rest) = input.trim().split_once(':').unwrap_or((input.trim(), ""));
    let mut params: Vec<(String, String)> = Vec::new();
    for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item.split_once('=').ok_or_else(|| fail(format!("`{item}` is not key=value")))?;
        if params.iter().any(|(seen, _)| seen == k.trim()) {
            return Err(fail(format!("duplicate key `{}`", k.trim())));
        }
        params.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok((kind.trim().to_string(), params))
}

/// Looks up a numeric parameter produced by [`split_spec`], rejecting keys
/// outside `allowed`.
pub(crate) fn spec_number(input: &str, params: &[(String, String)], key: &str) -> Result<f64> {
    let fail = |reason: String| Error::Parse { input: input.to_string(), reason };
    let raw = params
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| fail(format!("missing key `{key}`")))?;
    raw.parse::<f64>().map_err(|_| fail(format!("`{key}={raw}` is not a number")))
}

/// Rejects parameter keys not in `allowed`.
pub(crate) fn spec_keys(input: &str, kind: &str, params: &[(String, String)], allowed: &[&str]) -> Result<()> {
    match params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
        Some((k, _)) => Err(Error::Parse { input: input.to_string(), reason: format!("unknown key `{k}` for `{kind}`") }),
        None => Ok(()),
    }
}

impl FromStr for WaitingLaw {
    type Err = Error;

    fn from_str(input: &str) -> Result<Self> {
        let fail = |reason: String| Error::Parse { input: input.to_string(), reason };
        let (kind, params) = split_spec(input)?;
        let kind = kind.as_str();
        let allowed: &[&str] = match kind {
            "geometric" | "bernoulli" => &["p"],
            "defective-geometric" | "dbp" => &["mass", "p"],
            "sibuya" => &["mu"],
            "defective-sibuya" | "dsp" => &["mass", "mu"],
            "poisson" | "shifted-poisson" => &["lambda"],
            "bernstein" | "power-law" => &["gamma", "zeta"],
            "tabulated" => &["pmf"],
            other => return Err(fail(format!("unknown law kind `{other}`"))),
        };
        spec_keys(input, kind, &params, allowed)?;
        let get = |key: &str| spec_number(input, &params, key);
        let law = match kind {
            "geometric" | "bernoulli" => Self::Geometric { p: get("p")? },
            "defective-geometric" | "dbp" => Self::DefectiveGeometric { mass: get("mass")?, p: get("p")? },
            "sibuya" => Self::Sibuya { mu: get("mu")? },
            "defective-sibuya" | "dsp" => Self::DefectiveSibuya { mass: get("mass")?, mu: get("mu")? },
            "poisson" | "shifted-poisson" => Self::ShiftedPoisson { lambda: get("lambda")? },
            "bernstein" | "power-law" => Self::PowerLawBernstein { gamma: get("gamma")?, zeta: get("zeta")? },
            _ => {
                let raw = params
                    .iter()
                    .find(|(k, _)| k == "pmf")
                    .map(|(_, v)| v.clone())
                    .ok_or_else(|| fail("missing key `pmf`".into()))?;
                let pmf = raw
                    .split(';')
                    .map(|x| x.trim().parse::<f64>().map_err(|_| fail(format!("`{x}` is not a number"))))
                    .collect::<Result<Vec<_>>>()?;
                Self::Tabulated { pmf }
            }
        };
        law.validated().map_err(|e| fail(e.to_string()))
    }
}
