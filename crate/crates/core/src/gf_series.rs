//! Truncated power series on a fixed horizon.
//!
//! A [`CoeffSeries`] holds the coefficients `c[0..=T]` of a generating
//! function `sum_t c[t] u^t`. Every generating-function identity used by the
//! other modules is evaluated coefficient-wise on this type, so the same
//! container carries probability mass functions in time, moment sequences and
//! the expansions of rational generating functions.

use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance used when a series is checked as a (sub-)probability sequence.
pub const PROB_EPS: f64 = 1e-12;

/// Coefficients `c[0..=horizon]` of a truncated power series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoeffSeries {
    coeffs: Vec<f64>,
}

impl CoeffSeries {
    /// Builds a series from its coefficients. The horizon is `len - 1`.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Parameter("a series needs at least one coefficient".into()));
        }
        if let Some(index) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { coeffs })
    }

    /// Builds a series from `f(0), ..., f(horizon)`.
    pub fn from_fn(horizon: usize, f: impl FnMut(usize) -> f64) -> Result<Self> {
        Self::new((0..=horizon).map(f).collect())
    }

    pub fn zeros(horizon: usize) -> Self {
        Self { coeffs: vec![0.0; horizon + 1] }
    }

    /// The unit of convolution, `delta_{t,0}`.
    pub fn delta(horizon: usize) -> Self {
        Self::monomial(horizon, 0, 1.0)
    }

    /// `value * u^power`, truncated to the horizon.
    pub fn monomial(horizon: usize, power: usize, value: f64) -> Self {
        let mut s = Self::zeros(horizon);
        if power <= horizon {
            s.coeffs[power] = value;
        }
        s
    }

    pub fn horizon(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Coefficient at `t`; zero beyond the horizon.
    pub fn get(&self, t: usize) -> f64 {
        self.coeffs.get(t).copied().unwrap_or(0.0)
    }

    pub fn last(&self) -> f64 {
        self.coeffs[self.coeffs.len() - 1]
    }

    fn check_horizon(&self, other: &Self) -> Result<()> {
        if self.horizon() != other.horizon() {
            return Err(Error::HorizonMismatch { left: self.horizon(), right: other.horizon() });
        }
        Ok(())
    }

    /// Causal convolution `c[t] = sum_{r<=t} a[r] b[t-r]`.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        self.check_horizon(other)?;
        Ok(self.convolve_unchecked(other))
    }

    fn convolve_unchecked(&self, other: &Self) -> Self {
        let n = self.coeffs.len();
        let a = &self.coeffs;
        let b = &other.coeffs;
        // Skip leading zeros; convolution powers of waiting-time laws vanish below n.
        let a0 = a.iter().position(|&x| x != 0.0).unwrap_or(n);
        let b0 = b.iter().position(|&x| x != 0.0).unwrap_or(n);
        let mut out = vec![0.0; n];
        for t in (a0 + b0)..n {
            let mut acc = 0.0;
            for r in a0..=(t - b0) {
                acc += a[r] * b[t - r];
            }
            out[t] = acc;
        }
        Self { coeffs: out }
    }

    /// `n`-fold convolution power by repeated squaring; `n = 0` gives `delta`.
    pub fn conv_power(&self, n: u64) -> Self {
        let mut result = Self::delta(self.horizon());
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                result = result.convolve_unchecked(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.convolve_unchecked(&base);
            }
        }
        result
    }

    /// Multiplicative inverse `b` with `a * b = delta` on the horizon.
    pub fn reciprocal(&self) -> Result<Self> {
        let a = &self.coeffs;
        if a[0] == 0.0 {
            return Err(Error::SingularSeries);
        }
        let n = a.len();
        let mut b = vec![0.0; n];
        b[0] = 1.0 / a[0];
        for t in 1..n {
            let mut acc = 0.0;
            for r in 1..=t {
                acc += a[r] * b[t - r];
            }
            b[t] = -acc / a[0];
        }
        Self::new(b)
    }

    /// Coefficients of `(1 - u)^alpha`: `c[t] = c[t-1] (t - 1 - alpha) / t`.
    pub fn binomial_series(alpha: f64, horizon: usize) -> Self {
        let mut c = vec![0.0; horizon + 1];
        c[0] = 1.0;
        for t in 1..=horizon {
            c[t] = c[t - 1] * (t as f64 - 1.0 - alpha) / t as f64;
        }
        Self { coeffs: c }
    }

    /// Running sums, i.e. multiplication by `1 / (1 - u)`.
    pub fn partial_sums(&self) -> Self {
        let mut acc = 0.0;
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                acc += c;
                acc
            })
            .collect();
        Self { coeffs }
    }

    /// `c[t] * base^t`, the series of `f(base * u)`.
    pub fn dilate(&self, base: f64) -> Self {
        let mut w = 1.0;
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                let v = c * w;
                w *= base;
                v
            })
            .collect();
        Self { coeffs }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Coefficient-wise product (not a convolution).
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|c| c * factor)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|&c| f(c)).collect() }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_horizon(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { coeffs })
    }

    /// `delta - self`, used for `1 - psi(u)`.
    pub fn one_minus(&self) -> Self {
        let mut s = self.scale(-1.0);
        s.coeffs[0] += 1.0;
        s
    }

    /// Horner evaluation of the truncated polynomial.
    pub fn eval(&self, u: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    pub fn sum(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    /// Largest absolute coefficient difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_horizon(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Checks the sub-probability invariant: entries `>= -eps`, total `<= 1 + eps`.
    pub fn is_subprobability(&self, eps: f64) -> bool {
        self.coeffs.iter().all(|&c| c >= -eps) && self.sum() <= 1.0 + eps
    }

    /// Restricts or zero-extends to a new horizon.
    pub fn with_horizon(&self, horizon: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(horizon + 1, 0.0);
        Self { coeffs }
    }
}
