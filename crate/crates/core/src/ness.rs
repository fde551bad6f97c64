//! Infinite-time propagators of stopped walks: exact lattice values via the
//! discrete Fourier transform, and the continuous one-dimensional limits
//! (one-sided exponential, Laplace, and mixtures of stable densities).

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::distributions::{split_spec, spec_keys, spec_number, ExtendedTime, WaitingLaw};
use crate::error::{Error, Result};
use crate::lattice_walk::{PropagatorGrid, StepLaw};
use crate::quadrature::{integrate, integrate_to_infinity, Tolerance};

/// Fourier points per axis for the lattice steady state.
pub const NESS_POINTS_1D: usize = 1 << 12;
pub const NESS_POINTS_2D: usize = 1 << 9;

/// Steady state `P(x, inf) = P_q(x)/q - (p/q) delta_{x,0}` of a walk whose
/// proper inner process is stopped geometrically with failure probability
/// `q`. `P_q` is the inverse transform of `(1 - g) / (1 - W(phi) g)` with
/// `g = psi_II(q)`, sampled on a periodic grid and checked against the grid of
/// half the size.
pub fn lattice_ness(step: &StepLaw, inner: &WaitingLaw, q: f64, half_width: usize) -> Result<PropagatorGrid> {
    let points = match step.dim() {
        1 => NESS_POINTS_1D,
        2 => NESS_POINTS_2D,
        d => return Err(Error::Parameter(format!("lattice steady state supports d <= 2, got {d}"))),
    };
    lattice_ness_with_points(step, inner, q, half_width, points)
}

/// [`lattice_ness`] with an explicit number of Fourier points per axis.
pub fn lattice_ness_with_points(
    step: &StepLaw,
    inner: &WaitingLaw,
    q: f64,
    half_width: usize,
    points: usize,
) -> Result<PropagatorGrid> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("q = {q} must lie in (0, 1)")));
    }
    if (inner.defect_mass() - 1.0).abs() > 1e-12 {
        return Err(Error::Spec("inner waiting law must be proper".into()));
    }
    if step.dim() > 2 {
        return Err(Error::Parameter(format!("lattice steady state supports d <= 2, got {}", step.dim())));
    }
    if 4 * half_width + 2 > points {
        return Err(Error::Parameter(format!(
            "half-width {half_width} too large for {points} Fourier points per axis"
        )));
    }
    let g = inner.gf(q)?;
    let fine = periodic_values(step, g, points, half_width);
    let coarse = periodic_values(step, g, points / 2, half_width);
    let peak = fine.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let change = fine.iter().zip(&coarse).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if change > 1e-6 * peak {
        return Err(Error::Accuracy(format!(
            "steady state changed by {:.3e} (relative) when halving the Fourier grid; the walk spreads too far",
            change / peak
        )));
    }
    let p = 1.0 - q;
    let origin = fine.len() / 2;
    let mut values: Vec<f64> = fine.iter().map(|v| v / q).collect();
    values[origin] -= p / q;
    let values = values.into_iter().map(|v| v.max(0.0)).collect();
    Ok(PropagatorGrid::from_values(step.dim(), half_width, values, ExtendedTime::Infinite, step.embedding()))
}

/// `P_q(x)` on the box `[-L, L]^d` from an `n`-point periodic transform per axis.
fn periodic_values(step: &StepLaw, g: f64, n: usize, half_width: usize) -> Vec<f64> {
    let dim = step.dim();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_inverse(n);
    let angle = |j: usize| 2.0 * PI * j as f64 / n as f64;
    let kernel = |phi: &[f64]| {
        let w = step.char_fn(phi);
        Complex64::new(1.0 - g, 0.0) / (Complex64::new(1.0, 0.0) - w * g)
    };
    let side = 2 * half_width + 1;
    let wrap = |x: i64| x.rem_euclid(n as i64) as usize;
    let l = half_width as i64;
    if dim == 1 {
        let mut buf: Vec<Complex64> = (0..n).map(|j| kernel(&[angle(j)])).collect();
        fft.process(&mut buf);
        (0..side as i64).map(|i| buf[wrap(i - l)].re / n as f64).collect()
    } else {
        // rows indexed by the second frequency, columns by the first
        let mut buf: Vec<Complex64> = Vec::with_capacity(n * n);
        for j2 in 0..n {
            for j1 in 0..n {
                buf.push(kernel(&[angle(j1), angle(j2)]));
            }
        }
        for row in buf.chunks_mut(n) {
            fft.process(row);
        }
        let mut column = vec![Complex64::new(0.0, 0.0); n];
        for c in 0..n {
            for r in 0..n {
                column[r] = buf[r * n + c];
            }
            fft.process(&mut column);
            for r in 0..n {
                buf[r * n + c] = column[r];
            }
        }
        let norm = (n * n) as f64;
        let mut out = Vec::with_capacity(side * side);
        for x2 in -l..=l {
            for x1 in -l..=l {
                out.push(buf[wrap(x2) * n + wrap(x1)].re / norm);
            }
        }
        out
    }
}

/// Mean stopped count `lambda = g / (q (1 - g))`, `g = psi_II(q)`: the
/// length scale of the steady state (`x / lambda` for biased walks,
/// `x / sqrt(lambda)` for unbiased ones).
pub fn rescaling_parameter(inner: &WaitingLaw, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("q = {q} must lie in (0, 1)")));
    }
    let g = inner.gf(q)?;
    Ok(g / (q * (1.0 - g)))
}

fn check_stable(alpha: f64, theta: f64) -> Result<()> {
    let ok = (theta == 0.0 && alpha > 0.0 && alpha <= 2.0) || (theta == 1.0 && alpha > 0.0 && alpha < 1.0);
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "stable parameters (alpha = {alpha}, theta = {theta}) not supported: use theta = 0 with alpha in (0, 2] or theta = 1 with alpha in (0, 1)"
        )))
    }
}

/// Stable density `L(y) = (1/2 pi) int exp(i k y - (i^theta k)^alpha) dk`,
/// `(i^theta k)^alpha = |k|^alpha exp(i (pi/2) sgn(k) alpha theta)`.
///
/// Supported: `theta = 0` with `alpha` in `(0, 2]` (symmetric) and `theta = 1`
/// with `alpha` in `(0, 1)` (supported on `y > 0`).
pub fn stable_density(alpha: f64, theta: f64, y: f64) -> Result<f64> {
    check_stable(alpha, theta)?;
    if !y.is_finite() {
        return Err(Error::Domain(format!("y = {y} must be finite")));
    }
    if theta == 1.0 && y <= 0.0 {
        return Ok(0.0);
    }
    let y = y.abs();
    if y == 0.0 {
        return Ok(gamma(1.0 + 1.0 / alpha) / PI);
    }
    if alpha < 2.0 && y.powf(alpha) >= 200.0 {
        return Ok(stable_tail_series(alpha, theta, y));
    }
    stable_fourier(alpha, theta, y)
}

/// Convergent (`alpha < 1`) or asymptotic series for large `y > 0`:
/// `(1/pi) sum_n (-1)^(n+1) Gamma(alpha n + 1)/n! sin(pi alpha n (1+theta)/2) y^(-alpha n - 1)`.
fn stable_tail_series(alpha: f64, theta: f64, y: f64) -> f64 {
    let mut sum = 0.0;
    let ln_y = y.ln();
    let mut ln_fact = 0.0;
    for n in 1..40 {
        let nf = n as f64;
        ln_fact += nf.ln();
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        let magnitude = (statrs::function::gamma::ln_gamma(alpha * nf + 1.0) - ln_fact - (alpha * nf + 1.0) * ln_y).exp();
        let term = sign * magnitude * (PI * alpha * nf * (1.0 + theta) / 2.0).sin();
        sum += term;
        if magnitude < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / PI
}

/// Numerical inversion along the ray `k = r e^{i beta}`, on which both the
/// oscillating factor and the stable factor decay.
fn stable_fourier(alpha: f64, theta: f64, y: f64) -> Result<f64> {
    let phase = FRAC_PI_2 * alpha * theta;
    let beta_max = FRAC_PI_2 / alpha - FRAC_PI_2 * theta;
    let beta = if beta_max > FRAC_PI_2 { FRAC_PI_2 } else { 0.5 * beta_max };
    let rot = Complex64::from_polar(1.0, beta);
    let c = Complex64::from_polar(1.0, phase + alpha * beta);
    let decay = |r: f64| r * y * beta.sin() + r.powf(alpha) * c.re;
    let mut cutoff = 1.0;
    while decay(cutoff) < 45.0 {
        cutoff *= 2.0;
    }
    let integrand = |r: f64| (rot * (Complex64::i() * rot * (r * y) - c * r.powf(alpha)).exp()).re;
    let tol = Tolerance { abs: 1e-15, rel: 1e-12, max_intervals: 4000 };
    let value = if alpha < 1.0 {
        // r = w^(1/alpha) removes the cusp of r^alpha at the origin
        let inv = 1.0 / alpha;
        integrate(|w| integrand(w.powf(inv)) * inv * w.powf(inv - 1.0), 0.0, cutoff.powf(alpha), tol)?
    } else {
        integrate(integrand, 0.0, cutoff, tol)?
    };
    Ok(value / PI)
}

/// Continuous one-dimensional steady-state laws in the rescaled position `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NessKind {
    /// `(1/|A|) Theta(y/A) exp(-y/A)`.
    OneSidedExp { a: f64 },
    /// `exp(-|y| sqrt(2/B)) / sqrt(2B)`.
    Laplace { b: f64 },
    /// `int_0^inf exp(-tau) tau^(-1/alpha) L(y tau^(-1/alpha)) dtau` with
    /// `L` the stable density rescaled by `scale`. `alpha = 1, theta = 1`
    /// stands for the degenerate law concentrated at `y = scale`.
    StableMixture { alpha: f64, theta: f64, scale: f64 },
}

impl NessKind {
    pub fn validated(self) -> Result<Self> {
        match self {
            NessKind::OneSidedExp { a } if !(a.is_finite() && a != 0.0) => {
                Err(Error::Parameter(format!("A = {a} must be finite and non-zero")))
            }
            NessKind::Laplace { b } if !(b.is_finite() && b > 0.0) => {
                Err(Error::Parameter(format!("B = {b} must be positive")))
            }
            NessKind::StableMixture { alpha, theta, scale } => {
                if !(scale.is_finite() && scale > 0.0) {
                    return Err(Error::Parameter(format!("scale = {scale} must be positive")));
                }
                if !(alpha == 1.0 && theta == 1.0) {
                    check_stable(alpha, theta)?;
                }
                Ok(self)
            }
            _ => Ok(self),
        }
    }

    /// Density at `y`. The symmetric mixture with `alpha <= 1` diverges at the
    /// origin and returns infinity there.
    pub fn density(&self, y: f64) -> Result<f64> {
        self.validated()?;
        Ok(match *self {
            NessKind::OneSidedExp { a } => {
                if y / a >= 0.0 {
                    (-y / a).exp() / a.abs()
                } else {
                    0.0
                }
            }
            NessKind::Laplace { b } => (-y.abs() * (2.0 / b).sqrt()).exp() / (2.0 * b).sqrt(),
            NessKind::StableMixture { alpha, theta, scale } => stable_mixture(alpha, theta, y / scale)? / scale,
        })
    }

    /// Distribution function for the closed-form kinds.
    pub fn cdf(&self, y: f64) -> Result<f64> {
        self.validated()?;
        match *self {
            NessKind::OneSidedExp { a } => Ok(if a > 0.0 {
                if y <= 0.0 { 0.0 } else { 1.0 - (-y / a).exp() }
            } else if y >= 0.0 {
                1.0
            } else {
                (-y / a).exp()
            }),
            NessKind::Laplace { b } => {
                let k = (2.0 / b).sqrt();
                Ok(if y < 0.0 { 0.5 * (k * y).exp() } else { 1.0 - 0.5 * (-k * y).exp() })
            }
            NessKind::StableMixture { .. } => {
                Err(Error::Domain("no closed-form distribution function for stable mixtures".into()))
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            NessKind::OneSidedExp { a } => format!("one-sided-exp(A={a})"),
            NessKind::Laplace { b } => format!("laplace(B={b})"),
            NessKind::StableMixture { alpha, theta, scale } => {
                format!("stable-mixture(alpha={alpha},theta={theta},scale={scale})")
            }
        }
    }
}

/// `one-sided-exp:a=<A>`, `laplace:b=<B>` or
/// `stable-mixture:alpha=<alpha>,theta=<theta>,scale=<scale>`.
impl std::str::FromStr for NessKind {
    type Err = Error;

    fn from_str(input: &str) -> Result<Self> {
        let (kind, params) = split_spec(input)?;
        let get = |key: &str| spec_number(input, &params, key);
        let parsed = match kind.as_str() {
            "one-sided-exp" => {
                spec_keys(input, &kind, &params, &["a"])?;
                NessKind::OneSidedExp { a: get("a")? }
            }
            "laplace" => {
                spec_keys(input, &kind, &params, &["b"])?;
                NessKind::Laplace { b: get("b")? }
            }
            "stable-mixture" => {
                spec_keys(input, &kind, &params, &["alpha", "theta", "scale"])?;
                NessKind::StableMixture { alpha: get("alpha")?, theta: get("theta")?, scale: get("scale")? }
            }
            other => {
                return Err(Error::Parse { input: input.to_string(), reason: format!("unknown steady-state kind `{other}`") })
            }
        };
        parsed.validated().map_err(|e| Error::Parse { input: input.to_string(), reason: e.to_string() })
    }
}

/// Unit-scale mixture. Substituting `z = |y| tau^(-1/alpha)` gives
/// `alpha |y|^(alpha-1) int exp(-(|y|/z)^alpha) z^(-alpha) L(z) dz`, whose
/// weight stays bounded where `L` is evaluated.
fn stable_mixture(alpha: f64, theta: f64, y: f64) -> Result<f64> {
    if alpha == 1.0 && theta == 1.0 {
        return Ok(if y >= 0.0 { (-y).exp() } else { 0.0 });
    }
    if theta == 1.0 && y <= 0.0 {
        return Ok(0.0);
    }
    let z = y.abs();
    if z == 0.0 {
        return Ok(if alpha > 1.0 { stable_density(alpha, theta, 0.0)? * gamma(1.0 - 1.0 / alpha) } else { f64::INFINITY });
    }
    let tol = Tolerance { abs: 1e-13, rel: 1e-10, max_intervals: 2000 };
    let integrand = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let weight = (-(z / u).powf(alpha)).exp() * u.powf(-alpha);
        if weight == 0.0 {
            return 0.0;
        }
        weight * stable_density(alpha, theta, u).unwrap_or(f64::NAN)
    };
    let lower = z * 45f64.powf(-1.0 / alpha);
    let split = (4.0 * z).max(10.0);
    let body = integrate(integrand, lower, split, tol)?;
    let tail = integrate_to_infinity(integrand, split, tol)?;
    Ok(alpha * z.powf(alpha - 1.0) * (body + tail))
}

/// A tabulated continuous steady state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NessCurve {
    pub kind: NessKind,
    pub y: Vec<f64>,
    pub density: Vec<f64>,
}

impl NessCurve {
    /// Trapezoid mass over the stored abscissae.
    pub fn trapezoid_mass(&self) -> f64 {
        self.y
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(y, d)| 0.5 * (y[1] - y[0]) * (d[0] + d[1]))
            .sum()
    }
}

/// Evaluates a continuous steady state on the given abscissae.
pub fn continuous_ness_1d(kind: NessKind, y: &[f64]) -> Result<NessCurve> {
    let kind = kind.validated()?;
    let density = y.iter().map(|&v| kind.density(v)).collect::<Result<Vec<_>>>()?;
    Ok(NessCurve { kind, y: y.to_vec(), density })
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_presets() {
        let gauss = |y: f64| (-y * y / 4.0).exp() / (2.0 * PI.sqrt());
        let cauchy = |y: f64| 1.0 / (PI * (1.0 + y * y));
        let levy = |y: f64| if y > 0.0 { (-1.0 / (4.0 * y)).exp() / (2.0 * PI.sqrt() * y.powf(1.5)) } else { 0.0 };
        assert!((stable_density(2.0, 0.0, 0.0).unwrap() - 0.2820948).abs() < 1e-7);
        assert!((stable_density(1.0, 0.0, 0.0).unwrap() - std::f64::consts::FRAC_1_PI).abs() < 1e-12);
        assert!((stable_density(0.5, 1.0, 1.0).unwrap() - 0.2196956).abs() < 1e-7);
        for y in linspace(-12.0, 12.0, 97) {
            assert!((stable_density(2.0, 0.0, y).unwrap() - gauss(y)).abs() < 1e-10, "gauss {y}");
            assert!((stable_density(1.0, 0.0, y).unwrap() - cauchy(y)).abs() < 1e-10, "cauchy {y}");
            assert!((stable_density(0.5, 1.0, y).unwrap() - levy(y)).abs() < 1e-10, "levy {y}");
        }
    }

    #[test]
    fn tail_series_joins_numerical_inversion() {
        for &(alpha, theta) in &[(0.5, 1.0), (0.7, 0.0), (1.5, 0.0), (0.3, 1.0)] {
            let y = 200f64.powf(1.0 / alpha) * 1.01;
            let series = stable_tail_series(alpha, theta, y);
            let direct = stable_fourier(alpha, theta, y).unwrap();
            assert!(((series - direct) / direct).abs() < 1e-7, "alpha {alpha} theta {theta}");
        }
    }

    #[test]
    fn inadmissible_parameters() {
        assert!(stable_density(1.5, 1.0, 1.0).is_err());
        assert!(stable_density(2.5, 0.0, 1.0).is_err());
        assert!(stable_density(1.0, 0.5, 1.0).is_err());
        assert!(NessKind::StableMixture { alpha: 1.0, theta: 1.0, scale: 1.0 }.validated().is_ok());
    }

    #[test]
    fn closed_form_curves() {
        let lap = NessKind::Laplace { b: 1.0 };
        assert!((lap.density(0.0).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        let exp = NessKind::OneSidedExp { a: 2.0 };
        assert!((exp.density(1.0).unwrap() - 0.3032653).abs() < 1e-7);
        assert_eq!(exp.density(-0.1).unwrap(), 0.0);
        let neg = NessKind::OneSidedExp { a: -2.0 };
        assert!((neg.density(-1.0).unwrap() - 0.3032653).abs() < 1e-7);
        assert_eq!(neg.density(0.1).unwrap(), 0.0);
        assert!(NessKind::Laplace { b: 0.0 }.density(0.0).is_err());
        assert!(NessKind::OneSidedExp { a: 0.0 }.density(0.0).is_err());
    }

    #[test]
    fn degenerate_mixture_is_exponential() {
        let mix = NessKind::StableMixture { alpha: 1.0, theta: 1.0, scale: 2.0 };
        let exp = NessKind::OneSidedExp { a: 2.0 };
        for y in linspace(-3.0, 10.0, 27) {
            assert!((mix.density(y).unwrap() - exp.density(y).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn lattice_ness_deterministic_steps_is_count_law() {
        let inner = WaitingLaw::geometric(0.7).unwrap();
        let grid = lattice_ness(&StepLaw::one_sided_unit(), &inner, 0.8, 60).unwrap();
        let s = crate::stopped::geometric_stop_asymptotics(&inner, 0.8, 1.0).unwrap();
        for (m, p) in s.p_inf.iter().enumerate().take(60) {
            assert!((grid.get(&[m as i64]) - p).abs() < 1e-12, "m {m}");
        }
        assert!(grid.get(&[-1]).abs() < 1e-12);
    }

    #[test]
    fn kinds_parse() {
        assert_eq!("laplace:b=2".parse::<NessKind>().unwrap(), NessKind::Laplace { b: 2.0 });
        assert_eq!("one-sided-exp:a=-1".parse::<NessKind>().unwrap(), NessKind::OneSidedExp { a: -1.0 });
        assert_eq!(
            "stable-mixture:alpha=1.5,theta=0,scale=2".parse::<NessKind>().unwrap(),
            NessKind::StableMixture { alpha: 1.5, theta: 0.0, scale: 2.0 }
        );
        assert!("stable-mixture:alpha=1.5,theta=1,scale=2".parse::<NessKind>().is_err());
        assert!("laplace:b=0".parse::<NessKind>().is_err());
        assert!("laplace:a=1".parse::<NessKind>().is_err());
    }
}
