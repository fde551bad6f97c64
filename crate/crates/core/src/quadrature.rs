//! Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and subdivision budget.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-13, rel: 1e-11, max_intervals: 4000 }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        k += WGK[j] * pair;
        if j % 2 == 1 {
            g += WG[j / 2] * pair;
        }
    }
    Panel { a, b, value: k * half, error: ((k - g) * half).abs() }
}

/// Integrates `f` over `[a, b]`, bisecting the panel with the largest error
/// estimate until the total estimate meets the tolerance.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut panels = vec![kronrod(&mut f, a, b)];
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if !value.is_finite() {
            return Err(Error::Accuracy(format!("non-finite integrand on [{a}, {b}]")));
        }
        if error <= tol.abs.max(tol.rel * value.abs()) {
            return Ok(value);
        }
        if panels.len() >= tol.max_intervals {
            return Err(Error::Accuracy(format!(
                "no convergence on [{a}, {b}] after {} panels: value {value:e}, error {error:e}",
                panels.len()
            )));
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .expect("non-empty");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            return Err(Error::Accuracy(format!("panel [{}, {}] cannot be split further", p.a, p.b)));
        }
        panels.push(kronrod(&mut f, p.a, mid));
        panels.push(kronrod(&mut f, mid, p.b));
    }
}

/// Integrates over `[a, inf)` through `x = a + s / (1 - s)`.
pub fn integrate_to_infinity(f: impl Fn(f64) -> f64, a: f64, tol: Tolerance) -> Result<f64> {
    integrate(
        |s| {
            if s >= 1.0 {
                return 0.0;
            }
            let d = 1.0 - s;
            let v = f(a + s / d) / (d * d);
            if v.is_finite() { v } else { 0.0 }
        },
        0.0,
        1.0,
        tol,
    )
}
