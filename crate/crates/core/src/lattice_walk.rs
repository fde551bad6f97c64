//! Random walks `X_t = sum_{r <= M(t)} xi_r` on `Z^d` whose operational time
//! is a counting process `M(t)`.
//!
//! Steps are integer vectors in a lattice basis. The square lattice uses the
//! identity basis; the triangular lattice uses `e1 = (1, 0)`,
//! `e2 = (1/2, sqrt(3)/2)`, so lattice bookkeeping stays exact and Cartesian
//! moments are derived from the embedding.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::distributions::{split_spec, spec_keys, spec_number, ExtendedTime};
use crate::error::{Error, Result};
use crate::gf_series::CoeffSeries;

/// Largest number of cells a dense propagator box may hold.
pub const MAX_GRID_CELLS: usize = 1 << 26;

const HALF_SQRT3: f64 = 0.866_025_403_784_438_6;

/// Map from lattice coordinates to Cartesian space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Embedding {
    Identity,
    Triangular,
}

impl Embedding {
    pub fn cartesian(self, x: &[i64]) -> Vec<f64> {
        match self {
            Embedding::Identity => x.iter().map(|&v| v as f64).collect(),
            Embedding::Triangular => {
                let (a, b) = (x[0] as f64, x[1] as f64);
                vec![a + 0.5 * b, HALF_SQRT3 * b]
            }
        }
    }
}

/// Finite step distribution on `Z^d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepLaw {
    dim: usize,
    steps: Vec<Vec<i64>>,
    probs: Vec<f64>,
    embedding: Embedding,
    mean: Vec<f64>,
    second: Vec<f64>,
}

impl StepLaw {
    /// Probabilities must be positive and sum to one; `dim` is 1 to 3, and the
    /// triangular embedding requires `dim = 2`.
    pub fn new(dim: usize, steps: Vec<(Vec<i64>, f64)>, embedding: Embedding) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Parameter(format!("dimension {dim} not supported, use 1 to 3")));
        }
        if embedding == Embedding::Triangular && dim != 2 {
            return Err(Error::Parameter("the triangular lattice is two-dimensional".into()));
        }
        if steps.is_empty() {
            return Err(Error::Parameter("a step law needs at least one step".into()));
        }
        if let Some((v, _)) = steps.iter().find(|(v, _)| v.len() != dim) {
            return Err(Error::Parameter(format!("step {v:?} does not have dimension {dim}")));
        }
        if let Some((_, p)) = steps.iter().find(|(_, p)| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::Parameter(format!("step probability {p} must be positive")));
        }
        let total: f64 = steps.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!("step probabilities sum to {total}, not 1")));
        }
        let cart_dim = dim;
        let mut mean = vec![0.0; cart_dim];
        let mut second = vec![0.0; cart_dim];
        for (v, p) in &steps {
            for (j, c) in embedding.cartesian(v).into_iter().enumerate() {
                mean[j] += p * c;
                second[j] += p * c * c;
            }
        }
        let (steps, probs) = steps.into_iter().unzip();
        Ok(Self { dim, steps, probs, embedding, mean, second })
    }

    /// Unbiased nearest-neighbour walk on `Z^d`: `+-e_j` with probability `1/(2d)`.
    pub fn nearest_neighbour(dim: usize) -> Result<Self> {
        let w = 1.0 / (2 * dim) as f64;
        let steps = (0..dim)
            .flat_map(|j| {
                [1, -1].into_iter().map(move |s| {
                    let mut v = vec![0; dim];
                    v[j] = s;
                    (v, w)
                })
            })
            .collect();
        Self::new(dim, steps, Embedding::Identity)
    }

    /// `+1` or `-1` with probability one half each.
    pub fn symmetric_pm1() -> Self {
        Self::nearest_neighbour(1).expect("valid law")
    }

    /// Deterministic `+1` step: the walk position equals the count.
    pub fn one_sided_unit() -> Self {
        Self::new(1, vec![(vec![1], 1.0)], Embedding::Identity).expect("valid law")
    }

    /// All six neighbours of the triangular lattice with probability `1/6`.
    pub fn triangular_unbiased() -> Self {
        let steps = TRIANGULAR.iter().map(|v| (v.to_vec(), 1.0 / 6.0)).collect();
        Self::new(2, steps, Embedding::Triangular).expect("valid law")
    }

    /// The neighbours at angles `0, 60, 120, 180` degrees with probability `1/4`.
    pub fn triangular_biased() -> Self {
        let steps = TRIANGULAR[..4].iter().map(|v| (v.to_vec(), 0.25)).collect();
        Self::new(2, steps, Embedding::Triangular).expect("valid law")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn embedding(&self) -> Embedding {
        self.embedding
    }

    /// `(step, probability)` pairs in lattice coordinates.
    pub fn steps(&self) -> impl Iterator<Item = (&[i64], f64)> {
        self.steps.iter().map(Vec::as_slice).zip(self.probs.iter().copied())
    }

    /// Cartesian `E xi_j`.
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Cartesian `E xi_j^2`.
    pub fn second(&self) -> &[f64] {
        &self.second
    }

    /// Cartesian `Var xi_j`.
    pub fn variance(&self) -> Vec<f64> {
        self.mean.iter().zip(&self.second).map(|(m, s)| s - m * m).collect()
    }

    /// Largest absolute lattice coordinate among the steps.
    pub fn reach(&self) -> i64 {
        self.steps.iter().flatten().map(|c| c.abs()).max().unwrap_or(0)
    }

    /// `W(phi) = sum_r p_r exp(-i phi . a_r)` with `a_r` in lattice coordinates.
    pub fn char_fn(&self, phi: &[f64]) -> Complex64 {
        self.steps()
            .map(|(a, p)| {
                let dot: f64 = a.iter().zip(phi).map(|(&x, f)| x as f64 * f).sum();
                Complex64::from_polar(p, -dot)
            })
            .sum()
    }

    /// Same as [`StepLaw::char_fn`] but with Cartesian step vectors.
    pub fn char_fn_cartesian(&self, k: &[f64]) -> Complex64 {
        self.steps()
            .map(|(a, p)| {
                let dot: f64 = self.embedding.cartesian(a).iter().zip(k).map(|(x, f)| x * f).sum();
                Complex64::from_polar(p, -dot)
            })
            .sum()
    }

    /// Draws one step.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &[i64] {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (v, p) in self.steps.iter().zip(&self.probs) {
            acc += p;
            if u < acc {
                return v;
            }
        }
        self.steps.last().expect("non-empty")
    }
}

/// Presets by name: `pm1`, `unit`, `nn:d=<dim>`, `triangular-biased`,
/// `triangular-unbiased`.
impl std::str::FromStr for StepLaw {
    type Err = Error;

    fn from_str(input: &str) -> Result<Self> {
        let (kind, params) = split_spec(input)?;
        let allowed: &[&str] = if kind == "nn" { &["d"] } else { &[] };
        spec_keys(input, &kind, &params, allowed)?;
        match kind.as_str() {
            "pm1" => Ok(Self::symmetric_pm1()),
            "unit" => Ok(Self::one_sided_unit()),
            "triangular-biased" => Ok(Self::triangular_biased()),
            "triangular-unbiased" => Ok(Self::triangular_unbiased()),
            "nn" => {
                let d = spec_number(input, &params, "d")?;
                if d.fract() != 0.0 || !(1.0..=3.0).contains(&d) {
                    return Err(Error::Parse { input: input.to_string(), reason: format!("d = {d} must be 1, 2 or 3") });
                }
                Self::nearest_neighbour(d as usize)
            }
            other => Err(Error::Parse { input: input.to_string(), reason: format!("unknown step law `{other}`") }),
        }
    }
}

/// Triangular neighbours in the `(e1, e2)` basis, counter-clockwise from 0 degrees.
const TRIANGULAR: [[i64; 2]; 6] = [[1, 0], [0, 1], [-1, 1], [-1, 0], [0, -1], [1, -1]];

/// Probability mass on the box `[-L, L]^d` at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropagatorGrid {
    dim: usize,
    half_width: usize,
    values: Vec<f64>,
    time: ExtendedTime,
    mass_in_box: f64,
    embedding: Embedding,
}

impl PropagatorGrid {
    pub(crate) fn from_values(
        dim: usize,
        half_width: usize,
        values: Vec<f64>,
        time: ExtendedTime,
        embedding: Embedding,
    ) -> Self {
        let mass_in_box = values.iter().sum();
        Self { dim, half_width, values, time, mass_in_box, embedding }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn time(&self) -> ExtendedTime {
        self.time
    }

    pub fn mass_in_box(&self) -> f64 {
        self.mass_in_box
    }

    /// Raw values, first coordinate varying fastest.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn side(&self) -> usize {
        2 * self.half_width + 1
    }

    fn index(&self, x: &[i64]) -> Option<usize> {
        let l = self.half_width as i64;
        let mut idx = 0;
        for &c in x.iter().rev() {
            if c.abs() > l {
                return None;
            }
            idx = idx * self.side() + (c + l) as usize;
        }
        Some(idx)
    }

    fn coords(&self, mut idx: usize) -> Vec<i64> {
        let l = self.half_width as i64;
        (0..self.dim)
            .map(|_| {
                let c = (idx % self.side()) as i64 - l;
                idx /= self.side();
                c
            })
            .collect()
    }

    /// `P(x)`; zero outside the box.
    pub fn get(&self, x: &[i64]) -> f64 {
        self.index(x).map_or(0.0, |i| self.values[i])
    }

    /// `(x, P(x))` over the whole box.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<i64>, f64)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| (self.coords(i), v))
    }

    /// `sum_x P(x) exp(-i phi . x)` in lattice coordinates.
    pub fn fourier(&self, phi: &[f64]) -> Complex64 {
        self.iter()
            .filter(|(_, v)| *v != 0.0)
            .map(|(x, v)| {
                let dot: f64 = x.iter().zip(phi).map(|(&c, f)| c as f64 * f).sum();
                Complex64::from_polar(v, -dot)
            })
            .sum()
    }

    /// Cartesian `(E X_j, E X_j^2)` summed over the box.
    pub fn moments(&self) -> (Vec<f64>, Vec<f64>) {
        let mut mean = vec![0.0; self.dim];
        let mut second = vec![0.0; self.dim];
        for (x, v) in self.iter() {
            for (j, c) in self.embedding.cartesian(&x).into_iter().enumerate() {
                mean[j] += v * c;
                second[j] += v * c * c;
            }
        }
        (mean, second)
    }
}

fn check_box(dim: usize, half_width: usize) -> Result<usize> {
    let side = 2 * half_width + 1;
    let cells = (0..dim).try_fold(1usize, |acc, _| acc.checked_mul(side));
    match cells {
        Some(c) if c <= MAX_GRID_CELLS => Ok(c),
        _ => Err(Error::Parameter(format!(
            "box of half-width {half_width} in {dim} dimensions exceeds {MAX_GRID_CELLS} cells"
        ))),
    }
}

/// `P(x, t) = sum_n P[M(t) = n] W^{*n}(x)` on `[-L, L]^d`, one spatial
/// convolution per `n`. Mass pushed out of the box is lost; a box holding less
/// than `1 - 1e-6` is reported as leakage.
pub fn propagator(step: &StepLaw, count_pmf: &[f64], half_width: usize, time: ExtendedTime) -> Result<PropagatorGrid> {
    let total: f64 = count_pmf.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Parameter(format!("count law sums to {total}, not 1")));
    }
    let dim = step.dim();
    let cells = check_box(dim, half_width)?;
    let side = 2 * half_width + 1;
    let l = half_width as i64;
    // flat offsets of each step; a step leaves the box when a coordinate leaves [-L, L]
    let strides: Vec<usize> = (0..dim).map(|j| side.pow(j as u32)).collect();
    let origin: usize = strides.iter().map(|s| s * half_width).sum();

    let mut power = vec![0.0; cells];
    power[origin] = 1.0;
    let mut acc = vec![0.0; cells];
    let last = count_pmf.iter().rposition(|&w| w != 0.0).unwrap_or(0);
    let mut next = vec![0.0; cells];
    for (n, &w) in count_pmf.iter().enumerate().take(last + 1) {
        if n > 0 {
            next.iter_mut().for_each(|x| *x = 0.0);
            for (i, &v) in power.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                'steps: for (a, p) in step.steps() {
                    let mut target = i;
                    let mut rest = i;
                    for (j, &c) in a.iter().enumerate() {
                        let coord = (rest % side) as i64 - l + c;
                        rest /= side;
                        if coord.abs() > l {
                            continue 'steps;
                        }
                        target = (target as i64 + c * strides[j] as i64) as usize;
                    }
                    next[target] += v * p;
                }
            }
            std::mem::swap(&mut power, &mut next);
        }
        if w != 0.0 {
            for (a, v) in acc.iter_mut().zip(&power) {
                *a += w * v;
            }
        }
    }
    let grid = PropagatorGrid::from_values(dim, half_width, acc, time, step.embedding());
    if grid.mass_in_box < 1.0 - 1e-6 {
        return Err(Error::Leakage { mass_in_box: grid.mass_in_box });
    }
    Ok(grid)
}

/// Per-component Wald moments of the walk.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkMoments {
    pub mean: Vec<CoeffSeries>,
    pub second: Vec<CoeffSeries>,
    pub variance: Vec<CoeffSeries>,
}

/// `E X_j = E M E xi_j`, `E X_j^2 = E M^2 (E xi_j)^2 + E M Var xi_j`,
/// `Var X_j = Var M (E xi_j)^2 + E M Var xi_j`.
pub fn walk_moments(step: &StepLaw, m_mean: &CoeffSeries, m_second: &CoeffSeries) -> Result<WalkMoments> {
    if m_mean.horizon() != m_second.horizon() {
        return Err(Error::HorizonMismatch { left: m_mean.horizon(), right: m_second.horizon() });
    }
    let m_var = m_second.sub(&m_mean.hadamard(m_mean)?)?;
    let var = step.variance();
    let mut out = WalkMoments { mean: vec![], second: vec![], variance: vec![] };
    for (a, v) in step.mean().iter().zip(var) {
        out.mean.push(m_mean.scale(*a));
        out.second.push(m_second.scale(a * a).add(&m_mean.scale(v))?);
        out.variance.push(m_var.scale(a * a).add(&m_mean.scale(v))?);
    }
    Ok(out)
}

/// Which triangular step law drives the walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TriangularKind {
    Biased,
    Unbiased,
}

/// Mean squared displacement on the triangular lattice: `E M` for the
/// unbiased walk, `(3/16) E M^2 + (13/16) E M` for the biased one.
pub fn triangular_msd(kind: TriangularKind, m_mean: &CoeffSeries, m_second: &CoeffSeries) -> Result<CoeffSeries> {
    match kind {
        TriangularKind::Unbiased => Ok(m_mean.clone()),
        TriangularKind::Biased => m_second.scale(3.0 / 16.0).add(&m_mean.scale(13.0 / 16.0)),
    }
}
