//! Density representations and the maximum-of-density functional.
//!
//! Two carriers are supported. [`DiscreteDensity`] is a probability vector on
//! a finite index set with counting reference measure, so `M` is the largest
//! atom. [`GridDensity`] is a piecewise-constant Lebesgue density on a uniform
//! one-dimensional grid, so `M` is the largest cell height.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the total mass of a [`DiscreteDensity`].
pub const DISCRETE_MASS_TOL: f64 = 1e-12;
/// Tolerance on `step · Σ values` for a [`GridDensity`].
pub const GRID_MASS_TOL: f64 = 1e-9;
/// Absolute slack used when comparing two values of `M`.
pub const M_COMPARE_TOL: f64 = 1e-9;

/// Value of the functional `M`, an extended nonnegative real.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct MaxFunctional(f64);

impl MaxFunctional {
    pub const INFINITE: MaxFunctional = MaxFunctional(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "M must be a nonnegative extended real, got {value}"
            )));
        }
        Ok(MaxFunctional(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// `N∞ = M^{-2/d}`, see [`renyi_infinity_power`].
    pub fn entropy_power(self, d: usize) -> f64 {
        renyi_infinity_power(self, d)
    }
}

/// Probability masses on `{0, …, n-1}` with counting reference measure.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDensity {
    masses: Vec<f64>,
}

impl DiscreteDensity {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::InvalidDensity("empty carrier".into()));
        }
        check_nonnegative(&masses)?;
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > DISCRETE_MASS_TOL {
            return Err(Error::InvalidDensity(format!(
                "masses sum to {total}, expected 1"
            )));
        }
        Ok(DiscreteDensity { masses })
    }

    /// Normalizes nonnegative weights with positive total.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        check_nonnegative(weights)?;
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.is_empty() {
            return Err(Error::InvalidDensity("weights have zero total".into()));
        }
        Ok(DiscreteDensity {
            masses: weights.iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform law needs a nonempty carrier");
        DiscreteDensity {
            masses: vec![1.0 / n as f64; n],
        }
    }

    pub fn dirac(n: usize, at: usize) -> Self {
        assert!(at < n, "atom {at} outside carrier of size {n}");
        let mut masses = vec![0.0; n];
        masses[at] = 1.0;
        DiscreteDensity { masses }
    }

    pub fn carrier_size(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn into_masses(self) -> Vec<f64> {
        self.masses
    }
}

/// Piecewise-constant density on the cells `[left + i·step, left + (i+1)·step)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDensity {
    left: f64,
    step: f64,
    values: Vec<f64>,
}

impl GridDensity {
    pub fn new(left: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        check_grid_shape(left, step, &values)?;
        let mass = step * values.iter().sum::<f64>();
        if (mass - 1.0).abs() > GRID_MASS_TOL {
            return Err(Error::InvalidDensity(format!(
                "grid mass {mass}, expected 1"
            )));
        }
        Ok(GridDensity { left, step, values })
    }

    /// Rescales nonnegative cell heights to unit mass.
    pub fn from_weights(left: f64, step: f64, weights: Vec<f64>) -> Result<Self> {
        check_grid_shape(left, step, &weights)?;
        let mass = step * weights.iter().sum::<f64>();
        if !(mass > 0.0) {
            return Err(Error::InvalidDensity("weights have zero total".into()));
        }
        let values = weights.into_iter().map(|w| w / mass).collect();
        Ok(GridDensity { left, step, values })
    }

    /// Uniform law on `[a, b]`, starting at `a` on a grid of width `step`.
    ///
    /// The last cell is the exact cell average when `b - a` is not a multiple
    /// of `step`, so mass is exact.
    pub fn uniform_interval(a: f64, b: f64, step: f64) -> Result<Self> {
        if !(b > a) || !(step > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "uniform interval needs a < b and step > 0, got [{a}, {b}], step {step}"
            )));
        }
        let length = b - a;
        let ratio = length / step;
        let full = (ratio + 1e-9).floor() as usize;
        let height = 1.0 / length;
        let mut values = vec![height; full];
        let rest = ratio - full as f64;
        if rest > 1e-9 {
            values.push(height * rest);
        }
        if values.is_empty() {
            values.push(1.0 / step);
        }
        GridDensity::from_weights(a, step, values)
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn right(&self) -> f64 {
        self.left + self.step * self.values.len() as f64
    }

    pub fn mass(&self) -> f64 {
        self.step * self.values.iter().sum::<f64>()
    }

    /// Smallest closed interval carrying all nonzero cells.
    pub fn support(&self) -> (f64, f64) {
        let first = self.values.iter().position(|&v| v > 0.0).unwrap_or(0);
        let last = self
            .values
            .iter()
            .rposition(|&v| v > 0.0)
            .unwrap_or(self.values.len() - 1);
        (
            self.left + first as f64 * self.step,
            self.left + (last + 1) as f64 * self.step,
        )
    }

    /// Piecewise-constant evaluation, zero outside the grid.
    pub fn eval(&self, x: f64) -> f64 {
        let pos = (x - self.left) / self.step;
        if !(pos >= 0.0) {
            return 0.0;
        }
        let idx = pos as usize;
        self.values.get(idx).copied().unwrap_or(0.0)
    }

    /// Linear interpolation between cell centers, treating each value as a
    /// sample at its center. Matches the point-sampled output of
    /// [`convolve_grids`].
    pub fn eval_linear(&self, x: f64) -> f64 {
        let pos = (x - self.left) / self.step - 0.5;
        let n = self.values.len() as isize;
        let lo = pos.floor();
        let t = pos - lo;
        let lo = lo as isize;
        let at = |i: isize| {
            if i < 0 || i >= n {
                0.0
            } else {
                self.values[i as usize]
            }
        };
        (1.0 - t) * at(lo) + t * at(lo + 1)
    }

    pub fn translated(&self, shift: f64) -> GridDensity {
        GridDensity {
            left: self.left + shift,
            ..self.clone()
        }
    }

    /// Law of `t·X` for `X` with this density, `t ≠ 0`.
    pub fn scaled(&self, t: f64) -> Result<GridDensity> {
        if t == 0.0 || !t.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "scale factor must be finite and nonzero, got {t}"
            )));
        }
        let a = t.abs();
        let mut values: Vec<f64> = self.values.iter().map(|v| v / a).collect();
        let left = if t > 0.0 {
            t * self.left
        } else {
            values.reverse();
            t * self.right()
        };
        Ok(GridDensity {
            left,
            step: a * self.step,
            values,
        })
    }

    /// Cell-averaged resampling onto a grid of width `step` starting at the
    /// same left endpoint. Mass is preserved exactly up to rounding.
    pub fn resampled(&self, step: f64) -> Result<GridDensity> {
        if !(step > 0.0) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
        }
        let width = self.right() - self.left;
        let cells = ((width / step) - 1e-9).ceil().max(1.0) as usize;
        let mut out = vec![0.0; cells];
        for (i, &v) in self.values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let a = i as f64 * self.step;
            let b = a + self.step;
            let mut j = ((a / step).floor() as usize).min(cells - 1);
            loop {
                let last = j == cells - 1;
                let lo = (j as f64 * step).max(a);
                // the last cell absorbs anything past the rounded width
                let hi = if last { b } else { ((j + 1) as f64 * step).min(b) };
                if hi > lo {
                    out[j] += v * (hi - lo);
                }
                if last || (j + 1) as f64 * step >= b {
                    break;
                }
                j += 1;
            }
        }
        GridDensity::from_weights(self.left, step, out.into_iter().map(|m| m / step).collect())
    }

    /// Splits every cell into `factor` equal cells of the same height.
    pub fn refined(&self, factor: usize) -> GridDensity {
        assert!(factor > 0);
        let values = self
            .values
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, factor))
            .collect();
        GridDensity {
            left: self.left,
            step: self.step / factor as f64,
            values,
        }
    }
}

fn check_nonnegative(values: &[f64]) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidDensity(format!(
                "entry {i} is {v}, expected a finite nonnegative value"
            )));
        }
    }
    Ok(())
}

fn check_grid_shape(left: f64, step: f64, values: &[f64]) -> Result<()> {
    if !left.is_finite() {
        return Err(Error::InvalidDensity(format!("left endpoint {left} is not finite")));
    }
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidDensity(format!("cell width {step} must be positive")));
    }
    if values.is_empty() {
        return Err(Error::InvalidDensity("grid has no cells".into()));
    }
    check_nonnegative(values)
}

/// `M` under counting measure: the largest atom.
pub fn m_discrete(mu: &DiscreteDensity) -> MaxFunctional {
    MaxFunctional(max_of(mu.masses()))
}

/// `M` under Lebesgue measure: the largest cell height.
pub fn m_grid(f: &GridDensity) -> MaxFunctional {
    MaxFunctional(max_of(f.values()))
}

pub(crate) fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}

/// ∞-Rényi entropy power `M^{-2/d}`, with `M = ∞ ↦ 0` and `M = 0 ↦ ∞`.
pub fn renyi_infinity_power(m: MaxFunctional, d: usize) -> f64 {
    assert!(d > 0, "dimension must be positive");
    let v = m.value();
    if v.is_infinite() {
        0.0
    } else if v == 0.0 {
        f64::INFINITY
    } else {
        v.powf(-2.0 / d as f64)
    }
}

/// Density of `X + Y` for independent `X ~ f`, `Y ~ g` on a common cell width.
///
/// The exact convolution of two step functions is piecewise linear with
/// knots on the grid. The result stores those knot values, one per cell
/// centered on each knot, so `M` of the output is the exact maximum of the
/// convolution of the two step functions and `step · Σ values` equals the
/// product of the input masses.
pub fn convolve_grids(f: &GridDensity, g: &GridDensity) -> Result<GridDensity> {
    let h = f.step;
    if (f.step - g.step).abs() > 1e-12 * f.step.max(g.step) {
        return Err(Error::IncompatibleGrids(f.step, g.step));
    }
    let a = f.values();
    let b = g.values();
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        let hx = h * x;
        for (o, &y) in out[i..].iter_mut().zip(b) {
            *o += hx * y;
        }
    }
    Ok(GridDensity {
        left: f.left + g.left + 0.5 * h,
        step: h,
        values: out,
    })
}

/// Folds [`convolve_grids`] over a nonempty list.
pub fn convolve_all(list: &[GridDensity]) -> Result<GridDensity> {
    let (first, rest) = list
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("no densities to convolve".into()))?;
    rest.iter().try_fold(first.clone(), |acc, g| convolve_grids(&acc, g))
}

/// JSON form of a density consumed by the CLI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DensityJson {
    Grid {
        left: f64,
        step: f64,
        values: Vec<f64>,
    },
    Discrete {
        #[serde(default)]
        offset: i64,
        values: Vec<f64>,
    },
}

impl From<&GridDensity> for DensityJson {
    fn from(f: &GridDensity) -> Self {
        DensityJson::Grid {
            left: f.left,
            step: f.step,
            values: f.values.clone(),
        }
    }
}

impl From<&DiscreteDensity> for DensityJson {
    fn from(mu: &DiscreteDensity) -> Self {
        DensityJson::Discrete {
            offset: 0,
            values: mu.masses.clone(),
        }
    }
}

impl DensityJson {
    pub fn into_grid(self) -> Result<GridDensity> {
        match self {
            DensityJson::Grid { left, step, values } => GridDensity::new(left, step, values),
            DensityJson::Discrete { .. } => {
                Err(Error::InvalidDensity("expected a grid density, found a discrete one".into()))
            }
        }
    }

    pub fn into_discrete(self) -> Result<DiscreteDensity> {
        match self {
            DensityJson::Discrete { values, .. } => DiscreteDensity::new(values),
            DensityJson::Grid { .. } => {
                Err(Error::InvalidDensity("expected a discrete density, found a grid".into()))
            }
        }
    }
}
