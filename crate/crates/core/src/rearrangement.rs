//! Symmetric decreasing rearrangement on grids and numerical checks of the
//! rearrangement inequalities in one dimension.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::ball_fourier::unit_ball_volume;
use crate::error::{Error, Result};
use crate::measures::{convolve_all, m_grid, GridDensity, GRID_MASS_TOL};
use crate::quadrature::pairwise_sum;

/// Per-axis resolution cap of [`bll_check_1d`].
pub const MAX_QUAD_CELLS: usize = 512;
/// Relative slack in [`bll_check_1d`].
pub const BLL_REL_TOL: f64 = 1e-6;
/// Absolute slack in [`bll_check_1d`].
pub const BLL_ABS_TOL: f64 = 1e-9;
/// Slack in [`rearranged_max_bound`].
pub const MAX_BOUND_TOL: f64 = 1e-9;

/// Piecewise-constant density on `[-half_width, half_width]` with an even
/// number of cells, symmetric about 0.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricGrid {
    half_width: f64,
    cell_width: f64,
    values: Vec<f64>,
}

impl SymmetricGrid {
    pub fn new(cell_width: f64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || !values.len().is_multiple_of(2) {
            return Err(Error::InvalidDensity("symmetric grid needs an even, nonzero cell count".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidDensity("values must be finite and nonnegative".into()));
        }
        let n = values.len();
        if (0..n / 2).any(|i| values[i] != values[n - 1 - i]) {
            return Err(Error::InvalidDensity("values are not symmetric".into()));
        }
        let grid = SymmetricGrid {
            half_width: cell_width * (n / 2) as f64,
            cell_width,
            values,
        };
        // validates width and mass
        grid.to_grid()?;
        Ok(grid)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn cell_width(&self) -> f64 {
        self.cell_width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_grid(&self) -> Result<GridDensity> {
        let g = GridDensity::new(-self.half_width, self.cell_width, self.values.clone())?;
        debug_assert!((g.mass() - 1.0).abs() <= GRID_MASS_TOL);
        Ok(g)
    }

    /// True when values do not increase moving away from 0.
    pub fn is_decreasing(&self) -> bool {
        let n = self.values.len() / 2;
        self.values[n..].windows(2).all(|w| w[0] >= w[1])
    }

    /// Rearrangement at the same cell width. A symmetric grid carries each
    /// value an even number of times, so pairs of the sorted values fill
    /// mirrored cells.
    pub fn rearranged(&self) -> SymmetricGrid {
        let mut sorted = self.values.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let half = sorted.len() / 2;
        let mut values = vec![0.0; sorted.len()];
        for j in 0..half {
            values[half - 1 - j] = sorted[2 * j];
            values[half + j] = sorted[2 * j];
        }
        SymmetricGrid {
            values,
            ..self.clone()
        }
    }
}

/// Symmetric decreasing rearrangement of a grid density.
///
/// Each input cell of width `h` becomes a mirrored pair of cells of width
/// `h/2`, so the output is centered at 0 with an even cell count and every
/// level set keeps its measure exactly. Equal values keep their input order,
/// placed from the center outward. Zero cells are dropped.
pub fn decreasing_rearrangement_grid(f: &GridDensity) -> SymmetricGrid {
    let mut order: Vec<usize> = (0..f.len()).filter(|&i| f.values()[i] > 0.0).collect();
    order.sort_by(|&i, &j| f.values()[j].total_cmp(&f.values()[i]));
    let n = order.len();
    let mut values = vec![0.0; 2 * n];
    for (j, &i) in order.iter().enumerate() {
        values[n - 1 - j] = f.values()[i];
        values[n + j] = f.values()[i];
    }
    let cell_width = f.step() / 2.0;
    SymmetricGrid {
        half_width: cell_width * n as f64,
        cell_width,
        values,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadialShell {
    /// Outer radius of the shell.
    pub radius: f64,
    pub height: f64,
}

/// Radial profile of the rearrangement of a function taking value `height`
/// on a set of measure `volume`, for each listed pair.
///
/// Heights are sorted decreasingly and the `j`-th shell has outer radius
/// `(V₁ + ⋯ + Vⱼ)/ω_d)^{1/d}`.
pub fn radial_rearrangement(level_sets: &[(f64, f64)], d: usize) -> Result<Vec<RadialShell>> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    if level_sets.iter().any(|&(h, v)| !(h > 0.0) || !(v > 0.0)) {
        return Err(Error::InvalidArgument("heights and volumes must be positive".into()));
    }
    let mut sets = level_sets.to_vec();
    sets.sort_by(|a, b| b.0.total_cmp(&a.0));
    if sets.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidArgument("heights must be distinct".into()));
    }
    let omega = unit_ball_volume(d);
    let mut cumulative = 0.0;
    Ok(sets
        .into_iter()
        .map(|(height, volume)| {
            cumulative += volume;
            RadialShell {
                radius: (cumulative / omega).powf(1.0 / d as f64),
                height,
            }
        })
        .collect())
}

/// `∫` of a radial profile over ℝᵈ.
pub fn radial_integral(shells: &[RadialShell], d: usize) -> f64 {
    let omega = unit_ball_volume(d);
    let mut inner = 0.0;
    let mut total = 0.0;
    for s in shells {
        let outer = omega * s.radius.powi(d as i32);
        total += s.height * (outer - inner);
        inner = outer;
    }
    total
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BllReport {
    pub lhs: f64,
    pub rhs: f64,
    pub cells_per_axis: usize,
    pub satisfied: bool,
}

/// Midpoint quadrature of `∫ ∏ᵢ fᵢ(Σⱼ aᵢⱼ xⱼ) dx` against the same integral
/// with every `fᵢ` replaced by its symmetric decreasing rearrangement.
pub fn bll_check_1d(f_list: &[GridDensity], a: &DMatrix<f64>, quad_cells: usize) -> Result<BllReport> {
    let (n, cols) = a.shape();
    if n != f_list.len() {
        return Err(Error::SizeMismatch {
            expected: f_list.len(),
            found: n,
        });
    }
    if cols == 0 || cols > 3 || n > 4 {
        return Err(Error::DimensionCap(format!(
            "needs 1 ≤ columns ≤ 3 and rows ≤ 4, got {n}×{cols}"
        )));
    }
    if let Some(i) = (0..n).find(|&i| a.row(i).iter().all(|&x| x == 0.0)) {
        return Err(Error::Degenerate(format!("row {i} of A is zero")));
    }
    let cells = quad_cells.clamp(1, MAX_QUAD_CELLS);
    let starred: Vec<GridDensity> = f_list
        .iter()
        .map(|f| decreasing_rearrangement_grid(f).to_grid())
        .collect::<Result<_>>()?;
    let lhs = product_integral(f_list, a, cells)?;
    let rhs = product_integral(&starred, a, cells)?;
    Ok(BllReport {
        lhs,
        rhs,
        cells_per_axis: cells,
        satisfied: lhs <= rhs * (1.0 + BLL_REL_TOL) + BLL_ABS_TOL,
    })
}

fn support_box(f_list: &[GridDensity], a: &DMatrix<f64>) -> Result<Vec<(f64, f64)>> {
    let supports: Vec<(f64, f64)> = f_list.iter().map(GridDensity::support).collect();
    preimage_box(&supports, a)
}

// Bounding box of {x : (Ax)ᵢ ∈ supports[i]}, intersected over every
// invertible square row subset.
pub(crate) fn preimage_box(supports: &[(f64, f64)], a: &DMatrix<f64>) -> Result<Vec<(f64, f64)>> {
    let (n, cols) = a.shape();
    let mut bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); cols];
    let mut found = false;
    for rows in itertools::Itertools::combinations(0..n, cols) {
        let sub = DMatrix::from_fn(cols, cols, |r, c| a[(rows[r], c)]);
        let Some(inv) = sub.try_inverse() else {
            continue;
        };
        if !inv.iter().all(|x| x.is_finite()) {
            continue;
        }
        found = true;
        for (j, b) in bounds.iter_mut().enumerate() {
            let (mut lo, mut hi) = (0.0, 0.0);
            for (r, &row) in rows.iter().enumerate() {
                let w = inv[(j, r)];
                let (s0, s1) = supports[row];
                lo += (w * s0).min(w * s1);
                hi += (w * s0).max(w * s1);
            }
            b.0 = b.0.max(lo);
            b.1 = b.1.min(hi);
        }
    }
    if !found {
        return Err(Error::Degenerate("A has rank below its column count; the integral diverges".into()));
    }
    Ok(bounds)
}

fn product_integral(f_list: &[GridDensity], a: &DMatrix<f64>, cells: usize) -> Result<f64> {
    let cols = a.ncols();
    let bounds = support_box(f_list, a)?;
    if bounds.iter().any(|&(lo, hi)| hi <= lo) {
        return Ok(0.0);
    }
    let widths: Vec<f64> = bounds.iter().map(|&(lo, hi)| (hi - lo) / cells as f64).collect();
    let volume: f64 = widths.iter().product();
    let inner = cells.pow(cols as u32 - 1);
    let rows: Vec<f64> = (0..cells)
        .into_par_iter()
        .map(|i0| {
            let mut x = vec![0.0; cols];
            x[0] = bounds[0].0 + (i0 as f64 + 0.5) * widths[0];
            let mut terms = Vec::with_capacity(inner);
            for flat in 0..inner {
                let mut rest = flat;
                for j in 1..cols {
                    let ij = rest % cells;
                    rest /= cells;
                    x[j] = bounds[j].0 + (ij as f64 + 0.5) * widths[j];
                }
                let mut prod = 1.0;
                for (i, f) in f_list.iter().enumerate() {
                    let y: f64 = (0..cols).map(|j| a[(i, j)] * x[j]).sum();
                    prod *= f.eval(y);
                    if prod == 0.0 {
                        break;
                    }
                }
                terms.push(prod);
            }
            pairwise_sum(&terms)
        })
        .collect();
    Ok(pairwise_sum(&rows) * volume)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaxBoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

/// `M(f₁∗⋯∗fₙ)` against `M(f₁*∗⋯∗fₙ*)`. Inputs are split to the cell width
/// of their rearrangements so both sides are convolved on the same grid.
pub fn rearranged_max_bound(f_list: &[GridDensity]) -> Result<MaxBoundReport> {
    if f_list.len() < 2 {
        return Err(Error::InvalidArgument("need at least two densities".into()));
    }
    let refined: Vec<GridDensity> = f_list.iter().map(|f| f.refined(2)).collect();
    let starred: Vec<GridDensity> = f_list
        .iter()
        .map(|f| decreasing_rearrangement_grid(f).to_grid())
        .collect::<Result<_>>()?;
    let lhs = m_grid(&convolve_all(&refined)?).value();
    let rhs = m_grid(&convolve_all(&starred)?).value();
    Ok(MaxBoundReport {
        lhs,
        rhs,
        satisfied: lhs <= rhs + MAX_BOUND_TOL,
    })
}
