//! Linear images of independent vectors: Kronecker lifts, the frame of an
//! orthogonal projection, the kernel formula for the density of `TX` at 0,
//! the reduction to balls, and the end-to-end check of the projection
//! inequality `M(P^{(d)}X) ≤ c(d,k) ∏ M(Xᵢ)^{γᵢ}`.

mod monte_carlo;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ball_fourier::{c_constants, BallLaw};
use crate::error::{Error, Result};
use crate::measures::{convolve_all, m_grid, GridDensity};
use crate::rearrangement::preimage_box;

pub use monte_carlo::{McEstimate, McSettings, UCB_Z};

/// Tolerance of the projection identities `P² = P = Pᵀ`.
pub const PROJECTION_TOL: f64 = 1e-10;
/// Midpoint cells per axis for two-dimensional kernels.
pub const KERNEL_QUAD_CELLS: usize = 1024;

/// `T ⊗ I_d`: block `(i, j)` is `Tᵢⱼ·I_d`.
pub fn kronecker_lift(t: &DMatrix<f64>, d: usize) -> DMatrix<f64> {
    t.kronecker(&DMatrix::<f64>::identity(d, d))
}

/// Numerical rank from singular values above `1e-10·σ_max`.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > 1e-10 * top.max(1e-300)).count()
}

/// Frame `P = Σ aᵢ² uᵢuᵢᵀ` of an orthogonal projection with the exponent
/// vectors `γᵢ = aᵢ²` and `γᵢ = 1 − cᵢ²`, `cᵢ = |(I − P)eᵢ|`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectionDecomposition {
    pub n: usize,
    pub k: usize,
    pub a: Vec<f64>,
    /// `Peᵢ/|Peᵢ|`, absent when `aᵢ = 0`.
    pub u: Vec<Option<Vec<f64>>>,
    pub c: Vec<f64>,
    pub gamma_c1: Vec<f64>,
    pub gamma_c2: Vec<f64>,
}

impl ProjectionDecomposition {
    /// `max |Σ aᵢ² uᵢuᵢᵀ − P|`.
    pub fn reconstruction_residual(&self, p: &DMatrix<f64>) -> f64 {
        let mut sum = DMatrix::<f64>::zeros(self.n, self.n);
        for (a, u) in self.a.iter().zip(&self.u) {
            if let Some(u) = u {
                let v = DVector::from_column_slice(u);
                sum += (a * a) * &v * v.transpose();
            }
        }
        (sum - p).amax()
    }
}

/// Checks `P = Pᵀ` and `P² = P` within [`PROJECTION_TOL`].
pub fn check_projection(p: &DMatrix<f64>) -> Result<()> {
    if !p.is_square() || p.nrows() == 0 {
        return Err(Error::NotProjection(format!("matrix is {}×{}", p.nrows(), p.ncols())));
    }
    let asym = (p - p.transpose()).amax();
    if asym > PROJECTION_TOL {
        return Err(Error::NotProjection(format!("P ≠ Pᵀ (max deviation {asym:e})")));
    }
    let idem = (p * p - p).amax();
    if idem > PROJECTION_TOL {
        return Err(Error::NotProjection(format!("P² ≠ P (max deviation {idem:e})")));
    }
    Ok(())
}

pub fn decompose_projection(p: &DMatrix<f64>) -> Result<ProjectionDecomposition> {
    check_projection(p)?;
    let n = p.nrows();
    let k = p.trace().round() as usize;
    if k == 0 {
        return Err(Error::Degenerate("projection has rank 0".into()));
    }
    let eye = DMatrix::<f64>::identity(n, n);
    let q = &eye - p;
    let mut a = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    for i in 0..n {
        let col = p.column(i);
        let norm = col.norm();
        a.push(norm);
        u.push((norm > 1e-12).then(|| col.iter().map(|x| x / norm).collect()));
        c.push(q.column(i).norm());
    }
    let gamma_c1 = a.iter().map(|x| (x * x).clamp(0.0, 1.0)).collect();
    let gamma_c2 = c.iter().map(|x| (1.0 - x * x).clamp(0.0, 1.0)).collect();
    Ok(ProjectionDecomposition {
        n,
        k,
        a,
        u,
        c,
        gamma_c1,
        gamma_c2,
    })
}

/// Columns spanning `ker T`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelBasis {
    columns: DMatrix<f64>,
}

impl KernelBasis {
    /// Validates that `columns` is a basis of `ker T`.
    pub fn new(t: &DMatrix<f64>, columns: DMatrix<f64>) -> Result<Self> {
        if columns.nrows() != t.ncols() {
            return Err(Error::SizeMismatch {
                expected: t.ncols(),
                found: columns.nrows(),
            });
        }
        let expected = t.ncols() - numerical_rank(t);
        if columns.ncols() != expected {
            return Err(Error::InvalidArgument(format!(
                "kernel has dimension {expected}, got {} columns",
                columns.ncols()
            )));
        }
        if columns.ncols() > 0 {
            let image = (t * &columns).amax();
            if image > 1e-10 {
                return Err(Error::InvalidArgument(format!("T·A ≠ 0 (max {image:e})")));
            }
            let gram = (columns.transpose() * &columns).determinant();
            if gram <= 1e-12 {
                return Err(Error::Degenerate(format!("kernel columns are dependent (Gram {gram:e})")));
            }
        }
        Ok(KernelBasis { columns })
    }

    /// Orthonormal basis from the null eigenvectors of `TᵀT`.
    pub fn orthonormal(t: &DMatrix<f64>) -> Result<Self> {
        let n = t.ncols();
        let rank = numerical_rank(t);
        let eig = SymmetricEigen::new(t.transpose() * t);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let m = n - rank;
        let mut columns = DMatrix::<f64>::zeros(n, m);
        for (c, &i) in order[..m].iter().enumerate() {
            columns.set_column(c, &eig.eigenvectors.column(i));
        }
        KernelBasis::new(t, columns)
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }
}

/// `C = det(TTᵀ)^{-d/2}·det(AᵀA)^{d/2}`, so that
/// `f_{T^{(d)}X}(0) = C·∫ f(A^{(d)}y) dy`.
pub fn pushforward_constant(t: &DMatrix<f64>, basis: &KernelBasis, d: usize) -> Result<f64> {
    let ttt = (t * t.transpose()).determinant();
    if numerical_rank(t) < t.nrows() || ttt <= 0.0 {
        return Err(Error::Degenerate("T is rank deficient".into()));
    }
    let a = basis.columns();
    let gram = if a.ncols() == 0 {
        1.0
    } else {
        (a.transpose() * a).determinant()
    };
    let h = d as f64 / 2.0;
    Ok(ttt.powf(-h) * gram.powf(h))
}

/// Density of `TX` at 0 for independent `Xᵢ ~ fᵢ` on the line, through the
/// kernel integral. Kernels of dimension 1 are integrated exactly between
/// breakpoints; dimension 2 uses midpoint quadrature.
pub fn density_at_zero_kernel_integral(f_list: &[GridDensity], t: &DMatrix<f64>) -> Result<f64> {
    let n = t.ncols();
    if f_list.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            found: f_list.len(),
        });
    }
    if t.nrows() == 0 || t.nrows() > 2 {
        return Err(Error::DimensionCap(format!("T must have 1 or 2 rows, got {}", t.nrows())));
    }
    let basis = KernelBasis::orthonormal(t)?;
    let constant = pushforward_constant(t, &basis, 1)?;
    let a = basis.columns();
    let integral = match basis.dim() {
        0 => f_list.iter().map(|f| f.eval(0.0)).product(),
        1 => line_integral(f_list, a),
        2 => plane_integral(f_list, a)?,
        m => {
            return Err(Error::DimensionCap(format!(
                "kernel dimension {m} exceeds the quadrature cap of 2"
            )))
        }
    };
    Ok(constant * integral)
}

// ∫ ∏ fᵢ(aᵢ y) dy for a single kernel direction; the integrand is constant
// between consecutive cell-edge crossings.
fn line_integral(f_list: &[GridDensity], a: &DMatrix<f64>) -> f64 {
    let mut constant = 1.0;
    let mut cuts = Vec::new();
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (i, f) in f_list.iter().enumerate() {
        let w = a[(i, 0)];
        if w.abs() < 1e-14 {
            constant *= f.eval(0.0);
            continue;
        }
        for j in 0..=f.len() {
            cuts.push((f.left() + j as f64 * f.step()) / w);
        }
        let (s0, s1) = f.support();
        let (e0, e1) = (s0 / w, s1 / w);
        lo = lo.max(e0.min(e1));
        hi = hi.min(e0.max(e1));
    }
    if constant == 0.0 || !(hi > lo) {
        return 0.0;
    }
    cuts.retain(|&y| y > lo && y < hi);
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(|x, y| x.total_cmp(y));
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let value: f64 = f_list
            .iter()
            .enumerate()
            .filter(|(i, _)| a[(*i, 0)].abs() >= 1e-14)
            .map(|(i, f)| f.eval(a[(i, 0)] * mid))
            .product();
        total += value * len;
    }
    constant * total
}

fn plane_integral(f_list: &[GridDensity], a: &DMatrix<f64>) -> Result<f64> {
    let supports: Vec<(f64, f64)> = f_list.iter().map(GridDensity::support).collect();
    let bounds = preimage_box(&supports, a)?;
    if bounds.iter().any(|&(lo, hi)| hi <= lo) {
        return Ok(0.0);
    }
    let cells = KERNEL_QUAD_CELLS;
    let hx = (bounds[0].1 - bounds[0].0) / cells as f64;
    let hy = (bounds[1].1 - bounds[1].0) / cells as f64;
    let mut rows = Vec::with_capacity(cells);
    for i in 0..cells {
        let x = bounds[0].0 + (i as f64 + 0.5) * hx;
        let mut acc = Vec::with_capacity(cells);
        for j in 0..cells {
            let y = bounds[1].0 + (j as f64 + 0.5) * hy;
            let v: f64 = f_list
                .iter()
                .enumerate()
                .map(|(r, f)| f.eval(a[(r, 0)] * x + a[(r, 1)] * y))
                .product();
            acc.push(v);
        }
        rows.push(crate::quadrature::pairwise_sum(&acc));
    }
    Ok(crate::quadrature::pairwise_sum(&rows) * hx * hy)
}

/// Unit vector `θᵢ ∝ Mᵢ^{-1/d}` and scale `κ = (Σ Mⱼ^{-2/d})^{1/2}`;
/// `Mᵢ = ∞` gives `θᵢ = 0`.
pub fn normalize_summands(m_list: &[f64], d: usize) -> Result<(Vec<f64>, f64)> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    if m_list.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::InvalidArgument("M values must be positive".into()));
    }
    let w: Vec<f64> = m_list
        .iter()
        .map(|&m| if m.is_infinite() { 0.0 } else { m.powf(-1.0 / d as f64) })
        .collect();
    let kappa = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if kappa == 0.0 {
        return Err(Error::Degenerate("every summand is a point mass".into()));
    }
    Ok((w.iter().map(|x| x / kappa).collect(), kappa))
}

/// Ball law with the same `M`, or a point mass at 0 when `M = ∞`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ReducedLaw {
    Ball(BallLaw),
    Dirac,
}

pub fn rogozin_reduce(m_list: &[f64], d: usize) -> Result<Vec<ReducedLaw>> {
    m_list
        .iter()
        .map(|&m| {
            if m.is_infinite() {
                Ok(ReducedLaw::Dirac)
            } else {
                BallLaw::with_m(d, m).map(ReducedLaw::Ball)
            }
        })
        .collect()
}

/// `QQᵀ` for the thin QR factor of an `n×k` Gaussian matrix.
pub fn random_projection<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("need 1 ≤ k ≤ n, got k = {k}, n = {n}")));
    }
    let g = DMatrix::<f64>::from_fn(n, k, |_, _| rng.sample(StandardNormal));
    let q = g.qr().q();
    Ok(&q * q.transpose())
}

pub fn random_projection_seeded(n: usize, k: usize, seed: u64) -> Result<DMatrix<f64>> {
    random_projection(n, k, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `VᵀV` for a `k×n` matrix `V` with orthonormal rows.
pub fn projection_from_span(rows: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = rows.nrows();
    let gram = rows * rows.transpose();
    let dev = (gram - DMatrix::<f64>::identity(k, k)).amax();
    if dev > PROJECTION_TOL {
        return Err(Error::NotProjection(format!("span rows are not orthonormal (deviation {dev:e})")));
    }
    Ok(rows.transpose() * rows)
}

/// JSON form of a projection: an explicit matrix or orthonormal rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ProjectionJson {
    Matrix { matrix: Vec<Vec<f64>> },
    Span { span: Vec<Vec<f64>> },
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(Error::InvalidArgument("matrix rows must be nonempty and equal length".into()));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl ProjectionJson {
    pub fn into_matrix(self) -> Result<DMatrix<f64>> {
        let p = match self {
            ProjectionJson::Matrix { matrix } => rows_to_matrix(&matrix)?,
            ProjectionJson::Span { span } => projection_from_span(&rows_to_matrix(&span)?)?,
        };
        check_projection(&p)?;
        Ok(p)
    }

    pub fn from_json_str(text: &str) -> Result<DMatrix<f64>> {
        let parsed: ProjectionJson =
            serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("bad projection JSON: {e}")))?;
        parsed.into_matrix()
    }
}

/// A summand of the projection inequality.
#[derive(Clone, Debug, PartialEq)]
pub enum EpiInput {
    Ball(BallLaw),
    /// Line only.
    Grid(GridDensity),
}

impl EpiInput {
    pub fn m(&self) -> f64 {
        match self {
            EpiInput::Ball(b) => b.m(),
            EpiInput::Grid(g) => m_grid(g).value(),
        }
    }

    fn dimension(&self) -> usize {
        match self {
            EpiInput::Ball(b) => b.dimension,
            EpiInput::Grid(_) => 1,
        }
    }

    // Law of t·X on the line as a grid of width `step`.
    fn scaled_grid(&self, t: f64, step: f64) -> Result<GridDensity> {
        match self {
            EpiInput::Ball(b) => {
                let r = t.abs() * b.radius;
                GridDensity::uniform_interval(-r, r, step)
            }
            EpiInput::Grid(g) => g.scaled(t)?.resampled(step),
        }
    }

    /// Interval containing the support on the line, or the radius bound.
    fn extent(&self) -> (f64, f64) {
        match self {
            EpiInput::Ball(b) => (-b.radius, b.radius),
            EpiInput::Grid(g) => g.support(),
        }
    }
}

/// How the left side is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpiMethod {
    /// Grid convolution when `d = k = 1`, Monte Carlo otherwise.
    Auto,
    Grid,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaBranch {
    C1,
    C2,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpiReport {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    /// Point estimate of `M(P^{(d)}X)`.
    pub lhs: f64,
    /// Value compared against `rhs`: the upper confidence bound in Monte
    /// Carlo mode, the refined grid value otherwise.
    pub lhs_bound: f64,
    pub rhs: f64,
    pub c: f64,
    pub branch: GammaBranch,
    pub gamma: Vec<f64>,
    pub error_estimate: f64,
    pub method: EpiMethod,
    pub samples: u64,
    pub satisfied: bool,
}

/// Relative slack of the grid pipeline on top of its refinement error.
pub const GRID_REL_TOL: f64 = 1e-9;
// Finest-level cells across the narrowest scaled summand.
const GRID_RESOLUTION: f64 = 2000.0;

/// Checks `M(P^{(d)}X) ≤ c(d,k) ∏ M(Xᵢ)^{γᵢ}`.
pub fn verify_epi(
    inputs: &[EpiInput],
    p: &DMatrix<f64>,
    d: usize,
    method: EpiMethod,
    mc: &McSettings,
    seed: u64,
) -> Result<EpiReport> {
    let dec = decompose_projection(p)?;
    let n = dec.n;
    if inputs.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            found: inputs.len(),
        });
    }
    if let Some(bad) = inputs.iter().find(|x| x.dimension() != d) {
        return Err(Error::InvalidArgument(format!(
            "summand of dimension {} in a dimension-{d} check",
            bad.dimension()
        )));
    }
    let k = dec.k;
    let cc = c_constants(d, k, n)?;
    let (branch, gamma) = if cc.c1 <= cc.c2 {
        (GammaBranch::C1, dec.gamma_c1.clone())
    } else {
        (GammaBranch::C2, dec.gamma_c2.clone())
    };
    let rhs = cc.c
        * inputs
            .iter()
            .zip(&gamma)
            .map(|(x, g)| x.m().powf(*g))
            .product::<f64>();
    let method = match method {
        EpiMethod::Auto if d == 1 && k == 1 => EpiMethod::Grid,
        EpiMethod::Auto => EpiMethod::MonteCarlo,
        m => m,
    };
    let (lhs, lhs_bound, error, samples) = match method {
        EpiMethod::Grid => {
            if d != 1 || k != 1 {
                return Err(Error::InvalidArgument("grid evaluation needs d = k = 1".into()));
            }
            let (fine, coarse) = grid_lhs(inputs, &dec)?;
            let err = (fine - coarse).abs();
            (fine, fine, err, 0)
        }
        _ => {
            let basis = range_basis(p, k);
            let est = monte_carlo::estimate_max(inputs, &basis, d, mc, seed)?;
            (est.estimate, est.upper_bound, est.upper_bound - est.estimate, est.samples)
        }
    };
    let satisfied = match method {
        EpiMethod::Grid => lhs_bound <= rhs * (1.0 + GRID_REL_TOL) + error,
        _ => lhs_bound <= rhs,
    };
    Ok(EpiReport {
        n,
        k,
        d,
        lhs,
        lhs_bound,
        rhs,
        c: cc.c,
        branch,
        gamma,
        error_estimate: error,
        method,
        samples,
        satisfied,
    })
}

// Orthonormal basis of range(P) as the columns of an n×k matrix.
fn range_basis(p: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let n = p.nrows();
    let eig = SymmetricEigen::new(p.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let mut v = DMatrix::<f64>::zeros(n, k);
    for (c, &i) in order[..k].iter().enumerate() {
        v.set_column(c, &eig.eigenvectors.column(i));
    }
    v
}

// M of Σ uᵢXᵢ for P = uuᵀ on the line, at two grid resolutions.
fn grid_lhs(inputs: &[EpiInput], dec: &ProjectionDecomposition) -> Result<(f64, f64)> {
    // P eⱼ/|P eⱼ| spans the range up to sign
    let j = (0..dec.n)
        .max_by(|&x, &y| dec.a[x].total_cmp(&dec.a[y]))
        .unwrap();
    let u = dec.u[j].as_ref().ok_or_else(|| Error::Degenerate("zero projection".into()))?;
    let weights: Vec<(f64, &EpiInput)> = u
        .iter()
        .zip(inputs)
        .filter(|(w, _)| w.abs() > 1e-14)
        .map(|(w, x)| (*w, x))
        .collect();
    let narrowest = weights
        .iter()
        .map(|(w, x)| {
            let (lo, hi) = x.extent();
            w.abs() * (hi - lo)
        })
        .fold(f64::INFINITY, f64::min);
    let step = narrowest / GRID_RESOLUTION;
    let at = |h: f64| -> Result<f64> {
        let grids: Vec<GridDensity> = weights
            .iter()
            .map(|(w, x)| x.scaled_grid(*w, h))
            .collect::<Result<_>>()?;
        Ok(m_grid(&convolve_all(&grids)?).value())
    };
    let coarse = at(2.0 * step)?;
    let fine = at(step)?;
    Ok((fine, coarse))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn m(rows: &[&[f64]]) -> DMatrix<f64> {
        let v: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        rows_to_matrix(&v).unwrap()
    }

    #[test]
    fn lift_examples() {
        let t = m(&[&[1.0, 1.0]]);
        assert_eq!(kronecker_lift(&t, 2), m(&[&[1.0, 0.0, 1.0, 0.0], &[0.0, 1.0, 0.0, 1.0]]));
        assert_eq!(kronecker_lift(&t, 1), t);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = DMatrix::<f64>::from_fn(2, 3, |_, _| rng.sample(StandardNormal));
            let b = DMatrix::<f64>::from_fn(3, 2, |_, _| rng.sample(StandardNormal));
            for d in 1..4 {
                let lhs = kronecker_lift(&(&a * &b), d);
                let rhs = kronecker_lift(&a, d) * kronecker_lift(&b, d);
                assert!((lhs - rhs).amax() < 1e-12);
                assert_eq!(numerical_rank(&kronecker_lift(&a, d)), 2 * d);
            }
        }
    }

    #[test]
    fn decomposition_of_diagonal_line() {
        let p = m(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let dec = decompose_projection(&p).unwrap();
        assert_eq!(dec.k, 1);
        for i in 0..2 {
            assert!((dec.a[i] - FRAC_1_SQRT_2).abs() < 1e-15);
            assert!((dec.gamma_c1[i] - 0.5).abs() < 1e-15);
            assert!((dec.gamma_c2[i] - 0.5).abs() < 1e-15);
            assert!((dec.c[i] * dec.c[i] - 0.5).abs() < 1e-15);
        }
        assert!(dec.reconstruction_residual(&p) < 1e-15);
    }

    #[test]
    fn decomposition_identities_on_random_projections() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=12 {
            for k in 1..=n {
                let p = random_projection(n, k, &mut rng).unwrap();
                let dec = decompose_projection(&p).unwrap();
                assert_eq!(dec.k, k);
                let sa: f64 = dec.a.iter().map(|x| x * x).sum();
                let sc: f64 = dec.c.iter().map(|x| x * x).sum();
                assert!((sa - k as f64).abs() < 1e-10);
                assert!((sc - (n - k) as f64).abs() < 1e-10);
                assert!(dec.reconstruction_residual(&p) < 1e-10);
                for g in [&dec.gamma_c1, &dec.gamma_c2] {
                    assert!(g.iter().all(|x| (0.0..=1.0).contains(x)));
                    assert!((g.iter().sum::<f64>() - k as f64).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn non_projections_are_rejected() {
        let err = decompose_projection(&m(&[&[1.0, 1.0], &[0.0, 0.0]])).unwrap_err();
        assert!(err.to_string().contains("Pᵀ"), "{err}");
        let err = decompose_projection(&m(&[&[2.0, 0.0], &[0.0, 0.0]])).unwrap_err();
        assert!(err.to_string().contains("P²"), "{err}");
    }

    #[test]
    fn pushforward_constant_examples() {
        let t = m(&[&[1.0, 1.0]]);
        let a = KernelBasis::new(&t, m(&[&[1.0], &[-1.0]])).unwrap();
        assert!((pushforward_constant(&t, &a, 1).unwrap() - 1.0).abs() < 1e-15);
        let t2 = m(&[&[2.0]]);
        let empty = KernelBasis::new(&t2, DMatrix::zeros(1, 0)).unwrap();
        assert!((pushforward_constant(&t2, &empty, 1).unwrap() - 0.5).abs() < 1e-15);
        let unit = m(&[&[0.6, 0.8, 0.0]]);
        let on = KernelBasis::orthonormal(&unit).unwrap();
        for d in 1..4 {
            assert!((pushforward_constant(&unit, &on, d).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(KernelBasis::new(&t, m(&[&[1.0], &[1.0]])).is_err());
    }

    #[test]
    fn kernel_integral_examples() {
        let u = GridDensity::uniform_interval(0.0, 1.0, 0.125).unwrap();
        let v = density_at_zero_kernel_integral(&[u.clone(), u.clone()], &m(&[&[1.0, -1.0]])).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let c = GridDensity::uniform_interval(-0.5, 0.5, 0.125).unwrap();
        let v = density_at_zero_kernel_integral(&[c.clone(), c.clone()], &m(&[&[1.0, 1.0]])).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let v = density_at_zero_kernel_integral(&[c.clone(), c.clone()], &m(&[&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]]))
            .unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-12);
        let v = density_at_zero_kernel_integral(std::slice::from_ref(&c), &m(&[&[2.0]])).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        // three summands, two-dimensional kernel: density at 0 of the sum of
        // three centered unit uniforms is 3/4
        let v = density_at_zero_kernel_integral(&[c.clone(), c.clone(), c.clone()], &m(&[&[1.0, 1.0, 1.0]]))
            .unwrap();
        assert!((v - 0.75).abs() < 5e-3, "{v}");
        assert!(matches!(
            density_at_zero_kernel_integral(&[c.clone(), c.clone(), c.clone(), c], &m(&[&[1.0, 1.0, 1.0, 1.0]])),
            Err(Error::DimensionCap(_))
        ));
    }

    #[test]
    fn normalization_examples() {
        let (t, k) = normalize_summands(&[1.0, 1.0], 1).unwrap();
        assert!((t[0] - FRAC_1_SQRT_2).abs() < 1e-15 && (k - 2f64.sqrt()).abs() < 1e-15);
        let (t, k) = normalize_summands(&[1.0, f64::INFINITY], 1).unwrap();
        assert_eq!((t, k), (vec![1.0, 0.0], 1.0));
        let (t, k) = normalize_summands(&[1.0, 4.0], 2).unwrap();
        assert!((t[0] - 2.0 / 5f64.sqrt()).abs() < 1e-15);
        assert!((t[1] - 1.0 / 5f64.sqrt()).abs() < 1e-15);
        assert!((k - 5f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(normalize_summands(&[f64::INFINITY], 1).is_err());
    }

    #[test]
    fn reduction_examples() {
        use crate::ball_fourier::unit_volume_radius;
        let r = rogozin_reduce(&[1.0, f64::INFINITY, 8.0], 2).unwrap();
        match r[0] {
            ReducedLaw::Ball(b) => assert!((b.radius - std::f64::consts::PI.powf(-0.5)).abs() < 1e-15),
            _ => panic!(),
        }
        assert_eq!(r[1], ReducedLaw::Dirac);
        let r = rogozin_reduce(&[8.0], 3).unwrap();
        match r[0] {
            ReducedLaw::Ball(b) => assert!((b.radius - unit_volume_radius(3) / 2.0).abs() < 1e-14),
            _ => panic!(),
        }
    }

    #[test]
    fn projection_json() {
        let p = ProjectionJson::from_json_str(r#"{"span": [[0.6, 0.8]]}"#).unwrap();
        assert!((p[(0, 1)] - 0.48).abs() < 1e-15);
        let q = ProjectionJson::from_json_str(r#"{"matrix": [[1, 0], [0, 0]]}"#).unwrap();
        assert_eq!(q[(0, 0)], 1.0);
        assert!(ProjectionJson::from_json_str(r#"{"span": [[1, 1]]}"#).is_err());
        assert!(ProjectionJson::from_json_str(r#"{"matrix": [[1, 1], [0, 0]]}"#).is_err());
    }

    #[test]
    fn epi_examples() {
        let mc = McSettings::default();
        let ball = EpiInput::Ball(BallLaw::new(1, 0.5).unwrap());
        let id = DMatrix::<f64>::identity(1, 1);
        let r = verify_epi(std::slice::from_ref(&ball), &id, 1, EpiMethod::Auto, &mc, 0).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-3 && r.satisfied);
        let p = m(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let r = verify_epi(&[ball.clone(), ball], &p, 1, EpiMethod::Auto, &mc, 0).unwrap();
        assert_eq!(r.method, EpiMethod::Grid);
        assert!((r.rhs - 2f64.sqrt()).abs() < 1e-12);
        assert!((r.lhs - 2f64.sqrt()).abs() < 1e-3, "{}", r.lhs);
        assert!(r.satisfied);
    }
}
