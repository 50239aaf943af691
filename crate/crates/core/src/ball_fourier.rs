//! Uniform laws on Euclidean balls: characteristic functions, radial Fourier
//! inversion for `M` of weighted sums, the `L^p` integral of the
//! characteristic function, and the closed-form constants built on them.
//!
//! The characteristic function of the uniform law on the ball of radius `r`
//! in ℝᵈ is `φ(ξ) = φ_d(r|ξ|)` with
//!
//! ```text
//! φ_d(σ) = (2/B) ∫₀^{π/2} cos(σ sin t) cosᵈ t dt,   B = B(1/2, (d+1)/2),
//! ```
//!
//! the cosine transform of the one-coordinate marginal `∝ (1 − x²)^{(d−1)/2}`.
//! For large `σ`, `φ_d(σ) ≈ A σ^{-μ} cos(σ − ψ)` with `ν = d/2`, `μ = ν + 1/2`,
//! `A = Γ(ν+1) 2^ν √(2/π)` and `ψ = νπ/2 + π/4`. Radial integrals are
//! truncated where the phase `λ_min T − ψ` is a multiple of `π`, and the
//! neglected tail is replaced by the integral of its non-oscillating part.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature::{gl12, gl16, pairwise_sum, PANEL_NODES};

/// Tail estimate above which [`charfun_pnorm_integral`] reports
/// non-convergence.
pub const PNORM_TOL: f64 = 1e-8;
/// Relative slack in the `L^p` bound check.
pub const LEMMA_REL_TOL: f64 = 1e-6;
/// Minimum node count of a [`QuadratureSpec`].
pub const MIN_NODES: usize = 64;
/// Default node count of a [`QuadratureSpec`].
pub const DEFAULT_NODES: usize = 4096;
/// Default truncation in units of `1/λ_min`.
pub const DEFAULT_TRUNCATION_SCALE: f64 = 400.0;

// Integration stops early once the envelope tail bound drops below this.
const EARLY_STOP_TOL: f64 = 1e-14;
// Safety factor on the large-argument amplitude in the envelope bound.
const ENVELOPE_SLACK: f64 = 1.25;
// Above this dimension the envelope bound is not used.
const ENVELOPE_MAX_DIM: usize = 20;
// Default truncation is doubled at most this many times.
const MAX_DOUBLINGS: usize = 8;
// Panel width of cached φ tables.
const TABLE_PANEL: f64 = PI / 8.0;
// Smallest argument at which the Hankel expansion replaces quadrature.
const HANKEL_MIN_ARG: f64 = 60.0;
// Resonant-term enumeration is skipped above this many tuples.
const MAX_RESONANT_TUPLES: u128 = 1_000_000;

/// Uniform law on the origin-centered ball of radius `radius` in ℝᵈ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallLaw {
    pub dimension: usize,
    pub radius: f64,
}

impl BallLaw {
    pub fn new(dimension: usize, radius: f64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
        }
        Ok(BallLaw { dimension, radius })
    }

    pub fn unit_volume(d: usize) -> Self {
        BallLaw {
            dimension: d,
            radius: unit_volume_radius(d),
        }
    }

    /// Ball whose density equals `m` on its support.
    pub fn with_m(d: usize, m: f64) -> Result<Self> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::InvalidArgument(format!("M must be positive and finite, got {m}")));
        }
        BallLaw::new(d, (1.0 / (unit_ball_volume(d) * m)).powf(1.0 / d as f64))
    }

    /// `1/(ω_d rᵈ)`.
    pub fn m(&self) -> f64 {
        1.0 / (unit_ball_volume(self.dimension) * self.radius.powi(self.dimension as i32))
    }

    pub fn charfun(&self, s: f64) -> f64 {
        ball_charfun(self.dimension, self.radius, s)
    }
}

/// `ω_d = π^{d/2}/Γ(1 + d/2)`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    (h * PI.ln() - ln_gamma(h + 1.0)).exp()
}

/// `Γ(1 + d/2)^{1/d} π^{-1/2}`.
pub fn unit_volume_radius(d: usize) -> f64 {
    assert!(d >= 1);
    (ln_gamma(1.0 + d as f64 / 2.0) / d as f64).exp() / PI.sqrt()
}

/// Surface area `2π^{d/2}/Γ(d/2)` of the unit sphere in ℝᵈ.
pub fn unit_sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * (h * PI.ln() - ln_gamma(h)).exp()
}

fn marginal_norm(d: usize) -> f64 {
    // B(1/2, (d+1)/2)
    let a = (d as f64 + 1.0) / 2.0;
    (ln_gamma(0.5) + ln_gamma(a) - ln_gamma(a + 0.5)).exp()
}

/// Hankel expansion of `Γ(ν+1)(2/σ)^ν J_ν(σ)`, or `None` when `σ` is too
/// small for it to reach double precision.
fn charfun_hankel(d: usize, sigma: f64) -> Option<f64> {
    let nu = d as f64 / 2.0;
    let mu4 = 4.0 * nu * nu;
    if sigma < HANKEL_MIN_ARG.max(mu4) {
        return None;
    }
    let (mut p, mut q) = (1.0, 0.0);
    let mut term = 1.0f64;
    let mut k = 1;
    loop {
        let odd = (2 * k - 1) as f64;
        term *= (mu4 - odd * odd) / (k as f64 * 8.0 * sigma);
        if term == 0.0 || term.abs() < 1e-18 {
            break;
        }
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 1 {
            q += sign * term;
        } else {
            p += sign * term;
        }
        k += 1;
        if k > 60 {
            return None;
        }
    }
    let a = asymptotics(d);
    let w = sigma - a.phase;
    Some(a.amplitude * sigma.powf(-a.decay) * (p * w.cos() - q * w.sin()))
}

/// `φ_d(σ)` for the unit ball: composite 12-point Gauss–Legendre quadrature
/// of the marginal cosine transform, or the Hankel expansion for large `σ`.
fn charfun_unit(d: usize, sigma: f64, norm: f64) -> f64 {
    let sigma = sigma.abs();
    if sigma == 0.0 {
        return 1.0;
    }
    if let Some(v) = charfun_hankel(d, sigma) {
        return v;
    }
    let (x, w) = gl12();
    let panels = ((sigma / 3.0).ceil() as usize).max(2);
    let width = PI / 2.0 / panels as f64;
    let half = width / 2.0;
    let mut parts = Vec::with_capacity(panels);
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * width;
        let mut acc = 0.0;
        for (xi, wi) in x.iter().zip(w) {
            let t = mid + half * xi;
            let c = t.cos();
            acc += wi * (sigma * t.sin()).cos() * c.powi(d as i32);
        }
        parts.push(acc * half);
    }
    2.0 * pairwise_sum(&parts) / norm
}

/// `E[cos(s·Z₁)]` for `Z` uniform on the ball of radius `r` in ℝᵈ.
pub fn ball_charfun(d: usize, r: f64, s: f64) -> f64 {
    assert!(d >= 1);
    charfun_unit(d, r * s, marginal_norm(d))
}

/// Large-argument behavior `φ_d(σ) ≈ amplitude·σ^{-decay}·cos(σ − phase)`.
#[derive(Clone, Copy, Debug)]
struct Asymptotics {
    amplitude: f64,
    decay: f64,
    phase: f64,
}

fn asymptotics(d: usize) -> Asymptotics {
    let nu = d as f64 / 2.0;
    Asymptotics {
        amplitude: (ln_gamma(nu + 1.0) + nu * 2f64.ln()).exp() * (2.0 / PI).sqrt(),
        decay: nu + 0.5,
        phase: nu * PI / 2.0 + PI / 4.0,
    }
}

/// Envelope `min(1, C·A·σ^{-μ})` dominating `|φ_d(σ)|`.
pub fn charfun_envelope(d: usize, sigma: f64) -> f64 {
    let a = asymptotics(d);
    (ENVELOPE_SLACK * a.amplitude * sigma.powf(-a.decay)).min(1.0)
}

/// Rule used on each radial panel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadScheme {
    Midpoint,
    GaussLegendrePanels,
}

/// Knobs of the radial quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Radial truncation in `s`. `None` starts at `400/λ_min` and is extended
    /// until the tail estimate meets tolerance.
    pub truncation_radius: Option<f64>,
    /// Lower bound on the total number of radial nodes.
    pub nodes: usize,
    pub scheme: QuadScheme,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            truncation_radius: None,
            nodes: DEFAULT_NODES,
            scheme: QuadScheme::GaussLegendrePanels,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < MIN_NODES {
            return Err(Error::InvalidArgument(format!(
                "quadrature needs at least {MIN_NODES} nodes, got {}",
                self.nodes
            )));
        }
        if let Some(t) = self.truncation_radius {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::InvalidArgument(format!("truncation must be positive, got {t}")));
            }
        }
        Ok(())
    }
}

fn panel_rule(scheme: QuadScheme) -> (Vec<f64>, Vec<f64>) {
    match scheme {
        QuadScheme::GaussLegendrePanels => gl16().clone(),
        QuadScheme::Midpoint => {
            let n = PANEL_NODES;
            let x = (0..n).map(|i| -1.0 + (2 * i + 1) as f64 / n as f64).collect();
            (x, vec![2.0 / n as f64; n])
        }
    }
}

/// Value of a radial integral with its error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntegralEstimate {
    pub value: f64,
    pub error_estimate: f64,
    /// Upper end of the radial integration in `s`.
    pub truncation: f64,
    /// Analytic tail added past the truncation.
    pub tail_correction: f64,
    pub nodes: usize,
    /// True when the envelope bound allowed stopping before the truncation.
    pub early_stop: bool,
}

// Smallest σ ≥ start with σ − ψ a multiple of π.
fn aligned(start: f64, phase: f64) -> f64 {
    let k = ((start - phase) / PI).ceil().max(1.0);
    phase + k * PI
}

// φ_{d,1} at the nodes of consecutive π/8-wide panels, shared by every p and
// radius.
type TableKey = (usize, QuadScheme);

fn table_cache() -> &'static Mutex<HashMap<TableKey, Vec<f64>>> {
    static CACHE: OnceLock<Mutex<HashMap<TableKey, Vec<f64>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn unit_table(d: usize, scheme: QuadScheme, panels: usize) -> Vec<f64> {
    let needed = panels * PANEL_NODES;
    {
        let cache = table_cache().lock().unwrap();
        if let Some(t) = cache.get(&(d, scheme)) {
            if t.len() >= needed {
                return t[..needed].to_vec();
            }
        }
    }
    let (x, _) = panel_rule(scheme);
    let norm = marginal_norm(d);
    let mut cache = table_cache().lock().unwrap();
    let table = cache.entry((d, scheme)).or_default();
    let have = table.len() / PANEL_NODES;
    for p in have..panels {
        let mid = (p as f64 + 0.5) * TABLE_PANEL;
        for xi in &x {
            table.push(charfun_unit(d, mid + 0.5 * TABLE_PANEL * xi, norm));
        }
    }
    table[..needed].to_vec()
}

/// `(2π)^{-d} ∫_{ℝᵈ} |φ(ξ)|^p dξ` for the ball of radius `r`.
///
/// The radial integral is reduced to the unit ball by
/// `∫|φ_r(s)|^p s^{d-1} ds = r^{-d} ∫|φ_1(σ)|^p σ^{d-1} dσ`.
pub fn charfun_pnorm_integral(d: usize, r: f64, p: f64, quad: &QuadratureSpec) -> Result<IntegralEstimate> {
    quad.validate()?;
    if d == 0 || !(r > 0.0) {
        return Err(Error::InvalidArgument("need d ≥ 1 and r > 0".into()));
    }
    if !(p >= 2.0) || !p.is_finite() {
        return Err(Error::OutOfHypothesis(format!("exponent must be at least 2, got {p}")));
    }
    let asy = asymptotics(d);
    let prefactor = (2.0 * PI).powi(-(d as i32)) * unit_sphere_area(d) * r.powi(-(d as i32));
    let a = asy.decay * p - d as f64 + 1.0;
    let mean = abs_cos_mean(p);
    let tail_at = |sigma: f64| prefactor * asy.amplitude.powf(p) * mean * sigma.powf(1.0 - a) / (a - 1.0);
    let residual_at = |sigma: f64| tail_at(sigma).abs() * (1.0 + (d * d) as f64 + a * (a - 1.0) / 4.0) / (sigma * sigma);

    let base = DEFAULT_TRUNCATION_SCALE;
    let sigma_t = match quad.truncation_radius {
        Some(t) => aligned(t * r, asy.phase),
        None => {
            let mut s = aligned(base, asy.phase);
            for _ in 0..MAX_DOUBLINGS {
                if residual_at(s) <= PNORM_TOL / 10.0 {
                    break;
                }
                s = aligned(2.0 * s, asy.phase);
            }
            s
        }
    };
    // σ − ψ = kπ with ψ = (d+1)π/4 makes σ a multiple of π/8
    let panels = ((sigma_t / TABLE_PANEL).round() as usize).max(quad.nodes.div_ceil(PANEL_NODES));
    let sigma_t = panels as f64 * TABLE_PANEL;
    let table = unit_table(d, quad.scheme, panels);
    let (x, w) = panel_rule(quad.scheme);
    let half = TABLE_PANEL / 2.0;

    let envelope_ok = d <= ENVELOPE_MAX_DIM;
    let log_k = p * (ENVELOPE_SLACK * asy.amplitude).ln() + prefactor.ln() - (a - 1.0).ln();
    let mut parts = Vec::with_capacity(panels);
    let mut used = panels;
    let mut early = None;
    for q in 0..panels {
        let mid = (q as f64 + 0.5) * TABLE_PANEL;
        let mut acc = 0.0;
        for (i, (xi, wi)) in x.iter().zip(&w).enumerate() {
            let sigma = mid + half * xi;
            let phi = table[q * PANEL_NODES + i].abs();
            acc += wi * phi.powf(p) * sigma.powi(d as i32 - 1);
        }
        parts.push(acc * half);
        let end = (q + 1) as f64 * TABLE_PANEL;
        if envelope_ok && end > 1.0 {
            let log_bound = log_k + (1.0 - a) * end.ln();
            if log_bound < EARLY_STOP_TOL.ln() {
                used = q + 1;
                early = Some(log_bound.exp());
                break;
            }
        }
    }
    let body = prefactor * pairwise_sum(&parts);
    let (tail, error, truncation) = match early {
        Some(bound) => (0.0, bound, used as f64 * TABLE_PANEL / r),
        None => (tail_at(sigma_t), residual_at(sigma_t), sigma_t / r),
    };
    if error > PNORM_TOL {
        let suggested = truncation * (error / PNORM_TOL).powf(1.0 / (a + 1.0)) * 1.1;
        return Err(Error::NonConvergent {
            tail: error,
            tolerance: PNORM_TOL,
            suggested,
        });
    }
    Ok(IntegralEstimate {
        value: body + tail,
        error_estimate: error,
        truncation,
        tail_correction: tail,
        nodes: used * PANEL_NODES,
        early_stop: early.is_some(),
    })
}

/// Mean of `|cos|^p` over a period.
fn abs_cos_mean(p: f64) -> f64 {
    (ln_gamma((p + 1.0) / 2.0) - ln_gamma(p / 2.0 + 1.0)).exp() / PI.sqrt()
}

fn binom_f(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `M(θ₁Z₁ + ⋯ + θₙZₙ)` for independent `Zⱼ` uniform on balls of radii
/// `radii[j]` in ℝᵈ, as the density at 0 by radial Fourier inversion.
pub fn density_at_zero_sum_balls(
    d: usize,
    theta: &[f64],
    radii: &[f64],
    quad: &QuadratureSpec,
) -> Result<IntegralEstimate> {
    quad.validate()?;
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    if theta.len() != radii.len() {
        return Err(Error::SizeMismatch {
            expected: theta.len(),
            found: radii.len(),
        });
    }
    if radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Error::InvalidArgument("radii must be positive".into()));
    }
    let norm2: f64 = theta.iter().map(|t| t * t).sum();
    if (norm2.sqrt() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("|θ| = {} is not 1", norm2.sqrt())));
    }
    let mut lambdas: Vec<f64> = theta
        .iter()
        .zip(radii)
        .filter(|(t, _)| **t != 0.0)
        .map(|(t, r)| t.abs() * r)
        .collect();
    if lambdas.len() == 1 {
        return Ok(IntegralEstimate {
            value: BallLaw::new(d, lambdas[0])?.m(),
            error_estimate: 0.0,
            truncation: 0.0,
            tail_correction: 0.0,
            nodes: 0,
            early_stop: false,
        });
    }
    lambdas.sort_by(|a, b| a.total_cmp(b));
    // (λ, multiplicity) for identical scales
    let mut groups: Vec<(f64, usize)> = Vec::new();
    for l in lambdas {
        match groups.last_mut() {
            Some((g, c)) if (*g - l).abs() <= 1e-15 * l => *c += 1,
            _ => groups.push((l, 1)),
        }
    }
    let asy = asymptotics(d);
    let total: usize = groups.iter().map(|g| g.1).sum();
    let lambda_min = groups[0].0;
    let lambda_sum: f64 = groups.iter().map(|(l, c)| l * *c as f64).sum();
    let prefactor = (2.0 * PI).powi(-(d as i32)) * unit_sphere_area(d);
    let a = asy.decay * total as f64 - d as f64 + 1.0;
    let log_amp: f64 = groups
        .iter()
        .map(|&(l, c)| c as f64 * (asy.amplitude.ln() - asy.decay * l.ln()))
        .sum();

    let t_end = {
        let base = quad
            .truncation_radius
            .unwrap_or(DEFAULT_TRUNCATION_SCALE / lambda_min);
        aligned(base * lambda_min, asy.phase) / lambda_min
    };
    let width = (PI / (2.0 * lambda_sum)).min(t_end / quad.nodes.div_ceil(PANEL_NODES) as f64);
    let panels = (t_end / width).ceil() as usize;
    let width = t_end / panels as f64;
    let (x, w) = panel_rule(quad.scheme);
    let norm = marginal_norm(d);
    let half = width / 2.0;

    let envelope_ok = d <= ENVELOPE_MAX_DIM;
    let log_k = log_amp + total as f64 * ENVELOPE_SLACK.ln() + prefactor.ln() - (a - 1.0).ln();
    let mut parts = Vec::with_capacity(panels);
    let mut early = None;
    let mut used = panels;
    for q in 0..panels {
        let mid = (q as f64 + 0.5) * width;
        let mut acc = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            let s = mid + half * xi;
            let mut prod = 1.0;
            for &(l, c) in &groups {
                prod *= charfun_unit(d, l * s, norm).powi(c as i32);
            }
            acc += wi * prod * s.powi(d as i32 - 1);
        }
        parts.push(acc * half);
        let end = (q + 1) as f64 * width;
        if envelope_ok && end * lambda_min > 1.0 {
            let log_bound = log_k + (1.0 - a) * end.ln();
            if log_bound < EARLY_STOP_TOL.ln() {
                used = q + 1;
                early = Some(log_bound.exp());
                break;
            }
        }
    }
    let body = prefactor * pairwise_sum(&parts);
    if let Some(bound) = early {
        return Ok(IntegralEstimate {
            value: body,
            error_estimate: bound,
            truncation: used as f64 * width,
            tail_correction: 0.0,
            nodes: used * PANEL_NODES,
            early_stop: true,
        });
    }
    let resonance = resonant_mean(&groups, asy.phase);
    let scale = prefactor * log_amp.exp() * t_end.powf(1.0 - a) / (a - 1.0);
    let (tail, error) = match resonance {
        Some((mean, leak)) => {
            let tail = scale * mean;
            let smooth = tail.abs() * (1.0 + (d * d) as f64 + a * (a - 1.0) / 4.0) / (lambda_min * t_end).powi(2);
            // unaligned oscillating terms contribute O(T^{-a}/ω)
            let oscill = prefactor * log_amp.exp() * t_end.powf(-a) * leak;
            (tail, smooth + oscill)
        }
        None => (0.0, scale.abs()),
    };
    Ok(IntegralEstimate {
        value: body + tail,
        error_estimate: error,
        truncation: t_end,
        tail_correction: tail,
        nodes: panels * PANEL_NODES,
        early_stop: false,
    })
}

// Expanding ∏ cos(λⱼs − ψ)^{nⱼ} into exponentials, the terms with zero total
// frequency average to the returned mean. The second value sums
// |coefficient|/|frequency| over oscillating terms not aligned with λ_min.
fn resonant_mean(groups: &[(f64, usize)], phase: f64) -> Option<(f64, f64)> {
    let count = groups
        .iter()
        .fold(1u128, |acc, g| acc.saturating_mul(g.1 as u128 + 1));
    if count > MAX_RESONANT_TUPLES {
        return None;
    }
    let scale: f64 = groups.iter().map(|g| g.0 * g.1 as f64).sum();
    let lambda_min = groups[0].0;
    let mut mean = 0.0;
    let mut leak = 0.0;
    let mut ks = vec![0usize; groups.len()];
    loop {
        let mut coeff = 1.0;
        let mut freq = 0.0;
        let mut harmonic: i64 = 0;
        for (&(l, n), &k) in groups.iter().zip(&ks) {
            coeff *= binom_f(n, k) * 0.5f64.powi(n as i32);
            let h = 2 * k as i64 - n as i64;
            freq += h as f64 * l;
            harmonic += h;
        }
        if freq.abs() <= 1e-9 * scale {
            mean += coeff * (phase * harmonic as f64).cos();
        } else {
            let ratio = freq / lambda_min;
            if (ratio - ratio.round()).abs() > 1e-9 {
                leak += coeff / freq.abs();
            }
        }
        let mut i = 0;
        loop {
            if i == ks.len() {
                return Some((mean, leak));
            }
            ks[i] += 1;
            if ks[i] <= groups[i].1 {
                break;
            }
            ks[i] = 0;
            i += 1;
        }
    }
}

/// `c(d) = (1 + d/2)^{d/2}/Γ(1 + d/2)`.
pub fn c_d(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    (h * (1.0 + h).ln() - ln_gamma(1.0 + h)).exp()
}

/// Bound constant of the `L^p` inequality: `c(d)` for `d ≥ 2`, `√2` on the
/// line.
pub fn lp_bound_constant(d: usize) -> f64 {
    if d == 1 {
        std::f64::consts::SQRT_2
    } else {
        c_d(d)
    }
}

/// `M(Z)·C·p^{-d/2}` with `C` from [`lp_bound_constant`].
pub fn lp_bound(d: usize, m_z: f64, p: f64) -> f64 {
    m_z * lp_bound_constant(d) * p.powf(-(d as f64) / 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CConstants {
    pub c1: f64,
    pub c2: f64,
    pub c: f64,
}

/// `c1 = c(d)^k` (`2^{k/2}` on the line), `c2 = (n/(n−k))^{d(n−k)/2}`,
/// `c = min(c1, c2)`; `k = n` gives `c2 = c = 1`.
pub fn c_constants(d: usize, k: usize, n: usize) -> Result<CConstants> {
    if d == 0 || k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "need d ≥ 1 and 1 ≤ k ≤ n, got d = {d}, k = {k}, n = {n}"
        )));
    }
    let c1 = if d == 1 {
        2f64.powf(k as f64 / 2.0)
    } else {
        c_d(d).powi(k as i32)
    };
    let m = n - k;
    let c2 = if m == 0 {
        1.0
    } else {
        (n as f64 / m as f64).powf(d as f64 * m as f64 / 2.0)
    };
    Ok(CConstants { c1, c2, c: c1.min(c2) })
}

/// `Γ(1 + d/2)^{2/d}/(1 + d/2)`.
pub fn epi_constant(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    (ln_gamma(1.0 + h) / h).exp() / (1.0 + h)
}

/// `max((m/n)^{m/k}, β)` with `m = n − k`, `β = epi_constant(d)` for `d ≥ 2`
/// and `β = 1/2` on the line.
pub fn epi_power_bound(d: usize, k: usize, n: usize) -> Result<f64> {
    if d == 0 || k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "need d ≥ 1 and 1 ≤ k ≤ n, got d = {d}, k = {k}, n = {n}"
        )));
    }
    let m = (n - k) as f64;
    let kernel = if m == 0.0 {
        1.0
    } else {
        (m / n as f64).powf(m / k as f64)
    };
    let branch = if d == 1 { 0.5 } else { epi_constant(d) };
    Ok(kernel.max(branch))
}
