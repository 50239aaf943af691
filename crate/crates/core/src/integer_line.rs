//! Integer-valued laws: exact convolution, the discrete rearrangement
//! theorem for uniform laws on finite sets, and the Mattner–Roos bound.

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite_groups::DEFAULT_BUDGET;
use crate::measures::{max_of, DISCRETE_MASS_TOL};

/// Slack allowed in `lhs ≤ rhs` comparisons on integer laws.
pub const INT_TOL: f64 = 1e-12;

/// Law on ℤ with masses at `offset, offset + 1, …`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IntegerDensityJson", into = "IntegerDensityJson")]
pub struct IntegerDensity {
    offset: i64,
    masses: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntegerDensityJson {
    offset: i64,
    masses: Vec<f64>,
}

impl TryFrom<IntegerDensityJson> for IntegerDensity {
    type Error = Error;

    fn try_from(j: IntegerDensityJson) -> Result<Self> {
        IntegerDensity::new(j.offset, j.masses)
    }
}

impl From<IntegerDensity> for IntegerDensityJson {
    fn from(d: IntegerDensity) -> Self {
        IntegerDensityJson {
            offset: d.offset,
            masses: d.masses,
        }
    }
}

impl IntegerDensity {
    /// Validates masses and trims zero masses at both ends.
    pub fn new(offset: i64, masses: Vec<f64>) -> Result<Self> {
        if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidDensity("masses must be finite and nonnegative".into()));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > DISCRETE_MASS_TOL {
            return Err(Error::InvalidDensity(format!("total mass {total} ≠ 1")));
        }
        Ok(Self::trimmed(offset, masses))
    }

    fn trimmed(offset: i64, mut masses: Vec<f64>) -> Self {
        let first = masses.iter().position(|&m| m > 0.0).unwrap_or(0);
        let last = masses.iter().rposition(|&m| m > 0.0).unwrap_or(0);
        masses.truncate(last + 1);
        masses.drain(..first);
        IntegerDensity {
            offset: offset + first as i64,
            masses,
        }
    }

    pub fn dirac(at: i64) -> Self {
        IntegerDensity {
            offset: at,
            masses: vec![1.0],
        }
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass_at(&self, k: i64) -> f64 {
        k.checked_sub(self.offset)
            .and_then(|i| usize::try_from(i).ok())
            .and_then(|i| self.masses.get(i).copied())
            .unwrap_or(0.0)
    }

    /// `M` under counting measure.
    pub fn max_mass(&self) -> f64 {
        max_of(&self.masses)
    }

    pub fn shifted(&self, k: i64) -> Self {
        IntegerDensity {
            offset: self.offset + k,
            masses: self.masses.clone(),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidDensity(e.to_string()))
    }
}

/// Uniform law on a nonempty set of integers.
pub fn uniform_on(points: &[i64]) -> Result<IntegerDensity> {
    let lo = *points
        .iter()
        .min()
        .ok_or_else(|| Error::InvalidArgument("empty support".into()))?;
    let hi = *points.iter().max().unwrap();
    let mut masses = vec![0.0; (hi - lo) as usize + 1];
    let unique: Vec<i64> = points.iter().copied().sorted().dedup().collect();
    let p = 1.0 / unique.len() as f64;
    for x in unique {
        masses[(x - lo) as usize] = p;
    }
    Ok(IntegerDensity::trimmed(lo, masses))
}

/// Uniform law on `{0, …, l − 1}`.
pub fn uniform_block(l: usize) -> IntegerDensity {
    assert!(l >= 1);
    IntegerDensity {
        offset: 0,
        masses: vec![1.0 / l as f64; l],
    }
}

/// Law of `X + Y` for independent `X ~ μ`, `Y ~ ν`. Each output mass is a
/// Neumaier-compensated sum.
pub fn convolve_int(mu: &IntegerDensity, nu: &IntegerDensity) -> IntegerDensity {
    let (a, b) = (&mu.masses, &nu.masses);
    let len = a.len() + b.len() - 1;
    let mut out = Vec::with_capacity(len);
    for k in 0..len {
        let lo = k.saturating_sub(b.len() - 1);
        let hi = k.min(a.len() - 1);
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for i in lo..=hi {
            let term = a[i] * b[k - i];
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
        }
        out.push(sum + comp);
    }
    IntegerDensity::trimmed(mu.offset + nu.offset, out)
}

pub fn convolve_int_all(list: &[IntegerDensity]) -> Result<IntegerDensity> {
    let (first, rest) = list
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("no densities given".into()))?;
    Ok(rest.iter().fold(first.clone(), |acc, mu| convolve_int(&acc, mu)))
}

/// `√(6/(π(l²−1)n))`, valid for `l ≥ 2`, `n ≥ 3`.
pub fn mattner_roos_bound(l: u64, n: u64) -> Result<f64> {
    if l < 2 || n < 3 {
        return Err(Error::OutOfHypothesis(format!(
            "bound needs l ≥ 2 and n ≥ 3, got l = {l}, n = {n}"
        )));
    }
    let l = l as f64;
    Ok((6.0 / (std::f64::consts::PI * (l * l - 1.0) * n as f64)).sqrt())
}

/// `⌊1/M⌋`, with `1/M` within 1e-9 of an integer taken as that integer.
pub fn level_from_m(m: f64) -> usize {
    let inv = 1.0 / m;
    let r = inv.round();
    let l = if (inv - r).abs() < 1e-9 { r } else { inv.floor() };
    (l as usize).max(1)
}

/// `M` of the sum of independent uniforms on `{0, …, lᵢ − 1}`.
pub fn m_uniform_blocks(levels: &[usize]) -> f64 {
    let blocks: Vec<IntegerDensity> = levels.iter().map(|&l| uniform_block(l)).collect();
    convolve_int_all(&blocks).map_or(1.0, |d| d.max_mass())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RearrangementReport {
    pub sizes: Vec<usize>,
    pub range_bound: usize,
    pub tuples_checked: u128,
    pub rhs: f64,
    pub max_lhs: f64,
    /// `min(rhs − lhs)` over all tuples.
    pub worst_slack: f64,
    pub worst_tuple: Vec<Vec<i64>>,
    pub violations: usize,
}

/// Checks `M(U_{S₁} + ⋯ + U_{Sₙ}) ≤ M(Z_{l₁} + ⋯ + Z_{lₙ})` for every tuple of
/// subsets `Sᵢ ⊆ {0, …, range_bound}` with `|Sᵢ| = sizes[i]`.
///
/// `range_bound` defaults to `2·max(sizes)`.
pub fn verify_discrete_rearrangement(
    sizes: &[usize],
    range_bound: Option<usize>,
    budget: Option<u64>,
) -> Result<RearrangementReport> {
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::InvalidArgument("sizes must be nonempty and positive".into()));
    }
    let range = range_bound.unwrap_or(2 * sizes.iter().max().unwrap());
    let width = range + 1;
    if let Some(&s) = sizes.iter().find(|&&s| s > width) {
        return Err(Error::InvalidArgument(format!(
            "size {s} exceeds the {width} available points"
        )));
    }
    let budget = budget.unwrap_or(DEFAULT_BUDGET);
    let needed = sizes
        .iter()
        .map(|&s| binomial(width as u128, s as u128))
        .fold(1u128, |acc, c| acc.saturating_mul(c));
    if needed > budget as u128 {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let rhs = m_uniform_blocks(sizes);
    let subsets: Vec<Vec<Vec<i64>>> = sizes
        .iter()
        .map(|&s| (0..width as i64).combinations(s).collect())
        .collect();
    let uniforms: Vec<Vec<IntegerDensity>> = subsets
        .iter()
        .map(|list| list.iter().map(|s| uniform_on(s).unwrap()).collect())
        .collect();

    struct Acc {
        max_lhs: f64,
        worst: Vec<usize>,
        violations: usize,
    }
    fn walk(
        uniforms: &[Vec<IntegerDensity>],
        depth: usize,
        current: &IntegerDensity,
        path: &mut Vec<usize>,
        rhs: f64,
        acc: &mut Acc,
    ) {
        if depth == uniforms.len() {
            let lhs = current.max_mass();
            if lhs > rhs + INT_TOL {
                acc.violations += 1;
            }
            if lhs > acc.max_lhs {
                acc.max_lhs = lhs;
                acc.worst = path.clone();
            }
            return;
        }
        for (j, u) in uniforms[depth].iter().enumerate() {
            let next = convolve_int(current, u);
            path.push(j);
            walk(uniforms, depth + 1, &next, path, rhs, acc);
            path.pop();
        }
    }

    let parts: Vec<Acc> = (0..uniforms[0].len())
        .into_par_iter()
        .map(|j| {
            let mut acc = Acc {
                max_lhs: f64::NEG_INFINITY,
                worst: Vec::new(),
                violations: 0,
            };
            let mut path = vec![j];
            walk(&uniforms, 1, &uniforms[0][j], &mut path, rhs, &mut acc);
            acc
        })
        .collect();
    let mut total = Acc {
        max_lhs: f64::NEG_INFINITY,
        worst: Vec::new(),
        violations: 0,
    };
    for part in parts {
        total.violations += part.violations;
        if part.max_lhs > total.max_lhs {
            total.max_lhs = part.max_lhs;
            total.worst = part.worst;
        }
    }
    Ok(RearrangementReport {
        sizes: sizes.to_vec(),
        range_bound: range,
        tuples_checked: needed,
        rhs,
        max_lhs: total.max_lhs,
        worst_slack: rhs - total.max_lhs,
        worst_tuple: total
            .worst
            .iter()
            .enumerate()
            .map(|(i, &j)| subsets[i][j].clone())
            .collect(),
        violations: total.violations,
    })
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteEpiReport {
    pub lhs: f64,
    pub levels: Vec<usize>,
    /// `M` of the sum of uniform blocks of sizes `levels`.
    pub rhs_uniform: f64,
    /// Mattner–Roos bound, present when all levels agree, `l ≥ 2` and `n ≥ 3`.
    pub rhs_closed_form: Option<f64>,
    pub satisfied: bool,
}

/// Compares the law of `X₁ + ⋯ + Xₙ` with sums of uniform blocks of sizes
/// `lᵢ = ⌊1/M(Xᵢ)⌋`, and with the closed-form bound when it applies.
pub fn epi_discrete(mu_list: &[IntegerDensity]) -> Result<DiscreteEpiReport> {
    let lhs = convolve_int_all(mu_list)?.max_mass();
    let levels: Vec<usize> = mu_list.iter().map(|mu| level_from_m(mu.max_mass())).collect();
    let rhs_uniform = m_uniform_blocks(&levels);
    let n = levels.len();
    let rhs_closed_form = match levels.first() {
        Some(&l) if l >= 2 && n >= 3 && levels.iter().all(|&x| x == l) => {
            Some(mattner_roos_bound(l as u64, n as u64)?)
        }
        _ => None,
    };
    let satisfied = lhs <= rhs_uniform + INT_TOL && rhs_closed_form.is_none_or(|b| rhs_uniform < b);
    Ok(DiscreteEpiReport {
        lhs,
        levels,
        rhs_uniform,
        rhs_closed_form,
        satisfied,
    })
}
