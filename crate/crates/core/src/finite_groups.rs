//! Finite groups given by Cayley tables, convolution of laws on them, and the
//! extreme-point supremum of `M(U₁⋯Uₙ)`.
//!
//! With counting measure on `G`, the set `P_m(G) = {p : 0 ≤ p ≤ m, Σp = 1}`
//! is a polytope whose vertices put mass `m` on `⌊1/m⌋` atoms and the residual
//! `1 − m⌊1/m⌋` on one further atom. `M` of a convolution is convex in each
//! factor, so its supremum over `P_{m₁} × ⋯ × P_{mₙ}` is attained on tuples of
//! vertices, which [`sup_extreme_convolution`] enumerates.

use std::collections::BTreeSet;
use std::path::Path;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{m_discrete, max_of, DiscreteDensity};

/// Default cap on the number of tuples visited by the exhaustive search.
pub const DEFAULT_BUDGET: u64 = 10_000_000;
/// Default number of hill-climbing restarts in randomized mode.
pub const DEFAULT_RESTARTS: usize = 100;
/// Slack in `lhs ≤ rhs` for [`verify_rogozin_group`].
pub const GROUP_TOL: f64 = 1e-12;

/// Associativity is verified exhaustively on tables up to this order.
const ASSOCIATIVITY_CHECK_MAX: usize = 64;

/// A finite group on `{0, …, order − 1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroup {
    order: usize,
    table: Vec<usize>,
    identity: usize,
    inverse: Vec<usize>,
}

impl FiniteGroup {
    /// Validates a Cayley table (`table[a][b] = a·b`) and derives the
    /// identity and inverses.
    pub fn from_table(table: Vec<Vec<usize>>) -> Result<Self> {
        let order = table.len();
        if order == 0 {
            return Err(Error::InvalidGroup("empty table".into()));
        }
        let mut flat = Vec::with_capacity(order * order);
        for (a, row) in table.iter().enumerate() {
            if row.len() != order {
                return Err(Error::InvalidGroup(format!(
                    "row {a} has {} entries, expected {order}",
                    row.len()
                )));
            }
            flat.extend_from_slice(row);
        }
        if let Some(&bad) = flat.iter().find(|&&x| x >= order) {
            return Err(Error::InvalidGroup(format!("entry {bad} out of range")));
        }
        for a in 0..order {
            let mut row_seen = vec![false; order];
            let mut col_seen = vec![false; order];
            for b in 0..order {
                row_seen[flat[a * order + b]] = true;
                col_seen[flat[b * order + a]] = true;
            }
            if row_seen.contains(&false) || col_seen.contains(&false) {
                return Err(Error::InvalidGroup(format!(
                    "row or column {a} is not a permutation"
                )));
            }
        }
        let identity = (0..order)
            .find(|&e| (0..order).all(|g| flat[e * order + g] == g && flat[g * order + e] == g))
            .ok_or_else(|| Error::InvalidGroup("no two-sided identity".into()))?;
        let mut inverse = vec![0; order];
        for (g, inv) in inverse.iter_mut().enumerate() {
            *inv = (0..order)
                .find(|&h| flat[g * order + h] == identity)
                .expect("Latin square rows contain the identity");
            if flat[*inv * order + g] != identity {
                return Err(Error::InvalidGroup(format!("element {g} has no two-sided inverse")));
            }
        }
        let group = FiniteGroup {
            order,
            table: flat,
            identity,
            inverse,
        };
        if order <= ASSOCIATIVITY_CHECK_MAX {
            if let Some((a, b, c)) = group.associativity_violation() {
                return Err(Error::InvalidGroup(format!(
                    "not associative at ({a}, {b}, {c})"
                )));
            }
        }
        Ok(group)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn inverse(&self, g: usize) -> usize {
        self.inverse[g]
    }

    pub fn op(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order + b]
    }

    pub fn table(&self) -> Vec<Vec<usize>> {
        self.table.chunks(self.order).map(<[usize]>::to_vec).collect()
    }

    /// First triple with `(ab)c ≠ a(bc)`, if any.
    pub fn associativity_violation(&self) -> Option<(usize, usize, usize)> {
        let n = self.order;
        (0..n)
            .flat_map(|a| (0..n).flat_map(move |b| (0..n).map(move |c| (a, b, c))))
            .find(|&(a, b, c)| self.op(self.op(a, b), c) != self.op(a, self.op(b, c)))
    }

    /// Smallest `k ≥ 1` with `g^k = e`.
    pub fn element_order(&self, g: usize) -> usize {
        let mut x = g;
        let mut k = 1;
        while x != self.identity {
            x = self.op(x, g);
            k += 1;
        }
        k
    }

    /// Loads `{"order": n, "table": [[…]]}`.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: GroupFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidGroup(format!("malformed group file: {e}")))?;
        if file.table.len() != file.order {
            return Err(Error::InvalidGroup(format!(
                "declared order {} but table has {} rows",
                file.order,
                file.table.len()
            )));
        }
        FiniteGroup::from_table(file.table)
    }

    pub fn to_json(&self) -> GroupFile {
        GroupFile {
            order: self.order,
            table: self.table(),
        }
    }

    /// Resolves a built-in name (`trivial`, `cyclic:n`, `product:A,B`) or a
    /// path to a JSON Cayley table.
    pub fn from_name_or_path(spec: &str) -> Result<Self> {
        match parse_group_name(spec) {
            Ok(g) => Ok(g),
            Err(name_err) => {
                let path = Path::new(spec);
                if path.is_file() {
                    let text = std::fs::read_to_string(path).map_err(|e| {
                        Error::InvalidGroup(format!("cannot read {}: {e}", path.display()))
                    })?;
                    FiniteGroup::from_json_str(&text)
                } else {
                    Err(name_err)
                }
            }
        }
    }
}

/// JSON schema of a group file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupFile {
    pub order: usize,
    pub table: Vec<Vec<usize>>,
}

/// `ℤ/nℤ` under addition.
pub fn make_cyclic(n: usize) -> FiniteGroup {
    assert!(n >= 1, "cyclic group needs n ≥ 1");
    let table = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a + b) % n))
        .collect();
    let inverse = (0..n).map(|g| (n - g) % n).collect();
    FiniteGroup {
        order: n,
        table,
        identity: 0,
        inverse,
    }
}

/// Direct product; `(g, h)` is stored at index `g·|H| + h`.
pub fn make_product(g: &FiniteGroup, h: &FiniteGroup) -> FiniteGroup {
    let (m, n) = (g.order, h.order);
    let order = m * n;
    let mut table = Vec::with_capacity(order * order);
    for a in 0..order {
        for b in 0..order {
            let (a1, a2) = (a / n, a % n);
            let (b1, b2) = (b / n, b % n);
            table.push(g.op(a1, b1) * n + h.op(a2, b2));
        }
    }
    let inverse = (0..order)
        .map(|a| g.inverse(a / n) * n + h.inverse(a % n))
        .collect();
    FiniteGroup {
        order,
        table,
        identity: g.identity * n + h.identity,
        inverse,
    }
}

fn parse_group_name(spec: &str) -> Result<FiniteGroup> {
    let (group, rest) = parse_group_prefix(spec.trim())?;
    if !rest.is_empty() {
        return Err(Error::InvalidGroup(format!("trailing input {rest:?} in {spec:?}")));
    }
    Ok(group)
}

// Prefix notation, so nested products need no brackets:
// "product:cyclic:2,product:cyclic:3,cyclic:5".
fn parse_group_prefix(s: &str) -> Result<(FiniteGroup, &str)> {
    if let Some(rest) = s.strip_prefix("trivial") {
        return Ok((make_cyclic(1), rest));
    }
    if let Some(rest) = s.strip_prefix("cyclic:") {
        let digits = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
        let n: usize = rest[..digits]
            .parse()
            .map_err(|_| Error::InvalidGroup(format!("bad cyclic order in {s:?}")))?;
        if n == 0 {
            return Err(Error::InvalidGroup("cyclic order must be positive".into()));
        }
        return Ok((make_cyclic(n), &rest[digits..]));
    }
    if let Some(rest) = s.strip_prefix("product:") {
        let (g, rest) = parse_group_prefix(rest)?;
        let rest = rest
            .strip_prefix(',')
            .ok_or_else(|| Error::InvalidGroup(format!("expected ',' in product spec {s:?}")))?;
        let (h, rest) = parse_group_prefix(rest)?;
        return Ok((make_product(&g, &h), rest));
    }
    Err(Error::InvalidGroup(format!("unknown group spec {s:?}")))
}

/// Law of `X·Y`: `(μ∗ν)(g) = Σ_h μ(h)·ν(h⁻¹g)`.
pub fn convolve_on_group(
    mu: &DiscreteDensity,
    nu: &DiscreteDensity,
    group: &FiniteGroup,
) -> Result<DiscreteDensity> {
    for d in [mu, nu] {
        if d.carrier_size() != group.order {
            return Err(Error::SizeMismatch {
                expected: group.order,
                found: d.carrier_size(),
            });
        }
    }
    let out = convolve_masses(mu.masses(), nu.masses(), group);
    DiscreteDensity::from_weights(&out)
}

fn convolve_masses(a: &[f64], b: &[f64], group: &FiniteGroup) -> Vec<f64> {
    let n = group.order;
    let mut out = vec![0.0; n];
    for (x, &pa) in a.iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        let row = &group.table[x * n..(x + 1) * n];
        for (&xy, &pb) in row.iter().zip(b) {
            out[xy] += pa * pb;
        }
    }
    out
}

// Right convolution by a sparse law given as (atom, mass) pairs.
fn convolve_sparse(acc: &[f64], atoms: &[(usize, f64)], group: &FiniteGroup, out: &mut [f64]) {
    let n = group.order;
    out.iter_mut().for_each(|v| *v = 0.0);
    for (x, &pa) in acc.iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        let row = &group.table[x * n..(x + 1) * n];
        for &(y, pb) in atoms {
            out[row[y]] += pa * pb;
        }
    }
}

/// A vertex of `P_m(G)`: mass `m` on each atom of `full`, `residual_mass` on
/// `residual`.
#[derive(Clone, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ExtremePointSpec {
    pub level: f64,
    pub full: Vec<usize>,
    pub residual: Option<usize>,
    pub residual_mass: f64,
}

impl ExtremePointSpec {
    fn atoms(&self) -> Vec<(usize, f64)> {
        let mut atoms: Vec<(usize, f64)> = self.full.iter().map(|&u| (u, self.level)).collect();
        if let Some(x) = self.residual {
            atoms.push((x, self.residual_mass));
        }
        atoms
    }

    pub fn masses(&self, order: usize) -> Vec<f64> {
        let mut masses = vec![0.0; order];
        for (x, p) in self.atoms() {
            masses[x] = p;
        }
        masses
    }

    pub fn to_density(&self, order: usize) -> Result<DiscreteDensity> {
        DiscreteDensity::new(self.masses(order))
    }

    /// Number of tight constraints among `p_g ≥ 0`, `p_g ≤ m` and `Σp = 1`.
    pub fn active_constraints(&self, order: usize) -> usize {
        let masses = self.masses(order);
        let bounds = masses
            .iter()
            .filter(|&&p| p.abs() < 1e-15 || (p - self.level).abs() < 1e-15)
            .count();
        bounds + 1
    }
}

/// `(m, ⌊1/m⌋, 1 − m⌊1/m⌋)` after clamping `m` to at most 1; integer `1/m`
/// within 1e-9 counts as exact.
pub fn level_structure(m: f64) -> (f64, usize, f64) {
    let m = m.min(1.0);
    let inv = 1.0 / m;
    let q = if (inv - inv.round()).abs() < 1e-9 {
        inv.round()
    } else {
        inv.floor()
    };
    let c = 1.0 - m * q;
    let c = if c.abs() < 1e-12 { 0.0 } else { c };
    (m, q as usize, c)
}

fn check_level(order: usize, m: f64) -> Result<()> {
    if !(m > 0.0) || m.is_nan() || m.min(1.0) * (order as f64) < 1.0 - 1e-12 {
        return Err(Error::InfeasibleLevel { m, order });
    }
    Ok(())
}

/// Number of vertices of `P_m(G)`.
pub fn extreme_point_count(order: usize, m: f64) -> Result<u128> {
    check_level(order, m)?;
    let (_, q, c) = level_structure(m);
    let choose = binomial(order as u128, q as u128);
    Ok(if c > 0.0 {
        choose * (order - q) as u128
    } else {
        choose
    })
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// All vertices of `P_m(G)` in lexicographic order of `(sorted U, x₀)`.
pub fn enumerate_extreme_points(
    group: &FiniteGroup,
    m: f64,
) -> Result<impl Iterator<Item = ExtremePointSpec>> {
    let order = group.order;
    check_level(order, m)?;
    let (level, q, c) = level_structure(m);
    Ok((0..order).combinations(q).flat_map(move |full| {
        let residuals: Vec<Option<usize>> = if c > 0.0 {
            (0..order)
                .filter(|x| !full.contains(x))
                .map(Some)
                .collect()
        } else {
            vec![None]
        };
        residuals.into_iter().map(move |residual| ExtremePointSpec {
            level,
            full: full.clone(),
            residual,
            residual_mass: c,
        })
    }))
}

/// How the supremum over vertex tuples is searched.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchMode {
    /// Every tuple, subject to the budget.
    Exhaustive { budget: u64 },
    /// Steepest ascent over single-atom moves with random restarts; the value
    /// is a lower bound on the supremum.
    Randomized { restarts: usize, seed: u64 },
}

impl Default for SearchMode {
    fn default() -> Self {
        SearchMode::Exhaustive {
            budget: DEFAULT_BUDGET,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupResult {
    pub sup_value: f64,
    pub argmax: Vec<ExtremePointSpec>,
    /// True when produced by randomized search.
    pub lower_bound_only: bool,
    pub tuples_evaluated: u128,
}

/// Supremum of `M(U₁∗⋯∗Uₙ)` over vertex tuples of `P_{m₁} × ⋯ × P_{mₙ}`.
///
/// Ties keep the lexicographically smallest tuple.
pub fn sup_extreme_convolution(
    group: &FiniteGroup,
    m_list: &[f64],
    mode: SearchMode,
) -> Result<SupResult> {
    if m_list.is_empty() {
        return Err(Error::InvalidArgument("need at least one level".into()));
    }
    let mut needed: u128 = 1;
    for &m in m_list {
        needed = needed.saturating_mul(extreme_point_count(group.order, m)?);
    }
    match mode {
        SearchMode::Exhaustive { budget } => {
            if needed > budget as u128 {
                return Err(Error::BudgetExceeded { needed, budget });
            }
            Ok(exhaustive_sup(group, m_list, needed))
        }
        SearchMode::Randomized { restarts, seed } => {
            Ok(randomized_sup(group, m_list, restarts.max(1), seed))
        }
    }
}

// Improvements smaller than this keep the earlier (lexicographically
// smaller) tuple.
const TIE_TOL: f64 = 1e-12;

fn exhaustive_sup(group: &FiniteGroup, m_list: &[f64], needed: u128) -> SupResult {
    let factors: Vec<Vec<ExtremePointSpec>> = m_list
        .iter()
        .map(|&m| enumerate_extreme_points(group, m).unwrap().collect())
        .collect();
    let atoms: Vec<Vec<Vec<(usize, f64)>>> = factors
        .iter()
        .map(|f| f.iter().map(ExtremePointSpec::atoms).collect())
        .collect();

    // Fan out over the first factor; each branch is a lexicographic DFS.
    let branches: Vec<(f64, Vec<usize>)> = (0..factors[0].len())
        .into_par_iter()
        .map(|first| {
            let start = {
                let mut v = vec![0.0; group.order];
                for &(x, p) in &atoms[0][first] {
                    v[x] = p;
                }
                v
            };
            let mut best = (f64::NEG_INFINITY, Vec::new());
            let mut path = vec![first];
            dfs(group, &atoms, 1, &start, &mut path, &mut best);
            best
        })
        .collect();

    let mut best = (f64::NEG_INFINITY, Vec::new());
    for branch in branches {
        if branch.0 > best.0 + TIE_TOL {
            best = branch;
        }
    }
    SupResult {
        sup_value: best.0,
        argmax: best
            .1
            .iter()
            .enumerate()
            .map(|(i, &j)| factors[i][j].clone())
            .collect(),
        lower_bound_only: false,
        tuples_evaluated: needed,
    }
}

fn dfs(
    group: &FiniteGroup,
    atoms: &[Vec<Vec<(usize, f64)>>],
    depth: usize,
    acc: &[f64],
    path: &mut Vec<usize>,
    best: &mut (f64, Vec<usize>),
) {
    if depth == atoms.len() {
        let value = max_of(acc);
        if value > best.0 + TIE_TOL {
            *best = (value, path.clone());
        }
        return;
    }
    let mut next = vec![0.0; group.order];
    for (j, point) in atoms[depth].iter().enumerate() {
        convolve_sparse(acc, point, group, &mut next);
        path.push(j);
        dfs(group, atoms, depth + 1, &next, path, best);
        path.pop();
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Vertex {
    full: Vec<usize>,
    residual: Option<usize>,
}

fn vertex_value(group: &FiniteGroup, state: &[Vertex], levels: &[(f64, usize, f64)]) -> f64 {
    let mut acc = vec![0.0; group.order];
    acc[group.identity] = 1.0;
    let mut next = vec![0.0; group.order];
    for (v, &(m, _, c)) in state.iter().zip(levels) {
        let mut atoms: Vec<(usize, f64)> = v.full.iter().map(|&u| (u, m)).collect();
        if let Some(x) = v.residual {
            atoms.push((x, c));
        }
        convolve_sparse(&acc, &atoms, group, &mut next);
        std::mem::swap(&mut acc, &mut next);
    }
    max_of(&acc)
}

fn neighbours(v: &Vertex, order: usize) -> Vec<Vertex> {
    let used: BTreeSet<usize> = v.full.iter().copied().chain(v.residual).collect();
    let free: Vec<usize> = (0..order).filter(|x| !used.contains(x)).collect();
    let mut out = Vec::new();
    for (i, _) in v.full.iter().enumerate() {
        for &y in &free {
            let mut full = v.full.clone();
            full[i] = y;
            full.sort_unstable();
            out.push(Vertex {
                full,
                residual: v.residual,
            });
        }
        if let Some(x) = v.residual {
            let mut full = v.full.clone();
            let u = full[i];
            full[i] = x;
            full.sort_unstable();
            out.push(Vertex {
                full,
                residual: Some(u),
            });
        }
    }
    if v.residual.is_some() {
        for &y in &free {
            out.push(Vertex {
                full: v.full.clone(),
                residual: Some(y),
            });
        }
    }
    out
}

fn randomized_sup(group: &FiniteGroup, m_list: &[f64], restarts: usize, seed: u64) -> SupResult {
    let order = group.order;
    let levels: Vec<(f64, usize, f64)> = m_list.iter().map(|&m| level_structure(m)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: (f64, Vec<Vertex>) = (f64::NEG_INFINITY, Vec::new());
    let mut evaluated: u128 = 0;
    for _ in 0..restarts {
        let mut state: Vec<Vertex> = levels
            .iter()
            .map(|&(_, q, c)| {
                let mut atoms: Vec<usize> = (0..order).collect();
                atoms.shuffle(&mut rng);
                let mut full = atoms[..q].to_vec();
                full.sort_unstable();
                let residual = (c > 0.0).then(|| atoms[q]);
                Vertex { full, residual }
            })
            .collect();
        let mut value = vertex_value(group, &state, &levels);
        evaluated += 1;
        loop {
            let mut step: Option<(f64, Vec<Vertex>)> = None;
            for i in 0..state.len() {
                for candidate in neighbours(&state[i], order) {
                    let mut trial = state.clone();
                    trial[i] = candidate;
                    let v = vertex_value(group, &trial, &levels);
                    evaluated += 1;
                    let current = step.as_ref().map_or(value, |s| s.0);
                    if v > current + TIE_TOL {
                        step = Some((v, trial));
                    }
                }
            }
            match step {
                Some((v, s)) => {
                    value = v;
                    state = s;
                }
                None => break,
            }
        }
        if value > best.0 + TIE_TOL || (value > best.0 - TIE_TOL && state < best.1) {
            best = (value.max(best.0), state);
        }
    }
    SupResult {
        sup_value: best.0,
        argmax: best
            .1
            .into_iter()
            .zip(&levels)
            .map(|(v, &(m, _, c))| ExtremePointSpec {
                level: m,
                full: v.full,
                residual: v.residual,
                residual_mass: c,
            })
            .collect(),
        lower_bound_only: true,
        tuples_evaluated: evaluated,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupRogozinReport {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    pub levels: Vec<f64>,
    pub sup: SupResult,
}

/// Compares `M(μ₁∗⋯∗μₙ)` with the vertex supremum at levels `M(μᵢ)`.
pub fn verify_rogozin_group(
    group: &FiniteGroup,
    mu_list: &[DiscreteDensity],
    mode: SearchMode,
) -> Result<GroupRogozinReport> {
    let (first, rest) = mu_list
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("no densities given".into()))?;
    let mut acc = first.clone();
    if acc.carrier_size() != group.order {
        return Err(Error::SizeMismatch {
            expected: group.order,
            found: acc.carrier_size(),
        });
    }
    for mu in rest {
        acc = convolve_on_group(&acc, mu, group)?;
    }
    let lhs = m_discrete(&acc).value();
    let levels: Vec<f64> = mu_list.iter().map(|mu| m_discrete(mu).value()).collect();
    let sup = sup_extreme_convolution(group, &levels, mode)?;
    let rhs = sup.sup_value;
    Ok(GroupRogozinReport {
        lhs,
        rhs,
        satisfied: lhs <= rhs + GROUP_TOL,
        levels,
        sup,
    })
}

/// Random point of `P_m(G)` by iterative proportional clipping: exponential
/// weights are normalized, clipped at `m`, and the excess is spread evenly
/// over the unclipped atoms until nothing exceeds `m`.
pub fn sample_pm(group: &FiniteGroup, m: f64, seed: u64) -> Result<DiscreteDensity> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_pm_with(group.order, m, &mut rng)
}

pub fn sample_pm_with<R: Rng + ?Sized>(order: usize, m: f64, rng: &mut R) -> Result<DiscreteDensity> {
    check_level(order, m)?;
    let m = m.min(1.0);
    let mut p: Vec<f64> = (0..order).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    let mut clipped = vec![false; order];
    loop {
        let mut excess = 0.0;
        for (x, c) in p.iter_mut().zip(clipped.iter_mut()) {
            if *x > m {
                excess += *x - m;
                *x = m;
                *c = true;
            }
        }
        if excess <= 0.0 {
            break;
        }
        let free = clipped.iter().filter(|&&c| !c).count();
        if free == 0 {
            break;
        }
        let share = excess / free as f64;
        for (x, _) in p.iter_mut().zip(&clipped).filter(|(_, &c)| !c) {
            *x += share;
        }
    }
    // floating-point overshoot
    p.iter_mut().for_each(|x| *x = x.min(m));
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        let free: Vec<usize> = (0..order).filter(|&i| p[i] < m).collect();
        let fix = (1.0 - total) / free.len().max(1) as f64;
        for i in free {
            p[i] += fix;
        }
    }
    DiscreteDensity::new(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(n: usize) -> FiniteGroup {
        make_cyclic(n)
    }

    #[test]
    fn cyclic_examples() {
        let g = z(1);
        assert_eq!(g.order(), 1);
        assert_eq!(g.table(), vec![vec![0]]);
        assert_eq!(z(2).table(), vec![vec![0, 1], vec![1, 0]]);
        assert_eq!(z(5).inverse(2), 3);
    }

    #[test]
    fn product_examples() {
        let k4 = make_product(&z(2), &z(2));
        assert_eq!(k4.order(), 4);
        assert!((0..4).all(|g| k4.inverse(g) == g));
        let copy = make_product(&z(5), &z(1));
        assert_eq!(copy.table(), z(5).table());
        let z6 = make_product(&z(2), &z(3));
        // (1, 1) sits at index 1·3 + 1
        assert_eq!(z6.element_order(4), 6);
        // oracle: order of (a, b) is lcm(ord a, ord b)
        for g in 0..6 {
            let (a, b) = (g / 3, g % 3);
            let oa = if a == 0 { 1 } else { 2 };
            let ob = if b == 0 { 1 } else { 3 };
            let lcm = oa * ob / if oa == ob { oa } else { 1 };
            assert_eq!(z6.element_order(g), lcm);
        }
    }

    #[test]
    fn group_axioms_hold_for_builtins() {
        for g in [z(7), make_product(&z(2), &z(4)), make_product(&make_product(&z(2), &z(2)), &z(3))] {
            let n = g.order();
            assert!(g.associativity_violation().is_none());
            for x in 0..n {
                assert_eq!(g.op(g.identity(), x), x);
                assert_eq!(g.op(x, g.identity()), x);
                assert_eq!(g.op(x, g.inverse(x)), g.identity());
            }
            assert_eq!(FiniteGroup::from_table(g.table()).unwrap(), g);
        }
    }

    #[test]
    fn from_table_rejects_non_groups() {
        assert!(FiniteGroup::from_table(vec![vec![0, 1], vec![0, 1]]).is_err());
        // Latin square with identity 0 that is not associative
        let quasi = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        let err = FiniteGroup::from_table(quasi).unwrap_err();
        assert!(err.to_string().contains("associative"), "{err}");
    }

    #[test]
    fn names_and_files() {
        let g = FiniteGroup::from_name_or_path("product:cyclic:2,cyclic:3").unwrap();
        assert_eq!(g.order(), 6);
        let g = FiniteGroup::from_name_or_path("product:cyclic:2,product:cyclic:2,cyclic:3").unwrap();
        assert_eq!(g.order(), 12);
        assert_eq!(FiniteGroup::from_name_or_path("trivial").unwrap().order(), 1);
        assert!(FiniteGroup::from_name_or_path("cyclic:x").is_err());
        let json = serde_json::to_string(&z(3).to_json()).unwrap();
        assert_eq!(json, r#"{"order":3,"table":[[0,1,2],[1,2,0],[2,0,1]]}"#);
        assert_eq!(FiniteGroup::from_json_str(&json).unwrap(), z(3));
        assert!(FiniteGroup::from_json_str(r#"{"order":2,"table":[[0]]}"#).is_err());
    }

    #[test]
    fn convolution_examples() {
        let g = z(3);
        let nu = DiscreteDensity::new(vec![0.2, 0.3, 0.5]).unwrap();
        let e = DiscreteDensity::dirac(3, g.identity());
        assert_eq!(convolve_on_group(&e, &nu, &g).unwrap(), nu);
        let u = DiscreteDensity::uniform(3);
        for m in convolve_on_group(&u, &nu, &g).unwrap().masses() {
            assert!((m - 1.0 / 3.0).abs() < 1e-15);
        }
        let coin = DiscreteDensity::new(vec![0.5, 0.5, 0.0]).unwrap();
        let c = convolve_on_group(&coin, &coin, &g).unwrap();
        assert_eq!(c.masses(), &[0.25, 0.5, 0.25]);
        let wrong = DiscreteDensity::uniform(4);
        assert!(matches!(convolve_on_group(&wrong, &nu, &g), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn convolution_is_noncommutative_on_s3() {
        // S3 as permutations of {0,1,2}; composition (a·b)(i) = a(b(i))
        let perms: Vec<[usize; 3]> = vec![
            [0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0],
        ];
        let idx = |p: [usize; 3]| perms.iter().position(|&q| q == p).unwrap();
        let table = perms
            .iter()
            .map(|a| perms.iter().map(|b| idx([a[b[0]], a[b[1]], a[b[2]]])).collect())
            .collect();
        let s3 = FiniteGroup::from_table(table).unwrap();
        let mu = DiscreteDensity::new(vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let nu = DiscreteDensity::new(vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let ab = convolve_on_group(&mu, &nu, &s3).unwrap();
        let ba = convolve_on_group(&nu, &mu, &s3).unwrap();
        assert_ne!(ab, ba);
    }

    #[test]
    fn extreme_point_counts() {
        let g3 = z(3);
        let pts: Vec<_> = enumerate_extreme_points(&g3, 0.5).unwrap().collect();
        assert_eq!(pts.len(), 3);
        assert!(pts.iter().all(|p| p.residual.is_none() && p.full.len() == 2));
        let pts: Vec<_> = enumerate_extreme_points(&g3, 1.0).unwrap().collect();
        assert_eq!(pts.len(), 3);
        assert!(pts.iter().all(|p| p.full.len() == 1));
        let pts: Vec<_> = enumerate_extreme_points(&z(4), 0.4).unwrap().collect();
        assert_eq!(pts.len(), 12);
        assert_eq!(extreme_point_count(4, 0.4).unwrap(), 12);
        assert!((pts[0].residual_mass - 0.2).abs() < 1e-15);
        assert!(matches!(
            enumerate_extreme_points(&z(2), 0.3).err(),
            Some(Error::InfeasibleLevel { .. })
        ));
        // m > 1 is the Dirac regime
        assert_eq!(enumerate_extreme_points(&z(3), 2.5).unwrap().count(), 3);
    }

    #[test]
    fn extreme_points_are_vertices_with_unit_mass() {
        for (n, m) in [(4, 0.4), (5, 1.0 / 3.0), (6, 0.3), (6, 0.5)] {
            for p in enumerate_extreme_points(&z(n), m).unwrap() {
                let masses = p.masses(n);
                let (level, q, c) = level_structure(m);
                assert!((level * q as f64 + c - 1.0).abs() < 1e-12);
                assert!((masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(p.active_constraints(n) >= n);
                if let Some(x) = p.residual {
                    assert!(!p.full.contains(&x));
                }
            }
        }
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let pts: Vec<_> = enumerate_extreme_points(&z(5), 0.4).unwrap().collect();
        let keys: Vec<_> = pts.iter().map(|p| (p.full.clone(), p.residual)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn sup_examples() {
        let r = sup_extreme_convolution(&z(2), &[1.0, 1.0], SearchMode::default()).unwrap();
        assert_eq!(r.sup_value, 1.0);
        let r = sup_extreme_convolution(&z(3), &[0.5, 0.5], SearchMode::default()).unwrap();
        assert!((r.sup_value - 0.5).abs() < 1e-15);
        assert_eq!(r.argmax[0].full, vec![0, 1]);
        assert_eq!(r.argmax[1].full, vec![0, 1]);
    }

    #[test]
    fn sup_on_z5_matches_brute_force() {
        // oracle: dense convolution of every pair of 2-subsets
        let g = z(5);
        let subsets: Vec<Vec<usize>> = (0..5).combinations(2).collect();
        let mut brute: f64 = 0.0;
        for a in &subsets {
            for b in &subsets {
                let mut out = [0.0; 5];
                for &x in a {
                    for &y in b {
                        out[(x + y) % 5] += 0.25;
                    }
                }
                brute = brute.max(out.iter().copied().fold(0.0, f64::max));
            }
        }
        let r = sup_extreme_convolution(&g, &[0.5, 0.5], SearchMode::default()).unwrap();
        assert_eq!(r.sup_value, brute);
        assert!(r.sup_value >= 0.2 && r.sup_value <= 0.5);
        assert_eq!(r.sup_value, 0.5);
    }

    #[test]
    fn budget_is_enforced() {
        let err = sup_extreme_convolution(
            &z(12),
            &[0.2, 0.2, 0.2],
            SearchMode::Exhaustive { budget: 1000 },
        )
        .unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
        let r = sup_extreme_convolution(
            &z(12),
            &[0.2, 0.2, 0.2],
            SearchMode::Randomized { restarts: 5, seed: 1 },
        )
        .unwrap();
        assert!(r.lower_bound_only);
        assert!(r.sup_value >= 1.0 / 12.0);
    }

    #[test]
    fn randomized_search_reaches_exhaustive_value_on_small_groups() {
        let g = make_product(&z(2), &z(3));
        let exact = sup_extreme_convolution(&g, &[0.4, 0.3], SearchMode::default()).unwrap();
        let lower = sup_extreme_convolution(
            &g,
            &[0.4, 0.3],
            SearchMode::Randomized { restarts: 20, seed: 7 },
        )
        .unwrap();
        assert!(lower.sup_value <= exact.sup_value + 1e-12);
        assert!((lower.sup_value - exact.sup_value).abs() < 1e-12);
    }

    #[test]
    fn rogozin_group_examples() {
        let g = z(4);
        let diracs = vec![DiscreteDensity::dirac(4, 1), DiscreteDensity::dirac(4, 3)];
        let r = verify_rogozin_group(&g, &diracs, SearchMode::default()).unwrap();
        assert_eq!((r.lhs, r.rhs), (1.0, 1.0));
        let uniforms = vec![DiscreteDensity::uniform(4), DiscreteDensity::uniform(4)];
        let r = verify_rogozin_group(&g, &uniforms, SearchMode::default()).unwrap();
        assert!((r.lhs - 0.25).abs() < 1e-15 && (r.rhs - 0.25).abs() < 1e-15);
        assert!(r.satisfied);
    }

    #[test]
    fn sampler_respects_level() {
        let g = z(7);
        for seed in 0..1000 {
            let mu = sample_pm(&g, 0.3, seed).unwrap();
            assert!(m_discrete(&mu).value() <= 0.3 + 1e-15);
        }
        let u = sample_pm(&g, 1.0 / 7.0, 3).unwrap();
        assert!(u.masses().iter().all(|&p| (p - 1.0 / 7.0).abs() < 1e-12));
        let free = sample_pm(&g, 1.0, 3).unwrap();
        assert!((free.masses().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(sample_pm(&g, 0.1, 0).is_err());
    }
}
