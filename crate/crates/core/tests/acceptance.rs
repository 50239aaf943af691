#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Acceptance criteria. Each criterion prints one PASS/FAIL line with its
//! measured runtime; the process exits nonzero if any criterion fails.
//!
//! Run a subset with `cargo test --test acceptance -- 3 7`.

use std::f64::consts::{E, FRAC_1_SQRT_2};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use rogozin_core::ball_fourier::{
    c_constants, c_d, charfun_pnorm_integral, density_at_zero_sum_balls, epi_constant, epi_power_bound, lp_bound,
    unit_volume_radius, BallLaw, QuadratureSpec,
};
use rogozin_core::finite_groups::{
    convolve_on_group, enumerate_extreme_points, make_cyclic, make_product, sample_pm_with, sup_extreme_convolution,
    FiniteGroup, SearchMode, DEFAULT_BUDGET,
};
use rogozin_core::integer_line::{convolve_int_all, mattner_roos_bound, uniform_block, verify_discrete_rearrangement};
use rogozin_core::measures::{convolve_all, convolve_grids, m_discrete, m_grid};
use rogozin_core::projections::{
    decompose_projection, McSettings, density_at_zero_kernel_integral, random_projection, verify_epi, EpiInput, EpiMethod,
};
use rogozin_core::rearrangement::{bll_check_1d, decreasing_rearrangement_grid, rearranged_max_bound, MAX_QUAD_CELLS};
use rogozin_core::GridDensity;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn random_grid(rng: &mut ChaCha8Rng, step: f64, max_cells: usize, zero_prob: f64) -> GridDensity {
    loop {
        let cells = rng.random_range(1..=max_cells);
        let w: Vec<f64> = (0..cells)
            .map(|_| {
                if rng.random::<f64>() < zero_prob {
                    0.0
                } else {
                    rng.random_range(0.05..1.0)
                }
            })
            .collect();
        if w.iter().any(|x| *x > 0.0) {
            let left = rng.random_range(-2.0..1.0);
            return GridDensity::from_weights(left, step, w).unwrap();
        }
    }
}

// Ball slicing constant on the line.
fn c1_ball_slicing() -> Outcome {
    const H: f64 = 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(2..=6);
        let theta = random_unit(&mut rng, n);
        let parts: Vec<GridDensity> = theta
            .iter()
            .filter(|t| t.abs() > 1e-9)
            .map(|t| GridDensity::uniform_interval(-t.abs() / 2.0, t.abs() / 2.0, H).unwrap())
            .collect();
        let m = m_grid(&convolve_all(&parts).unwrap()).value();
        worst = worst.max(m);
    }
    let u = GridDensity::uniform_interval(-FRAC_1_SQRT_2 / 2.0, FRAC_1_SQRT_2 / 2.0, H).unwrap();
    let diag = m_grid(&convolve_grids(&u, &u).unwrap()).value();
    let ok = worst <= 2f64.sqrt() + 1e-3 && (diag - 2f64.sqrt()).abs() < 1e-3;
    outcome(ok, format!("max over 100 θ = {worst:.6}, diagonal = {diag:.6}"))
}

// Slicing constant in the plane via the local limit theorem.
fn c2_brzezinski() -> Outcome {
    let quad = QuadratureSpec::default();
    let r = unit_volume_radius(2);
    let mut worst = 0.0f64;
    let mut at_100 = 0.0;
    for n in 1..=100usize {
        let theta = vec![1.0 / (n as f64).sqrt(); n];
        let v = density_at_zero_sum_balls(2, &theta, &vec![r; n], &quad).unwrap().value;
        worst = worst.max(v);
        if n == 100 {
            at_100 = v;
        }
    }
    let ok = worst <= c_d(2) + 1e-3 && (at_100 / 2.0 - 1.0).abs() < 0.05;
    outcome(ok, format!("max over n ≤ 100 = {worst:.6}, n = 100 → {at_100:.6}"))
}

// L^p bound on characteristic functions of balls.
fn c3_lp_bound() -> Outcome {
    let quad = QuadratureSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_ratio = 0.0f64;
    for d in 2..=4 {
        let radii = [unit_volume_radius(d), rng.random_range(0.2..3.0), rng.random_range(0.2..3.0)];
        for &r in &radii {
            let m = BallLaw::new(d, r).unwrap().m();
            for p in 2..=12 {
                let v = charfun_pnorm_integral(d, r, p as f64, &quad).unwrap().value;
                worst_ratio = worst_ratio.max(v / lp_bound(d, m, p as f64));
            }
        }
    }
    let eq = charfun_pnorm_integral(2, unit_volume_radius(2), 2.0, &quad).unwrap().value;
    let eq_target = lp_bound(2, 1.0, 2.0);
    let ok = worst_ratio <= 1.0 + 1e-6 && (eq - eq_target).abs() < 1e-6;
    outcome(
        ok,
        format!("max value/bound = {worst_ratio:.9}, equality case {eq:.9} vs {eq_target:.9}"),
    )
}

fn binomial(n: u64, k: u64) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

// Maximum probability of sums of discrete uniforms.
fn c4_mattner_roos() -> Outcome {
    let mut worst_ratio = 0.0f64;
    for l in [2u64, 3, 5] {
        for n in 3..=20u64 {
            let sum = convolve_int_all(&vec![uniform_block(l as usize); n as usize]).unwrap();
            worst_ratio = worst_ratio.max(sum.max_mass() / mattner_roos_bound(l, n).unwrap());
        }
    }
    let sum = convolve_int_all(&vec![uniform_block(2); 50]).unwrap();
    let exact = binomial(50, 25) as f64 / 2f64.powi(50);
    let ratio_50 = sum.max_mass() / mattner_roos_bound(2, 50).unwrap();
    let ok = worst_ratio < 1.0 && ratio_50 > 0.95 && (sum.max_mass() - exact).abs() < 1e-15;
    outcome(
        ok,
        format!("max ratio over l ∈ {{2,3,5}}, n ≤ 20 = {worst_ratio:.6}, ratio at l = 2, n = 50 = {ratio_50:.6}"),
    )
}

// Discrete rearrangement over subsets of {0..6}.
fn c5_discrete_rearrangement() -> Outcome {
    let cases: [([usize; 2], u128); 3] = [([2, 2], 21 * 21), ([2, 3], 21 * 35), ([3, 3], 35 * 35)];
    let mut violations = 0;
    let mut details = Vec::new();
    let mut counts_ok = true;
    for (sizes, expected) in cases {
        let r = verify_discrete_rearrangement(&sizes, Some(6), None).unwrap();
        violations += r.violations;
        counts_ok &= r.tuples_checked == expected;
        details.push(format!("{:?}: {} tuples, slack {:.3}", sizes, r.tuples_checked, r.worst_slack));
    }
    outcome(
        violations == 0 && counts_ok,
        format!("{violations} violations; {}", details.join("; ")),
    )
}

// Greedy optimum of w·x over {0 ≤ x ≤ m, Σx = 1}.
fn greedy_lp(w: &[f64], m: f64) -> f64 {
    let mut sorted = w.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut left = 1.0f64;
    let mut value = 0.0;
    for v in sorted {
        let take = left.min(m);
        value += take * v;
        left -= take;
        if left <= 1e-15 {
            break;
        }
    }
    value
}

// Rogozin inequality on finite groups.
fn c6_finite_groups() -> Outcome {
    let z2 = make_cyclic(2);
    let z3 = make_cyclic(3);
    let cases: [(FiniteGroup, [f64; 2]); 2] = [(make_cyclic(5), [0.4, 0.4]), (make_product(&z2, &z3), [0.5, 1.0 / 3.0])];
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut min_slack = f64::INFINITY;
    for (g, m) in &cases {
        let sup = sup_extreme_convolution(g, m, SearchMode::Exhaustive { budget: DEFAULT_BUDGET })
            .unwrap()
            .sup_value;
        for _ in 0..10_000 {
            let a = sample_pm_with(g.order(), m[0], &mut rng).unwrap();
            let b = sample_pm_with(g.order(), m[1], &mut rng).unwrap();
            let v = m_discrete(&convolve_on_group(&a, &b, g).unwrap()).value();
            min_slack = min_slack.min(sup - v);
        }
    }

    let mut cover_gap = 0.0f64;
    let mut polytopes = 0;
    for order in 1..=6usize {
        for m in [0.5, 0.4, 1.0 / 3.0] {
            if m * (order as f64) < 1.0 - 1e-12 {
                continue;
            }
            polytopes += 1;
            let g = make_cyclic(order);
            let vertices: Vec<Vec<f64>> = enumerate_extreme_points(&g, m)
                .unwrap()
                .map(|v| v.masses(order))
                .collect();
            for _ in 0..500 {
                let w: Vec<f64> = (0..order).map(|_| rng.random_range(-1.0..1.0)).collect();
                let best = vertices
                    .iter()
                    .map(|x| x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max);
                cover_gap = cover_gap.max((greedy_lp(&w, m) - best).abs());
            }
        }
    }
    let ok = min_slack >= -1e-12 && cover_gap < 1e-12;
    outcome(
        ok,
        format!("min slack over 2×10⁴ tuples = {min_slack:.3e}, vertex-cover gap over {polytopes} polytopes = {cover_gap:.1e}"),
    )
}

// Frame decomposition of random projections.
fn c7_projection_frame() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut gamma_ok = true;
    let mut count = 0;
    for n in 2..=12usize {
        for k in 1..n {
            for _ in 0..3 {
                let p = random_projection(n, k, &mut rng).unwrap();
                let dec = decompose_projection(&p).unwrap();
                let sa: f64 = dec.a.iter().map(|a| a * a).sum();
                let sc: f64 = dec.c.iter().map(|c| c * c).sum();
                worst = worst
                    .max((sa - k as f64).abs())
                    .max((sc - (n - k) as f64).abs())
                    .max(dec.reconstruction_residual(&p));
                for g in [&dec.gamma_c1, &dec.gamma_c2] {
                    gamma_ok &= g.iter().all(|x| (-1e-12..=1.0 + 1e-12).contains(x));
                    gamma_ok &= (g.iter().sum::<f64>() - k as f64).abs() < 1e-10;
                }
                count += 1;
            }
        }
    }
    outcome(
        worst < 1e-10 && gamma_ok,
        format!("{count} projections, max identity error {worst:.1e}, γ branches valid: {gamma_ok}"),
    )
}

// Density of t₁X + t₂Y at 0 by grid convolution of the rescaled laws.
fn convolution_oracle(f: &GridDensity, g: &GridDensity, t: [f64; 2]) -> f64 {
    let a = f.scaled(t[0]).unwrap();
    let b = g.scaled(t[1]).unwrap();
    let span = (a.right() - a.left()) + (b.right() - b.left());
    let h = span / 8000.0;
    let a = a.resampled(h).unwrap();
    let b = b.resampled(h).unwrap();
    convolve_grids(&a, &b).unwrap().eval_linear(0.0)
}

// Pushforward density at 0 through the kernel integral.
fn c8_pushforward() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let step = rng.random_range(0.1..0.5);
        let f = random_grid(&mut rng, step, 8, 0.0);
        let step = rng.random_range(0.1..0.5);
        let g = random_grid(&mut rng, step, 8, 0.0);
        let mut t = [0.0; 2];
        for x in &mut t {
            *x = rng.random_range(0.3..2.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
        let row = DMatrix::from_row_slice(1, 2, &t);
        let v = density_at_zero_kernel_integral(&[f.clone(), g.clone()], &row).unwrap();
        worst = worst.max((v - convolution_oracle(&f, &g, t)).abs());
    }
    let c = GridDensity::uniform_interval(-0.5, 0.5, 0.125).unwrap();
    let one = density_at_zero_kernel_integral(&[c.clone(), c.clone()], &DMatrix::from_row_slice(1, 2, &[1.0, 1.0])).unwrap();
    let half = density_at_zero_kernel_integral(&[c], &DMatrix::from_row_slice(1, 1, &[2.0])).unwrap();
    let ok = worst < 1e-3 && (one - 1.0).abs() < 1e-3 && (half - 0.5).abs() < 1e-3;
    outcome(
        ok,
        format!("max deviation from oracle = {worst:.2e}, T=[1,1] → {one:.6}, T=[2] → {half:.6}"),
    )
}

// Monte Carlo check of the main inequality on the line.
fn c9_end_to_end() -> Outcome {
    let settings = McSettings::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut failures = 0;
    let mut worst = 0.0f64;
    for k in [1usize, 2] {
        for trial in 0..50u64 {
            let p = random_projection(4, k, &mut rng).unwrap();
            let inputs: Vec<EpiInput> = (0..4)
                .map(|_| {
                    let a = rng.random_range(-1.0..1.0);
                    let len = rng.random_range(0.2..2.0);
                    EpiInput::Grid(GridDensity::uniform_interval(a, a + len, len / 64.0).unwrap())
                })
                .collect();
            let r = verify_epi(&inputs, &p, 1, EpiMethod::MonteCarlo, &settings, 1000 * k as u64 + trial).unwrap();
            let ratio = r.lhs_bound / r.rhs;
            worst = worst.max(ratio);
            if r.lhs_bound > r.rhs {
                failures += 1;
            }
        }
    }
    outcome(
        failures == 0,
        format!("{failures} failures in 100 trials, max upper-bound/rhs = {worst:.4}"),
    )
}

// Entropy power constants.
fn c10_epi_constants() -> Outcome {
    let exact_2 = (epi_constant(2) - 0.5).abs() < 1e-12;
    let values: Vec<f64> = (1..=200).map(epi_constant).collect();
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let rel_200 = (values[199] * E - 1.0).abs();
    let near_limit = rel_200 < 0.02;
    let mut cross = 0.0f64;
    for d in 1..=10usize {
        for n in 2..=10usize {
            for k in 1..n {
                let c = c_constants(d, k, n).unwrap().c;
                let from_c = c.powf(-2.0 / (d * k) as f64);
                cross = cross.max((epi_power_bound(d, k, n).unwrap() - from_c).abs());
            }
        }
    }
    let ok = exact_2 && decreasing && near_limit && cross < 1e-12;
    outcome(
        ok,
        format!(
            "value at d = 2 exact: {exact_2}, decreasing: {decreasing}, |e·value(200) − 1| = {rel_200:.4} (need < 0.02), cross-check error {cross:.1e}"
        ),
    )
}

// Rearrangement inequality for products of functions of linear forms.
fn c11_bll() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut failures = 0;
    let mut worst_eq = 0.0f64;
    for _ in 0..100 {
        let step = rng.random_range(0.1..0.5);
        let f: Vec<GridDensity> = (0..3).map(|_| random_grid(&mut rng, step, 6, 0.2)).collect();
        let a = loop {
            let a = DMatrix::from_fn(3, 2, |_, _| rng.random_range(-1.0..1.0));
            if (0..3).all(|i| a.row(i).norm() > 0.1) {
                break a;
            }
        };
        let r = bll_check_1d(&f, &a, MAX_QUAD_CELLS).unwrap();
        if !(r.lhs <= r.rhs * (1.0 + 1e-6) + 1e-9) {
            failures += 1;
        }
        let starred: Vec<GridDensity> = f
            .iter()
            .map(|g| decreasing_rearrangement_grid(g).to_grid().unwrap())
            .collect();
        let e = bll_check_1d(&starred, &a, MAX_QUAD_CELLS).unwrap();
        worst_eq = worst_eq.max((e.lhs - e.rhs).abs() / e.rhs.max(1e-300));
    }
    outcome(
        failures == 0 && worst_eq < 1e-6,
        format!("{failures} violations in 100 trials, max relative gap in equality cases = {worst_eq:.1e}"),
    )
}

// Rearranged bound on M of a sum.
fn c12_rearranged_max() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut failures = 0;
    let mut structural = true;
    for _ in 0..500 {
        let step = rng.random_range(0.05..1.0);
        let f = random_grid(&mut rng, step, 20, 0.25);
        let g = random_grid(&mut rng, step, 20, 0.25);
        let r = rearranged_max_bound(&[f.clone(), g.clone()]).unwrap();
        if !(r.lhs <= r.rhs + 1e-9) {
            failures += 1;
        }
        for h in [&f, &g] {
            let s = decreasing_rearrangement_grid(h);
            let mut got = s.values().to_vec();
            got.sort_by(f64::total_cmp);
            let mut want: Vec<f64> = h.values().iter().filter(|v| **v > 0.0).flat_map(|v| [*v, *v]).collect();
            want.sort_by(f64::total_cmp);
            structural &= got == want && s.cell_width() == h.step() / 2.0;
            structural &= s.is_decreasing() && s.rearranged() == s;
        }
    }
    outcome(
        failures == 0 && structural,
        format!("{failures} violations in 500 pairs, equimeasurable and idempotent: {structural}"),
    )
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "ball slicing constant, d = 1", limit: secs(10), run: c1_ball_slicing },
        Criterion { id: 2, name: "slicing constant, d = 2", limit: secs(30), run: c2_brzezinski },
        Criterion { id: 3, name: "L^p bound of ball characteristic functions", limit: secs(20), run: c3_lp_bound },
        Criterion { id: 4, name: "sums of discrete uniforms", limit: secs(5), run: c4_mattner_roos },
        Criterion { id: 5, name: "discrete rearrangement", limit: secs(5), run: c5_discrete_rearrangement },
        Criterion { id: 6, name: "finite-group Rogozin inequality", limit: secs(30), run: c6_finite_groups },
        Criterion { id: 7, name: "projection frame", limit: secs(1), run: c7_projection_frame },
        Criterion { id: 8, name: "pushforward density at zero", limit: secs(10), run: c8_pushforward },
        Criterion { id: 9, name: "end-to-end inequality, d = 1", limit: secs(60), run: c9_end_to_end },
        Criterion { id: 10, name: "entropy power constants", limit: secs(5), run: c10_epi_constants },
        Criterion { id: 11, name: "rearrangement of linear-form products", limit: secs(30), run: c11_bll },
        Criterion { id: 12, name: "rearranged maximum bound", limit: secs(10), run: c12_rearranged_max },
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for c in &criteria {
        if !wanted.is_empty() && !wanted.contains(&c.id) {
            continue;
        }
        let start = Instant::now();
        let out = (c.run)();
        let elapsed = start.elapsed();
        let in_time = elapsed < c.limit;
        let ok = out.ok && in_time;
        println!(
            "{} criterion {:>2} ({}): {} [{:.2} s, limit {} s{}]",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            out.detail,
            elapsed.as_secs_f64(),
            c.limit.as_secs(),
            if in_time { "" } else { ", over time" }
        );
        if !ok {
            failed.push(c.id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
