use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::json;

use rogozin_core::ball_fourier::{
    c_constants, c_d, charfun_pnorm_integral, density_at_zero_sum_balls, epi_constant, epi_power_bound, lp_bound,
    lp_bound_constant, unit_ball_volume, BallLaw, QuadratureSpec, LEMMA_REL_TOL,
};
use rogozin_core::finite_groups::{
    convolve_on_group, sample_pm_with, sup_extreme_convolution, FiniteGroup, SearchMode, GROUP_TOL,
};
use rogozin_core::integer_line::{
    convolve_int_all, epi_discrete, mattner_roos_bound, uniform_block, verify_discrete_rearrangement, IntegerDensity,
    INT_TOL,
};
use rogozin_core::measures::{m_discrete, DensityJson};
use rogozin_core::projections::{
    random_projection_seeded, verify_epi, EpiInput, EpiMethod, McSettings, ProjectionJson, GRID_REL_TOL,
};
use rogozin_core::rearrangement::{bll_check_1d, rearranged_max_bound, BLL_ABS_TOL, BLL_REL_TOL, MAX_BOUND_TOL};
use rogozin_core::GridDensity;

use crate::args::{
    BallSliceArgs, BllArgs, CharfunArgs, ConstantsArgs, GroupSupArgs, IntEpiArgs, MethodArg, RearrangeArgs,
    VerifyEpiArgs,
};
use crate::error::{CliError, Result};
use crate::report::{Context, Report};

// Relative tolerance of radial Fourier slicing values.
const SLICE_REL_TOL: f64 = 1e-6;
// Tolerance of the constants cross-check.
const CONSTANTS_TOL: f64 = 1e-12;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn grids_from(list: Vec<DensityJson>) -> Result<Vec<GridDensity>> {
    Ok(list.into_iter().map(DensityJson::into_grid).collect::<rogozin_core::Result<_>>()?)
}

fn random_grid(rng: &mut ChaCha8Rng, step: f64) -> GridDensity {
    loop {
        let cells = rng.random_range(1..=8);
        let w: Vec<f64> = (0..cells)
            .map(|_| if rng.random::<f64>() < 0.2 { 0.0 } else { rng.random_range(0.05..1.0) })
            .collect();
        if w.iter().any(|x| *x > 0.0) {
            let left = rng.random_range(-2.0..1.0);
            return GridDensity::from_weights(left, step, w).expect("positive weights");
        }
    }
}

fn quad_spec(nodes: usize, truncation: Option<f64>) -> QuadratureSpec {
    QuadratureSpec {
        truncation_radius: truncation,
        nodes,
        ..QuadratureSpec::default()
    }
}

pub fn constants(ctx: &Context, a: &ConstantsArgs) -> Result<Vec<Report>> {
    let cc = c_constants(a.d, a.k, a.n)?;
    let from_c = cc.c.powf(-2.0 / (a.d * a.k) as f64);
    let bound = epi_power_bound(a.d, a.k, a.n)?;
    let details = json!({
        "c1": cc.c1,
        "c2": cc.c2,
        "c": cc.c,
        "c_d": c_d(a.d),
        "lp_bound_constant": lp_bound_constant(a.d),
        "epi_constant": epi_constant(a.d),
        "epi_power_bound": bound,
        "unit_ball_volume": unit_ball_volume(a.d),
    });
    Ok(vec![ctx.report(from_c, bound, 0.0, CONSTANTS_TOL, 0.0, details)])
}

pub fn verify_epi_cmd(ctx: &mut Context, a: &VerifyEpiArgs) -> Result<Vec<Report>> {
    let inputs: Vec<EpiInput> = if let Some(path) = &a.input {
        if a.d != 1 {
            return Err(usage("--input grid densities need --d 1"));
        }
        let list: Vec<DensityJson> = ctx.read_json("input", path)?;
        grids_from(list)?.into_iter().map(EpiInput::Grid).collect()
    } else if !a.m.is_empty() {
        a.m.iter()
            .map(|&m| BallLaw::with_m(a.d, m).map(EpiInput::Ball))
            .collect::<rogozin_core::Result<_>>()?
    } else {
        (0..a.n).map(|_| EpiInput::Ball(BallLaw::unit_volume(a.d))).collect()
    };
    let p = match &a.projection {
        Some(path) => {
            let text = ctx.read("projection", path)?;
            ProjectionJson::from_json_str(&text)?
        }
        None => random_projection_seeded(inputs.len(), a.k, ctx.seed())?,
    };
    let method = match a.method {
        MethodArg::Auto => EpiMethod::Auto,
        MethodArg::Grid => EpiMethod::Grid,
        MethodArg::MonteCarlo => EpiMethod::MonteCarlo,
    };
    let mc = McSettings {
        samples: a.samples,
        workers: a.workers,
        mode_count: None,
    };
    let r = verify_epi(&inputs, &p, a.d, method, &mc, ctx.seed())?;
    let (rel, abs) = match r.method {
        EpiMethod::Grid => (GRID_REL_TOL, r.error_estimate),
        _ => (0.0, 0.0),
    };
    let details = json!({
        "lhs_estimate": r.lhs,
        "n": r.n,
        "k": r.k,
        "d": r.d,
        "c": r.c,
        "branch": r.branch,
        "gamma": r.gamma,
        "method": r.method,
        "samples": r.samples,
    });
    Ok(vec![ctx.report(r.lhs_bound, r.rhs, rel, abs, r.error_estimate, details)])
}

pub fn group_sup(ctx: &mut Context, a: &GroupSupArgs) -> Result<Vec<Report>> {
    if Path::new(&a.group).is_file() {
        ctx.read("group", Path::new(&a.group))?;
    }
    let group = FiniteGroup::from_name_or_path(&a.group)?;
    let mode = match a.restarts {
        Some(restarts) => SearchMode::Randomized {
            restarts,
            seed: ctx.seed(),
        },
        None => SearchMode::Exhaustive { budget: a.budget },
    };
    let sup = sup_extreme_convolution(&group, &a.m, mode)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed());
    let mut sampled = 0.0f64;
    for _ in 0..a.samples {
        let mut acc = sample_pm_with(group.order(), a.m[0], &mut rng)?;
        for &m in &a.m[1..] {
            let next = sample_pm_with(group.order(), m, &mut rng)?;
            acc = convolve_on_group(&acc, &next, &group)?;
        }
        sampled = sampled.max(m_discrete(&acc).value());
    }
    let details = json!({
        "order": group.order(),
        "haar_floor": 1.0 / group.order() as f64,
        "sup_value": sup.sup_value,
        "argmax": sup.argmax,
        "lower_bound_only": sup.lower_bound_only,
        "tuples_evaluated": sup.tuples_evaluated.to_string(),
        "sampled_tuples": a.samples,
    });
    Ok(vec![ctx.report(sampled, sup.sup_value, 0.0, GROUP_TOL, 0.0, details)])
}

pub fn int_epi(ctx: &mut Context, a: &IntEpiArgs) -> Result<Vec<Report>> {
    if let Some(path) = &a.input {
        let list: Vec<IntegerDensity> = ctx.read_json("input", path)?;
        let r = epi_discrete(&list)?;
        let details = json!({
            "levels": r.levels,
            "rhs_closed_form": r.rhs_closed_form,
        });
        return Ok(vec![ctx.report(r.lhs, r.rhs_uniform, 0.0, INT_TOL, 0.0, details)]);
    }
    let (l, n) = a.l.zip(a.n).ok_or_else(|| usage("int-epi needs --l and --n, or --input"))?;
    let bound = mattner_roos_bound(l, n)?;
    let sum = convolve_int_all(&vec![uniform_block(l as usize); n as usize])?;
    let details = json!({ "l": l, "n": n, "ratio": sum.max_mass() / bound });
    Ok(vec![ctx.report(sum.max_mass(), bound, 0.0, 0.0, 0.0, details)])
}

pub fn rearrange_check(ctx: &mut Context, a: &RearrangeArgs) -> Result<Vec<Report>> {
    if !a.sizes.is_empty() {
        let r = verify_discrete_rearrangement(&a.sizes, a.range, a.budget)?;
        let details = json!({
            "mode": "integer",
            "range_bound": r.range_bound,
            "tuples_checked": r.tuples_checked.to_string(),
            "violations": r.violations,
            "worst_slack": r.worst_slack,
            "worst_tuple": r.worst_tuple,
        });
        return Ok(vec![ctx.report(r.max_lhs, r.rhs, 0.0, INT_TOL, 0.0, details)]);
    }
    let grids = match &a.input {
        Some(path) => {
            let list: Vec<DensityJson> = ctx.read_json("input", path)?;
            grids_from(list)?
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed());
            let step = rng.random_range(0.1..1.0);
            (0..a.n).map(|_| random_grid(&mut rng, step)).collect()
        }
    };
    let r = rearranged_max_bound(&grids)?;
    let details = json!({ "mode": "grid", "summands": grids.len() });
    Ok(vec![ctx.report(r.lhs, r.rhs, 0.0, MAX_BOUND_TOL, 0.0, details)])
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BllInput {
    functions: Vec<DensityJson>,
    matrix: Vec<Vec<f64>>,
}

pub fn bll_check(ctx: &mut Context, a: &BllArgs) -> Result<Vec<Report>> {
    let (functions, matrix) = match &a.input {
        Some(path) => {
            let input: BllInput = ctx.read_json("input", path)?;
            let rows = input.matrix.len();
            let cols = input.matrix.first().map_or(0, Vec::len);
            if rows == 0 || input.matrix.iter().any(|r| r.len() != cols) {
                return Err(usage("matrix must be a nonempty rectangular array"));
            }
            let m = DMatrix::from_fn(rows, cols, |i, j| input.matrix[i][j]);
            (grids_from(input.functions)?, m)
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed());
            let step = rng.random_range(0.1..0.5);
            let f = (0..a.n).map(|_| random_grid(&mut rng, step)).collect();
            let m = DMatrix::from_fn(a.n, a.k, |_, _| rng.random_range(-1.0..1.0));
            (f, m)
        }
    };
    let r = bll_check_1d(&functions, &matrix, a.quad_nodes)?;
    // midpoint error is O(h) on step functions: the halved-grid difference bounds it
    let coarse = bll_check_1d(&functions, &matrix, (r.cells_per_axis / 2).max(1))?;
    let err = (r.lhs - coarse.lhs).abs() + (r.rhs - coarse.rhs).abs();
    let details = json!({ "cells_per_axis": r.cells_per_axis, "strict": r.satisfied });
    Ok(vec![ctx.report(r.lhs, r.rhs, BLL_REL_TOL, BLL_ABS_TOL + err, err, details)])
}

pub fn ball_slice(ctx: &Context, a: &BallSliceArgs) -> Result<Vec<Report>> {
    let norm = a.theta.iter().map(|t| t * t).sum::<f64>().sqrt();
    if !norm.is_finite() || norm <= 0.0 {
        return Err(usage("--theta must have a positive finite norm"));
    }
    let theta: Vec<f64> = a.theta.iter().map(|t| t / norm).collect();
    let m: Vec<f64> = if a.m.is_empty() {
        vec![1.0; theta.len()]
    } else if a.m.len() == theta.len() {
        a.m.clone()
    } else {
        return Err(usage(format!("--m has {} entries, --theta has {}", a.m.len(), theta.len())));
    };
    let radii: Vec<f64> = m
        .iter()
        .map(|&mi| BallLaw::with_m(a.d, mi).map(|b| b.radius))
        .collect::<rogozin_core::Result<_>>()?;
    let est = density_at_zero_sum_balls(a.d, &theta, &radii, &quad_spec(a.quad_nodes, a.quad_truncation))?;
    // M(Σθᵢ Mᵢ^{-1/d} Uᵢ) = κ^{-d} M(Σθ'ᵢUᵢ) with κ² = Σθᵢ²Mᵢ^{-2/d}
    let dim = a.d as f64;
    let kappa2: f64 = theta.iter().zip(&m).map(|(t, mi)| t * t * mi.powf(-2.0 / dim)).sum();
    let rhs = lp_bound_constant(a.d) * kappa2.powf(-dim / 2.0);
    let details = json!({
        "theta": theta,
        "radii": radii,
        "truncation": est.truncation,
        "tail_correction": est.tail_correction,
        "early_stop": est.early_stop,
    });
    Ok(vec![ctx.report(est.value, rhs, SLICE_REL_TOL, est.error_estimate, est.error_estimate, details)])
}

pub fn charfun_bound(ctx: &Context, a: &CharfunArgs) -> Result<Vec<Report>> {
    let ball = match a.m {
        Some(m) => BallLaw::with_m(a.d, m)?,
        None => BallLaw::unit_volume(a.d),
    };
    let quad = quad_spec(a.quad_nodes, a.quad_truncation);
    a.p.iter()
        .map(|&p| {
            let est = charfun_pnorm_integral(a.d, ball.radius, p, &quad)?;
            let rhs = lp_bound(a.d, ball.m(), p);
            let details = json!({
                "p": p,
                "radius": ball.radius,
                "m": ball.m(),
                "truncation": est.truncation,
                "tail_correction": est.tail_correction,
            });
            Ok(ctx.report(est.value, rhs, LEMMA_REL_TOL, 0.0, est.error_estimate, details))
        })
        .collect()
}
