//! Histogram estimate of the maximum density of `Vᵀ X` for an orthonormal
//! `n×k` frame `V`, with a one-sided upper confidence bound.
//!
//! The modal cell is chosen on one sample and counted on an independent one,
//! so the count is a plain binomial draw and the bound carries no
//! max-of-noise bias.

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EpiInput;
use crate::error::{Error, Result};

/// One-sided 99% normal quantile.
pub const UCB_Z: f64 = 2.326;
/// Largest supported projected dimension `d·k`.
pub const MAX_MC_DIM: usize = 4;

const MAX_CELLS: usize = 1 << 22;
const MIN_MODE_COUNT: f64 = 50.0;
const MODE_FRACTION: f64 = 64.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    pub samples: u64,
    /// Fixed number of independent sample streams; results do not depend on
    /// the thread count.
    pub workers: usize,
    /// Expected count in the modal cell; defaults to `max(50, samples/64)`.
    pub mode_count: Option<f64>,
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings {
            samples: 1_000_000,
            workers: 8,
            mode_count: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub upper_bound: f64,
    pub samples: u64,
    pub mode_count: u64,
    pub cell_width: f64,
}

enum Sampler {
    Ball { d: usize, radius: f64 },
    Grid { left: f64, step: f64, index: WeightedIndex<f64> },
}

impl Sampler {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            Sampler::Ball { d, radius } => {
                if *d == 1 {
                    out[0] = radius * (2.0 * rng.random::<f64>() - 1.0);
                    return;
                }
                let mut norm2 = 0.0;
                for x in out.iter_mut() {
                    *x = rng.sample(StandardNormal);
                    norm2 += *x * *x;
                }
                let scale = radius * rng.random::<f64>().powf(1.0 / *d as f64) / norm2.sqrt();
                out.iter_mut().for_each(|x| *x *= scale);
            }
            Sampler::Grid { left, step, index } => {
                let cell = index.sample(rng);
                out[0] = left + (cell as f64 + rng.random::<f64>()) * step;
            }
        }
    }
}

struct Layout {
    lo: Vec<f64>,
    width: f64,
    shape: Vec<usize>,
}

impl Layout {
    fn new(lo: Vec<f64>, hi: &[f64], width: f64) -> Self {
        let shape = lo
            .iter()
            .zip(hi)
            .map(|(l, h)| (((h - l) / width).ceil() as usize).max(1))
            .collect();
        Layout { lo, width, shape }
    }

    fn cells(&self) -> usize {
        self.shape.iter().product()
    }

    fn index(&self, y: &[f64]) -> usize {
        let mut idx = 0;
        for ((v, l), &s) in y.iter().zip(&self.lo).zip(&self.shape) {
            let i = (((v - l) / self.width) as usize).min(s - 1);
            idx = idx * s + i;
        }
        idx
    }
}

#[allow(clippy::too_many_arguments)]
fn histogram(
    samplers: &[Sampler],
    frame: &DMatrix<f64>,
    d: usize,
    layout: &Layout,
    total: u64,
    workers: usize,
    seed: u64,
    stream_base: u64,
) -> Vec<u32> {
    let n = samplers.len();
    let k = frame.ncols();
    let per = total / workers as u64;
    let extra = total % workers as u64;
    let parts: Vec<Vec<u32>> = (0..workers)
        .into_par_iter()
        .map(|w| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream_base + w as u64);
            let count = per + u64::from((w as u64) < extra);
            let mut hist = vec![0u32; layout.cells()];
            let mut x = vec![0.0; n * d];
            let mut y = vec![0.0; k * d];
            for _ in 0..count {
                for (i, s) in samplers.iter().enumerate() {
                    s.draw(&mut rng, &mut x[i * d..(i + 1) * d]);
                }
                for j in 0..k {
                    for c in 0..d {
                        y[j * d + c] = (0..n).map(|i| frame[(i, j)] * x[i * d + c]).sum();
                    }
                }
                hist[layout.index(&y)] += 1;
            }
            hist
        })
        .collect();
    let mut merged = vec![0u32; layout.cells()];
    for part in parts {
        for (m, p) in merged.iter_mut().zip(part) {
            *m += p;
        }
    }
    merged
}

/// Density of the modal histogram cell of `Vᵀ X`, counted on a fresh sample,
/// with its 99% upper bound `(c + z√c)/(N·vol)`.
pub(super) fn estimate_max(
    inputs: &[EpiInput],
    frame: &DMatrix<f64>,
    d: usize,
    settings: &McSettings,
    seed: u64,
) -> Result<McEstimate> {
    let dim = d * frame.ncols();
    if dim > MAX_MC_DIM {
        return Err(Error::DimensionCap(format!(
            "Monte Carlo histogram supports d·k ≤ {MAX_MC_DIM}, got {dim}"
        )));
    }
    if settings.samples == 0 || settings.workers == 0 {
        return Err(Error::InvalidArgument("need a positive sample count and worker count".into()));
    }
    let samplers: Vec<Sampler> = inputs
        .iter()
        .map(|x| match x {
            EpiInput::Ball(b) => Ok(Sampler::Ball {
                d: b.dimension,
                radius: b.radius,
            }),
            EpiInput::Grid(g) => Ok(Sampler::Grid {
                left: g.left(),
                step: g.step(),
                index: WeightedIndex::new(g.values())
                    .map_err(|e| Error::InvalidDensity(e.to_string()))?,
            }),
        })
        .collect::<Result<_>>()?;

    // coordinate-wise range of each summand, then of the projection
    let extents: Vec<(f64, f64)> = inputs.iter().map(EpiInput::extent).collect();
    let k = frame.ncols();
    let mut lo = vec![0.0; dim];
    let mut hi = vec![0.0; dim];
    for j in 0..k {
        let (mut a, mut b) = (0.0, 0.0);
        for (i, &(l, h)) in extents.iter().enumerate() {
            let v = frame[(i, j)];
            a += (v * l).min(v * h);
            b += (v * l).max(v * h);
        }
        for c in 0..d {
            lo[j * d + c] = a;
            hi[j * d + c] = b;
        }
    }
    let box_volume: f64 = lo.iter().zip(&hi).map(|(l, h)| h - l).product();
    if !(box_volume > 0.0) {
        return Err(Error::Degenerate("projected support has no volume".into()));
    }

    let total = settings.samples;
    let target = settings
        .mode_count
        .unwrap_or((total as f64 / MODE_FRACTION).max(MIN_MODE_COUNT));

    let pilot_total = (total / 10).max(10_000);
    let pilot_cells_per_axis = ((pilot_total as f64 / 400.0).powf(1.0 / dim as f64)).floor().max(4.0);
    let pilot_width = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| (h - l) / pilot_cells_per_axis)
        .fold(0.0, f64::max);
    let pilot_layout = Layout::new(lo.clone(), &hi, pilot_width);
    let pilot = histogram(&samplers, frame, d, &pilot_layout, pilot_total, settings.workers, seed, 0);
    let pilot_max = *pilot.iter().max().unwrap() as f64;
    let pilot_m = pilot_max / (pilot_total as f64 * pilot_width.powi(dim as i32));

    let mut width = (target / (total as f64 * pilot_m)).powf(1.0 / dim as f64);
    let mut layout = Layout::new(lo.clone(), &hi, width);
    while layout.cells() > MAX_CELLS {
        width *= 1.25;
        layout = Layout::new(lo.clone(), &hi, width);
    }
    let chosen = histogram(&samplers, frame, d, &layout, total, settings.workers, seed, settings.workers as u64);
    let modal = (0..chosen.len()).max_by_key(|&i| (chosen[i], std::cmp::Reverse(i))).unwrap();
    let counts = histogram(
        &samplers,
        frame,
        d,
        &layout,
        total,
        settings.workers,
        seed,
        2 * settings.workers as u64,
    );
    let c = counts[modal] as f64;
    let scale = total as f64 * width.powi(dim as i32);
    Ok(McEstimate {
        estimate: c / scale,
        upper_bound: (c + UCB_Z * c.sqrt()) / scale,
        samples: total,
        mode_count: c as u64,
        cell_width: width,
    })
}
