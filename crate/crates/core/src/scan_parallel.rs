//! Directional-pass raster scan.
//!
//! A pass walks one axis in one orientation. Each row (2D) or plane (3D) is
//! relaxed from the previous row/plane only, so the elements of a row/plane
//! are independent of each other and are split across workers. The sweep
//! does not advance until every element of the current row/plane is done.
//!
//! A round runs every direction once: top-bottom, bottom-top, left-right,
//! right-left, with front-back and back-front first for volumes.

use rayon::prelude::*;
use rayon::ThreadPool;

use crate::error::{GeodistError, Result};
use crate::grid::{ScalarGrid, TransformParams};
use crate::metric::{pass_neighbor_offsets, relax, PassDirection};
use crate::scan_serial::serial_scan;

/// Smallest number of elements handed to one worker.
const MIN_CHUNK: usize = 64;

/// Default change threshold for [`scan_to_fixpoint`] with `f32` storage.
pub const DEFAULT_FIXPOINT_TOL: f32 = 1e-6;

/// Worker pool for the per-row/per-plane fork-join. One worker runs inline.
pub(crate) struct Workers {
    count: usize,
    pool: Option<ThreadPool>,
}

impl Workers {
    pub(crate) fn new(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(GeodistError::InvalidParam {
                name: "workers",
                value: 0.0,
            });
        }
        let pool = if count > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(count)
                    .build()
                    .map_err(|e| GeodistError::WorkerPool(e.to_string()))?,
            )
        } else {
            None
        };
        Ok(Self { count, pool })
    }
}

/// A pass laid out on a buffer whose innermost axis is contiguous.
///
/// Passes along depth or height sweep the original buffer. Passes along
/// width run on a copy with height and width swapped, so that every pass
/// reads and writes whole contiguous rows.
struct PassPlan {
    /// Buffer extents `(depth, rows, cols)`, cols contiguous.
    shape: [usize; 3],
    /// Axis swept in the buffer: 0 (planes) or 1 (rows).
    sweep_axis: usize,
    orientation: isize,
    /// (offset along the in-slice row axis, offset along cols, rho^2).
    taps: Vec<(isize, isize, f64)>,
    transposed: bool,
}

impl PassPlan {
    fn new(grid: &ScalarGrid, direction: PassDirection) -> Result<Self> {
        let offsets = pass_neighbor_offsets(direction, grid.ndim(), grid.spacing())?;
        let [d, h, w] = grid.shape3();
        let (shape, sweep_axis, transposed, taps) = match direction.axis() {
            0 => ([d, h, w], 0, false, offsets.iter().map(|o| (o.delta[1], o.delta[2], o.rho * o.rho)).collect()),
            1 => ([d, h, w], 1, false, offsets.iter().map(|o| (o.delta[0], o.delta[2], o.rho * o.rho)).collect()),
            _ => ([d, w, h], 1, true, offsets.iter().map(|o| (o.delta[0], o.delta[1], o.rho * o.rho)).collect()),
        };
        Ok(Self {
            shape,
            sweep_axis,
            orientation: direction.orientation(),
            taps,
            transposed,
        })
    }

    /// (rows per slice, stride between slices, stride between rows of a slice).
    fn layout(&self) -> (usize, usize, usize) {
        let [d, h, w] = self.shape;
        if self.sweep_axis == 0 {
            (h, h * w, w)
        } else {
            (d, w, h * w)
        }
    }

    /// Sweep order of slice indices, starting from the second slice.
    fn slices(&self) -> Vec<(usize, usize)> {
        let n = self.shape[self.sweep_axis];
        if self.orientation > 0 {
            (1..n).map(|s| (s, s - 1)).collect()
        } else {
            (0..n.saturating_sub(1)).rev().map(|s| (s, s + 1)).collect()
        }
    }

    /// Relaxes `out`, which holds elements `start..start + out.len()` of
    /// slice `cur` (row-major over rows x cols), from slice `prev`.
    #[allow(clippy::too_many_arguments)]
    fn relax_chunk(
        &self,
        out: &mut [f32],
        start: usize,
        dist: &[f32],
        image: &[f32],
        cur: usize,
        prev: usize,
        lambda: f64,
    ) {
        let cols = self.shape[2];
        let (rows, slice_stride, row_stride) = self.layout();
        let mut k = start;
        let mut filled = 0;
        while filled < out.len() {
            let (r, j0) = (k / cols, k % cols);
            let j1 = cols.min(j0 + out.len() - filled);
            let seg = &mut out[filled..filled + (j1 - j0)];
            let base = cur * slice_stride + r * row_stride;
            seg.copy_from_slice(&dist[base + j0..base + j1]);
            let img = &image[base..base + cols];
            for &(dr, dc, spatial_sq) in &self.taps {
                let pr = r as isize + dr;
                if pr < 0 || pr >= rows as isize {
                    continue;
                }
                let pbase = prev * slice_stride + pr as usize * row_stride;
                let prev_d = &dist[pbase..pbase + cols];
                let prev_i = &image[pbase..pbase + cols];
                let lo = (j0 as isize).max(-dc) as usize;
                let hi = (j1 as isize).min(cols as isize - dc) as usize;
                if lo >= hi {
                    continue;
                }
                let q0 = (lo as isize + dc) as usize;
                let q1 = (hi as isize + dc) as usize;
                for (((o, &ip), &dq), &iq) in seg[lo - j0..hi - j0]
                    .iter_mut()
                    .zip(&img[lo..hi])
                    .zip(&prev_d[q0..q1])
                    .zip(&prev_i[q0..q1])
                {
                    *o = relax(*o, dq, spatial_sq, ip as f64 - iq as f64, lambda);
                }
            }
            filled += j1 - j0;
            k += j1 - j0;
        }
    }

    /// Runs the pass over a buffer already laid out for it.
    fn run(&self, dist: &mut [f32], image: &[f32], lambda: f64, workers: &Workers) {
        let (rows, slice_stride, row_stride) = self.layout();
        let cols = self.shape[2];
        let len = rows * cols;
        let chunk = len.div_ceil(workers.count).max(MIN_CHUNK);
        let mut scratch = vec![0f32; len];
        for (cur, prev) in self.slices() {
            {
                let read: &[f32] = dist;
                let fill = |(c, out): (usize, &mut [f32])| {
                    self.relax_chunk(out, c * chunk, read, image, cur, prev, lambda)
                };
                match &workers.pool {
                    Some(pool) if len > chunk => {
                        pool.install(|| scratch.par_chunks_mut(chunk).enumerate().for_each(fill))
                    }
                    _ => scratch.chunks_mut(chunk).enumerate().for_each(fill),
                }
            }
            for (r, row) in scratch.chunks_exact(cols).enumerate() {
                let base = cur * slice_stride + r * row_stride;
                dist[base..base + cols].copy_from_slice(row);
            }
        }
    }
}

/// Swaps the two inner axes of a `(depth, rows, cols)` buffer.
fn transpose_inner(src: &[f32], [d, h, w]: [usize; 3], dst: &mut [f32]) {
    for z in 0..d {
        let plane = z * h * w;
        for y in 0..h {
            for x in 0..w {
                dst[plane + x * h + y] = src[plane + y * w + x];
            }
        }
    }
}

/// Runs `plans` in order, moving `dist` in and out of the transposed layout
/// as needed.
fn run_plans(plans: &[PassPlan], image: &ScalarGrid, dist: &mut ScalarGrid, lambda: f64, workers: &Workers, rounds: usize) {
    let shape = image.shape3();
    let [d, h, w] = shape;
    let needs_transpose = plans.iter().any(|p| p.transposed);
    let mut image_t = Vec::new();
    let mut dist_t = Vec::new();
    if needs_transpose {
        image_t = vec![0f32; image.len()];
        dist_t = vec![0f32; image.len()];
        transpose_inner(image.data(), shape, &mut image_t);
    }
    for _ in 0..rounds {
        let mut in_transposed = false;
        for plan in plans {
            if plan.transposed != in_transposed {
                if plan.transposed {
                    transpose_inner(dist.data(), shape, &mut dist_t);
                } else {
                    transpose_inner(&dist_t, [d, w, h], dist.data_mut());
                }
                in_transposed = plan.transposed;
            }
            if in_transposed {
                plan.run(&mut dist_t, &image_t, lambda, workers);
            } else {
                plan.run(dist.data_mut(), image.data(), lambda, workers);
            }
        }
        if in_transposed {
            transpose_inner(&dist_t, [d, w, h], dist.data_mut());
        }
    }
}

fn check_inputs(image: &ScalarGrid, dist: &ScalarGrid, params: &TransformParams) -> Result<()> {
    params.validate()?;
    image.check_geometry(dist)
}

/// One directional pass over `dist`.
pub fn directional_pass(
    mut dist: ScalarGrid,
    image: &ScalarGrid,
    direction: PassDirection,
    params: &TransformParams,
    workers: usize,
) -> Result<ScalarGrid> {
    check_inputs(image, &dist, params)?;
    let plan = PassPlan::new(image, direction)?;
    let workers = Workers::new(workers)?;
    run_plans(&[plan], image, &mut dist, params.lambda, &workers, 1);
    Ok(dist)
}

/// Runs `params.iterations` rounds of all directional passes.
pub fn parallel_scan(
    image: &ScalarGrid,
    dist: ScalarGrid,
    params: &TransformParams,
    workers: usize,
) -> Result<ScalarGrid> {
    check_inputs(image, &dist, params)?;
    let workers = Workers::new(workers)?;
    parallel_scan_with(image, dist, params, &workers)
}

pub(crate) fn parallel_scan_with(
    image: &ScalarGrid,
    mut dist: ScalarGrid,
    params: &TransformParams,
    workers: &Workers,
) -> Result<ScalarGrid> {
    let plans = PassDirection::for_rank(image.ndim())?
        .iter()
        .map(|&d| PassPlan::new(image, d))
        .collect::<Result<Vec<_>>>()?;
    run_plans(&plans, image, &mut dist, params.lambda, workers, params.iterations);
    Ok(dist)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanEngine {
    Serial,
    Parallel,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FixpointStatus {
    Converged,
    /// `max_rounds` ran out while the last round still moved some element
    /// by more than the tolerance.
    MaxRoundsReached { last_change: f32 },
}

#[derive(Clone, Debug)]
#[must_use]
pub struct FixpointOutcome {
    pub grid: ScalarGrid,
    pub rounds: usize,
    pub status: FixpointStatus,
}

impl FixpointOutcome {
    pub fn converged(&self) -> bool {
        self.status == FixpointStatus::Converged
    }
}

fn max_decrease(before: &[f32], after: &[f32]) -> f32 {
    before
        .iter()
        .zip(after)
        .map(|(b, a)| b - a)
        .fold(0.0, f32::max)
}

/// Repeats single-iteration rounds until a round changes no element by more
/// than `tol`, or `max_rounds` rounds have run.
pub fn scan_to_fixpoint(
    image: &ScalarGrid,
    dist: ScalarGrid,
    params: &TransformParams,
    engine: ScanEngine,
    workers: usize,
    max_rounds: usize,
    tol: f32,
) -> Result<FixpointOutcome> {
    check_inputs(image, &dist, params)?;
    if max_rounds == 0 {
        return Err(GeodistError::InvalidParam {
            name: "max_rounds",
            value: 0.0,
        });
    }
    if !(tol >= 0.0) {
        return Err(GeodistError::InvalidParam {
            name: "tol",
            value: tol as f64,
        });
    }
    let single = TransformParams {
        iterations: 1,
        ..*params
    };
    let pool = match engine {
        ScanEngine::Parallel => Some(Workers::new(workers)?),
        ScanEngine::Serial => None,
    };
    let mut grid = dist;
    let mut last_change = 0.0;
    for round in 1..=max_rounds {
        let before = grid.data().to_vec();
        grid = match &pool {
            Some(w) => parallel_scan_with(image, grid, &single, w)?,
            None => serial_scan(image, grid, &single)?,
        };
        last_change = max_decrease(&before, grid.data());
        if last_change <= tol {
            return Ok(FixpointOutcome {
                grid,
                rounds: round,
                status: FixpointStatus::Converged,
            });
        }
    }
    Ok(FixpointOutcome {
        grid,
        rounds: max_rounds,
        status: FixpointStatus::MaxRoundsReached { last_change },
    })
}
