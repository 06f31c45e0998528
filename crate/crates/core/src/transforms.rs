//! Distance transforms and geodesic morphology built on the scan engines.
//!
//! Every operation initialises a distance grid from a mask and hands it to
//! [`relax`], which dispatches to the engine chosen in [`Solver`]. Masks are
//! binarised at 0.5 wherever hard membership is needed.

use crate::error::{GeodistError, Result};
use crate::grid::{ScalarGrid, TransformParams, INF_SENTINEL, MASK_THRESHOLD};
use crate::oracle::dijkstra_exact;
use crate::scan_parallel::{
    parallel_scan, scan_to_fixpoint, ScanEngine, DEFAULT_FIXPOINT_TOL,
};
use crate::scan_serial::serial_scan;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Serial,
    Parallel,
    /// Exact Dijkstra; ignores iteration counts. Meant for small inputs.
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fixpoint {
    pub max_rounds: usize,
    pub tol: f32,
}

impl Default for Fixpoint {
    fn default() -> Self {
        Self {
            max_rounds: 100,
            tol: DEFAULT_FIXPOINT_TOL,
        }
    }
}

/// Which engine to run, how many workers it may use, and whether to
/// iterate to convergence instead of running `params.iterations` rounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Solver {
    pub engine: Engine,
    pub workers: usize,
    pub fixpoint: Option<Fixpoint>,
}

impl Solver {
    pub fn serial() -> Self {
        Self {
            engine: Engine::Serial,
            workers: 1,
            fixpoint: None,
        }
    }

    pub fn parallel(workers: usize) -> Self {
        Self {
            engine: Engine::Parallel,
            workers,
            fixpoint: None,
        }
    }

    pub fn oracle() -> Self {
        Self {
            engine: Engine::Oracle,
            workers: 1,
            fixpoint: None,
        }
    }

    pub fn to_fixpoint(mut self) -> Self {
        self.fixpoint = Some(Fixpoint::default());
        self
    }
}

/// A relaxed distance grid plus how it was obtained.
#[derive(Clone, Debug, PartialEq)]
pub struct Relaxed {
    pub grid: ScalarGrid,
    /// Scan rounds executed (1 for the oracle).
    pub rounds: usize,
    /// False only when a fixpoint run hit its round cap.
    pub converged: bool,
}

/// Relaxes `init` over `image` with the engine in `solver`.
pub fn relax(
    image: &ScalarGrid,
    init: ScalarGrid,
    params: &TransformParams,
    solver: &Solver,
) -> Result<Relaxed> {
    params.validate()?;
    image.check_geometry(&init)?;
    let scan_engine = match solver.engine {
        Engine::Oracle => {
            let grid = dijkstra_exact(image, &init, params.lambda)?;
            return Ok(Relaxed {
                grid,
                rounds: 1,
                converged: true,
            });
        }
        Engine::Serial => ScanEngine::Serial,
        Engine::Parallel => ScanEngine::Parallel,
    };
    match solver.fixpoint {
        Some(fp) => {
            let out = scan_to_fixpoint(
                image,
                init,
                params,
                scan_engine,
                solver.workers,
                fp.max_rounds,
                fp.tol,
            )?;
            let converged = out.converged();
            Ok(Relaxed {
                grid: out.grid,
                rounds: out.rounds,
                converged,
            })
        }
        None => {
            let grid = match scan_engine {
                ScanEngine::Serial => serial_scan(image, init, params)?,
                ScanEngine::Parallel => parallel_scan(image, init, params, solver.workers)?,
            };
            Ok(Relaxed {
                grid,
                rounds: params.iterations,
                converged: true,
            })
        }
    }
}

/// 0 where the mask is at least 0.5, `INF_SENTINEL` elsewhere.
pub fn init_hard_seeds(seed_mask: &ScalarGrid) -> Result<ScalarGrid> {
    seed_mask.validate_mask()?;
    if !seed_mask.data().iter().any(|&v| v >= MASK_THRESHOLD) {
        return Err(GeodistError::EmptySeeds);
    }
    Ok(seed_mask.map(|v| if v >= MASK_THRESHOLD { 0.0 } else { INF_SENTINEL }))
}

fn check_pair(image: &ScalarGrid, mask: &ScalarGrid) -> Result<()> {
    image.check_geometry(mask)?;
    image.validate_intensity()?;
    mask.validate_mask()
}

pub fn geodesic_distance(
    image: &ScalarGrid,
    seed_mask: &ScalarGrid,
    params: &TransformParams,
    solver: &Solver,
) -> Result<Relaxed> {
    check_pair(image, seed_mask)?;
    relax(image, init_hard_seeds(seed_mask)?, params, solver)
}

/// Geodesic distance with `lambda = 0` on a flat image; spacing comes from
/// the mask.
pub fn euclidean_distance(seed_mask: &ScalarGrid, iterations: usize, solver: &Solver) -> Result<Relaxed> {
    let flat = seed_mask.filled_like(0.0);
    let params = TransformParams::new(0.0, 0.0, iterations)?;
    geodesic_distance(&flat, seed_mask, &params, solver)
}

/// Soft-mask seeding: starts from `nu * M` and relaxes, giving
/// `min_y (nu * M(y) + d(x, y))` at the fixpoint.
pub fn generalized_geodesic(
    image: &ScalarGrid,
    soft_mask: &ScalarGrid,
    params: &TransformParams,
    solver: &Solver,
) -> Result<Relaxed> {
    check_pair(image, soft_mask)?;
    params.validate()?;
    let nu = params.nu;
    let init = soft_mask.map(|m| (nu * m as f64).min(INF_SENTINEL as f64) as f32);
    if solver.engine == Engine::Oracle && !init.data().iter().any(|&v| v < INF_SENTINEL) {
        // Nothing below the sentinel: there is nothing to propagate.
        return Ok(Relaxed {
            grid: init,
            rounds: 0,
            converged: true,
        });
    }
    relax(image, init, params, solver)
}

/// Signed distance: negative inside the (thresholded) mask, positive
/// outside, magnitude equal to the distance to the other region.
pub fn signed_geodesic(
    image: &ScalarGrid,
    mask: &ScalarGrid,
    params: &TransformParams,
    solver: &Solver,
) -> Result<Relaxed> {
    check_pair(image, mask)?;
    let inside = mask.threshold();
    let outside = inside.map(|v| 1.0 - v);
    if !inside.data().contains(&1.0) {
        return Err(GeodistError::EmptySeeds);
    }
    if !outside.data().contains(&1.0) {
        return Err(GeodistError::EmptyComplement);
    }
    let to_inside = relax(image, init_hard_seeds(&inside)?, params, solver)?;
    let to_outside = relax(image, init_hard_seeds(&outside)?, params, solver)?;
    let data = to_inside
        .grid
        .data()
        .iter()
        .zip(to_outside.grid.data())
        .map(|(a, b)| a - b)
        .collect();
    Ok(Relaxed {
        grid: ScalarGrid::from_vec(mask.dims(), mask.spacing(), data)?,
        rounds: to_inside.rounds + to_outside.rounds,
        converged: to_inside.converged && to_outside.converged,
    })
}

/// Result of a geodesic dilation or erosion.
#[derive(Clone, Debug, PartialEq)]
pub struct Morphology {
    /// 0/1 output mask.
    pub mask: ScalarGrid,
    /// Distance map that was thresholded.
    pub distance: ScalarGrid,
    /// Set when the source region was empty (nothing to grow from or erode
    /// from).
    pub empty_sources: bool,
    pub rounds: usize,
    pub converged: bool,
}

fn check_theta(theta: f32) -> Result<()> {
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(GeodistError::InvalidParam {
            name: "theta",
            value: theta as f64,
        });
    }
    Ok(())
}

fn complement(mask: &ScalarGrid) -> ScalarGrid {
    mask.map(|v| 1.0 - v)
}

/// `[D(x; sources = mask) <= theta]` using the generalised transform with
/// prior `1 - mask` on the thresholded mask.
pub fn geodesic_dilate(
    image: &ScalarGrid,
    mask: &ScalarGrid,
    theta: f32,
    params: &TransformParams,
    solver: &Solver,
) -> Result<Morphology> {
    check_theta(theta)?;
    check_pair(image, mask)?;
    let binary = mask.threshold();
    let empty_sources = !binary.data().contains(&1.0);
    let prior = complement(&binary);
    let relaxed = generalized_geodesic(image, &prior, params, solver)?;
    let out = relaxed.grid.map(|d| if d <= theta { 1.0 } else { 0.0 });
    Ok(Morphology {
        mask: out,
        distance: relaxed.grid,
        empty_sources,
        rounds: relaxed.rounds,
        converged: relaxed.converged,
    })
}

/// `[D(x; sources = complement of mask) > theta]`, computed as the
/// complement of dilating the complement. An empty complement leaves the
/// mask all ones and sets `empty_sources`.
pub fn geodesic_erode(
    image: &ScalarGrid,
    mask: &ScalarGrid,
    theta: f32,
    params: &TransformParams,
    solver: &Solver,
) -> Result<Morphology> {
    check_theta(theta)?;
    check_pair(image, mask)?;
    let outside = complement(&mask.threshold());
    let mut dilated = geodesic_dilate(image, &outside, theta, params, solver)?;
    dilated.mask = if dilated.empty_sources {
        mask.filled_like(1.0)
    } else {
        complement(&dilated.mask)
    };
    Ok(dilated)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GsfParams {
    pub transform: TransformParams,
    /// Margin, in distance units.
    pub theta: f32,
}

impl GsfParams {
    pub fn validate(&self) -> Result<()> {
        self.transform.validate()?;
        check_theta(self.theta)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GsfOutput {
    /// Filtered 0/1 mask.
    pub mask: ScalarGrid,
    pub dilation: Morphology,
    pub erosion: Morphology,
}

/// Geodesic symmetric filtering as a geodesic closing: dilate the
/// thresholded mask by `theta`, then erode the result by `theta`.
pub fn gsf(
    image: &ScalarGrid,
    soft_mask: &ScalarGrid,
    params: &GsfParams,
    solver: &Solver,
) -> Result<GsfOutput> {
    params.validate()?;
    check_pair(image, soft_mask)?;
    let seed = soft_mask.threshold();
    let dilation = geodesic_dilate(image, &seed, params.theta, &params.transform, solver)?;
    let erosion = geodesic_erode(image, &dilation.mask, params.theta, &params.transform, solver)?;
    Ok(GsfOutput {
        mask: erosion.mask.clone(),
        dilation,
        erosion,
    })
}
