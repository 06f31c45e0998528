//! Single-threaded two-phase raster scan over the full causal
//! half-neighbourhood.
//!
//! One iteration is a forward sweep in raster order followed by a backward
//! sweep in reverse raster order. This is the baseline engine and stays
//! single-threaded.

use crate::error::Result;
use crate::grid::{ScalarGrid, TransformParams};
use crate::metric::{relax, serial_neighbor_offsets, NeighborOffset, ScanPhase};

fn check_inputs(image: &ScalarGrid, dist: &ScalarGrid, params: &TransformParams) -> Result<()> {
    params.validate()?;
    image.check_geometry(dist)
}

/// Runs `params.iterations` forward/backward rounds over `dist`.
pub fn serial_scan(
    image: &ScalarGrid,
    mut dist: ScalarGrid,
    params: &TransformParams,
) -> Result<ScalarGrid> {
    check_inputs(image, &dist, params)?;
    let forward = serial_neighbor_offsets(image.ndim(), ScanPhase::Forward, image.spacing())?;
    let backward = serial_neighbor_offsets(image.ndim(), ScanPhase::Backward, image.spacing())?;
    let shape = image.shape3();
    for _ in 0..params.iterations {
        sweep(image.data(), dist.data_mut(), shape, &forward, ScanPhase::Forward, params.lambda);
        sweep(image.data(), dist.data_mut(), shape, &backward, ScanPhase::Backward, params.lambda);
    }
    Ok(dist)
}

/// A single forward or backward sweep, exposed for pass-level inspection.
pub fn serial_phase(
    image: &ScalarGrid,
    mut dist: ScalarGrid,
    phase: ScanPhase,
    params: &TransformParams,
) -> Result<ScalarGrid> {
    check_inputs(image, &dist, params)?;
    let stencil = serial_neighbor_offsets(image.ndim(), phase, image.spacing())?;
    sweep(image.data(), dist.data_mut(), image.shape3(), &stencil, phase, params.lambda);
    Ok(dist)
}

fn sweep(
    image: &[f32],
    dist: &mut [f32],
    [depth, height, width]: [usize; 3],
    stencil: &[NeighborOffset],
    phase: ScanPhase,
    lambda: f64,
) {
    let strides = [(height * width) as isize, width as isize, 1];
    let taps: Vec<(isize, [isize; 3], f64)> = stencil
        .iter()
        .map(|o| {
            let flat = o.delta.iter().zip(strides).map(|(d, s)| d * s).sum();
            (flat, o.delta, o.rho * o.rho)
        })
        .collect();

    let mut visit = |z: usize, y: usize, x: usize| {
        let p = (z * height + y) * width + x;
        let ip = image[p];
        let mut d = dist[p];
        for &(flat, [dz, dy, dx], spatial_sq) in &taps {
            let (nz, ny, nx) = (z as isize + dz, y as isize + dy, x as isize + dx);
            if nz < 0
                || ny < 0
                || nx < 0
                || nz >= depth as isize
                || ny >= height as isize
                || nx >= width as isize
            {
                continue;
            }
            let q = (p as isize + flat) as usize;
            d = relax(d, dist[q], spatial_sq, ip as f64 - image[q] as f64, lambda);
        }
        dist[p] = d;
    };

    match phase {
        ScanPhase::Forward => {
            for z in 0..depth {
                for y in 0..height {
                    for x in 0..width {
                        visit(z, y, x);
                    }
                }
            }
        }
        ScanPhase::Backward => {
            for z in (0..depth).rev() {
                for y in (0..height).rev() {
                    for x in (0..width).rev() {
                        visit(z, y, x);
                    }
                }
            }
        }
    }
}
