//! Local step cost and the neighbour stencils used by the scan engines.
//!
//! Offsets are always expressed in `(depth, height, width)` order; 2D
//! stencils keep the depth component at zero.

use crate::error::{GeodistError, Result};

/// Lattice offset to a neighbour plus its physical length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeighborOffset {
    pub delta: [isize; 3],
    pub rho: f64,
}

impl NeighborOffset {
    /// `spacing` is per-axis in `(depth, height, width)` order.
    pub fn new(delta: [isize; 3], spacing: [f64; 3]) -> Self {
        let rho = delta
            .iter()
            .zip(spacing)
            .map(|(&d, s)| (d as f64 * s).powi(2))
            .sum::<f64>()
            .sqrt();
        Self { delta, rho }
    }

    pub fn negated(&self) -> Self {
        Self {
            delta: self.delta.map(|d| -d),
            rho: self.rho,
        }
    }
}

/// One sweep of the directional engine: the axis swept sequentially and the
/// order it is walked in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PassDirection {
    FrontBack,
    BackFront,
    TopBottom,
    BottomTop,
    LeftRight,
    RightLeft,
}

impl PassDirection {
    const PLANAR: [PassDirection; 4] = [
        PassDirection::TopBottom,
        PassDirection::BottomTop,
        PassDirection::LeftRight,
        PassDirection::RightLeft,
    ];
    const VOLUMETRIC: [PassDirection; 6] = [
        PassDirection::FrontBack,
        PassDirection::BackFront,
        PassDirection::TopBottom,
        PassDirection::BottomTop,
        PassDirection::LeftRight,
        PassDirection::RightLeft,
    ];

    /// Directions making up one round, in execution order.
    pub fn for_rank(ndim: usize) -> Result<&'static [PassDirection]> {
        match ndim {
            2 => Ok(&Self::PLANAR),
            3 => Ok(&Self::VOLUMETRIC),
            n => Err(GeodistError::BadRank(n)),
        }
    }

    /// Swept axis in `(depth, height, width)` order.
    pub fn axis(self) -> usize {
        match self {
            PassDirection::FrontBack | PassDirection::BackFront => 0,
            PassDirection::TopBottom | PassDirection::BottomTop => 1,
            PassDirection::LeftRight | PassDirection::RightLeft => 2,
        }
    }

    /// +1 when the sweep walks increasing indices.
    pub fn orientation(self) -> isize {
        match self {
            PassDirection::FrontBack | PassDirection::TopBottom | PassDirection::LeftRight => 1,
            _ => -1,
        }
    }

    pub fn valid_for(self, ndim: usize) -> bool {
        match ndim {
            2 => self.axis() != 0,
            3 => true,
            _ => false,
        }
    }
}

/// Serial scan phase: forward walks in raster order, backward in reverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanPhase {
    Forward,
    Backward,
}

/// Maps rank-ordered spacing to `(depth, height, width)`.
pub(crate) fn spacing3(spacing: &[f32]) -> Result<[f64; 3]> {
    match spacing {
        [h, w] => Ok([1.0, *h as f64, *w as f64]),
        [d, h, w] => Ok([*d as f64, *h as f64, *w as f64]),
        s => Err(GeodistError::BadRank(s.len())),
    }
}

#[inline]
pub(crate) fn blend(spatial_sq: f64, intensity_diff: f64, lambda: f64) -> f64 {
    ((1.0 - lambda) * spatial_sq + lambda * intensity_diff * intensity_diff).sqrt()
}

/// Relaxes `current` through a neighbour holding `neighbour`; never returns
/// more than `current`.
#[inline]
pub(crate) fn relax(current: f32, neighbour: f32, spatial_sq: f64, intensity_diff: f64, lambda: f64) -> f32 {
    let candidate = neighbour as f64 + blend(spatial_sq, intensity_diff, lambda);
    if candidate < current as f64 {
        candidate as f32
    } else {
        current
    }
}

/// Cost of stepping between neighbours `p` and `q`:
/// `sqrt((1 - lambda) * rho^2 + lambda * (I_p - I_q)^2)`.
pub fn step_cost(
    intensity_p: f32,
    intensity_q: f32,
    offset: &NeighborOffset,
    lambda: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(GeodistError::InvalidParam {
            name: "lambda",
            value: lambda,
        });
    }
    Ok(blend(
        offset.rho * offset.rho,
        intensity_p as f64 - intensity_q as f64,
        lambda,
    ))
}

/// Offsets from an element of the current row/plane into the previous
/// row/plane of a sweep: 3 in 2D, 9 in 3D.
pub fn pass_neighbor_offsets(
    direction: PassDirection,
    ndim: usize,
    spacing: &[f32],
) -> Result<Vec<NeighborOffset>> {
    if !direction.valid_for(ndim) {
        return Err(GeodistError::InvalidDirection { direction, ndim });
    }
    if spacing.len() != ndim {
        return Err(GeodistError::DimensionMismatch {
            ndim,
            dims: ndim,
            spacing: spacing.len(),
        });
    }
    let spacing = spacing3(spacing)?;
    let axis = direction.axis();
    // 2D grids have no depth axis to spread across.
    let in_plane: Vec<usize> = (0..3).filter(|&a| a != axis && (ndim == 3 || a != 0)).collect();
    let mut offsets = Vec::with_capacity(9);
    let spread: &[isize] = &[-1, 0, 1];
    let second: &[isize] = if in_plane.len() == 2 { spread } else { &[0] };
    for &a in spread {
        for &b in second {
            let mut delta = [0; 3];
            delta[axis] = -direction.orientation();
            delta[in_plane[0]] = a;
            if in_plane.len() == 2 {
                delta[in_plane[1]] = b;
            }
            offsets.push(NeighborOffset::new(delta, spacing));
        }
    }
    Ok(offsets)
}

/// Causal half of the 8-/26-neighbourhood for the forward phase, or its
/// mirror for the backward phase.
pub fn serial_neighbor_offsets(
    ndim: usize,
    phase: ScanPhase,
    spacing: &[f32],
) -> Result<Vec<NeighborOffset>> {
    if spacing.len() != ndim {
        return Err(GeodistError::DimensionMismatch {
            ndim,
            dims: ndim,
            spacing: spacing.len(),
        });
    }
    let spacing = spacing3(spacing)?;
    let depth: &[isize] = if ndim == 3 { &[-1, 0, 1] } else { &[0] };
    let mut offsets = Vec::with_capacity(13);
    for &dz in depth {
        for dy in -1..=1 {
            for dx in -1..=1 {
                let delta = [dz, dy, dx];
                // Lexicographically before the origin = already visited in raster order.
                if delta < [0, 0, 0] {
                    offsets.push(NeighborOffset::new(delta, spacing));
                }
            }
        }
    }
    if phase == ScanPhase::Backward {
        offsets.iter_mut().for_each(|o| *o = o.negated());
    }
    Ok(offsets)
}
