//! Dense scalar fields over 2D and 3D lattices.
//!
//! Storage is row-major with width fastest. Axes are ordered
//! `(depth, height, width)`; a 2D grid drops the depth axis but otherwise
//! uses the same layout.

use crate::error::{GeodistError, Result};

/// Marker for cells no source has reached yet.
///
/// Kept finite so that adding step costs during relaxation neither
/// overflows single precision nor produces NaN.
pub const INF_SENTINEL: f32 = 1.0e10;

/// Mask binarisation threshold.
pub const MASK_THRESHOLD: f32 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarGrid {
    dims: Vec<usize>,
    spacing: Vec<f32>,
    data: Vec<f32>,
}

fn check_shape(ndim: usize, dims: &[usize], spacing: &[f32]) -> Result<usize> {
    if ndim != 2 && ndim != 3 {
        return Err(GeodistError::BadRank(ndim));
    }
    if dims.len() != ndim || spacing.len() != ndim {
        return Err(GeodistError::DimensionMismatch {
            ndim,
            dims: dims.len(),
            spacing: spacing.len(),
        });
    }
    if let Some(axis) = dims.iter().position(|&d| d == 0) {
        return Err(GeodistError::NonPositiveExtent { axis });
    }
    // `!(s > 0)` also rejects NaN.
    if let Some(axis) = spacing.iter().position(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(GeodistError::NonPositiveSpacing {
            axis,
            value: spacing[axis],
        });
    }
    Ok(dims.iter().product())
}

impl ScalarGrid {
    /// Creates a grid of the given shape with every element set to `fill`.
    pub fn new(ndim: usize, dims: &[usize], spacing: &[f32], fill: f32) -> Result<Self> {
        let len = check_shape(ndim, dims, spacing)?;
        Ok(Self {
            dims: dims.to_vec(),
            spacing: spacing.to_vec(),
            data: vec![fill; len],
        })
    }

    /// Wraps existing row-major data. Rank is taken from `dims.len()`.
    pub fn from_vec(dims: &[usize], spacing: &[f32], data: Vec<f32>) -> Result<Self> {
        let len = check_shape(dims.len(), dims, spacing)?;
        if data.len() != len {
            return Err(GeodistError::DataLength {
                expected: len,
                actual: data.len(),
            });
        }
        Ok(Self {
            dims: dims.to_vec(),
            spacing: spacing.to_vec(),
            data,
        })
    }

    /// A grid with the same geometry as `self`, filled with `fill`.
    pub fn filled_like(&self, fill: f32) -> Self {
        Self {
            dims: self.dims.clone(),
            spacing: self.spacing.clone(),
            data: vec![fill; self.data.len()],
        }
    }

    /// A grid with the same geometry as `self` and elements `f(x)`.
    pub fn map(&self, f: impl Fn(f32) -> f32) -> Self {
        Self {
            dims: self.dims.clone(),
            spacing: self.spacing.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn spacing(&self) -> &[f32] {
        &self.spacing
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Extents as `(depth, height, width)`, with depth 1 for 2D grids.
    pub fn shape3(&self) -> [usize; 3] {
        match self.dims[..] {
            [h, w] => [1, h, w],
            [d, h, w] => [d, h, w],
            _ => unreachable!("rank checked at construction"),
        }
    }

    /// Spacing as `(depth, height, width)`, with depth spacing 1 for 2D grids.
    pub fn spacing3(&self) -> [f64; 3] {
        match self.spacing[..] {
            [h, w] => [1.0, h as f64, w as f64],
            [d, h, w] => [d as f64, h as f64, w as f64],
            _ => unreachable!("rank checked at construction"),
        }
    }

    /// Flat index of `(z, y, x)`; pass `z = 0` for 2D grids.
    #[inline]
    pub fn flat_index(&self, z: usize, y: usize, x: usize) -> usize {
        let [_, h, w] = self.shape3();
        (z * h + y) * w + x
    }

    /// Flat index of a coordinate given in the grid's own axis order.
    pub fn index_of(&self, coord: &[usize]) -> Option<usize> {
        if coord.len() != self.ndim() || coord.iter().zip(&self.dims).any(|(&c, &d)| c >= d) {
            return None;
        }
        Some(coord.iter().zip(&self.dims).fold(0, |acc, (&c, &d)| acc * d + c))
    }

    /// Coordinate, in the grid's own axis order, of a flat index.
    pub fn coord_of(&self, mut index: usize) -> Vec<usize> {
        let mut coord = vec![0; self.ndim()];
        for (c, &d) in coord.iter_mut().zip(&self.dims).rev() {
            *c = index % d;
            index /= d;
        }
        coord
    }

    pub fn get(&self, coord: &[usize]) -> Option<f32> {
        self.index_of(coord).map(|i| self.data[i])
    }

    pub fn set(&mut self, coord: &[usize], value: f32) -> bool {
        match self.index_of(coord) {
            Some(i) => {
                self.data[i] = value;
                true
            }
            None => false,
        }
    }

    pub fn same_geometry(&self, other: &ScalarGrid) -> bool {
        self.dims == other.dims && self.spacing == other.spacing
    }

    /// Errors unless `other` has identical dims and spacing.
    pub fn check_geometry(&self, other: &ScalarGrid) -> Result<()> {
        if self.dims != other.dims {
            return Err(GeodistError::ShapeMismatch {
                left: self.dims.clone(),
                right: other.dims.clone(),
            });
        }
        if self.spacing != other.spacing {
            return Err(GeodistError::SpacingMismatch {
                left: self.spacing.clone(),
                right: other.spacing.clone(),
            });
        }
        Ok(())
    }

    fn check_values(&self, kind: &'static str, ok: impl Fn(f32) -> bool) -> Result<()> {
        match self.data.iter().position(|&v| !ok(v)) {
            Some(index) => Err(GeodistError::InvalidValue {
                kind,
                index,
                value: self.data[index],
            }),
            None => Ok(()),
        }
    }

    /// Intensity grids must be finite everywhere.
    pub fn validate_intensity(&self) -> Result<()> {
        self.check_values("intensity", f32::is_finite)
    }

    /// Distance grids live in `[0, INF_SENTINEL]`.
    pub fn validate_distance(&self) -> Result<()> {
        self.check_values("distance", |v| (0.0..=INF_SENTINEL).contains(&v))
    }

    /// Mask grids live in `[0, 1]`.
    pub fn validate_mask(&self) -> Result<()> {
        self.check_values("mask", |v| (0.0..=1.0).contains(&v))
    }

    /// 0/1 grid of `value >= 0.5`.
    pub fn threshold(&self) -> ScalarGrid {
        self.map(|v| if v >= MASK_THRESHOLD { 1.0 } else { 0.0 })
    }
}

/// Shape/spacing equality plus elementwise `|a - b| <= tol`.
///
/// `INF_SENTINEL` only matches `INF_SENTINEL`, whatever the tolerance.
pub fn grids_approx_equal(a: &ScalarGrid, b: &ScalarGrid, tol: f32) -> bool {
    if !a.same_geometry(b) {
        return false;
    }
    a.data.iter().zip(&b.data).all(|(&x, &y)| {
        let x_inf = x >= INF_SENTINEL;
        let y_inf = y >= INF_SENTINEL;
        if x_inf || y_inf {
            return x_inf && y_inf;
        }
        (x - y).abs() <= tol
    })
}

/// Blend and iteration settings shared by every transform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransformParams {
    /// 0 is pure Euclidean, 1 is pure intensity (geodesic) cost.
    pub lambda: f64,
    /// Scale applied to soft masks in the generalised transform.
    pub nu: f64,
    /// Number of full scan rounds.
    pub iterations: usize,
}

impl TransformParams {
    pub const DEFAULT_ITERATIONS: usize = 2;

    pub fn new(lambda: f64, nu: f64, iterations: usize) -> Result<Self> {
        let params = Self {
            lambda,
            nu,
            iterations,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(GeodistError::InvalidParam {
                name: "lambda",
                value: self.lambda,
            });
        }
        if !(self.nu >= 0.0) {
            return Err(GeodistError::InvalidParam {
                name: "nu",
                value: self.nu,
            });
        }
        if self.iterations == 0 {
            return Err(GeodistError::InvalidParam {
                name: "iterations",
                value: 0.0,
            });
        }
        Ok(())
    }
}

impl Default for TransformParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            nu: INF_SENTINEL as f64,
            iterations: Self::DEFAULT_ITERATIONS,
        }
    }
}
