//! Exact multi-source shortest paths on the full 8-/26-connected grid graph.
//!
//! Edge weights are the same blended step cost the scan engines use; labels
//! are kept in `f64` and only cast to `f32` on output. Every cell whose
//! initial distance is below [`INF_SENTINEL`] is a source with that initial
//! cost.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{GeodistError, Result};
use crate::grid::{ScalarGrid, INF_SENTINEL};
use crate::metric::blend;

#[derive(Clone, Copy, Debug)]
struct Entry {
    cost: f64,
    index: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Reversed so BinaryHeap pops the cheapest entry first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost)
    }
}

/// Every non-zero offset of the 3x3(x3) neighbourhood with its squared
/// physical length.
fn neighbourhood(grid: &ScalarGrid) -> Vec<([isize; 3], f64)> {
    let [sz, sy, sx] = grid.spacing3();
    let depth: &[isize] = if grid.ndim() == 3 { &[-1, 0, 1] } else { &[0] };
    let mut out = Vec::with_capacity(26);
    for &dz in depth {
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                if dz == 0 && dy == 0 && dx == 0 {
                    continue;
                }
                let (lz, ly, lx) = (dz as f64 * sz, dy as f64 * sy, dx as f64 * sx);
                let rho = (lz * lz + ly * ly + lx * lx).sqrt();
                out.push(([dz, dy, dx], rho * rho));
            }
        }
    }
    out
}

/// Exact distances `min_y (init(y) + path cost y -> x)`.
pub fn dijkstra_exact(image: &ScalarGrid, init_dist: &ScalarGrid, lambda: f64) -> Result<ScalarGrid> {
    image.check_geometry(init_dist)?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(GeodistError::InvalidParam {
            name: "lambda",
            value: lambda,
        });
    }
    let labels = dijkstra_labels(image, init_dist, lambda, None)?;
    ScalarGrid::from_vec(
        init_dist.dims(),
        init_dist.spacing(),
        labels.into_iter().map(|v| v as f32).collect(),
    )
}

/// Label-setting core; `order` permutes the initial heap insertion order.
pub(crate) fn dijkstra_labels(
    image: &ScalarGrid,
    init_dist: &ScalarGrid,
    lambda: f64,
    order: Option<&[usize]>,
) -> Result<Vec<f64>> {
    let [depth, height, width] = image.shape3();
    let n = image.len();
    let mut labels: Vec<f64> = vec![INF_SENTINEL as f64; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    let identity: Vec<usize>;
    let order = match order {
        Some(o) => o,
        None => {
            identity = (0..n).collect();
            &identity
        }
    };
    for &i in order {
        let v = init_dist.data()[i];
        if v < INF_SENTINEL {
            labels[i] = v as f64;
            heap.push(Entry { cost: v as f64, index: i });
        }
    }
    if heap.is_empty() {
        return Err(GeodistError::NoSource);
    }

    let stencil = neighbourhood(image);
    let intensity = image.data();
    while let Some(Entry { cost, index }) = heap.pop() {
        if settled[index] || cost > labels[index] {
            continue;
        }
        settled[index] = true;
        let x = index % width;
        let y = (index / width) % height;
        let z = index / (width * height);
        for &([dz, dy, dx], spatial_sq) in &stencil {
            let (nz, ny, nx) = (z as isize + dz, y as isize + dy, x as isize + dx);
            if nz < 0 || ny < 0 || nx < 0 {
                continue;
            }
            let (nz, ny, nx) = (nz as usize, ny as usize, nx as usize);
            if nz >= depth || ny >= height || nx >= width {
                continue;
            }
            let q = (nz * height + ny) * width + nx;
            if settled[q] {
                continue;
            }
            let step = blend(spatial_sq, intensity[q] as f64 - intensity[index] as f64, lambda);
            let candidate = cost + step;
            if candidate < labels[q] {
                labels[q] = candidate;
                heap.push(Entry { cost: candidate, index: q });
            }
        }
    }
    Ok(labels)
}
