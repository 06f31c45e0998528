#![allow(dead_code)]

use geodist::cli::max_abs_diff;
use geodist::{ScalarGrid, INF_SENTINEL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(rng: &mut ChaCha8Rng, dims: &[usize]) -> ScalarGrid {
    let spacing: Vec<f32> = dims.iter().map(|_| rng.gen_range(0.5..2.0)).collect();
    let n: usize = dims.iter().product();
    ScalarGrid::from_vec(dims, &spacing, (0..n).map(|_| rng.gen()).collect()).unwrap()
}

/// One to three hard seeds, occasionally a soft finite start value.
pub fn random_init(rng: &mut ChaCha8Rng, image: &ScalarGrid) -> ScalarGrid {
    let mut init = image.filled_like(INF_SENTINEL);
    for k in 0..rng.gen_range(1..=3) {
        let i = rng.gen_range(0..init.len());
        init.data_mut()[i] = if k == 0 { 0.0 } else { rng.gen_range(0.0..1.0) };
    }
    init
}

pub fn random_instance(rng: &mut ChaCha8Rng, dims: &[usize]) -> (ScalarGrid, ScalarGrid) {
    let image = random_image(rng, dims);
    let init = random_init(rng, &image);
    (image, init)
}

/// Random dims: 2D up to 16x16 or 3D up to 8x8x8.
pub fn random_dims(rng: &mut ChaCha8Rng, ndim: usize) -> Vec<usize> {
    let max = if ndim == 2 { 16 } else { 8 };
    (0..ndim).map(|_| rng.gen_range(1..=max)).collect()
}

/// Binary mask with both classes present whenever there are two cells.
pub fn random_binary_mask(rng: &mut ChaCha8Rng, like: &ScalarGrid, density: f64) -> ScalarGrid {
    let mut mask = like.map(|_| 0.0);
    for v in mask.data_mut() {
        *v = if rng.gen_bool(density) { 1.0 } else { 0.0 };
    }
    let n = mask.len();
    if n < 2 {
        mask.data_mut()[0] = 1.0;
        return mask;
    }
    let inside = rng.gen_range(0..n);
    let outside = (inside + rng.gen_range(1..n)) % n;
    mask.data_mut()[inside] = 1.0;
    mask.data_mut()[outside] = 0.0;
    mask
}

pub fn max_diff(a: &ScalarGrid, b: &ScalarGrid) -> f32 {
    assert_eq!(a.dims(), b.dims());
    max_abs_diff(a, b).0
}

pub fn bits(grid: &ScalarGrid) -> Vec<u32> {
    grid.data().iter().map(|v| v.to_bits()).collect()
}

/// Every in-bounds neighbour (full 8-/26-neighbourhood) of flat index `p`.
pub fn neighbours(grid: &ScalarGrid, p: usize) -> Vec<(usize, [isize; 3])> {
    let [d, h, w] = grid.shape3();
    let (z, y, x) = (p / (h * w), (p / w) % h, p % w);
    let mut out = Vec::new();
    for dz in -1isize..=1 {
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                if (dz, dy, dx) == (0, 0, 0) {
                    continue;
                }
                let (nz, ny, nx) = (z as isize + dz, y as isize + dy, x as isize + dx);
                if nz < 0 || ny < 0 || nx < 0 || nz >= d as isize || ny >= h as isize || nx >= w as isize {
                    continue;
                }
                out.push((grid.flat_index(nz as usize, ny as usize, nx as usize), [dz, dy, dx]));
            }
        }
    }
    out
}

/// Square rings at Chebyshev radii 2, 4, 6 around the centre of a 15x15
/// image, each with a single one-cell gap on alternating sides.
pub fn ring_maze() -> (ScalarGrid, [usize; 2]) {
    let n = 15;
    let c = 7isize;
    let mut image = ScalarGrid::new(2, &[n, n], &[1.0, 1.0], 0.0).unwrap();
    for (k, r) in [2isize, 4, 6].into_iter().enumerate() {
        for y in 0..n as isize {
            for x in 0..n as isize {
                if (y - c).abs().max((x - c).abs()) != r {
                    continue;
                }
                let gap = if k % 2 == 0 { (y, x) == (c, c + r) } else { (y, x) == (c, c - r) };
                if !gap {
                    image.set(&[y as usize, x as usize], 1.0);
                }
            }
        }
    }
    (image, [7, 7])
}
