//! Seeded random inputs for verification suites.
//!
//! Everything random in this crate flows from a [`ChaCha8Rng`] seeded with an
//! explicit `u64`, so residual tables are reproducible across runs and
//! platforms.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Mesh;

/// Seed used when a caller does not supply one.
pub const DEFAULT_SEED: u64 = 20_240_917;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries drawn uniformly from `[-1, 1)`.
pub fn uniform_vector(len: usize, rng: &mut impl Rng) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.random_range(-1.0..1.0))
}

pub fn uniform_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Random SPD matrix `XXᵀ/d + I/2`, eigenvalues bounded away from zero.
pub fn random_spd(dim: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let x = uniform_matrix(dim, dim, rng);
    let mut g = &x * x.transpose() / dim as f64;
    for i in 0..dim {
        g[(i, i)] += 0.5;
    }
    (&g + g.transpose()) * 0.5
}

/// Random `rows × cols` matrix of rank exactly `rank` (with probability one).
pub fn random_matrix_with_rank(rows: usize, cols: usize, rank: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    assert!(rank <= rows.min(cols), "rank {rank} exceeds {rows}x{cols}");
    if rank == 0 {
        return DMatrix::zeros(rows, cols);
    }
    uniform_matrix(rows, rank, rng) * uniform_matrix(rank, cols, rng)
}

/// Nodal values of `Σ_{p,q≤3} a_pq cos(pπx) cos(qπy)` with uniform random
/// coefficients.
///
/// Used where a random input must be the interpolant of one fixed function
/// across mesh refinements, so that ratios are comparable between levels.
pub fn smooth_field(mesh: &Mesh, rng: &mut impl Rng) -> DVector<f64> {
    let a: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
    let pi = std::f64::consts::PI;
    DVector::from_vec(mesh.interpolate(|x, y| {
        let mut s = 0.0;
        for p in 0..4 {
            for q in 0..4 {
                s += a[4 * p + q] * (p as f64 * pi * x).cos() * (q as f64 * pi * y).cos();
            }
        }
        s
    }))
}
