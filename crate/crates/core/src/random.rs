//! Seeded random smooth potentials.
//!
//! A field is a truncated real Fourier series (torus) or Legendre series
//! (sphere) whose coefficients are drawn uniformly from `[−1, 1]` and damped
//! by `1/(1 + |m|²)`. The generator is ChaCha8 seeded with `seed` on stream
//! `stream`, and coefficients are drawn in a fixed mode order, so a
//! `(seed, stream)` pair names a field exactly.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Grid, HermitianTensorField, ScalarField};
use crate::herm;
use crate::{Error, Result};

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Random smooth field with modes up to `max_mode` per axis (torus) or
/// Legendre degree up to `max_mode` (sphere); no constant component.
pub fn smooth_field(grid: &Arc<Grid>, max_mode: usize, seed: u64, stream: u64) -> ScalarField {
    let mut r = rng(seed, stream);
    if grid.sphere().is_some() {
        let mut coef = vec![0.0; max_mode + 1];
        for (l, c) in coef.iter_mut().enumerate().skip(1) {
            *c = r.random_range(-1.0..=1.0) / (1.0 + (l * l) as f64);
        }
        return ScalarField::from_vec(grid, grid.sphere().unwrap().synthesize(&coef));
    }
    let periods = grid.spec().periods.clone();
    let axes = periods.len();
    let m = max_mode as i64;
    let side = (2 * m + 1) as usize;
    let mut terms: Vec<(Vec<i64>, f64, f64)> = Vec::new();
    for code in 0..side.pow(axes as u32) {
        let mut c = code;
        let mut mode = vec![0i64; axes];
        for v in mode.iter_mut() {
            *v = (c % side) as i64 - m;
            c /= side;
        }
        // One representative per ±mode pair: first nonzero entry positive.
        match mode.iter().find(|&&v| v != 0) {
            Some(&v) if v > 0 => {}
            _ => continue,
        }
        let damp = 1.0 / (1.0 + mode.iter().map(|v| (v * v) as f64).sum::<f64>());
        let a = r.random_range(-1.0..=1.0) * damp;
        let b = r.random_range(-1.0..=1.0) * damp;
        terms.push((mode, a, b));
    }
    ScalarField::from_fn(grid, |x| {
        terms
            .iter()
            .map(|(mode, a, b)| {
                let arg: f64 = mode.iter().zip(x).zip(&periods).map(|((&k, &xi), &l)| 2.0 * PI * k as f64 * xi / l).sum();
                a * arg.cos() + b * arg.sin()
            })
            .sum()
    })
}

/// Smallest eigenvalue of `base⁻¹(base + s·∂∂̄ψ)` over the grid.
fn margin_at(base: &HermitianTensorField, hess: &HermitianTensorField, s: f64, n: usize) -> f64 {
    (0..base.node_count())
        .map(|p| {
            let b = base.at(p);
            let h = hess.at(p);
            let m: Vec<_> = b.iter().zip(h).map(|(x, y)| x + y * s).collect();
            herm::rel_eigs(b, &m, n).0
        })
        .fold(f64::INFINITY, f64::min)
}

/// Scale `s > 0` such that `base + s·∂∂̄ψ` has margin `target` relative to `base`.
pub fn scale_to_margin(grid: &Arc<Grid>, base: &HermitianTensorField, shape: &ScalarField, target: f64) -> Result<f64> {
    let n = grid.complex_dim();
    let hess = HermitianTensorField::from_vec(grid, grid.complex_hessian(shape.values()));
    if hess.sup_norm() == 0.0 {
        return Err(Error::Spec("random potential has no curvature".into()));
    }
    let mut hi = 1.0;
    while margin_at(base, &hess, hi, n) > target {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Spec("cannot reach the target margin".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if margin_at(base, &hess, mid, n) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GridSpec;

    #[test]
    fn seeded_fields_are_reproducible_and_distinct() {
        let grid = Grid::new(GridSpec::torus(1, 16)).unwrap();
        let a = smooth_field(&grid, 3, 7, 0);
        let b = smooth_field(&grid, 3, 7, 0);
        let c = smooth_field(&grid, 3, 7, 1);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn scaling_hits_target_margin() {
        for spec in [GridSpec::torus(1, 16), GridSpec::torus(2, 8), GridSpec::sphere(16)] {
            let grid = Grid::new(spec).unwrap();
            let one = vec![1.0; grid.node_count()];
            let base = HermitianTensorField::scalar_multiple_of_identity(&grid, &one);
            let shape = smooth_field(&grid, 2, 11, 3);
            let s = scale_to_margin(&grid, &base, &shape, 0.6).unwrap();
            let hess = HermitianTensorField::from_vec(&grid, grid.complex_hessian(shape.values()));
            let m = margin_at(&base, &hess, s, grid.complex_dim());
            assert!((m - 0.6).abs() < 1e-10, "{m}");
        }
    }
}
