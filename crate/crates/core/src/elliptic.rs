//! Poisson solves and exponential normalizations.
//!
//! Every Poisson solution is returned mean-zero with respect to the measure
//! of the metric it was solved for; the exponential normalization then fixes
//! the final additive constant.

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::geometry::{BackgroundGeometry, Grid, HermitianTensorField, Measure, MetricState, ScalarField, Which};
use crate::{Error, Result};

/// Default relative residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-11;
/// Iteration cap of the conjugate-gradient solve.
pub const MAX_ITERATIONS: usize = 500;
/// Largest admissible `|∫rhs dμ| / (V max(‖rhs‖∞, floor))`, where `floor` is
/// the curvature scale of a curvature right-hand side and zero otherwise.
pub const SOLVABILITY_LIMIT: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative residual in the discrete 2-norm.
    pub residual: f64,
    pub solvability_defect: f64,
}

/// Solve `Δ_g u = rhs` for the metric `g` with volume density `density`;
/// `u` has zero mean against `density`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn solve_with_metric(
    grid: &Grid,
    g: &HermitianTensorField,
    density: &[f64],
    volume: f64,
    rhs: &[f64],
    floor: f64,
    tol: f64,
) -> Result<(Vec<f64>, SolveReport)> {
    let sup = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sup == 0.0 {
        return Ok((vec![0.0; rhs.len()], SolveReport::default()));
    }
    let mean = grid.ref_integral_weighted(rhs, density) / volume;
    let defect = mean.abs() / sup.max(floor.abs());
    if defect > SOLVABILITY_LIMIT {
        return Err(Error::Solvability { defect, limit: SOLVABILITY_LIMIT });
    }
    let consistent: Vec<f64> = rhs.iter().map(|v| v - mean).collect();
    let (mut u, iterations) = if grid.complex_dim() == 1 {
        // Δ_ref u = g·rhs with g = det g in dimension one.
        let b: Vec<f64> = consistent.iter().zip(density).map(|(r, d)| r * d).collect();
        (grid.ref_laplacian_inverse(&b), 1)
    } else {
        pcg(grid, g, density, &consistent, tol)?
    };
    let shift = grid.ref_integral_weighted(&u, density) / volume;
    for v in &mut u {
        *v -= shift;
    }
    let lap = grid.laplacian_with(&u, g);
    let num: f64 = lap.iter().zip(&consistent).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = consistent.iter().map(|b| b * b).sum();
    let residual = (num / den).sqrt();
    Ok((u, SolveReport { iterations, residual, solvability_defect: defect }))
}

/// Preconditioned conjugate gradient on `K u = −det g · rhs` with
/// `K = −det g · Δ_g`, symmetric and positive semidefinite on the flat grid;
/// its kernel (constants and checkerboard modes) is projected out of the
/// right-hand side. Preconditioner: inverse of the flat divergence-form symbol.
fn pcg(grid: &Grid, g: &HermitianTensorField, density: &[f64], rhs: &[f64], tol: f64) -> Result<(Vec<f64>, usize)> {
    let torus = grid
        .torus()
        .ok_or_else(|| Error::UnsupportedBackend("iterative Poisson solve needs the torus".into()))?;
    let symbol = grid.flat_divergence_symbol().expect("torus grid");
    let precondition = |r: &[f64]| -> Vec<f64> {
        let mut s = torus.forward(r);
        for (v, l) in s.iter_mut().zip(&symbol) {
            *v = if *l == 0.0 { C::new(0.0, 0.0) } else { *v / (-*l) };
        }
        torus.inverse_real(s)
    };
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };

    let mut b: Vec<f64> = rhs.iter().zip(density).map(|(r, d)| -r * d).collect();
    torus.remove_checkerboard_modes(&mut b);
    let bnorm = dot(&b, &b).sqrt();
    let mut x = vec![0.0; b.len()];
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let mut r = b.clone();
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=MAX_ITERATIONS {
        let kp = grid.weighted_operator(&p, g);
        let alpha = rz / dot(&p, &kp);
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * kp[i];
        }
        let rnorm = dot(&r, &r).sqrt();
        if !rnorm.is_finite() {
            return Err(Error::SolverDivergence { iterations: it, residual: rnorm });
        }
        if rnorm <= tol * bnorm {
            return Ok((x, it));
        }
        z = precondition(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..p.len() {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rnorm = dot(&r, &r).sqrt();
    Err(Error::SolverDivergence { iterations: MAX_ITERATIONS, residual: rnorm / bnorm })
}

/// Mean-zero solution of `Δu = rhs` for the background or evolved metric.
pub fn poisson(which: Which, state: &MetricState, rhs: &ScalarField, tol: f64) -> Result<(ScalarField, SolveReport)> {
    poisson_floored(which, state, rhs, 0.0, tol)
}

/// `max(|S̄|, V^{-1/n})`.
fn curvature_scale(bg: &BackgroundGeometry) -> f64 {
    bg.sbar().abs().max(bg.volume().powf(-1.0 / bg.complex_dim() as f64))
}

/// As [`poisson`], judging solvability against `max(‖rhs‖∞, floor)`.
fn poisson_floored(
    which: Which,
    state: &MetricState,
    rhs: &ScalarField,
    floor: f64,
    tol: f64,
) -> Result<(ScalarField, SolveReport)> {
    rhs.check_grid(state.grid())?;
    let measure = match which {
        Which::Background => Measure::BackgroundVolume,
        Which::Evolved => Measure::EvolvedVolume,
    };
    let (u, report) = solve_with_metric(
        state.grid(),
        state.metric(which),
        state.density(measure),
        state.bg().volume(),
        rhs.values(),
        floor,
        tol,
    )?;
    Ok((ScalarField::from_vec(state.grid(), u), report))
}

/// Background Poisson solve without an evolved state.
pub fn poisson_background(bg: &BackgroundGeometry, rhs: &ScalarField, tol: f64) -> Result<(ScalarField, SolveReport)> {
    rhs.check_grid(bg.grid())?;
    let (u, report) = solve_with_metric(bg.grid(), bg.metric(), bg.volume_density(), bg.volume(), rhs.values(), 0.0, tol)?;
    Ok((ScalarField::from_vec(bg.grid(), u), report))
}

/// `u + log(target / ∫e^u dμ)` for the density `density`.
pub(crate) fn exp_normalize_density(grid: &Grid, u: &[f64], density: &[f64], target: f64) -> Result<Vec<f64>> {
    let top = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::NumericalOverflow(top));
    }
    let e: Vec<f64> = u.iter().map(|v| (v - top).exp()).collect();
    let integral = grid.ref_integral_weighted(&e, density);
    if !(integral.is_finite() && integral > 0.0) {
        return Err(Error::NumericalOverflow(integral));
    }
    let c = target.ln() - top - integral.ln();
    Ok(u.iter().map(|v| v + c).collect())
}

/// Shift `u` so that `∫e^u dμ = target`.
pub fn exp_normalize(u: &ScalarField, measure: Measure, state: &MetricState, target: f64) -> Result<ScalarField> {
    let v = exp_normalize_density(state.grid(), u.values(), state.density(measure), target)?;
    Ok(ScalarField::from_vec(state.grid(), v))
}

/// `Δ_φ P = tr_φ Ric(ω) − S̄`, `∫e^P ω^{[n]} = V`.
pub fn solve_p(state: &MetricState) -> Result<(ScalarField, SolveReport)> {
    let bg = state.bg();
    let rhs = state.trace_background_ricci().shift(-bg.sbar());
    let (u, report) = poisson_floored(Which::Evolved, state, &rhs, curvature_scale(bg), state.options().solver_tol)?;
    Ok((exp_normalize(&u, Measure::BackgroundVolume, state, bg.volume())?, report))
}

/// `Δ_φ f = S_φ − S̄`, `∫e^f ω_φ^{[n]} = V`.
pub fn solve_futaki_potential(state: &MetricState) -> Result<(ScalarField, SolveReport)> {
    let bg = state.bg();
    let rhs = state.scalar_curvature().shift(-bg.sbar());
    let (u, report) = poisson_floored(Which::Evolved, state, &rhs, curvature_scale(bg), state.options().solver_tol)?;
    Ok((exp_normalize(&u, Measure::EvolvedVolume, state, bg.volume())?, report))
}

/// `Δ_ω h_ω = S_ω − λn`, `∫e^{h_ω} ω^{[n]} = V`.
pub fn ricci_potential_bg(bg: &BackgroundGeometry) -> Result<(ScalarField, SolveReport)> {
    let n = bg.complex_dim() as f64;
    let rhs = bg.scalar().shift(-bg.lambda_class() * n);
    let (u, report) = poisson_background(bg, &rhs, DEFAULT_TOL)?;
    let v = exp_normalize_density(bg.grid(), u.values(), bg.volume_density(), bg.volume())?;
    Ok((ScalarField::from_vec(bg.grid(), v), report))
}
