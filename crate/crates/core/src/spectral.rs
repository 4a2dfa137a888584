//! Linearized flow operator, Lichnerowicz form, constrained eigenvalues and
//! exponential decay fits.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::elliptic;
use crate::geometry::{covariant_hessian20, Backend, HermitianTensorField, Measure, MetricState, ScalarField, Which};
use crate::herm;
use crate::{Error, ExecPolicy, Result};

/// Largest node count assembled densely.
pub const DENSE_NODE_LIMIT: usize = 1024;

/// Tolerance of the pointwise check `tr_φ T = S̄`, relative to the curvature scale.
pub const HARMONIC_TRACE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EigMethod {
    Dense,
    Lanczos,
}

#[derive(Clone, Debug)]
pub struct SpectralReport {
    pub lambda_min: f64,
    pub eigenfield: ScalarField,
    pub constraint_residuals: Vec<f64>,
    pub method: EigMethod,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub theta: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Fewest samples a decay fit accepts.
pub const MIN_FIT_SAMPLES: usize = 10;

/// `T_{ij̄} = −P_{ij̄} + R_{ij̄}(ω)`; checks `tr_φ T = S̄` pointwise.
pub fn harmonic_tensor(state: &MetricState) -> Result<HermitianTensorField> {
    harmonic_tensor_with_scale(state).map(|(t, _)| t)
}

/// The tensor with its magnitude scale `1 + |R(ω)| + |P_{ij̄}|`.
fn harmonic_tensor_with_scale(state: &MetricState) -> Result<(HermitianTensorField, f64)> {
    let grid = state.grid();
    let p = state.pseudo_term()?;
    let hp = HermitianTensorField::from_vec(grid, grid.complex_hessian(p.values()));
    let t = state.bg().ricci().sub(&hp);
    let sbar = state.bg().sbar();
    let defect = state.trace(&t).map(|v| v - sbar).sup_norm();
    let scale = 1.0 + state.bg().ricci().sup_norm() + hp.sup_norm();
    if defect > HARMONIC_TRACE_TOL * scale {
        return Err(Error::Invariant(format!("tr T - Sbar = {defect:.3e}")));
    }
    Ok((t, scale))
}

/// `v^{ij̄}T_{ij̄} = tr(g_φ⁻¹ v_{··} g_φ⁻¹ T)` per node, with the sup over
/// nodes of `|g_φ⁻¹ v_{··}|·|g_φ⁻¹|`.
fn contract_with(state: &MetricState, v: &ScalarField, t: &HermitianTensorField) -> (ScalarField, f64) {
    let n = state.complex_dim();
    let hv = state.grid().complex_hessian(v.values());
    let frob = |a: &[C]| a[..n * n].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let (vals, bounds): (Vec<f64>, Vec<f64>) = (0..state.grid().node_count())
        .map(|p| {
            let gi = herm::inv(state.g_phi().at(p), n);
            let a = herm::mul(&gi, &hv[p * n * n..(p + 1) * n * n], n);
            let b = herm::mul(&gi, t.at(p), n);
            (herm::tr_prod(&a, &b, n), frob(&a) * frob(&gi))
        })
        .unzip();
    let bound = bounds.into_iter().fold(0.0, f64::max);
    (ScalarField::from_vec(state.grid(), vals), bound)
}

/// The nonlocal term `Q`: `Δ_φQ = v^{ij̄}T_{ij̄}`, `∫Q e^P ω^{[n]} = 0`. The
/// right-hand side integrates to zero because `T` is divergence free; its
/// mean is checked against the magnitude of the factors, since on the torus
/// `T` itself vanishes up to roundoff.
pub fn linearized_q(state: &MetricState, v: &ScalarField) -> Result<ScalarField> {
    v.check_grid(state.grid())?;
    let (t, t_scale) = harmonic_tensor_with_scale(state)?;
    let (rhs, v_scale) = contract_with(state, v, &t);
    let bound = v_scale * t_scale;
    let mean = state.evolved_mean(&rhs);
    if bound > 0.0 && mean.abs() > elliptic::SOLVABILITY_LIMIT * bound {
        return Err(Error::Solvability { defect: mean.abs() / bound, limit: elliptic::SOLVABILITY_LIMIT });
    }
    let (q, _) = elliptic::poisson(Which::Evolved, state, &rhs.shift(-mean), state.options().solver_tol)?;
    let ep = state.pseudo_term()?.map(f64::exp);
    let shift = state.integrate(&q.zip_map(&ep, |a, b| a * b), Measure::BackgroundVolume)
        / state.integrate(&ep, Measure::BackgroundVolume);
    Ok(q.shift(-shift))
}

/// `Δ_φ v + Q`.
pub fn linearized_apply(state: &MetricState, v: &ScalarField) -> Result<ScalarField> {
    let q = linearized_q(state, v)?;
    Ok(state.laplacian(v).add(&q))
}

/// `∫ g_φ^{ik̄}g_φ^{jl̄} u1_{;ij} conj(u2_{;kl}) ω_φ^{[n]}`.
pub fn lichnerowicz_pair(state: &MetricState, u1: &ScalarField, u2: &ScalarField) -> f64 {
    let n = state.complex_dim();
    let a = covariant_hessian20(state, u1);
    let b = covariant_hessian20(state, u2);
    let vals: Vec<f64> = (0..state.grid().node_count())
        .map(|p| herm::pair_20(state.g_phi().at(p), a.at(p), b.at(p), n))
        .collect();
    state.integrate(&ScalarField::from_vec(state.grid(), vals), Measure::EvolvedVolume)
}

/// Dense matrices of the Lichnerowicz form and the gradient form, both
/// scaled by `1/V`, in the nodal basis. With `g_φ⁻¹ = L L^*` per node, both
/// forms are Gram matrices `YᵀY` of the whitened, weighted columns.
pub(crate) fn dense_forms(state: &MetricState, exec: ExecPolicy) -> (DMatrix<f64>, DMatrix<f64>) {
    let grid = state.grid();
    let m = grid.node_count();
    let n = state.complex_dim();
    let v = state.bg().volume();
    let sw: Vec<f64> =
        grid.ref_weights().iter().zip(state.volume_density()).map(|(a, d)| (a * d / v).sqrt()).collect();
    let factors: Vec<[C; 4]> = (0..m).map(|p| herm::chol_lower(&herm::inv(state.g_phi().at(p), n), n)).collect();
    // Column k: real and imaginary parts of √w·L^*(∇∇e_k)conj(L) and √w·L^*∂e_k.
    let cols: Vec<(Vec<f64>, Vec<f64>)> = exec.map(m, |k| {
        let mut e = vec![0.0; m];
        e[k] = 1.0;
        let e = ScalarField::from_vec(grid, e);
        let hess = covariant_hessian20(state, &e);
        let grad = grid.gradient(e.values());
        let mut ya = Vec::with_capacity(2 * m * n * n);
        let mut yb = Vec::with_capacity(2 * m * n);
        for p in 0..m {
            let l = &factors[p];
            let w = herm::whiten_20(l, hess.at(p), n);
            ya.extend(w[..n * n].iter().flat_map(|z| [sw[p] * z.re, sw[p] * z.im]));
            let g = &grad[p * n..(p + 1) * n];
            for i in 0..n {
                let mut z = C::new(0.0, 0.0);
                for j in 0..n {
                    z += l[j * n + i].conj() * g[j];
                }
                yb.extend([sw[p] * z.re, sw[p] * z.im]);
            }
        }
        (ya, yb)
    });
    let ya = DMatrix::from_iterator(2 * m * n * n, m, cols.iter().flat_map(|c| c.0.iter().copied()));
    let yb = DMatrix::from_iterator(2 * m * n, m, cols.iter().flat_map(|c| c.1.iter().copied()));
    let a = ya.tr_mul(&ya);
    let b = yb.tr_mul(&yb);
    (0.5 * (&a + a.transpose()), 0.5 * (&b + b.transpose()))
}

/// Constraint rows defining the admissible space: mean zero against
/// `ω_φ^{[n]}`, orthogonality to the torus checkerboard modes (the kernel of
/// every first derivative) and, on the sphere, `∫⟨∇θ_X, ∇f⟩ = 0`.
pub(crate) fn constraint_rows(state: &MetricState, b: &DMatrix<f64>) -> Result<Vec<DVector<f64>>> {
    let grid = state.grid();
    let m = grid.node_count();
    let mut rows = vec![DVector::from_iterator(
        m,
        grid.ref_weights().iter().zip(state.volume_density()).map(|(w, d)| w * d),
    )];
    match grid.backend() {
        Backend::TorusPeriodic => {
            let t = grid.torus().expect("torus grid");
            let axes = 2 * state.complex_dim();
            for mask in 1..(1usize << axes) {
                rows.push(DVector::from_vec(t.checkerboard_mode(mask)));
            }
        }
        Backend::SphereAxisymmetric => {
            let theta = crate::functionals::axial_potential(state)?;
            rows.push(b * DVector::from_column_slice(theta.values()));
        }
    }
    Ok(rows)
}

/// Smallest eigenvalue of `A x = λ B x` on `{x : Kx = 0}`; `B` must be
/// positive definite there. Returns `(λ, x)`.
pub(crate) fn constrained_min_eig(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    rows: &[DVector<f64>],
) -> Result<(f64, DVector<f64>)> {
    let m = a.nrows();
    let r = rows.len();
    let k = DMatrix::from_columns(rows);
    // Orthonormal basis of the admissible space: the trailing columns of the
    // full orthogonal factor of `K = QR`.
    let qr = k.qr();
    if (0..r).any(|i| qr.r()[(i, i)].abs() <= 1e-12 * rows[i].norm()) {
        return Err(Error::EigSolve("dependent constraints".into()));
    }
    let mut qt = DMatrix::identity(m, m);
    qr.q_tr_mul(&mut qt);
    let z = qt.rows(r, m - r).transpose();
    let ar = z.transpose() * a * &z;
    let br = z.transpose() * b * &z;
    let br = 0.5 * (&br + br.transpose());
    let chol = br
        .cholesky()
        .ok_or_else(|| Error::EigSolve("gradient form is not positive definite on the admissible space".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::EigSolve("singular Cholesky factor".into()))?;
    let c = &linv * ar * linv.transpose();
    let c = 0.5 * (&c + c.transpose());
    let eig = c.symmetric_eigen();
    let (imin, lambda) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .ok_or_else(|| Error::EigSolve("empty admissible space".into()))?;
    if !lambda.is_finite() {
        return Err(Error::EigSolve("non-finite eigenvalue".into()));
    }
    let y = eig.eigenvectors.column(imin).into_owned();
    let x = linv.transpose() * y;
    Ok((lambda, z * x))
}

/// `λ(φ) = inf { L(f,f) / G(f,f) : f admissible }` with `L` the Lichnerowicz
/// form and `G` the gradient form, both normalized by `1/V`. Dimension one only.
pub fn lambda_min(state: &MetricState, exec: ExecPolicy) -> Result<SpectralReport> {
    check_dense(state)?;
    let (a, b) = dense_forms(state, exec);
    let rows = constraint_rows(state, &b)?;
    let (lambda, x) = constrained_min_eig(&a, &b, &rows)?;
    let scale = x.amax();
    let x = if scale > 0.0 { x / scale } else { x };
    let constraint_residuals = rows.iter().map(|r| r.dot(&x) / r.amax()).collect();
    Ok(SpectralReport {
        lambda_min: lambda,
        eigenfield: ScalarField::new(state.grid(), x.as_slice().to_vec())?,
        constraint_residuals,
        method: EigMethod::Dense,
    })
}

/// Smallest positive eigenvalue of `−Δ_φ`: `G(f,f) / ∫f² ω_φ^{[n]}` minimized
/// over mean-zero fields (and, on the torus, fields free of checkerboard modes).
pub fn laplacian_gap(state: &MetricState, exec: ExecPolicy) -> Result<f64> {
    check_dense(state)?;
    let (_, b) = dense_forms(state, exec);
    let grid = state.grid();
    let v = state.bg().volume();
    let mass = DMatrix::from_diagonal(&DVector::from_iterator(
        grid.node_count(),
        grid.ref_weights().iter().zip(state.volume_density()).map(|(w, d)| w * d / v),
    ));
    let mut rows = constraint_rows(state, &b)?;
    if grid.backend() == Backend::SphereAxisymmetric {
        rows.truncate(1);
    }
    constrained_min_eig(&b, &mass, &rows).map(|(l, _)| l)
}

fn check_dense(state: &MetricState) -> Result<()> {
    if state.complex_dim() != 1 {
        return Err(Error::EigSolve("dense eigensolves are implemented for complex dimension 1".into()));
    }
    if state.grid().node_count() > DENSE_NODE_LIMIT {
        return Err(Error::EigSolve(format!(
            "{} nodes exceed the dense limit of {DENSE_NODE_LIMIT}",
            state.grid().node_count()
        )));
    }
    Ok(())
}

/// Least-squares fit of `log value = c − θ t` over samples with `t` in `window`.
pub fn fit_decay(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = series.iter().copied().filter(|(t, _)| *t >= window.0 && *t <= window.1).collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::Fit(format!("{} samples in window, need {MIN_FIT_SAMPLES}", pts.len())));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Fit(format!("non-positive value {v} at t = {t}")));
    }
    let k = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let ym = pts.iter().map(|p| p.1.ln()).sum::<f64>() / k;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (t, v) in &pts {
        let (dt, dy) = (t - tm, v.ln() - ym);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    if stt == 0.0 {
        return Err(Error::Fit("window has a single time".into()));
    }
    let slope = sty / stt;
    let ss_res = syy - slope * sty;
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(DecayFit { theta: -slope, r_squared, window, samples: pts.len() })
}

/// Post-transient window: from the first sample with Calabi energy below
/// `10%` of its initial value to the last sample whose value stays above
/// `floor` times the value at the start of the window.
pub fn decay_window(times: &[f64], calabi: &[f64], values: &[f64], floor: f64) -> Option<(f64, f64)> {
    let c0 = *calabi.first()?;
    let start = calabi.iter().position(|&c| c < 0.1 * c0)?;
    let v0 = values[start];
    let mut end = start;
    for (i, &v) in values.iter().enumerate().skip(start) {
        if !(v > floor * v0) {
            break;
        }
        end = i;
    }
    Some((times[start], times[end]))
}
