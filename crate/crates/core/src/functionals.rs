//! Scalar functionals of a Kähler potential: K-energy, I-functional,
//! Calabi energy, the `μ_l` energies, the Futaki invariant and the f-tensor.
//!
//! Wedge products are expanded pointwise in the reference frame, where
//! `ω^{n−p} ∧ (∂∂̄φ)^p` becomes a mixed determinant of `g` and `A = φ_{ij̄}`:
//! `D₀ = det g`, `D₁ = tr(adj(g) A)` (n = 2) or `A` (n = 1), `D₂ = det A`.

use std::sync::Arc;

use crate::geometry::{
    covariant_hessian20, gauss_legendre, Backend, BackgroundGeometry, HermitianTensorField, Measure, MetricState,
    ScalarField,
};
use crate::herm;
use crate::{Error, ExecPolicy, Result};

/// Gauss points of the path-integral cross-check.
pub const PATH_POINTS: usize = 64;

/// `I(φ) = Σ_p 1/(p+1) ∫ φ D_p dm`, i.e. the normalized form of
/// `Σ_p 1/((p+1)!(n−p)!) ∫ φ ω^{n−p}∧(∂∂̄φ)^p` against `ω^{[n]}`.
pub fn i_functional(bg: &BackgroundGeometry, phi: &ScalarField) -> Result<f64> {
    let grid = bg.grid();
    phi.check_grid(grid)?;
    let n = grid.complex_dim();
    let a = grid.complex_hessian(phi.values());
    let integrand: Vec<f64> = (0..grid.node_count())
        .map(|p| {
            let g = bg.metric().at(p);
            let ap = &a[p * n * n..(p + 1) * n * n];
            let density = if n == 1 {
                g[0].re + 0.5 * ap[0].re
            } else {
                herm::det(g, 2) + 0.5 * herm::tr_prod(&herm::adj(g, 2), ap, 2) + herm::det(ap, 2) / 3.0
            };
            phi.values()[p] * density
        })
        .collect();
    Ok(grid.ref_integral(&integrand))
}

/// Closed form of the K-energy:
/// `ν = (1/V)∫h ω_φ^{[n]} + (S̄/V) I(φ) − (1/V)∫ φ Ric∧Σ(…)`,
/// where the Ricci term density is `R` (n = 1) or
/// `tr(adj(g) R) + ½ tr(adj(A) R)` (n = 2).
pub fn k_energy(state: &MetricState) -> Result<f64> {
    let bg = state.bg();
    let grid = state.grid();
    let n = grid.complex_dim();
    let entropy = state.integrate(state.h(), Measure::EvolvedVolume);
    let i = i_functional(bg, state.phi())?;
    let ric = bg.ricci();
    let a = state.phi_hessian();
    let ric_term: Vec<f64> = (0..grid.node_count())
        .map(|p| {
            let r = ric.at(p);
            let density = if n == 1 {
                r[0].re
            } else {
                herm::tr_prod(&herm::adj(bg.metric().at(p), 2), r, 2)
                    + 0.5 * herm::tr_prod(&herm::adj(a.at(p), 2), r, 2)
            };
            state.phi().values()[p] * density
        })
        .collect();
    Ok((entropy + bg.sbar() * i - grid.ref_integral(&ric_term)) / bg.volume())
}

/// `ν(φ(1)) − ν(φ(0)) = −(1/V)∫₀¹∫ φ̇ (S_τ − S̄) ω_τ^{[n]} dτ` by Gauss–Legendre
/// quadrature in `τ`; `path(τ)` returns `(φ(τ), φ̇(τ))`.
pub fn k_energy_path<F>(bg: &Arc<BackgroundGeometry>, path: F, points: usize, exec: ExecPolicy) -> Result<f64>
where
    F: Fn(f64) -> (ScalarField, ScalarField) + Sync + Send,
{
    let (x, w) = gauss_legendre(points);
    let terms = exec.try_map(points, |k| -> Result<f64> {
        let tau = 0.5 * (x[k] + 1.0);
        let (phi, dphi) = path(tau);
        let state = crate::geometry::assemble_state(bg, phi)?;
        let s = state.scalar_curvature().shift(-bg.sbar());
        Ok(0.5 * w[k] * state.integrate(&dphi.zip_map(&s, |a, b| a * b), Measure::EvolvedVolume))
    })?;
    Ok(-terms.iter().sum::<f64>() / bg.volume())
}

/// K-energy along the straight path `τ ↦ τφ`.
pub fn k_energy_straight_path(bg: &Arc<BackgroundGeometry>, phi: &ScalarField, exec: ExecPolicy) -> Result<f64> {
    k_energy_path(bg, |tau| (phi.scale(tau), phi.clone()), PATH_POINTS, exec)
}

/// `−(1/V)∫|∇f|²_{g_φ} ω_φ^{[n]}` with `f` the Futaki potential.
pub fn k_energy_dissipation(state: &MetricState) -> Result<f64> {
    let f = state.futaki_potential()?;
    let grad2 = state.gradient_pairing(f, f);
    Ok(-state.integrate(&grad2, Measure::EvolvedVolume) / state.bg().volume())
}

/// `(1/V)∫(S_φ − S̄)² ω_φ^{[n]}`.
pub fn calabi_energy(state: &MetricState) -> f64 {
    let s = state.scalar_curvature().shift(-state.bg().sbar());
    state.integrate(&s.map(|v| v * v), Measure::EvolvedVolume) / state.bg().volume()
}

/// `μ_l = (1/V)∫|∇^l v|² ω_φ^{[n]}` for `l ∈ {0, 1, 2}`; `l = 2` sums the
/// (2,0) and (1,1) Hessian norms.
pub fn mu(state: &MetricState, v: &ScalarField, l: usize) -> Result<f64> {
    v.check_grid(state.grid())?;
    let n = state.complex_dim();
    let density = match l {
        0 => v.map(|x| x * x),
        1 => state.gradient_pairing(v, v),
        2 => {
            let c = covariant_hessian20(state, v);
            let b = state.grid().complex_hessian(v.values());
            let vals = (0..state.grid().node_count())
                .map(|p| {
                    let g = state.g_phi().at(p);
                    herm::norm2_20(g, c.at(p), n) + herm::norm2_11(g, &b[p * n * n..(p + 1) * n * n], n)
                })
                .collect();
            ScalarField::new(state.grid(), vals)?
        }
        _ => return Err(Error::Spec(format!("mu is defined for l in {{0,1,2}}, got {l}"))),
    };
    Ok(state.integrate(&density, Measure::EvolvedVolume) / state.bg().volume())
}

/// Holomorphy potential of the axial field at the state:
/// `θ = u + ½(1 − u²)(ρ + φ)'`, which satisfies `θ' = g_φ`.
pub fn axial_potential(state: &MetricState) -> Result<ScalarField> {
    let s = state
        .grid()
        .sphere()
        .ok_or_else(|| Error::UnsupportedBackend("the flat torus has no axial holomorphy potential".into()))?;
    let psi = state.bg().potential().add(state.phi());
    let d = s.d1(psi.values());
    let v = s.nodes.iter().zip(d).map(|(u, dp)| u + 0.5 * (1.0 - u * u) * dp).collect();
    Ok(ScalarField::from_vec(state.grid(), v))
}

/// The two forms of the Futaki invariant of the axial field:
/// `∫ g_φ^{j̄i} θᵢ f_{j̄} ω_φ^{[n]}` and `−∫ θ (S − S̄) ω_φ^{[n]}`.
pub fn futaki_invariant_forms(state: &MetricState) -> Result<(f64, f64)> {
    if state.grid().backend() != Backend::SphereAxisymmetric {
        return Err(Error::UnsupportedBackend("Futaki invariant needs the sphere backend".into()));
    }
    let theta = axial_potential(state)?;
    let f = state.futaki_potential()?;
    let paired = state.integrate(&state.gradient_pairing(&theta, f), Measure::EvolvedVolume);
    let s = state.scalar_curvature().shift(-state.bg().sbar());
    let by_parts = -state.integrate(&theta.zip_map(&s, |a, b| a * b), Measure::EvolvedVolume);
    Ok((paired, by_parts))
}

pub fn futaki_invariant(state: &MetricState) -> Result<f64> {
    futaki_invariant_forms(state).map(|(f, _)| f)
}

/// `f_{ij̄} = P_{ij̄} + R_{ij̄}(g_φ) − R_{ij̄}(ω)`.
pub fn f_tensor(state: &MetricState) -> Result<HermitianTensorField> {
    let grid = state.grid();
    let p = state.pseudo_term()?;
    let hp = HermitianTensorField::from_vec(grid, grid.complex_hessian(p.values()));
    Ok(hp.add(&state.ricci()).sub(state.bg().ricci()))
}

/// Complex Hessian `u_{ij̄}` as a tensor field.
pub fn complex_hessian(state: &MetricState, u: &ScalarField) -> HermitianTensorField {
    let grid = state.grid();
    HermitianTensorField::from_vec(grid, grid.complex_hessian(u.values()))
}
