mod common;

use std::f64::consts::PI;

use common::*;
use pcflow::functionals::{
    self, calabi_energy, f_tensor, futaki_invariant, futaki_invariant_forms, i_functional, k_energy,
    k_energy_dissipation, k_energy_path, k_energy_straight_path, mu,
};
use pcflow::geometry::{assemble_state, GridSpec, Measure};
use pcflow::{Error, ExecPolicy, ScalarField};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn k_energy_vanishes_at_base_point() {
    for bg in [curved(GridSpec::torus(1, 32), 1, 0.5), curved(GridSpec::sphere(32), 1, 0.5)] {
        let s = assemble_state(&bg, ScalarField::zeros(bg.grid())).unwrap();
        assert_eq!(k_energy(&s).unwrap(), 0.0);
    }
}

#[test]
fn closed_form_matches_straight_path_integral() {
    let cases = [
        (curved(GridSpec::torus(1, 64), 2, 0.5), 3),
        (curved(GridSpec::sphere(64), 2, 0.5), 3),
        (round_sphere(64), 3),
    ];
    for (bg, modes) in cases {
        let phi = random_phi(&bg, 5, 0.5, modes);
        let s = assemble_state(&bg, phi.clone()).unwrap();
        let closed = k_energy(&s).unwrap();
        let path = k_energy_straight_path(&bg, &phi, ExecPolicy::default()).unwrap();
        assert!(closed > 0.0);
        assert!(rel(closed, path) <= 1e-6, "closed {closed} path {path}");
    }
}

/// Dimension two is checked at the lowest modes, where N = 16 resolves the
/// curvature well enough for the two evaluations to meet.
#[test]
fn closed_form_matches_path_integral_in_dimension_two() {
    let bg = curved_modes(GridSpec::torus(2, 16), 2, 0.8, 1);
    let phi = random_phi(&bg, 5, 0.8, 1);
    let s = assemble_state(&bg, phi.clone()).unwrap();
    let closed = k_energy(&s).unwrap();
    let path = k_energy_straight_path(&bg, &phi, ExecPolicy::default()).unwrap();
    assert!(rel(closed, path) <= 1e-6, "closed {closed} path {path}");
}

#[test]
fn path_integral_is_path_independent() {
    let bg = curved(GridSpec::torus(1, 64), 3, 0.5);
    let phi = random_phi(&bg, 6, 0.5, 3);
    let psi = random_phi(&bg, 7, 0.8, 2);
    // φ_{ij̄} ≥ −g/2 and ψ_{ij̄} ≥ −g/5 keep τφ + τ(1−τ)ψ inside the cone.
    let quadratic = k_energy_path(
        &bg,
        |t| (phi.scale(t).axpy(t * (1.0 - t), &psi), phi.axpy(1.0 - 2.0 * t, &psi)),
        functionals::PATH_POINTS,
        ExecPolicy::default(),
    )
    .unwrap();
    let closed = k_energy(&assemble_state(&bg, phi).unwrap()).unwrap();
    assert!(rel(closed, quadratic) <= 1e-6, "closed {closed} path {quadratic}");
}

#[test]
fn sequential_and_parallel_path_integrals_agree() {
    let bg = curved(GridSpec::sphere(32), 3, 0.5);
    let phi = random_phi(&bg, 2, 0.5, 3);
    let a = k_energy_straight_path(&bg, &phi, ExecPolicy::Sequential).unwrap();
    let b = k_energy_straight_path(&bg, &phi, ExecPolicy::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn i_functional_base_cases() {
    for bg in [curved(GridSpec::torus(1, 32), 4, 0.5), curved(GridSpec::sphere(32), 4, 0.5)] {
        let z = ScalarField::zeros(bg.grid());
        assert_eq!(i_functional(&bg, &z).unwrap(), 0.0);
        let c = 0.37;
        let ic = i_functional(&bg, &ScalarField::constant(bg.grid(), c)).unwrap();
        assert!(rel(ic, c * bg.volume()) < 1e-13);
        let phi = random_phi(&bg, 1, 0.5, 3);
        let shifted = i_functional(&bg, &phi.shift(c)).unwrap() - i_functional(&bg, &phi).unwrap();
        assert!(rel(shifted, c * bg.volume()) < 1e-11);
    }
}

/// `d/ds I(φ + sψ) = ∫ψ ω_φ^{[n]}`. `I` is a polynomial of degree `n + 1`
/// along lines, so the fourth-order central stencil is exact.
#[test]
fn i_functional_variation() {
    let cases = [curved(GridSpec::torus(1, 32), 4, 0.5), curved_modes(GridSpec::torus(2, 16), 4, 0.6, 1)];
    for bg in cases {
        let phi = random_phi(&bg, 2, 0.6, 1);
        let psi = pcflow::random::smooth_field(bg.grid(), 2, 3, 5);
        let s = assemble_state(&bg, phi.clone()).unwrap();
        let exact = s.integrate(&psi, Measure::EvolvedVolume);
        let eps = 1e-3;
        let i = |k: f64| i_functional(&bg, &phi.axpy(k * eps, &psi)).unwrap();
        let fd = (8.0 * (i(1.0) - i(-1.0)) - (i(2.0) - i(-2.0))) / (12.0 * eps);
        assert!((fd - exact).abs() <= 1e-9 * psi.sup_norm() * bg.volume(), "fd {fd} exact {exact}");
    }
}

#[test]
fn calabi_energy_vanishes_on_csck_states() {
    let flat = flat_torus(1, 32);
    assert!(calabi_energy(&assemble_state(&flat, ScalarField::zeros(flat.grid())).unwrap()) <= 1e-20);
    let flat2 = flat_torus(2, 8);
    assert!(calabi_energy(&assemble_state(&flat2, ScalarField::zeros(flat2.grid())).unwrap()) <= 1e-20);
    let round = round_sphere(32);
    assert!(calabi_energy(&assemble_state(&round, ScalarField::zeros(round.grid())).unwrap()) <= 1e-20);
}

#[test]
fn dissipation_vanishes_with_calabi_energy() {
    let round = round_sphere(32);
    let s = assemble_state(&round, ScalarField::zeros(round.grid())).unwrap();
    assert!(k_energy_dissipation(&s).unwrap().abs() <= 1e-12);
    assert!(calabi_energy(&s) <= 1e-12);
    let bg = curved(GridSpec::sphere(32), 2, 0.5);
    let s = random_state(&bg, 3, 0.5);
    assert!(k_energy_dissipation(&s).unwrap() < -1e-12);
    assert!(calabi_energy(&s) > 1e-12);
}

#[test]
fn mu_ratios_on_flat_torus() {
    let bg = flat_torus(1, 32);
    let s = assemble_state(&bg, ScalarField::zeros(bg.grid())).unwrap();
    let v = ScalarField::from_fn(bg.grid(), |x| (2.0 * PI * x[0]).cos());
    let m0 = mu(&s, &v, 0).unwrap();
    let m1 = mu(&s, &v, 1).unwrap();
    let m2 = mu(&s, &v, 2).unwrap();
    assert!(rel(m0, 0.5) < 1e-14);
    assert!(rel(m1 / m0, 2.0 * PI * PI) < 1e-12);
    // |v_{;11}|² and |v_{11̄}|² each equal 4π⁴cos².
    assert!(rel(m2 / m0, 8.0 * PI.powi(4)) < 1e-12);
    assert!(matches!(mu(&s, &v, 3), Err(Error::Spec(_))));
}

#[test]
fn mu_of_zero_field_is_zero() {
    let bg = curved(GridSpec::sphere(32), 5, 0.5);
    let s = random_state(&bg, 5, 0.5);
    let z = ScalarField::zeros(bg.grid());
    for l in 0..3 {
        assert_eq!(mu(&s, &z, l).unwrap(), 0.0);
    }
}

#[test]
fn futaki_invariant_vanishes_and_forms_agree() {
    let round = round_sphere(48);
    let s0 = assemble_state(&round, ScalarField::zeros(round.grid())).unwrap();
    assert!(futaki_invariant(&s0).unwrap().abs() <= 1e-14);
    for seed in 0..4 {
        let bg = curved(GridSpec::sphere(64), seed, 0.5);
        let s = random_state(&bg, seed + 10, 0.4);
        let scale = bg.sbar() * bg.volume();
        let (paired, by_parts) = futaki_invariant_forms(&s).unwrap();
        assert!(paired.abs() <= 1e-8 * scale, "{paired}");
        assert!((paired - by_parts).abs() <= 1e-9 * scale, "{paired} vs {by_parts}");
    }
    let torus = flat_torus(1, 16);
    let st = assemble_state(&torus, ScalarField::zeros(torus.grid())).unwrap();
    assert!(matches!(futaki_invariant(&st), Err(Error::UnsupportedBackend(_))));
}

#[test]
fn axial_potential_is_a_holomorphy_potential() {
    let round = round_sphere(32);
    let s0 = assemble_state(&round, ScalarField::zeros(round.grid())).unwrap();
    let theta0 = functionals::axial_potential(&s0).unwrap();
    let u = ScalarField::from_fn(round.grid(), |x| x[0]);
    assert!(sup_dist(&theta0, &u) <= 1e-14);
    let bg = curved(GridSpec::sphere(48), 3, 0.5);
    let s = random_state(&bg, 4, 0.5);
    let theta = functionals::axial_potential(&s).unwrap();
    assert!(pcflow::geometry::covariant_hessian20(&s, &theta).sup_norm() <= 1e-9);
}

#[test]
fn f_tensor_vanishes_at_fixed_point() {
    for bg in [flat_torus(1, 32), round_sphere(32)] {
        let s = assemble_state(&bg, ScalarField::zeros(bg.grid())).unwrap();
        assert!(f_tensor(&s).unwrap().sup_norm() <= 1e-12);
    }
}

#[test]
fn f_tensor_is_minus_hessian_of_velocity() {
    for bg in [curved(GridSpec::torus(1, 64), 8, 0.5), curved(GridSpec::sphere(64), 8, 0.5)] {
        let s = random_state(&bg, 8, 0.4);
        let f = f_tensor(&s).unwrap();
        let v = s.h().sub(s.pseudo_term().unwrap());
        let hess = functionals::complex_hessian(&s, &v).scale(-1.0);
        let scale = f.sup_norm().max(1.0);
        assert!(f.sup_distance(&hess) <= 1e-8 * scale, "{}", f.sup_distance(&hess));
    }
}

#[test]
fn f_tensor_traces_to_scalar_curvature_deviation() {
    for bg in [curved(GridSpec::torus(1, 64), 9, 0.5), curved(GridSpec::sphere(64), 9, 0.5)] {
        let s = random_state(&bg, 9, 0.4);
        let tr = s.trace(&f_tensor(&s).unwrap());
        let dev = s.scalar_curvature().shift(-bg.sbar());
        assert!(sup_dist(&tr, &dev) <= 1e-8 * dev.sup_norm().max(1.0), "{}", sup_dist(&tr, &dev));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mu_is_quadratic(seed in 0u64..1000, s in -3.0f64..3.0, l in 0usize..3) {
        let bg = curved(GridSpec::torus(1, 16), seed, 0.5);
        let st = random_state(&bg, seed, 0.5);
        let v = pcflow::random::smooth_field(bg.grid(), 3, seed, 4);
        let a = mu(&st, &v.scale(s), l).unwrap();
        let b = s * s * mu(&st, &v, l).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
    }

    /// The K-energy is minimized at the constant-curvature point, which on
    /// both backends is the reference metric, reached by `φ = −ρ`.
    #[test]
    fn energies_have_their_signs(seed in 0u64..1000, sphere in any::<bool>(), margin in 0.3f64..0.9) {
        let grid = if sphere { GridSpec::sphere(32) } else { GridSpec::torus(1, 32) };
        let bg = curved(grid, seed, 0.5);
        let st = random_state(&bg, seed + 1, margin);
        let csck = assemble_state(&bg, bg.potential().scale(-1.0)).unwrap();
        let floor = k_energy(&csck).unwrap();
        prop_assert!(floor <= 0.0);
        prop_assert!(k_energy(&st).unwrap() >= floor - 1e-9);
        prop_assert!(calabi_energy(&st) >= 0.0);
        prop_assert!(k_energy_dissipation(&st).unwrap() <= 0.0);
        let reference = if sphere { round_sphere(32) } else { flat_torus(1, 32) };
        let on_reference = random_state(&reference, seed + 2, margin);
        prop_assert!(k_energy(&on_reference).unwrap() >= -1e-9);
    }
}
