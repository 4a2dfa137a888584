mod common;

use std::f64::consts::PI;

use common::*;
use pcflow::geometry::{
    assemble_state, covariant_hessian20, laplacian, FourierTerm, Grid, GridSpec, Measure, PotentialSpec, Which,
};
use pcflow::{Error, ScalarField};

#[test]
fn flat_torus_background_is_trivial() {
    let bg = flat_torus(1, 16);
    assert_eq!(bg.sbar(), 0.0);
    assert!(bg.scalar().sup_norm() == 0.0);
    assert!(bg.ricci().sup_norm() == 0.0);
    assert!((bg.volume() - 1.0).abs() < 1e-15);
    assert_eq!(bg.lambda_class(), 0.0);
    assert!(bg.ricci_potential().unwrap().sup_norm() < 1e-15);
}

#[test]
fn curved_torus_has_zero_average_curvature() {
    let bg = background(
        GridSpec::torus(1, 64),
        PotentialSpec::Fourier { terms: vec![FourierTerm { mode: vec![1, 0], cos: 0.05, sin: 0.0 }] },
        0,
    );
    assert!(bg.sbar().abs() <= 1e-10, "{}", bg.sbar());
    assert!(bg.integrate(bg.scalar()).abs() <= 1e-10);
}

#[test]
fn round_sphere_is_einstein() {
    let bg = round_sphere(32);
    assert_eq!(bg.lambda_class(), 1.0);
    assert!((bg.volume() - 4.0 * PI).abs() < 1e-12);
    assert!((bg.sbar() - 1.0).abs() < 1e-13);
    assert!(bg.scalar().map(|s| s - bg.sbar()).sup_norm() < 1e-12);
    let g = bg.metric();
    assert!(bg.ricci().sup_distance(&g.scale(bg.lambda_class())) < 1e-12);
    assert!(bg.ricci_potential().unwrap().sup_norm() < 1e-12);
}

#[test]
fn non_positive_background_is_rejected() {
    let r = pcflow::geometry::build_background(
        &pcflow::BackgroundSpec {
            grid: GridSpec::torus(1, 16),
            potential: PotentialSpec::Fourier { terms: vec![FourierTerm { mode: vec![1, 0], cos: 0.2, sin: 0.0 }] },
        },
        0,
    );
    assert!(matches!(r, Err(Error::PositivityLoss { .. })));
}

#[test]
fn malformed_descriptors_are_rejected() {
    for (grid, pot) in [
        (GridSpec::torus(1, 16), PotentialSpec::Legendre { coefficients: vec![0.0, 0.1] }),
        (GridSpec::sphere(16), PotentialSpec::Fourier { terms: vec![] }),
        (
            GridSpec::torus(1, 16),
            PotentialSpec::Fourier { terms: vec![FourierTerm { mode: vec![1], cos: 0.01, sin: 0.0 }] },
        ),
        (GridSpec::torus(1, 16), PotentialSpec::Random { max_mode: 3, target_margin: 1.5, stream: 0 }),
    ] {
        let r = pcflow::geometry::build_background(&pcflow::BackgroundSpec { grid, potential: pot }, 0);
        assert!(matches!(r, Err(Error::Spec(_))), "{r:?}");
    }
}

#[test]
fn grid_validation() {
    assert!(Grid::new(GridSpec::torus(1, 7)).is_err());
    assert!(Grid::new(GridSpec::torus(1, 6)).is_err());
    assert!(Grid::new(GridSpec::torus(3, 8)).is_err());
    let mut s = GridSpec::sphere(16);
    s.complex_dim = 2;
    assert!(Grid::new(s).is_err());
    assert!(Grid::new(GridSpec::sphere(8)).is_ok());
}

#[test]
fn zero_potential_gives_identity_state() {
    for bg in [flat_torus(1, 16), curved(GridSpec::torus(2, 8), 3, 0.5), round_sphere(16)] {
        let s = assemble_state(&bg, ScalarField::zeros(bg.grid())).unwrap();
        assert_eq!(s.h().sup_norm(), 0.0);
        assert!((s.margin() - 1.0).abs() < 1e-14);
        assert_eq!(s.g_phi().sup_distance(bg.metric()), 0.0);
    }
}

#[test]
fn h_matches_log_det_path() {
    let bg = flat_torus(1, 32);
    let a = 0.9 / (2.0 * PI * PI);
    let phi = ScalarField::from_fn(bg.grid(), |x| a * (2.0 * PI * x[0]).cos());
    let s = assemble_state(&bg, phi).unwrap();
    let oracle = ScalarField::from_fn(bg.grid(), |x| (1.0 - 2.0 * PI * PI * a * (2.0 * PI * x[0]).cos()).ln());
    assert!(sup_dist(s.h(), &oracle) < 1e-12);
    for (p, d) in s.volume_density().iter().enumerate() {
        let lhs = s.h().values()[p].exp() * bg.volume_density()[p];
        assert!((lhs - d).abs() <= 1e-12 * d);
    }
}

#[test]
fn positivity_loss_is_reported() {
    let bg = flat_torus(1, 32);
    let a = 1.1 / (2.0 * PI * PI);
    let phi = ScalarField::from_fn(bg.grid(), |x| a * (2.0 * PI * x[0]).cos());
    assert!(matches!(assemble_state(&bg, phi), Err(Error::PositivityLoss { .. })));
}

/// Five-point finite-difference Laplacian at N = 256 as an oracle for the
/// spectral symbol.
#[test]
fn flat_laplacian_matches_symbol_and_finite_differences() {
    let bg = flat_torus(1, 256);
    let s = assemble_state(&bg, ScalarField::zeros(bg.grid())).unwrap();
    let f = ScalarField::from_fn(bg.grid(), |x| (2.0 * PI * x[0]).cos());
    let lap = laplacian(Which::Evolved, &s, &f);
    let symbol = f.scale(-2.0 * PI * PI);
    assert!(sup_dist(&lap, &symbol) < 1e-9);
    let n = 256;
    let h = 1.0 / n as f64;
    let v = f.values();
    let fd: Vec<f64> = (0..n * n)
        .map(|p| {
            let (i, j) = (p / n, p % n);
            let at = |a: usize, b: usize| v[(a % n) * n + (b % n)];
            0.5 * (at(i + 1, j) + at(i + n - 1, j) + at(i, j + 1) + at(i, j + n - 1) - 4.0 * at(i, j)) / (h * h)
        })
        .collect();
    let fd = ScalarField::new(bg.grid(), fd).unwrap();
    assert!(sup_dist(&fd, &lap) < 2e-3 * 2.0 * PI * PI);
}

#[test]
fn mode_eigenvalues_follow_convention() {
    let mut spec = GridSpec::torus(1, 16);
    spec.periods = vec![2.0, 2.0];
    let bg = background(spec, PotentialSpec::Zero, 0);
    let s = assemble_state(&bg, ScalarField::zeros(bg.grid())).unwrap();
    for (m, k) in [(1i32, 0i32), (1, 2), (3, 1)] {
        let f = ScalarField::from_fn(bg.grid(), |x| (2.0 * PI * (m as f64 * x[0] + k as f64 * x[1]) / 2.0).sin());
        let expected = -2.0 * PI * PI * ((m * m + k * k) as f64) / 4.0;
        assert!(sup_dist(&s.laplacian(&f), &f.scale(expected)) < 1e-10);
    }
}

#[test]
fn evolved_laplacian_integrates_to_zero() {
    for bg in [curved(GridSpec::torus(1, 32), 1, 0.6), curved(GridSpec::torus(2, 12), 2, 0.6), round_sphere(24)] {
        let s = random_state(&bg, 9, 0.4);
        let f = pcflow::random::smooth_field(bg.grid(), 3, 77, 5);
        let lap = s.laplacian(&f);
        assert!(s.integrate(&lap, Measure::EvolvedVolume).abs() <= 1e-10 * f.sup_norm());
        assert!(s.laplacian(&ScalarField::constant(bg.grid(), 3.0)).sup_norm() < 1e-10);
    }
}

#[test]
fn dimension_one_laplacian_reduction() {
    let bg = curved(GridSpec::torus(1, 32), 4, 0.5);
    let s = random_state(&bg, 5, 0.5);
    let f = pcflow::random::smooth_field(bg.grid(), 4, 1, 1);
    let reduced = laplacian(Which::Background, &s, &f).zip_map(s.h(), |l, h| (-h).exp() * l);
    assert!(sup_dist(&s.laplacian(&f), &reduced) < 1e-10 * s.laplacian(&f).sup_norm());
}

#[test]
fn volume_is_class_invariant() {
    for bg in [curved(GridSpec::torus(1, 64), 1, 0.5), round_sphere(64), curved(GridSpec::torus(2, 16), 2, 0.6)] {
        let s = random_state(&bg, 3, 0.3);
        let one = ScalarField::constant(bg.grid(), 1.0);
        let v = s.integrate(&one, Measure::EvolvedVolume);
        assert!(((v - bg.volume()) / bg.volume()).abs() <= 1e-10, "{v}");
        let eh = s.h().map(f64::exp);
        assert!(((s.integrate(&eh, Measure::BackgroundVolume) - bg.volume()) / bg.volume()).abs() <= 1e-10);
    }
}

#[test]
fn scalar_curvature_paths_agree() {
    for bg in [curved(GridSpec::torus(1, 64), 2, 0.5), curved(GridSpec::sphere(64), 2, 0.5)] {
        let s = random_state(&bg, 17, 0.4);
        let d = sup_dist(&s.scalar_curvature(), &s.scalar_curvature_direct());
        assert!(d <= 1e-8, "{d}");
    }
}

#[test]
fn csck_states_have_constant_curvature() {
    let s = assemble_state(&flat_torus(1, 16), ScalarField::zeros(flat_torus(1, 16).grid())).unwrap();
    assert!(s.scalar_curvature().sup_norm() == 0.0);
    let bg = round_sphere(32);
    let s = assemble_state(&bg, ScalarField::zeros(bg.grid())).unwrap();
    assert!(s.scalar_curvature().map(|v| v - bg.sbar()).sup_norm() < 1e-12);
}

#[test]
fn flat_hessian20_matches_symbol() {
    let bg = flat_torus(1, 32);
    let s = assemble_state(&bg, ScalarField::zeros(bg.grid())).unwrap();
    let f = ScalarField::from_fn(bg.grid(), |x| (2.0 * PI * x[0]).cos());
    let c = covariant_hessian20(&s, &f);
    // ∂∂ = ½(∂x − i∂y)² acts on cos(2πx) as −2π² cos(2πx).
    for p in 0..bg.grid().node_count() {
        let x = bg.grid().node_coords(p)[0];
        assert!((c.at(p)[0].re + 2.0 * PI * PI * (2.0 * PI * x).cos()).abs() < 1e-9);
        assert!(c.at(p)[0].im.abs() < 1e-9);
    }
    let zero = covariant_hessian20(&s, &ScalarField::constant(bg.grid(), 2.0));
    assert!(zero.sup_norm() < 1e-12);
}

/// Oracle: on the round sphere `u_{;zz} ∝ (1−u²)(f'' − (G'/G) f')` with
/// derivatives taken by centred finite differences of the analytic axial potential.
#[test]
fn axial_potential_lies_in_hessian_kernel() {
    let bg = curved(GridSpec::sphere(64), 8, 0.6);
    let s = random_state(&bg, 4, 0.5);
    let theta = pcflow::functionals::axial_potential(&s).unwrap();
    let c = covariant_hessian20(&s, &theta);
    assert!(c.sup_norm() <= 1e-8, "{}", c.sup_norm());
    let round = round_sphere(64);
    let s0 = assemble_state(&round, ScalarField::zeros(round.grid())).unwrap();
    let u = ScalarField::from_fn(round.grid(), |x| x[0]);
    assert!(covariant_hessian20(&s0, &u).sup_norm() < 1e-10);
    // A non-kernel field for contrast: u² has u_{;zz} = (1 − u²).
    let u2 = ScalarField::from_fn(round.grid(), |x| x[0] * x[0]);
    let c2 = covariant_hessian20(&s0, &u2);
    for p in 0..64 {
        let x = round.grid().node_coords(p)[0];
        assert!((c2.at(p)[0].re - (1.0 - x * x)).abs() < 1e-10);
    }
}

#[test]
fn resample_round_trip() {
    let bg = curved(GridSpec::torus(1, 16), 1, 0.5);
    let fine = pcflow::Grid::new(GridSpec::torus(1, 32)).unwrap();
    let f = pcflow::random::smooth_field(bg.grid(), 3, 2, 2);
    let up = bg.grid().resample(&f, &fine).unwrap();
    let down = fine.resample(&up, bg.grid()).unwrap();
    assert!(sup_dist(&down, &f) < 1e-13);
}
