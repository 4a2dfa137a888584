mod common;

use common::*;
use pcflow::flow::{
    self, adaptive_dt, krf_rhs, mpcf_rhs, pcf_rhs, run, run_batch, step, DtPolicy, FlowConfig, RhsKind, Scheme,
    Termination,
};
use pcflow::functionals::{i_functional, k_energy};
use pcflow::geometry::{assemble_state, BackgroundSpec, GridSpec, Measure, PotentialSpec};
use pcflow::{ExecPolicy, ScalarField};

fn random(max_mode: usize, margin: f64, stream: u64) -> PotentialSpec {
    PotentialSpec::Random { max_mode, target_margin: margin, stream }
}

fn torus_config(n: usize, size: usize, t_end: f64) -> FlowConfig {
    let background = BackgroundSpec { grid: GridSpec::torus(n, size), potential: random(2, 0.6, 1) };
    let mut c = FlowConfig::new(background, random(2, 0.6, 2), t_end);
    c.seed = 3;
    c
}

#[test]
fn fixed_point_is_stationary() {
    let bg = flat_torus(1, 32);
    let s = assemble_state(&bg, ScalarField::zeros(bg.grid())).unwrap();
    assert_eq!(pcf_rhs(&s).unwrap().sup_norm(), 0.0);
    let next = step(&s, 1e-3, Scheme::Euler, RhsKind::pcf()).unwrap();
    assert_eq!(next.phi(), s.phi());
    let round = round_sphere(32);
    let s = assemble_state(&round, ScalarField::zeros(round.grid())).unwrap();
    assert!(pcf_rhs(&s).unwrap().sup_norm() <= 1e-14);
    assert!(krf_rhs(&s, &round).unwrap().sup_norm() <= 1e-14);
    assert!(mpcf_rhs(&s).unwrap().sup_norm() <= 1e-14);

    let mut c = FlowConfig::new(
        BackgroundSpec { grid: GridSpec::torus(1, 16), potential: PotentialSpec::Zero },
        PotentialSpec::Zero,
        0.05,
    );
    c.stop_on_convergence = false;
    let traj = run(&c).unwrap();
    assert_eq!(traj.termination, Termination::ReachedTEnd);
    assert!(traj.potentials.iter().all(|p| p.sup_norm() == 0.0));
    assert!(traj.diagnostics.iter().all(|d| d.k_energy == 0.0));
}

#[test]
fn torus_velocity_is_h_minus_ricci_potential() {
    let bg = curved(GridSpec::torus(1, 64), 2, 0.5);
    let s = random_state(&bg, 3, 0.5);
    let v = pcf_rhs(&s).unwrap();
    let expected = s.h().sub(bg.ricci_potential().unwrap());
    assert!(sup_dist(&v, &expected) <= 1e-8);
    let flat = flat_torus(1, 32);
    let sf = random_state(&flat, 3, 0.5);
    assert!(sup_dist(&krf_rhs(&sf, &flat).unwrap(), sf.h()) == 0.0);
}

#[test]
fn velocity_satisfies_volume_identity() {
    for bg in [curved(GridSpec::torus(1, 48), 4, 0.5), curved(GridSpec::sphere(48), 4, 0.5)] {
        let s = random_state(&bg, 4, 0.4);
        let v = pcf_rhs(&s).unwrap();
        let e = v.add(s.pseudo_term().unwrap()).map(f64::exp);
        let total = s.integrate(&e, Measure::BackgroundVolume);
        assert!(((total - bg.volume()) / bg.volume()).abs() <= 1e-12);
    }
}

#[test]
fn normalizations_differ_by_constants() {
    for bg in [curved(GridSpec::torus(1, 48), 5, 0.5), curved(GridSpec::sphere(48), 5, 0.5)] {
        let s = random_state(&bg, 5, 0.4);
        let p = pcf_rhs(&s).unwrap();
        let m = mpcf_rhs(&s).unwrap();
        let k = krf_rhs(&s, &bg).unwrap();
        assert!(s.integrate(&m, Measure::EvolvedVolume).abs() <= 1e-12 * bg.volume());
        assert!(m.deviation_from_constant(&p) <= 1e-12 * p.sup_norm().max(1.0));
        assert!(k.deviation_from_constant(&p) <= 1e-8 * p.sup_norm().max(1.0), "{}", k.deviation_from_constant(&p));
    }
}

#[test]
fn adaptive_step_matches_formula_on_flat_metric() {
    for (n, size) in [(1, 32), (2, 8)] {
        let bg = flat_torus(n, size);
        let s = assemble_state(&bg, ScalarField::zeros(bg.grid())).unwrap();
        let dx = 1.0 / size as f64;
        let expected = 0.4 * dx * dx / (2.0 * n as f64);
        assert!((adaptive_dt(&s, 0.4) - expected).abs() <= 1e-15 * expected);
    }
}

fn final_potential(config: &FlowConfig) -> ScalarField {
    let t = run(config).unwrap();
    assert_eq!(t.termination, Termination::ReachedTEnd, "{:?}", t.detail);
    t.final_state.phi().clone()
}

/// Errors against a fine reference shrink at the scheme's order.
#[test]
fn schemes_converge_at_their_order() {
    let mut base = torus_config(1, 16, 0.01);
    base.stop_on_convergence = false;
    base.sample_interval = 0.01;
    for (scheme, dt0, order, floor) in [(Scheme::Rk4, 5e-4, 4.0, 3.8), (Scheme::Euler, 2.5e-4, 1.0, 0.9)] {
        let with_dt = |dt: f64| {
            let mut c = base.clone();
            c.scheme = scheme;
            c.dt_policy = DtPolicy::Fixed(dt);
            final_potential(&c)
        };
        let reference = with_dt(dt0 / 16.0);
        let e1 = sup_dist(&with_dt(dt0), &reference);
        let e2 = sup_dist(&with_dt(dt0 / 2.0), &reference);
        let observed = (e1 / e2).log2();
        assert!(observed >= floor, "{scheme:?}: observed order {observed} (expected {order})");
    }
}

#[test]
fn mean_modified_flow_conserves_i_and_tracks_plain_flow() {
    let mut plain = torus_config(1, 32, 0.2);
    plain.stop_on_convergence = false;
    plain.sample_interval = 0.05;
    let mut modified = plain.clone();
    modified.rhs = RhsKind::mpcf();
    let a = run(&plain).unwrap();
    let b = run(&modified).unwrap();
    assert_eq!(a.times, b.times);
    let i0 = b.diagnostics[0].i_value;
    let bg = b.final_state.bg().clone();
    for (pa, pb) in a.potentials.iter().zip(&b.potentials) {
        let i = i_functional(&bg, pb).unwrap();
        let scale = i0.abs().max(bg.volume() * pb.sup_norm()).max(1e-300);
        assert!((i - i0).abs() <= 1e-8 * scale, "{i} vs {i0}");
        assert!(pa.deviation_from_constant(pb) <= 1e-8);
    }
}

#[test]
fn k_energy_decreases_along_flow() {
    for grid in [GridSpec::torus(1, 32), GridSpec::sphere(32)] {
        let background = BackgroundSpec { grid, potential: random(2, 0.6, 1) };
        let mut c = FlowConfig::new(background, random(2, 0.6, 2), 0.1);
        c.seed = 9;
        c.sample_interval = 0.005;
        c.stop_on_convergence = false;
        let t = run(&c).unwrap();
        assert_eq!(t.termination, Termination::ReachedTEnd);
        for w in t.diagnostics.windows(2) {
            assert!(w[1].k_energy <= w[0].k_energy + 1e-10);
            assert!(w[1].dissipation <= 0.0);
        }
        let last = t.diagnostics.last().unwrap();
        assert!(last.calabi_energy < t.diagnostics[0].calabi_energy);
        assert!((k_energy(&t.final_state).unwrap() - last.k_energy).abs() == 0.0);
    }
}

#[test]
fn samples_land_on_the_cadence() {
    let mut c = torus_config(1, 16, 0.013);
    c.sample_interval = 0.002;
    c.stop_on_convergence = false;
    let t = run(&c).unwrap();
    let expected: Vec<f64> = (0..7).map(|k| k as f64 * 0.002).chain([0.013]).collect();
    assert_eq!(t.times.len(), expected.len());
    for (a, b) in t.times.iter().zip(&expected) {
        assert!((a - b).abs() <= 1e-15, "{a} vs {b}");
    }
    assert!(t.times.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(t.diagnostics.len(), t.times.len());
    assert!(t.diagnostics.iter().all(|d| d.is_finite()));
}

#[test]
fn oversized_step_loses_positivity() {
    let mut c = torus_config(1, 32, 1.0);
    c.scheme = Scheme::Euler;
    c.dt_policy = DtPolicy::Fixed(0.05);
    let t = run(&c).unwrap();
    assert_eq!(t.termination, Termination::PositivityLoss);
    assert!(!t.termination.is_success());
    assert!(t.detail.is_some());
}

#[test]
fn invalid_configs_are_rejected() {
    let mut c = torus_config(1, 16, 0.0);
    assert!(run(&c).is_err());
    c.t_end = 1.0;
    c.dt_policy = DtPolicy::Adaptive(1.5);
    assert!(run(&c).is_err());
    c.dt_policy = DtPolicy::Fixed(-1.0);
    assert!(run(&c).is_err());
}

#[test]
fn runs_are_deterministic_and_batch_order_is_stable() {
    let mut configs = Vec::new();
    for seed in 0..3 {
        let mut c = torus_config(1, 16, 0.004);
        c.seed = seed;
        c.sample_interval = 0.001;
        configs.push(c);
    }
    let seq = run_batch(&configs, ExecPolicy::Sequential);
    let par = run_batch(&configs, ExecPolicy::default());
    for ((a, b), c) in seq.iter().zip(&par).zip(&configs) {
        let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
        let single = run(c).unwrap();
        assert_eq!(a.diagnostics, b.diagnostics);
        assert_eq!(a.diagnostics, single.diagnostics);
        assert_eq!(a.final_state.phi(), single.final_state.phi());
    }
    assert_ne!(seq[0].as_ref().unwrap().diagnostics, seq[1].as_ref().unwrap().diagnostics);
}

#[test]
fn default_convergence_threshold() {
    let c = torus_config(1, 16, 1.0);
    let bg = c.build_background().unwrap();
    assert_eq!(flow::convergence_threshold(&c, &bg), 1e-12);
    let mut s = c.clone();
    s.background.grid = GridSpec::sphere(16);
    let bg = s.build_background().unwrap();
    assert!((flow::convergence_threshold(&s, &bg) - 1e-10 * bg.volume()).abs() <= 1e-22);
}
