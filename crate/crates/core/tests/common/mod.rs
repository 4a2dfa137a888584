#![allow(dead_code)]

use std::sync::Arc;

use pcflow::geometry::{build_background, BackgroundGeometry, BackgroundSpec, GridSpec, MetricState, PotentialSpec};
use pcflow::ScalarField;

pub fn background(grid: GridSpec, potential: PotentialSpec, seed: u64) -> Arc<BackgroundGeometry> {
    build_background(&BackgroundSpec { grid, potential }, seed).expect("valid background")
}

pub fn flat_torus(n: usize, size: usize) -> Arc<BackgroundGeometry> {
    background(GridSpec::torus(n, size), PotentialSpec::Zero, 0)
}

pub fn round_sphere(size: usize) -> Arc<BackgroundGeometry> {
    background(GridSpec::sphere(size), PotentialSpec::Zero, 0)
}

/// Random background with the given margin relative to the reference metric.
pub fn curved(grid: GridSpec, seed: u64, margin: f64) -> Arc<BackgroundGeometry> {
    curved_modes(grid, seed, margin, 3)
}

pub fn curved_modes(grid: GridSpec, seed: u64, margin: f64, max_mode: usize) -> Arc<BackgroundGeometry> {
    background(grid, PotentialSpec::Random { max_mode, target_margin: margin, stream: 1 }, seed)
}

pub fn random_phi(bg: &Arc<BackgroundGeometry>, seed: u64, margin: f64, max_mode: usize) -> ScalarField {
    PotentialSpec::Random { max_mode, target_margin: margin, stream: 2 }
        .realize(bg.grid(), bg.metric(), seed)
        .expect("valid potential")
}

pub fn random_state(bg: &Arc<BackgroundGeometry>, seed: u64, margin: f64) -> MetricState {
    random_state_modes(bg, seed, margin, 3)
}

pub fn random_state_modes(bg: &Arc<BackgroundGeometry>, seed: u64, margin: f64, max_mode: usize) -> MetricState {
    pcflow::geometry::assemble_state(bg, random_phi(bg, seed, margin, max_mode)).expect("valid state")
}

/// Grid-scale alternating pattern `Π_{a ∈ mask} (−1)^{i_a}` on a unit torus.
pub fn checkerboard(grid: &Arc<pcflow::geometry::Grid>, mask: usize) -> ScalarField {
    let n = grid.spec().resolution as f64;
    ScalarField::from_fn(grid, |x| {
        let odd = x.iter().enumerate().filter(|(a, c)| mask & (1 << a) != 0 && ((*c * n).round() as i64) % 2 == 1).count();
        if odd % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    })
}

pub fn sup_dist(a: &ScalarField, b: &ScalarField) -> f64 {
    a.sub(b).sup_norm()
}
