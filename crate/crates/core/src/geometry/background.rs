use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use super::{Backend, Grid, GridSpec, HermitianTensorField, ScalarField};
use crate::herm;
use crate::{elliptic, random, Error, Result};

/// One real Fourier mode `cos·cos(2π m·x/L) + sin·sin(2π m·x/L)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    pub mode: Vec<i64>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// A Kähler potential descriptor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialSpec {
    Zero,
    /// Truncated Fourier series (torus).
    Fourier { terms: Vec<FourierTerm> },
    /// Coefficients of `P_l(u)`, starting at `l = 0` (sphere).
    Legendre { coefficients: Vec<f64> },
    /// Seeded random smooth potential scaled so that the smallest eigenvalue
    /// of the resulting metric relative to its base metric equals `target_margin`.
    Random {
        max_mode: usize,
        target_margin: f64,
        #[serde(default)]
        stream: u64,
    },
}

impl PotentialSpec {
    /// Evaluate a deterministic descriptor on the grid. Random descriptors
    /// need a base metric and go through [`PotentialSpec::realize`].
    pub fn evaluate(&self, grid: &Arc<Grid>) -> Result<ScalarField> {
        match self {
            PotentialSpec::Zero => Ok(ScalarField::zeros(grid)),
            PotentialSpec::Fourier { terms } => {
                if grid.backend() != Backend::TorusPeriodic {
                    return Err(Error::Spec("Fourier potentials need the torus backend".into()));
                }
                let periods = &grid.spec().periods;
                for t in terms {
                    if t.mode.len() != periods.len() {
                        return Err(Error::Spec(format!(
                            "Fourier mode {:?} needs {} entries",
                            t.mode,
                            periods.len()
                        )));
                    }
                    if !(t.cos.is_finite() && t.sin.is_finite()) {
                        return Err(Error::Spec("non-finite Fourier coefficient".into()));
                    }
                }
                Ok(ScalarField::from_fn(grid, |x| {
                    terms
                        .iter()
                        .map(|t| {
                            let arg: f64 = t
                                .mode
                                .iter()
                                .zip(x)
                                .zip(periods)
                                .map(|((&m, &xi), &l)| 2.0 * PI * m as f64 * xi / l)
                                .sum();
                            t.cos * arg.cos() + t.sin * arg.sin()
                        })
                        .sum()
                }))
            }
            PotentialSpec::Legendre { coefficients } => {
                let s = grid
                    .sphere()
                    .ok_or_else(|| Error::Spec("Legendre potentials need the sphere backend".into()))?;
                if coefficients.len() > grid.resolution() {
                    return Err(Error::Spec(format!(
                        "{} Legendre coefficients exceed resolution {}",
                        coefficients.len(),
                        grid.resolution()
                    )));
                }
                if coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Spec("non-finite Legendre coefficient".into()));
                }
                Ok(ScalarField::from_vec(grid, s.synthesize(coefficients)))
            }
            PotentialSpec::Random { .. } => {
                Err(Error::Spec("random potentials need a seed and a base metric".into()))
            }
        }
    }

    /// Evaluate the descriptor, resolving random potentials against `base`
    /// (the metric the margin is measured relative to) with the given seed.
    pub fn realize(&self, grid: &Arc<Grid>, base: &HermitianTensorField, seed: u64) -> Result<ScalarField> {
        match *self {
            PotentialSpec::Random { max_mode, target_margin, stream } => {
                if !(target_margin > 0.0 && target_margin < 1.0) {
                    return Err(Error::Spec(format!("target_margin must lie in (0,1), got {target_margin}")));
                }
                if max_mode == 0 || 2 * max_mode >= grid.resolution() {
                    return Err(Error::Spec(format!(
                        "max_mode must be in 1..{}, got {max_mode}",
                        grid.resolution() / 2
                    )));
                }
                let shape = random::smooth_field(grid, max_mode, seed, stream);
                let s = random::scale_to_margin(grid, base, &shape, target_margin)?;
                Ok(shape.scale(s))
            }
            _ => self.evaluate(grid),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackgroundSpec {
    pub grid: GridSpec,
    pub potential: PotentialSpec,
}

/// Fixed reference Kähler data: `ω = ω_ref + (√−1/2)∂∂̄ρ`.
#[derive(Debug)]
pub struct BackgroundGeometry {
    grid: Arc<Grid>,
    potential: ScalarField,
    g: HermitianTensorField,
    det_g: Vec<f64>,
    ricci: HermitianTensorField,
    scalar: ScalarField,
    sbar: f64,
    volume: f64,
    lambda_class: f64,
    ricci_potential: Option<ScalarField>,
}

/// Ricci form `Ric_ref − ∂∂̄ log det g` in the reference frame.
pub(crate) fn ricci_from_log_det(grid: &Arc<Grid>, log_det: &[f64]) -> HermitianTensorField {
    let n = grid.complex_dim();
    let mut data = grid.complex_hessian(log_det);
    let s_ref = grid.ref_scalar();
    for p in 0..grid.node_count() {
        for i in 0..n {
            for j in 0..n {
                let v = &mut data[p * n * n + i * n + j];
                *v = -*v;
                if i == j {
                    *v += C::new(s_ref / n as f64, 0.0);
                }
            }
        }
    }
    HermitianTensorField::from_vec(grid, data)
}

pub fn build_background(spec: &BackgroundSpec, seed: u64) -> Result<Arc<BackgroundGeometry>> {
    let grid = Grid::new(spec.grid.clone())?;
    let identity = HermitianTensorField::scalar_multiple_of_identity(&grid, &vec![1.0; grid.node_count()]);
    let potential = spec.potential.realize(&grid, &identity, seed)?;
    BackgroundGeometry::from_potential(&grid, potential)
}

impl BackgroundGeometry {
    /// Background metric `g_ref + ρ_{ij̄}` for a given potential `ρ`.
    pub fn from_potential(grid: &Arc<Grid>, potential: ScalarField) -> Result<Arc<Self>> {
        potential.check_grid(grid)?;
        let n = grid.complex_dim();
        let identity = HermitianTensorField::scalar_multiple_of_identity(grid, &vec![1.0; grid.node_count()]);
        let hess = HermitianTensorField::from_vec(grid, grid.complex_hessian(potential.values()));
        let g = identity.add(&hess);
        let mut margin = f64::INFINITY;
        let mut det_g = Vec::with_capacity(grid.node_count());
        for p in 0..grid.node_count() {
            margin = margin.min(herm::rel_eigs(identity.at(p), g.at(p), n).0);
            det_g.push(herm::det(g.at(p), n));
        }
        if !(margin > 0.0) {
            return Err(Error::PositivityLoss { margin, threshold: 0.0 });
        }
        let log_det: Vec<f64> = det_g.iter().map(|d| d.ln()).collect();
        let ricci = ricci_from_log_det(grid, &log_det);
        let scalar: Vec<f64> = (0..grid.node_count()).map(|p| herm::trace_with(g.at(p), ricci.at(p), n)).collect();
        let volume = grid.ref_integral(&det_g);
        let sbar = grid.ref_integral_weighted(&scalar, &det_g) / volume;
        // Ric(ω_ref) = λ ω_ref: the reference frame stores Ric_ref = (S_ref/n)·I.
        let lambda_class = (grid.ref_scalar() / n as f64).round();
        let mut bg = Self {
            grid: grid.clone(),
            potential,
            g,
            det_g,
            ricci,
            scalar: ScalarField::from_vec(grid, scalar),
            sbar,
            volume,
            lambda_class,
            ricci_potential: None,
        };
        let (h_omega, _) = elliptic::ricci_potential_bg(&bg)?;
        bg.ricci_potential = Some(h_omega);
        Ok(Arc::new(bg))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn complex_dim(&self) -> usize {
        self.grid.complex_dim()
    }

    pub fn potential(&self) -> &ScalarField {
        &self.potential
    }

    pub fn metric(&self) -> &HermitianTensorField {
        &self.g
    }

    /// `det g` relative to the reference metric (density of `ω^{[n]}`).
    pub fn volume_density(&self) -> &[f64] {
        &self.det_g
    }

    pub fn ricci(&self) -> &HermitianTensorField {
        &self.ricci
    }

    pub fn scalar(&self) -> &ScalarField {
        &self.scalar
    }

    pub fn sbar(&self) -> f64 {
        self.sbar
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn lambda_class(&self) -> f64 {
        self.lambda_class
    }

    pub fn ricci_potential(&self) -> Option<&ScalarField> {
        self.ricci_potential.as_ref()
    }

    /// `∫ f ω^{[n]}`.
    pub fn integrate(&self, f: &ScalarField) -> f64 {
        self.grid.ref_integral_weighted(f.values(), &self.det_g)
    }

    /// Background complex Laplacian `Δ_ω f`.
    pub fn laplacian(&self, f: &ScalarField) -> ScalarField {
        ScalarField::from_vec(&self.grid, self.grid.laplacian_with(f.values(), &self.g))
    }

    /// Both backends carry a canonical class (`λ·[ω] ∝ πc₁`).
    pub fn is_canonical(&self) -> bool {
        self.ricci_potential.is_some()
    }

    /// Smallest eigenvalue of `g` relative to the reference metric.
    pub fn ref_margin(&self) -> f64 {
        let n = self.complex_dim();
        (0..self.grid.node_count())
            .map(|p| herm::rel_eigs(&identity_at(n), self.g.at(p), n).0)
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn identity_at(n: usize) -> [C; 4] {
    let one = C::new(1.0, 0.0);
    let z = C::new(0.0, 0.0);
    if n == 1 {
        [one, z, z, z]
    } else {
        [one, z, z, one]
    }
}
