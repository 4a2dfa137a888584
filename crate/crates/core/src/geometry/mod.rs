//! Discretized Kähler geometries and the differential and integral
//! operators used by every other module.

mod background;
mod fields;
mod sphere;
mod state;
mod torus;

use std::sync::Arc;

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

pub use background::{build_background, BackgroundGeometry, BackgroundSpec, FourierTerm, PotentialSpec};
pub use fields::{HermitianTensorField, ScalarField, Tensor20Field};
pub use state::{assemble_state, covariant_hessian20, laplacian, scalar_curvature, Measure, MetricState, StateOptions, Which};

pub(crate) use background::identity_at as identity_frame;
pub(crate) use sphere::gauss_legendre;

use crate::herm;
use crate::{Error, Result};
use sphere::SphereOps;
use torus::TorusOps;

/// Default positivity threshold for the Kähler condition.
pub const DEFAULT_EPS_POS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    #[serde(rename = "torus")]
    TorusPeriodic,
    #[serde(rename = "sphere")]
    SphereAxisymmetric,
}

impl Backend {
    pub fn code(self) -> u32 {
        match self {
            Backend::TorusPeriodic => 0,
            Backend::SphereAxisymmetric => 1,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(Backend::TorusPeriodic),
            1 => Some(Backend::SphereAxisymmetric),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub backend: Backend,
    pub complex_dim: usize,
    /// Points per real axis (torus) or Gauss–Legendre nodes (sphere).
    pub resolution: usize,
    /// Real lattice periods, one per real axis (torus only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub periods: Vec<f64>,
}

impl GridSpec {
    pub fn torus(complex_dim: usize, resolution: usize) -> Self {
        Self {
            backend: Backend::TorusPeriodic,
            complex_dim,
            resolution,
            periods: vec![1.0; 2 * complex_dim],
        }
    }

    pub fn sphere(resolution: usize) -> Self {
        Self { backend: Backend::SphereAxisymmetric, complex_dim: 1, resolution, periods: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        match self.backend {
            Backend::TorusPeriodic => {
                if !(1..=2).contains(&self.complex_dim) {
                    return Err(Error::Spec(format!("complex_dim must be 1 or 2, got {}", self.complex_dim)));
                }
                if self.resolution < 8 || !self.resolution.is_multiple_of(2) {
                    return Err(Error::Spec(format!(
                        "torus resolution must be even and >= 8, got {}",
                        self.resolution
                    )));
                }
                if self.periods.len() != 2 * self.complex_dim {
                    return Err(Error::Spec(format!(
                        "torus needs {} periods, got {}",
                        2 * self.complex_dim,
                        self.periods.len()
                    )));
                }
                if self.periods.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
                    return Err(Error::Spec("torus periods must be positive".into()));
                }
            }
            Backend::SphereAxisymmetric => {
                if self.complex_dim != 1 {
                    return Err(Error::Spec("the sphere backend has complex dimension 1".into()));
                }
                if self.resolution < 8 {
                    return Err(Error::Spec(format!("sphere resolution must be >= 8, got {}", self.resolution)));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug)]
enum GridKind {
    Torus(TorusOps),
    Sphere(SphereOps),
}

/// A grid together with its precomputed spectral machinery.
#[derive(Debug)]
pub struct Grid {
    spec: GridSpec,
    kind: GridKind,
    weights: Vec<f64>,
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Arc<Self>> {
        spec.validate()?;
        let (kind, weights) = match spec.backend {
            Backend::TorusPeriodic => {
                let ops = TorusOps::new(spec.complex_dim, spec.resolution, &spec.periods);
                let w = vec![ops.cell_weight(); ops.nodes];
                (GridKind::Torus(ops), w)
            }
            Backend::SphereAxisymmetric => {
                let ops = SphereOps::new(spec.resolution);
                let w = ops.area_weights.clone();
                (GridKind::Sphere(ops), w)
            }
        };
        Ok(Arc::new(Self { spec, kind, weights }))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn backend(&self) -> Backend {
        self.spec.backend
    }

    pub fn complex_dim(&self) -> usize {
        self.spec.complex_dim
    }

    pub fn resolution(&self) -> usize {
        self.spec.resolution
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    /// Quadrature weights of the reference measure (flat Lebesgue or round area).
    pub fn ref_weights(&self) -> &[f64] {
        &self.weights
    }

    /// Node coordinates: `(x₁, y₁, …)` on the torus, `[u]` on the sphere.
    pub fn node_coords(&self, p: usize) -> Vec<f64> {
        match &self.kind {
            GridKind::Torus(t) => t.coords(p),
            GridKind::Sphere(s) => vec![s.nodes[p]],
        }
    }

    /// Scalar curvature of the reference metric (flat: 0, unit round: 1).
    pub fn ref_scalar(&self) -> f64 {
        match self.kind {
            GridKind::Torus(_) => 0.0,
            GridKind::Sphere(_) => 1.0,
        }
    }

    /// Representative node spacing used by the adaptive step rule.
    pub fn spacing(&self) -> f64 {
        match &self.kind {
            GridKind::Torus(t) => t.periods.iter().copied().fold(f64::INFINITY, f64::min) / t.size as f64,
            GridKind::Sphere(s) => 2.0 / s.size as f64,
        }
    }

    pub(crate) fn ref_integral(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    pub(crate) fn ref_integral_weighted(&self, f: &[f64], density: &[f64]) -> f64 {
        f.iter().zip(density).zip(&self.weights).map(|((a, d), w)| a * d * w).sum()
    }

    /// Laplacian of the reference metric.
    pub(crate) fn ref_laplacian(&self, f: &[f64]) -> Vec<f64> {
        match &self.kind {
            GridKind::Torus(t) => t.flat_laplacian(f),
            GridKind::Sphere(s) => s.laplacian(f),
        }
    }

    /// Reference-metric Poisson inverse; the reference mean of `rhs` is dropped
    /// and the solution has reference mean zero.
    pub(crate) fn ref_laplacian_inverse(&self, rhs: &[f64]) -> Vec<f64> {
        match &self.kind {
            GridKind::Torus(t) => t.flat_laplacian_inverse(rhs),
            GridKind::Sphere(s) => s.laplacian_inverse(rhs),
        }
    }

    /// Complex Hessian `f_{ij̄}` in the reference frame.
    pub(crate) fn complex_hessian(&self, f: &[f64]) -> Vec<C> {
        match &self.kind {
            GridKind::Torus(t) => t.complex_hessian(f),
            GridKind::Sphere(s) => s.laplacian(f).into_iter().map(|v| C::new(v, 0.0)).collect(),
        }
    }

    /// `∂ᵢ f` in the reference frame (`n` entries per node).
    pub(crate) fn gradient(&self, f: &[f64]) -> Vec<C> {
        match &self.kind {
            GridKind::Torus(t) => t.holo_gradient(f),
            GridKind::Sphere(s) => s
                .d1(f)
                .iter()
                .zip(&s.nodes)
                .map(|(d, u)| C::new((0.5 * (1.0 - u * u)).sqrt() * d, 0.0))
                .collect(),
        }
    }

    /// Pointwise `Re g^{ij̄} ∂ᵢa ∂_{j̄}b` for real `a`, `b`.
    pub(crate) fn gradient_pairing(&self, a: &[f64], b: &[f64], g: &HermitianTensorField) -> Vec<f64> {
        let n = self.complex_dim();
        let da = self.gradient(a);
        let db = if std::ptr::eq(a, b) { da.clone() } else { self.gradient(b) };
        (0..self.node_count())
            .map(|p| {
                let h = herm::inv(g.at(p), n);
                let mut s = C::new(0.0, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        s += h[j * n + i] * da[p * n + i] * db[p * n + j].conj();
                    }
                }
                s.re
            })
            .collect()
    }

    /// Laplacian of the metric `g` applied to `f`. In dimension 1 this is
    /// `Δ_ref f / g`; in dimension 2 the divergence form
    /// `(det g)⁻¹ Σᵢ ∂ᵢ(Σⱼ adj(g)ⱼᵢ ∂_{j̄} f)` is used.
    pub(crate) fn laplacian_with(&self, f: &[f64], g: &HermitianTensorField) -> Vec<f64> {
        match (&self.kind, self.complex_dim()) {
            (GridKind::Torus(t), 2) => {
                let (flux, det) = self.divergence_flux(t, f, g);
                t.holo_divergence(&flux).iter().zip(det).map(|(v, d)| v / d).collect()
            }
            _ => self
                .ref_laplacian(f)
                .iter()
                .enumerate()
                .map(|(p, l)| l / g.at(p)[0].re)
                .collect(),
        }
    }

    /// Symmetric form `−det(g)·Δ_g f` (dimension-2 torus only).
    pub(crate) fn weighted_operator(&self, f: &[f64], g: &HermitianTensorField) -> Vec<f64> {
        match &self.kind {
            GridKind::Torus(t) => {
                let (flux, _) = self.divergence_flux(t, f, g);
                t.holo_divergence(&flux).into_iter().map(|v| -v).collect()
            }
            GridKind::Sphere(_) => unreachable!("weighted operator is only used on the torus"),
        }
    }

    fn divergence_flux(&self, t: &TorusOps, f: &[f64], g: &HermitianTensorField) -> (Vec<C>, Vec<f64>) {
        let n = self.complex_dim();
        let db = t.anti_gradient(f);
        let mut flux = vec![C::new(0.0, 0.0); self.node_count() * n];
        let mut det = vec![0.0; self.node_count()];
        for p in 0..self.node_count() {
            let gp = g.at(p);
            let a = herm::adj(gp, n);
            det[p] = herm::det(gp, n);
            for i in 0..n {
                let mut s = C::new(0.0, 0.0);
                for j in 0..n {
                    s += a[j * n + i] * db[p * n + j];
                }
                flux[p * n + i] = s;
            }
        }
        (flux, det)
    }

    /// Symbol of the flat divergence-form operator (torus only).
    pub(crate) fn flat_divergence_symbol(&self) -> Option<Vec<f64>> {
        match &self.kind {
            GridKind::Torus(t) => Some(t.divergence_form_symbol()),
            GridKind::Sphere(_) => None,
        }
    }

    pub(crate) fn torus(&self) -> Option<&TorusOps> {
        match &self.kind {
            GridKind::Torus(t) => Some(t),
            GridKind::Sphere(_) => None,
        }
    }

    pub(crate) fn sphere(&self) -> Option<&SphereOps> {
        match &self.kind {
            GridKind::Sphere(s) => Some(s),
            GridKind::Torus(_) => None,
        }
    }

    /// Covariant (2,0)-Hessian `f_{;ij} = ∂ᵢ∂ⱼf − Γᵏᵢⱼ ∂ₖf` of the metric `g`,
    /// in the reference frame.
    pub(crate) fn hessian20(&self, f: &[f64], g: &HermitianTensorField) -> Vec<C> {
        let n = self.complex_dim();
        match &self.kind {
            GridKind::Sphere(s) => {
                let gv: Vec<f64> = (0..s.size).map(|k| g.at(k)[0].re).collect();
                let dg = s.d1(&gv);
                let d1 = s.d1(f);
                let d2 = s.d2(f);
                (0..s.size)
                    .map(|k| {
                        let u = s.nodes[k];
                        C::new(0.5 * (1.0 - u * u) * (d2[k] - dg[k] / gv[k] * d1[k]), 0.0)
                    })
                    .collect()
            }
            GridKind::Torus(t) => {
                let nodes = self.node_count();
                let mut out = t.holo_hessian(f);
                let df = t.holo_gradient(f);
                // dg[(j, l)] holds ∂ᵢ g_{jl̄} for every i.
                let dg: Vec<Vec<C>> = (0..n * n)
                    .map(|jl| {
                        let comp: Vec<C> = (0..nodes).map(|p| g.at(p)[jl]).collect();
                        t.holo_gradient_complex(&comp)
                    })
                    .collect();
                for p in 0..nodes {
                    let h = herm::inv(g.at(p), n);
                    for i in 0..n {
                        for j in 0..n {
                            let mut corr = C::new(0.0, 0.0);
                            for k in 0..n {
                                let mut gamma = C::new(0.0, 0.0);
                                for l in 0..n {
                                    gamma += h[l * n + k] * dg[j * n + l][p * n + i];
                                }
                                corr += gamma * df[p * n + k];
                            }
                            out[p * n * n + i * n + j] -= corr;
                        }
                    }
                }
                out
            }
        }
    }

    /// Spectral resampling onto another grid of the same geometry.
    pub fn resample(self: &Arc<Self>, field: &ScalarField, target: &Arc<Grid>) -> Result<ScalarField> {
        field.check_grid(self)?;
        match (&self.kind, &target.kind) {
            (GridKind::Torus(a), GridKind::Torus(b)) if a.n == b.n && a.periods == b.periods => {
                Ok(ScalarField::from_vec(target, a.resample(b, field.values())))
            }
            (GridKind::Sphere(a), GridKind::Sphere(b)) => {
                let coef = a.coefficients(field.values());
                let keep = coef.len().min(b.size);
                let vals = b.synthesize(&coef[..keep]);
                Ok(ScalarField::from_vec(target, vals))
            }
            _ => Err(Error::Shape("cannot resample between different geometries".into())),
        }
    }
}
