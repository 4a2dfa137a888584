use std::sync::{Arc, OnceLock};

use super::background::ricci_from_log_det;
use super::{BackgroundGeometry, HermitianTensorField, ScalarField, Tensor20Field, DEFAULT_EPS_POS};
use crate::elliptic::{self, SolveReport};
use crate::herm;
use crate::{Error, Result};

/// Which metric an operator refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Background,
    Evolved,
}

/// Which volume form an integral is taken against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Measure {
    BackgroundVolume,
    EvolvedVolume,
}

type Cached = OnceLock<Result<(ScalarField, SolveReport)>>;

/// Thresholds used when assembling a state and solving for its potentials.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateOptions {
    /// Positivity threshold on the margin.
    pub eps_pos: f64,
    /// Relative residual tolerance of the evolved-metric Poisson solves.
    pub solver_tol: f64,
}

impl Default for StateOptions {
    fn default() -> Self {
        Self { eps_pos: DEFAULT_EPS_POS, solver_tol: elliptic::DEFAULT_TOL }
    }
}

/// A Kähler potential together with its derived metric data.
#[derive(Clone, Debug)]
pub struct MetricState {
    bg: Arc<BackgroundGeometry>,
    phi: ScalarField,
    phi_hessian: HermitianTensorField,
    g_phi: HermitianTensorField,
    det_phi: Vec<f64>,
    h: ScalarField,
    margin: f64,
    options: StateOptions,
    pseudo: Cached,
    futaki: Cached,
}

/// Assemble with the default positivity threshold.
pub fn assemble_state(bg: &Arc<BackgroundGeometry>, phi: ScalarField) -> Result<MetricState> {
    MetricState::new(bg, phi, StateOptions::default())
}

impl MetricState {
    /// `g_φ = g + φ_{ij̄}`, `h = log(det g_φ / det g)` and the margin, which is
    /// the smallest eigenvalue of `g⁻¹g_φ` over all nodes. Fails when the
    /// margin is at or below `options.eps_pos`.
    pub fn new(bg: &Arc<BackgroundGeometry>, phi: ScalarField, options: StateOptions) -> Result<Self> {
        let grid = bg.grid();
        phi.check_grid(grid)?;
        if let Some(i) = phi.values().iter().position(|v| !v.is_finite()) {
            return Err(Error::Shape(format!("non-finite potential at node {i}")));
        }
        let n = grid.complex_dim();
        let phi_hessian = HermitianTensorField::from_vec(grid, grid.complex_hessian(phi.values()));
        let g_phi = bg.metric().add(&phi_hessian);
        let mut margin = f64::INFINITY;
        let mut det_phi = Vec::with_capacity(grid.node_count());
        let mut h = Vec::with_capacity(grid.node_count());
        for p in 0..grid.node_count() {
            let g = bg.metric().at(p);
            let gp = g_phi.at(p);
            margin = margin.min(herm::rel_eigs(g, gp, n).0);
            let d = herm::det(gp, n);
            det_phi.push(d);
            // n = 1: h = log(1 + Δ_ω φ) exactly.
            h.push(if n == 1 { (gp[0].re / g[0].re).ln() } else { (d / bg.volume_density()[p]).ln() });
        }
        if !(margin > options.eps_pos) {
            return Err(Error::PositivityLoss { margin, threshold: options.eps_pos });
        }
        Ok(Self {
            bg: bg.clone(),
            phi,
            phi_hessian,
            g_phi,
            det_phi,
            h: ScalarField::from_vec(grid, h),
            margin,
            options,
            pseudo: OnceLock::new(),
            futaki: OnceLock::new(),
        })
    }

    pub fn bg(&self) -> &Arc<BackgroundGeometry> {
        &self.bg
    }

    pub fn grid(&self) -> &Arc<super::Grid> {
        self.bg.grid()
    }

    pub fn complex_dim(&self) -> usize {
        self.bg.complex_dim()
    }

    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }

    pub fn phi_hessian(&self) -> &HermitianTensorField {
        &self.phi_hessian
    }

    pub fn g_phi(&self) -> &HermitianTensorField {
        &self.g_phi
    }

    /// `det g_φ` relative to the reference metric (density of `ω_φ^{[n]}`).
    pub fn volume_density(&self) -> &[f64] {
        &self.det_phi
    }

    pub fn h(&self) -> &ScalarField {
        &self.h
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn options(&self) -> StateOptions {
        self.options
    }

    /// Another potential on the same background with the same options.
    pub fn with_phi(&self, phi: ScalarField) -> Result<Self> {
        Self::new(&self.bg, phi, self.options)
    }

    pub fn density(&self, measure: Measure) -> &[f64] {
        match measure {
            Measure::BackgroundVolume => self.bg.volume_density(),
            Measure::EvolvedVolume => &self.det_phi,
        }
    }

    pub fn metric(&self, which: Which) -> &HermitianTensorField {
        match which {
            Which::Background => self.bg.metric(),
            Which::Evolved => &self.g_phi,
        }
    }

    pub fn integrate(&self, f: &ScalarField, measure: Measure) -> f64 {
        self.grid().ref_integral_weighted(f.values(), self.density(measure))
    }

    /// `(1/V)∫ f ω_φ^{[n]}`.
    pub fn evolved_mean(&self, f: &ScalarField) -> f64 {
        self.integrate(f, Measure::EvolvedVolume) / self.bg.volume()
    }

    pub fn laplacian(&self, f: &ScalarField) -> ScalarField {
        laplacian(Which::Evolved, self, f)
    }

    /// `tr_φ T = g_φ^{j̄i}T_{ij̄}` per node.
    pub fn trace(&self, t: &HermitianTensorField) -> ScalarField {
        let n = self.complex_dim();
        let v = (0..self.grid().node_count()).map(|p| herm::trace_with(self.g_phi.at(p), t.at(p), n)).collect();
        ScalarField::from_vec(self.grid(), v)
    }

    /// `Re g_φ^{j̄i} ∂ᵢa ∂_{j̄}b` per node.
    pub fn gradient_pairing(&self, a: &ScalarField, b: &ScalarField) -> ScalarField {
        ScalarField::from_vec(self.grid(), self.grid().gradient_pairing(a.values(), b.values(), &self.g_phi))
    }

    /// `tr_φ Ric(ω)`.
    pub fn trace_background_ricci(&self) -> ScalarField {
        self.trace(self.bg.ricci())
    }

    /// `R_{ij̄}(g_φ) = Ric_ref − ∂∂̄ log det g_φ` in the reference frame.
    pub fn ricci(&self) -> HermitianTensorField {
        let log_det: Vec<f64> = self.det_phi.iter().map(|d| d.ln()).collect();
        ricci_from_log_det(self.grid(), &log_det)
    }

    /// Extreme eigenvalues of `g_φ⁻¹ Ric(g_φ)` over the grid.
    pub fn ricci_bounds(&self) -> (f64, f64) {
        let n = self.complex_dim();
        let ric = self.ricci();
        (0..self.grid().node_count()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            let (a, b) = herm::rel_eigs(self.g_phi.at(p), ric.at(p), n);
            (lo.min(a), hi.max(b))
        })
    }

    /// `max (n + Δ_ω φ)`.
    pub fn max_n_plus_lap_phi(&self) -> f64 {
        let n = self.complex_dim();
        let tr = (0..self.grid().node_count())
            .map(|p| herm::trace_with(self.bg.metric().at(p), self.g_phi.at(p), n))
            .fold(f64::NEG_INFINITY, f64::max);
        tr
    }

    /// The pseudo-term `P`, solved on first use.
    pub fn pseudo_term(&self) -> Result<&ScalarField> {
        self.pseudo_term_with_report().map(|(p, _)| p)
    }

    pub fn pseudo_term_with_report(&self) -> Result<(&ScalarField, &SolveReport)> {
        match self.pseudo.get_or_init(|| elliptic::solve_p(self)) {
            Ok((p, r)) => Ok((p, r)),
            Err(e) => Err(e.clone()),
        }
    }

    /// The Futaki potential `f`, solved on first use.
    pub fn futaki_potential(&self) -> Result<&ScalarField> {
        self.futaki_potential_with_report().map(|(f, _)| f)
    }

    pub fn futaki_potential_with_report(&self) -> Result<(&ScalarField, &SolveReport)> {
        match self.futaki.get_or_init(|| elliptic::solve_futaki_potential(self)) {
            Ok((f, r)) => Ok((f, r)),
            Err(e) => Err(e.clone()),
        }
    }

    /// Scalar curvature via `S_φ = −Δ_φ h + tr_φ Ric(ω)`.
    pub fn scalar_curvature(&self) -> ScalarField {
        scalar_curvature(self)
    }

    /// Scalar curvature contracted directly from `R_{ij̄}(g_φ)`. On the sphere
    /// this uses the isothermal form `S = (2 + 2uσ' − (1−u²)σ'') / (2e^σ)`
    /// with `σ = log g_φ`, built from the nodal derivative matrices.
    pub fn scalar_curvature_direct(&self) -> ScalarField {
        let grid = self.grid();
        if let Some(s) = grid.sphere() {
            let sigma: Vec<f64> = self.det_phi.iter().map(|d| d.ln()).collect();
            let d1 = s.d1(&sigma);
            let d2 = s.d2(&sigma);
            let v = (0..s.size)
                .map(|k| {
                    let u = s.nodes[k];
                    (2.0 + 2.0 * u * d1[k] - (1.0 - u * u) * d2[k]) / (2.0 * self.det_phi[k])
                })
                .collect();
            return ScalarField::from_vec(grid, v);
        }
        self.trace(&self.ricci())
    }
}

/// `Δ f = g^{j̄i}∂ᵢ∂_{j̄} f` for the background or the evolved metric.
pub fn laplacian(which: Which, state: &MetricState, f: &ScalarField) -> ScalarField {
    let grid = state.grid();
    ScalarField::from_vec(grid, grid.laplacian_with(f.values(), state.metric(which)))
}

pub fn scalar_curvature(state: &MetricState) -> ScalarField {
    state.trace_background_ricci().sub(&state.laplacian(state.h()))
}

/// `u_{;ij} = ∂ᵢ∂ⱼu − Γᵏᵢⱼ∂ₖu` of the evolved metric.
pub fn covariant_hessian20(state: &MetricState, f: &ScalarField) -> Tensor20Field {
    let grid = state.grid();
    Tensor20Field::from_vec(grid, grid.hessian20(f.values(), state.g_phi()))
}
