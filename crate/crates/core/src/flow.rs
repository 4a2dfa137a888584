//! Time integration of the pseudo-Calabi flow, its mean-normalized variant
//! and the Kähler–Ricci flow, with explicit Euler and classical RK4.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsRecord;
use crate::geometry::{build_background, BackgroundGeometry, BackgroundSpec, MetricState, PotentialSpec, ScalarField, StateOptions};
use crate::{elliptic, Error, ExecPolicy, Result};

/// Stream offset separating the background draw from the initial-data draw.
pub const BACKGROUND_SEED_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

/// Relative tolerance of the `∫e^{rhs + P} ω^{[n]} = V` postcondition.
pub const VOLUME_IDENTITY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Equation {
    /// `∂φ/∂t = h − P`.
    #[default]
    Pcf,
    /// `∂φ/∂t = h + λφ − h_ω`.
    Krf,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `c(t) = 0`.
    #[default]
    CZero,
    /// Subtract the `ω_φ^{[n]}`-average of the velocity.
    MeanModified,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Euler,
    #[default]
    Rk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DtPolicy {
    Fixed(f64),
    /// `dt = safety·Δx²·m/(2n)` with `m` the smallest eigenvalue of `g_φ`.
    Adaptive(f64),
}

impl Default for DtPolicy {
    fn default() -> Self {
        DtPolicy::Adaptive(0.4)
    }
}

/// A flow velocity: equation plus normalization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RhsKind {
    pub equation: Equation,
    pub normalization: Normalization,
}

impl RhsKind {
    pub fn pcf() -> Self {
        Self { equation: Equation::Pcf, normalization: Normalization::CZero }
    }

    pub fn mpcf() -> Self {
        Self { equation: Equation::Pcf, normalization: Normalization::MeanModified }
    }

    pub fn krf() -> Self {
        Self { equation: Equation::Krf, normalization: Normalization::CZero }
    }

    pub fn evaluate(self, state: &MetricState) -> Result<ScalarField> {
        let v = match self.equation {
            Equation::Pcf => pcf_rhs(state)?,
            Equation::Krf => krf_rhs(state, state.bg())?,
        };
        Ok(match self.normalization {
            Normalization::CZero => v,
            Normalization::MeanModified => {
                let m = state.evolved_mean(&v);
                v.shift(-m)
            }
        })
    }
}

/// `h − P`; checks `∫e^{(h−P)+P} ω^{[n]} = V`.
pub fn pcf_rhs(state: &MetricState) -> Result<ScalarField> {
    let p = state.pseudo_term()?;
    let rhs = state.h().sub(p);
    let v = state.bg().volume();
    let check = state.bg().integrate(&rhs.add(p).map(f64::exp));
    if ((check - v) / v).abs() > VOLUME_IDENTITY_TOL {
        return Err(Error::Invariant(format!("volume identity off by {:.3e}", (check - v) / v)));
    }
    Ok(rhs)
}

/// `(h − P) − (1/V)∫(h − P) ω_φ^{[n]}`.
pub fn mpcf_rhs(state: &MetricState) -> Result<ScalarField> {
    RhsKind::mpcf().evaluate(state)
}

/// `h + λφ − h_ω`.
pub fn krf_rhs(state: &MetricState, bg: &BackgroundGeometry) -> Result<ScalarField> {
    let h_omega = bg.ricci_potential().ok_or(Error::Class)?;
    Ok(state.h().axpy(bg.lambda_class(), state.phi()).sub(h_omega))
}

/// One explicit step from `state` with velocity `k1 = rhs(state)` already known.
pub fn step_with(state: &MetricState, k1: &ScalarField, dt: f64, scheme: Scheme, rhs: RhsKind) -> Result<MetricState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    let phi = state.phi();
    match scheme {
        Scheme::Euler => state.with_phi(phi.axpy(dt, k1)),
        Scheme::Rk4 => {
            let s2 = state.with_phi(phi.axpy(0.5 * dt, k1))?;
            let k2 = rhs.evaluate(&s2)?;
            let s3 = state.with_phi(phi.axpy(0.5 * dt, &k2))?;
            let k3 = rhs.evaluate(&s3)?;
            let s4 = state.with_phi(phi.axpy(dt, &k3))?;
            let k4 = rhs.evaluate(&s4)?;
            let values = phi
                .values()
                .iter()
                .enumerate()
                .map(|(i, &p)| {
                    p + dt / 6.0 * (k1.values()[i] + 2.0 * k2.values()[i] + 2.0 * k3.values()[i] + k4.values()[i])
                })
                .collect();
            state.with_phi(ScalarField::new(state.grid(), values)?)
        }
    }
}

pub fn step(state: &MetricState, dt: f64, scheme: Scheme, rhs: RhsKind) -> Result<MetricState> {
    let k1 = rhs.evaluate(state)?;
    step_with(state, &k1, dt, scheme, rhs)
}

/// Adaptive step `safety·Δx²·m/(2n)`, `m` the smallest eigenvalue of `g_φ`
/// in the reference frame (the stiffness of `Δ_φ` scales with `1/m`).
pub fn adaptive_dt(state: &MetricState, safety: f64) -> f64 {
    let grid = state.grid();
    let n = state.complex_dim();
    let m = (0..grid.node_count())
        .map(|p| {
            let g = state.g_phi().at(p);
            crate::herm::rel_eigs(&crate::geometry::identity_frame(n), g, n).0
        })
        .fold(f64::INFINITY, f64::min);
    safety * grid.spacing().powi(2) * m / (2.0 * n as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub background: BackgroundSpec,
    pub initial: PotentialSpec,
    pub seed: u64,
    pub rhs: RhsKind,
    pub scheme: Scheme,
    pub dt_policy: DtPolicy,
    pub t_end: f64,
    pub eps_pos: f64,
    pub solver_tol: f64,
    /// Time between diagnostics samples; `0` samples every step.
    pub sample_interval: f64,
    /// Calabi-energy threshold for declaring convergence; `None` uses
    /// `1e−10·S̄²·V`, or `1e−12` when `S̄ = 0`.
    pub convergence_threshold: Option<f64>,
    pub stop_on_convergence: bool,
    pub max_steps: usize,
}

impl FlowConfig {
    pub fn new(background: BackgroundSpec, initial: PotentialSpec, t_end: f64) -> Self {
        Self {
            background,
            initial,
            seed: 0,
            rhs: RhsKind::default(),
            scheme: Scheme::default(),
            dt_policy: DtPolicy::default(),
            t_end,
            eps_pos: crate::geometry::DEFAULT_EPS_POS,
            solver_tol: elliptic::DEFAULT_TOL,
            sample_interval: 0.0,
            convergence_threshold: None,
            stop_on_convergence: true,
            max_steps: 10_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.background.grid.validate()?;
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        match self.dt_policy {
            DtPolicy::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return Err(Error::Config(format!("fixed dt must be positive, got {dt}")));
            }
            DtPolicy::Adaptive(s) if !(s > 0.0 && s <= 1.0) => {
                return Err(Error::Config(format!("safety must lie in (0,1], got {s}")));
            }
            _ => {}
        }
        if !(self.sample_interval >= 0.0 && self.sample_interval.is_finite()) {
            return Err(Error::Config("sample_interval must be non-negative".into()));
        }
        if !(self.eps_pos >= 0.0) || !(self.solver_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn options(&self) -> StateOptions {
        StateOptions { eps_pos: self.eps_pos, solver_tol: self.solver_tol }
    }

    pub fn build_background(&self) -> Result<Arc<BackgroundGeometry>> {
        build_background(&self.background, self.seed.wrapping_add(BACKGROUND_SEED_OFFSET))
    }

    /// Background and initial state described by the config.
    pub fn initial_state(&self) -> Result<MetricState> {
        let bg = self.build_background()?;
        let phi = self.initial.realize(bg.grid(), bg.metric(), self.seed)?;
        MetricState::new(&bg, phi, self.options())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    ReachedTEnd,
    PositivityLoss,
    SolverFailure,
    ConvergedToCscK,
}

impl Termination {
    pub fn is_success(self) -> bool {
        matches!(self, Termination::ReachedTEnd | Termination::ConvergedToCscK)
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub potentials: Vec<ScalarField>,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub termination: Termination,
    /// Error message when the run stopped on a failure.
    pub detail: Option<String>,
    pub steps: usize,
    pub final_state: MetricState,
}

impl Trajectory {
    pub fn series(&self, f: impl Fn(&DiagnosticsRecord) -> f64) -> Vec<(f64, f64)> {
        self.diagnostics.iter().map(|d| (d.t, f(d))).collect()
    }
}

pub fn convergence_threshold(config: &FlowConfig, bg: &BackgroundGeometry) -> f64 {
    config.convergence_threshold.unwrap_or_else(|| {
        let s = bg.sbar();
        if s.abs() < 1e-8 {
            1e-12
        } else {
            1e-10 * s * s * bg.volume()
        }
    })
}

/// Build the initial state from the config and integrate.
pub fn run(config: &FlowConfig) -> Result<Trajectory> {
    config.validate()?;
    let state = config.initial_state()?;
    Ok(integrate(state, config))
}

/// Run independent configurations, possibly concurrently; results are in input order.
pub fn run_batch(configs: &[FlowConfig], exec: ExecPolicy) -> Vec<Result<Trajectory>> {
    exec.map_slice(configs, run)
}

fn classify(e: &Error) -> Termination {
    match e {
        Error::PositivityLoss { .. } => Termination::PositivityLoss,
        _ => Termination::SolverFailure,
    }
}

/// Integrate from `state` until `t_end`, convergence or failure.
pub fn integrate(state: MetricState, config: &FlowConfig) -> Trajectory {
    let threshold = convergence_threshold(config, state.bg());
    let interval = config.sample_interval;
    let t_end = config.t_end;
    let mut traj = Trajectory {
        times: Vec::new(),
        potentials: Vec::new(),
        diagnostics: Vec::new(),
        termination: Termination::ReachedTEnd,
        detail: None,
        steps: 0,
        final_state: state.clone(),
    };
    let mut state = state;
    let mut t = 0.0;
    let mut next_sample = 0usize;
    let mut last_dt = 0.0;
    loop {
        let velocity = match config.rhs.evaluate(&state) {
            Ok(v) => v,
            Err(e) => {
                traj.termination = classify(&e);
                traj.detail = Some(e.to_string());
                break;
            }
        };
        let sample_time = if interval > 0.0 { next_sample as f64 * interval } else { t };
        let at_end = t >= t_end;
        if interval == 0.0 || t >= sample_time || at_end {
            match DiagnosticsRecord::evaluate(&state, t, last_dt, &velocity) {
                Ok(rec) => {
                    let converged = rec.calabi_energy < threshold;
                    traj.times.push(t);
                    traj.potentials.push(state.phi().clone());
                    traj.diagnostics.push(rec);
                    next_sample += 1;
                    if converged && config.stop_on_convergence {
                        traj.termination = Termination::ConvergedToCscK;
                        break;
                    }
                }
                Err(e) => {
                    traj.termination = classify(&e);
                    traj.detail = Some(e.to_string());
                    break;
                }
            }
        }
        if at_end {
            break;
        }
        if traj.steps >= config.max_steps {
            traj.termination = Termination::SolverFailure;
            traj.detail = Some(format!("step limit {} reached", config.max_steps));
            break;
        }
        let mut dt = match config.dt_policy {
            DtPolicy::Fixed(dt) => dt,
            DtPolicy::Adaptive(s) => adaptive_dt(&state, s),
        };
        let mut target = t_end;
        if interval > 0.0 {
            target = target.min(next_sample as f64 * interval);
        }
        // Land exactly on sample times and t_end.
        if t + dt >= target - 1e-9 * dt {
            dt = target - t;
        }
        match step_with(&state, &velocity, dt, config.scheme, config.rhs) {
            Ok(s) => {
                state = s;
                t = if t + dt == target { target } else { t + dt };
                if (target - t).abs() <= 1e-12 * target.abs().max(1.0) {
                    t = target;
                }
                last_dt = dt;
                traj.steps += 1;
            }
            Err(e) => {
                traj.termination = classify(&e);
                traj.detail = Some(e.to_string());
                break;
            }
        }
    }
    traj.final_state = state;
    traj
}
