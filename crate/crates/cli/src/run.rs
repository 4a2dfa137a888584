//! Scenario execution: the flow, the optional analyses and the run artifacts
//! (`diagnostics.csv`, `summary.json`, `snapshots/*.pcf1`).

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use pcflow::diagnostics::{DiagnosticsRecord, CSV_VERSION};
use pcflow::flow::{self, Equation, Termination, Trajectory};
use pcflow::functionals::futaki_invariant_forms;
use pcflow::geometry::{Backend, BackgroundGeometry, Grid, MetricState};
use pcflow::snapshot::Snapshot;
use pcflow::spectral::{self, DecayFit, DENSE_NODE_LIMIT};
use pcflow::{Error, ExecPolicy};
use serde::{Deserialize, Serialize};

use crate::config::Scenario;
use crate::error::{CliError, EXIT_RUNTIME, EXIT_SUCCESS};

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

/// Decay windows end once the fitted energy has fallen by this factor.
pub const DECAY_FLOOR: f64 = 1e-14;

/// Step sizes of the Jacobian probe, three decades.
pub const PROBE_EPSILONS: [f64; 4] = [1e-3, 1e-4, 1e-5, 1e-6];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinalEnergies {
    pub k_energy: f64,
    pub calabi_energy: f64,
    pub dissipation: f64,
    pub i_value: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LichnerowiczSummary {
    pub lambda_min: f64,
    /// Smallest positive eigenvalue of `−Δ_φ`.
    pub laplacian_gap: f64,
    /// Resolution of the eigensolve; coarser than the run when the run
    /// exceeds the dense node limit.
    pub resolution: usize,
    pub max_constraint_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySummary {
    pub mu0: DecayFit,
    pub mu1: DecayFit,
    /// Rate fitted to `μ₀`.
    pub theta: f64,
    /// `2λ₁` at the final state, when the Lichnerowicz analysis ran.
    pub two_lambda1: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrfSummary {
    /// `sup_t ‖g_φ^{PCF} − g_φ^{KRF}‖∞ / ‖g‖∞` over common samples.
    pub sup_distance: f64,
    pub samples: usize,
    pub krf_termination: Termination,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FutakiSummary {
    /// `max_t |F(X)| / (S̄·V)`.
    pub max_relative: f64,
    pub final_paired: f64,
    pub final_by_parts: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSummary {
    pub epsilons: Vec<f64>,
    /// Sup defect modulo constants, relative to `‖L v‖∞`.
    pub defects: Vec<f64>,
    /// `log₁₀` ratios of consecutive defects.
    pub slopes: Vec<f64>,
    /// `Q − S̄v` modulo constants, relative to `‖S̄v‖∞` (sphere only).
    pub q_closed_form_defect: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub schema_version: u32,
    pub csv_version: u32,
    pub name: String,
    pub seed: u64,
    pub backend: Backend,
    pub complex_dim: usize,
    pub resolution: usize,
    pub termination: Termination,
    pub detail: Option<String>,
    pub steps: usize,
    pub samples: usize,
    pub t_final: f64,
    pub final_energies: Option<FinalEnergies>,
    pub lichnerowicz: Option<LichnerowiczSummary>,
    pub decay_fit: Option<DecaySummary>,
    pub krf_compare: Option<KrfSummary>,
    pub futaki: Option<FutakiSummary>,
    pub jacobian_probe: Option<ProbeSummary>,
    pub analysis_errors: BTreeMap<String, String>,
}

impl Summary {
    pub fn exit_code(&self) -> i32 {
        if self.termination.is_success() {
            EXIT_SUCCESS
        } else {
            EXIT_RUNTIME
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub summary: Summary,
    pub out_dir: PathBuf,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.summary.exit_code()
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::io(path, e)
}

/// Run a scenario and write its artifacts under `out_dir`.
pub fn run_scenario(scenario: &Scenario, out_dir: &Path, exec: ExecPolicy) -> Result<RunOutcome, CliError> {
    let snap_dir = out_dir.join("snapshots");
    fs::create_dir_all(&snap_dir).map_err(io_err(&snap_dir))?;
    let config = &scenario.flow;
    config.validate().map_err(|e| CliError::config("flow", e.to_string()))?;
    let grid = &config.background.grid;

    let mut summary = Summary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        csv_version: CSV_VERSION,
        name: scenario.name.clone(),
        seed: config.seed,
        backend: grid.backend,
        complex_dim: grid.complex_dim,
        resolution: grid.resolution,
        termination: Termination::SolverFailure,
        detail: None,
        steps: 0,
        samples: 0,
        t_final: 0.0,
        final_energies: None,
        lichnerowicz: None,
        decay_fit: None,
        krf_compare: None,
        futaki: None,
        jacobian_probe: None,
        analysis_errors: BTreeMap::new(),
    };

    let traj = match config.initial_state() {
        Ok(state) => Some(flow::integrate(state, config)),
        Err(e) => {
            summary.termination = match e {
                Error::PositivityLoss { .. } => Termination::PositivityLoss,
                _ => Termination::SolverFailure,
            };
            summary.detail = Some(format!("initial state: {e}"));
            None
        }
    };

    let rows: &[DiagnosticsRecord] = traj.as_ref().map_or(&[], |t| &t.diagnostics);
    write_csv(&out_dir.join("diagnostics.csv"), rows)?;

    if let Some(traj) = &traj {
        summary.termination = traj.termination;
        summary.detail = traj.detail.clone();
        summary.steps = traj.steps;
        summary.samples = traj.times.len();
        summary.t_final = traj.times.last().copied().unwrap_or(0.0);
        summary.final_energies = traj.diagnostics.last().map(|d| FinalEnergies {
            k_energy: d.k_energy,
            calabi_energy: d.calabi_energy,
            dissipation: d.dissipation,
            i_value: d.i_value,
            margin: d.margin,
        });
        if scenario.output.snapshots {
            write_snapshots(&snap_dir, traj, scenario.output.snapshot_stride)?;
        }
        if traj.termination.is_success() {
            run_analyses(scenario, traj, exec, &mut summary);
        } else {
            summary.analysis_errors.insert("all".into(), "skipped after a failed run".into());
        }
    }

    let path = out_dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&path, text + "\n").map_err(io_err(&path))?;
    Ok(RunOutcome { summary, out_dir: out_dir.to_path_buf() })
}

fn write_csv(path: &Path, rows: &[DiagnosticsRecord]) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{}", DiagnosticsRecord::csv_header()).map_err(io_err(path))?;
    for r in rows {
        writeln!(w, "{}", r.csv_row()).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn write_snapshots(dir: &Path, traj: &Trajectory, stride: usize) -> Result<(), CliError> {
    let last = traj.potentials.len().saturating_sub(1);
    for (k, (phi, &t)) in traj.potentials.iter().zip(&traj.times).enumerate() {
        let keep = k == 0 || k == last || (stride > 0 && k % stride == 0);
        if !keep {
            continue;
        }
        let path = dir.join(format!("{k:06}.pcf1"));
        let file = fs::File::create(&path).map_err(io_err(&path))?;
        let mut w = BufWriter::new(file);
        Snapshot::from_field(phi, t).write_to(&mut w).map_err(io_err(&path))?;
        w.flush().map_err(io_err(&path))?;
    }
    Ok(())
}

fn run_analyses(scenario: &Scenario, traj: &Trajectory, exec: ExecPolicy, summary: &mut Summary) {
    let a = scenario.analyses;
    let mut record = |name: &str, e: Error| {
        summary.analysis_errors.insert(name.into(), e.to_string());
    };
    let mut lichnerowicz = None;
    if a.lichnerowicz {
        match lichnerowicz_analysis(&traj.final_state, exec) {
            Ok(l) => lichnerowicz = Some(l),
            Err(e) => record("lichnerowicz", e),
        }
    }
    let mut decay = None;
    if a.decay_fit {
        match decay_analysis(traj, lichnerowicz.as_ref()) {
            Ok(d) => decay = Some(d),
            Err(e) => record("decay_fit", e),
        }
    }
    let mut krf = None;
    if a.krf_compare {
        match krf_analysis(scenario, traj) {
            Ok(k) => krf = Some(k),
            Err(e) => record("krf_compare", e),
        }
    }
    let mut futaki = None;
    if a.futaki {
        match futaki_analysis(traj) {
            Ok(f) => futaki = Some(f),
            Err(e) => record("futaki", e),
        }
    }
    let mut probe = None;
    if a.jacobian_probe {
        match scenario.flow.initial_state().and_then(|s| jacobian_probe(&s, scenario.flow.seed)) {
            Ok(p) => probe = Some(p),
            Err(e) => record("jacobian_probe", e),
        }
    }
    summary.lichnerowicz = lichnerowicz;
    summary.decay_fit = decay;
    summary.krf_compare = krf;
    summary.futaki = futaki;
    summary.jacobian_probe = probe;
}

/// The state resampled onto the finest grid within the dense node limit;
/// the state itself when it already fits.
pub fn dense_resolution_state(state: &MetricState) -> Result<MetricState, Error> {
    let grid = state.grid();
    if grid.node_count() <= DENSE_NODE_LIMIT {
        return Ok(state.clone());
    }
    let mut spec = grid.spec().clone();
    let axes = match spec.backend {
        Backend::TorusPeriodic => 2 * spec.complex_dim as u32,
        Backend::SphereAxisymmetric => 1,
    };
    let mut res = (DENSE_NODE_LIMIT as f64).powf(1.0 / axes as f64).floor() as usize;
    if spec.backend == Backend::TorusPeriodic {
        res -= res % 2;
    }
    spec.resolution = res;
    let coarse = Grid::new(spec)?;
    let rho = grid.resample(state.bg().potential(), &coarse)?;
    let phi = grid.resample(state.phi(), &coarse)?;
    let bg: Arc<BackgroundGeometry> = BackgroundGeometry::from_potential(&coarse, rho)?;
    MetricState::new(&bg, phi, state.options())
}

pub fn lichnerowicz_analysis(state: &MetricState, exec: ExecPolicy) -> Result<LichnerowiczSummary, Error> {
    let s = dense_resolution_state(state)?;
    let report = spectral::lambda_min(&s, exec)?;
    let laplacian_gap = spectral::laplacian_gap(&s, exec)?;
    Ok(LichnerowiczSummary {
        lambda_min: report.lambda_min,
        laplacian_gap,
        resolution: s.grid().resolution(),
        max_constraint_residual: report.constraint_residuals.iter().fold(0.0, |m, r| m.max(r.abs())),
    })
}

pub fn decay_analysis(traj: &Trajectory, lichnerowicz: Option<&LichnerowiczSummary>) -> Result<DecaySummary, Error> {
    let calabi: Vec<f64> = traj.diagnostics.iter().map(|d| d.calabi_energy).collect();
    let fit = |f: fn(&DiagnosticsRecord) -> f64| {
        let values: Vec<f64> = traj.diagnostics.iter().map(f).collect();
        let window = spectral::decay_window(&traj.times, &calabi, &values, DECAY_FLOOR)
            .ok_or_else(|| Error::Fit("Calabi energy never fell below 10% of its initial value".into()))?;
        spectral::fit_decay(&traj.series(f), window)
    };
    let mu0 = fit(|d| d.mu0)?;
    let mu1 = fit(|d| d.mu1)?;
    Ok(DecaySummary { theta: mu0.theta, mu0, mu1, two_lambda1: lichnerowicz.map(|l| 2.0 * l.laplacian_gap) })
}

pub fn krf_analysis(scenario: &Scenario, pcf: &Trajectory) -> Result<KrfSummary, Error> {
    let mut config = scenario.flow.clone();
    config.rhs.equation = Equation::Krf;
    let krf = flow::run(&config)?;
    if let Some(d) = &krf.detail {
        return Err(Error::Invariant(format!("KRF run stopped: {d}")));
    }
    let reference = pcf.final_state.bg().metric().sup_norm();
    let mut sup: f64 = 0.0;
    let mut samples = 0;
    for ((ta, pa), (tb, pb)) in pcf.times.iter().zip(&pcf.potentials).zip(krf.times.iter().zip(&krf.potentials)) {
        if ta != tb {
            return Err(Error::Invariant(format!("sample times differ: {ta} vs {tb}")));
        }
        let a = pcf.final_state.with_phi(pa.clone())?;
        let b = pcf.final_state.with_phi(pb.clone())?;
        sup = sup.max(a.g_phi().sup_distance(b.g_phi()) / reference);
        samples += 1;
    }
    Ok(KrfSummary { sup_distance: sup, samples, krf_termination: krf.termination })
}

pub fn futaki_analysis(traj: &Trajectory) -> Result<FutakiSummary, Error> {
    let bg = traj.final_state.bg();
    let scale = bg.sbar() * bg.volume();
    let max_relative = traj
        .diagnostics
        .iter()
        .map(|d| d.futaki.map(|f| f.abs() / scale))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::UnsupportedBackend("Futaki invariant needs the sphere backend".into()))?
        .into_iter()
        .fold(0.0, f64::max);
    let (final_paired, final_by_parts) = futaki_invariant_forms(&traj.final_state)?;
    Ok(FutakiSummary { max_relative, final_paired, final_by_parts })
}

/// Forward differences of the velocity along a seeded smooth direction of
/// unit sup norm, compared with the linearized operator modulo constants.
pub fn jacobian_probe(state: &MetricState, seed: u64) -> Result<ProbeSummary, Error> {
    let v = pcflow::random::smooth_field(state.grid(), 2, seed, 7);
    let v = v.scale(1.0 / v.sup_norm());
    let base = flow::pcf_rhs(state)?;
    let lin = spectral::linearized_apply(state, &v)?;
    let defects = PROBE_EPSILONS
        .iter()
        .map(|&eps| {
            let moved = state.with_phi(state.phi().axpy(eps, &v))?;
            let fd = flow::pcf_rhs(&moved)?.sub(&base).scale(1.0 / eps);
            Ok(fd.deviation_from_constant(&lin) / lin.sup_norm())
        })
        .collect::<Result<Vec<f64>, Error>>()?;
    let slopes = defects.windows(2).map(|w| (w[0] / w[1]).log10()).collect();
    let q_closed_form_defect = match state.grid().backend() {
        Backend::SphereAxisymmetric => {
            let q = spectral::linearized_q(state, &v)?;
            let closed = v.scale(state.bg().sbar());
            Some(q.deviation_from_constant(&closed) / closed.sup_norm())
        }
        Backend::TorusPeriodic => None,
    };
    Ok(ProbeSummary { epsilons: PROBE_EPSILONS.to_vec(), defects, slopes, q_closed_form_defect })
}
