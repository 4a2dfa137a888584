//! One time sample of every monitored quantity, and its CSV form.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::functionals;
use crate::geometry::{Backend, Measure, MetricState, ScalarField};
use crate::Result;

/// CSV column order. Changing it requires bumping [`CSV_VERSION`].
pub const COLUMNS: [&str; 21] = [
    "t",
    "dt",
    "volume",
    "sbar_check",
    "k_energy",
    "dissipation",
    "calabi_energy",
    "mu0",
    "mu1",
    "mu2",
    "i_value",
    "sup_h",
    "inf_h",
    "osc_phi",
    "max_n_plus_lap_phi",
    "ricci_min",
    "ricci_max",
    "margin",
    "futaki",
    "p_iterations",
    "f_iterations",
];

pub const CSV_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub dt: f64,
    pub volume: f64,
    pub sbar_check: f64,
    pub k_energy: f64,
    pub dissipation: f64,
    pub calabi_energy: f64,
    pub mu0: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub i_value: f64,
    pub sup_h: f64,
    pub inf_h: f64,
    pub osc_phi: f64,
    pub max_n_plus_lap_phi: f64,
    pub ricci_min: f64,
    pub ricci_max: f64,
    pub margin: f64,
    pub futaki: Option<f64>,
    pub p_iterations: usize,
    pub f_iterations: usize,
}

impl DiagnosticsRecord {
    /// Evaluate all diagnostics of `state`; `velocity` is the current flow
    /// right-hand side, the field the `μ_l` energies measure.
    pub fn evaluate(state: &MetricState, t: f64, dt: f64, velocity: &ScalarField) -> Result<Self> {
        let bg = state.bg();
        let v = bg.volume();
        let one = ScalarField::constant(state.grid(), 1.0);
        let s = state.scalar_curvature();
        let (_, p_report) = state.pseudo_term_with_report()?;
        let (_, f_report) = state.futaki_potential_with_report()?;
        let (ricci_min, ricci_max) = state.ricci_bounds();
        let futaki = match state.grid().backend() {
            Backend::SphereAxisymmetric => Some(functionals::futaki_invariant(state)?),
            Backend::TorusPeriodic => None,
        };
        Ok(Self {
            t,
            dt,
            volume: state.integrate(&one, Measure::EvolvedVolume),
            sbar_check: state.integrate(&s, Measure::EvolvedVolume) / v,
            k_energy: functionals::k_energy(state)?,
            dissipation: functionals::k_energy_dissipation(state)?,
            calabi_energy: functionals::calabi_energy(state),
            mu0: functionals::mu(state, velocity, 0)?,
            mu1: functionals::mu(state, velocity, 1)?,
            mu2: functionals::mu(state, velocity, 2)?,
            i_value: functionals::i_functional(bg, state.phi())?,
            sup_h: state.h().max(),
            inf_h: state.h().min(),
            osc_phi: state.phi().oscillation(),
            max_n_plus_lap_phi: state.max_n_plus_lap_phi(),
            ricci_min,
            ricci_max,
            margin: state.margin(),
            futaki,
            p_iterations: p_report.iterations,
            f_iterations: f_report.iterations,
        })
    }

    pub fn csv_header() -> String {
        COLUMNS.join(",")
    }

    /// One CSV row; floats carry 17 significant digits, an absent Futaki
    /// value is an empty cell.
    pub fn csv_row(&self) -> String {
        let mut s = String::new();
        let floats = [
            self.t,
            self.dt,
            self.volume,
            self.sbar_check,
            self.k_energy,
            self.dissipation,
            self.calabi_energy,
            self.mu0,
            self.mu1,
            self.mu2,
            self.i_value,
            self.sup_h,
            self.inf_h,
            self.osc_phi,
            self.max_n_plus_lap_phi,
            self.ricci_min,
            self.ricci_max,
            self.margin,
        ];
        for x in floats {
            let _ = write!(s, "{x:.16e},");
        }
        if let Some(f) = self.futaki {
            let _ = write!(s, "{f:.16e}");
        }
        let _ = write!(s, ",{},{}", self.p_iterations, self.f_iterations);
        s
    }

    /// Parse a row produced by [`DiagnosticsRecord::csv_row`].
    pub fn parse_csv_row(line: &str) -> Option<Self> {
        let cells: Vec<&str> = line.trim_end().split(',').collect();
        if cells.len() != COLUMNS.len() {
            return None;
        }
        let f: Vec<f64> = cells[..18].iter().map(|c| c.parse().ok()).collect::<Option<_>>()?;
        let futaki = if cells[18].is_empty() { None } else { Some(cells[18].parse().ok()?) };
        Some(Self {
            t: f[0],
            dt: f[1],
            volume: f[2],
            sbar_check: f[3],
            k_energy: f[4],
            dissipation: f[5],
            calabi_energy: f[6],
            mu0: f[7],
            mu1: f[8],
            mu2: f[9],
            i_value: f[10],
            sup_h: f[11],
            inf_h: f[12],
            osc_phi: f[13],
            max_n_plus_lap_phi: f[14],
            ricci_min: f[15],
            ricci_max: f[16],
            margin: f[17],
            futaki,
            p_iterations: cells[19].parse().ok()?,
            f_iterations: cells[20].parse().ok()?,
        })
    }

    /// `true` when every float field is finite.
    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.dt,
            self.volume,
            self.sbar_check,
            self.k_energy,
            self.dissipation,
            self.calabi_energy,
            self.mu0,
            self.mu1,
            self.mu2,
            self.i_value,
            self.sup_h,
            self.inf_h,
            self.osc_phi,
            self.max_n_plus_lap_phi,
            self.ricci_min,
            self.ricci_max,
            self.margin,
            self.futaki.unwrap_or(0.0),
        ]
        .iter()
        .all(|x| x.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_row_round_trips() {
        let r = DiagnosticsRecord {
            t: 0.1,
            dt: 1e-5,
            volume: 1.0,
            sbar_check: -1e-17,
            k_energy: 3.0e-4,
            dissipation: -2.5e-3,
            calabi_energy: 1.0 / 3.0,
            mu0: 1.0,
            mu1: 2.0,
            mu2: 3.0,
            i_value: 0.0,
            sup_h: 0.5,
            inf_h: -0.5,
            osc_phi: 0.01,
            max_n_plus_lap_phi: 1.2,
            ricci_min: -3.0,
            ricci_max: 4.0,
            margin: 0.5,
            futaki: None,
            p_iterations: 1,
            f_iterations: 12,
        };
        let row = r.csv_row();
        assert_eq!(row.split(',').count(), COLUMNS.len());
        assert_eq!(DiagnosticsRecord::parse_csv_row(&row), Some(r.clone()));
        let with = DiagnosticsRecord { futaki: Some(1e-12), ..r };
        assert_eq!(DiagnosticsRecord::parse_csv_row(&with.csv_row()), Some(with));
    }
}
