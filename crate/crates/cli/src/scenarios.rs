//! The bundled scenario catalog.

use crate::config::{parse_config, Scenario};
use crate::error::CliError;

#[derive(Clone, Copy, Debug)]
pub struct Bundled {
    pub name: &'static str,
    /// The acceptance criterion the scenario exercises.
    pub criterion: &'static str,
    pub config: &'static str,
}

pub const CATALOG: [Bundled; 6] = [
    Bundled {
        name: "torus-fixed-point",
        criterion: "AC12 determinism; the flat metric is a fixed point (Calabi energy <= 1e-20 in every row)",
        config: include_str!("../scenarios/torus-fixed-point.toml"),
    },
    Bundled {
        name: "torus-converge",
        criterion: "AC5 convergence: Calabi energy below 1e-10 before t_end = 2 and the terminal metric flat to 1e-5; \
                    AC6 decay rate of mu0 and mu1 within 10% of 2*lambda1",
        config: include_str!("../scenarios/torus-converge.toml"),
    },
    Bundled {
        name: "torus-decay",
        criterion: "AC6 exponential decay of mu0 and mu1; AC7 the mean-normalized flow conserves I",
        config: include_str!("../scenarios/torus-decay.toml"),
    },
    Bundled {
        name: "sphere-krf-compare",
        criterion: "AC4 canonical-class equivalence: PCF and KRF metrics agree to 1e-6 relative over t in [0, 1]",
        config: include_str!("../scenarios/sphere-krf-compare.toml"),
    },
    Bundled {
        name: "sphere-futaki",
        criterion: "AC10 Futaki invariant: |F(X)| <= 1e-8 * Sbar * V along the run, both integral forms agreeing",
        config: include_str!("../scenarios/sphere-futaki.toml"),
    },
    Bundled {
        name: "linearized-probe",
        criterion: "AC9 linearization: first-order finite-difference defects over three decades, Q = Sbar*v + const",
        config: include_str!("../scenarios/linearized-probe.toml"),
    },
];

pub fn list_scenarios() -> Vec<&'static str> {
    CATALOG.iter().map(|b| b.name).collect()
}

pub fn find(name: &str) -> Result<&'static Bundled, CliError> {
    CATALOG.iter().find(|b| b.name == name).ok_or_else(|| CliError::UnknownScenario(name.to_string()))
}

pub fn load(name: &str) -> Result<Scenario, CliError> {
    parse_config(find(name)?.config)
}

/// Description, exercised criterion and the configuration echo.
pub fn describe(name: &str) -> Result<String, CliError> {
    let b = find(name)?;
    let s = parse_config(b.config)?;
    Ok(format!(
        "{}\n  {}\n  exercises: {}\n\n# effective configuration\n{}",
        b.name,
        s.description,
        b.criterion,
        s.to_toml()
    ))
}
