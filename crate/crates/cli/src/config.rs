//! Scenario configuration: a TOML document with one flat table per section.
//!
//! ```toml
//! name = "torus-converge"
//! seed = 7
//!
//! [grid]
//! backend = "torus"        # or "sphere"
//! complex_dim = 1          # torus only: 1 or 2
//! resolution = 64
//!
//! [background]             # also [initial]; omitted means the zero potential
//! kind = "random"          # "zero", "random", "fourier" or "legendre"
//! max_mode = 3
//! target_margin = 0.5
//!
//! [flow]
//! t_end = 2.0
//! scheme = "rk4"           # or "euler"
//! dt_policy = "adaptive"   # with `safety`; or "fixed" with `dt`
//! safety = 0.4
//! equation = "pcf"         # or "krf"
//! normalization = "c-zero" # or "mean-modified"
//! sample_interval = 0.01
//!
//! [analyses]
//! lichnerowicz = true
//! decay_fit = true
//!
//! [output]
//! dir = "runs/torus-converge"
//! snapshot_stride = 10
//! ```
//!
//! Unknown keys are rejected with their dotted path.

use std::path::PathBuf;

use pcflow::flow::{DtPolicy, Equation, FlowConfig, Normalization, RhsKind, Scheme};
use pcflow::geometry::{Backend, BackgroundSpec, FourierTerm, GridSpec, PotentialSpec};
use toml::{Table, Value};

use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Analyses {
    /// `λ_min` and the Laplacian gap at the final state.
    pub lichnerowicz: bool,
    /// Exponential decay rate of `μ₀` and `μ₁`.
    pub decay_fit: bool,
    /// Sup-distance between the PCF and KRF metrics from the same data.
    pub krf_compare: bool,
    /// Futaki invariant of the axial field along the run.
    pub futaki: bool,
    /// Finite-difference check of the linearized operator at the initial state.
    pub jacobian_probe: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputSpec {
    /// Overridden by `--out`; defaults to `runs/<name>`.
    pub dir: Option<PathBuf>,
    pub snapshots: bool,
    /// Snapshot every `stride`-th sample; `0` keeps the first and last only.
    pub snapshot_stride: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: None, snapshots: true, snapshot_stride: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub flow: FlowConfig,
    pub analyses: Analyses,
    pub output: OutputSpec,
}

impl Scenario {
    pub fn out_dir(&self) -> PathBuf {
        self.output.dir.clone().unwrap_or_else(|| PathBuf::from("runs").join(&self.name))
    }

    /// Serialize in the accepted schema, writing every field explicitly.
    pub fn to_toml(&self) -> String {
        let f = &self.flow;
        let mut root = Table::new();
        root.insert("name".into(), self.name.clone().into());
        if !self.description.is_empty() {
            root.insert("description".into(), self.description.clone().into());
        }
        root.insert("seed".into(), seed_value(f.seed));

        let g = &f.background.grid;
        let mut grid = Table::new();
        grid.insert("backend".into(), backend_name(g.backend).into());
        grid.insert("complex_dim".into(), int(g.complex_dim));
        grid.insert("resolution".into(), int(g.resolution));
        if g.backend == Backend::TorusPeriodic && g.periods.iter().any(|&l| l != 1.0) {
            grid.insert("periods".into(), Value::Array(g.periods.iter().map(|&l| l.into()).collect()));
        }
        root.insert("grid".into(), grid.into());
        root.insert("background".into(), potential_table(&f.background.potential).into());
        root.insert("initial".into(), potential_table(&f.initial).into());

        let mut flow = Table::new();
        flow.insert("t_end".into(), f.t_end.into());
        flow.insert("scheme".into(), scheme_name(f.scheme).into());
        match f.dt_policy {
            DtPolicy::Adaptive(s) => {
                flow.insert("dt_policy".into(), "adaptive".into());
                flow.insert("safety".into(), s.into());
            }
            DtPolicy::Fixed(dt) => {
                flow.insert("dt_policy".into(), "fixed".into());
                flow.insert("dt".into(), dt.into());
            }
        }
        flow.insert("equation".into(), equation_name(f.rhs.equation).into());
        flow.insert("normalization".into(), normalization_name(f.rhs.normalization).into());
        flow.insert("sample_interval".into(), f.sample_interval.into());
        flow.insert("eps_pos".into(), f.eps_pos.into());
        flow.insert("solver_tol".into(), f.solver_tol.into());
        if let Some(c) = f.convergence_threshold {
            flow.insert("convergence_threshold".into(), c.into());
        }
        flow.insert("stop_on_convergence".into(), f.stop_on_convergence.into());
        flow.insert("max_steps".into(), int(f.max_steps));
        root.insert("flow".into(), flow.into());

        let a = &self.analyses;
        let mut analyses = Table::new();
        for (k, v) in [
            ("lichnerowicz", a.lichnerowicz),
            ("decay_fit", a.decay_fit),
            ("krf_compare", a.krf_compare),
            ("futaki", a.futaki),
            ("jacobian_probe", a.jacobian_probe),
        ] {
            analyses.insert(k.into(), v.into());
        }
        root.insert("analyses".into(), analyses.into());

        let mut output = Table::new();
        if let Some(d) = &self.output.dir {
            output.insert("dir".into(), d.to_string_lossy().into_owned().into());
        }
        output.insert("snapshots".into(), self.output.snapshots.into());
        output.insert("snapshot_stride".into(), int(self.output.snapshot_stride));
        root.insert("output".into(), output.into());

        toml::to_string(&root).expect("tables of plain values always serialize")
    }
}

fn int(x: usize) -> Value {
    Value::Integer(x as i64)
}

fn seed_value(seed: u64) -> Value {
    match i64::try_from(seed) {
        Ok(s) => Value::Integer(s),
        Err(_) => Value::String(seed.to_string()),
    }
}

fn backend_name(b: Backend) -> &'static str {
    match b {
        Backend::TorusPeriodic => "torus",
        Backend::SphereAxisymmetric => "sphere",
    }
}

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::Euler => "euler",
        Scheme::Rk4 => "rk4",
    }
}

fn equation_name(e: Equation) -> &'static str {
    match e {
        Equation::Pcf => "pcf",
        Equation::Krf => "krf",
    }
}

fn normalization_name(n: Normalization) -> &'static str {
    match n {
        Normalization::CZero => "c-zero",
        Normalization::MeanModified => "mean-modified",
    }
}

fn potential_table(p: &PotentialSpec) -> Table {
    let mut t = Table::new();
    match p {
        PotentialSpec::Zero => {
            t.insert("kind".into(), "zero".into());
        }
        PotentialSpec::Random { max_mode, target_margin, stream } => {
            t.insert("kind".into(), "random".into());
            t.insert("max_mode".into(), int(*max_mode));
            t.insert("target_margin".into(), (*target_margin).into());
            t.insert("stream".into(), seed_value(*stream));
        }
        PotentialSpec::Fourier { terms } => {
            t.insert("kind".into(), "fourier".into());
            let terms = terms
                .iter()
                .map(|term| {
                    let mut e = Table::new();
                    e.insert("mode".into(), Value::Array(term.mode.iter().map(|&m| Value::Integer(m)).collect()));
                    e.insert("cos".into(), term.cos.into());
                    e.insert("sin".into(), term.sin.into());
                    Value::Table(e)
                })
                .collect();
            t.insert("terms".into(), Value::Array(terms));
        }
        PotentialSpec::Legendre { coefficients } => {
            t.insert("kind".into(), "legendre".into());
            t.insert("coefficients".into(), Value::Array(coefficients.iter().map(|&c| c.into()).collect()));
        }
    }
    t
}

/// A table together with its dotted path, for error reporting.
struct Section<'a> {
    path: String,
    table: &'a Table,
}

impl<'a> Section<'a> {
    fn key(&self, k: &str) -> String {
        if self.path.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.path)
        }
    }

    fn sub(&self, k: &str) -> Result<Option<Section<'a>>> {
        match self.table.get(k) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(Section { path: self.key(k), table: t })),
            Some(_) => Err(CliError::config(self.key(k), "expected a table")),
        }
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for k in self.table.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(CliError::config(
                    self.key(k),
                    format!("unknown key (expected one of: {})", allowed.join(", ")),
                ));
            }
        }
        Ok(())
    }

    fn str(&self, k: &str) -> Result<Option<&'a str>> {
        match self.table.get(k) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(CliError::config(self.key(k), "expected a string")),
        }
    }

    fn f64(&self, k: &str) -> Result<Option<f64>> {
        match self.table.get(k) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(CliError::config(self.key(k), "expected a number")),
        }
    }

    fn u64(&self, k: &str) -> Result<Option<u64>> {
        match self.table.get(k) {
            None => Ok(None),
            Some(Value::Integer(i)) => {
                u64::try_from(*i).map(Some).map_err(|_| CliError::config(self.key(k), "expected a non-negative integer"))
            }
            Some(Value::String(s)) => {
                s.parse().map(Some).map_err(|_| CliError::config(self.key(k), "expected a non-negative integer"))
            }
            Some(_) => Err(CliError::config(self.key(k), "expected a non-negative integer")),
        }
    }

    fn usize(&self, k: &str) -> Result<Option<usize>> {
        self.u64(k)?
            .map(|v| usize::try_from(v).map_err(|_| CliError::config(self.key(k), "integer too large")))
            .transpose()
    }

    fn bool(&self, k: &str) -> Result<Option<bool>> {
        match self.table.get(k) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(_) => Err(CliError::config(self.key(k), "expected true or false")),
        }
    }

    fn f64_array(&self, k: &str) -> Result<Option<Vec<f64>>> {
        match self.table.get(k) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .enumerate()
                .map(|(i, v)| match v {
                    Value::Float(x) => Ok(*x),
                    Value::Integer(n) => Ok(*n as f64),
                    _ => Err(CliError::config(format!("{}[{i}]", self.key(k)), "expected a number")),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => Err(CliError::config(self.key(k), "expected an array of numbers")),
        }
    }

    fn required<T>(&self, k: &str, v: Option<T>) -> Result<T> {
        v.ok_or_else(|| CliError::config(self.key(k), "missing required key"))
    }

    fn choice<T: Copy>(&self, k: &str, options: &[(&str, T)]) -> Result<Option<T>> {
        let Some(s) = self.str(k)? else { return Ok(None) };
        options.iter().find(|(name, _)| *name == s).map(|(_, v)| Some(*v)).ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            CliError::config(self.key(k), format!("`{s}` is not one of: {}", names.join(", ")))
        })
    }
}

/// Parse and validate a scenario.
pub fn parse_config(text: &str) -> Result<Scenario> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| CliError::config("", e.message().to_string()))?;
    let root = Section { path: String::new(), table: &table };
    root.check_keys(&["name", "description", "seed", "grid", "background", "initial", "flow", "analyses", "output"])?;

    let name = root.required("name", root.str("name")?)?.trim().to_string();
    if name.is_empty() {
        return Err(CliError::config("name", "must be nonempty"));
    }
    let description = root.str("description")?.unwrap_or_default().to_string();
    let seed = root.u64("seed")?.unwrap_or(0);

    let grid_section = root.sub("grid")?.ok_or_else(|| CliError::config("grid", "missing required section"))?;
    let grid = parse_grid(&grid_section)?;
    let background = parse_potential(root.sub("background")?, &grid, "background")?;
    let initial = parse_potential(root.sub("initial")?, &grid, "initial")?;

    let flow_section = root.sub("flow")?.ok_or_else(|| CliError::config("flow", "missing required section"))?;
    let mut flow = FlowConfig::new(BackgroundSpec { grid, potential: background }, initial, 0.0);
    flow.seed = seed;
    parse_flow(&flow_section, &mut flow)?;

    let analyses = match root.sub("analyses")? {
        Some(s) => parse_analyses(&s, &flow)?,
        None => Analyses::default(),
    };
    let output = match root.sub("output")? {
        Some(s) => parse_output(&s)?,
        None => OutputSpec::default(),
    };
    Ok(Scenario { name, description, flow, analyses, output })
}

fn parse_grid(s: &Section) -> Result<GridSpec> {
    s.check_keys(&["backend", "complex_dim", "resolution", "periods"])?;
    let backend = s.required(
        "backend",
        s.choice("backend", &[("torus", Backend::TorusPeriodic), ("sphere", Backend::SphereAxisymmetric)])?,
    )?;
    let resolution = s.required("resolution", s.usize("resolution")?)?;
    let complex_dim = s.usize("complex_dim")?.unwrap_or(1);
    let mut spec = match backend {
        Backend::TorusPeriodic => {
            if !(1..=2).contains(&complex_dim) {
                return Err(CliError::config(s.key("complex_dim"), "the torus supports complex dimension 1 or 2"));
            }
            if resolution < 8 || resolution % 2 != 0 {
                return Err(CliError::config(
                    s.key("resolution"),
                    format!("torus resolution must be even and at least 8, got {resolution}"),
                ));
            }
            GridSpec::torus(complex_dim, resolution)
        }
        Backend::SphereAxisymmetric => {
            if complex_dim != 1 {
                return Err(CliError::config(s.key("complex_dim"), "the sphere has complex dimension 1"));
            }
            if resolution < 8 {
                return Err(CliError::config(
                    s.key("resolution"),
                    format!("sphere resolution must be at least 8, got {resolution}"),
                ));
            }
            if s.table.contains_key("periods") {
                return Err(CliError::config(s.key("periods"), "periods apply to the torus only"));
            }
            GridSpec::sphere(resolution)
        }
    };
    if let Some(periods) = s.f64_array("periods")? {
        if periods.len() != 2 * complex_dim || periods.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return Err(CliError::config(
                s.key("periods"),
                format!("expected {} positive lattice periods", 2 * complex_dim),
            ));
        }
        spec.periods = periods;
    }
    spec.validate().map_err(|e| CliError::config(s.path.clone(), e.to_string()))?;
    Ok(spec)
}

fn parse_potential(section: Option<Section>, grid: &GridSpec, name: &str) -> Result<PotentialSpec> {
    let Some(s) = section else { return Ok(PotentialSpec::Zero) };
    let kind = s.str("kind")?.unwrap_or("zero");
    let spec = match kind {
        "zero" => {
            s.check_keys(&["kind"])?;
            PotentialSpec::Zero
        }
        "random" => {
            s.check_keys(&["kind", "max_mode", "target_margin", "stream"])?;
            let max_mode = s.required("max_mode", s.usize("max_mode")?)?;
            let target_margin = s.required("target_margin", s.f64("target_margin")?)?;
            if max_mode == 0 || 2 * max_mode >= grid.resolution {
                return Err(CliError::config(
                    s.key("max_mode"),
                    format!("must lie in 1..{} for resolution {}", grid.resolution / 2, grid.resolution),
                ));
            }
            if !(target_margin > 0.0 && target_margin < 1.0) {
                return Err(CliError::config(s.key("target_margin"), "must lie in (0, 1)"));
            }
            PotentialSpec::Random { max_mode, target_margin, stream: s.u64("stream")?.unwrap_or(0) }
        }
        "fourier" => {
            s.check_keys(&["kind", "terms"])?;
            if grid.backend != Backend::TorusPeriodic {
                return Err(CliError::config(s.key("kind"), "Fourier potentials need the torus backend"));
            }
            let axes = grid.periods.len();
            let terms = match s.table.get("terms") {
                Some(Value::Array(a)) => a,
                Some(_) => return Err(CliError::config(s.key("terms"), "expected an array of tables")),
                None => return Err(CliError::config(s.key("terms"), "missing required key")),
            };
            let mut out = Vec::with_capacity(terms.len());
            for (i, t) in terms.iter().enumerate() {
                let path = format!("{}[{i}]", s.key("terms"));
                let Value::Table(table) = t else {
                    return Err(CliError::config(path, "expected a table"));
                };
                let e = Section { path, table };
                e.check_keys(&["mode", "cos", "sin"])?;
                let mode = match e.table.get("mode") {
                    Some(Value::Array(m)) if m.len() == axes && m.iter().all(|v| v.is_integer()) => {
                        m.iter().filter_map(Value::as_integer).collect()
                    }
                    _ => return Err(CliError::config(e.key("mode"), format!("expected {axes} integers"))),
                };
                let cos = e.f64("cos")?.unwrap_or(0.0);
                let sin = e.f64("sin")?.unwrap_or(0.0);
                if !(cos.is_finite() && sin.is_finite()) {
                    return Err(CliError::config(e.path.clone(), "non-finite coefficient"));
                }
                out.push(FourierTerm { mode, cos, sin });
            }
            PotentialSpec::Fourier { terms: out }
        }
        "legendre" => {
            s.check_keys(&["kind", "coefficients"])?;
            if grid.backend != Backend::SphereAxisymmetric {
                return Err(CliError::config(s.key("kind"), "Legendre potentials need the sphere backend"));
            }
            let coefficients = s.required("coefficients", s.f64_array("coefficients")?)?;
            if coefficients.iter().any(|c| !c.is_finite()) {
                return Err(CliError::config(s.key("coefficients"), "non-finite coefficient"));
            }
            PotentialSpec::Legendre { coefficients }
        }
        other => {
            return Err(CliError::config(
                format!("{name}.kind"),
                format!("`{other}` is not one of: zero, random, fourier, legendre"),
            ))
        }
    };
    Ok(spec)
}

fn parse_flow(s: &Section, flow: &mut FlowConfig) -> Result<()> {
    s.check_keys(&[
        "t_end",
        "scheme",
        "dt_policy",
        "safety",
        "dt",
        "equation",
        "normalization",
        "sample_interval",
        "eps_pos",
        "solver_tol",
        "convergence_threshold",
        "stop_on_convergence",
        "max_steps",
    ])?;
    let positive = |k: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(CliError::config(s.key(k), format!("must be positive and finite, got {v}")))
        }
    };
    flow.t_end = positive("t_end", s.required("t_end", s.f64("t_end")?)?)?;
    if let Some(scheme) = s.choice("scheme", &[("rk4", Scheme::Rk4), ("euler", Scheme::Euler)])? {
        flow.scheme = scheme;
    }
    let adaptive = s.choice("dt_policy", &[("adaptive", true), ("fixed", false)])?.unwrap_or(true);
    flow.dt_policy = if adaptive {
        if s.table.contains_key("dt") {
            return Err(CliError::config(s.key("dt"), "only valid with dt_policy = \"fixed\""));
        }
        let safety = s.f64("safety")?.unwrap_or(0.4);
        if !(safety > 0.0 && safety <= 1.0) {
            return Err(CliError::config(s.key("safety"), format!("must lie in (0, 1], got {safety}")));
        }
        DtPolicy::Adaptive(safety)
    } else {
        if s.table.contains_key("safety") {
            return Err(CliError::config(s.key("safety"), "only valid with dt_policy = \"adaptive\""));
        }
        DtPolicy::Fixed(positive("dt", s.required("dt", s.f64("dt")?)?)?)
    };
    let equation = s.choice("equation", &[("pcf", Equation::Pcf), ("krf", Equation::Krf)])?.unwrap_or_default();
    let normalization = s
        .choice("normalization", &[("c-zero", Normalization::CZero), ("mean-modified", Normalization::MeanModified)])?
        .unwrap_or_default();
    flow.rhs = RhsKind { equation, normalization };
    if let Some(v) = s.f64("sample_interval")? {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(CliError::config(s.key("sample_interval"), "must be non-negative"));
        }
        flow.sample_interval = v;
    }
    if let Some(v) = s.f64("eps_pos")? {
        if !(0.0..1.0).contains(&v) {
            return Err(CliError::config(s.key("eps_pos"), "must lie in [0, 1)"));
        }
        flow.eps_pos = v;
    }
    if let Some(v) = s.f64("solver_tol")? {
        flow.solver_tol = positive("solver_tol", v)?;
    }
    if let Some(v) = s.f64("convergence_threshold")? {
        flow.convergence_threshold = Some(positive("convergence_threshold", v)?);
    }
    if let Some(v) = s.bool("stop_on_convergence")? {
        flow.stop_on_convergence = v;
    }
    if let Some(v) = s.usize("max_steps")? {
        if v == 0 {
            return Err(CliError::config(s.key("max_steps"), "must be positive"));
        }
        flow.max_steps = v;
    }
    flow.validate().map_err(|e| CliError::config(s.path.clone(), e.to_string()))
}

fn parse_analyses(s: &Section, flow: &FlowConfig) -> Result<Analyses> {
    s.check_keys(&["lichnerowicz", "decay_fit", "krf_compare", "futaki", "jacobian_probe"])?;
    let a = Analyses {
        lichnerowicz: s.bool("lichnerowicz")?.unwrap_or(false),
        decay_fit: s.bool("decay_fit")?.unwrap_or(false),
        krf_compare: s.bool("krf_compare")?.unwrap_or(false),
        futaki: s.bool("futaki")?.unwrap_or(false),
        jacobian_probe: s.bool("jacobian_probe")?.unwrap_or(false),
    };
    let grid = &flow.background.grid;
    if a.lichnerowicz && grid.complex_dim != 1 {
        return Err(CliError::config(s.key("lichnerowicz"), "eigensolves are implemented for complex dimension 1"));
    }
    if a.futaki && grid.backend != Backend::SphereAxisymmetric {
        return Err(CliError::config(s.key("futaki"), "the Futaki analysis needs the sphere backend"));
    }
    if a.krf_compare && flow.rhs.equation != Equation::Pcf {
        return Err(CliError::config(s.key("krf_compare"), "the compared run must use equation = \"pcf\""));
    }
    if a.jacobian_probe && flow.rhs.equation != Equation::Pcf {
        return Err(CliError::config(s.key("jacobian_probe"), "the probe linearizes equation = \"pcf\""));
    }
    Ok(a)
}

fn parse_output(s: &Section) -> Result<OutputSpec> {
    s.check_keys(&["dir", "snapshots", "snapshot_stride"])?;
    let dir = match s.str("dir")? {
        Some("") => return Err(CliError::config(s.key("dir"), "must be nonempty")),
        Some(d) => Some(PathBuf::from(d)),
        None => None,
    };
    Ok(OutputSpec {
        dir,
        snapshots: s.bool("snapshots")?.unwrap_or(true),
        snapshot_stride: s.usize("snapshot_stride")?.unwrap_or(0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "name = \"m\"\n[grid]\nbackend = \"torus\"\nresolution = 32\n[flow]\nt_end = 1.0\n";

    fn key_of(text: &str) -> String {
        match parse_config(text) {
            Err(CliError::Config { key, .. }) => key,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let s = parse_config(MINIMAL).unwrap();
        assert_eq!(s.flow.scheme, Scheme::Rk4);
        assert_eq!(s.flow.dt_policy, DtPolicy::Adaptive(0.4));
        assert_eq!(s.flow.rhs, RhsKind::pcf());
        assert_eq!(s.flow.rhs.normalization, Normalization::CZero);
        assert_eq!(s.flow.initial, PotentialSpec::Zero);
        assert_eq!(s.flow.background.grid, GridSpec::torus(1, 32));
        assert_eq!(s.analyses, Analyses::default());
        assert_eq!(s.out_dir(), PathBuf::from("runs/m"));
    }

    #[test]
    fn validation_errors_name_the_key() {
        assert_eq!(key_of(&MINIMAL.replace("32", "33")), "grid.resolution");
        assert_eq!(key_of(&MINIMAL.replace("resolution", "resolutoin")), "grid.resolutoin");
        assert_eq!(key_of(&format!("{MINIMAL}bogus = 1\n")), "flow.bogus");
        assert_eq!(key_of(&MINIMAL.replace("t_end = 1.0", "t_end = -1.0")), "flow.t_end");
        assert_eq!(key_of(&MINIMAL.replace("\"m\"", "\" \"")), "name");
        assert_eq!(key_of(&format!("{MINIMAL}dt = 0.1\n")), "flow.dt");
        assert_eq!(key_of(&format!("{MINIMAL}[analyses]\nfutaki = true\n")), "analyses.futaki");
        assert_eq!(key_of(&format!("{MINIMAL}[initial]\nkind = \"legendre\"\ncoefficients = [0.0]\n")), "initial.kind");
        assert_eq!(
            key_of(&format!("{MINIMAL}[initial]\nkind = \"fourier\"\nterms = [{{ mode = [1, 0], cso = 0.1 }}]\n")),
            "initial.terms[0].cso"
        );
        assert_eq!(
            key_of(&format!("{MINIMAL}[background]\nkind = \"random\"\nmax_mode = 16\ntarget_margin = 0.5\n")),
            "background.max_mode"
        );
        assert_eq!(key_of("name = \"m\"\n[flow]\nt_end = 1.0\n"), "grid");
        assert_eq!(key_of("name = "), "");
    }

    #[test]
    fn explicit_fields_round_trip() {
        let text = format!(
            "{MINIMAL}seed = 3\n[initial]\nkind = \"fourier\"\nterms = [{{ mode = [1, -2], cos = 0.01, sin = 0.002 }}]\n"
        )
        .replace("t_end = 1.0\nseed = 3", "t_end = 1.0");
        let mut s = parse_config(&text).unwrap();
        s.flow.seed = u64::MAX;
        s.flow.dt_policy = DtPolicy::Fixed(1.0 / 3.0);
        s.flow.convergence_threshold = Some(1e-13);
        s.output.dir = Some(PathBuf::from("somewhere/else"));
        s.analyses.decay_fit = true;
        assert_eq!(parse_config(&s.to_toml()).unwrap(), s);
    }
}
