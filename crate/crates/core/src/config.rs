//! TOML run configuration with `--section.key=value` overrides.
//!
//! Every section has defaults reproducing the capacity-drop reference
//! setup, so an empty file is a valid configuration. Validation builds every
//! object the commands need and reports failures against the line of the
//! offending key when the key appears in the file.

use serde::{Deserialize, Serialize};

use crate::constraint::{Branch, PiecewiseConstraint, WeightKernel};
use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::fvm::{Capacity, ExogenousCapacity, Grid, Scheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxKind {
    #[default]
    Quadratic,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluxSection {
    pub kind: FluxKind,
    pub v_max: f64,
    pub max_density: f64,
    pub densities: Vec<f64>,
    pub flows: Vec<f64>,
}

impl Default for FluxSection {
    fn default() -> Self {
        FluxSection {
            kind: FluxKind::Quadratic,
            v_max: 1.0,
            max_density: 1.0,
            densities: Vec::new(),
            flows: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstraintSection {
    pub jumps: Vec<f64>,
    pub levels: Vec<f64>,
}

impl Default for ConstraintSection {
    fn default() -> Self {
        ConstraintSection {
            jumps: vec![0.8],
            levels: vec![0.1875, 0.05],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    #[default]
    Affine,
    Uniform,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightSection {
    pub kind: WeightKind,
    /// Length of the averaging window upstream of `x = 0`.
    pub support: f64,
    pub positions: Vec<f64>,
    pub values: Vec<f64>,
}

impl Default for WeightSection {
    fn default() -> Self {
        WeightSection {
            kind: WeightKind::Affine,
            support: 1.0,
            positions: Vec::new(),
            values: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub dt: f64,
    pub t_end: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            x_min: -5.0,
            x_max: 5.0,
            dx: 0.025,
            dt: 0.0025,
            t_end: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeSection {
    pub branch: Branch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    #[default]
    Riemann,
    Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitSection {
    pub kind: InitKind,
    pub rho_l: f64,
    pub rho_r: f64,
    /// Nodes of a piecewise linear profile, constant beyond the ends.
    pub positions: Vec<f64>,
    pub values: Vec<f64>,
}

impl Default for InitSection {
    fn default() -> Self {
        InitSection {
            kind: InitKind::Riemann,
            rho_l: 0.8015,
            rho_r: 0.5,
            positions: Vec::new(),
            values: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExogenousKind {
    #[default]
    None,
    TrafficLight,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExogenousSection {
    pub kind: ExogenousKind,
    pub level: f64,
    pub green: f64,
    pub period: f64,
    pub times: Vec<f64>,
    pub levels: Vec<f64>,
}

impl Default for ExogenousSection {
    fn default() -> Self {
        ExogenousSection {
            kind: ExogenousKind::None,
            level: 0.25,
            green: 1.0,
            period: 2.0,
            times: Vec::new(),
            levels: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    /// Snapshot times; empty means `[grid.t_end]`.
    pub times: Vec<f64>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: "out".into(),
            times: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    /// Maximal exit flux.
    Q,
    /// Minimal exit flux.
    P,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiemannSection {
    pub solver: SolverChoice,
    pub enumerate: bool,
    /// Sampling time; defaults to `grid.t_end`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub samples: usize,
}

impl Default for RiemannSection {
    fn default() -> Self {
        RiemannSection {
            solver: SolverChoice::Both,
            enumerate: false,
            t: None,
            samples: 401,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareMode {
    /// Exact solutions of the two extreme solvers from `init`.
    #[default]
    Solvers,
    /// Scheme runs from `init.rho_l` and `compare.rho_l_alt`.
    Pair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    pub mode: CompareMode,
    pub times: Vec<f64>,
    pub rho_l_alt: f64,
}

impl Default for CompareSection {
    fn default() -> Self {
        CompareSection {
            mode: CompareMode::Solvers,
            times: vec![0.1, 0.5, 1.0],
            rho_l_alt: 0.7984,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub p2: Vec<f64>,
    pub rho_l_above: f64,
    pub rho_l_below: f64,
    /// Snapshots per run used to calibrate the exponential bound.
    pub n_outputs: usize,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            p2: vec![0.05, 0.075, 0.1, 0.125, 0.15],
            rho_l_above: 0.8015,
            rho_l_below: 0.7984,
            n_outputs: 10,
            jobs: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub flux: FluxSection,
    pub constraint: ConstraintSection,
    pub weight: WeightSection,
    pub grid: GridSection,
    pub scheme: SchemeSection,
    pub init: InitSection,
    pub exogenous_q: ExogenousSection,
    pub output: OutputSection,
    pub riemann: RiemannSection,
    pub compare: CompareSection,
    pub sweep: SweepSection,
}

/// A `--section.key=value` command-line override.
#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub path: Vec<String>,
    pub value: toml::Value,
    raw: String,
}

impl Override {
    /// Parses `section.key=value` (leading dashes allowed). Values are read as
    /// TOML and fall back to plain strings.
    pub fn parse(arg: &str) -> Result<Self> {
        let body = arg.trim_start_matches('-');
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| Error::config(format!("override `{arg}` must look like --section.key=value")))?;
        let path: Vec<String> = key.split('.').map(str::to_owned).collect();
        if path.len() < 2 || path.iter().any(String::is_empty) {
            return Err(Error::config(format!("override `{arg}` needs a dotted key such as grid.dx")));
        }
        let value = format!("v = {value}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_owned()));
        Ok(Override {
            path,
            value,
            raw: arg.to_owned(),
        })
    }

    /// True for arguments shaped like an override.
    pub fn looks_like(arg: &str) -> bool {
        arg.strip_prefix("--")
            .and_then(|s| s.split_once('='))
            .is_some_and(|(k, _)| k.contains('.'))
    }

    fn apply(&self, root: &mut toml::Table) -> Result<()> {
        let (last, parents) = self.path.split_last().expect("at least two parts");
        let mut table = root;
        for part in parents {
            let entry = table
                .entry(part.clone())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            table = entry
                .as_table_mut()
                .ok_or_else(|| Error::config(format!("override `{}`: `{part}` is not a table", self.raw)))?;
        }
        table.insert(last.clone(), self.value.clone());
        Ok(())
    }
}

/// 1-based line of `key` inside `[section]`, if it is written there.
pub fn locate_key(source: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in source.lines().enumerate() {
        let trimmed = line.trim();
        if let Some(name) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            current = name.trim().to_owned();
            continue;
        }
        let Some((lhs, _)) = trimmed.split_once('=') else {
            continue;
        };
        let lhs = lhs.trim();
        let hit = (current == section && lhs == key)
            || (current.is_empty() && lhs == format!("{section}.{key}"));
        if hit {
            return Some(i + 1);
        }
    }
    None
}

fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

impl RunConfig {
    /// Parses `source`, applies `overrides` in order, then validates.
    pub fn load(source: &str, overrides: &[Override]) -> Result<Self> {
        let mut table: toml::Table = source.parse().map_err(|e: toml::de::Error| Error::Config {
            line: e.span().map(|s| line_of(source, s.start)),
            message: e.message().to_owned(),
        })?;
        // shape errors in the file itself get a line from the parser
        if let Err(e) = toml::from_str::<RunConfig>(source) {
            return Err(Error::Config {
                line: e.span().map(|s| line_of(source, s.start)),
                message: e.message().to_owned(),
            });
        }
        for o in overrides {
            o.apply(&mut table)?;
        }
        let config: RunConfig = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| {
            Error::config(format!("after overrides: {}", e.message()))
        })?;
        config.validate_against(source)?;
        Ok(config)
    }

    pub fn from_file(path: &std::path::Path, overrides: &[Override]) -> Result<Self> {
        let source = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::load(&source, overrides)
    }

    /// Resolved configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    /// Checks every cross-field invariant, without line information.
    pub fn validate(&self) -> Result<()> {
        self.validate_against("")
    }

    fn validate_against(&self, source: &str) -> Result<()> {
        let at = |section: &'static str, key: &'static str| located(source, section, key);
        let flux = self.flux().map_err(at("flux", "kind"))?;
        self.constraint(&flux).map_err(at("constraint", "levels"))?;
        let weight = self.weight().map_err(at("weight", "support"))?;
        self.grid(&flux).map_err(at("grid", "dt"))?;
        if self.grid.x_min > -weight.support() {
            return Err(at("grid", "x_min")(Error::InvalidGrid(format!(
                "domain must extend to the weight's reach {}",
                -weight.support()
            ))));
        }
        self.exogenous().map_err(at("exogenous_q", "kind"))?;
        let r = flux.max_density();
        for (key, v) in [("rho_l", self.init.rho_l), ("rho_r", self.init.rho_r)] {
            if !(0.0..=r).contains(&v) {
                return Err(at("init", key)(Error::domain("density", v, 0.0, r)));
            }
        }
        if self.init.kind == InitKind::Profile {
            profile_nodes(&self.init, r).map_err(at("init", "values"))?;
        }
        if !(0.0..=r).contains(&self.compare.rho_l_alt) {
            return Err(at("compare", "rho_l_alt")(Error::domain("density", self.compare.rho_l_alt, 0.0, r)));
        }
        check_times(&self.output_times(), self.grid.t_end).map_err(at("output", "times"))?;
        check_times(&self.compare.times, f64::INFINITY).map_err(at("compare", "times"))?;
        if let Some(t) = self.riemann.t {
            if !(t > 0.0 && t.is_finite()) {
                return Err(at("riemann", "t")(Error::InvalidArgument(format!("sampling time {t} must be positive"))));
            }
        }
        if self.riemann.samples < 2 {
            return Err(at("riemann", "samples")(Error::InvalidArgument("need at least 2 samples".into())));
        }
        if self.sweep.n_outputs == 0 {
            return Err(at("sweep", "n_outputs")(Error::InvalidArgument("need at least one output".into())));
        }
        Ok(())
    }

    pub fn flux(&self) -> Result<FluxModel> {
        match self.flux.kind {
            FluxKind::Quadratic => FluxModel::greenshields(self.flux.v_max, self.flux.max_density),
            FluxKind::Table => FluxModel::tabulated(&self.flux.densities, &self.flux.flows),
        }
    }

    pub fn constraint(&self, flux: &FluxModel) -> Result<PiecewiseConstraint> {
        PiecewiseConstraint::new(self.constraint.jumps.clone(), self.constraint.levels.clone(), flux)
    }

    pub fn weight(&self) -> Result<WeightKernel> {
        let w = &self.weight;
        match w.kind {
            WeightKind::Affine => WeightKernel::affine(w.support),
            WeightKind::Uniform => WeightKernel::uniform(w.support),
            WeightKind::Table => WeightKernel::table(w.positions.clone(), w.values.clone()),
        }
    }

    pub fn grid(&self, flux: &FluxModel) -> Result<Grid> {
        let g = &self.grid;
        if !(g.t_end > 0.0 && g.t_end.is_finite()) {
            return Err(Error::InvalidGrid(format!("t_end = {} must be positive", g.t_end)));
        }
        Grid::new(g.x_min, g.x_max, g.dx, g.dt, flux)
    }

    pub fn exogenous(&self) -> Result<Option<ExogenousCapacity>> {
        let e = &self.exogenous_q;
        Ok(match e.kind {
            ExogenousKind::None => None,
            ExogenousKind::TrafficLight => Some(ExogenousCapacity::traffic_light(e.level, e.green, e.period)?),
            ExogenousKind::Table => Some(ExogenousCapacity::table(e.times.clone(), e.levels.clone())?),
        })
    }

    pub fn scheme(&self) -> Result<Scheme> {
        let flux = self.flux()?;
        let grid = self.grid(&flux)?;
        let weight = self.weight()?;
        let capacity = match self.exogenous()? {
            Some(q) => Capacity::Exogenous(q),
            None => Capacity::NonLocal {
                p: self.constraint(&flux)?,
                branch: self.scheme.branch,
            },
        };
        Scheme::new(flux, grid, weight, capacity)
    }

    /// Initial cell values for `grid`.
    pub fn initial_cells(&self, grid: &Grid, flux: &FluxModel) -> Result<Vec<f64>> {
        match self.init.kind {
            InitKind::Riemann => Ok(grid.riemann_cells(self.init.rho_l, self.init.rho_r)),
            InitKind::Profile => {
                let (xs, vs) = profile_nodes(&self.init, flux.max_density())?;
                Ok(grid.sample(|x| interpolate(xs, vs, x)))
            }
        }
    }

    pub fn output_times(&self) -> Vec<f64> {
        if self.output.times.is_empty() {
            vec![self.grid.t_end]
        } else {
            self.output.times.clone()
        }
    }
}

fn located(source: &str, section: &'static str, key: &'static str) -> impl Fn(Error) -> Error {
    let line = locate_key(source, section, key);
    move |e: Error| Error::Config {
        line,
        message: format!("{section}.{key}: {e}"),
    }
}

fn check_times(times: &[f64], t_max: f64) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidArgument("need at least one time".into()));
    }
    if times.iter().any(|&t| !(t > 0.0 && t <= t_max * (1.0 + 1e-12))) {
        return Err(Error::InvalidArgument(format!("times must lie in (0, {t_max}]")));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("times must increase".into()));
    }
    Ok(())
}

fn profile_nodes(init: &InitSection, r: f64) -> Result<(&[f64], &[f64])> {
    let (xs, vs) = (&init.positions, &init.values);
    if xs.is_empty() || xs.len() != vs.len() {
        return Err(Error::InvalidArgument(format!(
            "profile needs matching non-empty positions and values, got {} and {}",
            xs.len(),
            vs.len()
        )));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("profile positions must increase".into()));
    }
    if let Some(&v) = vs.iter().find(|v| !(0.0..=r).contains(*v)) {
        return Err(Error::domain("profile density", v, 0.0, r));
    }
    Ok((xs, vs))
}

fn interpolate(xs: &[f64], vs: &[f64], x: f64) -> f64 {
    let i = xs.partition_point(|&p| p <= x);
    if i == 0 {
        return vs[0];
    }
    if i == xs.len() {
        return vs[xs.len() - 1];
    }
    let s = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    vs[i - 1] + s * (vs[i] - vs[i - 1])
}
