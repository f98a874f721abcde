//! TOML run configuration.
//!
//! Every section is optional except `[drift]`; absent sections take the
//! defaults below. Study sections (`[study.<name>]`) double as the switch that
//! enables the corresponding `study <name>` subcommand.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use monotone_spde::solver::{default_schedule, SolverConfig};
use monotone_spde::verify::StudySetup;
use monotone_spde::{
    DiffusionSpec, GraphSpec, Grid, GridFunction, HeatSemigroup, MonotoneGraph, TimeGrid,
};
use serde::{Deserialize, Serialize};

pub const STUDY_NAMES: [&str; 8] = [
    "cauchy",
    "l1",
    "moments",
    "propagation",
    "extension",
    "bernoulli",
    "chain_rule",
    "eiconv",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; path `i` uses seed `seed + i`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub paths: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub time: TimeSection,
    pub drift: GraphSpec,
    #[serde(default = "default_noise")]
    pub noise: DiffusionSpec,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub invariants: InvariantsSection,
    #[serde(default)]
    pub study: StudySections,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub m: usize,
    pub viscosity: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            m: 127,
            viscosity: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub horizon: f64,
    pub delta: f64,
}

impl Default for TimeSection {
    fn default() -> Self {
        TimeSection {
            horizon: 1.0,
            delta: 2f64.powi(-10),
        }
    }
}

/// `u₀` as a named profile or explicit nodal values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSection {
    Zero,
    /// `amplitude * sin(π x)`.
    Sine {
        amplitude: f64,
    },
    Constant {
        value: f64,
    },
    Values {
        values: Vec<f64>,
    },
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection::Sine { amplitude: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub q: f64,
    pub r: f64,
    pub lambda_schedule: Vec<f64>,
    pub cauchy_tol: f64,
    pub root_tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let base = SolverConfig::<f64>::new(2.0, 2.0, 1.0);
        SolverSection {
            q: base.q,
            r: base.r,
            lambda_schedule: default_schedule(),
            cauchy_tol: base.cauchy_tol,
            root_tol: base.root_tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InvariantsSection {
    /// Random samples per scalar check.
    pub samples: usize,
}

impl Default for InvariantsSection {
    fn default() -> Self {
        InvariantsSection { samples: 1000 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySections {
    pub cauchy: Option<ExponentStudy>,
    pub l1: Option<EmptyStudy>,
    pub moments: Option<MomentStudy>,
    pub propagation: Option<ExponentStudy>,
    pub extension: Option<ExponentStudy>,
    pub bernoulli: Option<BernoulliStudy>,
    pub chain_rule: Option<ExponentStudy>,
    pub eiconv: Option<EiconvStudy>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmptyStudy {}

/// `q` overrides `solver.q` for this study.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentStudy {
    pub q: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentStudy {
    pub q: Option<f64>,
    #[serde(default = "two")]
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BernoulliStudy {
    #[serde(default = "thousand")]
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EiconvStudy {
    #[serde(default = "eiconv_default")]
    pub n_max: usize,
}

fn one() -> u64 {
    1
}

fn two() -> f64 {
    2.0
}

fn thousand() -> usize {
    1000
}

fn eiconv_default() -> usize {
    1024
}

fn default_output() -> PathBuf {
    PathBuf::from("mspde-out")
}

fn default_noise() -> DiffusionSpec {
    DiffusionSpec::power_law(1.0, 2.0)
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),
}

impl ConfigError {
    pub fn violations(&self) -> &[String] {
        match self {
            ConfigError::Validation(v) => v,
            ConfigError::Parse { .. } => &[],
        }
    }
}

fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Parses and validates; validation reports every violated constraint at once.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let config: RunConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| position(text, s.start));
        ConfigError::Parse {
            line,
            column,
            message: e.message().trim().to_string(),
        }
    })?;
    let violations = config.violations();
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Validation(violations))
    }
}

impl RunConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.paths == 0 {
            v.push("paths must be >= 1".into());
        }
        if self.grid.m == 0 {
            v.push("grid.m must be >= 1".into());
        }
        if !(self.grid.viscosity > 0.0 && self.grid.viscosity.is_finite()) {
            v.push(format!(
                "grid.viscosity = {} must be > 0",
                self.grid.viscosity
            ));
        }
        if let Err(e) = TimeGrid::<f64>::new(self.time.horizon, self.time.delta) {
            v.push(format!("time: {e}"));
        }
        match MonotoneGraph::<f64>::from_spec(&self.drift) {
            Ok(f) => {
                if let Err(e) = f.check_growth(10_000) {
                    v.push(format!("drift: {e}"));
                }
            }
            Err(e) => v.push(format!("drift: {e}")),
        }
        if self.grid.m > 0 {
            if let Err(e) = self.noise.weights::<f64>(self.grid.m) {
                v.push(format!("noise: {e}"));
            }
        }
        match &self.initial {
            InitialSection::Values { values } if values.len() != self.grid.m => v.push(format!(
                "initial.values has {} entries, grid.m = {}",
                values.len(),
                self.grid.m
            )),
            InitialSection::Values { values } if values.iter().any(|x| !x.is_finite()) => {
                v.push("initial.values must be finite".into())
            }
            InitialSection::Sine { amplitude: a } | InitialSection::Constant { value: a }
                if !a.is_finite() =>
            {
                v.push("initial profile parameter must be finite".into())
            }
            _ => {}
        }
        let solver = self.solver_config();
        for s in solver.violations() {
            v.push(format!("solver: {s}"));
        }
        let study = &self.study;
        for (name, q) in [
            ("cauchy", study.cauchy.as_ref().and_then(|s| s.q)),
            ("propagation", study.propagation.as_ref().and_then(|s| s.q)),
            ("extension", study.extension.as_ref().and_then(|s| s.q)),
            ("chain_rule", study.chain_rule.as_ref().and_then(|s| s.q)),
            ("moments", study.moments.as_ref().and_then(|s| s.q)),
        ] {
            if let Some(q) = q {
                if !(q > 1.0) {
                    v.push(format!("study.{name}.q = {q} must be > 1"));
                }
            }
        }
        if let Some(p) = &study.propagation {
            if p.q.is_some_and(|q| q < self.solver.r) {
                v.push(format!(
                    "study.propagation.q must be >= solver.r = {}",
                    self.solver.r
                ));
            }
        }
        if let Some(m) = &study.moments {
            if !(m.p >= 1.0) {
                v.push(format!("study.moments.p = {} must be >= 1", m.p));
            }
            if self.paths < 100 {
                v.push(format!(
                    "study.moments needs paths >= 100, got {}",
                    self.paths
                ));
            }
        }
        if study.l1.is_some() {
            if let Ok(f) = MonotoneGraph::<f64>::from_spec(&self.drift) {
                if !f.is_bounded() {
                    v.push(format!(
                        "study.l1 needs a bounded drift, got {}",
                        self.drift.label()
                    ));
                }
            }
        }
        if study.bernoulli.as_ref().is_some_and(|b| b.samples == 0) {
            v.push("study.bernoulli.samples must be >= 1".into());
        }
        if study.eiconv.as_ref().is_some_and(|e| e.n_max < 2) {
            v.push("study.eiconv.n_max must be >= 2".into());
        }
        if self.invariants.samples == 0 {
            v.push("invariants.samples must be >= 1".into());
        }
        v
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.paths).map(|i| self.seed.wrapping_add(i)).collect()
    }

    pub fn solver_config(&self) -> SolverConfig<f64> {
        let s = &self.solver;
        SolverConfig::new(s.q, s.r, self.time.delta)
            .with_schedule(s.lambda_schedule.clone())
            .with_cauchy_tol(s.cauchy_tol)
            .with_root_tol(s.root_tol)
    }

    pub fn semigroup(&self) -> monotone_spde::Result<HeatSemigroup<f64>> {
        HeatSemigroup::new(Grid::new(self.grid.m)?, self.grid.viscosity)
    }

    pub fn initial(&self, grid: Grid<f64>) -> monotone_spde::Result<GridFunction<f64>> {
        match &self.initial {
            InitialSection::Zero => Ok(GridFunction::zeros(grid)),
            InitialSection::Sine { amplitude } => {
                GridFunction::from_fn(grid, |x| amplitude * (std::f64::consts::PI * x).sin())
            }
            InitialSection::Constant { value } => Ok(GridFunction::constant(grid, *value)),
            InitialSection::Values { values } => GridFunction::new(grid, values.clone()),
        }
    }

    pub fn setup(&self) -> monotone_spde::Result<StudySetup> {
        let sg = self.semigroup()?;
        let u0 = self.initial(*sg.grid())?;
        Ok(StudySetup {
            sg,
            noise: self.noise.clone(),
            horizon: self.time.horizon,
            u0,
            solver: self.solver_config(),
            seeds: self.seeds(),
        })
    }

    /// Which study sections are present.
    pub fn enabled_studies(&self) -> BTreeMap<&'static str, bool> {
        let s = &self.study;
        STUDY_NAMES
            .iter()
            .map(|&n| {
                let on = match n {
                    "cauchy" => s.cauchy.is_some(),
                    "l1" => s.l1.is_some(),
                    "moments" => s.moments.is_some(),
                    "propagation" => s.propagation.is_some(),
                    "extension" => s.extension.is_some(),
                    "bernoulli" => s.bernoulli.is_some(),
                    "chain_rule" => s.chain_rule.is_some(),
                    _ => s.eiconv.is_some(),
                };
                (n, on)
            })
            .collect()
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&toml::to_string(self).map_err(|_| fmt::Error)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[drift]\nkind = \"cube\"\n";

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(
            c.grid,
            GridSection {
                m: 127,
                viscosity: 1.0
            }
        );
        assert_eq!(c.time.horizon, 1.0);
        assert_eq!(c.time.delta, 2f64.powi(-10));
        assert_eq!(c.solver.lambda_schedule.len(), 7);
        assert_eq!(c.seeds(), vec![0]);
        assert!(c.enabled_studies().values().all(|on| !on));
    }

    #[test]
    fn every_violation_is_listed() {
        let text =
            format!("{MINIMAL}[solver]\nq = 0.5\nr = 3.0\n[grid]\nm = 7\nviscosity = -1.0\n");
        let err = parse_config(&text).unwrap_err();
        let v = err.violations();
        assert!(v.iter().any(|s| s.contains("q >= 1")), "{v:?}");
        assert!(v.iter().any(|s| s.contains("r <= q")), "{v:?}");
        assert!(v.iter().any(|s| s.contains("viscosity")), "{v:?}");
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse_config("[drift]\nkind = \"cube\"\n[grid]\nbogus = 1\n").unwrap_err();
        match err {
            ConfigError::Parse { line, column, .. } => assert_eq!((line, column), (4, 1)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_config("seed = \n"),
            Err(ConfigError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn round_trips_through_toml() {
        let c = parse_config(&"[drift]\nkind = \"sign\"\n[study.cauchy]\nq = 2.0\n[study.l1]\n".to_string())
        .unwrap();
        assert_eq!(parse_config(&c.to_string()).unwrap(), c);
    }
}
