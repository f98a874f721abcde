use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use monotone_spde::noise::write_trajectory_csv;
use monotone_spde::verify::{
    bernoulli_study, cauchy_rate_study, chain_rule_study, contraction_extension_study, digest_of,
    eiconv_demo, invariant_suite, l1_convergence_study, moment_study, propagation_study,
    write_atomic, StudyReport, Verdict,
};
use monotone_spde::{solve_mild, GridFunction, MonotoneGraph};
use serde::Serialize;

use crate::config::{RunConfig, STUDY_NAMES};

pub const OUTPUT_ROOT_VAR: &str = "MSPDE_OUTPUT_ROOT";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    SampleNoise,
    Solve,
    Study(String),
    CheckInvariants,
}

impl Command {
    pub fn label(&self) -> String {
        match self {
            Command::SampleNoise => "sample-noise".into(),
            Command::Solve => "solve".into(),
            Command::Study(name) => format!("study {name}"),
            Command::CheckInvariants => "check-invariants".into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Core(#[from] monotone_spde::Error),
    #[error("unknown study '{0}' (expected one of: {list})", list = STUDY_NAMES.join(", "))]
    UnknownStudy(String),
    #[error("study '{0}' has no [study.{0}] section in the configuration")]
    StudyDisabled(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// `flag` wins over the configured directory; relative results are placed under `root`.
pub fn resolve_output(configured: &Path, flag: Option<&Path>, root: Option<&Path>) -> PathBuf {
    let dir = flag.unwrap_or(configured);
    match root {
        Some(r) if dir.is_relative() => r.join(dir),
        _ => dir.to_path_buf(),
    }
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: String,
    version: &'static str,
    config_digest: String,
    config: &'a RunConfig,
    seeds: Vec<u64>,
    artifacts: Vec<String>,
    verdicts: BTreeMap<String, Verdict>,
}

/// Artifacts collected during a run, keyed by path relative to the run directory.
struct Artifacts<'a> {
    root: &'a Path,
    written: Vec<String>,
}

impl<'a> Artifacts<'a> {
    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), RunError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        write_atomic(&path, bytes).map_err(io_err(&path))?;
        self.written.push(rel.to_string());
        Ok(())
    }

    fn report(&mut self, report: &StudyReport) -> Result<(), RunError> {
        let name = &report.name;
        self.write(&format!("{name}/report.json"), report.to_json().as_bytes())?;
        self.write(
            &format!("{name}/series.csv"),
            report.series.to_csv().as_bytes(),
        )
    }
}

fn json_bytes<S: Serialize>(value: &S) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

/// Worst verdict first: fail, then inconclusive, then pass.
pub fn combine(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
    verdicts
        .into_iter()
        .fold(Verdict::Pass, |acc, v| match (acc, v) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
            _ => Verdict::Pass,
        })
}

fn study_report(config: &RunConfig, name: &str) -> Result<StudyReport, RunError> {
    if !STUDY_NAMES.contains(&name) {
        return Err(RunError::UnknownStudy(name.into()));
    }
    if !config.enabled_studies()[name] {
        return Err(RunError::StudyDisabled(name.into()));
    }
    let setup = config.setup()?;
    let s = &config.study;
    let q_or = |q: Option<f64>| q.unwrap_or(config.solver.q);
    let drift = &config.drift;
    let report = match name {
        "cauchy" => cauchy_rate_study(drift, q_or(s.cauchy.as_ref().and_then(|c| c.q)), &setup)?,
        "l1" => l1_convergence_study(drift, &setup)?,
        "moments" => {
            let m = s.moments.as_ref().expect("enabled");
            moment_study(drift, q_or(m.q), m.p, &setup)?
        }
        "propagation" => propagation_study(
            drift,
            q_or(s.propagation.as_ref().and_then(|c| c.q)),
            config.solver.r,
            &setup,
        )?,
        "extension" => contraction_extension_study(
            drift,
            q_or(s.extension.as_ref().and_then(|c| c.q)),
            &setup,
        )?,
        "bernoulli" => bernoulli_study(s.bernoulli.as_ref().expect("enabled").samples, config.seed),
        "chain_rule" => {
            let grid = *setup.sg.grid();
            let forcing = move |t: f64| {
                GridFunction::from_fn(grid, |x| 2.0 * (1.0 + t) * (std::f64::consts::PI * x).sin())
                    .expect("grid function")
            };
            let q = q_or(s.chain_rule.as_ref().and_then(|c| c.q));
            chain_rule_study(
                q,
                &setup.sg,
                &forcing,
                &setup.u0,
                config.time.horizon,
                config.time.delta,
            )?
        }
        _ => eiconv_demo(s.eiconv.as_ref().expect("enabled").n_max),
    };
    Ok(report)
}

/// Executes `command` and writes all artifacts plus `manifest.json` under `out`.
pub fn run(config: &RunConfig, command: &Command, out: &Path) -> Result<Verdict, RunError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let mut artifacts = Artifacts {
        root: out,
        written: Vec::new(),
    };
    let mut verdicts = BTreeMap::new();
    match command {
        Command::SampleNoise => {
            let setup = config.setup()?;
            for seed in config.seeds() {
                let path = setup.path(seed)?;
                let mut csv = Vec::new();
                path.write_csv(&mut csv).expect("in-memory write");
                artifacts.write(&format!("noise/seed-{seed}/path.csv"), &csv)?;
                if let Some(m) = path.manifest() {
                    artifacts.write(&format!("noise/seed-{seed}/path.json"), &json_bytes(&m))?;
                }
            }
            verdicts.insert("sample-noise".to_string(), Verdict::Pass);
        }
        Command::Solve => {
            let setup = config.setup()?;
            let f = MonotoneGraph::<f64>::from_spec(&config.drift)?;
            let solved = setup.fan_out(|seed| {
                let path = setup.path(seed)?;
                let sol = solve_mild(&f, &setup.u0, &path, &setup.sg, &setup.solver)?;
                let mut u = Vec::new();
                sol.write_csv(&mut u, &path).expect("in-memory write");
                let mut g = Vec::new();
                write_trajectory_csv(&mut g, path.time_grid(), &sol.g).expect("in-memory write");
                Ok((
                    seed,
                    sol.converged,
                    u,
                    g,
                    json_bytes(&sol.manifest(&f, &path, &setup.solver)),
                ))
            })?;
            for (seed, converged, u, g, manifest) in solved {
                artifacts.write(&format!("solve/seed-{seed}/u.csv"), &u)?;
                artifacts.write(&format!("solve/seed-{seed}/g.csv"), &g)?;
                artifacts.write(&format!("solve/seed-{seed}/solve.json"), &manifest)?;
                let v = if converged {
                    Verdict::Pass
                } else {
                    Verdict::Inconclusive
                };
                verdicts.insert(format!("solve/seed-{seed}"), v);
            }
        }
        Command::Study(name) => {
            let report = study_report(config, name)?;
            artifacts.report(&report)?;
            verdicts.insert(report.name.clone(), report.verdict);
        }
        Command::CheckInvariants => {
            let report =
                invariant_suite(&config.setup()?, &config.drift, config.invariants.samples)?;
            artifacts.report(&report)?;
            verdicts.insert(report.name.clone(), report.verdict);
        }
    }
    let overall = combine(verdicts.values().copied());
    let manifest = RunManifest {
        command: command.label(),
        version: env!("CARGO_PKG_VERSION"),
        config_digest: digest_of(config),
        config,
        seeds: config.seeds(),
        artifacts: artifacts.written.clone(),
        verdicts,
    };
    artifacts.write("manifest.json", &json_bytes(&manifest))?;
    Ok(overall)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_resolution() {
        let cfg = Path::new("out");
        assert_eq!(resolve_output(cfg, None, None), PathBuf::from("out"));
        assert_eq!(
            resolve_output(cfg, Some(Path::new("x")), Some(Path::new("/r"))),
            PathBuf::from("/r/x")
        );
        assert_eq!(
            resolve_output(Path::new("/abs"), None, Some(Path::new("/r"))),
            PathBuf::from("/abs")
        );
    }

    #[test]
    fn verdicts_combine_worst_first() {
        assert_eq!(combine([]), Verdict::Pass);
        assert_eq!(
            combine([Verdict::Pass, Verdict::Inconclusive]),
            Verdict::Inconclusive
        );
        assert_eq!(
            combine([Verdict::Inconclusive, Verdict::Fail, Verdict::Pass]),
            Verdict::Fail
        );
    }
}
