//! Numerical studies that confront the solver output with the quantitative
//! statements of the theory: explicit-constant a-priori bounds, Cauchy rates
//! in `λ`, contraction, `L¹` convergence machinery and the auxiliary
//! inequalities.
//!
//! Studies fan out over seeds on the current rayon pool and fold the results
//! in seed order, so reports do not depend on the number of workers.

mod invariants;
mod lemmas;
mod report;
mod studies;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::grid_space::GridFunction;
use crate::noise::{sample_path, DiffusionSpec, NoisePath};
use crate::semigroup::HeatSemigroup;
use crate::solver::SolverConfig;

pub use invariants::{
    apriori_check, contraction_check, inequality_suite, invariant_suite, scalar_identity_check,
    semigroup_axiom_check, AprioriOutcome, InequalityOutcome, ScalarIdentityOutcome,
    SemigroupOutcome,
};
pub use lemmas::{bernoulli_study, chain_rule_study, eiconv_demo, jq_excess, xya_excess};
pub use report::{write_atomic, Relation, Series, StudyInputs, StudyReport, Threshold, Verdict};
pub use studies::{
    cauchy_rate_study, contraction_extension_study, l1_convergence_study, moment_study,
    propagation_study, worst_set_integral,
};

/// Everything a path-based study needs besides the drift.
#[derive(Clone, Debug)]
pub struct StudySetup {
    pub sg: HeatSemigroup<f64>,
    pub noise: DiffusionSpec,
    pub horizon: f64,
    pub u0: GridFunction<f64>,
    pub solver: SolverConfig<f64>,
    pub seeds: Vec<u64>,
}

#[derive(Serialize)]
struct SetupRecord<'a> {
    m: usize,
    viscosity: f64,
    noise: &'a DiffusionSpec,
    horizon: f64,
    u0: &'a [f64],
    q: f64,
    r: f64,
    delta: f64,
    lambda_schedule: &'a [f64],
    cauchy_tol: f64,
    root_tol: f64,
}

impl StudySetup {
    pub fn path(&self, seed: u64) -> Result<NoisePath<f64>> {
        sample_path(&self.noise, &self.sg, self.horizon, self.solver.delta, seed)
    }

    /// SHA-256 of the canonical JSON form of the setup (seeds excluded).
    pub fn digest(&self) -> String {
        let record = SetupRecord {
            m: self.sg.grid().len(),
            viscosity: self.sg.viscosity(),
            noise: &self.noise,
            horizon: self.horizon,
            u0: self.u0.values(),
            q: self.solver.q,
            r: self.solver.r,
            delta: self.solver.delta,
            lambda_schedule: &self.solver.lambda_schedule,
            cauchy_tol: self.solver.cauchy_tol,
            root_tol: self.solver.root_tol,
        };
        digest_of(&record)
    }

    pub fn inputs(&self) -> StudyInputs {
        StudyInputs {
            config_digest: self.digest(),
            seeds: self.seeds.clone(),
            parameters: Default::default(),
        }
    }

    /// Runs `job` for every seed on the current pool; results come back in seed order.
    pub fn fan_out<R: Send>(&self, job: impl Fn(u64) -> Result<R> + Sync + Send) -> Result<Vec<R>> {
        self.seeds.par_iter().map(|&s| job(s)).collect()
    }
}

pub fn digest_of<S: Serialize>(value: &S) -> String {
    let bytes = serde_json::to_vec(value).expect("digest input serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Log-log slope over the strictly positive pairs; `None` with fewer than two.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .unzip();
    (lx.len() >= 2).then(|| fit_slope(&lx, &ly))
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}
