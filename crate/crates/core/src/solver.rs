//! Pathwise solver for `u + S * g = S u₀ + z`, `g ∈ f̃(u)`.
//!
//! For fixed `λ` the regularized problem with drift `f_λ` is stepped by Lie
//! splitting on `v = u - z`:
//!
//! 1. `a = S(δ) v_n`
//! 2. per node, `b = a + z_{n+1}`, `w = b - δ f_{λ+δ}(b)`, which is the unique
//!    solution of `w + δ f_λ(w) = b`
//! 3. `u_{n+1} = w`, `v_{n+1} = w - z_{n+1}`, `g_{n+1} = f_λ(w) = f_{λ+δ}(b)`.
//!
//! [`solve_mild`] runs this along a decreasing `λ` schedule until consecutive
//! iterates agree to `cauchy_tol` in `sup_t L^q`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_space::GridFunction;
use crate::noise::{write_trajectory_csv, NoiseManifest, NoisePath};
use crate::real::Real;
use crate::scalar_monotone::{
    resolvent_of, GraphSpec, MonotoneGraph, YosidaView, DEFAULT_ROOT_TOL,
};
use crate::semigroup::{Convolution, HeatSemigroup};

/// `λ_j = 2^{-2-j}`, `j = 0..=6`.
pub fn default_schedule<T: Real>() -> Vec<T> {
    geometric_schedule(T::lit(0.25), 7)
}

/// `first, first/2, first/4, ...` with `len` entries.
pub fn geometric_schedule<T: Real>(first: T, len: usize) -> Vec<T> {
    (0..len)
        .map(|j| first * T::lit(0.5).powi(j as i32))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig<T> {
    pub q: T,
    pub r: T,
    pub delta: T,
    pub lambda_schedule: Vec<T>,
    pub cauchy_tol: T,
    pub root_tol: T,
}

impl<T: Real> SolverConfig<T> {
    /// Default schedule, `cauchy_tol = 1e-3`, `root_tol = 1e-12`.
    pub fn new(q: T, r: T, delta: T) -> Self {
        SolverConfig {
            q,
            r,
            delta,
            lambda_schedule: default_schedule(),
            cauchy_tol: T::lit(1e-3),
            root_tol: T::lit(DEFAULT_ROOT_TOL),
        }
    }

    pub fn with_schedule(mut self, schedule: Vec<T>) -> Self {
        self.lambda_schedule = schedule;
        self
    }

    pub fn with_cauchy_tol(mut self, tol: T) -> Self {
        self.cauchy_tol = tol;
        self
    }

    pub fn with_root_tol(mut self, tol: T) -> Self {
        self.root_tol = tol;
        self
    }

    /// Every violated constraint, in a fixed order.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.q >= T::one()) {
            out.push(format!("q = {} must satisfy q >= 1", self.q));
        }
        if !(self.r >= T::one()) {
            out.push(format!("r = {} must satisfy r >= 1", self.r));
        }
        if self.r > self.q {
            out.push(format!(
                "r = {} must satisfy r <= q = {} (mild solutions require q >= r)",
                self.r, self.q
            ));
        }
        if !(self.delta > T::zero()) || !self.delta.is_finite() {
            out.push(format!("delta = {} must be > 0", self.delta));
        }
        if self.lambda_schedule.is_empty() {
            out.push("lambda schedule must be non-empty".into());
        }
        if self
            .lambda_schedule
            .iter()
            .any(|&l| !(l > T::zero()) || !l.is_finite())
        {
            out.push("lambda schedule entries must be finite and > 0".into());
        }
        if self.lambda_schedule.windows(2).any(|w| !(w[1] < w[0])) {
            out.push("lambda schedule must be strictly decreasing".into());
        }
        if !(self.cauchy_tol > T::zero()) {
            out.push(format!("cauchy_tol = {} must be > 0", self.cauchy_tol));
        }
        if !(self.root_tol > T::zero()) {
            out.push(format!("root_tol = {} must be > 0", self.root_tol));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(v.join("; ")))
        }
    }
}

/// `u_λ` and `g_λ = f_λ(u_λ)` at `t_0..t_N`.
#[derive(Clone, Debug)]
pub struct RegularizedRun<T> {
    pub lambda: T,
    pub u: Vec<GridFunction<T>>,
    pub g: Vec<GridFunction<T>>,
}

impl<T: Real> RegularizedRun<T> {
    /// `v = u - z`.
    pub fn v(&self, path: &NoisePath<T>) -> Vec<GridFunction<T>> {
        self.u
            .iter()
            .zip(path.fields())
            .map(|(u, z)| u.sub(z).expect("consistent grids"))
            .collect()
    }
}

fn check_inputs<T: Real>(
    u0: &GridFunction<T>,
    path: &NoisePath<T>,
    sg: &HeatSemigroup<T>,
    delta: T,
) -> Result<()> {
    for grid in [u0.grid(), path.grid()] {
        if grid != sg.grid() {
            return Err(Error::GridMismatch {
                left: sg.grid().len(),
                right: grid.len(),
            });
        }
    }
    let step = path.step();
    if (delta - step).abs() > T::lit(1e-12) * step {
        return Err(Error::InvalidTimeGrid(format!(
            "solver step {delta} differs from noise step {step}"
        )));
    }
    Ok(())
}

/// Trajectory `u_λ(t_n)`, `n = 0..=N`.
pub fn solve_regularized<T: Real>(
    f: &MonotoneGraph<T>,
    lambda: T,
    u0: &GridFunction<T>,
    path: &NoisePath<T>,
    sg: &HeatSemigroup<T>,
    delta: T,
) -> Result<Vec<GridFunction<T>>> {
    Ok(solve_regularized_run(f, lambda, u0, path, sg, delta, T::lit(DEFAULT_ROOT_TOL))?.u)
}

/// Like [`solve_regularized`] but also returns `g_λ`, produced by the same root solves.
pub fn solve_regularized_run<T: Real>(
    f: &MonotoneGraph<T>,
    lambda: T,
    u0: &GridFunction<T>,
    path: &NoisePath<T>,
    sg: &HeatSemigroup<T>,
    delta: T,
    root_tol: T,
) -> Result<RegularizedRun<T>> {
    check_inputs(u0, path, sg, delta)?;
    let view = YosidaView::new(f, lambda, root_tol)?;
    let grid = *sg.grid();
    let steps = path.steps();
    if f.is_zero() {
        let mut u = Vec::with_capacity(steps + 1);
        for n in 0..=steps {
            let free = sg.apply_semigroup(u0, path.time_grid().time(n))?;
            u.push(free.add(path.field(n))?);
        }
        return Ok(RegularizedRun {
            lambda,
            u,
            g: vec![GridFunction::zeros(grid); steps + 1],
        });
    }
    let decay = sg.decay_factors(delta)?;
    let shifted = lambda + delta;
    let mut u = Vec::with_capacity(steps + 1);
    let mut g = Vec::with_capacity(steps + 1);
    u.push(u0.clone());
    g.push(extract_one(&view, u0)?);
    let mut v = u0.sub(path.field(0))?.into_values();
    for n in 0..steps {
        let a = sg.apply_factors(&v, &decay);
        let z = path.field(n + 1).values();
        let mut un = Vec::with_capacity(a.len());
        let mut gn = Vec::with_capacity(a.len());
        for ((&ai, &zi), vi) in a.iter().zip(z).zip(v.iter_mut()) {
            let b = ai + zi;
            let r = resolvent_of(f, shifted, b, root_tol)?;
            let gi = (b - r) / shifted;
            let w = b - delta * gi;
            *vi = w - zi;
            un.push(w);
            gn.push(gi);
        }
        u.push(GridFunction::new(grid, un)?);
        g.push(GridFunction::new(grid, gn)?);
    }
    Ok(RegularizedRun { lambda, u, g })
}

fn extract_one<T: Real>(view: &YosidaView<'_, T>, u: &GridFunction<T>) -> Result<GridFunction<T>> {
    let vals = u
        .values()
        .iter()
        .map(|&x| view.yosida(x))
        .collect::<Result<Vec<_>>>()?;
    GridFunction::new(*u.grid(), vals)
}

/// `g_λ(t_n) = f_λ(u_λ(t_n))` pointwise.
pub fn extract_g<T: Real>(
    u_traj: &[GridFunction<T>],
    f: &MonotoneGraph<T>,
    lambda: T,
) -> Result<Vec<GridFunction<T>>> {
    let view = YosidaView::new(f, lambda, T::lit(DEFAULT_ROOT_TOL))?;
    u_traj.iter().map(|u| extract_one(&view, u)).collect()
}

/// `sup_n ‖a_n - b_n‖_q`.
pub fn sup_gap<T: Real>(a: &[GridFunction<T>], b: &[GridFunction<T>], q: T) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    a.iter()
        .zip(b)
        .try_fold(T::zero(), |acc, (x, y)| Ok(acc.max(x.sub(y)?.lq_norm(q)?)))
}

/// `sup_n ‖a_n‖_q`.
pub fn sup_norm<T: Real>(a: &[GridFunction<T>], q: T) -> Result<T> {
    a.iter()
        .try_fold(T::zero(), |acc, x| Ok(acc.max(x.lq_norm(q)?)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaDiagnostics {
    pub lambda: f64,
    /// `sup_t ‖u_λ - u_{λ_prev}‖_q`; absent for the first entry.
    pub gap: Option<f64>,
    /// `sup_t ‖v_λ‖_q`.
    pub sup_v_q: f64,
    /// `sup_t ‖g_λ‖_r`.
    pub sup_g_r: f64,
}

#[derive(Clone, Debug)]
pub struct MildSolution<T> {
    pub u: Vec<GridFunction<T>>,
    pub g: Vec<GridFunction<T>>,
    pub lambda: T,
    pub converged: bool,
    pub residual: T,
    pub diagnostics: Vec<LambdaDiagnostics>,
}

impl<T: Real> MildSolution<T> {
    /// The whole schedule ran without meeting `cauchy_tol`.
    pub fn schedule_exhausted(&self) -> bool {
        !self.converged
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.diagnostics.iter().filter_map(|d| d.gap).collect()
    }
}

/// λ-continuation along `config.lambda_schedule`.
pub fn solve_mild<T: Real>(
    f: &MonotoneGraph<T>,
    u0: &GridFunction<T>,
    path: &NoisePath<T>,
    sg: &HeatSemigroup<T>,
    config: &SolverConfig<T>,
) -> Result<MildSolution<T>> {
    config.validate()?;
    let mut diagnostics = Vec::new();
    let mut prev: Option<RegularizedRun<T>> = None;
    let mut converged = false;
    for &lambda in &config.lambda_schedule {
        let run = solve_regularized_run(f, lambda, u0, path, sg, config.delta, config.root_tol)?;
        let gap = match &prev {
            Some(p) => Some(sup_gap(&run.u, &p.u, config.q)?),
            None if f.is_zero() => Some(T::zero()),
            None => None,
        };
        diagnostics.push(LambdaDiagnostics {
            lambda: lambda.as_f64(),
            gap: gap.map(|g| g.as_f64()),
            sup_v_q: sup_norm(&run.v(path), config.q)?.as_f64(),
            sup_g_r: sup_norm(&run.g, config.r)?.as_f64(),
        });
        prev = Some(run);
        if gap.is_some_and(|g| g < config.cauchy_tol) {
            converged = true;
            break;
        }
    }
    let last = prev.expect("non-empty schedule");
    let residual = residual_check(&last.u, &last.g, u0, path, sg, config.r)?;
    Ok(MildSolution {
        u: last.u,
        g: last.g,
        lambda: last.lambda,
        converged,
        residual,
        diagnostics,
    })
}

/// `sup_n ‖u(t_n) + (S * g)(t_n) - S(t_n) u₀ - z(t_n)‖_r` with `S * g` integrated
/// exactly per mode for `g` frozen at left endpoints.
pub fn residual_check<T: Real>(
    u_traj: &[GridFunction<T>],
    g_traj: &[GridFunction<T>],
    u0: &GridFunction<T>,
    path: &NoisePath<T>,
    sg: &HeatSemigroup<T>,
    r: T,
) -> Result<T> {
    let n = path.steps() + 1;
    if u_traj.len() != n || g_traj.len() != n {
        return Err(Error::GridMismatch {
            left: n,
            right: u_traj.len().min(g_traj.len()),
        });
    }
    let time = path.time_grid();
    let mut conv = Convolution::new(sg, time.step());
    let mut worst = T::zero();
    for j in 0..n {
        if j > 0 {
            conv.push(g_traj[j - 1].values());
        }
        let free = sg.apply_semigroup(u0, time.time(j))?;
        let lhs = u_traj[j].add(&conv.current())?;
        let defect = lhs.sub(&free)?.sub(path.field(j))?;
        worst = worst.max(defect.lq_norm(r)?);
    }
    Ok(worst)
}

/// Budget `δ (1 + 4 sup_n ‖g_n‖_r)` against which first-order residuals are judged.
pub fn first_order_budget<T: Real>(g_traj: &[GridFunction<T>], r: T, delta: T) -> Result<T> {
    Ok(delta * (T::one() + T::lit(4.0) * sup_norm(g_traj, r)?))
}

/// Fraction of space-time nodes whose point `(u, g)` lies within `tol` of the
/// filled graph `f̃` in the max-metric of the plane, i.e.
/// `f((u - tol)-) - tol <= g <= f((u + tol)+) + tol`.
pub fn inclusion_check<T: Real>(
    u_traj: &[GridFunction<T>],
    g_traj: &[GridFunction<T>],
    f: &MonotoneGraph<T>,
    tol: T,
) -> Result<T> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "inclusion tolerance {tol} must be > 0"
        )));
    }
    if u_traj.len() != g_traj.len() {
        return Err(Error::GridMismatch {
            left: u_traj.len(),
            right: g_traj.len(),
        });
    }
    let mut hits = 0usize;
    let mut total = 0usize;
    for (u, g) in u_traj.iter().zip(g_traj) {
        if u.grid() != g.grid() {
            return Err(Error::GridMismatch {
                left: u.len(),
                right: g.len(),
            });
        }
        for (&x, &y) in u.values().iter().zip(g.values()) {
            total += 1;
            if f.left_limit(x - tol) - tol <= y && y <= f.right_limit(x + tol) + tol {
                hits += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::EmptyInput("inclusion check trajectory"));
    }
    Ok(T::count(hits) / T::count(total))
}

/// `q* = rd ∨ (2d + q - 2)` for `q >= 2`, `q d` for `q ∈ (1, 2)`.
pub fn qstar<T: Real>(q: T, r: T, d: T) -> Result<T> {
    let mut bad = Vec::new();
    if !(q > T::one()) {
        bad.push(format!("q = {q} must be > 1"));
    }
    if !(r >= T::one()) || r > q {
        bad.push(format!("r = {r} must satisfy 1 <= r <= q"));
    }
    if !(d >= T::zero()) {
        bad.push(format!("d = {d} must be >= 0"));
    }
    if !bad.is_empty() {
        return Err(Error::InvalidExponents(bad.join("; ")));
    }
    let two = T::lit(2.0);
    Ok(if q >= two {
        (r * d).max(two * d + q - two)
    } else {
        q * d
    })
}

/// JSON manifest of a solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveManifest {
    pub drift: GraphSpec,
    pub noise: Option<NoiseManifest>,
    pub q: f64,
    pub r: f64,
    pub delta: f64,
    pub lambda_schedule: Vec<f64>,
    pub cauchy_tol: f64,
    pub root_tol: f64,
    pub final_lambda: f64,
    pub converged: bool,
    pub residual: f64,
    pub diagnostics: Vec<LambdaDiagnostics>,
}

impl<T: Real> MildSolution<T> {
    pub fn manifest(
        &self,
        f: &MonotoneGraph<T>,
        path: &NoisePath<T>,
        config: &SolverConfig<T>,
    ) -> SolveManifest {
        SolveManifest {
            drift: f.spec().clone(),
            noise: path.manifest(),
            q: config.q.as_f64(),
            r: config.r.as_f64(),
            delta: config.delta.as_f64(),
            lambda_schedule: config.lambda_schedule.iter().map(|l| l.as_f64()).collect(),
            cauchy_tol: config.cauchy_tol.as_f64(),
            root_tol: config.root_tol.as_f64(),
            final_lambda: self.lambda.as_f64(),
            converged: self.converged,
            residual: self.residual.as_f64(),
            diagnostics: self.diagnostics.clone(),
        }
    }

    /// `u` in the `time,node,value` layout.
    pub fn write_csv<W: Write>(&self, out: &mut W, path: &NoisePath<T>) -> std::io::Result<()> {
        write_trajectory_csv(out, path.time_grid(), &self.u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_space::Grid;
    use crate::noise::{sample_path, DiffusionSpec};

    fn setup(m: usize) -> HeatSemigroup<f64> {
        HeatSemigroup::new(Grid::new(m).unwrap(), 1.0).unwrap()
    }

    fn graph(spec: GraphSpec) -> MonotoneGraph<f64> {
        MonotoneGraph::from_spec(&spec).unwrap()
    }

    #[test]
    fn zero_drift_is_free_evolution() {
        let sg = setup(15);
        let path =
            sample_path(&DiffusionSpec::power_law(1.0, 1.0), &sg, 0.5, 1.0 / 64.0, 1).unwrap();
        let u0 = GridFunction::from_fn(*sg.grid(), |x| (std::f64::consts::PI * x).sin()).unwrap();
        let u =
            solve_regularized(&graph(GraphSpec::Zero), 0.1, &u0, &path, &sg, 1.0 / 64.0).unwrap();
        assert_eq!(u.len(), 33);
        assert_eq!(u[0], u0);
        for (n, un) in u.iter().enumerate() {
            let expected = sg
                .apply_semigroup(&u0, n as f64 / 64.0)
                .unwrap()
                .add(path.field(n))
                .unwrap();
            assert!(un.sub(&expected).unwrap().max_norm() <= 1e-12);
        }
    }

    #[test]
    fn rest_state() {
        let sg = setup(15);
        let zero_path = NoisePath::zero(&sg, 1.0, 1.0 / 32.0).unwrap();
        let u0 = GridFunction::zeros(*sg.grid());
        for spec in GraphSpec::test_suite() {
            let u =
                solve_regularized(&graph(spec), 0.05, &u0, &zero_path, &sg, 1.0 / 32.0).unwrap();
            assert!(u.iter().all(|x| x.max_norm() == 0.0));
        }
    }

    #[test]
    fn node_step_solves_implicit_equation() {
        let sg = setup(7);
        let f = graph(GraphSpec::Cube);
        let delta = 1.0 / 16.0;
        let lambda = 0.05;
        let path = sample_path(&DiffusionSpec::power_law(2.0, 0.5), &sg, 1.0, delta, 4).unwrap();
        let u0 = GridFunction::constant(*sg.grid(), 1.5);
        let run = solve_regularized_run(&f, lambda, &u0, &path, &sg, delta, 1e-13).unwrap();
        let view = YosidaView::new(&f, lambda, 1e-13).unwrap();
        let v = run.v(&path);
        for n in 0..path.steps() {
            let a = sg.apply_semigroup(&v[n], delta).unwrap();
            for i in 0..7 {
                let w = run.u[n + 1].values()[i];
                let b = a.values()[i] + path.field(n + 1).values()[i];
                let fw = view.yosida(w).unwrap();
                assert!((w + delta * fw - b).abs() < 1e-10);
                assert!((run.g[n + 1].values()[i] - fw).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn extract_g_examples() {
        let g = Grid::new(7).unwrap();
        let cube = graph(GraphSpec::Cube);
        let two = vec![GridFunction::constant(g, 2.0)];
        let out = extract_g(&two, &cube, 1e-6).unwrap();
        assert!(out[0].values().iter().all(|v| (v - 8.0).abs() < 1e-4));
        let half = vec![GridFunction::constant(g, 0.5)];
        let out = extract_g(&half, &graph(GraphSpec::Sign), 1.0).unwrap();
        assert!(out[0].values().iter().all(|v| (v - 0.5).abs() < 1e-12));
        let zero = vec![GridFunction::zeros(g)];
        assert_eq!(extract_g(&zero, &cube, 0.3).unwrap()[0].max_norm(), 0.0);
    }

    #[test]
    fn qstar_examples() {
        assert_eq!(qstar(2.0, 2.0, 3.0).unwrap(), 6.0);
        assert_eq!(qstar(1.5, 1.0, 3.0).unwrap(), 4.5);
        assert_eq!(qstar(4.0, 1.0, 1.0).unwrap(), 4.0);
        assert!(matches!(
            qstar(1.0, 1.0, 1.0),
            Err(Error::InvalidExponents(_))
        ));
        assert!(qstar(2.0, 3.0, 1.0).is_err());
        assert!(qstar(2.0, 0.5, 1.0).is_err());
        assert!(qstar(2.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn config_violations_are_all_listed() {
        let mut c = SolverConfig::new(0.5, 2.0, 0.0).with_schedule(vec![0.1, 0.2]);
        c.cauchy_tol = -1.0;
        let v = c.violations();
        assert_eq!(v.len(), 5, "{v:?}");
        assert!(SolverConfig::new(2.0, 2.0, 0.01).validate().is_ok());
    }

    #[test]
    fn zero_drift_converges_at_first_lambda() {
        let sg = setup(15);
        let path =
            sample_path(&DiffusionSpec::power_law(1.0, 1.0), &sg, 1.0, 1.0 / 64.0, 2).unwrap();
        let u0 = GridFunction::from_fn(*sg.grid(), |x| x * (1.0 - x)).unwrap();
        let cfg = SolverConfig::new(2.0, 2.0, 1.0 / 64.0);
        let sol = solve_mild(&graph(GraphSpec::Zero), &u0, &path, &sg, &cfg).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.diagnostics.len(), 1);
        assert_eq!(sol.gaps(), vec![0.0]);
        assert!(sol.residual <= 1e-12);
    }

    #[test]
    fn residual_and_inclusion_sanity() {
        let sg = setup(15);
        let delta = 1.0 / 64.0;
        let path = sample_path(&DiffusionSpec::power_law(0.5, 1.0), &sg, 1.0, delta, 3).unwrap();
        let u0 = GridFunction::from_fn(*sg.grid(), |x| (std::f64::consts::PI * x).sin()).unwrap();
        let f = graph(GraphSpec::Cube);
        let cfg = SolverConfig::new(2.0, 2.0, delta)
            .with_schedule(geometric_schedule(0.25, 18))
            .with_cauchy_tol(1e-7);
        let sol = solve_mild(&f, &u0, &path, &sg, &cfg).unwrap();
        assert!(sol.residual > 0.0);
        assert!(sol.residual <= 10.0 * first_order_budget(&sol.g, 2.0, delta).unwrap());
        assert!(inclusion_check(&sol.u, &sol.g, &f, 1e-4).unwrap() >= 0.999);
        let shifted: Vec<_> = sol.g.iter().map(|g| g.map(|y| y + 1.0)).collect();
        assert!(inclusion_check(&sol.u, &shifted, &f, 1e-4).unwrap() < 0.01);
        assert!(
            residual_check(&sol.u, &shifted, &u0, &path, &sg, 2.0).unwrap() > 10.0 * sol.residual
        );
        let exact: Vec<_> = sol.u.iter().map(|u| u.map(|x| x * x * x)).collect();
        assert_eq!(inclusion_check(&sol.u, &exact, &f, 1e-12).unwrap(), 1.0);
    }

    #[test]
    fn csv_and_manifest() {
        let sg = setup(3);
        let delta = 0.25;
        let path = sample_path(&DiffusionSpec::power_law(1.0, 1.0), &sg, 0.5, delta, 8).unwrap();
        let u0 = GridFunction::zeros(*sg.grid());
        let f = graph(GraphSpec::Sign);
        let cfg = SolverConfig::new(2.0, 1.0, delta);
        let sol = solve_mild(&f, &u0, &path, &sg, &cfg).unwrap();
        let mut buf = Vec::new();
        sol.write_csv(&mut buf, &path).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 3 * 3);
        assert!(text.starts_with("time,node,value\n"));
        let json = serde_json::to_string(&sol.manifest(&f, &path, &cfg)).unwrap();
        let back: SolveManifest = serde_json::from_str(&json).unwrap();
        assert_eq!(back.drift, GraphSpec::Sign);
        assert_eq!(back.noise.unwrap().seed, 8);
    }
}
