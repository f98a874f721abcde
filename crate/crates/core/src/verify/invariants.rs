use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde_json::json;

use super::lemmas::{jq_excess, xya_excess};
use super::report::{Series, StudyReport, Threshold};
use super::StudySetup;
use crate::error::Result;
use crate::grid_space::{gamma_eps, GridFunction};
use crate::noise::NoisePath;
use crate::scalar_monotone::{GraphSpec, MonotoneGraph, Section, YosidaView, DEFAULT_QUAD_TOL};
use crate::semigroup::HeatSemigroup;
use crate::solver::{solve_regularized_run, sup_gap, RegularizedRun};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ScalarIdentityOutcome {
    /// `max |x - y - (R_λx - R_μy + λ f_λ(x) - μ f_μ(y))|`.
    pub identity: f64,
    /// Largest excess of `(a-b)(λa - μb) <= (a-b)(x-y)`, `a = f_λ(x)`, `b = f_μ(y)`.
    pub lower_first: f64,
    /// Largest excess of `-(λ+μ)(a² + b²) <= (a-b)(λa - μb)`.
    pub lower_second: f64,
    /// `max |(f_λ)_μ(x) - f_{λ+μ}(x)|`.
    pub semigroup: f64,
}

/// Samples `x, y ∈ [-3, 3]` and `λ, μ` log-uniform in `[0.2, 5]`.
pub fn scalar_identity_check(
    spec: &GraphSpec,
    samples: usize,
    seed: u64,
    root_tol: f64,
) -> Result<ScalarIdentityOutcome> {
    let f = MonotoneGraph::<f64>::from_spec(spec)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut out = ScalarIdentityOutcome {
        identity: 0.0,
        lower_first: f64::NEG_INFINITY,
        lower_second: f64::NEG_INFINITY,
        semigroup: 0.0,
    };
    let log_range = (0.2f64.ln(), 5f64.ln());
    for _ in 0..samples {
        let x = rng.random_range(-3.0..3.0);
        let y = rng.random_range(-3.0..3.0);
        let lambda = rng.random_range(log_range.0..log_range.1).exp();
        let mu = rng.random_range(log_range.0..log_range.1).exp();
        let vl = YosidaView::new(&f, lambda, root_tol)?;
        let vm = YosidaView::new(&f, mu, root_tol)?;
        let (rx, a) = vl.resolvent_and_yosida(x)?;
        let (ry, b) = vm.resolvent_and_yosida(y)?;
        out.identity = out
            .identity
            .max(((x - y) - (rx - ry + lambda * a - mu * b)).abs());
        let mid = (a - b) * (lambda * a - mu * b);
        out.lower_first = out.lower_first.max(mid - (a - b) * (x - y));
        out.lower_second = out.lower_second.max(-(lambda + mu) * (a * a + b * b) - mid);
        let nested = YosidaView::new(&vl, mu, root_tol)?.yosida(x)?;
        let direct = YosidaView::new(&f, lambda + mu, root_tol)?.yosida(x)?;
        out.semigroup = out.semigroup.max((nested - direct).abs());
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct InequalityOutcome {
    /// Largest chain excess for `a ∈ [0, 1]`.
    pub xya_concave: f64,
    /// Largest chain excess for `a ∈ [1, 8]`.
    pub xya_convex: f64,
    /// Largest excess of the `j_q` Hölder bound over `q ∈ {1.1, 1.5, 2}`.
    pub jq: f64,
}

/// `x, y ∈ [0, 1]` for the power chains, `x, y ∈ [-2, 2]` for `j_q`.
pub fn inequality_suite(samples: usize, seed: u64) -> InequalityOutcome {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut out = InequalityOutcome {
        xya_concave: f64::NEG_INFINITY,
        xya_convex: f64::NEG_INFINITY,
        jq: f64::NEG_INFINITY,
    };
    for _ in 0..samples {
        let (x, y) = (rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0));
        out.xya_concave = out
            .xya_concave
            .max(xya_excess(x, y, rng.random_range(0.0..=1.0)));
        out.xya_convex = out
            .xya_convex
            .max(xya_excess(x, y, rng.random_range(1.0..=8.0)));
        let (x, y) = (rng.random_range(-2.0..=2.0), rng.random_range(-2.0..=2.0));
        for q in [1.1, 1.5, 2.0] {
            out.jq = out.jq.max(jq_excess(x, y, q));
        }
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SemigroupOutcome {
    /// `max ‖S(0)φ - φ‖_∞`.
    pub identity: f64,
    /// `max ‖S(t)S(s)φ - S(t+s)φ‖_∞`.
    pub composition: f64,
    /// Largest `‖S(t)φ‖_q - ‖φ‖_q` over `q ∈ {1, 1.5, 2, 3}` and the max norm.
    pub contraction: f64,
    /// Smallest entry of `S(t)|φ|`.
    pub positivity: f64,
    /// Smallest `⟨Aφ, γ_ε(φ)⟩` over `ε ∈ {1, 1e-2, 1e-4}`.
    pub sign_condition: f64,
}

/// Random `φ` with entries in `[-1, 1]` and times `t, s ∈ [0, 0.1]`.
pub fn semigroup_axiom_check(
    sg: &HeatSemigroup<f64>,
    samples: usize,
    seed: u64,
) -> Result<SemigroupOutcome> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let grid = *sg.grid();
    let mut out = SemigroupOutcome {
        positivity: f64::INFINITY,
        sign_condition: f64::INFINITY,
        ..Default::default()
    };
    out.contraction = f64::NEG_INFINITY;
    for _ in 0..samples {
        let phi = GridFunction::new(
            grid,
            (0..grid.len())
                .map(|_| rng.random_range(-1.0..=1.0))
                .collect(),
        )?;
        let (t, s) = (rng.random_range(0.0..0.1), rng.random_range(0.0..0.1));
        out.identity = out
            .identity
            .max(sg.apply_semigroup(&phi, 0.0)?.sub(&phi)?.max_norm());
        let st = sg.apply_semigroup(&phi, t)?;
        let sst = sg.apply_semigroup(&st, s)?;
        out.composition = out
            .composition
            .max(sst.sub(&sg.apply_semigroup(&phi, t + s)?)?.max_norm());
        for q in [1.0, 1.5, 2.0, 3.0] {
            out.contraction = out.contraction.max(st.lq_norm(q)? - phi.lq_norm(q)?);
        }
        out.contraction = out.contraction.max(st.max_norm() - phi.max_norm());
        let pos = sg.apply_semigroup(&phi.map(f64::abs), t)?;
        out.positivity = out
            .positivity
            .min(pos.values().iter().cloned().fold(f64::INFINITY, f64::min));
        let aphi = sg.apply_generator(&phi)?;
        for eps in [1.0, 1e-2, 1e-4] {
            out.sign_condition = out
                .sign_condition
                .min(aphi.pairing(&phi.map(|v| gamma_eps(v, eps)))?);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AprioriOutcome {
    /// Largest `‖v_n‖_q - (‖u₀‖_q + 4 Σ_{j=1}^n δ ‖f̃^max(z_j)‖_q)` over runs and steps.
    pub constant4_excess: f64,
    /// Largest `‖v_n‖_q² - (‖u₀‖_q² + 2 Σ_{j=1}^n δ ‖φ(z_j)‖_{q/2})`; `None` for `q < 2`.
    pub constant2_excess: Option<f64>,
}

/// Checks both a-priori inequalities for every run (all sharing `path` and `u₀`).
/// The sums run over `j = 1..=n`, matching the right-endpoint freezing of `z`.
pub fn apriori_check(
    f: &MonotoneGraph<f64>,
    path: &NoisePath<f64>,
    u0: &GridFunction<f64>,
    runs: &[RegularizedRun<f64>],
    q: f64,
) -> Result<AprioriOutcome> {
    let delta = path.step();
    let steps = path.steps();
    let mut drift_sum = vec![0.0; steps + 1];
    let mut energy_sum = vec![0.0; steps + 1];
    let with_energy = q >= 2.0;
    for n in 1..=steps {
        let z = path.field(n);
        drift_sum[n] =
            drift_sum[n - 1] + delta * z.map(|x| f.section(x, Section::MaxNorm)).lq_norm(q)?;
        if with_energy {
            energy_sum[n] = energy_sum[n - 1]
                + delta
                    * z.map(|x| f.primitive(x, DEFAULT_QUAD_TOL))
                        .lq_norm(q / 2.0)?;
        }
    }
    let u0q = u0.lq_norm(q)?;
    let mut c4 = f64::NEG_INFINITY;
    let mut c2 = f64::NEG_INFINITY;
    for run in runs {
        for (n, v) in run.v(path).iter().enumerate() {
            let vq = v.lq_norm(q)?;
            c4 = c4.max(vq - (u0q + 4.0 * drift_sum[n]));
            if with_energy {
                c2 = c2.max(vq * vq - (u0q * u0q + 2.0 * energy_sum[n]));
            }
        }
    }
    Ok(AprioriOutcome {
        constant4_excess: c4,
        constant2_excess: with_energy.then_some(c2),
    })
}

/// `sup_t ‖u¹ - u²‖_r / ‖u¹₀ - u²₀‖_r`.
pub fn contraction_check(a: &RegularizedRun<f64>, b: &RegularizedRun<f64>, r: f64) -> Result<f64> {
    let initial = a.u[0].sub(&b.u[0])?.lq_norm(r)?;
    Ok(sup_gap(&a.u, &b.u, r)? / initial)
}

/// The cheap invariants of every layer on the configured setup: scalar
/// identities for the standard drifts plus `drift`, inequality suites,
/// semigroup axioms, both a-priori bounds and pathwise contraction.
pub fn invariant_suite(
    setup: &StudySetup,
    drift: &GraphSpec,
    samples: usize,
) -> Result<StudyReport> {
    let mut inputs = setup.inputs();
    inputs
        .parameters
        .insert("drift".into(), json!(drift.label()));
    inputs.parameters.insert("samples".into(), json!(samples));
    let mut report = StudyReport::new(
        "invariants",
        "Resolvent identities, elementary inequalities, semigroup axioms, the a-priori bounds with \
         constants 4 and 2, and L^r contraction of the solution map hold on the configured setup.",
        inputs,
    );
    let tol = 10.0 * setup.solver.root_tol;
    let mut drifts = GraphSpec::test_suite();
    if !drifts.contains(drift) {
        drifts.push(drift.clone());
    }
    for (i, spec) in drifts.iter().enumerate() {
        let o = scalar_identity_check(spec, samples, i as u64, setup.solver.root_tol)?;
        let label = spec.label();
        report.check(Threshold::at_most(
            format!("{label}: resolvent identity"),
            o.identity,
            tol,
        ));
        report.check(Threshold::at_most(
            format!("{label}: lower bound (first)"),
            o.lower_first,
            tol,
        ));
        report.check(Threshold::at_most(
            format!("{label}: lower bound (second)"),
            o.lower_second,
            tol,
        ));
        report.check(Threshold::at_most(
            format!("{label}: Yosida semigroup"),
            o.semigroup,
            tol,
        ));
    }
    let ineq = inequality_suite(samples * 10, 17);
    report.check(Threshold::at_most(
        "power chain a in [0,1]",
        ineq.xya_concave,
        1e-12,
    ));
    report.check(Threshold::at_most(
        "power chain a in [1,8]",
        ineq.xya_convex,
        1e-12,
    ));
    report.check(Threshold::at_most("j_q Hoelder bound", ineq.jq, 1e-12));
    let sgo = semigroup_axiom_check(&setup.sg, samples.min(1000), 23)?;
    report.check(Threshold::at_most("S(0) = I", sgo.identity, 1e-10));
    report.check(Threshold::at_most(
        "S(t)S(s) = S(t+s)",
        sgo.composition,
        1e-10,
    ));
    report.check(Threshold::at_most(
        "L^q contraction",
        sgo.contraction,
        1e-10,
    ));
    report.check(Threshold::at_least("positivity", sgo.positivity, -1e-10));
    report.check(Threshold::at_least(
        "sign condition <A phi, gamma_eps(phi)>",
        sgo.sign_condition,
        -1e-10,
    ));

    let f = MonotoneGraph::<f64>::from_spec(drift)?;
    let u0 = &setup.u0;
    let bump = GridFunction::from_fn(*setup.sg.grid(), |x| (std::f64::consts::PI * x).sin())?;
    let u0b = u0.add(&bump)?;
    let cfg = &setup.solver;
    let per_seed = setup.fan_out(|seed| {
        let path = setup.path(seed)?;
        let mut runs = Vec::new();
        let mut ratio: f64 = 0.0;
        for &lambda in &cfg.lambda_schedule {
            let a =
                solve_regularized_run(&f, lambda, u0, &path, &setup.sg, cfg.delta, cfg.root_tol)?;
            let b =
                solve_regularized_run(&f, lambda, &u0b, &path, &setup.sg, cfg.delta, cfg.root_tol)?;
            for r in [1.0, cfg.r, 2.0] {
                ratio = ratio.max(contraction_check(&a, &b, r)?);
            }
            runs.push(a);
        }
        let mut excess4 = f64::NEG_INFINITY;
        let mut excess2 = f64::NEG_INFINITY;
        for q in [1.5, 2.0, 3.0, 4.0] {
            let o = apriori_check(&f, &path, u0, &runs, q)?;
            if q != 4.0 {
                excess4 = excess4.max(o.constant4_excess);
            }
            if q == 2.0 || q == 4.0 {
                excess2 = excess2.max(o.constant2_excess.expect("q >= 2"));
            }
        }
        Ok((seed, excess4, excess2, ratio))
    })?;
    let mut series = Series::new(&[
        "seed",
        "constant4_excess",
        "constant2_excess",
        "contraction_ratio",
    ]);
    for &(seed, e4, e2, ratio) in &per_seed {
        series.push(vec![seed as f64, e4, e2, ratio]);
    }
    let worst = |k: usize| {
        per_seed
            .iter()
            .map(|p| [p.1, p.2, p.3][k])
            .fold(f64::NEG_INFINITY, f64::max)
    };
    if !per_seed.is_empty() {
        report.check(Threshold::at_most(
            "a-priori bound, constant 4",
            worst(0),
            1e-8,
        ));
        report.check(Threshold::at_most(
            "a-priori bound, constant 2",
            worst(1),
            1e-8,
        ));
        report.check(Threshold::at_most(
            "contraction ratio",
            worst(2),
            1.0 + 1e-10,
        ));
    }
    report.series = series;
    Ok(report.finish(None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_space::Grid;

    #[test]
    fn identities_hold_for_suite() {
        for spec in GraphSpec::test_suite() {
            let o = scalar_identity_check(&spec, 300, 5, 1e-12).unwrap();
            assert!(o.identity <= 1e-11, "{spec:?} {o:?}");
            assert!(o.lower_first <= 1e-11, "{spec:?} {o:?}");
            assert!(o.lower_second <= 1e-11, "{spec:?} {o:?}");
            assert!(o.semigroup <= 1e-11, "{spec:?} {o:?}");
        }
    }

    #[test]
    fn inequalities_and_axioms() {
        let o = inequality_suite(5000, 1);
        assert!(
            o.xya_concave <= 1e-12 && o.xya_convex <= 1e-12 && o.jq <= 1e-12,
            "{o:?}"
        );
        let sg = HeatSemigroup::new(Grid::new(31).unwrap(), 1.0).unwrap();
        let s = semigroup_axiom_check(&sg, 100, 2).unwrap();
        assert_eq!(s.identity, 0.0);
        assert!(
            s.composition <= 1e-12 && s.contraction <= 1e-12 && s.positivity >= -1e-12,
            "{s:?}"
        );
        assert!(s.sign_condition >= 0.0, "{s:?}");
    }
}
