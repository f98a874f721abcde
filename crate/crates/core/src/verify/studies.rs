use serde_json::json;

use super::report::{Series, StudyReport, Threshold};
use super::{loglog_slope, strictly_decreasing, StudySetup};
use crate::error::{Error, Result};
use crate::grid_space::GridFunction;
use crate::noise::NoisePath;
use crate::scalar_monotone::{GraphSpec, MonotoneGraph, Section};
use crate::solver::{
    geometric_schedule, qstar, solve_mild, solve_regularized_run, sup_gap, sup_norm, RegularizedRun,
};

/// Integral of the `target` largest cells, each of measure `cell`, allowing a
/// fractional last cell.
pub fn worst_set_integral(values: &[f64], cell: f64, target: f64) -> f64 {
    let mut sorted: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut measure = 0.0;
    let mut total = 0.0;
    for v in sorted {
        if measure >= target {
            break;
        }
        let take = cell.min(target - measure);
        total += v * take;
        measure += take;
    }
    total
}

fn rate(q: f64) -> f64 {
    if q >= 2.0 {
        1.0 / q
    } else {
        (q - 1.0) / q
    }
}

fn non_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

/// Runs the whole schedule on one path, handing each run and its predecessor to `visit`.
fn sweep(
    f: &MonotoneGraph<f64>,
    setup: &StudySetup,
    u0: &GridFunction<f64>,
    path: &NoisePath<f64>,
    schedule: &[f64],
    mut visit: impl FnMut(&RegularizedRun<f64>, Option<&RegularizedRun<f64>>) -> Result<()>,
) -> Result<RegularizedRun<f64>> {
    let cfg = &setup.solver;
    let mut prev: Option<RegularizedRun<f64>> = None;
    for &lambda in schedule {
        let run = solve_regularized_run(f, lambda, u0, path, &setup.sg, cfg.delta, cfg.root_tol)?;
        visit(&run, prev.as_ref())?;
        prev = Some(run);
    }
    prev.ok_or(Error::EmptyInput("lambda schedule"))
}

/// Consecutive sup-`L^q` gaps along the schedule, their monotonicity and the
/// fitted log-log slope against `λ`.
pub fn cauchy_rate_study(spec: &GraphSpec, q: f64, setup: &StudySetup) -> Result<StudyReport> {
    if !(q > 1.0) {
        return Err(Error::InvalidExponent {
            value: q,
            requirement: "q > 1",
        });
    }
    let f = MonotoneGraph::<f64>::from_spec(spec)?;
    let floor = rate(q) - 0.15;
    let mut inputs = setup.inputs();
    inputs
        .parameters
        .insert("drift".into(), json!(spec.label()));
    inputs.parameters.insert("q".into(), json!(q));
    let mut report = StudyReport::new(
        "cauchy",
        "sup_t |u_lambda - u_mu|_q decays at least like a power of lambda + mu: exponent 1/q for q >= 2, \
         (q-1)/q for q in (1,2).",
        inputs,
    );
    let schedule = &setup.solver.lambda_schedule;
    let per_seed = setup.fan_out(|seed| {
        let path = setup.path(seed)?;
        let mut gaps = Vec::new();
        sweep(&f, setup, &setup.u0, &path, schedule, |run, prev| {
            if let Some(p) = prev {
                gaps.push(sup_gap(&run.u, &p.u, q)?);
            }
            Ok(())
        })?;
        Ok((seed, gaps))
    })?;
    let mut series = Series::new(&["seed", "lambda", "gap"]);
    let mut min_slope = f64::INFINITY;
    let mut slopes = Vec::new();
    let mut non_monotone = 0usize;
    let mut max_gap: f64 = 0.0;
    for (seed, gaps) in &per_seed {
        for (j, g) in gaps.iter().enumerate() {
            series.push(vec![*seed as f64, schedule[j + 1], *g]);
            max_gap = max_gap.max(*g);
        }
    }
    let degenerate = max_gap <= 1e-10;
    for (_, gaps) in &per_seed {
        if degenerate {
            continue;
        }
        if !strictly_decreasing(gaps) {
            non_monotone += 1;
        }
        let s = loglog_slope(&schedule[1..], gaps).unwrap_or(f64::NEG_INFINITY);
        slopes.push(s);
        min_slope = min_slope.min(s);
    }
    report.fit("rate", rate(q));
    report.fit("max_gap", max_gap);
    if degenerate {
        report.note("all gaps vanish (degenerate drift)");
        report.check(Threshold::at_most("max gap", max_gap, 1e-10));
    } else {
        report.fit("min_slope", min_slope);
        report.fit(
            "mean_slope",
            slopes.iter().sum::<f64>() / slopes.len() as f64,
        );
        report.check(Threshold::at_most(
            "seeds with non-decreasing gaps",
            non_monotone as f64,
            0.0,
        ));
        report.check(Threshold::at_least("min log-log slope", min_slope, floor));
    }
    report.series = series;
    Ok(report.finish(None))
}

/// `L¹` Cauchy gaps, `Γ_{λ+μ}` gaps, the `Γ` deviation bound and the
/// two-scale equiintegrability proxy for a bounded drift.
pub fn l1_convergence_study(spec: &GraphSpec, setup: &StudySetup) -> Result<StudyReport> {
    let f = MonotoneGraph::<f64>::from_spec(spec)?;
    let sup_f = f.sup_abs().ok_or_else(|| {
        Error::InvalidParameter(format!(
            "l1 study needs a bounded drift, got {}",
            spec.label()
        ))
    })?;
    let mut inputs = setup.inputs();
    inputs
        .parameters
        .insert("drift".into(), json!(spec.label()));
    let mut report = StudyReport::new(
        "l1",
        "For a bounded drift the regularized solutions are Cauchy in C([0,T];L^1) and f_lambda(u_lambda) is \
         equiintegrable on [0,T] x G.",
        inputs,
    );
    let grid = *setup.sg.grid();
    let delta = setup.solver.delta;
    let cell = delta * grid.spacing();
    let total = setup.horizon * grid.measure();
    let scales = [0.1, 0.01];
    let schedule = &setup.solver.lambda_schedule;
    let per_seed = setup.fan_out(|seed| {
        let path = setup.path(seed)?;
        let mut l1 = Vec::new();
        let mut gamma = Vec::new();
        let mut deviation = f64::NEG_INFINITY;
        let mut worst = [0.0f64; 2];
        let mut product: f64 = 0.0;
        sweep(&f, setup, &setup.u0, &path, schedule, |run, prev| {
            let steps = run.g.len() - 1;
            let values: Vec<f64> = run.g[..steps]
                .iter()
                .flat_map(|g| g.values().iter().copied())
                .collect();
            for (w, s) in worst.iter_mut().zip(scales) {
                *w = w.max(worst_set_integral(&values, cell, s * total));
            }
            let gu: f64 = run.g[..steps]
                .iter()
                .zip(&run.u)
                .map(|(g, u)| {
                    delta
                        * g.zip_with(u, |a, b| a * b)
                            .and_then(|gu| gu.lq_norm(1.0))
                            .unwrap_or(f64::NAN)
                })
                .sum();
            product = product.max(gu);
            if let Some(p) = prev {
                let eps = run.lambda + p.lambda;
                let mut gap1: f64 = 0.0;
                let mut gapg: f64 = 0.0;
                for (a, b) in run.u.iter().zip(&p.u) {
                    let d = a.sub(b)?;
                    let n1 = d.lq_norm(1.0)?;
                    let g = d.big_gamma(eps);
                    gap1 = gap1.max(n1);
                    gapg = gapg.max(g);
                    deviation = deviation.max(g - n1 - eps.sqrt() / 4.0 * grid.measure());
                }
                l1.push(gap1);
                gamma.push(gapg);
            }
            Ok(())
        })?;
        Ok((seed, l1, gamma, deviation, worst, product))
    })?;
    let mut series = Series::new(&["seed", "lambda", "l1_gap", "gamma_gap"]);
    let mut l1_bad = 0usize;
    let mut gamma_bad = 0usize;
    let mut final_gap: f64 = 0.0;
    let mut deviation = f64::NEG_INFINITY;
    let mut worst = [0.0f64; 2];
    let mut product: f64 = 0.0;
    for (seed, l1, gamma, dev, w, p) in &per_seed {
        for j in 0..l1.len() {
            series.push(vec![*seed as f64, schedule[j + 1], l1[j], gamma[j]]);
        }
        l1_bad += usize::from(!non_increasing(l1));
        gamma_bad += usize::from(!non_increasing(gamma));
        final_gap = final_gap.max(l1.last().copied().unwrap_or(0.0));
        deviation = deviation.max(*dev);
        worst[0] = worst[0].max(w[0]);
        worst[1] = worst[1].max(w[1]);
        product = product.max(*p);
    }
    report.check(Threshold::at_most(
        "seeds with increasing L1 gaps",
        l1_bad as f64,
        0.0,
    ));
    report.check(Threshold::at_most(
        "final L1 gap",
        final_gap,
        setup.solver.cauchy_tol,
    ));
    report.check(Threshold::at_most(
        "seeds with increasing Gamma gaps",
        gamma_bad as f64,
        0.0,
    ));
    report.check(Threshold::at_most(
        "Gamma deviation excess over sqrt(eps)/4 |G|",
        deviation,
        1e-12,
    ));
    for (k, s) in scales.iter().enumerate() {
        let slack = setup.solver.root_tol / schedule.last().copied().unwrap_or(1.0);
        let bound = (sup_f + slack) * s * total;
        report.fit(format!("worst set integral at {s}"), worst[k]);
        report.check(Threshold::at_most(
            format!("worst set integral at {s}"),
            worst[k],
            bound,
        ));
    }
    if worst[0] > 0.0 {
        report.check(Threshold::at_most(
            "worst set integral decreases with the set",
            worst[1],
            worst[0],
        ));
    }
    report.fit("sup f_lambda(u_lambda) u_lambda in L1", product);
    report.series = series;
    Ok(report.finish(None))
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Monte Carlo estimate of `E sup_t ‖u_λ‖_q^p` per `λ`, compared across the
/// schedule and against the path-wise bound `(‖u₀‖_q + 4 Σ δ ‖f̃^max(z)‖_q + sup ‖z‖_q)^p`.
pub fn moment_study(spec: &GraphSpec, q: f64, p: f64, setup: &StudySetup) -> Result<StudyReport> {
    if setup.seeds.len() < 100 {
        return Err(Error::InvalidParameter(format!(
            "moment study needs >= 100 paths, got {}",
            setup.seeds.len()
        )));
    }
    let f = MonotoneGraph::<f64>::from_spec(spec)?;
    let d = f.growth_exponent();
    let mut inputs = setup.inputs();
    inputs
        .parameters
        .insert("drift".into(), json!(spec.label()));
    inputs.parameters.insert("q".into(), json!(q));
    inputs.parameters.insert("p".into(), json!(p));
    let mut report = StudyReport::new(
        "moments",
        "E sup_t |u_lambda|_q^p is bounded independently of lambda.",
        inputs,
    );
    let schedule = &setup.solver.lambda_schedule;
    let u0q = setup.u0.lq_norm(q)?;
    let per_seed = setup.fan_out(|seed| {
        let path = setup.path(seed)?;
        let mut drift = 0.0;
        for n in 1..=path.steps() {
            drift += path.step()
                * path
                    .field(n)
                    .map(|x| f.section(x, Section::MaxNorm))
                    .lq_norm(q)?;
        }
        let bound = (u0q + 4.0 * drift + path.norm_c_lq(q)?).powf(p);
        let mut values = Vec::new();
        sweep(&f, setup, &setup.u0, &path, schedule, |run, _| {
            values.push(sup_norm(&run.u, q)?.powf(p));
            Ok(())
        })?;
        Ok((bound, values))
    })?;
    let bounds: Vec<f64> = per_seed.iter().map(|s| s.0).collect();
    let (bound_mean, _) = mean_and_se(&bounds);
    let mut series = Series::new(&["lambda", "mean", "standard_error"]);
    let mut stats = Vec::new();
    for (j, &lambda) in schedule.iter().enumerate() {
        let xs: Vec<f64> = per_seed.iter().map(|s| s.1[j]).collect();
        let (m, se) = mean_and_se(&xs);
        series.push(vec![lambda, m, se]);
        stats.push((m, se));
    }
    let (hi, lo) = stats.iter().fold(
        ((f64::NEG_INFINITY, 0.0), (f64::INFINITY, 0.0)),
        |(hi, lo), &s| {
            (
                if s.0 > hi.0 { s } else { hi },
                if s.0 < lo.0 { s } else { lo },
            )
        },
    );
    let combined = (hi.1 * hi.1 + lo.1 * lo.1).sqrt();
    report.fit("p_star", p * (2.0 * d + q - 2.0) / q);
    report.fit("bound_mean", bound_mean);
    report.fit("spread", hi.0 - lo.0);
    report.fit("combined_standard_error", combined);
    report.check(Threshold::at_most(
        "spread across lambda",
        hi.0 - lo.0,
        3.0 * combined,
    ));
    report.check(Threshold::at_most("largest estimate", hi.0, bound_mean));
    report.series = series;
    Ok(report.finish(None))
}

/// Fits `C` in `max_n ‖u(t_n)‖_{q*} <= C (1 + ξ + ‖u₀‖_{q*})` on the first half
/// of the seeds, with `u₀` scaled by 1, 2, 4 and 8, and checks the frozen `C`
/// on the remaining seeds.
pub fn propagation_study(
    spec: &GraphSpec,
    q: f64,
    r: f64,
    setup: &StudySetup,
) -> Result<StudyReport> {
    let f = MonotoneGraph::<f64>::from_spec(spec)?;
    let d = f.growth_exponent();
    let qs = qstar(q, r, d)?.max(q);
    let mut inputs = setup.inputs();
    inputs
        .parameters
        .insert("drift".into(), json!(spec.label()));
    inputs.parameters.insert("q".into(), json!(q));
    inputs.parameters.insert("r".into(), json!(r));
    let mut report = StudyReport::new(
        "propagation",
        "Integrability of the initial datum in L^{q*} propagates: sup_t |u|_{q*} <= C (1 + xi + |u0|_{q*}).",
        inputs,
    );
    let scales = [1.0, 2.0, 4.0, 8.0];
    let per_seed = setup.fan_out(|seed| {
        let path = setup.path(seed)?;
        let xi = path.norm_c_lq(qs)? + path.norm_ld_lqd(d, qs)?.powf(d.max(1.0));
        let mut ratios = Vec::new();
        for s in scales {
            let u0 = setup.u0.scale(s);
            let sol = solve_mild(&f, &u0, &path, &setup.sg, &setup.solver)?;
            let lhs = sup_norm(&sol.u, qs)?;
            ratios.push((xi, u0.lq_norm(qs)?, lhs, lhs / (1.0 + xi + u0.lq_norm(qs)?)));
        }
        Ok((seed, ratios))
    })?;
    let mut series = Series::new(&["seed", "scale", "xi", "u0_norm", "sup_u_norm", "ratio"]);
    let mut c: f64 = 0.0;
    let mut probe: f64 = 0.0;
    let calibration = per_seed.len().div_ceil(2);
    for (i, (seed, ratios)) in per_seed.iter().enumerate() {
        for (k, &(xi, u0n, lhs, ratio)) in ratios.iter().enumerate() {
            series.push(vec![*seed as f64, scales[k], xi, u0n, lhs, ratio]);
            if i < calibration {
                c = c.max(ratio);
            } else {
                probe = probe.max(ratio);
            }
        }
    }
    report.fit("q_star", qs);
    report.fit("calibrated_c", c);
    report.fit("largest_probe_ratio", probe);
    report.check(Threshold::at_most(
        "probe ratio over frozen C",
        probe,
        1.05 * c.max(f64::MIN_POSITIVE),
    ));
    report.series = series;
    let reason = (per_seed.len() < 2).then(|| "no seeds left after calibration".to_string());
    Ok(report.finish(reason))
}

/// `u₀(x) = x^{-1/(q+1/2)}` truncated at `2^k`: solutions of truncations obey
/// `sup_t ‖u^m - u^{m'}‖_q <= ‖u₀^m - u₀^{m'}‖_q` at every `λ`, and the limit
/// does not depend on the schedule.
pub fn contraction_extension_study(
    spec: &GraphSpec,
    q: f64,
    setup: &StudySetup,
) -> Result<StudyReport> {
    if !(q > 1.0) {
        return Err(Error::InvalidExponent {
            value: q,
            requirement: "q > 1",
        });
    }
    let f = MonotoneGraph::<f64>::from_spec(spec)?;
    let mut inputs = setup.inputs();
    inputs
        .parameters
        .insert("drift".into(), json!(spec.label()));
    inputs.parameters.insert("q".into(), json!(q));
    let mut report = StudyReport::new(
        "extension",
        "The solution map is an L^q contraction, so it extends uniquely from bounded to L^q initial data.",
        inputs,
    );
    let grid = *setup.sg.grid();
    let spike = GridFunction::from_fn(grid, |x| x.powf(-1.0 / (q + 0.5)))?;
    let levels: Vec<f64> = (0..5).map(|k| 2f64.powi(k)).collect();
    let data: Vec<GridFunction<f64>> = levels.iter().map(|&c| spike.map(|v| v.min(c))).collect();
    let schedule = &setup.solver.lambda_schedule;
    let cfg = &setup.solver;
    let per_seed = setup.fan_out(|seed| {
        let path = setup.path(seed)?;
        let mut ratio: f64 = 0.0;
        let mut limit_gaps = Vec::new();
        for &lambda in schedule {
            let runs = data
                .iter()
                .map(|u0| {
                    solve_regularized_run(&f, lambda, u0, &path, &setup.sg, cfg.delta, cfg.root_tol)
                })
                .collect::<Result<Vec<_>>>()?;
            for i in 0..runs.len() {
                for j in i + 1..runs.len() {
                    let initial = data[i].sub(&data[j])?.lq_norm(q)?;
                    let gap = sup_gap(&runs[i].u, &runs[j].u, q)?;
                    if initial > 0.0 {
                        ratio = ratio.max(gap / initial);
                    } else {
                        ratio = ratio.max(if gap > 0.0 { f64::INFINITY } else { 0.0 });
                    }
                }
            }
            limit_gaps = (1..runs.len())
                .map(|i| sup_gap(&runs[i].u, &runs[i - 1].u, q))
                .collect::<Result<_>>()?;
        }
        let full = &data[data.len() - 1];
        let main = solve_mild(&f, full, &path, &setup.sg, cfg)?;
        let alt_cfg = cfg.clone().with_schedule(geometric_schedule(
            schedule[0] / 2f64.sqrt(),
            schedule.len(),
        ));
        let alt = solve_mild(&f, full, &path, &setup.sg, &alt_cfg)?;
        let uniq = sup_gap(&main.u, &alt.u, cfg.r)?;
        let converged = main.converged && alt.converged;
        Ok((seed, ratio, limit_gaps, uniq, converged))
    })?;
    let mut series = Series::new(&["seed", "level", "limit_gap", "initial_gap"]);
    let mut ratio: f64 = 0.0;
    let mut uniq: f64 = 0.0;
    let mut unconverged = 0usize;
    for (seed, r, gaps, u, conv) in &per_seed {
        for (i, g) in gaps.iter().enumerate() {
            let initial = data[i + 1].sub(&data[i])?.lq_norm(q)?;
            series.push(vec![*seed as f64, levels[i + 1], *g, initial]);
        }
        ratio = ratio.max(*r);
        uniq = uniq.max(*u);
        unconverged += usize::from(!conv);
    }
    report.fit("spike_norm_q", spike.lq_norm(q)?);
    report.check(Threshold::at_most(
        "contraction ratio over truncations",
        ratio,
        1.0 + 1e-10,
    ));
    report.check(Threshold::at_most(
        "alternate schedule deviation",
        uniq,
        2.0 * cfg.cauchy_tol,
    ));
    let reason = (unconverged > 0)
        .then(|| format!("{unconverged} seeds exhausted a schedule before cauchy_tol"));
    report.series = series;
    Ok(report.finish(reason))
}
