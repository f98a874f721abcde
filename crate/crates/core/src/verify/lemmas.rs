use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde_json::json;

use super::report::{Series, StudyInputs, StudyReport, Threshold};
use super::{loglog_slope, strictly_decreasing};
use crate::error::{Error, Result};
use crate::grid_space::{jq_scalar, GridFunction};
use crate::semigroup::HeatSemigroup;

/// Largest excess in the chains
/// `2^{a-1}(x^a + y^a) <= (x+y)^a <= x^a + y^a` (`a ∈ [0,1]`) and
/// `x^a + y^a <= (x+y)^a <= 2^{a-1}(x^a + y^a)` (`a >= 1`), for `x, y >= 0`.
/// Non-positive means both inequalities hold.
pub fn xya_excess(x: f64, y: f64, a: f64) -> f64 {
    let sum = x.powf(a) + y.powf(a);
    let mid = (x + y).powf(a);
    let mean = 2f64.powf(a - 1.0) * sum;
    if a <= 1.0 {
        (mean - mid).max(mid - sum)
    } else {
        (sum - mid).max(mid - mean)
    }
}

/// Excess in `|j_q(x) - j_q(y)| <= 2^{2-q} |x - y|^{q-1}`, `q ∈ (1, 2]`.
pub fn jq_excess(x: f64, y: f64, q: f64) -> f64 {
    (jq_scalar(x, q) - jq_scalar(y, q)).abs() - 2f64.powf(2.0 - q) * (x - y).abs().powf(q - 1.0)
}

/// `y_{n+1}^2 = y_n^2 + δ g_n y_{n+1}`, the implicit forward substitution for
/// `y^2 = y_0^2 + ∫ g y`.
fn bernoulli_path(y0: f64, g: &[f64], delta: f64) -> Vec<f64> {
    let mut y = Vec::with_capacity(g.len() + 1);
    y.push(y0);
    for &gn in g {
        let prev = *y.last().expect("non-empty");
        let b = delta * gn;
        y.push(0.5 * (b + (b * b + 4.0 * prev * prev).sqrt()));
    }
    y
}

/// Random nonnegative step functions `g` on `[0, 1]` and `y₀ > 0`; checks
/// `y(t) <= y₀ + 2 ∫_0^t g` for the extremal solution of `y² = y₀² + ∫ g y`.
pub fn bernoulli_study(samples: usize, seed: u64) -> StudyReport {
    let mut inputs = StudyInputs {
        seeds: vec![seed],
        ..Default::default()
    };
    inputs.parameters.insert("samples".into(), json!(samples));
    let mut report = StudyReport::new(
        "bernoulli",
        "If y^2 <= y0^2 + int_0^t g y with g >= 0, then |y(t)| <= y0 + 2 int_0^t g.",
        inputs,
    );
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut series = Series::new(&["sample", "steps", "y0", "max_excess"]);
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for s in 0..samples {
        let steps = rng.random_range(16..=256usize);
        let delta = 1.0 / steps as f64;
        let y0 = rng.random_range(0.01..3.0);
        let g: Vec<f64> = (0..steps)
            .map(|_| {
                if rng.random_bool(0.7) {
                    rng.random_range(0.0..5.0)
                } else {
                    0.0
                }
            })
            .collect();
        let y = bernoulli_path(y0, &g, delta);
        let mut integral = 0.0;
        let mut excess = f64::NEG_INFINITY;
        for (n, &yn) in y.iter().enumerate() {
            if n > 0 {
                integral += delta * g[n - 1];
            }
            excess = excess.max(yn.abs() - (y0 + 2.0 * integral));
        }
        if excess > 1e-8 {
            violations += 1;
        }
        worst = worst.max(excess);
        series.push(vec![s as f64, steps as f64, y0, excess]);
    }
    report.check(Threshold::at_most(
        "violations beyond 1e-8",
        violations as f64,
        0.0,
    ));
    report.fit("max_excess", worst);

    // g ≡ c: the continuous extremal solution is y₀ + c t / 2.
    let (c, y0, steps) = (1.7, 0.5, 1024usize);
    let delta = 1.0 / steps as f64;
    let y = bernoulli_path(y0, &vec![c; steps], delta);
    let closed = y0 + c / 2.0;
    report.check(Threshold::at_most(
        "constant g: |y(1) - (y0 + c/2)|",
        (y[steps] - closed).abs(),
        c * delta,
    ));
    report.check(Threshold::at_most(
        "constant g: y(1) - (y0 + 2c)",
        y[steps] - (y0 + 2.0 * c),
        0.0,
    ));
    let flat = bernoulli_path(y0, &vec![0.0; steps], delta);
    report.check(Threshold::at_most(
        "g = 0: max |y - y0|",
        flat.iter().map(|v| (v - y0).abs()).fold(0.0, f64::max),
        0.0,
    ));
    report.series = series;
    report.finish(None)
}

/// `∫ f_n g_n` on `[0,1]` for three families at `n = 1, 2, 4, ..., n_max`, using
/// exact cell averages on `4 n_max` cells:
/// `g_n ≡ 0`; the non-equiintegrable control `f_n = n 1_{[0,1/n]}`; and the fixed
/// integrable `f = x^{-1/2}`, both against `g_n = 1_{[0,1/n]}`.
pub fn eiconv_demo(n_max: usize) -> StudyReport {
    let mut inputs = StudyInputs::default();
    inputs.parameters.insert("n_max".into(), json!(n_max));
    let mut report = StudyReport::new(
        "eiconv",
        "For an equiintegrable family f_n and bounded g_n -> 0 in measure, int f_n g_n -> 0; \
         a concentrating family is the control.",
        inputs,
    );
    let n_max = n_max.max(1).next_power_of_two();
    let cells = 4 * n_max;
    let h = 1.0 / cells as f64;
    // cell average of x^{-1/2} on [a, b]
    let fixed: Vec<f64> = (0..cells)
        .map(|i| {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            2.0 * (b.sqrt() - a.sqrt()) / h
        })
        .collect();
    let mut series = Series::new(&["n", "zero_family", "spike_control", "equiintegrable"]);
    let mut n = 1;
    while n <= n_max {
        let support = cells / n;
        let g = |i: usize| if i < support { 1.0 } else { 0.0 };
        let zero: f64 = (0..cells).map(|i| h * fixed[i] * 0.0).sum();
        let spike: f64 = (0..cells).map(|i| h * (n as f64) * g(i) * g(i)).sum();
        let ei: f64 = (0..cells).map(|i| h * fixed[i] * g(i)).sum();
        series.push(vec![n as f64, zero, spike, ei]);
        n *= 2;
    }
    let ns = series.column("n").expect("column");
    let zero = series.column("zero_family").expect("column");
    let spike = series.column("spike_control").expect("column");
    let ei = series.column("equiintegrable").expect("column");
    report.check(Threshold::at_most(
        "zero family: max |pairing|",
        zero.iter().map(|v| v.abs()).fold(0.0, f64::max),
        0.0,
    ));
    report.check(Threshold::at_most(
        "spike control: max |pairing - 1|",
        spike.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max),
        1e-12,
    ));
    report.check(Threshold::at_least(
        "equiintegrable family strictly decreasing",
        if strictly_decreasing(&ei) { 1.0 } else { 0.0 },
        1.0,
    ));
    let last = *ei.last().expect("non-empty");
    report.check(Threshold::at_most(
        "equiintegrable family: final pairing",
        last,
        2.0 / (n_max as f64).sqrt() * (1.0 + 1e-12),
    ));
    if let Some(s) = loglog_slope(&ns, &ei) {
        report.fit("equiintegrable decay exponent", s);
    }
    report.series = series;
    report.finish(None)
}

struct EnergyRun {
    defect: f64,
    violations_beyond: usize,
    max_violation: f64,
    min_accretivity: f64,
    fd_error: f64,
}

fn energy_run(
    q: f64,
    sg: &HeatSemigroup<f64>,
    forcing: &(dyn Fn(f64) -> GridFunction<f64> + Sync),
    v0: &GridFunction<f64>,
    horizon: f64,
    delta: f64,
) -> Result<EnergyRun> {
    let steps = (horizon / delta).round() as usize;
    let f: Vec<GridFunction<f64>> = (0..steps).map(|j| forcing(j as f64 * delta)).collect();
    let conv = sg.convolve_trajectory(&f, delta)?;
    let v: Vec<GridFunction<f64>> = conv
        .iter()
        .enumerate()
        .map(|(n, c)| sg.apply_semigroup(v0, n as f64 * delta)?.add(c))
        .collect::<Result<_>>()?;
    let norms: Vec<f64> = v
        .iter()
        .map(|x| x.lq_norm(q).map(|n| n.powf(q)))
        .collect::<Result<_>>()?;
    let mut pair = Vec::with_capacity(steps);
    let mut accr = Vec::with_capacity(steps);
    for j in 0..steps {
        let jv = v[j].duality_map(q)?;
        pair.push(f[j].pairing(&jv)?);
        accr.push(sg.apply_generator(&v[j])?.pairing(&jv)?);
    }
    let mut rhs = norms[0];
    let mut ident = norms[0];
    let mut defects = vec![0.0];
    let mut violations = vec![norms[0] - rhs];
    for n in 1..=steps {
        rhs += q * delta * pair[n - 1];
        ident += q * delta * (pair[n - 1] - accr[n - 1]);
        defects.push((norms[n] - ident).abs());
        violations.push(norms[n] - rhs);
    }
    let defect = defects.iter().cloned().fold(0.0, f64::max);
    let violations_beyond = violations.iter().filter(|&&x| x > defect + 1e-12).count();
    let max_violation = violations.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_accretivity = accr.iter().cloned().fold(f64::INFINITY, f64::min);
    let (lo, hi) = (steps / 4, 3 * steps / 4);
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for n in lo..hi {
        let fd = (norms[n + 1] - norms[n]) / delta;
        let exact = q * (pair[n] - accr[n]);
        err = err.max((fd - exact).abs());
        scale = scale.max(exact.abs());
    }
    let fd_error = if scale > 0.0 { err / scale } else { err };
    Ok(EnergyRun {
        defect,
        violations_beyond,
        max_violation,
        min_accretivity,
        fd_error,
    })
}

/// Builds `v = S(·)v₀ + S * F` at steps `δ`, `δ/2`, `δ/4` and checks
/// `‖v(t_n)‖_q^q <= ‖v₀‖_q^q + q Σ_{j<n} δ ⟨F(t_j), J_q(v(t_j))⟩ + D(δ)` where
/// `D(δ)` is the measured defect of the full energy identity (which also
/// carries `-q ⟨A v, J_q v⟩`). `D` and the one-sided finite-difference error of
/// `t ↦ ‖v(t)‖_q^q` must both shrink at first order.
pub fn chain_rule_study(
    q: f64,
    sg: &HeatSemigroup<f64>,
    forcing: &(dyn Fn(f64) -> GridFunction<f64> + Sync),
    v0: &GridFunction<f64>,
    horizon: f64,
    delta: f64,
) -> Result<StudyReport> {
    if !(q > 1.0) {
        return Err(Error::InvalidExponent {
            value: q,
            requirement: "q > 1",
        });
    }
    let mut inputs = StudyInputs::default();
    inputs.parameters.insert("q".into(), json!(q));
    inputs.parameters.insert("delta".into(), json!(delta));
    inputs.parameters.insert("horizon".into(), json!(horizon));
    inputs.parameters.insert("m".into(), json!(sg.grid().len()));
    let mut report = StudyReport::new(
        "chain_rule",
        "For v = S v0 + S*F, |v(t)|_q^q <= |v0|_q^q + q int_0^t <F, J_q(v)>, and t -> |v(t)|_q^q is \
         right-differentiable with derivative q <F - A v, J_q(v)>.",
        inputs,
    );
    let mut series = Series::new(&[
        "delta",
        "defect",
        "max_violation",
        "min_accretivity",
        "fd_rel_error",
    ]);
    let mut runs = Vec::new();
    for k in 0..3 {
        let d = delta / f64::from(1u32 << k);
        let run = energy_run(q, sg, forcing, v0, horizon, d)?;
        series.push(vec![
            d,
            run.defect,
            run.max_violation,
            run.min_accretivity,
            run.fd_error,
        ]);
        runs.push(run);
    }
    let beyond: usize = runs.iter().map(|r| r.violations_beyond).sum();
    report.check(Threshold::at_most(
        "violations beyond the identity defect",
        beyond as f64,
        0.0,
    ));
    let min_accr = runs
        .iter()
        .map(|r| r.min_accretivity)
        .fold(f64::INFINITY, f64::min);
    report.check(Threshold::at_least("min <Av, J_q(v)>", min_accr, -1e-10));
    if runs[0].defect <= 1e-13 {
        report.note("degenerate: the energy identity is exact at every step");
    } else {
        let ratio = runs[0].defect / runs[1].defect;
        report.fit("defect ratio delta/(delta/2)", ratio);
        report.fit(
            "defect ratio delta/2/(delta/4)",
            runs[1].defect / runs[2].defect,
        );
        report.check(Threshold::at_least(
            "defect refinement ratio (lower)",
            ratio,
            1.5,
        ));
        report.check(Threshold::at_most(
            "defect refinement ratio (upper)",
            ratio,
            2.5,
        ));
        let fd_ratio = runs[0].fd_error / runs[1].fd_error;
        report.fit("finite-difference ratio delta/(delta/2)", fd_ratio);
        report.check(Threshold::at_least(
            "finite-difference refinement ratio (lower)",
            fd_ratio,
            1.5,
        ));
        report.check(Threshold::at_most(
            "finite-difference refinement ratio (upper)",
            fd_ratio,
            2.5,
        ));
    }
    report.series = series;
    Ok(report.finish(None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_space::Grid;
    use crate::verify::Verdict;

    #[test]
    fn xya_examples() {
        assert!(xya_excess(1.0, 1.0, 0.5) <= 1e-15);
        assert!(xya_excess(3.0, 0.0, 7.0) <= 1e-12);
        assert!(xya_excess(0.3, 0.9, 1.0).abs() <= 1e-15);
        // reversing the regime breaks the chain
        let a = 3.0;
        let (x, y) = (1.0f64, 1.0f64);
        assert!(x.powf(a) + y.powf(a) - (x + y).powf(a) < 0.0);
        assert!(jq_excess(1.0, -1.0, 1.5) <= 1e-15);
        assert!(jq_excess(0.2, 0.7, 1.1) <= 0.0);
    }

    #[test]
    fn bernoulli_passes() {
        let r = bernoulli_study(200, 3);
        assert_eq!(r.verdict, Verdict::Pass, "{:?}", r.thresholds);
        // the extremal path under g = 0 stays put
        assert_eq!(bernoulli_path(2.0, &[0.0; 5], 0.1), vec![2.0; 6]);
    }

    #[test]
    fn eiconv_behaves() {
        let r = eiconv_demo(256);
        assert_eq!(r.verdict, Verdict::Pass, "{:?}", r.thresholds);
        let ei = r.series.column("equiintegrable").unwrap();
        let ns = r.series.column("n").unwrap();
        for (n, p) in ns.iter().zip(&ei) {
            assert!((p - 2.0 / n.sqrt()).abs() < 1e-12);
        }
        assert!((r.fitted["equiintegrable decay exponent"] + 0.5).abs() < 1e-9);
    }

    fn sg() -> HeatSemigroup<f64> {
        HeatSemigroup::new(Grid::new(31).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn chain_rule_smooth_forcing() {
        let s = sg();
        let g = *s.grid();
        let pi = std::f64::consts::PI;
        let v0 = GridFunction::from_fn(g, |x| (pi * x).sin() + 0.3 * (2.0 * pi * x).sin()).unwrap();
        let forcing =
            move |t: f64| GridFunction::from_fn(g, |x| (1.0 + t) * (pi * x).sin() * 2.0).unwrap();
        for q in [1.5, 2.0, 3.0] {
            let r = chain_rule_study(q, &s, &forcing, &v0, 0.5, 1.0 / 128.0).unwrap();
            assert_eq!(r.verdict, Verdict::Pass, "q={q} {:?}", r.thresholds);
        }
    }

    #[test]
    fn unforced_norm_decreases() {
        let s = sg();
        let g = *s.grid();
        let v0 = GridFunction::from_fn(g, |x| x * (1.0 - x) * (7.0 * x).cos()).unwrap();
        let zero = move |_t: f64| GridFunction::zeros(g);
        let r = chain_rule_study(1.5, &s, &zero, &v0, 0.25, 1.0 / 64.0).unwrap();
        assert!(r
            .series
            .column("max_violation")
            .unwrap()
            .iter()
            .all(|&v| v <= 1e-14));
        let mut prev = f64::INFINITY;
        for n in 0..=16 {
            let norm = s
                .apply_semigroup(&v0, n as f64 / 64.0)
                .unwrap()
                .lq_norm(1.5)
                .unwrap();
            assert!(norm <= prev + 1e-15);
            prev = norm;
        }
    }

    #[test]
    fn single_mode_energy_closed_form() {
        let s = sg();
        let (a, b, k) = (0.7, 1.3, 2);
        let e = s.eigenvector(k);
        let mu = s.eigenvalues()[k - 1];
        let delta = 1.0 / 256.0;
        let forcing: Vec<_> = (0..256).map(|_| e.scale(b)).collect();
        let conv = s.convolve_trajectory(&forcing, delta).unwrap();
        let mut ident = a * a;
        for (n, c) in conv.iter().enumerate() {
            let t = n as f64 * delta;
            let exact = a * (-mu * t).exp() + b * (1.0 - (-mu * t).exp()) / mu;
            let v = s.apply_semigroup(&e.scale(a), t).unwrap().add(c).unwrap();
            assert!((v.lq_norm(2.0).unwrap().powi(2) - exact * exact).abs() < 1e-12);
            // left-endpoint energy identity, first-order accurate
            assert!((ident - exact * exact).abs() < 2.0 * (mu + b) * delta);
            let vh = a * (-mu * t).exp() + b * (1.0 - (-mu * t).exp()) / mu;
            ident += 2.0 * delta * (b * vh - mu * vh * vh);
        }
    }
}
