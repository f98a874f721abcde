//! The stochastic convolution `z = S ⋄ B` for a diagonal diffusion
//! coefficient, sampled exactly at the grid times through independent
//! Ornstein–Uhlenbeck recursions, one per sine mode:
//!
//! `ẑ_k(t_{n+1}) = e^{-μ_k δ} ẑ_k(t_n) + b_k √((1 - e^{-2μ_k δ}) / (2μ_k)) ξ_{k,n}`.
//!
//! Random numbers come from a ChaCha12 generator keyed by the master seed,
//! with one stream per mode (stream id = mode index `k - 1`) consumed in step
//! order. A path therefore does not depend on the order in which modes or
//! paths are generated.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_space::{Grid, GridFunction};
use crate::real::Real;
use crate::semigroup::HeatSemigroup;

/// Mode weights `b_k` of the diagonal diffusion coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DiffusionSpec {
    /// `b_k = amplitude * k^{-smoothness}`.
    PowerLaw { amplitude: f64, smoothness: f64 },
    /// Explicit `b_1..b_M`.
    Explicit { weights: Vec<f64> },
}

impl DiffusionSpec {
    pub fn power_law(amplitude: f64, smoothness: f64) -> Self {
        DiffusionSpec::PowerLaw {
            amplitude,
            smoothness,
        }
    }

    pub fn weights<T: Real>(&self, m: usize) -> Result<Vec<T>> {
        let w: Vec<f64> = match self {
            DiffusionSpec::PowerLaw {
                amplitude,
                smoothness,
            } => {
                if !(*amplitude >= 0.0 && amplitude.is_finite())
                    || !(*smoothness >= 0.0 && smoothness.is_finite())
                {
                    return Err(Error::InvalidParameter(format!(
                        "noise amplitude {amplitude} and smoothness {smoothness} must be finite and >= 0"
                    )));
                }
                (1..=m)
                    .map(|k| amplitude * (k as f64).powf(-smoothness))
                    .collect()
            }
            DiffusionSpec::Explicit { weights } => {
                if weights.len() != m {
                    return Err(Error::GridMismatch {
                        left: m,
                        right: weights.len(),
                    });
                }
                if weights.iter().any(|b| !(*b >= 0.0 && b.is_finite())) {
                    return Err(Error::InvalidParameter(
                        "mode weights must be finite and >= 0".into(),
                    ));
                }
                weights.clone()
            }
        };
        Ok(w.into_iter().map(T::lit).collect())
    }
}

/// Uniform time grid `t_n = n δ`, `n = 0..=steps`, `steps δ = T`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid<T> {
    horizon: T,
    step: T,
    steps: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(horizon: T, step: T) -> Result<Self> {
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return Err(Error::InvalidTimeGrid(format!(
                "horizon {horizon} must be > 0"
            )));
        }
        if !(step > T::zero()) || step > horizon {
            return Err(Error::InvalidTimeGrid(format!(
                "step {step} must lie in (0, {horizon}]"
            )));
        }
        let ratio = horizon / step;
        let steps = ratio.round();
        if (ratio - steps).abs() > T::lit(1e-9) * ratio {
            return Err(Error::InvalidTimeGrid(format!(
                "step {step} does not divide horizon {horizon}"
            )));
        }
        Ok(TimeGrid {
            horizon,
            step,
            steps: steps.to_usize().expect("step count"),
        })
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time(&self, n: usize) -> T {
        T::count(n) * self.step
    }
}

/// One realization of `z` at the grid times.
#[derive(Clone, Debug)]
pub struct NoisePath<T> {
    grid: Grid<T>,
    viscosity: T,
    time: TimeGrid<T>,
    seed: u64,
    spec: Option<DiffusionSpec>,
    /// `modes[n][k-1] = ẑ_k(t_n)`.
    modes: Vec<Vec<T>>,
    fields: Vec<GridFunction<T>>,
}

/// Samples `z` exactly in distribution at `t_n = nδ`, `n = 0..=T/δ`.
pub fn sample_path<T: Real>(
    spec: &DiffusionSpec,
    sg: &HeatSemigroup<T>,
    horizon: T,
    delta: T,
    seed: u64,
) -> Result<NoisePath<T>> {
    let time = TimeGrid::new(horizon, delta)?;
    let m = sg.grid().len();
    let weights = spec.weights::<T>(m)?;
    let steps = time.steps();
    let mut modes = vec![vec![T::zero(); m]; steps + 1];
    let two = T::lit(2.0);
    for (k, (&mu, &b)) in sg.eigenvalues().iter().zip(&weights).enumerate() {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let decay = (-mu * delta).exp();
        let std = b * (-(-two * mu * delta).exp_m1() / (two * mu)).sqrt();
        let mut z = T::zero();
        for row in modes.iter_mut().skip(1) {
            let xi: f64 = StandardNormal.sample(&mut rng);
            z = decay * z + std * T::lit(xi);
            row[k] = z;
        }
    }
    let fields = modes
        .iter()
        .map(|c| GridFunction::from_parts(*sg.grid(), sg.synthesize(c)))
        .collect();
    Ok(NoisePath {
        grid: *sg.grid(),
        viscosity: sg.viscosity(),
        time,
        seed,
        spec: Some(spec.clone()),
        modes,
        fields,
    })
}

impl<T: Real> NoisePath<T> {
    /// `z ≡ 0` on the given time grid.
    pub fn zero(sg: &HeatSemigroup<T>, horizon: T, delta: T) -> Result<Self> {
        let time = TimeGrid::new(horizon, delta)?;
        let m = sg.grid().len();
        Ok(NoisePath {
            grid: *sg.grid(),
            viscosity: sg.viscosity(),
            time,
            seed: 0,
            spec: None,
            modes: vec![vec![T::zero(); m]; time.steps() + 1],
            fields: vec![GridFunction::zeros(*sg.grid()); time.steps() + 1],
        })
    }

    /// Wraps externally built fields `z(t_0), ..., z(t_N)` (e.g. deterministic test forcings).
    pub fn from_fields(
        sg: &HeatSemigroup<T>,
        fields: Vec<GridFunction<T>>,
        delta: T,
    ) -> Result<Self> {
        if fields.len() < 2 {
            return Err(Error::EmptyInput(
                "noise path needs at least two time points",
            ));
        }
        let horizon = delta * T::count(fields.len() - 1);
        let time = TimeGrid::new(horizon, delta)?;
        let modes = fields
            .iter()
            .map(|f| sg.to_modes(f))
            .collect::<Result<Vec<_>>>()?;
        Ok(NoisePath {
            grid: *sg.grid(),
            viscosity: sg.viscosity(),
            time,
            seed: 0,
            spec: None,
            modes,
            fields,
        })
    }

    /// Keeps every `factor`-th time point; the result is an exact sample on the coarser grid.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.time.steps().is_multiple_of(factor) {
            return Err(Error::InvalidTimeGrid(format!(
                "factor {factor} does not divide {} steps",
                self.time.steps()
            )));
        }
        let time = TimeGrid::new(self.time.horizon(), self.time.step() * T::count(factor))?;
        Ok(NoisePath {
            grid: self.grid,
            viscosity: self.viscosity,
            time,
            seed: self.seed,
            spec: self.spec.clone(),
            modes: self.modes.iter().step_by(factor).cloned().collect(),
            fields: self.fields.iter().step_by(factor).cloned().collect(),
        })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn time_grid(&self) -> &TimeGrid<T> {
        &self.time
    }

    pub fn step(&self) -> T {
        self.time.step()
    }

    pub fn steps(&self) -> usize {
        self.time.steps()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn spec(&self) -> Option<&DiffusionSpec> {
        self.spec.as_ref()
    }

    /// `z(t_n)`.
    pub fn field(&self, n: usize) -> &GridFunction<T> {
        &self.fields[n]
    }

    pub fn fields(&self) -> &[GridFunction<T>] {
        &self.fields
    }

    /// `ẑ(t_n)` in the sine basis.
    pub fn modes(&self, n: usize) -> &[T] {
        &self.modes[n]
    }

    /// `max_n ‖z(t_n)‖_q`.
    pub fn norm_c_lq(&self, q: T) -> Result<T> {
        self.fields
            .iter()
            .try_fold(T::zero(), |acc, f| Ok(acc.max(f.lq_norm(q)?)))
    }

    /// `(Σ_{n<N} δ ‖z(t_n)‖_{qd}^d)^{1/d}`, and `0` for `d = 0`.
    pub fn norm_ld_lqd(&self, d: T, q: T) -> Result<T> {
        if !(q >= T::one()) {
            return Err(Error::InvalidExponent {
                value: q.as_f64(),
                requirement: "q >= 1",
            });
        }
        if !(d >= T::zero()) {
            return Err(Error::InvalidExponent {
                value: d.as_f64(),
                requirement: "d >= 0",
            });
        }
        if d == T::zero() {
            return Ok(T::zero());
        }
        let qd = (q * d).max(T::one());
        let sum = self.fields[..self.time.steps()]
            .iter()
            .try_fold(T::zero(), |acc, f| {
                Ok(acc + self.time.step() * f.lq_norm(qd)?.powf(d))
            })?;
        Ok(sum.powf(d.recip()))
    }

    /// Sidecar sufficient to regenerate the path bit for bit.
    pub fn manifest(&self) -> Option<NoiseManifest> {
        Some(NoiseManifest {
            seed: self.seed,
            spec: self.spec.clone()?,
            m: self.grid.len(),
            viscosity: self.viscosity.as_f64(),
            horizon: self.time.horizon().as_f64(),
            step: self.time.step().as_f64(),
            steps: self.time.steps(),
            generator: STREAM_SCHEME.to_string(),
        })
    }
}

/// Writes `time,node,value` rows (node = 1-based interior index), 17 significant digits.
pub fn write_trajectory_csv<T: Real, W: Write>(
    out: &mut W,
    time: &TimeGrid<T>,
    fields: &[GridFunction<T>],
) -> std::io::Result<()> {
    writeln!(out, "time,node,value")?;
    for (n, f) in fields.iter().enumerate() {
        let t = time.time(n);
        for (i, v) in f.values().iter().enumerate() {
            writeln!(out, "{t:.16e},{},{v:.16e}", i + 1)?;
        }
    }
    Ok(())
}

impl<T: Real> NoisePath<T> {
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        write_trajectory_csv(out, &self.time, &self.fields)
    }
}

pub const STREAM_SCHEME: &str = "chacha12/seed_from_u64(seed)/stream=mode-1/sequential-in-time";

/// JSON sidecar of a sampled path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseManifest {
    pub seed: u64,
    pub spec: DiffusionSpec,
    pub m: usize,
    pub viscosity: f64,
    pub horizon: f64,
    pub step: f64,
    pub steps: usize,
    pub generator: String,
}

impl NoiseManifest {
    pub fn regenerate(&self) -> Result<(HeatSemigroup<f64>, NoisePath<f64>)> {
        if self.generator != STREAM_SCHEME {
            return Err(Error::InvalidParameter(format!(
                "unknown generator {:?}",
                self.generator
            )));
        }
        let sg = HeatSemigroup::new(Grid::new(self.m)?, self.viscosity)?;
        let path = sample_path(&self.spec, &sg, self.horizon, self.step, self.seed)?;
        Ok((sg, path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sg(m: usize) -> HeatSemigroup<f64> {
        HeatSemigroup::new(Grid::new(m).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn zero_weights_give_zero_path() {
        let s = sg(15);
        let p = sample_path(&DiffusionSpec::power_law(0.0, 1.0), &s, 1.0, 1.0 / 32.0, 7).unwrap();
        assert!(p.fields().iter().all(|f| f.max_norm() == 0.0));
        assert_eq!(p.norm_c_lq(2.0).unwrap(), 0.0);
    }

    #[test]
    fn deterministic_given_seed() {
        let s = sg(15);
        let spec = DiffusionSpec::power_law(1.0, 0.5);
        let a = sample_path(&spec, &s, 1.0, 1.0 / 64.0, 11).unwrap();
        let b = sample_path(&spec, &s, 1.0, 1.0 / 64.0, 11).unwrap();
        let c = sample_path(&spec, &s, 1.0, 1.0 / 64.0, 12).unwrap();
        let bits = |p: &NoisePath<f64>| {
            p.fields()
                .iter()
                .flat_map(|f| f.values().iter().map(|v| v.to_bits()))
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn path_invariants() {
        let s = sg(15);
        let p = sample_path(&DiffusionSpec::power_law(1.0, 1.0), &s, 0.5, 1.0 / 64.0, 3).unwrap();
        assert_eq!(p.steps(), 32);
        assert!(p.modes(0).iter().all(|&v| v == 0.0));
        for n in [0, 5, 32] {
            let assembled = s.from_modes(p.modes(n)).unwrap();
            assert!(assembled.sub(p.field(n)).unwrap().max_norm() < 1e-12);
        }
        assert!(matches!(
            sample_path(&DiffusionSpec::power_law(1.0, 1.0), &s, 1.0, 0.3, 3),
            Err(Error::InvalidTimeGrid(_))
        ));
        assert!(sample_path(&DiffusionSpec::power_law(1.0, 1.0), &s, -1.0, 0.25, 3).is_err());
    }

    #[test]
    fn coarsening_keeps_samples() {
        let s = sg(7);
        let p = sample_path(&DiffusionSpec::power_law(1.0, 1.0), &s, 1.0, 1.0 / 64.0, 5).unwrap();
        let c = p.coarsen(4).unwrap();
        assert_eq!(c.steps(), 16);
        assert_eq!(c.field(3), p.field(12));
        assert!(p.coarsen(3).is_err());
    }

    #[test]
    fn path_norms() {
        let s = sg(7);
        let g = *s.grid();
        let snap = GridFunction::from_fn(g, |x| (3.0 * x).sin()).unwrap();
        let zero = GridFunction::zeros(g);
        let single = NoisePath::from_fields(&s, vec![zero.clone(), snap.clone()], 0.5).unwrap();
        assert_eq!(single.norm_c_lq(2.0).unwrap(), snap.lq_norm(2.0).unwrap());
        let constant = NoisePath::from_fields(&s, vec![snap.clone(); 5], 0.25).unwrap();
        assert!(
            (constant.norm_ld_lqd(1.0, 2.0).unwrap() - snap.lq_norm(2.0).unwrap()).abs() < 1e-14
        );
        assert_eq!(constant.norm_ld_lqd(0.0, 2.0).unwrap(), 0.0);
        let p = sample_path(&DiffusionSpec::power_law(1.0, 0.6), &s, 1.0, 1.0 / 32.0, 9).unwrap();
        let sum: f64 = p.fields().iter().map(|f| f.lq_norm(3.0).unwrap()).sum();
        let c = p.norm_c_lq(3.0).unwrap();
        assert!(c <= sum);
        assert!(p.fields().iter().all(|f| f.lq_norm(3.0).unwrap() <= c));
        // monotone in the horizon
        let short = NoisePath::from_fields(&s, p.fields()[..17].to_vec(), 1.0 / 32.0).unwrap();
        assert!(short.norm_ld_lqd(2.0, 1.5).unwrap() <= p.norm_ld_lqd(2.0, 1.5).unwrap());
    }

    #[test]
    fn manifest_regenerates_bitwise() {
        let s = sg(7);
        let p = sample_path(&DiffusionSpec::power_law(0.7, 1.3), &s, 1.0, 1.0 / 16.0, 99).unwrap();
        let json = serde_json::to_string(&p.manifest().unwrap()).unwrap();
        let back: NoiseManifest = serde_json::from_str(&json).unwrap();
        let (_, q) = back.regenerate().unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        p.write_csv(&mut a).unwrap();
        q.write_csv(&mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn explicit_weights_validated() {
        assert!(DiffusionSpec::Explicit {
            weights: vec![1.0, 2.0]
        }
        .weights::<f64>(3)
        .is_err());
        assert!(DiffusionSpec::Explicit {
            weights: vec![1.0, -2.0]
        }
        .weights::<f64>(2)
        .is_err());
        assert_eq!(
            DiffusionSpec::power_law(2.0, 1.0)
                .weights::<f64>(2)
                .unwrap(),
            vec![2.0, 1.0]
        );
    }
}
