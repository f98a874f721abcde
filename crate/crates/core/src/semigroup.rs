//! The discrete Dirichlet Laplacian `A φ_i = ν (2φ_i - φ_{i-1} - φ_{i+1}) / h²`
//! and everything built from its sine eigenbasis: `S(t) = exp(-tA)`,
//! `(I + εA)^{-1}` and the convolution `S * F`.
//!
//! The eigenvectors `e_k(x_i) = √2 sin(kπ x_i)` are orthonormal for the
//! pairing `h Σ`, so mode coefficients are `ĉ_k = ⟨φ, e_k⟩`.

use crate::error::{Error, Result};
use crate::grid_space::{Grid, GridFunction};
use crate::real::Real;

#[derive(Clone, Debug)]
pub struct HeatSemigroup<T> {
    grid: Grid<T>,
    viscosity: T,
    eigenvalues: Vec<T>,
    /// Row `k` holds `e_{k+1}` at the interior nodes.
    basis: Vec<T>,
}

impl<T: Real> HeatSemigroup<T> {
    pub fn new(grid: Grid<T>, viscosity: T) -> Result<Self> {
        if !(viscosity > T::zero()) || !viscosity.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "viscosity {viscosity} must be > 0"
            )));
        }
        let m = grid.len();
        let h = grid.spacing();
        let pi = T::PI();
        let two = T::lit(2.0);
        let eigenvalues = (1..=m)
            .map(|k| {
                let s = (T::count(k) * pi * h / two).sin();
                T::lit(4.0) * viscosity / (h * h) * s * s
            })
            .collect();
        let sqrt2 = two.sqrt();
        let mut basis = Vec::with_capacity(m * m);
        for k in 1..=m {
            for i in 1..=m {
                // sin(kπ i/(m+1)) with the angle reduced mod 2(m+1) to keep it accurate
                let r = (k * i) % (2 * (m + 1));
                basis.push(sqrt2 * (T::count(r) * pi * h).sin());
            }
        }
        Ok(HeatSemigroup {
            grid,
            viscosity,
            eigenvalues,
            basis,
        })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn viscosity(&self) -> T {
        self.viscosity
    }

    /// `μ_k = (4ν/h²) sin²(kπh/2)`, increasing in `k`.
    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    /// The `k`-th eigenvector, `k` in `1..=M`.
    pub fn eigenvector(&self, k: usize) -> GridFunction<T> {
        let m = self.grid.len();
        GridFunction::from_parts(self.grid, self.basis[(k - 1) * m..k * m].to_vec())
    }

    fn check_grid(&self, phi: &GridFunction<T>) -> Result<()> {
        if phi.grid() != &self.grid {
            return Err(Error::GridMismatch {
                left: self.grid.len(),
                right: phi.len(),
            });
        }
        Ok(())
    }

    /// Sine analysis: `ĉ_k = h Σ_i φ_i e_k(x_i)`.
    pub fn to_modes(&self, phi: &GridFunction<T>) -> Result<Vec<T>> {
        self.check_grid(phi)?;
        Ok(self.analyze(phi.values()))
    }

    pub(crate) fn analyze(&self, values: &[T]) -> Vec<T> {
        let m = self.grid.len();
        let h = self.grid.spacing();
        self.basis
            .chunks_exact(m)
            .map(|row| {
                h * row
                    .iter()
                    .zip(values)
                    .fold(T::zero(), |acc, (&e, &v)| acc + e * v)
            })
            .collect()
    }

    /// Sine synthesis: `φ_i = Σ_k ĉ_k e_k(x_i)`.
    pub fn from_modes(&self, coeffs: &[T]) -> Result<GridFunction<T>> {
        if coeffs.len() != self.grid.len() {
            return Err(Error::GridMismatch {
                left: self.grid.len(),
                right: coeffs.len(),
            });
        }
        Ok(GridFunction::from_parts(self.grid, self.synthesize(coeffs)))
    }

    pub(crate) fn synthesize(&self, coeffs: &[T]) -> Vec<T> {
        let m = self.grid.len();
        let mut out = vec![T::zero(); m];
        for (row, &c) in self.basis.chunks_exact(m).zip(coeffs) {
            if c == T::zero() {
                continue;
            }
            for (o, &e) in out.iter_mut().zip(row) {
                *o = *o + c * e;
            }
        }
        out
    }

    /// Per-mode factors `e^{-μ_k t}`.
    pub fn decay_factors(&self, t: T) -> Result<Vec<T>> {
        if t < T::zero() || t.is_nan() {
            return Err(Error::NegativeTime(t.as_f64()));
        }
        Ok(self.eigenvalues.iter().map(|&mu| (-mu * t).exp()).collect())
    }

    /// Multiplies mode coefficients by `factors` and synthesizes.
    pub(crate) fn apply_factors(&self, values: &[T], factors: &[T]) -> Vec<T> {
        let mut c = self.analyze(values);
        for (c, &f) in c.iter_mut().zip(factors) {
            *c = *c * f;
        }
        self.synthesize(&c)
    }

    /// `S(t) φ`.
    pub fn apply_semigroup(&self, phi: &GridFunction<T>, t: T) -> Result<GridFunction<T>> {
        self.check_grid(phi)?;
        let factors = self.decay_factors(t)?;
        if t == T::zero() {
            return Ok(phi.clone());
        }
        Ok(GridFunction::from_parts(
            self.grid,
            self.apply_factors(phi.values(), &factors),
        ))
    }

    /// `(I + εA)^{-1} φ`.
    pub fn apply_resolvent(&self, phi: &GridFunction<T>, eps: T) -> Result<GridFunction<T>> {
        self.check_grid(phi)?;
        if !(eps > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "resolvent parameter {eps} must be > 0"
            )));
        }
        let factors: Vec<T> = self
            .eigenvalues
            .iter()
            .map(|&mu| (T::one() + eps * mu).recip())
            .collect();
        Ok(GridFunction::from_parts(
            self.grid,
            self.apply_factors(phi.values(), &factors),
        ))
    }

    /// `A φ` by the three-point stencil with zero boundary values.
    pub fn apply_generator(&self, phi: &GridFunction<T>) -> Result<GridFunction<T>> {
        self.check_grid(phi)?;
        let v = phi.values();
        let m = v.len();
        let h = self.grid.spacing();
        let scale = self.viscosity / (h * h);
        let two = T::lit(2.0);
        let out = (0..m)
            .map(|i| {
                let left = if i > 0 { v[i - 1] } else { T::zero() };
                let right = if i + 1 < m { v[i + 1] } else { T::zero() };
                scale * (two * v[i] - left - right)
            })
            .collect();
        Ok(GridFunction::from_parts(self.grid, out))
    }

    /// `(S * F)(t_n) = ∫_0^{t_n} S(t_n - s) F(s) ds` for `F` frozen at the left
    /// endpoint of each step, integrated exactly in every mode. `n = forcing.len()`.
    pub fn convolve(&self, forcing: &[GridFunction<T>], delta: T) -> Result<GridFunction<T>> {
        let mut traj = self.convolve_trajectory(forcing, delta)?;
        Ok(traj.pop().expect("non-empty trajectory"))
    }

    /// `(S * F)(t_j)` for `j = 0..=forcing.len()`.
    pub fn convolve_trajectory(
        &self,
        forcing: &[GridFunction<T>],
        delta: T,
    ) -> Result<Vec<GridFunction<T>>> {
        if forcing.is_empty() {
            return Err(Error::EmptyInput("convolution forcing"));
        }
        if !(delta > T::zero()) {
            return Err(Error::InvalidTimeGrid(format!("step {delta} must be > 0")));
        }
        let mut conv = Convolution::new(self, delta);
        let mut out = Vec::with_capacity(forcing.len() + 1);
        out.push(GridFunction::zeros(self.grid));
        for f in forcing {
            self.check_grid(f)?;
            conv.push(f.values());
            out.push(conv.current());
        }
        Ok(out)
    }
}

/// Incremental mode-space accumulator for `S * F` on a uniform time grid.
pub(crate) struct Convolution<'s, T> {
    sg: &'s HeatSemigroup<T>,
    decay: Vec<T>,
    kernel: Vec<T>,
    acc: Vec<T>,
}

impl<'s, T: Real> Convolution<'s, T> {
    pub(crate) fn new(sg: &'s HeatSemigroup<T>, delta: T) -> Self {
        let decay = sg
            .eigenvalues
            .iter()
            .map(|&mu| (-mu * delta).exp())
            .collect();
        // (1 - e^{-μδ}) / μ
        let kernel = sg
            .eigenvalues
            .iter()
            .map(|&mu| -(-mu * delta).exp_m1() / mu)
            .collect();
        Convolution {
            sg,
            decay,
            kernel,
            acc: vec![T::zero(); sg.grid.len()],
        }
    }

    /// Advances one step with the forcing frozen at the current left endpoint.
    pub(crate) fn push(&mut self, forcing: &[T]) {
        let f = self.sg.analyze(forcing);
        for ((a, &d), (&k, &fk)) in self
            .acc
            .iter_mut()
            .zip(&self.decay)
            .zip(self.kernel.iter().zip(&f))
        {
            *a = d * *a + k * fk;
        }
    }

    pub(crate) fn current(&self) -> GridFunction<T> {
        GridFunction::from_parts(self.sg.grid, self.sg.synthesize(&self.acc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sg(m: usize) -> HeatSemigroup<f64> {
        HeatSemigroup::new(Grid::new(m).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn eigen_structure() {
        let s = sg(31);
        assert!(s
            .eigenvalues()
            .windows(2)
            .all(|w| 0.0 < w[0] && w[0] < w[1]));
        for j in 1..=31 {
            for k in 1..=31 {
                let p = s.eigenvector(j).pairing(&s.eigenvector(k)).unwrap();
                let expected = if j == k { 1.0 } else { 0.0 };
                assert!((p - expected).abs() < 1e-12, "{j} {k} {p}");
            }
        }
        // eigenpairs of the stencil
        for k in [1, 7, 31] {
            let e = s.eigenvector(k);
            let ae = s.apply_generator(&e).unwrap();
            let expected = e.scale(s.eigenvalues()[k - 1]);
            assert!(ae.sub(&expected).unwrap().max_norm() < 1e-9 * s.eigenvalues()[k - 1]);
        }
        let pi2 = std::f64::consts::PI.powi(2);
        let coarse = (sg(63).eigenvalues()[0] - pi2).abs();
        let fine = (sg(255).eigenvalues()[0] - pi2).abs();
        assert!(fine < coarse);
        let viscous = HeatSemigroup::new(Grid::new(255).unwrap(), 0.5).unwrap();
        assert!((viscous.eigenvalues()[0] - 0.5 * pi2).abs() < 1e-4);
    }

    #[test]
    fn modes_examples() {
        let s = sg(15);
        let c = s.to_modes(&s.eigenvector(1)).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-13);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-13));
        assert!(s
            .to_modes(&GridFunction::zeros(*s.grid()))
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
        assert!(s
            .to_modes(&GridFunction::zeros(Grid::new(7).unwrap()))
            .is_err());
    }

    #[test]
    fn semigroup_examples() {
        let s = sg(31);
        let phi = GridFunction::from_fn(*s.grid(), |x| x * (1.0 - x) + (9.0 * x).sin()).unwrap();
        assert_eq!(s.apply_semigroup(&phi, 0.0).unwrap(), phi);
        let t = 0.03;
        let decayed = s.apply_semigroup(&s.eigenvector(1), t).unwrap();
        let expected = s.eigenvector(1).scale((-s.eigenvalues()[0] * t).exp());
        assert!(decayed.sub(&expected).unwrap().max_norm() < 1e-13);
        let ones = GridFunction::constant(*s.grid(), 1.0);
        assert!(s.apply_semigroup(&ones, 5.0).unwrap().max_norm() < 1e-15);
        assert!(matches!(
            s.apply_semigroup(&phi, -1.0),
            Err(Error::NegativeTime(_))
        ));
    }

    #[test]
    fn resolvent_examples() {
        let s = sg(31);
        let phi = GridFunction::from_fn(*s.grid(), |x| (3.0 * x).cos() * x * (1.0 - x)).unwrap();
        let near = s.apply_resolvent(&phi, 1e-8).unwrap();
        assert!(near.sub(&phi).unwrap().max_norm() <= 1e-4);
        let k = 5;
        let eps = 0.01;
        let r = s.apply_resolvent(&s.eigenvector(k), eps).unwrap();
        let expected = s
            .eigenvector(k)
            .scale(1.0 / (1.0 + eps * s.eigenvalues()[k - 1]));
        assert!(r.sub(&expected).unwrap().max_norm() < 1e-13);
        let zero = GridFunction::zeros(*s.grid());
        assert_eq!(s.apply_resolvent(&zero, 0.3).unwrap().max_norm(), 0.0);
        assert!(s.apply_resolvent(&phi, 0.0).is_err());
    }

    #[test]
    fn convolve_examples() {
        let s = sg(15);
        let g = *s.grid();
        assert!(matches!(s.convolve(&[], 0.1), Err(Error::EmptyInput(_))));
        let zeros = vec![GridFunction::zeros(g); 10];
        assert_eq!(s.convolve(&zeros, 0.01).unwrap().max_norm(), 0.0);
        // constant forcing e_k telescopes to (1 - e^{-μ t}) / μ
        let k = 3;
        let n = 40;
        let delta = 1.0 / 64.0;
        let forcing = vec![s.eigenvector(k); n];
        let t = delta * n as f64;
        let mu = s.eigenvalues()[k - 1];
        let expected = s.eigenvector(k).scale((1.0 - (-mu * t).exp()) / mu);
        assert!(
            s.convolve(&forcing, delta)
                .unwrap()
                .sub(&expected)
                .unwrap()
                .max_norm()
                < 1e-13
        );
    }

    #[test]
    fn convolve_first_order_in_time() {
        let s = sg(15);
        let g = *s.grid();
        let f = |t: f64| {
            GridFunction::from_fn(g, |x| {
                (1.0 + t).powi(2) * (x * (1.0 - x)) + t.sin() * (5.0 * x).sin()
            })
            .unwrap()
        };
        let run = |n: usize| {
            let delta = 1.0 / n as f64;
            let forcing: Vec<_> = (0..n).map(|j| f(j as f64 * delta)).collect();
            s.convolve(&forcing, delta).unwrap()
        };
        let (a, b, c) = (run(64), run(128), run(256));
        let e1 = a.sub(&b).unwrap().lq_norm(2.0).unwrap();
        let e2 = b.sub(&c).unwrap().lq_norm(2.0).unwrap();
        let ratio = e1 / e2;
        assert!((1.8..2.2).contains(&ratio), "ratio {ratio}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn round_trip_and_parseval(vals in proptest::collection::vec(-5.0f64..5.0, 15)) {
            let s = sg(15);
            let phi = GridFunction::new(*s.grid(), vals).unwrap();
            let c = s.to_modes(&phi).unwrap();
            let back = s.from_modes(&c).unwrap();
            prop_assert!(back.sub(&phi).unwrap().max_norm() < 1e-12);
            let energy: f64 = c.iter().map(|v| v * v).sum();
            prop_assert!((energy - phi.lq_norm(2.0).unwrap().powi(2)).abs() < 1e-12 * (1.0 + energy));
        }

        #[test]
        fn contraction_positivity_composition(
            vals in proptest::collection::vec(-5.0f64..5.0, 15), t in 0.0f64..0.2, t2 in 0.0f64..0.2,
        ) {
            let s = sg(15);
            let phi = GridFunction::new(*s.grid(), vals).unwrap();
            let st = s.apply_semigroup(&phi, t).unwrap();
            for q in [1.0, 1.5, 2.0, 3.0] {
                prop_assert!(st.lq_norm(q).unwrap() <= phi.lq_norm(q).unwrap() * (1.0 + 1e-12) + 1e-12);
            }
            prop_assert!(st.max_norm() <= phi.max_norm() + 1e-12);
            let composed = s.apply_semigroup(&st, t2).unwrap();
            let direct = s.apply_semigroup(&phi, t + t2).unwrap();
            prop_assert!(composed.sub(&direct).unwrap().max_norm() < 1e-12);
            let pos = phi.map(f64::abs);
            prop_assert!(s.apply_semigroup(&pos, t).unwrap().values().iter().all(|&v| v >= -1e-12));
        }
    }
}
