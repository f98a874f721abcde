//! Discrete `L^q(0,1)` on a uniform interior grid with zero Dirichlet data.
//!
//! All integrals over the domain use the rectangle rule `h Σ_i`, so the
//! pairing and norm identities hold exactly at the discrete level.

use crate::error::{Error, Result};
use crate::real::Real;

/// Uniform grid of `m` interior nodes `x_i = i h`, `h = 1/(m+1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid<T> {
    m: usize,
    h: T,
}

impl<T: Real> Grid<T> {
    /// Requires `h (m + 1) = 1` exactly in `T`'s arithmetic; `m = 1` is allowed
    /// as a degenerate test grid.
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidGrid(
                "at least one interior node required".into(),
            ));
        }
        let n = T::count(m + 1);
        let h = T::one() / n;
        if h * n != T::one() {
            return Err(Error::InvalidGrid(format!(
                "h * (M + 1) != 1 for M = {m} in this precision"
            )));
        }
        Ok(Grid { m, h })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn spacing(&self) -> T {
        self.h
    }

    /// `x_i` for `i` in `0..m` (the first interior node is `h`).
    pub fn node(&self, i: usize) -> T {
        T::count(i + 1) * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.m).map(|i| self.node(i))
    }

    /// Discrete measure of the domain, `h m` (strictly below 1).
    pub fn measure(&self) -> T {
        self.h * T::count(self.m)
    }
}

/// `j_q(x) = |x|^{q-1} sgn(x)`, with `j_1 = sgn` and `j_1(0) = 0`.
#[inline]
pub fn jq_scalar<T: Real>(x: T, q: T) -> T {
    if x == T::zero() {
        return T::zero();
    }
    if q == T::lit(2.0) {
        return x;
    }
    x.abs().powf(q - T::one()) * x.sign0()
}

/// Piecewise linear approximation of the sign with slope `2/√ε` on
/// `[-√ε/2, √ε/2]`; continuous, odd, saturating at `±1`.
#[inline]
pub fn gamma_eps<T: Real>(x: T, eps: T) -> T {
    let s = eps.sqrt();
    let half = s / T::lit(2.0);
    if x > half {
        T::one()
    } else if x < -half {
        -T::one()
    } else {
        T::lit(2.0) * x / s
    }
}

/// `Γ⁰_ε(x) = √ε/4 + ∫_0^x γ_ε`: equals `|x|` outside `(-√ε/2, √ε/2)` and
/// `√ε/4 + x²/√ε` inside.
#[inline]
pub fn big_gamma0<T: Real>(x: T, eps: T) -> T {
    let s = eps.sqrt();
    let a = x.abs();
    if a >= s / T::lit(2.0) {
        a
    } else {
        s / T::lit(4.0) + a * a / s
    }
}

/// `T_2(x) = |x| ∧ 2`.
#[inline]
pub fn truncate_t2<T: Real>(x: T) -> T {
    x.abs().min(T::lit(2.0))
}

/// An element of discrete `L^q(0,1)`: values at the interior nodes, zero on the boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<T> {
    grid: Grid<T>,
    values: Vec<T>,
}

impl<T: Real> GridFunction<T> {
    pub fn new(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch {
                left: grid.len(),
                right: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput(format!("grid function value {bad}")));
        }
        Ok(GridFunction { grid, values })
    }

    /// Builds without the finiteness check; callers guarantee the invariant.
    pub(crate) fn from_parts(grid: Grid<T>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        GridFunction { grid, values }
    }

    pub fn zeros(grid: Grid<T>) -> Self {
        GridFunction {
            grid,
            values: vec![T::zero(); grid.len()],
        }
    }

    pub fn constant(grid: Grid<T>, c: T) -> Self {
        GridFunction {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f` at the interior nodes.
    pub fn from_fn(grid: Grid<T>, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(grid, grid.nodes().map(f).collect())
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                left: self.grid.len(),
                right: other.grid.len(),
            });
        }
        Ok(())
    }

    /// Pointwise map.
    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two functions on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.check_same(other)?;
        Ok(GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| c * v)
    }

    /// `‖φ‖_q = (h Σ |φ_i|^q)^{1/q}`.
    pub fn lq_norm(&self, q: T) -> Result<T> {
        if !(q >= T::one()) || !q.is_finite() {
            return Err(Error::InvalidExponent {
                value: q.as_f64(),
                requirement: "q >= 1",
            });
        }
        let h = self.grid.spacing();
        let norm = if q == T::one() {
            h * self.values.iter().fold(T::zero(), |acc, v| acc + v.abs())
        } else if q == T::lit(2.0) {
            (h * self.values.iter().fold(T::zero(), |acc, &v| acc + v * v)).sqrt()
        } else {
            (h * self
                .values
                .iter()
                .fold(T::zero(), |acc, v| acc + v.abs().powf(q)))
            .powf(q.recip())
        };
        Ok(norm)
    }

    /// `max_i |φ_i|`, the stand-in for the `L^∞` norm.
    pub fn max_norm(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    /// `⟨φ, ψ⟩ = h Σ φ_i ψ_i`.
    pub fn pairing(&self, other: &Self) -> Result<T> {
        self.check_same(other)?;
        Ok(self.grid.spacing()
            * self
                .values
                .iter()
                .zip(&other.values)
                .fold(T::zero(), |acc, (&a, &b)| acc + a * b))
    }

    /// `J_q(φ) = j_q ∘ φ`, satisfying `⟨J_q φ, φ⟩ = ‖φ‖_q^q` and
    /// `‖J_q φ‖_{q'} = ‖φ‖_q^{q-1}`.
    pub fn duality_map(&self, q: T) -> Result<Self> {
        if !(q > T::one()) || !q.is_finite() {
            return Err(Error::InvalidExponent {
                value: q.as_f64(),
                requirement: "q > 1",
            });
        }
        Ok(self.map(|v| jq_scalar(v, q)))
    }

    /// `Γ_ε(φ) = h Σ Γ⁰_ε(φ_i)`.
    pub fn big_gamma(&self, eps: T) -> T {
        self.grid.spacing()
            * self
                .values
                .iter()
                .fold(T::zero(), |acc, &v| acc + big_gamma0(v, eps))
    }

    /// 17 significant digits per value, comma separated.
    pub fn to_csv_row(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 24);
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format!("{v:.16e}"));
        }
        out
    }

    pub fn from_csv_row(grid: Grid<T>, row: &str) -> Result<Self> {
        let values = row
            .trim()
            .split(',')
            .map(|s| {
                let v: f64 = s
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("{s:?}: {e}")))?;
                Ok(T::lit(v))
            })
            .collect::<Result<Vec<T>>>()?;
        Self::new(grid, values)
    }
}

/// The `L^1` bracket `[x, y] = max_{s ∈ J_1(x)} ⟨s, y⟩`: `s_i = sgn(x_i)` where
/// `x_i ≠ 0`, and the free choice `sgn(y_i)` where `x_i = 0`.
pub fn bracket_l1<T: Real>(x: &GridFunction<T>, y: &GridFunction<T>) -> Result<T> {
    x.check_same(y)?;
    let sum = x
        .values
        .iter()
        .zip(&y.values)
        .fold(T::zero(), |acc, (&a, &b)| {
            let s = if a != T::zero() { a.sign0() } else { b.sign0() };
            acc + s * b
        });
    Ok(x.grid.spacing() * sum)
}
