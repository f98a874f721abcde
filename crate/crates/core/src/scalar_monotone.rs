//! Increasing scalar functions, their maximal monotone extension (jumps
//! filled with vertical segments), resolvents, Yosida approximations and
//! Moreau envelopes.
//!
//! Every drift is a piecewise closed-form function: ordered branches, each a
//! constant plus a nonnegative combination of odd powers `x|x|^{p-1}`. At a
//! breakpoint the graph takes the whole segment `[f(x-), f(x+)]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Default absolute tolerance of scalar root solves.
pub const DEFAULT_ROOT_TOL: f64 = 1e-12;

/// Default absolute tolerance of the primitive quadrature.
pub const DEFAULT_QUAD_TOL: f64 = 1e-12;

/// Upper bound on bracket doublings before a resolvent solve is declared failed.
pub const MAX_BRACKET_DOUBLINGS: u32 = 200;

const GROWTH_SAMPLES: usize = 100_000;

/// One term of a branch expression.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    /// Constant offset.
    Const(f64),
    /// `coeff * x * |x|^(exponent - 1)` with `coeff >= 0`, `exponent > 0`.
    Power { coeff: f64, exponent: f64 },
}

/// Declarative description of a drift, loadable from configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    /// `f = 0`.
    Zero,
    /// `f(x) = slope * x`, `slope >= 0`.
    Linear { slope: f64 },
    /// `f(x) = x^3`.
    Cube,
    /// `f(x) = x |x|^(exponent - 1)`.
    OddPower { exponent: f64 },
    /// `f(x) = sgn(x)`, filled to `[-1, 1]` at the origin.
    Sign,
    /// `f(x) = sgn(x) + x`.
    SignPlusLinear,
    /// Ordered breakpoints `b_1 < ... < b_n` splitting the line into `n + 1`
    /// half-open branches `[b_i, b_{i+1})`.
    Piecewise {
        breakpoints: Vec<f64>,
        branches: Vec<Vec<Term>>,
        growth_exponent: f64,
        growth_constant: f64,
    },
}

impl GraphSpec {
    /// Short human-readable label.
    pub fn label(&self) -> String {
        match self {
            GraphSpec::Zero => "zero".into(),
            GraphSpec::Linear { slope } => format!("linear({slope})"),
            GraphSpec::Cube => "cube".into(),
            GraphSpec::OddPower { exponent } => format!("odd_power({exponent})"),
            GraphSpec::Sign => "sign".into(),
            GraphSpec::SignPlusLinear => "sign_plus_linear".into(),
            GraphSpec::Piecewise { breakpoints, .. } => {
                format!("piecewise({} branches)", breakpoints.len() + 1)
            }
        }
    }

    /// The fixed drift suite used throughout the invariant and acceptance tests:
    /// `x`, `x^3`, `x|x|`, `x|x|^3`, `sgn`, `sgn + x`.
    pub fn test_suite() -> Vec<GraphSpec> {
        vec![
            GraphSpec::Linear { slope: 1.0 },
            GraphSpec::Cube,
            GraphSpec::OddPower { exponent: 2.0 },
            GraphSpec::OddPower { exponent: 4.0 },
            GraphSpec::Sign,
            GraphSpec::SignPlusLinear,
        ]
    }

    /// `(breakpoints, branches, d, C_f)`.
    fn expand(&self) -> (Vec<f64>, Vec<Vec<Term>>, f64, f64) {
        let power = |coeff, exponent| Term::Power { coeff, exponent };
        match self {
            GraphSpec::Zero => (vec![], vec![vec![]], 0.0, 1.0),
            GraphSpec::Linear { slope } => (
                vec![],
                vec![vec![power(*slope, 1.0)]],
                1.0,
                slope.abs().max(f64::MIN_POSITIVE),
            ),
            GraphSpec::Cube => (vec![], vec![vec![power(1.0, 3.0)]], 3.0, 1.0),
            GraphSpec::OddPower { exponent } => {
                (vec![], vec![vec![power(1.0, *exponent)]], *exponent, 1.0)
            }
            GraphSpec::Sign => (
                vec![0.0],
                vec![vec![Term::Const(-1.0)], vec![Term::Const(1.0)]],
                0.0,
                1.0,
            ),
            GraphSpec::SignPlusLinear => (
                vec![0.0],
                vec![
                    vec![Term::Const(-1.0), power(1.0, 1.0)],
                    vec![Term::Const(1.0), power(1.0, 1.0)],
                ],
                1.0,
                1.0,
            ),
            GraphSpec::Piecewise {
                breakpoints,
                branches,
                growth_exponent,
                growth_constant,
            } => (
                breakpoints.clone(),
                branches.clone(),
                *growth_exponent,
                *growth_constant,
            ),
        }
    }
}

/// Selection of an element of the filled graph `[f(x-), f(x+)]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Section {
    /// `f(x-)`.
    Lower,
    /// `f(x+)`.
    Upper,
    /// Midpoint of the segment.
    Mid,
    /// Element of minimal absolute value.
    MinNorm,
    /// Element of maximal absolute value.
    MaxNorm,
}

#[derive(Clone, Debug)]
struct Monomial<T> {
    coeff: T,
    exponent: T,
    integer: Option<i32>,
}

impl<T: Real> Monomial<T> {
    #[inline]
    fn eval(&self, x: T) -> T {
        let a = x.abs();
        let mag = match self.integer {
            Some(1) => a,
            Some(n) => a.powi(n),
            None => a.powf(self.exponent),
        };
        if x < T::zero() {
            -self.coeff * mag
        } else {
            self.coeff * mag
        }
    }
}

#[derive(Clone, Debug)]
struct Branch<T> {
    start: T,
    constant: T,
    monomials: Vec<Monomial<T>>,
}

impl<T: Real> Branch<T> {
    #[inline]
    fn eval(&self, x: T) -> T {
        self.monomials
            .iter()
            .fold(self.constant, |acc, m| acc + m.eval(x))
    }
}

/// Anything that behaves like an increasing (possibly multivalued) scalar map.
pub trait MonotoneMap<T: Real> {
    /// `f(x-)`, the lower end of the filled graph at `x`.
    fn lower(&self, x: T) -> Result<T>;
    /// `f(x+)`, the upper end of the filled graph at `x`.
    fn upper(&self, x: T) -> Result<T>;
    /// Points where the resolvent is tried exactly before bisecting (jump locations).
    fn anchors(&self) -> &[T] {
        &[]
    }
}

/// An increasing function on the real line together with its growth data.
#[derive(Clone, Debug)]
pub struct MonotoneGraph<T> {
    spec: GraphSpec,
    branches: Vec<Branch<T>>,
    jump_points: Vec<T>,
    growth_exponent: T,
    growth_constant: T,
    zero_in_graph: bool,
}

impl<T: Real> MonotoneGraph<T> {
    pub fn from_spec(spec: &GraphSpec) -> Result<Self> {
        let (breakpoints, terms, d, c_f) = spec.expand();
        if terms.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidGraph(format!(
                "{} breakpoints need {} branches, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                terms.len()
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite())
            || breakpoints.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidGraph(
                "breakpoints must be finite and strictly increasing".into(),
            ));
        }
        if !(d >= 0.0 && d.is_finite()) {
            return Err(Error::InvalidGraph(format!(
                "growth exponent {d} must be finite and >= 0"
            )));
        }
        if !(c_f > 0.0 && c_f.is_finite()) {
            return Err(Error::InvalidGraph(format!(
                "growth constant {c_f} must be finite and > 0"
            )));
        }
        let mut branches = Vec::with_capacity(terms.len());
        for (i, branch_terms) in terms.iter().enumerate() {
            let start = if i == 0 {
                T::neg_infinity()
            } else {
                T::lit(breakpoints[i - 1])
            };
            let mut constant = T::zero();
            let mut monomials = Vec::new();
            for term in branch_terms {
                match *term {
                    Term::Const(c) if c.is_finite() => constant = constant + T::lit(c),
                    Term::Power { coeff, exponent }
                        if coeff >= 0.0
                            && exponent > 0.0
                            && exponent.is_finite()
                            && coeff.is_finite() =>
                    {
                        let integer = (exponent.fract() == 0.0 && exponent <= 64.0)
                            .then_some(exponent as i32);
                        if coeff > 0.0 {
                            monomials.push(Monomial {
                                coeff: T::lit(coeff),
                                exponent: T::lit(exponent),
                                integer,
                            });
                        }
                    }
                    other => {
                        return Err(Error::InvalidGraph(format!(
                            "branch {i}: term {other:?} is not finite and nondecreasing"
                        )))
                    }
                }
            }
            branches.push(Branch {
                start,
                constant,
                monomials,
            });
        }
        let mut jump_points = Vec::new();
        for i in 1..branches.len() {
            let b = branches[i].start;
            let left = branches[i - 1].eval(b);
            let right = branches[i].eval(b);
            if left > right {
                return Err(Error::InvalidGraph(format!(
                    "decreasing jump at {b}: f(x-) = {left} > f(x+) = {right}"
                )));
            }
            if left < right {
                jump_points.push(b);
            }
        }
        let mut graph = MonotoneGraph {
            spec: spec.clone(),
            branches,
            jump_points,
            growth_exponent: T::lit(d),
            growth_constant: T::lit(c_f),
            zero_in_graph: false,
        };
        graph.zero_in_graph =
            graph.left_limit(T::zero()) <= T::zero() && graph.right_limit(T::zero()) >= T::zero();
        graph.check_growth(GROWTH_SAMPLES)?;
        Ok(graph)
    }

    pub fn spec(&self) -> &GraphSpec {
        &self.spec
    }

    pub fn jump_points(&self) -> &[T] {
        &self.jump_points
    }

    pub fn growth_exponent(&self) -> T {
        self.growth_exponent
    }

    pub fn growth_constant(&self) -> T {
        self.growth_constant
    }

    /// Whether `0 ∈ f̃(0)`.
    pub fn zero_in_graph(&self) -> bool {
        self.zero_in_graph
    }

    /// True when every branch is the zero function.
    pub fn is_zero(&self) -> bool {
        self.branches
            .iter()
            .all(|b| b.constant == T::zero() && b.monomials.is_empty())
    }

    /// True when `f` is bounded (no power terms on any branch).
    pub fn is_bounded(&self) -> bool {
        self.branches.iter().all(|b| b.monomials.is_empty())
    }

    /// `sup |f|` for bounded graphs.
    pub fn sup_abs(&self) -> Option<T> {
        self.is_bounded().then(|| {
            self.branches
                .iter()
                .fold(T::zero(), |acc, b| acc.max(b.constant.abs()))
        })
    }

    /// Breakpoints of the branch decomposition (jump points included).
    pub fn breakpoints(&self) -> impl Iterator<Item = T> + '_ {
        self.branches.iter().skip(1).map(|b| b.start)
    }

    #[inline]
    fn branch_at_or_after(&self, x: T) -> &Branch<T> {
        let idx = self.branches.partition_point(|b| b.start <= x);
        &self.branches[idx.saturating_sub(1)]
    }

    #[inline]
    fn branch_before(&self, x: T) -> &Branch<T> {
        let idx = self.branches.partition_point(|b| b.start < x);
        &self.branches[idx.saturating_sub(1)]
    }

    /// `f(x+)`.
    #[inline]
    pub fn right_limit(&self, x: T) -> T {
        self.branch_at_or_after(x).eval(x)
    }

    /// `f(x-)`.
    #[inline]
    pub fn left_limit(&self, x: T) -> T {
        self.branch_before(x).eval(x)
    }

    /// An element of `f̃(x) = [f(x-), f(x+)]` chosen by `choice`.
    pub fn section(&self, x: T, choice: Section) -> T {
        let lo = self.left_limit(x);
        let hi = self.right_limit(x);
        match choice {
            Section::Lower => lo,
            Section::Upper => hi,
            Section::Mid => {
                if lo == hi {
                    lo
                } else {
                    lo + (hi - lo) / T::lit(2.0)
                }
            }
            Section::MinNorm => T::zero().max(lo).min(hi),
            Section::MaxNorm => {
                if lo.abs() > hi.abs() {
                    lo
                } else {
                    hi
                }
            }
        }
    }

    /// Distance from `y` to the segment `f̃(x)`.
    pub fn vertical_distance(&self, x: T, y: T) -> T {
        let lo = self.left_limit(x);
        let hi = self.right_limit(x);
        if y < lo {
            lo - y
        } else if y > hi {
            y - hi
        } else {
            T::zero()
        }
    }

    /// `C_f (1 + |x|^d)`.
    pub fn growth_bound(&self, x: T) -> T {
        self.growth_constant * (T::one() + x.abs().powf(self.growth_exponent))
    }

    /// Checks `|f(x±)| <= C_f (1 + |x|^d)` on `samples` log-spaced points of both signs.
    pub fn check_growth(&self, samples: usize) -> Result<()> {
        let half = (samples / 2).max(1);
        let slack = T::epsilon() * T::lit(64.0);
        let check = |x: T| -> Result<()> {
            let bound = self.growth_bound(x) * (T::one() + slack);
            let worst = self.left_limit(x).abs().max(self.right_limit(x).abs());
            if worst > bound {
                Err(Error::InvalidGraph(format!(
                    "growth bound fails at x = {x}: |f| = {worst} > {bound}"
                )))
            } else {
                Ok(())
            }
        };
        check(T::zero())?;
        for jump in &self.jump_points {
            check(*jump)?;
        }
        for i in 0..half {
            let s = T::lit(-6.0) + T::lit(12.0) * T::count(i) / T::count(half.max(2) - 1);
            let x = T::lit(10.0).powf(s);
            check(x)?;
            check(-x)?;
        }
        Ok(())
    }

    /// Unique `y` with `x ∈ y + λ f̃(y)`, i.e. `R_λ x = (I + λ f)^{-1} x`.
    pub fn resolvent(&self, lambda: T, x: T, tol: T) -> Result<T> {
        resolvent_of(self, lambda, x, tol)
    }

    /// Convex primitive `φ(x) = ∫_0^x f` with `φ(0) = 0`.
    ///
    /// Each branch is integrated separately by adaptive Simpson, so jumps
    /// contribute nothing.
    pub fn primitive(&self, x: T, quad_tol: T) -> T {
        if x == T::zero() {
            return T::zero();
        }
        let (a, b, sign) = if x > T::zero() {
            (T::zero(), x, T::one())
        } else {
            (x, T::zero(), -T::one())
        };
        let mut cuts = vec![a];
        cuts.extend(self.breakpoints().filter(|&p| p > a && p < b));
        cuts.push(b);
        let pieces = T::count(cuts.len() - 1);
        let total = cuts.windows(2).fold(T::zero(), |acc, w| {
            let (lo, hi) = (w[0], w[1]);
            let mid = lo + (hi - lo) / T::lit(2.0);
            let branch = self.branch_at_or_after(mid);
            acc + adaptive_simpson(&|s| branch.eval(s), lo, hi, quad_tol / pieces)
        });
        sign * total
    }
}

impl<T: Real> MonotoneMap<T> for MonotoneGraph<T> {
    #[inline]
    fn lower(&self, x: T) -> Result<T> {
        Ok(self.left_limit(x))
    }

    #[inline]
    fn upper(&self, x: T) -> Result<T> {
        Ok(self.right_limit(x))
    }

    fn anchors(&self) -> &[T] {
        &self.jump_points
    }
}

/// Solves `x ∈ y + λ m(y)` by bracket doubling from `[x - |x| - 1, x + |x| + 1]`
/// followed by bisection until the bracket is no wider than `tol` (or no
/// representable midpoint remains).
pub fn resolvent_of<T: Real, M: MonotoneMap<T> + ?Sized>(
    map: &M,
    lambda: T,
    x: T,
    tol: T,
) -> Result<T> {
    if !x.is_finite() {
        return Err(Error::NonFiniteInput(format!("resolvent argument {x}")));
    }
    if !(lambda > T::zero()) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "resolvent parameter lambda = {lambda} must be > 0"
        )));
    }
    if !(tol > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "root tolerance {tol} must be > 0"
        )));
    }
    // below(y) <=> y lies strictly left of the solution.
    let below = |y: T| -> Result<bool> { Ok(y + lambda * map.upper(y)? < x) };
    for &a in std::iter::once(&T::zero()).chain(map.anchors()) {
        if a + lambda * map.lower(a)? <= x && x <= a + lambda * map.upper(a)? {
            return Ok(a);
        }
    }
    let mut width = x.abs() + T::one();
    let mut doublings = 0u32;
    let mut lo = x - width;
    while !below(lo)? {
        width = width + width;
        lo = x - width;
        doublings += 1;
        if doublings > MAX_BRACKET_DOUBLINGS || !lo.is_finite() {
            return Err(Error::BracketFailure {
                x: x.as_f64(),
                doublings,
            });
        }
    }
    let mut width = x.abs() + T::one();
    let mut hi = x + width;
    while below(hi)? {
        width = width + width;
        hi = x + width;
        doublings += 1;
        if doublings > MAX_BRACKET_DOUBLINGS || !hi.is_finite() {
            return Err(Error::BracketFailure {
                x: x.as_f64(),
                doublings,
            });
        }
    }
    let half = T::lit(0.5);
    while hi - lo > tol {
        let mid = lo + (hi - lo) * half;
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo + (hi - lo) * half)
}

fn simpson<T: Real>(fa: T, fm: T, fb: T, a: T, b: T) -> T {
    (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb)
}

fn adaptive_simpson<T: Real>(f: &dyn Fn(T) -> T, a: T, b: T, tol: T) -> T {
    fn recurse<T: Real>(
        f: &dyn Fn(T) -> T,
        a: T,
        b: T,
        fa: T,
        fm: T,
        fb: T,
        whole: T,
        tol: T,
        depth: u32,
    ) -> T {
        let two = T::lit(2.0);
        let m = a + (b - a) / two;
        let lm = a + (m - a) / two;
        let rm = m + (b - m) / two;
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= T::lit(15.0) * tol {
            left + right + delta / T::lit(15.0)
        } else {
            recurse(f, a, m, fa, flm, fm, left, tol / two, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, tol / two, depth - 1)
        }
    }
    if a == b {
        return T::zero();
    }
    let m = a + (b - a) / T::lit(2.0);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// A monotone map viewed through its Yosida regularization at parameter `λ`.
#[derive(Clone, Copy, Debug)]
pub struct YosidaView<'g, T, M: ?Sized = MonotoneGraph<T>> {
    map: &'g M,
    lambda: T,
    root_tol: T,
}

impl<'g, T: Real, M: MonotoneMap<T> + ?Sized> YosidaView<'g, T, M> {
    pub fn new(map: &'g M, lambda: T, root_tol: T) -> Result<Self> {
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda = {lambda} must be > 0"
            )));
        }
        if !(root_tol > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "root_tol = {root_tol} must be > 0"
            )));
        }
        Ok(YosidaView {
            map,
            lambda,
            root_tol,
        })
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn root_tol(&self) -> T {
        self.root_tol
    }

    pub fn map(&self) -> &'g M {
        self.map
    }

    /// `R_λ x`.
    pub fn resolvent(&self, x: T) -> Result<T> {
        resolvent_of(self.map, self.lambda, x, self.root_tol)
    }

    /// `f_λ(x) = (x - R_λ x) / λ`.
    pub fn yosida(&self, x: T) -> Result<T> {
        Ok((x - self.resolvent(x)?) / self.lambda)
    }

    /// `(R_λ x, f_λ(x))` from a single root solve.
    pub fn resolvent_and_yosida(&self, x: T) -> Result<(T, T)> {
        let r = self.resolvent(x)?;
        Ok((r, (x - r) / self.lambda))
    }
}

impl<'g, T: Real> YosidaView<'g, T, MonotoneGraph<T>> {
    /// Moreau envelope `φ_λ(x) = φ(R_λ x) + (λ/2) f_λ(x)^2`.
    pub fn moreau(&self, x: T) -> Result<T> {
        let (r, fl) = self.resolvent_and_yosida(x)?;
        Ok(self.map.primitive(r, T::lit(DEFAULT_QUAD_TOL)) + self.lambda / T::lit(2.0) * fl * fl)
    }
}

impl<'g, T: Real, M: MonotoneMap<T> + ?Sized> MonotoneMap<T> for YosidaView<'g, T, M> {
    fn lower(&self, x: T) -> Result<T> {
        self.yosida(x)
    }

    fn upper(&self, x: T) -> Result<T> {
        self.yosida(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = DEFAULT_ROOT_TOL;

    fn graph(spec: GraphSpec) -> MonotoneGraph<f64> {
        MonotoneGraph::from_spec(&spec).unwrap()
    }

    #[test]
    fn sections_of_sign() {
        let g = graph(GraphSpec::Sign);
        assert_eq!(g.section(0.0, Section::Mid), 0.0);
        assert_eq!(g.section(0.0, Section::Upper), 1.0);
        assert_eq!(g.section(0.0, Section::Lower), -1.0);
        assert_eq!(g.section(0.0, Section::MinNorm), 0.0);
        assert_eq!(g.section(0.0, Section::MaxNorm).abs(), 1.0);
        assert_eq!(g.jump_points(), &[0.0]);
        assert!(g.zero_in_graph());
        for choice in [
            Section::Lower,
            Section::Upper,
            Section::Mid,
            Section::MinNorm,
            Section::MaxNorm,
        ] {
            assert_eq!(g.section(-0.3, choice), -1.0);
            assert_eq!(g.section(2.0, choice), 1.0);
        }
    }

    #[test]
    fn cube_is_continuous() {
        let g = graph(GraphSpec::Cube);
        for choice in [Section::Lower, Section::Upper, Section::Mid] {
            assert_eq!(g.section(2.0, choice), 8.0);
        }
        assert!(g.jump_points().is_empty());
    }

    #[test]
    fn decreasing_jump_rejected() {
        let spec = GraphSpec::Piecewise {
            breakpoints: vec![0.0],
            branches: vec![vec![Term::Const(1.0)], vec![Term::Const(-1.0)]],
            growth_exponent: 0.0,
            growth_constant: 1.0,
        };
        assert!(matches!(
            MonotoneGraph::<f64>::from_spec(&spec),
            Err(Error::InvalidGraph(_))
        ));
    }

    #[test]
    fn negative_coefficient_rejected() {
        let spec = GraphSpec::Piecewise {
            breakpoints: vec![],
            branches: vec![vec![Term::Power {
                coeff: -1.0,
                exponent: 1.0,
            }]],
            growth_exponent: 1.0,
            growth_constant: 1.0,
        };
        assert!(MonotoneGraph::<f64>::from_spec(&spec).is_err());
    }

    #[test]
    fn growth_violation_rejected() {
        let spec = GraphSpec::Piecewise {
            breakpoints: vec![],
            branches: vec![vec![Term::Power {
                coeff: 1.0,
                exponent: 3.0,
            }]],
            growth_exponent: 2.0,
            growth_constant: 1.0,
        };
        assert!(MonotoneGraph::<f64>::from_spec(&spec).is_err());
    }

    #[test]
    fn piecewise_spec_with_dead_zone() {
        // f = 0 on [-1, 1), x - 1 beyond, x + 1 below: continuous, flat in the middle.
        let spec = GraphSpec::Piecewise {
            breakpoints: vec![-1.0, 1.0],
            branches: vec![
                vec![
                    Term::Const(1.0),
                    Term::Power {
                        coeff: 1.0,
                        exponent: 1.0,
                    },
                ],
                vec![],
                vec![
                    Term::Const(-1.0),
                    Term::Power {
                        coeff: 1.0,
                        exponent: 1.0,
                    },
                ],
            ],
            growth_exponent: 1.0,
            growth_constant: 1.0,
        };
        let g = graph(spec);
        assert!(g.jump_points().is_empty());
        assert_eq!(g.section(0.5, Section::Mid), 0.0);
        assert_eq!(g.section(3.0, Section::Mid), 2.0);
        assert!((g.primitive(3.0, 1e-12) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn resolvent_examples() {
        let lin = graph(GraphSpec::Linear { slope: 1.0 });
        assert!((lin.resolvent(1.0, 2.0, TOL).unwrap() - 1.0).abs() < 1e-12);
        let sign = graph(GraphSpec::Sign);
        assert!(sign.resolvent(0.5, 0.2, TOL).unwrap().abs() < 1e-12);
        for spec in GraphSpec::test_suite() {
            let g = graph(spec);
            assert!(g.resolvent(0.7, 0.0, TOL).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn resolvent_rejects_bad_input() {
        let g = graph(GraphSpec::Cube);
        assert!(matches!(
            g.resolvent(1.0, f64::NAN, TOL),
            Err(Error::NonFiniteInput(_))
        ));
        assert!(matches!(
            g.resolvent(1.0, f64::INFINITY, TOL),
            Err(Error::NonFiniteInput(_))
        ));
        assert!(g.resolvent(0.0, 1.0, TOL).is_err());
    }

    /// A deliberately broken map (decreasing) so no bracket exists.
    struct Broken;
    impl MonotoneMap<f64> for Broken {
        fn lower(&self, x: f64) -> Result<f64> {
            Ok(-2.0 * x)
        }
        fn upper(&self, x: f64) -> Result<f64> {
            Ok(-2.0 * x)
        }
    }

    #[test]
    fn malformed_map_reports_bracket_failure() {
        assert!(matches!(
            resolvent_of(&Broken, 1.0, 1.0, TOL),
            Err(Error::BracketFailure { .. })
        ));
    }

    #[test]
    fn yosida_examples() {
        let sign = graph(GraphSpec::Sign);
        let v = YosidaView::new(&sign, 0.5, TOL).unwrap();
        assert!((v.yosida(0.2).unwrap() - 0.4).abs() < 1e-11);
        assert!((v.yosida(3.0).unwrap() - 1.0).abs() < 1e-11);
        let lin = graph(GraphSpec::Linear { slope: 1.0 });
        let v = YosidaView::new(&lin, 1.0, TOL).unwrap();
        assert!((v.yosida(2.0).unwrap() - 1.0).abs() < 1e-11);
        assert!(YosidaView::new(&lin, -1.0, TOL).is_err());
    }

    #[test]
    fn primitive_examples() {
        let cube = graph(GraphSpec::Cube);
        assert!((cube.primitive(2.0, 1e-12) - 4.0).abs() < 1e-12);
        assert_eq!(cube.primitive(0.0, 1e-12), 0.0);
        let sign = graph(GraphSpec::Sign);
        assert!((sign.primitive(-3.0, 1e-12) - 3.0).abs() < 1e-12);
        let root = graph(GraphSpec::OddPower { exponent: 0.5 });
        // ∫_0^2 s^{1/2} ds = (2/3) 2^{3/2}
        let exact = 2.0 / 3.0 * 2f64.powf(1.5);
        assert!((root.primitive(2.0, 1e-12) - exact).abs() < 1e-9);
    }

    /// Brute-force Moreau envelope: minimize `(x - y)^2 / (2λ) + φ(y)` on a fine grid
    /// with closed-form `φ`, then refine around the best point.
    fn moreau_oracle(phi: impl Fn(f64) -> f64, lambda: f64, x: f64) -> f64 {
        let obj = |y: f64| (x - y).powi(2) / (2.0 * lambda) + phi(y);
        let (mut lo, mut hi) = (x - x.abs() - 2.0, x + x.abs() + 2.0);
        for _ in 0..40 {
            let n = 200;
            let step = (hi - lo) / n as f64;
            let best = (0..=n)
                .map(|i| lo + step * i as f64)
                .min_by(|a, b| obj(*a).total_cmp(&obj(*b)))
                .unwrap();
            lo = best - 2.0 * step;
            hi = best + 2.0 * step;
        }
        obj(0.5 * (lo + hi))
    }

    #[test]
    fn moreau_examples() {
        let lin = graph(GraphSpec::Linear { slope: 1.0 });
        let v = YosidaView::new(&lin, 1.0, TOL).unwrap();
        // φ(1) + ½·f_1(2)² = 0.5 + 0.5
        assert!((v.moreau(2.0).unwrap() - 1.0).abs() < 1e-10);
        assert!((moreau_oracle(|y| 0.5 * y * y, 1.0, 2.0) - 1.0).abs() < 1e-9);

        let sign = graph(GraphSpec::Sign);
        let v = YosidaView::new(&sign, 1.0, TOL).unwrap();
        let oracle = moreau_oracle(f64::abs, 1.0, 0.5);
        assert!((v.moreau(0.5).unwrap() - oracle).abs() < 1e-6);
        assert!((oracle - 0.125).abs() < 1e-9);

        for spec in GraphSpec::test_suite() {
            let g = graph(spec);
            let v = YosidaView::new(&g, 0.3, TOL).unwrap();
            assert!(v.moreau(0.0).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn moreau_increases_toward_primitive() {
        for spec in GraphSpec::test_suite() {
            let g = graph(spec);
            for x in [-2.0, -0.3, 0.1, 1.7] {
                let phi = g.primitive(x, 1e-12);
                let mut prev = -1.0;
                for lambda in [1.0, 0.5, 0.25, 0.125, 0.01] {
                    let m = YosidaView::new(&g, lambda, TOL).unwrap().moreau(x).unwrap();
                    assert!(m >= -1e-12 && m <= phi + 1e-10, "{x} {lambda} {m} {phi}");
                    assert!(m >= prev - 1e-10);
                    prev = m;
                }
            }
        }
    }

    #[test]
    fn f32_resolvent_terminates() {
        let g = MonotoneGraph::<f32>::from_spec(&GraphSpec::Cube).unwrap();
        let r = g.resolvent(0.5, 3.0, 1e-12).unwrap();
        assert!((r + 0.5 * r * r * r - 3.0).abs() < 1e-4);
    }

    fn suite_index() -> impl Strategy<Value = usize> {
        0..GraphSpec::test_suite().len()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn yosida_lipschitz_monotone_contraction(
            idx in suite_index(), x in -5.0f64..5.0, y in -5.0f64..5.0, lambda in 0.05f64..3.0,
        ) {
            let g = graph(GraphSpec::test_suite()[idx].clone());
            let v = YosidaView::new(&g, lambda, TOL).unwrap();
            let (rx, fx) = v.resolvent_and_yosida(x).unwrap();
            let (ry, fy) = v.resolvent_and_yosida(y).unwrap();
            prop_assert!((rx - ry).abs() <= (x - y).abs() + 2.0 * TOL);
            prop_assert!((fx - fy).abs() <= (x - y).abs() / lambda + 4.0 * TOL / lambda);
            prop_assert!((fx - fy) * (x - y) >= -4.0 * TOL / lambda * (x - y).abs());
        }

        #[test]
        fn yosida_dominated_by_minimal_section(
            idx in suite_index(), x in -5.0f64..5.0, lambda in 0.01f64..3.0,
        ) {
            let g = graph(GraphSpec::test_suite()[idx].clone());
            let v = YosidaView::new(&g, lambda, TOL).unwrap();
            let bound = g.section(x, Section::MinNorm).abs();
            prop_assert!(v.yosida(x).unwrap().abs() <= bound + TOL / lambda);
            // and at the jump points themselves
            for &p in g.jump_points() {
                let b = g.section(p, Section::MinNorm).abs();
                prop_assert!(v.yosida(p).unwrap().abs() <= b + TOL / lambda);
            }
        }

        #[test]
        fn primitive_is_convex_and_nonnegative(idx in suite_index(), x in -4.0f64..4.0, y in -4.0f64..4.0) {
            let g = graph(GraphSpec::test_suite()[idx].clone());
            let mid = 0.5 * (x + y);
            let (px, py, pm) = (g.primitive(x, 1e-12), g.primitive(y, 1e-12), g.primitive(mid, 1e-12));
            prop_assert!(px >= -1e-12);
            prop_assert!(pm <= 0.5 * (px + py) + 1e-9);
        }
    }
}
