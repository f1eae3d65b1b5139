//! Canonical charts, smooth functions on them, and the canonical Poisson
//! bracket.
//!
//! Chart variables are laid out as `[s1, p1, s2, p2, ..., c1, c2, ...]`:
//! canonical pairs first, Casimir constants last. Casimir directions never
//! enter a bracket.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{lift, Dual, Scalar, D1, D2, D3};

#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalChart {
    pairs: Vec<(String, String)>,
    casimirs: Vec<String>,
}

impl CanonicalChart {
    pub fn new(pairs: &[(&str, &str)], casimirs: &[&str]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::NoPairs);
        }
        let mut seen = HashSet::new();
        for name in pairs.iter().flat_map(|(a, b)| [*a, *b]).chain(casimirs.iter().copied()) {
            if !seen.insert(name) {
                return Err(Error::DuplicateName(name.to_string()));
            }
        }
        Ok(CanonicalChart {
            pairs: pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            casimirs: casimirs.iter().map(|c| c.to_string()).collect(),
        })
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn n_casimirs(&self) -> usize {
        self.casimirs.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.pairs.len() + self.casimirs.len()
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn casimirs(&self) -> &[String] {
        &self.casimirs
    }

    /// All names in storage order.
    pub fn names(&self) -> Vec<&str> {
        self.pairs
            .iter()
            .flat_map(|(a, b)| [a.as_str(), b.as_str()])
            .chain(self.casimirs.iter().map(|c| c.as_str()))
            .collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names().iter().position(|n| *n == name)
    }

    /// Builds a point from named values; every chart name must be present
    /// exactly once and be finite.
    pub fn point(&self, values: &[(&str, f64)]) -> Result<ChartPoint> {
        let mut out = vec![f64::NAN; self.dim()];
        let mut set = vec![false; self.dim()];
        for (name, v) in values {
            let i = self
                .index_of(name)
                .ok_or_else(|| Error::UnknownName(name.to_string()))?;
            if set[i] {
                return Err(Error::DuplicateName(name.to_string()));
            }
            set[i] = true;
            out[i] = *v;
        }
        self.point_from_vec(out)
    }

    pub fn point_from_vec(&self, values: Vec<f64>) -> Result<ChartPoint> {
        if values.len() != self.dim() {
            return Err(Error::ChartMismatch(format!(
                "expected {} values, got {}",
                self.dim(),
                values.len()
            )));
        }
        let names = self.names();
        for (n, v) in names.iter().zip(&values) {
            if v.is_nan() {
                return Err(Error::MissingValue(n.to_string()));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite(n.to_string()));
            }
        }
        Ok(ChartPoint {
            chart: Arc::new(self.clone()),
            values,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChartPoint {
    chart: Arc<CanonicalChart>,
    values: Vec<f64>,
}

impl ChartPoint {
    pub fn chart(&self) -> &CanonicalChart {
        &self.chart
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.chart.index_of(name).map(|i| self.values[i])
    }

    pub fn named(&self) -> Vec<(String, f64)> {
        self.chart
            .names()
            .into_iter()
            .map(String::from)
            .zip(self.values.iter().copied())
            .collect()
    }
}

/// A smooth function of chart variables, generic over the scalar type so
/// that it can be evaluated on nested duals and Taylor series.
pub trait ChartExpr: Send + Sync + 'static {
    fn eval<T: Scalar>(&self, x: &[T]) -> T;
}

/// Object-safe evaluation at the fixed derivative depths used by
/// [`ChartFunction`].
trait Erased: Send + Sync {
    fn e0(&self, x: &[f64]) -> Result<f64>;
    fn e1(&self, x: &[D1]) -> Result<D1>;
    fn e2(&self, x: &[D2]) -> Result<D2>;
    fn e3(&self, x: &[D3]) -> Result<D3>;
}

struct Leaf<E>(E);

impl<E: ChartExpr> Erased for Leaf<E> {
    fn e0(&self, x: &[f64]) -> Result<f64> {
        Ok(self.0.eval(x))
    }
    fn e1(&self, x: &[D1]) -> Result<D1> {
        Ok(self.0.eval(x))
    }
    fn e2(&self, x: &[D2]) -> Result<D2> {
        Ok(self.0.eval(x))
    }
    fn e3(&self, x: &[D3]) -> Result<D3> {
        Ok(self.0.eval(x))
    }
}

/// Canonical bracket from the first-order parts of two dual numbers.
pub fn bracket_from_duals<T: Scalar>(f: &Dual<T>, g: &Dual<T>, n_pairs: usize) -> T {
    let mut acc = T::zero();
    for i in 0..n_pairs {
        let (s, p) = (2 * i, 2 * i + 1);
        acc = acc + f.deriv(s) * g.deriv(p) - f.deriv(p) * g.deriv(s);
    }
    acc
}

struct BracketNode {
    f: ChartFunction,
    g: ChartFunction,
    n_pairs: usize,
}

impl Erased for BracketNode {
    fn e0(&self, x: &[f64]) -> Result<f64> {
        let l = lift(x);
        Ok(bracket_from_duals(&self.f.inner.e1(&l)?, &self.g.inner.e1(&l)?, self.n_pairs))
    }
    fn e1(&self, x: &[D1]) -> Result<D1> {
        let l = lift(x);
        Ok(bracket_from_duals(&self.f.inner.e2(&l)?, &self.g.inner.e2(&l)?, self.n_pairs))
    }
    fn e2(&self, x: &[D2]) -> Result<D2> {
        let l = lift(x);
        Ok(bracket_from_duals(&self.f.inner.e3(&l)?, &self.g.inner.e3(&l)?, self.n_pairs))
    }
    fn e3(&self, _x: &[D3]) -> Result<D3> {
        Err(Error::DepthExceeded)
    }
}

#[derive(Clone, Copy)]
enum BinOp {
    Add,
    Sub,
    Mul,
}

struct BinNode {
    op: BinOp,
    f: ChartFunction,
    g: ChartFunction,
}

impl BinNode {
    fn apply<T: Scalar>(&self, a: T, b: T) -> T {
        match self.op {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
        }
    }
}

impl Erased for BinNode {
    fn e0(&self, x: &[f64]) -> Result<f64> {
        Ok(self.apply(self.f.inner.e0(x)?, self.g.inner.e0(x)?))
    }
    fn e1(&self, x: &[D1]) -> Result<D1> {
        Ok(self.apply(self.f.inner.e1(x)?, self.g.inner.e1(x)?))
    }
    fn e2(&self, x: &[D2]) -> Result<D2> {
        Ok(self.apply(self.f.inner.e2(x)?, self.g.inner.e2(x)?))
    }
    fn e3(&self, x: &[D3]) -> Result<D3> {
        Ok(self.apply(self.f.inner.e3(x)?, self.g.inner.e3(x)?))
    }
}

struct ScaleNode {
    f: ChartFunction,
    c: f64,
}

impl Erased for ScaleNode {
    fn e0(&self, x: &[f64]) -> Result<f64> {
        Ok(self.f.inner.e0(x)? * self.c)
    }
    fn e1(&self, x: &[D1]) -> Result<D1> {
        Ok(self.f.inner.e1(x)? * self.c)
    }
    fn e2(&self, x: &[D2]) -> Result<D2> {
        Ok(self.f.inner.e2(x)? * self.c)
    }
    fn e3(&self, x: &[D3]) -> Result<D3> {
        Ok(self.f.inner.e3(x)? * self.c)
    }
}

/// Type-erased chart function with a label. Cheap to clone.
#[derive(Clone)]
pub struct ChartFunction {
    label: String,
    dim: usize,
    n_pairs: usize,
    inner: Arc<dyn Erased>,
}

impl fmt::Debug for ChartFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartFunction")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .finish()
    }
}

fn finite<T: Scalar>(v: T, label: &str) -> Result<T> {
    if v.all_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(label.to_string()))
    }
}

impl ChartFunction {
    pub fn new<E: ChartExpr>(label: impl Into<String>, chart: &CanonicalChart, expr: E) -> Self {
        Self::with_layout(label, chart.dim(), chart.n_pairs(), expr)
    }

    pub fn with_layout<E: ChartExpr>(
        label: impl Into<String>,
        dim: usize,
        n_pairs: usize,
        expr: E,
    ) -> Self {
        ChartFunction {
            label: label.into(),
            dim,
            n_pairs,
            inner: Arc::new(Leaf(expr)),
        }
    }

    /// The coordinate function picking out one chart variable.
    pub fn coordinate(chart: &CanonicalChart, name: &str) -> Result<Self> {
        let i = chart
            .index_of(name)
            .ok_or_else(|| Error::UnknownName(name.to_string()))?;
        Ok(Self::new(name, chart, Coordinate(i)))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::ChartMismatch(format!(
                "`{}` expects {} variables, got {}",
                self.label,
                self.dim,
                x.len()
            )));
        }
        Ok(())
    }

    fn same_layout(&self, other: &ChartFunction) -> Result<()> {
        if self.dim != other.dim || self.n_pairs != other.n_pairs {
            return Err(Error::ChartMismatch(format!(
                "`{}` and `{}` live on different charts",
                self.label, other.label
            )));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        finite(self.inner.e0(x)?, &self.label)
    }

    pub fn eval_at(&self, x: &ChartPoint) -> Result<f64> {
        self.eval(x.values())
    }

    /// Value and gradient.
    pub fn eval_d1(&self, x: &[f64]) -> Result<D1> {
        self.check(x)?;
        finite(self.inner.e1(&lift(x))?, &self.label)
    }

    /// Value, gradient and Hessian.
    pub fn eval_d2(&self, x: &[f64]) -> Result<D2> {
        self.check(x)?;
        let l1 = lift(x);
        finite(self.inner.e2(&lift(&l1))?, &self.label)
    }

    fn binary(&self, other: &ChartFunction, op: BinOp, sym: &str) -> Result<ChartFunction> {
        self.same_layout(other)?;
        Ok(ChartFunction {
            label: format!("({} {} {})", self.label, sym, other.label),
            dim: self.dim,
            n_pairs: self.n_pairs,
            inner: Arc::new(BinNode {
                op,
                f: self.clone(),
                g: other.clone(),
            }),
        })
    }

    pub fn add(&self, other: &ChartFunction) -> Result<ChartFunction> {
        self.binary(other, BinOp::Add, "+")
    }

    pub fn sub(&self, other: &ChartFunction) -> Result<ChartFunction> {
        self.binary(other, BinOp::Sub, "-")
    }

    pub fn mul(&self, other: &ChartFunction) -> Result<ChartFunction> {
        self.binary(other, BinOp::Mul, "*")
    }

    pub fn scale(&self, c: f64) -> ChartFunction {
        ChartFunction {
            label: format!("{}*{}", c, self.label),
            dim: self.dim,
            n_pairs: self.n_pairs,
            inner: Arc::new(ScaleNode { f: self.clone(), c }),
        }
    }
}

struct Coordinate(usize);

impl ChartExpr for Coordinate {
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        x[self.0].clone()
    }
}

pub fn gradient(f: &ChartFunction, x: &ChartPoint) -> Result<Vec<f64>> {
    let d = f.eval_d1(x.values())?;
    Ok((0..f.dim()).map(|i| d.deriv(i)).collect())
}

pub fn hessian(f: &ChartFunction, x: &ChartPoint) -> Result<Vec<Vec<f64>>> {
    let d = f.eval_d2(x.values())?;
    let n = f.dim();
    Ok((0..n)
        .map(|i| (0..n).map(|j| d.deriv(i).deriv(j)).collect())
        .collect())
}

/// The bracket `{f, g}` as a new chart function. Each bracket consumes one
/// derivative level, so brackets can be nested three deep before
/// [`Error::DepthExceeded`] is raised at evaluation.
pub fn poisson_bracket(f: &ChartFunction, g: &ChartFunction) -> Result<ChartFunction> {
    f.same_layout(g)?;
    Ok(ChartFunction {
        label: format!("{{{}, {}}}", f.label, g.label),
        dim: f.dim,
        n_pairs: f.n_pairs,
        inner: Arc::new(BracketNode {
            f: f.clone(),
            g: g.clone(),
            n_pairs: f.n_pairs,
        }),
    })
}

pub fn bracket_at(f: &ChartFunction, g: &ChartFunction, x: &[f64]) -> Result<f64> {
    Ok(bracket_with_scale(f, g, x)?.0)
}

/// The bracket value together with `Σ |∂f ∂g|` over all contributing terms,
/// a natural magnitude against which to measure cancellation errors.
pub fn bracket_with_scale(f: &ChartFunction, g: &ChartFunction, x: &[f64]) -> Result<(f64, f64)> {
    f.same_layout(g)?;
    let fd = f.eval_d1(x)?;
    let gd = g.eval_d1(x)?;
    let mut val = 0.0;
    let mut scale = 0.0;
    for i in 0..f.n_pairs {
        let (s, p) = (2 * i, 2 * i + 1);
        let a = fd.deriv(s) * gd.deriv(p);
        let b = fd.deriv(p) * gd.deriv(s);
        val += a - b;
        scale += a.abs() + b.abs();
    }
    Ok((val, scale))
}

/// Hamilton's equations: `ds_i/dt = ∂H/∂p_i`, `dp_i/dt = -∂H/∂s_i`, and zero
/// rate for every Casimir.
pub fn hamiltonian_vector_field(h: &ChartFunction, x: &[f64]) -> Result<Vec<f64>> {
    let d = h.eval_d1(x)?;
    let mut v = vec![0.0; h.dim()];
    for i in 0..h.n_pairs() {
        v[2 * i] = d.deriv(2 * i + 1);
        v[2 * i + 1] = -d.deriv(2 * i);
    }
    Ok(v)
}

/// Statically typed bracket of two chart expressions; nests without limit.
pub struct Bracket<F, G> {
    pub f: F,
    pub g: G,
    pub n_pairs: usize,
}

impl<F: ChartExpr, G: ChartExpr> ChartExpr for Bracket<F, G> {
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        let l = lift(x);
        bracket_from_duals(&self.f.eval(&l), &self.g.eval(&l), self.n_pairs)
    }
}

/// Statically typed product of two chart expressions.
pub struct Product<F, G>(pub F, pub G);

impl<F: ChartExpr, G: ChartExpr> ChartExpr for Product<F, G> {
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        self.0.eval(x) * self.1.eval(x)
    }
}
