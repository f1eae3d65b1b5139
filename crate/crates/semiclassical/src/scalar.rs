//! Scalar types used for exact forward-mode differentiation.
//!
//! `f64` is the plain value type. [`Dual`] carries a gradient with respect to
//! any number of seeded variables and nests (`Dual<Dual<f64>>` gives second
//! derivatives). [`Taylor`] is a truncated univariate power series used to
//! integrate Hamiltonian flows in Taylor mode.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Clone
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
    fn value(&self) -> f64;
    /// True when every component (value and all derivative parts) is finite.
    fn all_finite(&self) -> bool;
    fn sqrt(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn abs(&self) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }

    fn sqr(&self) -> Self {
        self.clone() * self.clone()
    }

    fn recip(&self) -> Self {
        Self::cst(1.0) / self.clone()
    }

    fn powi(&self, n: i32) -> Self {
        if n == 0 {
            return Self::cst(1.0);
        }
        let mut base = if n < 0 { self.recip() } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc: Option<Self> = None;
        while e > 0 {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => a * base.clone(),
                });
            }
            e >>= 1;
            if e > 0 {
                base = base.sqr();
            }
        }
        acc.unwrap_or_else(|| Self::cst(1.0))
    }
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn powi(&self, n: i32) -> Self {
        f64::powi(*self, n)
    }
}

/// Forward-mode dual number over an arbitrary scalar. An empty `eps` vector
/// denotes a constant.
#[derive(Clone, Debug, PartialEq)]
pub struct Dual<S> {
    pub re: S,
    pub eps: Vec<S>,
}

pub type D1 = Dual<f64>;
pub type D2 = Dual<D1>;
pub type D3 = Dual<D2>;

impl<S: Scalar> Dual<S> {
    pub fn constant(re: S) -> Self {
        Dual { re, eps: Vec::new() }
    }

    pub fn variable(re: S, index: usize, n: usize) -> Self {
        let mut eps = vec![S::cst(0.0); n];
        eps[index] = S::cst(1.0);
        Dual { re, eps }
    }

    pub fn deriv(&self, i: usize) -> S {
        self.eps.get(i).cloned().unwrap_or_else(|| S::cst(0.0))
    }

    fn chain(&self, re: S, d: S) -> Self {
        Dual {
            re,
            eps: self.eps.iter().map(|e| e.clone() * d.clone()).collect(),
        }
    }

    fn zip(a: &[S], b: &[S], f: impl Fn(S, S) -> S) -> Vec<S> {
        let n = a.len().max(b.len());
        (0..n)
            .map(|i| {
                let x = a.get(i).cloned().unwrap_or_else(|| S::cst(0.0));
                let y = b.get(i).cloned().unwrap_or_else(|| S::cst(0.0));
                f(x, y)
            })
            .collect()
    }
}

/// Seeds every coordinate as an independent variable one nesting level up.
pub fn lift<T: Scalar>(x: &[T]) -> Vec<Dual<T>> {
    let n = x.len();
    x.iter()
        .enumerate()
        .map(|(i, v)| Dual::variable(v.clone(), i, n))
        .collect()
}

impl<S: Scalar> Add for Dual<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let eps = if o.eps.is_empty() {
            self.eps
        } else if self.eps.is_empty() {
            o.eps
        } else {
            Self::zip(&self.eps, &o.eps, |a, b| a + b)
        };
        Dual { re: self.re + o.re, eps }
    }
}

impl<S: Scalar> Sub for Dual<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let eps = if o.eps.is_empty() {
            self.eps
        } else if self.eps.is_empty() {
            o.eps.into_iter().map(|e| -e).collect()
        } else {
            Self::zip(&self.eps, &o.eps, |a, b| a - b)
        };
        Dual { re: self.re - o.re, eps }
    }
}

impl<S: Scalar> Mul for Dual<S> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, o: Self) -> Self {
        let eps = if o.eps.is_empty() {
            self.eps.iter().map(|e| e.clone() * o.re.clone()).collect()
        } else if self.eps.is_empty() {
            o.eps.iter().map(|e| e.clone() * self.re.clone()).collect()
        } else {
            let (ar, br) = (self.re.clone(), o.re.clone());
            Self::zip(&self.eps, &o.eps, |a, b| a * br.clone() + b * ar.clone())
        };
        Dual { re: self.re * o.re, eps }
    }
}

impl<S: Scalar> Div for Dual<S> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        let inv = o.re.recip();
        let q = self.re.clone() * inv.clone();
        let eps = if o.eps.is_empty() {
            self.eps.iter().map(|e| e.clone() * inv.clone()).collect()
        } else {
            Self::zip(&self.eps, &o.eps, |a, b| (a - q.clone() * b) * inv.clone())
        };
        Dual { re: q, eps }
    }
}

impl<S: Scalar> Neg for Dual<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual {
            re: -self.re,
            eps: self.eps.into_iter().map(|e| -e).collect(),
        }
    }
}

impl<S: Scalar> Add<f64> for Dual<S> {
    type Output = Self;
    fn add(self, c: f64) -> Self {
        Dual { re: self.re + c, eps: self.eps }
    }
}

impl<S: Scalar> Sub<f64> for Dual<S> {
    type Output = Self;
    fn sub(self, c: f64) -> Self {
        Dual { re: self.re - c, eps: self.eps }
    }
}

impl<S: Scalar> Mul<f64> for Dual<S> {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        Dual {
            re: self.re * c,
            eps: self.eps.into_iter().map(|e| e * c).collect(),
        }
    }
}

impl<S: Scalar> Div<f64> for Dual<S> {
    type Output = Self;
    fn div(self, c: f64) -> Self {
        Dual {
            re: self.re / c,
            eps: self.eps.into_iter().map(|e| e / c).collect(),
        }
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    fn cst(v: f64) -> Self {
        Dual::constant(S::cst(v))
    }
    fn value(&self) -> f64 {
        self.re.value()
    }
    fn all_finite(&self) -> bool {
        self.re.all_finite() && self.eps.iter().all(|e| e.all_finite())
    }
    fn sqrt(&self) -> Self {
        let r = self.re.sqrt();
        let d = (r.clone() * 2.0).recip();
        self.chain(r, d)
    }
    fn sin(&self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }
    fn cos(&self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }
    fn exp(&self) -> Self {
        let e = self.re.exp();
        self.chain(e.clone(), e)
    }
    fn ln(&self) -> Self {
        self.chain(self.re.ln(), self.re.recip())
    }
    fn abs(&self) -> Self {
        if self.re.value() < 0.0 {
            -self.clone()
        } else {
            self.clone()
        }
    }
    fn powi(&self, n: i32) -> Self {
        if n == 0 {
            return Self::cst(1.0);
        }
        let d = self.re.powi(n - 1) * (n as f64);
        self.chain(self.re.powi(n), d)
    }
}

/// Truncated power series `c[0] + c[1] t + ... + c[K-1] t^{K-1}`. A single
/// coefficient denotes a constant that broadcasts against longer series.
#[derive(Clone, Debug, PartialEq)]
pub struct Taylor<S> {
    pub c: Vec<S>,
}

impl<S: Scalar> Taylor<S> {
    pub fn new(c: Vec<S>) -> Self {
        assert!(!c.is_empty(), "a Taylor series needs at least one coefficient");
        Taylor { c }
    }

    pub fn constant(v: S) -> Self {
        Taylor { c: vec![v] }
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn coeff(&self, k: usize) -> S {
        self.c.get(k).cloned().unwrap_or_else(|| S::cst(0.0))
    }

    fn scale(&self, f: S) -> Self {
        Taylor {
            c: self.c.iter().map(|a| a.clone() * f.clone()).collect(),
        }
    }
}

impl<S: Scalar> Add for Taylor<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let n = self.len().max(o.len());
        Taylor {
            c: (0..n).map(|k| self.coeff(k) + o.coeff(k)).collect(),
        }
    }
}

impl<S: Scalar> Sub for Taylor<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let n = self.len().max(o.len());
        Taylor {
            c: (0..n).map(|k| self.coeff(k) - o.coeff(k)).collect(),
        }
    }
}

impl<S: Scalar> Mul for Taylor<S> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, o: Self) -> Self {
        if o.len() == 1 {
            return self.scale(o.c[0].clone());
        }
        if self.len() == 1 {
            return o.scale(self.c[0].clone());
        }
        let n = self.len().max(o.len());
        let c = (0..n)
            .map(|k| {
                let mut acc = S::cst(0.0);
                for j in 0..=k {
                    if j < self.len() && k - j < o.len() {
                        acc = acc + self.c[j].clone() * o.c[k - j].clone();
                    }
                }
                acc
            })
            .collect();
        Taylor { c }
    }
}

impl<S: Scalar> Div for Taylor<S> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        let inv = o.c[0].recip();
        if o.len() == 1 {
            return self.scale(inv);
        }
        let n = self.len().max(o.len());
        let mut q: Vec<S> = Vec::with_capacity(n);
        for k in 0..n {
            let mut acc = self.coeff(k);
            for j in 1..=k {
                acc = acc - o.coeff(j) * q[k - j].clone();
            }
            q.push(acc * inv.clone());
        }
        Taylor { c: q }
    }
}

impl<S: Scalar> Neg for Taylor<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Taylor {
            c: self.c.into_iter().map(|a| -a).collect(),
        }
    }
}

impl<S: Scalar> Add<f64> for Taylor<S> {
    type Output = Self;
    fn add(mut self, v: f64) -> Self {
        self.c[0] = self.c[0].clone() + v;
        self
    }
}

impl<S: Scalar> Sub<f64> for Taylor<S> {
    type Output = Self;
    fn sub(mut self, v: f64) -> Self {
        self.c[0] = self.c[0].clone() - v;
        self
    }
}

impl<S: Scalar> Mul<f64> for Taylor<S> {
    type Output = Self;
    fn mul(self, v: f64) -> Self {
        Taylor {
            c: self.c.into_iter().map(|a| a * v).collect(),
        }
    }
}

impl<S: Scalar> Div<f64> for Taylor<S> {
    type Output = Self;
    fn div(self, v: f64) -> Self {
        Taylor {
            c: self.c.into_iter().map(|a| a / v).collect(),
        }
    }
}

impl<S: Scalar> Scalar for Taylor<S> {
    fn cst(v: f64) -> Self {
        Taylor::constant(S::cst(v))
    }
    fn value(&self) -> f64 {
        self.c[0].value()
    }
    fn all_finite(&self) -> bool {
        self.c.iter().all(|a| a.all_finite())
    }
    fn sqrt(&self) -> Self {
        let n = self.len();
        let r0 = self.c[0].sqrt();
        let inv = (r0.clone() * 2.0).recip();
        let mut r = vec![r0];
        for k in 1..n {
            let mut acc = self.c[k].clone();
            for j in 1..k {
                acc = acc - r[j].clone() * r[k - j].clone();
            }
            r.push(acc * inv.clone());
        }
        Taylor { c: r }
    }
    fn sin(&self) -> Self {
        self.sin_cos().0
    }
    fn cos(&self) -> Self {
        self.sin_cos().1
    }
    fn exp(&self) -> Self {
        let n = self.len();
        let mut e = vec![self.c[0].exp()];
        for k in 1..n {
            let mut acc = S::cst(0.0);
            for j in 1..=k {
                acc = acc + self.c[j].clone() * e[k - j].clone() * (j as f64);
            }
            e.push(acc / (k as f64));
        }
        Taylor { c: e }
    }
    fn ln(&self) -> Self {
        let n = self.len();
        let inv = self.c[0].recip();
        let mut l = vec![self.c[0].ln()];
        for k in 1..n {
            let mut acc = self.c[k].clone();
            for j in 1..k {
                acc = acc - l[j].clone() * self.c[k - j].clone() * (j as f64 / k as f64);
            }
            l.push(acc * inv.clone());
        }
        Taylor { c: l }
    }
    fn abs(&self) -> Self {
        if self.c[0].value() < 0.0 {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl<S: Scalar> Taylor<S> {
    pub fn sin_cos(&self) -> (Self, Self) {
        let n = self.len();
        let mut s = vec![self.c[0].sin()];
        let mut c = vec![self.c[0].cos()];
        for k in 1..n {
            let mut sa = S::cst(0.0);
            let mut ca = S::cst(0.0);
            for j in 1..=k {
                let w = self.c[j].clone() * (j as f64);
                sa = sa + w.clone() * c[k - j].clone();
                ca = ca - w * s[k - j].clone();
            }
            s.push(sa / (k as f64));
            c.push(ca / (k as f64));
        }
        (Taylor { c: s }, Taylor { c })
    }
}
