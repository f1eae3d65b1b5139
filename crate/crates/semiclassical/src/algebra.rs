//! The Poisson algebra of Weyl-ordered central moments.
//!
//! A moment `Δ(q^b π^a)` is labelled by a [`MomentIndex`]. Brackets of moments
//! are polynomials in moments and `ħ` with exact rational coefficients
//! ([`MomentPolynomial`]). For one degree of freedom a closed formula is
//! available; for any number of degrees of freedom [`weyl_bracket_oracle`]
//! expands the Moyal bracket of Weyl symbols directly.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Q = Ratio<i128>;

/// Exponents `(power of q_i, power of π_i)` for every degree of freedom.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MomentIndex {
    exps: Vec<(u32, u32)>,
}

impl MomentIndex {
    pub fn new(exps: Vec<(u32, u32)>) -> Self {
        assert!(!exps.is_empty(), "a moment index needs at least one degree of freedom");
        MomentIndex { exps }
    }

    /// Single degree of freedom `Δ(q^k π^l)`.
    pub fn qp(k: u32, l: u32) -> Self {
        MomentIndex { exps: vec![(k, l)] }
    }

    pub fn zero(dof: usize) -> Self {
        MomentIndex { exps: vec![(0, 0); dof] }
    }

    /// Unit index `q_i` (`pi = false`) or `π_i` (`pi = true`), zero-based `i`.
    pub fn unit(dof: usize, i: usize, pi: bool) -> Self {
        let mut m = Self::zero(dof);
        if pi {
            m.exps[i].1 = 1;
        } else {
            m.exps[i].0 = 1;
        }
        m
    }

    pub fn exps(&self) -> &[(u32, u32)] {
        &self.exps
    }

    pub fn dof(&self) -> usize {
        self.exps.len()
    }

    pub fn order(&self) -> u32 {
        self.exps.iter().map(|(k, l)| k + l).sum()
    }

    pub fn q_power(&self) -> u32 {
        self.exps.iter().map(|e| e.0).sum()
    }

    pub fn pi_power(&self) -> u32 {
        self.exps.iter().map(|e| e.1).sum()
    }

    /// `(q power, π power)` of a single-DOF index.
    pub fn single(&self) -> Option<(u32, u32)> {
        (self.exps.len() == 1).then(|| self.exps[0])
    }

    /// Parses `q2`, `qpi`, `q2pi1`, `pi3` (one DOF) or `q1^2`, `pi1q2`,
    /// `q1pi2` (several DOFs, subscripts 1-based).
    pub fn parse(s: &str, dof: usize) -> Result<Self> {
        let bad = || Error::InvalidIndex(s.to_string());
        if dof == 0 || s.is_empty() {
            return Err(bad());
        }
        let mut exps = vec![(0u32, 0u32); dof];
        let mut seen = vec![[false; 2]; dof];
        let bytes = s.as_bytes();
        let mut i = 0;
        let digits = |i: &mut usize| -> Option<u32> {
            let start = *i;
            while *i < bytes.len() && bytes[*i].is_ascii_digit() {
                *i += 1;
            }
            (start < *i).then(|| s[start..*i].parse().ok()).flatten()
        };
        while i < bytes.len() {
            let pi = if s[i..].starts_with("pi") {
                i += 2;
                true
            } else if s[i..].starts_with('q') {
                i += 1;
                false
            } else {
                return Err(bad());
            };
            let (slot, power) = if dof == 1 {
                (0usize, digits(&mut i).unwrap_or(1))
            } else {
                let sub = digits(&mut i).ok_or_else(bad)? as usize;
                if sub == 0 || sub > dof {
                    return Err(bad());
                }
                let power = if i < bytes.len() && bytes[i] == b'^' {
                    i += 1;
                    digits(&mut i).ok_or_else(bad)?
                } else {
                    1
                };
                (sub - 1, power)
            };
            let which = usize::from(pi);
            if seen[slot][which] {
                return Err(bad());
            }
            seen[slot][which] = true;
            if pi {
                exps[slot].1 = power;
            } else {
                exps[slot].0 = power;
            }
        }
        Ok(MomentIndex { exps })
    }

    /// All indices of a given total order in canonical display order.
    pub fn all_of_order(dof: usize, order: u32) -> Vec<MomentIndex> {
        let mut out = Vec::new();
        let mut cur = vec![(0u32, 0u32); dof];
        fn rec(slot: usize, left: u32, cur: &mut Vec<(u32, u32)>, out: &mut Vec<MomentIndex>) {
            if slot == cur.len() {
                if left == 0 {
                    out.push(MomentIndex { exps: cur.clone() });
                }
                return;
            }
            for k in (0..=left).rev() {
                for l in (0..=left - k).rev() {
                    cur[slot] = (k, l);
                    rec(slot + 1, left - k - l, cur, out);
                }
            }
        }
        rec(0, order, &mut cur, &mut out);
        out
    }

    fn add(&self, o: &MomentIndex) -> MomentIndex {
        MomentIndex {
            exps: self
                .exps
                .iter()
                .zip(&o.exps)
                .map(|(a, b)| (a.0 + b.0, a.1 + b.1))
                .collect(),
        }
    }
}

impl fmt::Display for MomentIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.order() == 0 {
            return write!(f, "1");
        }
        let single = self.exps.len() == 1;
        for (i, (k, l)) in self.exps.iter().enumerate() {
            for (sym, pow) in [("q", *k), ("pi", *l)] {
                if pow == 0 {
                    continue;
                }
                write!(f, "{sym}")?;
                if single {
                    if pow > 1 {
                        write!(f, "{pow}")?;
                    }
                } else {
                    write!(f, "{}", i + 1)?;
                    if pow > 1 {
                        write!(f, "^{pow}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl FromStr for MomentIndex {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MomentIndex::parse(s, 1)
    }
}

/// Key of a polynomial term: power of ħ and the sorted list of moment factors.
pub type TermKey = (u32, Vec<MomentIndex>);

/// Finite sum of `coefficient · ħ^k · Π Δ(...)` with exact coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MomentPolynomial {
    terms: BTreeMap<TermKey, Q>,
}

impl MomentPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TermKey, &Q)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `coef · ħ^hbar_pow · Π factors`. Order-0 factors are the constant
    /// 1; any order-1 factor (`Δ(q)` or `Δ(π)`) makes the term vanish.
    pub fn add_term(&mut self, coef: Q, hbar_pow: u32, factors: Vec<MomentIndex>) {
        if coef.is_zero() || factors.iter().any(|f| f.order() == 1) {
            return;
        }
        let mut fs: Vec<MomentIndex> = factors.into_iter().filter(|f| f.order() > 0).collect();
        fs.sort();
        let key = (hbar_pow, fs);
        let entry = self.terms.entry(key.clone()).or_insert_with(Q::zero);
        *entry += coef;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn monomial(coef: Q, hbar_pow: u32, factors: Vec<MomentIndex>) -> Self {
        let mut p = Self::zero();
        p.add_term(coef, hbar_pow, factors);
        p
    }

    pub fn term_order((hbar_pow, factors): &TermKey) -> u32 {
        factors.iter().map(|f| f.order()).sum::<u32>() + 2 * hbar_pow
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for ((h, fs), c) in &other.terms {
            out.add_term(*c, *h, fs.clone());
        }
        out
    }

    pub fn minus(&self, other: &Self) -> Self {
        self.plus(&other.scaled(-Q::one()))
    }

    pub fn scaled(&self, c: Q) -> Self {
        let mut out = Self::zero();
        for ((h, fs), v) in &self.terms {
            out.add_term(*v * c, *h, fs.clone());
        }
        out
    }

    /// Evaluates with a numeric `ħ` and a moment lookup.
    pub fn eval(&self, hbar: f64, lookup: impl Fn(&MomentIndex) -> Option<f64>) -> Result<f64> {
        let mut total = 0.0;
        for ((h, fs), c) in &self.terms {
            let mut v = q_to_f64(c) * hbar.powi(*h as i32);
            for f in fs {
                v *= lookup(f).ok_or_else(|| Error::MissingMoment(f.to_string()))?;
            }
            total += v;
        }
        Ok(total)
    }

    /// Largest absolute term value, used as a scale for relative comparisons.
    pub fn eval_scale(&self, hbar: f64, lookup: impl Fn(&MomentIndex) -> Option<f64>) -> Result<f64> {
        let mut m: f64 = 0.0;
        for ((h, fs), c) in &self.terms {
            let mut v = q_to_f64(c) * hbar.powi(*h as i32);
            for f in fs {
                v *= lookup(f).ok_or_else(|| Error::MissingMoment(f.to_string()))?;
            }
            m = m.max(v.abs());
        }
        Ok(m)
    }
}

fn q_to_f64(q: &Q) -> f64 {
    q.numer().to_f64().unwrap_or(f64::NAN) / q.denom().to_f64().unwrap_or(f64::NAN)
}

impl fmt::Display for MomentPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, ((h, fs), c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            match (n, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let a = c.abs();
            let mut parts: Vec<String> = Vec::new();
            if !a.is_one() || (fs.is_empty() && *h == 0) {
                parts.push(a.to_string());
            }
            match *h {
                0 => {}
                1 => parts.push("hbar".into()),
                k => parts.push(format!("hbar^{k}")),
            }
            parts.extend(fs.iter().map(|m| m.to_string()));
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}

fn binom(n: u32, k: u32) -> i128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: i128 = 1;
    for i in 0..k {
        r = r * (n - i) as i128 / (i + 1) as i128;
    }
    r
}

fn factorial(n: u32) -> i128 {
    (1..=n as i128).product()
}

fn falling(n: u32, k: u32) -> i128 {
    if k > n {
        return 0;
    }
    ((n - k + 1)..=n).map(|x| x as i128).product()
}

/// `K^n_{abcd} = Σ_m (-1)^m m! (n-m)! C(a,m) C(b,n-m) C(c,n-m) C(d,m)`.
pub fn k_coefficient(n: u32, a: u32, b: u32, c: u32, d: u32) -> Result<i128> {
    let max = (a + c).min(b + d).min(a + b).min(c + d);
    if n > max {
        return Err(Error::InvalidInput(format!("K^{n}: n exceeds {max}")));
    }
    let mut k = 0i128;
    for m in 0..=n {
        let sign = if m % 2 == 0 { 1 } else { -1 };
        k += sign
            * factorial(m)
            * factorial(n - m)
            * binom(a, m)
            * binom(b, n - m)
            * binom(c, n - m)
            * binom(d, m);
    }
    Ok(k)
}

/// Drops every term of semiclassical order above `s`.
pub fn truncate(p: &MomentPolynomial, s: u32) -> MomentPolynomial {
    MomentPolynomial {
        terms: p
            .terms
            .iter()
            .filter(|(k, _)| MomentPolynomial::term_order(k) <= s)
            .map(|(k, v)| (k.clone(), *v))
            .collect(),
    }
}

/// Closed-form bracket `{Δ(q^b π^a), Δ(q^d π^c)}` for one degree of freedom,
/// truncated at order `s` when given.
pub fn bracket_single_dof(
    lhs: &MomentIndex,
    rhs: &MomentIndex,
    s: Option<u32>,
) -> Result<MomentPolynomial> {
    let (b, a) = lhs
        .single()
        .ok_or_else(|| Error::InvalidIndex(lhs.to_string()))?;
    let (d, c) = rhs
        .single()
        .ok_or_else(|| Error::InvalidIndex(rhs.to_string()))?;
    let mut p = MomentPolynomial::zero();
    if a > 0 && d > 0 {
        p.add_term(
            Q::from_integer((a * d) as i128),
            0,
            vec![MomentIndex::qp(b, a - 1), MomentIndex::qp(d - 1, c)],
        );
    }
    if b > 0 && c > 0 {
        p.add_term(
            Q::from_integer(-((b * c) as i128)),
            0,
            vec![MomentIndex::qp(b - 1, a), MomentIndex::qp(d, c - 1)],
        );
    }
    let max = (a + c).min(b + d).min(a + b).min(c + d);
    let mut n = 1;
    while n <= max {
        let k = k_coefficient(n, a, b, c, d)?;
        let sign = if ((n - 1) / 2) % 2 == 0 { 1 } else { -1 };
        let coef = Q::new(sign * k, 1i128 << (n - 1));
        p.add_term(coef, n - 1, vec![MomentIndex::qp(b + d - n, a + c - n)]);
        n += 2;
    }
    Ok(match s {
        Some(s) => truncate(&p, s),
        None => p,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Var {
    /// Raw Weyl-ordered expectation value.
    E(MomentIndex),
    /// Expectation value of `q_i` or `π_i`.
    Mu(usize, bool),
    /// Central moment.
    D(MomentIndex),
}

type Mono = (u32, Vec<Var>);

#[derive(Clone, Debug, Default)]
struct Poly(BTreeMap<Mono, Q>);

impl Poly {
    fn one() -> Self {
        let mut p = Poly::default();
        p.add(Q::one(), 0, vec![]);
        p
    }

    fn var(v: Var) -> Self {
        let mut p = Poly::default();
        p.add(Q::one(), 0, vec![v]);
        p
    }

    fn add(&mut self, c: Q, h: u32, mut vars: Vec<Var>) {
        if c.is_zero() {
            return;
        }
        vars.sort();
        let key = (h, vars);
        let e = self.0.entry(key.clone()).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.0.remove(&key);
        }
    }

    fn add_poly(&mut self, o: &Poly) {
        for ((h, vs), c) in &o.0 {
            self.add(*c, *h, vs.clone());
        }
    }

    fn mul(&self, o: &Poly) -> Poly {
        let mut out = Poly::default();
        for ((h1, v1), c1) in &self.0 {
            for ((h2, v2), c2) in &o.0 {
                let mut vs = v1.clone();
                vs.extend(v2.iter().cloned());
                out.add(*c1 * *c2, h1 + h2, vs);
            }
        }
        out
    }

    fn scale(&self, c: Q, h: u32) -> Poly {
        let mut out = Poly::default();
        for ((h0, vs), v) in &self.0 {
            out.add(*v * c, h0 + h, vs.clone());
        }
        out
    }

    /// Distinct variables with their multiplicities, for each monomial.
    fn partials(&self) -> Vec<(Var, Poly)> {
        let mut by_var: BTreeMap<Var, Poly> = BTreeMap::new();
        for ((h, vs), c) in &self.0 {
            let mut i = 0;
            while i < vs.len() {
                let mut j = i;
                while j < vs.len() && vs[j] == vs[i] {
                    j += 1;
                }
                let mult = (j - i) as i128;
                let mut rest = vs.clone();
                rest.remove(i);
                by_var
                    .entry(vs[i].clone())
                    .or_default()
                    .add(*c * Q::from_integer(mult), *h, rest);
                i = j;
            }
        }
        by_var.into_iter().collect()
    }
}

/// Moyal bracket of the Weyl symbols `x^A` and `x^B`, written in raw
/// expectation variables.
fn moyal_monomials(a: &MomentIndex, b: &MomentIndex) -> Poly {
    let dof = a.dof();
    let deg = a.order() + b.order();
    let mut out = Poly::default();
    let mut n = 1;
    while n <= deg {
        // alpha (q-derivatives of f) and beta (p-derivatives of f) per DOF
        let mut idx = vec![0u32; 2 * dof];
        enumerate_splits(&mut idx, 0, n, &mut |split| {
            let (alpha, beta) = split.split_at(dof);
            let mut num: i128 = 1;
            let mut den: i128 = 1;
            let mut exps = Vec::with_capacity(dof);
            for i in 0..dof {
                let (fa, fb) = a.exps[i];
                let (gc, gd) = b.exps[i];
                let (al, be) = (alpha[i], beta[i]);
                num *= falling(fa, al) * falling(fb, be) * falling(gd, al) * falling(gc, be);
                if num == 0 {
                    return;
                }
                den *= factorial(al) * factorial(be);
                exps.push((fa - al + gc - be, fb - be + gd - al));
            }
            let beta_sum: u32 = beta.iter().sum();
            let mut sign = if beta_sum % 2 == 0 { 1 } else { -1 };
            if ((n - 1) / 2) % 2 == 1 {
                sign = -sign;
            }
            let coef = Q::new(sign * num, den * (1i128 << (n - 1)));
            let m = MomentIndex { exps };
            if m.order() == 0 {
                out.add(coef, n - 1, vec![]);
            } else {
                out.add(coef, n - 1, vec![Var::E(m)]);
            }
        });
        n += 2;
    }
    out
}

fn enumerate_splits(idx: &mut Vec<u32>, slot: usize, left: u32, f: &mut impl FnMut(&[u32])) {
    if slot == idx.len() - 1 {
        idx[slot] = left;
        f(idx);
        return;
    }
    for v in 0..=left {
        idx[slot] = v;
        enumerate_splits(idx, slot + 1, left - v, f);
    }
}

/// Central moment `Δ(A)` written in raw expectations: expand
/// `Π (q_i - μ_i)^{k_i} (π_i - ν_i)^{l_i}` under the expectation.
fn central_in_raw(m: &MomentIndex) -> Poly {
    let dof = m.dof();
    let mut out = Poly::default();
    let mut sub = vec![0u32; 2 * dof];
    fn rec(m: &MomentIndex, sub: &mut Vec<u32>, slot: usize, out: &mut Poly) {
        let dof = m.dof();
        if slot == 2 * dof {
            let mut coef: i128 = 1;
            let mut vars = Vec::new();
            let mut exps = Vec::with_capacity(dof);
            for i in 0..dof {
                let (k, l) = m.exps[i];
                let (iq, ip) = (sub[2 * i], sub[2 * i + 1]);
                coef *= binom(k, iq) * binom(l, ip);
                if (k - iq + l - ip) % 2 == 1 {
                    coef = -coef;
                }
                for _ in 0..(k - iq) {
                    vars.push(Var::E(MomentIndex::unit(dof, i, false)));
                }
                for _ in 0..(l - ip) {
                    vars.push(Var::E(MomentIndex::unit(dof, i, true)));
                }
                exps.push((iq, ip));
            }
            let e = MomentIndex { exps };
            if e.order() > 0 {
                vars.push(Var::E(e));
            }
            out.add(Q::from_integer(coef), 0, vars);
            return;
        }
        let i = slot / 2;
        let top = if slot % 2 == 0 { m.exps[i].0 } else { m.exps[i].1 };
        for v in 0..=top {
            sub[slot] = v;
            rec(m, sub, slot + 1, out);
        }
    }
    rec(m, &mut sub, 0, &mut out);
    out
}

/// Raw expectation `E(A)` in terms of means and central moments.
fn raw_in_central(m: &MomentIndex) -> Poly {
    let dof = m.dof();
    let mut out = Poly::default();
    let mut sub = vec![0u32; 2 * dof];
    fn rec(m: &MomentIndex, sub: &mut Vec<u32>, slot: usize, out: &mut Poly) {
        let dof = m.dof();
        if slot == 2 * dof {
            let mut coef: i128 = 1;
            let mut vars = Vec::new();
            let mut exps = Vec::with_capacity(dof);
            for i in 0..dof {
                let (k, l) = m.exps[i];
                let (iq, ip) = (sub[2 * i], sub[2 * i + 1]);
                coef *= binom(k, iq) * binom(l, ip);
                vars.extend(std::iter::repeat(Var::Mu(i, false)).take((k - iq) as usize));
                vars.extend(std::iter::repeat(Var::Mu(i, true)).take((l - ip) as usize));
                exps.push((iq, ip));
            }
            let d = MomentIndex { exps };
            match d.order() {
                0 => {}
                1 => return,
                _ => vars.push(Var::D(d)),
            }
            out.add(Q::from_integer(coef), 0, vars);
            return;
        }
        let i = slot / 2;
        let top = if slot % 2 == 0 { m.exps[i].0 } else { m.exps[i].1 };
        for v in 0..=top {
            sub[slot] = v;
            rec(m, sub, slot + 1, out);
        }
    }
    rec(m, &mut sub, 0, &mut out);
    out
}

/// `{Δ(A), Δ(B)} = <[Â, B̂]>/(iħ)` for Weyl-ordered central monomials of any
/// number of degrees of freedom, computed from the Moyal bracket of Weyl
/// symbols. Independent of the closed single-DOF formula.
pub fn weyl_bracket_oracle(lhs: &MomentIndex, rhs: &MomentIndex) -> Result<MomentPolynomial> {
    for m in [lhs, rhs] {
        if m.order() > 6 {
            return Err(Error::DegreeTooLarge(m.order()));
        }
    }
    if lhs.dof() != rhs.dof() {
        return Err(Error::InvalidInput("indices have different DOF counts".into()));
    }
    let pa = central_in_raw(lhs);
    let pb = central_in_raw(rhs);
    let mut raw = Poly::default();
    for (u, du) in pa.partials() {
        for (v, dv) in pb.partials() {
            let (Var::E(eu), Var::E(ev)) = (&u, &v) else {
                unreachable!("raw stage only holds expectation variables");
            };
            let br = moyal_monomials(eu, ev);
            if br.0.is_empty() {
                continue;
            }
            raw.add_poly(&du.mul(&dv).mul(&br));
        }
    }
    // Re-centre: substitute raw expectations by means and central moments.
    let mut centred = Poly::default();
    for ((h, vs), c) in &raw.0 {
        let mut term = Poly::one().scale(*c, *h);
        for v in vs {
            let Var::E(e) = v else { unreachable!() };
            let sub = if e.order() == 1 {
                let (i, pi) = e
                    .exps
                    .iter()
                    .enumerate()
                    .find_map(|(i, (k, l))| {
                        if *k == 1 {
                            Some((i, false))
                        } else if *l == 1 {
                            Some((i, true))
                        } else {
                            None
                        }
                    })
                    .expect("order-one index has a unit entry");
                Poly::var(Var::Mu(i, pi))
            } else {
                raw_in_central(e)
            };
            term = term.mul(&sub);
        }
        centred.add_poly(&term);
    }
    let mut out = MomentPolynomial::zero();
    for ((h, vs), c) in centred.0 {
        let mut factors = Vec::new();
        for v in vs {
            match v {
                Var::D(d) => factors.push(d),
                other => {
                    return Err(Error::InvalidInput(format!(
                        "expectation values failed to cancel ({other:?})"
                    )))
                }
            }
        }
        out.add_term(c, h, factors);
    }
    Ok(out)
}

/// The sum of two indices, used for multiplicities in tests.
pub fn index_sum(a: &MomentIndex, b: &MomentIndex) -> MomentIndex {
    a.add(b)
}

/// Numeric moment values for a given truncation, with expectation values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawState", into = "RawState")]
pub struct MomentState {
    pub hbar: f64,
    pub dof: usize,
    pub expectations: BTreeMap<String, f64>,
    pub moments: BTreeMap<MomentIndex, f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    hbar: f64,
    #[serde(default = "one_dof")]
    dof: usize,
    #[serde(default)]
    expectations: BTreeMap<String, f64>,
    moments: BTreeMap<String, f64>,
}

fn one_dof() -> usize {
    1
}

impl TryFrom<RawState> for MomentState {
    type Error = Error;
    fn try_from(r: RawState) -> Result<Self> {
        let moments = r
            .moments
            .into_iter()
            .map(|(k, v)| Ok((MomentIndex::parse(&k, r.dof)?, v)))
            .collect::<Result<_>>()?;
        Ok(MomentState {
            hbar: r.hbar,
            dof: r.dof,
            expectations: r.expectations,
            moments,
        })
    }
}

impl From<MomentState> for RawState {
    fn from(s: MomentState) -> Self {
        RawState {
            hbar: s.hbar,
            dof: s.dof,
            expectations: s.expectations,
            moments: s.moments.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }
}

impl MomentState {
    pub fn new(hbar: f64, dof: usize) -> Self {
        MomentState {
            hbar,
            dof,
            expectations: BTreeMap::new(),
            moments: BTreeMap::new(),
        }
    }

    pub fn get(&self, m: &MomentIndex) -> Option<f64> {
        self.moments.get(m).copied()
    }

    pub fn get_str(&self, key: &str) -> Option<f64> {
        MomentIndex::parse(key, self.dof).ok().and_then(|m| self.get(&m))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("moment states always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidInput(e.to_string()))
    }
}

/// Pairs `(j, k)` (1-based) for which
/// `Δ(q_j²)Δ(π_k²) − Δ(q_jπ_k)² ≥ ħ²/4 δ_jk` fails by more than 1e-12.
pub fn uncertainty_check(state: &MomentState) -> Result<Vec<(usize, usize)>> {
    let n = state.dof;
    let need = |m: MomentIndex| {
        state
            .get(&m)
            .ok_or_else(|| Error::MissingMoment(m.to_string()))
    };
    let mut bad = Vec::new();
    for j in 0..n {
        for k in 0..n {
            let qq = need(index_sum(
                &MomentIndex::unit(n, j, false),
                &MomentIndex::unit(n, j, false),
            ))?;
            let pp = need(index_sum(
                &MomentIndex::unit(n, k, true),
                &MomentIndex::unit(n, k, true),
            ))?;
            let qp = need(index_sum(
                &MomentIndex::unit(n, j, false),
                &MomentIndex::unit(n, k, true),
            ))?;
            let bound = if j == k { state.hbar * state.hbar / 4.0 } else { 0.0 };
            if qq * pp - qp * qp < bound - 1e-12 {
                bad.push((j + 1, k + 1));
            }
        }
    }
    Ok(bad)
}
