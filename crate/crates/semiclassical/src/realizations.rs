//! Casimir–Darboux realizations: moments written as smooth functions of
//! canonical pairs `(s_i, p_i)` and Casimir constants.
//!
//! Every realization has closed forms for a set of moments. Further moments
//! are generated from the recursion
//! `Δ(q^{m-1} π^{n+1}) = -(1/2m) {Δ(π²), Δ(q^m π^n)}`, applied `j` times at
//! once by reading off the `j`-th Taylor coefficient of a seed moment along
//! the Hamiltonian flow of `Δ(π²)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{MomentIndex, MomentState};
use crate::chart::{CanonicalChart, ChartExpr, ChartFunction, ChartPoint};
use crate::error::{Error, Result};
use crate::scalar::{lift, Scalar, Taylor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RealizationKind {
    Order2,
    Order3Systematic,
    Order3Ansatz,
    Order4Ansatz,
    TwodofOrder2,
}

fn mi(k: u32, l: u32) -> MomentIndex {
    MomentIndex::qp(k, l)
}

impl RealizationKind {
    pub const ALL: [RealizationKind; 5] = [
        RealizationKind::Order2,
        RealizationKind::Order3Systematic,
        RealizationKind::Order3Ansatz,
        RealizationKind::Order4Ansatz,
        RealizationKind::TwodofOrder2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RealizationKind::Order2 => "order2",
            RealizationKind::Order3Systematic => "order3_systematic",
            RealizationKind::Order3Ansatz => "order3_ansatz",
            RealizationKind::Order4Ansatz => "order4_ansatz",
            RealizationKind::TwodofOrder2 => "twodof_order2",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "order2" => RealizationKind::Order2,
            "order3_systematic" | "order3sys" => RealizationKind::Order3Systematic,
            "order3_ansatz" | "ansatz" => RealizationKind::Order3Ansatz,
            "order4_ansatz" | "order4" => RealizationKind::Order4Ansatz,
            "twodof_order2" | "twodof" => RealizationKind::TwodofOrder2,
            other => return Err(Error::UnknownName(other.to_string())),
        })
    }

    pub fn chart(self) -> CanonicalChart {
        let r = match self {
            RealizationKind::Order2 => CanonicalChart::new(&[("s", "p")], &["U"]),
            RealizationKind::Order3Systematic => {
                CanonicalChart::new(&[("s1", "p1"), ("s2", "p2"), ("s3", "p3")], &["U1"])
            }
            RealizationKind::Order3Ansatz => {
                CanonicalChart::new(&[("s1", "p1"), ("s2", "p2"), ("s3", "p3")], &["U"])
            }
            RealizationKind::Order4Ansatz => CanonicalChart::new(
                &[("s1", "p1"), ("s2", "p2"), ("s3", "p3"), ("s4", "p4"), ("s5", "p5")],
                &["U", "C"],
            ),
            RealizationKind::TwodofOrder2 => CanonicalChart::new(
                &[("s1", "p1"), ("s2", "p2"), ("beta", "p_beta"), ("alpha", "p_alpha")],
                &["U1", "U2"],
            ),
        };
        r.expect("built-in charts are valid")
    }

    pub fn dof(self) -> usize {
        match self {
            RealizationKind::TwodofOrder2 => 2,
            _ => 1,
        }
    }

    /// Truncation order of the moment algebra the realization represents.
    pub fn order(self) -> u32 {
        match self {
            RealizationKind::Order2 | RealizationKind::TwodofOrder2 => 2,
            RealizationKind::Order3Systematic | RealizationKind::Order3Ansatz => 3,
            RealizationKind::Order4Ansatz => 4,
        }
    }

    /// Moments with a transcribed closed form.
    pub fn closed_moments(self) -> Vec<MomentIndex> {
        match self {
            RealizationKind::Order2 => vec![mi(2, 0), mi(1, 1), mi(0, 2)],
            RealizationKind::Order3Systematic | RealizationKind::Order3Ansatz => {
                let mut v = MomentIndex::all_of_order(1, 2);
                v.extend(MomentIndex::all_of_order(1, 3));
                v
            }
            RealizationKind::Order4Ansatz => vec![mi(0, 2), mi(2, 0), mi(3, 0), mi(4, 0)],
            RealizationKind::TwodofOrder2 => MomentIndex::all_of_order(2, 2),
        }
    }

    /// Closed-form moments that seed the generating recursion.
    pub fn base_seeds(self) -> Vec<MomentIndex> {
        match self {
            RealizationKind::Order3Ansatz => vec![mi(2, 0), mi(1, 1), mi(0, 2), mi(3, 0)],
            RealizationKind::TwodofOrder2 => Vec::new(),
            other => other.closed_moments(),
        }
    }

    /// Every moment the realization provides, closed or generated.
    pub fn moments(self) -> Vec<MomentIndex> {
        (2..=self.order())
            .flat_map(|o| MomentIndex::all_of_order(self.dof(), o))
            .collect()
    }

    /// Domain test. Rejects points near the singular submanifolds instead of
    /// regularizing them.
    pub fn check_regular(self, x: &[f64]) -> Result<()> {
        let dim = self.chart().dim();
        if x.len() != dim {
            return Err(Error::ChartMismatch(format!(
                "{} expects {} values, got {}",
                self.name(),
                dim,
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("chart point".into()));
        }
        let sing = |m: &str| Err(Error::SingularChart(format!("{}: {m}", self.name())));
        match self {
            RealizationKind::Order2 => {
                if x[0] <= 0.0 {
                    return sing("s must be positive");
                }
            }
            RealizationKind::Order3Systematic => {
                if x[0] <= 0.0 || x[2] <= 0.0 {
                    return sing("s1 and s2 must be positive");
                }
                if x[5].abs() >= 0.5 {
                    return sing("|p3| must be below 1/2");
                }
            }
            RealizationKind::Order3Ansatz | RealizationKind::Order4Ansatz => {
                let n = self.chart().n_pairs();
                for i in 0..n {
                    for j in i + 1..n {
                        let (a, b) = (x[2 * i], x[2 * j]);
                        if (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs())) {
                            return sing("the s_i must be distinct");
                        }
                    }
                }
            }
            RealizationKind::TwodofOrder2 => {
                if x[0] <= 0.0 || x[2] <= 0.0 {
                    return sing("s1 and s2 must be positive");
                }
                if x[4].sin().abs() <= 1e-9 {
                    return sing("sin(beta) vanishes");
                }
                let (pa, u1, u2) = (x[7], x[8], x[9]);
                let disc = u2 - 8.0 * pa * pa * u1 + 16.0 * pa.powi(4);
                if disc < 0.0 {
                    return Err(Error::NegativeDiscriminant(format!(
                        "U2 - U1^2 + (U1 - 4 p_alpha^2)^2 = {disc}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// A random point well inside the regular domain.
    pub fn random_point<R: Rng + ?Sized>(self, rng: &mut R) -> Vec<f64> {
        match self {
            RealizationKind::Order2 => vec![
                rng.random_range(0.5..2.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(0.25..1.25),
            ],
            RealizationKind::Order3Systematic => vec![
                rng.random_range(0.5..2.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(0.5..2.0),
                rng.random_range(-0.5..0.5),
                rng.random_range(-1.0..1.0),
                rng.random_range(-0.4..0.4),
                rng.random_range(0.5..1.5),
            ],
            RealizationKind::Order3Ansatz | RealizationKind::Order4Ansatz => {
                let n = self.chart().n_pairs();
                let mut x = Vec::with_capacity(2 * n + 2);
                let mut s = rng.random_range(0.3..0.8);
                for _ in 0..n {
                    x.push(s);
                    x.push(rng.random_range(-1.0..1.0));
                    s += rng.random_range(0.4..1.0);
                }
                x.push(rng.random_range(0.5..1.5));
                if self == RealizationKind::Order4Ansatz {
                    x.push(rng.random_range(-1.0..1.0));
                }
                x
            }
            RealizationKind::TwodofOrder2 => {
                let pa: f64 = rng.random_range(-0.3..0.3);
                let u1: f64 = rng.random_range(0.5..1.5);
                let u2 = 8.0 * pa * pa * u1 - 16.0 * pa.powi(4) + rng.random_range(0.05..0.5);
                vec![
                    rng.random_range(0.5..2.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(0.5..2.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(0.2..PI - 0.2),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(0.0..2.0 * PI),
                    pa,
                    u1,
                    u2,
                ]
            }
        }
    }

    /// Closed-form value of a moment, or `None` if the realization has no
    /// transcribed formula for it.
    pub fn closed<T: Scalar>(self, idx: &MomentIndex, x: &[T]) -> Option<T> {
        match self {
            RealizationKind::Order2 => order2(idx.single()?, x),
            RealizationKind::Order3Systematic => order3_systematic(idx.single()?, x),
            RealizationKind::Order3Ansatz => order3_ansatz(idx.single()?, x),
            RealizationKind::Order4Ansatz => order4_ansatz(idx.single()?, x),
            RealizationKind::TwodofOrder2 => twodof(idx, x),
        }
    }
}

fn order2<T: Scalar>(key: (u32, u32), x: &[T]) -> Option<T> {
    let (s, p, u) = (&x[0], &x[1], &x[2]);
    Some(match key {
        (2, 0) => s.sqr(),
        (1, 1) => s.clone() * p.clone(),
        (0, 2) => p.sqr() + u.clone() / s.sqr(),
        _ => return None,
    })
}

fn order3_systematic<T: Scalar>(key: (u32, u32), x: &[T]) -> Option<T> {
    let (s1, p1, s2, p2, s3, p3, u) = (&x[0], &x[1], &x[2], &x[3], &x[4], &x[5], &x[6]);
    let rs2 = s2.sqrt();
    let s2_32 = s2.clone() * rs2.clone();
    let r = (s2_32.clone() * 2.0 * (-(p3.sqr() * 4.0) + 1.0).sqrt()).sqrt();
    let big_p = p1.clone() * s1.clone() + p3.clone() * rs2.clone() + s2.clone() * p2.clone() * 4.0;
    Some(match key {
        (2, 0) => s1.sqr(),
        (1, 1) => s1.clone() * p1.clone(),
        (0, 2) => {
            let num = rs2 * 3.0 * (p3.sqr() * 4.0 - 1.0) * s3.clone()
                + s2.clone() * 0.5 * (-(p3.sqr() * 10.0) + 7.0)
                - s2.sqr() * p2.sqr() * 16.0;
            p1.sqr() + num / s1.sqr()
        }
        (3, 0) => u.clone() * s1.powi(3) / r,
        (2, 1) => u.clone() * s1.clone() * big_p / r,
        (1, 2) => u.clone() * (big_p.sqr() - s2.clone()) / (s1.clone() * r),
        (0, 3) => {
            let num = big_p.powi(3) - big_p * s2.clone() * 3.0 - p3.clone() * s2_32 * 4.0;
            u.clone() * num / (s1.powi(3) * r)
        }
        _ => return None,
    })
}

/// `F = U Σ_{i<j} (s_i - s_j)^{-2}` together with its first derivatives and
/// the Hessian, for the ansatz realizations.
struct AnsatzF<T> {
    f: T,
    d1: Vec<T>,
    d2: Vec<Vec<T>>,
}

fn ansatz_f<T: Scalar>(s: &[T], u: &T) -> AnsatzF<T> {
    let n = s.len();
    let mut f = T::zero();
    let mut d1 = vec![T::zero(); n];
    let mut d2 = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = s[i].clone() - s[j].clone();
            let inv = d.recip();
            let inv2 = inv.sqr();
            if i < j {
                f = f + u.clone() * inv2.clone();
            }
            d1[i] = d1[i].clone() - u.clone() * inv2.clone() * inv.clone() * 2.0;
            let h = u.clone() * inv2.sqr() * 6.0;
            d2[i][i] = d2[i][i].clone() + h.clone();
            d2[i][j] = d2[i][j].clone() - h;
        }
    }
    AnsatzF { f, d1, d2 }
}

fn split_pairs<T: Scalar>(x: &[T], n: usize) -> (Vec<T>, Vec<T>) {
    ((0..n).map(|i| x[2 * i].clone()).collect(), (0..n).map(|i| x[2 * i + 1].clone()).collect())
}

fn sum<T: Scalar>(it: impl Iterator<Item = T>) -> T {
    it.fold(T::zero(), |a, b| a + b)
}

fn order3_ansatz<T: Scalar>(key: (u32, u32), x: &[T]) -> Option<T> {
    let (s, p) = split_pairs(x, 3);
    let u = &x[6];
    Some(match key {
        (2, 0) => sum(s.iter().map(|v| v.sqr())),
        (1, 1) => sum(s.iter().zip(&p).map(|(a, b)| a.clone() * b.clone())),
        (0, 2) => sum(p.iter().map(|v| v.sqr())) + ansatz_f(&s, u).f,
        (3, 0) => sum(s.iter().map(|v| v.powi(3))),
        (2, 1) => sum(s.iter().zip(&p).map(|(a, b)| a.sqr() * b.clone())),
        (1, 2) => {
            let fd = ansatz_f(&s, u);
            sum(s.iter().zip(&p).map(|(a, b)| b.sqr() * a.clone()))
                - sum(s.iter().zip(&fd.d1).map(|(a, f)| a.sqr() * f.clone())) * 0.25
        }
        (0, 3) => {
            let fd = ansatz_f(&s, u);
            let mut corr = T::zero();
            for i in 0..3 {
                let mut inner = s[i].clone() * fd.d1[i].clone() * 6.0;
                for j in 0..3 {
                    inner = inner + s[j].sqr() * fd.d2[i][j].clone();
                }
                corr = corr + p[i].clone() * inner;
            }
            sum(p.iter().map(|v| v.powi(3))) - corr * 0.25
        }
        _ => return None,
    })
}

fn order4_ansatz<T: Scalar>(key: (u32, u32), x: &[T]) -> Option<T> {
    let (s, p) = split_pairs(x, 5);
    let (u, c) = (&x[10], &x[11]);
    Some(match key {
        (0, 2) => sum(p.iter().map(|v| v.sqr())) + ansatz_f(&s, u).f,
        (2, 0) => sum(s.iter().map(|v| v.sqr())),
        (3, 0) => c.clone() * sum(s.iter().map(|v| v.powi(3))),
        (4, 0) => c.sqr() * sum(s.iter().map(|v| v.powi(4))) + sum(s.iter().map(|v| v.sqr())).sqr(),
        _ => return None,
    })
}

fn twodof<T: Scalar>(idx: &MomentIndex, x: &[T]) -> Option<T> {
    if idx.dof() != 2 || idx.order() != 2 {
        return None;
    }
    let (s1, p1, s2, p2) = (&x[0], &x[1], &x[2], &x[3]);
    let (b, pb, a, pa) = (&x[4], &x[5], &x[6], &x[7]);
    let (u1, u2) = (&x[8], &x[9]);
    let (sb, cb) = (b.sin(), b.cos());
    let sb2 = sb.sqr();
    let pa2 = pa.sqr();
    let big_a = (u2.clone() - pa2.clone() * u1.clone() * 8.0 + pa2.sqr() * 16.0).sqrt();
    let base = u1.clone() - pa2.clone() * 4.0;
    let s12 = s1.clone() * s2.clone();
    let e = idx.exps();
    Some(match (e[0], e[1]) {
        ((2, 0), (0, 0)) => s1.sqr(),
        ((1, 1), (0, 0)) => s1.clone() * p1.clone(),
        ((0, 2), (0, 0)) => {
            let phi = (pa.clone() - pb.clone()).sqr()
                + (base - big_a * (a.clone() + b.clone()).sin()) / (sb2 * 2.0);
            p1.sqr() + phi / s1.sqr()
        }
        ((0, 0), (2, 0)) => s2.sqr(),
        ((0, 0), (1, 1)) => s2.clone() * p2.clone(),
        ((0, 0), (0, 2)) => {
            let gamma = (pa.clone() + pb.clone()).sqr()
                + (base - big_a * (a.clone() - b.clone()).sin()) / (sb2 * 2.0);
            p2.sqr() + gamma / s2.sqr()
        }
        ((1, 0), (1, 0)) => s12 * cb,
        ((0, 1), (1, 0)) => {
            p1.clone() * s2.clone() * cb + sb * (s2.clone() / s1.clone()) * (pa.clone() - pb.clone())
        }
        ((1, 0), (0, 1)) => {
            p2.clone() * s1.clone() * cb - sb * (s1.clone() / s2.clone()) * (pb.clone() + pa.clone())
        }
        ((0, 1), (0, 1)) => {
            p1.clone() * p2.clone() * cb.clone() - cb.clone() * pb.sqr() / s12.clone()
                + (cb.clone() + cb.clone() * 2.0 / sb2.clone()) * pa2 / s12.clone()
                - sb.clone() * pb.clone() * (p2.clone() / s1.clone() + p1.clone() / s2.clone())
                + pa.clone() * sb * (p2.clone() / s1.clone() - p1.clone() / s2.clone())
                - cb * u1.clone() / (s12.clone() * sb2.clone() * 2.0)
                + big_a * a.sin() / (s12 * sb2 * 2.0)
        }
        _ => return None,
    })
}

/// How a generated moment is obtained: `coef · j! [G∘φ_t]_j` with `G` the
/// seed moment and `φ_t` the flow of `Δ(π²)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Recipe {
    pub seed: MomentIndex,
    pub steps: u32,
    pub coef: f64,
}

/// `[G(φ_t(x))]_j`: the `j`-th Taylor coefficient of the seed moment along
/// the Hamiltonian flow generated by `Δ(π²)`.
pub fn flow_coefficient<T: Scalar>(kind: RealizationKind, seed: &MomentIndex, x: &[T], j: u32) -> T {
    let len = j as usize + 1;
    let n_pairs = kind.chart().n_pairs();
    let pi2 = mi(0, 2);
    let x0: Vec<Taylor<T>> = x.iter().map(|v| Taylor::constant(v.clone())).collect();
    let mut traj = x0.clone();
    for _ in 0..j {
        let lifted = lift(&traj);
        let h = kind.closed(&pi2, &lifted).expect("every single-DOF realization has Δ(π²)");
        let mut next = x0.clone();
        for i in 0..n_pairs {
            let ds = h.deriv(2 * i + 1);
            let dp = -h.deriv(2 * i);
            next[2 * i] = integrate(&x[2 * i], &ds, len);
            next[2 * i + 1] = integrate(&x[2 * i + 1], &dp, len);
        }
        traj = next;
    }
    let g = kind.closed(seed, &traj).expect("seed moments have closed forms");
    g.coeff(j as usize)
}

fn integrate<T: Scalar>(c0: &T, rate: &Taylor<T>, len: usize) -> Taylor<T> {
    let mut c = Vec::with_capacity(len);
    c.push(c0.clone());
    for k in 1..len {
        c.push(rate.coeff(k - 1) / k as f64);
    }
    Taylor::new(c)
}

struct MomentExpr {
    kind: RealizationKind,
    idx: MomentIndex,
    recipe: Option<Recipe>,
}

impl ChartExpr for MomentExpr {
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        match &self.recipe {
            None => self
                .kind
                .closed(&self.idx, x)
                .expect("closed form checked at construction"),
            Some(r) => flow_coefficient(self.kind, &r.seed, x, r.steps) * r.coef,
        }
    }
}

/// Casimir reconstructed from moments: `U = Δ(q²)Δ(π²) − Δ(qπ)²` at second
/// order, `U₁ = |f₅|^{1/4}` from the third-order moments otherwise.
struct CasimirExpr {
    kind: RealizationKind,
}

impl ChartExpr for CasimirExpr {
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        let m = |k, l| self.kind.closed(&mi(k, l), x).expect("closed form");
        if self.kind.order() == 2 {
            return m(2, 0) * m(0, 2) - m(1, 1).sqr();
        }
        let (a, b, c, d) = (m(3, 0), m(2, 1), m(1, 2), m(0, 3));
        let f5 = (b.clone() * c.clone() - a.clone() * d.clone()).sqr()
            - (c.sqr() - b.clone() * d) * (b.sqr() - a * c) * 4.0;
        f5.abs().sqrt().sqrt()
    }
}

/// A realization with its generated-moment cache.
pub struct Realization {
    kind: RealizationKind,
    chart: CanonicalChart,
    cache: Mutex<HashMap<MomentIndex, Recipe>>,
}

impl std::fmt::Debug for Realization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Realization").field("kind", &self.kind).finish()
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

impl Realization {
    pub fn new(kind: RealizationKind) -> Self {
        Realization {
            kind,
            chart: kind.chart(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Ok(Self::new(RealizationKind::from_name(name)?))
    }

    pub fn kind(&self) -> RealizationKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn chart(&self) -> &CanonicalChart {
        &self.chart
    }

    pub fn moments(&self) -> Vec<MomentIndex> {
        self.kind.moments()
    }

    pub fn has_closed_form(&self, idx: &MomentIndex) -> bool {
        self.kind.closed_moments().contains(idx)
    }

    /// The recursion recipe for `target`, starting from the nearest seed of
    /// the same order with a higher power of `q`. Cached so every call sees
    /// the same definition.
    pub fn recipe(&self, target: &MomentIndex) -> Result<Recipe> {
        if let Some(r) = self.cache.lock().expect("cache lock").get(target) {
            return Ok(r.clone());
        }
        let missing = || Error::MissingPredecessor(target.to_string());
        let (a, b) = target.single().ok_or_else(missing)?;
        if self.kind.dof() != 1 || b == 0 {
            return Err(missing());
        }
        let order = a + b;
        let seed = self
            .kind
            .base_seeds()
            .into_iter()
            .filter(|s| s.order() == order && s.q_power() > a)
            .min_by_key(|s| s.q_power())
            .ok_or_else(missing)?;
        let steps = seed.q_power() - a;
        let mut coef = factorial(steps);
        for m in (a + 1)..=(a + steps) {
            coef /= 2.0 * m as f64;
        }
        let r = Recipe { seed, steps, coef };
        self.cache
            .lock()
            .expect("cache lock")
            .insert(target.clone(), r.clone());
        Ok(r)
    }

    /// The recursively generated chart function for `target`, even when a
    /// closed form exists.
    pub fn generate_moment(&self, target: &MomentIndex) -> Result<ChartFunction> {
        let r = self.recipe(target)?;
        Ok(ChartFunction::new(
            format!("{}[gen]", target),
            &self.chart,
            MomentExpr {
                kind: self.kind,
                idx: target.clone(),
                recipe: Some(r),
            },
        ))
    }

    /// Chart function for a moment: the closed form when transcribed,
    /// otherwise the generated one.
    pub fn moment(&self, idx: &MomentIndex) -> Result<ChartFunction> {
        if self.has_closed_form(idx) {
            return Ok(ChartFunction::new(
                idx.to_string(),
                &self.chart,
                MomentExpr {
                    kind: self.kind,
                    idx: idx.clone(),
                    recipe: None,
                },
            ));
        }
        if !self.moments().contains(idx) {
            return Err(Error::MissingMoment(idx.to_string()));
        }
        Ok(self.generate_moment(idx)?.relabel(idx.to_string()))
    }

    pub fn moment_str(&self, key: &str) -> Result<ChartFunction> {
        self.moment(&MomentIndex::parse(key, self.kind.dof())?)
    }

    /// Generic evaluation of any provided moment.
    pub fn eval_moment<T: Scalar>(&self, idx: &MomentIndex, x: &[T]) -> Result<T> {
        if let Some(v) = self.kind.closed(idx, x) {
            return Ok(v);
        }
        if !self.moments().contains(idx) {
            return Err(Error::MissingMoment(idx.to_string()));
        }
        let r = self.recipe(idx)?;
        Ok(flow_coefficient(self.kind, &r.seed, x, r.steps) * r.coef)
    }

    /// The Casimir expressed through realized moments.
    pub fn casimir_from_moments(&self) -> Result<ChartFunction> {
        match self.kind {
            RealizationKind::Order2
            | RealizationKind::Order3Systematic
            | RealizationKind::Order3Ansatz => Ok(ChartFunction::new(
                "casimir(moments)",
                &self.chart,
                CasimirExpr { kind: self.kind },
            )),
            _ => Err(Error::InvalidInput(format!(
                "no moment expression for the Casimir of {}",
                self.name()
            ))),
        }
    }

    pub fn realize_values(&self, x: &[f64]) -> Result<MomentState> {
        self.kind.check_regular(x)?;
        let mut state = MomentState::new(1.0, self.kind.dof());
        for idx in self.moments() {
            let v = self.eval_moment(&idx, x)?;
            if !v.is_finite() {
                return Err(Error::NonFinite(idx.to_string()));
            }
            state.moments.insert(idx, v);
        }
        Ok(state)
    }

    pub fn realize(&self, point: &ChartPoint) -> Result<MomentState> {
        if point.chart() != &self.chart {
            return Err(Error::ChartMismatch(format!(
                "point does not belong to the {} chart",
                self.name()
            )));
        }
        self.realize_values(point.values())
    }

    pub fn random_regular_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.kind.random_point(rng)
    }
}

/// Outcome of a bracket-closure run: the largest relative deviation between
/// canonical brackets of realized moments and the truncated moment algebra.
#[derive(Clone, Debug, Serialize)]
pub struct ClosureReport {
    pub realization: String,
    pub points: usize,
    pub pairs: usize,
    pub max_rel_error: f64,
    pub worst_pair: Option<(String, String)>,
}

/// Checks `{Δ_A, Δ_B}` (canonical bracket of realized functions) against the
/// Moyal-bracket oracle truncated at the realization's order, for every pair
/// of provided moments at `points` random regular points.
pub fn closure_certificate(
    r: &Realization,
    points: usize,
    seed: u64,
    exec: crate::par::Exec,
) -> Result<ClosureReport> {
    use crate::algebra::{truncate, weyl_bracket_oracle};
    use crate::chart::bracket_with_scale;
    use rand::SeedableRng;

    let moments = r.moments();
    let funcs = moments.iter().map(|m| r.moment(m)).collect::<Result<Vec<_>>>()?;
    let mut pairs = Vec::new();
    for i in 0..moments.len() {
        for j in i + 1..moments.len() {
            let poly = truncate(&weyl_bracket_oracle(&moments[i], &moments[j])?, r.kind().order());
            pairs.push((i, j, poly));
        }
    }
    let per_point = crate::par::map_range(exec, points, |k| -> Result<(f64, usize)> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        let x = r.random_regular_point(&mut rng);
        let state = r.realize_values(&x)?;
        let mut worst = (0.0f64, 0usize);
        for (n, (i, j, poly)) in pairs.iter().enumerate() {
            let (lhs, scale) = bracket_with_scale(&funcs[*i], &funcs[*j], &x)?;
            let rhs = poly.eval(1.0, |m| state.get(m))?;
            let rel = (lhs - rhs).abs() / scale.max(rhs.abs()).max(f64::MIN_POSITIVE);
            if rel > worst.0 || n == 0 {
                worst = (rel.max(worst.0), n);
            }
        }
        Ok(worst)
    });
    let mut max_rel_error = 0.0;
    let mut worst_pair = None;
    for res in per_point {
        let (e, n) = res?;
        if e >= max_rel_error {
            max_rel_error = e;
            let (i, j, _) = &pairs[n];
            worst_pair = Some((moments[*i].to_string(), moments[*j].to_string()));
        }
    }
    Ok(ClosureReport {
        realization: r.name().to_string(),
        points,
        pairs: pairs.len(),
        max_rel_error,
        worst_pair,
    })
}

/// Power-law fit of bracket residuals under the scaling
/// `(s_i, p_i) → (λ s_i, λ p_i)`, Casimirs `→ λ⁴`, which gives every moment
/// of order `n` the weight `λⁿ`.
#[derive(Clone, Debug, Serialize)]
pub struct ScalingReport {
    pub realization: String,
    pub lambdas: Vec<f64>,
    /// Largest `|{Δ_A, Δ_B} − oracle|` over pairs of top-order moments.
    pub bracket_residuals: Vec<f64>,
    /// Largest `|{Δ, U(Δ)}|` over realized top-order moments, with `U(Δ)`
    /// the Casimir written through moments.
    pub casimir_residuals: Vec<f64>,
    /// The same over every realized moment.
    pub casimir_residuals_all: Vec<f64>,
    pub bracket_exponent: f64,
    pub casimir_exponent: f64,
    pub casimir_exponent_all: f64,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn truncation_scaling(r: &Realization, lambdas: &[f64], points: usize, seed: u64) -> Result<ScalingReport> {
    use crate::algebra::{truncate, weyl_bracket_oracle};
    use crate::chart::bracket_at;
    use rand::SeedableRng;

    let order = r.kind().order();
    let moments = r.moments();
    let top: Vec<&MomentIndex> = moments.iter().filter(|m| m.order() == order).collect();
    let mut pairs = Vec::new();
    for i in 0..top.len() {
        for j in i + 1..top.len() {
            let poly = truncate(&weyl_bracket_oracle(top[i], top[j])?, order);
            pairs.push((r.moment(top[i])?, r.moment(top[j])?, poly));
        }
    }
    let casimir = r.casimir_from_moments()?;
    let funcs = moments.iter().map(|m| r.moment(m)).collect::<Result<Vec<_>>>()?;
    let n_pairs = r.chart().n_pairs();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let base: Vec<Vec<f64>> = (0..points).map(|_| r.random_regular_point(&mut rng)).collect();
    let mut bracket_residuals = Vec::with_capacity(lambdas.len());
    let mut casimir_residuals = Vec::with_capacity(lambdas.len());
    let mut casimir_residuals_all = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        let mut worst_b = 0.0f64;
        let mut worst_c = 0.0f64;
        let mut worst_all = 0.0f64;
        for x0 in &base {
            let x: Vec<f64> = x0
                .iter()
                .enumerate()
                .map(|(i, v)| if i < 2 * n_pairs { v * lam } else { v * lam.powi(4) })
                .collect();
            let state = r.realize_values(&x)?;
            for (fa, fb, poly) in &pairs {
                let lhs = bracket_at(fa, fb, &x)?;
                let rhs = poly.eval(1.0, |m| state.get(m))?;
                worst_b = worst_b.max((lhs - rhs).abs());
            }
            for (f, m) in funcs.iter().zip(&moments) {
                let v = bracket_at(f, &casimir, &x)?.abs();
                worst_all = worst_all.max(v);
                if m.order() == order {
                    worst_c = worst_c.max(v);
                }
            }
        }
        bracket_residuals.push(worst_b);
        casimir_residuals.push(worst_c);
        casimir_residuals_all.push(worst_all);
    }
    Ok(ScalingReport {
        realization: r.name().to_string(),
        lambdas: lambdas.to_vec(),
        bracket_exponent: log_log_slope(lambdas, &bracket_residuals),
        casimir_exponent: log_log_slope(lambdas, &casimir_residuals),
        casimir_exponent_all: log_log_slope(lambdas, &casimir_residuals_all),
        bracket_residuals,
        casimir_residuals,
        casimir_residuals_all,
    })
}

/// Single-DOF order-2 realization at `(s, p; U)`.
pub fn realize_order2(s: f64, p: f64, u: f64) -> Result<MomentState> {
    Realization::new(RealizationKind::Order2).realize_values(&[s, p, u])
}
