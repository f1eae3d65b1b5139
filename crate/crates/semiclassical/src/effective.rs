//! Effective Hamiltonians built from a classical potential: the Taylor
//! expansion in moments over a realization, the all-orders potential of the
//! closure conditions `Δ(qⁿ) = sⁿ` (even `n`), ground-state estimates and an
//! oscillator-basis diagonalization used as an exact reference.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::algebra::MomentIndex;
use crate::chart::{CanonicalChart, ChartExpr, ChartFunction};
use crate::effpot2::Hessian2;
use crate::error::{Error, Result};
use crate::optimize::{logspace, multistart, Minimum, PatternSearch};
use crate::par::Exec;
use crate::realizations::{Realization, RealizationKind};
use crate::scalar::{lift, Scalar, Taylor};
use crate::special::hermite_table;

/// A one-dimensional classical potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    /// `|q|`
    Abs,
    /// `√(1 + q²)`
    RelativisticSqrt,
    /// `½ω²q²`
    Harmonic { omega: f64 },
    /// `(27/4) V_top (γq⁴ − (γ+1)q³ + q²)`: local minimum at 0, barrier of
    /// height close to `V_top`, global minimum near `1/γ`.
    QuarticBarrier { v_top: f64, gamma: f64 },
    /// `Σ c_k q^k`
    Polynomial { coeffs: Vec<f64> },
}

impl Potential {
    pub fn eval<T: Scalar>(&self, q: &T) -> T {
        match self {
            Potential::Abs => q.abs(),
            Potential::RelativisticSqrt => (q.sqr() + 1.0).sqrt(),
            Potential::Harmonic { omega } => q.sqr() * (0.5 * omega * omega),
            Potential::QuarticBarrier { v_top, gamma } => {
                let q2 = q.sqr();
                (q2.sqr() * *gamma - q2.clone() * q.clone() * (gamma + 1.0) + q2) * (6.75 * v_top)
            }
            Potential::Polynomial { coeffs } => {
                let mut acc = T::zero();
                for c in coeffs.iter().rev() {
                    acc = acc * q.clone() + *c;
                }
                acc
            }
        }
    }

    pub fn value(&self, q: f64) -> f64 {
        self.eval(&q)
    }

    pub fn is_smooth(&self) -> bool {
        !matches!(self, Potential::Abs)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Potential::Abs => "abs",
            Potential::RelativisticSqrt => "relativistic_sqrt",
            Potential::Harmonic { .. } => "harmonic",
            Potential::QuarticBarrier { .. } => "quartic_barrier",
            Potential::Polynomial { .. } => "polynomial",
        }
    }

    /// Taylor coefficients `V^{(n)}(q)/n!` for `n = 0..=order`.
    pub fn taylor<T: Scalar>(&self, q: &T, order: usize) -> Vec<T> {
        let mut c = vec![q.clone(), T::cst(1.0)];
        c.resize(order + 1, T::zero());
        c.truncate(order + 1);
        let t = self.eval(&Taylor::new(c));
        (0..=order).map(|k| t.coeff(k)).collect()
    }

    /// Derivatives `V, V', …, V^{(n)}` at `q`.
    pub fn derivatives(&self, q: f64, n: usize) -> Result<Vec<f64>> {
        if n > 0 && !self.is_smooth() {
            return Err(Error::SmoothnessRequired(self.name().into()));
        }
        let mut fact = 1.0;
        Ok(self
            .taylor(&q, n)
            .into_iter()
            .enumerate()
            .map(|(k, c)| {
                if k > 0 {
                    fact *= k as f64;
                }
                c * fact
            })
            .collect())
    }

    pub fn quartic_barrier(v_top: f64, gamma: f64) -> Result<Self> {
        if !(v_top > 0.0 && gamma > 0.0) {
            return Err(Error::InvalidInput("quartic barrier needs V_top > 0 and gamma > 0".into()));
        }
        Ok(Potential::QuarticBarrier { v_top, gamma })
    }
}

/// A two-dimensional classical potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential2 {
    /// `½ω²(q₁² + q₂²) + γω² q₁q₂`
    CoupledHarmonic { omega: f64, gamma: f64 },
    /// `Σ c·q₁^i q₂^j` over `(i, j, c)` terms.
    Polynomial { terms: Vec<(u32, u32, f64)> },
}

impl Potential2 {
    pub fn eval<T: Scalar>(&self, q1: &T, q2: &T) -> T {
        match self {
            Potential2::CoupledHarmonic { omega, gamma } => {
                let w2 = omega * omega;
                (q1.sqr() + q2.sqr()) * (0.5 * w2) + q1.clone() * q2.clone() * (gamma * w2)
            }
            Potential2::Polynomial { terms } => {
                let mut acc = T::zero();
                for (i, j, c) in terms {
                    acc = acc + q1.powi(*i as i32) * q2.powi(*j as i32) * *c;
                }
                acc
            }
        }
    }

    pub fn value(&self, q1: f64, q2: f64) -> f64 {
        self.eval(&q1, &q2)
    }

    /// Second derivatives `V_ij` at `(q₁, q₂)`.
    pub fn hessian(&self, q1: f64, q2: f64) -> Hessian2 {
        let x = lift(&lift(&[q1, q2]));
        let v = self.eval(&x[0], &x[1]);
        let g1 = v.deriv(0);
        let g2 = v.deriv(1);
        Hessian2 {
            v11: g1.deriv(0),
            v22: g2.deriv(1),
            v12: g1.deriv(1),
        }
    }
}

/// Potential plus the moment realization and truncation order used to
/// expand it.
#[derive(Clone, Debug)]
pub struct EffectiveModel {
    pub potential: Potential,
    pub realization: RealizationKind,
    pub order: u32,
    pub mass: f64,
    pub hbar: f64,
}

impl EffectiveModel {
    pub fn new(potential: Potential, realization: RealizationKind, order: u32) -> Self {
        EffectiveModel {
            potential,
            realization,
            order,
            mass: 1.0,
            hbar: 1.0,
        }
    }

    /// Minimal Casimir `ħ²/4`.
    pub fn u_min(&self) -> f64 {
        self.hbar * self.hbar / 4.0
    }

    /// The chart `[q, π, realization pairs…, casimirs…]`.
    pub fn chart(&self) -> Result<CanonicalChart> {
        prepend_pairs(&[("q", "pi")], &self.realization.chart())
    }
}

fn prepend_pairs(first: &[(&str, &str)], rest: &CanonicalChart) -> Result<CanonicalChart> {
    let mut pairs: Vec<(&str, &str)> = first.to_vec();
    pairs.extend(rest.pairs().iter().map(|(a, b)| (a.as_str(), b.as_str())));
    let cas: Vec<&str> = rest.casimirs().iter().map(|s| s.as_str()).collect();
    CanonicalChart::new(&pairs, &cas)
}

struct HeffExpr {
    potential: Potential,
    realization: Arc<Realization>,
    q_moments: Vec<MomentIndex>,
    pi2: MomentIndex,
    mass: f64,
}

impl ChartExpr for HeffExpr {
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        let (q, pi, y) = (&x[0], &x[1], &x[2..]);
        let ev = |m: &MomentIndex| {
            self.realization
                .eval_moment(m, y)
                .expect("moments checked at construction")
        };
        let kin = (pi.sqr() + ev(&self.pi2)) / (2.0 * self.mass);
        let c = self.potential.taylor(q, self.q_moments.len() + 1);
        let mut v = c[0].clone();
        for (n, m) in self.q_moments.iter().enumerate() {
            v = v + c[n + 2].clone() * ev(m);
        }
        kin + v
    }
}

/// `H_eff = (π² + Δ(π²))/2m + Σ_{n=0}^{order} V^{(n)}(q) Δ(qⁿ)/n!` with
/// `Δ(q⁰) = 1`, `Δ(q¹) = 0` and the remaining moments taken from the
/// realization.
pub fn taylor_effective_hamiltonian(model: &EffectiveModel) -> Result<ChartFunction> {
    if !model.potential.is_smooth() {
        return Err(Error::SmoothnessRequired(model.potential.name().into()));
    }
    if model.realization.dof() != 1 {
        return Err(Error::InvalidInput(
            "two-DOF realizations take a two-dimensional potential".into(),
        ));
    }
    let realization = Arc::new(Realization::new(model.realization));
    let provided = realization.moments();
    let q_moments: Vec<MomentIndex> = (2..=model.order).map(|n| MomentIndex::qp(n, 0)).collect();
    let pi2 = MomentIndex::qp(0, 2);
    for m in q_moments.iter().chain(std::iter::once(&pi2)) {
        if !provided.contains(m) {
            return Err(Error::MissingMoment(format!("{m} in {}", model.realization.name())));
        }
    }
    let chart = model.chart()?;
    Ok(ChartFunction::new(
        format!("H_eff[{}, {}, order {}]", model.potential.name(), model.realization.name(), model.order),
        &chart,
        HeffExpr {
            potential: model.potential.clone(),
            realization,
            q_moments,
            pi2,
            mass: model.mass,
        },
    ))
}

struct Heff2Expr {
    potential: Potential2,
    realization: Arc<Realization>,
    mass: f64,
}

impl ChartExpr for Heff2Expr {
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        let y = &x[4..];
        let ev = |s: &str| {
            let idx = MomentIndex::parse(s, 2).expect("static index");
            self.realization.eval_moment(&idx, y).expect("second-order moment")
        };
        let kin = (x[1].sqr() + x[3].sqr() + ev("pi1^2") + ev("pi2^2")) / (2.0 * self.mass);
        // second-order Taylor terms of V around (q1, q2)
        let q = lift(&lift(&[x[0].clone(), x[2].clone()]));
        let v = self.potential.eval(&q[0], &q[1]);
        let g1 = v.deriv(0);
        let g2 = v.deriv(1);
        let v0 = v.re.re.clone();
        kin + v0
            + g1.deriv(0) * ev("q1^2") * 0.5
            + g2.deriv(1) * ev("q2^2") * 0.5
            + g1.deriv(1) * ev("q1q2")
    }
}

/// Second-order two-DOF `H_eff` on `[q₁, π₁, q₂, π₂, twodof chart…]`.
pub fn taylor_effective_hamiltonian_2dof(potential: &Potential2, mass: f64) -> Result<ChartFunction> {
    let kind = RealizationKind::TwodofOrder2;
    let chart = prepend_pairs(&[("q1", "pi1"), ("q2", "pi2")], &kind.chart())?;
    Ok(ChartFunction::new(
        "H_eff[2dof, order 2]",
        &chart,
        Heff2Expr {
            potential: potential.clone(),
            realization: Arc::new(Realization::new(kind)),
            mass,
        },
    ))
}

/// `U/(2ms²) + ½(V(q+s) + V(q−s))`.
pub fn all_orders_potential(v: &Potential, q: f64, s: f64, u: f64, m: f64) -> Result<f64> {
    if s <= 0.0 {
        return Err(Error::SingularChart(format!("s = {s} must be positive")));
    }
    Ok(all_orders_generic(v, &q, &s, &u, m))
}

fn all_orders_generic<T: Scalar>(v: &Potential, q: &T, s: &T, u: &T, m: f64) -> T {
    u.clone() / (s.sqr() * (2.0 * m))
        + (v.eval(&(q.clone() + s.clone())) + v.eval(&(q.clone() - s.clone()))) * 0.5
}

struct AllOrdersExpr {
    potential: Potential,
    mass: f64,
}

impl ChartExpr for AllOrdersExpr {
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        (x[1].sqr() + x[3].sqr()) / (2.0 * self.mass)
            + all_orders_generic(&self.potential, &x[0], &x[2], &x[4], self.mass)
    }
}

/// Chart `[q, π, s, p, U]` of the all-orders Hamiltonian.
pub fn all_orders_chart() -> CanonicalChart {
    CanonicalChart::new(&[("q", "pi"), ("s", "p")], &["U"]).expect("static chart")
}

/// `H = π²/2m + p²/2m + U/(2ms²) + ½(V(q+s) + V(q−s))`.
pub fn all_orders_hamiltonian(potential: &Potential, mass: f64) -> ChartFunction {
    ChartFunction::new(
        format!("H_all[{}]", potential.name()),
        &all_orders_chart(),
        AllOrdersExpr {
            potential: potential.clone(),
            mass,
        },
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroundState {
    pub q: f64,
    pub s: f64,
    pub energy: f64,
}

fn search() -> PatternSearch {
    PatternSearch {
        initial_step: 0.25,
        min_step: 1e-10,
        shrink: 0.5,
        max_evals: 100_000,
    }
}

/// Minimum of the all-orders potential over `(q, s > 0)`. Searches in
/// `(q, ln s)` from 16 log-spaced `s` starts and `q ∈ {0, ±1}`. Equal minima
/// are resolved toward the smallest `|q|`.
pub fn ground_state_estimate(v: &Potential, u: f64, m: f64, exec: Exec) -> Result<GroundState> {
    let f = |x: &[f64]| all_orders_potential(v, x[0], x[1].exp(), u, m).unwrap_or(f64::INFINITY);
    let mut starts = Vec::new();
    for s in logspace(0.02, 20.0, 16) {
        for q in [0.0, 1.0, -1.0] {
            starts.push(vec![q, s.ln()]);
        }
    }
    let best = multistart(&search(), f, &starts, exec, |x| x[0].abs())?;
    Ok(GroundState {
        q: best.x[0],
        s: best.x[1].exp(),
        energy: best.value,
    })
}

/// Static ground state of an effective Hamiltonian: minimum over the
/// position-like chart variables with all momenta zero and Casimirs fixed.
/// `positions` gives a reference configuration of the realization's
/// `s`-variables; starts scale it over four decades.
pub fn static_ground_state(
    h: &ChartFunction,
    casimirs: &[f64],
    positions: &[f64],
    exec: Exec,
) -> Result<Minimum> {
    let n_pairs = h.n_pairs();
    if positions.len() + 1 != n_pairs || casimirs.len() + 2 * n_pairs != h.dim() {
        return Err(Error::ChartMismatch("static ground state layout".into()));
    }
    let point = |x: &[f64]| {
        let mut v = vec![0.0; h.dim()];
        for i in 0..n_pairs {
            v[2 * i] = x[i];
        }
        v[2 * n_pairs..].copy_from_slice(casimirs);
        v
    };
    let f = |x: &[f64]| h.eval(&point(x)).unwrap_or(f64::INFINITY);
    let starts: Vec<Vec<f64>> = logspace(0.05, 5.0, 16)
        .into_iter()
        .map(|c| {
            let mut x = vec![0.0];
            x.extend(positions.iter().map(|p| p * c));
            x
        })
        .collect();
    let mut best = multistart(&search(), f, &starts, exec, |x| x[0].abs())?;
    best.x = point(&best.x);
    Ok(best)
}

/// Reference `s`-configuration for the static ground-state search.
pub fn default_positions(kind: RealizationKind) -> Vec<f64> {
    match kind {
        RealizationKind::Order2 => vec![1.0],
        RealizationKind::Order3Systematic => vec![1.0, 1.0, 0.5],
        RealizationKind::Order3Ansatz => vec![-1.0, 0.1, 1.0],
        RealizationKind::Order4Ansatz => vec![-1.0, -0.45, 0.05, 0.5, 1.0],
        RealizationKind::TwodofOrder2 => vec![1.0, 1.0, 1.0, 0.5],
    }
}

/// Lowest eigenvalue of `p²/2m + V` in the first `n` oscillator
/// eigenfunctions (basis frequency 1), with potential matrix elements from a
/// Gauss–Hermite rule of `4n` nodes.
pub fn exact_ground_state(v: &Potential, n: usize, hbar: f64, m: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("empty basis".into()));
    }
    let k = 4 * n.max(10);
    let table = hermite_table(k, n)?;
    let len = (hbar / m).sqrt();
    let vx: Vec<f64> = table.nodes.iter().map(|xi| v.value(len * xi)).collect();
    let mut h = DMatrix::<f64>::zeros(n, n);
    for (row, vk) in table.u.iter().zip(&vx) {
        for a in 0..n {
            let ua = row[a] * vk;
            for b in a..n {
                h[(a, b)] += ua * row[b];
            }
        }
    }
    let w = hbar / 4.0;
    for a in 0..n {
        h[(a, a)] += w * (2 * a + 1) as f64;
        if a + 2 < n {
            h[(a, a + 2)] -= w * (((a + 1) * (a + 2)) as f64).sqrt();
        }
        for b in 0..a {
            h[(a, b)] = h[(b, a)];
        }
    }
    let eig = h.symmetric_eigenvalues();
    let e0 = eig.iter().copied().fold(f64::INFINITY, f64::min);
    if !e0.is_finite() {
        return Err(Error::NonConvergedEigen(format!("basis size {n}")));
    }
    Ok(e0)
}

/// `exact_ground_state` at `n` together with the change when the basis is
/// doubled.
pub fn exact_ground_state_checked(v: &Potential, n: usize, hbar: f64, m: f64) -> Result<(f64, f64)> {
    let e1 = exact_ground_state(v, n, hbar, m)?;
    let e2 = exact_ground_state(v, 2 * n, hbar, m)?;
    Ok((e2, (e2 - e1).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::hamiltonian_vector_field;

    #[test]
    fn derivatives_match_finite_differences() {
        let pots = [
            Potential::RelativisticSqrt,
            Potential::QuarticBarrier { v_top: 1.0, gamma: 0.1 },
            Potential::Polynomial { coeffs: vec![0.3, -1.0, 0.5, 2.0] },
        ];
        for v in pots {
            let d = v.derivatives(0.37, 2).unwrap();
            let h = 1e-4;
            let fd1 = (v.value(0.37 + h) - v.value(0.37 - h)) / (2.0 * h);
            let fd2 = (v.value(0.37 + h) - 2.0 * v.value(0.37) + v.value(0.37 - h)) / (h * h);
            assert!((d[1] - fd1).abs() < 1e-6 * d[1].abs().max(1.0));
            assert!((d[2] - fd2).abs() < 1e-5 * d[2].abs().max(1.0));
        }
        assert!(matches!(Potential::Abs.derivatives(0.0, 1), Err(Error::SmoothnessRequired(_))));
    }

    #[test]
    fn harmonic_order2_heff_is_closed_form() {
        let model = EffectiveModel::new(Potential::Harmonic { omega: 1.3 }, RealizationKind::Order2, 2);
        let h = taylor_effective_hamiltonian(&model).unwrap();
        let x = [0.4, -0.2, 0.9, 0.3, 0.25];
        let w2 = 1.3f64 * 1.3;
        let want = 0.5 * (0.04 + 0.09 + 0.25 / 0.81) + 0.5 * w2 * (0.16 + 0.81);
        assert!((h.eval(&x).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn heff_reduces_to_classical_without_moments() {
        let v = Potential::QuarticBarrier { v_top: 1.0, gamma: 0.1 };
        let model = EffectiveModel::new(v.clone(), RealizationKind::Order2, 2);
        let h = taylor_effective_hamiltonian(&model).unwrap();
        // s → 0 with U = 0 and p = 0 switches off every moment
        let x = [0.3, 0.7, 1e-9, 0.0, 0.0];
        let want = 0.5 * 0.49 + v.value(0.3);
        assert!((h.eval(&x).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn free_particle_conserves_casimir() {
        let model = EffectiveModel::new(Potential::Polynomial { coeffs: vec![] }, RealizationKind::Order2, 2);
        let h = taylor_effective_hamiltonian(&model).unwrap();
        let f = hamiltonian_vector_field(&h, &[0.1, 0.2, 0.7, -0.3, 0.25]).unwrap();
        assert_eq!(f[4], 0.0);
        assert!((f[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn quartic_ps_rate_matches_hand_derivative() {
        let (vt, g) = (1.0, 0.1);
        let model = EffectiveModel::new(Potential::QuarticBarrier { v_top: vt, gamma: g }, RealizationKind::Order2, 2);
        let h = taylor_effective_hamiltonian(&model).unwrap();
        let (s, u) = (0.37, 0.25);
        let f = hamiltonian_vector_field(&h, &[0.0, 0.0, s, 0.0, u]).unwrap();
        // V_eff = U/(2s²) + V(0) + ½V''(0)s², V''(0) = (27/2)V_top
        let want = u / (s * s * s) - 13.5 * vt * s;
        assert!((f[3] - want).abs() < 1e-12);
    }

    #[test]
    fn order_above_realization_is_rejected() {
        let model = EffectiveModel::new(Potential::Harmonic { omega: 1.0 }, RealizationKind::Order2, 3);
        assert!(matches!(taylor_effective_hamiltonian(&model), Err(Error::MissingMoment(_))));
        let model = EffectiveModel::new(Potential::Abs, RealizationKind::Order2, 2);
        assert!(matches!(taylor_effective_hamiltonian(&model), Err(Error::SmoothnessRequired(_))));
    }

    #[test]
    fn polynomial_closure_matches_all_orders() {
        // degree-4 polynomial, order-4 ansatz with C = 0 gives Δq³ = 0, Δq⁴ = (Σs²)²
        let v = Potential::Polynomial { coeffs: vec![0.1, 0.2, -0.3, 0.4, 0.5] };
        let (q, s) = (0.3, 0.8);
        let c = v.taylor(&q, 4);
        let closure = c[0] + c[2] * s * s + c[4] * s.powi(4);
        let all = all_orders_potential(&v, q, s, 0.0, 1.0).unwrap();
        assert!((closure - all).abs() < 1e-14);
    }

    #[test]
    fn harmonic_all_orders_equals_order2() {
        let v = Potential::Harmonic { omega: 2.0 };
        let a = all_orders_potential(&v, 0.3, 0.7, 0.25, 1.0).unwrap();
        let b = 0.25 / (2.0 * 0.49) + 2.0 * (0.09 + 0.49);
        assert!((a - b).abs() < 1e-14);
        assert!(all_orders_potential(&v, 0.3, 0.0, 0.25, 1.0).is_err());
    }

    #[test]
    fn ground_state_of_harmonic_saturates() {
        let g = ground_state_estimate(&Potential::Harmonic { omega: 1.0 }, 0.25, 1.0, Exec::Sequential).unwrap();
        assert!((g.energy - 0.5).abs() < 1e-9);
        assert!((g.s.powi(4) - 0.25).abs() < 1e-6);
        assert!(g.q.abs() < 1e-6);
    }

    #[test]
    fn static_ground_state_harmonic_order2() {
        let model = EffectiveModel::new(Potential::Harmonic { omega: 1.0 }, RealizationKind::Order2, 2);
        let h = taylor_effective_hamiltonian(&model).unwrap();
        let m = static_ground_state(&h, &[0.25], &default_positions(RealizationKind::Order2), Exec::Sequential).unwrap();
        assert!((m.value - 0.5).abs() < 1e-9);
    }

    #[test]
    fn exact_harmonic_is_half() {
        let e = exact_ground_state(&Potential::Harmonic { omega: 1.0 }, 20, 1.0, 1.0).unwrap();
        assert!((e - 0.5).abs() < 1e-12);
        // p² + q² + q⁴ has E₀ = 1.392351641530, so half of it here
        let v = Potential::Polynomial { coeffs: vec![0.0, 0.0, 0.5, 0.0, 0.5] };
        let e = exact_ground_state(&v, 60, 1.0, 1.0).unwrap();
        assert!((e - 0.696_175_820_765).abs() < 1e-9, "{e}");
    }

    #[test]
    fn coupled_harmonic_hessian() {
        let h = Potential2::CoupledHarmonic { omega: 2.0, gamma: 0.5 }.hessian(0.3, -0.1);
        assert!((h.v11 - 4.0).abs() < 1e-14 && (h.v22 - 4.0).abs() < 1e-14 && (h.v12 - 2.0).abs() < 1e-14);
    }
}
