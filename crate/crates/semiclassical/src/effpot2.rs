//! Second-order effective potential for two degrees of freedom: the moment
//! sector over the two-DOF realization, its closed-form minimum, and the
//! low-energy effective potential built from the Hessian's normal modes.

use serde::Serialize;

use crate::algebra::MomentIndex;
use crate::effective::Potential2;
use crate::error::{Error, Result};
use crate::optimize::{multistart, PatternSearch};
use crate::par::{map_slice, Exec};
use crate::realizations::{Realization, RealizationKind};
use crate::scalar::{lift, Scalar};

/// Second derivatives of a two-dimensional potential at a point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Hessian2 {
    pub v11: f64,
    pub v22: f64,
    pub v12: f64,
}

impl Hessian2 {
    pub fn new(v11: f64, v22: f64, v12: f64) -> Self {
        Hessian2 { v11, v22, v12 }
    }

    pub fn det(&self) -> f64 {
        self.v11 * self.v22 - self.v12 * self.v12
    }

    pub fn is_positive_definite(&self) -> bool {
        self.v11 > 0.0 && self.det() > 0.0
    }

    /// Squared normal-mode frequencies, larger first.
    pub fn mode_frequencies_sq(&self) -> (f64, f64) {
        let tr = self.v11 + self.v22;
        let r = ((self.v11 - self.v22).powi(2) + 4.0 * self.v12 * self.v12).sqrt();
        (0.5 * (tr + r), 0.5 * (tr - r))
    }
}

fn pi_sq_sum<T: Scalar>(r: &Realization, y: &[T]) -> T {
    let ev = |s: &str| {
        r.eval_moment(&MomentIndex::parse(s, 2).expect("static index"), y)
            .expect("second-order moment")
    };
    ev("pi1^2") + ev("pi2^2")
}

/// Moment part of the second-order potential at zero momenta:
/// `(Δ(π₁²) + Δ(π₂²))/2 + ½V₁₁s₁² + V₁₂s₁s₂cos β + ½V₂₂s₂²`.
#[allow(clippy::too_many_arguments)]
pub fn moment_part<T: Scalar>(
    r: &Realization,
    h: &Hessian2,
    s1: &T,
    s2: &T,
    alpha: &T,
    beta: &T,
    u1: &T,
    u2: &T,
) -> T {
    let z = T::zero();
    let y = [
        s1.clone(),
        z.clone(),
        s2.clone(),
        z.clone(),
        beta.clone(),
        z.clone(),
        alpha.clone(),
        z,
        u1.clone(),
        u2.clone(),
    ];
    pi_sq_sum(r, &y) * 0.5
        + s1.sqr() * (0.5 * h.v11)
        + s1.clone() * s2.clone() * beta.cos() * h.v12
        + s2.sqr() * (0.5 * h.v22)
}

fn check_domain(s1: f64, s2: f64, beta: f64, u2: f64) -> Result<()> {
    if s1 <= 0.0 || s2 <= 0.0 {
        return Err(Error::SingularChart("s1 and s2 must be positive".into()));
    }
    if beta.sin().abs() < 1e-12 {
        return Err(Error::SingularChart("sin(beta) = 0".into()));
    }
    if u2 < 0.0 {
        return Err(Error::NegativeDiscriminant("U2 < 0".into()));
    }
    Ok(())
}

/// `V(q₁,q₂)` plus the moment part at zero momenta, unit mass.
#[allow(clippy::too_many_arguments)]
pub fn effective_potential_2dof(
    q1: f64,
    q2: f64,
    s1: f64,
    s2: f64,
    alpha: f64,
    beta: f64,
    u1: f64,
    u2: f64,
    v: &Potential2,
) -> Result<f64> {
    check_domain(s1, s2, beta, u2)?;
    let r = Realization::new(RealizationKind::TwodofOrder2);
    let h = v.hessian(q1, q2);
    let val = v.value(q1, q2) + moment_part(&r, &h, &s1, &s2, &alpha, &beta, &u1, &u2);
    if !val.is_finite() {
        return Err(Error::NonFinite("two-DOF effective potential".into()));
    }
    Ok(val)
}

/// Saturated moment sector `W(s₁, s₂, β)` with `U₁ = ħ²/2`, `U₂ = 0`.
pub fn saturated_moment_part<T: Scalar>(h: &Hessian2, hbar: f64, s1: &T, s2: &T, beta: &T) -> T {
    let r = Realization::new(RealizationKind::TwodofOrder2);
    let u1 = T::cst(hbar * hbar / 2.0);
    moment_part(&r, h, s1, s2, &T::zero(), beta, &u1, &T::zero())
}

/// Gradient of the saturated moment sector with respect to `(s₁, s₂, β)`.
pub fn stationarity_residuals(h: &Hessian2, hbar: f64, s1: f64, s2: f64, beta: f64) -> [f64; 3] {
    let x = lift(&[s1, s2, beta]);
    let w = saturated_moment_part(h, hbar, &x[0], &x[1], &x[2]);
    [w.deriv(0), w.deriv(1), w.deriv(2)]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SectorMethod {
    ClosedForm,
    Decoupled,
    Numeric,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentSector {
    pub s1: f64,
    pub s2: f64,
    pub beta: f64,
    pub value: f64,
    pub method: SectorMethod,
}

/// Minimum of the saturated moment sector. Uses the closed forms for
/// `s₁⁴`, `s₂⁴` and `sin²β`; `V₁₂ = 0` is solved directly and
/// `V₁₁ = V₂₂` goes to the numeric minimizer.
pub fn minimize_moment_sector(h: &Hessian2, hbar: f64) -> Result<MomentSector> {
    if !h.is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    let value = |s1: f64, s2: f64, beta: f64| saturated_moment_part(h, hbar, &s1, &s2, &beta);
    if h.v12 == 0.0 {
        let s1 = (hbar * hbar / (4.0 * h.v11)).powf(0.25);
        let s2 = (hbar * hbar / (4.0 * h.v22)).powf(0.25);
        let beta = std::f64::consts::FRAC_PI_2;
        return Ok(MomentSector {
            s1,
            s2,
            beta,
            value: value(s1, s2, beta),
            method: SectorMethod::Decoupled,
        });
    }
    if (h.v11 - h.v22).abs() <= 1e-9 * (h.v11.abs() + h.v22.abs()) {
        return minimize_moment_sector_numeric(h, hbar, Exec::Sequential);
    }
    let (s1, s2, beta) = closed_form_sector(h, hbar)?;
    Ok(MomentSector {
        s1,
        s2,
        beta,
        value: value(s1, s2, beta),
        method: SectorMethod::ClosedForm,
    })
}

fn closed_form_sector(h: &Hessian2, hbar: f64) -> Result<(f64, f64, f64)> {
    let (a, b, c) = (h.v11, h.v22, h.v12);
    let d = h.det();
    let sq = d.sqrt();
    let c2 = c * c;
    let quarter = hbar * hbar / 4.0;
    let s24 = quarter * (d - a * a) / d * (a + sq) / ((b - a) * sq + a * b - a * a - 2.0 * c2);
    let s14 = quarter * (d - b * b) / d * (b + sq) / ((a - b) * sq + a * b - b * b - 2.0 * c2);
    if !(s14 > 0.0 && s24 > 0.0) {
        return Err(Error::NonFinite("closed-form variances".into()));
    }
    let (s1, s2) = (s14.powf(0.25), s24.powf(0.25));
    let (x1, x2) = (s1 * s1, s2 * s2);
    let sin2 = quarter / (x1 * x2) * (x2 - x1) / (a * x1 - b * x2);
    if !(sin2 > 0.0 && sin2 <= 1.0 + 1e-12) {
        return Err(Error::NonFinite("closed-form sin^2(beta)".into()));
    }
    let cos_abs = (1.0 - sin2.min(1.0)).sqrt();
    // ∂W/∂β = 0 forces cos β to carry the sign opposite to V₁₂
    let beta = (-c.signum() * cos_abs).acos();
    Ok((s1, s2, beta))
}

/// The two roots of the quadratic for `s₁²/s₂²`; the positive one that
/// matches the variance closed forms is the physical branch.
pub fn variance_ratio_roots(h: &Hessian2) -> [f64; 2] {
    let (a, b, c) = (h.v11, h.v22, h.v12);
    let sq = h.det().sqrt();
    let den = a * (b - a) - c * c;
    [((b - a) * sq - c * c) / den, (-(b - a) * sq - c * c) / den]
}

/// Pattern-search minimum of the saturated moment sector over
/// `(ln s₁, ln s₂, β)`.
pub fn minimize_moment_sector_numeric(h: &Hessian2, hbar: f64, exec: Exec) -> Result<MomentSector> {
    if !h.is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    let f = |x: &[f64]| {
        if x[2] <= 0.0 || x[2] >= std::f64::consts::PI {
            return f64::INFINITY;
        }
        saturated_moment_part(h, hbar, &x[0].exp(), &x[1].exp(), &x[2])
    };
    let g1 = (hbar * hbar / (4.0 * h.v11)).powf(0.25).ln();
    let g2 = (hbar * hbar / (4.0 * h.v22)).powf(0.25).ln();
    let starts: Vec<Vec<f64>> = [0.6, 1.2, std::f64::consts::FRAC_PI_2, 1.9, 2.5]
        .iter()
        .map(|b| vec![g1, g2, *b])
        .collect();
    let search = PatternSearch {
        initial_step: 0.1,
        min_step: 1e-12,
        shrink: 0.5,
        max_evals: 200_000,
    };
    let m = multistart(&search, f, &starts, exec, |_| 0.0)?;
    Ok(MomentSector {
        s1: m.x[0].exp(),
        s2: m.x[1].exp(),
        beta: m.x[2],
        value: m.value,
        method: SectorMethod::Numeric,
    })
}

/// `V + (ħ/2)(ω₊ + ω₋)` with `ω±²` the Hessian eigenvalues.
pub fn low_energy_potential(q1: f64, q2: f64, v: &Potential2, hbar: f64) -> Result<f64> {
    let h = v.hessian(q1, q2);
    Ok(v.value(q1, q2) + low_energy_shift(&h, hbar)?)
}

/// The moment contribution `(ħ/2)(ω₊ + ω₋)` alone.
pub fn low_energy_shift(h: &Hessian2, hbar: f64) -> Result<f64> {
    let (wp, wm) = h.mode_frequencies_sq();
    if wm < 0.0 || wp < 0.0 {
        return Err(Error::ComplexFrequency);
    }
    Ok(0.5 * hbar * (wp.sqrt() + wm.sqrt()))
}

/// Small-coupling expansion `β ≈ π/2 + V₁₂/((V₁₁V₂₂)^{1/4}(√V₁₁ + √V₂₂))`.
pub fn beta_small_coupling(h: &Hessian2) -> f64 {
    std::f64::consts::FRAC_PI_2 + h.v12 / ((h.v11 * h.v22).powf(0.25) * (h.v11.sqrt() + h.v22.sqrt()))
}

#[derive(Clone, Debug, Serialize)]
pub struct LowEnergyRow {
    pub q1: f64,
    pub q2: f64,
    pub v: f64,
    pub v_low: f64,
    pub s1: f64,
    pub s2: f64,
    pub beta: f64,
}

/// `V_low` and the minimizing moments on a tensor grid, rows in `q₁`-major
/// order. Points with an unstable Hessian are reported as errors.
pub fn low_energy_grid(
    v: &Potential2,
    q1s: &[f64],
    q2s: &[f64],
    hbar: f64,
    exec: Exec,
) -> Vec<Result<LowEnergyRow>> {
    let pts: Vec<(f64, f64)> = q1s
        .iter()
        .flat_map(|a| q2s.iter().map(move |b| (*a, *b)))
        .collect();
    map_slice(exec, &pts, |&(q1, q2)| {
        let h = v.hessian(q1, q2);
        let vq = v.value(q1, q2);
        let sector = minimize_moment_sector(&h, hbar)?;
        Ok(LowEnergyRow {
            q1,
            q2,
            v: vq,
            v_low: vq + low_energy_shift(&h, hbar)?,
            s1: sector.s1,
            s2: sector.s2,
            beta: sector.beta,
        })
    })
}

/// Uncertainty-bound bookkeeping for the two-DOF Casimirs at zero momenta.
#[derive(Clone, Debug, Serialize)]
pub struct SaturationReport {
    pub phi: f64,
    pub gamma: f64,
    pub bound: f64,
    pub phi_saturated: bool,
    pub gamma_saturated: bool,
    pub phi_minus_gamma: f64,
    /// `−√U₂ cos α / sin β`, the difference predicted at saturation.
    pub predicted_difference: f64,
    /// Both bounds hold on a grid of `(α, β)` covering the torus.
    pub holds_for_all_angles: bool,
    /// Zero-momentum `U₂` term at `cos α = 0`, `s₁ = s₂ = 1`, for growing
    /// `√U₂`: pairs `(√U₂, V_{U₂})`.
    pub u2_term: Vec<(f64, f64)>,
    /// `V_{U₂}` strictly decreasing along the samples.
    pub u2_term_unbounded_below: bool,
}

fn phi_gamma(u1: f64, u2: f64, alpha: f64, beta: f64) -> (f64, f64) {
    let r = Realization::new(RealizationKind::TwodofOrder2);
    let y = [1.0, 0.0, 1.0, 0.0, beta, 0.0, alpha, 0.0, u1, u2];
    let ev = |s: &str| r.eval_moment(&MomentIndex::parse(s, 2).expect("index"), &y[..]).expect("moment");
    (ev("pi1^2"), ev("pi2^2"))
}

pub fn saturation_analysis(u1: f64, u2: f64, alpha: f64, beta: f64, hbar: f64) -> Result<SaturationReport> {
    if u2 < 0.0 {
        return Err(Error::NegativeDiscriminant("U2 < 0".into()));
    }
    if beta.sin().abs() < 1e-12 {
        return Err(Error::SingularChart("sin(beta) = 0".into()));
    }
    let bound = hbar * hbar / 4.0;
    let (phi, gamma) = phi_gamma(u1, u2, alpha, beta);
    let tol = 1e-12 * bound.max(phi.abs());
    let n = 64;
    let mut holds = true;
    for i in 0..n {
        let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
        for j in 1..n {
            let b = std::f64::consts::PI * j as f64 / n as f64;
            let (p, g) = phi_gamma(u1, u2, a, b);
            if p < bound - 1e-12 || g < bound - 1e-12 {
                holds = false;
            }
        }
    }
    let r = Realization::new(RealizationKind::TwodofOrder2);
    let h0 = Hessian2::new(0.0, 0.0, 0.0);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let base = moment_part(&r, &h0, &1.0, &1.0, &half_pi, &beta, &u1, &0.0);
    let u2_term: Vec<(f64, f64)> = [1.0, 10.0, 100.0, 1000.0]
        .iter()
        .map(|&root| {
            let w = moment_part(&r, &h0, &1.0, &1.0, &half_pi, &beta, &u1, &(root * root));
            (root, w - base)
        })
        .collect();
    let decreasing = u2_term.windows(2).all(|w| w[1].1 < w[0].1);
    Ok(SaturationReport {
        phi,
        gamma,
        bound,
        phi_saturated: (phi - bound).abs() <= tol,
        gamma_saturated: (gamma - bound).abs() <= tol,
        phi_minus_gamma: phi - gamma,
        predicted_difference: -u2.sqrt() * alpha.cos() / beta.sin(),
        holds_for_all_angles: holds,
        u2_term,
        u2_term_unbounded_below: decreasing,
    })
}
