//! Thermal averages of a free scalar field mode in the order-2 realization.
//!
//! A mode with variables `(s, p; U)` has the Boltzmann weight of
//! `H = p²/2 + λU/(2s²) + ω²s²/8` over `s > 0`, `p ∈ ℝ`, `U ≥ U_min = ħ²/4`.
//! Every average here is available two ways: closed forms, and nested
//! adaptive quadrature of the defining integrals. The quadrature is
//! authoritative.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::par::{map_slice, Exec};
use crate::quadrature::{integrate, integrate_line, Tolerance};
use crate::special::{gauss_hermite, gauss_laguerre, wynn_epsilon};

pub fn u_min(hbar: f64) -> f64 {
    0.25 * hbar * hbar
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ModeSpec {
    pub mass: f64,
    pub k: f64,
    pub beta: f64,
    pub hbar: f64,
}

impl ModeSpec {
    pub fn omega(&self) -> f64 {
        (self.mass * self.mass + self.k * self.k).sqrt()
    }

    pub fn u_min(&self) -> f64 {
        u_min(self.hbar)
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive, got {v}")))
    }
}

/// `x = βω√(λ U_min)`, the ratio of the zero-point scale to the temperature.
fn zero_point_ratio(beta: f64, omega: f64, lambda: f64, u_min: f64) -> f64 {
    beta * omega * (lambda * u_min).sqrt()
}

/// `ln Z = ln(8π) − ln λ − 3 ln(ωβ) + ln(2 + x) − x/2`.
pub fn log_partition_function(beta: f64, omega: f64, lambda: f64, u_min: f64) -> f64 {
    let x = zero_point_ratio(beta, omega, lambda, u_min);
    (8.0 * PI).ln() - lambda.ln() - 3.0 * (omega * beta).ln() + (2.0 + x).ln() - 0.5 * x
}

pub fn partition_function(beta: f64, omega: f64, lambda: f64, u_min: f64) -> f64 {
    log_partition_function(beta, omega, lambda, u_min).exp()
}

/// Closed form with prefactor `4π` in place of `8π`.
pub fn log_partition_function_4pi(beta: f64, omega: f64, lambda: f64, u_min: f64) -> f64 {
    log_partition_function(beta, omega, lambda, u_min) - 2f64.ln()
}

/// `⟨s²⟩ = 12/(ω²β) + U_min β / (1 + ½√U_min ωβ)`.
pub fn mode_variance(beta: f64, omega: f64, u_min: f64) -> f64 {
    12.0 / (omega * omega * beta) + u_min * beta / (1.0 + 0.5 * u_min.sqrt() * omega * beta)
}

/// `⟨E⟩ = (12 + βω(6√U_min + U_min ωβ)) / (2β(2 + β√U_min ω))`.
pub fn mean_energy(beta: f64, omega: f64, u_min: f64) -> f64 {
    let r = u_min.sqrt();
    (12.0 + beta * omega * (6.0 * r + u_min * omega * beta)) / (2.0 * beta * (2.0 + beta * r * omega))
}

/// `⟨U⟩ = U_min + 24/(β²ω²) + 4U_min/(2 + √U_min βω)`.
pub fn mean_casimir(beta: f64, omega: f64, u_min: f64) -> f64 {
    u_min + 24.0 / (beta * beta * omega * omega) + 4.0 * u_min / (2.0 + u_min.sqrt() * beta * omega)
}

/// Boltzmann moments from quadrature. `log_z` is exact up to the quadrature
/// error; the remaining fields are normalized averages.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ThermalMoments {
    pub log_z: f64,
    pub s2: f64,
    pub energy: f64,
    pub casimir: f64,
}

/// Quadrature of `∫ds ∫dp ∫dU e^{−βH} (1, s², H, U)`.
///
/// At fixed `s` the weight is Gaussian in `p` and exponential in `U` with
/// polynomial prefactors, so 8-point Gauss–Hermite and Gauss–Laguerre rules
/// are exact there. The `s` integral is adaptive over `ln s`. The weight is
/// evaluated as `e^{−β(H − E₀)}` with `E₀ = ω√(λU_min)/2`, the minimum of
/// `H`, so that low temperatures do not underflow.
pub fn thermal_moments(beta: f64, omega: f64, lambda: f64, u_min: f64, tol: Tolerance) -> Result<ThermalMoments> {
    check_positive("beta", beta)?;
    check_positive("omega", omega)?;
    check_positive("lambda", lambda)?;
    check_positive("u_min", u_min)?;
    let (hx, hw) = gauss_hermite(8)?;
    let (lx, lw) = gauss_laguerre(8)?;
    let e0 = 0.5 * omega * (lambda * u_min).sqrt();
    let a = 0.5 * beta * lambda * u_min;
    let b = beta * omega * omega / 8.0;
    let y = (a * b).sqrt();
    let t0 = 0.25 * (a / b).ln();
    let t_scale = 1.0 / (1.0 + 8.0 * y).sqrt();
    let p_scale = (2.0 / beta).sqrt();

    let slice = |t: f64| -> Vec<f64> {
        let s = t.exp();
        let s2 = s * s;
        let floor = lambda * u_min / (2.0 * s2) + omega * omega * s2 / 8.0 - e0;
        if (beta * floor).is_nan() || beta * floor >= 745.0 {
            return vec![0.0; 4];
        }
        let u_scale = 2.0 * s2 / (beta * lambda);
        let mut acc = [0.0; 4];
        for (&xp, &wp) in hx.iter().zip(&hw) {
            let p = p_scale * xp;
            for (&xu, &wu) in lx.iter().zip(&lw) {
                let u = u_min + u_scale * xu;
                let h = 0.5 * p * p + lambda * u / (2.0 * s2) + omega * omega * s2 / 8.0;
                let w = wp * wu;
                acc[0] += w;
                acc[1] += w * s2;
                acc[2] += w * h;
                acc[3] += w * u;
            }
        }
        // Jacobians of p, U and ln s, times the U = U_min, p = 0 weight
        let jac = p_scale * u_scale * s * (-beta * floor).exp();
        acc.iter().map(|v| v * jac).collect()
    };
    let v = integrate_line(slice, t0, t_scale, tol)?.value;
    Ok(ThermalMoments {
        log_z: v[0].ln() - beta * e0,
        s2: v[1] / v[0],
        energy: v[2] / v[0],
        casimir: v[3] / v[0],
    })
}

/// Quadrature tolerance used by the thermal averages.
pub fn thermo_tolerance() -> Tolerance {
    Tolerance {
        abs: 1e-300,
        rel: 1e-10,
        max_intervals: 4000,
    }
}

/// One row of thermal output: quadrature values next to the closed forms.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EnsembleAverages {
    pub beta: f64,
    pub omega: f64,
    pub log_z: f64,
    pub log_z_closed: f64,
    pub log_z_4pi: f64,
    pub s2: f64,
    pub s2_closed: f64,
    pub energy: f64,
    pub energy_closed: f64,
    pub casimir: f64,
    pub casimir_closed: f64,
}

impl EnsembleAverages {
    /// Largest relative gap between a quadrature value and its closed form,
    /// with `Z` compared through `ln Z`.
    pub fn max_rel_gap(&self) -> f64 {
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        [
            (self.log_z - self.log_z_closed).abs(),
            rel(self.s2, self.s2_closed),
            rel(self.energy, self.energy_closed),
            rel(self.casimir, self.casimir_closed),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn ensemble_averages(beta: f64, omega: f64, hbar: f64) -> Result<EnsembleAverages> {
    let um = u_min(hbar);
    let m = thermal_moments(beta, omega, 1.0, um, thermo_tolerance())?;
    Ok(EnsembleAverages {
        beta,
        omega,
        log_z: m.log_z,
        log_z_closed: log_partition_function(beta, omega, 1.0, um),
        log_z_4pi: log_partition_function_4pi(beta, omega, 1.0, um),
        s2: m.s2,
        s2_closed: mode_variance(beta, omega, um),
        energy: m.energy,
        energy_closed: mean_energy(beta, omega, um),
        casimir: m.casimir,
        casimir_closed: mean_casimir(beta, omega, um),
    })
}

/// Averages over a `(β, ω)` grid, row-major in `betas`.
pub fn ensemble_grid(betas: &[f64], omegas: &[f64], hbar: f64, exec: Exec) -> Vec<Result<EnsembleAverages>> {
    let pairs: Vec<(f64, f64)> = betas.iter().flat_map(|&b| omegas.iter().map(move |&w| (b, w))).collect();
    map_slice(exec, &pairs, |&(b, w)| ensemble_averages(b, w, hbar))
}

/// Two-point function with its truncation estimate.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TwoPoint {
    pub distance: f64,
    pub value: f64,
    pub tail: f64,
    pub k_reached: f64,
}

/// `G(r) = (1/2π) ∫_0^∞ ⟨s²⟩(ω_k) cos(kr) dk` on the line.
///
/// The integral is summed over half periods of the cosine and the partial
/// sums are extrapolated with Wynn's epsilon algorithm. `CutoffTooSmall` if
/// the extrapolation error is above `tol` (relative) by the time the panels
/// reach `k_cutoff`.
pub fn two_point_function(x_minus_y: f64, mass: f64, beta: f64, hbar: f64, k_cutoff: f64, tol: f64) -> Result<TwoPoint> {
    let r = x_minus_y.abs();
    check_positive("|x - y|", r)?;
    check_positive("mass", mass)?;
    check_positive("beta", beta)?;
    let um = u_min(hbar);
    let f = |k: f64| vec![mode_variance(beta, (mass * mass + k * k).sqrt(), um) * (k * r).cos()];
    let panel_tol = Tolerance {
        abs: 1e-300,
        rel: 1e-13,
        max_intervals: 400,
    };
    let h = PI / r;
    let mut sums = Vec::new();
    let mut acc = 0.0;
    let mut k = 0.0;
    let mut best = (f64::NAN, f64::INFINITY);
    while k + h <= k_cutoff || sums.is_empty() {
        let panel = integrate(f, k, k + h, panel_tol)?.value[0];
        acc += panel;
        k += h;
        sums.push(acc);
        best = (acc, panel.abs());
        if sums.len() >= 8 {
            let start = sums.len().saturating_sub(30);
            best = wynn_epsilon(&sums[start..]);
            if best.1 <= tol * best.0.abs() {
                break;
            }
        }
    }
    let (value, tail) = best;
    if tail.is_nan() || tail > tol * value.abs() {
        return Err(Error::CutoffTooSmall {
            tail: tail / (2.0 * PI),
            tol,
        });
    }
    Ok(TwoPoint {
        distance: r,
        value: value / (2.0 * PI),
        tail: tail / (2.0 * PI),
        k_reached: k,
    })
}

/// `(ħ/2π) K₀(m r)`, the zero-temperature limit.
pub fn vacuum_two_point(x_minus_y: f64, mass: f64, hbar: f64) -> f64 {
    hbar * crate::special::bessel_k0(mass * x_minus_y.abs()) / (2.0 * PI)
}

/// Circle version: `(1/2π)·½ Σ_{|k| ≤ k_max} ⟨s²⟩(ω_k) cos(k r)` over
/// integer `k` on a circle of length `2π`.
pub fn circle_two_point(x_minus_y: f64, mass: f64, beta: f64, hbar: f64, k_max: u64) -> Result<f64> {
    check_positive("mass", mass)?;
    check_positive("beta", beta)?;
    if (k_max as f64) < 10.0 * mass.max(1.0) {
        return Err(Error::InvalidInput(format!("k_max {k_max} below 10·max(1, m)")));
    }
    let um = u_min(hbar);
    let r = x_minus_y.abs();
    let term = |k: u64| {
        let kf = k as f64;
        mode_variance(beta, (mass * mass + kf * kf).sqrt(), um) * (kf * r).cos()
    };
    let tail: f64 = (1..=k_max).rev().map(term).sum();
    Ok((0.5 * term(0) + tail) / (2.0 * PI))
}

pub fn two_point_grid(
    distances: &[f64],
    mass: f64,
    beta: f64,
    hbar: f64,
    k_cutoff: f64,
    tol: f64,
    exec: Exec,
) -> Vec<Result<TwoPoint>> {
    map_slice(exec, distances, |&r| two_point_function(r, mass, beta, hbar, k_cutoff, tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    // ∫_0^∞ s^{2n} e^{−a/s² − b s²} ds from the Bessel-K_{n−1/2} closed forms
    fn gauss_inverse_moment(n: u32, a: f64, b: f64) -> f64 {
        let y = (a * b).sqrt();
        let c = PI.sqrt() * (-2.0 * y).exp();
        match n {
            1 => c / (4.0 * b.powf(1.5)) * (1.0 + 2.0 * y),
            2 => c / (8.0 * b.powf(2.5)) * (3.0 + 6.0 * y + 4.0 * y * y),
            _ => unreachable!(),
        }
    }

    #[test]
    fn closed_form_z_matches_analytic_s_integral() {
        // after the p and U integrals, Z = √(2π/β)·(2/(βλ))·∫ s² e^{−a/s² − b s²} ds
        for &(beta, omega, lambda) in &[(1.0, 1.0, 1.0), (0.3, 2.0, 1.7), (20.0, 0.5, 0.4)] {
            let um = 0.25;
            let a = beta * lambda * um / 2.0;
            let b = beta * omega * omega / 8.0;
            let z = (2.0 * PI / beta).sqrt() * 2.0 / (beta * lambda) * gauss_inverse_moment(1, a, b);
            let closed = partition_function(beta, omega, lambda, um);
            assert!((z / closed - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        let m = thermal_moments(1.0, 1.0, 1.0, 0.25, thermo_tolerance()).unwrap();
        assert!((m.log_z - log_partition_function(1.0, 1.0, 1.0, 0.25)).abs() < 1e-8);
        assert!((m.s2 / mode_variance(1.0, 1.0, 0.25) - 1.0).abs() < 1e-8);
        assert!((m.energy / mean_energy(1.0, 1.0, 0.25) - 1.0).abs() < 1e-8);
        assert!((m.casimir / mean_casimir(1.0, 1.0, 0.25) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn lambda_dependence() {
        for lambda in [0.5, 2.0, 4.0] {
            let m = thermal_moments(2.0, 1.5, lambda, 0.25, thermo_tolerance()).unwrap();
            assert!((m.log_z - log_partition_function(2.0, 1.5, lambda, 0.25)).abs() < 1e-8);
        }
    }

    #[test]
    fn variance_against_ratio_of_s_moments() {
        let (beta, omega, um) = (3.0, 0.7, 0.25);
        let a = beta * um / 2.0;
        let b = beta * omega * omega / 8.0;
        let s2 = gauss_inverse_moment(2, a, b) / gauss_inverse_moment(1, a, b);
        assert!((s2 / mode_variance(beta, omega, um) - 1.0).abs() < 1e-13);
        // ⟨U⟩ = U_min + 2⟨s²⟩/β
        assert!((mean_casimir(beta, omega, um) - um - 2.0 * s2 / beta).abs() < 1e-13);
    }

    #[test]
    fn energy_is_minus_log_z_derivative() {
        let h = 1e-5;
        for &(beta, omega) in &[(0.5, 1.0), (4.0, 2.0)] {
            let d = -(log_partition_function(beta + h, omega, 1.0, 0.25) - log_partition_function(beta - h, omega, 1.0, 0.25))
                / (2.0 * h);
            assert!((d - mean_energy(beta, omega, 0.25)).abs() < 1e-8);
        }
    }

    #[test]
    fn two_point_is_even_and_tends_to_vacuum() {
        let a = two_point_function(0.7, 1.0, 5.0, 1.0, 1e6, 1e-10).unwrap();
        let b = two_point_function(-0.7, 1.0, 5.0, 1.0, 1e6, 1e-10).unwrap();
        assert_eq!(a.value, b.value);
        let g = two_point_function(1.0, 1.0, 1e8, 1.0, 1e6, 1e-10).unwrap();
        assert!((g.value / vacuum_two_point(1.0, 1.0, 1.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn tiny_cutoff_is_reported() {
        let r = two_point_function(1.0, 1.0, 5.0, 1.0, 5.0, 1e-12);
        assert!(matches!(r, Err(Error::CutoffTooSmall { .. })));
    }

    #[test]
    fn circle_rejects_small_k_max() {
        assert!(circle_two_point(0.5, 20.0, 1.0, 1.0, 100).is_err());
        assert!(circle_two_point(0.5, 1.0, 1.0, 1.0, 10).is_ok());
    }
}
