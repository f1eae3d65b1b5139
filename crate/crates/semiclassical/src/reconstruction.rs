//! Position-space density and phase of a pure state from its moments, by
//! Hermite series, and a structural scan for impurity parameters.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::MomentIndex;
use crate::error::{Error, Result};
use crate::par::{map_slice, Exec};
use crate::realizations::Realization;

pub const MAX_ORDER: usize = 20;
pub const DENSITY_FLOOR: f64 = 1e-8;

/// Raw moments `a_n = ⟨q̂ⁿ⟩` and `b_n = Re⟨q̂ⁿπ̂⟩`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentInput {
    pub a: Vec<f64>,
    #[serde(default)]
    pub b: Vec<f64>,
    #[serde(default = "one")]
    pub hbar: f64,
}

fn one() -> f64 {
    1.0
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl MomentInput {
    /// Raw moments from means and central moments. `dq[k] = Δ(q^k)` and
    /// `dqpi[k] = Δ(q^k π)` for `k ≥ 0`; the entries for `k = 0, 1` of `dq`
    /// and `k = 0` of `dqpi` are ignored (they are `1`, `0` and `0`).
    pub fn from_central(mean_q: f64, mean_pi: f64, dq: &[f64], dqpi: &[f64], hbar: f64) -> Self {
        let central = |k: usize| match k {
            0 => 1.0,
            1 => 0.0,
            _ => dq[k],
        };
        let central_pi = |k: usize| if k == 0 { 0.0 } else { dqpi[k] };
        let a = (0..dq.len())
            .map(|n| (0..=n).map(|k| binomial(n, k) * mean_q.powi((n - k) as i32) * central(k)).sum())
            .collect();
        // (q^n π)_W = Σ_k C(n,k) q̄^{n-k} (δq^k π̄ + (δq^k δπ)_W)
        let b = (0..dqpi.len().min(dq.len()))
            .map(|n| {
                (0..=n)
                    .map(|k| binomial(n, k) * mean_q.powi((n - k) as i32) * (mean_pi * central(k) + central_pi(k)))
                    .sum()
            })
            .collect();
        MomentInput { a, b, hbar }
    }
}

/// `h[n][l]`: coefficients of the physicists' Hermite polynomials,
/// `H_n(q) = Σ_l h[n][l] q^l`.
pub fn hermite_coefficients(n_max: usize) -> Vec<Vec<f64>> {
    let mut h = vec![vec![0.0; n_max + 1]; n_max + 1];
    h[0][0] = 1.0;
    if n_max >= 1 {
        h[1][1] = 2.0;
    }
    for n in 1..n_max {
        for l in 0..=n_max {
            let up = if l > 0 { 2.0 * h[n][l - 1] } else { 0.0 };
            h[n + 1][l] = up - 2.0 * n as f64 * h[n - 1][l];
        }
    }
    h
}

/// `H_0(q) .. H_n(q)` by recurrence.
fn hermite_values(q: f64, n: usize) -> Vec<f64> {
    let mut v = vec![1.0; n + 1];
    if n >= 1 {
        v[1] = 2.0 * q;
    }
    for k in 1..n {
        v[k + 1] = 2.0 * q * v[k] - 2.0 * k as f64 * v[k - 1];
    }
    v
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn project(h: &[Vec<f64>], m: &[f64], n: usize) -> Vec<f64> {
    (0..=n).map(|k| (0..=k).map(|l| h[k][l] * m[l]).sum()).collect()
}

/// `e^{-q²} Σ_n coef_n H_n(q) / (2ⁿ n!)`, without the constant in front.
fn series(coef: &[f64], q: f64) -> (f64, f64) {
    let n = coef.len() - 1;
    let hv = hermite_values(q, n);
    let g = (-q * q).exp();
    let mut acc = 0.0;
    let mut last = 0.0;
    for k in 0..=n {
        last = g * coef[k] * hv[k] / (2f64.powi(k as i32) * factorial(k));
        acc += last;
    }
    (acc, last)
}

#[derive(Clone, Debug, Serialize)]
pub struct Density {
    pub grid: Vec<f64>,
    /// Renormalized to unit integral over the real line.
    pub density: Vec<f64>,
    /// The series with the constant `1/(2ⁿ π n!)`.
    pub raw: Vec<f64>,
    pub coefficients: Vec<f64>,
    /// Largest `|last term| / max density` on the grid.
    pub residual: f64,
    /// Whether the Hankel matrix `[a_{i+j}]` is positive semidefinite.
    pub hankel_positive: bool,
}

/// Reconstructs `|ψ(q)|²` from `a_0 .. a_N` on `grid`.
///
/// `c_n = Σ_l h_{n,l} a_l`, and the density is `e^{-q²} Σ c_n H_n / (2ⁿ π n!)`
/// rescaled so that its integral over the line, `c_0/√π`, equals one (the
/// rescaling turns `π` into `√π`). `SeriesDiverging` when the last term
/// exceeds `div_tol` times the peak density.
pub fn density_from_moments(a: &[f64], n: usize, grid: &[f64], div_tol: f64, exec: Exec) -> Result<Density> {
    if n > MAX_ORDER {
        return Err(Error::InvalidInput(format!("series order {n} above {MAX_ORDER}")));
    }
    if a.len() <= n {
        return Err(Error::InvalidInput(format!("need moments a_0..a_{n}, got {}", a.len())));
    }
    if (a[0] - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("a_0 = {} is not normalized", a[0])));
    }
    let h = hermite_coefficients(n);
    let c = project(&h, a, n);
    let renorm = std::f64::consts::PI.sqrt() / c[0];
    let vals = map_slice(exec, grid, |&q| series(&c, q));
    let raw: Vec<f64> = vals.iter().map(|(v, _)| v / std::f64::consts::PI).collect();
    let density: Vec<f64> = raw.iter().map(|v| v * renorm).collect();
    let peak = density.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let last = vals.iter().fold(0.0f64, |m, (_, l)| m.max(l.abs())) / std::f64::consts::PI * renorm;
    let residual = if peak > 0.0 { last / peak } else { f64::INFINITY };
    if residual.is_nan() || residual > div_tol {
        return Err(Error::SeriesDiverging);
    }
    Ok(Density {
        grid: grid.to_vec(),
        density,
        raw,
        coefficients: c,
        residual,
        hankel_positive: hankel_positive(&a[..=n]),
    })
}

fn hankel_positive(a: &[f64]) -> bool {
    let m = (a.len() - 1) / 2 + 1;
    let hk = DMatrix::from_fn(m, m, |i, j| a[i + j]);
    let scale = hk.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    hk.symmetric_eigenvalues().iter().all(|&e| e >= -1e-12 * scale)
}

#[derive(Clone, Debug, Serialize)]
pub struct Phase {
    pub grid: Vec<f64>,
    pub dalpha_dq: Vec<f64>,
    /// Cumulative trapezoid integral with `α(0) = 0` (or `α = 0` at the
    /// first grid point when the grid does not reach 0).
    pub alpha: Vec<f64>,
}

/// Phase gradient `dα/dq` from `b_0 .. b_N` and the matching density.
///
/// `d_n = Σ_l h_{n,l} b_l`; `dα/dq` is the ratio of the `d` series to `ħ`
/// times the raw `c` series, so the normalization constant cancels.
/// `DensityFloorHit` where the density falls below `1e-8`.
pub fn phase_from_moments(b: &[f64], density: &Density, n: usize, hbar: f64) -> Result<Phase> {
    if b.len() <= n || density.coefficients.len() <= n {
        return Err(Error::InvalidInput(format!("need moments b_0..b_{n}")));
    }
    let h = hermite_coefficients(n);
    let d = project(&h, b, n);
    let c = &density.coefficients[..=n];
    let mut slope = Vec::with_capacity(density.grid.len());
    for (i, &q) in density.grid.iter().enumerate() {
        if density.density[i].is_nan() || density.density[i] < DENSITY_FLOOR {
            return Err(Error::DensityFloorHit { q });
        }
        let (num, _) = series(&d, q);
        let (den, _) = series(c, q);
        slope.push(num / (hbar * den));
    }
    let g = &density.grid;
    let mut alpha = vec![0.0; g.len()];
    for i in 1..g.len() {
        alpha[i] = alpha[i - 1] + 0.5 * (slope[i] + slope[i - 1]) * (g[i] - g[i - 1]);
    }
    if let Some(k) = g.windows(2).position(|w| w[0] <= 0.0 && w[1] >= 0.0) {
        let t = if g[k + 1] > g[k] { -g[k] / (g[k + 1] - g[k]) } else { 0.0 };
        let zero = alpha[k] + t * (alpha[k + 1] - alpha[k]);
        for v in alpha.iter_mut() {
            *v -= zero;
        }
    }
    Ok(Phase {
        grid: g.clone(),
        dalpha_dq: slope,
        alpha,
    })
}

/// Chart parameters whose gradient vanishes on every provided moment with
/// at most one momentum factor, at `points` random regular points, and that
/// do enter some other moment.
pub fn impurity_candidates(r: &Realization, points: usize, seed: u64) -> Result<Vec<String>> {
    let chart = r.chart();
    let dim = chart.dim();
    let moments = r.moments();
    let funcs = moments.iter().map(|m| r.moment(m)).collect::<Result<Vec<_>>>()?;
    let low: Vec<bool> = moments.iter().map(|m: &MomentIndex| m.pi_power() <= 1).collect();
    let mut in_low = vec![false; dim];
    let mut in_high = vec![false; dim];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..points {
        let x = r.random_regular_point(&mut rng);
        for (f, &is_low) in funcs.iter().zip(&low) {
            let d = f.eval_d1(&x)?;
            let grad: Vec<f64> = (0..dim).map(|i| d.deriv(i)).collect();
            let scale = grad.iter().fold(d.re.abs(), |m, g| m.max(g.abs())).max(1.0);
            for (i, g) in grad.iter().enumerate() {
                if g.abs() > 1e-12 * scale {
                    if is_low {
                        in_low[i] = true;
                    } else {
                        in_high[i] = true;
                    }
                }
            }
        }
    }
    let names = chart.names();
    Ok((0..dim)
        .filter(|&i| in_high[i] && !in_low[i])
        .map(|i| names[i].to_string())
        .collect())
}
