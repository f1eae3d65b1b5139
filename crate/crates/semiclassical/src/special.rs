//! Special functions and quadrature rules: Gauss–Hermite (Golub–Welsch),
//! Gauss–Legendre, the modified Bessel function `K₀`, and Wynn's epsilon
//! algorithm.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Values proportional to the orthonormal Hermite polynomials
/// `p_0(x) .. p_{n-1}(x)` (weight `e^{-x²}`), all sharing one unknown
/// positive scale factor so that large `x` neither overflows nor underflows.
pub fn hermite_scaled(x: f64, n: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(n);
    if n == 0 {
        return p;
    }
    p.push(1.0);
    if n == 1 {
        return p;
    }
    p.push(2f64.sqrt() * x);
    for j in 1..n - 1 {
        let next = (x * p[j] - (j as f64 / 2.0).sqrt() * p[j - 1]) / ((j + 1) as f64 / 2.0).sqrt();
        p.push(next);
        if next.abs() > 1e150 {
            for v in p.iter_mut() {
                *v *= 1e-150;
            }
        }
    }
    p
}

/// Nodes of the `k`-point Gauss–Hermite rule, ascending. Eigenvalues of the
/// Jacobi matrix, each polished by Newton steps on `p_k`.
pub fn gauss_hermite_nodes(k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let jac = DMatrix::from_fn(k, k, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = jac.symmetric_eigenvalues();
    let mut nodes: Vec<f64> = eig.iter().copied().collect();
    if nodes.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonConvergedEigen("Gauss-Hermite Jacobi matrix".into()));
    }
    nodes.sort_by(f64::total_cmp);
    let d = (2.0 * k as f64).sqrt();
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let p = hermite_scaled(*x, k + 1);
            let step = p[k] / (d * p[k - 1]);
            if !step.is_finite() {
                break;
            }
            *x -= step;
            if step.abs() < 1e-16 * (1.0 + x.abs()) {
                break;
            }
        }
    }
    Ok(nodes)
}

/// Gauss–Hermite nodes and weights for `∫ f(x) e^{-x²} dx`.
pub fn gauss_hermite(k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let nodes = gauss_hermite_nodes(k)?;
    let weights = nodes
        .iter()
        .map(|&x| {
            // w = 1 / Σ p_j², with h_j = p_j e^{-x²/2} kept in range
            let p = hermite_scaled(x, k);
            let scale = std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp() / p[0];
            let s: f64 = p.iter().map(|v| (v * scale) * (v * scale)).sum();
            (-x * x).exp() / s
        })
        .collect();
    Ok((nodes, weights))
}

/// Quadrature matrix `u[k][j] = p_j(x_k) / sqrt(Σ_{i<K} p_i(x_k)²)` for the
/// `K`-point rule: `Σ_k u[k][m] u[k][n] f(x_k)` approximates
/// `∫ h_m h_n f dx` with normalized Hermite functions `h_j`, exactly for
/// polynomial `f` of degree below `2K - m - n`.
pub struct HermiteTable {
    pub nodes: Vec<f64>,
    pub u: Vec<Vec<f64>>,
}

pub fn hermite_table(k_nodes: usize, n_basis: usize) -> Result<HermiteTable> {
    if n_basis > k_nodes {
        return Err(Error::InvalidInput("basis larger than quadrature rule".into()));
    }
    let nodes = gauss_hermite_nodes(k_nodes)?;
    let u = nodes
        .iter()
        .map(|&x| {
            let p = hermite_scaled(x, k_nodes);
            let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            p[..n_basis].iter().map(|v| v / norm).collect()
        })
        .collect();
    Ok(HermiteTable { nodes, u })
}

/// Gauss–Laguerre nodes and weights for `∫_0^∞ f(x) e^{-x} dx` from the
/// Jacobi matrix (diagonal `2i+1`, off-diagonal `i`).
pub fn gauss_laguerre(k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let jac = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            (2 * i + 1) as f64
        } else if i + 1 == j || j + 1 == i {
            i.max(j) as f64
        } else {
            0.0
        }
    });
    let eig = jac.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..k)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    if pairs.iter().any(|(x, w)| !x.is_finite() || !w.is_finite()) {
        return Err(Error::NonConvergedEigen("Gauss-Laguerre Jacobi matrix".into()));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs.into_iter().unzip())
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Modified Bessel function `K₀(x)` from `∫_0^∞ e^{-x cosh t} dt` with the
/// trapezoid rule, which converges geometrically for this integrand.
pub fn bessel_k0(x: f64) -> f64 {
    if x <= 0.0 {
        return f64::INFINITY;
    }
    let t_max = (1.0 + 745.0 / x).acosh();
    let trap = |h: f64| {
        let n = (t_max / h).ceil() as usize;
        let mut s = 0.5 * (-x).exp();
        for i in 1..=n {
            s += (-x * (i as f64 * h).cosh()).exp();
        }
        s * h
    };
    let mut h = 0.25;
    let mut prev = trap(h);
    loop {
        h /= 2.0;
        let cur = trap(h);
        if (cur - prev).abs() <= 1e-15 * cur.abs() || h < 1e-4 {
            return cur;
        }
        prev = cur;
    }
}

/// Wynn's epsilon algorithm on a sequence of partial sums. Returns the
/// extrapolated limit and the difference between the last two estimates.
pub fn wynn_epsilon(s: &[f64]) -> (f64, f64) {
    let n = s.len();
    if n < 3 {
        let last = s.last().copied().unwrap_or(0.0);
        let prev = if n == 2 { s[0] } else { last };
        return (last, (last - prev).abs());
    }
    // columns eps_{-1} = 0, eps_0 = s
    let mut prev: Vec<f64> = vec![0.0; n + 1];
    let mut cur: Vec<f64> = s.to_vec();
    let mut estimates = Vec::new();
    let mut k = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let d = cur[i + 1] - cur[i];
            let v = if d == 0.0 { f64::INFINITY } else { prev[i + 1] + 1.0 / d };
            next.push(v);
        }
        prev = cur;
        cur = next;
        k += 1;
        if k % 2 == 0 {
            if let Some(v) = cur.last() {
                if v.is_finite() {
                    estimates.push(*v);
                }
            }
        }
        if cur.iter().any(|v| !v.is_finite()) {
            break;
        }
    }
    match estimates.len() {
        0 => (s[n - 1], (s[n - 1] - s[n - 2]).abs()),
        1 => (estimates[0], (estimates[0] - s[n - 1]).abs()),
        m => (estimates[m - 1], (estimates[m - 1] - estimates[m - 2]).abs()),
    }
}
