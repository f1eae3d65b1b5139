//! Globally adaptive Gauss–Kronrod (7/15) quadrature for vector-valued
//! integrands, with maps for half-line and whole-line domains.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-13,
            rel: 1e-11,
            max_intervals: 4000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Integral {
    pub value: Vec<f64>,
    pub error: Vec<f64>,
    pub intervals: usize,
}

struct Piece {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: Vec<f64>,
    key: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key.total_cmp(&other.key)
    }
}

/// One Kronrod panel on `[a, b]`: estimate and error per component.
pub fn gk15<F: Fn(f64) -> Vec<f64>>(f: &F, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let n = fc.len();
    let mut k: Vec<f64> = fc.iter().map(|v| v * WGK[7]).collect();
    let mut g: Vec<f64> = fc.iter().map(|v| v * WG[3]).collect();
    for i in 0..7 {
        let fl = f(c - h * XGK[i]);
        let fr = f(c + h * XGK[i]);
        for j in 0..n {
            let s = fl[j] + fr[j];
            k[j] += WGK[i] * s;
            if i % 2 == 1 {
                g[j] += WG[i / 2] * s;
            }
        }
    }
    let value: Vec<f64> = k.iter().map(|v| v * h).collect();
    let error = k.iter().zip(&g).map(|(k, g)| ((k - g) * h).abs()).collect();
    (value, error)
}

/// Adaptive integral of `f` over the finite interval `[a, b]`. Returns
/// `NonFinite` when the integrand produces NaN or infinity anywhere and
/// `StepFailure` when the interval budget runs out before the tolerance.
pub fn integrate<F: Fn(f64) -> Vec<f64>>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    let (v0, e0) = gk15(&f, a, b);
    let n = v0.len();
    let check = |v: &[f64]| {
        if v.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("quadrature integrand".into()))
        }
    };
    check(&v0)?;
    let mut total = v0.clone();
    let mut err = e0.clone();
    let mut heap = BinaryHeap::new();
    heap.push(Piece {
        a,
        b,
        value: v0,
        error: e0,
        key: 0.0,
    });
    let mut count = 1;
    let converged = |total: &[f64], err: &[f64]| {
        (0..n).all(|j| err[j] <= tol.abs.max(tol.rel * total[j].abs()))
    };
    let score = |e: &[f64], total: &[f64]| {
        (0..n)
            .map(|j| e[j] / tol.abs.max(tol.rel * total[j].abs()))
            .fold(0.0, f64::max)
    };
    while !converged(&total, &err) {
        if count >= tol.max_intervals {
            return Err(Error::StepFailure { t: f64::NAN });
        }
        let worst = heap.pop().expect("heap never empty");
        let m = 0.5 * (worst.a + worst.b);
        let (vl, el) = gk15(&f, worst.a, m);
        let (vr, er) = gk15(&f, m, worst.b);
        check(&vl)?;
        check(&vr)?;
        for j in 0..n {
            total[j] += vl[j] + vr[j] - worst.value[j];
            err[j] += el[j] + er[j] - worst.error[j];
        }
        let kl = score(&el, &total);
        let kr = score(&er, &total);
        heap.push(Piece { a: worst.a, b: m, value: vl, error: el, key: kl });
        heap.push(Piece { a: m, b: worst.b, value: vr, error: er, key: kr });
        count += 1;
    }
    // recompute totals from pieces to limit drift from incremental updates
    let mut value = vec![0.0; n];
    let mut error = vec![0.0; n];
    for p in heap.iter() {
        for j in 0..n {
            value[j] += p.value[j];
            error[j] += p.error[j];
        }
    }
    Ok(Integral {
        value,
        error,
        intervals: count,
    })
}

/// `∫_a^∞ f(x) dx` through `x = a + scale·t/(1-t)`.
pub fn integrate_half_line<F: Fn(f64) -> Vec<f64>>(f: F, a: f64, scale: f64, tol: Tolerance) -> Result<Integral> {
    let g = |t: f64| {
        let u = 1.0 - t;
        let x = a + scale * t / u;
        let jac = scale / (u * u);
        let mut v = f(x);
        let zero = v.iter().all(|y| *y == 0.0);
        for y in v.iter_mut() {
            *y = if zero { 0.0 } else { *y * jac };
        }
        v
    };
    integrate(g, 0.0, 1.0, tol)
}

/// `∫_{-∞}^{∞} f(x) dx` through `x = c + scale·t/(1-t²)`.
pub fn integrate_line<F: Fn(f64) -> Vec<f64>>(f: F, c: f64, scale: f64, tol: Tolerance) -> Result<Integral> {
    let g = |t: f64| {
        let u = 1.0 - t * t;
        let x = c + scale * t / u;
        let jac = scale * (1.0 + t * t) / (u * u);
        let mut v = f(x);
        let zero = v.iter().all(|y| *y == 0.0);
        for y in v.iter_mut() {
            *y = if zero { 0.0 } else { *y * jac };
        }
        v
    };
    integrate(g, -1.0, 1.0, tol)
}
