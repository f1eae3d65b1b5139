//! Derivative-free minimisation: Hooke–Jeeves pattern search with
//! multi-start. Works for non-smooth objectives such as `|q|`.

use crate::error::{Error, Result};
use crate::par::{map_slice, Exec};

#[derive(Clone, Copy, Debug)]
pub struct PatternSearch {
    pub initial_step: f64,
    pub min_step: f64,
    pub shrink: f64,
    pub max_evals: usize,
}

impl Default for PatternSearch {
    fn default() -> Self {
        PatternSearch {
            initial_step: 0.25,
            min_step: 1e-11,
            shrink: 0.5,
            max_evals: 200_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

impl PatternSearch {
    pub fn minimize<F: Fn(&[f64]) -> f64>(&self, f: F, x0: &[f64]) -> Minimum {
        let n = x0.len();
        let evals = std::cell::Cell::new(0usize);
        let mut eval = |x: &[f64]| {
            evals.set(evals.get() + 1);
            sanitize(f(x))
        };
        let mut base = x0.to_vec();
        let mut fbase = eval(&base);
        let mut step = self.initial_step;

        let explore = |x: &mut Vec<f64>, fx: &mut f64, step: f64, eval: &mut dyn FnMut(&[f64]) -> f64| {
            for i in 0..n {
                let orig = x[i];
                x[i] = orig + step;
                let up = eval(x);
                if up < *fx {
                    *fx = up;
                    continue;
                }
                x[i] = orig - step;
                let down = eval(x);
                if down < *fx {
                    *fx = down;
                    continue;
                }
                x[i] = orig;
            }
        };

        while step > self.min_step && evals.get() < self.max_evals {
            let mut trial = base.clone();
            let mut ftrial = fbase;
            explore(&mut trial, &mut ftrial, step, &mut eval);
            if ftrial < fbase {
                // pattern moves while they keep paying off
                loop {
                    let pattern: Vec<f64> = trial
                        .iter()
                        .zip(&base)
                        .map(|(t, b)| 2.0 * t - b)
                        .collect();
                    base = trial;
                    fbase = ftrial;
                    let mut p = pattern;
                    let mut fp = eval(&p);
                    explore(&mut p, &mut fp, step, &mut eval);
                    if fp < fbase && evals.get() < self.max_evals {
                        trial = p;
                        ftrial = fp;
                    } else {
                        break;
                    }
                }
            } else {
                step *= self.shrink;
            }
        }
        Minimum {
            x: base,
            value: fbase,
            evals: evals.get(),
        }
    }
}

/// Runs the pattern search from every start and returns the best finite
/// minimum. Ties within `1e-12` relative are broken by `tie_break`, smaller
/// first.
pub fn multistart<F, K>(
    search: &PatternSearch,
    f: F,
    starts: &[Vec<f64>],
    exec: Exec,
    tie_break: K,
) -> Result<Minimum>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
    K: Fn(&[f64]) -> f64,
{
    let results = map_slice(exec, starts, |x0| search.minimize(&f, x0));
    let best = results
        .iter()
        .filter(|m| m.value.is_finite())
        .map(|m| m.value)
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(Error::NoMinimumFound);
    }
    let tol = 1e-12 * (1.0 + best.abs());
    results
        .into_iter()
        .filter(|m| m.value <= best + tol)
        .min_by(|a, b| tie_break(&a.x).total_cmp(&tie_break(&b.x)))
        .ok_or(Error::NoMinimumFound)
}

/// `n` logarithmically spaced values on `[lo, hi]`.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_quadratic() {
        let m = PatternSearch::default().minimize(|x| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2), &[0.0, 0.0]);
        assert!((m.x[0] - 1.0).abs() < 1e-9);
        assert!((m.x[1] + 2.0).abs() < 1e-9);
    }

    #[test]
    fn kinked_objective() {
        let m = PatternSearch::default().minimize(|x| (x[0] - 0.3).abs() + 2.0 * x[1].abs(), &[2.0, -1.7]);
        assert!((m.x[0] - 0.3).abs() < 1e-9);
        assert!(m.x[1].abs() < 1e-9);
    }

    #[test]
    fn rosenbrock_valley() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = PatternSearch::default().minimize(f, &[-1.2, 1.0]);
        assert!(m.value < 1e-10, "{m:?}");
    }

    #[test]
    fn multistart_picks_global_minimum() {
        let f = |x: &[f64]| (x[0] * x[0] - 1.0).powi(2) + 0.1 * x[0];
        let starts: Vec<Vec<f64>> = vec![vec![2.0], vec![-2.0], vec![0.5]];
        let m = multistart(&PatternSearch::default(), f, &starts, Exec::Sequential, |_| 0.0).unwrap();
        assert!(m.x[0] < 0.0);
    }

    #[test]
    fn all_nan_is_an_error() {
        let r = multistart(&PatternSearch::default(), |_| f64::NAN, &[vec![0.0]], Exec::Sequential, |_| 0.0);
        assert_eq!(r, Err(Error::NoMinimumFound));
    }

    #[test]
    fn logspace_endpoints() {
        let v = logspace(0.01, 100.0, 5);
        assert!((v[0] - 0.01).abs() < 1e-15);
        assert!((v[2] - 1.0).abs() < 1e-12);
        assert!((v[4] - 100.0).abs() < 1e-10);
    }
}
