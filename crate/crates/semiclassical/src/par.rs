//! Data-parallel helpers with a sequential fallback.
//!
//! Every loop that is embarrassingly parallel in this crate (random-point
//! certificates, parameter sweeps, multi-start minimisation, grid output)
//! goes through these functions. With the `parallel` feature disabled the
//! `Parallel` mode silently runs sequentially, so results never depend on it.

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Exec {
    #[default]
    Parallel,
    Sequential,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Maps `f` over `0..n` and returns the results in index order.
pub fn map_range<R, F>(exec: Exec, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Maps `f` over a slice, preserving order.
pub fn map_slice<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_range(exec, items.len(), |i| f(&items[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree_and_keep_order() {
        let a = map_range(Exec::Parallel, 1000, |i| (i as f64).sqrt());
        let b = map_range(Exec::Sequential, 1000, |i| (i as f64).sqrt());
        assert_eq!(a, b);
        assert_eq!(a[49], 7.0);
    }

    #[test]
    fn empty_range() {
        let v: Vec<u8> = map_range(Exec::Parallel, 0, |_| 0);
        assert!(v.is_empty());
    }
}
