//! Data-parallel execution with a sequential fallback.
//!
//! Work items are indexed and results come back in index order, so output
//! never depends on the scheduling. With the `parallel` feature disabled
//! every policy runs sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Defaults to the parallel policy when it is compiled in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

impl Execution {
    /// `f(0), ..., f(n-1)` in order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        }
    }

    /// Applies `f` to each element in order.
    pub fn map_slice<S, T, F>(self, items: &[S], f: F) -> Vec<T>
    where
        S: Sync,
        T: Send,
        F: Fn(&S) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.par_iter().map(f).collect(),
        }
    }

    /// Mutates each element in place.
    pub fn for_each_mut<S, F>(self, items: &mut [S], f: F)
    where
        S: Send,
        F: Fn(usize, &mut S) + Sync + Send,
    {
        match self {
            Execution::Sequential => items.iter_mut().enumerate().for_each(|(i, s)| f(i, s)),
            #[cfg(feature = "parallel")]
            Execution::Parallel => items
                .par_iter_mut()
                .enumerate()
                .for_each(|(i, s)| f(i, s)),
        }
    }
}
