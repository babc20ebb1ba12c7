//! Execution-mode dispatch for row-parallel kernels.
//!
//! Every kernel that can split its output by rows goes through
//! [`for_each_row`]. Rows are written independently and the work inside a
//! row is sequential, so a parallel run produces exactly the bits of a
//! sequential one.

/// How a row kernel is scheduled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Execution::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Execution::Sequential
        }
    }
}

// Rows handed to one rayon task at a time; keeps scheduling overhead small on
// narrow matrices.
#[cfg(feature = "parallel")]
const MIN_ROWS_PER_TASK: usize = 64;

/// Calls `f(row_index, row)` for every `width`-sized row of `out`.
pub fn for_each_row<F>(exec: Execution, out: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Send + Sync,
{
    if width == 0 {
        return;
    }
    match exec {
        Execution::Sequential => {
            for (i, row) in out.chunks_mut(width).enumerate() {
                f(i, row);
            }
        }
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            out.par_chunks_mut(width)
                .with_min_len(MIN_ROWS_PER_TASK)
                .enumerate()
                .for_each(|(i, row)| f(i, row));
        }
    }
}

/// Maps `f` over `items`, in parallel when the feature is enabled. Output
/// order always matches input order.
pub fn map_collect<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
