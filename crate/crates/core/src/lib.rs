pub mod diagnostics;
pub mod error;
pub mod factors;
pub mod frame;
pub mod lasso;
pub mod ocmt;
pub mod pipeline;
pub mod regress;
pub mod report;
pub mod transform;

pub use error::{Error, Result};

/// Map `0..n` through `f`, in parallel when the `parallel` feature is on.
/// Output order always follows the index.
#[cfg(feature = "parallel")]
pub(crate) fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
