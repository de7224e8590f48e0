//! Execution helpers: index-ordered parallel map and wall-clock deadlines.

use alloc::vec::Vec;

/// Maps `f` over `0..n`, returning results in index order.
#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Optional wall-clock limit. Without `std` a deadline never expires.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Deadline {
    #[cfg(feature = "std")]
    at: Option<std::time::Instant>,
}

impl Deadline {
    pub(crate) fn after(seconds: Option<f64>) -> Self {
        #[cfg(feature = "std")]
        {
            let at = seconds
                .filter(|s| s.is_finite() && *s >= 0.0)
                .map(|s| std::time::Instant::now() + std::time::Duration::from_secs_f64(s));
            Deadline { at }
        }
        #[cfg(not(feature = "std"))]
        {
            let _ = seconds;
            Deadline {}
        }
    }

    pub(crate) fn expired(&self) -> bool {
        #[cfg(feature = "std")]
        {
            self.at.is_some_and(|t| std::time::Instant::now() >= t)
        }
        #[cfg(not(feature = "std"))]
        {
            false
        }
    }
}
