use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Axis-aligned box `[lo_i, hi_i]` scoping every analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    axes: Vec<(f64, f64)>,
}

impl Bounds {
    pub fn new(axes: Vec<(f64, f64)>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidBounds("no axes given".into()));
        }
        for (i, &(lo, hi)) in axes.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::InvalidBounds(format!("axis {i} is not finite")));
            }
            if lo >= hi {
                return Err(Error::InvalidBounds(format!("axis {i}: lower bound {lo} is not below upper bound {hi}")));
            }
        }
        Ok(Self { axes })
    }

    /// Same interval on every axis.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(alloc::vec![(lo, hi); dim])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[(f64, f64)] {
        &self.axes
    }

    pub fn span(&self, i: usize) -> f64 {
        self.axes[i].1 - self.axes[i].0
    }

    /// Length of the box diagonal.
    pub fn diameter(&self) -> f64 {
        libm::sqrt((0..self.dim()).map(|i| self.span(i) * self.span(i)).sum())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_expanded(x, 0.0)
    }

    /// Membership in the box grown by `frac · span` on each side of every axis.
    pub fn contains_expanded(&self, x: &[f64], frac: f64) -> bool {
        x.iter().zip(&self.axes).all(|(&v, &(lo, hi))| {
            let m = frac * (hi - lo);
            v >= lo - m && v <= hi + m
        })
    }

    pub fn expanded(&self, frac: f64) -> Bounds {
        Bounds {
            axes: self
                .axes
                .iter()
                .map(|&(lo, hi)| {
                    let m = frac * (hi - lo);
                    (lo - m, hi + m)
                })
                .collect(),
        }
    }

    /// Maps a point of the unit cube onto the box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.axes).map(|(&t, &(lo, hi))| lo + t * (hi - lo)).collect()
    }
}
