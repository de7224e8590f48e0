//! Vector fields `x ↦ F(x)` and the built-in model zoo.

mod zoo;

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numerics::{Dual, Scalar};

pub use zoo::{builtin, default_bounds, parameters, stem_cell_rhs, StemCellParams, MODEL_NAMES};

/// Named parameter overrides, e.g. `{"L": 150.0}`.
pub type ParamMap = BTreeMap<String, f64>;

/// A right-hand side written once against [`Scalar`], so the same code
/// evaluates plain values and exact derivatives.
pub trait System: Send + Sync {
    fn eval<S: Scalar>(&self, x: &[S], out: &mut [S]);
}

trait Erased: Send + Sync {
    fn real(&self, x: &[f64], out: &mut [f64]) -> Result<()>;
    fn dual(&self, x: &[Dual], out: &mut [Dual]) -> Result<()>;
}

struct SystemImpl<T>(T);

impl<T: System> Erased for SystemImpl<T> {
    fn real(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.0.eval(x, out);
        Ok(())
    }
    fn dual(&self, x: &[Dual], out: &mut [Dual]) -> Result<()> {
        self.0.eval(x, out);
        Ok(())
    }
}

type DualFn = dyn Fn(&[Dual]) -> Vec<Dual> + Send + Sync;

struct ClosureImpl(Box<DualFn>);

impl ClosureImpl {
    fn call(&self, x: &[Dual], out: &mut [Dual]) -> Result<()> {
        let v = (self.0)(x);
        if v.len() != out.len() {
            return Err(Error::InconsistentDimension { expected: out.len(), got: v.len() });
        }
        out.copy_from_slice(&v);
        Ok(())
    }
}

impl Erased for ClosureImpl {
    fn real(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let xd: Vec<Dual> = x.iter().map(|&v| Dual::constant(v)).collect();
        let mut od = vec![Dual::default(); out.len()];
        self.call(&xd, &mut od)?;
        for (o, d) in out.iter_mut().zip(od) {
            *o = d.re;
        }
        Ok(())
    }
    fn dual(&self, x: &[Dual], out: &mut [Dual]) -> Result<()> {
        self.call(x, out)
    }
}

struct ScaledImpl {
    inner: Arc<dyn Erased>,
    factor: f64,
}

impl Erased for ScaledImpl {
    fn real(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.inner.real(x, out)?;
        out.iter_mut().for_each(|v| *v *= self.factor);
        Ok(())
    }
    fn dual(&self, x: &[Dual], out: &mut [Dual]) -> Result<()> {
        self.inner.dual(x, out)?;
        out.iter_mut().for_each(|v| *v = *v * self.factor);
        Ok(())
    }
}

/// An evaluatable map from n-vectors to n-vectors.
///
/// Cheap to clone and immutable; evaluation is pure and thread-safe.
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    name: Option<String>,
    inner: Arc<dyn Erased>,
}

impl core::fmt::Debug for VectorField {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("VectorField").field("dim", &self.dim).field("name", &self.name).finish()
    }
}

impl VectorField {
    /// Wraps a [`System`] of the given dimension.
    pub fn new<T: System + 'static>(dim: usize, system: T) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        Ok(Self { dim, name: None, inner: Arc::new(SystemImpl(system)) })
    }

    /// Field from a closure over dual numbers; plain evaluation seeds no
    /// derivative.
    ///
    /// ```
    /// use dynclass_core::{Dual, VectorField};
    /// let f = VectorField::from_fn(2, |x: &[Dual]| vec![-x[0], -x[1]]).unwrap();
    /// assert_eq!(f.eval(&[1.0, 2.0]).unwrap(), [-1.0, -2.0]);
    /// ```
    pub fn from_fn<F>(dim: usize, f: F) -> Result<Self>
    where
        F: Fn(&[Dual]) -> Vec<Dual> + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        Ok(Self { dim, name: None, inner: Arc::new(ClosureImpl(Box::new(f))) })
    }

    /// Infers the dimension from a sample point; the closure must return a
    /// vector of the same length there.
    pub fn infer<F>(f: F, sample: &[f64]) -> Result<Self>
    where
        F: Fn(&[Dual]) -> Vec<Dual> + Send + Sync + 'static,
    {
        let field = Self::from_fn(sample.len(), f)?;
        field.eval(sample)?;
        Ok(field)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// `c·F`, sharing the underlying right-hand side.
    pub fn scaled(&self, factor: f64) -> VectorField {
        VectorField {
            dim: self.dim,
            name: self.name.clone(),
            inner: Arc::new(ScaledImpl { inner: self.inner.clone(), factor }),
        }
    }

    /// `−F`: the time-reversed flow.
    pub fn negated(&self) -> VectorField {
        self.scaled(-1.0)
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.dim {
            return Err(Error::InconsistentDimension { expected: self.dim, got });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(x, &mut out)?;
        Ok(out)
    }

    /// Evaluates into `out`; any non-finite component is an error.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_len(x.len())?;
        self.check_len(out.len())?;
        self.inner.real(x, out)?;
        match out.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        }
    }

    pub fn eval_dual_into(&self, x: &[Dual], out: &mut [Dual]) -> Result<()> {
        self.check_len(x.len())?;
        self.check_len(out.len())?;
        self.inner.dual(x, out)?;
        match out.iter().position(|v| !v.re.is_finite()) {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        }
    }
}
