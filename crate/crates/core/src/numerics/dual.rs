use core::ops::{Add, Div, Mul, Neg, Sub};

/// Real-valued scalar that vector fields are written against.
///
/// Implemented for `f64` (plain evaluation) and [`Dual`] (one directional
/// derivative carried alongside the value).
pub trait Scalar:
    Copy
    + Send
    + Sync
    + 'static
    + From<f64>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn value(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tan(self) -> Self;
    fn tanh(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, e: Self) -> Self;
    fn min(self, other: Self) -> Self;
    fn max(self, other: Self) -> Self;
}

fn powi_f64(x: f64, n: i32) -> f64 {
    let mut base = if n < 0 { 1.0 / x } else { x };
    let mut k = n.unsigned_abs();
    let mut acc = 1.0;
    while k > 0 {
        if k & 1 == 1 {
            acc *= base;
        }
        base *= base;
        k >>= 1;
    }
    acc
}

impl Scalar for f64 {
    #[inline]
    fn value(self) -> f64 {
        self
    }
    fn exp(self) -> Self {
        libm::exp(self)
    }
    fn ln(self) -> Self {
        libm::log(self)
    }
    fn sin(self) -> Self {
        libm::sin(self)
    }
    fn cos(self) -> Self {
        libm::cos(self)
    }
    fn tan(self) -> Self {
        libm::tan(self)
    }
    fn tanh(self) -> Self {
        libm::tanh(self)
    }
    fn sqrt(self) -> Self {
        libm::sqrt(self)
    }
    fn abs(self) -> Self {
        libm::fabs(self)
    }
    fn powi(self, n: i32) -> Self {
        powi_f64(self, n)
    }
    fn powf(self, e: Self) -> Self {
        libm::pow(self, e)
    }
    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

/// Dual number `re + eps·ε` with `ε² = 0`.
///
/// Seeding `eps = 1` on input `j` and evaluating a function yields
/// `∂f/∂x_j` in the `eps` slot of every output.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dual {
    pub re: f64,
    pub eps: f64,
}

impl Dual {
    pub const fn new(re: f64, eps: f64) -> Self {
        Self { re, eps }
    }

    pub const fn constant(re: f64) -> Self {
        Self { re, eps: 0.0 }
    }

    pub const fn variable(re: f64) -> Self {
        Self { re, eps: 1.0 }
    }

    #[inline]
    fn chain(self, re: f64, deriv: f64) -> Self {
        // a zero seed stays zero even where the derivative is unbounded
        let eps = if self.eps == 0.0 { 0.0 } else { deriv * self.eps };
        Self { re, eps }
    }
}

impl From<f64> for Dual {
    fn from(re: f64) -> Self {
        Self::constant(re)
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline]
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline]
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl Div for Dual {
    type Output = Dual;
    #[inline]
    fn div(self, o: Dual) -> Dual {
        let q = self.re / o.re;
        Dual::new(q, (self.eps - q * o.eps) / o.re)
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline]
    fn neg(self) -> Dual {
        Dual::new(-self.re, -self.eps)
    }
}

impl Add<f64> for Dual {
    type Output = Dual;
    #[inline]
    fn add(self, o: f64) -> Dual {
        Dual::new(self.re + o, self.eps)
    }
}

impl Sub<f64> for Dual {
    type Output = Dual;
    #[inline]
    fn sub(self, o: f64) -> Dual {
        Dual::new(self.re - o, self.eps)
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, o: f64) -> Dual {
        Dual::new(self.re * o, self.eps * o)
    }
}

impl Div<f64> for Dual {
    type Output = Dual;
    #[inline]
    fn div(self, o: f64) -> Dual {
        Dual::new(self.re / o, self.eps / o)
    }
}

impl Add<Dual> for f64 {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        o + self
    }
}

impl Sub<Dual> for f64 {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self - o.re, -o.eps)
    }
}

impl Mul<Dual> for f64 {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        o * self
    }
}

impl Div<Dual> for f64 {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        Dual::constant(self) / o
    }
}

impl Scalar for Dual {
    #[inline]
    fn value(self) -> f64 {
        self.re
    }
    fn exp(self) -> Self {
        let e = libm::exp(self.re);
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(libm::log(self.re), 1.0 / self.re)
    }
    fn sin(self) -> Self {
        self.chain(libm::sin(self.re), libm::cos(self.re))
    }
    fn cos(self) -> Self {
        self.chain(libm::cos(self.re), -libm::sin(self.re))
    }
    fn tan(self) -> Self {
        let t = libm::tan(self.re);
        self.chain(t, 1.0 + t * t)
    }
    fn tanh(self) -> Self {
        let t = libm::tanh(self.re);
        self.chain(t, 1.0 - t * t)
    }
    fn sqrt(self) -> Self {
        let s = libm::sqrt(self.re);
        self.chain(s, 0.5 / s)
    }
    fn abs(self) -> Self {
        let sign = if self.re > 0.0 {
            1.0
        } else if self.re < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.chain(libm::fabs(self.re), sign)
    }
    fn powi(self, n: i32) -> Self {
        match n {
            0 => Dual::constant(1.0),
            1 => self,
            _ => self.chain(powi_f64(self.re, n), n as f64 * powi_f64(self.re, n - 1)),
        }
    }
    fn powf(self, e: Self) -> Self {
        let p = libm::pow(self.re, e.re);
        // constant exponent: avoid ln(base) so that non-positive bases stay finite
        let de = if e.eps == 0.0 { 0.0 } else { p * libm::log(self.re) * e.eps };
        let db = if self.eps == 0.0 {
            0.0
        } else {
            e.re * libm::pow(self.re, e.re - 1.0) * self.eps
        };
        Dual::new(p, de + db)
    }
    fn min(self, other: Self) -> Self {
        if other.re < self.re {
            other
        } else {
            self
        }
    }
    fn max(self, other: Self) -> Self {
        if other.re > self.re {
            other
        } else {
            self
        }
    }
}
