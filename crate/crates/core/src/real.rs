//! Scalar abstraction shared by plain evaluation and forward-mode
//! differentiation.
//!
//! Every smooth field in the crate is written once against [`Real`] and then
//! evaluated either with `f64` (values) or with [`Dual`] (values plus the full
//! gradient in a single pass).

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Largest supported chart dimension.
pub const MAX_DIM: usize = 8;

pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn cst(v: f64) -> Self;
    fn value(&self) -> f64;

    /// Compose with a scalar function whose value and derivative at
    /// `self.value()` are `f` and `df`.
    fn chain(self, f: f64, df: f64) -> Self;

    fn sin(self) -> Self {
        let v = self.value();
        self.chain(v.sin(), v.cos())
    }
    fn cos(self) -> Self {
        let v = self.value();
        self.chain(v.cos(), -v.sin())
    }
    fn tan(self) -> Self {
        let v = self.value();
        let t = v.tan();
        self.chain(t, 1.0 + t * t)
    }
    fn exp(self) -> Self {
        let e = self.value().exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        let v = self.value();
        self.chain(v.ln(), 1.0 / v)
    }
    fn sqrt(self) -> Self {
        let s = self.value().sqrt();
        self.chain(s, 0.5 / s)
    }
    fn abs(self) -> Self {
        let v = self.value();
        let sign = if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.chain(v.abs(), sign)
    }
    fn powi(self, n: i32) -> Self {
        let v = self.value();
        let d = if n == 0 { 0.0 } else { n as f64 * v.powi(n - 1) };
        self.chain(v.powi(n), d)
    }
    fn powf(self, e: Self) -> Self {
        (e * self.ln()).exp()
    }
}

impl Real for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn chain(self, f: f64, _df: f64) -> Self {
        f
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    #[inline]
    fn powf(self, e: Self) -> Self {
        f64::powf(self, e)
    }
}

/// Forward-mode dual number carrying a gradient of up to [`MAX_DIM`] entries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: [f64; MAX_DIM],
}

impl Dual {
    pub fn variable(v: f64, index: usize) -> Self {
        let mut d = [0.0; MAX_DIM];
        d[index] = 1.0;
        Dual { v, d }
    }

    /// Seed a full point: coordinate `i` gets unit derivative in slot `i`.
    pub fn seed(p: &[f64]) -> Vec<Dual> {
        p.iter().enumerate().map(|(i, &v)| Dual::variable(v, i)).collect()
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline]
    fn add(mut self, o: Dual) -> Dual {
        self.v += o.v;
        for i in 0..MAX_DIM {
            self.d[i] += o.d[i];
        }
        self
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline]
    fn sub(mut self, o: Dual) -> Dual {
        self.v -= o.v;
        for i in 0..MAX_DIM {
            self.d[i] -= o.d[i];
        }
        self
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, o: Dual) -> Dual {
        let mut d = [0.0; MAX_DIM];
        for (i, di) in d.iter_mut().enumerate() {
            *di = self.d[i] * o.v + self.v * o.d[i];
        }
        Dual { v: self.v * o.v, d }
    }
}

impl Div for Dual {
    type Output = Dual;
    #[inline]
    fn div(self, o: Dual) -> Dual {
        let inv = 1.0 / o.v;
        let q = self.v * inv;
        let mut d = [0.0; MAX_DIM];
        for (i, di) in d.iter_mut().enumerate() {
            *di = (self.d[i] - q * o.d[i]) * inv;
        }
        Dual { v: q, d }
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline]
    fn neg(mut self) -> Dual {
        self.v = -self.v;
        for x in self.d.iter_mut() {
            *x = -*x;
        }
        self
    }
}

impl Real for Dual {
    #[inline]
    fn cst(v: f64) -> Self {
        Dual {
            v,
            d: [0.0; MAX_DIM],
        }
    }
    #[inline]
    fn value(&self) -> f64 {
        self.v
    }
    #[inline]
    fn chain(self, f: f64, df: f64) -> Self {
        let mut d = self.d;
        for x in d.iter_mut() {
            *x *= df;
        }
        Dual { v: f, d }
    }
}
