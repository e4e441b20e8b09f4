//! Second-order forward-mode differentiation over a fixed number of variables.
//!
//! A [`Jet`] carries a value together with its gradient and Hessian with respect
//! to `N` independent variables. Arithmetic propagates all three exactly, so a
//! function written once against [`Scalar`] yields its value (with `f64`) or its
//! value, first and second derivatives (with `Jet<N>`).

use std::ops::{Add, Mul, Neg, Sub};

/// Arithmetic needed to evaluate radial functions generically.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn constant(v: f64) -> Self;
    fn value(&self) -> f64;
    fn scale(self, s: f64) -> Self;
    /// Applies a scalar function given its value and first two derivatives at `self.value()`.
    fn chain(self, f: f64, df: f64, d2f: f64) -> Self;

    fn sin(self) -> Self {
        let v = self.value();
        self.chain(v.sin(), v.cos(), -v.sin())
    }

    fn cos(self) -> Self {
        let v = self.value();
        self.chain(v.cos(), -v.sin(), -v.cos())
    }

    fn powi(self, k: u32) -> Self {
        let mut acc = Self::constant(1.0);
        for _ in 0..k {
            acc = acc * self;
        }
        acc
    }
}

impl Scalar for f64 {
    fn constant(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn chain(self, f: f64, _df: f64, _d2f: f64) -> Self {
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<const N: usize> {
    pub v: f64,
    pub g: [f64; N],
    pub h: [[f64; N]; N],
}

impl<const N: usize> Jet<N> {
    pub fn constant(v: f64) -> Self {
        Self {
            v,
            g: [0.0; N],
            h: [[0.0; N]; N],
        }
    }

    /// The `i`-th independent variable, evaluated at `v`.
    pub fn variable(i: usize, v: f64) -> Self {
        let mut j = Self::constant(v);
        j.g[i] = 1.0;
        j
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        for a in 0..N {
            self.g[a] += o.g[a];
            for b in 0..N {
                self.h[a][b] += o.h[a][b];
            }
        }
        self
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    fn sub(mut self, o: Self) -> Self {
        self.v -= o.v;
        for a in 0..N {
            self.g[a] -= o.g[a];
            for b in 0..N {
                self.h[a][b] -= o.h[a][b];
            }
        }
        self
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut out = Self::constant(self.v * o.v);
        for a in 0..N {
            out.g[a] = self.g[a] * o.v + self.v * o.g[a];
            for b in 0..N {
                out.h[a][b] = self.h[a][b] * o.v
                    + self.g[a] * o.g[b]
                    + self.g[b] * o.g[a]
                    + self.v * o.h[a][b];
            }
        }
        out
    }
}

impl<const N: usize> Scalar for Jet<N> {
    fn constant(v: f64) -> Self {
        Jet::constant(v)
    }

    fn value(&self) -> f64 {
        self.v
    }

    fn scale(mut self, s: f64) -> Self {
        self.v *= s;
        for a in 0..N {
            self.g[a] *= s;
            for b in 0..N {
                self.h[a][b] *= s;
            }
        }
        self
    }

    fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        let mut out = Self::constant(f);
        for a in 0..N {
            out.g[a] = df * self.g[a];
            for b in 0..N {
                out.h[a][b] = d2f * self.g[a] * self.g[b] + df * self.h[a][b];
            }
        }
        out
    }
}
