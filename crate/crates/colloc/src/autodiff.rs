//! Forward-mode automatic differentiation scalars.
//!
//! All problem functions (dynamics, path constraints, costs, leader
//! kinematics) are written generically over [`Scalar`], so the same code
//! evaluates plain values, first derivatives ([`Dual`], one seed direction)
//! and mixed second derivatives ([`Dual2`], a seed pair). The transcription
//! drives one seed per Jacobian column and one seed pair per declared
//! Hessian entry; blocks are small, so the repeated evaluations stay cheap.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Copy
    + Clone
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Lift a constant.
    fn cst(v: f64) -> Self;
    fn value(self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;
    /// Four-quadrant arctangent; `self` is the y argument.
    fn atan2(self, x: Self) -> Self;

    fn scale(self, k: f64) -> Self {
        self * Self::cst(k)
    }
    fn shift(self, k: f64) -> Self {
        self + Self::cst(k)
    }
    fn sq(self) -> Self {
        self * self
    }
    fn powi(self, n: u32) -> Self {
        let mut acc = Self::cst(1.0);
        for _ in 0..n {
            acc = acc * self;
        }
        acc
    }
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn value(self) -> f64 {
        self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
}

/// First-order dual number: value and one directional derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    pub fn seed(v: f64) -> Dual {
        Dual { v, d: 1.0 }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual {
            v: self.v + o.v,
            d: self.d + o.d,
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            d: self.d - o.d,
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            d: self.v * o.d + self.d * o.v,
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let v = self.v / o.v;
        Dual {
            v,
            d: (self.d - v * o.d) / o.v,
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual {
            v: -self.v,
            d: -self.d,
        }
    }
}

impl Scalar for Dual {
    fn cst(v: f64) -> Self {
        Dual { v, d: 0.0 }
    }
    fn value(self) -> f64 {
        self.v
    }
    fn sin(self) -> Self {
        Dual {
            v: self.v.sin(),
            d: self.v.cos() * self.d,
        }
    }
    fn cos(self) -> Self {
        Dual {
            v: self.v.cos(),
            d: -self.v.sin() * self.d,
        }
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        Dual {
            v: s,
            d: self.d / (2.0 * s),
        }
    }
    fn atan2(self, x: Self) -> Self {
        let r2 = x.v * x.v + self.v * self.v;
        Dual {
            v: self.v.atan2(x.v),
            d: (x.v * self.d - self.v * x.d) / r2,
        }
    }
}

/// Second-order dual for one seed pair `(a, b)`: carries the value, the two
/// directional derivatives and the mixed derivative `d^2/da db`. Seeding the
/// same variable in both slots yields the diagonal second derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual2 {
    pub v: f64,
    pub da: f64,
    pub db: f64,
    pub dab: f64,
}

impl Dual2 {
    pub fn seed(v: f64, da: f64, db: f64) -> Dual2 {
        Dual2 {
            v,
            da,
            db,
            dab: 0.0,
        }
    }

    /// Apply a smooth unary function given its first two derivatives at `v`.
    fn lift(self, f: f64, fp: f64, fpp: f64) -> Dual2 {
        Dual2 {
            v: f,
            da: fp * self.da,
            db: fp * self.db,
            dab: fpp * self.da * self.db + fp * self.dab,
        }
    }
}

impl Add for Dual2 {
    type Output = Dual2;
    fn add(self, o: Dual2) -> Dual2 {
        Dual2 {
            v: self.v + o.v,
            da: self.da + o.da,
            db: self.db + o.db,
            dab: self.dab + o.dab,
        }
    }
}

impl Sub for Dual2 {
    type Output = Dual2;
    fn sub(self, o: Dual2) -> Dual2 {
        Dual2 {
            v: self.v - o.v,
            da: self.da - o.da,
            db: self.db - o.db,
            dab: self.dab - o.dab,
        }
    }
}

impl Mul for Dual2 {
    type Output = Dual2;
    fn mul(self, o: Dual2) -> Dual2 {
        Dual2 {
            v: self.v * o.v,
            da: self.da * o.v + self.v * o.da,
            db: self.db * o.v + self.v * o.db,
            dab: self.dab * o.v + self.da * o.db + self.db * o.da + self.v * o.dab,
        }
    }
}

impl Div for Dual2 {
    type Output = Dual2;
    fn div(self, o: Dual2) -> Dual2 {
        let w = o.v;
        let recip = o.lift(1.0 / w, -1.0 / (w * w), 2.0 / (w * w * w));
        self * recip
    }
}

impl Neg for Dual2 {
    type Output = Dual2;
    fn neg(self) -> Dual2 {
        Dual2 {
            v: -self.v,
            da: -self.da,
            db: -self.db,
            dab: -self.dab,
        }
    }
}

impl Scalar for Dual2 {
    fn cst(v: f64) -> Self {
        Dual2 {
            v,
            da: 0.0,
            db: 0.0,
            dab: 0.0,
        }
    }
    fn value(self) -> f64 {
        self.v
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.lift(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.lift(c, -s, -c)
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.lift(s, 0.5 / s, -0.25 / (s * s * s))
    }
    fn atan2(self, x: Self) -> Self {
        let (y, u) = (self, x);
        let r2 = u.v * u.v + y.v * y.v;
        let r4 = r2 * r2;
        let hy = u.v / r2;
        let hx = -y.v / r2;
        let hyy = -2.0 * u.v * y.v / r4;
        let hyx = (y.v * y.v - u.v * u.v) / r4;
        let hxx = 2.0 * u.v * y.v / r4;
        Dual2 {
            v: y.v.atan2(u.v),
            da: hy * y.da + hx * u.da,
            db: hy * y.db + hx * u.db,
            dab: hyy * y.da * y.db
                + hyx * (y.da * u.db + y.db * u.da)
                + hxx * u.da * u.db
                + hy * y.dab
                + hx * u.dab,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f<T: Scalar>(x: T, y: T) -> T {
        // Mix of every primitive: x*sin(y) + sqrt(x*x + y*y) + atan2(y, x) - x/y
        x * y.sin() + (x.sq() + y.sq()).sqrt() + y.atan2(x) - x / y
    }

    #[test]
    fn dual_matches_finite_differences() {
        let (x0, y0) = (1.3, 0.7);
        let h = 1e-7;
        let fd_x = (f(x0 + h, y0) - f(x0 - h, y0)) / (2.0 * h);
        let fd_y = (f(x0, y0 + h) - f(x0, y0 - h)) / (2.0 * h);
        let dx = f(Dual::seed(x0), Dual::cst(y0));
        let dy = f(Dual::cst(x0), Dual::seed(y0));
        assert!((dx.d - fd_x).abs() < 1e-6, "{} vs {}", dx.d, fd_x);
        assert!((dy.d - fd_y).abs() < 1e-6, "{} vs {}", dy.d, fd_y);
        assert!((dx.v - f(x0, y0)).abs() < 1e-14);
    }

    #[test]
    fn dual2_matches_finite_difference_hessian() {
        let (x0, y0) = (1.3, 0.7);
        let h = 1e-5;
        // d2f/dxdy by central differences of the dual gradient.
        let gx = |x: f64, y: f64| f(Dual::seed(x), Dual::cst(y)).d;
        let fd_xy = (gx(x0, y0 + h) - gx(x0, y0 - h)) / (2.0 * h);
        let fd_xx = (gx(x0 + h, y0) - gx(x0 - h, y0)) / (2.0 * h);
        let d_xy = f(Dual2::seed(x0, 1.0, 0.0), Dual2::seed(y0, 0.0, 1.0));
        let d_xx = f(Dual2::seed(x0, 1.0, 1.0), Dual2::cst(y0));
        assert!((d_xy.dab - fd_xy).abs() < 1e-8, "{} vs {}", d_xy.dab, fd_xy);
        assert!((d_xx.dab - fd_xx).abs() < 1e-8, "{} vs {}", d_xx.dab, fd_xx);
    }
}
