use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use crate::algebra::Scalar;

/// Hyper-dual number a + b ε₁ + c ε₂ + d ε₁ε₂ with ε₁² = ε₂² = 0. Seeding ε₁
/// and ε₂ along two coordinates yields exact first and mixed second
/// derivatives.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HyperDual {
    pub re: f64,
    pub e1: f64,
    pub e2: f64,
    pub e12: f64,
}

impl HyperDual {
    pub const fn new(re: f64, e1: f64, e2: f64, e12: f64) -> Self {
        HyperDual { re, e1, e2, e12 }
    }

    /// Applies a scalar function given its value and first two derivatives at
    /// `self.re`.
    fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        HyperDual {
            re: f,
            e1: df * self.e1,
            e2: df * self.e2,
            e12: df * self.e12 + d2f * self.e1 * self.e2,
        }
    }

    pub fn recip(self) -> Self {
        let inv = 1.0 / self.re;
        self.chain(inv, -inv * inv, 2.0 * inv * inv * inv)
    }
}

impl Add for HyperDual {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        HyperDual::new(self.re + o.re, self.e1 + o.e1, self.e2 + o.e2, self.e12 + o.e12)
    }
}

impl Sub for HyperDual {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        HyperDual::new(self.re - o.re, self.e1 - o.e1, self.e2 - o.e2, self.e12 - o.e12)
    }
}

impl Mul for HyperDual {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        HyperDual::new(
            self.re * o.re,
            self.re * o.e1 + self.e1 * o.re,
            self.re * o.e2 + self.e2 * o.re,
            self.re * o.e12 + self.e1 * o.e2 + self.e2 * o.e1 + self.e12 * o.re,
        )
    }
}

impl Div for HyperDual {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl Neg for HyperDual {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        HyperDual::new(-self.re, -self.e1, -self.e2, -self.e12)
    }
}

impl AddAssign for HyperDual {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl SubAssign for HyperDual {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl Scalar for HyperDual {
    fn from_f64(v: f64) -> Self {
        HyperDual::new(v, 0.0, 0.0, 0.0)
    }

    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * s * s))
    }

    fn re(self) -> f64 {
        self.re
    }

    fn scale(self, k: f64) -> Self {
        HyperDual::new(self.re * k, self.e1 * k, self.e2 * k, self.e12 * k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_derivative_of_product_and_quotient() {
        // f(x, y) = x y / (x + y²) at (1.5, 0.5)
        let x = HyperDual::new(1.5, 1.0, 0.0, 0.0);
        let y = HyperDual::new(0.5, 0.0, 1.0, 0.0);
        let f = x * y / (x + y * y);
        let (xv, yv) = (1.5f64, 0.5f64);
        let d = xv + yv * yv;
        assert!((f.re - xv * yv / d).abs() < 1e-15);
        assert!((f.e1 - yv.powi(3) / (d * d)).abs() < 1e-14);
        assert!((f.e2 - xv * (xv - yv * yv) / (d * d)).abs() < 1e-14);
        let fxy = (3.0 * yv * yv * d - 4.0 * yv.powi(4)) / d.powi(3);
        assert!((f.e12 - fxy).abs() < 1e-13, "{} vs {}", f.e12, fxy);
    }

    #[test]
    fn second_derivative_of_sqrt() {
        let x = HyperDual::new(2.0, 1.0, 1.0, 0.0);
        let s = x.sqrt();
        assert!((s.e1 - 0.5 / 2f64.sqrt()).abs() < 1e-15);
        assert!((s.e12 + 0.25 * 2f64.powf(-1.5)).abs() < 1e-15);
    }
}
