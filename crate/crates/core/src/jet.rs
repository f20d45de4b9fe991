//! Truncated bivariate Taylor polynomials of total degree 3.
//!
//! Evaluating the map on jets gives exact second and third partial
//! derivatives, including for compositions such as the second iterate.

use std::ops::{Add, Mul, Neg, Sub};

/// Monomial exponents `(i, j)` of `x^i y^j` in storage order.
const MONOMIALS: [(usize, usize); 10] = [
    (0, 0),
    (1, 0),
    (0, 1),
    (2, 0),
    (1, 1),
    (0, 2),
    (3, 0),
    (2, 1),
    (1, 2),
    (0, 3),
];

fn index(i: usize, j: usize) -> Option<usize> {
    MONOMIALS.iter().position(|&m| m == (i, j))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet3 {
    c: [f64; 10],
}

impl Jet3 {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; 10];
        c[0] = v;
        Self { c }
    }

    /// `value + xi_k`, the seed for coordinate `k` (0 or 1).
    pub fn variable(value: f64, k: usize) -> Self {
        let mut jet = Self::constant(value);
        jet.c[1 + k] = 1.0;
        jet
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Coefficient of `x^i y^j`.
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        index(i, j).map_or(0.0, |k| self.c[k])
    }

    /// Partial derivative `d^(i+j) / dx^i dy^j` at the expansion point.
    pub fn derivative(&self, i: usize, j: usize) -> f64 {
        self.coeff(i, j) * factorial(i) * factorial(j)
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.c.iter_mut().for_each(|v| *v *= s);
        self
    }

    /// `1 / self`; the constant term must be non-zero.
    pub fn recip(&self) -> Self {
        let c0 = self.c[0];
        // 1/(c0 + d) = (1/c0) (1 - e + e^2 - e^3), e = d / c0
        let mut e = *self;
        e.c[0] = 0.0;
        let e = e.scale(1.0 / c0);
        let e2 = e * e;
        let e3 = e2 * e;
        (Self::constant(1.0) - e + e2 - e3).scale(1.0 / c0)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

impl Add for Jet3 {
    type Output = Jet3;
    fn add(mut self, rhs: Jet3) -> Jet3 {
        self.c.iter_mut().zip(rhs.c).for_each(|(a, b)| *a += b);
        self
    }
}

impl Sub for Jet3 {
    type Output = Jet3;
    fn sub(mut self, rhs: Jet3) -> Jet3 {
        self.c.iter_mut().zip(rhs.c).for_each(|(a, b)| *a -= b);
        self
    }
}

impl Neg for Jet3 {
    type Output = Jet3;
    fn neg(self) -> Jet3 {
        self.scale(-1.0)
    }
}

impl Mul for Jet3 {
    type Output = Jet3;
    fn mul(self, rhs: Jet3) -> Jet3 {
        let mut out = [0.0; 10];
        for (ka, &(ia, ja)) in MONOMIALS.iter().enumerate() {
            if self.c[ka] == 0.0 {
                continue;
            }
            for (kb, &(ib, jb)) in MONOMIALS.iter().enumerate() {
                if let Some(k) = index(ia + ib, ja + jb) {
                    out[k] += self.c[ka] * rhs.c[kb];
                }
            }
        }
        Jet3 { c: out }
    }
}

impl Add<f64> for Jet3 {
    type Output = Jet3;
    fn add(mut self, rhs: f64) -> Jet3 {
        self.c[0] += rhs;
        self
    }
}

impl Mul<f64> for Jet3 {
    type Output = Jet3;
    fn mul(self, rhs: f64) -> Jet3 {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivatives() {
        // f = x^2 y + 3 x y^2 at (1, 2)
        let x = Jet3::variable(1.0, 0);
        let y = Jet3::variable(2.0, 1);
        let f = x * x * y + x * y * y * 3.0;
        assert_eq!(f.value(), 2.0 + 12.0);
        assert_eq!(f.derivative(1, 0), 2.0 * 2.0 + 3.0 * 4.0);
        assert_eq!(f.derivative(2, 0), 2.0 * 2.0);
        assert_eq!(f.derivative(1, 1), 2.0 + 12.0);
        assert_eq!(f.derivative(2, 1), 2.0);
        assert_eq!(f.derivative(1, 2), 6.0);
        assert_eq!(f.derivative(3, 0), 0.0);
    }

    #[test]
    fn reciprocal_matches_series() {
        // 1/(1 + x) at x = 0.5: derivatives -1/(1.5)^2, 2/(1.5)^3, -6/(1.5)^4
        let x = Jet3::variable(0.5, 0);
        let f = (x + 1.0).recip();
        assert!((f.value() - 1.0 / 1.5).abs() < 1e-15);
        assert!((f.derivative(1, 0) + 1.0 / 1.5f64.powi(2)).abs() < 1e-14);
        assert!((f.derivative(2, 0) - 2.0 / 1.5f64.powi(3)).abs() < 1e-14);
        assert!((f.derivative(3, 0) + 6.0 / 1.5f64.powi(4)).abs() < 1e-13);
    }
}
