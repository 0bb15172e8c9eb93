//! Dense 2×2 complex matrices and 2-vectors.
//!
//! Everything in the spectral problem is 2×2, so a fixed-size value type is
//! both faster and clearer than a general matrix library here.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Row-major 2×2 complex matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[C64; 2]; 2]);

/// Column 2-vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vec2(pub [C64; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[ZERO, ZERO], [ZERO, ZERO]]);
    pub const IDENTITY: Mat2 = Mat2([[ONE, ZERO], [ZERO, ONE]]);

    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn diag(a: C64, d: C64) -> Self {
        Mat2([[a, ZERO], [ZERO, d]])
    }

    /// `σ₃` scaled by `s`.
    pub fn sigma3(s: C64) -> Self {
        Mat2::diag(s, -s)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[i][j]
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// Commutator `[self, other]`.
    pub fn commutator(&self, other: &Mat2) -> Self {
        *self * *other - *other * *self
    }

    /// Inverse of a matrix with unit determinant (adjugate only).
    pub fn unimodular_inverse(&self) -> Self {
        let m = &self.0;
        Mat2([[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]])
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.norm() == 0.0 {
            return None;
        }
        Some(self.unimodular_inverse().scale(d.inv()))
    }

    /// Max-abs entry norm.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, z| acc.max(z.norm()))
    }

    /// Exponential of a traceless matrix.
    ///
    /// For `tr Ω = 0` we have `Ω² = q² I` with `q² = -det Ω`, hence
    /// `exp Ω = cosh(q) I + sinh(q)/q Ω`. The result has unit determinant up
    /// to rounding.
    pub fn exp_traceless(&self) -> Self {
        let q2 = -self.det();
        let q = q2.sqrt();
        let (c, s_over_q) = if q.norm() < 1e-4 {
            // Taylor tails: cosh q = 1 + q²/2 + q⁴/24 + ..., sinh q / q = 1 + q²/6 + q⁴/120 + ...
            let q4 = q2 * q2;
            (
                ONE + q2 * 0.5 + q4 / 24.0 + q4 * q2 / 720.0,
                ONE + q2 / 6.0 + q4 / 120.0 + q4 * q2 / 5040.0,
            )
        } else {
            (q.cosh(), q.sinh() / q)
        };
        let m = &self.0;
        Mat2([
            [c + s_over_q * m[0][0], s_over_q * m[0][1]],
            [s_over_q * m[1][0], c + s_over_q * m[1][1]],
        ])
    }

    pub fn mul_vec(&self, v: &Vec2) -> Vec2 {
        let m = &self.0;
        Vec2([
            m[0][0] * v.0[0] + m[0][1] * v.0[1],
            m[1][0] * v.0[0] + m[1][1] * v.0[1],
        ])
    }

    /// Row vector times matrix, `r · self`.
    pub fn left_mul_row(&self, r: [C64; 2]) -> [C64; 2] {
        let m = &self.0;
        [
            r[0] * m[0][0] + r[1] * m[1][0],
            r[0] * m[0][1] + r[1] * m[1][1],
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, o: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

impl Add for Mat2 {
    type Output = Mat2;

    fn add(self, o: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl AddAssign for Mat2 {
    fn add_assign(&mut self, o: Mat2) {
        *self = *self + o;
    }
}

impl Sub for Mat2 {
    type Output = Mat2;

    fn sub(self, o: Mat2) -> Mat2 {
        self + (-o)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;

    fn neg(self) -> Mat2 {
        self.scale_re(-1.0)
    }
}

impl Vec2 {
    pub const E1: Vec2 = Vec2([ONE, ZERO]);
    pub const E2: Vec2 = Vec2([ZERO, ONE]);

    pub fn scale(&self, s: C64) -> Vec2 {
        Vec2([self.0[0] * s, self.0[1] * s])
    }

    pub fn norm(&self) -> f64 {
        (self.0[0].norm_sqr() + self.0[1].norm_sqr()).sqrt()
    }
}

/// Wronskian `det[f g] = f₁g₂ − f₂g₁`.
pub fn wronskian(f: &Vec2, g: &Vec2) -> C64 {
    f.0[0] * g.0[1] - f.0[1] * g.0[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taylor_exp(m: &Mat2) -> Mat2 {
        let mut term = Mat2::IDENTITY;
        let mut sum = Mat2::IDENTITY;
        for k in 1..40 {
            term = (term * *m).scale_re(1.0 / k as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn exp_matches_taylor_series() {
        let m = Mat2::new(
            C64::new(0.3, -0.7),
            C64::new(1.1, 0.2),
            C64::new(-0.4, 0.9),
            C64::new(-0.3, 0.7),
        );
        let diff = m.exp_traceless() - taylor_exp(&m);
        assert!(diff.max_abs() < 1e-13, "{diff:?}");
    }

    #[test]
    fn exp_small_argument_branch() {
        let m = Mat2::new(C64::new(1e-6, 0.0), C64::new(0.0, 2e-6), ZERO, C64::new(-1e-6, 0.0));
        let diff = m.exp_traceless() - taylor_exp(&m);
        assert!(diff.max_abs() < 1e-16);
    }

    #[test]
    fn exp_has_unit_determinant() {
        let m = Mat2::sigma3(C64::new(0.0, 4.0)) + Mat2::new(ZERO, C64::new(0.3, 0.1), C64::new(-0.2, 0.05), ZERO);
        let d = m.exp_traceless().det();
        assert!((d - ONE).norm() < 1e-14);
    }

    #[test]
    fn unimodular_inverse_roundtrip() {
        let m = Mat2::new(C64::new(0.2, 0.1), C64::new(1.0, -0.3), C64::new(0.5, 0.5), C64::new(-0.2, -0.1)).exp_traceless();
        let p = m * m.unimodular_inverse();
        assert!((p - Mat2::IDENTITY).max_abs() < 1e-14);
    }
}
