//! 2×2 matrices with the cofactor convention
//!
//! ```text
//! cof [[a11, a12], [a21, a22]] = [[a22, -a21], [-a12, a11]]
//! ```
//!
//! so that `A (cof A)ᵀ = det A · I` and `det(A + B) = det A + cof A · B + det B`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2::new(0.0, 0.0, 0.0, 0.0);
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2 { a11, a12, a21, a22 }
    }

    pub fn from_rows(rows: [[f64; 2]; 2]) -> Self {
        Mat2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1])
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn cof(&self) -> Mat2 {
        Mat2::new(self.a22, -self.a21, -self.a12, self.a11)
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &Mat2) -> f64 {
        self.a11 * other.a11 + self.a12 * other.a12 + self.a21 * other.a21 + self.a22 * other.a22
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.a11, self.a21, self.a12, self.a22)
    }

    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.a11 * v[0] + self.a12 * v[1],
            self.a21 * v[0] + self.a22 * v[1],
        ]
    }

    pub fn matmul(&self, b: &Mat2) -> Mat2 {
        Mat2::new(
            self.a11 * b.a11 + self.a12 * b.a21,
            self.a11 * b.a12 + self.a12 * b.a22,
            self.a21 * b.a11 + self.a22 * b.a21,
            self.a21 * b.a12 + self.a22 * b.a22,
        )
    }

    /// Inverse, or `None` when `|det| < 1e-300`.
    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d.abs() < 1e-300 {
            return None;
        }
        Some(self.cof().transpose() * (1.0 / d))
    }

    pub fn is_finite(&self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a21.is_finite() && self.a22.is_finite()
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.a11, self.a12, self.a21, self.a22]
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, b: Mat2) -> Mat2 {
        Mat2::new(self.a11 + b.a11, self.a12 + b.a12, self.a21 + b.a21, self.a22 + b.a22)
    }
}

impl AddAssign for Mat2 {
    fn add_assign(&mut self, b: Mat2) {
        *self = *self + b;
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, b: Mat2) -> Mat2 {
        Mat2::new(self.a11 - b.a11, self.a12 - b.a12, self.a21 - b.a21, self.a22 - b.a22)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self * -1.0
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: f64) -> Mat2 {
        Mat2::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_cofactor_example() {
        let a = Mat2::from_rows([[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(a.cof(), Mat2::from_rows([[4.0, -3.0], [-2.0, 1.0]]));
        assert_eq!(a.cof().cof(), a);
        assert_eq!(Mat2::IDENTITY.cof(), Mat2::IDENTITY);
    }

    #[test]
    fn det_and_dot() {
        assert_eq!(Mat2::IDENTITY.det(), 1.0);
        assert_eq!(Mat2::IDENTITY.dot(&Mat2::IDENTITY), 2.0);
        let a = Mat2::from_rows([[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(a.det(), -2.0);
        let prod = a.matmul(&a.cof().transpose());
        assert_eq!(prod, Mat2::IDENTITY * a.det());
    }

    #[test]
    fn inverse_roundtrip() {
        let a = Mat2::from_rows([[2.0, 1.0], [0.5, 3.0]]);
        let inv = a.inverse().unwrap();
        let p = a.matmul(&inv);
        assert!((p - Mat2::IDENTITY).norm() < 1e-14);
        assert!(Mat2::ZERO.inverse().is_none());
    }
}
