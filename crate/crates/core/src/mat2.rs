//! Dense 2×2 complex matrices.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

pub type C64 = Complex64;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

#[cfg(test)]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub fn new(m11: C64, m12: C64, m21: C64, m22: C64) -> Self {
        Mat2([[m11, m12], [m21, m22]])
    }

    pub fn from_real(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Self::new(m11.into(), m12.into(), m21.into(), m22.into())
    }

    pub fn zero() -> Self {
        Self::scalar(C64::new(0.0, 0.0))
    }

    pub fn identity() -> Self {
        Self::scalar(C64::new(1.0, 0.0))
    }

    pub fn scalar(s: C64) -> Self {
        let z = C64::new(0.0, 0.0);
        Self::new(s, z, z, s)
    }

    pub fn diag(d1: C64, d2: C64) -> Self {
        let z = C64::new(0.0, 0.0);
        Self::new(d1, z, z, d2)
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
        Self::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn conj(&self) -> Self {
        let m = &self.0;
        Self::new(m[0][0].conj(), m[0][1].conj(), m[1][0].conj(), m[1][1].conj())
    }

    /// Conjugation by the coordinate swap: diagonal entries are exchanged,
    /// and so are the off-diagonal ones.
    pub fn swap_tt(&self) -> Self {
        let m = &self.0;
        Self::new(m[1][1], m[1][0], m[0][1], m[0][0])
    }

    pub fn frobenius(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// The traceless part `X - (tr X / 2) Id`.
    pub fn traceless_part(&self) -> Self {
        *self - Self::scalar(self.trace() * 0.5)
    }

    /// Membership in `C·Id` up to `tol·(1 + ‖X‖_F)`.
    pub fn is_scalar_within(&self, tol: f64) -> bool {
        self.traceless_part().frobenius() <= tol * (1.0 + self.frobenius())
    }

    pub fn row(&self, i: usize) -> [C64; 2] {
        self.0[i]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.is_finite())
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2::new(a[0][0] + b[0][0], a[0][1] + b[0][1], a[1][0] + b[1][0], a[1][1] + b[1][1])
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
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl Mul<C64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: C64) -> Mat2 {
        self.scale(s)
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: f64) -> Mat2 {
        self.scale(C64::new(s, 0.0))
    }
}
