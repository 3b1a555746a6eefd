//! Stack-allocated complex matrices of size at most 3x3.
//!
//! Pointwise algebra on bundle-valued fields (curvature commutators, `φφ*`,
//! gauge conjugation) runs over every grid point; keeping the matrices on the
//! stack avoids an allocation per point.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::scalar::Real;

pub const MAX_DIM: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallMat<T> {
    pub rows: usize,
    pub cols: usize,
    d: [Complex<T>; MAX_DIM * MAX_DIM],
}

impl<T: Real> SmallMat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        debug_assert!(rows <= MAX_DIM && cols <= MAX_DIM);
        Self { rows, cols, d: [Complex::zero(); MAX_DIM * MAX_DIM] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, Complex::one())
    }

    pub fn scalar(n: usize, z: Complex<T>) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, z);
        }
        m
    }

    pub fn from_slice(rows: usize, cols: usize, s: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(rows, cols);
        m.d[..rows * cols].copy_from_slice(&s[..rows * cols]);
        m
    }

    pub fn write_to(&self, out: &mut [Complex<T>]) {
        out[..self.rows * self.cols].copy_from_slice(&self.d[..self.rows * self.cols]);
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.d[..self.rows * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.d[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, z: Complex<T>) {
        self.d[i * self.cols + j] = z;
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.set(j, i, self.get(i, j).conj());
            }
        }
        m
    }

    pub fn scale(&self, z: Complex<T>) -> Self {
        let mut m = *self;
        for v in m.d[..self.rows * self.cols].iter_mut() {
            *v = *v * z;
        }
        m
    }

    pub fn scale_re(&self, x: T) -> Self {
        self.scale(Complex::new(x, T::zero()))
    }

    /// Frobenius norm squared, `tr(X X*)`.
    pub fn fro_sq(&self) -> T {
        self.as_slice().iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.rows.min(self.cols)).fold(Complex::zero(), |acc, i| acc + self.get(i, i))
    }

    /// `Re tr(self · other*)`, the real inner product on matrices.
    pub fn inner(&self, other: &Self) -> T {
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .fold(T::zero(), |acc, (a, b)| acc + (a * b.conj()).re)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    /// Skew-hermitian part `(X - X*)/2`.
    pub fn skew_part(&self) -> Self {
        (*self - self.adjoint()).scale_re(T::lit(0.5))
    }

    /// Matrix exponential by scaling and squaring with a Taylor kernel.
    pub fn expm(&self) -> Self {
        assert_eq!(self.rows, self.cols, "expm needs a square matrix");
        let n = self.rows;
        let norm = self.fro_sq().sqrt().as_f64();
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
        let a = self.scale_re(T::lit(0.5f64.powi(squarings)));
        let mut term = Self::identity(n);
        let mut sum = Self::identity(n);
        for k in 1..=18 {
            term = (term * a).scale_re(T::one() / T::from_usize_lossy(k));
            sum = sum + term;
        }
        for _ in 0..squarings {
            sum = sum * sum;
        }
        sum
    }

    /// Distance of `self·self*` from the identity (Frobenius).
    pub fn unitarity_defect(&self) -> T {
        (*self * self.adjoint() - Self::identity(self.rows)).fro_sq().sqrt()
    }

    /// Inverse of a unitary matrix.
    pub fn unitary_inverse(&self) -> Self {
        self.adjoint()
    }
}

impl<T: Real> Add for SmallMat<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        let mut m = self;
        for (a, b) in m.d.iter_mut().zip(o.d.iter()) {
            *a = *a + *b;
        }
        m
    }
}

impl<T: Real> Sub for SmallMat<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        let mut m = self;
        for (a, b) in m.d.iter_mut().zip(o.d.iter()) {
            *a = *a - *b;
        }
        m
    }
}

impl<T: Real> Neg for SmallMat<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale_re(-T::one())
    }
}

impl<T: Real> Mul for SmallMat<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        debug_assert_eq!(self.cols, o.rows);
        let mut m = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for j in 0..o.cols {
                let mut acc = Complex::zero();
                for k in 0..self.cols {
                    acc = acc + self.get(i, k) * o.get(k, j);
                }
                m.set(i, j, acc);
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = SmallMat<f64>;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn expm_of_diagonal_phase() {
        let mut x = M::zeros(2, 2);
        x.set(0, 0, c(0.0, 1.3));
        x.set(1, 1, c(0.0, -0.4));
        let e = x.expm();
        assert!((e.get(0, 0) - c(0.0, 1.3).exp()).norm() < 1e-14);
        assert!((e.get(1, 1) - c(0.0, -0.4).exp()).norm() < 1e-14);
        assert!(e.get(0, 1).norm() < 1e-15);
    }

    #[test]
    fn expm_of_skew_hermitian_is_unitary() {
        let mut x = M::zeros(3, 3);
        x.set(0, 1, c(0.7, -2.0));
        x.set(1, 0, c(-0.7, -2.0));
        x.set(2, 2, c(0.0, 3.1));
        x.set(0, 2, c(1.5, 0.2));
        x.set(2, 0, c(-1.5, 0.2));
        assert!(x.expm().unitarity_defect() < 1e-13);
    }

    #[test]
    fn adjoint_and_product_rules() {
        let a = M::from_slice(2, 3, &[c(1., 2.), c(0., 1.), c(3., 0.), c(-1., 0.), c(2., -2.), c(0.5, 0.5)]);
        let b = M::from_slice(3, 1, &[c(1., 0.), c(0., -1.), c(2., 1.)]);
        let lhs = (a * b).adjoint();
        let rhs = b.adjoint() * a.adjoint();
        assert!((lhs - rhs).fro_sq() < 1e-28);
        assert!(((a * a.adjoint()).trace().re - a.fro_sq()).abs() < 1e-13);
    }
}
