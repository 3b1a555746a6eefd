//! Matrix-valued grid fields and differential forms built from them.
//!
//! A [`Field`] stores a `rows x cols` complex matrix at every grid point,
//! point-major: entry `(i, j)` at point `p` lives at `data[p*rows*cols + i*cols + j]`.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::SmallMat;
use crate::scalar::{pairwise_sum_by, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    pub rows: usize,
    pub cols: usize,
    pub npts: usize,
    pub data: Vec<Complex<T>>,
}

/// Scalar grid function (a 1x1 field).
pub type GridScalar<T> = Field<T>;

impl<T: Real> Field<T> {
    pub fn zeros(npts: usize, rows: usize, cols: usize) -> Self {
        Self { rows, cols, npts, data: vec![Complex::zero(); npts * rows * cols] }
    }

    pub fn constant(npts: usize, m: SmallMat<T>) -> Self {
        let mut f = Self::zeros(npts, m.rows, m.cols);
        for p in 0..npts {
            f.set(p, &m);
        }
        f
    }

    pub fn from_real(values: &[T]) -> Self {
        Self {
            rows: 1,
            cols: 1,
            npts: values.len(),
            data: values.iter().map(|&x| Complex::new(x, T::zero())).collect(),
        }
    }

    pub fn from_fn(npts: usize, rows: usize, cols: usize, f: impl Fn(usize) -> SmallMat<T>) -> Self {
        let mut out = Self::zeros(npts, rows, cols);
        for p in 0..npts {
            out.set(p, &f(p));
        }
        out
    }

    #[inline]
    pub fn ncomp(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    pub fn at(&self, p: usize) -> SmallMat<T> {
        let n = self.ncomp();
        SmallMat::from_slice(self.rows, self.cols, &self.data[p * n..(p + 1) * n])
    }

    #[inline]
    pub fn set(&mut self, p: usize, m: &SmallMat<T>) {
        let n = self.ncomp();
        m.write_to(&mut self.data[p * n..(p + 1) * n]);
    }

    /// Value of a scalar field at `p`.
    #[inline]
    pub fn scalar_at(&self, p: usize) -> Complex<T> {
        self.data[p * self.ncomp()]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.npts == other.npts
    }

    pub fn check_shape(&self, rows: usize, cols: usize, npts: usize, what: &str) -> Result<()> {
        if self.rows != rows || self.cols != cols || self.npts != npts {
            return Err(Error::ShapeMismatch(format!(
                "{what}: expected {rows}x{cols} on {npts} points, found {}x{} on {}",
                self.rows, self.cols, self.npts
            )));
        }
        Ok(())
    }

    pub fn map(&self, rows: usize, cols: usize, f: impl Fn(usize, SmallMat<T>) -> SmallMat<T>) -> Self {
        Self::from_fn(self.npts, rows, cols, |p| f(p, self.at(p)))
    }

    pub fn add(&self, o: &Self) -> Self {
        debug_assert!(self.same_shape(o));
        let mut out = self.clone();
        out.data.iter_mut().zip(&o.data).for_each(|(a, b)| *a = *a + *b);
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        debug_assert!(self.same_shape(o));
        let mut out = self.clone();
        out.data.iter_mut().zip(&o.data).for_each(|(a, b)| *a = *a - *b);
        out
    }

    pub fn scale(&self, z: Complex<T>) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|a| *a = *a * z);
        out
    }

    pub fn scale_re(&self, x: T) -> Self {
        self.scale(Complex::new(x, T::zero()))
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: T, other: &Self) {
        debug_assert!(self.same_shape(other));
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a = *a + *b * alpha);
    }

    /// Pointwise multiplication by a complex scalar function.
    pub fn mul_scalar_field(&self, s: &Field<T>) -> Self {
        let n = self.ncomp();
        let mut out = self.clone();
        for p in 0..self.npts {
            let z = s.scalar_at(p);
            out.data[p * n..(p + 1) * n].iter_mut().for_each(|a| *a = *a * z);
        }
        out
    }

    /// Pointwise Frobenius norm squared.
    pub fn pointwise_fro_sq(&self, p: usize) -> T {
        let n = self.ncomp();
        self.data[p * n..(p + 1) * n].iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    /// Largest pointwise Frobenius norm.
    pub fn sup_norm(&self) -> T {
        (0..self.npts).fold(T::zero(), |acc, p| acc.max(self.pointwise_fro_sq(p).sqrt()))
    }

    /// Plain sum over grid points of `Re tr(self · other*)`, deterministic order.
    pub fn dot(&self, other: &Self) -> T {
        debug_assert!(self.same_shape(other));
        pairwise_sum_by(self.data.len(), &|i| (self.data[i] * other.data[i].conj()).re)
    }

    pub fn real_parts(&self) -> Vec<T> {
        (0..self.npts).map(|p| self.scalar_at(p).re).collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        debug_assert!(self.same_shape(other));
        self.data.iter().zip(&other.data).fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).norm()))
    }
}

/// Index pairs `(mu, nu)` with `mu < nu` over `n` real axes, in lexicographic order.
pub fn axis_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for mu in 0..n {
        for nu in mu + 1..n {
            v.push((mu, nu));
        }
    }
    v
}

/// Position of `(mu, nu)` (either order) within [`axis_pairs`].
pub fn pair_index(n: usize, mu: usize, nu: usize) -> usize {
    let (a, b) = if mu < nu { (mu, nu) } else { (nu, mu) };
    axis_pairs(n).iter().position(|&q| q == (a, b)).expect("valid pair")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormKind {
    /// Function (0-form).
    Scalar,
    /// Real 1-form `Σ a_μ dx^μ`, one component per real axis.
    OneForm,
    /// `(0,1)`-form `Σ c_k dz̄^k`, one component per complex axis.
    ZeroOne,
    /// Real 2-form `Σ_{μ<ν} F_μν dx^μ∧dx^ν`, components ordered as [`axis_pairs`].
    TwoForm,
}

impl FormKind {
    pub fn name(self) -> &'static str {
        match self {
            FormKind::Scalar => "0-form",
            FormKind::OneForm => "1-form",
            FormKind::ZeroOne => "(0,1)-form",
            FormKind::TwoForm => "2-form",
        }
    }
}

/// Bundle-valued differential form on the torus grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridForm<T> {
    pub kind: FormKind,
    pub comps: Vec<Field<T>>,
}

impl<T: Real> GridForm<T> {
    pub fn new(kind: FormKind, comps: Vec<Field<T>>) -> Self {
        Self { kind, comps }
    }

    pub fn zeros(kind: FormKind, real_dim: usize, npts: usize, rows: usize, cols: usize) -> Self {
        let n = match kind {
            FormKind::Scalar => 1,
            FormKind::OneForm => real_dim,
            FormKind::ZeroOne => real_dim / 2,
            FormKind::TwoForm => real_dim * (real_dim - 1) / 2,
        };
        Self { kind, comps: vec![Field::zeros(npts, rows, cols); n] }
    }

    pub fn add(&self, o: &Self) -> Self {
        debug_assert_eq!(self.kind, o.kind);
        Self { kind: self.kind, comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a.add(b)).collect() }
    }

    pub fn scale(&self, z: Complex<T>) -> Self {
        Self { kind: self.kind, comps: self.comps.iter().map(|a| a.scale(z)).collect() }
    }

    pub fn max_abs_diff(&self, o: &Self) -> T {
        self.comps.iter().zip(&o.comps).fold(T::zero(), |acc, (a, b)| acc.max(a.max_abs_diff(b)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_layout() {
        assert_eq!(axis_pairs(2), vec![(0, 1)]);
        assert_eq!(axis_pairs(4).len(), 6);
        assert_eq!(pair_index(4, 3, 1), 4);
    }

    #[test]
    fn field_roundtrip_through_smallmat() {
        let mut f = Field::<f64>::zeros(5, 2, 1);
        let mut m = SmallMat::zeros(2, 1);
        m.set(1, 0, Complex::new(3.0, -1.0));
        f.set(3, &m);
        assert_eq!(f.at(3), m);
        assert_eq!(f.sup_norm(), 10f64.sqrt());
    }
}
