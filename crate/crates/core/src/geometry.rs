//! Flat complex tori `ℂᵐ/Λ` with a rectangular lattice, their periodic grids,
//! spectral differentiation and geodesic-ball masks.
//!
//! Complex axis `k` carries real coordinates `(x_k, y_k)`, both with period
//! `L_k`, so real axis `2k` is `x_k` and `2k+1` is `y_k`. The Kähler form is
//! `ω = (i/2)·s·Σ dz^k∧dz̄^k = s·Σ dx_k∧dy_k`, i.e. the metric is `s` times the
//! Euclidean one, and `Λ` is normalized by `Λω = m`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{axis_pairs, Field, FormKind, GridForm, GridScalar};
use crate::linalg::SmallMat;
use crate::scalar::{pairwise_sum_by, Real};

/// JSON description of a torus: `{"dim": m, "periods": [...], "grid": [...], "kahler_scale": s}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    pub dim: usize,
    pub periods: Vec<f64>,
    pub grid: Vec<usize>,
    pub kahler_scale: f64,
}

impl GeometryConfig {
    /// Hex SHA-256 of the canonical JSON encoding; used to bind stored fields to their torus.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("geometry config serializes");
        hex::encode(Sha256::digest(canon.as_bytes()))
    }

    pub fn build<T: Real>(&self) -> Result<TorusGeometry<T>> {
        if self.dim != self.periods.len() {
            return Err(Error::InvalidGrid(format!(
                "dim {} does not match {} periods",
                self.dim,
                self.periods.len()
            )));
        }
        let periods: Vec<T> = self.periods.iter().map(|&p| T::lit(p)).collect();
        TorusGeometry::build(&periods, &self.grid, T::lit(self.kahler_scale))
    }
}

type Plan<T> = Arc<dyn Fft<T>>;

#[derive(Clone)]
pub struct TorusGeometry<T: Real> {
    config: GeometryConfig,
    periods: Vec<T>,
    scale: T,
    shape: Vec<usize>,
    strides: Vec<usize>,
    npts: usize,
    spacing: Vec<T>,
    volume: T,
    cell_volume: T,
    forward: Vec<Plan<T>>,
    inverse: Vec<Plan<T>>,
}

impl<T: Real> fmt::Debug for TorusGeometry<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGeometry")
            .field("dim", &self.dim())
            .field("periods", &self.periods)
            .field("shape", &self.shape)
            .field("kahler_scale", &self.scale)
            .finish()
    }
}

/// Multi-index of a grid point; only the first `real_dim` entries are meaningful.
pub type GridIndex = [usize; 4];

impl<T: Real> TorusGeometry<T> {
    /// Builds the torus with `periods[k]` the side of complex axis `k` and
    /// `grid[k]` points along each of its two real directions.
    pub fn build(periods: &[T], grid: &[usize], kahler_scale: T) -> Result<Self> {
        let m = periods.len();
        if !(1..=2).contains(&m) {
            return Err(Error::UnsupportedDimension(m));
        }
        if grid.len() != m {
            return Err(Error::InvalidGrid(format!("expected {m} grid sizes, got {}", grid.len())));
        }
        for (k, &l) in periods.iter().enumerate() {
            if !(l > T::zero()) || !l.is_finite() {
                return Err(Error::NonPositivePeriod { index: k, value: l.as_f64() });
            }
        }
        for &n in grid {
            if n < 8 || !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!("resolution {n} must be a power of two >= 8")));
            }
        }
        if !(kahler_scale > T::zero()) || !kahler_scale.is_finite() {
            return Err(Error::InvalidParameter(format!("kahler_scale {kahler_scale} must be positive")));
        }
        let shape: Vec<usize> = grid.iter().flat_map(|&n| [n, n]).collect();
        let mut strides = vec![1usize; shape.len()];
        for ax in (0..shape.len() - 1).rev() {
            strides[ax] = strides[ax + 1] * shape[ax + 1];
        }
        let npts = shape.iter().product();
        let spacing: Vec<T> = (0..2 * m).map(|ax| periods[ax / 2] / T::from_usize_lossy(shape[ax])).collect();
        let s_m = kahler_scale.powi(m as i32);
        let volume = periods.iter().fold(s_m, |acc, &l| acc * l * l);
        let cell_volume = spacing.iter().fold(s_m, |acc, &h| acc * h);
        let mut planner = FftPlanner::new();
        let forward = shape.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        let config = GeometryConfig {
            dim: m,
            periods: periods.iter().map(|p| p.as_f64()).collect(),
            grid: grid.to_vec(),
            kahler_scale: kahler_scale.as_f64(),
        };
        Ok(Self { config, periods: periods.to_vec(), scale: kahler_scale, shape, strides, npts, spacing, volume, cell_volume, forward, inverse })
    }

    pub fn config(&self) -> &GeometryConfig {
        &self.config
    }

    /// Complex dimension `m`.
    pub fn dim(&self) -> usize {
        self.periods.len()
    }

    /// Real dimension `n = 2m`.
    pub fn real_dim(&self) -> usize {
        self.shape.len()
    }

    pub fn npts(&self) -> usize {
        self.npts
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn periods(&self) -> &[T] {
        &self.periods
    }

    pub fn period_of_axis(&self, ax: usize) -> T {
        self.periods[ax / 2]
    }

    pub fn kahler_scale(&self) -> T {
        self.scale
    }

    pub fn spacing(&self, ax: usize) -> T {
        self.spacing[ax]
    }

    /// Largest metric grid spacing.
    pub fn max_spacing(&self) -> T {
        self.spacing.iter().fold(T::zero(), |a, &h| a.max(h)) * self.scale.sqrt()
    }

    pub fn volume(&self) -> T {
        self.volume
    }

    /// Quadrature weight of a single grid cell (metric volume).
    pub fn cell_volume(&self) -> T {
        self.cell_volume
    }

    #[inline]
    pub fn multi_index(&self, p: usize) -> GridIndex {
        let mut idx = [0usize; 4];
        let mut rem = p;
        for ax in 0..self.shape.len() {
            idx[ax] = rem / self.strides[ax];
            rem %= self.strides[ax];
        }
        idx
    }

    #[inline]
    pub fn flat_index(&self, idx: &GridIndex) -> usize {
        (0..self.shape.len()).map(|ax| (idx[ax] % self.shape[ax]) * self.strides[ax]).sum()
    }

    /// Point reached from `p` by moving `step` cells along `ax`, wrapping periodically.
    #[inline]
    pub fn shifted(&self, p: usize, ax: usize, step: isize) -> usize {
        let n = self.shape[ax] as isize;
        let i = ((p / self.strides[ax]) % self.shape[ax]) as isize;
        let j = (i + step).rem_euclid(n);
        (p as isize + (j - i) * self.strides[ax] as isize) as usize
    }

    /// Coordinate of point `p` along real axis `ax`, in `[0, L)`.
    #[inline]
    pub fn coord(&self, p: usize, ax: usize) -> T {
        let i = (p / self.strides[ax]) % self.shape[ax];
        T::from_usize_lossy(i) * self.spacing[ax]
    }

    pub fn coords(&self, p: usize) -> [T; 4] {
        let mut c = [T::zero(); 4];
        for (ax, v) in c.iter_mut().enumerate().take(self.real_dim()) {
            *v = self.coord(p, ax);
        }
        c
    }

    /// Signed angular wavenumber of Fourier index `j` along `ax`.
    #[inline]
    pub fn wavenumber(&self, ax: usize, j: usize) -> T {
        let n = self.shape[ax];
        let js = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
        T::lit(2.0 * std::f64::consts::PI * js) / self.period_of_axis(ax)
    }

    /// Symbol of the first derivative; the Nyquist mode is dropped so the
    /// discrete operator stays real and skew-adjoint.
    #[inline]
    fn deriv_symbol(&self, ax: usize, j: usize) -> Complex<T> {
        if j == self.shape[ax] / 2 {
            Complex::zero()
        } else {
            Complex::new(T::zero(), self.wavenumber(ax, j))
        }
    }

    /// Sum over points of `f(p)` times the cell volume (pairwise order).
    pub fn integrate_fn(&self, f: impl Fn(usize) -> T) -> T {
        pairwise_sum_by(self.npts, &f) * self.cell_volume
    }

    pub fn integrate(&self, values: &[T]) -> T {
        debug_assert_eq!(values.len(), self.npts);
        self.integrate_fn(|p| values[p])
    }

    /// Integral of the real part of a scalar field.
    pub fn integrate_scalar(&self, f: &GridScalar<T>) -> T {
        self.integrate_fn(|p| f.scalar_at(p).re)
    }

    /// Integral of `Re tr(a b*)` summed over components (L² pairing without metric weights).
    pub fn integrate_dot(&self, a: &Field<T>, b: &Field<T>) -> T {
        a.dot(b) * self.cell_volume
    }

    fn line_offset(&self, q: usize, ax: usize) -> usize {
        let inner = self.strides[ax];
        let outer_block = inner * self.shape[ax];
        (q / inner) * outer_block + q % inner
    }

    /// Runs `op(component, base_point, line)` on every 1-D line of `data` along axis `ax`.
    pub fn for_each_line(
        &self,
        data: &mut [Complex<T>],
        ncomp: usize,
        ax: usize,
        op: impl Fn(usize, usize, &mut [Complex<T>]) + Sync,
    ) {
        let n = self.shape[ax];
        let stride = self.strides[ax] * ncomp;
        let nlines = self.npts / n * ncomp;
        let src: &[Complex<T>] = data;
        let lines: Vec<Vec<Complex<T>>> = (0..nlines)
            .into_par_iter()
            .map(|l| {
                let off = self.line_offset(l / ncomp, ax) * ncomp + l % ncomp;
                let mut buf: Vec<Complex<T>> = (0..n).map(|j| src[off + j * stride]).collect();
                op(l % ncomp, off / ncomp, &mut buf);
                buf
            })
            .collect();
        for (l, buf) in lines.into_iter().enumerate() {
            let off = self.line_offset(l / ncomp, ax) * ncomp + l % ncomp;
            for (j, v) in buf.into_iter().enumerate() {
                data[off + j * stride] = v;
            }
        }
    }

    fn fft_axis(&self, data: &mut [Complex<T>], ncomp: usize, ax: usize, inverse: bool) {
        let plan = if inverse { &self.inverse[ax] } else { &self.forward[ax] };
        self.for_each_line(data, ncomp, ax, |_, _, buf| plan.process(buf));
    }

    /// Spectral derivative `∂/∂x^ax` of a periodic field.
    pub fn deriv(&self, f: &Field<T>, ax: usize) -> Field<T> {
        let mut out = f.clone();
        let fwd = &self.forward[ax];
        let inv = &self.inverse[ax];
        let n = self.shape[ax];
        let norm = T::one() / T::from_usize_lossy(n);
        self.for_each_line(&mut out.data, f.ncomp(), ax, |_, _, buf| {
            fwd.process(buf);
            for (j, v) in buf.iter_mut().enumerate() {
                *v = *v * self.deriv_symbol(ax, j) * norm;
            }
            inv.process(buf);
        });
        out
    }

    /// Covariant derivative along real axis `ax` of a field whose component `c`
    /// is a section of the line bundle with Landau background `-i·β·x_k·dy_k`,
    /// `β = charges[c][k]`. Such sections satisfy `φ(x+L, y) = e^{iβLy} φ(x, y)`
    /// and are periodic in `y`. Zero charges reduce to [`Self::deriv`].
    pub fn twisted_deriv(&self, f: &Field<T>, ax: usize, charges: &[[T; 2]]) -> Field<T> {
        debug_assert_eq!(charges.len(), f.ncomp());
        let k = ax / 2;
        if charges.iter().all(|c| c[k] == T::zero()) {
            return self.deriv(f, ax);
        }
        let mut out = f.clone();
        let fwd = &self.forward[ax];
        let inv = &self.inverse[ax];
        let n = self.shape[ax];
        let h = self.spacing[ax];
        let norm = T::one() / T::from_usize_lossy(n);
        let i = Complex::new(T::zero(), T::one());
        if ax % 2 == 0 {
            self.for_each_line(&mut out.data, f.ncomp(), ax, |c, base, buf| {
                let beta = charges[c][k];
                let y = self.coord(base, ax + 1);
                let phase = |j: usize| Complex::from_polar(T::one(), beta * T::from_usize_lossy(j) * h * y);
                for (j, v) in buf.iter_mut().enumerate() {
                    *v = *v * phase(j).conj();
                }
                let chi: Vec<Complex<T>> = buf.to_vec();
                fwd.process(buf);
                for (j, v) in buf.iter_mut().enumerate() {
                    *v = *v * self.deriv_symbol(ax, j) * norm;
                }
                inv.process(buf);
                for (j, v) in buf.iter_mut().enumerate() {
                    *v = (*v + i * beta * y * chi[j]) * phase(j);
                }
            });
        } else {
            self.for_each_line(&mut out.data, f.ncomp(), ax, |c, base, buf| {
                let beta = charges[c][k];
                let x = self.coord(base, ax - 1);
                let orig: Vec<Complex<T>> = buf.to_vec();
                fwd.process(buf);
                for (j, v) in buf.iter_mut().enumerate() {
                    *v = *v * self.deriv_symbol(ax, j) * norm;
                }
                inv.process(buf);
                for (j, v) in buf.iter_mut().enumerate() {
                    *v = *v - i * beta * x * orig[j];
                }
            });
        }
        out
    }

    /// Zeroes the modes along each axis with `|j| > cutoff · N/2`, per component.
    /// Twisted x-lines are filtered in the x-periodic gauge `e^{-iβxy}φ`. With
    /// `cutoff = 1` only the Nyquist mode, which spectral derivatives do not see,
    /// is removed.
    pub fn band_limit(&self, f: &Field<T>, charges: &[[T; 2]], cutoff: f64) -> Field<T> {
        debug_assert_eq!(charges.len(), f.ncomp());
        let mut out = f.clone();
        for ax in 0..self.real_dim() {
            let fwd = &self.forward[ax];
            let inv = &self.inverse[ax];
            let n = self.shape[ax];
            let h = self.spacing[ax];
            let keep = ((cutoff * (n / 2) as f64).floor() as usize).min(n / 2);
            let norm = T::one() / T::from_usize_lossy(n);
            self.for_each_line(&mut out.data, f.ncomp(), ax, |c, base, buf| {
                let beta = charges[c][ax / 2];
                let y = if ax % 2 == 0 { self.coord(base, ax + 1) } else { T::zero() };
                let phase = |j: usize| Complex::from_polar(T::one(), beta * T::from_usize_lossy(j) * h * y);
                for (j, v) in buf.iter_mut().enumerate() {
                    *v = *v * phase(j).conj();
                }
                fwd.process(buf);
                for (j, v) in buf.iter_mut().enumerate() {
                    let m = if j <= n / 2 { j } else { n - j };
                    if m > keep || m == n / 2 {
                        *v = Complex::zero();
                    } else {
                        *v = *v * norm;
                    }
                }
                inv.process(buf);
                for (j, v) in buf.iter_mut().enumerate() {
                    *v = *v * phase(j);
                }
            });
        }
        out
    }

    /// Applies the Fourier multiplier `symbol(k)` to a periodic field. `k` is the
    /// angular wavevector with Nyquist components set to zero, matching [`Self::deriv`].
    pub fn apply_symbol(&self, f: &Field<T>, symbol: impl Fn(&[T; 4]) -> Complex<T> + Sync) -> Field<T> {
        let mut out = f.clone();
        let nc = f.ncomp();
        for ax in 0..self.real_dim() {
            self.fft_axis(&mut out.data, nc, ax, false);
        }
        let norm = T::one() / T::from_usize_lossy(self.npts);
        out.data.par_chunks_mut(nc).enumerate().for_each(|(p, chunk)| {
            let idx = self.multi_index(p);
            let mut k = [T::zero(); 4];
            for ax in 0..self.real_dim() {
                k[ax] = if idx[ax] == self.shape[ax] / 2 { T::zero() } else { self.wavenumber(ax, idx[ax]) };
            }
            let s = symbol(&k) * norm;
            chunk.iter_mut().for_each(|v| *v = *v * s);
        });
        for ax in 0..self.real_dim() {
            self.fft_axis(&mut out.data, nc, ax, true);
        }
        out
    }

    /// Spectral interpolation of a field sampled on `coarse` onto this grid.
    ///
    /// Both tori must share periods and scale. Entry `c` is treated as a section
    /// with charges `charges[c]`: x-lines are interpolated in the x-periodic gauge
    /// `e^{-iβxy}φ`, y-lines directly.
    pub fn refine(&self, coarse: &TorusGeometry<T>, f: &Field<T>, charges: &[[T; 2]]) -> Result<Field<T>> {
        if coarse.config.periods != self.config.periods || coarse.config.kahler_scale != self.config.kahler_scale {
            return Err(Error::ShapeMismatch("refinement needs identical periods and scale".into()));
        }
        if coarse.shape.iter().zip(&self.shape).any(|(c, f)| c > f) {
            return Err(Error::ShapeMismatch("refinement target is coarser than the source".into()));
        }
        let nc = f.ncomp();
        let n = self.real_dim();
        let mut shape = coarse.shape.clone();
        let mut data = f.data.clone();
        let mut planner = FftPlanner::<T>::new();
        for ax in 0..n {
            let (nin, nout) = (shape[ax], self.shape[ax]);
            if nin == nout {
                continue;
            }
            let fwd = planner.plan_fft_forward(nin);
            let inv = planner.plan_fft_inverse(nout);
            let mut new_shape = shape.clone();
            new_shape[ax] = nout;
            let strides = |sh: &[usize]| {
                let mut st = vec![1usize; sh.len()];
                for a in (0..sh.len() - 1).rev() {
                    st[a] = st[a + 1] * sh[a + 1];
                }
                st
            };
            let (sin, sout) = (strides(&shape), strides(&new_shape));
            let total_out: usize = new_shape.iter().product();
            let mut out = vec![Complex::zero(); total_out * nc];
            let lines = shape.iter().product::<usize>() / nin;
            let l = self.period_of_axis(ax);
            let (hin, hout) = (l / T::from_usize_lossy(nin), l / T::from_usize_lossy(nout));
            for q in 0..lines {
                // Multi-index of the line start with index 0 along `ax`.
                let mut rem = q;
                let mut idx = vec![0usize; n];
                for a in (0..n).rev() {
                    if a == ax {
                        continue;
                    }
                    idx[a] = rem % shape[a];
                    rem /= shape[a];
                }
                let base_in: usize = (0..n).map(|a| idx[a] * sin[a]).sum();
                let base_out: usize = (0..n).map(|a| idx[a] * sout[a]).sum();
                let other = if ax % 2 == 0 { Some(T::from_usize_lossy(idx[ax + 1]) * self.period_of_axis(ax + 1) / T::from_usize_lossy(shape[ax + 1])) } else { None };
                for c in 0..nc {
                    let beta = charges[c][ax / 2];
                    let mut buf: Vec<Complex<T>> = (0..nin).map(|j| data[(base_in + j * sin[ax]) * nc + c]).collect();
                    if let Some(y) = other {
                        for (j, v) in buf.iter_mut().enumerate() {
                            *v = *v * Complex::from_polar(T::one(), -beta * T::from_usize_lossy(j) * hin * y);
                        }
                    }
                    fwd.process(&mut buf);
                    let mut big = vec![Complex::zero(); nout];
                    for j in 0..nin / 2 {
                        big[j] = buf[j];
                        if j > 0 {
                            big[nout - j] = buf[nin - j];
                        }
                    }
                    inv.process(&mut big);
                    let norm = T::one() / T::from_usize_lossy(nin);
                    for (j, v) in big.into_iter().enumerate() {
                        let mut v = v * norm;
                        if let Some(y) = other {
                            v = v * Complex::from_polar(T::one(), beta * T::from_usize_lossy(j) * hout * y);
                        }
                        out[(base_out + j * sout[ax]) * nc + c] = v;
                    }
                }
            }
            data = out;
            shape = new_shape;
        }
        Ok(Field { rows: f.rows, cols: f.cols, npts: self.npts, data })
    }

    /// Forward multi-dimensional FFT (unnormalized).
    pub fn fft(&self, f: &Field<T>) -> Field<T> {
        let mut out = f.clone();
        for ax in 0..self.real_dim() {
            self.fft_axis(&mut out.data, f.ncomp(), ax, false);
        }
        out
    }

    /// Inverse of [`Self::fft`], including the `1/N` normalization.
    pub fn ifft(&self, f: &Field<T>) -> Field<T> {
        let mut out = f.clone();
        for ax in 0..self.real_dim() {
            self.fft_axis(&mut out.data, f.ncomp(), ax, true);
        }
        out.scale_re(T::one() / T::from_usize_lossy(self.npts))
    }

    /// Metric Laplacian `Δ_g = s⁻¹ Σ ∂²` (non-positive).
    pub fn laplacian(&self, f: &Field<T>) -> Field<T> {
        let s = self.scale;
        self.apply_symbol(f, |k| {
            let k2 = k.iter().fold(T::zero(), |a, &x| a + x * x);
            Complex::new(-k2 / s, T::zero())
        })
    }

    /// Solves `Δ_g u = f` for mean-zero `u`; the mean of `f` is discarded.
    pub fn solve_poisson(&self, f: &Field<T>) -> Field<T> {
        let s = self.scale;
        self.apply_symbol(f, |k| {
            let k2 = k.iter().fold(T::zero(), |a, &x| a + x * x);
            if k2 == T::zero() {
                Complex::zero()
            } else {
                Complex::new(-s / k2, T::zero())
            }
        })
    }

    /// Periodic spectral low-pass check: fraction of L² mass in the top octave
    /// (modes with `max_ax |j_ax| > N_ax/4`).
    pub fn top_octave_fraction(&self, f: &Field<T>) -> T {
        let hat = self.fft(f);
        let nc = f.ncomp();
        let mut top = T::zero();
        let mut total = T::zero();
        for p in 0..self.npts {
            let idx = self.multi_index(p);
            let high = (0..self.real_dim()).any(|ax| {
                let n = self.shape[ax];
                let j = if idx[ax] <= n / 2 { idx[ax] } else { n - idx[ax] };
                j > n / 4
            });
            let e = hat.data[p * nc..(p + 1) * nc].iter().fold(T::zero(), |a, z| a + z.norm_sqr());
            total = total + e;
            if high {
                top = top + e;
            }
        }
        if total == T::zero() {
            T::zero()
        } else {
            top / total
        }
    }

    /// Squared metric distance between point `p` and `center` on the flat torus.
    pub fn distance_sq(&self, p: usize, center: &[T]) -> T {
        let mut d2 = T::zero();
        for (ax, &c) in center.iter().enumerate().take(self.real_dim()) {
            let l = self.period_of_axis(ax);
            let mut d = (self.coord(p, ax) - c) % l;
            if d < T::zero() {
                d = d + l;
            }
            if d > l / T::lit(2.0) {
                d = l - d;
            }
            d2 = d2 + d * d;
        }
        d2 * self.scale
    }

    /// Largest radius for which metric balls are embedded.
    pub fn embedding_radius(&self) -> T {
        let lmin = self.periods.iter().fold(T::infinity(), |a, &l| a.min(l));
        lmin * self.scale.sqrt() / T::lit(2.0)
    }

    /// Sharp 0/1 indicator of the metric ball `B_r(center)`.
    pub fn ball_mask(&self, center: &[T], radius: T) -> Result<Vec<T>> {
        if center.len() != self.real_dim() {
            return Err(Error::ShapeMismatch(format!("center has {} coordinates, expected {}", center.len(), self.real_dim())));
        }
        let limit = self.embedding_radius();
        if !(radius < limit) {
            return Err(Error::RadiusTooLarge { radius: radius.as_f64(), limit: limit.as_f64() });
        }
        let r2 = radius * radius;
        Ok((0..self.npts).map(|p| if self.distance_sq(p, center) <= r2 { T::one() } else { T::zero() }).collect())
    }

    /// Euclidean volume of the ball of radius `r` in real dimension `2m`.
    pub fn euclidean_ball_volume(&self, r: T) -> T {
        match self.dim() {
            1 => T::PI() * r * r,
            _ => T::PI() * T::PI() / T::lit(2.0) * r.powi(4),
        }
    }

    /// The Kähler form `ω` as a scalar-valued 2-form.
    pub fn kahler_form(&self) -> GridForm<T> {
        let n = self.real_dim();
        let comps = axis_pairs(n)
            .into_iter()
            .map(|(mu, nu)| {
                let v = if nu == mu + 1 && mu % 2 == 0 { self.scale } else { T::zero() };
                Field::constant(self.npts, SmallMat::scalar(1, Complex::new(v, T::zero())))
            })
            .collect();
        GridForm::new(FormKind::TwoForm, comps)
    }

    /// Contraction with the Kähler form: `ΛF = s⁻¹ Σ_k F_{x_k y_k}`.
    ///
    /// Only the `(1,1)` part of a 2-form contributes, so any real 2-form is accepted.
    pub fn contract_lambda(&self, form: &GridForm<T>) -> Result<Field<T>> {
        if form.kind != FormKind::TwoForm {
            return Err(Error::BidegreeMismatch { expected: "(1,1)", found: form.kind.name() });
        }
        let n = self.real_dim();
        let pairs = axis_pairs(n);
        let first = &form.comps[0];
        let mut out = Field::zeros(first.npts, first.rows, first.cols);
        for k in 0..self.dim() {
            let i = pairs.iter().position(|&q| q == (2 * k, 2 * k + 1)).expect("diagonal pair");
            out.axpy(T::one(), &form.comps[i]);
        }
        Ok(out.scale_re(T::one() / self.scale))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus(periods: &[f64], grid: &[usize], s: f64) -> TorusGeometry<f64> {
        TorusGeometry::build(periods, grid, s).unwrap()
    }

    #[test]
    fn volume_matches_quadrature_of_constant() {
        let g = torus(&[1.0], &[64], 1.0);
        assert_eq!(g.volume(), 1.0);
        assert!((g.integrate_fn(|_| 1.0) - 1.0).abs() < 1e-12);
        let g2 = torus(&[1.0, 1.0], &[16, 16], 1.0);
        assert_eq!(g2.dim(), 2);
        assert!(g2.volume() > 0.0);
        assert!((g2.integrate_fn(|_| 1.0) - g2.volume()).abs() < 1e-12);
    }

    #[test]
    fn volume_is_resolution_independent() {
        let a = torus(&[2.0], &[64], 1.3);
        let b = torus(&[2.0], &[128], 1.3);
        assert!((a.integrate_fn(|_| 1.0) - b.integrate_fn(|_| 1.0)).abs() < 1e-14 * a.volume().max(1.0) * 10.0);
    }

    #[test]
    fn build_rejects_bad_input() {
        assert!(matches!(TorusGeometry::<f64>::build(&[-1.0], &[16], 1.0), Err(Error::NonPositivePeriod { .. })));
        assert!(matches!(TorusGeometry::<f64>::build(&[1.0; 3], &[16; 3], 1.0), Err(Error::UnsupportedDimension(3))));
        assert!(matches!(TorusGeometry::<f64>::build(&[1.0], &[12], 1.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(TorusGeometry::<f64>::build(&[1.0], &[4], 1.0), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn lambda_normalization_and_linearity() {
        for m in 1..=2 {
            let g = torus(&vec![1.0; m], &vec![8; m], 0.7);
            let lw = g.contract_lambda(&g.kahler_form()).unwrap();
            for p in 0..g.npts() {
                assert!((lw.scalar_at(p) - Complex::new(m as f64, 0.0)).norm() < 1e-14);
            }
            let c = Complex::new(0.0, -2.0 * std::f64::consts::PI * 3.0 / g.volume());
            let lc = g.contract_lambda(&g.kahler_form().scale(c)).unwrap();
            assert!((lc.scalar_at(0) - c * m as f64).norm() < 1e-12);
            let zero = GridForm::zeros(FormKind::TwoForm, 2 * m, g.npts(), 1, 1);
            assert_eq!(g.contract_lambda(&zero).unwrap().sup_norm(), 0.0);
        }
    }

    #[test]
    fn lambda_rejects_one_forms() {
        let g = torus(&[1.0], &[8], 1.0);
        let f = GridForm::zeros(FormKind::OneForm, 2, g.npts(), 1, 1);
        assert!(matches!(g.contract_lambda(&f), Err(Error::BidegreeMismatch { .. })));
    }

    #[test]
    fn spectral_derivative_of_trig_polynomial() {
        let g = torus(&[2.0], &[32], 1.0);
        let w = std::f64::consts::PI; // 2π/L
        let f = Field::from_real(&(0..g.npts()).map(|p| (3.0 * w * g.coord(p, 0)).sin() * (w * g.coord(p, 1)).cos()).collect::<Vec<_>>());
        let dx = g.deriv(&f, 0);
        let dy = g.deriv(&f, 1);
        for p in 0..g.npts() {
            let (x, y) = (g.coord(p, 0), g.coord(p, 1));
            assert!((dx.scalar_at(p).re - 3.0 * w * (3.0 * w * x).cos() * (w * y).cos()).abs() < 1e-10);
            assert!((dy.scalar_at(p).re + w * (3.0 * w * x).sin() * (w * y).sin()).abs() < 1e-10);
        }
    }

    #[test]
    fn fft_roundtrip() {
        let g = torus(&[1.0, 1.5], &[8, 16], 1.0);
        let f = Field::from_fn(g.npts(), 2, 1, |p| {
            let mut m = SmallMat::zeros(2, 1);
            m.set(0, 0, Complex::new(p as f64 * 0.01, 1.0));
            m.set(1, 0, Complex::new((p as f64).sin(), -(p as f64).cos()));
            m
        });
        let back = g.ifft(&g.fft(&f));
        assert!(back.max_abs_diff(&f) < 1e-12);
    }

    #[test]
    fn translation_invariance_of_quadrature() {
        let g = torus(&[1.0], &[32], 1.0);
        let f: Vec<f64> = (0..g.npts()).map(|p| (g.coord(p, 0) * 6.0).sin().exp() + g.coord(p, 1).cos()).collect();
        let shifted: Vec<f64> = (0..g.npts()).map(|p| f[g.shifted(g.shifted(p, 0, 5), 1, -3)]).collect();
        assert!((g.integrate(&f) - g.integrate(&shifted)).abs() < 1e-12);
    }

    #[test]
    fn ball_mask_volumes() {
        let g = torus(&[1.0], &[256], 1.0);
        let r = 0.3;
        let m = g.ball_mask(&[0.5, 0.5], r).unwrap();
        let area = g.integrate(&m);
        let h = g.max_spacing();
        assert!((area - std::f64::consts::PI * r * r).abs() < 2.0 * std::f64::consts::PI * r * h);
        let tiny = g.ball_mask(&[0.5 + 1e-3, 0.5 + 1e-3], 1e-6).unwrap();
        assert_eq!(g.integrate(&tiny), 0.0);
        assert!(matches!(g.ball_mask(&[0.0, 0.0], 0.5), Err(Error::RadiusTooLarge { .. })));

        let g4 = torus(&[1.0, 1.0], &[32, 32], 1.0);
        let m4 = g4.ball_mask(&[0.5; 4], 0.35).unwrap();
        let vol = g4.integrate(&m4);
        let exact = std::f64::consts::PI.powi(2) / 2.0 * 0.35f64.powi(4);
        assert!((vol - exact).abs() < 2.0 * std::f64::consts::PI.powi(2) * 0.35f64.powi(3) * g4.max_spacing());
    }

    #[test]
    fn poisson_inverts_laplacian() {
        let g = torus(&[1.0], &[32], 2.0);
        let f = Field::from_real(&(0..g.npts()).map(|p| (2.0 * std::f64::consts::PI * g.coord(p, 0)).sin() + (4.0 * std::f64::consts::PI * g.coord(p, 1)).cos()).collect::<Vec<_>>());
        let u = g.solve_poisson(&f);
        assert!(g.laplacian(&u).max_abs_diff(&f) < 1e-10);
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let a = GeometryConfig { dim: 1, periods: vec![1.0], grid: vec![64], kahler_scale: 1.0 };
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.grid = vec![128];
        assert_ne!(a.hash(), b.hash());
        let g: TorusGeometry<f32> = a.build().unwrap();
        assert_eq!(g.npts(), 64 * 64);
    }
}
