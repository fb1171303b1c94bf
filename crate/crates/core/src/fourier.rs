//! Pseudo-spectral helpers on equispaced periodic grids.
//!
//! Coefficients follow the convention `u(x_j) = sum_m c_m exp(i kappa_m x_j)`
//! with `c_m = (1/N) sum_j u_j exp(-i kappa_m x_j)` and `kappa_m = 2 pi m / L`.
//! For even `N` the Nyquist mode `m = N/2` is interpreted as a cosine.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::{abs, cabs, from_usize, Real};

/// Signed mode number of FFT slot `j` (Nyquist reported as `+N/2`).
#[inline]
pub fn mode(j: usize, n: usize) -> isize {
    if j <= n / 2 {
        j as isize
    } else {
        j as isize - n as isize
    }
}

#[inline]
pub fn wavenumber<T: Real>(m: isize, period: T) -> T {
    T::two_pi() * T::from_isize(m).unwrap() / period
}

/// Forward/inverse transforms for one grid size.
pub struct Transform<T: Real> {
    n: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real> Transform<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Normalized Fourier coefficients of a real grid function.
    pub fn forward(&self, u: &[T]) -> Vec<Complex<T>> {
        assert_eq!(u.len(), self.n);
        let mut buf: Vec<Complex<T>> = u.iter().map(|&x| Complex::new(x, T::zero())).collect();
        self.fwd.process(&mut buf);
        let scale = T::one() / from_usize::<T>(self.n);
        buf.iter_mut().for_each(|c| *c = c.scale(scale));
        buf
    }

    /// Forward transform in place, normalized.
    pub fn forward_in_place(&self, buf: &mut [Complex<T>]) {
        self.fwd.process(buf);
        let scale = T::one() / from_usize::<T>(self.n);
        buf.iter_mut().for_each(|c| *c = c.scale(scale));
    }

    /// Inverse transform in place (no normalization, matching `forward`).
    pub fn inverse_in_place(&self, buf: &mut [Complex<T>]) {
        self.inv.process(buf);
    }

    /// Real grid values from coefficients.
    pub fn inverse(&self, c: &[Complex<T>]) -> Vec<T> {
        let mut buf = c.to_vec();
        self.inv.process(&mut buf);
        buf.iter().map(|z| z.re).collect()
    }

    /// Spectral derivative of the requested order. Odd orders drop the
    /// Nyquist mode, whose derivative is not representable on the grid.
    pub fn derivative(&self, u: &[T], period: T, order: u32) -> Vec<T> {
        let mut c = self.forward(u);
        apply_derivative(&mut c, period, order);
        self.inverse(&c)
    }
}

pub fn apply_derivative<T: Real>(c: &mut [Complex<T>], period: T, order: u32) {
    let n = c.len();
    for (j, cj) in c.iter_mut().enumerate() {
        let m = mode(j, n);
        if order % 2 == 1 && n.is_multiple_of(2) && j == n / 2 {
            *cj = Complex::new(T::zero(), T::zero());
            continue;
        }
        let k = wavenumber(m, period);
        let factor = Complex::new(T::zero(), k).powu(order);
        *cj *= factor;
    }
}

/// Trigonometric interpolation of `u` onto `m` equispaced points.
pub fn resample<T: Real>(u: &[T], m: usize) -> Vec<T> {
    let n = u.len();
    if n == m {
        return u.to_vec();
    }
    let c = Transform::new(n).forward(u);
    let mut out = vec![Complex::new(T::zero(), T::zero()); m];
    let half = T::one() / (T::one() + T::one());
    let keep = n.min(m) / 2;
    for (j, &cj) in c.iter().enumerate() {
        let k = mode(j, n);
        let ka = k.unsigned_abs();
        if ka < keep {
            let slot = if k >= 0 { k as usize } else { (m as isize + k) as usize };
            out[slot] += cj;
        } else if ka == keep && m.is_multiple_of(2) && n.is_multiple_of(2) {
            if m > n {
                // Nyquist cosine splits into the +/- pair of the finer grid.
                out[keep] += cj.scale(half);
                out[m - keep] += cj.scale(half);
            } else {
                // Both +/- keep modes alias onto the coarse Nyquist slot.
                out[keep] += Complex::new(cj.re, T::zero());
            }
        }
    }
    Transform::new(m).inverse(&out)
}

/// Returns `u(x + dx)` sampled on the same grid.
pub fn shift<T: Real>(u: &[T], period: T, dx: T) -> Vec<T> {
    let n = u.len();
    let tr = Transform::new(n);
    let mut c = tr.forward(u);
    for (j, cj) in c.iter_mut().enumerate() {
        let m = mode(j, n);
        let theta = wavenumber(m, period) * dx;
        if n.is_multiple_of(2) && j == n / 2 {
            *cj = Complex::new(cj.re * theta.cos(), T::zero());
        } else {
            *cj *= Complex::new(theta.cos(), theta.sin());
        }
    }
    tr.inverse(&c)
}

/// Evaluates the interpolant and its first two derivatives at `x`.
pub fn eval_with_derivatives<T: Real>(c: &[Complex<T>], period: T, x: T) -> (T, T, T) {
    let n = c.len();
    let (mut f, mut d1, mut d2) = (T::zero(), T::zero(), T::zero());
    for (j, cj) in c.iter().enumerate() {
        let m = mode(j, n);
        let k = wavenumber(m, period);
        let (s, co) = (k * x).sin_cos();
        if n.is_multiple_of(2) && j == n / 2 {
            f += cj.re * co;
            d1 -= cj.re * k * s;
            d2 -= cj.re * k * k * co;
            continue;
        }
        // Re(c e^{ikx}) and its derivatives.
        let re = cj.re * co - cj.im * s;
        let im = cj.re * s + cj.im * co;
        f += re;
        d1 -= k * im;
        d2 -= k * k * re;
    }
    (f, d1, d2)
}

/// Largest coefficient magnitude among the `width` highest retained modes,
/// relative to the largest coefficient overall.
pub fn tail_ratio<T: Real>(c: &[Complex<T>], width: usize) -> T {
    let n = c.len();
    let top = c.iter().map(|z| cabs(*z)).fold(T::zero(), T::max);
    if top == T::zero() {
        return T::zero();
    }
    let cutoff = (n / 2).saturating_sub(width);
    let tail = c
        .iter()
        .enumerate()
        .filter(|(j, _)| mode(*j, n).unsigned_abs() >= cutoff)
        .map(|(_, z)| cabs(*z))
        .fold(T::zero(), T::max);
    tail / top
}

pub fn max_abs<T: Real>(u: &[T]) -> T {
    u.iter().fold(T::zero(), |m, &x| m.max(abs(x)))
}
