//! Dense Fourier representations of the linearized operators and their spectra.
//!
//! Functions on the `N`-point grid are expanded in the orthonormal real basis
//! `{1, cos(k_1 x), sin(k_1 x), ..., cos(k_M x), sin(k_M x), cos(k_{N/2} x)}`
//! with `M = N/2 - 1`. The zero-mean space keeps the cosine/sine pairs only:
//! the Nyquist cosine has no representable derivative, so it is dropped along
//! with the constant and `D` stays invertible.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{self, Transform};
use crate::scalar::{abs, cabs, from_usize, lit, to_f64, Power, Real};
use crate::wave::PeriodicWave;

/// Which function space an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Basis {
    Full,
    ZeroMean,
}

/// The operator a matrix represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    #[serde(rename = "L")]
    L,
    #[serde(rename = "QL")]
    QL,
    #[serde(rename = "R(k)")]
    R,
    #[serde(rename = "P(k)")]
    P,
    #[serde(rename = "D(QL+k^2)")]
    Transverse,
}

impl Origin {
    pub fn as_str(&self) -> &'static str {
        match self {
            Origin::L => "L",
            Origin::QL => "QL",
            Origin::R => "R(k)",
            Origin::P => "P(k)",
            Origin::Transverse => "D(QL+k^2)",
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Trig {
    Cos,
    Sin,
}

#[derive(Debug, Clone, Copy)]
struct Mode<T> {
    trig: Trig,
    freq: usize,
    weight: T,
}

/// Orthonormal real trigonometric basis on `N` equispaced points.
#[derive(Debug, Clone)]
pub struct FourierBasis<T> {
    n: usize,
    period: T,
    kind: Basis,
    modes: Vec<Mode<T>>,
}

impl<T: Real> FourierBasis<T> {
    pub fn new(n: usize, period: T, kind: Basis) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!("grid size must be even and at least 8, got {n}")));
        }
        let nf = from_usize::<T>(n);
        let edge = T::one() / nf.sqrt();
        let inner = (lit::<T>(2.0) / nf).sqrt();
        let mut modes = Vec::with_capacity(n);
        if kind == Basis::Full {
            modes.push(Mode { trig: Trig::Cos, freq: 0, weight: edge });
        }
        for m in 1..n / 2 {
            modes.push(Mode { trig: Trig::Cos, freq: m, weight: inner });
            modes.push(Mode { trig: Trig::Sin, freq: m, weight: inner });
        }
        if kind == Basis::Full {
            modes.push(Mode { trig: Trig::Cos, freq: n / 2, weight: edge });
        }
        Ok(Self { n, period, kind, modes })
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn grid_len(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> Basis {
        self.kind
    }

    /// `2 pi m / L` for every basis element.
    pub fn wavenumbers(&self) -> Vec<T> {
        self.modes.iter().map(|m| fourier::wavenumber(m.freq as isize, self.period)).collect()
    }

    /// Whether basis element `i` is a sine (odd about `x = 0`).
    pub fn is_odd(&self, i: usize) -> bool {
        self.modes[i].trig == Trig::Sin
    }

    /// Orthogonal projection of grid values onto the basis.
    pub fn analyze(&self, u: &[T]) -> DVector<T> {
        assert_eq!(u.len(), self.n);
        let c = Transform::new(self.n).forward(u);
        let nf = from_usize::<T>(self.n);
        DVector::from_iterator(
            self.dim(),
            self.modes.iter().map(|m| {
                // (u, w cos) = w N Re c_m, (u, w sin) = -w N Im c_m
                let z = c[m.freq];
                match m.trig {
                    Trig::Cos => m.weight * nf * z.re,
                    Trig::Sin => -m.weight * nf * z.im,
                }
            }),
        )
    }

    /// Grid values of a coefficient vector.
    pub fn synthesize(&self, a: &DVector<T>) -> Vec<T> {
        let zero = Complex::new(T::zero(), T::zero());
        let mut c = vec![zero; self.n];
        let half = lit::<T>(0.5);
        for (m, &v) in self.modes.iter().zip(a.iter()) {
            if m.freq == 0 || m.freq == self.n / 2 {
                c[m.freq] += Complex::new(m.weight * v, T::zero());
                continue;
            }
            let z = match m.trig {
                Trig::Cos => Complex::new(v, T::zero()),
                Trig::Sin => Complex::new(T::zero(), -v),
            }
            .scale(m.weight * half);
            c[m.freq] += z;
            c[self.n - m.freq] += z.conj();
        }
        Transform::new(self.n).inverse(&c)
    }

    /// Real and imaginary grid parts of a complex coefficient vector.
    pub fn synthesize_complex(&self, a: &DVector<Complex<T>>) -> (Vec<T>, Vec<T>) {
        let re = a.map(|z| z.re);
        let im = a.map(|z| z.im);
        (self.synthesize(&re), self.synthesize(&im))
    }

    /// Galerkin matrix of pointwise multiplication by `v`, exact for the
    /// discrete inner product: products of trigonometric pairs reduce to the
    /// sum and difference frequencies of the transform of `v`.
    pub fn multiplication(&self, v: &[T]) -> DMatrix<T> {
        assert_eq!(v.len(), self.n);
        let vh = Transform::new(self.n).forward(v);
        let n = self.n as isize;
        // a(k) = (1/N) sum v cos, b(k) = (1/N) sum v sin
        let a = |k: isize| vh[k.rem_euclid(n) as usize].re;
        let b = |k: isize| -vh[k.rem_euclid(n) as usize].im;
        let half_n = from_usize::<T>(self.n) * lit(0.5);
        let dim = self.dim();
        DMatrix::from_fn(dim, dim, |i, j| {
            let (mi, mj) = (self.modes[i], self.modes[j]);
            let (f, g) = (mi.freq as isize, mj.freq as isize);
            let s = match (mi.trig, mj.trig) {
                (Trig::Cos, Trig::Cos) => a(f - g) + a(f + g),
                (Trig::Sin, Trig::Sin) => a(f - g) - a(f + g),
                (Trig::Cos, Trig::Sin) => b(g + f) + b(g - f),
                (Trig::Sin, Trig::Cos) => b(f + g) + b(f - g),
            };
            mi.weight * mj.weight * half_n * s
        })
    }
}

/// A dense operator together with the space and the family member it represents.
#[derive(Debug, Clone)]
pub struct SpectralOperator<T> {
    pub matrix: DMatrix<T>,
    pub basis: Basis,
    pub dim: usize,
    pub symmetric: bool,
    pub origin: Origin,
    /// Transverse wavenumber (zero for `L` and `QL`).
    pub k: T,
    /// Collocation grid size.
    pub n: usize,
}

impl<T: Real> SpectralOperator<T> {
    fn new(matrix: DMatrix<T>, basis: Basis, symmetric: bool, origin: Origin, k: T, n: usize) -> Self {
        Self { dim: matrix.nrows(), matrix, basis, symmetric, origin, k, n }
    }

    /// `max |A - A^T| / max |A|`.
    pub fn symmetry_defect(&self) -> T {
        let top = self.matrix.iter().fold(T::zero(), |m, &x| m.max(abs(x)));
        if top == T::zero() {
            return T::zero();
        }
        let d = &self.matrix - self.matrix.transpose();
        d.iter().fold(T::zero(), |m, &x| m.max(abs(x))) / top
    }
}

/// Largest acceptable tail ratio of the `phi^p` spectrum at the operator grid.
pub fn resolution_tol<T: Real>() -> T {
    lit::<T>(1e-9).max(T::eps() * lit(1e3))
}

/// The linearization about one wave on one grid: `L`, `QL` and the zero-mean
/// derivative pair, from which every member of the `R(k)`, `P(k)` and
/// transverse families is formed.
#[derive(Debug, Clone)]
pub struct Linearization<T> {
    pub n: usize,
    pub period: T,
    pub c: T,
    /// `phi` on the operator grid.
    pub profile: Vec<T>,
    /// `phi^p` on the operator grid.
    pub potential: Vec<T>,
    pub full: FourierBasis<T>,
    pub zero_mean: FourierBasis<T>,
    pub l: DMatrix<T>,
    pub ql: DMatrix<T>,
    pub d: DMatrix<T>,
    pub d_inv: DMatrix<T>,
}

impl<T: Real> Linearization<T> {
    /// Assembles on `n` points, interpolating the wave if its grid differs.
    pub fn new(wave: &PeriodicWave<T>, n: usize) -> Result<Self> {
        let period = wave.params.period;
        let full = FourierBasis::new(n, period, Basis::Full)?;
        let zero_mean = FourierBasis::new(n, period, Basis::ZeroMean)?;
        let profile = wave.resampled(n);
        let pw = Power::new(wave.params.p);
        let potential: Vec<T> = profile.iter().map(|&u| pw.pow(u, 0)).collect();
        let tail = fourier::tail_ratio(&Transform::new(n).forward(&potential), 2);
        if !(tail <= resolution_tol::<T>()) {
            return Err(Error::Resolution(format!(
                "phi^p is under-resolved on N = {n}: spectral tail {:.3e} above {:.1e}",
                to_f64(tail),
                to_f64(resolution_tol::<T>())
            )));
        }
        let c = wave.params.c;
        let l = kinetic(&full, c) - full.multiplication(&potential);
        let ql = kinetic(&zero_mean, c) - zero_mean.multiplication(&potential);
        let (d, d_inv) = derivative_ops(period, n)?;
        Ok(Self { n, period, c, profile, potential, full, zero_mean, l: symmetrize(l), ql: symmetrize(ql), d, d_inv })
    }

    pub fn assemble_l(&self) -> SpectralOperator<T> {
        SpectralOperator::new(self.l.clone(), Basis::Full, true, Origin::L, T::zero(), self.n)
    }

    pub fn assemble_ql(&self) -> SpectralOperator<T> {
        SpectralOperator::new(self.ql.clone(), Basis::ZeroMean, true, Origin::QL, T::zero(), self.n)
    }

    /// `R(k) = QL + k^2 I`.
    pub fn assemble_r(&self, k: T) -> SpectralOperator<T> {
        let m = shifted(&self.ql, k * k);
        SpectralOperator::new(m, Basis::ZeroMean, true, Origin::R, k, self.n)
    }

    /// `P(k) = D QL D^{-1} + k^2 I`.
    pub fn assemble_p(&self, k: T) -> SpectralOperator<T> {
        let m = shifted(&(&self.d * &self.ql * &self.d_inv), k * k);
        SpectralOperator::new(m, Basis::ZeroMean, false, Origin::P, k, self.n)
    }

    /// `D (QL + k^2 I)`, the generator of the transverse spectral problem.
    pub fn assemble_transverse(&self, k: T) -> SpectralOperator<T> {
        let m = &self.d * shifted(&self.ql, k * k);
        SpectralOperator::new(m, Basis::ZeroMean, false, Origin::Transverse, k, self.n)
    }

    /// Coefficients of `phi'` in the full basis.
    pub fn derivative_coefficients(&self) -> DVector<T> {
        let dphi = Transform::new(self.n).derivative(&self.profile, self.period, 1);
        self.full.analyze(&dphi)
    }

    /// Largest of `max |eig QL|`, the spectral scale used by tolerances.
    pub fn spectral_scale(&self) -> Result<T> {
        Ok(spectrum(&self.assemble_ql(), None)?.max_abs())
    }
}

fn kinetic<T: Real>(basis: &FourierBasis<T>, c: T) -> DMatrix<T> {
    let kappa = basis.wavenumbers();
    DMatrix::from_diagonal(&DVector::from_iterator(kappa.len(), kappa.iter().map(|&k| k * k + c)))
}

fn symmetrize<T: Real>(m: DMatrix<T>) -> DMatrix<T> {
    (&m + m.transpose()) * lit::<T>(0.5)
}

fn shifted<T: Real>(m: &DMatrix<T>, s: T) -> DMatrix<T> {
    let mut out = m.clone();
    for i in 0..out.nrows() {
        out[(i, i)] += s;
    }
    out
}

/// Zero-mean derivative `D` and its exact inverse. On each pair
/// `(cos k x, sin k x)`, `D` acts as `k` times a quarter rotation.
pub fn derivative_ops<T: Real>(period: T, n: usize) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let basis = FourierBasis::new(n, period, Basis::ZeroMean)?;
    let dim = basis.dim();
    let kappa = basis.wavenumbers();
    let mut d = DMatrix::zeros(dim, dim);
    let mut d_inv = DMatrix::zeros(dim, dim);
    for pair in 0..dim / 2 {
        let (ci, si) = (2 * pair, 2 * pair + 1);
        let k = kappa[ci];
        // (cos)' = -k sin, (sin)' = k cos
        d[(si, ci)] = -k;
        d[(ci, si)] = k;
        d_inv[(ci, si)] = -T::one() / k;
        d_inv[(si, ci)] = T::one() / k;
    }
    Ok((d, d_inv))
}

pub fn assemble_l<T: Real>(wave: &PeriodicWave<T>, n: usize) -> Result<SpectralOperator<T>> {
    Ok(Linearization::new(wave, n)?.assemble_l())
}

pub fn assemble_ql<T: Real>(wave: &PeriodicWave<T>, n: usize) -> Result<SpectralOperator<T>> {
    Ok(Linearization::new(wave, n)?.assemble_ql())
}

pub fn assemble_r<T: Real>(wave: &PeriodicWave<T>, n: usize, k: T) -> Result<SpectralOperator<T>> {
    Ok(Linearization::new(wave, n)?.assemble_r(k))
}

pub fn assemble_p<T: Real>(wave: &PeriodicWave<T>, n: usize, k: T) -> Result<SpectralOperator<T>> {
    Ok(Linearization::new(wave, n)?.assemble_p(k))
}

/// Eigenvalues of an operator with the counts derived from them.
#[derive(Debug, Clone)]
pub struct SpectrumReport<T> {
    pub origin: Origin,
    pub k: T,
    pub n: usize,
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<Complex<T>>,
    pub kernel_dim: usize,
    pub neg_count: usize,
    pub zero_tol: T,
    /// Column `i` belongs to `eigenvalues[i]`; symmetric operators only.
    pub eigvectors: Option<DMatrix<T>>,
}

impl<T: Real> SpectrumReport<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Kernel and negative counts redone with another zero threshold.
    pub fn recount(mut self, zero_tol: T) -> Self {
        self.kernel_dim = self.eigenvalues.iter().filter(|z| cabs(**z) <= zero_tol).count();
        self.neg_count = self.eigenvalues.iter().filter(|z| z.re < -zero_tol && abs(z.im) <= zero_tol).count();
        self.zero_tol = zero_tol;
        self
    }

    pub fn max_abs(&self) -> T {
        self.eigenvalues.iter().map(|z| cabs(*z)).fold(T::zero(), T::max)
    }

    /// Eigenvalue with the largest real part.
    pub fn rightmost(&self) -> Complex<T> {
        *self.eigenvalues.last().expect("nonempty spectrum")
    }

    pub fn max_re(&self) -> T {
        self.rightmost().re
    }

    pub fn min_re(&self) -> T {
        self.eigenvalues[0].re
    }

    pub fn positive_count(&self) -> usize {
        self.eigenvalues.iter().filter(|z| z.re > self.zero_tol && abs(z.im) <= self.zero_tol).count()
    }

    /// Largest imaginary part among eigenvalues sharing the maximal real part.
    pub fn im_at_max(&self) -> T {
        let top = self.max_re();
        let tol = self.zero_tol.max(abs(top) * lit(1e-10));
        self.eigenvalues.iter().filter(|z| abs(z.re - top) <= tol).map(|z| z.im).fold(T::zero(), T::max)
    }
}

/// Default kernel threshold: `1e-8` times the largest eigenvalue magnitude.
pub fn default_zero_tol<T: Real>(scale: T) -> T {
    lit::<T>(1e-8) * scale
}

/// Full eigendecomposition. Symmetric operators use a symmetric solver and
/// report real eigenvalues with eigenvectors; others go through a real Schur
/// form after diagonal balancing.
pub fn spectrum<T: Real>(op: &SpectralOperator<T>, zero_tol: Option<T>) -> Result<SpectrumReport<T>> {
    let dim = op.dim;
    let max_iter = 200 * dim.max(10);
    let (mut eigenvalues, vectors) = if op.symmetric {
        let eig = SymmetricEigen::try_new(op.matrix.clone(), T::default_epsilon(), max_iter)
            .ok_or_else(|| Error::Eigensolver(format!("symmetric QR did not converge for {}", op.origin)))?;
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
        let values = order.iter().map(|&i| Complex::new(eig.eigenvalues[i], T::zero())).collect();
        let vecs = DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
        (values, Some(vecs))
    } else {
        (general_eigenvalues(&op.matrix, op.origin)?, None)
    };
    if eigenvalues.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Eigensolver(format!("non-finite eigenvalue for {}", op.origin)));
    }
    if !op.symmetric {
        eigenvalues.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
    }
    let report = SpectrumReport {
        origin: op.origin,
        k: op.k,
        n: op.n,
        eigenvalues,
        kernel_dim: 0,
        neg_count: 0,
        zero_tol: T::zero(),
        eigvectors: vectors,
    };
    let tol = zero_tol.unwrap_or_else(|| default_zero_tol(report.max_abs()));
    Ok(report.recount(tol))
}

fn general_eigenvalues<T: Real>(m: &DMatrix<T>, origin: Origin) -> Result<Vec<Complex<T>>> {
    let mut a = m.clone();
    balance(&mut a);
    let schur = nalgebra::Schur::try_new(a, T::default_epsilon(), 500 * m.nrows().max(10))
        .ok_or_else(|| Error::Eigensolver(format!("Schur iteration did not converge for {origin}")))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Diagonal similarity by powers of two equalizing row and column norms.
fn balance<T: Real>(a: &mut DMatrix<T>) {
    let n = a.nrows();
    let radix = lit::<T>(2.0);
    let radix2 = radix * radix;
    for _ in 0..100 {
        let mut done = true;
        for i in 0..n {
            let mut col = T::zero();
            let mut row = T::zero();
            for j in 0..n {
                if j != i {
                    col += abs(a[(j, i)]);
                    row += abs(a[(i, j)]);
                }
            }
            if col == T::zero() || row == T::zero() {
                continue;
            }
            let total = col + row;
            let mut f = T::one();
            let mut g = row / radix;
            while col < g {
                f *= radix;
                col *= radix2;
            }
            g = row * radix;
            while col > g {
                f /= radix;
                col /= radix2;
            }
            if (col + row) / f < lit::<T>(0.95) * total {
                done = false;
                let inv = T::one() / f;
                for j in 0..n {
                    a[(i, j)] *= inv;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Eigenvector of a general operator for a computed eigenvalue, by inverse
/// iteration with a slightly perturbed shift. Normalized to unit 2-norm.
pub fn eigenvector<T: Real>(op: &SpectralOperator<T>, lambda: Complex<T>) -> Result<DVector<Complex<T>>> {
    let dim = op.dim;
    let norm = op.matrix.iter().fold(T::zero(), |m, &x| m.max(abs(x))).max(T::one());
    let delta = T::eps().sqrt() * lit::<T>(1e-3) * norm;
    let shift = lambda + Complex::new(delta, delta);
    let a = DMatrix::from_fn(dim, dim, |i, j| {
        let v = Complex::new(op.matrix[(i, j)], T::zero());
        if i == j {
            v - shift
        } else {
            v
        }
    });
    let lu = a.lu();
    // Deterministic start with components in every mode.
    let mut x = DVector::from_fn(dim, |i, _| {
        let t = from_usize::<T>(i + 1);
        Complex::new(T::one() + (t * lit(0.618_033_988_7)).sin(), (t * lit(0.414_213_562_4)).cos())
    });
    for _ in 0..4 {
        let y =
            lu.solve(&x).ok_or_else(|| Error::Eigensolver(format!("inverse iteration failed for {}", op.origin)))?;
        let nrm = y.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt();
        if !(nrm > T::zero()) || !nrm.is_finite() {
            return Err(Error::Eigensolver("inverse iteration produced a null vector".into()));
        }
        x = y.map(|z| z.unscale(nrm));
    }
    // Fix the phase so the largest component is real and positive.
    let (imax, _) = x.iter().enumerate().fold((0, T::zero()), |(bi, bm), (i, z)| {
        let m = z.norm_sqr();
        if m > bm {
            (i, m)
        } else {
            (bi, bm)
        }
    });
    let z = x[imax];
    let phase = z.conj().unscale(cabs(z));
    Ok(x.map(|v| v * phase))
}

/// Relative norm of the projection of `phi'` onto the numerical kernel of `L`.
pub fn kernel_alignment<T: Real>(lin: &Linearization<T>) -> Result<(usize, T)> {
    let report = spectrum(&lin.assemble_l(), None)?;
    let vecs = report.eigvectors.as_ref().expect("symmetric spectrum carries eigenvectors");
    let dphi = lin.derivative_coefficients();
    let total = dphi.norm();
    if total == T::zero() {
        return Ok((report.kernel_dim, T::zero()));
    }
    let mut proj = T::zero();
    for (i, z) in report.eigenvalues.iter().enumerate() {
        if cabs(*z) <= report.zero_tol {
            let c = vecs.column(i).dot(&dphi);
            proj += c * c;
        }
    }
    Ok((report.kernel_dim, proj.sqrt() / total))
}

/// Fraction of the ground state of `QL` carried by odd modes; near zero for
/// an even ground state about the canonical phase.
pub fn ground_state_oddness<T: Real>(lin: &Linearization<T>) -> Result<T> {
    let report = spectrum(&lin.assemble_ql(), None)?;
    let vecs = report.eigvectors.as_ref().expect("symmetric spectrum carries eigenvectors");
    let v = vecs.column(0);
    let odd: T = (0..v.len()).filter(|&i| lin.zero_mean.is_odd(i)).map(|i| v[i] * v[i]).fold(T::zero(), |a, b| a + b);
    Ok(odd.sqrt() / v.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analysis_inverts_synthesis() {
        let basis = FourierBasis::<f64>::new(16, 3.0, Basis::Full).unwrap();
        let a = DVector::from_fn(16, |i, _| (i as f64 * 0.7).sin());
        let u = basis.synthesize(&a);
        let b = basis.analyze(&u);
        assert!((a - b).amax() < 1e-13);
    }

    #[test]
    fn multiplication_by_one_is_identity() {
        for kind in [Basis::Full, Basis::ZeroMean] {
            let basis = FourierBasis::<f64>::new(12, 2.0, kind).unwrap();
            let m = basis.multiplication(&[1.0; 12]);
            let id = DMatrix::<f64>::identity(basis.dim(), basis.dim());
            assert!((m - id).amax() < 1e-14);
        }
    }

    #[test]
    fn multiplication_matches_explicit_product() {
        let n = 10;
        let basis = FourierBasis::<f64>::new(n, 1.0, Basis::Full).unwrap();
        let v: Vec<f64> = (0..n).map(|j| 1.0 + (j as f64).cos() * 0.3 + (j as f64 * 2.1).sin()).collect();
        let phi = DMatrix::from_fn(n, n, |r, c| {
            let mut e = DVector::zeros(n);
            e[c] = 1.0;
            basis.synthesize(&e)[r]
        });
        let explicit = phi.transpose() * DMatrix::from_diagonal(&DVector::from_vec(v.clone())) * &phi;
        assert!((explicit - basis.multiplication(&v)).amax() < 1e-13);
    }

    #[test]
    fn derivative_pair_inverts() {
        let (d, di) = derivative_ops(5.0f64, 16).unwrap();
        let id = DMatrix::<f64>::identity(14, 14);
        assert!((&d * &di - &id).amax() < 1e-15);
        assert!((&di * &d - id).amax() < 1e-15);
    }

    #[test]
    fn balancing_keeps_eigenvalues() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 1e4, 0.0, 1e-4, 2.0, 3.0, 0.0, 1e-3, 3.0f64]);
        let mut b = m.clone();
        balance(&mut b);
        let e1 = general_eigenvalues(&m, Origin::P).unwrap();
        let mut e2 = general_eigenvalues(&b, Origin::P).unwrap();
        e2.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        let mut e1 = e1;
        e1.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        for (a, b) in e1.iter().zip(&e2) {
            assert!((a - b).norm() < 1e-10);
        }
    }
}
