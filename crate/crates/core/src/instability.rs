//! Transverse instability: the cutoff `k0`, the eigenvalue sweep of
//! `D (QL + k^2 I)`, the verdict, and a time-domain cross-check.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{self, Transform};
use crate::index::{index_quantity, IndexReport};
use crate::scalar::{abs, cabs, from_usize, lit, to_f64, Real};
use crate::spectral::{spectrum, Linearization, SpectrumReport};
use crate::wave::{Branch, PeriodicWave, WaveSolver};

/// `f(k)`, the smallest eigenvalue of `R(k)`.
pub fn f_of_k<T: Real>(lin: &Linearization<T>, k: T) -> Result<T> {
    Ok(spectrum(&lin.assemble_r(k), None)?.min_re())
}

/// The cutoff wavenumber and the checks made at it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffReport<T> {
    pub k0: T,
    /// `f(0)`.
    pub f0: T,
    pub f_at_k0: T,
    pub kernel_r: usize,
    pub kernel_p: usize,
    /// Gap between the two lowest eigenvalues of `R(0)`.
    pub gap: T,
    /// `max |eig QL|`.
    pub scale: T,
}

/// `k0 = sqrt(-f(0))`, verified to be a simple root of `f` with one-dimensional
/// kernels of `R(k0)` and `P(k0)`.
pub fn find_k0<T: Real>(lin: &Linearization<T>) -> Result<CutoffReport<T>> {
    let base = spectrum(&lin.assemble_ql(), None)?;
    let scale = base.max_abs();
    let f0 = base.min_re();
    if !(f0 < -base.zero_tol) {
        return Err(Error::NotApplicable(format!(
            "f(0) = {:.6e} is not negative, so there is no transverse cutoff",
            to_f64(f0)
        )));
    }
    let k0 = (-f0).sqrt();
    let at = spectrum(&lin.assemble_r(k0), None)?;
    let f_at_k0 = at.min_re();
    if !(abs(f_at_k0) < lit::<T>(1e-8) * scale) {
        return Err(Error::Mismatch { residual: to_f64(abs(f_at_k0)), tolerance: to_f64(lit::<T>(1e-8) * scale) });
    }
    if at.kernel_dim != 1 {
        return Err(Error::DegenerateKernel(at.kernel_dim));
    }
    let kernel_p = spectrum(&lin.assemble_p(k0), None)?.kernel_dim;
    if kernel_p != 1 {
        return Err(Error::DegenerateKernel(kernel_p));
    }
    let gap = base.eigenvalues[1].re - f0;
    Ok(CutoffReport { k0, f0, f_at_k0, kernel_r: at.kernel_dim, kernel_p, gap, scale })
}

/// Spectrum of `D (QL + k^2 I)`.
pub fn transverse_spectrum<T: Real>(lin: &Linearization<T>, k: T) -> Result<SpectrumReport<T>> {
    spectrum(&lin.assemble_transverse(k), None)
}

/// Sampling plan for the `k` sweep.
#[derive(Debug, Clone)]
pub struct KGrid {
    /// Log-spaced points on `[k0/100, k0)`.
    pub below: usize,
    /// Extra points `k0 (1 - 10^-j)` approaching the cutoff.
    pub approach: Vec<i32>,
    /// Linear points on `(k0, 2 k0]`.
    pub above: usize,
}

impl Default for KGrid {
    fn default() -> Self {
        Self { below: 40, approach: vec![2, 3, 4], above: 10 }
    }
}

impl KGrid {
    pub fn samples<T: Real>(&self, k0: T) -> Vec<T> {
        let mut ks = Vec::with_capacity(self.below + self.approach.len() + self.above);
        let lo = (k0 / lit(100.0)).ln();
        let hi = k0.ln();
        for i in 0..self.below {
            let t = from_usize::<T>(i) / from_usize::<T>(self.below);
            ks.push((lo + (hi - lo) * t).exp());
        }
        for &j in &self.approach {
            ks.push(k0 * (T::one() - lit::<T>(10f64.powi(-j))));
        }
        for i in 1..=self.above {
            ks.push(k0 * (T::one() + from_usize::<T>(i) / from_usize::<T>(self.above)));
        }
        ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ks.dedup();
        ks
    }
}

/// Largest real part of the transverse spectrum across `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthCurve<T> {
    pub k_samples: Vec<T>,
    pub max_re_lambda: Vec<T>,
    /// Imaginary part of the rightmost eigenvalue at each sample.
    pub im_at_max: Vec<T>,
    pub lambda_at_max: Complex<T>,
    pub k_at_max: T,
    pub k0: T,
}

impl<T: Real> GrowthCurve<T> {
    /// Largest growth among samples strictly inside `(0, k0)`.
    pub fn max_below_cutoff(&self) -> T {
        self.k_samples
            .iter()
            .zip(&self.max_re_lambda)
            .filter(|(&k, _)| k > T::zero() && k < self.k0)
            .map(|(_, &g)| g)
            .fold(T::min_value().unwrap(), T::max)
    }

    /// Largest growth among samples at or beyond `k0`.
    pub fn max_beyond_cutoff(&self) -> Option<T> {
        self.k_samples.iter().zip(&self.max_re_lambda).filter(|(&k, _)| k >= self.k0).map(|(_, &g)| g).reduce(T::max)
    }
}

/// Sweeps the transverse spectrum over `ks` (in parallel, in order).
pub fn growth_curve<T: Real>(lin: &Linearization<T>, k0: T, ks: &[T]) -> Result<GrowthCurve<T>> {
    let reports =
        ks.par_iter().map(|&k| transverse_spectrum(lin, k).map(|s| s.rightmost())).collect::<Result<Vec<_>>>()?;
    let (imax, lambda_at_max) =
        reports
            .iter()
            .enumerate()
            .fold((0, reports[0]), |(bi, bz), (i, z)| if z.re > bz.re { (i, *z) } else { (bi, bz) });
    Ok(GrowthCurve {
        k_samples: ks.to_vec(),
        max_re_lambda: reports.iter().map(|z| z.re).collect(),
        im_at_max: reports.iter().map(|z| abs(z.im)).collect(),
        lambda_at_max,
        k_at_max: ks[imax],
        k0,
    })
}

/// Confirms `(QL + k^2) w = lambda D^{-1} w` for an eigenpair of
/// `D (QL + k^2)`; returns the relative residual.
pub fn generalized_check<T: Real>(
    lin: &Linearization<T>,
    k: T,
    lambda: Complex<T>,
    w: &DVector<Complex<T>>,
    scale: T,
) -> Result<T> {
    let r = lin.assemble_r(k).matrix.map(|x| Complex::new(x, T::zero()));
    let di = lin.d_inv.map(|x| Complex::new(x, T::zero()));
    let lhs = &r * w;
    let rhs = (&di * w) * lambda;
    let norm = |v: &DVector<Complex<T>>| v.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt();
    let wn = norm(w);
    let res = norm(&(lhs - rhs));
    let tol = lit::<T>(1e-6) * scale * wn;
    if !(res < tol) {
        return Err(Error::Mismatch { residual: to_f64(res), tolerance: to_f64(tol) });
    }
    Ok(if wn > T::zero() { res / wn } else { res })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    UnstableByTheorem,
    UnstableNumericalEvidence,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::UnstableByTheorem => "unstable_by_theorem",
            Verdict::UnstableNumericalEvidence => "unstable_numerical_evidence",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Which argument the verdict rests on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    #[serde(rename = "positive-wave")]
    PositiveWave,
    #[serde(rename = "sign-changing-nR0=1")]
    SignChangingSimple,
    #[serde(rename = "k0-scan")]
    K0Scan,
}

impl Criterion {
    pub fn as_str(&self) -> &'static str {
        match self {
            Criterion::PositiveWave => "positive-wave",
            Criterion::SignChangingSimple => "sign-changing-nR0=1",
            Criterion::K0Scan => "k0-scan",
        }
    }
}

/// How the growth threshold is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthScale {
    /// `max |eig QL|`, which grows like `N^2` with the grid.
    Spectral,
    /// `|f(0)| = k0^2`, intrinsic to the wave.
    Cutoff,
}

/// Settings for [`verdict`].
#[derive(Debug, Clone)]
pub struct VerdictSettings<T> {
    pub k_grid: KGrid,
    /// Growth counts as instability above `growth_rel * scale`.
    pub growth_rel: T,
    pub growth_scale: GrowthScale,
    /// Relative speed step for `d/dc int phi^2`; sign-changing waves only.
    pub mass_step: Option<T>,
    pub solver: WaveSolver<T>,
}

impl<T: Real> Default for VerdictSettings<T> {
    fn default() -> Self {
        Self {
            k_grid: KGrid::default(),
            growth_rel: lit(1e-4),
            growth_scale: GrowthScale::Spectral,
            mass_step: Some(lit(1e-3)),
            solver: WaveSolver::default(),
        }
    }
}

/// Outcome of the instability analysis for one wave.
#[derive(Debug, Clone, PartialEq)]
pub struct InstabilityVerdict<T> {
    pub verdict: Verdict,
    pub criterion: Criterion,
    pub k0: T,
    pub growth: GrowthCurve<T>,
    pub n_r0: usize,
    pub index: IndexReport<T>,
    /// Growth threshold actually applied.
    pub threshold: T,
    /// `max |eig QL|`.
    pub spectral_scale: T,
    /// `d/dc int_0^L phi^2` by central differences, when computed.
    pub dmass_dc: Option<T>,
}

/// Runs the full pipeline: index count, cutoff, sweep and classification.
pub fn verdict<T: Real>(
    wave: &PeriodicWave<T>,
    n: usize,
    settings: &VerdictSettings<T>,
) -> Result<InstabilityVerdict<T>> {
    let lin = Linearization::new(wave, n)?;
    let index = index_quantity(&lin)?;
    let n_r0 = index.n_r0_direct;
    let ql = spectrum(&lin.assemble_ql(), None)?;
    let spectral_scale = ql.max_abs();
    let dmass_dc = match (wave.params.branch, settings.mass_step) {
        (Branch::SignChanging, Some(h)) => Some(mass_derivative(wave, h, &settings.solver)?),
        _ => None,
    };
    let (k0, ks) = if n_r0 == 0 {
        (T::zero(), vec![T::zero()])
    } else {
        let k0 = if n_r0 == 1 { find_k0(&lin)?.k0 } else { (-ql.min_re()).sqrt() };
        let mut ks = settings.k_grid.samples(k0);
        if n_r0 >= 2 {
            ks.insert(0, T::zero());
        }
        (k0, ks)
    };
    let growth = growth_curve(&lin, k0, &ks)?;
    let scale = match settings.growth_scale {
        GrowthScale::Spectral => spectral_scale,
        GrowthScale::Cutoff if k0 > T::zero() => k0 * k0,
        GrowthScale::Cutoff => T::one(),
    };
    let threshold = settings.growth_rel * scale;
    let (criterion, verdict) = match n_r0 {
        0 => (Criterion::K0Scan, Verdict::Inconclusive),
        1 => {
            let criterion = match wave.params.branch {
                Branch::Positive => Criterion::PositiveWave,
                Branch::SignChanging => Criterion::SignChangingSimple,
            };
            let v =
                if growth.max_below_cutoff() > threshold { Verdict::UnstableByTheorem } else { Verdict::Inconclusive };
            (criterion, v)
        }
        _ => {
            let top = growth.max_re_lambda.iter().copied().fold(T::min_value().unwrap(), T::max);
            let v = if top > threshold { Verdict::UnstableNumericalEvidence } else { Verdict::Inconclusive };
            (Criterion::K0Scan, v)
        }
    };
    Ok(InstabilityVerdict { verdict, criterion, k0, growth, n_r0, index, threshold, spectral_scale, dmass_dc })
}

/// Central difference of the mass across neighbouring waves of the same
/// period and branch, with speeds `c (1 +- h)`.
pub fn mass_derivative<T: Real>(wave: &PeriodicWave<T>, h: T, solver: &WaveSolver<T>) -> Result<T> {
    let p = wave.params;
    let dc = p.c * h;
    let up = solver.solve(p.p, p.c + dc, p.period, p.branch)?;
    let down = solver.solve(p.p, p.c - dc, p.period, p.branch)?;
    Ok((up.mass() - down.mass()) / (dc + dc))
}

/// Linearized evolution record.
#[derive(Debug, Clone, PartialEq)]
pub struct Evolution<T> {
    /// Least-squares slope of `log ||w||` on `[T/2, T]`.
    pub rate: T,
    pub dt: T,
    pub steps: usize,
    pub horizon: T,
    pub times: Vec<T>,
    pub log_norms: Vec<T>,
}

/// Largest accepted step: `0.5 / (k_max max |phi^p|)`, the reciprocal of the
/// largest symbol of the variable-coefficient part `D (phi^p .)`.
pub fn evolution_dt_bound<T: Real>(lin: &Linearization<T>) -> T {
    let kmax = fourier::wavenumber((lin.n / 2 - 1) as isize, lin.period);
    let vmax = fourier::max_abs(&lin.potential).max(T::eps());
    lit::<T>(0.5) / (kmax * vmax)
}

/// `20 / max(expected, 0.1)`.
pub fn default_horizon<T: Real>(expected: T) -> T {
    lit::<T>(20.0) / expected.max(lit(0.1))
}

/// Integrates `w_t = D (L + k^2) w` on zero-mean functions by the implicit
/// midpoint rule.
///
/// The generator is applied through FFTs on the grid, with the constant
/// coefficient part `-d^2 + c + k^2` diagonal in Fourier space, and never
/// touches the Galerkin matrices used by the eigensolver. The midpoint rule
/// conserves the discrete energy `(R(k) w, w)`, so the scheme adds no growth
/// of its own; its rate error is `O((dt lambda)^2)`.
pub fn evolve_linearized<T: Real>(
    lin: &Linearization<T>,
    k: T,
    w0: &[T],
    horizon: T,
    dt: Option<T>,
) -> Result<Evolution<T>> {
    let n = lin.n;
    if w0.len() != n {
        return Err(Error::InvalidParams(format!("initial data has {} points, grid has {n}", w0.len())));
    }
    let mean = w0.iter().fold(T::zero(), |a, &b| a + b) / from_usize::<T>(n);
    if abs(mean) > lit::<T>(1e-8) * fourier::max_abs(w0).max(T::eps()) {
        return Err(Error::InvalidParams(format!("initial data has mean {:.3e}", to_f64(mean))));
    }
    if !(horizon > T::zero()) {
        return Err(Error::InvalidParams("time horizon must be positive".into()));
    }
    let bound = evolution_dt_bound(lin);
    let dt_req = dt.unwrap_or(bound);
    if !(dt_req > T::zero()) || dt_req > bound {
        return Err(Error::IntegratorStability { dt: to_f64(dt_req), bound: to_f64(bound) });
    }
    let steps = (horizon / dt_req).ceil().to_usize().unwrap_or(usize::MAX).max(1);
    let dt = horizon / from_usize::<T>(steps);
    let tr = Transform::new(n);
    let zero = Complex::new(T::zero(), T::zero());
    // wavenumber per FFT slot; the mean and Nyquist slots are removed
    let kappa: Vec<Option<T>> =
        (0..n).map(|j| (j != 0 && j != n / 2).then(|| fourier::wavenumber(fourier::mode(j, n), lin.period))).collect();
    let shift = lin.c + k * k;
    let project = |u: &[T]| -> Vec<Complex<T>> {
        let mut c = tr.forward(u);
        for (z, kap) in c.iter_mut().zip(&kappa) {
            if kap.is_none() {
                *z = zero;
            }
        }
        c
    };
    let generator = |u: &[T]| -> Vec<T> {
        let c = project(u);
        let up = tr.inverse(&c);
        let vu: Vec<T> = up.iter().zip(&lin.potential).map(|(&a, &v)| a * v).collect();
        let cv = tr.forward(&vu);
        let out: Vec<Complex<T>> = (0..n)
            .map(|j| match kappa[j] {
                Some(kap) => (c[j].scale(kap * kap + shift) - cv[j]) * Complex::new(T::zero(), kap),
                None => zero,
            })
            .collect();
        tr.inverse(&out)
    };
    let mut m = DMatrix::zeros(n, n);
    let mut unit = vec![T::zero(); n];
    for j in 0..n {
        unit[j] = T::one();
        m.set_column(j, &DVector::from_vec(generator(&unit)));
        unit[j] = T::zero();
    }
    let half = dt * lit(0.5);
    let id = DMatrix::<T>::identity(n, n);
    let step = (&id - &m * half)
        .lu()
        .solve(&(&id + &m * half))
        .ok_or(Error::IntegratorStability { dt: to_f64(dt), bound: to_f64(bound) })?;
    let mut w = DVector::from_vec(tr.inverse(&project(w0)));
    let n0 = w.norm();
    if n0 == T::zero() {
        return Err(Error::InvalidParams("initial data vanishes on the zero-mean modes".into()));
    }
    w /= n0;
    let mut log_offset = T::zero();
    let mut times = vec![T::zero()];
    let mut log_norms = vec![T::zero()];
    for i in 1..=steps {
        w = &step * &w;
        let nw = w.norm();
        if !nw.is_finite() || nw == T::zero() {
            return Err(Error::IntegratorStability { dt: to_f64(dt), bound: to_f64(bound) });
        }
        log_offset += nw.ln();
        w /= nw;
        times.push(dt * from_usize::<T>(i));
        log_norms.push(log_offset);
    }
    let rate = fit_slope(&times, &log_norms, horizon * lit(0.5));
    Ok(Evolution { rate, dt, steps, horizon, times, log_norms })
}

/// Least-squares slope of `y(t)` over `t >= from`.
fn fit_slope<T: Real>(t: &[T], y: &[T], from: T) -> T {
    let pts: Vec<(T, T)> = t.iter().zip(y).filter(|(&ti, _)| ti >= from).map(|(&a, &b)| (a, b)).collect();
    let m = from_usize::<T>(pts.len());
    let tm = pts.iter().fold(T::zero(), |s, p| s + p.0) / m;
    let ym = pts.iter().fold(T::zero(), |s, p| s + p.1) / m;
    let (num, den) = pts
        .iter()
        .fold((T::zero(), T::zero()), |(n, d), &(ti, yi)| (n + (ti - tm) * (yi - ym), d + (ti - tm) * (ti - tm)));
    num / den
}

/// Real part of the rightmost eigenvector of `D (QL + k^2)` on the grid,
/// a convenient seed for [`evolve_linearized`].
pub fn growing_mode<T: Real>(lin: &Linearization<T>, k: T) -> Result<(Complex<T>, Vec<T>)> {
    let op = lin.assemble_transverse(k);
    let report = spectrum(&op, None)?;
    let lambda = report.rightmost();
    let v = crate::spectral::eigenvector(&op, lambda)?;
    let (re, _) = lin.zero_mean.synthesize_complex(&v);
    if cabs(lambda) == T::zero() {
        return Err(Error::NotApplicable("no growing mode at this k".into()));
    }
    Ok((lambda, re))
}
