//! Negative-eigenvalue counting for `QL` through the sign of `(L^{-1} 1, 1)`.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{abs, cabs, from_usize, lit, to_f64, Real};
use crate::spectral::{kernel_alignment, spectrum, Linearization};
use crate::wave::{Branch, PeriodicWave, WaveSolver};

/// Pseudo-inverse solution of `L u = f` orthogonal to the numerical kernel.
#[derive(Debug, Clone)]
pub struct DeflatedSolve<T> {
    /// `u` on the operator grid.
    pub u: Vec<T>,
    /// `||L u - f_perp|| / ||f||` in the discrete `L^2` norm, where
    /// `f_perp` is `f` with its kernel component removed.
    pub residual: T,
    /// Norm of the component of `f` along the kernel, which was discarded.
    pub kernel_component: T,
    pub kernel_dim: usize,
}

/// Minimum-norm least-squares solution of `L u = f`: the kernel component of
/// `f` is dropped and `u` is orthogonal to the kernel.
///
/// The kernel may be empty (equilibria off resonance) or spanned by `phi'`;
/// anything else is a solvability error.
pub fn pseudo_solve<T: Real>(lin: &Linearization<T>, rhs: &[T]) -> Result<DeflatedSolve<T>> {
    let report = spectrum(&lin.assemble_l(), None)?;
    if report.kernel_dim > 1 {
        return Err(Error::Solvability(format!("kernel of L has dimension {}, expected at most 1", report.kernel_dim)));
    }
    if report.kernel_dim == 1 {
        let (_, alignment) = kernel_alignment(lin)?;
        if alignment < T::one() - lit(1e-6) {
            return Err(Error::Solvability(format!(
                "kernel of L is not spanned by phi' (alignment {:.3e})",
                to_f64(alignment)
            )));
        }
    }
    let vecs = report.eigvectors.as_ref().expect("symmetric spectrum carries eigenvectors");
    let mut f = lin.full.analyze(rhs);
    let fnorm = f.norm();
    let mut u = DVector::zeros(f.len());
    let mut along = T::zero();
    for (i, z) in report.eigenvalues.iter().enumerate() {
        if cabs(*z) <= report.zero_tol {
            let v = vecs.column(i);
            let proj = v.dot(&f);
            along += proj * proj;
            f -= v * proj;
        }
    }
    for (i, z) in report.eigenvalues.iter().enumerate() {
        if cabs(*z) > report.zero_tol {
            let v = vecs.column(i);
            u += v * (v.dot(&f) / z.re);
        }
    }
    let residual = if fnorm == T::zero() { T::zero() } else { (&lin.l * &u - &f).norm() / fnorm };
    if !(residual < lit::<T>(1e-8).max(T::eps() * lit(1e4))) {
        return Err(Error::Solvability(format!("deflated solve residual {:.3e} above tolerance", to_f64(residual))));
    }
    Ok(DeflatedSolve {
        u: lin.full.synthesize(&u),
        residual,
        kernel_component: along.sqrt(),
        kernel_dim: report.kernel_dim,
    })
}

/// `u` with `L u = 1`. The constant must be orthogonal to the kernel.
pub fn solve_l_inverse_one<T: Real>(lin: &Linearization<T>) -> Result<DeflatedSolve<T>> {
    let solve = pseudo_solve(lin, &vec![T::one(); lin.n])?;
    // |1| in the coefficient norm is sqrt(N)
    let scale = from_usize::<T>(lin.n).sqrt();
    if solve.kernel_component > lit::<T>(1e-8) * scale {
        return Err(Error::Solvability(format!(
            "the constant has component {:.3e} along the kernel",
            to_f64(solve.kernel_component)
        )));
    }
    Ok(solve)
}

/// Counting data for `n(R(0))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexReport<T> {
    /// `(L^{-1} 1, 1)` in `L^2(0, L)`.
    pub q: T,
    pub n0: usize,
    pub z0: usize,
    pub n_l: usize,
    pub n_r0_formula: usize,
    pub n_r0_direct: usize,
    pub consistent: bool,
    /// `|q|` at or below this is treated as zero.
    pub zero_band: T,
}

/// Band around zero inside which `q` counts as zero: `1e-6 L`.
pub fn q_zero_band<T: Real>(period: T) -> T {
    lit::<T>(1e-6) * period
}

/// `(n0, z0)` from the sign of `q`.
pub fn classify_q<T: Real>(q: T, band: T) -> (usize, usize) {
    if abs(q) <= band {
        (0, 1)
    } else if q < T::zero() {
        (1, 0)
    } else {
        (0, 0)
    }
}

/// Evaluates `q`, the index correction and both counts of `n(R(0))`.
pub fn index_quantity<T: Real>(lin: &Linearization<T>) -> Result<IndexReport<T>> {
    let solve = solve_l_inverse_one(lin)?;
    let h = lin.period / from_usize::<T>(lin.n);
    let q = solve.u.iter().fold(T::zero(), |a, &x| a + x) * h;
    let band = q_zero_band(lin.period);
    let (n0, z0) = classify_q(q, band);
    let n_l = spectrum(&lin.assemble_l(), None)?.neg_count;
    let n_r0_direct = spectrum(&lin.assemble_ql(), None)?.neg_count;
    let n_r0_formula = n_l.saturating_sub(n0 + z0);
    Ok(IndexReport {
        q,
        n0,
        z0,
        n_l,
        n_r0_formula,
        n_r0_direct,
        consistent: n_l >= n0 + z0 && n_r0_formula == n_r0_direct,
        zero_band: band,
    })
}

/// One sample of a threshold scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow<T> {
    pub c: T,
    pub q: T,
    pub n_r0: usize,
}

/// Result of locating the sign change of `q(c)` on the sign-changing branch.
#[derive(Debug, Clone)]
pub struct ThresholdScan<T> {
    pub p: T,
    pub period: T,
    /// Grid samples followed by bisection samples, sorted by `c`.
    pub rows: Vec<ScanRow<T>>,
    pub c_star: T,
    /// Published threshold for `p = 2` or `p = 4`, if any.
    pub reference: Option<T>,
}

impl<T: Real> ThresholdScan<T> {
    pub fn relative_error(&self) -> Option<T> {
        self.reference.map(|r| abs(self.c_star - r) / r)
    }
}

/// `56.277 / L0^2` for `p = 2`, `43.665 / L0^2` for `p = 4`.
pub fn reference_threshold<T: Real>(p: T, period: T) -> Option<T> {
    let constant = match to_f64(p) {
        2.0 => 56.277,
        4.0 => 43.665,
        _ => return None,
    };
    Some(lit::<T>(constant) / (period * period))
}

/// Settings for [`threshold_scan`].
#[derive(Debug, Clone)]
pub struct ScanSettings<T> {
    pub solver: WaveSolver<T>,
    /// Relative bracket width at which bisection stops.
    pub rel_width: T,
}

impl<T: Real> Default for ScanSettings<T> {
    fn default() -> Self {
        Self { solver: WaveSolver::default(), rel_width: lit(1e-3) }
    }
}

fn sample<T: Real>(settings: &ScanSettings<T>, p: T, period: T, c: T) -> Result<ScanRow<T>> {
    let wave: PeriodicWave<T> = settings.solver.solve(p, c, period, Branch::SignChanging)?;
    let lin = Linearization::new(&wave, wave.len())?;
    let report = index_quantity(&lin)?;
    Ok(ScanRow { c, q: report.q, n_r0: report.n_r0_direct })
}

/// Samples `q(c)` on `steps` evenly spaced speeds in `[c_lo, c_hi]` (in
/// parallel, results kept in order), then bisects the first sign change.
pub fn threshold_scan<T: Real>(
    p: T,
    period: T,
    c_lo: T,
    c_hi: T,
    steps: usize,
    settings: &ScanSettings<T>,
) -> Result<ThresholdScan<T>> {
    if !(c_lo > T::zero() && c_lo < c_hi) || steps < 2 {
        return Err(Error::InvalidParams(format!(
            "scan range needs 0 < c_lo < c_hi and at least 2 steps, got [{c_lo}, {c_hi}] with {steps}"
        )));
    }
    let span = c_hi - c_lo;
    let cs: Vec<T> = (0..steps).map(|i| c_lo + span * from_usize::<T>(i) / from_usize::<T>(steps - 1)).collect();
    let mut rows = cs.par_iter().map(|&c| sample(settings, p, period, c)).collect::<Result<Vec<_>>>()?;
    let band = q_zero_band(period);
    let sign = |q: T| {
        if abs(q) <= band {
            0
        } else if q < T::zero() {
            -1
        } else {
            1
        }
    };
    let Some(i) = rows.windows(2).position(|w| sign(w[0].q) * sign(w[1].q) < 0 || sign(w[1].q) == 0) else {
        return Err(Error::NoSignChange { lo: to_f64(c_lo), hi: to_f64(c_hi) });
    };
    let (mut lo, mut hi) = (rows[i], rows[i + 1]);
    let mut extra = Vec::new();
    while sign(hi.q) != 0 && (hi.c - lo.c) > settings.rel_width * abs(hi.c) {
        let mid = sample(settings, p, period, (lo.c + hi.c) * lit(0.5))?;
        extra.push(mid);
        if sign(mid.q) == 0 {
            hi = mid;
            break;
        }
        if sign(mid.q) == sign(lo.q) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c_star = if sign(hi.q) == 0 {
        hi.c
    } else {
        // Linear interpolation of q inside the final bracket.
        lo.c - lo.q * (hi.c - lo.c) / (hi.q - lo.q)
    };
    rows.extend(extra);
    rows.sort_by(|a, b| a.c.partial_cmp(&b.c).unwrap());
    Ok(ThresholdScan { p, period, rows, c_star, reference: reference_threshold(p, period) })
}
