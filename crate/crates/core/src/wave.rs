//! Periodic traveling waves: phase-plane classification, the period map
//! `B -> L`, and the collocation solver for `-phi'' + c phi - phi^{p+1}/(p+1) = 0`.
//!
//! Orbits live on level sets of the energy
//! `E(phi, xi) = xi^2/2 + V(phi)` with `V(h) = -c h^2/2 + h^{p+2}/((p+1)(p+2))`.
//! Positive waves circle the center `((p+1)c)^{1/p}` for `B in (B0, 0)`;
//! sign-changing waves (even integer `p`) sit outside the separatrix, `B > 0`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{self, Transform};
use crate::quadrature::AdaptiveQuadrature;
use crate::scalar::{abs, from_usize, lit, to_f64, Power, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Positive,
    SignChanging,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Positive => "positive",
            Branch::SignChanging => "sign-changing",
        }
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" => Ok(Branch::Positive),
            "sign-changing" => Ok(Branch::SignChanging),
            other => {
                Err(Error::InvalidParams(format!("unknown branch {other:?} (expected positive or sign-changing)")))
            }
        }
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Wave parameters together with the energy level of the orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveParams<T> {
    pub p: T,
    pub c: T,
    pub period: T,
    pub branch: Branch,
    /// Energy level `B` of the orbit.
    pub energy: T,
}

impl<T: Real> WaveParams<T> {
    /// Validates the parameter invariants, including the admissible energy
    /// range of the branch.
    pub fn new(p: T, c: T, period: T, branch: Branch, energy: T) -> Result<Self> {
        check_pc(p, c)?;
        if !(period > T::zero() && period.is_finite()) {
            return Err(Error::InvalidParams(format!("period must be positive, got {period}")));
        }
        match branch {
            Branch::Positive => {
                let b0 = energy_floor(p, c);
                if !(energy >= b0 && energy < T::zero()) {
                    return Err(Error::InvalidParams(format!(
                        "positive branch needs B in (B0, 0) = ({b0}, 0), got {energy}"
                    )));
                }
            }
            Branch::SignChanging => {
                if !Power::new(p).is_even_integer() {
                    return Err(Error::InvalidParams(format!("sign-changing branch needs an even integer p, got {p}")));
                }
                if !(energy > T::zero()) {
                    return Err(Error::InvalidParams(format!("sign-changing branch needs B > 0, got {energy}")));
                }
            }
        }
        Ok(Self { p, c, period, branch, energy })
    }
}

fn check_pc<T: Real>(p: T, c: T) -> Result<()> {
    if !(p > T::zero() && p.is_finite()) {
        return Err(Error::InvalidParams(format!("p must be positive, got {p}")));
    }
    if !(c > T::zero() && c.is_finite()) {
        return Err(Error::InvalidParams(format!("c must be positive, got {c}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquilibriumKind {
    Saddle,
    Center,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium<T> {
    pub phi: T,
    pub kind: EquilibriumKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePortrait<T> {
    pub equilibria: Vec<Equilibrium<T>>,
    /// Energy of the centers, the lower end of the positive family.
    pub energy_floor: T,
    pub separatrix_energy: T,
}

/// `((p+1)c)^{1/p}`, the positive center.
pub fn center_amplitude<T: Real>(p: T, c: T) -> T {
    ((p + T::one()) * c).powf(T::one() / p)
}

/// `B0 = -p (p+1)^{2/p} c^{(p+2)/p} / (2(p+2))`.
pub fn energy_floor<T: Real>(p: T, c: T) -> T {
    let two = lit::<T>(2.0);
    -p * (p + T::one()).powf(two / p) * c.powf((p + two) / p) / (two * (p + two))
}

/// Small-amplitude period limit `2 pi / sqrt(p c)` from linearizing at the center.
pub fn alpha<T: Real>(p: T, c: T) -> T {
    T::two_pi() / (p * c).sqrt()
}

/// The potential `V(h)`; the energy is `xi^2/2 + V(h)`.
pub fn potential<T: Real>(p: T, c: T, h: T) -> T {
    let pw = Power::new(p);
    let two = lit::<T>(2.0);
    -c * h * h / two + pw.pow(h, 2) / ((p + T::one()) * (p + two))
}

/// Energy `E(phi, xi)` of a phase-plane point.
pub fn energy<T: Real>(p: T, c: T, phi: T, xi: T) -> T {
    xi * xi * lit(0.5) + potential(p, c, phi)
}

/// Equilibria of `phi' = xi, xi' = c phi - phi^{p+1}/(p+1)`.
pub fn classify_phase_plane<T: Real>(p: T, c: T) -> Result<PhasePortrait<T>> {
    check_pc(p, c)?;
    let star = center_amplitude(p, c);
    let mut equilibria = vec![
        Equilibrium { phi: T::zero(), kind: EquilibriumKind::Saddle },
        Equilibrium { phi: star, kind: EquilibriumKind::Center },
    ];
    if Power::new(p).is_even_integer() {
        equilibria.insert(0, Equilibrium { phi: -star, kind: EquilibriumKind::Center });
    }
    Ok(PhasePortrait { equilibria, energy_floor: energy_floor(p, c), separatrix_energy: T::zero() })
}

/// Bisection to full working precision; `f(lo)` and `f(hi)` must differ in sign.
pub(crate) fn bisect<T: Real, F: FnMut(T) -> T>(mut f: F, mut lo: T, mut hi: T) -> T {
    let mut flo = f(lo);
    for _ in 0..400 {
        let mid = (lo + hi) * lit(0.5);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        let fm = f(mid);
        if fm == T::zero() {
            return mid;
        }
        if (fm > T::zero()) == (flo > T::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * lit(0.5)
}

/// Consecutive roots `b1 < b2` of `-2h^{p+2}/((p+1)(p+2)) + c h^2 + 2B`
/// bracketing the orbit at energy `B`.
pub fn turning_points<T: Real>(p: T, c: T, b: T) -> Result<(T, T)> {
    check_pc(p, c)?;
    let b0 = energy_floor(p, c);
    let reject = |reason: &str| Error::NoPeriodicOrbit { b: to_f64(b), reason: reason.to_string() };
    if !b.is_finite() {
        return Err(reject("energy is not finite"));
    }
    if b <= b0 {
        return Err(reject("energy at or below the center level B0"));
    }
    if b == T::zero() {
        return Err(reject("B = 0 is the separatrix (solitary wave), not a periodic orbit"));
    }
    let g = |h: T| potential(p, c, h) - b;
    let star = center_amplitude(p, c);
    let two = lit::<T>(2.0);
    // V vanishes again at ((p+1)(p+2)c/2)^{1/p}.
    let vzero = ((p + T::one()) * (p + two) * c / two).powf(T::one() / p);
    // V(star) = B0 < B, so g < 0 at the center; grow past the outer root.
    let mut hi = vzero;
    let mut guard = 0;
    while g(hi) <= T::zero() {
        hi *= two;
        guard += 1;
        if guard > 2000 || !hi.is_finite() {
            return Err(reject("root bracketing failed"));
        }
    }
    let b2 = bisect(g, star, hi);
    if b < T::zero() {
        let b1 = bisect(g, T::zero(), star);
        if !(b1 > T::zero() && b1 < b2) {
            return Err(reject("root bracketing failed"));
        }
        Ok((b1, b2))
    } else {
        if !Power::new(p).is_even_integer() {
            return Err(reject("orbits above the separatrix are unbounded unless p is an even integer"));
        }
        Ok((-b2, b2))
    }
}

/// `(h^m - b^m) / (h - b)` without cancellation near `h = b`.
fn divided_power<T: Real>(pw: &Power<T>, h: T, b: T) -> T {
    let m_int = pw.integer().map(|n| n + 2);
    let d = h - b;
    match m_int {
        Some(m) => {
            // sum_{i} h^i b^{m-1-i}
            let mut acc = T::zero();
            let mut hp = T::one();
            for i in 0..m {
                acc += hp * b.powi(m - 1 - i);
                hp *= h;
            }
            acc
        }
        None => {
            let m = pw.p + lit(2.0);
            if d == T::zero() {
                return m * b.powf(m - T::one());
            }
            b.powf(m) * (m * (d / b).ln_1p()).exp_m1() / d
        }
    }
}

/// Period integrand over `theta in [0, pi/2]`, written as
/// `L = 4 int_0^{pi/2} dtheta / sqrt(g(theta))`.
///
/// Orbits inside one well use `h = b1 + (b2 - b1) sin^2(theta)` with
/// `G(h) = (h - b1)(b2 - h) g`, each half factoring out its own endpoint.
/// Orbits around both wells are symmetric (`b1 = -b2`) and pass close to the
/// saddle at `h = 0`; they use `h = b2 sin(2 theta - pi/2)`, which keeps `h`
/// accurate relative to itself there, with `G(h) = (b2^2 - h^2) g`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Orbit<T> {
    c: T,
    pw: Power<T>,
    kappa: T,
    pub b1: T,
    pub b2: T,
    /// `2B`.
    twice_b: T,
    /// `(p + 2) / 2` for orbits around both wells.
    half_degree: Option<usize>,
}

impl<T: Real> Orbit<T> {
    pub(crate) fn new(p: T, c: T, b: T, b1: T, b2: T) -> Self {
        let two = lit::<T>(2.0);
        let half_degree = if b1 < T::zero() { Some((to_f64(p).round() as usize + 2) / 2) } else { None };
        Self { c, pw: Power::new(p), kappa: two / ((p + T::one()) * (p + two)), b1, b2, twice_b: two * b, half_degree }
    }

    fn angle(theta: T) -> T {
        theta * lit(2.0) - T::frac_pi_2()
    }

    pub(crate) fn height(&self, theta: T) -> T {
        if self.half_degree.is_some() {
            return self.b2 * Self::angle(theta).sin();
        }
        let w = self.b2 - self.b1;
        if theta <= T::frac_pi_4() {
            self.b1 + w * theta.sin().powi(2)
        } else {
            self.b2 - w * theta.cos().powi(2)
        }
    }

    /// `g(theta)`, strictly positive on a genuine orbit.
    pub(crate) fn reduced(&self, theta: T) -> T {
        match self.half_degree {
            Some(_) => self.reduced_at_angle(Self::angle(theta)),
            None => self.reduced_one_well(theta),
        }
    }

    /// `g` at `h = b2 sin(psi)` on an orbit around both wells.
    pub(crate) fn reduced_at_angle(&self, psi: T) -> T {
        let m = self.half_degree.expect("orbit around both wells");
        {
            let (s, co) = psi.sin_cos();
            let h = self.b2 * s;
            let u = h * h;
            if s * s <= lit(0.5) {
                let g = self.c * u - self.kappa * self.pw.pow(h, 2) + self.twice_b;
                let r = self.b2 * co;
                return g / (r * r);
            }
            // (v^m - u^m) / (v - u) with v = b2^2
            let v = self.b2 * self.b2;
            let mut sum = T::zero();
            let mut term = v.powi(m as i32 - 1);
            for _ in 0..m {
                sum += term;
                term = term * u / v;
            }
            self.kappa * sum - self.c
        }
    }

    fn reduced_one_well(&self, theta: T) -> T {
        let w = self.b2 - self.b1;
        let (s, co) = theta.sin_cos();
        if theta <= T::frac_pi_4() {
            let h = self.b1 + w * s * s;
            let num = self.c * (h + self.b1) - self.kappa * divided_power(&self.pw, h, self.b1);
            num / (w * co * co)
        } else {
            let h = self.b2 - w * co * co;
            let num = self.c * (h + self.b2) - self.kappa * divided_power(&self.pw, h, self.b2);
            -num / (w * s * s)
        }
    }

    /// `dx/dtheta` along the orbit.
    pub(crate) fn speed(&self, theta: T) -> T {
        lit::<T>(2.0) / self.reduced(theta).sqrt()
    }
}

/// Evaluates the period map `B -> L` by adaptive Gauss-Legendre quadrature.
#[derive(Debug, Clone)]
pub struct PeriodMap<T> {
    quad: AdaptiveQuadrature<T>,
}

impl<T: Real> Default for PeriodMap<T> {
    fn default() -> Self {
        Self::new(lit::<T>(1e-13).max(T::eps() * lit(100.0)))
    }
}

impl<T: Real> PeriodMap<T> {
    pub fn new(rel_tol: T) -> Self {
        Self { quad: AdaptiveQuadrature::new(20, rel_tol) }
    }

    pub fn period(&self, p: T, c: T, b: T) -> Result<T> {
        check_pc(p, c)?;
        if b == energy_floor(p, c) {
            return Err(Error::DegenerateOrbit(to_f64(b)));
        }
        let (b1, b2) = turning_points(p, c, b)?;
        if b2 - b1 <= T::eps() * abs(b2) {
            return Err(Error::DegenerateOrbit(to_f64(b)));
        }
        let orbit = Orbit::new(p, c, b, b1, b2);
        let period = if orbit.half_degree.is_some() {
            // Even in psi. Near the saddle crossing at psi = 0 the integrand is
            // a peak of width w = sqrt(2B/c)/b2; psi = w sinh(tau) flattens it.
            let w = (lit::<T>(2.0) * b / c).sqrt() / b2;
            let top = (T::frac_pi_2() / w).asinh();
            let quarter = self.quad.integrate(T::zero(), top, |tau| {
                let psi = (w * tau.sinh()).min(T::frac_pi_2());
                w * tau.cosh() / orbit.reduced_at_angle(psi).sqrt()
            })?;
            lit::<T>(4.0) * quarter
        } else {
            let lo = self.quad.integrate(T::zero(), T::frac_pi_4(), |t| orbit.speed(t))?;
            let hi = self.quad.integrate(T::frac_pi_4(), T::frac_pi_2(), |t| orbit.speed(t))?;
            lit::<T>(2.0) * (lo + hi)
        };
        if !period.is_finite() || period <= T::zero() {
            return Err(Error::QuadratureNonconvergence(format!("period evaluated to {period}")));
        }
        Ok(period)
    }

    /// Distance `x(theta)` travelled from the minimum `b1` up to height `h(theta)`.
    fn arc(&self, orbit: &Orbit<T>, from: T, to: T) -> Result<T> {
        self.quad.integrate(from, to, |t| orbit.speed(t))
    }

    /// Energy parameter along the branch. Positive: `B = B0 e^{-s}`;
    /// sign-changing: `B = e^{s}`.
    fn energy_at(p: T, c: T, branch: Branch, s: T) -> T {
        match branch {
            Branch::Positive => energy_floor(p, c) * (-s).exp(),
            Branch::SignChanging => s.exp(),
        }
    }

    fn scan_grid(branch: Branch) -> Vec<T> {
        match branch {
            Branch::Positive => {
                // geometric in s from near the center to deep near the separatrix
                let (lo, hi, n) = (1e-9f64, 180.0f64, 200usize);
                (0..n).map(|i| lit(lo * (hi / lo).powf(i as f64 / (n - 1) as f64))).collect()
            }
            Branch::SignChanging => {
                let (lo, hi, n) = (-150.0f64, 150.0f64, 241usize);
                (0..n).map(|i| lit(lo + (hi - lo) * i as f64 / (n - 1) as f64)).collect()
            }
        }
    }

    /// Every bracket `(B_lo, B_hi)` on the branch where `L(B) - period` changes sign.
    pub fn brackets(&self, p: T, c: T, period: T, branch: Branch) -> Result<Vec<(T, T)>> {
        Ok(self
            .bracket_params(p, c, period, branch)?
            .into_iter()
            .map(|(s0, s1)| {
                let (b0, b1) = (Self::energy_at(p, c, branch, s0), Self::energy_at(p, c, branch, s1));
                (b0.min(b1), b0.max(b1))
            })
            .collect())
    }

    fn bracket_params(&self, p: T, c: T, period: T, branch: Branch) -> Result<Vec<(T, T)>> {
        let grid = Self::scan_grid(branch);
        let mut samples = Vec::with_capacity(grid.len());
        for s in grid {
            let b = Self::energy_at(p, c, branch, s);
            if let Ok(l) = self.period(p, c, b) {
                samples.push((s, l - period));
            }
        }
        let mut out = Vec::new();
        for w in samples.windows(2) {
            let ((s0, f0), (s1, f1)) = (w[0], w[1]);
            if f0 == T::zero() || (f0 < T::zero()) != (f1 < T::zero()) {
                out.push((s0, s1));
            }
        }
        Ok(out)
    }

    /// Solves `L(B) = period` on the branch. Returns the energy from the first
    /// bracket together with all brackets found.
    pub fn solve_energy(&self, p: T, c: T, period: T, branch: Branch) -> Result<(T, Vec<(T, T)>)> {
        check_pc(p, c)?;
        if branch == Branch::Positive && period <= alpha(p, c) {
            return Err(Error::NoWaveForPeriod {
                period: to_f64(period),
                reason: format!("period below α(c) = {:.12}: positive waves need L > 2π/sqrt(pc)", to_f64(alpha(p, c))),
            });
        }
        let params = self.bracket_params(p, c, period, branch)?;
        let Some(&(mut s0, mut s1)) = params.first() else {
            return Err(Error::NoWaveForPeriod {
                period: to_f64(period),
                reason: "period outside the sampled range of the period map".into(),
            });
        };
        let f = |s: T| -> Result<T> { Ok(self.period(p, c, Self::energy_at(p, c, branch, s))? - period) };
        let mut f0 = f(s0)?;
        let tol = period * lit::<T>(1e-14).max(T::eps() * lit(4.0));
        let mut best = (s0, abs(f0));
        for _ in 0..300 {
            let mid = (s0 + s1) * lit(0.5);
            if mid <= s0.min(s1) || mid >= s0.max(s1) {
                break;
            }
            let fm = f(mid)?;
            if abs(fm) < best.1 {
                best = (mid, abs(fm));
            }
            if abs(fm) <= tol {
                break;
            }
            if (fm < T::zero()) == (f0 < T::zero()) {
                s0 = mid;
                f0 = fm;
            } else {
                s1 = mid;
            }
        }
        let brackets = params
            .iter()
            .map(|&(a, b)| {
                let (ea, eb) = (Self::energy_at(p, c, branch, a), Self::energy_at(p, c, branch, b));
                (ea.min(eb), ea.max(eb))
            })
            .collect();
        Ok((Self::energy_at(p, c, branch, best.0), brackets))
    }

    /// Samples of the orbit at `x_j = j L / n`, `j = 0..n`, with the maximum at
    /// `x = 0`, obtained by inverting `x(theta)`.
    pub fn profile(&self, p: T, c: T, b: T, n: usize) -> Result<Vec<T>> {
        let (b1, b2) = turning_points(p, c, b)?;
        let orbit = Orbit::new(p, c, b, b1, b2);
        let half = self.arc(&orbit, T::zero(), T::frac_pi_2())?;
        let period = half * lit(2.0);
        let mut out = vec![T::zero(); n];
        // distance from the minimum, ascending: d = L/2 - x_j for j = n/2 .. 0
        let mut theta_prev = T::zero();
        let mut x_prev = T::zero();
        let jmax = n / 2;
        for j in (0..=jmax).rev() {
            let xj = period * from_usize::<T>(j) / from_usize::<T>(n);
            let target = (half - xj).max(T::zero());
            let theta = if j == 0 {
                T::frac_pi_2()
            } else {
                let (th, xv) = self.invert_arc(&orbit, theta_prev, x_prev, target)?;
                x_prev = xv;
                th
            };
            theta_prev = theta;
            let h = orbit.height(theta);
            out[j] = h;
            if j != 0 && j != n - j {
                out[n - j] = h;
            }
        }
        Ok(out)
    }

    fn invert_arc(&self, orbit: &Orbit<T>, theta0: T, x0: T, target: T) -> Result<(T, T)> {
        let mut lo = theta0;
        let mut hi = T::frac_pi_2();
        let mut theta = theta0;
        let mut x = x0;
        if target <= x0 {
            return Ok((theta0, x0));
        }
        for _ in 0..200 {
            let speed = orbit.speed(theta);
            let mut next = theta + (target - x) / speed;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = (lo + hi) * lit(0.5);
            }
            let xn = x0 + self.arc(orbit, theta0, next)?;
            if xn < target {
                lo = next;
            } else {
                hi = next;
            }
            let done =
                abs(xn - target) <= T::eps() * lit(16.0) * target.max(T::one()) || hi - lo <= T::eps() * lit(4.0);
            theta = next;
            x = xn;
            if done {
                break;
            }
        }
        Ok((theta, x))
    }
}

/// `period_of_B` with the default quadrature tolerance.
pub fn period_of_b<T: Real>(p: T, c: T, b: T) -> Result<T> {
    PeriodMap::default().period(p, c, b)
}

/// A converged periodic profile on an equispaced grid of `[0, L)`, with its
/// maximum at `x = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicWave<T> {
    pub params: WaveParams<T>,
    pub grid: Vec<T>,
    pub fourier: Vec<Complex<T>>,
    pub residual: T,
    /// `(min phi, max phi)`.
    pub extrema: (T, T),
    /// Energy brackets of the period map that matched the requested period.
    pub brackets: Vec<(T, T)>,
}

impl<T: Real> PeriodicWave<T> {
    /// Assembles a wave from grid samples, recomputing coefficients and residual.
    pub fn from_grid(params: WaveParams<T>, grid: Vec<T>) -> Self {
        let fourier = Transform::new(grid.len()).forward(&grid);
        let mut w =
            Self { params, grid, fourier, residual: T::zero(), extrema: (T::zero(), T::zero()), brackets: Vec::new() };
        w.residual = wave_residual(&w);
        let lo = w.grid.iter().copied().fold(T::max_value().unwrap(), T::min);
        let hi = w.grid.iter().copied().fold(T::min_value().unwrap(), T::max);
        w.extrema = (lo, hi);
        w
    }

    /// The equilibrium `phi = ((p+1)c)^{1/p}` viewed as an `L`-periodic wave.
    pub fn equilibrium(p: T, c: T, period: T, n: usize) -> Result<Self> {
        let params = WaveParams::new(p, c, period, Branch::Positive, energy_floor(p, c))?;
        Ok(Self::from_grid(params, vec![center_amplitude(p, c); n]))
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn spacing(&self) -> T {
        self.params.period / from_usize::<T>(self.len())
    }

    pub fn nodes(&self) -> Vec<T> {
        let h = self.spacing();
        (0..self.len()).map(|j| h * from_usize::<T>(j)).collect()
    }

    pub fn derivative(&self) -> Vec<T> {
        Transform::new(self.len()).derivative(&self.grid, self.params.period, 1)
    }

    pub fn mean(&self) -> T {
        self.grid.iter().copied().fold(T::zero(), |a, b| a + b) / from_usize::<T>(self.len())
    }

    /// `phi` interpolated onto `n` points.
    pub fn resampled(&self, n: usize) -> Vec<T> {
        fourier::resample(&self.grid, n)
    }

    /// `int_0^L phi^2 dx`.
    pub fn mass(&self) -> T {
        self.grid.iter().fold(T::zero(), |a, &v| a + v * v) * self.spacing()
    }

    /// Circularly shifted copy, `phi(x + dx)`.
    pub fn shifted(&self, dx: T) -> Self {
        let mut w = Self::from_grid(self.params, fourier::shift(&self.grid, self.params.period, dx));
        w.brackets = self.brackets.clone();
        w
    }
}

/// Max-norm of `-phi'' + c phi - phi^{p+1}/(p+1)` with spectral derivatives.
pub fn wave_residual<T: Real>(wave: &PeriodicWave<T>) -> T {
    let WaveParams { p, c, period, .. } = wave.params;
    let pw = Power::new(p);
    let d2 = Transform::new(wave.len()).derivative(&wave.grid, period, 2);
    wave.grid
        .iter()
        .zip(&d2)
        .map(|(&u, &uxx)| abs(-uxx + c * u - pw.pow(u, 1) / (p + T::one())))
        .fold(T::zero(), T::max)
}

/// Dense second-derivative collocation matrix on `n` points of `[0, L)`.
pub fn second_derivative_matrix<T: Real>(n: usize, period: T) -> DMatrix<T> {
    let h = T::two_pi() / from_usize::<T>(n);
    let scale = (T::two_pi() / period).powi(2);
    let diag = -(T::pi() * T::pi()) / (lit::<T>(3.0) * h * h) - lit::<T>(1.0 / 6.0);
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            return diag * scale;
        }
        let d = i as isize - j as isize;
        let sign = if d.rem_euclid(2) == 0 { T::one() } else { -T::one() };
        let s = (T::from_isize(d).unwrap() * h * lit(0.5)).sin();
        -sign / (lit::<T>(2.0) * s * s) * scale
    })
}

/// Solver settings. Defaults scale with the working precision.
#[derive(Debug, Clone)]
pub struct WaveSolver<T> {
    /// Seed resolution. The solver may settle on a coarser or finer grid.
    pub n_initial: usize,
    pub n_max: usize,
    pub residual_tol: T,
    pub newton_tol: T,
    pub tail_tol: T,
    pub max_newton: usize,
    pub max_halvings: usize,
    pub period_map: PeriodMap<T>,
}

impl<T: Real> Default for WaveSolver<T> {
    fn default() -> Self {
        let eps = T::eps();
        let residual_tol = lit::<T>(1e-10).max(eps * lit(1e4));
        Self {
            n_initial: 256,
            n_max: 4096,
            residual_tol,
            newton_tol: residual_tol * lit(1e-2),
            tail_tol: lit::<T>(1e-12).max(eps * lit(100.0)),
            max_newton: 60,
            max_halvings: 20,
            period_map: PeriodMap::default(),
        }
    }
}

impl<T: Real> WaveSolver<T> {
    pub fn with_grid(mut self, n: usize) -> Self {
        self.n_initial = n;
        self
    }

    /// Finds `B` with `L(B) = period`, seeds the profile from the inverted
    /// quadrature and polishes it by Newton on the collocation equations,
    /// doubling the grid until the spectrum tail is below `tail_tol`.
    pub fn solve(&self, p: T, c: T, period: T, branch: Branch) -> Result<PeriodicWave<T>> {
        check_pc(p, c)?;
        check_grid(self.n_initial)?;
        if branch == Branch::SignChanging && !Power::new(p).is_even_integer() {
            return Err(Error::InvalidParams(format!("sign-changing waves need an even integer p, got {p}")));
        }
        let (b, brackets) = self.period_map.solve_energy(p, c, period, branch)?;
        let params = WaveParams::new(p, c, period, branch, b)?;
        let seed = self.period_map.profile(p, c, b, self.n_initial)?;
        let mut wave = self.refine(params, seed)?;
        wave.brackets = brackets;
        Ok(wave)
    }

    /// Newton from an arbitrary initial profile. The guess is moved to the
    /// canonical phase (maximum at `x = 0`) and symmetrized first.
    pub fn solve_from_guess(&self, params: WaveParams<T>, guess: &[T]) -> Result<PeriodicWave<T>> {
        check_grid(guess.len())?;
        let canonical = canonical_phase(guess, params.period);
        let mut wave = self.refine(params, canonical)?;
        // Energy of the converged orbit, read off at the maximum.
        wave.params.energy = potential(params.p, params.c, wave.grid[0]);
        Ok(wave)
    }

    fn refine(&self, params: WaveParams<T>, seed: Vec<T>) -> Result<PeriodicWave<T>> {
        // Collocation roundoff grows like N^2, so start from the coarsest
        // halving of the seed that still looks resolved and double from there.
        let loose = self.tail_tol.sqrt();
        let mut n = seed.len();
        while n / 2 >= MIN_GRID && n.is_multiple_of(4) {
            let coarse = fourier::resample(&seed, n / 2);
            let tail = fourier::tail_ratio(&Transform::new(n / 2).forward(&coarse), 2);
            if tail > loose {
                break;
            }
            n /= 2;
        }
        let mut grid = if n == seed.len() { seed } else { fourier::resample(&seed, n) };
        loop {
            let n = grid.len();
            grid = self.newton(&params, grid)?;
            let coeffs = Transform::new(n).forward(&grid);
            let tail = fourier::tail_ratio(&coeffs, 2);
            if tail <= self.tail_tol {
                break;
            }
            if n * 2 > self.n_max {
                return Err(Error::Resolution(format!(
                    "profile tail {:.3e} above {:.1e} at the largest grid N = {n}",
                    to_f64(tail),
                    to_f64(self.tail_tol)
                )));
            }
            grid = fourier::resample(&grid, n * 2);
        }
        let wave = PeriodicWave::from_grid(params, grid);
        self.check_invariants(&wave)?;
        Ok(wave)
    }

    fn check_invariants(&self, wave: &PeriodicWave<T>) -> Result<()> {
        let fail = |detail: String| Error::NewtonDivergence {
            iterations: self.max_newton,
            residual: to_f64(wave.residual),
            n: wave.len(),
            detail,
        };
        if !(wave.residual <= self.residual_tol) {
            return Err(fail("residual above tolerance after convergence".into()));
        }
        match wave.params.branch {
            Branch::Positive if wave.extrema.0 <= T::zero() => {
                Err(fail("positive branch converged to a profile that is not positive".into()))
            }
            Branch::SignChanging
                if abs(wave.mean()) > self.residual_tol * fourier::max_abs(&wave.grid).max(T::one()) =>
            {
                Err(fail("sign-changing branch converged to a profile with nonzero mean".into()))
            }
            _ => Ok(()),
        }
    }

    /// Newton on the even subspace: unknowns are `phi(x_j)`, `j = 0..=n/2`.
    fn newton(&self, params: &WaveParams<T>, grid: Vec<T>) -> Result<Vec<T>> {
        let n = grid.len();
        let half = n / 2;
        let WaveParams { p, c, period, .. } = *params;
        let pw = Power::new(p);
        let d2 = second_derivative_matrix::<T>(n, period);
        let unfold = |u: &DVector<T>| -> Vec<T> { (0..n).map(|j| u[j.min(n - j)]).collect() };
        let tr = Transform::new(n);
        // Same spectral derivative as `wave_residual`, which also has less
        // roundoff than the dense matrix product.
        let residual = |u: &DVector<T>| -> (DVector<T>, T) {
            let full = unfold(u);
            let lap = tr.derivative(&full, period, 2);
            let r = DVector::from_fn(half + 1, |i, _| -lap[i] + c * full[i] - pw.pow(full[i], 1) / (p + T::one()));
            let m = r.iter().fold(T::zero(), |a, &x| a.max(abs(x)));
            (r, m)
        };
        let mut u = DVector::from_fn(half + 1, |i, _| grid[i]);
        let (mut r, mut rnorm) = residual(&u);
        let mut iterations = 0;
        while rnorm > self.newton_tol {
            if iterations >= self.max_newton {
                break;
            }
            iterations += 1;
            let full = unfold(&u);
            let jac = DMatrix::from_fn(half + 1, half + 1, |i, j| {
                let mut v = -d2[(i, j)];
                if j != 0 && j != half {
                    v -= d2[(i, n - j)];
                }
                if i == j {
                    v += c - pw.pow(full[i], 0);
                }
                v
            });
            let Some(step) = jac.lu().solve(&(-&r)) else {
                return Err(Error::NewtonDivergence {
                    iterations,
                    residual: to_f64(rnorm),
                    n,
                    detail: "singular Jacobian on the even subspace".into(),
                });
            };
            let mut scale = T::one();
            let mut accepted = false;
            for _ in 0..=self.max_halvings {
                let trial = &u + &step * scale;
                let (rt, nt) = residual(&trial);
                if nt.is_finite() && nt < rnorm {
                    u = trial;
                    r = rt;
                    rnorm = nt;
                    accepted = true;
                    break;
                }
                scale *= lit(0.5);
            }
            if !accepted {
                break;
            }
        }
        if !(rnorm <= self.residual_tol) {
            return Err(Error::NewtonDivergence {
                iterations,
                residual: to_f64(rnorm),
                n,
                detail: format!(
                    "stalled above tolerance {:.1e} (p = {p}, c = {c}, L = {period})",
                    to_f64(self.residual_tol)
                ),
            });
        }
        Ok(unfold(&u))
    }
}

/// Coarsest grid the solver will trim a seed down to.
pub const MIN_GRID: usize = 16;

fn check_grid(n: usize) -> Result<()> {
    if n < 8 || !n.is_multiple_of(2) {
        return Err(Error::InvalidParams(format!("grid size must be even and at least 8, got {n}")));
    }
    Ok(())
}

/// Shifts a profile so its maximum sits at `x = 0` and symmetrizes it.
pub fn canonical_phase<T: Real>(u: &[T], period: T) -> Vec<T> {
    let n = u.len();
    let (jmax, _) =
        u.iter().enumerate().fold((0, T::min_value().unwrap()), |acc, (j, &v)| if v > acc.1 { (j, v) } else { acc });
    let coeffs = Transform::new(n).forward(u);
    let h = period / from_usize::<T>(n);
    let mut x = h * from_usize::<T>(jmax);
    for _ in 0..50 {
        let (_, d1, d2) = fourier::eval_with_derivatives(&coeffs, period, x);
        if d2 >= T::zero() {
            break;
        }
        let dx = d1 / d2;
        x -= dx;
        if abs(dx) <= T::eps() * period {
            break;
        }
    }
    let shifted = fourier::shift(u, period, x);
    (0..n).map(|j| (shifted[j] + shifted[(n - j) % n]) * lit(0.5)).collect()
}

/// `solve_wave` with default solver settings.
pub fn solve_wave<T: Real>(p: T, c: T, period: T, branch: Branch) -> Result<PeriodicWave<T>> {
    WaveSolver::default().solve(p, c, period, branch)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_plane_p1() {
        let pp = classify_phase_plane(1.0f64, 1.0).unwrap();
        assert_eq!(pp.equilibria.len(), 2);
        assert_eq!(pp.equilibria[0].kind, EquilibriumKind::Saddle);
        assert_eq!(pp.equilibria[0].phi, 0.0);
        assert_eq!(pp.equilibria[1].kind, EquilibriumKind::Center);
        assert!((pp.equilibria[1].phi - 2.0).abs() < 1e-15);
        assert!((pp.energy_floor + 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(pp.separatrix_energy, 0.0);
    }

    #[test]
    fn phase_plane_p2_two_centers() {
        let pp = classify_phase_plane(2.0f64, 1.0).unwrap();
        let centers: Vec<f64> =
            pp.equilibria.iter().filter(|e| e.kind == EquilibriumKind::Center).map(|e| e.phi).collect();
        assert_eq!(centers.len(), 2);
        assert!((centers[0] + 3f64.sqrt()).abs() < 1e-14);
        assert!((centers[1] - 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn center_energy_matches_potential() {
        for &(p, c) in &[(1.0f64, 1.0), (2.0, 0.7), (4.0, 2.5), (1.5, 1.3)] {
            let v = potential(p, c, center_amplitude(p, c));
            assert!((v - energy_floor(p, c)).abs() < 1e-13 * v.abs());
        }
    }

    #[test]
    fn turning_point_errors() {
        assert!(matches!(turning_points(1.0f64, 1.0, -1.0), Err(Error::NoPeriodicOrbit { .. })));
        assert!(matches!(turning_points(1.0f64, 1.0, 0.0), Err(Error::NoPeriodicOrbit { .. })));
        assert!(matches!(turning_points(1.0f64, 1.0, 0.3), Err(Error::NoPeriodicOrbit { .. })));
        assert!(matches!(turning_points(1.5f64, 1.0, 0.3), Err(Error::NoPeriodicOrbit { .. })));
        assert!(matches!(turning_points(1.0f64, -1.0, -0.1), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn degenerate_orbit_at_center() {
        let b0 = energy_floor(1.0f64, 1.0);
        assert!(matches!(period_of_b(1.0, 1.0, b0), Err(Error::DegenerateOrbit(_))));
    }

    #[test]
    fn second_derivative_matrix_matches_fft() {
        let (n, l) = (16, 3.7f64);
        let u: Vec<f64> = (0..n)
            .map(|j| {
                let x = j as f64 * l / n as f64;
                (2.0 * std::f64::consts::PI * x / l).sin().exp()
            })
            .collect();
        let a = second_derivative_matrix::<f64>(n, l) * DVector::from_vec(u.clone());
        let b = Transform::new(n).derivative(&u, l, 2);
        for j in 0..n {
            assert!((a[j] - b[j]).abs() < 1e-11, "{j}: {} vs {}", a[j], b[j]);
        }
        // Nyquist cosine
        let nyq: Vec<f64> = (0..n).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let a = second_derivative_matrix::<f64>(n, l) * DVector::from_vec(nyq.clone());
        let b = Transform::new(n).derivative(&nyq, l, 2);
        for j in 0..n {
            assert!((a[j] - b[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn equilibrium_residual_vanishes() {
        let w = PeriodicWave::equilibrium(1.0f64, 1.0, 5.0, 32).unwrap();
        assert!(wave_residual(&w) < 1e-14);
        let w = PeriodicWave::equilibrium(4.0f64, 0.5, 5.0, 32).unwrap();
        assert!(wave_residual(&w) < 1e-13);
    }

    #[test]
    fn perturbed_profile_has_residual() {
        let mut w = PeriodicWave::equilibrium(1.0f64, 1.0, 5.0, 32).unwrap();
        let eps = 1e-6;
        w.grid.iter_mut().for_each(|v| *v += eps);
        let r = wave_residual(&w);
        // c eps - ((phi+eps)^2 - phi^2)/2 = eps (c - phi) + O(eps^2) = -eps
        assert!(r > 0.5 * eps && r < 2.0 * eps, "{r}");
    }

    #[test]
    fn params_validation() {
        assert!(WaveParams::new(1.0f64, 1.0, 7.0, Branch::Positive, -0.5).is_ok());
        assert!(WaveParams::new(1.0f64, 1.0, 7.0, Branch::Positive, 0.5).is_err());
        assert!(WaveParams::new(3.0f64, 1.0, 7.0, Branch::SignChanging, 0.5).is_err());
        assert!(WaveParams::new(2.0f64, 1.0, 7.0, Branch::SignChanging, 0.5).is_ok());
        assert!(WaveParams::new(2.0f64, 0.0, 7.0, Branch::Positive, -0.1).is_err());
    }

    #[test]
    fn canonical_phase_moves_max_to_origin() {
        let (n, l) = (64, 6.0f64);
        let u: Vec<f64> = (0..n)
            .map(|j| {
                let x = j as f64 * l / n as f64;
                (2.0 * std::f64::consts::PI * (x - 1.234) / l).cos().exp()
            })
            .collect();
        let v = canonical_phase(&u, l);
        let e = std::f64::consts::E;
        assert!((v[0] - e).abs() < 1e-10);
        for j in 1..n {
            assert!(v[j] <= v[0]);
            assert!((v[j] - v[n - j]).abs() < 1e-14);
        }
    }
}
