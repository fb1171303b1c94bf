//! Gauss-Legendre rules and an adaptive composite integrator built on them.

use crate::error::{Error, Result};
use crate::scalar::{abs, from_usize, lit, Real};

/// Fixed-order Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Nodes are the roots of P_n, found by Newton from the Chebyshev guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = from_usize::<T>(n);
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (T::pi() * (from_usize::<T>(i) + lit(0.75)) / (nf + lit(0.5))).cos();
            let mut dp = T::one();
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if abs(dx) <= T::eps() * lit(4.0) {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != T::zero() {
                dp = d;
            }
            let w = lit::<T>(2.0) / ((T::one() - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Applies the rule on [a, b].
    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        let half = (b - a) * lit(0.5);
        let mid = (b + a) * lit(0.5);
        let mut sum = T::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += *w * f(mid + half * *x);
        }
        sum * half
    }
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    if n == 0 {
        return (p0, T::zero());
    }
    for k in 2..=n {
        let kf = from_usize::<T>(k);
        let p2 = ((lit::<T>(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = from_usize::<T>(n);
    let dp = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, dp)
}

/// Adaptive composite Gauss-Legendre integration.
///
/// Each panel is compared against the sum over its two halves; panels that
/// disagree by more than their share of the tolerance are bisected. A panel
/// whose error stops shrinking under bisection is limited by roundoff in the
/// integrand and is accepted as is.
#[derive(Debug, Clone)]
pub struct AdaptiveQuadrature<T> {
    rule: GaussLegendre<T>,
    pub rel_tol: T,
    pub max_depth: usize,
    /// Upper bound on integrand evaluations per call.
    pub max_evals: usize,
}

struct Budget {
    evals: usize,
    limit: usize,
}

impl<T: Real> AdaptiveQuadrature<T> {
    pub fn new(order: usize, rel_tol: T) -> Self {
        Self { rule: GaussLegendre::new(order), rel_tol, max_depth: 60, max_evals: 2_000_000 }
    }

    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> Result<T> {
        if a == b {
            return Ok(T::zero());
        }
        let coarse = self.rule.integrate(a, b, &mut f);
        // Absolute target from a first estimate; refined if that estimate is poor.
        let floor = T::eps().powi(4);
        let mut scale = abs(coarse).max(floor);
        let mut budget = Budget { evals: 0, limit: self.max_evals };
        for _ in 0..3 {
            let tol = self.rel_tol * scale;
            let total = self.panel(a, b, coarse, None, tol, 0, &mut f, &mut budget)?;
            if abs(total) >= scale * lit(0.25) || abs(total) <= floor {
                return Ok(total);
            }
            scale = abs(total);
        }
        let tol = self.rel_tol * scale;
        self.panel(a, b, coarse, None, tol, 0, &mut f, &mut budget)
    }

    #[allow(clippy::too_many_arguments)]
    fn panel<F: FnMut(T) -> T>(
        &self,
        a: T,
        b: T,
        whole: T,
        parent_err: Option<T>,
        tol: T,
        depth: usize,
        f: &mut F,
        budget: &mut Budget,
    ) -> Result<T> {
        let mid = (a + b) * lit(0.5);
        let left = self.rule.integrate(a, mid, &mut *f);
        let right = self.rule.integrate(mid, b, &mut *f);
        budget.evals += 2 * self.rule.order();
        let refined = left + right;
        if !refined.is_finite() {
            return Err(Error::QuadratureNonconvergence(format!("non-finite integrand near [{a:e}, {b:e}]")));
        }
        let err = abs(refined - whole);
        // Panels narrower than roundoff cannot be refined further.
        let tiny = abs(b - a) <= T::eps() * lit(64.0) * (abs(a) + abs(b));
        // Resolved panels lose many digits per halving at this order, and an
        // unresolved singularity keeps a sizable relative error. A small
        // error that barely moves is noise.
        let stalled =
            depth >= 6 && err <= T::eps().sqrt() * abs(refined) && parent_err.is_some_and(|pe| err > pe * lit(0.25));
        // Agreement at roundoff level is as good as the panel gets.
        let converged = err <= tol || err <= T::eps() * lit(50.0) * abs(refined);
        if converged || tiny || stalled {
            return Ok(refined);
        }
        if depth >= self.max_depth || budget.evals >= budget.limit {
            return Err(Error::QuadratureNonconvergence(format!(
                "refinement limit reached on [{a:e}, {b:e}] with error {err:e} after {} evaluations",
                budget.evals
            )));
        }
        let half_tol = tol * lit(0.5);
        let l = self.panel(a, mid, left, Some(err), half_tol, depth + 1, f, budget)?;
        let r = self.panel(mid, b, right, Some(err), half_tol, depth + 1, f, budget)?;
        Ok(l + r)
    }
}
