//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code paths it is used to check.

#![allow(dead_code)]

/// Half-period of the orbit through `(phi, xi) = (start, 0)` for
/// `phi'' = c phi - phi^{p+1}/(p+1)`, by classical RK4 with step `h`
/// and a final partial step landing on `xi = 0`.
pub fn shooting_period(p: f64, c: f64, start: f64, h: f64) -> f64 {
    let force = |u: f64| c * u - pow(u, p + 1.0) / (p + 1.0);
    let step = |(u, v): (f64, f64), dt: f64| -> (f64, f64) {
        let k1 = (v, force(u));
        let k2 = (v + 0.5 * dt * k1.1, force(u + 0.5 * dt * k1.0));
        let k3 = (v + 0.5 * dt * k2.1, force(u + 0.5 * dt * k2.0));
        let k4 = (v + dt * k3.1, force(u + dt * k3.0));
        (u + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0), v + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1))
    };
    let mut state = (start, 0.0);
    let mut t = 0.0;
    // leave the turning point first
    let mut moved = false;
    loop {
        let next = step(state, h);
        if moved && state.1 < 0.0 && next.1 >= 0.0 {
            // secant on the partial step size
            let (mut a, mut b) = (0.0, h);
            let (mut fa, mut fb) = (state.1, next.1);
            for _ in 0..60 {
                let m = b - fb * (b - a) / (fb - fa);
                let fm = step(state, m).1;
                if fm.abs() < 1e-15 {
                    a = m;
                    break;
                }
                if (fm < 0.0) == (fa < 0.0) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                    fb = fm;
                }
                if (b - a).abs() < 1e-16 {
                    break;
                }
            }
            return 2.0 * (t + a);
        }
        if next.1 < 0.0 {
            moved = true;
        }
        state = next;
        t += h;
        assert!(t < 1e5, "shooting did not return");
    }
}

fn pow(u: f64, e: f64) -> f64 {
    if e.fract() == 0.0 {
        u.powi(e as i32)
    } else {
        u.powf(e)
    }
}

/// Largest real root of `-2h^{p+2}/((p+1)(p+2)) + c h^2 + 2B` above the
/// center, by a dense scan followed by bisection.
pub fn upper_turning_point(p: f64, c: f64, b: f64) -> f64 {
    let g = |h: f64| -2.0 * pow(h, p + 2.0) / ((p + 1.0) * (p + 2.0)) + c * h * h + 2.0 * b;
    let star = ((p + 1.0) * c).powf(1.0 / p);
    let mut lo = star;
    let mut hi = star;
    while g(hi) > 0.0 {
        lo = hi;
        hi *= 1.01;
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if g(m) > 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

/// `d^m u / dx^m` on an equispaced periodic grid by a direct O(N^2) discrete
/// Fourier transform, with the Nyquist mode treated as a cosine.
pub fn naive_derivative(u: &[f64], period: f64, m: u32) -> Vec<f64> {
    let n = u.len();
    let tau = 2.0 * std::f64::consts::PI;
    let mut out = vec![0.0; n];
    for k in 0..n {
        let (mut re, mut im) = (0.0, 0.0);
        for (j, &v) in u.iter().enumerate() {
            let a = -tau * (k * j) as f64 / n as f64;
            re += v * a.cos();
            im += v * a.sin();
        }
        let freq = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        let kappa = tau * freq / period;
        // multiply by (i kappa)^m
        let (mut zr, mut zi) = (re, im);
        for _ in 0..m {
            (zr, zi) = (-kappa * zi, kappa * zr);
        }
        if k == n / 2 && m % 2 == 1 {
            (zr, zi) = (0.0, 0.0);
        }
        for (j, o) in out.iter_mut().enumerate() {
            let a = tau * (k * j) as f64 / n as f64;
            *o += (zr * a.cos() - zi * a.sin()) / n as f64;
        }
    }
    out
}

/// Conjugate gradients on the normal equations `A^2 u = A f` for a symmetric
/// operator `A` given as a closure, restricted to the complement of `kernel`.
pub fn cg_deflated(apply: impl Fn(&[f64]) -> Vec<f64>, f: &[f64], kernel: &[f64], iters: usize) -> Vec<f64> {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let kk = dot(kernel, kernel);
    let project = |v: &mut Vec<f64>| {
        if kk > 0.0 {
            let s = dot(v, kernel) / kk;
            v.iter_mut().zip(kernel).for_each(|(x, k)| *x -= s * k);
        }
    };
    let normal = |v: &[f64]| {
        let mut w = apply(&apply(v));
        project(&mut w);
        w
    };
    let mut rhs = f.to_vec();
    project(&mut rhs);
    let mut b = apply(&rhs);
    project(&mut b);
    let mut x = vec![0.0; f.len()];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let stop = 1e-30 * dot(&b, &b);
    for _ in 0..iters {
        if rr <= stop {
            break;
        }
        let ap = normal(&p);
        let alpha = rr / dot(&p, &ap);
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, ai)| *ri -= alpha * ai);
        let next = dot(&r, &r);
        let beta = next / rr;
        rr = next;
        p = r.iter().zip(&p).map(|(ri, pi)| ri + beta * pi).collect();
    }
    x
}
