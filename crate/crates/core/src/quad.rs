//! Numerical quadrature and 1-D search primitives.
//!
//! Composite 32-point Gauss–Legendre rules are the workhorse for all kernel
//! integrals. Nodes and weights are computed once by Newton iteration on the
//! Legendre recurrence, which keeps them at full f64 accuracy without a
//! transcribed table.

use std::sync::OnceLock;

const GL_ORDER: usize = 32;

/// Legendre polynomial P_n and derivative P_n' at x, by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    // derivative from P_n and P_{n-1}
    let dp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn gauss_legendre_nodes() -> &'static ([f64; GL_ORDER], [f64; GL_ORDER]) {
    static NODES: OnceLock<([f64; GL_ORDER], [f64; GL_ORDER])> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = GL_ORDER;
        let mut xs = [0.0; GL_ORDER];
        let mut ws = [0.0; GL_ORDER];
        for i in 0..n {
            // Chebyshev-style initial guess, then Newton.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            xs[i] = x;
            ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (xs, ws)
    })
}

/// ∫_a^b f(x) dx by a single 32-point Gauss–Legendre rule.
pub fn gauss_panel(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
    let (xs, ws) = gauss_legendre_nodes();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (&x, &w) in xs.iter().zip(ws.iter()) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Composite rule over `panels` equal sub-intervals of [a, b].
pub fn composite(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for k in 0..panels {
        acc += gauss_panel(f, a + k as f64 * h, a + (k + 1) as f64 * h);
    }
    acc
}

/// Panel count resolving both the length of [a, b] and an oscillation of
/// angular rate `omega`: at most ~2 radians of phase per panel.
pub fn oscillatory_panels(a: f64, b: f64, omega: f64) -> usize {
    let len = (b - a).abs();
    let by_len = len.ceil() as usize;
    let by_phase = (omega.abs() * len / 2.0).ceil() as usize;
    by_len.max(by_phase).clamp(1, 2_000_000)
}

/// ∫_cut^0 f(z) dz for integrands concentrated near 0: full resolution on
/// [−1, 0], then dyadically widening segments toward the cut.
pub fn graded(f: &mut impl FnMut(f64) -> f64, cut: f64, per_seg: usize) -> f64 {
    let near = cut.max(-1.0);
    let mut acc = composite(f, near, 0.0, per_seg);
    if cut >= -1.0 {
        return acc;
    }
    let mut w: f64 = 1.0;
    loop {
        let lo = (-2.0 * w).max(cut);
        acc += composite(f, lo, -w, per_seg);
        if lo <= cut {
            return acc;
        }
        w *= 2.0;
    }
}

const INV_GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a local minimum of f on [a, b].
/// Returns (x, f(x)) after comparing against both endpoints.
pub fn golden_min(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut x1 = hi - INV_GOLDEN * (hi - lo);
    let mut x2 = lo + INV_GOLDEN * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_GOLDEN * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_GOLDEN * (hi - lo);
            f2 = f(x2);
        }
    }
    let xm = 0.5 * (lo + hi);
    let fm = f(xm);
    let fa = f(a);
    let fb = f(b);
    let mut best = (xm, fm);
    if fa < best.1 {
        best = (a, fa);
    }
    if fb < best.1 {
        best = (b, fb);
    }
    best
}

/// Golden-section search for a local maximum (see [`golden_min`]).
pub fn golden_max(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (x, neg) = golden_min(&mut |t| -f(t), a, b, tol);
    (x, -neg)
}

/// Bisection for a root of f on [a, b]; f(a) and f(b) must straddle zero.
pub fn bisect(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (mut lo, mut hi) = (a, b);
    let flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < tol {
            return mid;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn panel_is_exact_on_polynomials() {
        // degree 63 is the exactness limit of 32-point Gauss
        let val = gauss_panel(&mut |x: f64| x.powi(10), 0.0, 1.0);
        assert_relative_eq!(val, 1.0 / 11.0, max_relative = 1e-14);
    }

    #[test]
    fn composite_handles_oscillation() {
        let omega = 40.0;
        let panels = oscillatory_panels(0.0, 3.0, omega);
        let val = composite(&mut |x: f64| (omega * x).cos(), 0.0, 3.0, panels);
        assert_relative_eq!(val, (omega * 3.0).sin() / omega, epsilon = 1e-13);
    }

    #[test]
    fn golden_finds_interior_and_endpoint_extrema() {
        let (x, fx) = golden_min(&mut |x: f64| (x - 0.3).powi(2), -1.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
        assert!(fx < 1e-12);
        // concave: minimum sits at an endpoint, caught by the comparison
        let (_, fmin) = golden_min(&mut |x: f64| x * (1.0 - x), 0.2, 0.8, 1e-12);
        assert_relative_eq!(fmin, 0.16, epsilon = 1e-12);
        let (x, fmax) = golden_max(&mut |x: f64| x * (1.0 - x), 0.2, 0.8, 1e-12);
        assert!((x - 0.5).abs() < 1e-6);
        assert_relative_eq!(fmax, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn bisect_locates_roots() {
        let r = bisect(&mut |x: f64| x.exp() - 2.0, 0.0, 2.0, 1e-14);
        assert_relative_eq!(r, 2.0_f64.ln(), epsilon = 1e-12);
    }
}
