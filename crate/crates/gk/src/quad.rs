//! Gauss–Legendre quadrature: fixed rules, composite panels and adaptive bisection.

use num_complex::Complex64;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussRule { nodes, weights }
    }

    /// Integral of `f` over `[a, b]` with this rule.
    pub fn apply<F: FnMut(f64) -> Complex64>(&self, a: f64, b: f64, mut f: F) -> Complex64 {
        let h = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut s = Complex64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += f(mid + h * x) * *w;
        }
        s * h
    }

    pub fn apply_real<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.apply(a, b, |x| Complex64::new(f(x), 0.0)).re
    }

    /// Composite rule over `panels` equal subintervals of `[a, b]`.
    pub fn composite<F: FnMut(f64) -> Complex64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> Complex64 {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut s = Complex64::new(0.0, 0.0);
        for k in 0..panels {
            let lo = a + h * k as f64;
            s += self.apply(lo, lo + h, &mut f);
        }
        s
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Result of an adaptive integration.
#[derive(Clone, Copy, Debug)]
pub struct Quadrature {
    pub value: Complex64,
    /// Sum of the local error estimates of the accepted panels.
    pub err: f64,
    /// Whether every panel met its tolerance before the depth limit.
    pub converged: bool,
}

/// Panels the adaptive rule may accept before it gives up on the tolerance.
const MAX_PANELS: usize = 20_000;

fn apply_with_abs<F: FnMut(f64) -> Complex64>(rule: &GaussRule, a: f64, b: f64, f: &mut F) -> (Complex64, f64) {
    let h = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut s = Complex64::new(0.0, 0.0);
    let mut abs = 0.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let v = f(mid + h * x);
        s += v * *w;
        abs += v.norm() * *w;
    }
    (s * h, abs * h.abs())
}

/// Adaptive bisection with a 15-point rule and an absolute tolerance.
///
/// A panel is accepted when the change under bisection is below its share of
/// `abs_tol`, or below the rounding floor `1e-14 ∫|f|` of the panel; at most
/// `MAX_PANELS` panels are accepted before the remainder is taken as is.
pub fn adaptive<F: FnMut(f64) -> Complex64>(a: f64, b: f64, abs_tol: f64, mut f: F) -> Quadrature {
    let rule = GaussRule::new(15);
    let mut out = Quadrature { value: Complex64::new(0.0, 0.0), err: 0.0, converged: true };
    let (whole, _) = apply_with_abs(&rule, a, b, &mut f);
    let mut stack = vec![(a, b, whole, 0u32)];
    let span = (b - a).abs().max(f64::MIN_POSITIVE);
    let mut accepted = 0usize;
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let (left, left_abs) = apply_with_abs(&rule, lo, mid, &mut f);
        let (right, right_abs) = apply_with_abs(&rule, mid, hi, &mut f);
        let refined = left + right;
        let diff = (refined - est).norm();
        let local_tol = abs_tol * (hi - lo).abs() / span;
        let floor = 1e-14 * (left_abs + right_abs);
        let exhausted = depth >= 40 || accepted + stack.len() >= MAX_PANELS;
        if diff <= local_tol.max(floor) || exhausted {
            if diff > local_tol.max(floor) {
                out.converged = false;
            }
            out.value += refined;
            out.err += diff;
            accepted += 1;
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    out
}

pub fn adaptive_real<F: FnMut(f64) -> f64>(a: f64, b: f64, abs_tol: f64, mut f: F) -> (f64, f64) {
    let q = adaptive(a, b, abs_tol, |x| Complex64::new(f(x), 0.0));
    (q.value.re, q.err)
}
