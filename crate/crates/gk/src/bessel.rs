//! Bessel functions and the kernels of the sum formula.
//!
//! Integer-order `J_n` comes from the power series when it is well conditioned
//! and from the periodic trapezoid rule on the integral representation
//! `J_n(z) = (1/2π)∫ exp(i(z sin θ − nθ)) dθ` otherwise. The complex-order series
//! `J*_ξ` is summed in double-double arithmetic once `|z| > 8`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use twofloat::TwoFloat;

use crate::error::{domain, Result};
use crate::quad::GaussRule;
use crate::report::{SweepReport, SweepRow};
use crate::special::{gamma, rgamma, sin_pi};

/// Largest order accepted by [`bessel_j_int`].
pub const MAX_ORDER: i64 = 200;
/// Largest argument modulus accepted by [`bessel_j_int`].
pub const MAX_ARG: f64 = 500.0;
/// Largest argument modulus accepted by [`bessel_j_star`].
pub const MAX_STAR_ARG: f64 = 60.0;
/// Offset used to evaluate the kernel at `ν = 0` as a symmetric average.
pub const INTEGER_NU_EPS: f64 = 1e-5;
/// Largest index accepted by [`gauss_fourier_g`].
pub const MAX_GAUSS_INDEX: usize = 64;

const MAX_TERMS: usize = 5000;
const DD_THRESHOLD: f64 = 8.0;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

// ---------------------------------------------------------------------------
// Series arithmetic in double or double-double precision

trait SeriesNum: Copy {
    fn from_c(z: Complex64) -> Self;
    fn add(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn div(self, o: Self) -> Self;
    fn div_real(self, x: f64) -> Self;
    fn to_c(self) -> Complex64;
}

impl SeriesNum for Complex64 {
    fn from_c(z: Complex64) -> Self {
        z
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn div(self, o: Self) -> Self {
        self / o
    }
    fn div_real(self, x: f64) -> Self {
        self / x
    }
    fn to_c(self) -> Complex64 {
        self
    }
}

/// Double-double quotient with one correction step (the library quotient of
/// two double-doubles is only accurate to about `1e-17`).
fn dd_div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q0 = a.hi() / b.hi();
    let r = a - b * q0;
    let q1 = r.hi() / b.hi();
    let r2 = r - b * q1;
    TwoFloat::new_add(q0, q1) + r2.hi() / b.hi()
}

#[derive(Clone, Copy)]
struct DdComplex {
    re: TwoFloat,
    im: TwoFloat,
}

impl SeriesNum for DdComplex {
    fn from_c(z: Complex64) -> Self {
        DdComplex { re: TwoFloat::from(z.re), im: TwoFloat::from(z.im) }
    }
    fn add(self, o: Self) -> Self {
        DdComplex { re: self.re + o.re, im: self.im + o.im }
    }
    fn mul(self, o: Self) -> Self {
        DdComplex { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }
    fn div(self, o: Self) -> Self {
        let n = o.re * o.re + o.im * o.im;
        DdComplex { re: dd_div(self.re * o.re + self.im * o.im, n), im: dd_div(self.im * o.re - self.re * o.im, n) }
    }
    fn div_real(self, x: f64) -> Self {
        DdComplex { re: self.re / x, im: self.im / x }
    }
    fn to_c(self) -> Complex64 {
        c(f64::from(self.re), f64::from(self.im))
    }
}

/// Three consecutive terms below `1e-18` times both the running maximum and
/// the current partial sum end the series.
fn series_done(m: usize, m_min: usize, term: f64, running_max: f64, partial: f64, small: &mut u32) -> bool {
    if m < m_min || running_max == 0.0 {
        return false;
    }
    if term < 1e-18 * running_max && term < 1e-18 * partial {
        *small += 1;
    } else {
        *small = 0;
    }
    *small >= 3
}

/// `Σ_m (−z²/4)^m / (m! Γ(ξ+m+1))` with exact zeros of `1/Γ` at non-positive integers.
fn j_star_sum<T: SeriesNum>(xi: Complex64, z: Complex64) -> Complex64 {
    if z == c(0.0, 0.0) {
        return rgamma(xi + 1.0);
    }
    let w = T::from_c(z).mul(T::from_c(z)).mul(T::from_c(c(-0.25, 0.0)));
    let xi_t = T::from_c(xi);
    let shifted = |k: usize| xi_t.add(T::from_c(c(k as f64, 0.0)));
    // first index with Re(ξ + m + 1) ≥ 1, where the Lanczos value is accurate
    let m0 = if xi.re >= 0.0 { 0 } else { (-xi.re).ceil() as usize };
    let mut recip = vec![T::from_c(c(0.0, 0.0)); m0 + 1];
    recip[m0] = T::from_c(rgamma(xi + (m0 + 1) as f64));
    for m in (0..m0).rev() {
        recip[m] = recip[m + 1].mul(shifted(m + 1));
    }
    let wabs = (z * z).norm() / 4.0;
    let mut sum = T::from_c(c(0.0, 0.0));
    let mut running_max = 0.0f64;
    let mut small = 0;
    let mut a = T::from_c(c(1.0, 0.0));
    let mut term = T::from_c(c(0.0, 0.0));
    for m in 0..MAX_TERMS {
        if m <= m0 {
            term = a.mul(recip[m]);
            a = a.mul(w).div_real((m + 1) as f64);
        } else {
            term = term.mul(w).div(shifted(m)).div_real(m as f64);
        }
        sum = sum.add(term);
        let t = term.to_c().norm();
        running_max = running_max.max(t);
        let decreasing = wabs < 0.5 * (m + 1) as f64 * (xi + (m + 1) as f64).norm();
        if decreasing && series_done(m, m0 + 1, t, running_max, sum.to_c().norm(), &mut small) {
            break;
        }
    }
    sum.to_c()
}

pub(crate) fn j_star_value(xi: Complex64, z: Complex64) -> Complex64 {
    if z.norm() <= DD_THRESHOLD {
        j_star_sum::<Complex64>(xi, z)
    } else {
        j_star_sum::<DdComplex>(xi, z)
    }
}

/// `J*_ξ(z) = Σ_m (−1)^m (z/2)^{2m} / (m! Γ(ξ+m+1))`, an entire function of both variables.
///
/// The absolute error is about `1e-16·Σ|terms|` for `|z| ≤ 8` and `1e-31·Σ|terms|`
/// beyond, where `Σ|terms| ≤ e^{|z|}·|1/Γ|`-scale; near `|z| = 60` this leaves
/// roughly eight correct digits for oscillatory arguments.
pub fn bessel_j_star(xi: Complex64, z: Complex64) -> Result<Complex64> {
    if !finite(xi) || !finite(z) {
        return domain("J*: non-finite input");
    }
    if z.norm() > MAX_STAR_ARG {
        return domain(format!("J*: |z| = {} exceeds {MAX_STAR_ARG}; the series overflows and an asymptotic expansion is needed", z.norm()));
    }
    Ok(j_star_value(xi, z))
}

// ---------------------------------------------------------------------------
// Integer order

fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `J_n(z)` for `n ≥ 0` from the normalized series; also returns the
/// cancellation ratio `Σ|t_m| / |Σ t_m|`.
fn j_int_series(n: u64, z: Complex64) -> (Complex64, f64) {
    if z == c(0.0, 0.0) {
        return (if n == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) }, 1.0);
    }
    let w = DdComplex::from_c(z).mul(DdComplex::from_c(z)).mul(DdComplex::from_c(c(-0.25, 0.0)));
    let wabs = (z * z).norm() / 4.0;
    let mut sum = DdComplex::from_c(c(1.0, 0.0));
    let mut term = sum;
    let mut abs_sum = 1.0;
    let mut small = 0;
    for m in 1..MAX_TERMS {
        term = term.mul(w).div_real(m as f64).div_real((n + m as u64) as f64);
        sum = sum.add(term);
        let t = term.to_c().norm();
        abs_sum += t;
        let decreasing = wabs < 0.5 * (m as f64 + 1.0) * (n as f64 + m as f64 + 1.0);
        if decreasing && series_done(m, 1, t, abs_sum, sum.to_c().norm(), &mut small) {
            break;
        }
    }
    let s = sum.to_c();
    let prefactor = (n as f64 * (z / 2.0).ln() - ln_factorial(n)).exp();
    let cond = if s.norm() > 0.0 { abs_sum / s.norm() } else { f64::INFINITY };
    (prefactor * s, cond)
}

/// `J_n(z)` by the periodic trapezoid rule on the integral representation.
///
/// With `N` nodes the error is the aliased sum of `J_{n±kN}(z)`, `k ≥ 1`.
pub(crate) fn j_int_trapezoid(n: i64, z: Complex64) -> Complex64 {
    let npts = (n.unsigned_abs() as f64 + 1.5 * z.norm()).ceil() as i64 + 64;
    let mut s = c(0.0, 0.0);
    let mut comp = c(0.0, 0.0);
    for k in 0..npts {
        let theta = 2.0 * PI * k as f64 / npts as f64;
        let reduced = 2.0 * PI * (n * k).rem_euclid(npts) as f64 / npts as f64;
        let v = (c(0.0, 1.0) * z * theta.sin() - c(0.0, reduced)).exp();
        // Kahan summation
        let y = v - comp;
        let t = s + y;
        comp = (t - s) - y;
        s = t;
    }
    s / npts as f64
}

pub(crate) fn j_int_unchecked(n: i64, z: Complex64) -> Complex64 {
    if z.norm() <= MAX_STAR_ARG {
        let (v, cond) = j_int_series(n.unsigned_abs(), z);
        if cond < 1e13 {
            return if n < 0 && n % 2 != 0 { -v } else { v };
        }
    }
    j_int_trapezoid(n, z)
}

/// Bessel function `J_n(z)` of integer order, `|n| ≤ 200`, `|z| ≤ 500`.
pub fn bessel_j_int(n: i64, z: Complex64) -> Result<Complex64> {
    if n.abs() > MAX_ORDER {
        return domain(format!("J_n: order {n} outside |n| ≤ {MAX_ORDER}"));
    }
    if !finite(z) || z.norm() > MAX_ARG {
        return domain(format!("J_n: argument {z} outside |z| ≤ {MAX_ARG}"));
    }
    Ok(j_int_unchecked(n, z))
}

/// `J_0(x), …, J_{nmax}(x)` for real `x` by Miller's backward recurrence,
/// normalized with `J_0 + 2Σ J_{2k} = 1`. Absolute accuracy about `1e-15`.
pub fn bessel_j_real_table(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let big = nmax.max(ax.ceil() as usize);
    let start = 2 * ((big + 20 + (160.0 * big as f64).sqrt() as usize) / 2 + 1);
    let mut next = 0.0f64;
    let mut cur = 1e-300f64;
    let mut norm = 0.0f64;
    for k in (1..=start).rev() {
        // cur = J_k, next = J_{k+1}
        if k <= nmax {
            out[k] = cur;
        }
        if k % 2 == 0 {
            norm += 2.0 * cur;
        }
        let prev = 2.0 * k as f64 / ax * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    out[0] = cur;
    norm += cur;
    for (k, v) in out.iter_mut().enumerate() {
        *v /= norm;
        if x < 0.0 && k % 2 == 1 {
            *v = -*v;
        }
    }
    out
}

/// Envelope `min{e^{|Im z|}, |z/2|^{|n|} e^{|z|} / |n|!}` for `|J_n(z)|`.
pub fn bessel_bound_small(n: i64, z: Complex64) -> f64 {
    let k = n.unsigned_abs();
    let first = z.im.abs().exp();
    let log_second = if z.norm() == 0.0 {
        if k == 0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        k as f64 * (z.norm() / 2.0).ln() + z.norm() - ln_factorial(k)
    };
    first.min(log_second.exp())
}

/// Envelope `(4|Re(πz)|^{−1/2} + |n||Re(πz)|^{−1}) e^{|Im z|}` for `|J_n(z)|`,
/// from the first-derivative-test argument; requires `Re z ≠ 0`.
pub fn bessel_bound_large(n: i64, z: Complex64) -> f64 {
    let re = (PI * z.re).abs();
    (4.0 / re.sqrt() + n.unsigned_abs() as f64 / re) * z.im.abs().exp()
}

// ---------------------------------------------------------------------------
// Kernels of the sum formula

/// `𝒥_{ν,p}(z) = |z/2|^{2ν} (z/|z|)^{−2p} J*_{ν−p}(z) J*_{ν+p}(z̄)`.
pub fn kernel_j(nu: Complex64, p: i64, z: Complex64) -> Complex64 {
    let r = z.norm();
    let phase = (z.conj() / r).powi(2 * p as i32);
    let scale = (2.0 * nu * (r / 2.0).ln()).exp();
    scale * phase * j_star_value(nu - p as f64, z) * j_star_value(nu + p as f64, z.conj())
}

pub(crate) fn kernel_k_unchecked(nu: Complex64, p: i64, z: Complex64) -> Complex64 {
    if nu.norm() < INTEGER_NU_EPS {
        let e = INTEGER_NU_EPS;
        return 0.5 * (kernel_k_unchecked(nu + e, p, z) + kernel_k_unchecked(nu - e, p, z));
    }
    (kernel_j(-nu, -p, z) - kernel_j(nu, p, z)) / sin_pi(nu)
}

/// `𝒦_{ν,p}(z) = (𝒥_{−ν,−p}(z) − 𝒥_{ν,p}(z)) / sin(πν)` for `z ≠ 0`, `|Re ν| < 1`.
///
/// At `ν = 0` the removable singularity is handled by averaging `ν ± 1e-5`.
pub fn kernel_k(nu: Complex64, p: i64, z: Complex64) -> Result<Complex64> {
    if !finite(nu) || !finite(z) {
        return domain("kernel: non-finite input");
    }
    if z == c(0.0, 0.0) {
        return domain("kernel: z = 0");
    }
    if nu.re.abs() >= 1.0 {
        return domain(format!("kernel: |Re ν| = {} ≥ 1", nu.re.abs()));
    }
    if z.norm() > MAX_STAR_ARG {
        return domain(format!("kernel: |z| = {} exceeds {MAX_STAR_ARG}", z.norm()));
    }
    Ok(kernel_k_unchecked(nu, p, z))
}

/// Wynn's epsilon algorithm applied to a sequence of partial sums.
pub fn wynn_epsilon(seq: &[Complex64]) -> Complex64 {
    let n = seq.len();
    if n == 0 {
        return c(0.0, 0.0);
    }
    let mut prev = vec![c(0.0, 0.0); n + 1];
    let mut cur: Vec<Complex64> = seq.to_vec();
    let mut best = seq[n - 1];
    let mut k = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let d = cur[i + 1] - cur[i];
            let base = prev[i + 1];
            if d.norm() == 0.0 {
                next.push(cur[i + 1]);
            } else {
                next.push(base + 1.0 / d);
            }
        }
        prev = cur;
        cur = next;
        k += 1;
        if k % 2 == 0 {
            if let Some(v) = cur.last() {
                if finite(*v) {
                    best = *v;
                }
            }
        }
    }
    best
}

/// Value of the half-line integral representation of the kernel.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KernelIntegral {
    #[serde(serialize_with = "crate::expsum::ser_complex")]
    pub value: Complex64,
    /// Difference between two extrapolations with different numbers of half periods.
    pub err: f64,
    pub half_periods: usize,
}

/// `𝒦_{ν,p}(u)` from `((−1)^p / (π/2)) ∫_0^∞ y^{2ν} ρ^{2p} J_{2p}(|u||ye^{iθ} + (ye^{iθ})^{−1}|) dy/y`,
/// where `ρ` is the phase of `ye^{iθ} + (ye^{iθ})^{−1}`; requires `|Re ν| < 1/4`.
pub fn kernel_k_integral(nu: Complex64, p: i64, u: Complex64) -> Result<KernelIntegral> {
    if u == c(0.0, 0.0) || !finite(u) || !finite(nu) {
        return domain("kernel integral: u must be finite and nonzero");
    }
    if nu.re.abs() >= 0.25 {
        return domain("kernel integral: needs |Re ν| < 1/4");
    }
    let r = u.norm();
    let theta = u.arg();
    let wvec = |y: f64, th: f64| c(0.0, th).exp() * y + c(0.0, -th).exp() / y;
    let order = (2 * p).unsigned_abs() as usize;
    // contributions of y and 1/y combined on [1, ∞)
    let integrand = |y: f64| {
        let w_plus = wvec(y, theta);
        let w_minus = wvec(y, -theta);
        let m = w_plus.norm();
        let j = if m == 0.0 {
            if p == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            bessel_j_real_table(order, r * m)[order]
        };
        let ph = |w: Complex64| if w.norm() == 0.0 { c(1.0, 0.0) } else { (w / w.norm()).powi(2 * p as i32) };
        let lny = y.ln();
        let a = (2.0 * nu * lny).exp() * ph(w_plus);
        let b = (-2.0 * nu * lny).exp() * ph(w_minus);
        (a + b) * j / y
    };
    let y_of = |s: f64| {
        let t = (s / r).powi(2) - 2.0 * (2.0 * theta).cos();
        let disc = (t * t - 4.0).max(0.0).sqrt();
        ((t + disc) / 2.0).sqrt()
    };
    let rule = GaussRule::new(24);
    let s0 = r * wvec(1.0, theta).norm();
    let mut partial = Vec::new();
    let mut acc = c(0.0, 0.0);
    let mut lo = 1.0;
    let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
    let mut estimates: Vec<Complex64> = Vec::new();
    for k in 1..=400usize {
        let hi = y_of(s0 + k as f64 * PI);
        acc += rule.apply(lo, hi, integrand);
        lo = hi;
        partial.push(acc);
        if k >= 40 && k % 20 == 0 {
            estimates.push(wynn_epsilon(&partial[partial.len() - 30..]));
            let n = estimates.len();
            if n >= 2 {
                let err = (estimates[n - 1] - estimates[n - 2]).norm();
                if err < 1e-11 || k == 400 {
                    return Ok(KernelIntegral { value: estimates[n - 1] * sign * 2.0 / PI, err: err * 2.0 / PI, half_periods: k });
                }
            }
        }
    }
    unreachable!("loop returns at k = 400")
}

// ---------------------------------------------------------------------------
// Graf addition

/// `|LHS − RHS|` of the Neumann–Graf addition formula with the bilinear
/// series truncated at `|m| ≤ m_trunc`.
pub fn graf_residual(p: i64, u: Complex64, y: f64, m_trunc: i64) -> Result<f64> {
    if u == c(0.0, 0.0) || !finite(u) {
        return domain("graf: u must be finite and nonzero");
    }
    if !(y > 0.0) || !y.is_finite() {
        return domain("graf: y must be positive");
    }
    let theta = u.arg();
    let yt = c(0.0, theta).exp() * y;
    let w = yt + 1.0 / yt;
    if w.norm() < 1e-12 {
        return domain("graf: y² = e^{−2iθ} is excluded");
    }
    let r = u.norm();
    if m_trunc + p.abs() > MAX_ORDER || r * (y + 1.0 / y) > MAX_ARG {
        return domain("graf: truncation or argument outside the Bessel range");
    }
    let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
    let lhs = sign * (w / w.norm()).powi(2 * p as i32) * j_int_unchecked(2 * p, c(r * w.norm(), 0.0));
    let mut rhs = c(0.0, 0.0);
    for m in -m_trunc..=m_trunc {
        let sm = if m % 2 == 0 { 1.0 } else { -1.0 };
        let a = j_int_unchecked(m + p, c(y * r, 0.0));
        let b = j_int_unchecked(m - p, c(r / y, 0.0));
        rhs += sm * a * b * c(0.0, 2.0 * m as f64 * theta).exp();
    }
    Ok((lhs - rhs).norm())
}

// ---------------------------------------------------------------------------
// Gaussian Fourier integrals

/// `G_0(y), …, G_{nmax}(y)` where `G_n(y) = ∫ x^n exp(2ixy − x²) dx`.
pub fn gauss_fourier_g_table(nmax: usize, y: f64) -> Vec<Complex64> {
    let mut g = Vec::with_capacity(nmax + 1);
    g.push(c(PI.sqrt() * (-y * y).exp(), 0.0));
    for n in 0..nmax {
        let prev = if n == 0 { c(0.0, 0.0) } else { g[n - 1] };
        let next = c(0.0, y) * g[n] + 0.5 * n as f64 * prev;
        g.push(next);
    }
    g
}

/// `G_n(y) = ∫_{−∞}^{∞} x^n exp(2ixy − x²) dx` by the three-term recurrence.
pub fn gauss_fourier_g(n: usize, y: f64) -> Result<Complex64> {
    if n > MAX_GAUSS_INDEX {
        return domain(format!("G_n: index {n} exceeds {MAX_GAUSS_INDEX}"));
    }
    if !y.is_finite() {
        return domain("G_n: non-finite argument");
    }
    Ok(gauss_fourier_g_table(n, y)[n])
}

// ---------------------------------------------------------------------------
// Poisson summation over ℤ[i]

/// `f(x + iy) = Σ c·x^a·y^b · exp(−t(x² + y²))` with real coefficients.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussianPolynomial {
    pub t: f64,
    /// Terms `(coefficient, a, b)`.
    pub terms: Vec<(f64, u32, u32)>,
}

impl GaussianPolynomial {
    pub fn gaussian(t: f64) -> Self {
        GaussianPolynomial { t, terms: vec![(1.0, 0, 0)] }
    }

    pub fn monomial(t: f64, a: u32, b: u32) -> Self {
        GaussianPolynomial { t, terms: vec![(1.0, a, b)] }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0) || !self.t.is_finite() {
            return domain("Gaussian family needs t > 0");
        }
        if self.terms.iter().any(|&(cf, a, b)| !cf.is_finite() || a + b > 40) {
            return domain("Gaussian family: degree above 40 or non-finite coefficient");
        }
        Ok(())
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|&(_, a, b)| a + b).max().unwrap_or(0)
    }

    fn abs_coefficients(&self) -> f64 {
        self.terms.iter().map(|t| t.0.abs()).sum()
    }

    pub fn eval(&self, z: Complex64) -> f64 {
        let poly: f64 = self.terms.iter().map(|&(cf, a, b)| cf * z.re.powi(a as i32) * z.im.powi(b as i32)).sum();
        poly * (-self.t * z.norm_sqr()).exp()
    }

    /// `f̂(w) = ∫ f(z) e(−Re(wz)) d₊z` in closed form.
    pub fn fourier(&self, w: Complex64) -> Complex64 {
        let deg = self.degree() as usize;
        let st = self.t.sqrt();
        let gu = gauss_fourier_g_table(deg, -PI * w.re / st);
        let gv = gauss_fourier_g_table(deg, PI * w.im / st);
        let mut s = c(0.0, 0.0);
        for &(cf, a, b) in &self.terms {
            let scale = self.t.powf(-0.5 * (a + b + 2) as f64);
            s += cf * scale * gu[a as usize] * gv[b as usize];
        }
        s
    }

    /// The Laplacian, which stays in the family.
    pub fn laplacian(&self) -> Self {
        let t = self.t;
        let mut acc: std::collections::BTreeMap<(u32, u32), f64> = Default::default();
        let mut push = |k: (u32, u32), v: f64| *acc.entry(k).or_insert(0.0) += v;
        for &(cf, a, b) in &self.terms {
            for (e, other, swap) in [(a, b, false), (b, a, true)] {
                let key = |ee: u32| if swap { (other, ee) } else { (ee, other) };
                if e >= 2 {
                    push(key(e - 2), cf * (e * (e - 1)) as f64);
                }
                push(key(e), -cf * 2.0 * t * (2 * e + 1) as f64);
                push(key(e + 2), cf * 4.0 * t * t);
            }
        }
        GaussianPolynomial { t, terms: acc.into_iter().filter(|(_, v)| *v != 0.0).map(|((a, b), v)| (v, a, b)).collect() }
    }

    /// Bound `|f̂(w)| ≤ C (1 + |w|)^d e^{−π²|w|²/t}` as `(C, d, π²/t)`.
    fn fourier_envelope(&self) -> (f64, u32, f64) {
        let deg = self.degree() as usize;
        // |p_n(Y)| ≤ B_n (1+|Y|)^n for G_n = √π e^{−Y²} p_n(Y)
        let mut bnd = vec![1.0f64; deg + 1];
        for n in 1..=deg {
            bnd[n] = bnd[n - 1] + if n >= 2 { 0.5 * (n - 1) as f64 * bnd[n - 2] } else { 0.0 };
        }
        let stretch = (PI / self.t.sqrt()).max(1.0);
        let cst: f64 = self
            .terms
            .iter()
            .map(|&(cf, a, b)| cf.abs() * self.t.powf(-0.5 * (a + b + 2) as f64) * PI * bnd[a as usize] * bnd[b as usize] * stretch.powi((a + b) as i32))
            .sum();
        (cst, self.degree(), PI * PI / self.t)
    }

    /// `∫_ℂ |f(z)| d₊z` by tensor Gauss–Legendre in polar coordinates.
    pub fn abs_integral(&self) -> f64 {
        let d = self.degree() as f64;
        let mut rmax = (50.0 / self.t).sqrt();
        while (1.0 + rmax).powf(d) * (-self.t * rmax * rmax).exp() * self.abs_coefficients() > 1e-22 {
            rmax *= 1.2;
        }
        let rule = GaussRule::new(10);
        let (nr, nth) = (160usize, 192usize);
        let mut total = 0.0;
        for ir in 0..nr {
            let r0 = rmax * ir as f64 / nr as f64;
            let r1 = rmax * (ir + 1) as f64 / nr as f64;
            total += rule.apply_real(r0, r1, |r| {
                let mut inner = 0.0;
                for it in 0..nth {
                    let a0 = 2.0 * PI * it as f64 / nth as f64;
                    let a1 = 2.0 * PI * (it + 1) as f64 / nth as f64;
                    inner += rule.apply_real(a0, a1, |th| self.eval(c(r * th.cos(), r * th.sin())).abs());
                }
                inner * r
            });
        }
        total
    }
}

/// `Σ_{|α| > R} C (1 + |α|)^d e^{−s|α|²}` bounded shell by shell.
fn lattice_tail_bound(cst: f64, d: u32, s: f64, radius: f64) -> f64 {
    let mut total = 0.0;
    let mut k = radius.floor().max(0.0);
    loop {
        let outer = k + 1.0 + std::f64::consts::FRAC_1_SQRT_2;
        let inner = (k - std::f64::consts::FRAC_1_SQRT_2).max(0.0);
        let count = PI * (outer * outer - inner * inner);
        let term = cst * count * (2.0 + k).powi(d as i32) * (-s * k * k).exp();
        total += term;
        if (term < 1e-300 || term < 1e-30 * total) && k > radius + 2.0 + (d as f64 / s).sqrt() {
            break;
        }
        k += 1.0;
    }
    total
}

/// Both sides of Poisson summation over `ℤ[i]`, truncated at `|α| ≤ cutoff`.
#[derive(Clone, Debug, Serialize)]
pub struct PoissonCheck {
    #[serde(serialize_with = "crate::expsum::ser_complex")]
    pub lhs: Complex64,
    #[serde(serialize_with = "crate::expsum::ser_complex")]
    pub rhs: Complex64,
    /// Upper bound for the neglected part of `Σ f(α)`.
    pub lhs_tail: f64,
    /// Upper bound for the neglected part of `Σ f̂(α)`.
    pub rhs_tail: f64,
}

impl PoissonCheck {
    pub fn discrepancy(&self) -> f64 {
        (self.lhs - self.rhs).norm()
    }
}

pub fn poisson_check_2d(f: &GaussianPolynomial, cutoff: f64) -> Result<PoissonCheck> {
    f.validate()?;
    if !(cutoff > 0.0) || cutoff > 1e4 {
        return domain("poisson: cutoff must lie in (0, 1e4]");
    }
    let n = cutoff.floor() as i64;
    let mut lhs = c(0.0, 0.0);
    let mut rhs = c(0.0, 0.0);
    for a in -n..=n {
        for b in -n..=n {
            let z = c(a as f64, b as f64);
            if z.norm() <= cutoff {
                lhs += f.eval(z);
                rhs += f.fourier(z);
            }
        }
    }
    let lhs_tail = lattice_tail_bound(f.abs_coefficients(), f.degree(), f.t, cutoff);
    let (cf, df, sf) = f.fourier_envelope();
    let rhs_tail = lattice_tail_bound(cf, df, sf, cutoff);
    Ok(PoissonCheck { lhs, rhs, lhs_tail, rhs_tail })
}

/// One comparison `|f̂(w)| ≤ (2π|w|)^{−2j} ∫|Δ^j f|`.
#[derive(Clone, Debug, Serialize)]
pub struct DecayRow {
    pub j: u32,
    #[serde(serialize_with = "crate::expsum::ser_complex")]
    pub w: Complex64,
    pub transform_abs: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Checks the Laplacian decay bound for `j = 0..=j_max` at each `w ≠ 0` of the grid.
pub fn laplacian_decay_check(f: &GaussianPolynomial, j_max: u32, w_grid: &[Complex64]) -> Result<Vec<DecayRow>> {
    f.validate()?;
    let mut lap = f.clone();
    let mut integrals = Vec::new();
    for _ in 0..=j_max {
        integrals.push(lap.abs_integral());
        lap = lap.laplacian();
    }
    let mut rows = Vec::new();
    for &w in w_grid {
        if w == c(0.0, 0.0) {
            return domain("decay check: w must be nonzero");
        }
        let fa = f.fourier(w).norm();
        for j in 0..=j_max {
            let bound = (2.0 * PI * w.norm()).powi(-2 * j as i32) * integrals[j as usize];
            rows.push(DecayRow { j, w, transform_abs: fa, bound, holds: fa <= bound });
        }
    }
    Ok(rows)
}

/// `| |2πw|² f̂(w) + (Δf)^(w) |`, zero by integration by parts.
pub fn laplacian_identity_residual(f: &GaussianPolynomial, w: Complex64) -> f64 {
    let lhs = (2.0 * PI * w.norm()).powi(2) * f.fourier(w);
    (lhs + f.laplacian().fourier(w)).norm()
}

// ---------------------------------------------------------------------------
// The singular integral ∫ |ψ|^{−1/2}

/// `ψ(y, x; φ) = e^y sin(φ − x) + e^{−y} sin(φ + x)`.
pub fn psi(y: f64, x: f64, phi: f64) -> f64 {
    y.exp() * (phi - x).sin() + (-y).exp() * (phi + x).sin()
}

fn psi_zeros(y: f64, x: f64) -> Vec<f64> {
    let n = 4096;
    let mut zeros = Vec::new();
    let f = |p: f64| psi(y, x, p);
    // grid offset keeps the special zeros 0 and ±π away from the nodes
    let offset = std::f64::consts::FRAC_1_PI * 2.0 * PI / n as f64;
    for k in 0..n {
        let a = -PI + offset + 2.0 * PI * k as f64 / n as f64;
        let b = -PI + offset + 2.0 * PI * (k + 1) as f64 / n as f64;
        let (fa, fb) = (f(a), f(b));
        if fa == 0.0 {
            zeros.push(a);
        } else if fa * fb < 0.0 {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(lo) * f(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo < 1e-17 {
                    break;
                }
            }
            zeros.push(0.5 * (lo + hi));
        }
    }
    zeros
}

/// `∫_{−π}^{π} |ψ(y, x; φ)|^{−1/2} dφ` by direct quadrature: the zeros of `ψ`
/// are located numerically and each square-root endpoint singularity is
/// removed by the substitution `φ = φ₀ ± s²`.
pub fn psi_power_integral(x: f64, y: f64) -> f64 {
    let zeros = psi_zeros(y, x);
    let rule = GaussRule::new(30);
    let mut pts = zeros.clone();
    pts.push(zeros[0] + 2.0 * PI);
    let mut total = 0.0;
    for win in pts.windows(2) {
        let (a, b) = (win[0], win[1]);
        let half = (0.5 * (b - a)).sqrt();
        let g = |phi: f64| psi(y, x, phi).abs().powf(-0.5);
        total += rule.apply_real(0.0, half, |s| 2.0 * s * g(a + s * s));
        total += rule.apply_real(0.0, half, |s| 2.0 * s * g(b - s * s));
    }
    total
}

/// Closed form `4 (2Z)^{−1/2} ∫_0^{π/2} (sin θ)^{−1/2} dθ` with `Z² = cosh²y − sin²x`.
pub fn psi_power_closed_form(x: f64, y: f64) -> f64 {
    let z = (y.cosh().powi(2) - x.sin().powi(2)).sqrt();
    let beta = gamma(c(0.25, 0.0)).re * PI.sqrt() / (2.0 * gamma(c(0.75, 0.0)).re);
    4.0 * beta / (2.0 * z).sqrt()
}

/// Records `J·√cos x` over the grid; requires `|x| < π/2`.
pub fn psi_power_sweep(x_grid: &[f64], y_grid: &[f64]) -> Result<SweepReport> {
    let mut rows = Vec::new();
    for &x in x_grid {
        if x.abs() >= PI / 2.0 {
            return domain("psi power integral: needs |x| < π/2");
        }
        for &y in y_grid {
            let j = psi_power_integral(x, y);
            rows.push(SweepRow::new(vec![("x", x.into()), ("y", y.into())], j, x.cos().powf(-0.5)));
        }
    }
    Ok(SweepReport::new("psi_power", rows))
}
