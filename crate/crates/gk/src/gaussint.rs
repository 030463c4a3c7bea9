//! Exact arithmetic in the Gaussian integers.
//!
//! Elements are stored with `i64` components. Every arithmetic operator is
//! built on checked integer operations in the build profiles used here, so an
//! overflow aborts instead of wrapping.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, GkError, Result};
use crate::expsum::CompensatedSum;

/// An element `re + im·i` of the ring of Gaussian integers.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct GaussianInt {
    pub re: i64,
    pub im: i64,
}

/// The four units `1, i, -1, -i`, in that order (`UNITS[k] = i^k`).
pub const UNITS: [GaussianInt; 4] = [GaussianInt { re: 1, im: 0 }, GaussianInt { re: 0, im: 1 }, GaussianInt { re: -1, im: 0 }, GaussianInt { re: 0, im: -1 }];

impl GaussianInt {
    pub const ZERO: GaussianInt = GaussianInt { re: 0, im: 0 };
    pub const ONE: GaussianInt = GaussianInt { re: 1, im: 0 };
    pub const I: GaussianInt = GaussianInt { re: 0, im: 1 };

    pub const fn new(re: i64, im: i64) -> Self {
        GaussianInt { re, im }
    }

    pub const fn from_int(re: i64) -> Self {
        GaussianInt { re, im: 0 }
    }

    pub fn is_zero(self) -> bool {
        self.re == 0 && self.im == 0
    }

    pub fn is_unit(self) -> bool {
        self.norm() == 1
    }

    /// `re² + im²`.
    pub fn norm(self) -> i64 {
        self.re * self.re + self.im * self.im
    }

    pub fn conj(self) -> Self {
        GaussianInt::new(self.re, -self.im)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re as f64, self.im as f64)
    }

    /// Absolute value `|self|` as a float.
    pub fn abs(self) -> f64 {
        (self.norm() as f64).sqrt()
    }

    /// `self^e`.
    pub fn pow(self, mut e: u32) -> Self {
        let mut base = self;
        let mut acc = GaussianInt::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            e >>= 1;
            if e > 0 {
                base *= base;
            }
        }
        acc
    }

    /// Index `k` with `self = i^k · canonical(self)`; zero has index 0.
    pub fn quadrant(self) -> usize {
        if self.is_zero() {
            return 0;
        }
        if self.re > 0 && self.im >= 0 {
            0
        } else if self.re <= 0 && self.im > 0 {
            1
        } else if self.re < 0 && self.im <= 0 {
            2
        } else {
            3
        }
    }

    /// The associate with `re > 0, im >= 0` (zero maps to zero).
    pub fn canonical(self) -> Self {
        self.split_unit().1
    }

    /// Returns `(unit, canonical)` with `self = unit · canonical`.
    pub fn split_unit(self) -> (Self, Self) {
        let k = self.quadrant();
        (UNITS[k], self * UNITS[(4 - k) % 4])
    }

    /// Inverse of a unit. Panics on non-units.
    pub fn unit_inverse(self) -> Self {
        assert!(self.is_unit(), "unit_inverse of non-unit {self}");
        self.conj()
    }

    /// Division with remainder of minimal norm: `self = q·d + r`.
    ///
    /// Among remainders of equal norm the one in the canonical quadrant
    /// wins, then quadrants `i, -1, -i` in turn.
    pub fn div_rem(self, d: Self) -> Result<(Self, Self)> {
        if d.is_zero() {
            return domain("division by zero");
        }
        let n = d.norm();
        let p = self * d.conj();
        let q0 = GaussianInt::new(round_div(p.re, n), round_div(p.im, n));
        let mut best: Option<(Self, Self)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                let q = q0 + GaussianInt::new(dx, dy);
                let r = self - q * d;
                let better = match best {
                    None => true,
                    Some((_, br)) => residue_order(r, br) == Ordering::Less,
                };
                if better {
                    best = Some((q, r));
                }
            }
        }
        Ok(best.expect("nine candidates"))
    }

    /// Canonical residue of `self` modulo `c`.
    pub fn rem(self, c: Self) -> Result<Self> {
        Ok(self.div_rem(c)?.1)
    }

    /// Residue modulo `c`, panicking on `c = 0`; for internal hot paths.
    pub(crate) fn reduce(self, c: Self) -> Self {
        self.div_rem(c).expect("nonzero modulus").1
    }

    /// Whether `self` divides `n` (zero divides only zero).
    pub fn divides(self, n: Self) -> bool {
        if self.is_zero() {
            return n.is_zero();
        }
        let d = self.norm();
        let p = n * self.conj();
        p.re % d == 0 && p.im % d == 0
    }

    /// Exact quotient `n / self`, or `None` if `self` does not divide `n`.
    pub fn exact_div_of(self, n: Self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let d = self.norm();
        let p = n * self.conj();
        if p.re % d == 0 && p.im % d == 0 {
            Some(GaussianInt::new(p.re / d, p.im / d))
        } else {
            None
        }
    }

    /// `self / d`, panicking when the division is inexact.
    pub fn div_exact(self, d: Self) -> Self {
        d.exact_div_of(self).unwrap_or_else(|| panic!("{d} does not divide {self}"))
    }

    /// Whether `self ≡ other (mod c)`.
    pub fn congruent(self, other: Self, c: Self) -> bool {
        c.divides(self - other)
    }
}

fn round_div(p: i64, n: i64) -> i64 {
    // nearest integer to p/n for n > 0, halves rounded down
    (2 * p + n).div_euclid(2 * n)
}

/// Total order used to pick residue representatives: smaller norm first,
/// then quadrant index, then larger real part, then larger imaginary part.
pub fn residue_order(a: GaussianInt, b: GaussianInt) -> Ordering {
    a.norm().cmp(&b.norm()).then(a.quadrant().cmp(&b.quadrant())).then(b.re.cmp(&a.re)).then(b.im.cmp(&a.im))
}

impl Add for GaussianInt {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        GaussianInt::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for GaussianInt {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        GaussianInt::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for GaussianInt {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        GaussianInt::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
}

impl Mul<i64> for GaussianInt {
    type Output = Self;
    fn mul(self, k: i64) -> Self {
        GaussianInt::new(self.re * k, self.im * k)
    }
}

impl Neg for GaussianInt {
    type Output = Self;
    fn neg(self) -> Self {
        GaussianInt::new(-self.re, -self.im)
    }
}

impl AddAssign for GaussianInt {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl SubAssign for GaussianInt {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl MulAssign for GaussianInt {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl From<i64> for GaussianInt {
    fn from(re: i64) -> Self {
        GaussianInt::from_int(re)
    }
}

impl fmt::Display for GaussianInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re, self.im) {
            (re, 0) => write!(f, "{re}"),
            (0, im) => write!(f, "{im}i"),
            (re, im) if im > 0 => write!(f, "{re}+{im}i"),
            (re, im) => write!(f, "{re}-{}i", -(im as i128)),
        }
    }
}

impl fmt::Debug for GaussianInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for GaussianInt {
    type Err = GkError;

    /// Accepts `a`, `a+bi`, `a-bi`, `bi`, `-bi`, with `i` alone standing
    /// for `1i`; blanks are ignored anywhere.
    fn from_str(s: &str) -> Result<Self> {
        let chars: Vec<(usize, char)> = s.char_indices().filter(|(_, c)| !c.is_whitespace()).collect();
        if chars.is_empty() {
            return Err(GkError::Parse { pos: 0, msg: "empty Gaussian integer literal".into() });
        }
        let mut p = Parser { chars: &chars, idx: 0, len: s.len() };
        let (first, first_imag) = p.term(true)?;
        if p.at_end() {
            return Ok(if first_imag { GaussianInt::new(0, first) } else { GaussianInt::new(first, 0) });
        }
        if first_imag {
            return Err(p.error("unexpected text after imaginary part"));
        }
        let (second, second_imag) = p.term(false)?;
        if !second_imag {
            return Err(p.error("second term must be imaginary"));
        }
        if !p.at_end() {
            return Err(p.error("unexpected trailing text"));
        }
        Ok(GaussianInt::new(first, second))
    }
}

struct Parser<'a> {
    chars: &'a [(usize, char)],
    idx: usize,
    len: usize,
}

impl Parser<'_> {
    fn at_end(&self) -> bool {
        self.idx >= self.chars.len()
    }

    fn pos(&self) -> usize {
        self.chars.get(self.idx).map(|c| c.0).unwrap_or(self.len)
    }

    fn error(&self, msg: &str) -> GkError {
        GkError::Parse { pos: self.pos(), msg: msg.into() }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.idx).map(|c| c.1)
    }

    /// Parses `[sign] digits* [i]`; the sign is mandatory unless `leading`.
    fn term(&mut self, leading: bool) -> Result<(i64, bool)> {
        let mut neg = false;
        match self.peek() {
            Some('+') => self.idx += 1,
            Some('-') => {
                neg = true;
                self.idx += 1
            }
            _ if !leading => return Err(self.error("expected '+' or '-'")),
            _ => {}
        }
        let start = self.idx;
        let mut value: i64 = 0;
        while let Some(c) = self.peek() {
            if let Some(d) = c.to_digit(10) {
                value = value.checked_mul(10).and_then(|v| v.checked_add(d as i64)).ok_or_else(|| self.error("integer literal too large"))?;
                self.idx += 1;
            } else {
                break;
            }
        }
        let has_digits = self.idx > start;
        let imag = self.peek() == Some('i');
        if imag {
            self.idx += 1;
            if !has_digits {
                value = 1;
            }
        } else if !has_digits {
            return Err(self.error("expected digits"));
        }
        Ok((if neg { -value } else { value }, imag))
    }
}

impl Serialize for GaussianInt {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for GaussianInt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Greatest common divisor, normalized to the canonical associate.
pub fn gcd(m: GaussianInt, n: GaussianInt) -> GaussianInt {
    let (mut a, mut b) = (m, n);
    while !b.is_zero() {
        let r = a.reduce(b);
        a = b;
        b = r;
    }
    a.canonical()
}

/// Extended gcd: returns `(g, s, t)` with `g = s·m + t·n` and `g` canonical.
pub fn xgcd(m: GaussianInt, n: GaussianInt) -> Result<(GaussianInt, GaussianInt, GaussianInt)> {
    if m.is_zero() && n.is_zero() {
        return domain("gcd of (0, 0) is undefined");
    }
    let (mut r0, mut r1) = (m, n);
    let (mut s0, mut s1) = (GaussianInt::ONE, GaussianInt::ZERO);
    let (mut t0, mut t1) = (GaussianInt::ZERO, GaussianInt::ONE);
    while !r1.is_zero() {
        let (q, r) = r0.div_rem(r1)?;
        (r0, r1) = (r1, r);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    let (unit, g) = r0.split_unit();
    let inv = unit.unit_inverse();
    Ok((g, s0 * inv, t0 * inv))
}

/// Whether `gcd(m, n)` is a unit.
pub fn coprime(m: GaussianInt, n: GaussianInt) -> bool {
    gcd(m, n).is_unit()
}

/// Least common multiple, canonical.
pub fn lcm(m: GaussianInt, n: GaussianInt) -> GaussianInt {
    if m.is_zero() || n.is_zero() {
        return GaussianInt::ZERO;
    }
    (m * n).div_exact(gcd(m, n)).canonical()
}

/// Inverse of `m` modulo `c`, as a canonical residue.
pub fn mod_inverse(m: GaussianInt, c: GaussianInt) -> Result<GaussianInt> {
    if c.is_zero() {
        return domain("modulus must be nonzero");
    }
    let (g, s, _) = xgcd(m, c)?;
    if !g.is_unit() {
        return domain(format!("{m} is not invertible modulo {c}: common factor {g}"));
    }
    s.rem(c)
}

/// Solves `x ≡ r1 (mod m1)`, `x ≡ r2 (mod m2)`; returns `(x, lcm)` or `None`
/// when the congruences are incompatible.
pub fn crt_pair(r1: GaussianInt, m1: GaussianInt, r2: GaussianInt, m2: GaussianInt) -> Option<(GaussianInt, GaussianInt)> {
    let (g, s, _) = xgcd(m1, m2).ok()?;
    let diff = r2 - r1;
    let k = g.exact_div_of(diff)?;
    let l = lcm(m1, m2);
    // x = r1 + m1 * s * k with s*m1 ≡ g (mod m2)
    let x = r1 + m1 * (s * k).reduce(m2.div_exact(g));
    Some((x.reduce(l), l))
}

/// Rational primes up to `n` by a plain sieve.
fn small_primes(n: u64) -> Vec<u64> {
    let n = n as usize;
    let mut is = vec![true; n + 1];
    let mut out = Vec::new();
    for p in 2..=n {
        if is[p] {
            out.push(p as u64);
            let mut k = p * p;
            while k <= n {
                is[k] = false;
                k += p;
            }
        }
    }
    out
}

fn mod_pow(mut b: u128, mut e: u128, m: u128) -> u128 {
    let mut acc = 1u128;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

/// Canonical Gaussian prime above a rational prime `p ≡ 1 (mod 4)`.
fn split_prime(p: u64) -> GaussianInt {
    let pm = p as u128;
    let mut c = 2u128;
    let x = loop {
        if mod_pow(c, (pm - 1) / 2, pm) == pm - 1 {
            break mod_pow(c, (pm - 1) / 4, pm);
        }
        c += 1;
    };
    let g = gcd(GaussianInt::from_int(p as i64), GaussianInt::new(x as i64, 1));
    debug_assert_eq!(g.norm() as u64, p);
    g
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Unit times an ordered list of canonical prime powers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Factorization {
    pub unit: GaussianInt,
    pub factors: Vec<(GaussianInt, u32)>,
}

impl Factorization {
    /// Multiplies the factorization back out.
    pub fn product(&self) -> GaussianInt {
        self.factors.iter().fold(self.unit, |acc, &(p, e)| acc * p.pow(e))
    }

    /// Canonical primes only.
    pub fn primes(&self) -> impl Iterator<Item = GaussianInt> + '_ {
        self.factors.iter().map(|f| f.0)
    }
}

/// Factorization by trial division over Gaussian primes of increasing norm.
pub fn factorize(n: GaussianInt) -> Result<Factorization> {
    if n.is_zero() {
        return domain("cannot factor zero");
    }
    let mut norm = n.norm() as u64;
    let mut rest = n;
    let mut factors: Vec<(GaussianInt, u32)> = Vec::new();
    let mut rational: Vec<u64> = Vec::new();
    let mut p = 2u64;
    while p * p <= norm {
        if norm % p == 0 {
            rational.push(p);
            while norm % p == 0 {
                norm /= p;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if norm > 1 {
        rational.push(norm);
    }
    for p in rational {
        let candidates: Vec<GaussianInt> = if p == 2 {
            vec![GaussianInt::new(1, 1)]
        } else if p % 4 == 3 {
            vec![GaussianInt::from_int(p as i64)]
        } else {
            let a = split_prime(p);
            let b = a.conj().canonical();
            let mut v = vec![a, b];
            v.sort_by_key(|g| (g.im, g.re));
            v
        };
        for pi in candidates {
            let mut e = 0;
            while let Some(q) = pi.exact_div_of(rest) {
                rest = q;
                e += 1;
            }
            if e > 0 {
                factors.push((pi, e));
            }
        }
    }
    if !rest.is_unit() {
        return Err(GkError::Consistency(format!("factorization of {n} left cofactor {rest}")));
    }
    factors.sort_by_key(|f| (f.0.norm(), f.0.im, f.0.re));
    Ok(Factorization { unit: rest, factors })
}

/// True when `p` is a Gaussian prime (norm a rational prime, or an inert
/// rational prime up to units).
pub fn is_gaussian_prime(p: GaussianInt) -> bool {
    let n = p.norm() as u64;
    let is_rational_prime = |m: u64| m >= 2 && (2..).take_while(|d| d * d <= m).all(|d| m % d != 0);
    if is_rational_prime(n) {
        return true;
    }
    let r = isqrt(n);
    r * r == n && r % 4 == 3 && is_rational_prime(r) && (p.re == 0 || p.im == 0)
}

/// All canonical Gaussian primes of norm at most `max_norm`, sorted by norm.
pub fn gaussian_primes_up_to(max_norm: u64) -> Vec<GaussianInt> {
    let mut out = Vec::new();
    for p in small_primes(max_norm) {
        if p == 2 {
            out.push(GaussianInt::new(1, 1));
        } else if p % 4 == 1 {
            let a = split_prime(p);
            let b = a.conj().canonical();
            let mut v = vec![a, b];
            v.sort_by_key(|g| (g.im, g.re));
            out.extend(v);
        } else if p * p <= max_norm {
            out.push(GaussianInt::from_int(p as i64));
        }
    }
    out.sort_by_key(|g| (g.norm(), g.im, g.re));
    out
}

/// Canonical ideal divisors of `n`, sorted by norm then components.
pub fn divisors(n: GaussianInt) -> Result<Vec<GaussianInt>> {
    let f = factorize(n)?;
    let mut out = vec![GaussianInt::ONE];
    for &(p, e) in &f.factors {
        let mut next = Vec::with_capacity(out.len() * (e as usize + 1));
        for d in &out {
            let mut pk = GaussianInt::ONE;
            for _ in 0..=e {
                next.push((*d * pk).canonical());
                pk *= p;
            }
        }
        out = next;
    }
    out.sort_by_key(|g| (g.norm(), g.re, g.im));
    Ok(out)
}

/// Divisor counts, prime-ideal count and Euler's function of `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MultiplicativeStats {
    /// Number of ideal divisors.
    pub tau_ideal: u64,
    /// Number of divisors counting the four associates separately.
    pub tau_assoc: u64,
    /// Number of distinct prime ideals dividing `n`.
    pub omega: u32,
    /// Order of the unit group of the residue ring.
    pub phi: u64,
}

pub fn multiplicative_stats(n: GaussianInt) -> Result<MultiplicativeStats> {
    let f = factorize(n)?;
    let mut tau = 1u64;
    let mut phi = 1u64;
    for &(p, e) in &f.factors {
        tau *= e as u64 + 1;
        let np = p.norm() as u64;
        phi *= np.pow(e - 1) * (np - 1);
    }
    Ok(MultiplicativeStats { tau_ideal: tau, tau_assoc: 4 * tau, omega: f.factors.len() as u32, phi })
}

/// Euler's function of the residue ring modulo `n`.
pub fn phi(n: GaussianInt) -> Result<u64> {
    Ok(multiplicative_stats(n)?.phi)
}

/// Splits `c = c_coprime · c_part` where `c_part ∼ (c, q0^∞)` is the product
/// of the prime powers of `c` at primes dividing `q0`.
///
/// Returns `(c_part, c_coprime)`; `c_part` is canonical and the unit of `c`
/// is carried by `c_coprime`.
pub fn q0_part(c: GaussianInt, q0: GaussianInt) -> Result<(GaussianInt, GaussianInt)> {
    if c.is_zero() || q0.is_zero() {
        return domain("q0_part needs nonzero arguments");
    }
    let f = factorize(c)?;
    let mut part = GaussianInt::ONE;
    for &(p, e) in &f.factors {
        if p.divides(q0) {
            part *= p.pow(e);
        }
    }
    let part = part.canonical();
    Ok((part, c.div_exact(part)))
}

/// A complete residue system modulo `c` (or its unit group).
///
/// The box `{x + y·i : 0 ≤ x < N/g, 0 ≤ y < g}` with `g = gcd(re, im)` and
/// `N = |c|²` is a complete system; each point is reduced to the minimal
/// representative and the list is sorted by [`residue_order`].
pub fn residues(c: GaussianInt, coprime_only: bool) -> Result<Vec<GaussianInt>> {
    if c.is_zero() {
        return domain("residues modulo zero");
    }
    let n = c.norm();
    let g = gcd_i64(c.re, c.im);
    let mut out = Vec::with_capacity(n as usize);
    for y in 0..g {
        for x in 0..n / g {
            let r = GaussianInt::new(x, y).reduce(c);
            if !coprime_only || coprime(r, c) {
                out.push(r);
            }
        }
    }
    out.sort_by(|a, b| residue_order(*a, *b));
    Ok(out)
}

pub(crate) fn gcd_i64(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Partial sum of the Hecke zeta function of the Gaussian field with the
/// grossencharacter `α ↦ (α/|α|)^{4k}`:
/// `(1/4) Σ_{0 < |α|² ≤ X} λ^k(α) |α|^{-2s}`, together with a bound on the
/// omitted tail.
pub fn hecke_zeta_partial(s: Complex64, k: i64, x: f64) -> Result<(Complex64, f64)> {
    if s.re <= 1.0 {
        return domain("the Hecke zeta series diverges for Re(s) <= 1");
    }
    if !(x >= 2.0) {
        return domain("cutoff X must be at least 2");
    }
    // λ^k is invariant under units, so (1/4) of the full sum is the sum over
    // the canonical quadrant re > 0, im >= 0.
    let xmax = x.floor() as i64;
    let mut acc = CompensatedSum::default();
    let mut a = 1i64;
    while a * a <= xmax {
        let mut b = 0i64;
        while a * a + b * b <= xmax {
            let n = (a * a + b * b) as f64;
            let theta = (b as f64).atan2(a as f64);
            let mag = (-s * n.ln()).exp();
            acc.add(mag * Complex64::from_polar(1.0, 4.0 * k as f64 * theta));
            b += 1;
        }
        a += 1;
    }
    Ok((acc.value(), zeta_tail_bound(s.re, x)))
}

/// Bound for `(1/4) Σ_{|α|² > X} |α|^{-2σ}` by comparing each lattice point
/// with its unit cell.
pub fn zeta_tail_bound(sigma: f64, x: f64) -> f64 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let t = x.sqrt() - 2.0 * h;
    assert!(t > 0.0 && sigma > 1.0);
    std::f64::consts::FRAC_PI_2 * (t.powf(2.0 - 2.0 * sigma) / (2.0 * sigma - 2.0) + h * t.powf(1.0 - 2.0 * sigma) / (2.0 * sigma - 1.0))
}
