//! Compensated accumulation and exact-phase additive characters.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::gaussint::GaussianInt;

/// Neumaier-compensated complex sum with a running error estimate.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    re: f64,
    re_c: f64,
    im: f64,
    im_c: f64,
    abs_total: f64,
    terms: u64,
}

#[inline]
fn two_sum(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, z: Complex64) {
        two_sum(&mut self.re, &mut self.re_c, z.re);
        two_sum(&mut self.im, &mut self.im_c, z.im);
        self.abs_total += z.re.abs() + z.im.abs();
        self.terms += 1;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        two_sum(&mut self.re, &mut self.re_c, other.re);
        two_sum(&mut self.re, &mut self.re_c, other.re_c);
        two_sum(&mut self.im, &mut self.im_c, other.im);
        two_sum(&mut self.im, &mut self.im_c, other.im_c);
        self.abs_total += other.abs_total;
        self.terms += other.terms;
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re + self.re_c, self.im + self.im_c)
    }

    pub fn terms(&self) -> u64 {
        self.terms
    }

    /// Error estimate: each summand carries a few ulps from its own
    /// evaluation, and the compensated sum adds `O(ε)` relative to the total
    /// absolute mass.
    pub fn err(&self) -> f64 {
        4.0 * f64::EPSILON * (self.abs_total + self.terms as f64)
    }
}

/// `e(num/den) = exp(2πi·num/den)` with the fraction reduced exactly first.
#[inline]
pub fn e_frac(num: i64, den: i64) -> Complex64 {
    debug_assert!(den > 0);
    let r = num.rem_euclid(den);
    let x = TAU * (r as f64 / den as f64);
    Complex64::new(x.cos(), x.sin())
}

/// `e(Re(a/c))` for Gaussian integers, `c ≠ 0`.
#[inline]
pub fn e_re_ratio(a: GaussianInt, c: GaussianInt) -> Complex64 {
    // Re(a/c) = Re(a·c̄)/|c|²
    let n = c.norm();
    let num = a.re * c.re + a.im * c.im;
    e_frac(num, n)
}

/// `e(x) = exp(2πix)` for a real `x`.
#[inline]
pub fn e_real(x: f64) -> Complex64 {
    let t = TAU * (x - x.floor());
    Complex64::new(t.cos(), t.sin())
}

/// A complex value obtained by summing unit exponentials.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KloostermanValue {
    /// The sum, serialized as `[re, im]`.
    #[serde(serialize_with = "ser_complex")]
    pub value: Complex64,
    /// Number of exponentials summed.
    pub terms: u64,
    /// Estimated absolute rounding error.
    pub err: f64,
}

impl KloostermanValue {
    pub fn from_sum(s: &CompensatedSum) -> Self {
        KloostermanValue { value: s.value(), terms: s.terms(), err: s.err() }
    }

    pub fn zero() -> Self {
        KloostermanValue { value: Complex64::new(0.0, 0.0), terms: 0, err: 0.0 }
    }

    /// Multiplies by a unit-modulus factor.
    pub fn twisted(self, t: Complex64) -> Self {
        KloostermanValue { value: self.value * t, terms: self.terms, err: self.err + 4.0 * f64::EPSILON * self.value.norm() }
    }
}

pub fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_beats_naive() {
        let mut s = CompensatedSum::default();
        let mut naive = 0.0f64;
        s.add(Complex64::new(1.0, 0.0));
        naive += 1.0;
        for _ in 0..10_000 {
            s.add(Complex64::new(1e-16, 0.0));
            naive += 1e-16;
        }
        assert!((s.value().re - (1.0 + 1e-12)).abs() < 1e-20);
        assert_eq!(naive, 1.0);
    }

    #[test]
    fn exact_phases() {
        assert!((e_frac(1, 2) + 1.0).norm() < 1e-15);
        assert!((e_frac(-3, 4) - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        // Re(2/(1+i)) = 1
        let v = e_re_ratio(GaussianInt::new(2, 0), GaussianInt::new(1, 1));
        assert!((v - 1.0).norm() < 1e-15);
    }
}
