//! 2×2 matrices over the Gaussian integers and exact Gaussian rationals.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::Serialize;

use crate::gaussint::{gcd_i64, GaussianInt};

/// Matrix `[[a, b], [c, d]]` with Gaussian-integer entries.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize)]
pub struct Mat2 {
    pub a: GaussianInt,
    pub b: GaussianInt,
    pub c: GaussianInt,
    pub d: GaussianInt,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: GaussianInt::ONE, b: GaussianInt::ZERO, c: GaussianInt::ZERO, d: GaussianInt::ONE };

    pub fn new(a: GaussianInt, b: GaussianInt, c: GaussianInt, d: GaussianInt) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn det(&self) -> GaussianInt {
        self.a * self.d - self.b * self.c
    }

    /// Inverse of a determinant-one matrix.
    pub fn inverse_sl2(&self) -> Mat2 {
        assert_eq!(self.det(), GaussianInt::ONE, "inverse_sl2 needs det 1");
        Mat2::new(self.d, -self.b, -self.c, self.a)
    }

    /// Translation `n[x] = [[1, x], [0, 1]]`.
    pub fn translation(x: GaussianInt) -> Mat2 {
        Mat2::new(GaussianInt::ONE, x, GaussianInt::ZERO, GaussianInt::ONE)
    }

    /// `h[u] = diag(u, 1/u)` for a unit `u`.
    pub fn unit_diagonal(u: GaussianInt) -> Mat2 {
        Mat2::new(u, GaussianInt::ZERO, GaussianInt::ZERO, u.unit_inverse())
    }

    /// Whether the matrix lies in the Hecke congruence subgroup of level `q0`.
    pub fn in_gamma0(&self, q0: GaussianInt) -> bool {
        self.det() == GaussianInt::ONE && q0.divides(self.c)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a * o.a + self.b * o.c, self.a * o.b + self.b * o.d, self.c * o.a + self.d * o.c, self.c * o.b + self.d * o.d)
    }
}

/// Element `num / den` of `ℚ(i)` with `den > 0` and the content reduced.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct GaussRational {
    num: GaussianInt,
    den: i64,
}

impl GaussRational {
    pub fn new(num: GaussianInt, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        let s = if den < 0 { -1 } else { 1 };
        let g = gcd_i64(gcd_i64(num.re, num.im), den).max(1);
        GaussRational { num: GaussianInt::new(s * num.re / g, s * num.im / g), den: s * den / g }
    }

    pub fn from_int(z: GaussianInt) -> Self {
        GaussRational { num: z, den: 1 }
    }

    /// `a / b` for Gaussian integers, `b ≠ 0`.
    pub fn ratio(a: GaussianInt, b: GaussianInt) -> Self {
        GaussRational::new(a * b.conj(), b.norm())
    }

    pub fn num(&self) -> GaussianInt {
        self.num
    }

    pub fn den(&self) -> i64 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_integral(&self) -> bool {
        self.den == 1
    }

    pub fn to_complex(&self) -> Complex64 {
        self.num.to_complex() / self.den as f64
    }

    pub fn mul_int(self, z: GaussianInt) -> Self {
        GaussRational::new(self.num * z, self.den)
    }

    pub fn div_int(self, z: GaussianInt) -> Self {
        GaussRational::new(self.num * z.conj(), self.den * z.norm())
    }

    /// Representative of `self` modulo `ℤ[i]` with both coordinates of the
    /// numerator in `[0, den)`.
    pub fn frac_mod1(self) -> Self {
        GaussRational { num: GaussianInt::new(self.num.re.rem_euclid(self.den), self.num.im.rem_euclid(self.den)), den: self.den }
    }

    /// `Re(self)` as an exact fraction `(numerator, denominator)`.
    pub fn re_frac(&self) -> (i64, i64) {
        (self.num.re, self.den)
    }
}

impl Add for GaussRational {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        GaussRational::new(self.num * o.den + o.num * self.den, self.den * o.den)
    }
}

impl Sub for GaussRational {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for GaussRational {
    type Output = Self;
    fn neg(self) -> Self {
        GaussRational { num: -self.num, den: self.den }
    }
}

impl Mul for GaussRational {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        GaussRational::new(self.num * o.num, self.den * o.den)
    }
}

impl fmt::Display for GaussRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/{}", self.num, self.den)
        }
    }
}

impl fmt::Debug for GaussRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for GaussRational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}
