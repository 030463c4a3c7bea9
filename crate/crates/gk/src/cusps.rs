//! Cusps of the Hecke congruence subgroup `Γ₀(q0) ≤ SL(2, ℤ[i])`.
//!
//! Every cusp is equivalent to some `u/w` with `w | q0`, `gcd(u, w) ∼ 1` and
//! `u ≠ 0`; such a representative is called normalized. A [`CuspFrame`]
//! records the normalized representative together with the width, the
//! `μ`-invariant, the structure of the stabilizer and an exact description
//! of the scaling matrix `g = ϖ·τ_v`, where `ϖ = [[u, -w̃], [w, ũ]]` has
//! `u·ũ ≡ 1 (mod q0)` and `τ_v = diag(√v, 1/√v)`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, GkError, Result};
use crate::gaussint::{self, coprime, divisors, gcd, mod_inverse, residue_order, residues, xgcd, GaussianInt, UNITS};
use crate::matrix::{GaussRational, Mat2};

/// A point of `ℚ(i) ∪ {∞}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Cusp {
    Infinity,
    /// `u/w` in lowest terms with `w` canonical.
    Finite {
        u: GaussianInt,
        w: GaussianInt,
    },
}

impl Cusp {
    /// The point `num/den`, reduced; `den = 0` gives `∞`.
    pub fn from_fraction(num: GaussianInt, den: GaussianInt) -> Result<Cusp> {
        if den.is_zero() {
            if num.is_zero() {
                return domain("0/0 is not a cusp");
            }
            return Ok(Cusp::Infinity);
        }
        let g = gcd(num, den);
        let (u, w) = (num.div_exact(g), den.div_exact(g));
        let (unit, wc) = w.split_unit();
        Ok(Cusp::Finite { u: u * unit.unit_inverse(), w: wc })
    }

    /// `(numerator, denominator)` with `∞ = 1/0`.
    pub fn fraction(&self) -> (GaussianInt, GaussianInt) {
        match *self {
            Cusp::Infinity => (GaussianInt::ONE, GaussianInt::ZERO),
            Cusp::Finite { u, w } => (u, w),
        }
    }

    /// Image under a Möbius transformation with Gaussian-integer entries.
    pub fn apply(&self, m: &Mat2) -> Cusp {
        let (x, y) = self.fraction();
        Cusp::from_fraction(m.a * x + m.b * y, m.c * x + m.d * y).expect("invertible action")
    }
}

impl fmt::Display for Cusp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cusp::Infinity => write!(f, "inf"),
            Cusp::Finite { u, w } => write!(f, "{u}/{w}"),
        }
    }
}

impl FromStr for Cusp {
    type Err = GkError;

    /// Parses `inf` or `u/w` (a bare `u` means `u/1`).
    fn from_str(s: &str) -> Result<Cusp> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t == "∞" {
            return Ok(Cusp::Infinity);
        }
        let (num, den) = match t.find('/') {
            Some(k) => {
                let den: GaussianInt = t[k + 1..].parse().map_err(|e| shift_parse(e, k + 1))?;
                (t[..k].parse::<GaussianInt>()?, den)
            }
            None => (t.parse::<GaussianInt>()?, GaussianInt::ONE),
        };
        Cusp::from_fraction(num, den)
    }
}

fn shift_parse(e: GkError, by: usize) -> GkError {
    match e {
        GkError::Parse { pos, msg } => GkError::Parse { pos: pos + by, msg },
        other => other,
    }
}

impl Serialize for Cusp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Gaussian integers of norm at most `max_norm`, in [`residue_order`].
pub(crate) fn small_gaussians(max_norm: i64) -> Vec<GaussianInt> {
    let r = (max_norm as f64).sqrt() as i64 + 1;
    let mut v: Vec<GaussianInt> = (-r..=r).flat_map(|a| (-r..=r).map(move |b| GaussianInt::new(a, b))).filter(|z| z.norm() <= max_norm).collect();
    v.sort_by(|a, b| residue_order(*a, *b));
    v
}

/// A normalized representative `u/w` and a witness `γ ∈ Γ₀(q0)` with
/// `γ(cusp) = u/w`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Normalized {
    pub u: GaussianInt,
    pub w: GaussianInt,
    pub gamma: Mat2,
}

fn is_normalized(u: GaussianInt, w: GaussianInt, q0: GaussianInt) -> bool {
    !u.is_zero() && w == w.canonical() && w.divides(q0) && coprime(u, q0) && coprime(u, w)
}

/// Moves a cusp to a normalized representative `u/w` with `w | q0`,
/// `gcd(u, q0) ∼ 1` and `u ≠ 0`.
///
/// With `t/v` the cusp in lowest terms and `w = gcd(v, q0)`, one solves
/// `(q0/w)·t·κ + (v/w)·δ = 1` with `gcd(δ, q0) ∼ 1`; the matrix
/// `[[α, β], [q0·κ, δ]]` of determinant one sends `t/v` to `(αt + βv)/w`.
/// A final translation makes the numerator prime to `q0`.
pub fn normalize_cusp(cusp: Cusp, q0: GaussianInt) -> Result<Normalized> {
    if q0.is_zero() {
        return domain("level q0 must be nonzero");
    }
    if let Cusp::Finite { u, w } = cusp {
        if is_normalized(u, w, q0) {
            return Ok(Normalized { u, w, gamma: Mat2::IDENTITY });
        }
    }
    let (t, v) = cusp.fraction();
    let w = gcd(v, q0);
    let a = q0.div_exact(w) * t;
    let b = v.div_exact(w);
    let (g, kappa0, delta0) = xgcd(a, b)?;
    if !g.is_unit() {
        return Err(GkError::Consistency(format!("gcd((q0/w)t, v/w) = {g} for cusp {cusp}")));
    }
    let search = small_gaussians(q0.norm().max(2) + 2);
    let (kappa, delta) = search
        .iter()
        .map(|&k| (kappa0 - k * b, delta0 + k * a))
        .find(|&(_, d)| coprime(d, q0))
        .ok_or_else(|| GkError::Consistency("no δ prime to q0".into()))?;
    let lower = q0 * kappa;
    let (g2, s, tt) = xgcd(delta, lower)?;
    if !g2.is_unit() {
        return Err(GkError::Consistency("δ and q0·κ not coprime".into()));
    }
    let gamma1 = Mat2::new(s, -tt, lower, delta);
    debug_assert_eq!(gamma1.det(), GaussianInt::ONE);
    let u0 = s * t - tt * v;
    let x = search
        .iter()
        .copied()
        .find(|&x| {
            let u = u0 + x * w;
            !u.is_zero() && coprime(u, q0)
        })
        .ok_or_else(|| GkError::Consistency("no numerator prime to q0".into()))?;
    let gamma = Mat2::translation(x) * gamma1;
    let u = u0 + x * w;
    if !gamma.in_gamma0(q0) || cusp.apply(&gamma) != (Cusp::Finite { u, w }) {
        return Err(GkError::Consistency(format!("normalization witness failed for {cusp}")));
    }
    Ok(Normalized { u, w, gamma })
}

/// Equivalence test for two normalized cusps with the same denominator:
/// `u2 ≡ ±u1 (mod gcd(w, q0/w))`.
fn normalized_equivalent(u1: GaussianInt, w1: GaussianInt, u2: GaussianInt, w2: GaussianInt, q0: GaussianInt) -> bool {
    if w1 != w2 {
        return false;
    }
    let g = gcd(w1, q0.div_exact(w1));
    g.divides(u2 - u1) || g.divides(u2 + u1)
}

/// Whether two cusps are `Γ₀(q0)`-equivalent.
pub fn cusps_equivalent(c1: Cusp, c2: Cusp, q0: GaussianInt) -> Result<bool> {
    let a = normalize_cusp(c1, q0)?;
    let b = normalize_cusp(c2, q0)?;
    Ok(normalized_equivalent(a.u, a.w, b.u, b.w, q0))
}

/// Exhaustive search for `γ ∈ Γ₀(q0)` with `γ(x1) = x2`.
///
/// Writing `x_j = σ_j(∞)` with `σ_j ∈ SL(2, ℤ[i])`, every such `γ` equals
/// `σ2·[[λ, y], [0, 1/λ]]·σ1⁻¹` for a unit `λ` and some `y`, and membership
/// depends on `y` only modulo `q0`; the search runs over all those pairs.
pub fn find_equivalence(x1: Cusp, x2: Cusp, q0: GaussianInt) -> Option<Mat2> {
    let s1 = completion(x1);
    let s2 = completion(x2);
    let ys = residues(q0, false).expect("nonzero level");
    for &lambda in &UNITS {
        for &y in &ys {
            let p = Mat2::new(lambda, y, GaussianInt::ZERO, lambda.unit_inverse());
            let g = s2 * p * s1.inverse_sl2();
            if g.in_gamma0(q0) {
                return Some(g);
            }
        }
    }
    None
}

/// A matrix in `SL(2, ℤ[i])` sending `∞` to the given cusp.
fn completion(x: Cusp) -> Mat2 {
    let (u, w) = x.fraction();
    let (g, s, t) = xgcd(u, w).expect("nonzero fraction");
    debug_assert!(g.is_unit());
    // s·u + t·w = 1, so [[u, -t], [w, s]] has determinant one
    Mat2::new(u, -t, w, s)
}

/// Structural data of a cusp class.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CuspFrame {
    /// The cusp as given.
    pub cusp: Cusp,
    pub q0: GaussianInt,
    /// Normalized numerator.
    pub u: GaussianInt,
    /// Normalized denominator, a canonical divisor of `q0`.
    pub w: GaussianInt,
    /// `γ ∈ Γ₀(q0)` sending `cusp` to `u/w`.
    pub witness: Mat2,
    /// Generator `m` of the width ideal, `m ∼ q0/gcd(w², q0)`.
    pub width_gen: GaussianInt,
    /// Generator of the ideal `1/μ ∼ gcd(w, q0)·q0/gcd(w², q0)`.
    pub mu_inv: GaussianInt,
    /// Index of the unipotent part in the stabilizer, 2 or 4.
    pub stab_index: u8,
    /// Translation part of the order-four stabilizer element.
    pub beta: Option<GaussRational>,
    pub scaling: Scaling,
}

/// The scaling matrix `g = ϖ·diag(√v, 1/√v)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Scaling {
    pub pi_matrix: Mat2,
    pub v: GaussianInt,
}

impl CuspFrame {
    /// Builds the frame of an arbitrary cusp.
    pub fn new(cusp: Cusp, q0: GaussianInt) -> Result<CuspFrame> {
        let n = normalize_cusp(cusp, q0)?;
        let (u, w) = (n.u, n.w);
        let q0w = q0.div_exact(w);
        let g = gcd(w, q0w);
        let v = q0w.div_exact(g).canonical();
        // u·r + q0·s = 1 gives ũ = r, w̃ = (q0/w)·s
        let (one, r, s) = xgcd(u, q0)?;
        if !one.is_unit() {
            return Err(GkError::Consistency("normalized numerator not prime to q0".into()));
        }
        let pi = Mat2::new(u, -(q0w * s), w, r);
        if pi.det() != GaussianInt::ONE {
            return Err(GkError::Consistency("scaling matrix determinant".into()));
        }
        let mut frame = CuspFrame {
            cusp,
            q0,
            u,
            w,
            witness: n.gamma,
            width_gen: v,
            mu_inv: (w * v).canonical(),
            stab_index: 2,
            beta: None,
            scaling: Scaling { pi_matrix: pi, v },
        };
        let (idx, beta) = stabilizer_data(&frame)?;
        frame.stab_index = idx;
        frame.beta = beta;
        Ok(frame)
    }

    /// Frame of the normalized cusp `u/w`.
    pub fn from_normalized(u: GaussianInt, w: GaussianInt, q0: GaussianInt) -> Result<CuspFrame> {
        CuspFrame::new(Cusp::from_fraction(u, w)?, q0)
    }

    pub fn v(&self) -> GaussianInt {
        self.scaling.v
    }

    /// `ũ`, the lower-right entry of `ϖ`.
    pub fn u_tilde(&self) -> GaussianInt {
        self.scaling.pi_matrix.d
    }

    /// `w̃`, minus the upper-right entry of `ϖ`.
    pub fn w_tilde(&self) -> GaussianInt {
        -self.scaling.pi_matrix.b
    }

    /// `√v` on the principal branch.
    pub fn sqrt_v(&self) -> Complex64 {
        self.v().to_complex().sqrt()
    }

    /// `gcd(w, q0/w)`.
    pub fn w_gcd(&self) -> GaussianInt {
        gcd(self.w, self.q0.div_exact(self.w))
    }

    /// Same normalized cusp (identical `u/w` and level).
    pub fn same_normalized(&self, other: &CuspFrame) -> bool {
        self.q0 == other.q0 && self.u == other.u && self.w == other.w
    }

    /// Whether the two frames describe equivalent cusps.
    pub fn equivalent_to(&self, other: &CuspFrame) -> bool {
        self.q0 == other.q0 && normalized_equivalent(self.u, self.w, other.u, other.w, self.q0)
    }
}

/// Stabilizer index and, for index four, the translation `β` such that
/// `g·h[i]·n[β]·g⁻¹ ∈ Γ₀(q0)`.
///
/// The order-four elements exist exactly when `gcd(w, q0/w) | 2`. Then
/// `β = -i·z0/v` where `z0` is the minimal residue modulo `v` solving
/// `(w/g)·z0 ≡ 2iũ/g`, `g = gcd(w, q0/w)`. The membership is checked on the
/// exact matrix `ϖ·h[i]·n[-i·z0]·ϖ⁻¹`.
pub fn stabilizer_data(frame: &CuspFrame) -> Result<(u8, Option<GaussRational>)> {
    let g = frame.w_gcd();
    if !g.divides(GaussianInt::from_int(2)) {
        return Ok((2, None));
    }
    let v = frame.v();
    let rhs = (GaussianInt::I * 2 * frame.u_tilde()).div_exact(g);
    let lhs = frame.w.div_exact(g);
    let z0 = if v.is_unit() {
        GaussianInt::ZERO
    } else {
        let inv = mod_inverse(lhs, v).map_err(|_| GkError::Consistency("w/g not invertible modulo v".into()))?;
        (inv * rhs).reduce(v)
    };
    let beta = GaussRational::ratio(-(GaussianInt::I * z0), v);
    let pi = frame.scaling.pi_matrix;
    let m = pi * Mat2::unit_diagonal(GaussianInt::I) * Mat2::translation(-(GaussianInt::I * z0)) * pi.inverse_sl2();
    if !m.in_gamma0(frame.q0) {
        return Err(GkError::Consistency(format!("order-four stabilizer element missing for {}", frame.cusp)));
    }
    Ok((4, Some(beta)))
}

/// One frame per cusp class, ordered by the norm of the denominator.
///
/// For each canonical divisor `w` of `q0` the classes with denominator `w`
/// correspond to the units modulo `gcd(w, q0/w)` up to sign.
pub fn class_representatives(q0: GaussianInt) -> Result<Vec<CuspFrame>> {
    if q0.is_zero() {
        return domain("level q0 must be nonzero");
    }
    let mut out = Vec::new();
    for w in divisors(q0)? {
        let g = gcd(w, q0.div_exact(w));
        let mut chosen: Vec<GaussianInt> = Vec::new();
        for r in residues(g, true)? {
            if chosen.iter().any(|&c| g.divides(c - r) || g.divides(c + r)) {
                continue;
            }
            chosen.push(r);
            let u = lift_numerator(r, g, q0);
            out.push(CuspFrame::from_normalized(u, w, q0)?);
        }
    }
    Ok(out)
}

/// Smallest `u ≡ r (mod g)` with `u ≠ 0` and `gcd(u, q0) ∼ 1`.
fn lift_numerator(r: GaussianInt, g: GaussianInt, q0: GaussianInt) -> GaussianInt {
    small_gaussians(q0.norm().max(2) * 4 + 4)
        .into_iter()
        .map(|k| r + k * g)
        .find(|&u| !u.is_zero() && coprime(u, q0))
        .expect("a residue prime to q0 exists in every class")
}

/// Number of cusp classes from the divisor-sum formula
/// `(1/8)·Σ_{w | q0} φ(gcd(w, q0/w)) + (1/8)·Σ_{w | q0, gcd(w, q0/w) | 2} φ(gcd(w, q0/w))`,
/// the sums running over all divisors with associates counted separately.
pub fn class_count_formula(q0: GaussianInt) -> Result<u64> {
    let two = GaussianInt::from_int(2);
    let mut total = 0u64;
    for w in divisors(q0)? {
        let g = gcd(w, q0.div_exact(w));
        let f = gaussint::phi(g)?;
        // four associates per ideal divisor
        total += 4 * f;
        if g.divides(two) {
            total += 4 * f;
        }
    }
    if total % 8 != 0 {
        return Err(GkError::Consistency(format!("class formula not integral for q0 = {q0}")));
    }
    Ok(total / 8)
}

/// Class count by exhaustive equivalence search over the candidate set
/// `{u/w : w | q0 (all associates), u over units modulo gcd(w, q0/w)}`.
pub fn class_count_bruteforce(q0: GaussianInt) -> Result<usize> {
    let mut candidates = Vec::new();
    for w in divisors(q0)? {
        let g = gcd(w, q0.div_exact(w));
        for unit in UNITS {
            let wa = w * unit;
            for r in residues(g, true)? {
                let u = lift_numerator(r, g, q0);
                candidates.push(Cusp::from_fraction(u, wa)?);
            }
        }
    }
    let mut reps: Vec<Cusp> = Vec::new();
    for c in candidates {
        if !reps.iter().any(|&r| find_equivalence(c, r, q0).is_some()) {
            reps.push(c);
        }
    }
    Ok(reps.len())
}

/// `[SL(2, ℤ[i]) : Γ₀(q0)] = |q0|²·∏_{ϖ | q0} (1 + |ϖ|⁻²)` and the
/// covolume `2π⁻²·ζ_{ℚ(i)}(2)·index`.
pub fn index_and_covolume(q0: GaussianInt, zeta2: Complex64) -> Result<(u64, f64)> {
    let f = gaussint::factorize(q0)?;
    let mut num: u128 = q0.norm() as u128;
    let mut den: u128 = 1;
    for (p, _) in &f.factors {
        let n = p.norm() as u128;
        num *= n + 1;
        den *= n;
    }
    if num % den != 0 {
        return Err(GkError::Consistency(format!("index not integral for q0 = {q0}")));
    }
    let index = (num / den) as u64;
    let vol = 2.0 / std::f64::consts::PI.powi(2) * zeta2.re * index as f64;
    Ok((index, vol))
}

/// A Kloosterman modulus `c = C·√v1·√v2` for a pair of frames.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Modulus {
    /// The Gaussian integer `C`.
    pub big_c: GaussianInt,
    /// `c` as a complex number.
    #[serde(serialize_with = "crate::expsum::ser_complex")]
    pub c: Complex64,
    /// `|c|²`.
    pub norm: f64,
}

/// Lower-left entry of `ϖ_a·[[A, B], [C, D]]·ϖ_b⁻¹`.
#[inline]
fn chi_lower_left(f1: &CuspFrame, f2: &CuspFrame, a: GaussianInt, b: GaussianInt, c: GaussianInt, d: GaussianInt) -> GaussianInt {
    let (w1, ut1) = (f1.w, f1.u_tilde());
    let (w2, ut2) = (f2.w, f2.u_tilde());
    (w1 * a + ut1 * c) * ut2 - (w1 * b + ut1 * d) * w2
}

/// Indicator of `ϖ_a·g(A, D; C)·ϖ_b⁻¹ ∈ Γ₀(q0)` with
/// `g(A, D; C) = [[A, (AD - 1)/C], [C, D]]`; requires `AD ≡ 1 (mod C)`.
pub fn chi(f1: &CuspFrame, f2: &CuspFrame, a: GaussianInt, d: GaussianInt, c: GaussianInt) -> bool {
    let b = (a * d - GaussianInt::ONE).div_exact(c);
    f1.q0.divides(chi_lower_left(f1, f2, a, b, c, d))
}

/// All `(A mod v1·C, D mod v2·C)` with `AD ≡ 1 (mod C)` whose matrix
/// `ϖ_a·g(A, D; C)·ϖ_b⁻¹` lies in `Γ₀(q0)`.
pub fn admissible_pairs(f1: &CuspFrame, f2: &CuspFrame, c: GaussianInt) -> Result<Vec<(GaussianInt, GaussianInt)>> {
    if c.is_zero() {
        return domain("modulus C must be nonzero");
    }
    if f1.q0 != f2.q0 {
        return domain("frames must share the level q0");
    }
    let m1 = f1.v() * c;
    let lifts = residues(f2.v(), false)?;
    let mut out = Vec::new();
    for a in residues(m1, false)? {
        if !coprime(a, c) {
            continue;
        }
        let d0 = mod_inverse(a, c)?;
        for &k in &lifts {
            let d = d0 + c * k;
            if chi(f1, f2, a, d, c) {
                out.push((a, d));
            }
        }
    }
    Ok(out)
}

/// Whether `C·√(v1 v2)` is a Kloosterman modulus for the pair of frames.
pub fn is_admissible(f1: &CuspFrame, f2: &CuspFrame, c: GaussianInt) -> Result<bool> {
    Ok(!admissible_pairs(f1, f2, c)?.is_empty())
}

/// All moduli `c = C·√v1·√v2` with `0 < |c| ≤ x`, sorted by `|c|` and then
/// by the argument of `c` in `[0, 2π)`.
pub fn allowed_moduli(f1: &CuspFrame, f2: &CuspFrame, x: f64) -> Result<Vec<Modulus>> {
    if !(x >= 1.0) {
        return domain("cutoff X must be at least 1");
    }
    let scale = f1.sqrt_v() * f2.sqrt_v();
    let s2 = scale.norm_sqr();
    let max_norm = (x * x / s2).floor() as i64;
    let mut out = Vec::new();
    for big_c in small_gaussians(max_norm) {
        if big_c.is_zero() || big_c.norm() as f64 * s2 > x * x * (1.0 + 1e-12) {
            continue;
        }
        if is_admissible(f1, f2, big_c)? {
            let c = big_c.to_complex() * scale;
            out.push(Modulus { big_c, c, norm: c.norm_sqr() });
        }
    }
    let arg = |z: Complex64| z.im.atan2(z.re).rem_euclid(std::f64::consts::TAU);
    out.sort_by(|a, b| (a.big_c.norm()).cmp(&b.big_c.norm()).then(arg(a.c).partial_cmp(&arg(b.c)).unwrap()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(re: i64, im: i64) -> GaussianInt {
        GaussianInt::new(re, im)
    }

    #[test]
    fn normalize_examples() {
        let q0 = g(1, 1);
        let n = normalize_cusp(Cusp::Infinity, q0).unwrap();
        assert_eq!((n.u, n.w), (g(1, 0), g(1, 1)));
        assert_eq!(Cusp::Infinity.apply(&n.gamma), Cusp::Finite { u: n.u, w: n.w });
        let n = normalize_cusp(Cusp::from_fraction(g(0, 0), g(1, 0)).unwrap(), q0).unwrap();
        assert_eq!(n.w, g(1, 0));
        assert!(coprime(n.u, q0));
        let c = Cusp::from_fraction(g(1, 0), g(1, 1)).unwrap();
        let n = normalize_cusp(c, q0).unwrap();
        assert_eq!(n.gamma, Mat2::IDENTITY);
    }

    #[test]
    fn equivalence_examples() {
        for q0 in [g(1, 1), g(2, 0), g(3, 0), g(2, 1)] {
            let one_over = Cusp::from_fraction(g(1, 0), q0).unwrap();
            assert!(cusps_equivalent(Cusp::Infinity, one_over, q0).unwrap());
            assert!(find_equivalence(Cusp::Infinity, one_over, q0).is_some());
        }
        let c = Cusp::from_fraction(g(2, 1), g(3, -1)).unwrap();
        assert!(cusps_equivalent(c, c, g(3, 0)).unwrap());
        assert!(cusps_equivalent(c, Cusp::Infinity, g(1, 0)).unwrap());
        assert!(!cusps_equivalent(Cusp::Infinity, Cusp::from_fraction(g(0, 0), g(1, 0)).unwrap(), g(1, 1)).unwrap());
    }

    #[test]
    fn class_count_examples() {
        assert_eq!(class_count_formula(g(1, 0)).unwrap(), 1);
        assert_eq!(class_count_bruteforce(g(1, 0)).unwrap(), 1);
        assert_eq!(class_count_formula(g(1, 1)).unwrap(), 2);
        assert_eq!(class_count_bruteforce(g(1, 1)).unwrap(), 2);
        assert_eq!(class_count_formula(g(3, 0)).unwrap(), 2);
        assert_eq!(class_count_bruteforce(g(3, 0)).unwrap(), 2);
        assert_eq!(class_representatives(g(1, 1)).unwrap().len(), 2);
    }

    #[test]
    fn criterion_matches_search() {
        for q0 in [g(2, 0), g(4, 0), g(3, 0), g(2, 2), g(5, 0), g(3, 3)] {
            let mut cands = Vec::new();
            for w in divisors(q0).unwrap() {
                for r in residues(w, true).unwrap().into_iter().take(6) {
                    let u = lift_numerator(r, w, q0);
                    cands.push(Cusp::from_fraction(u, w).unwrap());
                }
            }
            for &a in &cands {
                for &b in &cands {
                    let crit = cusps_equivalent(a, b, q0).unwrap();
                    let found = find_equivalence(a, b, q0);
                    assert_eq!(crit, found.is_some(), "q0={q0} {a} {b}");
                    if let Some(m) = found {
                        assert_eq!(a.apply(&m), b);
                    }
                }
            }
        }
    }

    #[test]
    fn index_examples() {
        let zeta2 = Complex64::new(std::f64::consts::PI.powi(2) / 6.0 * 0.915_965_594_177_219, 0.0);
        assert_eq!(index_and_covolume(g(1, 1), zeta2).unwrap().0, 3);
        assert_eq!(index_and_covolume(g(2, 0), zeta2).unwrap().0, 6);
        let (i1, vol) = index_and_covolume(g(1, 0), zeta2).unwrap();
        assert_eq!(i1, 1);
        assert!((vol - 0.915_965_594_177_219 / 3.0).abs() < 1e-12);
        assert!((vol - 0.30532).abs() < 1e-5);
    }

    #[test]
    fn stabilizer_examples() {
        let f = CuspFrame::new(Cusp::Infinity, g(1, 0)).unwrap();
        assert_eq!(f.stab_index, 4);
        let f = CuspFrame::new(Cusp::Infinity, g(3, 0)).unwrap();
        assert_eq!(f.stab_index, 4);
        assert_eq!(f.mu_inv, g(3, 0));
        let f = CuspFrame::from_normalized(g(1, 0), g(3, 0), g(9, 0)).unwrap();
        assert_eq!(f.stab_index, 2);
        assert_eq!(f.v(), g(1, 0));
        let f = CuspFrame::new(Cusp::Infinity, g(1, 1)).unwrap();
        assert_eq!(f.stab_index, 4);
        assert!((f.q0 * 1).divides(f.mu_inv) && f.mu_inv.divides(f.q0));
    }

    #[test]
    fn frame_invariants_small_levels() {
        for a in 0..=6 {
            for b in 0..=6 {
                let q0 = g(a, b);
                if q0.is_zero() || q0.norm() > 40 {
                    continue;
                }
                let frames = class_representatives(q0).unwrap();
                assert_eq!(frames.len() as u64, class_count_formula(q0).unwrap());
                for (i, f) in frames.iter().enumerate() {
                    let pi = f.scaling.pi_matrix;
                    assert_eq!(pi.det(), GaussianInt::ONE);
                    assert_eq!((pi.a, pi.c), (f.u, f.w));
                    assert!(q0.divides(f.u * f.u_tilde() - GaussianInt::ONE));
                    // v ∼ q0/gcd(w², q0)
                    assert_eq!(f.v(), q0.div_exact(gcd(f.w * f.w, q0)).canonical());
                    // 1/μ ∼ gcd(w, q0)·q0/gcd(w², q0)
                    assert_eq!(f.mu_inv, (gcd(f.w, q0) * f.v()).canonical());
                    // index four iff q0·μ divides 2
                    let q0mu = GaussRational::ratio(q0, f.mu_inv);
                    let divides_two = q0mu.is_integral() && q0mu.num().divides(GaussianInt::from_int(2));
                    assert_eq!(f.stab_index == 4, divides_two);
                    for other in &frames[..i] {
                        assert!(!f.equivalent_to(other));
                    }
                }
            }
        }
    }

    #[test]
    fn scaling_conjugates_translations() {
        // g·n[x]·g⁻¹ = ϖ·n[v·x]·ϖ⁻¹ must lie in Γ₀(q0) for x = 1, i and
        // fix the cusp.
        for q0 in [g(1, 0), g(1, 1), g(2, 0), g(3, 0), g(2, 1), g(4, 0), g(3, 3)] {
            for f in class_representatives(q0).unwrap() {
                let pi = f.scaling.pi_matrix;
                for x in [GaussianInt::ONE, GaussianInt::I] {
                    let m = pi * Mat2::translation(f.v() * x) * pi.inverse_sl2();
                    assert!(m.in_gamma0(q0));
                    let c = Cusp::from_fraction(f.u, f.w).unwrap();
                    assert_eq!(c.apply(&m), c);
                }
                // a proper divisor of v must fail for some generator
                if !f.v().is_unit() {
                    let fails = gaussint::factorize(f.v()).unwrap().primes().any(|p| {
                        let m = pi * Mat2::translation(f.v().div_exact(p)) * pi.inverse_sl2();
                        let mi = pi * Mat2::translation(f.v().div_exact(p) * GaussianInt::I) * pi.inverse_sl2();
                        !m.in_gamma0(q0) || !mi.in_gamma0(q0)
                    });
                    assert!(fails, "width not minimal for {} at q0={q0}", f.cusp);
                }
            }
        }
    }

    #[test]
    fn moduli_level_one() {
        let f = CuspFrame::new(Cusp::Infinity, g(1, 0)).unwrap();
        let ms = allowed_moduli(&f, &f, 4.0).unwrap();
        let expected = small_gaussians(16).into_iter().filter(|z| !z.is_zero()).count();
        assert_eq!(ms.len(), expected);
        assert!(ms.iter().all(|m| m.norm >= 1.0 - 1e-12));
    }

    #[test]
    fn moduli_level_two_infinity() {
        let q0 = g(2, 0);
        let f = CuspFrame::new(Cusp::Infinity, q0).unwrap();
        let ms = allowed_moduli(&f, &f, 6.0).unwrap();
        assert!(!ms.is_empty());
        let expect = (q0 * f.v()).norm() as f64;
        assert!((ms[0].norm - expect).abs() < 1e-9, "{} vs {expect}", ms[0].norm);
    }

    #[test]
    fn moduli_lie_in_width_lattice() {
        for q0 in [g(1, 1), g(2, 0), g(3, 0), g(2, 2)] {
            let frames = class_representatives(q0).unwrap();
            for f1 in &frames {
                for f2 in &frames {
                    let mm = (f1.width_gen * f2.width_gen).norm() as f64;
                    for m in allowed_moduli(f1, f2, 5.0).unwrap() {
                        assert!(m.norm > 0.0);
                        assert!(m.norm >= mm.sqrt() - 1e-9);
                        // c² ∈ ε·m_a·m_b·ℤ[i] for a unit ε
                        let c2 = m.big_c * m.big_c * f1.v() * f2.v();
                        let ok = UNITS.iter().any(|&e| (e * f1.width_gen * f2.width_gen).divides(c2));
                        assert!(ok);
                    }
                }
            }
        }
    }

    #[test]
    fn parse_cusps() {
        assert_eq!("inf".parse::<Cusp>().unwrap(), Cusp::Infinity);
        assert_eq!("2/4".parse::<Cusp>().unwrap(), Cusp::from_fraction(g(1, 0), g(2, 0)).unwrap());
        assert_eq!("1+1i/0".parse::<Cusp>().unwrap(), Cusp::Infinity);
        let c = Cusp::from_fraction(g(3, 1), g(-2, 5)).unwrap();
        assert_eq!(c.to_string().parse::<Cusp>().unwrap(), c);
        assert!(matches!("1/x".parse::<Cusp>(), Err(GkError::Parse { pos: 2, .. })));
    }

    proptest! {
        #[test]
        fn normalization_witness(a in -30i64..30, b in -30i64..30, c in -30i64..30, d in -30i64..30, qa in 0i64..5, qb in 0i64..5) {
            let q0 = g(qa, qb);
            prop_assume!(!q0.is_zero());
            let num = g(a, b);
            let den = g(c, d);
            prop_assume!(!(num.is_zero() && den.is_zero()));
            let cusp = Cusp::from_fraction(num, den).unwrap();
            let n = normalize_cusp(cusp, q0).unwrap();
            prop_assert!(n.gamma.in_gamma0(q0));
            prop_assert_eq!(cusp.apply(&n.gamma), Cusp::Finite { u: n.u, w: n.w });
            prop_assert!(is_normalized(n.u, n.w, q0));
            // μ-invariant is a class invariant at the ideal level
            let f = CuspFrame::new(cusp, q0).unwrap();
            let reps = class_representatives(q0).unwrap();
            let r = reps.iter().find(|r| r.equivalent_to(&f)).unwrap();
            prop_assert_eq!(r.mu_inv, f.mu_inv);
        }
    }
}
