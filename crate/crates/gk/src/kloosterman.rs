//! Classical and generalized Kloosterman sums over `ℤ[i]`.
//!
//! Three independent routes evaluate the generalized sum `S_{a,b}(m, n; c)`:
//!
//! * [`kloosterman_samecusp`]: the restricted double residue sum available
//!   when both cusps coincide;
//! * [`kloosterman_general`]: the `(A, D)` sum with a group-membership
//!   indicator, valid for any pair of normalized cusps;
//! * [`kloosterman_bruteforce`]: enumeration of double cosets of bounded
//!   height in `Γ₀(q0)`, used as an oracle.
//!
//! All frames use the scaling matrices of [`CuspFrame`]. The same-cusp route
//! natively uses the lower-triangular scaling `g·n[w̃/(uv)]`; the conversion
//! factor is [`samecusp_frame_twist`].

use std::collections::{BTreeMap, BTreeSet, HashSet};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cusps::{small_gaussians, CuspFrame};
use crate::error::{domain, GkError, Result};
use crate::expsum::{e_frac, e_re_ratio, CompensatedSum, KloostermanValue};
use crate::gaussint::{coprime, crt_pair, factorize, gcd, mod_inverse, multiplicative_stats, q0_part, residues, xgcd, GaussianInt};
use crate::matrix::{GaussRational, Mat2};

/// `S(m, n; c) = Σ_{δ mod c, (δ, c) ∼ 1} e(Re((m·δ* + n·δ)/c))`.
pub fn kloosterman_classical(m: GaussianInt, n: GaussianInt, c: GaussianInt) -> Result<KloostermanValue> {
    if c.is_zero() {
        return domain("Kloosterman modulus must be nonzero");
    }
    let mut acc = CompensatedSum::default();
    for d in residues(c, true)? {
        let ds = mod_inverse(d, c)?;
        acc.add(e_re_ratio(m * ds + n * d, c));
    }
    Ok(KloostermanValue::from_sum(&acc))
}

/// `Σ_{β mod p} e(Re(a·β²/p))`.
pub fn gauss_sum(a: GaussianInt, p: GaussianInt) -> Result<Complex64> {
    if p.is_zero() {
        return domain("Gauss sum modulus must be nonzero");
    }
    let mut acc = CompensatedSum::default();
    for b in residues(p, false)? {
        acc.add(e_re_ratio(a * b * b, p));
    }
    Ok(acc.value())
}

/// Factor converting a same-cusp sum from the lower-triangular scaling
/// `[[u√v, 0], [w√v, 1/(u√v)]]` to the frame scaling `ϖ·τ_v`:
/// `e(Re(w̃·(ω1 - ω2)/(u·v)))`.
pub fn samecusp_frame_twist(frame: &CuspFrame, w1: GaussianInt, w2: GaussianInt) -> Complex64 {
    e_re_ratio(frame.w_tilde() * (w1 - w2), frame.u * frame.v())
}

/// Parameters shared by the same-cusp sums at modulus `c' = γ·v·w`.
struct SameCuspData {
    gamma: GaussianInt,
    u1: GaussianInt,
    gamma1: GaussianInt,
    g: GaussianInt,
}

fn samecusp_data(frame: &CuspFrame, cp: GaussianInt) -> Result<SameCuspData> {
    if cp.is_zero() {
        return domain("modulus must be nonzero");
    }
    let vw = frame.v() * frame.w;
    let gamma = vw.exact_div_of(cp).ok_or_else(|| GkError::Domain(format!("{cp} is not an allowed modulus: not divisible by v·w = {vw}")))?;
    let h = gcd(frame.u, gamma);
    let g = frame.w_gcd();
    let solvable = residues(g, false)?.into_iter().any(|d| g.divides(frame.u * d * d + gamma * d - frame.u));
    if !solvable {
        return domain(format!("{cp} is not an allowed modulus for cusp {}", frame.cusp));
    }
    Ok(SameCuspData { gamma, u1: frame.u.div_exact(h), gamma1: gamma.div_exact(h), g })
}

/// Same-cusp sum with the lower-triangular scaling
/// `[[u√v, 0], [w√v, 1/(u√v)]]`:
/// `e(Re((ω2 - ω1)/(u·v·w)))·Σ* e(Re((ω1·α + ω2·δ)/c'))`.
///
/// `δ` runs over residues modulo `c'` with `δ(uδ + γ) ≡ u (mod g)`,
/// `(δ, γ·q0/w) ∼ 1` and `(uδ + γ, w) ∼ 1`; `α` is fixed by
/// `αδ ≡ 1 (mod γ·q0/w)` and `(u1·α - γ1)(u1·δ + γ1) ≡ u1² (mod γ1·w)`.
/// The map `δ ↦ α` is checked to be injective.
pub fn kloosterman_samecusp(frame: &CuspFrame, w1: GaussianInt, w2: GaussianInt, cp: GaussianInt) -> Result<KloostermanValue> {
    let sd = samecusp_data(frame, cp)?;
    let (u, w, q0) = (frame.u, frame.w, frame.q0);
    let m1 = sd.gamma * q0.div_exact(w);
    let m2 = sd.gamma1 * w;
    let inv_u1 = mod_inverse(sd.u1, m2)?;
    let mut seen = HashSet::new();
    let mut acc = CompensatedSum::default();
    for d in residues(cp, false)? {
        let x = u * d + sd.gamma;
        if !sd.g.divides(d * x - u) || !coprime(d, m1) || !coprime(x, w) {
            continue;
        }
        let r1 = mod_inverse(d, m1)?;
        let y = mod_inverse(sd.u1 * d + sd.gamma1, m2).map_err(|_| GkError::Consistency("u1·δ + γ1 not invertible".into()))?;
        let r2 = (inv_u1 * (sd.gamma1 + sd.u1 * sd.u1 * y)).reduce(m2);
        let (alpha, l) = crt_pair(r1, m1, r2, m2).ok_or_else(|| GkError::Consistency(format!("incompatible congruences for α at δ = {d}")))?;
        if l != cp.canonical() {
            return Err(GkError::Consistency(format!("α determined modulo {l}, expected {cp}")));
        }
        let alpha = alpha.reduce(cp);
        if !seen.insert(alpha) {
            return Err(GkError::Consistency(format!("δ ↦ α not injective at α = {alpha}")));
        }
        acc.add(e_re_ratio(w1 * alpha + w2 * d, cp));
    }
    let twist = e_re_ratio(w2 - w1, u * frame.v() * w);
    Ok(KloostermanValue::from_sum(&acc).twisted(twist))
}

/// The same-cusp sum in the frame scaling, `c' = C·v`.
pub fn kloosterman_samecusp_frame(frame: &CuspFrame, w1: GaussianInt, w2: GaussianInt, cp: GaussianInt) -> Result<KloostermanValue> {
    Ok(kloosterman_samecusp(frame, w1, w2, cp)?.twisted(samecusp_frame_twist(frame, w1, w2)))
}

/// `K(ω1, ω2; d)` for `d | c'`: all `α, δ mod d` with
/// `αδ ≡ 1 (mod (γ·q0/w, d))` and
/// `(u1·α - γ1)(u1·δ + γ1) ≡ u1² (mod (γ1·w, d))`.
pub fn k_sum(frame: &CuspFrame, w1: GaussianInt, w2: GaussianInt, cp: GaussianInt, d: GaussianInt) -> Result<KloostermanValue> {
    let sd = samecusp_data(frame, cp)?;
    if d.is_zero() || !d.divides(cp) {
        return domain("d must be a nonzero divisor of c'");
    }
    let g1 = gcd(sd.gamma * frame.q0.div_exact(frame.w), d);
    let g2 = gcd(sd.gamma1 * frame.w, d);
    let rs = residues(d, false)?;
    let mut acc = CompensatedSum::default();
    for &a in &rs {
        let left = sd.u1 * a - sd.gamma1;
        for &dl in &rs {
            if !g1.divides(a * dl - GaussianInt::ONE) {
                continue;
            }
            if !g2.divides(left * (sd.u1 * dl + sd.gamma1) - sd.u1 * sd.u1) {
                continue;
            }
            acc.add(e_re_ratio(w1 * a + w2 * dl, d));
        }
    }
    Ok(KloostermanValue::from_sum(&acc))
}

/// Product over the prime powers `ϖ^e ∥ c'` of `K(ω1·λ, ω2·λ; ϖ^e)` with
/// `λ·c'/ϖ^e ≡ 1 (mod ϖ^e)`.
pub fn k_sum_crt(frame: &CuspFrame, w1: GaussianInt, w2: GaussianInt, cp: GaussianInt) -> Result<Complex64> {
    let f = factorize(cp)?;
    let mut prod = Complex64::new(1.0, 0.0);
    for &(p, e) in &f.factors {
        let pe = p.pow(e);
        let lambda = mod_inverse(cp.div_exact(pe), pe)?;
        prod *= k_sum(frame, w1 * lambda, w2 * lambda, cp, pe)?.value;
    }
    if f.factors.is_empty() {
        prod = k_sum(frame, w1, w2, cp, cp)?.value;
    }
    Ok(prod)
}

/// Membership test for `ϖ_a·g(A, D; C)·ϖ_b⁻¹`, also checking that the
/// indicator is periodic in `A mod v1·C` and `D mod v2·C`.
fn check_periodicity(f1: &CuspFrame, f2: &CuspFrame, a: GaussianInt, d: GaussianInt, c: GaussianInt) -> Result<()> {
    let base = crate::cusps::chi(f1, f2, a, d, c);
    for s in [GaussianInt::ONE, GaussianInt::I] {
        let sa = crate::cusps::chi(f1, f2, a + s * f1.v() * c, d, c);
        let sd = crate::cusps::chi(f1, f2, a, d + s * f2.v() * c, c);
        if sa != base || sd != base {
            return Err(GkError::Consistency(format!("indicator not periodic at A = {a}, D = {d}, C = {c}")));
        }
    }
    Ok(())
}

/// `S_{a,b}(m, n; C·√(v1 v2))` as the sum over `A mod v1·C`, `D mod v2·C`
/// with `AD ≡ 1 (mod C)` of `χ(ϖ_a·g(A, D; C)·ϖ_b⁻¹)·e(Re(mA/(v1 C) + nD/(v2 C)))`.
pub fn kloosterman_general(f1: &CuspFrame, f2: &CuspFrame, m: GaussianInt, n: GaussianInt, big_c: GaussianInt) -> Result<KloostermanValue> {
    if big_c.is_zero() {
        return domain("modulus C must be nonzero");
    }
    if f1.q0 != f2.q0 {
        return domain("frames must share the level q0");
    }
    let (v1, v2) = (f1.v(), f2.v());
    let den = v1 * v2 * big_c;
    let lifts = residues(v2, false)?;
    let mut acc = CompensatedSum::default();
    let mut checked = 0;
    for a in residues(v1 * big_c, false)? {
        if !coprime(a, big_c) {
            continue;
        }
        let d0 = mod_inverse(a, big_c)?;
        for &k in &lifts {
            let d = d0 + big_c * k;
            if checked < 4 {
                check_periodicity(f1, f2, a, d, big_c)?;
                checked += 1;
            }
            if crate::cusps::chi(f1, f2, a, d, big_c) {
                acc.add(e_re_ratio(m * a * v2 + n * d * v1, den));
            }
        }
    }
    Ok(KloostermanValue::from_sum(&acc))
}

/// The two factors of a generalized sum split at the primes of `q0`.
#[derive(Clone, Debug, Serialize)]
pub struct FactorParts {
    /// `C' ∼ (C, q0^∞)`.
    pub c_q0_part: GaussianInt,
    /// `C/C'`, prime to `q0`.
    pub c_coprime: GaussianInt,
    /// Inverse of `C/C'` modulo `[[v1, v2]·C', q0]`.
    pub c_tilde: GaussianInt,
    /// Generalized sum at the shifted cusps and modulus `C'·√(v1 v2)`.
    pub general_part: KloostermanValue,
    /// Classical sum `S((C' v1)* m, (C' v2)* n; C/C')`.
    pub simple_part: KloostermanValue,
}

impl FactorParts {
    pub fn product(&self) -> Complex64 {
        self.general_part.value * self.simple_part.value
    }
}

/// Splits `S_{a,b}(m, n; C·√(v1 v2))` into a sum at the `q0`-part of `C`
/// times a classical sum at the coprime part.
pub fn kloosterman_factor(f1: &CuspFrame, f2: &CuspFrame, m: GaussianInt, n: GaussianInt, big_c: GaussianInt) -> Result<FactorParts> {
    if big_c.is_zero() {
        return domain("modulus C must be nonzero");
    }
    let q0 = f1.q0;
    if f2.q0 != q0 {
        return domain("frames must share the level q0");
    }
    if !coprime(f1.u * f2.u, q0) {
        return domain("hypothesis gcd(u1·u2, q0) ∼ 1 fails");
    }
    if !q0.divides(f1.u * f1.u_tilde() - GaussianInt::ONE) || !q0.divides(f2.u * f2.u_tilde() - GaussianInt::ONE) {
        return domain("hypothesis u·ũ ≡ 1 (mod q0) fails");
    }
    let (cp, cc) = q0_part(big_c, q0)?;
    let l = crate::gaussint::lcm(crate::gaussint::lcm(f1.v(), f2.v()) * cp, q0);
    let ct = mod_inverse(cc, l)?;
    let g1 = CuspFrame::from_normalized(ct * f1.u, f1.w, q0)?;
    let g2 = CuspFrame::from_normalized(ct * f2.u, f2.w, q0)?;
    if g1.v() != f1.v() || g2.v() != f2.v() {
        return Err(GkError::Consistency("shifted cusp changed its width".into()));
    }
    let general_part = kloosterman_general(&g1, &g2, ct * m, ct * n, cp)?;
    let s1 = mod_inverse(cp * f1.v(), cc)?;
    let s2 = mod_inverse(cp * f2.v(), cc)?;
    let simple_part = kloosterman_classical(s1 * m, s2 * n, cc)?;
    Ok(FactorParts { c_q0_part: cp, c_coprime: cc, c_tilde: ct, general_part, simple_part })
}

/// Certificate of a bounded-height enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum BruteStatus {
    /// The coset sets agree at heights `height` and `2·height`.
    Stabilized { height: i64 },
    /// No two consecutive heights of the schedule agreed.
    Inconclusive { max_height: i64 },
}

impl BruteStatus {
    pub fn is_stabilized(&self) -> bool {
        matches!(self, BruteStatus::Stabilized { .. })
    }
}

/// Height schedule for the enumerations.
pub const DEFAULT_HEIGHTS: [i64; 4] = [8, 16, 32, 64];

/// Calls `f` on every matrix of `SL₂(ℤ[i])` with lower-left entry in `cs`
/// whose entries all have modulus at most `h`.
fn for_each_sl2(cs: &[GaussianInt], h: i64, mut f: impl FnMut(&Mat2)) {
    let h2 = h * h;
    let ds = small_gaussians(h2);
    let hf = h as f64;
    for &c in cs.iter().filter(|c| c.norm() <= h2) {
        for &d in &ds {
            if c.is_zero() && d.is_zero() {
                continue;
            }
            let (g, s, t) = xgcd(d, c).expect("nonzero pair");
            if !g.is_unit() {
                continue;
            }
            let gi = g.unit_inverse();
            let (a0, b0) = (s * gi, -(t * gi));
            // a = a0 + t·c, b = b0 + t·d
            let (center, radius) = if !c.is_zero() {
                (-(a0.to_complex() / c.to_complex()), hf / c.abs())
            } else {
                if a0.norm() > h2 {
                    continue;
                }
                (-(b0.to_complex() / d.to_complex()), hf / d.abs())
            };
            let (mut lo_re, mut hi_re) = ((center.re - radius).floor() as i64 - 1, (center.re + radius).ceil() as i64 + 1);
            let (mut lo_im, mut hi_im) = ((center.im - radius).floor() as i64 - 1, (center.im + radius).ceil() as i64 + 1);
            if !c.is_zero() && !d.is_zero() {
                let c2 = -(b0.to_complex() / d.to_complex());
                let r2 = hf / d.abs();
                lo_re = lo_re.max((c2.re - r2).floor() as i64 - 1);
                hi_re = hi_re.min((c2.re + r2).ceil() as i64 + 1);
                lo_im = lo_im.max((c2.im - r2).floor() as i64 - 1);
                hi_im = hi_im.min((c2.im + r2).ceil() as i64 + 1);
            }
            for tr in lo_re..=hi_re {
                for ti in lo_im..=hi_im {
                    let tt = GaussianInt::new(tr, ti);
                    let a = a0 + tt * c;
                    let b = b0 + tt * d;
                    if a.norm() <= h2 && b.norm() <= h2 {
                        f(&Mat2::new(a, b, c, d));
                    }
                }
            }
        }
    }
}

/// Largest squared entry modulus of a matrix.
fn height2(m: &Mat2) -> i64 {
    m.a.norm().max(m.b.norm()).max(m.c.norm()).max(m.d.norm())
}

type CosetKey = (GaussRational, GaussRational);

/// Double cosets `Γ'_a \ Γ₀(q0) / Γ'_b` found by bounded enumeration,
/// grouped by `C`, the lower-left entry of `ϖ_a⁻¹·γ·ϖ_b`.
#[derive(Clone, Debug)]
pub struct CosetCensus {
    pub status: BruteStatus,
    cells: BTreeMap<(i64, i64), BTreeSet<CosetKeyOrd>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct CosetKeyOrd([i64; 6]);

impl CosetKeyOrd {
    fn new(k: CosetKey) -> Self {
        let (s, d) = k;
        CosetKeyOrd([s.num().re, s.num().im, s.den(), d.num().re, d.num().im, d.den()])
    }

    fn parts(&self) -> (GaussRational, GaussRational) {
        let x = self.0;
        (GaussRational::new(GaussianInt::new(x[0], x[1]), x[2]), GaussRational::new(GaussianInt::new(x[3], x[4]), x[5]))
    }
}

impl CosetCensus {
    /// Number of double cosets with lower-left entry `C·√(v1 v2)`.
    pub fn count(&self, big_c: GaussianInt) -> usize {
        self.cells.get(&(big_c.re, big_c.im)).map_or(0, |s| s.len())
    }

    /// All `C` with at least one double coset.
    pub fn moduli(&self) -> Vec<GaussianInt> {
        self.cells.keys().map(|&(a, b)| GaussianInt::new(a, b)).collect()
    }

    /// `Σ e(Re(m·s/c + n·d/c))` over the cosets at `C`; `None` if the
    /// enumeration did not stabilize.
    pub fn sum(&self, m: GaussianInt, n: GaussianInt, big_c: GaussianInt) -> Option<KloostermanValue> {
        if !self.status.is_stabilized() {
            return None;
        }
        let mut acc = CompensatedSum::default();
        if let Some(cell) = self.cells.get(&(big_c.re, big_c.im)) {
            for key in cell {
                let (s, d) = key.parts();
                let x = s.mul_int(m) + d.mul_int(n);
                let (num, den) = x.re_frac();
                acc.add(e_frac(num, den));
            }
        }
        Some(KloostermanValue::from_sum(&acc))
    }
}

/// Enumerates `M = ϖ_a⁻¹·γ·ϖ_b ∈ SL₂(ℤ[i])` with `0 < |M21|² ≤ max_c_norm`
/// by the height of `M`, keeps those with `γ ∈ Γ₀(q0)` and records the
/// double cosets `(s/c mod ℤ[i], d/c mod ℤ[i])` of `g_a⁻¹·γ·g_b`, grouped by
/// `C = M21`.
///
/// One has `c = M21·√(v1 v2)`, `s/c = M11/(v1·M21)` and
/// `d/c = M22/(v2·M21)`, so all keys are exact elements of `ℚ(i)`. The
/// census is accepted once two consecutive heights of the schedule give the
/// same coset sets.
pub fn bruteforce_census(f1: &CuspFrame, f2: &CuspFrame, max_c_norm: i64, heights: &[i64]) -> Result<CosetCensus> {
    if f1.q0 != f2.q0 {
        return domain("frames must share the level q0");
    }
    if heights.len() < 2 || heights[0] < 4 {
        return domain("height schedule needs at least two heights starting at H >= 4");
    }
    let pa = f1.scaling.pi_matrix;
    let pb = f2.scaling.pi_matrix.inverse_sl2();
    let (v1, v2) = (f1.v(), f2.v());
    let cs: Vec<GaussianInt> = small_gaussians(max_c_norm).into_iter().filter(|c| !c.is_zero()).collect();
    let mut last = BTreeMap::new();
    // one enumeration at height H also yields the cosets reachable at the
    // previous height through their minimal representative heights
    for pair in heights.windows(2) {
        let (prev_h, h) = (pair[0], pair[1]);
        let mut cells: BTreeMap<(i64, i64), BTreeMap<CosetKeyOrd, i64>> = BTreeMap::new();
        for_each_sl2(&cs, h, |m| {
            if !(pa * *m * pb).in_gamma0(f1.q0) {
                return;
            }
            let cc = m.c;
            let s = GaussRational::ratio(m.a, v1 * cc).frac_mod1();
            let d = GaussRational::ratio(m.d, v2 * cc).frac_mod1();
            let hh = height2(m);
            let slot = cells.entry((cc.re, cc.im)).or_default().entry(CosetKeyOrd::new((s, d))).or_insert(hh);
            *slot = (*slot).min(hh);
        });
        let full: BTreeMap<_, BTreeSet<_>> = cells.iter().map(|(k, v)| (*k, v.keys().copied().collect())).collect();
        let lower: BTreeMap<_, BTreeSet<_>> = cells
            .iter()
            .map(|(k, v)| (*k, v.iter().filter(|(_, &hh)| hh <= prev_h * prev_h).map(|(k, _)| *k).collect::<BTreeSet<_>>()))
            .filter(|(_, s)| !s.is_empty())
            .collect();
        if lower == full {
            return Ok(CosetCensus { status: BruteStatus::Stabilized { height: prev_h }, cells: full });
        }
        last = full;
    }
    Ok(CosetCensus { status: BruteStatus::Inconclusive { max_height: *heights.last().unwrap() }, cells: last })
}

/// Brute-force value of the generalized sum with a stabilization certificate.
#[derive(Clone, Debug, Serialize)]
pub struct BruteForceValue {
    /// `None` when the enumeration is inconclusive.
    pub value: Option<KloostermanValue>,
    pub cosets: usize,
    pub status: BruteStatus,
}

/// `S_{a,b}(m, n; C·√(v1 v2))` by double-coset enumeration.
pub fn kloosterman_bruteforce(f1: &CuspFrame, f2: &CuspFrame, m: GaussianInt, n: GaussianInt, big_c: GaussianInt, heights: &[i64]) -> Result<BruteForceValue> {
    if big_c.is_zero() {
        return domain("modulus C must be nonzero");
    }
    let census = bruteforce_census(f1, f2, big_c.norm(), heights)?;
    Ok(BruteForceValue { value: census.sum(m, n, big_c), cosets: census.count(big_c), status: census.status })
}

/// The diagonal term of the sum formula for a pair of cusps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeltaTerm {
    #[serde(serialize_with = "crate::expsum::ser_complex")]
    pub value: Complex64,
    /// Number of cosets with a nonzero contribution.
    pub contributing_cosets: usize,
}

impl DeltaTerm {
    fn zero() -> Self {
        DeltaTerm { value: Complex64::new(0.0, 0.0), contributing_cosets: 0 }
    }
}

/// Contribution `e(Re(β·u·ω1))·[u·ω1 = ω2/u]` of an element with
/// `g_a⁻¹·γ·g_b = [[u, β], [0, 1/u]]`, where `M = ϖ_a⁻¹·γ·ϖ_b` and `β = M12/v`.
fn delta_contribution(m: &Mat2, v: GaussianInt, w1: GaussianInt, w2: GaussianInt) -> Option<Complex64> {
    let u = m.a;
    if u * w1 * u != w2 {
        return None;
    }
    let x = GaussRational::ratio(m.b * u * w1, v);
    let (num, den) = x.re_frac();
    Some(e_frac(num, den))
}

/// `Σ e(Re(β(γ)·u(γ)·ω1))·δ_{u(γ)ω1, ω2/u(γ)}` over `γ ∈ Γ'_a \ Γ₀(q0)` with
/// `γ·b = a`.
///
/// For identical frames this is `2δ_{ω1,ω2}`, or
/// `2(δ_{ω1,ω2} + e(-Re(β_a·ω1))·δ_{-ω1,ω2})` when the stabilizer has index
/// four. For distinct equivalent frames the cosets `Γ'_a·η·γ0` are
/// enumerated with `γ0·b = a` and `η` running over the stabilizer modulo its
/// unipotent part.
pub fn delta_term(f1: &CuspFrame, f2: &CuspFrame, w1: GaussianInt, w2: GaussianInt) -> Result<DeltaTerm> {
    if f1.q0 != f2.q0 {
        return domain("frames must share the level q0");
    }
    if !f1.equivalent_to(f2) {
        return Ok(DeltaTerm::zero());
    }
    let one = Complex64::new(1.0, 0.0);
    if f1.same_normalized(f2) {
        let mut value = Complex64::new(0.0, 0.0);
        let mut count = 0;
        if w1 == w2 {
            value += 2.0 * one;
            count += 2;
        }
        if f1.stab_index == 4 && -w1 == w2 {
            let beta = f1.beta.expect("index four carries β");
            let (num, den) = beta.mul_int(w1).re_frac();
            value += 2.0 * e_frac(-num, den);
            count += 2;
        }
        return Ok(DeltaTerm { value, contributing_cosets: count });
    }
    let a = crate::cusps::Cusp::from_fraction(f1.u, f1.w)?;
    let b = crate::cusps::Cusp::from_fraction(f2.u, f2.w)?;
    let g0 = crate::cusps::find_equivalence(b, a, f1.q0).ok_or_else(|| GkError::Consistency("equivalent cusps without a witness".into()))?;
    let pa = f1.scaling.pi_matrix;
    let mut etas = vec![GaussianInt::ONE, -GaussianInt::ONE];
    if f1.stab_index == 4 {
        etas.extend([GaussianInt::I, -GaussianInt::I]);
    }
    let shift = f1.beta.map(|b| b.mul_int(f1.v())).unwrap_or(GaussRational::from_int(GaussianInt::ZERO));
    if !shift.is_integral() {
        return Err(GkError::Consistency("v·β is not integral".into()));
    }
    let mut value = Complex64::new(0.0, 0.0);
    let mut count = 0;
    for eps in etas {
        let x = if eps == GaussianInt::I || eps == -GaussianInt::I { shift.num() } else { GaussianInt::ZERO };
        let eta = pa * Mat2::unit_diagonal(eps) * Mat2::translation(x) * pa.inverse_sl2();
        if !eta.in_gamma0(f1.q0) {
            return Err(GkError::Consistency("stabilizer representative outside Γ₀(q0)".into()));
        }
        let m = pa.inverse_sl2() * eta * g0 * f2.scaling.pi_matrix;
        if !m.c.is_zero() || !m.a.is_unit() {
            return Err(GkError::Consistency("coset element not upper triangular".into()));
        }
        if let Some(t) = delta_contribution(&m, f1.v(), w1, w2) {
            value += t;
            count += 1;
        }
    }
    Ok(DeltaTerm { value, contributing_cosets: count })
}

/// The diagonal term by enumerating `γ ∈ Γ₀(q0)` of bounded height with
/// `γ·b = a`, one representative per left coset of `Γ'_a`.
pub fn delta_term_bruteforce(f1: &CuspFrame, f2: &CuspFrame, w1: GaussianInt, w2: GaussianInt, heights: &[i64]) -> Result<(DeltaTerm, BruteStatus)> {
    if f1.q0 != f2.q0 {
        return domain("frames must share the level q0");
    }
    let q0 = f1.q0;
    let (u1, wa, u2, wb) = (f1.u, f1.w, f2.u, f2.w);
    let pa = f1.scaling.pi_matrix.inverse_sl2();
    let pb = f2.scaling.pi_matrix;
    let v = f1.v();
    let collect = |h: i64| -> Result<BTreeMap<CosetKeyOrd, Mat2>> {
        let h2 = h * h;
        let mut out = BTreeMap::new();
        for k in small_gaussians(h2 / q0.norm() + 1) {
            let c = q0 * k;
            if c.norm() > h2 {
                continue;
            }
            // γ·(u2, w2) = λ·(u1, w1): the bottom row gives d
            for lambda in crate::gaussint::UNITS {
                let Some(d) = wb.exact_div_of(lambda * wa - c * u2) else { continue };
                if d.norm() > h2 || (c.is_zero() && d.is_zero()) {
                    continue;
                }
                let (g, s, t) = xgcd(d, c)?;
                if !g.is_unit() {
                    continue;
                }
                let gi = g.unit_inverse();
                let (a0, b0) = (s * gi, -(t * gi));
                let Some(tt) = (lambda * wa).exact_div_of(lambda * u1 - (a0 * u2 + b0 * wb)) else { continue };
                let (a, b) = (a0 + tt * c, b0 + tt * d);
                if a.norm() > h2 || b.norm() > h2 {
                    continue;
                }
                let gm = Mat2::new(a, b, c, d);
                let m = pa * gm * pb;
                if !m.c.is_zero() {
                    return Err(GkError::Consistency("γ·b = a but ϖ_a⁻¹γϖ_b not triangular".into()));
                }
                let bu = GaussRational::ratio(m.b * m.a, v).frac_mod1();
                let key = CosetKeyOrd::new((GaussRational::from_int(m.a), bu));
                out.entry(key).or_insert(m);
            }
        }
        Ok(out)
    };
    let sum = |cells: &BTreeMap<CosetKeyOrd, Mat2>| {
        let mut dt = DeltaTerm::zero();
        for m in cells.values() {
            if let Some(t) = delta_contribution(m, v, w1, w2) {
                dt.value += t;
                dt.contributing_cosets += 1;
            }
        }
        dt
    };
    let mut prev: Option<BTreeMap<CosetKeyOrd, Mat2>> = None;
    for &h in heights {
        let cur = collect(h)?;
        if let Some(p) = &prev {
            if p.keys().eq(cur.keys()) {
                return Ok((sum(&cur), BruteStatus::Stabilized { height: h / 2 }));
            }
        }
        prev = Some(cur);
    }
    let last = prev.unwrap_or_default();
    Ok((sum(&last), BruteStatus::Inconclusive { max_height: *heights.last().unwrap_or(&0) }))
}

/// Which inequality [`check_bounds`] evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `|S(m, n; c)| ≤ φ(c)`.
    Trivial,
    /// Prime-power bound `τ_ϖ·|ϖ|^{υ_ϖ}·|(m, n, ϖ^k)·ϖ^k|`.
    WeilEstermannPrime,
    /// `|S(m, n; c)| ≤ 2^{7/2}·2^{ω(c)}·|(m, n, c)·c|`.
    WeilEstermann,
    /// `|S_{a,b}(m, n; C√(v1v2))| ≤ |C·m_a·m_b|²`.
    GeneralTrivial,
    /// `|S_{a,b}| ≤ √8·|m_a m_b|²·|(C, q0^∞)(C, m, n)·C|·τ(C)`.
    GeneralWe,
}

/// Arguments for [`check_bounds`].
#[derive(Clone, Copy, Debug)]
pub enum BoundCase<'a> {
    Classical { m: GaussianInt, n: GaussianInt, c: GaussianInt },
    General { f1: &'a CuspFrame, f2: &'a CuspFrame, m: GaussianInt, n: GaussianInt, big_c: GaussianInt },
}

/// One evaluated inequality.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoundRow {
    pub kind: BoundKind,
    /// `|S|`.
    pub lhs: f64,
    /// Right-hand side, with `τ` counting ideal divisors where it occurs.
    pub rhs: f64,
    /// Right-hand side with `τ` counting all divisors including associates.
    pub rhs_assoc: f64,
    pub violated: bool,
    pub violated_assoc: bool,
}

/// Slack allowed for rounding when comparing a sum with its bound.
const BOUND_SLACK: f64 = 1e-9;

fn row(kind: BoundKind, lhs: f64, rhs: f64, rhs_assoc: f64) -> BoundRow {
    BoundRow { kind, lhs, rhs, rhs_assoc, violated: lhs > rhs + BOUND_SLACK, violated_assoc: lhs > rhs_assoc + BOUND_SLACK }
}

fn gcd3(a: GaussianInt, b: GaussianInt, c: GaussianInt) -> GaussianInt {
    gcd(gcd(a, b), c)
}

/// Evaluates a Kloosterman bound; violations are reported, not raised.
pub fn check_bounds(kind: BoundKind, case: BoundCase<'_>) -> Result<BoundRow> {
    match (kind, case) {
        (BoundKind::Trivial, BoundCase::Classical { m, n, c }) => {
            let s = kloosterman_classical(m, n, c)?.value.norm();
            let p = multiplicative_stats(c)?.phi as f64;
            Ok(row(kind, s, p, p))
        }
        (BoundKind::WeilEstermannPrime, BoundCase::Classical { m, n, c }) => {
            let f = factorize(c)?;
            if f.factors.len() != 1 {
                return domain("prime-power bound needs c = unit·ϖ^k");
            }
            let p = f.factors[0].0;
            let (tau, up) = if p.divides(GaussianInt::from_int(2)) { (8.0 * 2f64.sqrt(), 2.0) } else { (2.0, 0.0) };
            let s = kloosterman_classical(m, n, c)?.value.norm();
            let r = tau * p.abs().powf(up) * gcd3(m, n, c).abs() * c.abs();
            Ok(row(kind, s, r, r))
        }
        (BoundKind::WeilEstermann, BoundCase::Classical { m, n, c }) => {
            let s = kloosterman_classical(m, n, c)?.value.norm();
            let om = multiplicative_stats(c)?.omega as i32;
            let r = 2f64.powf(3.5) * 2f64.powi(om) * gcd3(m, n, c).abs() * c.abs();
            Ok(row(kind, s, r, r))
        }
        (BoundKind::GeneralTrivial, BoundCase::General { f1, f2, m, n, big_c }) => {
            let s = kloosterman_general(f1, f2, m, n, big_c)?.value.norm();
            let r = (big_c * f1.width_gen * f2.width_gen).norm() as f64;
            Ok(row(kind, s, r, r))
        }
        (BoundKind::GeneralWe, BoundCase::General { f1, f2, m, n, big_c }) => {
            let s = kloosterman_general(f1, f2, m, n, big_c)?.value.norm();
            let st = multiplicative_stats(big_c)?;
            let (cq, _) = q0_part(big_c, f1.q0)?;
            let base = 8f64.sqrt() * ((f1.width_gen * f2.width_gen).norm() as f64) * cq.abs() * gcd3(big_c, m, n).abs() * big_c.abs();
            Ok(row(kind, s, base * st.tau_ideal as f64, base * st.tau_assoc as f64))
        }
        _ => domain("bound kind does not match the supplied case"),
    }
}

/// Outcome of the Weil–Estermann sweep over classical sums.
#[derive(Clone, Debug, Default, Serialize)]
pub struct WeSweepReport {
    pub exhaustive_moduli: usize,
    pub exhaustive_pairs: u64,
    pub sampled_moduli: usize,
    pub sampled_pairs: u64,
    /// Violations of `2^{7/2}·2^{ω(c)}·|(m, n, c)·c|`.
    pub violations: u64,
    /// Violations of the prime-power bound, checked on prime-power moduli.
    pub prime_power_violations: u64,
    /// Largest observed `|S| / (2^{ω(c)}·|(m, n, c)·c|)`.
    pub max_ratio: f64,
    /// Violations of `2^{3/2}·τ(c)·|(m, n, c)·c|` with `τ` counting ideals.
    pub tau_ideal_violations: u64,
    /// The same with `τ` counting associates separately.
    pub tau_assoc_violations: u64,
    /// The weakest divisor-count convention under which the `τ` bound held:
    /// `"ideal"`, `"associates"` or `"neither"`.
    pub tau_convention: String,
}

/// Canonical nonzero Gaussian integers with norm in `(lo, hi]`.
fn canonical_moduli(lo: i64, hi: i64) -> Vec<GaussianInt> {
    small_gaussians(hi).into_iter().filter(|z| z.norm() > lo && *z == z.canonical()).collect()
}

struct ModulusTables {
    n: i64,
    roots: Vec<Complex64>,
    /// `(Re-part table for δ*, Re-part table for δ)` as residues of `c̄·δ*`, `c̄·δ`.
    pairs: Vec<(GaussianInt, GaussianInt)>,
    omega: i32,
    tau_ideal: f64,
    tau_assoc: f64,
    prime_power: Option<(f64, f64)>,
}

impl ModulusTables {
    fn new(c: GaussianInt) -> Result<Self> {
        let n = c.norm();
        let roots = (0..n).map(|k| e_frac(k, n)).collect();
        let cb = c.conj();
        let pairs = residues(c, true)?.into_iter().map(|d| Ok((mod_inverse(d, c)? * cb, d * cb))).collect::<Result<Vec<_>>>()?;
        let f = factorize(c)?;
        let st = multiplicative_stats(c)?;
        let prime_power = if f.factors.len() == 1 {
            let p = f.factors[0].0;
            Some(if p.divides(GaussianInt::from_int(2)) { (8.0 * 2f64.sqrt(), 2.0) } else { (2.0, 0.0) })
        } else {
            None
        };
        Ok(ModulusTables { n, roots, pairs, omega: st.omega as i32, tau_ideal: st.tau_ideal as f64, tau_assoc: st.tau_assoc as f64, prime_power })
    }

    #[inline]
    fn phase_index(&self, m: GaussianInt, x: GaussianInt) -> i64 {
        (m.re * x.re - m.im * x.im).rem_euclid(self.n)
    }

    fn record(&self, rep: &mut WeSweepReport, c: GaussianInt, m: GaussianInt, n: GaussianInt, s: f64) {
        let g = gcd3(m, n, c).abs() * c.abs();
        let we = 2f64.powf(3.5) * 2f64.powi(self.omega) * g;
        if s > we + BOUND_SLACK {
            rep.violations += 1;
        }
        rep.max_ratio = rep.max_ratio.max(s / (2f64.powi(self.omega) * g));
        if let Some((tau, up)) = self.prime_power {
            let p = factorize(c).map(|f| f.factors[0].0.abs()).unwrap_or(1.0);
            if s > tau * p.powf(up) * g + BOUND_SLACK {
                rep.prime_power_violations += 1;
            }
        }
        if s > 2f64.powf(1.5) * self.tau_ideal * g + BOUND_SLACK {
            rep.tau_ideal_violations += 1;
        }
        if s > 2f64.powf(1.5) * self.tau_assoc * g + BOUND_SLACK {
            rep.tau_assoc_violations += 1;
        }
    }
}

/// Checks the Weil–Estermann bound for `S(m, n; c)` with every
/// `(m, n) mod c` for canonical `c` with `|c|² ≤ exhaustive_max`, and with
/// `samples` seeded random pairs for `exhaustive_max < |c|² ≤ sampled_max`.
///
/// Associates of `c` need not be checked since
/// `S(m, n; ε·c) = S(ε̄·m, ε̄·n; c)` for units `ε`.
pub fn weil_estermann_sweep(exhaustive_max: i64, sampled_max: i64, samples: usize, seed: u64) -> Result<WeSweepReport> {
    let mut rep = WeSweepReport::default();
    for c in canonical_moduli(0, exhaustive_max) {
        let t = ModulusTables::new(c)?;
        let rs = residues(c, false)?;
        let k = rs.len();
        let mut acc = vec![Complex64::new(0.0, 0.0); k * k];
        let mut ia = vec![0usize; k];
        let mut ib = vec![0usize; k];
        for &(a, b) in &t.pairs {
            for (i, &r) in rs.iter().enumerate() {
                ia[i] = t.phase_index(r, a) as usize;
                ib[i] = t.phase_index(r, b) as usize;
            }
            let nn = t.n as usize;
            for i in 0..k {
                let row = &mut acc[i * k..(i + 1) * k];
                let base = ia[i];
                for (j, slot) in row.iter_mut().enumerate() {
                    let mut idx = base + ib[j];
                    if idx >= nn {
                        idx -= nn;
                    }
                    *slot += t.roots[idx];
                }
            }
        }
        for i in 0..k {
            for j in 0..k {
                t.record(&mut rep, c, rs[i], rs[j], acc[i * k + j].norm());
            }
        }
        rep.exhaustive_moduli += 1;
        rep.exhaustive_pairs += (k * k) as u64;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for c in canonical_moduli(exhaustive_max, sampled_max) {
        let t = ModulusTables::new(c)?;
        let r = (c.norm() as f64).sqrt() as i64 + 1;
        for _ in 0..samples {
            let m = GaussianInt::new(rng.gen_range(-r..=r), rng.gen_range(-r..=r));
            let n = GaussianInt::new(rng.gen_range(-r..=r), rng.gen_range(-r..=r));
            let mut s = Complex64::new(0.0, 0.0);
            for &(a, b) in &t.pairs {
                let idx = (t.phase_index(m, a) + t.phase_index(n, b)) % t.n;
                s += t.roots[idx as usize];
            }
            t.record(&mut rep, c, m, n, s.norm());
        }
        rep.sampled_moduli += 1;
        rep.sampled_pairs += samples as u64;
    }
    rep.tau_convention = if rep.tau_ideal_violations == 0 {
        "ideal"
    } else if rep.tau_assoc_violations == 0 {
        "associates"
    } else {
        "neither"
    }
    .to_string();
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cusps::{allowed_moduli, class_representatives, Cusp};
    use proptest::prelude::*;

    fn g(re: i64, im: i64) -> GaussianInt {
        GaussianInt::new(re, im)
    }

    /// Random Gaussian integer with both coordinates in `[-r, r]`.
    fn random_gaussian(rng: &mut impl rand::Rng, r: i64) -> GaussianInt {
        GaussianInt::new(rng.gen_range(-r..=r), rng.gen_range(-r..=r))
    }

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-9
    }

    #[test]
    fn classical_examples() {
        assert!(close(kloosterman_classical(g(1, 0), g(1, 0), g(1, 1)).unwrap().value, Complex64::new(1.0, 0.0)));
        assert!(close(kloosterman_classical(g(0, 0), g(1, 0), g(1, 1)).unwrap().value, Complex64::new(-1.0, 0.0)));
        let s = kloosterman_classical(g(0, 0), g(0, 0), g(3, 2)).unwrap();
        assert_eq!(s.terms, 12);
        assert!(close(s.value, Complex64::new(12.0, 0.0)));
    }

    /// Direct definition with an independent inverse search.
    fn classical_oracle(m: GaussianInt, n: GaussianInt, c: GaussianInt) -> Complex64 {
        let rs = residues(c, false).unwrap();
        let mut s = Complex64::new(0.0, 0.0);
        for &d in &rs {
            if let Some(&ds) = rs.iter().find(|&&x| c.divides(x * d - GaussianInt::ONE)) {
                let z = (m * ds + n * d).to_complex() / c.to_complex();
                s += Complex64::from_polar(1.0, std::f64::consts::TAU * z.re);
            }
        }
        s
    }

    #[test]
    fn classical_matches_oracle() {
        for c in [g(1, 1), g(3, 0), g(2, 1), g(2, 2), g(4, 1), g(3, 3)] {
            for m in [g(0, 0), g(1, 0), g(2, -1)] {
                for n in [g(1, 0), g(0, 3)] {
                    let a = kloosterman_classical(m, n, c).unwrap().value;
                    assert!(close(a, classical_oracle(m, n, c)));
                }
            }
        }
    }

    #[test]
    fn gauss_sum_modulus() {
        for a in [g(1, 0), g(2, 0), g(1, 1)] {
            assert!((gauss_sum(a, g(3, 0)).unwrap().norm() - 3.0).abs() < 1e-12);
        }
        let p = g(2, 1);
        for a in residues(p, true).unwrap() {
            assert!((gauss_sum(a, p).unwrap().norm() - 5f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn samecusp_zero_frequencies_counts() {
        let q0 = g(2, 0);
        for f in class_representatives(q0).unwrap() {
            for m in allowed_moduli(&f, &f, 6.0).unwrap() {
                let cp = m.big_c * f.v();
                let s = kloosterman_samecusp(&f, GaussianInt::ZERO, GaussianInt::ZERO, cp).unwrap();
                assert!((s.value.re - s.terms as f64).abs() < 1e-9 && s.value.im.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn level_one_reduces_to_classical() {
        let f = class_representatives(g(1, 0)).unwrap().remove(0);
        for c in [g(1, 0), g(1, 1), g(2, 1), g(3, 0), g(2, -2)] {
            for (m, n) in [(g(1, 0), g(1, 0)), (g(2, 1), g(0, 1)), (g(0, 0), g(3, 1))] {
                let cl = kloosterman_classical(m, n, c).unwrap().value;
                let gen = kloosterman_general(&f, &f, m, n, c).unwrap().value;
                let same = kloosterman_samecusp_frame(&f, m, n, c).unwrap().value;
                // conjugation by ϖ ∈ SL(2, ℤ[i]) preserves the full modular group
                assert!(close(gen, cl), "c={c} m={m} n={n}");
                assert!(close(same, gen));
            }
        }
    }

    #[test]
    fn three_routes_small_levels() {
        for q0 in [g(1, 1), g(2, 0)] {
            let frames = class_representatives(q0).unwrap();
            for f1 in &frames {
                for f2 in &frames {
                    let census = bruteforce_census(f1, f2, 8, &DEFAULT_HEIGHTS).unwrap();
                    assert!(census.status.is_stabilized(), "q0={q0}");
                    for m in allowed_moduli(f1, f2, 8f64.sqrt() * 2.0).unwrap() {
                        if m.big_c.norm() > 8 {
                            continue;
                        }
                        for (w1, w2) in [(g(1, 0), g(1, 0)), (g(1, 1), g(0, -1)), (g(0, 0), g(2, 0))] {
                            let gen = kloosterman_general(f1, f2, w1, w2, m.big_c).unwrap().value;
                            let bf = census.sum(w1, w2, m.big_c).unwrap().value;
                            assert!(close(gen, bf), "q0={q0} {} {} C={} {gen} {bf}", f1.cusp, f2.cusp, m.big_c);
                            if f1.same_normalized(f2) {
                                let s = kloosterman_samecusp_frame(f1, w1, w2, m.big_c * f1.v()).unwrap().value;
                                assert!(close(s, gen));
                            }
                        }
                    }
                    // moduli outside the admissible set carry no cosets
                    for c in census.moduli() {
                        assert!(crate::cusps::is_admissible(f1, f2, c).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn k_sum_matches_samecusp_modulus_and_crt() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for q0 in [g(1, 1), g(2, 0), g(3, 0)] {
            for f in class_representatives(q0).unwrap() {
                for m in allowed_moduli(&f, &f, 12.0).unwrap().into_iter().take(6) {
                    let cp = m.big_c * f.v();
                    let w1 = random_gaussian(&mut rng, 3);
                    let w2 = random_gaussian(&mut rng, 3);
                    let s = kloosterman_samecusp(&f, w1, w2, cp).unwrap().value;
                    let k = k_sum(&f, w1, w2, cp, cp).unwrap().value;
                    assert!((s.norm() - k.norm()).abs() < 1e-9);
                    let twist = e_re_ratio(w2 - w1, f.u * f.v() * f.w);
                    assert!(close(s, k * twist));
                    assert!(close(k, k_sum_crt(&f, w1, w2, cp).unwrap()));
                }
            }
        }
    }

    #[test]
    fn factorization_identity_small() {
        let q0 = g(2, 0);
        for f1 in class_representatives(q0).unwrap() {
            for f2 in class_representatives(q0).unwrap() {
                for c in [g(1, 0), g(3, 0), g(1, 1), g(2, 1), g(3, 3), g(4, 2), g(1, 1) * g(2, 1)] {
                    let (m, n) = (g(1, 2), g(-1, 1));
                    let full = kloosterman_general(&f1, &f2, m, n, c).unwrap().value;
                    let parts = kloosterman_factor(&f1, &f2, m, n, c).unwrap();
                    assert!(close(full, parts.product()), "C={c}");
                }
            }
        }
    }

    #[test]
    fn delta_term_formula_vs_bruteforce() {
        for q0 in [g(1, 0), g(1, 1), g(2, 0)] {
            let frames = class_representatives(q0).unwrap();
            for f1 in &frames {
                for f2 in &frames {
                    for (w1, w2) in [(g(1, 0), g(1, 0)), (g(1, 1), g(-1, -1)), (g(1, 0), g(0, 1)), (g(2, 1), g(-2, -1))] {
                        let d = delta_term(f1, f2, w1, w2).unwrap();
                        let (b, st) = delta_term_bruteforce(f1, f2, w1, w2, &DEFAULT_HEIGHTS).unwrap();
                        assert!(st.is_stabilized());
                        assert!(close(d.value, b.value));
                        assert_eq!(d.contributing_cosets, b.contributing_cosets);
                        assert!(d.contributing_cosets <= 4);
                    }
                }
            }
        }
    }

    #[test]
    fn delta_term_examples() {
        let f = class_representatives(g(3, 0)).unwrap().remove(0);
        assert_eq!(f.stab_index, 4);
        let f9 = CuspFrame::from_normalized(g(1, 0), g(3, 0), g(9, 0)).unwrap();
        assert_eq!(f9.stab_index, 2);
        let d = delta_term(&f9, &f9, g(2, 1), g(2, 1)).unwrap();
        assert!(close(d.value, Complex64::new(2.0, 0.0)));
        let reps = class_representatives(g(1, 1)).unwrap();
        let d = delta_term(&reps[0], &reps[1], g(1, 0), g(1, 0)).unwrap();
        assert_eq!(d.contributing_cosets, 0);
    }

    #[test]
    fn equivalent_frames_delta() {
        // 1/2 and -1/2 are equivalent at level 4
        let q0 = g(4, 0);
        let a = CuspFrame::new(Cusp::from_fraction(g(1, 0), g(2, 0)).unwrap(), q0).unwrap();
        let b = CuspFrame::new(Cusp::from_fraction(g(3, 0), g(2, 0)).unwrap(), q0).unwrap();
        assert!(a.equivalent_to(&b) && !a.same_normalized(&b));
        for (w1, w2) in [(g(1, 0), g(1, 0)), (g(1, 0), g(-1, 0)), (g(2, 1), g(2, 1))] {
            let d = delta_term(&a, &b, w1, w2).unwrap();
            let (bf, st) = delta_term_bruteforce(&a, &b, w1, w2, &DEFAULT_HEIGHTS).unwrap();
            assert!(st.is_stabilized());
            assert!(close(d.value, bf.value), "{w1} {w2} {} {}", d.value, bf.value);
        }
    }

    #[test]
    fn bounds_rows() {
        let r = check_bounds(BoundKind::WeilEstermannPrime, BoundCase::Classical { m: g(1, 0), n: g(2, 1), c: g(9, 0) }).unwrap();
        assert!(!r.violated);
        assert!(check_bounds(BoundKind::WeilEstermannPrime, BoundCase::Classical { m: g(1, 0), n: g(1, 0), c: g(6, 0) }).is_err());
        let f = class_representatives(g(2, 0)).unwrap();
        let r = check_bounds(BoundKind::GeneralTrivial, BoundCase::General { f1: &f[0], f2: &f[1], m: g(1, 0), n: g(1, 1), big_c: g(3, 1) }).unwrap();
        assert!(!r.violated);
    }

    #[test]
    fn small_weil_estermann_sweep() {
        let r = weil_estermann_sweep(20, 40, 10, 1).unwrap();
        assert_eq!(r.violations, 0);
        assert_eq!(r.prime_power_violations, 0);
        assert!(r.exhaustive_moduli > 0 && r.sampled_moduli > 0);
    }

    proptest! {
        #[test]
        fn classical_symmetries(m in (-4i64..4, -4i64..4), n in (-4i64..4, -4i64..4), c in (-5i64..5, -5i64..5)) {
            let (m, n, c) = (g(m.0, m.1), g(n.0, n.1), g(c.0, c.1));
            prop_assume!(!c.is_zero());
            let s = kloosterman_classical(m, n, c).unwrap();
            prop_assert!(s.value.norm() <= s.terms as f64 + s.err);
            let t = kloosterman_classical(n, m, c).unwrap().value;
            prop_assert!(close(s.value, t));
            let conj = kloosterman_classical(-m, -n, c).unwrap().value;
            prop_assert!(close(s.value.conj(), conj));
            if c.im == 0 && m.is_zero() {
                prop_assert!(s.value.im.abs() < 1e-9);
            }
        }

        #[test]
        fn general_conjugation_and_symmetry(qi in 0usize..3, ci in 0usize..6, m in (-3i64..3, -3i64..3), n in (-3i64..3, -3i64..3)) {
            let q0 = [g(1, 1), g(2, 0), g(3, 0)][qi];
            let frames = class_representatives(q0).unwrap();
            let (m, n) = (g(m.0, m.1), g(n.0, n.1));
            for f1 in &frames {
                for f2 in &frames {
                    let ms = allowed_moduli(f1, f2, 10.0).unwrap();
                    let Some(md) = ms.get(ci) else { continue };
                    let s = kloosterman_general(f1, f2, m, n, md.big_c).unwrap().value;
                    let sc = kloosterman_general(f1, f2, -m, -n, md.big_c).unwrap().value;
                    prop_assert!(close(s.conj(), sc));
                    // S_{a,b}(m, n; c) = S_{b,a}(-n, -m; c) with c = C·√(v1 v2)
                    let r = kloosterman_general(f2, f1, -n, -m, md.big_c).unwrap().value;
                    prop_assert!(close(s, r));
                }
            }
        }
    }

    #[test]
    fn scaling_covariance_translation() {
        // replacing ϖ by ϖ·n[k] multiplies g by n[k/v]: S changes by
        // e(Re(β2·n - β1·m)) with β_j = k_j/v_j
        let q0 = g(2, 0);
        let frames = class_representatives(q0).unwrap();
        let (k1, k2) = (g(1, 1), g(2, -1));
        for f1 in &frames {
            for f2 in &frames {
                let mut h1 = f1.clone();
                h1.scaling.pi_matrix = f1.scaling.pi_matrix * Mat2::translation(k1);
                let mut h2 = f2.clone();
                h2.scaling.pi_matrix = f2.scaling.pi_matrix * Mat2::translation(k2);
                for md in allowed_moduli(f1, f2, 6.0).unwrap() {
                    let (m, n) = (g(1, 2), g(-2, 1));
                    let s = kloosterman_general(f1, f2, m, n, md.big_c).unwrap().value;
                    let t = kloosterman_general(&h1, &h2, m, n, md.big_c).unwrap().value;
                    let twist = e_re_ratio(k2 * n * f1.v() - k1 * m * f2.v(), f1.v() * f2.v());
                    assert!(close(t, s * twist), "C={}", md.big_c);
                }
            }
        }
    }
}
