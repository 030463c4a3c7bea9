//! Large-sieve sums, the geometric side of the sum formula and partial sums
//! of Linnik–Selberg series.
//!
//! Bounds with unknown implicit constants are turned into [`SweepReport`]s:
//! each grid point records the measured quantity, the bound without its
//! constant, and their ratio.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bessel::{bessel_j_star, MAX_STAR_ARG};
use crate::btransform::{b_transform, diagonal_term, BMethod, BTransformConfig, TestParams};
use crate::cusps::{admissible_pairs, allowed_moduli, class_representatives, is_admissible, CuspFrame, Modulus};
use crate::error::{domain, Result};
use crate::expsum::{e_re_ratio, e_real, ser_complex, CompensatedSum};
use crate::gaussint::{factorize, gcd, hecke_zeta_partial, multiplicative_stats, residues, zeta_tail_bound, GaussianInt};
use crate::kloosterman::{delta_term, kloosterman_general};
use crate::quad::GaussRule;
use crate::report::{ParamValue, SweepReport, SweepRow};
use crate::special::rgamma;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn gi(re: i64, im: i64) -> GaussianInt {
    GaussianInt::new(re, im)
}

// ---------------------------------------------------------------------------
// Coefficient vectors

/// All `ω ∈ ℤ[i]` with `N/2 < |ω|² ≤ N`, ordered by norm, then real and imaginary part.
pub fn annulus(n: f64) -> Vec<GaussianInt> {
    let r = n.sqrt().floor() as i64 + 1;
    let mut out: Vec<GaussianInt> = (-r..=r)
        .flat_map(|a| (-r..=r).map(move |b| gi(a, b)))
        .filter(|w| {
            let q = w.norm() as f64;
            2.0 * q > n && q <= n
        })
        .collect();
    out.sort_by_key(|w| (w.norm(), w.re, w.im));
    out
}

/// Families of coefficient vectors used by the sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CoeffFamily {
    /// `b ≡ 1` on the annulus.
    Ones,
    /// `b = 1` at the first annulus point, zero elsewhere.
    Spike,
    /// Seeded random unit phases.
    RandomPhase,
    /// `b(ω) = e(Re(β'ω))`.
    Twist { beta_re: f64, beta_im: f64 },
}

impl CoeffFamily {
    pub fn name(&self) -> &'static str {
        match self {
            CoeffFamily::Ones => "ones",
            CoeffFamily::Spike => "spike",
            CoeffFamily::RandomPhase => "random_phase",
            CoeffFamily::Twist { .. } => "twist",
        }
    }
}

impl std::str::FromStr for CoeffFamily {
    type Err = crate::GkError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ones" => CoeffFamily::Ones,
            "spike" => CoeffFamily::Spike,
            "random" | "random_phase" => CoeffFamily::RandomPhase,
            "twist" => CoeffFamily::Twist { beta_re: 0.5f64.sqrt(), beta_im: (1.0f64 / 3.0).sqrt() },
            other => return domain(format!("unknown coefficient family '{other}'")),
        })
    }
}

/// Coefficients `b(ω)` supported on the annulus `N/2 < |ω|² ≤ N`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffVector {
    pub n: f64,
    entries: Vec<(GaussianInt, Complex64)>,
}

impl CoeffVector {
    /// Validates the annulus condition and rejects repeated keys.
    pub fn new(n: f64, entries: impl IntoIterator<Item = (GaussianInt, Complex64)>) -> Result<Self> {
        if !(n >= 1.0 && n.is_finite()) {
            return domain("coefficient vector: N must be at least 1");
        }
        let mut entries: Vec<(GaussianInt, Complex64)> = entries.into_iter().collect();
        for (w, b) in &entries {
            let q = w.norm() as f64;
            if !(2.0 * q > n && q <= n) {
                return domain(format!("coefficient vector: {w} is outside N/2 < |ω|² ≤ N"));
            }
            if !(b.re.is_finite() && b.im.is_finite()) {
                return domain("coefficient vector: entries must be finite");
            }
        }
        entries.sort_by_key(|(w, _)| (w.norm(), w.re, w.im));
        if entries.windows(2).any(|p| p[0].0 == p[1].0) {
            return domain("coefficient vector: repeated frequency");
        }
        Ok(CoeffVector { n, entries })
    }

    pub fn zero(n: f64) -> Result<Self> {
        CoeffVector::new(n, std::iter::empty())
    }

    /// A member of a coefficient family; `seed` is used by the random family only.
    pub fn from_family(n: f64, family: CoeffFamily, seed: u64) -> Result<Self> {
        let pts = annulus(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries: Vec<(GaussianInt, Complex64)> = match family {
            CoeffFamily::Ones => pts.iter().map(|&w| (w, c(1.0, 0.0))).collect(),
            CoeffFamily::Spike => pts.first().map(|&w| (w, c(1.0, 0.0))).into_iter().collect(),
            CoeffFamily::RandomPhase => pts.iter().map(|&w| (w, e_real(rng.gen::<f64>()))).collect(),
            CoeffFamily::Twist { beta_re, beta_im } => {
                let beta = c(beta_re, beta_im);
                pts.iter().map(|&w| (w, e_real((beta * w.to_complex()).re))).collect()
            }
        };
        CoeffVector::new(n, entries)
    }

    pub fn entries(&self) -> &[(GaussianInt, Complex64)] {
        &self.entries
    }

    pub fn get(&self, w: GaussianInt) -> Complex64 {
        self.entries.iter().find(|(k, _)| *k == w).map(|e| e.1).unwrap_or(c(0.0, 0.0))
    }

    /// `‖b‖₂`, the Euclidean norm of the entries.
    pub fn norm2(&self) -> f64 {
        self.entries.iter().map(|(_, b)| b.norm_sqr()).sum::<f64>().sqrt()
    }

    fn support(&self) -> Vec<(GaussianInt, Complex64)> {
        self.entries.iter().copied().filter(|(_, b)| *b != c(0.0, 0.0)).collect()
    }
}

// ---------------------------------------------------------------------------
// Kloosterman matrices and the sums U

/// `[S_{a,b}(ω_i, ω'_j; C√(v1 v2))]_{ij}` assembled from the admissible pairs
/// `(A, D)` as `Σ_k e(Re(ω_i A_k / (v1 C))) · e(Re(ω'_j D_k / (v2 C)))`.
pub fn kloosterman_matrix(f1: &CuspFrame, f2: &CuspFrame, rows: &[GaussianInt], cols: &[GaussianInt], big_c: GaussianInt) -> Result<Vec<Vec<Complex64>>> {
    let pairs = admissible_pairs(f1, f2, big_c)?;
    let (v1, v2) = (f1.v(), f2.v());
    let den = v1 * v2 * big_c;
    let left: Vec<Vec<Complex64>> = rows.iter().map(|&w| pairs.iter().map(|&(a, _)| e_re_ratio(w * a * v2, den)).collect()).collect();
    let right: Vec<Vec<Complex64>> = cols.iter().map(|&w| pairs.iter().map(|&(_, d)| e_re_ratio(w * d * v1, den)).collect()).collect();
    Ok(left.iter().map(|l| right.iter().map(|r| l.iter().zip(r).map(|(x, y)| x * y).sum()).collect()).collect())
}

/// The modulus `c = C·v` of a same-cusp sum, checked for admissibility.
fn samecusp_modulus(frame: &CuspFrame, big_c: GaussianInt) -> Result<Modulus> {
    if big_c.is_zero() || !is_admissible(frame, frame, big_c)? {
        return domain(format!("{big_c} is not an allowed modulus for cusp {}", frame.cusp));
    }
    let cz = big_c.to_complex() * frame.sqrt_v() * frame.sqrt_v();
    Ok(Modulus { big_c, c: cz, norm: cz.norm_sqr() })
}

/// `|Q_m|` for `m = 0, ±1, …, ±M`, where
/// `Q_m = Σ b̄(ω1) b(ω2) (ω1ω2/|ω1ω2|)^m S(ω1, ω2; c) e(ψ√|ω1ω2|/|c|)`;
/// entry `k` holds `(|Q_k|, |Q_{−k}|)`.
fn twisted_forms(support: &[(GaussianInt, Complex64)], s: &[Vec<Complex64>], psi: f64, c_abs: f64, m_max: u32) -> Vec<(f64, f64)> {
    let n = support.len();
    let dirs: Vec<Complex64> = support.iter().map(|(w, _)| w.to_complex() / w.abs()).collect();
    let mut weight = vec![vec![c(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in 0..n {
            let r = (support[i].0.abs() * support[j].0.abs()).sqrt();
            weight[i][j] = s[i][j] * e_real(psi * r / c_abs);
        }
    }
    let mut out = Vec::with_capacity(m_max as usize + 1);
    let mut left: Vec<Complex64> = support.iter().map(|(_, b)| b.conj()).collect();
    let mut right: Vec<Complex64> = support.iter().map(|(_, b)| *b).collect();
    let mut left_neg = left.clone();
    let mut right_neg = right.clone();
    for m in 0..=m_max {
        let form = |l: &[Complex64], r: &[Complex64]| {
            let mut acc = CompensatedSum::default();
            for i in 0..n {
                let row: Complex64 = weight[i].iter().zip(r).map(|(w, x)| w * x).sum();
                acc.add(l[i] * row);
            }
            acc.value().norm()
        };
        let pos = form(&left, &right);
        let neg = if m == 0 { pos } else { form(&left_neg, &right_neg) };
        out.push((pos, neg));
        for i in 0..n {
            left[i] *= dirs[i];
            right[i] *= dirs[i];
            left_neg[i] *= dirs[i].conj();
            right_neg[i] *= dirs[i].conj();
        }
    }
    out
}

fn total_up_to(forms: &[(f64, f64)], m: u32) -> f64 {
    forms[0].0 + forms[1..=m as usize].iter().map(|(p, q)| p + q).sum::<f64>()
}

/// `U_a(ψ, c; M; N, b) = Σ_{|m| ≤ M} |Σ_{ω1,ω2} b̄(ω1) b(ω2) (ω1ω2/|ω1ω2|)^m S_{a,a}(ω1, ω2; c) e(ψ√|ω1ω2|/|c|)|`
/// with `c = C·v`.
pub fn u_sum(frame: &CuspFrame, psi: f64, big_c: GaussianInt, m_max: u32, b: &CoeffVector) -> Result<f64> {
    let modulus = samecusp_modulus(frame, big_c)?;
    let support = b.support();
    if support.is_empty() {
        return Ok(0.0);
    }
    let freqs: Vec<GaussianInt> = support.iter().map(|e| e.0).collect();
    let s = kloosterman_matrix(frame, frame, &freqs, &freqs, big_c)?;
    let forms = twisted_forms(&support, &s, psi, modulus.c.norm(), m_max);
    Ok(total_up_to(&forms, m_max))
}

// ---------------------------------------------------------------------------
// Bounds for U

/// `τ(c)^{3/2}·|c|·(M+1)·N·‖b‖²` with `τ` as given.
pub fn weil_envelope(tau: f64, c_abs: f64, m: u32, n: f64, b_norm2: f64) -> f64 {
    tau.powf(1.5) * c_abs * (m as f64 + 1.0) * n * b_norm2 * b_norm2
}

/// `(1+|ψ|)^{1/2}·(|c|(M+1) + N^{1/2})·(|c| + N^{1/2})·‖b‖²`.
pub fn mean_value_envelope(psi: f64, c_abs: f64, m: u32, n: f64, b_norm2: f64) -> f64 {
    (1.0 + psi.abs()).sqrt() * (c_abs * (m as f64 + 1.0) + n.sqrt()) * (c_abs + n.sqrt()) * b_norm2 * b_norm2
}

/// `(|ψ|^{−1/2} + 1)·(|c|^{1/2}N^{3/4} + |c|^{3/2}·M·N^{1/4})·N^ε·‖b‖²`, for `ψ ≠ 0`.
pub fn short_modulus_envelope(psi: f64, c_abs: f64, m: u32, n: f64, eps: f64, b_norm2: f64) -> f64 {
    (1.0 / psi.abs().sqrt() + 1.0) * (c_abs.sqrt() * n.powf(0.75) + c_abs.powf(1.5) * m as f64 * n.powf(0.25)) * n.powf(eps) * b_norm2 * b_norm2
}

/// Whether `(c, ψ)` lies in the range `0 < |c|² ≤ A1·N^{1−ε}`, `0 < |ψ| ≤ A2` of the short-modulus bound.
pub fn short_modulus_applies(c_norm: f64, psi: f64, n: f64, grid: &LargeSieveGrid) -> bool {
    c_norm > 0.0 && c_norm <= grid.a1 * n.powf(1.0 - grid.eps) && psi != 0.0 && psi.abs() <= grid.a2
}

/// Grid of the sweep over the three bounds for `U`.
#[derive(Clone, Debug, Serialize)]
pub struct LargeSieveGrid {
    pub levels: Vec<GaussianInt>,
    pub n_values: Vec<f64>,
    /// For each target `t`, the first allowed modulus with `|c|² ≥ t` is used.
    pub modulus_targets: Vec<f64>,
    pub c_norm_max: f64,
    pub m_values: Vec<u32>,
    pub psi_values: Vec<f64>,
    pub families: Vec<CoeffFamily>,
    pub seed: u64,
    /// Constants of the short-modulus range.
    pub a1: f64,
    pub a2: f64,
    pub eps: f64,
}

impl LargeSieveGrid {
    /// The grid `N ≤ 200`, `|c|² ≤ 400`, `M ≤ 20` over every cusp class of
    /// `q0 ∈ {1, 1+i, 2}` with the ones, spike and random-phase families.
    pub fn full() -> Self {
        LargeSieveGrid {
            levels: vec![gi(1, 0), gi(1, 1), gi(2, 0)],
            n_values: vec![25.0, 50.0, 100.0, 200.0],
            modulus_targets: vec![1.0, 4.0, 16.0, 50.0, 100.0, 200.0, 400.0],
            c_norm_max: 400.0,
            m_values: vec![0, 2, 8, 20],
            psi_values: vec![0.0, 0.5, 2.0],
            families: vec![CoeffFamily::Ones, CoeffFamily::Spike, CoeffFamily::RandomPhase],
            seed: 20,
            a1: 1.0,
            a2: 2.0,
            eps: 0.1,
        }
    }

    /// A reduced grid for quick checks.
    pub fn fast() -> Self {
        LargeSieveGrid {
            levels: vec![gi(1, 0), gi(1, 1)],
            n_values: vec![10.0, 25.0, 50.0],
            modulus_targets: vec![1.0, 8.0, 40.0],
            c_norm_max: 40.0,
            m_values: vec![0, 3],
            psi_values: vec![0.0, 1.0],
            ..LargeSieveGrid::full()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_values.iter().any(|&n| !(1.0..=200.0).contains(&n))
            || !(self.c_norm_max >= 1.0 && self.c_norm_max <= 400.0)
            || self.m_values.iter().any(|&m| m > 20)
        {
            return domain("sweep grid must satisfy N ≤ 200, |c|² ≤ 400, M ≤ 20");
        }
        if !(self.a1 > 0.0 && self.a2 > 0.0 && self.eps > 0.0 && self.eps < 1.0) {
            return domain("sweep grid: A1, A2 > 0 and 0 < ε < 1 required");
        }
        Ok(())
    }
}

/// Reports of the sweep over the bounds for `U`.
#[derive(Clone, Debug, Serialize)]
pub struct LargeSieveReport {
    /// Weil-type bound with `τ` counting ideal divisors.
    pub weil_ideal: SweepReport,
    /// Weil-type bound with `τ` counting divisors including associates.
    pub weil_assoc: SweepReport,
    pub mean_value: SweepReport,
    /// Short-modulus bound; only rows in its range of validity.
    pub short_modulus: SweepReport,
}

impl LargeSieveReport {
    pub fn reports(&self) -> [&SweepReport; 4] {
        [&self.weil_ideal, &self.weil_assoc, &self.mean_value, &self.short_modulus]
    }

    pub fn all_finite(&self) -> bool {
        self.reports().iter().all(|r| r.all_finite())
    }

    pub fn any_blow_up(&self) -> bool {
        self.reports().iter().any(|r| r.blow_up)
    }
}

/// Moduli of a frame selected by the grid targets, without repetition.
fn selected_moduli(frame: &CuspFrame, grid: &LargeSieveGrid) -> Result<Vec<Modulus>> {
    let all = allowed_moduli(frame, frame, grid.c_norm_max.sqrt())?;
    let mut out: Vec<Modulus> = Vec::new();
    for &t in &grid.modulus_targets {
        if let Some(m) = all.iter().find(|m| m.norm >= t * (1.0 - 1e-12)) {
            if !out.iter().any(|o| o.big_c == m.big_c) {
                out.push(*m);
            }
        }
    }
    Ok(out)
}

/// Evaluates `U` and its three bounds on every grid point.
pub fn large_sieve_sweep(grid: &LargeSieveGrid) -> Result<LargeSieveReport> {
    grid.validate()?;
    let mut weil_ideal = Vec::new();
    let mut weil_assoc = Vec::new();
    let mut mean = Vec::new();
    let mut short = Vec::new();
    let m_top = grid.m_values.iter().copied().max().unwrap_or(0);
    for &q0 in &grid.levels {
        for frame in class_representatives(q0)? {
            for modulus in selected_moduli(&frame, grid)? {
                let cz = modulus.big_c * frame.v();
                let st = multiplicative_stats(cz)?;
                let c_abs = modulus.c.norm();
                for &n in &grid.n_values {
                    let freqs = annulus(n);
                    let s_full = kloosterman_matrix(&frame, &frame, &freqs, &freqs, modulus.big_c)?;
                    for (fi, &family) in grid.families.iter().enumerate() {
                        let b = CoeffVector::from_family(n, family, grid.seed.wrapping_add(fi as u64))?;
                        let support = b.support();
                        let idx: Vec<usize> = support.iter().map(|(w, _)| freqs.iter().position(|f| f == w).unwrap()).collect();
                        let s: Vec<Vec<Complex64>> = idx.iter().map(|&i| idx.iter().map(|&j| s_full[i][j]).collect()).collect();
                        let bn = b.norm2();
                        for &psi in &grid.psi_values {
                            let forms = twisted_forms(&support, &s, psi, c_abs, m_top);
                            for &m in &grid.m_values {
                                let u = total_up_to(&forms, m);
                                let params = || -> Vec<(&str, ParamValue)> {
                                    vec![
                                        ("q0", q0.to_string().into()),
                                        ("cusp", frame.cusp.to_string().into()),
                                        ("c", cz.to_string().into()),
                                        ("N", n.into()),
                                        ("M", (m as i64).into()),
                                        ("psi", psi.into()),
                                        ("family", family.name().into()),
                                    ]
                                };
                                let env_i = weil_envelope(st.tau_ideal as f64, c_abs, m, n, bn);
                                let env_a = weil_envelope(st.tau_assoc as f64, c_abs, m, n, bn);
                                weil_ideal.push(SweepRow::new(params(), u, env_i));
                                weil_assoc.push(SweepRow::new(params(), u, env_a));
                                mean.push(SweepRow::new(params(), u, mean_value_envelope(psi, c_abs, m, n, bn)));
                                if short_modulus_applies(modulus.norm, psi, n, grid) {
                                    let env = short_modulus_envelope(psi, c_abs, m, n, grid.eps, bn);
                                    short.push(SweepRow::new(params(), u, env));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(LargeSieveReport {
        weil_ideal: SweepReport::new("weil_ideal", weil_ideal).with_blow_up_check("N"),
        weil_assoc: SweepReport::new("weil_assoc", weil_assoc).with_blow_up_check("N"),
        mean_value: SweepReport::new("mean_value", mean).with_blow_up_check("N"),
        short_modulus: SweepReport::new("short_modulus", short).with_blow_up_check("N"),
    })
}

// ---------------------------------------------------------------------------
// The mean value E_c(N; M, T)

/// Phase function with `f'(x) = α x^β`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerPhase {
    pub alpha: f64,
    pub beta: f64,
}

impl PowerPhase {
    pub fn eval(&self, x: f64) -> f64 {
        if (self.beta + 1.0).abs() < 1e-12 {
            self.alpha * x.ln()
        } else {
            self.alpha * x.powf(self.beta + 1.0) / (self.beta + 1.0)
        }
    }
}

/// `E_c(N; M, T) = Σ_{δ mod c} Σ_{|m| ≤ M} ∫_{−T}^{T} |s(δ, m, t)|² dt` with
/// `s(δ, m, t) = Σ_ω a(ω)(ω/|ω|)^m e(Re(δω/c) + t f(|ω|))`.
///
/// The `t`-integral uses Gauss–Legendre panels no wider than one period of the
/// fastest frequency `max f(|ω|) − min f(|ω|)` of `|s|²`.
pub fn e_sum(modulus: GaussianInt, a: &CoeffVector, m_max: u32, t_max: f64, phase: PowerPhase) -> Result<f64> {
    if modulus.is_zero() {
        return domain("mean value: modulus must be nonzero");
    }
    if phase.alpha == 0.0 || !phase.alpha.is_finite() || !phase.beta.is_finite() {
        return domain("mean value: α must be nonzero and finite");
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return domain("mean value: T must be positive");
    }
    let support = a.support();
    if support.is_empty() {
        return Ok(0.0);
    }
    let fvals: Vec<f64> = support.iter().map(|(w, _)| phase.eval(w.abs())).collect();
    let spread = fvals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - fvals.iter().cloned().fold(f64::INFINITY, f64::min);
    let panels = (2.0 * t_max * spread).ceil() as usize + 1;
    let rule = GaussRule::new(20);
    let h = 2.0 * t_max / panels as f64;
    let mut nodes = Vec::with_capacity(panels * rule.nodes.len());
    for k in 0..panels {
        let mid = -t_max + (k as f64 + 0.5) * h;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            nodes.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    // e(t f(|ω|)) at every node, shared by all δ and m
    let time_phase: Vec<Vec<Complex64>> = nodes.iter().map(|&(t, _)| fvals.iter().map(|&f| e_real(t * f)).collect()).collect();
    let dirs: Vec<Complex64> = support.iter().map(|(w, _)| w.to_complex() / w.abs()).collect();
    let mut total = 0.0;
    for delta in residues(modulus, false)? {
        let base: Vec<Complex64> = support.iter().map(|&(w, b)| b * e_re_ratio(delta * w, modulus)).collect();
        for m in -(m_max as i64)..=(m_max as i64) {
            let coef: Vec<Complex64> =
                base.iter().zip(&dirs).map(|(b, d)| if m >= 0 { b * d.powi(m as i32) } else { b * d.conj().powi((-m) as i32) }).collect();
            for ((_, w), tp) in nodes.iter().zip(&time_phase) {
                let s: Complex64 = coef.iter().zip(tp).map(|(x, y)| x * y).sum();
                total += w * s.norm_sqr();
            }
        }
    }
    Ok(total)
}

/// `(|c|(M+1) + N^{1/2})·(|c|T + |α|^{−1}N^{−β/2})·‖a‖²`.
pub fn e_sum_envelope(modulus: GaussianInt, n: f64, m: u32, t_max: f64, phase: PowerPhase, a_norm2: f64) -> f64 {
    let ca = modulus.abs();
    (ca * (m as f64 + 1.0) + n.sqrt()) * (ca * t_max + n.powf(-phase.beta / 2.0) / phase.alpha.abs()) * a_norm2 * a_norm2
}

/// Constant for the mean value against [`e_sum_envelope`]. Measured over moduli
/// `1, 1+i, 2+i, 3, 3+2i`, `N ≤ 100`, `M ≤ 6`, `0.1 ≤ T ≤ 6` and both sweep phases;
/// the largest observed ratio was 3.83.
pub const RECORDED_MEAN_VALUE_CONSTANT: f64 = 5.0;

/// The mean value against its envelope over moduli, `N`, `M`, `T` and two phases.
pub fn e_sum_sweep(moduli: &[GaussianInt], n_values: &[f64], m_values: &[u32], t_values: &[f64], seed: u64) -> Result<SweepReport> {
    let phases = [PowerPhase { alpha: 1.0, beta: -0.5 }, PowerPhase { alpha: 0.25, beta: 1.0 }];
    let mut rows = Vec::new();
    for &q in moduli {
        for &n in n_values {
            for (fi, family) in [CoeffFamily::Ones, CoeffFamily::RandomPhase].iter().enumerate() {
                let a = CoeffVector::from_family(n, *family, seed.wrapping_add(fi as u64))?;
                for &m in m_values {
                    for &t in t_values {
                        for ph in &phases {
                            let e = e_sum(q, &a, m, t, *ph)?;
                            let env = e_sum_envelope(q, n, m, t, *ph, a.norm2());
                            rows.push(SweepRow::new(
                                vec![
                                    ("c", q.to_string().into()),
                                    ("N", n.into()),
                                    ("M", (m as i64).into()),
                                    ("T", t.into()),
                                    ("alpha", ph.alpha.into()),
                                    ("beta", ph.beta.into()),
                                    ("family", family.name().into()),
                                ],
                                e,
                                env,
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(SweepReport::new("mean_value", rows).with_blow_up_check("N"))
}

// ---------------------------------------------------------------------------
// Dirichlet series of Kloosterman sums

/// Upper bound for the Dedekind zeta function `ζ_{ℚ(i)}(s) = (1/4)Σ_{α≠0}|α|^{−2s}`, `s > 1`.
pub fn gaussian_zeta_upper(s: f64) -> Result<f64> {
    let x = 40_000.0;
    let (partial, _) = hecke_zeta_partial(c(s, 0.0), 0, x)?;
    Ok(partial.re + zeta_tail_bound(s, x))
}

/// Bound for `Σ_c |S_{a,b}(ω, ω'; c)| / |c|^{4σ}` over all moduli, `σ > 3/4`:
/// `2^{7/2}·|(ω, ω')|·|m_a m_b|^{2−2σ}·Π_{ϖ | q0}(1 − |ϖ|^{2−4σ})^{−2}·ζ_{ℚ(i)}(2σ − 1/2)²`.
///
/// Follows from `|S| ≤ 2^{3/2}τ(C)|(ω, ω', C)·C·(C, q0^∞)|·|m_a m_b|²` with
/// `c = √(ε m_a m_b)·C`, `τ` counting ideal divisors, and the Euler product of
/// `Σ_C τ(C)|(C, q0^∞)|·|C|^{1−4σ}` over all nonzero `C`.
pub fn dirichlet_bound(f1: &CuspFrame, f2: &CuspFrame, w1: GaussianInt, w2: GaussianInt, sigma: f64) -> Result<f64> {
    if !(sigma > 0.75) {
        return domain("Kloosterman Dirichlet series needs σ > 3/4");
    }
    if w1.is_zero() && w2.is_zero() {
        return domain("Kloosterman Dirichlet series needs a nonzero frequency");
    }
    let g = gcd(w1, w2).abs();
    let widths = (f1.width_gen * f2.width_gen).abs();
    let mut euler = 1.0;
    for p in factorize(f1.q0)?.primes() {
        euler /= (1.0 - (p.norm() as f64).powf(1.0 - 2.0 * sigma)).powi(2);
    }
    let z = gaussian_zeta_upper(2.0 * sigma - 0.5)?;
    Ok(2f64.powf(3.5) * g * widths.powf(2.0 - 2.0 * sigma) * euler * z * z)
}

/// The bound `2^{−1/2}|ω|·|m_a m_b|^{2−2σ}·(Σ_{α | q0} 1/|α|)²·ζ_{ℚ(i)}(2σ − 1/2)²`,
/// with `α` over ideal divisors of `q0`.
pub fn dirichlet_bound_compact(f1: &CuspFrame, f2: &CuspFrame, w1: GaussianInt, sigma: f64) -> Result<f64> {
    if !(sigma > 0.75) {
        return domain("Kloosterman Dirichlet series needs σ > 3/4");
    }
    let widths = (f1.width_gen * f2.width_gen).abs();
    let divisor_sum: f64 = crate::gaussint::divisors(f1.q0)?.into_iter().filter(|d| *d == d.canonical()).map(|d| 1.0 / d.abs()).sum();
    let z = gaussian_zeta_upper(2.0 * sigma - 0.5)?;
    Ok(0.5f64.sqrt() * w1.abs() * widths.powf(2.0 - 2.0 * sigma) * divisor_sum * divisor_sum * z * z)
}

/// Bound for `Σ_{|c| > X} |S| / |c|^{4σ}`: the minimum over `σ* ∈ (3/4, σ)` of
/// `X^{−4(σ−σ*)}` times [`dirichlet_bound`] at `σ*`.
pub fn dirichlet_tail(f1: &CuspFrame, f2: &CuspFrame, w1: GaussianInt, w2: GaussianInt, sigma: f64, x: f64) -> Result<f64> {
    if !(sigma > 0.75) {
        return domain("Kloosterman Dirichlet series needs σ > 3/4");
    }
    let mut best = f64::INFINITY;
    for k in 1..40 {
        let s_star = 0.75 + (sigma - 0.75) * k as f64 / 40.0;
        let b = dirichlet_bound(f1, f2, w1, w2, s_star)? * x.powf(-4.0 * (sigma - s_star));
        best = best.min(b);
    }
    Ok(best)
}

/// Partial sums of the Linnik–Selberg series and its `𝒥*`-weighted companion.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LinnikSelberg {
    /// `Σ_{|c| ≤ X} S(ω, ω'; c)/|c|^{4s}`.
    #[serde(serialize_with = "ser_complex")]
    pub z_partial: Complex64,
    /// `[Γ_a : Γ'_a]^{−1} Σ_{|c| ≤ X} 𝒥*_{2s−1,0}(2π√(ωω')/c) S(ω, ω'; c)/|c|^{4s}`.
    #[serde(serialize_with = "ser_complex")]
    pub zeta_partial: Complex64,
    /// Bound for the omitted terms of the first series.
    pub tail: f64,
    /// Bound for the omitted terms of the second series.
    pub zeta_tail: f64,
    pub moduli: usize,
}

/// `𝒥*_{ν,0}(z) = J*_ν(z)·J*_ν(z̄)`.
fn j_star_product(nu: Complex64, z: Complex64) -> Result<Complex64> {
    Ok(bessel_j_star(nu, z)? * bessel_j_star(nu, z.conj())?)
}

pub fn linnik_selberg_partial(f1: &CuspFrame, f2: &CuspFrame, w1: GaussianInt, w2: GaussianInt, s: Complex64, x: f64) -> Result<LinnikSelberg> {
    if !(s.re > 0.75) {
        return domain("Linnik–Selberg series: Re s must exceed 3/4");
    }
    if !(x >= 1.0 && x.is_finite()) {
        return domain("Linnik–Selberg series: X must be at least 1");
    }
    if w1.is_zero() {
        return domain("Linnik–Selberg series: ω must be nonzero");
    }
    let root = (w1.to_complex() * w2.to_complex()).sqrt() * (2.0 * PI);
    let nu = 2.0 * s - 1.0;
    let moduli = allowed_moduli(f1, f2, x)?;
    let mut z_acc = CompensatedSum::default();
    let mut zeta_acc = CompensatedSum::default();
    for m in &moduli {
        let arg = root / m.c;
        if arg.norm() > MAX_STAR_ARG {
            return domain(format!("Linnik–Selberg series: |2π√(ωω')/c| = {} exceeds {MAX_STAR_ARG}", arg.norm()));
        }
        let sv = kloosterman_general(f1, f2, w1, w2, m.big_c)?.value;
        let term = sv * (-2.0 * s * m.norm.ln()).exp();
        z_acc.add(term);
        zeta_acc.add(term * j_star_product(nu, arg)?);
    }
    let index = f1.stab_index as f64;
    let tail = dirichlet_tail(f1, f2, w1, w2, s.re, x)?;
    // |J*_ν(z)| ≤ |1/Γ(ν+1)|·e^{|z|²/4} for Re ν ≥ 0
    let z_x = root.norm() / x;
    let zeta_tail = rgamma(nu + 1.0).norm_sqr() * (z_x * z_x / 2.0).exp() * tail / index;
    Ok(LinnikSelberg { z_partial: z_acc.value(), zeta_partial: zeta_acc.value() / index, tail, zeta_tail, moduli: moduli.len() })
}

// ---------------------------------------------------------------------------
// The geometric side of the sum formula

/// Bound `C_B` with `|(Bh)(u)| ≤ C_B|u|^{2σ}` measured for `0 < |u| ≤ u_max`
/// on 19 radii `u_max·2^{−j/3}` and 12 arguments in `[0, π)` (the transform is even).
pub fn small_argument_constant(params: &TestParams, u_max: f64) -> Result<f64> {
    let cfg = BTransformConfig::new(BMethod::Bessel1d);
    let mut best = 0.0f64;
    for j in 0..19 {
        let r = u_max * 2f64.powf(-(j as f64) / 3.0);
        for k in 0..12 {
            let u = Complex64::from_polar(r, PI * k as f64 / 12.0);
            let v = b_transform(params, u, &cfg)?;
            best = best.max((v.value.norm() + v.err) / r.powf(2.0 * params.sigma));
        }
    }
    Ok(best)
}

/// Terms of the geometric side of the sum formula for one pair of frequencies.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GeometricSide {
    /// Diagonal coset sum times the spectral integral of the test function.
    #[serde(serialize_with = "ser_complex")]
    pub delta_part: Complex64,
    /// `Σ_{|c| ≤ X} S(ω1, ω2; c)|c|^{−2}(Bh)(2π√(ω1ω2)/c)`.
    #[serde(serialize_with = "ser_complex")]
    pub kloosterman_part: Complex64,
    /// Accumulated quadrature error of the transform values.
    pub kloosterman_err: f64,
    /// Bound for the terms with `|c| > X`.
    pub tail_envelope: f64,
    /// Measured small-argument constant of the transform.
    pub c_b: f64,
    pub moduli: usize,
}

/// The Kloosterman part `Σ_{|c| ≤ X} S(ω1, ω2; c)|c|^{−2}(Bh)(2π√(ω1ω2)/c)`
/// with its accumulated quadrature error and the number of moduli.
pub fn kloosterman_part(f1: &CuspFrame, f2: &CuspFrame, w1: GaussianInt, w2: GaussianInt, params: &TestParams, x: f64) -> Result<(Complex64, f64, usize)> {
    if w1.is_zero() || w2.is_zero() {
        return domain("geometric side: frequencies must be nonzero");
    }
    let root = (w1.to_complex() * w2.to_complex()).sqrt() * (2.0 * PI);
    let cfg = BTransformConfig::new(BMethod::Bessel1d);
    let moduli = allowed_moduli(f1, f2, x)?;
    if moduli.is_empty() {
        return domain(format!("geometric side: no allowed modulus with |c| ≤ {x}"));
    }
    // (Bh)(−u) = (Bh)(u): the transform is shared by c and −c
    let mut cache: Vec<(Complex64, Complex64, f64)> = Vec::new();
    let mut acc = CompensatedSum::default();
    let mut err = 0.0;
    for m in &moduli {
        let u = root / m.c;
        let found = cache.iter().find(|(v, _, _)| (*v - u).norm() < 1e-13 * u.norm() || (*v + u).norm() < 1e-13 * u.norm());
        let (bh, be) = match found {
            Some(&(_, b, e)) => (b, e),
            None => {
                let v = b_transform(params, u, &cfg)?;
                cache.push((u, v.value, v.err));
                (v.value, v.err)
            }
        };
        let sv = kloosterman_general(f1, f2, w1, w2, m.big_c)?.value;
        acc.add(sv * bh / m.norm);
        err += sv.norm() * be / m.norm;
    }
    Ok((acc.value(), err, moduli.len()))
}

pub fn geometric_side(f1: &CuspFrame, f2: &CuspFrame, w1: GaussianInt, w2: GaussianInt, params: &TestParams, x: f64) -> Result<GeometricSide> {
    let (kp, kerr, count) = kloosterman_part(f1, f2, w1, w2, params, x)?;
    let delta = delta_term(f1, f2, w1, w2)?.value;
    let diag = diagonal_term(params).exact_numeric;
    let scale = 2.0 * PI * (w1.abs() * w2.abs()).sqrt();
    let c_b = small_argument_constant(params, scale / x)?;
    // |S|/|c|²·C_B|u|^{2σ} = C_B·scale^{2σ}·|S|/|c|^{4s} with 4s = 2 + 2σ
    let s = (1.0 + params.sigma) / 2.0;
    let tail = c_b * scale.powf(2.0 * params.sigma) * dirichlet_tail(f1, f2, w1, w2, s, x)?;
    Ok(GeometricSide { delta_part: delta * diag, kloosterman_part: kp, kloosterman_err: kerr, tail_envelope: tail, c_b, moduli: count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cusps::Cusp;
    use crate::kloosterman::kloosterman_samecusp_frame;
    use proptest::prelude::*;

    fn frames(q0: GaussianInt) -> Vec<CuspFrame> {
        class_representatives(q0).unwrap()
    }

    #[test]
    fn annulus_and_coefficients() {
        let pts = annulus(4.0);
        // 2 < |ω|² ≤ 4: norms 4 only (±2, ±2i)
        assert_eq!(pts.len(), 4);
        assert!(pts.iter().all(|w| w.norm() == 4));
        assert_eq!(annulus(10.0).len(), 4 + 8 + 4);
        let b = CoeffVector::from_family(50.0, CoeffFamily::RandomPhase, 7).unwrap();
        assert!((b.norm2() - (annulus(50.0).len() as f64).sqrt()).abs() < 1e-12);
        assert_eq!(b, CoeffVector::from_family(50.0, CoeffFamily::RandomPhase, 7).unwrap());
        assert!(CoeffVector::new(4.0, [(gi(1, 0), c(1.0, 0.0))]).is_err());
        assert!(CoeffVector::new(4.0, [(gi(2, 0), c(1.0, 0.0)), (gi(2, 0), c(2.0, 0.0))]).is_err());
        let s = CoeffVector::from_family(10.0, CoeffFamily::Spike, 0).unwrap();
        assert_eq!(s.entries().len(), 1);
        assert_eq!("random".parse::<CoeffFamily>().unwrap(), CoeffFamily::RandomPhase);
    }

    #[test]
    fn matrix_matches_the_pointwise_sums() {
        for q0 in [gi(1, 0), gi(1, 1), gi(2, 0)] {
            let fs = frames(q0);
            for f1 in &fs {
                for f2 in &fs {
                    let freqs = [gi(1, 0), gi(0, 1), gi(2, -1), gi(0, 0)];
                    for m in allowed_moduli(f1, f2, 3.0).unwrap().iter().take(4) {
                        let mat = kloosterman_matrix(f1, f2, &freqs, &freqs, m.big_c).unwrap();
                        for (i, &a) in freqs.iter().enumerate() {
                            for (j, &b) in freqs.iter().enumerate() {
                                let s = kloosterman_general(f1, f2, a, b, m.big_c).unwrap().value;
                                assert!((mat[i][j] - s).norm() < 1e-9);
                            }
                        }
                    }
                }
            }
        }
    }

    /// `U` assembled pair by pair from the same-cusp route.
    fn u_sum_pointwise(frame: &CuspFrame, psi: f64, big_c: GaussianInt, m_max: u32, b: &CoeffVector) -> f64 {
        let cp = big_c * frame.v();
        let c_abs = cp.abs();
        let mut total = 0.0;
        for m in -(m_max as i32)..=(m_max as i32) {
            let mut acc = c(0.0, 0.0);
            for &(w1, b1) in b.entries() {
                for &(w2, b2) in b.entries() {
                    let dir = (w1.to_complex() * w2.to_complex()) / (w1.abs() * w2.abs());
                    let s = kloosterman_samecusp_frame(frame, w1, w2, cp).unwrap().value;
                    let ph = e_real(psi * (w1.abs() * w2.abs()).sqrt() / c_abs);
                    acc += b1.conj() * b2 * dir.powi(m) * s * ph;
                }
            }
            total += acc.norm();
        }
        total
    }

    #[test]
    fn u_sum_examples() {
        let f = &frames(gi(1, 1))[0];
        let zero = CoeffVector::zero(4.0).unwrap();
        assert_eq!(u_sum(f, 0.3, gi(1, 0), 3, &zero).unwrap(), 0.0);
        let w = annulus(4.0)[0];
        let single = CoeffVector::new(4.0, [(w, c(1.0, 0.0))]).unwrap();
        let moduli = allowed_moduli(f, f, 4.0).unwrap();
        for m in &moduli {
            let u = u_sum(f, 1.7, m.big_c, 0, &single).unwrap();
            let s = kloosterman_general(f, f, w, w, m.big_c).unwrap().value.norm();
            assert!((u - s).abs() < 1e-9);
        }
        for f in &frames(gi(1, 1)) {
            let b = CoeffVector::from_family(4.0, CoeffFamily::RandomPhase, 3).unwrap();
            for m in allowed_moduli(f, f, 4.0).unwrap().iter().take(3) {
                let fast = u_sum(f, 0.8, m.big_c, 2, &b).unwrap();
                let slow = u_sum_pointwise(f, 0.8, m.big_c, 2, &b);
                assert!((fast - slow).abs() < 1e-8, "{} {fast} {slow}", m.big_c);
            }
        }
        assert!(u_sum(f, 0.0, gi(0, 0), 0, &single).is_err());
    }

    #[test]
    fn u_sum_without_twists_is_a_quadratic_form() {
        for q0 in [gi(1, 0), gi(2, 0)] {
            for f in &frames(q0) {
                let b = CoeffVector::from_family(10.0, CoeffFamily::RandomPhase, 11).unwrap();
                for m in allowed_moduli(f, f, 5.0).unwrap().iter().take(3) {
                    let cp = m.big_c * f.v();
                    let mut q = c(0.0, 0.0);
                    for &(w1, b1) in b.entries() {
                        for &(w2, b2) in b.entries() {
                            q += b1.conj() * b2 * kloosterman_samecusp_frame(f, w1, w2, cp).unwrap().value;
                        }
                    }
                    let u = u_sum(f, 0.0, m.big_c, 0, &b).unwrap();
                    assert!((u - q.norm()).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn fast_large_sieve_grid_is_finite() {
        let r = large_sieve_sweep(&LargeSieveGrid::fast()).unwrap();
        assert!(r.all_finite());
        assert!(!r.short_modulus.rows.is_empty());
        assert!(r.short_modulus.rows.iter().all(|row| row.params["psi"] != ParamValue::Real(0.0)));
        for rep in r.reports() {
            assert!(rep.rows.iter().all(|row| row.envelope > 0.0));
        }
        let again = large_sieve_sweep(&LargeSieveGrid::fast()).unwrap();
        assert_eq!(serde_json_like(&r.mean_value), serde_json_like(&again.mean_value));
    }

    fn serde_json_like(r: &SweepReport) -> Vec<(f64, f64)> {
        r.rows.iter().map(|row| (row.lhs, row.envelope)).collect()
    }

    /// `E` with the `δ`-sum done by orthogonality and the `t`-integral in closed form.
    fn e_sum_closed_form(q: GaussianInt, a: &CoeffVector, m_max: u32, t: f64, ph: PowerPhase) -> f64 {
        let mut total = c(0.0, 0.0);
        for &(w1, a1) in a.entries() {
            for &(w2, a2) in a.entries() {
                if !q.divides(w1 - w2) {
                    continue;
                }
                let d = ph.eval(w1.abs()) - ph.eval(w2.abs());
                let integral = if d.abs() < 1e-15 { 2.0 * t } else { (2.0 * PI * t * d).sin() / (PI * d) };
                let dir = (w1.to_complex() / w1.abs()) * (w2.to_complex() / w2.abs()).conj();
                for m in -(m_max as i32)..=(m_max as i32) {
                    total += a1 * a2.conj() * dir.powi(m) * integral;
                }
            }
        }
        total.re * q.norm() as f64
    }

    #[test]
    fn e_sum_matches_its_closed_form() {
        let a = CoeffVector::from_family(20.0, CoeffFamily::RandomPhase, 5).unwrap();
        for q in [gi(1, 0), gi(1, 1), gi(2, 1), gi(3, 0)] {
            for ph in [PowerPhase { alpha: 1.0, beta: -0.5 }, PowerPhase { alpha: -2.0, beta: 1.0 }, PowerPhase { alpha: 0.7, beta: -1.0 }] {
                let e = e_sum(q, &a, 2, 1.5, ph).unwrap();
                let cf = e_sum_closed_form(q, &a, 2, 1.5, ph);
                assert!((e - cf).abs() <= 1e-9 * cf.abs().max(1.0), "{q} {ph:?} {e} {cf}");
                assert!(e >= 0.0);
            }
        }
        assert_eq!(e_sum(gi(2, 0), &CoeffVector::zero(20.0).unwrap(), 2, 1.0, PowerPhase { alpha: 1.0, beta: 0.0 }).unwrap(), 0.0);
        assert!(e_sum(gi(2, 0), &a, 2, 1.0, PowerPhase { alpha: 0.0, beta: 0.0 }).is_err());
    }

    #[test]
    fn e_sum_short_interval_limit() {
        let a = CoeffVector::from_family(10.0, CoeffFamily::Ones, 0).unwrap();
        let q = gi(1, 1);
        let ph = PowerPhase { alpha: 1.0, beta: -0.5 };
        let t = 1e-6;
        let mut at_zero = 0.0;
        for delta in residues(q, false).unwrap() {
            for m in -1i32..=1 {
                let s: Complex64 = a.entries().iter().map(|&(w, b)| b * (w.to_complex() / w.abs()).powi(m) * e_re_ratio(delta * w, q)).sum();
                at_zero += s.norm_sqr();
            }
        }
        let e = e_sum(q, &a, 1, t, ph).unwrap();
        assert!((e / (2.0 * t * at_zero) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn e_sum_sweep_stays_below_the_recorded_constant() {
        let r = e_sum_sweep(&[gi(1, 0), gi(1, 1), gi(2, 1)], &[10.0, 25.0, 50.0], &[1, 3], &[0.5, 2.0], 1).unwrap();
        assert!(r.all_finite());
        assert!(!r.blow_up);
        assert!(r.max_ratio <= RECORDED_MEAN_VALUE_CONSTANT, "{}", r.max_ratio);
    }

    #[test]
    fn dirichlet_bounds_dominate_partial_sums() {
        for q0 in [gi(1, 0), gi(1, 1), gi(2, 0)] {
            let fs = frames(q0);
            for f1 in &fs {
                for f2 in &fs {
                    for (w1, w2) in [(gi(1, 0), gi(1, 0)), (gi(1, 1), gi(0, 0)), (gi(2, 1), gi(-1, 3))] {
                        let sigma = 0.9;
                        let mut partial = 0.0;
                        for m in allowed_moduli(f1, f2, 12.0).unwrap() {
                            let s = kloosterman_general(f1, f2, w1, w2, m.big_c).unwrap().value.norm();
                            partial += s / m.norm.powf(2.0 * sigma);
                        }
                        let bound = dirichlet_bound(f1, f2, w1, w2, sigma).unwrap();
                        assert!(partial <= bound, "q0={q0} {} {} {partial} {bound}", f1.cusp, f2.cusp);
                    }
                }
            }
        }
        assert!(dirichlet_bound(&frames(gi(1, 0))[0], &frames(gi(1, 0))[0], gi(1, 0), gi(1, 0), 0.7).is_err());
    }

    #[test]
    fn linnik_selberg_examples() {
        let f = &frames(gi(1, 0))[0];
        // ω' = 0: the weight is 𝒥*_{2s−1,0}(0) = Γ(2s)^{−2} at every modulus
        let s = c(1.1, 0.3);
        let r = linnik_selberg_partial(f, f, gi(1, 0), gi(0, 0), s, 6.0).unwrap();
        let w = rgamma(2.0 * s).powi(2);
        assert!((r.zeta_partial - r.z_partial * w / f.stab_index as f64).norm() < 1e-12);
        // conjugation with negated frequencies
        let a = linnik_selberg_partial(f, f, gi(1, 1), gi(2, 0), s, 6.0).unwrap();
        let b = linnik_selberg_partial(f, f, gi(-1, -1), gi(-2, 0), s.conj(), 6.0).unwrap();
        assert!((a.zeta_partial - b.zeta_partial.conj()).norm() < 1e-10);
        assert!((a.z_partial - b.z_partial.conj()).norm() < 1e-10);
        assert!(linnik_selberg_partial(f, f, gi(1, 0), gi(1, 0), c(0.75, 0.0), 4.0).is_err());
    }

    #[test]
    fn linnik_selberg_partial_sums_settle_within_the_tail() {
        let f = &frames(gi(1, 0))[0];
        let s = c(1.0, 0.0);
        let mut prev: Option<LinnikSelberg> = None;
        for x in [4.0, 8.0, 16.0] {
            let r = linnik_selberg_partial(f, f, gi(1, 0), gi(1, 0), s, x).unwrap();
            if let Some(p) = prev {
                assert!((r.z_partial - p.z_partial).norm() <= p.tail);
                assert!((r.zeta_partial - p.zeta_partial).norm() <= p.zeta_tail);
                assert!(r.tail < p.tail);
            }
            prev = Some(r);
        }
    }

    #[test]
    fn geometric_side_delta_part_vanishes_for_inequivalent_cusps() {
        let fs = frames(gi(1, 1));
        assert!(!fs[0].equivalent_to(&fs[1]));
        let params = TestParams::new(1.0, 1.0, 0.75).unwrap();
        let g = geometric_side(&fs[0], &fs[1], gi(1, 0), gi(1, 0), &params, 3.0).unwrap();
        assert_eq!(g.delta_part, c(0.0, 0.0));
        assert!(g.tail_envelope.is_finite() && g.tail_envelope > 0.0);
        let inf = CuspFrame::new(Cusp::Infinity, gi(1, 0)).unwrap();
        assert!(geometric_side(&inf, &inf, gi(0, 0), gi(1, 0), &params, 3.0).is_err());
    }

    #[test]
    fn kloosterman_part_is_symmetric_under_swapping_cusps() {
        let params = TestParams::new(1.0, 1.0, 0.75).unwrap();
        let fs = frames(gi(2, 0));
        for f1 in &fs {
            for f2 in &fs {
                let (a, ea, _) = kloosterman_part(f1, f2, gi(1, 0), gi(1, 1), &params, 4.0).unwrap();
                let (b, eb, _) = kloosterman_part(f2, f1, gi(-1, -1), gi(-1, 0), &params, 4.0).unwrap();
                assert!((a - b).norm() <= 1e-9 + ea + eb, "{} {} {a} {b}", f1.cusp, f2.cusp);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn u_sum_is_nonnegative_and_monotone_in_m(re in -3i64..=3, im in -3i64..=3, psi in -2.0f64..2.0, seed in 0u64..100) {
            let f = &frames(gi(1, 0))[0];
            prop_assume!(!(re == 0 && im == 0));
            let b = CoeffVector::from_family(8.0, CoeffFamily::RandomPhase, seed).unwrap();
            let u0 = u_sum(f, psi, gi(re, im), 0, &b).unwrap();
            let u1 = u_sum(f, psi, gi(re, im), 1, &b).unwrap();
            prop_assert!(u0 >= 0.0 && u1 >= u0 - 1e-12);
            // scaling b by a unit-modulus constant does not change U
            let rot = CoeffVector::new(8.0, b.entries().iter().map(|&(w, x)| (w, x * e_real(0.37)))).unwrap();
            prop_assert!((u_sum(f, psi, gi(re, im), 1, &rot).unwrap() - u1).abs() < 1e-9 * (1.0 + u1));
        }
    }
}
