//! Verification suites: module invariants at a fast or full budget.

use std::f64::consts::PI;

use gk::bessel::{graf_residual, laplacian_decay_check, poisson_check_2d, GaussianPolynomial};
use gk::btransform::{
    b_transform, diagonal_term, diagonal_term_direct, inversion_check, inversion_samples, BMethod, BTransformConfig, Bump, TestParams, INVERSION_P_MAX,
    INVERSION_T_MAX, RECORDED_C2,
};
use gk::cusps::{allowed_moduli, class_count_bruteforce, class_count_formula, class_representatives, CuspFrame};
use gk::gaussint::{factorize, gaussian_primes_up_to, hecke_zeta_partial, is_gaussian_prime, residues, xgcd, GaussianInt};
use gk::kloosterman::{
    bruteforce_census, delta_term, delta_term_bruteforce, gauss_sum, k_sum, k_sum_crt, kloosterman_factor, kloosterman_general, kloosterman_samecusp_frame,
    weil_estermann_sweep, DEFAULT_HEIGHTS,
};
use gk::sieve::{e_sum_sweep, kloosterman_part, large_sieve_sweep, linnik_selberg_partial, LargeSieveGrid, RECORDED_MEAN_VALUE_CONSTANT};
use gk::Result;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{Budget, Suite};
use crate::output::Status;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
    /// A documented deviation from a stated tolerance; not counted as a failure.
    KnownDeviation,
    /// Not run at this budget.
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub module: &'static str,
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub suite: &'static str,
    pub budget: &'static str,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn status(&self) -> Status {
        self.checks.iter().fold(Status::Ok, |acc, c| {
            acc.worst(match c.status {
                CheckStatus::Fail => Status::VerificationFailure,
                CheckStatus::Inconclusive => Status::Inconclusive,
                _ => Status::Ok,
            })
        })
    }
}

struct Ctx {
    budget: Budget,
    seed: u64,
}

impl Ctx {
    fn full(&self) -> bool {
        self.budget == Budget::Full
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

type Outcome = (CheckStatus, String);

fn verdict(ok: bool, detail: String) -> Outcome {
    (if ok { CheckStatus::Pass } else { CheckStatus::Fail }, detail)
}

struct Check {
    module: &'static str,
    name: &'static str,
    run: fn(&Ctx) -> Result<Outcome>,
}

fn g(re: i64, im: i64) -> GaussianInt {
    GaussianInt::new(re, im)
}

fn random_gaussian(rng: &mut ChaCha8Rng, r: i64) -> GaussianInt {
    g(rng.gen_range(-r..=r), rng.gen_range(-r..=r))
}

/// Canonical nonzero Gaussian integers with norm at most `max_norm`, by norm.
fn canonical_up_to(max_norm: i64) -> Vec<GaussianInt> {
    let r = (max_norm as f64).sqrt() as i64 + 1;
    let mut v: Vec<GaussianInt> =
        (-r..=r).flat_map(|a| (-r..=r).map(move |b| g(a, b))).filter(|z| !z.is_zero() && z.norm() <= max_norm && *z == z.canonical()).collect();
    v.sort_by_key(|z| (z.norm(), z.re, z.im));
    v
}

/// Gaussian integers with `|ω|² ≤ max_norm`, zero included.
fn small_frequencies(max_norm: i64) -> Vec<GaussianInt> {
    let r = (max_norm as f64).sqrt() as i64;
    let mut v: Vec<GaussianInt> = (-r..=r).flat_map(|a| (-r..=r).map(move |b| g(a, b))).filter(|z| z.norm() <= max_norm).collect();
    v.sort_by_key(|z| (z.norm(), z.re, z.im));
    v
}

// ---------------------------------------------------------------------------
// gaussint

fn factorization_round_trip(ctx: &Ctx) -> Result<Outcome> {
    let mut rng = ctx.rng(1);
    let cases = if ctx.full() { 3000 } else { 300 };
    let mut bad = 0;
    for _ in 0..cases {
        let n = random_gaussian(&mut rng, 200);
        if n.is_zero() {
            continue;
        }
        let f = factorize(n)?;
        if f.product() != n || !f.unit.is_unit() || f.primes().any(|p| !is_gaussian_prime(p) || p != p.canonical()) {
            bad += 1;
        }
    }
    Ok(verdict(bad == 0, format!("{cases} cases, {bad} mismatches")))
}

fn bezout_identity(ctx: &Ctx) -> Result<Outcome> {
    let mut rng = ctx.rng(2);
    let cases = if ctx.full() { 3000 } else { 300 };
    let mut bad = 0;
    for _ in 0..cases {
        let (a, b) = (random_gaussian(&mut rng, 1000), random_gaussian(&mut rng, 1000));
        if a.is_zero() && b.is_zero() {
            continue;
        }
        let (d, s, t) = xgcd(a, b)?;
        if a * s + b * t != d || !d.divides(a) || !d.divides(b) {
            bad += 1;
        }
    }
    Ok(verdict(bad == 0, format!("{cases} cases, {bad} mismatches")))
}

fn zeta_at_two(ctx: &Ctx) -> Result<Outcome> {
    // ζ(2)·β(2) with Catalan's constant
    let exact = PI * PI / 6.0 * 0.915_965_594_177_219_1;
    let x = if ctx.full() { 40_000.0 } else { 4_000.0 };
    let (v, tail) = hecke_zeta_partial(Complex64::new(2.0, 0.0), 0, x)?;
    let gap = exact - v.re;
    Ok(verdict(gap >= -1e-12 && gap <= tail + 1e-12, format!("partial sum to X = {x}: gap {gap:.3e}, tail bound {tail:.3e}")))
}

// ---------------------------------------------------------------------------
// cusps

fn class_count(ctx: &Ctx) -> Result<Outcome> {
    let max = if ctx.full() { 100 } else { 20 };
    let mut bad = Vec::new();
    let levels = canonical_up_to(max);
    for &q0 in &levels {
        let f = class_count_formula(q0)?;
        let b = class_count_bruteforce(q0)?;
        let r = class_representatives(q0)?.len();
        if f as usize != b || b != r {
            bad.push(format!("{q0}: formula {f}, search {b}, representatives {r}"));
        }
    }
    Ok(verdict(bad.is_empty(), format!("{} levels with |q0|² ≤ {max}; mismatches: {:?}", levels.len(), bad)))
}

// ---------------------------------------------------------------------------
// kloosterman

fn three_routes(ctx: &Ctx) -> Result<Outcome> {
    let (levels, c_max, w_max) = if ctx.full() { (vec![g(1, 0), g(1, 1), g(2, 0), g(3, 0)], 50, 8) } else { (vec![g(1, 0), g(1, 1)], 10, 2) };
    let freqs = small_frequencies(w_max);
    let mut compared = 0u64;
    let mut worst = 0.0f64;
    for q0 in levels {
        let frames = class_representatives(q0)?;
        for f1 in &frames {
            for f2 in &frames {
                let census = bruteforce_census(f1, f2, c_max, &DEFAULT_HEIGHTS)?;
                if !census.status.is_stabilized() {
                    return Ok((CheckStatus::Inconclusive, format!("enumeration did not stabilize for q0 = {q0}, {} → {}", f1.cusp, f2.cusp)));
                }
                for m in allowed_moduli(f1, f2, (c_max as f64).sqrt())? {
                    if m.big_c.norm() > c_max {
                        continue;
                    }
                    for &w1 in &freqs {
                        for &w2 in &freqs {
                            let gen = kloosterman_general(f1, f2, w1, w2, m.big_c)?.value;
                            let bf = census.sum(w1, w2, m.big_c).expect("stabilized").value;
                            worst = worst.max((gen - bf).norm());
                            if f1.same_normalized(f2) {
                                let s = kloosterman_samecusp_frame(f1, w1, w2, m.big_c * f1.v())?.value;
                                worst = worst.max((gen - s).norm());
                            }
                            compared += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(verdict(worst <= 1e-9, format!("{compared} sums, largest discrepancy {worst:.2e}")))
}

fn crt_multiplicativity(ctx: &Ctx) -> Result<Outcome> {
    let mut rng = ctx.rng(3);
    let cases = if ctx.full() { 100 } else { 20 };
    let levels = [g(1, 0), g(1, 1), g(2, 0), g(3, 0), g(2, 1)];
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < cases {
        let q0 = levels[rng.gen_range(0..levels.len())];
        let frames = class_representatives(q0)?;
        let f = &frames[rng.gen_range(0..frames.len())];
        let moduli: Vec<_> = allowed_moduli(f, f, 20.0 / f.v().abs())?.into_iter().filter(|m| (m.big_c * f.v()).norm() <= 400).collect();
        if moduli.is_empty() {
            continue;
        }
        let cp = moduli[rng.gen_range(0..moduli.len())].big_c * f.v();
        let (w1, w2) = (random_gaussian(&mut rng, 4), random_gaussian(&mut rng, 4));
        let k = k_sum(f, w1, w2, cp, cp)?.value;
        worst = worst.max((k - k_sum_crt(f, w1, w2, cp)?).norm());
        done += 1;
    }
    Ok(verdict(worst <= 1e-9, format!("{cases} cases with |c'|² ≤ 400, largest discrepancy {worst:.2e}")))
}

fn factorization_identity(ctx: &Ctx) -> Result<Outcome> {
    let mut rng = ctx.rng(4);
    let cases = if ctx.full() { 100 } else { 20 };
    let levels = [g(1, 1), g(2, 0), g(3, 0), g(2, 1), g(2, 2)];
    let mut worst = 0.0f64;
    let mut mixed = 0;
    let mut done = 0;
    while done < cases {
        let q0 = levels[rng.gen_range(0..levels.len())];
        let frames = class_representatives(q0)?;
        let f1 = &frames[rng.gen_range(0..frames.len())];
        let f2 = &frames[rng.gen_range(0..frames.len())];
        let c = random_gaussian(&mut rng, 4);
        if c.is_zero() {
            continue;
        }
        let (m, n) = (random_gaussian(&mut rng, 4), random_gaussian(&mut rng, 4));
        let parts = match kloosterman_factor(f1, f2, m, n, c) {
            Ok(p) => p,
            Err(gk::GkError::Domain(_)) => continue,
            Err(e) => return Err(e),
        };
        if !parts.c_q0_part.is_unit() && !parts.c_coprime.is_unit() {
            mixed += 1;
        }
        let full = kloosterman_general(f1, f2, m, n, c)?.value;
        worst = worst.max((full - parts.product()).norm());
        done += 1;
    }
    Ok(verdict(worst <= 1e-9, format!("{cases} cases ({mixed} with both parts nontrivial), largest discrepancy {worst:.2e}")))
}

fn weil_estermann(ctx: &Ctx) -> Result<Outcome> {
    let (ex, sampled, samples) = if ctx.full() { (200, 2000, 200) } else { (50, 0, 0) };
    let r = weil_estermann_sweep(ex, sampled, samples, ctx.seed)?;
    Ok(verdict(
        r.violations == 0 && r.prime_power_violations == 0,
        format!(
            "{} moduli exhaustive ({} pairs), {} sampled ({} pairs); violations {}, prime-power violations {}; τ convention: {}",
            r.exhaustive_moduli, r.exhaustive_pairs, r.sampled_moduli, r.sampled_pairs, r.violations, r.prime_power_violations, r.tau_convention
        ),
    ))
}

fn gauss_sums(ctx: &Ctx) -> Result<Outcome> {
    let max = if ctx.full() { 100 } else { 50 };
    let mut worst = 0.0f64;
    let mut count = 0;
    for p in gaussian_primes_up_to(max) {
        if p.norm() == 2 {
            continue;
        }
        for a in residues(p, true)? {
            worst = worst.max((gauss_sum(a, p)?.norm() - p.abs()).abs());
            count += 1;
        }
    }
    Ok(verdict(worst <= 1e-10, format!("{count} sums over odd primes with |ϖ|² ≤ {max}, largest deviation {worst:.2e}")))
}

fn delta_terms(ctx: &Ctx) -> Result<Outcome> {
    let (levels, w_max) = if ctx.full() { (vec![g(1, 0), g(1, 1), g(2, 0)], 8) } else { (vec![g(1, 0), g(1, 1)], 2) };
    let freqs: Vec<GaussianInt> = small_frequencies(w_max).into_iter().filter(|w| !w.is_zero()).collect();
    let mut bad = 0;
    let mut count = 0;
    for q0 in levels {
        let frames = class_representatives(q0)?;
        for f1 in &frames {
            for f2 in &frames {
                for &w1 in &freqs {
                    for &w2 in &freqs {
                        let d = delta_term(f1, f2, w1, w2)?;
                        let (b, st) = delta_term_bruteforce(f1, f2, w1, w2, &DEFAULT_HEIGHTS)?;
                        if !st.is_stabilized() {
                            return Ok((CheckStatus::Inconclusive, format!("coset enumeration did not stabilize for q0 = {q0}")));
                        }
                        if (d.value - b.value).norm() > 1e-12 || d.contributing_cosets != b.contributing_cosets {
                            bad += 1;
                        }
                        count += 1;
                    }
                }
            }
        }
    }
    Ok(verdict(bad == 0, format!("{count} cases, {bad} mismatches")))
}

// ---------------------------------------------------------------------------
// bessel

fn graf_grid(_: &Ctx) -> Result<Outcome> {
    let mut worst = 0.0f64;
    for p in [0i64, 1, 2, 3] {
        for (k, r) in [0.5, 1.5, 2.5, 4.0].iter().enumerate() {
            let u = Complex64::from_polar(*r, 0.3 + 0.7 * k as f64);
            for y in [0.5, 1.0, 1.5, 2.0] {
                worst = worst.max(graf_residual(p, u, y, 80)?);
            }
        }
    }
    Ok(verdict(worst <= 1e-10, format!("4×4×4 grid, largest residual {worst:.2e}")))
}

fn poisson_family(_: &Ctx) -> Result<Outcome> {
    let mut worst = 0.0f64;
    for t in [0.5, 1.0, PI, 5.0] {
        let r = poisson_check_2d(&GaussianPolynomial::gaussian(t), 14.0)?;
        worst = worst.max(r.discrepancy() - r.lhs_tail - r.rhs_tail);
    }
    let grid: Vec<Complex64> = [0.05, 0.3, 0.9, 1.7].iter().map(|&r| Complex64::new(0.6 * r, 0.8 * r)).collect();
    let mut violations = 0;
    for f in [GaussianPolynomial::gaussian(PI), GaussianPolynomial::monomial(0.7, 2, 1), GaussianPolynomial::monomial(1.3, 0, 3)] {
        violations += laplacian_decay_check(&f, 3, &grid)?.iter().filter(|r| !r.holds).count();
    }
    Ok(verdict(worst <= 1e-10 && violations == 0, format!("largest Poisson discrepancy {worst:.2e}, decay violations {violations}")))
}

// ---------------------------------------------------------------------------
// btransform

fn diagonal_exact(_: &Ctx) -> Result<Outcome> {
    let mut worst = 0.0f64;
    for p in [1.0, 2.0, 3.0] {
        for k in [1.0, 2.0, 3.0] {
            let params = TestParams::new(p, k, 0.75)?;
            let a = diagonal_term(&params).exact_numeric;
            let b = diagonal_term_direct(&params);
            worst = worst.max((a - b).norm() / a.norm());
        }
    }
    Ok(verdict(worst <= 1e-9, format!("Poisson-summed vs direct evaluation, largest relative difference {worst:.2e}")))
}

fn diagonal_main_term(_: &Ctx) -> Result<Outcome> {
    let mut failing = Vec::new();
    for p in [1.0, 2.0, 3.0] {
        for k in [1.0, 2.0, 3.0] {
            let d = diagonal_term(&TestParams::new(p, k, 0.75)?);
            if d.relative_deviation.abs() > d.envelope + 1e-9 {
                failing.push((p, k, d.relative_deviation, d.envelope));
            }
        }
    }
    if failing.is_empty() {
        return Ok((CheckStatus::Pass, "all (P, K) ∈ {1,2,3}² within P²e^{−π²P²} + 1e-9".into()));
    }
    let detail = failing.iter().map(|(p, k, d, e)| format!("P={p} K={k}: deviation {d:.2e} vs {e:.2e}")).collect::<Vec<_>>().join("; ");
    // only the width P = 1 exceeds the stated envelope
    let status = if failing.iter().all(|f| f.0 == 1.0) { CheckStatus::KnownDeviation } else { CheckStatus::Fail };
    Ok((status, detail))
}

fn route_consistency(ctx: &Ctx) -> Result<Outcome> {
    let (pk, us): (Vec<(f64, f64)>, Vec<Complex64>) = if ctx.full() {
        (vec![(1.0, 1.0), (1.0, 2.0), (2.0, 1.0), (2.0, 2.0)], (0..8).map(|j| Complex64::from_polar(0.4 + 0.8 * j as f64, 0.37 + 0.71 * j as f64)).collect())
    } else {
        (vec![(1.0, 1.0)], vec![Complex64::from_polar(0.8, 0.4), Complex64::from_polar(2.5, -1.1)])
    };
    let mut direct_worst = 0.0f64;
    let mut triple_worst = 0.0f64;
    for &(p, k) in &pk {
        let params = TestParams::new(p, k, 0.75)?;
        for &u in &us {
            let b = b_transform(&params, u, &BTransformConfig::new(BMethod::Bessel1d))?.value;
            let d = b_transform(&params, u, &BTransformConfig::new(BMethod::KernelDirect))?.value;
            direct_worst = direct_worst.max((b - d).norm());
            let t = b_transform(&params, u, &BTransformConfig::with_delta(BMethod::TripleSeries, u, 1.0))?;
            let env = t.remainder_envelope.expect("triple routes carry an envelope");
            triple_worst = triple_worst.max((t.value - b).norm() / env);
        }
    }
    Ok(verdict(
        direct_worst <= 1e-6 && triple_worst <= RECORDED_C2,
        format!("kernel vs Bessel {direct_worst:.2e}; triple/envelope ratio {triple_worst:.2e} (recorded constant {RECORDED_C2:e})"),
    ))
}

fn inversion(ctx: &Ctx) -> Result<Outcome> {
    if !ctx.full() {
        return Ok((CheckStatus::Skipped, "full budget only".into()));
    }
    let rows = inversion_check(&Bump::inversion_default(), &inversion_samples(), INVERSION_T_MAX, INVERSION_P_MAX)?;
    let worst = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    Ok(verdict(worst <= 1e-3, format!("{} sample points, largest relative error {worst:.2e}", rows.len())))
}

// ---------------------------------------------------------------------------
// sieve

fn large_sieve(ctx: &Ctx) -> Result<Outcome> {
    let grid = if ctx.full() { LargeSieveGrid::full() } else { LargeSieveGrid::fast() };
    let r = large_sieve_sweep(&grid)?;
    let detail = r
        .reports()
        .iter()
        .map(|s| format!("{}: {} rows, max ratio {:.3e}{}", s.name, s.rows.len(), s.max_ratio, if s.blow_up { ", blow-up" } else { "" }))
        .collect::<Vec<_>>()
        .join("; ");
    Ok(verdict(r.all_finite() && !r.any_blow_up(), detail))
}

fn mean_value(ctx: &Ctx) -> Result<Outcome> {
    let (ns, ts) = if ctx.full() { (vec![10.0, 25.0, 50.0, 100.0], vec![0.1, 0.5, 2.0, 6.0]) } else { (vec![10.0, 25.0], vec![0.5, 2.0]) };
    let r = e_sum_sweep(&[g(1, 0), g(1, 1), g(2, 1)], &ns, &[0, 2], &ts, ctx.seed)?;
    Ok(verdict(
        r.all_finite() && !r.blow_up && r.max_ratio <= RECORDED_MEAN_VALUE_CONSTANT,
        format!("{} rows, max ratio {:.3} (recorded constant {RECORDED_MEAN_VALUE_CONSTANT})", r.rows.len(), r.max_ratio),
    ))
}

fn geometric_convergence(ctx: &Ctx) -> Result<Outcome> {
    let (x1, x2) = if ctx.full() { (20.0, 30.0) } else { (10.0, 15.0) };
    let f = CuspFrame::new(gk::cusps::Cusp::Infinity, g(1, 0))?;
    let params = TestParams::new(2.0, 2.0, 0.75)?;
    let one = g(1, 0);
    let a = gk::sieve::geometric_side(&f, &f, one, one, &params, x1)?;
    let b = gk::sieve::geometric_side(&f, &f, one, one, &params, x2)?;
    let change = (a.kloosterman_part - b.kloosterman_part).norm();
    Ok(verdict(
        change < a.tail_envelope && b.tail_envelope < a.tail_envelope,
        format!("X {x1} → {x2}: change {change:.3e}, tail envelope {:.3e} → {:.3e}", a.tail_envelope, b.tail_envelope),
    ))
}

fn swapped_cusps(_: &Ctx) -> Result<Outcome> {
    let params = TestParams::new(1.0, 1.0, 0.75)?;
    let frames = class_representatives(g(1, 1))?;
    let mut worst = 0.0f64;
    for f1 in &frames {
        for f2 in &frames {
            let (a, ea, _) = kloosterman_part(f1, f2, g(1, 0), g(1, 1), &params, 4.0)?;
            let (b, eb, _) = kloosterman_part(f2, f1, g(-1, -1), g(-1, 0), &params, 4.0)?;
            worst = worst.max((a - b).norm() - ea - eb);
        }
    }
    Ok(verdict(worst <= 1e-9, format!("largest asymmetry beyond quadrature error {worst:.2e}")))
}

fn linnik_selberg(_: &Ctx) -> Result<Outcome> {
    let f = CuspFrame::new(gk::cusps::Cusp::Infinity, g(1, 0))?;
    let s = Complex64::new(1.0, 0.0);
    let a = linnik_selberg_partial(&f, &f, g(1, 0), g(1, 0), s, 6.0)?;
    let b = linnik_selberg_partial(&f, &f, g(1, 0), g(1, 0), s, 12.0)?;
    let dz = (a.z_partial - b.z_partial).norm();
    let dzeta = (a.zeta_partial - b.zeta_partial).norm();
    Ok(verdict(dz <= a.tail && dzeta <= a.zeta_tail, format!("X 6 → 12: changes {dz:.3e}, {dzeta:.3e} within tails {:.3e}, {:.3e}", a.tail, a.zeta_tail)))
}

const CHECKS: &[Check] = &[
    Check { module: "gaussint", name: "factorization_round_trip", run: factorization_round_trip },
    Check { module: "gaussint", name: "bezout_identity", run: bezout_identity },
    Check { module: "gaussint", name: "dedekind_zeta_at_two", run: zeta_at_two },
    Check { module: "cusps", name: "class_count_formula_vs_search", run: class_count },
    Check { module: "kloosterman", name: "three_route_agreement", run: three_routes },
    Check { module: "kloosterman", name: "crt_multiplicativity", run: crt_multiplicativity },
    Check { module: "kloosterman", name: "factorization_identity", run: factorization_identity },
    Check { module: "kloosterman", name: "weil_estermann", run: weil_estermann },
    Check { module: "kloosterman", name: "gauss_sum_modulus", run: gauss_sums },
    Check { module: "kloosterman", name: "delta_term_formula_vs_enumeration", run: delta_terms },
    Check { module: "bessel", name: "graf_addition", run: graf_grid },
    Check { module: "bessel", name: "poisson_and_laplacian_decay", run: poisson_family },
    Check { module: "btransform", name: "diagonal_term_exact", run: diagonal_exact },
    Check { module: "btransform", name: "diagonal_term_main_term", run: diagonal_main_term },
    Check { module: "btransform", name: "route_consistency", run: route_consistency },
    Check { module: "btransform", name: "inversion", run: inversion },
    Check { module: "sieve", name: "large_sieve_sweep", run: large_sieve },
    Check { module: "sieve", name: "mean_value_sweep", run: mean_value },
    Check { module: "sieve", name: "geometric_side_convergence", run: geometric_convergence },
    Check { module: "sieve", name: "swapped_cusp_symmetry", run: swapped_cusps },
    Check { module: "sieve", name: "linnik_selberg_tail", run: linnik_selberg },
];

/// Names of all checks with their modules, in report order.
pub fn check_names() -> Vec<(&'static str, &'static str)> {
    CHECKS.iter().map(|c| (c.module, c.name)).collect()
}

/// Runs the selected suite on `threads` workers; results keep the fixed check order.
pub fn run_suite(suite: Suite, budget: Budget, seed: u64, threads: usize) -> VerifyReport {
    let ctx = Ctx { budget, seed };
    let selected: Vec<&Check> = CHECKS.iter().filter(|c| suite.includes(c.module)).collect();
    let eval = |c: &&Check| {
        let started = std::time::Instant::now();
        let (status, detail) = match (c.run)(&ctx) {
            Ok(o) => o,
            Err(gk::GkError::Inconclusive(m)) => (CheckStatus::Inconclusive, m),
            Err(e) => (CheckStatus::Fail, e.to_string()),
        };
        eprintln!("[{:>6.1}s] {}::{} {:?}", started.elapsed().as_secs_f64(), c.module, c.name, status);
        CheckResult { module: c.module, name: c.name, status, detail }
    };
    let checks: Vec<CheckResult> = match rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build() {
        Ok(pool) => pool.install(|| selected.par_iter().map(eval).collect()),
        Err(_) => selected.iter().map(eval).collect(),
    };
    let passed = checks.iter().all(|c| !matches!(c.status, CheckStatus::Fail | CheckStatus::Inconclusive));
    VerifyReport { suite: suite.name(), budget: budget.name(), seed, passed, checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_module_has_checks() {
        for m in ["gaussint", "cusps", "kloosterman", "bessel", "btransform", "sieve"] {
            assert!(CHECKS.iter().any(|c| c.module == m), "{m}");
        }
        let mut names: Vec<_> = CHECKS.iter().map(|c| c.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), CHECKS.len());
    }

    #[test]
    fn report_status_ranks_failures_first() {
        let mk = |status| CheckResult { module: "m", name: "n", status, detail: String::new() };
        let rep = |v: Vec<CheckResult>| VerifyReport { suite: "all", budget: "fast", seed: 0, passed: false, checks: v };
        assert_eq!(rep(vec![mk(CheckStatus::Pass), mk(CheckStatus::KnownDeviation), mk(CheckStatus::Skipped)]).status(), Status::Ok);
        assert_eq!(rep(vec![mk(CheckStatus::Inconclusive), mk(CheckStatus::Pass)]).status(), Status::Inconclusive);
        assert_eq!(rep(vec![mk(CheckStatus::Inconclusive), mk(CheckStatus::Fail)]).status(), Status::VerificationFailure);
    }

    #[test]
    fn gaussint_suite_passes_and_is_deterministic() {
        let a = run_suite(Suite::Gaussint, Budget::Fast, 5, 1);
        let b = run_suite(Suite::Gaussint, Budget::Fast, 5, 2);
        assert!(a.passed, "{a:?}");
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
