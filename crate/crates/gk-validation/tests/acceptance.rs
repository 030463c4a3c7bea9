//! Acceptance criteria at their stated tolerances, one line per criterion.
//!
//! Runs without the libtest harness so the report keeps its order; the
//! process exits non-zero when any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use gk::bessel::{graf_residual, laplacian_decay_check, poisson_check_2d, GaussianPolynomial};
use gk::btransform::{
    b_transform, diagonal_term, inversion_check, inversion_samples, BMethod, BTransformConfig, Bump, TestParams, INVERSION_P_MAX, INVERSION_T_MAX, RECORDED_C2,
};
use gk::cusps::{allowed_moduli, class_count_bruteforce, class_count_formula, class_representatives, Cusp, CuspFrame};
use gk::gaussint::{gaussian_primes_up_to, residues, GaussianInt};
use gk::kloosterman::{
    bruteforce_census, delta_term, delta_term_bruteforce, gauss_sum, k_sum, k_sum_crt, kloosterman_factor, kloosterman_general, kloosterman_samecusp_frame,
    weil_estermann_sweep, DEFAULT_HEIGHTS,
};
use gk::sieve::{geometric_side, large_sieve_sweep, LargeSieveGrid};
use gk::{GkError, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20;

type Verdict = (bool, String);

fn g(re: i64, im: i64) -> GaussianInt {
    GaussianInt::new(re, im)
}

fn random_gaussian(rng: &mut ChaCha8Rng, r: i64) -> GaussianInt {
    g(rng.gen_range(-r..=r), rng.gen_range(-r..=r))
}

fn frequencies(max_norm: i64, zero: bool) -> Vec<GaussianInt> {
    let r = (max_norm as f64).sqrt() as i64;
    (-r..=r).flat_map(|a| (-r..=r).map(move |b| g(a, b))).filter(|z| z.norm() <= max_norm && (zero || !z.is_zero())).collect()
}

fn within(elapsed: Duration, limit: f64) -> bool {
    elapsed.as_secs_f64() <= limit
}

fn cusp_class_count() -> Result<Verdict> {
    let started = Instant::now();
    let mut levels = Vec::new();
    for a in -10i64..=10 {
        for b in -10i64..=10 {
            let z = g(a, b);
            if !z.is_zero() && z.norm() <= 100 && z == z.canonical() {
                levels.push(z);
            }
        }
    }
    let mut bad = Vec::new();
    for &q0 in &levels {
        let f = class_count_formula(q0)?;
        let b = class_count_bruteforce(q0)?;
        if f as usize != b {
            bad.push(format!("{q0}: {f} vs {b}"));
        }
    }
    let t = started.elapsed();
    Ok((bad.is_empty() && within(t, 10.0), format!("{} levels with |q0|² ≤ 100 in {:.2}s (limit 10s), mismatches {bad:?}", levels.len(), t.as_secs_f64())))
}

fn kloosterman_routes() -> Result<Verdict> {
    let freqs = frequencies(8, true);
    let mut worst = 0.0f64;
    let mut sums = 0u64;
    for q0 in [g(1, 0), g(1, 1), g(2, 0), g(3, 0)] {
        let frames = class_representatives(q0)?;
        for f1 in &frames {
            for f2 in &frames {
                let census = bruteforce_census(f1, f2, 50, &DEFAULT_HEIGHTS)?;
                if !census.status.is_stabilized() {
                    return Ok((false, format!("enumeration did not stabilize for q0 = {q0}, {} → {}", f1.cusp, f2.cusp)));
                }
                for m in allowed_moduli(f1, f2, 50f64.sqrt())? {
                    if m.big_c.norm() > 50 {
                        continue;
                    }
                    for &w1 in &freqs {
                        for &w2 in &freqs {
                            let gen = kloosterman_general(f1, f2, w1, w2, m.big_c)?.value;
                            let bf = census.sum(w1, w2, m.big_c).expect("stabilized census").value;
                            worst = worst.max((gen - bf).norm());
                            match kloosterman_factor(f1, f2, w1, w2, m.big_c) {
                                Ok(p) => worst = worst.max((gen - p.product()).norm()),
                                Err(GkError::Domain(_)) => {}
                                Err(e) => return Err(e),
                            }
                            if f1.same_normalized(f2) {
                                let s = kloosterman_samecusp_frame(f1, w1, w2, m.big_c * f1.v())?.value;
                                worst = worst.max((gen - s).norm());
                            }
                            sums += 1;
                        }
                    }
                }
            }
        }
    }
    Ok((worst <= 1e-9, format!("{sums} sums, brute force stabilized, largest discrepancy {worst:.2e} (tolerance 1e-9)")))
}

fn factorization_identity() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let levels = [g(1, 1), g(2, 0), g(3, 0), g(2, 1), g(2, 2)];
    let (mut worst, mut mixed, mut done) = (0.0f64, 0, 0);
    while done < 100 {
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
            Err(GkError::Domain(_)) => continue,
            Err(e) => return Err(e),
        };
        if !parts.c_q0_part.is_unit() && !parts.c_coprime.is_unit() {
            mixed += 1;
        }
        worst = worst.max((kloosterman_general(f1, f2, m, n, c)?.value - parts.product()).norm());
        done += 1;
    }
    Ok((worst <= 1e-9 && mixed > 0, format!("100 cases, {mixed} with mixed q0-part, largest discrepancy {worst:.2e}")))
}

fn crt_multiplicativity() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let levels = [g(1, 0), g(1, 1), g(2, 0), g(3, 0), g(2, 1)];
    let (mut worst, mut done) = (0.0f64, 0);
    while done < 100 {
        let q0 = levels[rng.gen_range(0..levels.len())];
        let frames = class_representatives(q0)?;
        let f = &frames[rng.gen_range(0..frames.len())];
        let moduli: Vec<_> = allowed_moduli(f, f, 20.0 / f.v().abs())?.into_iter().filter(|m| (m.big_c * f.v()).norm() <= 400).collect();
        if moduli.is_empty() {
            continue;
        }
        let cp = moduli[rng.gen_range(0..moduli.len())].big_c * f.v();
        let (w1, w2) = (random_gaussian(&mut rng, 4), random_gaussian(&mut rng, 4));
        worst = worst.max((k_sum(f, w1, w2, cp, cp)?.value - k_sum_crt(f, w1, w2, cp)?).norm());
        done += 1;
    }
    Ok((worst <= 1e-9, format!("100 cases with |c'|² ≤ 400, largest discrepancy {worst:.2e}")))
}

fn weil_estermann() -> Result<Verdict> {
    let r = weil_estermann_sweep(200, 2000, 200, SEED)?;
    Ok((
        r.violations == 0 && r.prime_power_violations == 0,
        format!(
            "{} moduli exhaustive, {} sampled ({} pairs); violations {}, prime-power violations {}; τ convention: {}",
            r.exhaustive_moduli, r.sampled_moduli, r.sampled_pairs, r.violations, r.prime_power_violations, r.tau_convention
        ),
    ))
}

fn gauss_sum_modulus() -> Result<Verdict> {
    let (mut worst, mut count) = (0.0f64, 0);
    for p in gaussian_primes_up_to(100) {
        if p.norm() == 2 {
            continue;
        }
        for a in residues(p, true)? {
            worst = worst.max((gauss_sum(a, p)?.norm() - p.abs()).abs());
            count += 1;
        }
    }
    Ok((worst <= 1e-10, format!("{count} sums over odd primes with |ϖ|² ≤ 100, largest deviation {worst:.2e}")))
}

fn graf_addition() -> Result<Verdict> {
    let mut worst = 0.0f64;
    for p in [0i64, 1, 2, 3] {
        for (k, r) in [0.5, 1.5, 2.5, 4.0].iter().enumerate() {
            let u = Complex64::from_polar(*r, 0.3 + 0.7 * k as f64);
            for y in [0.5, 1.0, 1.5, 2.0] {
                worst = worst.max(graf_residual(p, u, y, 80)?);
            }
        }
    }
    Ok((worst <= 1e-10, format!("4×4×4 grid with M = 80, largest residual {worst:.2e}")))
}

fn diagonal_main_term() -> Result<Verdict> {
    let started = Instant::now();
    let mut failing = Vec::new();
    for p in [1.0, 2.0, 3.0] {
        for k in [1.0, 2.0, 3.0] {
            let d = diagonal_term(&TestParams::new(p, k, 0.75)?);
            if d.relative_deviation.abs() > d.envelope + 1e-9 {
                failing.push(format!("P={p} K={k}: {:.2e} > {:.2e}", d.relative_deviation.abs(), d.envelope + 1e-9));
            }
        }
    }
    let t = started.elapsed();
    Ok((failing.is_empty() && within(t, 5.0), format!("{:.2}s (limit 5s); outside P²e^(−π²P²) + 1e-9: {failing:?}", t.as_secs_f64())))
}

fn transform_routes() -> Result<Verdict> {
    let us: Vec<Complex64> = (0..8).map(|j| Complex64::from_polar(0.4 + 0.8 * j as f64, 0.37 + 0.71 * j as f64)).collect();
    let (mut direct, mut triple) = (0.0f64, 0.0f64);
    for (p, k) in [(1.0, 1.0), (1.0, 2.0), (2.0, 1.0), (2.0, 2.0)] {
        let params = TestParams::new(p, k, 0.75)?;
        for &u in &us {
            let b = b_transform(&params, u, &BTransformConfig::new(BMethod::Bessel1d))?.value;
            let d = b_transform(&params, u, &BTransformConfig::new(BMethod::KernelDirect))?.value;
            direct = direct.max((b - d).norm());
            let t = b_transform(&params, u, &BTransformConfig::with_delta(BMethod::TripleSeries, u, 1.0))?;
            let env = t.remainder_envelope.expect("triple routes carry an envelope");
            triple = triple.max((t.value - b).norm() / env);
        }
    }
    Ok((
        direct <= 1e-6 && triple <= RECORDED_C2,
        format!("kernel vs Bessel {direct:.2e} (tolerance 1e-6); triple/envelope {triple:.2e} (recorded constant {RECORDED_C2:e})"),
    ))
}

fn inversion() -> Result<Verdict> {
    let rows = inversion_check(&Bump::inversion_default(), &inversion_samples(), INVERSION_T_MAX, INVERSION_P_MAX)?;
    let worst = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    Ok((worst <= 1e-3, format!("{} points, T = {INVERSION_T_MAX}, P = {INVERSION_P_MAX}, largest relative error {worst:.2e}", rows.len())))
}

fn poisson_and_decay() -> Result<Verdict> {
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
    Ok((worst <= 1e-10 && violations == 0, format!("Poisson discrepancy {worst:.2e}, decay violations for j ≤ 3: {violations}")))
}

fn geometric_convergence() -> Result<Verdict> {
    let f = CuspFrame::new(Cusp::Infinity, g(1, 0))?;
    let params = TestParams::new(2.0, 2.0, 0.75)?;
    let one = g(1, 0);
    let a = geometric_side(&f, &f, one, one, &params, 20.0)?;
    let b = geometric_side(&f, &f, one, one, &params, 30.0)?;
    let change = (a.kloosterman_part - b.kloosterman_part).norm();
    Ok((
        change < a.tail_envelope && b.tail_envelope < a.tail_envelope,
        format!("X 20 → 30: change {change:.3e}, tail envelope {:.3e} → {:.3e}", a.tail_envelope, b.tail_envelope),
    ))
}

fn large_sieve_grid() -> Result<Verdict> {
    let r = large_sieve_sweep(&LargeSieveGrid::full())?;
    let detail = r.reports().iter().map(|s| format!("{} {} rows max ratio {:.3e}", s.name, s.rows.len(), s.max_ratio)).collect::<Vec<_>>().join(", ");
    Ok((r.all_finite() && !r.any_blow_up(), format!("finite, no blow-up: {detail}")))
}

fn delta_term_enumeration() -> Result<Verdict> {
    let freqs = frequencies(8, false);
    let (mut bad, mut count) = (0, 0);
    for q0 in [g(1, 0), g(1, 1), g(2, 0)] {
        let frames = class_representatives(q0)?;
        for f1 in &frames {
            for f2 in &frames {
                for &w1 in &freqs {
                    for &w2 in &freqs {
                        let d = delta_term(f1, f2, w1, w2)?;
                        let (b, st) = delta_term_bruteforce(f1, f2, w1, w2, &DEFAULT_HEIGHTS)?;
                        if !st.is_stabilized() {
                            return Ok((false, format!("enumeration did not stabilize for q0 = {q0}")));
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
    Ok((bad == 0, format!("{count} cases, {bad} mismatches")))
}

type Criterion = (&'static str, fn() -> Result<Verdict>);

const CRITERIA: [Criterion; 14] = [
    ("cusp_class_count", cusp_class_count),
    ("kloosterman_routes", kloosterman_routes),
    ("factorization_identity", factorization_identity),
    ("crt_multiplicativity", crt_multiplicativity),
    ("weil_estermann", weil_estermann),
    ("gauss_sum_modulus", gauss_sum_modulus),
    ("graf_addition", graf_addition),
    ("diagonal_main_term", diagonal_main_term),
    ("transform_routes", transform_routes),
    ("inversion", inversion),
    ("poisson_and_decay", poisson_and_decay),
    ("geometric_convergence", geometric_convergence),
    ("large_sieve_grid", large_sieve_grid),
    ("delta_term_enumeration", delta_term_enumeration),
];

fn main() {
    // `cargo test -- --list` lists the criteria without running them
    if std::env::args().any(|a| a == "--list") {
        for (name, _) in &CRITERIA {
            println!("{name}: test");
        }
        return;
    }
    let mut failed = 0;
    for (i, (name, run)) in CRITERIA.iter().enumerate() {
        let started = Instant::now();
        let (ok, detail) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
        let mark = if ok { "PASS" } else { "FAIL" };
        println!("{mark} criterion {:>2} {name} [{:.1}s]: {detail}", i + 1, started.elapsed().as_secs_f64());
        failed += usize::from(!ok);
    }
    println!("acceptance: {} of {} criteria passed", CRITERIA.len() - failed, CRITERIA.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
