//! Single-evaluation subcommands.

use gk::bessel::{bessel_j_int, bessel_j_star, graf_residual, poisson_check_2d, GaussianPolynomial};
use gk::btransform::{b_transform, diagonal_term, inversion_check, inversion_samples, BTransformConfig, Bump, TestParams, INVERSION_P_MAX, INVERSION_T_MAX};
use gk::cusps::{class_count_bruteforce, class_count_formula, class_representatives, Cusp, CuspFrame};
use gk::expsum::KloostermanValue;
use gk::gaussint::{multiplicative_stats, GaussianInt};
use gk::kloosterman::{
    delta_term, delta_term_bruteforce, kloosterman_bruteforce, kloosterman_factor, kloosterman_general, kloosterman_samecusp_frame, DEFAULT_HEIGHTS,
};
use gk::sieve::{
    e_sum_sweep, geometric_side, large_sieve_sweep, mean_value_envelope, short_modulus_applies, short_modulus_envelope, u_sum, weil_envelope, CoeffVector,
    LargeSieveGrid, RECORDED_MEAN_VALUE_CONSTANT,
};
use gk::{GkError, Result};
use serde_json::{json, Value};

use crate::args::*;
use crate::output::{to_value, Output, Status};

/// Tolerance for agreement between evaluation routes.
pub const ROUTE_TOL: f64 = 1e-9;

fn cplx(z: num_complex::Complex64) -> Value {
    json!([z.re, z.im])
}

fn frame(cusp: Cusp, q0: GaussianInt) -> Result<CuspFrame> {
    CuspFrame::new(cusp, q0)
}

pub fn cusps(a: &CuspsArgs) -> Result<Output> {
    let q0 = a.level.q0;
    let reps = class_representatives(q0)?;
    let formula = class_count_formula(q0)?;
    let mut status = if formula as usize == reps.len() { Status::Ok } else { Status::VerificationFailure };
    let classes: Vec<Value> = reps
        .iter()
        .map(|f| {
            json!({
                "cusp": f.cusp,
                "u": f.u,
                "w": f.w,
                "width": f.width_gen,
                "stab_index": f.stab_index,
            })
        })
        .collect();
    let mut doc = json!({"q0": q0, "count": reps.len(), "count_formula": formula});
    if a.brute {
        let b = class_count_bruteforce(q0)?;
        if b != reps.len() {
            status = Status::VerificationFailure;
        }
        doc["count_bruteforce"] = json!(b);
    }
    let mut out = if a.list {
        doc["classes"] = Value::Array(classes.clone());
        Output::new(doc).with_table(classes)
    } else {
        Output::new(doc)
    };
    out.status = status;
    Ok(out)
}

fn kvalue(v: &KloostermanValue, meta: Value) -> Value {
    json!({"value": cplx(v.value), "terms": v.terms, "err": v.err, "meta": meta})
}

pub fn kloosterman(a: &KloostermanArgs) -> Result<Output> {
    let q0 = a.level.q0;
    let (f1, f2) = (frame(a.cusps.a, q0)?, frame(a.cusps.b, q0)?);
    let (w1, w2, big_c) = (a.freq.w1, a.freq.w2, a.c);
    if big_c.is_zero() {
        return Err(GkError::Domain("modulus C must be nonzero".into()));
    }
    let c = big_c.to_complex() * f1.sqrt_v() * f2.sqrt_v();
    let meta = |method: &str| json!({"q0": q0, "a": a.cusps.a, "b": a.cusps.b, "w1": w1, "w2": w2, "C": big_c, "c": cplx(c), "method": method});
    let same = f1.same_normalized(&f2);
    let samecusp = || -> Result<KloostermanValue> {
        if !same {
            return Err(GkError::Domain("the same-cusp route needs a = b".into()));
        }
        kloosterman_samecusp_frame(&f1, w1, w2, big_c * f1.v())
    };
    match a.method {
        KloostermanMethod::General => Ok(Output::new(kvalue(&kloosterman_general(&f1, &f2, w1, w2, big_c)?, meta("general")))),
        KloostermanMethod::Samecusp => Ok(Output::new(kvalue(&samecusp()?, meta("samecusp")))),
        KloostermanMethod::Factor => {
            let p = kloosterman_factor(&f1, &f2, w1, w2, big_c)?;
            let v = p.product();
            let err = p.general_part.err * p.simple_part.value.norm() + p.simple_part.err * p.general_part.value.norm();
            let mut doc = json!({"value": cplx(v), "terms": p.general_part.terms + p.simple_part.terms, "err": err, "meta": meta("factor")});
            doc["parts"] = to_value(&p);
            Ok(Output::new(doc))
        }
        KloostermanMethod::Brute => {
            let b = kloosterman_bruteforce(&f1, &f2, w1, w2, big_c, &DEFAULT_HEIGHTS)?;
            match b.value {
                Some(v) => {
                    let mut doc = kvalue(&v, meta("brute"));
                    doc["cosets"] = json!(b.cosets);
                    doc["status"] = to_value(b.status);
                    Ok(Output::new(doc))
                }
                None => Ok(Output::new(json!({"value": null, "status": b.status, "meta": meta("brute")})).with_status(Status::Inconclusive)),
            }
        }
        KloostermanMethod::All => {
            let general = kloosterman_general(&f1, &f2, w1, w2, big_c)?;
            let mut routes = vec![("general", Some(general.value))];
            if same {
                routes.push(("samecusp", Some(samecusp()?.value)));
            }
            match kloosterman_factor(&f1, &f2, w1, w2, big_c) {
                Ok(p) => routes.push(("factor", Some(p.product()))),
                Err(GkError::Domain(_)) => {}
                Err(e) => return Err(e),
            }
            let b = kloosterman_bruteforce(&f1, &f2, w1, w2, big_c, &DEFAULT_HEIGHTS)?;
            routes.push(("brute", b.value.map(|v| v.value)));
            let agree = routes.iter().filter_map(|r| r.1).all(|v| (v - general.value).norm() <= ROUTE_TOL);
            let status = if !agree {
                Status::VerificationFailure
            } else if !b.status.is_stabilized() {
                Status::Inconclusive
            } else {
                Status::Ok
            };
            let table: Vec<Value> = routes.iter().map(|(name, v)| json!({"route": name, "value": v.map(cplx)})).collect();
            let mut doc = kvalue(&general, meta("all"));
            doc["routes"] = Value::Array(table.clone());
            doc["agree"] = json!(agree);
            doc["brute_status"] = to_value(b.status);
            Ok(Output::new(doc).with_table(table).with_status(status))
        }
    }
}

pub fn delta(a: &DeltaArgs) -> Result<Output> {
    let q0 = a.level.q0;
    let (f1, f2) = (frame(a.cusps.a, q0)?, frame(a.cusps.b, q0)?);
    let (w1, w2) = (a.freq.w1, a.freq.w2);
    let meta = json!({"q0": q0, "a": a.cusps.a, "b": a.cusps.b, "w1": w1, "w2": w2});
    let formula = || delta_term(&f1, &f2, w1, w2);
    match a.method {
        DeltaMethod::Formula => {
            let d = formula()?;
            Ok(Output::new(json!({"value": cplx(d.value), "contributing_cosets": d.contributing_cosets, "method": "formula", "meta": meta})))
        }
        DeltaMethod::Brute | DeltaMethod::All => {
            let (b, st) = delta_term_bruteforce(&f1, &f2, w1, w2, &DEFAULT_HEIGHTS)?;
            let mut doc = json!({
                "value": cplx(b.value),
                "contributing_cosets": b.contributing_cosets,
                "status": st,
                "method": "brute",
                "meta": meta,
            });
            let mut status = if st.is_stabilized() { Status::Ok } else { Status::Inconclusive };
            if a.method == DeltaMethod::All {
                let d = formula()?;
                let agree = (d.value - b.value).norm() <= ROUTE_TOL && d.contributing_cosets == b.contributing_cosets;
                doc["method"] = json!("all");
                doc["formula"] = cplx(d.value);
                doc["agree"] = json!(agree);
                if !agree {
                    status = Status::VerificationFailure;
                }
            }
            Ok(Output::new(doc).with_status(status))
        }
    }
}

pub fn bessel(a: &BesselArgs) -> Result<Output> {
    match a.method {
        BesselMethod::J => {
            if a.nu.im != 0.0 || a.nu.re.fract() != 0.0 {
                return Err(GkError::Domain(format!("order {} is not an integer", a.nu)));
            }
            let v = bessel_j_int(a.nu.re as i64, a.z)?;
            Ok(Output::new(json!({"value": cplx(v), "function": "J", "nu": a.nu.re as i64, "z": cplx(a.z)})))
        }
        BesselMethod::Jstar => {
            let v = bessel_j_star(a.nu, a.z)?;
            Ok(Output::new(json!({"value": cplx(v), "function": "J*", "nu": cplx(a.nu), "z": cplx(a.z)})))
        }
        BesselMethod::Graf => {
            let r = graf_residual(a.p, a.z, a.y, a.m)?;
            Ok(Output::new(json!({"residual": r, "p": a.p, "u": cplx(a.z), "y": a.y, "M": a.m})))
        }
        BesselMethod::Poisson => {
            let r = poisson_check_2d(&GaussianPolynomial::gaussian(a.t), a.cutoff)?;
            let mut doc = to_value(&r);
            doc["discrepancy"] = json!(r.discrepancy());
            doc["t"] = json!(a.t);
            doc["cutoff"] = json!(a.cutoff);
            Ok(Output::new(doc))
        }
    }
}

pub fn btransform(a: &BtransformArgs) -> Result<Output> {
    let params = TestParams::new(a.test_fn.p, a.test_fn.k, a.test_fn.sigma)?;
    if a.diagonal {
        return Ok(Output::new(diagonal_term(&params)));
    }
    if a.inversion {
        let (t, p) = match a.budget {
            Budget::Fast => (15.0, 8),
            Budget::Full => (INVERSION_T_MAX, INVERSION_P_MAX),
        };
        let rows = inversion_check(&Bump::inversion_default(), &inversion_samples(), t, p)?;
        let max = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
        let doc = json!({"rows": rows, "max_rel_err": max, "t_max": t, "p_max": p});
        return Ok(Output::new(doc).with_table(rows));
    }
    let mut cfg = if a.method.is_triple() { BTransformConfig::with_delta(a.method, a.u, a.delta) } else { BTransformConfig::new(a.method) };
    cfg.nu_cutoff = a.cutoff;
    let v = b_transform(&params, a.u, &cfg)?;
    let mut doc = to_value(v);
    doc["method"] = json!(a.method.name());
    doc["u"] = cplx(a.u);
    doc["params"] = to_value(params);
    if a.method.is_triple() {
        doc["M"] = json!(cfg.m_trunc);
    }
    Ok(Output::new(doc))
}

pub fn geom(a: &GeomArgs) -> Result<Output> {
    let q0 = a.level.q0;
    let params = TestParams::new(a.test_fn.p, a.test_fn.k, a.test_fn.sigma)?;
    let (f1, f2) = (frame(a.cusps.a, q0)?, frame(a.cusps.b, q0)?);
    let g = geometric_side(&f1, &f2, a.freq.w1, a.freq.w2, &params, a.cutoff)?;
    let mut doc = to_value(g);
    doc["X"] = json!(a.cutoff);
    doc["meta"] = json!({"q0": q0, "a": a.cusps.a, "b": a.cusps.b, "w1": a.freq.w1, "w2": a.freq.w2, "params": params});
    Ok(Output::new(doc))
}

pub fn sieve(a: &SieveArgs) -> Result<Output> {
    match a.sweep {
        Some(SweepKind::LargeSieve) => {
            let grid = match a.budget {
                Budget::Fast => LargeSieveGrid::fast(),
                Budget::Full => LargeSieveGrid::full(),
            };
            let r = large_sieve_sweep(&grid)?;
            let status = if r.all_finite() && !r.any_blow_up() { Status::Ok } else { Status::VerificationFailure };
            let summary: Vec<Value> = r
                .reports()
                .iter()
                .map(|s| json!({"name": s.name, "rows": s.rows.len(), "max_ratio": s.max_ratio, "blow_up": s.blow_up, "all_finite": s.all_finite()}))
                .collect();
            let mut table = Vec::new();
            for s in r.reports() {
                for row in &s.rows {
                    let mut v = to_value(row);
                    v["report"] = json!(s.name);
                    table.push(v);
                }
            }
            Ok(Output::new(json!({"grid": grid, "summary": summary, "reports": r})).with_table(table).with_status(status))
        }
        Some(SweepKind::MeanValue) => {
            let q = |re, im| GaussianInt::new(re, im);
            let (moduli, ns, ms, ts) = match a.budget {
                Budget::Fast => (vec![q(1, 0), q(1, 1)], vec![10.0, 25.0], vec![0, 2], vec![0.5, 2.0]),
                Budget::Full => (vec![q(1, 0), q(1, 1), q(2, 1), q(3, 0), q(3, 2)], vec![10.0, 25.0, 50.0, 100.0], vec![0, 1, 3, 6], vec![0.1, 0.5, 2.0, 6.0]),
            };
            let r = e_sum_sweep(&moduli, &ns, &ms, &ts, a.seed)?;
            let ok = r.all_finite() && !r.blow_up && r.max_ratio <= RECORDED_MEAN_VALUE_CONSTANT;
            let doc = json!({"report": r, "recorded_constant": RECORDED_MEAN_VALUE_CONSTANT});
            let status = if ok { Status::Ok } else { Status::VerificationFailure };
            Ok(Output::new(doc).with_table(r.rows.clone()).with_status(status))
        }
        None => {
            let f = frame(a.a, a.level.q0)?;
            let b = CoeffVector::from_family(a.n, a.family, a.seed)?;
            let u = u_sum(&f, a.psi, a.c, a.m, &b)?;
            let cz = a.c * f.v();
            let st = multiplicative_stats(cz)?;
            let (c_abs, bn) = (cz.abs(), b.norm2());
            let grid = LargeSieveGrid::full();
            let short = short_modulus_applies(cz.norm() as f64, a.psi, a.n, &grid).then(|| short_modulus_envelope(a.psi, c_abs, a.m, a.n, grid.eps, bn));
            let doc = json!({
                "U": u,
                "c": cz,
                "norm_b": bn,
                "envelopes": {
                    "weil_ideal": weil_envelope(st.tau_ideal as f64, c_abs, a.m, a.n, bn),
                    "weil_assoc": weil_envelope(st.tau_assoc as f64, c_abs, a.m, a.n, bn),
                    "mean_value": mean_value_envelope(a.psi, c_abs, a.m, a.n, bn),
                    "short_modulus": short,
                },
                "meta": {"q0": a.level.q0, "a": a.a, "C": a.c, "N": a.n, "M": a.m, "psi": a.psi, "family": a.family.name(), "seed": a.seed},
            });
            Ok(Output::new(doc))
        }
    }
}
