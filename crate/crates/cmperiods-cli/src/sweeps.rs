//! Toric-period evaluation and the three verification sweeps.

use anyhow::{anyhow, bail, Result};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use cmperiods::characters::HeckeCharLocal;
use cmperiods::cyclotomic::{CycloElt, EllReduction};
use cmperiods::local_rings::{ipow, is_prime};
use cmperiods::toric_period::{ClosedForm, LambdaData, ToricContext, ToricPeriodRecord};

use crate::Report;

#[derive(Clone, Copy, ValueEnum)]
pub enum Form {
    Stated,
    Corrected,
}

impl From<Form> for ClosedForm {
    fn from(f: Form) -> Self {
        match f {
            Form::Stated => ClosedForm::Stated,
            Form::Corrected => ClosedForm::Corrected,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    /// compare reductions at every place above a few split primes; evidence, not proof
    MultiPrime,
}

#[derive(Args)]
pub struct ToricArgs {
    #[arg(long)]
    pub q: u64,
    #[arg(long)]
    pub m: u32,
    /// `e_h,e_u1,e_u2`; every self-dual λ when omitted
    #[arg(long, value_parser = parse_lambda)]
    pub lambda: Option<[u64; 3]>,
    /// every admissible u mod q when omitted
    #[arg(long)]
    pub u: Option<u64>,
    #[arg(long, value_enum, default_value = "corrected")]
    pub form: Form,
    /// primes ℓ for the unit flags of (q²-1)γ
    #[arg(long, value_delimiter = ',')]
    pub ell: Vec<u64>,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub q: u64,
    #[arg(long)]
    pub m: u32,
    #[arg(long, value_enum, default_value = "stated")]
    pub form: Form,
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: Mode,
    /// number of split primes in multi-prime mode
    #[arg(long, default_value_t = 3)]
    pub primes: usize,
}

pub fn parse_lambda(s: &str) -> Result<[u64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err("expected e_h,e_u1,e_u2".into());
    }
    let mut out = [0u64; 3];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = p.parse().map_err(|e| format!("{p}: {e}"))?;
    }
    Ok(out)
}

fn lambdas(ctx: &ToricContext, chosen: Option<[u64; 3]>) -> Result<Vec<LambdaData>> {
    let s = ctx.setting();
    let list = match chosen {
        Some(e) => vec![HeckeCharLocal { q: s.q(), m: s.m(), d: s.d(), exponents: e }],
        None => s.enumerate_selfdual()?,
    };
    list.par_iter().map(|l| ctx.lambda_data(l).map_err(Into::into)).collect()
}

fn coeff_strings(x: &CycloElt) -> Vec<String> {
    x.coeffs().iter().map(|c| c.to_string()).collect()
}

pub fn toric_period(a: &ToricArgs) -> Result<Report> {
    let ctx = ToricContext::new(a.q, a.m)?;
    let reds: Vec<EllReduction> = a.ell.iter().map(|&l| EllReduction::new(ctx.n(), l)).collect::<Result<_, _>>()?;
    let us = match a.u {
        Some(u) => vec![u],
        None => ctx.admissible_u(),
    };
    let lds = lambdas(&ctx, a.lambda)?;
    let rows: Vec<Vec<Value>> = lds
        .par_iter()
        .map(|ld| {
            us.iter()
                .map(|&u| {
                    let g = ctx.gamma_closed(ld, u, a.form.into())?;
                    let mut rec = ToricPeriodRecord::from(&g);
                    for red in &reds {
                        for (j, unit) in red.unit_flags(&g.gamma_scaled)? {
                            rec.ell_unit.insert(format!("{}@{j}", red.field().ell()), unit);
                        }
                    }
                    let mut v = serde_json::to_value(&rec)?;
                    v["conductor"] = json!(ctx.n());
                    v["lambda_theta"] = json!(ld.theta_sign);
                    Ok(v)
                })
                .collect::<Result<Vec<Value>>>()
        })
        .collect::<Result<_>>()?;
    Ok(Report::ok(Value::Array(rows.into_iter().flatten().collect())))
}

/// The first `count` primes `ℓ ≡ 1 mod n`.
fn split_primes(n: u64, count: usize) -> Vec<u64> {
    (1u64..).map(|k| k * n + 1).filter(|&l| is_prime(l)).take(count).collect()
}

fn vanishes_everywhere(x: &CycloElt, reds: &[EllReduction]) -> Result<bool> {
    for red in reds {
        if red.unit_flags(x)?.iter().any(|&(_, nonzero)| nonzero) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn summary(verb: &str, a: &VerifyArgs, checked: usize, failures: Vec<Value>, extra: Value) -> Report {
    let passed = checked - failures.len();
    let mut body = json!({
        "verb": verb,
        "q": a.q,
        "m": a.m,
        "form": match a.form { Form::Stated => "stated", Form::Corrected => "corrected" },
        "checked": checked,
        "passed": passed,
        "failures": failures.into_iter().take(20).collect::<Vec<_>>(),
    });
    if let (Value::Object(b), Value::Object(e)) = (&mut body, extra) {
        b.extend(e);
    }
    Report { body, ok: passed == checked }
}

pub fn master_identity(a: &VerifyArgs) -> Result<Report> {
    let ctx = ToricContext::new(a.q, a.m)?;
    let form: ClosedForm = a.form.into();
    let reds: Vec<EllReduction> = match a.mode {
        Mode::Exact => Vec::new(),
        Mode::MultiPrime => {
            split_primes(ctx.n(), a.primes).into_iter().map(|l| EllReduction::new(ctx.n(), l)).collect::<Result<_, _>>()?
        }
    };
    let factor = ((a.q + 1) * ipow(a.q, a.m - 1)) as i128;
    let lds = lambdas(&ctx, None)?;
    let us = ctx.admissible_u();
    let results: Vec<Vec<(HeckeCharLocal, u64, bool)>> = lds
        .par_iter()
        .map(|ld| {
            us.iter()
                .map(|&u| {
                    let ok = match a.mode {
                        Mode::Exact => ctx.master_identity(ld, u, form)?,
                        Mode::MultiPrime => {
                            let total = ctx.theorem_co_sum(ld, u)?;
                            let g = ctx.gamma_closed(ld, u, form)?;
                            let diff = &total.num.scale(g.scale) - &g.gamma_scaled.scale(factor * total.den);
                            vanishes_everywhere(&diff, &reds)?
                        }
                    };
                    Ok((ld.lam, u, ok))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let flat: Vec<_> = results.into_iter().flatten().collect();
    let failures: Vec<Value> =
        flat.iter().filter(|r| !r.2).map(|(l, u, _)| json!({"lambda": l.exponents, "u": u})).collect();
    let mode = match a.mode {
        Mode::Exact => json!({"mode": "exact"}),
        Mode::MultiPrime => json!({
            "mode": "multi-prime",
            "primes": reds.iter().map(|r| r.field().ell()).collect::<Vec<_>>(),
        }),
    };
    Ok(summary("master-identity", a, flat.len(), failures, mode))
}

pub fn bfprime(a: &VerifyArgs) -> Result<Report> {
    if a.mode == Mode::MultiPrime {
        bail!("bfprime compares rational integers; use --mode exact");
    }
    let ctx = ToricContext::new(a.q, a.m)?;
    let form: ClosedForm = a.form.into();
    let mut vs = vec![1u64];
    if a.m % 2 == 1 {
        vs.extend(ctx.v_set());
    }
    let qm = ipow(a.q, a.m);
    let cases: Vec<(u64, u64)> = ctx.admissible_u().into_iter().flat_map(|u| vs.iter().map(move |&v| (u, v))).collect();
    let rows: Vec<Vec<Value>> = cases
        .par_iter()
        .map(|&(u, v)| {
            let mut bad = Vec::new();
            for x in 0..qm {
                let direct = ctx.f_v_direct(u, v, x)?.as_integer().ok_or_else(|| anyhow!("F_v is not rational"))?;
                let closed = ctx.f_v_closed(u, v, x, form)?;
                if direct != closed {
                    bad.push(json!({"u": u, "v": v, "a": x, "direct": direct.to_string(), "closed": closed.to_string()}));
                }
            }
            Ok(bad)
        })
        .collect::<Result<_>>()?;
    let checked = cases.len() * qm as usize;
    Ok(summary("bfprime", a, checked, rows.into_iter().flatten().collect(), json!({"v": vs})))
}

pub fn js(a: &VerifyArgs) -> Result<Report> {
    if a.mode == Mode::MultiPrime {
        bail!("js compares both sides exactly; use --mode exact");
    }
    let ctx = ToricContext::new(a.q, a.m)?;
    let mut vs = vec![1u64];
    vs.extend(ctx.v_set());
    vs.sort_unstable();
    vs.dedup();
    let us = ctx.admissible_u();
    let nchi = ctx.primitive_chars().len();
    let lds = lambdas(&ctx, None)?;
    let rows: Vec<(usize, Vec<Value>)> = lds
        .par_iter()
        .map(|ld| {
            let mut bad = Vec::new();
            let mut n = 0;
            for &u in &us {
                for i in 0..nchi {
                    for &v in &vs {
                        let (lhs, stated, corrected) = ctx.js_sides(ld, u, i, v)?;
                        let rhs = match a.form {
                            Form::Stated => stated,
                            Form::Corrected => corrected,
                        };
                        n += 1;
                        if lhs != rhs {
                            bad.push(json!({
                                "lambda": ld.lam.exponents, "u": u, "chi": ctx.primitive_chars()[i].exponent, "v": v,
                                "lhs": coeff_strings(&lhs),
                            }));
                        }
                    }
                }
            }
            Ok((n, bad))
        })
        .collect::<Result<_>>()?;
    let checked = rows.iter().map(|r| r.0).sum();
    Ok(summary("js", a, checked, rows.into_iter().flat_map(|r| r.1).collect(), json!({"v": vs})))
}
