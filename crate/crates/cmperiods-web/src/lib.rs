//! Browser bindings. Each export returns a JSON string; errors come back as JS exceptions.

use cmperiods::characters::{LocalSetting, MultChar};
use cmperiods::cyclotomic::CycloElt;
use cmperiods::iwasawa::{cor_val, interpolation_factor, rational_to_string, thm_delta, Sign};
use cmperiods::local_rings::ipow;
use cmperiods::toric_period::{ClosedForm, ToricContext};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest `q^m` the page will evaluate; bigger levels belong on the command line.
pub const MAX_LEVEL: u64 = 125;

fn check_level(q: u64, m: u32) -> Result<(), String> {
    if m == 0 || q < 3 || m > 6 || ipow(q, m) > MAX_LEVEL {
        return Err(format!("need odd prime q and 1 <= q^m <= {MAX_LEVEL}"));
    }
    Ok(())
}

/// `3ζ^2 - ζ^7 + …` over ζ of order `n`.
pub fn render_cyclo(x: &CycloElt) -> String {
    let mut out = String::new();
    for (i, &c) in x.coeffs().iter().enumerate().filter(|(_, &c)| c != 0) {
        let sign = if c < 0 { " - " } else if out.is_empty() { "" } else { " + " };
        let sign = if out.is_empty() && c < 0 { "-" } else { sign };
        let mag = c.unsigned_abs();
        match (i, mag) {
            (0, _) => out.push_str(&format!("{sign}{mag}")),
            (_, 1) => out.push_str(&format!("{sign}ζ^{i}")),
            _ => out.push_str(&format!("{sign}{mag}ζ^{i}")),
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// γ_{θ,u} for every self-dual λ at one `u`, with both closed forms tested against the direct sum.
pub fn toric_table_json(q: u64, m: u32, u: u64) -> Result<String, String> {
    check_level(q, m)?;
    let ctx = ToricContext::new(q, m).map_err(|e| e.to_string())?;
    if u.is_multiple_of(q) {
        return Err("u must be a unit mod q".into());
    }
    let mut rows = Vec::new();
    for lam in ctx.setting().enumerate_selfdual().map_err(|e| e.to_string())? {
        let ld = ctx.lambda_data(&lam).map_err(|e| e.to_string())?;
        let g = ctx.gamma_closed(&ld, u, ClosedForm::Corrected).map_err(|e| e.to_string())?;
        let stated = ctx.master_identity(&ld, u, ClosedForm::Stated).map_err(|e| e.to_string())?;
        let corrected = ctx.master_identity(&ld, u, ClosedForm::Corrected).map_err(|e| e.to_string())?;
        rows.push(json!({
            "lambda": lam.exponents,
            "lambda_theta": ld.theta_sign,
            "gamma": format!("({}) / {}", render_cyclo(&g.gamma_scaled), g.scale),
            "vanishes": g.vanishes,
            "stated_holds": stated,
            "corrected_holds": corrected,
        }));
    }
    Ok(json!({ "q": q, "m": m, "u": u, "conductor": ctx.n(), "rows": rows }).to_string())
}

/// G(χ, ψ) and the product G(χ)G(χ̄).
pub fn gauss_json(q: u64, m: u32, chi: u64) -> Result<String, String> {
    check_level(q, m)?;
    let s = LocalSetting::new(q, m).map_err(|e| e.to_string())?;
    let chi = MultChar { q, m, exponent: chi % s.phi() };
    let g = s.gauss_sum_q(&chi).map_err(|e| e.to_string())?;
    let gb = s.gauss_sum_q(&chi.inverse()).map_err(|e| e.to_string())?;
    let product = (&g * &gb).as_integer();
    Ok(json!({
        "q": q, "m": m, "chi": chi.exponent, "order": chi.order(), "conductor": s.conductor(),
        "gauss_sum": render_cyclo(&g),
        "product": product.map(|p| p.to_string()),
        "q_m": s.qm(),
    })
    .to_string())
}

fn parse_sign(sign: &str) -> Result<Sign, String> {
    match sign {
        "+" | "plus" => Ok(Sign::Plus),
        "-" | "minus" => Ok(Sign::Minus),
        _ => Err(format!("sign must be + or -, got {sign:?}")),
    }
}

/// `kind` is one of `delta`, `cor`, `interpolation`.
pub fn valuation_json(kind: &str, p: u64, t: u32, sign: &str, mu: i64, lambda: i64) -> Result<String, String> {
    let v = match kind {
        "delta" => thm_delta(p, t),
        "cor" => cor_val(parse_sign(sign)?, p, t, mu, lambda),
        "interpolation" => interpolation_factor(p, t, parse_sign(sign)?),
        _ => return Err(format!("unknown calculator {kind:?}")),
    }
    .map_err(|e| e.to_string())?;
    Ok(json!({ "kind": kind, "p": p, "t": t, "value": rational_to_string(&v) }).to_string())
}

#[wasm_bindgen]
pub fn toric_table(q: u32, m: u32, u: u32) -> Result<String, JsValue> {
    toric_table_json(q.into(), m, u.into()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn gauss(q: u32, m: u32, chi: u32) -> Result<String, JsValue> {
    gauss_json(q.into(), m, chi.into()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn valuation(kind: &str, p: u32, t: u32, sign: &str, mu: i32, lambda: i32) -> Result<String, JsValue> {
    valuation_json(kind, p.into(), t, sign, mu.into(), lambda.into()).map_err(|e| JsValue::from_str(&e))
}
