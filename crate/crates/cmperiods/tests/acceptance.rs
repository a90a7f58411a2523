//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Exits 0 after printing every line so the rest of the workspace tests still run;
//! set `ACCEPTANCE_STRICT=1` to turn any FAIL into a nonzero exit.

use std::process::ExitCode;
use std::time::Instant;

use cmperiods::characters::{quaternion_discriminant, xi_classifier, LocalSetting, MultChar};
use cmperiods::cyclotomic::{CycloElt, EllReduction};
use cmperiods::iwasawa::{
    half_log, half_log_at_zeta, interpolation_factor, interpolation_factor_by_eval, mu_lambda, planted_series,
    reduce_at_zeta, thm_delta, zeta_valuation, ConsistencyCell, Poly, Sign,
};
use cmperiods::local_rings::{gcd, ipow, is_prime, quad_solution_count, ModRing};
use cmperiods::theta::{
    check_hecke_contract, check_up_eigen, generate_ss_tower, omega_division, pollack_cross_path, project_theta,
    ss_norm_relation_check, stabilize, theta_n, trivial_char_plus, Regime, RingClassTower, TowerStructure,
    TrivialCharCheck,
};
use cmperiods::toric_period::{ell_order_mod_q, ClosedForm, ToricContext};
use num_bigint::BigInt;
use num_rational::Rational64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

#[derive(Default)]
struct Tally {
    total: usize,
    stated: usize,
    corrected: usize,
}

fn master_identity() -> Outcome {
    let mut parts = Vec::new();
    let mut all = Tally::default();
    let mut errors = Vec::new();
    for (q, m) in [(3u64, 2u32), (3, 3), (5, 2), (7, 2)] {
        let ctx = ToricContext::new(q, m).expect("context");
        let mut t = Tally::default();
        for lam in ctx.setting().enumerate_selfdual().expect("enumerate") {
            let ld = ctx.lambda_data(&lam).expect("lambda data");
            for u in ctx.admissible_u() {
                t.total += 1;
                match (
                    ctx.master_identity(&ld, u, ClosedForm::Stated),
                    ctx.master_identity(&ld, u, ClosedForm::Corrected),
                ) {
                    (Ok(s), Ok(c)) => {
                        t.stated += s as usize;
                        t.corrected += c as usize;
                    }
                    (Err(e), _) | (_, Err(e)) => errors.push(format!("({q},{m}) u={u}: {e}")),
                }
            }
        }
        parts.push(format!("({q},{m}) stated {}/{} corrected {}/{}", t.stated, t.total, t.corrected, t.total));
        all.total += t.total;
        all.stated += t.stated;
        all.corrected += t.corrected;
    }
    let pass = errors.is_empty() && all.stated == all.total;
    let mut detail = format!("theorem_co_sum = (q+1)q^(m-1)·γ_closed; {}", parts.join("; "));
    if !pass {
        detail.push_str(
            "; the stated odd-m closed form (2q + λ(θ)(λ⁻¹(a0+θu)η(k) + λ⁻¹(-a0+θu)η(-k))√q*, scale (q²-1)q^(m-1)) \
             disagrees with the direct sum; the corrected form 2 - λ(θ)(λ⁻¹(a0+θu) + λ⁻¹(-a0+θu)) over (q²-1)q^(m-2) holds everywhere",
        );
    }
    if !errors.is_empty() {
        detail.push_str(&format!("; errors: {}", errors.join(", ")));
    }
    outcome(pass, detail)
}

fn f_v_closed_form() -> Outcome {
    let mut parts = Vec::new();
    let mut all = Tally::default();
    for (q, m) in [(3u64, 2u32), (3, 3), (3, 4), (5, 2), (5, 3)] {
        let ctx = ToricContext::new(q, m).expect("context");
        let mut vs = vec![1u64];
        if m % 2 == 1 {
            vs.extend(ctx.v_set());
        }
        let mut t = Tally::default();
        let qm = ipow(q, m);
        for u in ctx.admissible_u() {
            for &v in &vs {
                for a in 0..qm {
                    let direct = ctx.f_v_direct(u, v, a).expect("direct").as_integer();
                    let stated = ctx.f_v_closed(u, v, a, ClosedForm::Stated).expect("closed");
                    let corrected = ctx.f_v_closed(u, v, a, ClosedForm::Corrected).expect("closed");
                    t.total += 1;
                    t.stated += (direct == Some(stated)) as usize;
                    t.corrected += (direct == Some(corrected)) as usize;
                }
            }
        }
        parts.push(format!("({q},{m}) stated {}/{} corrected {}/{}", t.stated, t.total, t.corrected, t.total));
        all.total += t.total;
        all.stated += t.stated;
        all.corrected += t.corrected;
    }
    let pass = all.stated == all.total;
    let mut detail = format!("v ∈ {{1}} ∪ {{1 - q^(m-1)x²}} for odd m, v = 1 for even m; {}", parts.join("; "));
    if !pass {
        detail.push_str(
            "; at odd m the stated constant (q-1)q^(3(m-1)/2) is off by the sign η((v+a²-θ'²)/q^(m-1)), \
             which the corrected closed form carries",
        );
    }
    outcome(pass, detail)
}

fn js_identity() -> Outcome {
    let mut parts = Vec::new();
    let mut all = Tally::default();
    for (q, m) in [(3u64, 2u32), (3, 3), (5, 2)] {
        let ctx = ToricContext::new(q, m).expect("context");
        let mut vs = vec![1u64];
        vs.extend(ctx.v_set());
        vs.sort_unstable();
        vs.dedup();
        let mut t = Tally::default();
        for lam in ctx.setting().enumerate_selfdual().expect("enumerate") {
            let ld = ctx.lambda_data(&lam).expect("lambda data");
            for u in ctx.admissible_u() {
                for i in 0..ctx.primitive_chars().len() {
                    for &v in &vs {
                        let (lhs, stated, corrected) = ctx.js_sides(&ld, u, i, v).expect("js sides");
                        t.total += 1;
                        t.stated += (lhs == stated) as usize;
                        t.corrected += (lhs == corrected) as usize;
                    }
                }
            }
        }
        parts.push(format!("q^m={} stated χ(-4v) {}/{} with χ(-4v⁻¹) {}/{}", ipow(q, m), t.stated, t.total, t.corrected, t.total));
        all.total += t.total;
        all.stated += t.stated;
        all.corrected += t.corrected;
    }
    let pass = all.stated == all.total;
    let mut detail = format!("every self-dual λ, admissible u, primitive χ, v ≡ 1 mod q^(m-1); {}", parts.join("; "));
    if !pass {
        detail.push_str("; the stated side matches only at v = 1, the χ(-4v⁻¹) side matches every term");
    }
    outcome(pass, detail)
}

/// Histogram of `x² + 2bx mod n`, so every `c` is counted at once.
fn quad_histogram(n: u64, b: u64) -> Vec<u64> {
    let mut h = vec![0u64; n as usize];
    for x in 0..n {
        h[((x * x + 2 * b * x) % n) as usize] += 1;
    }
    h
}

fn quad_counts() -> Outcome {
    let mut pairs = 0usize;
    let mut bad = Vec::new();
    for q in (3..=241u64).filter(|&q| is_prime(q)) {
        let mut k = 1u32;
        while ipow(q, k) <= 243 {
            let n = ipow(q, k);
            for b in 0..n {
                let h = quad_histogram(n, b);
                for c in 0..n {
                    // x² + 2bx + c = 0  ⇔  x² + 2bx = -c
                    let want = h[((n - c) % n) as usize];
                    pairs += 1;
                    if quad_solution_count(q, k, b as i64, c as i64).ok() != Some(want) {
                        bad.push(format!("q={q} k={k} b={b} c={c}"));
                    }
                }
            }
            k += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(625);
    let n = 625u64;
    for _ in 0..200 {
        let (b, c) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let want = (0..n).filter(|x| (x * x + 2 * b * x + c) % n == 0).count() as u64;
        pairs += 1;
        if quad_solution_count(5, 4, b as i64, c as i64).ok() != Some(want) {
            bad.push(format!("q=5 k=4 b={b} c={c}"));
        }
    }
    let detail = format!("{pairs} pairs (all pairs for q^k ≤ 243, 200 sampled at 5⁴), {} mismatches {}", bad.len(), bad.iter().take(3).cloned().collect::<Vec<_>>().join(", "));
    outcome(bad.is_empty(), detail)
}

/// `G(χ)G(χ̄)` in the smallest field `Q(ζ_ord, ζ_q)`, `m = 1`.
fn gauss_product_minimal(q: u64, logs: &[u64], e: u64) -> Option<i128> {
    let phi = q - 1;
    let ord = phi / gcd(e, phi);
    let l = lcm(ord, q);
    let gauss = |e: u64| {
        let mut counts = vec![0i128; l as usize];
        for a in 1..q {
            let x = (e * logs[a as usize] % phi) / (phi / ord) * (l / ord) + a * (l / q);
            counts[(x % l) as usize] += 1;
        }
        CycloElt::from_exponent_counts(l, counts)
    };
    (&gauss(e) * &gauss((phi - e) % phi)).as_integer()
}

/// The same double sum regrouped by `c = a/b`: `Σ_c χ(c) Σ_b ζ_q^{b(c+1)}`, `m = 1`.
fn gauss_product_regrouped(q: u64, logs: &[u64], e: u64) -> Option<i128> {
    let phi = q - 1;
    let inner = |k: u64| {
        let mut counts = vec![0i128; q as usize];
        for b in 1..q {
            counts[(b * k % q) as usize] += 1;
        }
        CycloElt::from_exponent_counts(q, counts).as_integer().expect("rational")
    };
    let (r_zero, r_unit) = (inner(0), inner(1));
    let mut counts = vec![0i128; phi as usize];
    for c in 1..q {
        let r = if (c + 1) % q == 0 { r_zero } else { r_unit };
        counts[(e * logs[c as usize] % phi) as usize] += r;
    }
    CycloElt::from_exponent_counts(phi, counts).as_integer()
}

fn gauss_epsilon_laws() -> Outcome {
    let mut checked = [0usize; 3];
    let mut bad = Vec::new();
    // library path at every level used by the toric sweeps and all q^m ≤ 343 with m ≥ 2
    let settings: Vec<(u64, u32)> = vec![
        (3, 1), (5, 1), (7, 1), (11, 1), (13, 1),
        (3, 2), (3, 3), (3, 4), (3, 5), (5, 2), (5, 3), (7, 2), (7, 3), (11, 2), (13, 2), (17, 2),
    ];
    let mut eps_count = 0usize;
    for &(q, m) in &settings {
        let s = LocalSetting::new(q, m).expect("setting");
        let qm = ipow(q, m) as i128;
        for chi in s.primitive_chars() {
            let g = s.gauss_sum_q(&chi).expect("gauss");
            let gb = s.gauss_sum_q(&chi.inverse()).expect("gauss");
            let sign = if (chi.exponent * (s.phi() / 2)).is_multiple_of(s.phi()) { 1 } else { -1 };
            checked[0] += 1;
            if (&g * &gb).as_integer() != Some(sign * qm) {
                bad.push(format!("G(χ)G(χ̄) at ({q},{m}) exponent {}", chi.exponent));
            }
        }
        if m < 2 {
            continue;
        }
        let eta = s.quadratic_char();
        let eta_m1 = cmperiods::local_rings::legendre(-1, q) as i128;
        let triv = MultChar { q, m, exponent: 0 };
        for lam in s.enumerate_selfdual().expect("enumerate") {
            eps_count += 1;
            let t = s.lambda_theta_sign(&lam).expect("λ(θ)");
            let root = s.root_number(&lam).expect("root number");
            let e0 = s.epsilon_factor(&lam, &triv).expect("ε(π)").as_integer();
            let e1 = s.epsilon_factor(&lam, &eta).expect("ε(π⊗η)").as_integer();
            let sign_m = if m % 2 == 0 { 1 } else { -1 };
            if t.abs() != 1 || e0 != Some((sign_m * t) as i128) || root as i128 * sign_m as i128 != t as i128 {
                bad.push(format!("ε(π) at ({q},{m}) {:?}", lam.exponents));
            }
            if e0.zip(e1).map(|(a, b)| b == -eta_m1 * a) != Some(true) {
                bad.push(format!("ε(π⊗η) at ({q},{m}) {:?}", lam.exponents));
            }
        }
    }
    // remaining primes with q ≤ 343 at m = 1
    for q in (17..=343u64).filter(|&q| is_prime(q)) {
        let r = ModRing::new(q, 1).expect("ring");
        let logs: Vec<u64> = (0..q).map(|a| if a == 0 { 0 } else { r.dlog(a).expect("dlog") }).collect();
        for e in 1..q - 1 {
            let sign = if e % 2 == 0 { 1 } else { -1 };
            let (value, path) = if q <= 101 {
                (gauss_product_minimal(q, &logs, e), 1)
            } else {
                (gauss_product_regrouped(q, &logs, e), 2)
            };
            checked[path] += 1;
            if value != Some(sign * q as i128) {
                bad.push(format!("G(χ)G(χ̄) at q={q} exponent {e}"));
            }
        }
    }
    let detail = format!(
        "G(χ)G(χ̄)=χ(-1)q^m for {} characters ({} in the local setting field, {} in Q(ζ_ord,ζ_q), {} by the regrouped double sum for 101 < q ≤ 337, m = 1); \
         ε(π)=(-1)^m λ(θ) ∈ {{±1}} and ε(π⊗η)=-η(-1)ε(π) for {eps_count} self-dual λ over q^m ≤ 343; {} failures {}",
        checked.iter().sum::<usize>(),
        checked[0],
        checked[1],
        checked[2],
        bad.len(),
        bad.iter().take(3).cloned().collect::<Vec<_>>().join(", ")
    );
    outcome(bad.is_empty(), detail)
}

fn non_vanishing() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (q, m, ells) in [(3u64, 2u32, vec![5u64, 7, 11, 13]), (5, 2, vec![7, 11, 13]), (3, 3, vec![5, 7])] {
        let ctx = ToricContext::new(q, m).expect("context");
        let reds: Vec<EllReduction> = ells.iter().map(|&l| EllReduction::new(ctx.n(), l).expect("reduction")).collect();
        let lams = ctx.setting().enumerate_selfdual().expect("enumerate");
        let (mut rows, mut vanish, mut agree, mut lam_ok) = (0usize, 0usize, 0usize, 0usize);
        let mut unit_ok = vec![0usize; ells.len()];
        for lam in &lams {
            let ld = ctx.lambda_data(lam).expect("lambda data");
            let rep = ctx.cml_report(&ld, &ctx.admissible_u(), &reds, ClosedForm::Corrected).expect("report");
            lam_ok += rep.some_nonvanishing() as usize;
            for (i, &l) in ells.iter().enumerate() {
                unit_ok[i] += rep.some_unit_everywhere(l) as usize;
            }
            for r in &rep.rows {
                rows += 1;
                vanish += r.vanishes as usize;
                let pred = r.exceptional.predicate_divides_2();
                agree += (r.vanishes == pred && pred == r.exceptional.predicate_exact_2()) as usize;
            }
        }
        let units: Vec<String> = ells.iter().zip(&unit_ok).map(|(l, k)| format!("ℓ={l}: {k}/{}", lams.len())).collect();
        if m % 2 == 0 {
            pass &= agree == rows && lam_ok == lams.len();
            parts.push(format!(
                "({q},{m}) {vanish}/{rows} vanish, exceptional set matches {agree}/{rows}, λ with γ≠0 for some u {lam_ok}/{}, ℓ-unit everywhere {}",
                lams.len(),
                units.join(" ")
            ));
        } else {
            let eligible: Vec<u64> = ells.iter().copied().filter(|&l| ell_order_mod_q(l, q).is_some_and(|o| o >= 5)).collect();
            let eligible_ok = ells.iter().zip(&unit_ok).filter(|(l, _)| eligible.contains(l)).all(|(_, &k)| k == lams.len());
            pass &= eligible_ok && lam_ok == lams.len();
            parts.push(format!(
                "({q},{m}) λ with γ≠0 for some u {lam_ok}/{}; no ℓ has order ≥ 5 mod {q}, so the ℓ-unit clause is vacuous; informative {}",
                lams.len(),
                units.join(" ")
            ));
        }
    }
    outcome(pass, parts.join("; "))
}

fn iwasawa_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut planted_ok = 0;
    for _ in 0..100 {
        let p = [3u64, 5, 7][rng.gen_range(0..3)];
        let (prec, deg) = (8u32, 30usize);
        let mu = rng.gen_range(0..prec - 1);
        let lambda = rng.gen_range(0..deg - 1);
        let r: Vec<i64> = (0..lambda).map(|_| rng.gen_range(-20..20)).collect();
        let s: Vec<i64> = (0..5).map(|_| rng.gen_range(-20..20)).collect();
        let f = planted_series(p, prec, deg, mu, lambda, &r, &s);
        let inv = mu_lambda(&f).expect("mu lambda");
        planted_ok += (inv.mu == Some(mu) && inv.lambda == Some(lambda)) as usize;
    }
    let mut asym_ok = 0;
    let mut asym_total = 0;
    for t in [3u32, 4] {
        let e = (2 * ipow(3, t - 1)) as i64;
        for _ in 0..10 {
            let mu = rng.gen_range(0..3u32);
            let lambda = rng.gen_range(0..e as usize);
            let r: Vec<i64> = (0..lambda).map(|_| rng.gen_range(-9..9)).collect();
            let s: Vec<i64> = (0..4).map(|_| rng.gen_range(-9..9)).collect();
            let f = planted_series(3, 12, 400, mu, lambda, &r, &s);
            asym_total += 1;
            let want = Rational64::from_integer(mu as i64) + Rational64::new(lambda as i64, e);
            if let Ok(z) = f.eval_at_zeta(t) {
                asym_ok += (z.valuation == Some(want)) as usize;
            }
        }
    }
    let mut hl_ok = 0;
    let mut hl_total = 0;
    for sign in [Sign::Plus, Sign::Minus] {
        let f = half_log(3, sign, 12, 81);
        for t in 1..=3u32 {
            hl_total += 1;
            let closed = half_log_at_zeta(3, sign, t);
            let series = reduce_at_zeta(f.coeffs(), 3, t);
            let diff: Poly = series.iter().zip(&closed).map(|(a, b)| a - b).collect();
            let bound = f.tail_bound(t).expect("tail bound");
            hl_ok += zeta_valuation(&diff, 3, t).is_none_or(|v| v >= bound) as usize;
        }
    }
    let pass = planted_ok == 100 && asym_ok == asym_total && hl_ok == hl_total;
    outcome(
        pass,
        format!(
            "μ/λ recovered on {planted_ok}/100 planted series; v_3(f(ζ-1)) = μ + λ/(3^(t-1)·2) on {asym_ok}/{asym_total} (t ∈ {{3,4}}); \
             half-log closed vs series within the certified tail on {hl_ok}/{hl_total} (t ≤ 3, both signs)"
        ),
    )
}

fn theta_suite() -> Outcome {
    let mut counts = [0usize; 6];
    let mut bad = Vec::new();
    for seed in 0..20u64 {
        let h = 1 + seed % 3;
        let tower = RingClassTower::new(3, h, 4, TowerStructure::Inert).expect("tower");
        let f = generate_ss_tower(&tower, 6, seed);
        let ok_contract = check_hecke_contract(&tower, &f).is_ok() && ss_norm_relation_check(&tower, &f).is_ok();
        let ok_div = omega_division(&tower, &f).map(|pm| pm.compatible).unwrap_or(false);
        let ok_triv = trivial_char_plus(&tower, &f) == TrivialCharCheck::Value(BigInt::zero());
        let st = stabilize(&tower, &f, None, Regime::PCoprimeToN).expect("stabilize");
        let ok_up = check_up_eigen(&tower, &st);
        let ok_proj = (1..4).all(|n| {
            let up = theta_n(&tower, &st, n + 1).expect("theta");
            project_theta(&tower, &up).coeffs == theta_n(&tower, &st, n).expect("theta").coeffs
        });
        let ok_cross = pollack_cross_path(&tower, &f).map(|rows| rows.iter().all(|r| r.holds)).unwrap_or(false);
        for (i, ok) in [ok_contract, ok_div, ok_triv, ok_up, ok_proj, ok_cross].into_iter().enumerate() {
            counts[i] += ok as usize;
            if !ok {
                bad.push(format!("seed {seed} check {i}"));
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "20 inert towers p=3 n_max=4 M=6: norm relation {}/20, ω-divisibility with compatible quotients {}/20, 1(Θ⁺)=0 {}/20, \
             U_p eigenvector {}/20, projection compatibility {}/20, cross-path reconstruction {}/20",
            counts[0], counts[1], counts[2], counts[3], counts[4], counts[5]
        ),
    )
}

fn valuation_grid() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut cells = 0usize;
    let mut bad = Vec::new();
    for p in [3u64, 5, 7] {
        for t in 1..=8u32 {
            for _ in 0..50 {
                let cell = ConsistencyCell {
                    p,
                    t,
                    mu_r: rng.gen_range(0..6),
                    lambda_r: rng.gen_range(0..40),
                    v: rng.gen_range(-3..4),
                };
                cells += 1;
                let ok = match (cell.sides(), cell.rubin_side()) {
                    (Ok((l, r)), Ok(rb)) => l == r && l == rb,
                    _ => false,
                };
                if !ok {
                    bad.push(format!("{cell:?}"));
                }
            }
        }
    }
    let delta_ok = thm_delta(3, 2).ok() == Some(Rational64::from_integer(-1));
    let mut interp = 0usize;
    let mut interp_bad = 0usize;
    for p in [3u64, 5, 7] {
        for t in 1..=4u32 {
            let sign = if t % 2 == 0 { Sign::Plus } else { Sign::Minus };
            if ipow(p, t - 1) > 200 {
                continue;
            }
            if let (Ok(a), Ok(b)) = (interpolation_factor(p, t, sign), interpolation_factor_by_eval(p, t, sign)) {
                interp += 1;
                interp_bad += (a != b) as usize;
            }
        }
    }
    let pass = bad.is_empty() && delta_ok && interp_bad == 0 && interp > 0;
    outcome(
        pass,
        format!(
            "{} of {cells} grid cells equal on all three routes; thm_delta(3,2) = -1: {delta_ok}; interpolation factor vs Φ-product evaluation {}/{interp}",
            cells - bad.len(),
            interp - interp_bad
        ),
    )
}

fn plumbing() -> Outcome {
    let disc: Vec<(u64, u64)> = vec![(3, 3), (4, 2), (8, 2)];
    let disc_ok = disc.iter().all(|&(dk, db)| quaternion_discriminant(dk).ok() == Some(db));
    let mut rows = 0;
    let mut rows_ok = 0;
    for eps in [1i8, -1] {
        for split in [true, false] {
            for t_cond in 1..=5u32 {
                let want = if split || t_cond.is_multiple_of(2) { eps } else { -eps };
                rows += 1;
                rows_ok += (xi_classifier(eps, split, t_cond).ok() == Some(want)) as usize;
            }
        }
    }
    let inert_zero_rejected = xi_classifier(1, false, 0).is_err();
    outcome(
        disc_ok && rows_ok == rows && inert_zero_rejected,
        format!("D_K=3→3, 4→2, 8→2: {disc_ok}; ξ parity rows {rows_ok}/{rows}; inert t_cond=0 rejected: {inert_zero_rejected}"),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("master toric-period identity", master_identity),
        ("direct vs closed F_v", f_v_closed_form),
        ("twisted Gauss-sum reduction termwise", js_identity),
        ("quadratic root counts", quad_counts),
        ("Gauss and epsilon laws", gauss_epsilon_laws),
        ("non-vanishing and ℓ-units", non_vanishing),
        ("Iwasawa suite", iwasawa_suite),
        ("theta suite", theta_suite),
        ("valuation-formula consistency", valuation_grid),
        ("discriminants and ξ classifier", plumbing),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {}: {tag} {name} [{:.1}s]: {}", i + 1, start.elapsed().as_secs_f64(), o.detail);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    println!("acceptance: {}/10 PASS; FAIL: {:?}", 10 - failed.len(), failed);
    if !failed.is_empty() && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
