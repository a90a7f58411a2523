use cmperiods::characters::LocalSetting;
use cmperiods::local_rings::{ipow, QuadExtRing};
use cmperiods::toric_period::{fact_f_closed, fact_f_direct, ClosedForm, ToricContext, ToricPeriodRecord};

#[test]
fn primitive_character_sum_three_cases() {
    for (q, m) in [(3u64, 2u32), (5, 2), (3, 3)] {
        let s = LocalSetting::new(q, m).unwrap();
        for a in s.base().units_iter() {
            assert_eq!(fact_f_direct(&s, a).unwrap(), fact_f_closed(q, m, a), "q={q} m={m} a={a}");
        }
    }
}

#[test]
fn stated_and_corrected_agree_at_even_level() {
    let ctx = ToricContext::new(5, 2).unwrap();
    for lam in ctx.setting().enumerate_selfdual().unwrap() {
        let ld = ctx.lambda_data(&lam).unwrap();
        for u in ctx.admissible_u() {
            let a = ctx.gamma_closed(&ld, u, ClosedForm::Stated).unwrap();
            let b = ctx.gamma_closed(&ld, u, ClosedForm::Corrected).unwrap();
            assert_eq!(a.gamma(), b.gamma());
        }
    }
}

#[test]
fn stated_form_fails_at_odd_level() {
    let ctx = ToricContext::new(3, 3).unwrap();
    let lam = ctx.setting().enumerate_selfdual().unwrap()[0];
    let ld = ctx.lambda_data(&lam).unwrap();
    let u = ctx.admissible_u()[0];
    assert!(!ctx.master_identity(&ld, u, ClosedForm::Stated).unwrap());
    assert!(ctx.master_identity(&ld, u, ClosedForm::Corrected).unwrap());
}

#[test]
fn gamma_is_even_in_u() {
    for (q, m) in [(3u64, 2u32), (5, 2), (3, 3)] {
        let ctx = ToricContext::new(q, m).unwrap();
        let qm = ipow(q, m);
        for lam in ctx.setting().enumerate_selfdual().unwrap() {
            let ld = ctx.lambda_data(&lam).unwrap();
            for u in ctx.admissible_u() {
                let plus = ctx.gamma_closed(&ld, u, ClosedForm::Corrected).unwrap().gamma();
                let minus = ctx.gamma_closed(&ld, qm - u, ClosedForm::Corrected).unwrap().gamma();
                assert_eq!(plus, minus);
            }
        }
    }
}

#[test]
fn lift_of_u_changes_gamma_but_not_the_identity() {
    let (q, m) = (5u64, 2u32);
    let ctx = ToricContext::new(q, m).unwrap();
    let mut distinct = 0;
    for lam in ctx.setting().enumerate_selfdual().unwrap() {
        let ld = ctx.lambda_data(&lam).unwrap();
        for u in ctx.admissible_u() {
            let base = ctx.gamma_closed(&ld, u, ClosedForm::Corrected).unwrap().gamma();
            for j in 1..q {
                let lift = u + j * q;
                assert!(ctx.master_identity(&ld, lift, ClosedForm::Corrected).unwrap());
                distinct += (ctx.gamma_closed(&ld, lift, ClosedForm::Corrected).unwrap().gamma() != base) as usize;
            }
        }
    }
    assert!(distinct > 0);
}

/// `θ ↦ sθ` with `s` a non-square unit: the identity survives, and the values at `u`
/// are the values for the old `θ` at `su`.
#[test]
fn rescaled_theta_matches_rescaled_u() {
    for (q, m, s) in [(3u64, 2u32, 2u64), (5, 2, 2), (3, 3, 2)] {
        let ctx = ToricContext::new(q, m).unwrap();
        let qm = ipow(q, m);
        let d2 = ctx.setting().d() * s * s % qm;
        let ring = QuadExtRing::with_d(q, m, d2).unwrap();
        let ctx2 = ToricContext::from_setting(LocalSetting::from_ring(ring).unwrap()).unwrap();
        for u in ctx2.admissible_u() {
            let mut new: Vec<Vec<i128>> = Vec::new();
            for lam in ctx2.setting().enumerate_selfdual().unwrap() {
                let ld = ctx2.lambda_data(&lam).unwrap();
                assert!(ctx2.master_identity(&ld, u, ClosedForm::Corrected).unwrap());
                new.push(ctx2.theorem_co_sum(&ld, u).unwrap().num.coeffs().to_vec());
            }
            let mut old: Vec<Vec<i128>> = Vec::new();
            for lam in ctx.setting().enumerate_selfdual().unwrap() {
                let ld = ctx.lambda_data(&lam).unwrap();
                old.push(ctx.theorem_co_sum(&ld, s * u % qm).unwrap().num.coeffs().to_vec());
            }
            new.sort();
            old.sort();
            assert_eq!(new, old, "q={q} m={m} u={u}");
        }
    }
}

#[test]
fn f_v_closed_even_level_out_of_scope_for_v_not_one() {
    let ctx = ToricContext::new(3, 3).unwrap();
    let u = ctx.admissible_u()[0];
    let v = ctx.v_set()[0];
    assert!(ctx.f_v_closed(u, v, 0, ClosedForm::Corrected).is_ok());
    let even = ToricContext::new(5, 2).unwrap();
    let ue = even.admissible_u()[0];
    assert!(even.f_v_closed(ue, 6, 0, ClosedForm::Corrected).is_err());
}

#[test]
fn part_two_rejects_even_level() {
    let ctx = ToricContext::new(3, 2).unwrap();
    let lam = ctx.setting().enumerate_selfdual().unwrap()[0];
    let ld = ctx.lambda_data(&lam).unwrap();
    assert!(ctx.mm_ii_direct(&ld, ctx.admissible_u()[0]).is_err());
}

#[test]
fn record_round_trips_through_json() {
    let ctx = ToricContext::new(3, 2).unwrap();
    let lam = ctx.setting().enumerate_selfdual().unwrap()[1];
    let ld = ctx.lambda_data(&lam).unwrap();
    let r = ctx.gamma_closed(&ld, ctx.admissible_u()[0], ClosedForm::Corrected).unwrap();
    let rec = ToricPeriodRecord::from(&r);
    let text = serde_json::to_string(&rec).unwrap();
    let back: ToricPeriodRecord = serde_json::from_str(&text).unwrap();
    assert_eq!(back.gamma_scaled_coeffs, rec.gamma_scaled_coeffs);
    assert_eq!(back.lambda, rec.lambda);
    assert!(text.contains("\"form\":\"corrected\""));
}
