use cmperiods::characters::{
    is_fundamental_imaginary, mu_ell_invariant, quaternion_discriminant, xi_classifier, HeckeCharLocal, LocalSetting,
    MultChar,
};
use cmperiods::cyclotomic::{CycloElt, ValuationRat};
use num_rational::Rational64;
use proptest::prelude::*;

#[test]
fn selfdual_enumeration_matches_brute_force() {
    for (q, m) in [(3u64, 2u32), (3, 3), (5, 2)] {
        let s = LocalSetting::new(q, m).unwrap();
        let mut fast = s.enumerate_selfdual().unwrap();
        let mut brute = s.enumerate_selfdual_brute();
        fast.sort();
        brute.sort();
        assert_eq!(fast, brute);
        for lam in &fast {
            assert!(s.lambda_theta_sign(lam).is_ok());
        }
    }
}

#[test]
fn gauss_sum_scales_under_shifted_psi() {
    let s = LocalSetting::new(5, 2).unwrap();
    let n = s.conductor();
    for chi in s.primitive_chars() {
        let g = s.gauss_sum_q(&chi).unwrap();
        for c in [2u64, 3, 7, 24] {
            // G(χ, ψ(c·)) = χ̄(c)G(χ, ψ)
            let e = s.chi_exp(&chi.inverse(), c).unwrap();
            assert_eq!(s.gauss_sum_q_shifted(&chi, c), g.mul_root(e % n));
        }
    }
}

#[test]
fn gauss_sum_rejects_imprimitive() {
    let s = LocalSetting::new(3, 2).unwrap();
    let eta = s.quadratic_char();
    assert!(s.gauss_sum_q(&eta).is_err());
}

#[test]
fn jacobi_norm_is_q_power() {
    let s = LocalSetting::new(3, 3).unwrap();
    for chi in s.primitive_chars() {
        let j = s.jacobi(&chi).unwrap();
        // |J(χ,χ)|² = q^m for χ² primitive
        let jj = &j * &j.conj();
        assert_eq!(jj, CycloElt::from_int(s.conductor(), 27));
    }
}

#[test]
fn tamagawa_examples() {
    let s = LocalSetting::new(3, 2).unwrap();
    let triv = HeckeCharLocal { q: 3, m: 2, d: s.d(), exponents: [0, 0, 0] };
    assert_eq!(mu_ell_invariant(&triv, &s, 5), ValuationRat::Infinite);
    for lam in s.enumerate_selfdual().unwrap() {
        let order = lam.order(&s);
        let v = mu_ell_invariant(&lam, &s, 5);
        if order % 5 != 0 {
            assert_eq!(v, ValuationRat::zero());
        }
    }
    // a character of order exactly 3 has μ_3 = 1/2
    let cube = HeckeCharLocal { q: 3, m: 2, d: s.d(), exponents: [0, 0, 1] };
    assert_eq!(cube.order(&s), 3);
    assert_eq!(mu_ell_invariant(&cube, &s, 3), ValuationRat::Finite(Rational64::new(1, 2)));
}

#[test]
fn discriminant_examples() {
    assert_eq!(quaternion_discriminant(3).unwrap(), 3);
    assert_eq!(quaternion_discriminant(4).unwrap(), 2);
    assert_eq!(quaternion_discriminant(8).unwrap(), 2);
    assert_eq!(quaternion_discriminant(7).unwrap(), 7);
    assert!(quaternion_discriminant(12).is_err());
    assert!(is_fundamental_imaginary(20));
    assert!(!is_fundamental_imaginary(16));
}

#[test]
fn xi_examples() {
    assert_eq!(xi_classifier(-1, false, 2).unwrap(), -1);
    assert_eq!(xi_classifier(-1, false, 3).unwrap(), 1);
    for t in 0..6 {
        assert_eq!(xi_classifier(-1, true, t).unwrap(), -1);
    }
    assert!(xi_classifier(1, false, 0).is_err());
    assert!(xi_classifier(0, true, 1).is_err());
}

#[test]
fn character_json_layout() {
    let lam = HeckeCharLocal { q: 3, m: 2, d: 2, exponents: [2, 0, 1] };
    let text = serde_json::to_string(&lam).unwrap();
    assert_eq!(text, r#"{"q":3,"m":2,"d":2,"exponents":[2,0,1]}"#);
    assert_eq!(serde_json::from_str::<HeckeCharLocal>(&text).unwrap(), lam);
    let chi = MultChar { q: 5, m: 2, exponent: 3 };
    assert_eq!(serde_json::to_string(&chi).unwrap(), r#"{"q":5,"m":2,"exponent":3}"#);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gauss_product_is_signed_q_power(idx in 0usize..80) {
        let s = LocalSetting::new(5, 3).unwrap();
        let prims = s.primitive_chars();
        let chi = prims[idx % prims.len()];
        let g = s.gauss_sum_q(&chi).unwrap();
        let gb = s.gauss_sum_q(&chi.inverse()).unwrap();
        let sign = if chi.exponent.is_multiple_of(2) { 1 } else { -1 };
        prop_assert_eq!((&g * &gb).as_integer(), Some(sign * 125));
    }

    #[test]
    fn epsilon_twists_by_eta(idx in 0usize..72) {
        let s = LocalSetting::new(3, 4).unwrap();
        let lams = s.enumerate_selfdual().unwrap();
        let lam = lams[idx % lams.len()];
        let triv = MultChar { q: 3, m: 4, exponent: 0 };
        let e0 = s.epsilon_factor(&lam, &triv).unwrap().as_integer().unwrap();
        let e1 = s.epsilon_factor(&lam, &s.quadratic_char()).unwrap().as_integer().unwrap();
        // η(-1) = -1 at q = 3
        prop_assert_eq!(e1, e0);
        prop_assert_eq!(e0, s.root_number(&lam).unwrap() as i128);
    }
}
