use cmperiods::iwasawa::{
    cor_val, cyclotomic_shifted, half_log, half_log_growth_slack, mu_lambda, omega_pm, planted_series,
    pollack_decompose, thm_b_a, thm_b_b, thm_delta, AlphaSeries, PadicSeries, SeriesFile, Sign,
};
use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Zero};
use proptest::prelude::*;

#[test]
fn omega_product_is_the_full_norm() {
    // T·ω⁺ω⁻ = (1+T)^{p^n} - 1
    for (p, n) in [(3u64, 3u32), (5, 2)] {
        let plus = omega_pm(p, n, Sign::Plus);
        let minus = omega_pm(p, n, Sign::Minus);
        let mut prod = vec![BigInt::zero(); plus.len() + minus.len()];
        for (i, a) in plus.iter().enumerate() {
            for (j, b) in minus.iter().enumerate() {
                prod[i + j + 1] += a * b;
            }
        }
        let pn = p.pow(n) as usize;
        let mut want = vec![BigInt::zero(); pn + 1];
        let mut c = BigInt::one();
        for (k, slot) in want.iter_mut().enumerate().skip(1) {
            c = c * BigInt::from(pn - k + 1) / BigInt::from(k);
            *slot = c.clone();
        }
        prod.resize(pn + 1, BigInt::zero());
        assert_eq!(prod, want);
    }
}

#[test]
fn mu_lambda_examples() {
    let f = PadicSeries::from_i64(3, 10, 10, &[9, 3, 1]);
    let inv = mu_lambda(&f).unwrap();
    assert_eq!((inv.mu, inv.lambda), (Some(0), Some(2)));
    let g = PadicSeries::from_i64(3, 10, 10, &[27, 9, 18]);
    let inv = mu_lambda(&g).unwrap();
    assert_eq!((inv.mu, inv.lambda), (Some(2), Some(1)));
    let z = PadicSeries::from_i64(3, 4, 10, &[81, 0, 162]);
    assert!(!mu_lambda(&z).unwrap().is_determinate());
}

#[test]
fn calculator_values() {
    assert_eq!(thm_delta(3, 2).unwrap(), Rational64::from_integer(-1));
    assert_eq!(cor_val(Sign::Plus, 3, 2, 0, 2).unwrap(), Rational64::from_integer(-2));
    assert!(thm_delta(3, 0).is_err());
    // part (b) only accepts the label ε = (-1)^{t-1}
    assert!(thm_b_b(5, 2, 2, 0, 0, 1).is_err());
    assert!(thm_b_b(5, 2, 2, 0, 0, -1).is_ok());
    assert!(thm_b_a(5, 2, 2, 0, 0).is_ok());
}

#[test]
fn half_log_factor_degrees() {
    // factor Φ_{3^k} has degree 2·3^{k-1}
    let index = |deg: &u64| (deg / 2).ilog(3) + 1;
    let f = half_log(3, Sign::Plus, 6, 40);
    let ks = f.factor_degrees().unwrap();
    assert!(!ks.is_empty() && ks.iter().all(|d| index(d) % 2 == 0));
    let g = half_log(3, Sign::Minus, 6, 40);
    let ks = g.factor_degrees().unwrap();
    assert!(!ks.is_empty() && ks.iter().all(|d| index(d) % 2 == 1));
    assert_eq!(cyclotomic_shifted(3, 1, None).len(), 3);
}

/// Observed growth witness: the worst `v_3(c_j) + ⌈log_3(j+1)⌉/2` on the plus half-log.
#[test]
fn half_log_growth_is_logarithmic() {
    let f = half_log(3, Sign::Plus, 10, 100);
    let slack = half_log_growth_slack(&f);
    assert!(slack >= Rational64::new(-3, 2), "slack {slack}");
}

#[test]
fn series_file_round_trip() {
    let f = planted_series(5, 8, 12, 1, 3, &[1, -2, 4], &[3]);
    let text = serde_json::to_string(&f.to_file()).unwrap();
    assert!(text.contains("\"M\":8") && text.contains("\"D\":12"));
    let back = PadicSeries::from_file(&serde_json::from_str::<SeriesFile>(&text).unwrap()).unwrap();
    assert_eq!(back, f);
}

fn planted(p: u64, mu: u32, lambda: usize, seed: &[i64]) -> PadicSeries {
    let r: Vec<i64> = (0..lambda).map(|i| seed[i % seed.len()]).collect();
    planted_series(p, 14, 40, mu, lambda, &r, &seed[..2])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn mu_lambda_additive_on_products(
        p in prop::sample::select(vec![3u64, 5, 7]),
        mu1 in 0u32..4, mu2 in 0u32..4, l1 in 0usize..15, l2 in 0usize..15,
        seed in prop::collection::vec(-30i64..30, 2..6),
    ) {
        let f = planted(p, mu1, l1, &seed);
        let g = planted(p, mu2, l2, &seed);
        let inv = mu_lambda(&f.mul(&g).unwrap()).unwrap();
        prop_assert_eq!(inv.mu, Some(mu1 + mu2));
        prop_assert_eq!(inv.lambda, Some(l1 + l2));
    }

    #[test]
    fn pollack_round_trip(
        plus in prop::collection::vec(-200i64..200, 1..12),
        minus in prop::collection::vec(-200i64..200, 1..12),
    ) {
        let (p, prec, deg) = (3u64, 10u32, 16usize);
        let tp = PadicSeries::from_i64(p, prec, deg, &plus);
        let tm = PadicSeries::from_i64(p, prec, deg, &minus);
        let lp = half_log(p, Sign::Plus, prec, deg);
        let lm = half_log(p, Sign::Minus, prec, deg);
        let a = AlphaSeries::assemble(&lp, &lm, &tp, &tm, 1);
        let dec = pollack_decompose(&a, &a.conj(), prec, deg).unwrap();
        prop_assert!(dec.reconstruction_exact);
        prop_assert_eq!(dec.theta_plus.coeffs(), tp.coeffs());
        prop_assert_eq!(dec.theta_minus.coeffs(), tm.coeffs());
    }

    #[test]
    fn consistency_grid_cells(p in prop::sample::select(vec![3u64, 5, 7]), t in 1u32..9, mu in 0i64..5, lam in 0i64..30, v in -2i64..3) {
        let cell = cmperiods::iwasawa::ConsistencyCell { p, t, mu_r: mu, lambda_r: lam, v };
        let (l, r) = cell.sides().unwrap();
        prop_assert_eq!(l, r);
        prop_assert_eq!(l, cell.rubin_side().unwrap());
    }
}

#[test]
fn pollack_rejects_non_conjugate_pair() {
    let lp = half_log(3, Sign::Plus, 6, 8);
    let lm = half_log(3, Sign::Minus, 6, 8);
    let one = PadicSeries::from_i64(3, 6, 8, &[1]);
    let a = AlphaSeries::assemble(&lp, &lm, &one, &one, 1);
    assert!(pollack_decompose(&a, &a, 6, 8).is_err());
    let _ = BigRational::zero();
}
