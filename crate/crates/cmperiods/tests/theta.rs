use cmperiods::iwasawa::Sign;
use cmperiods::theta::{
    check_hecke_contract, generate_ss_tower, omega_division, pollack_cross_path, ss_norm_relation_check,
    toric_period_sum, trivial_char_plus, RingClassTower, ShimuraClass, ShimuraSetData, TowerFile, TowerStructure,
    TrivialCharCheck,
};
use num_bigint::BigInt;
use num_traits::One;
use proptest::prelude::*;

fn inert(h: u64) -> RingClassTower {
    RingClassTower::new(3, h, 4, TowerStructure::Inert).unwrap()
}

#[test]
fn tower_shape() {
    let t = inert(2);
    assert_eq!(t.cyclic_order(0), 1);
    assert_eq!(t.cyclic_order(1), 4);
    assert_eq!(t.cyclic_order(3), 36);
    assert_eq!(t.order(3), 72);
    let s = RingClassTower::new(5, 1, 3, TowerStructure::Split).unwrap();
    assert_eq!(s.cyclic_order(2), 20);
}

#[test]
fn perturbed_tower_breaks_the_contract() {
    let t = inert(2);
    for seed in 0..5 {
        let mut f = generate_ss_tower(&t, 6, seed);
        let idx = (seed as usize * 7) % f.levels[3].len();
        f.levels[3][idx] += BigInt::one();
        assert!(check_hecke_contract(&t, &f).is_err());
        assert!(ss_norm_relation_check(&t, &f).is_err());
    }
}

#[test]
fn split_tower_skips_the_trivial_character() {
    let t = RingClassTower::new(3, 2, 3, TowerStructure::Split).unwrap();
    let f = generate_ss_tower(&t, 6, 1);
    check_hecke_contract(&t, &f).unwrap();
    assert_eq!(trivial_char_plus(&t, &f), TrivialCharCheck::SkippedSplit);
}

#[test]
fn division_and_cross_path_on_more_seeds() {
    for seed in 20..30 {
        let t = inert(1 + seed % 2);
        let f = generate_ss_tower(&t, 6, seed);
        assert!(omega_division(&t, &f).unwrap().compatible);
        assert!(pollack_cross_path(&t, &f).unwrap().iter().all(|r| r.holds));
    }
}

#[test]
fn toric_period_at_trivial_character_is_the_class_sum() {
    let t = inert(2);
    let f = generate_ss_tower(&t, 6, 3);
    for n in 1..=4 {
        let total: BigInt = f.levels[n as usize].iter().sum();
        let p = toric_period_sum(&t, &f, n, (0, 0));
        assert_eq!(p.as_integer().map(BigInt::from), Some(total));
    }
}

#[test]
fn tower_file_round_trip() {
    let t = inert(3);
    let f = generate_ss_tower(&t, 6, 11);
    let file = TowerFile::from_tower(&t, &f, 6);
    let text = serde_json::to_string(&file).unwrap();
    let (t2, f2) = serde_json::from_str::<TowerFile>(&text).unwrap().to_tower().unwrap();
    assert_eq!(t2.order(4), t.order(4));
    assert_eq!(f2, f);
}

#[test]
fn eisenstein_detection() {
    let classes: Vec<ShimuraClass> = (0..6)
        .map(|i| ShimuraClass {
            weight: 1 + (i as u64 % 3),
            component: if i < 3 { Sign::Plus } else { Sign::Minus },
            fiber: Some(i % 2),
        })
        .collect();
    let data = ShimuraSetData::new(classes).unwrap();
    let f: Vec<BigInt> = [1, 2, 7, 3, 2, 8].iter().map(|&x| BigInt::from(x)).collect();
    let flags = data.eisenstein_mod_ell(&f, 5).unwrap();
    assert_eq!(flags.get("+"), Some(&false));
    assert_eq!(flags.get("-"), Some(&true));
    let plus = data.component_part(&f, Sign::Plus);
    assert_eq!(plus[3..], [BigInt::from(0), BigInt::from(0), BigInt::from(0)]);
    assert!(ShimuraSetData::new(vec![ShimuraClass { weight: 0, component: Sign::Plus, fiber: None }]).is_err());
}

proptest! {
    #[test]
    fn inner_product_ignores_class_order(
        rows in prop::collection::vec((1u64..6, -50i64..50, -50i64..50), 1..10),
        rot in 0usize..10,
    ) {
        let mk = |rows: &[(u64, i64, i64)]| {
            let data = ShimuraSetData::new(
                rows.iter().map(|r| ShimuraClass { weight: r.0, component: Sign::Plus, fiber: None }).collect(),
            ).unwrap();
            let f: Vec<BigInt> = rows.iter().map(|r| BigInt::from(r.1)).collect();
            let g: Vec<BigInt> = rows.iter().map(|r| BigInt::from(r.2)).collect();
            (data.inner_product(&f, &g).unwrap(), data.inner_product(&g, &f).unwrap())
        };
        let (a, a_sym) = mk(&rows);
        let mut rotated = rows.clone();
        rotated.rotate_left(rot % rows.len());
        let (b, _) = mk(&rotated);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a, a_sym);
    }
}
