use crpoint::homotopy::{certify, normal_form_path, HomotopyPath};
use crpoint::levi::{model_field, restricted_levi_check, sample_point, ModelKind};
use crpoint::quadric::{
    classification_determinant, classify, direct_sum, g_act, lai_count, random_pair, PointClass,
};
use crpoint::{json, random, ClassTag, GElement, QuadricPair};
use proptest::prelude::*;

fn round_trip<T>(value: &T) -> T
where
    T: serde::Serialize + serde::de::DeserializeOwned,
{
    let text = json::to_string(value).unwrap();
    serde_json::from_str(&text).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pair_json_round_trip_is_exact(n in 1usize..5, seed in any::<u64>()) {
        let pair = random_pair(n, seed, None).unwrap();
        prop_assert_eq!(round_trip(&pair), pair);
    }

    #[test]
    fn point_class_json_round_trip_is_exact(n in 1usize..5, seed in any::<u64>()) {
        let class = classify(&random_pair(n, seed, None).unwrap()).unwrap();
        prop_assert_eq!(round_trip(&class), class);
    }

    #[test]
    fn g_element_json_round_trip_is_exact(n in 1usize..5, seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let g = GElement::new(random::unit_phase(&mut rng), random::well_conditioned(&mut rng, n, 0.5)).unwrap();
        prop_assert_eq!(round_trip(&g), g);
    }

    #[test]
    fn determinant_scales_by_fourth_power_of_det_p(n in 1usize..5, seed in any::<u64>()) {
        let pair = random_pair(n, seed, None).unwrap();
        let mut rng = random::rng(seed ^ 0x5eed);
        let g = GElement::new(random::unit_phase(&mut rng), random::well_conditioned(&mut rng, n, 0.5)).unwrap();
        let before = classification_determinant(&pair).unwrap();
        let after = classification_determinant(&g_act(&g, &pair).unwrap()).unwrap();
        let factor = g.p().det().unwrap().norm().powi(4);
        prop_assert!((after - factor * before).abs() <= 1e-9 * (1.0 + after.abs()));
    }

    #[test]
    fn direct_sum_multiplies_determinants(n1 in 1usize..4, n2 in 1usize..4, seed in any::<u64>()) {
        let p1 = random_pair(n1, seed, None).unwrap();
        let p2 = random_pair(n2, seed.wrapping_add(1), None).unwrap();
        let d = classification_determinant(&direct_sum(&p1, &p2)).unwrap();
        let prod = classification_determinant(&p1).unwrap() * classification_determinant(&p2).unwrap();
        prop_assert!((d - prod).abs() <= 1e-9 * (1.0 + prod.abs()));
    }

    #[test]
    fn negated_p_acts_identically(n in 1usize..5, seed in any::<u64>()) {
        let pair = random_pair(n, seed, None).unwrap();
        let mut rng = random::rng(seed);
        let zeta = random::unit_phase(&mut rng);
        let p = random::well_conditioned(&mut rng, n, 0.5);
        let plus = g_act(&GElement::new(zeta, p.clone()).unwrap(), &pair).unwrap();
        let minus = g_act(&GElement::new(zeta, p.scale_real(-1.0)).unwrap(), &pair).unwrap();
        prop_assert!(plus.dist(&minus) <= 1e-14 * plus.magnitude());
    }
}

#[test]
fn homotopy_path_json_round_trip_recertifies() {
    for seed in 0..6u64 {
        let n = 1 + (seed % 3) as usize;
        let pair = random_pair(n, 300 + seed, None).unwrap();
        let path = normal_form_path(&pair, seed).unwrap();
        let back: HomotopyPath = round_trip(&path);
        assert_eq!(back, path);
        let cert = certify(&back, 401, crpoint::tol::CERTIFY_TOL).unwrap();
        assert!(cert.pass, "seed {seed}");
    }
}

#[test]
fn lai_count_of_mixed_corpus() {
    let classes: Vec<PointClass> = (0..40)
        .map(|s| classify(&random_pair(2, s, None).unwrap()).unwrap())
        .collect();
    let e = classes.iter().filter(|c| c.tag == ClassTag::Elliptic).count() as i64;
    let h = classes.iter().filter(|c| c.tag == ClassTag::Hyperbolic).count() as i64;
    assert_eq!(e + h, 40);
    assert_eq!(lai_count(&classes).unwrap(), e - h);
}

#[test]
fn degenerate_band_ignores_overall_scale() {
    let pair = random_pair(5, 17, None).unwrap();
    let tag = classify(&pair).unwrap().tag;
    for s in [1e-3, 1e3] {
        let (a, b) = pair.clone().into_parts();
        let scaled = QuadricPair::new(a.scale_real(s), b.scale_real(s)).unwrap();
        assert_eq!(classify(&scaled).unwrap().tag, tag);
    }
}

#[test]
fn restricted_levi_is_positive_on_all_squares_surface() {
    let field = model_field(ModelKind::AllSquares, 3).unwrap();
    let mut rng = random::rng(9);
    let mut checked = 0;
    for _ in 0..200 {
        let p = sample_point(ModelKind::AllSquares, 3, true, 0.0, &mut rng);
        let r = restricted_levi_check(ModelKind::AllSquares, &field, &p, 1e-9).unwrap();
        if !r.vacuous {
            assert!(r.value > 0.0, "{r:?}");
            checked += 1;
        }
    }
    assert!(checked > 150);
}
