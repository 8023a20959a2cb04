use proptest::prelude::*;
use ssc_core::geometry::GeometryReport;
use ssc_core::theory::{
    deterministic_conditions, fully_random_conditions, random_noise_conditions,
    semirandom_advisory, Guarantee, RangeConstants, SemirandomParams,
};

fn report(r: Vec<f64>, mu: Vec<f64>, delta: f64, delta1: f64) -> GeometryReport {
    let l = r.len();
    GeometryReport {
        lambda: 1.0,
        r_min: r.iter().copied().fold(f64::INFINITY, f64::min),
        r,
        mu,
        delta: Some(delta),
        delta1: Some(delta1),
        affinity: vec![vec![0.0; l]; l],
        skipped_columns: vec![],
        dims: vec![2; l],
        inradius_upper_bound: true,
        proxy: false,
    }
}

#[test]
fn deterministic_noiseless_range_is_one_over_r_to_infinity() {
    let v = deterministic_conditions(&report(vec![0.5], vec![0.2], 0.0, 0.0)).unwrap();
    assert!((v.range.lower.unwrap() - 2.0).abs() < 1e-15);
    assert!(v.range.unbounded_above && v.range.upper.is_none());
    assert!(v.range.nonempty && v.gap_ok);
    assert_eq!(v.range.theorem, Guarantee::Deterministic);
    assert!(v.range.contains(1e12) && !v.range.contains(2.0));
}

#[test]
fn deterministic_example_with_too_much_noise_is_empty() {
    let v = deterministic_conditions(&report(vec![0.5], vec![0.2], 0.1, 0.1)).unwrap();
    assert!((v.range.lower.unwrap() - 3.448_275_862).abs() < 1e-6);
    assert!((v.range.upper.unwrap() - 0.378_787_878).abs() < 1e-6);
    assert!(!v.range.nonempty);
    assert!((v.delta_bound - 0.027_272_727).abs() < 1e-6);
    assert!(!v.gap_ok);
    let rho = v.rho.lower.unwrap();
    assert!((rho - 3.448_275_862 * 0.11).abs() < 1e-6);
}

#[test]
fn deterministic_range_is_nonempty_just_inside_the_noise_bound() {
    let bound = 0.5 * 0.3 / 5.5;
    let d = bound - 1e-9;
    let v = deterministic_conditions(&report(vec![0.5], vec![0.2], d, d)).unwrap();
    assert!(v.gap_ok && v.range.nonempty, "{:?}", v.range);
    let mid = v.range.geometric_midpoint().unwrap();
    assert!(v.range.contains(mid));
}

#[test]
fn deterministic_rejects_bad_reports() {
    assert!(deterministic_conditions(&report(vec![0.0], vec![0.1], 0.1, 0.1)).is_err());
    assert!(deterministic_conditions(&report(vec![0.4], vec![f64::NAN], 0.1, 0.1)).is_err());
    let mut rep = report(vec![0.4], vec![0.1], 0.1, 0.1);
    rep.delta = None;
    assert!(deterministic_conditions(&rep).is_err());
}

#[test]
fn random_noise_noiseless_reduction() {
    let v = random_noise_conditions(
        &report(vec![0.4, 0.5], vec![0.1, 0.1], 0.0, 0.0),
        100,
        63,
        &[4, 4],
    )
    .unwrap();
    assert!(v.cond1 && v.cond2);
    assert!((v.range.lower.unwrap() - 2.5).abs() < 1e-15);
    assert!(v.range.unbounded_above && v.range.nonempty);
}

#[test]
fn random_noise_example_values() {
    let v =
        random_noise_conditions(&report(vec![0.4], vec![0.1], 0.3, 0.3), 100, 63, &[4]).unwrap();
    assert!((v.epsilon - 0.508_867_291_5).abs() < 1e-9);
    assert!(!v.cond1 && !v.cond2);
    assert!((v.range.lower.unwrap() - 20.457_608_538).abs() < 1e-6);
    assert!((v.range.upper.unwrap() + 0.257_228_340_7).abs() < 1e-6);
    assert!(!v.range.nonempty);
    assert!(!(v.cond1 && v.cond2) || v.range.nonempty);
    assert_eq!(v.range.inputs_echo.epsilon, Some(v.epsilon));
}

#[test]
fn random_noise_rejects_n_not_above_dimension() {
    let rep = report(vec![0.4], vec![0.1], 0.1, 0.1);
    assert!(random_noise_conditions(&rep, 4, 63, &[4]).is_err());
    assert!(random_noise_conditions(&rep, 10, 63, &[4, 4]).is_err());
}

#[test]
fn fully_random_example_values() {
    let v = fully_random_conditions(100, 4, 3, 5.0, 0.2, RangeConstants::default()).unwrap();
    assert_eq!(v.big_n, 63.0);
    assert!((v.dim_bound - 0.202_322_388_26).abs() < 1e-9);
    assert!((v.sigma_bound - 0.025_147_467_38).abs() < 1e-9);
    assert!(!v.dim_ok && !v.sigma_ok);
    assert!((v.range.lower.unwrap() - 4.459_004_138).abs() < 1e-6);
    assert!((v.range.upper.unwrap() - 5.508_934_401).abs() < 1e-6);
    assert!(v.range.nonempty && v.advisory);
    let again = fully_random_conditions(100, 4, 3, 5.0, 0.2, RangeConstants::default()).unwrap();
    assert_eq!(v, again);
}

#[test]
fn fully_random_zero_noise_is_always_within_bound() {
    for &(n, d, l, kappa) in &[(10, 1, 2, 2.0), (100, 4, 3, 5.0), (400, 10, 8, 20.0)] {
        let v = fully_random_conditions(n, d, l, kappa, 0.0, RangeConstants::default()).unwrap();
        assert!(v.sigma_ok && v.range.unbounded_above);
    }
}

#[test]
fn fully_random_requires_kappa_at_least_two() {
    assert!(fully_random_conditions(100, 4, 3, 1.5, 0.1, RangeConstants::default()).is_err());
    assert!(fully_random_conditions(100, 4, 3, 2.0, 0.1, RangeConstants::default()).is_ok());
}

#[test]
fn quadrupling_n_doubles_sigma_bound() {
    for &(n, d, l, kappa) in &[(100, 4, 3, 5.0), (37, 2, 5, 3.5)] {
        let a = fully_random_conditions(n, d, l, kappa, 0.1, RangeConstants::default()).unwrap();
        let b =
            fully_random_conditions(4 * n, d, l, kappa, 0.1, RangeConstants::default()).unwrap();
        assert!((b.sigma_bound / a.sigma_bound - 2.0).abs() < 1e-12);
    }
}

fn semi_report(aff: f64) -> GeometryReport {
    let mut rep = report(vec![0.5, 0.5], vec![0.1, 0.1], 0.001, 0.001);
    rep.affinity = vec![vec![2f64.sqrt(), aff], vec![aff, 2f64.sqrt()]];
    rep
}

fn semi_params() -> SemirandomParams {
    SemirandomParams {
        n: 50,
        counts: vec![10, 10],
        dims: vec![2, 2],
        t: 1.0,
    }
}

#[test]
fn semirandom_orthogonal_subspaces_give_the_full_bound() {
    let adv = semirandom_advisory(&semi_report(0.0), &semi_params()).unwrap();
    assert!((adv.bound - 0.008_218_976_592).abs() < 1e-10);
    assert_eq!(adv.bound, adv.conservative_bound);
    assert!(adv.feasible && adv.advisory);
    assert_eq!(adv.satisfied, Some(true));
    assert!((adv.pairs[0].k1 * adv.pairs[0].k2 - 17.006_064_847).abs() < 1e-6);
}

#[test]
fn semirandom_identical_subspaces_are_infeasible() {
    let adv = semirandom_advisory(&semi_report(2f64.sqrt()), &semi_params()).unwrap();
    assert!(adv.bound <= 0.0 && !adv.feasible);
    assert_eq!(adv.satisfied, Some(false));
}

#[test]
fn semirandom_rejects_kappa_at_most_one() {
    let mut p = semi_params();
    p.counts = vec![2, 10];
    assert!(semirandom_advisory(&semi_report(0.1), &p).is_err());
}

#[test]
fn report_serializes_range_fields() {
    let v = deterministic_conditions(&report(vec![0.5], vec![0.2], 0.0, 0.0)).unwrap();
    let json = serde_json::to_value(&v).unwrap();
    assert_eq!(json["range"]["unbounded_above"], true);
    assert!(json["range"]["upper"].is_null());
    assert_eq!(json["range"]["theorem"], "deterministic");
    assert!(json["rho"].is_object());
}

fn geometry() -> impl Strategy<Value = (Vec<(f64, f64)>, f64, f64)> {
    (
        prop::collection::vec((0.05f64..1.0, 0.0f64..1.0), 1..5),
        0.0f64..1.0,
        0.0f64..1.0,
    )
        .prop_map(|(pairs, a, b)| {
            let pairs = pairs.into_iter().map(|(r, frac)| (r, r * frac)).collect();
            (pairs, a, b)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn gap_ok_implies_nonempty((pairs, a, b) in geometry()) {
        let (r, mu): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let probe = deterministic_conditions(&report(r.clone(), mu.clone(), 0.0, 0.0)).unwrap();
        let delta = a * probe.delta_bound;
        let delta1 = b * delta;
        let v = deterministic_conditions(&report(r, mu, delta, delta1)).unwrap();
        prop_assert!(v.gap_ok);
        prop_assert!(v.range.nonempty, "{:?}", v.range);
        prop_assert!(v.range.lower.unwrap() > 0.0);
    }

    #[test]
    fn random_noise_conditions_imply_nonempty(
        (pairs, a, _) in geometry(),
        d in 1usize..6,
        extra in 1usize..200,
        big_n in 2usize..500,
    ) {
        let (r, mu): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let dims = vec![d; r.len()];
        let delta = 2.0 * a;
        let v = random_noise_conditions(&report(r, mu, delta, delta), d + extra, big_n, &dims).unwrap();
        if v.cond1 && v.cond2 {
            prop_assert!(v.range.nonempty, "{:?}", v.range);
        }
        if let Some(lo) = v.range.lower {
            prop_assert!(lo > 0.0);
        }
    }

    #[test]
    fn nonempty_matches_endpoint_order((pairs, a, b) in geometry()) {
        let (r, mu): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let v = deterministic_conditions(&report(r, mu, a, a * b)).unwrap();
        let expected = match (v.range.lower, v.range.upper) {
            (Some(lo), Some(hi)) => lo < hi,
            (Some(_), None) => true,
            (None, _) => false,
        };
        prop_assert_eq!(v.range.nonempty, expected);
    }

    #[test]
    fn vanishing_noise_approaches_noiseless_range((pairs, _, _) in geometry(), k in 8i32..14) {
        let (r, mu): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let rmin = r.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assume!(r.iter().zip(&mu).all(|(a, b)| a - b > 1e-4));
        let tiny = 10f64.powi(-k);
        let det = deterministic_conditions(&report(r.clone(), mu.clone(), tiny, tiny)).unwrap();
        prop_assert!((det.range.lower.unwrap() - 1.0 / rmin).abs() < 1e-5 / rmin.powi(2));
        let coarse = deterministic_conditions(&report(r.clone(), mu.clone(), 10.0 * tiny, 10.0 * tiny)).unwrap();
        let ratio = det.range.upper.unwrap() / coarse.range.upper.unwrap();
        prop_assert!((ratio - 10.0).abs() < 0.1, "{ratio}");
        let dims = vec![2; r.len()];
        let rn = random_noise_conditions(&report(r, mu, tiny, tiny), 50, 40, &dims).unwrap();
        prop_assert!((rn.range.lower.unwrap() - 1.0 / rmin).abs() < 1e-5 / rmin.powi(2));
    }

    #[test]
    fn semirandom_bound_decreases_with_affinity(a in 0.0f64..1.4, b in 0.0f64..1.4) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let x = semirandom_advisory(&semi_report(lo), &semi_params()).unwrap();
        let y = semirandom_advisory(&semi_report(hi), &semi_params()).unwrap();
        prop_assert!(y.bound <= x.bound);
        prop_assert!(y.conservative_bound <= x.conservative_bound);
    }
}
