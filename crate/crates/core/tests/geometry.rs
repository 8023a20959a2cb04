use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use proptest::prelude::*;
use ssc_core::geometry::{
    canonical_cosines, circumradius_polar, diagnose, estimate_inradius, leave_one_out_inradius,
    noise_magnitudes, projected_dual_direction, subspace_affinity, subspace_incoherence,
    DiagnoseConfig, InradiusConfig, InradiusMethod,
};
use ssc_core::solver::SolveConfig;
use ssc_core::{orthonormalize, DataMatrix, LabeledDataset, RngSpec, SscError, SubspaceEnsemble};

/// Exact inradius of `conv(±p_j)` for planar points: the distance from the
/// origin to the nearest edge of the convex hull (monotone chain).
fn planar_inradius_oracle(points: &[(f64, f64)]) -> f64 {
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .flat_map(|&(x, y)| [(x, y), (-x, -y)])
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    let mut best = f64::INFINITY;
    for k in 0..hull.len() {
        let a = hull[k];
        let b = hull[(k + 1) % hull.len()];
        let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        best = best.min((a.0 * b.1 - a.1 * b.0).abs() / len);
    }
    best
}

fn planar(points: &[(f64, f64)]) -> DMatrix<f64> {
    DMatrix::from_fn(2, points.len(), |r, c| {
        if r == 0 {
            points[c].0
        } else {
            points[c].1
        }
    })
}

fn random_basis(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = RngSpec::new(seed).rng();
    orthonormalize(&DMatrix::from_fn(n, d, |_, _| rng.normal())).unwrap()
}

fn random_rotation(n: usize, seed: u64) -> DMatrix<f64> {
    random_basis(n, n, seed)
}

/// Unit points drawn uniformly on the unit sphere of each subspace.
fn union_dataset(bases: &[DMatrix<f64>], per: usize, sigma: f64, seed: u64) -> LabeledDataset {
    let mut rng = RngSpec::new(seed).rng();
    let n = bases[0].nrows();
    let mut clean = Vec::new();
    let mut noisy = Vec::new();
    let mut labels = Vec::new();
    for (l, u) in bases.iter().enumerate() {
        for _ in 0..per {
            let y = u * DVector::from_vec(rng.unit_vector(u.ncols()));
            let z = DVector::from_fn(n, |_, _| rng.normal() * sigma / (n as f64).sqrt());
            noisy.push(&y + z);
            clean.push(y);
            labels.push(l);
        }
    }
    LabeledDataset::new(
        DataMatrix::new(DMatrix::from_columns(&noisy)).unwrap(),
        labels,
        Some(DataMatrix::new(DMatrix::from_columns(&clean)).unwrap()),
        Some(SubspaceEnsemble::new(bases.to_vec()).unwrap()),
    )
    .unwrap()
}

#[test]
fn cross_polytope_inradius() {
    let pts = planar(&[(1.0, 0.0), (0.0, 1.0)]);
    let basis = DMatrix::identity(2, 2);
    let rng = RngSpec::new(1);
    for method in [InradiusMethod::AngleGrid, InradiusMethod::Sampled] {
        let cfg = InradiusConfig {
            method,
            ..InradiusConfig::default()
        };
        let r = estimate_inradius(&pts, &basis, &cfg, &rng).unwrap();
        assert!((r - FRAC_1_SQRT_2).abs() < 1e-3, "{method:?}: {r}");
        assert!(r >= FRAC_1_SQRT_2 - 1e-12, "estimate must not undershoot");
        let big_r = circumradius_polar(&pts, &basis, &cfg, &rng).unwrap();
        assert!((big_r - 2f64.sqrt()).abs() < 2e-3);
        assert_eq!(r * big_r, r * (1.0 / r));
    }
}

#[test]
fn octahedron_inradius_in_three_dimensions() {
    // conv(±e1, ±e2, ±e3) has inradius 1/sqrt(3)
    let basis = random_basis(7, 3, 4);
    let pts = basis.clone();
    let r = estimate_inradius(&pts, &basis, &InradiusConfig::default(), &RngSpec::new(2)).unwrap();
    assert!((r - 1.0 / 3f64.sqrt()).abs() < 1e-3, "{r}");
}

#[test]
fn one_dimensional_segment() {
    let basis = dmatrix![0.6; 0.8];
    let pts = &basis * dmatrix![0.5, -0.25];
    let r = estimate_inradius(&pts, &basis, &InradiusConfig::default(), &RngSpec::new(0)).unwrap();
    assert!((r - 0.5).abs() < 1e-12);
    let unit = &basis * dmatrix![1.0];
    let big_r =
        circumradius_polar(&unit, &basis, &InradiusConfig::default(), &RngSpec::new(0)).unwrap();
    assert!((big_r - 1.0).abs() < 1e-12);
}

#[test]
fn circle_samples_match_hull_oracle() {
    let mut rng = RngSpec::new(50).rng();
    let raw: Vec<(f64, f64)> = (0..50)
        .map(|_| {
            let t = 2.0 * PI * rng.uniform();
            (t.cos(), t.sin())
        })
        .collect();
    let oracle = planar_inradius_oracle(&raw);
    let r = estimate_inradius(
        &planar(&raw),
        &DMatrix::identity(2, 2),
        &InradiusConfig::default(),
        &RngSpec::new(3),
    )
    .unwrap();
    assert!((0.95..=1.0).contains(&r), "{r}");
    assert!(r >= oracle - 1e-12 && r - oracle < 1e-8, "{r} vs {oracle}");
}

#[test]
fn grid_and_sampled_agree_in_two_dimensions() {
    for seed in 0..10 {
        let mut rng = RngSpec::new(100 + seed).rng();
        let raw: Vec<(f64, f64)> = (0..8).map(|_| (rng.normal(), rng.normal())).collect();
        let pts = planar(&raw);
        let basis = DMatrix::identity(2, 2);
        let grid = estimate_inradius(
            &pts,
            &basis,
            &InradiusConfig::default(),
            &RngSpec::new(seed),
        )
        .unwrap();
        let sampled = estimate_inradius(
            &pts,
            &basis,
            &InradiusConfig {
                method: InradiusMethod::Sampled,
                ..InradiusConfig::default()
            },
            &RngSpec::new(seed),
        )
        .unwrap();
        assert!((grid - sampled).abs() < 1e-2, "{grid} vs {sampled}");
        let oracle = planar_inradius_oracle(&raw);
        assert!((grid - oracle).abs() < 1e-8, "{grid} vs {oracle}");
    }
}

#[test]
fn leave_one_out_matches_subset_oracle() {
    let raw = [
        (1.0, 0.0),
        (0.0, 1.0),
        (FRAC_1_SQRT_2, FRAC_1_SQRT_2),
        (0.6, -0.8),
    ];
    let loo = leave_one_out_inradius(
        &planar(&raw),
        &DMatrix::identity(2, 2),
        &InradiusConfig::default(),
        &RngSpec::new(0),
    )
    .unwrap();
    for i in 0..raw.len() {
        let rest: Vec<(f64, f64)> = raw
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &p)| p)
            .collect();
        assert!((loo[i] - planar_inradius_oracle(&rest)).abs() < 1e-8);
    }
    // removing one of two spanning points leaves a segment
    let two = leave_one_out_inradius(
        &planar(&raw[..2]),
        &DMatrix::identity(2, 2),
        &InradiusConfig::default(),
        &RngSpec::new(0),
    )
    .unwrap();
    assert_eq!(two, vec![0.0, 0.0]);
}

#[test]
fn degenerate_point_sets_are_rejected() {
    let basis = DMatrix::identity(2, 2);
    let collinear = planar(&[(1.0, 1.0), (-2.0, -2.0), (0.5, 0.5)]);
    assert!(matches!(
        estimate_inradius(
            &collinear,
            &basis,
            &InradiusConfig::default(),
            &RngSpec::new(0)
        ),
        Err(SscError::RankDeficient(_))
    ));
    let line = dmatrix![1.0; 0.0; 0.0];
    let off = dmatrix![1.0; 0.1; 0.0];
    assert!(matches!(
        estimate_inradius(&off, &line, &InradiusConfig::default(), &RngSpec::new(0)),
        Err(SscError::OutOfSpan(_))
    ));
}

#[test]
fn affinity_examples() {
    let e = DMatrix::<f64>::identity(5, 5);
    let u1 = e.columns(0, 2).into_owned();
    let u2 = e.columns(2, 2).into_owned();
    assert_eq!(subspace_affinity(&u1, &u2).unwrap(), 0.0);
    let u3 = random_basis(6, 3, 9);
    assert!((subspace_affinity(&u3, &u3).unwrap() - 3f64.sqrt()).abs() < 1e-8);
    let t = PI / 3.0;
    let a = dmatrix![1.0; 0.0];
    let b = dmatrix![t.cos(); t.sin()];
    assert!((subspace_affinity(&a, &b).unwrap() - 0.5).abs() < 1e-12);
    assert!(matches!(
        subspace_affinity(&a, &u1),
        Err(SscError::DimensionMismatch(_))
    ));
}

#[test]
fn projected_dual_direction_examples() {
    // 1-D: lambda = 2 gives nu = a
    let a = dmatrix![1.0; 0.0];
    let v =
        projected_dual_direction(&dvector![1.0, 0.0], &a, &a, 2.0, &SolveConfig::new(2.0)).unwrap();
    assert!((v - dvector![1.0, 0.0]).amax() < 1e-12);

    // noiseless sample inside a plane spanned by the dictionary: v = nu / |nu|
    let u = random_basis(6, 2, 3);
    let dict = &u * dmatrix![1.0, 0.2, -0.5; 0.1, 1.0, 0.7];
    let x = &u * dvector![0.6, 0.8];
    let lambda = 3.0;
    let sol = ssc_core::solver::solve_column(&x, &dict, &SolveConfig::new(lambda)).unwrap();
    let nu = sol.residual * lambda;
    let v = projected_dual_direction(&x, &dict, &u, lambda, &SolveConfig::new(lambda)).unwrap();
    assert!((v - &nu / nu.norm()).amax() < 1e-10);

    // dual orthogonal to the subspace
    let err = projected_dual_direction(
        &dvector![0.0, 1.0],
        &dmatrix![0.0; 1.0],
        &a,
        5.0,
        &SolveConfig::new(5.0),
    );
    assert!(matches!(err, Err(SscError::DegenerateDual(_))));
}

#[test]
fn projected_dual_direction_is_unit() {
    let mut rng = RngSpec::new(77).rng();
    for k in 0..100 {
        let dict = DMatrix::from_fn(8, 6, |_, _| rng.normal());
        let x = DVector::from_fn(8, |_, _| rng.normal());
        let u = random_basis(8, 3, 1000 + k);
        let lambda = 0.5 + 5.0 * rng.uniform();
        let v = projected_dual_direction(&x, &dict, &u, lambda, &SolveConfig::new(lambda)).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-12);
        assert!((&u * u.tr_mul(&v) - &v).amax() < 1e-12);
    }
}

#[test]
fn orthogonal_subspaces_are_incoherent() {
    let e = DMatrix::<f64>::identity(8, 8);
    let bases = vec![e.columns(0, 2).into_owned(), e.columns(2, 3).into_owned()];
    let ds = union_dataset(&bases, 10, 0.0, 4);
    let rep = subspace_incoherence(&ds, 20.0, &SolveConfig::new(20.0)).unwrap();
    assert!(rep.mu.iter().all(|&m| m <= 1e-10), "{:?}", rep.mu);
    assert!(!rep.proxy);
}

#[test]
fn identical_subspaces_are_coherent() {
    let u = random_basis(10, 2, 8);
    let ds = union_dataset(&[u.clone(), u], 12, 0.0, 5);
    let rep = subspace_incoherence(&ds, 50.0, &SolveConfig::new(50.0)).unwrap();
    assert!(rep.mu.iter().all(|&m| m > 0.9 && m <= 1.0), "{:?}", rep.mu);
}

#[test]
fn noise_magnitude_examples() {
    let bases = vec![random_basis(6, 2, 1), random_basis(6, 2, 2)];
    let ds = union_dataset(&bases, 4, 0.0, 1);
    assert_eq!(noise_magnitudes(&ds).unwrap(), (0.0, 0.0));

    // a single noise vector inside S_1
    let mut noisy = ds.clean.clone().unwrap().into_inner();
    let z = bases[0].column(0) * 0.3;
    let col = noisy.column(2) + &z;
    noisy.set_column(2, &col);
    let ds2 = LabeledDataset::new(
        DataMatrix::new(noisy).unwrap(),
        ds.labels.clone(),
        ds.clean.clone(),
        ds.ensemble.clone(),
    )
    .unwrap();
    let (delta, delta1) = noise_magnitudes(&ds2).unwrap();
    assert!((delta - 0.3).abs() < 1e-12 && (delta1 - delta).abs() < 1e-12);

    let no_clean = LabeledDataset::new(
        ds.data.clone(),
        ds.labels.clone(),
        None,
        ds.ensemble.clone(),
    )
    .unwrap();
    assert!(matches!(
        noise_magnitudes(&no_clean),
        Err(SscError::MissingCleanData)
    ));
}

#[test]
fn report_is_consistent_and_serializes() {
    let bases = vec![
        random_basis(20, 3, 11),
        random_basis(20, 3, 12),
        random_basis(20, 2, 13),
    ];
    let ds = union_dataset(&bases, 12, 0.1, 9);
    let cfg = DiagnoseConfig::new(10.0);
    let rep = diagnose(&ds, &cfg).unwrap();
    assert_eq!(rep.r.len(), 3);
    assert!(rep.r.iter().all(|&r| r > 0.0 && r <= 1.0));
    assert!(rep.mu.iter().all(|&m| (0.0..=1.0).contains(&m)));
    assert!(rep.delta1.unwrap() <= rep.delta.unwrap());
    for l in 0..3 {
        assert!((rep.affinity[l][l] - (bases[l].ncols() as f64).sqrt()).abs() < 1e-8);
    }
    let json = serde_json::to_value(&rep).unwrap();
    for key in [
        "r",
        "r_min",
        "mu",
        "delta",
        "delta1",
        "affinity",
        "skipped_columns",
    ] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn inradius_grows_with_more_points(seed in 0u64..1000, extra in 1usize..6) {
        let mut rng = RngSpec::new(seed).rng();
        // planar, full estimator
        let raw: Vec<(f64, f64)> = (0..4 + extra).map(|_| (rng.normal(), rng.normal())).collect();
        let basis = DMatrix::identity(2, 2);
        let cfg = InradiusConfig::default();
        let small = estimate_inradius(&planar(&raw[..4]), &basis, &cfg, &RngSpec::new(seed)).unwrap();
        let big = estimate_inradius(&planar(&raw), &basis, &cfg, &RngSpec::new(seed)).unwrap();
        prop_assert!(big >= small - 1e-9);

        // 3-D, sampled directions shared through the seed
        let basis3 = DMatrix::identity(3, 3);
        let pts = DMatrix::from_fn(3, 5 + extra, |_, _| rng.normal());
        let cfg3 = InradiusConfig { budget: 3000, refine_steps: 0, ..InradiusConfig::default() };
        let small3 = estimate_inradius(&pts.columns(0, 5).into_owned(), &basis3, &cfg3, &RngSpec::new(seed)).unwrap();
        let big3 = estimate_inradius(&pts, &basis3, &cfg3, &RngSpec::new(seed)).unwrap();
        prop_assert!(big3 >= small3);
    }

    #[test]
    fn affinity_is_root_sum_of_squared_cosines(seed in 0u64..1000, dk in 1usize..4, dl in 1usize..4) {
        let uk = random_basis(7, dk, seed);
        let ul = random_basis(7, dl, seed + 5000);
        let aff = subspace_affinity(&uk, &ul).unwrap();
        let cos = canonical_cosines(&uk, &ul).unwrap();
        prop_assert!(cos.iter().all(|&c| (0.0..=1.0 + 1e-10).contains(&c)));
        let sum: f64 = cos.iter().map(|c| c * c).sum();
        prop_assert!((aff * aff - sum).abs() < 1e-10);
        prop_assert!((aff - subspace_affinity(&ul, &uk).unwrap()).abs() < 1e-12);
        prop_assert!(aff <= (dk.min(dl) as f64).sqrt() + 1e-10);
    }

    #[test]
    fn geometry_is_rotation_invariant(seed in 0u64..200) {
        let n = 12;
        let bases = vec![random_basis(n, 2, seed), random_basis(n, 3, seed + 1)];
        let ds = union_dataset(&bases, 8, 0.2, seed);
        let q = random_rotation(n, seed + 2);
        let rot = |m: &DMatrix<f64>| &q * m;
        let rotated = LabeledDataset::new(
            DataMatrix::new(rot(ds.data.values())).unwrap(),
            ds.labels.clone(),
            Some(DataMatrix::new(rot(ds.clean.as_ref().unwrap().values())).unwrap()),
            Some(SubspaceEnsemble::new(bases.iter().map(rot).collect()).unwrap()),
        )
        .unwrap();
        let mut cfg = DiagnoseConfig::new(8.0);
        cfg.inradius.budget = 2000;
        let a = diagnose(&ds, &cfg).unwrap();
        let b = diagnose(&rotated, &cfg).unwrap();
        let close = |x: &[f64], y: &[f64]| x.iter().zip(y).all(|(p, q)| (p - q).abs() < 1e-8);
        prop_assert!(close(&a.mu, &b.mu), "{:?} {:?}", a.mu, b.mu);
        prop_assert!((a.delta.unwrap() - b.delta.unwrap()).abs() < 1e-8);
        prop_assert!((a.delta1.unwrap() - b.delta1.unwrap()).abs() < 1e-8);
        for k in 0..2 {
            prop_assert!(close(&a.affinity[k], &b.affinity[k]));
        }
        prop_assert!(close(&a.r, &b.r), "{:?} {:?}", a.r, b.r);
    }
}
