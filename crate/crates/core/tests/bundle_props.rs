mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use stratbundle::bundle::{
    apply_functor_to_bundle, apply_functor_to_morphism, validate_bundle, whitney_a_check,
    BundleMorphism, ConvergenceScenario, SampledStratifiedBundle,
};
use stratbundle::fixtures;
use stratbundle::functors::LinearFunctor;
use stratbundle::grassmann::{self, Subspace};
use stratbundle::report::Verdict;
use stratbundle::strata::{self, Stratification, Stratum};

const SEQ_LEN: usize = 40;

fn primitive() -> impl Strategy<Value = LinearFunctor> {
    prop_oneof![
        (1usize..=3).prop_map(LinearFunctor::TensorPower),
        (1usize..=3).prop_map(LinearFunctor::WedgePower),
        (1usize..=3).prop_map(LinearFunctor::SymPower),
    ]
}

/// `{0} ∪ (0,1]` sampled at `0` and `2^-k`, `k = 0..SEQ_LEN`.
fn dyadic_base() -> Stratification {
    Stratification::new(
        1,
        vec![
            Stratum { name: "S0".into(), dim: 0, points: vec![vec![0.0]] },
            Stratum {
                name: "R".into(),
                dim: 1,
                points: (0..SEQ_LEN).map(|k| vec![0.5f64.powi(k as i32)]).collect(),
            },
        ],
        [("S0".to_string(), "R".to_string())],
    )
    .unwrap()
}

fn dyadic_scenario() -> ConvergenceScenario {
    ConvergenceScenario {
        target: "S0".into(),
        source: "R".into(),
        x0_index: 0,
        sequence_indices: (0..SEQ_LEN).collect(),
    }
}

/// Fibers `span(V + xW)` over `x > 0` converging to `span(V)`, and over the
/// vertex a random subspace of that limit: Whitney A holds by construction.
fn whitney_bundle() -> impl Strategy<Value = SampledStratifiedBundle> {
    (2usize..=4)
        .prop_flat_map(|k| (Just(k), 1..=k))
        .prop_flat_map(|(k, r)| (Just(k), matrix(k, r), matrix(k, r), 0..=r))
        .prop_filter_map("degenerate fibers", |(k, v, w, vr)| {
            let sigma_min = |m: &DMatrix<f64>| m.clone().svd(false, false).singular_values.min();
            let xs = dyadic_base().stratum("R").unwrap().points.clone();
            if sigma_min(&v) < 0.1 || xs.iter().any(|x| sigma_min(&(&v + &w * x[0])) < 0.1) {
                return None;
            }
            let vertex = Subspace::column_space(&v.columns(0, vr).into_owned(), 1e-8);
            SampledStratifiedBundle::from_fn(dyadic_base(), k, |name, p| {
                if name == "S0" {
                    vertex.clone()
                } else {
                    Subspace::column_space(&(&v + &w * p[0]), 1e-8)
                }
            })
            .ok()
        })
}

fn trivial_pair() -> impl Strategy<Value = (usize, DMatrix<f64>, DMatrix<f64>)> {
    (1usize..=3, 1usize..=3, 1usize..=3)
        .prop_flat_map(|(k, l, m)| (Just(k), matrix(l, k), matrix(m, l)))
}

fn cloud(center: (f64, f64)) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..8).prop_map(move |ps| {
        ps.into_iter()
            .map(|(a, b)| vec![center.0 + a, center.1 + b])
            .collect()
    })
}

fn random_stratification() -> impl Strategy<Value = Stratification> {
    (
        proptest::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 2..5),
        proptest::collection::vec(any::<bool>(), 10),
    )
        .prop_flat_map(|(centers, mask)| {
            let clouds: Vec<_> = centers.iter().map(|&c| cloud(c)).collect();
            (clouds, Just(mask))
        })
        .prop_filter_map("overlapping samples", |(clouds, mask)| {
            let n = clouds.len();
            let strata = clouds
                .into_iter()
                .enumerate()
                .map(|(i, points)| Stratum { name: format!("s{i}"), dim: i % 3, points })
                .collect();
            let mut order = Vec::new();
            let mut m = mask.into_iter();
            for i in 0..n {
                for j in i + 1..n {
                    if m.next().unwrap_or(false) {
                        order.push((format!("s{i}"), format!("s{j}")));
                    }
                }
            }
            Stratification::new(2, strata, order).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn functors_preserve_whitney_a(b in whitney_bundle(), f in primitive()) {
        let sc = dyadic_scenario();
        let before = whitney_a_check(&b, &sc, 1e-8, 5).unwrap();
        prop_assert_eq!(before.verdict, Verdict::Pass);
        let fb = apply_functor_to_bundle(&f, &b, 1e-8).unwrap();
        let after = whitney_a_check(&fb, &sc, 1e-7, 5).unwrap();
        prop_assert_eq!(after.verdict, Verdict::Pass, "{} residual {:?}", f, after.residual);
    }

    #[test]
    fn ranks_follow_dim_map(b in whitney_bundle(), f in primitive()) {
        let fb = apply_functor_to_bundle(&f, &b, 1e-8).unwrap();
        prop_assert_eq!(fb.fiber_ambient(), f.dim_map(b.fiber_ambient()));
        for (name, &r) in b.ranks() {
            prop_assert_eq!(fb.rank(name), Some(f.dim_map(r)));
        }
        for (fs, gs) in b.fibers().iter().zip(fb.fibers()) {
            for (w, fw) in fs.iter().zip(gs) {
                prop_assert_eq!(fw.dim(), f.dim_map(w.dim()));
            }
        }
        prop_assert_eq!(validate_bundle(&fb, 1e-8).verdict, Verdict::Pass);
    }

    #[test]
    fn morphisms_compose_under_functors((k, h1, h2) in trivial_pair(), f in primitive()) {
        let base = fixtures::line_base(3);
        let a = SampledStratifiedBundle::trivial(base.clone(), k).unwrap();
        let b = SampledStratifiedBundle::trivial(base.clone(), h1.nrows()).unwrap();
        let c = SampledStratifiedBundle::trivial(base, h2.nrows()).unwrap();
        let m1 = BundleMorphism::constant_map(&a, h1);
        let m2 = BundleMorphism::constant_map(&b, h2);
        let whole = apply_functor_to_morphism(&f, &m2.after(&m1).unwrap(), &a, &c, 1e-9).unwrap();
        let parts = apply_functor_to_morphism(&f, &m2, &b, &c, 1e-9)
            .unwrap()
            .after(&apply_functor_to_morphism(&f, &m1, &a, &b, 1e-9).unwrap())
            .unwrap();
        prop_assert_eq!(&whole.base_map, &parts.base_map);
        for (rw, rp) in whole.fiber_maps.iter().zip(&parts.fiber_maps) {
            for (x, y) in rw.iter().zip(rp) {
                prop_assert!((x - y).amax() <= 1e-9 * (1.0 + x.amax()));
            }
        }
    }

    #[test]
    fn orthogonal_morphisms_compose(b in whitney_bundle(), f in primitive(), seed in 0u64..1000) {
        let k = b.fiber_ambient();
        let t1 = orthogonal_from_seed(k, seed);
        let t2 = orthogonal_from_seed(k, seed + 1);
        let image = |t: &DMatrix<f64>, src: &SampledStratifiedBundle| {
            SampledStratifiedBundle::new(
                src.base().clone(),
                k,
                src.fibers()
                    .iter()
                    .map(|fs| fs.iter().map(|w| grassmann::apply_linear_map(t, w).unwrap()).collect())
                    .collect(),
                src.ranks().clone(),
            )
            .unwrap()
        };
        let b1 = image(&t1, &b);
        let b2 = image(&t2, &b1);
        let m1 = BundleMorphism::constant_map(&b, t1);
        let m2 = BundleMorphism::constant_map(&b1, t2);
        let whole = apply_functor_to_morphism(&f, &m2.after(&m1).unwrap(), &b, &b2, 1e-8).unwrap();
        let parts = apply_functor_to_morphism(&f, &m2, &b1, &b2, 1e-8)
            .unwrap()
            .after(&apply_functor_to_morphism(&f, &m1, &b, &b1, 1e-8).unwrap())
            .unwrap();
        for (rw, rp) in whole.fiber_maps.iter().zip(&parts.fiber_maps) {
            for (x, y) in rw.iter().zip(rp) {
                prop_assert!((x - y).amax() <= 1e-9);
            }
        }
    }

    #[test]
    fn fiber_limits_transfer(b in whitney_bundle(), f in primitive()) {
        let sc = dyadic_scenario();
        let fb = apply_functor_to_bundle(&f, &b, 1e-8).unwrap();
        prop_assert_eq!(fb.base(), b.base());
        let before = whitney_a_check(&b, &sc, 1e-8, 5).unwrap();
        let after = whitney_a_check(&fb, &sc, 1e-7, 5).unwrap();
        prop_assert!(before.limit.is_some());
        let (w, fw) = (before.limit.unwrap(), after.limit.unwrap());
        prop_assert!(grassmann::gap_distance(&f.apply_to_subspace(&w), &fw).unwrap() <= 1e-7);
    }

    #[test]
    fn frontier_is_monotone_in_delta(s in random_stratification(), eps in 0.0..2.0f64, d1 in 0.0..3.0f64, dd in 0.0..3.0f64) {
        let small = strata::check_frontier(&s, eps, d1);
        let large = strata::check_frontier(&s, eps, d1 + dd);
        prop_assert!(!small.pass || large.pass);
        prop_assert!(large.violations.len() <= small.violations.len());
    }

    #[test]
    fn filtration_ignores_listing_order(s in random_stratification(), rot in 0usize..5) {
        let mut listed = s.strata().to_vec();
        let r = rot % listed.len();
        listed.rotate_left(r);
        listed.reverse();
        let shuffled = Stratification::new(2, listed, s.closure_order().iter().cloned()).unwrap();
        prop_assert_eq!(strata::filtration(&s), strata::filtration(&shuffled));
    }

    #[test]
    fn filtration_is_idempotent(s in random_stratification()) {
        let levels = strata::filtration(&s);
        for w in levels.windows(2) {
            prop_assert!(w[0].is_subset(&w[1]));
        }
        for (i, level) in levels.iter().enumerate() {
            let kept: Vec<Stratum> = s.strata().iter().filter(|st| level.contains(&st.name)).cloned().collect();
            if kept.is_empty() {
                continue;
            }
            let order = s
                .closure_order()
                .iter()
                .filter(|(a, b)| level.contains(a) && level.contains(b))
                .cloned();
            let sub = Stratification::new(2, kept, order).unwrap();
            let again = strata::filtration(&sub);
            prop_assert_eq!(again.last().unwrap(), level);
            for (j, l) in again.iter().enumerate().take(i + 1) {
                prop_assert_eq!(l, &levels[j]);
            }
        }
    }
}

fn orthogonal_from_seed(n: usize, seed: u64) -> DMatrix<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)) + DMatrix::identity(n, n) * 0.1;
    m.qr().q()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn cantor_counts_do_not_decrease(gap_samples in 1usize..=4) {
        let counts: Vec<usize> = (2..=6)
            .map(|level| {
                strata::local_finiteness_report(&fixtures::cantor(level, gap_samples), 0.1, 4)
                    .flagged
                    .len()
            })
            .collect();
        prop_assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{:?}", counts);
    }
}
