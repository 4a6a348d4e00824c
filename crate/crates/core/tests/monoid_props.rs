mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stratbundle::bundle::SampledStratifiedBundle;
use stratbundle::fixtures::{self, VertexFiber};
use stratbundle::grassmann::{gap_distance, Subspace};
use stratbundle::monoid::{
    reconstruct_bundle, regularity_check, scalar_action_of, vertical_derivative, ActionTerm,
    Evaluator, MonoidActionSample, Regularity,
};

/// Random action table in `(t, e)` with `t`-degree ≤ 3 and `e`-degree ≤ 2.
fn random_terms(rng: &mut ChaCha8Rng, m: usize) -> Vec<ActionTerm> {
    (0..rng.random_range(1..6))
        .map(|_| ActionTerm {
            t: rng.random_range(0..=3),
            e: (0..m).map(|_| rng.random_range(0..=2)).collect(),
            c: (0..m).map(|_| rng.random_range(-2.0..2.0)).collect(),
        })
        .collect()
}

/// `d/dt|₀` of the table: the terms linear in `t`, evaluated at `e`.
fn exact_phi(terms: &[ActionTerm], e: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; e.len()];
    for term in terms.iter().filter(|term| term.t == 1) {
        let mono: f64 = term.e.iter().zip(e).map(|(&k, x)| x.powi(k as i32)).product();
        for (o, c) in out.iter_mut().zip(&term.c) {
            *o += c * mono;
        }
    }
    out
}

#[test]
fn derivative_error_estimate_bounds_actual_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut bounded, mut total) = (0usize, 0usize);
    for _ in 0..200 {
        let m = rng.random_range(1..=3);
        let terms = random_terms(&mut rng, m);
        let samples: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..m).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let a = MonoidActionSample::new(
            m,
            Evaluator::polynomial(m, &terms).unwrap(),
            samples.clone(),
            MonoidActionSample::default_t_grid(),
        )
        .unwrap();
        for e in &samples {
            let d = vertical_derivative(&a, e, 1e-4).unwrap();
            let want = exact_phi(&terms, e);
            let err = d
                .value
                .iter()
                .zip(&want)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            total += 1;
            if err <= d.error_estimate {
                bounded += 1;
            }
        }
    }
    assert!(bounded as f64 >= 0.95 * total as f64, "{bounded}/{total}");
}

/// Bundles over `line_base(6)` with fibers `span(V + xW)` off the vertex.
fn line_bundle() -> impl Strategy<Value = SampledStratifiedBundle> {
    (1usize..=3)
        .prop_flat_map(|k| (Just(k), 0..=k))
        .prop_flat_map(|(k, r)| (Just(k), matrix(k, r), matrix(k, r), subspace_in(k)))
        .prop_filter_map("rank drop", |(k, v, w, vertex)| {
            let base = fixtures::line_base(6);
            let ok = base.strata().iter().flat_map(|st| &st.points).all(|x| {
                let m: DMatrix<f64> = &v + &w * x[0];
                m.ncols() == 0 || m.svd(false, false).singular_values.min() > 0.1
            });
            if !ok {
                return None;
            }
            SampledStratifiedBundle::from_fn(base, k, |name, p| {
                if name == "S0" {
                    vertex.clone()
                } else {
                    Subspace::column_space(&(&v + &w * p[0]), 1e-8)
                }
            })
            .ok()
        })
}

fn round_trip(b: &SampledStratifiedBundle) -> f64 {
    let a = scalar_action_of(b, MonoidActionSample::default_t_grid()).unwrap();
    let report = regularity_check(&a, 1e-6, 1e-4).unwrap();
    assert_eq!(report.classification, Regularity::Regular);
    let rec = reconstruct_bundle(&a, None, 1e-6, 1e-4, 1e-9).unwrap();
    let back = rec.to_bundle(b.base(), 1e-9).unwrap();
    assert_eq!(back.ranks().len(), b.ranks().len());
    back.fibers()
        .iter()
        .flatten()
        .zip(b.fibers().iter().flatten())
        .map(|(x, y)| gap_distance(x, y).unwrap())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scalar_multiplication_is_regular_and_reconstructs(b in line_bundle()) {
        prop_assert!(round_trip(&b) <= 1e-6);
    }
}

#[test]
fn tilted_line_fixtures_round_trip() {
    for v in [VertexFiber::Horizontal, VertexFiber::Vertical, VertexFiber::Zero] {
        let gap = round_trip(&fixtures::tilted_line_bundle(v));
        assert!(gap <= 1e-6, "{v:?}: {gap}");
    }
}
