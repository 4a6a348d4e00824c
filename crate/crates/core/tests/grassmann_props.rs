mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use stratbundle::grassmann::{
    self, containment_residual, gap_distance, is_contained, Limit, Subspace, SubspaceSequence,
};

fn equal_rank_triple() -> impl Strategy<Value = (Subspace, Subspace, Subspace)> {
    (1usize..=8).prop_flat_map(|n| {
        (1..=n).prop_flat_map(move |d| {
            let vecs = move || {
                prop::collection::vec(prop::collection::vec(-2.0f64..2.0, n), d)
                    .prop_map(move |vs| Subspace::span(&vs, n).unwrap())
            };
            (vecs(), vecs(), vecs())
        })
    })
}

proptest! {
    #[test]
    fn projection_is_an_orthogonal_projector((_, w) in ambient_and_subspace(8)) {
        let p = w.projection();
        prop_assert!((p - p.transpose()).amax() <= 1e-10);
        prop_assert!((p * p - p).amax() <= 1e-10);
        prop_assert!((p.trace() - w.dim() as f64).abs() <= 1e-10);
    }

    #[test]
    fn gap_is_a_metric((a, b, c) in equal_rank_triple()) {
        // Random spans occasionally drop rank; the triangle inequality is
        // stated for equal ranks.
        prop_assume!(a.dim() == b.dim() && b.dim() == c.dim());
        let ab = gap_distance(&a, &b).unwrap();
        let ba = gap_distance(&b, &a).unwrap();
        let bc = gap_distance(&b, &c).unwrap();
        let ac = gap_distance(&a, &c).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-9);
        prop_assert!(ac <= ab + bc + 1e-9);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ab));
        prop_assert!(gap_distance(&a, &a).unwrap() <= 1e-12);
    }

    #[test]
    fn mutual_containment_is_equality(
        (w, v, same) in (1usize..=6).prop_flat_map(|n| (subspace_in(n), subspace_in(n), any::<bool>(), matrix(n, n)))
            .prop_map(|(w, v, same, mix)| {
                if same {
                    // Same subspace, different spanning set.
                    let b = w.basis() * mix.view((0, 0), (w.dim(), w.dim())) + w.basis();
                    let cols: Vec<Vec<f64>> = b.column_iter().map(|c| c.iter().copied().collect()).collect();
                    let v = Subspace::span(&cols, w.ambient_dim()).unwrap();
                    (w, v, true)
                } else {
                    (w, v, false)
                }
            })
    ) {
        let tol = 1e-8;
        let mutual = is_contained(&w, &v, tol).unwrap() && is_contained(&v, &w, tol).unwrap();
        prop_assert_eq!(mutual, gap_distance(&w, &v).unwrap() <= tol);
        if same && v.dim() == w.dim() {
            prop_assert!(mutual);
        }
    }

    #[test]
    fn subspaces_of_a_span_are_contained(
        vs in (1usize..=6).prop_flat_map(|n| prop::collection::vec(prop::collection::vec(-2.0f64..2.0, n), 1..=n))
    ) {
        let n = vs[0].len();
        let v = Subspace::span(&vs, n).unwrap();
        let w = Subspace::span(&vs[..1], n).unwrap();
        prop_assert!(containment_residual(&w, &v).unwrap() <= 1e-9);
        prop_assert!(is_contained(&Subspace::zero(n), &v, 1e-12).unwrap());
        prop_assert!(is_contained(&v, &Subspace::full(n), 1e-12).unwrap());
    }

    #[test]
    fn constant_sequence_converges_to_itself((_, w) in ambient_and_subspace(6), len in 5usize..12) {
        let seq = SubspaceSequence::new(vec![w.clone(); len]).unwrap();
        match grassmann::sequence_limit(&seq, 1e-9, 5).unwrap() {
            Limit::Converged(l) => prop_assert!(gap_distance(&l, &w).unwrap() <= 1e-12),
            Limit::NoLimit { .. } => prop_assert!(false, "constant sequence has a limit"),
        }
    }

    #[test]
    fn orthogonal_conjugation(
        (n, w, t) in (1usize..=6).prop_flat_map(|n| (Just(n), subspace_in(n), orthogonal(n)))
    ) {
        let _ = n;
        let moved = grassmann::apply_linear_map(&t, &w).unwrap();
        let expect: DMatrix<f64> = &t * w.projection() * t.transpose();
        prop_assert!((moved.projection() - expect).amax() <= 1e-10);
    }
}
