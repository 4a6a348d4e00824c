//! Standard sampled objects used by the tests, the acceptance suite, the
//! command line `fixtures` verb and the guide.

use nalgebra::DMatrix;

use crate::bundle::{ConvergenceScenario, SampledStratifiedBundle};
use crate::equivariant::{self, FiniteGroupAction};
use crate::foliation::VectorFieldSet;
use crate::grassmann::Subspace;
use crate::monoid::{Builtin, Evaluator, MonoidActionSample};
use crate::poly::Monomial;
use crate::strata::{Stratification, Stratum};

/// Number of samples `1/n` on each side of the tilted-line fixture.
pub const TILTED_LINE_SAMPLES: usize = 2000;

fn stratum(name: &str, dim: usize, points: Vec<Vec<f64>>) -> Stratum {
    Stratum {
        name: name.into(),
        dim,
        points,
    }
}

fn pinned_line(points_pos: Vec<f64>) -> Stratification {
    let neg = points_pos.iter().map(|&x| vec![-x]).collect();
    let pos = points_pos.iter().map(|&x| vec![x]).collect();
    Stratification::new(
        1,
        vec![
            stratum("S0", 0, vec![vec![0.0]]),
            stratum("R+", 1, pos),
            stratum("R-", 1, neg),
        ],
        [
            ("S0".to_string(), "R+".to_string()),
            ("S0".to_string(), "R-".to_string()),
        ],
    )
    .expect("fixture is valid")
}

/// `ℝ` stratified as `{0} ∪ (0,∞) ∪ (−∞,0)`, sampled at `±k/n` for `k = 1..=n`.
pub fn line_base(n: usize) -> Stratification {
    pinned_line((1..=n).map(|k| k as f64 / n as f64).collect())
}

/// The same stratification sampled at `±1/n`, `n = 1..=TILTED_LINE_SAMPLES`,
/// in decreasing order of `|x|`.
pub fn harmonic_line_base() -> Stratification {
    pinned_line((1..=TILTED_LINE_SAMPLES).map(|n| 1.0 / n as f64).collect())
}

/// Fiber placed over the vertex of the tilted-line bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexFiber {
    /// `span{(1,0)}`: the limit of the neighboring fibers.
    Horizontal,
    /// `span{(0,1)}`: transverse to the limit.
    Vertical,
    /// `{0}`: a rank drop.
    Zero,
}

/// `A_x = span{(1,x)}` over `x ≠ 0`, and the chosen fiber over `0`.
pub fn tilted_line_bundle(vertex: VertexFiber) -> SampledStratifiedBundle {
    SampledStratifiedBundle::from_fn(harmonic_line_base(), 2, |name, p| {
        if name == "S0" {
            match vertex {
                VertexFiber::Horizontal => Subspace::span(&[vec![1.0, 0.0]], 2).unwrap(),
                VertexFiber::Vertical => Subspace::span(&[vec![0.0, 1.0]], 2).unwrap(),
                VertexFiber::Zero => Subspace::zero(2),
            }
        } else {
            Subspace::span(&[vec![1.0, p[0]]], 2).unwrap()
        }
    })
    .expect("fixture is valid")
}

/// `x_n = 1/n → 0` from the right.
pub fn tilted_line_scenario(_b: &SampledStratifiedBundle) -> ConvergenceScenario {
    ConvergenceScenario {
        target: "S0".into(),
        source: "R+".into(),
        x0_index: 0,
        sequence_indices: (0..TILTED_LINE_SAMPLES).collect(),
    }
}

/// `x^power · d/dx` on 201 equally spaced samples of `[−1, 1]`.
pub fn euler_field(power: u32) -> VectorFieldSet {
    let samples = (0..=200).map(|k| vec![(k as f64 - 100.0) / 100.0]).collect();
    VectorFieldSet::from_tables(1, vec![vec![Monomial { e: vec![power], c: vec![1.0] }]], samples)
        .expect("fixture is valid")
}

/// `{x∂x, y∂y}` on the integer grid `[−half, half]²`.
pub fn coordinate_fields(half: i32) -> VectorFieldSet {
    let mut samples = Vec::new();
    for i in -half..=half {
        for j in -half..=half {
            samples.push(vec![i as f64, j as f64]);
        }
    }
    VectorFieldSet::from_tables(
        2,
        vec![
            vec![Monomial { e: vec![1, 0], c: vec![1.0, 0.0] }],
            vec![Monomial { e: vec![0, 1], c: vec![0.0, 1.0] }],
        ],
        samples,
    )
    .expect("fixture is valid")
}

/// Level-`level` approximation of the Cantor set in `[0, 1]`: the endpoints
/// of the `2^level` remaining intervals as point strata, and every removed
/// middle third as a one-dimensional stratum sampled at `gap_samples`
/// interior points. Each endpoint lies in the closure of its adjacent gaps.
pub fn cantor(level: u32, gap_samples: usize) -> Stratification {
    let denom = 3f64.powi(level as i32);
    // Remaining intervals as integer pairs over 3^level.
    let mut intervals: Vec<(u64, u64)> = vec![(0, 3u64.pow(level))];
    let mut gaps: Vec<(u64, u64)> = Vec::new();
    for _ in 0..level {
        let mut next = Vec::with_capacity(2 * intervals.len());
        for (a, b) in intervals {
            let third = (b - a) / 3;
            next.push((a, a + third));
            next.push((b - third, b));
            gaps.push((a + third, b - third));
        }
        intervals = next;
    }
    gaps.sort_unstable();
    let mut ends: Vec<u64> = intervals.iter().flat_map(|&(a, b)| [a, b]).collect();
    ends.sort_unstable();
    ends.dedup();

    let mut strata = Vec::with_capacity(ends.len() + gaps.len());
    for &e in &ends {
        strata.push(stratum(&format!("c{e}"), 0, vec![vec![e as f64 / denom]]));
    }
    let mut closure = Vec::new();
    for (i, &(a, b)) in gaps.iter().enumerate() {
        let name = format!("g{i}");
        let (lo, hi) = (a as f64 / denom, b as f64 / denom);
        let pts = (1..=gap_samples)
            .map(|j| vec![lo + (hi - lo) * j as f64 / (gap_samples + 1) as f64])
            .collect();
        strata.push(stratum(&name, 1, pts));
        closure.push((format!("c{a}"), name.clone()));
        closure.push((format!("c{b}"), name));
    }
    Stratification::new(1, strata, closure).expect("fixture is valid")
}

/// `x ↦ −x` on `ℝ`, acting on tangent vectors the same way.
pub fn negation_on_line() -> FiniteGroupAction {
    let m = vec![DMatrix::identity(1, 1), -DMatrix::identity(1, 1)];
    FiniteGroupAction::new(1, m, None, 1e-12)
        .expect("fixture is valid")
        .acting_on_tangents()
}

/// The tangent bundle of `line_base(n)`.
pub fn line_tangent_bundle(n: usize) -> SampledStratifiedBundle {
    SampledStratifiedBundle::trivial(line_base(n), 1).expect("fixture is valid")
}

/// The dihedral group of the square acting on the plane and on its tangents.
pub fn dihedral_square() -> FiniteGroupAction {
    FiniteGroupAction::dihedral(4).acting_on_tangents()
}

/// Radial lines `A_x = span{x}` over the orbit-type strata of the grid
/// `[−2, 2]²`, with `{0}` over the origin.
pub fn radial_square_bundle() -> SampledStratifiedBundle {
    let mut points = Vec::new();
    for i in -2..=2 {
        for j in -2..=2 {
            points.push(vec![f64::from(i), f64::from(j)]);
        }
    }
    let part = equivariant::orbit_type_partition(&dihedral_square(), &points, 1.5, 1e-9)
        .expect("fixture is valid");
    SampledStratifiedBundle::from_fn(part.stratification, 2, |_, p| {
        if p.iter().all(|v| *v == 0.0) {
            Subspace::zero(2)
        } else {
            Subspace::span(&[p.to_vec()], 2).unwrap()
        }
    })
    .expect("fixture is valid")
}

/// `h_t(e) = t²·e` on a handful of points of the plane, the origin included.
pub fn scalar_squared_action() -> MonoidActionSample {
    let samples = vec![
        vec![0.0, 0.0],
        vec![1.0, 0.0],
        vec![0.0, -2.0],
        vec![0.5, 1.5],
    ];
    MonoidActionSample::new(
        2,
        Evaluator::Builtin(Builtin::ScalarSquared),
        samples,
        MonoidActionSample::default_t_grid(),
    )
    .expect("fixture is valid")
}
