//! Stratified vector bundles sampled inside one global trivialization
//! `A ⊂ X × ℝᵏ`.
//!
//! Every base sample carries a fiber `A_x ⊂ ℝᵏ`. On top of that data this
//! module checks the bundle axioms that survive sampling, the Whitney A
//! condition along declared sequences (directly, and through sections), and
//! applies linear functors fibrewise to bundles and to bundle morphisms.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functors::LinearFunctor;
use crate::grassmann::{self, Limit, Subspace, SubspaceSequence};
use crate::linalg;
use crate::report::Verdict;
use crate::strata::Stratification;

pub const SCHEMA: &str = "svb/1";

/// A stratified vector bundle given by samples.
///
/// `fibers[s][i]` is the fiber over point `i` of stratum `s`. `ranks` holds
/// the declared rank on each stratum; agreement of fibers with it is
/// audited by [`validate_bundle`], not enforced at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BundleJson", into = "BundleJson")]
pub struct SampledStratifiedBundle {
    base: Stratification,
    fiber_ambient: usize,
    fibers: Vec<Vec<Subspace>>,
    ranks: BTreeMap<String, usize>,
}

impl SampledStratifiedBundle {
    pub fn new(
        base: Stratification,
        fiber_ambient: usize,
        fibers: Vec<Vec<Subspace>>,
        ranks: BTreeMap<String, usize>,
    ) -> Result<Self> {
        if fibers.len() != base.strata().len() {
            return Err(Error::Bundle(format!(
                "{} fiber lists for {} strata",
                fibers.len(),
                base.strata().len()
            )));
        }
        for (st, fs) in base.strata().iter().zip(&fibers) {
            if fs.len() != st.points.len() {
                return Err(Error::Bundle(format!(
                    "stratum {} has {} points but {} fibers",
                    st.name,
                    st.points.len(),
                    fs.len()
                )));
            }
            if let Some(f) = fs.iter().find(|f| f.ambient_dim() != fiber_ambient) {
                return Err(Error::Bundle(format!(
                    "fiber over stratum {} lives in dimension {}, expected {fiber_ambient}",
                    st.name,
                    f.ambient_dim()
                )));
            }
            if !ranks.contains_key(&st.name) {
                return Err(Error::Bundle(format!("no rank declared for stratum {}", st.name)));
            }
        }
        if let Some(extra) = ranks.keys().find(|n| base.stratum(n).is_none()) {
            return Err(Error::Bundle(format!("rank declared for unknown stratum {extra}")));
        }
        Ok(Self {
            base,
            fiber_ambient,
            fibers,
            ranks,
        })
    }

    /// Builds fibers from a function of `(stratum name, point)`; ranks are
    /// read off the first fiber of each stratum.
    pub fn from_fn(
        base: Stratification,
        fiber_ambient: usize,
        mut fiber: impl FnMut(&str, &[f64]) -> Subspace,
    ) -> Result<Self> {
        Self::try_from_fn(base, fiber_ambient, |name, p| Ok(fiber(name, p)))
    }

    /// [`Self::from_fn`] with a fallible fiber function.
    pub fn try_from_fn(
        base: Stratification,
        fiber_ambient: usize,
        mut fiber: impl FnMut(&str, &[f64]) -> Result<Subspace>,
    ) -> Result<Self> {
        let fibers: Vec<Vec<Subspace>> = base
            .strata()
            .iter()
            .map(|st| st.points.iter().map(|p| fiber(&st.name, p)).collect())
            .collect::<Result<_>>()?;
        let ranks = base
            .strata()
            .iter()
            .zip(&fibers)
            .map(|(st, fs)| (st.name.clone(), fs[0].dim()))
            .collect();
        Self::new(base, fiber_ambient, fibers, ranks)
    }

    /// `X × ℝᵏ`.
    pub fn trivial(base: Stratification, k: usize) -> Result<Self> {
        Self::from_fn(base, k, |_, _| Subspace::full(k))
    }

    pub fn base(&self) -> &Stratification {
        &self.base
    }

    pub fn fiber_ambient(&self) -> usize {
        self.fiber_ambient
    }

    pub fn fibers(&self) -> &[Vec<Subspace>] {
        &self.fibers
    }

    pub fn fiber(&self, stratum: usize, index: usize) -> Option<&Subspace> {
        self.fibers.get(stratum).and_then(|f| f.get(index))
    }

    pub fn ranks(&self) -> &BTreeMap<String, usize> {
        &self.ranks
    }

    pub fn rank(&self, stratum: &str) -> Option<usize> {
        self.ranks.get(stratum).copied()
    }

    fn stratum_index(&self, name: &str) -> Result<usize> {
        self.base
            .index_of(name)
            .ok_or_else(|| Error::Scenario(format!("unknown stratum {name}")))
    }
}

/// Wire form of a bundle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub base: Stratification,
    pub fiber_ambient: usize,
    pub fibers: Vec<FiberJson>,
    pub ranks: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiberJson {
    pub point_index: (StratumRef, usize),
    pub basis: Vec<Vec<f64>>,
}

/// A stratum given by name or by position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StratumRef {
    Index(usize),
    Name(String),
}

impl StratumRef {
    pub fn resolve(&self, base: &Stratification) -> Result<usize> {
        match self {
            StratumRef::Index(i) if *i < base.strata().len() => Ok(*i),
            StratumRef::Index(i) => Err(Error::Bundle(format!("stratum index {i} out of range"))),
            StratumRef::Name(n) => base
                .index_of(n)
                .ok_or_else(|| Error::Bundle(format!("unknown stratum {n}"))),
        }
    }
}

impl TryFrom<BundleJson> for SampledStratifiedBundle {
    type Error = Error;

    fn try_from(j: BundleJson) -> Result<Self> {
        if let Some(schema) = &j.schema {
            if schema != SCHEMA {
                return Err(Error::Bundle(format!("unsupported schema {schema}")));
            }
        }
        let mut slots: Vec<Vec<Option<Subspace>>> = j
            .base
            .strata()
            .iter()
            .map(|s| vec![None; s.points.len()])
            .collect();
        for f in j.fibers {
            let s = f.point_index.0.resolve(&j.base)?;
            let i = f.point_index.1;
            let slot = slots[s]
                .get_mut(i)
                .ok_or_else(|| Error::Bundle(format!("point index {i} out of range in stratum {s}")))?;
            if slot.is_some() {
                return Err(Error::Bundle(format!("duplicate fiber for point ({s}, {i})")));
            }
            *slot = Some(Subspace::span(&f.basis, j.fiber_ambient)?);
        }
        let mut fibers = Vec::with_capacity(slots.len());
        for (st, row) in j.base.strata().iter().zip(slots) {
            let mut out = Vec::with_capacity(row.len());
            for (i, f) in row.into_iter().enumerate() {
                out.push(f.ok_or_else(|| {
                    Error::Bundle(format!("missing fiber for point {i} of stratum {}", st.name))
                })?);
            }
            fibers.push(out);
        }
        SampledStratifiedBundle::new(j.base, j.fiber_ambient, fibers, j.ranks)
    }
}

impl From<SampledStratifiedBundle> for BundleJson {
    fn from(b: SampledStratifiedBundle) -> Self {
        let fibers = b
            .base
            .strata()
            .iter()
            .zip(&b.fibers)
            .flat_map(|(st, fs)| {
                fs.iter().enumerate().map(move |(i, f)| FiberJson {
                    point_index: (StratumRef::Name(st.name.clone()), i),
                    basis: f.basis_vectors(),
                })
            })
            .collect();
        BundleJson {
            schema: Some(SCHEMA.into()),
            base: b.base,
            fiber_ambient: b.fiber_ambient,
            fibers,
            ranks: b.ranks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FiberDefect {
    RankMismatch { expected: usize, found: usize },
    /// Basis not orthonormal or projection not a symmetric idempotent.
    Representation { residual: f64 },
    /// A rescaled fiber vector left the fiber.
    Scaling { residual: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberViolation {
    pub stratum: String,
    pub index: usize,
    pub point: Vec<f64>,
    pub defect: FiberDefect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleReport {
    pub verdict: Verdict,
    pub fibers_checked: usize,
    pub violations: Vec<FiberViolation>,
}

const SCALARS: [f64; 4] = [-2.0, 0.0, 0.5, 3.0];

/// Audits rank constancy per stratum, the subspace representation, and
/// closure of fibers under scalar multiplication (a tautology for linear
/// fibers, kept as a check on the representation).
pub fn validate_bundle(b: &SampledStratifiedBundle, tol: f64) -> BundleReport {
    let mut violations = Vec::new();
    let mut fibers_checked = 0;
    for (st, fs) in b.base.strata().iter().zip(&b.fibers) {
        let expected = b.ranks[&st.name];
        for (index, f) in fs.iter().enumerate() {
            fibers_checked += 1;
            let mut push = |defect| {
                violations.push(FiberViolation {
                    stratum: st.name.clone(),
                    index,
                    point: st.points[index].clone(),
                    defect,
                })
            };
            if f.dim() != expected {
                push(FiberDefect::RankMismatch {
                    expected,
                    found: f.dim(),
                });
            }
            let residual = f.invariant_residual();
            if residual > tol {
                push(FiberDefect::Representation { residual });
            }
            let mut scaling = 0.0f64;
            for v in f.basis_vectors() {
                for c in SCALARS {
                    let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
                    let d = f.distance_to(&scaled).expect("fiber ambient matches");
                    scaling = scaling.max(d / c.abs().max(1.0));
                }
            }
            if scaling > tol {
                push(FiberDefect::Scaling { residual: scaling });
            }
        }
    }
    BundleReport {
        verdict: Verdict::from_pass(violations.is_empty()),
        fibers_checked,
        violations,
    }
}

/// A declared sequence `x_n ∈ R` converging to `x₀ ∈ S`.
///
/// Indices refer to the point clouds of `S` and `R` in the base.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvergenceScenario {
    #[serde(rename = "S")]
    pub target: String,
    #[serde(rename = "R")]
    pub source: String,
    pub x0_index: usize,
    pub sequence_indices: Vec<usize>,
}

struct ResolvedScenario {
    target: usize,
    source: usize,
}

impl ConvergenceScenario {
    fn resolve(&self, b: &SampledStratifiedBundle, tail_len: usize) -> Result<ResolvedScenario> {
        let target = b.stratum_index(&self.target)?;
        let source = b.stratum_index(&self.source)?;
        let base = b.base();
        let x0 = base
            .point(target, self.x0_index)
            .ok_or_else(|| Error::Scenario(format!("x0_index {} out of range", self.x0_index)))?;
        if self.sequence_indices.is_empty() {
            return Err(Error::Scenario("empty sequence".into()));
        }
        let mut dists = Vec::with_capacity(self.sequence_indices.len());
        for &i in &self.sequence_indices {
            let p = base
                .point(source, i)
                .ok_or_else(|| Error::Scenario(format!("sequence index {i} out of range")))?;
            dists.push(linalg::distance(p, x0));
        }
        let tail = &dists[dists.len().saturating_sub(tail_len)..];
        if tail.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Scenario(
                "distance to x0 increases along the tail of the sequence".into(),
            ));
        }
        Ok(ResolvedScenario { target, source })
    }

    /// Scenario built by radial nearest-neighbor selection: the `count`
    /// points of `source` closest to `x0`, ordered by decreasing distance.
    ///
    /// A convenience for writing fixtures, not a definition of convergence.
    pub fn radial(
        base: &Stratification,
        target: &str,
        x0_index: usize,
        source: &str,
        count: usize,
    ) -> Result<Self> {
        let t = base
            .stratum(target)
            .ok_or_else(|| Error::Scenario(format!("unknown stratum {target}")))?;
        let x0 = t
            .points
            .get(x0_index)
            .ok_or_else(|| Error::Scenario(format!("x0_index {x0_index} out of range")))?;
        let r = base
            .stratum(source)
            .ok_or_else(|| Error::Scenario(format!("unknown stratum {source}")))?;
        let mut by_dist: Vec<(f64, usize)> = r
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (linalg::distance(p, x0), i))
            .collect();
        by_dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        by_dist.truncate(count);
        by_dist.reverse();
        Ok(Self {
            target: target.into(),
            source: source.into(),
            x0_index,
            sequence_indices: by_dist.into_iter().map(|(_, i)| i).collect(),
        })
    }
}

impl ConvergenceScenario {
    /// One radial scenario per declared pair `S ≤ R`, aimed at the point of
    /// `S` closest to `R`.
    pub fn declared(base: &Stratification, count: usize) -> Result<Vec<Self>> {
        base.closure_order()
            .iter()
            .map(|(s, r)| {
                let sp = &base.stratum(s).expect("declared strata exist").points;
                let rp = &base.stratum(r).expect("declared strata exist").points;
                let (_, x0, _) = crate::strata::cloud_distance(sp, rp);
                Self::radial(base, s, x0, r, count)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhitneyReport {
    pub verdict: Verdict,
    /// Containment residual of the fiber at `x₀` in the limit (PASS/FAIL only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    /// Largest pairwise gap on the examined tail.
    pub tail_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<Subspace>,
    /// Section route only: largest `‖f(x_n) − P_W f(x_n)‖` over the tail.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_residual: Option<f64>,
    /// Section route only: largest `‖f(x_last) − f(x₀)‖`; large values mean a
    /// section is not continuous at `x₀` along the sequence.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub section_jump: Option<f64>,
}

fn fiber_limit(
    b: &SampledStratifiedBundle,
    sc: &ConvergenceScenario,
    r: &ResolvedScenario,
    tol: f64,
    tail_len: usize,
) -> Result<(Limit, f64)> {
    let seq: Vec<Subspace> = sc
        .sequence_indices
        .iter()
        .map(|&i| b.fibers[r.source][i].clone())
        .collect();
    let seq = SubspaceSequence::new(seq)?;
    let limit = grassmann::sequence_limit(&seq, tol, tail_len)?;
    let tail_gap = match &limit {
        Limit::NoLimit { max_gap } => *max_gap,
        Limit::Converged(_) => {
            let tail = &seq.items()[seq.len() - tail_len..];
            let mut g = 0.0f64;
            for (i, a) in tail.iter().enumerate() {
                for c in &tail[i + 1..] {
                    g = g.max(grassmann::gap_distance(a, c)?);
                }
            }
            g
        }
    };
    Ok((limit, tail_gap))
}

/// Whitney A along one sequence: if the fibers over `x_n` converge to `W`,
/// the fiber over `x₀` must lie in `W`.
pub fn whitney_a_check(
    b: &SampledStratifiedBundle,
    sc: &ConvergenceScenario,
    tol: f64,
    tail_len: usize,
) -> Result<WhitneyReport> {
    let r = sc.resolve(b, tail_len)?;
    let (limit, tail_gap) = fiber_limit(b, sc, &r, tol, tail_len)?;
    let Limit::Converged(w) = limit else {
        return Ok(WhitneyReport {
            verdict: Verdict::Inconclusive,
            residual: None,
            tail_gap,
            limit: None,
            tail_residual: None,
            section_jump: None,
        });
    };
    let a0 = &b.fibers[r.target][sc.x0_index];
    let residual = grassmann::containment_residual(a0, &w)?;
    Ok(WhitneyReport {
        verdict: Verdict::from_pass(residual <= tol),
        residual: Some(residual),
        tail_gap,
        limit: Some(w),
        tail_residual: None,
        section_jump: None,
    })
}

/// A section: one vector of `ℝᵏ` per base sample, `values[s][i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SectionJson", into = "SectionJson")]
pub struct Section {
    values: BTreeMap<String, Vec<Vec<f64>>>,
}

/// Wire form: `{ "values": { "<stratum>": [[...], ...] } }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectionJson {
    pub values: BTreeMap<String, Vec<Vec<f64>>>,
}

impl TryFrom<SectionJson> for Section {
    type Error = Error;

    fn try_from(j: SectionJson) -> Result<Self> {
        Ok(Section { values: j.values })
    }
}

impl From<Section> for SectionJson {
    fn from(s: Section) -> Self {
        SectionJson { values: s.values }
    }
}

impl Section {
    pub fn from_fn(base: &Stratification, mut f: impl FnMut(&str, &[f64]) -> Vec<f64>) -> Self {
        let values = base
            .strata()
            .iter()
            .map(|st| {
                (
                    st.name.clone(),
                    st.points.iter().map(|p| f(&st.name, p)).collect(),
                )
            })
            .collect();
        Self { values }
    }

    pub fn value(&self, stratum: &str, index: usize) -> Option<&[f64]> {
        self.values
            .get(stratum)
            .and_then(|v| v.get(index))
            .map(Vec::as_slice)
    }

    fn check_against(&self, b: &SampledStratifiedBundle, tol: f64) -> Result<()> {
        for (st, fs) in b.base.strata().iter().zip(&b.fibers) {
            let vals = self
                .values
                .get(&st.name)
                .ok_or_else(|| Error::Section(format!("no values over stratum {}", st.name)))?;
            if vals.len() != fs.len() {
                return Err(Error::Section(format!(
                    "{} values over stratum {} with {} points",
                    vals.len(),
                    st.name,
                    fs.len()
                )));
            }
            for (i, (v, f)) in vals.iter().zip(fs).enumerate() {
                let d = f.distance_to(v)?;
                if d > tol {
                    return Err(Error::Section(format!(
                        "value over point {i} of stratum {} is {d:e} away from the fiber",
                        st.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Whitney A through sections.
///
/// Follows the argument that sections through every fiber vector force
/// Whitney A: with `W` the limit of the fibers over `x_n` and `f` a section,
/// `‖f(x_n) − P_W f(x_n)‖ → 0` because `f(x_n)` lies in its fiber, and
/// `f(x_n) → f(x₀)` by continuity, so `f(x₀) ∈ W`. Since the section values
/// at `x₀` span `A_{x₀}`, containment follows. The verdict is decided by
/// `‖f(x₀) − P_W f(x₀)‖ ≤ tol` for every section; the tail residual and the
/// continuity jump are reported alongside.
pub fn whitney_a_from_sections(
    b: &SampledStratifiedBundle,
    sections: &[Section],
    sc: &ConvergenceScenario,
    tol: f64,
    tail_len: usize,
) -> Result<WhitneyReport> {
    let r = sc.resolve(b, tail_len)?;
    for s in sections {
        s.check_against(b, tol)?;
    }
    let a0 = &b.fibers[r.target][sc.x0_index];
    let at_x0: Vec<Vec<f64>> = sections
        .iter()
        .map(|s| s.value(&sc.target, sc.x0_index).expect("checked").to_vec())
        .collect();
    let spanned = Subspace::span(&at_x0, b.fiber_ambient)?;
    if spanned.dim() != a0.dim() || grassmann::gap_distance(&spanned, a0)? > tol {
        return Err(Error::Section(format!(
            "section values at x0 span a {}-dimensional space, fiber has rank {}",
            spanned.dim(),
            a0.dim()
        )));
    }

    let (limit, tail_gap) = fiber_limit(b, sc, &r, tol, tail_len)?;
    let Limit::Converged(w) = limit else {
        return Ok(WhitneyReport {
            verdict: Verdict::Inconclusive,
            residual: None,
            tail_gap,
            limit: None,
            tail_residual: None,
            section_jump: None,
        });
    };

    let tail = &sc.sequence_indices[sc.sequence_indices.len() - tail_len..];
    let last = *tail.last().expect("tail is nonempty");
    let mut residual = 0.0f64;
    let mut tail_residual = 0.0f64;
    let mut jump = 0.0f64;
    for s in sections {
        for &i in tail {
            let v = s.value(&sc.source, i).expect("checked");
            tail_residual = tail_residual.max(w.distance_to(v)?);
        }
        let f0 = s.value(&sc.target, sc.x0_index).expect("checked");
        residual = residual.max(w.distance_to(f0)?);
        jump = jump.max(linalg::distance(
            s.value(&sc.source, last).expect("checked"),
            f0,
        ));
    }
    Ok(WhitneyReport {
        verdict: Verdict::from_pass(residual <= tol),
        residual: Some(residual),
        tail_gap,
        limit: Some(w),
        tail_residual: Some(tail_residual),
        section_jump: Some(jump),
    })
}

/// `F(A) = ⋃ₓ F(A_x)` over the same base, inside `F(ℝᵏ)`.
pub fn apply_functor_to_bundle(
    f: &LinearFunctor,
    b: &SampledStratifiedBundle,
    tol: f64,
) -> Result<SampledStratifiedBundle> {
    let report = validate_bundle(b, tol);
    if !report.verdict.is_pass() {
        return Err(Error::Bundle(format!(
            "input bundle fails validation ({} violations)",
            report.violations.len()
        )));
    }
    let fibers = b
        .fibers
        .iter()
        .map(|fs| fs.iter().map(|w| f.apply_to_subspace(w)).collect())
        .collect();
    let ranks = b
        .ranks
        .iter()
        .map(|(name, &r)| (name.clone(), f.dim_map(r)))
        .collect();
    SampledStratifiedBundle::new(b.base.clone(), f.dim_map(b.fiber_ambient), fibers, ranks)
}

/// A morphism `(f, H)`: base points go to base points, and over each source
/// point `x` an `l×k` matrix `H_x` carries `A_x` into `B_{f(x)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleMorphism {
    /// `base_map[s][i] = (stratum, index)` in the target base.
    pub base_map: Vec<Vec<(usize, usize)>>,
    pub fiber_maps: Vec<Vec<DMatrix<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphismReport {
    pub verdict: Verdict,
    /// Largest containment residual of `H_x(A_x)` in `B_{f(x)}`.
    pub max_residual: f64,
    /// Source points whose fiber image leaves the target fiber.
    pub fiber_violations: Vec<(String, usize)>,
    /// Source strata whose points land in more than one target stratum.
    pub split_strata: Vec<String>,
}

impl BundleMorphism {
    pub fn identity(b: &SampledStratifiedBundle) -> Self {
        Self::constant_map(b, DMatrix::identity(b.fiber_ambient, b.fiber_ambient))
    }

    /// Identity on the base, `h` on every fiber.
    pub fn constant_map(b: &SampledStratifiedBundle, h: DMatrix<f64>) -> Self {
        let base_map = b
            .base
            .strata()
            .iter()
            .enumerate()
            .map(|(s, st)| (0..st.points.len()).map(|i| (s, i)).collect())
            .collect();
        let fiber_maps = b
            .fibers
            .iter()
            .map(|fs| vec![h.clone(); fs.len()])
            .collect();
        Self {
            base_map,
            fiber_maps,
        }
    }

    fn check_shape(&self, src: &SampledStratifiedBundle, tgt: &SampledStratifiedBundle) -> Result<()> {
        let strata = src.base.strata();
        if self.base_map.len() != strata.len() || self.fiber_maps.len() != strata.len() {
            return Err(Error::Morphism("morphism does not cover every source stratum".into()));
        }
        for (s, st) in strata.iter().enumerate() {
            if self.base_map[s].len() != st.points.len() || self.fiber_maps[s].len() != st.points.len() {
                return Err(Error::Morphism(format!(
                    "morphism does not cover every point of stratum {}",
                    st.name
                )));
            }
            for (&(ts, ti), h) in self.base_map[s].iter().zip(&self.fiber_maps[s]) {
                if tgt.fiber(ts, ti).is_none() {
                    return Err(Error::Morphism(format!("target point ({ts}, {ti}) does not exist")));
                }
                if h.shape() != (tgt.fiber_ambient, src.fiber_ambient) {
                    return Err(Error::Morphism(format!(
                        "fiber map has shape {:?}, expected {:?}",
                        h.shape(),
                        (tgt.fiber_ambient, src.fiber_ambient)
                    )));
                }
            }
        }
        Ok(())
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &BundleMorphism) -> Result<BundleMorphism> {
        let mut base_map = Vec::with_capacity(first.base_map.len());
        let mut fiber_maps = Vec::with_capacity(first.base_map.len());
        for (row_b, row_h) in first.base_map.iter().zip(&first.fiber_maps) {
            let mut bm = Vec::with_capacity(row_b.len());
            let mut fm = Vec::with_capacity(row_b.len());
            for (&(s, i), h1) in row_b.iter().zip(row_h) {
                let next = self
                    .base_map
                    .get(s)
                    .and_then(|r| r.get(i))
                    .ok_or_else(|| Error::Morphism(format!("point ({s}, {i}) is not in the domain")))?;
                let h2 = &self.fiber_maps[s][i];
                if h2.ncols() != h1.nrows() {
                    return Err(Error::Morphism("fiber maps do not compose".into()));
                }
                bm.push(*next);
                fm.push(h2 * h1);
            }
            base_map.push(bm);
            fiber_maps.push(fm);
        }
        Ok(BundleMorphism {
            base_map,
            fiber_maps,
        })
    }
}

/// Checks that `m` is a morphism `src → tgt`: fibers map into fibers, and
/// every source stratum lands inside a single target stratum.
pub fn validate_morphism(
    m: &BundleMorphism,
    src: &SampledStratifiedBundle,
    tgt: &SampledStratifiedBundle,
    tol: f64,
) -> Result<MorphismReport> {
    m.check_shape(src, tgt)?;
    let mut max_residual = 0.0f64;
    let mut fiber_violations = Vec::new();
    let mut split_strata = Vec::new();
    for (s, st) in src.base.strata().iter().enumerate() {
        let first_target = m.base_map[s][0].0;
        if m.base_map[s].iter().any(|&(ts, _)| ts != first_target) {
            split_strata.push(st.name.clone());
        }
        for (i, (&(ts, ti), h)) in m.base_map[s].iter().zip(&m.fiber_maps[s]).enumerate() {
            let image = grassmann::apply_linear_map(h, &src.fibers[s][i])?;
            let r = grassmann::containment_residual(&image, &tgt.fibers[ts][ti])?;
            max_residual = max_residual.max(r);
            if r > tol {
                fiber_violations.push((st.name.clone(), i));
            }
        }
    }
    Ok(MorphismReport {
        verdict: Verdict::from_pass(fiber_violations.is_empty() && split_strata.is_empty()),
        max_residual,
        fiber_violations,
        split_strata,
    })
}

/// `F(ψ)` with `F(ψ)|_{F(A)_x} = F(ψ|_{A_x})`; the result is validated
/// against `F(src) → F(tgt)`.
pub fn apply_functor_to_morphism(
    f: &LinearFunctor,
    m: &BundleMorphism,
    src: &SampledStratifiedBundle,
    tgt: &SampledStratifiedBundle,
    tol: f64,
) -> Result<BundleMorphism> {
    let report = validate_morphism(m, src, tgt, tol)?;
    if !report.verdict.is_pass() {
        return Err(Error::Morphism("input is not a bundle morphism".into()));
    }
    let mapped = BundleMorphism {
        base_map: m.base_map.clone(),
        fiber_maps: m
            .fiber_maps
            .iter()
            .map(|row| row.iter().map(|h| f.apply_to_map(h)).collect())
            .collect(),
    };
    let fsrc = apply_functor_to_bundle(f, src, tol)?;
    let ftgt = apply_functor_to_bundle(f, tgt, tol)?;
    let post = validate_morphism(&mapped, &fsrc, &ftgt, tol)?;
    if !post.verdict.is_pass() {
        return Err(Error::Morphism(format!(
            "functor image is not a morphism (residual {:e})",
            post.max_residual
        )));
    }
    Ok(mapped)
}

/// Compatibility of two trivializations of the same bundle on an overlap,
/// given as morphisms in both directions: `backward ∘ forward` must act as
/// the identity on every fiber of `a`. Returns the largest
/// `‖(H_back H_fwd − I) P_{A_x}‖`.
pub fn overlap_round_trip_residual(
    forward: &BundleMorphism,
    backward: &BundleMorphism,
    a: &SampledStratifiedBundle,
) -> Result<f64> {
    let round = backward.after(forward)?;
    let mut worst = 0.0f64;
    for (s, row) in round.base_map.iter().enumerate() {
        for (i, &(ts, ti)) in row.iter().enumerate() {
            if (ts, ti) != (s, i) {
                return Err(Error::Morphism(format!(
                    "round trip moves point ({s}, {i}) to ({ts}, {ti})"
                )));
            }
            let p = a.fibers[s][i].projection();
            let h = &round.fiber_maps[s][i];
            if h.shape() != p.shape() {
                return Err(Error::Morphism("round trip changes the fiber dimension".into()));
            }
            worst = worst.max(linalg::op_norm(&(h * p - p)));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;

    #[test]
    fn trivial_bundle_validates() {
        let b = SampledStratifiedBundle::trivial(fixtures::line_base(20), 2).unwrap();
        let rep = validate_bundle(&b, 1e-10);
        assert_eq!(rep.verdict, Verdict::Pass);
        assert_eq!(rep.fibers_checked, b.base().num_points());
    }

    #[test]
    fn wrong_rank_is_named() {
        let base = fixtures::line_base(10);
        let b = SampledStratifiedBundle::from_fn(base.clone(), 2, |_, _| {
            Subspace::span(&[vec![1.0, 0.0]], 2).unwrap()
        })
        .unwrap();
        let mut fibers = b.fibers().to_vec();
        let s = base.index_of("R+").unwrap();
        fibers[s][3] = Subspace::full(2);
        let bad = SampledStratifiedBundle::new(base, 2, fibers, b.ranks().clone()).unwrap();
        let rep = validate_bundle(&bad, 1e-10);
        assert_eq!(rep.verdict, Verdict::Fail);
        assert_eq!(rep.violations.len(), 1);
        assert_eq!(rep.violations[0].stratum, "R+");
        assert_eq!(rep.violations[0].index, 3);
        assert_eq!(
            rep.violations[0].defect,
            FiberDefect::RankMismatch { expected: 1, found: 2 }
        );
    }

    #[test]
    fn construction_errors() {
        let base = fixtures::line_base(5);
        let ranks: BTreeMap<String, usize> =
            base.strata().iter().map(|s| (s.name.clone(), 1)).collect();
        let short = vec![vec![Subspace::full(1)]; 1];
        assert!(SampledStratifiedBundle::new(base.clone(), 1, short, ranks.clone()).is_err());
        let fibers: Vec<Vec<Subspace>> = base
            .strata()
            .iter()
            .map(|s| vec![Subspace::full(2); s.points.len()])
            .collect();
        assert!(SampledStratifiedBundle::new(base.clone(), 1, fibers, ranks.clone()).is_err());
        let mut missing = ranks.clone();
        missing.remove("S0");
        let good: Vec<Vec<Subspace>> = base
            .strata()
            .iter()
            .map(|s| vec![Subspace::full(1); s.points.len()])
            .collect();
        assert!(SampledStratifiedBundle::new(base.clone(), 1, good.clone(), missing).is_err());
        let mut extra = ranks;
        extra.insert("nope".into(), 0);
        assert!(SampledStratifiedBundle::new(base, 1, good, extra).is_err());
    }

    #[test]
    fn missing_fiber_in_json_is_an_error() {
        let b = SampledStratifiedBundle::trivial(fixtures::line_base(4), 1).unwrap();
        let mut j: BundleJson = b.into();
        j.fibers.pop();
        let text = serde_json::to_string(&j).unwrap();
        let err = serde_json::from_str::<SampledStratifiedBundle>(&text).unwrap_err();
        assert!(err.to_string().contains("missing fiber"), "{err}");
    }

    #[test]
    fn json_accepts_index_refs() {
        let b = SampledStratifiedBundle::trivial(fixtures::line_base(4), 1).unwrap();
        let mut j: BundleJson = b.clone().into();
        for f in &mut j.fibers {
            let idx = f.point_index.0.resolve(&j.base).unwrap();
            f.point_index.0 = StratumRef::Index(idx);
        }
        j.schema = None;
        let back: SampledStratifiedBundle =
            serde_json::from_str(&serde_json::to_string(&j).unwrap()).unwrap();
        assert_eq!(back.ranks(), b.ranks());
    }

    #[test]
    fn whitney_pass_fixture() {
        let b = fixtures::tilted_line_bundle(fixtures::VertexFiber::Horizontal);
        let sc = fixtures::tilted_line_scenario(&b);
        let rep = whitney_a_check(&b, &sc, 1e-3, 5).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        // Oracle: the limit line is the last fiber, at angle arctan(x_N).
        let x_n = 1.0 / fixtures::TILTED_LINE_SAMPLES as f64;
        assert_abs_diff_eq!(rep.residual.unwrap(), x_n.atan().sin(), epsilon = 1e-9);
    }

    #[test]
    fn whitney_fail_fixture_has_unit_residual() {
        let b = fixtures::tilted_line_bundle(fixtures::VertexFiber::Vertical);
        let sc = fixtures::tilted_line_scenario(&b);
        let rep = whitney_a_check(&b, &sc, 1e-3, 5).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        assert_abs_diff_eq!(rep.residual.unwrap(), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn whitney_rank_zero_vertex_passes() {
        let b = fixtures::tilted_line_bundle(fixtures::VertexFiber::Zero);
        let sc = fixtures::tilted_line_scenario(&b);
        let rep = whitney_a_check(&b, &sc, 1e-3, 5).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        assert_eq!(rep.residual, Some(0.0));
    }

    #[test]
    fn oscillating_fibers_are_inconclusive() {
        let base = fixtures::line_base(40);
        let b = SampledStratifiedBundle::from_fn(base, 2, |_, p| {
            let k = (p[0].abs() * 1000.0).round() as i64;
            if k % 2 == 0 {
                Subspace::span(&[vec![1.0, 0.0]], 2).unwrap()
            } else {
                Subspace::span(&[vec![0.0, 1.0]], 2).unwrap()
            }
        })
        .unwrap();
        let sc = ConvergenceScenario::radial(b.base(), "S0", 0, "R+", 20).unwrap();
        let rep = whitney_a_check(&b, &sc, 1e-3, 5).unwrap();
        assert_eq!(rep.verdict, Verdict::Inconclusive);
        assert!(rep.residual.is_none());
    }

    #[test]
    fn scenario_errors() {
        let b = fixtures::tilted_line_bundle(fixtures::VertexFiber::Horizontal);
        let mut sc = fixtures::tilted_line_scenario(&b);
        sc.x0_index = 7;
        assert!(whitney_a_check(&b, &sc, 1e-3, 5).is_err());
        let mut sc = fixtures::tilted_line_scenario(&b);
        sc.source = "nope".into();
        assert!(whitney_a_check(&b, &sc, 1e-3, 5).is_err());
        let mut sc = fixtures::tilted_line_scenario(&b);
        sc.sequence_indices.reverse();
        assert!(matches!(whitney_a_check(&b, &sc, 1e-3, 5), Err(Error::Scenario(_))));
    }

    #[test]
    fn sections_route_pass() {
        let b = fixtures::tilted_line_bundle(fixtures::VertexFiber::Horizontal);
        let sc = fixtures::tilted_line_scenario(&b);
        let sec = Section::from_fn(b.base(), |_, p| vec![1.0, p[0]]);
        let rep = whitney_a_from_sections(&b, &[sec], &sc, 1e-3, 5).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        let tr = rep.tail_residual.unwrap();
        assert!(tr < 2e-6, "{tr}");
        assert!(rep.section_jump.unwrap() < 1e-3);
    }

    #[test]
    fn sections_route_zero_section_on_rank_zero_fiber() {
        let b = fixtures::tilted_line_bundle(fixtures::VertexFiber::Zero);
        let sc = fixtures::tilted_line_scenario(&b);
        let zero = Section::from_fn(b.base(), |_, _| vec![0.0, 0.0]);
        let rep = whitney_a_from_sections(&b, &[zero], &sc, 1e-3, 5).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
    }

    #[test]
    fn sections_route_detects_jump() {
        let b = fixtures::tilted_line_bundle(fixtures::VertexFiber::Vertical);
        let sc = fixtures::tilted_line_scenario(&b);
        let sec = Section::from_fn(b.base(), |name, p| {
            if name == "S0" {
                vec![0.0, 1.0]
            } else {
                vec![1.0, p[0]]
            }
        });
        let rep = whitney_a_from_sections(&b, &[sec], &sc, 1e-3, 5).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        assert!(rep.section_jump.unwrap() > 0.9);
    }

    #[test]
    fn sections_must_lie_in_fibers_and_span() {
        let b = fixtures::tilted_line_bundle(fixtures::VertexFiber::Horizontal);
        let sc = fixtures::tilted_line_scenario(&b);
        let off = Section::from_fn(b.base(), |_, _| vec![0.0, 1.0]);
        assert!(matches!(
            whitney_a_from_sections(&b, &[off], &sc, 1e-3, 5),
            Err(Error::Section(_))
        ));
        let zero = Section::from_fn(b.base(), |_, _| vec![0.0, 0.0]);
        assert!(matches!(
            whitney_a_from_sections(&b, &[zero], &sc, 1e-3, 5),
            Err(Error::Section(_))
        ));
    }

    #[test]
    fn functor_on_bundles() {
        let trivial = SampledStratifiedBundle::trivial(fixtures::line_base(10), 3).unwrap();
        let w2 = LinearFunctor::WedgePower(2);
        let out = apply_functor_to_bundle(&w2, &trivial, 1e-10).unwrap();
        assert_eq!(out.fiber_ambient(), 3);
        assert!(out.ranks().values().all(|&r| r == 3));

        let id = apply_functor_to_bundle(&LinearFunctor::Identity, &trivial, 1e-10).unwrap();
        assert_eq!(id, trivial);

        // Ranks (2,1,2) become (C(2,2), C(1,2), C(2,2)) = (1,0,1).
        let base = fixtures::line_base(10);
        let b = SampledStratifiedBundle::from_fn(base, 3, |name, _| {
            if name == "S0" {
                Subspace::span(&[vec![1.0, 0.0, 0.0]], 3).unwrap()
            } else {
                Subspace::span(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], 3).unwrap()
            }
        })
        .unwrap();
        let out = apply_functor_to_bundle(&w2, &b, 1e-10).unwrap();
        assert_eq!(out.rank("S0"), Some(0));
        assert_eq!(out.rank("R+"), Some(1));
        assert_eq!(out.rank("R-"), Some(1));
        assert_eq!(validate_bundle(&out, 1e-10).verdict, Verdict::Pass);
    }

    #[test]
    fn functor_on_morphisms() {
        let trivial = SampledStratifiedBundle::trivial(fixtures::line_base(6), 2).unwrap();
        let f = LinearFunctor::TensorPower(2);
        let id = BundleMorphism::identity(&trivial);
        let fid = apply_functor_to_morphism(&f, &id, &trivial, &trivial, 1e-10).unwrap();
        for row in &fid.fiber_maps {
            for h in row {
                assert_abs_diff_eq!(*h, DMatrix::identity(4, 4), epsilon = 1e-15);
            }
        }

        let zero = BundleMorphism::constant_map(&trivial, DMatrix::zeros(2, 2));
        let fzero = apply_functor_to_morphism(&f, &zero, &trivial, &trivial, 1e-10).unwrap();
        assert!(fzero.fiber_maps.iter().flatten().all(|h| h.amax() == 0.0));
    }

    #[test]
    fn inclusion_under_tensor_square() {
        // Inclusion of the rank-1 bundle X×ℝ into X×ℝ² along e₁.
        let base = fixtures::line_base(6);
        let line = SampledStratifiedBundle::trivial(base.clone(), 1).unwrap();
        let plane = SampledStratifiedBundle::trivial(base, 2).unwrap();
        let incl = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let m = BundleMorphism {
            base_map: BundleMorphism::identity(&line).base_map,
            fiber_maps: line.fibers().iter().map(|fs| vec![incl.clone(); fs.len()]).collect(),
        };
        let f = LinearFunctor::TensorPower(2);
        let fm = apply_functor_to_morphism(&f, &m, &line, &plane, 1e-10).unwrap();
        // Oracle: Kronecker product of the column (1,0) with itself.
        let oracle = DMatrix::from_fn(4, 1, |i, _| incl[(i / 2, 0)] * incl[(i % 2, 0)]);
        for h in fm.fiber_maps.iter().flatten() {
            assert_abs_diff_eq!(*h, oracle, epsilon = 1e-15);
        }
    }

    #[test]
    fn morphism_validation_flags_bad_maps() {
        let b = fixtures::tilted_line_bundle(fixtures::VertexFiber::Horizontal);
        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let m = BundleMorphism::constant_map(&b, swap);
        let rep = validate_morphism(&m, &b, &b, 1e-8).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        assert!(!rep.fiber_violations.is_empty());
        let bad_shape = BundleMorphism::constant_map(&b, DMatrix::zeros(3, 2));
        assert!(validate_morphism(&bad_shape, &b, &b, 1e-8).is_err());
    }

    #[test]
    fn overlap_round_trip() {
        let b = SampledStratifiedBundle::trivial(fixtures::line_base(5), 2).unwrap();
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let fwd = BundleMorphism::constant_map(&b, rot.clone());
        let back = BundleMorphism::constant_map(&b, rot.transpose());
        assert!(overlap_round_trip_residual(&fwd, &back, &b).unwrap() < 1e-15);
        let r = overlap_round_trip_residual(&fwd, &fwd, &b).unwrap();
        assert_abs_diff_eq!(r, 2.0, epsilon = 1e-12);
    }
}
