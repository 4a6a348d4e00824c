//! Distributions spanned by polynomial vector fields.
//!
//! The fields generate a singular foliation whose tangent distribution
//! `T𝓕` jumps in rank. Grouping samples by rank and by connected component
//! gives a stratification on which `T𝓕` is a stratified vector bundle, and
//! the generating fields are global sections through every fiber vector.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::bundle::{SampledStratifiedBundle, Section};
use crate::error::{Error, Result};
use crate::grassmann::Subspace;
use crate::poly::{Monomial, PolyMap};
use crate::strata::{self, FrontierReport, Stratification, Stratum};

/// Generating fields together with the base samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FieldsJson", into = "FieldsJson")]
pub struct VectorFieldSet {
    ambient: usize,
    fields: Vec<PolyMap>,
    samples: Vec<Vec<f64>>,
}

impl VectorFieldSet {
    pub fn new(ambient: usize, fields: Vec<PolyMap>, samples: Vec<Vec<f64>>) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::Evaluator("at least one vector field is required".into()));
        }
        for (i, f) in fields.iter().enumerate() {
            if f.nvars() != ambient || f.nout() != ambient {
                return Err(Error::Evaluator(format!(
                    "field {i} is not a vector field on ℝ^{ambient}"
                )));
            }
        }
        if samples.is_empty() {
            return Err(Error::Evaluator("no samples".into()));
        }
        for (j, x) in samples.iter().enumerate() {
            if x.len() != ambient || x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Evaluator(format!("sample {j} is not a finite point of ℝ^{ambient}")));
            }
            for (i, f) in fields.iter().enumerate() {
                f.eval(x)
                    .map_err(|e| Error::Evaluator(format!("field {i} at sample {j}: {e}")))?;
            }
        }
        Ok(Self {
            ambient,
            fields,
            samples,
        })
    }

    /// Builds fields from coefficient tables.
    pub fn from_tables(ambient: usize, tables: Vec<Vec<Monomial>>, samples: Vec<Vec<f64>>) -> Result<Self> {
        let fields = tables
            .into_iter()
            .map(|t| PolyMap::new(ambient, ambient, t))
            .collect::<Result<Vec<_>>>()?;
        Self::new(ambient, fields, samples)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn fields(&self) -> &[PolyMap] {
        &self.fields
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    /// The same fields over other samples.
    pub fn with_samples(&self, samples: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(self.ambient, self.fields.clone(), samples)
    }

    fn values_at(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.fields.iter().map(|f| f.eval(x)).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldJson {
    pub coeffs: Vec<Monomial>,
}

/// Wire form: `{ "ambient": n, "fields": [{ "coeffs": [{ "e": [...], "c": [...] }] }], "samples": [...] }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldsJson {
    pub ambient: usize,
    pub fields: Vec<FieldJson>,
    pub samples: Vec<Vec<f64>>,
}

impl TryFrom<FieldsJson> for VectorFieldSet {
    type Error = Error;

    fn try_from(j: FieldsJson) -> Result<Self> {
        VectorFieldSet::from_tables(j.ambient, j.fields.into_iter().map(|f| f.coeffs).collect(), j.samples)
    }
}

impl From<VectorFieldSet> for FieldsJson {
    fn from(v: VectorFieldSet) -> Self {
        FieldsJson {
            ambient: v.ambient,
            fields: v
                .fields
                .iter()
                .map(|f| FieldJson {
                    coeffs: f.terms().to_vec(),
                })
                .collect(),
            samples: v.samples,
        }
    }
}

/// `Δ_x = span{ X(x) }`.
pub fn distribution_at(vfs: &VectorFieldSet, x: &[f64], tol_rank: f64) -> Result<Subspace> {
    Subspace::span_with_tol(&vfs.values_at(x)?, vfs.ambient, tol_rank)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankStratification {
    pub stratification: Stratification,
    /// Distribution rank on each stratum.
    pub ranks: BTreeMap<String, usize>,
    /// `(stratum, index)` of every sample, in input order.
    pub membership: Vec<(usize, usize)>,
    /// Frontier audit of the declared order at radius `r_cc`.
    pub frontier: FrontierReport,
}

/// Groups samples by distribution rank and splits each group into
/// single-linkage components at `r_cc`. Strata are ordered by their first
/// sample. `S ≤ R` is declared when `rank S < rank R` and the clouds come
/// within `r_cc`, then closed transitively.
pub fn stratify_by_rank(vfs: &VectorFieldSet, r_cc: f64, tol_rank: f64) -> Result<RankStratification> {
    if !(r_cc.is_finite() && r_cc > 0.0) {
        return Err(Error::Config(format!("r_cc must be positive, got {r_cc}")));
    }
    let ranks: Vec<usize> = vfs
        .samples
        .iter()
        .map(|x| distribution_at(vfs, x, tol_rank).map(|d| d.dim()))
        .collect::<Result<_>>()?;

    let distinct: BTreeSet<usize> = ranks.iter().copied().collect();
    let mut components: Vec<(usize, Vec<usize>)> = Vec::new();
    for &r in &distinct {
        let idx: Vec<usize> = (0..ranks.len()).filter(|&i| ranks[i] == r).collect();
        let refs: Vec<&[f64]> = idx.iter().map(|&i| vfs.samples[i].as_slice()).collect();
        for comp in strata::single_linkage(&refs, r_cc) {
            components.push((r, comp.into_iter().map(|k| idx[k]).collect()));
        }
    }
    components.sort_by_key(|(_, members)| members[0]);

    let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
    let mut strata_out = Vec::with_capacity(components.len());
    let mut rank_of = BTreeMap::new();
    let mut membership = vec![(0, 0); vfs.samples.len()];
    for (s, (r, members)) in components.iter().enumerate() {
        let c = seen.entry(*r).or_insert(0);
        let name = format!("rank{r}.{c}");
        *c += 1;
        for (j, &i) in members.iter().enumerate() {
            membership[i] = (s, j);
        }
        let points: Vec<Vec<f64>> = members.iter().map(|&i| vfs.samples[i].clone()).collect();
        let refs: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
        strata_out.push(Stratum {
            name: name.clone(),
            dim: strata::estimate_dim(&refs, r_cc),
            points,
        });
        rank_of.insert(name, *r);
    }

    let mut closure = Vec::new();
    for (a, sa) in strata_out.iter().enumerate() {
        for (b, sb) in strata_out.iter().enumerate() {
            if components[a].0 < components[b].0
                && strata::cloud_distance(&sa.points, &sb.points).0 <= r_cc
            {
                closure.push((sa.name.clone(), sb.name.clone()));
            }
        }
    }
    let stratification = Stratification::new(vfs.ambient, strata_out, closure)?;
    let frontier = strata::check_frontier(&stratification, r_cc, r_cc);
    Ok(RankStratification {
        stratification,
        ranks: rank_of,
        membership,
        frontier,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoliationBundle {
    pub bundle: SampledStratifiedBundle,
    pub frontier: FrontierReport,
}

/// `T𝓕` over the rank stratification.
pub fn foliation_bundle(vfs: &VectorFieldSet, r_cc: f64, tol_rank: f64) -> Result<FoliationBundle> {
    let rs = stratify_by_rank(vfs, r_cc, tol_rank)?;
    let bundle = SampledStratifiedBundle::try_from_fn(rs.stratification, vfs.ambient, |_, x| {
        distribution_at(vfs, x, tol_rank)
    })?;
    for (st, fs) in bundle.base().strata().iter().zip(bundle.fibers()) {
        let found: BTreeSet<usize> = fs.iter().map(Subspace::dim).collect();
        if found.len() > 1 || found.iter().any(|r| Some(*r) != rs.ranks.get(&st.name).copied()) {
            return Err(Error::RankNotConstant {
                stratum: st.name.clone(),
                ranks: found.into_iter().collect(),
            });
        }
    }
    Ok(FoliationBundle {
        bundle,
        frontier: rs.frontier,
    })
}

/// The generating fields as sections of `T𝓕` over the samples of `base`.
pub fn generating_sections(vfs: &VectorFieldSet, base: &Stratification) -> Result<Vec<Section>> {
    (0..vfs.fields.len())
        .map(|i| {
            let mut err = None;
            let s = Section::from_fn(base, |_, x| match vfs.fields[i].eval(x) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    vec![0.0; vfs.ambient]
                }
            });
            err.map_or(Ok(s), Err)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{validate_bundle, whitney_a_from_sections, ConvergenceScenario};
    use crate::fixtures;
    use crate::grassmann::gap_distance;
    use crate::report::Verdict;

    fn mono(e: &[u32], c: &[f64]) -> Monomial {
        Monomial {
            e: e.to_vec(),
            c: c.to_vec(),
        }
    }

    #[test]
    fn distribution_examples() {
        let euler = fixtures::euler_field(1);
        let d = distribution_at(&euler, &[2.0], 1e-8).unwrap();
        assert_eq!(d.dim(), 1);
        assert!(distribution_at(&euler, &[0.0], 1e-8).unwrap().is_zero());

        // {∂x, x∂y} at (1, 5)
        let v = VectorFieldSet::from_tables(
            2,
            vec![
                vec![mono(&[0, 0], &[1.0, 0.0])],
                vec![mono(&[1, 0], &[0.0, 1.0])],
            ],
            vec![vec![1.0, 5.0]],
        )
        .unwrap();
        assert_eq!(distribution_at(&v, &[1.0, 5.0], 1e-8).unwrap().dim(), 2);
        assert_eq!(distribution_at(&v, &[0.0, 5.0], 1e-8).unwrap().dim(), 1);
    }

    #[test]
    fn euler_field_three_strata() {
        let rs = stratify_by_rank(&fixtures::euler_field(1), 0.015, 1e-8).unwrap();
        let st = rs.stratification.strata();
        assert_eq!(st.len(), 3);
        let ranks: Vec<usize> = st.iter().map(|s| rs.ranks[&s.name]).collect();
        assert_eq!(ranks, vec![1, 0, 1]);
        assert_eq!(st[1].points, vec![vec![0.0]]);
        assert_eq!(st[0].points.len(), 100);
        assert_eq!(st[2].points.len(), 100);
        assert_eq!((st[0].dim, st[1].dim, st[2].dim), (1, 0, 1));
        assert!(rs.frontier.pass, "{:?}", rs.frontier.violations);
        assert!(rs.stratification.declares("rank0.0", "rank1.0"));
        assert!(rs.stratification.declares("rank0.0", "rank1.1"));
    }

    #[test]
    fn squared_field_gives_the_same_bundle() {
        let a = foliation_bundle(&fixtures::euler_field(1), 0.015, 1e-8).unwrap();
        let b = foliation_bundle(&fixtures::euler_field(2), 0.015, 1e-8).unwrap();
        assert_eq!(a.bundle.base(), b.bundle.base());
        assert_eq!(a.bundle.ranks(), b.bundle.ranks());
        for (x, y) in a.bundle.fibers().iter().flatten().zip(b.bundle.fibers().iter().flatten()) {
            assert!(gap_distance(x, y).unwrap() < 1e-12);
        }
    }

    #[test]
    fn constant_field_is_trivial() {
        let pts: Vec<Vec<f64>> = (0..5)
            .flat_map(|i| (0..5).map(move |j| vec![i as f64 * 0.25, j as f64 * 0.25]))
            .collect();
        let v = VectorFieldSet::from_tables(2, vec![vec![mono(&[0, 0], &[1.0, 0.0])]], pts).unwrap();
        let fb = foliation_bundle(&v, 0.3, 1e-8).unwrap();
        assert_eq!(fb.bundle.base().strata().len(), 1);
        assert_eq!(fb.bundle.ranks().values().copied().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn coordinate_fields_on_the_plane() {
        let v = fixtures::coordinate_fields(3);
        let rs = stratify_by_rank(&v, 1.2, 1e-8).unwrap();
        let mut by_rank: BTreeMap<usize, usize> = BTreeMap::new();
        for r in rs.ranks.values() {
            *by_rank.entry(*r).or_insert(0) += 1;
        }
        // origin; four half axes; four open quadrants
        assert_eq!(by_rank, BTreeMap::from([(0, 1), (1, 4), (2, 4)]));
        assert!(rs.frontier.pass, "{:?}", rs.frontier.violations);
    }

    #[test]
    fn foliation_bundles_validate_and_satisfy_whitney_a() {
        for (v, r_cc) in [
            (fixtures::euler_field(1), 0.015),
            (fixtures::euler_field(2), 0.015),
            (fixtures::coordinate_fields(6), 1.2),
        ] {
            let fb = foliation_bundle(&v, r_cc, 1e-8).unwrap();
            assert_eq!(validate_bundle(&fb.bundle, 1e-10).verdict, Verdict::Pass);
            let sections = generating_sections(&v, fb.bundle.base()).unwrap();
            let scenarios = ConvergenceScenario::declared(fb.bundle.base(), 5).unwrap();
            assert!(!scenarios.is_empty());
            for sc in scenarios {
                let rep = whitney_a_from_sections(&fb.bundle, &sections, &sc, 1e-6, 5).unwrap();
                assert_eq!(rep.verdict, Verdict::Pass, "{sc:?}");
            }
        }
    }

    #[test]
    fn euler_whitney_along_harmonic_sequence() {
        let fb = foliation_bundle(&fixtures::euler_field(1), 0.015, 1e-8).unwrap();
        let base = fb.bundle.base();
        let sc = ConvergenceScenario::radial(base, "rank0.0", 0, "rank1.1", 100).unwrap();
        let sections = generating_sections(&fixtures::euler_field(1), base).unwrap();
        let rep = whitney_a_from_sections(&fb.bundle, &sections, &sc, 1e-6, 5).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        assert!(rep.section_jump.unwrap() <= 0.05 + 1e-12);
    }

    #[test]
    fn input_errors() {
        assert!(VectorFieldSet::new(1, vec![], vec![vec![0.0]]).is_err());
        assert!(VectorFieldSet::from_tables(1, vec![vec![mono(&[1], &[1.0])]], vec![vec![0.0, 1.0]]).is_err());
        assert!(stratify_by_rank(&fixtures::euler_field(1), 0.0, 1e-8).is_err());
    }

    #[test]
    fn json_round_trip() {
        let v = fixtures::coordinate_fields(1);
        let text = serde_json::to_string(&v).unwrap();
        assert_eq!(serde_json::from_str::<VectorFieldSet>(&text).unwrap(), v);
    }
}
