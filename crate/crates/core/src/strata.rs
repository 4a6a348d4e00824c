//! Stratifications sampled as point clouds.
//!
//! Closure relations between strata are declared, never inferred: the
//! topological closure of an infinite set is not recoverable from samples.
//! The checks here audit a declared order against the samples.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::config::{DEFAULT_FRONTIER_FACTOR, DEFAULT_TOL_RANK};
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub name: String,
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
}

/// A finite set of strata together with a declared closure order.
///
/// `(s, r)` in the closure order means `s ⊂ closure(r)`. The order handed in
/// is closed transitively on construction and must be acyclic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StratificationJson", into = "StratificationJson")]
pub struct Stratification {
    ambient: usize,
    strata: Vec<Stratum>,
    closure: BTreeSet<(String, String)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StratificationJson {
    pub ambient: usize,
    pub strata: Vec<Stratum>,
    #[serde(default)]
    pub closure: Vec<(String, String)>,
}

impl TryFrom<StratificationJson> for Stratification {
    type Error = Error;

    fn try_from(j: StratificationJson) -> Result<Self> {
        Stratification::new(j.ambient, j.strata, j.closure)
    }
}

impl From<Stratification> for StratificationJson {
    fn from(s: Stratification) -> Self {
        StratificationJson {
            ambient: s.ambient,
            strata: s.strata,
            closure: s.closure.into_iter().collect(),
        }
    }
}

impl Stratification {
    pub fn new(
        ambient: usize,
        strata: Vec<Stratum>,
        closure: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self> {
        if strata.is_empty() {
            return Err(Error::Stratification("no strata".into()));
        }
        let mut names = BTreeSet::new();
        for s in &strata {
            if !names.insert(s.name.as_str()) {
                return Err(Error::Stratification(format!("duplicate stratum name {}", s.name)));
            }
            if s.points.is_empty() {
                return Err(Error::Stratification(format!("stratum {} has no points", s.name)));
            }
            for p in &s.points {
                if p.len() != ambient {
                    return Err(Error::Stratification(format!(
                        "stratum {} has a point of dimension {}, ambient is {ambient}",
                        s.name,
                        p.len()
                    )));
                }
                if p.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Stratification(format!(
                        "stratum {} has a non-finite coordinate",
                        s.name
                    )));
                }
            }
        }
        for (i, a) in strata.iter().enumerate() {
            for b in &strata[i + 1..] {
                let (d, _, _) = cloud_distance(&a.points, &b.points);
                if d <= 0.0 {
                    return Err(Error::Stratification(format!(
                        "strata {} and {} share a sample point",
                        a.name, b.name
                    )));
                }
            }
        }

        let mut order: BTreeSet<(String, String)> = BTreeSet::new();
        for (s, r) in closure {
            for n in [&s, &r] {
                if !names.contains(n.as_str()) {
                    return Err(Error::Stratification(format!(
                        "closure order names unknown stratum {n}"
                    )));
                }
            }
            order.insert((s, r));
        }
        let order = transitive_closure(order);
        if let Some((s, _)) = order.iter().find(|(s, r)| s == r) {
            return Err(Error::Stratification(format!(
                "closure order has a cycle through {s}"
            )));
        }
        Ok(Self {
            ambient,
            strata,
            closure: order,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn strata(&self) -> &[Stratum] {
        &self.strata
    }

    pub fn closure_order(&self) -> &BTreeSet<(String, String)> {
        &self.closure
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.strata.iter().position(|s| s.name == name)
    }

    pub fn stratum(&self, name: &str) -> Option<&Stratum> {
        self.strata.iter().find(|s| s.name == name)
    }

    pub fn declares(&self, s: &str, r: &str) -> bool {
        self.closure.contains(&(s.to_owned(), r.to_owned()))
    }

    pub fn point(&self, stratum: usize, index: usize) -> Option<&[f64]> {
        self.strata
            .get(stratum)
            .and_then(|s| s.points.get(index))
            .map(Vec::as_slice)
    }

    pub fn num_points(&self) -> usize {
        self.strata.iter().map(|s| s.points.len()).sum()
    }

    /// `(stratum index, point index)` for every sample, in storage order.
    pub fn point_ids(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.strata
            .iter()
            .enumerate()
            .flat_map(|(si, s)| (0..s.points.len()).map(move |pi| (si, pi)))
    }

    /// Largest distance between any two sample points.
    pub fn diameter(&self) -> f64 {
        let all: Vec<&[f64]> = self
            .strata
            .iter()
            .flat_map(|s| s.points.iter().map(Vec::as_slice))
            .collect();
        let mut d = 0.0f64;
        for (i, a) in all.iter().enumerate() {
            for b in &all[i + 1..] {
                d = d.max(linalg::distance(a, b));
            }
        }
        d
    }

    /// The scale-relative default for `eps_touch` and `delta_cover`.
    pub fn default_frontier_radius(&self) -> f64 {
        DEFAULT_FRONTIER_FACTOR * self.diameter()
    }
}

fn transitive_closure(mut order: BTreeSet<(String, String)>) -> BTreeSet<(String, String)> {
    loop {
        let mut added = Vec::new();
        for (a, b) in &order {
            for (c, d) in &order {
                if b == c && !order.contains(&(a.clone(), d.clone())) {
                    added.push((a.clone(), d.clone()));
                }
            }
        }
        if added.is_empty() {
            return order;
        }
        order.extend(added);
    }
}

/// Minimum distance between two clouds and the indices realizing it.
pub(crate) fn cloud_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> (f64, usize, usize) {
    let mut best = (f64::INFINITY, 0, 0);
    for (i, p) in a.iter().enumerate() {
        for (j, q) in b.iter().enumerate() {
            let d = linalg::distance(p, q);
            if d < best.0 {
                best = (d, i, j);
            }
        }
    }
    best
}

pub(crate) fn distance_to_cloud(p: &[f64], cloud: &[Vec<f64>]) -> f64 {
    cloud
        .iter()
        .map(|q| linalg::distance(p, q))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrontierViolation {
    /// The clouds come within `eps_touch` but neither closure relation is declared.
    Undeclared {
        s: String,
        r: String,
        distance: f64,
        witness: Vec<f64>,
    },
    /// `(s, r)` is declared but some point of `s` is farther than
    /// `delta_cover` from the cloud of `r`.
    NotCovered {
        s: String,
        r: String,
        distance: f64,
        witness: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierReport {
    pub pass: bool,
    pub eps_touch: f64,
    pub delta_cover: f64,
    /// Unordered pairs whose clouds touch, sorted by name.
    pub touching: Vec<(String, String)>,
    pub violations: Vec<FrontierViolation>,
}

/// Audits the frontier condition on samples.
///
/// Two strata *touch* when their clouds come within `eps_touch`. Touching is
/// symmetric on samples, so for a touching pair one of the two closure
/// relations must be declared, and the declared side `s` must be covered:
/// every point of `s` lies within `delta_cover` of the cloud of `r`.
///
/// Contacts between two strata that both accumulate on a common lower
/// stratum (the two half-lines at a vertex) do not count: a contact point
/// within `eps_touch` of a stratum declared in the closure of either side is
/// excused.
pub fn check_frontier(s: &Stratification, eps_touch: f64, delta_cover: f64) -> FrontierReport {
    let strata = &s.strata;
    let mut touching = Vec::new();
    let mut violations = Vec::new();
    for (i, a) in strata.iter().enumerate() {
        for b in &strata[i + 1..] {
            let (d, _, _) = cloud_distance(&a.points, &b.points);
            if d > eps_touch {
                continue;
            }
            let declared = if s.declares(&a.name, &b.name) {
                Some((a, b))
            } else if s.declares(&b.name, &a.name) {
                Some((b, a))
            } else {
                None
            };
            match declared {
                None => {
                    let witness = unexcused_contact(s, a, b, eps_touch)
                        .or_else(|| unexcused_contact(s, b, a, eps_touch));
                    let Some((witness, distance)) = witness else {
                        continue;
                    };
                    // Name the pair lower-dimensional side first.
                    let (low, high) = if (b.dim, &b.name) < (a.dim, &a.name) { (b, a) } else { (a, b) };
                    touching.push(sorted_pair(a, b));
                    violations.push(FrontierViolation::Undeclared {
                        s: low.name.clone(),
                        r: high.name.clone(),
                        distance,
                        witness,
                    });
                }
                Some((inner, outer)) => {
                    touching.push(sorted_pair(a, b));
                    let worst = inner
                        .points
                        .iter()
                        .map(|p| (distance_to_cloud(p, &outer.points), p))
                        .max_by(|x, y| x.0.total_cmp(&y.0));
                    if let Some((dist, p)) = worst {
                        if dist > delta_cover {
                            violations.push(FrontierViolation::NotCovered {
                                s: inner.name.clone(),
                                r: outer.name.clone(),
                                distance: dist,
                                witness: p.clone(),
                            });
                        }
                    }
                }
            }
        }
    }
    touching.sort();
    violations.sort_by(|x, y| violation_key(x).cmp(&violation_key(y)));
    FrontierReport {
        pass: violations.is_empty(),
        eps_touch,
        delta_cover,
        touching,
        violations,
    }
}

fn sorted_pair(a: &Stratum, b: &Stratum) -> (String, String) {
    if a.name <= b.name {
        (a.name.clone(), b.name.clone())
    } else {
        (b.name.clone(), a.name.clone())
    }
}

/// First point of `a` within `eps` of `b` that is not also within `eps` of a
/// stratum declared in the closure of `a` or of `b`.
fn unexcused_contact(
    s: &Stratification,
    a: &Stratum,
    b: &Stratum,
    eps: f64,
) -> Option<(Vec<f64>, f64)> {
    let below: Vec<&Stratum> = s
        .strata
        .iter()
        .filter(|t| t.name != a.name && t.name != b.name)
        .filter(|t| s.declares(&t.name, &a.name) || s.declares(&t.name, &b.name))
        .collect();
    a.points.iter().find_map(|p| {
        let d = distance_to_cloud(p, &b.points);
        let excused = below.iter().any(|t| distance_to_cloud(p, &t.points) <= eps);
        (d <= eps && !excused).then(|| (p.clone(), d))
    })
}

fn violation_key(v: &FrontierViolation) -> (&str, &str) {
    match v {
        FrontierViolation::Undeclared { s, r, .. } | FrontierViolation::NotCovered { s, r, .. } => {
            (s.as_str(), r.as_str())
        }
    }
}

/// `X_i`: names of strata of dimension at most `i`, for `i = 0..=max dim`.
pub fn filtration(s: &Stratification) -> Vec<BTreeSet<String>> {
    let top = s.strata.iter().map(|st| st.dim).max().unwrap_or(0);
    (0..=top)
        .map(|i| {
            s.strata
                .iter()
                .filter(|st| st.dim <= i)
                .map(|st| st.name.clone())
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrowdedPoint {
    pub stratum: String,
    pub index: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalFinitenessReport {
    pub pass: bool,
    pub radius: f64,
    pub threshold: usize,
    pub max_count: usize,
    pub flagged: Vec<CrowdedPoint>,
}

/// Counts, for every sample point, the strata meeting the closed
/// `radius`-ball around it; points seeing more than `threshold` strata are
/// flagged.
pub fn local_finiteness_report(
    s: &Stratification,
    radius: f64,
    threshold: usize,
) -> LocalFinitenessReport {
    let mut max_count = 0;
    let mut flagged = Vec::new();
    for st in &s.strata {
        for (index, p) in st.points.iter().enumerate() {
            let count = s
                .strata
                .iter()
                .filter(|other| distance_to_cloud(p, &other.points) <= radius)
                .count();
            max_count = max_count.max(count);
            if count > threshold {
                flagged.push(CrowdedPoint {
                    stratum: st.name.clone(),
                    index,
                    count,
                });
            }
        }
    }
    LocalFinitenessReport {
        pass: flagged.is_empty(),
        radius,
        threshold,
        max_count,
        flagged,
    }
}

/// Single-linkage clusters of `points` at radius `r`; each cluster is a
/// sorted list of point indices, and clusters are ordered by smallest index.
pub fn single_linkage(points: &[&[f64]], r: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if linalg::distance(points[i], points[j]) <= r {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort_by_key(|g| g[0]);
    out
}

/// Estimated manifold dimension of a sampled cloud: the largest affine rank
/// of a neighborhood of radius `r` around any sample.
pub fn estimate_dim(points: &[&[f64]], r: f64) -> usize {
    let Some(first) = points.first() else {
        return 0;
    };
    let ambient = first.len();
    let mut best = 0;
    for p in points {
        let diffs: Vec<Vec<f64>> = points
            .iter()
            .filter(|q| linalg::distance(p, q) <= r)
            .map(|q| q.iter().zip(p.iter()).map(|(a, b)| a - b).collect())
            .collect();
        if diffs.len() <= best {
            continue;
        }
        let m = linalg::matrix_from_columns(&diffs, ambient).expect("uniform ambient");
        best = best.max(linalg::range_basis(&m, DEFAULT_TOL_RANK).ncols());
        if best == ambient {
            break;
        }
    }
    best
}
