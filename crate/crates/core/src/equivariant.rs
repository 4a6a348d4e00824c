//! Equivariant bundles for finite orthogonal groups.
//!
//! For a group `G` acting on the base `ℝⁿ` and on the fiber space `ℝᵏ`, the
//! bundle `Ẽ` keeps over each `x` only the vectors fixed by the stabilizer
//! `G_x`. It is a stratified bundle over the orbit-type stratification and
//! descends to the orbit space. The circle action on the plane is handled
//! separately by closed forms in [`so2`].

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bundle::SampledStratifiedBundle;
use crate::config::{DEFAULT_TOL_ORTHO, DEFAULT_TOL_RANK};
use crate::error::{Error, Result};
use crate::grassmann::{self, Subspace};
use crate::linalg;
use crate::report::Verdict;
use crate::strata::{self, Stratification, Stratum};

/// A finite group of orthogonal `n×n` matrices, optionally with a
/// representation on fibers indexed by the same elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GroupJson", into = "GroupJson")]
pub struct FiniteGroupAction {
    n: usize,
    elements: Vec<DMatrix<f64>>,
    fiber: Option<Vec<DMatrix<f64>>>,
    table: Vec<Vec<usize>>,
    inverse: Vec<usize>,
    identity: usize,
}

fn lookup(elements: &[DMatrix<f64>], m: &DMatrix<f64>, tol: f64) -> Option<usize> {
    elements.iter().position(|e| (e - m).amax() <= tol)
}

impl FiniteGroupAction {
    pub fn new(
        n: usize,
        elements: Vec<DMatrix<f64>>,
        fiber: Option<Vec<DMatrix<f64>>>,
        tol: f64,
    ) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::Group("no elements".into()));
        }
        let id = DMatrix::<f64>::identity(n, n);
        for (i, g) in elements.iter().enumerate() {
            if g.shape() != (n, n) {
                return Err(Error::Group(format!("element {i} is not {n}x{n}")));
            }
            let r = (g.transpose() * g - &id).amax();
            if r > tol {
                return Err(Error::Group(format!("element {i} is not orthogonal (residual {r:e})")));
            }
            if lookup(&elements[..i], g, tol).is_some() {
                return Err(Error::Group(format!("element {i} is repeated")));
            }
        }
        let identity =
            lookup(&elements, &id, tol).ok_or_else(|| Error::Group("identity is missing".into()))?;
        let mut table = vec![vec![0; elements.len()]; elements.len()];
        for (i, a) in elements.iter().enumerate() {
            for (j, b) in elements.iter().enumerate() {
                table[i][j] = lookup(&elements, &(a * b), tol).ok_or_else(|| {
                    Error::Group(format!("product of elements {i} and {j} is not in the group"))
                })?;
            }
        }
        let inverse = (0..elements.len())
            .map(|i| {
                (0..elements.len())
                    .find(|&j| table[i][j] == identity)
                    .ok_or_else(|| Error::Group(format!("element {i} has no inverse")))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(f) = &fiber {
            if f.len() != elements.len() {
                return Err(Error::Group(format!(
                    "{} fiber matrices for {} elements",
                    f.len(),
                    elements.len()
                )));
            }
            let k = f[0].nrows();
            for (i, a) in f.iter().enumerate() {
                if a.shape() != (k, k) {
                    return Err(Error::Group(format!("fiber matrix {i} is not {k}x{k}")));
                }
            }
            for i in 0..f.len() {
                for j in 0..f.len() {
                    let r = (&f[i] * &f[j] - &f[table[i][j]]).amax();
                    if r > tol {
                        return Err(Error::Group(format!(
                            "fiber action is not a homomorphism at ({i}, {j}) (residual {r:e})"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            n,
            elements,
            fiber,
            table,
            inverse,
            identity,
        })
    }

    pub fn trivial(n: usize) -> Self {
        Self::new(n, vec![DMatrix::identity(n, n)], None, DEFAULT_TOL_ORTHO).expect("valid")
    }

    /// Rotations by multiples of `2π/m` on the plane.
    pub fn cyclic(m: usize) -> Self {
        Self::new(2, (0..m).map(|k| rotation(k, m)).collect(), None, 1e-9).expect("valid")
    }

    /// The symmetry group of the regular `m`-gon: rotations `r^k`, then
    /// reflections `s·r^k` with `s = diag(1, −1)`.
    pub fn dihedral(m: usize) -> Self {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let mut els: Vec<DMatrix<f64>> = (0..m).map(|k| rotation(k, m)).collect();
        els.extend((0..m).map(|k| &s * rotation(k, m)));
        Self::new(2, els, None, 1e-9).expect("valid")
    }

    /// Attaches a fiber representation.
    pub fn with_fiber_action(self, fiber: Vec<DMatrix<f64>>, tol: f64) -> Result<Self> {
        Self::new(self.n, self.elements, Some(fiber), tol)
    }

    /// The base representation acting on fibers as well, as on a tangent bundle.
    pub fn acting_on_tangents(self) -> Self {
        let f = self.elements.clone();
        self.with_fiber_action(f, 1e-9).expect("a representation is a homomorphism")
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[DMatrix<f64>] {
        &self.elements
    }

    pub fn fiber_elements(&self) -> Option<&[DMatrix<f64>]> {
        self.fiber.as_deref()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn act(&self, g: usize, x: &[f64]) -> Vec<f64> {
        (&self.elements[g] * linalg::to_dvector(x)).iter().copied().collect()
    }

    /// `g H g⁻¹`, sorted.
    pub fn conjugate(&self, h: &[usize], g: usize) -> Vec<usize> {
        let gi = self.inv(g);
        let set: BTreeSet<usize> = h.iter().map(|&x| self.mul(self.mul(g, x), gi)).collect();
        set.into_iter().collect()
    }

    pub fn is_closed(&self, h: &[usize]) -> bool {
        let set: BTreeSet<usize> = h.iter().copied().collect();
        set.contains(&self.identity)
            && h.iter()
                .all(|&a| h.iter().all(|&b| set.contains(&self.mul(a, b))))
    }

    /// Orbit-type label of a subgroup: its lexicographically smallest conjugate.
    pub fn label(&self, h: &[usize]) -> OrbitTypeLabel {
        let best = (0..self.order())
            .map(|g| self.conjugate(h, g))
            .min()
            .expect("group is nonempty");
        OrbitTypeLabel(best)
    }

    /// Whether some conjugate of `a` lies inside `b`.
    pub fn is_subconjugate(&self, a: &[usize], b: &[usize]) -> bool {
        let target: BTreeSet<usize> = b.iter().copied().collect();
        (0..self.order()).any(|g| self.conjugate(a, g).iter().all(|x| target.contains(x)))
    }
}

fn rotation(k: usize, m: usize) -> DMatrix<f64> {
    // Exact entries at quarter turns keep products exact for m = 2, 4.
    let (s, c) = match (4 * k) % (4 * m) {
        0 => (0.0, 1.0),
        q if q == m => (1.0, 0.0),
        q if q == 2 * m => (0.0, -1.0),
        q if q == 3 * m => (-1.0, 0.0),
        _ => (2.0 * std::f64::consts::PI * k as f64 / m as f64).sin_cos(),
    };
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// Wire form: matrices as lists of rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupJson {
    pub n: usize,
    pub elements: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber_elements: Option<Vec<Vec<Vec<f64>>>>,
}

impl TryFrom<GroupJson> for FiniteGroupAction {
    type Error = Error;

    fn try_from(j: GroupJson) -> Result<Self> {
        let els = j
            .elements
            .iter()
            .map(|m| linalg::matrix_from_rows(m, j.n))
            .collect::<Result<Vec<_>>>()?;
        let fiber = match &j.fiber_elements {
            None => None,
            Some(fs) => {
                let k = fs.first().map_or(0, Vec::len);
                Some(
                    fs.iter()
                        .map(|m| linalg::matrix_from_rows(m, k))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
        };
        FiniteGroupAction::new(j.n, els, fiber, 1e-9)
    }
}

impl From<FiniteGroupAction> for GroupJson {
    fn from(g: FiniteGroupAction) -> Self {
        GroupJson {
            n: g.n,
            elements: g.elements.iter().map(linalg::rows_of).collect(),
            fiber_elements: g.fiber.map(|f| f.iter().map(linalg::rows_of).collect()),
        }
    }
}

/// Conjugacy class of a subgroup, by its canonical member.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OrbitTypeLabel(pub Vec<usize>);

impl std::fmt::Display for OrbitTypeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "H{{{}}}", parts.join(","))
    }
}

/// `G_x = { g : ‖g·x − x‖ ≤ tol }`, checked to be a subgroup.
pub fn stabilizer(g: &FiniteGroupAction, x: &[f64], tol: f64) -> Result<Vec<usize>> {
    if x.len() != g.n {
        return Err(Error::DimensionMismatch {
            expected: g.n,
            found: x.len(),
        });
    }
    let h: Vec<usize> = (0..g.order())
        .filter(|&i| linalg::distance(&g.act(i, x), x) <= tol)
        .collect();
    if !g.is_closed(&h) {
        return Err(Error::SubgroupNotClosed(h));
    }
    Ok(h)
}

/// `V^H` as the image of the Reynolds average `(1/|H|) Σ ρ(h)`, over the
/// base representation or, with `use_fiber`, the fiber representation.
pub fn fixed_subspace(
    g: &FiniteGroupAction,
    subgroup: &[usize],
    use_fiber: bool,
    tol: f64,
) -> Result<Subspace> {
    if !g.is_closed(subgroup) {
        return Err(Error::SubgroupNotClosed(subgroup.to_vec()));
    }
    let mats: &[DMatrix<f64>] = if use_fiber {
        g.fiber
            .as_deref()
            .ok_or_else(|| Error::Group("no fiber action".into()))?
    } else {
        &g.elements
    };
    let dim = mats[0].nrows();
    let mut p = DMatrix::zeros(dim, dim);
    for &h in subgroup {
        p += &mats[h];
    }
    p /= subgroup.len() as f64;
    let r = (&p * &p - &p).amax();
    if r > tol {
        return Err(Error::NotIdempotent(r));
    }
    // A projector has singular values 0 or at least 1; averaging noise sits near 0.
    let smax = linalg::op_norm(&p);
    if smax < 0.5 {
        return Ok(Subspace::zero(dim));
    }
    Ok(Subspace::column_space(&p, 0.5 / smax))
}

/// Orbit-type stratification of a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitTypePartition {
    /// Label of every input point, in input order.
    pub labels: Vec<OrbitTypeLabel>,
    /// `(stratum, index)` of every input point.
    pub membership: Vec<(usize, usize)>,
    pub stratification: Stratification,
    /// Frontier audit of the declared closure order at radius `r_cc`.
    pub frontier: strata::FrontierReport,
}

/// Groups points by the conjugacy class of their stabilizer, splits each
/// class into single-linkage components at `r_cc`, and declares `S ≤ R`
/// when the stabilizer type of `R` is properly subconjugate to that of `S`
/// and the two clouds come within `r_cc` of each other.
pub fn orbit_type_partition(
    g: &FiniteGroupAction,
    points: &[Vec<f64>],
    r_cc: f64,
    tol: f64,
) -> Result<OrbitTypePartition> {
    if points.is_empty() {
        return Err(Error::Stratification("no points".into()));
    }
    let mut stabs = Vec::with_capacity(points.len());
    let mut labels = Vec::with_capacity(points.len());
    for x in points {
        let h = stabilizer(g, x, tol)?;
        labels.push(g.label(&h));
        stabs.push(h);
    }
    let mut order: Vec<&OrbitTypeLabel> = Vec::new();
    for l in &labels {
        if !order.contains(&l) {
            order.push(l);
        }
    }
    let mut strata_out: Vec<Stratum> = Vec::new();
    let mut stratum_label: Vec<OrbitTypeLabel> = Vec::new();
    let mut membership = vec![(0, 0); points.len()];
    for l in order {
        let idx: Vec<usize> = (0..points.len()).filter(|&i| &labels[i] == l).collect();
        let refs: Vec<&[f64]> = idx.iter().map(|&i| points[i].as_slice()).collect();
        let dim = fixed_subspace(g, &l.0, false, tol)?.dim();
        for (c, comp) in strata::single_linkage(&refs, r_cc).into_iter().enumerate() {
            let s = strata_out.len();
            for (j, &k) in comp.iter().enumerate() {
                membership[idx[k]] = (s, j);
            }
            strata_out.push(Stratum {
                name: format!("{l}#{c}"),
                dim,
                points: comp.iter().map(|&k| points[idx[k]].clone()).collect(),
            });
            stratum_label.push(l.clone());
        }
    }
    let mut closure = Vec::new();
    for (a, sa) in strata_out.iter().enumerate() {
        for (b, sb) in strata_out.iter().enumerate() {
            let (la, lb) = (&stratum_label[a].0, &stratum_label[b].0);
            if la.len() > lb.len()
                && g.is_subconjugate(lb, la)
                && strata::cloud_distance(&sa.points, &sb.points).0 <= r_cc
            {
                closure.push((sa.name.clone(), sb.name.clone()));
            }
        }
    }
    let stratification = Stratification::new(g.n, strata_out, closure)?;
    let frontier = strata::check_frontier(&stratification, r_cc, r_cc);
    Ok(OrbitTypePartition {
        labels,
        membership,
        stratification,
        frontier,
    })
}

/// `orbit[p][g]` = global index of `g·x_p` among the base samples.
fn orbit_table(g: &FiniteGroupAction, pts: &[&[f64]], tol: f64) -> Result<Vec<Vec<usize>>> {
    pts.iter()
        .enumerate()
        .map(|(p, x)| {
            (0..g.order())
                .map(|e| {
                    let y = g.act(e, x);
                    pts.iter()
                        .position(|q| linalg::distance(q, &y) <= tol)
                        .ok_or(Error::NotOrbitSaturated { point: p, element: e })
                })
                .collect()
        })
        .collect()
}

struct Flat<'a> {
    points: Vec<&'a [f64]>,
    ids: Vec<(usize, usize)>,
    fibers: Vec<&'a Subspace>,
}

fn flatten(b: &SampledStratifiedBundle) -> Flat<'_> {
    let base = b.base();
    let ids: Vec<(usize, usize)> = base.point_ids().collect();
    let points = ids.iter().map(|&(s, i)| base.point(s, i).expect("valid id")).collect();
    let fibers = ids.iter().map(|&(s, i)| b.fiber(s, i).expect("valid id")).collect();
    Flat { points, ids, fibers }
}

fn fiber_matrices(g: &FiniteGroupAction, k: usize) -> Result<&[DMatrix<f64>]> {
    let f = g
        .fiber
        .as_deref()
        .ok_or_else(|| Error::Group("a fiber action is required".into()))?;
    if f[0].nrows() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: f[0].nrows(),
        });
    }
    Ok(f)
}

/// Audits `ρ(g)·A_x = A_{gx}` for every sample and element; returns the
/// largest gap.
pub fn equivariance_gap(g: &FiniteGroupAction, b: &SampledStratifiedBundle, tol: f64) -> Result<f64> {
    let rho = fiber_matrices(g, b.fiber_ambient())?;
    let flat = flatten(b);
    let orbit = orbit_table(g, &flat.points, tol)?;
    let mut worst = 0.0f64;
    for (p, row) in orbit.iter().enumerate() {
        for (e, &q) in row.iter().enumerate() {
            let image = grassmann::apply_linear_map(&rho[e], flat.fibers[p])?;
            let gap = grassmann::gap_distance(&image, flat.fibers[q])?;
            if gap > tol {
                return Err(Error::NotEquivariant {
                    point: p,
                    element: e,
                    gap,
                });
            }
            worst = worst.max(gap);
        }
    }
    Ok(worst)
}

/// `Ẽ = ⋃ₓ A_x^{G_x}`, restratified by orbit type inside each base stratum.
///
/// Requires an orbit-saturated, equivariant input; fails if the rank of `Ẽ`
/// is not constant on a resulting stratum.
pub fn build_tilde_e(
    g: &FiniteGroupAction,
    b: &SampledStratifiedBundle,
    tol: f64,
) -> Result<SampledStratifiedBundle> {
    if g.n != b.base().ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: b.base().ambient_dim(),
            found: g.n,
        });
    }
    equivariance_gap(g, b, tol)?;
    let flat = flatten(b);
    let base = b.base();
    let mut pieces: BTreeMap<(usize, OrbitTypeLabel), Vec<usize>> = BTreeMap::new();
    let mut tilde = Vec::with_capacity(flat.points.len());
    for (p, x) in flat.points.iter().enumerate() {
        let h = stabilizer(g, x, tol)?;
        let fixed = fixed_subspace(g, &h, true, tol)?;
        tilde.push(flat.fibers[p].intersection(&fixed, tol)?);
        pieces.entry((flat.ids[p].0, g.label(&h))).or_default().push(p);
    }

    let per_stratum: BTreeMap<usize, usize> = pieces.keys().fold(BTreeMap::new(), |mut m, (s, _)| {
        *m.entry(*s).or_insert(0) += 1;
        m
    });
    let mut strata_out = Vec::new();
    let mut fibers_out = Vec::new();
    let mut ranks = BTreeMap::new();
    let mut origin: Vec<(usize, OrbitTypeLabel)> = Vec::new();
    for ((s, label), members) in &pieces {
        let src = &base.strata()[*s];
        let name = if per_stratum[s] == 1 {
            src.name.clone()
        } else {
            format!("{}|{label}", src.name)
        };
        let found: BTreeSet<usize> = members.iter().map(|&p| tilde[p].dim()).collect();
        if found.len() > 1 {
            return Err(Error::RankNotConstant {
                stratum: name,
                ranks: found.into_iter().collect(),
            });
        }
        ranks.insert(name.clone(), tilde[members[0]].dim());
        strata_out.push(Stratum {
            name,
            dim: src.dim,
            points: members.iter().map(|&p| flat.points[p].to_vec()).collect(),
        });
        fibers_out.push(members.iter().map(|&p| tilde[p].clone()).collect::<Vec<_>>());
        origin.push((*s, label.clone()));
    }
    let mut closure = Vec::new();
    for (a, (sa, la)) in origin.iter().enumerate() {
        for (c, (sc, lc)) in origin.iter().enumerate() {
            let below = if sa == sc {
                la.0.len() > lc.0.len() && g.is_subconjugate(&lc.0, &la.0)
            } else {
                base.declares(&base.strata()[*sa].name, &base.strata()[*sc].name)
            };
            if below {
                closure.push((strata_out[a].name.clone(), strata_out[c].name.clone()));
            }
        }
    }
    let new_base = Stratification::new(base.ambient_dim(), strata_out, closure)?;
    SampledStratifiedBundle::new(new_base, b.fiber_ambient(), fibers_out, ranks)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// `Ẽ/G` over orbit representatives.
///
/// The representative of an orbit is its lexicographically largest sample.
/// Every other member must carry the fiber `ρ(g)⁻¹·Ẽ_rep` for the element
/// `g` taking it to the representative.
pub fn quotient_bundle(
    g: &FiniteGroupAction,
    tilde: &SampledStratifiedBundle,
    tol: f64,
) -> Result<SampledStratifiedBundle> {
    let rho = fiber_matrices(g, tilde.fiber_ambient())?;
    let flat = flatten(tilde);
    let orbit = orbit_table(g, &flat.points, tol)?;
    let mut is_rep = vec![false; flat.points.len()];
    for (p, row) in orbit.iter().enumerate() {
        let (e, &q) = row
            .iter()
            .enumerate()
            .max_by(|a, b| lex_cmp(flat.points[*a.1], flat.points[*b.1]).then(b.1.cmp(a.1)))
            .expect("group is nonempty");
        if q == p {
            is_rep[p] = true;
        }
        let image = grassmann::apply_linear_map(&rho[e], flat.fibers[p])?;
        let gap = grassmann::gap_distance(&image, flat.fibers[q])?;
        if gap > tol {
            return Err(Error::OrbitFiberMismatch { point: p, gap });
        }
    }

    let base = tilde.base();
    let mut strata_out = Vec::new();
    let mut fibers_out = Vec::new();
    let mut ranks = BTreeMap::new();
    for (s, st) in base.strata().iter().enumerate() {
        let keep: Vec<usize> = (0..flat.points.len())
            .filter(|&p| is_rep[p] && flat.ids[p].0 == s)
            .collect();
        if keep.is_empty() {
            continue;
        }
        strata_out.push(Stratum {
            name: st.name.clone(),
            dim: st.dim,
            points: keep.iter().map(|&p| flat.points[p].to_vec()).collect(),
        });
        fibers_out.push(keep.iter().map(|&p| flat.fibers[p].clone()).collect::<Vec<_>>());
        ranks.insert(st.name.clone(), tilde.rank(&st.name).expect("rank per stratum"));
    }
    let kept: BTreeSet<&str> = strata_out.iter().map(|s| s.name.as_str()).collect();
    let closure: Vec<(String, String)> = base
        .closure_order()
        .iter()
        .filter(|(a, c)| kept.contains(a.as_str()) && kept.contains(c.as_str()))
        .cloned()
        .collect();
    let new_base = Stratification::new(base.ambient_dim(), strata_out, closure)?;
    SampledStratifiedBundle::new(new_base, tilde.fiber_ambient(), fibers_out, ranks)
}

/// Stratified tangent bundle of a sampled base: over `x ∈ S` the span of
/// the directions to samples of `S` within `r`, truncated to `dim S`.
pub fn stratified_tangent_bundle(base: &Stratification, r: f64) -> Result<SampledStratifiedBundle> {
    let n = base.ambient_dim();
    SampledStratifiedBundle::try_from_fn(base.clone(), n, |name, x| {
        let st = base.stratum(name).expect("stratum of its own base");
        let diffs: Vec<Vec<f64>> = st
            .points
            .iter()
            .filter(|q| linalg::distance(q, x) <= r)
            .map(|q| q.iter().zip(x).map(|(a, b)| a - b).collect())
            .collect();
        if diffs.is_empty() || st.dim == 0 {
            return Ok(Subspace::zero(n));
        }
        let m = linalg::matrix_from_columns(&diffs, n)?;
        let svd = m.svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        let smax = svd.singular_values.max();
        let mut order: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > DEFAULT_TOL_RANK * smax)
            .collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        order.truncate(st.dim);
        let cols: Vec<Vec<f64>> = order
            .iter()
            .map(|&c| u.column(c).iter().copied().collect())
            .collect();
        Subspace::span(&cols, n)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Comparison {
    /// Some stratum carries different ranks, so no isomorphism exists.
    NotIsomorphic,
    /// Ranks agree on every stratum; isomorphism is not decided.
    RanksAgree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankComparison {
    pub left: BTreeMap<String, usize>,
    pub right: BTreeMap<String, usize>,
    pub differing: Vec<String>,
    pub comparison: Comparison,
}

/// Compares two bundles over the same strata by rank.
pub fn compare_ranks(a: &SampledStratifiedBundle, b: &SampledStratifiedBundle) -> Result<RankComparison> {
    if a.ranks().keys().ne(b.ranks().keys()) {
        return Err(Error::Bundle("bundles are stratified by different strata".into()));
    }
    let differing: Vec<String> = a
        .ranks()
        .iter()
        .filter(|(k, v)| b.ranks()[*k] != **v)
        .map(|(k, _)| k.clone())
        .collect();
    Ok(RankComparison {
        left: a.ranks().clone(),
        right: b.ranks().clone(),
        comparison: if differing.is_empty() {
            Comparison::RanksAgree
        } else {
            Comparison::NotIsomorphic
        },
        differing,
    })
}

/// The circle acting on the plane by rotations, with closed forms in place
/// of a finite multiplication table.
pub mod so2 {
    use super::*;

    /// Generator of the rotation action.
    pub fn generator() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])
    }

    /// Whether the stabilizer of `x` is the whole circle (only at the origin);
    /// otherwise it is trivial.
    pub fn stabilizer_is_full(x: &[f64], tol: f64) -> bool {
        linalg::norm(x) <= tol
    }

    /// Fixed vectors of the stabilizer of `x` acting on `T_xℝ²`: the kernel
    /// of the generator at the origin, everything elsewhere.
    pub fn tilde_fiber(x: &[f64], tol: f64) -> Subspace {
        if stabilizer_is_full(x, tol) {
            Subspace::from_orthonormal(linalg::null_basis(&generator(), tol))
        } else {
            Subspace::full(2)
        }
    }

    /// The plane sampled at the origin and on circles of the given radii,
    /// `angles` points each, stratified as origin and punctured plane.
    pub fn plane(radii: &[f64], angles: usize) -> Result<Stratification> {
        let mut ring = Vec::with_capacity(radii.len() * angles);
        for &r in radii {
            for a in 0..angles {
                let th = 2.0 * std::f64::consts::PI * a as f64 / angles as f64;
                ring.push(vec![r * th.cos(), r * th.sin()]);
            }
        }
        Stratification::new(
            2,
            vec![
                Stratum {
                    name: "origin".into(),
                    dim: 0,
                    points: vec![vec![0.0, 0.0]],
                },
                Stratum {
                    name: "regular".into(),
                    dim: 2,
                    points: ring,
                },
            ],
            [("origin".to_string(), "regular".to_string())],
        )
    }

    /// The orbit space `[0, ∞)` sampled at `0` and the given radii.
    pub fn orbit_space(radii: &[f64]) -> Result<Stratification> {
        Stratification::new(
            1,
            vec![
                Stratum {
                    name: "origin".into(),
                    dim: 0,
                    points: vec![vec![0.0]],
                },
                Stratum {
                    name: "regular".into(),
                    dim: 1,
                    points: radii.iter().map(|&r| vec![r]).collect(),
                },
            ],
            [("origin".to_string(), "regular".to_string())],
        )
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct DimensionTable {
        /// `Ẽ` over the sampled plane.
        pub tilde: SampledStratifiedBundle,
        /// `Ẽ/S¹` over the orbit space.
        pub quotient: SampledStratifiedBundle,
        /// Stratified tangent bundle of the orbit space.
        pub orbit_tangent: SampledStratifiedBundle,
        pub comparison: RankComparison,
    }

    /// Builds `Ẽ` for the tangent bundle of the plane, passes to the orbit
    /// space by the radius, and compares with the orbit space's own
    /// stratified tangent bundle.
    pub fn dimension_table(radii: &[f64], angles: usize, tol: f64) -> Result<DimensionTable> {
        let plane = plane(radii, angles)?;
        let tilde = SampledStratifiedBundle::from_fn(plane, 2, |_, x| tilde_fiber(x, tol))?;
        // Rank must be constant along each circle: the rotation carries the
        // fiber at x to the fiber at its image.
        for (st, fs) in tilde.base().strata().iter().zip(tilde.fibers()) {
            let found: BTreeSet<usize> = fs.iter().map(Subspace::dim).collect();
            if found.len() > 1 {
                return Err(Error::RankNotConstant {
                    stratum: st.name.clone(),
                    ranks: found.into_iter().collect(),
                });
            }
        }
        let space = orbit_space(radii)?;
        let quotient = SampledStratifiedBundle::from_fn(space.clone(), 2, |_, r| {
            tilde_fiber(&[r[0], 0.0], tol)
        })?;
        let step = radii
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0f64, f64::max);
        let orbit_tangent = stratified_tangent_bundle(&space, 1.5 * step.max(tol))?;
        let comparison = compare_ranks(&quotient, &orbit_tangent)?;
        Ok(DimensionTable {
            tilde,
            quotient,
            orbit_tangent,
            comparison,
        })
    }
}

/// Convenience verdict for reports: rank constancy of every stratum.
pub fn rank_constancy(b: &SampledStratifiedBundle) -> Verdict {
    Verdict::from_pass(b.base().strata().iter().zip(b.fibers()).all(|(st, fs)| {
        let r = b.rank(&st.name).expect("rank per stratum");
        fs.iter().all(|f| f.dim() == r)
    }))
}
