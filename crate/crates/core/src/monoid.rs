//! Smooth actions of the multiplicative monoid `(ℝ,·)` on `ℝᵐ`.
//!
//! An action `h: ℝ × E → E` with `h₁ = id` and `h_t ∘ h_s = h_{ts}` is
//! *regular* when the vertical derivative `φ(e) = d/dt|₀ h_t(e)` vanishes
//! exactly on the fixed points of `h₀`. Regular actions are vector bundle
//! structures: `h₀` projects onto the base and `φ` recovers the fibers.

use serde::{Deserialize, Serialize};

use crate::bundle::SampledStratifiedBundle;
use crate::error::{Error, Result};
use crate::grassmann::Subspace;
use crate::linalg;
use crate::poly::{Monomial, PolyMap};
use crate::report::Verdict;
use crate::strata::{self, Stratification};

/// Evaluators shipped with the library.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    /// `h(t, e) = t·e`.
    Scalar,
    /// `h(t, e) = t²·e`.
    ScalarSquared,
    /// `h(t, e) = e + t·(1,…,1)`.
    Translate,
    /// `h(t, e) = e`.
    Identity,
    /// Fixes the first `from` coordinates and scales the rest by `t`: scalar
    /// multiplication on the total space of a trivialized bundle.
    ScaleTail { from: usize },
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Scalar => "scalar",
            Builtin::ScalarSquared => "scalar_squared",
            Builtin::Translate => "translate",
            Builtin::Identity => "identity",
            Builtin::ScaleTail { .. } => "scale_tail",
        }
    }

    fn eval(self, t: f64, e: &[f64]) -> Vec<f64> {
        match self {
            Builtin::Scalar => e.iter().map(|x| t * x).collect(),
            Builtin::ScalarSquared => e.iter().map(|x| t * t * x).collect(),
            Builtin::Translate => e.iter().map(|x| x + t).collect(),
            Builtin::Identity => e.to_vec(),
            Builtin::ScaleTail { from } => e
                .iter()
                .enumerate()
                .map(|(i, x)| if i < from { *x } else { t * x })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Evaluator {
    Builtin(Builtin),
    /// Polynomial in `(t, e₁, …, e_m)`.
    Polynomial(PolyMap),
}

/// A table row of a polynomial action: coefficient `c` of `t^t · e^e`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionTerm {
    #[serde(default)]
    pub t: u32,
    pub e: Vec<u32>,
    pub c: Vec<f64>,
}

impl Evaluator {
    pub fn polynomial(ambient: usize, terms: &[ActionTerm]) -> Result<Self> {
        let monomials = terms
            .iter()
            .map(|term| Monomial {
                e: std::iter::once(term.t).chain(term.e.iter().copied()).collect(),
                c: term.c.clone(),
            })
            .collect();
        Ok(Evaluator::Polynomial(PolyMap::new(ambient + 1, ambient, monomials)?))
    }

    fn terms(&self) -> Option<Vec<ActionTerm>> {
        match self {
            Evaluator::Builtin(_) => None,
            Evaluator::Polynomial(p) => Some(
                p.terms()
                    .iter()
                    .map(|m| ActionTerm {
                        t: m.e[0],
                        e: m.e[1..].to_vec(),
                        c: m.c.clone(),
                    })
                    .collect(),
            ),
        }
    }
}

/// An action together with the samples and the `t` values it is audited on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ActionJson", into = "ActionJson")]
pub struct MonoidActionSample {
    ambient: usize,
    evaluator: Evaluator,
    samples: Vec<Vec<f64>>,
    t_grid: Vec<f64>,
}

impl MonoidActionSample {
    pub fn new(
        ambient: usize,
        evaluator: Evaluator,
        samples: Vec<Vec<f64>>,
        t_grid: Vec<f64>,
    ) -> Result<Self> {
        if let Evaluator::Polynomial(p) = &evaluator {
            if p.nvars() != ambient + 1 || p.nout() != ambient {
                return Err(Error::Evaluator("polynomial does not match the ambient dimension".into()));
            }
        }
        if let Evaluator::Builtin(Builtin::ScaleTail { from }) = evaluator {
            if from > ambient {
                return Err(Error::Evaluator(format!("scale_tail from {from} exceeds ambient {ambient}")));
            }
        }
        if !t_grid.contains(&0.0) || !t_grid.contains(&1.0) {
            return Err(Error::Evaluator("t_grid must contain 0 and 1".into()));
        }
        if t_grid.iter().any(|t| !t.is_finite()) {
            return Err(Error::Evaluator("t_grid must be finite".into()));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.len() != ambient {
                return Err(Error::Evaluator(format!(
                    "sample {i} has dimension {}, expected {ambient}",
                    s.len()
                )));
            }
            if s.iter().any(|x| !x.is_finite()) {
                return Err(Error::Evaluator(format!("sample {i} is not finite")));
            }
        }
        Ok(Self {
            ambient,
            evaluator,
            samples,
            t_grid,
        })
    }

    /// The default grid `{−2, −1, −½, 0, ½, 1, 2}`.
    pub fn default_t_grid() -> Vec<f64> {
        vec![-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0]
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.evaluator
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    /// `h_t(e)`.
    pub fn apply(&self, t: f64, e: &[f64]) -> Result<Vec<f64>> {
        if e.len() != self.ambient {
            return Err(Error::DimensionMismatch {
                expected: self.ambient,
                found: e.len(),
            });
        }
        let out = match &self.evaluator {
            Evaluator::Builtin(b) => b.eval(t, e),
            Evaluator::Polynomial(p) => {
                let mut x = Vec::with_capacity(e.len() + 1);
                x.push(t);
                x.extend_from_slice(e);
                p.eval(&x)?
            }
        };
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluator(format!("non-finite value at t = {t}, e = {e:?}")));
        }
        Ok(out)
    }
}

/// Wire form of an action.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionJson {
    pub ambient: usize,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<ActionTerm>>,
    pub samples: Vec<Vec<f64>>,
    #[serde(default = "MonoidActionSample::default_t_grid")]
    pub t_grid: Vec<f64>,
}

impl TryFrom<ActionJson> for MonoidActionSample {
    type Error = Error;

    fn try_from(j: ActionJson) -> Result<Self> {
        let evaluator = match j.kind.as_str() {
            "builtin" => {
                let name = j
                    .name
                    .as_deref()
                    .ok_or_else(|| Error::Evaluator("builtin action needs a name".into()))?;
                Evaluator::Builtin(match name {
                    "scalar" => Builtin::Scalar,
                    "scalar_squared" => Builtin::ScalarSquared,
                    "translate" => Builtin::Translate,
                    "identity" => Builtin::Identity,
                    "scale_tail" => Builtin::ScaleTail {
                        from: j
                            .from
                            .ok_or_else(|| Error::Evaluator("scale_tail needs `from`".into()))?,
                    },
                    other => return Err(Error::Evaluator(format!("unknown builtin {other}"))),
                })
            }
            "polynomial" => {
                let coeffs = j
                    .coeffs
                    .as_deref()
                    .ok_or_else(|| Error::Evaluator("polynomial action needs coeffs".into()))?;
                Evaluator::polynomial(j.ambient, coeffs)?
            }
            other => return Err(Error::Evaluator(format!("unknown action kind {other}"))),
        };
        MonoidActionSample::new(j.ambient, evaluator, j.samples, j.t_grid)
    }
}

impl From<MonoidActionSample> for ActionJson {
    fn from(a: MonoidActionSample) -> Self {
        let (kind, name, from) = match a.evaluator {
            Evaluator::Builtin(b) => {
                let from = match b {
                    Builtin::ScaleTail { from } => Some(from),
                    _ => None,
                };
                ("builtin", Some(b.name().to_string()), from)
            }
            Evaluator::Polynomial(_) => ("polynomial", None, None),
        };
        ActionJson {
            ambient: a.ambient,
            kind: kind.into(),
            name,
            from,
            coeffs: a.evaluator.terms(),
            samples: a.samples,
            t_grid: a.t_grid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum AxiomViolation {
    /// `h₁(e) ≠ e`.
    Unit { sample: usize, residual: f64 },
    /// `h_t(h_s(e)) ≠ h_{ts}(e)`.
    Composition {
        sample: usize,
        t: f64,
        s: f64,
        residual: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub verdict: Verdict,
    pub max_residual: f64,
    pub violations: Vec<AxiomViolation>,
}

/// Audits `h₁ = id` and `h_t ∘ h_s = h_{ts}` over `t_grid × t_grid × samples`.
pub fn audit_axioms(a: &MonoidActionSample, tol: f64) -> Result<AxiomReport> {
    let mut violations = Vec::new();
    let mut max_residual = 0.0f64;
    for (i, e) in a.samples.iter().enumerate() {
        let r = linalg::distance(&a.apply(1.0, e)?, e);
        max_residual = max_residual.max(r);
        if r > tol {
            violations.push(AxiomViolation::Unit {
                sample: i,
                residual: r,
            });
        }
        for &s in &a.t_grid {
            let hs = a.apply(s, e)?;
            for &t in &a.t_grid {
                let r = linalg::distance(&a.apply(t, &hs)?, &a.apply(t * s, e)?);
                max_residual = max_residual.max(r);
                if r > tol {
                    violations.push(AxiomViolation::Composition {
                        sample: i,
                        t,
                        s,
                        residual: r,
                    });
                }
            }
        }
    }
    Ok(AxiomReport {
        verdict: Verdict::from_pass(violations.is_empty()),
        max_residual,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerticalDerivative {
    pub value: Vec<f64>,
    /// Bound on `‖value − φ(e)‖`: the Richardson correction plus a rounding floor.
    pub error_estimate: f64,
}

fn central(a: &MonoidActionSample, e: &[f64], h: f64) -> Result<(Vec<f64>, f64)> {
    let plus = a.apply(h, e)?;
    let minus = a.apply(-h, e)?;
    let scale = plus.iter().chain(&minus).fold(0.0f64, |m, v| m.max(v.abs()));
    let d = plus
        .iter()
        .zip(&minus)
        .map(|(p, m)| (p - m) / (2.0 * h))
        .collect();
    Ok((d, scale))
}

/// `φ(e) = d/dt|₀ h_t(e)` by central differences at `step` and `step/2`,
/// combined by one Richardson step.
pub fn vertical_derivative(a: &MonoidActionSample, e: &[f64], step: f64) -> Result<VerticalDerivative> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Config(format!("step must be positive, got {step}")));
    }
    let (d1, s1) = central(a, e, step)?;
    let (d2, s2) = central(a, e, step / 2.0)?;
    let value: Vec<f64> = d1
        .iter()
        .zip(&d2)
        .map(|(a, b)| (4.0 * b - a) / 3.0)
        .collect();
    let correction = linalg::distance(&value, &d2);
    let rounding = 10.0 * f64::EPSILON * s1.max(s2) * (e.len().max(1) as f64).sqrt() / step;
    Ok(VerticalDerivative {
        value,
        error_estimate: correction + rounding,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regularity {
    Regular,
    NotRegular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRegularity {
    pub sample: usize,
    pub point: Vec<f64>,
    /// `‖φ(e)‖`.
    pub phi_norm: f64,
    /// `‖e − h₀(e)‖`.
    pub h0_gap: f64,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub classification: Regularity,
    pub verdict: Verdict,
    pub points: Vec<PointRegularity>,
    /// Sample indices where `φ(e) = 0` and `e = h₀(e)` disagree.
    pub violations: Vec<usize>,
}

/// Classifies every sample: consistent iff `‖φ(e)‖ ≤ tol ⇔ ‖e − h₀(e)‖ ≤ tol`.
pub fn regularity_check(a: &MonoidActionSample, tol: f64, step: f64) -> Result<RegularityReport> {
    let mut points = Vec::with_capacity(a.samples.len());
    let mut violations = Vec::new();
    for (i, e) in a.samples.iter().enumerate() {
        let phi = vertical_derivative(a, e, step)?;
        let phi_norm = linalg::norm(&phi.value);
        let h0_gap = linalg::distance(e, &a.apply(0.0, e)?);
        let consistent = (phi_norm <= tol) == (h0_gap <= tol);
        if !consistent {
            violations.push(i);
        }
        points.push(PointRegularity {
            sample: i,
            point: e.clone(),
            phi_norm,
            h0_gap,
            consistent,
        });
    }
    let regular = violations.is_empty();
    Ok(RegularityReport {
        classification: if regular {
            Regularity::Regular
        } else {
            Regularity::NotRegular
        },
        verdict: Verdict::from_pass(regular),
        points,
        violations,
    })
}

/// One base cluster of a reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberCluster {
    pub base_point: Vec<f64>,
    /// Sample indices whose `h₀` image falls on `base_point`.
    pub members: Vec<usize>,
    pub fiber: Subspace,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub ambient: usize,
    pub clusters: Vec<FiberCluster>,
}

/// Recovers the bundle `h₀: E → h₀(E)` from a regular action: over each
/// base point the fiber is the span of `φ(e)` for the samples `e` with
/// `h₀(e)` on that point.
///
/// With `base_samples` given, each is a cluster center and samples within
/// `cluster_radius` of it belong to it. Without, the `h₀` images are
/// grouped by single linkage at `cluster_radius`.
pub fn reconstruct_bundle(
    a: &MonoidActionSample,
    base_samples: Option<&[Vec<f64>]>,
    tol: f64,
    step: f64,
    cluster_radius: f64,
) -> Result<Reconstruction> {
    let regularity = regularity_check(a, tol, step)?;
    if regularity.classification != Regularity::Regular {
        return Err(Error::NotRegular {
            violations: regularity.violations.len(),
        });
    }
    let images = a
        .samples
        .iter()
        .map(|e| a.apply(0.0, e))
        .collect::<Result<Vec<_>>>()?;

    let groups: Vec<(Vec<f64>, Vec<usize>)> = match base_samples {
        Some(bases) => bases
            .iter()
            .map(|b| {
                if b.len() != a.ambient {
                    return Err(Error::DimensionMismatch {
                        expected: a.ambient,
                        found: b.len(),
                    });
                }
                let members = images
                    .iter()
                    .enumerate()
                    .filter(|(_, img)| linalg::distance(img, b) <= cluster_radius)
                    .map(|(i, _)| i)
                    .collect();
                Ok((b.clone(), members))
            })
            .collect::<Result<_>>()?,
        None => {
            let refs: Vec<&[f64]> = images.iter().map(Vec::as_slice).collect();
            strata::single_linkage(&refs, cluster_radius)
                .into_iter()
                .map(|members| (images[members[0]].clone(), members))
                .collect()
        }
    };

    let mut clusters = Vec::with_capacity(groups.len());
    for (base_point, members) in groups {
        let mut phis = Vec::new();
        for &i in &members {
            let phi = vertical_derivative(a, &a.samples[i], step)?.value;
            if linalg::norm(&phi) > tol {
                phis.push(phi);
            }
        }
        let fiber = Subspace::span(&phis, a.ambient)?;
        clusters.push(FiberCluster {
            base_point,
            members,
            rank: fiber.dim(),
            fiber,
        });
    }
    Ok(Reconstruction {
        ambient: a.ambient,
        clusters,
    })
}

impl Reconstruction {
    /// Reads the reconstruction back as a bundle over `base`, for an action
    /// on `base × ℝᵏ` whose fibers live in the trailing `k` coordinates.
    ///
    /// Each base point is matched to the cluster centered at `(x, 0)`.
    pub fn to_bundle(&self, base: &Stratification, tol: f64) -> Result<SampledStratifiedBundle> {
        let n = base.ambient_dim();
        if n > self.ambient {
            return Err(Error::DimensionMismatch {
                expected: self.ambient,
                found: n,
            });
        }
        let k = self.ambient - n;
        SampledStratifiedBundle::try_from_fn(base.clone(), k, |_, p| {
            let c = self
                .clusters
                .iter()
                .find(|c| {
                    linalg::distance(&c.base_point[..n], p) <= tol
                        && c.base_point[n..].iter().all(|v| v.abs() <= tol)
                })
                .ok_or_else(|| Error::Bundle(format!("no cluster over base point {p:?}")))?;
            let mut tails = Vec::with_capacity(c.rank);
            for v in c.fiber.basis_vectors() {
                if v[..n].iter().any(|x| x.abs() > tol) {
                    return Err(Error::Bundle(format!(
                        "fiber over {p:?} is not vertical"
                    )));
                }
                tails.push(v[n..].to_vec());
            }
            Subspace::span(&tails, k)
        })
    }
}

/// Scalar multiplication on the total space of `b`, sampled at every base
/// point `x` by `(x, 0)`, `(x, u)` for each basis vector `u` of `A_x`, and
/// `(x, −2Σu)`.
pub fn scalar_action_of(b: &SampledStratifiedBundle, t_grid: Vec<f64>) -> Result<MonoidActionSample> {
    let n = b.base().ambient_dim();
    let k = b.fiber_ambient();
    let mut samples = Vec::new();
    for (st, fibers) in b.base().strata().iter().zip(b.fibers()) {
        for (p, f) in st.points.iter().zip(fibers) {
            let with = |v: &[f64]| p.iter().chain(v).copied().collect::<Vec<f64>>();
            samples.push(with(&vec![0.0; k]));
            let basis = f.basis_vectors();
            let mut sum = vec![0.0; k];
            for u in &basis {
                samples.push(with(u));
                for (s, x) in sum.iter_mut().zip(u) {
                    *s -= 2.0 * x;
                }
            }
            if !basis.is_empty() {
                samples.push(with(&sum));
            }
        }
    }
    MonoidActionSample::new(n + k, Evaluator::Builtin(Builtin::ScaleTail { from: n }), samples, t_grid)
}
