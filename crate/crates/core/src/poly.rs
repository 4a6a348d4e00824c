//! Polynomial maps `ℝⁿ → ℝᵐ` given by coefficient tables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One table row: the vector coefficient `c` of the monomial `x^e`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub e: Vec<u32>,
    pub c: Vec<f64>,
}

/// A polynomial map with `nvars` inputs and `nout` outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMap {
    nvars: usize,
    nout: usize,
    terms: Vec<Monomial>,
}

impl PolyMap {
    pub fn new(nvars: usize, nout: usize, terms: Vec<Monomial>) -> Result<Self> {
        for (i, t) in terms.iter().enumerate() {
            if t.e.len() != nvars {
                return Err(Error::Evaluator(format!(
                    "term {i} has {} exponents, expected {nvars}",
                    t.e.len()
                )));
            }
            if t.c.len() != nout {
                return Err(Error::Evaluator(format!(
                    "term {i} has {} coefficients, expected {nout}",
                    t.c.len()
                )));
            }
            if t.c.iter().any(|c| !c.is_finite()) {
                return Err(Error::Evaluator(format!("term {i} has a non-finite coefficient")));
            }
        }
        Ok(Self { nvars, nout, terms })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn nout(&self) -> usize {
        self.nout
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                found: x.len(),
            });
        }
        let mut out = vec![0.0; self.nout];
        for t in &self.terms {
            let m: f64 = t
                .e
                .iter()
                .zip(x)
                .map(|(&k, &xi)| xi.powi(k as i32))
                .product();
            for (o, c) in out.iter_mut().zip(&t.c) {
                *o += c * m;
            }
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluator(format!("non-finite value at {x:?}")));
        }
        Ok(out)
    }

    /// Product with a scalar polynomial `s` in the same variables.
    pub fn scaled_by(&self, s: &PolyMap) -> Result<PolyMap> {
        if s.nout != 1 || s.nvars != self.nvars {
            return Err(Error::Evaluator("scale must be a scalar polynomial in the same variables".into()));
        }
        let mut terms = Vec::with_capacity(self.terms.len() * s.terms.len());
        for a in &self.terms {
            for b in &s.terms {
                terms.push(Monomial {
                    e: a.e.iter().zip(&b.e).map(|(x, y)| x + y).collect(),
                    c: a.c.iter().map(|c| c * b.c[0]).collect(),
                });
            }
        }
        PolyMap::new(self.nvars, self.nout, terms)
    }
}
