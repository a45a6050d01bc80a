use serde::{Deserialize, Serialize};

use super::wick::{wick_expand, Term};
use super::FieldFunction;
use crate::error::{ensure, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coefficient: f64,
    /// Power of each listed field function.
    pub powers: Vec<usize>,
}

/// A polynomial in finitely many field variables `φ(f_1), …, φ(f_m)`,
/// optionally Wick ordered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderPolynomial {
    #[serde(default)]
    pub functions: Vec<FieldFunction>,
    pub terms: Vec<Monomial>,
    #[serde(default)]
    pub wick_ordered: bool,
}

impl Default for CylinderPolynomial {
    fn default() -> Self {
        Self::vacuum()
    }
}

impl CylinderPolynomial {
    /// The constant `1`.
    pub fn vacuum() -> Self {
        Self {
            functions: Vec::new(),
            terms: vec![Monomial { coefficient: 1.0, powers: Vec::new() }],
            wick_ordered: false,
        }
    }

    /// `φ(f)^p`, or `:φ(f)^p:` when `wick` is set.
    pub fn power(f: FieldFunction, p: usize, wick: bool) -> Self {
        Self { functions: vec![f], terms: vec![Monomial { coefficient: 1.0, powers: vec![p] }], wick_ordered: wick }
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().filter(|t| t.coefficient != 0.0).map(|t| t.powers.iter().sum()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coefficient == 0.0)
    }

    /// A nonzero constant.
    pub fn constant_value(&self) -> Option<f64> {
        if self.degree() == 0 {
            Some(self.terms.iter().map(|t| t.coefficient).sum())
        } else {
            None
        }
    }

    pub fn validate(&self, max_degree: usize) -> Result<()> {
        for t in &self.terms {
            ensure!(
                t.powers.len() <= self.functions.len(),
                Config,
                "monomial has {} powers but only {} field functions are listed",
                t.powers.len(),
                self.functions.len()
            );
            ensure!(t.coefficient.is_finite(), Config, "non-finite coefficient");
        }
        let d = self.degree();
        ensure!(d <= max_degree, Config, "cylinder polynomial degree {d} exceeds the cap {max_degree}");
        Ok(())
    }

    /// Ordinary monomials over the variable indices `offset..offset+m`,
    /// with Wick ordering resolved through `cov` (the covariance of the
    /// listed variables among themselves).
    pub fn expand(&self, offset: usize, cov: &dyn Fn(usize, usize) -> f64) -> Vec<Term> {
        let mut out = Vec::new();
        for t in &self.terms {
            if t.coefficient == 0.0 {
                continue;
            }
            let idx: Vec<usize> =
                t.powers.iter().enumerate().flat_map(|(i, &p)| std::iter::repeat(offset + i).take(p)).collect();
            if self.wick_ordered {
                let local = |a: usize, b: usize| cov(a - offset, b - offset);
                out.extend(wick_expand(&idx, &local).into_iter().map(|(c, m)| (t.coefficient * c, m)));
            } else {
                out.push((t.coefficient, idx));
            }
        }
        out
    }
}

/// Evaluates expanded monomials at a point.
pub fn eval_terms(terms: &[Term], y: &[f64]) -> f64 {
    terms.iter().map(|(c, m)| c * m.iter().map(|&i| y[i]).product::<f64>()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_and_degree() {
        let v = CylinderPolynomial::vacuum();
        assert_eq!(v.constant_value(), Some(1.0));
        assert!(!v.is_zero());
        let p = CylinderPolynomial::power(FieldFunction::Mode { amplitude: 1.0 }, 3, false);
        assert_eq!(p.degree(), 3);
        assert!(p.validate(2).is_err());
        assert!(p.validate(4).is_ok());
    }

    #[test]
    fn wick_square_expands() {
        let p = CylinderPolynomial::power(FieldFunction::Mode { amplitude: 1.0 }, 2, true);
        let terms = p.expand(2, &|_, _| 0.5);
        assert_eq!(eval_terms(&terms, &[0.0, 0.0, 3.0]), 9.0 - 0.5);
    }

    #[test]
    fn serde_round_trip() {
        let p = CylinderPolynomial::power(FieldFunction::form_at(&[0.5]), 2, true);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<CylinderPolynomial>(&s).unwrap(), p);
    }
}
