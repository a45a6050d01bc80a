//! Bounded functions on position space: potentials, particle test functions
//! and scalar observables of a field value.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// A bounded function on `R^d` used as a particle state or a multiplicative
/// insertion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Zero,
    /// `value` everywhere. Bounded, so usable as an insertion, but not
    /// integrable and therefore rejected as a particle state.
    Constant {
        value: f64,
    },
    /// `amplitude · exp(−|x − center|² / (2 width²))`.
    GaussianBump {
        center: Vec<f64>,
        width: f64,
        amplitude: f64,
    },
    /// `value` on the closed box `[lo, hi]`, zero elsewhere.
    Indicator {
        lo: Vec<f64>,
        hi: Vec<f64>,
        value: f64,
    },
    /// Piecewise-linear interpolation of `values` on a uniform grid over
    /// `[lo, hi]` (one dimension only), zero outside.
    Tabulated {
        lo: f64,
        hi: f64,
        values: Vec<f64>,
    },
}

impl TestFunction {
    /// `π^{-d/4} exp(−|x|²/2)`, unit norm in `L²(R^d)`.
    pub fn normalized_bump(dim: usize) -> Self {
        TestFunction::GaussianBump {
            center: vec![0.0; dim],
            width: 1.0,
            amplitude: std::f64::consts::PI.powf(-(dim as f64) / 4.0),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            TestFunction::Zero => {}
            TestFunction::Constant { value } => ensure!(value.is_finite(), Domain, "constant must be finite"),
            TestFunction::GaussianBump { center, width, amplitude } => {
                ensure!(center.len() == dim, Domain, "bump center has dimension {}, expected {dim}", center.len());
                ensure!(*width > 0.0, Domain, "bump width must be positive");
                ensure!(amplitude.is_finite(), Domain, "bump amplitude must be finite");
            }
            TestFunction::Indicator { lo, hi, value } => {
                ensure!(lo.len() == dim && hi.len() == dim, Domain, "indicator box must have dimension {dim}");
                ensure!(lo.iter().zip(hi).all(|(a, b)| a < b), Domain, "indicator box must have lo < hi");
                ensure!(value.is_finite(), Domain, "indicator value must be finite");
            }
            TestFunction::Tabulated { lo, hi, values } => {
                ensure!(dim == 1, Domain, "tabulated functions are one-dimensional");
                ensure!(lo < hi && values.len() >= 2, Domain, "tabulated function needs lo < hi and two values");
                ensure!(values.iter().all(|v| v.is_finite()), Domain, "tabulated values must be finite");
            }
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Zero => 0.0,
            TestFunction::Constant { value } => *value,
            TestFunction::GaussianBump { center, width, amplitude } => {
                let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                amplitude * (-0.5 * r2 / (width * width)).exp()
            }
            TestFunction::Indicator { lo, hi, value } => {
                if x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *a <= *v && *v <= *b) {
                    *value
                } else {
                    0.0
                }
            }
            TestFunction::Tabulated { lo, hi, values } => interpolate(*lo, *hi, values, x[0], 0.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            TestFunction::Zero => true,
            TestFunction::Constant { value } => *value == 0.0,
            TestFunction::GaussianBump { amplitude, .. } => *amplitude == 0.0,
            TestFunction::Indicator { value, .. } => *value == 0.0,
            TestFunction::Tabulated { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    /// Proposal density for the starting point of paths weighted by this
    /// function: `|f|` normalised when `f` has one sign and a closed form,
    /// the uniform density on its bounding box otherwise.
    pub fn proposal(&self, dim: usize) -> Result<Proposal> {
        self.validate(dim)?;
        ensure!(!self.is_zero(), Config, "start function vanishes identically, the proposal has no mass");
        Ok(match self {
            TestFunction::GaussianBump { center, width, .. } => {
                Proposal::Gaussian { center: center.clone(), width: *width }
            }
            TestFunction::Indicator { lo, hi, .. } => Proposal::Uniform { lo: lo.clone(), hi: hi.clone() },
            TestFunction::Tabulated { lo, hi, .. } => Proposal::Uniform { lo: vec![*lo], hi: vec![*hi] },
            TestFunction::Constant { .. } | TestFunction::Zero => {
                return Err(crate::Error::Config("start function must have bounded support".into()))
            }
        })
    }
}

/// Start-point proposal density `q`.
#[derive(Debug, Clone, PartialEq)]
pub enum Proposal {
    Gaussian { center: Vec<f64>, width: f64 },
    Uniform { lo: Vec<f64>, hi: Vec<f64> },
}

impl Proposal {
    /// Draws `x ~ q` into `out` and returns `q(x)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> f64 {
        match self {
            Proposal::Gaussian { center, width } => {
                let mut r2 = 0.0;
                for (o, c) in out.iter_mut().zip(center) {
                    let z: f64 = rng.sample(StandardNormal);
                    r2 += z * z;
                    *o = c + width * z;
                }
                let d = center.len() as f64;
                (-0.5 * r2).exp() / (2.0 * std::f64::consts::PI * width * width).powf(0.5 * d)
            }
            Proposal::Uniform { lo, hi } => {
                let mut vol = 1.0;
                for (o, (a, b)) in out.iter_mut().zip(lo.iter().zip(hi)) {
                    *o = a + (b - a) * rng.random::<f64>();
                    vol *= b - a;
                }
                1.0 / vol
            }
        }
    }
}

/// A bounded potential on `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Zero,
    Constant {
        value: f64,
    },
    /// `−depth · exp(−|x − center|² / (2 width²))`.
    GaussianWell {
        depth: f64,
        width: f64,
        center: Vec<f64>,
    },
    /// `−depth` inside the ball `|x − center| ≤ half_width`.
    SquareWell {
        depth: f64,
        half_width: f64,
        center: Vec<f64>,
    },
    /// Piecewise-linear on a uniform 1-D grid, extended by its end values.
    Tabulated {
        lo: f64,
        hi: f64,
        values: Vec<f64>,
    },
    Sum {
        terms: Vec<PotentialSpec>,
    },
}

impl PotentialSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            PotentialSpec::Zero => {}
            PotentialSpec::Constant { value } => {
                ensure!(value.is_finite(), Domain, "constant potential must be finite")
            }
            PotentialSpec::GaussianWell { depth, width, center } => {
                ensure!(
                    depth.is_finite() && *width > 0.0,
                    Domain,
                    "gaussian well needs finite depth and positive width"
                );
                ensure!(center.len() == dim, Domain, "well center must have dimension {dim}");
            }
            PotentialSpec::SquareWell { depth, half_width, center } => {
                ensure!(
                    depth.is_finite() && *half_width > 0.0,
                    Domain,
                    "square well needs finite depth and positive half-width"
                );
                ensure!(center.len() == dim, Domain, "well center must have dimension {dim}");
            }
            PotentialSpec::Tabulated { lo, hi, values } => {
                ensure!(dim == 1, Domain, "tabulated potentials are one-dimensional");
                ensure!(lo < hi && values.len() >= 2, Domain, "tabulated potential needs lo < hi and two values");
                ensure!(values.iter().all(|v| v.is_finite()), Domain, "potential values must be finite");
            }
            PotentialSpec::Sum { terms } => {
                for t in terms {
                    t.validate(dim)?;
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Constant { value } => *value,
            PotentialSpec::GaussianWell { depth, width, center } => {
                let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                -depth * (-0.5 * r2 / (width * width)).exp()
            }
            PotentialSpec::SquareWell { depth, half_width, center } => {
                let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                if r2 <= half_width * half_width {
                    -depth
                } else {
                    0.0
                }
            }
            PotentialSpec::Tabulated { lo, hi, values } => {
                let clamped = x[0].clamp(*lo, *hi);
                interpolate(*lo, *hi, values, clamped, 0.0)
            }
            PotentialSpec::Sum { terms } => terms.iter().map(|t| t.eval(x)).sum(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            PotentialSpec::Zero => true,
            PotentialSpec::Constant { value } => *value == 0.0,
            PotentialSpec::Sum { terms } => terms.iter().all(PotentialSpec::is_zero),
            _ => false,
        }
    }

    /// Adds a constant shift.
    pub fn shifted(self, c: f64) -> PotentialSpec {
        PotentialSpec::Sum { terms: vec![self, PotentialSpec::Constant { value: c }] }
    }
}

fn interpolate(lo: f64, hi: f64, values: &[f64], x: f64, outside: f64) -> f64 {
    if !(lo..=hi).contains(&x) {
        return outside;
    }
    let cells = (values.len() - 1) as f64;
    let pos = (x - lo) / (hi - lo) * cells;
    let i = (pos.floor() as usize).min(values.len() - 2);
    let frac = pos - i as f64;
    values[i] * (1.0 - frac) + values[i + 1] * frac
}

/// A function of one real field value: an insertion `G(y)` or a field
/// potential `V(y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarFunction {
    /// `Σ_j coefficients[j] · y^j`, constant term first.
    Polynomial { coefficients: Vec<f64> },
    /// `1` on `[lo, hi]`, zero elsewhere.
    Indicator { lo: f64, hi: f64 },
    /// `amplitude · exp(−y² / (2 width²))`.
    Gaussian { amplitude: f64, width: f64 },
}

impl ScalarFunction {
    pub fn constant(c: f64) -> Self {
        ScalarFunction::Polynomial { coefficients: vec![c] }
    }

    pub fn identity() -> Self {
        ScalarFunction::Polynomial { coefficients: vec![0.0, 1.0] }
    }

    pub fn monomial(power: usize) -> Self {
        let mut coefficients = vec![0.0; power + 1];
        coefficients[power] = 1.0;
        ScalarFunction::Polynomial { coefficients }
    }

    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            ScalarFunction::Polynomial { coefficients } => coefficients.iter().rev().fold(0.0, |acc, c| acc * y + c),
            ScalarFunction::Indicator { lo, hi } => {
                if *lo <= y && y <= *hi {
                    1.0
                } else {
                    0.0
                }
            }
            ScalarFunction::Gaussian { amplitude, width } => amplitude * (-0.5 * y * y / (width * width)).exp(),
        }
    }

    fn degree(coefficients: &[f64]) -> Option<usize> {
        coefficients.iter().rposition(|c| *c != 0.0)
    }

    /// Continuous and bounded below: a polynomial of degree zero or of even
    /// degree with positive leading coefficient, or a bounded family.
    pub fn validate_bounded_below(&self) -> Result<()> {
        match self {
            ScalarFunction::Polynomial { coefficients } => {
                ensure!(coefficients.iter().all(|c| c.is_finite()), Domain, "polynomial coefficients must be finite");
                if let Some(d) = Self::degree(coefficients) {
                    ensure!(
                        d == 0 || (d % 2 == 0 && coefficients[d] > 0.0),
                        Domain,
                        "polynomial of degree {d} with leading coefficient {} is not bounded below",
                        coefficients[d]
                    );
                }
            }
            ScalarFunction::Indicator { lo, hi } => ensure!(lo < hi, Domain, "indicator needs lo < hi"),
            ScalarFunction::Gaussian { amplitude, width } => {
                ensure!(
                    amplitude.is_finite() && *width > 0.0,
                    Domain,
                    "gaussian needs finite amplitude and positive width"
                )
            }
        }
        Ok(())
    }

    pub fn is_identically(&self, c: f64) -> bool {
        match self {
            ScalarFunction::Polynomial { coefficients } => {
                coefficients.first().copied().unwrap_or(0.0) == c && coefficients.iter().skip(1).all(|v| *v == 0.0)
            }
            ScalarFunction::Gaussian { amplitude, .. } => c == 0.0 && *amplitude == 0.0,
            ScalarFunction::Indicator { .. } => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potentials_evaluate() {
        let w = PotentialSpec::GaussianWell { depth: 2.0, width: 1.0, center: vec![1.0] };
        assert_eq!(w.eval(&[1.0]), -2.0);
        assert!((w.eval(&[2.0]) + 2.0 * (-0.5f64).exp()).abs() < 1e-15);
        let s = PotentialSpec::SquareWell { depth: 1.0, half_width: 0.5, center: vec![0.0, 0.0] };
        assert_eq!(s.eval(&[0.3, 0.3]), -1.0);
        assert_eq!(s.eval(&[0.4, 0.4]), 0.0);
        let t = PotentialSpec::Tabulated { lo: 0.0, hi: 1.0, values: vec![0.0, 2.0] };
        assert_eq!(t.eval(&[0.25]), 0.5);
        assert_eq!(t.eval(&[5.0]), 2.0);
        assert_eq!(w.clone().shifted(3.0).eval(&[1.0]), 1.0);
        assert!(PotentialSpec::Tabulated { lo: 0.0, hi: 1.0, values: vec![0.0, f64::NAN] }.validate(1).is_err());
        assert!(w.validate(2).is_err());
    }

    #[test]
    fn scalar_functions() {
        let p = ScalarFunction::Polynomial { coefficients: vec![1.0, 0.0, -2.0, 0.0, 1.0] };
        assert_eq!(p.eval(2.0), 1.0 - 8.0 + 16.0);
        assert!(p.validate_bounded_below().is_ok());
        assert!(ScalarFunction::Polynomial { coefficients: vec![0.0, 0.0, 0.0, 1.0] }
            .validate_bounded_below()
            .is_err());
        assert!(ScalarFunction::Polynomial { coefficients: vec![0.0, 0.0, -1.0] }.validate_bounded_below().is_err());
        assert!(ScalarFunction::constant(0.0).is_identically(0.0));
        assert_eq!(ScalarFunction::Indicator { lo: -1.0, hi: 1.0 }.eval(1.0), 1.0);
        assert_eq!(ScalarFunction::monomial(2).eval(3.0), 9.0);
    }

    #[test]
    fn proposals_integrate_to_one_under_importance_weights() {
        let mut rng = crate::rng::stream(1, 0);
        // E_q[f/q] = ∫ f
        let f = TestFunction::GaussianBump { center: vec![0.5], width: 0.7, amplitude: 2.0 };
        let q = f.proposal(1).unwrap();
        let mut x = [0.0];
        let n = 20_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let dens = q.sample(&mut rng, &mut x);
            acc += f.eval(&x) / dens;
        }
        let exact = 2.0 * 0.7 * (2.0 * std::f64::consts::PI).sqrt();
        assert!((acc / n as f64 - exact).abs() < 1e-9);
        let box_fn = TestFunction::Indicator { lo: vec![-1.0], hi: vec![2.0], value: -1.5 };
        let q = box_fn.proposal(1).unwrap();
        let dens = q.sample(&mut rng, &mut x);
        assert!((box_fn.eval(&x) / dens + 4.5).abs() < 1e-12);
        assert!(TestFunction::Zero.proposal(1).is_err());
        assert!(TestFunction::Constant { value: 1.0 }.proposal(1).is_err());
    }
}
