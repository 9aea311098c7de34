use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result, ValidationErrors};
use crate::quadrature::Quadrature;

/// Closed interval of private types for one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeSpace {
    pub lo: f64,
    pub hi: f64,
}

impl TypeSpace {
    pub fn new(lo: f64, hi: f64) -> Self {
        TypeSpace { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    fn slack(&self) -> f64 {
        1e-12 * self.width().max(self.lo.abs()).max(self.hi.abs()).max(1.0)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo - self.slack() && x <= self.hi + self.slack()
    }

    pub fn check(&self, what: &'static str, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                what,
                value: x,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }

    /// `n` equally spaced points including both endpoints.
    pub fn linspace(&self, n: usize) -> Vec<f64> {
        assert!(n >= 2, "linspace needs at least two points");
        let step = self.width() / (n - 1) as f64;
        (0..n)
            .map(|k| if k == n - 1 { self.hi } else { self.lo + step * k as f64 })
            .collect()
    }

    pub(crate) fn validate(&self, field: &str, errs: &mut ValidationErrors) {
        if !(self.lo.is_finite() && self.hi.is_finite()) {
            errs.push(field, "type bounds must be finite");
        } else if self.lo >= self.hi {
            errs.push(field, format!("degenerate type space: lo {} >= hi {}", self.lo, self.hi));
        }
    }
}

/// Shape of a belief distribution; the support is always the owning state's
/// [`TypeSpace`] (beta is rescaled onto it, the normal is truncated to it).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum BeliefKind {
    Uniform,
    Beta { a: f64, b: f64 },
    TruncatedNormal { mu: f64, sigma: f64 },
}

impl BeliefKind {
    pub(crate) fn validate(&self, field: &str, errs: &mut ValidationErrors) {
        match *self {
            BeliefKind::Uniform => {}
            BeliefKind::Beta { a, b } => {
                if !(a.is_finite() && a > 0.0) {
                    errs.push(format!("{field}.params.a"), "beta shape a must be > 0");
                }
                if !(b.is_finite() && b > 0.0) {
                    errs.push(format!("{field}.params.b"), "beta shape b must be > 0");
                }
            }
            BeliefKind::TruncatedNormal { mu, sigma } => {
                if !mu.is_finite() {
                    errs.push(format!("{field}.params.mu"), "mu must be finite");
                }
                if !(sigma.is_finite() && sigma > 0.0) {
                    errs.push(format!("{field}.params.sigma"), "sigma must be > 0");
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Law {
    Uniform,
    Beta(Beta),
    TruncatedNormal { normal: Normal, cdf_lo: f64, mass: f64 },
}

/// A validated belief over one state's type space.
#[derive(Debug, Clone)]
pub struct BeliefDistribution {
    space: TypeSpace,
    kind: BeliefKind,
    law: Law,
}

impl BeliefDistribution {
    /// Builds the distribution; `kind` and `space` must already be valid.
    pub fn new(space: TypeSpace, kind: BeliefKind) -> Result<Self> {
        let mut errs = ValidationErrors::default();
        space.validate("type_space", &mut errs);
        kind.validate("distribution", &mut errs);
        if !errs.is_empty() {
            return Err(Error::Invalid(errs));
        }
        let law = match kind {
            BeliefKind::Uniform => Law::Uniform,
            BeliefKind::Beta { a, b } => Law::Beta(Beta::new(a, b).map_err(|e| {
                let mut errs = ValidationErrors::default();
                errs.push("distribution", e.to_string());
                Error::Invalid(errs)
            })?),
            BeliefKind::TruncatedNormal { mu, sigma } => {
                let normal = Normal::new(mu, sigma).map_err(|e| {
                    let mut errs = ValidationErrors::default();
                    errs.push("distribution", e.to_string());
                    Error::Invalid(errs)
                })?;
                let cdf_lo = normal.cdf(space.lo);
                let mass = normal.cdf(space.hi) - cdf_lo;
                if !(mass > 1e-300) {
                    let mut errs = ValidationErrors::default();
                    errs.push(
                        "distribution",
                        "truncated normal puts no mass on the type space",
                    );
                    return Err(Error::Invalid(errs));
                }
                Law::TruncatedNormal { normal, cdf_lo, mass }
            }
        };
        Ok(BeliefDistribution { space, kind, law })
    }

    pub fn uniform(lo: f64, hi: f64) -> Self {
        BeliefDistribution::new(TypeSpace::new(lo, hi), BeliefKind::Uniform)
            .expect("uniform distribution on a valid interval")
    }

    pub fn space(&self) -> TypeSpace {
        self.space
    }

    pub fn kind(&self) -> BeliefKind {
        self.kind
    }

    fn to_unit(&self, x: f64) -> f64 {
        ((x - self.space.lo) / self.space.width()).clamp(0.0, 1.0)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.space.lo {
            return 0.0;
        }
        if x >= self.space.hi {
            return 1.0;
        }
        match &self.law {
            Law::Uniform => self.to_unit(x),
            Law::Beta(beta) => beta.cdf(self.to_unit(x)),
            Law::TruncatedNormal { normal, cdf_lo, mass } => {
                ((normal.cdf(x) - cdf_lo) / mass).clamp(0.0, 1.0)
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.space.lo || x > self.space.hi {
            return 0.0;
        }
        match &self.law {
            Law::Uniform => 1.0 / self.space.width(),
            Law::Beta(beta) => beta.pdf(self.to_unit(x)) / self.space.width(),
            Law::TruncatedNormal { normal, mass, .. } => normal.pdf(x) / mass,
        }
    }

    /// Inverse cdf on `[0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        if u == 0.0 {
            return self.space.lo;
        }
        if u == 1.0 {
            return self.space.hi;
        }
        let x = match &self.law {
            Law::Uniform => self.space.lo + u * self.space.width(),
            Law::Beta(beta) => self.space.lo + beta.inverse_cdf(u) * self.space.width(),
            Law::TruncatedNormal { normal, cdf_lo, mass } => normal.inverse_cdf(cdf_lo + u * mass),
        };
        x.clamp(self.space.lo, self.space.hi)
    }

    /// Beta laws with a shape below one have unbounded density at an endpoint
    /// and are integrated in probability space instead.
    fn integrate_by_quantile(&self) -> bool {
        matches!(self.kind, BeliefKind::Beta { a, b } if a < 1.0 || b < 1.0)
    }

    /// `E[f(θ)]` to absolute tolerance `tol`. `breakpoints` are type values
    /// where `f` may have kinks.
    pub fn expect<F>(&self, f: F, tol: f64, breakpoints: &[f64]) -> Result<f64>
    where
        F: Fn(f64) -> f64,
    {
        let quad = Quadrature::with_tol(tol);
        let TypeSpace { lo, hi } = self.space;
        let value = match &self.law {
            Law::Uniform => {
                let w = hi - lo;
                quad.integrate(|x| f(x) / w, lo, hi, breakpoints)?.value
            }
            _ if self.integrate_by_quantile() => {
                let cuts: Vec<f64> = breakpoints.iter().map(|&x| self.cdf(x)).collect();
                quad.integrate(|u| f(self.quantile(u)), 0.0, 1.0, &cuts)?.value
            }
            _ => quad.integrate(|x| f(x) * self.pdf(x), lo, hi, breakpoints)?.value,
        };
        Ok(value)
    }

    /// Probability of `[a, b]`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        (self.cdf(b) - self.cdf(a)).max(0.0)
    }
}

impl PartialEq for BeliefDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.kind == other.kind
    }
}
