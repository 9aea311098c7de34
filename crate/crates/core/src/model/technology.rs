use serde::{Deserialize, Serialize};

use crate::error::ValidationErrors;

/// Central finite-difference step for components without a closed-form slope.
pub const FD_STEP: f64 = 1e-5;

/// A scalar function of one type, used for the strength terms of the
/// two-sided technology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Component {
    Linear { slope: f64, intercept: f64 },
    /// Piecewise linear through `(nodes[k], values[k])`, constant beyond the
    /// end nodes.
    Tabulated { nodes: Vec<f64>, values: Vec<f64> },
}

impl Component {
    pub fn linear(slope: f64, intercept: f64) -> Self {
        Component::Linear { slope, intercept }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Component::Linear { slope, intercept } => slope * t + intercept,
            Component::Tabulated { nodes, values } => piecewise_linear(nodes, values, t),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Component::Linear { slope, .. } => *slope,
            Component::Tabulated { .. } => {
                (self.eval(t + FD_STEP) - self.eval(t - FD_STEP)) / (2.0 * FD_STEP)
            }
        }
    }

    /// Kinks of the component, for quadrature breakpoints.
    pub fn kinks(&self) -> &[f64] {
        match self {
            Component::Linear { .. } => &[],
            Component::Tabulated { nodes, .. } => nodes,
        }
    }

    fn validate(&self, field: &str, errs: &mut ValidationErrors) {
        match self {
            Component::Linear { slope, intercept } => {
                if !(slope.is_finite() && intercept.is_finite()) {
                    errs.push(field, "coefficients must be finite");
                } else if *slope <= 0.0 {
                    errs.push(field, "component must be strictly increasing (slope > 0)");
                }
            }
            Component::Tabulated { nodes, values } => {
                if nodes.len() < 2 || nodes.len() != values.len() {
                    errs.push(field, "tabulated component needs >= 2 nodes and matching values");
                } else if nodes.iter().chain(values).any(|v| !v.is_finite()) {
                    errs.push(field, "tabulated entries must be finite");
                } else if nodes.windows(2).any(|w| w[1] <= w[0]) {
                    errs.push(field, "tabulated nodes must be strictly increasing");
                } else if values.windows(2).any(|w| w[1] <= w[0]) {
                    errs.push(field, "component must be strictly increasing");
                }
            }
        }
    }

    fn covers(&self, lo: f64, hi: f64) -> bool {
        match self {
            Component::Linear { .. } => true,
            Component::Tabulated { nodes, .. } => {
                nodes.first().is_some_and(|&a| a <= lo) && nodes.last().is_some_and(|&b| b >= hi)
            }
        }
    }
}

pub(crate) fn piecewise_linear(nodes: &[f64], values: &[f64], t: f64) -> f64 {
    let n = nodes.len();
    if t <= nodes[0] {
        return values[0];
    }
    if t >= nodes[n - 1] {
        return values[n - 1];
    }
    let k = nodes.partition_point(|&x| x <= t).saturating_sub(1).min(n - 2);
    let s = (t - nodes[k]) / (nodes[k + 1] - nodes[k]);
    values[k] + s * (values[k + 1] - values[k])
}

/// Strength terms of one state: `p_i = h(θ_i) − g(θ_j) + base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strength {
    pub h: Component,
    pub g: Component,
    pub base: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum WarTechnology {
    /// Types are negated fighting costs, `c_i = −θ_i`; winning odds are fixed.
    OneSidedCost { p: [f64; 2] },
    /// Types shift relative strength; citizen war costs are constants.
    TwoSidedDifference { strength: [Strength; 2], costs: [f64; 2] },
}

impl WarTechnology {
    /// `p_i = 1/2 + (θ_i − θ_j)/2` with constant costs, the textbook
    /// symmetric contest on the unit square.
    pub fn symmetric_linear(costs: [f64; 2]) -> Self {
        let s = Strength {
            h: Component::linear(0.5, 0.0),
            g: Component::linear(0.5, 0.0),
            base: 0.5,
        };
        WarTechnology::TwoSidedDifference {
            strength: [s.clone(), s],
            costs,
        }
    }

    /// Winning probability of state `i` given own and opponent types.
    pub fn win_prob(&self, i: usize, own: f64, opp: f64) -> f64 {
        match self {
            WarTechnology::OneSidedCost { p } => p[i],
            WarTechnology::TwoSidedDifference { strength, .. } => {
                let s = &strength[i];
                s.h.eval(own) - s.g.eval(opp) + s.base
            }
        }
    }

    /// Citizen war cost of state `i` at its own type.
    pub fn cost(&self, i: usize, own: f64) -> f64 {
        match self {
            WarTechnology::OneSidedCost { .. } => -own,
            WarTechnology::TwoSidedDifference { costs, .. } => costs[i],
        }
    }

    /// `∂w_i/∂θ_i` for a leader with political bias `lambda`.
    pub fn leader_slope(&self, i: usize, lambda: f64, own: f64) -> f64 {
        match self {
            WarTechnology::OneSidedCost { .. } => lambda,
            WarTechnology::TwoSidedDifference { strength, .. } => strength[i].h.derivative(own),
        }
    }

    /// Kinks in the opponent's type, for quadrature breakpoints.
    pub fn opponent_kinks(&self, i: usize) -> &[f64] {
        match self {
            WarTechnology::OneSidedCost { .. } => &[],
            WarTechnology::TwoSidedDifference { strength, .. } => strength[i].g.kinks(),
        }
    }

    pub(crate) fn validate_params(
        &self,
        spaces: [(f64, f64); 2],
        errs: &mut ValidationErrors,
    ) {
        match self {
            WarTechnology::OneSidedCost { p } => {
                for (i, &pi) in p.iter().enumerate() {
                    if !(0.0..=1.0).contains(&pi) {
                        errs.push(
                            format!("war_technology.params.p[{i}]"),
                            format!("winning probability outside [0,1]: {pi}"),
                        );
                    }
                }
                if (p[0] + p[1] - 1.0).abs() > 1e-12 {
                    errs.push(
                        "war_technology.params.p",
                        format!("winning probabilities must sum to 1, got {}", p[0] + p[1]),
                    );
                }
            }
            WarTechnology::TwoSidedDifference { strength, costs } => {
                for i in 0..2 {
                    let f = format!("war_technology.params.strength[{i}]");
                    strength[i].h.validate(&format!("{f}.h"), errs);
                    strength[i].g.validate(&format!("{f}.g"), errs);
                    if !strength[i].base.is_finite() {
                        errs.push(format!("{f}.base"), "base must be finite");
                    }
                    let (lo, hi) = spaces[i];
                    if !strength[i].h.covers(lo, hi) {
                        errs.push(format!("{f}.h"), "tabulated nodes must cover the own type space");
                    }
                    let (olo, ohi) = spaces[1 - i];
                    if !strength[i].g.covers(olo, ohi) {
                        errs.push(
                            format!("{f}.g"),
                            "tabulated nodes must cover the opponent type space",
                        );
                    }
                    if !costs[i].is_finite() {
                        errs.push(format!("war_technology.params.costs[{i}]"), "cost must be finite");
                    }
                }
            }
        }
    }
}
