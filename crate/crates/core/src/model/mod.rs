//! Crisis-bargaining primitives: type spaces, beliefs, war technology,
//! political bias, leader shares and audience costs.
//!
//! A [`ModelDescription`] is the serialized form; [`ModelDescription::validate`]
//! turns it into an immutable [`CrisisModel`] or a list of field diagnostics.

mod audience;
mod distribution;
mod technology;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use audience::AudienceCostRule;
pub use distribution::{BeliefDistribution, BeliefKind, TypeSpace};
pub use technology::{Component, Strength, WarTechnology, FD_STEP};

use crate::error::{Error, Result, ValidationErrors};

/// Points per axis of the probe grid used during validation.
pub const PROBE_POINTS: usize = 64;

/// One of the two disputing states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Side {
    One,
    Two,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::One, Side::Two];

    pub fn index(self) -> usize {
        match self {
            Side::One => 0,
            Side::Two => 1,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::One => Side::Two,
            Side::Two => Side::One,
        }
    }

    pub fn from_index(i: usize) -> Side {
        if i == 0 {
            Side::One
        } else {
            Side::Two
        }
    }

    /// Orders `(own, opp)` as a `(θ₁, θ₂)` profile.
    pub fn profile(self, own: f64, opp: f64) -> [f64; 2] {
        match self {
            Side::One => [own, opp],
            Side::Two => [opp, own],
        }
    }
}

impl From<Side> for u8 {
    fn from(s: Side) -> u8 {
        s.index() as u8 + 1
    }
}

impl TryFrom<u8> for Side {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Side::One),
            2 => Ok(Side::Two),
            _ => Err(format!("state index must be 1 or 2, got {v}")),
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index() + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDescription {
    pub type_space: TypeSpace,
    pub distribution: BeliefKind,
    pub gamma: f64,
    pub lambda: f64,
    #[serde(default)]
    pub audience_cost: AudienceCostRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDescription {
    pub states: [StateDescription; 2],
    pub war_technology: WarTechnology,
}

impl ModelDescription {
    /// Uniform types on `[0, 1]`, `p₁ = 1/2 + (θ₁ − θ₂)/2`, cost `c` for both
    /// states, `γ = λ = 1`, no audience costs.
    pub fn symmetric_uniform(c: f64) -> Self {
        let state = StateDescription {
            type_space: TypeSpace::new(0.0, 1.0),
            distribution: BeliefKind::Uniform,
            gamma: 1.0,
            lambda: 1.0,
            audience_cost: AudienceCostRule::Zero,
        };
        ModelDescription {
            states: [state.clone(), state],
            war_technology: WarTechnology::symmetric_linear([c, c]),
        }
    }

    pub fn with_gamma(mut self, side: Side, gamma: f64) -> Self {
        self.states[side.index()].gamma = gamma;
        self
    }

    pub fn with_lambda(mut self, side: Side, lambda: f64) -> Self {
        self.states[side.index()].lambda = lambda;
        self
    }

    pub fn with_audience_cost(mut self, side: Side, rule: AudienceCostRule) -> Self {
        self.states[side.index()].audience_cost = rule;
        self
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn validate(&self) -> std::result::Result<CrisisModel, ValidationErrors> {
        let mut errs = ValidationErrors::default();
        for (i, s) in self.states.iter().enumerate() {
            let f = format!("states[{i}]");
            s.type_space.validate(&format!("{f}.type_space"), &mut errs);
            s.distribution.validate(&format!("{f}.distribution"), &mut errs);
            if !(s.gamma.is_finite() && (0.0..=1.0).contains(&s.gamma)) {
                errs.push(format!("{f}.gamma"), format!("gamma out of range [0,1]: {}", s.gamma));
            }
            if !(s.lambda.is_finite() && s.lambda > 0.0) {
                errs.push(format!("{f}.lambda"), format!("lambda must be > 0: {}", s.lambda));
            }
            s.audience_cost.validate(&format!("{f}.audience_cost"), &mut errs);
        }
        if !errs.is_empty() {
            return Err(errs);
        }
        let spaces = [0, 1].map(|i| (self.states[i].type_space.lo, self.states[i].type_space.hi));
        self.war_technology.validate_params(spaces, &mut errs);
        if !errs.is_empty() {
            return Err(errs);
        }

        let states = [0, 1].map(|i| {
            let s = &self.states[i];
            StateModel {
                belief: BeliefDistribution::new(s.type_space, s.distribution)
                    .expect("distribution parameters were validated"),
                gamma: s.gamma,
                lambda: s.lambda,
                audience: s.audience_cost.clone(),
            }
        });
        let model = CrisisModel {
            states,
            tech: self.war_technology.clone(),
            description: self.clone(),
        };
        model.probe(&mut errs);
        if errs.is_empty() {
            Ok(model)
        } else {
            Err(errs)
        }
    }
}

/// Validated primitives of one state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateModel {
    pub belief: BeliefDistribution,
    pub gamma: f64,
    pub lambda: f64,
    pub audience: AudienceCostRule,
}

impl StateModel {
    pub fn space(&self) -> TypeSpace {
        self.belief.space()
    }
}

/// A validated crisis-bargaining model over a unit resource. Immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct CrisisModel {
    states: [StateModel; 2],
    tech: WarTechnology,
    description: ModelDescription,
}

/// Parses and validates a model description.
pub fn validate_model(description: &ModelDescription) -> std::result::Result<CrisisModel, ValidationErrors> {
    description.validate()
}

impl CrisisModel {
    pub fn state(&self, side: Side) -> &StateModel {
        &self.states[side.index()]
    }

    pub fn technology(&self) -> &WarTechnology {
        &self.tech
    }

    pub fn description(&self) -> &ModelDescription {
        &self.description
    }

    pub fn space(&self, side: Side) -> TypeSpace {
        self.states[side.index()].space()
    }

    pub fn belief(&self, side: Side) -> &BeliefDistribution {
        &self.states[side.index()].belief
    }

    fn check_profile(&self, theta: [f64; 2]) -> Result<()> {
        self.space(Side::One).check("theta1", theta[0])?;
        self.space(Side::Two).check("theta2", theta[1])
    }

    /// Winning probability of `side` at the profile `(θ₁, θ₂)`.
    pub fn win_prob(&self, side: Side, theta: [f64; 2]) -> f64 {
        let i = side.index();
        self.tech.win_prob(i, theta[i], theta[1 - i])
    }

    /// Leader war payoff `w_i = p_i − λ_i c_i`, by own and opponent type.
    pub fn leader_war(&self, side: Side, own: f64, opp: f64) -> f64 {
        let i = side.index();
        self.tech.win_prob(i, own, opp) - self.states[i].lambda * self.tech.cost(i, own)
    }

    /// Citizen war payoff `w_i^c = p_i − c_i`, by own and opponent type.
    pub fn citizen_war(&self, side: Side, own: f64, opp: f64) -> f64 {
        let i = side.index();
        self.tech.win_prob(i, own, opp) - self.tech.cost(i, own)
    }

    /// `∂w_i/∂θ_i` for the leader.
    pub fn leader_war_slope(&self, side: Side, own: f64, opp: f64) -> Result<f64> {
        let i = side.index();
        let _ = opp;
        let d = self.tech.leader_slope(i, self.states[i].lambda, own);
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::NonDifferentiable { theta: own })
        }
    }

    /// Kinks of the war payoffs in the opponent's type.
    pub fn opponent_kinks(&self, side: Side) -> &[f64] {
        self.tech.opponent_kinks(side.index())
    }

    pub fn leader_war_payoff(&self, side: Side, theta: [f64; 2]) -> Result<f64> {
        self.check_profile(theta)?;
        let i = side.index();
        Ok(self.leader_war(side, theta[i], theta[1 - i]))
    }

    pub fn citizen_war_payoff(&self, side: Side, theta: [f64; 2]) -> Result<f64> {
        self.check_profile(theta)?;
        let i = side.index();
        Ok(self.citizen_war(side, theta[i], theta[1 - i]))
    }

    /// Leader peace payoff for share `x` reached by reporting `report`.
    pub fn leader_peace(&self, side: Side, x: f64, report: f64) -> f64 {
        self.states[side.index()].audience.leader_peace_payoff(x, report)
    }

    fn probe(&self, errs: &mut ValidationErrors) {
        let grids = Side::BOTH.map(|s| self.space(s).linspace(PROBE_POINTS));
        let mut range_bad = [false; 2];
        let mut sum_bad = false;
        let mut mono_bad = [false; 2];
        for &t1 in &grids[0] {
            for &t2 in &grids[1] {
                let p = [self.win_prob(Side::One, [t1, t2]), self.win_prob(Side::Two, [t1, t2])];
                for i in 0..2 {
                    if !range_bad[i] && !(-1e-12..=1.0 + 1e-12).contains(&p[i]) {
                        range_bad[i] = true;
                        errs.push(
                            "war_technology",
                            format!(
                                "winning probability outside [0,1]: p{}({t1}, {t2}) = {}",
                                i + 1,
                                p[i]
                            ),
                        );
                    }
                }
                if !sum_bad && (p[0] + p[1] - 1.0).abs() > 1e-9 {
                    sum_bad = true;
                    errs.push(
                        "war_technology",
                        format!("winning probabilities do not sum to 1 at ({t1}, {t2}): {}", p[0] + p[1]),
                    );
                }
            }
        }
        for side in Side::BOTH {
            let i = side.index();
            for &opp in &grids[1 - i] {
                if mono_bad[i] {
                    break;
                }
                for w in grids[i].windows(2) {
                    if self.leader_war(side, w[1], opp) <= self.leader_war(side, w[0], opp) {
                        mono_bad[i] = true;
                        errs.push(
                            format!("states[{i}]"),
                            format!(
                                "non-monotone war payoff: leader payoff does not increase from {} to {} (opponent {opp})",
                                w[0], w[1]
                            ),
                        );
                        break;
                    }
                }
            }
        }
    }
}
