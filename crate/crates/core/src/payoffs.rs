//! Interim (type-conditional) expectations of war and peace payoffs.
//!
//! Every integral runs over the opponent's belief with the adaptive Simpson
//! rule in [`crate::quadrature`]; mechanism grid nodes are passed as
//! breakpoints because tabulated outcomes are only piecewise smooth there.

use std::io;

use serde::Serialize;

use crate::error::Result;
use crate::exec::Execution;
use crate::mechanism::DirectMechanism;
use crate::model::{BeliefDistribution, CrisisModel, Side};
use crate::quadrature::DEFAULT_TOL;

/// `∫ f(θ_j) dF_j(θ_j)` to absolute tolerance `tol`.
pub fn integrate_over_opponent<F>(f: F, dist: &BeliefDistribution, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    dist.expect(f, tol, &[])
}

fn opponent(model: &CrisisModel, side: Side) -> &BeliefDistribution {
    model.belief(side.other())
}

/// Interim leader war payoff `W_i(θ_i)`.
pub fn interim_war_payoff(model: &CrisisModel, side: Side, theta: f64) -> Result<f64> {
    model.space(side).check("theta", theta)?;
    opponent(model, side).expect(
        |opp| model.leader_war(side, theta, opp),
        DEFAULT_TOL,
        model.opponent_kinks(side),
    )
}

/// Interim citizen war payoff `W_i^c(θ_i)`.
pub fn interim_citizen_war_payoff(model: &CrisisModel, side: Side, theta: f64) -> Result<f64> {
    model.space(side).check("theta", theta)?;
    opponent(model, side).expect(
        |opp| model.citizen_war(side, theta, opp),
        DEFAULT_TOL,
        model.opponent_kinks(side),
    )
}

fn breaks(model: &CrisisModel, mech: &DirectMechanism, side: Side) -> Vec<f64> {
    let mut b = mech.opponent_breaks(side).to_vec();
    b.extend_from_slice(model.opponent_kinks(side));
    b
}

/// Interim peace payoffs `(V_i(θ_i), X_i(θ_i))`: the leader's
/// audience-cost-adjusted settlement value and the raw share.
pub fn interim_peace_payoffs(
    model: &CrisisModel,
    mech: &DirectMechanism,
    side: Side,
    theta: f64,
) -> Result<(f64, f64)> {
    model.space(side).check("theta", theta)?;
    mech.check_compatible(model)?;
    let b = breaks(model, mech, side);
    let dist = opponent(model, side);
    let x = |opp: f64| mech.share(side, side.profile(theta, opp));
    let v = dist.expect(|opp| model.leader_peace(side, x(opp), theta), DEFAULT_TOL, &b)?;
    let xs = dist.expect(x, DEFAULT_TOL, &b)?;
    Ok((v, xs))
}

/// Leader peace term `(1 − π)·v` at a report profile.
pub(crate) fn peace_term(model: &CrisisModel, mech: &DirectMechanism, side: Side, report: f64, opp: f64) -> f64 {
    let profile = side.profile(report, opp);
    let peace_prob = 1.0 - mech.war_prob(profile);
    match model.state(side).audience.affine_form() {
        Some((scale, shift)) => scale * mech.peace_share(side, profile) - shift * peace_prob,
        None => peace_prob * model.leader_peace(side, mech.share(side, profile), report),
    }
}

/// `U_i(report | true_type)` at quadrature tolerance `tol`.
pub(crate) fn interim_utility(
    model: &CrisisModel,
    mech: &DirectMechanism,
    side: Side,
    report: f64,
    true_type: f64,
    tol: f64,
) -> Result<f64> {
    let space = model.space(side);
    space.check("report", report)?;
    space.check("true_type", true_type)?;
    mech.check_compatible(model)?;
    let b = breaks(model, mech, side);
    opponent(model, side).expect(
        |opp| {
            let pi = mech.war_prob(side.profile(report, opp));
            pi * model.leader_war(side, true_type, opp) + peace_term(model, mech, side, report, opp)
        },
        tol,
        &b,
    )
}

/// `U_i(θ_i)`, the interim utility of truthful reporting.
pub fn interim_utility_truthful(model: &CrisisModel, mech: &DirectMechanism, side: Side, theta: f64) -> Result<f64> {
    interim_utility(model, mech, side, theta, theta, DEFAULT_TOL)
}

/// Citizens' interim utility `∫ [π w^c + (1 − π) x] dF_j` under truthful reports.
pub fn interim_citizen_utility(model: &CrisisModel, mech: &DirectMechanism, side: Side, theta: f64) -> Result<f64> {
    model.space(side).check("theta", theta)?;
    mech.check_compatible(model)?;
    let b = breaks(model, mech, side);
    opponent(model, side).expect(
        |opp| {
            let profile = side.profile(theta, opp);
            mech.war_prob(profile) * model.citizen_war(side, theta, opp) + mech.peace_share(side, profile)
        },
        DEFAULT_TOL,
        &b,
    )
}

/// Interim war propensity `E_j[π(θ_i, θ_j)]`.
pub fn interim_war_propensity(model: &CrisisModel, mech: &DirectMechanism, side: Side, theta: f64) -> Result<f64> {
    model.space(side).check("theta", theta)?;
    mech.check_compatible(model)?;
    opponent(model, side).expect(
        |opp| mech.war_prob(side.profile(theta, opp)),
        DEFAULT_TOL,
        mech.opponent_breaks(side),
    )
}

/// Per-type interim values of one state, tabulated on the mechanism's grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterimProfile {
    pub state: Side,
    pub theta: Vec<f64>,
    #[serde(rename = "W")]
    pub war: Vec<f64>,
    #[serde(rename = "Wc")]
    pub citizen_war: Vec<f64>,
    #[serde(rename = "V")]
    pub peace: Vec<f64>,
    #[serde(rename = "X")]
    pub share: Vec<f64>,
    #[serde(rename = "U")]
    pub utility: Vec<f64>,
}

impl InterimProfile {
    pub fn tabulate(model: &CrisisModel, mech: &DirectMechanism, side: Side, exec: Execution) -> Result<Self> {
        mech.check_compatible(model)?;
        let theta = mech.grid(side).to_vec();
        let rows = exec.try_map(theta.len(), |k| {
            let t = theta[k];
            let (v, x) = interim_peace_payoffs(model, mech, side, t)?;
            Ok::<_, crate::error::Error>([
                interim_war_payoff(model, side, t)?,
                interim_citizen_war_payoff(model, side, t)?,
                v,
                x,
                interim_utility_truthful(model, mech, side, t)?,
            ])
        })?;
        let col = |c: usize| rows.iter().map(|r| r[c]).collect::<Vec<_>>();
        Ok(InterimProfile {
            state: side,
            war: col(0),
            citizen_war: col(1),
            peace: col(2),
            share: col(3),
            utility: col(4),
            theta,
        })
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Writes `theta,W,Wc,V,X,U` rows.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["theta", "W", "Wc", "V", "X", "U"])?;
        for k in 0..self.len() {
            w.write_record(
                [
                    self.theta[k],
                    self.war[k],
                    self.citizen_war[k],
                    self.peace[k],
                    self.share[k],
                    self.utility[k],
                ]
                .map(crate::fmt_sig),
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AudienceCostRule, ModelDescription};

    fn canon(c: f64) -> CrisisModel {
        ModelDescription::symmetric_uniform(c).validate().unwrap()
    }

    #[test]
    fn closed_form_interim_war() {
        let m = canon(0.2);
        for &t in &[0.0, 0.25, 0.5, 1.0] {
            let w = interim_war_payoff(&m, Side::One, t).unwrap();
            assert!((w - (0.25 + t / 2.0 - 0.2)).abs() < 1e-12);
        }
        assert!(interim_war_payoff(&m, Side::One, 1.5).is_err());
    }

    #[test]
    fn bias_separates_leader_and_citizen() {
        let m = ModelDescription::symmetric_uniform(0.2)
            .with_lambda(Side::One, 2.0)
            .validate()
            .unwrap();
        assert!((interim_war_payoff(&m, Side::One, 1.0).unwrap() - 0.35).abs() < 1e-12);
        assert!((interim_citizen_war_payoff(&m, Side::One, 1.0).unwrap() - 0.55).abs() < 1e-12);
    }

    #[test]
    fn peace_payoffs_with_audience_cost() {
        let m = ModelDescription::symmetric_uniform(0.2)
            .with_audience_cost(
                Side::One,
                AudienceCostRule::Affine {
                    slope: 0.0,
                    intercept: 0.1,
                },
            )
            .validate()
            .unwrap();
        let mech = DirectMechanism::constant(&m, [5, 5], 0.0, [0.5, 0.5]).unwrap();
        let (v, x) = interim_peace_payoffs(&m, &mech, Side::One, 0.3).unwrap();
        assert!((v - 0.4).abs() < 1e-12 && (x - 0.5).abs() < 1e-12);
    }

    #[test]
    fn profile_csv_header() {
        let m = canon(0.3);
        let mech = DirectMechanism::constant(&m, [3, 3], 0.0, [0.5, 0.5]).unwrap();
        let p = InterimProfile::tabulate(&m, &mech, Side::Two, Execution::Sequential).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("theta,W,Wc,V,X,U\n"));
        assert_eq!(text.lines().count(), 4);
        assert_eq!(p.peace, p.share);
    }
}
