//! Peace plausibility, the constructive peaceful settlement, the region of
//! near-strongest type pairs that cannot be pacified, and the monotone war
//! propensity diagnostic.

use std::io;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mechanism::{DirectMechanism, MarginalDrop};
use crate::model::{CrisisModel, Side};
use crate::payoffs::{
    interim_citizen_war_payoff, interim_peace_payoffs, interim_utility_truthful, interim_war_payoff,
    interim_war_propensity,
};

/// Slack on the weak inequality `lhs ≤ 1`.
pub const PLAUSIBILITY_TOL: f64 = 1e-10;
/// Slack on monotone interim war propensity.
pub const PROPENSITY_SLACK: f64 = 1e-8;
/// Minimum cells per axis for the war-region tabulation.
pub const MIN_REGION_GRID: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateDemand {
    /// `W_i(θ̄_i)`.
    pub leader_war: f64,
    /// `W_i^c(θ̄_i)`.
    pub citizen_war: f64,
    /// `γ_i W_i(θ̄_i)`.
    pub leader_term: f64,
    /// `(1 − γ_i) W_i^c(θ̄_i)`.
    pub citizen_term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlausibilityReport {
    /// `Σ_i γ_i W_i(θ̄_i) + (1 − γ_i) W_i^c(θ̄_i)`.
    pub lhs: f64,
    pub plausible: bool,
    /// `lhs` equals one to within [`PLAUSIBILITY_TOL`].
    pub boundary: bool,
    pub per_state: [StateDemand; 2],
    /// `R_i(θ̄_i)` of a candidate peaceful mechanism, when one was priced.
    pub price_of_peace: Option<[f64; 2]>,
}

impl PlausibilityReport {
    pub fn verdict(&self) -> &'static str {
        match (self.plausible, self.boundary) {
            (false, _) => "implausible",
            (true, true) => "plausible (boundary)",
            (true, false) => "plausible",
        }
    }
}

pub fn peace_plausibility(model: &CrisisModel) -> Result<PlausibilityReport> {
    let per_state = Side::BOTH.map(|side| -> Result<StateDemand> {
        let top = model.space(side).hi;
        let gamma = model.state(side).gamma;
        let leader_war = interim_war_payoff(model, side, top)?;
        let citizen_war = interim_citizen_war_payoff(model, side, top)?;
        Ok(StateDemand {
            leader_war,
            citizen_war,
            leader_term: gamma * leader_war,
            citizen_term: (1.0 - gamma) * citizen_war,
        })
    });
    let [a, b] = per_state;
    let per_state = [a?, b?];
    let lhs: f64 = per_state.iter().map(|d| d.leader_term + d.citizen_term).sum();
    Ok(PlausibilityReport {
        lhs,
        plausible: lhs <= 1.0 + PLAUSIBILITY_TOL,
        boundary: (lhs - 1.0).abs() <= PLAUSIBILITY_TOL,
        per_state,
        price_of_peace: None,
    })
}

/// `R_i = γ_i V̄_i + (1 − γ_i) X_i`.
pub fn price_of_peace(model: &CrisisModel, side: Side, leader_payoff: f64, citizen_share: f64) -> f64 {
    let gamma = model.state(side).gamma;
    gamma * leader_payoff + (1.0 - gamma) * citizen_share
}

/// Prices the strongest types of both states under a peaceful mechanism.
pub fn price_mechanism(model: &CrisisModel, mech: &DirectMechanism) -> Result<[f64; 2]> {
    let r = Side::BOTH.map(|side| {
        let top = model.space(side).hi;
        interim_peace_payoffs(model, mech, side, top).map(|(v, x)| price_of_peace(model, side, v, x))
    });
    let [a, b] = r;
    Ok([a?, b?])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfeasibilityCertificate {
    pub report: PlausibilityReport,
    /// `max(W_i(θ̄_i), W_i^c(θ̄_i))` per state.
    pub demands: [f64; 2],
    pub total_demand: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Construction {
    Peaceful {
        mechanism: DirectMechanism,
        demands: [f64; 2],
        settlement: [f64; 2],
    },
    Infeasible(InfeasibilityCertificate),
}

impl Construction {
    pub fn mechanism(&self) -> Option<&DirectMechanism> {
        match self {
            Construction::Peaceful { mechanism, .. } => Some(mechanism),
            Construction::Infeasible(_) => None,
        }
    }
}

/// Constant peaceful menu paying each state the larger of its leaders' and
/// citizens' strongest-type war payoff, with leftover split evenly.
pub fn construct_peaceful_settlement(model: &CrisisModel, grid: usize) -> Result<Construction> {
    if grid < 2 {
        return Err(Error::Precondition(format!("grid must have at least 2 nodes, got {grid}")));
    }
    let report = peace_plausibility(model)?;
    let demands = [0, 1].map(|i| {
        let d = report.per_state[i];
        d.leader_war.max(d.citizen_war)
    });
    let total: f64 = demands.iter().sum();
    if total > 1.0 + PLAUSIBILITY_TOL {
        return Ok(Construction::Infeasible(InfeasibilityCertificate {
            report,
            demands,
            total_demand: total,
        }));
    }
    let surplus = (1.0 - total).max(0.0);
    let mut settlement = demands.map(|d| d + surplus / 2.0);
    // Keep the node sum inside the simplex after rounding.
    let excess = settlement[0] + settlement[1] - 1.0;
    if excess > 0.0 {
        settlement[1] -= excess;
    }
    let mechanism = DirectMechanism::constant(model, [grid, grid], 0.0, settlement)
        .map_err(Error::Invalid)?;
    Ok(Construction::Peaceful {
        mechanism,
        demands,
        settlement,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WarRegionReport {
    /// Cell midpoints per state.
    pub theta: [Vec<f64>; 2],
    /// `indicator[k][l]` for the cell at `(theta[0][k], theta[1][l])`.
    pub indicator: Vec<Vec<bool>>,
    pub mass: f64,
    pub cells: usize,
}

impl WarRegionReport {
    /// Writes `theta1,theta2,indicator` rows.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["theta1", "theta2", "indicator"])?;
        for (k, row) in self.indicator.iter().enumerate() {
            for (l, &flag) in row.iter().enumerate() {
                w.write_record([
                    crate::fmt_sig(self.theta[0][k]),
                    crate::fmt_sig(self.theta[1][l]),
                    (flag as u8).to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Type pairs whose weighted interim demands exceed the unit resource, on a
/// `cells × cells` partition, with their probability under the product
/// belief (midpoint rule).
pub fn war_region(model: &CrisisModel, cells: usize, exec: Execution) -> Result<WarRegionReport> {
    if cells < MIN_REGION_GRID {
        return Err(Error::Precondition(format!(
            "war region grid must have at least {MIN_REGION_GRID} cells per axis, got {cells}"
        )));
    }
    let mut theta = [Vec::new(), Vec::new()];
    let mut demand = [Vec::new(), Vec::new()];
    let mut mass = [Vec::new(), Vec::new()];
    for side in Side::BOTH {
        let edges = model.space(side).linspace(cells + 1);
        let mids: Vec<f64> = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let gamma = model.state(side).gamma;
        let d = exec.try_map(cells, |k| {
            let t = mids[k];
            Ok::<_, Error>(
                gamma * interim_war_payoff(model, side, t)?
                    + (1.0 - gamma) * interim_citizen_war_payoff(model, side, t)?,
            )
        })?;
        let belief = model.belief(side);
        mass[side.index()] = edges.windows(2).map(|w| belief.mass(w[0], w[1])).collect();
        demand[side.index()] = d;
        theta[side.index()] = mids;
    }
    let indicator: Vec<Vec<bool>> = demand[0]
        .iter()
        .map(|&a| demand[1].iter().map(|&b| a + b > 1.0).collect())
        .collect();
    let total = indicator
        .iter()
        .enumerate()
        .map(|(k, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &f)| f)
                .map(|(l, _)| mass[0][k] * mass[1][l])
                .sum::<f64>()
        })
        .sum::<f64>();
    Ok(WarRegionReport {
        theta,
        indicator,
        // An empty float sum is -0.0; adding +0.0 normalizes it.
        mass: (total + 0.0).clamp(0.0, 1.0),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropensityReport {
    /// `E_j[π(θ_i, θ_j)]` at each grid node, per state.
    pub propensity: [Vec<f64>; 2],
    pub monotone: bool,
    pub worst_pair: Option<MarginalDrop>,
    pub slack: f64,
}

/// Checks that interim war propensity is nondecreasing in own type. Both
/// supported technologies put the leader's war payoff in own-type
/// difference form `h(θ_i) − g(θ_j)`, which is the hypothesis under which
/// incentive compatibility forces this monotonicity.
pub fn check_monotone_war_propensity(
    model: &CrisisModel,
    mech: &DirectMechanism,
    exec: Execution,
) -> Result<PropensityReport> {
    mech.check_compatible(model)?;
    let mut propensity = [Vec::new(), Vec::new()];
    let mut worst: Option<MarginalDrop> = None;
    for side in Side::BOTH {
        let grid = mech.grid(side);
        let p = exec.try_map(grid.len(), |k| interim_war_propensity(model, mech, side, grid[k]))?;
        for k in 1..p.len() {
            let drop = p[k - 1] - p[k];
            if drop > 0.0 && drop > worst.map_or(0.0, |w| w.drop) {
                worst = Some(MarginalDrop {
                    state: side,
                    lower: grid[k - 1],
                    upper: grid[k],
                    drop,
                });
            }
        }
        propensity[side.index()] = p;
    }
    Ok(PropensityReport {
        propensity,
        monotone: worst.is_none_or(|w| w.drop <= PROPENSITY_SLACK),
        worst_pair: worst,
        slack: PROPENSITY_SLACK,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UtilityIncrease {
    pub state: Side,
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
}

/// Largest increase of truthful interim utility between two grid types of
/// the same state (`θ < θ'`, `U(θ') − U(θ)`).
pub fn largest_utility_increase(
    model: &CrisisModel,
    mech: &DirectMechanism,
    exec: Execution,
) -> Result<UtilityIncrease> {
    let mut best: Option<UtilityIncrease> = None;
    for side in Side::BOTH {
        let grid = mech.grid(side);
        let u = exec.try_map(grid.len(), |k| interim_utility_truthful(model, mech, side, grid[k]))?;
        let mut low = 0;
        for k in 1..u.len() {
            if u[k - 1] < u[low] {
                low = k - 1;
            }
            let gap = u[k] - u[low];
            if best.is_none_or(|b| gap > b.gap) {
                best = Some(UtilityIncrease {
                    state: side,
                    lower: grid[low],
                    upper: grid[k],
                    gap,
                });
            }
        }
    }
    Ok(best.expect("grids have at least two nodes"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelDescription;

    fn canon(c: f64) -> CrisisModel {
        ModelDescription::symmetric_uniform(c).validate().unwrap()
    }

    #[test]
    fn plausibility_threshold() {
        let r = peace_plausibility(&canon(0.2)).unwrap();
        assert!((r.lhs - 1.1).abs() < 1e-10 && !r.plausible);
        let r = peace_plausibility(&canon(0.3)).unwrap();
        assert!((r.lhs - 0.9).abs() < 1e-10 && r.plausible && !r.boundary);
        let r = peace_plausibility(&canon(0.25)).unwrap();
        assert!(r.plausible && r.boundary);
    }

    #[test]
    fn bias_enlarges_scope_of_peace() {
        let m = ModelDescription::symmetric_uniform(0.2)
            .with_gamma(Side::One, 0.5)
            .with_gamma(Side::Two, 0.5)
            .with_lambda(Side::One, 2.0)
            .with_lambda(Side::Two, 2.0)
            .validate()
            .unwrap();
        let r = peace_plausibility(&m).unwrap();
        assert!((r.per_state[0].leader_term + r.per_state[0].citizen_term - 0.45).abs() < 1e-10);
        assert!((r.lhs - 0.9).abs() < 1e-10 && r.plausible);
    }

    #[test]
    fn construction_splits_surplus() {
        match construct_peaceful_settlement(&canon(0.3), 5).unwrap() {
            Construction::Peaceful { demands, settlement, .. } => {
                assert!((demands[0] - 0.45).abs() < 1e-10);
                assert!((settlement[0] - 0.5).abs() < 1e-10 && (settlement[1] - 0.5).abs() < 1e-10);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn citizen_demand_binds_under_bias() {
        let m = ModelDescription::symmetric_uniform(0.2)
            .with_lambda(Side::One, 2.0)
            .with_lambda(Side::Two, 2.0)
            .validate()
            .unwrap();
        let report = peace_plausibility(&m).unwrap();
        assert!((report.lhs - 0.7).abs() < 1e-10 && report.plausible);
        match construct_peaceful_settlement(&m, 3).unwrap() {
            Construction::Infeasible(cert) => {
                assert!((cert.demands[0] - 0.55).abs() < 1e-10);
                assert!((cert.total_demand - 1.1).abs() < 1e-10);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn small_war_region_grid_is_rejected() {
        assert!(war_region(&canon(0.2), 8, Execution::Sequential).is_err());
    }
}
