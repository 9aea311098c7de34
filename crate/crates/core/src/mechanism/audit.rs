use serde::Serialize;

use super::DirectMechanism;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{CrisisModel, Side};
use crate::payoffs::{
    interim_citizen_utility, interim_citizen_war_payoff, interim_peace_payoffs, interim_war_payoff, peace_term,
};
use crate::quadrature::DEFAULT_TOL;

/// Report-grid refinement factor of the deviation scan.
pub const DEVIATION_REFINEMENT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditTolerances {
    /// Largest admissible gain from misreporting.
    pub ic_gain: f64,
    /// Envelope residual; looser because it stacks two quadratures.
    pub envelope: f64,
    /// Participation slack.
    pub ir: f64,
    /// Node-level tolerance for the simplex and for "π ≡ 0".
    pub feasibility: f64,
}

impl Default for AuditTolerances {
    fn default() -> Self {
        AuditTolerances {
            ic_gain: 1e-6,
            envelope: 1e-4,
            ir: 1e-8,
            feasibility: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditOptions {
    pub tol: AuditTolerances,
    /// Deviation grid refinement relative to the mechanism grid.
    pub refinement: usize,
    pub exec: Execution,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            tol: AuditTolerances::default(),
            refinement: DEVIATION_REFINEMENT,
            exec: Execution::default(),
        }
    }
}

impl AuditOptions {
    pub fn deviation_grid_size(&self, mech: &DirectMechanism) -> usize {
        let n = mech.size(Side::One).max(mech.size(Side::Two));
        (n - 1) * self.refinement.max(1) + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IcWitness {
    pub state: Side,
    pub true_type: f64,
    pub report: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IcReport {
    pub max_gain: f64,
    /// `None` when no report beats truth-telling.
    pub witness: Option<IcWitness>,
    pub max_gain_by_state: [f64; 2],
    pub deviation_grid_size: usize,
    pub tol: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginalDrop {
    pub state: Side,
    pub lower: f64,
    pub upper: f64,
    pub drop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub max_residual: f64,
    pub residual_state: Side,
    pub residual_theta: f64,
    pub marginal_monotone: bool,
    /// Largest decrease of the war-weighted marginal between adjacent nodes.
    pub worst_pair: Option<MarginalDrop>,
    pub tol: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlackWitness {
    pub slack: f64,
    pub state: Side,
    pub theta: f64,
}

impl SlackWitness {
    fn worst(a: Option<SlackWitness>, b: SlackWitness) -> Option<SlackWitness> {
        match a {
            Some(a) if a.slack <= b.slack => Some(a),
            _ => Some(b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParticipationReport {
    /// `true` when the mechanism is peaceful and the peace-payoff forms of
    /// the constraints (`V ≥ W`, `X ≥ W^c`) are operative; otherwise the
    /// interim-utility forms (`U ≥ W`, `U^c ≥ W^c`) are.
    pub peace_form: bool,
    pub leader_worst: SlackWitness,
    pub citizen_worst: SlackWitness,
    /// `min V − W` whatever the mechanism.
    pub leader_peace_payoff_worst: SlackWitness,
    /// `min X − W^c` whatever the mechanism.
    pub citizen_share_worst: SlackWitness,
    /// War is certain at every node, so settlements are never reached.
    pub citizen_vacuous: bool,
    pub tol: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// Largest violation of `x ≥ 0` or `x₁ + x₂ ≤ 1` over nodes.
    pub worst_violation: f64,
    pub peaceful: bool,
    pub max_war_prob: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub ic: IcReport,
    pub envelope: EnvelopeReport,
    pub participation: ParticipationReport,
    pub feasibility: FeasibilityReport,
    pub tolerances: AuditTolerances,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantPayoffReport {
    pub spread: [f64; 2],
    pub tol: f64,
    pub passed: bool,
}

/// Scans every report on an evenly spaced deviation grid for every true type
/// node and records the largest gain over truth-telling.
pub fn check_incentive_compatibility(
    model: &CrisisModel,
    mech: &DirectMechanism,
    deviation_grid_size: usize,
    tol: f64,
    exec: Execution,
) -> Result<IcReport> {
    mech.check_compatible(model)?;
    let n_max = mech.size(Side::One).max(mech.size(Side::Two));
    if deviation_grid_size < n_max {
        return Err(Error::Precondition(format!(
            "deviation grid size {deviation_grid_size} is smaller than the mechanism grid ({n_max})"
        )));
    }

    let reports = Side::BOTH.map(|s| mech.report_grid(s, deviation_grid_size));
    // Peace value of each report does not depend on the true type.
    let peace_values = |side: Side| {
        exec.try_map(reports[side.index()].len(), |r| {
            let report = reports[side.index()][r];
            model.belief(side.other()).expect(
                |opp| peace_term(model, mech, side, report, opp),
                DEFAULT_TOL,
                mech.opponent_breaks(side),
            )
        })
    };
    let peace = [peace_values(Side::One)?, peace_values(Side::Two)?];

    let jobs: Vec<(Side, usize)> = Side::BOTH
        .iter()
        .flat_map(|&s| (0..mech.size(s)).map(move |k| (s, k)))
        .collect();
    let results = exec.try_map(jobs.len(), |j| {
        let (side, k) = jobs[j];
        let truth = mech.grid(side)[k];
        let dist = model.belief(side.other());
        let war_value = |report: f64| {
            dist.expect(
                |opp| mech.war_prob(side.profile(report, opp)) * model.leader_war(side, truth, opp),
                DEFAULT_TOL,
                mech.opponent_breaks(side),
            )
        };
        let truthful = war_value(truth)?
            + dist.expect(
                |opp| peace_term(model, mech, side, truth, opp),
                DEFAULT_TOL,
                mech.opponent_breaks(side),
            )?;
        let mut best = IcWitness {
            state: side,
            true_type: truth,
            report: truth,
            gain: 0.0,
        };
        for (r, &report) in reports[side.index()].iter().enumerate() {
            let gain = war_value(report)? + peace[side.index()][r] - truthful;
            if gain > best.gain {
                best = IcWitness { report, gain, ..best };
            }
        }
        Ok::<_, Error>(best)
    })?;

    let mut by_state = [0.0f64; 2];
    let mut witness: Option<IcWitness> = None;
    for w in results {
        let i = w.state.index();
        by_state[i] = by_state[i].max(w.gain);
        if w.gain > witness.map_or(0.0, |b| b.gain) {
            witness = Some(w);
        }
    }
    let max_gain = by_state[0].max(by_state[1]);
    Ok(IcReport {
        max_gain,
        witness,
        max_gain_by_state: by_state,
        deviation_grid_size,
        tol,
        passed: max_gain <= tol,
    })
}

/// Integral identity between truthful utility and the war-weighted marginal
/// war payoff, plus monotonicity of that marginal, at every grid node.
pub fn check_envelope_condition(
    model: &CrisisModel,
    mech: &DirectMechanism,
    tol: f64,
    exec: Execution,
) -> Result<EnvelopeReport> {
    mech.check_compatible(model)?;
    let mut max_residual = 0.0f64;
    let mut residual_state = Side::One;
    let mut residual_theta = mech.grid(Side::One)[0];
    let mut worst_pair: Option<MarginalDrop> = None;
    let mut monotone = true;

    for side in Side::BOTH {
        let grid = mech.grid(side);
        let dist = model.belief(side.other());
        let rows = exec.try_map(grid.len(), |k| {
            let t = grid[k];
            let slope_err = std::cell::Cell::new(None);
            let marginal = dist.expect(
                |opp| {
                    let pi = mech.war_prob(side.profile(t, opp));
                    match model.leader_war_slope(side, t, opp) {
                        Ok(d) => pi * d,
                        Err(_) => {
                            slope_err.set(Some(t));
                            0.0
                        }
                    }
                },
                DEFAULT_TOL,
                mech.opponent_breaks(side),
            )?;
            if let Some(theta) = slope_err.get() {
                return Err(Error::NonDifferentiable { theta });
            }
            let u = crate::payoffs::interim_utility_truthful(model, mech, side, t)?;
            Ok::<_, Error>((marginal, u))
        })?;

        let mut accumulated = 0.0;
        for k in 0..grid.len() {
            if k > 0 {
                accumulated += 0.5 * (rows[k - 1].0 + rows[k].0) * (grid[k] - grid[k - 1]);
                let drop = rows[k - 1].0 - rows[k].0;
                if drop > tol {
                    monotone = false;
                }
                if drop > 0.0 && drop > worst_pair.map_or(0.0, |w| w.drop) {
                    worst_pair = Some(MarginalDrop {
                        state: side,
                        lower: grid[k - 1],
                        upper: grid[k],
                        drop,
                    });
                }
            }
            let residual = (rows[k].1 - rows[0].1 - accumulated).abs();
            if residual > max_residual {
                max_residual = residual;
                residual_state = side;
                residual_theta = grid[k];
            }
        }
    }

    Ok(EnvelopeReport {
        max_residual,
        residual_state,
        residual_theta,
        marginal_monotone: monotone,
        worst_pair,
        tol,
        passed: max_residual <= tol && monotone,
    })
}

/// Leader and citizen interim participation at every grid node.
pub fn check_participation(
    model: &CrisisModel,
    mech: &DirectMechanism,
    tol: f64,
    exec: Execution,
) -> Result<ParticipationReport> {
    mech.check_compatible(model)?;
    let node_tol = AuditTolerances::default().feasibility;
    let peaceful = mech.max_war_prob() <= node_tol;
    let vacuous = mech.min_war_prob() >= 1.0 - node_tol;

    let mut leader = None;
    let mut citizen = None;
    let mut leader_peace = None;
    let mut citizen_share = None;
    for side in Side::BOTH {
        let grid = mech.grid(side);
        let rows = exec.try_map(grid.len(), |k| {
            let t = grid[k];
            let w = interim_war_payoff(model, side, t)?;
            let wc = interim_citizen_war_payoff(model, side, t)?;
            let (v, x) = interim_peace_payoffs(model, mech, side, t)?;
            let u = crate::payoffs::interim_utility_truthful(model, mech, side, t)?;
            let uc = interim_citizen_utility(model, mech, side, t)?;
            Ok::<_, Error>((w, wc, v, x, u, uc))
        })?;
        for (k, &(w, wc, v, x, u, uc)) in rows.iter().enumerate() {
            let at = |slack| SlackWitness {
                slack,
                state: side,
                theta: grid[k],
            };
            leader_peace = SlackWitness::worst(leader_peace, at(v - w));
            citizen_share = SlackWitness::worst(citizen_share, at(x - wc));
            if peaceful {
                leader = SlackWitness::worst(leader, at(v - w));
                citizen = SlackWitness::worst(citizen, at(x - wc));
            } else {
                leader = SlackWitness::worst(leader, at(u - w));
                citizen = SlackWitness::worst(citizen, at(uc - wc));
            }
        }
    }
    let leader = leader.expect("grids are non-empty");
    let citizen = citizen.expect("grids are non-empty");
    Ok(ParticipationReport {
        peace_form: peaceful,
        leader_worst: leader,
        citizen_worst: citizen,
        leader_peace_payoff_worst: leader_peace.expect("grids are non-empty"),
        citizen_share_worst: citizen_share.expect("grids are non-empty"),
        citizen_vacuous: vacuous,
        tol,
        passed: leader.slack >= -tol && citizen.slack >= -tol,
    })
}

/// Node-level simplex check on shares and the peacefulness test `max π ≤ tol`.
pub fn check_feasibility_and_peace(mech: &DirectMechanism, tol: f64) -> FeasibilityReport {
    let mut worst = 0.0f64;
    for (k, l) in mech.nodes() {
        let x1 = mech.share_node(Side::One, k, l);
        let x2 = mech.share_node(Side::Two, k, l);
        worst = worst.max(-x1).max(-x2).max(x1 + x2 - 1.0);
    }
    let max_pi = mech.max_war_prob();
    FeasibilityReport {
        feasible: worst <= tol,
        worst_violation: worst.max(0.0),
        peaceful: max_pi <= tol,
        max_war_prob: max_pi,
        tol,
    }
}

/// Spread of the leader's interim peace payoff across grid types, for a
/// mechanism already known to be peaceful and incentive compatible.
pub fn check_constant_peace_payoff(
    model: &CrisisModel,
    mech: &DirectMechanism,
    tol: f64,
    options: &AuditOptions,
) -> Result<ConstantPayoffReport> {
    let feas = check_feasibility_and_peace(mech, options.tol.feasibility);
    if !feas.peaceful {
        return Err(Error::Precondition(format!(
            "mechanism is not peaceful (max war probability {})",
            feas.max_war_prob
        )));
    }
    let ic = check_incentive_compatibility(
        model,
        mech,
        options.deviation_grid_size(mech),
        options.tol.ic_gain,
        options.exec,
    )?;
    if !ic.passed {
        return Err(Error::Precondition(format!(
            "mechanism is not incentive compatible (gain {:e})",
            ic.max_gain
        )));
    }
    let mut spread = [0.0; 2];
    for side in Side::BOTH {
        let grid = mech.grid(side);
        let v = options
            .exec
            .try_map(grid.len(), |k| interim_peace_payoffs(model, mech, side, grid[k]).map(|p| p.0))?;
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        spread[side.index()] = hi - lo;
    }
    Ok(ConstantPayoffReport {
        spread,
        tol,
        passed: spread.iter().all(|&s| s <= tol),
    })
}

/// Runs every check with `options`.
pub fn audit(model: &CrisisModel, mech: &DirectMechanism, options: &AuditOptions) -> Result<AuditReport> {
    let tol = options.tol;
    let ic = check_incentive_compatibility(model, mech, options.deviation_grid_size(mech), tol.ic_gain, options.exec)?;
    let envelope = check_envelope_condition(model, mech, tol.envelope, options.exec)?;
    let participation = check_participation(model, mech, tol.ir, options.exec)?;
    let feasibility = check_feasibility_and_peace(mech, tol.feasibility);
    let passed = ic.passed && envelope.passed && participation.passed && feasibility.feasible;
    Ok(AuditReport {
        ic,
        envelope,
        participation,
        feasibility,
        tolerances: tol,
        passed,
    })
}
