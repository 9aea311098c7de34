//! Least war-prone discretized mechanism by linear programming.
//!
//! Each node `(k, l)` of an `n₁ × n₂` grid carries the war probability
//! `π` and the unconditional peace shares `zᵢ = (1 − π)·xᵢ`. In these
//! variables every constraint is linear: a report's interim utility is
//! `Σ_l π(k, l)·φ(t, l) + Σ_l zᵢ(k, l)·q_l`, where `q_l` is the belief mass
//! of the piecewise-linear hat at opponent node `l` and `φ(t, l)` is the
//! hat-weighted war payoff. These are exactly the integrals the audit
//! evaluates on the interpolated mechanism, so node constraints and audit
//! agree up to quadrature error.

use log::debug;
use serde::Serialize;

use crate::analysis::{largest_utility_increase, UtilityIncrease};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::lp::{LinearProgram, LpError, Relation};
use crate::mechanism::{check_feasibility_and_peace, check_incentive_compatibility, AuditOptions, DirectMechanism, IcReport};
use crate::model::{BeliefDistribution, CrisisModel, Side};

/// Quadrature tolerance of the hat integrals.
const COEFF_TOL: f64 = 1e-12;
/// Node values this close to a bound are snapped onto it; simplex
/// round-off is of this order.
const SNAP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RowKind {
    Ic { state: Side, truth: usize, report: usize },
    LeaderIr { state: Side, node: usize },
    CitizenIr { state: Side, node: usize },
    Budget { k: usize, l: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConstraintCounts {
    pub ic: usize,
    pub ir: usize,
    /// Nonnegativity of every variable.
    pub bounds: usize,
    /// `π + z₁ + z₂ ≤ 1` (or `= 1`) per node.
    pub budget: usize,
    pub variables: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ProgramOptions {
    /// Forbid money burning: `π + z₁ + z₂ = 1` at every node.
    pub strict_balance: bool,
    pub exec: Execution,
}

#[derive(Debug, Clone)]
pub struct GridProgram {
    model: CrisisModel,
    grids: [Vec<f64>; 2],
    weights: [Vec<f64>; 2],
    lp: LinearProgram,
    kinds: Vec<RowKind>,
    options: ProgramOptions,
}

/// `∫ hat_l dF` for every node of `grid`.
fn hat_masses(belief: &BeliefDistribution, grid: &[f64]) -> Result<Vec<f64>> {
    (0..grid.len())
        .map(|l| belief.expect(|t| hat(grid, l, t), COEFF_TOL, grid))
        .collect()
}

fn hat(grid: &[f64], l: usize, t: f64) -> f64 {
    let n = grid.len();
    if l > 0 && t >= grid[l - 1] && t <= grid[l] {
        return (t - grid[l - 1]) / (grid[l] - grid[l - 1]);
    }
    if l + 1 < n && t >= grid[l] && t <= grid[l + 1] {
        return (grid[l + 1] - t) / (grid[l + 1] - grid[l]);
    }
    0.0
}

impl GridProgram {
    pub fn model(&self) -> &CrisisModel {
        &self.model
    }

    pub fn grid(&self, side: Side) -> &[f64] {
        &self.grids[side.index()]
    }

    /// Belief mass attached to each node; sums to one per state.
    pub fn weights(&self, side: Side) -> &[f64] {
        &self.weights[side.index()]
    }

    pub fn lp(&self) -> &LinearProgram {
        &self.lp
    }

    pub fn row_kinds(&self) -> &[RowKind] {
        &self.kinds
    }

    pub fn options(&self) -> ProgramOptions {
        self.options
    }

    pub fn counts(&self) -> ConstraintCounts {
        let mut c = ConstraintCounts {
            ic: 0,
            ir: 0,
            bounds: self.lp.n_vars(),
            budget: 0,
            variables: self.lp.n_vars(),
        };
        for kind in &self.kinds {
            match kind {
                RowKind::Ic { .. } => c.ic += 1,
                RowKind::LeaderIr { .. } | RowKind::CitizenIr { .. } => c.ir += 1,
                RowKind::Budget { .. } => c.budget += 1,
            }
        }
        c
    }

    fn n(&self) -> [usize; 2] {
        [self.grids[0].len(), self.grids[1].len()]
    }

    /// Column of `π` at node `(k, l)`; `z₁`, `z₂` follow it.
    pub fn var(&self, k: usize, l: usize) -> usize {
        3 * (k * self.grids[1].len() + l)
    }
}

pub fn build_program(model: &CrisisModel, n1: usize, n2: usize) -> Result<GridProgram> {
    build_program_with(model, n1, n2, ProgramOptions::default())
}

pub fn build_program_with(model: &CrisisModel, n1: usize, n2: usize, options: ProgramOptions) -> Result<GridProgram> {
    if n1 < 2 || n2 < 2 {
        return Err(Error::Precondition(format!("grid must have at least 2 nodes per state, got ({n1}, {n2})")));
    }
    if !model.state(Side::One).audience.is_zero() || !model.state(Side::Two).audience.is_zero() {
        debug!("audience costs are ignored by the program and only audited afterwards");
    }
    let n = [n1, n2];
    let grids = Side::BOTH.map(|s| model.space(s).linspace(n[s.index()]));
    let weights = [
        hat_masses(model.belief(Side::One), &grids[0])?,
        hat_masses(model.belief(Side::Two), &grids[1])?,
    ];
    let var = |k: usize, l: usize| 3 * (k * n2 + l);
    // Variable of state `side`'s own node `own` against opponent node `opp`.
    let node_var = |side: Side, own: usize, opp: usize| match side {
        Side::One => var(own, opp),
        Side::Two => var(opp, own),
    };

    let mut lp = LinearProgram::new(3 * n1 * n2);
    let mut kinds = Vec::new();
    for k in 0..n1 {
        for l in 0..n2 {
            lp.set_objective(var(k, l), weights[0][k] * weights[1][l]);
        }
    }

    for side in Side::BOTH {
        let i = side.index();
        let own_grid = &grids[i];
        let opp_grid = &grids[1 - i];
        let q = &weights[1 - i];
        let opp_belief = model.belief(side.other());
        let kinks = model.opponent_kinks(side);
        let mut breaks = opp_grid.clone();
        breaks.extend_from_slice(kinks);
        // phi[k][l] for leaders and citizens.
        let phi = options.exec.try_map(own_grid.len(), |k| {
            let t = own_grid[k];
            let mut leader = Vec::with_capacity(opp_grid.len());
            let mut citizen = Vec::with_capacity(opp_grid.len());
            for l in 0..opp_grid.len() {
                leader.push(opp_belief.expect(|o| hat(opp_grid, l, o) * model.leader_war(side, t, o), COEFF_TOL, &breaks)?);
                citizen.push(opp_belief.expect(|o| hat(opp_grid, l, o) * model.citizen_war(side, t, o), COEFF_TOL, &breaks)?);
            }
            Ok::<_, Error>((leader, citizen))
        })?;
        let z = |own: usize, opp: usize| node_var(side, own, opp) + 1 + i;
        let utility = |report: usize, phi_t: &[f64], coeffs: &mut Vec<(usize, f64)>, sign: f64| {
            for (l, (&p, &ql)) in phi_t.iter().zip(q).enumerate() {
                coeffs.push((node_var(side, report, l), sign * p));
                coeffs.push((z(report, l), sign * ql));
            }
        };
        for truth in 0..own_grid.len() {
            let leader = &phi[truth].0;
            for report in (0..own_grid.len()).filter(|&r| r != truth) {
                let mut coeffs = Vec::with_capacity(4 * q.len());
                utility(report, leader, &mut coeffs, 1.0);
                utility(truth, leader, &mut coeffs, -1.0);
                lp.add_row(coeffs, Relation::Le, 0.0);
                kinds.push(RowKind::Ic { state: side, truth, report });
            }
        }
        for node in 0..own_grid.len() {
            let (leader, citizen) = &phi[node];
            let mut coeffs = Vec::with_capacity(2 * q.len());
            utility(node, leader, &mut coeffs, 1.0);
            lp.add_row(coeffs, Relation::Ge, leader.iter().sum());
            kinds.push(RowKind::LeaderIr { state: side, node });

            let mut coeffs = Vec::with_capacity(2 * q.len());
            utility(node, citizen, &mut coeffs, 1.0);
            lp.add_row(coeffs, Relation::Ge, citizen.iter().sum());
            kinds.push(RowKind::CitizenIr { state: side, node });
        }
    }

    let relation = if options.strict_balance { Relation::Eq } else { Relation::Le };
    for k in 0..n1 {
        for l in 0..n2 {
            let v = var(k, l);
            lp.add_row(vec![(v, 1.0), (v + 1, 1.0), (v + 2, 1.0)], relation, 1.0);
            kinds.push(RowKind::Budget { k, l });
        }
    }

    Ok(GridProgram {
        model: model.clone(),
        grids,
        weights,
        lp,
        kinds,
        options,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveLog {
    pub iterations: usize,
    pub objective: f64,
    /// Largest constraint violation of the raw LP solution.
    pub lp_violation: f64,
    /// IC audit of the grid types against a refined report grid. The program
    /// imposes IC here, so this measures LP and recovery error.
    pub post_audit: IcReport,
    /// IC audit with true types on the refined grid too. Interpolation does
    /// not carry node IC to types between nodes, so this gain is typically
    /// well above tolerance on coarse grids.
    pub off_node_audit: IcReport,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub mechanism: DirectMechanism,
    /// Minimal ex-ante war probability on the grid.
    pub objective: f64,
    /// One multiplier per constraint row, in [`GridProgram::row_kinds`] order.
    pub duals: Vec<f64>,
    pub log: SolveLog,
}

impl SolveOutcome {
    /// A state and types `θ < θ'` where truthful utility strictly rises, as
    /// positive war probability forces.
    pub fn utility_increase(&self, model: &CrisisModel, exec: Execution) -> Result<UtilityIncrease> {
        largest_utility_increase(model, &self.mechanism, exec)
    }
}

fn snap(v: f64, lo: f64, hi: f64) -> f64 {
    if v < lo + SNAP {
        lo
    } else if v > hi - SNAP {
        hi
    } else {
        v
    }
}

pub fn minimize_war_probability(program: &GridProgram) -> Result<SolveOutcome> {
    let solution = program.lp.solve().map_err(|e| match e {
        LpError::Unbounded(_) | LpError::Infeasible(_) => Error::Solver(format!("internal error: {e}")),
        LpError::IterationLimit(_) | LpError::Numerical(_) => Error::Solver(e.to_string()),
    })?;
    let lp_violation = program.lp.max_violation(&solution.x);
    let [n1, n2] = program.n();
    let mut pi = vec![vec![0.0; n2]; n1];
    let mut x1 = vec![vec![0.0; n2]; n1];
    let mut x2 = vec![vec![0.0; n2]; n1];
    for k in 0..n1 {
        for l in 0..n2 {
            let v = program.var(k, l);
            let p = snap(solution.x[v], 0.0, 1.0).clamp(0.0, 1.0);
            let peace = 1.0 - p;
            let (mut a, mut b) = if peace > SNAP {
                (
                    snap(solution.x[v + 1], 0.0, f64::INFINITY) / peace,
                    snap(solution.x[v + 2], 0.0, f64::INFINITY) / peace,
                )
            } else {
                (0.0, 0.0)
            };
            let total = a + b;
            if total > 1.0 {
                a /= total;
                b /= total;
            }
            pi[k][l] = p;
            x1[k][l] = a;
            x2[k][l] = b;
        }
    }
    let mechanism = DirectMechanism::from_tables(program.grids[0].clone(), program.grids[1].clone(), pi, x1, x2)
        .map_err(|e| Error::Solver(format!("recovered mechanism is malformed: {e}")))?;
    let opts = AuditOptions {
        exec: program.options.exec,
        ..AuditOptions::default()
    };
    let post_audit = check_incentive_compatibility(
        &program.model,
        &mechanism,
        opts.deviation_grid_size(&mechanism),
        opts.tol.ic_gain,
        opts.exec,
    )?;
    let fine = mechanism.refine(opts.refinement);
    let off_node_audit = check_incentive_compatibility(
        &program.model,
        &fine,
        fine.size(Side::One).max(fine.size(Side::Two)),
        opts.tol.ic_gain,
        opts.exec,
    )?;
    let feasible = check_feasibility_and_peace(&mechanism, opts.tol.feasibility).feasible;
    let objective = solution.objective.max(0.0);
    debug!(
        "solved {}x{} program in {} pivots, objective {objective:e}",
        n1, n2, solution.iterations
    );
    Ok(SolveOutcome {
        mechanism,
        objective,
        duals: solution.duals,
        log: SolveLog {
            iterations: solution.iterations,
            objective,
            lp_violation,
            post_audit,
            off_node_audit,
            feasible,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelDescription;

    fn canon(c: f64) -> CrisisModel {
        ModelDescription::symmetric_uniform(c).validate().unwrap()
    }

    #[test]
    fn smallest_program_counts() {
        let p = build_program(&canon(0.2), 2, 2).unwrap();
        assert_eq!(
            p.counts(),
            ConstraintCounts {
                ic: 4,
                ir: 8,
                bounds: 12,
                budget: 4,
                variables: 12
            }
        );
    }

    #[test]
    fn node_weights_sum_to_one() {
        let p = build_program(&canon(0.2), 5, 4).unwrap();
        for side in Side::BOTH {
            let total: f64 = p.weights(side).iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        assert!((p.weights(Side::One)[0] - 0.125).abs() < 1e-12);
    }

    #[test]
    fn plausible_model_is_pacified() {
        let out = minimize_war_probability(&build_program(&canon(0.3), 5, 5).unwrap()).unwrap();
        assert!(out.objective.abs() < 1e-10);
        assert!(out.log.feasible && out.log.post_audit.passed);
        assert_eq!(out.mechanism.max_war_prob(), 0.0);
    }

    #[test]
    fn implausible_model_needs_war() {
        let out = minimize_war_probability(&build_program(&canon(0.2), 5, 5).unwrap()).unwrap();
        assert!(out.objective > 1e-6);
        assert!(out.log.post_audit.max_gain <= 1e-6);
    }

    #[test]
    fn strict_balance_spends_the_budget() {
        let opts = ProgramOptions {
            strict_balance: true,
            exec: Execution::Sequential,
        };
        let p = build_program_with(&canon(0.3), 3, 3, opts).unwrap();
        let out = minimize_war_probability(&p).unwrap();
        for (k, l) in out.mechanism.nodes().collect::<Vec<_>>() {
            let s = out.mechanism.share_node(Side::One, k, l) + out.mechanism.share_node(Side::Two, k, l);
            assert!((s - 1.0).abs() < 1e-9);
        }
    }
}
