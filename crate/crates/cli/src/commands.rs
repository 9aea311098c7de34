use std::path::Path;
use std::time::Instant;

use crisis_core::analysis::{self, Construction, PlausibilityReport};
use crisis_core::mechanism::{self, AuditOptions, AuditTolerances};
use crisis_core::solver::{self, ProgramOptions};
use crisis_core::{Execution, Side};
use serde_json::json;

use crate::exit::{CmdResult, Failure};
use crate::input::{load_description, load_mechanism, load_model};
use crate::output::{emit, flag, json_text, num, pair, Report};
use crate::Common;

/// Nodes per state of the constant peaceful menu.
pub const CONSTRUCT_GRID: usize = 11;
/// Nodes per state of the solver grid.
pub const SOLVE_GRID: usize = 5;
/// Cells per axis of the war-region table.
pub const REGION_GRID: usize = 256;

impl Common {
    pub fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    fn write_report(&self, report: &Report) -> CmdResult {
        emit(self.out.as_deref(), &report.render(self.format))
    }
}

pub fn validate(c: &Common, path: &Path) -> CmdResult {
    let description = load_description(path)?;
    let (valid, errors) = match description.validate() {
        Ok(_) => (true, Vec::new()),
        Err(errs) => (false, errs.0),
    };
    let mut r = Report::new(&json!({ "valid": valid, "errors": errors }));
    r.table(vec!["field", "message"]);
    if valid {
        r.line("valid", "yes");
    }
    for e in &errors {
        r.line(&e.field, &e.message);
        r.row(vec![e.field.clone(), e.message.clone()]);
    }
    c.write_report(&r)?;
    if valid {
        Ok(())
    } else {
        Err(Failure::InvalidModel(crisis_core::ValidationErrors(errors)))
    }
}

fn plausibility_report(p: &PlausibilityReport) -> Report {
    let mut r = Report::new(p);
    r.line("lhs", num(p.lhs)).line("verdict", p.verdict());
    for side in Side::BOTH {
        let d = p.per_state[side.index()];
        r.line(&format!("state {side} leader war"), num(d.leader_war))
            .line(&format!("state {side} citizen war"), num(d.citizen_war))
            .line(&format!("state {side} demand"), num(d.leader_term + d.citizen_term));
    }
    r.table(vec!["lhs", "plausible", "boundary", "demand1", "demand2"]).row(vec![
        num(p.lhs),
        flag(p.plausible),
        flag(p.boundary),
        num(p.per_state[0].leader_term + p.per_state[0].citizen_term),
        num(p.per_state[1].leader_term + p.per_state[1].citizen_term),
    ]);
    r
}

pub fn plausibility(c: &Common, path: &Path) -> CmdResult {
    let model = load_model(path)?;
    let p = analysis::peace_plausibility(&model)?;
    c.write_report(&plausibility_report(&p))
}

pub fn construct(c: &Common, path: &Path) -> CmdResult {
    let model = load_model(path)?;
    let grid = c.grid.unwrap_or(CONSTRUCT_GRID);
    match analysis::construct_peaceful_settlement(&model, grid)? {
        Construction::Peaceful {
            mechanism,
            demands,
            settlement,
        } => {
            let file = json_text(&mechanism.to_file());
            match &c.out {
                Some(out) => {
                    emit(Some(out), &file)?;
                    let mut r = Report::new(&json!({ "demands": demands, "settlement": settlement }));
                    r.line("peaceful", "yes")
                        .line("demands", pair(demands))
                        .line("settlement", pair(settlement))
                        .line("mechanism", out.display().to_string());
                    r.table(vec!["state", "demand", "settlement"]);
                    for i in 0..2 {
                        r.row(vec![(i + 1).to_string(), num(demands[i]), num(settlement[i])]);
                    }
                    emit(None, &r.render(c.format))
                }
                None => emit(None, &file),
            }
        }
        Construction::Infeasible(cert) => {
            let mut r = Report::new(&cert);
            r.line("peaceful", "no")
                .line("lhs", num(cert.report.lhs))
                .line("demands", pair(cert.demands))
                .line("total demand", num(cert.total_demand));
            r.table(vec!["state", "demand", "settlement"]);
            for i in 0..2 {
                r.row(vec![(i + 1).to_string(), num(cert.demands[i]), String::new()]);
            }
            emit(None, &r.render(c.format))?;
            Err(Failure::PeaceInfeasible)
        }
    }
}

pub fn audit(c: &Common, model_path: &Path, mech_path: &Path) -> CmdResult {
    let model = load_model(model_path)?;
    let mech = load_mechanism(mech_path)?;
    let mut tol = AuditTolerances::default();
    if let Some(t) = c.tol {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Failure::Incompatible(format!("--tol must be a nonnegative number, got {t}")));
        }
        tol.ic_gain = t;
    }
    let options = AuditOptions {
        tol,
        exec: c.exec(),
        ..AuditOptions::default()
    };
    let a = mechanism::audit(&model, &mech, &options)?;
    let mut r = Report::new(&a);
    r.line("incentive compatible", flag(a.ic.passed))
        .line("max gain", num(a.ic.max_gain));
    if let Some(w) = a.ic.witness {
        r.line(
            "witness",
            format!("state {} type {} reports {}", w.state, num(w.true_type), num(w.report)),
        );
    }
    let p = &a.participation;
    r.line("envelope residual", num(a.envelope.max_residual))
        .line("marginal monotone", flag(a.envelope.marginal_monotone))
        .line("leader participation", num(p.leader_worst.slack))
        .line("citizen participation", num(p.citizen_worst.slack))
        .line("feasible", flag(a.feasibility.feasible))
        .line("peaceful", flag(a.feasibility.peaceful))
        .line("max war probability", num(a.feasibility.max_war_prob))
        .line("passed", flag(a.passed));
    r.table(vec!["check", "value", "tol", "passed"])
        .row(vec!["ic_gain".into(), num(a.ic.max_gain), num(a.ic.tol), flag(a.ic.passed)])
        .row(vec![
            "envelope_residual".into(),
            num(a.envelope.max_residual),
            num(a.envelope.tol),
            flag(a.envelope.passed),
        ])
        .row(vec![
            "leader_participation".into(),
            num(p.leader_worst.slack),
            num(p.tol),
            flag(p.leader_worst.slack >= -p.tol),
        ])
        .row(vec![
            "citizen_participation".into(),
            num(p.citizen_worst.slack),
            num(p.tol),
            flag(p.citizen_vacuous || p.citizen_worst.slack >= -p.tol),
        ])
        .row(vec![
            "feasibility".into(),
            num(a.feasibility.worst_violation),
            num(a.feasibility.tol),
            flag(a.feasibility.feasible),
        ]);
    c.write_report(&r)?;
    if a.passed {
        Ok(())
    } else {
        Err(Failure::AuditFailed)
    }
}

pub fn solve(c: &Common, path: &Path, n1: Option<usize>, n2: Option<usize>, strict_balance: bool) -> CmdResult {
    let model = load_model(path)?;
    let default = c.grid.unwrap_or(SOLVE_GRID);
    let (n1, n2) = (n1.unwrap_or(default), n2.unwrap_or(default));
    let options = ProgramOptions {
        strict_balance,
        exec: c.exec(),
    };
    let start = Instant::now();
    let program = solver::build_program_with(&model, n1, n2, options)?;
    let outcome = solver::minimize_war_probability(&program)?;
    log::info!("solved {n1} x {n2} grid in {:.3?}", start.elapsed());
    if let Some(out) = &c.out {
        emit(Some(out), &json_text(&outcome.mechanism.to_file()))?;
    }
    let log = &outcome.log;
    let mut r = Report::new(log);
    r.line("grid", format!("{n1} x {n2}"))
        .line("objective", num(log.objective))
        .line("iterations", log.iterations.to_string())
        .line("lp violation", num(log.lp_violation))
        .line("max ic gain", num(log.post_audit.max_gain))
        .line("off-node ic gain", num(log.off_node_audit.max_gain))
        .line("feasible", flag(log.feasible));
    r.table(vec!["objective", "iterations", "max_ic_gain", "off_node_ic_gain", "lp_violation"]).row(vec![
        num(log.objective),
        log.iterations.to_string(),
        num(log.post_audit.max_gain),
        num(log.off_node_audit.max_gain),
        num(log.lp_violation),
    ]);
    emit(None, &r.render(c.format))
}

pub fn war_region(c: &Common, path: &Path) -> CmdResult {
    let model = load_model(path)?;
    let cells = c.grid.unwrap_or(REGION_GRID);
    let w = analysis::war_region(&model, cells, c.exec())?;
    let count: usize = w.indicator.iter().map(|row| row.iter().filter(|&&f| f).count()).sum();
    let mut r = Report::new(&w);
    r.line("cells", format!("{cells} x {cells}"))
        .line("war cells", count.to_string())
        .line("mass", num(w.mass));
    r.table(vec!["theta1", "theta2", "indicator"]);
    for (k, row) in w.indicator.iter().enumerate() {
        for (l, &f) in row.iter().enumerate() {
            r.row(vec![num(w.theta[0][k]), num(w.theta[1][l]), (f as u8).to_string()]);
        }
    }
    c.write_report(&r)
}
