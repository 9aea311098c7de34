//! Parameter sweeps: set one or more numeric fields of the model file to each
//! value in turn and tabulate the plausibility verdict, optionally the
//! solver objective, and the war-region mass.

use std::path::{Path, PathBuf};

use crisis_core::analysis;
use crisis_core::solver::{self, ProgramOptions};
use serde::Deserialize;
use serde_json::Value;

use crate::exit::{CmdResult, Failure};
use crate::input::{describe, read_json};
use crate::output::{csv_text, emit, num};
use crate::Common;

/// Cells per axis of the war-region mass in each sweep row.
pub const SWEEP_REGION_GRID: usize = 64;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Parameter {
    One(String),
    Many(Vec<String>),
}

impl Parameter {
    fn paths(&self) -> Vec<&str> {
        match self {
            Parameter::One(p) => vec![p.as_str()],
            Parameter::Many(ps) => ps.iter().map(String::as_str).collect(),
        }
    }

    fn label(&self) -> String {
        self.paths().join("+")
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveGrid {
    pub n1: usize,
    pub n2: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// A field path such as `states[0].lambda`, or several paths set to the
    /// same value.
    pub parameter: Parameter,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub range: Option<Range>,
    /// Also minimize war probability at each value on this grid.
    #[serde(default)]
    pub solve: Option<SolveGrid>,
    #[serde(default)]
    pub war_region_grid: Option<usize>,
    /// Where to write the CSV; `--out` takes precedence.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl SweepSpec {
    /// The swept values in spec order.
    pub fn values(&self) -> CmdResult<Vec<f64>> {
        let values = match (&self.values, self.range) {
            (Some(v), None) => v.clone(),
            (None, Some(r)) => {
                if !(r.step > 0.0 && r.start.is_finite() && r.stop.is_finite()) || r.stop < r.start {
                    return Err(Failure::Incompatible(
                        "sweep range needs finite start <= stop and a positive step".into(),
                    ));
                }
                // Index-based stepping avoids accumulated drift; the slack
                // keeps a stop that sits on the lattice.
                let n = ((r.stop - r.start) / r.step + 1e-9).floor() as usize;
                (0..=n).map(|k| r.start + k as f64 * r.step).collect()
            }
            _ => {
                return Err(Failure::Incompatible(
                    "sweep spec needs exactly one of `values` and `range`".into(),
                ))
            }
        };
        if values.is_empty() {
            return Err(Failure::Incompatible("sweep value list is empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Failure::Incompatible(format!("sweep value {v} is not finite")));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Segment {
    Key(String),
    Index(usize),
}

fn parse_path(path: &str) -> Option<Vec<Segment>> {
    let mut out = Vec::new();
    for part in path.split('.') {
        let (key, mut rest) = match part.find('[') {
            Some(i) => (&part[..i], &part[i..]),
            None => (part, ""),
        };
        if key.is_empty() {
            return None;
        }
        out.push(Segment::Key(key.to_string()));
        while !rest.is_empty() {
            let close = rest.find(']')?;
            if !rest.starts_with('[') {
                return None;
            }
            out.push(Segment::Index(rest[1..close].parse().ok()?));
            rest = &rest[close + 1..];
        }
    }
    Some(out)
}

/// Points `path` at an existing numeric field of `model`.
fn resolve<'a>(model: &'a mut Value, path: &str) -> CmdResult<&'a mut Value> {
    let unresolved = || Failure::Incompatible(format!("sweep parameter `{path}` does not name a numeric model field"));
    let segments = parse_path(path).ok_or_else(unresolved)?;
    let mut node = model;
    for s in &segments {
        node = match s {
            Segment::Key(k) => node.get_mut(k.as_str()),
            Segment::Index(i) => node.get_mut(*i),
        }
        .ok_or_else(unresolved)?;
    }
    if node.is_number() {
        Ok(node)
    } else {
        Err(unresolved())
    }
}

struct Row {
    lhs: f64,
    verdict: &'static str,
    objective: Option<f64>,
    mass: f64,
}

fn verdict(plausible: bool, boundary: bool) -> &'static str {
    match (plausible, boundary) {
        (false, _) => "no",
        (true, true) => "boundary-yes",
        (true, false) => "yes",
    }
}

pub fn run(c: &Common, model_path: &Path, spec_path: &Path) -> CmdResult {
    let base = read_json(model_path)?;
    let spec: SweepSpec = serde_json::from_value(read_json(spec_path)?)
        .map_err(|e| Failure::Incompatible(format!("{}: {e}", spec_path.display())))?;
    let values = spec.values()?;
    let paths = spec.parameter.paths();
    if paths.is_empty() {
        return Err(Failure::Incompatible("sweep parameter list is empty".into()));
    }
    let mut probe = base.clone();
    for p in &paths {
        resolve(&mut probe, p)?;
    }
    let cells = c.grid.or(spec.war_region_grid).unwrap_or(SWEEP_REGION_GRID);
    let exec = c.exec();

    // Validate every point up front so an invalid value fails before any
    // solver work starts.
    let mut models = Vec::with_capacity(values.len());
    for &v in &values {
        let mut value = base.clone();
        for p in &paths {
            *resolve(&mut value, p)? = Value::from(v);
        }
        let model = describe(value)?.validate().map_err(|mut errs| {
            errs.0
                .iter_mut()
                .for_each(|e| e.message = format!("{} (at {} = {})", e.message, spec.parameter.label(), num(v)));
            Failure::InvalidModel(errs)
        })?;
        models.push(model);
    }

    // Points run in parallel; inner loops stay sequential to avoid nested
    // fan-out, and results come back in spec order.
    let rows = exec.try_map(models.len(), |k| -> Result<Row, crisis_core::Error> {
        let model = &models[k];
        let seq = crisis_core::Execution::Sequential;
        let p = analysis::peace_plausibility(model)?;
        let objective = match spec.solve {
            Some(g) => {
                let opts = ProgramOptions {
                    strict_balance: false,
                    exec: seq,
                };
                let program = solver::build_program_with(model, g.n1, g.n2, opts)?;
                Some(solver::minimize_war_probability(&program)?.objective)
            }
            None => None,
        };
        let mass = analysis::war_region(model, cells, seq)?.mass;
        Ok(Row {
            lhs: p.lhs,
            verdict: verdict(p.plausible, p.boundary),
            objective,
            mass,
        })
    })?;

    let mut header = vec!["param", "lhs", "plausible"];
    if spec.solve.is_some() {
        header.push("objective");
    }
    header.push("war_region_mass");
    let table: Vec<Vec<String>> = values
        .iter()
        .zip(&rows)
        .map(|(&v, r)| {
            let mut row = vec![num(v), num(r.lhs), r.verdict.to_string()];
            if let Some(o) = r.objective {
                row.push(num(o));
            }
            row.push(num(r.mass));
            row
        })
        .collect();
    let out = c.out.as_deref().or(spec.output.as_deref());
    emit(out, &csv_text(&header, &table))
}
