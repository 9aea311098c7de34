//! Direct mechanisms tabulated on a product grid of reported types, and the
//! audits that decide incentive compatibility, participation, feasibility
//! and peacefulness.
//!
//! Off-node reports are read as the lottery over the surrounding nodes:
//! the war probability and the unconditional peace shares `(1 − π)·x_i`
//! are interpolated bilinearly, and the settlement at an off-node report is
//! the share conditional on peace. For risk-neutral players this is the
//! same outcome space `(π, x)`, and interim utility stays affine in the
//! interpolation weights.

mod audit;

use serde::{Deserialize, Serialize};

pub use audit::{
    audit, check_constant_peace_payoff, check_envelope_condition, check_feasibility_and_peace,
    check_incentive_compatibility, check_participation, AuditOptions, AuditReport, AuditTolerances,
    ConstantPayoffReport, EnvelopeReport, FeasibilityReport, IcReport, IcWitness, MarginalDrop,
    ParticipationReport, SlackWitness,
};

use crate::error::{Error, Result, ValidationErrors};
use crate::model::{CrisisModel, Side};

/// Relative tolerance for uniform grid spacing.
const SPACING_TOL: f64 = 1e-9;

/// Serialized mechanism: node arrays and tables with rows indexed by
/// `grid1` and columns by `grid2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismFile {
    pub grid1: Vec<f64>,
    pub grid2: Vec<f64>,
    pub pi: Vec<Vec<f64>>,
    pub x1: Vec<Vec<f64>>,
    pub x2: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
struct Table {
    cols: usize,
    data: Vec<f64>,
}

impl Table {
    fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        Table {
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    fn at(&self, k: usize, l: usize) -> f64 {
        self.data[k * self.cols + l]
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    fn bilinear(&self, (k, s): (usize, f64), (l, t): (usize, f64)) -> f64 {
        let a = self.at(k, l);
        let b = self.at(k, l + 1);
        let c = self.at(k + 1, l);
        let d = self.at(k + 1, l + 1);
        (1.0 - s) * ((1.0 - t) * a + t * b) + s * ((1.0 - t) * c + t * d)
    }
}

/// A menu mapping reported type profiles to a war probability and a
/// division of the unit resource.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectMechanism {
    grids: [Vec<f64>; 2],
    pi: Table,
    x: [Table; 2],
    peace: [Table; 2],
}

fn locate(grid: &[f64], v: f64) -> (usize, f64) {
    let n = grid.len();
    let (lo, hi) = (grid[0], grid[n - 1]);
    let h = (hi - lo) / (n - 1) as f64;
    if v <= lo {
        return (0, 0.0);
    }
    if v >= hi {
        return (n - 2, 1.0);
    }
    let k = (((v - lo) / h).floor() as usize).min(n - 2);
    let s = ((v - grid[k]) / (grid[k + 1] - grid[k])).clamp(0.0, 1.0);
    (k, s)
}

impl DirectMechanism {
    /// Builds a mechanism from node tables. Structural invariants (grid
    /// shape and spacing, table shapes, `π ∈ [0, 1]`) are enforced here; the
    /// simplex condition on shares is left to
    /// [`check_feasibility_and_peace`] so infeasible menus can be audited.
    pub fn from_tables(
        grid1: Vec<f64>,
        grid2: Vec<f64>,
        pi: Vec<Vec<f64>>,
        x1: Vec<Vec<f64>>,
        x2: Vec<Vec<f64>>,
    ) -> std::result::Result<Self, ValidationErrors> {
        let mut errs = ValidationErrors::default();
        for (name, g) in [("grid1", &grid1), ("grid2", &grid2)] {
            if g.len() < 2 {
                errs.push(name, "grid needs at least 2 nodes");
                continue;
            }
            if g.iter().any(|v| !v.is_finite()) || g.windows(2).any(|w| w[1] <= w[0]) {
                errs.push(name, "grid must be finite and strictly increasing");
                continue;
            }
            let h = (g[g.len() - 1] - g[0]) / (g.len() - 1) as f64;
            let scale = h.abs().max(g[0].abs()).max(1.0);
            if g.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > SPACING_TOL * scale) {
                errs.push(name, "grid spacing must be uniform");
            }
        }
        let (n1, n2) = (grid1.len(), grid2.len());
        for (name, t) in [("pi", &pi), ("x1", &x1), ("x2", &x2)] {
            if t.len() != n1 || t.iter().any(|r| r.len() != n2) {
                errs.push(name, format!("table must be {n1} rows of {n2} entries"));
            } else if t.iter().flatten().any(|v| !v.is_finite()) {
                errs.push(name, "table entries must be finite");
            }
        }
        if !errs.is_empty() {
            return Err(errs);
        }
        if let Some((k, l)) = (0..n1)
            .flat_map(|k| (0..n2).map(move |l| (k, l)))
            .find(|&(k, l)| !(0.0..=1.0).contains(&pi[k][l]))
        {
            errs.push(
                format!("pi[{k}][{l}]"),
                format!("war probability outside [0,1]: {}", pi[k][l]),
            );
            return Err(errs);
        }

        let pi = Table::from_rows(&pi);
        let x = [Table::from_rows(&x1), Table::from_rows(&x2)];
        let peace = [0, 1].map(|i| Table {
            cols: n2,
            data: pi
                .data
                .iter()
                .zip(&x[i].data)
                .map(|(p, xi)| (1.0 - p) * xi)
                .collect(),
        });
        Ok(DirectMechanism {
            grids: [grid1, grid2],
            pi,
            x,
            peace,
        })
    }

    /// Tabulates `f(θ₁, θ₂) -> (π, x₁, x₂)` on the given grids.
    pub fn from_fn<F>(grid1: Vec<f64>, grid2: Vec<f64>, mut f: F) -> std::result::Result<Self, ValidationErrors>
    where
        F: FnMut(f64, f64) -> (f64, f64, f64),
    {
        let mut pi = Vec::with_capacity(grid1.len());
        let mut x1 = Vec::with_capacity(grid1.len());
        let mut x2 = Vec::with_capacity(grid1.len());
        for &a in &grid1 {
            let row: Vec<_> = grid2.iter().map(|&b| f(a, b)).collect();
            pi.push(row.iter().map(|r| r.0).collect());
            x1.push(row.iter().map(|r| r.1).collect());
            x2.push(row.iter().map(|r| r.2).collect());
        }
        DirectMechanism::from_tables(grid1, grid2, pi, x1, x2)
    }

    /// Constant menu on an `n₁ × n₂` grid spanning the model's type spaces.
    pub fn constant(model: &CrisisModel, n: [usize; 2], pi: f64, x: [f64; 2]) -> std::result::Result<Self, ValidationErrors> {
        DirectMechanism::from_fn(
            model.space(Side::One).linspace(n[0]),
            model.space(Side::Two).linspace(n[1]),
            |_, _| (pi, x[0], x[1]),
        )
    }

    /// The same menu on a grid with `factor − 1` extra nodes per cell. War
    /// probabilities and peace shares are bilinear on every cell, so the
    /// resampled mechanism interpolates to identical values everywhere.
    pub fn refine(&self, factor: usize) -> Self {
        let factor = factor.max(1);
        let fine = |side: Side| self.report_grid(side, (self.size(side) - 1) * factor + 1);
        DirectMechanism::from_fn(fine(Side::One), fine(Side::Two), |a, b| {
            (self.war_prob([a, b]), self.share(Side::One, [a, b]), self.share(Side::Two, [a, b]))
        })
        .expect("resampling a valid mechanism stays valid")
    }

    pub fn from_file(file: MechanismFile) -> std::result::Result<Self, ValidationErrors> {
        DirectMechanism::from_tables(file.grid1, file.grid2, file.pi, file.x1, file.x2)
    }

    pub fn to_file(&self) -> MechanismFile {
        MechanismFile {
            grid1: self.grids[0].clone(),
            grid2: self.grids[1].clone(),
            pi: self.pi.rows(),
            x1: self.x[0].rows(),
            x2: self.x[1].rows(),
        }
    }

    pub fn grid(&self, side: Side) -> &[f64] {
        &self.grids[side.index()]
    }

    pub fn size(&self, side: Side) -> usize {
        self.grids[side.index()].len()
    }

    /// `n` evenly spaced reports spanning `side`'s grid.
    pub fn report_grid(&self, side: Side, n: usize) -> Vec<f64> {
        let g = self.grid(side);
        crate::model::TypeSpace::new(g[0], g[g.len() - 1]).linspace(n)
    }

    /// Node value of the war probability, `k` indexing grid1 and `l` grid2.
    pub fn pi_node(&self, k: usize, l: usize) -> f64 {
        self.pi.at(k, l)
    }

    pub fn share_node(&self, side: Side, k: usize, l: usize) -> f64 {
        self.x[side.index()].at(k, l)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n2 = self.grids[1].len();
        (0..self.grids[0].len()).flat_map(move |k| (0..n2).map(move |l| (k, l)))
    }

    fn cell(&self, theta: [f64; 2]) -> ((usize, f64), (usize, f64)) {
        (locate(&self.grids[0], theta[0]), locate(&self.grids[1], theta[1]))
    }

    /// War probability at a report profile.
    pub fn war_prob(&self, theta: [f64; 2]) -> f64 {
        let (a, b) = self.cell(theta);
        self.pi.bilinear(a, b)
    }

    /// Unconditional peace share `(1 − π)·x_i` at a report profile.
    pub fn peace_share(&self, side: Side, theta: [f64; 2]) -> f64 {
        let (a, b) = self.cell(theta);
        self.peace[side.index()].bilinear(a, b)
    }

    /// Settlement share `x_i` at a report profile, conditional on peace.
    /// Where war is certain the plain bilinear share is returned.
    pub fn share(&self, side: Side, theta: [f64; 2]) -> f64 {
        let (a, b) = self.cell(theta);
        let peace_prob = 1.0 - self.pi.bilinear(a, b);
        if peace_prob > 1e-12 {
            self.peace[side.index()].bilinear(a, b) / peace_prob
        } else {
            self.x[side.index()].bilinear(a, b)
        }
    }

    pub fn max_war_prob(&self) -> f64 {
        self.pi.data.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_war_prob(&self) -> f64 {
        self.pi.data.iter().copied().fold(1.0, f64::min)
    }

    /// Checks that the grids span the model's type spaces.
    pub fn check_compatible(&self, model: &CrisisModel) -> Result<()> {
        for side in Side::BOTH {
            let g = self.grid(side);
            let s = model.space(side);
            let tol = 1e-9 * s.width().max(1.0);
            if (g[0] - s.lo).abs() > tol || (g[g.len() - 1] - s.hi).abs() > tol {
                return Err(Error::GridMismatch(format!(
                    "grid{side} spans [{}, {}] but the type space is [{}, {}]",
                    g[0],
                    g[g.len() - 1],
                    s.lo,
                    s.hi
                )));
            }
        }
        Ok(())
    }

    /// Grid nodes of the opponent of `side`, used as quadrature breakpoints.
    pub(crate) fn opponent_breaks(&self, side: Side) -> &[f64] {
        &self.grids[side.other().index()]
    }
}

/// Expected utility of `side`'s leader of type `true_type` who reports
/// `report`, with the opponent reporting truthfully.
pub fn interim_utility_report(
    model: &CrisisModel,
    mech: &DirectMechanism,
    side: Side,
    report: f64,
    true_type: f64,
) -> Result<f64> {
    crate::payoffs::interim_utility(model, mech, side, report, true_type, crate::quadrature::DEFAULT_TOL)
}

/// Completes a war-probability schedule with settlement shares that depend
/// only on the own report and put each grid type's truthful utility on the
/// envelope path `U(θ) = U(θ̲) + ∫ E[π ∂w/∂t] dt` (trapezoid rule between
/// nodes), starting from `base[i]` at the lowest type. When the interim
/// marginal is nondecreasing the result is incentive compatible at the
/// nodes. Requires zero or affine audience costs.
pub fn settle_by_envelope(
    model: &CrisisModel,
    grid1: Vec<f64>,
    grid2: Vec<f64>,
    pi: Vec<Vec<f64>>,
    base: [f64; 2],
) -> Result<DirectMechanism> {
    let (n1, n2) = (grid1.len(), grid2.len());
    let zeros = vec![vec![0.0; n2]; n1];
    let war_only = DirectMechanism::from_tables(grid1, grid2, pi.clone(), zeros.clone(), zeros).map_err(Error::Invalid)?;
    war_only.check_compatible(model)?;
    let mut x = [vec![vec![0.0; n2]; n1], vec![vec![0.0; n2]; n1]];
    for side in Side::BOTH {
        let Some((scale, shift)) = model.state(side).audience.affine_form() else {
            return Err(Error::Precondition("envelope settlement needs zero or affine audience costs".into()));
        };
        if scale.abs() < 1e-12 {
            return Err(Error::Precondition(
                "audience cost absorbs the whole share (slope 1); shares cannot move leader payoffs".into(),
            ));
        }
        let grid = war_only.grid(side);
        let dist = model.belief(side.other());
        let breaks = war_only.opponent_breaks(side);
        let tol = crate::quadrature::DEFAULT_TOL * 1e-2;
        let mut target = base[side.index()];
        let mut prev_marginal = 0.0;
        for (k, &t) in grid.iter().enumerate() {
            let pi_at = |opp: f64| war_only.war_prob(side.profile(t, opp));
            let propensity = dist.expect(pi_at, tol, breaks)?;
            // Own-type slopes of both technologies do not depend on the opponent.
            let marginal = propensity * model.leader_war_slope(side, t, model.space(side.other()).lo)?;
            if k > 0 {
                target += 0.5 * (prev_marginal + marginal) * (t - grid[k - 1]);
            }
            prev_marginal = marginal;
            let war = dist.expect(|opp| pi_at(opp) * model.leader_war(side, t, opp), tol, breaks)?;
            let peace = 1.0 - propensity;
            let y = if peace > 1e-12 {
                ((target - war) / peace + shift) / scale
            } else {
                0.0
            };
            for l in 0..war_only.size(side.other()) {
                match side {
                    Side::One => x[0][k][l] = y,
                    Side::Two => x[1][l][k] = y,
                }
            }
        }
    }
    let [x1, x2] = x;
    let [g1, g2] = war_only.grids;
    DirectMechanism::from_tables(g1, g2, pi, x1, x2).map_err(Error::Invalid)
}
