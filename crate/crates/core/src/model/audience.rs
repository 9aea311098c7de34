use serde::{Deserialize, Serialize};

use crate::error::ValidationErrors;

/// Maps a settlement share and the leader's (reported) type to the audience
/// cost `a`; the leader's peace payoff is `v = x − a`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum AudienceCostRule {
    #[default]
    Zero,
    /// `a(x) = slope·x + intercept`.
    Affine { slope: f64, intercept: f64 },
    /// `a(x, θ)` bilinear on the table, clamped outside the node ranges.
    /// `cost[k][l]` sits at `(x_nodes[k], theta_nodes[l])`.
    Tabulated {
        x_nodes: Vec<f64>,
        theta_nodes: Vec<f64>,
        cost: Vec<Vec<f64>>,
    },
}

impl AudienceCostRule {
    pub fn cost(&self, x: f64, theta: f64) -> f64 {
        match self {
            AudienceCostRule::Zero => 0.0,
            AudienceCostRule::Affine { slope, intercept } => slope * x + intercept,
            AudienceCostRule::Tabulated {
                x_nodes,
                theta_nodes,
                cost,
            } => {
                let (k, s) = locate(x_nodes, x);
                let (l, t) = locate(theta_nodes, theta);
                let c00 = cost[k][l];
                let c10 = cost[k + 1][l];
                let c01 = cost[k][l + 1];
                let c11 = cost[k + 1][l + 1];
                (1.0 - s) * ((1.0 - t) * c00 + t * c01) + s * ((1.0 - t) * c10 + t * c11)
            }
        }
    }

    /// Leader peace payoff `v = x − a(x, θ)`.
    pub fn leader_peace_payoff(&self, x: f64, theta: f64) -> f64 {
        x - self.cost(x, theta)
    }

    /// `Some((scale, shift))` when `v = scale·x − shift`, i.e. `v` is affine
    /// in the share and independent of type.
    pub fn affine_form(&self) -> Option<(f64, f64)> {
        match *self {
            AudienceCostRule::Zero => Some((1.0, 0.0)),
            AudienceCostRule::Affine { slope, intercept } => Some((1.0 - slope, intercept)),
            AudienceCostRule::Tabulated { .. } => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, AudienceCostRule::Zero)
    }

    pub(crate) fn validate(&self, field: &str, errs: &mut ValidationErrors) {
        match self {
            AudienceCostRule::Zero => {}
            AudienceCostRule::Affine { slope, intercept } => {
                if !(slope.is_finite() && intercept.is_finite()) {
                    errs.push(format!("{field}.params"), "affine coefficients must be finite");
                }
            }
            AudienceCostRule::Tabulated {
                x_nodes,
                theta_nodes,
                cost,
            } => {
                for (name, nodes) in [("x_nodes", x_nodes), ("theta_nodes", theta_nodes)] {
                    if nodes.len() < 2 {
                        errs.push(format!("{field}.params.{name}"), "need at least 2 nodes");
                    } else if nodes.windows(2).any(|w| !(w[1] > w[0])) || nodes.iter().any(|v| !v.is_finite()) {
                        errs.push(
                            format!("{field}.params.{name}"),
                            "nodes must be finite and strictly increasing",
                        );
                    }
                }
                if cost.len() != x_nodes.len() || cost.iter().any(|r| r.len() != theta_nodes.len()) {
                    errs.push(
                        format!("{field}.params.cost"),
                        "cost table must be x_nodes.len() rows of theta_nodes.len() entries",
                    );
                } else if cost.iter().flatten().any(|v| !v.is_finite()) {
                    errs.push(format!("{field}.params.cost"), "cost entries must be finite");
                }
            }
        }
    }
}

fn locate(nodes: &[f64], v: f64) -> (usize, f64) {
    let n = nodes.len();
    if v <= nodes[0] {
        return (0, 0.0);
    }
    if v >= nodes[n - 1] {
        return (n - 2, 1.0);
    }
    let k = nodes.partition_point(|&x| x <= v).saturating_sub(1).min(n - 2);
    (k, (v - nodes[k]) / (nodes[k + 1] - nodes[k]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rule_is_identity() {
        let r = AudienceCostRule::Zero;
        for &x in &[0.0, 0.3, 1.0] {
            assert_eq!(r.leader_peace_payoff(x, 0.7), x);
        }
    }

    #[test]
    fn affine_shift() {
        let r = AudienceCostRule::Affine {
            slope: 0.0,
            intercept: 0.1,
        };
        assert!((r.leader_peace_payoff(0.5, 0.0) - 0.4).abs() < 1e-15);
        assert_eq!(r.affine_form(), Some((1.0, 0.1)));
    }

    #[test]
    fn tabulated_is_bilinear() {
        let r = AudienceCostRule::Tabulated {
            x_nodes: vec![0.0, 1.0],
            theta_nodes: vec![0.0, 1.0],
            cost: vec![vec![0.0, 0.2], vec![0.1, 0.3]],
        };
        assert!((r.cost(0.5, 0.5) - 0.15).abs() < 1e-15);
        assert!((r.cost(1.0, 0.0) - 0.1).abs() < 1e-15);
        assert!((r.cost(2.0, -1.0) - 0.1).abs() < 1e-15);
    }
}
