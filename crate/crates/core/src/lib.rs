//! Crisis bargaining under domestic constraints, as a mechanism-design
//! toolkit.
//!
//! Two states with private types dispute a unit resource. Leaders and
//! citizens value war differently (political bias `λ`), and leaders may value
//! settlements differently from citizens (audience costs). The crate
//! evaluates interim payoffs, decides whether any peaceful incentive
//! compatible menu exists, builds one when it does, audits arbitrary direct
//! mechanisms, and computes the least war-prone discretized mechanism by
//! linear programming when peace is out of reach.

pub mod analysis;
pub mod error;
pub mod exec;
pub mod lp;
pub mod mechanism;
pub mod model;
pub mod payoffs;
pub mod quadrature;
pub mod solver;

pub use error::{Error, FieldError, Result, ValidationErrors};
pub use exec::Execution;
pub use mechanism::DirectMechanism;
pub use model::{CrisisModel, ModelDescription, Side};

/// Formats a number with 12 significant digits, `.` as decimal separator
/// and no grouping. Used by every CSV writer in the workspace.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_nan() {
            "NaN".into()
        } else if v.is_infinite() {
            if v > 0.0 { "inf".into() } else { "-inf".into() }
        } else {
            "0".into()
        };
    }
    // Take the magnitude after rounding to 12 digits, so a carry into a new
    // leading digit (0.99.. -> 1.00..) does not add a 13th.
    let sci = format!("{v:.11e}");
    let magnitude: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("exponent");
    if !(-6..15).contains(&magnitude) {
        return sci;
    }
    let decimals = (11 - magnitude).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.starts_with("-0") && s.trim_start_matches(['-', '0', '.']).is_empty() {
        return "0".into();
    }
    s
}
