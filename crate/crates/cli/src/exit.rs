use std::fmt;
use std::process::ExitCode;

use crisis_core::{Error, ValidationErrors};

/// Everything that ends a command early, mapped onto the exit-code
/// contract.
#[derive(Debug)]
pub enum Failure {
    /// The audit ran and found violations.
    AuditFailed,
    InvalidModel(ValidationErrors),
    PeaceInfeasible,
    Unreadable(String),
    Incompatible(String),
    Solver(String),
    Write(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::AuditFailed => 1,
            Failure::InvalidModel(_) => 2,
            Failure::PeaceInfeasible => 3,
            Failure::Unreadable(_) => 64,
            Failure::Incompatible(_) => 65,
            Failure::Solver(_) => 70,
            Failure::Write(_) => 74,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::AuditFailed => write!(f, "audit found violations"),
            Failure::InvalidModel(errs) => write!(f, "invalid model:\n{errs}"),
            Failure::PeaceInfeasible => write!(f, "no peaceful settlement exists"),
            Failure::Unreadable(m) => write!(f, "unreadable input: {m}"),
            Failure::Incompatible(m) => write!(f, "incompatible inputs: {m}"),
            Failure::Solver(m) => write!(f, "solver failure: {m}"),
            Failure::Write(m) => write!(f, "write failure: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Invalid(errs) => Failure::InvalidModel(errs),
            Error::Quadrature { .. } | Error::Solver(_) => Failure::Solver(e.to_string()),
            Error::OutOfRange { .. } | Error::GridMismatch(_) | Error::Precondition(_) | Error::NonDifferentiable { .. } => {
                Failure::Incompatible(e.to_string())
            }
        }
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;
