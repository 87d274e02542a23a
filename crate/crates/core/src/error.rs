use thiserror::Error;

/// Failure modes shared by every module.
///
/// `Validation` covers inputs that break a documented precondition.
/// `NumericalGuard` covers inputs that are well-formed but cannot be
/// resolved at the requested accuracy (aliasing, ill-conditioning, support
/// leaking past the torus).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("validation: {0}")]
    Validation(String),
    #[error("numerical guard: {0}")]
    NumericalGuard(String),
}

impl LabError {
    pub fn validation(msg: impl Into<String>) -> Self {
        LabError::Validation(msg.into())
    }

    pub fn guard(msg: impl Into<String>) -> Self {
        LabError::NumericalGuard(msg.into())
    }

    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Validation(_) => 2,
            LabError::NumericalGuard(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

macro_rules! ensure {
    ($cond:expr, $kind:ident, $($arg:tt)+) => {
        if !$cond {
            return Err($crate::error::LabError::$kind(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
