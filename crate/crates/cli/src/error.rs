//! Error type and exit-code mapping.

use std::fmt;
use std::process::ExitCode;

use codecstream::attention::AttentionError;
use codecstream::budget::BudgetError;
use codecstream::gop::GopError;
use codecstream::packer::PackError;
use codecstream::saliency::SaliencyError;
use codecstream::trace::TraceError;
use codecstream::TokenizeError;
use jumpscore::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Unreadable or malformed input.
    Input,
    /// Configuration rejected.
    Config,
    /// Invariant violation or failed write.
    Internal,
}

impl ErrorKind {
    pub fn code(self) -> u8 {
        match self {
            ErrorKind::Input => 2,
            ErrorKind::Config => 3,
            ErrorKind::Internal => 4,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub msg: String,
}

impl CliError {
    pub fn input(msg: impl fmt::Display) -> Self {
        Self {
            kind: ErrorKind::Input,
            msg: msg.to_string(),
        }
    }

    pub fn config(msg: impl fmt::Display) -> Self {
        Self {
            kind: ErrorKind::Config,
            msg: msg.to_string(),
        }
    }

    pub fn internal(msg: impl fmt::Display) -> Self {
        Self {
            kind: ErrorKind::Internal,
            msg: msg.to_string(),
        }
    }

    pub fn context(self, what: impl fmt::Display) -> Self {
        Self {
            msg: format!("{what}: {}", self.msg),
            ..self
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.kind.code())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.kind {
            ErrorKind::Input => "input error",
            ErrorKind::Config => "config error",
            ErrorKind::Internal => "internal error",
        };
        write!(f, "{tag}: {}", self.msg)
    }
}

impl std::error::Error for CliError {}

impl From<TraceError> for CliError {
    fn from(e: TraceError) -> Self {
        match e {
            TraceError::InvalidSpec(_) => CliError::config(e),
            _ => CliError::input(e),
        }
    }
}

impl From<GopError> for CliError {
    fn from(e: GopError) -> Self {
        match e {
            GopError::InvalidConfig(_) => CliError::config(e),
            GopError::OutOfRange { .. } => CliError::internal(e),
        }
    }
}

impl From<SaliencyError> for CliError {
    fn from(e: SaliencyError) -> Self {
        match e {
            SaliencyError::InvalidConfig(_) => CliError::config(e),
            SaliencyError::DimensionMismatch(_) => CliError::input(e),
        }
    }
}

impl From<PackError> for CliError {
    fn from(e: PackError) -> Self {
        CliError::config(e)
    }
}

impl From<TokenizeError> for CliError {
    fn from(e: TokenizeError) -> Self {
        match e {
            TokenizeError::Trace(e) => e.into(),
            TokenizeError::Gop(e) => e.into(),
            TokenizeError::Saliency(e) => e.into(),
            TokenizeError::Pack(e) => e.into(),
        }
    }
}

impl From<AttentionError> for CliError {
    fn from(e: AttentionError) -> Self {
        match e {
            AttentionError::MaskTooLarge { .. } | AttentionError::ZeroSlots => CliError::config(e),
            AttentionError::DuplicateSource { .. } => CliError::internal(e),
        }
    }
}

impl From<BudgetError> for CliError {
    fn from(e: BudgetError) -> Self {
        CliError::config(e)
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::InvalidTolerance(_) => CliError::config(e),
            _ => CliError::input(e),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
