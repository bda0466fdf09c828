use hfujita_core::criteria::CriteriaError;
use hfujita_core::group::GeometryError;
use hfujita_core::heat_kernel::KernelError;
use hfujita_core::nonlinearity::NonlinearityError;
use hfujita_core::solver::SolverError;
use serde::Serialize;

/// Exit codes. Usage errors (2) are reported by the argument parser itself.
pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_PARSE: u8 = 4;
pub const EXIT_NUMERICAL: u8 = 5;
pub const EXIT_IO: u8 = 6;
pub const EXIT_PRECONDITION: u8 = 7;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Parse(String),
    Numerical(String),
    Io(String),
    Precondition(String),
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: &'a str,
    code: u8,
    message: &'a str,
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Parse(_) => "parse",
            Self::Numerical(_) => "numerical",
            Self::Io(_) => "io",
            Self::Precondition(_) => "precondition",
        }
    }

    pub fn code(&self) -> u8 {
        match self {
            Self::Config(_) => EXIT_CONFIG,
            Self::Parse(_) => EXIT_PARSE,
            Self::Numerical(_) => EXIT_NUMERICAL,
            Self::Io(_) => EXIT_IO,
            Self::Precondition(_) => EXIT_PRECONDITION,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Self::Config(m) | Self::Parse(m) | Self::Numerical(m) | Self::Io(m) | Self::Precondition(m) => m,
        }
    }

    /// One-line JSON record for stderr.
    pub fn record(&self) -> String {
        serde_json::to_string(&ErrorRecord { error: self.kind(), code: self.code(), message: self.message() })
            .expect("error record serializes")
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<NonlinearityError> for CliError {
    fn from(e: NonlinearityError) -> Self {
        let m = e.to_string();
        match e {
            NonlinearityError::Parse(..) => Self::Parse(m),
            NonlinearityError::Io(..) => Self::Io(m),
            NonlinearityError::OutOfTable(..) => Self::Precondition(m),
            NonlinearityError::InvalidParameter(_) | NonlinearityError::NegativeArgument(_) => Self::Config(m),
        }
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        let m = e.to_string();
        match e {
            KernelError::NonConvergence { .. } => Self::Numerical(m),
            _ => Self::Config(m),
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        let m = e.to_string();
        match e {
            SolverError::InvalidConfig(_) | SolverError::BudgetExceeded { .. } | SolverError::NonPositiveTime(_) => {
                Self::Config(m)
            }
            SolverError::Precondition(_) => Self::Precondition(m),
            SolverError::Numerical(_) | SolverError::LengthMismatch(..) => Self::Numerical(m),
            SolverError::Kernel(k) => k.into(),
            SolverError::Nonlinearity(n) => n.into(),
        }
    }
}

impl From<CriteriaError> for CliError {
    fn from(e: CriteriaError) -> Self {
        match e {
            CriteriaError::InvalidSpec(m) => Self::Config(m),
            CriteriaError::Nonlinearity(n) => n.into(),
            CriteriaError::Solver(s) => s.into(),
        }
    }
}
