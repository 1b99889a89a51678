use thiserror::Error;

/// Errors raised while parsing MATPOWER case text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    MissingField(&'static str),
    MalformedNumber(String),
    Unterminated(&'static str),
    RaggedRow {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    ShortRow {
        field: &'static str,
        min: usize,
        found: usize,
    },
    InvalidBusType(String),
    SlackCount(usize),
    UnknownBus(String),
    DuplicateBus(String),
    NonPositiveBaseMva,
}

impl std::fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParseErrorKind::MissingField(name) => write!(f, "missing mpc.{name}"),
            ParseErrorKind::MalformedNumber(tok) => write!(f, "malformed number `{tok}`"),
            ParseErrorKind::Unterminated(name) => write!(f, "unterminated matrix for mpc.{name}"),
            ParseErrorKind::RaggedRow {
                field,
                expected,
                found,
            } => {
                write!(
                    f,
                    "mpc.{field} row has {found} columns, previous rows have {expected}"
                )
            }
            ParseErrorKind::ShortRow { field, min, found } => {
                write!(
                    f,
                    "mpc.{field} row has {found} columns, at least {min} required"
                )
            }
            ParseErrorKind::InvalidBusType(t) => write!(f, "invalid bus type {t}"),
            ParseErrorKind::SlackCount(n) => write!(f, "expected exactly one slack bus, found {n}"),
            ParseErrorKind::UnknownBus(id) => write!(f, "reference to unknown bus {id}"),
            ParseErrorKind::DuplicateBus(id) => write!(f, "duplicate bus id {id}"),
            ParseErrorKind::NonPositiveBaseMva => write!(f, "mpc.baseMVA must be positive"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("singular Jacobian (pivot below relative threshold)")]
    SingularJacobian,
    #[error("nominal point is not a solution: residual {0:e}")]
    NotASolution(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported system form: {0}")]
    UnsupportedForm(String),
    #[error("parse error at line {line}: {kind}")]
    Parse { line: usize, kind: ParseErrorKind },
    #[error("model error: {0}")]
    Model(String),
    #[error("degenerate no-load voltage at bus {0}")]
    DegenerateNoLoad(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
