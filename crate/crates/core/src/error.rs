use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A malformed input line (bad date, non-numeric field, wrong column count).
    #[error("line {line}: parse error: {message}")]
    Parse { line: usize, message: String },

    /// Well-formed input whose content is invalid (negative steps, duplicates).
    #[error("{}", fmt_data(*line, message))]
    Data { line: Option<usize>, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty dataset")]
    EmptyData,

    #[error("model with {units} units ({visible} visible) exceeds the exact-enumeration limit of {max_units} units / {max_visible} visible")]
    TooLarge {
        units: usize,
        visible: usize,
        max_units: usize,
        max_visible: usize,
    },

    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("model document: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn fmt_data(line: Option<usize>, message: &str) -> String {
    match line {
        Some(line) => format!("line {line}: data error: {message}"),
        None => format!("data error: {message}"),
    }
}

impl Error {
    pub(crate) fn data(message: impl Into<String>) -> Self {
        Error::Data {
            line: None,
            message: message.into(),
        }
    }

    pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
        if expected == actual {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                context,
                expected,
                actual,
            })
        }
    }
}
