use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = HbcError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HbcError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("degenerate body: c_b and c_bm are both zero")]
    DegenerateBody,

    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),

    #[error("c_gm_rx = 0 makes the floating-metal closed form singular; evaluate with the nodal oracle instead")]
    DegenerateCoupling,

    #[error("singular configuration: {0}")]
    SingularConfiguration(&'static str),

    #[error("degenerate network at f = {frequency} Hz: no path to reference from {}", isolated.join(", "))]
    DegenerateNetwork {
        frequency: f64,
        isolated: Vec<String>,
    },

    #[error("invalid netlist: {0}")]
    InvalidNetlist(String),

    #[error("unsupported modulation order M = {0} (must be a perfect square >= 4)")]
    UnsupportedModulation(u32),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("{}", format_parse(.line, .key, .message))]
    Parse {
        line: Option<usize>,
        key: Option<String>,
        message: String,
    },

    #[error("unit-suffix mismatch for `{key}`{}: expected one of {expected}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    UnitMismatch {
        key: String,
        line: Option<usize>,
        expected: &'static str,
    },

    #[error("unknown key `{key}`{}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    UnknownKey { key: String, line: Option<usize> },

    #[error("sweep axis does not apply to this scenario: {0}")]
    AxisMismatch(String),

    #[error("model unavailable: {0}")]
    ModelUnavailable(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("preset `{preset}` has no position `{position}`")]
    UnknownPosition { preset: String, position: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn format_parse(line: &Option<usize>, key: &Option<String>, message: &str) -> String {
    match (line, key) {
        (Some(l), Some(k)) => format!("parse error at line {l}, key `{k}`: {message}"),
        (Some(l), None) => format!("parse error at line {l}: {message}"),
        (None, Some(k)) => format!("parse error at key `{k}`: {message}"),
        (None, None) => format!("parse error: {message}"),
    }
}

impl HbcError {
    /// True for errors caused by bad user input (as opposed to runtime or
    /// numerical failures). The CLI maps these to exit code 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            HbcError::InvalidParameter { .. }
                | HbcError::DegenerateBody
                | HbcError::InvalidScenario(_)
                | HbcError::Parse { .. }
                | HbcError::UnitMismatch { .. }
                | HbcError::UnknownKey { .. }
                | HbcError::AxisMismatch(_)
                | HbcError::ModelUnavailable(_)
                | HbcError::UnsupportedModulation(_)
                | HbcError::UnknownPreset(_)
                | HbcError::UnknownPosition { .. }
                | HbcError::InvalidNetlist(_)
        )
    }
}

pub(crate) fn ensure_nonnegative(name: &'static str, value: f64) -> Result<()> {
    if value.is_nan() || value < 0.0 {
        return Err(HbcError::InvalidParameter {
            name,
            value,
            reason: "must be >= 0",
        });
    }
    Ok(())
}

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_nan() || value <= 0.0 {
        return Err(HbcError::InvalidParameter {
            name,
            value,
            reason: "must be > 0",
        });
    }
    Ok(())
}
