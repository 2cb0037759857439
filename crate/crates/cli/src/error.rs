use std::fmt;
use std::path::Path;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Io,
    Input,
    Config,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Io => 1,
            Kind::Input => 2,
            Kind::Config => 3,
        }
    }
}

/// One failure, printed as a single JSON object on stderr.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
    /// File path or configuration key the failure refers to.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub at: Option<String>,
}

impl CliError {
    pub fn new(kind: Kind, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
            at: None,
        }
    }

    pub fn at(mut self, at: impl Into<String>) -> Self {
        self.at = Some(at.into());
        self
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::new(Kind::Io, format!("{}: {err}", path.display())).at(path.display().to_string())
    }

    pub fn input(path: &Path, err: impl fmt::Display) -> Self {
        CliError::new(Kind::Input, format!("{}: {err}", path.display())).at(path.display().to_string())
    }

    pub fn config(key: impl Into<String>, message: impl fmt::Display) -> Self {
        let key = key.into();
        CliError::new(Kind::Config, format!("{key}: {message}")).at(key)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&serde_json::json!({ "error": self })).expect("error serializes")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// All failures of one command; the exit code follows the first.
#[derive(Debug)]
pub struct Failure(pub Vec<CliError>);

impl Failure {
    pub fn exit_code(&self) -> i32 {
        self.0.first().map_or(1, |e| e.kind.exit_code())
    }
}

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        Failure(vec![e])
    }
}

impl From<Vec<CliError>> for Failure {
    fn from(e: Vec<CliError>) -> Self {
        Failure(e)
    }
}
