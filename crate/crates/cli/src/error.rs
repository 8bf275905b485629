use std::fmt;
use std::path::Path;

use dcpl_core::DcplError;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, configs or input files; exit code 1.
    Validation(String),
    /// Failure while running a valid request; exit code 2.
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

fn is_validation(e: &DcplError) -> bool {
    match e {
        DcplError::Parse { .. } | DcplError::Invalid(_) | DcplError::Dimension { .. } | DcplError::Json(_) | DcplError::Csv(_) => true,
        DcplError::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
        DcplError::Context { source, .. } => is_validation(source),
        DcplError::Unstable { .. } => false,
    }
}

impl From<DcplError> for CliError {
    fn from(e: DcplError) -> Self {
        if is_validation(&e) {
            CliError::Validation(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn require_file(flag: &str, path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{flag}: file not found: {}", path.display())))
    }
}

pub fn require_dir(flag: &str, path: &Path) -> CliResult<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{flag}: directory not found: {}", path.display())))
    }
}

pub fn io(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}
