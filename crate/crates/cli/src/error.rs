use std::fmt;

/// An error paired with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub source: anyhow::Error,
}

pub type CliResult<T> = Result<T, CliError>;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;
/// Verification found a mismatch.
pub const EXIT_MISMATCH: u8 = 1;

impl CliError {
    pub fn config(msg: impl fmt::Display) -> Self {
        Self {
            code: EXIT_CONFIG,
            source: anyhow::anyhow!("{msg}"),
        }
    }

    pub fn numeric(msg: impl fmt::Display) -> Self {
        Self {
            code: EXIT_NUMERIC,
            source: anyhow::anyhow!("{msg}"),
        }
    }

    pub fn mismatch(msg: impl fmt::Display) -> Self {
        Self {
            code: EXIT_MISMATCH,
            source: anyhow::anyhow!("{msg}"),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.source)
    }
}

/// Tags a foreign error with an exit code and some context.
pub trait Classify<T> {
    fn config_err(self, ctx: impl fmt::Display) -> CliResult<T>;
    fn numeric_err(self, ctx: impl fmt::Display) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn config_err(self, ctx: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| CliError {
            code: EXIT_CONFIG,
            source: e.into().context(ctx.to_string()),
        })
    }

    fn numeric_err(self, ctx: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| CliError {
            code: EXIT_NUMERIC,
            source: e.into().context(ctx.to_string()),
        })
    }
}
