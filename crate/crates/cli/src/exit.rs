pub const USAGE: u8 = 1;
pub const DATA: u8 = 2;
pub const MISMATCH: u8 = 3;

/// An error with the process exit code it maps to. Anything converted with
/// `?` is a data error.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self {
            code: USAGE,
            error: anyhow::anyhow!(msg.into()),
        }
    }

    pub fn mismatch(msg: impl Into<String>) -> Self {
        Self {
            code: MISMATCH,
            error: anyhow::anyhow!(msg.into()),
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        Self {
            code: DATA,
            error: e.into(),
        }
    }
}
