use std::fmt;

/// Process exit codes. Scripts depend on these values.
pub mod code {
    pub const OK: u8 = 0;
    pub const FAILED: u8 = 1;
    pub const INVALID: u8 = 2;
    pub const CONNECTION: u8 = 3;
    pub const UNKNOWN_JOB: u8 = 4;
    pub const NOT_READY: u8 = 5;
    pub const WRITE: u8 = 6;
    pub const TIMEOUT: u8 = 7;
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn invalid(message: impl fmt::Display) -> Self {
        Self::new(code::INVALID, message.to_string())
    }

    pub fn failed(message: impl fmt::Display) -> Self {
        Self::new(code::FAILED, message.to_string())
    }

    pub fn write(message: impl fmt::Display) -> Self {
        Self::new(code::WRITE, message.to_string())
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;
