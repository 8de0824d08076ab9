use std::fmt;

/// A command failure with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub const INPUT: i32 = 1;
    pub const NUMERICAL: i32 = 2;

    pub fn input(message: impl Into<String>) -> Self {
        Self { code: Self::INPUT, message: message.into() }
    }

    /// Classifies a library error, prefixing `context`.
    pub fn from_lib(context: &str, e: liestat::Error) -> Self {
        let message = if context.is_empty() { e.to_string() } else { format!("{context}: {e}") };
        let code = if e.is_numerical() { Self::NUMERICAL } else { Self::INPUT };
        Self { code, message }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<liestat::Error> for Failure {
    fn from(e: liestat::Error) -> Self {
        Self::from_lib("", e)
    }
}
