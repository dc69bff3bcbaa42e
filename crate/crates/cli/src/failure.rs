use std::fmt;
use std::path::Path;

/// A failed command and the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments or configuration: exit 1.
    Usage(String),
    /// Input that cannot be read or does not fit together: exit 2.
    Data(String),
    /// Training diverged or similar: exit 3.
    Numeric(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::Data(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Numeric(m) => f.write_str(m),
        }
    }
}

impl From<hdmm_core::Error> for Failure {
    fn from(e: hdmm_core::Error) -> Self {
        if e.is_numeric() {
            Failure::Numeric(e.to_string())
        } else if matches!(e, hdmm_core::Error::Config(_)) {
            Failure::Usage(e.to_string())
        } else {
            Failure::Data(e.to_string())
        }
    }
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Data(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Failure::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use hdmm_core::Error;

    #[test]
    fn core_errors_map_to_exit_codes() {
        let code = |e: Error| Failure::from(e).code();
        assert_eq!(code(Error::Divergence { epoch: 3, loss: f64::NAN }), 3);
        assert_eq!(code(Error::Config("x".into())), 1);
        assert_eq!(code(Error::ZeroFrames), 2);
        assert_eq!(code(Error::Truncated { expected: 12, found: 4 }), 2);
    }
}
