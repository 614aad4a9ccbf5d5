//! Structured `key = value` configuration files.
//!
//! One assignment per line; `#` starts a comment; unknown keys are kept and
//! ignored by commands that do not use them. Command-line flags always win
//! over file values.

use std::collections::HashMap;
use std::path::Path;

#[derive(Debug, Default)]
pub struct FileConfig {
    values: HashMap<String, String>,
}

impl FileConfig {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut values = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!(
                    "{}:{}: expected `key = value`, got `{raw}`",
                    path.display(),
                    lineno + 1
                ));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get_str(&self, key: &str) -> Option<String> {
        self.values.get(key).cloned()
    }

    /// Typed lookup; a present-but-unparsable value is a usage error.
    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, super::CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                super::CliError::Usage(format!("config key `{key}`: cannot parse `{raw}`"))
            }),
        }
    }
}
