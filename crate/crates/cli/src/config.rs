//! Key-value config file (TOML) that can pre-set any command-line flag.
//! Flags given on the command line always win.

use std::path::Path;

#[derive(Debug, Default)]
pub struct FileConfig(toml::Table);

#[derive(Debug, thiserror::Error)]
pub enum ConfigFileError {
    #[error("cannot read config `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("config key `{key}`: expected {expected}")]
    Type { key: String, expected: &'static str },
}

impl FileConfig {
    pub fn empty() -> Self {
        FileConfig(toml::Table::new())
    }

    pub fn load(path: &Path) -> Result<Self, ConfigFileError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let table = text.parse::<toml::Table>().map_err(|e| ConfigFileError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(FileConfig(table))
    }

    fn type_err(key: &str, expected: &'static str) -> ConfigFileError {
        ConfigFileError::Type {
            key: key.to_string(),
            expected,
        }
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, ConfigFileError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_float()
                .or_else(|| v.as_integer().map(|i| i as f64))
                .map(Some)
                .ok_or_else(|| Self::type_err(key, "a number")),
        }
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>, ConfigFileError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_integer()
                .filter(|i| *i >= 0)
                .map(|i| Some(i as u64))
                .ok_or_else(|| Self::type_err(key, "a non-negative integer")),
        }
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, ConfigFileError> {
        Ok(self.u64(key)?.map(|v| v as usize))
    }

    pub fn string(&self, key: &str) -> Result<Option<String>, ConfigFileError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_str()
                .map(|s| Some(s.to_string()))
                .ok_or_else(|| Self::type_err(key, "a string")),
        }
    }

    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigFileError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => {
                let arr = v
                    .as_array()
                    .ok_or_else(|| Self::type_err(key, "an array of numbers"))?;
                arr.iter()
                    .map(|x| {
                        x.as_float()
                            .or_else(|| x.as_integer().map(|i| i as f64))
                            .ok_or_else(|| Self::type_err(key, "an array of numbers"))
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .map(Some)
            }
        }
    }
}
