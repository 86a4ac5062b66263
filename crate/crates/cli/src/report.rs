//! Errors, exit codes and output files.

use std::fmt;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use vecfekete::FeketeError;

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration; `field` is a dotted key path.
    Config { field: String, message: String },
    Io { path: PathBuf, message: String },
    Compute(FeketeError),
    /// The run completed but asserted tolerances were missed.
    Tolerance(Vec<String>),
}

impl CliError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Tolerance(_) => 1,
            CliError::Config { .. } => 2,
            CliError::Io { .. } | CliError::Compute(_) => 3,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let body = match self {
            CliError::Config { field, message } => {
                json!({ "kind": "config", "field": field, "message": message })
            }
            CliError::Io { path, message } => {
                json!({ "kind": "io", "path": path.display().to_string(), "message": message })
            }
            CliError::Compute(e) => json!({ "kind": "computation", "message": e.to_string() }),
            CliError::Tolerance(failures) => json!({ "kind": "tolerance", "failures": failures }),
        };
        json!({ "error": body })
    }
}

impl From<FeketeError> for CliError {
    fn from(e: FeketeError) -> Self {
        CliError::Compute(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Output directory plus the list of files written into it.
pub struct Output {
    pub dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl Output {
    pub fn create(dir: PathBuf) -> CliResult<Self> {
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Output {
            dir,
            written: Vec::new(),
        })
    }

    /// Writes `name` through `f`, which receives a buffered file writer.
    pub fn file(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<fs::File>) -> vecfekete::Result<()>,
    ) -> CliResult<()> {
        let path = self.dir.join(name);
        let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        std::io::Write::flush(&mut w).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(&path, e))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }
}

/// Collects tolerance failures and turns them into the final status.
#[derive(Debug, Default)]
pub struct Assertions {
    pub failures: Vec<String>,
}

impl Assertions {
    pub fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    pub fn finish(self) -> CliResult<()> {
        if self.failures.is_empty() {
            Ok(())
        } else {
            Err(CliError::Tolerance(self.failures))
        }
    }
}
