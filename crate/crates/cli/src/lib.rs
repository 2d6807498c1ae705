//! Command-line front end: configuration, subcommands and the `verify` suite.

pub mod commands;
pub mod config;
pub mod verify;

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

pub use config::RunConfig;

/// Version of every JSON document the CLI writes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot write output: {0}")]
    Output(String),
    #[error(transparent)]
    Core(#[from] mosq_core::Error),
    #[error("{0} verification check(s) failed")]
    VerifyFailed(usize),
}

impl CliError {
    /// Process exit status: 2 configuration, 3 numerical failure, 4 inconsistent
    /// classification, 1 failed verification.
    pub fn exit_code(&self) -> i32 {
        use mosq_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Output(_) => 2,
            CliError::VerifyFailed(_) => 1,
            CliError::Core(E::Inconsistent(_)) => 4,
            CliError::Core(E::InvalidModel(_) | E::UnsupportedVariant(_) | E::InvalidOrder(_)) => 2,
            CliError::Core(_) => 3,
        }
    }
}

/// Settings shared by every subcommand.
#[derive(Clone, Debug)]
pub struct Options {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub seed: u64,
}

impl Options {
    /// The configuration file with command-line tolerance overrides applied.
    pub fn load(&self) -> Result<RunConfig, CliError> {
        let path = self
            .config
            .as_deref()
            .ok_or_else(|| CliError::Config("--config PATH is required for this command".into()))?;
        let mut cfg = RunConfig::load(path)?;
        self.apply_overrides(&mut cfg.numerics)?;
        Ok(cfg)
    }

    pub fn apply_overrides(&self, num: &mut mosq_core::Numerics) -> Result<(), CliError> {
        if let Some(r) = self.rtol {
            num.rtol = r;
        }
        if let Some(a) = self.atol {
            num.atol = a;
        }
        if !(num.rtol > 0.0 && num.atol > 0.0 && num.rtol.is_finite() && num.atol.is_finite()) {
            return Err(CliError::Config(format!(
                "tolerances must be positive (rtol {}, atol {})",
                num.rtol, num.atol
            )));
        }
        Ok(())
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        write_file(&self.out, name, contents)
    }

    /// Pretty JSON with `schema_version` as the first field.
    pub fn write_json<T: Serialize>(&self, name: &str, body: &T) -> Result<PathBuf, CliError> {
        self.write(name, &versioned_json(body)?)
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    Ok(path)
}

/// Print to stdout, ignoring a closed pipe.
pub fn print_lines(lines: &[String]) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    for l in lines {
        if writeln!(out, "{l}").is_err() {
            return;
        }
    }
}

pub fn versioned_json<T: Serialize>(body: &T) -> Result<String, CliError> {
    #[derive(Serialize)]
    struct Versioned<'a, T> {
        schema_version: u32,
        #[serde(flatten)]
        body: &'a T,
    }
    let mut text = serde_json::to_string_pretty(&Versioned {
        schema_version: SCHEMA_VERSION,
        body,
    })
    .map_err(|e| CliError::Output(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use mosq_core::Error as E;

    #[test]
    fn exit_codes_follow_the_failure_class() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::VerifyFailed(1).exit_code(), 1);
        assert_eq!(CliError::Core(E::Inconsistent("x".into())).exit_code(), 4);
        assert_eq!(CliError::Core(E::InvalidModel("x".into())).exit_code(), 2);
        assert_eq!(CliError::Core(E::NegativeDensity(-1.0)).exit_code(), 3);
    }

    #[test]
    fn json_leads_with_the_schema_version() {
        let text = versioned_json(&serde_json::json!({"command": "x"})).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert!(text.trim_start().starts_with("{\n  \"schema_version\": 1"));
    }
}
