//! Structured report envelope shared by the verification entry points and
//! the command-line tool.

use crate::error::Result;
use crate::params::ModelParams;
use serde::Serialize;
use std::io::Write;

/// One named check with a pass flag and arbitrary structured details.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub details: serde_json::Value,
}

impl CheckResult {
    pub fn new<T: Serialize>(name: &str, pass: bool, details: &T) -> Result<Self> {
        Ok(CheckResult {
            name: name.to_string(),
            pass,
            details: serde_json::to_value(details)?,
        })
    }
}

/// Versioned envelope: parameter echo, per-check results, and a summary.
#[derive(Debug, Clone, Serialize)]
pub struct ReportEnvelope {
    pub version: String,
    pub params: ModelParams,
    pub checks: Vec<CheckResult>,
    pub all_pass: bool,
}

impl ReportEnvelope {
    pub fn new(params: ModelParams, checks: Vec<CheckResult>) -> Self {
        let all_pass = checks.iter().all(|c| c.pass);
        ReportEnvelope {
            version: env!("CARGO_PKG_VERSION").to_string(),
            params,
            checks,
            all_pass,
        }
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)?;
        Ok(())
    }
}
