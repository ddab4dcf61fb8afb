//! CSV tables and plain-text summaries.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use scatterlab::fit::RateFit;

use crate::HarnessError;

/// Shortest decimal that round-trips to the same `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:?}")
}

pub fn format_optional(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// One checked claim in a summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct Summary {
    pub title: String,
    pub lines: Vec<String>,
    pub checks: Vec<Check>,
}

impl Summary {
    pub fn new(title: &str) -> Self {
        Summary {
            title: title.to_string(),
            ..Summary::default()
        }
    }

    pub fn line(&mut self, text: impl Into<String>) {
        self.lines.push(text.into());
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    /// A check that is skipped because its premise is absent.
    pub fn vacuous(&mut self, name: &str, detail: impl Into<String>) {
        self.line(format!("{name}: vacuous ({})", detail.into()));
    }

    pub fn fit_line(&mut self, label: &str, fit: &RateFit) {
        self.line(format!(
            "{label}: exponent {:.4} ± {:.4} over t in [{}, {}] ({} samples, rms {:.2e})",
            fit.exponent, fit.stderr, fit.t_lo, fit.t_hi, fit.samples, fit.residual
        ));
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", self.title).unwrap();
        writeln!(out, "{}", "=".repeat(self.title.chars().count())).unwrap();
        for l in &self.lines {
            writeln!(out, "{l}").unwrap();
        }
        if !self.checks.is_empty() {
            writeln!(out).unwrap();
            for c in &self.checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                writeln!(out, "[{status}] {}: {}", c.name, c.detail).unwrap();
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), HarnessError> {
        fs::write(path, self.render())?;
        Ok(())
    }
}

/// Files written by one command.
#[derive(Debug, Clone, Default)]
pub struct Outputs {
    pub files: Vec<PathBuf>,
    pub summary: Summary,
}
