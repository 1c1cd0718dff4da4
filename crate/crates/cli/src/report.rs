use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, pass: value <= tolerance }
    }
}

/// Command output. Timing is written to stderr only, so stdout stays
/// byte-identical between runs.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub params: Value,
    pub seed: Option<u64>,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub data: Value,
    #[serde(skip)]
    pub text: String,
}

impl Report {
    pub fn new(command: &str, params: Value, seed: Option<u64>) -> Self {
        Self { command: command.into(), params, seed, checks: Vec::new(), pass: true, data: Value::Null, text: String::new() }
    }

    pub fn check(&mut self, check: Check) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    pub fn line(&mut self, line: impl AsRef<str>) {
        self.text.push_str(line.as_ref());
        self.text.push('\n');
    }

    pub fn render(&self) -> String {
        let mut out = format!("entlab {}", self.command);
        if let Some(seed) = self.seed {
            let _ = write!(out, " (seed {seed})");
        }
        out.push('\n');
        out.push_str(&self.text);
        if !self.checks.is_empty() {
            let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0).max(5);
            let _ = writeln!(out, "{:<width$}  {:>12}  {:>12}  result", "check", "value", "tolerance");
            for c in &self.checks {
                let _ = writeln!(
                    out,
                    "{:<width$}  {:>12}  {:>12}  {}",
                    c.name,
                    sig6(c.value),
                    sig6(c.tolerance),
                    if c.pass { "pass" } else { "FAIL" }
                );
            }
            let _ = writeln!(out, "overall: {}", if self.pass { "pass" } else { "FAIL" });
        }
        out
    }
}

/// Six significant digits, switching to exponent form outside `[1e-4, 1e6)`.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        format!("{:.*}", (5 - exp) as usize, x)
    } else {
        format!("{x:.5e}")
    }
}
