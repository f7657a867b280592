use std::fmt::Write as _;

use gframe_core::{Check, Classification, FrameBounds, Tolerances};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub samples: usize,
    pub tolerances: Tolerances,
}

impl Provenance {
    pub fn new(seed: u64, samples: usize, tolerances: Tolerances) -> Self {
        Provenance {
            tool: "gframe",
            version: env!("CARGO_PKG_VERSION"),
            seed,
            samples,
            tolerances,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub subject: String,
    pub command: String,
    pub classification: Classification,
    pub bounds: FrameBounds,
    pub checks: Vec<Check>,
    /// Command-specific values: constants, dimensions, emitted paths.
    pub details: serde_json::Map<String, serde_json::Value>,
    pub passed: bool,
    pub provenance: Provenance,
}

impl Report {
    pub fn finish(mut self) -> Self {
        self.passed = self.checks.iter().all(|c| c.passed);
        self
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).expect("details are plain data");
        self.details.insert(key.to_string(), value);
    }

    pub fn extend_prefixed(&mut self, prefix: &str, checks: Vec<Check>) {
        self.checks.extend(checks.into_iter().map(|mut c| {
            c.name = format!("{prefix}.{}", c.name);
            c
        }));
    }
}

pub fn to_json(reports: &[Report]) -> String {
    let mut text = if reports.len() == 1 {
        serde_json::to_string_pretty(&reports[0])
    } else {
        serde_json::to_string_pretty(reports)
    }
    .expect("reports serialize");
    text.push('\n');
    text
}

fn flag(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn to_human(reports: &[Report]) -> String {
    let mut out = String::new();
    for r in reports {
        let c = &r.classification;
        let _ = writeln!(out, "{} ({})", r.subject, r.command);
        let _ = writeln!(
            out,
            "  frame: {}  complete: {}  riesz: {}  g-on: {}  orthonormal set: {}",
            flag(c.is_frame),
            flag(c.is_complete),
            flag(c.is_riesz_basis),
            flag(c.is_on_basis),
            flag(c.is_orthonormal_set)
        );
        let b = &r.bounds;
        let _ = writeln!(
            out,
            "  bounds: A = {:.6e}  B = {:.6e}  tight: {}  parseval: {}",
            b.lower,
            b.upper,
            flag(b.is_tight),
            flag(b.is_parseval)
        );
        let width = r.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
        let _ = writeln!(out, "  {:width$}  {:4}  {:>12}  {:>12}", "check", "", "measured", "tolerance");
        for ch in &r.checks {
            let _ = writeln!(
                out,
                "  {:width$}  {:4}  {:>12.4e}  {:>12.4e}",
                ch.name,
                if ch.passed { "PASS" } else { "FAIL" },
                ch.measured,
                ch.tolerance
            );
        }
        let _ = writeln!(out, "  overall: {}", if r.passed { "PASS" } else { "FAIL" });
    }
    out
}
