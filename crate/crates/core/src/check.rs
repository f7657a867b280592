use serde::Serialize;

/// One named numerical check: `measured` compared against `tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
}

impl Check {
    /// Passes when `measured ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            passed: measured <= tolerance,
            measured,
            tolerance,
        }
    }

    /// Passes when `measured ≥ tolerance`; the tolerance acts as a floor.
    pub fn at_least(name: impl Into<String>, measured: f64, floor: f64) -> Self {
        Check {
            name: name.into(),
            passed: measured >= floor,
            measured,
            tolerance: floor,
        }
    }

    pub fn flag(name: impl Into<String>, passed: bool) -> Self {
        Check {
            name: name.into(),
            passed,
            measured: if passed { 1.0 } else { 0.0 },
            tolerance: 1.0,
        }
    }
}
