//! Residual reports and the JSON config/report schemas used by the CLI.

use serde::{Deserialize, Serialize};

use crate::sample::Orientation;

/// Where a maximal residual was observed: enough to re-evaluate it.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct Witness {
    /// Base chart point.
    pub point: Vec<f64>,
    /// Fiber sphere parameter (a,b,c), when the check samples the fiber.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_param: Option<[f64; 3]>,
    /// Frame-section indices involved (coordinate frame {∂_i, dx^i}).
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub sections: Vec<usize>,
    /// Which sub-residual of the check produced the maximum.
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub aspect: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResidualReport {
    pub check_name: String,
    pub max_residual: f64,
    pub witness: Witness,
    pub verdict: bool,
    pub tolerance: f64,
}

impl ResidualReport {
    pub fn new(name: &str, tolerance: f64) -> Self {
        ResidualReport {
            check_name: name.to_string(),
            max_residual: 0.0,
            witness: Witness::default(),
            verdict: true,
            tolerance,
        }
    }

    /// Fold in one observation, keeping the argmax witness (first wins ties).
    pub fn observe(&mut self, residual: f64, witness: Witness) {
        if self.witness.point.is_empty() || residual > self.max_residual {
            self.max_residual = residual;
            self.witness = witness;
        }
        self.verdict = self.max_residual <= self.tolerance;
    }

    pub fn merge(&mut self, other: &ResidualReport) {
        if other.max_residual >= self.max_residual {
            self.max_residual = other.max_residual;
            self.witness = other.witness.clone();
        }
        self.verdict = self.max_residual <= self.tolerance;
    }
}

/// CLI configuration (JSON).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub structure: StructureSpec,
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_fiber_samples")]
    pub fiber_samples: usize,
    #[serde(default)]
    pub orientation: Orientation,
    #[serde(default)]
    pub timings: bool,
}

fn default_schema_version() -> u32 {
    1
}
fn default_points() -> usize {
    16
}
fn default_seed() -> u64 {
    7
}
fn default_tolerance() -> f64 {
    1e-8
}
fn default_fiber_samples() -> usize {
    32
}

/// Either a catalog id ("flat4", "hopf", "flat4+frameRotation", …) or an
/// inline definition with polynomial/rational coefficient expressions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StructureSpec {
    Id(String),
    Custom(CustomStructure),
}

/// Inline structure: a bihermitian quadruple with twist, entries given as
/// expression strings in x1..xm (e.g. "1/(x1^2+x2^2+x3^2+x4^2)").
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CustomStructure {
    pub id: String,
    pub dim: usize,
    /// Half-width of the sampling box.
    #[serde(default = "default_box")]
    pub box_half: f64,
    #[serde(default)]
    pub excluded_radius: f64,
    pub g: Vec<Vec<String>>,
    /// 2-form b as entries b[i][j] on i<j tuples of a full matrix; optional.
    #[serde(default)]
    pub b: Option<Vec<Vec<String>>>,
    /// 3-form h coefficients keyed by "ijk" strings (1-based), optional.
    #[serde(default)]
    pub h: Option<std::collections::BTreeMap<String, String>>,
    /// Almost complex structures J+ and J- (matrices of expressions).
    pub j_plus: Vec<Vec<String>>,
    pub j_minus: Vec<Vec<String>>,
}

fn default_box() -> f64 {
    1.5
}

/// One check entry in the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CheckEntry {
    pub name: String,
    pub paper_anchor: String,
    pub max_residual: f64,
    pub witness: Witness,
    pub verdict: String,
    pub elapsed_ms: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// The report written by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub schema_version: u32,
    pub structure: String,
    pub seed: u64,
    pub points: usize,
    pub fiber_samples: usize,
    pub tolerance: f64,
    pub orientation: Orientation,
    pub torsion_bracket: String,
    pub checks: Vec<CheckEntry>,
    pub all_passed: bool,
}
