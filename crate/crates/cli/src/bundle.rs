//! The structured result of one experiment run.

use ergolab_core::cover::{Boundedness, ComplexityCurve};
use ergolab_core::equicontinuity::{EquiSearch, ExpansivityEstimate, VerifyReport};
use ergolab_core::spectral::{AlmostPeriodicity, ApClassification};
use ergolab_core::systems::SystemSpec;
use serde::{Deserialize, Serialize};

use crate::config::Task;

pub const TOOL: &str = "ergolab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(config_hash: String, seed: u64) -> Self {
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            config_hash,
            seed,
        }
    }

    /// First line of every CSV file.
    pub fn csv_header(&self) -> String {
        format!("# {} v{} config={}", self.tool, self.version, self.config_hash)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NameRecord {
    pub point: serde_json::Value,
    pub symbols: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedCurve {
    pub id: String,
    pub system: SystemSpec,
    pub curve: ComplexityCurve,
    pub boundedness: Boundedness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedEquipartition {
    pub id: String,
    pub system: SystemSpec,
    pub search: EquiSearch,
    /// Re-checks of a found partition in limsup and uniform mode.
    pub verification: Vec<VerifyReport>,
    /// Greedy cover of the same samples at the same `(N, ε)`.
    pub cover_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedGeometry {
    pub id: String,
    pub system: SystemSpec,
    pub classification: ApClassification,
    /// `‖U f - λ f‖` when an eigenvalue candidate was given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigen_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedExpansivity {
    pub id: String,
    pub system: SystemSpec,
    pub estimate: ExpansivityEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "property", content = "value", rename_all = "snake_case")]
pub enum VerdictValue {
    Boundedness(Boundedness),
    AlmostPeriodicity(AlmostPeriodicity),
    Equipartition(bool),
    /// Cover count at `(N, ε)` does not exceed the equipartition size.
    CoverWithinPartition(bool),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub subject: String,
    #[serde(flatten)]
    pub value: VerdictValue,
    /// Id of the curve, geometry or partition the verdict was read from.
    pub evidence: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub provenance: Provenance,
    pub task: Task,
    /// Set when the time budget ran out; the bundle is then partial.
    pub budget_exceeded: bool,
    pub verdicts: Vec<Verdict>,
    #[serde(default)]
    pub names: Vec<NameRecord>,
    #[serde(default)]
    pub curves: Vec<NamedCurve>,
    #[serde(default)]
    pub equipartitions: Vec<NamedEquipartition>,
    #[serde(default)]
    pub geometries: Vec<NamedGeometry>,
    #[serde(default)]
    pub expansivity: Vec<NamedExpansivity>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl ReportBundle {
    pub fn new(provenance: Provenance, task: Task) -> Self {
        Self {
            provenance,
            task,
            budget_exceeded: false,
            verdicts: Vec::new(),
            names: Vec::new(),
            curves: Vec::new(),
            equipartitions: Vec::new(),
            geometries: Vec::new(),
            expansivity: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Ids of everything a verdict may point at.
    fn evidence_ids(&self) -> impl Iterator<Item = &str> {
        self.curves
            .iter()
            .map(|c| c.id.as_str())
            .chain(self.equipartitions.iter().map(|e| e.id.as_str()))
            .chain(self.geometries.iter().map(|g| g.id.as_str()))
    }

    /// Every verdict refers to evidence stored in this bundle.
    pub fn is_traceable(&self) -> bool {
        self.verdicts
            .iter()
            .all(|v| self.evidence_ids().any(|id| id == v.evidence))
    }

    pub fn verdict(&self, subject: &str) -> Option<&VerdictValue> {
        self.verdicts.iter().find(|v| v.subject == subject).map(|v| &v.value)
    }
}
