//! Experiment configuration files.

use std::path::PathBuf;

use ergolab_core::metrics::Observable;
use ergolab_core::pairwise::PairMetric;
use ergolab_core::partition::Partition;
use ergolab_core::systems::{PointSpec, SystemSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Name,
    Complexity,
    Meanequi,
    Expansivity,
    Spectral,
    DichotomyReport,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Name => "name",
            Task::Complexity => "complexity",
            Task::Meanequi => "meanequi",
            Task::Expansivity => "expansivity",
            Task::Spectral => "spectral",
            Task::DichotomyReport => "dichotomy-report",
        }
    }
}

/// What the estimators look at: a partition (α-names) or an observable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Partition(Partition),
    Observable(Observable),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Hamming,
    Dbar,
    Fbar,
    Fhat,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizons: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<PointSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
    /// Eigenvalue candidate `[re, im]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resamples: Option<usize>,
    /// Centre budget per curve point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    /// Wall-clock limit in seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_budget_secs: Option<f64>,
    /// Also write the orbit distance matrix of the spectral task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dump_matrix: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Target>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricKind>,
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
#[error("invalid config: {0}")]
pub struct ConfigError(pub String);

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

fn require<T: Clone>(v: &Option<T>, task: Task, name: &str) -> Result<T, ConfigError> {
    match v {
        Some(x) => Ok(x.clone()),
        None => invalid(format!("task `{}` requires `{name}`", task.as_str())),
    }
}

fn check_horizons(h: &[usize]) -> Result<(), ConfigError> {
    if h.len() < 3 || h[0] == 0 || h.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("`horizons` needs at least 3 strictly increasing positive values");
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<(), ConfigError> {
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("`eps` = {eps} must lie in (0, 1)"));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    /// The canned report comparing a rotation with a Bernoulli shift.
    pub fn dichotomy(seed: u64) -> Self {
        Self {
            task: Some(Task::DichotomyReport),
            system: None,
            target: None,
            metric: None,
            params: Params {
                eps: Some(0.1),
                samples: Some(2000),
                seed: Some(seed),
                ..Params::default()
            },
            output_dir: None,
        }
    }

    pub fn task(&self) -> Result<Task, ConfigError> {
        self.task.ok_or_else(|| ConfigError("no task given".into()))
    }

    pub fn seed(&self) -> u64 {
        self.params.seed.unwrap_or(0)
    }

    /// Short SHA-256 of the canonical JSON form (output directory excluded).
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))[..16].to_string()
    }

    /// The pair metric implied by the target and the `metric` field.
    pub fn pair_metric(&self) -> Result<PairMetric, ConfigError> {
        match (&self.target, self.metric) {
            (Some(Target::Partition(p)), None | Some(MetricKind::Hamming)) => Ok(PairMetric::Hamming {
                partition: p.clone(),
            }),
            (Some(Target::Observable(f)), None | Some(MetricKind::Fbar)) => Ok(PairMetric::Fbar {
                observable: f.clone(),
            }),
            (Some(Target::Observable(f)), Some(MetricKind::Fhat)) => Ok(PairMetric::Fhat {
                observable: f.clone(),
            }),
            (_, Some(MetricKind::Dbar)) => Ok(PairMetric::Dbar),
            (None, _) => invalid("a `target` partition or observable is required"),
            (Some(t), Some(m)) => invalid(format!("metric {m:?} does not apply to target {t:?}")),
        }
    }

    pub fn observable(&self) -> Result<Observable, ConfigError> {
        match &self.target {
            Some(Target::Observable(f)) => Ok(f.clone()),
            _ => invalid("this task needs an `observable` target"),
        }
    }

    pub fn partition(&self) -> Result<Partition, ConfigError> {
        match &self.target {
            Some(Target::Partition(p)) => Ok(p.clone()),
            _ => invalid("this task needs a `partition` target"),
        }
    }

    /// Checks task-specific requirements before any computation starts.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let task = self.task()?;
        let p = &self.params;
        if let Some(t) = p.time_budget_secs {
            if !(t > 0.0) {
                return invalid("`time_budget_secs` must be positive");
            }
        }
        if task != Task::DichotomyReport && self.system.is_none() {
            return invalid(format!("task `{}` requires `system`", task.as_str()));
        }
        match task {
            Task::Name => {
                self.partition()?;
                let pts = require(&p.points, task, "points")?;
                if pts.is_empty() {
                    return invalid("`points` is empty");
                }
                if require(&p.n, task, "n")? == 0 {
                    return invalid("`n` must be at least 1");
                }
            }
            Task::Complexity => {
                self.pair_metric()?;
                check_eps(require(&p.eps, task, "eps")?)?;
                check_horizons(&require(&p.horizons, task, "horizons")?)?;
                if p.samples == Some(0) {
                    return invalid("`samples` must be positive");
                }
                if p.resamples.is_some_and(|r| r < 20) {
                    return invalid("`resamples` must be at least 20");
                }
            }
            Task::Meanequi => {
                self.pair_metric()?;
                let eps = require(&p.eps, task, "eps")?;
                if !(eps > 0.0) {
                    return invalid("`eps` must be positive");
                }
                if require(&p.horizon, task, "horizon")? < 4 {
                    return invalid("`horizon` must be at least 4");
                }
            }
            Task::Expansivity => {
                self.observable()?;
                if !(require(&p.delta, task, "delta")? > 0.0) {
                    return invalid("`delta` must be positive");
                }
                if p.pairs.is_some_and(|n| n < 100) {
                    return invalid("`pairs` must be at least 100");
                }
                if p.horizon.is_some_and(|n| n < 4) {
                    return invalid("`horizon` must be at least 4");
                }
            }
            Task::Spectral => {
                self.observable()?;
                if !(require(&p.radius, task, "radius")? > 0.0) {
                    return invalid("`radius` must be positive");
                }
                check_horizons(&require(&p.horizons, task, "horizons")?)?;
                if p.samples.is_some_and(|m| m < 1000) {
                    return invalid("`samples` must be at least 1000 for L² estimates");
                }
                if let Some([re, im]) = p.lambda {
                    if ((re * re + im * im).sqrt() - 1.0).abs() > 1e-9 {
                        return invalid("`lambda` must lie on the unit circle");
                    }
                }
            }
            Task::DichotomyReport => {
                if let Some(eps) = p.eps {
                    check_eps(eps)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_validate() {
        let cfg = ExperimentConfig::from_json(
            r#"{"task":"name","system":{"family":"doubling","params":{}},
                "target":{"partition":{"kind":"circle_intervals","cuts":[0.0,0.5]}},
                "params":{"points":[0.375],"n":4}}"#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.hash().len(), 16);
    }

    #[test]
    fn missing_parameters_are_reported() {
        let cfg = ExperimentConfig::from_json(
            r#"{"task":"complexity","system":{"family":"identity","params":{}},
                "target":{"partition":{"kind":"trivial"}},"params":{"eps":0.1}}"#,
        )
        .unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.0.contains("horizons"), "{err}");
        assert!(ExperimentConfig::from_json(r#"{"task":"name","bogus":1}"#).is_err());
    }

    #[test]
    fn hash_ignores_output_dir() {
        let mut a = ExperimentConfig::dichotomy(42);
        let h = a.hash();
        a.output_dir = Some("elsewhere".into());
        assert_eq!(a.hash(), h);
        assert_ne!(ExperimentConfig::dichotomy(43).hash(), h);
    }
}
