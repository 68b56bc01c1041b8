//! Task execution.

use std::time::{Duration, Instant};

use ergolab_core::cover::{classify_boundedness, complexity_curve, estimate_cover_number, CoverOptions, CurveOptions};
use ergolab_core::equicontinuity::{
    find_equipartition, mean_expansivity_estimate, verify_equipartition, EquiSearch, VerifyMode,
};
use ergolab_core::metrics::Observable;
use ergolab_core::pairwise::PairMetric;
use ergolab_core::partition::{name_word, Partition};
use ergolab_core::spectral::{classify_almost_periodic, eigen_residual};
use ergolab_core::systems::{golden_angle, make_system, SystemHandle, SystemSpec};
use ergolab_core::RandomPlan;
use num_complex::Complex64;

use crate::bundle::{
    NameRecord, NamedCurve, NamedEquipartition, NamedExpansivity, NamedGeometry, Provenance, ReportBundle, Verdict,
    VerdictValue,
};
use crate::config::{ConfigError, ExperimentConfig, Task};

pub const DEFAULT_SAMPLES: usize = 2000;
pub const DEFAULT_L2_SAMPLES: usize = 1000;
pub const DEFAULT_PAIRS: usize = 10_000;
pub const DEFAULT_EXPANSIVITY_HORIZON: usize = 1024;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] ergolab_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Plot(#[from] crate::plot::PlotError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl RunError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        use ergolab_core::Error as E;
        match self {
            RunError::Config(_) => 2,
            RunError::Core(E::BudgetExhausted { .. }) => 1,
            RunError::Core(_) => 2,
            _ => 1,
        }
    }
}

/// Wall-clock budget, checked between stages.
struct Clock {
    start: Instant,
    limit: Option<Duration>,
}

impl Clock {
    fn new(secs: Option<f64>) -> Self {
        Self {
            start: Instant::now(),
            limit: secs.map(Duration::from_secs_f64),
        }
    }

    fn exceeded(&self) -> bool {
        self.limit.is_some_and(|l| self.start.elapsed() > l)
    }
}

/// Runs the configured task and collects everything it produced.
///
/// When the time budget runs out the bundle comes back early with
/// `budget_exceeded` set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ReportBundle, RunError> {
    config.validate()?;
    let task = config.task()?;
    let mut bundle = ReportBundle::new(Provenance::new(config.hash(), config.seed()), task);
    let clock = Clock::new(config.params.time_budget_secs);
    match task {
        Task::Name => run_names(config, &mut bundle)?,
        Task::Complexity => run_complexity(config, &mut bundle)?,
        Task::Meanequi => run_meanequi(config, &mut bundle)?,
        Task::Expansivity => run_expansivity(config, &mut bundle)?,
        Task::Spectral => run_spectral(config, &mut bundle)?,
        Task::DichotomyReport => run_dichotomy(config, &mut bundle, &clock)?,
    }
    if clock.exceeded() {
        flag_partial(&mut bundle);
    }
    Ok(bundle)
}

fn flag_partial(bundle: &mut ReportBundle) {
    if !bundle.budget_exceeded {
        bundle.budget_exceeded = true;
        bundle.notes.push("time budget exceeded; results are partial".into());
    }
}

fn system_of(config: &ExperimentConfig) -> Result<(SystemSpec, SystemHandle), RunError> {
    let spec = config
        .system
        .clone()
        .ok_or_else(|| ConfigError("missing `system`".into()))?;
    let handle = make_system(&spec)?;
    Ok((spec, handle))
}

fn target_label(metric: &PairMetric) -> String {
    match metric {
        PairMetric::Hamming { partition } => format!("hamming[{}]", partition_label(partition)),
        PairMetric::Dbar => "dbar".into(),
        PairMetric::Fbar { observable } => format!("fbar[{}]", observable_label(observable)),
        PairMetric::Fhat { observable } => format!("fhat[{}]", observable_label(observable)),
    }
}

fn partition_label(p: &Partition) -> String {
    match p {
        Partition::CircleIntervals { cuts } => format!("intervals{cuts:?}"),
        Partition::Cylinder { coords, alphabet } => format!("cylinder{coords:?}/{alphabet}"),
        Partition::Trivial => "trivial".into(),
        Partition::Product { left, right } => format!("{}x{}", partition_label(left), partition_label(right)),
    }
}

fn observable_label(f: &Observable) -> String {
    match f {
        Observable::Character { k } => format!("character({k})"),
        Observable::CellIndicator { partition, label } => {
            format!("indicator({}, {label})", partition_label(partition))
        }
        Observable::CoordinateRead { index } => format!("coordinate({index})"),
        Observable::Constant { c } => format!("constant({c})"),
        Observable::Table { partition, .. } => format!("table({})", partition_label(partition)),
    }
}

fn subject(spec: &SystemSpec, what: &str) -> String {
    format!("{} / {what}", spec.describe())
}

fn run_names(config: &ExperimentConfig, bundle: &mut ReportBundle) -> Result<(), RunError> {
    let (_, system) = system_of(config)?;
    let partition = config.partition()?;
    let n = config.params.n.unwrap_or(1);
    for spec in config.params.points.iter().flatten() {
        let x = system.point_from_spec(spec)?;
        let word = name_word(&system, &partition, &x, n)?;
        bundle.names.push(NameRecord {
            point: serde_json::to_value(spec)?,
            symbols: word.symbols,
        });
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn curve_entry(
    id: &str,
    spec: &SystemSpec,
    system: &SystemHandle,
    metric: &PairMetric,
    horizons: &[usize],
    eps: f64,
    samples: usize,
    plan: &RandomPlan,
    options: CurveOptions,
    bundle: &mut ReportBundle,
) -> Result<(), RunError> {
    let curve = complexity_curve(system, metric, horizons, eps, samples, plan, options)?;
    let boundedness = classify_boundedness(&curve);
    bundle.verdicts.push(Verdict {
        subject: subject(spec, &target_label(metric)),
        value: VerdictValue::Boundedness(boundedness),
        evidence: id.into(),
    });
    bundle.curves.push(NamedCurve {
        id: id.into(),
        system: spec.clone(),
        curve,
        boundedness,
    });
    Ok(())
}

fn run_complexity(config: &ExperimentConfig, bundle: &mut ReportBundle) -> Result<(), RunError> {
    let (spec, system) = system_of(config)?;
    let metric = config.pair_metric()?;
    let p = &config.params;
    let options = CurveOptions {
        resamples: p.resamples.unwrap_or(ergolab_core::cover::DEFAULT_RESAMPLES),
        budget: p.budget,
    };
    curve_entry(
        "curve",
        &spec,
        &system,
        &metric,
        p.horizons.as_deref().unwrap_or_default(),
        p.eps.unwrap_or_default(),
        p.samples.unwrap_or(DEFAULT_SAMPLES),
        &RandomPlan::new(config.seed()),
        options,
        bundle,
    )
}

#[allow(clippy::too_many_arguments)]
fn equipartition_entry(
    id: &str,
    spec: &SystemSpec,
    system: &SystemHandle,
    metric: &PairMetric,
    eps: f64,
    horizon: usize,
    samples: usize,
    k_max: Option<usize>,
    plan: &RandomPlan,
    bundle: &mut ReportBundle,
) -> Result<(), RunError> {
    let xs = system.sample_measure(samples, plan);
    let search = find_equipartition(system, metric, eps, &xs, horizon, k_max)?;
    let mut verification = Vec::new();
    let mut cover_count = None;
    let what = subject(spec, &format!("{} eps={eps}", target_label(metric)));
    bundle.verdicts.push(Verdict {
        subject: what.clone(),
        value: VerdictValue::Equipartition(search.is_found()),
        evidence: id.into(),
    });
    if let EquiSearch::Found(ep) = &search {
        verification.push(verify_equipartition(ep, system, &[horizon / 4, horizon / 2, horizon], VerifyMode::Limsup)?);
        verification.push(verify_equipartition(ep, system, &[horizon], VerifyMode::Uniform)?);
        let opts = CoverOptions {
            max_centers: None,
            seed: plan.master_seed,
        };
        let k = estimate_cover_number(system, &xs, None, horizon, eps, metric, opts)?.count();
        cover_count = Some(k);
        bundle.verdicts.push(Verdict {
            subject: format!("{what} cover"),
            value: VerdictValue::CoverWithinPartition(k <= ep.k()),
            evidence: id.into(),
        });
        let modes: Vec<bool> = verification.iter().map(|r| r.pass).collect();
        if modes[0] != modes[1] {
            bundle
                .notes
                .push(format!("{id}: limsup and uniform checks disagree ({modes:?})"));
        }
    }
    bundle.equipartitions.push(NamedEquipartition {
        id: id.into(),
        system: spec.clone(),
        search,
        verification,
        cover_count,
    });
    Ok(())
}

fn run_meanequi(config: &ExperimentConfig, bundle: &mut ReportBundle) -> Result<(), RunError> {
    let (spec, system) = system_of(config)?;
    let metric = config.pair_metric()?;
    let p = &config.params;
    equipartition_entry(
        "equipartition",
        &spec,
        &system,
        &metric,
        p.eps.unwrap_or_default(),
        p.horizon.unwrap_or_default(),
        p.samples.unwrap_or(DEFAULT_SAMPLES),
        p.k_max,
        &RandomPlan::new(config.seed()).derive("samples"),
        bundle,
    )
}

#[allow(clippy::too_many_arguments)]
fn expansivity_entry(
    id: &str,
    spec: &SystemSpec,
    system: &SystemHandle,
    f: &Observable,
    delta: f64,
    pairs: usize,
    horizon: usize,
    plan: &RandomPlan,
    bundle: &mut ReportBundle,
) -> Result<(), RunError> {
    let estimate = mean_expansivity_estimate(system, f, delta, pairs, horizon, plan)?;
    bundle.expansivity.push(NamedExpansivity {
        id: id.into(),
        system: spec.clone(),
        estimate,
    });
    Ok(())
}

fn run_expansivity(config: &ExperimentConfig, bundle: &mut ReportBundle) -> Result<(), RunError> {
    let (spec, system) = system_of(config)?;
    let p = &config.params;
    expansivity_entry(
        "expansivity",
        &spec,
        &system,
        &config.observable()?,
        p.delta.unwrap_or_default(),
        p.pairs.unwrap_or(DEFAULT_PAIRS),
        p.horizon.unwrap_or(DEFAULT_EXPANSIVITY_HORIZON),
        &RandomPlan::new(config.seed()),
        bundle,
    )
}

#[allow(clippy::too_many_arguments)]
fn geometry_entry(
    id: &str,
    spec: &SystemSpec,
    system: &SystemHandle,
    f: &Observable,
    horizons: &[usize],
    radius: f64,
    samples: usize,
    lambda: Option<Complex64>,
    plan: &RandomPlan,
    bundle: &mut ReportBundle,
) -> Result<(), RunError> {
    let classification = classify_almost_periodic(system, f, horizons, radius, samples, plan)?;
    let eigen_residual = lambda
        .map(|l| eigen_residual(system, f, l, samples, plan))
        .transpose()?;
    bundle.verdicts.push(Verdict {
        subject: subject(spec, &format!("{} r={radius}", observable_label(f))),
        value: VerdictValue::AlmostPeriodicity(classification.verdict),
        evidence: id.into(),
    });
    bundle.geometries.push(NamedGeometry {
        id: id.into(),
        system: spec.clone(),
        classification,
        eigen_residual,
    });
    Ok(())
}

fn run_spectral(config: &ExperimentConfig, bundle: &mut ReportBundle) -> Result<(), RunError> {
    let (spec, system) = system_of(config)?;
    let p = &config.params;
    geometry_entry(
        "orbit",
        &spec,
        &system,
        &config.observable()?,
        p.horizons.as_deref().unwrap_or_default(),
        p.radius.unwrap_or_default(),
        p.samples.unwrap_or(DEFAULT_L2_SAMPLES),
        p.lambda.map(|[re, im]| Complex64::new(re, im)),
        &RandomPlan::new(config.seed()),
        bundle,
    )?;
    bundle
        .notes
        .push("almost-periodicity verdicts concern the chosen observable only, not the spectrum of the system".into());
    Ok(())
}

/// Rotation against Bernoulli shift, plus the matching equipartition,
/// orbit and expansivity checks.
fn run_dichotomy(config: &ExperimentConfig, bundle: &mut ReportBundle, clock: &Clock) -> Result<(), RunError> {
    let p = &config.params;
    let eps = p.eps.unwrap_or(0.1);
    let m = p.samples.unwrap_or(DEFAULT_SAMPLES);
    let plan = RandomPlan::new(config.seed());
    let rotation = SystemSpec::Rotation { theta: golden_angle() };
    let bernoulli = SystemSpec::BernoulliShift { p: 0.5, alphabet_size: 2 };
    let doubling = SystemSpec::Doubling {};
    let (rot, bern, dbl) = (make_system(&rotation)?, make_system(&bernoulli)?, make_system(&doubling)?);
    let halves = PairMetric::Hamming { partition: Partition::halves() };
    let cylinder = PairMetric::Hamming { partition: Partition::cylinder(vec![0], 2)? };
    let chi = Observable::Character { k: 1 };
    let indicator = Observable::CellIndicator { partition: Partition::halves(), label: 0 };
    let options = CurveOptions::default();

    type Stage<'a> = Box<dyn FnOnce(&mut ReportBundle) -> Result<(), RunError> + 'a>;
    let stages: Vec<Stage> = vec![
        Box::new(|b| curve_entry("rotation_halves", &rotation, &rot, &halves, &[16, 64, 256, 1024, 4096], eps, m, &plan, options, b)),
        Box::new(|b| curve_entry("bernoulli_cylinder", &bernoulli, &bern, &cylinder, &[8, 16, 32, 64], eps, m, &plan, options, b)),
        Box::new(|b| {
            let metric = PairMetric::Fbar { observable: chi.clone() };
            equipartition_entry("rotation_character_partition", &rotation, &rot, &metric, 0.5, 256, m, None, &plan.derive("equi"), b)
        }),
        Box::new(|b| equipartition_entry("rotation_halves_partition", &rotation, &rot, &halves, 0.2, 1024, m, None, &plan.derive("equi"), b)),
        Box::new(|b| {
            let metric = PairMetric::Fbar { observable: chi.clone() };
            equipartition_entry("doubling_character_partition", &doubling, &dbl, &metric, 0.4, 256, m, Some(100), &plan.derive("equi"), b)
        }),
        Box::new(|b| {
            geometry_entry("rotation_character_orbit", &rotation, &rot, &chi, &[64, 256, 1024], 0.5, DEFAULT_L2_SAMPLES, None, &plan.derive("l2"), b)
        }),
        Box::new(|b| {
            geometry_entry("doubling_character_orbit", &doubling, &dbl, &chi, &[16, 32, 64], 1.0, DEFAULT_L2_SAMPLES, None, &plan.derive("l2"), b)
        }),
        Box::new(|b| expansivity_entry("doubling_indicator_expansivity", &doubling, &dbl, &indicator, 0.4, DEFAULT_PAIRS, DEFAULT_EXPANSIVITY_HORIZON, &plan.derive("pairs"), b)),
        Box::new(|b| expansivity_entry("rotation_character_expansivity", &rotation, &rot, &chi, 1.9, DEFAULT_PAIRS, 64, &plan.derive("pairs"), b)),
    ];
    for stage in stages {
        if clock.exceeded() {
            flag_partial(bundle);
            break;
        }
        stage(bundle)?;
    }
    bundle
        .notes
        .push("almost-periodicity verdicts concern the chosen observable only, not the spectrum of the system".into());
    Ok(())
}
