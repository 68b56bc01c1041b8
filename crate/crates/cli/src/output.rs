//! Files written for a finished run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ergolab_core::cover::ComplexityCurve;
use ergolab_core::spectral::{orbit_distance_matrix, OrbitGeometry};
use ergolab_core::systems::make_system;
use ergolab_core::RandomPlan;

use crate::bundle::ReportBundle;
use crate::config::ExperimentConfig;
use crate::plot::{emit_plot, PlotPoint, PlotSeries};
use crate::run::{RunError, DEFAULT_L2_SAMPLES};

/// Largest orbit distance matrix the spectral task will dump.
pub const MAX_DUMP_HORIZON: usize = 512;

fn header_lines(bundle: &ReportBundle) -> String {
    let mut s = bundle.provenance.csv_header();
    s.push('\n');
    if bundle.budget_exceeded {
        s.push_str("# partial: time budget exceeded\n");
    }
    s
}

pub fn curve_csv(bundle: &ReportBundle, curve: &ComplexityCurve) -> String {
    let mut s = header_lines(bundle);
    s.push_str("n,K_est,K_lo,K_hi,eps,samples,seed,budget_hit\n");
    for p in &curve.points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            p.n,
            p.k_est,
            p.k_lo,
            p.k_hi,
            curve.eps,
            curve.samples,
            curve.seed,
            u8::from(p.budget_hit)
        );
    }
    s
}

pub fn geometry_csv(bundle: &ReportBundle, g: &OrbitGeometry, horizons: &[usize]) -> String {
    let mut s = header_lines(bundle);
    s.push_str("horizon,covering_count,radius,samples,seed\n");
    for &h in horizons {
        let _ = writeln!(s, "{h},{},{},{},{}", g.count_at(h), g.radius, g.sample_count, g.seed);
    }
    s
}

pub fn names_csv(bundle: &ReportBundle) -> String {
    let mut s = header_lines(bundle);
    let width = bundle.names.iter().map(|r| r.symbols.len()).max().unwrap_or(0);
    let cols: Vec<String> = (0..width).map(|i| format!("s{i}")).collect();
    let _ = writeln!(s, "{}", cols.join(","));
    for r in &bundle.names {
        let row: Vec<String> = r.symbols.iter().map(u32::to_string).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

pub fn expansivity_csv(bundle: &ReportBundle) -> String {
    let mut s = header_lines(bundle);
    s.push_str("id,delta,pairs,horizon,fraction,nonconverged_fraction\n");
    for e in &bundle.expansivity {
        let x = &e.estimate;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            e.id, x.delta, x.pairs, x.horizon, x.fraction, x.nonconverged_fraction
        );
    }
    s
}

pub fn report_json(bundle: &ReportBundle) -> Result<String, RunError> {
    let mut s = serde_json::to_string_pretty(bundle)?;
    s.push('\n');
    Ok(s)
}

fn write(dir: &Path, name: &str, contents: &str, written: &mut Vec<PathBuf>) -> Result<(), RunError> {
    let path = dir.join(name);
    fs::write(&path, contents)?;
    written.push(path);
    Ok(())
}

/// Writes every artefact of `bundle` into `dir` and returns the paths in
/// the order they were written.
pub fn write_outputs(bundle: &ReportBundle, config: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    fs::create_dir_all(dir)?;
    let header = bundle.provenance.csv_header();
    let mut written = Vec::new();

    write(dir, "report.json", &report_json(bundle)?, &mut written)?;
    let mut effective = config.clone();
    effective.output_dir = None;
    let stamped = serde_json::json!({ "config_hash": bundle.provenance.config_hash, "config": effective });
    write(dir, "config.json", &(serde_json::to_string_pretty(&stamped)? + "\n"), &mut written)?;

    if !bundle.names.is_empty() {
        write(dir, "names.csv", &names_csv(bundle), &mut written)?;
    }
    for c in &bundle.curves {
        write(dir, &format!("{}.csv", c.id), &curve_csv(bundle, &c.curve), &mut written)?;
        let series = PlotSeries {
            title: format!("{} ({:?})", c.id, c.boundedness),
            x_label: "n".into(),
            y_label: "K(n, eps)".into(),
            points: c
                .curve
                .points
                .iter()
                .map(|p| PlotPoint {
                    x: p.n as f64,
                    y: p.k_est as f64,
                    lo: Some(p.k_lo),
                    hi: Some(p.k_hi),
                })
                .collect(),
        };
        let path = dir.join(format!("{}.svg", c.id));
        emit_plot(&series, &path, &header)?;
        written.push(path);
    }
    for g in &bundle.geometries {
        let horizons = &g.classification.horizons;
        let geometry = &g.classification.geometry;
        write(dir, &format!("{}.csv", g.id), &geometry_csv(bundle, geometry, horizons), &mut written)?;
        let series = PlotSeries {
            title: format!("{} ({:?})", g.id, g.classification.verdict),
            x_label: "horizon".into(),
            y_label: "covering count".into(),
            points: horizons
                .iter()
                .map(|&h| PlotPoint {
                    x: h as f64,
                    y: geometry.count_at(h) as f64,
                    lo: None,
                    hi: None,
                })
                .collect(),
        };
        let path = dir.join(format!("{}.svg", g.id));
        emit_plot(&series, &path, &header)?;
        written.push(path);
    }
    if !bundle.expansivity.is_empty() {
        write(dir, "expansivity.csv", &expansivity_csv(bundle), &mut written)?;
    }
    if config.params.dump_matrix == Some(true) {
        if let (Some(spec), Ok(f)) = (&config.system, config.observable()) {
            let system = make_system(spec)?;
            let horizon = bundle
                .geometries
                .first()
                .map_or(0, |g| g.classification.geometry.horizon)
                .min(MAX_DUMP_HORIZON);
            let samples = config.params.samples.unwrap_or(DEFAULT_L2_SAMPLES);
            let dm = orbit_distance_matrix(&system, &f, horizon, samples, &RandomPlan::new(config.seed()))?;
            let mut s = header_lines(bundle);
            for i in 0..dm.len() {
                let row: Vec<String> = (0..dm.len()).map(|j| dm.get(i, j).to_string()).collect();
                let _ = writeln!(s, "{}", row.join(","));
            }
            write(dir, "orbit_distances.csv", &s, &mut written)?;
        }
    }
    Ok(written)
}
