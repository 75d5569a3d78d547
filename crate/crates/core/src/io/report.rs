use std::path::{Path, PathBuf};

use serde::Serialize;

use super::run::{CsvRow, CSV_HEADER};
use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::evolution::init_parameters;
use crate::fqs::{Probe, StepTarget};
use crate::gates::GateParam;
use crate::oracle::grid;
use crate::strategy::Registry;

pub(crate) fn read_rows(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Config(format!(
            "{}: header {:?} is not {CSV_HEADER:?}",
            path.display(),
            header.join(",")
        )));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// `(step, tau, energy, fidelity_exact, fidelity_ground)` rows of one trajectory file.
pub fn read_trajectory(path: impl AsRef<Path>) -> Result<Vec<(usize, f64, f64, Option<f64>, Option<f64>)>> {
    Ok(read_rows(path.as_ref())?
        .into_iter()
        .map(|r| (r.step, r.tau, r.energy, r.fidelity_exact, r.fidelity_ground))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileRow {
    pub step: usize,
    pub tau: f64,
    pub metric: String,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

/// Linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Per-checkpoint quantiles across runs for every metric present in all of them.
pub fn compare_report(paths: &[PathBuf]) -> Result<Vec<QuantileRow>> {
    if paths.is_empty() {
        return Err(Error::Argument("compare needs at least one CSV".into()));
    }
    let runs: Vec<Vec<CsvRow>> = paths.iter().map(|p| read_rows(p)).collect::<Result<_>>()?;
    let grid: Vec<(usize, f64)> = runs[0].iter().map(|r| (r.step, r.tau)).collect();
    for (p, run) in paths.iter().zip(&runs).skip(1) {
        let other: Vec<(usize, f64)> = run.iter().map(|r| (r.step, r.tau)).collect();
        if other.len() != grid.len() || other.iter().zip(&grid).any(|(a, b)| a.0 != b.0 || (a.1 - b.1).abs() > 1e-12) {
            return Err(Error::Alignment(format!(
                "{} does not share the checkpoints of {}",
                p.display(),
                paths[0].display()
            )));
        }
    }
    let metrics: [(&str, fn(&CsvRow) -> Option<f64>); 3] = [
        ("energy", |r| Some(r.energy)),
        ("fidelity_exact", |r| r.fidelity_exact),
        ("fidelity_ground", |r| r.fidelity_ground),
    ];
    let mut out = Vec::new();
    for (k, &(step, tau)) in grid.iter().enumerate() {
        for (name, get) in &metrics {
            let vals: Option<Vec<f64>> = runs.iter().map(|run| get(&run[k])).collect();
            let Some(mut v) = vals else { continue };
            v.sort_by(f64::total_cmp);
            out.push(QuantileRow {
                step,
                tau,
                metric: name.to_string(),
                min: v[0],
                q25: quantile(&v, 0.25),
                median: quantile(&v, 0.5),
                q75: quantile(&v, 0.75),
                max: v[v.len() - 1],
            });
        }
    }
    Ok(out)
}

pub fn quantile_csv(rows: &[QuantileRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(["step", "tau", "metric", "min", "q25", "median", "q75", "max"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LandscapeGrid {
    /// Angles on `[0, 4pi)` about the slot's current axis.
    Angle(usize),
    /// Near-uniform axes at the slot's current angle.
    Sphere(usize),
}

#[derive(Serialize)]
struct LandscapeRow {
    theta: f64,
    nx: f64,
    ny: f64,
    nz: f64,
    objective: f64,
}

/// Objective of the first non-identity term around slot `d` (0-based), at the
/// initial parameters of the first seed.
pub fn landscape_dump(config: &ExperimentConfig, d: usize, grid_spec: LandscapeGrid) -> Result<String> {
    let h = config.hamiltonian.build()?;
    let opt = Registry::builtin().get(&config.optimizer)?;
    let a = opt.prepare(&init_parameters(&config.base_ansatz(&h)?, &config.init, config.seeds[0])?)?;
    a.slot(d)?;
    let term = h
        .terms()
        .iter()
        .find(|t| !t.string.is_identity())
        .ok_or_else(|| Error::Config("Hamiltonian has only identity terms".into()))?;
    let target = StepTarget::new(term, config.step / config.sweep_config().divisor(&a) as f64, config.kind);
    let probe = Probe::new(&a, d, &target, config.mode)?;
    let prev = *probe.prev();
    let params: Vec<GateParam> = match grid_spec {
        LandscapeGrid::Angle(n) => grid::line(0.0, 4.0 * std::f64::consts::PI, n)
            .into_iter()
            .map(|theta| GateParam { theta, axis: prev.axis })
            .collect(),
        LandscapeGrid::Sphere(n) => grid::fibonacci_sphere(n)
            .into_iter()
            .map(|axis| GateParam { theta: prev.theta, axis })
            .collect(),
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    if params.is_empty() {
        w.write_record(["theta", "nx", "ny", "nz", "objective"])?;
    }
    for p in params {
        w.serialize(LandscapeRow {
            theta: p.theta,
            nx: p.axis[0],
            ny: p.axis[1],
            nz: p.axis[2],
            objective: probe.objective(&p),
        })?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
