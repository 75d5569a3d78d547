use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::evolution::{evolve_with, init_parameters, CheckpointRow, InitPolicy, TrotterPlan};
use crate::oracle::Oracle;
use crate::strategy::Registry;

pub const CSV_HEADER: &str = "step,tau,energy,fidelity_exact,fidelity_ground";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct CsvRow {
    pub step: usize,
    pub tau: f64,
    pub energy: f64,
    pub fidelity_exact: Option<f64>,
    pub fidelity_ground: Option<f64>,
}

impl From<&CheckpointRow> for CsvRow {
    fn from(r: &CheckpointRow) -> Self {
        Self {
            step: r.step,
            tau: r.tau,
            energy: r.energy,
            fidelity_exact: r.fidelity_exact,
            fidelity_ground: r.fidelity_ground,
        }
    }
}

pub fn write_trajectory_csv(path: &Path, rows: &[CheckpointRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(CsvRow::from(r))?;
    }
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedSummary {
    pub seed: u64,
    pub csv: PathBuf,
    pub rows: Vec<CheckpointRow>,
    pub updates: u64,
    pub violations: u64,
    pub flat: u64,
    pub measurements: BTreeMap<usize, u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub metadata: PathBuf,
    pub slot_count: usize,
    pub term_count: usize,
    pub ground_energy: Option<f64>,
    pub seeds: Vec<SeedSummary>,
}

impl RunSummary {
    pub fn violations(&self) -> u64 {
        self.seeds.iter().map(|s| s.violations).sum()
    }
}

/// Runs every seed (in parallel), writing `seed-<n>.csv` files and `metadata.json`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunSummary> {
    config.validate()?;
    let h = config.hamiltonian.build()?;
    let base = config.base_ansatz(&h)?;
    let opt = Registry::builtin().get(&config.optimizer)?;
    let plan = TrotterPlan::with_step(&h, config.step, config.steps, config.kind)?;
    let oracle = match Oracle::new(&h) {
        Ok(o) => Some(o),
        Err(Error::Resource(msg)) => {
            log::warn!("fidelity columns omitted: {msg}");
            None
        }
        Err(e) => return Err(e),
    };
    let dir = config.output_dir();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let sweep = config.sweep_config();
    let seeds: Vec<SeedSummary> = config
        .seeds
        .par_iter()
        .map(|&seed| -> Result<SeedSummary> {
            let a = opt.prepare(&init_parameters(&base, &config.init, seed)?)?;
            let rec = evolve_with(&h, opt.as_ref(), &a, &plan, &sweep, config.checkpoint_every, oracle.as_ref())?;
            let csv = dir.join(format!("seed-{seed}.csv"));
            write_trajectory_csv(&csv, &rec.rows)?;
            log::info!("seed {seed}: final energy {}", rec.rows.last().map_or(f64::NAN, |r| r.energy));
            Ok(SeedSummary {
                seed,
                csv,
                rows: rec.rows,
                updates: rec.stats.updates,
                violations: rec.stats.violations,
                flat: rec.stats.flat,
                measurements: rec.stats.measurements,
            })
        })
        .collect::<Result<_>>()?;

    let slot_count = opt.prepare(&base)?.slot_count();
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    for s in &seeds {
        for (k, v) in &s.measurements {
            *counts.entry(*k).or_default() += v;
        }
    }
    let sigma = match config.init {
        InitPolicy::RandomAngleAxisYPerturbed { sigma } => Some(sigma),
        _ => None,
    };
    let meta = json!({
        "library": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
        "config": config,
        "seeds": config.seeds,
        "optimizer": opt.name(),
        "qubits": h.qubit_count(),
        "trotter_terms": h.len(),
        "parameterized_slots": slot_count,
        "step_divisor": sweep.divisor(&opt.prepare(&base)?),
        "perturbation_sigma": sigma,
        "ground_energy": oracle.as_ref().map(|o| o.ground_energy()),
        "ground_degeneracy": oracle.as_ref().map(|o| o.degeneracy()),
        "measurement_types_per_update": counts.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>(),
        "runs": seeds.iter().map(|s| json!({
            "seed": s.seed,
            "csv": s.csv.file_name().map(|n| n.to_string_lossy().into_owned()),
            "updates": s.updates,
            "flat_updates": s.flat,
            "improvement_violations": s.violations,
            "final": s.rows.last(),
        })).collect::<Vec<_>>(),
    });
    let metadata = dir.join("metadata.json");
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(&metadata, text + "\n").map_err(|e| Error::io(&metadata, e))?;
    Ok(RunSummary {
        output_dir: dir,
        metadata,
        slot_count,
        term_count: h.len(),
        ground_energy: oracle.as_ref().map(|o| o.ground_energy()),
        seeds,
    })
}
