//! Configuration, Hamiltonian files and run outputs.

mod report;
mod run;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ansatz::{Ansatz, Preset};
use crate::error::{Error, Result};
use crate::evolution::{InitPolicy, SweepConfig};
use crate::fqs::{EvalMode, TimeKind};
use crate::pauli::Hamiltonian;
use crate::strategy::Registry;

pub use report::{compare_report, landscape_dump, quantile_csv, read_trajectory, LandscapeGrid, QuantileRow};
pub use run::{run_experiment, write_trajectory_csv, RunSummary, SeedSummary, CSV_HEADER};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "FQS_OUTPUT_DIR";

pub fn parse_hamiltonian_file(path: impl AsRef<Path>) -> Result<Hamiltonian> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Hamiltonian::parse_text(&text)
}

pub fn write_hamiltonian_file(path: impl AsRef<Path>, h: &Hamiltonian) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, h.to_text()).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum HamiltonianSource {
    Heisenberg1d {
        sites: usize,
        #[serde(default = "one")]
        j: f64,
        #[serde(default = "one")]
        h: f64,
        #[serde(default = "yes")]
        periodic: bool,
    },
    /// Text file of `coefficient LABELS` lines; relative paths resolve against the config file.
    File { path: PathBuf },
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl HamiltonianSource {
    pub fn build(&self) -> Result<Hamiltonian> {
        match self {
            HamiltonianSource::Heisenberg1d { sites, j, h, periodic } => Hamiltonian::heisenberg_1d(*sites, *j, *h, *periodic),
            HamiltonianSource::File { path } => parse_hamiltonian_file(path),
        }
    }

    /// Accepts a file path or `heisenberg1d[:sites[:j[:h[:open]]]]`.
    pub fn from_cli(arg: &str) -> Result<Self> {
        let mut parts = arg.split(':');
        if parts.next() != Some("heisenberg1d") {
            return Ok(HamiltonianSource::File { path: arg.into() });
        }
        let bad = |what: &str| Error::Argument(format!("bad {what} in {arg:?}"));
        let sites = parts.next().map(|s| s.parse().map_err(|_| bad("site count"))).transpose()?.unwrap_or(5);
        let j = parts.next().map(|s| s.parse().map_err(|_| bad("coupling"))).transpose()?.unwrap_or(1.0);
        let h = parts.next().map(|s| s.parse().map_err(|_| bad("field"))).transpose()?.unwrap_or(1.0);
        let periodic = match parts.next() {
            None | Some("periodic") => true,
            Some("open") => false,
            Some(_) => return Err(bad("boundary")),
        };
        Ok(HamiltonianSource::Heisenberg1d { sites, j, h, periodic })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzSpec {
    pub preset: Preset,
    #[serde(default)]
    pub layers: usize,
    /// Defaults to the Hamiltonian's qubit count.
    #[serde(default)]
    pub qubits: Option<usize>,
}

fn default_init() -> InitPolicy {
    InitPolicy::RandomAxisFixedAnglePi
}

fn default_one() -> usize {
    1
}

fn default_kind() -> TimeKind {
    TimeKind::Imaginary
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub hamiltonian: HamiltonianSource,
    pub ansatz: AnsatzSpec,
    pub optimizer: String,
    #[serde(default = "default_kind")]
    pub kind: TimeKind,
    /// Time step per Trotter step.
    pub step: f64,
    pub steps: usize,
    #[serde(default = "default_one")]
    pub sweeps_per_term: usize,
    #[serde(default)]
    pub mode: EvalMode,
    pub seeds: Vec<u64>,
    #[serde(default = "default_one")]
    pub checkpoint_every: usize,
    #[serde(default = "default_init")]
    pub init: InitPolicy,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut c: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let HamiltonianSource::File { path } = &mut c.hamiltonian {
            if path.is_relative() {
                *path = base_dir.join(&*path);
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.step.is_finite() && self.step > 0.0) {
            return bad(format!("step must be positive, got {}", self.step));
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.sweeps_per_term == 0 || self.checkpoint_every == 0 {
            return bad("sweeps_per_term and checkpoint_every must be at least 1".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        if !self.seeds.iter().all(|s| seen.insert(*s)) {
            return bad("seeds must be distinct".into());
        }
        Registry::builtin().get(&self.optimizer).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            sweeps_per_term: self.sweeps_per_term,
            mode: self.mode,
        }
    }

    /// Ansatz before initialization and optimizer-specific rewriting.
    pub fn base_ansatz(&self, h: &Hamiltonian) -> Result<Ansatz> {
        let q = self.ansatz.qubits.unwrap_or(h.qubit_count());
        if q != h.qubit_count() {
            return Err(Error::Config(format!(
                "ansatz has {q} qubits but the Hamiltonian acts on {}",
                h.qubit_count()
            )));
        }
        self.ansatz.preset.build(q, self.ansatz.layers)
    }

    /// `output`, else the environment default, else `fqs-output`.
    pub fn output_dir(&self) -> PathBuf {
        self.output
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("fqs-output"))
    }
}
