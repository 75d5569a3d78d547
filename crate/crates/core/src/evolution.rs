//! Trotterized evolution driven by coordinate-wise slot updates.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ansatz::{Ansatz, Y_AXIS};
use crate::error::{Error, Result};
use crate::fqs::{EvalMode, StepTarget, TimeKind};
use crate::gates::{axis_from_polar, Family, GateKind, GateParam};
use crate::linalg::{self, Vec3};
use crate::oracle::Oracle;
use crate::pauli::{Hamiltonian, PauliTerm};
use crate::strategy::{check_compatible, update_slot, SlotOptimizer, UpdateOutcome};

/// Slack allowed when checking that an update did not lower its objective.
pub const IMPROVEMENT_TOL: f64 = 1e-12;

pub const DEFAULT_SIGMA: f64 = 0.05;

/// First-order product formula: every step applies the terms in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrotterPlan {
    pub terms: Vec<PauliTerm>,
    pub step: f64,
    pub steps: usize,
    pub kind: TimeKind,
}

impl TrotterPlan {
    pub fn with_step(h: &Hamiltonian, step: f64, steps: usize, kind: TimeKind) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::Argument(format!("time step must be positive, got {step}")));
        }
        Ok(Self {
            terms: h.terms().to_vec(),
            step,
            steps,
            kind,
        })
    }

    /// Number of terms per step.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Total term applications over the run.
    pub fn applications(&self) -> usize {
        self.terms.len() * self.steps
    }

    pub fn time_at(&self, step: usize) -> f64 {
        step as f64 * self.step
    }

    pub fn qubit_count(&self) -> usize {
        self.terms[0].qubit_count()
    }
}

/// Splits `total_time` into `steps` equal steps.
pub fn trotterize(h: &Hamiltonian, total_time: f64, steps: usize, kind: TimeKind) -> Result<TrotterPlan> {
    if steps == 0 {
        return Err(Error::Argument("at least one Trotter step is required".into()));
    }
    TrotterPlan::with_step(h, total_time / steps as f64, steps, kind)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub sweeps_per_term: usize,
    pub mode: EvalMode,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            sweeps_per_term: 1,
            mode: EvalMode::Exact,
        }
    }
}

impl SweepConfig {
    /// Each update targets `exp(-h O step / divisor)`, so one term's sweeps compose to one full step.
    pub fn divisor(&self, ansatz: &Ansatz) -> usize {
        ansatz.slot_count() * self.sweeps_per_term
    }
}

/// Aggregate of the updates in one or more sweeps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepStats {
    pub updates: u64,
    pub flat: u64,
    /// Updates whose objective dropped by more than [`IMPROVEMENT_TOL`].
    pub violations: u64,
    /// Distinct measurement types per update, histogrammed.
    pub measurements: BTreeMap<usize, u64>,
}

impl SweepStats {
    fn record(&mut self, out: &UpdateOutcome, d: usize) {
        self.updates += 1;
        self.flat += out.flat as u64;
        *self.measurements.entry(out.measurements).or_default() += 1;
        if out.after < out.before - IMPROVEMENT_TOL {
            self.violations += 1;
            log::warn!("slot {d}: objective fell from {} to {}", out.before, out.after);
        }
        if out.flat {
            log::debug!("slot {d}: flat objective, parameter kept");
        }
    }

    pub fn merge(&mut self, other: &SweepStats) {
        self.updates += other.updates;
        self.flat += other.flat;
        self.violations += other.violations;
        for (k, v) in &other.measurements {
            *self.measurements.entry(*k).or_default() += v;
        }
    }
}

/// Applies one propagator term by `sweeps_per_term` ordered passes over all slots.
///
/// Identity terms only rescale the state and are skipped.
pub fn sweep_term(
    opt: &dyn SlotOptimizer,
    ansatz: &mut Ansatz,
    term: &PauliTerm,
    step: f64,
    kind: TimeKind,
    config: &SweepConfig,
) -> Result<SweepStats> {
    let mut stats = SweepStats::default();
    if config.sweeps_per_term == 0 {
        return Err(Error::Argument("sweeps_per_term must be at least 1".into()));
    }
    if term.string.is_identity() {
        return Ok(stats);
    }
    let target = StepTarget::new(term, step / config.divisor(ansatz) as f64, kind);
    for _ in 0..config.sweeps_per_term {
        for d in 0..ansatz.slot_count() {
            let out = update_slot(opt, ansatz, d, &target, config.mode)?;
            stats.record(&out, d);
        }
    }
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRow {
    pub step: usize,
    pub tau: f64,
    pub energy: f64,
    pub fidelity_exact: Option<f64>,
    pub fidelity_ground: Option<f64>,
    pub params_digest: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub rows: Vec<CheckpointRow>,
    pub stats: SweepStats,
    pub slot_count: usize,
    pub final_params: Vec<GateParam>,
}

/// Short hex digest of the parameter vector.
pub fn params_digest(params: &[GateParam]) -> String {
    let mut h = Sha256::new();
    for p in params {
        h.update(p.theta.to_le_bytes());
        for a in p.axis {
            h.update(a.to_le_bytes());
        }
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Runs the plan, checkpointing every `checkpoint_every` steps plus the first and last.
///
/// Fidelity columns are left empty when the Hamiltonian is too large for the dense oracle.
pub fn evolve(
    h: &Hamiltonian,
    opt: &dyn SlotOptimizer,
    ansatz: &Ansatz,
    plan: &TrotterPlan,
    config: &SweepConfig,
    checkpoint_every: usize,
) -> Result<TrajectoryRecord> {
    let oracle = match Oracle::new(h) {
        Ok(o) => Some(o),
        Err(Error::Resource(msg)) => {
            log::warn!("fidelities omitted: {msg}");
            None
        }
        Err(e) => return Err(e),
    };
    evolve_with(h, opt, ansatz, plan, config, checkpoint_every, oracle.as_ref())
}

/// [`evolve`] with a precomputed oracle.
pub fn evolve_with(
    h: &Hamiltonian,
    opt: &dyn SlotOptimizer,
    ansatz: &Ansatz,
    plan: &TrotterPlan,
    config: &SweepConfig,
    checkpoint_every: usize,
    oracle: Option<&Oracle>,
) -> Result<TrajectoryRecord> {
    if h.qubit_count() != ansatz.qubit_count() || plan.qubit_count() != ansatz.qubit_count() {
        return Err(Error::SizeMismatch {
            expected: ansatz.qubit_count(),
            found: h.qubit_count(),
        });
    }
    if checkpoint_every == 0 {
        return Err(Error::Argument("checkpoint cadence must be at least 1".into()));
    }
    check_compatible(opt, ansatz)?;
    let mut a = ansatz.clone();
    let psi0 = a.state();
    let row = |a: &Ansatz, n: usize| -> Result<CheckpointRow> {
        let s = a.state();
        let tau = plan.time_at(n);
        let (fe, fg) = match oracle {
            Some(o) => {
                let exact = o.evolve(&psi0, tau, plan.kind)?;
                (Some(crate::oracle::fidelity(&exact, &s)?), Some(o.ground_fidelity(&s)?))
            }
            None => (None, None),
        };
        Ok(CheckpointRow {
            step: n,
            tau,
            energy: h.energy(&s)?,
            fidelity_exact: fe,
            fidelity_ground: fg,
            params_digest: params_digest(&a.params()),
        })
    };
    let mut rows = vec![row(&a, 0)?];
    let mut stats = SweepStats::default();
    for n in 1..=plan.steps {
        for term in &plan.terms {
            let s = sweep_term(opt, &mut a, term, plan.step, plan.kind, config)?;
            stats.merge(&s);
        }
        if n % checkpoint_every == 0 || n == plan.steps {
            rows.push(row(&a, n)?);
        }
    }
    Ok(TrajectoryRecord {
        rows,
        stats,
        slot_count: a.slot_count(),
        final_params: a.params(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum InitPolicy {
    /// `theta = pi` with uniformly random axes.
    RandomAxisFixedAnglePi,
    /// Random angles with axes near `y`; fixed-axis slots get the same angles.
    RandomAngleAxisYPerturbed {
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
    /// Every free parameter random.
    RandomAll,
    Fixed {
        params: Vec<GateParam>,
    },
}

fn default_sigma() -> f64 {
    DEFAULT_SIGMA
}

/// Uniform point on the sphere from a normalized Gaussian draw.
pub fn random_axis(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v: Vec3 = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        if let Some(u) = linalg::normalized(&v).filter(|_| linalg::norm(&v) > 1e-12) {
            return u;
        }
    }
}

fn incompatible(policy: &str, d: usize, kind: &GateKind) -> Error {
    Error::Argument(format!("init policy {policy} does not fit slot {d} ({kind:?})"))
}

/// New parameters according to `policy`; deterministic in `seed`.
pub fn init_parameters(ansatz: &Ansatz, policy: &InitPolicy, seed: u64) -> Result<Ansatz> {
    let mut a = ansatz.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: Vec<GateParam> = match policy {
        InitPolicy::Fixed { params } => params.clone(),
        InitPolicy::RandomAxisFixedAnglePi => {
            let mut out = Vec::with_capacity(a.slot_count());
            for (d, s) in a.slots().iter().enumerate() {
                out.push(match s.kind {
                    GateKind::General1Q
                    | GateKind::Fraxis1Q
                    | GateKind::TwoQubitComposite {
                        family: Family::ExcitationConserving,
                        ..
                    } => GateParam {
                        theta: PI,
                        axis: random_axis(&mut rng),
                    },
                    GateKind::TwoQubitComposite {
                        family: Family::Hop | Family::Rbs,
                        ..
                    } => GateParam {
                        theta: PI,
                        axis: axis_from_polar(rng.random_range(0.0..TAU), 0.0),
                    },
                    ref k => return Err(incompatible("random-axis-fixed-angle-pi", d, k)),
                });
            }
            out
        }
        InitPolicy::RandomAngleAxisYPerturbed { sigma } => {
            if !(sigma.is_finite() && *sigma >= 0.0) {
                return Err(Error::Argument(format!("perturbation sigma must be non-negative, got {sigma}")));
            }
            // Separate streams keep the angles identical across ansatz variants.
            let mut noise = ChaCha8Rng::seed_from_u64(seed);
            noise.set_stream(1);
            let mut out = Vec::with_capacity(a.slot_count());
            for (d, s) in a.slots().iter().enumerate() {
                let theta = rng.random_range(0.0..TAU);
                out.push(match s.kind {
                    GateKind::General1Q => {
                        let mut v = Y_AXIS;
                        for x in v.iter_mut() {
                            *x += sigma * noise.sample::<f64, _>(StandardNormal);
                        }
                        GateParam {
                            theta,
                            axis: linalg::normalized(&v).unwrap_or(Y_AXIS),
                        }
                    }
                    GateKind::FixedAxis1Q(n) => GateParam { theta, axis: n },
                    ref k => return Err(incompatible("random-angle-axis-y-perturbed", d, k)),
                });
            }
            out
        }
        InitPolicy::RandomAll => a
            .slots()
            .iter()
            .map(|s| {
                let theta = rng.random_range(0.0..TAU);
                match s.kind {
                    GateKind::General1Q => GateParam {
                        theta,
                        axis: random_axis(&mut rng),
                    },
                    GateKind::FixedAxis1Q(_) => GateParam { theta, axis: s.param.axis },
                    GateKind::TwoQubitComposite {
                        family: Family::Swap, ..
                    } => GateParam { theta, axis: s.param.axis },
                    GateKind::TwoQubitComposite {
                        family: Family::Hop | Family::Rbs,
                        ..
                    } => GateParam {
                        theta: PI,
                        axis: axis_from_polar(theta, 0.0),
                    },
                    GateKind::Fraxis1Q | GateKind::TwoQubitComposite { .. } => GateParam {
                        theta: PI,
                        axis: random_axis(&mut rng),
                    },
                }
            })
            .collect(),
    };
    a.set_params(&params)?;
    Ok(a)
}
