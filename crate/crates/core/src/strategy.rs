//! Slot optimizers behind one trait, looked up by name at runtime.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::ansatz::Ansatz;
use crate::error::{Error, Result};
use crate::fqs::{self, EvalMode, Probe, StepTarget};
use crate::gates::{axis_from_polar, Family, GateKind, GateParam};

/// What one slot update did.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateOutcome {
    pub param: GateParam,
    /// Distinct measurement types evaluated.
    pub measurements: usize,
    /// Objective at the old and new parameter, by direct overlap.
    pub before: f64,
    pub after: f64,
    /// The objective was flat and the old parameter was kept.
    pub flat: bool,
}

pub trait SlotOptimizer: Send + Sync {
    fn name(&self) -> &'static str;

    /// Whether slot `d` of `ansatz` (after [`SlotOptimizer::prepare`]) can be updated.
    fn supports(&self, ansatz: &Ansatz, d: usize) -> bool;

    /// Rewrites the ansatz into the form this optimizer works on.
    fn prepare(&self, ansatz: &Ansatz) -> Result<Ansatz> {
        Ok(ansatz.clone())
    }

    /// New parameter for the probed slot, or `None` when the objective is flat.
    fn propose(&self, probe: &mut Probe<'_>) -> Result<Option<GateParam>>;
}

fn site_is_single(ansatz: &Ansatz, d: usize) -> bool {
    ansatz.slot(d).map(|s| !s.is_factor(ansatz)).unwrap_or(false)
}

fn slot_kind(ansatz: &Ansatz, d: usize) -> Option<GateKind> {
    ansatz.slot(d).ok().map(|s| s.kind)
}

pub struct Fqs1q3p;

impl SlotOptimizer for Fqs1q3p {
    fn name(&self) -> &'static str {
        "fqs-1q3p"
    }

    fn supports(&self, ansatz: &Ansatz, d: usize) -> bool {
        matches!(slot_kind(ansatz, d), Some(GateKind::General1Q))
    }

    fn propose(&self, probe: &mut Probe<'_>) -> Result<Option<GateParam>> {
        let gv = probe.gvector()?;
        Ok(fqs::solve_1q_3p(&gv, &probe.prev().axis).map(|p| GateParam::canonical(p.theta, p.axis)))
    }
}

pub struct Fraxis;

impl SlotOptimizer for Fraxis {
    fn name(&self) -> &'static str {
        "fraxis"
    }

    fn supports(&self, ansatz: &Ansatz, d: usize) -> bool {
        matches!(slot_kind(ansatz, d), Some(GateKind::Fraxis1Q))
    }

    fn propose(&self, probe: &mut Probe<'_>) -> Result<Option<GateParam>> {
        let g = probe.axis_gradient()?;
        Ok(fqs::solve_1q_2p(&g).map(|axis| GateParam {
            theta: std::f64::consts::PI,
            axis,
        }))
    }
}

pub struct Nft;

impl SlotOptimizer for Nft {
    fn name(&self) -> &'static str {
        "nft"
    }

    fn supports(&self, ansatz: &Ansatz, d: usize) -> bool {
        matches!(slot_kind(ansatz, d), Some(GateKind::FixedAxis1Q(_))) && site_is_single(ansatz, d)
    }

    fn propose(&self, probe: &mut Probe<'_>) -> Result<Option<GateParam>> {
        let (g0, gd) = probe.angle_coefficients()?;
        let axis = probe.prev().axis;
        Ok(fqs::solve_1q_1p(g0, gd).map(|t| GateParam::canonical(t, axis)))
    }
}

/// NFT on every general rotation rewritten as `Rz Ry Rz`.
pub struct RzRyRzNft;

impl SlotOptimizer for RzRyRzNft {
    fn name(&self) -> &'static str {
        "rzryrz-nft"
    }

    fn supports(&self, ansatz: &Ansatz, d: usize) -> bool {
        Nft.supports(ansatz, d)
    }

    fn prepare(&self, ansatz: &Ansatz) -> Result<Ansatz> {
        ansatz.expand_rzryrz()
    }

    fn propose(&self, probe: &mut Probe<'_>) -> Result<Option<GateParam>> {
        Nft.propose(probe)
    }
}

/// Free axis of an excitation-conserving composite.
pub struct Fqs2q2p;

impl SlotOptimizer for Fqs2q2p {
    fn name(&self) -> &'static str {
        "fqs-2q2p"
    }

    fn supports(&self, ansatz: &Ansatz, d: usize) -> bool {
        matches!(
            slot_kind(ansatz, d),
            Some(GateKind::TwoQubitComposite {
                family: Family::ExcitationConserving,
                ..
            })
        )
    }

    fn propose(&self, probe: &mut Probe<'_>) -> Result<Option<GateParam>> {
        let gm = probe.gmatrix(true)?;
        Ok(Some(GateParam {
            theta: std::f64::consts::PI,
            axis: fqs::solve_2q_2p(&gm),
        }))
    }
}

/// One-parameter two-qubit updates: Swap, Hop and RBS composites, and the
/// fixed-axis factors left after splitting excitation-conserving gates.
pub struct Fqs2q1p;

impl SlotOptimizer for Fqs2q1p {
    fn name(&self) -> &'static str {
        "fqs-2q1p"
    }

    fn supports(&self, ansatz: &Ansatz, d: usize) -> bool {
        match slot_kind(ansatz, d) {
            Some(GateKind::TwoQubitComposite { family, .. }) => family != Family::ExcitationConserving,
            Some(GateKind::FixedAxis1Q(_)) => !site_is_single(ansatz, d),
            _ => false,
        }
    }

    fn prepare(&self, ansatz: &Ansatz) -> Result<Ansatz> {
        ansatz.factor_excitation_gates()
    }

    fn propose(&self, probe: &mut Probe<'_>) -> Result<Option<GateParam>> {
        let prev = *probe.prev();
        match probe.split().kind {
            GateKind::TwoQubitComposite {
                family: Family::Hop | Family::Rbs,
                ..
            } => {
                let hv = probe.plane_hvector()?;
                Ok(fqs::solve_2q_1p(&hv).map(|psi| GateParam {
                    theta: std::f64::consts::PI,
                    axis: axis_from_polar(psi, 0.0),
                }))
            }
            _ => {
                let hv = probe.hvector()?;
                Ok(fqs::solve_2q_1p(&hv).map(|t| GateParam::wrapped(t, prev.axis)))
            }
        }
    }
}

/// Name-keyed table of optimizers.
#[derive(Clone)]
pub struct Registry {
    entries: BTreeMap<&'static str, Arc<dyn SlotOptimizer>>,
}

impl Registry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(Fqs1q3p));
        r.register(Arc::new(Fraxis));
        r.register(Arc::new(Nft));
        r.register(Arc::new(RzRyRzNft));
        r.register(Arc::new(Fqs2q2p));
        r.register(Arc::new(Fqs2q1p));
        r
    }

    /// Replaces any optimizer registered under the same name.
    pub fn register(&mut self, opt: Arc<dyn SlotOptimizer>) {
        self.entries.insert(opt.name(), opt);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn SlotOptimizer>> {
        self.entries.get(name).cloned().ok_or_else(|| {
            Error::Config(format!(
                "unknown optimizer {name:?}; known: {}",
                self.names().join(", ")
            ))
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Fails on the first slot the optimizer cannot handle.
pub fn check_compatible(opt: &dyn SlotOptimizer, ansatz: &Ansatz) -> Result<()> {
    if ansatz.slot_count() == 0 {
        return Err(Error::Argument("ansatz has no parameterized slots".into()));
    }
    for d in 0..ansatz.slot_count() {
        if !opt.supports(ansatz, d) {
            return Err(Error::Kind(format!(
                "optimizer {} cannot update slot {d} ({:?})",
                opt.name(),
                ansatz.slots()[d].kind
            )));
        }
    }
    Ok(())
}

/// Optimizes slot `d` in place against `target`.
pub fn update_slot(
    opt: &dyn SlotOptimizer,
    ansatz: &mut Ansatz,
    d: usize,
    target: &StepTarget,
    mode: EvalMode,
) -> Result<UpdateOutcome> {
    if !opt.supports(ansatz, d) {
        return Err(Error::Kind(format!("optimizer {} cannot update slot {d}", opt.name())));
    }
    let mut probe = Probe::new(ansatz, d, target, mode)?;
    let prev = *probe.prev();
    let before = probe.objective(&prev);
    let proposal = opt.propose(&mut probe)?;
    let measurements = probe.measurements();
    let flat = proposal.is_none();
    let param = proposal.unwrap_or(prev);
    let after = if flat { before } else { probe.objective(&param) };
    if !flat {
        ansatz.set_param(d, param)?;
    }
    Ok(UpdateOutcome {
        param,
        measurements,
        before,
        after,
        flat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{excitation_chain, Preset};
    use crate::fqs::TimeKind;
    use crate::fqs::probe_tests::{random_term, randomize};
    use crate::pauli::PauliTerm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn family_pair(family: Family) -> Ansatz {
        let mut a = Ansatz::new(2);
        a.push_rotation(0, GateKind::General1Q).unwrap();
        a.push_rotation(1, GateKind::General1Q).unwrap();
        a.push_composite(0, 1, family).unwrap();
        a
    }

    #[test]
    fn registry_lookup() {
        let r = Registry::builtin();
        assert_eq!(r.names(), vec!["fqs-1q3p", "fqs-2q1p", "fqs-2q2p", "fraxis", "nft", "rzryrz-nft"]);
        for n in r.names() {
            assert_eq!(r.get(n).unwrap().name(), n);
        }
        assert!(matches!(r.get("adam"), Err(Error::Config(_))));
    }

    #[test]
    fn compatibility() {
        let r = Registry::builtin();
        let general = Preset::LadderGeneral.build(3, 1).unwrap();
        assert!(check_compatible(r.get("fqs-1q3p").unwrap().as_ref(), &general).is_ok());
        assert!(matches!(check_compatible(r.get("fraxis").unwrap().as_ref(), &general), Err(Error::Kind(_))));
        let nft = r.get("rzryrz-nft").unwrap();
        assert!(check_compatible(nft.as_ref(), &nft.prepare(&general).unwrap()).is_ok());
        let chain = excitation_chain().unwrap();
        assert!(check_compatible(r.get("fqs-2q2p").unwrap().as_ref(), &chain).is_ok());
        let one = r.get("fqs-2q1p").unwrap();
        assert!(check_compatible(one.as_ref(), &chain).is_err());
        assert!(check_compatible(one.as_ref(), &one.prepare(&chain).unwrap()).is_ok());
        // a standalone fixed-axis rotation is not a composite factor
        assert!(check_compatible(one.as_ref(), &Preset::LadderRy.build(2, 1).unwrap()).is_err());
    }

    #[test]
    fn updates_improve_and_count_measurements() {
        let r = Registry::builtin();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let cases: Vec<(&str, Ansatz, usize)> = vec![
            ("fqs-1q3p", Preset::LadderGeneral.build(4, 1).unwrap(), 7),
            ("fraxis", Preset::LadderFraxis.build(4, 1).unwrap(), 6),
            ("nft", Preset::LadderRy.build(4, 1).unwrap(), 3),
            ("rzryrz-nft", Preset::LadderRzryrz.build(4, 1).unwrap(), 3),
            ("fqs-2q2p", excitation_chain().unwrap(), 8),
            ("fqs-2q1p", excitation_chain().unwrap(), 4),
        ];
        for (name, base, count) in cases {
            let opt = r.get(name).unwrap();
            let mut a = opt.prepare(&base).unwrap();
            randomize(&mut a, &mut rng);
            for _ in 0..3 {
                let term = random_term(4, &mut rng);
                let target = StepTarget::new(&term, rng.random_range(0.01..0.5), TimeKind::Imaginary);
                for d in 0..a.slot_count() {
                    let out = update_slot(opt.as_ref(), &mut a, d, &target, EvalMode::Exact).unwrap();
                    assert_eq!(out.measurements, count, "{name}");
                    assert!(out.after >= out.before - 1e-12, "{name} slot {d}");
                    assert_eq!(a.slots()[d].param, out.param);
                }
            }
        }
    }

    #[test]
    fn one_parameter_families() {
        let opt = Fqs2q1p;
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for family in [Family::Swap, Family::Hop, Family::Rbs] {
            let mut a = family_pair(family);
            randomize(&mut a, &mut rng);
            let term = PauliTerm::parse(0.7, "XZ").unwrap();
            let target = StepTarget::new(&term, 0.3, TimeKind::Real);
            let out = update_slot(&opt, &mut a, 2, &target, EvalMode::Circuit).unwrap();
            assert_eq!(out.measurements, 4);
            assert!(out.after >= out.before - 1e-12);
            assert!(a.slots()[2].kind.validate(&out.param).is_ok());
        }
    }

    #[test]
    fn zero_step_keeps_identity() {
        // F(theta) = cos(theta/2) already peaks at the current parameter.
        let mut a = Preset::LadderRy.build(1, 0).unwrap();
        let term = PauliTerm::parse(1.0, "X").unwrap();
        let target = StepTarget::new(&term, 0.0, TimeKind::Imaginary);
        let out = update_slot(&Nft, &mut a, 0, &target, EvalMode::Exact).unwrap();
        assert!(!out.flat);
        assert_eq!(out.param.theta, 0.0);
    }
}
