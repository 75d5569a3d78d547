//! Parameterized circuits: ordered slots interleaved with fixed gates.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Op};
use crate::error::{Error, Result};
use crate::gates::{self, Family, Frame, GateKind, GateParam};
use crate::linalg::{Mat2, Vec3};
use crate::statevector::Statevector;

pub const X_AXIS: Vec3 = [1.0, 0.0, 0.0];
pub const Y_AXIS: Vec3 = [0.0, 1.0, 0.0];
pub const Z_AXIS: Vec3 = [0.0, 0.0, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Fixed(Op),
    Rotation {
        slot: usize,
        qubit: usize,
    },
    /// `A (I (x) R) B (I (x) R^dagger) C` with `R` the product of the factor slots, left to right.
    Composite {
        first: usize,
        second: usize,
        frame: Frame,
        factors: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    pub kind: GateKind,
    pub param: GateParam,
    /// Index of the hosting element.
    pub element: usize,
}

impl Slot {
    /// True for single-qubit factors living inside a two-qubit composite.
    pub fn is_factor(&self, ansatz: &Ansatz) -> bool {
        !self.kind.is_two_qubit() && matches!(ansatz.elements[self.element], Element::Composite { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ansatz {
    qubits: usize,
    elements: Vec<Element>,
    slots: Vec<Slot>,
}

/// Where the split-out gate sits.
#[derive(Debug, Clone, PartialEq)]
pub enum Site {
    Single { qubit: usize },
    /// Effective frame with the other factors of the composite folded in.
    Composite { first: usize, second: usize, frame: Frame },
}

/// `U = V2 . gate . V1` around one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub v1: Circuit,
    pub site: Site,
    pub v2: Circuit,
    pub kind: GateKind,
    pub param: GateParam,
}

impl Split {
    /// The qubit the slot's rotation acts on.
    pub fn rotation_qubit(&self) -> usize {
        match self.site {
            Site::Single { qubit } => qubit,
            Site::Composite { second, .. } => second,
        }
    }

    pub fn gate_op(&self, p: &GateParam) -> Op {
        match &self.site {
            Site::Single { qubit } => Op::One {
                qubit: *qubit,
                gate: p.matrix(),
            },
            Site::Composite {
                first,
                second,
                frame,
            } => Op::Two {
                first: *first,
                second: *second,
                gate: frame.compose(&p.matrix()),
            },
        }
    }

    /// Full circuit state with the slot set to `p`.
    pub fn state_with(&self, p: &GateParam) -> Statevector {
        let mut s = self.v1.run();
        self.gate_op(p).apply(&mut s);
        self.v2.apply_unchecked(&mut s);
        s
    }
}

fn default_param(kind: &GateKind) -> GateParam {
    match *kind {
        GateKind::General1Q => GateParam::identity(),
        GateKind::FixedAxis1Q(n) => GateParam { theta: 0.0, axis: n },
        GateKind::Fraxis1Q => GateParam { theta: PI, axis: Z_AXIS },
        GateKind::TwoQubitComposite { family, .. } => match family {
            Family::Swap => GateParam::identity(),
            _ => GateParam { theta: PI, axis: Z_AXIS },
        },
    }
}

impl Ansatz {
    pub fn new(qubits: usize) -> Self {
        Self {
            qubits,
            elements: Vec::new(),
            slots: Vec::new(),
        }
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn slot(&self, d: usize) -> Result<&Slot> {
        self.slots.get(d).ok_or(Error::Index {
            index: d,
            len: self.slots.len(),
        })
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn params(&self) -> Vec<GateParam> {
        self.slots.iter().map(|s| s.param).collect()
    }

    pub fn set_param(&mut self, d: usize, p: GateParam) -> Result<()> {
        let kind = self.slot(d)?.kind;
        kind.validate(&p)?;
        self.slots[d].param = p;
        Ok(())
    }

    pub fn set_params(&mut self, params: &[GateParam]) -> Result<()> {
        if params.len() != self.slots.len() {
            return Err(Error::SizeMismatch {
                expected: self.slots.len(),
                found: params.len(),
            });
        }
        for (d, p) in params.iter().enumerate() {
            self.set_param(d, *p)?;
        }
        Ok(())
    }

    pub fn push_fixed(&mut self, op: Op) -> Result<()> {
        Circuit::new(self.qubits).push(op.clone())?;
        self.elements.push(Element::Fixed(op));
        Ok(())
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q < self.qubits {
            Ok(())
        } else {
            Err(Error::Argument(format!("qubit {q} out of range for {} qubits", self.qubits)))
        }
    }

    /// Adds a single-qubit slot and returns its index.
    pub fn push_rotation(&mut self, qubit: usize, kind: GateKind) -> Result<usize> {
        self.check_qubit(qubit)?;
        if kind.is_two_qubit() {
            return Err(Error::Kind(format!("{kind:?} is not a single-qubit gate")));
        }
        let d = self.slots.len();
        self.slots.push(Slot {
            kind,
            param: default_param(&kind),
            element: self.elements.len(),
        });
        self.elements.push(Element::Rotation { slot: d, qubit });
        Ok(d)
    }

    fn check_pair(&self, first: usize, second: usize) -> Result<()> {
        self.check_qubit(first)?;
        self.check_qubit(second)?;
        if first == second {
            return Err(Error::Argument(format!("composite pair ({first}, {second}) repeats a qubit")));
        }
        Ok(())
    }

    /// Adds one two-qubit composite slot.
    pub fn push_composite(&mut self, first: usize, second: usize, family: Family) -> Result<usize> {
        self.check_pair(first, second)?;
        let kind = GateKind::composite(family);
        let d = self.slots.len();
        self.slots.push(Slot {
            kind,
            param: default_param(&kind),
            element: self.elements.len(),
        });
        self.elements.push(Element::Composite {
            first,
            second,
            frame: family.frame(),
            factors: vec![d],
        });
        Ok(d)
    }

    /// Adds a composite whose rotation is a product of single-qubit factor slots.
    pub fn push_factored_composite(
        &mut self,
        first: usize,
        second: usize,
        frame: Frame,
        factors: &[(GateKind, GateParam)],
    ) -> Result<Vec<usize>> {
        self.check_pair(first, second)?;
        let element = self.elements.len();
        let mut ids = Vec::with_capacity(factors.len());
        for (kind, param) in factors {
            if kind.is_two_qubit() {
                return Err(Error::Kind("composite factors must be single-qubit gates".into()));
            }
            kind.validate(param)?;
            ids.push(self.slots.len());
            self.slots.push(Slot {
                kind: *kind,
                param: *param,
                element,
            });
        }
        self.elements.push(Element::Composite {
            first,
            second,
            frame,
            factors: ids.clone(),
        });
        Ok(ids)
    }

    fn factor_product(&self, ids: &[usize]) -> Mat2 {
        ids.iter()
            .fold(Mat2::IDENTITY, |acc, &d| acc * self.slots[d].param.matrix())
    }

    fn element_op(&self, e: &Element) -> Op {
        match e {
            Element::Fixed(op) => op.clone(),
            Element::Rotation { slot, qubit } => Op::One {
                qubit: *qubit,
                gate: self.slots[*slot].param.matrix(),
            },
            Element::Composite {
                first,
                second,
                frame,
                factors,
            } => Op::Two {
                first: *first,
                second: *second,
                gate: frame.compose(&self.factor_product(factors)),
            },
        }
    }

    fn segment(&self, range: std::ops::Range<usize>) -> Circuit {
        let mut c = Circuit::new(self.qubits);
        for e in &self.elements[range] {
            c.push_unchecked(self.element_op(e));
        }
        c
    }

    pub fn circuit(&self) -> Circuit {
        self.segment(0..self.elements.len())
    }

    /// `U(params)|0...0>`.
    pub fn state(&self) -> Statevector {
        self.circuit().run()
    }

    /// Splits the circuit around slot `d` (0-based).
    pub fn split_at(&self, d: usize) -> Result<Split> {
        let slot = self.slot(d)?;
        let e = slot.element;
        let v1 = self.segment(0..e);
        let v2 = self.segment(e + 1..self.elements.len());
        let site = match &self.elements[e] {
            Element::Rotation { qubit, .. } => Site::Single { qubit: *qubit },
            Element::Composite {
                first,
                second,
                frame,
                factors,
            } => {
                let pos = factors.iter().position(|&f| f == d).expect("slot belongs to its element");
                let before = Mat2::IDENTITY.kron(&self.factor_product(&factors[..pos]));
                let after = Mat2::IDENTITY.kron(&self.factor_product(&factors[pos + 1..]));
                Site::Composite {
                    first: *first,
                    second: *second,
                    frame: Frame {
                        a: frame.a * before,
                        b: after * frame.b * after.adjoint(),
                        c: before.adjoint() * frame.c,
                    },
                }
            }
            Element::Fixed(_) => unreachable!("slots never point at fixed gates"),
        };
        Ok(Split {
            v1,
            site,
            v2,
            kind: slot.kind,
            param: slot.param,
        })
    }

    /// Replaces every general single-qubit slot by `Rz(lambda) Ry(psi) Rz(phi)` in circuit order.
    ///
    /// Angles come from the current parameters, so the state is unchanged up to a global phase.
    pub fn expand_rzryrz(&self) -> Result<Ansatz> {
        let mut out = Ansatz::new(self.qubits);
        for e in &self.elements {
            match e {
                Element::Fixed(op) => out.push_fixed(op.clone())?,
                Element::Rotation { slot, qubit } => {
                    let s = &self.slots[*slot];
                    if s.kind != GateKind::General1Q {
                        let d = out.push_rotation(*qubit, s.kind)?;
                        out.slots[d].param = s.param;
                        continue;
                    }
                    let (lambda, psi, phi) = gates::zyz_angles(&s.param.matrix());
                    for (angle, axis) in [(lambda, Z_AXIS), (psi, Y_AXIS), (phi, Z_AXIS)] {
                        let d = out.push_rotation(*qubit, GateKind::FixedAxis1Q(axis))?;
                        out.slots[d].param = GateParam::canonical(angle, axis);
                    }
                }
                Element::Composite { .. } => {
                    return Err(Error::Kind("angle expansion applies to single-qubit slots only".into()))
                }
            }
        }
        Ok(out)
    }

    /// Rewrites each excitation-conserving slot as `CX21 (I (x) Rz(phi) Ry(psi + 3pi/2)) CX12 (...)^dagger CX21`.
    ///
    /// The two angles become separate fixed-axis slots; the operator is unchanged.
    pub fn factor_excitation_gates(&self) -> Result<Ansatz> {
        let mut out = Ansatz::new(self.qubits);
        for e in &self.elements {
            match e {
                Element::Fixed(op) => out.push_fixed(op.clone())?,
                Element::Rotation { slot, qubit } => {
                    let d = out.push_rotation(*qubit, self.slots[*slot].kind)?;
                    out.slots[d].param = self.slots[*slot].param;
                }
                Element::Composite {
                    first,
                    second,
                    frame,
                    factors,
                } => {
                    let lead = &self.slots[factors[0]];
                    let is_excitation = factors.len() == 1
                        && matches!(
                            lead.kind,
                            GateKind::TwoQubitComposite {
                                family: Family::ExcitationConserving,
                                ..
                            }
                        );
                    if is_excitation {
                        let (psi, phi) = gates::polar_from_axis(&lead.param.axis);
                        out.push_factored_composite(
                            *first,
                            *second,
                            Family::Swap.frame(),
                            &[
                                (GateKind::FixedAxis1Q(Z_AXIS), GateParam::wrapped(phi, Z_AXIS)),
                                (GateKind::FixedAxis1Q(Y_AXIS), GateParam::wrapped(psi + 1.5 * PI, Y_AXIS)),
                            ],
                        )?;
                    } else {
                        let parts: Vec<_> = factors
                            .iter()
                            .map(|&f| (self.slots[f].kind, self.slots[f].param))
                            .collect();
                        if parts.len() == 1 && parts[0].0.is_two_qubit() {
                            let GateKind::TwoQubitComposite { family, .. } = parts[0].0 else {
                                unreachable!()
                            };
                            let d = out.push_composite(*first, *second, family)?;
                            out.slots[d].param = parts[0].1;
                        } else {
                            out.push_factored_composite(*first, *second, *frame, &parts)?;
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Named circuit layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Layers of general rotations on every qubit, each followed by a CZ ladder, then a final rotation layer.
    LadderGeneral,
    LadderRy,
    LadderFraxis,
    /// The general ladder with each rotation split into `Rz Ry Rz`.
    LadderRzryrz,
    /// X on qubits 0 and 2, then excitation-conserving gates on (0,1), (2,3), (1,2), (0,1), (2,3).
    ExcitationChain,
}

impl Preset {
    pub fn build(self, qubits: usize, layers: usize) -> Result<Ansatz> {
        match self {
            Preset::LadderGeneral | Preset::LadderRzryrz => ladder(qubits, layers, GateKind::General1Q),
            Preset::LadderRy => ladder(qubits, layers, GateKind::FixedAxis1Q(Y_AXIS)),
            Preset::LadderFraxis => ladder(qubits, layers, GateKind::Fraxis1Q),
            Preset::ExcitationChain => {
                if qubits != 4 {
                    return Err(Error::Config(format!(
                        "excitation-chain layout is defined on 4 qubits, got {qubits}"
                    )));
                }
                excitation_chain()
            }
        }
    }
}

/// `layers` blocks of (rotation on every qubit, CZ on (0,1), (1,2), ...), then one more rotation layer.
pub fn ladder(qubits: usize, layers: usize, kind: GateKind) -> Result<Ansatz> {
    if qubits == 0 {
        return Err(Error::Argument("ladder needs at least one qubit".into()));
    }
    let mut a = Ansatz::new(qubits);
    for _ in 0..layers {
        for q in 0..qubits {
            a.push_rotation(q, kind)?;
        }
        for q in 0..qubits.saturating_sub(1) {
            a.push_fixed(Op::cz(q, q + 1))?;
        }
    }
    for q in 0..qubits {
        a.push_rotation(q, kind)?;
    }
    Ok(a)
}

pub fn excitation_chain() -> Result<Ansatz> {
    let mut a = Ansatz::new(4);
    a.push_fixed(Op::One {
        qubit: 0,
        gate: Mat2::X,
    })?;
    a.push_fixed(Op::One {
        qubit: 2,
        gate: Mat2::X,
    })?;
    for (p, q) in [(0, 1), (2, 3), (1, 2), (0, 1), (2, 3)] {
        a.push_composite(p, q, Family::ExcitationConserving)?;
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::axis_from_polar;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unit(rng: &mut impl Rng) -> Vec3 {
        let z: f64 = rng.random_range(-1.0..1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let r = (1.0 - z * z).sqrt();
        [r * phi.cos(), r * phi.sin(), z]
    }

    fn randomize(a: &mut Ansatz, rng: &mut impl Rng) {
        for d in 0..a.slot_count() {
            let p = match a.slots[d].kind {
                GateKind::General1Q => GateParam::new(rng.random_range(0.0..6.28), random_unit(rng)).unwrap(),
                GateKind::FixedAxis1Q(n) => GateParam::new(rng.random_range(0.0..6.28), n).unwrap(),
                GateKind::Fraxis1Q => GateParam::new(PI, random_unit(rng)).unwrap(),
                GateKind::TwoQubitComposite { family, .. } => match family {
                    Family::Swap => GateParam::new(rng.random_range(0.0..6.28), Z_AXIS).unwrap(),
                    Family::ExcitationConserving => GateParam::new(PI, random_unit(rng)).unwrap(),
                    _ => GateParam::new(PI, axis_from_polar(rng.random_range(0.0..6.28), 0.0)).unwrap(),
                },
            };
            a.set_param(d, p).unwrap();
        }
    }

    fn same_up_to_phase(a: &Statevector, b: &Statevector) -> bool {
        let ov = a.inner_product(b).unwrap();
        (ov.norm() - 1.0).abs() < 1e-10
    }

    fn max_diff(a: &Statevector, b: &Statevector) -> f64 {
        a.amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn ladder_slot_counts() {
        assert_eq!(Preset::LadderGeneral.build(5, 2).unwrap().slot_count(), 15);
        assert_eq!(Preset::ExcitationChain.build(4, 0).unwrap().slot_count(), 5);
        assert!(Preset::ExcitationChain.build(5, 0).is_err());
    }

    #[test]
    fn split_boundaries() {
        let a = Preset::ExcitationChain.build(4, 0).unwrap();
        let first = a.split_at(0).unwrap();
        assert_eq!(first.v1.len(), 2);
        let last = a.split_at(4).unwrap();
        assert!(last.v2.is_empty());
        assert!(matches!(a.split_at(5), Err(Error::Index { index: 5, len: 5 })));
    }

    #[test]
    fn rzryrz_expansion_keeps_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut a = Preset::LadderGeneral.build(3, 2).unwrap();
        randomize(&mut a, &mut rng);
        let b = a.expand_rzryrz().unwrap();
        assert_eq!(b.slot_count(), 27);
        assert!(same_up_to_phase(&a.state(), &b.state()));
        for s in b.slots() {
            s.kind.validate(&s.param).unwrap();
        }
    }

    #[test]
    fn factored_excitation_gates_keep_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut a = excitation_chain().unwrap();
        randomize(&mut a, &mut rng);
        let b = a.factor_excitation_gates().unwrap();
        assert_eq!(b.slot_count(), 10);
        assert!(max_diff(&a.state(), &b.state()) < 1e-12);
        for d in 0..b.slot_count() {
            assert!(b.slots()[d].is_factor(&b));
        }
    }

    #[test]
    fn frozen_kinds_reject_bad_updates() {
        let mut a = Preset::LadderFraxis.build(2, 1).unwrap();
        assert!(a.set_param(0, GateParam::new(1.0, Z_AXIS).unwrap()).is_err());
        let mut a = Preset::LadderRy.build(2, 1).unwrap();
        assert!(a.set_param(0, GateParam::new(1.0, X_AXIS).unwrap()).is_err());
        a.set_param(0, GateParam::new(1.0, [0.0, -1.0, 0.0]).unwrap()).unwrap();
    }

    proptest! {
        #[test]
        fn split_reproduces_full_state(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let layouts = [
                Preset::LadderGeneral.build(4, 2).unwrap(),
                excitation_chain().unwrap(),
                excitation_chain().unwrap().factor_excitation_gates().unwrap(),
            ];
            for mut a in layouts {
                randomize(&mut a, &mut rng);
                let full = a.state();
                let d = rng.random_range(0..a.slot_count());
                let split = a.split_at(d).unwrap();
                prop_assert!(max_diff(&full, &split.state_with(&split.param)) < 1e-12);
                // V1 and V2 alone compose with the gate the same way
                let mut s = split.v1.run();
                split.gate_op(&split.param).apply(&mut s);
                split.v2.apply(&mut s).unwrap();
                prop_assert!(max_diff(&full, &s) < 1e-12);
            }
        }
    }
}
