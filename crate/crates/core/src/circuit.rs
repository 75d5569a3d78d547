//! Fixed gate sequences and the ancilla-based overlap circuit.

use crate::error::{Error, Result};
use crate::gates::GateParam;
use crate::linalg::{Mat2, Mat4, C64};
use crate::pauli::{Hamiltonian, Pauli, PauliString};
use crate::statevector::{Statevector, UNITARY_TOL};

#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    One { qubit: usize, gate: Mat2 },
    Controlled { control: usize, target: usize, gate: Mat2 },
    /// 4x4 gate on the ordered pair, row index `2*b_first + b_second`.
    Two { first: usize, second: usize, gate: Mat4 },
}

impl Op {
    pub fn cz(a: usize, b: usize) -> Op {
        Op::Controlled {
            control: a,
            target: b,
            gate: Mat2::Z,
        }
    }

    pub fn cx(control: usize, target: usize) -> Op {
        Op::Controlled {
            control,
            target,
            gate: Mat2::X,
        }
    }

    pub fn adjoint(&self) -> Op {
        match self {
            Op::One { qubit, gate } => Op::One {
                qubit: *qubit,
                gate: gate.adjoint(),
            },
            Op::Controlled {
                control,
                target,
                gate,
            } => Op::Controlled {
                control: *control,
                target: *target,
                gate: gate.adjoint(),
            },
            Op::Two {
                first,
                second,
                gate,
            } => Op::Two {
                first: *first,
                second: *second,
                gate: gate.adjoint(),
            },
        }
    }

    fn validate(&self, qubits: usize) -> Result<()> {
        let in_range = |q: usize| {
            if q < qubits {
                Ok(())
            } else {
                Err(Error::Argument(format!("qubit {q} out of range for {qubits} qubits")))
            }
        };
        let distinct = |a: usize, b: usize| {
            if a != b {
                Ok(())
            } else {
                Err(Error::Argument(format!("gate acts twice on qubit {a}")))
            }
        };
        let unitary = |ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::contract("gate matrix is not unitary"))
            }
        };
        match self {
            Op::One { qubit, gate } => {
                in_range(*qubit)?;
                unitary(gate.is_unitary(UNITARY_TOL))
            }
            Op::Controlled {
                control,
                target,
                gate,
            } => {
                in_range(*control)?;
                in_range(*target)?;
                distinct(*control, *target)?;
                unitary(gate.is_unitary(UNITARY_TOL))
            }
            Op::Two {
                first,
                second,
                gate,
            } => {
                in_range(*first)?;
                in_range(*second)?;
                distinct(*first, *second)?;
                unitary(gate.is_unitary(UNITARY_TOL))
            }
        }
    }

    pub(crate) fn apply(&self, state: &mut Statevector) {
        match self {
            Op::One { qubit, gate } => state.apply_1q(*qubit, gate),
            Op::Controlled {
                control,
                target,
                gate,
            } => state.apply_controlled_unchecked(*control, *target, gate),
            Op::Two {
                first,
                second,
                gate,
            } => state.apply_2q(*first, *second, gate),
        }
    }
}

/// Ordered list of gates on a fixed register; ops apply first to last.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    qubits: usize,
    ops: Vec<Op>,
}

impl Circuit {
    pub fn new(qubits: usize) -> Self {
        Self {
            qubits,
            ops: Vec::new(),
        }
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn push(&mut self, op: Op) -> Result<()> {
        op.validate(self.qubits)?;
        self.ops.push(op);
        Ok(())
    }

    /// Appends without validation; for ops built from already-checked parts.
    pub(crate) fn push_unchecked(&mut self, op: Op) {
        self.ops.push(op);
    }

    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        if other.qubits != self.qubits {
            return Err(Error::SizeMismatch {
                expected: self.qubits,
                found: other.qubits,
            });
        }
        self.ops.extend(other.ops.iter().cloned());
        Ok(())
    }

    pub fn adjoint(&self) -> Circuit {
        Circuit {
            qubits: self.qubits,
            ops: self.ops.iter().rev().map(Op::adjoint).collect(),
        }
    }

    pub fn apply(&self, state: &mut Statevector) -> Result<()> {
        if state.qubit_count() != self.qubits {
            return Err(Error::SizeMismatch {
                expected: self.qubits,
                found: state.qubit_count(),
            });
        }
        self.apply_unchecked(state);
        Ok(())
    }

    pub(crate) fn apply_unchecked(&self, state: &mut Statevector) {
        for op in &self.ops {
            op.apply(state);
        }
    }

    /// The circuit applied to `|0...0>`.
    pub fn run(&self) -> Statevector {
        let mut s = Statevector::zero(self.qubits);
        self.apply_unchecked(&mut s);
        s
    }
}

/// A rotation inserted on one qubit between circuit segments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Insertion {
    pub qubit: usize,
    pub gate: GateParam,
}

/// Which part of the overlap the ancilla circuit reads out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    Real,
    /// An `S^dagger` after the first Hadamard turns the readout into the imaginary part.
    Imag,
}

/// Ancilla-controlled insertion circuit on `m + 1` qubits, ancilla at index `m`.
///
/// With `|b0> = W2 W1 W0|0>` and `|b1> = W2 L2 W1 L1 W0|0>` this returns
/// `(<Z_a (x) O>, <Z_a (x) I>)`, which equal the real (or imaginary) parts of
/// `<b0|O|b1>` and `<b0|b1>`.
pub fn simulate_hadamard_test(
    w0: &Circuit,
    w1: &Circuit,
    w2: &Circuit,
    insert1: &Insertion,
    insert2: &Insertion,
    observable: &Hamiltonian,
    quadrature: Quadrature,
) -> Result<(f64, f64)> {
    let m = w0.qubit_count();
    for w in [w1, w2] {
        if w.qubit_count() != m {
            return Err(Error::SizeMismatch {
                expected: m,
                found: w.qubit_count(),
            });
        }
    }
    if observable.qubit_count() != m {
        return Err(Error::SizeMismatch {
            expected: m,
            found: observable.qubit_count(),
        });
    }
    for ins in [insert1, insert2] {
        if ins.qubit >= m {
            return Err(Error::Argument(format!(
                "insertion qubit {} collides with the ancilla",
                ins.qubit
            )));
        }
    }
    let ancilla = m;
    let mut state = Statevector::zero(m + 1);
    state.apply_1q(ancilla, &Mat2::H);
    if quadrature == Quadrature::Imag {
        let sdg = Mat2([[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(0.0, -1.0)]]);
        state.apply_1q(ancilla, &sdg);
    }
    let run = |w: &Circuit, state: &mut Statevector| {
        for op in w.ops() {
            op.apply(state);
        }
    };
    run(w0, &mut state);
    state.apply_controlled(ancilla, insert1.qubit, &crate::gates::rotation_matrix(&insert1.gate)?)?;
    run(w1, &mut state);
    state.apply_controlled(ancilla, insert2.qubit, &crate::gates::rotation_matrix(&insert2.gate)?)?;
    run(w2, &mut state);
    state.apply_1q(ancilla, &Mat2::H);

    let with_ancilla_z = |s: &PauliString| {
        let mut labels = s.labels().to_vec();
        labels.push(Pauli::Z);
        PauliString::new(labels).expect("non-empty")
    };
    let mut zo = 0.0;
    for t in observable.terms() {
        zo += t.coefficient * with_ancilla_z(&t.string).sandwich(&state, &state).re;
    }
    let zi = with_ancilla_z(&PauliString::identity(m))
        .sandwich(&state, &state)
        .re;
    Ok((zo, zi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::rot;
    use crate::linalg::Vec3;
    use crate::pauli::PauliTerm;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_axis(rng: &mut impl Rng) -> Vec3 {
        loop {
            let v = [rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5];
            if let Some(n) = crate::linalg::normalized(&v) {
                return n;
            }
        }
    }

    fn random_circuit(m: usize, depth: usize, rng: &mut impl Rng) -> Circuit {
        let mut c = Circuit::new(m);
        for _ in 0..depth {
            let q = rng.random_range(0..m);
            c.push(Op::One {
                qubit: q,
                gate: rot(rng.random::<f64>() * 6.0, &random_axis(rng)),
            })
            .unwrap();
            if m > 1 {
                let t = (q + 1 + rng.random_range(0..m - 1)) % m;
                c.push(Op::cz(q, t)).unwrap();
            }
        }
        c
    }

    fn random_observable(m: usize, rng: &mut impl Rng) -> Hamiltonian {
        let labels: String = (0..m).map(|_| ['I', 'X', 'Y', 'Z'][rng.random_range(0..4)]).collect();
        Hamiltonian::new(vec![PauliTerm::parse(1.0, &labels).unwrap()]).unwrap()
    }

    /// `<b0|O|b1>` and `<b0|b1>` by direct contraction.
    fn direct(
        w: [&Circuit; 3],
        i1: &Insertion,
        i2: &Insertion,
        obs: &Hamiltonian,
    ) -> (C64, C64) {
        let m = w[0].qubit_count();
        let mut b0 = Statevector::zero(m);
        for c in w {
            c.apply(&mut b0).unwrap();
        }
        let mut b1 = Statevector::zero(m);
        w[0].apply(&mut b1).unwrap();
        b1.apply_single_qubit(i1.qubit, &i1.gate.matrix()).unwrap();
        w[1].apply(&mut b1).unwrap();
        b1.apply_single_qubit(i2.qubit, &i2.gate.matrix()).unwrap();
        w[2].apply(&mut b1).unwrap();
        let ob1 = obs.apply(&b1).unwrap();
        (b0.inner_product(&ob1).unwrap(), b0.inner_product(&b1).unwrap())
    }

    #[test]
    fn identity_insertions_give_unit_overlaps() {
        let c = Circuit::new(2);
        let id = Insertion {
            qubit: 0,
            gate: GateParam::identity(),
        };
        let obs = Hamiltonian::parse_text("1 II").unwrap();
        let (zo, zi) = simulate_hadamard_test(&c, &c, &c, &id, &id, &obs, Quadrature::Real).unwrap();
        assert!((zo - 1.0).abs() < 1e-14 && (zi - 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_qubit_rx_pi_matches_hand_value() {
        // b0 = |0>, b1 = Rx(pi)|0> = -i|1>, so <0|Z|b1> = 0 and <0|b1> = 0.
        let c = Circuit::new(1);
        let rx = Insertion {
            qubit: 0,
            gate: GateParam::new(PI, [1.0, 0.0, 0.0]).unwrap(),
        };
        let id = Insertion {
            qubit: 0,
            gate: GateParam::identity(),
        };
        let obs = Hamiltonian::parse_text("1 Z").unwrap();
        let (zo, zi) = simulate_hadamard_test(&c, &c, &c, &rx, &id, &obs, Quadrature::Real).unwrap();
        assert!(zo.abs() < 1e-14 && zi.abs() < 1e-14);
        // Rx(pi/2)|0> = (|0> - i|1>)/sqrt2: <0|Z|b1> = 1/sqrt2 real.
        let half = Insertion {
            qubit: 0,
            gate: GateParam::new(PI / 2.0, [1.0, 0.0, 0.0]).unwrap(),
        };
        let (zo, _) = simulate_hadamard_test(&c, &c, &c, &half, &id, &obs, Quadrature::Real).unwrap();
        assert!((zo - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn ancilla_collision_rejected() {
        let c = Circuit::new(2);
        let bad = Insertion {
            qubit: 2,
            gate: GateParam::identity(),
        };
        let obs = Hamiltonian::parse_text("1 ZZ").unwrap();
        assert!(matches!(
            simulate_hadamard_test(&c, &c, &c, &bad, &bad, &obs, Quadrature::Real),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn adjoint_undoes_circuit() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = random_circuit(3, 6, &mut rng);
        let mut s = c.run();
        c.adjoint().apply(&mut s).unwrap();
        assert!((s.amplitudes()[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn norm_drift_over_many_gates() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = random_circuit(4, 5000, &mut rng);
        let s = c.run();
        assert!((s.norm() - 1.0).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn ancilla_circuit_matches_direct_overlaps(seed in any::<u64>(), m in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w0 = random_circuit(m, 3, &mut rng);
            let w1 = random_circuit(m, 3, &mut rng);
            let w2 = random_circuit(m, 3, &mut rng);
            let i1 = Insertion { qubit: rng.random_range(0..m), gate: GateParam::new(rng.random::<f64>() * 8.0 - 4.0, random_axis(&mut rng)).unwrap() };
            let i2 = Insertion { qubit: rng.random_range(0..m), gate: GateParam::new(rng.random::<f64>() * 8.0 - 4.0, random_axis(&mut rng)).unwrap() };
            let obs = random_observable(m, &mut rng);
            let (zo_d, zi_d) = direct([&w0, &w1, &w2], &i1, &i2, &obs);
            let (zo, zi) = simulate_hadamard_test(&w0, &w1, &w2, &i1, &i2, &obs, Quadrature::Real).unwrap();
            prop_assert!((zo - zo_d.re).abs() < 1e-10);
            prop_assert!((zi - zi_d.re).abs() < 1e-10);
            let (zo, zi) = simulate_hadamard_test(&w0, &w1, &w2, &i1, &i2, &obs, Quadrature::Imag).unwrap();
            prop_assert!((zo - zo_d.im).abs() < 1e-10);
            prop_assert!((zi - zi_d.im).abs() < 1e-10);
        }
    }
}
