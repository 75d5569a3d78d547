//! Dense statevector engine.
//!
//! Qubit 0 is the most significant bit of a basis index, so for `m` qubits
//! qubit `q` lives at bit `m - 1 - q`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Mat4, C64, ONE, ZERO};

/// Tolerance for "normalized" states.
pub const NORM_TOL: f64 = 1e-10;
/// Tolerance for the unitarity guard on applied gates.
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    amps: Vec<C64>,
    qubits: usize,
}

impl Statevector {
    /// `|0...0>` on `qubits` qubits.
    pub fn zero(qubits: usize) -> Self {
        let mut amps = vec![ZERO; 1 << qubits];
        amps[0] = ONE;
        Self { amps, qubits }
    }

    pub fn basis(qubits: usize, index: usize) -> Result<Self> {
        let len = 1usize << qubits;
        if index >= len {
            return Err(Error::Index { index, len });
        }
        let mut amps = vec![ZERO; len];
        amps[index] = ONE;
        Ok(Self { amps, qubits })
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::Argument(format!(
                "amplitude count {len} is not a power of two"
            )));
        }
        Ok(Self {
            qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    /// Normalized state with i.i.d. complex Gaussian amplitudes (Haar distributed).
    pub fn random(qubits: usize, rng: &mut impl Rng) -> Self {
        let mut amps: Vec<C64> = (0..1usize << qubits)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let n = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= n);
        Self { amps, qubits }
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() < NORM_TOL
    }

    pub fn ensure_normalized(&self) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() < NORM_TOL {
            Ok(())
        } else {
            Err(Error::contract(format!("state norm {n} is not 1")))
        }
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::contract(format!("cannot normalize state of norm {n}")));
        }
        let inv = 1.0 / n;
        self.amps.iter_mut().for_each(|a| *a *= inv);
        Ok(())
    }

    pub fn scale(&mut self, s: C64) {
        self.amps.iter_mut().for_each(|a| *a *= s);
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, s: C64, other: &Statevector) -> Result<()> {
        self.check_same(other)?;
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += s * b;
        }
        Ok(())
    }

    fn check_same(&self, other: &Statevector) -> Result<()> {
        if self.qubits != other.qubits {
            return Err(Error::SizeMismatch {
                expected: self.qubits,
                found: other.qubits,
            });
        }
        Ok(())
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.qubits {
            return Err(Error::Argument(format!(
                "qubit {q} out of range for {} qubits",
                self.qubits
            )));
        }
        Ok(())
    }

    fn bit(&self, q: usize) -> usize {
        1 << (self.qubits - 1 - q)
    }

    /// `<self|ket>`.
    pub fn inner_product(&self, ket: &Statevector) -> Result<C64> {
        self.check_same(ket)?;
        Ok(self.inner_unchecked(ket))
    }

    pub(crate) fn inner_unchecked(&self, ket: &Statevector) -> C64 {
        self.amps
            .iter()
            .zip(&ket.amps)
            .fold(ZERO, |acc, (a, b)| acc + a.conj() * b)
    }

    pub fn apply_single_qubit(&mut self, qubit: usize, m: &Mat2) -> Result<()> {
        self.check_qubit(qubit)?;
        if !m.is_unitary(UNITARY_TOL) {
            return Err(Error::contract("single-qubit matrix is not unitary"));
        }
        self.apply_1q(qubit, m);
        Ok(())
    }

    pub(crate) fn apply_1q(&mut self, qubit: usize, m: &Mat2) {
        let bit = self.bit(qubit);
        let [[a, b], [c, d]] = m.0;
        for base in (0..self.amps.len()).step_by(2 * bit) {
            for j in base..base + bit {
                let x0 = self.amps[j];
                let x1 = self.amps[j + bit];
                self.amps[j] = a * x0 + b * x1;
                self.amps[j + bit] = c * x0 + d * x1;
            }
        }
    }

    /// Applies `m` to `target` on the subspace where `control` is 1.
    pub fn apply_controlled(&mut self, control: usize, target: usize, m: &Mat2) -> Result<()> {
        if control == target {
            return Err(Error::Argument(format!(
                "control and target are both qubit {control}"
            )));
        }
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if !m.is_unitary(UNITARY_TOL) {
            return Err(Error::contract("controlled matrix is not unitary"));
        }
        self.apply_controlled_unchecked(control, target, m);
        Ok(())
    }

    pub(crate) fn apply_controlled_unchecked(&mut self, control: usize, target: usize, m: &Mat2) {
        let cbit = self.bit(control);
        let tbit = self.bit(target);
        let [[a, b], [c, d]] = m.0;
        for j in 0..self.amps.len() {
            if j & cbit != 0 && j & tbit == 0 {
                let x0 = self.amps[j];
                let x1 = self.amps[j | tbit];
                self.amps[j] = a * x0 + b * x1;
                self.amps[j | tbit] = c * x0 + d * x1;
            }
        }
    }

    /// Applies a 4x4 matrix on the ordered pair `(first, second)`.
    pub fn apply_two_qubit(&mut self, first: usize, second: usize, m: &Mat4) -> Result<()> {
        if first == second {
            return Err(Error::Argument(format!("qubit pair ({first}, {second}) repeats")));
        }
        self.check_qubit(first)?;
        self.check_qubit(second)?;
        if !m.is_unitary(UNITARY_TOL) {
            return Err(Error::contract("two-qubit matrix is not unitary"));
        }
        self.apply_2q(first, second, m);
        Ok(())
    }

    pub(crate) fn apply_2q(&mut self, first: usize, second: usize, m: &Mat4) {
        let b1 = self.bit(first);
        let b2 = self.bit(second);
        let mask = b1 | b2;
        for base in 0..self.amps.len() {
            if base & mask != 0 {
                continue;
            }
            let idx = [base, base | b2, base | b1, base | b1 | b2];
            let x = idx.map(|i| self.amps[i]);
            for (r, &i) in idx.iter().enumerate() {
                let row = &m.0[r];
                self.amps[i] = row[0] * x[0] + row[1] * x[1] + row[2] * x[2] + row[3] * x[3];
            }
        }
    }
}
