//! Pauli strings, weighted terms and Hamiltonians.
//!
//! Label `k` of a string acts on qubit `k`; qubit 0 is the most significant
//! bit of a basis index. `Y|0> = i|1>`, `Y|1> = -i|0>`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{C64, I, ONE, ZERO};
use crate::statevector::Statevector;

/// Largest qubit count for which dense matrices are built.
pub const DEFAULT_ORACLE_CAP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString(Vec<Pauli>);

/// Bit masks describing `O|i> = phase(i) |i ^ flip|`.
#[derive(Debug, Clone, Copy)]
struct Masks {
    flip: usize,
    sign: usize,
    base_phase: C64,
}

impl Masks {
    #[inline]
    fn phase(&self, i: usize) -> C64 {
        if (i & self.sign).count_ones() % 2 == 1 {
            -self.base_phase
        } else {
            self.base_phase
        }
    }
}

impl PauliString {
    pub fn new(labels: Vec<Pauli>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Argument("empty Pauli string".into()));
        }
        Ok(Self(labels))
    }

    pub fn identity(qubits: usize) -> Self {
        Self(vec![Pauli::I; qubits])
    }

    /// Single non-identity label `p` on `qubit`.
    pub fn single(qubits: usize, qubit: usize, p: Pauli) -> Self {
        let mut labels = vec![Pauli::I; qubits];
        labels[qubit] = p;
        Self(labels)
    }

    pub fn labels(&self) -> &[Pauli] {
        &self.0
    }

    pub fn qubit_count(&self) -> usize {
        self.0.len()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    fn masks(&self) -> Masks {
        let m = self.0.len();
        let (mut flip, mut sign, mut ny) = (0usize, 0usize, 0u32);
        for (q, p) in self.0.iter().enumerate() {
            let bit = 1 << (m - 1 - q);
            match p {
                Pauli::I => {}
                Pauli::X => flip |= bit,
                Pauli::Y => {
                    flip |= bit;
                    sign |= bit;
                    ny += 1;
                }
                Pauli::Z => sign |= bit,
            }
        }
        let base_phase = [ONE, I, -ONE, -I][(ny % 4) as usize];
        Masks {
            flip,
            sign,
            base_phase,
        }
    }

    /// `O|state>` without a coefficient.
    pub(crate) fn apply_raw(&self, state: &Statevector) -> Statevector {
        let mk = self.masks();
        let src = state.amplitudes();
        let mut out = vec![ZERO; src.len()];
        for (i, a) in src.iter().enumerate() {
            out[i ^ mk.flip] = mk.phase(i) * a;
        }
        Statevector::from_amplitudes(out).expect("length preserved")
    }

    /// `<bra|O|ket>` without size checks.
    pub(crate) fn sandwich(&self, bra: &Statevector, ket: &Statevector) -> C64 {
        let mk = self.masks();
        let (b, k) = (bra.amplitudes(), ket.amplitudes());
        let mut acc = ZERO;
        for (i, a) in k.iter().enumerate() {
            acc += b[i ^ mk.flip].conj() * mk.phase(i) * a;
        }
        acc
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let labels = s
            .chars()
            .map(|c| {
                Pauli::from_char(c)
                    .ok_or_else(|| Error::Argument(format!("bad Pauli label {c:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        PauliString::new(labels)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|p| write!(f, "{}", p.as_char()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub string: PauliString,
}

impl PauliTerm {
    pub fn new(coefficient: f64, string: PauliString) -> Result<Self> {
        if !coefficient.is_finite() {
            return Err(Error::Argument(format!("coefficient {coefficient} is not finite")));
        }
        Ok(Self {
            coefficient,
            string,
        })
    }

    /// `PauliTerm::parse(0.5, "XY")`.
    pub fn parse(coefficient: f64, labels: &str) -> Result<Self> {
        Self::new(coefficient, labels.parse()?)
    }

    pub fn qubit_count(&self) -> usize {
        self.string.qubit_count()
    }

    fn check(&self, state: &Statevector) -> Result<()> {
        if self.qubit_count() != state.qubit_count() {
            return Err(Error::SizeMismatch {
                expected: self.qubit_count(),
                found: state.qubit_count(),
            });
        }
        Ok(())
    }
}

/// `coefficient * O |state>`.
pub fn apply_pauli_string(term: &PauliTerm, state: &Statevector) -> Result<Statevector> {
    term.check(state)?;
    let mut out = term.string.apply_raw(state);
    out.scale(C64::new(term.coefficient, 0.0));
    Ok(out)
}

/// `coefficient * <state|O|state>` for a normalized state.
pub fn expectation(term: &PauliTerm, state: &Statevector) -> Result<f64> {
    term.check(state)?;
    state.ensure_normalized()?;
    let v = term.string.sandwich(state, state);
    if v.im.abs() > 1e-10 {
        return Err(Error::contract(format!(
            "Pauli expectation has imaginary part {}",
            v.im
        )));
    }
    Ok(term.coefficient * v.re)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    terms: Vec<PauliTerm>,
    qubits: usize,
}

impl Hamiltonian {
    pub fn new(terms: Vec<PauliTerm>) -> Result<Self> {
        let first = terms.first().ok_or(Error::EmptyHamiltonian)?;
        let qubits = first.qubit_count();
        if let Some(bad) = terms.iter().find(|t| t.qubit_count() != qubits) {
            return Err(Error::SizeMismatch {
                expected: qubits,
                found: bad.qubit_count(),
            });
        }
        Ok(Self { terms, qubits })
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `J sum_edges (XX + YY + ZZ) + h sum_i Z_i`, edges `(i, i+1)` and the wrap edge when periodic.
    ///
    /// Terms come grouped per edge as XX, YY, ZZ, followed by the field terms.
    pub fn heisenberg_1d(sites: usize, j: f64, h: f64, periodic: bool) -> Result<Self> {
        if sites < 2 {
            return Err(Error::Argument(format!("Heisenberg chain needs >= 2 sites, got {sites}")));
        }
        let mut edges: Vec<(usize, usize)> = (0..sites - 1).map(|i| (i, i + 1)).collect();
        if periodic && sites > 2 {
            edges.push((sites - 1, 0));
        }
        let mut terms = Vec::with_capacity(3 * edges.len() + sites);
        for (a, b) in edges {
            for p in [Pauli::X, Pauli::Y, Pauli::Z] {
                let mut labels = vec![Pauli::I; sites];
                labels[a] = p;
                labels[b] = p;
                terms.push(PauliTerm::new(j, PauliString(labels))?);
            }
        }
        for i in 0..sites {
            terms.push(PauliTerm::new(h, PauliString::single(sites, i, Pauli::Z))?);
        }
        Self::new(terms)
    }

    /// Parses `<coefficient> <pauli-string>` lines; `#` starts a comment.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut width: Option<usize> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let mut fields = line.split_whitespace();
            let (Some(c), Some(s), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(err(format!("expected `<coefficient> <pauli-string>`, got {line:?}")));
            };
            let coefficient: f64 = c
                .parse()
                .map_err(|_| err(format!("non-numeric coefficient {c:?}")))?;
            if !coefficient.is_finite() {
                return Err(err(format!("coefficient {c:?} is not finite")));
            }
            let string: PauliString = s.parse().map_err(|e: Error| err(e.to_string()))?;
            match width {
                None => width = Some(string.qubit_count()),
                Some(w) if w != string.qubit_count() => {
                    return Err(err(format!(
                        "Pauli string {s:?} has length {}, expected {w}",
                        string.qubit_count()
                    )))
                }
                _ => {}
            }
            terms.push(PauliTerm {
                coefficient,
                string,
            });
        }
        Self::new(terms)
    }

    /// Text form accepted by [`Hamiltonian::parse_text`]; coefficients round-trip exactly.
    pub fn to_text(&self) -> String {
        self.terms
            .iter()
            .map(|t| format!("{} {}\n", t.coefficient, t.string))
            .collect()
    }

    /// `H|state>`.
    pub fn apply(&self, state: &Statevector) -> Result<Statevector> {
        let mut out = Statevector::from_amplitudes(vec![ZERO; state.len()])?;
        for t in &self.terms {
            t.check(state)?;
            out.add_scaled(C64::new(t.coefficient, 0.0), &t.string.apply_raw(state))?;
        }
        Ok(out)
    }

    /// `<state|H|state>` for a normalized state.
    pub fn energy(&self, state: &Statevector) -> Result<f64> {
        self.terms.iter().map(|t| expectation(t, state)).sum()
    }
}

/// Dense `sum_k h_k O_k` with the default qubit cap.
pub fn dense_matrix(h: &Hamiltonian) -> Result<DMatrix<C64>> {
    dense_matrix_capped(h, DEFAULT_ORACLE_CAP)
}

pub fn dense_matrix_capped(h: &Hamiltonian, cap: usize) -> Result<DMatrix<C64>> {
    let m = h.qubit_count();
    if m > cap {
        return Err(Error::Resource(format!(
            "{m} qubits exceeds the dense-matrix cap of {cap}"
        )));
    }
    let dim = 1usize << m;
    let mut out = DMatrix::from_element(dim, dim, ZERO);
    for t in h.terms() {
        let mk = t.string.masks();
        for col in 0..dim {
            out[(col ^ mk.flip, col)] += mk.phase(col) * t.coefficient;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat2;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn kron_dense(s: &PauliString) -> DMatrix<C64> {
        let mut out = DMatrix::from_element(1, 1, ONE);
        for p in s.labels() {
            let m = match p {
                Pauli::I => Mat2::IDENTITY,
                Pauli::X => Mat2::X,
                Pauli::Y => Mat2::Y,
                Pauli::Z => Mat2::Z,
            };
            let m = DMatrix::from_fn(2, 2, |r, c| m.0[r][c]);
            out = out.kronecker(&m);
        }
        out
    }

    fn to_vector(s: &Statevector) -> nalgebra::DVector<C64> {
        nalgebra::DVector::from_column_slice(s.amplitudes())
    }

    #[test]
    fn identity_term_leaves_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = Statevector::random(3, &mut rng);
        let t = PauliTerm::parse(1.0, "III").unwrap();
        assert_eq!(apply_pauli_string(&t, &s).unwrap(), s);
    }

    #[test]
    fn z_on_one_flips_sign() {
        let s = Statevector::basis(1, 1).unwrap();
        let out = apply_pauli_string(&PauliTerm::parse(1.0, "Z").unwrap(), &s).unwrap();
        assert_eq!(out.amplitudes()[1], -ONE);
    }

    #[test]
    fn xy_on_zero_matches_kronecker_product() {
        let t = PauliTerm::parse(0.5, "XY").unwrap();
        let out = apply_pauli_string(&t, &Statevector::zero(2)).unwrap();
        assert!((out.amplitudes()[3] - C64::new(0.0, 0.5)).norm() < 1e-15);
        let dense = kron_dense(&t.string) * to_vector(&Statevector::zero(2)) * C64::new(0.5, 0.0);
        for (a, b) in out.amplitudes().iter().zip(dense.iter()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn simple_expectations() {
        let z = PauliTerm::parse(1.0, "Z").unwrap();
        assert_eq!(expectation(&z, &Statevector::zero(1)).unwrap(), 1.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = Statevector::from_amplitudes(vec![C64::new(h, 0.0); 2]).unwrap();
        let x = PauliTerm::parse(1.0, "X").unwrap();
        assert!((expectation(&x, &plus).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unnormalized_expectation_rejected() {
        let s = Statevector::from_amplitudes(vec![ONE, ONE]).unwrap();
        let z = PauliTerm::parse(1.0, "Z").unwrap();
        assert!(matches!(expectation(&z, &s), Err(Error::Contract(_))));
    }

    #[test]
    fn size_mismatch_rejected() {
        let z = PauliTerm::parse(1.0, "ZZ").unwrap();
        assert!(matches!(
            apply_pauli_string(&z, &Statevector::zero(3)),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn dense_z_is_diagonal() {
        let h = Hamiltonian::parse_text("1.0 Z").unwrap();
        let m = dense_matrix(&h).unwrap();
        assert_eq!(m[(0, 0)], ONE);
        assert_eq!(m[(1, 1)], -ONE);
        assert_eq!(m[(0, 1)], ZERO);
    }

    #[test]
    fn two_site_coupling_spectrum() {
        let h = Hamiltonian::parse_text("1 XX\n1 YY\n1 ZZ\n").unwrap();
        let m = dense_matrix(&h).unwrap();
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let expected = [-3.0, 1.0, 1.0, 1.0];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{ev:?}");
        }
    }

    #[test]
    fn heisenberg_five_sites_has_twenty_terms() {
        let h = Hamiltonian::heisenberg_1d(5, 1.0, 1.0, true).unwrap();
        assert_eq!(h.len(), 20);
        assert_eq!(h.terms()[0].string.to_string(), "XXIII");
        assert_eq!(h.terms()[14].string.to_string(), "ZIIIZ");
        assert_eq!(h.terms()[15].string.to_string(), "ZIIII");
    }

    #[test]
    fn dense_matrix_respects_cap() {
        let h = Hamiltonian::parse_text("1.0 ZZZ").unwrap();
        assert!(matches!(dense_matrix_capped(&h, 2), Err(Error::Resource(_))));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = Hamiltonian::parse_text("# c\n1.0 ZZ\n1.0 ZZZ\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = Hamiltonian::parse_text("abc ZZ").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        let e = Hamiltonian::parse_text("1.0 ZQ").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        let e = Hamiltonian::parse_text("# only comments\n\n").unwrap_err();
        assert!(matches!(e, Error::EmptyHamiltonian));
    }

    fn pauli_string(m: usize) -> impl Strategy<Value = PauliString> {
        prop::collection::vec(
            prop_oneof![Just(Pauli::I), Just(Pauli::X), Just(Pauli::Y), Just(Pauli::Z)],
            m,
        )
        .prop_map(PauliString)
    }

    fn term_and_state() -> impl Strategy<Value = (PauliTerm, Statevector)> {
        (1usize..=4).prop_flat_map(|m| {
            (pauli_string(m), -3.0f64..3.0, any::<u64>()).prop_map(move |(s, c, seed)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (PauliTerm::new(c, s).unwrap(), Statevector::random(m, &mut rng))
            })
        })
    }

    proptest! {
        #[test]
        fn pauli_action_is_an_involution((term, state) in term_and_state()) {
            let unit = PauliTerm::new(1.0, term.string.clone()).unwrap();
            let twice = apply_pauli_string(&unit, &apply_pauli_string(&unit, &state).unwrap()).unwrap();
            for (a, b) in twice.amplitudes().iter().zip(state.amplitudes()) {
                prop_assert!((a - b).norm() < 1e-12);
            }
        }

        #[test]
        fn applied_norm_scales_with_coefficient((term, state) in term_and_state()) {
            let out = apply_pauli_string(&term, &state).unwrap();
            prop_assert!((out.norm() - term.coefficient.abs()).abs() < 1e-12);
        }

        #[test]
        fn expectation_is_bounded((term, state) in term_and_state()) {
            let e = expectation(&term, &state).unwrap();
            prop_assert!(e.abs() <= term.coefficient.abs() + 1e-12);
        }

        #[test]
        fn expectation_matches_dense_sandwich((term, state) in term_and_state()) {
            let v = to_vector(&state);
            let dense = kron_dense(&term.string);
            let e = (v.adjoint() * dense * &v)[(0, 0)].re * term.coefficient;
            prop_assert!((expectation(&term, &state).unwrap() - e).abs() < 1e-12);
        }

        #[test]
        fn dense_matrix_agrees_with_term_sum(
            strings in prop::collection::vec(pauli_string(3), 1..6),
            coeffs in prop::collection::vec(-2.0f64..2.0, 6),
            seed in any::<u64>(),
        ) {
            let terms = strings.into_iter().zip(coeffs).map(|(s, c)| PauliTerm::new(c, s).unwrap()).collect();
            let h = Hamiltonian::new(terms).unwrap();
            let m = dense_matrix(&h).unwrap();
            prop_assert!((&m - m.adjoint()).camax() < 1e-12);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = Statevector::random(3, &mut rng);
            let direct = h.apply(&s).unwrap();
            let dense = &m * to_vector(&s);
            for (a, b) in direct.amplitudes().iter().zip(dense.iter()) {
                prop_assert!((a - b).norm() < 1e-12);
            }
        }

        #[test]
        fn text_round_trip(
            strings in prop::collection::vec(pauli_string(4), 1..8),
            coeffs in prop::collection::vec(-1e3f64..1e3, 8),
        ) {
            let terms = strings.into_iter().zip(coeffs).map(|(s, c)| PauliTerm::new(c, s).unwrap()).collect();
            let h = Hamiltonian::new(terms).unwrap();
            prop_assert_eq!(Hamiltonian::parse_text(&h.to_text()).unwrap(), h);
        }
    }
}
