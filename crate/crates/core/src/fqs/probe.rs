//! Measurement-level quantities around one slot, either contracted directly or
//! read out of simulated insertion circuits.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::{alpha_beta, first_term, generator, step_coefficients, GMatrix, GVector, HVector, QSet, TimeKind};
use crate::ansatz::{Ansatz, Site, Split, X_AXIS, Y_AXIS, Z_AXIS};
use crate::circuit::{simulate_hadamard_test, Circuit, Insertion, Op, Quadrature};
use crate::error::{Error, Result};
use crate::gates::{GateKind, GateParam};
use crate::linalg::{self, Mat2, Vec3, C64};
use crate::pauli::{Hamiltonian, PauliString, PauliTerm};
use crate::statevector::Statevector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    /// Contract the required overlaps on the statevector.
    #[default]
    Exact,
    /// Simulate each insertion circuit and read out its expectation value.
    Circuit,
}

/// The fractional propagator applied by one slot update.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTarget {
    pub observable: PauliString,
    pub coeff: f64,
    pub tau_step: f64,
    pub kind: TimeKind,
}

impl StepTarget {
    pub fn new(term: &PauliTerm, tau_step: f64, kind: TimeKind) -> Self {
        Self {
            observable: term.string.clone(),
            coeff: term.coefficient,
            tau_step,
            kind,
        }
    }

    /// `(a, b)` with `P = a I - b O` (imaginary) or `P = a I + i b O` (real).
    pub fn coefficients(&self) -> (f64, f64) {
        step_coefficients(self.kind, self.coeff, self.tau_step)
    }

    /// `Re <psi|P|phi>`.
    pub fn overlap(&self, psi: &Statevector, phi: &Statevector) -> f64 {
        let (a, b) = self.coefficients();
        let plain = psi.inner_unchecked(phi);
        let with_o = self.observable.sandwich(psi, phi);
        self.combine(a * plain.re, b, with_o)
    }

    fn combine(&self, a_plain: f64, b: f64, with_o: C64) -> f64 {
        match self.kind {
            TimeKind::Imaginary => a_plain - b * with_o.re,
            TimeKind::Real => a_plain - b * with_o.im,
        }
    }
}

const AXES: [Vec3; 3] = [X_AXIS, Y_AXIS, Z_AXIS];
const AXIS_NAMES: [char; 3] = ['x', 'y', 'z'];

/// Evaluates the closed-form coefficients for one slot and logs which distinct
/// measurement types were needed.
#[derive(Debug)]
pub struct Probe<'a> {
    split: Split,
    target: &'a StepTarget,
    mode: EvalMode,
    /// `V1|0>`
    before: Statevector,
    /// The current full state.
    reference: Statevector,
    observable: Hamiltonian,
    log: BTreeSet<String>,
}

impl<'a> Probe<'a> {
    pub fn new(ansatz: &Ansatz, d: usize, target: &'a StepTarget, mode: EvalMode) -> Result<Self> {
        if target.observable.qubit_count() != ansatz.qubit_count() {
            return Err(Error::SizeMismatch {
                expected: ansatz.qubit_count(),
                found: target.observable.qubit_count(),
            });
        }
        let split = ansatz.split_at(d)?;
        let before = split.v1.run();
        let reference = split.state_with(&split.param);
        let observable = Hamiltonian::new(vec![PauliTerm::new(1.0, target.observable.clone())?])?;
        Ok(Self {
            split,
            target,
            mode,
            before,
            reference,
            observable,
            log: BTreeSet::new(),
        })
    }

    pub fn split(&self) -> &Split {
        &self.split
    }

    pub fn prev(&self) -> &GateParam {
        &self.split.param
    }

    pub fn reference(&self) -> &Statevector {
        &self.reference
    }

    /// Distinct measurement types used so far.
    pub fn measurements(&self) -> usize {
        self.log.len()
    }

    pub fn log(&self) -> &BTreeSet<String> {
        &self.log
    }

    /// `Re <psi|P|U(p)|0>` by direct overlap; used for checks, not logged.
    pub fn objective(&self, p: &GateParam) -> f64 {
        self.target.overlap(&self.reference, &self.split.state_with(p))
    }

    fn record(&mut self, key: String) {
        self.log.insert(key);
    }

    fn single_qubit(&self) -> Result<usize> {
        match self.split.site {
            Site::Single { qubit } => Ok(qubit),
            Site::Composite { .. } => Err(Error::Kind("slot sits inside a two-qubit gate".into())),
        }
    }

    fn composite(&self) -> Result<(usize, usize, crate::gates::Frame)> {
        match &self.split.site {
            Site::Composite { first, second, frame } => Ok((*first, *second, frame.clone())),
            Site::Single { .. } => Err(Error::Kind("slot is a single-qubit rotation".into())),
        }
    }

    fn finish(&self, mut s: Statevector) -> Statevector {
        self.split.v2.apply_unchecked(&mut s);
        s
    }

    fn with_1q(&self, base: &Statevector, qubit: usize, m: &Mat2) -> Statevector {
        let mut s = base.clone();
        s.apply_1q(qubit, m);
        s
    }

    /// `R'V1|0>`
    fn after_gate(&self, qubit: usize) -> Statevector {
        self.with_1q(&self.before, qubit, &self.split.param.matrix())
    }

    fn expect(&self, s: &Statevector) -> f64 {
        self.target.observable.sandwich(s, s).re
    }

    /// Observable after inserting `R_u(+-pi/2)` behind the gate; `None` means no insertion.
    pub fn q_value(&mut self, insertion: Option<(Vec3, bool)>) -> Result<f64> {
        let qubit = self.single_qubit()?;
        let phi = self.after_gate(qubit);
        let Some((u, plus)) = insertion else {
            self.record("Q+0".into());
            return Ok(self.expect(&self.finish(phi)));
        };
        self.record(format!("Q{}{}", if plus { '+' } else { '-' }, axis_label(&u)));
        match self.mode {
            EvalMode::Exact => {
                let a = self.finish(phi.clone());
                let b = self.finish(self.with_1q(&phi, qubit, &Mat2::n_dot_sigma(&u)));
                let o = &self.target.observable;
                let mean = (o.sandwich(&a, &a).re + o.sandwich(&b, &b).re) / 2.0;
                let cross = o.sandwich(&a, &b).im;
                Ok(if plus { mean + cross } else { mean - cross })
            }
            EvalMode::Circuit => {
                let angle = if plus { FRAC_PI_2 } else { -FRAC_PI_2 };
                let s = self.with_1q(&phi, qubit, &crate::gates::rot(angle, &u));
                Ok(self.expect(&self.finish(s)))
            }
        }
    }

    pub fn qset(&mut self) -> Result<QSet> {
        let q_plus_0 = self.q_value(None)?;
        let mut q_plus = [0.0; 3];
        let mut q_minus = [0.0; 3];
        for p in 0..3 {
            q_plus[p] = self.q_value(Some((AXES[p], true)))?;
            q_minus[p] = self.q_value(Some((AXES[p], false)))?;
        }
        Ok(QSet { q_plus_0, q_plus, q_minus })
    }

    /// `Re <a|O|b_u>` with `a = V2 R'V1|0>` and `b_u = V2 (u.sigma) R'V1|0>`.
    ///
    /// The circuit reads the imaginary quadrature with `R_u(pi) = -i u.sigma` inserted.
    pub fn cross_real(&mut self, u: &Vec3) -> Result<f64> {
        let qubit = self.single_qubit()?;
        self.record(format!("W{}", axis_label(u)));
        match self.mode {
            EvalMode::Exact => {
                let phi = self.after_gate(qubit);
                let a = self.finish(phi.clone());
                let b = self.finish(self.with_1q(&phi, qubit, &Mat2::n_dot_sigma(u)));
                Ok(self.target.observable.sandwich(&a, &b).re)
            }
            EvalMode::Circuit => {
                let mut w0 = self.split.v1.clone();
                w0.push(self.split.gate_op(&self.split.param))?;
                let ins = Insertion {
                    qubit,
                    gate: GateParam { theta: PI, axis: *u },
                };
                let id = Insertion {
                    qubit,
                    gate: GateParam::identity(),
                };
                let empty = Circuit::new(w0.qubit_count());
                let (zo, _) = simulate_hadamard_test(&w0, &empty, &self.split.v2, &ins, &id, &self.observable, Quadrature::Imag)?;
                Ok(-zo)
            }
        }
    }

    /// Second term for component `mu` given either the seven Q values or the real-time cross terms.
    fn second(&self, mu: usize, qset: Option<&QSet>, w: Option<&Vec3>) -> f64 {
        let ab = alpha_beta(mu, self.prev());
        match self.target.kind {
            TimeKind::Imaginary => generator(qset.expect("imaginary time uses Q values"), &ab),
            TimeKind::Real => {
                let w = w.expect("real time uses cross terms");
                -(ab.alpha / 2.0).sin() * linalg::dot(&ab.beta, w)
            }
        }
    }

    /// `g_mu`, `mu = 0..4`, for a free single-qubit rotation.
    pub fn gvector(&mut self) -> Result<GVector> {
        let (a, b) = self.target.coefficients();
        let (qset, w) = match self.target.kind {
            TimeKind::Imaginary => (Some(self.qset()?), None),
            TimeKind::Real => {
                let mut w = [0.0; 3];
                for p in 0..3 {
                    w[p] = self.cross_real(&AXES[p])?;
                }
                (None, Some(w))
            }
        };
        let mut g = [0.0; 4];
        for (mu, v) in g.iter_mut().enumerate() {
            *v = a * first_term(mu, self.prev()) - b * self.second(mu, qset.as_ref(), w.as_ref());
        }
        Ok(GVector::from_array(g))
    }

    /// `(g0, g_d)` for a rotation confined to the current axis line.
    pub fn angle_coefficients(&mut self) -> Result<(f64, f64)> {
        let (a, b) = self.target.coefficients();
        let prev = *self.prev();
        let n = prev.axis;
        let (s, c) = (prev.theta / 2.0).sin_cos();
        let (t0, td) = match self.target.kind {
            TimeKind::Imaginary => {
                let q0 = self.q_value(None)?;
                let qp = self.q_value(Some((n, true)))?;
                let qm = self.q_value(Some((n, false)))?;
                let gen = |alpha: f64| (alpha / 2.0).cos() * q0 + (alpha / 2.0).sin() * (qp - qm) / 2.0;
                (gen(-prev.theta), gen(PI - prev.theta))
            }
            TimeKind::Real => {
                let wn = self.cross_real(&n)?;
                let im = |alpha: f64| -(alpha / 2.0).sin() * wn;
                (im(-prev.theta), im(PI - prev.theta))
            }
        };
        Ok((a * c - b * t0, a * s - b * td))
    }

    /// `Re <v|sigma_q O' sigma_p|v>` with `v = V1|0>`, from observables with the gate replaced by `pi` rotations.
    pub fn axis_matrix(&mut self) -> Result<[[f64; 3]; 3]> {
        let qubit = self.single_qubit()?;
        let mut m = [[0.0; 3]; 3];
        match self.mode {
            EvalMode::Exact => {
                let c: Vec<Statevector> = AXES
                    .iter()
                    .map(|u| self.finish(self.with_1q(&self.before, qubit, &Mat2::n_dot_sigma(u))))
                    .collect();
                for p in 0..3 {
                    for q in 0..3 {
                        m[p][q] = self.target.observable.sandwich(&c[q], &c[p]).re;
                    }
                }
            }
            EvalMode::Circuit => {
                let flipped = |u: &Vec3| self.expect(&self.finish(self.with_1q(&self.before, qubit, &crate::gates::rot(PI, u))));
                for p in 0..3 {
                    m[p][p] = flipped(&AXES[p]);
                }
                for p in 0..3 {
                    for q in p + 1..3 {
                        let u = linalg::scale(&[AXES[p][0] + AXES[q][0], AXES[p][1] + AXES[q][1], AXES[p][2] + AXES[q][2]], FRAC_1_SQRT_2);
                        m[p][q] = flipped(&u) - (m[p][p] + m[q][q]) / 2.0;
                        m[q][p] = m[p][q];
                    }
                }
            }
        }
        for p in 0..3 {
            self.record(format!("M{}{}", AXIS_NAMES[p], AXIS_NAMES[p]));
            for q in p + 1..3 {
                self.record(format!("M{}{}", AXIS_NAMES[p], AXIS_NAMES[q]));
            }
        }
        Ok(m)
    }

    /// `g_p` for an axis-only gate (`theta = pi`).
    pub fn axis_gradient(&mut self) -> Result<Vec3> {
        let (a, b) = self.target.coefficients();
        let n = self.prev().axis;
        let mut g = [0.0; 3];
        match self.target.kind {
            TimeKind::Imaginary => {
                let m = self.axis_matrix()?;
                for p in 0..3 {
                    let mn: f64 = (0..3).map(|q| m[p][q] * n[q]).sum();
                    g[p] = a * first_term(p + 1, self.prev()) - b * mn;
                }
            }
            TimeKind::Real => {
                let mut w = [0.0; 3];
                for p in 0..3 {
                    w[p] = self.cross_real(&AXES[p])?;
                }
                for p in 0..3 {
                    g[p] = a * first_term(p + 1, self.prev()) - b * self.second(p + 1, None, Some(&w));
                }
            }
        }
        Ok(g)
    }

    /// `Re <psi|P V2 A L (R' B R'^dagger) Rr C V1|0>` for a composite slot.
    pub fn overlap(&mut self, key: &str, l: &GateParam, rr: &GateParam) -> Result<f64> {
        let (first, second, frame) = self.composite()?;
        self.record(key.to_string());
        let n = self.before.qubit_count();
        let two = |m| Op::Two { first, second, gate: m };
        let rp = self.split.param.matrix();
        let mut w0 = self.split.v1.clone();
        w0.push(two(frame.c))?;
        let mut w1 = Circuit::new(n);
        w1.push(Op::One { qubit: second, gate: rp.adjoint() })?;
        w1.push(two(frame.b))?;
        w1.push(Op::One { qubit: second, gate: rp })?;
        let mut w2 = Circuit::new(n);
        w2.push(two(frame.a))?;
        w2.append(&self.split.v2)?;
        match self.mode {
            EvalMode::Exact => {
                let mut s = self.before.clone();
                w0.ops()[self.split.v1.len()..].iter().for_each(|op| op.apply(&mut s));
                s.apply_1q(second, &rr.matrix());
                w1.apply_unchecked(&mut s);
                s.apply_1q(second, &l.matrix());
                w2.apply_unchecked(&mut s);
                Ok(self.target.overlap(&self.reference, &s))
            }
            EvalMode::Circuit => {
                let (a, b) = self.target.coefficients();
                let ins1 = Insertion { qubit: second, gate: *rr };
                let ins2 = Insertion { qubit: second, gate: *l };
                let run = |q| simulate_hadamard_test(&w0, &w1, &w2, &ins1, &ins2, &self.observable, q);
                let (zo, zi) = run(Quadrature::Real)?;
                Ok(match self.target.kind {
                    TimeKind::Imaginary => a * zi - b * zo,
                    TimeKind::Real => {
                        let (zo_im, _) = run(Quadrature::Imag)?;
                        a * zi - b * zo_im
                    }
                })
            }
        }
    }

    fn g_entry(&mut self, p: usize, q: usize) -> Result<f64> {
        let prev = *self.prev();
        let l = alpha_beta(q + 1, &prev).param();
        let rr = alpha_beta(p + 1, &prev).inverse_param();
        self.overlap(&format!("G{}{}", AXIS_NAMES[p], AXIS_NAMES[q]), &l, &rr)
    }

    /// All nine entries, or eight when `antisymmetric_xy` lets `G_yx = -G_xy` stand in.
    pub fn gmatrix(&mut self, antisymmetric_xy: bool) -> Result<GMatrix> {
        let mut g = [[0.0; 3]; 3];
        for p in 0..3 {
            for q in 0..3 {
                if antisymmetric_xy && (p, q) == (1, 0) {
                    continue;
                }
                g[p][q] = self.g_entry(p, q)?;
            }
        }
        if antisymmetric_xy {
            g[1][0] = -g[0][1];
        }
        Ok(GMatrix::new(g))
    }

    /// Half-angle coefficients for an angle-only factor or a fixed-axis composite.
    pub fn hvector(&mut self) -> Result<HVector> {
        let prev = *self.prev();
        let n = prev.axis;
        let fwd = GateParam { theta: PI - prev.theta, axis: n };
        let back = GateParam { theta: prev.theta - PI, axis: n };
        let r_dag = GateParam { theta: -prev.theta, axis: n };
        Ok(HVector {
            h0: self.overlap("h0", &r_dag, &prev)?,
            h1: self.overlap("h1", &fwd, &prev)?,
            h2: self.overlap("h2", &r_dag, &back)?,
            h3: self.overlap("h3", &fwd, &back)?,
        })
    }

    /// Coefficients in the axis angle `psi` for `n = (sin(psi/2), 0, cos(psi/2))`.
    pub fn plane_hvector(&mut self) -> Result<HVector> {
        Ok(HVector {
            h0: self.g_entry(2, 2)?,
            h1: self.g_entry(2, 0)?,
            h2: self.g_entry(0, 2)?,
            h3: self.g_entry(0, 0)?,
        })
    }
}

fn axis_label(u: &Vec3) -> String {
    for (k, a) in AXES.iter().enumerate() {
        if u == a {
            return AXIS_NAMES[k].to_string();
        }
    }
    "n".to_string()
}

/// The seven insertion expectations for slot `d` (0-based).
pub fn eval_qset(ansatz: &Ansatz, d: usize, term: &PauliTerm, tau_step: f64, mode: EvalMode) -> Result<QSet> {
    let target = StepTarget::new(term, tau_step, TimeKind::Imaginary);
    Probe::new(ansatz, d, &target, mode)?.qset()
}

/// The full 3x3 matrix for composite slot `d` (0-based).
pub fn eval_gmatrix(ansatz: &Ansatz, d: usize, term: &PauliTerm, tau_step: f64, mode: EvalMode) -> Result<GMatrix> {
    match ansatz.slot(d)?.kind {
        GateKind::TwoQubitComposite { .. } => {}
        _ => return Err(Error::Kind(format!("slot {d} is not a two-qubit gate"))),
    }
    let target = StepTarget::new(term, tau_step, TimeKind::Imaginary);
    Probe::new(ansatz, d, &target, mode)?.gmatrix(false)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::ansatz::Preset;
    use crate::fqs::{solve_1q_3p, solve_2q_1p, solve_2q_2p};
    use crate::gates::{axis_from_polar, Family};
    use crate::pauli::Pauli;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    pub(crate) fn random_unit(rng: &mut impl Rng) -> Vec3 {
        let z: f64 = rng.random_range(-1.0..1.0);
        let phi: f64 = rng.random_range(0.0..TAU);
        let r = (1.0 - z * z).sqrt();
        [r * phi.cos(), r * phi.sin(), z]
    }

    pub(crate) fn random_param(kind: &GateKind, current: &GateParam, rng: &mut impl Rng) -> GateParam {
        let theta = rng.random_range(0.0..TAU);
        match *kind {
            GateKind::General1Q => GateParam { theta, axis: random_unit(rng) },
            GateKind::FixedAxis1Q(_) => GateParam { theta, axis: current.axis },
            GateKind::Fraxis1Q => GateParam { theta: PI, axis: random_unit(rng) },
            GateKind::TwoQubitComposite { family, .. } => match family {
                Family::ExcitationConserving => GateParam { theta: PI, axis: random_unit(rng) },
                Family::Swap => GateParam { theta, axis: Z_AXIS },
                Family::Hop | Family::Rbs => GateParam {
                    theta: PI,
                    axis: axis_from_polar(theta, 0.0),
                },
            },
        }
    }

    pub(crate) fn randomize(a: &mut Ansatz, rng: &mut impl Rng) {
        for d in 0..a.slot_count() {
            let s = a.slots()[d].clone();
            a.set_param(d, random_param(&s.kind, &s.param, rng)).unwrap();
        }
    }

    pub(crate) fn random_term(m: usize, rng: &mut impl Rng) -> PauliTerm {
        loop {
            let labels: Vec<Pauli> = (0..m).map(|_| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][rng.random_range(0..4)]).collect();
            let s = PauliString::new(labels).unwrap();
            if !s.is_identity() {
                return PauliTerm::new(rng.random_range(-1.5..1.5), s).unwrap();
            }
        }
    }

    fn family_chain(family: Family) -> Ansatz {
        let mut a = Ansatz::new(3);
        a.push_rotation(0, GateKind::General1Q).unwrap();
        a.push_rotation(1, GateKind::General1Q).unwrap();
        a.push_rotation(2, GateKind::General1Q).unwrap();
        a.push_composite(0, 1, family).unwrap();
        a.push_composite(1, 2, family).unwrap();
        a.push_rotation(1, GateKind::General1Q).unwrap();
        a
    }

    const KINDS: [TimeKind; 2] = [TimeKind::Imaginary, TimeKind::Real];
    const MODES: [EvalMode; 2] = [EvalMode::Exact, EvalMode::Circuit];

    #[test]
    fn gvector_reproduces_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..24 {
            let mut a = Preset::LadderGeneral.build(3, 1).unwrap();
            randomize(&mut a, &mut rng);
            let term = random_term(3, &mut rng);
            let d = rng.random_range(0..a.slot_count());
            let target = StepTarget::new(&term, rng.random_range(0.0..0.4), KINDS[case % 2]);
            let mode = MODES[(case / 2) % 2];
            let mut probe = Probe::new(&a, d, &target, mode).unwrap();
            let gv = probe.gvector().unwrap();
            assert_eq!(probe.measurements(), if case % 2 == 0 { 7 } else { 3 });
            for _ in 0..5 {
                let p = GateParam { theta: rng.random_range(0.0..TAU), axis: random_unit(&mut rng) };
                assert!((gv.objective(&p) - probe.objective(&p)).abs() < 1e-10, "case {case}");
            }
            let best = solve_1q_3p(&gv, &Z_AXIS).unwrap();
            let f_best = probe.objective(&best);
            assert!(f_best >= probe.objective(probe.prev()) - 1e-12);
            for _ in 0..200 {
                let p = GateParam { theta: rng.random_range(0.0..2.0 * TAU), axis: random_unit(&mut rng) };
                assert!(probe.objective(&p) <= f_best + 1e-10);
            }
        }
    }

    #[test]
    fn qset_modes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let mut a = Preset::LadderGeneral.build(3, 2).unwrap();
            randomize(&mut a, &mut rng);
            let term = random_term(3, &mut rng);
            let d = rng.random_range(0..a.slot_count());
            let e = eval_qset(&a, d, &term, 0.1, EvalMode::Exact).unwrap();
            let c = eval_qset(&a, d, &term, 0.1, EvalMode::Circuit).unwrap();
            assert!((e.q_plus_0 - c.q_plus_0).abs() < 1e-10);
            for p in 0..3 {
                assert!((e.q_plus[p] - c.q_plus[p]).abs() < 1e-10);
                assert!((e.q_minus[p] - c.q_minus[p]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn angle_and_axis_coefficients_reproduce_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for case in 0..16 {
            let kind = KINDS[case % 2];
            let mode = MODES[(case / 2) % 2];
            let term = random_term(3, &mut rng);
            let s = rng.random_range(0.0..0.4);
            let target = StepTarget::new(&term, s, kind);

            let mut a = Preset::LadderRy.build(3, 1).unwrap();
            randomize(&mut a, &mut rng);
            let d = rng.random_range(0..a.slot_count());
            let mut probe = Probe::new(&a, d, &target, mode).unwrap();
            let (g0, gd) = probe.angle_coefficients().unwrap();
            assert_eq!(probe.measurements(), if kind == TimeKind::Imaginary { 3 } else { 1 });
            let n = probe.prev().axis;
            for _ in 0..5 {
                let t = rng.random_range(0.0..2.0 * TAU);
                let f = g0 * (t / 2.0).cos() + gd * (t / 2.0).sin();
                assert!((f - probe.objective(&GateParam { theta: t, axis: n })).abs() < 1e-10);
            }

            let mut a = Preset::LadderFraxis.build(3, 1).unwrap();
            randomize(&mut a, &mut rng);
            let d = rng.random_range(0..a.slot_count());
            let mut probe = Probe::new(&a, d, &target, mode).unwrap();
            let g = probe.axis_gradient().unwrap();
            assert_eq!(probe.measurements(), if kind == TimeKind::Imaginary { 6 } else { 3 });
            for _ in 0..5 {
                let n = random_unit(&mut rng);
                let f = linalg::dot(&n, &g);
                assert!((f - probe.objective(&GateParam { theta: PI, axis: n })).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gmatrix_reproduces_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for case in 0..16 {
            let mut a = family_chain(Family::ExcitationConserving);
            randomize(&mut a, &mut rng);
            let term = random_term(3, &mut rng);
            let target = StepTarget::new(&term, rng.random_range(0.0..0.4), KINDS[case % 2]);
            let d = 3 + case % 2;
            let mode = MODES[(case / 2) % 2];
            let mut probe = Probe::new(&a, d, &target, mode).unwrap();
            let full = probe.gmatrix(false).unwrap();
            assert_eq!(probe.measurements(), 9);
            assert!((full.g[0][1] + full.g[1][0]).abs() < 1e-10);
            let mut probe = Probe::new(&a, d, &target, mode).unwrap();
            let gm = probe.gmatrix(true).unwrap();
            assert_eq!(probe.measurements(), 8);
            for _ in 0..5 {
                let n = random_unit(&mut rng);
                assert!((gm.quadratic(&n) - probe.objective(&GateParam { theta: PI, axis: n })).abs() < 1e-10);
            }
            let n = solve_2q_2p(&gm);
            let f_best = probe.objective(&GateParam { theta: PI, axis: n });
            for _ in 0..300 {
                let u = random_unit(&mut rng);
                assert!(probe.objective(&GateParam { theta: PI, axis: u }) <= f_best + 1e-10);
            }
        }
    }

    #[test]
    fn gmatrix_modes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let mut a = family_chain(Family::ExcitationConserving);
        randomize(&mut a, &mut rng);
        let term = random_term(3, &mut rng);
        let e = eval_gmatrix(&a, 3, &term, 0.2, EvalMode::Exact).unwrap();
        let c = eval_gmatrix(&a, 3, &term, 0.2, EvalMode::Circuit).unwrap();
        for p in 0..3 {
            for q in 0..3 {
                assert!((e.g[p][q] - c.g[p][q]).abs() < 1e-10);
            }
        }
        assert!(matches!(eval_gmatrix(&a, 0, &term, 0.2, EvalMode::Exact), Err(Error::Kind(_))));
    }

    #[test]
    fn hvectors_reproduce_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for case in 0..24 {
            let kind = KINDS[case % 2];
            let mode = MODES[(case / 2) % 2];
            let term = random_term(3, &mut rng);
            let target = StepTarget::new(&term, rng.random_range(0.0..0.4), kind);

            let mut a = family_chain(Family::Swap);
            randomize(&mut a, &mut rng);
            let mut probe = Probe::new(&a, 3, &target, mode).unwrap();
            let hv = probe.hvector().unwrap();
            assert_eq!(probe.measurements(), 4);
            for _ in 0..5 {
                let t = rng.random_range(0.0..TAU);
                assert!((hv.objective(t) - probe.objective(&GateParam { theta: t, axis: Z_AXIS })).abs() < 1e-10);
            }
            let t = solve_2q_1p(&hv).unwrap();
            assert!(probe.objective(&GateParam { theta: t, axis: Z_AXIS }) >= probe.objective(probe.prev()) - 1e-12);

            let mut a = crate::ansatz::excitation_chain().unwrap().factor_excitation_gates().unwrap();
            randomize(&mut a, &mut rng);
            let term = random_term(4, &mut rng);
            let target = StepTarget::new(&term, 0.3, kind);
            let d = rng.random_range(0..a.slot_count());
            let mut probe = Probe::new(&a, d, &target, mode).unwrap();
            let hv = probe.hvector().unwrap();
            let n = probe.prev().axis;
            for _ in 0..5 {
                let t = rng.random_range(0.0..TAU);
                assert!((hv.objective(t) - probe.objective(&GateParam { theta: t, axis: n })).abs() < 1e-10);
            }

            for family in [Family::Hop, Family::Rbs] {
                let mut a = family_chain(family);
                randomize(&mut a, &mut rng);
                let term = random_term(3, &mut rng);
                let target = StepTarget::new(&term, 0.25, kind);
                let mut probe = Probe::new(&a, 4, &target, mode).unwrap();
                let hv = probe.plane_hvector().unwrap();
                assert_eq!(probe.measurements(), 4);
                for _ in 0..5 {
                    let psi = rng.random_range(0.0..TAU);
                    let p = GateParam { theta: PI, axis: axis_from_polar(psi, 0.0) };
                    assert!((hv.objective(psi) - probe.objective(&p)).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn probe_rejects_wrong_site() {
        let a = Preset::LadderGeneral.build(2, 1).unwrap();
        let term = PauliTerm::parse(1.0, "ZZ").unwrap();
        let target = StepTarget::new(&term, 0.1, TimeKind::Imaginary);
        let mut probe = Probe::new(&a, 0, &target, EvalMode::Exact).unwrap();
        assert!(matches!(probe.hvector(), Err(Error::Kind(_))));
        let bad = PauliTerm::parse(1.0, "ZZZ").unwrap();
        let target = StepTarget::new(&bad, 0.1, TimeKind::Imaginary);
        assert!(matches!(Probe::new(&a, 0, &target, EvalMode::Exact), Err(Error::SizeMismatch { .. })));
    }
}
