//! Closed-form coordinate updates for single- and two-qubit gate slots.

mod jacobi;
mod probe;

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::gates::GateParam;
use crate::linalg::{self, Vec3};

pub use jacobi::{symmetric_eigen, top_eigenvector, Eigen3};
#[cfg(test)]
pub(crate) use probe::tests as probe_tests;
pub use probe::{eval_gmatrix, eval_qset, EvalMode, Probe, StepTarget};

/// Below this every objective coefficient counts as zero.
pub const FLAT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeKind {
    /// Propagator `exp(-h s O)`.
    Imaginary,
    /// Propagator `exp(+i h s O)`, tracking `exp(-i H t)`.
    Real,
}

/// Coefficients of `F(theta, n) = g0 cos(theta/2) + (n . g) sin(theta/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GVector {
    pub g0: f64,
    pub g: Vec3,
}

impl GVector {
    pub fn from_array(v: [f64; 4]) -> Self {
        Self {
            g0: v[0],
            g: [v[1], v[2], v[3]],
        }
    }

    pub fn objective(&self, p: &GateParam) -> f64 {
        let (s, c) = (p.theta / 2.0).sin_cos();
        self.g0 * c + linalg::dot(&p.axis, &self.g) * s
    }
}

/// Expectations of the observable after inserting `exp(-+ i sigma_nu pi/4)` behind the gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QSet {
    pub q_plus_0: f64,
    pub q_plus: Vec3,
    pub q_minus: Vec3,
}

/// `R_beta(alpha) = Sigma_mu R_n'(theta')^dagger` with `Sigma = (I, -i sigma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaBeta {
    pub alpha: f64,
    pub beta: Vec3,
}

impl AlphaBeta {
    pub fn param(&self) -> GateParam {
        GateParam {
            theta: self.alpha,
            axis: self.beta,
        }
    }

    pub fn inverse_param(&self) -> GateParam {
        GateParam {
            theta: -self.alpha,
            axis: self.beta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GMatrix {
    pub g: [[f64; 3]; 3],
    pub s: [[f64; 3]; 3],
}

impl GMatrix {
    pub fn new(g: [[f64; 3]; 3]) -> Self {
        let mut s = [[0.0; 3]; 3];
        for p in 0..3 {
            for q in 0..3 {
                s[p][q] = (g[p][q] + g[q][p]) / 2.0;
            }
        }
        Self { g, s }
    }

    /// `n^T S n`.
    pub fn quadratic(&self, n: &Vec3) -> f64 {
        let mut acc = 0.0;
        for p in 0..3 {
            for q in 0..3 {
                acc += n[p] * self.s[p][q] * n[q];
            }
        }
        acc
    }
}

/// Coefficients of `h0 cos^2 + (h1 + h2) cos sin + h3 sin^2` in the half angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HVector {
    pub h0: f64,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
}

impl HVector {
    pub fn objective(&self, theta: f64) -> f64 {
        let (s, c) = (theta / 2.0).sin_cos();
        self.h0 * c * c + (self.h1 + self.h2) * c * s + self.h3 * s * s
    }
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Rotation equal to `Sigma_mu R_prev^dagger`; `mu = 0` is the identity component, `1..=3` are x, y, z.
pub fn alpha_beta(mu: usize, prev: &GateParam) -> AlphaBeta {
    assert!(mu < 4, "component index {mu} out of range");
    if mu == 0 {
        return AlphaBeta {
            alpha: -prev.theta,
            beta: prev.axis,
        };
    }
    let p = mu - 1;
    let (s, c) = (prev.theta / 2.0).sin_cos();
    let n = &prev.axis;
    let mut num = [0.0; 3];
    for (q, v) in num.iter_mut().enumerate() {
        let cross: f64 = (0..3).map(|k| levi_civita(p, k, q) * n[k]).sum();
        *v = if p == q { c } else { 0.0 } - s * cross;
    }
    let len = linalg::norm(&num);
    let alpha = 2.0 * len.atan2(n[p] * s);
    // A vanishing vector part means a trivial rotation; any axis works.
    let beta = if len < FLAT_TOL {
        *n
    } else {
        linalg::scale(&num, 1.0 / len)
    };
    AlphaBeta { alpha, beta }
}

/// `Re tr(Sigma_mu R_prev^dagger rho')`, which does not depend on the state.
pub fn first_term(mu: usize, prev: &GateParam) -> f64 {
    let (s, c) = (prev.theta / 2.0).sin_cos();
    if mu == 0 {
        c
    } else {
        prev.axis[mu - 1] * s
    }
}

/// `Re tr(O' R_beta(alpha) rho')` from the seven insertion expectations.
pub fn generator(q: &QSet, ab: &AlphaBeta) -> f64 {
    let (s, c) = (ab.alpha / 2.0).sin_cos();
    let diff: f64 = (0..3)
        .map(|p| ab.beta[p] * (q.q_plus[p] - q.q_minus[p]) / 2.0)
        .sum();
    c * q.q_plus_0 + s * diff
}

/// Propagator weights `(identity part, observable part)` for one fractional step.
pub fn step_coefficients(kind: TimeKind, coeff_h: f64, tau_step: f64) -> (f64, f64) {
    let x = coeff_h * tau_step;
    match kind {
        TimeKind::Imaginary => (x.cosh(), x.sinh()),
        TimeKind::Real => (x.cos(), x.sin()),
    }
}

/// One component of the g vector.
///
/// `second` is `Re tr(O' R_beta(alpha) rho')` for imaginary time and the
/// imaginary part of the same trace for real time.
pub fn assemble_g(mu: usize, prev: &GateParam, second: f64, coeff_h: f64, tau_step: f64, kind: TimeKind) -> f64 {
    let (a, b) = step_coefficients(kind, coeff_h, tau_step);
    a * first_term(mu, prev) - b * second
}

/// Maximizer of `g0 cos(theta/2) + (n . g) sin(theta/2)`; `None` when the objective is flat.
///
/// With `g = 0` the axis is free and `prev_axis` is kept.
pub fn solve_1q_3p(gv: &GVector, prev_axis: &Vec3) -> Option<GateParam> {
    let gn = linalg::norm(&gv.g);
    if gn < FLAT_TOL && gv.g0.abs() < FLAT_TOL {
        return None;
    }
    let theta = PI - 2.0 * gv.g0.atan2(gn);
    let axis = if gn < FLAT_TOL {
        *prev_axis
    } else {
        linalg::scale(&gv.g, 1.0 / gn)
    };
    Some(GateParam { theta, axis })
}

/// Maximizer of `n . g` on the unit sphere.
pub fn solve_1q_2p(g: &Vec3) -> Option<Vec3> {
    let gn = linalg::norm(g);
    (gn >= FLAT_TOL).then(|| linalg::scale(g, 1.0 / gn))
}

/// Maximizer of `g0 cos(theta/2) + gd sin(theta/2)`, returned in `[0, 4pi)`.
///
/// The objective has period `4pi`; callers fold the result with [`GateParam::canonical`].
pub fn solve_1q_1p(g0: f64, gd: f64) -> Option<f64> {
    if g0.abs() < FLAT_TOL && gd.abs() < FLAT_TOL {
        return None;
    }
    Some((PI - 2.0 * g0.atan2(gd)).rem_euclid(2.0 * TAU))
}

/// Top eigenvector of `S` with a deterministic sign.
pub fn solve_2q_2p(gm: &GMatrix) -> Vec3 {
    top_eigenvector(&gm.s)
}

/// Maximizer in `[0, 2pi)` of `h0 cos^2 + (h1 + h2) cos sin + h3 sin^2` (half angles).
pub fn solve_2q_1p(hv: &HVector) -> Option<f64> {
    let a = hv.h0 - hv.h3;
    let b = hv.h1 + hv.h2;
    if a.abs() < FLAT_TOL && b.abs() < FLAT_TOL {
        return None;
    }
    let mut t = (FRAC_PI_2 - a.atan2(b)).rem_euclid(TAU);
    if TAU - t < 1e-15 {
        t = 0.0;
    }
    Some(t)
}
