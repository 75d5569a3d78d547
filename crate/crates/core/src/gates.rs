//! Parameterized gate families.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, Mat4, Vec3, C64, I};

/// Tolerance on `|axis| = 1` and on frozen parameter values.
pub const AXIS_TOL: f64 = 1e-12;
/// Looser tolerance for parameters read back from configs or composed numerically.
const FROZEN_TOL: f64 = 1e-9;

/// Rotation angle and unit axis of `R_n(theta) = exp(-i theta/2 n.sigma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateParam {
    pub theta: f64,
    pub axis: Vec3,
}

impl GateParam {
    pub fn new(theta: f64, axis: Vec3) -> Result<Self> {
        let p = Self { theta, axis };
        p.check_axis()?;
        if !theta.is_finite() {
            return Err(Error::contract(format!("rotation angle {theta} is not finite")));
        }
        Ok(p)
    }

    /// Normalizes `axis` first; fails on a zero vector.
    pub fn from_raw(theta: f64, axis: Vec3) -> Result<Self> {
        let axis = linalg::normalized(&axis)
            .ok_or_else(|| Error::contract(format!("axis {axis:?} cannot be normalized")))?;
        Self::new(theta, axis)
    }

    pub fn identity() -> Self {
        Self {
            theta: 0.0,
            axis: [0.0, 0.0, 1.0],
        }
    }

    pub fn check_axis(&self) -> Result<()> {
        let n = linalg::norm(&self.axis);
        if (n - 1.0).abs() > AXIS_TOL || !n.is_finite() {
            return Err(Error::contract(format!(
                "rotation axis {:?} has norm {n}",
                self.axis
            )));
        }
        Ok(())
    }

    /// Same operator with `theta` in `[0, 2pi]`, using `R_n(t) = R_{-n}(4pi - t)`.
    ///
    /// Exact as a matrix, so objective values are unchanged.
    pub fn canonical(theta: f64, axis: Vec3) -> Self {
        let mut t = theta.rem_euclid(2.0 * TAU);
        let mut n = renormalize(axis);
        if t > TAU {
            t = 2.0 * TAU - t;
            n = linalg::scale(&n, -1.0);
        }
        Self { theta: t, axis: n }
    }

    /// `theta` wrapped modulo `2pi`; only valid where the gate enters as `R . R^dagger`.
    pub fn wrapped(theta: f64, axis: Vec3) -> Self {
        let mut t = theta.rem_euclid(TAU);
        if TAU - t < 1e-15 {
            t = 0.0;
        }
        Self {
            theta: t,
            axis: renormalize(axis),
        }
    }

    pub fn matrix(&self) -> Mat2 {
        rot(self.theta, &self.axis)
    }
}

fn renormalize(axis: Vec3) -> Vec3 {
    linalg::normalized(&axis).unwrap_or([0.0, 0.0, 1.0])
}

/// `R_n(theta)` with a checked unit axis.
pub fn rotation_matrix(p: &GateParam) -> Result<Mat2> {
    p.check_axis()?;
    Ok(p.matrix())
}

/// `cos(theta/2) I - i sin(theta/2) n.sigma` without checks.
pub fn rot(theta: f64, axis: &Vec3) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    let ns = Mat2::n_dot_sigma(axis).scaled(-I * s);
    let mut m = ns;
    m.0[0][0] += c;
    m.0[1][1] += c;
    m
}

pub fn rz(theta: f64) -> Mat2 {
    rot(theta, &[0.0, 0.0, 1.0])
}

pub fn ry(theta: f64) -> Mat2 {
    rot(theta, &[0.0, 1.0, 0.0])
}

/// `(sin(psi/2) cos(phi), sin(psi/2) sin(phi), cos(psi/2))`.
pub fn axis_from_polar(psi: f64, phi: f64) -> Vec3 {
    let (s, c) = (psi / 2.0).sin_cos();
    [s * phi.cos(), s * phi.sin(), c]
}

/// Inverse of [`axis_from_polar`] with `psi` in `[0, 2pi]` and `phi` in `(-pi, pi]`.
pub fn polar_from_axis(n: &Vec3) -> (f64, f64) {
    let psi = 2.0 * n[2].clamp(-1.0, 1.0).acos();
    let phi = if n[0].hypot(n[1]) < 1e-15 {
        0.0
    } else {
        n[1].atan2(n[0])
    };
    (psi, phi)
}

/// Angles `(lambda, psi, phi)` with `u = e^{i g} Rz(phi) Ry(psi) Rz(lambda)`.
pub fn zyz_angles(u: &Mat2) -> (f64, f64, f64) {
    let det = u.det();
    let v = u.scaled(C64::new(1.0, 0.0) / det.sqrt());
    let (a, b) = (v.0[1][1], v.0[1][0]);
    let psi = 2.0 * b.norm().atan2(a.norm());
    let eps = 1e-12;
    let (sum, diff) = if b.norm() < eps {
        (2.0 * a.arg(), 0.0)
    } else if a.norm() < eps {
        (0.0, 2.0 * b.arg())
    } else {
        (2.0 * a.arg(), 2.0 * b.arg())
    };
    // sum = phi + lambda, diff = phi - lambda
    let phi = (sum + diff) / 2.0;
    let lambda = (sum - diff) / 2.0;
    (lambda, psi, phi)
}

/// Two-qubit composites `A (I (x) R) B (I (x) R^dagger) C` with `R` on the second qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    ExcitationConserving,
    Swap,
    Hop,
    Rbs,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::ExcitationConserving,
        Family::Swap,
        Family::Hop,
        Family::Rbs,
    ];

    /// The fixed gates `(A, B, C)` on the ordered pair.
    pub fn frame(self) -> Frame {
        let cx21 = Mat4::controlled(&Mat2::X, false);
        let cx12 = Mat4::controlled(&Mat2::X, true);
        let cz = Mat4::controlled(&Mat2::Z, true);
        let z2 = Mat2::IDENTITY.kron(&Mat2::Z);
        let (a, b, c) = match self {
            Family::ExcitationConserving => (cx21, cz, cx21),
            Family::Swap => (cx21, cx12, cx21),
            Family::Hop => (z2 * cx21, cz, cx21),
            Family::Rbs => (cx21, cz, cx21 * z2 * cz),
        };
        Frame { a, b, c }
    }

    /// Free parameters when the whole composite is one slot.
    pub fn free_parameters(self) -> u8 {
        match self {
            Family::ExcitationConserving => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub a: Mat4,
    pub b: Mat4,
    pub c: Mat4,
}

impl Frame {
    /// `A (I (x) R) B (I (x) R^dagger) C`.
    pub fn compose(&self, r: &Mat2) -> Mat4 {
        let rr = Mat2::IDENTITY.kron(r);
        self.a * rr * self.b * rr.adjoint() * self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GateKind {
    General1Q,
    /// Angle-only gate about a frozen axis (the stored axis may be its negative).
    FixedAxis1Q(Vec3),
    /// Axis-only gate with `theta = pi`.
    Fraxis1Q,
    TwoQubitComposite { family: Family, free_parameters: u8 },
}

impl GateKind {
    pub fn composite(family: Family) -> Self {
        GateKind::TwoQubitComposite {
            family,
            free_parameters: family.free_parameters(),
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, GateKind::TwoQubitComposite { .. })
    }

    /// Checks the frozen parts of `p`.
    pub fn validate(&self, p: &GateParam) -> Result<()> {
        p.check_axis()?;
        let near = |a: f64, b: f64| (a - b).abs() <= FROZEN_TOL;
        match *self {
            GateKind::General1Q => Ok(()),
            GateKind::FixedAxis1Q(n) => {
                if near(linalg::dot(&n, &p.axis).abs(), 1.0) {
                    Ok(())
                } else {
                    Err(Error::contract(format!(
                        "axis {:?} is not the frozen axis {n:?}",
                        p.axis
                    )))
                }
            }
            GateKind::Fraxis1Q => {
                if near(p.theta, PI) {
                    Ok(())
                } else {
                    Err(Error::contract(format!("free-axis gate needs theta = pi, got {}", p.theta)))
                }
            }
            GateKind::TwoQubitComposite { family, .. } => check_family(family, p),
        }
    }
}

fn check_family(family: Family, p: &GateParam) -> Result<()> {
    let near = |a: f64, b: f64| (a - b).abs() <= FROZEN_TOL;
    let bad = |what: &str| Err(Error::contract(format!("{family:?} gate: {what}")));
    match family {
        Family::ExcitationConserving if !near(p.theta, PI) => bad("theta must be pi"),
        Family::Swap if !near(p.axis[2].abs(), 1.0) => bad("axis must be z"),
        Family::Hop | Family::Rbs if !near(p.theta, PI) => bad("theta must be pi"),
        Family::Hop | Family::Rbs if p.axis[1].abs() > FROZEN_TOL => bad("axis must lie in the xz plane"),
        _ => Ok(()),
    }
}

/// The 4x4 matrix of a composite family at parameter `p`.
pub fn composite_matrix(family: Family, p: &GateParam) -> Result<Mat4> {
    check_family(family, p)?;
    Ok(family.frame().compose(&rotation_matrix(p)?))
}

/// True when `m` maps each Hamming-weight subspace of two qubits into itself.
pub fn preserves_excitations(m: &Mat4) -> bool {
    let weight = |i: usize| (i as u32).count_ones();
    (0..4).all(|r| (0..4).all(|c| weight(r) == weight(c) || m.0[r][c].norm() <= 1e-12))
}

pub fn preservation_check(family: Family, p: &GateParam) -> bool {
    composite_matrix(family, p).is_ok_and(|m| preserves_excitations(&m))
}
