//! Fixed-size complex matrices and real 3-vectors used by the gate layer.

use std::ops::Mul;

pub use num_complex::Complex64 as C64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub type Vec3 = [f64; 3];

pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn scale(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Returns `None` for the zero vector.
pub fn normalized(a: &Vec3) -> Option<Vec3> {
    let n = norm(a);
    (n > 0.0 && n.is_finite()).then(|| scale(a, 1.0 / n))
}

/// Dense 2x2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[ONE, ZERO], [ZERO, ONE]]);
    pub const X: Mat2 = Mat2([[ZERO, ONE], [ONE, ZERO]]);
    pub const Y: Mat2 = Mat2([[ZERO, C64::new(0.0, -1.0)], [I, ZERO]]);
    pub const Z: Mat2 = Mat2([[ONE, ZERO], [ZERO, C64::new(-1.0, 0.0)]]);
    pub const H: Mat2 = Mat2([
        [
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ],
        [
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            C64::new(-std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ],
    ]);

    /// Pauli matrix for axis index 0=x, 1=y, 2=z.
    pub fn pauli(axis: usize) -> Mat2 {
        match axis {
            0 => Self::X,
            1 => Self::Y,
            2 => Self::Z,
            _ => panic!("pauli axis {axis} out of range"),
        }
    }

    /// `n . sigma` for a real 3-vector.
    pub fn n_dot_sigma(n: &Vec3) -> Mat2 {
        Mat2([
            [C64::new(n[2], 0.0), C64::new(n[0], -n[1])],
            [C64::new(n[0], n[1]), C64::new(-n[2], 0.0)],
        ])
    }

    pub fn scaled(&self, s: C64) -> Mat2 {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn adjoint(&self) -> Mat2 {
        let m = &self.0;
        Mat2([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn det(&self) -> C64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        (*self * self.adjoint()).max_abs_diff(&Mat2::IDENTITY) <= tol
    }

    /// `a (x) b` with `self` on the more significant qubit.
    pub fn kron(&self, other: &Mat2) -> Mat4 {
        let mut out = [[ZERO; 4]; 4];
        for (r1, row) in self.0.iter().enumerate() {
            for (c1, a) in row.iter().enumerate() {
                for (r2, orow) in other.0.iter().enumerate() {
                    for (c2, b) in orow.iter().enumerate() {
                        out[2 * r1 + r2][2 * c1 + c2] = a * b;
                    }
                }
            }
        }
        Mat4(out)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[ZERO; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Mat2(out)
    }
}

/// Dense 4x4 complex matrix on an ordered qubit pair; row index `2*b_first + b_second`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat4(pub [[C64; 4]; 4]);

impl Mat4 {
    pub fn identity() -> Mat4 {
        let mut out = [[ZERO; 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            row[i] = ONE;
        }
        Mat4(out)
    }

    pub fn diag(d: [C64; 4]) -> Mat4 {
        let mut out = [[ZERO; 4]; 4];
        for i in 0..4 {
            out[i][i] = d[i];
        }
        Mat4(out)
    }

    /// Controlled gate on the pair; `control_first` selects which qubit of the pair controls.
    pub fn controlled(u: &Mat2, control_first: bool) -> Mat4 {
        let p0 = Mat2([[ONE, ZERO], [ZERO, ZERO]]);
        let p1 = Mat2([[ZERO, ZERO], [ZERO, ONE]]);
        if control_first {
            p0.kron(&Mat2::IDENTITY) + p1.kron(u)
        } else {
            Mat2::IDENTITY.kron(&p0) + u.kron(&p1)
        }
    }

    pub fn adjoint(&self) -> Mat4 {
        let mut out = [[ZERO; 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = self.0[c][r].conj();
            }
        }
        Mat4(out)
    }

    pub fn max_abs_diff(&self, other: &Mat4) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..4 {
            for c in 0..4 {
                worst = worst.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        (*self * self.adjoint()).max_abs_diff(&Mat4::identity()) <= tol
    }
}

impl std::ops::Add for Mat4 {
    type Output = Mat4;

    fn add(self, rhs: Mat4) -> Mat4 {
        let mut out = self.0;
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v += rhs.0[r][c];
            }
        }
        Mat4(out)
    }
}

impl Mul for Mat4 {
    type Output = Mat4;

    fn mul(self, rhs: Mat4) -> Mat4 {
        let mut out = [[ZERO; 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                let mut acc = ZERO;
                for k in 0..4 {
                    acc += self.0[r][k] * rhs.0[k][c];
                }
                *v = acc;
            }
        }
        Mat4(out)
    }
}
