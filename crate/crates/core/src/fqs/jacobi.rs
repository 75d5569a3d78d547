//! Cyclic Jacobi eigensolver for real symmetric 3x3 matrices.

use crate::linalg::{self, Vec3};

const MAX_SWEEPS: usize = 50;
/// Eigenvalues closer than this to the largest one count as tied.
pub const TIE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen3 {
    /// Descending.
    pub values: [f64; 3],
    /// `vectors[k]` belongs to `values[k]`.
    pub vectors: [Vec3; 3],
}

fn off_diagonal(a: &[[f64; 3]; 3]) -> f64 {
    (a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2]).sqrt()
}

fn frobenius(a: &[[f64; 3]; 3]) -> f64 {
    a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn symmetric_eigen(s: &[[f64; 3]; 3]) -> Eigen3 {
    let mut a = *s;
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let tol = 1e-12 * frobenius(s).max(1.0);
    for _ in 0..MAX_SWEEPS {
        if off_diagonal(&a) < tol {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q].abs() < f64::MIN_POSITIVE {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let sn = t * c;
            // A <- J^T A J with J the rotation in the (p, q) plane.
            for k in 0..3 {
                let (akp, akq) = (a[k][p], a[k][q]);
                a[k][p] = c * akp - sn * akq;
                a[k][q] = sn * akp + c * akq;
            }
            for k in 0..3 {
                let (apk, aqk) = (a[p][k], a[q][k]);
                a[p][k] = c * apk - sn * aqk;
                a[q][k] = sn * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let (vp, vq) = (row[p], row[q]);
                row[p] = c * vp - sn * vq;
                row[q] = sn * vp + c * vq;
            }
        }
    }
    let mut order = [0, 1, 2];
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let col = |k: usize| [v[0][k], v[1][k], v[2][k]];
    Eigen3 {
        values: order.map(|k| a[k][k]),
        vectors: order.map(col),
    }
}

/// Unit eigenvector of the largest eigenvalue.
///
/// A degenerate top eigenspace is resolved by projecting `e_x`, then `e_y`,
/// then `e_z` onto it, which maximizes `(|n_x|, |n_y|, |n_z|)` lexicographically.
/// The first component of largest magnitude is made positive.
pub fn top_eigenvector(s: &[[f64; 3]; 3]) -> Vec3 {
    let eig = symmetric_eigen(s);
    let scale = eig.values.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let top: Vec<&Vec3> = eig
        .vectors
        .iter()
        .zip(eig.values)
        .filter(|(_, l)| eig.values[0] - l <= TIE_TOL * scale)
        .map(|(v, _)| v)
        .collect();
    let mut n = *top[0];
    if top.len() > 1 {
        for e in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
            let mut proj = [0.0; 3];
            for v in &top {
                let c = linalg::dot(v, &e);
                for k in 0..3 {
                    proj[k] += c * v[k];
                }
            }
            if let Some(u) = linalg::normalized(&proj).filter(|_| linalg::norm(&proj) > 1e-8) {
                n = u;
                break;
            }
        }
    }
    let mut lead = 0;
    for k in 1..3 {
        if n[k].abs() > n[lead].abs() + 1e-12 {
            lead = k;
        }
    }
    if n[lead] < 0.0 {
        n = linalg::scale(&n, -1.0);
    }
    n
}
