//! Dense-matrix references: ground space, exact evolution, fidelities and
//! brute-force grid maximizers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fqs::TimeKind;
use crate::linalg::{Vec3, C64};
use crate::pauli::{dense_matrix_capped, Hamiltonian, DEFAULT_ORACLE_CAP};
use crate::statevector::Statevector;

/// Eigenvalues this close to the minimum (relative to `max(1, |E0|)`) span the ground space.
pub const DEGENERACY_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub ground_energy: f64,
    pub ground_state: Statevector,
    pub degeneracy: usize,
}

/// Full eigendecomposition of a Hamiltonian.
#[derive(Debug, Clone)]
pub struct Oracle {
    qubits: usize,
    /// Ascending.
    energies: Vec<f64>,
    /// Columns match `energies`.
    vectors: DMatrix<C64>,
    degeneracy: usize,
}

impl Oracle {
    pub fn new(h: &Hamiltonian) -> Result<Self> {
        Self::with_cap(h, DEFAULT_ORACLE_CAP)
    }

    pub fn with_cap(h: &Hamiltonian, cap: usize) -> Result<Self> {
        let m = dense_matrix_capped(h, cap)?;
        let dim = m.nrows();
        let eig = m.symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let energies: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(dim, dim, |i, j| eig.eigenvectors[(i, order[j])]);
        let tol = DEGENERACY_TOL * energies[0].abs().max(1.0);
        let degeneracy = energies.iter().take_while(|&&e| e - energies[0] <= tol).count();
        Ok(Self {
            qubits: h.qubit_count(),
            energies,
            vectors,
            degeneracy,
        })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn degeneracy(&self) -> usize {
        self.degeneracy
    }

    fn column(&self, k: usize) -> Statevector {
        Statevector::from_amplitudes(self.vectors.column(k).iter().copied().collect()).expect("power-of-two length")
    }

    /// One normalized vector of the ground space.
    pub fn ground_state(&self) -> Statevector {
        self.column(0)
    }

    pub fn result(&self) -> OracleResult {
        OracleResult {
            ground_energy: self.ground_energy(),
            ground_state: self.ground_state(),
            degeneracy: self.degeneracy,
        }
    }

    fn check(&self, psi: &Statevector) -> Result<()> {
        if psi.qubit_count() != self.qubits {
            return Err(Error::SizeMismatch {
                expected: self.qubits,
                found: psi.qubit_count(),
            });
        }
        psi.ensure_normalized()
    }

    /// Weight of `psi` in the ground space; equals `|<g|psi>|^2` when the ground state is unique.
    pub fn ground_fidelity(&self, psi: &Statevector) -> Result<f64> {
        self.check(psi)?;
        let v = DVector::from_column_slice(psi.amplitudes());
        let mut w = 0.0;
        for k in 0..self.degeneracy {
            w += self.vectors.column(k).dotc(&v).norm_sqr();
        }
        Ok(w.min(1.0))
    }

    /// `exp(-H tau) psi0` normalized, or `exp(-i H t) psi0`.
    pub fn evolve(&self, psi0: &Statevector, time: f64, kind: TimeKind) -> Result<Statevector> {
        self.check(psi0)?;
        let v = DVector::from_column_slice(psi0.amplitudes());
        let mut c = self.vectors.ad_mul(&v);
        let e0 = self.energies[0];
        for (k, ck) in c.iter_mut().enumerate() {
            let e = self.energies[k];
            *ck *= match kind {
                // shifted by E0 so the weights stay in [0, 1]
                TimeKind::Imaginary => C64::new((-(e - e0) * time).exp(), 0.0),
                TimeKind::Real => C64::from_polar(1.0, -e * time),
            };
        }
        let out = &self.vectors * c;
        let mut s = Statevector::from_amplitudes(out.iter().copied().collect())?;
        if s.norm() < 1e-300 {
            return Err(Error::contract("initial state has no weight on the surviving eigenspaces"));
        }
        s.normalize()?;
        Ok(s)
    }
}

/// Lowest eigenpair of `h`.
pub fn ground(h: &Hamiltonian) -> Result<OracleResult> {
    Ok(Oracle::new(h)?.result())
}

/// Exactly evolved states at each of `times`.
pub fn exact_evolve(h: &Hamiltonian, psi0: &Statevector, times: &[f64], kind: TimeKind) -> Result<Vec<Statevector>> {
    let o = Oracle::new(h)?;
    times.iter().map(|&t| o.evolve(psi0, t, kind)).collect()
}

/// `|<a|b>|^2` for normalized states.
pub fn fidelity(a: &Statevector, b: &Statevector) -> Result<f64> {
    a.ensure_normalized()?;
    b.ensure_normalized()?;
    Ok(a.inner_product(b)?.norm_sqr())
}

/// `||H v - E v||` for the reported ground state.
pub fn ground_residual(h: &Hamiltonian, r: &OracleResult) -> Result<f64> {
    let hv = h.apply(&r.ground_state)?;
    let mut diff = hv;
    diff.add_scaled(C64::new(-r.ground_energy, 0.0), &r.ground_state)?;
    Ok(diff.norm())
}

/// Brute-force maximizers over fixed grids.
pub mod grid {
    use super::*;
    use std::f64::consts::{PI, TAU};

    /// `n` equally spaced points on `[lo, hi)`.
    pub fn line(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
    }

    /// `n` near-uniform points on the unit sphere.
    pub fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
        let golden = PI * (3.0 - 5f64.sqrt());
        (0..n)
            .map(|k| {
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = golden * k as f64;
                [r * phi.cos(), r * phi.sin(), z]
            })
            .collect()
    }

    /// Polar/azimuth grid with midpoint polar samples.
    pub fn polar_sphere(polar: usize, azimuth: usize) -> Vec<Vec3> {
        let mut out = Vec::with_capacity(polar * azimuth);
        for i in 0..polar {
            let t = PI * (i as f64 + 0.5) / polar as f64;
            for j in 0..azimuth {
                let p = TAU * j as f64 / azimuth as f64;
                out.push([t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]);
            }
        }
        out
    }

    pub fn argmax<T: Copy>(points: &[T], f: impl Fn(&T) -> f64) -> Option<(T, f64)> {
        points.iter().map(|p| (*p, f(p))).fold(None, |best, (p, v)| match best {
            Some((_, bv)) if bv >= v => best,
            _ => Some((p, v)),
        })
    }

    pub fn angle_argmax(n: usize, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> Option<(f64, f64)> {
        argmax(&line(lo, hi, n), |t| f(*t))
    }

    pub fn sphere_argmax(points: &[Vec3], f: impl Fn(&Vec3) -> f64) -> Option<(Vec3, f64)> {
        argmax(points, f)
    }

    /// Maximum over the product of an angle grid on `[0, 4pi)` and a sphere grid.
    pub fn product_max(angles: usize, sphere: &[Vec3], f: impl Fn(f64, &Vec3) -> f64) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for t in line(0.0, 2.0 * TAU, angles) {
            for n in sphere {
                best = best.max(f(t, n));
            }
        }
        best
    }
}
