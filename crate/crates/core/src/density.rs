use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance shared by the Hermiticity, trace and positivity checks.
pub const STATE_TOL: f64 = 1e-12;

/// A validated two-qubit density matrix in the `{|↓↓⟩, |↑↓⟩, |↓↑⟩, |↑↑⟩}`
/// basis order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix4(Matrix4<Complex64>);

impl DensityMatrix4 {
    /// Validates Hermiticity, unit trace and positivity (each to
    /// [`STATE_TOL`]) and stores the Hermitian part.
    pub fn new(m: Matrix4<Complex64>) -> Result<Self> {
        let asym = (m - m.adjoint())
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        if asym.is_nan() || asym > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {asym:e})"
            )));
        }
        let trace = m.trace();
        if !((trace.re - 1.0).abs() <= STATE_TOL && trace.im.abs() <= STATE_TOL) {
            return Err(Error::InvalidState(format!("trace {trace} differs from 1")));
        }
        let rho = Self((m + m.adjoint()) * Complex64::new(0.5, 0.0));
        let min = rho.eigenvalues()[0];
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(rho)
    }

    pub fn from_real(m: &Matrix4<f64>) -> Result<Self> {
        Self::new(m.map(|x| Complex64::new(x, 0.0)))
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) nonzero vector.
    pub fn from_pure(psi: &Vector4<Complex64>) -> Result<Self> {
        let norm = psi.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidState(
                "pure state vector has zero or non-finite norm".into(),
            ));
        }
        let psi = psi / Complex64::new(norm, 0.0);
        Self::new(psi * psi.adjoint())
    }

    pub fn maximally_mixed() -> Self {
        Self(Matrix4::identity() * Complex64::new(0.25, 0.0))
    }

    /// `p ρ + (1 - p) σ` for `p ∈ [0, 1]`.
    pub fn mix(&self, other: &Self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "mixing weight {p} outside [0, 1]"
            )));
        }
        Self::new(self.0 * Complex64::new(p, 0.0) + other.0 * Complex64::new(1.0 - p, 0.0))
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let mut ev: [f64; 4] = SymmetricEigen::new(self.0).eigenvalues.into();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.purity().sqrt()
    }

    /// Largest magnitude among elements outside the diagonal and the
    /// `|↑↓⟩⟨↓↑|` coherence pair.
    pub fn max_off_pattern(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..4 {
            for c in 0..4 {
                let allowed = r == c || (r, c) == (1, 2) || (r, c) == (2, 1);
                if !allowed {
                    worst = worst.max(self.0[(r, c)].norm());
                }
            }
        }
        worst
    }
}
