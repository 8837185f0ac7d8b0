//! Target lattice `Λ = B·ℤⁿ` defining the quotient torus `W = ℝⁿ/Λ`.

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // float intrinsics in no_std builds
use num_traits::Float;

use crate::error::CoreError;
use crate::Result;

/// Lattice basis with cached inverse. The default is the unit lattice `ℤⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    basis: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl Lattice {
    pub fn identity(n: usize) -> Self {
        Self { basis: DMatrix::identity(n, n), inverse: DMatrix::identity(n, n) }
    }

    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        if basis.nrows() != basis.ncols() {
            return Err(CoreError::DimensionMismatch {
                expected: basis.nrows(),
                got: basis.ncols(),
            });
        }
        let inverse = basis
            .clone()
            .try_inverse()
            .ok_or_else(|| CoreError::InvalidRequest("lattice basis is singular".into()))?;
        Ok(Self { basis, inverse })
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Representative of `w` in the fundamental cell `B·[0,1)ⁿ`.
    pub fn reduce(&self, w: &DVector<f64>) -> DVector<f64> {
        let mut coords = &self.inverse * w;
        for c in coords.iter_mut() {
            *c -= c.floor();
            // floor(x) can return x for tiny negative x, leaving 1.0 here.
            if *c >= 1.0 {
                *c -= 1.0;
            }
        }
        &self.basis * coords
    }

    /// Shortest representative of the difference vector `d` modulo `Λ`.
    pub fn wrap_difference(&self, d: &DVector<f64>) -> DVector<f64> {
        let mut coords = &self.inverse * d;
        for c in coords.iter_mut() {
            *c -= c.round();
        }
        &self.basis * coords
    }

    /// Euclidean distance on the quotient (via the wrapped difference).
    pub fn distance_mod(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        self.wrap_difference(&(a - b)).norm()
    }

    /// Real frequency vector of the dual-integer frequency `ν`: `B⁻ᵀ ν`,
    /// so that `w ↦ cos(2π ⟨B⁻ᵀν, w⟩)` is Λ-periodic.
    pub fn effective_frequency(&self, nu: &[i64]) -> DVector<f64> {
        let nu = DVector::from_iterator(nu.len(), nu.iter().map(|&x| x as f64));
        self.inverse.transpose() * nu
    }
}
