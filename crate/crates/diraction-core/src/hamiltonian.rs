//! Hamiltonians `H: M × W → ℝ` as finite trigonometric sums.
//!
//! Every term evaluates as `amp · T(t) · cos(2π ν·w + phase)` with an
//! integer dual-lattice frequency `ν` and a time factor `T` that is either
//! constant, a torus cosine, or the real/imaginary part of a normalized
//! SU(2) matrix coefficient. The class is closed under the estimates the
//! reduction needs: derivatives are exact, and `‖∇²H‖_∞` has the computable
//! upper bound `Σ |amp|·(2π‖ν‖)²` used for the contraction certificate.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // float intrinsics in no_std builds
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::lattice::Lattice;
use crate::su2::{matrix_coeff, Su2Point};

const TWO_PI: f64 = core::f64::consts::TAU;

/// Which time manifold the Hamiltonian lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeDomain {
    /// `Tʳ` with the given `r`.
    Torus(usize),
    /// `SU(2)` (requires a hyperkähler target module downstream).
    Su2,
}

/// A point of the time manifold.
#[derive(Debug, Clone, Copy)]
pub enum TimePoint<'a> {
    Torus(&'a [f64]),
    Su2(&'a Su2Point),
}

/// Real or imaginary part selector for SU(2) time factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComplexPart {
    Re,
    Im,
}

/// The time-dependent factor of a term; `|T| ≤ 1` in all cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TimeFactor {
    /// Time-independent term.
    Const,
    /// `cos(2π m·t + phase)` on `Tʳ`.
    Torus {
        m: Vec<i64>,
        #[serde(default)]
        phase: f64,
    },
    /// `Re` or `Im` of the normalized coefficient `û^{(k)}_{a,b}`.
    Su2 { k: usize, a: usize, b: usize, part: ComplexPart },
}

impl TimeFactor {
    fn eval(&self, t: &TimePoint<'_>) -> crate::Result<f64> {
        match (self, t) {
            (TimeFactor::Const, _) => Ok(1.0),
            (TimeFactor::Torus { m, phase }, TimePoint::Torus(coords)) => {
                if m.len() != coords.len() {
                    return Err(CoreError::DomainMismatch);
                }
                let dot: f64 = m.iter().zip(*coords).map(|(&mi, &ti)| mi as f64 * ti).sum();
                Ok((TWO_PI * dot + phase).cos())
            }
            (TimeFactor::Su2 { k, a, b, part }, TimePoint::Su2(x)) => {
                let u = matrix_coeff(*k, *a, *b, x)?;
                Ok(match part {
                    ComplexPart::Re => u.re,
                    ComplexPart::Im => u.im,
                })
            }
            _ => Err(CoreError::DomainMismatch),
        }
    }

    fn matches_domain(&self, domain: TimeDomain) -> bool {
        match (self, domain) {
            (TimeFactor::Const, _) => true,
            (TimeFactor::Torus { m, .. }, TimeDomain::Torus(r)) => m.len() == r,
            (TimeFactor::Su2 { .. }, TimeDomain::Su2) => true,
            _ => false,
        }
    }
}

/// One separable term `amp · T(t) · cos(2π ν·w + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub time: TimeFactor,
    pub nu: Vec<i64>,
    pub amp: f64,
    #[serde(default)]
    pub phase: f64,
}

impl TrigTerm {
    /// Time-independent cosine `amp·cos(2π ν·w)`.
    pub fn cosine(nu: Vec<i64>, amp: f64) -> Self {
        Self { time: TimeFactor::Const, nu, amp, phase: 0.0 }
    }
}

/// Finite trigonometric Hamiltonian with exact derivatives and sup bounds.
///
/// Immutable and reentrant; evaluation is thread-safe.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigHamiltonian {
    target_dim: usize,
    domain: TimeDomain,
    terms: Vec<TrigTerm>,
    /// Real frequency `B⁻ᵀν` per term (equals `ν` on the unit lattice).
    freqs: Vec<DVector<f64>>,
}

impl TrigHamiltonian {
    /// Build over the unit lattice `ℤⁿ`.
    pub fn new(target_dim: usize, domain: TimeDomain, terms: Vec<TrigTerm>) -> crate::Result<Self> {
        let lattice = Lattice::identity(target_dim);
        Self::with_lattice(target_dim, domain, terms, &lattice)
    }

    /// Build over an explicit target lattice; `ν` is interpreted in the
    /// dual basis so every term stays Λ-periodic.
    pub fn with_lattice(
        target_dim: usize,
        domain: TimeDomain,
        terms: Vec<TrigTerm>,
        lattice: &Lattice,
    ) -> crate::Result<Self> {
        if lattice.dim() != target_dim {
            return Err(CoreError::DimensionMismatch {
                expected: target_dim,
                got: lattice.dim(),
            });
        }
        let mut freqs = Vec::with_capacity(terms.len());
        for term in &terms {
            if term.nu.len() != target_dim {
                return Err(CoreError::DimensionMismatch {
                    expected: target_dim,
                    got: term.nu.len(),
                });
            }
            if !term.amp.is_finite() || !term.phase.is_finite() {
                return Err(CoreError::InvalidRequest(
                    "term with non-finite amplitude/phase".into(),
                ));
            }
            if !term.time.matches_domain(domain) {
                return Err(CoreError::DomainMismatch);
            }
            if let TimeFactor::Su2 { k, a, b, .. } = term.time {
                if a > k || b > k {
                    return Err(CoreError::IndexOutOfRange { k, a, b });
                }
            }
            freqs.push(lattice.effective_frequency(&term.nu));
        }
        Ok(Self { target_dim, domain, terms, freqs })
    }

    /// The zero Hamiltonian.
    pub fn zero(target_dim: usize, domain: TimeDomain) -> Self {
        Self { target_dim, domain, terms: Vec::new(), freqs: Vec::new() }
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn time_domain(&self) -> TimeDomain {
        self.domain
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    /// All time factors at `t`, one per term (hot-loop precomputation).
    pub fn time_factors(&self, t: &TimePoint<'_>) -> crate::Result<Vec<f64>> {
        match (self.domain, t) {
            (TimeDomain::Torus(r), TimePoint::Torus(coords)) if coords.len() == r => {}
            (TimeDomain::Su2, TimePoint::Su2(_)) => {}
            _ => return Err(CoreError::DomainMismatch),
        }
        self.terms.iter().map(|term| term.time.eval(t)).collect()
    }

    pub fn eval(&self, t: &TimePoint<'_>, w: &DVector<f64>) -> crate::Result<f64> {
        Ok(self.eval_with_factors(&self.time_factors(t)?, w))
    }

    pub fn eval_with_factors(&self, factors: &[f64], w: &DVector<f64>) -> f64 {
        let mut total = 0.0;
        for (i, term) in self.terms.iter().enumerate() {
            let angle = TWO_PI * self.freqs[i].dot(w) + term.phase;
            total += term.amp * factors[i] * angle.cos();
        }
        total
    }

    /// Gradient along `W`; lattice-periodic in `w`.
    pub fn grad(&self, t: &TimePoint<'_>, w: &DVector<f64>) -> crate::Result<DVector<f64>> {
        let mut out = DVector::zeros(self.target_dim);
        self.grad_with_factors(&self.time_factors(t)?, w, &mut out);
        Ok(out)
    }

    /// Gradient accumulated into `out` (cleared first).
    pub fn grad_with_factors(&self, factors: &[f64], w: &DVector<f64>, out: &mut DVector<f64>) {
        out.fill(0.0);
        for (i, term) in self.terms.iter().enumerate() {
            let angle = TWO_PI * self.freqs[i].dot(w) + term.phase;
            let scale = -TWO_PI * term.amp * factors[i] * angle.sin();
            out.axpy(scale, &self.freqs[i], 1.0);
        }
    }

    /// Hessian along `W`.
    pub fn hess(&self, t: &TimePoint<'_>, w: &DVector<f64>) -> crate::Result<DMatrix<f64>> {
        let factors = self.time_factors(t)?;
        let mut out = DMatrix::zeros(self.target_dim, self.target_dim);
        for (i, term) in self.terms.iter().enumerate() {
            let angle = TWO_PI * self.freqs[i].dot(w) + term.phase;
            let scale = -TWO_PI * TWO_PI * term.amp * factors[i] * angle.cos();
            // rank-one update scale·ν νᵀ
            out.ger(scale, &self.freqs[i], &self.freqs[i], 1.0);
        }
        Ok(out)
    }

    /// Upper bound for `‖∇²H‖` in operator norm, uniform over `M × W`:
    /// `Σ |amp|·(2π‖ν‖)²` (each `|T| ≤ 1`).
    pub fn hess_sup_bound(&self) -> f64 {
        self.terms
            .iter()
            .zip(&self.freqs)
            .map(|(term, freq)| term.amp.abs() * (TWO_PI * freq.norm()).powi(2))
            .sum()
    }

    /// Upper bound for `‖∇H‖` uniform over `M × W`: `Σ |amp|·2π‖ν‖`.
    pub fn grad_sup_bound(&self) -> f64 {
        self.terms
            .iter()
            .zip(&self.freqs)
            .map(|(term, freq)| term.amp.abs() * TWO_PI * freq.norm())
            .sum()
    }

    /// Upper bound for `|H|`: `Σ |amp|`.
    pub fn sup_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.amp.abs()).sum()
    }

    /// Largest time-frequency content: per-axis `max |m_l|` on the torus,
    /// `max k` on SU(2). Zero for time-independent Hamiltonians.
    pub fn time_band(&self) -> usize {
        self.terms
            .iter()
            .map(|term| match &term.time {
                TimeFactor::Const => 0,
                TimeFactor::Torus { m, .. } => {
                    m.iter().map(|x| x.unsigned_abs() as usize).max().unwrap_or(0)
                }
                TimeFactor::Su2 { k, .. } => *k,
            })
            .max()
            .unwrap_or(0)
    }

    /// Largest per-axis target frequency `max |ν_l|` (grid-sizing heuristic).
    pub fn target_band(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|term| term.nu.iter())
            .map(|x| x.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Smallest truncation `N` making the fiber map a `ρ`-contraction:
    /// `hess_sup_bound/(2πN) ≤ ρ` on the torus, `hess_sup_bound/N ≤ ρ` on
    /// SU(2). At least 1.
    pub fn min_truncation(&self, rho: f64) -> usize {
        assert!(rho > 0.0 && rho < 1.0, "safety factor must be in (0,1)");
        let bound = self.hess_sup_bound();
        let gain = match self.domain {
            TimeDomain::Torus(_) => TWO_PI,
            TimeDomain::Su2 => 1.0,
        };
        let n = (bound / (gain * rho)).ceil() as usize;
        n.max(1)
    }
}
