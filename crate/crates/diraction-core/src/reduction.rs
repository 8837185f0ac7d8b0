//! Finite-dimensional reduction: the fiberwise fixed point `h(g)`, the
//! generating function `Φ(g) = 𝒜_H(g + h(g))` and its derivatives.
//!
//! A field splits as `f = g + h` with `g ∈ E_N = W × F_N` (mean plus modes
//! of degree `< N`) and `h` in the orthogonal tail. Critical points of the
//! action solve the pair of equations `∂̸g = P_N ∇H(g+h)` and
//! `h = ∂̸_N⁻¹ P_N^⊥ ∇H(g+h)`; since `‖∂̸_N⁻¹‖ ≤ 1/(2πN)` (torus) or `1/N`
//! (SU(2)), the second is a contraction for `N` past the certificate
//! threshold and `h(g)` is found by Picard iteration. The quadratic part
//! of the action is taken as `½⟨∂̸f, f⟩` so that its L² gradient is
//! exactly `∂̸f` and `∂̸f = ∇H(f)` is the Euler–Lagrange equation.
//!
//! The tail is computed inside a working band `N ≤ degree < N_tail`
//! (default `N_tail = 2N +` time band of `H`); the part of `∇H∘f` beyond
//! the band is measured by quadrature Parseval and reported as a norm
//! bound on the neglected tail.
//!
//! Base points `g` are handled as flat coordinate vectors
//! `[mean (n) | low-mode coefficients]` in the L²-orthonormal bases, so
//! Euclidean norms and inner products on coordinates are the L² ones.

use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // float intrinsics in no_std builds
use num_traits::Float;

use crate::clifford::CliffordModule;
use crate::error::CoreError;
use crate::hamiltonian::{TimeDomain, TimePoint, TrigHamiltonian};
use crate::lattice::Lattice;
use crate::su2::{Su2ModeSet, Su2Quadrature};
use crate::torus::{grid_points, TorusModeSet};
use crate::Result;

const TWO_PI: f64 = core::f64::consts::TAU;

/// Tunables of the reduction; defaults match the standard runs.
#[derive(Debug, Clone)]
pub struct ReductionOptions {
    /// Contraction safety factor used when the truncation is chosen
    /// automatically.
    pub rho_auto: f64,
    /// Stop Picard iteration when successive tails differ by less.
    pub fixed_point_tol: f64,
    pub max_fixed_point_iters: usize,
    /// Multiplies the synthesis grid/quadrature density (refinement checks).
    pub quadrature_boost: usize,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        Self {
            rho_auto: 0.5,
            fixed_point_tol: 1e-12,
            max_fixed_point_iters: 200,
            quadrature_boost: 1,
        }
    }
}

/// Which spectral domain the problem lives on, with its sampling rule.
enum SpaceKind {
    Torus { modes: Arc<TorusModeSet>, grid: usize },
    Su2 { modes: Arc<Su2ModeSet>, quad: Su2Quadrature },
}

/// Per-entry coefficient action `out_e = diag·c_e + M·c_partner` of `∂̸`
/// and of its blockwise inverse.
struct EntryOp {
    partner: usize,
    apply_diag: f64,
    apply_couple: Option<DMatrix<f64>>,
    inv_diag: f64,
    inv_couple: Option<DMatrix<f64>>,
}

/// Bundle defining `Φ` on `E_N = W × F_N`: module, Hamiltonian, lattice,
/// truncation and the precomputed sampling/synthesis machinery.
///
/// Immutable; all evaluators are pure functions of `(problem, g)`.
pub struct ReducedProblem {
    module: Arc<CliffordModule>,
    hamiltonian: TrigHamiltonian,
    lattice: Lattice,
    n_trunc: usize,
    n_tail: usize,
    options: ReductionOptions,
    kind: SpaceKind,
    /// Scalar entries with degree < N (a prefix of the full band).
    low_entries: usize,
    full_entries: usize,
    /// Synthesis matrix: values (points·n) = S · coefficients (entries·n).
    synth: DMatrix<f64>,
    /// Quadrature weight per sample point (sums to 1).
    weights: Vec<f64>,
    /// Per-point Hamiltonian time factors.
    time_factors: Vec<Vec<f64>>,
    dirac: Vec<EntryOp>,
}

/// Convergence record of one fiber solve.
#[derive(Debug, Clone)]
pub struct FiberSolution {
    /// Tail coefficients (band `N ≤ degree < N_tail`).
    pub tail: DVector<f64>,
    pub iterations: usize,
    /// Largest measured step ratio `‖Δh_{i+1}‖/‖Δh_i‖`.
    pub max_ratio: f64,
    /// Norm bound for the tail neglected beyond the working band:
    /// discarded `∇H` mass times the inverse gain at `N_tail`.
    pub neglected_tail_bound: f64,
}

/// Full evaluation of the reduction at a base point.
#[derive(Debug, Clone)]
pub struct ReducedPoint {
    /// Base coordinates `g` (flat `[mean | low coefficients]`).
    pub base: DVector<f64>,
    /// Fiber fixed point `h(g)`.
    pub tail: DVector<f64>,
    /// `Φ(g) = 𝒜_H(g + h(g))`.
    pub phi: f64,
    /// `∇Φ(g) = ∂̸g − P_N ∇H(g + h(g))` in base coordinates.
    pub grad: DVector<f64>,
    /// Certified distance of `g + h(g)` from being a solution.
    pub residual: f64,
    pub fiber: FiberSolution,
}

/// A full field `f = g + h` in flat band coordinates.
#[derive(Debug, Clone)]
pub struct AssembledField {
    pub mean: DVector<f64>,
    /// All coefficients of the working band `0 < degree < N_tail`.
    pub coeffs: DVector<f64>,
}

impl ReducedProblem {
    /// Build a problem; `n_trunc = None` picks the smallest truncation
    /// with contraction factor ≤ `rho_auto`. Errors if the certificate
    /// fails at the requested truncation.
    pub fn new(
        module: Arc<CliffordModule>,
        hamiltonian: TrigHamiltonian,
        lattice: Lattice,
        n_trunc: Option<usize>,
        options: ReductionOptions,
    ) -> Result<Self> {
        if hamiltonian.target_dim() != module.dim() {
            return Err(CoreError::DimensionMismatch {
                expected: module.dim(),
                got: hamiltonian.target_dim(),
            });
        }
        if lattice.dim() != module.dim() {
            return Err(CoreError::DimensionMismatch {
                expected: module.dim(),
                got: lattice.dim(),
            });
        }
        match hamiltonian.time_domain() {
            TimeDomain::Torus(r) => {
                if r != module.rank() {
                    return Err(CoreError::DimensionMismatch {
                        expected: module.rank(),
                        got: r,
                    });
                }
            }
            TimeDomain::Su2 => {
                if !module.is_hyperkahler() {
                    return Err(CoreError::NotHyperkahler);
                }
            }
        }
        let n_trunc = n_trunc.unwrap_or_else(|| hamiltonian.min_truncation(options.rho_auto));
        let gain = match hamiltonian.time_domain() {
            TimeDomain::Torus(_) => TWO_PI * n_trunc as f64,
            TimeDomain::Su2 => n_trunc as f64,
        };
        let factor = hamiltonian.hess_sup_bound() / gain;
        if factor >= 1.0 {
            return Err(CoreError::ContractionViolated { ratio: factor });
        }
        let n_tail = 2 * n_trunc + hamiltonian.time_band();
        let boost = options.quadrature_boost.max(1);

        let n = module.dim();
        let kind = match hamiltonian.time_domain() {
            TimeDomain::Torus(r) => {
                let modes = Arc::new(TorusModeSet::ball(r, n_tail));
                let grid = (2 * n_tail - 1)
                    .max(4 * (n_trunc + hamiltonian.target_band()))
                    * boost;
                SpaceKind::Torus { modes, grid }
            }
            TimeDomain::Su2 => {
                let band = (2 * (n_tail - 1) + hamiltonian.time_band())
                    .max(4 * (n_trunc + hamiltonian.time_band()))
                    * boost;
                let modes = Arc::new(Su2ModeSet::band(1, n_tail));
                SpaceKind::Su2 { modes, quad: Su2Quadrature::for_band(band) }
            }
        };

        // Sample points, weights and time factors.
        let (points, weights, time_factors): (usize, Vec<f64>, Vec<Vec<f64>>) = match &kind {
            SpaceKind::Torus { modes, grid } => {
                let pts = grid_points(modes.time_dim(), *grid);
                let w = alloc::vec![1.0 / pts.len() as f64; pts.len()];
                let tf = pts
                    .iter()
                    .map(|t| hamiltonian.time_factors(&TimePoint::Torus(t)))
                    .collect::<Result<Vec<_>>>()?;
                (pts.len(), w, tf)
            }
            SpaceKind::Su2 { quad, .. } => {
                let tf = quad
                    .nodes()
                    .iter()
                    .map(|x| hamiltonian.time_factors(&TimePoint::Su2(x)))
                    .collect::<Result<Vec<_>>>()?;
                (quad.len(), quad.weights().to_vec(), tf)
            }
        };

        // Synthesis matrix and the entrywise Dirac tables.
        let (low_entries, full_entries, synth, dirac) = match &kind {
            SpaceKind::Torus { modes, grid } => {
                let pts = grid_points(modes.time_dim(), *grid);
                let j = module.structure(module.rank());
                let mut synth = DMatrix::zeros(points * n, modes.len() * n);
                for (idx, k) in modes.modes().iter().enumerate() {
                    for (p, t) in pts.iter().enumerate() {
                        let theta =
                            TWO_PI * k.iter().zip(t).map(|(&ki, &ti)| ki as f64 * ti).sum::<f64>();
                        let (s, c) = theta.sin_cos();
                        for i in 0..n {
                            for m in 0..n {
                                let mut val = s * j[(i, m)];
                                if i == m {
                                    val += c;
                                }
                                synth[(p * n + i, idx * n + m)] = val;
                            }
                        }
                    }
                }
                let mut ops = Vec::with_capacity(modes.len());
                for (idx, k) in modes.modes().iter().enumerate() {
                    let m_r = k[k.len() - 1] as f64;
                    let nsq: i64 = k.iter().map(|c| c * c).sum();
                    let mut jk = DMatrix::zeros(n, n);
                    for l in 0..k.len().saturating_sub(1) {
                        if k[l] != 0 {
                            jk += module.structure(l + 1) * k[l] as f64;
                        }
                    }
                    let jk = j * jk;
                    let couple = if jk.amax() > 0.0 { Some(jk) } else { None };
                    ops.push(EntryOp {
                        partner: modes.partner(idx),
                        apply_diag: -TWO_PI * m_r,
                        apply_couple: couple.clone().map(|m| m * TWO_PI),
                        inv_diag: -m_r / (TWO_PI * nsq as f64),
                        inv_couple: couple.map(|m| m / (TWO_PI * nsq as f64)),
                    });
                }
                (modes.prefix_len(n_trunc), modes.len(), synth, ops)
            }
            SpaceKind::Su2 { modes, quad } => {
                let j3 = module.structure(3);
                let j2 = module.structure(2);
                let mut synth = DMatrix::zeros(points * n, modes.len() * n);
                for (idx, mode) in modes.entries().iter().enumerate() {
                    for (p, x) in quad.nodes().iter().enumerate() {
                        let u = mode.eval(x);
                        for i in 0..n {
                            for m in 0..n {
                                let mut val = u.im * j3[(i, m)];
                                if i == m {
                                    val += u.re;
                                }
                                synth[(p * n + i, idx * n + m)] = val;
                            }
                        }
                    }
                }
                let mut ops = Vec::with_capacity(modes.len());
                for mode in modes.entries() {
                    let (k, a, b) = (mode.k, mode.a, mode.b);
                    let diag = k as f64 - 2.0 * b as f64;
                    if b == 0 {
                        ops.push(EntryOp {
                            partner: modes.index(k, a, b).unwrap(),
                            apply_diag: diag,
                            apply_couple: None,
                            inv_diag: 1.0 / k as f64,
                            inv_couple: None,
                        });
                        continue;
                    }
                    let partner = modes.index(k, k - a, k - b + 1).expect("partner in band");
                    let ladder = 2.0 * ((b * (k - b + 1)) as f64).sqrt();
                    let sign = if (a + b) % 2 == 0 { -1.0 } else { 1.0 };
                    let det = -((k * (k + 2)) as f64);
                    let d2 = 2.0 * b as f64 - k as f64 - 2.0;
                    ops.push(EntryOp {
                        partner,
                        apply_diag: diag,
                        apply_couple: Some(j2 * (sign * ladder)),
                        inv_diag: d2 / det,
                        inv_couple: Some(j2 * (-sign * ladder / det)),
                    });
                }
                (modes.prefix_len(n_trunc), modes.len(), synth, ops)
            }
        };

        Ok(Self {
            module,
            hamiltonian,
            lattice,
            n_trunc,
            n_tail,
            options,
            kind,
            low_entries,
            full_entries,
            synth,
            weights,
            time_factors,
            dirac,
        })
    }

    pub fn module(&self) -> &Arc<CliffordModule> {
        &self.module
    }

    pub fn hamiltonian(&self) -> &TrigHamiltonian {
        &self.hamiltonian
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn n_trunc(&self) -> usize {
        self.n_trunc
    }

    pub fn n_tail(&self) -> usize {
        self.n_tail
    }

    pub fn time_domain(&self) -> TimeDomain {
        self.hamiltonian.time_domain()
    }

    /// Torus mode set of the working band (torus problems only).
    pub fn torus_modes(&self) -> Option<&Arc<TorusModeSet>> {
        match &self.kind {
            SpaceKind::Torus { modes, .. } => Some(modes),
            SpaceKind::Su2 { .. } => None,
        }
    }

    /// SU(2) mode set of the working band (SU(2) problems only).
    pub fn su2_modes(&self) -> Option<&Arc<Su2ModeSet>> {
        match &self.kind {
            SpaceKind::Su2 { modes, .. } => Some(modes),
            SpaceKind::Torus { .. } => None,
        }
    }

    /// Certified contraction factor `‖∇²H‖_∞·‖∂̸_N⁻¹‖` (< 1).
    pub fn contraction_factor(&self) -> f64 {
        self.hamiltonian.hess_sup_bound() * self.tail_gain(self.n_trunc)
    }

    /// `‖∂̸⁻¹‖` on modes of degree ≥ `cutoff`.
    fn tail_gain(&self, cutoff: usize) -> f64 {
        match self.hamiltonian.time_domain() {
            TimeDomain::Torus(_) => 1.0 / (TWO_PI * cutoff as f64),
            TimeDomain::Su2 => 1.0 / cutoff as f64,
        }
    }

    pub fn w_dim(&self) -> usize {
        self.module.dim()
    }

    /// Dimension of `E_N` in flat coordinates: `n + n·(low entries)`.
    pub fn base_dim(&self) -> usize {
        self.module.dim() * (1 + self.low_entries)
    }

    pub fn low_coeff_dim(&self) -> usize {
        self.module.dim() * self.low_entries
    }

    pub fn tail_coeff_dim(&self) -> usize {
        self.module.dim() * (self.full_entries - self.low_entries)
    }

    /// Base point with the given mean and zero fiber part.
    pub fn base_from_mean(&self, mean: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.base_dim());
        g.rows_mut(0, self.w_dim()).copy_from(mean);
        g
    }

    pub fn mean_of(&self, base: &DVector<f64>) -> DVector<f64> {
        base.rows(0, self.w_dim()).into_owned()
    }

    pub fn low_of(&self, base: &DVector<f64>) -> DVector<f64> {
        base.rows(self.w_dim(), self.low_coeff_dim()).into_owned()
    }

    /// `f = g + h` as a full-band field.
    pub fn assemble(&self, base: &DVector<f64>, tail: &DVector<f64>) -> Result<AssembledField> {
        if base.len() != self.base_dim() || tail.len() != self.tail_coeff_dim() {
            return Err(CoreError::ShapeMismatch);
        }
        let mut coeffs = DVector::zeros(self.full_entries * self.module.dim());
        coeffs.rows_mut(0, self.low_coeff_dim()).copy_from(&base.rows(
            self.w_dim(),
            self.low_coeff_dim(),
        ));
        coeffs
            .rows_mut(self.low_coeff_dim(), self.tail_coeff_dim())
            .copy_from(tail);
        Ok(AssembledField { mean: self.mean_of(base), coeffs })
    }

    /// Apply `∂̸` entrywise on a coefficient range `[lo, hi)` (entry units).
    fn dirac_range(&self, coeffs: &DVector<f64>, lo: usize, hi: usize, out: &mut DVector<f64>) {
        let n = self.module.dim();
        out.fill(0.0);
        for e in lo..hi {
            let op = &self.dirac[e];
            let src = coeffs.rows(e * n, n);
            let mut dst = out.rows_mut((e - lo) * n, n);
            dst.axpy(op.apply_diag, &src, 0.0);
            if let Some(m) = &op.apply_couple {
                let p = coeffs.rows(op.partner * n, n);
                dst.gemv(1.0, m, &p, 1.0);
            }
        }
    }

    /// Apply the blockwise inverse of `∂̸` on `[lo, hi)`. The input vector
    /// is indexed relative to `lo`.
    fn dirac_inv_range(
        &self,
        coeffs: &DVector<f64>,
        lo: usize,
        hi: usize,
        out: &mut DVector<f64>,
    ) {
        let n = self.module.dim();
        out.fill(0.0);
        for e in lo..hi {
            let op = &self.dirac[e];
            let src = coeffs.rows((e - lo) * n, n);
            let mut dst = out.rows_mut((e - lo) * n, n);
            dst.axpy(op.inv_diag, &src, 0.0);
            if let Some(m) = &op.inv_couple {
                let p = coeffs.rows((op.partner - lo) * n, n);
                dst.gemv(1.0, m, &p, 1.0);
            }
        }
    }

    /// Sampled values of `f` (point-major), `values = mean ⊕ S·coeffs`.
    fn synth_values(&self, field: &AssembledField) -> DVector<f64> {
        let n = self.module.dim();
        let mut values = DVector::zeros(self.weights.len() * n);
        for p in 0..self.weights.len() {
            values.rows_mut(p * n, n).copy_from(&field.mean);
        }
        values.gemv(1.0, &self.synth, &field.coeffs, 1.0);
        values
    }

    /// `∇H` at every sample point (point-major), using the precomputed
    /// time factors.
    fn grad_h_values(&self, values: &DVector<f64>) -> DVector<f64> {
        let n = self.module.dim();
        let mut out = DVector::zeros(values.len());
        let mut w = DVector::zeros(n);
        let mut g = DVector::zeros(n);
        for p in 0..self.weights.len() {
            w.copy_from(&values.rows(p * n, n));
            self.hamiltonian.grad_with_factors(&self.time_factors[p], &w, &mut g);
            out.rows_mut(p * n, n).copy_from(&g);
        }
        out
    }

    /// Quadrature mean of point-major values.
    fn quad_mean(&self, values: &DVector<f64>) -> DVector<f64> {
        let n = self.module.dim();
        let mut mean = DVector::zeros(n);
        for (p, &w) in self.weights.iter().enumerate() {
            mean.axpy(w, &values.rows(p * n, n), 1.0);
        }
        mean
    }

    /// Project point-major values onto entries `[lo, hi)` of the band.
    fn analyze_range(&self, values: &DVector<f64>, lo: usize, hi: usize) -> DVector<f64> {
        let n = self.module.dim();
        let mut weighted = values.clone();
        for (p, &w) in self.weights.iter().enumerate() {
            weighted.rows_mut(p * n, n).scale_mut(w);
        }
        let cols = self.synth.columns(lo * n, (hi - lo) * n);
        cols.tr_mul(&weighted)
    }

    /// Quadrature L² norm² of point-major values.
    fn quad_norm_sq(&self, values: &DVector<f64>) -> f64 {
        let n = self.module.dim();
        let mut acc = 0.0;
        for (p, &w) in self.weights.iter().enumerate() {
            acc += w * values.rows(p * n, n).norm_squared();
        }
        acc
    }

    /// Unique fiber fixed point `h(g)` by Picard iteration from `h₀ = 0`.
    pub fn solve_fiber(&self, base: &DVector<f64>) -> Result<FiberSolution> {
        let zero = DVector::zeros(self.tail_coeff_dim());
        self.solve_fiber_warm(base, &zero)
    }

    /// Same fixed point, started from a caller-supplied tail (the fixed
    /// point is unique, so the start only affects the iteration count).
    pub fn solve_fiber_warm(
        &self,
        base: &DVector<f64>,
        start: &DVector<f64>,
    ) -> Result<FiberSolution> {
        if base.len() != self.base_dim() || start.len() != self.tail_coeff_dim() {
            return Err(CoreError::ShapeMismatch);
        }
        let n = self.module.dim();
        let lo = self.low_entries;
        let hi = self.full_entries;
        let tol = self.options.fixed_point_tol;

        let mut field = self.assemble(base, start)?;
        let mut tail = start.clone();
        let mut new_tail = DVector::zeros(self.tail_coeff_dim());
        let mut prev_delta = f64::NAN;
        let mut max_ratio: f64 = 0.0;

        for iter in 1..=self.options.max_fixed_point_iters {
            let values = self.synth_values(&field);
            let grads = self.grad_h_values(&values);
            let projected = self.analyze_range(&grads, lo, hi);
            self.dirac_inv_range(&projected, lo, hi, &mut new_tail);

            let delta = (&new_tail - &tail).norm();
            if prev_delta.is_finite() && prev_delta > 100.0 * tol {
                let ratio = delta / prev_delta;
                max_ratio = max_ratio.max(ratio);
                if ratio >= 1.0 && delta > 100.0 * tol {
                    return Err(CoreError::ContractionViolated { ratio });
                }
            }
            tail.copy_from(&new_tail);
            field.coeffs.rows_mut(lo * n, (hi - lo) * n).copy_from(&tail);
            if delta < tol {
                // Tail mass of ∇H beyond the working band, mapped through
                // the inverse gain at the outer cutoff.
                let total = self.quad_norm_sq(&grads);
                let mean_part = self.quad_mean(&grads).norm_squared();
                let low_part = self.analyze_range(&grads, 0, lo).norm_squared();
                let captured = mean_part + low_part + projected.norm_squared();
                let neglected =
                    (total - captured).max(0.0).sqrt() * self.tail_gain(self.n_tail);
                return Ok(FiberSolution {
                    tail,
                    iterations: iter,
                    max_ratio,
                    neglected_tail_bound: neglected,
                });
            }
            prev_delta = delta;
        }
        Err(CoreError::MaxItersExceeded {
            iters: self.options.max_fixed_point_iters,
            last_step: prev_delta,
        })
    }

    /// `½⟨∂̸f, f⟩`: the quadratic action, independent of the mean.
    pub fn action_quadratic(&self, field: &AssembledField) -> f64 {
        let mut image = DVector::zeros(field.coeffs.len());
        self.dirac_range(&field.coeffs, 0, self.full_entries, &mut image);
        0.5 * image.dot(&field.coeffs)
    }

    /// `𝒜_H(f) = ½⟨∂̸f, f⟩ − ∫ H(t, f(t)) dμ`.
    pub fn action_total(&self, field: &AssembledField) -> f64 {
        let n = self.module.dim();
        let values = self.synth_values(field);
        let mut h_integral = 0.0;
        let mut w = DVector::zeros(n);
        for (p, &weight) in self.weights.iter().enumerate() {
            w.copy_from(&values.rows(p * n, n));
            h_integral += weight * self.hamiltonian.eval_with_factors(&self.time_factors[p], &w);
        }
        self.action_quadratic(field) - h_integral
    }

    /// `Φ₀` and `∇Φ₀` of the unperturbed quadratic part on the base.
    pub fn quadratic_value(&self, base: &DVector<f64>) -> f64 {
        let low = self.low_of(base);
        let mut image = DVector::zeros(low.len());
        self.dirac_low(&low, &mut image);
        0.5 * image.dot(&low)
    }

    pub fn quadratic_grad(&self, base: &DVector<f64>) -> DVector<f64> {
        let low = self.low_of(base);
        let mut image = DVector::zeros(low.len());
        self.dirac_low(&low, &mut image);
        let mut grad = DVector::zeros(self.base_dim());
        grad.rows_mut(self.w_dim(), self.low_coeff_dim()).copy_from(&image);
        grad
    }

    fn dirac_low(&self, low: &DVector<f64>, out: &mut DVector<f64>) {
        // Low band is closed under k ↔ −k / partner pairing, so the range
        // application is self-contained.
        let n = self.module.dim();
        let mut full = DVector::zeros(self.full_entries * n);
        full.rows_mut(0, low.len()).copy_from(low);
        let mut image = DVector::zeros(low.len());
        self.dirac_range_into(&full, 0, self.low_entries, &mut image);
        out.copy_from(&image);
    }

    fn dirac_range_into(
        &self,
        coeffs: &DVector<f64>,
        lo: usize,
        hi: usize,
        out: &mut DVector<f64>,
    ) {
        self.dirac_range(coeffs, lo, hi, out);
    }

    /// Gradient of `Φ` at `g` given the already-solved tail.
    fn grad_with_tail(&self, base: &DVector<f64>, tail: &DVector<f64>) -> Result<DVector<f64>> {
        let field = self.assemble(base, tail)?;
        let values = self.synth_values(&field);
        let grads = self.grad_h_values(&values);
        let mean_g = self.quad_mean(&grads);
        let low_g = self.analyze_range(&grads, 0, self.low_entries);
        let low = self.low_of(base);
        let mut dirac_g = DVector::zeros(low.len());
        self.dirac_low(&low, &mut dirac_g);
        let mut grad = DVector::zeros(self.base_dim());
        grad.rows_mut(0, self.w_dim()).copy_from(&(-mean_g));
        grad.rows_mut(self.w_dim(), self.low_coeff_dim())
            .copy_from(&(dirac_g - low_g));
        Ok(grad)
    }

    /// Certified residual `‖P_{N_tail}(∂̸f − ∇H(f))‖ + neglected tail` of
    /// the assembled field.
    pub fn residual(&self, field: &AssembledField) -> Result<f64> {
        let values = self.synth_values(field);
        let grads = self.grad_h_values(&values);
        let mean_g = self.quad_mean(&grads);
        let band_g = self.analyze_range(&grads, 0, self.full_entries);
        let mut dirac_f = DVector::zeros(field.coeffs.len());
        self.dirac_range(&field.coeffs, 0, self.full_entries, &mut dirac_f);

        let total = self.quad_norm_sq(&grads);
        let captured = mean_g.norm_squared() + band_g.norm_squared();
        let discarded = (total - captured).max(0.0).sqrt();

        let band_residual_sq = mean_g.norm_squared() + (dirac_f - band_g).norm_squared();
        Ok(band_residual_sq.sqrt() + discarded)
    }

    /// `Φ(g)`.
    pub fn generating_value(&self, base: &DVector<f64>) -> Result<f64> {
        let fiber = self.solve_fiber(base)?;
        let field = self.assemble(base, &fiber.tail)?;
        Ok(self.action_total(&field))
    }

    /// `∇Φ(g)`.
    pub fn generating_grad(&self, base: &DVector<f64>) -> Result<DVector<f64>> {
        let fiber = self.solve_fiber(base)?;
        self.grad_with_tail(base, &fiber.tail)
    }

    /// Everything at once: `h(g)`, `Φ`, `∇Φ` and the residual of
    /// `g + h(g)`.
    pub fn reduce(&self, base: &DVector<f64>) -> Result<ReducedPoint> {
        self.reduce_warm(base, None)
    }

    /// As [`reduce`](Self::reduce) but with a warm-started fiber solve.
    pub fn reduce_warm(
        &self,
        base: &DVector<f64>,
        start: Option<&DVector<f64>>,
    ) -> Result<ReducedPoint> {
        let fiber = match start {
            Some(h0) => self.solve_fiber_warm(base, h0)?,
            None => self.solve_fiber(base)?,
        };
        let field = self.assemble(base, &fiber.tail)?;
        let phi = self.action_total(&field);
        let grad = self.grad_with_tail(base, &fiber.tail)?;
        let residual = self.residual(&field)?;
        Ok(ReducedPoint { base: base.clone(), tail: fiber.tail.clone(), phi, grad, residual, fiber })
    }

    /// Hessian of `Φ` by central differences of `∇Φ` (step `1e-5`),
    /// symmetrized. Fiber solves are warm-started from `h(g)`.
    pub fn generating_hess(&self, base: &DVector<f64>) -> Result<DMatrix<f64>> {
        const STEP: f64 = 1e-5;
        let center = self.solve_fiber(base)?;
        let dim = self.base_dim();
        let mut hess = DMatrix::zeros(dim, dim);
        let mut perturbed = base.clone();
        for i in 0..dim {
            perturbed[i] = base[i] + STEP;
            let plus = self.solve_fiber_warm(&perturbed, &center.tail)?;
            let grad_plus = self.grad_with_tail(&perturbed, &plus.tail)?;
            perturbed[i] = base[i] - STEP;
            let minus = self.solve_fiber_warm(&perturbed, &center.tail)?;
            let grad_minus = self.grad_with_tail(&perturbed, &minus.tail)?;
            perturbed[i] = base[i];
            let column = (grad_plus - grad_minus) / (2.0 * STEP);
            hess.set_column(i, &column);
        }
        let sym = (&hess + hess.transpose()) * 0.5;
        Ok(sym)
    }

    pub fn options(&self) -> &ReductionOptions {
        &self.options
    }

    /// The same problem at truncation `N + n_plus` (fresh precomputation).
    pub fn refined(&self, n_plus: usize) -> Result<ReducedProblem> {
        ReducedProblem::new(
            self.module.clone(),
            self.hamiltonian.clone(),
            self.lattice.clone(),
            Some(self.n_trunc + n_plus),
            self.options.clone(),
        )
    }

    /// Embed a base point of a coarser problem (same module, Hamiltonian
    /// and lattice, smaller truncation) into this problem's coordinates.
    /// Mode orderings make the coarse coefficients a prefix.
    pub fn embed_base(&self, coarse: &ReducedProblem, base: &DVector<f64>) -> Result<DVector<f64>> {
        if coarse.base_dim() > self.base_dim() || coarse.w_dim() != self.w_dim() {
            return Err(CoreError::ShapeMismatch);
        }
        let mut out = DVector::zeros(self.base_dim());
        out.rows_mut(0, self.w_dim())
            .copy_from(&base.rows(0, self.w_dim()));
        let coarse_low = coarse.low_coeff_dim();
        out.rows_mut(self.w_dim(), coarse_low)
            .copy_from(&base.rows(self.w_dim(), coarse_low));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::TrigTerm;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn torus_problem(eps: f64, n_trunc: Option<usize>) -> ReducedProblem {
        // r = 1 time, W = T², H = ε(cos 2πw₁ + cos 2πw₂).
        let module = Arc::new(CliffordModule::build(1, false).unwrap());
        let h = TrigHamiltonian::new(
            2,
            TimeDomain::Torus(1),
            vec![TrigTerm::cosine(vec![1, 0], eps), TrigTerm::cosine(vec![0, 1], eps)],
        )
        .unwrap();
        ReducedProblem::new(module, h, Lattice::identity(2), n_trunc, Default::default())
            .unwrap()
    }

    fn su2_problem(eps: f64) -> ReducedProblem {
        let module = Arc::new(CliffordModule::build(3, true).unwrap());
        let terms = (0..4)
            .map(|i| {
                let mut nu = vec![0i64; 4];
                nu[i] = 1;
                TrigTerm::cosine(nu, eps)
            })
            .collect();
        let h = TrigHamiltonian::new(4, TimeDomain::Su2, terms).unwrap();
        ReducedProblem::new(module, h, Lattice::identity(4), None, Default::default()).unwrap()
    }

    fn random_base(problem: &ReducedProblem, rng: &mut ChaCha8Rng, scale: f64) -> DVector<f64> {
        DVector::from_fn(problem.base_dim(), |_, _| (rng.random::<f64>() - 0.5) * scale)
    }

    #[test]
    fn zero_hamiltonian_fixed_point_is_zero() {
        let module = Arc::new(CliffordModule::build(2, false).unwrap());
        let h = TrigHamiltonian::zero(4, TimeDomain::Torus(2));
        let problem =
            ReducedProblem::new(module, h, Lattice::identity(4), Some(2), Default::default())
                .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let base = random_base(&problem, &mut rng, 1.0);
        let fiber = problem.solve_fiber(&base).unwrap();
        assert_eq!(fiber.iterations, 1);
        assert_eq!(fiber.tail.norm(), 0.0);
        assert_eq!(fiber.neglected_tail_bound, 0.0);
    }

    #[test]
    fn constant_base_time_independent_h_has_zero_tail() {
        let problem = torus_problem(0.05, None);
        let mean = DVector::from_column_slice(&[0.3, 0.7]);
        let base = problem.base_from_mean(&mean);
        let fiber = problem.solve_fiber(&base).unwrap();
        assert!(fiber.tail.norm() < 1e-14);
        assert!(fiber.neglected_tail_bound < 1e-12);
    }

    #[test]
    fn fiber_norm_bounded_by_grad_sup() {
        let problem = torus_problem(0.05, None);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..5 {
            let base = random_base(&problem, &mut rng, 0.6);
            let fiber = problem.solve_fiber(&base).unwrap();
            let bound = problem.hamiltonian().grad_sup_bound()
                * problem.tail_gain(problem.n_trunc());
            assert!(
                fiber.tail.norm() <= bound + 1e-12,
                "‖h‖ = {} exceeds {bound}",
                fiber.tail.norm()
            );
        }
    }

    #[test]
    fn picard_ratio_within_certificate() {
        let problem = torus_problem(0.05, None);
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..5 {
            let base = random_base(&problem, &mut rng, 0.6);
            let fiber = problem.solve_fiber(&base).unwrap();
            assert!(
                fiber.max_ratio <= problem.contraction_factor() + 0.05,
                "ratio {} vs certificate {}",
                fiber.max_ratio,
                problem.contraction_factor()
            );
            assert!(fiber.iterations <= 50);
        }
    }

    #[test]
    fn truncation_too_small_is_rejected() {
        // ε large enough that N = 1 fails the certificate.
        let module = Arc::new(CliffordModule::build(1, false).unwrap());
        let h = TrigHamiltonian::new(
            2,
            TimeDomain::Torus(1),
            vec![TrigTerm::cosine(vec![1, 0], 0.5)],
        )
        .unwrap();
        let result = ReducedProblem::new(module, h, Lattice::identity(2), Some(1), Default::default());
        assert!(matches!(result.err(), Some(CoreError::ContractionViolated { .. })));
    }

    #[test]
    fn quadratic_action_on_block_eigenvector() {
        // Coefficient pair on an eigenvector of A_{k*} with eigenvalue
        // 2π‖k‖ and unit norm gives Φ₀ = π‖k‖.
        let problem = torus_problem(0.01, Some(3));
        let modes = problem.torus_modes().unwrap().clone();
        let module = problem.module().clone();
        let k = vec![2i64];
        let block = crate::torus::dirac_block(&module, &k).unwrap();
        let eig = block.clone().symmetric_eigen();
        let n = module.dim();
        let mut base = DVector::zeros(problem.base_dim());
        let target = TWO_PI * 2.0;
        let mut found = false;
        for (i, ev) in eig.eigenvalues.iter().enumerate() {
            if (ev - target).abs() < 1e-9 {
                let v = eig.eigenvectors.column(i);
                let idx_neg = modes.index(&[-2]).unwrap();
                let idx_pos = modes.index(&[2]).unwrap();
                for c in 0..n {
                    base[problem.w_dim() + idx_neg * n + c] = v[c];
                    base[problem.w_dim() + idx_pos * n + c] = v[n + c];
                }
                found = true;
                break;
            }
        }
        assert!(found);
        let phi0 = problem.quadratic_value(&base);
        assert!(
            (phi0 - core::f64::consts::PI * 2.0).abs() < 1e-10,
            "Φ₀ = {phi0}"
        );
    }

    #[test]
    fn classical_loop_action() {
        // r = 1: the single-mode loop t ↦ exp(2πtJ)v sweeps a circle of
        // radius ‖v‖; its action is −π‖v‖².
        let problem = torus_problem(0.0, Some(2));
        let modes = problem.torus_modes().unwrap().clone();
        let n = 2;
        let idx = modes.index(&[1]).unwrap();
        let mut base = DVector::zeros(problem.base_dim());
        base[problem.w_dim() + idx * n] = 0.7;
        let phi0 = problem.quadratic_value(&base);
        assert!((phi0 + core::f64::consts::PI * 0.49).abs() < 1e-12, "Φ₀ = {phi0}");
    }

    #[test]
    fn zero_h_generating_equals_quadratic() {
        let module = Arc::new(CliffordModule::build(1, false).unwrap());
        let h = TrigHamiltonian::zero(2, TimeDomain::Torus(1));
        let problem =
            ReducedProblem::new(module, h, Lattice::identity(2), Some(2), Default::default())
                .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let base = random_base(&problem, &mut rng, 1.0);
        let point = problem.reduce(&base).unwrap();
        assert!((point.phi - problem.quadratic_value(&base)).abs() < 1e-12);
        let expected_grad = problem.quadratic_grad(&base);
        assert!((point.grad.clone() - expected_grad).norm() < 1e-12);
    }

    #[test]
    fn constant_critical_point_is_exact() {
        // w* = (0.5, 0.5) is a critical point of ε(cos2πw₁ + cos2πw₂).
        let problem = torus_problem(0.05, None);
        let mean = DVector::from_column_slice(&[0.5, 0.5]);
        let base = problem.base_from_mean(&mean);
        let point = problem.reduce(&base).unwrap();
        assert!(point.grad.norm() < 1e-12, "∇Φ = {}", point.grad.norm());
        assert!(point.residual < 1e-10, "residual = {}", point.residual);

        // A non-critical constant has a strictly positive residual.
        let off = problem.base_from_mean(&DVector::from_column_slice(&[0.3, 0.5]));
        let bad = problem.reduce(&off).unwrap();
        assert!(bad.residual > 1e-3);
    }

    #[test]
    fn gradient_matches_finite_differences_of_phi() {
        let problem = torus_problem(0.05, None);
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        const STEP: f64 = 1e-5;
        for _ in 0..5 {
            let base = random_base(&problem, &mut rng, 0.5);
            let point = problem.reduce(&base).unwrap();
            let mut fd = DVector::zeros(problem.base_dim());
            let mut perturbed = base.clone();
            for i in 0..problem.base_dim() {
                perturbed[i] = base[i] + STEP;
                let plus = problem.generating_value(&perturbed).unwrap();
                perturbed[i] = base[i] - STEP;
                let minus = problem.generating_value(&perturbed).unwrap();
                perturbed[i] = base[i];
                fd[i] = (plus - minus) / (2.0 * STEP);
            }
            let err = (&point.grad - &fd).norm() / (1.0 + point.grad.norm());
            assert!(err < 1e-6, "relative gradient error {err}");
        }
    }

    #[test]
    fn su2_time_dependent_gradient_matches_finite_differences() {
        // Exercises the per-node matrix-coefficient time factors.
        let module = Arc::new(CliffordModule::build(3, true).unwrap());
        let mut terms: alloc::vec::Vec<TrigTerm> = (0..4)
            .map(|i| {
                let mut nu = vec![0i64; 4];
                nu[i] = 1;
                TrigTerm::cosine(nu, 0.005)
            })
            .collect();
        terms.push(TrigTerm {
            time: crate::hamiltonian::TimeFactor::Su2 {
                k: 1,
                a: 0,
                b: 1,
                part: crate::hamiltonian::ComplexPart::Re,
            },
            nu: vec![1, 0, 0, 0],
            amp: 0.002,
            phase: 0.3,
        });
        let h = TrigHamiltonian::new(4, TimeDomain::Su2, terms).unwrap();
        let problem =
            ReducedProblem::new(module, h, Lattice::identity(4), None, Default::default())
                .unwrap();
        assert_eq!(problem.n_tail(), 2 * problem.n_trunc() + 1);
        let mut rng = ChaCha8Rng::seed_from_u64(39);
        const STEP: f64 = 1e-5;
        let base = random_base(&problem, &mut rng, 0.3);
        let point = problem.reduce(&base).unwrap();
        let mut fd = DVector::zeros(problem.base_dim());
        let mut perturbed = base.clone();
        for i in 0..problem.base_dim() {
            perturbed[i] = base[i] + STEP;
            let plus = problem.generating_value(&perturbed).unwrap();
            perturbed[i] = base[i] - STEP;
            let minus = problem.generating_value(&perturbed).unwrap();
            perturbed[i] = base[i];
            fd[i] = (plus - minus) / (2.0 * STEP);
        }
        let err = (&point.grad - &fd).norm() / (1.0 + point.grad.norm());
        assert!(err < 1e-6, "relative gradient error {err}");
    }

    #[test]
    fn su2_gradient_matches_finite_differences() {
        let problem = su2_problem(0.005);
        assert_eq!(problem.n_trunc(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        const STEP: f64 = 1e-5;
        let base = random_base(&problem, &mut rng, 0.3);
        let point = problem.reduce(&base).unwrap();
        let mut fd = DVector::zeros(problem.base_dim());
        let mut perturbed = base.clone();
        for i in 0..problem.base_dim() {
            perturbed[i] = base[i] + STEP;
            let plus = problem.generating_value(&perturbed).unwrap();
            perturbed[i] = base[i] - STEP;
            let minus = problem.generating_value(&perturbed).unwrap();
            perturbed[i] = base[i];
            fd[i] = (plus - minus) / (2.0 * STEP);
        }
        let err = (&point.grad - &fd).norm() / (1.0 + point.grad.norm());
        assert!(err < 1e-6, "relative gradient error {err}");
    }

    #[test]
    fn hessian_symmetric_and_block_structure_for_zero_h() {
        let module = Arc::new(CliffordModule::build(1, false).unwrap());
        let h = TrigHamiltonian::zero(2, TimeDomain::Torus(1));
        let problem =
            ReducedProblem::new(module, h, Lattice::identity(2), Some(2), Default::default())
                .unwrap();
        let base = DVector::zeros(problem.base_dim());
        let hess = problem.generating_hess(&base).unwrap();
        assert!((&hess - hess.transpose()).abs().max() < 1e-6);
        // W block vanishes; fiber block is the Dirac operator itself.
        let n = problem.w_dim();
        for i in 0..n {
            for j in 0..n {
                assert!(hess[(i, j)].abs() < 1e-8);
            }
        }
        let low = problem.low_of(&base);
        let mut dirac_mat = DMatrix::zeros(low.len(), low.len());
        for col in 0..low.len() {
            let mut e = DVector::zeros(low.len());
            e[col] = 1.0;
            let mut out = DVector::zeros(low.len());
            problem.dirac_low(&e, &mut out);
            dirac_mat.set_column(col, &out);
        }
        let fiber_block = hess.view((n, n), (low.len(), low.len())).into_owned();
        assert!((fiber_block - dirac_mat).abs().max() < 1e-6);
    }

    #[test]
    fn hessian_w_block_near_minus_hess_h() {
        // At a constant critical point with small time-independent H, the
        // W-block of Hess Φ is ≈ −∇²H(w*).
        let problem = torus_problem(0.05, None);
        let mean = DVector::from_column_slice(&[0.0, 0.5]);
        let base = problem.base_from_mean(&mean);
        let hess = problem.generating_hess(&base).unwrap();
        let t = [0.0];
        let h_hess = problem
            .hamiltonian()
            .hess(&TimePoint::Torus(&t[..]), &mean)
            .unwrap();
        let n = problem.w_dim();
        let w_block = hess.view((0, 0), (n, n)).into_owned();
        assert!(
            (&w_block + &h_hess).abs().max() < 1e-4,
            "W block {w_block} vs −∇²H {h_hess}"
        );
    }

    #[test]
    fn action_total_stable_under_quadrature_refinement() {
        let mk = |boost: usize| {
            let module = Arc::new(CliffordModule::build(1, false).unwrap());
            let h = TrigHamiltonian::new(
                2,
                TimeDomain::Torus(1),
                vec![
                    TrigTerm::cosine(vec![1, 0], 0.05),
                    TrigTerm::cosine(vec![0, 1], 0.05),
                ],
            )
            .unwrap();
            ReducedProblem::new(
                module,
                h,
                Lattice::identity(2),
                Some(2),
                ReductionOptions { quadrature_boost: boost, ..Default::default() },
            )
            .unwrap()
        };
        let coarse = mk(1);
        let fine = mk(2);
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        for _ in 0..5 {
            let base = random_base(&coarse, &mut rng, 0.3);
            let v1 = coarse.generating_value(&base).unwrap();
            let v2 = fine.generating_value(&base).unwrap();
            assert!((v1 - v2).abs() < 1e-8, "coarse {v1} vs fine {v2}");
        }
    }

    #[test]
    fn asymptotic_quadraticity_along_rays() {
        let problem = torus_problem(0.05, None);
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..5 {
            let mut dir = DVector::from_fn(problem.base_dim(), |_, _| rng.random::<f64>() - 0.5);
            // Fiber directions only.
            for i in 0..problem.w_dim() {
                dir[i] = 0.0;
            }
            dir /= dir.norm();
            for s in [10.0, 100.0] {
                let base = &dir * s;
                let point = problem.reduce(&base).unwrap();
                let phi0 = problem.quadratic_value(&base);
                let grad0 = problem.quadratic_grad(&base);
                let lhs = (point.phi - phi0).abs() + (&point.grad - &grad0).norm();
                let rhs = grad0.norm();
                assert!(lhs < rhs, "s = {s}: {lhs} !< {rhs}");
            }
        }
    }

    #[test]
    fn embed_base_prefix() {
        let coarse = torus_problem(0.05, Some(2));
        let fine = torus_problem(0.05, Some(4));
        let mut rng = ChaCha8Rng::seed_from_u64(38);
        let base = random_base(&coarse, &mut rng, 0.5);
        let embedded = fine.embed_base(&coarse, &base).unwrap();
        assert_eq!(embedded.len(), fine.base_dim());
        // Mean and shared modes agree; the rest is zero.
        assert_eq!(embedded.rows(0, coarse.base_dim()), base.rows(0, coarse.base_dim()));
        assert_eq!(embedded.rows(coarse.base_dim(), embedded.len() - coarse.base_dim()).norm(), 0.0);
        // Φ barely moves under embedding of a reduced point (tail bound).
        let phi_coarse = coarse.generating_value(&base).unwrap();
        let phi_fine = fine.generating_value(&embedded).unwrap();
        assert!((phi_coarse - phi_fine).abs() < 1e-3);
    }
}
