//! Peter–Weyl harmonic analysis on SU(2) and the exact block action of
//! `∂̸ = J₁L_{v₁} + J₂L_{v₂} + J₃L_{v₃}` on a hyperkähler module.
//!
//! SU(2) is the group of unit quaternions; `v₁, v₂, v₃` are the
//! right-invariant vector fields generated by left multiplication with the
//! imaginary units. The irreducible representation `P_k` acts on homogeneous
//! polynomials of degree `k` in `z₁, z₂` via `x·p = p ∘ x⁻¹`, with monomial
//! basis `e_a = z₁ᵃ z₂^{k−a}` and invariant Hermitian product
//! `‖e_a‖² = a!(k−a)!`, antilinear in the *first* slot. The normalized
//! matrix coefficients
//!
//! ```text
//! û_{a,b}(x) = ⟨x·e_a, e_b⟩ / (‖e_a‖‖e_b‖),    û_{a,b}(e) = δ_{ab},
//! ```
//!
//! satisfy the ladder identities (with `A_b = √((b+1)(k−b))`,
//! `B_b = √(b(k−b+1))`):
//!
//! ```text
//! L_{v₁} û_{a,b} =  i A_b û_{a,b+1} + i B_b û_{a,b−1}
//! L_{v₂} û_{a,b} =    A_b û_{a,b+1} −   B_b û_{a,b−1}
//! L_{v₃} û_{a,b} = −i (k−2b) û_{a,b}
//! ```
//!
//! and the conjugation rule `conj(û_{a,b}) = (−1)^{a+b} û_{k−a,k−b}`. On
//! V-valued fields, with the scalar `i` realized as `J₃`, the quaternionic
//! relations collapse the three terms to
//!
//! ```text
//! ∂̸(û_{a,b} w) = (k−2b) û_{a,b} w + (−1)^{a+b} 2B_b û_{k−a,k−b+1} J₂ w,
//! ```
//!
//! so each level `F_k` splits into the scalar piece `k·I` (b = 0) and 2×2
//! blocks with spectrum `{k, −(k+2)}`. The antilinear-first convention is
//! fixed once here and pinned by the finite-difference oracle tests; the
//! opposite slot choice flips the signs of the `L_{v₁}`, `L_{v₃}` formulas
//! and the whole spectrum.
//!
//! Field coefficients are stored with respect to the L²-orthonormal family
//! `√(k+1)·û_{a,b}`, so coefficient Euclidean norms equal L² norms.

use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, DVector};
#[allow(unused_imports)] // float intrinsics in no_std builds
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clifford::{quat_mul, CliffordModule};
use crate::error::CoreError;
use crate::Result;

/// A point of SU(2) stored as a unit quaternion `(w, x, y, z)`.
///
/// The matrix realization is `[[α, −β̄], [β, ᾱ]]` with `α = w + iz`,
/// `β = y + ix`; the basis fields `v₁, v₂, v₃` at the identity are left
/// multiplication by the imaginary units `i, j, k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Su2Point {
    q: [f64; 4],
}

impl Su2Point {
    pub const UNIT_TOL: f64 = 1e-12;

    /// Wrap a quaternion that is already unit length to `1e-12`.
    pub fn new(q: [f64; 4]) -> Result<Self> {
        let norm = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
        if (norm - 1.0).abs() > Self::UNIT_TOL {
            return Err(CoreError::InvalidRequest(alloc::format!(
                "quaternion norm {norm} is not 1"
            )));
        }
        Ok(Self { q })
    }

    /// Normalize an arbitrary non-zero quaternion onto SU(2).
    pub fn from_unnormalized(q: [f64; 4]) -> Result<Self> {
        let norm = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
        if norm < 1e-14 {
            return Err(CoreError::InvalidRequest("cannot normalize zero quaternion".into()));
        }
        Ok(Self { q: [q[0] / norm, q[1] / norm, q[2] / norm, q[3] / norm] })
    }

    pub fn identity() -> Self {
        Self { q: [1.0, 0.0, 0.0, 0.0] }
    }

    pub fn components(&self) -> [f64; 4] {
        self.q
    }

    /// Group product (quaternion multiplication).
    pub fn mul(&self, other: &Su2Point) -> Su2Point {
        Su2Point { q: quat_mul(&self.q, &other.q) }
    }

    pub fn inverse(&self) -> Su2Point {
        Su2Point { q: [self.q[0], -self.q[1], -self.q[2], -self.q[3]] }
    }

    /// `exp(s·v_l(e))`: rotation by `s` in the 1–e_l plane, `l ∈ {1,2,3}`.
    pub fn exp_basis(l: usize, s: f64) -> Su2Point {
        assert!((1..=3).contains(&l), "l must be 1, 2 or 3");
        let mut q = [s.cos(), 0.0, 0.0, 0.0];
        q[l] = s.sin();
        Su2Point { q }
    }

    /// Upper-left matrix entry `α = w + iz`.
    pub fn alpha(&self) -> Complex<f64> {
        Complex::new(self.q[0], self.q[3])
    }

    /// Lower-left matrix entry `β = y + ix`.
    pub fn beta(&self) -> Complex<f64> {
        Complex::new(self.q[2], self.q[1])
    }

    /// Haar-uniform sample (normalized Gaussian 4-vector).
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Su2Point {
        loop {
            let mut q = [0.0; 4];
            for pair in 0..2 {
                let u1: f64 = rng.random();
                let u2: f64 = rng.random();
                let r = (-2.0 * (u1.max(1e-300)).ln()).sqrt();
                let angle = 2.0 * core::f64::consts::PI * u2;
                q[2 * pair] = r * angle.cos();
                q[2 * pair + 1] = r * angle.sin();
            }
            if let Ok(p) = Su2Point::from_unnormalized(q) {
                return p;
            }
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut num = 1.0;
    let mut den = 1.0;
    for i in 0..k {
        num *= (n - i) as f64;
        den *= (i + 1) as f64;
    }
    num / den
}

/// Normalized matrix coefficient `û^{(k)}_{a,b}(x)`, with `û(e) = δ_{ab}`.
///
/// On the diagonal torus `x = diag(e^{iθ}, e^{−iθ})` this evaluates to
/// `δ_{ab}·e^{−i(k−2a)θ}` (the antilinear-first slot convention).
pub fn matrix_coeff(k: usize, a: usize, b: usize, x: &Su2Point) -> Result<Complex<f64>> {
    if a > k || b > k {
        return Err(CoreError::IndexOutOfRange { k, a, b });
    }
    let alpha = x.alpha();
    let beta = x.beta();
    // x·e_a = e_a ∘ x⁻¹ expanded over the monomial basis:
    // c_b = Σ_c C(a,c) C(k−a,b−c) ᾱᶜ β̄^{a−c} (−β)^{b−c} α^{k−a−b+c}.
    let mut c_b = Complex::new(0.0, 0.0);
    let lo = b.saturating_sub(k - a);
    let hi = a.min(b);
    for c in lo..=hi {
        let d = b - c;
        let coeff = binomial(a, c) * binomial(k - a, d);
        let term = alpha.conj().powu(c as u32)
            * beta.conj().powu((a - c) as u32)
            * (-beta).powu(d as u32)
            * alpha.powu((k - a - d) as u32);
        c_b += term * coeff;
    }
    let scale = (factorial(b) * factorial(k - b) / (factorial(a) * factorial(k - a))).sqrt();
    Ok(c_b.conj() * scale)
}

/// Handle for one scalar function `√(k+1)·û^{(k)}_{a,b}` of the
/// L²-orthonormal Peter–Weyl family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScalarMode {
    pub k: usize,
    pub a: usize,
    pub b: usize,
}

impl ScalarMode {
    /// Evaluate `√(k+1)·û_{a,b}(x)`.
    pub fn eval(&self, x: &Su2Point) -> Complex<f64> {
        matrix_coeff(self.k, self.a, self.b, x).expect("indices validated at construction")
            * ((self.k + 1) as f64).sqrt()
    }
}

/// The `(k+1)²` orthonormal scalar functions spanning level `k`.
pub fn schur_orthonormal_basis(k: usize) -> Vec<ScalarMode> {
    let mut out = Vec::with_capacity((k + 1) * (k + 1));
    for a in 0..=k {
        for b in 0..=k {
            out.push(ScalarMode { k, a, b });
        }
    }
    out
}

/// Central finite difference of `s ↦ û_{a,b}(exp(s·v_l(e))·x)` at `s = 0`.
///
/// Ground truth for the Dirac ladder formulas; step 1e-6.
pub fn lie_derivative_oracle(
    l: usize,
    k: usize,
    a: usize,
    b: usize,
    x: &Su2Point,
) -> Result<Complex<f64>> {
    const STEP: f64 = 1e-6;
    let plus = Su2Point::exp_basis(l, STEP).mul(x);
    let minus = Su2Point::exp_basis(l, -STEP).mul(x);
    Ok((matrix_coeff(k, a, b, &plus)? - matrix_coeff(k, a, b, &minus)?) / (2.0 * STEP))
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

/// Gauss–Legendre nodes and weights on [−1, 1] (Newton on P_n).
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev-like initial guess.
        let mut x = (core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Evaluate P_n and P_n' by the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for m in 2..=n {
                let m = m as f64;
                let p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let mut p0 = 1.0;
        let mut p1 = x;
        for m in 2..=n {
            let m = m as f64;
            let p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// Product quadrature on SU(2), exact for band-limited integrands.
///
/// Parametrize `α = cos(θ/2)e^{iu}`, `β = sin(θ/2)e^{iv}`; Haar measure is
/// `(1/2)sinθ dθ · du/2π · dv/2π`. Matrix coefficients of level `k` have
/// integer frequencies `≤ k` in `u` and `v` and, after phase matching, are
/// polynomials of degree `≤ k` in `cosθ`, so uniform×uniform×Gauss–Legendre
/// with `n_u, n_v ≥ band+1` and `2n_θ − 1 ≥ band` integrates every product
/// of total band ≤ `band` exactly.
#[derive(Debug, Clone)]
pub struct Su2Quadrature {
    nodes: Vec<Su2Point>,
    weights: Vec<f64>,
    band: usize,
}

impl Su2Quadrature {
    /// Rule exact for integrands of total band at most `band`.
    pub fn for_band(band: usize) -> Self {
        let n_circle = band + 1;
        let n_theta = band / 2 + 1;
        let (gl_nodes, gl_weights) = gauss_legendre(n_theta);
        let mut nodes = Vec::with_capacity(n_circle * n_circle * n_theta);
        let mut weights = Vec::with_capacity(n_circle * n_circle * n_theta);
        let two_pi = 2.0 * core::f64::consts::PI;
        for (ti, &t) in gl_nodes.iter().enumerate() {
            // t = cosθ; half-angle factors.
            let ch = ((1.0 + t) / 2.0).sqrt();
            let sh = ((1.0 - t) / 2.0).sqrt();
            let w_theta = gl_weights[ti] / 2.0;
            for iu in 0..n_circle {
                let u = two_pi * iu as f64 / n_circle as f64;
                for iv in 0..n_circle {
                    let v = two_pi * iv as f64 / n_circle as f64;
                    // α = ch·e^{iu}, β = sh·e^{iv}.
                    let q = [ch * u.cos(), sh * v.sin(), sh * v.cos(), ch * u.sin()];
                    nodes.push(Su2Point { q });
                    weights.push(w_theta / (n_circle * n_circle) as f64);
                }
            }
        }
        Self { nodes, weights, band }
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Su2Point] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Haar integral of a scalar function.
    pub fn integrate<F: FnMut(&Su2Point) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, &w)| w * f(x)).sum()
    }

    /// Haar integral of a complex scalar function.
    pub fn integrate_complex<F: FnMut(&Su2Point) -> Complex<f64>>(
        &self,
        mut f: F,
    ) -> Complex<f64> {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, &w)| f(x) * w)
            .fold(Complex::new(0.0, 0.0), |acc, z| acc + z)
    }
}

// ---------------------------------------------------------------------------
// Mode sets and fields
// ---------------------------------------------------------------------------

/// Coefficient index set: all `(k, a, b)` with `k_lo ≤ k < k_hi`,
/// `0 ≤ a, b ≤ k`, ordered by `(k, a, b)`. Levels `k < N` therefore form a
/// prefix of any band reaching below `N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Su2ModeSet {
    k_lo: usize,
    k_hi: usize,
    entries: Vec<ScalarMode>,
}

impl Su2ModeSet {
    /// Modes with `k_lo ≤ k < k_hi`; `k_lo ≥ 1` (the mean is kept apart).
    pub fn band(k_lo: usize, k_hi: usize) -> Self {
        assert!(k_lo >= 1, "level 0 is the mean, not a mode");
        assert!(k_hi >= k_lo);
        let mut entries = Vec::new();
        for k in k_lo..k_hi {
            entries.extend(schur_orthonormal_basis(k));
        }
        Self { k_lo, k_hi, entries }
    }

    pub fn k_lo(&self) -> usize {
        self.k_lo
    }

    pub fn k_hi(&self) -> usize {
        self.k_hi
    }

    pub fn entries(&self) -> &[ScalarMode] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Position of `(k, a, b)` in the ordering.
    pub fn index(&self, k: usize, a: usize, b: usize) -> Option<usize> {
        if k < self.k_lo || k >= self.k_hi || a > k || b > k {
            return None;
        }
        let offset: usize = (self.k_lo..k).map(|j| (j + 1) * (j + 1)).sum();
        Some(offset + a * (k + 1) + b)
    }

    /// Number of scalar entries in levels `k_lo..n` (a prefix length).
    pub fn prefix_len(&self, n: usize) -> usize {
        (self.k_lo..n.min(self.k_hi)).map(|j| (j + 1) * (j + 1)).sum()
    }
}

/// Truncated Peter–Weyl representation of a map `SU(2) → W`.
///
/// `coeffs` holds one V-vector per scalar mode, laid out entry-major, with
/// respect to the orthonormal family `√(k+1)û_{a,b}`; the Euclidean norm of
/// the coefficient vector equals the L² norm of the zero-mean part.
#[derive(Debug, Clone, PartialEq)]
pub struct Su2Field {
    module: Arc<CliffordModule>,
    modes: Arc<Su2ModeSet>,
    mean: DVector<f64>,
    coeffs: DVector<f64>,
}

impl Su2Field {
    pub fn zeros(module: Arc<CliffordModule>, modes: Arc<Su2ModeSet>) -> Result<Self> {
        if !module.is_hyperkahler() {
            return Err(CoreError::NotHyperkahler);
        }
        let n = module.dim();
        let len = modes.len() * n;
        Ok(Self { module, modes, mean: DVector::zeros(n), coeffs: DVector::zeros(len) })
    }

    pub fn from_parts(
        module: Arc<CliffordModule>,
        modes: Arc<Su2ModeSet>,
        mean: DVector<f64>,
        coeffs: DVector<f64>,
    ) -> Result<Self> {
        if !module.is_hyperkahler() {
            return Err(CoreError::NotHyperkahler);
        }
        if mean.len() != module.dim() || coeffs.len() != modes.len() * module.dim() {
            return Err(CoreError::ShapeMismatch);
        }
        Ok(Self { module, modes, mean, coeffs })
    }

    pub fn module(&self) -> &Arc<CliffordModule> {
        &self.module
    }

    pub fn modes(&self) -> &Arc<Su2ModeSet> {
        &self.modes
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn coeffs(&self) -> &DVector<f64> {
        &self.coeffs
    }

    pub fn mean_mut(&mut self) -> &mut DVector<f64> {
        &mut self.mean
    }

    pub fn coeffs_mut(&mut self) -> &mut DVector<f64> {
        &mut self.coeffs
    }

    /// Coefficient of entry `idx` as a vector slice.
    pub fn coeff(&self, idx: usize) -> &[f64] {
        let n = self.module.dim();
        &self.coeffs.as_slice()[idx * n..(idx + 1) * n]
    }

    /// L² norm of the whole field, mean included as a tangent offset.
    pub fn l2_norm(&self) -> f64 {
        (self.mean.norm_squared() + self.coeffs.norm_squared()).sqrt()
    }

    /// L² norm of the zero-mean (fiber) part.
    pub fn fiber_norm(&self) -> f64 {
        self.coeffs.norm()
    }

    /// Evaluate the field at a point (mean plus realized modes).
    pub fn eval(&self, x: &Su2Point) -> DVector<f64> {
        let j3 = self.module.structure(3);
        let mut out = self.mean.clone();
        for (idx, mode) in self.modes.entries().iter().enumerate() {
            let u = mode.eval(x);
            let c = DVector::from_column_slice(self.coeff(idx));
            out += &c * u.re + j3 * &c * u.im;
        }
        out
    }
}

/// Ladder factor `2√(b(k−b+1))` and the sign `(−1)^{a+b+1}` of the coupling
/// into entry `(a, b)` from its partner `(k−a, k−b+1)`.
fn coupling(k: usize, a: usize, b: usize) -> (f64, f64) {
    let ladder = 2.0 * ((b * (k - b + 1)) as f64).sqrt();
    let sign = if (a + b) % 2 == 0 { -1.0 } else { 1.0 };
    (ladder, sign)
}

/// Apply `∂̸` levelwise: preserves each `F_k`, kills the mean.
pub fn dirac_apply_su2(field: &Su2Field) -> Su2Field {
    let module = field.module();
    let n = module.dim();
    let j2 = module.structure(2);
    let modes = field.modes();
    let mut out = Su2Field::zeros(module.clone(), modes.clone()).expect("module checked");
    for (idx, mode) in modes.entries().iter().enumerate() {
        let (k, a, b) = (mode.k, mode.a, mode.b);
        let diag = (k as f64) - 2.0 * b as f64;
        let c = DVector::from_column_slice(field.coeff(idx));
        let mut value = &c * diag;
        if b >= 1 {
            let partner = modes.index(k, k - a, k - b + 1).expect("partner in band");
            let (ladder, sign) = coupling(k, a, b);
            let pc = DVector::from_column_slice(field.coeff(partner));
            value += j2 * pc * (sign * ladder);
        }
        out.coeffs_mut().as_mut_slice()[idx * n..(idx + 1) * n].copy_from_slice(value.as_slice());
    }
    out
}

/// Invert `∂̸` on a tail field (all levels ≥ `n_trunc` ≥ 1).
///
/// Per level the inverse has eigenvalues `1/k` and `−1/(k+2)`, so the
/// output L² norm is at most `1/n_trunc` times the input norm.
pub fn dirac_inverse_tail_su2(field: &Su2Field, n_trunc: usize) -> Result<Su2Field> {
    let modes = field.modes();
    if modes.k_lo() < n_trunc.max(1) {
        return Err(CoreError::FrequencyBelowCutoff);
    }
    let module = field.module();
    let n = module.dim();
    let j2 = module.structure(2);
    let mut out = Su2Field::zeros(module.clone(), modes.clone())?;
    for (idx, mode) in modes.entries().iter().enumerate() {
        let (k, a, b) = (mode.k, mode.a, mode.b);
        if b == 0 {
            // Scalar block k·I.
            let c = DVector::from_column_slice(field.coeff(idx)) / (k as f64);
            out.coeffs_mut().as_mut_slice()[idx * n..(idx + 1) * n]
                .copy_from_slice(c.as_slice());
            continue;
        }
        // Solve the 2×2-of-V system for the pair {(a,b), (k−a, k−b+1)}:
        //   g₁ = d₁ c₁ + s·2B J₂ c₂
        //   g₂ = d₂ c₂ − s·2B J₂ c₁
        // ⇒ c₁ = (d₂ g₁ − s·2B J₂ g₂)/det, det = d₁d₂ − 4B² = −k(k+2).
        let partner = modes.index(k, k - a, k - b + 1).expect("partner in band");
        let d2 = 2.0 * b as f64 - k as f64 - 2.0;
        let (ladder, sign) = coupling(k, a, b);
        let d1 = (k as f64) - 2.0 * b as f64;
        let det = d1 * d2 - ladder * ladder;
        debug_assert!((det + (k * (k + 2)) as f64).abs() < 1e-9);
        let g1 = DVector::from_column_slice(field.coeff(idx));
        let g2 = DVector::from_column_slice(field.coeff(partner));
        let c1 = (&g1 * d2 - j2 * g2 * (sign * ladder)) / det;
        out.coeffs_mut().as_mut_slice()[idx * n..(idx + 1) * n].copy_from_slice(c1.as_slice());
    }
    Ok(out)
}

/// The full matrix of `∂̸` on level `k` in the orthonormal coefficient
/// basis (dimension `(k+1)²·n`). Symmetric; spectrum `{k, −(k+2)}`.
pub fn dirac_level_matrix(module: &Arc<CliffordModule>, k: usize) -> DMatrix<f64> {
    let modes = Arc::new(Su2ModeSet::band(k, k + 1));
    let n = module.dim();
    let dim = modes.len() * n;
    let mut out = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut field = Su2Field::zeros(module.clone(), modes.clone()).expect("hyperkahler");
        field.coeffs_mut()[col] = 1.0;
        let image = dirac_apply_su2(&field);
        out.set_column(col, image.coeffs());
    }
    out
}

/// Synthesized values of the field at the quadrature nodes, flattened
/// node-major (`len = nodes·n`).
pub fn haar_synthesize(field: &Su2Field, quad: &Su2Quadrature) -> DVector<f64> {
    let n = field.module().dim();
    let j3 = field.module().structure(3);
    let mut out = DVector::zeros(quad.len() * n);
    for (p, x) in quad.nodes().iter().enumerate() {
        let mut val = field.mean().clone();
        for (idx, mode) in field.modes().entries().iter().enumerate() {
            let u = mode.eval(x);
            let c = DVector::from_column_slice(field.coeff(idx));
            val += &c * u.re + j3 * &c * u.im;
        }
        out.as_mut_slice()[p * n..(p + 1) * n].copy_from_slice(val.as_slice());
    }
    out
}

/// Result of projecting node values onto a mode band.
#[derive(Debug, Clone)]
pub struct Su2Analysis {
    pub mean: DVector<f64>,
    pub coeffs: DVector<f64>,
    /// L² norm of the part of the signal outside the analyzed band
    /// (from quadrature Parseval; zero for band-limited input).
    pub discarded: f64,
}

/// Project node values onto the band `modes`, returning the mean, the
/// orthonormal coefficients and the norm of the discarded remainder.
///
/// Errors if the quadrature cannot integrate products of two band-limited
/// functions of the requested band exactly.
pub fn haar_analyze(
    module: &Arc<CliffordModule>,
    modes: &Arc<Su2ModeSet>,
    quad: &Su2Quadrature,
    values: &DVector<f64>,
) -> Result<Su2Analysis> {
    let n = module.dim();
    if values.len() != quad.len() * n {
        return Err(CoreError::ShapeMismatch);
    }
    let needed = 2 * modes.k_hi().saturating_sub(1);
    if quad.band() < needed {
        return Err(CoreError::QuadratureInsufficient { band: needed, supported: quad.band() });
    }
    let j3 = module.structure(3);
    let mut mean = DVector::zeros(n);
    let mut total_sq = 0.0;
    for (p, &w) in quad.weights().iter().enumerate() {
        let v = DVector::from_column_slice(&values.as_slice()[p * n..(p + 1) * n]);
        total_sq += w * v.norm_squared();
        mean += v * w;
    }
    let mut coeffs = DVector::zeros(modes.len() * n);
    for (idx, mode) in modes.entries().iter().enumerate() {
        let mut c = DVector::zeros(n);
        for (p, x) in quad.nodes().iter().enumerate() {
            let u = mode.eval(x);
            let w = quad.weights()[p];
            let v = DVector::from_column_slice(&values.as_slice()[p * n..(p + 1) * n]);
            // ⟨f, (√(k+1)û)e_i⟩ accumulates with the conjugate scalar action.
            c += (&v * u.re - j3 * &v * u.im) * w;
        }
        coeffs.as_mut_slice()[idx * n..(idx + 1) * n].copy_from_slice(c.as_slice());
    }
    let captured = mean.norm_squared() + coeffs.norm_squared();
    let discarded = (total_sq - captured).max(0.0).sqrt();
    Ok(Su2Analysis { mean, coeffs, discarded })
}
