//! Fourier representation of maps `Tʳ → W` and the block action of
//! `∂̸ = Σ J_l ∂/∂t_l`.
//!
//! Fields expand as `f(t) = Σ_k exp(2π k·t J) f̂_k` with `J = J_r` and
//! `f̂_k ∈ V`; the modes `exp(2π k·t J)v` are pointwise rotations and form
//! an L²-orthonormal family, so coefficient Euclidean norms are L² norms.
//! Grouping `k` with `−k` block-diagonalizes `∂̸`: on the pair space
//! (first slot `−k`, second `+k`)
//!
//! ```text
//! A_{k*} = 2π [ k_r I            −J Σ_{l<r} k_l J_l ]
//!             [ J Σ_{l<r} k_l J_l        −k_r I     ]
//! ```
//!
//! with `A² = 4π²‖k‖²·I`, `A⁻¹ = A/(4π²‖k‖²)` and `‖A⁻¹‖ = 1/(2π‖k‖)`.
//! Coefficients are stored per individual `k` (both signs); blocks are
//! materialized only when assembled explicitly.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // float intrinsics in no_std builds
use num_traits::Float;

use crate::clifford::CliffordModule;
use crate::error::CoreError;
use crate::Result;

const TWO_PI: f64 = core::f64::consts::TAU;

/// Whether the first non-zero component of `k` is positive (the canonical
/// representative of the pair `k* = (−k, k)`).
pub fn is_canonical(k: &[i64]) -> bool {
    for &c in k {
        if c != 0 {
            return c > 0;
        }
    }
    false
}

fn norm_sq(k: &[i64]) -> i64 {
    k.iter().map(|&c| c * c).sum()
}

/// Integer frequencies `k ≠ 0` with `lo ≤ ‖k‖ < hi`, ordered by
/// `(‖k‖², lex)` so that any smaller ball is a prefix. Stores the position
/// of `−k` for every mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TorusModeSet {
    r: usize,
    lo: usize,
    hi: usize,
    modes: Vec<Vec<i64>>,
    partner: Vec<usize>,
}

impl TorusModeSet {
    /// The ball `0 < ‖k‖ < n` (the degree-`n` truncation).
    pub fn ball(r: usize, n: usize) -> Self {
        Self::band(r, 1, n)
    }

    /// The band `lo ≤ ‖k‖ < hi`, `lo ≥ 1`.
    pub fn band(r: usize, lo: usize, hi: usize) -> Self {
        assert!(r >= 1);
        assert!(lo >= 1 && hi >= lo);
        let lo_sq = (lo * lo) as i64;
        let hi_sq = (hi * hi) as i64;
        let bound = hi as i64 - 1;
        let mut modes = Vec::new();
        let mut cursor = alloc::vec![-bound; r];
        if hi > lo {
            loop {
                let nsq = norm_sq(&cursor);
                if nsq >= lo_sq && nsq < hi_sq {
                    modes.push(cursor.clone());
                }
                // Odometer over the cube [−(hi−1), hi−1]^r.
                let mut axis = r;
                loop {
                    if axis == 0 {
                        break;
                    }
                    axis -= 1;
                    cursor[axis] += 1;
                    if cursor[axis] <= bound {
                        break;
                    }
                    cursor[axis] = -bound;
                    if axis == 0 {
                        break;
                    }
                }
                if cursor.iter().all(|&c| c == -bound) {
                    break;
                }
            }
        }
        modes.sort_by(|a, b| norm_sq(a).cmp(&norm_sq(b)).then_with(|| a.cmp(b)));
        let index: BTreeMap<Vec<i64>, usize> =
            modes.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        let partner = modes
            .iter()
            .map(|k| {
                let neg: Vec<i64> = k.iter().map(|&c| -c).collect();
                index[&neg]
            })
            .collect();
        Self { r, lo, hi, modes, partner }
    }

    pub fn time_dim(&self) -> usize {
        self.r
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Vec<i64>] {
        &self.modes
    }

    /// Index of `−k` for the mode at `idx`.
    pub fn partner(&self, idx: usize) -> usize {
        self.partner[idx]
    }

    pub fn index(&self, k: &[i64]) -> Option<usize> {
        self.modes.iter().position(|m| m.as_slice() == k)
    }

    /// Number of modes with `‖k‖ < n` (a prefix of the ordering).
    pub fn prefix_len(&self, n: usize) -> usize {
        let n_sq = (n * n) as i64;
        self.modes.iter().take_while(|k| norm_sq(k) < n_sq).count()
    }

    /// Canonical representatives (first non-zero component positive).
    pub fn canonical_modes(&self) -> impl Iterator<Item = &Vec<i64>> {
        self.modes.iter().filter(|k| is_canonical(k))
    }
}

/// Truncated Fourier representation of a map `Tʳ → W`.
///
/// Coefficients are stored entry-major (`modes.len()·n` reals); operations
/// return new fields.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusField {
    module: Arc<CliffordModule>,
    modes: Arc<TorusModeSet>,
    mean: DVector<f64>,
    coeffs: DVector<f64>,
}

impl TorusField {
    pub fn zeros(module: Arc<CliffordModule>, modes: Arc<TorusModeSet>) -> Self {
        let n = module.dim();
        let len = modes.len() * n;
        Self { module, modes, mean: DVector::zeros(n), coeffs: DVector::zeros(len) }
    }

    pub fn from_parts(
        module: Arc<CliffordModule>,
        modes: Arc<TorusModeSet>,
        mean: DVector<f64>,
        coeffs: DVector<f64>,
    ) -> Result<Self> {
        if mean.len() != module.dim() || coeffs.len() != modes.len() * module.dim() {
            return Err(CoreError::ShapeMismatch);
        }
        Ok(Self { module, modes, mean, coeffs })
    }

    pub fn module(&self) -> &Arc<CliffordModule> {
        &self.module
    }

    pub fn modes(&self) -> &Arc<TorusModeSet> {
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

    pub fn coeff(&self, idx: usize) -> &[f64] {
        let n = self.module.dim();
        &self.coeffs.as_slice()[idx * n..(idx + 1) * n]
    }

    /// L² norm with the mean as a tangent offset.
    pub fn l2_norm(&self) -> f64 {
        (self.mean.norm_squared() + self.coeffs.norm_squared()).sqrt()
    }

    pub fn fiber_norm(&self) -> f64 {
        self.coeffs.norm()
    }

    /// Evaluate at a time point (arbitrary, not restricted to a grid).
    pub fn eval(&self, t: &[f64]) -> Result<DVector<f64>> {
        if t.len() != self.modes.time_dim() {
            return Err(CoreError::DimensionMismatch {
                expected: self.modes.time_dim(),
                got: t.len(),
            });
        }
        let j = self.module.structure(self.module.rank());
        let mut out = self.mean.clone();
        for (idx, k) in self.modes.modes().iter().enumerate() {
            let theta = TWO_PI * dot_it(k, t);
            let c = DVector::from_column_slice(self.coeff(idx));
            out += &c * theta.cos() + j * &c * theta.sin();
        }
        Ok(out)
    }
}

fn dot_it(k: &[i64], t: &[f64]) -> f64 {
    k.iter().zip(t).map(|(&ki, &ti)| ki as f64 * ti).sum()
}

/// `K_m = Σ_{l<r} m_l J_l` (empty sum when r = 1).
fn anti_diag_part(module: &CliffordModule, k: &[i64]) -> DMatrix<f64> {
    let n = module.dim();
    let mut out = DMatrix::zeros(n, n);
    for l in 0..k.len().saturating_sub(1) {
        if k[l] != 0 {
            out += module.structure(l + 1) * k[l] as f64;
        }
    }
    out
}

/// The block `A_{k*}` of `∂̸` on the pair space `F_{k*} = V ⊕ V` (first
/// slot `−k`, second `+k`), for canonical `k`.
pub fn dirac_block(module: &CliffordModule, k: &[i64]) -> Result<DMatrix<f64>> {
    if k.len() != module.rank() {
        return Err(CoreError::DimensionMismatch { expected: module.rank(), got: k.len() });
    }
    if k.iter().all(|&c| c == 0) {
        return Err(CoreError::ZeroFrequency);
    }
    if !is_canonical(k) {
        return Err(CoreError::InvalidRequest(
            "pair representative must have positive leading component".into(),
        ));
    }
    let n = module.dim();
    let j = module.structure(module.rank());
    let jk = j * anti_diag_part(module, k);
    let k_r = k[k.len() - 1] as f64;
    let mut block = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        block[(i, i)] = k_r;
        block[(n + i, n + i)] = -k_r;
        for m in 0..n {
            block[(i, n + m)] = -jk[(i, m)];
            block[(n + i, m)] = jk[(i, m)];
        }
    }
    Ok(block * TWO_PI)
}

/// `A_{k*}⁻¹ = A_{k*}/(4π²‖k‖²)`; spectral norm `1/(2π‖k‖)`.
pub fn dirac_block_inverse(module: &CliffordModule, k: &[i64]) -> Result<DMatrix<f64>> {
    let block = dirac_block(module, k)?;
    let nsq = norm_sq(k) as f64;
    Ok(block / (4.0 * core::f64::consts::PI * core::f64::consts::PI * nsq))
}

/// Apply `∂̸` coefficientwise:
/// `(∂̸f)̂_m = 2π (J K_m f̂_{−m} − m_r f̂_m)`. Kills the mean.
pub fn dirac_apply(field: &TorusField) -> TorusField {
    let module = field.module();
    let modes = field.modes();
    let n = module.dim();
    let j = module.structure(module.rank());
    let mut out = TorusField::zeros(module.clone(), modes.clone());
    for (idx, k) in modes.modes().iter().enumerate() {
        let m_r = k[k.len() - 1] as f64;
        let own = DVector::from_column_slice(field.coeff(idx));
        let partner = DVector::from_column_slice(field.coeff(modes.partner(idx)));
        let mut value = &own * (-m_r);
        if k.len() > 1 {
            value += j * (anti_diag_part(module, k) * partner);
        }
        value *= TWO_PI;
        out.coeffs_mut().as_mut_slice()[idx * n..(idx + 1) * n].copy_from_slice(value.as_slice());
    }
    out
}

/// Invert `∂̸` on a tail field (all modes `‖k‖ ≥ n_trunc`):
/// `f̂_m = (J K_m ĝ_{−m} − m_r ĝ_m)/(2π‖m‖²)`. Output norm is at most
/// `1/(2π·n_trunc)` times the input norm.
pub fn dirac_inverse_tail(field: &TorusField, n_trunc: usize) -> Result<TorusField> {
    let modes = field.modes();
    if modes.lo() < n_trunc.max(1) {
        return Err(CoreError::FrequencyBelowCutoff);
    }
    let module = field.module();
    let n = module.dim();
    let j = module.structure(module.rank());
    let mut out = TorusField::zeros(module.clone(), modes.clone());
    for (idx, k) in modes.modes().iter().enumerate() {
        let m_r = k[k.len() - 1] as f64;
        let own = DVector::from_column_slice(field.coeff(idx));
        let partner = DVector::from_column_slice(field.coeff(modes.partner(idx)));
        let mut value = &own * (-m_r);
        if k.len() > 1 {
            value += j * (anti_diag_part(module, k) * partner);
        }
        value /= TWO_PI * norm_sq(k) as f64;
        out.coeffs_mut().as_mut_slice()[idx * n..(idx + 1) * n].copy_from_slice(value.as_slice());
    }
    Ok(out)
}

/// L² inner product of two fields over the same module and mode set; means
/// are compared as tangent offsets from a common base point.
pub fn l2_inner(a: &TorusField, b: &TorusField) -> Result<f64> {
    if a.module() != b.module() || a.modes() != b.modes() {
        return Err(CoreError::ShapeMismatch);
    }
    Ok(a.mean().dot(b.mean()) + a.coeffs().dot(b.coeffs()))
}

/// Uniform grid points of `[0,1)ʳ` with `g` points per axis, row-major
/// (axis 0 slowest).
pub fn grid_points(r: usize, g: usize) -> Vec<Vec<f64>> {
    let total = g.pow(r as u32);
    let mut out = Vec::with_capacity(total);
    for p in 0..total {
        let mut t = alloc::vec![0.0; r];
        let mut rem = p;
        for axis in (0..r).rev() {
            t[axis] = (rem % g) as f64 / g as f64;
            rem /= g;
        }
        out.push(t);
    }
    out
}

/// Sample the field on the uniform `gʳ` grid (point-major layout).
pub fn synthesize(field: &TorusField, g: usize) -> DVector<f64> {
    let n = field.module().dim();
    let r = field.modes().time_dim();
    let j = field.module().structure(field.module().rank());
    let points = grid_points(r, g);
    let mut out = DVector::zeros(points.len() * n);
    for (p, t) in points.iter().enumerate() {
        let mut val = field.mean().clone();
        for (idx, k) in field.modes().modes().iter().enumerate() {
            let theta = TWO_PI * dot_it(k, t);
            let c = DVector::from_column_slice(field.coeff(idx));
            val += &c * theta.cos() + j * &c * theta.sin();
        }
        out.as_mut_slice()[p * n..(p + 1) * n].copy_from_slice(val.as_slice());
    }
    out
}

/// Result of projecting grid values onto a mode band.
#[derive(Debug, Clone)]
pub struct TorusAnalysis {
    pub mean: DVector<f64>,
    pub coeffs: DVector<f64>,
    /// Norm of the grid signal outside the analyzed band (aliasing included).
    pub discarded: f64,
}

/// Project grid values onto `modes`. Exact for band-limited input when
/// `g ≥ 2·hi − 1`; errors below that threshold.
pub fn analyze(
    module: &Arc<CliffordModule>,
    modes: &Arc<TorusModeSet>,
    g: usize,
    values: &DVector<f64>,
) -> Result<TorusAnalysis> {
    let n = module.dim();
    let r = modes.time_dim();
    let points = grid_points(r, g);
    if values.len() != points.len() * n {
        return Err(CoreError::ShapeMismatch);
    }
    let required = 2 * modes.hi().saturating_sub(1) + 1;
    if g < required {
        return Err(CoreError::GridTooCoarse { grid: g, required });
    }
    let j = module.structure(module.rank());
    let scale = 1.0 / points.len() as f64;
    let mut mean = DVector::zeros(n);
    let mut total_sq = 0.0;
    for p in 0..points.len() {
        let v = DVector::from_column_slice(&values.as_slice()[p * n..(p + 1) * n]);
        total_sq += scale * v.norm_squared();
        mean += v * scale;
    }
    let mut coeffs = DVector::zeros(modes.len() * n);
    for (idx, k) in modes.modes().iter().enumerate() {
        let mut c = DVector::zeros(n);
        for (p, t) in points.iter().enumerate() {
            let theta = TWO_PI * dot_it(k, t);
            let v = DVector::from_column_slice(&values.as_slice()[p * n..(p + 1) * n]);
            // ⟨f, exp(2πk·tJ)e_i⟩ pointwise: rotate back by −θ.
            c += (&v * theta.cos() - j * &v * theta.sin()) * scale;
        }
        coeffs.as_mut_slice()[idx * n..(idx + 1) * n].copy_from_slice(c.as_slice());
    }
    let captured = mean.norm_squared() + coeffs.norm_squared();
    let discarded = (total_sq - captured).max(0.0).sqrt();
    Ok(TorusAnalysis { mean, coeffs, discarded })
}

/// Finite-difference differentiation oracle for the pair block: samples the
/// basis functions of `F_{k*}` on a fine grid, applies `Σ J_l ∂_l` by
/// central differences in `t` (step `1e-6`), and projects back onto the
/// pair basis by grid quadrature. Intended for verifying [`dirac_block`].
///
/// The basis functions `exp(±2πk·tJ)e_i` depend on `t` only through
/// `θ = 2πk·t`, so the shifted evaluations reduce to per-point scalars:
/// `Σ_l J_l ∂_l φ^σ_i = M_σ(t)e_i` with
/// `M_σ = Σ_l (∂_l cos σθ)·J_l + (∂_l sin σθ)·J_lJ`, and the quadrature
/// pairing against `cos(σ'θ)e_j + sin(σ'θ)Je_j` needs only `M_σ` and
/// `JᵀM_σ`.
pub fn fd_block_oracle(module: &CliffordModule, k: &[i64], g: usize) -> Result<DMatrix<f64>> {
    if k.len() != module.rank() {
        return Err(CoreError::DimensionMismatch { expected: module.rank(), got: k.len() });
    }
    if k.iter().all(|&c| c == 0) {
        return Err(CoreError::ZeroFrequency);
    }
    const STEP: f64 = 1e-6;
    let n = module.dim();
    let r = module.rank();
    let j = module.structure(r);
    let j_l: Vec<&DMatrix<f64>> = (1..=r).map(|l| module.structure(l)).collect();
    let j_l_j: Vec<DMatrix<f64>> = j_l.iter().map(|m| *m * j).collect();
    let points = grid_points(r, g);
    let scale = 1.0 / points.len() as f64;

    // acc[row_slot][col_slot], slots ordered (−k, +k).
    let mut acc = [
        [DMatrix::<f64>::zeros(n, n), DMatrix::<f64>::zeros(n, n)],
        [DMatrix::<f64>::zeros(n, n), DMatrix::<f64>::zeros(n, n)],
    ];
    let mut m_sigma = DMatrix::<f64>::zeros(n, n);
    let mut jt_m = DMatrix::<f64>::zeros(n, n);
    for t in &points {
        let theta = TWO_PI * dot_it(k, t);
        for (col_slot, sigma) in [(-1.0f64), 1.0].iter().enumerate() {
            m_sigma.fill(0.0);
            for l in 0..r {
                // t_l ± STEP shifts θ by ±2π k_l STEP exactly.
                let w = TWO_PI * k[l] as f64 * STEP;
                let arg = sigma * theta;
                let sw = sigma * w;
                let dcos = ((arg + sw).cos() - (arg - sw).cos()) / (2.0 * STEP);
                let dsin = ((arg + sw).sin() - (arg - sw).sin()) / (2.0 * STEP);
                for a in 0..n {
                    for b in 0..n {
                        m_sigma[(a, b)] += dcos * j_l[l][(a, b)] + dsin * j_l_j[l][(a, b)];
                    }
                }
            }
            // ⟨M e_i, cos(σ'θ)e_j + sin(σ'θ)Je_j⟩ = cos·M[j,i] + sin·(JᵀM)[j,i].
            j.tr_mul_to(&m_sigma, &mut jt_m);
            for (row_slot, sigma_row) in [(-1.0f64), 1.0].iter().enumerate() {
                let (c, s) = ((sigma_row * theta).cos(), (sigma_row * theta).sin());
                let dst = &mut acc[row_slot][col_slot];
                for a in 0..n {
                    for b in 0..n {
                        dst[(a, b)] += c * m_sigma[(a, b)] + s * jt_m[(a, b)];
                    }
                }
            }
        }
    }
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for row_slot in 0..2 {
        for col_slot in 0..2 {
            for a in 0..n {
                for b in 0..n {
                    out[(row_slot * n + a, col_slot * n + b)] =
                        acc[row_slot][col_slot][(a, b)] * scale;
                }
            }
        }
    }
    Ok(out)
}
