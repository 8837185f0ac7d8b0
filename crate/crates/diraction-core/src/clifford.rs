//! Families of anti-commuting orthogonal complex structures on `ℝⁿ`.
//!
//! A module here is a tuple `(n, r, J₁…J_r)` with every `J_l` orthogonal,
//! `J_l² = −I` and `J_l J_j + J_j J_l = 0` for `l ≠ j` — equivalently an
//! orthogonal representation of the Clifford algebra of a negative definite
//! form on `ℝʳ`. The largest admissible `r` on `ℝⁿ` is the Radon–Hurwitz
//! number; the generators built here realize it at minimal dimension:
//! rotation on `ℝ²`, quaternion left multiplication on `ℝ⁴`, octonion left
//! multiplication on `ℝ⁸`, one doubling step to `ℝ¹⁶`, and the period-8
//! volume-element twist for larger ranks.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::Result;

/// Absolute tolerance for the algebraic identities. Generator entries are
/// exact in {−1, 0, 1}, so violations at this scale mean real corruption.
pub const ALGEBRA_TOL: f64 = 1e-12;

/// `r` anti-commuting orthogonal complex structures on `V = ℝⁿ`.
///
/// Immutable after construction; cheap to share behind `Arc`.
#[derive(Debug, Clone, PartialEq)]
pub struct CliffordModule {
    n: usize,
    r: usize,
    structures: Vec<DMatrix<f64>>,
    hyperkahler: bool,
}

/// Maximal number of anti-commuting complex structures on `ℝⁿ`.
///
/// Writes `n = 2^{4d+c}·b` with `b` odd and `0 ≤ c ≤ 3`, and returns
/// `8d + 2^c − 1`.
pub fn radon_hurwitz_bound(n: usize) -> usize {
    assert!(n >= 1, "dimension must be positive");
    let m = n.trailing_zeros() as usize;
    let d = m / 4;
    let c = m % 4;
    8 * d + (1 << c) - 1
}

/// Smallest `n` with `radon_hurwitz_bound(n) ≥ r`.
fn minimal_dimension(r: usize) -> usize {
    let mut n = 1usize;
    while radon_hurwitz_bound(n) < r {
        n *= 2;
    }
    n
}

/// Left multiplication matrix of basis unit `u` in a division-algebra basis
/// described by `mul`, where `mul(i, j)` returns the product of basis units
/// `i` and `j` as a coefficient vector.
fn left_mul_matrix(dim: usize, u: usize, mul: &dyn Fn(usize, usize) -> Vec<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let col = mul(u, j);
        for i in 0..dim {
            m[(i, j)] = col[i];
        }
    }
    m
}

/// Quaternion basis product e_i · e_j (basis 1, i, j, k).
fn quat_mul_basis(i: usize, j: usize) -> Vec<f64> {
    let mut a = [0.0; 4];
    a[i] = 1.0;
    let mut b = [0.0; 4];
    b[j] = 1.0;
    quat_mul(&a, &b).to_vec()
}

pub(crate) fn quat_mul(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

fn quat_conj(a: &[f64; 4]) -> [f64; 4] {
    [a[0], -a[1], -a[2], -a[3]]
}

/// Octonion basis product via the Cayley–Dickson doubling of the
/// quaternions: (a, b)(c, d) = (ac − d̄b, da + bc̄).
fn oct_mul_basis(i: usize, j: usize) -> Vec<f64> {
    let split = |u: usize| {
        let mut q = ([0.0f64; 4], [0.0f64; 4]);
        if u < 4 {
            q.0[u] = 1.0;
        } else {
            q.1[u - 4] = 1.0;
        }
        q
    };
    let (a, b) = split(i);
    let (c, d) = split(j);
    let first = sub4(&quat_mul(&a, &c), &quat_mul(&quat_conj(&d), &b));
    let second = add4(&quat_mul(&d, &a), &quat_mul(&b, &quat_conj(&c)));
    let mut out = Vec::with_capacity(8);
    out.extend_from_slice(&first);
    out.extend_from_slice(&second);
    out
}

fn add4(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

fn sub4(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

/// Kronecker product helper (nalgebra provides `kronecker` on matrices).
fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Generators of the minimal module of rank `r`.
fn generators(r: usize) -> Vec<DMatrix<f64>> {
    debug_assert!(r >= 1);
    if r <= 1 {
        // Standard complex structure on ℝ².
        return alloc::vec![DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])];
    }
    if r <= 3 {
        // Left multiplication by i, j, k on the quaternions.
        return (1..=r).map(|u| left_mul_matrix(4, u, &quat_mul_basis)).collect();
    }
    if r <= 7 {
        // Left multiplication by the imaginary octonion units.
        return (1..=r).map(|u| left_mul_matrix(8, u, &oct_mul_basis)).collect();
    }
    if r <= 8 {
        // Double the seven octonionic structures: F⊗J_l plus E⊗I.
        let base = generators(7);
        let e = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let f = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let id8 = DMatrix::identity(8, 8);
        let mut out: Vec<_> = base.iter().map(|j| kron(&f, j)).collect();
        out.push(kron(&e, &id8));
        return out;
    }
    // Period 8: given J_1…J_{r−8} on ℝⁿ and K_1…K_8 on ℝ¹⁶ with volume
    // element Ω = K_1…K_8 (Ω² = I, ΩK_m = −K_mΩ), the family
    // {K_m⊗I_n} ∪ {Ω⊗J_l} is a rank-r module on ℝ^{16n}.
    let inner = generators(r - 8);
    let eight = generators(8);
    let n = inner[0].nrows();
    let id_n = DMatrix::identity(n, n);
    let mut omega = DMatrix::identity(16, 16);
    for k in &eight {
        omega = &omega * k;
    }
    let mut out: Vec<_> = eight.iter().map(|k| kron(k, &id_n)).collect();
    out.extend(inner.iter().map(|j| kron(&omega, j)));
    out
}

impl CliffordModule {
    /// Build the minimal-dimension module with `r` structures.
    ///
    /// For `r = 3` the generators are quaternion left multiplications and
    /// satisfy `J₁J₂ = J₃`; requesting the hyperkähler flag with any other
    /// rank is an error.
    pub fn build(r: usize, hyperkahler_requested: bool) -> Result<Self> {
        if r == 0 {
            return Err(CoreError::InvalidRequest("rank must be at least 1".into()));
        }
        if hyperkahler_requested && r != 3 {
            return Err(CoreError::InvalidRequest(format!(
                "hyperkähler structure requires r = 3, got r = {r}"
            )));
        }
        let structures = generators(r);
        let module = Self::from_matrices(structures)?;
        debug_assert_eq!(module.n, minimal_dimension(r));
        Ok(module)
    }

    /// Validate an explicit family of structures and wrap it as a module.
    ///
    /// Checks orthogonality, `J_l² = −I`, pairwise anti-commutation and the
    /// Radon–Hurwitz bound; the hyperkähler flag is set iff `r = 3` and
    /// `J₁J₂ = J₃` holds to [`ALGEBRA_TOL`].
    pub fn from_matrices(structures: Vec<DMatrix<f64>>) -> Result<Self> {
        if structures.is_empty() {
            return Err(CoreError::InvalidModule("no structures given".into()));
        }
        let n = structures[0].nrows();
        for (l, j) in structures.iter().enumerate() {
            if j.nrows() != n || j.ncols() != n {
                return Err(CoreError::InvalidModule(format!(
                    "J_{} is {}x{}, expected {n}x{n}",
                    l + 1,
                    j.nrows(),
                    j.ncols()
                )));
            }
        }
        let r = structures.len();
        if r > radon_hurwitz_bound(n) {
            return Err(CoreError::InvalidModule(format!(
                "r = {r} exceeds the Radon-Hurwitz bound {} for n = {n}",
                radon_hurwitz_bound(n)
            )));
        }
        let id = DMatrix::<f64>::identity(n, n);
        for (l, j) in structures.iter().enumerate() {
            let ortho = (j.transpose() * j - &id).abs().max();
            if ortho > ALGEBRA_TOL {
                return Err(CoreError::InvalidModule(format!(
                    "J_{} is not orthogonal (deviation {ortho:.3e})",
                    l + 1
                )));
            }
            let square = (j * j + &id).abs().max();
            if square > ALGEBRA_TOL {
                return Err(CoreError::InvalidModule(format!(
                    "J_{}^2 != -I (deviation {square:.3e})",
                    l + 1
                )));
            }
        }
        for l in 0..r {
            for m in (l + 1)..r {
                let anti = (&structures[l] * &structures[m] + &structures[m] * &structures[l])
                    .abs()
                    .max();
                if anti > ALGEBRA_TOL {
                    return Err(CoreError::InvalidModule(format!(
                        "J_{} and J_{} do not anti-commute (deviation {anti:.3e})",
                        l + 1,
                        m + 1
                    )));
                }
            }
        }
        let hyperkahler = r == 3
            && (&structures[0] * &structures[1] - &structures[2]).abs().max() <= ALGEBRA_TOL;
        Ok(Self { n, r, structures, hyperkahler })
    }

    /// Real dimension of `V`.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of structures.
    pub fn rank(&self) -> usize {
        self.r
    }

    /// Whether the module carries the quaternionic relation `J₁J₂ = J₃`.
    pub fn is_hyperkahler(&self) -> bool {
        self.hyperkahler
    }

    /// The structure `J_l`, 1-based to match the usual notation.
    pub fn structure(&self, l: usize) -> &DMatrix<f64> {
        &self.structures[l - 1]
    }

    /// All structures, `J₁…J_r`.
    pub fn structures(&self) -> &[DMatrix<f64>] {
        &self.structures
    }

    /// Principal symbol `Σ λ_l J_l` of the Dirac operator at covector `λ`.
    ///
    /// Squares to `−‖λ‖²·I`, hence is invertible for every `λ ≠ 0`.
    pub fn pencil_symbol(&self, lambda: &[f64]) -> Result<DMatrix<f64>> {
        if lambda.len() != self.r {
            return Err(CoreError::DimensionMismatch { expected: self.r, got: lambda.len() });
        }
        let mut sym = DMatrix::zeros(self.n, self.n);
        for (l, &c) in lambda.iter().enumerate() {
            sym += &self.structures[l] * c;
        }
        Ok(sym)
    }

    /// Symplectic form `ω_l(X, Y) = ⟨J_l X, Y⟩` as a matrix (acting as
    /// `ω_l(X, Y) = Xᵀ M Y`), derived on demand from `J_l`.
    pub fn symplectic_form(&self, l: usize) -> DMatrix<f64> {
        self.structures[l - 1].transpose()
    }

    /// Orthonormal bases of `V₀, V₁ = J₁V₀, V₂ = J₂V₀, V₃ = J₃V₀` whose
    /// union is an orthonormal basis of `V`. Requires a hyperkähler module.
    ///
    /// `V₀` is picked greedily from the standard basis, so for the
    /// quaternion modules it is the real axis of each quaternionic
    /// coordinate.
    pub fn quaternionic_split(&self) -> Result<[DMatrix<f64>; 4]> {
        if !self.hyperkahler {
            return Err(CoreError::NotHyperkahler);
        }
        let n = self.n;
        let quarter = n / 4;
        let mut orbit: Vec<DVector<f64>> = Vec::with_capacity(n);
        let mut v0 = DMatrix::zeros(n, quarter);
        for slot in 0..quarter {
            // Next unit vector orthogonal to the orbits found so far.
            let mut seed = None;
            for i in 0..n {
                let mut v = DVector::zeros(n);
                v[i] = 1.0;
                for w in &orbit {
                    let c = v.dot(w);
                    v -= w * c;
                }
                let norm = v.norm();
                if norm > 1e-8 {
                    seed = Some(v / norm);
                    break;
                }
            }
            let v = seed.ok_or_else(|| {
                CoreError::InvalidModule("quaternionic split ran out of directions".into())
            })?;
            v0.set_column(slot, &v);
            orbit.push(v.clone());
            for j in &self.structures {
                orbit.push(j * &v);
            }
        }
        let v1 = &self.structures[0] * &v0;
        let v2 = &self.structures[1] * &v0;
        let v3 = &self.structures[2] * &v0;
        Ok([v0, v1, v2, v3])
    }
}

/// JSON shape of a module: `{"n", "r", "J": [[row-major]], "hyperkahler"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CliffordModuleJson {
    pub n: usize,
    pub r: usize,
    #[serde(rename = "J")]
    pub j: Vec<Vec<f64>>,
    pub hyperkahler: bool,
}

impl From<&CliffordModule> for CliffordModuleJson {
    fn from(m: &CliffordModule) -> Self {
        Self {
            n: m.n,
            r: m.r,
            j: m.structures.iter().map(|j| j.transpose().as_slice().to_vec()).collect(),
            hyperkahler: m.hyperkahler,
        }
    }
}

impl TryFrom<CliffordModuleJson> for CliffordModule {
    type Error = CoreError;

    fn try_from(json: CliffordModuleJson) -> Result<Self> {
        if json.j.len() != json.r {
            return Err(CoreError::InvalidModule(format!(
                "declared r = {} but {} matrices given",
                json.r,
                json.j.len()
            )));
        }
        let n = json.n;
        let mut structures = Vec::with_capacity(json.r);
        for (l, rows) in json.j.iter().enumerate() {
            if rows.len() != n * n {
                return Err(CoreError::InvalidModule(format!(
                    "J_{} has {} entries, expected {}",
                    l + 1,
                    rows.len(),
                    n * n
                )));
            }
            structures.push(DMatrix::from_row_slice(n, n, rows));
        }
        let module = CliffordModule::from_matrices(structures)?;
        if json.hyperkahler && !module.hyperkahler {
            return Err(CoreError::InvalidModule(String::from(
                "hyperkahler flag set but J1*J2 != J3",
            )));
        }
        Ok(module)
    }
}
