//! File outputs of `diraction solve`: points.json, summary.csv,
//! report.json. Points and summary are byte-stable for a fixed config and
//! seed; report.json carries wall-clock timings.

use anyhow::Context;
use nalgebra::DVector;
use serde::Serialize;
use std::path::Path;

use diraction_core::solver::{RefineReport, SearchDiagnostics};
use diraction_core::{CountReport, CriticalPointRecord, ReducedProblem, TimeDomain};

use crate::config::RunConfig;

/// Spectral field in wire format. Torus coefficients carry the integer
/// frequency vector, SU(2) coefficients the `(k, a, b)` triple.
#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum FieldJson {
    Torus {
        mean: Vec<f64>,
        coeffs: Vec<TorusCoeffJson>,
        #[serde(rename = "N")]
        n: usize,
    },
    Su2 {
        mean: Vec<f64>,
        coeffs: Vec<Su2CoeffJson>,
        #[serde(rename = "N")]
        n: usize,
    },
}

#[derive(Debug, Serialize)]
pub struct TorusCoeffJson {
    pub k: Vec<i64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Su2CoeffJson {
    pub k: usize,
    pub a: usize,
    pub b: usize,
    pub v: Vec<f64>,
}

/// Serialize a coefficient block (entry-major) against the problem's mode
/// ordering; zero coefficients are skipped.
pub fn field_json(
    problem: &ReducedProblem,
    mean: &DVector<f64>,
    coeffs: &[f64],
    band_hi: usize,
) -> FieldJson {
    let n = problem.w_dim();
    let entries = coeffs.len() / n;
    match problem.time_domain() {
        TimeDomain::Torus(_) => {
            let modes = problem.torus_modes().expect("torus problem");
            let mut out = Vec::new();
            for idx in 0..entries {
                let v = &coeffs[idx * n..(idx + 1) * n];
                if v.iter().all(|&x| x == 0.0) {
                    continue;
                }
                out.push(TorusCoeffJson { k: modes.modes()[idx].clone(), v: v.to_vec() });
            }
            FieldJson::Torus { mean: mean.as_slice().to_vec(), coeffs: out, n: band_hi }
        }
        TimeDomain::Su2 => {
            let modes = problem.su2_modes().expect("su2 problem");
            let mut out = Vec::new();
            for idx in 0..entries {
                let v = &coeffs[idx * n..(idx + 1) * n];
                if v.iter().all(|&x| x == 0.0) {
                    continue;
                }
                let mode = modes.entries()[idx];
                out.push(Su2CoeffJson { k: mode.k, a: mode.a, b: mode.b, v: v.to_vec() });
            }
            FieldJson::Su2 { mean: mean.as_slice().to_vec(), coeffs: out, n: band_hi }
        }
    }
}

#[derive(Debug, Serialize)]
pub struct PointJson {
    /// Reduced coordinates `g` (modes below `N`).
    pub g: FieldJson,
    /// Assembled field `f = g + h(g)` (modes below the working band).
    pub f: FieldJson,
    pub action: f64,
    pub residual: f64,
    pub grad_norm: f64,
    pub hessian_min_abs_eigenvalue: f64,
    pub nondegenerate: bool,
    pub morse_index_window: usize,
    pub basin_seed: usize,
}

pub fn point_json(problem: &ReducedProblem, record: &CriticalPointRecord) -> PointJson {
    let mean = problem.mean_of(&record.base);
    let low = problem.low_of(&record.base);
    let g = field_json(problem, &mean, low.as_slice(), problem.n_trunc());
    let mut full = Vec::with_capacity(low.len() + record.tail.len());
    full.extend_from_slice(low.as_slice());
    full.extend_from_slice(record.tail.as_slice());
    let f = field_json(problem, &mean, &full, problem.n_tail());
    PointJson {
        g,
        f,
        action: record.action,
        residual: record.residual,
        grad_norm: record.grad_norm,
        hessian_min_abs_eigenvalue: record.hessian_min_abs_eigenvalue,
        nondegenerate: record.nondegenerate,
        morse_index_window: record.morse_index_window,
        basin_seed: record.basin_seed,
    }
}

pub fn write_points(
    path: &Path,
    problem: &ReducedProblem,
    records: &[CriticalPointRecord],
) -> anyhow::Result<()> {
    let points: Vec<PointJson> = records.iter().map(|r| point_json(problem, r)).collect();
    let text = serde_json::to_string_pretty(&points)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_summary(path: &Path, records: &[CriticalPointRecord]) -> anyhow::Result<()> {
    let mut text = String::from("action,residual,min_abs_eig,nondegenerate,index_window\n");
    for r in records {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            r.action, r.residual, r.hessian_min_abs_eigenvalue, r.nondegenerate, r.morse_index_window
        ));
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Serialize)]
pub struct DerivedInfo {
    pub n_trunc: usize,
    pub n_tail: usize,
    pub contraction_factor: f64,
    pub auto_truncation_rho: f64,
    pub base_dim: usize,
    pub target_dim: usize,
}

#[derive(Debug, Default, Serialize)]
pub struct Timings {
    pub setup_s: f64,
    pub search_s: f64,
    pub refine_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Serialize)]
pub struct Report<'a> {
    pub tool: ToolInfo,
    pub config: &'a RunConfig,
    pub rng_seed: u64,
    pub derived: DerivedInfo,
    pub count: &'a CountReport,
    pub diagnostics: &'a SearchDiagnostics,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub refine: Vec<RefineReport>,
    pub timings: Timings,
}

pub fn write_report(path: &Path, report: &Report<'_>) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
