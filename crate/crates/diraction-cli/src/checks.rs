//! Verification suites behind `diraction verify`: block-vs-oracle, norm,
//! spectrum, Parseval and orthonormality checks for the configured domain.

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use diraction_core::su2::{
    dirac_apply_su2, dirac_level_matrix, haar_analyze, haar_synthesize, schur_orthonormal_basis,
    Su2Field, Su2ModeSet, Su2Point, Su2Quadrature,
};
use diraction_core::torus::{
    analyze, dirac_apply, dirac_block, dirac_block_inverse, fd_block_oracle, l2_inner,
    synthesize, TorusField, TorusModeSet,
};
use diraction_core::{CliffordModule, ReducedProblem, TimeDomain};

const TWO_PI: f64 = std::f64::consts::TAU;

/// One verification row of the pass/fail table.
#[derive(Debug, Clone)]
pub struct CheckRow {
    pub name: String,
    pub deviation: f64,
    pub tolerance: f64,
}

impl CheckRow {
    pub fn pass(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        0.0
    } else {
        m.abs().max()
    }
}

/// Module identity deviations (all within 1e-12 for a valid module; the
/// rows make the margins visible).
fn module_checks(module: &CliffordModule) -> Vec<CheckRow> {
    let n = module.dim();
    let id = DMatrix::<f64>::identity(n, n);
    let mut ortho: f64 = 0.0;
    let mut square: f64 = 0.0;
    let mut anti: f64 = 0.0;
    for l in 1..=module.rank() {
        let j = module.structure(l);
        ortho = ortho.max(max_abs(&(j.transpose() * j - &id)));
        square = square.max(max_abs(&(j * j + &id)));
        for m in (l + 1)..=module.rank() {
            let jm = module.structure(m);
            anti = anti.max(max_abs(&(j * jm + jm * j)));
        }
    }
    let mut rows = vec![
        CheckRow { name: "module: J^T J = I".into(), deviation: ortho, tolerance: 1e-12 },
        CheckRow { name: "module: J^2 = -I".into(), deviation: square, tolerance: 1e-12 },
        CheckRow {
            name: "module: anti-commutation".into(),
            deviation: anti,
            tolerance: 1e-12,
        },
    ];
    if module.is_hyperkahler() {
        let dev = max_abs(&(module.structure(1) * module.structure(2) - module.structure(3)));
        rows.push(CheckRow {
            name: "module: J1 J2 = J3".into(),
            deviation: dev,
            tolerance: 1e-12,
        });
    }
    rows
}

fn torus_checks(module: &Arc<CliffordModule>, k_max: usize, seed: u64) -> Vec<CheckRow> {
    let r = module.rank();
    let ball = TorusModeSet::ball(r, k_max + 1);
    let grid = 4 * k_max + 1;
    let mut oracle_dev: f64 = 0.0;
    let mut inverse_dev: f64 = 0.0;
    let mut norm_dev: f64 = 0.0;
    for k in ball.canonical_modes() {
        let block = dirac_block(module, k).unwrap();
        let oracle = fd_block_oracle(module, k, grid).unwrap();
        oracle_dev = oracle_dev.max(max_abs(&(&block - &oracle)));
        let inv = dirac_block_inverse(module, k).unwrap();
        let id = DMatrix::<f64>::identity(block.nrows(), block.nrows());
        inverse_dev = inverse_dev.max(max_abs(&(&block * &inv - id)));
        let nsq: i64 = k.iter().map(|c| c * c).sum();
        let predicted = 1.0 / (TWO_PI * (nsq as f64).sqrt());
        let norm = inv
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0f64, |acc, ev| acc.max(ev.abs()));
        norm_dev = norm_dev.max((norm - predicted).abs());
    }

    // Parseval / round trip and self-adjointness on random fields.
    let modes = Arc::new(TorusModeSet::ball(r, 4));
    let g = 2 * 4 - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut round_dev: f64 = 0.0;
    let mut parseval_dev: f64 = 0.0;
    let mut adjoint_dev: f64 = 0.0;
    for _ in 0..20 {
        let mut field = TorusField::zeros(module.clone(), modes.clone());
        for c in field.mean_mut().iter_mut() {
            *c = rng.random::<f64>() - 0.5;
        }
        for c in field.coeffs_mut().iter_mut() {
            *c = rng.random::<f64>() - 0.5;
        }
        let values = synthesize(&field, g);
        let out = analyze(module, &modes, g, &values).unwrap();
        round_dev = round_dev
            .max((out.mean - field.mean()).norm())
            .max((&out.coeffs - field.coeffs()).norm());
        let grid_sq = values.norm_squared() / (g.pow(r as u32) as f64);
        let coeff_sq = field.mean().norm_squared() + field.coeffs().norm_squared();
        parseval_dev = parseval_dev.max((grid_sq - coeff_sq).abs() / coeff_sq);

        let mut other = TorusField::zeros(module.clone(), modes.clone());
        for c in other.coeffs_mut().iter_mut() {
            *c = rng.random::<f64>() - 0.5;
        }
        let lhs = l2_inner(&dirac_apply(&field), &other).unwrap();
        let rhs = l2_inner(&field, &dirac_apply(&other)).unwrap();
        adjoint_dev = adjoint_dev.max((lhs - rhs).abs());
    }

    vec![
        CheckRow {
            name: format!("torus: block vs FD oracle (|k| <= {k_max})"),
            deviation: oracle_dev,
            tolerance: 1e-8,
        },
        CheckRow {
            name: "torus: A * A^-1 = I".into(),
            deviation: inverse_dev,
            tolerance: 1e-12,
        },
        CheckRow {
            name: "torus: |A^-1| = 1/(2pi|k|)".into(),
            deviation: norm_dev,
            tolerance: 1e-10,
        },
        CheckRow {
            name: "torus: synthesize/analyze round trip".into(),
            deviation: round_dev,
            tolerance: 1e-10,
        },
        CheckRow {
            name: "torus: Parseval (relative)".into(),
            deviation: parseval_dev,
            tolerance: 1e-10,
        },
        CheckRow {
            name: "torus: Dirac self-adjointness".into(),
            deviation: adjoint_dev,
            tolerance: 1e-10,
        },
    ]
}

fn su2_checks(module: &Arc<CliffordModule>, k_max: usize, seed: u64) -> Vec<CheckRow> {
    // Per-level spectrum {k, −(k+2)} and inverse norm 1/k.
    let mut spectrum_dev: f64 = 0.0;
    let mut inverse_dev: f64 = 0.0;
    let mut symmetry_dev: f64 = 0.0;
    for k in 1..=k_max {
        let m = dirac_level_matrix(module, k);
        symmetry_dev = symmetry_dev.max(max_abs(&(&m - m.transpose())));
        let eigs = m.symmetric_eigenvalues();
        let mut has_k = false;
        let mut has_neg = false;
        for ev in eigs.iter() {
            let d_k = (ev - k as f64).abs();
            let d_neg = (ev + (k + 2) as f64).abs();
            spectrum_dev = spectrum_dev.max(d_k.min(d_neg));
            has_k |= d_k < 1e-6;
            has_neg |= d_neg < 1e-6;
        }
        if !(has_k && has_neg) {
            spectrum_dev = f64::INFINITY;
        }
        let min_abs = eigs.iter().fold(f64::INFINITY, |acc, ev| acc.min(ev.abs()));
        inverse_dev = inverse_dev.max((1.0 / min_abs - 1.0 / k as f64).abs());
    }

    // Dirac vs the Lie-derivative flow oracle on random fields.
    let modes = Arc::new(Su2ModeSet::band(1, 5));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut oracle_dev: f64 = 0.0;
    const STEP: f64 = 1e-6;
    for _ in 0..50 {
        let mut field = Su2Field::zeros(module.clone(), modes.clone()).unwrap();
        for c in field.coeffs_mut().iter_mut() {
            *c = rng.random::<f64>() * 2.0 - 1.0;
        }
        let image = dirac_apply_su2(&field);
        let x = Su2Point::random(&mut rng);
        let exact = image.eval(&x);
        let mut oracle = DVector::zeros(module.dim());
        for l in 1..=3 {
            let plus = field.eval(&Su2Point::exp_basis(l, STEP).mul(&x));
            let minus = field.eval(&Su2Point::exp_basis(l, -STEP).mul(&x));
            oracle += module.structure(l) * (plus - minus) / (2.0 * STEP);
        }
        oracle_dev = oracle_dev.max((exact - oracle).norm());
    }

    // Schur orthonormality Gram for k ≤ 3.
    let quad = Su2Quadrature::for_band(6);
    let mut basis = Vec::new();
    for k in 0..=3 {
        basis.extend(schur_orthonormal_basis(k));
    }
    let mut gram_dev: f64 = 0.0;
    for (i, mi) in basis.iter().enumerate() {
        for (j, mj) in basis.iter().enumerate() {
            let gram = quad.integrate_complex(|x| mi.eval(x) * mj.eval(x).conj());
            let expected = if i == j { 1.0 } else { 0.0 };
            gram_dev = gram_dev.max((gram - Complex::new(expected, 0.0)).norm());
        }
    }

    // Parseval / round trip under Haar quadrature.
    let round_quad = Su2Quadrature::for_band(2 * 4);
    let mut round_dev: f64 = 0.0;
    let mut parseval_dev: f64 = 0.0;
    for _ in 0..10 {
        let mut field = Su2Field::zeros(module.clone(), modes.clone()).unwrap();
        for c in field.mean_mut().iter_mut() {
            *c = rng.random::<f64>() - 0.5;
        }
        for c in field.coeffs_mut().iter_mut() {
            *c = rng.random::<f64>() - 0.5;
        }
        let values = haar_synthesize(&field, &round_quad);
        let out = haar_analyze(module, &modes, &round_quad, &values).unwrap();
        round_dev = round_dev
            .max((out.mean - field.mean()).norm())
            .max((&out.coeffs - field.coeffs()).norm());
        let n = module.dim();
        let mut quad_sq = 0.0;
        for (p, &w) in round_quad.weights().iter().enumerate() {
            quad_sq += w * values.rows(p * n, n).norm_squared();
        }
        let coeff_sq = field.mean().norm_squared() + field.coeffs().norm_squared();
        parseval_dev = parseval_dev.max((quad_sq - coeff_sq).abs() / coeff_sq);
    }

    vec![
        CheckRow {
            name: format!("su2: level symmetry (k <= {k_max})"),
            deviation: symmetry_dev,
            tolerance: 1e-12,
        },
        CheckRow {
            name: format!("su2: spectrum = {{k, -(k+2)}} (k <= {k_max})"),
            deviation: spectrum_dev,
            tolerance: 1e-9,
        },
        CheckRow {
            name: "su2: inverse norm = 1/k".into(),
            deviation: inverse_dev,
            tolerance: 1e-9,
        },
        CheckRow {
            name: "su2: Dirac vs Lie-derivative oracle".into(),
            deviation: oracle_dev,
            tolerance: 1e-5,
        },
        CheckRow {
            name: "su2: Schur Gram = I (k <= 3)".into(),
            deviation: gram_dev,
            tolerance: 1e-8,
        },
        CheckRow {
            name: "su2: Haar round trip".into(),
            deviation: round_dev,
            tolerance: 1e-8,
        },
        CheckRow {
            name: "su2: Parseval (relative)".into(),
            deviation: parseval_dev,
            tolerance: 1e-8,
        },
    ]
}

/// All checks for the configured domain; `seed` drives the randomized
/// field samples.
pub fn run_checks(problem: &ReducedProblem, seed: u64) -> Vec<CheckRow> {
    let module = problem.module();
    let mut rows = module_checks(module);
    match problem.time_domain() {
        TimeDomain::Torus(_) => rows.extend(torus_checks(module, 5, seed)),
        TimeDomain::Su2 => rows.extend(su2_checks(module, 8, seed)),
    }
    rows
}

/// Render the table as text (for stdout and the optional file dump).
pub fn render_table(rows: &[CheckRow]) -> (String, bool) {
    let mut all_pass = true;
    let mut text = format!(
        "{:<44} {:>12} {:>10}   status\n",
        "check", "deviation", "tolerance"
    );
    for row in rows {
        let pass = row.pass();
        all_pass &= pass;
        text.push_str(&format!(
            "{:<44} {:>12.3e} {:>10.1e}   {}\n",
            row.name,
            row.deviation,
            row.tolerance,
            if pass { "PASS" } else { "FAIL" }
        ));
    }
    (text, all_pass)
}


