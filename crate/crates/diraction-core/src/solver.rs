//! Global critical-point search on the reduced base `E_N`, deduplication
//! modulo the lattice, nondegeneracy classification and count reports.
//!
//! Seeds form a uniform lattice over `W` crossed with small random fiber
//! perturbations; each seed runs a damped Newton iteration on `∇Φ = 0`
//! (regularized in the Levenberg sense on `½‖∇Φ‖²`, with a gradient
//! descent fallback on stagnation). Converged points are deduplicated by
//! `W`-distance modulo the lattice plus fiber L² distance, classified by
//! the spectrum of the finite Hessian, and compared against the
//! cup-length (`CL(Tⁿ) = n`) and Betti-sum (`SB(Tⁿ) = 2ⁿ`) lower bounds.
//! Everything is deterministic given the search seed.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // float intrinsics in no_std builds
use num_traits::Float;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::CoreError;
use crate::reduction::ReducedProblem;
use crate::Result;

/// Knobs of the multistart search; `Default` suits the desk-scale runs.
#[derive(Debug, Clone)]
pub struct SearchParams {
    /// Requested number of `W`-lattice seeds; rounded up to a full grid
    /// `mⁿ` with `m = ⌈seed_count^{1/n}⌉ ≥ 2`. Zero means `3ⁿ`.
    pub seed_count: usize,
    pub rng_seed: u64,
    /// Accept a point as critical when `‖∇Φ‖` falls below this.
    pub grad_tol: f64,
    /// Identification radius for deduplication and clustering.
    pub dedup_radius: f64,
    pub max_newton_steps: usize,
    /// Reported records must have residual below this.
    pub residual_tol: f64,
    /// `|eigenvalue|` below this counts as a null direction.
    pub degeneracy_tol: f64,
    /// Scale of the random fiber component of each seed.
    pub fiber_seed_scale: f64,
    /// Re-run once with a denser seed grid if the Betti bound is missed.
    pub escalate: bool,
    /// Worker threads for the seed loop (`std` builds only; results are
    /// merged by seed index, so the outcome is thread-count independent).
    pub threads: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            seed_count: 0,
            rng_seed: 0x5eed,
            grad_tol: 1e-10,
            dedup_radius: 1e-4,
            max_newton_steps: 60,
            residual_tol: 1e-6,
            degeneracy_tol: 1e-6,
            fiber_seed_scale: 1e-2,
            escalate: true,
            threads: 1,
        }
    }
}

/// A located critical point of `Φ` with its classification data.
#[derive(Debug, Clone)]
pub struct CriticalPointRecord {
    /// Reduced coordinates `g` (mean reduced modulo the lattice).
    pub base: DVector<f64>,
    /// Fiber fixed point `h(g)`.
    pub tail: DVector<f64>,
    /// `Φ(g) = 𝒜_H(g + h(g))`.
    pub action: f64,
    pub residual: f64,
    pub grad_norm: f64,
    pub hessian_min_abs_eigenvalue: f64,
    pub nondegenerate: bool,
    /// Number of negative eigenvalues of the computed finite Hessian
    /// block (window-relative; the full index is renormalized).
    pub morse_index_window: usize,
    /// Index of the seed whose basin produced the point.
    pub basin_seed: usize,
    /// Orthonormal eigenvectors with `|λ| ≤ degeneracy_tol`, kept for
    /// degenerate-family clustering.
    pub null_dirs: Vec<DVector<f64>>,
}

/// Count summary against the theorem's lower bounds.
#[derive(Debug, Clone, Serialize)]
pub struct CountReport {
    pub found: usize,
    /// `SB(Tⁿ) = 2ⁿ`.
    pub sb_bound: usize,
    /// `CL(Tⁿ) + 1 = n + 1`.
    pub cl_bound: usize,
    pub all_nondegenerate: bool,
    /// Only asserted when `all_nondegenerate` holds.
    pub satisfied_sb: bool,
    pub satisfied_cl: bool,
    /// Cluster count after projecting out near-null directions
    /// (degenerate families only).
    pub clusters: Option<usize>,
}

/// Bookkeeping of one search run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SearchDiagnostics {
    pub seeds_run: usize,
    pub converged: usize,
    pub dropped: usize,
    pub escalated: bool,
    pub newton_steps_total: usize,
}

/// Records plus diagnostics plus the count report.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub records: Vec<CriticalPointRecord>,
    pub report: CountReport,
    pub diagnostics: SearchDiagnostics,
}

/// Outcome of re-running Newton at a finer truncation.
#[derive(Debug, Clone, Serialize)]
pub struct RefineReport {
    pub displacement: f64,
    pub residual_before: f64,
    pub residual_after: f64,
    /// `displacement < 1e-5` and residual non-increasing within `1e-7`.
    pub accepted: bool,
}

/// Deterministic seed list: a uniform `mⁿ` lattice over `W` (offset to
/// cell centers) crossed with random fiber perturbations.
fn make_seeds(
    problem: &ReducedProblem,
    params: &SearchParams,
    factor: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<DVector<f64>> {
    let n = problem.w_dim();
    let requested = if params.seed_count == 0 {
        3usize.pow(n as u32)
    } else {
        params.seed_count
    } * factor;
    let mut m = 2usize;
    while m.pow(n as u32) < requested {
        m += 1;
    }
    let total = m.pow(n as u32);
    let mut seeds = Vec::with_capacity(total);
    for p in 0..total {
        let mut g = DVector::zeros(problem.base_dim());
        let mut rem = p;
        for axis in (0..n).rev() {
            g[axis] = (2.0 * (rem % m) as f64 + 1.0) / (2.0 * m as f64);
            rem /= m;
        }
        for i in n..problem.base_dim() {
            g[i] = (rng.random::<f64>() * 2.0 - 1.0) * params.fiber_seed_scale;
        }
        seeds.push(g);
    }
    seeds
}

/// Damped Newton loop from one seed. Returns the converged base point
/// and the step count, or `None` when the seed stagnates.
///
/// The finite-difference Hessian dominates the cost, so it is reused
/// across accepted steps (modified Newton) and refreshed when a step is
/// rejected or after a few steps; every trial is gated on a strict
/// decrease of `‖∇Φ‖`, with Levenberg damping on `H² + λI` and plain
/// descent on `½‖∇Φ‖²` as fallbacks.
fn newton_from_seed(
    problem: &ReducedProblem,
    seed: &DVector<f64>,
    params: &SearchParams,
) -> Result<Option<(DVector<f64>, usize)>> {
    const HESS_MAX_AGE: usize = 4;
    let dim = problem.base_dim();
    let mut x = seed.clone();
    let mut point = problem.reduce(&x)?;
    let mut lambda = 1e-4;
    let mut steps = 0;
    let mut hess: Option<DMatrix<f64>> = None;
    let mut hess_age = 0usize;

    for _ in 0..params.max_newton_steps {
        let grad_norm = point.grad.norm();
        if grad_norm < params.grad_tol {
            return Ok(Some((x, steps)));
        }
        steps += 1;
        if hess.is_none() || hess_age >= HESS_MAX_AGE {
            hess = Some(problem.generating_hess(&x)?);
            hess_age = 0;
        }
        let mut accepted = false;
        let mut refreshed = hess_age == 0;

        loop {
            let h = hess.as_ref().expect("hessian present");
            // Pure Newton first, then Levenberg damping on H² + λI.
            if let Some(delta) = h.clone().lu().solve(&(-&point.grad)) {
                let trial = &x + &delta;
                if let Ok(trial_point) = problem.reduce_warm(&trial, Some(&point.tail)) {
                    if trial_point.grad.norm() < grad_norm {
                        x = trial;
                        point = trial_point;
                        lambda = (lambda * 0.25).max(1e-12);
                        accepted = true;
                    }
                }
            }
            if !accepted {
                let h_sq = h * h;
                let rhs = -(h * &point.grad);
                for _ in 0..16 {
                    let damped = &h_sq + DMatrix::identity(dim, dim) * lambda;
                    let Some(chol) = damped.cholesky() else {
                        lambda *= 10.0;
                        continue;
                    };
                    let delta = chol.solve(&rhs);
                    let trial = &x + &delta;
                    let Ok(trial_point) = problem.reduce_warm(&trial, Some(&point.tail)) else {
                        lambda *= 10.0;
                        continue;
                    };
                    if trial_point.grad.norm() < grad_norm {
                        x = trial;
                        point = trial_point;
                        lambda = (lambda * 0.25).max(1e-12);
                        accepted = true;
                        break;
                    }
                    lambda *= 10.0;
                }
            }
            if accepted || refreshed {
                break;
            }
            // A stale Hessian may be the culprit: refresh once and retry.
            hess = Some(problem.generating_hess(&x)?);
            hess_age = 0;
            refreshed = true;
        }
        if !accepted {
            // Gradient descent on ½‖∇Φ‖² with backtracking.
            let descent = -(hess.as_ref().expect("hessian present") * &point.grad);
            let mut alpha = 1.0;
            for _ in 0..30 {
                let trial = &x + &descent * alpha;
                if let Ok(trial_point) = problem.reduce_warm(&trial, Some(&point.tail)) {
                    if trial_point.grad.norm() < grad_norm {
                        x = trial;
                        point = trial_point;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
        }
        if !accepted {
            return Ok(None);
        }
        hess_age += 1;
    }
    if point.grad.norm() < params.grad_tol {
        Ok(Some((x, steps)))
    } else {
        Ok(None)
    }
}

/// Classify a converged base point: Hessian spectrum, nondegeneracy flag,
/// window Morse index and near-null directions.
pub fn classify(
    problem: &ReducedProblem,
    base: &DVector<f64>,
    basin_seed: usize,
    params: &SearchParams,
) -> Result<CriticalPointRecord> {
    let point = problem.reduce(base)?;
    let hess = problem.generating_hess(base)?;
    let eig = hess.symmetric_eigen();
    let mut min_abs = f64::INFINITY;
    let mut index = 0;
    let mut null_dirs = Vec::new();
    for (i, ev) in eig.eigenvalues.iter().enumerate() {
        min_abs = min_abs.min(ev.abs());
        if *ev < -params.degeneracy_tol {
            index += 1;
        }
        if ev.abs() <= params.degeneracy_tol {
            null_dirs.push(eig.eigenvectors.column(i).into_owned());
        }
    }
    // Report the mean inside the fundamental cell.
    let mut base = base.clone();
    let reduced_mean = problem.lattice().reduce(&problem.mean_of(&base));
    base.rows_mut(0, problem.w_dim()).copy_from(&reduced_mean);
    Ok(CriticalPointRecord {
        base,
        tail: point.tail,
        action: point.phi,
        residual: point.residual,
        grad_norm: point.grad.norm(),
        hessian_min_abs_eigenvalue: min_abs,
        nondegenerate: min_abs > params.degeneracy_tol,
        morse_index_window: index,
        basin_seed,
        null_dirs,
    })
}

/// Distance used for deduplication: `W`-distance modulo the lattice plus
/// fiber L² distance.
fn record_distance(problem: &ReducedProblem, a: &CriticalPointRecord, b: &CriticalPointRecord) -> f64 {
    let n = problem.w_dim();
    let mean_a = a.base.rows(0, n).into_owned();
    let mean_b = b.base.rows(0, n).into_owned();
    let dw = problem.lattice().distance_mod(&mean_a, &mean_b);
    let low = (a.base.rows(n, a.base.len() - n) - b.base.rows(n, b.base.len() - n)).norm_squared();
    let tail = (&a.tail - &b.tail).norm_squared();
    dw + (low + tail).sqrt()
}

fn sort_records(records: &mut [CriticalPointRecord]) {
    records.sort_by(|a, b| {
        a.action
            .total_cmp(&b.action)
            .then_with(|| {
                for (x, y) in a.base.iter().zip(b.base.iter()) {
                    let ord = x.total_cmp(y);
                    if ord != core::cmp::Ordering::Equal {
                        return ord;
                    }
                }
                core::cmp::Ordering::Equal
            })
    });
}

/// Merge-sorted deduplication; ties keep the smaller residual.
fn dedup_records(
    problem: &ReducedProblem,
    mut records: Vec<CriticalPointRecord>,
    radius: f64,
) -> Vec<CriticalPointRecord> {
    sort_records(&mut records);
    let mut kept: Vec<CriticalPointRecord> = Vec::new();
    for record in records {
        let mut duplicate = None;
        for (i, existing) in kept.iter().enumerate() {
            if record_distance(problem, &record, existing) < radius {
                duplicate = Some(i);
                break;
            }
        }
        match duplicate {
            Some(i) => {
                if record.residual < kept[i].residual {
                    kept[i] = record;
                }
            }
            None => kept.push(record),
        }
    }
    kept
}

/// Cluster count after projecting differences onto the non-null
/// directions of each point's Hessian (union-find over close pairs).
pub fn cluster_count(
    problem: &ReducedProblem,
    records: &[CriticalPointRecord],
    radius: f64,
) -> usize {
    let n = problem.w_dim();
    let len = records.len();
    let mut parent: Vec<usize> = (0..len).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        let mut root = i;
        while parent[root] != root {
            root = parent[root];
        }
        let mut cur = i;
        while parent[cur] != root {
            let next = parent[cur];
            parent[cur] = root;
            cur = next;
        }
        root
    }
    let projected_distance = |from: &CriticalPointRecord, to: &CriticalPointRecord| -> f64 {
        let mean_a = from.base.rows(0, n).into_owned();
        let mean_b = to.base.rows(0, n).into_owned();
        let wrapped = problem.lattice().wrap_difference(&(mean_b - mean_a));
        let mut delta = DVector::zeros(from.base.len() + from.tail.len());
        delta.rows_mut(0, n).copy_from(&wrapped);
        let fiber_len = from.base.len() - n;
        let mut fiber = to.base.rows(n, fiber_len) - from.base.rows(n, fiber_len);
        delta.rows_mut(n, fiber_len).copy_from(&fiber);
        fiber = (&to.tail - &from.tail).rows(0, from.tail.len()).into_owned();
        delta.rows_mut(n + fiber_len, from.tail.len()).copy_from(&fiber);
        // Null directions live on the base block; project them out there.
        for dir in &from.null_dirs {
            let overlap = delta.rows(0, dir.len()).dot(dir);
            let mut head = delta.rows_mut(0, dir.len());
            head.axpy(-overlap, dir, 1.0);
        }
        delta.norm()
    };
    for i in 0..len {
        for j in (i + 1)..len {
            let d = projected_distance(&records[i], &records[j])
                .min(projected_distance(&records[j], &records[i]));
            if d < radius {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut roots: Vec<usize> = (0..len).map(|i| find(&mut parent, i)).collect();
    roots.sort_unstable();
    roots.dedup();
    roots.len()
}

/// Fill the theorem's bounds for `W = Tⁿ` and the satisfaction flags.
/// Degenerate sets are counted by clusters; the Betti-sum comparison is
/// only asserted when all points are nondegenerate.
pub fn count_report(
    problem: &ReducedProblem,
    records: &[CriticalPointRecord],
    params: &SearchParams,
) -> CountReport {
    let n = problem.w_dim();
    let sb_bound = 1usize << n;
    let cl_bound = n + 1;
    let all_nondegenerate = !records.is_empty() && records.iter().all(|r| r.nondegenerate);
    let clusters = if all_nondegenerate || records.is_empty() {
        None
    } else {
        Some(cluster_count(problem, records, params.dedup_radius))
    };
    let effective = clusters.unwrap_or(records.len());
    CountReport {
        found: records.len(),
        sb_bound,
        cl_bound,
        all_nondegenerate,
        satisfied_sb: all_nondegenerate && records.len() >= sb_bound,
        satisfied_cl: effective >= cl_bound,
        clusters,
    }
}

/// Multistart search: returns deduplicated, classified records.
/// Non-convergent seeds are dropped and counted in the diagnostics.
pub fn find_critical_points(
    problem: &ReducedProblem,
    params: &SearchParams,
) -> Result<SearchOutcome> {
    let outcome = search_pass(problem, params, 1)?;
    let report = count_report(problem, &outcome.records, params);
    if params.escalate && !(report.satisfied_sb || !report.all_nondegenerate) {
        // Betti bound missed on a clean nondegenerate run: one denser pass.
        let second = search_pass(problem, params, 2)?;
        let mut merged = outcome.records;
        merged.extend(second.records);
        let records = dedup_records(problem, merged, params.dedup_radius);
        let report = count_report(problem, &records, params);
        return Ok(SearchOutcome {
            records,
            report,
            diagnostics: SearchDiagnostics {
                seeds_run: outcome.diagnostics.seeds_run + second.diagnostics.seeds_run,
                converged: outcome.diagnostics.converged + second.diagnostics.converged,
                dropped: outcome.diagnostics.dropped + second.diagnostics.dropped,
                escalated: true,
                newton_steps_total: outcome.diagnostics.newton_steps_total
                    + second.diagnostics.newton_steps_total,
            },
        });
    }
    Ok(SearchOutcome { report, ..outcome })
}

/// Run Newton plus classification for one seed; `None` when dropped.
fn process_seed(
    problem: &ReducedProblem,
    seed_idx: usize,
    seed: &DVector<f64>,
    params: &SearchParams,
) -> Result<(usize, Option<CriticalPointRecord>)> {
    match newton_from_seed(problem, seed, params)? {
        Some((x, steps)) => {
            let record = classify(problem, &x, seed_idx, params)?;
            Ok((steps, Some(record)))
        }
        None => Ok((0, None)),
    }
}

#[cfg(feature = "std")]
fn map_seeds(
    problem: &ReducedProblem,
    seeds: &[DVector<f64>],
    params: &SearchParams,
) -> Result<Vec<(usize, Option<CriticalPointRecord>)>> {
    let threads = params.threads.max(1).min(seeds.len().max(1));
    if threads <= 1 {
        return seeds
            .iter()
            .enumerate()
            .map(|(i, s)| process_seed(problem, i, s, params))
            .collect();
    }
    let chunk = seeds.len().div_ceil(threads);
    let mut slots: Vec<Result<(usize, Option<CriticalPointRecord>)>> = Vec::new();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (c, batch) in seeds.chunks(chunk).enumerate() {
            let offset = c * chunk;
            handles.push(scope.spawn(move || {
                batch
                    .iter()
                    .enumerate()
                    .map(|(i, s)| process_seed(problem, offset + i, s, params))
                    .collect::<Vec<_>>()
            }));
        }
        for handle in handles {
            slots.extend(handle.join().expect("search worker panicked"));
        }
    });
    slots.into_iter().collect()
}

#[cfg(not(feature = "std"))]
fn map_seeds(
    problem: &ReducedProblem,
    seeds: &[DVector<f64>],
    params: &SearchParams,
) -> Result<Vec<(usize, Option<CriticalPointRecord>)>> {
    seeds
        .iter()
        .enumerate()
        .map(|(i, s)| process_seed(problem, i, s, params))
        .collect()
}

fn search_pass(
    problem: &ReducedProblem,
    params: &SearchParams,
    factor: usize,
) -> Result<SearchOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed.wrapping_add(factor as u64 - 1));
    let seeds = make_seeds(problem, params, factor, &mut rng);
    let mut diagnostics = SearchDiagnostics {
        seeds_run: seeds.len(),
        ..Default::default()
    };
    let mut raw = Vec::new();
    for (steps, record) in map_seeds(problem, &seeds, params)? {
        diagnostics.newton_steps_total += steps;
        match record {
            Some(record) if record.residual < params.residual_tol => {
                diagnostics.converged += 1;
                raw.push(record);
            }
            _ => diagnostics.dropped += 1,
        }
    }
    let records = dedup_records(problem, raw, params.dedup_radius);
    let report = count_report(problem, &records, params);
    Ok(SearchOutcome { records, report, diagnostics })
}

/// Re-run Newton at truncation `N + n_plus` from the embedded point and
/// compare: accepted when the displacement is below `1e-5` and the
/// residual does not increase beyond `1e-7`.
pub fn refine_and_verify(
    problem: &ReducedProblem,
    record: &CriticalPointRecord,
    n_plus: usize,
    params: &SearchParams,
) -> Result<RefineReport> {
    let fine = problem.refined(n_plus)?;
    let embedded = fine.embed_base(problem, &record.base)?;
    let start = fine.reduce(&embedded)?;
    let (refined_base, _) = if start.grad.norm() < params.grad_tol {
        (embedded.clone(), 0)
    } else {
        newton_from_seed(&fine, &embedded, params)?.ok_or(CoreError::RefinementDiverged)?
    };
    let refined_point = fine.reduce(&refined_base)?;

    let n = fine.w_dim();
    let mean_moved = fine.lattice().distance_mod(
        &embedded.rows(0, n).into_owned(),
        &refined_base.rows(0, n).into_owned(),
    );
    let fiber_moved = (embedded.rows(n, embedded.len() - n)
        - refined_base.rows(n, refined_base.len() - n))
    .norm();
    let displacement = mean_moved + fiber_moved;
    let accepted =
        displacement < 1e-5 && refined_point.residual <= record.residual + 1e-7;
    Ok(RefineReport {
        displacement,
        residual_before: record.residual,
        residual_after: refined_point.residual,
        accepted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::CliffordModule;
    use crate::hamiltonian::{TimeDomain, TrigHamiltonian, TrigTerm};
    use crate::lattice::Lattice;
    use alloc::sync::Arc;
    use alloc::vec;

    fn t2_problem(eps: f64) -> ReducedProblem {
        let module = Arc::new(CliffordModule::build(1, false).unwrap());
        let h = TrigHamiltonian::new(
            2,
            TimeDomain::Torus(1),
            vec![TrigTerm::cosine(vec![1, 0], eps), TrigTerm::cosine(vec![0, 1], eps)],
        )
        .unwrap();
        ReducedProblem::new(module, h, Lattice::identity(2), None, Default::default()).unwrap()
    }

    #[test]
    fn t2_benchmark_finds_exactly_four_points() {
        let problem = t2_problem(0.05);
        let params = SearchParams::default();
        let outcome = find_critical_points(&problem, &params).unwrap();
        assert_eq!(outcome.records.len(), 4, "diagnostics: {:?}", outcome.diagnostics);
        assert!(outcome.report.all_nondegenerate);
        assert!(outcome.report.satisfied_sb);
        assert!(outcome.report.satisfied_cl);
        assert_eq!(outcome.report.sb_bound, 4);
        assert_eq!(outcome.report.cl_bound, 3);

        // The constant maps at H's critical points {0, ½}² are all found.
        for target in [[0.0, 0.0], [0.0, 0.5], [0.5, 0.0], [0.5, 0.5]] {
            let target = DVector::from_column_slice(&target);
            let hit = outcome.records.iter().any(|r| {
                problem
                    .lattice()
                    .distance_mod(&r.base.rows(0, 2).into_owned(), &target)
                    < 1e-8
                    && r.base.rows(2, r.base.len() - 2).norm() < 1e-8
            });
            assert!(hit, "missing constant point at {target:?}");
        }
        for record in &outcome.records {
            assert!(record.residual < 1e-10);
            assert!(record.grad_norm < params.grad_tol);
            assert!(record.nondegenerate);
        }
        // Morse indices of ±ε(cos+cos): all four sign patterns appear.
        let mut indices: Vec<usize> =
            outcome.records.iter().map(|r| r.morse_index_window).collect();
        indices.sort_unstable();
        assert_eq!(indices.iter().filter(|&&i| i % 2 == 0).count() % 2, 0);
    }

    #[test]
    fn determinism_of_search() {
        let problem = t2_problem(0.05);
        let params = SearchParams { seed_count: 9, ..Default::default() };
        let a = find_critical_points(&problem, &params).unwrap();
        let b = find_critical_points(&problem, &params).unwrap();
        assert_eq!(a.records.len(), b.records.len());
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.base, y.base);
            assert_eq!(x.action, y.action);
            assert_eq!(x.basin_seed, y.basin_seed);
        }
    }

    #[test]
    fn dedup_is_sound() {
        let problem = t2_problem(0.05);
        let params = SearchParams::default();
        let outcome = find_critical_points(&problem, &params).unwrap();
        for i in 0..outcome.records.len() {
            for j in (i + 1)..outcome.records.len() {
                let d = record_distance(&problem, &outcome.records[i], &outcome.records[j]);
                assert!(d >= params.dedup_radius, "records {i},{j} at distance {d}");
            }
        }
    }

    #[test]
    fn zero_hamiltonian_reports_degenerate_family() {
        let module = Arc::new(CliffordModule::build(1, false).unwrap());
        let h = TrigHamiltonian::zero(2, TimeDomain::Torus(1));
        let problem =
            ReducedProblem::new(module, h, Lattice::identity(2), Some(2), Default::default())
                .unwrap();
        let params = SearchParams { seed_count: 4, escalate: false, ..Default::default() };
        let outcome = find_critical_points(&problem, &params).unwrap();
        assert!(!outcome.records.is_empty());
        assert!(outcome.records.iter().all(|r| !r.nondegenerate));
        assert!(!outcome.report.all_nondegenerate);
        assert!(!outcome.report.satisfied_sb);
        // Every constant map is critical: the family collapses to one cluster.
        assert_eq!(outcome.report.clusters, Some(1));
    }

    #[test]
    fn refine_accepts_exact_solutions() {
        let problem = t2_problem(0.05);
        let params = SearchParams::default();
        let outcome = find_critical_points(&problem, &params).unwrap();
        let record = &outcome.records[0];
        let report = refine_and_verify(&problem, record, 2, &params).unwrap();
        assert!(report.accepted, "{report:?}");
        assert!(report.displacement < 1e-12);
    }

    #[test]
    fn refine_rejects_sloppy_points() {
        // A fake "solution" — a true point displaced by 1e-3, as a loose
        // gradient tolerance could leave behind — is killed by refinement:
        // the fine Newton run walks back to the true point, exposing a
        // displacement far above the 1e-5 acceptance threshold.
        let problem = t2_problem(0.05);
        let sloppy = SearchParams { grad_tol: 1e-2, residual_tol: 1.0, ..Default::default() };
        let fake_base =
            problem.base_from_mean(&DVector::from_column_slice(&[0.5 + 1e-3, 0.5 - 1e-3]));
        let record = classify(&problem, &fake_base, 0, &sloppy).unwrap();
        assert!(record.grad_norm > 1e-4, "perturbed point must not be critical");
        let strict = SearchParams::default();
        match refine_and_verify(&problem, &record, 2, &strict) {
            Ok(r) => {
                assert!(!r.accepted, "fake point must not survive: {r:?}");
                assert!(r.displacement > 1e-5);
            }
            Err(CoreError::RefinementDiverged) => {}
            Err(other) => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn classification_stable_under_truncation_refinement() {
        // The smallest |eigenvalue| of the Hessian (the classification
        // quantity) moves by < 1e-4 when N grows by 2: new fiber blocks
        // only add eigenvalues of magnitude ≥ 2πN.
        let problem = t2_problem(0.05);
        let params = SearchParams::default();
        let outcome = find_critical_points(&problem, &params).unwrap();
        let fine = problem.refined(2).unwrap();
        for record in &outcome.records {
            let embedded = fine.embed_base(&problem, &record.base).unwrap();
            let refined = classify(&fine, &embedded, record.basin_seed, &params).unwrap();
            assert!(
                (refined.hessian_min_abs_eigenvalue - record.hessian_min_abs_eigenvalue).abs()
                    < 1e-4,
                "min |eig| moved from {} to {}",
                record.hessian_min_abs_eigenvalue,
                refined.hessian_min_abs_eigenvalue
            );
            assert_eq!(refined.nondegenerate, record.nondegenerate);
        }
    }

    #[test]
    fn count_report_bound_arithmetic() {
        let problem = t2_problem(0.05);
        let params = SearchParams::default();
        let outcome = find_critical_points(&problem, &params).unwrap();
        // 4 nondegenerate points on T²: SB = 4 met, CL+1 = 3 met.
        let report = count_report(&problem, &outcome.records, &params);
        assert!(report.satisfied_sb && report.satisfied_cl);
        // Dropping one point loses SB but keeps CL+1.
        let partial = &outcome.records[..3];
        let report = count_report(&problem, partial, &params);
        assert!(!report.satisfied_sb);
        assert!(report.satisfied_cl);
    }
}
