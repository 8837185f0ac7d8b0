//! Command-line driver: configuration-driven verification runs, critical
//! point searches and spectrum dumps.
//!
//! ```text
//! diraction verify   --config cfg.json [--out DIR] [--seed N] [--threads N]
//! diraction solve    --config cfg.json [--out DIR] [--seed N] [--threads N]
//! diraction spectrum --config cfg.json [--out DIR] [--k-max N]
//! ```
//!
//! Exit codes: 0 success, 1 configuration error, 2 failed verification
//! check, 3 contraction certificate impossible at the configured
//! truncation.

mod checks;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use diraction_core::solver::find_critical_points;
use diraction_core::torus::{dirac_block_inverse, TorusModeSet};
use diraction_core::su2::{dirac_level_matrix, Su2Quadrature};
use diraction_core::CoreError;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "diraction", version, about = "Spectral critical-point solver for Dirac-type action functionals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the block/oracle/norm/Parseval verification suite.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Search for critical points and write points/summary/report files.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (created if missing). Default: `out`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the configured RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Dump per-mode eigenvalues and inverse norms of the Dirac blocks.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Largest mode degree to report.
        #[arg(long, default_value_t = 5)]
        k_max: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Verify { config, out, seed, threads: _ } => cmd_verify(&config, out, seed),
        Command::Solve { config, out, seed, threads } => {
            cmd_solve(&config, out.unwrap_or_else(|| PathBuf::from("out")), seed, threads)
        }
        Command::Spectrum { config, out, k_max } => cmd_spectrum(&config, out, k_max),
    };
    match code {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn cmd_verify(
    config_path: &PathBuf,
    out_dir: Option<PathBuf>,
    seed: Option<u64>,
) -> anyhow::Result<ExitCode> {
    let config = RunConfig::from_path(config_path)?;
    // A corrupted module is a failed verification, not a config error:
    // report the violated identity and exit 2.
    if let Err(err) = config.build_module() {
        if let Some(CoreError::InvalidModule(msg)) = err.downcast_ref::<CoreError>() {
            println!("{:<44} {:>12} {:>10}   status", "check", "deviation", "tolerance");
            println!(
                "{:<44} {:>12} {:>10}   FAIL ({msg})",
                "module: algebraic identities", "-", "1e-12"
            );
            return Ok(ExitCode::from(2));
        }
        return Err(err);
    }
    let problem = config.build_problem()?;
    let rows = checks::run_checks(&problem, seed.unwrap_or(config.rng_seed));
    let (table, all_pass) = checks::render_table(&rows);
    print!("{table}");
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("verify.txt"), table)?;
    }
    Ok(ExitCode::from(if all_pass { 0 } else { 2 }))
}

fn cmd_solve(
    config_path: &PathBuf,
    out_dir: PathBuf,
    seed: Option<u64>,
    threads: usize,
) -> anyhow::Result<ExitCode> {
    let total_start = Instant::now();
    let config = RunConfig::from_path(config_path)?;
    let setup_start = Instant::now();
    let problem = match config.build_problem() {
        Ok(problem) => problem,
        Err(err) => {
            if matches!(
                err.downcast_ref::<CoreError>(),
                Some(CoreError::ContractionViolated { .. })
            ) {
                eprintln!("error: {err:#}");
                eprintln!("hint: raise \"truncation\" or set it to \"auto\"");
                return Ok(ExitCode::from(3));
            }
            return Err(err);
        }
    };
    let setup_s = setup_start.elapsed().as_secs_f64();
    let params = config.search_params(seed, threads);

    let search_start = Instant::now();
    let outcome = find_critical_points(&problem, &params)?;
    let search_s = search_start.elapsed().as_secs_f64();

    std::fs::create_dir_all(&out_dir)?;
    output::write_points(&out_dir.join("points.json"), &problem, &outcome.records)?;
    output::write_summary(&out_dir.join("summary.csv"), &outcome.records)?;
    let report = output::Report {
        tool: output::ToolInfo { name: "diraction", version: env!("CARGO_PKG_VERSION") },
        config: &config,
        rng_seed: params.rng_seed,
        derived: output::DerivedInfo {
            n_trunc: problem.n_trunc(),
            n_tail: problem.n_tail(),
            contraction_factor: problem.contraction_factor(),
            auto_truncation_rho: problem.options().rho_auto,
            base_dim: problem.base_dim(),
            target_dim: problem.w_dim(),
        },
        count: &outcome.report,
        diagnostics: &outcome.diagnostics,
        refine: Vec::new(),
        timings: output::Timings {
            setup_s,
            search_s,
            refine_s: 0.0,
            total_s: total_start.elapsed().as_secs_f64(),
        },
    };
    output::write_report(&out_dir.join("report.json"), &report)?;

    let count = &outcome.report;
    println!(
        "found {} point(s); SB bound {} ({}), CL+1 bound {} ({}){}",
        count.found,
        count.sb_bound,
        if count.all_nondegenerate {
            if count.satisfied_sb { "met" } else { "NOT met: search incomplete or bound violated" }
        } else {
            "not asserted (degenerate points present)"
        },
        count.cl_bound,
        if count.satisfied_cl { "met" } else { "NOT met" },
        match count.clusters {
            Some(c) => format!("; {c} degenerate cluster(s)"),
            None => String::new(),
        }
    );
    println!("outputs in {}", out_dir.display());
    Ok(ExitCode::from(0))
}

fn cmd_spectrum(
    config_path: &PathBuf,
    out_dir: Option<PathBuf>,
    k_max: usize,
) -> anyhow::Result<ExitCode> {
    let config = RunConfig::from_path(config_path)?;
    let module = config.build_module()?;
    let mut lines = Vec::new();
    match config.domain {
        config::DomainTag::Torus => {
            lines.push("k,norm,eig_plus,eig_minus,inverse_norm,predicted,deviation".to_string());
            lines.push("0,0,kernel mode,kernel mode,,,".to_string());
            let ball = TorusModeSet::ball(module.rank(), k_max + 1);
            for k in ball.canonical_modes() {
                let nsq: i64 = k.iter().map(|c| c * c).sum();
                let norm = (nsq as f64).sqrt();
                let inv = dirac_block_inverse(&module, k)?;
                let inv_norm = inv
                    .symmetric_eigenvalues()
                    .iter()
                    .fold(0.0f64, |acc, ev| acc.max(ev.abs()));
                let predicted = 1.0 / (std::f64::consts::TAU * norm);
                let key = k
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(" ");
                lines.push(format!(
                    "({key}),{norm},{},{},{inv_norm},{predicted},{:e}",
                    std::f64::consts::TAU * norm,
                    -std::f64::consts::TAU * norm,
                    (inv_norm - predicted).abs()
                ));
            }
        }
        config::DomainTag::Su2 => {
            lines.push("k,eig_plus,eig_minus,inverse_norm,predicted,deviation".to_string());
            lines.push("0,kernel mode,kernel mode,,,".to_string());
            for k in 1..=k_max {
                let m = dirac_level_matrix(&module, k);
                let eigs = m.symmetric_eigenvalues();
                let max = eigs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                let min = eigs.iter().fold(f64::INFINITY, |a, &b| a.min(b));
                let min_abs = eigs.iter().fold(f64::INFINITY, |a, &b| a.min(b.abs()));
                let inv_norm = 1.0 / min_abs;
                let predicted = 1.0 / k as f64;
                lines.push(format!(
                    "{k},{max},{min},{inv_norm},{predicted},{:e}",
                    (inv_norm - predicted).abs()
                ));
            }
        }
    }
    for line in &lines {
        println!("{line}");
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("spectrum.csv"), lines.join("\n") + "\n")?;
        // Haar quadrature nodes for external verification (SU(2) only).
        if config.domain == config::DomainTag::Su2 {
            let quad = Su2Quadrature::for_band(2 * k_max);
            let mut text = String::from("w,x,y,z,weight\n");
            for (node, weight) in quad.nodes().iter().zip(quad.weights()) {
                let [w, x, y, z] = node.components();
                text.push_str(&format!("{w},{x},{y},{z},{weight}\n"));
            }
            std::fs::write(dir.join("quadrature.csv"), text)?;
        }
    }
    Ok(ExitCode::from(0))
}
