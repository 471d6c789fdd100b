use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use cdft_core::config::RunConfig;
use cdft_core::counterexample::{build_family, epsilon_sweep, refinement_study, CounterexampleReport, SweepOptions};
use cdft_core::densities::{densities_of, paramagnetic_current, DensityPair};
use cdft_core::eigensolve::lowest_eigenpairs;
use cdft_core::error::{CdftError, Result};
use cdft_core::field_io::{read_scalar, read_vector, write_atomic, write_scalar, write_vector};
use cdft_core::functionals::{e_full, DEFAULT_BRACKET_TOL};
use cdft_core::inversion::{membership_check, DEFAULT_IMAG_TOL};
use cdft_core::operators::hamiltonian;
use serde::Serialize;
use serde_json::json;

use crate::Outcome;

fn load_config(path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CdftError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut config = RunConfig::from_json(&text)?;
    if let Some(out) = out {
        config.output_dir = out;
    }
    if let Some(seed) = seed {
        config.solver.seed = seed;
    }
    Ok(config)
}

/// `{metadata, config, report}`; only `metadata.generated_at` varies between
/// identical runs.
fn envelope(config: &RunConfig, report: impl Serialize) -> Result<Vec<u8>> {
    let generated_at = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let doc = json!({
        "metadata": {"generated_at": generated_at, "version": env!("CARGO_PKG_VERSION")},
        "config": config,
        "report": report,
    });
    let mut bytes = serde_json::to_vec_pretty(&doc)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn output_dir(config: &RunConfig) -> Result<PathBuf> {
    fs::create_dir_all(&config.output_dir)?;
    Ok(config.output_dir.clone())
}

#[derive(Serialize)]
struct SolveReport {
    alpha: f64,
    #[serde(rename = "B")]
    b: f64,
    eigenvalues: Vec<f64>,
    residuals: Vec<f64>,
    gap: Option<f64>,
    iterations: usize,
    operator_applications: usize,
}

pub fn solve(config_path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<Outcome> {
    let config = load_config(config_path, out, seed)?;
    let (grid, spec) = config.validate_solve()?;
    let opts = config.solver_options();
    let pair = spec.potentials(grid);
    let eig = lowest_eigenpairs(&hamiltonian(&pair), 2, opts.tol, opts.max_iter, opts.seed)?;
    let ground = &eig.eigenvectors[0];
    let d = densities_of(ground, &pair.vector, pair.label.clone())?;

    let dir = output_dir(&config)?;
    write_scalar(&dir.join("rho.csv"), d.rho())?;
    write_vector(&dir.join("jp.csv"), &paramagnetic_current(ground))?;
    write_vector(&dir.join("j.csv"), d.current())?;
    let report = SolveReport {
        alpha: spec.alpha,
        b: spec.b,
        eigenvalues: eig.eigenvalues.clone(),
        residuals: eig.residuals.clone(),
        gap: eig.gap,
        iterations: eig.iterations,
        operator_applications: eig.operator_applications,
    };
    write_atomic(&dir.join("eigenvalues.json"), &envelope(&config, &report)?)?;

    println!("grid n={} L={}  alpha={} B={}", grid.n(), grid.half_extent(), spec.alpha, spec.b);
    for (k, (e, r)) in eig.eigenvalues.iter().zip(&eig.residuals).enumerate() {
        println!("  e[{k}] = {e:.10}   residual {r:.2e}");
    }
    println!("wrote {}", dir.display());
    Ok(Outcome::Success)
}

fn sweep_csv(report: &CounterexampleReport) -> Vec<u8> {
    let mut s = String::from("eps,f_hk,e_tilde,e_full,correction,in_A1,discrepancy\n");
    for r in &report.rows {
        s.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}\n",
            r.eps, r.f_hk, r.e_tilde, r.e_full, r.correction, r.in_a1, r.discrepancy
        ));
    }
    s.into_bytes()
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn print_table(report: &CounterexampleReport) {
    println!(
        "alpha={} B={} Btilde={}  eps_max={}  e0={:.6} (certified)",
        report.alpha, report.b, report.b_tilde, report.eps_max, report.e0
    );
    for c in &report.certifications {
        println!(
            "  ground state at B={:<6} energy {:.6}  gap {:.4}  overlap {:.8}  {}",
            c.field,
            c.ground_energy,
            c.gap,
            c.overlap,
            mark(c.is_ground)
        );
    }
    println!("{:>8} {:>12} {:>12} {:>12} {:>12} {:>6} {:>12}", "eps", "F_HK", "E~", "E", "correction", "in_A1", "discrepancy");
    for r in &report.rows {
        println!(
            "{:>8.4} {:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>6} {:>12.3e}",
            r.eps, r.f_hk, r.e_tilde, r.e_full, r.correction, r.in_a1, r.discrepancy
        );
    }
    let v = &report.verdicts;
    println!("  {}  E~ strictly decreasing at the predicted rate", mark(v.e_tilde_strictly_decreasing));
    println!("  {}  E constant at e0", mark(v.e_full_constant_at_e0));
    println!("  {}  F_HK constant (spread {:.1e})", mark(v.f_hk_constant), report.f_hk_spread);
    println!("  {}  every pair certified representable", mark(report.conforming));
}

pub fn counterexample(config_path: &Path, out: Option<PathBuf>, seed: Option<u64>, refine: bool) -> Result<Outcome> {
    let config = load_config(config_path, out, seed)?;
    let (grid, eps) = config.validate_counterexample()?;
    let f = &config.family;
    let b_tilde = f.b_tilde.expect("validated");
    let opts = SweepOptions {
        solver: config.solver_options(),
        ..SweepOptions::default()
    };
    let family = build_family(grid, f.alpha, f.b, b_tilde, &opts.solver)?;
    let report = epsilon_sweep(&family, &eps, &opts)?;
    let refinement = if refine {
        Some(refinement_study(grid.half_extent(), grid.n(), f.alpha, f.b, &eps, opts.bracket_tol)?)
    } else {
        None
    };

    let dir = output_dir(&config)?;
    let doc = json!({"counterexample": &report, "refinement": &refinement});
    write_atomic(&dir.join("report.json"), &envelope(&config, &doc)?)?;
    write_atomic(&dir.join("sweep.csv"), &sweep_csv(&report))?;

    print_table(&report);
    let mut passed = report.passed();
    if let Some(r) = &refinement {
        println!(
            "  {}  refinement n={} -> {}: worst discrepancy {:.3e} -> {:.3e}, ratio {:.2}, order {:.2}",
            mark(r.passed),
            r.n_coarse,
            r.n_fine,
            r.worst_coarse,
            r.worst_fine,
            r.ratio,
            r.order
        );
        passed &= r.passed;
    }
    println!("wrote {}", dir.display());
    Ok(if passed { Outcome::Success } else { Outcome::VerdictFailed })
}

pub fn functional(config_path: &Path, out: Option<PathBuf>, seed: Option<u64>, rho: &Path, j: &Path) -> Result<Outcome> {
    let config = load_config(config_path, out, seed)?;
    let (_, spec) = config.validate_solve()?;
    let rho_field = read_scalar(rho)?;
    let j_field = read_vector(j)?;
    let grid = *rho_field.grid();
    let d = DensityPair::new(rho_field, j_field, format!("{} + {}", rho.display(), j.display()))?;
    let p0 = spec.potentials(grid);
    let report = e_full(&d, &p0, DEFAULT_BRACKET_TOL)?;
    let membership = membership_check(&d, DEFAULT_IMAG_TOL, &config.solver_options())?;

    let doc = json!({
        "functional": &report,
        "membership": {
            "in_A1": membership.in_a1,
            "e0": membership.e0,
            "imag_residual": membership.imag_residual,
            "reason": membership.reason,
        },
    });
    let dir = output_dir(&config)?;
    write_atomic(&dir.join("functional.json"), &envelope(&config, &doc)?)?;

    println!("reference potentials: {}", p0.label);
    println!("  F_HK        {:.10}", report.f_hk);
    println!("  E~          {:.10}", report.e_tilde);
    println!("  correction  {:.10}", report.correction);
    println!("  E           {:.10}", report.e_full);
    println!("  <psi,H psi> {:.10}  (discrepancy {:.3e})", report.cross_check, report.discrepancy);
    println!("  bracket zero: {}{}", report.bracket_zero, if report.bracket.near_threshold { " (near threshold)" } else { "" });
    match &membership.reason {
        None => println!("  in_A1: {}", membership.in_a1),
        Some(r) => println!("  in_A1: {} ({r})", membership.in_a1),
    }
    println!("wrote {}", dir.display());
    Ok(Outcome::Success)
}
