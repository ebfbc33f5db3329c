use css_core::field;
use css_core::functionals::{audit_inequalities, AuditReport};
use css_core::ground_state::{minimize_gamma_star, MinimizerOptions};
use css_core::make_grid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ensure_dir, require, write_csv};
use crate::cli::AuditArgs;
use crate::error::{exit, LabError, Result};

pub fn audit(args: &AuditArgs, double_box: bool) -> Result<i32> {
    require(args.trials >= 1, "--trials must be at least 1")?;
    require(
        args.beta.iter().all(|b| b.is_finite() && *b >= 0.0),
        "--beta values must be finite and >= 0",
    )?;
    let (n, l) = if double_box {
        (2 * args.n, 2.0 * args.length)
    } else {
        (args.n, args.length)
    };
    let grid = make_grid(n, l).map_err(|e| LabError::Usage(e.to_string()))?;
    let gauge = args.gauge.options();
    ensure_dir(&args.out)?;

    // the sharp Gagliardo-Nirenberg constant on this grid
    let opts = MinimizerOptions {
        gauge,
        ..MinimizerOptions::default()
    };
    let townes = minimize_gamma_star(0.0, &grid, &opts)?;
    if !townes.converged {
        eprintln!("css-lab: zero-field minimizer did not converge");
        return Ok(exit::ABORTED);
    }
    let gn = townes.gamma_star;

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut cases = Vec::with_capacity(args.trials * args.beta.len());
    for trial in 0..args.trials {
        let mass = rng.gen_range(0.2..3.0);
        let psi = field::random_smooth(&grid, &mut rng).with_mass(mass)?;
        for &beta in &args.beta {
            cases.push((trial, beta, psi.clone()));
        }
    }
    let reports: Vec<(usize, f64, css_core::Result<AuditReport>)> = cases
        .into_par_iter()
        .map(|(trial, beta, psi)| (trial, beta, audit_inequalities(&psi, beta, gn, &gauge)))
        .collect();

    let mut rows = Vec::new();
    let mut failures = 0usize;
    let mut worst_hardy: f64 = 0.0;
    for (trial, beta, rep) in reports {
        let rep = rep?;
        failures += rep.failures();
        worst_hardy = worst_hardy.max(rep.hardy_ratio());
        for c in rep.csv_rows() {
            rows.push(format!("{trial},{beta},{c}"));
        }
    }
    write_csv(
        &args.out.join("audit.csv"),
        &format!("trial,beta,{}", AuditReport::CSV_HEADER),
        &rows,
    )?;
    println!("gn_constant = {gn:.10}");
    println!("checks = {}", rows.len());
    println!("failures = {failures}");
    println!("max_hardy_ratio = {worst_hardy:.6}");
    Ok(if failures == 0 { exit::OK } else { exit::DISAGREE })
}
