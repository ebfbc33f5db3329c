use css_core::ground_state::{minimize_gamma_star, MinimizerResult};

use super::{append_csv, ensure_dir, minimizer_options, require, tag};
use crate::cli::GammaStarArgs;
use crate::error::{exit, Result};
use crate::snapshot::Snapshot;

pub fn gamma_star(args: &GammaStarArgs, double_box: bool) -> Result<i32> {
    require(args.beta >= 0.0 && args.beta.is_finite(), "--beta must be finite and >= 0")?;
    let grid = args.grid.grid(double_box)?;
    let opts = minimizer_options(&args.minimizer, args.gauge)?;
    ensure_dir(&args.out)?;

    let r = minimize_gamma_star(args.beta, &grid, &opts)?;
    println!("beta = {}", r.beta);
    println!("gamma_star = {:.10}", r.gamma_star);
    println!("lambda = {:.6e}", r.lambda);
    println!("residual = {:.3e}", r.el_residual);
    println!("iterations = {}", r.iterations);
    println!("converged = {}", r.converged);

    append_csv(&args.out.join("gamma_star.csv"), MinimizerResult::CSV_HEADER, &r.csv_row())?;
    Snapshot::from_field(&r.minimizer, 0.0, r.beta, r.gamma_star, 0.0)
        .write(&args.out.join(format!("minimizer_beta_{}.cssf", tag(r.beta))))?;

    if r.converged {
        Ok(exit::OK)
    } else {
        eprintln!("css-lab: minimizer did not reach its residual tolerance");
        Ok(exit::ABORTED)
    }
}
