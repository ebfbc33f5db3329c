use css_core::functionals::lambda_beta;
use css_core::ground_state::{default_derivative_step, gamma_star_derivative, lambda_identity_from, minimize_gamma_star};

use super::{append_csv, ensure_dir, minimizer_options, require};
use crate::cli::LambdaArgs;
use crate::error::{exit, Result};

pub const CSV_HEADER: &str = "beta,lambda,lhs,rhs,quartic,rel_gap,gamma_star,derivative";

pub fn lambda(args: &LambdaArgs, double_box: bool) -> Result<i32> {
    require(args.beta >= 0.0 && args.beta.is_finite(), "--beta must be finite and >= 0")?;
    let h = args.h.unwrap_or_else(|| default_derivative_step(args.beta));
    require(h > 0.0 && h.is_finite(), "--h must be positive")?;
    let grid = args.grid.grid(double_box)?;
    let opts = minimizer_options(&args.minimizer, args.gauge)?;
    ensure_dir(&args.out)?;

    let base = minimize_gamma_star(args.beta, &grid, &opts)?;
    let lambda = lambda_beta(&base.minimizer, args.beta, &opts.gauge)?;
    let d = gamma_star_derivative(args.beta, h, &grid, &opts, Some(&base))?;
    let id = lambda_identity_from(&base, &d, &opts.gauge);

    println!("beta = {}", args.beta);
    println!("lambda_beta = {lambda:.8e}");
    println!("gamma_star = {:.10}", id.gamma_star);
    println!("gamma_star_derivative = {:.8}", id.derivative);
    println!("identity_lhs = {:.8e}", id.lhs);
    println!("identity_rhs = {:.8e}", id.rhs);
    println!("identity_rel_gap = {:.3e}", id.rel_gap);
    println!("converged = {}", id.converged);

    let row = format!(
        "{},{:.10e},{:.10e},{:.10e},{:.10e},{:.6e},{:.10e},{:.10e}",
        args.beta, lambda, id.lhs, id.rhs, id.quartic, id.rel_gap, id.gamma_star, id.derivative
    );
    append_csv(&args.out.join("lambda.csv"), CSV_HEADER, &row)?;
    if id.converged {
        Ok(exit::OK)
    } else {
        eprintln!("css-lab: a minimizer did not reach its residual tolerance");
        Ok(exit::ABORTED)
    }
}
