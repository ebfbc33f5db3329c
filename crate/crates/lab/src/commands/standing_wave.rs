use css_core::evolution::{standing_wave_error, zero_energy_data};
use css_core::ground_state::{minimize_gamma_star, stationary_scale};
use css_core::make_grid;

use super::{append_csv, ensure_dir, minimizer_options, require, tag};
use crate::cli::StandingWaveArgs;
use crate::error::{exit, LabError, Result};
use crate::snapshot::Snapshot;

pub const CSV_HEADER: &str =
    "beta,mass,theta,gamma,phase_err,lambda_measured,lambda_formula,kinetic_scale,static";

pub fn standing_wave(args: &StandingWaveArgs, double_box: bool) -> Result<i32> {
    require(args.beta >= 0.0 && args.beta.is_finite(), "--beta must be finite and >= 0")?;
    require(args.mass > 0.0 && args.mass.is_finite(), "--mass must be positive")?;
    require(args.t_final >= 0.0 && args.t_final.is_finite(), "--t-final must be >= 0")?;
    require(args.dt > 0.0 && args.dt.is_finite(), "--dt must be positive")?;
    require(args.scale_tol > 0.0, "--scale-tol must be positive")?;
    let (n, l) = if double_box {
        (2 * args.n, 2.0 * args.length)
    } else {
        (args.n, args.length)
    };
    let grid = make_grid(n, l).map_err(|e| LabError::Usage(e.to_string()))?;
    let opts = minimizer_options(&args.minimizer, args.gauge)?;
    ensure_dir(&args.out)?;

    let theta = args.beta * args.mass;
    let base = minimize_gamma_star(theta, &grid, &opts)?;
    if !base.converged {
        eprintln!("css-lab: minimizer at theta = {theta} did not converge");
        return Ok(exit::ABORTED);
    }
    let min = stationary_scale(&base, &grid, &opts, args.scale_tol)?;
    if !min.converged {
        eprintln!(
            "css-lab: no stationary dilation found at theta = {theta} (scale multiplier {:.3e})",
            min.scale_multiplier
        );
        return Ok(exit::ABORTED);
    }
    let (psi0, params) = zero_energy_data(&min, args.beta, args.mass, args.gauge.options());
    let r = standing_wave_error(&psi0, &params, args.t_final, args.dt)?;

    println!("theta = {theta}");
    println!("gamma = {:.10}", params.gamma);
    println!("energy = {:.3e}", r.energy);
    println!("phase_err = {:.6e}", r.phase_err);
    println!("lambda_measured = {:.6e}", r.lambda_measured);
    println!("lambda_formula = {:.6e}", r.lambda_formula);
    println!("kinetic_scale = {:.6e}", r.kinetic_scale);
    println!("verdict = {}", if r.is_static { "static" } else { "non-static" });

    let row = format!(
        "{},{},{},{:.10e},{:.6e},{:.6e},{:.6e},{:.6e},{}",
        args.beta,
        args.mass,
        theta,
        params.gamma,
        r.phase_err,
        r.lambda_measured,
        r.lambda_formula,
        r.kinetic_scale,
        r.is_static
    );
    append_csv(&args.out.join("standing_wave.csv"), CSV_HEADER, &row)?;
    Snapshot::from_field(&psi0, 0.0, params.beta, params.gamma, 0.0)
        .write(&args.out.join(format!("standing_wave_theta_{}.cssf", tag(theta))))?;
    Ok(exit::OK)
}
