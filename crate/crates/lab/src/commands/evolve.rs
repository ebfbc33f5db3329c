use css_core::evolution::{evolve_with, Classification, DiagnosticsSeries, Event};
use css_core::ground_state::{minimize_gamma_star, MinimizerOptions};
use css_core::{field, make_grid, spectral, ComplexField2D, Grid2D};
use num_complex::Complex64;

use super::{ensure_dir, write_csv};
use crate::cli::EvolveArgs;
use crate::config::{InitKind, RunConfig};
use crate::error::{exit, LabError, Result};
use crate::snapshot::Snapshot;

pub fn evolve(args: &EvolveArgs, double_box: bool) -> Result<i32> {
    let base = RunConfig::from_path(&args.config)?;
    let cfg = if double_box { base.doubled() } else { base.clone() };
    let grid = make_grid(cfg.n, cfg.length).map_err(|e| LabError::config("grid.n", e.to_string()))?;
    let Some(psi0) = initial_data(&cfg, &base, &grid)? else {
        eprintln!("css-lab: ground-state initial data did not converge");
        return Ok(exit::ABORTED);
    };
    ensure_dir(&cfg.output_dir)?;

    let p = cfg.params;
    let mut io_error: Option<LabError> = None;
    let outcome = evolve_with(&psi0, &cfg.evolve_config(), |ev| {
        if let Event::Snapshot { step, t, field } = ev {
            if io_error.is_none() {
                let path = cfg.output_dir.join(format!("snapshot_{step:08}.cssf"));
                if let Err(e) = Snapshot::from_field(field, t, p.beta, p.gamma, p.eps).write(&path) {
                    io_error = Some(e);
                }
            }
        }
    })?;
    if let Some(e) = io_error {
        return Err(e);
    }

    let diag = cfg.output_dir.join("diagnostics.csv");
    let rows: Vec<String> = outcome.series.records.iter().map(|r| r.csv_row()).collect();
    write_csv(&diag, DiagnosticsSeries::CSV_HEADER, &rows)?;
    Snapshot::from_field(&outcome.field, outcome.t, p.beta, p.gamma, p.eps)
        .write(&cfg.output_dir.join("final.cssf"))?;

    let s = &outcome.series;
    println!("steps = {}", outcome.steps);
    println!("t = {}", outcome.t);
    println!("mass_drift = {:.3e}", s.max_drift(|r| r.mass));
    println!("energy_drift = {:.3e}", s.max_drift(|r| r.energy));
    println!("central_mass_fraction = {:.6}", s.min_central_fraction);
    Ok(match outcome.classification {
        Classification::Completed => {
            println!("classification = completed");
            exit::OK
        }
        Classification::Blowup {
            t_cross,
            t_star_estimate,
        } => {
            println!("classification = blowup");
            println!("t_cross = {t_cross}");
            match t_star_estimate {
                Some(t) => println!("t_star_estimate = {t}"),
                None => println!("t_star_estimate = none"),
            }
            exit::BLOWUP
        }
        Classification::Aborted => {
            println!("classification = aborted");
            exit::ABORTED
        }
    })
}

/// Builds the initial field; `None` when ground-state data did not converge.
fn initial_data(cfg: &RunConfig, base: &RunConfig, grid: &Grid2D) -> Result<Option<ComplexField2D>> {
    let field = match &cfg.init {
        InitKind::Gaussian { width } => field::gaussian(grid, (0.0, 0.0), *width, cfg.mass.unwrap_or(1.0)),
        InitKind::File { path } => {
            let snap = Snapshot::read(path)?;
            let f = snap
                .to_field()
                .map_err(|e| LabError::config("init.path", e.to_string()))?;
            let f = if f.grid() == grid {
                f
            } else if f.grid().n() == base.n && f.grid().length() == base.length && grid.n() == 2 * base.n {
                embed_centered(&f, grid)
            } else {
                return Err(LabError::config(
                    "init.path",
                    format!(
                        "snapshot grid n = {}, length = {} does not match grid.n = {}, grid.length = {}",
                        f.grid().n(),
                        f.grid().length(),
                        cfg.n,
                        cfg.length
                    ),
                ));
            };
            match cfg.mass {
                Some(m) => f.with_mass(m)?,
                None => f,
            }
        }
        InitKind::GroundState { dilation } => {
            let mass = cfg.mass.unwrap_or(1.0);
            let opts = MinimizerOptions {
                gauge: cfg.params.gauge,
                ..MinimizerOptions::default()
            };
            let m = minimize_gamma_star(cfg.params.beta * mass, grid, &opts)?;
            if !m.converged {
                return Ok(None);
            }
            spectral::dilate(&m.minimizer, *dilation).with_mass(mass)?
        }
    };
    Ok(Some(field))
}

/// Places a field in the middle of a grid with twice the side and the same spacing.
fn embed_centered(f: &ComplexField2D, big: &Grid2D) -> ComplexField2D {
    let n = f.grid().n();
    let off = n / 2;
    let nb = big.n();
    let mut values = vec![Complex64::default(); nb * nb];
    for i in 0..n {
        for j in 0..n {
            values[(i + off) * nb + j + off] = f.get(i, j);
        }
    }
    ComplexField2D::new(big, values).expect("shape matches the larger grid")
}
