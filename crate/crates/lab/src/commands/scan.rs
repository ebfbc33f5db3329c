use css_core::evolution::{classify_with_minimizer, ClassifyBudget, DtControl, Observation, Prediction};
use css_core::ground_state::{minimize_gamma_star, MinimizerOptions, MinimizerResult};
use rayon::prelude::*;

use super::{ensure_dir, require, write_csv};
use crate::cli::{GammaMode, ScanArgs};
use crate::error::{exit, Result};

pub const CSV_HEADER: &str = "beta,gamma,mass,threshold,predicted,observed,agree";

/// One row of the scan table.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub beta: f64,
    pub gamma: f64,
    pub mass: f64,
    pub threshold: f64,
    pub predicted: Option<Prediction>,
    pub observed: Observation,
}

impl ScanRow {
    pub fn agrees(&self) -> Option<bool> {
        let p = self.predicted?;
        match self.observed {
            Observation::Undetermined => None,
            Observation::Completed => Some(p == Prediction::Global),
            Observation::Blowup => Some(p == Prediction::BlowupPossible),
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.10e},{},{:.10e},{},{},{}",
            self.beta,
            self.gamma,
            self.mass,
            self.threshold,
            self.predicted.map_or("undetermined", |p| p.as_str()),
            self.observed.as_str(),
            match self.agrees() {
                Some(true) => "true",
                Some(false) => "false",
                None => "na",
            }
        )
    }
}

pub fn scan(args: &ScanArgs, double_box: bool) -> Result<i32> {
    let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
    require(finite(&args.beta) && args.beta.iter().all(|&b| b >= 0.0), "--beta values must be finite and >= 0")?;
    require(finite(&args.gamma), "--gamma values must be finite")?;
    require(finite(&args.mass) && args.mass.iter().all(|&m| m > 0.0), "--mass values must be positive")?;
    require(args.t_final > 0.0 && args.dt > 0.0, "--t-final and --dt must be positive")?;
    require(args.cfl > 0.0, "--cfl must be positive")?;
    require(args.blowup_factor > 1.0, "--blowup-factor must exceed 1")?;
    let grid = args.grid.grid(double_box)?;
    ensure_dir(&args.out)?;

    let budget = ClassifyBudget {
        t_final: args.t_final,
        dt: args.dt,
        dt_control: DtControl::GradientCfl(args.cfl),
        blowup_factor: args.blowup_factor,
        minimizer: MinimizerOptions {
            gauge: args.gauge.options(),
            ..MinimizerOptions::default()
        },
        ..ClassifyBudget::default()
    };

    let mut tuples = Vec::new();
    for &b in &args.beta {
        for &g in &args.gamma {
            for &m in &args.mass {
                tuples.push((b, g, m));
            }
        }
    }

    // one minimizer per distinct beta * mass, shared by the tuples
    let mut thetas: Vec<f64> = tuples.iter().map(|&(b, _, m)| b * m).collect();
    thetas.sort_by(f64::total_cmp);
    thetas.dedup();
    let minimizers: Vec<Option<MinimizerResult>> = thetas
        .par_iter()
        .map(|&th| minimize_gamma_star(th, &grid, &budget.minimizer).ok())
        .collect();
    let lookup = |theta: f64| {
        let i = thetas
            .binary_search_by(|x| x.total_cmp(&theta))
            .expect("every theta was minimized");
        minimizers[i].as_ref()
    };

    let rows: Vec<ScanRow> = tuples
        .par_iter()
        .map(|&(beta, g, mass)| {
            let Some(min) = lookup(beta * mass) else {
                return undetermined(beta, g, mass, f64::NAN);
            };
            let threshold = min.gamma_star / mass;
            let gamma = match args.gamma_mode {
                GammaMode::Absolute => g,
                GammaMode::Threshold => g * threshold,
            };
            if !min.converged {
                return undetermined(beta, gamma, mass, threshold);
            }
            match classify_with_minimizer(beta, gamma, mass, min, &budget) {
                Ok(r) => ScanRow {
                    beta,
                    gamma,
                    mass,
                    threshold: r.threshold,
                    predicted: Some(r.predicted),
                    observed: r.observed,
                },
                Err(_) => undetermined(beta, gamma, mass, threshold),
            }
        })
        .collect();

    let lines: Vec<String> = rows.iter().map(ScanRow::csv_row).collect();
    write_csv(&args.out.join("scan.csv"), CSV_HEADER, &lines)?;
    println!("{CSV_HEADER}");
    for l in &lines {
        println!("{l}");
    }
    let disagreements = rows.iter().filter(|r| r.agrees() == Some(false)).count();
    let undetermined = rows.iter().filter(|r| r.agrees().is_none()).count();
    println!("rows = {}, disagreements = {disagreements}, undetermined = {undetermined}", rows.len());
    Ok(if disagreements == 0 { exit::OK } else { exit::DISAGREE })
}

fn undetermined(beta: f64, gamma: f64, mass: f64, threshold: f64) -> ScanRow {
    ScanRow {
        beta,
        gamma,
        mass,
        threshold,
        predicted: None,
        observed: Observation::Undetermined,
    }
}
