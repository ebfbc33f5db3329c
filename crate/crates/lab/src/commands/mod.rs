//! One function per subcommand. Each returns the exit status on success;
//! errors carry their own status.

mod audit;
mod evolve;
mod gamma_star;
mod lambda;
mod scan;
mod standing_wave;

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

use css_core::ground_state::MinimizerOptions;

use crate::cli::{GaugeArg, MinimizerArgs};
use crate::error::{LabError, Result};

pub use audit::audit;
pub use evolve::evolve;
pub use gamma_star::gamma_star;
pub use lambda::lambda;
pub use scan::scan;
pub use standing_wave::standing_wave;

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))
}

/// Writes `header` and `rows` to `path`, replacing it.
fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut text = String::with_capacity(64 * (rows.len() + 1));
    text.push_str(header);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| LabError::io(path, e))
}

/// Appends one row, writing the header first when the file is new or empty.
fn append_csv(path: &Path, header: &str, row: &str) -> Result<()> {
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| LabError::io(path, e))?;
    let mut text = String::new();
    if fresh {
        text.push_str(header);
        text.push('\n');
    }
    text.push_str(row);
    text.push('\n');
    f.write_all(text.as_bytes()).map_err(|e| LabError::io(path, e))
}

fn minimizer_options(args: &MinimizerArgs, gauge: GaugeArg) -> Result<MinimizerOptions> {
    let opts = MinimizerOptions {
        tol_residual: args.tol,
        max_iters: args.max_iters,
        restarts: args.restarts,
        seed: args.seed,
        gauge: gauge.options(),
        ..MinimizerOptions::default()
    };
    opts.validate()?;
    Ok(opts)
}

fn require(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(LabError::Usage(what.to_string()))
    }
}

/// File-name friendly rendering of a parameter value.
fn tag(x: f64) -> String {
    format!("{x}").replace('-', "m")
}
