//! Flat `section.key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Every key is validated before
//! anything runs; errors name the offending key.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use css_core::evolution::{DtControl, EvolveConfig, Scheme};
use css_core::functionals::PhysicsParams;
use css_core::gauge::GaugeOptions;

use crate::error::{LabError, Result};

/// Every accepted key and whether it must be present.
const KEYS: &[(&str, bool)] = &[
    ("grid.n", true),
    ("grid.length", true),
    ("physics.beta", true),
    ("physics.gamma", true),
    ("physics.eps", false),
    ("physics.gauge", false),
    ("time.dt", true),
    ("time.t_final", true),
    ("time.scheme", false),
    ("time.dt_control", false),
    ("init.kind", true),
    ("init.mass", false),
    ("init.path", false),
    ("init.width", false),
    ("init.dilation", false),
    ("output.dir", false),
    ("output.snapshot_every", false),
    ("output.diagnostics_every", false),
    ("blowup.factor", false),
];

#[derive(Clone, Debug, PartialEq)]
pub enum InitKind {
    /// Centred Gaussian `exp(-|x|^2 / width^2)`.
    Gaussian { width: f64 },
    /// A snapshot file.
    File { path: PathBuf },
    /// The unit-mass minimizer at `beta * mass`, dilated by `dilation`.
    GroundState { dilation: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub length: f64,
    pub params: PhysicsParams,
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    pub dt_control: DtControl,
    pub init: InitKind,
    /// Mass of the initial data; `None` keeps the mass of a snapshot file.
    pub mass: Option<f64>,
    pub output_dir: PathBuf,
    pub snapshot_every: usize,
    pub diagnostics_every: usize,
    pub blowup_factor: f64,
}

/// Raw `key -> value` pairs, checked against the accepted keys.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(LabError::config(
                line.to_string(),
                format!("line {} is not `section.key = value`", lineno + 1),
            ));
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(LabError::config(key, "unknown key"));
        }
        if value.is_empty() {
            return Err(LabError::config(key, "empty value"));
        }
        if out.insert(key.to_string(), value.to_string()).is_some() {
            return Err(LabError::config(key, "given more than once"));
        }
    }
    for (key, required) in KEYS {
        if *required && !out.contains_key(*key) {
            return Err(LabError::config(*key, "missing"));
        }
    }
    Ok(out)
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) if i == 0 || line[..i].ends_with(char::is_whitespace) => &line[..i],
        _ => line,
    }
}

struct Pairs(BTreeMap<String, String>);

impl Pairs {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn f64_or(&self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.raw(key) {
            Some(v) => {
                let x: f64 = v
                    .parse()
                    .map_err(|_| LabError::config(key, format!("`{v}` is not a number")))?;
                if !x.is_finite() {
                    return Err(LabError::config(key, format!("`{v}` is not finite")));
                }
                Ok(x)
            }
            None => default.ok_or_else(|| LabError::config(key, "missing")),
        }
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.raw(key) {
            Some(v) => v
                .parse()
                .map_err(|_| LabError::config(key, format!("`{v}` is not a nonnegative integer"))),
            None => Ok(default),
        }
    }
}

fn require(ok: bool, key: &str, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(LabError::config(key, reason))
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        let mut cfg = RunConfig::from_text(&text)?;
        if let InitKind::File { path: p } = &mut cfg.init {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let p = Pairs(parse_pairs(text)?);

        let n = p.usize_or("grid.n", 0)?;
        require(n >= 4 && n % 2 == 0, "grid.n", "must be an even integer >= 4")?;
        let length = p.f64_or("grid.length", None)?;
        require(length > 0.0, "grid.length", "must be positive")?;

        let beta = p.f64_or("physics.beta", None)?;
        require(beta >= 0.0, "physics.beta", "must be >= 0")?;
        let gamma = p.f64_or("physics.gamma", None)?;
        let eps = p.f64_or("physics.eps", Some(0.0))?;
        require(eps >= 0.0, "physics.eps", "must be >= 0")?;
        let gauge = match p.raw("physics.gauge").unwrap_or("periodic") {
            "periodic" => GaugeOptions::periodic(),
            "free_space" => GaugeOptions::free_space(),
            other => {
                return Err(LabError::config(
                    "physics.gauge",
                    format!("`{other}` is not periodic or free_space"),
                ))
            }
        };

        let dt = p.f64_or("time.dt", None)?;
        require(dt > 0.0, "time.dt", "must be positive")?;
        let t_final = p.f64_or("time.t_final", None)?;
        require(t_final > 0.0, "time.t_final", "must be positive")?;
        let scheme = match p.raw("time.scheme").unwrap_or("rk4_direct") {
            "rk4_direct" => Scheme::Rk4Direct,
            "rk4_regularized" => Scheme::Rk4Regularized,
            other => {
                return Err(LabError::config(
                    "time.scheme",
                    format!("`{other}` is not rk4_direct or rk4_regularized"),
                ))
            }
        };
        let dt_control = parse_dt_control(p.raw("time.dt_control").unwrap_or("fixed"))?;

        let mass = match p.raw("init.mass") {
            Some(_) => {
                let m = p.f64_or("init.mass", None)?;
                require(m > 0.0, "init.mass", "must be positive")?;
                Some(m)
            }
            None => None,
        };
        let init = match p.raw("init.kind").unwrap_or_default() {
            "gaussian" => {
                let width = p.f64_or("init.width", Some(1.0))?;
                require(width > 0.0, "init.width", "must be positive")?;
                InitKind::Gaussian { width }
            }
            "file" => InitKind::File {
                path: PathBuf::from(
                    p.raw("init.path")
                        .ok_or_else(|| LabError::config("init.path", "required when init.kind = file"))?,
                ),
            },
            "ground_state" => {
                let dilation = p.f64_or("init.dilation", Some(1.0))?;
                require(dilation > 0.0, "init.dilation", "must be positive")?;
                InitKind::GroundState { dilation }
            }
            other => {
                return Err(LabError::config(
                    "init.kind",
                    format!("`{other}` is not gaussian, file or ground_state"),
                ))
            }
        };
        let mass = match init {
            InitKind::File { .. } => mass,
            _ => Some(mass.unwrap_or(1.0)),
        };

        let output_dir = PathBuf::from(p.raw("output.dir").unwrap_or("out"));
        let snapshot_every = p.usize_or("output.snapshot_every", 0)?;
        let diagnostics_every = p.usize_or("output.diagnostics_every", 10)?;
        require(diagnostics_every >= 1, "output.diagnostics_every", "must be at least 1")?;
        let blowup_factor = p.f64_or("blowup.factor", Some(10.0))?;
        require(blowup_factor > 1.0, "blowup.factor", "must exceed 1")?;

        let params = PhysicsParams::new(beta, gamma, eps)
            .map_err(|e| LabError::config("physics", e.to_string()))?
            .with_gauge(gauge);
        let cfg = RunConfig {
            n,
            length,
            params,
            dt,
            t_final,
            scheme,
            dt_control,
            init,
            mass,
            output_dir,
            snapshot_every,
            diagnostics_every,
            blowup_factor,
        };
        cfg.evolve_config()
            .validate()
            .map_err(|e| LabError::config("time", e.to_string()))?;
        Ok(cfg)
    }

    pub fn evolve_config(&self) -> EvolveConfig {
        let mut c = EvolveConfig::new(self.params, self.dt, self.t_final);
        c.scheme = self.scheme;
        c.dt_control = self.dt_control;
        c.snapshot_every = self.snapshot_every;
        c.diagnostics_every = self.diagnostics_every;
        c.blowup_factor = self.blowup_factor;
        c
    }

    /// The same run on a box twice as large at the same spacing.
    pub fn doubled(&self) -> Self {
        RunConfig {
            n: 2 * self.n,
            length: 2.0 * self.length,
            ..self.clone()
        }
    }
}

/// `fixed` or `gradient_cfl(c)`.
fn parse_dt_control(v: &str) -> Result<DtControl> {
    const KEY: &str = "time.dt_control";
    if v == "fixed" {
        return Ok(DtControl::Fixed);
    }
    let inner = v
        .strip_prefix("gradient_cfl(")
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| LabError::config(KEY, format!("`{v}` is not fixed or gradient_cfl(c)")))?;
    let c: f64 = inner
        .trim()
        .parse()
        .map_err(|_| LabError::config(KEY, format!("`{inner}` is not a number")))?;
    require(c > 0.0 && c.is_finite(), KEY, "cfl constant must be positive")?;
    Ok(DtControl::GradientCfl(c))
}
