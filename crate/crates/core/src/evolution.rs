//! Time integration of `i d/dt psi = (1/2) dE/d conj(psi)` and of its
//! fourth-order regularization, with conservation diagnostics, blowup
//! detection, the variance identity and the standing-wave experiment.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::field::{self, ComplexField2D};
use crate::functionals::{
    breakdown_from, energy, energy_gradient_projected, energy_gradient_raw, lambda_beta, Covariant, EnergyBreakdown, PhysicsParams,
};
use crate::gauge::GaugeOptions;
use crate::grid::Grid2D;
use crate::ground_state::{minimize_gamma_star, MinimizerOptions, MinimizerResult};
use crate::spectral;

/// Steps below this abort the run.
pub const MIN_DT: f64 = 1e-12;
/// Records used by the growth test of the blowup criterion.
pub const GROWTH_WINDOW: usize = 10;
/// Records used by the blowup time extrapolation.
pub const EXTRAPOLATION_WINDOW: usize = 20;
/// `d^2/dt^2 int |x|^2 |psi|^2 = VIRIAL_COEFFICIENT * E` for this equation.
pub const VIRIAL_COEFFICIENT: f64 = 2.0;
/// Fraction of the mass that must stay in the central half box for the
/// variance to be trusted.
pub const CLEAN_CENTRAL_FRACTION: f64 = 0.99;
/// Standing waves must have `|E| <= ZERO_ENERGY_TOL * covariant kinetic energy`.
pub const ZERO_ENERGY_TOL: f64 = 1e-4;
/// A standing wave is static when `|lambda| <= STATIC_TOL * ||grad psi||^2 / ||psi||^2`.
pub const STATIC_TOL: f64 = 1e-3;
/// Relative distance to the threshold below which classification is refused.
pub const NEAR_THRESHOLD: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    Rk4Direct,
    /// Right-hand side passed through `(1 + eps Laplacian^2)^-1`.
    Rk4Regularized,
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum DtControl {
    #[default]
    Fixed,
    /// `dt = min(dt0, c / ||grad psi||_inf^2)`.
    GradientCfl(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveConfig {
    pub params: PhysicsParams,
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    pub dt_control: DtControl,
    /// Steps between snapshots; 0 disables them.
    pub snapshot_every: usize,
    /// Steps between diagnostic records.
    pub diagnostics_every: usize,
    /// Gradient growth factor that marks blowup.
    pub blowup_factor: f64,
}

impl EvolveConfig {
    pub fn new(params: PhysicsParams, dt: f64, t_final: f64) -> Self {
        EvolveConfig {
            params,
            dt,
            t_final,
            scheme: Scheme::Rk4Direct,
            dt_control: DtControl::Fixed,
            snapshot_every: 0,
            diagnostics_every: 10,
            blowup_factor: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(CoreError::param("dt", "must be positive"));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(CoreError::param("t_final", "must be nonnegative"));
        }
        if let DtControl::GradientCfl(c) = self.dt_control {
            if !(c > 0.0 && c.is_finite()) {
                return Err(CoreError::param("dt_control", "cfl constant must be positive"));
            }
        }
        if self.diagnostics_every == 0 {
            return Err(CoreError::param("diagnostics_every", "must be at least 1"));
        }
        if !(self.blowup_factor > 1.0 && self.blowup_factor.is_finite()) {
            return Err(CoreError::param("blowup_factor", "must exceed 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub covariant_kinetic: f64,
    pub quartic: f64,
    pub grad_norm: f64,
    pub variance: f64,
    /// `||psi(t) - psi0 exp(-i t lambda0 / 2)|| / ||psi0||` with `lambda0` the phase rate of the data.
    pub phase_error: f64,
    /// Instantaneous phase rate `Re <psi, H psi> / ||psi||^2`.
    pub lambda_est: f64,
}

impl DiagnosticRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{:.12e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.6e},{:.12e}",
            self.t,
            self.mass,
            self.energy,
            self.covariant_kinetic,
            self.quartic,
            self.grad_norm,
            self.variance,
            self.phase_error,
            self.lambda_est
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsSeries {
    pub records: Vec<DiagnosticRecord>,
    /// Smallest central-half-box mass fraction seen.
    pub min_central_fraction: f64,
}

impl Default for DiagnosticsSeries {
    fn default() -> Self {
        DiagnosticsSeries {
            records: Vec::new(),
            min_central_fraction: 1.0,
        }
    }
}

impl DiagnosticsSeries {
    pub const CSV_HEADER: &'static str =
        "t,mass,energy,cov_kinetic,quartic,grad_norm,variance,phase_error,lambda_est";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }

    pub fn is_clean(&self) -> bool {
        self.min_central_fraction >= CLEAN_CENTRAL_FRACTION
    }

    /// Largest relative drift `|q(t) - q(0)| / |q(0)|` of a recorded quantity.
    pub fn max_drift(&self, q: impl Fn(&DiagnosticRecord) -> f64) -> f64 {
        let Some(first) = self.records.first() else {
            return 0.0;
        };
        let q0 = q(first);
        self.records
            .iter()
            .map(|r| (q(r) - q0).abs() / q0.abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Classification {
    Completed,
    Blowup {
        /// Time at which the gradient norm first reached the blowup factor.
        t_cross: f64,
        /// Zero of the linear fit of `1 / grad_norm^2`; absent when the fit does not decrease.
        t_star_estimate: Option<f64>,
    },
    Aborted,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub classification: Classification,
    /// Final field, or the last finite one.
    pub field: ComplexField2D,
    pub series: DiagnosticsSeries,
    pub steps: usize,
    pub t: f64,
}

pub enum Event<'a> {
    Record(&'a DiagnosticRecord, &'a ComplexField2D),
    Snapshot { step: usize, t: f64, field: &'a ComplexField2D },
}

fn rhs_raw(grid: &Grid2D, psi: &[Complex64], params: &PhysicsParams, scheme: Scheme) -> Vec<Complex64> {
    let c = Covariant::new(grid, psi, params.beta, &params.gauge);
    let eps = if scheme == Scheme::Rk4Regularized { params.eps } else { 0.0 };
    let mut g = energy_gradient_projected(grid, psi, &c, params.beta, params.gamma, &params.gauge, eps);
    let factor = Complex64::new(0.0, -0.5);
    g.iter_mut().for_each(|v| *v *= factor);
    g
}

/// `d psi / dt`.
pub fn rhs(psi: &ComplexField2D, params: &PhysicsParams, scheme: Scheme) -> ComplexField2D {
    let grid = psi.grid();
    ComplexField2D::from_vec_unchecked(grid, rhs_raw(grid, psi.values(), params, scheme))
}

fn all_finite(v: &[Complex64]) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn step_raw(
    grid: &Grid2D,
    psi: &[Complex64],
    params: &PhysicsParams,
    dt: f64,
    scheme: Scheme,
) -> Result<Vec<Complex64>> {
    let stage = |base: &[Complex64], k: &[Complex64], h: f64| -> Vec<Complex64> {
        base.iter().zip(k).map(|(b, k)| b + h * k).collect()
    };
    let k1 = rhs_raw(grid, psi, params, scheme);
    if !all_finite(&k1) {
        return Err(CoreError::NonFinite);
    }
    let k2 = rhs_raw(grid, &stage(psi, &k1, 0.5 * dt), params, scheme);
    if !all_finite(&k2) {
        return Err(CoreError::NonFinite);
    }
    let k3 = rhs_raw(grid, &stage(psi, &k2, 0.5 * dt), params, scheme);
    if !all_finite(&k3) {
        return Err(CoreError::NonFinite);
    }
    let k4 = rhs_raw(grid, &stage(psi, &k3, dt), params, scheme);
    let out: Vec<Complex64> = (0..psi.len())
        .map(|i| psi[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    if !all_finite(&out) {
        return Err(CoreError::NonFinite);
    }
    Ok(out)
}

/// One classical fourth-order Runge-Kutta step.
pub fn step(psi: &ComplexField2D, params: &PhysicsParams, dt: f64, scheme: Scheme) -> Result<ComplexField2D> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(CoreError::param("dt", "must be positive"));
    }
    let grid = psi.grid();
    Ok(ComplexField2D::from_vec_unchecked(
        grid,
        step_raw(grid, psi.values(), params, dt, scheme)?,
    ))
}

/// `int |psi|^2 + eps int |Laplacian psi|^2`, conserved by the regularized flow.
pub fn regularized_mass(psi: &ComplexField2D, eps: f64) -> f64 {
    let lap = spectral::spectral_laplacian(psi);
    psi.mass() + eps * lap.mass()
}

fn sup_gradient(grid: &Grid2D, psi: &[Complex64]) -> f64 {
    let spec = spectral::fft_forward(grid, psi);
    let (gx, gy) = spectral::gradient_from_raw(grid, &spec);
    gx.iter()
        .zip(&gy)
        .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
        .fold(0.0, f64::max)
        .sqrt()
}

struct Recorder {
    psi0: Vec<Complex64>,
    mass0: f64,
    lambda0: f64,
}

impl Recorder {
    fn record(&self, grid: &Grid2D, psi: &[Complex64], t: f64, params: &PhysicsParams) -> (DiagnosticRecord, f64) {
        let c = Covariant::new(grid, psi, params.beta, &params.gauge);
        let e: EnergyBreakdown = breakdown_from(grid, psi, &c, params.beta, params.gamma);
        let g = energy_gradient_raw(grid, psi, &c, params.beta, params.gamma, &params.gauge);
        let w = grid.cell_area();
        let lambda_est = field::raw_inner(psi, &g).re * w / e.mass;
        let rot = Complex64::from_polar(1.0, -0.5 * self.lambda0 * t);
        let dev: f64 = psi
            .iter()
            .zip(&self.psi0)
            .map(|(p, p0)| (p - p0 * rot).norm_sqr())
            .sum::<f64>()
            * w;
        let field = ComplexField2D::from_vec_unchecked(grid, psi.to_vec());
        let rec = DiagnosticRecord {
            t,
            mass: e.mass,
            energy: e.energy,
            covariant_kinetic: e.covariant_kinetic,
            quartic: e.quartic,
            grad_norm: e.grad_norm,
            variance: e.variance,
            phase_error: (dev / self.mass0).sqrt(),
            lambda_est,
        };
        (rec, field.central_mass_fraction())
    }
}

/// Least-squares slope of `ys` against `xs`.
fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn growth_is_positive(records: &[DiagnosticRecord]) -> bool {
    let tail = &records[records.len().saturating_sub(GROWTH_WINDOW)..];
    if tail.len() < 3 {
        return false;
    }
    let ts: Vec<f64> = tail.iter().map(|r| r.t).collect();
    let gs: Vec<f64> = tail.iter().map(|r| r.grad_norm).collect();
    slope(&ts, &gs) > 0.0
}

/// Zero of the linear fit of `1 / grad_norm^2` over the last records.
pub fn extrapolate_blowup_time(records: &[DiagnosticRecord]) -> Option<f64> {
    let tail = &records[records.len().saturating_sub(EXTRAPOLATION_WINDOW)..];
    if tail.len() < 3 {
        return None;
    }
    let ts: Vec<f64> = tail.iter().map(|r| r.t).collect();
    let ys: Vec<f64> = tail.iter().map(|r| r.grad_norm.powi(-2)).collect();
    let b = slope(&ts, &ys);
    if !(b < 0.0) {
        return None;
    }
    let mt = ts.iter().sum::<f64>() / ts.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    Some(mt - my / b)
}

/// Runs to `t_final` or blowup. A blowup candidate is confirmed by rerunning
/// from the data with half the step.
pub fn evolve(psi0: &ComplexField2D, config: &EvolveConfig) -> Result<RunOutcome> {
    evolve_with(psi0, config, |_| {})
}

pub fn evolve_with(
    psi0: &ComplexField2D,
    config: &EvolveConfig,
    mut observer: impl FnMut(Event<'_>),
) -> Result<RunOutcome> {
    config.validate()?;
    psi0.ensure_finite()?;
    if psi0.mass() == 0.0 {
        return Err(CoreError::ZeroField);
    }
    run(psi0, config, true, &mut observer)
}

fn refine(config: &EvolveConfig) -> EvolveConfig {
    let mut c = *config;
    c.dt = 0.5 * config.dt;
    c.diagnostics_every = 2 * config.diagnostics_every;
    c.snapshot_every = 0;
    if let DtControl::GradientCfl(k) = config.dt_control {
        c.dt_control = DtControl::GradientCfl(0.5 * k);
    }
    c
}

/// Extra time granted to the refined run beyond the coarse crossing time.
fn crossing_allowance(t_cross: f64, dt: f64) -> f64 {
    (0.02 * t_cross).max(4.0 * dt)
}

fn run(
    psi0: &ComplexField2D,
    config: &EvolveConfig,
    confirm: bool,
    observer: &mut dyn FnMut(Event<'_>),
) -> Result<RunOutcome> {
    let grid = psi0.grid().clone();
    let params = &config.params;
    // the flow lives on the Nyquist-free modes, so the run starts from that part of the data
    let start = ComplexField2D::from_vec_unchecked(&grid, spectral::nyquist_free(&grid, psi0.values()));
    let psi0 = &start;
    let lambda0 = lambda_beta(psi0, params.beta, &params.gauge)?;
    let recorder = Recorder {
        psi0: psi0.values().to_vec(),
        mass0: psi0.mass(),
        lambda0,
    };
    let mut psi = psi0.values().to_vec();
    let mut series = DiagnosticsSeries::default();
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut dt_scale = 1.0;

    let push = |series: &mut DiagnosticsSeries,
                observer: &mut dyn FnMut(Event<'_>),
                psi: &[Complex64],
                t: f64| {
        let (rec, central) = recorder.record(&grid, psi, t, params);
        series.min_central_fraction = series.min_central_fraction.min(central);
        series.records.push(rec);
        let field = ComplexField2D::from_vec_unchecked(&grid, psi.to_vec());
        observer(Event::Record(&rec, &field));
    };
    push(&mut series, observer, &psi, 0.0);
    let threshold = config.blowup_factor * series.records[0].grad_norm;
    let mut recheck_above = threshold;

    let finish = |classification, psi: Vec<Complex64>, series, steps, t| {
        Ok(RunOutcome {
            classification,
            field: ComplexField2D::from_vec_unchecked(&grid, psi),
            series,
            steps,
            t,
        })
    };

    loop {
        let remaining = config.t_final - t;
        if remaining <= 1e-12 * config.t_final.max(1.0) {
            return finish(Classification::Completed, psi, series, steps, t);
        }
        let mut dt = config.dt * dt_scale;
        if let DtControl::GradientCfl(c) = config.dt_control {
            let g = sup_gradient(&grid, &psi);
            if g > 0.0 {
                dt = dt.min(dt_scale * c / (g * g));
            }
        }
        if dt < MIN_DT {
            return finish(Classification::Aborted, psi, series, steps, t);
        }
        let dt = dt.min(remaining);
        match step_raw(&grid, &psi, params, dt, config.scheme) {
            Ok(next) => {
                psi = next;
                t += dt;
                steps += 1;
            }
            Err(_) => {
                dt_scale *= 0.5;
                continue;
            }
        }
        if config.snapshot_every > 0 && steps % config.snapshot_every == 0 {
            let field = ComplexField2D::from_vec_unchecked(&grid, psi.clone());
            observer(Event::Snapshot { step: steps, t, field: &field });
        }
        let at_end = config.t_final - t <= 1e-12 * config.t_final.max(1.0);
        if steps % config.diagnostics_every == 0 || at_end {
            push(&mut series, observer, &psi, t);
            let last = series.records.last().expect("records are nonempty");
            if !last.grad_norm.is_finite() {
                return finish(Classification::Aborted, psi, series, steps, t);
            }
            if last.grad_norm >= recheck_above && growth_is_positive(&series.records) {
                let confirmed = !confirm || {
                    let mut refined = refine(config);
                    refined.t_final = t + crossing_allowance(t, config.dt * dt_scale);
                    let fine = run(psi0, &refined, false, &mut |_| {})?;
                    matches!(fine.classification, Classification::Blowup { .. })
                };
                if confirmed {
                    let t_star_estimate = extrapolate_blowup_time(&series.records);
                    return finish(
                        Classification::Blowup {
                            t_cross: t,
                            t_star_estimate,
                        },
                        psi,
                        series,
                        steps,
                        t,
                    );
                }
                recheck_above = 1.5 * last.grad_norm;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VirialReport {
    /// Largest `|V'' - c E| / max(c |E|, 1e-3 K)` over interior samples.
    pub max_rel_gap: f64,
    /// `(t, V'', c E)` per interior sample.
    pub samples: Vec<(f64, f64, f64)>,
    /// Mass left the central half box; the variance is not trustworthy.
    pub contaminated: bool,
}

/// Compares the second difference of the variance with `VIRIAL_COEFFICIENT * E`.
pub fn virial_check(series: &DiagnosticsSeries) -> Result<VirialReport> {
    let r = &series.records;
    if r.len() < 5 {
        return Err(CoreError::Precondition(format!(
            "virial check needs at least 5 samples, got {}",
            r.len()
        )));
    }
    let dt = r[1].t - r[0].t;
    for w in r.windows(2) {
        if ((w[1].t - w[0].t) - dt).abs() > 1e-6 * dt {
            return Err(CoreError::Precondition("variance samples are not uniformly spaced".into()));
        }
    }
    let mut samples = Vec::with_capacity(r.len() - 2);
    let mut max_rel_gap: f64 = 0.0;
    for i in 1..r.len() - 1 {
        let d2 = (r[i + 1].variance - 2.0 * r[i].variance + r[i - 1].variance) / (dt * dt);
        let target = VIRIAL_COEFFICIENT * r[i].energy;
        let scale = target.abs().max(1e-3 * r[i].covariant_kinetic);
        max_rel_gap = max_rel_gap.max((d2 - target).abs() / scale);
        samples.push((r[i].t, d2, target));
    }
    Ok(VirialReport {
        max_rel_gap,
        samples,
        contaminated: !series.is_clean(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StandingWaveReport {
    /// `max_t ||psi(t) - psi0 exp(-i t lambda / 2)|| / ||psi0||`
    pub phase_err: f64,
    /// Phase rate fitted from `arg <psi0, psi(t)>`.
    pub lambda_measured: f64,
    /// Phase rate formula on the data.
    pub lambda_formula: f64,
    pub energy: f64,
    /// `||grad psi0||^2 / ||psi0||^2`
    pub kinetic_scale: f64,
    pub is_static: bool,
}

/// Evolves zero-energy data and compares it with the rigid phase rotation.
pub fn standing_wave_error(
    psi0: &ComplexField2D,
    params: &PhysicsParams,
    t_final: f64,
    dt: f64,
) -> Result<StandingWaveReport> {
    let e = energy(psi0, params);
    if e.mass == 0.0 {
        return Err(CoreError::ZeroField);
    }
    if e.energy.abs() > ZERO_ENERGY_TOL * e.covariant_kinetic {
        return Err(CoreError::Precondition(format!(
            "standing wave data needs zero energy, measured E = {:e} against kinetic {:e}",
            e.energy, e.covariant_kinetic
        )));
    }
    let lambda_formula = lambda_beta(psi0, params.beta, &params.gauge)?;
    let kinetic_scale = e.plain_kinetic / e.mass;
    let mass0 = e.mass;
    let mut phase_err: f64 = 0.0;
    let mut times = Vec::new();
    let mut phases = Vec::new();
    let mut last_phase = 0.0;
    if t_final > 0.0 {
        let mut cfg = EvolveConfig::new(*params, dt, t_final);
        cfg.diagnostics_every = 1;
        cfg.blowup_factor = f64::MAX;
        evolve_with(psi0, &cfg, |ev| {
            if let Event::Record(rec, field) = ev {
                phase_err = phase_err.max(rec.phase_error);
                let overlap = field::raw_inner(psi0.values(), field.values()) * field.grid().cell_area();
                let mut ph = overlap.arg();
                while ph - last_phase > std::f64::consts::PI {
                    ph -= 2.0 * std::f64::consts::PI;
                }
                while ph - last_phase < -std::f64::consts::PI {
                    ph += 2.0 * std::f64::consts::PI;
                }
                last_phase = ph;
                times.push(rec.t);
                phases.push(ph);
            }
        })?;
    }
    let lambda_measured = if times.len() >= 2 {
        let stt: f64 = times.iter().map(|t| t * t).sum();
        let stp: f64 = times.iter().zip(&phases).map(|(t, p)| t * p).sum();
        -2.0 * stp / stt
    } else {
        // phase rate of the data itself: -2 Im <psi0, d psi0/dt> / ||psi0||^2
        let d = rhs(psi0, params, Scheme::Rk4Direct);
        -2.0 * (field::raw_inner(psi0.values(), d.values()) * psi0.grid().cell_area()).im / mass0
    };
    Ok(StandingWaveReport {
        phase_err,
        lambda_measured,
        lambda_formula,
        energy: e.energy,
        kinetic_scale,
        is_static: lambda_measured.abs() <= STATIC_TOL * kinetic_scale,
    })
}

/// Zero-energy data of mass `mass`: the unit-mass minimizer at `beta * mass`
/// scaled by `sqrt(mass)`, with the matching `gamma = gamma* / mass`.
pub fn zero_energy_data(
    minimizer: &MinimizerResult,
    beta: f64,
    mass: f64,
    gauge: GaugeOptions,
) -> (ComplexField2D, PhysicsParams) {
    let psi = minimizer.minimizer.scaled(mass.sqrt().into());
    let params = PhysicsParams {
        beta,
        gamma: minimizer.gamma_star / mass,
        eps: 0.0,
        gauge,
    };
    (psi, params)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Prediction {
    Global,
    BlowupPossible,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observation {
    Completed,
    Blowup,
    Undetermined,
}

impl Prediction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Prediction::Global => "global",
            Prediction::BlowupPossible => "blowup_possible",
        }
    }
}

impl Observation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Observation::Completed => "completed",
            Observation::Blowup => "blowup",
            Observation::Undetermined => "undetermined",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ClassifyBudget {
    pub t_final: f64,
    pub dt: f64,
    pub dt_control: DtControl,
    pub blowup_factor: f64,
    /// Plain kinetic energy per unit mass the blowup data is dilated to.
    pub blowup_kinetic: f64,
    pub minimizer: MinimizerOptions,
}

impl Default for ClassifyBudget {
    fn default() -> Self {
        ClassifyBudget {
            t_final: 5.0,
            dt: 1e-3,
            dt_control: DtControl::GradientCfl(0.2),
            blowup_factor: 10.0,
            blowup_kinetic: 0.5,
            minimizer: MinimizerOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ClassifyReport {
    pub beta: f64,
    pub gamma: f64,
    pub mass: f64,
    /// `gamma*(beta mass) / mass`
    pub threshold: f64,
    pub threshold_converged: bool,
    /// `|threshold / (2 pi beta) - 1|` when `beta * mass >= 2`, where the
    /// threshold sits on the self-dual line.
    pub self_dual_gap: Option<f64>,
    pub predicted: Prediction,
    pub observed: Observation,
    /// Energy of the evolved data.
    pub energy: f64,
    pub outcome: Option<Classification>,
}

impl ClassifyReport {
    pub fn agrees(&self) -> Option<bool> {
        match self.observed {
            Observation::Undetermined => None,
            Observation::Completed => Some(self.predicted == Prediction::Global),
            Observation::Blowup => Some(self.predicted == Prediction::BlowupPossible),
        }
    }
}

/// Computes the global-existence threshold and runs one trial evolution on
/// the corresponding side of it.
pub fn classify_global(
    beta: f64,
    gamma: f64,
    mass: f64,
    grid: &Grid2D,
    budget: &ClassifyBudget,
) -> Result<ClassifyReport> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(CoreError::param("mass", "must be positive"));
    }
    let min = minimize_gamma_star(beta * mass, grid, &budget.minimizer)?;
    classify_with_minimizer(beta, gamma, mass, &min, budget)
}

/// [`classify_global`] with the minimizer at `beta * mass` already computed,
/// so that scans can share it between tuples.
pub fn classify_with_minimizer(
    beta: f64,
    gamma: f64,
    mass: f64,
    min: &MinimizerResult,
    budget: &ClassifyBudget,
) -> Result<ClassifyReport> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(CoreError::param("mass", "must be positive"));
    }
    if (min.beta - beta * mass).abs() > 1e-12 * (1.0 + min.beta.abs()) {
        return Err(CoreError::Precondition(format!(
            "minimizer was computed at {} but beta * mass = {}",
            min.beta,
            beta * mass
        )));
    }
    let grid = min.minimizer.grid();
    let gauge = budget.minimizer.gauge;
    let params = PhysicsParams::new(beta, gamma, 0.0)?.with_gauge(gauge);
    let threshold = min.gamma_star / mass;
    let predicted = if gamma < threshold {
        Prediction::Global
    } else {
        Prediction::BlowupPossible
    };
    let mut report = ClassifyReport {
        beta,
        gamma,
        mass,
        threshold,
        threshold_converged: min.converged,
        self_dual_gap: (beta * mass >= 2.0).then(|| (threshold / (2.0 * PI * beta) - 1.0).abs()),
        predicted,
        observed: Observation::Undetermined,
        energy: f64::NAN,
        outcome: None,
    };
    if (gamma / threshold - 1.0).abs() < NEAR_THRESHOLD {
        return Ok(report);
    }
    let data = match predicted {
        Prediction::Global => field::gaussian(grid, (0.0, 0.0), 1.0, mass),
        Prediction::BlowupPossible => {
            let phi = &min.minimizer;
            let kin = energy(phi, &PhysicsParams { beta: 0.0, gamma: 0.0, eps: 0.0, gauge }).plain_kinetic;
            let s = (budget.blowup_kinetic / kin).sqrt().min(1.0);
            spectral::dilate(phi, s).with_mass(mass)?
        }
    };
    report.energy = energy(&data, &params).energy;
    let mut cfg = EvolveConfig::new(params, budget.dt, budget.t_final);
    cfg.dt_control = budget.dt_control;
    cfg.blowup_factor = budget.blowup_factor;
    let run = evolve(&data, &cfg)?;
    report.observed = match run.classification {
        Classification::Completed => Observation::Completed,
        Classification::Blowup { .. } => Observation::Blowup,
        Classification::Aborted => Observation::Undetermined,
    };
    report.outcome = Some(run.classification);
    Ok(report)
}
